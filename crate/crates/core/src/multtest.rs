//! Closed testing over all non-empty subsets of the hypothesis family.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimands::EstimateSet;
use crate::intersection::{minp_test, sw_test, HypothesisSpec, McConfig, MinpMode, TestResult};
use crate::rng::derive_seed;

pub const MAX_HYPOTHESES: usize = 20;

/// Intersection test used for every subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedMethod {
    Sw,
    /// Min-p with the joint normal null.
    Minp,
    MinpBonferroni,
}

/// Bitmask of a subset of `0..J`, bit `j` set when hypothesis `j` is in.
pub type Subset = u32;

pub fn subset_members(mask: Subset) -> Vec<usize> {
    (0..32).filter(|j| mask & (1 << j) != 0).collect()
}

/// Canonical key with 1-based indices: `"1"`, `"1,2"`, `"1,2,3"`.
pub fn subset_key(mask: Subset) -> String {
    subset_members(mask)
        .iter()
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_subset_key(key: &str) -> Result<Subset> {
    let mut mask = 0;
    for part in key.split(',') {
        let j: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad subset key {key:?}")))?;
        if j == 0 || j > MAX_HYPOTHESES {
            return Err(Error::Parse(format!("bad subset key {key:?}")));
        }
        mask |= 1 << (j - 1);
    }
    Ok(mask)
}

/// Non-empty subsets of `0..j`, ordered by size then lexicographically.
pub fn all_subsets(j: usize) -> Vec<Subset> {
    let mut masks: Vec<Subset> = (1..(1u32 << j)).collect();
    masks.sort_by_key(|&m| (m.count_ones(), subset_members(m)));
    masks
}

/// Restriction of `global_w` to `subset`, renormalized to sum to one.
pub fn subset_weights(global_w: &[f64], subset: &[usize]) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if global_w.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidHypothesis("weights must be positive".into()));
    }
    let mut picked = Vec::with_capacity(subset.len());
    for &j in subset {
        picked.push(*global_w.get(j).ok_or(Error::DimensionMismatch {
            expected: global_w.len(),
            got: j + 1,
        })?);
    }
    let total: f64 = picked.iter().sum();
    Ok(picked.into_iter().map(|w| w / total).collect())
}

/// Runs the chosen intersection test on the sub-family `mask`.
pub fn subset_test(
    est: &EstimateSet,
    deltas: &[f64],
    global_w: &[f64],
    alpha: f64,
    mc: &McConfig,
    method: ClosedMethod,
    mask: Subset,
) -> Result<TestResult> {
    let members = subset_members(mask);
    let sub = est.subset(&members)?;
    let sub_deltas = members.iter().map(|&j| deltas[j]).collect();
    let spec = HypothesisSpec::new(sub_deltas, subset_weights(global_w, &members)?, alpha)?;
    let mc = mc.with_seed(derive_seed(mc.seed, &[mask as u64]));
    match method {
        ClosedMethod::Sw => sw_test(&sub, &spec, &mc),
        ClosedMethod::Minp => minp_test(&sub, &spec, &mc, MinpMode::Joint),
        ClosedMethod::MinpBonferroni => minp_test(&sub, &spec, &mc, MinpMode::Bonferroni),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedTestReport {
    /// Keyed by canonical 1-based subset key.
    pub subset_results: BTreeMap<String, TestResult>,
    pub adjusted_p: Vec<f64>,
    pub rejected: Vec<bool>,
    pub consonant: bool,
    pub alpha: f64,
    pub method: ClosedMethod,
}

impl ClosedTestReport {
    pub fn dim(&self) -> usize {
        self.adjusted_p.len()
    }

    pub fn result(&self, members: &[usize]) -> Option<&TestResult> {
        let mask = members.iter().fold(0, |m, &j| m | (1 << j));
        self.subset_results.get(&subset_key(mask))
    }

    pub fn p_value(&self, members: &[usize]) -> Option<f64> {
        self.result(members).map(|r| r.p_value)
    }

    /// True when every hypothesis in `members` is rejected.
    pub fn rejects_all(&self, members: &[usize]) -> bool {
        members.iter().all(|&j| self.rejected[j])
    }

    /// Plain-text report: adjusted p-values, then raw intersection p-values
    /// grouped by intersection size.
    pub fn to_table(&self, names: &[String], estimates: &[f64]) -> String {
        let mut out = String::new();
        let width = names.iter().map(|s| s.len()).max().unwrap_or(0).max(6);
        let _ = writeln!(out, "-- Adjusted p-values --");
        let _ = writeln!(out, "{:width$} {:>12} {:>12}", "", "Estimate", "adj.p");
        for j in 0..self.dim() {
            let _ = writeln!(
                out,
                "{:width$} {:>12.8} {:>12.8}",
                names[j], estimates[j], self.adjusted_p[j]
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "-- Raw p-values for intersection hypotheses --");
        for k in 1..=self.dim() {
            let _ = writeln!(out, "{k}-way intersections:");
            for mask in all_subsets(self.dim()) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let label = subset_members(mask)
                    .iter()
                    .map(|&j| names[j].as_str())
                    .collect::<Vec<_>>()
                    .join(", ");
                let p = self.subset_results[&subset_key(mask)].p_value;
                let _ = writeln!(out, "  {:<40} p = {:.4}", format!("{{{label}}}"), p);
            }
            if k < self.dim() {
                let _ = writeln!(out);
            }
        }
        out
    }
}

/// Adjusted p-values, rejections and the consonance flag from raw subset
/// p-values indexed by mask.
pub fn assemble_report(
    j: usize,
    results: Vec<(Subset, TestResult)>,
    alpha: f64,
    method: ClosedMethod,
) -> ClosedTestReport {
    let mut adjusted_p = vec![0.0f64; j];
    for (mask, r) in &results {
        for k in subset_members(*mask) {
            adjusted_p[k] = adjusted_p[k].max(r.p_value);
        }
    }
    let rejected: Vec<bool> = adjusted_p.iter().map(|&p| p <= alpha).collect();
    let consonant = results
        .iter()
        .filter(|(_, r)| r.p_value <= alpha)
        .all(|(mask, _)| subset_members(*mask).iter().any(|&k| rejected[k]));
    ClosedTestReport {
        subset_results: results
            .into_iter()
            .map(|(m, r)| (subset_key(m), r))
            .collect(),
        adjusted_p,
        rejected,
        consonant,
        alpha,
        method,
    }
}

/// Closed testing: every non-empty subset is tested with subset-renormalized
/// weights and a seed derived from the master seed and the subset mask.
pub fn closed_testing(
    est: &EstimateSet,
    deltas: &[f64],
    global_w: &[f64],
    alpha: f64,
    mc: &McConfig,
    method: ClosedMethod,
) -> Result<ClosedTestReport> {
    let j = est.dim();
    if j > MAX_HYPOTHESES {
        return Err(Error::TooManyHypotheses(j));
    }
    for len in [deltas.len(), global_w.len()] {
        if len != j {
            return Err(Error::DimensionMismatch {
                expected: j,
                got: len,
            });
        }
    }
    let results = all_subsets(j)
        .into_iter()
        .map(|mask| {
            Ok((
                mask,
                subset_test(est, deltas, global_w, alpha, mc, method, mask)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(j, results, alpha, method))
}

/// True when no hypothesis in `true_nulls` (0-based) was rejected.
pub fn fwer_check(report: &ClosedTestReport, true_nulls: &[usize]) -> bool {
    true_nulls.iter().all(|&j| !report.rejected[j])
}
