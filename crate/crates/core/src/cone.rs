//! Polyhedral cones `{u : a_j . u <= 0 for all j}` and projection onto them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{correlation, sym_sqrt, SymMatrix};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Intersection of half-spaces `K_j = {u : a_j . u <= 0}` through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    dim: usize,
    /// Row-major, one normal per row.
    normals: Vec<f64>,
    norms_sq: Vec<f64>,
}

impl ConeSpec {
    pub fn new(normals: &[Vec<f64>]) -> Result<Self> {
        let dim = normals.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let mut flat = Vec::with_capacity(dim * normals.len());
        let mut norms_sq = Vec::with_capacity(normals.len());
        for (j, a) in normals.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.len(),
                });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteInput);
            }
            let nsq = norm_sq(a);
            if nsq <= 0.0 {
                return Err(Error::ZeroNormal(j));
            }
            flat.extend_from_slice(a);
            norms_sq.push(nsq);
        }
        Ok(Self {
            dim,
            normals: flat,
            norms_sq,
        })
    }

    /// Cone whose normals are the rows of the symmetric square root of `cov`.
    pub fn from_covariance(cov: &SymMatrix) -> Result<Self> {
        Self::new(&sym_sqrt(cov)?.to_rows())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of half-spaces.
    pub fn len(&self) -> usize {
        self.norms_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms_sq.is_empty()
    }

    pub fn normal(&self, j: usize) -> &[f64] {
        &self.normals[j * self.dim..(j + 1) * self.dim]
    }

    /// Largest `a_j . x / |a_j|`; non-positive iff `x` is in the cone.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        (0..self.len())
            .map(|j| dot(self.normal(j), x) / self.norms_sq[j].sqrt())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    fn project_in_place(&self, j: usize, x: &mut [f64]) {
        let a = self.normal(j);
        let t = dot(a, x);
        if t > 0.0 {
            let c = t / self.norms_sq[j];
            for (xi, ai) in x.iter_mut().zip(a) {
                *xi -= c * ai;
            }
        }
    }
}

/// Euclidean projection of `x` onto `{u : normal . u <= 0}`.
pub fn project_halfspace(x: &[f64], normal: &[f64]) -> Result<Vec<f64>> {
    if x.len() != normal.len() {
        return Err(Error::DimensionMismatch {
            expected: normal.len(),
            got: x.len(),
        });
    }
    let nsq = norm_sq(normal);
    if nsq <= 0.0 {
        return Err(Error::ZeroNormal(0));
    }
    let t = dot(normal, x);
    let mut out = x.to_vec();
    if t > 0.0 {
        let c = t / nsq;
        for (o, a) in out.iter_mut().zip(normal) {
            *o -= c * a;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraConfig {
    /// Stop once a full cycle moves the point by less than
    /// `tol * max(1, |u_hat|)`.
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for DykstraConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_cycles: 10_000,
        }
    }
}

/// Iterate of Dykstra's cyclic projection algorithm.
///
/// Invariant: `point == u_hat + sum_j increments[j]`. In cycle `n`, step `j`
/// projects `u_hat + sum_{l<j} D_{n,l} + sum_{l>j} D_{n-1,l}` (the current
/// point with the previous increment for `K_j` removed) onto `K_j`, and the
/// new increment `D_{n,j}` is the projection minus that argument.
#[derive(Debug, Clone)]
pub struct DykstraState<'a> {
    cone: &'a ConeSpec,
    point: Vec<f64>,
    increments: Vec<f64>,
    scratch: Vec<f64>,
    arg: Vec<f64>,
    cycles: usize,
    last_displacement: f64,
}

impl<'a> DykstraState<'a> {
    pub fn new(u_hat: &[f64], cone: &'a ConeSpec) -> Result<Self> {
        if u_hat.len() != cone.dim() {
            return Err(Error::DimensionMismatch {
                expected: cone.dim(),
                got: u_hat.len(),
            });
        }
        Ok(Self {
            cone,
            point: u_hat.to_vec(),
            increments: vec![0.0; cone.len() * cone.dim()],
            scratch: vec![0.0; cone.dim()],
            arg: vec![0.0; cone.dim()],
            cycles: 0,
            last_displacement: f64::INFINITY,
        })
    }

    /// Runs one pass over all half-spaces and returns the largest single-step
    /// displacement of the point.
    pub fn cycle(&mut self) -> f64 {
        let d = self.cone.dim();
        let mut max_disp: f64 = 0.0;
        for j in 0..self.cone.len() {
            let inc = &mut self.increments[j * d..(j + 1) * d];
            // argument = point - D_{n-1,j}
            for k in 0..d {
                self.arg[k] = self.point[k] - inc[k];
                self.scratch[k] = self.arg[k];
            }
            self.cone.project_in_place(j, &mut self.scratch);
            let mut disp_sq = 0.0;
            for k in 0..d {
                inc[k] = self.scratch[k] - self.arg[k];
                let step = self.scratch[k] - self.point[k];
                disp_sq += step * step;
                self.point[k] = self.scratch[k];
            }
            max_disp = max_disp.max(disp_sq.sqrt());
        }
        self.cycles += 1;
        self.last_displacement = max_disp;
        max_disp
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn increment(&self, j: usize) -> &[f64] {
        let d = self.cone.dim();
        &self.increments[j * d..(j + 1) * d]
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn last_displacement(&self) -> f64 {
        self.last_displacement
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    /// `|u_hat - point|^2`
    pub sq_distance: f64,
    pub cycles: usize,
}

/// Exact projection onto the face picked out by Dykstra's iterate, accepted
/// only when it satisfies the optimality conditions: feasible, and `u_hat -
/// x` a nonnegative combination of the active normals.
fn polish(u_hat: &[f64], cone: &ConeSpec, point: &[f64], scale: f64) -> Option<Vec<f64>> {
    let d = cone.dim();
    let slack_tol = 1e-6 * scale;
    let mut active: Vec<usize> = (0..cone.len())
        .filter(|&j| dot(cone.normal(j), point) >= -slack_tol * cone.norms_sq[j].sqrt())
        .collect();
    for _ in 0..=2 * cone.len() {
        let k = active.len();
        let mut x = u_hat.to_vec();
        let mut lambda = vec![0.0; k];
        if k > 0 {
            let gram = DMatrix::from_fn(k, k, |a, b| {
                dot(cone.normal(active[a]), cone.normal(active[b]))
            });
            let rhs = DVector::from_iterator(k, active.iter().map(|&j| dot(cone.normal(j), u_hat)));
            let sol = gram.cholesky()?.solve(&rhs);
            lambda.copy_from_slice(sol.as_slice());
            for (a, &j) in active.iter().enumerate() {
                let nj = cone.normal(j);
                for c in 0..d {
                    x[c] -= lambda[a] * nj[c];
                }
            }
        }
        let lam_tol = 1e-12 * scale;
        if let Some((a, _)) = lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l < -lam_tol)
            .min_by(|p, q| p.1.total_cmp(q.1))
        {
            active.remove(a);
            continue;
        }
        let violated = (0..cone.len())
            .filter(|j| !active.contains(j))
            .map(|j| (j, dot(cone.normal(j), &x) / cone.norms_sq[j].sqrt()))
            .filter(|&(_, v)| v > 1e-12 * scale)
            .max_by(|p, q| p.1.total_cmp(&q.1));
        match violated {
            Some((j, _)) => active.push(j),
            None => return Some(x),
        }
    }
    None
}

/// Nearest point of `cone` to `u_hat` by Dykstra's algorithm.
///
/// Once a cycle moves the point by less than `sqrt(tol)` (relative), and
/// again at every power-of-two cycle count from 16, the face containing the
/// iterate is solved exactly and kept if it passes the optimality check;
/// otherwise iteration continues to `tol`.
pub fn dykstra_project(u_hat: &[f64], cone: &ConeSpec, cfg: DykstraConfig) -> Result<Projection> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidConfig(
            "Dykstra tolerance must be positive".into(),
        ));
    }
    if u_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let mut state = DykstraState::new(u_hat, cone)?;
    let scale = norm_sq(u_hat).sqrt().max(1.0);
    let threshold = cfg.tol * scale;
    let coarse = cfg.tol.sqrt().min(1e-4) * scale;
    let mut tried_early = false;
    loop {
        let disp = state.cycle();
        if disp < threshold {
            break;
        }
        let early = !tried_early && disp < coarse;
        let checkpoint = state.cycles() >= 16 && state.cycles().is_power_of_two();
        if early || checkpoint {
            tried_early |= early;
            if let Some(x) = polish(u_hat, cone, state.point(), scale) {
                state.point = x;
                break;
            }
        }
        if state.cycles() >= cfg.max_cycles {
            return Err(Error::NoConvergence {
                cycles: state.cycles(),
                displacement: disp,
            });
        }
    }
    if let Some(x) = polish(u_hat, cone, state.point(), scale) {
        state.point = x;
    }
    let sq_distance = u_hat
        .iter()
        .zip(state.point())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(Projection {
        cycles: state.cycles(),
        point: state.point,
        sq_distance,
    })
}

/// Which piece of the plane a two-dimensional point falls in, by where its
/// projection onto the cone lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Inside the cone; the statistic is zero.
    Interior,
    /// Projects onto the relative interior of the boundary ray of `K_1`.
    Facet1,
    /// Projects onto the relative interior of the boundary ray of `K_2`.
    Facet2,
    /// Projects onto the origin (the polar cone).
    Polar,
}

/// Geometry of the two-hypothesis cone `{sqrt(sigma) u <= 0}` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoHGeometry {
    pub rho: f64,
    /// Slope of the boundary ray of `K_1`; `None` when vertical.
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub region: Region,
    /// Unit boundary rays.
    pub rays: [[f64; 2]; 2],
    /// Unit normals.
    pub normals: [[f64; 2]; 2],
}

impl TwoHGeometry {
    /// Squared distance from `u` to the cone, by region. `u` must be the
    /// point this geometry was classified at.
    pub fn sq_distance(&self, u: [f64; 2]) -> f64 {
        match self.region {
            Region::Interior => 0.0,
            Region::Facet1 => dot(&self.normals[0], &u).powi(2),
            Region::Facet2 => dot(&self.normals[1], &u).powi(2),
            Region::Polar => norm_sq(&u),
        }
    }
}

fn slope(r: [f64; 2]) -> Option<f64> {
    (r[0].abs() > 1e-300).then(|| r[1] / r[0])
}

pub fn two_h_geometry(u_hat: [f64; 2], sigma: &SymMatrix) -> Result<TwoHGeometry> {
    if sigma.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: sigma.dim(),
        });
    }
    let rho = correlation(sigma)?.get(0, 1);
    if rho.abs() >= 1.0 - 1e-10 {
        return Err(Error::DegenerateCorrelation(rho));
    }
    let root = sym_sqrt(sigma)?;
    let unit = |v: [f64; 2]| {
        let n = norm_sq(&v).sqrt();
        [v[0] / n, v[1] / n]
    };
    let a1 = unit([root.get(0, 0), root.get(0, 1)]);
    let a2 = unit([root.get(1, 0), root.get(1, 1)]);
    // boundary ray of K_j: orthogonal to a_j, on the feasible side of the other
    let ray = |a: [f64; 2], other: [f64; 2]| {
        let r = [-a[1], a[0]];
        if dot(&r, &other) <= 0.0 {
            r
        } else {
            [-r[0], -r[1]]
        }
    };
    let r1 = ray(a1, a2);
    let r2 = ray(a2, a1);

    let u = &u_hat[..];
    let region = if dot(&a1, u) <= 0.0 && dot(&a2, u) <= 0.0 {
        Region::Interior
    } else if dot(&r1, u) > 0.0 && dot(&a1, u) > 0.0 {
        Region::Facet1
    } else if dot(&r2, u) > 0.0 && dot(&a2, u) > 0.0 {
        Region::Facet2
    } else {
        Region::Polar
    };
    Ok(TwoHGeometry {
        rho,
        beta1: slope(r1),
        beta2: slope(r2),
        region,
        rays: [r1, r2],
        normals: [a1, a2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn orthant(dim: usize) -> ConeSpec {
        ConeSpec::from_covariance(&SymMatrix::identity(dim)).unwrap()
    }

    #[test]
    fn halfspace_examples() {
        assert_eq!(
            project_halfspace(&[2.0, 3.0], &[1.0, 0.0]).unwrap(),
            vec![0.0, 3.0]
        );
        assert_eq!(
            project_halfspace(&[-1.0, 2.0], &[1.0, 0.0]).unwrap(),
            vec![-1.0, 2.0]
        );
        let p = project_halfspace(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(
            project_halfspace(&[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::ZeroNormal(0))
        );
    }

    #[test]
    fn zero_normal_rejected() {
        assert_eq!(
            ConeSpec::new(&[vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(Error::ZeroNormal(1))
        );
    }

    #[test]
    fn orthant_examples() {
        let cone = orthant(2);
        let p = dykstra_project(&[1.0, 1.0], &cone, DykstraConfig::default()).unwrap();
        assert!(p.point.iter().all(|v| v.abs() < 1e-12));
        assert!((p.sq_distance - 2.0).abs() < 1e-12);

        let p = dykstra_project(&[-1.0, 2.0], &cone, DykstraConfig::default()).unwrap();
        assert!((p.point[0] + 1.0).abs() < 1e-12 && p.point[1].abs() < 1e-12);
        assert!((p.sq_distance - 4.0).abs() < 1e-12);
    }

    #[test]
    fn increments_track_point() {
        let cov = SymMatrix::from_rows(&[vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
        let cone = ConeSpec::from_covariance(&cov).unwrap();
        let u = [2.0, 0.3];
        let mut st = DykstraState::new(&u, &cone).unwrap();
        for _ in 0..5 {
            st.cycle();
            for k in 0..2 {
                let sum = u[k] + st.increment(0)[k] + st.increment(1)[k];
                assert!((sum - st.point()[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_convergence_reported() {
        let cov = SymMatrix::from_rows(&[vec![1.0, -0.999], vec![-0.999, 1.0]]).unwrap();
        let cone = ConeSpec::from_covariance(&cov).unwrap();
        let cfg = DykstraConfig {
            tol: 1e-14,
            max_cycles: 2,
        };
        assert!(matches!(
            dykstra_project(&[1.0, 1.5], &cone, cfg),
            Err(Error::NoConvergence { cycles: 2, .. })
        ));
    }

    #[test]
    fn geometry_identity_examples() {
        let id = SymMatrix::identity(2);
        assert_eq!(
            two_h_geometry([1.0, 1.0], &id).unwrap().region,
            Region::Polar
        );
        let g = two_h_geometry([1.0, -1.0], &id).unwrap();
        assert_eq!(g.region, Region::Facet1);
        assert!((g.sq_distance([1.0, -1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(
            two_h_geometry([-1.0, -1.0], &id).unwrap().region,
            Region::Interior
        );
        assert_eq!(
            two_h_geometry([-1.0, 1.0], &id).unwrap().region,
            Region::Facet2
        );
    }

    #[test]
    fn geometry_rejects_degenerate() {
        let s = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]).unwrap();
        assert!(two_h_geometry([1.0, 0.0], &s).is_err());
    }

    fn random_cov(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
        let a = nalgebra::DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(&a * a.transpose() + nalgebra::DMatrix::identity(dim, dim) * 0.2).unwrap()
    }

    #[test]
    fn geometry_matches_dykstra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let cov = random_cov(&mut rng, 2);
            let u = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let g = two_h_geometry(u, &cov).unwrap();
            let cone = ConeSpec::from_covariance(&cov).unwrap();
            let p = dykstra_project(&u, &cone, DykstraConfig::default()).unwrap();
            assert!((g.sq_distance(u) - p.sq_distance).abs() < 1e-8);
            assert_eq!(g.region == Region::Interior, p.sq_distance == 0.0);
        }
    }

    /// Brute-force nearest point: random search over `y <= 0` with the cone
    /// parametrized as `v = N^{-1} y`, `N` the matrix of normals. Clamping
    /// `y` lets candidates land exactly on faces and edges.
    fn random_search_sq_distance(u: &[f64], cone: &ConeSpec, rng: &mut ChaCha8Rng) -> f64 {
        let d = cone.dim();
        let n = DMatrix::from_fn(d, d, |i, j| cone.normal(i)[j]);
        let n_inv = n.clone().try_inverse().expect("normals span the space");
        let sq_dist = |y: &[f64]| -> f64 {
            let v = &n_inv * DVector::from_column_slice(y);
            u.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
        };
        let mut centre = vec![0.0; d];
        let mut best = sq_dist(&centre);
        let mut scale = 4.0 * (1.0 + n.norm());
        for _round in 0..150 {
            for _ in 0..400 {
                let y: Vec<f64> = centre
                    .iter()
                    .map(|c| (c + rng.random_range(-scale..scale)).min(0.0))
                    .collect();
                let dist = sq_dist(&y);
                if dist < best {
                    best = dist;
                    centre = y;
                }
            }
            scale *= 0.85;
        }
        best
    }

    #[test]
    fn dykstra_matches_random_search_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [2usize, 3] {
            for _ in 0..50 {
                let cov = random_cov(&mut rng, dim);
                let cone = ConeSpec::from_covariance(&cov).unwrap();
                let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let p = dykstra_project(&u, &cone, DykstraConfig::default()).unwrap();
                let oracle = random_search_sq_distance(&u, &cone, &mut rng);
                assert!(
                    (p.sq_distance - oracle).abs() < 1e-4,
                    "dim {dim}: dykstra {} oracle {}",
                    p.sq_distance,
                    oracle
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn projection_is_idempotent_and_obtuse(
            dim in 2usize..=5,
            a in prop::collection::vec(-1.0f64..1.0, 25),
            u in prop::collection::vec(-3.0f64..3.0, 5),
            seed in any::<u64>(),
        ) {
            let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| a[i * 5 + j]);
            let cov = SymMatrix::new(&m * m.transpose() + nalgebra::DMatrix::identity(dim, dim) * 0.3).unwrap();
            let cone = ConeSpec::from_covariance(&cov).unwrap();
            let u = &u[..dim];
            let p = dykstra_project(u, &cone, DykstraConfig::default()).unwrap();
            let scale = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            prop_assert!(cone.max_violation(&p.point) <= 1e-9 * scale);

            let again = dykstra_project(&p.point, &cone, DykstraConfig::default()).unwrap();
            prop_assert!(again.sq_distance < 1e-10);

            // (u - p) . (v - p) <= 0 for cone members v
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let resid: Vec<f64> = u.iter().zip(&p.point).map(|(a, b)| a - b).collect();
            let mut checked = 0;
            while checked < 100 {
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
                let v = dykstra_project(&v, &cone, DykstraConfig::default()).unwrap().point;
                let ip: f64 = resid.iter().zip(v.iter().zip(&p.point)).map(|(r, (vi, pi))| r * (vi - pi)).sum();
                prop_assert!(ip <= 1e-8, "inner product {}", ip);
                checked += 1;
            }
        }
    }
}
