//! `sigwald`: intersection tests, closed testing, simulation studies and
//! Bahadur efficiency grids from the command line.
//!
//! Exit codes: 0 on success, 2 on malformed input or configuration, 3 on a
//! numerical failure.

mod input;

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sigwald::bahadur::{efficiency_ratio, slope_minp, slope_sw, BahadurPoint};
use sigwald::intersection::{
    minp_test, sw_test, sw_two_test_analytic, Method, MinpMode, TestResult,
};
use sigwald::multtest::closed_testing;
use sigwald_simlab::{
    run_study1, run_study2, run_study3, Scale, SimulationConfig, StudyResultTable,
};

use input::{AnalysisInput, MethodArg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{}: {}", .0.module(), .0)]
    Core(#[from] sigwald::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sigwald",
    version,
    about = "Weighted signed Wald intersection tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct AnalysisArgs {
    /// Analysis input JSON; `-` reads standard input.
    input: PathBuf,
    /// Write JSON (input echo plus result) instead of the text summary.
    #[arg(long)]
    json: bool,
    /// Overrides the input's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the input's number of Monte-Carlo draws.
    #[arg(long)]
    draws: Option<usize>,
    /// Overrides the input's method.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test the intersection of all hypotheses.
    Test(AnalysisArgs),
    /// Closed testing over every non-empty subset of hypotheses.
    Closed(AnalysisArgs),
    /// Run a simulation study and write its table as CSV.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        study: u8,
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
        /// TOML file overriding the study defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bahadur slopes and efficiency ratio over a grid, as CSV.
    Bahadur {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-0.75,-0.5,-0.25,0,0.25,0.5,0.75"
        )]
        rho_grid: Vec<f64>,
        /// Ratios `z_min / z_max`; defaults to -1, -0.95, ..., 1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0)]
        z_max: f64,
    },
}

fn load_input(args: &AnalysisArgs) -> Result<AnalysisInput, CliError> {
    let (text, dir) = if args.input.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        (s, std::env::current_dir().unwrap_or_default())
    } else {
        let s = std::fs::read_to_string(&args.input)
            .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
        let dir = args
            .input
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        (s, dir)
    };
    let mut input = AnalysisInput::parse(&text, &dir)?;
    if let Some(seed) = args.seed {
        input.seed = Some(seed);
    }
    if let Some(draws) = args.draws {
        input.draws = draws;
    }
    if let Some(method) = args.method {
        input.method = method;
    }
    if let Some(p) = &input.influence_csv {
        if let Ok(abs) = std::fs::canonicalize(p) {
            input.influence_csv = Some(abs);
        }
    }
    Ok(input)
}

fn fmt_vec(v: &[f64], prec: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.prec$}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_deltas(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn run_test(args: &AnalysisArgs) -> Result<String, CliError> {
    let input = load_input(args)?;
    let est = input.estimates()?;
    let spec = input.spec()?;
    let mc = input.mc()?;
    let result = match input.method {
        MethodArg::Sw => sw_test(&est, &spec, &mc)?,
        MethodArg::SwAnalytic => sw_two_test_analytic(&est, spec.deltas())?,
        MethodArg::Minp => minp_test(&est, &spec, &mc, MinpMode::Joint)?,
        MethodArg::MinpBonferroni => minp_test(&est, &spec, &mc, MinpMode::Bonferroni)?,
    };
    if args.json {
        return json_output(input, &result);
    }
    Ok(test_summary(&spec, &result))
}

fn test_summary(spec: &sigwald::HypothesisSpec, r: &TestResult) -> String {
    let title = match r.method {
        Method::MinpJoint | Method::MinpBonferroni => "Minimum p-value Intersection Test",
        Method::Marginal => "One-sided Wald Test",
        _ => "Signed Wald Intersection Test",
    };
    let mut out = String::new();
    let _ = writeln!(out, "\n\t{title}\n");
    let _ = writeln!(
        out,
        "Intersection null hypothesis: theta =< {}",
        fmt_deltas(spec.deltas())
    );
    let _ = writeln!(out, "w = {}", fmt_vec(spec.weights(), 2));
    let label = match r.method {
        Method::MinpJoint | Method::MinpBonferroni => "min p",
        _ => "Q",
    };
    let _ = writeln!(
        out,
        "{label} = {:.5}, p-value = {:.4}",
        r.statistic, r.p_value
    );
    let _ = write!(
        out,
        "method = {}",
        serde_json::to_value(r.method)
            .unwrap()
            .as_str()
            .unwrap_or("")
    );
    if let (Some(mc), Some(se)) = (r.mc, r.mc_std_error) {
        let _ = write!(
            out,
            ", draws = {}, seed = {}, MC std. error = {se:.4}",
            mc.draws, mc.seed
        );
    }
    out.push('\n');
    out
}

fn json_output<T: serde::Serialize>(
    mut input: AnalysisInput,
    result: &T,
) -> Result<String, CliError> {
    input.result = Some(serde_json::to_value(result).map_err(|e| CliError::Input(e.to_string()))?);
    let mut s = serde_json::to_string_pretty(&input).map_err(|e| CliError::Input(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run_closed(args: &AnalysisArgs) -> Result<String, CliError> {
    let input = load_input(args)?;
    let est = input.estimates()?;
    let method = input.method.closed()?;
    input.spec()?;
    let mc = input.mc()?;
    let report = closed_testing(
        &est,
        &input.deltas(),
        &input.weights(),
        input.alpha,
        &mc,
        method,
    )?;
    if args.json {
        return json_output(input, &report);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Closed testing, alpha = {}, weights = {}\n",
        input.alpha,
        fmt_vec(&input.weights(), 2)
    );
    out.push_str(&report.to_table(est.names(), est.theta_hat()));
    let rejected: Vec<&str> = est
        .names()
        .iter()
        .zip(&report.rejected)
        .filter(|(_, r)| **r)
        .map(|(n, _)| n.as_str())
        .collect();
    let _ = writeln!(
        out,
        "\nRejected: {}",
        if rejected.is_empty() {
            "none".into()
        } else {
            rejected.join(", ")
        }
    );
    let _ = writeln!(out, "Consonant: {}", report.consonant);
    Ok(out)
}

fn run_simulate(
    study: u8,
    scale: ScaleArg,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Result<StudyResultTable, CliError> {
    let cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            SimulationConfig::parse(&text)?
        }
        None => SimulationConfig::default(),
    };
    if seed.is_none() && !cfg.has_seed(study) {
        return Err(CliError::Input(
            "a seed is required (pass --seed or set seed in the config)".into(),
        ));
    }
    let scale = match scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    Ok(match study {
        1 => run_study1(&cfg.study1(scale, seed)?)?,
        2 => run_study2(&cfg.study2(scale, seed)?)?,
        _ => run_study3(&cfg.study3(scale, seed)?)?,
    })
}

fn run_bahadur(rhos: &[f64], s_grid: &[f64], z_max: f64) -> Result<String, CliError> {
    let mut out = String::from("rho,s,z_max,z_min,slope_sw,slope_minp,ratio,ratio_cap\n");
    for &rho in rhos {
        for &s in s_grid {
            let pt = BahadurPoint::from_ratio(z_max, s, rho)?;
            let ratio = efficiency_ratio(&pt)?;
            let _ = writeln!(
                out,
                "{rho},{s},{z_max},{},{},{},{ratio},{}",
                s * z_max,
                slope_sw(&pt),
                slope_minp(&pt),
                2.0 / (1.0 + rho)
            );
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let text = match cli.command {
        Command::Test(args) => run_test(&args)?,
        Command::Closed(args) => run_closed(&args)?,
        Command::Simulate {
            study,
            scale,
            config,
            seed,
            out,
        } => {
            let table = run_simulate(study, scale, config.as_deref(), seed)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                    table.write_csv(file)?;
                    String::new()
                }
                None => table.to_csv_string()?,
            }
        }
        Command::Bahadur {
            rho_grid,
            s_grid,
            z_max,
        } => {
            let s_grid = s_grid.unwrap_or_else(|| (-20..=20).map(|k| k as f64 / 20.0).collect());
            run_bahadur(&rho_grid, &s_grid, z_max)?
        }
    };
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Input(format!("stdout: {e}")))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
