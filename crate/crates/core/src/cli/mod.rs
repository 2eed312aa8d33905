//! Command-line front end: `analyze`, `flow`, `verify` and `constants`.
//!
//! Exit codes: 0 success, 1 runtime failure (including failed
//! verification checks), 2 invalid configuration, 3 nondegeneracy of the
//! `β = n-4` interaction matrices violated, 4 inconclusive verification.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::domain::DomainModel;
use crate::error::Error;
use crate::infinity::{enumerate_cinf, InfinityReport};
use crate::kmodel::{check_condition_a, universal_constants, verify_flatness, ConditionA, FlatnessReport, UniversalConstants};
use crate::numerics::QuadratureSpec;
use crate::pseudoflow::battery::{decrease_battery, expansion_battery};
use crate::pseudoflow::{DecreaseCheck, ExpansionCheck, FlowContext, PseudoflowParams, ReducedState, Terminal, Verdict};
use config::{RunConfig, VerifyBlock, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "navier-cpi", version, about = "Critical points at infinity for the Navier problem")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled quantities; overrides the configured seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write SVG plots next to the trajectories.
    #[arg(long, global = true)]
    pub plots: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the critical points of K, list the critical points at
    /// infinity and evaluate both existence criteria.
    Analyze,
    /// Integrate the pseudo-gradient flow from each configured start.
    Flow,
    /// Run the expansion and decrease batteries.
    Verify,
    /// Print the universal constants for `(n, β)`.
    Constants {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

/// Errors caused by the input rather than by the numerics.
fn classify_error(context: &str, e: Error) -> CliError {
    let message = format!("{context}: {e}");
    match e {
        Error::Config(_) | Error::Region(_) | Error::Class { .. } | Error::OutsideDomain(_) | Error::DivergentIntegral(_) => {
            CliError::config(message)
        }
        _ => CliError::runtime(message),
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlatnessEntry {
    pub record: usize,
    pub report: Option<FlatnessReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub condition_a: ConditionA,
    pub flatness: Vec<FlatnessEntry>,
    pub infinity: InfinityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowRun {
    pub label: String,
    pub records: Vec<usize>,
    pub terminal: Terminal,
    pub samples: usize,
    pub rejected: usize,
    pub max_lambda: f64,
    pub final_j: f64,
    pub strictly_decreasing: bool,
    pub trajectory: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowSummary {
    pub schema_version: u32,
    pub runs: Vec<FlowRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExpansionEntry {
    pub label: String,
    pub n: usize,
    pub check: ExpansionCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DecreaseEntry {
    pub label: String,
    pub n: usize,
    pub region: String,
    pub check: DecreaseCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct VerifyReport {
    pub schema_version: u32,
    pub expansion: Vec<ExpansionEntry>,
    pub decrease: Vec<DecreaseEntry>,
    pub failed: usize,
    pub inconclusive: usize,
    pub all_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConstantsReport {
    pub schema_version: u32,
    pub constants: UniversalConstants,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Runs one command and returns its exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let config = match &cli.config {
        Some(p) => Some(config::load(p).map_err(CliError::config)?),
        None => None,
    };
    let out = cli
        .out
        .clone()
        .or_else(|| config.as_ref().map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut quadrature = config.as_ref().map(|c| c.quadrature.clone()).unwrap_or_default();
    if let Some(seed) = cli.seed {
        quadrature.seed = seed;
    }
    match &cli.command {
        Command::Analyze => analyze(required(&config)?, &out, cli.seed.unwrap_or(0)),
        Command::Flow => flow(required(&config)?, &quadrature, &out, cli.plots),
        Command::Verify => {
            let block = config.as_ref().map(|c| c.verify.clone()).unwrap_or_default();
            verify(&block, &quadrature, &out)
        }
        Command::Constants { n, beta } => constants(*n, *beta, &quadrature, cli.out.as_deref()),
    }
}

fn required(config: &Option<RunConfig>) -> Result<&RunConfig, CliError> {
    config.as_ref().ok_or_else(|| CliError::config("this command needs --config"))
}

fn domain_of(config: &RunConfig) -> Result<DomainModel, CliError> {
    config.domain_model().map_err(CliError::config)
}

pub fn analyze(config: &RunConfig, out: &Path, seed: u64) -> Result<u8, CliError> {
    let domain = domain_of(config)?;
    let k = &config.k;
    let infinity = enumerate_cinf(k, &domain).map_err(|e| classify_error("analyze", e))?;
    let condition_a = check_condition_a(k, &domain, config.analysis.boundary_samples, seed);
    let flatness = (0..k.records.len())
        .map(|i| match verify_flatness(k, i, config.analysis.flatness_samples) {
            Ok(r) => FlatnessEntry { record: i, report: Some(r), error: None },
            Err(e) => FlatnessEntry { record: i, report: None, error: Some(e.to_string()) },
        })
        .collect();
    let violated = !infinity.nondegeneracy.holds;
    let report = AnalyzeReport { schema_version: SCHEMA_VERSION, condition_a, flatness, infinity };
    let path = out.join("analysis.json");
    output::write_json(&path, &report).map_err(|e| io_error(&path, e))?;
    if violated {
        eprintln!("nondegeneracy violated: a tuple of β = n-4 points has ρ = 0; criteria not evaluated");
        return Ok(3);
    }
    Ok(0)
}

pub fn flow(config: &RunConfig, quadrature: &QuadratureSpec, out: &Path, plots: bool) -> Result<u8, CliError> {
    let block = config.flow.as_ref().ok_or_else(|| CliError::config("flow: the config has no flow block"))?;
    let domain = domain_of(config)?;
    let ctx = FlowContext::new(&domain, &config.k, block.params.clone(), quadrature.clone()).map_err(|e| classify_error("flow", e))?;
    let mut states = Vec::with_capacity(block.starts.len());
    for (i, start) in block.starts.iter().enumerate() {
        let state = ReducedState::assign(start.configuration(), &config.k).map_err(|e| classify_error(&format!("flow.starts[{i}]"), e))?;
        ctx.check_start(&state).map_err(|e| CliError::config(format!("flow.starts[{i}]: {e}")))?;
        states.push(state);
    }
    // Trajectories are independent; each gets its own thread.
    let outcomes: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = states.iter().map(|s| scope.spawn(|| ctx.flow(s))).collect();
        handles.into_iter().map(|h| h.join().expect("flow thread panicked")).collect()
    });
    let mut runs = Vec::with_capacity(outcomes.len());
    for (i, (start, outcome)) in block.starts.iter().zip(outcomes).enumerate() {
        let outcome = outcome.map_err(|e| classify_error(&format!("flow.starts[{i}]"), e))?;
        let label = start.label.clone().unwrap_or_else(|| format!("start-{i}"));
        let name = format!("trajectory-{i}.csv");
        let path = out.join(&name);
        let csv = output::trajectory_csv(&outcome).map_err(|e| io_error(&path, e))?;
        output::write_atomic(&path, &csv).map_err(|e| io_error(&path, e))?;
        if plots {
            let svg = out.join(format!("trajectory-{i}.svg"));
            output::plot_flow(&svg, &outcome, &label).map_err(|e| io_error(&svg, e))?;
        }
        runs.push(FlowRun {
            label,
            records: outcome.records.clone(),
            terminal: outcome.terminal.clone(),
            samples: outcome.samples.len(),
            rejected: outcome.rejected,
            max_lambda: outcome.max_lambda(),
            final_j: outcome.samples.last().map(|s| s.j).unwrap_or(f64::NAN),
            strictly_decreasing: outcome.strictly_decreasing(),
            trajectory: name,
        });
    }
    for r in &runs {
        println!("{}: {:?}", r.label, r.terminal);
    }
    let path = out.join("flow-summary.json");
    output::write_json(&path, &FlowSummary { schema_version: SCHEMA_VERSION, runs }).map_err(|e| io_error(&path, e))?;
    Ok(0)
}

/// The batteries for the dimensions in `block`, run concurrently.
pub fn run_batteries(block: &VerifyBlock, quadrature: &QuadratureSpec) -> Result<VerifyReport, Error> {
    let params = PseudoflowParams::default();
    let expansion_cases: Vec<_> = if block.expansion {
        block.dimensions.iter().flat_map(|&n| expansion_battery(n)).collect()
    } else {
        Vec::new()
    };
    let decrease_cases: Vec<_> =
        if block.decrease { decrease_battery().into_iter().filter(|c| block.dimensions.contains(&c.n)).collect() } else { Vec::new() };
    let (expansion, decrease) = std::thread::scope(|scope| {
        let ex: Vec<_> = expansion_cases
            .iter()
            .map(|c| {
                let params = params.clone();
                scope.spawn(move || -> Result<ExpansionEntry, Error> {
                    let domain = DomainModel::unit_ball(c.case.n)?;
                    let ctx = FlowContext::new(&domain, &c.case.k, params, quadrature.clone())?;
                    let check = ctx.verify_expansion(&c.case.state, c.direction, &c.lambdas)?;
                    Ok(ExpansionEntry { label: c.case.label.clone(), n: c.case.n, check })
                })
            })
            .collect();
        let de: Vec<_> = decrease_cases
            .iter()
            .map(|c| {
                let params = params.clone();
                scope.spawn(move || -> Result<DecreaseEntry, Error> {
                    let domain = DomainModel::unit_ball(c.n)?;
                    let ctx = FlowContext::new(&domain, &c.k, params, quadrature.clone())?;
                    let tangent = ctx.field(&c.state)?;
                    let check = ctx.verify_decrease(&c.state, &tangent)?;
                    Ok(DecreaseEntry { label: c.label.clone(), n: c.n, region: tangent.region, check })
                })
            })
            .collect();
        (
            ex.into_iter().map(|h| h.join().expect("verification thread panicked")).collect::<Result<Vec<_>, _>>(),
            de.into_iter().map(|h| h.join().expect("verification thread panicked")).collect::<Result<Vec<_>, _>>(),
        )
    });
    let (expansion, decrease) = (expansion?, decrease?);
    let inconclusive = expansion.iter().filter(|e| e.check.verdict == Verdict::Inconclusive).count();
    let failed = expansion.iter().filter(|e| e.check.verdict == Verdict::Fail).count() + decrease.iter().filter(|d| !d.check.passed).count();
    Ok(VerifyReport { schema_version: SCHEMA_VERSION, expansion, decrease, failed, inconclusive, all_passed: failed == 0 && inconclusive == 0 })
}

pub fn verify(block: &VerifyBlock, quadrature: &QuadratureSpec, out: &Path) -> Result<u8, CliError> {
    let report = run_batteries(block, quadrature).map_err(|e| classify_error("verify", e))?;
    for e in &report.expansion {
        println!("expansion n={} {:<24} {:?} slope {:.2} (order {})", e.n, e.label, e.check.verdict, e.check.slope, e.check.order);
    }
    for d in &report.decrease {
        println!("decrease  n={} {:<24} {} fitted-c {:.3e} [{}]", d.n, d.label, if d.check.passed { "Pass" } else { "Fail" }, d.check.fitted_c, d.region);
    }
    let path = out.join("verify.json");
    output::write_json(&path, &report).map_err(|e| io_error(&path, e))?;
    Ok(if report.failed > 0 {
        1
    } else if report.inconclusive > 0 {
        4
    } else {
        0
    })
}

pub fn constants(n: usize, beta: f64, quadrature: &QuadratureSpec, out: Option<&Path>) -> Result<u8, CliError> {
    let c = universal_constants(n, beta, quadrature).map_err(|e| classify_error("constants", e))?;
    println!("n = {n}, beta = {beta}");
    println!("{:<8} {:>24} {:>12}", "name", "value", "error");
    for (name, e) in [("c1-thm", c.c1_thm), ("c2-thm", c.c2_thm), ("c1-prop", c.c1_prop), ("c2-prop", c.c2_prop), ("c3", c.c3)] {
        println!("{name:<8} {:>24.16e} {:>12.2e}", e.value, e.error);
    }
    if let Some(dir) = out {
        let path = dir.join("constants.json");
        output::write_json(&path, &ConstantsReport { schema_version: SCHEMA_VERSION, constants: c }).map_err(|e| io_error(&path, e))?;
    }
    Ok(0)
}
