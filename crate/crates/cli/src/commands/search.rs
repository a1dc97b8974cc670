use std::path::PathBuf;

use clap::Args;
use heraldiq_core::discover::{improve, optimize, revalidate, to_scheme, Evaluation, RestartTrace, SearchProblem};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{envelope, num, render, Csv, Format, Probability};
use crate::setup::SchemeArgs;
use crate::Common;

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Search problem file.
    pub problem: PathBuf,
    /// Overrides the problem's number of restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Overrides the problem's iterations per restart.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Where to write the best circuit as a scheme file.
    #[arg(long, value_name = "PATH")]
    pub scheme_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Best {
    fidelity: f64,
    success: Probability,
    cost: f64,
    restart: usize,
    revalidated: Evaluation,
}

#[derive(Serialize)]
struct Report<'a> {
    problem: &'a str,
    found: bool,
    seed: u64,
    restarts: usize,
    iterations: usize,
    fidelity_threshold: f64,
    best: Best,
    trace: &'a [RestartTrace],
}

/// Runs a search. The report is returned even when nothing reaches the
/// threshold; the second value then carries the failure.
pub fn execute(args: &SearchArgs, common: &Common) -> CliResult<(String, Option<CliError>)> {
    let text = std::fs::read_to_string(&args.problem)
        .map_err(|e| CliError::invalid(format!("{}: {e}", args.problem.display())))?;
    let mut problem = SearchProblem::from_json(&text)?;
    if let Some(r) = args.restarts {
        problem.budget.restarts = r;
    }
    if let Some(i) = args.iterations {
        problem.budget.iterations = i;
    }
    if let Some(s) = common.seed {
        problem.budget.seed = s;
    }
    problem.validate()?;
    let out = optimize(&problem)?;
    let check = revalidate(&problem, &out.best.circuit)?;
    if let Some(path) = &args.scheme_out {
        let mut json = to_scheme(&problem, &out).to_json()?;
        json.push('\n');
        std::fs::write(path, json)?;
    }
    let report = Report {
        problem: &problem.name,
        found: out.found,
        seed: out.seed,
        restarts: problem.budget.restarts,
        iterations: problem.budget.iterations,
        fidelity_threshold: problem.fidelity_threshold,
        best: Best {
            fidelity: out.best.fidelity,
            success: Probability::new(out.best.success_prob),
            cost: out.best.cost,
            restart: out.best.restart,
            revalidated: check,
        },
        trace: &out.restarts,
    };
    let mut csv = Csv::new(vec!["restart", "seed", "iterations", "cost", "fidelity", "success"]);
    for t in &out.restarts {
        csv.push(vec![
            t.index.to_string(),
            t.seed.to_string(),
            t.iterations.to_string(),
            num(t.cost),
            num(t.fidelity),
            num(t.success_prob),
        ]);
    }
    let text = render(common.format.unwrap_or(Format::Json), &envelope("search", &report)?, &csv)?;
    let status = (!out.found).then(|| {
        CliError::NotFound(format!(
            "best fidelity {:.6} below threshold {}",
            out.best.fidelity, problem.fidelity_threshold
        ))
    });
    Ok((text, status))
}

#[derive(Args, Debug)]
pub struct ImproveArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Local optimizer iterations.
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Where to write the refined circuit as a scheme file.
    #[arg(long, value_name = "PATH")]
    pub scheme_out: Option<PathBuf>,
}

pub fn execute_improve(args: &ImproveArgs, common: &Common) -> CliResult<String> {
    let scheme = args.scheme.load()?;
    let r = improve(&scheme, args.iterations)?;
    if let Some(path) = &args.scheme_out {
        let mut s = scheme.clone();
        s.elements = r.circuit.elements.clone();
        if r.improvement > 0.0 {
            s.provenance = "discovered".into();
            s.expected_success = None;
        }
        let mut json = s.to_json()?;
        json.push('\n');
        std::fs::write(path, json)?;
    }
    #[derive(Serialize)]
    struct Report<'a> {
        scheme: &'a str,
        start: Evaluation,
        best: Evaluation,
        improvement: f64,
        trace: &'a [f64],
    }
    let mut csv = Csv::new(vec!["step", "cost"]);
    for (i, c) in r.trace.iter().enumerate() {
        csv.push(vec![i.to_string(), c.to_string()]);
    }
    let json = envelope(
        "improve",
        Report {
            scheme: &scheme.name,
            start: r.start,
            best: r.best,
            improvement: r.improvement,
            trace: &r.trace,
        },
    )?;
    render(common.format.unwrap_or(Format::Json), &json, &csv)
}
