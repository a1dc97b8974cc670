use clap::{Args, ValueEnum};
use heraldiq_core::detect::DetectionSetup;
use heraldiq_core::schemes::run;
use heraldiq_core::sources::{hom_coincidence, TmsvSource};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{cell, cell_num, envelope, num, render, Csv, Format};
use crate::setup::{DetectorArgs, SchemeArgs};
use crate::Common;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Efficiency of every herald detector of a scheme.
    Eta,
    /// Dark-count probability of every herald detector of a scheme.
    Dark,
    /// Pairwise visibility of two photons meeting on a balanced splitter.
    Visibility,
    /// Squeezing magnitude of a two-mode squeezed vacuum source.
    Squeezing,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', conflicts_with = "range", required_unless_present = "range")]
    pub values: Vec<f64>,
    /// Evenly spaced grid `start:stop:points`, endpoints included.
    #[arg(long, value_name = "START:STOP:POINTS")]
    pub range: Option<String>,
    /// Built-in scheme for `eta` and `dark` sweeps.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Scheme file for `eta` and `dark` sweeps.
    #[arg(long, conflicts_with = "builtin")]
    pub scheme: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub detectors: DetectorArgs,
}

fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::invalid(format!("cannot parse --range {s:?}; use start:stop:points"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    Ok(match n {
        0 => return Err(bad()),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    })
}

#[derive(Serialize)]
struct SchemeRow {
    value: f64,
    success: f64,
    exact: Option<String>,
    fidelity: Option<f64>,
    false_positive: f64,
    false_negative: f64,
}

#[derive(Serialize)]
struct HomRow {
    value: f64,
    coincidence: f64,
}

#[derive(Serialize)]
struct TmsvRow {
    value: f64,
    vacuum: f64,
    single_pair: f64,
    pair_ratio: f64,
    mean_photons: f64,
    truncation_error: f64,
}

pub fn execute(args: &SweepArgs, common: &Common) -> CliResult<String> {
    let grid = match &args.range {
        Some(r) => parse_range(r)?,
        None => args.values.clone(),
    };
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(CliError::invalid("grid values must be finite"));
    }
    let (json_rows, csv) = match args.param {
        SweepParam::Eta | SweepParam::Dark => scheme_sweep(args, &grid)?,
        SweepParam::Visibility => {
            let rows = grid
                .par_iter()
                .map(|&v| {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(CliError::invalid(format!("visibility {v} outside [0,1]")));
                    }
                    Ok(HomRow {
                        value: v,
                        coincidence: hom_coincidence(v)?,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut csv = Csv::new(vec!["visibility", "coincidence"]);
            for r in &rows {
                csv.push(vec![num(r.value), num(r.coincidence)]);
            }
            (serde_json::to_value(rows)?, csv)
        }
        SweepParam::Squeezing => {
            let n_max = args.detectors.trunc.unwrap_or(10);
            let rows = grid
                .iter()
                .map(|&x| {
                    let s = TmsvSource::new(x, 0.0, n_max)?;
                    let (p0, p1) = (s.pair_probability(0), s.pair_probability(1));
                    Ok(TmsvRow {
                        value: x,
                        vacuum: p0,
                        single_pair: p1,
                        pair_ratio: p1 / p0,
                        mean_photons: s.mean_photons(),
                        truncation_error: s.truncation_error(),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut csv = Csv::new(vec![
                "squeezing", "vacuum", "single_pair", "pair_ratio", "mean_photons", "truncation_error",
            ]);
            for r in &rows {
                csv.push(vec![
                    num(r.value),
                    num(r.vacuum),
                    num(r.single_pair),
                    num(r.pair_ratio),
                    num(r.mean_photons),
                    num(r.truncation_error),
                ]);
            }
            (serde_json::to_value(rows)?, csv)
        }
    };
    #[derive(Serialize)]
    struct Report {
        param: SweepParam,
        rows: serde_json::Value,
    }
    let json = envelope(
        "sweep",
        Report {
            param: args.param,
            rows: json_rows,
        },
    )?;
    render(common.format.unwrap_or(Format::Csv), &json, &csv)
}

fn scheme_sweep(args: &SweepArgs, grid: &[f64]) -> CliResult<(serde_json::Value, Csv)> {
    let scheme = SchemeArgs {
        builtin: args.builtin.clone(),
        scheme: args.scheme.clone(),
    }
    .load()?;
    let base: DetectionSetup = args.detectors.setup(&scheme)?.unwrap_or_else(|| scheme.default_setup());
    let rows = grid
        .par_iter()
        .map(|&v| {
            let mut setup = base.clone();
            for d in &mut setup.detectors {
                match args.param {
                    SweepParam::Eta => d.efficiency = v,
                    _ => d.dark_count = v,
                }
                d.validate()?;
            }
            let r = run(&scheme, Some(&setup))?;
            let ev = r.events.unwrap_or_default();
            Ok(SchemeRow {
                value: v,
                success: r.success_prob,
                exact: heraldiq_core::exact::rational_string(r.success_prob),
                fidelity: r.fidelity,
                false_positive: ev.false_positive,
                false_negative: ev.false_negative,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let name = match args.param {
        SweepParam::Eta => "eta",
        _ => "dark",
    };
    let mut csv = Csv::new(vec![name, "success", "exact", "fidelity", "false_positive", "false_negative"]);
    for r in &rows {
        csv.push(vec![
            num(r.value),
            num(r.success),
            cell(r.exact.as_ref()),
            cell_num(r.fidelity),
            num(r.false_positive),
            num(r.false_negative),
        ]);
    }
    Ok((serde_json::to_value(rows)?, csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("0.2:0.9:1").unwrap(), vec![0.2]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }
}
