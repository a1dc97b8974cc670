use clap::{Args, Subcommand, ValueEnum};
use heraldiq_core::detect::fanout_click_distribution_exact;
use heraldiq_core::enhance::{boosted_bsm_success, multiplex, multiplex_exact, BsmAncilla};
use heraldiq_core::exact;
use heraldiq_core::schemes::{formula, FORMULA_NAMES};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{cell, envelope, num, render, Csv, Format, Probability};
use crate::Common;

#[derive(Args, Debug)]
pub struct CalcArgs {
    #[command(subcommand)]
    pub which: Calc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ancilla {
    None,
    Bell,
}

#[derive(Subcommand, Debug)]
pub enum Calc {
    /// Closed-form success probability of a scheme family.
    Formula {
        /// Formula name; `calc formulas` lists them.
        name: String,
        /// Size parameter (d or n).
        param: Option<u32>,
    },
    /// Lists the available formulas.
    Formulas,
    /// Success after N multiplexed attempts.
    Multiplex {
        /// Single-attempt probability, as `p/q` or a decimal.
        p: String,
        /// Number of attempts.
        n: u64,
    },
    /// Branch-count distribution of K photons over B threshold detectors.
    Fanout {
        /// Photons arriving together.
        k: u64,
        /// Threshold detectors they are split over.
        b: u64,
    },
    /// Success of a Bell measurement with or without a Bell-pair ancilla.
    Bsm {
        #[arg(value_enum)]
        ancilla: Ancilla,
    },
}

#[derive(Serialize)]
struct Named<'a> {
    calculation: &'a str,
    #[serde(flatten)]
    result: serde_json::Value,
}

pub fn execute(args: &CalcArgs, common: &Common) -> CliResult<String> {
    let mut csv = Csv::new(vec!["key", "value", "exact"]);
    let (name, result) = match &args.which {
        Calc::Formula { name, param } => {
            let v = formula(name, *param)?;
            let exact = v.exact.as_ref().map(exact::display);
            csv.push(vec![name.clone(), num(v.value), cell(exact.as_ref())]);
            ("formula", serde_json::json!({"name": name, "param": param, "probability": Probability { value: v.value, exact }}))
        }
        Calc::Formulas => {
            for (n, p) in FORMULA_NAMES {
                csv.push(vec![n.to_string(), p.to_string(), String::new()]);
            }
            let list: Vec<_> = FORMULA_NAMES
                .iter()
                .map(|(n, p)| serde_json::json!({"name": n, "param": p}))
                .collect();
            ("formulas", serde_json::json!({ "formulas": list }))
        }
        Calc::Multiplex { p, n } => {
            let prob = match exact::parse(p) {
                Ok(r) => {
                    if r < exact::int(0) || r > exact::int(1) {
                        return Err(CliError::invalid(format!("probability {p} outside [0,1]")));
                    }
                    Probability::exact(&multiplex_exact(&r, *n))
                }
                Err(_) => {
                    let x: f64 = p.parse().map_err(|_| CliError::invalid(format!("cannot parse probability {p:?}")))?;
                    if !(0.0..=1.0).contains(&x) {
                        return Err(CliError::invalid(format!("probability {p} outside [0,1]")));
                    }
                    Probability::new(multiplex(x, *n))
                }
            };
            csv.push(vec![format!("multiplex({p},{n})"), num(prob.value), cell(prob.exact.as_ref())]);
            ("multiplex", serde_json::json!({"p": p, "n": n, "probability": prob}))
        }
        Calc::Fanout { k, b } => {
            if *b == 0 {
                return Err(CliError::invalid("fan-out needs at least one detector"));
            }
            let dist: Vec<_> = fanout_click_distribution_exact(*k, *b)
                .into_iter()
                .map(|(c, r)| {
                    let p = Probability::exact(&r);
                    csv.push(vec![format!("clicks={c}"), num(p.value), cell(p.exact.as_ref())]);
                    serde_json::json!({"clicks": c, "probability": p})
                })
                .collect();
            ("fanout", serde_json::json!({"photons": k, "detectors": b, "distribution": dist}))
        }
        Calc::Bsm { ancilla } => {
            let a = match ancilla {
                Ancilla::None => BsmAncilla::None,
                Ancilla::Bell => BsmAncilla::Bell,
            };
            let p = Probability::exact(&boosted_bsm_success(a));
            csv.push(vec!["bsm".into(), num(p.value), cell(p.exact.as_ref())]);
            ("bsm", serde_json::json!({"ancilla": format!("{ancilla:?}").to_lowercase(), "probability": p}))
        }
    };
    let json = envelope("calc", Named { calculation: name, result })?;
    render(common.format.unwrap_or(Format::Json), &json, &csv)
}
