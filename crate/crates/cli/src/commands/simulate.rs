use clap::Args;
use heraldiq_core::detect::{DetectionSetup, EventRates};
use heraldiq_core::schemes::{run, SchemeStatus};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{cell, cell_num, envelope, num, pattern_string, render, Csv, Format, Probability};
use crate::setup::{DetectorArgs, SchemeArgs};
use crate::Common;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[command(flatten)]
    pub detectors: DetectorArgs,
}

#[derive(Serialize)]
struct PatternRow {
    pattern: Vec<u8>,
    tag: Option<String>,
    probability: Probability,
    fidelity: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    scheme: String,
    provenance: String,
    status: SchemeStatus,
    modes: usize,
    photons: usize,
    detection: Option<DetectionSetup>,
    success: Probability,
    expected_success: Option<String>,
    fidelity: Option<f64>,
    patterns: Vec<PatternRow>,
    events: Option<EventRates>,
}

pub fn execute(args: &SimulateArgs, common: &Common) -> CliResult<String> {
    let scheme = args.scheme.load()?;
    let setup = args.detectors.setup(&scheme)?;
    let r = run(&scheme, setup.as_ref())?;
    let report = Report {
        scheme: scheme.name.clone(),
        provenance: scheme.provenance.clone(),
        status: scheme.status,
        modes: scheme.modes,
        photons: scheme.photons(),
        detection: setup,
        success: Probability::new(r.success_prob),
        expected_success: r.expected_success.clone(),
        fidelity: r.fidelity,
        patterns: r
            .patterns
            .iter()
            .map(|p| PatternRow {
                pattern: p.pattern.clone(),
                tag: p.tag.clone(),
                probability: Probability::new(p.probability),
                fidelity: p.fidelity,
            })
            .collect(),
        events: r.events,
    };

    let mut csv = Csv::new(vec!["pattern", "tag", "probability", "exact", "fidelity"]);
    for p in &report.patterns {
        csv.push(vec![
            pattern_string(&p.pattern),
            cell(p.tag.as_ref()),
            num(p.probability.value),
            cell(p.probability.exact.as_ref()),
            cell_num(p.fidelity),
        ]);
    }
    csv.push(vec![
        "total".into(),
        String::new(),
        num(report.success.value),
        cell(report.success.exact.as_ref()),
        cell_num(report.fidelity),
    ]);
    if let Some(ev) = report.events {
        csv.push(vec!["false_positive".into(), String::new(), num(ev.false_positive), String::new(), String::new()]);
        csv.push(vec!["false_negative".into(), String::new(), num(ev.false_negative), String::new(), String::new()]);
    }
    render(common.format.unwrap_or(Format::Json), &envelope("simulate", &report)?, &csv)
}
