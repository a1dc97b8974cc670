use std::path::PathBuf;

use clap::Args;
use heraldiq_core::detect::DetectorModel;
use heraldiq_core::sources::{g2_heralded, herald_single, jsi_purity_bound, schmidt_metrics, JsaGrid, TmsvSource};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{envelope, num, render, Csv, Format};
use crate::setup::DetectorArgs;
use crate::Common;

#[derive(Args, Debug)]
pub struct SourcesArgs {
    /// Joint spectral amplitude file.
    #[arg(long, value_name = "PATH", conflicts_with = "grid")]
    pub jsa: Option<PathBuf>,
    /// Points per axis of a generated double-Gaussian amplitude.
    #[arg(long, value_name = "N", requires_all = ["sigma_plus", "sigma_minus"])]
    pub grid: Option<usize>,
    /// Half-width of the generated frequency axes.
    #[arg(long, default_value_t = 4.0)]
    pub extent: f64,
    /// Width along ωs + ωi (pump envelope).
    #[arg(long)]
    pub sigma_plus: Option<f64>,
    /// Width along ωs − ωi (phase matching).
    #[arg(long)]
    pub sigma_minus: Option<f64>,
    /// Squeezing magnitude of a two-mode squeezed vacuum source.
    #[arg(long, value_name = "XI")]
    pub squeezing: Option<f64>,
    /// Detector heralding the TMSV idler; `--trunc` sets the pair cutoff.
    #[command(flatten)]
    pub detectors: DetectorArgs,
}

#[derive(Serialize)]
struct JsaReport {
    origin: String,
    grid: (usize, usize),
    schmidt_number: f64,
    purity: f64,
    g2_unheralded: f64,
    jsi_purity_estimate: f64,
    schmidt_coefficients: Vec<f64>,
}

#[derive(Serialize)]
struct TmsvReport {
    squeezing: f64,
    n_max: usize,
    pair_probabilities: Vec<f64>,
    pair_ratio: f64,
    mean_photons: f64,
    truncation_error: f64,
    detector: DetectorModel,
    herald_probability: f64,
    g2_heralded: f64,
}

#[derive(Serialize)]
struct Report {
    jsa: Option<JsaReport>,
    tmsv: Option<TmsvReport>,
}

const SHOWN_COEFFICIENTS: usize = 10;

pub fn execute(args: &SourcesArgs, common: &Common) -> CliResult<String> {
    let grid = match (&args.jsa, args.grid) {
        (Some(path), _) => Some((
            path.display().to_string(),
            JsaGrid::load(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?,
        )),
        (None, Some(n)) => {
            let (sp, sm) = (args.sigma_plus.unwrap_or(1.0), args.sigma_minus.unwrap_or(1.0));
            Some((
                format!("double_gaussian(n={n}, extent={}, sigma_plus={sp}, sigma_minus={sm})", args.extent),
                JsaGrid::double_gaussian(n, args.extent, sp, sm)?,
            ))
        }
        (None, None) => None,
    };
    if grid.is_none() && args.squeezing.is_none() {
        return Err(CliError::invalid("give --jsa, --grid or --squeezing"));
    }
    let jsa = grid
        .map(|(origin, g)| -> CliResult<JsaReport> {
            let m = schmidt_metrics(&g);
            Ok(JsaReport {
                origin,
                grid: (g.values.nrows(), g.values.ncols()),
                schmidt_number: m.schmidt_number,
                purity: m.purity,
                g2_unheralded: m.g2_unheralded,
                jsi_purity_estimate: jsi_purity_bound(&g.intensity())?,
                schmidt_coefficients: m.schmidt_coefficients.into_iter().take(SHOWN_COEFFICIENTS).collect(),
            })
        })
        .transpose()?;
    let tmsv = args
        .squeezing
        .map(|xi| -> CliResult<TmsvReport> {
            let n_max = args.detectors.trunc.unwrap_or(10);
            let src = TmsvSource::new(xi, 0.0, n_max)?;
            let mut det = DetectorModel::ideal_pnr();
            if let Some(k) = args.detectors.kind() {
                det.kind = k;
            }
            if let Some(eta) = &args.detectors.eta {
                det.efficiency = eta
                    .parse()
                    .map_err(|_| CliError::invalid("--eta for sources takes a single value"))?;
            }
            if let Some(p) = args.detectors.dark {
                det.dark_count = p;
            }
            det.validate()?;
            let h = herald_single(&src, det)?;
            let probs: Vec<f64> = (0..=n_max).map(|k| src.pair_probability(k)).collect();
            Ok(TmsvReport {
                squeezing: xi,
                n_max,
                pair_ratio: probs[1] / probs[0],
                pair_probabilities: probs,
                mean_photons: src.mean_photons(),
                truncation_error: src.truncation_error(),
                detector: det,
                herald_probability: h.herald_prob,
                g2_heralded: g2_heralded(&h.signal, 0),
            })
        })
        .transpose()?;

    let mut csv = Csv::new(vec!["metric", "value"]);
    if let Some(j) = &jsa {
        for (k, v) in [
            ("schmidt_number", j.schmidt_number),
            ("purity", j.purity),
            ("g2_unheralded", j.g2_unheralded),
            ("jsi_purity_estimate", j.jsi_purity_estimate),
        ] {
            csv.push(vec![k.into(), num(v)]);
        }
    }
    if let Some(t) = &tmsv {
        for (k, v) in [
            ("squeezing", t.squeezing),
            ("pair_ratio", t.pair_ratio),
            ("mean_photons", t.mean_photons),
            ("truncation_error", t.truncation_error),
            ("herald_probability", t.herald_probability),
            ("g2_heralded", t.g2_heralded),
        ] {
            csv.push(vec![k.into(), num(v)]);
        }
    }
    render(common.format.unwrap_or(Format::Json), &envelope("sources", Report { jsa, tmsv })?, &csv)
}
