use std::path::PathBuf;

use clap::Args;
use heraldiq_core::detect::{DetectionSetup, DetectorKind};
use heraldiq_core::propagate::DEFAULT_MAX_PHOTONS;
use heraldiq_core::schemes::{builtin, builtin_registry, SchemeDefinition};

use crate::error::{CliError, CliResult};

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct SchemeArgs {
    /// Name of a built-in scheme.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Path to a scheme file.
    #[arg(long)]
    pub scheme: Option<PathBuf>,
}

impl SchemeArgs {
    pub fn load(&self) -> CliResult<SchemeDefinition> {
        match (&self.builtin, &self.scheme) {
            (Some(name), _) => builtin(name).ok_or_else(|| {
                let names: Vec<String> = builtin_registry().into_iter().map(|s| s.name).collect();
                CliError::invalid(format!("unknown builtin {name:?}; available: {}", names.join(", ")))
            }),
            (None, Some(path)) => SchemeDefinition::load(path)
                .map_err(|e| CliError::invalid(format!("{}: {e}", path.display()))),
            (None, None) => Err(CliError::invalid("either --builtin or --scheme is required")),
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct DetectorArgs {
    /// Photon-number-resolving herald detectors.
    #[arg(long, conflicts_with_all = ["threshold", "fanout"])]
    pub pnr: bool,
    /// Click/no-click herald detectors.
    #[arg(long, conflicts_with = "fanout")]
    pub threshold: bool,
    /// Each herald mode split over K threshold detectors.
    #[arg(long, value_name = "K")]
    pub fanout: Option<usize>,
    /// Efficiency of every herald detector (`0.9`) or per circuit mode
    /// (`4=0.9,5=0.8`); target modes get a loss channel.
    #[arg(long, value_name = "SPEC")]
    pub eta: Option<String>,
    /// Dark-count probability of every herald detector.
    #[arg(long, value_name = "P")]
    pub dark: Option<f64>,
    /// Largest total photon number to simulate.
    #[arg(long, value_name = "N")]
    pub trunc: Option<usize>,
}

/// Per-mode efficiency overrides, or one value for all herald detectors.
#[derive(Clone, Debug, PartialEq)]
pub enum EtaSpec {
    All(f64),
    Modes(Vec<(usize, f64)>),
}

pub fn parse_eta(s: &str) -> CliResult<EtaSpec> {
    let bad = || CliError::invalid(format!("cannot parse --eta {s:?}; use 0.9 or mode=val,..."));
    if !s.contains('=') {
        return s.trim().parse().map(EtaSpec::All).map_err(|_| bad());
    }
    s.split(',')
        .map(|item| {
            let (m, v) = item.split_once('=').ok_or_else(bad)?;
            Ok((m.trim().parse().map_err(|_| bad())?, v.trim().parse().map_err(|_| bad())?))
        })
        .collect::<CliResult<Vec<_>>>()
        .map(EtaSpec::Modes)
}

impl DetectorArgs {
    pub fn is_default(&self) -> bool {
        !self.pnr && !self.threshold && self.fanout.is_none() && self.eta.is_none() && self.dark.is_none()
    }

    pub fn kind(&self) -> Option<DetectorKind> {
        if self.pnr {
            Some(DetectorKind::Pnr)
        } else if self.threshold {
            Some(DetectorKind::Threshold)
        } else {
            self.fanout.map(|branches| DetectorKind::Fanout { branches })
        }
    }

    /// Checks the truncation cap against the scheme's photon number.
    pub fn check_trunc(&self, photons: usize) -> CliResult<()> {
        if let Some(t) = self.trunc {
            if t > DEFAULT_MAX_PHOTONS {
                return Err(CliError::invalid(format!(
                    "--trunc {t} above the simulator limit of {DEFAULT_MAX_PHOTONS} photons"
                )));
            }
            if photons > t {
                return Err(CliError::Cap(format!("scheme has {photons} photons, --trunc is {t}")));
            }
        }
        Ok(())
    }

    /// The detection setup for `scheme`, or `None` when nothing is overridden.
    pub fn setup(&self, scheme: &SchemeDefinition) -> CliResult<Option<DetectionSetup>> {
        self.check_trunc(scheme.photons())?;
        if self.is_default() {
            return Ok(None);
        }
        let mut setup = scheme.default_setup();
        for d in &mut setup.detectors {
            if let Some(k) = self.kind() {
                d.kind = k;
            }
            if let Some(p) = self.dark {
                d.dark_count = p;
            }
        }
        match self.eta.as_deref().map(parse_eta).transpose()? {
            None => {}
            Some(EtaSpec::All(eta)) => setup.detectors.iter_mut().for_each(|d| d.efficiency = eta),
            Some(EtaSpec::Modes(list)) => {
                for (mode, eta) in list {
                    if mode >= scheme.modes {
                        return Err(CliError::invalid(format!(
                            "--eta mode {mode} outside a {}-mode scheme",
                            scheme.modes
                        )));
                    }
                    match scheme.herald.modes.iter().position(|&h| h == mode) {
                        Some(i) => setup.detectors[i].efficiency = eta,
                        None => setup.target_efficiency.push((mode, eta)),
                    }
                }
            }
        }
        for d in &setup.detectors {
            d.validate()?;
        }
        if let Some(&(m, e)) = setup.target_efficiency.iter().find(|(_, e)| !(0.0..=1.0).contains(e)) {
            return Err(CliError::invalid(format!("efficiency {e} for mode {m} outside [0,1]")));
        }
        Ok(Some(setup))
    }
}
