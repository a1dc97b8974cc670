//! Exact multi-photon propagation through a mode unitary.
//!
//! The amplitude for input occupation `S` to reach output `T` is
//! `Per(U_{T,S}) / √(Π Sᵢ! Π Tⱼ!)`, where `U_{T,S}` repeats row `j` of the
//! unitary `Tⱼ` times and column `i` `Sᵢ` times.

mod labeled;
mod ns;
mod permanent;

pub use labeled::{evolve_labeled, LabeledInput, LabeledPhoton, MAX_INTERNAL_COMPONENTS};
pub use ns::{klm_ns_unitary, ns_gate_check, NsOutcome};
pub use permanent::{permanent, permanent_with_limit, DEFAULT_MAX_PERMANENT};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, PureState};
use crate::interferometer::UnitaryMatrix;

pub(crate) use permanent::glynn;

/// Default photon-number cap.
pub const DEFAULT_MAX_PHOTONS: usize = 12;
/// Default mode-count cap.
pub const DEFAULT_MAX_MODES: usize = 26;

/// Entries below this magnitude are treated as structural zeros when working
/// out which output modes a photon can reach.
const SUPPORT_EPS: f64 = 1e-15;

/// Limits and filters for [`evolve_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub max_photons: usize,
    pub max_modes: usize,
    /// Drop output terms with |amplitude|² at or below this value.
    pub amplitude_threshold: Option<f64>,
    /// Only produce outputs with these exact counts on these modes.
    pub fixed_outputs: Vec<(usize, u8)>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            max_photons: DEFAULT_MAX_PHOTONS,
            max_modes: DEFAULT_MAX_MODES,
            amplitude_threshold: None,
            fixed_outputs: Vec::new(),
        }
    }
}

impl EvolveOptions {
    pub fn with_fixed_outputs(mut self, fixed: Vec<(usize, u8)>) -> Self {
        self.fixed_outputs = fixed;
        self
    }
}

/// Evolves `state` through `u` with default caps.
pub fn evolve(state: &PureState, u: &UnitaryMatrix) -> Result<PureState> {
    evolve_with(state, u, &EvolveOptions::default())
}

pub(crate) fn sqrt_factorial_product(counts: &[u8]) -> f64 {
    let mut p = 1.0f64;
    for &c in counts {
        for k in 2..=c as u32 {
            p *= k as f64;
        }
    }
    p.sqrt()
}

/// All ways to place `n` photons into `k` slots, in lexicographically
/// decreasing order of the first slot.
pub(crate) fn compositions(n: usize, k: usize) -> Vec<Vec<u8>> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if k == 1 {
            prefix.push(n as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=n).rev() {
            prefix.push(first as u8);
            rec(n - first, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

pub(crate) fn check_caps(state: &PureState, u: &UnitaryMatrix, opts: &EvolveOptions) -> Result<()> {
    if state.modes() != u.dim() {
        return Err(Error::ModeMismatch {
            expected: u.dim(),
            actual: state.modes(),
        });
    }
    if u.dim() > opts.max_modes {
        return Err(Error::CapExceeded {
            what: "mode count",
            value: u.dim(),
            limit: opts.max_modes,
        });
    }
    let n = state.max_photons();
    let limit = opts.max_photons;
    if n > limit {
        return Err(Error::CapExceeded {
            what: "photon number",
            value: n,
            limit,
        });
    }
    for &(m, _) in &opts.fixed_outputs {
        if m >= u.dim() {
            return Err(Error::ModeOutOfRange {
                mode: m,
                modes: u.dim(),
            });
        }
    }
    Ok(())
}

struct InputTerm {
    cols: Vec<usize>,
    weight: Complex64,
}

/// Evolves `state` through `u`, honouring the caps and output filters in
/// `opts`. Results are independent of the thread count.
pub fn evolve_with(state: &PureState, u: &UnitaryMatrix, opts: &EvolveOptions) -> Result<PureState> {
    check_caps(state, u, opts)?;
    let m = u.dim();
    let mat = u.matrix();
    let mut by_n: BTreeMap<usize, Vec<InputTerm>> = BTreeMap::new();
    for (occ, amp) in state.terms() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let cols: Vec<usize> = occ
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
            .collect();
        by_n.entry(cols.len()).or_default().push(InputTerm {
            weight: amp / sqrt_factorial_product(occ.counts()),
            cols,
        });
    }

    let mut fixed_mask = vec![None; m];
    for &(mode, c) in &opts.fixed_outputs {
        fixed_mask[mode] = Some(c);
    }
    let fixed_total: usize = opts.fixed_outputs.iter().map(|&(_, c)| c as usize).sum();

    let mut out = PureState::zero(m);
    for (n, terms) in by_n {
        if n < fixed_total {
            continue;
        }
        let mut reach = vec![false; m];
        for t in &terms {
            for &c in &t.cols {
                for (r, slot) in reach.iter_mut().enumerate() {
                    if mat[(r, c)].norm() > SUPPORT_EPS {
                        *slot = true;
                    }
                }
            }
        }
        if opts
            .fixed_outputs
            .iter()
            .any(|&(mode, c)| c > 0 && !reach[mode])
        {
            continue;
        }
        let free: Vec<usize> = (0..m)
            .filter(|&r| reach[r] && fixed_mask[r].is_none())
            .collect();
        let outputs: Vec<Vec<u8>> = compositions(n - fixed_total, free.len())
            .into_iter()
            .map(|comp| {
                let mut counts = vec![0u8; m];
                for (&r, &c) in free.iter().zip(&comp) {
                    counts[r] = c;
                }
                for &(mode, c) in &opts.fixed_outputs {
                    counts[mode] = c;
                }
                counts
            })
            .collect();

        let amplitude = |counts: &Vec<u8>| -> Complex64 {
            let rows: Vec<usize> = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
                .collect();
            let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &terms {
                for (i, &r) in rows.iter().enumerate() {
                    for (j, &c) in t.cols.iter().enumerate() {
                        buf[i * n + j] = mat[(r, c)];
                    }
                }
                acc += t.weight * glynn(&buf, n);
            }
            acc / sqrt_factorial_product(counts)
        };

        let work = outputs.len() * terms.len() << n.min(20);
        let amps: Vec<Complex64> = if work > 1 << 14 {
            outputs.par_iter().map(amplitude).collect()
        } else {
            outputs.iter().map(amplitude).collect()
        };
        for (counts, a) in outputs.into_iter().zip(amps) {
            let keep = match opts.amplitude_threshold {
                Some(th) => a.norm_sqr() > th,
                None => a.norm_sqr() > 0.0,
            };
            if keep {
                out.add_unchecked(ModeOccupation::new(counts), a);
            }
        }
    }
    Ok(out)
}
