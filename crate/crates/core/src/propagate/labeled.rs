use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_caps, evolve_with, sqrt_factorial_product, EvolveOptions};
use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, PureState, StateEnsemble};
use crate::interferometer::UnitaryMatrix;

/// Most nonzero internal-basis components allowed per photon.
pub const MAX_INTERNAL_COMPONENTS: usize = 2;

/// A photon entering `mode` with the given internal (spectral, temporal, …)
/// state written in a shared orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPhoton {
    pub mode: usize,
    pub internal: Vec<Complex64>,
}

/// Single photons with internal degrees of freedom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledInput {
    modes: usize,
    photons: Vec<LabeledPhoton>,
}

impl LabeledInput {
    pub fn new(modes: usize, photons: Vec<LabeledPhoton>) -> Result<Self> {
        for p in &photons {
            if p.mode >= modes {
                return Err(Error::ModeOutOfRange {
                    mode: p.mode,
                    modes,
                });
            }
            let n: f64 = p.internal.iter().map(|z| z.norm_sqr()).sum();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "internal state of photon in mode {} has norm² {n}",
                    p.mode
                )));
            }
            let nonzero = p.internal.iter().filter(|z| z.norm_sqr() > 0.0).count();
            if nonzero > MAX_INTERNAL_COMPONENTS {
                return Err(Error::CapExceeded {
                    what: "internal components per photon",
                    value: nonzero,
                    limit: MAX_INTERNAL_COMPONENTS,
                });
            }
        }
        Ok(Self { modes, photons })
    }

    /// Orthogonal-bad-bits model: photon `i` is `√xᵢ|ξ₀⟩ + √(1−xᵢ)|ξᵢ₊₁⟩`,
    /// so two such photons have internal overlap `√(xᵢxⱼ)`.
    pub fn obb(modes: usize, photons: &[(usize, f64)]) -> Result<Self> {
        let labels = photons.len() + 1;
        let list = photons
            .iter()
            .enumerate()
            .map(|(i, &(mode, x))| {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::invalid(format!("OBB weight {x} outside [0,1]")));
                }
                let mut v = vec![Complex64::new(0.0, 0.0); labels];
                v[0] = Complex64::new(x.sqrt(), 0.0);
                v[i + 1] = Complex64::new((1.0 - x).sqrt(), 0.0);
                Ok(LabeledPhoton { mode, internal: v })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(modes, list)
    }

    /// Perfectly indistinguishable photons placed as in `occ`.
    pub fn identical(occ: &ModeOccupation) -> Self {
        let photons = occ
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(m, &c)| {
                std::iter::repeat(LabeledPhoton {
                    mode: m,
                    internal: vec![Complex64::new(1.0, 0.0)],
                })
                .take(c as usize)
            })
            .collect();
        Self {
            modes: occ.modes(),
            photons,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn photons(&self) -> &[LabeledPhoton] {
        &self.photons
    }
}

/// Evolves partially distinguishable photons through `u`.
///
/// Each photon is expanded over the internal basis; photons sharing a label
/// interfere through `u` coherently. The result is returned in mode space as a
/// mixture: one component per label-count sector and per output placement of
/// the photons outside the sector's most populated label. Photon-number
/// statistics in mode space, and hence all detection probabilities, are exact;
/// coherences between placements of the minority labels are dropped.
pub fn evolve_labeled(input: &LabeledInput, u: &UnitaryMatrix) -> Result<StateEnsemble> {
    let m = input.modes;
    let opts = EvolveOptions::default();
    check_caps(&PureState::zero(m), u, &opts)?;
    let n = input.photons.len();
    if n > opts.max_photons {
        return Err(Error::CapExceeded {
            what: "photon number",
            value: n,
            limit: opts.max_photons,
        });
    }
    let labels = input
        .photons
        .iter()
        .map(|p| p.internal.len())
        .max()
        .unwrap_or(1);

    // Extended occupation: label-major blocks of m modes each.
    let mut coeffs: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
    let choices: Vec<Vec<(usize, Complex64)>> = input
        .photons
        .iter()
        .map(|p| {
            p.internal
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm_sqr() > 0.0)
                .map(|(l, z)| (l, *z))
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; n];
    loop {
        let mut ext = vec![0u8; labels * m];
        let mut c = Complex64::new(1.0, 0.0);
        for (p, &k) in idx.iter().enumerate() {
            let (l, z) = choices[p][k];
            ext[l * m + input.photons[p].mode] += 1;
            c *= z;
        }
        *coeffs.entry(ext).or_insert(Complex64::new(0.0, 0.0)) += c;
        let mut p = 0;
        loop {
            if p == n {
                break;
            }
            idx[p] += 1;
            if idx[p] < choices[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
        if p == n {
            break;
        }
    }
    let mut norm = 0.0;
    let amps: Vec<(Vec<u8>, Complex64)> = coeffs
        .into_iter()
        .map(|(ext, c)| {
            let a = c * sqrt_factorial_product(&ext);
            norm += a.norm_sqr();
            (ext, a)
        })
        .collect();
    if norm == 0.0 {
        return Err(Error::invalid("labeled input state vanishes"));
    }
    let scale = 1.0 / norm.sqrt();

    let mut cache: HashMap<Vec<u8>, PureState> = HashMap::new();
    let mut species = |occ: &[u8]| -> Result<PureState> {
        if let Some(s) = cache.get(occ) {
            return Ok(s.clone());
        }
        let s = evolve_with(&PureState::basis(ModeOccupation::from(occ)), u, &opts)?;
        cache.insert(occ.to_vec(), s.clone());
        Ok(s)
    };

    // sector → extended output amplitudes
    let mut sectors: BTreeMap<Vec<usize>, BTreeMap<Vec<u8>, Complex64>> = BTreeMap::new();
    for (ext, a) in amps {
        let sector: Vec<usize> = (0..labels)
            .map(|l| ext[l * m..(l + 1) * m].iter().map(|&c| c as usize).sum())
            .collect();
        let mut partial: Vec<(Vec<u8>, Complex64)> = vec![(Vec::new(), a * scale)];
        for l in 0..labels {
            let out = species(&ext[l * m..(l + 1) * m])?;
            let mut next = Vec::with_capacity(partial.len() * out.len());
            for (prefix, pa) in &partial {
                for (o, oa) in out.terms() {
                    let mut k = prefix.clone();
                    k.extend_from_slice(o.counts());
                    next.push((k, pa * oa));
                }
            }
            partial = next;
        }
        let bucket = sectors.entry(sector).or_default();
        for (k, v) in partial {
            *bucket.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
    }

    let mut ens = StateEnsemble::empty(m);
    for (sector, outputs) in sectors {
        let reference = sector
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map_or(0, |(l, _)| l);
        let mut groups: BTreeMap<Vec<u8>, PureState> = BTreeMap::new();
        for (ext, a) in outputs {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut key = Vec::with_capacity((labels - 1) * m);
            let mut summed = vec![0u8; m];
            for l in 0..labels {
                let block = &ext[l * m..(l + 1) * m];
                if l != reference {
                    key.extend_from_slice(block);
                }
                for (s, &c) in summed.iter_mut().zip(block) {
                    *s += c;
                }
            }
            groups
                .entry(key)
                .or_insert_with(|| PureState::zero(m))
                .add_unchecked(ModeOccupation::new(summed), a);
        }
        for (_, s) in groups {
            ens.push(1.0, s)?;
        }
    }
    Ok(ens)
}
