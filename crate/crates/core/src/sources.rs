//! Photon-pair and single-emitter source models and their figures of merit.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detect::{herald, DetectionSetup, DetectorModel, HeraldSpec};
use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, PureState, StateEnsemble};
use crate::interferometer::{compile, Circuit, Element};
use crate::propagate::{evolve_labeled, LabeledInput, LabeledPhoton};

/// Two-mode squeezed vacuum `Σₖ e^{ikθ} tanhᵏ|ξ| sech|ξ| |k,k⟩` truncated at
/// `n_max` pairs. Mode 0 is the signal, mode 1 the idler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TmsvSource {
    pub squeezing: f64,
    #[serde(default)]
    pub phase: f64,
    pub n_max: usize,
}

impl TmsvSource {
    pub fn new(squeezing: f64, phase: f64, n_max: usize) -> Result<Self> {
        if !(squeezing >= 0.0) || !squeezing.is_finite() {
            return Err(Error::invalid(format!("squeezing {squeezing} must be finite and ≥ 0")));
        }
        if n_max > u8::MAX as usize {
            return Err(Error::CapExceeded {
                what: "TMSV truncation",
                value: n_max,
                limit: u8::MAX as usize,
            });
        }
        Ok(Self {
            squeezing,
            phase,
            n_max,
        })
    }

    /// Probability of exactly `k` pairs, `sech²|ξ| tanh^{2k}|ξ|`.
    pub fn pair_probability(&self, k: usize) -> f64 {
        let t = self.squeezing.tanh();
        let s = 1.0 / self.squeezing.cosh();
        s * s * t.powi(2 * k as i32)
    }

    /// Weight beyond the truncation, `tanh^{2(n_max+1)}|ξ|`.
    pub fn truncation_error(&self) -> f64 {
        self.squeezing.tanh().powi(2 * (self.n_max as i32 + 1))
    }

    /// Mean photon number per arm of the untruncated state, `sinh²|ξ|`.
    pub fn mean_photons(&self) -> f64 {
        self.squeezing.sinh().powi(2)
    }
}

/// The truncated TMSV state.
pub fn tmsv_state(src: &TmsvSource) -> PureState {
    let t = src.squeezing.tanh();
    let s = 1.0 / src.squeezing.cosh();
    let mut st = PureState::zero(2);
    for k in 0..=src.n_max {
        let amp = Complex64::from_polar(s * t.powi(k as i32), k as f64 * src.phase);
        if amp.norm_sqr() > 0.0 {
            st.add(ModeOccupation::new(vec![k as u8, k as u8]), amp)
                .expect("two-mode occupation");
        }
    }
    st
}

/// Signal-arm output of a heralded pair source.
#[derive(Clone, Debug)]
pub struct HeraldedSignal {
    pub herald_prob: f64,
    /// Normalized single-mode signal state.
    pub signal: StateEnsemble,
}

/// Conditions the idler on the detector reporting one photon.
pub fn herald_single(src: &TmsvSource, det: DetectorModel) -> Result<HeraldedSignal> {
    let state = tmsv_state(src);
    let spec = HeraldSpec::patterns(vec![1], vec![vec![1]]);
    let r = herald(&state, &spec, &DetectionSetup::uniform(1, det))?;
    let signal = r.combined().normalized();
    Ok(HeraldedSignal {
        herald_prob: r.success_prob,
        signal,
    })
}

/// `⟨n(n−1)⟩/⟨n⟩²` of a photon-number distribution (`P(n)` indexed by `n`).
pub fn g2_from_distribution(p: &[f64]) -> f64 {
    let (mut m1, mut m2) = (0.0, 0.0);
    for (n, &q) in p.iter().enumerate() {
        let n = n as f64;
        m1 += n * q;
        m2 += n * (n - 1.0) * q;
    }
    if m1 == 0.0 {
        return f64::NAN;
    }
    m2 / (m1 * m1)
}

/// Heralded g² of one mode of a mixture.
pub fn g2_heralded(e: &StateEnsemble, mode: usize) -> f64 {
    g2_from_distribution(&e.mode_distribution(mode))
}

/// HOM visibility `|⟨φ₁|φ₂⟩|²` of two pure internal states.
pub fn hom_visibility(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("internal state is zero"));
    }
    let n = a.len().max(b.len());
    let zero = Complex64::new(0.0, 0.0);
    let ip: Complex64 = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(zero).conj() * b.get(i).copied().unwrap_or(zero))
        .sum();
    Ok((ip.norm_sqr() / (na * nb)).clamp(0.0, 1.0))
}

/// Joint spectral amplitude sampled on a (signal × idler) frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct JsaGrid {
    pub signal_axis: Vec<f64>,
    pub idler_axis: Vec<f64>,
    /// Rows follow the signal axis, columns the idler axis. Frobenius norm 1.
    pub values: DMatrix<Complex64>,
}

impl JsaGrid {
    /// Normalizes `values` to unit Frobenius norm.
    pub fn new(signal_axis: Vec<f64>, idler_axis: Vec<f64>, values: DMatrix<Complex64>) -> Result<Self> {
        if values.nrows() != signal_axis.len() || values.ncols() != idler_axis.len() {
            return Err(Error::invalid(format!(
                "JSA is {}x{} but axes have {} and {} points",
                values.nrows(),
                values.ncols(),
                signal_axis.len(),
                idler_axis.len()
            )));
        }
        let n = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("JSA has zero or non-finite norm"));
        }
        Ok(Self {
            signal_axis,
            idler_axis,
            values: values / Complex64::new(n, 0.0),
        })
    }

    /// Grid from an index-valued matrix (axes `0, 1, …`).
    pub fn from_matrix(values: DMatrix<Complex64>) -> Result<Self> {
        let s = (0..values.nrows()).map(|i| i as f64).collect();
        let i = (0..values.ncols()).map(|i| i as f64).collect();
        Self::new(s, i, values)
    }

    /// `exp(−(ωs+ωi)²/(2σ₊²) − (ωs−ωi)²/(2σ₋²))` on `n` points spanning
    /// `[−extent, extent]`. Equal widths give a separable (pure) JSA.
    pub fn double_gaussian(n: usize, extent: f64, sigma_plus: f64, sigma_minus: f64) -> Result<Self> {
        if n < 1 || !(sigma_plus > 0.0) || !(sigma_minus > 0.0) {
            return Err(Error::invalid("double-Gaussian needs n ≥ 1 and positive widths"));
        }
        let axis: Vec<f64> = (0..n)
            .map(|k| {
                if n == 1 {
                    0.0
                } else {
                    -extent + 2.0 * extent * k as f64 / (n - 1) as f64
                }
            })
            .collect();
        let values = DMatrix::from_fn(n, n, |a, b| {
            let (ws, wi) = (axis[a], axis[b]);
            let e = -(ws + wi).powi(2) / (2.0 * sigma_plus * sigma_plus)
                - (ws - wi).powi(2) / (2.0 * sigma_minus * sigma_minus);
            Complex64::new(e.exp(), 0.0)
        });
        Self::new(axis.clone(), axis, values)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// # comments are ignored
    /// signal,ω₀,ω₁,…
    /// idler,ω₀,ω₁,…
    /// re,im,re,im,…      (one row per signal point)
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let axis = |line: Option<&str>, name: &str| -> Result<Vec<f64>> {
            let line = line.ok_or_else(|| Error::Parse(format!("missing {name} axis line")))?;
            let mut fields = line.split(',').map(str::trim);
            if fields.next() != Some(name) {
                return Err(Error::Parse(format!("expected line starting with {name:?}")));
            }
            fields
                .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("{name} axis: {e}"))))
                .collect()
        };
        let signal = axis(lines.next(), "signal")?;
        let idler = axis(lines.next(), "idler")?;
        let mut data = Vec::with_capacity(signal.len() * idler.len());
        let mut rows = 0;
        for (r, line) in lines.enumerate() {
            let nums = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {r}: {e}")))?;
            if nums.len() != 2 * idler.len() {
                return Err(Error::Parse(format!(
                    "row {r} has {} numbers, expected {}",
                    nums.len(),
                    2 * idler.len()
                )));
            }
            data.extend(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])));
            rows += 1;
        }
        if rows != signal.len() {
            return Err(Error::Parse(format!(
                "{rows} data rows for {} signal points",
                signal.len()
            )));
        }
        let values = DMatrix::from_row_slice(signal.len(), idler.len(), &data);
        Self::new(signal, idler, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut out = format!("signal,{}\nidler,{}\n", join(&self.signal_axis), join(&self.idler_axis));
        for r in 0..self.values.nrows() {
            let row: Vec<String> = (0..self.values.ncols())
                .map(|c| format!("{},{}", self.values[(r, c)].re, self.values[(r, c)].im))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Joint spectral intensity `|JSA|²`.
    pub fn intensity(&self) -> DMatrix<f64> {
        self.values.map(|z| z.norm_sqr())
    }
}

/// Spectral figures of merit of a pair source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceMetrics {
    pub schmidt_number: f64,
    pub purity: f64,
    pub g2_unheralded: f64,
    /// Heralded g² of a reference pair source, when one is specified.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2_heralded: Option<f64>,
    /// Normalized Schmidt coefficients λᵢ (Σλᵢ² = 1), descending.
    pub schmidt_coefficients: Vec<f64>,
}

fn metrics_from_singular_values(sv: &[f64]) -> SourceMetrics {
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let mut lambdas: Vec<f64> = sv.iter().map(|s| s / total.sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let sum4: f64 = lambdas.iter().map(|l| l.powi(4)).sum();
    let k = 1.0 / sum4;
    SourceMetrics {
        schmidt_number: k,
        purity: 1.0 / k,
        g2_unheralded: 1.0 + 1.0 / k,
        g2_heralded: None,
        schmidt_coefficients: lambdas,
    }
}

/// Schmidt decomposition of the JSA by singular value decomposition.
pub fn schmidt_metrics(jsa: &JsaGrid) -> SourceMetrics {
    let sv = jsa.values.clone().svd(false, false).singular_values;
    metrics_from_singular_values(sv.as_slice())
}

impl SourceMetrics {
    /// Attaches the heralded g² of `src` heralded by `det`.
    pub fn with_heralded(mut self, src: &TmsvSource, det: DetectorModel) -> Result<Self> {
        let h = herald_single(src, det)?;
        self.g2_heralded = Some(g2_heralded(&h.signal, 0));
        Ok(self)
    }
}

/// Purity estimated from intensity alone: the entrywise square root of the
/// JSI is treated as a phase-free JSA. Spectral phase can only lower the true
/// purity below this estimate when the JSI is a product; in general the
/// estimate is not exact and must be read as a bound with that caveat.
pub fn jsi_purity_bound(jsi: &DMatrix<f64>) -> Result<f64> {
    if jsi.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::invalid("JSI entries must be finite and non-negative"));
    }
    let amp = jsi.map(|x| Complex64::new(x.sqrt(), 0.0));
    Ok(schmidt_metrics(&JsaGrid::from_matrix(amp)?).purity)
}

/// Quantum-dot style emitter described only by its figures of merit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleEmitter {
    /// Probability of emitting at least one photon per trigger.
    pub brightness: f64,
    /// Pairwise HOM visibility between successive photons.
    pub indistinguishability: f64,
    pub g2: f64,
}

impl SingleEmitter {
    pub fn new(brightness: f64, indistinguishability: f64, g2: f64) -> Result<Self> {
        for (name, v) in [("brightness", brightness), ("indistinguishability", indistinguishability)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} {v} outside [0,1]")));
            }
        }
        if !(g2 >= 0.0) {
            return Err(Error::invalid(format!("g2 {g2} must be ≥ 0")));
        }
        Ok(Self {
            brightness,
            indistinguishability,
            g2,
        })
    }

    /// Photon-number distribution `[P(0), P(1), P(2)]` per trigger, with the
    /// two-photon weight set to leading order by `g² ≈ 2P(2)/P(1)²`.
    pub fn number_distribution(&self) -> [f64; 3] {
        let p2 = (self.g2 * self.brightness * self.brightness / 2.0).min(self.brightness);
        let p1 = self.brightness - p2;
        [1.0 - self.brightness, p1, p2]
    }

    /// One photon per listed mode, each `√x|ξ₀⟩ + √(1−x)|ξᵢ⟩` with
    /// `x = √V` so that any two photons show HOM visibility `V`.
    pub fn labeled_photons(&self, modes: usize, inputs: &[usize]) -> Result<LabeledInput> {
        let x = self.indistinguishability.sqrt();
        let spec: Vec<(usize, f64)> = inputs.iter().map(|&m| (m, x)).collect();
        LabeledInput::obb(modes, &spec)
    }
}

/// Internal-state vector with the given overlap with `|ξ₀⟩`.
pub fn internal_with_overlap(overlap: f64) -> Vec<Complex64> {
    vec![
        Complex64::new(overlap, 0.0),
        Complex64::new((1.0 - overlap * overlap).max(0.0).sqrt(), 0.0),
    ]
}

/// Two photons on modes 0 and 1 whose internal states have HOM visibility `v`.
pub fn hom_pair(v: f64) -> Result<LabeledInput> {
    LabeledInput::new(
        2,
        vec![
            LabeledPhoton {
                mode: 0,
                internal: internal_with_overlap(1.0),
            },
            LabeledPhoton {
                mode: 1,
                internal: internal_with_overlap(v.clamp(0.0, 1.0).sqrt()),
            },
        ],
    )
}

/// Coincidence probability behind a balanced beam splitter for a pair with
/// visibility `v`.
pub fn hom_coincidence(v: f64) -> Result<f64> {
    let bs = compile(&Circuit::with_elements(2, vec![Element::bs50(0, 1)])?)?;
    let out = evolve_labeled(&hom_pair(v)?, &bs)?;
    Ok(out
        .components()
        .iter()
        .map(|(w, s)| w * s.amp(&[1, 1]).norm_sqr())
        .sum())
}
