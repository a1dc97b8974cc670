//! Fock-basis states: occupation labels, sparse pure states and mixtures.
//!
//! Pure states are stored as sparse maps from [`ModeOccupation`] to complex
//! amplitudes. They are allowed to be subnormalized: after heralding, the
//! squared norm of a conditional state is the probability of the outcome that
//! produced it, and nothing in this crate renormalizes behind the caller's back.

mod correction;
mod register;
mod targets;

pub use correction::{best_corrected_fidelity, Correction, CorrectedFidelity};
pub use register::{
    decode_qubits, encode_digits, encode_qubits, Decoded, DualRailRegister, Register,
};
pub use targets::{
    fidelity, target_bell, target_ghz, target_noon, target_phi_alpha, target_qudit_bell,
    target_w, werner_ensemble, BellKind, Components, WernerParam,
};

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Photon counts per optical mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeOccupation(Vec<u8>);

impl ModeOccupation {
    pub fn new(counts: Vec<u8>) -> Self {
        Self(counts)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    /// Single photon in `mode`.
    pub fn single(modes: usize, mode: usize) -> Self {
        let mut v = vec![0; modes];
        v[mode] = 1;
        Self(v)
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for ModeOccupation {
    fn from(v: Vec<u8>) -> Self {
        Self(v)
    }
}

impl From<&[u8]> for ModeOccupation {
    fn from(v: &[u8]) -> Self {
        Self(v.to_vec())
    }
}

impl fmt::Debug for ModeOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 && self.0.iter().any(|&c| c > 9) {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Display for ModeOccupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A (possibly subnormalized) superposition of Fock basis states.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateRepr", try_from = "StateRepr")]
pub struct PureState {
    modes: usize,
    terms: BTreeMap<ModeOccupation, Complex64>,
}

impl PureState {
    /// The zero vector on `modes` modes.
    pub fn zero(modes: usize) -> Self {
        Self {
            modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::basis(ModeOccupation::vacuum(modes))
    }

    pub fn basis(occ: ModeOccupation) -> Self {
        let modes = occ.modes();
        let mut terms = BTreeMap::new();
        terms.insert(occ, Complex64::new(1.0, 0.0));
        Self { modes, terms }
    }

    /// Build from `(counts, amplitude)` pairs; repeated labels are summed.
    pub fn from_terms<I, O>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (O, Complex64)>,
        O: Into<ModeOccupation>,
    {
        let mut s = Self::zero(modes);
        for (occ, amp) in terms {
            s.add(occ.into(), amp)?;
        }
        Ok(s)
    }

    /// Real-amplitude convenience constructor.
    pub fn from_real<I>(modes: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, f64)>,
    {
        Self::from_terms(
            modes,
            terms
                .into_iter()
                .map(|(o, a)| (ModeOccupation::new(o), Complex64::new(a, 0.0))),
        )
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Adds `amp` to the coefficient of `occ`.
    pub fn add(&mut self, occ: ModeOccupation, amp: Complex64) -> Result<()> {
        if occ.modes() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                actual: occ.modes(),
            });
        }
        *self.terms.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
        Ok(())
    }

    pub(crate) fn add_unchecked(&mut self, occ: ModeOccupation, amp: Complex64) {
        debug_assert_eq!(occ.modes(), self.modes);
        *self.terms.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub fn amplitude(&self, occ: &ModeOccupation) -> Complex64 {
        self.terms
            .get(occ)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Amplitude of the basis state with the given counts.
    pub fn amp(&self, counts: &[u8]) -> Complex64 {
        self.amplitude(&ModeOccupation::from(counts))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ModeOccupation, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, a) in &small.terms {
            if let Some(b) = large.terms.get(occ) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    pub fn scaled(&self, factor: Complex64) -> PureState {
        PureState {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|(o, a)| (o.clone(), a * factor))
                .collect(),
        }
    }

    /// Unit-norm copy. The zero vector is returned unchanged.
    pub fn normalized(&self) -> PureState {
        let n = self.norm_sqr();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0))
    }

    /// Drops terms with |amplitude|² ≤ `tol`.
    pub fn pruned(&self, tol: f64) -> PureState {
        PureState {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .filter(|(_, a)| a.norm_sqr() > tol)
                .map(|(o, a)| (o.clone(), *a))
                .collect(),
        }
    }

    /// Keeps only terms satisfying `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&ModeOccupation) -> bool) -> PureState {
        PureState {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .filter(|(o, _)| keep(o))
                .map(|(o, a)| (o.clone(), *a))
                .collect(),
        }
    }

    /// Multiplies every term by `f(occupation)`.
    pub fn map_amplitudes(&self, mut f: impl FnMut(&ModeOccupation) -> Complex64) -> PureState {
        PureState {
            modes: self.modes,
            terms: self
                .terms
                .iter()
                .map(|(o, a)| (o.clone(), a * f(o)))
                .collect(),
        }
    }

    /// Relabels modes: term counts are moved so that old mode `i` becomes
    /// `mapping[i]` in a system of `new_modes` modes.
    pub fn relabel(&self, new_modes: usize, mapping: &[usize]) -> Result<PureState> {
        if mapping.len() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                actual: mapping.len(),
            });
        }
        let mut seen = vec![false; new_modes];
        for &m in mapping {
            if m >= new_modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    modes: new_modes,
                });
            }
            if seen[m] {
                return Err(Error::DuplicateMode(m));
            }
            seen[m] = true;
        }
        let mut out = PureState::zero(new_modes);
        for (occ, a) in &self.terms {
            let mut counts = vec![0u8; new_modes];
            for (i, &c) in occ.counts().iter().enumerate() {
                counts[mapping[i]] = c;
            }
            out.add_unchecked(ModeOccupation(counts), *a);
        }
        Ok(out)
    }

    /// Tensor product; `other`'s modes are appended after `self`'s.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut out = PureState::zero(self.modes + other.modes);
        for (oa, a) in &self.terms {
            for (ob, b) in &other.terms {
                let mut counts = oa.0.clone();
                counts.extend_from_slice(&ob.0);
                out.add_unchecked(ModeOccupation(counts), a * b);
            }
        }
        out
    }

    /// Projects `measured` modes onto the given photon counts and returns the
    /// (subnormalized) state of the remaining modes, in increasing mode order.
    pub fn project(&self, measured: &[usize], counts: &[u8]) -> Result<PureState> {
        if measured.len() != counts.len() {
            return Err(Error::LengthMismatch {
                expected: measured.len(),
                actual: counts.len(),
            });
        }
        let keep = complement_modes(self.modes, measured)?;
        let mut out = PureState::zero(keep.len());
        for (occ, a) in &self.terms {
            if measured
                .iter()
                .zip(counts)
                .all(|(&m, &c)| occ.0[m] == c)
            {
                let rest: Vec<u8> = keep.iter().map(|&k| occ.0[k]).collect();
                out.add_unchecked(ModeOccupation(rest), *a);
            }
        }
        Ok(out)
    }

    /// Splits the state by the photon counts found on `measured`, returning
    /// `pattern → conditional state on the complement`.
    pub fn split_by(&self, measured: &[usize]) -> Result<BTreeMap<Vec<u8>, PureState>> {
        let keep = complement_modes(self.modes, measured)?;
        let mut out: BTreeMap<Vec<u8>, PureState> = BTreeMap::new();
        for (occ, a) in &self.terms {
            let pattern: Vec<u8> = measured.iter().map(|&m| occ.0[m]).collect();
            let rest: Vec<u8> = keep.iter().map(|&k| occ.0[k]).collect();
            out.entry(pattern)
                .or_insert_with(|| PureState::zero(keep.len()))
                .add_unchecked(ModeOccupation(rest), *a);
        }
        Ok(out)
    }

    /// Set of total photon numbers present.
    pub fn photon_numbers(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.terms.keys().map(|o| o.total()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn max_photons(&self) -> usize {
        self.terms.keys().map(|o| o.total()).max().unwrap_or(0)
    }

    /// Photon-number distribution of one mode, `P(n)` indexed by `n`.
    pub fn mode_distribution(&self, mode: usize) -> Vec<f64> {
        let mut dist = Vec::new();
        for (occ, a) in &self.terms {
            let n = occ.0[mode] as usize;
            if dist.len() <= n {
                dist.resize(n + 1, 0.0);
            }
            dist[n] += a.norm_sqr();
        }
        dist
    }
}

/// Serialized form: `{"modes": m, "terms": [[[counts…], [re, im]], …]}`.
#[derive(Serialize, Deserialize)]
struct StateRepr {
    modes: usize,
    terms: Vec<(Vec<u8>, [f64; 2])>,
}

impl From<PureState> for StateRepr {
    fn from(s: PureState) -> Self {
        StateRepr {
            modes: s.modes,
            terms: s
                .terms
                .into_iter()
                .map(|(o, a)| (o.into_inner(), [a.re, a.im]))
                .collect(),
        }
    }
}

impl TryFrom<StateRepr> for PureState {
    type Error = Error;
    fn try_from(r: StateRepr) -> Result<Self> {
        PureState::from_terms(
            r.modes,
            r.terms
                .into_iter()
                .map(|(o, [re, im])| (ModeOccupation::new(o), Complex64::new(re, im))),
        )
    }
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (occ, a) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.4}{:+.4}i){occ:?}", a.re, a.im)?;
        }
        Ok(())
    }
}

/// Sorted complement of `measured` in `0..modes`, validating the indices.
pub(crate) fn complement_modes(modes: usize, measured: &[usize]) -> Result<Vec<usize>> {
    let mut mask = vec![false; modes];
    for &m in measured {
        if m >= modes {
            return Err(Error::ModeOutOfRange { mode: m, modes });
        }
        if mask[m] {
            return Err(Error::DuplicateMode(m));
        }
        mask[m] = true;
    }
    Ok((0..modes).filter(|&i| !mask[i]).collect())
}

/// A convex mixture of pure states, `ρ = Σ wᵢ |φᵢ⟩⟨φᵢ|`.
///
/// Components may be subnormalized; the probability carried by a component is
/// `wᵢ·‖φᵢ‖²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEnsemble {
    modes: usize,
    components: Vec<(f64, PureState)>,
}

impl StateEnsemble {
    pub fn empty(modes: usize) -> Self {
        Self {
            modes,
            components: Vec::new(),
        }
    }

    pub fn pure(state: PureState) -> Self {
        Self {
            modes: state.modes(),
            components: vec![(1.0, state)],
        }
    }

    pub fn from_components(modes: usize, components: Vec<(f64, PureState)>) -> Result<Self> {
        let mut e = Self::empty(modes);
        for (w, s) in components {
            e.push(w, s)?;
        }
        Ok(e)
    }

    pub fn push(&mut self, weight: f64, state: PureState) -> Result<()> {
        if !(weight >= 0.0) {
            return Err(Error::invalid(format!(
                "ensemble weight must be non-negative, got {weight}"
            )));
        }
        if state.modes() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                actual: state.modes(),
            });
        }
        self.components.push((weight, state));
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn components(&self) -> &[(f64, PureState)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Σ wᵢ‖φᵢ‖², the trace of the represented operator.
    pub fn trace(&self) -> f64 {
        self.components
            .iter()
            .map(|(w, s)| w * s.norm_sqr())
            .sum()
    }

    /// Rescales weights so the trace is one.
    pub fn normalized(&self) -> StateEnsemble {
        let t = self.trace();
        if t == 0.0 {
            return self.clone();
        }
        StateEnsemble {
            modes: self.modes,
            components: self
                .components
                .iter()
                .map(|(w, s)| (w / t, s.clone()))
                .collect(),
        }
    }

    /// Applies `f` to each component, concatenating the resulting mixtures.
    pub fn flat_map(
        &self,
        mut f: impl FnMut(&PureState) -> Result<StateEnsemble>,
    ) -> Result<StateEnsemble> {
        let mut out: Option<StateEnsemble> = None;
        for (w, s) in &self.components {
            let e = f(s)?;
            let acc = out.get_or_insert_with(|| StateEnsemble::empty(e.modes));
            for (w2, s2) in e.components {
                acc.push(w * w2, s2)?;
            }
        }
        Ok(out.unwrap_or_else(|| StateEnsemble::empty(self.modes)))
    }

    /// Photon-number distribution of one mode.
    pub fn mode_distribution(&self, mode: usize) -> Vec<f64> {
        let mut dist: Vec<f64> = Vec::new();
        for (w, s) in &self.components {
            let d = s.mode_distribution(mode);
            if dist.len() < d.len() {
                dist.resize(d.len(), 0.0);
            }
            for (i, p) in d.into_iter().enumerate() {
                dist[i] += w * p;
            }
        }
        dist
    }

    /// Probability mass on each total photon number.
    pub fn photon_number_distribution(&self) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (w, s) in &self.components {
            for (o, a) in s.terms() {
                *out.entry(o.total()).or_insert(0.0) += w * a.norm_sqr();
            }
        }
        out
    }
}

impl From<PureState> for StateEnsemble {
    fn from(s: PureState) -> Self {
        StateEnsemble::pure(s)
    }
}
