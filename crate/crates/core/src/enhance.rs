//! Success-probability enhancement: multiplexing, fusion, entanglement
//! swapping, bleeding, W-type distillation and boosting.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::detect::{apply_loss_ensemble, herald, Acceptance, DetectionSetup, HeraldSpec};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::fock::{
    fidelity, target_bell, BellKind, Components, ModeOccupation, PureState, Register,
    StateEnsemble,
};
use crate::interferometer::{compile, Circuit, Element, UnitaryMatrix};
use crate::propagate::evolve;

/// Probability that at least one of `n` independent attempts succeeds.
pub fn multiplex(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // ln1p/expm1 keep precision when p is tiny.
    -((n as f64) * (-p).ln_1p()).exp_m1()
}

pub fn multiplex_exact(p: &Rational, n: u64) -> Rational {
    Rational::one() - exact::pow(&(Rational::one() - p), n as i64)
}

/// One herald outcome of a fusion measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FusionOutcome {
    pub pattern: Vec<u8>,
    pub probability: f64,
    pub success: bool,
    /// The Bell state of the fused pair selected by this pattern (type II),
    /// or the parity sign (type I).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Subnormalized conditional state on the unmeasured modes.
    pub state: StateEnsemble,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FusionResult {
    /// Original indices of the modes the conditional states live on.
    pub remaining_modes: Vec<usize>,
    pub outcomes: Vec<FusionOutcome>,
}

impl FusionResult {
    pub fn success_prob(&self) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| o.success)
            .map(|o| o.probability)
            .sum()
    }

    pub fn total_prob(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }

    pub fn successes(&self) -> impl Iterator<Item = &FusionOutcome> {
        self.outcomes.iter().filter(|o| o.success)
    }
}

fn evolve_components(state: &StateEnsemble, u: &UnitaryMatrix) -> Result<StateEnsemble> {
    let mut out = StateEnsemble::empty(state.modes());
    for (w, s) in state.components() {
        out.push(*w, evolve(s, u)?)?;
    }
    Ok(out)
}

fn measure_all(
    state: &StateEnsemble,
    measured: Vec<usize>,
    setup: Option<&DetectionSetup>,
) -> Result<crate::detect::HeraldResult> {
    let k = measured.len();
    let spec = HeraldSpec::new(measured, Acceptance::All);
    let ideal = DetectionSetup::ideal(k);
    herald(state, &spec, setup.unwrap_or(&ideal))
}

fn check_qubit(q: (usize, usize), modes: usize) -> Result<()> {
    for m in [q.0, q.1] {
        if m >= modes {
            return Err(Error::ModeOutOfRange { mode: m, modes });
        }
    }
    Ok(())
}

fn type2_circuit(modes: usize, a: (usize, usize), b: (usize, usize)) -> Result<Circuit> {
    Circuit::with_elements(
        modes,
        vec![Element::bs(a.0, b.0, FRAC_PI_4, 0.0), Element::bs(a.1, b.1, FRAC_PI_4, 0.0)],
    )
}

fn type2_success(p: &[u8]) -> bool {
    p[0] + p[1] == 1 && p[2] + p[3] == 1
}

/// Bell state of the fused pair that produces each successful type-II
/// pattern, found by sending each Bell state through the analyser.
fn type2_tags() -> Result<BTreeMap<Vec<u8>, BellKind>> {
    let u = compile(&type2_circuit(4, (0, 1), (2, 3))?)?;
    let reg = Register::qubits(2);
    let mut tags = BTreeMap::new();
    for kind in BellKind::ALL {
        let out = evolve(&target_bell(kind, &reg)?, &u)?;
        for (occ, a) in out.terms() {
            let c = occ.counts();
            let pattern = vec![c[0], c[2], c[1], c[3]];
            if a.norm_sqr() > 1e-12 && type2_success(&pattern) {
                tags.insert(pattern, kind);
            }
        }
    }
    Ok(tags)
}

/// Type-II fusion: the dual-rail Bell state analyser. Rails `a.i` and `b.i`
/// meet on a 50:50 beam splitter and all four outputs are detected. Success is
/// one photon on the rail-0 pair and one on the rail-1 pair, which identifies
/// Ψ+ or Ψ−. Patterns are ordered `[a0, b0, a1, b1]`.
pub fn fusion_type2(
    state: &impl Components,
    a: (usize, usize),
    b: (usize, usize),
) -> Result<FusionResult> {
    fusion_type2_with(state, a, b, None)
}

pub fn fusion_type2_with(
    state: &impl Components,
    a: (usize, usize),
    b: (usize, usize),
    setup: Option<&DetectionSetup>,
) -> Result<FusionResult> {
    let modes = state.modes();
    check_qubit(a, modes)?;
    check_qubit(b, modes)?;
    let e = to_ensemble(state)?;
    let u = compile(&type2_circuit(modes, a, b)?)?;
    let out = evolve_components(&e, &u)?;
    let r = measure_all(&out, vec![a.0, b.0, a.1, b.1], setup)?;
    let tags = type2_tags()?;
    let outcomes = r
        .patterns
        .iter()
        .map(|p| {
            let success = type2_success(&p.pattern);
            FusionOutcome {
                pattern: p.pattern.clone(),
                probability: p.probability,
                success,
                tag: tags.get(&p.pattern).map(|k| k.label().to_string()),
                state: p.ensemble(r.target_modes.len()),
            }
        })
        .collect();
    Ok(FusionResult {
        remaining_modes: r.target_modes,
        outcomes,
    })
}

/// Type-I fusion: the rail-1 modes of the two qubits are swapped and the
/// second qubit's modes are measured in the diagonal basis. Success is a
/// single photon there; qubit `a` survives and carries the parity of both.
/// Patterns are ordered `[b0, b1]`.
pub fn fusion_type1(
    state: &impl Components,
    a: (usize, usize),
    b: (usize, usize),
) -> Result<FusionResult> {
    let modes = state.modes();
    check_qubit(a, modes)?;
    check_qubit(b, modes)?;
    let e = to_ensemble(state)?;
    let c = Circuit::with_elements(
        modes,
        vec![
            Element::swap(a.1, b.1),
            Element::bs(b.0, b.1, FRAC_PI_4, -std::f64::consts::FRAC_PI_2),
        ],
    )?;
    let out = evolve_components(&e, &compile(&c)?)?;
    let r = measure_all(&out, vec![b.0, b.1], None)?;
    let outcomes = r
        .patterns
        .iter()
        .map(|p| {
            let success = p.pattern[0] + p.pattern[1] == 1;
            FusionOutcome {
                pattern: p.pattern.clone(),
                probability: p.probability,
                success,
                tag: success.then(|| if p.pattern[0] == 1 { "+" } else { "-" }.to_string()),
                state: p.ensemble(r.target_modes.len()),
            }
        })
        .collect();
    Ok(FusionResult {
        remaining_modes: r.target_modes,
        outcomes,
    })
}

fn to_ensemble(state: &impl Components) -> Result<StateEnsemble> {
    StateEnsemble::from_components(
        state.modes(),
        state.weighted().into_iter().map(|(w, s)| (w, s.clone())).collect(),
    )
}

/// A successful swap outcome and the Bell state it leaves on (A, D).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwapOutcome {
    pub pattern: Vec<u8>,
    pub probability: f64,
    pub bell: BellKind,
    pub fidelity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwapResult {
    pub success_prob: f64,
    pub outcomes: Vec<SwapOutcome>,
}

/// Entanglement swapping of two Bell pairs.
pub fn entanglement_swap(ab: BellKind, cd: BellKind, eta: f64) -> Result<SwapResult> {
    let reg = Register::qubits(2);
    entanglement_swap_states(&target_bell(ab, &reg)?, &target_bell(cd, &reg)?, eta)
}

/// Entanglement swapping of two two-qubit dual-rail states on modes
/// `A=(0,1), B=(2,3)` and `C=(0,1), D=(2,3)`. Modes of B and C pass through
/// transmissivity `eta` before a type-II fusion. Each successful pattern is
/// reported with the Bell state of highest fidelity on (A, D).
pub fn entanglement_swap_states(ab: &PureState, cd: &PureState, eta: f64) -> Result<SwapResult> {
    for s in [ab, cd] {
        if s.modes() != 4 {
            return Err(Error::ModeMismatch {
                expected: 4,
                actual: s.modes(),
            });
        }
    }
    let mut e = StateEnsemble::pure(ab.tensor(cd));
    if eta != 1.0 {
        for m in 2..6 {
            e = apply_loss_ensemble(&e, m, eta)?;
        }
    }
    let fused = fusion_type2(&e, (2, 3), (4, 5))?;
    let reg = Register::qubits(2);
    let targets: Vec<(BellKind, PureState)> = BellKind::ALL
        .iter()
        .map(|&k| Ok((k, target_bell(k, &reg)?)))
        .collect::<Result<_>>()?;
    let mut outcomes = Vec::new();
    for o in fused.successes() {
        if o.probability <= 0.0 {
            continue;
        }
        let mut best = (BellKind::PhiPlus, -1.0);
        for (k, t) in &targets {
            let f = fidelity(&o.state, t)?;
            if f > best.1 {
                best = (*k, f);
            }
        }
        outcomes.push(SwapOutcome {
            pattern: o.pattern.clone(),
            probability: o.probability,
            bell: best.0,
            fidelity: best.1,
        });
    }
    Ok(SwapResult {
        success_prob: fused.success_prob(),
        outcomes,
    })
}

/// Weak-detection operator for one bleeding stage. Entry `i` of the pattern
/// is the number of photons detected from mode `i` after a 50:50 tap:
/// `M₍ₖ₎ = âᵏ/√k! · 2^{−n̂/2}`, so `M₍₀₎ = 2^{−n̂/2}` and `M₍₁₎ = â 2^{−n̂/2}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementOperator {
    pub pattern: Vec<u8>,
}

/// Matrix element `⟨n−k|M₍ₖ₎|n⟩ = √C(n,k) 2^{−n/2}`.
fn tap_amplitude(n: u8, k: u8) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0;
    for i in 0..k as u32 {
        c = c * (n as u32 - i) as f64 / (i + 1) as f64;
    }
    c.sqrt() * 2f64.powf(-(n as f64) / 2.0)
}

impl MeasurementOperator {
    pub fn new(pattern: Vec<u8>) -> Self {
        Self { pattern }
    }

    pub fn vacuum(modes: usize) -> Self {
        Self::new(vec![0; modes])
    }

    /// Single-mode matrix of `M₍ₖ₎` on the number basis `0..=trunc`.
    pub fn single_mode_matrix(k: u8, trunc: usize) -> DMatrix<f64> {
        DMatrix::from_fn(trunc + 1, trunc + 1, |r, c| {
            if c >= r && c - r == k as usize {
                tap_amplitude(c as u8, k)
            } else {
                0.0
            }
        })
    }

    /// Kronecker product of the single-mode matrices (mode 0 most significant).
    pub fn matrix(&self, trunc: usize) -> DMatrix<f64> {
        self.pattern.iter().fold(DMatrix::from_element(1, 1, 1.0), |acc, &k| {
            acc.kronecker(&Self::single_mode_matrix(k, trunc))
        })
    }

    /// Applies the operator to `modes` of `state`.
    pub fn apply(&self, state: &PureState, modes: &[usize]) -> Result<PureState> {
        if modes.len() != self.pattern.len() {
            return Err(Error::LengthMismatch {
                expected: self.pattern.len(),
                actual: modes.len(),
            });
        }
        for &m in modes {
            if m >= state.modes() {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    modes: state.modes(),
                });
            }
        }
        let mut out = PureState::zero(state.modes());
        for (occ, a) in state.terms() {
            let mut counts = occ.counts().to_vec();
            let mut f = 1.0;
            for (&m, &k) in modes.iter().zip(&self.pattern) {
                f *= tap_amplitude(counts[m], k);
                if f == 0.0 {
                    break;
                }
                counts[m] -= k;
            }
            if f != 0.0 {
                out.add_unchecked(ModeOccupation::new(counts), a * f);
            }
        }
        Ok(out)
    }
}

/// Success of a bleeding run, per round and accumulated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BleedResult {
    pub per_round: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Accepted branches: detection record per round and the subnormalized
    /// conditional state of the target modes.
    pub branches: Vec<BleedBranch>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BleedBranch {
    pub round: usize,
    pub record: Vec<Vec<u8>>,
    pub probability: f64,
    pub state: StateEnsemble,
}

/// Configuration of a bleeding protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BleedConfig {
    pub herald_modes: Vec<usize>,
    /// Photons that must be detected in total.
    pub required: usize,
    /// Largest photon number a single detector may register in one round
    /// (1 for detectors that cannot resolve bunching).
    pub max_per_detector: u8,
    pub max_rounds: usize,
}

/// Repeated weak detection on the herald modes. Rounds `1..max_rounds` tap
/// each herald mode with a 50:50 splitter and detect the tapped light; the
/// last round detects everything left. A run stops as soon as `required`
/// photons have been seen and fails if more are seen or a detector receives
/// more than `max_per_detector` photons in one round. With `max_rounds = 1`
/// this is plain heralding on every pattern with entries at most
/// `max_per_detector` summing to `required`.
pub fn bleed(state: &PureState, cfg: &BleedConfig) -> Result<BleedResult> {
    if cfg.max_rounds == 0 {
        return Err(Error::invalid("bleeding needs at least one round"));
    }
    if cfg.herald_modes.is_empty() || cfg.required == 0 {
        return Err(Error::Scheme(
            "bleeding needs herald modes and a nonzero photon requirement".into(),
        ));
    }
    let spec = HeraldSpec::new(cfg.herald_modes.clone(), Acceptance::All);
    spec.validate(state.modes())?;
    let target_modes = state.modes() - cfg.herald_modes.len();

    // Live branches: (record, detected so far, state on all modes).
    let mut live: Vec<(Vec<Vec<u8>>, usize, PureState)> = vec![(Vec::new(), 0, state.clone())];
    let mut per_round = Vec::with_capacity(cfg.max_rounds);
    let mut branches = Vec::new();
    for round in 1..=cfg.max_rounds {
        let last = round == cfg.max_rounds;
        let mut next = Vec::new();
        let mut succeeded = 0.0;
        for (record, seen, st) in live {
            for (pattern, post) in tap_branches(&st, &cfg.herald_modes, last) {
                let got: usize = pattern.iter().map(|&k| k as usize).sum();
                let total = seen + got;
                if total > cfg.required || pattern.iter().any(|&k| k > cfg.max_per_detector) {
                    continue;
                }
                let mut rec = record.clone();
                rec.push(pattern);
                if total == cfg.required {
                    let e = trace_herald(&post, &cfg.herald_modes, target_modes)?;
                    let p = e.trace();
                    succeeded += p;
                    branches.push(BleedBranch {
                        round,
                        record: rec,
                        probability: p,
                        state: e,
                    });
                } else if !last {
                    next.push((rec, total, post));
                }
            }
        }
        per_round.push(succeeded);
        live = next;
    }
    let cumulative = per_round
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    Ok(BleedResult {
        per_round,
        cumulative,
        branches,
    })
}

/// Splits `state` by the photons detected in one round. A full round detects
/// every herald photon.
fn tap_branches(state: &PureState, herald: &[usize], full: bool) -> Vec<(Vec<u8>, PureState)> {
    let mut out: BTreeMap<Vec<u8>, PureState> = BTreeMap::new();
    for (occ, a) in state.terms() {
        let ns: Vec<u8> = herald.iter().map(|&m| occ.get(m)).collect();
        let choices: Vec<Vec<u8>> = if full {
            vec![ns.clone()]
        } else {
            ns.iter().fold(vec![vec![]], |acc, &n| {
                acc.into_iter()
                    .flat_map(|p| {
                        (0..=n).map(move |k| {
                            let mut p = p.clone();
                            p.push(k);
                            p
                        })
                    })
                    .collect()
            })
        };
        for pattern in choices {
            let mut counts = occ.counts().to_vec();
            let mut f = 1.0;
            for ((&m, &k), &n) in herald.iter().zip(&pattern).zip(&ns) {
                if !full {
                    f *= tap_amplitude(n, k);
                }
                counts[m] -= k;
            }
            out.entry(pattern)
                .or_insert_with(|| PureState::zero(state.modes()))
                .add_unchecked(ModeOccupation::new(counts), a * f);
        }
    }
    out.into_iter().collect()
}

/// Target-mode mixture left after discarding the (unobserved) herald modes.
fn trace_herald(state: &PureState, herald: &[usize], target_modes: usize) -> Result<StateEnsemble> {
    let mut e = StateEnsemble::empty(target_modes);
    for (_, s) in state.split_by(herald)? {
        let n = s.norm_sqr();
        if n > 0.0 {
            e.push(n, s.normalized())?;
        }
    }
    Ok(e)
}

/// Outcome of W-type distillation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Distilled {
    /// Probability of heralding vacuum on the ancilla.
    pub probability: f64,
    /// Subnormalized output on four modes, dual rail `[(0,1),(2,3)]`.
    pub state: PureState,
    /// Fidelity of the output with Φ+.
    pub fidelity: f64,
}

/// Beam-splitter angle that balances `a|2000⟩` against the other three
/// terms of `a|2000⟩ + b(|0200⟩ + |0020⟩ + |0002⟩)`: `cos²θ = |b|/|a|`.
pub fn distill_optimal_theta(state: &PureState) -> Result<f64> {
    let a = state.amp(&[2, 0, 0, 0]).norm();
    let b = state.amp(&[0, 2, 0, 0]).norm();
    if a == 0.0 || b > a {
        return Err(Error::invalid(
            "distillation needs a dominant |2000⟩ term to damp",
        ));
    }
    Ok((b / a).sqrt().acos())
}

/// Damps the `|2000⟩` weight of a four-mode W-type state by coupling mode 0
/// to a vacuum ancilla through `BS(θ)` and heralding the ancilla empty, then
/// maps `Σᵢ aᵢ†²` to `Φ+` with the network `(1/√2)[[1, i], [1, −i]]` on the
/// mode pairs (0, 2) and (1, 3).
pub fn distill_w_type(state: &PureState, theta: f64) -> Result<Distilled> {
    if state.modes() != 4 {
        return Err(Error::ModeMismatch {
            expected: 4,
            actual: state.modes(),
        });
    }
    let with_anc = state.tensor(&PureState::vacuum(1));
    let damp = compile(&Circuit::with_elements(5, vec![Element::bs(0, 4, theta, 0.0)])?)?;
    let kept = evolve(&with_anc, &damp)?.project(&[4], &[0])?;
    let probability = kept.norm_sqr();
    let s = 0.5f64.sqrt();
    let i = Complex64::new(0.0, s);
    let v = UnitaryMatrix::new(DMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(s, 0.0), i, Complex64::new(s, 0.0), -i],
    ))?;
    let net = compile(&Circuit::with_elements(
        4,
        vec![
            Element::Unitary {
                modes: vec![0, 2],
                matrix: v.clone(),
            },
            Element::Unitary {
                modes: vec![1, 3],
                matrix: v,
            },
        ],
    )?)?;
    let out = evolve(&kept, &net)?;
    let target = target_bell(BellKind::PhiPlus, &Register::qubits(2))?;
    let fidelity = if probability > 0.0 {
        crate::fock::fidelity(&out, &target)?
    } else {
        0.0
    };
    Ok(Distilled {
        probability,
        state: out,
        fidelity,
    })
}

/// Ancilla supplied to a Bell-state measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsmAncilla {
    None,
    Bell,
}

/// Success probability of a linear-optical Bell-state measurement.
pub fn boosted_bsm_success(ancilla: BsmAncilla) -> Rational {
    match ancilla {
        BsmAncilla::None => exact::ratio(1, 2),
        BsmAncilla::Bell => exact::ratio(3, 4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{best_corrected_fidelity, encode_qubits, target_ghz, Correction};
    use proptest::prelude::*;

    fn bell_pair(kind: BellKind) -> PureState {
        target_bell(kind, &Register::qubits(2)).unwrap()
    }

    #[test]
    fn multiplex_examples() {
        assert!((multiplex(0.5, 2) - 0.75).abs() < 1e-15);
        assert_eq!(multiplex(0.3, 1), 0.3);
        let p = multiplex(2.0 / 27.0, 50);
        assert!((p - (1.0 - (25.0f64 / 27.0).powi(50))).abs() < 1e-12);
        assert!((p - 0.9787).abs() < 1e-4);
        let ex = multiplex_exact(&exact::ratio(1, 2), 3);
        assert_eq!(ex, exact::ratio(7, 8));
    }

    #[test]
    fn type2_on_bell_pairs() {
        for k1 in BellKind::ALL {
            for k2 in BellKind::ALL {
                let s = bell_pair(k1).tensor(&bell_pair(k2));
                let r = fusion_type2(&s, (2, 3), (4, 5)).unwrap();
                assert!((r.success_prob() - 0.5).abs() < 1e-12, "{k1:?} {k2:?}");
                assert!((r.total_prob() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn type2_tags_cover_psi_only() {
        let tags = type2_tags().unwrap();
        assert_eq!(tags.len(), 4);
        let kinds: std::collections::BTreeSet<&str> = tags.values().map(|k| k.label()).collect();
        assert_eq!(kinds.len(), 2);
        assert!(tags
            .values()
            .all(|k| matches!(k, BellKind::PsiPlus | BellKind::PsiMinus)));
    }

    #[test]
    fn type2_fusion_swaps_entanglement() {
        let s = bell_pair(BellKind::PhiPlus).tensor(&bell_pair(BellKind::PhiPlus));
        let r = fusion_type2(&s, (2, 3), (4, 5)).unwrap();
        assert_eq!(r.remaining_modes, vec![0, 1, 6, 7]);
        let reg = Register::qubits(2);
        let phi = target_bell(BellKind::PhiPlus, &reg).unwrap();
        for o in r.successes().filter(|o| o.probability > 0.0) {
            let c = best_corrected_fidelity(&o.state, &phi, &reg, Correction::Paulis).unwrap();
            assert!((c.fidelity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn type2_on_product_leaves_product() {
        let reg = Register::qubits(4);
        let s = encode_qubits("0000", &reg).unwrap();
        let r = fusion_type2(&s, (2, 3), (4, 5)).unwrap();
        // |0⟩|0⟩ on the fused pair never shows one photon per rail pair.
        assert_eq!(r.success_prob(), 0.0);
        let s = encode_qubits("0010", &reg).unwrap();
        let r = fusion_type2(&s, (2, 3), (4, 5)).unwrap();
        assert!((r.success_prob() - 1.0).abs() < 1e-12);
        let out = Register::qubits(2);
        for o in r.successes() {
            for k in BellKind::ALL {
                let f = fidelity(&o.state, &target_bell(k, &out).unwrap()).unwrap();
                assert!(f <= 0.5 + 1e-12);
            }
        }
    }

    #[test]
    fn type1_builds_ghz() {
        let s = bell_pair(BellKind::PhiPlus).tensor(&bell_pair(BellKind::PhiPlus));
        let r = fusion_type1(&s, (2, 3), (4, 5)).unwrap();
        assert!((r.success_prob() - 0.5).abs() < 1e-12);
        assert!((r.total_prob() - 1.0).abs() < 1e-12);
        let reg = Register::qubits(3);
        let ghz = target_ghz(3, 2, &reg).unwrap();
        for o in r.successes() {
            let c = best_corrected_fidelity(&o.state, &ghz, &reg, Correction::Paulis).unwrap();
            assert!((c.fidelity - 1.0).abs() < 1e-12);
        }
        let fail: f64 = r.outcomes.iter().filter(|o| !o.success).map(|o| o.state.trace()).sum();
        assert!((fail - 0.5).abs() < 1e-12);
    }

    #[test]
    fn swap_under_loss() {
        let ideal = entanglement_swap(BellKind::PhiPlus, BellKind::PhiPlus, 1.0).unwrap();
        assert!((ideal.success_prob - 0.5).abs() < 1e-12);
        for eta in [0.8, 0.5] {
            let r = entanglement_swap(BellKind::PhiPlus, BellKind::PhiPlus, eta).unwrap();
            assert!((r.success_prob - 0.5 * eta * eta).abs() < 1e-12);
            for (a, b) in ideal.outcomes.iter().zip(&r.outcomes) {
                assert_eq!(a.pattern, b.pattern);
                assert_eq!(a.bell, b.bell);
                assert!((a.fidelity - b.fidelity).abs() < 1e-9);
                assert!((b.fidelity - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn operator_examples() {
        let two = PureState::basis(ModeOccupation::new(vec![2]));
        let out = MeasurementOperator::new(vec![0]).apply(&two, &[0]).unwrap();
        assert!((out.amp(&[2]).re - 0.5).abs() < 1e-15);
        let vac = PureState::vacuum(1);
        let out = MeasurementOperator::new(vec![0]).apply(&vac, &[0]).unwrap();
        assert_eq!(out.amp(&[0]).re, 1.0);
        let m1 = MeasurementOperator::single_mode_matrix(1, 4);
        // â 2^{−n̂/2}: ⟨n−1|M₁|n⟩ = √n 2^{−n/2}.
        for n in 1..=4usize {
            assert!((m1[(n - 1, n)] - (n as f64).sqrt() * 2f64.powf(-(n as f64) / 2.0)).abs() < 1e-15);
        }
    }

    fn annihilation(t: usize) -> DMatrix<f64> {
        DMatrix::from_fn(t + 1, t + 1, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
    }

    fn damping(t: usize) -> DMatrix<f64> {
        DMatrix::from_fn(t + 1, t + 1, |r, c| if r == c { 2f64.powf(-(r as f64) / 2.0) } else { 0.0 })
    }

    #[test]
    fn single_mode_matrices_match_definitions() {
        for t in 1..=8 {
            assert_eq!(MeasurementOperator::single_mode_matrix(0, t), damping(t));
            let m1 = &annihilation(t) * &damping(t);
            assert!((MeasurementOperator::single_mode_matrix(1, t) - m1).abs().max() < 1e-15);
        }
    }

    #[test]
    fn stage_identities() {
        // Two single detections equal one double detection times a vacuum
        // stage, up to the constant √2; the vacuum stage commutes with single
        // detections up to the same constant.
        for t in 1..=4 {
            let m = |p: &[u8]| MeasurementOperator::new(p.to_vec()).matrix(t);
            let lhs = m(&[0, 1, 0, 0]) * m(&[1, 0, 0, 0]);
            let rhs = m(&[1, 1, 0, 0]) * m(&[0, 0, 0, 0]) * 2f64.sqrt();
            assert!((lhs - rhs).abs().max() < 1e-14);
            let v = m(&[0, 0, 0, 0]);
            let d = m(&[1, 0, 0, 0]);
            assert!((&v * &d - &d * &v * 2f64.sqrt()).abs().max() < 1e-14);
        }
    }

    #[test]
    fn bleed_single_round_is_plain_herald() {
        let s = PureState::from_real(
            3,
            [
                (vec![1, 1, 0], 0.6),
                (vec![0, 2, 0], 0.48),
                (vec![1, 0, 1], 0.64),
            ],
        )
        .unwrap();
        let cfg = BleedConfig {
            herald_modes: vec![1, 2],
            required: 2,
            max_per_detector: 1,
            max_rounds: 1,
        };
        let r = bleed(&s, &cfg).unwrap();
        // Only |x,0,2⟩-type bunching fails; nothing else carries two photons.
        assert!(r.per_round[0].abs() < 1e-15);
        let cfg = BleedConfig {
            required: 1,
            ..cfg
        };
        let r = bleed(&s, &cfg).unwrap();
        assert!((r.per_round[0] - (0.36 + 0.64 * 0.64)).abs() < 1e-15);
    }

    fn sequence_oracle(n: u8, rounds: usize) -> f64 {
        // Enumerates tap outcomes k_r ∈ {0, 1} directly with binomial weights.
        fn go(left: u8, r: usize, rounds: usize) -> f64 {
            if left == 0 {
                return 1.0;
            }
            if r == rounds {
                return if left == 1 { 1.0 } else { 0.0 };
            }
            let q = 2f64.powi(-(left as i32));
            q * go(left, r + 1, rounds) + left as f64 * q * go(left - 1, r + 1, rounds)
        }
        go(n, 1, rounds)
    }

    #[test]
    fn bleeding_resolves_bunched_photons() {
        for n in 1..=8u8 {
            let s = PureState::basis(ModeOccupation::new(vec![1, n]));
            let mut prev = 0.0;
            for rounds in 1..=6 {
                let cfg = BleedConfig {
                    herald_modes: vec![1],
                    required: n as usize,
                    max_per_detector: 1,
                    max_rounds: rounds,
                };
                let r = bleed(&s, &cfg).unwrap();
                let total = *r.cumulative.last().unwrap();
                assert!((total - sequence_oracle(n, rounds)).abs() < 1e-12, "n={n} R={rounds}");
                assert!(total + 1e-15 >= prev);
                prev = total;
                let sum: f64 = r.branches.iter().map(|b| b.probability).sum();
                assert!((sum - total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distillation_reaches_phi_plus() {
        let (a, b) = ((0.75f64).sqrt(), (1.0f64 / 12.0).sqrt());
        let s = PureState::from_real(
            4,
            [
                (vec![2, 0, 0, 0], a),
                (vec![0, 2, 0, 0], b),
                (vec![0, 0, 2, 0], b),
                (vec![0, 0, 0, 2], b),
            ],
        )
        .unwrap();
        let th = distill_optimal_theta(&s).unwrap();
        let d = distill_w_type(&s, th).unwrap();
        assert!((d.fidelity - 1.0).abs() < 1e-12);
        assert!((d.probability - 1.0 / 3.0).abs() < 1e-12);

        let mut best = (0.0, 0.0);
        for k in 0..=2000 {
            let t = k as f64 * std::f64::consts::FRAC_PI_2 / 2000.0;
            let f = distill_w_type(&s, t).unwrap().fidelity;
            if f > best.1 {
                best = (t, f);
            }
        }
        assert!((best.0 - th).abs() < 2e-3);

        let d0 = distill_w_type(&s, 0.0).unwrap();
        assert!((d0.probability - 1.0).abs() < 1e-12);
        assert!(d0.fidelity < 1.0 - 1e-3);
    }

    #[test]
    fn boosted_constants() {
        assert_eq!(boosted_bsm_success(BsmAncilla::None), exact::ratio(1, 2));
        assert_eq!(boosted_bsm_success(BsmAncilla::Bell), exact::ratio(3, 4));
    }

    proptest! {
        #[test]
        fn multiplex_monotone(p in 1e-6f64..0.999, n in 1u64..10_000) {
            let (a, b) = (multiplex(p, n), multiplex(p, n + 1));
            prop_assert!(b >= a && b <= 1.0);
            if (1.0 - p).powf(n as f64) > 1e-12 {
                prop_assert!(b > a);
            }
        }

        #[test]
        fn fusion_probabilities_sum_to_one(re in prop::collection::vec(-1.0f64..1.0, 4), im in prop::collection::vec(-1.0f64..1.0, 4)) {
            let amps: Vec<Complex64> = re.iter().zip(&im).map(|(&r, &i)| Complex64::new(r, i)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3);
            let reg = Register::qubits(2);
            let mut s = PureState::zero(4);
            for (k, bits) in ["00", "01", "10", "11"].iter().enumerate() {
                for (occ, _) in encode_qubits(bits, &reg).unwrap().terms() {
                    s.add(occ.clone(), amps[k]).unwrap();
                }
            }
            let s = s.normalized();
            let r = fusion_type2(&s, (0, 1), (2, 3)).unwrap();
            prop_assert!((r.total_prob() - 1.0).abs() < 1e-12);
        }
    }
}
