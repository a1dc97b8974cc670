//! Detector models, heralding, postselection and loss.
//!
//! Loss is commuted to just before each herald detector and to just after the
//! circuit on target modes. Each detector sees a binomially thinned photon
//! number, responds according to its kind, and may add one dark click per
//! window with probability `p_dc`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, binomial, factorial, stirling2};
use crate::fock::{complement_modes, fidelity, Components, ModeOccupation, PureState, Register, StateEnsemble};

/// Response model of a single detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorKind {
    /// Reports the photon number.
    Pnr,
    /// Reports click (1) or no click (0).
    Threshold,
    /// Balanced split into `branches` threshold detectors; reports the number
    /// of branches that fired.
    Fanout { branches: usize },
}

/// A detector with efficiency and dark-count probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    #[serde(flatten)]
    pub kind: DetectorKind,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub dark_count: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self::ideal_pnr()
    }
}

impl DetectorModel {
    pub fn ideal_pnr() -> Self {
        Self {
            kind: DetectorKind::Pnr,
            efficiency: 1.0,
            dark_count: 0.0,
        }
    }

    pub fn threshold() -> Self {
        Self {
            kind: DetectorKind::Threshold,
            ..Self::ideal_pnr()
        }
    }

    pub fn fanout(branches: usize) -> Self {
        Self {
            kind: DetectorKind::Fanout { branches },
            ..Self::ideal_pnr()
        }
    }

    pub fn with_efficiency(mut self, eta: f64) -> Self {
        self.efficiency = eta;
        self
    }

    pub fn with_dark_count(mut self, p: f64) -> Self {
        self.dark_count = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(format!(
                "detector efficiency {} outside [0,1]",
                self.efficiency
            )));
        }
        if !(0.0..1.0).contains(&self.dark_count) {
            return Err(Error::invalid(format!(
                "dark-count probability {} outside [0,1)",
                self.dark_count
            )));
        }
        if let DetectorKind::Fanout { branches } = self.kind {
            if branches == 0 {
                return Err(Error::invalid("fan-out needs at least one branch"));
            }
        }
        Ok(())
    }

    pub fn is_ideal_pnr(&self) -> bool {
        self.kind == DetectorKind::Pnr && self.efficiency == 1.0 && self.dark_count == 0.0
    }

    /// Outcome reported by the noiseless detector of this kind for `n` photons
    /// when that outcome is deterministic (fan-out resolves up to its branch
    /// count).
    pub fn nominal(&self, n: u8) -> u8 {
        match self.kind {
            DetectorKind::Pnr => n,
            DetectorKind::Threshold => n.min(1),
            DetectorKind::Fanout { branches } => n.min(branches.min(255) as u8),
        }
    }

    /// Distribution over reported outcomes when `n` photons arrive.
    pub fn outcome_distribution(&self, n: u8) -> Vec<(u8, f64)> {
        let eta = self.efficiency;
        let mut after_loss = vec![0.0; n as usize + 1];
        for (k, slot) in after_loss.iter_mut().enumerate() {
            *slot = binomial_pmf(n as u64, k as u64, eta);
        }
        let mut clicks: BTreeMap<u8, f64> = BTreeMap::new();
        for (k, &pk) in after_loss.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            match self.kind {
                DetectorKind::Pnr => *clicks.entry(k as u8).or_default() += pk,
                DetectorKind::Threshold => *clicks.entry((k as u8).min(1)).or_default() += pk,
                DetectorKind::Fanout { branches } => {
                    for (c, pc) in fanout_click_distribution(k as u64, branches as u64) {
                        *clicks.entry(c as u8).or_default() += pk * pc;
                    }
                }
            }
        }
        let p = self.dark_count;
        if p == 0.0 {
            return clicks.into_iter().filter(|&(_, q)| q > 0.0).collect();
        }
        let mut out: BTreeMap<u8, f64> = BTreeMap::new();
        for (c, q) in clicks {
            *out.entry(c).or_default() += q * (1.0 - p);
            match self.kind {
                DetectorKind::Pnr => *out.entry(c + 1).or_default() += q * p,
                DetectorKind::Threshold => *out.entry(1).or_default() += q * p,
                DetectorKind::Fanout { branches } => {
                    let b = branches as f64;
                    let free = (b - c as f64).max(0.0) / b;
                    *out.entry(c + 1).or_default() += q * p * free;
                    *out.entry(c).or_default() += q * p * (1.0 - free);
                }
            }
        }
        out.into_iter().filter(|&(_, q)| q > 0.0).collect()
    }
}

fn binomial_pmf(n: u64, k: u64, eta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let c = exact::to_f64(&BigRational::from_integer(binomial(n, k)));
    c * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32)
}

/// Exact click-count distribution of a balanced `b`-way fan-out receiving `k`
/// photons: `P(c) = C(b,c) S(k,c) c! / bᵏ`.
pub fn fanout_click_distribution_exact(k: u64, b: u64) -> Vec<(u64, BigRational)> {
    if k == 0 {
        return vec![(0, BigRational::from_integer(BigInt::from(1)))];
    }
    let denom = num_traits::pow(BigInt::from(b), k as usize);
    (1..=k.min(b))
        .map(|c| {
            let num = binomial(b, c) * stirling2(k, c) * factorial(c);
            (c, BigRational::new(num, denom.clone()))
        })
        .filter(|(_, p)| *p != BigRational::from_integer(BigInt::from(0)))
        .collect()
}

pub fn fanout_click_distribution(k: u64, b: u64) -> Vec<(u64, f64)> {
    fanout_click_distribution_exact(k, b)
        .into_iter()
        .map(|(c, p)| (c, exact::to_f64(&p)))
        .collect()
}

/// Distribution of photon placements over the `b` branches: multinomial with
/// equal cell probabilities.
pub fn fanout_branch_patterns(k: u8, b: usize) -> Vec<(Vec<u8>, BigRational)> {
    let denom = num_traits::pow(BigInt::from(b), k as usize);
    crate::propagate::compositions(k as usize, b)
        .into_iter()
        .map(|counts| {
            let mut num = factorial(k as u64);
            for &c in &counts {
                num /= factorial(c as u64);
            }
            (counts, BigRational::new(num, denom.clone()))
        })
        .collect()
}

/// Which herald outcomes count as success.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Acceptance {
    /// Listed patterns, each entry being the photon number the pattern
    /// claims on the corresponding herald mode.
    Patterns { patterns: Vec<Vec<u8>> },
    /// Any outcome whose total equals `total`.
    TotalCount { total: usize },
    /// Exactly one click in each listed pair of herald positions and none on
    /// any other herald position.
    OnePerPair { pairs: Vec<(usize, usize)> },
    /// Every outcome.
    All,
}

/// A per-pattern label, typically the Bell state or correction it heralds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternTag {
    pub pattern: Vec<u8>,
    pub tag: String,
}

/// Herald modes, acceptance rule and per-pattern tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldSpec {
    pub modes: Vec<usize>,
    #[serde(flatten)]
    pub acceptance: Acceptance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<PatternTag>,
}

impl HeraldSpec {
    pub fn new(modes: Vec<usize>, acceptance: Acceptance) -> Self {
        Self {
            modes,
            acceptance,
            tags: Vec::new(),
        }
    }

    pub fn patterns(modes: Vec<usize>, patterns: Vec<Vec<u8>>) -> Self {
        Self::new(modes, Acceptance::Patterns { patterns })
    }

    /// No herald modes; every run succeeds.
    pub fn none() -> Self {
        Self::new(Vec::new(), Acceptance::All)
    }

    pub fn with_tag(mut self, pattern: Vec<u8>, tag: impl Into<String>) -> Self {
        self.tags.push(PatternTag {
            pattern,
            tag: tag.into(),
        });
        self
    }

    pub fn tag_of(&self, pattern: &[u8]) -> Option<&str> {
        self.tags
            .iter()
            .find(|t| t.pattern == pattern)
            .map(|t| t.tag.as_str())
    }

    pub fn validate(&self, modes: usize) -> Result<()> {
        complement_modes(modes, &self.modes)?;
        let k = self.modes.len();
        match &self.acceptance {
            Acceptance::Patterns { patterns } => {
                for p in patterns {
                    if p.len() != k {
                        return Err(Error::LengthMismatch {
                            expected: k,
                            actual: p.len(),
                        });
                    }
                }
            }
            Acceptance::OnePerPair { pairs } => {
                for &(a, b) in pairs {
                    if a >= k || b >= k || a == b {
                        return Err(Error::invalid(format!(
                            "pair ({a},{b}) does not name two herald positions"
                        )));
                    }
                }
            }
            Acceptance::TotalCount { .. } | Acceptance::All => {}
        }
        for t in &self.tags {
            if t.pattern.len() != k {
                return Err(Error::LengthMismatch {
                    expected: k,
                    actual: t.pattern.len(),
                });
            }
        }
        Ok(())
    }

    /// The nominal pattern an outcome is accepted as, if any.
    fn accepts(&self, outcome: &[u8], detectors: &[DetectorModel]) -> Option<Vec<u8>> {
        match &self.acceptance {
            Acceptance::Patterns { patterns } => patterns
                .iter()
                .find(|p| {
                    p.iter()
                        .zip(detectors)
                        .zip(outcome)
                        .all(|((&v, d), &o)| d.nominal(v) == o)
                })
                .cloned(),
            Acceptance::TotalCount { total } => {
                (outcome.iter().map(|&c| c as usize).sum::<usize>() == *total)
                    .then(|| outcome.to_vec())
            }
            Acceptance::OnePerPair { pairs } => {
                let mut used = vec![false; outcome.len()];
                for &(a, b) in pairs {
                    if outcome[a] as usize + outcome[b] as usize != 1 {
                        return None;
                    }
                    used[a] = true;
                    used[b] = true;
                }
                used.iter()
                    .zip(outcome)
                    .all(|(&u, &o)| u || o == 0)
                    .then(|| outcome.to_vec())
            }
            Acceptance::All => Some(outcome.to_vec()),
        }
    }
}

/// Detector for each herald mode (same order as [`HeraldSpec::modes`]) and
/// transmissivity of lossy target modes (indices in the full circuit).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionSetup {
    pub detectors: Vec<DetectorModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target_efficiency: Vec<(usize, f64)>,
}

impl DetectionSetup {
    pub fn ideal(herald_modes: usize) -> Self {
        Self {
            detectors: vec![DetectorModel::ideal_pnr(); herald_modes],
            target_efficiency: Vec::new(),
        }
    }

    pub fn uniform(herald_modes: usize, det: DetectorModel) -> Self {
        Self {
            detectors: vec![det; herald_modes],
            target_efficiency: Vec::new(),
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.detectors.iter().all(DetectorModel::is_ideal_pnr)
            && self.target_efficiency.iter().all(|&(_, e)| e == 1.0)
    }
}

/// A pure component of an accepted conditional state with the herald photon
/// numbers that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldComponent {
    pub weight: f64,
    pub source: Vec<u8>,
    pub state: PureState,
}

/// Everything accepted under one nominal pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternResult {
    pub pattern: Vec<u8>,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    pub components: Vec<HeraldComponent>,
}

impl PatternResult {
    /// Conditional state on the target modes as a (subnormalized) mixture.
    pub fn ensemble(&self, modes: usize) -> StateEnsemble {
        let mut e = StateEnsemble::empty(modes);
        for c in &self.components {
            e.push(c.weight, c.state.clone())
                .expect("components share the target mode count");
        }
        e
    }

    /// The conditional state when it is a single pure component.
    pub fn pure_state(&self) -> Option<PureState> {
        match self.components.as_slice() {
            [c] => Some(c.state.scaled(Complex64::new(c.weight.sqrt(), 0.0))),
            _ => None,
        }
    }
}

/// Outcome of heralding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldResult {
    pub success_prob: f64,
    pub herald_modes: Vec<usize>,
    pub target_modes: Vec<usize>,
    pub patterns: Vec<PatternResult>,
}

impl HeraldResult {
    pub fn pattern(&self, p: &[u8]) -> Option<&PatternResult> {
        self.patterns.iter().find(|r| r.pattern == p)
    }

    /// Union of all accepted conditional states.
    pub fn combined(&self) -> StateEnsemble {
        let mut e = StateEnsemble::empty(self.target_modes.len());
        for p in &self.patterns {
            for c in &p.components {
                e.push(c.weight, c.state.clone())
                    .expect("components share the target mode count");
            }
        }
        e
    }
}

/// Product outcome distribution over several detectors.
fn joint_outcomes(dets: &[DetectorModel], counts: &[u8]) -> Vec<(Vec<u8>, f64)> {
    let mut acc: Vec<(Vec<u8>, f64)> = vec![(Vec::with_capacity(counts.len()), 1.0)];
    for (d, &n) in dets.iter().zip(counts) {
        let dist = d.outcome_distribution(n);
        let mut next = Vec::with_capacity(acc.len() * dist.len());
        for (prefix, p) in &acc {
            for &(o, q) in &dist {
                let mut k = prefix.clone();
                k.push(o);
                next.push((k, p * q));
            }
        }
        acc = next;
    }
    acc
}

/// Conditions `state` on the herald outcomes accepted by `spec` under the
/// detector models of `setup`.
pub fn herald(
    state: &impl Components,
    spec: &HeraldSpec,
    setup: &DetectionSetup,
) -> Result<HeraldResult> {
    let modes = state.modes();
    spec.validate(modes)?;
    if setup.detectors.len() != spec.modes.len() {
        return Err(Error::LengthMismatch {
            expected: spec.modes.len(),
            actual: setup.detectors.len(),
        });
    }
    for d in &setup.detectors {
        d.validate()?;
    }
    let target_modes = complement_modes(modes, &spec.modes)?;
    let mut target_loss = Vec::new();
    for &(m, eta) in &setup.target_efficiency {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("target efficiency {eta} outside [0,1]")));
        }
        let pos = target_modes.iter().position(|&t| t == m).ok_or_else(|| {
            Error::invalid(format!("target loss on mode {m}, which is not a target mode"))
        })?;
        if eta < 1.0 {
            target_loss.push((pos, eta));
        }
    }

    let mut by_pattern: BTreeMap<Vec<u8>, Vec<HeraldComponent>> = BTreeMap::new();
    for (w, s) in state.weighted() {
        if w == 0.0 {
            continue;
        }
        for (h, cond) in s.split_by(&spec.modes)? {
            for (o, p) in joint_outcomes(&setup.detectors, &h) {
                if p == 0.0 {
                    continue;
                }
                if let Some(nominal) = spec.accepts(&o, &setup.detectors) {
                    by_pattern.entry(nominal).or_default().push(HeraldComponent {
                        weight: w * p,
                        source: h.clone(),
                        state: cond.clone(),
                    });
                }
            }
        }
    }

    let mut patterns = Vec::with_capacity(by_pattern.len());
    let mut success = 0.0;
    for (pattern, comps) in by_pattern {
        let mut comps = merge_components(comps);
        for &(pos, eta) in &target_loss {
            let mut next = Vec::new();
            for c in comps {
                for branch in loss_branches(&c.state, pos, eta)? {
                    next.push(HeraldComponent {
                        weight: c.weight,
                        source: c.source.clone(),
                        state: branch,
                    });
                }
            }
            comps = next;
        }
        let probability: f64 = comps.iter().map(|c| c.weight * c.state.norm_sqr()).sum();
        if probability <= 0.0 {
            continue;
        }
        success += probability;
        patterns.push(PatternResult {
            tag: spec.tag_of(&pattern).map(str::to_owned),
            pattern,
            probability,
            components: comps,
        });
    }
    Ok(HeraldResult {
        success_prob: success,
        herald_modes: spec.modes.clone(),
        target_modes,
        patterns,
    })
}

/// Components with identical source and state vector are added by weight.
fn merge_components(comps: Vec<HeraldComponent>) -> Vec<HeraldComponent> {
    let mut out: Vec<HeraldComponent> = Vec::with_capacity(comps.len());
    for c in comps {
        if let Some(prev) = out
            .iter_mut()
            .find(|p| p.source == c.source && p.state == c.state)
        {
            prev.weight += c.weight;
        } else {
            out.push(c);
        }
    }
    out
}

/// Ideal PNR heralding with no loss.
pub fn herald_ideal(state: &impl Components, spec: &HeraldSpec) -> Result<HeraldResult> {
    herald(state, spec, &DetectionSetup::ideal(spec.modes.len()))
}

/// Kraus branches of a pure-loss channel on one mode: branch `l` has lost `l`
/// photons with amplitude `√(C(n,l) η^{n−l} (1−η)^l)`.
fn loss_branches(state: &PureState, mode: usize, eta: f64) -> Result<Vec<PureState>> {
    if mode >= state.modes() {
        return Err(Error::ModeOutOfRange {
            mode,
            modes: state.modes(),
        });
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid(format!("transmissivity {eta} outside [0,1]")));
    }
    if eta == 1.0 {
        return Ok(vec![state.clone()]);
    }
    let max_n = state.terms().map(|(o, _)| o.get(mode)).max().unwrap_or(0);
    let mut branches = Vec::new();
    for l in 0..=max_n {
        let mut b = PureState::zero(state.modes());
        for (o, a) in state.terms() {
            let n = o.get(mode);
            if n < l {
                continue;
            }
            let amp = binomial_pmf(n as u64, (n - l) as u64, eta).sqrt();
            if amp == 0.0 {
                continue;
            }
            let mut counts = o.counts().to_vec();
            counts[mode] -= l;
            b.add_unchecked(ModeOccupation::new(counts), a * amp);
        }
        if !b.is_empty() {
            branches.push(b);
        }
    }
    Ok(branches)
}

/// Pure loss with transmissivity `eta` on `mode`, as a mixture indexed by the
/// number of photons lost. Total weight is preserved.
pub fn apply_loss(state: &PureState, mode: usize, eta: f64) -> Result<StateEnsemble> {
    StateEnsemble::from_components(
        state.modes(),
        loss_branches(state, mode, eta)?
            .into_iter()
            .map(|b| (1.0, b))
            .collect(),
    )
}

/// [`apply_loss`] applied to every component of a mixture.
pub fn apply_loss_ensemble(e: &StateEnsemble, mode: usize, eta: f64) -> Result<StateEnsemble> {
    e.flat_map(|s| apply_loss(s, mode, eta))
}

/// Result of postselecting on one photon per register qudit.
#[derive(Clone, Debug, PartialEq)]
pub struct Postselected {
    pub probability: f64,
    /// Normalized conditional state (zero if nothing survives).
    pub state: PureState,
}

/// Keeps the terms with exactly one photon in each register qudit and none
/// elsewhere.
pub fn postselect(state: &PureState, reg: &Register) -> Result<Postselected> {
    if reg.span() > state.modes() {
        return Err(Error::ModeOutOfRange {
            mode: reg.span() - 1,
            modes: state.modes(),
        });
    }
    let kept = state.filtered(|o| reg.digits_of(o).is_some());
    Ok(Postselected {
        probability: kept.norm_sqr(),
        state: kept.normalized(),
    })
}

/// False-event rates of a noisy run relative to the ideal-detector run of
/// the same scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventRates {
    /// Accepted probability whose conditional state differs from the ideal
    /// conditional state of the same pattern by more than the threshold.
    pub false_positive: f64,
    /// Ideally accepted probability that the noisy run rejects.
    pub false_negative: f64,
}

/// Default infidelity above which an accepted state counts as wrong.
pub const DEFAULT_FP_THRESHOLD: f64 = 1e-9;

/// Compares a noisy herald run against the ideal reference run.
pub fn event_accounting(ideal: &HeraldResult, noisy: &HeraldResult) -> Result<EventRates> {
    event_accounting_with(ideal, noisy, DEFAULT_FP_THRESHOLD)
}

pub fn event_accounting_with(
    ideal: &HeraldResult,
    noisy: &HeraldResult,
    threshold: f64,
) -> Result<EventRates> {
    if ideal.herald_modes != noisy.herald_modes {
        return Err(Error::invalid("ideal and noisy runs use different herald modes"));
    }
    let accepted: BTreeSet<&Vec<u8>> = ideal
        .patterns
        .iter()
        .flat_map(|p| p.components.iter().map(|c| &c.source))
        .collect();
    let ideal_mass = ideal.success_prob;
    let mut kept = 0.0;
    let mut fp = 0.0;
    for p in &noisy.patterns {
        let reference = ideal.pattern(&p.pattern).map(|r| r.ensemble(ideal.target_modes.len()));
        for c in &p.components {
            let mass = c.weight * c.state.norm_sqr();
            if accepted.contains(&c.source) {
                kept += mass;
            }
            let wrong = match &reference {
                Some(r) => {
                    let f = reference_fidelity(&c.state, r)?;
                    1.0 - f > threshold
                }
                None => true,
            };
            if wrong {
                fp += mass;
            }
        }
    }
    Ok(EventRates {
        false_positive: fp,
        false_negative: (ideal_mass - kept).max(0.0),
    })
}

/// Fidelity of a pure component with the ideal conditional mixture; the
/// ideal conditional is pure whenever the reference run is ideal.
fn reference_fidelity(s: &PureState, reference: &StateEnsemble) -> Result<f64> {
    if s.norm_sqr() == 0.0 {
        return Ok(1.0);
    }
    let comps = reference.components();
    if comps.len() == 1 {
        return fidelity(s, &comps[0].1);
    }
    // Mixed reference: overlap Tr(ρσ)/Tr(ρ) with a normalized σ.
    let sn = s.normalized();
    let tr = reference.trace();
    if tr == 0.0 {
        return Ok(0.0);
    }
    Ok(comps
        .iter()
        .map(|(w, r)| w * r.inner(&sn).norm_sqr())
        .sum::<f64>()
        / tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::interferometer::{compile, dft, Circuit, Element};
    use crate::propagate::evolve;
    use proptest::prelude::*;

    fn five_photon_output() -> PureState {
        evolve(&PureState::basis(ModeOccupation::new(vec![1; 5])), &dft(5)).unwrap()
    }

    fn spec_5p5m() -> HeraldSpec {
        HeraldSpec::patterns(vec![0], vec![vec![3]])
    }

    #[test]
    fn fanout_examples() {
        assert_eq!(
            fanout_click_distribution_exact(2, 2),
            vec![(1, ratio(1, 2)), (2, ratio(1, 2))]
        );
        assert_eq!(
            fanout_click_distribution_exact(3, 2),
            vec![(1, ratio(1, 4)), (2, ratio(3, 4))]
        );
        for b in 1..6 {
            assert_eq!(fanout_click_distribution_exact(1, b), vec![(1, ratio(1, 1))]);
        }
        let branches = fanout_branch_patterns(2, 2);
        let merged: Vec<_> = branches
            .iter()
            .filter(|(c, _)| c.contains(&2))
            .map(|(_, p)| p.clone())
            .collect();
        assert_eq!(merged, vec![ratio(1, 4), ratio(1, 4)]);
    }

    #[test]
    fn fanout_distribution_matches_assignment_oracle() {
        for k in 0..6u8 {
            for b in 1..5usize {
                let mut oracle: BTreeMap<u64, BigRational> = BTreeMap::new();
                for (counts, p) in fanout_branch_patterns(k, b) {
                    let c = counts.iter().filter(|&&x| x > 0).count() as u64;
                    *oracle.entry(c).or_insert_with(|| ratio(0, 1)) += p;
                }
                let got: BTreeMap<u64, BigRational> =
                    fanout_click_distribution_exact(k as u64, b as u64).into_iter().collect();
                assert_eq!(got, oracle, "k={k} b={b}");
            }
        }
    }

    #[test]
    fn threshold_cannot_tell_one_from_two() {
        let d = DetectorModel::threshold();
        assert_eq!(d.outcome_distribution(2), vec![(1, 1.0)]);
        assert_eq!(d.outcome_distribution(1), vec![(1, 1.0)]);
        assert_eq!(d.outcome_distribution(0), vec![(0, 1.0)]);
    }

    #[test]
    fn detector_validation() {
        assert!(DetectorModel::ideal_pnr().with_efficiency(1.2).validate().is_err());
        assert!(DetectorModel::ideal_pnr().with_dark_count(1.0).validate().is_err());
        assert!(DetectorModel::fanout(0).validate().is_err());
        let json = r#"{"kind":"fanout","branches":4,"efficiency":0.9}"#;
        let d: DetectorModel = serde_json::from_str(json).unwrap();
        assert_eq!(d.kind, DetectorKind::Fanout { branches: 4 });
        assert_eq!(d.dark_count, 0.0);
    }

    #[test]
    fn five_photon_dft_herald() {
        let r = herald_ideal(&five_photon_output(), &spec_5p5m()).unwrap();
        assert!((r.success_prob - 12.0 / 125.0).abs() < 1e-12);
        assert_eq!(r.target_modes, vec![1, 2, 3, 4]);
    }

    #[test]
    fn zero_efficiency_kills_photon_patterns() {
        let setup = DetectionSetup::uniform(1, DetectorModel::ideal_pnr().with_efficiency(0.0));
        let r = herald(&five_photon_output(), &spec_5p5m(), &setup).unwrap();
        assert_eq!(r.success_prob, 0.0);
    }

    #[test]
    fn completeness_over_all_outcomes() {
        let out = five_photon_output();
        let spec = HeraldSpec::new(vec![0, 2], Acceptance::All);
        let r = herald_ideal(&out, &spec).unwrap();
        assert!((r.success_prob - 1.0).abs() < 1e-10);
        let noisy = DetectionSetup::uniform(
            2,
            DetectorModel::fanout(3).with_efficiency(0.7).with_dark_count(0.1),
        );
        let r = herald(&out, &spec, &noisy).unwrap();
        assert!((r.success_prob - 1.0).abs() < 1e-10);
    }

    #[test]
    fn loss_examples() {
        let s = PureState::basis(ModeOccupation::new(vec![1]));
        let e = apply_loss(&s, 0, 1.0).unwrap();
        assert_eq!(e.len(), 1);
        let e = apply_loss(&s, 0, 0.3).unwrap();
        let w: Vec<f64> = e.components().iter().map(|(_, b)| b.norm_sqr()).collect();
        assert!((w[0] - 0.3).abs() < 1e-15 && (w[1] - 0.7).abs() < 1e-15);
        let two = PureState::basis(ModeOccupation::new(vec![2]));
        let e = apply_loss(&two, 0, 0.5).unwrap();
        let dist = e.mode_distribution(0);
        // Binomial oracle for n = 2, η = ½.
        assert!((dist[2] - 0.25).abs() < 1e-15);
        assert!((dist[1] - 0.5).abs() < 1e-15);
        assert!((dist[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn postselect_examples() {
        let reg = Register::qubits(2);
        let half = Complex64::new(0.5, 0.0);
        let s = PureState::from_terms(
            4,
            [
                (vec![1u8, 1, 0, 0], half),
                (vec![1, 0, 0, 1], half),
                (vec![0, 1, 1, 0], half),
                (vec![0, 0, 1, 1], half),
            ],
        )
        .unwrap();
        let p = postselect(&s, &reg).unwrap();
        assert!((p.probability - 0.5).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.state.amp(&[1, 0, 0, 1]).re - h).abs() < 1e-15);
        assert!((p.state.amp(&[0, 1, 1, 0]).re - h).abs() < 1e-15);

        let comp = PureState::basis(ModeOccupation::new(vec![1, 0, 1, 0]));
        let p = postselect(&comp, &reg).unwrap();
        assert_eq!(p.probability, 1.0);
        assert_eq!(p.state, comp);
        let bad = PureState::basis(ModeOccupation::new(vec![1, 1, 0, 0]));
        assert_eq!(postselect(&bad, &reg).unwrap().probability, 0.0);
    }

    #[test]
    fn herald_agrees_with_postselect_when_all_modes_measured() {
        let c = Circuit::with_elements(
            4,
            vec![
                Element::bs(0, 1, std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_2),
                Element::bs(2, 3, std::f64::consts::FRAC_PI_4, -std::f64::consts::FRAC_PI_2),
                Element::swap(1, 2),
            ],
        )
        .unwrap();
        let out = evolve(
            &PureState::basis(ModeOccupation::new(vec![1, 0, 1, 0])),
            &compile(&c).unwrap(),
        )
        .unwrap();
        let spec = HeraldSpec::new(
            vec![0, 1, 2, 3],
            Acceptance::OnePerPair {
                pairs: vec![(0, 1), (2, 3)],
            },
        );
        let h = herald_ideal(&out, &spec).unwrap();
        let p = postselect(&out, &Register::qubits(2)).unwrap();
        assert!((h.success_prob - p.probability).abs() < 1e-15);
    }

    #[test]
    fn dark_counts_on_vacuum_patterns() {
        let out = five_photon_output();
        let spec = HeraldSpec::patterns(vec![0, 1], vec![vec![3, 0]]);
        let p0 = herald_ideal(&out, &spec).unwrap().success_prob;
        let setup = DetectionSetup {
            detectors: vec![
                DetectorModel::ideal_pnr(),
                DetectorModel::ideal_pnr().with_dark_count(0.05),
            ],
            target_efficiency: vec![],
        };
        let r = herald(&out, &spec, &setup).unwrap();
        // The vacuum detector survives with probability (1 − p_dc); the
        // three-photon detector has no dark counts.
        assert!((r.success_prob - p0 * 0.95).abs() < 1e-15);
        let rates = event_accounting(&herald_ideal(&out, &spec).unwrap(), &r).unwrap();
        assert!(rates.false_negative > 0.0);
    }

    #[test]
    fn event_accounting_identity() {
        let out = five_photon_output();
        let ideal = herald_ideal(&out, &spec_5p5m()).unwrap();
        let rates = event_accounting(&ideal, &ideal).unwrap();
        assert_eq!(rates.false_positive, 0.0);
        assert!(rates.false_negative.abs() < 1e-15);
    }

    #[test]
    fn target_loss_with_threshold_heralds_gives_false_positives() {
        let out = five_photon_output();
        let spec = HeraldSpec::patterns(vec![0], vec![vec![1]]);
        let ideal = herald_ideal(&out, &spec).unwrap();
        let noisy = herald(
            &out,
            &spec,
            &DetectionSetup {
                detectors: vec![DetectorModel::threshold()],
                target_efficiency: vec![(1, 0.8), (2, 0.8)],
            },
        )
        .unwrap();
        let rates = event_accounting(&ideal, &noisy).unwrap();
        assert!(rates.false_positive > 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn success_monotone_in_efficiency(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let out = five_photon_output();
            let spec = spec_5p5m();
            let p = |eta: f64| {
                herald(&out, &spec, &DetectionSetup::uniform(1, DetectorModel::ideal_pnr().with_efficiency(eta)))
                    .unwrap()
                    .success_prob
            };
            prop_assert!(p(lo) <= p(hi) + 1e-15);
        }

        #[test]
        fn dark_count_law(pdc in 0.0f64..0.5) {
            let out = five_photon_output();
            let spec = HeraldSpec::patterns(vec![0, 1, 2], vec![vec![3, 0, 0]]);
            let p0 = herald_ideal(&out, &spec).unwrap().success_prob;
            let setup = DetectionSetup {
                detectors: vec![
                    DetectorModel::ideal_pnr(),
                    DetectorModel::ideal_pnr().with_dark_count(pdc),
                    DetectorModel::ideal_pnr().with_dark_count(pdc),
                ],
                target_efficiency: vec![],
            };
            let p = herald(&out, &spec, &setup).unwrap().success_prob;
            prop_assert!((p - p0 * (1.0 - pdc).powi(2)).abs() < 1e-14);
        }
    }
}
