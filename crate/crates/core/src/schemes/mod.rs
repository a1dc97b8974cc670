//! Executable definitions of heralded generation schemes, closed-form
//! success probabilities and the comparison tables built from both.

mod formulas;
mod tables;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use formulas::{formula, Formula, FormulaValue, FORMULA_NAMES};
pub use tables::{comparison_tables, TableRow, ValueSource};

use crate::detect::{
    event_accounting, herald, herald_ideal, postselect, Acceptance, DetectionSetup,
    DetectorModel, EventRates, HeraldResult, HeraldSpec,
};
use crate::error::{Error, Result};
use crate::exact::{self, Rational};
use crate::fock::{
    best_corrected_fidelity, fidelity, target_bell, target_ghz, target_noon, target_phi_alpha,
    target_qudit_bell, target_w, BellKind, Correction, ModeOccupation, PureState, Register,
    StateEnsemble,
};
use crate::interferometer::{compile, Circuit, Element, UnitaryMatrix};
use crate::propagate::evolve;

/// The state a scheme is meant to produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TargetState {
    Bell { state: BellKind },
    Ghz {
        n: usize,
        #[serde(default = "two")]
        d: usize,
    },
    QuditBell { d: usize },
    Noon { n: usize },
    W { n: usize },
    PhiAlpha { alpha: f64 },
}

fn two() -> usize {
    2
}

/// Target state plus the register (in circuit mode indices) that holds it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(flatten)]
    pub state: TargetState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub register: Option<Register>,
}

impl TargetSpec {
    /// Builds the target on `modes` modes with `reg` in local indices.
    fn build(&self, reg: Option<&Register>, modes: usize, bell_override: Option<BellKind>) -> Result<PureState> {
        let need = || {
            reg.ok_or_else(|| Error::Scheme("this target kind needs a register".into()))
        };
        let s = match &self.state {
            TargetState::Bell { state } => target_bell(bell_override.unwrap_or(*state), need()?)?,
            TargetState::Ghz { n, d } => target_ghz(*n, *d, need()?)?,
            TargetState::QuditBell { d } => target_qudit_bell(*d, need()?)?,
            TargetState::W { n } => target_w(*n, need()?)?,
            TargetState::PhiAlpha { alpha } => target_phi_alpha(*alpha, need()?)?,
            TargetState::Noon { n } => match reg {
                Some(r) => {
                    let rails = r.rails();
                    if rails.len() != 1 || rails[0].len() != 2 {
                        return Err(Error::Scheme("a NOON register is one pair of modes".into()));
                    }
                    let noon = target_noon(*n)?;
                    return noon.relabel(modes, &rails[0]);
                }
                None => target_noon(*n)?,
            },
        };
        pad(&s, modes)
    }
}

fn pad(s: &PureState, modes: usize) -> Result<PureState> {
    if s.modes() == modes {
        return Ok(s.clone());
    }
    let mapping: Vec<usize> = (0..s.modes()).collect();
    s.relabel(modes, &mapping)
}

/// Whether a scheme's success probability has been checked by simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeStatus {
    Verified,
    #[default]
    Unverified,
}

/// A heralded (or postselected) generation scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeDefinition {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub modes: usize,
    pub elements: Vec<Element>,
    pub input: Vec<u8>,
    #[serde(default = "HeraldSpec::none")]
    pub herald: HeraldSpec,
    /// Accept only outputs with one photon per register qudit and none
    /// elsewhere, measuring every mode.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub postselect: bool,
    /// One per herald mode; ideal PNR when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<DetectorModel>,
    pub target: TargetSpec,
    #[serde(default)]
    pub correction: Correction,
    /// Exact success probability as `"p/q"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_success: Option<String>,
    #[serde(default)]
    pub status: SchemeStatus,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
}

impl SchemeDefinition {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.len() != self.modes {
            return Err(Error::LengthMismatch {
                expected: self.modes,
                actual: self.input.len(),
            });
        }
        self.circuit()?;
        self.herald.validate(self.modes)?;
        if self.postselect && !self.herald.modes.is_empty() {
            return Err(Error::Scheme(
                "a scheme either postselects or heralds, not both".into(),
            ));
        }
        if !self.detectors.is_empty() && self.detectors.len() != self.herald.modes.len() {
            return Err(Error::LengthMismatch {
                expected: self.herald.modes.len(),
                actual: self.detectors.len(),
            });
        }
        for d in &self.detectors {
            d.validate()?;
        }
        if let Some(reg) = &self.target.register {
            for m in reg.modes() {
                if m >= self.modes || self.herald.modes.contains(&m) {
                    return Err(Error::Scheme(format!(
                        "register mode {m} is not an unmeasured circuit mode"
                    )));
                }
            }
        } else if self.postselect {
            return Err(Error::Scheme("postselection needs a target register".into()));
        }
        if let Some(e) = self.expected() {
            let e = e?;
            if e <= Rational::from_integer(0.into()) || e > Rational::from_integer(1.into()) {
                return Err(Error::Scheme(format!(
                    "expected success {} outside (0, 1]",
                    exact::display(&e)
                )));
            }
        }
        if self.correction != Correction::None && self.target.register.is_none() {
            return Err(Error::Scheme("corrections need a target register".into()));
        }
        Ok(())
    }

    pub fn expected(&self) -> Option<Result<Rational>> {
        self.expected_success.as_deref().map(exact::parse)
    }

    pub fn photons(&self) -> usize {
        self.input.iter().map(|&n| n as usize).sum()
    }

    pub fn circuit(&self) -> Result<Circuit> {
        Circuit::with_elements(self.modes, self.elements.clone())
    }

    pub fn unitary(&self) -> Result<UnitaryMatrix> {
        compile(&self.circuit()?)
    }

    pub fn input_state(&self) -> PureState {
        PureState::basis(ModeOccupation::new(self.input.clone()))
    }

    /// The scheme's own detectors, or ideal PNR.
    pub fn default_setup(&self) -> DetectionSetup {
        if self.detectors.is_empty() {
            DetectionSetup::ideal(self.herald.modes.len())
        } else {
            DetectionSetup {
                detectors: self.detectors.clone(),
                target_efficiency: Vec::new(),
            }
        }
    }

    /// Register in the indices of the unmeasured modes.
    pub fn local_register(&self) -> Result<Option<Register>> {
        self.target
            .register
            .as_ref()
            .map(|r| r.after_removing(&self.herald.modes))
            .transpose()
    }

    pub fn target_modes(&self) -> usize {
        self.modes - self.herald.modes.len()
    }

    /// Target for the pattern carrying `tag` (a Bell label overrides the
    /// declared Bell state).
    pub fn pattern_target(&self, tag: Option<&str>) -> Result<PureState> {
        let reg = self.local_register()?;
        let over = tag.and_then(|t| BellKind::parse(t).ok());
        self.target.build(reg.as_ref(), self.target_modes(), over)
    }
}

/// Patterns below this probability are round-off and get no fidelity.
pub const NEGLIGIBLE: f64 = 1e-14;

/// Per-pattern entry of a scheme run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub pattern: Vec<u8>,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Fidelity with the pattern's target after the scheme's correction
    /// class; absent for patterns that never occur.
    pub fidelity: Option<f64>,
}

/// Outcome of running a scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeRun {
    pub name: String,
    pub success_prob: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_success: Option<String>,
    /// Success-weighted mean fidelity over accepted patterns.
    pub fidelity: Option<f64>,
    pub patterns: Vec<PatternReport>,
    /// False-event rates against the ideal run; absent for ideal runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<EventRates>,
}

/// Full simulation output: the evolved state and the herald result.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub output: PureState,
    pub herald: HeraldResult,
}

/// Propagates the input and heralds with `setup`.
pub fn simulate(scheme: &SchemeDefinition, setup: &DetectionSetup) -> Result<Simulation> {
    scheme.validate()?;
    let output = evolve(&scheme.input_state(), &scheme.unitary()?)?;
    let herald = if scheme.postselect {
        if !setup.is_ideal() {
            return Err(Error::Scheme(
                "postselected schemes are evaluated with ideal detection only".into(),
            ));
        }
        postselection_result(&output, scheme)?
    } else {
        herald(&output, &scheme.herald, setup)?
    };
    Ok(Simulation { output, herald })
}

fn postselection_result(output: &PureState, scheme: &SchemeDefinition) -> Result<HeraldResult> {
    let reg = scheme.target.register.as_ref().expect("validated");
    let ps = postselect(output, reg)?;
    let spec = HeraldSpec::new(Vec::new(), Acceptance::All);
    let mut r = herald_ideal(&StateEnsemble::from_components(
        scheme.modes,
        vec![(ps.probability, ps.state)],
    )?, &spec)?;
    r.success_prob = ps.probability;
    Ok(r)
}

/// Runs a scheme with its own detectors or with `setup`, reporting success,
/// per-pattern fidelities and false-event rates.
pub fn run(scheme: &SchemeDefinition, setup: Option<&DetectionSetup>) -> Result<SchemeRun> {
    let own = scheme.default_setup();
    let setup = setup.unwrap_or(&own);
    let sim = simulate(scheme, setup)?;
    let reg = scheme.local_register()?;
    let tmodes = sim.herald.target_modes.len();
    let mut patterns = Vec::with_capacity(sim.herald.patterns.len());
    let (mut fsum, mut psum) = (0.0, 0.0);
    for p in &sim.herald.patterns {
        let tag = p.tag.clone().or_else(|| scheme.herald.tag_of(&p.pattern).map(String::from));
        let fid = if p.probability > NEGLIGIBLE {
            let target = scheme.pattern_target(tag.as_deref())?;
            let e = p.ensemble(tmodes);
            let f = match &reg {
                Some(r) if scheme.correction != Correction::None => {
                    best_corrected_fidelity(&e, &target, r, scheme.correction)?.fidelity
                }
                _ => fidelity(&e, &target)?,
            };
            fsum += f * p.probability;
            psum += p.probability;
            Some(f)
        } else {
            None
        };
        patterns.push(PatternReport {
            pattern: p.pattern.clone(),
            probability: p.probability,
            tag,
            fidelity: fid,
        });
    }
    let events = if setup.is_ideal() || scheme.postselect {
        None
    } else {
        let ideal = herald_ideal(&sim.output, &scheme.herald)?;
        Some(event_accounting(&ideal, &sim.herald)?)
    };
    Ok(SchemeRun {
        name: scheme.name.clone(),
        success_prob: sim.herald.success_prob,
        expected_success: scheme.expected_success.clone(),
        fidelity: (psum > 0.0).then(|| fsum / psum),
        patterns,
        events,
    })
}

/// Simulates the scheme with its own detectors and marks it verified when
/// the success probability matches `expected_success` within `tol`.
pub fn verify(scheme: &mut SchemeDefinition, tol: f64) -> Result<bool> {
    let Some(expected) = scheme.expected() else {
        return Ok(false);
    };
    let expected = exact::to_f64(&expected?);
    let r = run(scheme, None)?;
    let ok = (r.success_prob - expected).abs() <= tol;
    scheme.status = if ok {
        SchemeStatus::Verified
    } else {
        SchemeStatus::Unverified
    };
    Ok(ok)
}

fn qubits(pairs: &[(usize, usize)]) -> Register {
    Register::dual_rail(pairs).expect("builtin register")
}

/// Two 50:50 splitters and a swap; postselecting one photon per qubit
/// leaves Ψ+.
pub fn postselected_bell() -> SchemeDefinition {
    SchemeDefinition {
        name: "postselected-bell".into(),
        description: "Two photons on two 50:50 beam splitters and a swap, postselected on one photon per qubit".into(),
        modes: 4,
        elements: vec![
            Element::bs(0, 1, FRAC_PI_4, -FRAC_PI_2),
            Element::bs(2, 3, FRAC_PI_4, -FRAC_PI_2),
            Element::swap(1, 2),
        ],
        input: vec![1, 0, 1, 0],
        herald: HeraldSpec::none(),
        postselect: true,
        detectors: Vec::new(),
        target: TargetSpec {
            state: TargetState::Bell {
                state: BellKind::PsiPlus,
            },
            register: Some(qubits(&[(0, 1), (2, 3)])),
        },
        correction: Correction::None,
        expected_success: Some("1/2".into()),
        status: SchemeStatus::Verified,
        provenance: "builtin".into(),
    }
}

/// Five single photons through a 5-mode DFT; three photons in mode 0 herald
/// Ψ+ on the remaining four modes.
pub fn bell_5p5m() -> SchemeDefinition {
    SchemeDefinition {
        name: "bell-5p5m".into(),
        description: "5-mode DFT, five photons, three photons heralded in mode 0 (PNR)".into(),
        modes: 5,
        elements: vec![Element::dft(0..5)],
        input: vec![1; 5],
        herald: HeraldSpec::patterns(vec![0], vec![vec![3]]),
        postselect: false,
        detectors: Vec::new(),
        target: TargetSpec {
            state: TargetState::Bell {
                state: BellKind::PsiPlus,
            },
            register: Some(qubits(&[(1, 2), (3, 4)])),
        },
        correction: Correction::LocalPhases,
        expected_success: Some("12/125".into()),
        status: SchemeStatus::Verified,
        provenance: "builtin".into(),
    }
}

/// Two 3-mode DFTs whose top outputs meet on a 50:50 splitter; four photons
/// on the splitter outputs herald Φ+ or Φ− depending on the split.
pub fn bell_6p6m() -> SchemeDefinition {
    SchemeDefinition {
        name: "bell-6p6m".into(),
        description: "Two 3-mode DFTs, top outputs on a 50:50 splitter, four photons heralded on its outputs (PNR)".into(),
        modes: 6,
        elements: vec![
            Element::dft(0..3),
            Element::dft(3..6),
            Element::bs(0, 3, FRAC_PI_4, 0.0),
        ],
        input: vec![1; 6],
        herald: HeraldSpec::new(vec![0, 3], Acceptance::TotalCount { total: 4 })
            .with_tag(vec![4, 0], "phi-")
            .with_tag(vec![3, 1], "phi+")
            .with_tag(vec![1, 3], "phi+")
            .with_tag(vec![0, 4], "phi-"),
        postselect: false,
        detectors: Vec::new(),
        target: TargetSpec {
            state: TargetState::Bell {
                state: BellKind::PhiPlus,
            },
            register: Some(qubits(&[(1, 4), (2, 5)])),
        },
        correction: Correction::None,
        expected_success: Some("4/27".into()),
        status: SchemeStatus::Verified,
        provenance: "builtin".into(),
    }
}

/// Hong-Ou-Mandel bunching of two photons into NOON(2).
pub fn hom_noon2() -> SchemeDefinition {
    SchemeDefinition {
        name: "hom-noon2".into(),
        description: "Two photons on a 50:50 beam splitter".into(),
        modes: 2,
        elements: vec![Element::bs50(0, 1)],
        input: vec![1, 1],
        herald: HeraldSpec::none(),
        postselect: false,
        detectors: Vec::new(),
        target: TargetSpec {
            state: TargetState::Noon { n: 2 },
            register: None,
        },
        correction: Correction::None,
        expected_success: Some("1".into()),
        status: SchemeStatus::Verified,
        provenance: "builtin".into(),
    }
}

/// Four photons in six modes heralded on two modes with one photon each,
/// found by numerical search.
pub fn bell_4p6m() -> SchemeDefinition {
    SchemeDefinition::from_json(include_str!("../../../../schemes/bell-4p6m.json"))
        .expect("bundled scheme parses")
}

/// All runnable built-in schemes.
pub fn builtin_registry() -> Vec<SchemeDefinition> {
    vec![
        postselected_bell(),
        bell_4p6m(),
        bell_5p5m(),
        bell_6p6m(),
        hom_noon2(),
    ]
}

pub fn builtin(name: &str) -> Option<SchemeDefinition> {
    builtin_registry().into_iter().find(|s| s.name == name)
}

/// A published scheme whose circuit is supplied by an external scheme file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSlot {
    pub name: &'static str,
    pub state: &'static str,
    pub photons: usize,
    pub modes: usize,
    /// Reported success probability.
    pub success: &'static str,
    pub detector: &'static str,
    /// Expected file name inside a scheme directory.
    pub file: &'static str,
}

/// Schemes whose circuits must be loaded from scheme files.
pub fn scheme_slots() -> Vec<SchemeSlot> {
    vec![
        SchemeSlot {
            name: "bell-4p6m",
            state: "bell",
            photons: 4,
            modes: 6,
            success: "2/27",
            detector: "threshold",
            file: "bell-4p6m.json",
        },
        SchemeSlot {
            name: "bell-4p8m",
            state: "bell",
            photons: 4,
            modes: 8,
            success: "3/16",
            detector: "threshold",
            file: "bell-4p8m.json",
        },
        SchemeSlot {
            name: "bell-4p5m",
            state: "bell",
            photons: 4,
            modes: 5,
            success: "1/9",
            detector: "pnr",
            file: "bell-4p5m.json",
        },
        SchemeSlot {
            name: "ghz-6p10m",
            state: "ghz",
            photons: 6,
            modes: 10,
            success: "1/54",
            detector: "threshold",
            file: "ghz-6p10m.json",
        },
        SchemeSlot {
            name: "ghz-6p12m",
            state: "ghz",
            photons: 6,
            modes: 12,
            success: "1/64",
            detector: "threshold",
            file: "ghz-6p12m.json",
        },
    ]
}

/// Loads the slot's scheme from `dir` if present and checks its photon and
/// mode counts against the slot.
pub fn load_slot(slot: &SchemeSlot, dir: &Path) -> Result<Option<SchemeDefinition>> {
    let path = dir.join(slot.file);
    if !path.exists() {
        return Ok(None);
    }
    let s = SchemeDefinition::load(&path)?;
    if s.photons() != slot.photons || s.modes != slot.modes {
        return Err(Error::Scheme(format!(
            "{} has {} photons in {} modes, slot {} expects {} in {}",
            path.display(),
            s.photons(),
            s.modes,
            slot.name,
            slot.photons,
            slot.modes
        )));
    }
    Ok(Some(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_runnable() {
        let reg = builtin_registry();
        assert!(reg.len() >= 5);
        for s in &reg {
            s.validate().unwrap();
        }
        let names: std::collections::BTreeSet<_> = reg.iter().map(|s| s.name.clone()).collect();
        assert_eq!(names.len(), reg.len());
    }

    #[test]
    fn builtins_match_expected_success() {
        for s in builtin_registry() {
            let r = run(&s, None).unwrap();
            let e = exact::to_f64(&s.expected().unwrap().unwrap());
            assert!((r.success_prob - e).abs() < 1e-9, "{}: {}", s.name, r.success_prob);
        }
    }

    #[test]
    fn ideal_fidelities_are_one() {
        for s in [postselected_bell(), bell_5p5m(), bell_6p6m(), hom_noon2()] {
            let r = run(&s, None).unwrap();
            for p in &r.patterns {
                if let Some(f) = p.fidelity {
                    assert!((f - 1.0).abs() < 1e-9, "{} {:?}: {f}", s.name, p.pattern);
                }
            }
            assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn six_photon_tags() {
        let r = run(&bell_6p6m(), None).unwrap();
        let live: Vec<_> = r.patterns.iter().filter(|p| p.probability > 1e-12).collect();
        assert_eq!(live.len(), 4);
        for p in live {
            assert!((p.probability - 1.0 / 27.0).abs() < 1e-12);
            assert!(p.tag.is_some());
        }
    }

    #[test]
    fn postselected_state_is_exact() {
        let s = postselected_bell();
        let sim = simulate(&s, &DetectionSetup::ideal(0)).unwrap();
        for c in ["1010", "0101"] {
            let occ: Vec<u8> = c.bytes().map(|b| b - b'0').collect();
            assert!(sim.output.amp(&occ).norm() < 1e-15);
        }
        let p = &sim.herald.patterns[0];
        let st = p.components[0].state.clone();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((st.amp(&[1, 0, 0, 1]).re - h).abs() < 1e-15);
        assert!((st.amp(&[0, 1, 1, 0]).re - h).abs() < 1e-15);
        assert_eq!(st.len(), 2);
    }

    #[test]
    fn loss_lowers_success_and_flags_events() {
        let s = bell_5p5m();
        let mut setup = s.default_setup();
        setup.detectors[0] = DetectorModel::ideal_pnr().with_efficiency(0.9);
        let r = run(&s, Some(&setup)).unwrap();
        assert!(r.success_prob < 12.0 / 125.0);
        assert!(r.events.unwrap().false_negative > 0.0);
    }

    #[test]
    fn json_round_trip() {
        for s in builtin_registry() {
            let back = SchemeDefinition::from_json(&s.to_json().unwrap()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn rejects_bad_definitions() {
        let mut s = bell_5p5m();
        s.input.pop();
        assert!(s.validate().is_err());
        let mut s = bell_5p5m();
        s.expected_success = Some("3/2".into());
        assert!(s.validate().is_err());
        let mut s = bell_5p5m();
        s.target.register = Some(qubits(&[(0, 1), (2, 3)]));
        assert!(s.validate().is_err());
    }

    #[test]
    fn slots_are_listed() {
        let slots = scheme_slots();
        assert_eq!(slots.len(), 5);
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemes");
        let s = load_slot(&slots[0], &dir).unwrap().unwrap();
        assert_eq!(s.name, "bell-4p6m");
        assert!(load_slot(&slots[1], &dir).unwrap().is_none());
    }
}
