use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{encode_digits, PureState, Register, StateEnsemble};
use crate::error::{Error, Result};

/// The four two-qubit Bell states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellKind {
    #[serde(rename = "phi+", alias = "PhiPlus")]
    PhiPlus,
    #[serde(rename = "phi-", alias = "PhiMinus")]
    PhiMinus,
    #[serde(rename = "psi+", alias = "PsiPlus")]
    PsiPlus,
    #[serde(rename = "psi-", alias = "PsiMinus")]
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phi+" | "phiplus" | "Φ+" => Ok(BellKind::PhiPlus),
            "phi-" | "phiminus" | "Φ-" => Ok(BellKind::PhiMinus),
            "psi+" | "psiplus" | "Ψ+" => Ok(BellKind::PsiPlus),
            "psi-" | "psiminus" | "Ψ-" => Ok(BellKind::PsiMinus),
            _ => Err(Error::Parse(format!("unknown Bell state {s:?}"))),
        }
    }
}

impl std::fmt::Display for BellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

fn superpose(reg: &Register, modes: usize, terms: &[(Vec<usize>, Complex64)]) -> Result<PureState> {
    let mut s = PureState::zero(modes);
    for (digits, amp) in terms {
        s.add(reg.occupation(digits, modes)?, *amp)?;
    }
    Ok(s)
}

fn require_qubits(reg: &Register, n: usize) -> Result<()> {
    if reg.len() != n || !reg.is_dual_rail() {
        return Err(Error::invalid(format!(
            "expected a register of {n} dual-rail qubits"
        )));
    }
    Ok(())
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Bell state embedded in a two-qubit dual-rail register.
pub fn target_bell(kind: BellKind, reg: &Register) -> Result<PureState> {
    require_qubits(reg, 2)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let terms = match kind {
        BellKind::PhiPlus => [(vec![0, 0], re(h)), (vec![1, 1], re(h))],
        BellKind::PhiMinus => [(vec![0, 0], re(h)), (vec![1, 1], re(-h))],
        BellKind::PsiPlus => [(vec![0, 1], re(h)), (vec![1, 0], re(h))],
        BellKind::PsiMinus => [(vec![0, 1], re(h)), (vec![1, 0], re(-h))],
    };
    superpose(reg, reg.span(), &terms)
}

/// `n`-party GHZ state of local dimension `d`, `(1/√d) Σᵢ |i⟩^⊗n`.
pub fn target_ghz(n: usize, d: usize, reg: &Register) -> Result<PureState> {
    if n < 3 {
        return Err(Error::invalid("GHZ states need at least three parties"));
    }
    if d < 2 {
        return Err(Error::invalid("local dimension must be at least 2"));
    }
    if reg.len() != n || reg.rails().iter().any(|g| g.len() != d) {
        return Err(Error::invalid(format!(
            "expected a register of {n} qudits with {d} rails each"
        )));
    }
    let amp = re(1.0 / (d as f64).sqrt());
    let terms: Vec<_> = (0..d).map(|i| (vec![i; n], amp)).collect();
    superpose(reg, reg.span(), &terms)
}

/// Maximally entangled two-qudit state `(1/√d) Σᵢ |ii⟩`.
pub fn target_qudit_bell(d: usize, reg: &Register) -> Result<PureState> {
    if reg.len() != 2 || reg.rails().iter().any(|g| g.len() != d) {
        return Err(Error::invalid(format!(
            "expected a register of two qudits with {d} rails each"
        )));
    }
    let amp = re(1.0 / (d as f64).sqrt());
    let terms: Vec<_> = (0..d).map(|i| (vec![i, i], amp)).collect();
    superpose(reg, reg.span(), &terms)
}

/// Two-mode NOON state `(|N0⟩ + |0N⟩)/√2`.
pub fn target_noon(n: usize) -> Result<PureState> {
    if n == 0 || n > u8::MAX as usize {
        return Err(Error::invalid(format!("NOON photon number {n} out of range")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let n = n as u8;
    PureState::from_real(2, [(vec![n, 0], h), (vec![0, n], h)])
}

/// W state: uniform superposition of single excitations over `n` qubits.
pub fn target_w(n: usize, reg: &Register) -> Result<PureState> {
    if n < 2 {
        return Err(Error::invalid("W states need at least two qubits"));
    }
    require_qubits(reg, n)?;
    let amp = re(1.0 / (n as f64).sqrt());
    let terms: Vec<_> = (0..n)
        .map(|k| {
            let mut d = vec![0; n];
            d[k] = 1;
            (d, amp)
        })
        .collect();
    superpose(reg, reg.span(), &terms)
}

/// `cos α |11⟩ + sin α |00⟩`, i.e. `cos α |0101⟩ + sin α |1010⟩` in Fock
/// labels on a contiguous register.
pub fn target_phi_alpha(alpha: f64, reg: &Register) -> Result<PureState> {
    require_qubits(reg, 2)?;
    let terms = [(vec![1, 1], re(alpha.cos())), (vec![0, 0], re(alpha.sin()))];
    Ok(superpose(reg, reg.span(), &terms)?.pruned(0.0))
}

/// Werner mixing parameter λ ∈ [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct WernerParam(f64);

impl WernerParam {
    pub fn new(lambda: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&lambda) {
            Ok(Self(lambda))
        } else {
            Err(Error::invalid(format!("Werner λ must lie in [0,1], got {lambda}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for WernerParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WernerParam> for f64 {
    fn from(p: WernerParam) -> f64 {
        p.0
    }
}

/// `λ|Ψ−⟩⟨Ψ−| + (1−λ)/4 · I` as five pure components.
pub fn werner_ensemble(lambda: WernerParam, reg: &Register) -> Result<StateEnsemble> {
    let l = lambda.value();
    let modes = reg.span();
    let mut e = StateEnsemble::empty(modes);
    e.push(l, target_bell(BellKind::PsiMinus, reg)?)?;
    for a in 0..2 {
        for b in 0..2 {
            e.push((1.0 - l) / 4.0, encode_digits(&[a, b], reg, modes)?)?;
        }
    }
    Ok(e)
}

/// Anything that can be viewed as a weighted list of pure components.
pub trait Components {
    fn modes(&self) -> usize;
    fn weighted(&self) -> Vec<(f64, &PureState)>;
}

impl Components for PureState {
    fn modes(&self) -> usize {
        PureState::modes(self)
    }
    fn weighted(&self) -> Vec<(f64, &PureState)> {
        vec![(1.0, self)]
    }
}

impl Components for StateEnsemble {
    fn modes(&self) -> usize {
        StateEnsemble::modes(self)
    }
    fn weighted(&self) -> Vec<(f64, &PureState)> {
        self.components().iter().map(|(w, s)| (*w, s)).collect()
    }
}

/// Normalized fidelity `Σ wᵢ|⟨t|φᵢ⟩|² / Σ wᵢ‖φᵢ‖²` against a pure target.
///
/// The target is normalized internally. A zero state has fidelity 0.
pub fn fidelity(state: &impl Components, target: &PureState) -> Result<f64> {
    if state.modes() != target.modes() {
        return Err(Error::ModeMismatch {
            expected: target.modes(),
            actual: state.modes(),
        });
    }
    let tn = target.norm_sqr();
    if tn == 0.0 {
        return Err(Error::invalid("target state is zero"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, s) in state.weighted() {
        num += w * target.inner(s).norm_sqr();
        den += w * s.norm_sqr();
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / (den * tn)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeOccupation;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn bell_embeddings() {
        let reg = Register::qubits(2);
        let phi = target_bell(BellKind::PhiPlus, &reg).unwrap();
        assert_eq!(phi.amp(&[1, 0, 1, 0]).re, H);
        assert_eq!(phi.amp(&[0, 1, 0, 1]).re, H);
        let psi_m = target_bell(BellKind::PsiMinus, &reg).unwrap();
        assert_eq!(psi_m.amp(&[1, 0, 0, 1]).re, H);
        assert_eq!(psi_m.amp(&[0, 1, 1, 0]).re, -H);
        let psi_p = target_bell(BellKind::PsiPlus, &reg).unwrap();
        assert_eq!(fidelity(&phi, &psi_p).unwrap(), 0.0);
        let phi_m = target_bell(BellKind::PhiMinus, &reg).unwrap();
        assert!(fidelity(&phi, &phi_m).unwrap() < 1e-15);
    }

    #[test]
    fn ghz_examples() {
        let g = target_ghz(3, 2, &Register::qubits(3)).unwrap();
        assert!((g.amp(&[1, 0, 1, 0, 1, 0]).re - H).abs() < 1e-15);
        assert!((g.amp(&[0, 1, 0, 1, 0, 1]).re - H).abs() < 1e-15);
        assert_eq!(g.len(), 2);

        let g3 = target_ghz(3, 3, &Register::contiguous(3, 3).unwrap()).unwrap();
        assert_eq!(g3.len(), 3);
        assert!((g3.norm_sqr() - 1.0).abs() < 1e-12);

        assert!(target_ghz(2, 2, &Register::qubits(2)).is_err());
    }

    #[test]
    fn ghz_overlap_with_bell_times_zero() {
        let g = target_ghz(3, 2, &Register::qubits(3)).unwrap();
        let phi = target_bell(BellKind::PhiPlus, &Register::qubits(2)).unwrap();
        let zero = PureState::basis(ModeOccupation::new(vec![1, 0]));
        let prod = phi.tensor(&zero);
        // Hand expansion: ⟨GHZ|Φ+⊗0⟩ = (1/√2)(1/√2)·⟨000|000⟩ = 1/2.
        assert!((g.inner(&prod).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noon_examples() {
        let n2 = target_noon(2).unwrap();
        assert_eq!(n2.amp(&[2, 0]).re, H);
        assert_eq!(n2.amp(&[0, 2]).re, H);
        let n1 = target_noon(1).unwrap();
        assert_eq!(n1.amp(&[1, 0]).re, H);
        assert!((target_noon(4).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        assert!(target_noon(0).is_err());
    }

    #[test]
    fn w_examples() {
        let w3 = target_w(3, &Register::qubits(3)).unwrap();
        let third = 1.0 / 3f64.sqrt();
        assert_eq!(w3.amp(&[0, 1, 1, 0, 1, 0]).re, third);
        assert_eq!(w3.len(), 3);
        let w2 = target_w(2, &Register::qubits(2)).unwrap();
        let psi = target_bell(BellKind::PsiPlus, &Register::qubits(2)).unwrap();
        assert!((fidelity(&w2, &psi).unwrap() - 1.0).abs() < 1e-12);
        let g = target_ghz(3, 2, &Register::qubits(3)).unwrap();
        assert_eq!(w3.inner(&g).norm(), 0.0);
    }

    #[test]
    fn phi_alpha_examples() {
        let reg = Register::qubits(2);
        let s = target_phi_alpha(std::f64::consts::FRAC_PI_4, &reg).unwrap();
        let phi = target_bell(BellKind::PhiPlus, &reg).unwrap();
        assert!((fidelity(&s, &phi).unwrap() - 1.0).abs() < 1e-12);
        let p = target_phi_alpha(0.0, &reg).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.amp(&[0, 1, 0, 1]).re, 1.0);
        let s6 = target_phi_alpha(std::f64::consts::FRAC_PI_6, &reg).unwrap();
        assert!((s6.amp(&[0, 1, 0, 1]).re - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((s6.amp(&[1, 0, 1, 0]).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn werner_examples() {
        let reg = Register::qubits(2);
        let psi_m = target_bell(BellKind::PsiMinus, &reg).unwrap();
        let w1 = werner_ensemble(WernerParam::new(1.0).unwrap(), &reg).unwrap();
        assert!((fidelity(&w1, &psi_m).unwrap() - 1.0).abs() < 1e-12);
        let w0 = werner_ensemble(WernerParam::new(0.0).unwrap(), &reg).unwrap();
        let comp: Vec<_> = w0.components().iter().filter(|(w, _)| *w > 0.0).collect();
        assert_eq!(comp.len(), 4);
        assert!(comp.iter().all(|(w, _)| *w == 0.25));
        let wh = werner_ensemble(WernerParam::new(0.5).unwrap(), &reg).unwrap();
        // Ensemble-sum oracle: 0.5·1 + 0.125·(0 + ½ + ½ + 0).
        let oracle: f64 = 0.5 + 0.125 * (0.0 + 0.5 + 0.5 + 0.0);
        assert!((fidelity(&wh, &psi_m).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 0.625).abs() < 1e-15);
        assert!(WernerParam::new(1.5).is_err());
    }

    #[test]
    fn fidelity_of_self_is_one() {
        let reg = Register::qubits(2);
        let s = target_bell(BellKind::PsiPlus, &reg).unwrap();
        assert!((fidelity(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        let sub = s.scaled(Complex64::new(0.0, 0.3));
        assert!((fidelity(&sub, &s).unwrap() - 1.0).abs() < 1e-12);
    }
}
