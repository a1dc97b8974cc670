use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ModeOccupation, PureState};
use crate::error::{Error, Result};

/// Groups of modes that each hold one logical qudit in one-hot rail encoding.
///
/// A qubit is a pair of rails `(a, b)` with `|0⟩ = (1,0)` and `|1⟩ = (0,1)`;
/// a `d`-level qudit uses `d` rails and level `i` puts the photon in rail `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Register {
    rails: Vec<Vec<usize>>,
}

/// Register whose qudits are all dual-rail qubits.
pub type DualRailRegister = Register;

impl Register {
    pub fn new(rails: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for group in &rails {
            if group.len() < 2 {
                return Err(Error::invalid("each register qudit needs at least two rails"));
            }
            for &m in group {
                if !seen.insert(m) {
                    return Err(Error::DuplicateMode(m));
                }
            }
        }
        Ok(Self { rails })
    }

    pub fn dual_rail(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(a, b)| vec![a, b]).collect())
    }

    /// `n` qudits of dimension `d` on consecutive modes starting at 0.
    pub fn contiguous(n: usize, d: usize) -> Result<Self> {
        Self::new((0..n).map(|q| (q * d..(q + 1) * d).collect()).collect())
    }

    /// `n` dual-rail qubits on modes `(0,1), (2,3), …`.
    pub fn qubits(n: usize) -> Self {
        Self::contiguous(n, 2).expect("contiguous rails are distinct")
    }

    pub fn len(&self) -> usize {
        self.rails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rails.is_empty()
    }

    pub fn rails(&self) -> &[Vec<usize>] {
        &self.rails
    }

    pub fn dim(&self, qudit: usize) -> usize {
        self.rails[qudit].len()
    }

    /// Whether every qudit has exactly two rails.
    pub fn is_dual_rail(&self) -> bool {
        self.rails.iter().all(|g| g.len() == 2)
    }

    pub fn modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.rails.iter().flatten().copied()
    }

    /// One more than the largest mode index used.
    pub fn span(&self) -> usize {
        self.modes().max().map_or(0, |m| m + 1)
    }

    /// Register with every mode index mapped through `f`.
    pub fn map_modes(&self, mut f: impl FnMut(usize) -> usize) -> Result<Self> {
        Self::new(
            self.rails
                .iter()
                .map(|g| g.iter().map(|&m| f(m)).collect())
                .collect(),
        )
    }

    /// Re-expresses the register in the coordinates left after removing
    /// `removed` modes (as done by projection onto herald outcomes).
    pub fn after_removing(&self, removed: &[usize]) -> Result<Self> {
        for m in self.modes() {
            if removed.contains(&m) {
                return Err(Error::invalid(format!(
                    "register mode {m} is also a measured mode"
                )));
            }
        }
        self.map_modes(|m| m - removed.iter().filter(|&&r| r < m).count())
    }

    fn check_modes(&self, modes: usize) -> Result<()> {
        if let Some(m) = self.modes().find(|&m| m >= modes) {
            return Err(Error::ModeOutOfRange { mode: m, modes });
        }
        Ok(())
    }

    /// Fock occupation for the given logical digits on a `modes`-mode system.
    pub fn occupation(&self, digits: &[usize], modes: usize) -> Result<ModeOccupation> {
        if digits.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: digits.len(),
            });
        }
        self.check_modes(modes)?;
        let mut counts = vec![0u8; modes];
        for (group, &d) in self.rails.iter().zip(digits) {
            if d >= group.len() {
                return Err(Error::invalid(format!(
                    "digit {d} out of range for a {}-rail qudit",
                    group.len()
                )));
            }
            counts[group[d]] = 1;
        }
        Ok(ModeOccupation::new(counts))
    }

    /// Inverse of [`Register::occupation`]: the digits if the occupation has
    /// exactly one photon per qudit and none elsewhere.
    pub fn digits_of(&self, occ: &ModeOccupation) -> Option<Vec<usize>> {
        let mut digits = Vec::with_capacity(self.len());
        let mut inside = 0usize;
        for group in &self.rails {
            let mut found = None;
            let mut photons = 0usize;
            for (i, &m) in group.iter().enumerate() {
                let c = *occ.counts().get(m)? as usize;
                photons += c;
                if c == 1 {
                    found = Some(i);
                }
            }
            if photons != 1 {
                return None;
            }
            inside += 1;
            digits.push(found?);
        }
        if occ.total() != inside {
            return None;
        }
        Some(digits)
    }
}

impl TryFrom<Vec<Vec<usize>>> for Register {
    type Error = Error;
    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        Register::new(v)
    }
}

impl From<Register> for Vec<Vec<usize>> {
    fn from(r: Register) -> Self {
        r.rails
    }
}

/// Encodes a bitstring on a dual-rail register. The state lives on
/// `reg.span()` modes.
pub fn encode_qubits(bits: &str, reg: &Register) -> Result<PureState> {
    let digits = bits
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Parse(format!("not a bit: {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if !reg.is_dual_rail() {
        return Err(Error::invalid("bitstrings need a dual-rail register"));
    }
    encode_digits(&digits, reg, reg.span())
}

/// Encodes qudit digits as a product Fock state on `modes` modes.
pub fn encode_digits(digits: &[usize], reg: &Register, modes: usize) -> Result<PureState> {
    Ok(PureState::basis(reg.occupation(digits, modes)?))
}

/// Logical content of a Fock state relative to a register.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    /// Amplitudes of computational-basis terms keyed by digit string.
    pub amplitudes: BTreeMap<Vec<usize>, Complex64>,
    /// Squared norm of all terms outside the computational subspace.
    pub leakage: f64,
}

impl Decoded {
    pub fn computational_weight(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude of the given digits (zero if absent).
    pub fn amp(&self, digits: &[usize]) -> Complex64 {
        self.amplitudes
            .get(digits)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }
}

/// Splits a state into its computational part and leakage weight. Photons in
/// modes outside the register count as leakage.
pub fn decode_qubits(state: &PureState, reg: &Register) -> Decoded {
    let mut amplitudes = BTreeMap::new();
    let mut leakage = 0.0;
    for (occ, a) in state.terms() {
        match reg.digits_of(occ) {
            Some(d) => {
                *amplitudes.entry(d).or_insert(Complex64::new(0.0, 0.0)) += a;
            }
            None => leakage += a.norm_sqr(),
        }
    }
    Decoded {
        amplitudes,
        leakage,
    }
}
