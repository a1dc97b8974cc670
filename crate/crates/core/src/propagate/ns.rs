use nalgebra::DMatrix;
use num_complex::Complex64;

use super::evolve;
use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, PureState};
use crate::interferometer::UnitaryMatrix;

/// Result of a nonlinear-sign gate trial.
#[derive(Clone, Debug)]
pub struct NsOutcome {
    /// Probability of the ancilla pattern `(1, 0)`.
    pub success_prob: f64,
    /// Subnormalized single-mode output conditioned on success.
    pub output: PureState,
}

/// The standard three-mode nonlinear-sign unitary (real orthogonal).
pub fn klm_ns_unitary() -> UnitaryMatrix {
    let s2 = 2f64.sqrt();
    let q = 2f64.powf(-0.25);
    let r = (3.0 / s2 - 2.0).sqrt();
    let vals = [
        1.0 - s2,
        q,
        r,
        q,
        0.5,
        0.5 - 1.0 / s2,
        r,
        0.5 - 1.0 / s2,
        s2 - 0.5,
    ];
    UnitaryMatrix::new(DMatrix::from_row_slice(
        3,
        3,
        &vals.map(|x| Complex64::new(x, 0.0)),
    ))
    .expect("NS matrix is orthogonal")
}

/// Sends `α|0⟩ + β|1⟩ + γ|2⟩` in mode 0 with ancillas `|1,0⟩` in modes 1 and
/// 2 through `u`, then conditions on the ancilla pattern `(1, 0)`.
pub fn ns_gate_check(target: [Complex64; 3], u: &UnitaryMatrix) -> Result<NsOutcome> {
    if u.dim() != 3 {
        return Err(Error::ModeMismatch {
            expected: 3,
            actual: u.dim(),
        });
    }
    let mut input = PureState::zero(3);
    for (k, &a) in target.iter().enumerate() {
        if a.norm_sqr() > 0.0 {
            input.add(ModeOccupation::new(vec![k as u8, 1, 0]), a)?;
        }
    }
    let out = evolve(&input, u)?;
    let cond = out.project(&[1, 2], &[1, 0])?;
    Ok(NsOutcome {
        success_prob: cond.norm_sqr(),
        output: cond,
    })
}
