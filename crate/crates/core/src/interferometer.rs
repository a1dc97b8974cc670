//! Linear-optical circuits and their mode unitaries.
//!
//! Beam splitter convention on modes `(i, j)`:
//!
//! ```text
//! U(θ, φ) = [[cos θ,           i e^{−iφ} sin θ],
//!            [i e^{iφ} sin θ,  cos θ          ]]
//! ```
//!
//! so θ = π/4, φ = 0 is the symmetric 50:50 splitter. Circuits act in element
//! order: the compiled matrix of `[e₁, e₂]` is `U(e₂)·U(e₁)`. A photon entering
//! mode `k` leaves in superposition given by column `k` of the compiled matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default unitarity tolerance.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entry of `|M†M − I|`.
pub fn verify_unitarity(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let p = m.adjoint() * m;
    let mut worst = 0.0f64;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// An `m×m` unitary acting on optical modes.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    m: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    /// Validates squareness and unitarity to [`UNITARY_TOL`].
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(m, UNITARY_TOL)
    }

    pub fn with_tolerance(m: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let r = verify_unitarity(&m);
        if !(r <= tol) {
            return Err(Error::NotUnitary(r));
        }
        Ok(Self { m })
    }

    pub(crate) fn from_trusted(m: DMatrix<Complex64>) -> Self {
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    /// Builds from row-major `[re, im]` pairs.
    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        }))
    }

    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| {
                (0..self.dim())
                    .map(|j| [self.m[(i, j)].re, self.m[(i, j)].im])
                    .collect()
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        if self.dim() != rhs.dim() {
            return Err(Error::ModeMismatch {
                expected: self.dim(),
                actual: rhs.dim(),
            });
        }
        Ok(Self {
            m: &self.m * &rhs.m,
        })
    }

    pub fn residual(&self) -> f64 {
        verify_unitarity(&self.m)
    }

    /// Largest entrywise distance to `other`.
    pub fn distance(&self, other: &UnitaryMatrix) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.m - &other.m)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Embeds this block on `modes` of an `m`-mode identity.
    pub fn embed(&self, modes: &[usize], m: usize) -> Result<UnitaryMatrix> {
        check_modes(modes, m)?;
        if modes.len() != self.dim() {
            return Err(Error::ModeMismatch {
                expected: self.dim(),
                actual: modes.len(),
            });
        }
        let mut out = DMatrix::identity(m, m);
        for (a, &i) in modes.iter().enumerate() {
            for (b, &j) in modes.iter().enumerate() {
                out[(i, j)] = self.m[(a, b)];
            }
        }
        Ok(Self { m: out })
    }
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        UnitaryMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn check_modes(modes: &[usize], m: usize) -> Result<()> {
    for (k, &a) in modes.iter().enumerate() {
        if a >= m {
            return Err(Error::ModeOutOfRange { mode: a, modes: m });
        }
        if modes[..k].contains(&a) {
            return Err(Error::DuplicateMode(a));
        }
    }
    Ok(())
}

/// One optical element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Element {
    BeamSplitter {
        modes: [usize; 2],
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
    PhaseShift {
        mode: usize,
        phi: f64,
    },
    Swap {
        modes: [usize; 2],
    },
    /// Discrete Fourier transform across the listed modes, in order.
    Dft {
        modes: Vec<usize>,
    },
    /// Arbitrary unitary block on the listed modes.
    Unitary {
        modes: Vec<usize>,
        matrix: UnitaryMatrix,
    },
}

impl Element {
    pub fn bs(i: usize, j: usize, theta: f64, phi: f64) -> Self {
        Element::BeamSplitter {
            modes: [i, j],
            theta,
            phi,
        }
    }

    /// Symmetric 50:50 beam splitter.
    pub fn bs50(i: usize, j: usize) -> Self {
        Self::bs(i, j, PI / 4.0, 0.0)
    }

    pub fn phase(mode: usize, phi: f64) -> Self {
        Element::PhaseShift { mode, phi }
    }

    pub fn swap(i: usize, j: usize) -> Self {
        Element::Swap { modes: [i, j] }
    }

    pub fn dft(modes: impl IntoIterator<Item = usize>) -> Self {
        Element::Dft {
            modes: modes.into_iter().collect(),
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match self {
            Element::BeamSplitter { modes, .. } | Element::Swap { modes } => modes.to_vec(),
            Element::PhaseShift { mode, .. } => vec![*mode],
            Element::Dft { modes } | Element::Unitary { modes, .. } => modes.clone(),
        }
    }

    /// The element's matrix on its own modes.
    pub fn local_matrix(&self) -> Result<DMatrix<Complex64>> {
        Ok(match self {
            Element::BeamSplitter { theta, phi, .. } => bs_matrix(*theta, *phi),
            Element::PhaseShift { phi, .. } => {
                DMatrix::from_element(1, 1, Complex64::from_polar(1.0, *phi))
            }
            Element::Swap { .. } => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            Element::Dft { modes } => {
                if modes.is_empty() {
                    return Err(Error::invalid("DFT over zero modes"));
                }
                dft(modes.len()).into_matrix()
            }
            Element::Unitary { modes, matrix } => {
                if matrix.dim() != modes.len() {
                    return Err(Error::ModeMismatch {
                        expected: modes.len(),
                        actual: matrix.dim(),
                    });
                }
                matrix.matrix().clone()
            }
        })
    }

    fn validate(&self, m: usize) -> Result<()> {
        check_modes(&self.modes(), m)?;
        match self {
            Element::BeamSplitter { theta, phi, .. } if !theta.is_finite() || !phi.is_finite() => {
                Err(Error::invalid("beam splitter angles must be finite"))
            }
            Element::PhaseShift { phi, .. } if !phi.is_finite() => {
                Err(Error::invalid("phase must be finite"))
            }
            Element::Unitary { matrix, .. } if matrix.residual() > UNITARY_TOL => {
                Err(Error::NotUnitary(matrix.residual()))
            }
            _ => {
                self.local_matrix()?;
                Ok(())
            }
        }
    }
}

/// 2×2 beam splitter matrix in the crate convention.
pub fn bs_matrix(theta: f64, phi: f64) -> DMatrix<Complex64> {
    let (s, c) = theta.sin_cos();
    let i = Complex64::new(0.0, 1.0);
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            i * Complex64::from_polar(s, -phi),
            i * Complex64::from_polar(s, phi),
            Complex64::new(c, 0.0),
        ],
    )
}

/// An ordered list of elements on a fixed number of modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub modes: usize,
    pub elements: Vec<Element>,
}

impl Circuit {
    pub fn new(modes: usize) -> Self {
        Self {
            modes,
            elements: Vec::new(),
        }
    }

    pub fn with_elements(modes: usize, elements: Vec<Element>) -> Result<Self> {
        let c = Self { modes, elements };
        c.validate()?;
        Ok(c)
    }

    pub fn push(&mut self, e: Element) -> Result<&mut Self> {
        e.validate(self.modes)?;
        self.elements.push(e);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.elements.iter().try_for_each(|e| e.validate(self.modes))
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit> {
        if self.modes != other.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                actual: other.modes,
            });
        }
        let mut elements = self.elements.clone();
        elements.extend(other.elements.iter().cloned());
        Ok(Circuit {
            modes: self.modes,
            elements,
        })
    }

    pub fn beam_splitter_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, Element::BeamSplitter { .. }))
            .count()
    }
}

/// Left-multiplies the rows `modes` of `u` by the local matrix `a`.
fn apply_rows(u: &mut DMatrix<Complex64>, modes: &[usize], a: &DMatrix<Complex64>) {
    let cols = u.ncols();
    let mut buf = vec![ZERO; modes.len()];
    for c in 0..cols {
        for (r, slot) in buf.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (k, &mk) in modes.iter().enumerate() {
                acc += a[(r, k)] * u[(mk, c)];
            }
            *slot = acc;
        }
        for (r, &mr) in modes.iter().enumerate() {
            u[(mr, c)] = buf[r];
        }
    }
}

/// Compiles a circuit into its mode unitary.
pub fn compile(c: &Circuit) -> Result<UnitaryMatrix> {
    c.validate()?;
    let mut u = DMatrix::identity(c.modes, c.modes);
    for e in &c.elements {
        apply_rows(&mut u, &e.modes(), &e.local_matrix()?);
    }
    Ok(UnitaryMatrix::from_trusted(u))
}

/// `U_jk = ω^{jk}/√m` with `ω = e^{2πi/m}`.
pub fn dft(m: usize) -> UnitaryMatrix {
    let norm = 1.0 / (m as f64).sqrt();
    UnitaryMatrix::from_trusted(DMatrix::from_fn(m, m, |j, k| {
        let e = ((j * k) % m) as f64;
        Complex64::from_polar(norm, 2.0 * PI * e / m as f64)
    }))
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> UnitaryMatrix {
    let g = DMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..m {
            q[(i, j)] *= ph;
        }
    }
    UnitaryMatrix::from_trusted(q)
}

/// Mode pairs of the rectangular mesh in circuit order. The layout depends
/// only on `m` and has `m(m−1)/2` cells.
pub fn mesh_layout(m: usize) -> Vec<(usize, usize)> {
    let mut cols = Vec::new();
    let mut rows = Vec::new();
    for i in 1..m {
        if i % 2 == 1 {
            for j in 0..i {
                let k = i - 1 - j;
                cols.push((k, k + 1));
            }
        } else {
            for j in 1..=i {
                let r = m + j - i - 1;
                rows.push((r - 1, r));
            }
        }
    }
    rows.reverse();
    cols.extend(rows);
    cols
}

/// Circuit for the mesh with per-cell `(θ, φ)` followed by one output phase
/// per mode. `params` has length `m(m−1) + m`.
pub fn mesh_circuit(m: usize, params: &[f64]) -> Result<Circuit> {
    let layout = mesh_layout(m);
    let need = 2 * layout.len() + m;
    if params.len() != need {
        return Err(Error::LengthMismatch {
            expected: need,
            actual: params.len(),
        });
    }
    let mut elements = Vec::with_capacity(layout.len() + m);
    for (cell, &(a, b)) in layout.iter().enumerate() {
        elements.push(Element::bs(a, b, params[2 * cell], params[2 * cell + 1]));
    }
    for (k, &p) in params[2 * layout.len()..].iter().enumerate() {
        elements.push(Element::phase(k, p));
    }
    Ok(Circuit { modes: m, elements })
}

/// Mesh parameters reproducing `u` (inverse of [`mesh_circuit`]).
pub fn decompose_params(u: &UnitaryMatrix) -> Result<Vec<f64>> {
    let r = u.residual();
    if r > 1e-9 {
        return Err(Error::NotUnitary(r));
    }
    let m = u.dim();
    let mut w = u.matrix().clone();
    let mut right: Vec<(usize, f64, f64)> = Vec::new();
    let mut left: Vec<(usize, f64, f64)> = Vec::new();
    for i in 1..m {
        if i % 2 == 1 {
            for j in 0..i {
                let row = m - 1 - j;
                let k = i - 1 - j;
                let x = w[(row, k)];
                let y = w[(row, k + 1)];
                let theta = x.norm().atan2(y.norm());
                let phi = x.arg() - y.arg() - PI / 2.0;
                // w ← w · B(θ,φ)† on columns (k, k+1)
                let bd = bs_matrix(theta, phi).adjoint();
                for rr in 0..m {
                    let a = w[(rr, k)];
                    let b = w[(rr, k + 1)];
                    w[(rr, k)] = a * bd[(0, 0)] + b * bd[(1, 0)];
                    w[(rr, k + 1)] = a * bd[(0, 1)] + b * bd[(1, 1)];
                }
                right.push((k, theta, phi));
            }
        } else {
            for j in 1..=i {
                let row = m + j - i - 1;
                let col = j - 1;
                let x = w[(row - 1, col)];
                let y = w[(row, col)];
                let theta = y.norm().atan2(x.norm());
                let phi = y.arg() - x.arg() + PI / 2.0;
                apply_rows(&mut w, &[row - 1, row], &bs_matrix(theta, phi));
                left.push((row - 1, theta, phi));
            }
        }
    }
    let mut diag: Vec<f64> = (0..m).map(|k| w[(k, k)].arg()).collect();
    // U = L₁⁻¹…L_p⁻¹ D R_q…R₁; push each L⁻¹ through D.
    let mut moved = Vec::with_capacity(left.len());
    for &(k, theta, phi) in left.iter().rev() {
        let (a, b) = (diag[k], diag[k + 1]);
        moved.push((k, theta, phi + a - b + PI));
    }
    // moved is B'_p … B'_1 in acting order.
    let mut params = Vec::with_capacity(m * (m - 1) + m);
    for &(_, t, p) in right.iter().chain(moved.iter()) {
        params.push(t);
        params.push(wrap_phase(p));
    }
    for d in diag.iter_mut() {
        *d = wrap_phase(*d);
    }
    params.extend(diag);
    Ok(params)
}

/// Wraps a phase into (−π, π].
pub fn wrap_phase(p: f64) -> f64 {
    let mut x = p.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Rectangular-mesh decomposition of `u` into `m(m−1)/2` beam splitters and
/// `m` output phases.
pub fn decompose(u: &UnitaryMatrix) -> Result<Circuit> {
    mesh_circuit(u.dim(), &decompose_params(u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn swap_compiles_to_permutation() {
        let mut circ = Circuit::new(2);
        circ.push(Element::swap(0, 1)).unwrap();
        let u = compile(&circ).unwrap();
        assert_eq!(u.get(0, 1), ONE);
        assert_eq!(u.get(1, 0), ONE);
        assert_eq!(u.get(0, 0), ZERO);
    }

    #[test]
    fn balanced_beam_splitter() {
        let u = compile(&Circuit::with_elements(2, vec![Element::bs50(0, 1)]).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u.get(0, 0) - c(h, 0.0)).norm() < 1e-15);
        assert!((u.get(0, 1) - c(0.0, h)).norm() < 1e-15);
        assert!((u.get(1, 0) - c(0.0, h)).norm() < 1e-15);
        assert!((u.get(1, 1) - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn element_validation() {
        let mut circ = Circuit::new(3);
        assert!(matches!(
            circ.push(Element::bs50(0, 3)),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert!(matches!(
            circ.push(Element::swap(1, 1)),
            Err(Error::DuplicateMode(1))
        ));
        let bad = DMatrix::from_element(2, 2, ONE);
        assert!(UnitaryMatrix::new(bad).is_err());
    }

    #[test]
    fn dft_examples() {
        let d2 = dft(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((d2.get(1, 1) - c(-h, 0.0)).norm() < 1e-15);
        assert!((d2.get(0, 1) - c(h, 0.0)).norm() < 1e-15);
        let d3 = dft(3);
        let row_sum: Complex64 = (0..3).map(|k| d3.get(0, k)).sum();
        assert!((row_sum - c(3f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!(dft(5).residual() < 1e-12);
        assert!(dft(7).residual() < 1e-12);
    }

    #[test]
    fn unitarity_residuals() {
        let id: DMatrix<Complex64> = DMatrix::identity(4, 4);
        assert_eq!(verify_unitarity(&id), 0.0);
        let scaled = id.map(|z| z * 1.1);
        // Direct arithmetic: 1.1² − 1 = 0.21.
        assert!((verify_unitarity(&scaled) - 0.21).abs() < 1e-12);
    }

    #[test]
    fn layout_size() {
        for m in 1..9 {
            assert_eq!(mesh_layout(m).len(), m * (m - 1) / 2);
        }
    }

    #[test]
    fn decompose_identity_and_dft() {
        let id = UnitaryMatrix::identity(4);
        let circ = decompose(&id).unwrap();
        for e in &circ.elements {
            if let Element::BeamSplitter { theta, .. } = e {
                assert!(theta.abs() < 1e-12);
            }
        }
        assert!(compile(&circ).unwrap().distance(&id) < 1e-12);
        let d4 = dft(4);
        assert!(compile(&decompose(&d4).unwrap()).unwrap().distance(&d4) < 1e-9);
    }

    #[test]
    fn decompose_round_trip_haar() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [2, 5, 6] {
            let u = haar_unitary(m, &mut rng);
            assert!(u.residual() < 1e-12);
            let circ = decompose(&u).unwrap();
            assert_eq!(circ.beam_splitter_count(), m * (m - 1) / 2);
            assert!(compile(&circ).unwrap().distance(&u) < 1e-9);
        }
    }

    #[test]
    fn decompose_round_trip_hundred_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..100 {
            let m = 1 + k % 8;
            let u = haar_unitary(m, &mut rng);
            let back = compile(&decompose(&u).unwrap()).unwrap();
            assert!(back.distance(&u) < 1e-9, "m={m}");
        }
    }

    #[test]
    fn serde_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let circ = Circuit::with_elements(
            3,
            vec![
                Element::bs(0, 1, 0.3, 1.2),
                Element::phase(2, 0.5),
                Element::dft([0, 1, 2]),
                Element::Unitary {
                    modes: vec![2, 0],
                    matrix: haar_unitary(2, &mut rng),
                },
            ],
        )
        .unwrap();
        let json = serde_json::to_string(&circ).unwrap();
        let back: Circuit = serde_json::from_str(&json).unwrap();
        assert!(compile(&back).unwrap().distance(&compile(&circ).unwrap()) < 1e-15);
    }

    fn arb_element(m: usize) -> impl Strategy<Value = Element> {
        let pair = (0..m, 0..m).prop_filter("distinct", |(a, b)| a != b);
        prop_oneof![
            (pair.clone(), -3.2f64..3.2, -3.2f64..3.2)
                .prop_map(|((a, b), t, p)| Element::bs(a, b, t, p)),
            (0..m, -3.2f64..3.2).prop_map(|(a, p)| Element::phase(a, p)),
            pair.prop_map(|(a, b)| Element::swap(a, b)),
        ]
    }

    proptest! {
        #[test]
        fn compile_is_homomorphic(
            a in prop::collection::vec(arb_element(4), 0..6),
            b in prop::collection::vec(arb_element(4), 0..6),
        ) {
            let c1 = Circuit::with_elements(4, a).unwrap();
            let c2 = Circuit::with_elements(4, b).unwrap();
            let joined = compile(&c1.then(&c2).unwrap()).unwrap();
            let product = compile(&c2).unwrap().mul(&compile(&c1).unwrap()).unwrap();
            prop_assert!(joined.distance(&product) < 1e-12);
            prop_assert!(joined.residual() < 1e-12);
        }

        #[test]
        fn decompose_inverts_compile(seed in any::<u64>(), m in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = haar_unitary(m, &mut rng);
            let back = compile(&decompose(&u).unwrap()).unwrap();
            prop_assert!(back.distance(&u) < 1e-9);
        }
    }
}
