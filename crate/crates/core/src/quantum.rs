//! Quantum states, effects, POVMs, and the Born-rule consistency check.
//!
//! The Born rule is treated as a flagging device with three independent
//! inputs: a state, a measurement, and a probability assignment. Checking
//! consistency reports residuals; it never repairs anything.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cr, eig_hermitian, entropy_of_eigenvalues, is_psd, ComplexMatrix, DEFAULT_TOL};

/// Validated density matrix: Hermitian, positive semidefinite, unit trace
/// (each to 1e-10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(matrix: ComplexMatrix) -> Result<Self> {
        DensityMatrix::new(matrix)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.matrix
    }
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_TOL)
    }

    /// Validates with an explicit tolerance (relative, like [`is_psd`]).
    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.check_hermitian(tol)?;
        let spectrum = eig_hermitian(&matrix)?;
        let scale = spectrum.max_abs_eigenvalue().max(1.0);
        if spectrum.min_eigenvalue() < -tol * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: spectrum.min_eigenvalue(),
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::NotUnitTrace {
                trace: trace.re,
                tol,
            });
        }
        Ok(Self { matrix })
    }

    /// Re-symmetrizes, rescales the trace to one, then validates at `tol`.
    ///
    /// Used for states coming out of numerical integration or averaging,
    /// where roundoff accumulates beyond the constructor default.
    pub fn renormalized(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let herm = matrix.hermitian_part();
        let trace = herm.trace().re;
        if trace <= 0.0 {
            return Err(Error::NotUnitTrace { trace, tol });
        }
        Self::with_tolerance(herm.scale(cr(1.0 / trace)), tol)
    }

    /// |k><k| in dimension `dim`.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m.set(k, k, Complex64::ONE);
        Self { matrix: m }
    }

    /// I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(cr(1.0 / dim as f64)),
        }
    }

    /// Normalized |psi><psi| from a column vector.
    pub fn pure(ket: &ComplexMatrix) -> Result<Self> {
        if ket.cols() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "pure state needs a column vector, got {}x{}",
                ket.rows(),
                ket.cols()
            )));
        }
        let norm_sq: f64 = ket.data().iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::NotUnitTrace {
                trace: 0.0,
                tol: DEFAULT_TOL,
            });
        }
        let proj = (&(ket * &ket.adjoint())).scale(cr(1.0 / norm_sq));
        Ok(Self { matrix: proj })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Von Neumann entropy in nats. The state is valid by construction so
    /// this never fails.
    pub fn von_neumann_entropy(&self) -> f64 {
        let spectrum = eig_hermitian(&self.matrix).expect("validated state");
        entropy_of_eigenvalues(spectrum.eigenvalues())
    }

    /// tr(rho^2).
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// POVM element: Hermitian, PSD, and bounded by the identity (all to 1e-10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct Effect {
    matrix: ComplexMatrix,
}

impl TryFrom<ComplexMatrix> for Effect {
    type Error = Error;

    fn try_from(matrix: ComplexMatrix) -> Result<Self> {
        Effect::new(matrix)
    }
}

impl From<Effect> for ComplexMatrix {
    fn from(e: Effect) -> Self {
        e.matrix
    }
}

impl Effect {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "effect must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.check_hermitian(DEFAULT_TOL)?;
        let spectrum = eig_hermitian(&matrix)?;
        let scale = spectrum.max_abs_eigenvalue().max(1.0);
        if spectrum.min_eigenvalue() < -DEFAULT_TOL * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: spectrum.min_eigenvalue(),
            });
        }
        let complement = &ComplexMatrix::identity(matrix.dim()) - &matrix;
        if !is_psd(&complement, DEFAULT_TOL)? {
            let s = eig_hermitian(&complement)?;
            return Err(Error::EffectExceedsIdentity {
                min_eigenvalue: s.min_eigenvalue(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Ordered collection of effects summing to the identity (to 1e-10 entrywise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Effect>", into = "Vec<Effect>")]
pub struct Povm {
    effects: Vec<Effect>,
}

impl TryFrom<Vec<Effect>> for Povm {
    type Error = Error;

    fn try_from(effects: Vec<Effect>) -> Result<Self> {
        Povm::new(effects)
    }
}

impl From<Povm> for Vec<Effect> {
    fn from(p: Povm) -> Self {
        p.effects
    }
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let dim = match effects.first() {
            Some(e) => e.dim(),
            None => {
                return Err(Error::DimensionMismatch(
                    "a POVM needs at least one effect".into(),
                ))
            }
        };
        if effects.iter().any(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "all effects in a POVM must share one dimension".into(),
            ));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &effects {
            sum.add_scaled(Complex64::ONE, e.matrix());
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if residual > DEFAULT_TOL {
            return Err(Error::IncompleteEffects { residual });
        }
        Ok(Self { effects })
    }

    /// The trivial single-element POVM {I}.
    pub fn trivial(dim: usize) -> Self {
        Self {
            effects: vec![Effect::identity(dim)],
        }
    }

    /// Projective measurement onto the computational basis.
    pub fn projective_computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|k| Effect {
                matrix: ComplexMatrix::basis_unit(dim, k, k),
            })
            .collect();
        Self { effects }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }
}

/// Probability assignment over measurement outcomes.
///
/// Entries may carry roundoff slack of 1e-12 below zero or above one; the
/// total must be 1 within 1e-10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector {
    p: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        ProbVector::new(p)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(v: ProbVector) -> Self {
        v.p
    }
}

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbabilities("empty vector".into()));
        }
        for (i, &x) in p.iter().enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(&x) || !x.is_finite() {
                return Err(Error::InvalidProbabilities(format!(
                    "entry {i} is {x}, outside [0, 1]"
                )));
            }
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProbabilities(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(Self { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }
}

/// Verdict of the Born-rule consistency check.
///
/// An inconsistent verdict carries the per-outcome residuals
/// `|p_i - tr(rho E_i)|`. Flagging only: nothing prescribes a repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConsistencyVerdict {
    Consistent,
    Inconsistent { residuals: Vec<f64> },
}

impl ConsistencyVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, ConsistencyVerdict::Consistent)
    }

    pub fn max_residual(&self) -> f64 {
        match self {
            ConsistencyVerdict::Consistent => 0.0,
            ConsistencyVerdict::Inconsistent { residuals } => {
                residuals.iter().copied().fold(0.0, f64::max)
            }
        }
    }
}

/// tr(rho E), clamped to [0, 1].
pub fn born_probability(rho: &DensityMatrix, effect: &Effect) -> Result<f64> {
    if rho.dim() != effect.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs effect dim {}",
            rho.dim(),
            effect.dim()
        )));
    }
    let t = (rho.matrix() * effect.matrix()).trace();
    debug_assert!(t.im.abs() <= 1e-12 * t.re.abs().max(1.0));
    Ok(t.re.clamp(0.0, 1.0))
}

/// Checks a (state, POVM, probability) triple for Born-rule consistency.
///
/// Consistent iff `max_i |p_i - tr(rho E_i)| <= tol`.
pub fn check_born_consistency(
    rho: &DensityMatrix,
    povm: &Povm,
    p: &ProbVector,
    tol: f64,
) -> Result<ConsistencyVerdict> {
    if povm.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} effects vs {} probabilities",
            povm.len(),
            p.len()
        )));
    }
    let residuals: Vec<f64> = povm
        .effects()
        .iter()
        .zip(p.values().iter())
        .map(|(e, &pi)| born_probability(rho, e).map(|b| (pi - b).abs()))
        .collect::<Result<_>>()?;
    if residuals.iter().all(|&r| r <= tol) {
        Ok(ConsistencyVerdict::Consistent)
    } else {
        Ok(ConsistencyVerdict::Inconsistent { residuals })
    }
}

/// Induced probability assignment tr(rho E_i) for every effect of a POVM.
pub fn induced_probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<ProbVector> {
    let mut p = Vec::with_capacity(povm.len());
    for e in povm.effects() {
        p.push(born_probability(rho, e)?);
    }
    ProbVector::new(p)
}

/// The unnormalized maximally entangled column vector sum_k |k>|k>.
///
/// Its squared norm is d; the normalization is deliberately left off so that
/// Choi matrices built from it carry trace d for trace-preserving maps.
pub fn maximally_entangled(dim: usize) -> ComplexMatrix {
    assert!(dim >= 1, "dimension must be at least 1");
    let mut v = ComplexMatrix::zeros(dim * dim, 1);
    for k in 0..dim {
        v.set(k * dim + k, 0, Complex64::ONE);
    }
    v
}

// Fixed 2x2 operators shared across modules and tests. |g> = |0>, |e> = |1>.

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![cr(0.0), cr(1.0), cr(1.0), cr(0.0)]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    use crate::matrix::c;
    ComplexMatrix::new(2, 2, vec![cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0])
}

/// Lowering operator |g><e|.
pub fn sigma_minus() -> ComplexMatrix {
    ComplexMatrix::basis_unit(2, 0, 1)
}

/// Raising operator |e><g|.
pub fn sigma_plus() -> ComplexMatrix {
    ComplexMatrix::basis_unit(2, 1, 0)
}

pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::new(2, 2, vec![cr(s), cr(s), cr(s), cr(-s)]).unwrap()
}

/// CNOT on two qubits, first factor = control.
pub fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m.set(0, 0, Complex64::ONE);
    m.set(1, 1, Complex64::ONE);
    m.set(2, 3, Complex64::ONE);
    m.set(3, 2, Complex64::ONE);
    m
}

/// SWAP on two qubits.
pub fn swap_gate() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    m.set(0, 0, Complex64::ONE);
    m.set(1, 2, Complex64::ONE);
    m.set(2, 1, Complex64::ONE);
    m.set(3, 3, Complex64::ONE);
    m
}

/// |+><+|.
pub fn plus_state() -> DensityMatrix {
    let mut ket = ComplexMatrix::zeros(2, 1);
    ket.set(0, 0, Complex64::ONE);
    ket.set(1, 0, Complex64::ONE);
    DensityMatrix::pure(&ket).unwrap()
}
