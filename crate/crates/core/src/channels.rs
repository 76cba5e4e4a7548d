//! Kraus maps, Choi matrices, complete-positivity tests, dilations, and the
//! standard qubit channels.
//!
//! Conventions, fixed across the crate:
//! - the Choi matrix of a map Phi on dimension d is
//!   `sum_kl |k><l| (x) Phi(|k><l|)`, i.e. (I (x) Phi) applied to the
//!   projector onto the unnormalized entangled vector sum_k |k>|k>;
//!   a trace-preserving map therefore has Choi trace d;
//! - the reference factor is the first (slow) tensor index;
//! - a map is completely positive iff its Choi matrix is positive
//!   semidefinite, and that test is the contract here, both directions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cr, eig_hermitian, ComplexMatrix, Spectrum, Subsystem, DEFAULT_TOL};
use crate::quantum::{pauli_x, pauli_y, pauli_z, DensityMatrix, Effect, Povm};

/// Conditioning on outcomes below this probability is an error, not a
/// renormalization of noise.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// A measurement in Kraus form: per outcome i, a nonempty operator list
/// A_ik with induced effect E_i = sum_k A_ik† A_ik; the effects must form a
/// POVM (sum to the identity within 1e-10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<ComplexMatrix>>", into = "Vec<Vec<ComplexMatrix>>")]
pub struct KrausMap {
    dim: usize,
    outcomes: Vec<Vec<ComplexMatrix>>,
}

impl TryFrom<Vec<Vec<ComplexMatrix>>> for KrausMap {
    type Error = Error;

    fn try_from(outcomes: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        KrausMap::new(outcomes)
    }
}

impl From<KrausMap> for Vec<Vec<ComplexMatrix>> {
    fn from(k: KrausMap) -> Self {
        k.outcomes
    }
}

impl KrausMap {
    pub fn new(outcomes: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let dim = outcomes
            .first()
            .and_then(|ops| ops.first())
            .map(|a| a.rows())
            .ok_or_else(|| {
                Error::DimensionMismatch("a measurement needs at least one Kraus operator".into())
            })?;
        for ops in &outcomes {
            if ops.is_empty() {
                return Err(Error::DimensionMismatch(
                    "every outcome needs at least one Kraus operator".into(),
                ));
            }
            for a in ops {
                if !a.is_square() || a.rows() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "Kraus operator is {}x{}, expected {dim}x{dim}",
                        a.rows(),
                        a.cols()
                    )));
                }
            }
        }
        let map = Self { dim, outcomes };
        // Validates each induced effect and their completeness in one sweep.
        map.effects()?;
        Ok(map)
    }

    /// The trivial measurement {I} with a single outcome.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            outcomes: vec![vec![ComplexMatrix::identity(dim)]],
        }
    }

    /// Projective measurement onto the computational basis.
    pub fn projective_computational(dim: usize) -> Self {
        Self {
            dim,
            outcomes: (0..dim)
                .map(|k| vec![ComplexMatrix::basis_unit(dim, k, k)])
                .collect(),
        }
    }

    /// One outcome per Kraus operator of a channel.
    pub fn from_channel(channel: &Channel) -> Self {
        Self {
            dim: channel.dim(),
            outcomes: channel.kraus_ops().iter().map(|a| vec![a.clone()]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcomes(&self) -> &[Vec<ComplexMatrix>] {
        &self.outcomes
    }

    /// Induced effect E_i = sum_k A_ik† A_ik of one outcome.
    pub fn effect_matrix(&self, i: usize) -> ComplexMatrix {
        let mut e = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.outcomes[i] {
            e.add_scaled(Complex64::ONE, &(&a.adjoint() * a));
        }
        e.hermitian_part()
    }

    /// The POVM of induced effects, order-preserving.
    pub fn effects(&self) -> Result<Povm> {
        let effects = (0..self.n_outcomes())
            .map(|i| Effect::new(self.effect_matrix(i)))
            .collect::<Result<Vec<_>>>()?;
        Povm::new(effects)
    }

    /// The unnormalized selective action sum_k A_ik m A_ik† of one outcome.
    pub fn outcome_action(&self, i: usize, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.outcomes[i] {
            out.add_scaled(Complex64::ONE, &(&(a * m) * &a.adjoint()));
        }
        out
    }

    /// Choi matrix of the selective map of one outcome.
    pub fn outcome_choi(&self, i: usize) -> ChoiMatrix {
        ChoiMatrix::new(choi_of_map(self.dim, |unit| self.outcome_action(i, unit)), self.dim)
            .expect("Kraus-form maps have Hermitian Choi matrices")
    }

    /// The unconditional channel: all outcomes merged into one operator list.
    pub fn merged(&self) -> Channel {
        let ops: Vec<ComplexMatrix> = self.outcomes.iter().flatten().cloned().collect();
        Channel { dim: self.dim, ops }
    }

    /// Choi matrix of the merged (unconditional) map.
    pub fn choi(&self) -> ChoiMatrix {
        self.merged().choi()
    }
}

/// POVM of induced effects of a measurement, order-preserving.
pub fn effects_from_kraus(map: &KrausMap) -> Povm {
    map.effects()
        .expect("KrausMap validated its effects at construction")
}

/// Unconditional trace-preserving map: one Kraus list with
/// sum_j A_j† A_j = I within 1e-10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexMatrix>", into = "Vec<ComplexMatrix>")]
pub struct Channel {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl TryFrom<Vec<ComplexMatrix>> for Channel {
    type Error = Error;

    fn try_from(ops: Vec<ComplexMatrix>) -> Result<Self> {
        Channel::new(ops)
    }
}

impl From<Channel> for Vec<ComplexMatrix> {
    fn from(c: Channel) -> Self {
        c.ops
    }
}

impl Channel {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = ops
            .first()
            .map(|a| a.rows())
            .ok_or_else(|| Error::DimensionMismatch("a channel needs Kraus operators".into()))?;
        for a in &ops {
            if !a.is_square() || a.rows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator is {}x{}, expected {dim}x{dim}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for a in &ops {
            sum.add_scaled(Complex64::ONE, &(&a.adjoint() * a));
        }
        let residual = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if residual > DEFAULT_TOL {
            return Err(Error::IncompleteEffects { residual });
        }
        Ok(Self { dim, ops })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            ops: vec![ComplexMatrix::identity(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    /// Raw linear action sum_j A_j m A_j† on an arbitrary matrix.
    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.ops {
            out.add_scaled(Complex64::ONE, &(&(a * m) * &a.adjoint()));
        }
        out
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix::new(choi_of_map(self.dim, |unit| self.apply(unit)), self.dim)
            .expect("Kraus-form maps have Hermitian Choi matrices")
    }
}

/// sum_j A_j rho A_j†, renormalization-free because the channel is
/// trace-preserving.
pub fn apply_channel(phi: &Channel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if phi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel dim {} vs state dim {}",
            phi.dim(),
            rho.dim()
        )));
    }
    DensityMatrix::new(phi.apply(rho.matrix()).hermitian_part())
}

/// Post-measurement state and outcome probability for outcome i:
/// rho_i = (1/p_i) sum_k A_ik rho A_ik†, p_i = tr(rho E_i).
///
/// Conditioning below [`PROBABILITY_FLOOR`] is refused.
pub fn post_measurement_state(
    rho: &DensityMatrix,
    map: &KrausMap,
    i: usize,
) -> Result<(DensityMatrix, f64)> {
    if map.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement dim {} vs state dim {}",
            map.dim(),
            rho.dim()
        )));
    }
    if i >= map.n_outcomes() {
        return Err(Error::OutcomeOutOfRange {
            index: i,
            n_outcomes: map.n_outcomes(),
        });
    }
    let raw = map.outcome_action(i, rho.matrix());
    let p = raw.trace().re;
    if p <= PROBABILITY_FLOOR {
        return Err(Error::ZeroProbabilityOutcome {
            outcome: i,
            probability: p,
            floor: PROBABILITY_FLOOR,
        });
    }
    let state = DensityMatrix::new(raw.scale(cr(1.0 / p)).hermitian_part())?;
    Ok((state, p))
}

/// d^2 x d^2 operator certifying complete positivity of its source map.
///
/// Hermitian by construction check; positive semidefinite exactly when the
/// source map is completely positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiRepr", into = "ChoiRepr")]
pub struct ChoiMatrix {
    matrix: ComplexMatrix,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct ChoiRepr {
    dim: usize,
    matrix: ComplexMatrix,
}

impl TryFrom<ChoiRepr> for ChoiMatrix {
    type Error = Error;

    fn try_from(r: ChoiRepr) -> Result<Self> {
        ChoiMatrix::new(r.matrix, r.dim)
    }
}

impl From<ChoiMatrix> for ChoiRepr {
    fn from(c: ChoiMatrix) -> Self {
        ChoiRepr {
            dim: c.dim,
            matrix: c.matrix,
        }
    }
}

impl ChoiMatrix {
    pub fn new(matrix: ComplexMatrix, dim: usize) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix for dim {dim} must be {0}x{0}, got {1}x{2}",
                dim * dim,
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.check_hermitian(DEFAULT_TOL)?;
        Ok(Self { matrix, dim })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Source-map dimension d (the matrix itself is d^2 x d^2).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spectrum(&self) -> Spectrum {
        eig_hermitian(&self.matrix).expect("Choi matrices are Hermitian by construction")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().min_eigenvalue()
    }

    /// Entrywise distance between two Choi matrices.
    pub fn distance(&self, other: &ChoiMatrix) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        crate::matrix::is_psd(&self.matrix, tol).expect("Hermitian by construction")
    }
}

/// Raw Choi matrix sum_kl |k><l| (x) map(|k><l|) of a linear map given by its
/// action on the d^2 basis units. Not guaranteed Hermitian for arbitrary
/// maps; wrap in [`ChoiMatrix::new`] to check.
pub fn choi_of_map(dim: usize, map: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let d2 = dim * dim;
    let mut choi = ComplexMatrix::zeros(d2, d2);
    for k in 0..dim {
        for l in 0..dim {
            let image = map(&ComplexMatrix::basis_unit(dim, k, l));
            debug_assert_eq!((image.rows(), image.cols()), (dim, dim));
            for r in 0..dim {
                for c in 0..dim {
                    choi.set(k * dim + r, l * dim + c, image.get(r, c));
                }
            }
        }
    }
    choi
}

/// Choi's criterion: the map is completely positive iff its Choi matrix is
/// positive semidefinite at the given (relative) tolerance.
///
/// Fails only if the supplied action is not Hermiticity-preserving, in which
/// case its Choi matrix is not Hermitian and the question is ill-posed.
pub fn is_completely_positive(
    dim: usize,
    map: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    tol: f64,
) -> Result<bool> {
    let choi = ChoiMatrix::new(choi_of_map(dim, map), dim)?;
    Ok(choi.is_psd(tol))
}

/// The transpose map, the canonical positive-but-not-completely-positive
/// witness; its Choi matrix is the SWAP operator.
pub fn transpose_map(m: &ComplexMatrix) -> ComplexMatrix {
    m.transpose()
}

/// Canonical (spectral) Kraus extraction from a Choi matrix.
///
/// Eigenvalues below `-tol * max(1, |lambda|_max)` mean the map is not
/// completely positive; small negatives inside the tolerance are clamped to
/// zero, and zero modes are dropped. The result is trace-preserving only if
/// the Choi matrix was compatible; that is validated by `Channel::new`.
pub fn kraus_from_choi(choi: &ChoiMatrix, tol: f64) -> Result<Channel> {
    let spectrum = choi.spectrum();
    let scale = spectrum.max_abs_eigenvalue().max(1.0);
    let min = spectrum.min_eigenvalue();
    if min < -tol * scale {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: min,
        });
    }
    let d = choi.dim();
    let mut ops = Vec::new();
    for (idx, &lambda) in spectrum.eigenvalues().iter().enumerate() {
        if lambda <= tol * scale {
            continue;
        }
        let v = spectrum.eigenvector(idx);
        // Eigenvector component (k, m) is the (m, k) entry of the operator.
        let a = ComplexMatrix::from_fn(d, d, |m, k| v.get(k * d + m, 0) * lambda.sqrt());
        ops.push(a);
    }
    if ops.is_empty() {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: min,
        });
    }
    Channel::new(ops)
}

/// Conditional probability p(j|i) of a second-measurement effect F after
/// outcome i of a first measurement, computed along two algebraically equal
/// routes:
///
/// 1. tr(Phi_i(rho) F) / p_i directly on the post-measurement state;
/// 2. tr[ Choi_i (rho^T (x) F) ] / p_i through the Choi matrix.
///
/// The routes must agree to 1e-8 or the call reports an internal bug.
pub fn sequential_probability(
    rho: &DensityMatrix,
    map: &KrausMap,
    i: usize,
    effect: &Effect,
) -> Result<f64> {
    if effect.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "effect dim {} vs state dim {}",
            effect.dim(),
            rho.dim()
        )));
    }
    let (post, p) = post_measurement_state(rho, map, i)?;
    let direct = (post.matrix() * effect.matrix()).trace().re;

    let choi = map.outcome_choi(i);
    let argument = rho.matrix().transpose().tensor(effect.matrix());
    let via_choi = (choi.matrix() * &argument).trace().re / p;

    let difference = (direct - via_choi).abs();
    if difference > 1e-8 {
        return Err(Error::InternalDisagreement { difference });
    }
    Ok(direct.clamp(0.0, 1.0))
}

/// Kraus freedom: B_j = sum_i u_ji A_i for an isometry u leaves the Choi
/// matrix, and therefore the channel, unchanged.
pub fn remix_kraus(phi: &Channel, u: &ComplexMatrix) -> Result<Channel> {
    let m = phi.kraus_ops().len();
    if u.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "remix matrix has {} columns for {m} Kraus operators",
            u.cols()
        )));
    }
    let gram = &u.adjoint() * u;
    let residual = gram.max_abs_diff(&ComplexMatrix::identity(m));
    if residual > DEFAULT_TOL {
        return Err(Error::NotIsometry { residual });
    }
    let d = phi.dim();
    let ops = (0..u.rows())
        .map(|j| {
            let mut b = ComplexMatrix::zeros(d, d);
            for (i, a) in phi.kraus_ops().iter().enumerate() {
                b.add_scaled(u.get(j, i), a);
            }
            b
        })
        .collect();
    Channel::new(ops)
}

/// Unitary representation of a channel on system (x) environment.
///
/// The environment starts in |0><0|; tracing it out of
/// U (rho (x) |0><0|) U† recovers the source channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StinespringDilation {
    env_dim: usize,
    env_state: DensityMatrix,
    unitary: ComplexMatrix,
}

impl StinespringDilation {
    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn env_state(&self) -> &DensityMatrix {
        &self.env_state
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn system_dim(&self) -> usize {
        self.unitary.rows() / self.env_dim
    }

    /// Recover the channel by tracing out the environment.
    pub fn to_channel(&self) -> Result<Channel> {
        channel_from_dilation(&self.unitary, &self.env_state)
    }
}

/// Builds a dilation of a channel with m Kraus operators on an m-dimensional
/// environment: U (|psi> (x) |0>) = sum_j (A_j |psi>) (x) |j>, completed to a
/// full unitary by orthonormal extension of the remaining columns.
///
/// Only the env-|0> column block is contract-bearing; the completion is an
/// arbitrary valid choice (here: Gram-Schmidt over canonical basis vectors).
pub fn stinespring_dilate(phi: &Channel) -> StinespringDilation {
    let d = phi.dim();
    let m = phi.kraus_ops().len();
    let n = d * m;

    // Specified columns: input (c, env 0) -> sum_j A_j e_c (x) |j>.
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for c in 0..d {
        let mut col = vec![Complex64::ZERO; n];
        for (j, a) in phi.kraus_ops().iter().enumerate() {
            for r in 0..d {
                col[r * m + j] = a.get(r, c);
            }
        }
        columns.push(col);
    }

    // Orthonormal completion from canonical candidates.
    let mut candidates = 0..n;
    while columns.len() < n {
        let k = candidates.next().expect("canonical basis spans the space");
        let mut v = vec![Complex64::ZERO; n];
        v[k] = Complex64::ONE;
        for _pass in 0..2 {
            for u in &columns {
                let overlap: Complex64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u.iter()) {
                    *vi -= overlap * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        columns.push(v);
    }

    // Column order: the j-th completion column serves input slot (c, e) in
    // row-major (c, e) order, skipping the already-specified (c, 0) slots.
    let mut unitary = ComplexMatrix::zeros(n, n);
    let mut extras = columns[d..].iter();
    for c in 0..d {
        for e in 0..m {
            let col = if e == 0 {
                &columns[c]
            } else {
                extras.next().expect("completion filled all remaining slots")
            };
            for r in 0..n {
                unitary.set(r, c * m + e, col[r]);
            }
        }
    }
    debug_assert!(
        (&unitary.adjoint() * &unitary).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-10
    );

    StinespringDilation {
        env_dim: m,
        env_state: DensityMatrix::basis_state(m, 0),
        unitary,
    }
}

/// Channel rho -> tr_env[ U (rho (x) env_state) U† ], extracted via the Choi
/// matrix of that action followed by spectral Kraus decomposition.
pub fn channel_from_dilation(u: &ComplexMatrix, env_state: &DensityMatrix) -> Result<Channel> {
    let n = u.rows();
    let e = env_state.dim();
    if !u.is_square() || n % e != 0 {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, not compatible with environment dim {e}",
            u.rows(),
            u.cols()
        )));
    }
    let residual = (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(n));
    if residual > DEFAULT_TOL {
        return Err(Error::NotUnitary { residual });
    }
    let d = n / e;
    let u_dag = u.adjoint();
    let action = |m: &ComplexMatrix| -> ComplexMatrix {
        let joint = m.tensor(env_state.matrix());
        let evolved = &(u * &joint) * &u_dag;
        evolved
            .partial_trace((d, e), Subsystem::First)
            .expect("dimensions match by construction")
    };
    let choi = ChoiMatrix::new(choi_of_map(d, action), d)?;
    kraus_from_choi(&choi, 1e-9)
}

/// The standard single-qubit channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardChannelKind {
    BitFlip,
    Dephasing,
    Depolarizing,
    AmplitudeDamping,
}

impl std::str::FromStr for StandardChannelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bit_flip" | "bit-flip" => Ok(Self::BitFlip),
            "dephasing" => Ok(Self::Dephasing),
            "depolarizing" => Ok(Self::Depolarizing),
            "amplitude_damping" | "amplitude-damping" => Ok(Self::AmplitudeDamping),
            other => Err(format!(
                "unknown channel kind '{other}' (expected bit_flip, dephasing, depolarizing, or amplitude_damping)"
            )),
        }
    }
}

/// Canonical qubit channels with parameter in [0, 1].
///
/// - bit flip: {sqrt(1-eps) I, sqrt(eps) X};
/// - dephasing: {sqrt(1-eps/2) I, sqrt(eps/2) Z} — off-diagonals scale by
///   exactly (1-eps), so eps = 1 removes coherences entirely;
/// - depolarizing: (1-eps) rho + eps I/2 via four Pauli operators;
/// - amplitude damping: {diag(1, sqrt(1-gamma)), sqrt(gamma) |0><1|}.
pub fn standard_channel(kind: StandardChannelKind, param: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&param) {
        return Err(Error::ParamOutOfRange {
            name: "param",
            value: param,
            min: 0.0,
            max: 1.0,
        });
    }
    let i2 = ComplexMatrix::identity(2);
    let ops = match kind {
        StandardChannelKind::BitFlip => vec![
            i2.scale(cr((1.0 - param).sqrt())),
            pauli_x().scale(cr(param.sqrt())),
        ],
        StandardChannelKind::Dephasing => vec![
            i2.scale(cr((1.0 - param / 2.0).sqrt())),
            pauli_z().scale(cr((param / 2.0).sqrt())),
        ],
        StandardChannelKind::Depolarizing => vec![
            i2.scale(cr((1.0 - 0.75 * param).sqrt())),
            pauli_x().scale(cr((param / 4.0).sqrt())),
            pauli_y().scale(cr((param / 4.0).sqrt())),
            pauli_z().scale(cr((param / 4.0).sqrt())),
        ],
        StandardChannelKind::AmplitudeDamping => {
            let mut a0 = ComplexMatrix::zeros(2, 2);
            a0.set(0, 0, Complex64::ONE);
            a0.set(1, 1, cr((1.0 - param).sqrt()));
            let mut a1 = ComplexMatrix::zeros(2, 2);
            a1.set(0, 1, cr(param.sqrt()));
            vec![a0, a1]
        }
    };
    Channel::new(ops)
}

/// Sequential composition: apply phi1 first, then phi2. Kraus set is all
/// products B_j A_i.
pub fn compose(phi2: &Channel, phi1: &Channel) -> Result<Channel> {
    if phi2.dim() != phi1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "composing channels of dims {} and {}",
            phi2.dim(),
            phi1.dim()
        )));
    }
    let ops = phi2
        .kraus_ops()
        .iter()
        .flat_map(|b| phi1.kraus_ops().iter().map(move |a| b * a))
        .collect();
    Channel::new(ops)
}
