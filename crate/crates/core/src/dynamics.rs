//! Dynamics from irrelevance judgments.
//!
//! An agent who judges an intermediate measurement irrelevant to her present
//! gambles about a later time — and judges that irrelevance to hold for
//! every input state — is committed to the channel formed by merging the
//! measurement's Kraus operators. This module performs that conversion,
//! verifies irrelevance claims against the reflected state, handles the
//! closed-system special cases built on decompositions of the identity, and
//! iterates the resulting dynamics.

use serde::{Deserialize, Serialize};

use crate::channels::{apply_channel, Channel, KrausMap};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, DEFAULT_TOL};
use crate::quantum::DensityMatrix;
use crate::reflection::{reflected_state, ReflectionScenario};

/// A hypothetical measurement the agent deems irrelevant for her current
/// gambles about a later time. `state_independent` records whether she deems
/// this to hold for every input state; only then does a single dynamics map
/// follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrrelevanceJudgment {
    pub measurement: KrausMap,
    pub state_independent: bool,
}

impl IrrelevanceJudgment {
    pub fn new(measurement: KrausMap, state_independent: bool) -> Self {
        Self {
            measurement,
            state_independent,
        }
    }
}

/// A channel together with the judgment that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsAssignment {
    map: Channel,
    provenance: IrrelevanceJudgment,
}

impl DynamicsAssignment {
    pub fn map(&self) -> &Channel {
        &self.map
    }

    pub fn provenance(&self) -> &IrrelevanceJudgment {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }
}

/// A state assignment `rho_{concerns | assessed_at}`: made at the time
/// labeled `assessed_at`, for analyzing measurements at the time labeled
/// `concerns`. Labels are opaque; only their ordering means anything, and
/// that is the caller's business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedState {
    pub rho: DensityMatrix,
    pub assessed_at: String,
    pub concerns: String,
}

impl IndexedState {
    pub fn new(rho: DensityMatrix, assessed_at: impl Into<String>, concerns: impl Into<String>) -> Self {
        Self {
            rho,
            assessed_at: assessed_at.into(),
            concerns: concerns.into(),
        }
    }
}

/// The representation theorem, executable: a state-independent irrelevance
/// judgment about a measurement {A_ik} yields the channel
/// `Phi(rho) = sum_ik A_ik rho A_ik†`.
///
/// A state-dependent judgment is an error, not a silent restriction.
pub fn dynamics_from_judgment(judgment: &IrrelevanceJudgment) -> Result<DynamicsAssignment> {
    if !judgment.state_independent {
        return Err(Error::StateDependentJudgment);
    }
    Ok(DynamicsAssignment {
        map: judgment.measurement.merged(),
        provenance: judgment.clone(),
    })
}

/// Does the supplied later-time state equal the reflected state of the
/// judgment's measurement applied to the earlier state, within `tol`?
///
/// This is the operational content of "irrelevant for her current gambles".
pub fn check_irrelevance(
    rho_later: &IndexedState,
    judgment: &IrrelevanceJudgment,
    rho_earlier: &DensityMatrix,
    tol: f64,
) -> Result<bool> {
    let scenario = ReflectionScenario::new(rho_earlier.clone(), judgment.measurement.clone())?;
    let reflected = reflected_state(&scenario)?;
    if rho_later.rho.dim() != reflected.dim() {
        return Err(Error::DimensionMismatch(format!(
            "later state dim {} vs reflected dim {}",
            rho_later.rho.dim(),
            reflected.dim()
        )));
    }
    Ok(rho_later.rho.matrix().max_abs_diff(reflected.matrix()) <= tol)
}

/// Closed system with a single-element Kraus decomposition of {I}: the
/// operator must be unitary, and the dynamics is conjugation by it.
pub fn closed_system_unitary(a: &ComplexMatrix) -> Result<Channel> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "unitary must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let gram = &a.adjoint() * a;
    let residual = gram.max_abs_diff(&ComplexMatrix::identity(a.dim()));
    if residual > DEFAULT_TOL {
        return Err(Error::NotUnitary { residual });
    }
    Channel::new(vec![a.clone()])
}

/// Closed-system dynamics from a multi-element Kraus decomposition of the
/// identity, `sum_k A_k† A_k = I`, with a flag recording whether the channel
/// preserves purity (equivalently, whether its Choi matrix is rank one, i.e.
/// the decomposition was unitary after all).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSystemDynamics {
    pub channel: Channel,
    pub purity_preserving: bool,
}

pub fn kraus_decomposition_of_identity(ops: Vec<ComplexMatrix>) -> Result<ClosedSystemDynamics> {
    let channel = Channel::new(ops).map_err(|e| match e {
        Error::IncompleteEffects { residual } => Error::NotIdentityDecomposition { residual },
        other => other,
    })?;
    let spectrum = channel.choi().spectrum();
    let scale = spectrum.max_abs_eigenvalue().max(1.0);
    let second = spectrum.eigenvalues().get(1).copied().unwrap_or(0.0);
    Ok(ClosedSystemDynamics {
        purity_preserving: second.abs() <= DEFAULT_TOL * scale,
        channel,
    })
}

/// `steps`-fold application of the assigned dynamics.
pub fn evolve(
    rho0: &DensityMatrix,
    dynamics: &DynamicsAssignment,
    steps: usize,
) -> Result<DensityMatrix> {
    let mut rho = rho0.clone();
    for _ in 0..steps {
        rho = apply_channel(dynamics.map(), &rho)?;
    }
    Ok(rho)
}

/// Fixed point by damped iteration `rho <- (Phi(rho) + rho) / 2` from the
/// maximally mixed state.
///
/// The damping removes peripheral-spectrum oscillations, so the iteration
/// converges for every channel, at a rate set by the spectral gap; a gap too
/// small for `max_iter` surfaces as [`Error::NotConverged`]. Uniqueness is
/// not assumed. Convergence means `max|Phi(rho*) - rho*| <= tol`.
pub fn fixed_point(
    dynamics: &DynamicsAssignment,
    tol: f64,
    max_iter: usize,
) -> Result<DensityMatrix> {
    let dim = dynamics.dim();
    let mut rho = DensityMatrix::maximally_mixed(dim);
    let mut residual = f64::INFINITY;
    for _iter in 0..max_iter {
        let image = apply_channel(dynamics.map(), &rho)?;
        residual = image.matrix().max_abs_diff(rho.matrix());
        if residual <= tol {
            return Ok(rho);
        }
        let averaged = &(image.matrix().clone()) + rho.matrix();
        rho = DensityMatrix::new(averaged.scale(crate::matrix::cr(0.5)).hermitian_part())?;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

/// Default tolerance and iteration budget for [`fixed_point`].
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 100_000;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{remix_kraus, standard_channel, StandardChannelKind};
    use crate::matrix::cr;
    use crate::quantum::{pauli_x, pauli_z, plus_state};
    use crate::sample;
    use approx::assert_abs_diff_eq;

    fn judgment_from_channel(phi: &Channel) -> IrrelevanceJudgment {
        IrrelevanceJudgment::new(KrausMap::from_channel(phi), true)
    }

    #[test]
    fn trivial_judgment_gives_identity_dynamics() {
        let j = IrrelevanceJudgment::new(KrausMap::identity(2), true);
        let d = dynamics_from_judgment(&j).unwrap();
        assert!(d.map().choi().distance(&Channel::identity(2).choi()) < 1e-12);
    }

    #[test]
    fn bit_flip_judgment_gives_bit_flip_channel() {
        let bitflip = standard_channel(StandardChannelKind::BitFlip, 0.25).unwrap();
        let d = dynamics_from_judgment(&judgment_from_channel(&bitflip)).unwrap();
        assert!(d.map().choi().distance(&bitflip.choi()) < 1e-12);
    }

    #[test]
    fn projective_judgment_gives_full_dephasing() {
        let j = IrrelevanceJudgment::new(KrausMap::projective_computational(2), true);
        let d = dynamics_from_judgment(&j).unwrap();
        let dephasing = standard_channel(StandardChannelKind::Dephasing, 1.0).unwrap();
        assert!(d.map().choi().distance(&dephasing.choi()) < 1e-12);
    }

    #[test]
    fn state_dependent_judgment_is_an_error() {
        let j = IrrelevanceJudgment::new(KrausMap::identity(2), false);
        assert!(matches!(
            dynamics_from_judgment(&j),
            Err(Error::StateDependentJudgment)
        ));
    }

    #[test]
    fn representation_theorem_as_identity() {
        // dynamics_from_judgment applied to any rho equals the reflected state
        let mut rng = sample::rng_from_seed(71);
        for trial in 0..50 {
            let dim = 2 + trial % 2;
            let rho = sample::random_density_matrix(dim, &mut rng);
            let map = sample::random_kraus_map(dim, 2, 2, &mut rng);
            let j = IrrelevanceJudgment::new(map.clone(), true);
            let d = dynamics_from_judgment(&j).unwrap();
            let via_channel = apply_channel(d.map(), &rho).unwrap();
            let via_reflection =
                reflected_state(&ReflectionScenario::new(rho, map).unwrap()).unwrap();
            assert!(via_channel.matrix().max_abs_diff(via_reflection.matrix()) < 1e-10);
        }
    }

    #[test]
    fn remixed_judgments_yield_the_same_dynamics() {
        // no single measurement is privileged: every isometry remix of the
        // Kraus operators produces an identical channel
        let mut rng = sample::rng_from_seed(72);
        for _ in 0..10 {
            let phi = sample::random_channel(2, 2, &mut rng);
            let u = sample::random_isometry(4, 2, &mut rng);
            let remixed = remix_kraus(&phi, &u).unwrap();
            let d1 = dynamics_from_judgment(&judgment_from_channel(&phi)).unwrap();
            let d2 = dynamics_from_judgment(&judgment_from_channel(&remixed)).unwrap();
            assert!(d1.map().choi().distance(&d2.map().choi()) < 1e-10);
        }
    }

    #[test]
    fn check_irrelevance_examples() {
        let which_path = IrrelevanceJudgment::new(KrausMap::projective_computational(2), true);
        let rho_10 = plus_state();

        let same_pattern = IndexedState::new(DensityMatrix::maximally_mixed(2), "t0", "t2");
        assert!(check_irrelevance(&same_pattern, &which_path, &rho_10, 1e-10).unwrap());

        let interference = IndexedState::new(plus_state(), "t0", "t2");
        assert!(!check_irrelevance(&interference, &which_path, &rho_10, 1e-10).unwrap());
    }

    #[test]
    fn closed_system_unitary_cases() {
        let id = closed_system_unitary(&ComplexMatrix::identity(2)).unwrap();
        assert!(id.choi().distance(&Channel::identity(2).choi()) < 1e-12);

        let x_channel = closed_system_unitary(&pauli_x()).unwrap();
        let mut rng = sample::rng_from_seed(73);
        for _ in 0..10 {
            let rho = sample::random_pure_state(2, &mut rng);
            let out = apply_channel(&x_channel, &rho).unwrap();
            assert_abs_diff_eq!(out.purity(), rho.purity(), epsilon = 1e-12);
        }

        assert!(matches!(
            closed_system_unitary(&ComplexMatrix::diag(&[1.0, 0.9])),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn unitary_channels_preserve_entropy() {
        let mut rng = sample::rng_from_seed(74);
        for _ in 0..10 {
            let u = sample::random_unitary(3, &mut rng);
            let phi = closed_system_unitary(&u).unwrap();
            let rho = sample::random_density_matrix(3, &mut rng);
            let out = apply_channel(&phi, &rho).unwrap();
            assert_abs_diff_eq!(
                out.von_neumann_entropy(),
                rho.von_neumann_entropy(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn identity_decompositions() {
        let single = kraus_decomposition_of_identity(vec![ComplexMatrix::identity(2)]).unwrap();
        assert!(single.purity_preserving);

        let half = cr(0.5f64.sqrt());
        let coin = kraus_decomposition_of_identity(vec![
            ComplexMatrix::identity(2).scale(half),
            pauli_x().scale(half),
        ])
        .unwrap();
        assert!(!coin.purity_preserving);
        let out = apply_channel(&coin.channel, &DensityMatrix::basis_state(2, 0)).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);

        // {sqrt(1-e) I, sqrt(e) Z} dephases; coherences scale by 1 - 2e
        let e = 0.3f64;
        let z_decomp = kraus_decomposition_of_identity(vec![
            ComplexMatrix::identity(2).scale(cr((1.0 - e).sqrt())),
            pauli_z().scale(cr(e.sqrt())),
        ])
        .unwrap();
        let dephasing = standard_channel(StandardChannelKind::Dephasing, 2.0 * e).unwrap();
        assert!(z_decomp.channel.choi().distance(&dephasing.choi()) < 1e-12);

        assert!(matches!(
            kraus_decomposition_of_identity(vec![ComplexMatrix::diag(&[1.0, 0.5])]),
            Err(Error::NotIdentityDecomposition { .. })
        ));
    }

    #[test]
    fn evolve_examples() {
        let mut rng = sample::rng_from_seed(75);
        let rho = sample::random_density_matrix(2, &mut rng);
        let bitflip = standard_channel(StandardChannelKind::BitFlip, 0.25).unwrap();
        let d = dynamics_from_judgment(&judgment_from_channel(&bitflip)).unwrap();

        let unchanged = evolve(&rho, &d, 0).unwrap();
        assert!(unchanged.matrix().max_abs_diff(rho.matrix()) < 1e-14);

        let two = evolve(&DensityMatrix::basis_state(2, 0), &d, 2).unwrap();
        assert!(two.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.625, 0.375])) < 1e-12);

        let mixed = DensityMatrix::maximally_mixed(2);
        let still = evolve(&mixed, &d, 5).unwrap();
        assert!(still.matrix().max_abs_diff(mixed.matrix()) < 1e-12);
    }

    #[test]
    fn evolve_composes_additively() {
        let mut rng = sample::rng_from_seed(76);
        let phi = sample::random_channel(2, 2, &mut rng);
        let d = dynamics_from_judgment(&judgment_from_channel(&phi)).unwrap();
        let rho = sample::random_density_matrix(2, &mut rng);
        let all_at_once = evolve(&rho, &d, 5).unwrap();
        let split = evolve(&evolve(&rho, &d, 2).unwrap(), &d, 3).unwrap();
        assert!(all_at_once.matrix().max_abs_diff(split.matrix()) < 1e-10);
    }

    #[test]
    fn fixed_point_examples() {
        let id = dynamics_from_judgment(&IrrelevanceJudgment::new(KrausMap::identity(3), true))
            .unwrap();
        let fp = fixed_point(&id, FIXED_POINT_TOL, 10).unwrap();
        assert!(fp.matrix().max_abs_diff(DensityMatrix::maximally_mixed(3).matrix()) < 1e-12);

        let bitflip = standard_channel(StandardChannelKind::BitFlip, 0.25).unwrap();
        let d = dynamics_from_judgment(&judgment_from_channel(&bitflip)).unwrap();
        let fp = fixed_point(&d, FIXED_POINT_TOL, FIXED_POINT_MAX_ITER).unwrap();
        assert!(fp.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-9);

        let damping = standard_channel(StandardChannelKind::AmplitudeDamping, 0.3).unwrap();
        let d = dynamics_from_judgment(&judgment_from_channel(&damping)).unwrap();
        let fp = fixed_point(&d, FIXED_POINT_TOL, FIXED_POINT_MAX_ITER).unwrap();
        assert!(fp.matrix().max_abs_diff(DensityMatrix::basis_state(2, 0).matrix()) < 1e-9);
        let image = apply_channel(d.map(), &fp).unwrap();
        assert!(image.matrix().max_abs_diff(fp.matrix()) <= FIXED_POINT_TOL);
    }

    #[test]
    fn fixed_point_reports_non_convergence() {
        // weak damping contracts at ~gamma/2 per iteration: far from done in 3
        let slow = standard_channel(StandardChannelKind::AmplitudeDamping, 1e-7).unwrap();
        let d = dynamics_from_judgment(&judgment_from_channel(&slow)).unwrap();
        let err = fixed_point(&d, 1e-10, 3).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 3, .. }));
    }
}
