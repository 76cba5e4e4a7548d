//! Continuous measurement: click/no-click steps, jump trajectories, survival
//! probabilities, Lindblad master-equation integration, and ensemble
//! averaging.
//!
//! Units: hbar = 1, the Hamiltonian carries angular-frequency units and the
//! jump operator 1/sqrt(time). Within a step [t, t+dt] a click occurs with
//! probability dp = tr(L†L rho) dt and collapses the state through L; no
//! click applies M0 = I - (1/2) L†L dt - i H dt. The unnormalized no-click
//! evolution is linear and its trace decay is exactly the survival
//! probability; the normalized variant returns the weight separately.
//! Integration is fixed-step fourth-order Runge-Kutta; jump sampling is a
//! per-step Bernoulli draw guarded by dp <= 0.1.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{choi_of_map, kraus_from_choi, Channel, ChoiMatrix, PROBABILITY_FLOOR};
use crate::error::{Error, Result};
use crate::matrix::{c, cr, ComplexMatrix, DEFAULT_TOL};
use crate::quantum::{sigma_minus, sigma_plus, DensityMatrix};
use crate::sample::rng_from_seed;

/// Hard ceiling on the per-step click probability.
pub const STEP_GUARD: f64 = 0.1;

/// Validation tolerance for states produced by integration or averaging.
pub const INTEGRATION_STATE_TOL: f64 = 1e-8;

/// Decay rate and field coupling of the driven two-level atom, both in
/// units of 1/time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelAtomParams {
    pub gamma: f64,
    pub omega: f64,
}

impl TwoLevelAtomParams {
    pub fn new(gamma: f64, omega: f64) -> Result<Self> {
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "gamma",
                value: gamma,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        if !omega.is_finite() {
            return Err(Error::ParamOutOfRange {
                name: "omega",
                value: omega,
                min: f64::NEG_INFINITY,
                max: f64::INFINITY,
            });
        }
        Ok(Self { gamma, omega })
    }
}

/// Hamiltonian H (Hermitian) and jump operator L of a continuous
/// measurement. A single jump operator only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct LindbladModel {
    dim: usize,
    h: ComplexMatrix,
    l: ComplexMatrix,
    l_dag: ComplexMatrix,
    ldl: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    h: ComplexMatrix,
    l: ComplexMatrix,
}

impl TryFrom<ModelRepr> for LindbladModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        LindbladModel::new(r.h, r.l)
    }
}

impl From<LindbladModel> for ModelRepr {
    fn from(m: LindbladModel) -> Self {
        ModelRepr { h: m.h, l: m.l }
    }
}

impl LindbladModel {
    pub fn new(h: ComplexMatrix, l: ComplexMatrix) -> Result<Self> {
        if !h.is_square() || !l.is_square() || h.rows() != l.rows() {
            return Err(Error::DimensionMismatch(format!(
                "H is {}x{}, L is {}x{}",
                h.rows(),
                h.cols(),
                l.rows(),
                l.cols()
            )));
        }
        h.check_hermitian(DEFAULT_TOL)?;
        let l_dag = l.adjoint();
        let ldl = &l_dag * &l;
        Ok(Self {
            dim: h.rows(),
            h,
            l,
            l_dag,
            ldl,
        })
    }

    /// Driven two-level atom: L = sqrt(Gamma) sigma-, H = -(Omega/2)(sigma+ + sigma-),
    /// with |g> = |0> and |e> = |1>.
    pub fn two_level_atom(params: TwoLevelAtomParams) -> Self {
        let l = sigma_minus().scale(cr(params.gamma.sqrt()));
        let h = (&(sigma_plus()) + &sigma_minus()).scale(cr(-params.omega / 2.0));
        Self::new(h, l).expect("atom operators are well-formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn jump_operator(&self) -> &ComplexMatrix {
        &self.l
    }

    /// No-click Kraus operator M0 = I - (1/2) L†L dt - i H dt.
    pub fn no_click_operator(&self, dt: f64) -> ComplexMatrix {
        let mut m0 = ComplexMatrix::identity(self.dim);
        m0.add_scaled(cr(-0.5 * dt), &self.ldl);
        m0.add_scaled(c(0.0, -dt), &self.h);
        m0
    }
}

/// Re tr(a b) without forming the product.
fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let mut t = Complex64::ZERO;
    for i in 0..d {
        for j in 0..d {
            t += a.get(i, j) * b.get(j, i);
        }
    }
    t.re
}

/// Click probability dp = tr(L†L rho) dt, clamped to [0, 1].
///
/// Steps with dp beyond [`STEP_GUARD`] are refused: the first-order
/// click/no-click splitting is no longer trustworthy there.
pub fn click_probability(rho: &DensityMatrix, l: &ComplexMatrix, dt: f64) -> Result<f64> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "dt",
            value: dt,
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        });
    }
    if l.rows() != rho.dim() || !l.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "jump operator is {}x{} against state dim {}",
            l.rows(),
            l.cols(),
            rho.dim()
        )));
    }
    let ldl = &l.adjoint() * l;
    let dp = trace_of_product(&ldl, rho.matrix()) * dt;
    if dp > STEP_GUARD {
        return Err(Error::StepTooLarge {
            t: 0.0,
            dp,
            limit: STEP_GUARD,
        });
    }
    Ok(dp.clamp(0.0, 1.0))
}

/// Post-click state L rho L† / tr(L†L rho).
///
/// For the atom this is |g><g| regardless of the input. Clicking on a dark
/// state (weight below the floor) is an error.
pub fn jump_update(rho: &DensityMatrix, l: &ComplexMatrix) -> Result<DensityMatrix> {
    if l.rows() != rho.dim() || !l.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "jump operator is {}x{} against state dim {}",
            l.rows(),
            l.cols(),
            rho.dim()
        )));
    }
    let raw = &(l * rho.matrix()) * &l.adjoint();
    let weight = raw.trace().re;
    if weight <= PROBABILITY_FLOOR {
        return Err(Error::DarkStateJump {
            probability: weight,
        });
    }
    DensityMatrix::new(raw.scale(cr(1.0 / weight)).hermitian_part())
}

/// Normalized no-click step: returns (M0 rho M0† / w, w) with w the trace
/// before renormalization, which is 1 - dp up to O(dt^2).
pub fn no_click_step(
    rho: &DensityMatrix,
    model: &LindbladModel,
    dt: f64,
) -> Result<(DensityMatrix, f64)> {
    let raw = no_click_step_unnormalized(rho.matrix(), model, dt)?;
    let weight = raw.trace().re;
    let state = DensityMatrix::new(raw.scale(cr(1.0 / weight)).hermitian_part())?;
    Ok((state, weight))
}

/// Unnormalized (linear) no-click step M0 m M0†.
///
/// Iterating this from a state integrates the conditional evolution whose
/// trace decay is the survival probability.
pub fn no_click_step_unnormalized(
    m: &ComplexMatrix,
    model: &LindbladModel,
    dt: f64,
) -> Result<ComplexMatrix> {
    if m.rows() != model.dim() || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "state is {}x{} against model dim {}",
            m.rows(),
            m.cols(),
            model.dim()
        )));
    }
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "dt",
            value: dt,
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        });
    }
    let trace = m.trace().re;
    let dp = trace_of_product(&model.ldl, m) * dt;
    if dp > STEP_GUARD * trace.max(1e-300) {
        return Err(Error::StepTooLarge {
            t: 0.0,
            dp,
            limit: STEP_GUARD,
        });
    }
    let m0 = model.no_click_operator(dt);
    Ok(&(&m0 * m) * &m0.adjoint())
}

// --- fixed-step RK4 machinery -------------------------------------------

/// Which right-hand side to integrate.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Rhs {
    /// Full master equation: -i[H, rho] - (1/2){L†L, rho} + L rho L†.
    Master,
    /// Conditional no-click evolution: -i[H, rho] - (1/2){L†L, rho}.
    Conditional,
}

struct Integrator {
    k1: ComplexMatrix,
    k2: ComplexMatrix,
    k3: ComplexMatrix,
    k4: ComplexMatrix,
    stage: ComplexMatrix,
    t1: ComplexMatrix,
    t2: ComplexMatrix,
}

impl Integrator {
    fn new(dim: usize) -> Self {
        let z = ComplexMatrix::zeros(dim, dim);
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            t1: z.clone(),
            t2: z,
        }
    }

    fn rhs_into(dst: &mut ComplexMatrix, m: &ComplexMatrix, model: &LindbladModel, rhs: Rhs,
                t1: &mut ComplexMatrix, t2: &mut ComplexMatrix) {
        dst.copy_from(m);
        dst.scale_in_place(Complex64::ZERO);
        // -i (H m - m H)
        ComplexMatrix::mul_into(t1, &model.h, m);
        dst.add_scaled(c(0.0, -1.0), t1);
        ComplexMatrix::mul_into(t1, m, &model.h);
        dst.add_scaled(c(0.0, 1.0), t1);
        // -(1/2)(L†L m + m L†L)
        ComplexMatrix::mul_into(t1, &model.ldl, m);
        dst.add_scaled(cr(-0.5), t1);
        ComplexMatrix::mul_into(t1, m, &model.ldl);
        dst.add_scaled(cr(-0.5), t1);
        if rhs == Rhs::Master {
            ComplexMatrix::mul_into(t1, &model.l, m);
            ComplexMatrix::mul_into(t2, t1, &model.l_dag);
            dst.add_scaled(Complex64::ONE, t2);
        }
    }

    /// One RK4 step in place.
    fn step(&mut self, m: &mut ComplexMatrix, model: &LindbladModel, dt: f64, rhs: Rhs) {
        Self::rhs_into(&mut self.k1, m, model, rhs, &mut self.t1, &mut self.t2);
        self.stage.copy_from(m);
        self.stage.add_scaled(cr(dt / 2.0), &self.k1);
        Self::rhs_into(&mut self.k2, &self.stage, model, rhs, &mut self.t1, &mut self.t2);
        self.stage.copy_from(m);
        self.stage.add_scaled(cr(dt / 2.0), &self.k2);
        Self::rhs_into(&mut self.k3, &self.stage, model, rhs, &mut self.t1, &mut self.t2);
        self.stage.copy_from(m);
        self.stage.add_scaled(cr(dt), &self.k3);
        Self::rhs_into(&mut self.k4, &self.stage, model, rhs, &mut self.t1, &mut self.t2);
        m.add_scaled(cr(dt / 6.0), &self.k1);
        m.add_scaled(cr(dt / 3.0), &self.k2);
        m.add_scaled(cr(dt / 3.0), &self.k3);
        m.add_scaled(cr(dt / 6.0), &self.k4);
    }
}

/// Splits a span into whole steps no longer than the requested dt.
fn grid(t_span: (f64, f64), dt: f64) -> Result<(usize, f64)> {
    let (t0, t1) = t_span;
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::ParamOutOfRange {
            name: "dt",
            value: dt,
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        });
    }
    if !(t1 >= t0) {
        return Err(Error::ParamOutOfRange {
            name: "t_end",
            value: t1,
            min: t0,
            max: f64::INFINITY,
        });
    }
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((0, dt));
    }
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// (step index, output slot) pairs sorted by step index; each requested time
/// is snapped to the nearest grid point.
fn plan_outputs(t0: f64, dt: f64, n_steps: usize, output_times: &[f64]) -> Vec<(usize, usize)> {
    let mut plan: Vec<(usize, usize)> = output_times
        .iter()
        .enumerate()
        .map(|(slot, &t)| {
            let idx = if dt > 0.0 { ((t - t0) / dt).round() } else { 0.0 };
            ((idx.max(0.0) as usize).min(n_steps), slot)
        })
        .collect();
    plan.sort_by_key(|&(idx, slot)| (idx, slot));
    plan
}

/// Survival probability of a no-click record over the span.
///
/// Integrates the unnormalized conditional equation with RK4 and returns the
/// final trace, which equals one minus the integrated click probability
/// along the conditional evolution.
pub fn no_click_probability(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    dt: f64,
) -> Result<f64> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs model dim {}",
            rho0.dim(),
            model.dim()
        )));
    }
    let (n, dt) = grid(t_span, dt)?;
    let mut m = rho0.matrix().clone();
    let mut integrator = Integrator::new(model.dim());
    for _ in 0..n {
        integrator.step(&mut m, model, dt, Rhs::Conditional);
    }
    Ok(m.trace().re.clamp(0.0, 1.0))
}

/// Fixed-step RK4 integration of the master equation
/// d rho/dt = -i[H, rho] - (1/2){L†L, rho} + L rho L†,
/// sampling at the requested output times (snapped to the grid).
///
/// The state is re-symmetrized each step; the trace is preserved by the
/// equation itself up to roundoff.
pub fn solve_master(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    dt: f64,
    output_times: &[f64],
) -> Result<Vec<(f64, DensityMatrix)>> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs model dim {}",
            rho0.dim(),
            model.dim()
        )));
    }
    let (n, dt) = grid(t_span, dt)?;
    let plan = plan_outputs(t_span.0, dt, n, output_times);
    let mut samples: Vec<(f64, DensityMatrix)> = Vec::with_capacity(output_times.len());
    let mut slots: Vec<usize> = Vec::with_capacity(output_times.len());

    let mut m = rho0.matrix().clone();
    let mut integrator = Integrator::new(model.dim());
    let mut plan_iter = plan.into_iter().peekable();
    for k in 0..=n {
        while let Some(&(idx, slot)) = plan_iter.peek() {
            if idx != k {
                break;
            }
            let state = DensityMatrix::renormalized(m.clone(), INTEGRATION_STATE_TOL)?;
            samples.push((t_span.0 + k as f64 * dt, state));
            slots.push(slot);
            plan_iter.next();
        }
        if k < n {
            integrator.step(&mut m, model, dt, Rhs::Master);
            let symmetrized = m.hermitian_part();
            m.copy_from(&symmetrized);
        }
    }
    // back to the caller's output order
    let mut ordered: Vec<Option<(f64, DensityMatrix)>> = vec![None; output_times.len()];
    for (sample, slot) in samples.into_iter().zip(slots) {
        ordered[slot] = Some(sample);
    }
    Ok(ordered.into_iter().map(|s| s.expect("every slot planned")).collect())
}

/// One stochastic record: click times, sampled states, and the exact grid
/// parameters that reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub click_times: Vec<f64>,
    pub sampled_states: Vec<(f64, DensityMatrix)>,
    pub seed: u64,
    pub dt: f64,
}

/// Raw trajectory loop shared by the public single-trajectory entry point
/// and the ensemble: normalized no-click steps, Bernoulli click draws, one
/// uniform draw per step.
fn run_trajectory_raw(
    model: &LindbladModel,
    rho0: &ComplexMatrix,
    t_span: (f64, f64),
    dt_requested: f64,
    output_times: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, Vec<ComplexMatrix>, f64)> {
    let (n, dt) = grid(t_span, dt_requested)?;
    let plan = plan_outputs(t_span.0, dt, n, output_times);
    let mut rng = rng_from_seed(seed);
    let dim = model.dim();

    let m0 = model.no_click_operator(dt);
    let m0_dag = m0.adjoint();
    let l_dag = model.l.adjoint();

    let mut rho = rho0.clone();
    let mut t1 = ComplexMatrix::zeros(dim, dim);
    let mut t2 = ComplexMatrix::zeros(dim, dim);

    let mut click_times = Vec::new();
    let mut sampled: Vec<Option<ComplexMatrix>> = vec![None; output_times.len()];
    let mut plan_iter = plan.into_iter().peekable();

    for k in 0..=n {
        while let Some(&(idx, slot)) = plan_iter.peek() {
            if idx != k {
                break;
            }
            sampled[slot] = Some(rho.clone());
            plan_iter.next();
        }
        if k == n {
            break;
        }
        let t = t_span.0 + k as f64 * dt;
        let dp = (trace_of_product(&model.ldl, &rho) * dt).max(0.0);
        if dp > STEP_GUARD {
            return Err(Error::StepTooLarge {
                t,
                dp,
                limit: STEP_GUARD,
            });
        }
        let u: f64 = rng.random();
        if u < dp && dp > PROBABILITY_FLOOR {
            // click: rho <- L rho L† / dp_rate
            ComplexMatrix::mul_into(&mut t1, &model.l, &rho);
            ComplexMatrix::mul_into(&mut t2, &t1, &l_dag);
            let w = t2.trace().re;
            rho.copy_from(&t2);
            rho.scale_in_place(cr(1.0 / w));
            click_times.push(t + dt);
        } else {
            // no click: rho <- M0 rho M0† / w
            ComplexMatrix::mul_into(&mut t1, &m0, &rho);
            ComplexMatrix::mul_into(&mut t2, &t1, &m0_dag);
            let w = t2.trace().re;
            rho.copy_from(&t2);
            rho.scale_in_place(cr(1.0 / w));
        }
    }

    let states = sampled
        .into_iter()
        .map(|s| s.expect("every output slot planned"))
        .collect();
    Ok((click_times, states, dt))
}

/// One seeded click/no-click trajectory.
///
/// Per step the generator yields exactly one uniform draw; a click fires
/// when the draw lands below dp and is recorded at the end of the step
/// interval. Fixed (seed, dt) reproduce the record bit for bit.
pub fn simulate_trajectory(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    dt: f64,
    output_times: &[f64],
    seed: u64,
) -> Result<TrajectoryRecord> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs model dim {}",
            rho0.dim(),
            model.dim()
        )));
    }
    let (click_times, states, dt_actual) =
        run_trajectory_raw(model, rho0.matrix(), t_span, dt, output_times, seed)?;
    let (n, dt_grid) = grid(t_span, dt)?;
    let plan = plan_outputs(t_span.0, dt_grid, n, output_times);
    let mut times = vec![0.0; output_times.len()];
    for (idx, slot) in plan {
        times[slot] = t_span.0 + idx as f64 * dt_grid;
    }
    let sampled_states = times
        .into_iter()
        .zip(states)
        .map(|(t, m)| Ok((t, DensityMatrix::renormalized(m, INTEGRATION_STATE_TOL)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryRecord {
        click_times,
        sampled_states,
        seed,
        dt: dt_actual,
    })
}

/// Trajectory mean and spread at each output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub times: Vec<f64>,
    pub mean_state: Vec<DensityMatrix>,
    /// Standard error of the excited-population estimator (the last diagonal
    /// entry, |e> = |dim-1>) at each output time.
    pub stderr: Vec<f64>,
    pub n_traj: usize,
}

struct EnsembleAccumulator {
    sums: Vec<ComplexMatrix>,
    pe_sum: Vec<f64>,
    pe_sq_sum: Vec<f64>,
    n: usize,
}

impl EnsembleAccumulator {
    fn new(dim: usize, n_times: usize) -> Self {
        Self {
            sums: vec![ComplexMatrix::zeros(dim, dim); n_times],
            pe_sum: vec![0.0; n_times],
            pe_sq_sum: vec![0.0; n_times],
            n: 0,
        }
    }

    fn add(&mut self, states: &[ComplexMatrix]) {
        let excited = states[0].dim() - 1;
        for (j, s) in states.iter().enumerate() {
            self.sums[j].add_scaled(Complex64::ONE, s);
            let pe = s.get(excited, excited).re;
            self.pe_sum[j] += pe;
            self.pe_sq_sum[j] += pe * pe;
        }
        self.n += 1;
    }

    fn finish(self, times: Vec<f64>) -> Result<EnsembleSummary> {
        let n = self.n as f64;
        let mean_state = self
            .sums
            .into_iter()
            .map(|s| DensityMatrix::renormalized(s.scale(cr(1.0 / n)), INTEGRATION_STATE_TOL))
            .collect::<Result<Vec<_>>>()?;
        let stderr = self
            .pe_sum
            .iter()
            .zip(self.pe_sq_sum.iter())
            .map(|(&s, &s2)| {
                if self.n < 2 {
                    0.0
                } else {
                    let mean = s / n;
                    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
                    (var / n).sqrt()
                }
            })
            .collect();
        Ok(EnsembleSummary {
            times,
            mean_state,
            stderr,
            n_traj: self.n,
        })
    }
}

fn snapped_times(t_span: (f64, f64), dt: f64, output_times: &[f64]) -> Result<Vec<f64>> {
    let (n, dt) = grid(t_span, dt)?;
    let plan = plan_outputs(t_span.0, dt, n, output_times);
    let mut times = vec![0.0; output_times.len()];
    for (idx, slot) in plan {
        times[slot] = t_span.0 + idx as f64 * dt;
    }
    Ok(times)
}

/// Mean over seeded trajectories at the output times; trajectory i draws
/// from the stream seeded with `seed + i`.
///
/// The reduction runs in trajectory-index order, so the result is a pure
/// function of (model, rho0, span, dt, output times, n_traj, seed).
pub fn ensemble_average(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    dt: f64,
    output_times: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(Error::ParamOutOfRange {
            name: "n_traj",
            value: 0.0,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    let mut acc = EnsembleAccumulator::new(model.dim(), output_times.len());
    for i in 0..n_traj {
        let (_clicks, states, _dt) = run_trajectory_raw(
            model,
            rho0.matrix(),
            t_span,
            dt,
            output_times,
            seed.wrapping_add(i as u64),
        )?;
        acc.add(&states);
    }
    acc.finish(snapped_times(t_span, dt, output_times)?)
}

/// Parallel variant of [`ensemble_average`].
///
/// Trajectories are computed on the rayon pool but collected and reduced in
/// index order, so the summary is bit-identical to the sequential one for
/// every worker count.
pub fn ensemble_average_parallel(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    dt: f64,
    output_times: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(Error::ParamOutOfRange {
            name: "n_traj",
            value: 0.0,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    let results: Vec<Result<Vec<ComplexMatrix>>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            run_trajectory_raw(
                model,
                rho0.matrix(),
                t_span,
                dt,
                output_times,
                seed.wrapping_add(i as u64),
            )
            .map(|(_clicks, states, _dt)| states)
        })
        .collect();
    let mut acc = EnsembleAccumulator::new(model.dim(), output_times.len());
    for r in results {
        acc.add(&r?);
    }
    acc.finish(snapped_times(t_span, dt, output_times)?)
}

fn qubit_csv_row(out: &mut String, t: f64, m: &ComplexMatrix) {
    use std::fmt::Write;
    let rho_ee = m.get(1, 1).re;
    let rho_eg = m.get(1, 0);
    let trace = m.trace().re;
    writeln!(out, "{t},{rho_ee},{},{},{trace}", rho_eg.re, rho_eg.im).expect("string write");
}

/// CSV rendering of a qubit time series: `t,rho_ee,re_rho_eg,im_rho_eg,trace`.
///
/// Floats print in Rust's shortest round-trip form, so equal runs yield
/// byte-identical output.
pub fn time_series_csv(samples: &[(f64, DensityMatrix)]) -> Result<String> {
    let mut out = String::from("t,rho_ee,re_rho_eg,im_rho_eg,trace\n");
    for (t, state) in samples {
        if state.dim() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "time-series CSV is defined for qubits, got dim {}",
                state.dim()
            )));
        }
        qubit_csv_row(&mut out, *t, state.matrix());
    }
    Ok(out)
}

/// CSV rendering of an ensemble mean, same columns as [`time_series_csv`].
pub fn ensemble_csv(summary: &EnsembleSummary) -> Result<String> {
    let samples: Vec<(f64, DensityMatrix)> = summary
        .times
        .iter()
        .copied()
        .zip(summary.mean_state.iter().cloned())
        .collect();
    time_series_csv(&samples)
}

/// One click time per line under a `click_time` header.
pub fn clicks_csv(click_times: &[f64]) -> String {
    use std::fmt::Write;
    let mut out = String::from("click_time\n");
    for t in click_times {
        writeln!(out, "{t}").expect("string write");
    }
    out
}

/// The channel of evolving under the master equation for `duration`,
/// extracted by integrating the basis units, assembling the Choi matrix,
/// and reading off a spectral Kraus form.
pub fn propagator_channel(model: &LindbladModel, duration: f64, dt: f64) -> Result<Channel> {
    let (n, dt) = grid((0.0, duration), dt)?;
    let dim = model.dim();
    let action = |unit: &ComplexMatrix| {
        let mut m = unit.clone();
        let mut integrator = Integrator::new(dim);
        for _ in 0..n {
            integrator.step(&mut m, model, dt, Rhs::Master);
        }
        m
    };
    let choi = ChoiMatrix::new(choi_of_map(dim, action), dim)?;
    kraus_from_choi(&choi, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn atom(gamma: f64, omega: f64) -> LindbladModel {
        LindbladModel::two_level_atom(TwoLevelAtomParams::new(gamma, omega).unwrap())
    }

    fn excited() -> DensityMatrix {
        DensityMatrix::basis_state(2, 1)
    }

    fn ground() -> DensityMatrix {
        DensityMatrix::basis_state(2, 0)
    }

    #[test]
    fn click_probability_examples() {
        let model = atom(1.0, 0.0);
        let dp = click_probability(&excited(), model.jump_operator(), 1e-3).unwrap();
        assert_abs_diff_eq!(dp, 1e-3, epsilon = 1e-15);

        let dark = click_probability(&ground(), model.jump_operator(), 1e-3).unwrap();
        assert_abs_diff_eq!(dark, 0.0, epsilon = 1e-15);

        let model2 = atom(2.0, 0.0);
        let half = click_probability(
            &DensityMatrix::maximally_mixed(2),
            model2.jump_operator(),
            1e-3,
        )
        .unwrap();
        assert_abs_diff_eq!(half, 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn click_probability_guards_step_size() {
        let model = atom(1.0, 0.0);
        let err = click_probability(&excited(), model.jump_operator(), 0.2).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn jump_lands_in_the_ground_state() {
        let model = atom(1.0, 0.5);
        for rho in [excited(), DensityMatrix::maximally_mixed(2)] {
            let post = jump_update(&rho, model.jump_operator()).unwrap();
            assert!(post.matrix().max_abs_diff(ground().matrix()) < 1e-12);
        }
        assert!(matches!(
            jump_update(&ground(), model.jump_operator()),
            Err(Error::DarkStateJump { .. })
        ));
    }

    #[test]
    fn no_click_step_free_evolution_is_inert() {
        let model = LindbladModel::new(ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2))
            .unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let (state, weight) = no_click_step(&rho, &model, 1e-3).unwrap();
        assert!(state.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        assert_abs_diff_eq!(weight, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn no_click_trace_decays_at_first_order() {
        let model = atom(1.0, 0.0);
        let dt = 1e-3;
        let raw = no_click_step_unnormalized(excited().matrix(), &model, dt).unwrap();
        let trace = raw.trace().re;
        // (1 - dt/2)^2 = 1 - dt + dt^2/4
        assert!((trace - (1.0 - dt)).abs() <= dt * dt);
    }

    #[test]
    fn no_click_dark_state_is_inert() {
        let model = atom(1.0, 0.0);
        let (state, weight) = no_click_step(&ground(), &model, 1e-3).unwrap();
        assert!(state.matrix().max_abs_diff(ground().matrix()) < 1e-15);
        assert_abs_diff_eq!(weight, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn survival_from_dark_state_is_one() {
        let model = atom(1.0, 0.0);
        let p = no_click_probability(&model, &ground(), (0.0, 2.0), 1e-3).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn survival_of_excited_state_is_exponential() {
        let model = atom(1.0, 0.0);
        let p = no_click_probability(&model, &excited(), (0.0, 1.0), 1e-3).unwrap();
        assert_abs_diff_eq!(p, (-1.0f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn survival_shortly_after_ground_start_is_near_one() {
        let model = atom(1.0, 2.0);
        let p = no_click_probability(&model, &ground(), (0.0, 0.01), 1e-5).unwrap();
        assert!(p <= 1.0);
        assert!(p > 1.0 - 1e-5, "excitation needs time to build, got {p}");
    }

    #[test]
    fn master_decay_matches_analytic_solution() {
        let model = atom(1.0, 0.0);
        let out = solve_master(&model, &excited(), (0.0, 1.0), 1e-3, &[0.5, 1.0]).unwrap();
        let rho_ee_half = out[0].1.matrix().get(1, 1).re;
        let rho_ee_one = out[1].1.matrix().get(1, 1).re;
        assert_abs_diff_eq!(rho_ee_half, (-0.5f64).exp(), epsilon = 1e-6);
        assert_abs_diff_eq!(rho_ee_one, (-1.0f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn master_preserves_trace_and_positivity() {
        let model = atom(1.0, 2.0);
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let out = solve_master(&model, &ground(), (0.0, 5.0), 1e-3, &times).unwrap();
        for (_, state) in &out {
            assert!((state.matrix().trace().re - 1.0).abs() < 1e-9 * 5.0);
            let spectrum = crate::matrix::eig_hermitian(state.matrix()).unwrap();
            assert!(spectrum.min_eigenvalue() >= -1e-8);
        }
    }

    #[test]
    fn master_is_stationary_at_its_fixed_point() {
        // Liouvillian null space for Gamma = Omega = 1, solved here with the
        // saturation values rho_ee = 1/3 and rho_ge = i Gamma Omega/(Gamma^2 + 2 Omega^2)...
        // easier and independent: evolve long, then check stationarity.
        let model = atom(1.0, 1.0);
        let long = solve_master(&model, &ground(), (0.0, 60.0), 1e-3, &[60.0]).unwrap();
        let steady = long[0].1.clone();
        let again = solve_master(&model, &steady, (0.0, 1.0), 1e-3, &[1.0]).unwrap();
        assert!(again[0].1.matrix().max_abs_diff(steady.matrix()) < 1e-8);
        assert_abs_diff_eq!(steady.matrix().get(1, 1).re, 1.0 / 3.0, epsilon = 1e-7);
    }

    #[test]
    fn trajectory_without_decay_is_hamiltonian_evolution() {
        let model = atom(0.0, 2.0);
        let times = [0.0, 0.25, 0.5];
        let record =
            simulate_trajectory(&model, &ground(), (0.0, 0.5), 1e-3, &times, 7).unwrap();
        assert!(record.click_times.is_empty());
        let master = solve_master(&model, &ground(), (0.0, 0.5), 1e-3, &times).unwrap();
        for ((_, traj), (_, det)) in record.sampled_states.iter().zip(master.iter()) {
            // no stochasticity when L = 0: M0 evolution approximates the
            // unitary flow to the shared O(dt^2) per-step accuracy
            assert!(traj.matrix().max_abs_diff(det.matrix()) < 1e-3);
        }
    }

    #[test]
    fn trajectory_is_deterministic_for_a_seed() {
        let model = atom(1.0, 2.0);
        let times = [0.0, 1.0, 2.0];
        let a = simulate_trajectory(&model, &ground(), (0.0, 2.0), 1e-3, &times, 42).unwrap();
        let b = simulate_trajectory(&model, &ground(), (0.0, 2.0), 1e-3, &times, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_trajectory(&model, &ground(), (0.0, 2.0), 1e-3, &times, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_trajectory_ensemble_is_that_trajectory() {
        let model = atom(1.0, 2.0);
        let times = [0.5, 1.0];
        let summary =
            ensemble_average(&model, &ground(), (0.0, 1.0), 1e-3, &times, 1, 9).unwrap();
        let record = simulate_trajectory(&model, &ground(), (0.0, 1.0), 1e-3, &times, 9).unwrap();
        for (mean, (_, state)) in summary.mean_state.iter().zip(record.sampled_states.iter()) {
            assert!(mean.matrix().max_abs_diff(state.matrix()) < 1e-12);
        }
        assert_eq!(summary.stderr, vec![0.0, 0.0]);
    }

    #[test]
    fn parallel_ensemble_is_bit_identical_to_sequential() {
        let model = atom(1.0, 2.0);
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let seq =
            ensemble_average(&model, &ground(), (0.0, 1.0), 1e-3, &times, 64, 11).unwrap();
        let par =
            ensemble_average_parallel(&model, &ground(), (0.0, 1.0), 1e-3, &times, 64, 11)
                .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn discrete_step_matches_euler_master_step_at_second_order() {
        // dp * jump + (1 - dp) * normalized no-click = Euler step + O(dt^2)
        let model = atom(1.0, 2.0);
        let rho = DensityMatrix::new(
            ComplexMatrix::new(
                2,
                2,
                vec![cr(0.6), c(0.1, 0.05), c(0.1, -0.05), cr(0.4)],
            )
            .unwrap(),
        )
        .unwrap();
        let mut errors = Vec::new();
        let ladder = [4e-3, 2e-3, 1e-3, 5e-4];
        for &dt in &ladder {
            let dp = click_probability(&rho, model.jump_operator(), dt).unwrap();
            let jump = jump_update(&rho, model.jump_operator()).unwrap();
            let (no_click, _w) = no_click_step(&rho, &model, dt).unwrap();
            let mut mixture = ComplexMatrix::zeros(2, 2);
            mixture.add_scaled(cr(dp), jump.matrix());
            mixture.add_scaled(cr(1.0 - dp), no_click.matrix());

            let mut euler = ComplexMatrix::zeros(2, 2);
            let mut t1 = ComplexMatrix::zeros(2, 2);
            let mut t2 = ComplexMatrix::zeros(2, 2);
            Integrator::rhs_into(&mut euler, rho.matrix(), &model, Rhs::Master, &mut t1, &mut t2);
            euler.scale_in_place(cr(dt));
            euler.add_scaled(Complex64::ONE, rho.matrix());

            errors.push(mixture.max_abs_diff(&euler));
        }
        // least-squares slope of log err against log dt
        let xs: Vec<f64> = ladder.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let xm = xs.iter().sum::<f64>() / xs.len() as f64;
        let ym = ys.iter().sum::<f64>() / ys.len() as f64;
        let slope = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn survival_is_monotone_in_the_horizon() {
        let model = atom(1.0, 2.0);
        let mut last = 1.0;
        for k in 1..=10 {
            let tau = k as f64 * 0.3;
            let p = no_click_probability(&model, &excited(), (0.0, tau), 1e-3).unwrap();
            assert!(p <= last + 1e-12);
            last = p;
        }
    }

    #[test]
    fn propagator_channel_matches_decay() {
        let model = atom(1.0, 0.0);
        let phi = propagator_channel(&model, 1.0, 1e-3).unwrap();
        let out = crate::channels::apply_channel(&phi, &excited()).unwrap();
        assert_abs_diff_eq!(out.matrix().get(1, 1).re, (-1.0f64).exp(), epsilon = 1e-6);
    }
}
