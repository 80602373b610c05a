//! Exact and effective time evolution of the two-qubit sensor.
//!
//! The lab-frame Schrödinger equation is integrated with classical RK4 and
//! renormalized after every substep. Pulses are instantaneous unitaries
//! applied between substeps; the pulsed record is reported in the
//! toggling frame by conjugating M with the accumulated pulse product.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, PulseSequence, SensorParams};
use crate::noise::OUParams;
use crate::qla::{self, ComplexMatrix, DensityMatrix, StateVector, C64};

/// Minimum number of integrator substeps per field period.
pub const SUBSTEPS_PER_PERIOD: f64 = 40.0;
/// Largest tolerated norm change within a single substep.
pub const MAX_STEP_NORM_DRIFT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_samples: usize,
    /// Largest integrator substep (independent of the sample spacing).
    pub h: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_samples: usize, h: f64) -> Result<Self> {
        let grid = Self { t0, t1, n_samples, h };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid whose substep resolves the field period of `p`.
    pub fn for_field(p: &SensorParams, t0: f64, t1: f64, n_samples: usize) -> Result<Self> {
        Self::new(t0, t1, n_samples, p.period() / SUBSTEPS_PER_PERIOD)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 >= 0.0 && self.t1 > self.t0 && self.t1.is_finite()) {
            return Err(Error::Config(format!("time grid needs 0 <= t0 < t1, got [{}, {}]", self.t0, self.t1)));
        }
        if self.n_samples < 2 {
            return Err(Error::Config("time grid needs at least two samples".into()));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("integrator step must be positive, got {}", self.h)));
        }
        Ok(())
    }

    /// Fails unless the substep gives at least 40 substeps per `period`.
    pub fn check_resolves(&self, period: f64) -> Result<()> {
        if self.h > period / SUBSTEPS_PER_PERIOD * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "integrator step {} exceeds period/{} = {}",
                self.h,
                SUBSTEPS_PER_PERIOD,
                period / SUBSTEPS_PER_PERIOD
            )));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_samples - 1;
        let span = self.t1 - self.t0;
        (0..=n).map(|k| if k == n { self.t1 } else { self.t0 + span * k as f64 / n as f64 }).collect()
    }

    /// Uniform substep knots covering [t0, t1] with spacing at most `h`.
    pub fn substep_times(&self) -> Vec<f64> {
        let mut knots = vec![self.t0];
        subdivide(self.t0, self.t1, self.h, &mut knots);
        knots
    }
}

/// Appends knots in (a, b] with spacing at most `h`.
fn subdivide(a: f64, b: f64, h: f64, knots: &mut Vec<f64>) {
    let n = (((b - a) / h) - 1e-9).ceil().max(1.0) as usize;
    for k in 1..=n {
        knots.push(if k == n { b } else { a + (b - a) * k as f64 / n as f64 });
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: Option<u64>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidDimension(format!("{} times but {} values", times.len(), values.len())));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("time series times must be strictly increasing".into()));
        }
        Ok(Self { label: label.into(), times, values, seed: None })
    }

    pub fn from_fn(label: impl Into<String>, times: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self { label: label.into(), times: times.to_vec(), values: times.iter().map(|&t| f(t)).collect(), seed: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs_diff(&self, other: &TimeSeries) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn rms_diff(&self, other: &TimeSeries) -> f64 {
        let n = self.values.len().min(other.values.len());
        let ss: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).powi(2)).sum();
        (ss / n as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub mean: TimeSeries,
    pub std_error: TimeSeries,
    pub n_traj: usize,
    pub base_seed: u64,
}

/// Output of [`propagate`].
#[derive(Clone, Debug)]
pub struct Propagation {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Largest |‖ψ‖ − 1| seen before renormalization.
    pub max_norm_drift: f64,
}

#[inline]
fn minus_i_h_psi(h: &ComplexMatrix, psi: &[C64]) -> Vec<C64> {
    let minus_i = C64::new(0.0, -1.0);
    h.apply(psi).into_iter().map(|x| minus_i * x).collect()
}

fn axpy(psi: &[C64], k: &[C64], s: f64) -> Vec<C64> {
    psi.iter().zip(k).map(|(a, b)| a + b * s).collect()
}

/// One RK4 step of dψ/dt = −iH(t)ψ.
fn rk4_step<F: Fn(f64) -> ComplexMatrix>(h_fn: &F, t: f64, dt: f64, psi: &[C64]) -> Vec<C64> {
    let k1 = minus_i_h_psi(&h_fn(t), psi);
    let k2 = minus_i_h_psi(&h_fn(t + 0.5 * dt), &axpy(psi, &k1, 0.5 * dt));
    let k3 = minus_i_h_psi(&h_fn(t + 0.5 * dt), &axpy(psi, &k2, 0.5 * dt));
    let k4 = minus_i_h_psi(&h_fn(t + dt), &axpy(psi, &k3, dt));
    psi.iter().enumerate().map(|(i, x)| x + (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0)).collect()
}

/// Step with renormalization; returns the pre-normalization drift.
fn renormalized_step<F: Fn(f64) -> ComplexMatrix>(h_fn: &F, t: f64, dt: f64, psi: &mut Vec<C64>) -> Result<f64> {
    let mut next = rk4_step(h_fn, t, dt, psi);
    let norm = qla::vec_norm(&next);
    let drift = (norm - 1.0).abs();
    if !(drift <= MAX_STEP_NORM_DRIFT) {
        return Err(Error::StepSize(format!("norm drift {drift:e} in one substep at t = {t}; reduce h below {dt}")));
    }
    for x in &mut next {
        *x /= norm;
    }
    *psi = next;
    Ok(drift)
}

/// Integrates i dψ/dt = H(t)ψ and returns the states at the grid samples.
pub fn propagate<F>(hamiltonian_fn: F, psi0: &StateVector, grid: &TimeGrid) -> Result<Propagation>
where
    F: Fn(f64) -> ComplexMatrix,
{
    grid.validate()?;
    if (psi0.norm() - 1.0).abs() > qla::NORM_TOL {
        return Err(Error::InvalidState("initial state is not normalized".into()));
    }
    let times = grid.sample_times();
    let mut psi = psi0.amplitudes().to_vec();
    let mut states = Vec::with_capacity(times.len());
    let mut max_drift: f64 = 0.0;
    let mut t = times[0];
    for (k, &target) in times.iter().enumerate() {
        if k > 0 {
            let mut knots = vec![t];
            subdivide(t, target, grid.h, &mut knots);
            for w in knots.windows(2) {
                max_drift = max_drift.max(renormalized_step(&hamiltonian_fn, w[0], w[1] - w[0], &mut psi)?);
            }
            t = target;
        }
        let herm = hamiltonian_fn(target).hermiticity_error();
        if herm > qla::HERMITIAN_TOL {
            return Err(Error::ContractViolation(format!(
                "Hamiltonian not Hermitian at t = {target} (error {herm:e})"
            )));
        }
        states.push(StateVector::normalized(psi.clone())?);
    }
    Ok(Propagation { times, states, max_norm_drift: max_drift })
}

/// States that expose computational-basis populations.
pub trait Populations {
    fn population(&self, index: usize) -> f64;
    fn dim(&self) -> usize;
}

impl Populations for StateVector {
    fn population(&self, index: usize) -> f64 {
        StateVector::population(self, index)
    }

    fn dim(&self) -> usize {
        StateVector::dim(self)
    }
}

impl Populations for DensityMatrix {
    fn population(&self, index: usize) -> f64 {
        DensityMatrix::population(self, index)
    }

    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }
}

/// M = |00><00| − |11><11|.
pub fn observable_m() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4);
    m.set(0, 0, C64::new(1.0, 0.0));
    m.set(3, 3, C64::new(-1.0, 0.0));
    m
}

/// <M> = p(00) − p(11).
pub fn expect_m<S: Populations>(state: &S) -> f64 {
    assert_eq!(state.dim(), 4, "M is a two-qubit observable");
    state.population(0) - state.population(3)
}

/// Closed-form effective-model curve cos(2Agt).
pub fn m_curve_effective(p: &SensorParams, grid: &TimeGrid) -> TimeSeries {
    let a = p.coupling_scale();
    TimeSeries::from_fn("m_effective", &grid.sample_times(), |t| (2.0 * a * p.g * t).cos())
}

/// <M(t)> from the exact lab-frame Hamiltonian starting in |00>.
pub fn m_curve_full(p: &SensorParams, grid: &TimeGrid) -> Result<TimeSeries> {
    if p.b != 0.0 {
        grid.check_resolves(p.period())?;
    }
    let xx = &model::xx_coupling() * p.g;
    let zc = model::collective_z();
    let h_fn = |t: f64| &xx + &(&zc * (p.b * (p.omega * t + p.phi).cos()));
    let run = propagate(h_fn, &StateVector::basis(4, 0), grid)?;
    let values = run.states.iter().map(expect_m).collect();
    TimeSeries::new("m_full", run.times, values)
}

/// π rotation of both qubits about x: e^{−iπσx/2} ⊗ e^{−iπσx/2}.
pub fn x_pulse() -> ComplexMatrix {
    let single = &qla::sigma_x() * C64::new(0.0, -1.0);
    qla::kron(&single, &single).expect("2x2")
}

/// π rotation of both qubits about z.
pub fn z_pulse() -> ComplexMatrix {
    let single = &qla::sigma_z() * C64::new(0.0, -1.0);
    qla::kron(&single, &single).expect("2x2")
}

#[derive(Clone, Copy, Default)]
struct Event {
    sample: Option<usize>,
    x_pulse: bool,
    z_pulse: bool,
}

/// Substep knots with the events that fire at each knot.
struct Schedule {
    knots: Vec<f64>,
    events: Vec<Event>,
    n_samples: usize,
}

fn build_schedule(seq: &PulseSequence, grid: &TimeGrid) -> Result<Schedule> {
    let samples = grid.sample_times();
    for &t in seq.x_times().iter().chain(seq.z_times()) {
        if t < grid.t0 || t > grid.t1 {
            return Err(Error::Config(format!("pulse at t = {t} lies outside the grid [{}, {}]", grid.t0, grid.t1)));
        }
    }
    #[derive(Clone, Copy)]
    enum Kind {
        Sample(usize),
        X,
        Z,
    }
    let mut marks: Vec<(f64, Kind)> = samples.iter().enumerate().map(|(i, &t)| (t, Kind::Sample(i))).collect();
    marks.extend(seq.x_times().iter().map(|&t| (t, Kind::X)));
    marks.extend(seq.z_times().iter().map(|&t| (t, Kind::Z)));
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut knots = vec![grid.t0];
    let mut events = vec![Event::default()];
    for (t, kind) in marks {
        let last = *knots.last().expect("non-empty");
        if t > last {
            subdivide(last, t, grid.h, &mut knots);
            events.resize(knots.len(), Event::default());
        }
        let ev = events.last_mut().expect("non-empty");
        match kind {
            Kind::Sample(i) => ev.sample = Some(i),
            Kind::X => ev.x_pulse = true,
            Kind::Z => ev.z_pulse = true,
        }
    }
    Ok(Schedule { knots, events, n_samples: samples.len() })
}

fn run_trajectory(p: &SensorParams, ou: &OUParams, schedule: &Schedule, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bx = ou.sample_at(&schedule.knots, &mut rng);
    let by = ou.sample_at(&schedule.knots, &mut rng);
    let bz = ou.sample_at(&schedule.knots, &mut rng);

    let xx = &model::xx_coupling() * p.g;
    let (xc, yc, zc) = (model::collective_x(), model::collective_y(), model::collective_z());
    let (xp, zp) = (x_pulse(), z_pulse());
    let m = observable_m();

    let mut psi = qla::basis(4, 0);
    let mut frame = ComplexMatrix::identity(4);
    let mut record = vec![f64::NAN; schedule.n_samples];

    for (k, &t) in schedule.knots.iter().enumerate() {
        if k > 0 {
            let t_prev = schedule.knots[k - 1];
            let noise = &(&(&xc * bx[k - 1]) + &(&yc * by[k - 1])) + &(&zc * bz[k - 1]);
            let static_part = &xx + &noise;
            let h_fn = |s: f64| &static_part + &(&zc * (p.b * (p.omega * s + p.phi).cos()));
            renormalized_step(&h_fn, t_prev, t - t_prev, &mut psi)?;
        }
        let ev = schedule.events[k];
        if ev.z_pulse {
            psi = zp.apply(&psi);
            frame = &zp * &frame;
        }
        if ev.x_pulse {
            psi = xp.apply(&psi);
            frame = &xp * &frame;
        }
        if let Some(i) = ev.sample {
            // <ψ_lab| P M P† |ψ_lab>
            let toggled = &(&frame * &m) * &frame.dagger();
            record[i] = qla::inner(&psi, &toggled.apply(&psi)).re;
        }
    }
    Ok(record)
}

/// Monte Carlo average of the toggling-frame <M(t)> under Ornstein–Uhlenbeck
/// noise on all three collective axes, using the global rayon pool.
pub fn simulate_pulsed_noisy(
    p: &SensorParams,
    seq: &PulseSequence,
    ou: &OUParams,
    grid: &TimeGrid,
    n_traj: usize,
    base_seed: u64,
) -> Result<EnsembleResult> {
    simulate_pulsed_noisy_with_workers(p, seq, ou, grid, n_traj, base_seed, None)
}

/// As [`simulate_pulsed_noisy`] on a dedicated pool of `workers` threads.
/// Results do not depend on the worker count.
pub fn simulate_pulsed_noisy_with_workers(
    p: &SensorParams,
    seq: &PulseSequence,
    ou: &OUParams,
    grid: &TimeGrid,
    n_traj: usize,
    base_seed: u64,
    workers: Option<usize>,
) -> Result<EnsembleResult> {
    grid.validate()?;
    ou.validate()?;
    if n_traj == 0 {
        return Err(Error::Config("at least one trajectory is required".into()));
    }
    if p.b != 0.0 {
        grid.check_resolves(p.period())?;
    }
    if grid.h > ou.t_c / 10.0 {
        return Err(Error::Config(format!(
            "integrator step {} does not resolve the noise correlation time {}",
            grid.h, ou.t_c
        )));
    }
    let schedule = build_schedule(seq, grid)?;
    let job = || -> Result<Vec<Vec<f64>>> {
        (0..n_traj)
            .into_par_iter()
            .map(|i| run_trajectory(p, ou, &schedule, base_seed.wrapping_add(i as u64)))
            .collect()
    };
    let records = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?
            .install(job)?,
        None => job()?,
    };

    // Reduction in trajectory order.
    let n_samples = schedule.n_samples;
    let mut sum = vec![0.0; n_samples];
    for rec in &records {
        for (s, v) in sum.iter_mut().zip(rec) {
            *s += v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / n_traj as f64).collect();
    let mut sq = vec![0.0; n_samples];
    for rec in &records {
        for ((s, v), m) in sq.iter_mut().zip(rec).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    let std_error: Vec<f64> =
        sq.iter().map(|s| if n_traj > 1 { (s / (n_traj - 1) as f64 / n_traj as f64).sqrt() } else { 0.0 }).collect();

    let times = grid.sample_times();
    let label = if seq.is_empty() { "m_noisy" } else { "m_noisy_pulsed" };
    let mut mean = TimeSeries::new(label, times.clone(), mean)?;
    mean.seed = Some(base_seed);
    let mut std_error = TimeSeries::new(format!("{label}_stderr"), times, std_error)?;
    std_error.seed = Some(base_seed);
    Ok(EnsembleResult { mean, std_error, n_traj, base_seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::effective_model;
    use std::f64::consts::PI;

    fn params() -> SensorParams {
        SensorParams::new(1.0, 1.0, 10.0).unwrap()
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(1.0, 1.0, 10, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 10, 0.0).is_err());
        let g = TimeGrid::new(0.0, 1.0, 11, 0.1).unwrap();
        let t = g.sample_times();
        assert_eq!(t.len(), 11);
        assert_eq!(t[10], 1.0);
        assert!(g.check_resolves(1.0).is_err());
        assert!(g.check_resolves(4.0).is_ok());
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let grid = TimeGrid::new(0.0, 3.0, 7, 0.01).unwrap();
        let psi0 = StateVector::normalized(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.0),
        ])
        .unwrap();
        let run = propagate(|_| ComplexMatrix::zeros(4), &psi0, &grid).unwrap();
        for s in &run.states {
            assert_eq!(s, &psi0);
        }
    }

    #[test]
    fn static_hamiltonian_matches_exponential() {
        let p = params().with_b(0.0);
        let grid = TimeGrid::new(0.0, 10.0, 41, 0.01).unwrap();
        let h = model::full_hamiltonian(&p, 0.0);
        let psi0 = StateVector::basis(4, 0);
        let run = propagate(|t| model::full_hamiltonian(&p, t), &psi0, &grid).unwrap();
        for (t, s) in run.times.iter().zip(&run.states) {
            let exact = psi0.evolve(&qla::expm_unitary(&h, *t).unwrap());
            for (a, b) in s.amplitudes().iter().zip(exact.amplitudes()) {
                assert!((a - b).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn expect_m_basis_states() {
        assert_eq!(expect_m(&StateVector::basis(4, 0)), 1.0);
        assert_eq!(expect_m(&StateVector::basis(4, 3)), -1.0);
        assert_eq!(expect_m(&StateVector::basis(4, 1)), 0.0);
        assert_eq!(expect_m(&DensityMatrix::maximally_mixed(4)), 0.0);
    }

    #[test]
    fn effective_evolution_quarter_period() {
        let p = params();
        let m = effective_model(&p);
        let t = PI / (4.0 * m.a * p.g);
        let u = qla::expm_unitary(&m.hamiltonian(), t).unwrap();
        let psi = StateVector::basis(4, 0).evolve(&u);
        assert!(expect_m(&psi).abs() < 1e-12);
    }

    #[test]
    fn effective_propagator_on_00() {
        let p = params();
        let m = effective_model(&p);
        let t = 0.77;
        let u = qla::expm_unitary(&m.hamiltonian(), t).unwrap();
        let psi = u.apply(&qla::basis(4, 0));
        let w = m.a * p.g * t;
        assert!((psi[0] - C64::new(w.cos(), 0.0)).norm() < 1e-12);
        assert!((psi[3] - C64::new(0.0, -w.sin())).norm() < 1e-12);
        assert!(psi[1].norm() < 1e-12 && psi[2].norm() < 1e-12);
    }

    #[test]
    fn m_curve_effective_values() {
        let p = params();
        let grid = TimeGrid::new(0.0, 1.0, 2, 0.01).unwrap();
        let c = m_curve_effective(&p, &grid);
        assert_eq!(c.values[0], 1.0);
        // cos(2·0.960398226659563) frozen from the Bessel oracle.
        assert!((c.values[1] - (-0.342_897_926_308_858)).abs() < 1e-9);
        let c0 = m_curve_effective(&p.with_b(0.0), &grid);
        assert!((c0.values[1] - 2f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn full_curve_needs_resolved_grid() {
        let p = params();
        let coarse = TimeGrid::new(0.0, 1.0, 5, 0.1).unwrap();
        assert!(matches!(m_curve_full(&p, &coarse), Err(Error::Config(_))));
    }

    #[test]
    fn pulses_are_pi_rotations() {
        let xp = x_pulse();
        assert!(xp.is_unitary());
        // |00> -> −|11>
        let out = xp.apply(&qla::basis(4, 0));
        assert!((out[3] + C64::new(1.0, 0.0)).norm() < 1e-15);
        let m = observable_m();
        let conj = &(&xp * &m) * &xp.dagger();
        assert!(conj.max_abs_diff(&(-&m)) < 1e-15);
        let zp = z_pulse();
        let conj = &(&zp * &m) * &zp.dagger();
        assert!(conj.max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn pulse_outside_grid_is_rejected() {
        let p = params();
        let grid = TimeGrid::for_field(&p, 0.0, 1.0, 11).unwrap();
        let seq = PulseSequence::new(vec![2.0], vec![]).unwrap();
        let ou = OUParams::new(0.0, 0.0, 50.0).unwrap();
        let r = simulate_pulsed_noisy(&p, &seq, &ou, &grid, 1, 0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn schedule_hits_pulse_times_exactly() {
        let p = params();
        let grid = TimeGrid::for_field(&p, 0.0, 2.0, 5).unwrap();
        let seq = PulseSequence::periodic(2.0 * PI / p.omega, 2.0).unwrap();
        let s = build_schedule(&seq, &grid).unwrap();
        let fired: Vec<f64> = s.knots.iter().zip(&s.events).filter(|(_, e)| e.x_pulse).map(|(t, _)| *t).collect();
        assert_eq!(fired, seq.x_times());
        assert!(s.knots.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= grid.h * (1.0 + 1e-9)));
        assert_eq!(s.events.iter().filter(|e| e.sample.is_some()).count(), 5);
    }

    #[test]
    fn noiseless_pulsed_run_tracks_effective_curve() {
        let p = params();
        let grid = TimeGrid::for_field(&p, 0.0, 10.0, 101).unwrap();
        let seq = PulseSequence::periodic(2.0 * PI / p.omega, 10.0).unwrap();
        let ou = OUParams::new(0.0, 0.0, 50.0).unwrap();
        let res = simulate_pulsed_noisy(&p, &seq, &ou, &grid, 2, 7).unwrap();
        let ideal = m_curve_effective(&p, &grid);
        assert!(res.mean.max_abs_diff(&ideal) < 0.1);
        assert!(res.std_error.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ensemble_is_independent_of_worker_count() {
        let p = params();
        let grid = TimeGrid::for_field(&p, 0.0, 3.0, 31).unwrap();
        let seq = PulseSequence::periodic(2.0 * PI / p.omega, 3.0).unwrap();
        let ou = OUParams::new(0.0, 0.2, 50.0).unwrap();
        let one = simulate_pulsed_noisy_with_workers(&p, &seq, &ou, &grid, 6, 11, Some(1)).unwrap();
        let four = simulate_pulsed_noisy_with_workers(&p, &seq, &ou, &grid, 6, 11, Some(4)).unwrap();
        assert_eq!(one, four);
        let other = simulate_pulsed_noisy_with_workers(&p, &seq, &ou, &grid, 6, 12, Some(4)).unwrap();
        assert_ne!(one.mean.values, other.mean.values);
    }
}
