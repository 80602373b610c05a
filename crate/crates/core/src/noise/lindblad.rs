use serde::{Deserialize, Serialize};

use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::qla::{self, on_first, on_second, ComplexMatrix, DensityMatrix, C64};

pub const MAX_TRACE_DRIFT: f64 = 1e-8;

/// Amplitude damping (σ− on each qubit, rate γ1) and dephasing (σz on each
/// qubit, rate γ2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindbladParams {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl LindbladParams {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 >= 0.0 && gamma2 >= 0.0) || !gamma1.is_finite() || !gamma2.is_finite() {
            return Err(Error::Config(format!("Lindblad rates must be non-negative, got ({gamma1}, {gamma2})")));
        }
        Ok(Self { gamma1, gamma2 })
    }

    /// √γ1 σ−⁽¹⁾, √γ1 σ−⁽²⁾, √γ2 σz⁽¹⁾, √γ2 σz⁽²⁾.
    pub fn collapse_operators(&self) -> Vec<ComplexMatrix> {
        let (a, d) = (self.gamma1.sqrt(), self.gamma2.sqrt());
        vec![
            &on_first(&qla::sigma_minus()) * a,
            &on_second(&qla::sigma_minus()) * a,
            &on_first(&qla::sigma_z()) * d,
            &on_second(&qla::sigma_z()) * d,
        ]
    }
}

/// Envelope timescales for the fit window: the populations of the
/// {|00>,|11>} block relax at 2γ1 and the |00>/|11> coherence decays at
/// 2γ2 per qubit pair, giving T1 ≈ 1/(2γ1) and T2 ≈ 1/(2γ2).
pub fn estimated_decay_times(lp: &LindbladParams) -> (f64, f64) {
    (0.5 / lp.gamma1, 0.5 / lp.gamma2)
}

/// −i[H, ρ] + Σ (CρC† − ½{C†C, ρ}).
pub fn lindblad_rhs(h: &ComplexMatrix, ops: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let minus_i = C64::new(0.0, -1.0);
    let mut out = &h.commutator(rho) * minus_i;
    for c in ops {
        let cd = c.dagger();
        let jump = &(c * rho) * &cd;
        let anti = (&cd * c).anticommutator(rho);
        out = &(&out + &jump) - &(&anti * 0.5);
    }
    out
}

struct Generator {
    /// H − (i/2)ΣC†C
    h_eff: ComplexMatrix,
    ops: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl Generator {
    fn new(h: &ComplexMatrix, ops: &[ComplexMatrix]) -> Self {
        let mut decay = ComplexMatrix::zeros(h.dim());
        for c in ops {
            decay = &decay + &(&c.dagger() * c);
        }
        let h_eff = h - &(&decay * C64::new(0.0, 0.5));
        Self { h_eff, ops: ops.iter().map(|c| (c.clone(), c.dagger())).collect() }
    }

    fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let left = &self.h_eff * rho;
        let right = rho * &self.h_eff.dagger();
        let mut out = &(&left - &right) * C64::new(0.0, -1.0);
        for (c, cd) in &self.ops {
            out = &out + &(&(c * rho) * cd);
        }
        out
    }

    fn rk4(&self, rho: &ComplexMatrix, dt: f64) -> ComplexMatrix {
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &(&k1 * (0.5 * dt))));
        let k3 = self.apply(&(rho + &(&k2 * (0.5 * dt))));
        let k4 = self.apply(&(rho + &(&k3 * dt)));
        let incr = &(&(&k1 + &(&k2 * 2.0)) + &(&k3 * 2.0)) + &k4;
        rho + &(&incr * (dt / 6.0))
    }
}

#[derive(Clone, Debug)]
pub struct LindbladRun {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest |tr ρ − 1| over the samples.
    pub max_trace_drift: f64,
}

impl LindbladRun {
    pub fn populations(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|r| r.population(index)).collect()
    }
}

/// RK4 integration of the master equation with a time-independent
/// Hamiltonian. Every sample is checked against the density-matrix
/// contract.
pub fn lindblad_solve(
    h_eff: &ComplexMatrix,
    lp: &LindbladParams,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<LindbladRun> {
    grid.validate()?;
    rho0.validate()?;
    if !h_eff.is_hermitian() {
        return Err(Error::ContractViolation("Lindblad Hamiltonian is not Hermitian".into()));
    }
    let energy = qla::herm_eig(h_eff)?.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = energy.max(lp.gamma1).max(lp.gamma2).max(1.0);
    if grid.h > 0.01 / scale * (1.0 + 1e-12) {
        return Err(Error::StepSize(format!("Lindblad step {} exceeds 0.01/{scale}", grid.h)));
    }

    let gen = Generator::new(h_eff, &lp.collapse_operators());
    let times = grid.sample_times();
    let mut rho = rho0.matrix().clone();
    let mut states = Vec::with_capacity(times.len());
    let mut max_drift: f64 = 0.0;
    let mut t = times[0];
    for (k, &target) in times.iter().enumerate() {
        if k > 0 {
            let n = (((target - t) / grid.h) - 1e-9).ceil().max(1.0) as usize;
            let dt = (target - t) / n as f64;
            for _ in 0..n {
                rho = gen.rk4(&rho, dt);
            }
            t = target;
        }
        let state = DensityMatrix::from_matrix_unchecked(rho.clone());
        let drift = (state.trace() - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > MAX_TRACE_DRIFT {
            return Err(Error::StepSize(format!("trace drift {drift:e} at t = {target}")));
        }
        state
            .validate()
            .map_err(|e| Error::StepSize(format!("density matrix contract failed at t = {target}: {e}")))?;
        states.push(state);
    }
    Ok(LindbladRun { times, states, max_trace_drift: max_drift })
}
