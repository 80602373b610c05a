//! Classical and quantum Fisher information for estimating the field
//! amplitude b, plus the single-qubit baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bessel_j, effective_model, SensorParams};
use crate::qla::{self, herm_eig, DensityMatrix, StateVector};

/// Outcomes below this probability contribute nothing to the Fisher sum.
pub const MIN_OUTCOME_PROB: f64 = 1e-12;
/// Eigenvalue pairs with ρ_k + ρ_l below this are skipped in the QFI sum.
pub const QFI_PAIR_CUTOFF: f64 = 1e-10;
const PROB_SLACK: f64 = 1e-9;

/// Finite-difference step 1e-5·max(1, |b|).
pub fn default_db(b: f64) -> f64 {
    1e-5 * b.abs().max(1.0)
}

/// Outcome probabilities of M, labeled +1, −1 and optionally 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    pub labels: Vec<i8>,
    pub values: Vec<f64>,
    pub params: SensorParams,
    pub t: f64,
}

impl ProbabilityVector {
    pub fn two_outcome(plus: f64, minus: f64, params: SensorParams, t: f64) -> Self {
        Self { labels: vec![1, -1], values: vec![plus, minus], params, t }
    }

    pub fn three_outcome(plus: f64, minus: f64, zero: f64, params: SensorParams, t: f64) -> Self {
        Self { labels: vec![1, -1, 0], values: vec![plus, minus, zero], params, t }
    }

    pub fn get(&self, label: i8) -> Option<f64> {
        self.labels.iter().position(|&l| l == label).map(|i| self.values[i])
    }

    fn check_range(&self) -> Result<()> {
        for (&l, &v) in self.labels.iter().zip(&self.values) {
            if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&v) {
                return Err(Error::InvalidModel(format!("p({l}) = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// p₊₁ = cos²(Agt), p₋₁ = sin²(Agt), independent of the field phase.
pub fn probs_ideal(p: &SensorParams, t: f64) -> ProbabilityVector {
    let x = p.coupling_scale() * p.g * t;
    ProbabilityVector::two_outcome(x.cos().powi(2), x.sin().powi(2), *p, t)
}

/// I(b) = (8gt/ω)²·J₁(4b/ω)².
pub fn cfi_closed(p: &SensorParams, t: f64) -> f64 {
    let j1 = bessel_j(1, p.bessel_argument()).expect("4b/omega within Bessel range");
    (8.0 * p.g * t / p.omega).powi(2) * j1 * j1
}

/// Σₙ (∂_b pₙ)² / pₙ with a central difference of step `db`.
pub fn cfi_numeric<F>(prob_fn: F, b: f64, t: f64, db: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> ProbabilityVector,
{
    if !(db > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {db}")));
    }
    let center = prob_fn(b, t);
    let up = prob_fn(b + db, t);
    let down = prob_fn(b - db, t);
    for pv in [&center, &up, &down] {
        pv.check_range()?;
    }
    if up.labels != center.labels || down.labels != center.labels {
        return Err(Error::InvalidModel("outcome labels change with b".into()));
    }
    Ok(center
        .values
        .iter()
        .zip(up.values.iter().zip(&down.values))
        .filter(|(&p, _)| p > MIN_OUTCOME_PROB)
        .map(|(&p, (&u, &d))| {
            let dp = (u - d) / (2.0 * db);
            dp * dp / p
        })
        .sum())
}

/// Quantum Fisher information 2 Σ |<ρ_k|∂_bρ|ρ_l>|² / (ρ_k + ρ_l).
pub fn qfi<F>(rho_fn: F, b: f64) -> Result<f64>
where
    F: Fn(f64) -> DensityMatrix,
{
    let db = default_db(b);
    let rho = rho_fn(b);
    let min = rho.min_eigenvalue()?;
    if min < -qla::DENSITY_EIGEN_TOL {
        return Err(Error::InvalidState(format!("density matrix has eigenvalue {min:e}")));
    }
    let up = rho_fn(b + db);
    let down = rho_fn(b - db);
    let drho = &(up.matrix() - down.matrix()) * (0.5 / db);
    let sym = &(rho.matrix() + &rho.matrix().dagger()) * 0.5;
    let eig = herm_eig(&sym)?;
    let n = rho.dim();
    let vecs: Vec<_> = (0..n).map(|k| eig.vector(k)).collect();
    let mut sum = 0.0;
    for k in 0..n {
        let dv = drho.apply(&vecs[k]);
        for (l, vl) in vecs.iter().enumerate() {
            let denom = eig.values[k] + eig.values[l];
            if denom > QFI_PAIR_CUTOFF {
                sum += 2.0 * qla::inner(vl, &dv).norm_sqr() / denom;
            }
        }
    }
    Ok(sum)
}

/// ρ(b, t) = |ψ(t)><ψ(t)| with ψ evolved from |00> by the effective model.
pub fn ideal_density(p: &SensorParams, t: f64) -> DensityMatrix {
    let h = effective_model(p).hamiltonian();
    let u = qla::expm_unitary(&h, t).expect("effective Hamiltonian is Hermitian");
    StateVector::basis(4, 0).evolve(&u).to_density()
}

/// Φ(t) = 2b sin(ωt)/ω for a single qubit without pulses.
pub fn single_qubit_phase(p: &SensorParams, t: f64) -> f64 {
    2.0 * p.b * (p.omega * t).sin() / p.omega
}

/// Time at which the single-qubit pulsed phase is read: π/(2ω) without
/// pulses, otherwise just after the n-th pulse at ωt = (2n − 1)π/2.
pub fn pulsed_readout_time(p: &SensorParams, n_pulses: u32) -> f64 {
    let k = n_pulses.max(1) as f64;
    (2.0 * k - 1.0) * std::f64::consts::FRAC_PI_2 / p.omega
}

/// Relative phase of a single qubit with π pulses at the field zeros
/// ωt = π/2, 3π/2, …, read just after the last pulse.
///
/// Each segment adds ∫ 2b cos(ωt) dt; each π pulse swaps |0> and |1>,
/// negating the accumulated relative phase.
pub fn single_qubit_pulsed_phase(p: &SensorParams, n_pulses: u32) -> f64 {
    let segment = |a: f64, b: f64| 2.0 * p.b * ((p.omega * b).sin() - (p.omega * a).sin()) / p.omega;
    if n_pulses == 0 {
        return segment(0.0, pulsed_readout_time(p, 0));
    }
    let mut phase = 0.0;
    let mut prev = 0.0;
    for k in 1..=n_pulses {
        let tk = pulsed_readout_time(p, k);
        phase = -(phase + segment(prev, tk));
        prev = tk;
    }
    phase
}

/// I(b) = (4/ω²) sin²(ωt) for the pulse-free single-qubit sensor.
pub fn single_qubit_cfi(p: &SensorParams, t: f64) -> f64 {
    4.0 / (p.omega * p.omega) * (p.omega * t).sin().powi(2)
}
