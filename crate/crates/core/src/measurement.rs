//! Joint |00> probability from two single-qubit measurements separated by a
//! short delay, and the order of the error that delay introduces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{self, on_first, on_second, ComplexMatrix, DensityMatrix, C64};

const MIN_FIRST_PROB: f64 = 1e-14;
const MIN_ORDER_ERR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Qubit {
    First,
    Second,
}

/// Matrix elements entering the delayed-measurement closed form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// <00|ρ|00>
    pub alpha: f64,
    /// <01|ρ|01>
    pub beta2: f64,
    /// <00|ρ|01>
    pub beta1: C64,
    pub delta_t: f64,
}

impl MeasurementRecord {
    pub fn from_density(rho: &DensityMatrix, delta_t: f64) -> Result<Self> {
        let rec = Self { alpha: rho.population(0), beta2: rho.population(1), beta1: rho.matrix().get(0, 1), delta_t };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = -1e-10..=1.0 + 1e-10;
        if !unit.contains(&self.alpha) || !unit.contains(&self.beta2) || self.alpha + self.beta2 > 1.0 + 1e-10 {
            return Err(Error::InvalidState(format!(
                "alpha = {}, beta2 = {} are not populations",
                self.alpha, self.beta2
            )));
        }
        if !(self.delta_t >= 0.0) {
            return Err(Error::Domain(format!("delay must be non-negative, got {}", self.delta_t)));
        }
        Ok(())
    }
}

fn projector_zero() -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(2);
    p.set(0, 0, C64::new(1.0, 0.0));
    p
}

/// Measures `first` in |0>, evolves the normalized post-measurement state
/// under `h_eff` for `delta_t`, then measures the other qubit in |0>.
/// Returns the joint probability of both outcomes.
pub fn sequential_joint_prob_ordered(
    rho: &DensityMatrix,
    h_eff: &ComplexMatrix,
    delta_t: f64,
    first: Qubit,
) -> Result<f64> {
    if !(delta_t >= 0.0) {
        return Err(Error::Domain(format!("delay must be non-negative, got {delta_t}")));
    }
    let (p_first, p_second) = match first {
        Qubit::First => (on_first(&projector_zero()), on_second(&projector_zero())),
        Qubit::Second => (on_second(&projector_zero()), on_first(&projector_zero())),
    };
    let projected = &(&p_first * rho.matrix()) * &p_first;
    let prob_first = projected.trace().re;
    if prob_first < MIN_FIRST_PROB {
        return Err(Error::UndefinedConditional(prob_first));
    }
    let post = DensityMatrix::from_matrix_unchecked(&projected * (1.0 / prob_first));
    let u = qla::expm_unitary(h_eff, delta_t)?;
    let evolved = post.evolve(&u);
    let conditional = (&p_second * evolved.matrix()).trace().re;
    Ok(conditional * prob_first)
}

/// Qubit 1 measured first.
pub fn sequential_joint_prob_exact(rho: &DensityMatrix, h_eff: &ComplexMatrix, delta_t: f64) -> Result<f64> {
    sequential_joint_prob_ordered(rho, h_eff, delta_t, Qubit::First)
}

/// α cos²(gAδt) + β₂ sin²(gδt).
pub fn sequential_joint_prob_closed(rec: &MeasurementRecord, a: f64, g: f64) -> f64 {
    let x = g * rec.delta_t;
    rec.alpha * (a * x).cos().powi(2) + rec.beta2 * x.sin().powi(2)
}

/// Delay error and its halving ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayError {
    /// |joint(δt) − joint(0)|
    pub err: f64,
    /// err(δt) / err(δt/2); 4 for quadratic scaling.
    pub ratio: f64,
}

pub fn delay_error_order(rho: &DensityMatrix, h_eff: &ComplexMatrix, delta_t: f64) -> Result<DelayError> {
    let base = sequential_joint_prob_exact(rho, h_eff, 0.0)?;
    let err = (sequential_joint_prob_exact(rho, h_eff, delta_t)? - base).abs();
    let half = (sequential_joint_prob_exact(rho, h_eff, 0.5 * delta_t)? - base).abs();
    if err < MIN_ORDER_ERR || half < MIN_ORDER_ERR {
        return Err(Error::IndeterminateOrder(err.min(half)));
    }
    Ok(DelayError { err, ratio: err / half })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TimeGrid;
    use crate::model::{effective_model, EffectiveModel, SensorParams};
    use crate::noise::{lindblad_solve, LindbladParams};
    use crate::qla::StateVector;

    fn model() -> EffectiveModel {
        effective_model(&SensorParams::new(1.0, 1.0, 10.0).unwrap())
    }

    fn lindblad_state(t: f64) -> DensityMatrix {
        let m = model();
        let grid = TimeGrid::new(0.0, t, 2, 0.01).unwrap();
        let run = lindblad_solve(
            &m.hamiltonian(),
            &LindbladParams::new(0.01, 0.05).unwrap(),
            &StateVector::basis(4, 0).to_density(),
            &grid,
        )
        .unwrap();
        run.states.last().unwrap().clone()
    }

    #[test]
    fn zero_delay_gives_simultaneous_probability() {
        let m = model();
        let rho = lindblad_state(3.0);
        let joint = sequential_joint_prob_exact(&rho, &m.hamiltonian(), 0.0).unwrap();
        assert!((joint - rho.population(0)).abs() < 1e-12);
        let other = sequential_joint_prob_ordered(&rho, &m.hamiltonian(), 0.0, Qubit::Second).unwrap();
        assert!((joint - other).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_exact() {
        let m = model();
        let h = m.hamiltonian();
        for t in [0.5, 2.0, 5.0, 13.0] {
            let rho = lindblad_state(t);
            for dt in [0.0, 0.01, 0.1, 0.7] {
                let rec = MeasurementRecord::from_density(&rho, dt).unwrap();
                let exact = sequential_joint_prob_exact(&rho, &h, dt).unwrap();
                let closed = sequential_joint_prob_closed(&rec, m.a, m.g);
                assert!((exact - closed).abs() < 1e-12, "t = {t}, dt = {dt}");
            }
        }
    }

    #[test]
    fn flip_flop_transfer_from_01() {
        let m = model();
        let rho = StateVector::basis(4, 1).to_density();
        let dt = 0.3;
        let exact = sequential_joint_prob_exact(&rho, &m.hamiltonian(), dt).unwrap();
        assert!((exact - (m.g * dt).sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn pure_00_error_is_quadratic() {
        let m = model();
        let rho = StateVector::basis(4, 0).to_density();
        let dt = 0.05;
        let out = delay_error_order(&rho, &m.hamiltonian(), dt).unwrap();
        assert!((out.err - (m.a * dt).sin().powi(2)).abs() < 1e-12);
        assert!((out.ratio - 4.0).abs() < 0.01);
    }

    #[test]
    fn degenerate_inputs() {
        let m = model();
        let rho = StateVector::basis(4, 0).to_density();
        assert!(matches!(delay_error_order(&rho, &m.hamiltonian(), 0.0), Err(Error::IndeterminateOrder(_))));
        let excited = StateVector::basis(4, 3).to_density();
        assert!(matches!(
            sequential_joint_prob_exact(&excited, &m.hamiltonian(), 0.1),
            Err(Error::UndefinedConditional(_))
        ));
        assert!(sequential_joint_prob_exact(&rho, &m.hamiltonian(), -0.1).is_err());
    }

    #[test]
    fn error_bound_holds_on_lindblad_states() {
        let m = model();
        let h = m.hamiltonian();
        for t in [1.0, 4.0, 9.0] {
            let rho = lindblad_state(t);
            for k in 1..=10 {
                let dt = 0.01 * k as f64;
                let rec = MeasurementRecord::from_density(&rho, dt).unwrap();
                let dev = (sequential_joint_prob_exact(&rho, &h, dt).unwrap() - rec.alpha).abs();
                let bound = 2.0 * (m.a * m.a * rec.alpha + rec.beta2) * (m.g * dt).powi(2);
                assert!(dev <= bound, "t = {t}, dt = {dt}: {dev} > {bound}");
            }
        }
    }
}
