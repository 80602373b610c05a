use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{cfi_closed, ProbabilityVector};
use crate::model::SensorParams;

/// Relaxation and dephasing envelopes f1(t) = (1 + e^{−t/T1})/2 and
/// f2(t) = e^{−t/T2}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhenomNoise {
    pub t1: f64,
    pub t2: f64,
}

impl PhenomNoise {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0) {
            return Err(Error::Config(format!("T1 and T2 must be positive, got ({t1}, {t2})")));
        }
        Ok(Self { t1, t2 })
    }

    /// The noiseless limit T1, T2 → ∞.
    pub fn none() -> Self {
        Self { t1: f64::INFINITY, t2: f64::INFINITY }
    }

    pub fn f1(&self, t: f64) -> f64 {
        0.5 * (1.0 + (-t / self.t1).exp())
    }

    pub fn f2(&self, t: f64) -> f64 {
        (-t / self.t2).exp()
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.f1(t) * self.f2(t)
    }
}

/// Three-outcome probabilities (+1, −1, 0) of M under relaxation and
/// dephasing.
pub fn noisy_probs(p: &SensorParams, n: &PhenomNoise, t: f64) -> ProbabilityVector {
    let c = (2.0 * p.coupling_scale() * p.g * t).cos();
    let (f1, f2) = (n.f1(t), n.f2(t));
    let plus = 0.5 * f1 * (1.0 + f2 * c);
    let minus = 0.5 * f1 * (1.0 - f2 * c);
    ProbabilityVector::three_outcome(plus, minus, 1.0 - plus - minus, *p, t)
}

/// Noise reduction factor F²·sin²(2Agt) / (f1·(1 − f2²cos²(2Agt))), with the
/// removable singularity at t = 0 set to 0.
pub fn noise_factor(p: &SensorParams, n: &PhenomNoise, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let phase = 2.0 * p.coupling_scale() * p.g * t;
    let (s, c) = phase.sin_cos();
    let (f1, f2) = (n.f1(t), n.f2(t));
    let denom = f1 * (1.0 - f2 * f2 * c * c);
    if denom <= 0.0 {
        return 0.0;
    }
    (f1 * f2).powi(2) * s * s / denom
}

/// Fisher information for b from the three-outcome noisy measurement.
pub fn cfi_noisy_closed(p: &SensorParams, n: &PhenomNoise, t: f64) -> f64 {
    cfi_closed(p, t) * noise_factor(p, n, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{cfi_numeric, default_db};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params() -> SensorParams {
        SensorParams::new(1.0, 1.0, 10.0).unwrap()
    }

    #[test]
    fn probabilities_at_start_and_long_time() {
        let n = PhenomNoise::new(300.0, 200.0).unwrap();
        let p0 = noisy_probs(&params(), &n, 0.0);
        assert_eq!(p0.values, vec![1.0, 0.0, 0.0]);
        let late = noisy_probs(&params(), &n, 1e5);
        for (got, want) in late.values.iter().zip([0.25, 0.25, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_limit_recovers_ideal_fisher() {
        let p = params();
        for t in [0.5, 3.0, 10.0] {
            let f = noise_factor(&p, &PhenomNoise::none(), t);
            assert!((f - 1.0).abs() < 1e-12);
            assert!((cfi_noisy_closed(&p, &PhenomNoise::none(), t) - cfi_closed(&p, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn fisher_zeros_at_half_periods() {
        let p = params();
        let n = PhenomNoise::new(300.0, 200.0).unwrap();
        let a = p.coupling_scale();
        for k in 1..20 {
            let t = k as f64 * PI / (2.0 * a * p.g);
            assert!(cfi_noisy_closed(&p, &n, t) < 1e-10);
        }
        assert_eq!(cfi_noisy_closed(&p, &n, 0.0), 0.0);
    }

    #[test]
    fn dephasing_only_factor() {
        let p = params();
        let n = PhenomNoise { t1: f64::INFINITY, t2: 40.0 };
        let t = 7.3;
        let phase = 2.0 * p.coupling_scale() * t;
        let f2 = n.f2(t);
        let want = f2 * f2 * phase.sin().powi(2) / (1.0 - f2 * f2 * phase.cos().powi(2));
        assert!((noise_factor(&p, &n, t) - want).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_positive_timescales() {
        assert!(PhenomNoise::new(0.0, 1.0).is_err());
        assert!(PhenomNoise::new(1.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(t in 0.0f64..1000.0, t1 in 1.0f64..1000.0, t2 in 1.0f64..1000.0) {
            let n = PhenomNoise::new(t1, t2).unwrap();
            let pv = noisy_probs(&params(), &n, t);
            prop_assert!((pv.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(pv.values.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn noise_never_adds_information(t in 0.01f64..500.0, t1 in 1.0f64..1000.0, t2 in 1.0f64..1000.0, b in 0.1f64..2.0) {
            let p = params().with_b(b);
            let n = PhenomNoise::new(t1, t2).unwrap();
            prop_assert!(cfi_noisy_closed(&p, &n, t) <= cfi_closed(&p, t) * (1.0 + 1e-12));
        }

        #[test]
        fn closed_form_matches_definition(t in 0.1f64..300.0, t1 in 10.0f64..1000.0, t2 in 10.0f64..1000.0, b in 0.1f64..2.0) {
            let p = params().with_b(b);
            let n = PhenomNoise::new(t1, t2).unwrap();
            let closed = cfi_noisy_closed(&p, &n, t);
            let numeric = cfi_numeric(|bb, tt| noisy_probs(&p.with_b(bb), &n, tt), b, t, default_db(b)).unwrap();
            // Near the Fisher zeros both sides vanish; compare absolutely there.
            let scale = cfi_closed(&p, t).max(1e-300);
            prop_assert!((closed - numeric).abs() <= 1e-4 * closed.max(1e-6 * scale), "closed {} numeric {}", closed, numeric);
        }
    }
}
