//! Sensor Hamiltonians, Bessel coefficients and the pulsed field integral.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{self, kron, on_first, on_second, ComplexMatrix, C64};

/// Ratio ω / max(g, b) above which the effective model is considered valid.
pub const HIGH_FREQUENCY_RATIO: f64 = 5.0;

const BESSEL_MAX_ARG: f64 = 30.0;
const BESSEL_SERIES_MAX_ARG: f64 = 8.0;
const BESSEL_TERM_CUTOFF: f64 = 1e-18;

/// Bessel function of the first kind, orders 0 and 1.
///
/// Uses the ascending power series for |x| <= 8 and Miller's backward
/// recurrence beyond that, where the alternating series loses digits to
/// cancellation.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if n > 1 {
        return Err(Error::UnsupportedOrder(n));
    }
    if !(x.abs() <= BESSEL_MAX_ARG) {
        return Err(Error::OutOfRange(x));
    }
    if x.abs() <= BESSEL_SERIES_MAX_ARG {
        Ok(bessel_series(n, x))
    } else {
        Ok(bessel_miller(n, x))
    }
}

fn bessel_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // k = 0 term: (x/2)^n / n!
    let mut term = if n == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() < BESSEL_TERM_CUTOFF {
            break;
        }
        k += 1.0;
    }
    sum
}

fn bessel_miller(n: u32, x: f64) -> f64 {
    let ax = x.abs();
    let top = 2 * ((ax as usize + 40) / 2);
    // Backward recurrence J_{k-1} = (2k/x) J_k − J_{k+1} from an arbitrary
    // seed, normalized with J_0 + 2 Σ J_{2k} = 1.
    let (mut above, mut cur) = (0.0_f64, 1e-30_f64);
    let mut even_sum = 2.0 * cur;
    let mut j1 = 0.0;
    for k in (1..=top).rev() {
        let below = 2.0 * k as f64 / ax * cur - above;
        above = cur;
        cur = below;
        let order = k - 1;
        if order == 1 {
            j1 = cur;
        } else if order > 0 && order % 2 == 0 {
            even_sum += 2.0 * cur;
        }
        if cur.abs() > 1e200 {
            cur *= 1e-200;
            above *= 1e-200;
            even_sum *= 1e-200;
            j1 *= 1e-200;
        }
    }
    let norm = cur + even_sum;
    match (n, x < 0.0) {
        (0, _) => cur / norm,
        (_, false) => j1 / norm,
        (_, true) => -j1 / norm,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// Qubit-qubit coupling strength.
    pub g: f64,
    /// Field amplitude.
    pub b: f64,
    /// Field angular frequency.
    pub omega: f64,
    /// Field phase in radians.
    pub phi: f64,
}

impl SensorParams {
    pub fn new(g: f64, b: f64, omega: f64) -> Result<Self> {
        Self::with_phase(g, b, omega, 0.0)
    }

    pub fn with_phase(g: f64, b: f64, omega: f64, phi: f64) -> Result<Self> {
        let p = Self { g, b, omega, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::Config(format!("omega must be positive, got {}", self.omega)));
        }
        if self.g == 0.0 || !self.g.is_finite() {
            return Err(Error::Config(format!("g must be non-zero, got {}", self.g)));
        }
        if !self.b.is_finite() || !self.phi.is_finite() {
            return Err(Error::Config("b and phi must be finite".into()));
        }
        Ok(())
    }

    pub fn high_frequency(&self) -> bool {
        self.omega >= HIGH_FREQUENCY_RATIO * self.g.abs().max(self.b.abs())
    }

    /// Field period 2π/ω.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Argument 4b/ω of the Bessel coefficients.
    pub fn bessel_argument(&self) -> f64 {
        4.0 * self.b / self.omega
    }

    /// A = J₀(4b/ω).
    pub fn coupling_scale(&self) -> f64 {
        bessel_j(0, self.bessel_argument()).expect("4b/omega within Bessel range")
    }

    pub fn with_b(&self, b: f64) -> Self {
        Self { b, ..*self }
    }
}

/// g σx⁽¹⁾σx⁽²⁾ without the coupling strength.
pub fn xx_coupling() -> ComplexMatrix {
    kron(&qla::sigma_x(), &qla::sigma_x()).expect("2x2 factors")
}

/// σz⁽¹⁾ + σz⁽²⁾.
pub fn collective_z() -> ComplexMatrix {
    &on_first(&qla::sigma_z()) + &on_second(&qla::sigma_z())
}

pub fn collective_x() -> ComplexMatrix {
    &on_first(&qla::sigma_x()) + &on_second(&qla::sigma_x())
}

pub fn collective_y() -> ComplexMatrix {
    &on_first(&qla::sigma_y()) + &on_second(&qla::sigma_y())
}

/// Lab-frame Hamiltonian g σxσx + b cos(ωt + φ)(σz⁽¹⁾ + σz⁽²⁾).
pub fn full_hamiltonian(p: &SensorParams, t: f64) -> ComplexMatrix {
    let field = p.b * (p.omega * t + p.phi).cos();
    &(&xx_coupling() * p.g) + &(&collective_z() * field)
}

/// Effective time-independent model in the frame of the field.
#[derive(Clone, Debug)]
pub struct EffectiveModel {
    /// A = J₀(4b/ω).
    pub a: f64,
    /// Dressing phase Φ = 4b sin φ / ω.
    pub phase: f64,
    pub g: f64,
    /// Eigenvalues Ag, −Ag, g, −g.
    pub eigenvalues: [f64; 4],
    /// Eigenstates matching `eigenvalues`.
    pub eigenstates: [Vec<C64>; 4],
    /// Set when the parameters are outside the high-frequency regime.
    pub warning: Option<String>,
}

pub fn effective_model(p: &SensorParams) -> EffectiveModel {
    let a = p.coupling_scale();
    let phase = 4.0 * p.b * p.phi.sin() / p.omega;
    let g = p.g;
    let s = FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let e = C64::from_polar(s, phase);
    let r = C64::new(s, 0.0);
    let eigenstates = [vec![r, z, z, e], vec![r, z, z, -e], vec![z, r, r, z], vec![z, r, -r, z]];
    let warning = (!p.high_frequency()).then(|| {
        format!(
            "omega = {} is below {}·max(|g|, |b|); the effective model may be inaccurate",
            p.omega, HIGH_FREQUENCY_RATIO
        )
    });
    EffectiveModel { a, phase, g, eigenvalues: [a * g, -a * g, g, -g], eigenstates, warning }
}

impl EffectiveModel {
    pub fn hamiltonian(&self) -> ComplexMatrix {
        effective_hamiltonian(self, self.g)
    }
}

/// g[A e^{−iΦ} σ+σ+ + A e^{iΦ} σ−σ− + σ+σ− + σ−σ+], which for Φ = 0 equals
/// (g/2)[(1 + A)σxσx + (1 − A)σyσy].
pub fn effective_hamiltonian(m: &EffectiveModel, g: f64) -> ComplexMatrix {
    let (sp, sm) = (qla::sigma_plus(), qla::sigma_minus());
    let pp = kron(&sp, &sp).expect("2x2");
    let mm = kron(&sm, &sm).expect("2x2");
    let pm = kron(&sp, &sm).expect("2x2");
    let mp = kron(&sm, &sp).expect("2x2");
    let da = C64::from_polar(m.a, -m.phase);
    let pair = &(&pp * da) + &(&mm * da.conj());
    let flip = &pm + &mp;
    &(&pair + &flip) * g
}

/// Times of instantaneous X and Z pulses applied to both qubits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    x_times: Vec<f64>,
    z_times: Vec<f64>,
}

fn check_increasing(times: &[f64], label: &str) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Config(format!("{label} pulse times must be finite and non-negative")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{label} pulse times must be strictly increasing")));
    }
    Ok(())
}

impl PulseSequence {
    pub fn new(x_times: Vec<f64>, z_times: Vec<f64>) -> Result<Self> {
        check_increasing(&x_times, "X")?;
        check_increasing(&z_times, "Z")?;
        Ok(Self { x_times, z_times })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// X pulses at nδt and Z pulses at (n + ½)δt, n = 1, 2, …, up to `t_end`.
    pub fn periodic(delta_t: f64, t_end: f64) -> Result<Self> {
        if !(delta_t > 0.0) {
            return Err(Error::Config(format!("pulse spacing must be positive, got {delta_t}")));
        }
        let mut x_times = Vec::new();
        let mut z_times = Vec::new();
        let mut n = 1u32;
        loop {
            let tx = n as f64 * delta_t;
            let tz = (n as f64 + 0.5) * delta_t;
            if tx <= t_end {
                x_times.push(tx);
            }
            if tz <= t_end {
                z_times.push(tz);
            }
            if tx > t_end {
                break;
            }
            n += 1;
        }
        Self::new(x_times, z_times)
    }

    pub fn x_times(&self) -> &[f64] {
        &self.x_times
    }

    pub fn z_times(&self) -> &[f64] {
        &self.z_times
    }

    pub fn is_empty(&self) -> bool {
        self.x_times.is_empty() && self.z_times.is_empty()
    }

    /// Number of X pulses strictly before `t`.
    pub fn x_count_before(&self, t: f64) -> usize {
        self.x_times.partition_point(|&tn| tn < t)
    }

    /// Toggling-frame sign s(t): +1 before the first X pulse, flipping at each.
    pub fn sign(&self, t: f64) -> f64 {
        if self.x_count_before(t).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// True when every ω·tₙ is an integer multiple of π (within 1e-9).
    pub fn resonant(&self, omega: f64) -> bool {
        self.x_times.iter().all(|&t| {
            let k = omega * t / PI;
            (k - k.round()).abs() * PI < 1e-9
        })
    }
}

fn check_pulsed_args(p: &SensorParams, t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    if p.phi != 0.0 {
        return Err(Error::Domain("the pulsed field integral assumes zero field phase".into()));
    }
    Ok(())
}

fn pulse_boundary_sum(p: &SensorParams, seq: &PulseSequence, t: f64) -> (f64, usize) {
    let n = seq.x_count_before(t);
    let sum: f64 = seq.x_times[..n]
        .iter()
        .enumerate()
        .map(|(k, &tn)| {
            // k = 0 is pulse 1 (odd).
            let sign = if k % 2 == 0 { 2.0 } else { -2.0 };
            sign * (p.omega * tn).sin() / p.omega
        })
        .sum();
    (sum, n)
}

/// C(t) = ∫₀ᵗ s(t′) cos(ωt′) dt′ for the X pulses of `seq`.
pub fn pulsed_field_integral(p: &SensorParams, seq: &PulseSequence, t: f64) -> Result<f64> {
    check_pulsed_args(p, t)?;
    let (sum, n) = pulse_boundary_sum(p, seq, t);
    let tail = if n % 2 == 0 { 1.0 } else { -1.0 } * (p.omega * t).sin() / p.omega;
    Ok(sum + tail)
}

/// Pulse-induced phase φ_p(b, t) = b·(C(t) − (−1)^N sin(ωt)/ω).
pub fn pulse_phase(p: &SensorParams, seq: &PulseSequence, t: f64) -> Result<f64> {
    check_pulsed_args(p, t)?;
    Ok(p.b * pulse_boundary_sum(p, seq, t).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::herm_eig;

    /// J_n(x) = (1/π)∫₀^π cos(nτ − x sin τ) dτ by the trapezoid rule
    /// (spectrally accurate for this periodic integrand).
    fn bessel_quadrature(n: u32, x: f64) -> f64 {
        let m = 400;
        let h = PI / m as f64;
        let f = |tau: f64| (n as f64 * tau - x * tau.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for k in 1..m {
            s += f(k as f64 * h);
        }
        s * h / PI
    }

    fn params() -> SensorParams {
        SensorParams::new(1.0, 1.0, 10.0).unwrap()
    }

    #[test]
    fn bessel_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn bessel_small_argument_values() {
        // Frozen from the quadrature oracle above.
        let j0 = bessel_quadrature(0, 0.4);
        let j1 = bessel_quadrature(1, 0.4);
        assert!((j0 - 0.960_398_226_659_563).abs() < 1e-14);
        assert!((j1 - 0.196_026_577_955_319).abs() < 1e-14);
        assert!((bessel_j(0, 0.4).unwrap() - 0.960_398_226_659_563).abs() < 1e-12);
        assert!((bessel_j(1, 0.4).unwrap() - 0.196_026_577_955_319).abs() < 1e-12);
    }

    #[test]
    fn bessel_matches_quadrature_across_range() {
        for i in 0..=120 {
            let x = -30.0 + 0.5 * i as f64;
            for n in 0..2 {
                let got = bessel_j(n, x).unwrap();
                let want = bessel_quadrature(n, x);
                assert!((got - want).abs() < 1e-12, "J{n}({x}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn bessel_errors() {
        assert_eq!(bessel_j(2, 0.1), Err(Error::UnsupportedOrder(2)));
        assert!(matches!(bessel_j(0, 31.0), Err(Error::OutOfRange(_))));
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn sensor_params_validation() {
        assert!(SensorParams::new(1.0, 1.0, 0.0).is_err());
        assert!(SensorParams::new(0.0, 1.0, 10.0).is_err());
        assert!(params().high_frequency());
        assert!(!SensorParams::new(1.0, 3.0, 10.0).unwrap().high_frequency());
    }

    #[test]
    fn full_hamiltonian_at_t0() {
        let h = full_hamiltonian(&params(), 0.0);
        let diag: Vec<f64> = (0..4).map(|k| h.get(k, k).re).collect();
        assert_eq!(diag, vec![2.0, 0.0, 0.0, -2.0]);
        for r in 0..4 {
            assert_eq!(h.get(r, 3 - r).re, 1.0);
        }
        assert!(h.is_hermitian());
    }

    #[test]
    fn full_hamiltonian_field_node_and_zero_field() {
        let p = params();
        let t = (PI / 2.0) / p.omega;
        let h = full_hamiltonian(&p, t);
        assert!(h.max_abs_diff(&xx_coupling()) < 1e-15);
        let p0 = p.with_b(0.0);
        for t in [0.0, 0.3, 7.1] {
            assert_eq!(full_hamiltonian(&p0, t), xx_coupling());
        }
    }

    #[test]
    fn effective_model_values() {
        let m = effective_model(&params());
        assert!((m.a - 0.960_398_226_659_563).abs() < 1e-12);
        assert_eq!(m.phase, 0.0);
        assert!(m.warning.is_none());
        let eig = herm_eig(&m.hamiltonian()).unwrap();
        let want = [-1.0, -m.a, m.a, 1.0];
        for (got, w) in eig.values.iter().zip(want) {
            assert!((got - w).abs() < 1e-10);
        }
    }

    #[test]
    fn effective_model_zero_field() {
        let m = effective_model(&params().with_b(0.0));
        assert_eq!(m.a, 1.0);
        assert!(m.hamiltonian().max_abs_diff(&xx_coupling()) < 1e-15);
        let eig = herm_eig(&m.hamiltonian()).unwrap();
        for (got, w) in eig.values.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - w).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_model_warns_outside_regime() {
        let m = effective_model(&SensorParams::new(1.0, 1.0, 3.0).unwrap());
        assert!(m.warning.is_some());
    }

    #[test]
    fn effective_model_eigenstates_with_phase() {
        let p = SensorParams::with_phase(1.0, 1.0, 10.0, 30f64.to_radians()).unwrap();
        let m = effective_model(&p);
        assert!((m.phase - 0.2).abs() < 1e-15);
        assert_eq!(m.a, effective_model(&params()).a);
        let h = m.hamiltonian();
        for (k, v) in m.eigenstates.iter().enumerate() {
            let hv = h.apply(v);
            for (x, y) in hv.iter().zip(v) {
                assert!((x - y * m.eigenvalues[k]).norm() < 1e-12);
            }
            for w in &m.eigenstates[..k] {
                assert!(qla::inner(w, v).norm() < 1e-12);
            }
            assert!((qla::vec_norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn effective_hamiltonian_special_cases() {
        let mut m = effective_model(&params());
        assert!((m.hamiltonian().get(3, 0).re - 0.960_398_226_659_563).abs() < 1e-12);
        m.a = 0.0;
        let h = m.hamiltonian();
        let xy = &(&xx_coupling() + &kron(&qla::sigma_y(), &qla::sigma_y()).unwrap()) * 0.5;
        assert!(h.max_abs_diff(&xy) < 1e-15);
        let out = h.apply(&qla::basis(4, 0));
        assert!(qla::vec_norm(&out) < 1e-15);
    }

    #[test]
    fn pulse_sequence_validation_and_sign() {
        assert!(PulseSequence::new(vec![1.0, 1.0], vec![]).is_err());
        assert!(PulseSequence::new(vec![-1.0], vec![]).is_err());
        let seq = PulseSequence::new(vec![1.0, 2.0], vec![]).unwrap();
        assert_eq!(seq.sign(0.5), 1.0);
        assert_eq!(seq.sign(1.5), -1.0);
        assert_eq!(seq.sign(2.5), 1.0);
    }

    #[test]
    fn periodic_sequence_is_resonant() {
        let p = params();
        let seq = PulseSequence::periodic(2.0 * PI / p.omega, 20.0).unwrap();
        assert!(seq.resonant(p.omega));
        assert_eq!(seq.x_times().len(), 31);
        assert!(!PulseSequence::new(vec![0.1], vec![]).unwrap().resonant(p.omega));
    }

    #[test]
    fn pulsed_integral_without_pulses() {
        let p = params();
        let seq = PulseSequence::empty();
        for t in [0.0, 0.37, 5.0] {
            let c = pulsed_field_integral(&p, &seq, t).unwrap();
            assert!((c - (p.omega * t).sin() / p.omega).abs() < 1e-15);
        }
    }

    #[test]
    fn pulsed_integral_resonant_sequence() {
        let p = params();
        let seq = PulseSequence::periodic(PI / p.omega, 10.0).unwrap();
        for i in 0..200 {
            let t = 0.05 * i as f64;
            let c = pulsed_field_integral(&p, &seq, t).unwrap();
            assert!(pulse_phase(&p, &seq, t).unwrap().abs() < 1e-12);
            assert!((c.abs() - (p.omega * t).sin().abs() / p.omega).abs() < 1e-12);
        }
    }

    #[test]
    fn pulsed_integral_single_pulse_matches_quadrature() {
        let p = params();
        let t1 = (PI / 2.0) / p.omega;
        let seq = PulseSequence::new(vec![t1], vec![]).unwrap();
        let t = PI / p.omega;
        // Simpson quadrature of s(t′)cos(ωt′) split at the pulse.
        let simpson = |a: f64, b: f64, sign: f64| {
            let n = 2000;
            let h = (b - a) / n as f64;
            let f = |x: f64| sign * (p.omega * x).cos();
            let mut s = f(a) + f(b);
            for k in 1..n {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let oracle = simpson(0.0, t1, 1.0) + simpson(t1, t, -1.0);
        let c = pulsed_field_integral(&p, &seq, t).unwrap();
        assert!((c - oracle).abs() < 1e-12);
        assert!((c - 2.0 / p.omega).abs() < 1e-12);
    }

    #[test]
    fn pulsed_integral_domain_errors() {
        let p = params();
        let seq = PulseSequence::empty();
        assert!(matches!(pulsed_field_integral(&p, &seq, -1.0), Err(Error::Domain(_))));
        let phased = SensorParams::with_phase(1.0, 1.0, 10.0, 0.3).unwrap();
        assert!(matches!(pulsed_field_integral(&phased, &seq, 1.0), Err(Error::Domain(_))));
    }
}
