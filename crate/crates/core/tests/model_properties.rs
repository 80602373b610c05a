use acsense::model::{
    bessel_j, effective_hamiltonian, effective_model, full_hamiltonian, pulsed_field_integral, PulseSequence,
    SensorParams,
};
use acsense::qla::herm_eig;
use proptest::prelude::*;

proptest! {
    #[test]
    fn j0_is_even(x in -30.0..30.0f64) {
        prop_assert_eq!(bessel_j(0, x).unwrap(), bessel_j(0, -x).unwrap());
    }

    #[test]
    fn effective_spectrum(g in 0.1..2.0f64, b in -2.0..2.0f64, phi in 0.0..6.3f64, k in 5.0..20.0f64) {
        let omega = k * g.max(b.abs()).max(0.1);
        let p = SensorParams::with_phase(g, b, omega, phi).unwrap();
        let m = effective_model(&p);
        let mut got = herm_eig(&effective_hamiltonian(&m, g)).unwrap().values;
        let mut want = vec![m.a * g, -m.a * g, g, -g];
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn resonant_integral_is_bounded(omega in 5.0..50.0f64, periods in 1usize..8, t in 0.0..20.0f64) {
        let p = SensorParams::new(1.0, 1.0, omega).unwrap();
        let seq = PulseSequence::periodic(periods as f64 * p.period() / 2.0, 25.0).unwrap();
        prop_assert!(seq.resonant(omega));
        let c = pulsed_field_integral(&p, &seq, t).unwrap();
        prop_assert!(c.abs() <= 1.0 / omega + 1e-12);
    }
}

/// Averages the lab-frame Hamiltonian over one field period (Simpson) and
/// compares its |00>/|11> element with the effective coupling A·g.
fn pair_sector_gap(omega: f64) -> f64 {
    let p = SensorParams::new(1.0, 1.0, omega).unwrap();
    let n = 400;
    let h = p.period() / n as f64;
    let mut avg = full_hamiltonian(&p, 0.0).get(0, 3) * 0.0;
    for k in 0..=n {
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        avg += full_hamiltonian(&p, k as f64 * h).get(0, 3) * (w * h / 3.0);
    }
    avg /= p.period();
    let eff = effective_hamiltonian(&effective_model(&p), p.g).get(0, 3);
    (avg - eff).norm()
}

#[test]
fn averaged_hamiltonian_approaches_effective() {
    let gaps: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|&w| pair_sector_gap(w)).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-3);
}
