//! Joint least-squares fit of the relaxation/dephasing envelope to p₊₁ and
//! p₋₁ records.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::model::EffectiveModel;

/// Fitted timescales above this are reported as "no decay".
pub const NO_DECAY_THRESHOLD: f64 = 1e6;
pub const FIT_GRID_MIN: f64 = 1.0;
pub const FIT_GRID_MAX: f64 = 1e4;
const STARTS_PER_AXIS: usize = 5;
const MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayFit {
    Decaying {
        t1: f64,
        t2: f64,
        residual: f64,
    },
    /// At least one timescale ran past [`NO_DECAY_THRESHOLD`].
    NoDecay {
        residual: f64,
    },
}

impl DecayFit {
    pub fn timescales(&self) -> Option<(f64, f64)> {
        match *self {
            DecayFit::Decaying { t1, t2, .. } => Some((t1, t2)),
            DecayFit::NoDecay { .. } => None,
        }
    }

    pub fn residual(&self) -> f64 {
        match *self {
            DecayFit::Decaying { residual, .. } | DecayFit::NoDecay { residual } => residual,
        }
    }
}

/// ½(1 + e^{−t/T1}) · ½(1 ± e^{−t/T2} cos 2Agt), `sign` = ±1.
pub fn decay_model(t: f64, t1: f64, t2: f64, ag: f64, sign: f64) -> f64 {
    0.25 * (1.0 + (-t / t1).exp()) * (1.0 + sign * (-t / t2).exp() * (2.0 * ag * t).cos())
}

struct Problem<'a> {
    times: &'a [f64],
    plus: &'a [f64],
    minus: &'a [f64],
    ag: f64,
}

impl Problem<'_> {
    /// Residuals and Jacobian with respect to the rates (1/T1, 1/T2).
    fn eval(&self, rates: [f64; 2], jac: Option<&mut Vec<[f64; 2]>>) -> Vec<f64> {
        let mut res = Vec::with_capacity(2 * self.times.len());
        let mut rows = Vec::new();
        for (sign, data) in [(1.0, self.plus), (-1.0, self.minus)] {
            for (&t, &y) in self.times.iter().zip(data) {
                let e1 = (-rates[0] * t).exp();
                let e2 = (-rates[1] * t).exp();
                let c = (2.0 * self.ag * t).cos();
                let shape = 1.0 + sign * e2 * c;
                res.push(0.25 * (1.0 + e1) * shape - y);
                rows.push([-0.25 * t * e1 * shape, -0.25 * (1.0 + e1) * sign * t * e2 * c]);
            }
        }
        if let Some(j) = jac {
            *j = rows;
        }
        res
    }

    fn cost(&self, rates: [f64; 2]) -> f64 {
        self.eval(rates, None).iter().map(|r| r * r).sum()
    }

    /// Levenberg–Marquardt with the rates projected onto [0, ∞).
    fn solve(&self, start: [f64; 2]) -> ([f64; 2], f64) {
        let mut x = start;
        let mut jac = Vec::new();
        let mut res = self.eval(x, Some(&mut jac));
        let mut cost: f64 = res.iter().map(|r| r * r).sum();
        let mut lambda = 1e-3;
        for _ in 0..MAX_ITER {
            let mut jtj = [[0.0; 2]; 2];
            let mut jtr = [0.0; 2];
            for (row, r) in jac.iter().zip(&res) {
                for i in 0..2 {
                    jtr[i] += row[i] * r;
                    for k in 0..2 {
                        jtj[i][k] += row[i] * row[k];
                    }
                }
            }
            let mut accepted = None;
            for _ in 0..30 {
                let a00 = jtj[0][0] + lambda * jtj[0][0].max(1e-30);
                let a11 = jtj[1][1] + lambda * jtj[1][1].max(1e-30);
                let a01 = jtj[0][1];
                let det = a00 * a11 - a01 * a01;
                if det.abs() < 1e-300 {
                    lambda *= 10.0;
                    continue;
                }
                let d0 = -(a11 * jtr[0] - a01 * jtr[1]) / det;
                let d1 = -(a00 * jtr[1] - a01 * jtr[0]) / det;
                let cand = [(x[0] + d0).max(0.0), (x[1] + d1).max(0.0)];
                let cand_cost = self.cost(cand);
                if cand_cost < cost {
                    accepted = Some((cand, cand_cost));
                    lambda = (lambda * 0.1).max(1e-15);
                    break;
                }
                lambda *= 10.0;
            }
            let Some((cand, cand_cost)) = accepted else { break };
            let step = (cand[0] - x[0]).abs() + (cand[1] - x[1]).abs();
            let gain = cost - cand_cost;
            x = cand;
            cost = cand_cost;
            res = self.eval(x, Some(&mut jac));
            if gain <= 1e-16 * cost || step <= 1e-15 * (x[0] + x[1]).max(1e-300) {
                break;
            }
        }
        (x, cost)
    }
}

/// Fits T1 and T2 jointly to p₊₁ and p₋₁ with A and g held fixed.
///
/// Levenberg–Marquardt is started from every point of a 5×5 log-spaced
/// (T1, T2) grid over [1, 10⁴]; the best final cost wins.
pub fn fit_decay_times(p_plus: &TimeSeries, p_minus: &TimeSeries, model: &EffectiveModel, g: f64) -> Result<DecayFit> {
    if p_plus.times != p_minus.times {
        return Err(Error::Config("p+1 and p-1 series must share sample times".into()));
    }
    if p_plus.len() < 3 {
        return Err(Error::Config("decay fit needs at least three samples".into()));
    }
    let ag = model.a * g;
    let span = p_plus.times.last().unwrap() - p_plus.times[0];
    if ag == 0.0 || span < PI / ag.abs() {
        return Err(Error::Config(format!(
            "fit window {span} is shorter than one period {} of cos(2Agt)",
            PI / ag.abs()
        )));
    }
    let problem = Problem { times: &p_plus.times, plus: &p_plus.values, minus: &p_minus.values, ag };
    let axis: Vec<f64> = (0..STARTS_PER_AXIS)
        .map(|k| {
            let f = k as f64 / (STARTS_PER_AXIS - 1) as f64;
            (FIT_GRID_MIN.ln() + f * (FIT_GRID_MAX.ln() - FIT_GRID_MIN.ln())).exp()
        })
        .collect();
    let mut best: Option<([f64; 2], f64)> = None;
    for &t1 in &axis {
        for &t2 in &axis {
            let (x, cost) = problem.solve([1.0 / t1, 1.0 / t2]);
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((x, cost));
            }
        }
    }
    let (rates, cost) = best.expect("at least one start");
    let residual = (cost / (2 * p_plus.len()) as f64).sqrt();
    let (t1, t2) = (1.0 / rates[0], 1.0 / rates[1]);
    if !(t1 <= NO_DECAY_THRESHOLD && t2 <= NO_DECAY_THRESHOLD) {
        return Ok(DecayFit::NoDecay { residual });
    }
    Ok(DecayFit::Decaying { t1, t2, residual })
}
