//! Closed-form evaluator for the pegging tactic.
//!
//! The order is pegged to the bid. Every quote change without a fill moves the
//! bid (and the order) up one spread; after `N` quote changes the residual is
//! liquidated at `P0 + (N + b) S`. Expected values solve the backward
//! recursion `P_k = q (P0 + k S) + (1 - q) P_{k+1}` in closed form.

use crate::domain::{SpreadMultiple, TacticParams};

/// `(1 - q)^n`, the probability of surviving `n` quotes unfilled.
#[inline]
pub(crate) fn survival(q: f64, n: u32) -> f64 {
    let miss = 1.0 - q;
    match i32::try_from(n) {
        Ok(n) => miss.powi(n),
        Err(_) => miss.powf(n as f64),
    }
}

/// Expected implementation shortfall factor `g_PT`; `<IS> = g_PT * S`.
pub fn expected_shortfall(p: &TacticParams) -> SpreadMultiple {
    let q = p.q;
    let b = p.boundary.b();
    let s = survival(q, p.horizon);
    SpreadMultiple(-(1.0 - q + s * ((1.0 + b) * q - 1.0)) / q)
}

/// Infinite-horizon limit `-(1/q - 1)`, independent of the boundary.
pub fn expected_shortfall_infinite(q: f64) -> SpreadMultiple {
    SpreadMultiple(-(1.0 / q - 1.0))
}

/// Distribution of the execution time: entry `n < N` is `q (1-q)^n`, the
/// last entry is the survival mass `(1-q)^N` liquidated at the horizon.
pub fn fill_time_pmf(q: f64, horizon: u32) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(horizon as usize + 1);
    let mut alive = 1.0;
    for _ in 0..horizon {
        pmf.push(q * alive);
        alive *= 1.0 - q;
    }
    pmf.push(alive);
    pmf
}

/// Expected waiting time in quote changes, `(1-q)(1-(1-q)^N)/q`.
pub fn mean_wait(q: f64, horizon: u32) -> f64 {
    (1.0 - q) * (1.0 - survival(q, horizon)) / q
}

/// Raw second moment `<IS^2> / S^2`.
pub fn shortfall_second_moment(p: &TacticParams) -> f64 {
    let q = p.q;
    let b = p.boundary.b();
    let n = p.horizon as f64;
    let s = survival(q, p.horizon);
    let tail = -2.0 + q * (3.0 - 2.0 * n + (1.0 + b) * (-1.0 + b + 2.0 * n) * q);
    (2.0 - 3.0 * q + q * q + s * tail) / (q * q)
}

/// Effective spread capture factor `h_PT`; `<D0> = h_PT * S`.
///
/// A fill before an up-tick captures `3S/2`, before a down-tick `-S/2`; the
/// terminal liquidation books `-aS`.
pub fn effective_spread_capture(p: &TacticParams) -> SpreadMultiple {
    let q = p.q;
    let a = p.boundary.a();
    let s = survival(q, p.horizon);
    SpreadMultiple((q - 2.0 * p.q_a - s * ((1.0 + 2.0 * a) * q - 2.0 * p.q_a)) / (2.0 * q))
}

/// Infinite-horizon spread capture `(1 - 2 q_a / q) / 2`. Negative exactly
/// when `q_dn > 3 q_up`.
pub fn effective_spread_capture_infinite(q: f64, q_a: f64) -> SpreadMultiple {
    SpreadMultiple(0.5 * (1.0 - 2.0 * q_a / q))
}

/// Raw second moment `<D0^2> / S^2`.
pub fn spread_capture_second_moment(p: &TacticParams) -> f64 {
    let q = p.q;
    let a = p.boundary.a();
    let s = survival(q, p.horizon);
    (5.0 * q - 4.0 * p.q_a + s * ((4.0 * a * a - 5.0) * q + 4.0 * p.q_a)) / (4.0 * q)
}

/// Pair efficiency implied by the model at certain execution, `1 - 2 q_a`.
pub fn pair_efficiency_delta(q_a: f64) -> f64 {
    1.0 - 2.0 * q_a
}

/// Everything the pegging tactic exposes for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct PegReport {
    pub g: SpreadMultiple,
    pub h: SpreadMultiple,
    /// `<IS^2> / S^2`
    pub is_second_moment: f64,
    /// `<D0^2> / S^2`
    pub d_second_moment: f64,
    pub var_is: f64,
    pub var_d: f64,
    pub mean_wait: f64,
    pub fill_pmf: Vec<f64>,
    pub horizon: u32,
}

impl PegReport {
    /// Rough number of executions the tactic can achieve within the horizon,
    /// `N / <T>_N`. `None` when fills are immediate (`<T> = 0`).
    pub fn expected_executions(&self) -> Option<f64> {
        (self.mean_wait > 0.0).then(|| self.horizon as f64 / self.mean_wait)
    }
}

pub fn evaluate(p: &TacticParams) -> PegReport {
    let g = expected_shortfall(p);
    let h = effective_spread_capture(p);
    let is2 = shortfall_second_moment(p);
    let d2 = spread_capture_second_moment(p);
    PegReport {
        g,
        h,
        is_second_moment: is2,
        d_second_moment: d2,
        var_is: (is2 - g.0 * g.0).max(0.0),
        var_d: (d2 - h.0 * h.0).max(0.0),
        mean_wait: mean_wait(p.q, p.horizon),
        fill_pmf: fill_time_pmf(p.q, p.horizon),
        horizon: p.horizon,
    }
}
