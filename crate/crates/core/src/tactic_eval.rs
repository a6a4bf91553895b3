//! Cost-function layer comparing limit-order tactics.
//!
//! The total cost of a tactic is `C = -<IS> - rho <D0>`; adding a risk
//! penalty `lambda R(N)` yields an optimal termination horizon.

use crate::domain::{SpreadMultiple, TacticParams};
use crate::error::{invalid, Error, Result};
use crate::peg;
use crate::post_wait::{self, PwtConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    /// Weight on effective spread capture.
    pub rho: f64,
    /// Risk aversion.
    pub lambda: f64,
}

impl CostWeights {
    pub fn new(rho: f64, lambda: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(invalid("rho", format!("must be >= 0, got {rho}")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", format!("must be >= 0, got {lambda}")));
        }
        Ok(CostWeights { rho, lambda })
    }
}

/// `C = -g - rho h`, in spread units.
pub fn total_cost(g: SpreadMultiple, h: SpreadMultiple, w: &CostWeights) -> SpreadMultiple {
    SpreadMultiple(-g.0 - w.rho * h.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tactic {
    Peg,
    PostWait { depth: u32 },
}

impl Tactic {
    /// Shortfall and spread-capture factors `(g, h)`.
    pub fn evaluate(&self, p: &TacticParams) -> Result<(SpreadMultiple, SpreadMultiple)> {
        match *self {
            Tactic::Peg => {
                crate::domain::validate_params(*p)?;
                Ok((peg::expected_shortfall(p), peg::effective_spread_capture(p)))
            }
            Tactic::PostWait { depth } => {
                let cfg = PwtConfig::new(*p, depth)?;
                Ok((
                    post_wait::expected_shortfall_pwt(&cfg)?,
                    post_wait::spread_capture_pwt(&cfg)?,
                ))
            }
        }
    }

    /// Opportunity risk at horizon `n`: `N` for pegging, `sqrt(N)` for
    /// post-and-wait.
    pub fn risk(&self, n: u32) -> f64 {
        match self {
            Tactic::Peg => n as f64,
            Tactic::PostWait { .. } => (n as f64).sqrt(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Tactic::Peg => "PT".to_string(),
            Tactic::PostWait { depth } => format!("PWT_K{depth}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Termination {
    pub horizon: u32,
    /// `C + lambda R(N)` at the optimal horizon.
    pub cost: f64,
}

/// Scans `N = 0..=n_max` for the minimum of `C_N + lambda R(N)`; ties go to
/// the smaller horizon.
pub fn optimal_termination(
    tactic: Tactic,
    params: &TacticParams,
    w: &CostWeights,
    n_max: u32,
) -> Result<Termination> {
    let mut best: Option<Termination> = None;
    for n in 0..=n_max {
        let p = params.with_horizon(n);
        let (g, h) = tactic.evaluate(&p)?;
        let cost = total_cost(g, h, w).0 + w.lambda * tactic.risk(n);
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(Termination { horizon: n, cost });
        }
    }
    Ok(best.expect("at least N = 0 is scanned"))
}

/// Which curve quantity to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Shortfall,
    SpreadCapture,
    TotalCost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub q: f64,
    /// Asymmetry actually used at this `q`.
    pub q_a: f64,
    /// Set when `q_a` was clamped into `[-q, q]`.
    pub clamped: bool,
    pub g: f64,
    pub h: f64,
    pub cost: f64,
}

impl CurvePoint {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::Shortfall => self.g,
            Metric::SpreadCapture => self.h,
            Metric::TotalCost => self.cost,
        }
    }
}

/// A tactic evaluated over a grid of fill probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TacticCurve {
    pub tactic: Tactic,
    /// Template parameters; `q` is replaced by each grid value.
    pub base: TacticParams,
    pub weights: CostWeights,
    pub points: Vec<CurvePoint>,
}

/// Evaluates one tactic at probability `q`, clamping the template's `q_a`
/// into `[-q, q]` so the sweep can cover `q < q_a`.
pub fn evaluate_at(
    tactic: Tactic,
    base: &TacticParams,
    w: &CostWeights,
    q: f64,
) -> Result<CurvePoint> {
    let q_a = base.q_a.clamp(-q, q);
    let p = TacticParams { q, q_a, ..*base };
    let (g, h) = tactic.evaluate(&p)?;
    Ok(CurvePoint {
        q,
        q_a,
        clamped: q_a != base.q_a,
        g: g.0,
        h: h.0,
        cost: total_cost(g, h, w).0,
    })
}

pub fn build_curve(
    tactic: Tactic,
    base: &TacticParams,
    w: &CostWeights,
    q_grid: &[f64],
) -> Result<TacticCurve> {
    if q_grid.is_empty() {
        return Err(Error::EmptyGrid("q"));
    }
    if q_grid.windows(2).any(|w| w[1] <= w[0]) || q_grid.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(invalid(
            "q_grid",
            "must be strictly increasing inside (0, 1)",
        ));
    }
    let points = q_grid
        .iter()
        .map(|&q| evaluate_at(tactic, base, w, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(TacticCurve {
        tactic,
        base: *base,
        weights: *w,
        points,
    })
}

/// A sign change of `A - B` located between two grid nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub q_lo: f64,
    pub q_hi: f64,
    /// Bisection-refined crossing location.
    pub q: f64,
}

const ZERO_TOL: f64 = 1e-12;

fn sign(diff: f64, scale: f64) -> i8 {
    if diff.abs() <= ZERO_TOL * scale.abs().max(1.0) {
        0
    } else if diff > 0.0 {
        1
    } else {
        -1
    }
}

/// Locates the sign changes of `A - B` on the shared grid and refines each by
/// bisection on the underlying evaluators. Stretches where the curves
/// coincide do not count as crossings unless the sign flips across them.
pub fn crossing_points(a: &TacticCurve, b: &TacticCurve, metric: Metric) -> Result<Vec<Crossing>> {
    if a.points.len() != b.points.len() || a.points.iter().zip(&b.points).any(|(x, y)| x.q != y.q) {
        return Err(Error::GridMismatch);
    }
    let signs: Vec<(usize, i8)> = a
        .points
        .iter()
        .zip(&b.points)
        .enumerate()
        .map(|(i, (x, y))| {
            (
                i,
                sign(x.metric(metric) - y.metric(metric), x.metric(metric)),
            )
        })
        .filter(|&(_, s)| s != 0)
        .collect();

    let diff = |q: f64| -> Result<f64> {
        let x = evaluate_at(a.tactic, &a.base, &a.weights, q)?;
        let y = evaluate_at(b.tactic, &b.base, &b.weights, q)?;
        Ok(x.metric(metric) - y.metric(metric))
    };

    let mut out = Vec::new();
    for pair in signs.windows(2) {
        let ((i, si), (j, sj)) = (pair[0], pair[1]);
        if si == sj {
            continue;
        }
        let (mut lo, mut hi) = (a.points[i].q, a.points[j].q);
        let (q_lo, q_hi) = (lo, hi);
        let mut f_lo = diff(lo)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = diff(mid)?;
            if f_mid == 0.0 || hi - lo < 1e-12 {
                lo = mid;
                hi = mid;
                break;
            }
            if (f_mid > 0.0) == (f_lo > 0.0) {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        out.push(Crossing {
            q_lo,
            q_hi,
            q: 0.5 * (lo + hi),
        });
    }
    Ok(out)
}
