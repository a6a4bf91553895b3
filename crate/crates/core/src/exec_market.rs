//! Market-order execution cost under deterministic liquidity constraints.
//!
//! A schedule splits the order into equal blocks `rho_b` every `d` steps plus
//! a uniform residual rate `rho_u`. Block and uniform costs are additive.

use rayon::prelude::*;

use crate::domain::{ImpactSpec, KernelSpec, TradeSchedule};
use crate::error::{invalid, Error, Result};

/// Cost of an arbitrary schedule, `sum_k u_k sum_{k'<k} f(u_k') G(k - k')`.
pub fn schedule_cost(u: &TradeSchedule, impact: &ImpactSpec, kernel: &KernelSpec) -> f64 {
    let e = u.entries();
    let mut total = 0.0;
    for (i, &(k, v)) in e.iter().enumerate() {
        let mut price = 0.0;
        for &(kp, vp) in &e[..i] {
            price += impact.impact(vp) * kernel.weight(k - kp);
        }
        total += v * price;
    }
    total
}

/// Closed-form cost of `n_b` equal blocks every `d` steps under the
/// exponential kernel. `n_b` may be fractional; at most one block has no
/// cross-impact, so the cost is exactly zero there.
pub fn block_cost_exponential(
    rho_b: f64,
    d: f64,
    n_b: f64,
    impact: &ImpactSpec,
    g_e: f64,
    rho: f64,
) -> Result<f64> {
    let x = d * rho;
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::DegenerateExponent);
    }
    if n_b <= 1.0 {
        return Ok(0.0);
    }
    // N + e^x (1 - e^{-xN} - N), rearranged to avoid cancellation
    let num = -n_b * x.exp_m1() - x.exp() * (-x * n_b).exp_m1();
    let den = x.exp_m1().powi(2);
    Ok(-impact.zeta * rho_b.powf(impact.beta + 1.0) * g_e * num / den)
}

/// `sum_{m=1}^{ceil(n)-1} (n - m) m^{-gamma}`; the lag-weighted double sum for
/// integer `n`, linearly extended in `n` between integers.
fn power_lag_sum(n: f64, gamma: f64) -> f64 {
    if n <= 1.0 {
        return 0.0;
    }
    let top = n.ceil() as u64 - 1;
    (1..=top)
        .map(|m| (n - m as f64) * (m as f64).powf(-gamma))
        .sum()
}

/// Cost of `n_b` equal blocks every `d` steps under the power-law kernel.
pub fn block_cost_power(
    rho_b: f64,
    d: f64,
    n_b: f64,
    impact: &ImpactSpec,
    g_p: f64,
    gamma: f64,
) -> Result<f64> {
    if !(d >= 1.0) {
        return Err(invalid("d", format!("must be >= 1, got {d}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    Ok(impact.zeta
        * rho_b.powf(impact.beta + 1.0)
        * g_p
        * d.powf(-gamma)
        * power_lag_sum(n_b, gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformMode {
    /// Exact double sum over integer steps.
    Discrete,
    /// Double integral of a constant rate.
    Continuous,
}

/// Cost of trading `rho_u` every step for `n` steps.
pub fn uniform_cost(
    rho_u: f64,
    n: u64,
    impact: &ImpactSpec,
    kernel: &KernelSpec,
    mode: UniformMode,
) -> Result<f64> {
    if rho_u < 0.0 {
        return Err(invalid("rho_u", format!("must be >= 0, got {rho_u}")));
    }
    if rho_u == 0.0 {
        return Ok(0.0);
    }
    let scale = impact.zeta * rho_u.powf(impact.beta + 1.0);
    let nf = n as f64;
    let lag_sum = match (mode, *kernel) {
        (_, KernelSpec::Instantaneous) => 0.0,
        (UniformMode::Discrete, k) => (1..n).map(|l| (nf - l as f64) * k.weight(l)).sum(),
        (UniformMode::Continuous, KernelSpec::PowerLaw { g_p, gamma }) => {
            g_p * nf.powf(2.0 - gamma) / (2.0 - 3.0 * gamma + gamma * gamma)
        }
        (UniformMode::Continuous, KernelSpec::Exponential { g_e, rho }) => {
            g_e * (nf / rho + (-rho * nf).exp_m1() / (rho * rho))
        }
    };
    Ok(scale * lag_sum)
}

/// Order to execute and the market it trades in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecProblem {
    /// Total volume.
    pub x0: f64,
    /// Horizon in trade-time steps.
    pub horizon: u64,
    /// Per-trade liquidity cap.
    pub liquidity: f64,
    pub impact: ImpactSpec,
    /// Kernel seen by the block trades.
    pub kernel: KernelSpec,
    /// Kernel seen by the uniform residual.
    pub uniform_kernel: KernelSpec,
    pub uniform_mode: UniformMode,
    /// Minimum delay between blocks under the instantaneous kernel.
    pub d_min: u64,
}

impl ExecProblem {
    pub fn new(
        x0: f64,
        horizon: u64,
        liquidity: f64,
        impact: ImpactSpec,
        kernel: KernelSpec,
        uniform_kernel: KernelSpec,
        d_min: u64,
    ) -> Result<Self> {
        let p = ExecProblem {
            x0,
            horizon,
            liquidity,
            impact,
            kernel,
            uniform_kernel,
            uniform_mode: UniformMode::Continuous,
            d_min,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_uniform_mode(self, mode: UniformMode) -> Self {
        ExecProblem {
            uniform_mode: mode,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x0.is_finite() && self.x0 > 0.0) {
            return Err(invalid("X0", format!("must be > 0, got {}", self.x0)));
        }
        if self.horizon < 2 {
            return Err(invalid("T", format!("must be >= 2, got {}", self.horizon)));
        }
        if !(self.liquidity.is_finite() && self.liquidity > 0.0) {
            return Err(invalid("L", format!("must be > 0, got {}", self.liquidity)));
        }
        if self.d_min < 1 {
            return Err(invalid("d_min", "must be >= 1"));
        }
        self.impact.validate()?;
        self.kernel.validate()?;
        self.uniform_kernel.validate()?;
        if self.uniform_mode == UniformMode::Continuous
            && matches!(self.uniform_kernel, KernelSpec::PowerLaw { gamma, .. } if gamma >= 1.0)
        {
            return Err(invalid("gamma", "continuous uniform cost needs gamma < 1"));
        }
        Ok(())
    }

    /// Cost of the uniform residual at rate `rho_u` over the horizon.
    pub fn uniform_cost(&self, rho_u: f64) -> Result<f64> {
        uniform_cost(
            rho_u,
            self.horizon,
            &self.impact,
            &self.uniform_kernel,
            self.uniform_mode,
        )
    }

    /// Cost of `n_b` blocks of `rho_b` every `d` steps.
    pub fn block_cost(&self, rho_b: f64, d: f64, n_b: f64) -> Result<f64> {
        match self.kernel {
            KernelSpec::Instantaneous => Ok(0.0),
            KernelSpec::Exponential { g_e, rho } => {
                block_cost_exponential(rho_b, d, n_b, &self.impact, g_e, rho)
            }
            KernelSpec::PowerLaw { g_p, gamma } => {
                block_cost_power(rho_b, d, n_b, &self.impact, g_p, gamma)
            }
        }
    }

    /// Plan and total cost for block size `rho_b` at delay `d`, with
    /// `N_b = T/d`, `X_b = rho_b N_b` and the remainder traded uniformly.
    pub fn evaluate(&self, rho_b: f64, d: f64) -> Result<(BlockPlan, f64)> {
        let n_b = self.horizon as f64 / d;
        let x_b = rho_b * n_b;
        let rho_u = ((self.x0 - x_b) / self.horizon as f64).max(0.0);
        let plan = BlockPlan {
            rho_b,
            d,
            n_b,
            rho_u,
            x_b,
            x_u: self.x0 - x_b,
        };
        let cost = self.block_cost(rho_b, d, n_b)? + self.uniform_cost(rho_u)?;
        Ok((plan, cost))
    }
}

/// Block-plus-uniform split of an order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockPlan {
    pub rho_b: f64,
    /// Delay between blocks, in steps.
    pub d: f64,
    /// Number of blocks; fractional when `d` does not divide `T`.
    pub n_b: f64,
    pub rho_u: f64,
    pub x_b: f64,
    pub x_u: f64,
}

impl BlockPlan {
    /// Whether the unsimplified cap `rho_b + rho_u <= L` holds.
    pub fn within_full_cap(&self, liquidity: f64) -> bool {
        self.rho_b + self.rho_u <= liquidity * (1.0 + 1e-12)
    }
}

/// Scheduling rule for the instantaneous kernel.
///
/// If blocks of `L` every `d_min` steps could carry more than `X0`, the delay
/// is stretched so they carry exactly `X0`; otherwise blocks run at `d_min`
/// and the remainder is traded uniformly. An order no larger than `L` is a
/// single block spanning the horizon.
pub fn schedule_instantaneous(prob: &ExecProblem) -> BlockPlan {
    let t = prob.horizon as f64;
    let l = prob.liquidity;
    let x0 = prob.x0;
    if x0 <= l {
        return BlockPlan {
            rho_b: x0,
            d: t,
            n_b: 1.0,
            rho_u: 0.0,
            x_b: x0,
            x_u: 0.0,
        };
    }
    let x_tilde = l * t / prob.d_min as f64;
    if x_tilde > x0 {
        let d = prob.d_min as f64 * x_tilde / x0;
        let rho_b = d * x0 / t;
        BlockPlan {
            rho_b,
            d,
            n_b: t / d,
            rho_u: 0.0,
            x_b: x0,
            x_u: 0.0,
        }
    } else {
        let d = prob.d_min as f64;
        let rho_b = x0.min(l);
        let x_b = l * t / d;
        BlockPlan {
            rho_b,
            d,
            n_b: t / d,
            rho_u: (x0 - x_b).max(0.0) / t,
            x_b,
            x_u: x0 - x_b,
        }
    }
}

/// Best block size at one delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub d: u64,
    pub plan: BlockPlan,
    pub cost: f64,
    /// Whether `rho_b + rho_u <= L` also holds at this point.
    pub full_cap_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetOptimum {
    pub plan: BlockPlan,
    pub cost: f64,
    /// One entry per grid delay, in grid order.
    pub surface: Vec<SurfacePoint>,
}

const COARSE_POINTS: usize = 64;
const GOLDEN_ITERS: usize = 200;

/// Minimizes the cost over `rho_b` in `[0, min(L, X0 d / T)]` at fixed `d`.
/// The cost is convex in `rho_b`, so a coarse scan brackets the minimum and
/// golden-section search refines it; both interval ends are always tried.
fn best_block_size(prob: &ExecProblem, d: u64) -> Result<SurfacePoint> {
    let df = d as f64;
    let hi = prob.liquidity.min(prob.x0 * df / prob.horizon as f64);
    let cost_at = |r: f64| prob.evaluate(r, df).map(|x| x.1);

    let step = hi / COARSE_POINTS as f64;
    let mut best_i = 0;
    let mut best_c = f64::INFINITY;
    for i in 0..=COARSE_POINTS {
        let c = cost_at(step * i as f64)?;
        if c < best_c {
            best_c = c;
            best_i = i;
        }
    }
    let mut a = step * best_i.saturating_sub(1) as f64;
    let mut b = (step * (best_i + 1) as f64).min(hi);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = cost_at(x1)?;
    let mut f2 = cost_at(x2)?;
    for _ in 0..GOLDEN_ITERS {
        if b - a <= 1e-12 * hi.max(1.0) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = cost_at(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = cost_at(x2)?;
        }
    }
    let mut best = (0.5 * (a + b), cost_at(0.5 * (a + b))?);
    for r in [0.0, hi, step * best_i as f64] {
        let c = cost_at(r)?;
        if c < best.1 || (c == best.1 && r < best.0) {
            best = (r, c);
        }
    }
    let (plan, cost) = prob.evaluate(best.0, df)?;
    Ok(SurfacePoint {
        d,
        plan,
        cost,
        full_cap_ok: plan.within_full_cap(prob.liquidity),
    })
}

/// Grid search over integer delays with a block-size search at each.
/// Ties go to the smaller delay. Under the instantaneous kernel the returned
/// plan follows [`schedule_instantaneous`]; the surface is still reported.
pub fn optimize_deterministic(prob: &ExecProblem, d_grid: &[u64]) -> Result<DetOptimum> {
    prob.validate()?;
    if d_grid.is_empty() {
        return Err(Error::EmptyGrid("d"));
    }
    if let Some(&d) = d_grid.iter().find(|&&d| d < 1 || d > prob.horizon) {
        return Err(invalid("d_grid", format!("delay {d} outside [1, T]")));
    }
    if prob.x0 > prob.liquidity * prob.horizon as f64 {
        return Err(Error::InfeasibleProblem(format!(
            "X0={} exceeds L*T={}",
            prob.x0,
            prob.liquidity * prob.horizon as f64
        )));
    }
    let surface = d_grid
        .par_iter()
        .map(|&d| best_block_size(prob, d))
        .collect::<Result<Vec<_>>>()?;

    if matches!(prob.kernel, KernelSpec::Instantaneous) {
        let plan = schedule_instantaneous(prob);
        let cost = prob.uniform_cost(plan.rho_u)?;
        return Ok(DetOptimum {
            plan,
            cost,
            surface,
        });
    }

    let mut best = surface[0];
    for p in &surface[1..] {
        if p.cost < best.cost || (p.cost == best.cost && p.d < best.d) {
            best = *p;
        }
    }
    Ok(DetOptimum {
        plan: best.plan,
        cost: best.cost,
        surface,
    })
}
