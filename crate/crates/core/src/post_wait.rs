//! Backward-recursion lattice for the post-and-wait tactic.
//!
//! A buy order rests at `P_L = P0 - K S` for `N` quote changes. The bid moves
//! in full-spread steps. Above `P_L` the walk is unbiased; at `P_L` the order
//! fills with probability `q`, otherwise the quote ticks up. Unfilled orders
//! are liquidated at `P_M + b S` when the horizon is reached.
//!
//! Levels are indexed so that `P_M = P0 + M S`; at time `k` only levels of
//! the same parity as `k` in `[max(-k, -K), k]` are reachable.

use crate::domain::{SpreadMultiple, TacticParams};
use crate::error::{invalid, Error, Result};

/// Largest horizon the lattice accepts.
pub const MAX_HORIZON: u32 = 10_000;

/// First-order alpha bias on midpoint moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaModel {
    /// Probability that the next move repeats the previous direction.
    pub p_continue: f64,
}

impl AlphaModel {
    pub fn new(p_continue: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_continue) {
            return Err(invalid(
                "p_continue",
                format!("must lie in [0, 1], got {p_continue}"),
            ));
        }
        Ok(AlphaModel { p_continue })
    }

    pub fn unbiased() -> Self {
        AlphaModel { p_continue: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwtConfig {
    pub params: TacticParams,
    /// Posting depth `K` in spreads below the arrival bid.
    pub depth: u32,
    pub alpha: Option<AlphaModel>,
}

impl PwtConfig {
    pub fn new(params: TacticParams, depth: u32) -> Result<Self> {
        let cfg = PwtConfig {
            params,
            depth,
            alpha: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(self, alpha: AlphaModel) -> Self {
        PwtConfig {
            alpha: Some(alpha),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::domain::validate_params(self.params)?;
        if self.params.horizon > MAX_HORIZON {
            return Err(Error::HorizonTooLarge {
                got: self.params.horizon as u64,
                max: MAX_HORIZON as u64,
            });
        }
        if let Some(alpha) = self.alpha {
            AlphaModel::new(alpha.p_continue)?;
        }
        Ok(())
    }

    fn resting_level(&self) -> i64 {
        -(self.depth as i64)
    }
}

/// Reachable values of one lattice quantity, row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGrid {
    depth: u32,
    rows: Vec<LatticeRow>,
}

#[derive(Debug, Clone, PartialEq)]
struct LatticeRow {
    lowest: i64,
    values: Vec<f64>,
}

impl LatticeRow {
    fn get(&self, level: i64) -> Option<f64> {
        let offset = level - self.lowest;
        if offset < 0 || offset % 2 != 0 {
            return None;
        }
        self.values.get((offset / 2) as usize).copied()
    }
}

impl LatticeGrid {
    pub fn horizon(&self) -> u32 {
        (self.rows.len() - 1) as u32
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Value at `(time, level)`, or `None` for an unreachable state.
    pub fn get(&self, time: u32, level: i64) -> Option<f64> {
        self.rows.get(time as usize)?.get(level)
    }

    /// `(level, value)` pairs of the reachable states at `time`.
    pub fn row(&self, time: u32) -> impl Iterator<Item = (i64, f64)> + '_ {
        let row = &self.rows[time as usize];
        row.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (row.lowest + 2 * i as i64, v))
    }

    pub fn root(&self) -> f64 {
        self.rows[0].values[0]
    }
}

/// Lowest reachable level at `time`.
fn lowest_level(time: u32, depth: u32) -> i64 {
    let t = time as i64;
    let floor = (-t).max(-(depth as i64));
    if (floor - t).rem_euclid(2) != 0 {
        floor + 1
    } else {
        floor
    }
}

fn row_levels(time: u32, depth: u32) -> impl Iterator<Item = i64> {
    (lowest_level(time, depth)..=time as i64).step_by(2)
}

/// One lattice quantity: its value on unfilled terminal states and the
/// expected contribution booked by a fill at the resting level (including
/// the fill probability).
struct Payoff<F: Fn(i64) -> f64> {
    terminal: F,
    fill: f64,
}

/// Terminal liquidation price in spread units,
/// `theta(P_M + S - P_L) (P_M + bS) + theta(P_L - P_M) P_L`.
pub fn terminal_price(level: i64, depth: u32, b: f64) -> f64 {
    let resting = -(depth as i64);
    let mut price = 0.0;
    if level + 1 > resting {
        price += level as f64 + b;
    }
    if resting > level {
        price += resting as f64;
    }
    price
}

fn terminal_capture(level: i64, depth: u32, a: f64) -> f64 {
    if level + 1 > -(depth as i64) {
        -a
    } else {
        0.0
    }
}

fn terminal_row<F: Fn(i64) -> f64>(cfg: &PwtConfig, payoff: &Payoff<F>) -> LatticeRow {
    let n = cfg.params.horizon;
    let lowest = lowest_level(n, cfg.depth);
    debug_assert!(lowest >= cfg.resting_level());
    LatticeRow {
        lowest,
        values: row_levels(n, cfg.depth).map(&payoff.terminal).collect(),
    }
}

/// Backward recursion with the unbiased walk. Keeps every row only when
/// `keep` is set; otherwise memory stays linear in the horizon.
fn backward<F: Fn(i64) -> f64>(
    cfg: &PwtConfig,
    payoff: &Payoff<F>,
    keep: bool,
) -> (f64, Option<LatticeGrid>) {
    let q = cfg.params.q;
    let resting = cfg.resting_level();
    let mut next = terminal_row(cfg, payoff);
    let mut kept = Vec::new();

    for time in (0..cfg.params.horizon).rev() {
        let lowest = lowest_level(time, cfg.depth);
        let values = row_levels(time, cfg.depth)
            .map(|level| {
                let up = next.get(level + 1).expect("up-child is reachable");
                if level > resting {
                    let down = next.get(level - 1).expect("down-child is reachable");
                    (up + down) / 2.0
                } else {
                    payoff.fill + (1.0 - q) * up
                }
            })
            .collect();
        let row = LatticeRow { lowest, values };
        if keep {
            kept.push(std::mem::replace(&mut next, row));
        } else {
            next = row;
        }
    }

    let root = next.values[0];
    let grid = keep.then(|| {
        kept.push(next);
        kept.reverse();
        LatticeGrid {
            depth: cfg.depth,
            rows: kept,
        }
    });
    (root, grid)
}

/// Backward recursion on the walk augmented with the previous move
/// direction. The initial direction is up or down with weight 1/2.
fn backward_alpha<F: Fn(i64) -> f64>(cfg: &PwtConfig, payoff: &Payoff<F>, p_continue: f64) -> f64 {
    let q = cfg.params.q;
    let resting = cfg.resting_level();
    let terminal = terminal_row(cfg, payoff);
    // value given the previous move was up / down
    let mut next_up = terminal.clone();
    let mut next_dn = terminal;

    for time in (0..cfg.params.horizon).rev() {
        let lowest = lowest_level(time, cfg.depth);
        let mut up_vals = Vec::new();
        let mut dn_vals = Vec::new();
        for level in row_levels(time, cfg.depth) {
            let after_up = next_up.get(level + 1).expect("up-child is reachable");
            if level > resting {
                let after_dn = next_dn.get(level - 1).expect("down-child is reachable");
                up_vals.push(p_continue * after_up + (1.0 - p_continue) * after_dn);
                dn_vals.push((1.0 - p_continue) * after_up + p_continue * after_dn);
            } else {
                let v = payoff.fill + (1.0 - q) * after_up;
                up_vals.push(v);
                dn_vals.push(v);
            }
        }
        next_up = LatticeRow {
            lowest,
            values: up_vals,
        };
        next_dn = LatticeRow {
            lowest,
            values: dn_vals,
        };
    }
    0.5 * (next_up.values[0] + next_dn.values[0])
}

fn price_payoff(cfg: &PwtConfig) -> Payoff<impl Fn(i64) -> f64> {
    let (depth, b) = (cfg.depth, cfg.params.boundary.b());
    Payoff {
        terminal: move |m| terminal_price(m, depth, b),
        fill: cfg.params.q * cfg.resting_level() as f64,
    }
}

fn price_sq_payoff(cfg: &PwtConfig) -> Payoff<impl Fn(i64) -> f64> {
    let (depth, b) = (cfg.depth, cfg.params.boundary.b());
    let resting = cfg.resting_level() as f64;
    Payoff {
        terminal: move |m| terminal_price(m, depth, b).powi(2),
        fill: cfg.params.q * resting * resting,
    }
}

fn capture_payoff(cfg: &PwtConfig) -> Payoff<impl Fn(i64) -> f64> {
    let (depth, a) = (cfg.depth, cfg.params.boundary.a());
    let p = &cfg.params;
    Payoff {
        terminal: move |m| terminal_capture(m, depth, a),
        fill: 1.5 * p.q_up() - 0.5 * p.q_dn(),
    }
}

fn capture_sq_payoff(cfg: &PwtConfig) -> Payoff<impl Fn(i64) -> f64> {
    let (depth, a) = (cfg.depth, cfg.params.boundary.a());
    let p = &cfg.params;
    Payoff {
        terminal: move |m| terminal_capture(m, depth, a).powi(2),
        fill: 2.25 * p.q_up() + 0.25 * p.q_dn(),
    }
}

/// Expected shortfall factor `g_PWT = (P0 - <P_{0,0}>) / S`.
pub fn expected_shortfall_pwt(cfg: &PwtConfig) -> Result<SpreadMultiple> {
    cfg.validate()?;
    Ok(SpreadMultiple(-backward(cfg, &price_payoff(cfg), false).0))
}

/// Effective spread capture factor `h_PWT = <D_{0,0}> / S`.
pub fn spread_capture_pwt(cfg: &PwtConfig) -> Result<SpreadMultiple> {
    cfg.validate()?;
    Ok(SpreadMultiple(backward(cfg, &capture_payoff(cfg), false).0))
}

/// Full expected-price lattice `<P_{k,M}>` in spread units relative to `P0`.
pub fn price_lattice(cfg: &PwtConfig) -> Result<LatticeGrid> {
    cfg.validate()?;
    Ok(backward(cfg, &price_payoff(cfg), true)
        .1
        .expect("rows kept"))
}

/// Full expected spread-capture lattice `<D_{k,M}>` in spread units.
pub fn spread_capture_lattice(cfg: &PwtConfig) -> Result<LatticeGrid> {
    cfg.validate()?;
    Ok(backward(cfg, &capture_payoff(cfg), true)
        .1
        .expect("rows kept"))
}

/// Price improvement of the alpha-biased walk over the unbiased one,
/// `<P0> - <P0>_alpha`, in price units.
pub fn alpha_improvement(cfg: &PwtConfig) -> Result<f64> {
    cfg.validate()?;
    let alpha = cfg.alpha.ok_or(Error::MissingAlphaModel)?;
    let payoff = price_payoff(cfg);
    let base = backward_alpha(cfg, &payoff, AlphaModel::unbiased().p_continue);
    let biased = backward_alpha(cfg, &payoff, alpha.p_continue);
    Ok((base - biased) * cfg.params.spread)
}

/// Fill-time distribution by forward propagation of the state
/// probabilities. Entry `n < N` is the probability of a fill at quote `n`;
/// entry `N` is the unfilled mass.
pub fn fill_time_pmf_pwt(cfg: &PwtConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = cfg.params.horizon;
    let q = cfg.params.q;
    let resting = cfg.resting_level();
    let mut pmf = Vec::with_capacity(n as usize + 1);
    // mass[level - lowest]; the walk never goes below the resting level
    let lowest = resting.max(-(n as i64)) - 1;
    let width = (n as i64 - lowest + 2) as usize;
    let mut mass = vec![0.0; width];
    let idx = |level: i64| (level - lowest) as usize;
    mass[idx(0)] = 1.0;
    for time in 0..n {
        let mut next = vec![0.0; width];
        let mut filled = 0.0;
        for level in row_levels(time, cfg.depth) {
            let m = mass[idx(level)];
            if m == 0.0 {
                continue;
            }
            if level > resting {
                next[idx(level + 1)] += 0.5 * m;
                next[idx(level - 1)] += 0.5 * m;
            } else {
                filled += q * m;
                next[idx(level + 1)] += (1.0 - q) * m;
            }
        }
        pmf.push(filled);
        mass = next;
    }
    pmf.push(mass.iter().sum());
    Ok(pmf)
}

/// Everything the post-and-wait tactic exposes for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PwtReport {
    pub g: SpreadMultiple,
    pub h: SpreadMultiple,
    pub is_second_moment: f64,
    pub d_second_moment: f64,
    pub var_is: f64,
    pub var_d: f64,
    pub mean_wait: f64,
    pub fill_pmf: Vec<f64>,
    /// Present when the configuration carries an alpha model.
    pub alpha_improvement: Option<f64>,
}

pub fn evaluate(cfg: &PwtConfig) -> Result<PwtReport> {
    cfg.validate()?;
    let price = backward(cfg, &price_payoff(cfg), false).0;
    let price_sq = backward(cfg, &price_sq_payoff(cfg), false).0;
    let d = backward(cfg, &capture_payoff(cfg), false).0;
    let d_sq = backward(cfg, &capture_sq_payoff(cfg), false).0;
    let fill_pmf = fill_time_pmf_pwt(cfg)?;
    let mean_wait = fill_pmf.iter().enumerate().map(|(i, p)| i as f64 * p).sum();
    let alpha_improvement = match cfg.alpha {
        Some(_) => Some(alpha_improvement(cfg)?),
        None => None,
    };
    Ok(PwtReport {
        g: SpreadMultiple(-price),
        h: SpreadMultiple(d),
        is_second_moment: price_sq,
        d_second_moment: d_sq,
        var_is: (price_sq - price * price).max(0.0),
        var_d: (d_sq - d * d).max(0.0),
        mean_wait,
        fill_pmf,
        alpha_improvement,
    })
}
