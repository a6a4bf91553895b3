//! Brute-force reference models for the limit-order tactics.
//!
//! Every path of the quote-time model is enumerated explicitly, tracking the
//! order's price level as state, and path statistics are probability-weighted.
//! Nothing here shares code with the closed forms or the lattice engine.
#![allow(dead_code)]

/// Probability-weighted path statistics, prices in spread units relative to
/// the arrival price.
#[derive(Debug, Clone)]
pub struct PathMoments {
    pub is1: f64,
    pub is2: f64,
    pub d1: f64,
    pub d2: f64,
    /// Index `n < N` is the probability of a fill at quote `n`; index `N` is
    /// the survival probability.
    pub pmf: Vec<f64>,
    pub mean_wait: f64,
    pub total_prob: f64,
}

impl PathMoments {
    fn new(horizon: usize) -> Self {
        PathMoments {
            is1: 0.0,
            is2: 0.0,
            d1: 0.0,
            d2: 0.0,
            pmf: vec![0.0; horizon + 1],
            mean_wait: 0.0,
            total_prob: 0.0,
        }
    }

    /// Books one completed path: execution `price`, effective capture `d`,
    /// and the quote index at which the path ended.
    fn book(&mut self, prob: f64, price: f64, d: f64, time: usize) {
        let is = -price;
        self.is1 += prob * is;
        self.is2 += prob * is * is;
        self.d1 += prob * d;
        self.d2 += prob * d * d;
        self.pmf[time] += prob;
        self.mean_wait += prob * time as f64;
        self.total_prob += prob;
    }
}

pub struct Model {
    pub q: f64,
    pub q_a: f64,
    pub b: f64,
    pub a: f64,
    pub horizon: usize,
}

impl Model {
    fn q_up(&self) -> f64 {
        (self.q - self.q_a) / 2.0
    }
    fn q_dn(&self) -> f64 {
        (self.q + self.q_a) / 2.0
    }
}

/// Pegging tactic: the order always sits at the current bid. A missed quote
/// moves the bid up one spread and the order follows it.
pub fn enumerate_peg(m: &Model) -> PathMoments {
    let mut out = PathMoments::new(m.horizon);
    // (time, bid, probability) stack of live paths
    let mut stack = vec![(0usize, 0.0f64, 1.0f64)];
    while let Some((t, bid, prob)) = stack.pop() {
        if t == m.horizon {
            out.book(prob, bid + m.b, -m.a, t);
            continue;
        }
        let mid = bid + 0.5;
        // filled, next midpoint one spread up
        out.book(prob * m.q_up(), bid, (mid + 1.0) - bid, t);
        // filled, next midpoint one spread down
        out.book(prob * m.q_dn(), bid, (mid - 1.0) - bid, t);
        stack.push((t + 1, bid + 1.0, prob * (1.0 - m.q)));
    }
    out
}

/// Post-and-wait tactic: the order rests at `-depth` spreads. Above that level
/// the bid is an unbiased +-1 walk; at that level the order fills with
/// probability `q`, otherwise the bid ticks up.
pub fn enumerate_post_wait(m: &Model, depth: i64) -> PathMoments {
    enumerate_post_wait_alpha(m, depth, 0.5).0
}

/// Same walk with a first-order alpha bias: the next move repeats the
/// previous one with probability `p_continue`. The initial direction is
/// up or down with probability 1/2 each. Returns the moments and the
/// expected execution price.
pub fn enumerate_post_wait_alpha(m: &Model, depth: i64, p_continue: f64) -> (PathMoments, f64) {
    let mut out = PathMoments::new(m.horizon);
    let level_l = -depth as f64;
    // (time, level, previous move was up, probability)
    let mut stack = vec![(0usize, 0i64, true, 0.5f64), (0usize, 0i64, false, 0.5f64)];
    let mut price_sum = 0.0;
    while let Some((t, level, prev_up, prob)) = stack.pop() {
        let bid = level as f64;
        if t == m.horizon {
            // unreachable below the resting level; keep the liquidation rule
            let price = if bid + 1.0 > level_l {
                bid + m.b
            } else {
                level_l
            };
            out.book(prob, price, -m.a, t);
            price_sum += prob * price;
            continue;
        }
        if level == -depth {
            let mid = bid + 0.5;
            out.book(prob * m.q_up(), level_l, (mid + 1.0) - level_l, t);
            out.book(prob * m.q_dn(), level_l, (mid - 1.0) - level_l, t);
            price_sum += prob * m.q * level_l;
            stack.push((t + 1, level + 1, true, prob * (1.0 - m.q)));
        } else {
            assert!(level > -depth, "walk went below the resting level");
            let p_up = if prev_up {
                p_continue
            } else {
                1.0 - p_continue
            };
            stack.push((t + 1, level + 1, true, prob * p_up));
            stack.push((t + 1, level - 1, false, prob * (1.0 - p_up)));
        }
    }
    (out, price_sum)
}

/// Direct backward recursion of the pegging tactic's expected price,
/// `P_k = q (P0 + kS) + (1 - q) P_{k+1}` with `P_N = P0 + (N + b) S`.
pub fn peg_price_recursion(q: f64, b: f64, horizon: usize) -> f64 {
    let mut p = horizon as f64 + b;
    for k in (0..horizon).rev() {
        p = q * k as f64 + (1.0 - q) * p;
    }
    p
}

/// Double sum `sum_{j<i} u_i f(u_j) G(k_i - k_j)` over explicit trades.
pub fn double_sum_cost(
    trades: &[(u64, f64)],
    impact: impl Fn(f64) -> f64,
    kernel: impl Fn(u64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for (i, &(ki, ui)) in trades.iter().enumerate() {
        for &(kj, uj) in &trades[..i] {
            total += ui * impact(uj) * kernel(ki - kj);
        }
    }
    total
}
