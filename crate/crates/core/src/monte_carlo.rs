//! Monte-Carlo simulation of the limit-order tactics under discretely
//! distributed parameters.
//!
//! Paths are simulated in quote time exactly as the analytic models assume.
//!
//! RNG contract: sample `i` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. Samples are reduced
//! in fixed-size chunks merged in index order, so the output does not depend
//! on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{BoundaryCondition, TacticParams};
use crate::error::{invalid, Error, Result};
use crate::tactic_eval::Tactic;

const PROB_TOL: f64 = 1e-9;
const CHUNK: u64 = 4096;
/// Redraw budget per sample before giving up on a valid `(q, q_a)`.
const MAX_REDRAWS: u32 = 100_000;

/// Finite distribution over `(value, probability)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDist {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atoms", "distribution has no atoms"));
        }
        if atoms
            .iter()
            .any(|&(v, p)| !v.is_finite() || !p.is_finite() || p < 0.0)
        {
            return Err(invalid(
                "atoms",
                "values must be finite, probabilities >= 0",
            ));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(invalid("atoms", format!("probabilities sum to {total}")));
        }
        Ok(DiscreteDist { atoms })
    }

    pub fn point(value: f64) -> Self {
        DiscreteDist {
            atoms: vec![(value, 1.0)],
        }
    }

    /// `{(c, w), (c - step, (1-w)/2), (c + step, (1-w)/2)}`.
    pub fn triplet(center: f64, step: f64, center_weight: f64) -> Result<Self> {
        let side = (1.0 - center_weight) / 2.0;
        DiscreteDist::new(vec![
            (center, center_weight),
            (center - step, side),
            (center + step, side),
        ])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    /// Inverse-CDF draw from a uniform `u` in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(v, p) in &self.atoms {
            acc += p;
            if u < acc {
                return v;
            }
        }
        // rounding left a sliver above the last cumulative weight
        self.atoms
            .iter()
            .rev()
            .find(|a| a.1 > 0.0)
            .map_or(self.atoms[0].0, |a| a.0)
    }
}

/// Independent distributions of fill probability, asymmetry and spread.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDists {
    pub q: DiscreteDist,
    pub q_a: DiscreteDist,
    pub spread: DiscreteDist,
}

impl ParamDists {
    pub fn new(q: DiscreteDist, q_a: DiscreteDist, spread: DiscreteDist) -> Result<Self> {
        let live = |d: &DiscreteDist| -> Vec<f64> {
            d.atoms.iter().filter(|a| a.1 > 0.0).map(|a| a.0).collect()
        };
        if let Some(v) = live(&q).into_iter().find(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidAtomCombination(format!(
                "fill probability atom {v} is outside (0, 1]"
            )));
        }
        if let Some(v) = live(&q_a).into_iter().find(|&v| v.abs() > 1.0) {
            return Err(Error::InvalidAtomCombination(format!(
                "asymmetry atom {v} is outside [-1, 1]"
            )));
        }
        if let Some(v) = live(&spread).into_iter().find(|&v| v <= 0.0) {
            return Err(Error::InvalidAtomCombination(format!(
                "spread atom {v} is not positive"
            )));
        }
        let d = ParamDists { q, q_a, spread };
        if d.valid_mass() <= 0.0 {
            return Err(Error::InvalidAtomCombination(
                "no (q, q_a) atom pair satisfies |q_a| <= q".into(),
            ));
        }
        Ok(d)
    }

    pub fn degenerate(q: f64, q_a: f64, spread: f64) -> Result<Self> {
        ParamDists::new(
            DiscreteDist::point(q),
            DiscreteDist::point(q_a),
            DiscreteDist::point(spread),
        )
    }

    /// Probability that an independent `(q, q_a)` draw is admissible.
    pub fn valid_mass(&self) -> f64 {
        let mut mass = 0.0;
        for &(q, pq) in &self.q.atoms {
            for &(qa, pa) in &self.q_a.atoms {
                if qa.abs() <= q {
                    mass += pq * pa;
                }
            }
        }
        mass
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Zero for a single sample.
    pub std_error: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    /// Implementation shortfall in price units.
    pub is: McEstimate,
    /// Effective spread capture in price units.
    pub d: McEstimate,
    /// Rejected `(q, q_a)` draws over all draws.
    pub rejection_rate: f64,
}

/// Streaming mean and variance (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + delta * delta * (self.n as f64 * o.n as f64) / n as f64,
        }
    }

    pub(crate) fn estimate(&self) -> McEstimate {
        let std_error = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error,
            n_samples: self.n,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    is: Moments,
    d: Moments,
    draws: u64,
    rejected: u64,
}

/// One quote-time path. Returns `(price, capture)` in spread units relative
/// to the arrival bid.
fn simulate_path<R: Rng>(
    rng: &mut R,
    tactic: Tactic,
    q: f64,
    q_a: f64,
    bc: BoundaryCondition,
    horizon: u32,
) -> (f64, f64) {
    let q_up = (q - q_a) / 2.0;
    let depth = match tactic {
        Tactic::Peg => 0i64,
        Tactic::PostWait { depth } => depth as i64,
    };
    // bid level; the pegged order always sits on it
    let mut level = 0i64;
    for _ in 0..horizon {
        let u: f64 = rng.random();
        let resting = matches!(tactic, Tactic::Peg) || level == -depth;
        if resting {
            if u < q_up {
                return (level as f64, 1.5);
            }
            if u < q {
                return (level as f64, -0.5);
            }
            level += 1;
        } else if u < 0.5 {
            level += 1;
        } else {
            level -= 1;
        }
    }
    (level as f64 + bc.b(), -bc.a())
}

/// Simulates `n_mc` independent paths, each with its own `(q, q_a, S)` draw.
/// Draws with `|q_a| > q` are rejected and redrawn.
pub fn simulate_tactic(
    tactic: Tactic,
    boundary: BoundaryCondition,
    horizon: u32,
    dists: &ParamDists,
    n_mc: u64,
    seed: u64,
) -> Result<McResult> {
    if n_mc == 0 {
        return Err(invalid("n_mc", "need at least one sample"));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let n_chunks = n_mc.div_ceil(CHUNK);
    let chunks: Vec<Result<ChunkStats>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut st = ChunkStats::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_mc) {
                let mut rng = base.clone();
                rng.set_stream(i);
                let mut redraws = 0;
                let (q, q_a) = loop {
                    let q = dists.q.sample_with(rng.random());
                    let q_a = dists.q_a.sample_with(rng.random());
                    st.draws += 1;
                    if q_a.abs() <= q {
                        break (q, q_a);
                    }
                    st.rejected += 1;
                    redraws += 1;
                    if redraws >= MAX_REDRAWS {
                        return Err(Error::InvalidAtomCombination(
                            "redraw budget exhausted".into(),
                        ));
                    }
                };
                let s = dists.spread.sample_with(rng.random());
                let (price, capture) = simulate_path(&mut rng, tactic, q, q_a, boundary, horizon);
                st.is.push(-price * s);
                st.d.push(capture * s);
            }
            Ok(st)
        })
        .collect();

    let mut total = ChunkStats::default();
    for c in chunks {
        let c = c?;
        total.is = total.is.merge(c.is);
        total.d = total.d.merge(c.d);
        total.draws += c.draws;
        total.rejected += c.rejected;
    }
    Ok(McResult {
        is: total.is.estimate(),
        d: total.d.estimate(),
        rejection_rate: total.rejected as f64 / total.draws as f64,
    })
}

/// Exact expectation of the simulated `(IS, D)` under the same
/// reject-and-redraw rule, obtained by weighting the analytic evaluators
/// over every admissible atom combination.
pub fn mixture_expectation(
    tactic: Tactic,
    boundary: BoundaryCondition,
    horizon: u32,
    dists: &ParamDists,
) -> Result<(f64, f64)> {
    let mean_s = dists.spread.mean();
    let (mut is, mut d, mut mass) = (0.0, 0.0, 0.0);
    for &(q, pq) in dists.q.atoms() {
        for &(q_a, pa) in dists.q_a.atoms() {
            let w = pq * pa;
            if q_a.abs() > q || w == 0.0 {
                continue;
            }
            let p = TacticParams::new(q, q_a, 1.0, horizon as i64, boundary)?;
            let (g, h) = tactic.evaluate(&p)?;
            is += w * g.0;
            d += w * h.0;
            mass += w;
        }
    }
    // the spread is drawn independently, so it factors out
    Ok((is / mass * mean_s, d / mass * mean_s))
}

/// One executed long/short pair, in price units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillPair {
    pub sell: f64,
    pub buy: f64,
}

/// Average sell-minus-buy profit as a fraction of the average spread.
pub fn pair_efficiency(pairs: &[FillPair], avg_spread: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyPairs);
    }
    if !(avg_spread > 0.0) {
        return Err(Error::NonpositiveSpread(avg_spread));
    }
    if pairs
        .iter()
        .any(|p| !p.sell.is_finite() || !p.buy.is_finite())
    {
        return Err(invalid("pairs", "fill prices must be finite"));
    }
    let total: f64 = pairs.iter().map(|p| p.sell - p.buy).sum();
    Ok(total / (pairs.len() as f64 * avg_spread))
}

/// Synthetic pairs under certain execution. Each side fills at its quote and
/// the next midpoint moves favorably with probability `q_up = (1 - q_a)/2`;
/// prices are quoted relative to that next midpoint.
pub fn simulate_pairs(q_a: f64, spread: f64, m: usize, seed: u64) -> Result<Vec<FillPair>> {
    if !(q_a.abs() <= 1.0) {
        return Err(Error::InvalidProbability(format!(
            "q_a={q_a} outside [-1, 1]"
        )));
    }
    if !(spread > 0.0) {
        return Err(Error::NonpositiveSpread(spread));
    }
    let q_up = (1.0 - q_a) / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capture = |rng: &mut ChaCha8Rng| {
        if rng.random::<f64>() < q_up {
            1.5 * spread
        } else {
            -0.5 * spread
        }
    };
    Ok((0..m)
        .map(|_| {
            let buy = -capture(&mut rng);
            let sell = capture(&mut rng);
            FillPair { sell, buy }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoundaryCondition::{MarketOrder, Midpoint};
    use crate::peg;

    fn figure_dists(q: f64) -> Result<ParamDists> {
        ParamDists::new(
            DiscreteDist::triplet(q, 0.1, 0.6)?,
            DiscreteDist::triplet(0.6, 0.1, 0.6)?,
            DiscreteDist::new(vec![(1.0, 0.7), (2.0, 0.3)])?,
        )
    }

    #[test]
    fn dist_validation() {
        assert!(DiscreteDist::new(vec![]).is_err());
        assert!(DiscreteDist::new(vec![(1.0, 0.5)]).is_err());
        assert!(DiscreteDist::new(vec![(1.0, -0.5), (2.0, 1.5)]).is_err());
        let d = DiscreteDist::new(vec![(1.0, 0.7), (2.0, 0.3)]).unwrap();
        assert!((d.mean() - 1.3).abs() < 1e-15);
        assert_eq!(d.sample_with(0.0), 1.0);
        assert_eq!(d.sample_with(0.69), 1.0);
        assert_eq!(d.sample_with(0.71), 2.0);
        assert_eq!(d.sample_with(0.999_999_999_999), 2.0);
    }

    #[test]
    fn invalid_atoms_are_rejected_at_construction() {
        let bad_q = ParamDists::new(
            DiscreteDist::triplet(0.95, 0.1, 0.6).unwrap(),
            DiscreteDist::point(0.0),
            DiscreteDist::point(1.0),
        );
        assert!(matches!(bad_q, Err(Error::InvalidAtomCombination(_))));
        let none_valid = ParamDists::degenerate(0.3, 0.5, 1.0);
        assert!(matches!(none_valid, Err(Error::InvalidAtomCombination(_))));
        assert!(ParamDists::degenerate(0.3, 0.1, 0.0).is_err());
    }

    #[test]
    fn single_sample_has_zero_error() {
        let d = ParamDists::degenerate(0.5, 0.2, 1.0).unwrap();
        let r = simulate_tactic(Tactic::Peg, Midpoint, 10, &d, 1, 9).unwrap();
        assert_eq!(r.is.n_samples, 1);
        assert_eq!(r.is.std_error, 0.0);
        assert_eq!(r.d.std_error, 0.0);
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let d = figure_dists(0.7).unwrap();
        let a = simulate_tactic(Tactic::Peg, Midpoint, 10, &d, 20_000, 3).unwrap();
        let b = simulate_tactic(Tactic::Peg, Midpoint, 10, &d, 20_000, 3).unwrap();
        assert_eq!(a, b);
        let c = simulate_tactic(Tactic::Peg, Midpoint, 10, &d, 20_000, 4).unwrap();
        assert_ne!(a.is.mean, c.is.mean);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let d = figure_dists(0.7).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    simulate_tactic(
                        Tactic::PostWait { depth: 1 },
                        MarketOrder,
                        10,
                        &d,
                        30_000,
                        11,
                    )
                })
                .unwrap()
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn degenerate_peg_matches_closed_form() {
        let d = ParamDists::degenerate(0.5, 0.2, 1.0).unwrap();
        let r = simulate_tactic(Tactic::Peg, Midpoint, 10, &d, 100_000, 1).unwrap();
        let p = TacticParams::new(0.5, 0.2, 1.0, 10, Midpoint).unwrap();
        let g = peg::expected_shortfall(&p).0;
        let h = peg::effective_spread_capture(&p).0;
        assert!((r.is.mean - g).abs() < 4.0 * r.is.std_error, "{r:?} vs {g}");
        assert!((r.d.mean - h).abs() < 4.0 * r.d.std_error, "{r:?} vs {h}");
        assert_eq!(r.rejection_rate, 0.0);
    }

    #[test]
    fn degenerate_post_wait_matches_lattice() {
        let d = ParamDists::degenerate(0.6, 0.1, 2.0).unwrap();
        let t = Tactic::PostWait { depth: 2 };
        let r = simulate_tactic(t, MarketOrder, 8, &d, 100_000, 5).unwrap();
        let (is, dd) = mixture_expectation(t, MarketOrder, 8, &d).unwrap();
        assert!((r.is.mean - is).abs() < 4.0 * r.is.std_error);
        assert!((r.d.mean - dd).abs() < 4.0 * r.d.std_error);
    }

    #[test]
    fn mixture_expectation_weights_atoms() {
        // only (0.7, 0.5) and (0.7, 0.7) survive with q = 0.7
        let d = ParamDists::new(
            DiscreteDist::point(0.7),
            DiscreteDist::new(vec![(0.5, 0.25), (0.7, 0.25), (0.9, 0.5)]).unwrap(),
            DiscreteDist::point(1.0),
        )
        .unwrap();
        assert!((d.valid_mass() - 0.5).abs() < 1e-15);
        let (_, h) = mixture_expectation(Tactic::Peg, Midpoint, 10, &d).unwrap();
        let h1 =
            peg::effective_spread_capture(&TacticParams::new(0.7, 0.5, 1.0, 10, Midpoint).unwrap());
        let h2 =
            peg::effective_spread_capture(&TacticParams::new(0.7, 0.7, 1.0, 10, Midpoint).unwrap());
        assert!((h - 0.5 * (h1.0 + h2.0)).abs() < 1e-14);
        let r = simulate_tactic(Tactic::Peg, Midpoint, 10, &d, 20_000, 2).unwrap();
        assert!((r.rejection_rate - 0.5).abs() < 0.02);
    }

    #[test]
    fn pair_efficiency_examples() {
        let perfect = vec![
            FillPair {
                sell: 10.02,
                buy: 10.0
            };
            5
        ];
        assert!((pair_efficiency(&perfect, 0.02).unwrap() - 1.0).abs() < 1e-9);
        let flat = vec![
            FillPair {
                sell: 7.0,
                buy: 7.0
            };
            3
        ];
        assert_eq!(pair_efficiency(&flat, 0.01).unwrap(), 0.0);
        assert_eq!(pair_efficiency(&[], 1.0), Err(Error::EmptyPairs));
        assert_eq!(
            pair_efficiency(&flat, 0.0),
            Err(Error::NonpositiveSpread(0.0))
        );
    }

    #[test]
    fn synthetic_pairs_recover_the_asymmetry() {
        let q_a = 0.97;
        let pairs = simulate_pairs(q_a, 0.01, 200_000, 17).unwrap();
        let delta = pair_efficiency(&pairs, 0.01).unwrap();
        let mut m = Moments::default();
        for p in &pairs {
            m.push((p.sell - p.buy) / 0.01);
        }
        let se = m.estimate().std_error;
        assert!(
            (delta - peg::pair_efficiency_delta(q_a)).abs() < 3.0 * se,
            "{delta}"
        );
        assert!((delta + 0.94).abs() < 3.0 * se);
    }
}
