//! Opportunistic block trading under stochastic offer volume.
//!
//! Each step offers a random volume. The tactic takes an offer when it is at
//! least `v0` and at least `d` steps have passed since its previous trade;
//! whatever is left at the end is traded uniformly. Expected cost is
//! estimated by Monte Carlo and minimized over a `(v0, d)` grid.
//!
//! RNG contract: sample `i` of a run with seed `s` draws its whole volume
//! stream from `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`. Every
//! grid point sees the same streams (common random numbers) and chunked
//! partial sums are merged in index order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Weibull};
use rayon::prelude::*;

use crate::domain::ImpactSpec;
use crate::error::{invalid, Error, Result};
use crate::exec_market::ExecProblem;
use crate::monte_carlo::{McEstimate, Moments};

const CHUNK: u64 = 64;

/// Unconditional offer-volume distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeDist {
    Weibull {
        lambda: f64,
        k: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// Every offer has the same size.
    PointMass {
        value: f64,
    },
}

impl VolumeDist {
    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        match *self {
            VolumeDist::Weibull { lambda, k } => pos("lambda_w", lambda).and(pos("k_w", k)),
            VolumeDist::LogNormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(invalid("mu", "must be finite"));
                }
                pos("sigma", sigma)
            }
            VolumeDist::Gamma { shape, scale } => pos("shape", shape).and(pos("scale", scale)),
            VolumeDist::PointMass { value } => pos("value", value),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            VolumeDist::Weibull { lambda, k } => {
                lambda * statrs::function::gamma::gamma(1.0 + 1.0 / k)
            }
            VolumeDist::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            VolumeDist::Gamma { shape, scale } => shape * scale,
            VolumeDist::PointMass { value } => value,
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let bad = |e: &dyn std::fmt::Display| invalid("volume distribution", e.to_string());
        Ok(match *self {
            VolumeDist::Weibull { lambda, k } => {
                Sampler::Weibull(Weibull::new(lambda, k).map_err(|e| bad(&e))?)
            }
            VolumeDist::LogNormal { mu, sigma } => {
                Sampler::LogNormal(LogNormal::new(mu, sigma).map_err(|e| bad(&e))?)
            }
            VolumeDist::Gamma { shape, scale } => {
                Sampler::Gamma(Gamma::new(shape, scale).map_err(|e| bad(&e))?)
            }
            VolumeDist::PointMass { value } => Sampler::Point(value),
        })
    }
}

enum Sampler {
    Weibull(Weibull<f64>),
    LogNormal(LogNormal<f64>),
    Gamma(Gamma<f64>),
    Point(f64),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Weibull(d) => d.sample(rng),
            Sampler::LogNormal(d) => d.sample(rng),
            Sampler::Gamma(d) => d.sample(rng),
            Sampler::Point(v) => *v,
        }
    }
}

/// Source of offer volumes. `history` holds the volumes already drawn in the
/// current stream, so conditional models can depend on it.
pub trait VolumeModel: Sync {
    fn next_volume(&self, history: &[f64], rng: &mut dyn RngCore) -> f64;
}

/// Unconditional model backed by a [`VolumeDist`].
pub struct Unconditional(Sampler);

impl Unconditional {
    pub fn new(dist: VolumeDist) -> Result<Self> {
        Ok(Unconditional(dist.sampler()?))
    }
}

impl VolumeModel for Unconditional {
    fn next_volume(&self, _history: &[f64], rng: &mut dyn RngCore) -> f64 {
        self.0.draw(rng)
    }
}

/// One offer per step, `(k, v)` with `k = 1..=T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventStream {
    pub events: Vec<(u64, f64)>,
}

fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn fill_volumes(model: &dyn VolumeModel, rng: &mut ChaCha8Rng, steps: u64, out: &mut Vec<f64>) {
    out.clear();
    for _ in 0..steps {
        let v = model.next_volume(out, rng);
        out.push(v);
    }
}

/// Draws stream `index` of the run seeded with `seed`.
pub fn sample_stream_with(
    model: &dyn VolumeModel,
    steps: u64,
    seed: u64,
    index: u64,
) -> EventStream {
    let mut rng = stream_rng(seed, index);
    let mut vols = Vec::with_capacity(steps as usize);
    fill_volumes(model, &mut rng, steps, &mut vols);
    EventStream {
        events: vols
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i as u64 + 1, v))
            .collect(),
    }
}

/// i.i.d. offers from `dist`; stream 0 of `seed`.
pub fn sample_stream(dist: VolumeDist, steps: u64, seed: u64) -> Result<EventStream> {
    if steps < 1 {
        return Err(invalid("T", "need at least one step"));
    }
    Ok(sample_stream_with(
        &Unconditional::new(dist)?,
        steps,
        seed,
        0,
    ))
}

/// Tactic parameters: size threshold and minimum spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlttParams {
    pub v0: f64,
    pub d: u64,
}

impl OlttParams {
    pub fn new(v0: f64, d: u64) -> Result<Self> {
        if !(v0 >= 0.0) {
            return Err(invalid("v0", format!("must be >= 0, got {v0}")));
        }
        if d < 1 {
            return Err(invalid("d", "must be >= 1"));
        }
        Ok(OlttParams { v0, d })
    }
}

/// Greedy left-to-right selection of offers with `v >= v0`, each at least
/// `d` steps after the previously kept one.
pub fn filter_events(stream: &EventStream, p: OlttParams) -> EventStream {
    let mut kept: Vec<(u64, f64)> = Vec::new();
    for &(k, v) in &stream.events {
        if v >= p.v0 && kept.last().is_none_or(|&(last, _)| k - last >= p.d) {
            kept.push((k, v));
        }
    }
    EventStream { events: kept }
}

/// Mean block cost, captured volume and total cost over the sampled streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlttEstimate {
    pub c_b: McEstimate,
    pub x_b: McEstimate,
    /// `C_b + C_u(X0 - X_b)` per stream.
    pub total: McEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochPoint {
    pub params: OlttParams,
    pub estimate: OlttEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochOptimum {
    pub best: OlttParams,
    pub best_estimate: OlttEstimate,
    /// `v0`-major, `d`-minor, in grid order.
    pub surface: Vec<StochPoint>,
}

#[derive(Debug, Clone, Copy, Default)]
struct PointStats {
    c_b: Moments,
    x_b: Moments,
    total: Moments,
}

/// Per-run constants shared by all samples.
struct CostModel {
    x0: f64,
    impact: ImpactSpec,
    /// `G(l)` for `l = 0..=T`.
    kernel: Vec<f64>,
    /// Uniform cost at unit rate; scales as `rho_u^(beta+1)`.
    uniform_unit: f64,
    horizon: f64,
}

impl CostModel {
    fn new(prob: &ExecProblem) -> Result<Self> {
        prob.validate()?;
        Ok(CostModel {
            x0: prob.x0,
            impact: prob.impact,
            kernel: prob.kernel.table(prob.horizon as usize),
            uniform_unit: prob.uniform_cost(1.0)?,
            horizon: prob.horizon as f64,
        })
    }

    /// Walks the candidate offers (already `>= v0`) greedily with spacing `d`,
    /// trading `min(v, remaining)`, and returns `(C_b, X_b)`.
    fn block_cost(
        &self,
        cand: &[(u64, f64, f64)],
        d: u64,
        trades: &mut Vec<(u64, f64, f64)>,
    ) -> (f64, f64) {
        trades.clear();
        let mut remaining = self.x0;
        let mut last: Option<u64> = None;
        for &(k, v, fv) in cand {
            if remaining <= 0.0 {
                break;
            }
            if last.is_some_and(|l| k - l < d) {
                continue;
            }
            let (u, fu) = if v <= remaining {
                (v, fv)
            } else {
                (remaining, self.impact.impact(remaining))
            };
            trades.push((k, u, fu));
            remaining -= u;
            last = Some(k);
        }
        let mut c_b = 0.0;
        for (i, &(k, u, _)) in trades.iter().enumerate() {
            let mut price = 0.0;
            for &(kp, _, fp) in &trades[..i] {
                price += fp * self.kernel[(k - kp) as usize];
            }
            c_b += u * price;
        }
        (c_b, self.x0 - remaining)
    }

    fn total(&self, c_b: f64, x_b: f64) -> f64 {
        let rho_u = ((self.x0 - x_b) / self.horizon).max(0.0);
        c_b + self.uniform_unit * rho_u.powf(self.impact.beta + 1.0)
    }
}

fn check_grid(v0_grid: &[f64], d_grid: &[u64]) -> Result<Vec<OlttParams>> {
    if v0_grid.is_empty() {
        return Err(Error::EmptyGrid("v0"));
    }
    if d_grid.is_empty() {
        return Err(Error::EmptyGrid("d"));
    }
    let mut out = Vec::with_capacity(v0_grid.len() * d_grid.len());
    for &v0 in v0_grid {
        for &d in d_grid {
            out.push(OlttParams::new(v0, d)?);
        }
    }
    Ok(out)
}

/// Evaluates every grid point on the same `n_mc` streams.
pub fn cost_surface(
    model: &dyn VolumeModel,
    v0_grid: &[f64],
    d_grid: &[u64],
    prob: &ExecProblem,
    n_mc: u64,
    seed: u64,
) -> Result<Vec<StochPoint>> {
    let points = check_grid(v0_grid, d_grid)?;
    if n_mc == 0 {
        return Err(invalid("n_mc", "need at least one sample"));
    }
    let cm = CostModel::new(prob)?;
    let steps = prob.horizon;
    let n_chunks = n_mc.div_ceil(CHUNK);

    let chunks: Vec<Vec<PointStats>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut stats = vec![PointStats::default(); points.len()];
            let mut vols = Vec::with_capacity(steps as usize);
            let mut cand = Vec::new();
            let mut trades = Vec::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_mc) {
                let mut rng = stream_rng(seed, i);
                fill_volumes(model, &mut rng, steps, &mut vols);
                let impacts: Vec<f64> = vols.iter().map(|&v| cm.impact.impact(v)).collect();
                for (vi, &v0) in v0_grid.iter().enumerate() {
                    cand.clear();
                    cand.extend(
                        vols.iter()
                            .zip(&impacts)
                            .enumerate()
                            .filter(|(_, (&v, _))| v >= v0)
                            .map(|(k, (&v, &fv))| (k as u64 + 1, v, fv)),
                    );
                    for (di, &d) in d_grid.iter().enumerate() {
                        let (c_b, x_b) = cm.block_cost(&cand, d, &mut trades);
                        let s = &mut stats[vi * d_grid.len() + di];
                        s.c_b.push(c_b);
                        s.x_b.push(x_b);
                        s.total.push(cm.total(c_b, x_b));
                    }
                }
            }
            stats
        })
        .collect();

    let mut acc = vec![PointStats::default(); points.len()];
    for chunk in chunks {
        for (a, s) in acc.iter_mut().zip(chunk) {
            a.c_b = a.c_b.merge(s.c_b);
            a.x_b = a.x_b.merge(s.x_b);
            a.total = a.total.merge(s.total);
        }
    }
    Ok(points
        .into_iter()
        .zip(acc)
        .map(|(params, s)| StochPoint {
            params,
            estimate: OlttEstimate {
                c_b: s.c_b.estimate(),
                x_b: s.x_b.estimate(),
                total: s.total.estimate(),
            },
        })
        .collect())
}

/// Monte-Carlo cost of one parameter pair. Uses the same streams as
/// [`optimize_stochastic`] with the same seed, so the values agree exactly.
pub fn oltt_cost_mc(
    dist: VolumeDist,
    p: OlttParams,
    prob: &ExecProblem,
    n_mc: u64,
    seed: u64,
) -> Result<OlttEstimate> {
    let model = Unconditional::new(dist)?;
    let s = cost_surface(&model, &[p.v0], &[p.d], prob, n_mc, seed)?;
    Ok(s[0].estimate)
}

/// Grid search for the `(v0, d)` pair of least expected total cost. Ties go
/// to the smaller `v0`, then the smaller `d`.
pub fn optimize_stochastic(
    dist: VolumeDist,
    v0_grid: &[f64],
    d_grid: &[u64],
    prob: &ExecProblem,
    n_mc: u64,
    seed: u64,
) -> Result<StochOptimum> {
    if prob.x0 > prob.liquidity * prob.horizon as f64 {
        return Err(Error::InfeasibleProblem(format!(
            "X0={} exceeds L*T={}",
            prob.x0,
            prob.liquidity * prob.horizon as f64
        )));
    }
    let model = Unconditional::new(dist)?;
    let surface = cost_surface(&model, v0_grid, d_grid, prob, n_mc, seed)?;
    let mut best = 0;
    for (i, p) in surface.iter().enumerate() {
        if p.estimate.total.mean < surface[best].estimate.total.mean {
            best = i;
        }
    }
    Ok(StochOptimum {
        best: surface[best].params,
        best_estimate: surface[best].estimate,
        surface,
    })
}
