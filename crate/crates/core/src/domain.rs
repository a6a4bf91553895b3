//! Shared domain types and unit conventions.
//!
//! Prices are always measured relative to the arrival price `P0`, and the
//! limit-order results are stored as multiples of the spread `S`. A buy order
//! is assumed throughout; sell-side results follow by symmetry.

use crate::error::{invalid, Error, Result};

/// Terminal liquidation rule applied to a limit order that survives the
/// horizon.
///
/// `b` is the liquidation offset in spreads above the current bid and `a` is
/// the spread-capture charge booked on the terminal trade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Cross the spread: `b = 1`, `a = 1/2`.
    MarketOrder,
    /// Exit at the midpoint: `b = 1/2`, `a = 0`.
    Midpoint,
}

impl BoundaryCondition {
    pub fn b(self) -> f64 {
        match self {
            BoundaryCondition::MarketOrder => 1.0,
            BoundaryCondition::Midpoint => 0.5,
        }
    }

    pub fn a(self) -> f64 {
        match self {
            BoundaryCondition::MarketOrder => 0.5,
            BoundaryCondition::Midpoint => 0.0,
        }
    }

    /// Recovers the variant from an explicit `(b, a)` pair.
    pub fn from_pair(b: f64, a: f64) -> Result<Self> {
        [BoundaryCondition::MarketOrder, BoundaryCondition::Midpoint]
            .into_iter()
            .find(|bc| bc.b() == b && bc.a() == a)
            .ok_or(Error::InvalidBoundary { b, a })
    }

    pub fn short_name(self) -> &'static str {
        match self {
            BoundaryCondition::MarketOrder => "MO",
            BoundaryCondition::Midpoint => "MP",
        }
    }
}

/// Parameters shared by the limit-order tactics, in quote time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TacticParams {
    /// Probability of a fill during one quote lifetime.
    pub q: f64,
    /// Fill asymmetry `q_dn - q_up`.
    pub q_a: f64,
    /// Bid-ask spread in price units.
    pub spread: f64,
    /// Number of quote changes before aggressive liquidation.
    pub horizon: u32,
    pub boundary: BoundaryCondition,
}

impl TacticParams {
    /// Builds and validates a parameter set. The horizon is taken as a signed
    /// integer so that negative inputs from configuration are reported rather
    /// than wrapped.
    pub fn new(
        q: f64,
        q_a: f64,
        spread: f64,
        horizon: i64,
        boundary: BoundaryCondition,
    ) -> Result<Self> {
        if horizon < 0 {
            return Err(Error::NegativeHorizon(horizon));
        }
        let horizon = u32::try_from(horizon).map_err(|_| Error::HorizonTooLarge {
            got: horizon as u64,
            max: u32::MAX as u64,
        })?;
        validate_params(TacticParams {
            q,
            q_a,
            spread,
            horizon,
            boundary,
        })
    }

    /// Probability of a fill followed by an up-tick (favorable).
    pub fn q_up(&self) -> f64 {
        (self.q - self.q_a) / 2.0
    }

    /// Probability of a fill followed by a down-tick (adverse).
    pub fn q_dn(&self) -> f64 {
        (self.q + self.q_a) / 2.0
    }

    pub fn with_q(self, q: f64) -> Self {
        TacticParams { q, ..self }
    }

    pub fn with_horizon(self, horizon: u32) -> Self {
        TacticParams { horizon, ..self }
    }
}

/// Checks every [`TacticParams`] invariant and returns the input unchanged
/// when they all hold.
pub fn validate_params(p: TacticParams) -> Result<TacticParams> {
    if !(p.q.is_finite() && p.q > 0.0 && p.q <= 1.0) {
        return Err(Error::InvalidProbability(format!(
            "fill probability q={} is outside (0, 1]",
            p.q
        )));
    }
    if !p.q_a.is_finite() || p.q_a.abs() > p.q {
        return Err(Error::InvalidProbability(format!(
            "asymmetry q_a={} gives q_up={}, q_dn={}; need |q_a| <= q",
            p.q_a,
            p.q_up(),
            p.q_dn()
        )));
    }
    if !(p.spread.is_finite() && p.spread > 0.0) {
        return Err(Error::NonpositiveSpread(p.spread));
    }
    Ok(p)
}

/// A dimensionless multiple of the spread (the `g` and `h` factors).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SpreadMultiple(pub f64);

impl SpreadMultiple {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Converts to price units for the given spread.
    pub fn in_price(self, spread: f64) -> f64 {
        self.0 * spread
    }
}

impl From<SpreadMultiple> for f64 {
    fn from(s: SpreadMultiple) -> f64 {
        s.0
    }
}

/// Power-law market impact `f(v) = zeta * v^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpactSpec {
    pub zeta: f64,
    pub beta: f64,
}

impl ImpactSpec {
    pub fn new(zeta: f64, beta: f64) -> Result<Self> {
        let spec = ImpactSpec { zeta, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta.is_finite() && self.zeta > 0.0) {
            return Err(invalid("zeta", format!("must be > 0, got {}", self.zeta)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid(
                "beta",
                format!("must lie in (0, 1], got {}", self.beta),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn impact(&self, volume: f64) -> f64 {
        self.zeta * volume.powf(self.beta)
    }
}

/// Decay kernel `G(l)` weighting the impact of a trade `l` steps in the past.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `G(l) = delta(l)`: past trades leave no trace.
    Instantaneous,
    /// `G(l) = g_e * exp(-rho * l)`.
    Exponential { g_e: f64, rho: f64 },
    /// `G(l) = g_p * l^(-gamma)`.
    PowerLaw { g_p: f64, gamma: f64 },
}

impl KernelSpec {
    pub fn exponential(g_e: f64, rho: f64) -> Result<Self> {
        let k = KernelSpec::Exponential { g_e, rho };
        k.validate()?;
        Ok(k)
    }

    pub fn power_law(g_p: f64, gamma: f64) -> Result<Self> {
        let k = KernelSpec::PowerLaw { g_p, gamma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Instantaneous => Ok(()),
            KernelSpec::Exponential { g_e, rho } => {
                if !(g_e.is_finite() && g_e > 0.0) {
                    return Err(invalid("g_e", format!("must be > 0, got {g_e}")));
                }
                if !(rho.is_finite() && rho > 0.0) {
                    return Err(invalid("rho", format!("must be > 0, got {rho}")));
                }
                Ok(())
            }
            KernelSpec::PowerLaw { g_p, gamma } => {
                if !(g_p.is_finite() && g_p > 0.0) {
                    return Err(invalid("g_p", format!("must be > 0, got {g_p}")));
                }
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(invalid("gamma", format!("must lie in (0, 1), got {gamma}")));
                }
                Ok(())
            }
        }
    }

    /// Kernel weight at an integer lag.
    #[inline]
    pub fn weight(&self, lag: u64) -> f64 {
        match *self {
            KernelSpec::Instantaneous => {
                if lag == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Exponential { g_e, rho } => g_e * (-rho * lag as f64).exp(),
            KernelSpec::PowerLaw { g_p, gamma } => g_p * (lag as f64).powf(-gamma),
        }
    }

    /// Return-kernel `k(l) = G(l+1) - G(l)`.
    pub fn return_kernel(&self, lag: u64) -> f64 {
        self.weight(lag + 1) - self.weight(lag)
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Instantaneous => "instantaneous",
            KernelSpec::Exponential { .. } => "exponential",
            KernelSpec::PowerLaw { .. } => "power",
        }
    }

    /// Precomputes `G(1..=max_lag)`; index 0 holds `G(0)` for completeness.
    pub(crate) fn table(&self, max_lag: usize) -> Vec<f64> {
        (0..=max_lag as u64).map(|l| self.weight(l)).collect()
    }
}

/// Market-order trades `(time index, volume)` in trade time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TradeSchedule {
    entries: Vec<(u64, f64)>,
}

impl TradeSchedule {
    pub fn new(entries: Vec<(u64, f64)>) -> Result<Self> {
        for (i, &(k, v)) in entries.iter().enumerate() {
            if k < 1 {
                return Err(invalid("schedule", "time indices start at 1"));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(
                    "schedule",
                    format!("volume {v} at k={k} is not >= 0"),
                ));
            }
            if i > 0 && entries[i - 1].0 >= k {
                return Err(invalid(
                    "schedule",
                    "time indices must be strictly increasing",
                ));
            }
        }
        Ok(TradeSchedule { entries })
    }

    /// `n_blocks` trades of `block` lots at times `d, 2d, ..., n_blocks*d`.
    pub fn equal_blocks(block: f64, delay: u64, n_blocks: usize) -> Result<Self> {
        if delay == 0 {
            return Err(invalid("d", "delay must be >= 1"));
        }
        Self::new((1..=n_blocks as u64).map(|i| (i * delay, block)).collect())
    }

    /// Constant `rate` at every step `1..=steps`.
    pub fn uniform(rate: f64, steps: usize) -> Result<Self> {
        Self::new((1..=steps as u64).map(|k| (k, rate)).collect())
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_q_up_below_zero() {
        let err = TacticParams::new(0.5, 0.6, 1.0, 10, BoundaryCondition::Midpoint).unwrap_err();
        assert!(matches!(err, Error::InvalidProbability(_)));
    }

    #[test]
    fn accepts_interior_params() {
        let p = TacticParams::new(0.5, 0.2, 1.0, 10, BoundaryCondition::Midpoint).unwrap();
        assert_eq!(validate_params(p).unwrap(), p);
        assert!((p.q_up() - 0.15).abs() < 1e-15);
        assert!((p.q_dn() - 0.35).abs() < 1e-15);
    }

    #[test]
    fn accepts_certain_fill_with_full_asymmetry() {
        let p = TacticParams::new(1.0, 1.0, 1.0, 0, BoundaryCondition::MarketOrder).unwrap();
        assert_eq!(p.q_up(), 0.0);
        assert_eq!(p.q_dn(), 1.0);
    }

    #[test]
    fn rejects_zero_q_spread_and_negative_horizon() {
        let mo = BoundaryCondition::MarketOrder;
        assert!(matches!(
            TacticParams::new(0.0, 0.0, 1.0, 1, mo),
            Err(Error::InvalidProbability(_))
        ));
        assert!(matches!(
            TacticParams::new(0.5, 0.0, 0.0, 1, mo),
            Err(Error::NonpositiveSpread(_))
        ));
        assert!(matches!(
            TacticParams::new(0.5, 0.0, 1.0, -1, mo),
            Err(Error::NegativeHorizon(-1))
        ));
        assert!(TacticParams::new(f64::NAN, 0.0, 1.0, 1, mo).is_err());
    }

    #[test]
    fn boundary_pairs_are_closed() {
        assert_eq!(
            BoundaryCondition::from_pair(1.0, 0.5).unwrap(),
            BoundaryCondition::MarketOrder
        );
        assert_eq!(
            BoundaryCondition::from_pair(0.5, 0.0).unwrap(),
            BoundaryCondition::Midpoint
        );
        assert!(BoundaryCondition::from_pair(1.0, 0.0).is_err());
        assert!(BoundaryCondition::from_pair(0.75, 0.25).is_err());
    }

    #[test]
    fn decaying_kernels_are_non_increasing() {
        let kernels = [
            KernelSpec::exponential(1.0, 0.01).unwrap(),
            KernelSpec::exponential(2.5, 0.3).unwrap(),
            KernelSpec::power_law(1.0, 0.5).unwrap(),
            KernelSpec::power_law(0.3, 0.95).unwrap(),
        ];
        for k in kernels {
            for l in 1..2000 {
                assert!(k.weight(l) > 0.0);
                assert!(k.weight(l + 1) <= k.weight(l));
                assert!(k.return_kernel(l) <= 0.0);
            }
        }
        assert_eq!(KernelSpec::Instantaneous.weight(3), 0.0);
    }

    #[test]
    fn kernel_validation() {
        assert!(KernelSpec::power_law(1.0, 1.0).is_err());
        assert!(KernelSpec::power_law(1.0, 0.0).is_err());
        assert!(KernelSpec::exponential(0.0, 0.1).is_err());
        assert!(ImpactSpec::new(0.1, 1.5).is_err());
        assert!(ImpactSpec::new(-0.1, 0.5).is_err());
    }

    #[test]
    fn schedule_rejects_unordered_times() {
        assert!(TradeSchedule::new(vec![(2, 1.0), (2, 1.0)]).is_err());
        assert!(TradeSchedule::new(vec![(0, 1.0)]).is_err());
        assert!(TradeSchedule::new(vec![(1, -1.0)]).is_err());
        let s = TradeSchedule::equal_blocks(25.0, 4, 3).unwrap();
        assert_eq!(s.entries(), &[(4, 25.0), (8, 25.0), (12, 25.0)]);
        assert_eq!(s.total_volume(), 75.0);
    }
}
