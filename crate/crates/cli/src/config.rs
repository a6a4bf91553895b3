//! Scenario file schema. Every table rejects unknown keys.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tactics_core::allocator::BandPosition;
use tactics_core::exec_market::UniformMode;
use tactics_core::exec_stochastic::VolumeDist;
use tactics_core::{BoundaryCondition, KernelSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    PtEval,
    PwtEval,
    Compare,
    McLimit,
    ExecDet,
    ExecStoch,
    Allocate,
}

impl Kind {
    pub fn section(self) -> &'static str {
        match self {
            Kind::PtEval => "pt-eval",
            Kind::PwtEval => "pwt-eval",
            Kind::Compare => "compare",
            Kind::McLimit => "mc-limit",
            Kind::ExecDet => "exec-det",
            Kind::ExecStoch => "exec-stoch",
            Kind::Allocate => "allocate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(rename = "pt-eval", default, skip_serializing_if = "Option::is_none")]
    pub pt_eval: Option<PtEval>,
    #[serde(rename = "pwt-eval", default, skip_serializing_if = "Option::is_none")]
    pub pwt_eval: Option<PwtEval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<Compare>,
    #[serde(rename = "mc-limit", default, skip_serializing_if = "Option::is_none")]
    pub mc_limit: Option<McLimit>,
    #[serde(rename = "exec-det", default, skip_serializing_if = "Option::is_none")]
    pub exec_det: Option<ExecDet>,
    #[serde(
        rename = "exec-stoch",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub exec_stoch: Option<ExecStoch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocate: Option<Allocate>,
    /// Written by the runner; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Scenario {
    /// Parses a scenario and checks that exactly the section named by `kind`
    /// is present. `origin` prefixes diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Scenario, CliError> {
        let s: Scenario =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let present = [
            ("pt-eval", s.pt_eval.is_some()),
            ("pwt-eval", s.pwt_eval.is_some()),
            ("compare", s.compare.is_some()),
            ("mc-limit", s.mc_limit.is_some()),
            ("exec-det", s.exec_det.is_some()),
            ("exec-stoch", s.exec_stoch.is_some()),
            ("allocate", s.allocate.is_some()),
        ];
        let want = s.kind.section();
        if let Some((section, _)) = present.iter().find(|(n, there)| *there && *n != want) {
            return Err(CliError::Config(format!(
                "{origin}: section [{section}] does not belong to kind = \"{want}\""
            )));
        }
        if !present.iter().any(|(n, there)| *there && *n == want) {
            return Err(CliError::Config(format!(
                "{origin}: kind = \"{want}\" needs a [{want}] section"
            )));
        }
        if s.name.is_empty()
            || !s
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(CliError::Config(format!(
                "{origin}: name `{}` must be non-empty and use only letters, digits, `-` or `_`",
                s.name
            )));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestInfo {
    pub tool: String,
    pub version: String,
}

/// A parameter sweep: `{ start, stop, step }`, an explicit list, or a scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid<T> {
    Range(GridRange<T>),
    Values(Vec<T>),
    Single(T),
}

/// Inclusive range; `stop` is kept when it lies on the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange<T> {
    pub start: T,
    pub stop: T,
    pub step: T,
}

impl Grid<f64> {
    pub fn expand(&self, field: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::Single(x) => vec![*x],
            Grid::Values(v) => v.clone(),
            Grid::Range(r) => {
                if !(r.step.is_finite() && r.step > 0.0) {
                    return Err(CliError::Config(format!(
                        "{field}: step must be positive, got {}",
                        r.step
                    )));
                }
                if !(r.start.is_finite() && r.stop.is_finite()) {
                    return Err(CliError::Config(format!("{field}: bounds must be finite")));
                }
                if r.stop < r.start {
                    Vec::new()
                } else {
                    // tolerate the rounding in (stop - start) / step
                    let n = ((r.stop - r.start) / r.step + 1e-9).floor() as u64;
                    (0..=n).map(|i| r.start + i as f64 * r.step).collect()
                }
            }
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{field}: grid is empty")));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("{field}: non-finite value {x}")));
        }
        Ok(v)
    }
}

impl Grid<u64> {
    pub fn expand(&self, field: &str) -> Result<Vec<u64>, CliError> {
        let v = match self {
            Grid::Single(x) => vec![*x],
            Grid::Values(v) => v.clone(),
            Grid::Range(r) => {
                if r.step == 0 {
                    return Err(CliError::Config(format!("{field}: step must be positive")));
                }
                (r.start..=r.stop).step_by(r.step as usize).collect()
            }
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{field}: grid is empty")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Cross the spread at the horizon.
    MO,
    /// Exit at the midpoint.
    MP,
}

impl From<Boundary> for BoundaryCondition {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::MO => BoundaryCondition::MarketOrder,
            Boundary::MP => BoundaryCondition::Midpoint,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtEval {
    pub boundary: Boundary,
    pub q: Grid<f64>,
    pub q_a: f64,
    #[serde(default = "one")]
    pub spread: f64,
    pub horizon: Grid<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwtEval {
    pub boundary: Boundary,
    pub q: Grid<f64>,
    pub q_a: f64,
    #[serde(default = "one")]
    pub spread: f64,
    pub horizon: Grid<u64>,
    pub depth: Grid<u64>,
    /// Probability that the next quote move repeats the previous one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_continue: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "g")]
    Shortfall,
    #[serde(rename = "h")]
    SpreadCapture,
    #[serde(rename = "C")]
    TotalCost,
}

fn all_metrics() -> Vec<MetricName> {
    vec![
        MetricName::Shortfall,
        MetricName::SpreadCapture,
        MetricName::TotalCost,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Compare {
    pub boundary: Boundary,
    pub q: Grid<f64>,
    pub q_a: f64,
    #[serde(default = "one")]
    pub spread: f64,
    pub horizon: u32,
    /// Post-and-wait depths compared against pegging.
    pub depths: Vec<u32>,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<MetricName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TacticName {
    PT,
    PWT,
}

fn point_one() -> f64 {
    0.1
}

fn point_six() -> f64 {
    0.6
}

fn unit_spread_atoms() -> Vec<[f64; 2]> {
    vec![[1.0, 1.0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McLimit {
    pub tactic: TacticName,
    /// Required for `PWT`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    pub boundary: Boundary,
    pub horizon: u32,
    /// Centers of the `q` triplet.
    pub q: Grid<f64>,
    pub q_a: f64,
    #[serde(default = "one")]
    pub spread: f64,
    #[serde(default = "point_one")]
    pub q_step: f64,
    #[serde(default = "point_six")]
    pub q_weight: f64,
    #[serde(default = "point_one")]
    pub q_a_step: f64,
    #[serde(default = "point_six")]
    pub q_a_weight: f64,
    /// `[multiple of spread, probability]` pairs.
    #[serde(default = "unit_spread_atoms")]
    pub spread_atoms: Vec<[f64; 2]>,
    pub n_mc: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelCfg {
    Instantaneous,
    Exponential { g: f64, rho: f64 },
    Power { g: f64, gamma: f64 },
}

impl KernelCfg {
    pub fn build(self) -> tactics_core::Result<KernelSpec> {
        match self {
            KernelCfg::Instantaneous => Ok(KernelSpec::Instantaneous),
            KernelCfg::Exponential { g, rho } => KernelSpec::exponential(g, rho),
            KernelCfg::Power { g, gamma } => KernelSpec::power_law(g, gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformModeCfg {
    #[default]
    Continuous,
    Discrete,
}

impl From<UniformModeCfg> for UniformMode {
    fn from(m: UniformModeCfg) -> Self {
        match m {
            UniformModeCfg::Continuous => UniformMode::Continuous,
            UniformModeCfg::Discrete => UniformMode::Discrete,
        }
    }
}

fn one_step() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecDet {
    pub x0: f64,
    pub horizon: u64,
    pub liquidity: f64,
    pub zeta: f64,
    pub beta: f64,
    #[serde(default = "one_step")]
    pub d_min: u64,
    #[serde(default)]
    pub uniform_mode: UniformModeCfg,
    pub d: Grid<u64>,
    pub uniform_kernel: KernelCfg,
    /// One cost curve per kernel.
    pub kernels: Vec<KernelCfg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VolumeCfg {
    Weibull { lambda: f64, k: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    PointMass { value: f64 },
}

impl From<VolumeCfg> for VolumeDist {
    fn from(v: VolumeCfg) -> Self {
        match v {
            VolumeCfg::Weibull { lambda, k } => VolumeDist::Weibull { lambda, k },
            VolumeCfg::Lognormal { mu, sigma } => VolumeDist::LogNormal { mu, sigma },
            VolumeCfg::Gamma { shape, scale } => VolumeDist::Gamma { shape, scale },
            VolumeCfg::PointMass { value } => VolumeDist::PointMass { value },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecStoch {
    pub x0: f64,
    pub horizon: u64,
    pub liquidity: f64,
    pub zeta: f64,
    pub beta: f64,
    #[serde(default = "one_step")]
    pub d_min: u64,
    #[serde(default)]
    pub uniform_mode: UniformModeCfg,
    pub v0: Grid<f64>,
    pub d: Grid<u64>,
    pub n_mc: u64,
    pub volume: VolumeCfg,
    pub kernel: KernelCfg,
    pub uniform_kernel: KernelCfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Position {
    AboveMiddle,
    BetweenMiddleAndLower,
    BelowLower,
}

impl Position {
    pub fn label(self) -> &'static str {
        match self {
            Position::AboveMiddle => "above-middle",
            Position::BetweenMiddleAndLower => "between-middle-and-lower",
            Position::BelowLower => "below-lower",
        }
    }
}

impl From<Position> for BandPosition {
    fn from(p: Position) -> Self {
        match p {
            Position::AboveMiddle => BandPosition::AboveMiddle,
            Position::BetweenMiddleAndLower => BandPosition::BetweenMiddleAndLower,
            Position::BelowLower => BandPosition::BelowLower,
        }
    }
}

fn default_depth() -> u32 {
    tactics_core::allocator::DEFAULT_PWT_DEPTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Allocate {
    pub positions: Vec<Position>,
    #[serde(default = "default_depth")]
    pub pwt_depth: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_expand() {
        let r = Grid::Range(GridRange {
            start: 0.05,
            stop: 0.95,
            step: 0.01,
        });
        let v = r.expand("q").unwrap();
        assert_eq!(v.len(), 91);
        assert!((v[90] - 0.95).abs() < 1e-12);
        let d = Grid::Range(GridRange {
            start: 5u64,
            stop: 25,
            step: 5,
        });
        assert_eq!(d.expand("d").unwrap(), vec![5, 10, 15, 20, 25]);
        assert!(Grid::<f64>::Values(vec![]).expand("q").is_err());
        assert!(Grid::Range(GridRange {
            start: 1.0,
            stop: 0.0,
            step: 0.1
        })
        .expand("q")
        .is_err());
        assert!(Grid::Range(GridRange {
            start: 1u64,
            stop: 3,
            step: 0
        })
        .expand("d")
        .is_err());
    }

    #[test]
    fn grid_forms_parse() {
        #[derive(Deserialize)]
        struct W {
            a: Grid<f64>,
            b: Grid<f64>,
            c: Grid<u64>,
        }
        let w: W =
            toml::from_str("a = 3\nb = [0.1, 0.2]\nc = { start = 1, stop = 4, step = 1 }").unwrap();
        assert_eq!(w.a, Grid::Single(3.0));
        assert_eq!(w.b, Grid::Values(vec![0.1, 0.2]));
        assert_eq!(w.c.expand("c").unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "name = \"x\"\nkind = \"allocate\"\n[allocate]\npositions = [\"below-lower\"]\npwt_dpeth = 2\n";
        let e = Scenario::parse(text, "x.toml").unwrap_err();
        assert!(e.to_string().contains("pwt_dpeth"), "{e}");
        let text = "name = \"x\"\nkind = \"allocate\"\nsed = 3\n[allocate]\npositions = []\n";
        assert!(Scenario::parse(text, "x.toml").is_err());
    }

    #[test]
    fn section_must_match_kind() {
        let text = "name = \"x\"\nkind = \"compare\"\n[allocate]\npositions = []\n";
        let e = Scenario::parse(text, "x.toml").unwrap_err();
        assert!(e.to_string().contains("[allocate]"), "{e}");
    }

    #[test]
    fn kernel_tables_parse() {
        #[derive(Deserialize)]
        struct W {
            k: Vec<KernelCfg>,
        }
        let w: W = toml::from_str(
            "k = [{ type = \"power\", g = 1, gamma = 0.5 }, { type = \"instantaneous\" }]",
        )
        .unwrap();
        assert_eq!(
            w.k,
            vec![
                KernelCfg::Power { g: 1.0, gamma: 0.5 },
                KernelCfg::Instantaneous
            ]
        );
        assert!(toml::from_str::<W>("k = [{ type = \"power\", g = 1, gama = 0.5 }]").is_err());
    }
}
