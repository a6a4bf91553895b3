//! Scenario execution: validate everything, compute, then write the outputs.

use std::fmt::Display;
use std::path::PathBuf;

use tactics_core::allocator::select_tactic_with_depth;
use tactics_core::exec_market::{optimize_deterministic, ExecProblem};
use tactics_core::exec_stochastic::{optimize_stochastic, VolumeDist};
use tactics_core::monte_carlo::{mixture_expectation, simulate_tactic, DiscreteDist, ParamDists};
use tactics_core::post_wait::{self, AlphaModel, PwtConfig};
use tactics_core::tactic_eval::{
    build_curve, crossing_points, CostWeights, Metric, Tactic, TacticCurve,
};
use tactics_core::{peg, BoundaryCondition, Error, ImpactSpec, TacticParams};

use crate::config::{
    Allocate, Compare, ExecDet, ExecStoch, KernelCfg, Kind, ManifestInfo, McLimit, MetricName,
    PtEval, PwtEval, Scenario, TacticName,
};
use crate::output::{Cell, Table};
use crate::CliError;

/// Files written by one run plus a short human-readable digest.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub csv: PathBuf,
    pub dat: PathBuf,
    pub manifest: PathBuf,
    pub summary: Option<PathBuf>,
    pub digest: Vec<String>,
}

struct Tables {
    main: Table,
    summary: Option<Table>,
    digest: Vec<String>,
}

/// Validation failures are configuration errors, except infeasibility.
fn invalid_cfg(section: &str, e: Error) -> CliError {
    match e {
        Error::InfeasibleProblem(m) => CliError::Infeasible(format!("{section}: {m}")),
        e => CliError::Config(format!("{section}: {e}")),
    }
}

/// Failures after validation passed are internal, except infeasibility.
fn failed(section: &str, e: Error) -> CliError {
    match e {
        Error::InfeasibleProblem(m) => CliError::Infeasible(format!("{section}: {m}")),
        e => CliError::Internal(format!("{section}: {e}")),
    }
}

fn io_err(path: &std::path::Path, e: impl Display) -> CliError {
    CliError::Internal(format!("{}: {e}", path.display()))
}

fn section<T>(s: &Option<T>, kind: Kind) -> Result<&T, CliError> {
    s.as_ref()
        .ok_or_else(|| CliError::Config(format!("missing [{}] section", kind.section())))
}

/// Runs a parsed scenario and writes `<name>.csv`, `<name>.dat`,
/// `<name>.manifest.toml` and, for kinds with a headline result,
/// `<name>.summary.csv` under `out_dir`.
pub fn run(s: &Scenario) -> Result<RunReport, CliError> {
    let tables = match s.kind {
        Kind::PtEval => pt_eval(section(&s.pt_eval, s.kind)?)?,
        Kind::PwtEval => pwt_eval(section(&s.pwt_eval, s.kind)?)?,
        Kind::Compare => compare(section(&s.compare, s.kind)?)?,
        Kind::McLimit => mc_limit(section(&s.mc_limit, s.kind)?, s.seed)?,
        Kind::ExecDet => exec_det(section(&s.exec_det, s.kind)?)?,
        Kind::ExecStoch => exec_stoch(section(&s.exec_stoch, s.kind)?, s.seed)?,
        Kind::Allocate => allocate(section(&s.allocate, s.kind)?),
    };

    std::fs::create_dir_all(&s.out_dir).map_err(|e| io_err(&s.out_dir, e))?;
    let file = |ext: &str| s.out_dir.join(format!("{}.{ext}", s.name));
    let report = RunReport {
        csv: file("csv"),
        dat: file("dat"),
        manifest: file("manifest.toml"),
        summary: tables.summary.as_ref().map(|_| file("summary.csv")),
        digest: tables.digest,
    };
    tables
        .main
        .write_csv(&report.csv)
        .map_err(|e| io_err(&report.csv, e))?;
    tables
        .main
        .write_dat(&report.dat)
        .map_err(|e| io_err(&report.dat, e))?;
    if let (Some(t), Some(p)) = (&tables.summary, &report.summary) {
        t.write_csv(p).map_err(|e| io_err(p, e))?;
    }
    std::fs::write(&report.manifest, manifest(s)?).map_err(|e| io_err(&report.manifest, e))?;
    Ok(report)
}

/// The scenario as run, with the tool version. Running it again reproduces
/// the CSV byte for byte.
pub fn manifest(s: &Scenario) -> Result<String, CliError> {
    let mut m = s.clone();
    m.manifest = Some(ManifestInfo {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
    });
    toml::to_string(&m).map_err(|e| CliError::Internal(format!("manifest: {e}")))
}

fn f(x: f64) -> Cell {
    Cell::F(x)
}

fn int(x: impl Into<i64>) -> Cell {
    Cell::I(x.into())
}

fn horizon_i64(n: u64, field: &str) -> Result<i64, CliError> {
    i64::try_from(n).map_err(|_| CliError::Config(format!("{field}: {n} is too large")))
}

fn pt_eval(c: &PtEval) -> Result<Tables, CliError> {
    const S: &str = "pt-eval";
    let qs = c.q.expand("pt-eval.q")?;
    let ns = c.horizon.expand("pt-eval.horizon")?;
    let mut params = Vec::with_capacity(qs.len() * ns.len());
    for &n in &ns {
        let n = horizon_i64(n, "pt-eval.horizon")?;
        for &q in &qs {
            params.push(
                TacticParams::new(q, c.q_a, c.spread, n, c.boundary.into())
                    .map_err(|e| invalid_cfg(&format!("{S} at q={q}, N={n}"), e))?,
            );
        }
    }

    let mut t = Table::new([
        "N", "q", "q_a", "g_PT", "h_PT", "IS2_PT", "D2_PT", "var_IS", "var_D", "T_mean",
    ]);
    for p in &params {
        if p.q == qs[0] {
            t.start_block();
        }
        let r = peg::evaluate(p);
        t.push(vec![
            int(p.horizon),
            f(p.q),
            f(p.q_a),
            f(r.g.0),
            f(r.h.0),
            f(r.is_second_moment),
            f(r.d_second_moment),
            f(r.var_is),
            f(r.var_d),
            f(r.mean_wait),
        ]);
    }
    Ok(Tables {
        main: t,
        summary: None,
        digest: vec![format!("{} parameter sets evaluated", params.len())],
    })
}

fn pwt_eval(c: &PwtEval) -> Result<Tables, CliError> {
    const S: &str = "pwt-eval";
    let qs = c.q.expand("pwt-eval.q")?;
    let ns = c.horizon.expand("pwt-eval.horizon")?;
    let ks = c.depth.expand("pwt-eval.depth")?;
    let alpha = c
        .p_continue
        .map(AlphaModel::new)
        .transpose()
        .map_err(|e| invalid_cfg("pwt-eval.p_continue", e))?;
    let mut cfgs = Vec::new();
    for &k in &ks {
        let k = u32::try_from(k)
            .map_err(|_| CliError::Config(format!("pwt-eval.depth: {k} is too large")))?;
        for &n in &ns {
            let n = horizon_i64(n, "pwt-eval.horizon")?;
            for &q in &qs {
                let at = || format!("{S} at q={q}, N={n}, K={k}");
                let p = TacticParams::new(q, c.q_a, c.spread, n, c.boundary.into())
                    .map_err(|e| invalid_cfg(&at(), e))?;
                let mut cfg = PwtConfig::new(p, k).map_err(|e| invalid_cfg(&at(), e))?;
                if let Some(a) = alpha {
                    cfg = cfg.with_alpha(a);
                }
                cfg.validate().map_err(|e| invalid_cfg(&at(), e))?;
                cfgs.push(cfg);
            }
        }
    }

    let mut cols = vec![
        "K", "N", "q", "q_a", "g_PWT", "h_PWT", "IS2_PWT", "D2_PWT", "var_IS", "var_D", "T_mean",
    ];
    if alpha.is_some() {
        cols.push("alpha_gain");
    }
    let mut t = Table::new(cols);
    for cfg in &cfgs {
        if cfg.params.q == qs[0] {
            t.start_block();
        }
        let r = post_wait::evaluate(cfg).map_err(|e| failed(S, e))?;
        let mut row = vec![
            int(cfg.depth),
            int(cfg.params.horizon),
            f(cfg.params.q),
            f(cfg.params.q_a),
            f(r.g.0),
            f(r.h.0),
            f(r.is_second_moment),
            f(r.d_second_moment),
            f(r.var_is),
            f(r.var_d),
            f(r.mean_wait),
        ];
        if let Some(gain) = r.alpha_improvement {
            row.push(f(gain));
        }
        t.push(row);
    }
    Ok(Tables {
        main: t,
        summary: None,
        digest: vec![format!("{} configurations evaluated", cfgs.len())],
    })
}

fn metric_of(m: MetricName) -> (Metric, &'static str) {
    match m {
        MetricName::Shortfall => (Metric::Shortfall, "g"),
        MetricName::SpreadCapture => (Metric::SpreadCapture, "h"),
        MetricName::TotalCost => (Metric::TotalCost, "C"),
    }
}

fn compare(c: &Compare) -> Result<Tables, CliError> {
    const S: &str = "compare";
    let qs = c.q.expand("compare.q")?;
    if qs.windows(2).any(|w| w[1] <= w[0]) || qs.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(CliError::Config(
            "compare.q: grid must be strictly increasing inside (0, 1)".into(),
        ));
    }
    if c.metrics.is_empty() {
        return Err(CliError::Config("compare.metrics: list is empty".into()));
    }
    let base = TacticParams::new(1.0, c.q_a, c.spread, c.horizon as i64, c.boundary.into())
        .map_err(|e| invalid_cfg(S, e))?;
    let w = CostWeights::new(c.rho, c.lambda).map_err(|e| invalid_cfg(S, e))?;
    let mut tactics = vec![Tactic::Peg];
    for &k in &c.depths {
        let t = Tactic::PostWait { depth: k };
        if tactics.contains(&t) {
            return Err(CliError::Config(format!(
                "compare.depths: depth {k} listed twice"
            )));
        }
        PwtConfig::new(base, k).map_err(|e| invalid_cfg("compare.depths", e))?;
        tactics.push(t);
    }

    let curves: Vec<TacticCurve> = tactics
        .iter()
        .map(|&t| build_curve(t, &base, &w, &qs))
        .collect::<Result<_, _>>()
        .map_err(|e| failed(S, e))?;

    let mut cols = vec!["q".to_string(), "q_a".into(), "clamped".into()];
    for cv in &curves {
        for &m in &c.metrics {
            cols.push(format!("{}_{}", metric_of(m).1, cv.tactic.label()));
        }
    }
    let mut t = Table::new(cols);
    for i in 0..qs.len() {
        let p0 = curves[0].points[i];
        let mut row = vec![f(p0.q), f(p0.q_a), Cell::B(p0.clamped)];
        for cv in &curves {
            for &m in &c.metrics {
                row.push(f(cv.points[i].metric(metric_of(m).0)));
            }
        }
        t.push(row);
    }

    let mut sum = Table::new(["metric", "tactic_A", "tactic_B", "q_lo", "q_hi", "q_c"]);
    let mut digest = Vec::new();
    for &m in &c.metrics {
        let (metric, label) = metric_of(m);
        for other in &curves[1..] {
            let xs = crossing_points(&curves[0], other, metric).map_err(|e| failed(S, e))?;
            for x in &xs {
                sum.push(vec![
                    Cell::S(label.into()),
                    Cell::S(curves[0].tactic.label()),
                    Cell::S(other.tactic.label()),
                    f(x.q_lo),
                    f(x.q_hi),
                    f(x.q),
                ]);
            }
            digest.push(format!(
                "{label}: {} vs {} crossings at q = [{}]",
                curves[0].tactic.label(),
                other.tactic.label(),
                xs.iter()
                    .map(|x| crate::output::fmt_sig(x.q))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
    }
    Ok(Tables {
        main: t,
        summary: Some(sum),
        digest,
    })
}

fn mc_limit(c: &McLimit, seed: u64) -> Result<Tables, CliError> {
    const S: &str = "mc-limit";
    let tactic = match (c.tactic, c.depth) {
        (TacticName::PT, None) => Tactic::Peg,
        (TacticName::PT, Some(_)) => {
            return Err(CliError::Config(
                "mc-limit.depth: only valid with tactic = \"PWT\"".into(),
            ))
        }
        (TacticName::PWT, Some(depth)) => Tactic::PostWait { depth },
        (TacticName::PWT, None) => {
            return Err(CliError::Config(
                "mc-limit.depth: required with tactic = \"PWT\"".into(),
            ))
        }
    };
    if c.n_mc == 0 {
        return Err(CliError::Config("mc-limit.n_mc: must be at least 1".into()));
    }
    let bc: BoundaryCondition = c.boundary.into();
    let qs = c.q.expand("mc-limit.q")?;
    let spread = DiscreteDist::new(
        c.spread_atoms
            .iter()
            .map(|&[m, p]| (m * c.spread, p))
            .collect(),
    )
    .map_err(|e| invalid_cfg("mc-limit.spread_atoms", e))?;
    let mut points = Vec::with_capacity(qs.len());
    for &q in &qs {
        let at = format!("{S} at q={q}");
        let reference = TacticParams::new(q, c.q_a, c.spread, c.horizon as i64, bc)
            .map_err(|e| invalid_cfg(&at, e))?;
        let dists = ParamDists::new(
            DiscreteDist::triplet(q, c.q_step, c.q_weight).map_err(|e| invalid_cfg(&at, e))?,
            DiscreteDist::triplet(c.q_a, c.q_a_step, c.q_a_weight)
                .map_err(|e| invalid_cfg(&at, e))?,
            spread.clone(),
        )
        .map_err(|e| invalid_cfg(&at, e))?;
        if let Tactic::PostWait { depth } = tactic {
            PwtConfig::new(reference, depth).map_err(|e| invalid_cfg(&at, e))?;
        }
        points.push((reference, dists));
    }

    let mut t = Table::new([
        "q",
        "IS_MC",
        "IS_MC_se",
        "D_MC",
        "D_MC_se",
        "IS_mix",
        "D_mix",
        "IS",
        "D",
        "rejection",
    ]);
    for (p, dists) in &points {
        let r = simulate_tactic(tactic, bc, c.horizon, dists, c.n_mc, seed)
            .map_err(|e| failed(S, e))?;
        let (is_mix, d_mix) =
            mixture_expectation(tactic, bc, c.horizon, dists).map_err(|e| failed(S, e))?;
        let unit = TacticParams { spread: 1.0, ..*p };
        let (g, h) = tactic.evaluate(&unit).map_err(|e| failed(S, e))?;
        t.push(vec![
            f(p.q),
            f(r.is.mean),
            f(r.is.std_error),
            f(r.d.mean),
            f(r.d.std_error),
            f(is_mix),
            f(d_mix),
            f(g.in_price(p.spread)),
            f(h.in_price(p.spread)),
            f(r.rejection_rate),
        ]);
    }
    Ok(Tables {
        main: t,
        summary: None,
        digest: vec![format!(
            "{} points x {} samples, seed {seed}",
            points.len(),
            c.n_mc
        )],
    })
}

struct Market {
    x0: f64,
    horizon: u64,
    liquidity: f64,
    zeta: f64,
    beta: f64,
    d_min: u64,
    uniform_mode: crate::config::UniformModeCfg,
    uniform_kernel: KernelCfg,
}

impl Market {
    fn problem(&self, kernel: KernelCfg, section: &str) -> Result<ExecProblem, CliError> {
        let impact = ImpactSpec::new(self.zeta, self.beta).map_err(|e| invalid_cfg(section, e))?;
        let k = kernel.build().map_err(|e| invalid_cfg(section, e))?;
        let u = self
            .uniform_kernel
            .build()
            .map_err(|e| invalid_cfg(&format!("{section}.uniform_kernel"), e))?;
        let p = ExecProblem::new(
            self.x0,
            self.horizon,
            self.liquidity,
            impact,
            k,
            u,
            self.d_min,
        )
        .map_err(|e| invalid_cfg(section, e))?
        .with_uniform_mode(self.uniform_mode.into());
        let cap = p.liquidity * p.horizon as f64;
        if p.x0 > cap {
            return Err(CliError::Infeasible(format!(
                "{section}: X0={} exceeds L*T={cap}",
                p.x0
            )));
        }
        Ok(p)
    }
}

fn check_delays(d: &[u64], horizon: u64, field: &str) -> Result<(), CliError> {
    match d.iter().find(|&&d| d < 1 || d > horizon) {
        Some(bad) => Err(CliError::Config(format!(
            "{field}: delay {bad} is outside [1, {horizon}]"
        ))),
        None => Ok(()),
    }
}

fn kernel_label(k: KernelCfg) -> &'static str {
    match k {
        KernelCfg::Instantaneous => "inst",
        KernelCfg::Exponential { .. } => "exp",
        KernelCfg::Power { .. } => "pow",
    }
}

fn exec_det(c: &ExecDet) -> Result<Tables, CliError> {
    const S: &str = "exec-det";
    let m = Market {
        x0: c.x0,
        horizon: c.horizon,
        liquidity: c.liquidity,
        zeta: c.zeta,
        beta: c.beta,
        d_min: c.d_min,
        uniform_mode: c.uniform_mode,
        uniform_kernel: c.uniform_kernel,
    };
    let ds = c.d.expand("exec-det.d")?;
    check_delays(&ds, c.horizon, "exec-det.d")?;
    if c.kernels.is_empty() {
        return Err(CliError::Config("exec-det.kernels: list is empty".into()));
    }
    let mut probs = Vec::new();
    for (i, &k) in c.kernels.iter().enumerate() {
        let label = kernel_label(k);
        if c.kernels[..i].iter().any(|&o| kernel_label(o) == label) {
            return Err(CliError::Config(format!(
                "exec-det.kernels: more than one {label} kernel"
            )));
        }
        probs.push((label, m.problem(k, &format!("{S}.kernels[{i}]"))?));
    }

    let mut optima = Vec::new();
    for (label, p) in &probs {
        optima.push((
            *label,
            optimize_deterministic(p, &ds).map_err(|e| failed(S, e))?,
        ));
    }

    let mut cols = vec!["d".to_string()];
    for (label, _) in &optima {
        for c in ["cost", "rho_b", "rho_u", "full_cap"] {
            cols.push(format!("{c}_{label}"));
        }
    }
    let mut t = Table::new(cols);
    for (i, &d) in ds.iter().enumerate() {
        let mut row = vec![int(d as i64)];
        for (_, o) in &optima {
            let sp = &o.surface[i];
            row.extend([
                f(sp.cost),
                f(sp.plan.rho_b),
                f(sp.plan.rho_u),
                Cell::B(sp.full_cap_ok),
            ]);
        }
        t.push(row);
    }

    let mut sum = Table::new(["kernel", "rho_b", "d", "N_b", "rho_u", "X_b", "X_u", "cost"]);
    let mut digest = Vec::new();
    for (label, o) in &optima {
        let p = o.plan;
        sum.push(vec![
            Cell::S((*label).into()),
            f(p.rho_b),
            f(p.d),
            f(p.n_b),
            f(p.rho_u),
            f(p.x_b),
            f(p.x_u),
            f(o.cost),
        ]);
        digest.push(format!(
            "{label}: rho_b = {}, d = {}, cost = {}",
            crate::output::fmt_sig(p.rho_b),
            crate::output::fmt_sig(p.d),
            crate::output::fmt_sig(o.cost)
        ));
    }
    Ok(Tables {
        main: t,
        summary: Some(sum),
        digest,
    })
}

fn exec_stoch(c: &ExecStoch, seed: u64) -> Result<Tables, CliError> {
    const S: &str = "exec-stoch";
    let m = Market {
        x0: c.x0,
        horizon: c.horizon,
        liquidity: c.liquidity,
        zeta: c.zeta,
        beta: c.beta,
        d_min: c.d_min,
        uniform_mode: c.uniform_mode,
        uniform_kernel: c.uniform_kernel,
    };
    let prob = m.problem(c.kernel, S)?;
    let v0s = c.v0.expand("exec-stoch.v0")?;
    if let Some(v) = v0s.iter().find(|&&v| v < 0.0) {
        return Err(CliError::Config(format!(
            "exec-stoch.v0: threshold {v} is negative"
        )));
    }
    let ds = c.d.expand("exec-stoch.d")?;
    check_delays(&ds, c.horizon, "exec-stoch.d")?;
    if c.n_mc == 0 {
        return Err(CliError::Config(
            "exec-stoch.n_mc: must be at least 1".into(),
        ));
    }
    let dist: VolumeDist = c.volume.into();
    dist.validate()
        .map_err(|e| invalid_cfg("exec-stoch.volume", e))?;

    let o = optimize_stochastic(dist, &v0s, &ds, &prob, c.n_mc, seed).map_err(|e| failed(S, e))?;

    let mut t = Table::new(["v0", "d", "cost", "cost_se", "C_b", "X_b"]);
    for (i, p) in o.surface.iter().enumerate() {
        if i % ds.len() == 0 {
            t.start_block();
        }
        t.push(vec![
            f(p.params.v0),
            int(p.params.d as i64),
            f(p.estimate.total.mean),
            f(p.estimate.total.std_error),
            f(p.estimate.c_b.mean),
            f(p.estimate.x_b.mean),
        ]);
    }
    let e = o.best_estimate;
    let mut sum = Table::new(["kernel", "v0", "d", "cost", "cost_se", "X_b"]);
    sum.push(vec![
        Cell::S(kernel_label(c.kernel).into()),
        f(o.best.v0),
        int(o.best.d as i64),
        f(e.total.mean),
        f(e.total.std_error),
        f(e.x_b.mean),
    ]);
    Ok(Tables {
        main: t,
        summary: Some(sum),
        digest: vec![format!(
            "{}: v0 = {}, d = {}, cost = {} +- {}",
            kernel_label(c.kernel),
            crate::output::fmt_sig(o.best.v0),
            o.best.d,
            crate::output::fmt_sig(e.total.mean),
            crate::output::fmt_sig(e.total.std_error)
        )],
    })
}

fn allocate(c: &Allocate) -> Tables {
    let mut t = Table::new(["position", "rank", "tactic", "aggressiveness"]);
    for &p in &c.positions {
        for (rank, choice) in select_tactic_with_depth(p.into(), c.pwt_depth)
            .into_iter()
            .enumerate()
        {
            t.push(vec![
                Cell::S(p.label().into()),
                int(rank as i64 + 1),
                Cell::S(choice.label()),
                int(choice.aggressiveness()),
            ]);
        }
    }
    Tables {
        digest: vec![format!("{} positions", c.positions.len())],
        main: t,
        summary: None,
    }
}
