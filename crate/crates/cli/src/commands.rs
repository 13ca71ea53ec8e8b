//! Subcommand dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use polaron_qme::bath::{Bath, ChannelPair, CorrelationTable, Tau};
use polaron_qme::dynamics::{self, mfg_state, propagate, steady_state};
use polaron_qme::generators::Generator;
use polaron_qme::linalg::CMatrix;
use polaron_qme::oracle::{discretize_bath, exact_evolve};
use polaron_qme::polaron::{diagonalize, PolaronFrame};
use serde_json::{json, Value};

use crate::config::{bare_gap, OracleConfig, RunConfig, Units};
use crate::error::CliError;
use crate::experiments::{dynamics_compare, gap_scan, positivity_scan, sigma_z_operator, ScanConfig};
use crate::output::{num, opt, write_json, write_table, Table};
use crate::presets::Preset;
use crate::validate;

#[derive(Debug, Parser)]
#[command(name = "polaron", version, about = "Polaron-frame master equations for N-level systems in a bosonic bath")]
pub struct Cli {
    /// JSON run configuration; its fields override the preset's.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; tables go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Bath correlation functions `C(τ)` and their half-sided transforms.
    Correlation,
    /// Polaron-frame Hamiltonian, renormalizations and spectrum.
    Frame,
    /// Dumps `R`, `Q` and `L` of the configured method.
    Generator,
    /// Propagates the initial state.
    Evolve,
    /// Steady state, mean-force Gibbs state and limiting anchors.
    Steady,
    /// Minimum eigenvalue of `ρ(t)` over a `(γ, β)` grid.
    PositivityScan,
    /// `⟨σ_z⟩(t)` for every method plus equilibrium anchors.
    DynamicsCompare,
    /// Liouvillian gap over a `(γ, β)` grid.
    GapScan,
    /// Exact diagonalization with a discretized bath.
    Oracle,
    /// Runs the identity and agreement suites.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Correlation => "correlation",
            Self::Frame => "frame",
            Self::Generator => "generator",
            Self::Evolve => "evolve",
            Self::Steady => "steady",
            Self::PositivityScan => "positivity-scan",
            Self::DynamicsCompare => "dynamics-compare",
            Self::GapScan => "gap-scan",
            Self::Oracle => "oracle",
            Self::Validate => "validate",
        }
    }
}

impl Cli {
    /// Preset overlaid with the config file.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let base = self.preset.map(Preset::config).unwrap_or_default();
        Ok(match &self.config {
            Some(path) => base.overlay(RunConfig::load(path)?),
            None => base,
        })
    }

    pub fn workers(&self) -> Result<usize, CliError> {
        match self.workers {
            Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve()?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Correlation => correlation(&cfg, out),
        Command::Frame => frame(&cfg, out),
        Command::Generator => generator(&cfg, out),
        Command::Evolve => evolve(&cfg, out),
        Command::Steady => steady(&cfg, out),
        Command::PositivityScan => {
            let scan = ScanConfig::new(cfg.clone(), cli.workers()?)?;
            let mut t = Table::new(&["method", "gamma", "beta", "min_eig", "gap", "runtime_ms", "error"]);
            for r in positivity_scan(&scan)? {
                t.push(vec![
                    r.method.to_string(),
                    num(r.gamma),
                    num(r.beta),
                    opt(r.min_eig),
                    opt(r.gap),
                    format!("{:.1}", r.runtime_ms),
                    r.error.unwrap_or_default(),
                ]);
            }
            write_table(out, "positivity", cli.command.name(), &t, &cfg, Value::Null)
        }
        Command::GapScan => {
            let scan = ScanConfig::new(cfg.clone(), cli.workers()?)?;
            let mut t = Table::new(&["method", "gamma", "beta", "gap", "re_mu1", "im_mu1", "error"]);
            for r in gap_scan(&scan)? {
                t.push(vec![
                    r.method.to_string(),
                    num(r.gamma),
                    num(r.beta),
                    opt(r.gap),
                    opt(r.re_mu1),
                    opt(r.im_mu1),
                    r.error.unwrap_or_default(),
                ]);
            }
            write_table(out, "gap_scan", cli.command.name(), &t, &cfg, Value::Null)
        }
        Command::DynamicsCompare => {
            let scan = ScanConfig::new(cfg.clone(), cli.workers()?)?;
            let (series, anchors) = dynamics_compare(&scan)?;
            let mut t = Table::new(&["method", "gamma", "beta", "t", "re_sigma_z", "unphysical", "error"]);
            for s in &series {
                if let Some(e) = &s.error {
                    t.push(vec![s.method.to_string(), num(s.gamma), num(s.beta), String::new(), String::new(), String::new(), e.clone()]);
                }
                for (time, z) in s.times.iter().zip(&s.sigma_z) {
                    t.push(vec![
                        s.method.to_string(),
                        num(s.gamma),
                        num(s.beta),
                        num(*time),
                        num(*z),
                        s.unphysical.to_string(),
                        String::new(),
                    ]);
                }
            }
            let mut a = Table::new(&["gamma", "beta", "weak_gibbs", "strong_mfg"]);
            for x in &anchors {
                a.push(vec![num(x.gamma), num(x.beta), num(x.weak_gibbs), num(x.strong_mfg)]);
            }
            if out.is_none() {
                return write_table(None, "dynamics", cli.command.name(), &t, &cfg, Value::Null);
            }
            write_table(out, "dynamics", cli.command.name(), &t, &cfg, Value::Null)?;
            write_table(out, "anchors", cli.command.name(), &a, &cfg, Value::Null)
        }
        Command::Oracle => oracle(&cfg, out),
        Command::Validate => {
            let report = validate::run(&cfg.tolerances)?;
            write_json(out, "validate", &report)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(CliError::Validation(failed.join(", ")))
            }
        }
    }
}

/// Row-major `[re, im]` pairs.
pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect())).collect())
}

/// Time unit of the config: `1/δE_21` in gap units.
fn time_unit(cfg: &RunConfig, model: &polaron_qme::model::Model) -> Result<f64, CliError> {
    Ok(match cfg.units() {
        Units::Absolute => 1.0,
        Units::Gap => bare_gap(model)?,
    })
}

fn correlation(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let bath = Bath::new(&model.bath)?;
    let frame = PolaronFrame::new(&model.system, &bath)?;
    let eig = diagonalize(&frame)?;
    let table = CorrelationTable::from_bath(&model.system, bath);
    let taus = cfg.taus.clone().unwrap_or_else(|| (0..=40).map(|k| 0.25 * k as f64).collect());
    let mut lambdas: Vec<f64> = vec![];
    for i in 0..eig.dim() {
        for j in 0..eig.dim() {
            let w = eig.gap(i, j);
            if i != j && !lambdas.iter().any(|&x| (x - w).abs() < 1e-12) {
                lambdas.push(w);
            }
        }
    }
    lambdas.sort_by(f64::total_cmp);

    let mut c = Table::new(&["channel", "tau", "re_c", "im_c"]);
    let mut w = Table::new(&["channel", "lambda", "re_w", "im_w", "re_dw", "im_dw"]);
    for a in &frame.channels {
        for b in &frame.channels {
            let pair = ChannelPair::new(&model.system, (a.m, a.n), (b.m, b.n))?;
            let label = format!("{}{}|{}{}", a.m, a.n, b.m, b.n);
            for &tau in &taus {
                let v = table.correlation(&pair, Tau::Real(tau))?;
                c.push(vec![label.clone(), num(tau), num(v.re), num(v.im)]);
            }
            for &lambda in &lambdas {
                let v = table.w(&pair, lambda)?;
                let d = table.dw(&pair, lambda)?;
                w.push(vec![label.clone(), num(lambda), num(v.re), num(v.im), num(d.re), num(d.im)]);
            }
        }
    }
    let bath = table.bath();
    for &tau in &taus {
        let v = bath.gaussian_correlation(tau)?;
        c.push(vec!["gaussian".into(), num(tau), num(v.re), num(v.im)]);
    }
    for &lambda in &lambdas {
        let v = bath.gaussian_half_fourier(lambda)?;
        let d = bath.gaussian_half_fourier_derivative(lambda)?;
        w.push(vec!["gaussian".into(), num(lambda), num(v.re), num(v.im), num(d.re), num(d.im)]);
    }
    let extra = json!({ "closed_form": bath.closed_form_report() });
    write_table(out, "correlation", "correlation", &c, cfg, extra.clone())?;
    if out.is_some() {
        write_table(out, "transform", "correlation", &w, cfg, extra)?;
    }
    Ok(())
}

fn frame(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let bath = Bath::new(&model.bath)?;
    let frame = PolaronFrame::new(&model.system, &bath)?;
    let eig = diagonalize(&frame)?;
    let n = frame.dim();
    let kappa: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| frame.kappa[(i, j)]).collect()).collect();
    let doc = json!({
        "tildeHS": matrix_json(&frame.tilde_hs),
        "kappa": kappa,
        "eigenvalues": eig.energies,
        "deltaE21": if n > 1 { eig.energies[1] - eig.energies[0] } else { 0.0 },
        "shift": frame.shift,
    });
    write_json(out, "frame", &doc)
}

fn generator(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let g = Generator::build(cfg.method(), &model)?;
    let doc = json!({
        "method": g.kind,
        "basis": format!("{:?}", g.liouvillian.basis).to_lowercase(),
        "frame": format!("{:?}", g.liouvillian.frame).to_lowercase(),
        "vectorization": "column-stacked",
        "R": matrix_json(&g.redfield.matrix),
        "Q": g.q.as_ref().map(|q| matrix_json(&q.q.matrix)),
        "L": matrix_json(&g.liouvillian.matrix),
    });
    write_json(out, "generator", &doc)
}

fn evolve(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let g = Generator::build(cfg.method(), &model)?;
    let (t_max, dt) = cfg.window(&model)?;
    let rho0 = cfg.initial_state(model.system.dim())?;
    let traj = propagate(&g.liouvillian, &rho0, t_max, dt)?;
    let unit = time_unit(cfg, &model)?;
    let z = traj.expectation(&sigma_z_operator(model.system.dim()));
    let traces = traj.traces();
    let mins = traj.min_eigenvalues()?;
    let mut t = Table::new(&["t", "re_sigma_z", "trace", "min_eig"]);
    for k in 0..traj.len() {
        t.push(vec![num(traj.times[k] * unit), num(z[k].re), num(traces[k]), num(mins[k])]);
    }
    let extra = json!({ "method": g.kind, "max_trace_drift": traj.max_trace_drift() });
    write_table(out, "evolve", "evolve", &t, cfg, extra)
}

fn steady(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let g = Generator::build(cfg.method(), &model)?;
    let op = sigma_z_operator(model.system.dim());
    let ss = steady_state(&g.liouvillian)?;
    let mfg = mfg_state(&g)?;
    let beta = model.bath.beta();
    let weak = dynamics::weak_limit_state(&model.system, beta)?;
    let strong = dynamics::strong_limit_state(&model.system, beta)?;
    let doc = json!({
        "method": g.kind,
        "rho": matrix_json(ss.matrix()),
        "sigma_z": ss.expectation(&op).re,
        "min_eig": ss.min_eigenvalue()?,
        "mfg": { "rho": matrix_json(mfg.matrix()), "sigma_z": mfg.expectation(&op).re },
        "weak_limit_sigma_z": weak.expectation(&op).re,
        "strong_limit_sigma_z": strong.expectation(&op).re,
    });
    write_json(out, "steady", &doc)
}

fn oracle(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let model = cfg.model()?;
    let OracleConfig { modes, cutoff } = cfg.oracle.unwrap_or(OracleConfig { modes: 4, cutoff: 4 });
    if modes == 0 || cutoff == 0 {
        return Err(CliError::Config("oracle needs modes ≥ 1 and cutoff ≥ 1".into()));
    }
    let (t_max, dt) = cfg.window(&model)?;
    let rho0 = cfg.initial_state(model.system.dim())?;
    let bath = discretize_bath(model.bath.density(), model.bath.beta(), modes, cutoff)?;
    let ed = exact_evolve(&model.system, &bath, &rho0, t_max, dt)?;
    if let Some(w) = &ed.warning {
        log::warn!("{w}");
    }
    let unit = time_unit(cfg, &model)?;
    let traj = &ed.trajectory;
    let z = traj.expectation(&sigma_z_operator(model.system.dim()));
    let traces = traj.traces();
    let mins = traj.min_eigenvalues()?;
    let mut t = Table::new(&["engine", "t", "re_sigma_z", "trace", "min_eig"]);
    for k in 0..traj.len() {
        t.push(vec!["ed".into(), num(traj.times[k] * unit), num(z[k].re), num(traces[k]), num(mins[k])]);
    }
    let extra = json!({
        "dimension": ed.dimension,
        "recurrence_time": ed.recurrence_time * unit,
        "warning": ed.warning,
    });
    write_table(out, "oracle", "oracle", &t, cfg, extra)
}
