//! Parameter scans over coupling strength and inverse temperature.

use std::time::Instant;

use polaron_qme::bath::Bath;
use polaron_qme::dynamics::{self, min_eig_trajectory, propagate, spectral_decompose};
use polaron_qme::generators::{Generator, GeneratorKind};
use polaron_qme::linalg::{c, CMatrix};
use polaron_qme::model::{Model, SpectralDensityConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{bare_gap, RunConfig, Units};
use crate::error::CliError;

/// `σ_z` on the two lowest sites.
pub fn sigma_z_operator(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(0, 0)] = c(1.0);
    m[(1, 1)] = c(-1.0);
    m
}

/// Resolved scan: the run config plus its grids.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub run: RunConfig,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub methods: Vec<GeneratorKind>,
    pub workers: usize,
}

impl ScanConfig {
    pub fn new(run: RunConfig, workers: usize) -> Result<Self, CliError> {
        let (gammas, betas) = run.grid()?;
        run.omega_c()?;
        if gammas.iter().any(|&g| g < 0.0) || betas.iter().any(|&b| b <= 0.0) {
            return Err(CliError::Config("γ must be non-negative and β positive".into()));
        }
        let methods = run.methods();
        Ok(Self { run, gammas, betas, methods, workers: workers.max(1) })
    }

    /// Grid points in row-major order (β outer, γ inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.betas.iter().flat_map(|&b| self.gammas.iter().map(move |&g| (g, b))).collect()
    }

    /// The run config with this point's `γ` and `β` substituted.
    pub fn point_config(&self, gamma: f64, beta: f64) -> Result<RunConfig, CliError> {
        let mut run = self.run.clone();
        let model = run.model.as_mut().ok_or_else(|| CliError::Config("config has no `model` section".into()))?;
        model.bath.beta = beta;
        if let SpectralDensityConfig::SuperOhmic { gamma: g, .. } = &mut model.bath.spectral_density {
            *g = gamma;
        }
        Ok(run)
    }

    pub fn point_model(&self, gamma: f64, beta: f64) -> Result<Model, CliError> {
        self.point_config(gamma, beta)?.model()
    }

    /// Energy unit for reported rates and times: `δE_21` in gap units, else 1.
    pub fn energy_unit(&self, model: &Model) -> Result<f64, CliError> {
        match self.run.units() {
            Units::Absolute => Ok(1.0),
            Units::Gap => bare_gap(model),
        }
    }

    fn run_points<T: Send>(&self, f: impl Fn(f64, f64) -> Vec<T> + Sync + Send) -> Result<Vec<T>, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", self.workers)))?;
        let points = self.points();
        let total = points.len();
        let done = std::sync::atomic::AtomicUsize::new(0);
        let rows: Vec<Vec<T>> = pool.install(|| {
            points
                .par_iter()
                .map(|&(g, b)| {
                    let out = f(g, b);
                    let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                    log::info!("point {k}/{total} (γ={g}, β={b}) done");
                    out
                })
                .collect()
        });
        Ok(rows.into_iter().flatten().collect())
    }

    /// Builds every requested generator at one point, sharing the bath cache.
    fn generators(&self, model: &Model) -> Vec<(GeneratorKind, Result<Generator, CliError>)> {
        let mut bath = match Bath::new(&model.bath) {
            Ok(b) => b,
            Err(e) => {
                let msg = e.to_string();
                return self.methods.iter().map(|&k| (k, Err(CliError::Numeric(msg.clone())))).collect();
            }
        };
        self.methods
            .iter()
            .map(|&kind| {
                let g = Generator::build_with_bath(kind, &model.system, bath.clone()).map_err(CliError::from);
                if let Ok(g) = &g {
                    bath = g.bath.clone();
                }
                (kind, g)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityRow {
    pub method: GeneratorKind,
    pub gamma: f64,
    pub beta: f64,
    pub min_eig: Option<f64>,
    pub gap: Option<f64>,
    pub runtime_ms: f64,
    pub error: Option<String>,
}

/// Minimum eigenvalue of `ρ(t)` over the window and the Liouvillian gap at every grid point.
pub fn positivity_scan(cfg: &ScanConfig) -> Result<Vec<PositivityRow>, CliError> {
    cfg.run_points(|gamma, beta| {
        let start = Instant::now();
        let fail = |method, error: String, start: Instant| PositivityRow {
            method,
            gamma,
            beta,
            min_eig: None,
            gap: None,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            error: Some(error),
        };
        let model = match cfg.point_model(gamma, beta) {
            Ok(m) => m,
            Err(e) => return cfg.methods.iter().map(|&k| fail(k, e.to_string(), start)).collect(),
        };
        let setup = start.elapsed();
        cfg.generators(&model)
            .into_iter()
            .map(|(kind, g)| {
                let t0 = Instant::now() - setup;
                let g = match g {
                    Ok(g) => g,
                    Err(e) => return fail(kind, e.to_string(), t0),
                };
                let run = || -> Result<(f64, Result<f64, CliError>), CliError> {
                    let (t_max, dt) = cfg.run.window(&model)?;
                    let rho0 = cfg.run.initial_state(model.system.dim())?;
                    let traj = propagate(&g.liouvillian, &rho0, t_max, dt)?;
                    let min_eig = min_eig_trajectory(&traj)?;
                    let unit = cfg.energy_unit(&model)?;
                    let gap = spectral_decompose(&g.liouvillian, None).map(|s| s.gap / unit).map_err(CliError::from);
                    Ok((min_eig, gap))
                };
                match run() {
                    Ok((min_eig, gap)) => PositivityRow {
                        method: kind,
                        gamma,
                        beta,
                        min_eig: Some(min_eig),
                        gap: gap.as_ref().ok().copied(),
                        runtime_ms: t0.elapsed().as_secs_f64() * 1e3,
                        error: gap.err().map(|e| e.to_string()),
                    },
                    Err(e) => fail(kind, e.to_string(), t0),
                }
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub method: GeneratorKind,
    pub gamma: f64,
    pub beta: f64,
    pub gap: Option<f64>,
    pub re_mu1: Option<f64>,
    pub im_mu1: Option<f64>,
    pub error: Option<String>,
}

/// Liouvillian gap `g = −Re μ₁` at every grid point; rates are in the config's units.
pub fn gap_scan(cfg: &ScanConfig) -> Result<Vec<GapRow>, CliError> {
    cfg.run_points(|gamma, beta| {
        let fail = |method, error: String| GapRow { method, gamma, beta, gap: None, re_mu1: None, im_mu1: None, error: Some(error) };
        let model = match cfg.point_model(gamma, beta) {
            Ok(m) => m,
            Err(e) => return cfg.methods.iter().map(|&k| fail(k, e.to_string())).collect(),
        };
        cfg.generators(&model)
            .into_iter()
            .map(|(kind, g)| {
                let run = || -> Result<GapRow, CliError> {
                    let g = g?;
                    let unit = cfg.energy_unit(&model)?;
                    let s = spectral_decompose(&g.liouvillian, None)?;
                    Ok(GapRow {
                        method: kind,
                        gamma,
                        beta,
                        gap: Some(s.gap / unit),
                        re_mu1: Some(s.mu1().re / unit),
                        im_mu1: Some(s.mu1().im / unit),
                        error: None,
                    })
                };
                run().unwrap_or_else(|e| fail(kind, e.to_string()))
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsSeries {
    pub method: GeneratorKind,
    pub gamma: f64,
    pub beta: f64,
    /// Times in the config's units.
    pub times: Vec<f64>,
    pub sigma_z: Vec<f64>,
    /// Whether `|⟨σ_z⟩| > 1` anywhere on the window.
    pub unphysical: bool,
    pub error: Option<String>,
}

/// Equilibrium reference values at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    pub gamma: f64,
    pub beta: f64,
    /// `⟨σ_z⟩` in the Gibbs state of `H_S`.
    pub weak_gibbs: f64,
    /// `⟨σ_z⟩` in the Gibbs state of the pure dephasing Hamiltonian.
    pub strong_mfg: f64,
}

pub fn dynamics_compare(cfg: &ScanConfig) -> Result<(Vec<DynamicsSeries>, Vec<Anchor>), CliError> {
    let mut rows = cfg.run_points(|gamma, beta| {
        let fail = |method, error: String| {
            (Some(DynamicsSeries { method, gamma, beta, times: vec![], sigma_z: vec![], unphysical: false, error: Some(error) }), None)
        };
        let model = match cfg.point_model(gamma, beta) {
            Ok(m) => m,
            Err(e) => return cfg.methods.iter().map(|&k| fail(k, e.to_string())).collect(),
        };
        let op = sigma_z_operator(model.system.dim());
        let anchor = (|| -> Result<Anchor, CliError> {
            let b = model.bath.beta();
            Ok(Anchor {
                gamma,
                beta,
                weak_gibbs: dynamics::weak_limit_state(&model.system, b)?.expectation(&op).re,
                strong_mfg: dynamics::strong_limit_state(&model.system, b)?.expectation(&op).re,
            })
        })();
        let mut out: Vec<(Option<DynamicsSeries>, Option<Anchor>)> = vec![(None, anchor.ok())];
        for (kind, g) in cfg.generators(&model) {
            let run = || -> Result<DynamicsSeries, CliError> {
                let g = g?;
                let (t_max, dt) = cfg.run.window(&model)?;
                let rho0 = cfg.run.initial_state(model.system.dim())?;
                let traj = propagate(&g.liouvillian, &rho0, t_max, dt)?;
                let unit = cfg.energy_unit(&model)?;
                let sigma_z: Vec<f64> = traj.expectation(&op).iter().map(|z| z.re).collect();
                Ok(DynamicsSeries {
                    method: kind,
                    gamma,
                    beta,
                    times: traj.times.iter().map(|t| t * unit).collect(),
                    unphysical: sigma_z.iter().any(|x| x.abs() > 1.0 + 1e-12),
                    sigma_z,
                    error: None,
                })
            };
            out.push(match run() {
                Ok(s) => (Some(s), None),
                Err(e) => fail(kind, e.to_string()),
            });
        }
        out
    })?;
    let anchors = rows.iter_mut().filter_map(|r| r.1.take()).collect();
    let series = rows.into_iter().filter_map(|r| r.0).collect();
    Ok((series, anchors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Axis, GridConfig};
    use crate::presets::Preset;

    fn small(preset: Preset, gammas: Vec<f64>, betas: Vec<f64>) -> ScanConfig {
        let mut run = preset.config();
        run.grid = Some(GridConfig { gammas: Axis::List(gammas), betas: Axis::List(betas) });
        run.time = Some(crate::config::TimeWindow { t_max: 28.0, steps: 1400 });
        ScanConfig::new(run, 2).unwrap()
    }

    #[test]
    fn zero_coupling_never_violates_positivity() {
        let rows = positivity_scan(&small(Preset::Fig1, vec![0.0], vec![2.8])).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!(r.min_eig.unwrap() >= -1e-10, "{:?}", r);
        }
    }

    #[test]
    fn scans_are_deterministic_and_ordered() {
        let cfg = small(Preset::Fig3, vec![0.1, 0.4], vec![1.4, 5.6]);
        let a = gap_scan(&cfg).unwrap();
        let b = gap_scan(&ScanConfig { workers: 1, ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2 * 3);
        assert_eq!((a[0].gamma, a[0].beta, a[0].method), (0.1, 1.4, GeneratorKind::PtCcqme));
        assert_eq!((a[3].gamma, a[3].beta), (0.4, 1.4));
        assert!(a.iter().all(|r| r.error.is_none() && r.gap.unwrap() > 0.0));
    }

    #[test]
    fn zero_coupling_gap_vanishes() {
        let rows = gap_scan(&small(Preset::Fig3, vec![0.0], vec![1.4])).unwrap();
        assert!(rows.iter().all(|r| r.gap.unwrap().abs() < 1e-10));
    }

    #[test]
    fn dynamics_compare_reports_anchors() {
        let (series, anchors) = dynamics_compare(&small(Preset::Fig2, vec![0.05], vec![1.4])).unwrap();
        assert_eq!(series.len(), 4);
        assert_eq!(anchors.len(), 1);
        let beta = 1.4 / (2.0 * 2f64.sqrt());
        let expected = -(1.0 / 2f64.sqrt()) * (2f64.sqrt() * beta).tanh();
        assert!((anchors[0].weak_gibbs - expected).abs() < 1e-12);
        assert!((anchors[0].strong_mfg + beta.tanh()).abs() < 1e-12);
        let s = &series[0];
        assert_eq!(s.times.len(), 1401);
        assert!((s.times[1400] - 28.0).abs() < 1e-9);
        assert_eq!(s.sigma_z[0], 1.0);
    }

    #[test]
    fn failures_become_rows() {
        let mut cfg = small(Preset::Fig1, vec![0.1], vec![1.4]);
        cfg.run.time = None;
        let rows = positivity_scan(&cfg).unwrap();
        assert!(rows.iter().all(|r| r.error.is_some() && r.min_eig.is_none()));
    }
}
