//! Identity suites, cross-implementation checks and oracle comparisons.

use std::collections::BTreeMap;
use std::time::Instant;

use polaron_qme::bath::{self, super_ohmic, Bath, Tau};
use polaron_qme::dynamics::{mfg_state, spectral_decompose, steady_state};
use polaron_qme::generators::{spin_boson, Frame, Generator, GeneratorKind};
use polaron_qme::linalg::{self, pauli_z};
use polaron_qme::model::{BathSpec, Model, SpectralDensity};
use polaron_qme::oracle::{discrete_correlation, discretize_bath_to};
use serde::Serialize;

use crate::error::CliError;

/// Inverse temperatures `β·δE_21` of the identity suites.
pub const BETAS_GAP: [f64; 3] = [1.4, 2.8, 5.6];
pub const GAMMAS: [f64; 3] = [0.05, 0.3, 1.0];
const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `δE_21` of the unit spin-boson model.
pub fn unit_gap() -> f64 {
    2.0 * SQRT2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    /// `true` when `measured` must be at least `tolerance` rather than at most.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub lower_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub runtime_ms: f64,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            lower_bound: false,
            detail: None,
            runtime_ms: 0.0,
        }
    }

    fn at_least(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { passed: measured >= tolerance, lower_bound: true, ..Self::at_most(name, measured, tolerance) }
    }

    fn failed(name: &str, tolerance: f64, e: impl std::fmt::Display) -> Self {
        Self { passed: false, measured: f64::NAN, detail: Some(e.to_string()), ..Self::at_most(name, f64::NAN, tolerance) }
    }

    fn with_detail(mut self, d: String) -> Self {
        self.detail = Some(d);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn spin_boson_model(gamma: f64, beta: f64, h: f64) -> polaron_qme::Result<Model> {
    Model::spin_boson(1.0, h, BathSpec::new(beta, SpectralDensity::super_ohmic(gamma, 1.0)?)?)
}

fn unit_bath(gamma: f64, beta: f64) -> polaron_qme::Result<Bath> {
    Bath::new(&BathSpec::new(beta, SpectralDensity::super_ohmic(gamma, 1.0)?)?)
}

/// The 40-point `λ` grid spanning both signs of the relevant transition energies.
pub fn lambda_grid() -> Vec<f64> {
    (0..40).map(|k| -4.0 + 8.0 * (k as f64 + 0.5) / 40.0).collect()
}

/// Largest relative violation of `Re W(λ) e^{βλ} = Re W(−λ)` over the grid.
pub fn detailed_balance_violation(gamma: f64, beta: f64) -> polaron_qme::Result<f64> {
    let bath = unit_bath(gamma, beta)?;
    let mut worst: f64 = 0.0;
    for lambda in lambda_grid() {
        let plus = bath.half_fourier(2.0, -2.0, lambda)?.re;
        let minus = bath.half_fourier(2.0, -2.0, -lambda)?.re;
        worst = worst.max((plus * (beta * lambda).exp() - minus).abs() / minus.abs().max(1e-300));
    }
    Ok(worst)
}

/// Largest relative mismatch between the imaginary-time integral and the real-time transforms.
pub fn imaginary_time_violation(gamma: f64, beta: f64) -> polaron_qme::Result<f64> {
    let bath = unit_bath(gamma, beta)?;
    let mut worst: f64 = 0.0;
    for (d, dp) in [(2.0, 2.0), (2.0, -2.0)] {
        for lambda in lambda_grid() {
            let lhs = bath.imag_time_integral(d, dp, lambda)?;
            let rhs = bath.half_fourier(d, dp, lambda)?.im + (-beta * lambda).exp() * bath.half_fourier(dp, d, -lambda)?.im;
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1e-12));
        }
    }
    Ok(worst)
}

/// Relative deviation of closed-form `κ` and `ξ` values from their quadrature counterparts.
pub fn compare_closed_form(kappa_closed: f64, kappa_quad: f64, xi_closed: f64, xi_quad: f64, tolerance: f64) -> Check {
    let dk = (kappa_closed - kappa_quad).abs() / kappa_quad.abs();
    let dx = (xi_closed - xi_quad).abs() / xi_quad.abs();
    Check::at_most("closed_form", dk.max(dx), tolerance).with_detail(format!("kappa rel {dk:.3e}, xi rel {dx:.3e}"))
}

/// Spin-boson `κ = exp(−2K)` and `ξ` from the closed forms and from quadrature.
pub fn closed_form_values(gamma: f64, beta: f64) -> polaron_qme::Result<[f64; 4]> {
    let spec = BathSpec::new(beta, SpectralDensity::super_ohmic(gamma, 1.0)?)?;
    let k_closed = super_ohmic::coth_integral(gamma, 1.0, beta)?;
    let k_quad = bath::coth_integral(&spec)?;
    Ok([
        (-2.0 * k_closed).exp(),
        (-2.0 * k_quad).exp(),
        super_ohmic::reorganization(gamma, 1.0),
        bath::reorganization_integral(spec.density())?,
    ])
}

/// Largest element-wise deviation between the general and the explicit spin-boson tensors.
pub fn tensor_deviation(gamma: f64, beta: f64) -> polaron_qme::Result<f64> {
    let h = 0.8;
    let g = Generator::build(GeneratorKind::PtCcqme, &spin_boson_model(gamma, beta, h)?)?;
    let reference = spin_boson::reference(1.0, h, &g.bath)?;
    let t = g.set.eig.superoperator_transform();
    let r = t.adjoint() * &g.redfield.matrix * &t;
    let q = t.adjoint() * &g.q.as_ref().expect("PT-CCQME carries Q").q.matrix * &t;
    Ok(linalg::max_abs(&(r - &reference.r)).max(linalg::max_abs(&(q - &reference.q))))
}

/// `(|μ₀|, g)` for one generator.
pub fn zero_mode(kind: GeneratorKind, model: &Model) -> polaron_qme::Result<(f64, f64)> {
    let s = spectral_decompose(&Generator::build(kind, model)?.liouvillian, None)?;
    Ok((s.mu0().norm(), s.gap))
}

/// `‖L[ρ_MFG]‖` for each `h` and the least-squares slope of its logarithm in `ln h`.
pub fn residual_exponent(gamma: f64, beta: f64, hs: &[f64]) -> polaron_qme::Result<(f64, Vec<f64>)> {
    let mut residuals = vec![];
    for &h in hs {
        let g = Generator::build(GeneratorKind::PtCcqme, &spin_boson_model(gamma, beta, h)?)?;
        residuals.push(g.liouvillian.apply(mfg_state(&g)?.matrix()).norm());
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok((sxy / sxx, residuals))
}

/// Steady `⟨σ_z⟩` of one generator.
pub fn steady_sigma_z(kind: GeneratorKind, model: &Model) -> polaron_qme::Result<f64> {
    Ok(steady_state(&Generator::build(kind, model)?.liouvillian)?.expectation(&pauli_z()).re)
}

/// `⟨σ_z⟩` of the Gibbs state of `εσ_z + hσ_x`.
pub fn weak_limit_sigma_z(epsilon: f64, h: f64, beta: f64) -> f64 {
    let e = epsilon.hypot(h);
    -(epsilon / e) * (beta * e).tanh()
}

/// Largest trace or Hermiticity defect over the four generators.
pub fn structure_defect(model: &Model) -> polaron_qme::Result<f64> {
    let mut worst: f64 = 0.0;
    for kind in GeneratorKind::ALL {
        let l = Generator::build(kind, model)?.liouvillian;
        worst = worst.max(l.trace_defect()).max(l.hermiticity_defect());
    }
    Ok(worst)
}

/// Population block of `R[G]` with only `Re W` kept, relative to `‖R‖·‖G‖`.
pub fn gibbs_residual(model: &Model) -> polaron_qme::Result<f64> {
    let g = Generator::build(GeneratorKind::PtRedfield, model)?;
    let gibbs = g.gibbs()?;
    let res = polaron_qme::generators::detailed_balance_residual(&g.set, &g.bath, &gibbs)?;
    let scale = g.redfield.matrix.norm() * gibbs.matrix().norm();
    Ok(if res == 0.0 { 0.0 } else { res / scale })
}

/// Continuum versus discrete-sum correlation at `τ = 1` for both channel signs.
pub fn correlation_oracle_deviation(gamma: f64, beta: f64, modes: usize) -> polaron_qme::Result<f64> {
    let b = unit_bath(gamma, beta)?;
    let discrete = discretize_bath_to(b.density(), beta, modes, 1, 40.0)?;
    let mut worst: f64 = 0.0;
    for dp in [2.0, -2.0] {
        let exact = b.correlation(2.0, dp, Tau::Real(1.0))?;
        worst = worst.max((discrete_correlation(&discrete, 2.0, dp, 1.0) - exact).norm());
    }
    Ok(worst)
}

fn timed(name: &str, tolerance: f64, f: impl FnOnce(&str, f64) -> Result<Check, polaron_qme::Error>) -> Check {
    let start = Instant::now();
    let mut c = f(name, tolerance).unwrap_or_else(|e| Check::failed(name, tolerance, e));
    c.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    log::info!("{}: {} ({:.3e} vs {:.3e})", c.name, if c.passed { "pass" } else { "FAIL" }, c.measured, c.tolerance);
    c
}

fn grid() -> Vec<(f64, f64)> {
    GAMMAS.iter().flat_map(|&g| BETAS_GAP.iter().map(move |&b| (g, b / unit_gap()))).collect()
}

/// Default tolerances, keyed by check name.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("closed_form", 1e-8),
        ("detailed_balance", 1e-6),
        ("imaginary_time", 1e-6),
        ("tensor_agreement", 1e-12),
        ("zero_mode", 1e-8),
        ("weak_limit", 1e-3),
        ("residual_exponent", 3.0),
        ("trace_hermiticity", 1e-10),
        ("gibbs_residual", 1e-8),
        ("correlation_oracle", 1e-4),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Runs every check; `overrides` replace default tolerances by name.
pub fn run(overrides: &BTreeMap<String, f64>) -> Result<Report, CliError> {
    let mut tol = default_tolerances();
    for (k, v) in overrides {
        if !tol.contains_key(k) {
            return Err(CliError::Config(format!("unknown tolerance `{k}`; known: {:?}", tol.keys().collect::<Vec<_>>())));
        }
        tol.insert(k.clone(), *v);
    }
    let t = |k: &str| tol[k];
    let checks = vec![
        timed("closed_form", t("closed_form"), |name, tol| {
            let mut worst = Check::at_most(name, 0.0, tol);
            for (g, b) in grid() {
                let [kc, kq, xc, xq] = closed_form_values(g, b)?;
                let c = compare_closed_form(kc, kq, xc, xq, tol);
                if !(c.measured <= worst.measured) {
                    worst = c;
                }
            }
            Ok(worst)
        }),
        timed("detailed_balance", t("detailed_balance"), |name, tol| {
            let worst = grid().into_iter().map(|(g, b)| detailed_balance_violation(g, b)).try_fold(0f64, |a, r| r.map(|x| a.max(x)))?;
            Ok(Check::at_most(name, worst, tol))
        }),
        timed("imaginary_time", t("imaginary_time"), |name, tol| {
            let worst = grid().into_iter().map(|(g, b)| imaginary_time_violation(g, b)).try_fold(0f64, |a, r| r.map(|x| a.max(x)))?;
            Ok(Check::at_most(name, worst, tol))
        }),
        timed("tensor_agreement", t("tensor_agreement"), |name, tol| {
            let pts = [(0.1, 2.8), (0.5, 1.0), (1.0, 5.6)];
            let worst = pts.into_iter().map(|(g, b)| tensor_deviation(g, b)).try_fold(0f64, |a, r| r.map(|x| a.max(x)))?;
            Ok(Check::at_most(name, worst, tol))
        }),
        timed("zero_mode", t("zero_mode"), |name, tol| {
            let (mut mu0, mut pt_gap, mut original_gap) = (0f64, f64::INFINITY, f64::INFINITY);
            for (g, b) in grid() {
                let m = spin_boson_model(g, b, 1.0)?;
                for kind in GeneratorKind::ALL {
                    let (z, gap) = zero_mode(kind, &m)?;
                    mu0 = mu0.max(z);
                    match kind.frame() {
                        Frame::Polaron => pt_gap = pt_gap.min(gap),
                        Frame::Original => original_gap = original_gap.min(gap),
                    }
                }
            }
            let mut c = Check::at_most(name, mu0, tol)
                .with_detail(format!("smallest gap: polaron frame {pt_gap:.6e}, original frame {original_gap:.6e}"));
            c.passed &= pt_gap >= 0.0;
            Ok(c)
        }),
        timed("weak_limit", t("weak_limit"), |name, tol| {
            let z = steady_sigma_z(GeneratorKind::PtCcqme, &spin_boson_model(1e-3, 1.0, 1.0)?)?;
            let target = weak_limit_sigma_z(1.0, 1.0, 1.0);
            Ok(Check::at_most(name, (z - target).abs(), tol).with_detail(format!("steady {z:.6}, Gibbs {target:.6}")))
        }),
        timed("residual_exponent", t("residual_exponent"), |name, tol| {
            let (p, r) = residual_exponent(0.1, 2.8, &[0.2, 0.1, 0.05])?;
            Ok(Check::at_least(name, p, tol).with_detail(format!("residuals {:.3e}, {:.3e}, {:.3e} at h = 0.2, 0.1, 0.05", r[0], r[1], r[2])))
        }),
        timed("trace_hermiticity", t("trace_hermiticity"), |name, tol| {
            Ok(Check::at_most(name, structure_defect(&spin_boson_model(0.3, 1.0, 1.0)?)?, tol))
        }),
        timed("gibbs_residual", t("gibbs_residual"), |name, tol| {
            Ok(Check::at_most(name, gibbs_residual(&spin_boson_model(0.1, 2.8, 1.0)?)?, tol))
        }),
        timed("correlation_oracle", t("correlation_oracle"), |name, tol| {
            Ok(Check::at_most(name, correlation_oracle_deviation(0.1, 2.0, 2000)?, tol))
        }),
    ];
    Ok(Report { version: crate::output::VERSION, passed: checks.iter().all(|c| c.passed), checks })
}

/// `⟨σ_z⟩` of the pure-dephasing Gibbs state.
pub fn strong_limit_sigma_z(epsilon: f64, beta: f64) -> f64 {
    -(beta * epsilon).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tampered_kappa_fails_the_closed_form_check() {
        let [kc, kq, xc, xq] = closed_form_values(0.3, 1.0).unwrap();
        assert!(compare_closed_form(kc, kq, xc, xq, 1e-8).passed);
        let tampered = compare_closed_form(kc * 1.01, kq, xc, xq, 1e-8);
        assert!(!tampered.passed);
        assert!((tampered.measured - 0.01).abs() < 1e-6);
    }

    #[test]
    fn overrides_are_honored() {
        let mut o = BTreeMap::new();
        o.insert("bogus".to_string(), 1.0);
        assert!(matches!(run(&o), Err(CliError::Config(_))));
    }

    #[test]
    fn tolerance_override_flips_a_check() {
        let c = compare_closed_form(1.0, 1.0 + 1e-9, 1.0, 1.0, 1e-10);
        assert!(!c.passed);
        assert!(compare_closed_form(1.0, 1.0 + 1e-9, 1.0, 1.0, 1e-8).passed);
    }

    #[test]
    fn weak_limit_closed_form() {
        assert!((weak_limit_sigma_z(1.0, 1.0, 1.0) + 0.628183).abs() < 1e-6);
        assert!((strong_limit_sigma_z(1.0, 1.0) + 0.761594).abs() < 1e-6);
    }

    #[test]
    fn residual_shrinks_faster_than_h_cubed() {
        let (p, r) = residual_exponent(0.1, 2.8, &[0.2, 0.1]).unwrap();
        assert!(p > 3.0 && r[1] < r[0]);
    }
}
