//! Bath-derived scalars and correlation functions.
//!
//! With factorized coupling every polaron-frame correlation function is fixed
//! by two numbers, `d = c_m − c_n` and `d' = c_m' − c_n'`:
//!
//! ```text
//! ln κ_mn  = −(d²/2) K,            K = (1/π) ∫ J/ω² coth(βω/2)
//! ξ_n      = −c_n² (1/π) ∫ J/ω
//! ε(τ)     = d d' E(τ),            E(τ) = (1/π) ∫ J/ω² [coth(βω/2) cos ωτ − i sin ωτ]
//! C(τ)     = κ_mn κ_m'n' [e^{−ε(τ)} − 1]
//! W(λ)     = ∫₀^∞ C(τ) e^{−iλτ} dτ
//! ```
//!
//! `W` is evaluated as the transform of the part of `C` linear in `ε`, done in
//! the frequency domain (a delta term plus a principal-value integral), plus a
//! time-domain integral of the remainder `κκ'(e^{−ε} − 1 + ε)`, which decays
//! like `τ⁻⁴`. The real part of the linear piece satisfies detailed balance
//! exactly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BathSpec, SpectralDensity, SystemSpec};
use crate::quad::Quadrature;
use crate::special::{trigamma, trigamma_complex};

pub use crate::special::trigamma as trigamma_real;

/// Argument of a correlation function: real time, or imaginary time `τ = −iu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Real(f64),
    Imaginary(f64),
}

/// Pair of transition channels `(m,n)` and `(m',n')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub d: f64,
    pub d_prime: f64,
}

impl ChannelPair {
    pub fn new(sys: &SystemSpec, first: (usize, usize), second: (usize, usize)) -> Result<Self> {
        let n = sys.dim();
        for (m, k) in [first, second] {
            if m == k || m >= n || k >= n {
                return Err(Error::Validation(format!("invalid channel ({m},{k}) for dimension {n}")));
            }
        }
        let c = sys.coupling();
        Ok(Self { first, second, d: c[first.0] - c[first.1], d_prime: c[second.0] - c[second.1] })
    }

    /// The pair with the two channels exchanged.
    pub fn swapped(&self) -> Self {
        Self { first: self.second, second: self.first, d: self.d_prime, d_prime: self.d }
    }
}

/// `x/(eˣ − 1)` and its derivative.
fn bernoulli_fn(x: f64) -> (f64, f64) {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        let b = 1.0 - 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0 + x2 * x2 * x2 / 30240.0;
        let db = -0.5 + x / 6.0 - x2 * x / 180.0 + x2 * x2 * x / 5040.0;
        return (b, db);
    }
    if x > 700.0 {
        return (0.0, 0.0);
    }
    let em = x.exp_m1();
    (x / em, (em - x * (em + 1.0)) / (em * em))
}

/// `x coth x`, finite at zero.
fn x_coth_x(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 3.0
    } else {
        x / x.tanh()
    }
}

/// Integration breaks covering the support of `J`.
fn frequency_breaks(density: &SpectralDensity, tau: f64) -> Vec<f64> {
    let scale = density.scale();
    let support = density.support();
    let mut breaks = vec![0.0];
    let mut w = 0.25 * scale;
    while w < support {
        breaks.push(w);
        w *= 2.0;
    }
    breaks.extend(density.kinks());
    if tau.abs() > 0.0 {
        let step = 20.0 / tau.abs();
        let mut w = step;
        while w < support {
            breaks.push(w);
            w += step;
        }
    }
    breaks.push(support);
    breaks.retain(|&x| x <= support);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

fn frequency_quadrature() -> Quadrature {
    Quadrature::new(1e-14, 1e-13).with_max_intervals(20000)
}

/// `K = (1/π) ∫ J/ω² coth(βω/2) dω` by quadrature.
pub fn coth_integral(bath: &BathSpec) -> Result<f64> {
    let d = bath.density();
    let beta = bath.beta();
    let r = frequency_quadrature()
        .integrate_breaks(|w: f64| d.reduced(w) * (2.0 / beta) * x_coth_x(0.5 * beta * w), &frequency_breaks(d, 0.0))
        .map_err(|e| Error::Numeric(format!("∫J/ω² coth(βω/2) failed: {e}")))?;
    Ok(r.value / PI)
}

/// `(1/π) ∫ J/ω dω` by quadrature.
pub fn reorganization_integral(density: &SpectralDensity) -> Result<f64> {
    let r = frequency_quadrature()
        .integrate_breaks(|w: f64| density.reduced(w) * w * w, &frequency_breaks(density, 0.0))
        .map_err(|e| Error::Numeric(format!("∫J/ω failed: {e}")))?;
    Ok(r.value / PI)
}

/// `κ = exp[−(d²/2π) ∫ J/ω² coth(βω/2)]` from the defining integral.
pub fn kappa_pair(d: f64, bath: &BathSpec) -> Result<f64> {
    if d == 0.0 || bath.density().is_zero() {
        return Ok(1.0);
    }
    let k = coth_integral(bath)?;
    if !k.is_finite() {
        return Err(Error::Numeric("the κ integral diverges".into()));
    }
    Ok((-0.5 * d * d * k).exp())
}

/// `ξ_n = −(c_n²/π) ∫ J/ω` from the defining integral.
pub fn xi_shift(cn: f64, density: &SpectralDensity) -> Result<f64> {
    if cn == 0.0 || density.is_zero() {
        return Ok(0.0);
    }
    Ok(-cn * cn * reorganization_integral(density)?)
}

/// `E(τ)` (the exponent per unit `d d'`) by quadrature.
fn unit_exponent_quadrature(bath: &BathSpec, tau: Tau) -> Result<Complex64> {
    let d = bath.density();
    let beta = bath.beta();
    let q = frequency_quadrature();
    match tau {
        Tau::Real(t) => {
            let breaks = frequency_breaks(d, t);
            let r = q
                .integrate_breaks(
                    |w: f64| {
                        let j = d.reduced(w);
                        let (s, cs) = (w * t).sin_cos();
                        Complex64::new(j * (2.0 / beta) * x_coth_x(0.5 * beta * w) * cs, -j * w * s)
                    },
                    &breaks,
                )
                .map_err(|e| Error::Numeric(format!("ε(τ={t}) quadrature failed: {e}")))?;
            Ok(r.value / PI)
        }
        Tau::Imaginary(u) => {
            check_imaginary(u, beta)?;
            let breaks = frequency_breaks(d, 0.0);
            let r = q
                .integrate_breaks(
                    |w: f64| {
                        let den = -(-beta * w).exp_m1();
                        let num = (-w * u).exp() + (-w * (beta - u)).exp();
                        let ratio = if w * beta < 1e-8 { 2.0 / beta } else { w * num / den };
                        d.reduced(w) * ratio
                    },
                    &breaks,
                )
                .map_err(|e| Error::Numeric(format!("ε(−i{u}) quadrature failed: {e}")))?;
            Ok(Complex64::new(r.value / PI, 0.0))
        }
    }
}

fn check_imaginary(u: f64, beta: f64) -> Result<()> {
    if !(0.0..=beta).contains(&u) {
        return Err(Error::Domain(format!("imaginary time u = {u} lies outside [0, β = {beta}]")));
    }
    Ok(())
}

/// `ε^{mn}_{m'n'}(τ)` with `dd'` the product of channel prefactors, by quadrature.
pub fn epsilon_exponent(dd: f64, tau: Tau, bath: &BathSpec) -> Result<Complex64> {
    if dd == 0.0 || bath.density().is_zero() {
        if let Tau::Imaginary(u) = tau {
            check_imaginary(u, bath.beta())?;
        }
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(unit_exponent_quadrature(bath, tau)? * dd)
}

/// Closed trigamma forms for the super-Ohmic density `γ ω³ e^{−ω/ω_c}`.
pub mod super_ohmic {
    use super::*;

    /// `K = (γ/πβ²) [2ψ₁(1/βω_c) − (βω_c)²]`.
    pub fn coth_integral(gamma: f64, omega_c: f64, beta: f64) -> Result<f64> {
        let a = 1.0 / (beta * omega_c);
        Ok(gamma / (PI * beta * beta) * (2.0 * trigamma(a)? - 1.0 / (a * a)))
    }

    /// `(1/π) ∫ J/ω = 2γω_c³/π`.
    pub fn reorganization(gamma: f64, omega_c: f64) -> f64 {
        2.0 * gamma * omega_c.powi(3) / PI
    }

    /// `E(τ) = (γ/πβ²) [ψ₁((1 + iτω_c)/βω_c) + ψ₁(1 + (1 − iτω_c)/βω_c)]`.
    pub fn unit_exponent(gamma: f64, omega_c: f64, beta: f64, tau: Tau) -> Result<Complex64> {
        let bw = beta * omega_c;
        let pre = gamma / (PI * beta * beta);
        match tau {
            Tau::Real(t) => {
                let z1 = Complex64::new(1.0, t * omega_c) / bw;
                let z2 = Complex64::new(1.0, 0.0) + Complex64::new(1.0, -t * omega_c) / bw;
                Ok((trigamma_complex(z1)? + trigamma_complex(z2)?) * pre)
            }
            Tau::Imaginary(u) => {
                check_imaginary(u, beta)?;
                let z1 = (1.0 + u * omega_c) / bw;
                let z2 = 1.0 + (1.0 - u * omega_c) / bw;
                Ok(Complex64::new(pre * (trigamma(z1)? + trigamma(z2)?), 0.0))
            }
        }
    }
}

/// Outcome of comparing the closed forms with the defining integrals.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClosedFormReport {
    pub kappa_rel: f64,
    pub xi_rel: f64,
    pub epsilon_rel: f64,
    pub tolerance: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    W,
    DW,
    GaussW,
    GaussDW,
}

type CacheKey = (Kind, u64, u64, u64);

const CLOSED_FORM_TOLERANCE: f64 = 1e-8;

/// Evaluator for every bath function of one [`BathSpec`], with memoized transforms.
#[derive(Debug)]
pub struct Bath {
    spec: BathSpec,
    k: f64,
    reorg: f64,
    closed_form: Option<ClosedFormReport>,
    use_closed_form: bool,
    cache: RwLock<HashMap<CacheKey, Complex64>>,
}

impl Clone for Bath {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            k: self.k,
            reorg: self.reorg,
            closed_form: self.closed_form.clone(),
            use_closed_form: self.use_closed_form,
            cache: RwLock::new(self.cache.read().unwrap().clone()),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

impl Bath {
    /// Evaluates the defining integrals; for super-Ohmic densities the closed
    /// forms are checked against them and used only if they agree.
    pub fn new(spec: &BathSpec) -> Result<Self> {
        let k_quad = coth_integral(spec)?;
        let reorg_quad = reorganization_integral(spec.density())?;
        let mut bath = Self {
            spec: spec.clone(),
            k: k_quad,
            reorg: reorg_quad,
            closed_form: None,
            use_closed_form: false,
            cache: RwLock::new(HashMap::new()),
        };
        if let SpectralDensity::SuperOhmic { gamma, omega_c } = *spec.density() {
            if gamma > 0.0 {
                let beta = spec.beta();
                let k_closed = super_ohmic::coth_integral(gamma, omega_c, beta)?;
                let r_closed = super_ohmic::reorganization(gamma, omega_c);
                let mut eps_rel: f64 = 0.0;
                let scale = k_quad.abs();
                for tau in [Tau::Real(0.37 / omega_c), Tau::Real(4.1 / omega_c), Tau::Imaginary(beta / 3.0)] {
                    let a = super_ohmic::unit_exponent(gamma, omega_c, beta, tau)?;
                    let b = unit_exponent_quadrature(spec, tau)?;
                    eps_rel = eps_rel.max((a - b).norm() / scale);
                }
                let report = ClosedFormReport {
                    kappa_rel: rel(k_closed, k_quad),
                    xi_rel: rel(r_closed, reorg_quad),
                    epsilon_rel: eps_rel,
                    tolerance: CLOSED_FORM_TOLERANCE,
                    agree: false,
                };
                let agree = report.kappa_rel <= CLOSED_FORM_TOLERANCE
                    && report.xi_rel <= CLOSED_FORM_TOLERANCE
                    && report.epsilon_rel <= CLOSED_FORM_TOLERANCE;
                if agree {
                    bath.k = k_closed;
                    bath.reorg = r_closed;
                } else {
                    log::warn!("closed forms disagree with quadrature ({report:?}); using quadrature");
                }
                bath.use_closed_form = agree;
                bath.closed_form = Some(ClosedFormReport { agree, ..report });
            }
        }
        Ok(bath)
    }

    pub fn spec(&self) -> &BathSpec {
        &self.spec
    }

    pub fn beta(&self) -> f64 {
        self.spec.beta()
    }

    pub fn density(&self) -> &SpectralDensity {
        self.spec.density()
    }

    pub fn closed_form_report(&self) -> Option<&ClosedFormReport> {
        self.closed_form.as_ref()
    }

    pub fn is_trivial(&self) -> bool {
        self.density().is_zero()
    }

    /// `(1/π) ∫ J/ω² coth(βω/2)`.
    pub fn coth_integral(&self) -> f64 {
        self.k
    }

    pub fn kappa(&self, d: f64) -> f64 {
        (-0.5 * d * d * self.k).exp()
    }

    pub fn xi(&self, cn: f64) -> f64 {
        -cn * cn * self.reorg
    }

    /// `E(τ)`, the exponent per unit `d d'`.
    pub fn unit_exponent(&self, tau: Tau) -> Result<Complex64> {
        if self.is_trivial() {
            if let Tau::Imaginary(u) = tau {
                check_imaginary(u, self.beta())?;
            }
            return Ok(Complex64::new(0.0, 0.0));
        }
        match (self.density(), self.use_closed_form) {
            (&SpectralDensity::SuperOhmic { gamma, omega_c }, true) => {
                super_ohmic::unit_exponent(gamma, omega_c, self.beta(), tau)
            }
            _ => unit_exponent_quadrature(&self.spec, tau),
        }
    }

    pub fn epsilon(&self, dd: f64, tau: Tau) -> Result<Complex64> {
        Ok(self.unit_exponent(tau)? * dd)
    }

    /// `C(τ) = κκ' [e^{−dd'E(τ)} − 1]`; imaginary arguments give `C(−iu)`.
    pub fn correlation(&self, d: f64, d_prime: f64, tau: Tau) -> Result<Complex64> {
        let log_kk = -0.5 * (d * d + d_prime * d_prime) * self.k;
        let z = -self.epsilon(d * d_prime, tau)?;
        Ok((z + log_kk).exp() - log_kk.exp())
    }

    /// Original-frame correlation `(1/π) ∫ J [coth(βω/2) cos ωτ − i sin ωτ]`.
    pub fn gaussian_correlation(&self, tau: f64) -> Result<Complex64> {
        let d = self.density();
        let beta = self.beta();
        let r = frequency_quadrature()
            .integrate_breaks(
                |w: f64| {
                    let j = d.reduced(w) * w * w;
                    let (s, cs) = (w * tau).sin_cos();
                    Complex64::new(j * (2.0 / beta) * x_coth_x(0.5 * beta * w) * cs, -j * w * s)
                },
                &frequency_breaks(d, tau),
            )
            .map_err(|e| Error::Numeric(format!("original-frame correlation at τ={tau} failed: {e}")))?;
        Ok(r.value / PI)
    }

    // -- frequency-domain pieces -------------------------------------------------

    /// `f(ω) = J(ω) n(ω)/ω²` (odd `J`) and its derivative.
    fn f_and_df(&self, w: f64) -> (f64, f64) {
        let beta = self.beta();
        let (jc, djc) = self.density().reduced_with_derivative(w.abs());
        let (b, db) = bernoulli_fn(beta * w);
        (jc * b / beta, w.signum() * djc * b / beta + jc * db)
    }

    /// `P ∫ q(ω)/(ω − λ) dω` over the real line.
    fn hilbert<F: Fn(f64) -> f64>(&self, q: F, lambda: f64, what: &str) -> Result<f64> {
        let support = self.density().support();
        let upper = lambda.abs() + support;
        let mut breaks = vec![0.0, lambda.abs()];
        for k in self.density().kinks().into_iter().chain([support]) {
            for s in [k - lambda, -k - lambda, lambda - k, lambda + k] {
                if s > 0.0 && s < upper {
                    breaks.push(s);
                }
            }
        }
        let scale = self.density().scale();
        let mut s = 0.25 * scale;
        while s < upper {
            breaks.push(lambda.abs() + s);
            s *= 2.0;
        }
        breaks.push(upper);
        breaks.retain(|&x| x <= upper);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let r = Quadrature::new(1e-17, 1e-13)
            .with_max_intervals(20000)
            .integrate_breaks(|s: f64| (q(lambda + s) - q(lambda - s)) / s, &breaks)
            .map_err(|e| Error::Numeric(format!("{what} principal-value integral at λ={lambda} failed: {e}")))?;
        Ok(r.value)
    }

    /// `∫₀^∞ E(τ) e^{−iλτ} dτ = f(λ) + (i/π) P∫ f(ω)/(ω − λ)`.
    fn linear_transform(&self, lambda: f64) -> Result<Complex64> {
        let f0 = self.f_and_df(lambda).0;
        let h = self.hilbert(|w| self.f_and_df(w).0, lambda, "W")?;
        Ok(Complex64::new(f0, h / PI))
    }

    fn linear_transform_derivative(&self, lambda: f64) -> Result<Complex64> {
        if lambda == 0.0 && matches!(self.density(), SpectralDensity::SuperOhmic { .. }) {
            return Err(Error::Domain("∂W/∂λ diverges logarithmically at λ = 0".into()));
        }
        let df0 = self.f_and_df(lambda).1;
        let h = self.hilbert(|w| self.f_and_df(w).1, lambda, "∂W")?;
        Ok(Complex64::new(df0, h / PI))
    }

    // -- time-domain remainder --------------------------------------------------

    /// `κκ' (e^{z} − 1 − z)` with `z = −dd'E(τ)`.
    fn remainder(&self, dd: f64, log_kk: f64, tau: f64) -> Result<Complex64> {
        let z = -self.unit_exponent(Tau::Real(tau))? * dd;
        if z.norm() < 0.5 {
            let mut term = z * z * 0.5;
            let mut sum = term;
            for k in 3..=24 {
                term = term * z / k as f64;
                sum += term;
                if term.norm() < 1e-18 * sum.norm() {
                    break;
                }
            }
            Ok(sum * log_kk.exp())
        } else {
            Ok((z + log_kk).exp() - (Complex64::new(1.0, 0.0) + z) * log_kk.exp())
        }
    }

    fn time_scale(&self) -> f64 {
        (1.0 / self.density().scale()).min(self.beta())
    }

    /// Smallest doubling of the base horizon where the tail bound drops below `tol`.
    fn horizon(&self, dd: f64, log_kk: f64, power: i32, tol: f64) -> Result<f64> {
        let base = self.time_scale().max(self.beta()).max(1.0 / self.density().scale());
        let mut t = 32.0 * base;
        loop {
            let c = self.remainder(dd, log_kk, t)?.norm();
            // |C| ~ τ⁻⁴: ∫_T^∞ τ^p |C| ≈ |C(T)| T^{p+1}/(3 − p)
            let tail = c * t.powi(power + 1) / (3 - power) as f64;
            if tail <= tol {
                return Ok(t);
            }
            if t > 4e5 * base {
                return Err(Error::Accuracy { what: "correlation tail".into(), achieved: tail, required: tol });
            }
            t *= 2.0;
        }
    }

    fn remainder_transform(&self, dd: f64, log_kk: f64, lambda: f64, derivative: bool) -> Result<Complex64> {
        let (power, tol) = if derivative { (1, 1e-10) } else { (0, 1e-13) };
        let t_max = self.horizon(dd, log_kk, power, tol)?;
        let mut breaks = vec![0.0];
        let mut t = 0.125 * self.time_scale();
        while t < t_max {
            breaks.push(t);
            t *= 2.0;
        }
        if lambda != 0.0 {
            let step = 4.0 * PI / lambda.abs();
            let mut t = step;
            while t < t_max {
                breaks.push(t);
                t += step;
            }
        }
        breaks.push(t_max);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut failure = None;
        let r = Quadrature::new(tol * 0.1, 1e-13).with_max_intervals(400_000).integrate_breaks(
            |tau: f64| match self.remainder(dd, log_kk, tau) {
                Ok(c) => {
                    let phase = Complex64::new(0.0, -lambda * tau).exp();
                    if derivative {
                        c * phase * Complex64::new(0.0, -tau)
                    } else {
                        c * phase
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            },
            &breaks,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(r?.value)
    }

    fn cached<F: FnOnce() -> Result<Complex64>>(&self, key: CacheKey, f: F) -> Result<Complex64> {
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = f()?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Numeric(format!("non-finite half-sided transform {key:?}")));
        }
        self.cache.write().unwrap().insert(key, v);
        Ok(v)
    }

    fn key(kind: Kind, d: f64, d_prime: f64, lambda: f64) -> CacheKey {
        let dd = d * d_prime;
        let s2 = d * d + d_prime * d_prime;
        (kind, dd.to_bits(), s2.to_bits(), lambda.to_bits())
    }

    /// `W(λ) = ∫₀^∞ C(τ) e^{−iλτ} dτ` for the channel prefactors `d`, `d'`.
    pub fn half_fourier(&self, d: f64, d_prime: f64, lambda: f64) -> Result<Complex64> {
        let dd = d * d_prime;
        if dd == 0.0 || self.is_trivial() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.cached(Self::key(Kind::W, d, d_prime, lambda), || {
            let log_kk = -0.5 * (d * d + d_prime * d_prime) * self.k;
            let lin = self.linear_transform(lambda)? * (-dd * log_kk.exp());
            Ok(lin + self.remainder_transform(dd, log_kk, lambda, false)?)
        })
    }

    /// `∂W/∂λ = ∫₀^∞ (−iτ) C(τ) e^{−iλτ} dτ`; diverges at `λ = 0`.
    pub fn half_fourier_derivative(&self, d: f64, d_prime: f64, lambda: f64) -> Result<Complex64> {
        let dd = d * d_prime;
        if dd == 0.0 || self.is_trivial() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.cached(Self::key(Kind::DW, d, d_prime, lambda), || {
            let log_kk = -0.5 * (d * d + d_prime * d_prime) * self.k;
            let lin = self.linear_transform_derivative(lambda)? * (-dd * log_kk.exp());
            Ok(lin + self.remainder_transform(dd, log_kk, lambda, true)?)
        })
    }

    /// Half-sided transform of the original-frame correlation:
    /// `J(λ) n(λ) + (i/π) P∫ J(ω) n(ω)/(ω − λ)`.
    pub fn gaussian_half_fourier(&self, lambda: f64) -> Result<Complex64> {
        if self.is_trivial() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.cached((Kind::GaussW, 0, 0, lambda.to_bits()), || {
            let g = |w: f64| w * w * self.f_and_df(w).0;
            let h = self.hilbert(g, lambda, "original-frame W")?;
            Ok(Complex64::new(g(lambda), h / PI))
        })
    }

    pub fn gaussian_half_fourier_derivative(&self, lambda: f64) -> Result<Complex64> {
        if self.is_trivial() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.cached((Kind::GaussDW, 0, 0, lambda.to_bits()), || {
            let dg = |w: f64| {
                let (f, df) = self.f_and_df(w);
                2.0 * w * f + w * w * df
            };
            let h = self.hilbert(dg, lambda, "original-frame ∂W")?;
            Ok(Complex64::new(dg(lambda), h / PI))
        })
    }

    /// `−∫₀^β C(−iu) e^{−λu} du`.
    pub fn imag_time_integral(&self, d: f64, d_prime: f64, lambda: f64) -> Result<f64> {
        if d * d_prime == 0.0 || self.is_trivial() {
            return Ok(0.0);
        }
        let beta = self.beta();
        let mut failure = None;
        let r = Quadrature::new(1e-16, 1e-12).with_max_intervals(10000).integrate_breaks(
            |u: f64| match self.correlation(d, d_prime, Tau::Imaginary(u.clamp(0.0, beta))) {
                Ok(c) => c.re * (-lambda * u).exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            &[0.0, 0.25 * beta, 0.5 * beta, 0.75 * beta, beta],
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(-r?.value)
    }
}

/// Correlation data for every channel of one system.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    bath: Bath,
    coupling: Vec<f64>,
}

impl CorrelationTable {
    pub fn new(sys: &SystemSpec, bath: &BathSpec) -> Result<Self> {
        Ok(Self { bath: Bath::new(bath)?, coupling: sys.coupling().to_vec() })
    }

    pub fn from_bath(sys: &SystemSpec, bath: Bath) -> Self {
        Self { bath, coupling: sys.coupling().to_vec() }
    }

    pub fn bath(&self) -> &Bath {
        &self.bath
    }

    pub fn dim(&self) -> usize {
        self.coupling.len()
    }

    pub fn prefactor(&self, m: usize, n: usize) -> f64 {
        self.coupling[m] - self.coupling[n]
    }

    /// `κ_mn`; equal to one on the diagonal.
    pub fn kappa(&self, m: usize, n: usize) -> f64 {
        self.bath.kappa(self.prefactor(m, n))
    }

    pub fn kappa_product(&self, pair: &ChannelPair) -> f64 {
        self.bath.kappa(pair.d) * self.bath.kappa(pair.d_prime)
    }

    pub fn correlation(&self, pair: &ChannelPair, tau: Tau) -> Result<Complex64> {
        self.bath.correlation(pair.d, pair.d_prime, tau)
    }

    pub fn w(&self, pair: &ChannelPair, lambda: f64) -> Result<Complex64> {
        self.bath.half_fourier(pair.d, pair.d_prime, lambda)
    }

    pub fn dw(&self, pair: &ChannelPair, lambda: f64) -> Result<Complex64> {
        self.bath.half_fourier_derivative(pair.d, pair.d_prime, lambda)
    }
}
