//! System, bath and coupling data shared by every generator.
//!
//! The coupling is factorized: state `n` couples to mode `k` with strength
//! `c_n g_k`, so a single spectral density `J(ω) = π Σ_k g_k² δ(ω − ω_k)`
//! describes the whole bath.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::quad::Quadrature;

/// An N-level system: onsite energies, hopping and per-state coupling coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    onsite: Vec<f64>,
    hopping: CMatrix,
    coupling: Vec<f64>,
}

impl SystemSpec {
    pub fn new(onsite: Vec<f64>, hopping: CMatrix, coupling: Vec<f64>) -> Result<Self> {
        let n = onsite.len();
        if n < 2 {
            return Err(Error::Validation(format!("system dimension must be at least 2, got {n}")));
        }
        if hopping.nrows() != n || hopping.ncols() != n {
            return Err(Error::Validation(format!(
                "hopping matrix is {}x{}, expected {n}x{n}",
                hopping.nrows(),
                hopping.ncols()
            )));
        }
        if coupling.len() != n {
            return Err(Error::Validation(format!("coupling_coeff has {} entries, expected {n}", coupling.len())));
        }
        if let Some(i) = onsite.iter().position(|e| !e.is_finite()) {
            return Err(Error::Validation(format!("onsite energy {i} is not finite")));
        }
        if let Some(i) = coupling.iter().position(|e| !e.is_finite()) {
            return Err(Error::Validation(format!("coupling coefficient {i} is not finite")));
        }
        let scale = linalg::max_abs(&hopping).max(1.0);
        for i in 0..n {
            if hopping[(i, i)].norm() > 0.0 {
                return Err(Error::Validation(format!("hopping[{i}][{i}] must be zero")));
            }
            for j in (i + 1)..n {
                let (a, b) = (hopping[(i, j)], hopping[(j, i)]);
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::Validation(format!("hopping[{i}][{j}] is not finite")));
                }
                if (a - b.conj()).norm() > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "hopping is not Hermitian: hopping[{i}][{j}] = {a} but hopping[{j}][{i}] = {b}"
                    )));
                }
            }
        }
        let first = coupling[0];
        if coupling.iter().all(|&x| x == first) {
            log::warn!("all coupling coefficients are equal; the polaron frame is trivial");
        }
        let hopping = linalg::hermitian_part(&hopping);
        Ok(Self { onsite, hopping, coupling })
    }

    pub fn dim(&self) -> usize {
        self.onsite.len()
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn hopping(&self) -> &CMatrix {
        &self.hopping
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// `H_S = diag(ε) + h`, exactly Hermitian.
    pub fn hamiltonian(&self) -> CMatrix {
        let n = self.dim();
        let mut h = self.hopping.clone();
        for i in 0..n {
            h[(i, i)] = c(self.onsite[i]);
        }
        h
    }

    /// `Σ_n c_n |n⟩⟨n|`, the system operator of the original-frame coupling.
    pub fn coupling_operator(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(self.dim(), self.coupling.iter().map(|&x| c(x))))
    }

    /// `H_S^D = Σ_n ε_n |n⟩⟨n|`.
    pub fn dephasing_hamiltonian(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(self.dim(), self.onsite.iter().map(|&x| c(x))))
    }
}

pub fn build_system_hamiltonian(spec: &SystemSpec) -> CMatrix {
    spec.hamiltonian()
}

/// Tabulated spectral density with monotone cubic interpolation.
///
/// Below the first node `J` continues as `A ω^s` with the declared exponent;
/// beyond the last node it vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    omega: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    exponent: f64,
}

impl TabulatedDensity {
    pub fn new(omega: Vec<f64>, values: Vec<f64>, exponent: f64) -> Result<Self> {
        if omega.len() != values.len() {
            return Err(Error::Validation("tabulated density: ω and J columns differ in length".into()));
        }
        if omega.len() < 2 {
            return Err(Error::Validation("tabulated density needs at least two nodes".into()));
        }
        if !(omega[0] > 0.0) {
            return Err(Error::Validation("tabulated density: first node must have ω > 0".into()));
        }
        if let Some(i) = omega.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!("tabulated density: ω not strictly increasing at node {}", i + 1)));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(format!("tabulated density: J at node {i} is negative or not finite")));
        }
        // s ≥ 3 keeps J/ω³ bounded at the origin: κ needs s > 1, a finite
        // rate at zero frequency needs s ≥ 3.
        if !(exponent >= 3.0) || !exponent.is_finite() {
            return Err(Error::Validation(format!(
                "tabulated density: small-frequency exponent must be at least 3, got {exponent}"
            )));
        }
        let slopes = pchip_slopes(&omega, &values);
        Ok(Self { omega, values, slopes, exponent })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.omega, &self.values)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    fn segment(&self, w: f64) -> usize {
        match self.omega.binary_search_by(|x| x.total_cmp(&w)) {
            Ok(i) => i.min(self.omega.len() - 2),
            Err(i) => i - 1,
        }
    }

    /// `J(ω)` and `J'(ω)` for ω > 0.
    fn eval_with_derivative(&self, w: f64) -> (f64, f64) {
        let first = self.omega[0];
        let last = *self.omega.last().unwrap();
        if w <= first {
            let a = self.values[0] / first.powf(self.exponent);
            return (a * w.powf(self.exponent), a * self.exponent * w.powf(self.exponent - 1.0));
        }
        if w > last {
            return (0.0, 0.0);
        }
        let i = self.segment(w);
        let (x0, x1) = (self.omega[i], self.omega[i + 1]);
        let h = x1 - x0;
        let t = (w - x0) / h;
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.slopes[i], self.slopes[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let dv = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
        (v.max(0.0), dv)
    }
}

/// Fritsch–Carlson slopes with the harmonic-mean interior formula.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = delta[0];
        m[1] = delta[0];
        return m;
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            s = 0.0;
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            s = 3.0 * d0;
        }
        s
    };
    m[0] = end(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

/// Bath spectral density `J(ω)`, extended to negative frequencies as an odd function.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = γ ω³ e^{−ω/ω_c}`.
    SuperOhmic { gamma: f64, omega_c: f64 },
    Tabulated(TabulatedDensity),
}

impl SpectralDensity {
    pub fn super_ohmic(gamma: f64, omega_c: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Validation(format!("gamma must be finite and non-negative, got {gamma}")));
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(Error::Validation(format!("omega_c must be finite and positive, got {omega_c}")));
        }
        Ok(Self::SuperOhmic { gamma, omega_c })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::SuperOhmic { gamma, .. } => *gamma == 0.0,
            Self::Tabulated(t) => t.values.iter().all(|&v| v == 0.0),
        }
    }

    /// `J(ω)`, odd in ω.
    pub fn eval(&self, w: f64) -> f64 {
        w.signum() * self.reduced(w.abs()) * w.abs().powi(3)
    }

    /// `J(ω)/ω³` for ω > 0; even extension, finite at the origin.
    pub fn reduced(&self, w: f64) -> f64 {
        self.reduced_with_derivative(w).0
    }

    /// `J(ω)/ω³` and its derivative for ω ≥ 0.
    pub fn reduced_with_derivative(&self, w: f64) -> (f64, f64) {
        match self {
            Self::SuperOhmic { gamma, omega_c } => {
                let v = gamma * (-w / omega_c).exp();
                (v, -v / omega_c)
            }
            Self::Tabulated(t) => {
                let first = t.omega[0];
                if w <= first {
                    let a = t.values[0] / first.powf(t.exponent);
                    let p = t.exponent - 3.0;
                    let v = if p == 0.0 { a } else { a * w.powf(p) };
                    let dv = if p == 0.0 { 0.0 } else { a * p * w.powf(p - 1.0) };
                    return (v, dv);
                }
                let (j, dj) = t.eval_with_derivative(w);
                let w3 = w * w * w;
                (j / w3, dj / w3 - 3.0 * j / (w3 * w))
            }
        }
    }

    /// Frequency scale used to map semi-infinite integrals.
    pub fn scale(&self) -> f64 {
        match self {
            Self::SuperOhmic { omega_c, .. } => *omega_c,
            Self::Tabulated(t) => {
                let (mut num, mut den) = (0.0, 0.0);
                for (w, j) in t.omega.iter().zip(&t.values) {
                    num += w * j;
                    den += j;
                }
                if den > 0.0 {
                    num / den
                } else {
                    t.omega[t.omega.len() / 2]
                }
            }
        }
    }

    /// Frequency beyond which `J` is zero or negligible for every integral in the crate.
    pub fn support(&self) -> f64 {
        match self {
            Self::SuperOhmic { omega_c, .. } => 60.0 * omega_c,
            Self::Tabulated(t) => *t.omega.last().unwrap(),
        }
    }

    /// Points where `J` is not smooth (tabulated nodes); empty for analytic densities.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::SuperOhmic { .. } => Vec::new(),
            Self::Tabulated(t) => t.omega.clone(),
        }
    }

    /// Checks that `∫J/ω²` and `∫J/ω` are finite.
    pub fn check_integrable(&self) -> Result<()> {
        let q = Quadrature::new(1e-14, 1e-10).with_max_intervals(2000);
        let mut breaks = vec![0.0];
        breaks.extend(self.kinks());
        breaks.push(self.support());
        for (name, p) in [("J/ω²", 1), ("J/ω", 2)] {
            let r = q
                .integrate_breaks(|w: f64| self.reduced(w) * w.powi(p), &breaks)
                .map_err(|e| Error::Numeric(format!("∫{name} failed: {e}")))?;
            if !r.value.is_finite() {
                return Err(Error::Numeric(format!("∫{name} diverges")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    beta: f64,
    density: SpectralDensity,
}

impl BathSpec {
    pub fn new(beta: f64, density: SpectralDensity) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Validation(format!("beta must be finite and positive, got {beta}")));
        }
        density.check_integrable()?;
        Ok(Self { beta, density })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn density(&self) -> &SpectralDensity {
        &self.density
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(beta, self.density.clone())
    }
}

/// Reduced density matrix. Hermiticity and unit trace are checked; positivity is not.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::Validation("density matrix must be square".into()));
        }
        let norm = rho.norm();
        let defect = linalg::hermiticity_defect(&rho);
        if defect > 1e-12 * norm.max(1.0) {
            return Err(Error::Validation(format!("density matrix is not Hermitian (defect {defect:.3e})")));
        }
        let tr = linalg::trace(&rho);
        if (tr - c(1.0)).norm() > 1e-10 {
            return Err(Error::Validation(format!("density matrix trace is {tr}, expected 1")));
        }
        Ok(Self(linalg::hermitian_part(&rho)))
    }

    /// Hermitizes and trace-normalizes `m`.
    pub fn normalized(m: &CMatrix) -> Result<Self> {
        let h = linalg::hermitian_part(m);
        let tr = linalg::trace(&h).re;
        if !(tr.abs() > 0.0) || !tr.is_finite() {
            return Err(Error::Numeric(format!("cannot normalize a matrix with trace {tr}")));
        }
        Self::new(h / c(tr))
    }

    /// `e^{−βH}/Z`.
    pub fn gibbs(h: &CMatrix, beta: f64) -> Result<Self> {
        let (e, u) = linalg::hermitian_eigen(h)?;
        let e0 = e[0];
        let weights: Vec<f64> = e.iter().map(|x| (-beta * (x - e0)).exp()).collect();
        let z: f64 = weights.iter().sum();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(e.len(), weights.iter().map(|w| c(w / z))));
        Self::normalized(&(&u * d * u.adjoint()))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(linalg::identity(n) / c(n as f64))
    }

    /// `|k⟩⟨k|`.
    pub fn basis_state(n: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = c(1.0);
        Self(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        linalg::trace(&(op * &self.0))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.0)?[0])
    }
}

/// Two-level system `H_S = ε σ_z + h σ_x` with `c = (1, −1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBosonSpec {
    pub epsilon: f64,
    pub h: f64,
    pub bath: BathSpec,
}

pub fn spin_boson_to_general(spec: &SpinBosonSpec) -> Result<SystemSpec> {
    let hop = CMatrix::from_row_slice(2, 2, &[c(0.0), c(spec.h), c(spec.h), c(0.0)]);
    SystemSpec::new(vec![spec.epsilon, -spec.epsilon], hop, vec![1.0, -1.0])
}

// ---------------------------------------------------------------------------
// Configuration documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Complex([f64; 2]),
}

impl ComplexEntry {
    pub fn value(&self) -> Complex64 {
        match *self {
            Self::Real(x) => c(x),
            Self::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dim: usize,
    pub onsite: Vec<f64>,
    /// Row-major `dim × dim`; entries are numbers or `[re, im]` pairs.
    pub hopping: Vec<Vec<ComplexEntry>>,
    pub coupling_coeff: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBosonConfig {
    pub epsilon: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralDensityConfig {
    #[serde(rename = "super_ohmic")]
    SuperOhmic {
        gamma: f64,
        omega_c: f64,
    },
    Tabulated {
        /// `[ω, J(ω)]` rows.
        table: Vec<[f64; 2]>,
        exponent: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub beta: f64,
    pub spectral_density: SpectralDensityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_boson: Option<SpinBosonConfig>,
    pub bath: BathConfig,
}

/// A resolved model: system plus bath.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub system: SystemSpec,
    pub bath: BathSpec,
    /// Set when the model came from a spin-boson description.
    pub spin_boson: Option<(f64, f64)>,
}

impl Model {
    pub fn spin_boson(epsilon: f64, h: f64, bath: BathSpec) -> Result<Self> {
        let spec = SpinBosonSpec { epsilon, h, bath };
        Ok(Self { system: spin_boson_to_general(&spec)?, bath: spec.bath, spin_boson: Some((epsilon, h)) })
    }

    pub fn with_bath(&self, bath: BathSpec) -> Self {
        Self { bath, ..self.clone() }
    }
}

impl SpectralDensityConfig {
    pub fn build(&self) -> Result<SpectralDensity> {
        match self {
            Self::SuperOhmic { gamma, omega_c } => SpectralDensity::super_ohmic(*gamma, *omega_c),
            Self::Tabulated { table, exponent } => {
                let omega = table.iter().map(|r| r[0]).collect();
                let values = table.iter().map(|r| r[1]).collect();
                Ok(SpectralDensity::Tabulated(TabulatedDensity::new(omega, values, *exponent)?))
            }
        }
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("invalid model config: {e}")))
    }

    pub fn build(&self) -> Result<Model> {
        let density = self.bath.spectral_density.build()?;
        let bath = BathSpec::new(self.bath.beta, density)?;
        match (&self.system, &self.spin_boson) {
            (Some(_), Some(_)) => Err(Error::Validation("config sets both `system` and `spin_boson`".into())),
            (None, None) => Err(Error::Validation("config needs either `system` or `spin_boson`".into())),
            (None, Some(sb)) => Model::spin_boson(sb.epsilon, sb.h, bath),
            (Some(sys), None) => {
                let n = sys.dim;
                if sys.hopping.len() != n || sys.hopping.iter().any(|row| row.len() != n) {
                    return Err(Error::Validation(format!("hopping must be a {n}x{n} array")));
                }
                if sys.onsite.len() != n {
                    return Err(Error::Validation(format!("onsite has {} entries, expected {n}", sys.onsite.len())));
                }
                let hop = CMatrix::from_fn(n, n, |i, j| sys.hopping[i][j].value());
                let system = SystemSpec::new(sys.onsite.clone(), hop, sys.coupling_coeff.clone())?;
                Ok(Model { system, bath, spin_boson: None })
            }
        }
    }
}
