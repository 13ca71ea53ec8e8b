//! Time evolution, spectra, steady states and mean-force Gibbs states.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::generators::{q_mfg_tensor, Generator, Superoperator};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::model::{DensityMatrix, SystemSpec};

/// Stepped trajectory on a uniform grid `t_k = k·dt`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `Tr[O ρ(t_k)]` at every step.
    pub fn expectation(&self, op: &CMatrix) -> Vec<Complex64> {
        self.states.iter().map(|rho| linalg::trace(&(op * rho))).collect()
    }

    /// `Re⟨σ_z⟩`; only meaningful for two-level systems.
    pub fn sigma_z(&self) -> Vec<f64> {
        self.expectation(&linalg::pauli_z()).iter().map(|z| z.re).collect()
    }

    pub fn traces(&self) -> Vec<f64> {
        self.states.iter().map(|rho| linalg::trace(rho).re).collect()
    }

    /// Smallest eigenvalue of the Hermitian part of each `ρ(t_k)`.
    pub fn min_eigenvalues(&self) -> Result<Vec<f64>> {
        self.states
            .iter()
            .map(|rho| Ok(linalg::hermitian_eigenvalues(&linalg::hermitian_part(rho))?[0]))
            .collect()
    }

    pub fn max_trace_drift(&self) -> f64 {
        self.traces().iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &CMatrix {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

/// Steps `ρ` with the single propagator `exp(L·dt)`.
pub fn propagate(l: &Superoperator, rho0: &DensityMatrix, t_max: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Validation(format!("time step must be positive, got {dt}")));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::Validation(format!("final time must be non-negative, got {t_max}")));
    }
    let n = rho0.dim();
    if l.dim() != n {
        return Err(Error::Validation(format!("generator acts on dimension {} but the state has {n}", l.dim())));
    }
    let steps = (t_max / dt).round() as usize;
    let e = linalg::expm(&(&l.matrix * c(dt)));
    let mut v = linalg::vectorize(rho0.matrix());
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(rho0.matrix().clone());
    for k in 1..=steps {
        v = &e * v;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric(format!("non-finite density matrix at step {k}")));
        }
        times.push(k as f64 * dt);
        states.push(linalg::unvectorize(&v, n));
    }
    let traj = Trajectory { times, states };
    let drift = traj.max_trace_drift();
    if drift > 1e-6 {
        log::warn!("trace drifted by up to {drift:.3e} during propagation");
    }
    Ok(traj)
}

/// Smallest eigenvalue seen along the trajectory.
pub fn min_eig_trajectory(traj: &Trajectory) -> Result<f64> {
    Ok(traj.min_eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Eigen-decomposition of a Liouvillian: the eigenvalue nearest zero first, the rest by descending real part.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvectors as columns.
    pub right: CMatrix,
    /// Left eigenvectors as rows, normalized so `left · right = I`.
    pub left: CMatrix,
    /// `−Re μ₁`; negative when the generator has a growing mode.
    pub gap: f64,
    /// Condition number of the eigenvector matrix.
    pub condition: f64,
    /// `c_k = ⟨left_k | vec ρ0⟩` when an initial state was supplied.
    pub overlaps: Option<Vec<Complex64>>,
}

pub const CONDITION_LIMIT: f64 = 1e8;

impl SpectralData {
    pub fn mu0(&self) -> Complex64 {
        self.eigenvalues[0]
    }

    /// Slowest decaying (or fastest growing) non-stationary eigenvalue.
    pub fn mu1(&self) -> Complex64 {
        self.eigenvalues[1]
    }

    /// Largest mismatch between an eigenvalue and its nearest conjugate partner.
    pub fn conjugation_defect(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| self.eigenvalues.iter().map(|w| (z.conj() - w).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    /// `Σ_k c_k e^{μ_k t} right_k`, reshaped.
    pub fn reconstruct(&self, t: f64) -> Option<CMatrix> {
        let c_k = self.overlaps.as_ref()?;
        let n2 = self.right.nrows();
        let mut v = CVector::zeros(n2);
        for (k, (mu, ck)) in self.eigenvalues.iter().zip(c_k).enumerate() {
            v += self.right.column(k) * (ck * (mu * t).exp());
        }
        Some(linalg::unvectorize(&v, (n2 as f64).sqrt().round() as usize))
    }
}

pub fn spectral_decompose(l: &Superoperator, rho0: Option<&DensityMatrix>) -> Result<SpectralData> {
    let (vals, vecs) = linalg::eigen(&l.matrix)?;
    let zero = (0..vals.len()).min_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm())).unwrap_or(0);
    let mut order: Vec<usize> = (0..vals.len()).filter(|&k| k != zero).collect();
    order.sort_by(|&a, &b| {
        vals[b].re.partial_cmp(&vals[a].re).unwrap_or(std::cmp::Ordering::Equal).then(vals[a].im.total_cmp(&vals[b].im))
    });
    order.insert(0, zero);
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| vals[k]).collect();
    let n2 = vals.len();
    let mut right = CMatrix::zeros(n2, n2);
    for (col, &k) in order.iter().enumerate() {
        let v = vecs.column(k);
        let norm = v.norm();
        right.set_column(col, &(v / c(norm)));
    }
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Defective { condition: f64::INFINITY })?;
    let condition = right.norm() * left.norm() / n2 as f64;
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::Defective { condition });
    }
    let gap = if n2 > 1 { -eigenvalues[1].re } else { 0.0 };
    let overlaps = rho0.map(|rho| (&left * linalg::vectorize(rho.matrix())).iter().copied().collect());
    Ok(SpectralData { eigenvalues, right, left, gap, condition, overlaps })
}

/// Liouvillian gap `g = −Re μ₁`.
pub fn gap(l: &Superoperator) -> Result<f64> {
    Ok(spectral_decompose(l, None)?.gap)
}

/// Relative threshold below which an eigenvalue counts as a zero mode.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-9;

/// Null vector of `L`, Hermitized and trace-normalized.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let n = l.dim();
    let n2 = n * n;
    let scale = linalg::max_abs(&l.matrix).max(f64::MIN_POSITIVE);
    let threshold = ZERO_MODE_THRESHOLD * scale;
    let ev = linalg::eigenvalues(&l.matrix)?;
    let count = ev.iter().filter(|z| z.norm() <= threshold).count();
    if count > 1 {
        return Err(Error::NonUniqueSteadyState { count, threshold });
    }
    // Replace the first population row by the trace functional.
    let mut a = l.matrix.clone();
    let mut b = CVector::zeros(n2);
    for col in 0..n2 {
        a[(0, col)] = c(0.0);
    }
    for i in 0..n {
        a[(0, i + n * i)] = c(1.0);
    }
    b[0] = c(1.0);
    let x = a.lu().solve(&b).ok_or_else(|| Error::Linalg("singular steady-state system".into()))?;
    DensityMatrix::normalized(&linalg::unvectorize(&x, n))
}

/// `(I + Q)[e^{−βH̃_S}/Z̃_S]`, Hermitized and normalized.
pub fn mfg_state(g: &Generator) -> Result<DensityMatrix> {
    let gibbs = g.gibbs()?;
    let q = match &g.q {
        Some(q) => q.q.clone(),
        None => q_mfg_tensor(&g.set, &g.bath)?.q,
    };
    let corrected = gibbs.matrix() + q.apply(gibbs.matrix());
    DensityMatrix::normalized(&corrected)
}

/// Gibbs state of the bare system Hamiltonian.
pub fn weak_limit_state(sys: &SystemSpec, beta: f64) -> Result<DensityMatrix> {
    DensityMatrix::gibbs(&sys.hamiltonian(), beta)
}

/// Gibbs state of the pure dephasing Hamiltonian `Σ ε_n |n⟩⟨n|`.
pub fn strong_limit_state(sys: &SystemSpec, beta: f64) -> Result<DensityMatrix> {
    DensityMatrix::gibbs(&sys.dephasing_hamiltonian(), beta)
}

pub fn infinite_temperature_state(n: usize) -> DensityMatrix {
    DensityMatrix::maximally_mixed(n)
}

/// `(σ_z + I)/2`.
pub fn spin_up() -> DensityMatrix {
    DensityMatrix::basis_state(2, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Basis, Frame, GeneratorKind};
    use crate::model::{BathSpec, Model, SpectralDensity};

    fn model(gamma: f64, beta: f64, eps: f64, h: f64) -> Model {
        Model::spin_boson(eps, h, BathSpec::new(beta, SpectralDensity::super_ohmic(gamma, 1.0).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn zero_generator_is_constant() {
        let l = Superoperator { matrix: CMatrix::zeros(4, 4), basis: Basis::Site, frame: Frame::Polaron, label: "0" };
        let traj = propagate(&l, &spin_up(), 1.0, 0.1).unwrap();
        assert_eq!(traj.len(), 11);
        assert_eq!(traj.states[0], *spin_up().matrix());
        assert!(traj.states.iter().all(|s| s == spin_up().matrix()));
    }

    #[test]
    fn unitary_qubit_matches_closed_form() {
        let (eps, h) = (1.0, 0.6);
        let m = model(0.0, 1.0, eps, h);
        let l = crate::generators::liouvillian(GeneratorKind::PtCcqme, &m).unwrap();
        let traj = propagate(&l, &spin_up(), 6.0, 0.01).unwrap();
        let omega = (eps * eps + h * h).sqrt();
        for (t, sz) in traj.times.iter().zip(traj.sigma_z()) {
            let (s, co) = (omega * t).sin_cos();
            let expected = co * co + s * s * (eps * eps - h * h) / (eps * eps + h * h);
            assert!((sz - expected).abs() < 1e-10, "{t}: {sz} vs {expected}");
        }
        assert!(min_eig_trajectory(&traj).unwrap() >= -1e-10);
    }

    #[test]
    fn unitary_spectrum_has_zero_gap() {
        let l = crate::generators::liouvillian(GeneratorKind::Redfield, &model(0.0, 1.0, 1.0, 1.0)).unwrap();
        let s = spectral_decompose(&l, None).unwrap();
        assert!(s.eigenvalues.iter().all(|z| z.re.abs() < 1e-12));
        assert!(s.gap.abs() < 1e-12);
    }

    #[test]
    fn growing_modes_give_a_negative_gap() {
        let m = model(1.0, 5.6 / (2.0 * 2f64.sqrt()), 1.0, 1.0);
        let l = crate::generators::liouvillian(GeneratorKind::Ccqme, &m).unwrap();
        let s = spectral_decompose(&l, None).unwrap();
        assert!(s.mu0().norm() < 1e-8);
        assert!(s.gap < -0.1, "{}", s.gap);
        let traj = propagate(&l, &spin_up(), 40.0, 0.05).unwrap();
        assert!(traj.sigma_z().iter().any(|z| z.abs() > 1.0));
    }

    #[test]
    fn spectral_reconstruction_matches_stepping() {
        let m = model(0.3, 2.8, 1.0, 1.0);
        let l = crate::generators::liouvillian(GeneratorKind::PtCcqme, &m).unwrap();
        let s = spectral_decompose(&l, Some(&spin_up())).unwrap();
        assert!(s.mu0().norm() < 1e-8 && s.gap > 0.0);
        assert!(s.conjugation_defect() < 1e-8);
        let t_end = 10.0 / (2.0 * 2f64.sqrt());
        let traj = propagate(&l, &spin_up(), t_end, t_end / 200.0).unwrap();
        let recon = s.reconstruct(t_end).unwrap();
        assert!(linalg::max_abs(&(recon - traj.last())) < 1e-6);
        assert_eq!(spectral_decompose(&l, None).unwrap().gap, s.gap);
    }

    #[test]
    fn gap_matches_decay_fit() {
        let m = model(0.3, 2.8, 1.0, 1.0);
        let l = crate::generators::liouvillian(GeneratorKind::PtCcqme, &m).unwrap();
        let s = spectral_decompose(&l, None).unwrap();
        let ss = steady_state(&l).unwrap().expectation(&linalg::pauli_z()).re;
        let t_end = 12.0 / s.gap;
        let traj = propagate(&l, &spin_up(), t_end, t_end / 2000.0).unwrap();
        let sz = traj.sigma_z();
        // Envelope decay between local maxima of |⟨σ_z⟩ − ⟨σ_z⟩_∞| late in the trajectory.
        let dev: Vec<f64> = sz.iter().map(|x| (x - ss).abs()).collect();
        let peaks: Vec<usize> = (1..dev.len() - 1).filter(|&k| dev[k] >= dev[k - 1] && dev[k] >= dev[k + 1] && dev[k] > 1e-12).collect();
        let lo = peaks.iter().copied().find(|&k| traj.times[k] > 3.0 / s.gap).unwrap();
        let hi = *peaks.iter().filter(|&&k| traj.times[k] < 9.0 / s.gap).last().unwrap();
        let rate = -(dev[hi] / dev[lo]).ln() / (traj.times[hi] - traj.times[lo]);
        assert!((rate - s.gap).abs() < 0.05 * s.gap, "fit {rate} vs gap {}", s.gap);
    }

    #[test]
    fn weak_coupling_steady_state_is_system_gibbs() {
        let m = model(1e-6, 1.0, 1.0, 1.0);
        let l = crate::generators::liouvillian(GeneratorKind::PtCcqme, &m).unwrap();
        let sz = steady_state(&l).unwrap().expectation(&linalg::pauli_z()).re;
        let expected = -(1.0 / 2f64.sqrt()) * 2f64.sqrt().tanh();
        assert!((sz - expected).abs() < 1e-4, "{sz} vs {expected}");
        assert!((expected + 0.628183).abs() < 1e-6);
    }

    #[test]
    fn infinite_temperature_steady_state_is_mixed() {
        let m = model(0.3, 1e-3, 1.0, 1.0);
        let l = crate::generators::liouvillian(GeneratorKind::PtCcqme, &m).unwrap();
        let sz = steady_state(&l).unwrap().expectation(&linalg::pauli_z()).re;
        assert!(sz.abs() < 1e-2, "{sz}");
    }

    #[test]
    fn unitary_steady_state_is_not_unique() {
        let l = crate::generators::liouvillian(GeneratorKind::PtCcqme, &model(0.0, 1.0, 1.0, 1.0)).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::NonUniqueSteadyState { .. })));
    }

    #[test]
    fn limit_states() {
        let m = model(0.0, 1.0, 1.0, 1.0);
        let strong = strong_limit_state(&m.system, 1.0).unwrap();
        assert!((strong.expectation(&linalg::pauli_z()).re + 1f64.tanh()).abs() < 1e-12);
        assert!((1f64.tanh() - 0.76159).abs() < 1e-5);
        let g = Generator::build(GeneratorKind::PtCcqme, &m).unwrap();
        let mfg = mfg_state(&g).unwrap();
        let weak = weak_limit_state(&m.system, 1.0).unwrap();
        assert!(linalg::max_abs(&(mfg.matrix() - weak.matrix())) < 1e-14);
        assert_eq!(infinite_temperature_state(3).matrix()[(1, 1)], c(1.0 / 3.0));
    }

    #[test]
    fn mfg_state_is_a_valid_density_matrix() {
        let m = model(0.4, 2.8, 1.0, 1.0);
        for kind in [GeneratorKind::PtCcqme, GeneratorKind::PtRedfield] {
            let g = Generator::build(kind, &m).unwrap();
            let s = mfg_state(&g).unwrap();
            assert!(linalg::hermiticity_defect(s.matrix()) < 1e-10);
            assert!((linalg::trace(s.matrix()) - c(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn steady_state_matches_mfg_to_residual_order() {
        let m = model(0.1, 2.8, 1.0, 1.0);
        let g = Generator::build(GeneratorKind::PtCcqme, &m).unwrap();
        let mfg = mfg_state(&g).unwrap();
        let r = g.liouvillian.apply(mfg.matrix()).norm();
        let ss = steady_state(&g.liouvillian).unwrap();
        let diff = (ss.matrix() - mfg.matrix()).norm();
        assert!(diff <= 10.0 * r, "{diff} vs {r}");
    }
}
