//! Independent reference engines: a finite discretized bath with brute-force
//! correlation sums, and exact diagonalization of system plus truncated modes.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::model::{DensityMatrix, SpectralDensity, SystemSpec};

/// Largest total Hilbert-space dimension accepted by [`exact_evolve`].
pub const DIMENSION_CAP: usize = 4096;

/// Default upper frequency of the discretization, in units of the density's scale.
pub const DEFAULT_OMEGA_MAX: f64 = 8.0;

/// Harmonic modes `(ω_k, g_k)` with `J(ω) ≈ π Σ_k g_k² δ(ω − ω_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub modes: Vec<(f64, f64)>,
    pub fock_cutoff: usize,
    pub beta: f64,
}

/// Gauss–Legendre discretization of `J` on `(0, 8ω_c]`.
pub fn discretize_bath(density: &SpectralDensity, beta: f64, k: usize, cutoff: usize) -> Result<DiscreteBath> {
    let omega_max = (DEFAULT_OMEGA_MAX * density.scale()).min(density.support());
    discretize_bath_to(density, beta, k, cutoff, omega_max)
}

/// As [`discretize_bath`] with an explicit upper frequency.
pub fn discretize_bath_to(density: &SpectralDensity, beta: f64, k: usize, cutoff: usize, omega_max: f64) -> Result<DiscreteBath> {
    if k == 0 {
        return Err(Error::Validation("mode count must be at least 1".into()));
    }
    if cutoff == 0 {
        return Err(Error::Validation("Fock cutoff must be at least 1".into()));
    }
    if !(omega_max > 0.0) || !(beta > 0.0) {
        return Err(Error::Validation(format!("need positive ω_max and β, got {omega_max} and {beta}")));
    }
    let modes = if k == 1 {
        let w = density.scale().min(omega_max);
        vec![(w, (density.eval(w) * omega_max / std::f64::consts::PI).sqrt())]
    } else {
        let rule = GaussLegendre::new(k).map_err(|e| Error::Numeric(format!("Gauss–Legendre rule: {e}")))?;
        let mut modes: Vec<(f64, f64)> = rule
            .iter()
            .map(|(x, w)| {
                let omega = 0.5 * omega_max * (x + 1.0);
                let weight = 0.5 * omega_max * w;
                (omega, (density.eval(omega) * weight / std::f64::consts::PI).sqrt())
            })
            .collect();
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));
        modes
    };
    Ok(DiscreteBath { modes, fock_cutoff: cutoff, beta })
}

impl DiscreteBath {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `Σ_k g_k² f(ω_k)`, the discrete version of `(1/π)∫ J f`.
    pub fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.modes.iter().map(|&(w, g)| g * g * f(w)).sum()
    }

    pub fn coth_integral(&self) -> f64 {
        let beta = self.beta;
        self.moment(|w| 1.0 / ((0.5 * beta * w).tanh() * w * w))
    }

    pub fn kappa(&self, d: f64) -> f64 {
        (-0.5 * d * d * self.coth_integral()).exp()
    }

    pub fn xi(&self, cn: f64) -> f64 {
        -cn * cn * self.moment(|w| 1.0 / w)
    }

    /// `Σ_k (g_k/ω_k)² [coth(βω_k/2) cos ω_k τ − i sin ω_k τ]`.
    pub fn unit_exponent(&self, tau: f64) -> Complex64 {
        let beta = self.beta;
        self.modes
            .iter()
            .map(|&(w, g)| {
                let a = g * g / (w * w);
                let (s, co) = (w * tau).sin_cos();
                Complex64::new(a * co / (0.5 * beta * w).tanh(), -a * s)
            })
            .sum()
    }

    /// First recurrence time `2π / min_k(ω_{k+1} − ω_k)`; infinite for a single mode.
    pub fn recurrence_time(&self) -> f64 {
        if self.modes.len() < 2 {
            return f64::INFINITY;
        }
        let spacing = self.modes.windows(2).map(|p| p[1].0 - p[0].0).fold(f64::INFINITY, f64::min);
        2.0 * std::f64::consts::PI / spacing
    }
}

/// `κκ'[e^{−dd'E(τ)} − 1]` from the discrete sums.
pub fn discrete_correlation(bath: &DiscreteBath, d: f64, d_prime: f64, tau: f64) -> Complex64 {
    let dd = d * d_prime;
    if dd == 0.0 {
        return c(0.0);
    }
    let kk = bath.kappa(d) * bath.kappa(d_prime);
    kk * ((-dd * bath.unit_exponent(tau)).exp() - 1.0)
}

/// Reduced dynamics from exact evolution of system plus discrete bath.
#[derive(Debug, Clone)]
pub struct ExactEvolution {
    pub trajectory: Trajectory,
    pub dimension: usize,
    pub recurrence_time: f64,
    /// Set when the requested window reaches the recurrence time.
    pub warning: Option<String>,
}

fn real_symmetric_eigen(h: &faer::Mat<f64>) -> Result<(Vec<f64>, faer::Mat<f64>)> {
    let evd = h
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("symmetric eigensolver failed: {e:?}")))?;
    let n = h.nrows();
    Ok(((0..n).map(|k| evd.S()[k]).collect(), evd.U().to_owned()))
}

/// Evolves `ρ_S(0) ⊗ Π_k e^{−βω_k b†b}/Z_k` under the full Hamiltonian and traces out the modes.
pub fn exact_evolve(sys: &SystemSpec, bath: &DiscreteBath, rho0: &DensityMatrix, t_max: f64, dt: f64) -> Result<ExactEvolution> {
    let n = sys.dim();
    let cut = bath.fock_cutoff;
    let modes = bath.len();
    let bath_dim = (0..modes).try_fold(1usize, |acc, _| acc.checked_mul(cut));
    let dimension = bath_dim.and_then(|m| m.checked_mul(n)).unwrap_or(usize::MAX);
    if dimension > DIMENSION_CAP {
        return Err(Error::DimensionCap { dim: dimension, cap: DIMENSION_CAP });
    }
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::Validation(format!("need dt > 0 and t_max ≥ 0, got {dt} and {t_max}")));
    }
    if rho0.dim() != n {
        return Err(Error::Validation(format!("initial state has dimension {}, system has {n}", rho0.dim())));
    }
    if sys.hopping().iter().any(|z| z.im != 0.0) {
        return Err(Error::Validation("exact evolution supports real hopping only".into()));
    }
    let m = bath_dim.unwrap_or(1);

    // Occupation of mode k in bath index b; mode 0 varies slowest.
    let occupation = |b: usize, k: usize| (b / cut.pow((modes - 1 - k) as u32)) % cut;
    let h = faer::Mat::<f64>::from_fn(dimension, dimension, |row, col| {
        let (s, b) = (row / m, row % m);
        let (s2, b2) = (col / m, col % m);
        let mut v = 0.0;
        if b == b2 {
            v += sys.hamiltonian()[(s, s2)].re;
            if s == s2 {
                v += (0..modes).map(|k| bath.modes[k].0 * occupation(b, k) as f64).sum::<f64>();
            }
        }
        if s == s2 {
            let cs = sys.coupling()[s];
            let mut diff = None;
            for k in 0..modes {
                if occupation(b, k) != occupation(b2, k) {
                    if diff.is_some() {
                        return v;
                    }
                    diff = Some(k);
                }
            }
            if let Some(k) = diff {
                let (p, q) = (occupation(b, k), occupation(b2, k));
                if p + 1 == q || q + 1 == p {
                    v += cs * bath.modes[k].1 * (p.max(q) as f64).sqrt();
                }
            }
        }
        v
    });
    let (lambda, v) = real_symmetric_eigen(&h)?;

    // Thermal weights of the truncated modes.
    let mut p_bath = vec![1.0; m];
    for k in 0..modes {
        let w = bath.modes[k].0;
        let z: f64 = (0..cut).map(|q| (-bath.beta * w * q as f64).exp()).sum();
        for (b, p) in p_bath.iter_mut().enumerate() {
            *p *= (-bath.beta * w * occupation(b, k) as f64).exp() / z;
        }
    }

    // Rows of V belonging to system state s, as an m × D block.
    let block = |s: usize| v.as_ref().subrows(s * m, m);
    let mut rho_tilde = faer::Mat::<Complex64>::zeros(dimension, dimension);
    for i in 0..n {
        for j in 0..n {
            let r = rho0.matrix()[(i, j)];
            if r.norm() == 0.0 {
                continue;
            }
            let weighted = faer::Mat::<f64>::from_fn(m, dimension, |b, a| p_bath[b] * block(j)[(b, a)]);
            let prod = block(i).transpose() * weighted.as_ref();
            rho_tilde += faer::Mat::<Complex64>::from_fn(dimension, dimension, |a, b| r * prod[(a, b)]);
        }
    }
    // X^{(ij)}_ab = Õ^{(ji)}_ba ρ̃_ab with Õ^{(ji)} = V_jᵀ V_i, so that ρ_S(t)_ij = zᵀ X z̄.
    let mut x = Vec::new();
    for i in 0..n {
        for j in i..n {
            let o = block(i).transpose() * block(j);
            x.push(((i, j), faer::Mat::<Complex64>::from_fn(dimension, dimension, |a, b| rho_tilde[(a, b)] * o[(a, b)])));
        }
    }

    let steps = (t_max / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let t = step as f64 * dt;
        let z = faer::Col::<Complex64>::from_fn(dimension, |a| Complex64::from_polar(1.0, -lambda[a] * t));
        let zc = faer::Col::<Complex64>::from_fn(dimension, |a| z[a].conj());
        let mut rho = CMatrix::zeros(n, n);
        for ((i, j), xm) in &x {
            let y = xm * &zc;
            let val: Complex64 = (0..dimension).map(|a| z[a] * y[a]).sum();
            rho[(*i, *j)] = val;
            rho[(*j, *i)] = val.conj();
        }
        times.push(t);
        states.push(rho);
    }
    let recurrence_time = bath.recurrence_time();
    let warning = (t_max >= recurrence_time)
        .then(|| format!("window {t_max} reaches the discrete-bath recurrence time {recurrence_time:.3}"));
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(ExactEvolution { trajectory: Trajectory { times, states }, dimension, recurrence_time, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::Bath;
    use crate::dynamics::spin_up;
    use crate::linalg;
    use crate::model::{BathSpec, Model};

    fn density(gamma: f64) -> SpectralDensity {
        SpectralDensity::super_ohmic(gamma, 1.0).unwrap()
    }

    #[test]
    fn modes_are_ordered_and_positive() {
        let b = discretize_bath(&density(0.1), 2.0, 40, 1).unwrap();
        assert_eq!(b.len(), 40);
        assert!(b.modes.windows(2).all(|p| p[0].0 < p[1].0));
        assert!(b.modes.iter().all(|&(w, g)| w > 0.0 && w <= 8.0 && g > 0.0));
        let single = discretize_bath(&density(0.1), 2.0, 1, 3).unwrap();
        assert_eq!(single.modes[0].0, 1.0);
        assert!(single.recurrence_time().is_infinite());
    }

    #[test]
    fn moments_match_defining_integrals() {
        let rho = density(0.1);
        let spec = BathSpec::new(2.0, rho.clone()).unwrap();
        let cont = Bath::new(&spec).unwrap();
        let b = discretize_bath_to(&rho, 2.0, 2000, 1, 40.0).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(b.kappa(2.0), cont.kappa(2.0)) < 1e-4);
        assert!(rel(b.xi(1.0), cont.xi(1.0)) < 1e-4);
        // With the default 8ω_c window the tail ∫_8^∞ ω e^{−ω} is missing.
        let short = discretize_bath(&rho, 2.0, 64, 1).unwrap();
        assert!(rel(short.kappa(2.0), cont.kappa(2.0)) < 1e-3);
    }

    #[test]
    fn correlation_sum_matches_continuum() {
        let rho = density(0.1);
        let cont = Bath::new(&BathSpec::new(2.0, rho.clone()).unwrap()).unwrap();
        let b = discretize_bath_to(&rho, 2.0, 2000, 1, 40.0).unwrap();
        for tau in [0.0, 0.5, 1.0, 5.0, 20.0] {
            for dd in [2.0, -2.0] {
                let a = discrete_correlation(&b, 2.0, dd, tau);
                let e = cont.correlation(2.0, dd, crate::bath::Tau::Real(tau)).unwrap();
                assert!((a - e).norm() < 1e-4, "{tau} {dd}: {a} vs {e}");
            }
        }
        let k = b.kappa(2.0);
        assert!((discrete_correlation(&b, 2.0, -2.0, 0.0) - c(1.0 - k * k)).norm() < 1e-12);
        assert_eq!(discrete_correlation(&b, 2.0, 0.0, 1.0), c(0.0));
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let m = Model::spin_boson(1.0, 1.0, BathSpec::new(1.0, density(0.1)).unwrap()).unwrap();
        let b = discretize_bath(&density(0.1), 1.0, 7, 4).unwrap();
        assert!(matches!(exact_evolve(&m.system, &b, &spin_up(), 1.0, 0.1), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn uncoupled_modes_give_unitary_qubit() {
        let (eps, h) = (1.0, 0.6);
        let m = Model::spin_boson(eps, h, BathSpec::new(1.0, density(0.0)).unwrap()).unwrap();
        let b = discretize_bath(&density(0.0), 1.0, 2, 3).unwrap();
        let ed = exact_evolve(&m.system, &b, &spin_up(), 4.0, 0.05).unwrap();
        let omega = (eps * eps + h * h).sqrt();
        for (t, sz) in ed.trajectory.times.iter().zip(ed.trajectory.sigma_z()) {
            let (s, co) = (omega * t).sin_cos();
            let expected = co * co + s * s * (eps * eps - h * h) / (eps * eps + h * h);
            assert!((sz - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_dephasing_conserves_populations() {
        let m = Model::spin_boson(1.0, 0.0, BathSpec::new(1.0, density(0.5)).unwrap()).unwrap();
        let b = discretize_bath(&density(0.5), 1.0, 3, 4).unwrap();
        let rho0 = DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(0.7), c(0.3), c(0.3), c(0.3)])).unwrap();
        let ed = exact_evolve(&m.system, &b, &rho0, 5.0, 0.1).unwrap();
        for rho in &ed.trajectory.states {
            assert!((rho[(0, 0)].re - 0.7).abs() < 1e-10 && (rho[(1, 1)].re - 0.3).abs() < 1e-10);
        }
        let coherence = ed.trajectory.states.last().unwrap()[(0, 1)].norm();
        assert!(coherence < 0.3);
        assert!((linalg::trace(ed.trajectory.last()) - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn truncation_is_converged_at_the_benchmark_point() {
        let s = 2.0 * 2f64.sqrt();
        let beta = 1.4 / s;
        let m = Model::spin_boson(1.0, 1.0, BathSpec::new(beta, density(0.05)).unwrap()).unwrap();
        let t_max = 8.0 / s;
        let run = |cut| {
            let b = discretize_bath(&density(0.05), beta, 4, cut).unwrap();
            exact_evolve(&m.system, &b, &spin_up(), t_max, t_max / 100.0).unwrap().trajectory.sigma_z()
        };
        let (a, b, reference) = (run(4), run(5), run(6));
        let dist = |x: &[f64]| x.iter().zip(&reference).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let (d4, d5) = (dist(&a), dist(&b));
        // Low-frequency modes are thermally occupied well above the cutoff, so convergence is slow.
        assert!(d5 < d4 && d4 < 0.05, "{d4} {d5}");
    }
}
