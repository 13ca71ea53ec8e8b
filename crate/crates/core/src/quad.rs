//! Globally adaptive Gauss–Kronrod quadrature.
//!
//! Every bath integral in the crate goes through [`Quadrature`]. The rule is
//! the 10-point Gauss / 21-point Kronrod pair with the QUADPACK error
//! heuristic. Panels whose error is already at the round-off floor of their
//! own sum are retired instead of being split further.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_351_996,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Result of an integration: value plus the achieved error bound.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {target:.3e}: achieved error {achieved:.3e} after {intervals} intervals")]
    NotConverged { target: f64, achieved: f64, intervals: usize },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

/// Adaptive quadrature settings.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
    floor: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Rule<V> {
    value: V,
    error: f64,
    floor: f64,
}

fn kronrod21<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> Result<Rule<V>, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [V::zero(); 21];
    let mut xs = [center; 21];
    for j in 0..10 {
        let dx = half * XGK[j];
        xs[2 * j] = center - dx;
        xs[2 * j + 1] = center + dx;
    }
    for (x, v) in xs.iter().zip(fv.iter_mut()) {
        *v = f(*x);
        if !v.is_finite_value() {
            return Err(QuadError::NonFinite { x: *x });
        }
    }
    let fc = fv[20];
    let mut kronrod = fc * WGK[10];
    let mut abs_sum = fc.magnitude() * WGK[10];
    let mut gauss = V::zero();
    for j in 0..10 {
        let sum = fv[2 * j] + fv[2 * j + 1];
        kronrod = kronrod + sum * WGK[j];
        abs_sum += WGK[j] * (fv[2 * j].magnitude() + fv[2 * j + 1].magnitude());
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (fc - mean).magnitude();
    for j in 0..10 {
        asc += WGK[j] * ((fv[2 * j] - mean).magnitude() + (fv[2 * j + 1] - mean).magnitude());
    }
    let scale = half.abs();
    let value = kronrod * half;
    let abs_sum = abs_sum * scale;
    let asc = asc * scale;
    let mut error = ((kronrod - gauss) * half).magnitude();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_sum;
    Ok(Rule { value, error: error.max(floor), floor })
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<V: QuadValue, F: FnMut(f64) -> V>(&self, f: F, a: f64, b: f64) -> Result<Estimate<V>, QuadError> {
        self.integrate_breaks(f, &[a, b])
    }

    /// Integrates over consecutive sub-intervals of `breaks`; kinks or jumps of
    /// the integrand should sit on a break point.
    pub fn integrate_breaks<V: QuadValue, F: FnMut(f64) -> V>(
        &self,
        mut f: F,
        breaks: &[f64],
    ) -> Result<Estimate<V>, QuadError> {
        assert!(breaks.len() >= 2, "need at least one interval");
        let mut heap = BinaryHeap::new();
        let mut total = V::zero();
        let mut total_err = 0.0;
        let mut total_floor = 0.0;
        let mut evaluations = 0;
        for w in breaks.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let r = kronrod21(&mut f, w[0], w[1])?;
            evaluations += 21;
            total = total + r.value;
            total_err += r.error;
            total_floor += r.floor;
            heap.push(Panel { a: w[0], b: w[1], value: r.value, error: r.error, floor: r.floor });
        }
        let mut retired = Vec::new();
        loop {
            let target = self.abs_tol.max(self.rel_tol * total.magnitude());
            // The accumulated round-off of all panels cannot be refined away.
            if total_err <= target.max(2.0 * total_floor) {
                break;
            }
            if heap.len() + retired.len() >= self.max_intervals {
                return Err(QuadError::NotConverged { target, achieved: total_err, intervals: heap.len() + retired.len() });
            }
            let Some(worst) = heap.pop() else {
                // Every panel sits at its round-off floor; nothing left to refine.
                break;
            };
            let width = (worst.b - worst.a).abs();
            let tiny = width <= 64.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
            if worst.error <= worst.floor || tiny {
                if tiny && worst.error > worst.floor {
                    return Err(QuadError::NotConverged { target, achieved: total_err, intervals: heap.len() + 1 });
                }
                retired.push(worst);
                continue;
            }
            let mid = 0.5 * (worst.a + worst.b);
            let r1 = kronrod21(&mut f, worst.a, mid)?;
            let r2 = kronrod21(&mut f, mid, worst.b)?;
            evaluations += 42;
            total = total - worst.value + r1.value + r2.value;
            total_err += r1.error + r2.error - worst.error;
            total_floor += r1.floor + r2.floor - worst.floor;
            heap.push(Panel { a: worst.a, b: mid, value: r1.value, error: r1.error, floor: r1.floor });
            heap.push(Panel { a: mid, b: worst.b, value: r2.value, error: r2.error, floor: r2.floor });
        }
        // Re-sum to shed accumulated cancellation in the running total.
        let mut value = V::zero();
        let mut error = 0.0;
        for p in heap.iter().chain(retired.iter()) {
            value = value + p.value;
            error += p.error;
        }
        Ok(Estimate { value, error, evaluations })
    }

    /// Integrates over `[a, ∞)` through the map `x = a + scale·t/(1−t)`.
    pub fn integrate_to_infinity<V: QuadValue, F: FnMut(f64) -> V>(
        &self,
        mut f: F,
        a: f64,
        scale: f64,
    ) -> Result<Estimate<V>, QuadError> {
        self.integrate(
            |t: f64| {
                let one_minus = 1.0 - t;
                let x = a + scale * t / one_minus;
                let jac = scale / (one_minus * one_minus);
                let v = f(x);
                // The integrand has decayed long before the map's endpoint.
                if jac.is_finite() && x.is_finite() {
                    v * jac
                } else {
                    V::zero()
                }
            },
            0.0,
            1.0,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x: f64| x.powi(7) - 3.0 * x * x, -1.0, 2.0).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        let q = Quadrature::default();
        let lam = 7.3;
        let r = q
            .integrate(|t: f64| Complex64::new(0.0, -lam * t).exp() * (-t).exp(), 0.0, 60.0)
            .unwrap();
        let exact = Complex64::new(1.0, 0.0) / Complex64::new(1.0, lam);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn semi_infinite_gaussian() {
        let q = Quadrature::default();
        let r = q.integrate_to_infinity(|x: f64| (-x * x).exp(), 0.0, 1.0).unwrap();
        assert!((r.value - PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn kink_on_break_point() {
        let q = Quadrature::default();
        let r = q.integrate_breaks(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0]).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
        assert!(r.evaluations <= 42);
    }

    #[test]
    fn reports_non_convergence() {
        let q = Quadrature::new(1e-14, 1e-14).with_max_intervals(8);
        let err = q.integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0).unwrap_err();
        assert!(matches!(err, QuadError::NotConverged { .. }));
    }
}
