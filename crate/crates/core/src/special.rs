//! Trigamma function ψ₁(z) = Σ_{n≥0} 1/(z+n)² for real and complex arguments.

use num_complex::Complex64;

use crate::error::{Error, Result};

// Bernoulli numbers B_2..B_18 for the asymptotic tail Σ B_2k / z^(2k+1).
const BERNOULLI: [f64; 9] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
];

const SHIFT_RADIUS: f64 = 12.0;

/// Trigamma of a positive real argument.
pub fn trigamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("trigamma needs a finite positive argument, got {z}")));
    }
    Ok(trigamma_complex(Complex64::new(z, 0.0))?.re)
}

/// Trigamma for `Re z > 0`.
pub fn trigamma_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::Domain(format!("trigamma needs Re z > 0, got {z}")));
    }
    let mut z = z;
    let mut acc = Complex64::new(0.0, 0.0);
    // Recurrence ψ₁(z) = 1/z² + ψ₁(z+1) until the asymptotic series is accurate.
    while z.norm() < SHIFT_RADIUS {
        acc += (z * z).inv();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut power = inv2 * inv;
    for b in BERNOULLI {
        tail += power * b;
        power *= inv2;
    }
    Ok(acc + inv + inv2 * 0.5 + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct partial sum plus the Euler–Maclaurin remainder ∫_M^∞ + ½f(M) + ...
    fn series_oracle(z: f64) -> f64 {
        let m = 10_000_000u64;
        let mut s = 0.0;
        // Sum small terms first.
        for n in (0..m).rev() {
            let x = z + n as f64;
            s += 1.0 / (x * x);
        }
        let tail_start = z + m as f64;
        s + 1.0 / tail_start + 0.5 / (tail_start * tail_start) + 1.0 / (6.0 * tail_start.powi(3))
    }

    #[test]
    fn value_at_one_is_zeta_two() {
        let oracle = series_oracle(1.0);
        assert!((oracle - PI * PI / 6.0).abs() < 1e-13);
        let v = trigamma(1.0).unwrap();
        assert!((v - 1.644_934_066_848_226_4).abs() < 1e-14);
        assert!((v - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn value_at_two() {
        let v = trigamma(2.0).unwrap();
        assert!((v - (PI * PI / 6.0 - 1.0)).abs() < 1e-13);
        assert!((v - 0.644_934_066_848_226_4).abs() < 1e-12);
    }

    #[test]
    fn recurrence_at_0_37() {
        let z = 0.37;
        let lhs = trigamma(z + 1.0).unwrap();
        let rhs = trigamma(z).unwrap() - 1.0 / (z * z);
        assert!((lhs - rhs).abs() / lhs.abs() < 1e-12);
    }

    #[test]
    fn half_integer_value() {
        // ψ₁(1/2) = π²/2
        assert!((trigamma(0.5).unwrap() - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn complex_conjugate_symmetry_and_recurrence() {
        let z = Complex64::new(0.4, 3.7);
        let a = trigamma_complex(z).unwrap();
        let b = trigamma_complex(z.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
        let next = trigamma_complex(z + 1.0).unwrap();
        assert!((next - (a - (z * z).inv())).norm() < 1e-13 * a.norm());
    }

    #[test]
    fn complex_matches_partial_sum() {
        let z = Complex64::new(0.8, -2.5);
        let m = 2_000_000;
        let mut s = Complex64::new(0.0, 0.0);
        for n in (0..m).rev() {
            let x = z + n as f64;
            s += (x * x).inv();
        }
        let t = z + m as f64;
        s += t.inv() + (t * t).inv() * 0.5;
        assert!((trigamma_complex(z).unwrap() - s).norm() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(trigamma(0.0).is_err());
        assert!(trigamma(-1.5).is_err());
        assert!(trigamma_complex(Complex64::new(-0.1, 2.0)).is_err());
    }
}
