//! Smooth window function b with support in [1/B, B] and the exact partition
//! of unity Σ_{j≥0} b²(t·B^{−j}) = 1 for t ≥ 1.
//!
//! The construction is the standard bump one: φ(x) = ∫_{−1}^{x} e^{−1/(1−u²)} du
//! normalized to φ(1) = 1, a smooth step-down
//! g(u) = φ(1 − 2B/(B−1)·(u − 1/B)) on [1/B, 1], and b²(t) = g(t/B) − g(t).
//! Because b² telescopes in g, the partition of unity holds to roundoff no
//! matter how g itself is evaluated.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Grid used to cache the cumulative bump integral on [−1, 1].
const PHI_STEPS: usize = 1 << 16;

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Cumulative Simpson table of the bump integral at PHI_STEPS+1 uniform nodes
/// on [−1, 1], normalized so the last entry is 1.
fn phi_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = PHI_STEPS;
        let h = 2.0 / n as f64;
        let mut acc = vec![0.0f64; n + 1];
        for i in 0..n {
            let a = -1.0 + h * i as f64;
            let fa = bump(a);
            let fm = bump(a + 0.5 * h);
            let fb = bump(a + h);
            acc[i + 1] = acc[i] + h / 6.0 * (fa + 4.0 * fm + fb);
        }
        let total = acc[n];
        for v in acc.iter_mut() {
            *v /= total;
        }
        acc
    })
}

/// Four-point Lagrange interpolation on a uniform table.
fn lagrange4(table: &[f64], pos: f64) -> f64 {
    let n = table.len();
    let i = (pos.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = pos - i as f64;
    let (f0, f1, f2, f3) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3
}

/// Interpolated φ(x) on [−1, 1].
fn phi_interp(x: f64) -> f64 {
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let pos = (x + 1.0) / 2.0 * PHI_STEPS as f64;
        lagrange4(phi_table(), pos).clamp(0.0, 1.0)
    }
}

/// φ(x) by adaptive Simpson, used only as the direct-evaluation reference.
fn phi_direct(x: f64) -> f64 {
    if x <= -1.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn adapt(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let lm = bump(0.5 * (a + m));
        let rm = bump(0.5 * (m + b));
        let left = simpson(a, m, fa, lm, fm);
        let right = simpson(m, b, fm, rm, fb);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            adapt(a, m, fa, lm, fm, left, tol / 2.0, depth - 1)
                + adapt(m, b, fm, rm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (a, b) = (-1.0, x);
    let fa = bump(a);
    let fm = bump(0.5 * (a + b));
    let fb = bump(b);
    let whole = simpson(a, b, fa, fm, fb);
    let raw = adapt(a, b, fa, fm, fb, whole, 1e-14, 40);
    let total = {
        let fm0 = bump(0.0);
        let w = simpson(-1.0, 1.0, 0.0, fm0, 0.0);
        adapt(-1.0, 1.0, 0.0, fm0, 0.0, w, 1e-14, 40)
    };
    (raw / total).clamp(0.0, 1.0)
}

/// Needlet window b for scale parameter B > 1.
#[derive(Debug, Clone)]
pub struct WindowFunction {
    scale: f64,
}

impl WindowFunction {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 1.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "B must exceed 1, got {scale}"
            )));
        }
        phi_table(); // warm the shared cache
        Ok(WindowFunction { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Smooth step-down g: 1 on (−∞, 1/B], 0 on [1, ∞).
    fn step(&self, u: f64, phi: impl Fn(f64) -> f64) -> f64 {
        let b = self.scale;
        if u <= 1.0 / b {
            1.0
        } else if u >= 1.0 {
            0.0
        } else {
            phi(1.0 - 2.0 * b / (b - 1.0) * (u - 1.0 / b))
        }
    }

    /// b²(t), cached-table path.
    pub fn evaluate_sq(&self, t: f64) -> f64 {
        let b = self.scale;
        if t <= 1.0 / b || t >= b {
            return 0.0;
        }
        (self.step(t / b, phi_interp) - self.step(t, phi_interp)).max(0.0)
    }

    /// b(t), cached-table path.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_sq(t).sqrt()
    }

    /// b(t) by direct adaptive quadrature; the reference the cache is tested
    /// against.
    pub fn evaluate_direct(&self, t: f64) -> f64 {
        let b = self.scale;
        if t <= 1.0 / b || t >= b {
            return 0.0;
        }
        (self.step(t / b, phi_direct) - self.step(t, phi_direct))
            .max(0.0)
            .sqrt()
    }

    /// Σ_{j=0..j_terms} b²(t·B^{−j}); equals 1 for t ≥ 1 once j_terms covers
    /// the support.
    pub fn partition_sum(&self, t: f64, j_terms: usize) -> f64 {
        (0..=j_terms)
            .map(|j| self.evaluate_sq(t / self.scale.powi(j as i32)))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_scale() {
        assert!(WindowFunction::new(1.0).is_err());
        assert!(WindowFunction::new(0.5).is_err());
    }

    #[test]
    fn support_boundaries_vanish() {
        let w = WindowFunction::new(2.0).unwrap();
        assert_eq!(w.evaluate(0.5), 0.0);
        assert_eq!(w.evaluate(2.0), 0.0);
        assert_eq!(w.evaluate(0.499), 0.0);
        assert_eq!(w.evaluate(2.001), 0.0);
    }

    #[test]
    fn partition_of_unity() {
        // Oracle: direct numeric summation over j.
        let w = WindowFunction::new(2.0).unwrap();
        let s = w.partition_sum(7.3, 40);
        assert!((s - 1.0).abs() < 1e-10, "partition sum {s}");
        for &t in &[1.0, 1.5, 3.3, 10.0, 997.0] {
            let s = w.partition_sum(t, 60);
            assert!((s - 1.0).abs() < 1e-10, "partition sum at {t}: {s}");
        }
    }

    #[test]
    fn interior_positivity() {
        let w = WindowFunction::new(2.0).unwrap();
        assert!(w.evaluate(1.0) >= 0.0);
        let max = (0..1000)
            .map(|i| w.evaluate(0.5 + 1.5 * i as f64 / 999.0))
            .fold(0.0f64, f64::max);
        assert!(max > 0.5);
    }

    #[test]
    fn cache_matches_direct_evaluation() {
        let w = WindowFunction::new(2.0).unwrap();
        for i in 0..200 {
            let t = 0.5 + 1.5 * i as f64 / 199.0;
            let cached = w.evaluate(t);
            let direct = w.evaluate_direct(t);
            // b² agrees to near roundoff; b itself loses half the digits at
            // the support edges where the square root has infinite slope.
            assert!(
                (cached * cached - direct * direct).abs() < 1e-12,
                "interp error in b² at t={t}: {}",
                (cached * cached - direct * direct).abs()
            );
            assert!(
                (cached - direct).abs() < 1e-7,
                "interp error in b at t={t}: {}",
                (cached - direct).abs()
            );
        }
    }

    #[test]
    fn finite_difference_derivatives_bounded() {
        // Smoothness proxy: centered finite differences up to order 4 stay
        // bounded on a grid spanning the support.
        let w = WindowFunction::new(2.0).unwrap();
        let h = 1e-3;
        let mut max_d = 0.0f64;
        for i in 0..500 {
            let t = 0.52 + 1.44 * i as f64 / 499.0;
            let f: Vec<f64> = (-2..=2).map(|k| w.evaluate(t + k as f64 * h)).collect();
            let d4 = (f[0] - 4.0 * f[1] + 6.0 * f[2] - 4.0 * f[3] + f[4]) / h.powi(4);
            max_d = max_d.max(d4.abs());
        }
        assert!(max_d.is_finite());
        assert!(max_d < 1e9, "fourth difference blew up: {max_d}");
    }
}
