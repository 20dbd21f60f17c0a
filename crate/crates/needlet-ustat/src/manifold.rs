//! The compact manifold layer: Laplacian eigenstructure, geodesic distance and
//! exact quadrature for band-limited integrands.
//!
//! Only the circle (d = 1, circumference 2π) ships. Eigenvalues are λ_q = q²,
//! the eigenspace projector kernels are P_0 = 1/(2π) and
//! P_q(θ, φ) = cos(q(θ − φ))/π for q ≥ 1, and the quadrature rule for bandwidth
//! Q is the (2Q+1)-node equispaced trapezoid rule, which is exact on
//! trigonometric polynomials of degree ≤ 2Q.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Maximum node count the adaptive integration path will try.
pub const MAX_REFINE_NODES: usize = 1 << 20;

/// Relative tolerance for the dyadic refinement path.
pub const REFINE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenIndex {
    pub q: usize,
    pub lambda: f64,
    pub multiplicity: usize,
}

/// Real eigenbasis element on the circle: 1/√(2π), cos(qθ)/√π or sin(qθ)/√π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisFunction {
    Constant,
    Cos(usize),
    Sin(usize),
}

impl BasisFunction {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            BasisFunction::Constant => 1.0 / TWO_PI.sqrt(),
            BasisFunction::Cos(q) => (q as f64 * theta).cos() / PI.sqrt(),
            BasisFunction::Sin(q) => (q as f64 * theta).sin() / PI.sqrt(),
        }
    }

    pub fn q(&self) -> usize {
        match *self {
            BasisFunction::Constant => 0,
            BasisFunction::Cos(q) | BasisFunction::Sin(q) => q,
        }
    }
}

/// Immutable model of the shipped manifold (S¹). All operations are pure and
/// the value is safe to share across threads.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    dimension: usize,
    volume: f64,
}

impl ManifoldModel {
    /// The circle with circumference 2π.
    pub fn circle() -> Self {
        ManifoldModel {
            dimension: 1,
            volume: TWO_PI,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// λ_q = q².
    pub fn eigenvalue(&self, q: usize) -> f64 {
        (q * q) as f64
    }

    /// Eigenvalues with multiplicities, ordered by q.
    pub fn eigen_index_set(&self, max_q: usize) -> Vec<EigenIndex> {
        (0..=max_q)
            .map(|q| EigenIndex {
                q,
                lambda: self.eigenvalue(q),
                multiplicity: if q == 0 { 1 } else { 2 },
            })
            .collect()
    }

    /// Real orthonormal basis up to frequency `max_q`.
    pub fn basis_functions(&self, max_q: usize) -> Vec<BasisFunction> {
        let mut out = vec![BasisFunction::Constant];
        for q in 1..=max_q {
            out.push(BasisFunction::Cos(q));
            out.push(BasisFunction::Sin(q));
        }
        out
    }

    /// Eigenspace projector kernel P_q(x, y), summed over the q-th eigenspace.
    pub fn projector(&self, q: usize, x: f64, y: f64) -> f64 {
        if q == 0 {
            1.0 / TWO_PI
        } else {
            (q as f64 * (x - y)).cos() / PI
        }
    }

    /// Geodesic distance on the circle.
    pub fn geodesic(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).rem_euclid(TWO_PI);
        d.min(TWO_PI - d)
    }

    /// Equispaced rule with M = 2·bandwidth + 1 nodes and uniform weights
    /// 2π/M; exact for trigonometric polynomials of degree ≤ 2·bandwidth.
    pub fn quadrature_rule(&self, bandwidth: usize) -> Vec<(f64, f64)> {
        let m = 2 * bandwidth + 1;
        self.equispaced_rule(m)
    }

    pub fn equispaced_rule(&self, nodes: usize) -> Vec<(f64, f64)> {
        let w = TWO_PI / nodes as f64;
        (0..nodes).map(|i| (w * i as f64, w)).collect()
    }

    /// All q with λ_q ∈ [B^{2(j−1)}, B^{2(j+1)}]. Empty result is legal.
    pub fn eigen_window_indices(&self, b: f64, j: usize) -> Vec<usize> {
        assert!(b > 1.0, "scale parameter must exceed 1");
        let lo = b.powi(2 * (j as i32 - 1));
        let hi = b.powi(2 * (j as i32 + 1));
        // λ_q = q², so q ranges over [B^{j-1}, B^{j+1}]; a tiny slack guards
        // against roundoff at the interval edges.
        let q_lo = ((lo.sqrt() - 1e-9).ceil().max(0.0)) as usize;
        let q_hi = (hi.sqrt() + 1e-9).floor() as usize;
        (q_lo.max(1)..=q_hi)
            .filter(|&q| {
                let l = self.eigenvalue(q);
                l >= lo - 1e-9 && l <= hi + 1e-9
            })
            .collect()
    }

    /// Integrate a band-limited function exactly with the stated bandwidth.
    pub fn integrate_bandlimited(&self, g: impl Fn(f64) -> f64, bandwidth: usize) -> f64 {
        let rule = self.quadrature_rule(bandwidth);
        rule.iter().map(|&(x, w)| w * g(x)).sum()
    }

    /// Integrate with dyadic node doubling until successive values agree to
    /// `REFINE_RTOL` relative; errors out past `MAX_REFINE_NODES` nodes.
    pub fn integrate_adaptive(&self, g: impl Fn(f64) -> f64, start_nodes: usize) -> Result<f64> {
        let mut nodes = start_nodes.max(16);
        let mut prev = self
            .equispaced_rule(nodes)
            .iter()
            .map(|&(x, w)| w * g(x))
            .sum::<f64>();
        let mut levels = 0usize;
        let mut last_delta = f64::INFINITY;
        while nodes * 2 <= MAX_REFINE_NODES {
            nodes *= 2;
            levels += 1;
            let cur = self
                .equispaced_rule(nodes)
                .iter()
                .map(|&(x, w)| w * g(x))
                .sum::<f64>();
            last_delta = (cur - prev).abs();
            let scale = cur.abs().max(1e-30);
            if last_delta <= REFINE_RTOL * scale + 1e-14 {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::NonConvergence { levels, last_delta })
    }

    /// Integrate; exact when a bandwidth is supplied, refined otherwise.
    pub fn integrate(&self, g: impl Fn(f64) -> f64, bandwidth: Option<usize>) -> Result<f64> {
        match bandwidth {
            Some(q) => Ok(self.integrate_bandlimited(g, q)),
            None => self.integrate_adaptive(g, 64),
        }
    }
}
