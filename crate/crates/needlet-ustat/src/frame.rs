//! Needlet frame construction on the circle: per-level cubature lattices,
//! needlet evaluation (exact eigen-sum path and a dense cached table for the
//! Monte Carlo hot loop), needlet coefficients, localization envelopes, L^p
//! norms and product-integral bounds.

use crate::error::{Error, Result};
use crate::manifold::{ManifoldModel, TWO_PI};
use crate::window::WindowFunction;
use std::f64::consts::PI;

/// Table resolution per lattice pixel; K_j·PER_PIXEL samples of the needlet
/// profile give 4-point Lagrange interpolation errors ~1e-11 relative.
const PER_PIXEL: usize = 1024;

/// Relative threshold below which the profile is treated as zero in the
/// truncated evaluation window.
const SUPPORT_THRESHOLD: f64 = 1e-15;

/// One resolution level: frequency window, cubature lattice and evaluators.
#[derive(Debug, Clone)]
pub struct FrameLevel {
    pub j: usize,
    /// Frequencies in Λ_j.
    pub qs: Vec<usize>,
    /// b(q / B^j) for q in Λ_j.
    pub b_coeffs: Vec<f64>,
    /// Number of cubature points K_j.
    pub k_count: usize,
    /// Uniform cubature weight λ_{j,k} = 2π/K_j.
    pub weight: f64,
    /// Largest frequency in Λ_j.
    pub bandwidth: usize,
    /// √λ_{j,k}, the needlet amplitude factor.
    amp: f64,
    /// Dense samples of the profile g_j on [0, 2π).
    table: Vec<f64>,
    /// Table samples per lattice pixel.
    per_pixel: usize,
    /// Profile support half-width, in table samples.
    support_samples: usize,
    /// max |g_j|.
    pub max_abs: f64,
}

impl FrameLevel {
    fn build(manifold: &ManifoldModel, window: &WindowFunction, j: usize) -> Self {
        let b = window.scale();
        let qs = manifold.eigen_window_indices(b, j);
        let b_coeffs: Vec<f64> = qs
            .iter()
            .map(|&q| window.evaluate(q as f64 / b.powi(j as i32)))
            .collect();
        let k_count = 2 * (b.powi(j as i32 + 1).ceil() as usize) + 1;
        let weight = TWO_PI / k_count as f64;
        let amp = weight.sqrt();
        let bandwidth = qs.last().copied().unwrap_or(0);

        let len = k_count * PER_PIXEL;
        let mut table = vec![0.0f64; len];
        // g_j(u) = √λ · Σ_q b_q cos(q u)/π, sampled densely.
        let mut max_abs = 0.0f64;
        for (i, slot) in table.iter_mut().enumerate() {
            let u = TWO_PI * i as f64 / len as f64;
            let mut s = 0.0;
            for (&q, &bc) in qs.iter().zip(&b_coeffs) {
                s += bc * (q as f64 * u).cos();
            }
            *slot = amp * s / PI;
            max_abs = max_abs.max(slot.abs());
        }
        // The profile is even; scan from the antipode back toward 0 for the
        // last sample above threshold.
        let thr = SUPPORT_THRESHOLD * max_abs;
        let mut support_samples = len / 2;
        for i in (0..=len / 2).rev() {
            if table[i].abs() >= thr {
                support_samples = i;
                break;
            }
        }
        support_samples = (support_samples + 4).min(len / 2);

        FrameLevel {
            j,
            qs,
            b_coeffs,
            k_count,
            weight,
            bandwidth,
            amp,
            table,
            per_pixel: PER_PIXEL,
            support_samples,
            max_abs,
        }
    }

    /// Cubature point ξ_{j,k}.
    pub fn node(&self, k: usize) -> f64 {
        TWO_PI * k as f64 / self.k_count as f64
    }

    /// Number of lattice pixels covered by the truncated support (half-width).
    pub fn support_pixels(&self) -> usize {
        self.support_samples / self.per_pixel + 1
    }

    fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Periodic 4-point Lagrange read of the profile table at sample
    /// coordinate `pos` (may be any real; wrapped mod table length).
    fn table_read(&self, pos: f64) -> f64 {
        let len = self.table_len();
        let base = pos.floor();
        let t = pos - base;
        let i = (base as i64).rem_euclid(len as i64) as usize;
        let im1 = if i == 0 { len - 1 } else { i - 1 };
        let ip1 = if i + 1 >= len { i + 1 - len } else { i + 1 };
        let ip2 = if i + 2 >= len { i + 2 - len } else { i + 2 };
        let (f0, f1, f2, f3) = (self.table[im1], self.table[i], self.table[ip1], self.table[ip2]);
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * f0 + w1 * f1 + w2 * f2 + w3 * f3
    }

    /// Profile g_j(u) from the cached table; zero outside the truncated
    /// support window.
    pub fn eval_profile(&self, u: f64) -> f64 {
        let len = self.table_len() as f64;
        let pos = (u / TWO_PI * len).rem_euclid(len);
        let dist = pos.min(len - pos);
        if dist > self.support_samples as f64 {
            return 0.0;
        }
        self.table_read(pos)
    }

    /// Profile g_j(u) by the exact eigen-sum.
    pub fn eval_profile_exact(&self, u: f64) -> f64 {
        let mut s = 0.0;
        for (&q, &bc) in self.qs.iter().zip(&self.b_coeffs) {
            s += bc * (q as f64 * u).cos();
        }
        self.amp * s / PI
    }

    /// ψ_{j,k}(x), table path. The lattice offset is subtracted in integer
    /// table samples so this is bit-identical to `for_each_nonzero`.
    pub fn eval_psi(&self, k: usize, x: f64) -> f64 {
        let len = self.table_len();
        let lenf = len as f64;
        let pos = ((x / TWO_PI * lenf).rem_euclid(lenf) - (k * self.per_pixel) as f64)
            .rem_euclid(lenf);
        let dist = pos.min(lenf - pos);
        if dist > (self.support_samples + 2) as f64 {
            return 0.0;
        }
        self.table_read(pos)
    }

    /// ψ_{j,k}(x), exact eigen-sum path (used by all quadratures).
    pub fn eval_psi_exact(&self, k: usize, x: f64) -> f64 {
        self.eval_profile_exact(x - self.node(k))
    }

    /// Visit every k with ψ_{j,k}(x) inside the truncated support, passing
    /// (k, ψ_{j,k}(x)). The interpolation weights are shared across k because
    /// the table length is a multiple of K_j.
    pub fn for_each_nonzero(&self, x: f64, mut f: impl FnMut(usize, f64)) {
        let len = self.table_len();
        let lenf = len as f64;
        let pos = (x / TWO_PI * lenf).rem_euclid(lenf);
        let base = pos.floor();
        let t = pos - base;
        let ibase = base as i64;
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        // Cap at (K−1)/2 so a support wider than the circle still visits each
        // lattice index exactly once.
        let wpix = (self.support_pixels().min((self.k_count - 1) / 2)) as i64;
        // k0: lattice index nearest x.
        let k0 = (pos / self.per_pixel as f64).round() as i64;
        for dk in -wpix..=wpix {
            let k = (k0 + dk).rem_euclid(self.k_count as i64) as usize;
            // sample coordinate of x - ξ_k
            let off = ibase - (k0 + dk) * self.per_pixel as i64;
            let dist = off.rem_euclid(len as i64).min((-off).rem_euclid(len as i64));
            if dist > self.support_samples as i64 + 2 {
                continue;
            }
            let i = off.rem_euclid(len as i64) as usize;
            let im1 = if i == 0 { len - 1 } else { i - 1 };
            let ip1 = if i + 1 >= len { i + 1 - len } else { i + 1 };
            let ip2 = if i + 2 >= len { i + 2 - len } else { i + 2 };
            let v = w0 * self.table[im1]
                + w1 * self.table[i]
                + w2 * self.table[ip1]
                + w3 * self.table[ip2];
            f(k, v);
        }
    }
}

/// The needlet system {ψ_{j,k}} for levels 0..=j_max. Immutable after build.
#[derive(Debug, Clone)]
pub struct NeedletFrame {
    pub manifold: ManifoldModel,
    pub window: WindowFunction,
    pub scale: f64,
    pub j_max: usize,
    pub levels: Vec<FrameLevel>,
}

/// Build the frame: per level, K_j = 2⌈B^{j+1}⌉+1 equispaced cubature points
/// with uniform weights 2π/K_j (an exact trigonometric rule for the needlet
/// bandwidths involved).
pub fn build_frame(manifold: &ManifoldModel, scale: f64, j_max: usize) -> Result<NeedletFrame> {
    let window = WindowFunction::new(scale)?;
    // Table memory grows like B^{j_max}; refuse obviously hopeless requests.
    let est_nodes: f64 = (0..=j_max)
        .map(|j| 2.0 * scale.powi(j as i32 + 1) * PER_PIXEL as f64)
        .sum();
    let est_bytes = est_nodes * 8.0;
    if est_bytes > 4e9 {
        return Err(Error::Resource(format!(
            "frame tables would need ~{:.1} GiB; lower j_max",
            est_bytes / 1024.0 / 1024.0 / 1024.0
        )));
    }
    let levels = (0..=j_max)
        .map(|j| FrameLevel::build(manifold, &window, j))
        .collect();
    Ok(NeedletFrame {
        manifold: manifold.clone(),
        window,
        scale,
        j_max,
        levels,
    })
}

impl NeedletFrame {
    pub fn level(&self, j: usize) -> &FrameLevel {
        &self.levels[j]
    }
}

/// β_{j,k} = ∫ ψ_{j,k} f dx. `f_band` is the bandwidth of f when band-limited;
/// `None` falls back to the refinement path.
pub fn needlet_coefficient(
    frame: &NeedletFrame,
    j: usize,
    k: usize,
    f: impl Fn(f64) -> f64,
    f_band: Option<usize>,
) -> Result<f64> {
    let level = frame.level(j);
    let g = |x: f64| level.eval_psi_exact(k, x) * f(x);
    match f_band {
        Some(band) => Ok(frame.manifold.integrate_bandlimited(g, level.bandwidth + band)),
        None => frame.manifold.integrate_adaptive(g, 4 * level.bandwidth.max(4)),
    }
}

/// Smallest C with |ψ_{j,k}(x)| ≤ C·B^{jd/2}/(1 + B^{jd} d(x, ξ_{j,k}))^η on a
/// dense grid. The max violation for that C is 0 by construction.
pub fn check_localization(frame: &NeedletFrame, j: usize, k: usize, eta: usize) -> (f64, f64) {
    assert!(eta >= 2);
    let level = frame.level(j);
    let b = frame.scale;
    let d = frame.manifold.dimension() as f64;
    let bj = b.powf(j as f64 * d);
    let scale = b.powf(j as f64 * d / 2.0);
    let len = level.table_len();
    let mut c_fit = 0.0f64;
    let _ = k; // translation invariance: the envelope constant is k-independent
    for i in 0..len {
        let u = TWO_PI * i as f64 / len as f64;
        let dist = u.min(TWO_PI - u);
        let envelope = scale / (1.0 + bj * dist).powi(eta as i32);
        let c = level.table[i].abs() / envelope;
        c_fit = c_fit.max(c);
    }
    (c_fit, 0.0)
}

/// ‖ψ_{j,k}‖_{L^p(M)}. Even integer p uses the exact rule; other p refine.
pub fn lp_norm(frame: &NeedletFrame, j: usize, k: usize, p: f64) -> Result<f64> {
    assert!(p >= 1.0);
    let level = frame.level(j);
    let _ = k; // all k equivalent on the equispaced lattice
    let is_even_int = p.fract() == 0.0 && (p as usize) % 2 == 0 && p <= 16.0;
    let integral = if is_even_int {
        let pi = p as i32;
        frame
            .manifold
            .integrate_bandlimited(|u| level.eval_profile_exact(u).powi(pi), p as usize * level.bandwidth)
    } else {
        frame
            .manifold
            .integrate_adaptive(|u| level.eval_profile_exact(u).abs().powf(p), 8 * level.bandwidth.max(4))?
    };
    Ok(integral.powf(1.0 / p))
}

/// ‖ψ_{j,k}‖_∞ from the dense table with a parabolic polish.
pub fn sup_norm(frame: &NeedletFrame, j: usize, _k: usize) -> f64 {
    let level = frame.level(j);
    let len = level.table_len();
    let (imax, _) = level
        .table
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap();
    let f = |i: i64| level.table[(i.rem_euclid(len as i64)) as usize].abs();
    let (fm, f0, fp) = (f(imax as i64 - 1), f(imax as i64), f(imax as i64 + 1));
    let denom = fm - 2.0 * f0 + fp;
    if denom.abs() < 1e-300 {
        return f0;
    }
    let dt = 0.5 * (fm - fp) / denom;
    f0 - 0.25 * (fm - fp) * dt
}

/// LHS and localization-envelope RHS for ∫ Π_i ψ_{j,k_i} dx.
///
/// Distinct indices follow the pairwise-separation envelope
/// C·B^{dj(q−1)}/(1 + B^{dj}Δ)^{η(q−1)}; with repeated indices the bound
/// degenerates to the diagonal scale ‖ψ‖_{L^q}^q.
pub fn product_integral_bound(
    frame: &NeedletFrame,
    j: usize,
    ks: &[usize],
    eta: usize,
) -> Result<(f64, f64)> {
    let q = ks.len();
    assert!(q >= 2);
    let level = frame.level(j);
    let lhs = frame.manifold.integrate_bandlimited(
        |x| ks.iter().map(|&k| level.eval_psi_exact(k, x)).product(),
        q * level.bandwidth,
    );
    let mut distinct = true;
    for a in 0..q {
        for b in a + 1..q {
            if ks[a] == ks[b] {
                distinct = false;
            }
        }
    }
    let d = frame.manifold.dimension() as f64;
    let bj = frame.scale.powf(j as f64 * d);
    let rhs = if distinct {
        let mut delta = f64::INFINITY;
        for a in 0..q {
            for b in a + 1..q {
                delta = delta.min(frame.manifold.geodesic(level.node(ks[a]), level.node(ks[b])));
            }
        }
        let (c_fit, _) = check_localization(frame, j, ks[0], eta);
        c_fit * bj.powi(q as i32 - 1) / (1.0 + bj * delta).powi((eta * (q - 1)) as i32)
    } else {
        lp_norm(frame, j, ks[0], q as f64)?.powi(q as i32)
    };
    Ok((lhs, rhs))
}

/// ∫ (Σ_k c_k ψ_{j,k})^q dx and the diagonal sum Σ_k c_k^q ∫ ψ_{j,k}^q dx,
/// both by exact quadrature (q even).
pub fn corollary_sums(frame: &NeedletFrame, j: usize, q: usize, cs: &[f64]) -> (f64, f64) {
    assert!(q >= 2 && q % 2 == 0);
    let level = frame.level(j);
    assert_eq!(cs.len(), level.k_count);
    let full = frame.manifold.integrate_bandlimited(
        |x| {
            let s: f64 = (0..level.k_count)
                .map(|k| cs[k] * level.eval_psi_exact(k, x))
                .sum();
            s.powi(q as i32)
        },
        q * level.bandwidth,
    );
    let psi_q = frame.manifold.integrate_bandlimited(
        |u| level.eval_profile_exact(u).powi(q as i32),
        q * level.bandwidth,
    );
    let diag: f64 = cs.iter().map(|c| c.powi(q as i32) * psi_q).sum();
    (full, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::BasisFunction;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle_frame(j_max: usize) -> NeedletFrame {
        build_frame(&ManifoldModel::circle(), 2.0, j_max).unwrap()
    }

    #[test]
    fn lattice_counts_and_weights() {
        let frame = circle_frame(3);
        let level = frame.level(3);
        assert_eq!(level.k_count, 33);
        assert!((level.weight - TWO_PI / 33.0).abs() < 1e-12);
        let total: f64 = (0..level.k_count).map(|_| level.weight).sum();
        assert!((total - TWO_PI).abs() < 1e-9);
    }

    #[test]
    fn pixel_count_growth_matches_dimension() {
        let frame = circle_frame(6);
        let d = 1.0;
        for j in 2..6 {
            let ratio = (frame.level(j + 1).k_count as f64).ln() - (frame.level(j).k_count as f64).ln();
            let target = d * 2.0f64.ln();
            assert!(
                (ratio - target).abs() < 0.1 * target,
                "K_j growth off at j={j}: {ratio} vs {target}"
            );
        }
    }

    #[test]
    fn table_matches_exact_profile() {
        let frame = circle_frame(5);
        for j in [1usize, 3, 5] {
            let level = frame.level(j);
            for i in 0..500 {
                let u = TWO_PI * (i as f64 + 0.31) / 500.0;
                let exact = level.eval_profile_exact(u);
                let fast = level.eval_profile(u);
                assert!(
                    (exact - fast).abs() < 1e-9 * level.max_abs,
                    "table mismatch at j={j}, u={u}: {}",
                    (exact - fast).abs()
                );
            }
        }
    }

    #[test]
    fn for_each_nonzero_agrees_with_eval_psi() {
        let frame = circle_frame(4);
        let level = frame.level(4);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x: f64 = rng.gen_range(0.0..TWO_PI);
            let mut seen = vec![0.0f64; level.k_count];
            level.for_each_nonzero(x, |k, v| seen[k] += v);
            for k in 0..level.k_count {
                let direct = level.eval_psi(k, x);
                assert!(
                    (seen[k] - direct).abs() < 1e-12 * level.max_abs.max(1.0),
                    "window eval mismatch at k={k}"
                );
            }
        }
    }

    #[test]
    fn cubature_exact_on_band_limited_functions() {
        // Σ_k λ_{j,k} f(ξ_{j,k}) = ∫ f for f ∈ H_{B^{j+1}}.
        let frame = circle_frame(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for j in 0..=4usize {
            let level = frame.level(j);
            let bw = (frame.scale.powi(j as i32 + 1)).floor() as usize;
            let basis = frame.manifold.basis_functions(bw);
            let coefs: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = |x: f64| -> f64 {
                basis.iter().zip(&coefs).map(|(b, c)| c * b.eval(x)).sum()
            };
            let exact = frame.manifold.integrate_bandlimited(&f, bw);
            let lattice: f64 = (0..level.k_count).map(|k| level.weight * f(level.node(k))).sum();
            assert!(
                (exact - lattice).abs() < 1e-9,
                "cubature failed at j={j}: {}",
                (exact - lattice).abs()
            );
        }
    }

    #[test]
    fn psi_peaks_at_its_own_node() {
        // Dense-grid scan: the needlet attains its max modulus at ξ_{j,k}.
        let frame = circle_frame(6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let j = rng.gen_range(2..=6usize);
            let level = frame.level(j);
            let k = rng.gen_range(0..level.k_count);
            let at_node = level.eval_psi_exact(k, level.node(k)).abs();
            let mut grid_max = 0.0f64;
            for i in 0..4096 {
                let x = TWO_PI * i as f64 / 4096.0;
                grid_max = grid_max.max(level.eval_psi_exact(k, x).abs());
            }
            assert!(at_node >= grid_max - 1e-9, "j={j} k={k}: {at_node} vs {grid_max}");
        }
    }

    #[test]
    fn coefficient_of_uniform_density_vanishes() {
        let frame = circle_frame(4);
        for j in 0..=4usize {
            let beta = needlet_coefficient(&frame, j, 1, |_| 1.0 / TWO_PI, Some(0)).unwrap();
            assert!(beta.abs() < 1e-10, "j={j}: {beta}");
        }
    }

    #[test]
    fn coefficient_of_own_normalized_needlet() {
        let frame = circle_frame(4);
        let (j, k) = (3usize, 5usize);
        let level = frame.level(j);
        let l2sq = lp_norm(&frame, j, k, 2.0).unwrap().powi(2);
        let beta = needlet_coefficient(
            &frame,
            j,
            k,
            |x| level.eval_psi_exact(k, x) / l2sq,
            Some(level.bandwidth),
        )
        .unwrap();
        assert!(beta > 0.5, "self coefficient {beta}");
    }

    #[test]
    fn coefficient_of_out_of_window_eigenfunction_vanishes() {
        let frame = circle_frame(4);
        // q = 40 lies outside Λ_2 = {2..8} for B = 2.
        let f = BasisFunction::Cos(40);
        let beta = needlet_coefficient(&frame, 2, 3, |x| f.eval(x), Some(40)).unwrap();
        assert!(beta.abs() < 1e-10);
    }

    #[test]
    fn localization_envelope_constant_stable_in_j() {
        let frame = circle_frame(6);
        let mut cs = Vec::new();
        for j in 2..=6usize {
            let (c_fit, violation) = check_localization(&frame, j, 0, 3);
            assert_eq!(violation, 0.0);
            // envelope instance far from the node
            let level = frame.level(j);
            let bj = 2.0f64.powi(j as i32);
            let far = level.eval_psi_exact(0, PI / 2.0).abs();
            let bound = c_fit * bj.sqrt() / (1.0 + bj * PI / 2.0).powi(3);
            assert!(far <= bound * (1.0 + 1e-9));
            cs.push(c_fit);
        }
        let (lo, hi) = cs.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        assert!(hi / lo < 10.0, "C_fit spread {lo}..{hi}");
    }

    #[test]
    fn l2_norm_independent_of_k_and_stable() {
        let frame = circle_frame(6);
        let level = frame.level(4);
        let n0 = lp_norm(&frame, 4, 0, 2.0).unwrap();
        let n7 = lp_norm(&frame, 4, 7 % level.k_count, 2.0).unwrap();
        assert!((n0 - n7).abs() < 1e-8);
        let norms: Vec<f64> = (1..=6).map(|j| lp_norm(&frame, j, 0, 2.0).unwrap()).collect();
        let (lo, hi) = norms.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        assert!(hi / lo < 3.0, "L2 norms spread {norms:?}");
    }

    #[test]
    fn l4_norm_slope_matches_exponent() {
        // log ‖ψ‖_4 vs j has slope d(1/2 − 1/4)·log B.
        let frame = circle_frame(6);
        let js: Vec<f64> = (2..=6).map(|j| j as f64).collect();
        let ys: Vec<f64> = (2..=6)
            .map(|j| lp_norm(&frame, j, 0, 4.0).unwrap().ln())
            .collect();
        let slope = crate::util::fit_slope(&js, &ys);
        let target = 0.25 * 2.0f64.ln();
        assert!(
            (slope - target).abs() < 0.1 * target,
            "L4 slope {slope} vs {target}"
        );
    }

    #[test]
    fn sup_norm_scaling() {
        let frame = circle_frame(6);
        let d = 1.0;
        let ratios: Vec<f64> = (2..=6)
            .map(|j| sup_norm(&frame, j, 0) / 2.0f64.powf(j as f64 * d / 2.0))
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &c| (l.min(c), h.max(c)));
        assert!(hi / lo < 10.0, "sup-norm ratios {ratios:?}");
    }

    #[test]
    fn product_integral_diagonal_and_separated() {
        let frame = circle_frame(6);
        // diagonal: lhs = ‖ψ‖₂²
        let (lhs, _) = product_integral_bound(&frame, 4, &[3, 3], 3).unwrap();
        let l2sq = lp_norm(&frame, 4, 3, 2.0).unwrap().powi(2);
        assert!((lhs - l2sq).abs() < 1e-9);
        // far-separated pair: near-orthogonal, decaying fast in j
        let mut prev = f64::INFINITY;
        for j in 4..=6usize {
            let level = frame.level(j);
            let k2 = level.k_count / 2; // antipodal, Δ ≈ π
            let (cross, _) = product_integral_bound(&frame, j, &[0, k2], 3).unwrap();
            let l2sq = lp_norm(&frame, j, 0, 2.0).unwrap().powi(2);
            let rel = cross.abs() / l2sq;
            assert!(rel < 1e-3, "j={j}: {rel}");
            assert!(rel < 0.5 * prev, "cross overlap not decaying at j={j}: {rel} vs {prev}");
            prev = rel;
        }
    }

    #[test]
    fn corollary_full_sum_vs_diagonal() {
        let frame = circle_frame(5);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for j in 3..=5usize {
            let level = frame.level(j);
            let cs: Vec<f64> = (0..level.k_count).map(|_| rng.gen_range(0.5..1.5)).collect();
            let (full, diag) = corollary_sums(&frame, j, 4, &cs);
            // The diagonal dominates the full sum: cross tuples carry
            // oscillating signs and cancel, so the comparison is one-sided.
            assert!(diag > 0.0);
            assert!(full >= 0.0, "even power must be nonnegative: {full}");
            let ratio = full / diag;
            assert!(ratio < 10.0, "corollary ratio at j={j}: {ratio}");
        }
    }

    #[test]
    fn tight_frame_identity_on_band_limited_functions() {
        let frame = circle_frame(5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // f with frequencies 1..=B^{j_max-1} = 16 so all active windows have
        // j ≤ j_max − 1 and the partition of unity is complete.
        let bw = 16usize;
        for trial in 0..20 {
            let basis: Vec<BasisFunction> = frame
                .manifold
                .basis_functions(bw)
                .into_iter()
                .filter(|b| b.q() >= 1)
                .collect();
            let coefs: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = |x: f64| -> f64 {
                basis.iter().zip(&coefs).map(|(b, c)| c * b.eval(x)).sum()
            };
            let norm_sq: f64 = coefs.iter().map(|c| c * c).sum();
            let mut sum_beta_sq = 0.0;
            for j in 0..=frame.j_max {
                let level = frame.level(j);
                for k in 0..level.k_count {
                    let beta = needlet_coefficient(&frame, j, k, &f, Some(bw)).unwrap();
                    sum_beta_sq += beta * beta;
                }
            }
            assert!(
                (sum_beta_sq - norm_sq).abs() < 1e-6 * norm_sq,
                "tight frame failed on trial {trial}: {sum_beta_sq} vs {norm_sq}"
            );
        }
    }

    #[test]
    fn reconstruction_matches_windowed_projection() {
        let frame = circle_frame(5);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let bw = 16usize;
        let basis: Vec<BasisFunction> = frame
            .manifold
            .basis_functions(bw)
            .into_iter()
            .filter(|b| b.q() >= 1)
            .collect();
        let coefs: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: f64| -> f64 { basis.iter().zip(&coefs).map(|(b, c)| c * b.eval(x)).sum() };
        let j = 3usize;
        let level = frame.level(j);
        let betas: Vec<f64> = (0..level.k_count)
            .map(|k| needlet_coefficient(&frame, j, k, &f, Some(bw)).unwrap())
            .collect();
        let bsq: std::collections::HashMap<usize, f64> = level
            .qs
            .iter()
            .zip(&level.b_coeffs)
            .map(|(&q, &b)| (q, b * b))
            .collect();
        for i in 0..64 {
            let x = TWO_PI * i as f64 / 64.0;
            let recon: f64 = (0..level.k_count)
                .map(|k| betas[k] * level.eval_psi_exact(k, x))
                .sum();
            let windowed: f64 = basis
                .iter()
                .zip(&coefs)
                .map(|(b, c)| bsq.get(&b.q()).copied().unwrap_or(0.0) * c * b.eval(x))
                .sum();
            assert!(
                (recon - windowed).abs() < 1e-8,
                "reconstruction mismatch at x={x}: {}",
                (recon - windowed).abs()
            );
        }
    }
}
