//! Needlet U-statistics: the Newton-identity fast evaluator and its
//! brute-force oracle, Gram data (inner products, coefficients, truncated
//! fourth-moment tensor), exact variance and chaos decomposition, chaos
//! magnitudes Λ_{j,p}, and the dominance classifier.

use crate::density::BesovDensity;
use crate::error::{Error, Result};
use crate::frame::NeedletFrame;
use crate::manifold::TWO_PI;
use crate::sampler::PointConfiguration;
use crate::util::{factorial, fit_slope, ln_binomial, ln_factorial};
use std::collections::HashMap;

/// Variance decomposition and normalization data for one (j, n, R_t).
#[derive(Debug, Clone)]
pub struct UStatReport {
    pub j: usize,
    pub n: usize,
    pub value: f64,
    pub mean: f64,
    pub sigma_sq: f64,
    /// chaos_norms[p−1] = p!·R_t^p·‖h_{j,p}‖²_{L²(μ^p)}, p = 1..n.
    pub chaos_norms: Vec<f64>,
    /// Λ_{j,p}, p = 1..n.
    pub lambda: Vec<f64>,
    /// Ũ_j = (U_j − mean)/σ_j.
    pub normalized: f64,
}

/// Inner products against the sampling measure μ = f dx for one level:
/// Gram matrix, needlet coefficients and the neighbor-truncated fourth-moment
/// tensor M₄(k₁..k₄) = ∫ψ_{k₁}ψ_{k₂}ψ_{k₃}ψ_{k₄} dμ.
#[derive(Debug, Clone)]
pub struct GramData {
    pub j: usize,
    pub k_count: usize,
    /// Row-major K×K matrix, G[k₁·K + k₂] = ⟨ψ_{j,k₁}, ψ_{j,k₂}⟩_{L²(μ)}.
    pub g: Vec<f64>,
    pub beta: Vec<f64>,
    /// Sorted-key sparse tensor over lattice-neighbor tuples.
    pub fourth: HashMap<[u16; 4], f64>,
    pub truncation_radius: usize,
    /// Upper bound on the magnitude of any dropped tensor entry.
    pub dropped_mass_bound: f64,
    /// Σ_k |M₄(k,k,k,k)|, the diagonal mass the bound is compared against.
    pub diagonal_mass: f64,
    /// pl2[o] = ‖ψ_k·ψ_{k+o}‖_{L²(dx)} by circular lattice distance o;
    /// |M₄(k₁..k₄)| ≤ f_max·pl2[d(k_a,k_b)]·pl2[d(k_c,k_d)] for any pairing.
    pub pl2: Vec<f64>,
    /// Supremum of the sampling density.
    pub f_max: f64,
}

impl GramData {
    pub fn gram(&self, k1: usize, k2: usize) -> f64 {
        self.g[k1 * self.k_count + k2]
    }

    /// M₄ entry; zero when outside the truncation window.
    pub fn fourth_moment(&self, mut key: [u16; 4]) -> f64 {
        key.sort_unstable();
        self.fourth.get(&key).copied().unwrap_or(0.0)
    }
}

/// n!·e_n from power sums p_1..p_n via Newton's identities.
pub fn elementary_from_power_sums(power_sums: &[f64]) -> f64 {
    let n = power_sums.len();
    let mut e = vec![0.0f64; n + 1];
    e[0] = 1.0;
    for m in 1..=n {
        let mut acc = 0.0;
        for i in 1..=m {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[m - i] * power_sums[i - 1];
        }
        e[m] = acc / m as f64;
    }
    factorial(n) * e[n]
}

/// U_j = Σ_k n!·e_n(ψ_{j,k}(x₁),…,ψ_{j,k}(x_N)) in O(K_j·N·n).
pub fn evaluate_kernel_ustat(
    frame: &NeedletFrame,
    config: &PointConfiguration,
    j: usize,
    n: usize,
) -> f64 {
    assert!(n >= 1);
    let level = frame.level(j);
    let points = &config.points;
    if points.len() < n {
        return 0.0;
    }
    let k = level.k_count;
    // power_sums[k·n + (m−1)] = Σ_i ψ_{j,k}(x_i)^m
    let mut power_sums = vec![0.0f64; k * n];
    for &x in points {
        level.for_each_nonzero(x, |kk, v| {
            let base = kk * n;
            let mut pow = v;
            power_sums[base] += pow;
            for m in 1..n {
                pow *= v;
                power_sums[base + m] += pow;
            }
        });
    }
    (0..k)
        .map(|kk| elementary_from_power_sums(&power_sums[kk * n..(kk + 1) * n]))
        .sum()
}

/// Brute-force oracle: sum over all ordered distinct n-tuples of
/// Σ_k Π_i ψ_{j,k}(x_i). Exponential in n; test scales only.
pub fn evaluate_kernel_ustat_bruteforce(
    frame: &NeedletFrame,
    config: &PointConfiguration,
    j: usize,
    n: usize,
) -> f64 {
    assert!(n >= 1);
    let level = frame.level(j);
    let points = &config.points;
    let npts = points.len();
    if npts < n {
        return 0.0;
    }
    let k = level.k_count;
    // psi[kk][i]
    let psi: Vec<Vec<f64>> = (0..k)
        .map(|kk| points.iter().map(|&x| level.eval_psi(kk, x)).collect())
        .collect();
    let mut total = 0.0;
    let mut tuple = vec![0usize; n];
    let mut used = vec![false; npts];
    fn recurse(
        depth: usize,
        n: usize,
        npts: usize,
        tuple: &mut [usize],
        used: &mut [bool],
        psi: &[Vec<f64>],
        total: &mut f64,
    ) {
        if depth == n {
            let mut ksum = 0.0;
            for row in psi {
                let mut prod = 1.0;
                for &i in tuple.iter() {
                    prod *= row[i];
                }
                ksum += prod;
            }
            *total += ksum;
            return;
        }
        for i in 0..npts {
            if !used[i] {
                used[i] = true;
                tuple[depth] = i;
                recurse(depth + 1, n, npts, tuple, used, psi, total);
                used[i] = false;
            }
        }
    }
    recurse(0, n, npts, &mut tuple, &mut used, &psi, &mut total);
    total
}

/// Upper bound on the magnitude of any tensor entry dropped by the
/// lattice-radius truncation.
///
/// A dropped tuple has circular diameter d > t lattice steps, so some pair
/// sits at circular distance ≥ min(d, k−d) ≥ min(t+1, ⌈k/4⌉); the entry is
/// bounded by f_max·‖ψ‖∞²·max over such separations of ∫|ψ(u)ψ(u−oΔ)| du.
/// Zero when no tuple can be dropped (diameter never exceeds k − ⌈k/4⌉).
fn dropped_mass_bound(prof: &[f64], k: usize, mult: usize, t: usize, f_max: f64) -> f64 {
    if t >= k - k.div_ceil(4) {
        return 0.0;
    }
    let ng = prof.len();
    let w = TWO_PI / ng as f64;
    let sup = prof.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let mut far_pair = 0.0f64;
    for o in (t + 1).min(k.div_ceil(4))..=(k / 2) {
        let sh = (o * mult) % ng;
        let acc: f64 = (0..ng)
            .map(|i| (prof[i] * prof[(i + ng - sh) % ng]).abs())
            .sum();
        far_pair = far_pair.max(w * acc);
    }
    f_max * sup * sup * far_pair
}

/// Build Gram data for one level against a density. Fourth moments are kept
/// for tuples whose indices pairwise lie within `truncation_radius` lattice
/// steps; the dropped mass is bounded with the localization envelope and the
/// build fails if the bound exceeds 1e-4 of the diagonal mass.
pub fn compute_gram(
    frame: &NeedletFrame,
    density: &BesovDensity,
    j: usize,
    truncation_radius: usize,
) -> Result<GramData> {
    if truncation_radius < 1 {
        return Err(Error::InvalidParameter(
            "truncation radius must be at least 1".into(),
        ));
    }
    let level = frame.level(j);
    let k = level.k_count;
    let bw = level.bandwidth;
    // One shared lattice-aligned grid, exact for products of four needlets
    // against f.
    let needed = 8 * bw + 2 * density.bandwidth + 1;
    let mult = needed.div_ceil(k).max(1);
    let ng = k * mult;
    let w = TWO_PI / ng as f64;
    let prof: Vec<f64> = (0..ng)
        .map(|i| level.eval_profile_exact(TWO_PI * i as f64 / ng as f64))
        .collect();
    let f_samples: Vec<f64> = (0..ng)
        .map(|i| density.eval_exact(TWO_PI * i as f64 / ng as f64))
        .collect();
    let shifted = |i: usize, kk: usize| prof[(i + ng - (kk * mult) % ng) % ng];

    let mut g = vec![0.0f64; k * k];
    for k1 in 0..k {
        for k2 in k1..k {
            let mut acc = 0.0;
            for i in 0..ng {
                acc += shifted(i, k1) * shifted(i, k2) * f_samples[i];
            }
            let v = w * acc;
            g[k1 * k + k2] = v;
            g[k2 * k + k1] = v;
        }
    }
    let beta: Vec<f64> = (0..k)
        .map(|kk| {
            let signed: f64 = (0..ng).map(|i| shifted(i, kk) * f_samples[i]).sum();
            let abs: f64 = (0..ng).map(|i| (shifted(i, kk) * f_samples[i]).abs()).sum();
            // a mean-zero integrand leaves pure roundoff: clamp to exact zero
            if signed.abs() <= 1e-12 * abs {
                0.0
            } else {
                w * signed
            }
        })
        .collect();

    let t = truncation_radius.min(k - 1);
    // A constant density makes M₄ translation invariant: one integral per
    // offset signature instead of one per anchor.
    let invariant = density.bandwidth == 0;
    let mut by_offsets: HashMap<[u16; 3], f64> = HashMap::new();
    let mut fourth: HashMap<[u16; 4], f64> = HashMap::new();
    for anchor in 0..k {
        for o2 in 0..=t {
            for o3 in o2..=t {
                for o4 in o3..=t {
                    let ks = [
                        anchor,
                        (anchor + o2) % k,
                        (anchor + o3) % k,
                        (anchor + o4) % k,
                    ];
                    let mut key = [ks[0] as u16, ks[1] as u16, ks[2] as u16, ks[3] as u16];
                    key.sort_unstable();
                    if fourth.contains_key(&key) {
                        continue;
                    }
                    let okey = [o2 as u16, o3 as u16, o4 as u16];
                    if invariant {
                        if let Some(&v) = by_offsets.get(&okey) {
                            fourth.insert(key, v);
                            continue;
                        }
                    }
                    let mut acc = 0.0;
                    for i in 0..ng {
                        acc += shifted(i, ks[0])
                            * shifted(i, ks[1])
                            * shifted(i, ks[2])
                            * shifted(i, ks[3])
                            * f_samples[i];
                    }
                    let v = w * acc;
                    fourth.insert(key, v);
                    if invariant {
                        by_offsets.insert(okey, v);
                    }
                }
            }
        }
    }

    let diagonal_mass: f64 = (0..k)
        .map(|kk| fourth[&[kk as u16; 4]].abs())
        .sum();
    let pl2: Vec<f64> = (0..=k / 2)
        .map(|o| {
            let sh = (o * mult) % ng;
            let acc: f64 = (0..ng)
                .map(|i| (prof[i] * prof[(i + ng - sh) % ng]).powi(2))
                .sum();
            (w * acc).sqrt()
        })
        .collect();
    let dropped_bound = dropped_mass_bound(&prof, k, mult, t, density.f_max);
    if dropped_bound > 1e-4 * diagonal_mass {
        return Err(Error::Truncation {
            bound: dropped_bound,
            limit: 1e-4 * diagonal_mass,
        });
    }
    Ok(GramData {
        j,
        k_count: k,
        g,
        beta,
        fourth,
        truncation_radius: t,
        dropped_mass_bound: dropped_bound,
        diagonal_mass,
        pl2,
        f_max: density.f_max,
    })
}

/// Mean, σ_j² and the per-chaos norms from Gram data:
/// chaos[p] = p!·C(n,p)²·R_t^{2n−p}·Σ_{k₁,k₂} (β₁β₂)^{n−p}·G[k₁,k₂]^p,
/// mean = R_t^n·Σ_k β_k^n.
pub fn exact_variance(gram: &GramData, r_t: f64, n: usize) -> Result<(f64, f64, Vec<f64>)> {
    assert!(n >= 1);
    let k = gram.k_count;
    let mean = r_t.powi(n as i32) * gram.beta.iter().map(|b| b.powi(n as i32)).sum::<f64>();
    let mut chaos = Vec::with_capacity(n);
    for p in 1..=n {
        let mut quad = 0.0;
        for k1 in 0..k {
            let b1 = gram.beta[k1].powi((n - p) as i32);
            for k2 in 0..k {
                let b2 = gram.beta[k2].powi((n - p) as i32);
                quad += b1 * b2 * gram.gram(k1, k2).powi(p as i32);
            }
        }
        let ln_coef = ln_factorial(p)
            + 2.0 * ln_binomial(n, p)
            + (2 * n - p) as f64 * r_t.ln();
        chaos.push(ln_coef.exp() * quad);
    }
    let sigma_sq: f64 = chaos.iter().sum();
    if !(sigma_sq > 0.0) {
        return Err(Error::DegenerateVariance(sigma_sq));
    }
    Ok((mean, sigma_sq, chaos))
}

/// Λ_{j,p} = R_t^{2n−p}·B^{−j(s(2n−2p)+d(n−p−1))}, log-space assembled.
pub fn chaos_lambda(r_t: f64, b: f64, s: f64, d: f64, n: usize, j: usize) -> Vec<f64> {
    (1..=n)
        .map(|p| {
            let ln = (2 * n - p) as f64 * r_t.ln()
                - j as f64
                    * (s * (2 * n - 2 * p) as f64 + d * (n as f64 - p as f64 - 1.0))
                    * b.ln();
            ln.exp()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    FirstChaos,
    LastChaos,
    AllEquivalent,
}

/// Classify which chaos dominates σ_j² along a schedule from the trend of
/// ρ_j = R_t(j)·B^{−j(2s+d)}. Slope threshold ±0.1·log B.
pub fn classify_dominance(
    schedule: &[(usize, f64)],
    b: f64,
    s: f64,
    d: f64,
) -> Result<Dominance> {
    if schedule.len() < 2 {
        return Err(Error::AmbiguousRegime(
            "need at least two probe levels".into(),
        ));
    }
    let xs: Vec<f64> = schedule.iter().map(|&(j, _)| j as f64).collect();
    let ys: Vec<f64> = schedule
        .iter()
        .map(|&(j, r_t)| r_t.ln() - j as f64 * (2.0 * s + d) * b.ln())
        .collect();
    let slope = fit_slope(&xs, &ys);
    let threshold = 0.1 * b.ln();
    if slope > threshold {
        // trend must actually be increasing step by step
        if ys.windows(2).all(|w| w[1] > w[0]) {
            Ok(Dominance::FirstChaos)
        } else {
            Err(Error::AmbiguousRegime(format!(
                "log ρ_j trend slope {slope:.3} is positive but not monotone"
            )))
        }
    } else if slope < -threshold {
        if ys.windows(2).all(|w| w[1] < w[0]) {
            Ok(Dominance::LastChaos)
        } else {
            Err(Error::AmbiguousRegime(format!(
                "log ρ_j trend slope {slope:.3} is negative but not monotone"
            )))
        }
    } else {
        let (lo, hi) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| {
                (l.min(y), h.max(y))
            });
        if hi - lo <= 10.0f64.ln() {
            Ok(Dominance::AllEquivalent)
        } else {
            Err(Error::AmbiguousRegime(format!(
                "log ρ_j flat on average (slope {slope:.3}) but spread by factor {:.1}",
                (hi - lo).exp()
            )))
        }
    }
}

/// Assemble a full report for one evaluated statistic.
pub fn ustat_report(
    gram: &GramData,
    r_t: f64,
    b: f64,
    s: f64,
    d: f64,
    n: usize,
    value: f64,
) -> Result<UStatReport> {
    let (mean, sigma_sq, chaos_norms) = exact_variance(gram, r_t, n)?;
    Ok(UStatReport {
        j: gram.j,
        n,
        value,
        mean,
        sigma_sq,
        lambda: chaos_lambda(r_t, b, s, d, n, gram.j),
        normalized: (value - mean) / sigma_sq.sqrt(),
        chaos_norms,
    })
}
