//! Fourth-moment machinery: star-contraction norms and L⁴ norms of the
//! normalized chaos kernels, the Stein–Malliavin Wasserstein bound they
//! assemble into, and the closed-form rate bounds.

use crate::error::{Error, Result};
use crate::ustat::{exact_variance, GramData};
use crate::util::ln_binomial;
use std::collections::BTreeMap;

/// Convergence regime: I when the effective sample variance R_t·B^{−j(2s+d)}
/// diverges (first chaos dominates), II when it vanishes or stays bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    I,
    II,
}

/// All fourth-moment quantities for one (j, n, R_t).
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub j: usize,
    pub n: usize,
    /// (p, q, r, ℓ) → ‖h̃_{j,p} ⋆_r^ℓ h̃_{j,q}‖²_{L²(μ_t^{p+q−r−ℓ})}.
    pub contraction_norms: BTreeMap<(usize, usize, usize, usize), f64>,
    /// l4_norms[p−1] = ‖h̃_{j,p}‖⁴_{L⁴(μ_t^p)}.
    pub l4_norms: Vec<f64>,
    /// RHS of the Wasserstein bound with the universal constant set to 1.
    pub stein_malliavin_bound: f64,
    pub rate_bound_i: f64,
    pub rate_bound_ii: f64,
    /// Dominant simple rate for the requested regime.
    pub simple_rate: f64,
}

/// Dense view of the truncated fourth-moment tensor for fast role-indexed
/// lookups inside the quadruple sums.
enum FourthDense {
    /// Entries addressed by (anchor, sorted offsets ≤ t); valid for t < k/2
    /// where the minimal element of a stored tuple is unique.
    Windowed { t: usize, data: Vec<f64> },
    /// Entries addressed by the combinatorial index of the sorted 4-multiset;
    /// `present` marks which entries were actually stored.
    Full {
        data: Vec<f64>,
        present: Vec<bool>,
    },
}

fn multiset_index(s: [usize; 4]) -> usize {
    // sorted multiset → strictly increasing combination → combinatorial rank
    let c = [s[0], s[1] + 1, s[2] + 2, s[3] + 3];
    let b2 = c[1] * (c[1] - 1) / 2;
    let b3 = c[2] * (c[2] - 1) * (c[2] - 2) / 6;
    let b4 = c[3] * (c[3] - 1) * (c[3] - 2) * (c[3] - 3) / 24;
    c[0] + b2 + b3 + b4
}

impl FourthDense {
    fn build(gram: &GramData) -> Result<Self> {
        let k = gram.k_count;
        let t = gram.truncation_radius;
        if 2 * t < k {
            let side = t + 1;
            let mut data = vec![0.0f64; k * side * side * side];
            for (key, &v) in &gram.fourth {
                // recover (anchor, sorted offsets): the minimal element of
                // the covering window is unique for t < k/2
                let ks = [
                    key[0] as usize,
                    key[1] as usize,
                    key[2] as usize,
                    key[3] as usize,
                ];
                let anchor = (0..4)
                    .map(|i| ks[i])
                    .find(|&a| ks.iter().all(|&x| (x + k - a) % k <= t))
                    .expect("stored tuple fits in a window");
                let mut os: Vec<usize> = ks.iter().map(|&x| (x + k - anchor) % k).collect();
                os.sort_unstable();
                data[((anchor * side + os[1]) * side + os[2]) * side + os[3]] = v;
            }
            Ok(FourthDense::Windowed { t, data })
        } else {
            let size = multiset_index([k - 1; 4]) + 1;
            if size > 30_000_000 {
                return Err(Error::Resource(format!(
                    "dense fourth-moment table would need {size} entries"
                )));
            }
            let mut data = vec![0.0f64; size];
            let mut present = vec![false; size];
            for (key, &v) in &gram.fourth {
                let idx = multiset_index([
                    key[0] as usize,
                    key[1] as usize,
                    key[2] as usize,
                    key[3] as usize,
                ]);
                data[idx] = v;
                present[idx] = true;
            }
            Ok(FourthDense::Full { data, present })
        }
    }
}

/// Σ over all ordered (k₁..k₄) of A(k₁,k₃)·C(k₁,k₂)·B(k₂,k₄)·D(k₃,k₄)
/// with A = w₁w₃·G^e13, B = w₂w₄·G^e24, C = G^e12, D = G^e34;
/// two O(K³) passes.
fn separable_quad_sum(
    gram: &GramData,
    w: [&[f64]; 4],
    e13: usize,
    e24: usize,
    e12: usize,
    e34: usize,
) -> f64 {
    let k = gram.k_count;
    let mut a = vec![0.0f64; k * k];
    let mut c = vec![0.0f64; k * k];
    let mut b = vec![0.0f64; k * k];
    let mut d = vec![0.0f64; k * k];
    for i in 0..k {
        for jj in 0..k {
            let g = gram.gram(i, jj);
            a[i * k + jj] = w[0][i] * w[2][jj] * g.powi(e13 as i32);
            b[i * k + jj] = w[1][i] * w[3][jj] * g.powi(e24 as i32);
            c[i * k + jj] = g.powi(e12 as i32);
            d[i * k + jj] = g.powi(e34 as i32);
        }
    }
    // F(k2,k3) = Σ_{k4} B(k2,k4)·D(k3,k4); total = Σ A(k1,k3)·(C·F)(k1,k3)
    let mut f_mat = vec![0.0f64; k * k];
    for k2 in 0..k {
        for k3 in 0..k {
            let mut acc = 0.0;
            for k4 in 0..k {
                acc += b[k2 * k + k4] * d[k3 * k + k4];
            }
            f_mat[k2 * k + k3] = acc;
        }
    }
    let mut total = 0.0f64;
    for k1 in 0..k {
        for k3 in 0..k {
            let mut acc = 0.0;
            for k2 in 0..k {
                acc += c[k1 * k + k2] * f_mat[k2 * k + k3];
            }
            total += a[k1 * k + k3] * acc;
        }
    }
    total
}

/// Σ over ordered tuples inside the truncation window of the weights times
/// M₄^m_pow, returned as running totals at three nested radii
/// (⌊t/2⌋, ⌊3t/4⌋, t) — so the caller can gauge shell convergence — plus the
/// total absolute mass Σ|term|, the cancellation yardstick.
fn tensor_quad_sum(
    gram: &GramData,
    dense: &FourthDense,
    w: [&[f64]; 4],
    e13: usize,
    e24: usize,
    e12: usize,
    e34: usize,
    m_pow: usize,
) -> ([f64; 3], f64) {
    let k = gram.k_count;
    let t_full = gram.truncation_radius;
    let t_half = t_full / 2;
    let t_three_q = 3 * t_full / 4;
    let mut totals = [0.0f64; 3];
    let mut abs_total = 0.0f64;
    let mut visit = |k1: usize, k2: usize, k3: usize, k4: usize, diam: usize, m: f64| {
        let wt = w[0][k1]
            * w[1][k2]
            * w[2][k3]
            * w[3][k4]
            * gram.gram(k1, k3).powi(e13 as i32)
            * gram.gram(k2, k4).powi(e24 as i32)
            * gram.gram(k1, k2).powi(e12 as i32)
            * gram.gram(k3, k4).powi(e34 as i32)
            * m.powi(m_pow as i32);
        if diam <= t_half {
            totals[0] += wt;
        }
        if diam <= t_three_q {
            totals[1] += wt;
        }
        totals[2] += wt;
        abs_total += wt.abs();
    };
    match dense {
        FourthDense::Windowed { t, data } => {
            let t = *t;
            let side = t + 1;
            for anchor in 0..k {
                for e1 in 0..=t {
                    for e2 in 0..=t {
                        for e3 in 0..=t {
                            for e4 in 0..=t {
                                if e1.min(e2).min(e3).min(e4) != 0 {
                                    continue;
                                }
                                let mut os = [e1, e2, e3, e4];
                                os.sort_unstable();
                                let m = data
                                    [((anchor * side + os[1]) * side + os[2]) * side + os[3]];
                                // anchor is the unique window start for t < k/2,
                                // so the largest offset is the circular diameter
                                visit(
                                    (anchor + e1) % k,
                                    (anchor + e2) % k,
                                    (anchor + e3) % k,
                                    (anchor + e4) % k,
                                    os[3],
                                    m,
                                );
                            }
                        }
                    }
                }
            }
        }
        FourthDense::Full { data, present } => {
            for k1 in 0..k {
                for k2 in 0..k {
                    for k3 in 0..k {
                        for k4 in 0..k {
                            let mut s = [k1, k2, k3, k4];
                            s.sort_unstable();
                            let idx = multiset_index(s);
                            if !present[idx] {
                                continue;
                            }
                            // circular diameter = K − largest gap
                            let mut gap = k + s[0] - s[3];
                            for i in 0..3 {
                                gap = gap.max(s[i + 1] - s[i]);
                            }
                            visit(k1, k2, k3, k4, k - gap, data[idx]);
                        }
                    }
                }
            }
        }
    }
    (totals, abs_total)
}

/// Truncation-error gate from shell convergence: with S(ρ) the quadruple sum
/// restricted to tuples of circular diameter ≤ ρ, the increments
/// d₁ = |S(t)−S(3t/4)| and d₂ = |S(3t/4)−S(t/2)| measure the outermost
/// shell contributions. For the geometrically decaying needlet tails the
/// tail beyond t is bounded by the last increment once the increments
/// decay; if they do not decay the sum has not converged and both are
/// charged. Error if the estimate exceeds 1% of the returned value.
fn check_truncation_gate(gram: &GramData, totals: [f64; 3], value_scale: f64) -> Result<()> {
    if gram.dropped_mass_bound == 0.0 {
        return Ok(());
    }
    let d1 = (totals[2] - totals[1]).abs();
    let d2 = (totals[1] - totals[0]).abs();
    let err = if d1 <= d2 { d1 } else { d1 + d2 };
    let limit = 0.01 * totals[2].abs().max(f64::MIN_POSITIVE);
    if err > limit {
        return Err(Error::Truncation {
            bound: err * value_scale,
            limit: limit * value_scale,
        });
    }
    Ok(())
}

fn validate_contraction_indices(n: usize, p: usize, q: usize, r: usize, l: usize) -> Result<()> {
    // 1 ≤ p ≤ q ≤ n, 1 ≤ r ≤ p, 1 ≤ ℓ ≤ r, and ℓ ≤ q−1 when p = q
    let ok = 1 <= p && p <= q && q <= n && 1 <= r && r <= p && 1 <= l && l <= r
        && (p != q || l <= q - 1);
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "invalid contraction indices (n,p,q,r,l) = ({n},{p},{q},{r},{l}): \
             need 1 ≤ p ≤ q ≤ n, 1 ≤ r ≤ p, 1 ≤ l ≤ r, and l ≤ q−1 when p = q"
        )));
    }
    Ok(())
}

/// ‖h̃_{j,p} ⋆_r^ℓ h̃_{j,q}‖²_{L²(μ_t^{p+q−r−ℓ})} from Gram data:
/// σ_j⁻⁴·C(n,p)²·C(n,q)²·R_t^{4n−p−q−r+ℓ} times the quadruple sum of
/// β^{n−p}β^{n−q}β^{n−p}β^{n−q}·G₁₃^{p−r}·G₂₄^{q−r}·G₁₂^ℓ·G₃₄^ℓ·M₄^{r−ℓ}.
pub fn contraction_norm_sq(
    gram: &GramData,
    r_t: f64,
    n: usize,
    j: usize,
    p: usize,
    q: usize,
    r: usize,
    l: usize,
) -> Result<f64> {
    if j != gram.j {
        return Err(Error::InvalidParameter(format!(
            "gram data is for level {} not {j}",
            gram.j
        )));
    }
    validate_contraction_indices(n, p, q, r, l)?;
    let (_, sigma_sq, _) = exact_variance(gram, r_t, n)?;
    let wp: Vec<f64> = gram.beta.iter().map(|b| b.powi((n - p) as i32)).collect();
    let wq: Vec<f64> = gram.beta.iter().map(|b| b.powi((n - q) as i32)).collect();
    let w = [wp.as_slice(), wq.as_slice(), wp.as_slice(), wq.as_slice()];
    let (e13, e24, e12, e34) = (p - r, q - r, l, l);
    let ln_pref = 2.0 * (ln_binomial(n, p) + ln_binomial(n, q))
        + (4 * n - p - q - r + l) as f64 * r_t.ln()
        - 2.0 * sigma_sq.ln();
    let scale = ln_pref.exp();
    let sum = if r == l {
        separable_quad_sum(gram, w, e13, e24, e12, e34)
    } else {
        let dense = FourthDense::build(gram)?;
        let (totals, abs_total) = tensor_quad_sum(gram, &dense, w, e13, e24, e12, e34, r - l);
        if totals[2].abs() <= 1e-9 * abs_total {
            // cancellation beyond nine digits: the sum is numerically zero
            return Ok(0.0);
        }
        check_truncation_gate(gram, totals, scale)?;
        totals[2]
    };
    // a squared norm: negative values can only be roundoff
    Ok(scale * sum.max(0.0))
}

/// ‖h̃_{j,p}‖⁴_{L⁴(μ_t^p)} = σ_j⁻⁴·C(n,p)⁴·R_t^{4n−3p} times the quadruple
/// sum of β^{n−p} (all four roles) · M₄^p.
pub fn l4_norm_4(gram: &GramData, r_t: f64, n: usize, j: usize, p: usize) -> Result<f64> {
    if j != gram.j {
        return Err(Error::InvalidParameter(format!(
            "gram data is for level {} not {j}",
            gram.j
        )));
    }
    if !(1 <= p && p <= n) {
        return Err(Error::InvalidParameter(format!(
            "l4 norm needs 1 ≤ p ≤ n, got p={p}, n={n}"
        )));
    }
    let (_, sigma_sq, _) = exact_variance(gram, r_t, n)?;
    let wp: Vec<f64> = gram.beta.iter().map(|b| b.powi((n - p) as i32)).collect();
    let w = [wp.as_slice(); 4];
    let ln_pref = 4.0 * ln_binomial(n, p) + (4 * n - 3 * p) as f64 * r_t.ln()
        - 2.0 * sigma_sq.ln();
    let scale = ln_pref.exp();
    let dense = FourthDense::build(gram)?;
    let (totals, abs_total) = tensor_quad_sum(gram, &dense, w, 0, 0, 0, 0, p);
    if totals[2].abs() <= 1e-9 * abs_total {
        return Ok(0.0);
    }
    check_truncation_gate(gram, totals, scale)?;
    Ok(scale * totals[2].max(0.0))
}

/// Index set of the first maximum: self-contractions (p,p,r,ℓ).
pub fn max1_indices(n: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for p in 2..=n {
        for r in 1..=p {
            for l in 1..=r.min(p - 1) {
                out.push((p, p, r, l));
            }
        }
    }
    out
}

/// Index set of the second maximum: cross-contractions (p,q,r,ℓ), p < q.
pub fn max2_indices(n: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for q in 2..=n {
        for p in 1..q {
            for r in 1..=p {
                for l in 1..=r {
                    out.push((p, q, r, l));
                }
            }
        }
    }
    out
}

/// RHS of the Wasserstein bound (universal constant = 1):
/// max₁ √contraction + max₂ √contraction + max_p ‖h̃_{j,p}‖²_{L⁴}.
/// Operates on precomputed entries; absent indices are an error.
pub fn stein_malliavin_rhs(
    contractions: &BTreeMap<(usize, usize, usize, usize), f64>,
    l4_norms: &[f64],
    n: usize,
) -> Result<f64> {
    let mut missing = Vec::new();
    let mut max1 = 0.0f64;
    for idx in max1_indices(n) {
        match contractions.get(&idx) {
            Some(&v) => max1 = max1.max(v.sqrt()),
            None => missing.push(idx),
        }
    }
    let mut max2 = 0.0f64;
    for idx in max2_indices(n) {
        match contractions.get(&idx) {
            Some(&v) => max2 = max2.max(v.sqrt()),
            None => missing.push(idx),
        }
    }
    if l4_norms.len() < n {
        return Err(Error::MissingEntries(format!(
            "l4 norms present for {} of {n} orders",
            l4_norms.len()
        )));
    }
    if !missing.is_empty() {
        return Err(Error::MissingEntries(format!("{missing:?}")));
    }
    let max_l4 = l4_norms.iter().fold(0.0f64, |m, &v| m.max(v.sqrt()));
    Ok(max1 + max2 + max_l4)
}

/// Closed-form rate bounds: (full sum, simple dominant rate) for the
/// requested regime, each summand assembled in log-space from the effective
/// sample variance R_t·B^{−j(2s+d)}, the effective sample size R_t·B^{−jd}
/// and the scaling factor B^{−jd/2}.
pub fn rate_bounds(
    r_t: f64,
    b: f64,
    s: f64,
    d: f64,
    n: usize,
    j: usize,
    regime: Regime,
) -> (f64, f64) {
    let jb = j as f64 * b.ln();
    let la = r_t.ln() - (2.0 * s + d) * jb; // ln R_t·B^{−j(2s+d)}
    let le = r_t.ln() - d * jb; // ln R_t·B^{−jd}
    let lw = -0.5 * d * jb; // ln B^{−jd/2}
    let mut full = 0.0f64;
    match regime {
        Regime::I => {
            for p in 2..=n {
                for r in 1..=p {
                    for l in 1..=r.min(p - 1) {
                        full += ((1 - p as i64) as f64 * la
                            + (l as f64 - r as f64) / 2.0 * le
                            + lw)
                            .exp();
                    }
                }
            }
            for q in 2..=n {
                for p in 1..q {
                    for r in 1..=p {
                        for l in 1..=r {
                            full += ((1.0 - (p + q) as f64 / 2.0) * la
                                + (l as f64 - r as f64) / 2.0 * le
                                + lw)
                                .exp();
                        }
                    }
                }
            }
            for p in 1..=n {
                full += ((1 - p as i64) as f64 * la - p as f64 / 2.0 * le + lw).exp();
            }
            (full, (-0.5 * r_t.ln() + s * jb).exp())
        }
        Regime::II => {
            for p in 2..=n {
                for r in 1..=p {
                    for l in 1..=r.min(p - 1) {
                        full += ((n - p) as f64 * la + (r as f64 - l as f64) / 2.0 * (-le)
                            + lw)
                            .exp();
                    }
                }
            }
            for q in 2..=n {
                for p in 1..q {
                    for r in 1..=p {
                        for l in 1..=r {
                            full += ((n as f64 - (p + q) as f64 / 2.0) * la
                                + (r as f64 - l as f64) / 2.0 * (-le)
                                + lw)
                                .exp();
                        }
                    }
                }
            }
            for p in 1..=n {
                full += ((n - p) as f64 * la + p as f64 / 2.0 * (-le) + lw).exp();
            }
            (full, lw.exp())
        }
    }
}

/// Compute the full report: every contraction of both maxima, all L⁴ norms,
/// the assembled Wasserstein bound, and the rate bounds of both regimes.
pub fn compute_bound_report(
    gram: &GramData,
    r_t: f64,
    b: f64,
    s: f64,
    d: f64,
    n: usize,
    regime: Regime,
) -> Result<BoundReport> {
    let j = gram.j;
    let mut contraction_norms = BTreeMap::new();
    for idx in max1_indices(n).into_iter().chain(max2_indices(n)) {
        let (p, q, r, l) = idx;
        contraction_norms.insert(idx, contraction_norm_sq(gram, r_t, n, j, p, q, r, l)?);
    }
    let mut l4_norms = Vec::with_capacity(n);
    for p in 1..=n {
        l4_norms.push(l4_norm_4(gram, r_t, n, j, p)?);
    }
    let stein_malliavin_bound = stein_malliavin_rhs(&contraction_norms, &l4_norms, n)?;
    let (rate_bound_i, simple_i) = rate_bounds(r_t, b, s, d, n, j, Regime::I);
    let (rate_bound_ii, simple_ii) = rate_bounds(r_t, b, s, d, n, j, Regime::II);
    Ok(BoundReport {
        j,
        n,
        contraction_norms,
        l4_norms,
        stein_malliavin_bound,
        rate_bound_i,
        rate_bound_ii,
        simple_rate: match regime {
            Regime::I => simple_i,
            Regime::II => simple_ii,
        },
    })
}

/// Fourth-moment truncation radius that clears the dropped-mass gate for the
/// shipped window: full coverage up to K=65, then the probed safe radii.
pub fn suggested_truncation_radius(k_count: usize) -> usize {
    if k_count <= 65 {
        k_count
    } else if k_count <= 129 {
        32
    } else {
        24
    }
}
