//! Point configurations: Poisson processes with control measure R_t·f dx and
//! coupled fixed-size samples for de-Poissonization.
//!
//! RNG contract: every replicate gets its own counter-derived ChaCha8 streams
//! (one for counts, one for points), so results are independent of evaluation
//! order and thread count.

use crate::density::BesovDensity;
use crate::manifold::TWO_PI;
use crate::util::mix_seed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Domain separators for the count and point streams.
const STREAM_COUNT: u64 = 0x636f756e74; // "count"
const STREAM_POINT: u64 = 0x706f696e74; // "point"

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Poisson,
    Fixed,
}

/// An immutable sampled configuration of circle points (angles in [0, 2π)).
#[derive(Debug, Clone)]
pub struct PointConfiguration {
    pub points: Vec<f64>,
    pub mode: SampleMode,
    /// R_t for Poisson mode, m for Fixed mode.
    pub intensity: f64,
    pub seed: u64,
}

fn count_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_COUNT))
}

fn point_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, STREAM_POINT))
}

/// Draw points i.i.d. from the density by rejection against the uniform
/// envelope f_max.
fn draw_points(density: &BesovDensity, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let f_max = density.f_max;
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let x: f64 = rng.gen::<f64>() * TWO_PI;
        let u: f64 = rng.gen::<f64>();
        if u * f_max <= density.eval(x) {
            points.push(x);
        }
    }
    points
}

/// N ~ Poisson(R_t) points i.i.d. from f. Deterministic in `seed`.
pub fn sample_poisson(density: &BesovDensity, r_t: f64, seed: u64) -> PointConfiguration {
    assert!(r_t > 0.0, "intensity must be positive");
    let n = Poisson::new(r_t)
        .expect("valid Poisson intensity")
        .sample(&mut count_rng(seed)) as usize;
    let points = draw_points(density, n, &mut point_rng(seed));
    PointConfiguration {
        points,
        mode: SampleMode::Poisson,
        intensity: r_t,
        seed,
    }
}

/// One i.i.d. stream, read twice: the fixed configuration takes the first m
/// points, the Poissonized one the first N_m ~ Poisson(m) points. The shared
/// prefix is bit-identical (the de-Poissonization coupling).
pub fn sample_coupled(
    density: &BesovDensity,
    m: usize,
    seed: u64,
) -> (PointConfiguration, PointConfiguration) {
    assert!(m >= 1);
    let n = Poisson::new(m as f64)
        .expect("valid Poisson intensity")
        .sample(&mut count_rng(seed)) as usize;
    let points = draw_points(density, m.max(n), &mut point_rng(seed));
    let fixed = PointConfiguration {
        points: points[..m].to_vec(),
        mode: SampleMode::Fixed,
        intensity: m as f64,
        seed,
    };
    let poissonized = PointConfiguration {
        points: points[..n].to_vec(),
        mode: SampleMode::Poisson,
        intensity: m as f64,
        seed,
    };
    (poissonized, fixed)
}

/// Count points falling in the arc [lo, hi) (angles taken mod 2π).
pub fn arc_count(config: &PointConfiguration, lo: f64, hi: f64) -> usize {
    config
        .points
        .iter()
        .filter(|&&x| {
            let x = x.rem_euclid(TWO_PI);
            if lo <= hi {
                x >= lo && x < hi
            } else {
                x >= lo || x < hi
            }
        })
        .count()
}
