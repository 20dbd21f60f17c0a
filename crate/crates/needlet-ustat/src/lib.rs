//! Needlet frames on the circle, Poisson U-statistics built from needlet
//! kernels, and experiment drivers that verify high-frequency central limit
//! behaviour (variance scaling, chaos dominance, fourth-moment bounds,
//! Wasserstein convergence rates and de-Poissonization).

pub mod error;
pub mod manifold;
pub mod util;
pub mod window;
pub mod frame;
pub mod density;
pub mod sampler;
pub mod ustat;
pub mod bounds;
pub mod harness;
pub mod schedule;
pub mod config;
pub mod output;

pub use error::{Error, Result};
