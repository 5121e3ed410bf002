//! Simulation and numerical optimization for a single-server queue whose
//! net input is fractional Brownian motion.
//!
//! The crate covers the pipeline end to end:
//!
//! * [`fgn`] — exact-covariance fractional Gaussian noise / fBM paths;
//! * [`skorokhod`] — the one-sided reflection map, regulator, and
//!   controlled workload;
//! * [`stationary`] — the stationary supremum functional, its cost
//!   kernel, tail asymptotics, and the coupling construction;
//! * [`costs`] — ergodic (reduced and direct), discounted, and
//!   finite-horizon cost estimators;
//! * [`control`] — one-dimensional optimizers over the cost estimators,
//!   the constrained-budget rule, and the Abelian-limit sweep;
//! * [`onoff`] — superposed heavy-tailed ON-OFF sources demonstrating
//!   the heavy-traffic scaling toward the fBM model.
//!
//! Everything is deterministic given a [`rng::SeedSpec`]: results do not
//! depend on thread count or scheduling.

pub mod control;
pub mod costs;
pub mod error;
pub mod fgn;
pub mod onoff;
pub mod rng;
pub mod skorokhod;
pub mod stationary;
pub mod stats;

pub use error::{Error, Result};
pub use fgn::{fbm_covariance, fbm_path, generate_fgn, HurstParameter, SamplePath, TimeGrid};
pub use rng::SeedSpec;
pub use skorokhod::{reflect, time_change_rate, workload, ModelSpec, RateFn, WorkloadPath};
pub use stats::EstimateWithError;
