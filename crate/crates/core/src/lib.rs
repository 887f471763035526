//! Simulation and inference toolkit for COGARCH(1,1) and MCOGARCH(1,1)
//! skeletons driven by compound Poisson noise.

pub mod error;
pub mod experiment;
pub mod hellinger;
pub mod jump_laws;
pub mod likelihood;
pub mod processes;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use jump_laws::JumpLaw;
pub use processes::{Model, PathSkeleton, Scheme, Theta};
