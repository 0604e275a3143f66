//! Distributionally robust contextual optimisation over intersections of
//! Wasserstein balls.
//!
//! | module | contents |
//! |---|---|
//! | [`lpsolver`] | dense two-phase revised simplex |
//! | [`wasserstein`] | discrete distributions, `W_p` under the ℓ1 ground metric, intersection test |
//! | [`estimators`] | kernel, nearest-neighbour, regression-residual and mixture conditional estimators |
//! | [`dro`] | LP reformulations of one-, two- and M-ball worst-case problems and a grid oracle |
//! | [`experiments`] | data generators, calibration, policy evaluation, backtests, Monte-Carlo checks |

pub mod lpsolver;
pub mod wasserstein;
pub mod estimators;
pub mod dro;
pub mod experiments;

mod error;
pub use error::{Error, Result};
