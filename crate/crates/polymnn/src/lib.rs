//! Multiplicative neural networks for learning polynomials, with the
//! baselines and experiment harness to measure what they buy.
//!
//! Ordinary feedforward nets interpolate well and extrapolate poorly: away
//! from the training distribution a ReLU net decays to a piecewise-linear
//! guess. The network families here ([`mnn`]) multiply hidden units instead
//! of only adding them, so a net sized to a polynomial's order can represent
//! it exactly, and what it learns keeps holding far outside the data.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`], [`autodiff`], [`train`]: dense f64 matrices, a reverse-mode
//!   graph over them, and a seeded Adam mini-batch loop.
//! - [`mnn`]: the four multiplicative architectures (`pann`, `ccp`,
//!   `pdclow`, `pdc`), one parameter budget per polynomial order.
//! - [`poly`], [`synth`]: parsed polynomial targets sampled from Gaussians,
//!   and closed-form benchmark functions split into a central training box
//!   plus an outer test shell.
//! - [`baselines`], [`tree`]: mean, least squares, a ReLU net, random
//!   forests, and gradient boosting, all behind one fitting entry point.
//! - [`sir`], [`metamodel`]: a discrete-time epidemic simulator and
//!   three-network metamodels that learn its transition map, scored by
//!   rolling whole held-out epidemics forward from their initial states.
//! - [`metrics`], [`exp`]: RRSE/R² reporting with explicit NaN accounting,
//!   and the config-driven harness behind the `polymnn` binary
//!   (`run`, `list-targets`, `emit-plots`).
//!
//! Every random draw descends from one config seed through named streams
//! ([`rng`]), so any report can be reproduced byte for byte.
//!
//! ```no_run
//! use polymnn::exp::{self, ExperimentConfig};
//!
//! let config = ExperimentConfig::parse(
//!     "experiment = poly\n\
//!      models = pdc\n\
//!      polynomials = a^2\n",
//! )?;
//! let report = exp::run(&config)?;
//! println!("{}", exp::cells_csv(&report.body.cells));
//! # Ok::<(), polymnn::Error>(())
//! ```

pub mod autodiff;
pub mod baselines;
pub mod data;
pub mod error;
pub mod exp;
pub mod metamodel;
pub mod metrics;
pub mod mnn;
pub mod poly;
pub mod rng;
pub mod sir;
pub mod synth;
pub mod tensor;
pub mod train;
pub mod tree;

pub use error::{Error, Result};
