//! Bellman functions for martingales whose square function is uniformly
//! bounded.
//!
//! The crate evaluates the BMO Bellman surfaces `b_ε` on the parabolic strip
//! `ω_ε = {x² ≤ y ≤ x² + ε²}`, the trace of the three-dimensional Bellman
//! function `B(x, y, z)` on the roof `y − x² = 1 − z²` for the tail payoff
//! `χ_[0,∞)`, builds finite martingales that nearly attain these values, and
//! runs grid and random-split verification suites that recover the sharp
//! constants.
//!
//! Module map:
//!
//! * [`geometry`]: domains, tangents, parabolic shifts, splitting events.
//! * [`payoff`]: the payoff catalog and shape classification.
//! * [`surface`]: `b_ε` via tangent foliations, the cup, and the indicator
//!   closed form.
//! * [`martingale`]: exact finite martingale trees and extremizers.
//! * [`roof`]: the model problem and the roof trace.
//! * [`analysis`]: verification suites and sharp-constant extraction.
//! * [`cli`]: the `bellman` command-line driver.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod martingale;
pub mod payoff;
pub mod quadrature;
pub mod roof;
pub mod roots;
pub mod surface;

pub use error::{Error, Result};
pub use geometry::{Point2, Side, SplitEvent, State3};
pub use martingale::{DistributionTable, MartingaleTree};
pub use payoff::{BoundaryFunction, PayoffSpec, Shape};
pub use surface::{BellmanSurface, Foliation};
