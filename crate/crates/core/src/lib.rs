//! Negatively dependent joint mixes.
//!
//! Exact dependence checkers on finite discrete distributions, Gaussian and
//! elliptical joint-mix covariance constructions, joint-mix decompositions,
//! and LP-based minimax multi-marginal optimal transport with quadratic cost.

pub mod decomp;
pub mod depcheck;
pub mod dist;
pub mod error;
pub mod lp;
pub mod mix;
pub mod numeric;
pub mod transport;

pub use dist::{make_multinomial, make_orbit_uniform, AnyJoint, Atom, DiscreteJoint, JmVerdict, UnivariateDiscrete};
pub use error::{Error, Result};
pub use numeric::{Backend, Rational, Scalar};
