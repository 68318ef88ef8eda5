//! Desk-scale toolkit for counting rational points on quadrics and
//! biquadratic hypersurfaces with the circle method.
//!
//! The crate is organised around the objects that appear in a
//! Hardy-Littlewood analysis of the equation F = 0:
//!
//! * [`forms`]: exact integer quadratic forms `F(x) = x^T M x`, their duals,
//!   and bidegree (2,2) forms `F(x;y)` together with their quadratic slices.
//! * [`expsums`]: complete exponential sums `S_q(c)`, Ramanujan sums and
//!   quadratic Gauss sums, with a brute-force route and a CRT route.
//! * [`padic`]: solution counts modulo prime powers, local densities
//!   `sigma_p`, and singular series assembled either as an Euler product or
//!   as a q-series.
//! * [`archimedean`]: the singular integral `sigma_infinity` as a
//!   delta-kernel limit, estimated by seeded Monte Carlo.
//! * [`counting`]: exact lattice point counts in boxes and height regions,
//!   including the Moebius-inverted count of primitive points off the
//!   degenerate locus.
//!
//! Everything exact is exact (arbitrary precision integers or rationals);
//! everything numeric carries an explicit uncertainty or tail bound.
//! Enumeration work is metered against a caller-supplied budget so that no
//! call silently runs away.

pub mod arith;
pub mod forms;

pub mod archimedean;
pub mod counting;
pub mod expsums;
pub mod fit;
pub mod padic;

/// Default enumeration budget, measured in summand (or lattice candidate)
/// evaluations. Operations that would exceed their budget fail fast with a
/// `BudgetExceeded` error instead of running for hours.
pub const DEFAULT_BUDGET: u64 = 100_000_000;
