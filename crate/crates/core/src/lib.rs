//! Cubic Weyl sums, their complete-sum decompositions, and the arithmetic
//! needed to bound them through smooth-denominator approximations.
//!
//! The crate is organised bottom-up:
//!
//! * [`quad_field`]: Pell units, Lucas sequences and smooth-denominator
//!   approximations to quadratic irrationals.
//! * [`exp_sums`]: complete sums `S(a,h;q)`, linear sums `T(h,t;q)` and the
//!   shifted products `S₂`, `S₃`, `S₄`.
//! * [`weyl_sums`]: incomplete sums `S(α,N)` and the block maxima `η(r)`.
//! * [`factor_plan`]: splitting a denominator into `q₁q₂q₃`.
//! * [`harness`]: verification suites, traces and scans.

pub mod arith;
pub mod error;
pub mod exp_sums;
pub mod factor;
pub mod factor_plan;
pub mod harness;
pub mod quad_field;
pub mod report;
pub mod weyl_sums;

pub use error::{Error, Result};
pub use exp_sums::{ShiftSpec, SumValue};
pub use factor::Factorization;
pub use factor_plan::FactorSplit;
pub use harness::{ScanRecord, SuiteReport};
pub use quad_field::{PellUnit, PowerTerm, QuadraticIrrational, RationalApprox};
pub use weyl_sums::{Alpha, WeylContext};

/// Resource budgets shared by the evaluation routines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest modulus for which a full spectrum may be allocated.
    pub max_q: u64,
    /// Largest length of an incomplete Weyl sum.
    pub max_n: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_q: 1 << 22,
            max_n: 1 << 24,
        }
    }
}
