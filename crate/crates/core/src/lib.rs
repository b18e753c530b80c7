//! Uplink resource allocation for a full-duplex cooperative OFDMA cell.
//!
//! Far users reach the base station through amplify-and-forward relays drawn
//! from the near-user group. For one channel realization the [`allocator`]
//! selects relays, assigns subcarriers with a Jonker-Volgenant linear
//! assignment solver ([`lapjv`]), and splits each link's power budget to
//! maximize the network sum-rate. [`montecarlo`] sweeps the allocation over
//! random Rayleigh realizations and [`concavity_audit`] checks the analytic
//! Hessian eigenvalues of the rate objectives against finite differences.
//!
//! The numeric core is generic over the scalar type ([`Real`] for the
//! floating-point pipeline, [`FdField`] for finite differencing, which also
//! accepts exact [`Rational`] arithmetic). Aliases for the common
//! instantiations live at the crate root.

pub mod allocator;
pub mod cli;
pub mod concavity_audit;
pub mod lapjv;
pub mod montecarlo;
pub mod rate_model;
pub mod scenario;
pub mod search;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating-point scalar used throughout the allocation pipeline.
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field usable for finite differencing. Implemented for the float
/// types and for exact rationals.
pub trait FdField: Clone + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug {}

impl<T> FdField for T where
    T: Clone + Num + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug
{
}

/// Exact arbitrary-precision rational.
pub type Rational = num_rational::BigRational;

pub type CostMatrixF64 = lapjv::CostMatrix<f64>;
pub type CostMatrixF32 = lapjv::CostMatrix<f32>;
pub type AssignmentF64 = lapjv::Assignment<f64>;
pub type AssignmentF32 = lapjv::Assignment<f32>;
pub type NormalizedGainsF64 = scenario::NormalizedGains<f64>;
pub type NormalizedGainsF32 = scenario::NormalizedGains<f32>;
pub type ChannelRealizationF64 = scenario::ChannelRealization<f64>;
pub type CoopLinkParamsF64 = rate_model::CoopLinkParams<f64>;
pub type NonCoopLinkParamsF64 = rate_model::NonCoopLinkParams<f64>;
pub type AllocationPlanF64 = allocator::AllocationPlan<f64>;
pub type AllocationPlanF32 = allocator::AllocationPlan<f32>;
pub type RateReportF64 = allocator::RateReport<f64>;
pub type RateReportF32 = allocator::RateReport<f32>;

pub use allocator::{allocate, allocate_with, check_constraints, AllocatorOptions, RelayPolicy};
pub use lapjv::{brute_force_assignment, solve_rectangular, solve_square};
pub use montecarlo::{run_sweep, run_trial, SweepSpec};
pub use rate_model::SinrForm;
pub use scenario::ScenarioConfig;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error(transparent)]
    Rate(#[from] rate_model::RateError),
    #[error(transparent)]
    Lap(#[from] lapjv::LapError),
    #[error(transparent)]
    Alloc(#[from] allocator::AllocError),
    #[error(transparent)]
    Audit(#[from] concavity_audit::AuditError),
}
