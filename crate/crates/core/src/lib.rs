//! Frequency multiplier of the relativistic Boltzmann collision operator
//! without angular cutoff: reduced integral representations, a direct
//! collision-integral oracle and large-momentum asymptotics.

// `!(x > a)` comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod kernels;
pub mod kinematics;
pub mod multiplier;
pub mod oracle;
pub mod quadrature;
pub mod specfun;

pub use kernels::{Interaction, KernelConfig};
pub use kinematics::{Momentum, PairInvariants};
pub use multiplier::{MultiplierBreakdown, RegionKind, RegionSpec};
pub use quadrature::{QuadResult, QuadSpec};
