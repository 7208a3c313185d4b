//! Derivative machinery: time jets for ω̇, ω̈ and exact parameter gradients.
//!
//! Profiles are evaluated on [`Jet`]s to get value and two time
//! derivatives. Parameter gradients of objectives built from those jets come
//! either from the generic [`Tape`] (any composition of [`Real`] operations)
//! or from the layer-wise backward pass of the neural profile, which is
//! checked against the tape and against [`fd_check`].

mod fd;
mod jet;
mod real;
mod tape;

pub use fd::{fd_check, Differentiable, FdReport, Probe, TapeObjective};
pub use jet::{time_jet, Jet, JetScalar};
pub use real::Real;
pub use tape::{param_gradient, Evaluated, Op, Tape, Var};

pub(crate) use real::{sigmoid, sign0};
