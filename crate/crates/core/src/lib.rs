//! Safe stabilization of control-affine systems through closed-form
//! universal formulas that merge a control Lyapunov function with a control
//! barrier function, optionally robustified by a Gaussian-process model of
//! the unmodeled dynamics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod acc;
pub mod clf_cbf;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod gp_control;
pub mod qp_oracle;
pub mod verify;

pub use error::{Error, Result};
