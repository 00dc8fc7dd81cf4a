// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exit;
pub mod levy;
pub mod mc;
pub mod policy;
pub mod quad;
pub mod report;
pub mod scale;
pub mod series;
pub mod special;
pub mod talbot;

pub use error::{DamError, Result};
pub use levy::{GenericMeasure, JumpDistribution, LevyKind, LevyMeasure, LevyModel};
pub use policy::{CostSpec, DamProblem, FillMode, PiecewisePolynomial, PolicyParams};
pub use scale::{shifted_model, ScaleFunctionSet, ScaleMethod, ScaleOptions};
