//! Numerical machinery for singular integrals with product kernels of mixed
//! isotropic/parabolic homogeneity on a periodic grid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bump;
pub mod calderon;
pub mod error;
pub mod field;
pub mod hormander;
pub mod kernel;
pub mod lp;
pub mod maximal;
pub mod metric;
pub mod operator;
pub mod par;
pub mod quadrature;
pub mod spaces;
pub mod testfields;
pub mod truncation;

pub use error::{Error, Result};
pub use field::{convolve, lp_norm, weak_distribution, FrequencyField, Geometry, GridField};
pub use maximal::MaximalConfig;
pub use lp::{LPGenerator, LPSetup, LatticeRule, ScaleRange, WindowKind};
pub use metric::{Metric, MetricKind};
pub use operator::{FieldOperator, Identity, Multiplier};
