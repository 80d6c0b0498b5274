//! Maximum-entropy distributions over finite integer supports.
//!
//! The dual program `inf_y log Σ_α p_α e^{⟨α−θ,y⟩}` is solved inside a ball
//! whose radius depends only on the dimension, the facet complexity of the
//! marginal polytope, the weight bit complexity and the target accuracy.
//! Supports can be explicit or described by a counting oracle.

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod apps;
pub mod dual;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lp;
pub mod minnorm;
pub mod numeric;
pub mod oracle;
pub mod par;
pub mod support;
pub mod witness;

pub use error::{Error, Result};
