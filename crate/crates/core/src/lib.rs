//! Exponential dichotomies, stable/unstable frames, the Evans determinant
//! `L_D` and its `Z_2` invariants for families `x' = A_lambda(t) x`.
//!
//! ```
//! use dichotomy::model::load_config;
//! use dichotomy::subspaces::frame_field;
//! use dichotomy::index::{index_report, parity_pair};
//!
//! let spec = load_config(r#"{
//!     "family": { "kind": "builtin", "name": "paper-sec4-BC" },
//!     "space": { "topology": "interval", "range": [0.0, 3.141592653589793],
//!                "nodes": 19, "lambda0": [0.0, 3.141592653589793] },
//!     "numerics": { "T": 12.0, "ode_tol": 1e-10, "reortho_interval": 1.0, "zero_tol": 1e-8 }
//! }"#).unwrap();
//! let field = frame_field(&spec.family, &spec.space, &spec.numerics).unwrap();
//! let report = index_report(&spec.family, &field, &spec.numerics).unwrap();
//! assert_eq!(parity_pair(&report, 0, 18).unwrap(), 1);
//! ```

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod dichotomy;
pub mod error;
pub mod index;
pub mod linalg;
pub mod model;
pub mod propagation;
pub mod report;
pub mod subspaces;

pub use error::{Error, Result};
