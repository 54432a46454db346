//! SIS epidemics on adaptive networks with link-type dependent link
//! activation and deletion.
//!
//! The crate bundles the pieces needed to study the model from several
//! angles:
//!
//! * [`sim`] and [`ensemble`]: exact event-driven stochastic simulation,
//! * [`pairwise`] and [`compact`]: two pairwise mean-field ODE models,
//!   integrated with the adaptive solver in [`ode`],
//! * [`bifurcation`]: steady states, transcritical and Hopf boundaries,
//! * [`master`]: the exact master equation for very small networks,
//! * [`analysis`]: spectra, regime classification and network metrics,
//! * [`harness`]: configuration-driven experiment runs.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bifurcation;
pub mod compact;
pub mod ensemble;
pub mod error;
mod fenwick;
pub mod harness;
pub mod kv;
pub mod linalg;
pub mod master;
pub mod model;
pub mod network;
pub mod ode;
pub mod pairwise;
pub mod sim;

pub use error::{Error, Result};
pub use model::{LinkType, ModelParams, PairCounts, Scenario, Status};
pub use network::NetworkState;
