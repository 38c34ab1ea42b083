//! Inverse covariance clustering of return series into market states, with
//! TMFG/LoGo sparse precision estimates, state forecasting, long-only
//! mean-variance solvers, and a resampled train/test backtest.

// `!(x > y)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod data;
pub mod error;
pub mod forecast;
pub mod icc;
pub mod linalg;
pub mod network;
pub mod optim;
pub mod synth;

pub use data::{PricePanel, ReturnsPanel, WindowSplit};
pub use error::{Error, Result};
pub use forecast::StateLabeling;
pub use icc::{ClusterAssignment, ClusterConfig, GainKind, GainParams, StateModel};
pub use network::{FilteringNetwork, SparsePrecision};
pub use optim::{PortfolioInputs, PortfolioWeights, TurningPoint};
