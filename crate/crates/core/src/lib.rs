//! Quasiconvex systemic risk measures `R = ρ∘Λ` on finite probability spaces.

pub mod aggregation;
pub mod convex;
pub mod dual;
pub mod duality;
pub mod error;
pub mod io;
pub mod lp;
pub mod minimax;
pub mod numeric;
pub mod optimize;
pub mod prob;
pub mod risk;

pub use error::{Error, Result};
