//! Analysis and simulation toolkit for a water–vegetation reaction–diffusion model
//! with biomass- and water-dependent mortality.

pub mod equilibria;
pub mod error;
pub mod linalg;
pub mod model;
pub mod normal_form;
pub mod poly;
pub mod simulate;
pub mod stability;
pub mod turing;

pub use error::{Error, Result};
pub use model::{ModelParams, State};
