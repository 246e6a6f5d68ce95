pub mod bgv;
pub mod compare;
pub mod error;
pub mod eval;
pub mod interp;
pub mod params;
pub mod query;
pub mod ring;
pub mod switch;

pub use error::{Error, Result};
