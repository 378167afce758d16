pub mod apg;
pub mod cohomology;
pub mod complex;
pub mod cutproject;
pub mod error;
pub mod intmat;
pub mod mixed;
pub mod peforms;
pub mod pv;
pub mod quadratic;
pub mod snf;
pub mod tiling;
pub mod union_find;

pub use error::{Error, Result};
