//! Design and simulation of AXY-n dynamical-decoupling sequences for an NV
//! center electron spin coupled to a ¹³C nuclear bath.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod modfunc;
pub mod pulse_error;
pub mod sequence;
pub mod timing;

pub use error::{Error, Result};
