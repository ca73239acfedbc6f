//! Reading, validating, converting and analysing DIAX subject files.

pub mod align;
pub mod cli;
pub mod convert;
pub mod metrics;
pub mod model;
pub mod plotout;
pub mod timeparse;
pub mod validate;
