//! Brute-force reference implementations for tests. Nothing here is fast and
//! nothing here shares code with the production crates.

pub mod features;
pub mod relieff;
pub mod qp;
pub mod calibration;
pub mod eer;
pub mod gradcheck;
