//! Connection-tableau proving over a TPTP CNF subset, plus the data plumbing
//! around it: proof recording and checking, training-example extraction,
//! a hashed-feature baseline learner, and evaluation metrics with reports.

pub mod baseline;
pub mod datagen;
pub mod evalkit;
pub mod fol;
pub mod problems;
pub mod tableau;
pub(crate) mod util;
