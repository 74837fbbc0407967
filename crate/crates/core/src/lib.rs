pub mod canonical;
pub mod dataset;
pub mod hexfloat;
pub mod problemgen;
pub mod learners;
pub mod evaluation;

#[cfg(test)]
pub(crate) mod testutil;
pub mod search;
pub mod session;
