pub mod arith;
pub mod builtin;
pub mod chartab;
pub mod constraints;
pub mod cyclo;
pub mod pipeline;
pub mod solver;
pub mod units;
