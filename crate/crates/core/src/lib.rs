pub mod interval;
pub mod expr;
pub mod contract;
pub mod decompose;
pub mod propagate;
pub mod boxcon;
pub mod solve;
pub mod bench;
