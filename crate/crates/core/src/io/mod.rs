pub mod export;
pub mod rational;
pub mod slice;
