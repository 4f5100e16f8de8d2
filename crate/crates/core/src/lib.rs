pub mod cli;
pub mod construct;
pub mod io;
pub mod linalg;
pub mod quadratic;
pub mod signature;
pub mod verify;
