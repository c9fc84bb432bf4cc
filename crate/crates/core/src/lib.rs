pub mod cli;
pub mod dirac;
pub mod fock;
pub mod fourier;
pub mod gradient;
pub mod linalg;
pub mod metric;
pub mod report;
pub mod schur;
pub mod suite;
pub mod system;
pub mod wick;
