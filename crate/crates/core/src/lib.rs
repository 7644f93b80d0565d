//! Free rigid body carrying three rotors, integrated in four equivalent
//! reduced formulations with conservation and drift diagnostics.

pub mod algebra;
pub mod cli;
pub mod config;
pub mod conserved;
pub mod dynamics;
pub mod formulations;
pub mod harness;
pub mod integrators;
pub mod oracle;
pub mod output;
