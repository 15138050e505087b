#![no_std]
extern crate alloc;

pub mod lattice;
pub mod matrix;
pub mod monoid;
pub mod processor;
pub mod engine;
pub mod spectra;
pub mod critical;
pub mod burning;
pub mod oracle;
pub mod zoo;
