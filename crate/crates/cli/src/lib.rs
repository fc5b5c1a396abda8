//! Library side of the `bp` command: verification suites, benchmark sweeps and the
//! per-command plumbing, exposed so tests can drive them without a subprocess.

pub mod bench;
pub mod commands;
pub mod manifest;
pub mod settings;
pub mod training;
pub mod verify;
