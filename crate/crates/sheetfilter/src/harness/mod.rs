//! Configuration, RNG streams, the check suites, artifact output and the
//! subcommands behind the `sheetfilter` binary.

pub mod checks;
pub mod config;
pub mod io;
pub mod report;
pub mod rng;
pub mod run;
