//! Std companion to `somf-core`: dataset IO, benchmark configuration,
//! metric streams and the command-line runner.

pub mod config;
pub mod data_io;
pub mod metrics;
pub mod runner;

/// Worker-thread cap: `SOMF_THREADS` when set, otherwise the machine's
/// available parallelism.
pub fn thread_cap() -> usize {
    match std::env::var("SOMF_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}
