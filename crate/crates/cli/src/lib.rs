//! Workload harness for the lazy search tree: script parsing, scenario
//! generation, verified execution and benchmarking.

pub mod bench;
pub mod generate;
pub mod run;
pub mod script;

pub use generate::{GenError, Scenario};
pub use run::{run, RunError, RunOptions, RunReport};
pub use script::{parse, Op, ParseError, Script};
