//! Scripted scenarios over the quizzes domain.
//!
//! Concurrency is simulated on one thread by moving the store's version
//! counter back before a functionality, so that it reads an older snapshot,
//! and forward again afterwards. Events are processed only when a step asks
//! for it, or by the background loop when a step enables it.

pub mod dsl;
mod runner;
mod stress;
mod suite;

pub use dsl::{parse_scenario, Expectation, ParseError, Scenario, Step};
pub use runner::{run_scenario, run_scenario_on, Report, RunOptions, StepReport, StepStatus};
pub use stress::{run_stress, StressOptions, StressReport};
pub use suite::{builtin_suite, run_suite, SuiteReport, BUILTIN_SOURCES};
