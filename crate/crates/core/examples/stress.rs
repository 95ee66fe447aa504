//! Real threads committing at once. Commits must get distinct, increasing
//! versions and every tournament/quiz pair must move together.

use tcc::scenario::{run_stress, StressOptions};

fn main() {
    let report = run_stress(StressOptions {
        invokers: 8,
        commits_per_invoker: 100,
    });
    println!("{report}");
    assert!(report.ok());
}
