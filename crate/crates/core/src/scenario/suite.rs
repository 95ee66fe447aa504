use std::fmt;
use std::io;
use std::time::{Duration, Instant};

use crate::scenario::dsl::{parse_scenario, Scenario};
use crate::scenario::runner::{run_scenario, Report, RunOptions};

/// Scenario files shipped with the crate, in suite order.
pub const BUILTIN_SOURCES: [(&str, &str); 7] = [
    (
        "sequential-update-add-event.scn",
        include_str!("../../scenarios/sequential-update-add-event.scn"),
    ),
    (
        "sequential-add-update-event.scn",
        include_str!("../../scenarios/sequential-add-update-event.scn"),
    ),
    (
        "concurrent-add-during-update.scn",
        include_str!("../../scenarios/concurrent-add-during-update.scn"),
    ),
    (
        "concurrent-update-during-add.scn",
        include_str!("../../scenarios/concurrent-update-during-add.scn"),
    ),
    (
        "concurrent-tournament-updates.scn",
        include_str!("../../scenarios/concurrent-tournament-updates.scn"),
    ),
    (
        "intention-abort.scn",
        include_str!("../../scenarios/intention-abort.scn"),
    ),
    (
        "creator-participant-abort.scn",
        include_str!("../../scenarios/creator-participant-abort.scn"),
    ),
];

pub fn builtin_suite() -> Vec<Scenario> {
    BUILTIN_SOURCES
        .iter()
        .map(|(file, text)| parse_scenario(text).unwrap_or_else(|e| panic!("builtin {file}: {e}")))
        .collect()
}

pub struct SuiteReport {
    pub reports: Vec<Report>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.reports.iter().filter(|r| r.passed()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.reports.len()
    }

    pub fn audit_violations(&self) -> usize {
        self.reports.iter().map(Report::audit_violations).sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<32} {:>5} {:>8}  result", "scenario", "steps", "commits")?;
        for r in &self.reports {
            writeln!(
                f,
                "{:<32} {:>5} {:>8}  {}",
                r.name,
                r.steps.len(),
                r.journal.len(),
                if r.passed() { "PASS" } else { "FAIL" }
            )?;
            for s in r.steps.iter().filter(|s| s.status != crate::scenario::StepStatus::Ok) {
                writeln!(f, "    {s}")?;
            }
            for v in &r.convergence {
                writeln!(f, "    {v}")?;
            }
        }
        let audited: Vec<_> = self.reports.iter().filter_map(|r| r.audit.as_ref()).collect();
        if !audited.is_empty() {
            let checked: usize = audited.iter().map(|a| a.snapshots_checked).sum();
            writeln!(
                f,
                "audit: {checked} snapshots checked, {} violations",
                self.audit_violations()
            )?;
        }
        write!(
            f,
            "{}/{} passed in {} ms",
            self.passed(),
            self.reports.len(),
            self.elapsed.as_millis()
        )
    }
}

pub fn run_suite(options: &RunOptions) -> io::Result<SuiteReport> {
    let start = Instant::now();
    let reports = builtin_suite()
        .iter()
        .map(|s| run_scenario(s, options))
        .collect::<io::Result<Vec<_>>>()?;
    Ok(SuiteReport {
        reports,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scenarios_are_named_after_their_files() {
        let suite = builtin_suite();
        assert_eq!(suite.len(), 7);
        for (s, (file, _)) in suite.iter().zip(BUILTIN_SOURCES) {
            assert_eq!(format!("{}.scn", s.name), file);
        }
    }
}
