use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use crate::events::{AuditLog, DEFAULT_INTERVAL_MS};
use crate::ids::{AggregateId, VersionNumber};
use crate::quizzes::{participant_exists_violations, ParticipantExistsViolation, Quizzes};
use crate::scenario::dsl::{Expectation, Scenario, Step};
use crate::store::{CommitEntry, StoreMode, VersionStore};

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Interval used by `event-loop on` when the step gives none.
    pub event_interval_ms: u64,
    /// Audit every snapshot against the admissibility conditions.
    pub audit: bool,
    /// Append journal lines to this file as commits happen.
    pub journal_file: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            event_interval_ms: DEFAULT_INTERVAL_MS,
            audit: false,
            journal_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepStatus {
    Ok,
    Fail(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    pub index: usize,
    pub step: String,
    pub status: StepStatus,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            StepStatus::Ok => write!(f, "{} {} -> OK", self.index, self.step),
            StepStatus::Fail(detail) => write!(f, "{} {} -> FAIL:{detail}", self.index, self.step),
        }
    }
}

/// Outcome of one scenario run.
#[derive(Debug, Clone)]
pub struct Report {
    pub name: String,
    /// One entry per executed step; execution stops at the first failure.
    pub steps: Vec<StepReport>,
    /// Commit journal at the end of the steps.
    pub journal: Vec<CommitEntry>,
    /// Handler commits made while draining events after the steps.
    pub drained: usize,
    /// PARTICIPANT_EXISTS violations once all events are drained.
    pub convergence: Vec<ParticipantExistsViolation>,
    pub audit: Option<AuditLog>,
}

impl Report {
    pub fn steps_passed(&self) -> bool {
        self.steps.iter().all(|s| s.status == StepStatus::Ok)
    }

    pub fn audit_violations(&self) -> usize {
        self.audit.as_ref().map_or(0, |a| a.violations.len())
    }

    /// Steps passed, the end state converged and no snapshot was
    /// inadmissible.
    pub fn passed(&self) -> bool {
        self.steps_passed() && self.convergence.is_empty() && self.audit_violations() == 0
    }

    pub fn journal_text(&self) -> String {
        self.journal.iter().map(|e| format!("{e}\n")).collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.name)?;
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        if self.convergence.is_empty() {
            writeln!(
                f,
                "convergence: PARTICIPANT_EXISTS holds after {} handler commits",
                self.drained
            )?;
        } else {
            for v in &self.convergence {
                writeln!(f, "convergence: {v}")?;
            }
        }
        if let Some(audit) = &self.audit {
            writeln!(
                f,
                "audit: {} snapshots checked, {} violations",
                audit.snapshots_checked,
                audit.violations.len()
            )?;
            for v in &audit.violations {
                writeln!(f, "audit: {v}")?;
            }
        }
        writeln!(f, "journal:")?;
        for e in &self.journal {
            writeln!(f, "{e}")?;
        }
        write!(f, "result: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

struct Runner<'q> {
    quizzes: &'q Quizzes,
    bindings: BTreeMap<String, AggregateId>,
    last_handled: Option<usize>,
    default_interval_ms: u64,
}

impl Runner<'_> {
    fn resolve(&self, token: &str) -> Result<String, String> {
        match token.strip_prefix('$') {
            Some(var) => self
                .bindings
                .get(var)
                .map(ToString::to_string)
                .ok_or_else(|| format!("unbound variable ${var}")),
            None => Ok(token.to_owned()),
        }
    }

    fn resolve_id(&self, token: &str) -> Result<AggregateId, String> {
        let s = self.resolve(token)?;
        s.parse().map_err(|_| format!("`{s}` is not an aggregate id"))
    }

    fn run(&mut self, step: &Step) -> Result<(), String> {
        match step {
            Step::Invoke {
                bind,
                functionality,
                args,
                expect,
            } => {
                let args = args.iter().map(|a| self.resolve(a)).collect::<Result<Vec<_>, _>>()?;
                match (self.quizzes.invoke(functionality, &args), expect) {
                    (Ok(inv), Expectation::Ok) => {
                        if let Some(var) = bind {
                            let id = inv.created.ok_or("nothing was created to bind")?;
                            self.bindings.insert(var.clone(), id);
                        }
                        Ok(())
                    }
                    (Ok(_), Expectation::Abort(code)) => Err(format!("expected ABORT {code}, committed")),
                    (Err(e), Expectation::Abort(code)) if e.code() == *code => Ok(()),
                    (Err(e), _) => Err(format!("ABORT {}: {e}", e.code())),
                }
            }
            Step::AdjustVersion(delta) => self
                .quizzes
                .store()
                .adjust_version(*delta)
                .map(|_| ())
                .map_err(|e| format!("{}: {e}", e.code())),
            Step::TriggerEvents { kind, subscriber } => {
                let subscriber = subscriber.as_deref().map(|s| self.resolve_id(s)).transpose()?;
                self.last_handled = Some(self.quizzes.trigger_events(*kind, subscriber));
                Ok(())
            }
            Step::EventLoop { enabled, interval_ms } => {
                let ms = interval_ms.unwrap_or(self.default_interval_ms);
                self.quizzes.event_loop().set_loop(*enabled, ms);
                Ok(())
            }
            Step::Sleep(ms) => {
                thread::sleep(Duration::from_millis(*ms));
                Ok(())
            }
            Step::AssertField { target, path, expected } => {
                let id = self.resolve_id(target)?;
                let actual = self.quizzes.field(id, path).map_err(|e| e.to_string())?;
                if &actual == expected {
                    Ok(())
                } else {
                    Err(format!("expected `{expected}`, found `{actual}`"))
                }
            }
            Step::AssertVersion { target, expected } => {
                let id = self.resolve_id(target)?;
                let actual = self
                    .quizzes
                    .store()
                    .latest(id)
                    .map(|r| r.version)
                    .ok_or_else(|| format!("aggregate {id} not found"))?;
                if actual == VersionNumber(*expected) {
                    Ok(())
                } else {
                    Err(format!("expected version {expected}, found {actual}"))
                }
            }
            Step::AssertHandled(n) => match self.last_handled {
                Some(h) if h == *n => Ok(()),
                Some(h) => Err(format!("expected {n} handled, found {h}")),
                None => Err("no trigger-events step ran".into()),
            },
        }
    }
}

/// Runs `scenario` on a fresh simulation store with the event loop off.
///
/// Fails only if the journal file cannot be opened; scenario failures are
/// reported in the [`Report`].
pub fn run_scenario(scenario: &Scenario, options: &RunOptions) -> io::Result<Report> {
    let mut store = VersionStore::new(StoreMode::Simulation);
    if options.audit {
        store = store.with_audit();
    }
    if let Some(path) = &options.journal_file {
        store = store.with_journal_file(path)?;
    }
    let quizzes = Quizzes::new(Arc::new(store));
    Ok(run_scenario_on(scenario, &quizzes, options.event_interval_ms))
}

/// Runs `scenario` against an existing domain, which stays available for
/// inspection. After the steps the event loop is stopped and pending events
/// are drained.
pub fn run_scenario_on(scenario: &Scenario, quizzes: &Quizzes, event_interval_ms: u64) -> Report {
    let mut runner = Runner {
        quizzes,
        bindings: BTreeMap::new(),
        last_handled: None,
        default_interval_ms: event_interval_ms,
    };
    let mut steps = Vec::new();
    for (i, step) in scenario.steps.iter().enumerate() {
        let status = match runner.run(step) {
            Ok(()) => StepStatus::Ok,
            Err(detail) => StepStatus::Fail(detail),
        };
        let failed = status != StepStatus::Ok;
        steps.push(StepReport {
            index: i + 1,
            step: step.to_string(),
            status,
        });
        if failed {
            break;
        }
    }
    quizzes.event_loop().set_loop(false, event_interval_ms);
    let journal = quizzes.store().journal();
    let drained = quizzes.drain_events();
    let convergence = participant_exists_violations(quizzes.store());
    Report {
        name: scenario.name.clone(),
        steps,
        journal,
        drained,
        convergence,
        audit: quizzes.store().audit_log(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::dsl::parse_scenario;

    const SETUP: &str = "\
        $ce = invoke createCourseExecution 2024 1:Creator 7:Ann\n\
        $t = invoke createTournament $ce 1 2024-01-01T10:00:00 2024-01-01T12:00:00 algebra\n";

    fn run(text: &str) -> Report {
        run_scenario(
            &parse_scenario(&format!("{SETUP}{text}")).unwrap(),
            &RunOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn report_lines_follow_the_step_format() {
        let r = run("assert-field $t creator.name Creator\nassert-version $t 2");
        assert!(r.passed(), "{r}");
        assert_eq!(r.steps[2].to_string(), "3 assert-field $t creator.name Creator -> OK");
        assert!(r.to_string().contains("commit 2 createTournament 2,3 -"));
    }

    #[test]
    fn execution_stops_at_the_first_failure() {
        let r = run("assert-version $t 9\nassert-version $t 2");
        assert!(!r.passed());
        assert_eq!(r.steps.len(), 3);
        assert_eq!(
            r.steps[2].status,
            StepStatus::Fail("expected version 9, found 2".into())
        );
    }

    #[test]
    fn unexpected_outcomes_fail_the_step() {
        let r = run("invoke addParticipant $t 99");
        assert_eq!(
            r.steps[2].status,
            StepStatus::Fail("ABORT NOT_FOUND: student 99 in course execution 1 not found".into())
        );
        let r = run("invoke addParticipant $t 7 expect abort NOT_FOUND");
        assert_eq!(
            r.steps[2].status,
            StepStatus::Fail("expected ABORT NOT_FOUND, committed".into())
        );
        let r = run("invoke addParticipant $nope 7");
        assert_eq!(r.steps[2].status, StepStatus::Fail("unbound variable $nope".into()));
    }

    #[test]
    fn underflow_is_a_failure() {
        let r = run("adjust-version -5");
        assert_eq!(
            r.steps[2].status,
            StepStatus::Fail("UNDERFLOW: version underflow: 2 -5".into())
        );
    }

    #[test]
    fn background_loop_processes_events() {
        let r = run("\
            invoke addParticipant $t 7\n\
            invoke unenrollStudent $ce 7\n\
            event-loop on 5\n\
            sleep 200\n\
            event-loop off\n\
            assert-field $t participant.7.state INACTIVE");
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn pending_events_are_drained_before_the_convergence_check() {
        let r = run("invoke addParticipant $t 7\ninvoke updateStudentName $ce 7 Anna");
        assert!(r.passed(), "{r}");
        assert_eq!(r.drained, 1);
    }
}
