//! Real concurrent invocations, checked for atomic and totally ordered
//! commits. No interleaving-specific outcome is asserted.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use chrono::Duration as Span;

use crate::ids::{AggregateId, VersionNumber};
use crate::quizzes::{Quizzes, Timestamp};
use crate::store::{CommitEntry, StoreMode, VersionStore};

#[derive(Debug, Clone, Copy)]
pub struct StressOptions {
    pub invokers: usize,
    pub commits_per_invoker: usize,
}

impl Default for StressOptions {
    fn default() -> Self {
        StressOptions {
            invokers: 8,
            commits_per_invoker: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StressReport {
    /// Commits made by the invokers, setup excluded.
    pub commits: usize,
    /// Invocations that aborted and were retried.
    pub aborts: usize,
    pub journal: Vec<CommitEntry>,
    /// Adjacent journal entries whose versions do not increase.
    pub out_of_order: Vec<(VersionNumber, VersionNumber)>,
    pub duplicate_versions: Vec<VersionNumber>,
    /// Commits whose records are not all present at the commit's version,
    /// or tournament/quiz pairs whose version histories differ.
    pub torn_commits: Vec<String>,
    /// Concurrent reads of a tournament and its quiz.
    pub observations: usize,
    /// Reads that saw the pair at different versions.
    pub torn_observations: usize,
    pub elapsed: Duration,
}

impl StressReport {
    pub fn ok(&self) -> bool {
        self.out_of_order.is_empty()
            && self.duplicate_versions.is_empty()
            && self.torn_commits.is_empty()
            && self.torn_observations == 0
    }
}

impl fmt::Display for StressReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "commits: {} ({} aborted attempts retried)",
            self.commits, self.aborts
        )?;
        writeln!(f, "journal entries: {}", self.journal.len())?;
        writeln!(f, "out-of-order versions: {}", self.out_of_order.len())?;
        writeln!(f, "duplicate versions: {}", self.duplicate_versions.len())?;
        writeln!(f, "torn commits: {}", self.torn_commits.len())?;
        for t in &self.torn_commits {
            writeln!(f, "  {t}")?;
        }
        writeln!(
            f,
            "concurrent pair reads: {} ({} torn)",
            self.observations, self.torn_observations
        )?;
        write!(
            f,
            "result: {} in {} ms",
            if self.ok() { "PASS" } else { "FAIL" },
            self.elapsed.as_millis()
        )
    }
}

const MAX_ATTEMPTS: usize = 1000;

/// Runs `invokers` threads that each commit `commits_per_invoker` tournament
/// updates. Even invokers share one tournament, so their commits merge;
/// odd invokers own a tournament each. Every update writes a tournament and
/// its quiz in one commit, while an observer thread reads the pairs.
pub fn run_stress(options: StressOptions) -> StressReport {
    let start = Instant::now();
    let quizzes = Arc::new(Quizzes::new(Arc::new(VersionStore::new(StoreMode::Production))));
    let base: Timestamp = "2025-01-01T00:00:00".parse().expect("valid timestamp");
    let ce = quizzes
        .create_course_execution("stress", &[(1, "Creator")])
        .expect("setup commit");
    let topics: BTreeSet<String> = ["stress".to_owned()].into();
    let create = || {
        quizzes
            .create_tournament(ce, 1, base, Timestamp(base.0 + Span::hours(1)), topics.clone())
            .expect("setup commit")
    };
    let shared = create();
    let targets: Vec<AggregateId> = (0..options.invokers)
        .map(|i| if i % 2 == 0 { shared } else { create() })
        .collect();
    let mut pairs: Vec<(AggregateId, AggregateId)> = targets
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|&t| {
            let quiz = quizzes.field(t, "quiz").expect("tournament has a quiz");
            (t, quiz.parse().expect("quiz id"))
        })
        .collect();
    pairs.sort();
    let setup_commits = quizzes.store().journal().len();

    let aborts = AtomicUsize::new(0);
    let done = AtomicBool::new(false);
    let observations = AtomicUsize::new(0);
    let torn_observations = AtomicUsize::new(0);
    thread::scope(|scope| {
        scope.spawn(|| {
            while !done.load(Ordering::Relaxed) {
                for &(t, q) in &pairs {
                    let latest = quizzes.store().latest_many(&[t, q]);
                    observations.fetch_add(1, Ordering::Relaxed);
                    let versions: Vec<_> = latest.iter().map(|r| r.as_ref().map(|r| r.version)).collect();
                    if versions[0] != versions[1] {
                        torn_observations.fetch_add(1, Ordering::Relaxed);
                    }
                }
                thread::yield_now();
            }
        });
        let invokers: Vec<_> = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let quizzes = &quizzes;
                let aborts = &aborts;
                scope.spawn(move || {
                    for k in 0..options.commits_per_invoker {
                        // Unique dates make every update change both aggregates.
                        let offset = Span::minutes((i * options.commits_per_invoker + k + 1) as i64);
                        let s = Timestamp(base.0 + offset);
                        let e = Timestamp(s.0 + Span::hours(1));
                        let mut attempts = 0;
                        while quizzes.update_tournament(t, Some(s), Some(e), None).is_err() {
                            aborts.fetch_add(1, Ordering::Relaxed);
                            attempts += 1;
                            assert!(attempts < MAX_ATTEMPTS, "invoker {i} starved");
                        }
                    }
                })
            })
            .collect();
        for h in invokers {
            h.join().expect("invoker panicked");
        }
        done.store(true, Ordering::Relaxed);
    });

    let store = quizzes.store();
    let journal = store.journal();
    let out_of_order = journal
        .windows(2)
        .filter(|w| w[1].version <= w[0].version)
        .map(|w| (w[0].version, w[1].version))
        .collect();
    let mut seen = BTreeSet::new();
    let duplicate_versions = journal
        .iter()
        .filter(|e| !seen.insert(e.version))
        .map(|e| e.version)
        .collect();
    let mut torn_commits = Vec::new();
    for entry in &journal {
        for &id in &entry.aggregates {
            if !store.versions_of(id).iter().any(|r| r.version == entry.version) {
                torn_commits.push(format!("commit {} lacks a record of aggregate {id}", entry.version));
            }
        }
    }
    for &(t, q) in &pairs {
        let history = |id| store.versions_of(id).iter().map(|r| r.version).collect::<Vec<_>>();
        if history(t) != history(q) {
            torn_commits.push(format!("tournament {t} and quiz {q} have different version histories"));
        }
    }
    StressReport {
        commits: journal.len() - setup_commits,
        aborts: aborts.into_inner(),
        journal,
        out_of_order,
        duplicate_versions,
        torn_commits,
        observations: observations.into_inner(),
        torn_observations: torn_observations.into_inner(),
        elapsed: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_stress_run_is_clean() {
        let r = run_stress(StressOptions {
            invokers: 4,
            commits_per_invoker: 20,
        });
        assert!(r.ok(), "{r}");
        assert_eq!(r.commits, 80);
    }
}
