//! Append-only multi-version aggregate store.
//!
//! All aggregates share one store so a unit of work can commit every version
//! it writes, plus the events it emits, in one atomic step. Committed records
//! are immutable and shared as `Arc`s; readers take a shared lock that is only
//! held exclusively for the instant a commit publishes its records.
//!
//! The store keeps two version quantities. `current_version` is the
//! last-committed counter units of work start from; test harnesses may shift
//! it with [`VersionStore::adjust_version`] to simulate concurrency. The head
//! is the larger of that counter and the highest version actually committed,
//! and a commit always takes `head + 1`, so version numbers stay unique even
//! while the counter is shifted back.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use crate::aggregate::{Aggregate, UowToken};
use crate::error::{Error, Result};
use crate::events::{AuditLog, Event};
use crate::ids::{AggregateId, LifecycleState, VersionNumber};

/// One committed, immutable version of one aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct VersionedRecord<A: Aggregate> {
    pub aggregate_id: AggregateId,
    pub version: VersionNumber,
    pub prev_version: Option<VersionNumber>,
    pub state: LifecycleState,
    pub payload: A,
    pub emitted_events: Vec<Event<A::Event>>,
}

/// Whether the test-only version adjustment hook is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoreMode {
    #[default]
    Production,
    Simulation,
}

/// Write-footprint classification of a functionality. Reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalityKind {
    Query,
    Simple,
    Complex,
}

impl fmt::Display for FunctionalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionalityKind::Query => "QUERY",
            FunctionalityKind::Simple => "SIMPLE",
            FunctionalityKind::Complex => "COMPLEX",
        })
    }
}

/// One entry of the commit log. Its `Display` is the journal line format:
/// `commit <version> <functionality> <ids> <event types>`, lists joined with
/// `,` and an empty list written as `-`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitEntry {
    pub version: VersionNumber,
    pub functionality: String,
    pub kind: FunctionalityKind,
    pub aggregates: Vec<AggregateId>,
    pub event_types: Vec<String>,
}

impl fmt::Display for CommitEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(items: &[T]) -> String {
            if items.is_empty() {
                "-".to_owned()
            } else {
                items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            }
        }
        write!(
            f,
            "commit {} {} {} {}",
            self.version,
            self.functionality,
            list(&self.aggregates),
            list(&self.event_types)
        )
    }
}

/// A version to be written by a commit.
#[derive(Debug, Clone)]
pub struct RecordWrite<A> {
    pub aggregate_id: AggregateId,
    pub prev_version: Option<VersionNumber>,
    pub state: LifecycleState,
    pub payload: A,
}

struct Inner<A: Aggregate> {
    records: BTreeMap<AggregateId, Vec<Arc<VersionedRecord<A>>>>,
    events: Vec<Event<A::Event>>,
    counter: VersionNumber,
    max_committed: VersionNumber,
    log: Vec<CommitEntry>,
}

impl<A: Aggregate> Inner<A> {
    fn head(&self) -> VersionNumber {
        self.counter.max(self.max_committed)
    }
}

pub struct VersionStore<A: Aggregate> {
    inner: RwLock<Inner<A>>,
    commit_lock: Mutex<()>,
    next_id: AtomicU64,
    next_token: AtomicU64,
    mode: StoreMode,
    audit: Option<Mutex<AuditLog>>,
    journal_file: Option<Mutex<BufWriter<File>>>,
}

impl<A: Aggregate> fmt::Debug for VersionStore<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VersionStore")
            .field("mode", &self.mode)
            .field("current_version", &self.current_version())
            .finish_non_exhaustive()
    }
}

impl<A: Aggregate> Default for VersionStore<A> {
    fn default() -> Self {
        Self::new(StoreMode::Production)
    }
}

impl<A: Aggregate> VersionStore<A> {
    pub fn new(mode: StoreMode) -> Self {
        VersionStore {
            inner: RwLock::new(Inner {
                records: BTreeMap::new(),
                events: Vec::new(),
                counter: VersionNumber::ZERO,
                max_committed: VersionNumber::ZERO,
                log: Vec::new(),
            }),
            commit_lock: Mutex::new(()),
            next_id: AtomicU64::new(1),
            next_token: AtomicU64::new(1),
            mode,
            audit: None,
            journal_file: None,
        }
    }

    pub fn simulation() -> Self {
        Self::new(StoreMode::Simulation)
    }

    /// Enables post hoc admissibility auditing of every snapshot built by a
    /// unit of work over this store.
    pub fn with_audit(mut self) -> Self {
        self.audit = Some(Mutex::new(AuditLog::default()));
        self
    }

    /// Appends one journal line per commit to `path`.
    pub fn with_journal_file(mut self, path: impl AsRef<Path>) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.journal_file = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner<A>> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Inner<A>> {
        self.inner.write().unwrap_or_else(|e| e.into_inner())
    }

    pub(crate) fn new_token(&self) -> UowToken {
        UowToken(self.next_token.fetch_add(1, Ordering::Relaxed))
    }

    pub fn allocate_id(&self) -> AggregateId {
        AggregateId(self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    /// Version of the most recent committed functionality, as seen by units
    /// of work starting now. `ZERO` on a fresh store.
    pub fn current_version(&self) -> VersionNumber {
        self.read().counter
    }

    /// Highest of the counter and of any committed version.
    pub fn head_version(&self) -> VersionNumber {
        self.read().head()
    }

    /// Shifts the last-committed counter. Simulation mode only.
    pub fn adjust_version(&self, delta: i64) -> Result<VersionNumber> {
        if self.mode != StoreMode::Simulation {
            return Err(Error::AdjustDisabled);
        }
        let _commit = self.lock_commit();
        let mut inner = self.write();
        let current = inner.counter;
        let shifted = i128::from(current.0) + i128::from(delta);
        let value = u64::try_from(shifted).map_err(|_| Error::Underflow { current, delta })?;
        inner.counter = VersionNumber(value);
        Ok(inner.counter)
    }

    /// The committed version of `id` with the greatest version strictly below
    /// `bound`.
    pub fn latest_before(&self, id: AggregateId, bound: VersionNumber) -> Result<Arc<VersionedRecord<A>>> {
        let inner = self.read();
        let record = inner
            .records
            .get(&id)
            .and_then(|versions| versions.iter().rev().find(|r| r.version < bound))
            .ok_or(Error::NotFound(id))?;
        if record.state == LifecycleState::Deleted {
            return Err(Error::Deleted(id));
        }
        Ok(Arc::clone(record))
    }

    /// All committed versions of `id`, ascending. Empty for unknown ids.
    pub fn versions_of(&self, id: AggregateId) -> Vec<Arc<VersionedRecord<A>>> {
        self.read().records.get(&id).cloned().unwrap_or_default()
    }

    pub fn latest(&self, id: AggregateId) -> Option<Arc<VersionedRecord<A>>> {
        self.read().records.get(&id).and_then(|v| v.last().cloned())
    }

    /// Latest versions of several aggregates, read under one lock.
    pub fn latest_many(&self, ids: &[AggregateId]) -> Vec<Option<Arc<VersionedRecord<A>>>> {
        let inner = self.read();
        ids.iter()
            .map(|id| inner.records.get(id).and_then(|v| v.last().cloned()))
            .collect()
    }

    pub fn aggregate_ids(&self) -> Vec<AggregateId> {
        self.read().records.keys().copied().collect()
    }

    /// Every committed event, in commit order.
    pub fn events(&self) -> Vec<Event<A::Event>> {
        self.read().events.clone()
    }

    /// Committed events whose sender version is below `bound`.
    pub fn events_below(&self, bound: VersionNumber) -> Vec<Event<A::Event>> {
        self.read()
            .events
            .iter()
            .filter(|e| e.sender_version < bound)
            .cloned()
            .collect()
    }

    pub fn journal(&self) -> Vec<CommitEntry> {
        self.read().log.clone()
    }

    pub fn journal_text(&self) -> String {
        self.read().log.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn audit_enabled(&self) -> bool {
        self.audit.is_some()
    }

    pub fn audit_log(&self) -> Option<AuditLog> {
        self.audit
            .as_ref()
            .map(|a| a.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }

    pub(crate) fn with_audit_log(&self, f: impl FnOnce(&mut AuditLog)) {
        if let Some(audit) = &self.audit {
            f(&mut audit.lock().unwrap_or_else(|e| e.into_inner()));
        }
    }

    fn lock_commit(&self) -> MutexGuard<'_, ()> {
        self.commit_lock.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Enters the commit critical section. Only one guard exists at a time.
    pub fn begin_commit(&self) -> CommitGuard<'_, A> {
        CommitGuard {
            store: self,
            _lock: self.lock_commit(),
        }
    }

    /// Commits `records` and `events` atomically under a fresh version
    /// computed inside the critical section. An empty record set is a no-op
    /// and returns the unchanged counter.
    pub fn commit_atomic(
        &self,
        functionality: &str,
        records: Vec<RecordWrite<A>>,
        events: Vec<(AggregateId, A::Event)>,
    ) -> VersionNumber {
        self.begin_commit().commit(functionality, records, events)
    }
}

/// Exclusive access to the commit critical section.
pub struct CommitGuard<'s, A: Aggregate> {
    store: &'s VersionStore<A>,
    _lock: MutexGuard<'s, ()>,
}

impl<A: Aggregate> CommitGuard<'_, A> {
    /// Version of the latest committed record of `id`, if any.
    pub fn latest_version(&self, id: AggregateId) -> Option<VersionNumber> {
        self.store.latest(id).map(|r| r.version)
    }

    /// Version the next commit will receive.
    pub fn next_version(&self) -> VersionNumber {
        self.store.head_version().next()
    }

    pub fn commit(
        self,
        functionality: &str,
        records: Vec<RecordWrite<A>>,
        events: Vec<(AggregateId, A::Event)>,
    ) -> VersionNumber {
        if records.is_empty() {
            debug_assert!(events.is_empty(), "events need a written sender");
            return self.store.current_version();
        }
        let kind = if records.len() == 1 {
            FunctionalityKind::Simple
        } else {
            FunctionalityKind::Complex
        };
        let mut inner = self.store.write();
        let version = inner.head().next();

        let mut events: Vec<Event<A::Event>> = events
            .into_iter()
            .map(|(sender, body)| Event {
                sender,
                sender_version: version,
                body,
            })
            .collect();
        events.sort_by_key(|e| (e.sender, e.kind()));

        let mut aggregates = Vec::with_capacity(records.len());
        for write in records {
            debug_assert!(write.prev_version.is_none_or(|p| p < version));
            let emitted_events = events
                .iter()
                .filter(|e| e.sender == write.aggregate_id)
                .cloned()
                .collect();
            aggregates.push(write.aggregate_id);
            let record = Arc::new(VersionedRecord {
                aggregate_id: write.aggregate_id,
                version,
                prev_version: write.prev_version,
                state: write.state,
                payload: write.payload,
                emitted_events,
            });
            inner.records.entry(write.aggregate_id).or_default().push(record);
        }
        aggregates.sort();

        let entry = CommitEntry {
            version,
            functionality: functionality.to_owned(),
            kind,
            aggregates,
            event_types: events.iter().map(|e| e.kind().to_string()).collect(),
        };
        inner.events.extend(events);
        inner.counter = version;
        inner.max_committed = version;
        inner.log.push(entry.clone());
        drop(inner);

        if let Some(journal) = &self.store.journal_file {
            let mut out = journal.lock().unwrap_or_else(|e| e.into_inner());
            // Journal output is for inspection only; a failed write must not
            // undo a commit that is already visible.
            let _ = writeln!(out, "{entry}").and_then(|_| out.flush());
        }
        version
    }
}
