//! Causal transactions.
//!
//! A [`UnitOfWork`] executes one functionality. It starts at the version
//! after the last committed one and reads, for each aggregate, the newest
//! committed version below its own version that is consistent with the events
//! already reflected in the snapshot. Writes go to detached working copies.
//!
//! Commit runs four steps: verify intra-invariants of every written copy;
//! find, per written aggregate, a version committed concurrently since the
//! copy was read; merge it and re-verify; finally, inside the store's
//! critical section, take the next version number and publish all written
//! versions and emitted events together. Any failure aborts the whole unit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::aggregate::{clone_for_write, verify_intra_invariants, Aggregate, UowToken, WorkingCopy};
use crate::error::{Error, Result};
use crate::events::admissible::audit_snapshot;
use crate::events::snapshot_admissible;
use crate::ids::{AggregateId, LifecycleState, VersionNumber};
use crate::merge::{merge_versions, MergeError};
use crate::store::{FunctionalityKind, RecordWrite, VersionStore, VersionedRecord};

/// Merge rounds attempted when other commits keep landing between a merge
/// and the critical section.
pub const MAX_MERGE_ROUNDS: usize = 3;

struct SnapshotEntry<A: Aggregate> {
    base: Option<Arc<VersionedRecord<A>>>,
    copy: WorkingCopy<A>,
}

pub struct UnitOfWork<A: Aggregate> {
    store: Arc<VersionStore<A>>,
    token: UowToken,
    functionality: String,
    version: VersionNumber,
    snapshot: BTreeMap<AggregateId, SnapshotEntry<A>>,
    changed: BTreeSet<AggregateId>,
    pending_events: Vec<(AggregateId, A::Event)>,
}

impl<A: Aggregate> fmt::Debug for UnitOfWork<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitOfWork")
            .field("functionality", &self.functionality)
            .field("version", &self.version)
            .field("snapshot", &self.snapshot.keys().collect::<Vec<_>>())
            .field("changed", &self.changed)
            .finish_non_exhaustive()
    }
}

impl<A: Aggregate> UnitOfWork<A> {
    /// Starts a functionality at `current_version() + 1`.
    pub fn begin(store: &Arc<VersionStore<A>>, functionality: &str) -> Self {
        let version = store.current_version().next();
        Self::at(store, functionality, version)
    }

    /// Starts at the version after everything committed so far, ignoring any
    /// counter adjustment. Used by event handlers, which act on the latest
    /// subscriber version.
    pub fn begin_at_head(store: &Arc<VersionStore<A>>, functionality: &str) -> Self {
        let version = store.head_version().next();
        Self::at(store, functionality, version)
    }

    fn at(store: &Arc<VersionStore<A>>, functionality: &str, version: VersionNumber) -> Self {
        UnitOfWork {
            store: Arc::clone(store),
            token: store.new_token(),
            functionality: functionality.to_owned(),
            version,
            snapshot: BTreeMap::new(),
            changed: BTreeSet::new(),
            pending_events: Vec::new(),
        }
    }

    pub fn version(&self) -> VersionNumber {
        self.version
    }

    pub fn functionality(&self) -> &str {
        &self.functionality
    }

    pub fn store(&self) -> &Arc<VersionStore<A>> {
        &self.store
    }

    /// Classification by write footprint.
    pub fn kind(&self) -> FunctionalityKind {
        match self.changed.len() {
            0 => FunctionalityKind::Query,
            1 => FunctionalityKind::Simple,
            _ => FunctionalityKind::Complex,
        }
    }

    pub fn changed(&self) -> impl Iterator<Item = AggregateId> + '_ {
        self.changed.iter().copied()
    }

    /// Committed version each snapshot member was read from; `None` for
    /// aggregates created by this unit of work.
    pub fn snapshot_versions(&self) -> Vec<(AggregateId, Option<VersionNumber>)> {
        self.snapshot
            .iter()
            .map(|(id, e)| (*id, e.base.as_ref().map(|b| b.version)))
            .collect()
    }

    /// Returns this unit's working copy of `id`, adding a causally
    /// consistent version to the snapshot on first access.
    ///
    /// The newest version below the unit's version is preferred. If it is
    /// not admissible next to the current snapshot members, older versions
    /// are tried in turn.
    pub fn read(&mut self, id: AggregateId) -> Result<WorkingCopy<A>> {
        if let Some(entry) = self.snapshot.get(&id) {
            return Ok(entry.copy.clone());
        }
        let candidates: Vec<_> = self
            .store
            .versions_of(id)
            .into_iter()
            .rev()
            .filter(|r| r.version < self.version)
            .collect();
        let newest = candidates.first().ok_or(Error::NotFound(id))?;
        if newest.state == LifecycleState::Deleted {
            return Err(Error::Deleted(id));
        }
        let events = self.store.events_below(self.version);
        let members: Vec<&VersionedRecord<A>> = self.snapshot.values().filter_map(|e| e.base.as_deref()).collect();
        let chosen = candidates
            .iter()
            .find(|c| snapshot_admissible(c, &members, &events))
            .cloned()
            .ok_or(Error::CausalInconsistency(id))?;
        let copy = clone_for_write(&chosen, self.token);
        self.snapshot.insert(
            id,
            SnapshotEntry {
                base: Some(chosen),
                copy: copy.clone(),
            },
        );
        Ok(copy)
    }

    /// Marks `copy` as written, replacing the snapshot's working copy.
    pub fn register_changed(&mut self, copy: WorkingCopy<A>) -> Result<()> {
        let id = copy.aggregate_id;
        if copy.owner != self.token {
            return Err(Error::ForeignCopy(id));
        }
        let entry = self.snapshot.get_mut(&id).ok_or(Error::ForeignCopy(id))?;
        entry.copy = copy;
        self.changed.insert(id);
        Ok(())
    }

    /// Creates a new aggregate. It receives the commit's version and becomes
    /// visible only if the unit commits.
    pub fn register_new(&mut self, payload: A) -> WorkingCopy<A> {
        let id = self.store.allocate_id();
        let copy = WorkingCopy {
            owner: self.token,
            aggregate_id: id,
            prev: None,
            state: LifecycleState::Active,
            payload,
        };
        self.snapshot.insert(
            id,
            SnapshotEntry {
                base: None,
                copy: copy.clone(),
            },
        );
        self.changed.insert(id);
        copy
    }

    /// Queues an event emitted by `sender`, which must be written by this
    /// unit. It is published with the commit's version.
    pub fn emit(&mut self, sender: AggregateId, event: A::Event) -> Result<()> {
        if !self.changed.contains(&sender) {
            return Err(Error::State(format!(
                "aggregate {sender} emits an event but is not written by {}",
                self.functionality
            )));
        }
        self.pending_events.push((sender, event));
        Ok(())
    }

    /// Discards every working copy and pending event.
    pub fn abort(self) {}

    /// Runs the commit protocol and returns the version the writes received.
    /// A unit without writes commits trivially and returns the current
    /// version.
    pub fn commit(mut self) -> Result<VersionNumber> {
        if self.changed.is_empty() {
            return Ok(self.store.current_version());
        }
        for id in &self.changed {
            self.check_invariants(*id)?;
        }
        let mut racing = None;
        for _ in 0..=MAX_MERGE_ROUNDS {
            self.merge_concurrent()?;
            let guard = self.store.begin_commit();
            racing = self
                .changed
                .iter()
                .copied()
                .find(|id| guard.latest_version(*id) != self.snapshot[id].copy.prev);
            if racing.is_none() {
                let writes = self
                    .changed
                    .iter()
                    .map(|id| {
                        let copy = &self.snapshot[id].copy;
                        RecordWrite {
                            aggregate_id: *id,
                            prev_version: copy.prev,
                            state: copy.state,
                            payload: copy.payload.clone(),
                        }
                    })
                    .collect();
                let events = std::mem::take(&mut self.pending_events);
                return Ok(guard.commit(&self.functionality, writes, events));
            }
        }
        Err(Error::AggregateMergeFailure {
            aggregate: racing.expect("loop exits early on success"),
            reason: MergeError::RetryExhausted(MAX_MERGE_ROUNDS),
        })
    }

    fn check_invariants(&self, id: AggregateId) -> Result<()> {
        let violated = verify_intra_invariants(&self.snapshot[&id].copy.payload);
        if violated.is_empty() {
            Ok(())
        } else {
            Err(Error::InvariantBreak {
                aggregate: id,
                invariants: violated,
            })
        }
    }

    /// Merges every written copy whose aggregate gained a committed version
    /// after the copy's `prev`.
    fn merge_concurrent(&mut self) -> Result<()> {
        let ids: Vec<_> = self.changed.iter().copied().collect();
        for id in ids {
            let Some(prev) = self.snapshot[&id].copy.prev else {
                continue;
            };
            let versions = self.store.versions_of(id);
            let latest = versions.last().expect("copy was read from a committed version");
            if latest.version <= prev {
                continue;
            }
            if latest.state == LifecycleState::Deleted {
                return Err(Error::Deleted(id));
            }
            let ancestor = versions
                .iter()
                .find(|r| r.version == prev)
                .expect("prev designates a committed version");
            let fail = |reason| Error::AggregateMergeFailure { aggregate: id, reason };

            let copy = &mut self
                .snapshot
                .get_mut(&id)
                .expect("changed ids are in the snapshot")
                .copy;
            let outcome = merge_versions(&copy.payload, &ancestor.payload, &latest.payload).map_err(fail)?;
            let state = match (copy.state != ancestor.state, latest.state != ancestor.state) {
                (true, true) if copy.state != latest.state => return Err(fail(MergeError::StateConflict)),
                (true, _) => copy.state,
                _ => latest.state,
            };
            copy.payload = outcome.merged;
            copy.state = state;
            copy.prev = Some(latest.version);
            self.check_invariants(id)?;
        }
        Ok(())
    }
}

impl<A: Aggregate> Drop for UnitOfWork<A> {
    fn drop(&mut self) {
        if !self.store.audit_enabled() {
            return;
        }
        let members: Vec<&VersionedRecord<A>> = self.snapshot.values().filter_map(|e| e.base.as_deref()).collect();
        let events = self.store.events_below(self.version);
        let violations = audit_snapshot(&self.functionality, &members, &events);
        self.store.with_audit_log(|log| {
            log.snapshots_checked += 1;
            log.violations.extend(violations);
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::MergeError;
    use crate::store::StoreMode;
    use crate::testkit::{Counter, A, B};

    fn store() -> Arc<VersionStore<Counter>> {
        Arc::new(VersionStore::new(StoreMode::Simulation))
    }

    fn create(store: &Arc<VersionStore<Counter>>, values: [i64; 4]) -> AggregateId {
        let mut uow = UnitOfWork::begin(store, "create");
        let id = uow.register_new(Counter::new(values)).aggregate_id();
        uow.commit().unwrap();
        id
    }

    fn update(
        store: &Arc<VersionStore<Counter>>,
        id: AggregateId,
        f: impl FnOnce(&mut Counter),
    ) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(store, "update");
        let mut copy = uow.read(id)?;
        f(copy.payload_mut());
        uow.register_changed(copy)?;
        uow.commit()
    }

    #[test]
    fn begin_takes_next_version() {
        let s = store();
        assert_eq!(UnitOfWork::begin(&s, "q").version(), VersionNumber(1));
        for _ in 0..7 {
            create(&s, [0; 4]);
        }
        assert_eq!(UnitOfWork::begin(&s, "q").version(), VersionNumber(8));
        s.adjust_version(-1).unwrap();
        assert_eq!(UnitOfWork::begin(&s, "q").version(), VersionNumber(7));
    }

    #[test]
    fn read_selects_latest_below_own_version() {
        let s = store();
        let id = create(&s, [0, 1, 0, 0]);
        for _ in 0..3 {
            create(&s, [0; 4]);
        }
        update(&s, id, |c| c.values[1] = 5).unwrap(); // versions {1, 5}
        s.adjust_version(-1).unwrap();
        let mut uow = UnitOfWork::begin(&s, "r");
        assert_eq!(uow.version(), VersionNumber(5));
        let copy = uow.read(id).unwrap();
        assert_eq!(copy.prev(), Some(VersionNumber(1)));
        assert_eq!(uow.read(id).unwrap(), copy);
        assert_eq!(uow.read(AggregateId(99)), Err(Error::NotFound(AggregateId(99))));
    }

    #[test]
    fn register_changed_is_idempotent_and_confined() {
        let s = store();
        let id = create(&s, [0, 1, 0, 0]);
        let mut uow = UnitOfWork::begin(&s, "u");
        let copy = uow.read(id).unwrap();
        uow.register_changed(copy.clone()).unwrap();
        uow.register_changed(copy).unwrap();
        assert_eq!(uow.changed().collect::<Vec<_>>(), vec![id]);

        let mut other = UnitOfWork::begin(&s, "o");
        let foreign = other.read(id).unwrap();
        assert_eq!(uow.register_changed(foreign), Err(Error::ForeignCopy(id)));
    }

    #[test]
    fn creates_share_commit_version_and_vanish_on_abort() {
        let s = store();
        let mut uow = UnitOfWork::begin(&s, "two");
        let a = uow.register_new(Counter::new([0; 4])).aggregate_id();
        let b = uow.register_new(Counter::new([1, 1, 0, 0])).aggregate_id();
        assert_eq!(uow.kind(), FunctionalityKind::Complex);
        let v = uow.commit().unwrap();
        assert_eq!(s.latest(a).unwrap().version, v);
        assert_eq!(s.latest(b).unwrap().version, v);

        let mut uow = UnitOfWork::begin(&s, "gone");
        let c = uow.register_new(Counter::new([0; 4])).aggregate_id();
        uow.abort();
        assert!(s.versions_of(c).is_empty());
        assert_eq!(s.current_version(), v);
    }

    #[test]
    fn invariant_break_aborts_everything() {
        let s = store();
        let id = create(&s, [0, 1, 0, 0]);
        let other = create(&s, [0, 1, 0, 0]);
        let mut uow = UnitOfWork::begin(&s, "bad");
        let mut ok = uow.read(other).unwrap();
        ok.payload_mut().values[2] = 3;
        uow.register_changed(ok).unwrap();
        let mut bad = uow.read(id).unwrap();
        bad.payload_mut().values[0] = 9;
        uow.register_changed(bad).unwrap();
        let err = uow.commit().unwrap_err();
        assert_eq!(
            err,
            Error::InvariantBreak {
                aggregate: id,
                invariants: vec!["A_LE_B"]
            }
        );
        assert_eq!(s.versions_of(other).len(), 1);
    }

    #[test]
    fn sequential_updates_do_not_merge() {
        let s = store();
        let a = create(&s, [0, 1, 0, 0]);
        let b = create(&s, [0, 1, 0, 0]);
        let v1 = update(&s, a, |c| c.values[2] = 1).unwrap();
        let v2 = update(&s, b, |c| c.values[2] = 1).unwrap();
        assert_eq!(v2, v1.next());
    }

    #[test]
    fn concurrent_update_merges_against_common_ancestor() {
        let s = store();
        let id = create(&s, [0, 10, 100, 0]);
        // Two concurrent functionalities both started after version 1.
        let mut first = UnitOfWork::begin(&s, "first");
        let mut second = UnitOfWork::begin(&s, "second");
        let mut c1 = first.read(id).unwrap();
        c1.payload_mut().values[2] += 5;
        first.register_changed(c1).unwrap();
        let mut c2 = second.read(id).unwrap();
        c2.payload_mut().values[2] += 7;
        c2.payload_mut().values[1] = 20;
        second.register_changed(c2).unwrap();
        assert_eq!(first.commit(), Ok(VersionNumber(2)));
        assert_eq!(second.commit(), Ok(VersionNumber(3)));
        let latest = s.latest(id).unwrap();
        assert_eq!(latest.payload.values, [0, 20, 112, 0]);
        assert_eq!(latest.prev_version, Some(VersionNumber(2)));
    }

    #[test]
    fn intention_conflict_aborts_atomically() {
        let s = store();
        let id = create(&s, [0, 10, 0, 0]);
        let mut first = UnitOfWork::begin(&s, "start");
        let mut second = UnitOfWork::begin(&s, "end");
        let mut c1 = first.read(id).unwrap();
        c1.payload_mut().values[0] = 1;
        first.register_changed(c1).unwrap();
        let mut c2 = second.read(id).unwrap();
        c2.payload_mut().values[1] = 11;
        second.register_changed(c2).unwrap();
        first.commit().unwrap();
        let before = s.journal().len();
        let err = second.commit().unwrap_err();
        match err {
            Error::AggregateMergeFailure {
                reason: MergeError::Intention(c),
                ..
            } => assert_eq!((c.ours, c.theirs), (B, A)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.journal().len(), before);
    }

    #[test]
    fn merged_copy_is_rechecked_against_invariants() {
        let s = store();
        let id = create(&s, [0, 10, 0, 0]);
        let mut first = UnitOfWork::begin(&s, "raise-a");
        let mut second = UnitOfWork::begin(&s, "lower-b");
        // Both sides touch the whole {a, b} intention, so no intention
        // conflict; last writer wins on both, yielding a valid result.
        let mut c1 = first.read(id).unwrap();
        c1.payload_mut().values[0] = 8;
        c1.payload_mut().values[1] = 9;
        first.register_changed(c1).unwrap();
        let mut c2 = second.read(id).unwrap();
        c2.payload_mut().values[0] = 1;
        c2.payload_mut().values[1] = 2;
        second.register_changed(c2).unwrap();
        first.commit().unwrap();
        second.commit().unwrap();
        assert_eq!(s.latest(id).unwrap().payload.values[..2], [1, 2]);
    }

    #[test]
    fn query_commit_writes_nothing() {
        let s = store();
        let id = create(&s, [0, 1, 0, 0]);
        let mut q = UnitOfWork::begin(&s, "q");
        q.read(id).unwrap();
        assert_eq!(q.kind(), FunctionalityKind::Query);
        assert_eq!(q.commit(), Ok(VersionNumber(1)));
        assert_eq!(s.journal().len(), 1);
    }

    #[test]
    fn deleted_versions_are_signalled() {
        let s = store();
        let id = create(&s, [0, 1, 0, 0]);
        let mut uow = UnitOfWork::begin(&s, "delete");
        let mut copy = uow.read(id).unwrap();
        copy.set_state(LifecycleState::Deleted);
        uow.register_changed(copy).unwrap();
        uow.commit().unwrap();
        let mut uow = UnitOfWork::begin(&s, "read");
        assert_eq!(uow.read(id), Err(Error::Deleted(id)));
    }
}
