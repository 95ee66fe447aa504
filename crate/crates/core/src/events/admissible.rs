//! Event-consistency conditions on causal snapshots.
//!
//! Two conditions are checked for every pair of aggregate versions in a
//! snapshot:
//!
//! * **Common events.** For an event both versions subscribe to (same sender
//!   and type, and both filters accept it), either both still have it pending
//!   or both have processed it.
//! * **Upstream events.** Every event emitted by one version of the pair, up
//!   to that version, has been processed by the other if it subscribes to it.
//!
//! Only events below the snapshot's version bound are considered; later ones
//! were committed concurrently and are not causally visible.

use std::fmt;

use crate::aggregate::{build_subscriptions, Aggregate};
use crate::events::{matches, Event, EventSubscription};
use crate::ids::{AggregateId, VersionNumber};
use crate::store::VersionedRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotCondition {
    CommonEvents,
    UpstreamEvents,
}

impl fmt::Display for SnapshotCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SnapshotCondition::CommonEvents => "common-events",
            SnapshotCondition::UpstreamEvents => "upstream-events",
        })
    }
}

/// A pair of snapshot members that broke a condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditViolation {
    pub functionality: String,
    pub condition: SnapshotCondition,
    pub first: (AggregateId, VersionNumber),
    pub second: (AggregateId, VersionNumber),
    pub event: (AggregateId, VersionNumber, String),
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} between {}@{} and {}@{} on {}@{} {}",
            self.functionality,
            self.condition,
            self.first.0,
            self.first.1,
            self.second.0,
            self.second.1,
            self.event.0,
            self.event.1,
            self.event.2
        )
    }
}

/// Results of auditing every snapshot built while auditing was on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditLog {
    pub snapshots_checked: usize,
    pub violations: Vec<AuditViolation>,
}

struct Member<'r, A: Aggregate> {
    record: &'r VersionedRecord<A>,
    subscriptions: Vec<EventSubscription<A>>,
}

impl<'r, A: Aggregate> Member<'r, A> {
    fn new(record: &'r VersionedRecord<A>) -> Self {
        Member {
            record,
            subscriptions: build_subscriptions(record.aggregate_id, record.state, &record.payload),
        }
    }

    fn relevant(&self, e: &Event<A::Event>) -> bool {
        self.subscriptions.iter().any(|s| s.relevant(e, &self.record.payload))
    }

    fn subscribes(&self, e: &Event<A::Event>) -> bool {
        self.subscriptions.iter().any(|s| matches(s, e, &self.record.payload))
    }

    fn emitted(&self, e: &Event<A::Event>) -> bool {
        e.sender == self.record.aggregate_id && e.sender_version <= self.record.version
    }
}

/// First condition broken by the pair `(x, y)`, with the offending event.
pub(crate) fn check_pair<'e, A: Aggregate>(
    x: &VersionedRecord<A>,
    y: &VersionedRecord<A>,
    events: &'e [Event<A::Event>],
) -> Option<(SnapshotCondition, &'e Event<A::Event>)> {
    let x = Member::new(x);
    let y = Member::new(y);
    for e in events {
        if x.relevant(e) && y.relevant(e) && x.subscribes(e) != y.subscribes(e) {
            return Some((SnapshotCondition::CommonEvents, e));
        }
        if (x.emitted(e) && y.subscribes(e)) || (y.emitted(e) && x.subscribes(e)) {
            return Some((SnapshotCondition::UpstreamEvents, e));
        }
    }
    None
}

/// Can `candidate` join a snapshot already holding `members`, given the
/// causally visible `events`?
pub fn snapshot_admissible<A: Aggregate>(
    candidate: &VersionedRecord<A>,
    members: &[&VersionedRecord<A>],
    events: &[Event<A::Event>],
) -> bool {
    members.iter().all(|m| check_pair(candidate, m, events).is_none())
}

/// Re-validates a whole snapshot pairwise.
pub(crate) fn audit_snapshot<A: Aggregate>(
    functionality: &str,
    members: &[&VersionedRecord<A>],
    events: &[Event<A::Event>],
) -> Vec<AuditViolation> {
    let mut out = Vec::new();
    for (i, x) in members.iter().enumerate() {
        for y in &members[i + 1..] {
            if let Some((condition, e)) = check_pair(x, y, events) {
                out.push(AuditViolation {
                    functionality: functionality.to_owned(),
                    condition,
                    first: (x.aggregate_id, x.version),
                    second: (y.aggregate_id, y.version),
                    event: (e.sender, e.sender_version, e.kind().to_string()),
                });
            }
        }
    }
    out
}
