//! The aggregate contract every domain aggregate implements.
//!
//! A contract is split in two halves. [`AggregateContract`] is static data:
//! the attribute names, which of them functionalities may change, the
//! intentions (attribute groups that must not be changed disjointly by
//! concurrent functionalities), the merge rule for each changeable attribute
//! and the names of the intra-invariants. The [`Aggregate`] trait supplies the
//! behaviour behind those names: invariant predicates, per-attribute
//! comparison and copy, custom merge hooks, event subscriptions and event
//! appliers.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::error::Error;
use crate::events::{DomainEvent, Event, EventSubscription};
use crate::ids::{AggregateId, LifecycleState, VersionNumber};
use crate::store::VersionedRecord;

/// Name of a top-level aggregate attribute, e.g. `startTime`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeName(pub &'static str);

impl AttributeName {
    pub fn as_str(self) -> &'static str {
        self.0
    }
}

impl fmt::Debug for AttributeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

impl fmt::Display for AttributeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

/// How an attribute changed by both the committing and an already committed
/// version is reconciled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeRule {
    /// The version being committed overwrites the committed value.
    LastWriterWins,
    /// The committed value is kept.
    KeepCommitted,
    /// Delegates to [`Aggregate::merge_attribute`].
    Custom,
    /// Concurrent changes of this attribute cannot be merged.
    NonMergeable,
}

/// Marker returned by a merge hook that refuses to reconcile two values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("attribute is not mergeable")]
pub struct NonMergeable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("{aggregate}: changeable field `{attribute}` is not a declared attribute")]
    UndeclaredChangeable {
        aggregate: &'static str,
        attribute: AttributeName,
    },
    #[error("{aggregate}: intention attribute `{attribute}` is not changeable")]
    IntentionNotChangeable {
        aggregate: &'static str,
        attribute: AttributeName,
    },
    #[error("{aggregate}: merge hook for `{attribute}`, which is not changeable")]
    HookNotChangeable {
        aggregate: &'static str,
        attribute: AttributeName,
    },
    #[error("{aggregate}: duplicate declaration of `{name}`")]
    Duplicate {
        aggregate: &'static str,
        name: &'static str,
    },
}

/// Static part of an aggregate type's contract.
#[derive(Debug)]
pub struct AggregateContract {
    pub type_name: &'static str,
    pub attributes: &'static [AttributeName],
    pub changeable_fields: &'static [AttributeName],
    pub intentions: &'static [&'static [AttributeName]],
    pub merge_hooks: &'static [(AttributeName, MergeRule)],
    pub intra_invariants: &'static [&'static str],
}

impl AggregateContract {
    pub fn is_changeable(&self, attribute: AttributeName) -> bool {
        self.changeable_fields.contains(&attribute)
    }

    pub fn merge_rule(&self, attribute: AttributeName) -> Option<MergeRule> {
        self.merge_hooks
            .iter()
            .find(|(name, _)| *name == attribute)
            .map(|(_, rule)| *rule)
    }

    pub fn intention_sets(&self) -> Vec<BTreeSet<AttributeName>> {
        self.intentions.iter().map(|i| i.iter().copied().collect()).collect()
    }

    /// Checks the declaration rules: changeable fields are attributes, and
    /// intentions and merge hooks only name changeable fields.
    pub fn validate(&self) -> Result<(), ContractError> {
        let aggregate = self.type_name;
        let mut seen = BTreeSet::new();
        for a in self.attributes {
            if !seen.insert(a.0) {
                return Err(ContractError::Duplicate { aggregate, name: a.0 });
            }
        }
        for &attribute in self.changeable_fields {
            if !self.attributes.contains(&attribute) {
                return Err(ContractError::UndeclaredChangeable { aggregate, attribute });
            }
        }
        for intention in self.intentions {
            for &attribute in *intention {
                if !self.is_changeable(attribute) {
                    return Err(ContractError::IntentionNotChangeable { aggregate, attribute });
                }
            }
        }
        let mut hooked = BTreeSet::new();
        for &(attribute, _) in self.merge_hooks {
            if !self.is_changeable(attribute) {
                return Err(ContractError::HookNotChangeable { aggregate, attribute });
            }
            if !hooked.insert(attribute) {
                return Err(ContractError::Duplicate {
                    aggregate,
                    name: attribute.0,
                });
            }
        }
        let mut names = BTreeSet::new();
        for name in self.intra_invariants {
            if !names.insert(*name) {
                return Err(ContractError::Duplicate { aggregate, name });
            }
        }
        Ok(())
    }
}

/// Behaviour behind an [`AggregateContract`].
///
/// Implementors are plain values: a payload is a full, self-contained copy of
/// the aggregate and never holds references into another aggregate, only
/// identifiers plus copied attributes.
pub trait Aggregate: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    type Event: DomainEvent;

    fn contract(&self) -> &'static AggregateContract;

    /// Evaluates the intra-invariant named `name`. Must be pure.
    fn check_invariant(&self, name: &str) -> bool;

    /// Deep equality of one attribute. Collections compare as whole values.
    fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool;

    /// Overwrites one attribute of `self` with the value held by `source`.
    fn copy_attribute(&mut self, source: &Self, attribute: AttributeName);

    /// Hook for [`MergeRule::Custom`] attributes. `self` starts as the
    /// committed payload; the hook may only touch `attribute`.
    fn merge_attribute(
        &mut self,
        attribute: AttributeName,
        to_commit: &Self,
        committed: &Self,
        ancestor: &Self,
    ) -> Result<(), NonMergeable> {
        let _ = (attribute, to_commit, committed, ancestor);
        Err(NonMergeable)
    }

    /// Subscriptions derived from the payload. Only consulted for `ACTIVE`
    /// versions, see [`build_subscriptions`].
    fn subscriptions(&self, own_id: AggregateId) -> Vec<EventSubscription<Self>> {
        let _ = own_id;
        Vec::new()
    }

    /// Event applier run by the event processor inside its own unit of work.
    fn apply_event(&mut self, event: &Event<Self::Event>) -> Result<(), Error> {
        let _ = event;
        Ok(())
    }

    /// Records that every event of `sender` up to `version` has been
    /// processed by this aggregate.
    fn observe_sender_version(&mut self, sender: AggregateId, version: VersionNumber) {
        let _ = (sender, version);
    }
}

/// Returns the names of the intra-invariants `payload` violates, in
/// declaration order. Empty means the payload is valid.
pub fn verify_intra_invariants<A: Aggregate>(payload: &A) -> Vec<&'static str> {
    payload
        .contract()
        .intra_invariants
        .iter()
        .copied()
        .filter(|name| !payload.check_invariant(name))
        .collect()
}

/// Subscriptions of an aggregate version; empty unless the version is active.
pub fn build_subscriptions<A: Aggregate>(
    id: AggregateId,
    state: LifecycleState,
    payload: &A,
) -> Vec<EventSubscription<A>> {
    if state != LifecycleState::Active {
        return Vec::new();
    }
    payload.subscriptions(id)
}

/// Identifies the unit of work that owns a working copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UowToken(pub(crate) u64);

/// A detached, mutable copy of an aggregate version, confined to one unit of
/// work. Its `prev` designates the committed version it evolved from.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingCopy<A> {
    pub(crate) owner: UowToken,
    pub(crate) aggregate_id: AggregateId,
    pub(crate) prev: Option<VersionNumber>,
    pub(crate) state: LifecycleState,
    pub(crate) payload: A,
}

impl<A: Aggregate> WorkingCopy<A> {
    pub fn aggregate_id(&self) -> AggregateId {
        self.aggregate_id
    }

    pub fn prev(&self) -> Option<VersionNumber> {
        self.prev
    }

    pub fn state(&self) -> LifecycleState {
        self.state
    }

    pub fn set_state(&mut self, state: LifecycleState) {
        self.state = state;
    }

    pub fn payload(&self) -> &A {
        &self.payload
    }

    pub fn payload_mut(&mut self) -> &mut A {
        &mut self.payload
    }

    pub fn owner(&self) -> UowToken {
        self.owner
    }
}

/// Deep-copies a committed record into a working copy owned by `owner`.
pub fn clone_for_write<A: Aggregate>(record: &VersionedRecord<A>, owner: UowToken) -> WorkingCopy<A> {
    WorkingCopy {
        owner,
        aggregate_id: record.aggregate_id,
        prev: Some(record.version),
        state: record.state,
        payload: record.payload.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{Counter, COUNTER};

    #[test]
    fn contract_validation_catches_undeclared_names() {
        assert_eq!(COUNTER.validate(), Ok(()));

        static BAD: AggregateContract = AggregateContract {
            type_name: "Bad",
            attributes: &[AttributeName("a")],
            changeable_fields: &[AttributeName("a")],
            intentions: &[&[AttributeName("a"), AttributeName("b")]],
            merge_hooks: &[],
            intra_invariants: &[],
        };
        assert!(matches!(
            BAD.validate(),
            Err(ContractError::IntentionNotChangeable { .. })
        ));

        static BAD_HOOK: AggregateContract = AggregateContract {
            type_name: "BadHook",
            attributes: &[AttributeName("a"), AttributeName("b")],
            changeable_fields: &[AttributeName("a")],
            intentions: &[],
            merge_hooks: &[(AttributeName("b"), MergeRule::LastWriterWins)],
            intra_invariants: &[],
        };
        assert!(matches!(
            BAD_HOOK.validate(),
            Err(ContractError::HookNotChangeable { .. })
        ));
    }

    #[test]
    fn invariants_report_violations_by_name() {
        let ok = Counter::new([1, 2, 3, 4]);
        assert!(verify_intra_invariants(&ok).is_empty());
        let bad = Counter::new([5, 2, 3, 4]);
        assert_eq!(verify_intra_invariants(&bad), vec!["A_LE_B"]);
    }

    #[test]
    fn clone_for_write_keeps_identity_and_isolates_mutation() {
        let record = VersionedRecord {
            aggregate_id: AggregateId(3),
            version: VersionNumber(5),
            prev_version: None,
            state: LifecycleState::Inactive,
            payload: Counter::new([1, 2, 3, 4]),
            emitted_events: Vec::new(),
        };
        let mut copy = clone_for_write(&record, UowToken(1));
        copy.payload_mut().values[0] = 0;
        assert_eq!(record.payload.values[0], 1);
        assert_eq!(copy.aggregate_id(), AggregateId(3));
        assert_eq!(copy.state(), LifecycleState::Inactive);
        assert_eq!(copy.prev(), Some(VersionNumber(5)));
    }

    #[test]
    fn inactive_versions_have_no_subscriptions() {
        let c = Counter::new([1, 2, 3, 4]);
        assert!(build_subscriptions(AggregateId(1), LifecycleState::Inactive, &c).is_empty());
    }
}
