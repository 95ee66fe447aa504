//! Events, versioned subscriptions, snapshot admissibility and the event
//! processor.
//!
//! Events are emitted atomically with the commit that produced them and carry
//! the commit version as their sender version. A subscriber holds, per
//! upstream sender, the last sender version it has processed; it matches any
//! later event of the subscribed type that its filter accepts. Nothing is ever
//! deleted: whether an event is processed is derived from the subscriber's
//! sender version.

pub(crate) mod admissible;
mod processor;

pub use admissible::{snapshot_admissible, AuditLog, AuditViolation, SnapshotCondition};
pub use processor::{EventLoop, EventProcessor, DEFAULT_INTERVAL_MS};

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use crate::aggregate::Aggregate;
use crate::ids::{AggregateId, VersionNumber};

/// Payload of a domain event.
pub trait DomainEvent: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    /// Event type. Its `Ord` is the declared processing order for events of
    /// one sender committed at the same version.
    type Kind: Copy + Ord + Hash + fmt::Debug + fmt::Display + FromStr + Send + Sync + 'static;

    fn kind(&self) -> Self::Kind;
}

/// Event type of an aggregate's events.
pub type EventKind<A> = <<A as Aggregate>::Event as DomainEvent>::Kind;

/// Uninhabited event type for aggregates that never emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NoEvent {}

impl fmt::Display for NoEvent {
    fn fmt(&self, _: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {}
    }
}

impl FromStr for NoEvent {
    type Err = ();

    fn from_str(_: &str) -> Result<Self, ()> {
        Err(())
    }
}

impl DomainEvent for NoEvent {
    type Kind = NoEvent;

    fn kind(&self) -> NoEvent {
        match *self {}
    }
}

/// A committed event.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<E> {
    pub sender: AggregateId,
    /// Version of the commit that emitted the event.
    pub sender_version: VersionNumber,
    pub body: E,
}

impl<E: DomainEvent> Event<E> {
    pub fn kind(&self) -> E::Kind {
        self.body.kind()
    }
}

/// Subscriber-side filter: may the subscriber (as given) care about an event?
pub type EventFilter<A> = fn(&A, &<A as Aggregate>::Event) -> bool;

/// One subscription held by a subscriber aggregate version.
pub struct EventSubscription<A: Aggregate> {
    pub sender: AggregateId,
    /// Last sender version the subscriber depends on.
    pub sender_version: VersionNumber,
    pub kind: EventKind<A>,
    pub filter: EventFilter<A>,
}

impl<A: Aggregate> EventSubscription<A> {
    pub fn new(sender: AggregateId, sender_version: VersionNumber, kind: EventKind<A>, filter: EventFilter<A>) -> Self {
        EventSubscription {
            sender,
            sender_version,
            kind,
            filter,
        }
    }

    /// Same sender and type, and the filter accepts; the sender version is
    /// not consulted.
    pub fn relevant(&self, event: &Event<A::Event>, subscriber: &A) -> bool {
        event.sender == self.sender && event.kind() == self.kind && (self.filter)(subscriber, &event.body)
    }
}

impl<A: Aggregate> Clone for EventSubscription<A> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<A: Aggregate> Copy for EventSubscription<A> {}

impl<A: Aggregate> fmt::Debug for EventSubscription<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSubscription")
            .field("sender", &self.sender)
            .field("sender_version", &self.sender_version)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl<A: Aggregate> PartialEq for EventSubscription<A> {
    fn eq(&self, other: &Self) -> bool {
        self.sender == other.sender
            && self.sender_version == other.sender_version
            && self.kind == other.kind
            && std::ptr::fn_addr_eq(self.filter, other.filter)
    }
}

/// Does `sub`, held by `subscriber`, select `event`?
pub fn matches<A: Aggregate>(sub: &EventSubscription<A>, event: &Event<A::Event>, subscriber: &A) -> bool {
    event.sender_version > sub.sender_version && sub.relevant(event, subscriber)
}
