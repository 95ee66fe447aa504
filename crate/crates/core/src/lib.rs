//! Transactional causal consistency for aggregate-based business logic.
//!
//! Aggregates are stored as immutable versions in a [`store::VersionStore`].
//! A [`uow::UnitOfWork`] runs one functionality over a causal snapshot and
//! commits all its writes at a single version, merging with concurrent
//! commits when their intentions do not overlap. Upstream aggregates publish
//! events with their commits; downstream aggregates subscribe to them and
//! catch up through the [`events::EventProcessor`].
//!
//! [`quizzes`] is a complete domain built on the engine and [`scenario`]
//! replays scripted interleavings against it.

pub mod aggregate;
pub mod error;
pub mod events;
pub mod ids;
pub mod merge;
pub mod quizzes;
pub mod scenario;
pub mod store;
pub mod uow;

#[cfg(test)]
mod testkit;

pub use aggregate::{Aggregate, AggregateContract, AttributeName, MergeRule, NonMergeable, WorkingCopy};
pub use error::{Error, ErrorCode, Result};
pub use events::{DomainEvent, Event, EventLoop, EventProcessor, EventSubscription, NoEvent};
pub use ids::{AggregateId, LifecycleState, VersionNumber};
pub use store::{StoreMode, VersionStore, VersionedRecord};
pub use uow::UnitOfWork;
