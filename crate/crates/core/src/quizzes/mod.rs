//! Quizzes tutor domain: course executions, tournaments and quizzes.
//!
//! `CourseExecution` is upstream and emits student events. `Tournament`
//! keeps copies of its creator and participants and subscribes to those
//! events. `Quiz` belongs to a tournament and mirrors its dates and topics.

mod catalog;
mod course_execution;
mod functionalities;
mod invariants;
mod quiz;
mod tournament;

#[cfg(test)]
pub(crate) mod testing;

pub use catalog::{Catalog, FunctionalitySpec, Invocation, CATALOG};
pub use course_execution::{CourseExecution, Student, COURSE_EXECUTION};
pub use functionalities::{CourseExecutionView, Quizzes, TournamentView};
pub use invariants::{participant_exists_violations, ParticipantExistsViolation};
pub use quiz::{Quiz, QUIZ};
pub use tournament::{AggregateRef, Participant, Tournament, TOURNAMENT};

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;

use crate::aggregate::{Aggregate, AggregateContract, AttributeName, NonMergeable};
use crate::error::Error;
use crate::events::{DomainEvent, Event, EventSubscription};
use crate::ids::{AggregateId, VersionNumber};

pub type StudentId = u64;

/// Point in time, written `YYYY-MM-DDTHH:MM:SS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub NaiveDateTime);

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%dT%H:%M:%S"))
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.parse::<NaiveDateTime>()
            .map(Timestamp)
            .map_err(|e| Error::InvalidArgument(format!("timestamp `{s}`: {e}")))
    }
}

/// State of a student copy, either in a course execution or in a tournament.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StudentState {
    #[default]
    Active,
    Inactive,
}

impl fmt::Display for StudentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudentState::Active => "ACTIVE",
            StudentState::Inactive => "INACTIVE",
        })
    }
}

/// Name given to anonymized students.
pub fn anonymous_name(student: StudentId) -> String {
    format!("ANONYMOUS-{student}")
}

/// Events emitted by course executions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StudentEvent {
    AnonymizeStudent { student_id: StudentId, name: String },
    UnenrollStudent { student_id: StudentId },
    UpdateStudentName { student_id: StudentId, name: String },
}

impl StudentEvent {
    pub fn student_id(&self) -> StudentId {
        match self {
            StudentEvent::AnonymizeStudent { student_id, .. }
            | StudentEvent::UnenrollStudent { student_id }
            | StudentEvent::UpdateStudentName { student_id, .. } => *student_id,
        }
    }
}

/// Event types, in processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StudentEventKind {
    AnonymizeStudent,
    UnenrollStudent,
    UpdateStudentName,
}

impl StudentEventKind {
    pub const ALL: [StudentEventKind; 3] = [
        StudentEventKind::AnonymizeStudent,
        StudentEventKind::UnenrollStudent,
        StudentEventKind::UpdateStudentName,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StudentEventKind::AnonymizeStudent => "ANONYMIZE_STUDENT",
            StudentEventKind::UnenrollStudent => "UNENROLL_STUDENT",
            StudentEventKind::UpdateStudentName => "UPDATE_STUDENT_NAME",
        }
    }
}

impl fmt::Display for StudentEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudentEventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown event type `{s}`")))
    }
}

impl DomainEvent for StudentEvent {
    type Kind = StudentEventKind;

    fn kind(&self) -> StudentEventKind {
        match self {
            StudentEvent::AnonymizeStudent { .. } => StudentEventKind::AnonymizeStudent,
            StudentEvent::UnenrollStudent { .. } => StudentEventKind::UnenrollStudent,
            StudentEvent::UpdateStudentName { .. } => StudentEventKind::UpdateStudentName,
        }
    }
}

/// Payload stored for every aggregate of the domain.
#[derive(Debug, Clone, PartialEq)]
pub enum QuizzesAggregate {
    CourseExecution(CourseExecution),
    Tournament(Tournament),
    Quiz(Quiz),
}

impl QuizzesAggregate {
    pub fn type_name(&self) -> &'static str {
        self.contract().type_name
    }

    pub fn as_course_execution(&self) -> Option<&CourseExecution> {
        match self {
            QuizzesAggregate::CourseExecution(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_tournament(&self) -> Option<&Tournament> {
        match self {
            QuizzesAggregate::Tournament(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_quiz(&self) -> Option<&Quiz> {
        match self {
            QuizzesAggregate::Quiz(q) => Some(q),
            _ => None,
        }
    }

    /// Renders one field for assertions and views; `None` if the path does
    /// not name a field of this aggregate.
    pub fn field(&self, path: &str) -> Option<String> {
        match self {
            QuizzesAggregate::CourseExecution(c) => c.field(path),
            QuizzesAggregate::Tournament(t) => t.field(path),
            QuizzesAggregate::Quiz(q) => q.field(path),
        }
    }
}

macro_rules! dispatch {
    ($self:expr, $inner:ident => $body:expr) => {
        match $self {
            QuizzesAggregate::CourseExecution($inner) => $body,
            QuizzesAggregate::Tournament($inner) => $body,
            QuizzesAggregate::Quiz($inner) => $body,
        }
    };
}

macro_rules! dispatch_pair {
    ($a:expr, $b:expr, ($x:ident, $y:ident) => $body:expr, _ => $other:expr) => {
        match ($a, $b) {
            (QuizzesAggregate::CourseExecution($x), QuizzesAggregate::CourseExecution($y)) => $body,
            (QuizzesAggregate::Tournament($x), QuizzesAggregate::Tournament($y)) => $body,
            (QuizzesAggregate::Quiz($x), QuizzesAggregate::Quiz($y)) => $body,
            _ => $other,
        }
    };
}

impl Aggregate for QuizzesAggregate {
    type Event = StudentEvent;

    fn contract(&self) -> &'static AggregateContract {
        match self {
            QuizzesAggregate::CourseExecution(_) => &COURSE_EXECUTION,
            QuizzesAggregate::Tournament(_) => &TOURNAMENT,
            QuizzesAggregate::Quiz(_) => &QUIZ,
        }
    }

    fn check_invariant(&self, name: &str) -> bool {
        dispatch!(self, a => a.check_invariant(name))
    }

    fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool {
        dispatch_pair!(self, other, (x, y) => x.attribute_eq(y, attribute), _ => false)
    }

    fn copy_attribute(&mut self, source: &Self, attribute: AttributeName) {
        dispatch_pair!(self, source, (x, y) => x.copy_attribute(y, attribute), _ => {})
    }

    fn merge_attribute(
        &mut self,
        attribute: AttributeName,
        to_commit: &Self,
        committed: &Self,
        ancestor: &Self,
    ) -> Result<(), NonMergeable> {
        match (self, to_commit, committed, ancestor) {
            (
                QuizzesAggregate::Tournament(out),
                QuizzesAggregate::Tournament(ours),
                QuizzesAggregate::Tournament(theirs),
                QuizzesAggregate::Tournament(base),
            ) => out.merge_attribute(attribute, ours, theirs, base),
            (
                QuizzesAggregate::CourseExecution(out),
                QuizzesAggregate::CourseExecution(ours),
                QuizzesAggregate::CourseExecution(theirs),
                QuizzesAggregate::CourseExecution(base),
            ) => out.merge_attribute(attribute, ours, theirs, base),
            _ => Err(NonMergeable),
        }
    }

    fn subscriptions(&self, _own_id: AggregateId) -> Vec<EventSubscription<Self>> {
        match self {
            QuizzesAggregate::Tournament(t) => t.subscriptions(),
            _ => Vec::new(),
        }
    }

    fn apply_event(&mut self, event: &Event<StudentEvent>) -> Result<(), Error> {
        match self {
            QuizzesAggregate::Tournament(t) => {
                t.apply_event(&event.body);
                Ok(())
            }
            other => Err(Error::State(format!(
                "{} does not process {}",
                other.type_name(),
                event.kind()
            ))),
        }
    }

    fn observe_sender_version(&mut self, sender: AggregateId, version: VersionNumber) {
        if let QuizzesAggregate::Tournament(t) = self {
            t.observe_course_execution(sender, version);
        }
    }
}

/// Three-way merge of a keyed collection, entry by entry: an entry changed
/// (added, modified or removed) by the committing side wins, otherwise the
/// committed entry is kept. Committed order comes first, then entries only
/// the committing side has.
pub(crate) fn merge_keyed<T: Clone + PartialEq>(
    to_commit: &[T],
    committed: &[T],
    ancestor: &[T],
    key: impl Fn(&T) -> u64,
) -> Vec<T> {
    let find = |items: &[T], k: u64| items.iter().find(|x| key(x) == k).cloned();
    let mut keys: Vec<u64> = Vec::new();
    for k in committed.iter().chain(to_commit).chain(ancestor).map(&key) {
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .filter_map(|k| {
            let ours = find(to_commit, k);
            if ours != find(ancestor, k) {
                ours
            } else {
                find(committed, k)
            }
        })
        .collect()
}
