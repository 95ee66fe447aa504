use std::collections::BTreeSet;

use crate::aggregate::{AggregateContract, AttributeName, MergeRule, NonMergeable};
use crate::events::EventSubscription;
use crate::ids::{AggregateId, VersionNumber};
use crate::quizzes::{
    merge_keyed, QuizzesAggregate, StudentEvent, StudentEventKind, StudentId, StudentState, Timestamp,
};

const START_TIME: AttributeName = AttributeName("startTime");
const END_TIME: AttributeName = AttributeName("endTime");
const TOPICS: AttributeName = AttributeName("topics");
const PARTICIPANTS: AttributeName = AttributeName("participants");
const CREATOR: AttributeName = AttributeName("creator");
const COURSE_EXECUTION: AttributeName = AttributeName("courseExecution");
const QUIZ: AttributeName = AttributeName("quiz");

pub static TOURNAMENT: AggregateContract = AggregateContract {
    type_name: "Tournament",
    attributes: &[
        START_TIME,
        END_TIME,
        TOPICS,
        PARTICIPANTS,
        CREATOR,
        COURSE_EXECUTION,
        QUIZ,
    ],
    changeable_fields: &[START_TIME, END_TIME, TOPICS, PARTICIPANTS, CREATOR, COURSE_EXECUTION],
    intentions: &[&[START_TIME, END_TIME]],
    merge_hooks: &[
        (START_TIME, MergeRule::LastWriterWins),
        (END_TIME, MergeRule::LastWriterWins),
        (TOPICS, MergeRule::LastWriterWins),
        (PARTICIPANTS, MergeRule::Custom),
        (CREATOR, MergeRule::LastWriterWins),
        (COURSE_EXECUTION, MergeRule::Custom),
    ],
    intra_invariants: &[
        "START_BEFORE_END",
        "UNIQUE_PARTICIPANTS",
        "CREATOR_PARTICIPANT_COHERENT",
    ],
};

/// Reference to another aggregate together with the last version of it
/// whose events have been processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregateRef {
    pub id: AggregateId,
    pub version: VersionNumber,
}

/// Tournament-side copy of a student.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Participant {
    pub id: StudentId,
    pub name: String,
    pub state: StudentState,
}

impl Participant {
    pub fn new(id: StudentId, name: &str) -> Self {
        Participant {
            id,
            name: name.to_owned(),
            state: StudentState::Active,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tournament {
    pub start_time: Timestamp,
    pub end_time: Timestamp,
    pub topics: BTreeSet<String>,
    pub participants: Vec<Participant>,
    pub creator: Participant,
    pub course_execution: AggregateRef,
    /// Identifier of the tournament's quiz, set at creation.
    pub quiz: Option<AggregateId>,
}

impl Tournament {
    pub fn participant(&self, id: StudentId) -> Option<&Participant> {
        self.participants.iter().find(|p| p.id == id)
    }

    /// Is the student the creator or a participant?
    pub fn involves(&self, student: StudentId) -> bool {
        self.creator.id == student || self.participant(student).is_some()
    }

    pub fn subscriptions(&self) -> Vec<EventSubscription<QuizzesAggregate>> {
        StudentEventKind::ALL
            .into_iter()
            .map(|kind| {
                EventSubscription::new(
                    self.course_execution.id,
                    self.course_execution.version,
                    kind,
                    involves_student,
                )
            })
            .collect()
    }

    /// Applies a student event to the creator and participant copies.
    pub fn apply_event(&mut self, event: &StudentEvent) {
        let id = event.student_id();
        let copies = self
            .participants
            .iter_mut()
            .chain(std::iter::once(&mut self.creator))
            .filter(|p| p.id == id);
        for p in copies {
            match event {
                StudentEvent::AnonymizeStudent { name, .. } | StudentEvent::UpdateStudentName { name, .. } => {
                    p.name.clone_from(name);
                }
                StudentEvent::UnenrollStudent { .. } => p.state = StudentState::Inactive,
            }
        }
    }

    pub fn observe_course_execution(&mut self, sender: AggregateId, version: VersionNumber) {
        if sender == self.course_execution.id && version > self.course_execution.version {
            self.course_execution.version = version;
        }
    }

    pub(crate) fn field(&self, path: &str) -> Option<String> {
        let render = |p: &Participant| format!("{}:{}:{}", p.id, p.name, p.state);
        match path {
            "startTime" => Some(self.start_time.to_string()),
            "endTime" => Some(self.end_time.to_string()),
            "topics" => Some(self.topics.iter().cloned().collect::<Vec<_>>().join(",")),
            "participants" => Some(self.participants.iter().map(render).collect::<Vec<_>>().join(",")),
            "creator" => Some(render(&self.creator)),
            "creator.id" => Some(self.creator.id.to_string()),
            "creator.name" => Some(self.creator.name.clone()),
            "creator.state" => Some(self.creator.state.to_string()),
            "courseExecution.id" => Some(self.course_execution.id.to_string()),
            "courseExecution.version" => Some(self.course_execution.version.to_string()),
            "quiz" => Some(self.quiz.map_or_else(|| "-".to_owned(), |q| q.to_string())),
            _ => {
                let (id, attr) = path.strip_prefix("participant.")?.split_once('.')?;
                let p = self.participant(id.parse().ok()?)?;
                match attr {
                    "name" => Some(p.name.clone()),
                    "state" => Some(p.state.to_string()),
                    _ => None,
                }
            }
        }
    }

    pub(crate) fn check_invariant(&self, name: &str) -> bool {
        match name {
            "START_BEFORE_END" => self.start_time < self.end_time,
            "UNIQUE_PARTICIPANTS" => {
                let ids: BTreeSet<_> = self.participants.iter().map(|p| p.id).collect();
                ids.len() == self.participants.len()
            }
            "CREATOR_PARTICIPANT_COHERENT" => self
                .participant(self.creator.id)
                .is_none_or(|p| p.name == self.creator.name && p.state == self.creator.state),
            _ => true,
        }
    }

    pub(crate) fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool {
        match attribute.as_str() {
            "startTime" => self.start_time == other.start_time,
            "endTime" => self.end_time == other.end_time,
            "topics" => self.topics == other.topics,
            "participants" => self.participants == other.participants,
            "creator" => self.creator == other.creator,
            "courseExecution" => self.course_execution == other.course_execution,
            "quiz" => self.quiz == other.quiz,
            _ => true,
        }
    }

    pub(crate) fn copy_attribute(&mut self, source: &Self, attribute: AttributeName) {
        match attribute.as_str() {
            "startTime" => self.start_time = source.start_time,
            "endTime" => self.end_time = source.end_time,
            "topics" => self.topics.clone_from(&source.topics),
            "participants" => self.participants.clone_from(&source.participants),
            "creator" => self.creator.clone_from(&source.creator),
            "courseExecution" => self.course_execution = source.course_execution,
            "quiz" => self.quiz = source.quiz,
            _ => {}
        }
    }

    /// Participants merge per student; the course execution reference keeps
    /// the higher processed version.
    pub(crate) fn merge_attribute(
        &mut self,
        attribute: AttributeName,
        to_commit: &Self,
        committed: &Self,
        ancestor: &Self,
    ) -> Result<(), NonMergeable> {
        match attribute.as_str() {
            "participants" => {
                self.participants = merge_keyed(
                    &to_commit.participants,
                    &committed.participants,
                    &ancestor.participants,
                    |p| p.id,
                );
                Ok(())
            }
            "courseExecution" => {
                if to_commit.course_execution.id != committed.course_execution.id {
                    return Err(NonMergeable);
                }
                self.course_execution = AggregateRef {
                    id: committed.course_execution.id,
                    version: to_commit
                        .course_execution
                        .version
                        .max(committed.course_execution.version),
                };
                Ok(())
            }
            _ => Err(NonMergeable),
        }
    }
}

fn involves_student(subscriber: &QuizzesAggregate, event: &StudentEvent) -> bool {
    subscriber
        .as_tournament()
        .is_some_and(|t| t.involves(event.student_id()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quizzes::testing::tournament_with;

    fn tournament(participants: &[(u64, &str)]) -> Tournament {
        tournament_with(AggregateId(1), VersionNumber(1), participants)
            .as_tournament()
            .cloned()
            .unwrap()
    }

    #[test]
    fn contract_is_well_formed() {
        TOURNAMENT.validate().unwrap();
    }

    #[test]
    fn events_update_creator_and_participant_copies() {
        let mut t = tournament(&[(7, "Ann"), (8, "Bob")]);
        t.creator = Participant::new(7, "Ann");
        t.apply_event(&StudentEvent::AnonymizeStudent {
            student_id: 7,
            name: "ANONYMOUS-7".into(),
        });
        assert_eq!(t.field("participant.7.name").unwrap(), "ANONYMOUS-7");
        assert_eq!(t.field("creator.name").unwrap(), "ANONYMOUS-7");
        assert_eq!(t.field("participant.8.name").unwrap(), "Bob");
        t.apply_event(&StudentEvent::UnenrollStudent { student_id: 8 });
        assert_eq!(t.field("participant.8.state").unwrap(), "INACTIVE");
        assert!(t.check_invariant("CREATOR_PARTICIPANT_COHERENT"));
    }

    #[test]
    fn creator_copy_must_agree_with_participant_copy() {
        let mut t = tournament(&[(7, "Ann")]);
        t.creator = Participant::new(7, "ANONYMOUS-7");
        assert!(!t.check_invariant("CREATOR_PARTICIPANT_COHERENT"));
    }

    #[test]
    fn course_execution_reference_only_moves_forward() {
        let mut t = tournament(&[]);
        t.observe_course_execution(AggregateId(1), VersionNumber(5));
        t.observe_course_execution(AggregateId(1), VersionNumber(3));
        t.observe_course_execution(AggregateId(2), VersionNumber(9));
        assert_eq!(t.course_execution.version, VersionNumber(5));
    }

    #[test]
    fn course_execution_merge_takes_the_higher_version() {
        let base = tournament(&[]);
        let mut ours = base.clone();
        ours.course_execution.version = VersionNumber(4);
        let mut theirs = base.clone();
        theirs.course_execution.version = VersionNumber(6);
        let mut out = theirs.clone();
        out.merge_attribute(COURSE_EXECUTION, &ours, &theirs, &base).unwrap();
        assert_eq!(out.course_execution.version, VersionNumber(6));
    }
}
