//! Payload builders for unit tests.

use crate::ids::{AggregateId, VersionNumber};
use crate::quizzes::{AggregateRef, CourseExecution, Participant, QuizzesAggregate, Student, Timestamp, Tournament};

pub fn at(s: &str) -> Timestamp {
    s.parse().expect("valid timestamp")
}

/// A tournament created by student 1 on `ce` at `ce_version`.
pub fn tournament_with(ce: AggregateId, ce_version: VersionNumber, participants: &[(u64, &str)]) -> QuizzesAggregate {
    QuizzesAggregate::Tournament(Tournament {
        start_time: at("2024-01-01T10:00:00"),
        end_time: at("2024-01-01T12:00:00"),
        topics: ["algebra".to_owned()].into(),
        participants: participants
            .iter()
            .map(|&(id, name)| Participant::new(id, name))
            .collect(),
        creator: Participant::new(1, "Creator"),
        course_execution: AggregateRef {
            id: ce,
            version: ce_version,
        },
        quiz: None,
    })
}

pub fn course_execution_with(students: &[(u64, &str)]) -> QuizzesAggregate {
    QuizzesAggregate::CourseExecution(CourseExecution::new(
        1,
        "2024",
        students.iter().map(|&(id, name)| Student::new(id, name)).collect(),
    ))
}
