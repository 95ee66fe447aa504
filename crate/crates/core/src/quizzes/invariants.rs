use std::fmt;

use crate::ids::{AggregateId, LifecycleState};
use crate::quizzes::{QuizzesAggregate, StudentId, StudentState};
use crate::store::VersionStore;

/// A tournament participant with no matching enrolled student, evaluated
/// over the latest committed versions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParticipantExistsViolation {
    pub tournament: AggregateId,
    pub course_execution: AggregateId,
    pub student: StudentId,
    pub detail: String,
}

impl fmt::Display for ParticipantExistsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PARTICIPANT_EXISTS: tournament {} student {} in course execution {}: {}",
            self.tournament, self.student, self.course_execution, self.detail
        )
    }
}

/// Checks, for every non-deleted tournament, that each participant still
/// active in it is an active student of its course execution with the same
/// name. Holds eventually, once pending events are processed.
pub fn participant_exists_violations(store: &VersionStore<QuizzesAggregate>) -> Vec<ParticipantExistsViolation> {
    let mut out = Vec::new();
    for id in store.aggregate_ids() {
        let Some(record) = store.latest(id) else { continue };
        if record.state == LifecycleState::Deleted {
            continue;
        }
        let Some(t) = record.payload.as_tournament() else {
            continue;
        };
        let ce_id = t.course_execution.id;
        let ce = store.latest(ce_id);
        let ce = ce.as_ref().and_then(|r| r.payload.as_course_execution());
        for p in t.participants.iter().filter(|p| p.state == StudentState::Active) {
            let detail = match ce.and_then(|c| c.student(p.id)) {
                None => Some("not enrolled".to_owned()),
                Some(s) if s.state != StudentState::Active => Some("unenrolled".to_owned()),
                Some(s) if s.name != p.name => Some(format!("name `{}` differs from `{}`", p.name, s.name)),
                Some(_) => None,
            };
            if let Some(detail) = detail {
                out.push(ParticipantExistsViolation {
                    tournament: id,
                    course_execution: ce_id,
                    student: p.id,
                    detail,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quizzes::testing::at;
    use crate::quizzes::Quizzes;

    fn setup() -> (Quizzes, AggregateId, AggregateId) {
        let q = Quizzes::simulation();
        let ce = q
            .create_course_execution("2024", &[(1, "Creator"), (7, "Ann")])
            .unwrap();
        let t = q
            .create_tournament(
                ce,
                1,
                at("2024-01-01T10:00:00"),
                at("2024-01-01T12:00:00"),
                ["algebra".to_owned()].into(),
            )
            .unwrap();
        q.add_participant(t, 7).unwrap();
        (q, ce, t)
    }

    #[test]
    fn stale_name_is_reported_until_processed() {
        let (q, ce, t) = setup();
        assert!(participant_exists_violations(q.store()).is_empty());
        q.update_student_name(ce, 7, "Anna").unwrap();
        let v = participant_exists_violations(q.store());
        assert_eq!(
            v.iter().map(ToString::to_string).collect::<Vec<_>>(),
            [format!(
                "PARTICIPANT_EXISTS: tournament {t} student 7 in course execution {ce}: name `Ann` differs from `Anna`"
            )]
        );
        q.drain_events();
        assert!(participant_exists_violations(q.store()).is_empty());
    }

    #[test]
    fn inactive_participants_and_deleted_tournaments_are_skipped() {
        let (q, ce, t) = setup();
        q.unenroll_student(ce, 7).unwrap();
        assert_eq!(participant_exists_violations(q.store())[0].detail, "unenrolled");
        q.remove_tournament(t).unwrap();
        assert!(participant_exists_violations(q.store()).is_empty());
    }
}
