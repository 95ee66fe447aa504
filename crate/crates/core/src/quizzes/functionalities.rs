//! Business functionalities. Each one runs in its own unit of work and either
//! commits all its writes at one version or aborts with no effect.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::aggregate::WorkingCopy;
use crate::error::{Error, Result};
use crate::events::{EventLoop, EventProcessor};
use crate::ids::{AggregateId, LifecycleState, VersionNumber};
use crate::quizzes::quiz::questions_for;
use crate::quizzes::{
    anonymous_name, AggregateRef, CourseExecution, Participant, Quiz, QuizzesAggregate, Student, StudentEvent,
    StudentEventKind, StudentId, StudentState, Timestamp, Tournament,
};
use crate::store::VersionStore;
use crate::uow::UnitOfWork;

type Working = WorkingCopy<QuizzesAggregate>;

#[derive(Debug, Clone, PartialEq)]
pub struct CourseExecutionView {
    pub id: AggregateId,
    pub version: VersionNumber,
    pub course_execution: CourseExecution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentView {
    pub id: AggregateId,
    pub version: VersionNumber,
    pub state: LifecycleState,
    pub tournament: Tournament,
    pub quiz: Option<(AggregateId, VersionNumber, Quiz)>,
}

/// Entry point of the domain: functionalities, event processing and field
/// lookups over one store.
pub struct Quizzes {
    store: Arc<VersionStore<QuizzesAggregate>>,
    processor: EventProcessor<QuizzesAggregate>,
    event_loop: EventLoop<QuizzesAggregate>,
}

fn course_execution_mut(copy: &mut Working) -> Result<&mut CourseExecution> {
    let id = copy.aggregate_id();
    match copy.payload_mut() {
        QuizzesAggregate::CourseExecution(c) => Ok(c),
        other => Err(Error::InvalidArgument(format!(
            "aggregate {id} is a {}",
            other.type_name()
        ))),
    }
}

fn tournament_mut(copy: &mut Working) -> Result<&mut Tournament> {
    let id = copy.aggregate_id();
    match copy.payload_mut() {
        QuizzesAggregate::Tournament(t) => Ok(t),
        other => Err(Error::InvalidArgument(format!(
            "aggregate {id} is a {}",
            other.type_name()
        ))),
    }
}

fn quiz_mut(copy: &mut Working) -> Result<&mut Quiz> {
    let id = copy.aggregate_id();
    match copy.payload_mut() {
        QuizzesAggregate::Quiz(q) => Ok(q),
        other => Err(Error::InvalidArgument(format!(
            "aggregate {id} is a {}",
            other.type_name()
        ))),
    }
}

fn require_active(copy: &Working) -> Result<()> {
    match copy.state() {
        LifecycleState::Active => Ok(()),
        state => Err(Error::State(format!("aggregate {} is {state}", copy.aggregate_id()))),
    }
}

fn base_version(copy: &Working) -> VersionNumber {
    copy.prev().expect("copy read from the store")
}

fn student_not_found(ce: AggregateId, student: StudentId) -> Error {
    Error::EntityNotFound(format!("student {student} in course execution {ce}"))
}

impl Quizzes {
    pub fn new(store: Arc<VersionStore<QuizzesAggregate>>) -> Self {
        let processor = EventProcessor::new(Arc::clone(&store));
        let event_loop = EventLoop::new(processor.clone());
        Quizzes {
            store,
            processor,
            event_loop,
        }
    }

    /// A fresh domain over a simulation-mode store.
    pub fn simulation() -> Self {
        Self::new(Arc::new(VersionStore::simulation()))
    }

    pub fn store(&self) -> &Arc<VersionStore<QuizzesAggregate>> {
        &self.store
    }

    pub fn processor(&self) -> &EventProcessor<QuizzesAggregate> {
        &self.processor
    }

    pub fn event_loop(&self) -> &EventLoop<QuizzesAggregate> {
        &self.event_loop
    }

    /// Runs one synchronous detection pass; returns the handler commits.
    pub fn trigger_events(&self, kind: Option<StudentEventKind>, subscriber: Option<AggregateId>) -> usize {
        self.processor.detect_and_process(kind, subscriber)
    }

    /// Processes events until nothing is pending.
    pub fn drain_events(&self) -> usize {
        let mut total = 0;
        loop {
            let n = self.trigger_events(None, None);
            if n == 0 {
                return total;
            }
            total += n;
        }
    }

    // --- course executions -------------------------------------------------

    pub fn create_course_execution(&self, academic_term: &str, students: &[(StudentId, &str)]) -> Result<AggregateId> {
        let mut uow = UnitOfWork::begin(&self.store, "createCourseExecution");
        let students = students.iter().map(|&(id, name)| Student::new(id, name)).collect();
        let copy = uow.register_new(QuizzesAggregate::CourseExecution(CourseExecution::new(
            1,
            academic_term,
            students,
        )));
        uow.commit()?;
        Ok(copy.aggregate_id())
    }

    pub fn enroll_student(&self, ce: AggregateId, student: StudentId, name: &str) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "enrollStudent");
        let mut copy = uow.read(ce)?;
        require_active(&copy)?;
        course_execution_mut(&mut copy)?
            .students
            .push(Student::new(student, name));
        uow.register_changed(copy)?;
        uow.commit()
    }

    pub fn update_student_name(&self, ce: AggregateId, student: StudentId, name: &str) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "updateStudentName");
        let mut copy = uow.read(ce)?;
        require_active(&copy)?;
        let s = course_execution_mut(&mut copy)?
            .student_mut(student)
            .ok_or_else(|| student_not_found(ce, student))?;
        s.name = name.to_owned();
        uow.register_changed(copy)?;
        uow.emit(
            ce,
            StudentEvent::UpdateStudentName {
                student_id: student,
                name: name.to_owned(),
            },
        )?;
        uow.commit()
    }

    pub fn anonymize_student(&self, ce: AggregateId, student: StudentId) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "anonymizeStudent");
        let mut copy = uow.read(ce)?;
        require_active(&copy)?;
        let name = anonymous_name(student);
        let s = course_execution_mut(&mut copy)?
            .student_mut(student)
            .ok_or_else(|| student_not_found(ce, student))?;
        s.name.clone_from(&name);
        uow.register_changed(copy)?;
        uow.emit(
            ce,
            StudentEvent::AnonymizeStudent {
                student_id: student,
                name,
            },
        )?;
        uow.commit()
    }

    pub fn unenroll_student(&self, ce: AggregateId, student: StudentId) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "unenrollStudent");
        let mut copy = uow.read(ce)?;
        require_active(&copy)?;
        let s = course_execution_mut(&mut copy)?
            .student_mut(student)
            .ok_or_else(|| student_not_found(ce, student))?;
        if s.state == StudentState::Inactive {
            return Err(Error::State(format!("student {student} is already unenrolled")));
        }
        s.state = StudentState::Inactive;
        uow.register_changed(copy)?;
        uow.emit(ce, StudentEvent::UnenrollStudent { student_id: student })?;
        uow.commit()
    }

    pub fn get_course_execution(&self, ce: AggregateId) -> Result<CourseExecutionView> {
        let mut uow = UnitOfWork::begin(&self.store, "getCourseExecution");
        let mut copy = uow.read(ce)?;
        let view = CourseExecutionView {
            id: ce,
            version: base_version(&copy),
            course_execution: course_execution_mut(&mut copy)?.clone(),
        };
        uow.commit()?;
        Ok(view)
    }

    // --- tournaments -------------------------------------------------------

    /// Creates a tournament and its quiz in one commit. The creator must be
    /// an active student of the course execution.
    pub fn create_tournament(
        &self,
        ce: AggregateId,
        creator: StudentId,
        start_time: Timestamp,
        end_time: Timestamp,
        topics: BTreeSet<String>,
    ) -> Result<AggregateId> {
        let mut uow = UnitOfWork::begin(&self.store, "createTournament");
        let mut ce_copy = uow.read(ce)?;
        require_active(&ce_copy)?;
        let ce_version = base_version(&ce_copy);
        let student = course_execution_mut(&mut ce_copy)?
            .active_student(creator)
            .ok_or_else(|| student_not_found(ce, creator))?
            .clone();
        let quiz = uow.register_new(QuizzesAggregate::Quiz(Quiz::new(start_time, end_time, &topics)));
        let tournament = uow.register_new(QuizzesAggregate::Tournament(Tournament {
            start_time,
            end_time,
            topics,
            participants: Vec::new(),
            creator: Participant::new(student.id, &student.name),
            course_execution: AggregateRef {
                id: ce,
                version: ce_version,
            },
            quiz: Some(quiz.aggregate_id()),
        }));
        uow.commit()?;
        Ok(tournament.aggregate_id())
    }

    /// Adds an active student of the tournament's course execution. The
    /// tournament is read first, then the course execution, so the latter
    /// is chosen consistently with the events the tournament has processed.
    pub fn add_participant(&self, tournament: AggregateId, student: StudentId) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "addParticipant");
        let mut t_copy = uow.read(tournament)?;
        require_active(&t_copy)?;
        let ce = tournament_mut(&mut t_copy)?.course_execution.id;
        let mut ce_copy = uow.read(ce)?;
        let ce_version = base_version(&ce_copy);
        let s = course_execution_mut(&mut ce_copy)?
            .active_student(student)
            .ok_or_else(|| student_not_found(ce, student))?
            .clone();
        let t = tournament_mut(&mut t_copy)?;
        t.participants.push(Participant::new(s.id, &s.name));
        t.observe_course_execution(ce, ce_version);
        uow.register_changed(t_copy)?;
        uow.commit()
    }

    /// Changes any of the dates and topics; the quiz follows.
    pub fn update_tournament(
        &self,
        tournament: AggregateId,
        start_time: Option<Timestamp>,
        end_time: Option<Timestamp>,
        topics: Option<BTreeSet<String>>,
    ) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "updateTournament");
        let mut t_copy = uow.read(tournament)?;
        require_active(&t_copy)?;
        let t = tournament_mut(&mut t_copy)?;
        if let Some(s) = start_time {
            t.start_time = s;
        }
        if let Some(e) = end_time {
            t.end_time = e;
        }
        if let Some(topics) = topics {
            t.topics = topics;
        }
        let (start, end, questions, quiz) = (t.start_time, t.end_time, questions_for(&t.topics), t.quiz);
        uow.register_changed(t_copy)?;
        if let Some(quiz) = quiz {
            let mut q_copy = uow.read(quiz)?;
            let q = quiz_mut(&mut q_copy)?;
            let updated = Quiz {
                available_date: start,
                conclusion_date: end,
                questions,
            };
            if *q != updated {
                *q = updated;
                uow.register_changed(q_copy)?;
            }
        }
        uow.commit()
    }

    pub fn cancel_tournament(&self, tournament: AggregateId) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "cancelTournament");
        let mut copy = uow.read(tournament)?;
        require_active(&copy)?;
        tournament_mut(&mut copy)?;
        copy.set_state(LifecycleState::Inactive);
        uow.register_changed(copy)?;
        uow.commit()
    }

    /// Deletes the tournament together with its quiz.
    pub fn remove_tournament(&self, tournament: AggregateId) -> Result<VersionNumber> {
        let mut uow = UnitOfWork::begin(&self.store, "removeTournament");
        let mut copy = uow.read(tournament)?;
        let quiz = tournament_mut(&mut copy)?.quiz;
        copy.set_state(LifecycleState::Deleted);
        uow.register_changed(copy)?;
        if let Some(quiz) = quiz {
            let mut q = uow.read(quiz)?;
            q.set_state(LifecycleState::Deleted);
            uow.register_changed(q)?;
        }
        uow.commit()
    }

    pub fn get_tournament(&self, tournament: AggregateId) -> Result<TournamentView> {
        let mut uow = UnitOfWork::begin(&self.store, "getTournament");
        let mut copy = uow.read(tournament)?;
        let t = tournament_mut(&mut copy)?.clone();
        let quiz = match t.quiz {
            Some(id) => {
                let mut q = uow.read(id)?;
                Some((id, base_version(&q), quiz_mut(&mut q)?.clone()))
            }
            None => None,
        };
        uow.commit()?;
        Ok(TournamentView {
            id: tournament,
            version: base_version(&copy),
            state: copy.state(),
            tournament: t,
            quiz,
        })
    }

    // --- inspection --------------------------------------------------------

    /// Reads `path` from the latest committed version of `id`. A `quiz.`
    /// prefix on a tournament follows its quiz reference.
    pub fn field(&self, id: AggregateId, path: &str) -> Result<String> {
        let record = self.store.latest(id).ok_or(Error::NotFound(id))?;
        if path == "state" {
            return Ok(record.state.to_string());
        }
        if let (Some(rest), Some(t)) = (path.strip_prefix("quiz."), record.payload.as_tournament()) {
            let quiz = t
                .quiz
                .ok_or_else(|| Error::EntityNotFound(format!("quiz of tournament {id}")))?;
            return self.field(quiz, rest);
        }
        record
            .payload
            .field(path)
            .ok_or_else(|| Error::EntityNotFound(format!("field `{path}` of {} {id}", record.payload.type_name())))
    }
}
