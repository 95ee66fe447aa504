//! Cross-checks the builtin two-functionality scenarios against an
//! enumeration of every schedule of the two functionalities: both serial
//! orders and both concurrent orders (the second one starting before the
//! first commits). The scenario's end state must be the one its schedule
//! produces, and every schedule must end in a state the semantics allows.

use tcc::error::ErrorCode;
use tcc::quizzes::{participant_exists_violations, Quizzes, Timestamp};
use tcc::scenario::{builtin_suite, run_scenario_on};
use tcc::{AggregateId, LifecycleState};

type Op = fn(&Quizzes, AggregateId, AggregateId) -> Option<ErrorCode>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schedule {
    /// `a` commits, then `b` runs.
    Serial,
    /// `b` commits, then `a` runs.
    SerialReversed,
    /// `b` starts before `a` commits and commits after it.
    Concurrent,
    /// `a` starts before `b` commits and commits after it.
    ConcurrentReversed,
}

const SCHEDULES: [Schedule; 4] = [
    Schedule::Serial,
    Schedule::SerialReversed,
    Schedule::Concurrent,
    Schedule::ConcurrentReversed,
];

/// Fields observed at the end, after all events are processed.
type EndState = Vec<(String, String)>;

const FIELDS: [&str; 8] = [
    "participants",
    "creator",
    "startTime",
    "endTime",
    "topics",
    "quiz.availableDate",
    "quiz.conclusionDate",
    "quiz.questions",
];

fn end_state(q: &Quizzes, t: AggregateId) -> EndState {
    q.drain_events();
    FIELDS.iter().map(|f| (f.to_string(), q.field(t, f).unwrap())).collect()
}

fn at(s: &str) -> Timestamp {
    s.parse().unwrap()
}

fn setup() -> (Quizzes, AggregateId, AggregateId) {
    let q = Quizzes::simulation();
    let ce = q
        .create_course_execution("2024", &[(1, "Creator"), (7, "Ann"), (8, "Bob")])
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
    (q, ce, t)
}

fn code<T>(r: tcc::Result<T>) -> Option<ErrorCode> {
    r.err().map(|e| e.code())
}

/// Runs `op` and returns its outcome and how many versions it used.
fn step(q: &Quizzes, op: Op, ce: AggregateId, t: AggregateId) -> (Option<ErrorCode>, i64) {
    let before = q.store().current_version().get();
    let outcome = op(q, ce, t);
    (outcome, (q.store().current_version().get() - before) as i64)
}

fn run(schedule: Schedule, a: Op, b: Op) -> ([Option<ErrorCode>; 2], EndState) {
    let (q, ce, t) = setup();
    let (first, second) = match schedule {
        Schedule::Serial | Schedule::Concurrent => (a, b),
        Schedule::SerialReversed | Schedule::ConcurrentReversed => (b, a),
    };
    let (r1, used) = step(&q, first, ce, t);
    let r2 = match schedule {
        Schedule::Serial | Schedule::SerialReversed => second(&q, ce, t),
        Schedule::Concurrent | Schedule::ConcurrentReversed => {
            q.store().adjust_version(-used).unwrap();
            let r = second(&q, ce, t);
            q.store().adjust_version(used).unwrap();
            r
        }
    };
    let state = end_state(&q, t);
    assert!(participant_exists_violations(q.store()).is_empty(), "{schedule:?}");
    let outcomes = match schedule {
        Schedule::Serial | Schedule::Concurrent => [r1, r2],
        _ => [r2, r1],
    };
    (outcomes, state)
}

fn update_name(q: &Quizzes, ce: AggregateId, _: AggregateId) -> Option<ErrorCode> {
    code(q.update_student_name(ce, 7, "Anna"))
}

fn add_ann(q: &Quizzes, _: AggregateId, t: AggregateId) -> Option<ErrorCode> {
    code(q.add_participant(t, 7))
}

fn update_feb(q: &Quizzes, _: AggregateId, t: AggregateId) -> Option<ErrorCode> {
    code(q.update_tournament(
        t,
        Some(at("2024-02-01T10:00:00")),
        Some(at("2024-02-01T12:00:00")),
        Some(["geometry".to_owned()].into()),
    ))
}

fn update_mar(q: &Quizzes, _: AggregateId, t: AggregateId) -> Option<ErrorCode> {
    code(q.update_tournament(
        t,
        Some(at("2024-03-01T09:00:00")),
        Some(at("2024-03-01T11:00:00")),
        Some(["logic".to_owned(), "sets".to_owned()].into()),
    ))
}

fn move_start(q: &Quizzes, _: AggregateId, t: AggregateId) -> Option<ErrorCode> {
    code(q.update_tournament(t, Some(at("2024-01-01T09:00:00")), None, None))
}

fn move_end(q: &Quizzes, _: AggregateId, t: AggregateId) -> Option<ErrorCode> {
    code(q.update_tournament(t, None, Some(at("2024-01-01T13:00:00")), None))
}

fn anonymize_creator_and_process(q: &Quizzes, ce: AggregateId, _: AggregateId) -> Option<ErrorCode> {
    let r = code(q.anonymize_student(ce, 1));
    q.trigger_events(None, None);
    r
}

fn add_creator(q: &Quizzes, _: AggregateId, t: AggregateId) -> Option<ErrorCode> {
    code(q.add_participant(t, 1))
}

fn field<'a>(s: &'a EndState, name: &str) -> &'a str {
    &s.iter().find(|(k, _)| k == name).unwrap().1
}

/// Runs the builtin scenario `name` and returns its end state.
fn scenario_end_state(name: &str) -> EndState {
    let scenario = builtin_suite().into_iter().find(|s| s.name == name).unwrap();
    let q = Quizzes::simulation();
    let report = run_scenario_on(&scenario, &q, 1000);
    assert!(report.passed(), "{report}");
    let store = q.store();
    let t = store
        .aggregate_ids()
        .into_iter()
        .find(|id| {
            let r = store.latest(*id).unwrap();
            r.state != LifecycleState::Deleted && r.payload.as_tournament().is_some()
        })
        .unwrap();
    end_state(&q, t)
}

struct Case {
    scenario: &'static str,
    a: Op,
    b: Op,
    schedule: Schedule,
}

fn enumerate(case: &Case) -> Vec<(Schedule, [Option<ErrorCode>; 2], EndState)> {
    let runs: Vec<_> = SCHEDULES
        .iter()
        .map(|&s| {
            let (outcomes, state) = run(s, case.a, case.b);
            (s, outcomes, state)
        })
        .collect();
    let own = &runs.iter().find(|r| r.0 == case.schedule).unwrap().2;
    assert_eq!(&scenario_end_state(case.scenario), own, "{}", case.scenario);
    runs
}

#[test]
fn rename_and_add_converge_under_every_schedule() {
    for (scenario, a, b, schedule) in [
        (
            "sequential-update-add-event",
            update_name as Op,
            add_ann as Op,
            Schedule::Serial,
        ),
        ("sequential-add-update-event", add_ann, update_name, Schedule::Serial),
        (
            "concurrent-add-during-update",
            add_ann,
            update_name,
            Schedule::Concurrent,
        ),
        (
            "concurrent-update-during-add",
            update_name,
            add_ann,
            Schedule::Concurrent,
        ),
    ] {
        let runs = enumerate(&Case {
            scenario,
            a,
            b,
            schedule,
        });
        for (s, outcomes, state) in &runs {
            assert_eq!(outcomes, &[None, None], "{scenario} {s:?}");
            assert_eq!(field(state, "participants"), "7:Anna:ACTIVE", "{scenario} {s:?}");
        }
    }
}

#[test]
fn full_date_updates_merge_and_the_later_commit_wins() {
    let runs = enumerate(&Case {
        scenario: "concurrent-tournament-updates",
        a: update_feb,
        b: update_mar,
        schedule: Schedule::Concurrent,
    });
    for (s, outcomes, state) in &runs {
        assert_eq!(outcomes, &[None, None], "{s:?}");
        let later_is_b = matches!(s, Schedule::Serial | Schedule::Concurrent);
        let expected = if later_is_b {
            "2024-03-01T09:00:00"
        } else {
            "2024-02-01T10:00:00"
        };
        assert_eq!(field(state, "startTime"), expected, "{s:?}");
        assert_eq!(field(state, "quiz.availableDate"), expected, "{s:?}");
    }
}

#[test]
fn partial_date_updates_only_combine_when_serial() {
    let runs = enumerate(&Case {
        scenario: "intention-abort",
        a: move_start,
        b: move_end,
        schedule: Schedule::Concurrent,
    });
    for (s, outcomes, state) in &runs {
        match s {
            Schedule::Serial | Schedule::SerialReversed => {
                assert_eq!(outcomes, &[None, None]);
                assert_eq!(field(state, "startTime"), "2024-01-01T09:00:00");
                assert_eq!(field(state, "endTime"), "2024-01-01T13:00:00");
            }
            Schedule::Concurrent => {
                assert_eq!(outcomes, &[None, Some(ErrorCode::AggregateMergeFailure)]);
                assert_eq!(field(state, "endTime"), "2024-01-01T12:00:00");
            }
            Schedule::ConcurrentReversed => {
                assert_eq!(outcomes, &[Some(ErrorCode::AggregateMergeFailure), None]);
                assert_eq!(field(state, "startTime"), "2024-01-01T10:00:00");
            }
        }
    }
}

#[test]
fn creator_copy_conflict_aborts_only_the_stale_add() {
    let runs = enumerate(&Case {
        scenario: "creator-participant-abort",
        a: anonymize_creator_and_process,
        b: add_creator,
        schedule: Schedule::Concurrent,
    });
    for (s, outcomes, state) in &runs {
        assert_eq!(field(state, "creator"), "1:ANONYMOUS-1:ACTIVE", "{s:?}");
        if *s == Schedule::Concurrent {
            assert_eq!(outcomes, &[None, Some(ErrorCode::InvariantBreak)]);
            assert_eq!(field(state, "participants"), "");
        } else {
            assert_eq!(outcomes, &[None, None], "{s:?}");
            assert_eq!(field(state, "participants"), "1:ANONYMOUS-1:ACTIVE", "{s:?}");
        }
    }
}
