//! Snapshot reads: a unit of work only sees versions committed before it
//! started, even when a writer commits in the middle of its reads.

use tcc::quizzes::{Quizzes, QuizzesAggregate};
use tcc::{AggregateId, UnitOfWork};

fn main() -> tcc::Result<()> {
    let q = Quizzes::simulation();
    let ce = q.create_course_execution("2024", &[(1, "Creator")])?;
    let t = q.create_tournament(
        ce,
        1,
        "2024-01-01T10:00:00".parse().unwrap(),
        "2024-01-01T12:00:00".parse().unwrap(),
        ["algebra".to_owned()].into(),
    )?;
    let quiz: AggregateId = q.field(t, "quiz")?.parse().unwrap();

    let mut reader: UnitOfWork<QuizzesAggregate> = UnitOfWork::begin(q.store(), "report");
    let tournament = reader.read(t)?;

    let v = q.update_tournament(
        t,
        Some("2024-03-01T09:00:00".parse().unwrap()),
        Some("2024-03-01T11:00:00".parse().unwrap()),
        None,
    )?;
    println!("writer committed version {v}");

    let quiz_copy = reader.read(quiz)?;
    println!(
        "reader (version {}) sees start {} and quiz opening {}",
        reader.version(),
        tournament.payload().as_tournament().unwrap().start_time,
        quiz_copy.payload().as_quiz().unwrap().available_date,
    );
    println!("latest start is {}", q.field(t, "startTime")?);

    for record in q.store().versions_of(t) {
        println!("tournament {t} v{} {}", record.version, record.state);
    }
    Ok(())
}
