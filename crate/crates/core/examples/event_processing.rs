//! Student changes reach tournaments through events. Nothing is pushed:
//! a tournament catches up when the processor is triggered, one handler
//! commit per event.

use tcc::quizzes::{participant_exists_violations, Quizzes, StudentEventKind};

fn main() -> tcc::Result<()> {
    let q = Quizzes::simulation();
    let ce = q.create_course_execution("2024", &[(1, "Creator"), (7, "Ann"), (8, "Bob")])?;
    let t = q.create_tournament(
        ce,
        1,
        "2024-01-01T10:00:00".parse().unwrap(),
        "2024-01-01T12:00:00".parse().unwrap(),
        ["algebra".to_owned()].into(),
    )?;
    q.add_participant(t, 7)?;
    q.add_participant(t, 8)?;

    q.update_student_name(ce, 7, "Anna")?;
    q.unenroll_student(ce, 8)?;
    println!("before: {}", q.field(t, "participants")?);
    for v in participant_exists_violations(q.store()) {
        println!("  pending: {v}");
    }

    let renamed = q.trigger_events(Some(StudentEventKind::UpdateStudentName), Some(t));
    println!("handled {renamed} rename event(s): {}", q.field(t, "participants")?);
    let rest = q.trigger_events(None, None);
    println!("handled {rest} other event(s):    {}", q.field(t, "participants")?);
    assert!(participant_exists_violations(q.store()).is_empty());
    print!("{}", q.store().journal_text());
    Ok(())
}
