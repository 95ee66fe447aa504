//! The background loop processes events on a timer, so tournaments
//! converge without anyone triggering the processor.

use std::thread;
use std::time::Duration;

use tcc::quizzes::Quizzes;

fn main() -> tcc::Result<()> {
    let q = Quizzes::simulation();
    let ce = q.create_course_execution("2024", &[(1, "Creator"), (7, "Ann")])?;
    let t = q.create_tournament(
        ce,
        1,
        "2024-01-01T10:00:00".parse().unwrap(),
        "2024-01-01T12:00:00".parse().unwrap(),
        ["algebra".to_owned()].into(),
    )?;
    q.add_participant(t, 7)?;

    q.event_loop().set_loop(true, 10);
    q.anonymize_student(ce, 7)?;
    for _ in 0..50 {
        if q.field(t, "participant.7.name")? != "Ann" {
            break;
        }
        thread::sleep(Duration::from_millis(10));
    }
    q.event_loop().set_loop(false, 10);

    println!("participant 7: {}", q.field(t, "participant.7.name")?);
    println!("events handled by the loop: {}", q.event_loop().processed());
    Ok(())
}
