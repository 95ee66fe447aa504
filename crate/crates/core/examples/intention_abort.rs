//! Start and end time form an intention. Two concurrent updates that each
//! change one of them cannot be merged, so the later commit aborts and the
//! tournament keeps a pair of dates someone actually chose.

use tcc::quizzes::Quizzes;

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

    q.update_tournament(t, Some("2024-01-01T09:00:00".parse().unwrap()), None, None)?;
    q.store().adjust_version(-1)?;
    let late = q.update_tournament(t, None, Some("2024-01-01T13:00:00".parse().unwrap()), None);
    q.store().adjust_version(1)?;

    match late {
        Err(e) => println!("second update aborted: {} ({e})", e.code()),
        Ok(v) => println!("second update committed at {v}"),
    }
    println!("window: {} .. {}", q.field(t, "startTime")?, q.field(t, "endTime")?);

    // Changing both dates on both sides is allowed; the later commit wins.
    q.update_tournament(
        t,
        Some("2024-02-01T10:00:00".parse().unwrap()),
        Some("2024-02-01T12:00:00".parse().unwrap()),
        None,
    )?;
    q.store().adjust_version(-1)?;
    q.update_tournament(
        t,
        Some("2024-03-01T10:00:00".parse().unwrap()),
        Some("2024-03-01T12:00:00".parse().unwrap()),
        None,
    )?;
    q.store().adjust_version(1)?;
    println!("window: {} .. {}", q.field(t, "startTime")?, q.field(t, "endTime")?);
    Ok(())
}
