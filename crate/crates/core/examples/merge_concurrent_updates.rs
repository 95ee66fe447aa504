//! Two concurrent functionalities on the same tournament. Stepping the
//! version counter back makes the second one start before the first
//! commits; on commit its changes are merged into the newer version.

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

    q.update_tournament(t, None, None, Some(["geometry".to_owned()].into()))?;
    q.store().adjust_version(-1)?;
    // Starts from the snapshot the update did not see yet.
    q.add_participant(t, 7)?;
    q.store().adjust_version(1)?;

    println!("topics:       {}", q.field(t, "topics")?);
    println!("questions:    {}", q.field(t, "quiz.questions")?);
    println!("participants: {}", q.field(t, "participants")?);
    print!("{}", q.store().journal_text());
    Ok(())
}
