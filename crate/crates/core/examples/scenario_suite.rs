//! Runs the builtin scenario suite, then a scenario written inline.

use tcc::scenario::{parse_scenario, run_scenario, run_suite, RunOptions};

const INLINE: &str = "
name rename-reaches-participant
$ce = invoke createCourseExecution 2024 1:Creator 7:Ann
$t = invoke createTournament $ce 1 2024-01-01T10:00:00 2024-01-01T12:00:00 algebra
invoke addParticipant $t 7
invoke updateStudentName $ce 7 \"Ann Lee\"
assert-field $t participant.7.name Ann
trigger-events UPDATE_STUDENT_NAME $t
assert-handled 1
assert-field $t participant.7.name \"Ann Lee\"
";

fn main() {
    let options = RunOptions {
        audit: true,
        ..RunOptions::default()
    };
    let suite = run_suite(&options).expect("no journal file to open");
    println!("{suite}\n");

    let scenario = parse_scenario(INLINE).expect("inline scenario parses");
    let report = run_scenario(&scenario, &options).expect("no journal file to open");
    println!("{report}");
}
