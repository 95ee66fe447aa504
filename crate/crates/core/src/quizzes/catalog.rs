//! Invocation of functionalities by name with positional string arguments,
//! as used by scenario files and the command line.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ids::{AggregateId, VersionNumber};
use crate::quizzes::{Quizzes, StudentId, Timestamp};

pub struct FunctionalitySpec {
    pub name: &'static str,
    pub usage: &'static str,
}

pub type Catalog = &'static [FunctionalitySpec];

pub static CATALOG: Catalog = &[
    FunctionalitySpec {
        name: "createCourseExecution",
        usage: "<term> <id:name>...",
    },
    FunctionalitySpec {
        name: "enrollStudent",
        usage: "<courseExecution> <studentId> <name>",
    },
    FunctionalitySpec {
        name: "updateStudentName",
        usage: "<courseExecution> <studentId> <name>",
    },
    FunctionalitySpec {
        name: "anonymizeStudent",
        usage: "<courseExecution> <studentId>",
    },
    FunctionalitySpec {
        name: "unenrollStudent",
        usage: "<courseExecution> <studentId>",
    },
    FunctionalitySpec {
        name: "getCourseExecution",
        usage: "<courseExecution>",
    },
    FunctionalitySpec {
        name: "createTournament",
        usage: "<courseExecution> <creatorId> <start> <end> <topic,...>",
    },
    FunctionalitySpec {
        name: "addParticipant",
        usage: "<tournament> <studentId>",
    },
    FunctionalitySpec {
        name: "updateTournament",
        usage: "<tournament> <start|-> <end|-> <topic,...|->",
    },
    FunctionalitySpec {
        name: "cancelTournament",
        usage: "<tournament>",
    },
    FunctionalitySpec {
        name: "removeTournament",
        usage: "<tournament>",
    },
    FunctionalitySpec {
        name: "getTournament",
        usage: "<tournament>",
    },
];

/// Result of a successful invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    /// Aggregate created by the functionality, if any.
    pub created: Option<AggregateId>,
    /// Commit version, or the version read for queries.
    pub version: Option<VersionNumber>,
}

struct Args<'a> {
    name: &'a str,
    args: &'a [String],
}

impl<'a> Args<'a> {
    fn arity(&self, n: usize) -> Result<()> {
        if self.args.len() == n {
            Ok(())
        } else {
            Err(self.usage())
        }
    }

    fn usage(&self) -> Error {
        let usage = CATALOG.iter().find(|f| f.name == self.name).map_or("", |f| f.usage);
        Error::InvalidArgument(format!("usage: {} {usage}", self.name))
    }

    fn str(&self, i: usize) -> &'a str {
        &self.args[i]
    }

    fn number(&self, i: usize) -> Result<u64> {
        self.args[i]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("`{}` is not a number", self.args[i])))
    }

    fn id(&self, i: usize) -> Result<AggregateId> {
        self.number(i).map(AggregateId)
    }

    fn optional<T>(&self, i: usize, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        match self.str(i) {
            "-" => Ok(None),
            s => f(s).map(Some),
        }
    }
}

fn topics(s: &str) -> Result<BTreeSet<String>> {
    let set: BTreeSet<String> = s.split(',').filter(|t| !t.is_empty()).map(str::to_owned).collect();
    if set.is_empty() {
        return Err(Error::InvalidArgument("at least one topic is required".into()));
    }
    Ok(set)
}

fn timestamp(s: &str) -> Result<Timestamp> {
    s.parse()
}

fn student(s: &str) -> Result<(StudentId, &str)> {
    let (id, name) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("student `{s}` is not id:name")))?;
    let id = id
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("`{id}` is not a student id")))?;
    Ok((id, name))
}

impl Quizzes {
    /// Invokes the functionality `name` from [`CATALOG`].
    pub fn invoke(&self, name: &str, args: &[String]) -> Result<Invocation> {
        let a = Args { name, args };
        let committed = |v: VersionNumber| Invocation {
            created: None,
            version: Some(v),
        };
        let created = |id: AggregateId| Invocation {
            created: Some(id),
            version: None,
        };
        match name {
            "createCourseExecution" => {
                if args.is_empty() {
                    return Err(a.usage());
                }
                let students = args[1..].iter().map(|s| student(s)).collect::<Result<Vec<_>>>()?;
                self.create_course_execution(a.str(0), &students).map(created)
            }
            "enrollStudent" | "updateStudentName" => {
                a.arity(3)?;
                let (ce, sid, n) = (a.id(0)?, a.number(1)?, a.str(2));
                let v = if name == "enrollStudent" {
                    self.enroll_student(ce, sid, n)?
                } else {
                    self.update_student_name(ce, sid, n)?
                };
                Ok(committed(v))
            }
            "anonymizeStudent" => {
                a.arity(2)?;
                self.anonymize_student(a.id(0)?, a.number(1)?).map(committed)
            }
            "unenrollStudent" => {
                a.arity(2)?;
                self.unenroll_student(a.id(0)?, a.number(1)?).map(committed)
            }
            "getCourseExecution" => {
                a.arity(1)?;
                self.get_course_execution(a.id(0)?).map(|v| committed(v.version))
            }
            "createTournament" => {
                a.arity(5)?;
                self.create_tournament(
                    a.id(0)?,
                    a.number(1)?,
                    timestamp(a.str(2))?,
                    timestamp(a.str(3))?,
                    topics(a.str(4))?,
                )
                .map(created)
            }
            "addParticipant" => {
                a.arity(2)?;
                self.add_participant(a.id(0)?, a.number(1)?).map(committed)
            }
            "updateTournament" => {
                a.arity(4)?;
                self.update_tournament(
                    a.id(0)?,
                    a.optional(1, timestamp)?,
                    a.optional(2, timestamp)?,
                    a.optional(3, topics)?,
                )
                .map(committed)
            }
            "cancelTournament" => {
                a.arity(1)?;
                self.cancel_tournament(a.id(0)?).map(committed)
            }
            "removeTournament" => {
                a.arity(1)?;
                self.remove_tournament(a.id(0)?).map(committed)
            }
            "getTournament" => {
                a.arity(1)?;
                self.get_tournament(a.id(0)?).map(|v| committed(v.version))
            }
            _ => Err(Error::UnknownFunctionality(name.to_owned())),
        }
    }
}
