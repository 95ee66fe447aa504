use crate::aggregate::{AggregateContract, AttributeName, MergeRule, NonMergeable};
use crate::quizzes::{merge_keyed, StudentId, StudentState};

const COURSE_ID: AttributeName = AttributeName("courseId");
const ACADEMIC_TERM: AttributeName = AttributeName("academicTerm");
const STUDENTS: AttributeName = AttributeName("students");

pub static COURSE_EXECUTION: AggregateContract = AggregateContract {
    type_name: "CourseExecution",
    attributes: &[COURSE_ID, ACADEMIC_TERM, STUDENTS],
    changeable_fields: &[ACADEMIC_TERM, STUDENTS],
    intentions: &[],
    merge_hooks: &[
        (ACADEMIC_TERM, MergeRule::LastWriterWins),
        (STUDENTS, MergeRule::Custom),
    ],
    intra_invariants: &["UNIQUE_STUDENTS"],
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Student {
    pub id: StudentId,
    pub name: String,
    pub state: StudentState,
}

impl Student {
    pub fn new(id: StudentId, name: &str) -> Self {
        Student {
            id,
            name: name.to_owned(),
            state: StudentState::Active,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CourseExecution {
    pub course_id: u64,
    pub academic_term: String,
    pub students: Vec<Student>,
}

impl CourseExecution {
    pub fn new(course_id: u64, academic_term: &str, students: Vec<Student>) -> Self {
        CourseExecution {
            course_id,
            academic_term: academic_term.to_owned(),
            students,
        }
    }

    pub fn student(&self, id: StudentId) -> Option<&Student> {
        self.students.iter().find(|s| s.id == id)
    }

    pub fn student_mut(&mut self, id: StudentId) -> Option<&mut Student> {
        self.students.iter_mut().find(|s| s.id == id)
    }

    /// An enrolled student that has not been unenrolled.
    pub fn active_student(&self, id: StudentId) -> Option<&Student> {
        self.student(id).filter(|s| s.state == StudentState::Active)
    }

    pub(crate) fn field(&self, path: &str) -> Option<String> {
        match path {
            "courseId" => Some(self.course_id.to_string()),
            "academicTerm" => Some(self.academic_term.clone()),
            "students" => Some(
                self.students
                    .iter()
                    .map(|s| format!("{}:{}:{}", s.id, s.name, s.state))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            _ => {
                let rest = path.strip_prefix("student.")?;
                let (id, attr) = rest.split_once('.')?;
                let s = self.student(id.parse().ok()?)?;
                match attr {
                    "name" => Some(s.name.clone()),
                    "state" => Some(s.state.to_string()),
                    _ => None,
                }
            }
        }
    }

    pub(crate) fn check_invariant(&self, name: &str) -> bool {
        match name {
            "UNIQUE_STUDENTS" => {
                let mut ids: Vec<_> = self.students.iter().map(|s| s.id).collect();
                ids.sort_unstable();
                ids.windows(2).all(|w| w[0] != w[1])
            }
            _ => true,
        }
    }

    pub(crate) fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool {
        match attribute.as_str() {
            "courseId" => self.course_id == other.course_id,
            "academicTerm" => self.academic_term == other.academic_term,
            "students" => self.students == other.students,
            _ => true,
        }
    }

    pub(crate) fn copy_attribute(&mut self, source: &Self, attribute: AttributeName) {
        match attribute.as_str() {
            "courseId" => self.course_id = source.course_id,
            "academicTerm" => self.academic_term.clone_from(&source.academic_term),
            "students" => self.students.clone_from(&source.students),
            _ => {}
        }
    }

    /// Students merge entry by entry, keyed by student id.
    pub(crate) fn merge_attribute(
        &mut self,
        attribute: AttributeName,
        to_commit: &Self,
        committed: &Self,
        ancestor: &Self,
    ) -> Result<(), NonMergeable> {
        match attribute.as_str() {
            "students" => {
                self.students = merge_keyed(&to_commit.students, &committed.students, &ancestor.students, |s| s.id);
                Ok(())
            }
            _ => Err(NonMergeable),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contract_is_well_formed() {
        COURSE_EXECUTION.validate().unwrap();
    }

    #[test]
    fn duplicate_students_break_the_invariant() {
        let ce = CourseExecution::new(1, "2024", vec![Student::new(7, "Ann"), Student::new(7, "Bob")]);
        assert!(!ce.check_invariant("UNIQUE_STUDENTS"));
    }

    #[test]
    fn concurrent_enrolments_are_both_kept() {
        let base = CourseExecution::new(1, "2024", vec![Student::new(7, "Ann")]);
        let mut ours = base.clone();
        ours.students.push(Student::new(8, "Bob"));
        let mut theirs = base.clone();
        theirs.students.push(Student::new(9, "Cid"));
        theirs.student_mut(7).unwrap().name = "Anna".into();
        let mut out = theirs.clone();
        out.merge_attribute(STUDENTS, &ours, &theirs, &base).unwrap();
        assert_eq!(
            out.field("students").unwrap(),
            "7:Anna:ACTIVE,9:Cid:ACTIVE,8:Bob:ACTIVE"
        );
    }
}
