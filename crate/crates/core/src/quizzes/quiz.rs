use std::collections::BTreeSet;

use crate::aggregate::{AggregateContract, AttributeName, MergeRule};
use crate::quizzes::Timestamp;

const AVAILABLE_DATE: AttributeName = AttributeName("availableDate");
const CONCLUSION_DATE: AttributeName = AttributeName("conclusionDate");
const QUESTIONS: AttributeName = AttributeName("questions");

pub static QUIZ: AggregateContract = AggregateContract {
    type_name: "Quiz",
    attributes: &[AVAILABLE_DATE, CONCLUSION_DATE, QUESTIONS],
    changeable_fields: &[AVAILABLE_DATE, CONCLUSION_DATE, QUESTIONS],
    intentions: &[&[AVAILABLE_DATE, CONCLUSION_DATE]],
    merge_hooks: &[
        (AVAILABLE_DATE, MergeRule::LastWriterWins),
        (CONCLUSION_DATE, MergeRule::LastWriterWins),
        (QUESTIONS, MergeRule::LastWriterWins),
    ],
    intra_invariants: &["AVAILABLE_BEFORE_CONCLUSION"],
};

/// The quiz a tournament is played with. Its dates follow the tournament's
/// start and end, its questions follow the tournament's topics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiz {
    pub available_date: Timestamp,
    pub conclusion_date: Timestamp,
    pub questions: BTreeSet<String>,
}

impl Quiz {
    pub fn new(available_date: Timestamp, conclusion_date: Timestamp, topics: &BTreeSet<String>) -> Self {
        Quiz {
            available_date,
            conclusion_date,
            questions: questions_for(topics),
        }
    }

    pub(crate) fn field(&self, path: &str) -> Option<String> {
        match path {
            "availableDate" => Some(self.available_date.to_string()),
            "conclusionDate" => Some(self.conclusion_date.to_string()),
            "questions" => Some(self.questions.iter().cloned().collect::<Vec<_>>().join(",")),
            _ => None,
        }
    }

    pub(crate) fn check_invariant(&self, name: &str) -> bool {
        match name {
            "AVAILABLE_BEFORE_CONCLUSION" => self.available_date < self.conclusion_date,
            _ => true,
        }
    }

    pub(crate) fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool {
        match attribute.as_str() {
            "availableDate" => self.available_date == other.available_date,
            "conclusionDate" => self.conclusion_date == other.conclusion_date,
            "questions" => self.questions == other.questions,
            _ => true,
        }
    }

    pub(crate) fn copy_attribute(&mut self, source: &Self, attribute: AttributeName) {
        match attribute.as_str() {
            "availableDate" => self.available_date = source.available_date,
            "conclusionDate" => self.conclusion_date = source.conclusion_date,
            "questions" => self.questions.clone_from(&source.questions),
            _ => {}
        }
    }
}

/// One question per topic; the question bank itself is out of scope.
pub fn questions_for(topics: &BTreeSet<String>) -> BTreeSet<String> {
    topics.iter().map(|t| format!("Q-{t}")).collect()
}
