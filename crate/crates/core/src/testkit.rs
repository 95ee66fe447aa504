//! Small aggregate used by unit tests of the generic machinery.

use crate::aggregate::{Aggregate, AggregateContract, AttributeName, MergeRule, NonMergeable};
use crate::events::NoEvent;

pub const A: AttributeName = AttributeName("a");
pub const B: AttributeName = AttributeName("b");
pub const C: AttributeName = AttributeName("c");
pub const D: AttributeName = AttributeName("d");

pub static COUNTER: AggregateContract = AggregateContract {
    type_name: "Counter",
    attributes: &[A, B, C, D],
    changeable_fields: &[A, B, C, D],
    intentions: &[&[A, B]],
    merge_hooks: &[
        (A, MergeRule::LastWriterWins),
        (B, MergeRule::LastWriterWins),
        (C, MergeRule::Custom),
        (D, MergeRule::NonMergeable),
    ],
    intra_invariants: &["A_LE_B"],
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counter {
    pub values: [i64; 4],
}

impl Counter {
    pub fn new(values: [i64; 4]) -> Self {
        Counter { values }
    }

    fn index(attribute: AttributeName) -> usize {
        match attribute.as_str() {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            "d" => 3,
            other => panic!("unknown attribute {other}"),
        }
    }
}

impl Aggregate for Counter {
    type Event = NoEvent;

    fn contract(&self) -> &'static AggregateContract {
        &COUNTER
    }

    fn check_invariant(&self, name: &str) -> bool {
        match name {
            "A_LE_B" => self.values[0] <= self.values[1],
            _ => true,
        }
    }

    fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool {
        let i = Self::index(attribute);
        self.values[i] == other.values[i]
    }

    fn copy_attribute(&mut self, source: &Self, attribute: AttributeName) {
        let i = Self::index(attribute);
        self.values[i] = source.values[i];
    }

    /// `c` is an additive counter: both deltas are kept.
    fn merge_attribute(
        &mut self,
        attribute: AttributeName,
        to_commit: &Self,
        committed: &Self,
        ancestor: &Self,
    ) -> Result<(), NonMergeable> {
        let i = Self::index(attribute);
        if i != 2 {
            return Err(NonMergeable);
        }
        self.values[i] = committed.values[i] + to_commit.values[i] - ancestor.values[i];
        Ok(())
    }
}
