//! Commit-time reconciliation of a working version with a concurrently
//! committed version of the same aggregate.
//!
//! Both versions evolved from a common ancestor, the committed version the
//! working copy was read from. A merge proceeds in three steps:
//!
//! 1. diff both sides against the ancestor and reject the merge if the two
//!    diffs violate an intention;
//! 2. start from the committed payload and layer the working copy's changes
//!    on top, resolving attributes changed on both sides with the attribute's
//!    merge rule;
//! 3. re-check intra-invariants on the result (done by the unit of work).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::aggregate::{Aggregate, AttributeName, MergeRule};

/// Attributes whose value differs between an ancestor and a variant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttributeDiff {
    changed: BTreeSet<AttributeName>,
}

impl AttributeDiff {
    pub fn new(changed: impl IntoIterator<Item = AttributeName>) -> Self {
        AttributeDiff {
            changed: changed.into_iter().collect(),
        }
    }

    pub fn changed(&self) -> &BTreeSet<AttributeName> {
        &self.changed
    }

    pub fn contains(&self, attribute: AttributeName) -> bool {
        self.changed.contains(&attribute)
    }

    pub fn is_empty(&self) -> bool {
        self.changed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = AttributeName> + '_ {
        self.changed.iter().copied()
    }
}

/// An intention both sides violated: `ours` and `theirs` are distinct
/// attributes of `intention` changed by the committing and the committed
/// version respectively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentionConflict {
    pub intention: Vec<AttributeName>,
    pub ours: AttributeName,
    pub theirs: AttributeName,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("type mismatch: {expected} vs {found}")]
    TypeMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("attribute `{0}` changed but is not declared changeable")]
    Unchangeable(AttributeName),
    #[error("intention {:?} violated: `{}` changed concurrently with `{}`", .0.intention, .0.ours, .0.theirs)]
    Intention(IntentionConflict),
    #[error("attribute `{0}` changed on both sides and cannot be merged")]
    NonMergeable(AttributeName),
    #[error("lifecycle state changed on both sides")]
    StateConflict,
    #[error("gave up after {0} merge rounds")]
    RetryExhausted(usize),
}

/// Compares `base` and `variant` attribute by attribute.
pub fn diff<A: Aggregate>(base: &A, variant: &A) -> Result<AttributeDiff, MergeError> {
    let contract = base.contract();
    let other = variant.contract();
    if contract.type_name != other.type_name {
        return Err(MergeError::TypeMismatch {
            expected: contract.type_name,
            found: other.type_name,
        });
    }
    let mut changed = BTreeSet::new();
    for &attribute in contract.attributes {
        if !base.attribute_eq(variant, attribute) {
            if !contract.is_changeable(attribute) {
                return Err(MergeError::Unchangeable(attribute));
            }
            changed.insert(attribute);
        }
    }
    Ok(AttributeDiff { changed })
}

/// Returns the intention violated by two concurrent diffs, if any.
///
/// An intention is violated when one side changed one of its attributes and
/// the other side changed a different one, unless both sides changed all of
/// its attributes. When several intentions are violated the one whose sorted
/// attribute list is lexicographically smallest is reported.
pub fn intention_conflict(
    ours: &AttributeDiff,
    theirs: &AttributeDiff,
    intentions: &[BTreeSet<AttributeName>],
) -> Option<IntentionConflict> {
    intentions
        .iter()
        .filter_map(|intention| {
            let mine: Vec<_> = intention.iter().filter(|a| ours.contains(**a)).copied().collect();
            let other: Vec<_> = intention.iter().filter(|a| theirs.contains(**a)).copied().collect();
            if mine.len() == intention.len() && other.len() == intention.len() {
                return None;
            }
            // A distinct pair exists unless both sides touched the same
            // single attribute of the intention.
            let (&first_mine, &first_other) = (mine.first()?, other.first()?);
            let (ours, theirs) = if first_mine != first_other {
                (first_mine, first_other)
            } else if let Some(&o) = other.get(1) {
                (first_mine, o)
            } else if let Some(&m) = mine.get(1) {
                (m, first_other)
            } else {
                return None;
            };
            Some(IntentionConflict {
                intention: intention.iter().copied().collect(),
                ours,
                theirs,
            })
        })
        .min_by(|a, b| a.intention.cmp(&b.intention))
}

/// Result of a successful merge, with the diffs that drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeOutcome<A> {
    pub merged: A,
    pub ours: AttributeDiff,
    pub theirs: AttributeDiff,
}

/// Merges `to_commit` into `committed`, both descending from `ancestor`.
pub fn merge_versions<A: Aggregate>(to_commit: &A, ancestor: &A, committed: &A) -> Result<MergeOutcome<A>, MergeError> {
    let ours = diff(ancestor, to_commit)?;
    let theirs = diff(ancestor, committed)?;
    let contract = committed.contract();

    if let Some(conflict) = intention_conflict(&ours, &theirs, &contract.intention_sets()) {
        return Err(MergeError::Intention(conflict));
    }

    let mut merged = committed.clone();
    for attribute in ours.iter() {
        if !theirs.contains(attribute) {
            merged.copy_attribute(to_commit, attribute);
            continue;
        }
        match contract.merge_rule(attribute).unwrap_or(MergeRule::NonMergeable) {
            MergeRule::LastWriterWins => merged.copy_attribute(to_commit, attribute),
            MergeRule::KeepCommitted => {}
            MergeRule::Custom => merged
                .merge_attribute(attribute, to_commit, committed, ancestor)
                .map_err(|_| MergeError::NonMergeable(attribute))?,
            MergeRule::NonMergeable => return Err(MergeError::NonMergeable(attribute)),
        }
    }
    Ok(MergeOutcome { merged, ours, theirs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{Counter, A, B, C, D};
    use proptest::prelude::*;

    fn set(attrs: &[AttributeName]) -> BTreeSet<AttributeName> {
        attrs.iter().copied().collect()
    }

    /// The intention condition evaluated quantifier by quantifier.
    fn literal_condition(
        ours: &BTreeSet<AttributeName>,
        theirs: &BTreeSet<AttributeName>,
        intentions: &[BTreeSet<AttributeName>],
    ) -> bool {
        ours.iter().any(|ai| {
            theirs.iter().any(|aj| {
                ai != aj
                    && intentions
                        .iter()
                        .any(|i| i.contains(ai) && i.contains(aj) && !(i.is_subset(ours) && i.is_subset(theirs)))
            })
        })
    }

    fn subsets(universe: &[AttributeName]) -> Vec<BTreeSet<AttributeName>> {
        (0..1u32 << universe.len())
            .map(|mask| {
                universe
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, a)| *a)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn diff_reports_changed_attributes() {
        let base = Counter::new([1, 2, 3, 4]);
        assert!(diff(&base, &base).unwrap().is_empty());
        let variant = Counter::new([0, 2, 3, 9]);
        assert_eq!(diff(&base, &variant).unwrap().changed(), &set(&[A, D]));
    }

    #[test]
    fn disjoint_dates_conflict() {
        let intentions = [set(&[A, B])];
        let c = intention_conflict(&AttributeDiff::new([A]), &AttributeDiff::new([B]), &intentions).unwrap();
        assert_eq!((c.ours, c.theirs), (A, B));
    }

    #[test]
    fn changing_the_whole_intention_on_both_sides_is_exempt() {
        let intentions = [set(&[A, B])];
        assert_eq!(
            intention_conflict(&AttributeDiff::new([A, B]), &AttributeDiff::new([A, B]), &intentions),
            None
        );
    }

    #[test]
    fn same_single_attribute_is_not_a_conflict() {
        let intentions = [set(&[A, B])];
        assert_eq!(
            intention_conflict(&AttributeDiff::new([A]), &AttributeDiff::new([A]), &intentions),
            None
        );
    }

    #[test]
    fn truth_table_on_two_attributes() {
        // Enumerated by hand from the condition over {a,b} with intention {a,b}:
        // only pairs with a distinct (ours, theirs) element in the intention and
        // not both sides covering {a,b} conflict.
        let universe = [A, B];
        let intentions = [set(&universe)];
        let expected_conflicts = [
            (set(&[A]), set(&[B])),
            (set(&[B]), set(&[A])),
            (set(&[A]), set(&[A, B])),
            (set(&[B]), set(&[A, B])),
            (set(&[A, B]), set(&[A])),
            (set(&[A, B]), set(&[B])),
        ];
        for ours in subsets(&universe) {
            for theirs in subsets(&universe) {
                let got = intention_conflict(
                    &AttributeDiff::new(ours.clone()),
                    &AttributeDiff::new(theirs.clone()),
                    &intentions,
                )
                .is_some();
                let want = expected_conflicts.contains(&(ours.clone(), theirs.clone()));
                assert_eq!(got, want, "{ours:?} vs {theirs:?}");
                assert_eq!(got, literal_condition(&ours, &theirs, &intentions));
            }
        }
    }

    #[test]
    fn reports_lexicographically_first_intention() {
        let intentions = [set(&[C, D]), set(&[A, B])];
        let c = intention_conflict(&AttributeDiff::new([A, C]), &AttributeDiff::new([B, D]), &intentions).unwrap();
        assert_eq!(c.intention, vec![A, B]);
    }

    #[test]
    fn both_sides_changing_last_writer_attributes_take_ours() {
        let ancestor = Counter::new([1, 5, 0, 0]);
        let to_commit = Counter::new([2, 6, 0, 0]);
        let committed = Counter::new([3, 7, 0, 0]);
        let out = merge_versions(&to_commit, &ancestor, &committed).unwrap();
        assert_eq!(out.merged.values, [2, 6, 0, 0]);
    }

    #[test]
    fn empty_diff_yields_committed() {
        let ancestor = Counter::new([1, 5, 0, 0]);
        let committed = Counter::new([1, 5, 4, 2]);
        let out = merge_versions(&ancestor, &ancestor, &committed).unwrap();
        assert_eq!(out.merged, committed);
    }

    #[test]
    fn custom_hook_and_non_mergeable() {
        let ancestor = Counter::new([0, 0, 10, 0]);
        let out = merge_versions(&Counter::new([0, 0, 13, 0]), &ancestor, &Counter::new([0, 0, 11, 0])).unwrap();
        assert_eq!(out.merged.values[2], 14);

        let err = merge_versions(&Counter::new([0, 0, 10, 1]), &ancestor, &Counter::new([0, 0, 10, 2])).unwrap_err();
        assert_eq!(err, MergeError::NonMergeable(D));
        // One-sided change of a non-mergeable attribute is adopted as is.
        let out = merge_versions(&Counter::new([0, 0, 10, 1]), &ancestor, &Counter::new([0, 0, 12, 0])).unwrap();
        assert_eq!(out.merged.values, [0, 0, 12, 1]);
    }

    #[test]
    fn intention_conflict_aborts_merge() {
        let ancestor = Counter::new([1, 5, 0, 0]);
        let err = merge_versions(&Counter::new([2, 5, 0, 0]), &ancestor, &Counter::new([1, 6, 0, 0])).unwrap_err();
        assert!(matches!(err, MergeError::Intention(_)));
    }

    fn arb_diff() -> impl Strategy<Value = BTreeSet<AttributeName>> {
        proptest::sample::subsequence(vec![A, B, C, D], 0..=4).prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn condition_is_symmetric(ours in arb_diff(), theirs in arb_diff(), i1 in arb_diff(), i2 in arb_diff()) {
            let intentions = [i1, i2];
            let ab = intention_conflict(&AttributeDiff::new(ours.clone()), &AttributeDiff::new(theirs.clone()), &intentions);
            let ba = intention_conflict(&AttributeDiff::new(theirs.clone()), &AttributeDiff::new(ours.clone()), &intentions);
            prop_assert_eq!(ab.is_some(), ba.is_some());
            prop_assert_eq!(ab.map(|c| c.intention), ba.map(|c| c.intention));
            let lit = literal_condition(&ours, &theirs, &intentions);
            prop_assert_eq!(intention_conflict(&AttributeDiff::new(ours), &AttributeDiff::new(theirs), &intentions).is_some(), lit);
        }

        #[test]
        fn untouched_attributes_keep_ancestor_value(
            base in proptest::array::uniform4(0i64..5),
            ours in proptest::array::uniform4(proptest::option::of(0i64..5)),
            theirs in proptest::array::uniform4(proptest::option::of(0i64..5)),
        ) {
            let ancestor = Counter::new(base);
            let apply = |changes: [Option<i64>; 4]| {
                let mut v = base;
                for (slot, c) in v.iter_mut().zip(changes) {
                    if let Some(c) = c { *slot = c; }
                }
                Counter::new(v)
            };
            let to_commit = apply(ours);
            let committed = apply(theirs);
            if let Ok(out) = merge_versions(&to_commit, &ancestor, &committed) {
                for (i, &b) in base.iter().enumerate() {
                    let mine = to_commit.values[i] != b;
                    let other = committed.values[i] != b;
                    match (mine, other) {
                        (false, false) => prop_assert_eq!(out.merged.values[i], b),
                        (true, false) => prop_assert_eq!(out.merged.values[i], to_commit.values[i]),
                        (false, true) => prop_assert_eq!(out.merged.values[i], committed.values[i]),
                        (true, true) => {}
                    }
                }
            }
        }
    }
}
