//! Defines a new aggregate type and lets the generic machinery version and
//! merge it. Two units of work start from the same snapshot: one renames the
//! account, the other deposits. Both commit, because the merge keeps each
//! side's change.

use std::sync::Arc;

use tcc::{Aggregate, AggregateContract, AttributeName, MergeRule, NoEvent, NonMergeable, UnitOfWork, VersionStore};

const OWNER: AttributeName = AttributeName("owner");
const BALANCE: AttributeName = AttributeName("balance");

static ACCOUNT: AggregateContract = AggregateContract {
    type_name: "Account",
    attributes: &[OWNER, BALANCE],
    changeable_fields: &[OWNER, BALANCE],
    intentions: &[],
    merge_hooks: &[(OWNER, MergeRule::LastWriterWins), (BALANCE, MergeRule::Custom)],
    intra_invariants: &["NON_NEGATIVE"],
};

#[derive(Debug, Clone, PartialEq)]
struct Account {
    owner: String,
    balance: i64,
}

impl Aggregate for Account {
    type Event = NoEvent;

    fn contract(&self) -> &'static AggregateContract {
        &ACCOUNT
    }

    fn check_invariant(&self, name: &str) -> bool {
        name != "NON_NEGATIVE" || self.balance >= 0
    }

    fn attribute_eq(&self, other: &Self, attribute: AttributeName) -> bool {
        match attribute.as_str() {
            "owner" => self.owner == other.owner,
            _ => self.balance == other.balance,
        }
    }

    fn copy_attribute(&mut self, source: &Self, attribute: AttributeName) {
        match attribute.as_str() {
            "owner" => self.owner = source.owner.clone(),
            _ => self.balance = source.balance,
        }
    }

    // Deposits commute, so both deltas are applied.
    fn merge_attribute(
        &mut self,
        attribute: AttributeName,
        to_commit: &Self,
        committed: &Self,
        ancestor: &Self,
    ) -> Result<(), NonMergeable> {
        if attribute != BALANCE {
            return Err(NonMergeable);
        }
        self.balance = committed.balance + (to_commit.balance - ancestor.balance);
        Ok(())
    }
}

fn main() -> tcc::Result<()> {
    ACCOUNT.validate().expect("contract is well formed");
    let store = Arc::new(VersionStore::<Account>::simulation());

    let mut open = UnitOfWork::begin(&store, "openAccount");
    let id = open
        .register_new(Account {
            owner: "ann".into(),
            balance: 100,
        })
        .aggregate_id();
    open.commit()?;

    let mut rename = UnitOfWork::begin(&store, "rename");
    let mut deposit = UnitOfWork::begin(&store, "deposit");

    let mut copy = rename.read(id)?;
    copy.payload_mut().owner = "anna".into();
    rename.register_changed(copy)?;

    let mut copy = deposit.read(id)?;
    copy.payload_mut().balance += 50;
    deposit.register_changed(copy)?;

    println!("rename committed at {}", rename.commit()?);
    println!("deposit committed at {} after merging", deposit.commit()?);

    let latest = store.latest(id).expect("account exists");
    println!("account {id} v{}: {:?}", latest.version, latest.payload);
    assert_eq!(latest.payload.owner, "anna");
    assert_eq!(latest.payload.balance, 150);

    let mut overdraw = UnitOfWork::begin(&store, "withdraw");
    let mut copy = overdraw.read(id)?;
    copy.payload_mut().balance -= 500;
    overdraw.register_changed(copy)?;
    match overdraw.commit() {
        Err(e) => println!("overdraft rejected: {} ({e})", e.code()),
        Ok(v) => unreachable!("overdraft committed at {v}"),
    }
    Ok(())
}
