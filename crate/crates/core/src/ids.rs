use std::fmt;
use std::str::FromStr;

/// A logical, totally ordered version number.
///
/// Every successful functionality commit produces one version number, and
/// every aggregate version it writes carries that number. `VersionNumber::ZERO`
/// is reserved for "nothing committed yet"; the first commit gets version 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VersionNumber(pub u64);

impl VersionNumber {
    pub const ZERO: VersionNumber = VersionNumber(0);

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn next(self) -> VersionNumber {
        VersionNumber(self.0 + 1)
    }
}

impl fmt::Display for VersionNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u64> for VersionNumber {
    fn from(v: u64) -> Self {
        VersionNumber(v)
    }
}

/// Identity of an aggregate across all of its versions. Never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AggregateId(pub u64);

impl fmt::Display for AggregateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for AggregateId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(AggregateId)
    }
}

/// Lifecycle of an aggregate version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum LifecycleState {
    #[default]
    Active,
    Inactive,
    Deleted,
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LifecycleState::Active => "ACTIVE",
            LifecycleState::Inactive => "INACTIVE",
            LifecycleState::Deleted => "DELETED",
        })
    }
}
