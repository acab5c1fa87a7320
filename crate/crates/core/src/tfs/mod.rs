//! Typed feature structures: type hierarchy, unification, subsumption.

mod dump;
pub mod fs;
pub mod hierarchy;
mod unify;

use std::fmt;

pub use dump::dump;
pub use fs::{parse_path, subsumes, unify, unify_at, unify_many_and_restrict, with_atom, FeatureStructure, NodeId};
pub use hierarchy::{BuildError, FeatId, HierarchyError, TypeHierarchy, TypeId, STRING, TOP};

/// Why a unification failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailReason {
    TypeClash(String, String),
    AtomClash(String, String),
    Cycle,
    Constraint(String),
}

/// A failed unification, with the path at which the clash was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnifyFailure {
    pub path: Vec<String>,
    pub reason: FailReason,
}

impl UnifyFailure {
    pub fn path_string(&self) -> String {
        self.path.join(".")
    }
}

impl fmt::Display for UnifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.path.is_empty() {
            "<root>".to_string()
        } else {
            self.path_string()
        };
        match &self.reason {
            FailReason::TypeClash(a, b) => write!(f, "type clash at {at}: {a} vs {b}"),
            FailReason::AtomClash(a, b) => write!(f, "value clash at {at}: \"{a}\" vs \"{b}\""),
            FailReason::Cycle => write!(f, "cyclic structure at {at}"),
            FailReason::Constraint(m) => write!(f, "constraint failure at {at}: {m}"),
        }
    }
}

impl std::error::Error for UnifyFailure {}

#[cfg(test)]
mod tests;
