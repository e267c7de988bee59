//! Ground-truth checks on orderings.
//!
//! Partial sums are compared as exact canonical elements through a hash set.
//! Indices in reports refer to prefix lengths: index `k` denotes the partial
//! sum `s_k = a_1 + ... + a_k`, with `s_0 = 0`.

use std::collections::{HashMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::groups::{Element, Group, GroupError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("element at position {0} is zero")]
    ZeroElement(usize),
    #[error("positions {0} and {1} hold the same element")]
    Duplicate(usize, usize),
}

/// A sequence of pairwise distinct nonzero elements of a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ordering {
    group: Group,
    elems: Vec<Element>,
}

impl Ordering {
    pub fn new(group: Group, elems: Vec<Element>) -> Result<Ordering, VerifyError> {
        let mut seen = HashMap::with_capacity(elems.len());
        for (i, e) in elems.iter().enumerate() {
            group.check(e)?;
            if e.is_zero() {
                return Err(VerifyError::ZeroElement(i));
            }
            if let Some(j) = seen.insert(e, i) {
                return Err(VerifyError::Duplicate(j, i));
            }
        }
        Ok(Ordering { group, elems })
    }

    /// Parses a sequence in the textual set syntax.
    pub fn parse(group: Group, s: &str) -> Result<Ordering, VerifyError> {
        let elems = group.parse_set(s)?;
        Ordering::new(group, elems)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn elems(&self) -> &[Element] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn into_elems(self) -> Vec<Element> {
        self.elems
    }

    pub fn reversed(&self) -> Ordering {
        let mut elems = self.elems.clone();
        elems.reverse();
        Ordering { group: self.group.clone(), elems }
    }

    /// `s_1, ..., s_m`.
    pub fn partial_sums(&self) -> Vec<Element> {
        let mut acc = self.group.zero();
        self.elems
            .iter()
            .map(|e| {
                self.group.add_assign(&mut acc, e);
                acc.clone()
            })
            .collect()
    }

    /// The first `(i, j)`, `1 <= i < j`, with `s_i == s_j`, minimizing `j`.
    pub fn first_collision(&self) -> Option<(usize, usize)> {
        let mut seen = HashMap::with_capacity(self.elems.len());
        for (k, s) in self.partial_sums().into_iter().enumerate() {
            if let Some(&i) = seen.get(&s) {
                return Some((i, k + 1));
            }
            seen.insert(s, k + 1);
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.elems.len());
        self.partial_sums().into_iter().all(|s| seen.insert(s))
    }

    /// Every `(i, j)` with `0 <= i < j <= m`, `(i, j) != (0, m)` and
    /// `a_{i+1} + ... + a_j = 0`, sorted lexicographically.
    pub fn zero_blocks(&self) -> Vec<(usize, usize)> {
        let m = self.elems.len();
        let mut classes: HashMap<Element, Vec<usize>> = HashMap::new();
        classes.entry(self.group.zero()).or_default().push(0);
        for (k, s) in self.partial_sums().into_iter().enumerate() {
            classes.entry(s).or_default().push(k + 1);
        }
        let mut blocks: Vec<(usize, usize)> = classes
            .values()
            .flat_map(|idx| {
                idx.iter()
                    .enumerate()
                    .flat_map(move |(a, &i)| idx[a + 1..].iter().map(move |&j| (i, j)))
            })
            .filter(|&b| b != (0, m))
            .collect();
        blocks.sort_unstable();
        blocks
    }

    pub fn analyze(&self) -> ValidityReport {
        let first_collision = self.first_collision();
        let valid = first_collision.is_none();
        ValidityReport {
            valid,
            first_collision,
            two_sided: valid && self.reversed().is_valid(),
            zero_blocks: self.zero_blocks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub first_collision: Option<(usize, usize)>,
    pub two_sided: bool,
    pub zero_blocks: Vec<(usize, usize)>,
}
