//! Brute-force oracles: lexicographic backtracking, exact counting of valid
//! orderings, and exhaustive sweeps over every subset of `F_p \ {0}`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fpseq::{self, FpseqError};
use crate::groups::{Element, Group, GroupError};
use crate::verify::{Ordering, VerifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("set of size {size} exceeds the search guard of {limit} (use force to override)")]
    TooLarge { size: usize, limit: usize },
    #[error("sweeping p = {0} exceeds the guard of p <= {SWEEP_MAX_PRIME} (use force to override)")]
    SweepTooLarge(u64),
    #[error("sweeping p = {0} needs more than 2^62 subsets")]
    SweepImpossible(u64),
    #[error("unknown engine {0:?}")]
    UnknownEngine(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Pipeline(Box<FpseqError>),
}

impl From<FpseqError> for SearchError {
    fn from(e: FpseqError) -> Self {
        SearchError::Pipeline(Box::new(e))
    }
}

/// Largest prime [`sweep`] accepts without `force`.
pub const SWEEP_MAX_PRIME: u64 = 17;

/// Resource guards for the exponential searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub backtrack_max: usize,
    pub count_max: usize,
    pub force: bool,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { backtrack_max: 20, count_max: 10, force: false }
    }
}

impl SearchLimits {
    pub fn forced() -> Self {
        SearchLimits { force: true, ..Self::default() }
    }

    fn guard(&self, size: usize, limit: usize) -> Result<(), SearchError> {
        if size > limit && !self.force {
            Err(SearchError::TooLarge { size, limit })
        } else {
            Ok(())
        }
    }
}

/// Outcome of a backtracking search together with the number of prefixes it
/// extended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Backtrack {
    pub ordering: Option<Ordering>,
    pub nodes: u64,
}

/// The lexicographically first valid ordering of `set`, if any.
pub fn backtrack_order(set: &[Element], group: &Group) -> Result<Option<Ordering>, SearchError> {
    Ok(backtrack_search(set, group, &SearchLimits::default())?.ordering)
}

/// Depth-first search over orderings in increasing element order, pruning
/// every prefix whose newest partial sum repeats an earlier one.
pub fn backtrack_search(set: &[Element], group: &Group, limits: &SearchLimits) -> Result<Backtrack, SearchError> {
    limits.guard(set.len(), limits.backtrack_max)?;
    let mut elems = Ordering::new(group.clone(), set.to_vec())?.into_elems();
    elems.sort();
    let n = elems.len();
    let mut used = vec![false; n];
    let mut path: Vec<usize> = Vec::with_capacity(n);
    let mut sums = vec![group.zero()];
    let mut seen: HashSet<Element> = HashSet::with_capacity(n);
    let mut next = vec![0usize; n + 1];
    let mut nodes = 0u64;
    loop {
        let depth = path.len();
        if depth == n {
            let found = path.iter().map(|&i| elems[i].clone()).collect();
            return Ok(Backtrack { ordering: Some(Ordering::new(group.clone(), found)?), nodes });
        }
        let mut extended = false;
        while next[depth] < n {
            let i = next[depth];
            next[depth] += 1;
            if used[i] {
                continue;
            }
            let s = group.add_unchecked(&sums[depth], &elems[i]);
            if seen.contains(&s) {
                continue;
            }
            nodes += 1;
            used[i] = true;
            path.push(i);
            seen.insert(s.clone());
            sums.push(s);
            next[depth + 1] = 0;
            extended = true;
            break;
        }
        if !extended {
            let Some(i) = path.pop() else {
                return Ok(Backtrack { ordering: None, nodes });
            };
            used[i] = false;
            let s = sums.pop().expect("one sum per path entry");
            seen.remove(&s);
        }
    }
}

/// Exact number of valid orderings of `set`, by enumerating all `|A|!`
/// permutations and checking each one.
pub fn count_valid_orderings(set: &[Element], group: &Group) -> Result<u64, SearchError> {
    count_valid_orderings_with(set, group, &SearchLimits::default())
}

pub fn count_valid_orderings_with(set: &[Element], group: &Group, limits: &SearchLimits) -> Result<u64, SearchError> {
    limits.guard(set.len(), limits.count_max)?;
    let mut elems = Ordering::new(group.clone(), set.to_vec())?.into_elems();
    elems.sort();
    let mut count = 0;
    let mut seen = HashSet::with_capacity(elems.len());
    loop {
        seen.clear();
        let mut acc = group.zero();
        if elems.iter().all(|e| {
            group.add_assign(&mut acc, e);
            seen.insert(acc.clone())
        }) {
            count += 1;
        }
        if !next_permutation(&mut elems) {
            return Ok(count);
        }
    }
}

fn next_permutation<T: Ord>(xs: &mut [T]) -> bool {
    let Some(i) = xs.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = xs.iter().rposition(|x| *x > xs[i]).expect("pivot has a larger successor");
    xs.swap(i, j);
    xs[i + 1..].reverse();
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Backtracking,
    Pipeline,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Backtracking => "backtracking",
            Engine::Pipeline => "pipeline",
        })
    }
}

impl FromStr for Engine {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "backtracking" => Ok(Engine::Backtracking),
            "pipeline" => Ok(Engine::Pipeline),
            _ => Err(SearchError::UnknownEngine(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeStats {
    pub subset_count: u64,
    pub all_sequenceable: bool,
    pub total_backtrack_nodes: u64,
    pub max_backtrack_nodes: u64,
    /// Summed per-subset wall time. Not serialized, so reports stay
    /// reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SizeStats {
    fn empty() -> Self {
        SizeStats {
            subset_count: 0,
            all_sequenceable: true,
            total_backtrack_nodes: 0,
            max_backtrack_nodes: 0,
            elapsed: Duration::ZERO,
        }
    }

    fn merge(mut self, other: &SizeStats) -> Self {
        self.subset_count += other.subset_count;
        self.all_sequenceable &= other.all_sequenceable;
        self.total_backtrack_nodes += other.total_backtrack_nodes;
        self.max_backtrack_nodes = self.max_backtrack_nodes.max(other.max_backtrack_nodes);
        self.elapsed += other.elapsed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub p: u64,
    pub max_size: usize,
    pub engine: Engine,
    pub per_size: BTreeMap<usize, SizeStats>,
    /// Subsets with no valid ordering, in increasing bitmask order.
    pub counterexamples: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct CsvRow {
    p: u64,
    size: usize,
    subset_count: u64,
    all_sequenceable: bool,
    total_backtrack_nodes: u64,
    max_backtrack_nodes: u64,
}

impl SweepReport {
    pub fn subset_total(&self) -> u64 {
        self.per_size.values().map(|s| s.subset_count).sum()
    }

    /// One row per `(p, size)`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (&size, s) in &self.per_size {
            w.serialize(CsvRow {
                p: self.p,
                size,
                subset_count: s.subset_count,
                all_sequenceable: s.all_sequenceable,
                total_backtrack_nodes: s.total_backtrack_nodes,
                max_backtrack_nodes: s.max_backtrack_nodes,
            })
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
    }

    fn merge(mut self, other: SweepReport) -> SweepReport {
        for (size, s) in other.per_size {
            let merged = self.per_size.remove(&size).unwrap_or_else(SizeStats::empty).merge(&s);
            self.per_size.insert(size, merged);
        }
        self.counterexamples.extend(other.counterexamples);
        self
    }
}

/// Runs `engine` on every nonempty subset of `F_p \ {0}` with at most
/// `max_size` elements. Subsets are bitmasks over `1..p`, processed in
/// parallel; the merged report does not depend on scheduling.
pub fn sweep(p: u64, max_size: usize, engine: Engine, limits: &SearchLimits) -> Result<SweepReport, SearchError> {
    let group = Group::prime_field(p)?;
    if p > SWEEP_MAX_PRIME && !limits.force {
        return Err(SearchError::SweepTooLarge(p));
    }
    if p - 1 > 62 {
        return Err(SearchError::SweepImpossible(p));
    }
    let max_size = max_size.min(p as usize - 1);
    let empty = || SweepReport { p, max_size, engine, per_size: BTreeMap::new(), counterexamples: Vec::new() };
    let mut report = (1u64..1 << (p - 1))
        .into_par_iter()
        .filter(|mask| mask.count_ones() as usize <= max_size)
        .map(|mask| -> Result<SweepReport, SearchError> {
            let residues: Vec<u64> = (1..p).filter(|a| mask >> (a - 1) & 1 == 1).collect();
            let start = Instant::now();
            let (found, nodes) = run_engine(&group, &residues, engine, limits)?;
            let stats = SizeStats {
                subset_count: 1,
                all_sequenceable: found,
                total_backtrack_nodes: nodes,
                max_backtrack_nodes: nodes,
                elapsed: start.elapsed(),
            };
            let mut one = empty();
            one.per_size.insert(residues.len(), stats);
            if !found {
                one.counterexamples.push(residues);
            }
            Ok(one)
        })
        .try_reduce(empty, |a, b| Ok(a.merge(b)))?;
    report.counterexamples.sort_by_key(|set| set.iter().map(|a| 1u64 << (a - 1)).sum::<u64>());
    Ok(report)
}

fn run_engine(group: &Group, residues: &[u64], engine: Engine, limits: &SearchLimits) -> Result<(bool, u64), SearchError> {
    match engine {
        Engine::Backtracking => {
            let elems = residues
                .iter()
                .map(|&a| group.canonicalize(&[a as i128]))
                .collect::<Result<Vec<_>, _>>()?;
            let b = backtrack_search(&elems, group, limits)?;
            Ok((b.ordering.is_some(), b.nodes))
        }
        Engine::Pipeline => {
            let p = group.prime().expect("sweeps run over prime fields");
            match fpseq::sequence_mod_p_with(residues, p, limits) {
                Ok(r) => Ok((true, r.backtrack_nodes)),
                Err(FpseqError::NoValidOrdering { nodes }) => Ok((false, nodes)),
                Err(e) => Err(e.into()),
            }
        }
    }
}
