//! Valid orderings in `H × Z`, split on the sign of the last coordinate.
//!
//! Elements with positive last coordinate form `P`, those with negative last
//! coordinate form `N` (stored negated), and the rest form `M`, whose
//! `H`-parts are ordered by the sequencer for `H`. The pair `(P, N)` goes
//! through the same peeling recursion as in [`crate::zseq`], with the last
//! coordinate as the height and exact group equality for the peel test.
//! The three blocks are then tried in a fixed list of layouts, and the first
//! layout whose concatenation is valid wins.

use std::fmt;

use serde::Serialize;

use crate::fpseq::{Method, SequencingResult};
use crate::groups::{Element, Group, GroupSpec};
use crate::search::{self, SearchLimits};
use crate::verify::Ordering;
use crate::zseq::{pair_sequence_in, PairAlgebra};
use crate::Error;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ProductError {
    #[error("{0} is not of the form H x Z")]
    NotProductWithIntegers(GroupSpec),
    #[error("the set is empty")]
    Empty,
}

/// Order in which the `M`, `P` and `N` blocks are concatenated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layout {
    Mpn,
    Pmn,
    Pnm,
    Nmp,
    Mnp,
    Npm,
}

impl Layout {
    /// The search order.
    pub const ALL: [Layout; 6] = [Layout::Mpn, Layout::Pmn, Layout::Pnm, Layout::Nmp, Layout::Mnp, Layout::Npm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Layout::Mpn => "MPN",
            Layout::Pmn => "PMN",
            Layout::Pnm => "PNM",
            Layout::Nmp => "NMP",
            Layout::Mnp => "MNP",
            Layout::Npm => "NPM",
        }
    }

    fn blocks(&self) -> [Block; 3] {
        use Block::*;
        match self {
            Layout::Mpn => [M, P, N],
            Layout::Pmn => [P, M, N],
            Layout::Pnm => [P, N, M],
            Layout::Nmp => [N, M, P],
            Layout::Mnp => [M, N, P],
            Layout::Npm => [N, P, M],
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Layout {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Clone, Copy)]
enum Block {
    M,
    P,
    N,
}

/// Partition of a set by the sign of the last coordinate. `negatives` holds
/// the negations of the elements with negative last coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriSplit {
    pub positives: Vec<Element>,
    pub middle: Vec<Element>,
    pub negatives: Vec<Element>,
}

pub fn tri_split(set: &[Element], group: &Group) -> Result<TriSplit, Error> {
    let elems = Ordering::new(group.clone(), set.to_vec())?.into_elems();
    let mut split = TriSplit { positives: Vec::new(), middle: Vec::new(), negatives: Vec::new() };
    for e in elems {
        let last = *e.coords().last().expect("products have coordinates");
        match last.signum() {
            1 => split.positives.push(e),
            0 => split.middle.push(e),
            _ => split.negatives.push(group.neg(&e)?),
        }
    }
    Ok(split)
}

struct ElementAlgebra<'a> {
    group: &'a Group,
}

impl PairAlgebra for ElementAlgebra<'_> {
    type Item = Element;
    type Sum = Element;

    fn zero(&self) -> Element {
        self.group.zero()
    }
    fn add(&self, s: &Element, x: &Element) -> Element {
        self.group.add_unchecked(s, x)
    }
    fn sub(&self, s: &Element, x: &Element) -> Element {
        self.group.add_unchecked(s, &self.group.neg(x).expect("same group"))
    }
    fn height(&self, s: &Element) -> i128 {
        *s.coords().last().expect("products have coordinates")
    }
}

/// `H` for a product `H × Z`, or `None` when `H` is trivial.
fn factor(spec: &GroupSpec) -> Result<Option<GroupSpec>, Error> {
    match spec {
        GroupSpec::Product(cs) if cs.last() == Some(&GroupSpec::Integers) => Ok(match cs.len() {
            1 => None,
            2 => Some(cs[0].clone()),
            n => Some(GroupSpec::Product(cs[..n - 1].to_vec())),
        }),
        other => Err(ProductError::NotProductWithIntegers(other.clone()).into()),
    }
}

pub fn sequence_product(set: &[Element], group: &Group) -> Result<SequencingResult, Error> {
    sequence_product_with(set, group, &SearchLimits::default())
}

pub fn sequence_product_with(set: &[Element], group: &Group, limits: &SearchLimits) -> Result<SequencingResult, Error> {
    let h_spec = factor(group.spec())?;
    let split = tri_split(set, group)?;
    let n = set.len();
    if n == 0 {
        return Err(ProductError::Empty.into());
    }
    if n == 1 {
        let o = Ordering::new(group.clone(), set.to_vec())?;
        return SequencingResult::checked(o, Method::Trivial).map_err(Error::Invariant);
    }

    let m_block: Vec<Element> = match h_spec {
        Some(spec) if !split.middle.is_empty() => {
            let h = Group::new(spec)?;
            let h_parts = split
                .middle
                .iter()
                .map(|e| h.canonicalize(&e.coords()[..h.rank()]))
                .collect::<Result<Vec<_>, _>>()?;
            let inner = crate::sequence_with(&h, &h_parts, limits)?;
            inner
                .ordering
                .elems()
                .iter()
                .map(|e| {
                    let mut raw = e.coords().to_vec();
                    raw.push(0);
                    group.canonicalize(&raw)
                })
                .collect::<Result<_, _>>()?
        }
        _ => Vec::new(),
    };

    let alg = ElementAlgebra { group };
    let (p_order, n_order) = pair_sequence_in(&alg, split.positives, split.negatives)?;
    let p_block: Vec<Element> = p_order.into_iter().rev().collect();
    let n_block = n_order.iter().map(|e| group.neg(e)).collect::<Result<Vec<_>, _>>()?;

    for layout in Layout::ALL {
        let elems: Vec<Element> = layout
            .blocks()
            .iter()
            .flat_map(|b| match b {
                Block::M => &m_block,
                Block::P => &p_block,
                Block::N => &n_block,
            })
            .cloned()
            .collect();
        let o = Ordering::new(group.clone(), elems)?;
        if o.is_valid() {
            let mut r = SequencingResult::checked(o, Method::ProductConstruction).map_err(Error::Invariant)?;
            r.layout = Some(layout);
            return Ok(r);
        }
    }

    let found = search::backtrack_search(set, group, limits)?;
    match found.ordering {
        Some(o) => {
            let mut r = SequencingResult::checked(o, Method::Backtracking).map_err(Error::Invariant)?;
            r.backtrack_nodes = found.nodes;
            Ok(r)
        }
        None => Err(Error::NoValidOrdering),
    }
}
