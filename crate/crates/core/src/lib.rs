//! Valid orderings of finite subsets of abelian groups.
//!
//! An ordering `a_1, ..., a_m` of a set is *valid* when its partial sums
//! `a_1, a_1 + a_2, ..., a_1 + ... + a_m` are pairwise distinct. This crate
//! constructs valid orderings with provenance and checks them exactly:
//!
//! - [`zseq`] orders any finite set of nonzero integers, positives first;
//! - [`rectify`] finds explicit Freiman isomorphisms from small subsets of
//!   `F_p` to the integers, with checkable certificates;
//! - [`fpseq`] combines the two to order subsets of `F_p \ {0}`;
//! - [`productseq`] handles groups of the form `H × Z`;
//! - [`search`] provides brute-force oracles and exhaustive sweeps;
//! - [`verify`] is the ground truth every other module reports against.
//!
//! ```
//! use sequenceable::{sequence, Group, Method};
//!
//! let f13 = Group::prime_field(13)?;
//! let set = f13.parse_set("1,7,11")?;
//! let result = sequence(&f13, &set)?;
//! assert_eq!(result.method, Method::RectifiedPullback);
//! assert!(result.ordering.is_valid());
//! # Ok::<(), sequenceable::Error>(())
//! ```

pub mod corpus;
pub mod fpseq;
pub mod groups;
pub mod productseq;
pub mod rectify;
pub mod search;
pub mod verify;
pub mod zseq;

use thiserror::Error;

pub use fpseq::{Method, SequencingResult};
pub use groups::{Element, Group, GroupSpec};
pub use rectify::RectCertificate;
pub use search::{Engine, SearchLimits};
pub use verify::{Ordering, ValidityReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Group(#[from] groups::GroupError),
    #[error(transparent)]
    Verify(#[from] verify::VerifyError),
    #[error(transparent)]
    Zseq(#[from] zseq::ZseqError),
    #[error(transparent)]
    Rectify(#[from] rectify::RectifyError),
    #[error(transparent)]
    Fpseq(#[from] fpseq::FpseqError),
    #[error(transparent)]
    Search(#[from] search::SearchError),
    #[error(transparent)]
    Product(#[from] productseq::ProductError),
    #[error("no valid ordering exists")]
    NoValidOrdering,
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Orders `set` with the best construction available for `group`.
pub fn sequence(group: &Group, set: &[Element]) -> Result<SequencingResult, Error> {
    sequence_with(group, set, &SearchLimits::default())
}

/// Like [`sequence`], with explicit guards for any backtracking fallback.
///
/// Dispatch: `Z` uses [`zseq`], `F_p` uses [`fpseq`], products ending in `Z`
/// use [`productseq`], and everything else is searched by backtracking.
/// Sets of size at most one are returned as they are.
pub fn sequence_with(group: &Group, set: &[Element], limits: &SearchLimits) -> Result<SequencingResult, Error> {
    let ordering = Ordering::new(group.clone(), set.to_vec())?;
    if ordering.len() <= 1 {
        return SequencingResult::checked(ordering, Method::Trivial).map_err(Error::Invariant);
    }
    match group.spec() {
        GroupSpec::Integers => {
            let ints: Vec<i128> = set.iter().map(|e| e.coords()[0]).collect();
            SequencingResult::checked(zseq::sequence_integers(&ints)?, Method::IntegerConstruction)
                .map_err(Error::Invariant)
        }
        GroupSpec::PrimeField(p) => {
            let residues: Vec<u64> = set.iter().map(|e| e.coords()[0] as u64).collect();
            fpseq::sequence_mod_p_with(&residues, *p, limits).map_err(|e| match e {
                fpseq::FpseqError::NoValidOrdering { .. } => Error::NoValidOrdering,
                other => other.into(),
            })
        }
        GroupSpec::Product(cs) if cs.last() == Some(&GroupSpec::Integers) => {
            productseq::sequence_product_with(set, group, limits)
        }
        _ => {
            let found = search::backtrack_search(set, group, limits)?;
            let ordering = found.ordering.ok_or(Error::NoValidOrdering)?;
            let mut r = SequencingResult::checked(ordering, Method::Backtracking).map_err(Error::Invariant)?;
            r.backtrack_nodes = found.nodes;
            Ok(r)
        }
    }
}


#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/verify.md")]
    mod verify {}
    #[doc = include_str!("../../../book/src/integers.md")]
    mod integers {}
    #[doc = include_str!("../../../book/src/rectification.md")]
    mod rectification {}
    #[doc = include_str!("../../../book/src/prime-fields.md")]
    mod prime_fields {}
    #[doc = include_str!("../../../book/src/products.md")]
    mod products {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../docs/formats.md")]
    mod formats {}
}
