//! Valid orderings of subsets of `F_p \ {0}` through rectification.
//!
//! For `|A| ≥ 3` the pipeline rectifies `A ∪ {0}` at order `ℓ = |A| - 1`,
//! orders the integer image with [`crate::zseq`], and maps the result back.
//! Validity only compares sums of at most `|A| - 1` elements (the sums
//! `a_{i+1} + ... + a_j` for proper blocks), so it transfers through an
//! `(|A| - 1)`-Freiman isomorphism fixing `0`. If no dilation works, the
//! pipeline falls back to backtracking.

use serde::Serialize;
use thiserror::Error;

use crate::groups::{is_prime, Group, GroupError};
use crate::productseq::Layout;
use crate::rectify::{self, RectCertificate, RectifyError};
use crate::search::{self, SearchError, SearchLimits};
use crate::verify::{Ordering, VerifyError};
use crate::zseq::{self, ZseqError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FpseqError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the set is empty")]
    Empty,
    #[error("0 is not allowed in the input set")]
    Zero,
    #[error("residue {0} appears more than once")]
    Duplicate(u64),
    #[error("residue {residue} is not canonical modulo {p}")]
    NotCanonical { residue: u64, p: u64 },
    #[error("no valid ordering exists ({nodes} backtracking nodes explored)")]
    NoValidOrdering { nodes: u64 },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Rectify(#[from] RectifyError),
    #[error(transparent)]
    Zseq(#[from] ZseqError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// How an ordering was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Trivial,
    IntegerConstruction,
    RectifiedPullback,
    ProductConstruction,
    Backtracking,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Trivial => "trivial",
            Method::IntegerConstruction => "integer-construction",
            Method::RectifiedPullback => "rectified-pullback",
            Method::ProductConstruction => "product-construction",
            Method::Backtracking => "backtracking",
        }
    }
}

/// A verified ordering together with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencingResult {
    pub ordering: Ordering,
    pub method: Method,
    pub certificate: Option<RectCertificate>,
    pub verified: bool,
    /// Block layout used by the product construction.
    pub layout: Option<Layout>,
    /// Nodes explored by the backtracking fallback, if it ran.
    pub backtrack_nodes: u64,
}

impl SequencingResult {
    /// Wraps `ordering` after checking it, failing loudly if it is invalid.
    pub(crate) fn checked(ordering: Ordering, method: Method) -> Result<SequencingResult, String> {
        if !ordering.is_valid() {
            return Err(format!("{} produced an invalid ordering", method.as_str()));
        }
        Ok(SequencingResult { ordering, method, certificate: None, verified: true, layout: None, backtrack_nodes: 0 })
    }
}

/// `⌊ln p / ln ln p⌋` for `p ≥ 17`, and `1` for smaller primes.
pub fn graham_bound(p: u64) -> Result<u32, FpseqError> {
    if !is_prime(p) {
        return Err(FpseqError::NotPrime(p));
    }
    if p < 17 {
        return Ok(1);
    }
    let ln_p = (p as f64).ln();
    let ln_ln_p = ln_p.ln();
    let ratio = ln_p / ln_ln_p;
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-9 {
        // ratio >= n  <=>  p >= (ln p)^n
        let n = nearest as i32;
        return Ok(if p as f64 >= ln_p.powi(n) { n as u32 } else { n as u32 - 1 });
    }
    Ok(ratio.floor() as u32)
}

pub fn sequence_mod_p(set: &[u64], p: u64) -> Result<SequencingResult, FpseqError> {
    sequence_mod_p_with(set, p, &SearchLimits::default())
}

/// Orders `set ⊆ F_p \ {0}`; `limits` applies to the backtracking fallback.
pub fn sequence_mod_p_with(set: &[u64], p: u64, limits: &SearchLimits) -> Result<SequencingResult, FpseqError> {
    if !is_prime(p) {
        return Err(FpseqError::NotPrime(p));
    }
    let group = Group::prime_field(p)?;
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if let Some(&r) = sorted.iter().find(|&&r| r >= p) {
        return Err(FpseqError::NotCanonical { residue: r, p });
    }
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(FpseqError::Duplicate(w[0]));
    }
    match sorted.first() {
        None => return Err(FpseqError::Empty),
        Some(0) => return Err(FpseqError::Zero),
        _ => {}
    }
    let to_ordering = |residues: &[u64]| -> Result<Ordering, FpseqError> {
        let elems = residues.iter().map(|&r| group.canonicalize(&[r as i128])).collect::<Result<_, _>>()?;
        Ok(Ordering::new(group.clone(), elems)?)
    };

    if sorted.len() <= 2 {
        return SequencingResult::checked(to_ordering(&sorted)?, Method::Trivial).map_err(FpseqError::Invariant);
    }

    let ell = sorted.len() as u64 - 1;
    let mut domain = vec![0];
    domain.extend_from_slice(&sorted);
    if let Some(cert) = rectify::find_dilation(&domain, p, ell)? {
        let images = sorted.iter().map(|&a| cert.apply_iso(a)).collect::<Result<Vec<_>, _>>()?;
        let integer_order = zseq::sequence_integers(&images)?;
        let residues = integer_order
            .elems()
            .iter()
            .map(|e| cert.invert_iso(e.coords()[0]))
            .collect::<Result<Vec<_>, _>>()?;
        let mut result = SequencingResult::checked(to_ordering(&residues)?, Method::RectifiedPullback)
            .map_err(|e| FpseqError::Invariant(format!("pullback through {cert:?}: {e}")))?;
        result.certificate = Some(cert);
        return Ok(result);
    }

    let elems = to_ordering(&sorted)?.into_elems();
    let found = search::backtrack_search(&elems, &group, limits)?;
    match found.ordering {
        Some(o) => {
            let mut result = SequencingResult::checked(o, Method::Backtracking).map_err(FpseqError::Invariant)?;
            result.backtrack_nodes = found.nodes;
            Ok(result)
        }
        None => Err(FpseqError::NoValidOrdering { nodes: found.nodes }),
    }
}
