//! Valid orderings of finite sets of nonzero integers.
//!
//! The set is split into its positive part `P` and the absolute values `N`
//! of its negative part. [`pair_sequence`] orders both so that no nonempty
//! prefix sum of one equals a prefix sum of the other, except possibly the
//! two full sums. Reading `P` backwards and then `-N` forwards gives a valid
//! ordering with all positives first, and its reverse is valid too.

use std::collections::HashMap;

use thiserror::Error;

use crate::groups::{Group, GroupError, MAX_INTEGER_MAGNITUDE, MAX_SET_SIZE};
use crate::verify::{Ordering, VerifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZseqError {
    #[error("0 is not allowed in the input set")]
    Zero,
    #[error("{0} is not a positive integer")]
    NonPositive(i128),
    #[error("{0} appears more than once")]
    Duplicate(i128),
    #[error("{0} exceeds the ingestion bound")]
    Magnitude(i128),
    #[error("set has more than {MAX_SET_SIZE} elements")]
    TooLarge,
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// `A = P ∪ (-N)`, both parts sorted increasingly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSplit {
    pub positives: Vec<i128>,
    pub negatives: Vec<i128>,
}

pub fn split_signs(set: &[i128]) -> Result<SignSplit, ZseqError> {
    check_input(set)?;
    if set.contains(&0) {
        return Err(ZseqError::Zero);
    }
    let mut positives: Vec<i128> = set.iter().copied().filter(|&x| x > 0).collect();
    let mut negatives: Vec<i128> = set.iter().filter(|&&x| x < 0).map(|&x| -x).collect();
    positives.sort_unstable();
    negatives.sort_unstable();
    Ok(SignSplit { positives, negatives })
}

/// Orderings of `P` and `N` with disjoint prefix sums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairOrdering {
    pub p_order: Vec<i128>,
    pub n_order: Vec<i128>,
}

impl PairOrdering {
    /// `Q_i != W_j` for every `(i, j)` other than `(0, 0)` and `(|P|, |N|)`.
    pub fn is_prefix_disjoint(&self) -> bool {
        let mut q: HashMap<i128, Vec<usize>> = HashMap::new();
        let mut acc = 0;
        q.entry(0).or_default().push(0);
        for (i, x) in self.p_order.iter().enumerate() {
            acc += x;
            q.entry(acc).or_default().push(i + 1);
        }
        let ends = (self.p_order.len(), self.n_order.len());
        let mut acc = 0;
        let w = std::iter::once(0).chain(self.n_order.iter().map(|x| {
            acc += x;
            acc
        }));
        for (j, wj) in w.enumerate() {
            if let Some(is) = q.get(&wj) {
                if is.iter().any(|&i| (i, j) != (0, 0) && (i, j) != ends) {
                    return false;
                }
            }
        }
        true
    }

    /// `p_|P|, ..., p_1, -n_1, ..., -n_|N|`.
    pub fn assemble(&self) -> Vec<i128> {
        self.p_order.iter().rev().copied().chain(self.n_order.iter().map(|&x| -x)).collect()
    }
}

/// Arithmetic the pair recursion needs: sums with a cancellation law and an
/// integer height that is positive on every item.
pub(crate) trait PairAlgebra {
    type Item: Clone + Ord;
    type Sum: Clone + Eq;

    fn zero(&self) -> Self::Sum;
    fn add(&self, s: &Self::Sum, x: &Self::Item) -> Self::Sum;
    fn sub(&self, s: &Self::Sum, x: &Self::Item) -> Self::Sum;
    fn height(&self, s: &Self::Sum) -> i128;
}

struct IntegerAlgebra;

impl PairAlgebra for IntegerAlgebra {
    type Item = i128;
    type Sum = i128;

    fn zero(&self) -> i128 {
        0
    }
    fn add(&self, s: &i128, x: &i128) -> i128 {
        s + x
    }
    fn sub(&self, s: &i128, x: &i128) -> i128 {
        s - x
    }
    fn height(&self, s: &i128) -> i128 {
        *s
    }
}

/// Ordered positive and negated-negative sides.
pub(crate) type Pair<T> = (Vec<T>, Vec<T>);

/// Runs the induction on `|P| + |N|` without recursion.
///
/// Each step orients the pair so the `P` role has the larger height, stops
/// once that side has at most one item, and otherwise peels off the smallest
/// `p*` whose removal leaves `sum(P) != sum(N)`. Peeled items are appended to
/// their side in reverse peeling order on top of the increasingly ordered base.
pub(crate) fn pair_sequence_in<A: PairAlgebra>(
    alg: &A,
    mut p: Vec<A::Item>,
    mut n: Vec<A::Item>,
) -> Result<Pair<A::Item>, ZseqError> {
    p.sort();
    n.sort();
    let total = |xs: &[A::Item]| xs.iter().fold(alg.zero(), |s, x| alg.add(&s, x));
    let mut sums = [total(&p), total(&n)];
    let mut sides = [p, n];
    let mut role = 0;
    let mut peeled: Vec<(usize, A::Item)> = Vec::new();
    loop {
        if alg.height(&sums[role]) < alg.height(&sums[1 - role]) {
            role = 1 - role;
        }
        if sides[role].len() <= 1 {
            break;
        }
        let target = &sums[1 - role];
        let idx = sides[role]
            .iter()
            .position(|x| alg.sub(&sums[role], x) != *target)
            .ok_or_else(|| ZseqError::Invariant("no admissible element to peel".into()))?;
        let x = sides[role].remove(idx);
        sums[role] = alg.sub(&sums[role], &x);
        peeled.push((role, x));
    }
    let [mut p_order, mut n_order] = sides;
    while let Some((side, x)) = peeled.pop() {
        if side == 0 {
            p_order.push(x);
        } else {
            n_order.push(x);
        }
    }
    Ok((p_order, n_order))
}

pub fn pair_sequence(positives: &[i128], negatives: &[i128]) -> Result<PairOrdering, ZseqError> {
    for part in [positives, negatives] {
        check_input(part)?;
        if let Some(&x) = part.iter().find(|&&x| x <= 0) {
            return Err(ZseqError::NonPositive(x));
        }
    }
    if positives.len() + negatives.len() > MAX_SET_SIZE {
        return Err(ZseqError::TooLarge);
    }
    let (p_order, n_order) = pair_sequence_in(&IntegerAlgebra, positives.to_vec(), negatives.to_vec())?;
    Ok(PairOrdering { p_order, n_order })
}

/// A valid, two-sided ordering of `set` with all positive elements first.
pub fn sequence_integers(set: &[i128]) -> Result<Ordering, ZseqError> {
    let split = split_signs(set)?;
    let pair = pair_sequence(&split.positives, &split.negatives)?;
    let group = Group::integers();
    let elems = pair
        .assemble()
        .into_iter()
        .map(|x| group.canonicalize(&[x]))
        .collect::<Result<Vec<_>, _>>()?;
    let ordering = Ordering::new(group, elems)?;
    if !ordering.is_valid() {
        return Err(ZseqError::Invariant(format!("constructed ordering of {set:?} is not valid")));
    }
    Ok(ordering)
}

fn check_input(set: &[i128]) -> Result<(), ZseqError> {
    if set.len() > MAX_SET_SIZE {
        return Err(ZseqError::TooLarge);
    }
    let mut seen = std::collections::HashSet::with_capacity(set.len());
    for &x in set {
        if x.unsigned_abs() > MAX_INTEGER_MAGNITUDE as u128 {
            return Err(ZseqError::Magnitude(x));
        }
        if !seen.insert(x) {
            return Err(ZseqError::Duplicate(x));
        }
    }
    Ok(())
}
