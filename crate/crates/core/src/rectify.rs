//! Rectification of small subsets of `F_p` by dilation.
//!
//! A set `A ∋ 0` of residues is multiplied by a unit `λ`; if the dilated set
//! fits in a cyclic window of width `w` with `ℓ·w < p`, then reading each
//! residue as an integer inside that window is an `ℓ`-Freiman isomorphism
//! onto a set of integers: two `ℓ`-fold sums of window representatives differ
//! by less than `p`, so they agree exactly when they agree mod `p`. The
//! representatives are shifted so that `0 ↦ 0`, which makes the map a
//! `k`-Freiman isomorphism for every `k ≤ ℓ` as well.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::is_prime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RectifyError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the set must contain 0")]
    MissingZero,
    #[error("the residue set is empty")]
    Empty,
    #[error("residue {residue} is not canonical modulo {p}")]
    NotCanonical { residue: u64, p: u64 },
    #[error("ell must be at least 2, got {0}")]
    EllTooSmall(u64),
    #[error("residue {0} is not in the certificate's domain")]
    NotInDomain(u64),
    #[error("integer {0} is not in the certificate's image")]
    NotInImage(i128),
    #[error("exhaustive check needs {0} tuple pairs, above the 10^8 limit")]
    Infeasible(u128),
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Upper limit on `k^(2ℓ)` for [`freiman_verify`].
pub const FREIMAN_VERIFY_LIMIT: u128 = 100_000_000;

/// An explicit `ℓ`-Freiman isomorphism from a set of residues mod `p` onto a
/// set of integers: `a ↦ rep(λ·a) - rep(0)`, where `rep` reads a residue as
/// the integer in `[window_start, window_start + width]` congruent to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CertificateRepr", into = "CertificateRepr")]
pub struct RectCertificate {
    p: u64,
    ell: u64,
    lambda: u64,
    window_start: u64,
    width: u64,
    mapping: BTreeMap<u64, i128>,
    inverse: HashMap<i128, u64>,
}

#[derive(Serialize, Deserialize)]
struct CertificateRepr {
    p: u64,
    ell: u64,
    lambda: u64,
    window_start: u64,
    width: u64,
    mapping: Vec<(u64, i128)>,
}

impl From<RectCertificate> for CertificateRepr {
    fn from(c: RectCertificate) -> Self {
        CertificateRepr {
            p: c.p,
            ell: c.ell,
            lambda: c.lambda,
            window_start: c.window_start,
            width: c.width,
            mapping: c.mapping.into_iter().collect(),
        }
    }
}

impl TryFrom<CertificateRepr> for RectCertificate {
    type Error = RectifyError;

    fn try_from(r: CertificateRepr) -> Result<Self, Self::Error> {
        let n = r.mapping.len();
        let mapping: BTreeMap<u64, i128> = r.mapping.into_iter().collect();
        if mapping.len() != n {
            return Err(RectifyError::Malformed("repeated source residue".into()));
        }
        let cert = RectCertificate::from_parts(r.p, r.ell, r.lambda, r.window_start, r.width, mapping);
        cert.check_structure()?;
        Ok(cert)
    }
}

impl RectCertificate {
    fn from_parts(p: u64, ell: u64, lambda: u64, window_start: u64, width: u64, mapping: BTreeMap<u64, i128>) -> Self {
        let inverse = mapping.iter().map(|(&a, &b)| (b, a)).collect();
        RectCertificate { p, ell, lambda, window_start, width, mapping, inverse }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn window_start(&self) -> u64 {
        self.window_start
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    /// Source residue to integer image, ordered by source.
    pub fn mapping(&self) -> &BTreeMap<u64, i128> {
        &self.mapping
    }

    pub fn apply_iso(&self, a: u64) -> Result<i128, RectifyError> {
        self.mapping.get(&a).copied().ok_or(RectifyError::NotInDomain(a))
    }

    pub fn invert_iso(&self, b: i128) -> Result<u64, RectifyError> {
        self.inverse.get(&b).copied().ok_or(RectifyError::NotInImage(b))
    }

    /// Integer representative of residue `0` before the shift.
    fn zero_rep(&self) -> i128 {
        let (p, s) = (self.p as i128, self.window_start as i128);
        s + (-s).rem_euclid(p)
    }

    /// Checks every structural invariant: primality, `ℓ·width < p`,
    /// `0 ↦ 0`, each image being the shifted window representative of
    /// `λ·a`, injectivity, and the image spanning exactly `width`.
    pub fn check_structure(&self) -> Result<(), RectifyError> {
        let bad = |m: &str| Err(RectifyError::Malformed(m.to_string()));
        let p = self.p;
        if !is_prime(p) {
            return Err(RectifyError::NotPrime(p));
        }
        if self.ell < 2 {
            return Err(RectifyError::EllTooSmall(self.ell));
        }
        if !(1..p).contains(&self.lambda) || self.window_start >= p {
            return bad("lambda or window start out of range");
        }
        if (self.ell as u128) * (self.width as u128) >= p as u128 {
            return bad("ell * width must be below p");
        }
        if self.mapping.get(&0) != Some(&0) {
            return bad("0 must map to 0");
        }
        let r0 = self.zero_rep();
        let lo = self.window_start as i128;
        let hi = lo + self.width as i128;
        for (&a, &b) in &self.mapping {
            if a >= p {
                return bad("source residue not canonical");
            }
            let rep = b + r0;
            if rep < lo || rep > hi {
                return bad("image outside the window");
            }
            let dilated = (self.lambda as u128 * a as u128 % p as u128) as i128;
            if rep.rem_euclid(p as i128) != dilated {
                return bad("image not congruent to the dilated residue");
            }
        }
        if self.inverse.len() != self.mapping.len() {
            return bad("images are not distinct");
        }
        let (min, max) = (self.inverse.keys().min().unwrap(), self.inverse.keys().max().unwrap());
        if (max - min) as u128 != self.width as u128 {
            return bad("image span differs from width");
        }
        Ok(())
    }
}

/// Start and width of a shortest cyclic arc of `Z_p` covering `residues`.
///
/// The arc begins right after the largest gap between cyclically consecutive
/// residues. When several gaps tie, the one beginning at the smallest residue
/// wins (so the wrap-around gap is preferred only when strictly larger).
pub fn min_cyclic_window(residues: &[u64], p: u64) -> Result<(u64, u64), RectifyError> {
    let mut r = residues.to_vec();
    r.sort_unstable();
    r.dedup();
    let (&first, &last) = match (r.first(), r.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(RectifyError::Empty),
    };
    if last >= p {
        return Err(RectifyError::NotCanonical { residue: last, p });
    }
    let mut best_gap = 0;
    let mut start = first;
    for w in r.windows(2) {
        if w[1] - w[0] > best_gap {
            best_gap = w[1] - w[0];
            start = w[1];
        }
    }
    let wrap = first + p - last;
    if wrap > best_gap {
        best_gap = wrap;
        start = first;
    }
    Ok((start, p - best_gap))
}

/// `⌈log p / log ℓ⌉`: the least `k` with `ℓ^k ≥ p`.
pub fn lev_bound(p: u64, ell: u64) -> Result<u32, RectifyError> {
    if ell < 2 {
        return Err(RectifyError::EllTooSmall(ell));
    }
    let mut k = 0;
    let mut power: u128 = 1;
    while power < p as u128 {
        power *= ell as u128;
        k += 1;
    }
    Ok(k)
}

/// Scans `λ = 1, 2, ..., p - 1` and returns the certificate for the first
/// dilation whose minimal window satisfies `ℓ·width < p`, or `None`.
///
/// A dilation is guaranteed when `p ≥ (2ℓ + 1)^(|A| - 1)` (pigeonhole over
/// `λ`). Sets up to [`lev_bound`] are always `ℓ`-rectifiable, but not
/// necessarily by a dilation into a short window, so `None` can occur there:
/// `{0, 2, 4, 5, 10}` mod 19 at `ℓ = 2` is one example.
pub fn find_dilation(set: &[u64], p: u64, ell: u64) -> Result<Option<RectCertificate>, RectifyError> {
    if !is_prime(p) {
        return Err(RectifyError::NotPrime(p));
    }
    if ell < 2 {
        return Err(RectifyError::EllTooSmall(ell));
    }
    let mut domain = set.to_vec();
    domain.sort_unstable();
    domain.dedup();
    if let Some(&a) = domain.iter().find(|&&a| a >= p) {
        return Err(RectifyError::NotCanonical { residue: a, p });
    }
    if domain.first() != Some(&0) {
        return Err(RectifyError::MissingZero);
    }
    let mut dilated = vec![0u64; domain.len()];
    for lambda in 1..p {
        for (d, &a) in dilated.iter_mut().zip(&domain) {
            *d = (lambda as u128 * a as u128 % p as u128) as u64;
        }
        let (start, width) = min_cyclic_window(&dilated, p)?;
        if (ell as u128) * (width as u128) < p as u128 {
            let r0 = start as i128 + (-(start as i128)).rem_euclid(p as i128);
            let mapping = domain
                .iter()
                .zip(&dilated)
                .map(|(&a, &d)| {
                    let rep = start as i128 + (d as i128 - start as i128).rem_euclid(p as i128);
                    (a, rep - r0)
                })
                .collect();
            let cert = RectCertificate::from_parts(p, ell, lambda, start, width, mapping);
            cert.check_structure()
                .map_err(|e| RectifyError::Invariant(format!("search built a malformed certificate: {e}")))?;
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

/// Exhaustively checks the `ℓ`-Freiman property of `cert` on its domain.
///
/// Every `ℓ`-tuple with repetition is summed on both sides; the biconditional
/// over all pairs of tuples holds exactly when equal residue sums always have
/// equal image sums and distinct residue sums always have distinct image sums.
/// Shorter sums are covered by padding with `0`, so the certificate must map
/// `0 ↦ 0` to pass.
pub fn freiman_verify(cert: &RectCertificate, ell: u64) -> Result<bool, RectifyError> {
    let k = cert.mapping.len() as u128;
    let pairs = u32::try_from(2 * ell).ok().and_then(|e| k.checked_pow(e));
    match pairs {
        Some(n) if n <= FREIMAN_VERIFY_LIMIT => {}
        _ => return Err(RectifyError::Infeasible(pairs.unwrap_or(u128::MAX))),
    }
    if cert.mapping.get(&0) != Some(&0) {
        return Ok(false);
    }
    let domain: Vec<(u64, i128)> = cert.mapping.iter().map(|(&a, &b)| (a, b)).collect();
    let p = cert.p as u128;
    let mut forward: HashMap<u64, i128> = HashMap::new();
    let mut backward: HashMap<i128, u64> = HashMap::new();
    let mut idx = vec![0usize; ell as usize];
    loop {
        let mut residue = 0u128;
        let mut image = 0i128;
        for &i in &idx {
            residue += domain[i].0 as u128;
            image += domain[i].1;
        }
        let residue = (residue % p) as u64;
        if *forward.entry(residue).or_insert(image) != image || *backward.entry(image).or_insert(residue) != residue {
            return Ok(false);
        }
        // next tuple in odometer order
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(true);
            }
            idx[pos] += 1;
            if idx[pos] < domain.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
impl RectCertificate {
    pub(crate) fn corrupt(&mut self, a: u64, image: i128) {
        self.mapping.insert(a, image);
        self.inverse = self.mapping.iter().map(|(&a, &b)| (b, a)).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn freiman_oracle(cert: &RectCertificate, ell: usize) -> bool {
        let dom: Vec<(u64, i128)> = cert.mapping().iter().map(|(&a, &b)| (a, b)).collect();
        freiman_oracle_on(&dom, cert.p(), ell)
    }

    /// Literal pairwise check of the biconditional over all tuple pairs.
    fn freiman_oracle_on(dom: &[(u64, i128)], p: u64, ell: usize) -> bool {
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..ell {
            tuples = tuples
                .into_iter()
                .flat_map(|t| (0..dom.len()).map(move |i| [t.clone(), vec![i]].concat()))
                .collect();
        }
        let sums = |t: &Vec<usize>| -> (u64, i128) {
            let r: u64 = t.iter().map(|&i| dom[i].0).sum::<u64>() % p;
            (r, t.iter().map(|&i| dom[i].1).sum())
        };
        tuples.iter().all(|x| {
            let (rx, ix) = sums(x);
            tuples.iter().all(|y| {
                let (ry, iy) = sums(y);
                (rx == ry) == (ix == iy)
            })
        })
    }

    fn images(c: &RectCertificate) -> Vec<(u64, i128)> {
        c.mapping().iter().map(|(&a, &b)| (a, b)).collect()
    }

    #[test]
    fn window_examples() {
        assert_eq!(min_cyclic_window(&[0, 1, 7], 13).unwrap(), (7, 7));
        assert_eq!(min_cyclic_window(&[0, 1, 2], 13).unwrap(), (0, 2));
        assert_eq!(min_cyclic_window(&[5], 13).unwrap(), (5, 0));
        assert_eq!(min_cyclic_window(&[0, 2, 1, 9], 13).unwrap(), (9, 6));
        assert_eq!(min_cyclic_window(&[], 13), Err(RectifyError::Empty));
    }

    #[test]
    fn window_is_minimal_by_brute_force() {
        let p = 17;
        for mask in 1u32..(1 << p) {
            if mask % 61 != 1 {
                continue;
            }
            let set: Vec<u64> = (0..p).filter(|&r| mask >> r & 1 == 1).collect();
            let (start, width) = min_cyclic_window(&set, p).unwrap();
            let covers = |s: u64, w: u64| set.iter().all(|&r| (r + p - s) % p <= w);
            assert!(covers(start, width));
            let best = (0..p).flat_map(|s| (0..p).map(move |w| (s, w))).filter(|&(s, w)| covers(s, w)).map(|(_, w)| w).min();
            assert_eq!(Some(width), best, "{set:?}");
        }
    }

    #[test]
    fn lev_bound_examples() {
        assert_eq!(lev_bound(13, 2), Ok(4));
        assert_eq!(lev_bound(8, 2), Ok(3));
        assert_eq!(lev_bound(101, 3), Ok(5));
        assert_eq!(lev_bound(81, 3), Ok(4));
        assert_eq!(lev_bound(82, 3), Ok(5));
        assert_eq!(lev_bound(13, 1), Err(RectifyError::EllTooSmall(1)));
        assert_eq!(lev_bound((1 << 40) - 87, 2), Ok(40));
    }

    #[test]
    fn dilation_examples() {
        let c = find_dilation(&[0, 1, 7], 13, 2).unwrap().unwrap();
        assert_eq!((c.lambda(), c.width()), (2, 2));
        assert_eq!(images(&c), vec![(0, 0), (1, 2), (7, 1)]);
        assert!(freiman_verify(&c, 2).unwrap());
        assert!(freiman_oracle(&c, 2));
        assert_eq!(c.apply_iso(7), Ok(1));
        assert_eq!(c.invert_iso(1), Ok(7));
        assert_eq!(c.apply_iso(0), Ok(0));
        assert_eq!(c.apply_iso(5), Err(RectifyError::NotInDomain(5)));
        assert_eq!(c.invert_iso(9), Err(RectifyError::NotInImage(9)));

        let c = find_dilation(&[0, 1, 7, 11], 13, 2).unwrap().unwrap();
        assert_eq!((c.lambda(), c.window_start(), c.width()), (2, 9, 6));
        assert_eq!(images(&c), vec![(0, 0), (1, 2), (7, 1), (11, -4)]);
        assert!(freiman_verify(&c, 2).unwrap());
        // 7 + 7 = 0 + 1 mod 13, and 1 + 1 = 0 + 2
        assert_eq!((14 % 13, c.apply_iso(7).unwrap() * 2), (1, c.apply_iso(1).unwrap()));

        let c = find_dilation(&[0], 13, 2).unwrap().unwrap();
        assert_eq!((c.lambda(), c.width()), (1, 0));
        assert_eq!(images(&c), vec![(0, 0)]);
    }

    #[test]
    fn dilation_errors() {
        assert_eq!(find_dilation(&[1, 2], 13, 2), Err(RectifyError::MissingZero));
        assert_eq!(find_dilation(&[0, 1], 15, 2), Err(RectifyError::NotPrime(15)));
        assert_eq!(find_dilation(&[0, 13], 13, 2), Err(RectifyError::NotCanonical { residue: 13, p: 13 }));
        assert_eq!(find_dilation(&[0, 1], 13, 1), Err(RectifyError::EllTooSmall(1)));
    }

    #[test]
    fn not_found_beyond_the_bound() {
        // the whole field cannot be squeezed into a short window
        let all: Vec<u64> = (0..13).collect();
        assert_eq!(find_dilation(&all, 13, 2), Ok(None));
    }

    #[test]
    fn corrupted_certificate_fails() {
        let mut c = find_dilation(&[0, 1, 7], 13, 2).unwrap().unwrap();
        c.corrupt(7, 5);
        assert!(!freiman_verify(&c, 2).unwrap());
        assert!(!freiman_oracle(&c, 2));
        assert!(c.check_structure().is_err());
    }

    #[test]
    fn verify_feasibility_guard() {
        let c = find_dilation(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10], 1_000_003, 4).unwrap().unwrap();
        assert!(matches!(freiman_verify(&c, 4), Err(RectifyError::Infeasible(_))));
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let c = find_dilation(&[0, 1, 7, 11], 13, 2).unwrap().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"p":13,"ell":2,"lambda":2,"window_start":9,"width":6,"mapping":[[0,0],[1,2],[7,1],[11,-4]]}"#
        );
        let back: RectCertificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let tampered = json.replace("[7,1]", "[7,5]");
        assert!(serde_json::from_str::<RectCertificate>(&tampered).is_err());
        let wide = json.replace(r#""width":6"#, r#""width":7"#);
        assert!(serde_json::from_str::<RectCertificate>(&wide).is_err());
    }

    /// True when some dilation is guaranteed by pigeonhole on `λ`.
    fn dirichlet_regime(p: u64, ell: u64, size: usize) -> bool {
        (2 * ell as u128 + 1).pow(size as u32 - 1) <= p as u128
    }

    fn for_each_set_with_zero(p: u64, max_size: usize, mut f: impl FnMut(&[u64])) {
        for mask in 0u32..(1 << (p - 1)) {
            if mask.count_ones() as usize + 1 > max_size {
                continue;
            }
            let mut set = vec![0];
            set.extend((1..p).filter(|&a| mask >> (a - 1) & 1 == 1));
            f(&set);
        }
    }

    #[test]
    fn complete_in_the_pigeonhole_regime() {
        for p in [5u64, 7, 11, 13, 17, 19, 23] {
            for ell in 2..=4 {
                let bound = lev_bound(p, ell).unwrap() as usize;
                for_each_set_with_zero(p, bound, |set| {
                    let found = find_dilation(set, p, ell).unwrap();
                    if dirichlet_regime(p, ell, set.len()) {
                        assert!(found.is_some(), "{set:?} mod {p}, ell {ell}");
                    }
                    if let Some(c) = found {
                        assert!(c.check_structure().is_ok());
                        if set.len() <= 4 {
                            assert!(freiman_verify(&c, ell).unwrap());
                        }
                    }
                });
            }
        }
    }

    #[test]
    fn window_search_is_weaker_than_rectifiability() {
        // within lev_bound(19, 2) = 5, but no dilate fits in a window of width 9
        assert_eq!(lev_bound(19, 2), Ok(5));
        assert_eq!(find_dilation(&[0, 2, 4, 5, 10], 19, 2), Ok(None));
        let best = (1..19u64)
            .map(|l| min_cyclic_window(&[0, 2 * l % 19, 4 * l % 19, 5 * l % 19, 10 * l % 19], 19).unwrap().1)
            .min();
        assert_eq!(best, Some(10));
        // the set is nevertheless 2-Freiman isomorphic to a set of integers
        let dom = [(0u64, 0i128), (2, -12), (4, -24), (5, -11), (10, -22)];
        assert!(freiman_oracle_on(&dom, 19, 2));
    }

    proptest! {
        #[test]
        fn certificates_verify(p in prop::sample::select(vec![101u64, 103, 1009, 10007]),
                               ell in 2u64..=4,
                               rest in prop::collection::btree_set(1u64..10007, 0..4)) {
            let mut set = vec![0];
            set.extend(rest.into_iter().map(|a| a % p).filter(|&a| a != 0));
            if let Some(c) = find_dilation(&set, p, ell).unwrap() {
                prop_assert!(c.check_structure().is_ok());
                prop_assert_eq!(c.apply_iso(0).unwrap(), 0);
                for (&a, &b) in c.mapping() {
                    prop_assert_eq!(c.invert_iso(b).unwrap(), a);
                }
                prop_assert!(freiman_verify(&c, ell).unwrap());
                for k in 2..ell {
                    prop_assert!(freiman_verify(&c, k).unwrap());
                }
            }
        }

        #[test]
        fn dilating_the_input_keeps_certificates_sound(rest in prop::collection::btree_set(1u64..101, 1..4), unit in 1u64..101) {
            let p = 101;
            let set: Vec<u64> = std::iter::once(0).chain(rest.iter().map(|a| a * unit % p)).collect();
            let c = find_dilation(&set, p, 3).unwrap().expect("within the bound");
            prop_assert!(freiman_verify(&c, 3).unwrap());
            prop_assert!(freiman_oracle(&c, 2));
        }
    }
}
