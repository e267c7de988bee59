//! Canonical representation and arithmetic for the supported abelian groups.
//!
//! A [`GroupSpec`] describes the ambient group: the integers, a prime field
//! `F_p`, a cyclic group `Z_n`, or a finite product of these. It is validated
//! and flattened into a [`Group`], which owns the per-coordinate moduli and
//! implements the group law on [`Element`]s. Every element is a vector of
//! signed coordinates; modular coordinates live in `[0, m)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest accepted prime modulus (exclusive).
pub const MAX_PRIME: u64 = 1 << 40;

/// Largest number of elements a single set may hold.
pub const MAX_SET_SIZE: usize = 1 << 16;

/// Largest accepted magnitude for an integer coordinate. Any sum of up to
/// [`MAX_SET_SIZE`] such values fits in an `i128`.
pub const MAX_INTEGER_MAGNITUDE: i128 = i128::MAX >> 16;

/// Maximum nesting depth of [`GroupSpec::Product`].
pub const MAX_PRODUCT_DEPTH: usize = 4;

/// Maximum number of flattened coordinates.
pub const MAX_COORDS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime modulus {0} is outside [2, 2^40)")]
    PrimeOutOfRange(u64),
    #[error("cyclic order must be at least 2, got {0}")]
    CyclicTooSmall(u64),
    #[error("cyclic order {0} is too large")]
    CyclicTooLarge(u64),
    #[error("a product needs at least one component")]
    EmptyProduct,
    #[error("product nesting exceeds depth {MAX_PRODUCT_DEPTH}")]
    TooDeep,
    #[error("group has {0} coordinates, at most {MAX_COORDS} are supported")]
    TooManyCoords(usize),
    #[error("expected {expected} coordinates, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("integer coordinate {0} exceeds the ingestion bound")]
    MagnitudeExceeded(i128),
    #[error("coordinate {value} is not canonical modulo {modulus}")]
    NotCanonical { value: i128, modulus: u64 },
    #[error("arithmetic overflow")]
    Overflow,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Description of an ambient abelian group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupSpec {
    Integers,
    PrimeField(u64),
    Cyclic(u64),
    Product(Vec<GroupSpec>),
}

impl GroupSpec {
    /// `Z^d`, collapsing to [`GroupSpec::Integers`] when `d == 1`.
    pub fn lattice(d: usize) -> GroupSpec {
        if d == 1 {
            GroupSpec::Integers
        } else {
            GroupSpec::Product(vec![GroupSpec::Integers; d])
        }
    }

    fn depth(&self) -> usize {
        match self {
            GroupSpec::Product(cs) => 1 + cs.iter().map(GroupSpec::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    fn flatten_into(&self, out: &mut Vec<Coord>) -> Result<(), GroupError> {
        match *self {
            GroupSpec::Integers => out.push(Coord::Integer),
            GroupSpec::PrimeField(p) => {
                if !(2..MAX_PRIME).contains(&p) {
                    return Err(GroupError::PrimeOutOfRange(p));
                }
                if !is_prime(p) {
                    return Err(GroupError::NotPrime(p));
                }
                out.push(Coord::Modular(p));
            }
            GroupSpec::Cyclic(n) => {
                if n < 2 {
                    return Err(GroupError::CyclicTooSmall(n));
                }
                if n >= MAX_PRIME {
                    return Err(GroupError::CyclicTooLarge(n));
                }
                out.push(Coord::Modular(n));
            }
            GroupSpec::Product(ref cs) => {
                if cs.is_empty() {
                    return Err(GroupError::EmptyProduct);
                }
                for c in cs {
                    c.flatten_into(out)?;
                }
            }
        }
        if out.len() > MAX_COORDS {
            return Err(GroupError::TooManyCoords(out.len()));
        }
        Ok(())
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Integers => write!(f, "Z"),
            GroupSpec::PrimeField(p) => write!(f, "F_{p}"),
            GroupSpec::Cyclic(n) => write!(f, "Z_{n}"),
            GroupSpec::Product(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    match c {
                        GroupSpec::Product(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// Parses `Z`, `Z^d`, `F_p`, `GF(p)`, `Z_n`, `Z/n` and `x`-separated products
/// of those, e.g. `Z^2 x Z_5`.
impl FromStr for GroupSpec {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut components = Vec::new();
        for part in s.split(['x', '*', '×']) {
            let part: String = part.chars().filter(|c| !c.is_whitespace()).collect();
            let bad = || GroupError::Parse(format!("unrecognized group component {part:?}"));
            let number = |t: &str| t.parse::<u64>().map_err(|_| bad());
            if part == "Z" {
                components.push(GroupSpec::Integers);
            } else if let Some(d) = part.strip_prefix("Z^") {
                let d = number(d)? as usize;
                if d == 0 {
                    return Err(bad());
                }
                components.extend(std::iter::repeat_n(GroupSpec::Integers, d));
            } else if let Some(n) = part.strip_prefix("Z_").or_else(|| part.strip_prefix("Z/")) {
                components.push(GroupSpec::Cyclic(number(n)?));
            } else if let Some(p) = part.strip_prefix("F_") {
                components.push(GroupSpec::PrimeField(number(p)?));
            } else if let Some(p) = part.strip_prefix("GF(").and_then(|r| r.strip_suffix(')')) {
                components.push(GroupSpec::PrimeField(number(p)?));
            } else {
                return Err(bad());
            }
        }
        let spec = if components.len() == 1 {
            components.pop().unwrap()
        } else {
            GroupSpec::Product(components)
        };
        Group::new(spec.clone())?;
        Ok(spec)
    }
}

/// Kind of a single flattened coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coord {
    Integer,
    Modular(u64),
}

/// A group element: one signed coordinate per flattened coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Element {
    coords: Vec<i128>,
}

impl Element {
    pub fn coords(&self) -> &[i128] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn into_coords(self) -> Vec<i128> {
        self.coords
    }
}

/// Single coordinates print bare, tuples print as `(a,b,...)`.
impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [c] = self.coords[..] {
            return write!(f, "{c}");
        }
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A validated group with its flattened coordinate layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Group {
    spec: GroupSpec,
    coords: Vec<Coord>,
}

impl Group {
    pub fn new(spec: GroupSpec) -> Result<Group, GroupError> {
        if spec.depth() > MAX_PRODUCT_DEPTH {
            return Err(GroupError::TooDeep);
        }
        let mut coords = Vec::new();
        spec.flatten_into(&mut coords)?;
        Ok(Group { spec, coords })
    }

    pub fn integers() -> Group {
        Group::new(GroupSpec::Integers).unwrap()
    }

    pub fn prime_field(p: u64) -> Result<Group, GroupError> {
        Group::new(GroupSpec::PrimeField(p))
    }

    pub fn cyclic(n: u64) -> Result<Group, GroupError> {
        Group::new(GroupSpec::Cyclic(n))
    }

    pub fn lattice(d: usize) -> Result<Group, GroupError> {
        Group::new(GroupSpec::lattice(d))
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn coord_kinds(&self) -> &[Coord] {
        &self.coords
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    /// The modulus when the group is a single prime field.
    pub fn prime(&self) -> Option<u64> {
        match self.spec {
            GroupSpec::PrimeField(p) => Some(p),
            _ => None,
        }
    }

    pub fn zero(&self) -> Element {
        Element { coords: vec![0; self.coords.len()] }
    }

    /// Reduces modular coordinates into `[0, m)`; integer coordinates pass
    /// through unchanged but must respect [`MAX_INTEGER_MAGNITUDE`].
    pub fn canonicalize(&self, raw: &[i128]) -> Result<Element, GroupError> {
        if raw.len() != self.coords.len() {
            return Err(GroupError::LengthMismatch { expected: self.coords.len(), found: raw.len() });
        }
        let coords = raw
            .iter()
            .zip(&self.coords)
            .map(|(&x, kind)| match *kind {
                Coord::Integer if x.unsigned_abs() > MAX_INTEGER_MAGNITUDE as u128 => {
                    Err(GroupError::MagnitudeExceeded(x))
                }
                Coord::Integer => Ok(x),
                Coord::Modular(m) => Ok(x.rem_euclid(m as i128)),
            })
            .collect::<Result<_, _>>()?;
        Ok(Element { coords })
    }

    /// Checks that `a` is a canonical element of this group.
    pub fn check(&self, a: &Element) -> Result<(), GroupError> {
        if a.coords.len() != self.coords.len() {
            return Err(GroupError::LengthMismatch { expected: self.coords.len(), found: a.coords.len() });
        }
        for (&x, kind) in a.coords.iter().zip(&self.coords) {
            match *kind {
                Coord::Integer if x.unsigned_abs() > MAX_INTEGER_MAGNITUDE as u128 => {
                    return Err(GroupError::MagnitudeExceeded(x));
                }
                Coord::Modular(m) if !(0..m as i128).contains(&x) => {
                    return Err(GroupError::NotCanonical { value: x, modulus: m });
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        self.check_len(a)?;
        self.check_len(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub fn neg(&self, a: &Element) -> Result<Element, GroupError> {
        self.check_len(a)?;
        let coords = a
            .coords
            .iter()
            .zip(&self.coords)
            .map(|(&x, kind)| match *kind {
                Coord::Integer => -x,
                Coord::Modular(m) => (-x).rem_euclid(m as i128),
            })
            .collect();
        Ok(Element { coords })
    }

    pub fn sub(&self, a: &Element, b: &Element) -> Result<Element, GroupError> {
        self.add(a, &self.neg(b)?)
    }

    /// Multiplies `a` by the integer `k`.
    pub fn scale(&self, a: &Element, k: i128) -> Result<Element, GroupError> {
        self.check_len(a)?;
        let coords = a
            .coords
            .iter()
            .zip(&self.coords)
            .map(|(&x, kind)| match *kind {
                Coord::Integer => x
                    .checked_mul(k)
                    .filter(|v| v.unsigned_abs() <= MAX_INTEGER_MAGNITUDE as u128)
                    .ok_or(GroupError::Overflow),
                Coord::Modular(m) => {
                    let m = m as i128;
                    Ok((x * k.rem_euclid(m)).rem_euclid(m))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Element { coords })
    }

    pub fn is_zero(&self, a: &Element) -> bool {
        a.is_zero()
    }

    /// Sum of a sequence of canonical elements.
    pub fn sum<'a>(&self, elems: impl IntoIterator<Item = &'a Element>) -> Result<Element, GroupError> {
        elems.into_iter().try_fold(self.zero(), |acc, e| self.add(&acc, e))
    }

    /// Adds `b` into `acc` in place. Both must have this group's length.
    pub(crate) fn add_assign(&self, acc: &mut Element, b: &Element) {
        for ((x, &y), kind) in acc.coords.iter_mut().zip(&b.coords).zip(&self.coords) {
            *x += y;
            if let Coord::Modular(m) = *kind {
                let m = m as i128;
                if *x >= m {
                    *x -= m;
                }
            }
        }
    }

    pub(crate) fn add_unchecked(&self, a: &Element, b: &Element) -> Element {
        let mut out = a.clone();
        self.add_assign(&mut out, b);
        out
    }

    fn check_len(&self, a: &Element) -> Result<(), GroupError> {
        if a.coords.len() == self.coords.len() {
            Ok(())
        } else {
            Err(GroupError::LengthMismatch { expected: self.coords.len(), found: a.coords.len() })
        }
    }

    /// Parses one element: a bare integer for rank-1 groups, `(a,b,...)` otherwise.
    pub fn parse_element(&self, s: &str) -> Result<Element, GroupError> {
        let s = s.trim();
        let inner = match s.strip_prefix('(') {
            Some(rest) => rest
                .strip_suffix(')')
                .ok_or_else(|| GroupError::Parse(format!("unbalanced parenthesis in {s:?}")))?,
            None => s,
        };
        let raw = inner
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<i128>().map_err(|_| GroupError::Parse(format!("bad integer {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.canonicalize(&raw)
    }

    /// Parses a set or sequence of elements. Elements are separated by `;`,
    /// or by `,` when no tuples are present. The empty string is the empty set.
    pub fn parse_set(&self, s: &str) -> Result<Vec<Element>, GroupError> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Vec::new());
        }
        let parts: Vec<&str> = if s.contains('(') {
            s.split(';').collect()
        } else {
            s.split([';', ',']).collect()
        };
        let elems = parts
            .into_iter()
            .filter(|t| !t.trim().is_empty())
            .map(|t| self.parse_element(t))
            .collect::<Result<Vec<_>, _>>()?;
        if elems.len() > MAX_SET_SIZE {
            return Err(GroupError::Parse(format!("more than {MAX_SET_SIZE} elements")));
        }
        Ok(elems)
    }

    /// Formats a sequence in the syntax accepted by [`Group::parse_set`].
    pub fn format_set(&self, elems: &[Element]) -> String {
        let sep = if self.rank() == 1 { "," } else { ";" };
        elems.iter().map(Element::to_string).collect::<Vec<_>>().join(sep)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec.fmt(f)
    }
}

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    'witness: for a in SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
