//! Seeded generation of random test sets and orderings.
//!
//! Everything randomized (property corpora, acceptance runs, the CLI's
//! `--random` source) draws from [`Corpus`], a ChaCha8 stream keyed by a
//! single `u64` seed, so identical seeds give identical data on every
//! platform.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::groups::{Coord, Element, Group};

pub struct Corpus {
    rng: ChaCha8Rng,
}

impl Corpus {
    pub fn new(seed: u64) -> Corpus {
        Corpus { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A set of distinct nonzero integers in `[-magnitude, magnitude]` whose
    /// size is uniform in `0..=max_size`.
    pub fn integer_set(&mut self, max_size: usize, magnitude: i128) -> Vec<i128> {
        let size = self.rng.gen_range(0..=max_size).min(2 * magnitude.max(0) as usize);
        let mut set = BTreeSet::new();
        while set.len() < size {
            let x = self.rng.gen_range(-magnitude..=magnitude);
            if x != 0 {
                set.insert(x);
            }
        }
        let mut out: Vec<i128> = set.into_iter().collect();
        out.shuffle(&mut self.rng);
        out
    }

    /// `size` distinct nonzero residues mod `p`, sorted.
    pub fn residue_set(&mut self, p: u64, size: usize) -> Vec<u64> {
        assert!(size < p as usize, "F_{p} has only {} nonzero elements", p - 1);
        let mut set = BTreeSet::new();
        while set.len() < size {
            set.insert(self.rng.gen_range(1..p));
        }
        set.into_iter().collect()
    }

    /// Up to `size` distinct nonzero elements of `group`; integer coordinates
    /// are drawn from `[-radius, radius]`. Fewer are returned only when the
    /// sampling box is too small.
    pub fn set_in(&mut self, group: &Group, size: usize, radius: i128) -> Vec<Element> {
        let mut set = BTreeSet::new();
        let mut attempts = 0;
        while set.len() < size && attempts < 64 * (size + 1) {
            attempts += 1;
            let raw: Vec<i128> = group
                .coord_kinds()
                .iter()
                .map(|k| match *k {
                    Coord::Integer => self.rng.gen_range(-radius..=radius),
                    Coord::Modular(m) => self.rng.gen_range(0..m as i128),
                })
                .collect();
            let e = group.canonicalize(&raw).expect("sampled within bounds");
            if !e.is_zero() {
                set.insert(e);
            }
        }
        let mut out: Vec<Element> = set.into_iter().collect();
        out.shuffle(&mut self.rng);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let a: Vec<_> = (0..5).map(|_| Corpus::new(7).integer_set(20, 100)).collect();
        let mut c = Corpus::new(7);
        assert_eq!(a[0], c.integer_set(20, 100));
        assert_ne!(Corpus::new(8).integer_set(50, 1_000_000), Corpus::new(9).integer_set(50, 1_000_000));
    }

    #[test]
    fn generated_sets_are_well_formed() {
        let mut c = Corpus::new(1);
        for _ in 0..100 {
            let s = c.integer_set(30, 5);
            assert!(s.len() <= 10 && !s.contains(&0));
            let r = c.residue_set(13, 5);
            assert_eq!(r.len(), 5);
            assert!(r.windows(2).all(|w| w[0] < w[1]) && r[0] >= 1 && r[4] < 13);
        }
        let z2 = Group::lattice(2).unwrap();
        let s = c.set_in(&z2, 8, 1);
        assert_eq!(s.len(), 8);
        let s = c.set_in(&z2, 20, 1);
        assert!(s.len() <= 8);
    }
}
