//! Random instances and a finite cyclic group for property checks.
//!
//! Inequalities such as the first-order convexity bound need measures whose
//! support is closed under translation. On `F_d` and `Z^k` no finitely
//! supported measure has that property, so those checks run on `Z/nZ`.

use std::fmt;

use rand::Rng;

use crate::group::{FreeWord, GroupElement};
use crate::measure::SparseMeasure;

/// An element of the cyclic group `Z/nZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicPoint {
    modulus: usize,
    value: usize,
}

impl CyclicPoint {
    pub fn new(modulus: usize, value: usize) -> Self {
        assert!(modulus > 0);
        Self {
            modulus,
            value: value % modulus,
        }
    }

    pub fn value(&self) -> usize {
        self.value
    }
}

impl fmt::Display for CyclicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.modulus)
    }
}

impl GroupElement for CyclicPoint {
    fn identity_like(&self) -> Self {
        Self::new(self.modulus, 0)
    }

    fn same_group(&self, other: &Self) -> bool {
        self.modulus == other.modulus
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::new(self.modulus, self.value + rhs.value)
    }

    fn inverse(&self) -> Self {
        Self::new(self.modulus, self.modulus - self.value)
    }

    fn norm(&self) -> usize {
        self.value.min(self.modulus - self.value)
    }
}

/// A probability measure with full support on `Z/nZ`; masses are drawn
/// log-uniformly over two decades.
pub fn random_cyclic_measure<R: Rng>(rng: &mut R, modulus: usize) -> SparseMeasure<CyclicPoint> {
    let raw: Vec<f64> = (0..modulus).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
    let total: f64 = raw.iter().sum();
    SparseMeasure::from_entries(
        CyclicPoint::new(modulus, 0),
        raw.into_iter()
            .enumerate()
            .map(|(k, m)| (CyclicPoint::new(modulus, k), m / total)),
    )
    .expect("positive masses")
}

/// A random word of length at most `max_len`.
pub fn random_word<R: Rng>(rng: &mut R, rank: usize, max_len: usize) -> FreeWord {
    let len = rng.gen_range(0..=max_len);
    random_word_of_length(rng, rank, len)
}

/// A uniformly random reduced word of length exactly `len`.
pub fn random_word_of_length<R: Rng>(rng: &mut R, rank: usize, len: usize) -> FreeWord {
    let mut word = FreeWord::identity(rank).expect("valid rank");
    while word.len() < len {
        let gen = rng.gen_range(1..=rank as i64);
        let letter = if rng.gen_bool(0.5) { gen } else { -gen };
        if word.last() != Some(-letter as i8) {
            word = word.right_mul_letter(letter as i8);
        }
    }
    word
}

/// A probability measure on up to eight random words.
pub fn random_free_measure<R: Rng>(
    rng: &mut R,
    rank: usize,
    max_len: usize,
) -> SparseMeasure<FreeWord> {
    let count = rng.gen_range(1..=8);
    let entries: Vec<_> = (0..count)
        .map(|_| (random_word(rng, rank, max_len), rng.gen_range(0.05..1.0)))
        .collect();
    let m = SparseMeasure::from_entries(FreeWord::identity(rank).expect("valid rank"), entries)
        .expect("positive masses");
    let total = m.total();
    m.scaled(1.0 / total)
}

/// `d` random symmetric masses `p_1..p_d` with `2 Σ p_i = 1`, each at least
/// `floor / (2d)` before normalization.
pub fn random_symmetric_half<R: Rng>(rng: &mut R, rank: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..rank).map(|_| rng.gen_range(floor..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / (2.0 * total)).collect()
}
