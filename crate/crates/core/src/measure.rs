//! Finitely supported measures on group elements.
//!
//! [`SparseMeasure`] is a map from group element to strictly positive mass.
//! It provides convolution, convolution powers, truncated Abel sums
//! `(1-a) Σ_{n<=N} a^n μ^{*n}`, left translation, the l1 distance and Shannon
//! entropy. [`GeneratorMeasure`] is the nearest-neighbour special case on
//! `F_d`, a probability vector over the `2d` letters.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{
    index_letter, letter_index, parse_word, FreeWord, GroupElement, GroupError, Letter,
};

/// Hash map with a fixed hasher: iteration order, and therefore every
/// floating-point sum over a map, is reproducible across runs.
pub type StableMap<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// Default cap on the support size of convolution results.
pub const DEFAULT_SUPPORT_CAP: u64 = 100_000_000;

/// Masses below this are dropped after each convolution.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Tolerance used when accepting user-supplied probability vectors.
pub const INPUT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measures live on different groups")]
    GroupMismatch,
    #[error("mass {0} at {1} is negative or not finite")]
    InvalidMass(f64, String),
    #[error("support size {size} exceeds the cap {cap}")]
    SupportCapExceeded { size: u64, cap: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A finitely supported nonnegative measure on a group.
#[derive(Debug, Clone)]
pub struct SparseMeasure<E: GroupElement> {
    identity: E,
    entries: StableMap<E, f64>,
    total: f64,
    /// Upper bound on mass discarded by the underflow floor.
    underflow_bound: f64,
}

impl<E: GroupElement> SparseMeasure<E> {
    /// The zero measure on the group of `identity`.
    pub fn zero(identity: E) -> Self {
        let identity = identity.identity_like();
        Self {
            identity,
            entries: StableMap::default(),
            total: 0.0,
            underflow_bound: 0.0,
        }
    }

    pub fn dirac(point: E) -> Self {
        let mut m = Self::zero(point.identity_like());
        m.entries.insert(point, 1.0);
        m.total = 1.0;
        m
    }

    /// Builds a measure from `(element, mass)` pairs. Repeated elements are
    /// summed and zero masses dropped.
    pub fn from_entries<I>(identity: E, entries: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (E, f64)>,
    {
        let mut m = Self::zero(identity);
        for (x, mass) in entries {
            if !mass.is_finite() || mass < 0.0 {
                return Err(MeasureError::InvalidMass(mass, x.to_string()));
            }
            if !x.same_group(&m.identity) {
                return Err(MeasureError::GroupMismatch);
            }
            if mass > 0.0 {
                *m.entries.entry(x).or_insert(0.0) += mass;
            }
        }
        m.recompute_total();
        Ok(m)
    }

    fn recompute_total(&mut self) {
        self.total = self.entries.values().sum();
    }

    pub fn identity(&self) -> &E {
        &self.identity
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_probability(&self) -> bool {
        (self.total - 1.0).abs() <= 1e-12
    }

    pub fn mass(&self, x: &E) -> f64 {
        self.entries.get(x).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, x: &E) -> bool {
        self.entries.contains_key(x)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E, f64)> {
        self.entries.iter().map(|(x, &m)| (x, m))
    }

    /// Entries in the element order (shortlex for free words).
    pub fn sorted_entries(&self) -> Vec<(E, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(x, &m)| (x.clone(), m)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// Largest norm of a support element.
    pub fn radius(&self) -> usize {
        self.entries.keys().map(GroupElement::norm).max().unwrap_or(0)
    }

    pub fn underflow_bound(&self) -> f64 {
        self.underflow_bound
    }

    pub fn same_group(&self, other: &Self) -> bool {
        self.identity.same_group(&other.identity)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for m in out.entries.values_mut() {
            *m *= factor;
        }
        out.entries.retain(|_, m| *m > 0.0);
        out.recompute_total();
        out
    }

    /// Keeps only the elements satisfying `keep`.
    pub fn restricted(&self, mut keep: impl FnMut(&E) -> bool) -> Self {
        let mut out = self.clone();
        out.entries.retain(|x, _| keep(x));
        out.recompute_total();
        out
    }

    /// `t·self + (1-t)·other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self, MeasureError> {
        if !self.same_group(other) {
            return Err(MeasureError::GroupMismatch);
        }
        let entries = self
            .entries
            .iter()
            .map(|(x, &m)| (x.clone(), t * m))
            .chain(other.entries.iter().map(|(x, &m)| (x.clone(), (1.0 - t) * m)));
        Self::from_entries(self.identity.clone(), entries)
    }

    fn add_scaled(&mut self, other: &Self, factor: f64) {
        for (x, &m) in &other.entries {
            *self.entries.entry(x.clone()).or_insert(0.0) += factor * m;
        }
        self.underflow_bound += factor * other.underflow_bound;
    }
}

/// `(μ∗ν)(x) = Σ_g μ(g) ν(g^{-1}x)`.
pub fn convolve<E: GroupElement>(
    mu: &SparseMeasure<E>,
    nu: &SparseMeasure<E>,
) -> Result<SparseMeasure<E>, MeasureError> {
    if !mu.same_group(nu) {
        return Err(MeasureError::GroupMismatch);
    }
    let mut out = SparseMeasure::zero(mu.identity.clone());
    out.entries.reserve(mu.support_len().max(nu.support_len()));
    // The outer loop runs over the smaller support; the product order is kept.
    if mu.support_len() <= nu.support_len() {
        for (g, &mg) in &mu.entries {
            for (h, &nh) in &nu.entries {
                *out.entries.entry(g.compose(h)).or_insert(0.0) += mg * nh;
            }
        }
    } else {
        for (h, &nh) in &nu.entries {
            for (g, &mg) in &mu.entries {
                *out.entries.entry(g.compose(h)).or_insert(0.0) += mg * nh;
            }
        }
    }
    let before = out.entries.len();
    out.entries.retain(|_, m| *m >= UNDERFLOW_FLOOR);
    let dropped = before - out.entries.len();
    out.underflow_bound = mu.underflow_bound * nu.total
        + nu.underflow_bound * mu.total
        + dropped as f64 * UNDERFLOW_FLOOR;
    out.recompute_total();
    Ok(out)
}

fn check_cap<E: GroupElement>(m: &SparseMeasure<E>, cap: u64) -> Result<(), MeasureError> {
    let size = m.support_len() as u64;
    if size > cap {
        return Err(MeasureError::SupportCapExceeded { size, cap });
    }
    Ok(())
}

/// `μ^{*n}`; `n = 0` gives `δ_e`.
pub fn convolve_power<E: GroupElement>(
    mu: &SparseMeasure<E>,
    n: usize,
) -> Result<SparseMeasure<E>, MeasureError> {
    convolve_power_capped(mu, n, DEFAULT_SUPPORT_CAP)
}

pub fn convolve_power_capped<E: GroupElement>(
    mu: &SparseMeasure<E>,
    n: usize,
    cap: u64,
) -> Result<SparseMeasure<E>, MeasureError> {
    let mut out = SparseMeasure::dirac(mu.identity.clone());
    for _ in 0..n {
        out = convolve(&out, mu)?;
        check_cap(&out, cap)?;
    }
    Ok(out)
}

/// Result of a truncated Abel sum.
#[derive(Debug, Clone)]
pub struct AbelTruncation<E: GroupElement> {
    pub measure: SparseMeasure<E>,
    /// Index `N` of the last included power.
    pub terms: usize,
    /// `a^{N+1}`, the mass of the omitted tail for a probability `μ`.
    pub tail_bound: f64,
}

/// Smallest `N` with `a^{N+1} <= eps`.
pub fn abel_truncation_index(a: f64, eps: f64) -> Result<usize, MeasureError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(MeasureError::InvalidParameter(format!(
            "a must lie in (0,1), got {a}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MeasureError::InvalidParameter(format!(
            "eps must lie in (0,1), got {eps}"
        )));
    }
    let mut n = ((eps.ln() / a.ln()).ceil() as usize).saturating_sub(1);
    // guard the floating-point estimate in both directions
    while n > 0 && a.powi(n as i32) <= eps {
        n -= 1;
    }
    while a.powi(n as i32 + 1) > eps {
        n += 1;
    }
    Ok(n)
}

/// `(1-a) Σ_{n=0}^{N} a^n μ^{*n}` with `N` minimal such that `a^{N+1} <= eps`.
pub fn abel_sum_truncated<E: GroupElement>(
    mu: &SparseMeasure<E>,
    a: f64,
    eps: f64,
) -> Result<AbelTruncation<E>, MeasureError> {
    abel_sum_truncated_capped(mu, a, eps, DEFAULT_SUPPORT_CAP)
}

pub fn abel_sum_truncated_capped<E: GroupElement>(
    mu: &SparseMeasure<E>,
    a: f64,
    eps: f64,
    cap: u64,
) -> Result<AbelTruncation<E>, MeasureError> {
    abel_sum_impl(mu, a, eps, None, cap)
}

/// The truncated Abel sum restricted to elements of norm `<= radius`.
///
/// The values on the ball are exactly those of [`abel_sum_truncated`]. Powers
/// `μ^{*n}` are only kept on the ball of radius `radius + (N - n)·s`, where `s`
/// is the largest norm in `supp μ`: mass farther out cannot return to the
/// target ball within the remaining `N - n` steps.
pub fn abel_sum_truncated_within<E: GroupElement>(
    mu: &SparseMeasure<E>,
    a: f64,
    eps: f64,
    radius: usize,
) -> Result<AbelTruncation<E>, MeasureError> {
    abel_sum_impl(mu, a, eps, Some(radius), DEFAULT_SUPPORT_CAP)
}

fn abel_sum_impl<E: GroupElement>(
    mu: &SparseMeasure<E>,
    a: f64,
    eps: f64,
    radius: Option<usize>,
    cap: u64,
) -> Result<AbelTruncation<E>, MeasureError> {
    let terms = abel_truncation_index(a, eps)?;
    let step = mu.radius();
    let mut acc = SparseMeasure::zero(mu.identity.clone());
    let mut power = SparseMeasure::dirac(mu.identity.clone());
    let mut weight = 1.0 - a;
    for n in 0..=terms {
        if n > 0 {
            power = convolve(&power, mu)?;
            if let Some(r) = radius {
                let window = r + (terms - n) * step;
                power.entries.retain(|x, _| x.norm() <= window);
                power.recompute_total();
            }
            check_cap(&power, cap)?;
            weight *= a;
        }
        match radius {
            Some(r) => {
                let inner = power.restricted(|x| x.norm() <= r);
                acc.add_scaled(&inner, weight);
            }
            None => acc.add_scaled(&power, weight),
        }
    }
    acc.recompute_total();
    Ok(AbelTruncation {
        measure: acc,
        terms,
        tail_bound: a.powi(terms as i32 + 1),
    })
}

/// Left translation: `(gν)(x) = ν(g^{-1}x)`, i.e. mass at `h` moves to `gh`.
pub fn translate<E: GroupElement>(g: &E, nu: &SparseMeasure<E>) -> SparseMeasure<E> {
    let mut out = SparseMeasure::zero(nu.identity.clone());
    out.entries.reserve(nu.entries.len());
    for (h, &m) in &nu.entries {
        out.entries.insert(g.compose(h), m);
    }
    out.total = nu.total;
    out.underflow_bound = nu.underflow_bound;
    out
}

/// `Σ_x |m(x) - ν(x)|`.
pub fn tv_distance<E: GroupElement>(m: &SparseMeasure<E>, nu: &SparseMeasure<E>) -> f64 {
    let mut sum = 0.0;
    for (x, &mx) in &m.entries {
        sum += (mx - nu.mass(x)).abs();
    }
    for (x, &nx) in &nu.entries {
        if !m.entries.contains_key(x) {
            sum += nx;
        }
    }
    sum
}

/// `-Σ κ(x) ln κ(x)`.
pub fn shannon_entropy<E: GroupElement>(kappa: &SparseMeasure<E>) -> f64 {
    kappa
        .entries
        .values()
        .map(|&m| if m > 0.0 { -m * m.ln() } else { 0.0 })
        .sum()
}

/// JSON form of a single measure entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordMass {
    pub word: String,
    pub mass: f64,
}

impl SparseMeasure<FreeWord> {
    /// Entries as `{word, mass}` records in shortlex order.
    pub fn to_word_masses(&self) -> Vec<WordMass> {
        self.sorted_entries()
            .into_iter()
            .map(|(w, mass)| WordMass {
                word: w.to_string(),
                mass,
            })
            .collect()
    }

    pub fn from_word_masses(rank: usize, records: &[WordMass]) -> Result<Self, MeasureError> {
        let entries = records
            .iter()
            .map(|r| Ok((parse_word(&r.word, rank)?, r.mass)))
            .collect::<Result<Vec<_>, MeasureError>>()?;
        Self::from_entries(FreeWord::identity(rank)?, entries)
    }
}

/// A probability measure on the `2d` free generators, stored in the layout of
/// [`letter_index`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorMeasure {
    rank: usize,
    p: Vec<f64>,
}

impl GeneratorMeasure {
    /// Full constructor from `2d` masses in letter-index order
    /// `(a_1, a_1^{-1}, a_2, a_2^{-1}, …)`. The sum must be 1 within
    /// [`INPUT_SUM_TOLERANCE`]; the vector is renormalized exactly.
    pub fn new(rank: usize, p: Vec<f64>) -> Result<Self, MeasureError> {
        if rank == 0 || rank > crate::group::MAX_RANK {
            return Err(GroupError::InvalidRank(rank).into());
        }
        if p.len() != 2 * rank {
            return Err(MeasureError::InvalidParameter(format!(
                "expected {} generator masses, got {}",
                2 * rank,
                p.len()
            )));
        }
        if let Some(&bad) = p.iter().find(|x| !x.is_finite() || **x <= 0.0) {
            return Err(MeasureError::InvalidParameter(format!(
                "generator masses must be strictly positive, got {bad}"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(MeasureError::InvalidParameter(format!(
                "generator masses sum to {sum}, not 1"
            )));
        }
        let p = p.into_iter().map(|x| x / sum).collect();
        Ok(Self { rank, p })
    }

    /// Symmetric measure from `d` values `p_1, …, p_d` with `p_{-i} = p_i`;
    /// `2 Σ p_i` must be 1.
    pub fn symmetric(half: &[f64]) -> Result<Self, MeasureError> {
        let full = half.iter().flat_map(|&x| [x, x]).collect();
        Self::new(half.len(), full)
    }

    /// Accepts either `d` symmetric values or `2d` full values.
    pub fn from_values(rank: usize, values: &[f64]) -> Result<Self, MeasureError> {
        if values.len() == rank {
            Self::symmetric(values)
        } else {
            Self::new(rank, values.to_vec())
        }
    }

    pub fn uniform(rank: usize) -> Result<Self, MeasureError> {
        Self::new(rank, vec![1.0 / (2 * rank) as f64; 2 * rank])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, letter: Letter) -> f64 {
        self.p[letter_index(letter)]
    }

    /// Masses in letter-index order.
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// `p_1, …, p_d` (masses of the positive letters).
    pub fn half(&self) -> Vec<f64> {
        (1..=self.rank).map(|i| self.get(i as Letter)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.p.chunks(2).all(|c| c[0] == c[1])
    }

    pub fn max_abs_diff(&self, other: &GeneratorMeasure) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_sparse(&self) -> SparseMeasure<FreeWord> {
        let identity = FreeWord::identity(self.rank).expect("rank validated");
        let entries = self.p.iter().enumerate().map(|(i, &m)| {
            (
                FreeWord::generator(self.rank, index_letter(i) as i64).expect("rank validated"),
                m,
            )
        });
        SparseMeasure::from_entries(identity, entries).expect("masses validated")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, LatticePoint};
    use proptest::prelude::*;

    fn word(letters: &[i64]) -> FreeWord {
        FreeWord::new(2, letters).unwrap()
    }

    fn e2() -> FreeWord {
        FreeWord::identity(2).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn dirac_identity_is_neutral() {
        let nu = SparseMeasure::from_entries(e2(), [(word(&[1]), 0.3), (word(&[2, 1]), 0.7)]).unwrap();
        let out = convolve(&SparseMeasure::dirac(e2()), &nu).unwrap();
        assert_eq!(out.sorted_entries(), nu.sorted_entries());
    }

    #[test]
    fn dirac_products() {
        let g = word(&[1, 2]);
        let h = word(&[-2, 1]);
        let out = convolve(&SparseMeasure::dirac(g), &SparseMeasure::dirac(h)).unwrap();
        assert_eq!(out.sorted_entries(), vec![(word(&[1, 1]), 1.0)]);
    }

    #[test]
    fn square_of_two_point_measure() {
        let m = SparseMeasure::from_entries(e2(), [(word(&[1]), 0.5), (word(&[-1]), 0.5)]).unwrap();
        let sq = convolve(&m, &m).unwrap();
        assert_eq!(sq.support_len(), 3);
        assert!(close(sq.mass(&e2()), 0.5, 1e-15));
        assert!(close(sq.mass(&word(&[1, 1])), 0.25, 1e-15));
        assert!(close(sq.mass(&word(&[-1, -1])), 0.25, 1e-15));
    }

    #[test]
    fn convolution_power_examples() {
        let mu = GeneratorMeasure::uniform(2).unwrap().to_sparse();
        let p0 = convolve_power(&mu, 0).unwrap();
        assert_eq!(p0.sorted_entries(), vec![(e2(), 1.0)]);
        let p1 = convolve_power(&mu, 1).unwrap();
        assert_eq!(p1.sorted_entries(), mu.sorted_entries());
        let p2 = convolve_power(&mu, 2).unwrap();
        assert!(close(p2.mass(&e2()), 0.25, 1e-15));
    }

    #[test]
    fn convolution_power_cap() {
        let mu = GeneratorMeasure::uniform(2).unwrap().to_sparse();
        let err = convolve_power_capped(&mu, 6, 100).unwrap_err();
        assert!(matches!(err, MeasureError::SupportCapExceeded { .. }));
    }

    #[test]
    fn group_mismatch() {
        let a = SparseMeasure::dirac(FreeWord::identity(2).unwrap());
        let b = SparseMeasure::dirac(FreeWord::identity(3).unwrap());
        assert_eq!(convolve(&a, &b).unwrap_err(), MeasureError::GroupMismatch);
    }

    #[test]
    fn negative_mass_rejected() {
        assert!(matches!(
            SparseMeasure::from_entries(e2(), [(e2(), -0.1)]),
            Err(MeasureError::InvalidMass(..))
        ));
    }

    #[test]
    fn zero_masses_are_dropped() {
        let m = SparseMeasure::from_entries(e2(), [(e2(), 0.0), (word(&[1]), 1.0)]).unwrap();
        assert_eq!(m.support_len(), 1);
    }

    #[test]
    fn truncation_index() {
        assert_eq!(abel_truncation_index(0.4, 1e-6).unwrap(), 15);
        assert_eq!(abel_truncation_index(0.5, 0.25).unwrap(), 1);
        assert_eq!(abel_truncation_index(0.99, 1e-6).unwrap(), 1374);
        assert!(abel_truncation_index(1.0, 1e-6).is_err());
        assert!(abel_truncation_index(0.5, 0.0).is_err());
    }

    #[test]
    fn abel_of_dirac_identity() {
        let delta = SparseMeasure::dirac(e2());
        let t = abel_sum_truncated(&delta, 0.7, 1e-3).unwrap();
        let expected = 1.0 - 0.7f64.powi(t.terms as i32 + 1);
        assert!(close(t.measure.mass(&e2()), expected, 1e-14));
        assert_eq!(t.measure.support_len(), 1);
    }

    #[test]
    fn abel_uniform_free_group_small_a() {
        let mu = GeneratorMeasure::uniform(2).unwrap().to_sparse();
        let t = abel_sum_truncated(&mu, 0.4, 1e-6).unwrap();
        assert_eq!(t.terms, 15);
        assert_eq!(t.measure.radius(), 15);
        assert!(t.measure.total() <= 1.0 + 1e-12);
        assert!(t.measure.total() >= 1.0 - 1e-6);
        assert!(t.measure.mass(&e2()) >= 1.0 - 0.4);
    }

    #[test]
    fn windowed_abel_matches_full_sum() {
        let mu = GeneratorMeasure::symmetric(&[1.0 / 3.0, 1.0 / 6.0]).unwrap().to_sparse();
        let full = abel_sum_truncated(&mu, 0.3, 1e-4).unwrap();
        let win = abel_sum_truncated_within(&mu, 0.3, 1e-4, 3).unwrap();
        assert_eq!(full.terms, win.terms);
        for x in enumerate_ball(2, 3).unwrap() {
            assert!(close(full.measure.mass(&x), win.measure.mass(&x), 1e-15));
        }
        assert!(win.measure.radius() <= 3);
    }

    #[test]
    fn translate_examples() {
        let nu = SparseMeasure::from_entries(e2(), [(word(&[1]), 0.25), (word(&[2, 2]), 0.75)]).unwrap();
        assert_eq!(translate(&e2(), &nu).sorted_entries(), nu.sorted_entries());
        let g = word(&[-1, 2]);
        let h = word(&[2]);
        assert_eq!(
            translate(&g, &SparseMeasure::dirac(h.clone())).sorted_entries(),
            vec![(g.compose(&h), 1.0)]
        );
        let back = translate(&g.invert(), &translate(&g, &nu));
        assert_eq!(back.sorted_entries(), nu.sorted_entries());
    }

    #[test]
    fn tv_examples() {
        let g = word(&[1]);
        let a = SparseMeasure::from_entries(e2(), [(e2(), 0.5), (g.clone(), 0.5)]).unwrap();
        let b = SparseMeasure::from_entries(e2(), [(e2(), 0.25), (g.clone(), 0.75)]).unwrap();
        assert_eq!(tv_distance(&a, &a), 0.0);
        assert!(close(tv_distance(&a, &b), 0.5, 1e-15));
        assert_eq!(tv_distance(&SparseMeasure::dirac(e2()), &SparseMeasure::dirac(g)), 2.0);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&SparseMeasure::dirac(word(&[2]))), 0.0);
        let uniform = GeneratorMeasure::uniform(2).unwrap().to_sparse();
        assert!(close(shannon_entropy(&uniform), 4f64.ln(), 1e-15));
        let m = SparseMeasure::from_entries(
            e2(),
            [(e2(), 0.5), (word(&[1]), 0.25), (word(&[2]), 0.25)],
        )
        .unwrap();
        assert!(close(shannon_entropy(&m), 1.5 * 2f64.ln(), 1e-15));
    }

    #[test]
    fn json_round_trip() {
        let m = SparseMeasure::from_entries(e2(), [(e2(), 0.5), (word(&[1, -2]), 0.5)]).unwrap();
        let text = serde_json::to_string(&m.to_word_masses()).unwrap();
        assert_eq!(text, r#"[{"word":"e","mass":0.5},{"word":"a1.a2'","mass":0.5}]"#);
        let records: Vec<WordMass> = serde_json::from_str(&text).unwrap();
        let back = SparseMeasure::from_word_masses(2, &records).unwrap();
        assert_eq!(back.sorted_entries(), m.sorted_entries());
    }

    #[test]
    fn generator_measure_validation() {
        assert!(GeneratorMeasure::symmetric(&[0.25, 0.25]).unwrap().is_symmetric());
        assert!(GeneratorMeasure::symmetric(&[0.3, 0.3]).is_err());
        assert!(GeneratorMeasure::new(2, vec![0.5, 0.5, 0.0, 0.0]).is_err());
        let asym = GeneratorMeasure::new(2, vec![0.4, 0.1, 0.25, 0.25]).unwrap();
        assert!(!asym.is_symmetric());
        assert_eq!(asym.get(-1), 0.1);
        let p = GeneratorMeasure::from_values(2, &[0.33333333, 0.16666667]).unwrap();
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lattice_convolution() {
        let o = LatticePoint::origin(1);
        let lazy = SparseMeasure::from_entries(
            o.clone(),
            [
                (o.clone(), 0.5),
                (LatticePoint::new(vec![1]), 0.25),
                (LatticePoint::new(vec![-1]), 0.25),
            ],
        )
        .unwrap();
        let sq = convolve(&lazy, &lazy).unwrap();
        assert!(close(sq.mass(&o), 0.375, 1e-15));
        assert!(close(sq.mass(&LatticePoint::new(vec![2])), 0.0625, 1e-15));
    }

    fn random_measure(rank: usize) -> impl Strategy<Value = SparseMeasure<FreeWord>> {
        let r = rank as i64;
        prop::collection::vec(
            (prop::collection::vec((1..=r, any::<bool>()), 0..4), 0.01f64..1.0),
            1..6,
        )
        .prop_map(move |raw| {
            let entries: Vec<_> = raw
                .into_iter()
                .map(|(ls, m)| {
                    let letters: Vec<i64> = ls.into_iter().map(|(i, n)| if n { -i } else { i }).collect();
                    (FreeWord::from_letters_reducing(rank, &letters).unwrap(), m)
                })
                .collect();
            let m = SparseMeasure::from_entries(FreeWord::identity(rank).unwrap(), entries).unwrap();
            let t = m.total();
            m.scaled(1.0 / t)
        })
    }

    proptest! {
        #[test]
        fn convolution_is_associative(a in random_measure(2), b in random_measure(2), c in random_measure(2)) {
            let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
            let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
            prop_assert!(tv_distance(&left, &right) < 1e-12);
            prop_assert!((left.total() - a.total() * b.total() * c.total()).abs() < 1e-12);
        }

        #[test]
        fn entropy_is_subadditive(a in random_measure(2), b in random_measure(2)) {
            let h = shannon_entropy(&convolve(&a, &b).unwrap());
            prop_assert!(h <= shannon_entropy(&a) + shannon_entropy(&b) + 1e-12);
        }

        #[test]
        fn translation_preserves_total(a in random_measure(3), g in random_measure(3)) {
            for (x, _) in g.iter() {
                prop_assert_eq!(translate(x, &a).total(), a.total());
            }
        }
    }
}
