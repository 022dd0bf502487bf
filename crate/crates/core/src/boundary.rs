//! Harmonic measure on the boundary `∂F_d` of a nearest-neighbour walk.
//!
//! For a generating measure `p` on the letters `a_{±1}, …, a_{±d}` the hitting
//! probabilities `q_j = P(∃n: R_n = a_j)` solve
//! `q_j = p_j + q_j Σ_{i≠j} p_i q_{-i}`. They reduce to a single concave scalar
//! equation in `x = 1 - Σ_i p_i q_{-i}`, solved here by bisection. From `q`
//! follow the depth-one cylinder masses `v_i = q_i(1-q_{-i})/(1-q_i q_{-i})`,
//! the product formula for every cylinder `X_γ`, and the Radon-Nikodym
//! cocycle `d(a_i ν)/dν`, which is `1/q_i` on `X_{a_i}` and `q_{-i}` elsewhere.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::divergence::{psi, DivergenceError, FDivergence};
use crate::group::{
    enumerate_sphere, index_letter, letter_index, sphere_size, FreeWord, GroupError, Letter,
};
use crate::measure::{GeneratorMeasure, MeasureError, SparseMeasure, StableMap};

/// Default residual tolerance for [`solve_q`].
pub const DEFAULT_Q_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Deepest cylinder density accepted.
pub const DEFAULT_DEPTH_CAP: usize = 12;

/// Extra letters a simulated path must add beyond the recorded depth.
pub const DEFAULT_PATIENCE: usize = 40;
/// Steps after which a simulated path is reported as non-convergent.
pub const DEFAULT_STEP_CAP: usize = 1_000_000;
const PATHS_PER_BLOCK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("scalar equation has no sign change on (0, 1]; p is not a valid generating measure")]
    NoSignChange,
    #[error("hitting-probability residual {residual:e} above tolerance {tol:e}")]
    ToleranceNotReached { residual: f64, tol: f64 },
    #[error("cylinder of depth {depth} is too shallow for a word of length {needed}")]
    CylinderTooShallow { depth: usize, needed: usize },
    #[error("depth {depth} exceeds the cylinder cap {cap}")]
    DepthCap { depth: usize, cap: usize },
    #[error("weights must be symmetric")]
    NonSymmetricWeights,
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Solved boundary data for a nearest-neighbour measure on `F_d`. Vectors use
/// the letter layout `a_1, a_1^{-1}, a_2, a_2^{-1}, …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryParams {
    d: usize,
    p: Vec<f64>,
    x_root: f64,
    q: Vec<f64>,
    v: Vec<f64>,
    residual: f64,
}

/// `(d-1)x + 1 - Σ_{j=1}^d √(x² + 4 p_j p_{-j})`.
fn scalar_equation(x: f64, p: &GeneratorMeasure) -> f64 {
    let d = p.rank();
    let s: f64 = (1..=d)
        .map(|j| {
            let j = j as Letter;
            (x * x + 4.0 * p.get(j) * p.get(-j)).sqrt()
        })
        .sum();
    (d as f64 - 1.0) * x + 1.0 - s
}

/// Solves for the hitting probabilities `q` of `p`.
///
/// The scalar equation vanishes at `x = 0` for symmetric `p`; the bracket
/// starts at the first dyadic `2^{-k}` where it is positive, so bisection
/// converges to the interior root.
pub fn solve_q(p: &GeneratorMeasure, tol: f64) -> Result<BoundaryParams, BoundaryError> {
    let mut hi = 1.0;
    if scalar_equation(hi, p) >= 0.0 {
        return Err(BoundaryError::NoSignChange);
    }
    let mut lo = 0.5;
    let mut k = 1;
    while scalar_equation(lo, p) <= 0.0 {
        k += 1;
        if k > 1000 {
            return Err(BoundaryError::NoSignChange);
        }
        lo *= 0.5;
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if scalar_equation(mid, p) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let q: Vec<f64> = (0..2 * p.rank())
        .map(|idx| {
            let j = index_letter(idx);
            let (pj, pmj) = (p.get(j), p.get(-j));
            (-x + (x * x + 4.0 * pj * pmj).sqrt()) / (2.0 * pmj)
        })
        .collect();
    let bp = BoundaryParams::assemble(p, q, x);
    if bp.q.iter().any(|&qi| !(qi > 0.0 && qi < 1.0)) || !(bp.residual <= tol) {
        return Err(BoundaryError::ToleranceNotReached {
            residual: bp.residual,
            tol,
        });
    }
    Ok(bp)
}

impl BoundaryParams {
    fn assemble(p: &GeneratorMeasure, q: Vec<f64>, x_root: f64) -> Self {
        let d = p.rank();
        let p = p.as_slice().to_vec();
        let mirror = |idx: usize| idx ^ 1;
        let v = (0..2 * d)
            .map(|i| {
                let (qi, qm) = (q[i], q[mirror(i)]);
                qi * (1.0 - qm) / (1.0 - qm * qi)
            })
            .collect();
        let residual = (0..2 * d)
            .map(|j| {
                let s: f64 = (0..2 * d)
                    .filter(|&i| i != j)
                    .map(|i| p[i] * q[mirror(i)])
                    .sum();
                (q[j] - p[j] - q[j] * s).abs()
            })
            .fold(0.0, f64::max);
        Self {
            d,
            p,
            x_root,
            q,
            v,
            residual,
        }
    }

    /// Builds parameters from arbitrary `q` without solving or validating.
    /// Used for sensitivity probes; the residual records how far `q` is from
    /// the hitting-probability system.
    pub fn from_q_unchecked(p: &GeneratorMeasure, q: Vec<f64>) -> Self {
        let x = 1.0
            - (0..2 * p.rank())
                .map(|i| p.as_slice()[i] * q[i ^ 1])
                .sum::<f64>();
        Self::assemble(p, q, x)
    }

    pub fn rank(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn x_root(&self) -> f64 {
        self.x_root
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn q(&self, letter: Letter) -> f64 {
        self.q[letter_index(letter)]
    }

    pub fn v(&self, letter: Letter) -> f64 {
        self.v[letter_index(letter)]
    }

    fn check_rank(&self, w: &FreeWord) -> Result<(), BoundaryError> {
        if w.rank() != self.d {
            return Err(BoundaryError::RankMismatch(self.d, w.rank()));
        }
        Ok(())
    }

    /// `ν(X_γ) = v(γ_1) Π_{ℓ≥2} v(γ_ℓ)/(1 - v(γ_{ℓ-1}^{-1}))`; 1 for the empty word.
    pub fn harmonic_cylinder(&self, gamma: &FreeWord) -> f64 {
        let letters = gamma.letters();
        let Some(&first) = letters.first() else {
            return 1.0;
        };
        let mut mass = self.v(first);
        for pair in letters.windows(2) {
            mass *= self.v(pair[1]) / (1.0 - self.v(-pair[0]));
        }
        mass
    }

    /// `(gν)(X_γ) = ν(g^{-1} X_γ)`, computed from cylinder masses alone.
    /// Requires `|γ| >= |g|`.
    pub fn translated_cylinder_mass(
        &self,
        g: &FreeWord,
        gamma: &FreeWord,
    ) -> Result<f64, BoundaryError> {
        self.check_rank(g)?;
        self.check_rank(gamma)?;
        if gamma.len() < g.len() {
            return Err(BoundaryError::CylinderTooShallow {
                depth: gamma.len(),
                needed: g.len(),
            });
        }
        if g.is_identity() {
            return Ok(self.harmonic_cylinder(gamma));
        }
        if gamma == g {
            // g^{-1} X_g is every boundary point not starting with g_last^{-1}
            let last = g.last().expect("nonempty");
            return Ok(1.0 - self.v(-last));
        }
        let shifted = g.invert().reduce_concat(gamma)?;
        Ok(self.harmonic_cylinder(&shifted))
    }

    /// `d(a_i ν)/dν` on cylinders starting with `first`.
    #[inline]
    pub fn rn_letter(&self, letter: Letter, first: Letter) -> f64 {
        if first == letter {
            1.0 / self.q(letter)
        } else {
            self.q(-letter)
        }
    }

    /// `d(gν)/dν` on `X_γ`, multiplied out along the letters of `g` with the
    /// cocycle identity. Requires `|γ| >= |g|` so the value is constant on the
    /// cylinder.
    pub fn rn_derivative(&self, g: &FreeWord, gamma: &FreeWord) -> Result<f64, BoundaryError> {
        self.check_rank(g)?;
        self.check_rank(gamma)?;
        if gamma.len() < g.len() {
            return Err(BoundaryError::CylinderTooShallow {
                depth: gamma.len(),
                needed: g.len(),
            });
        }
        let mut value = 1.0;
        let mut shifted = gamma.clone();
        for &letter in g.letters() {
            let first = shifted.first().expect("cylinder deeper than the translation");
            value *= self.rn_letter(letter, first);
            shifted = shifted.left_mul_letter(-letter);
        }
        Ok(value)
    }

    /// `h_{λ,f}(∂F, ν) = Σ_j λ_j [(1 - v_{-j}) f(q_j) + v_{-j} f(1/q_{-j})]`.
    pub fn boundary_entropy(&self, lambda: &GeneratorMeasure, f: &FDivergence) -> f64 {
        (0..2 * self.d)
            .map(|idx| {
                let j = index_letter(idx);
                let vm = self.v(-j);
                lambda.get(j) * ((1.0 - vm) * f.eval(self.q(j)) + vm * f.eval(1.0 / self.q(-j)))
            })
            .sum()
    }

    /// Values of `Ψ_{λ,f}(ν; ·)` on the `2d` depth-one cylinders, in letter
    /// layout order: on `X_{a_j}` the value is
    /// `Σ_{i≠j} λ_i Ψ_f(q_{-i}) + λ_j Ψ_f(1/q_j)`.
    pub fn criterion_values(
        &self,
        lambda: &GeneratorMeasure,
        f: &FDivergence,
    ) -> Result<Vec<f64>, BoundaryError> {
        if !lambda.is_symmetric() {
            return Err(BoundaryError::NonSymmetricWeights);
        }
        f.require_smooth()?;
        let mut away = vec![0.0; 2 * self.d];
        let mut inside = vec![0.0; 2 * self.d];
        for idx in 0..2 * self.d {
            let i = index_letter(idx);
            away[idx] = lambda.get(i) * psi(f, self.q(-i))?;
            inside[idx] = lambda.get(i) * psi(f, 1.0 / self.q(i))?;
        }
        let total_away: f64 = away.iter().sum();
        Ok((0..2 * self.d)
            .map(|j| total_away - away[j] + inside[j])
            .collect())
    }

    /// `max - min` of [`criterion_values`](Self::criterion_values).
    pub fn criterion_spread(
        &self,
        lambda: &GeneratorMeasure,
        f: &FDivergence,
    ) -> Result<f64, BoundaryError> {
        let values = self.criterion_values(lambda, f)?;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(max - min)
    }

    /// `max_γ |Σ_i p_i ν(a_i^{-1} X_γ) - ν(X_γ)|` over cylinders of the given
    /// depth.
    pub fn stationarity_residual(&self, depth: usize) -> Result<f64, BoundaryError> {
        if depth == 0 {
            return Err(BoundaryError::InvalidParameter("depth must be at least 1".into()));
        }
        check_depth(self.d, depth)?;
        let gens: Vec<FreeWord> = (0..2 * self.d)
            .map(|idx| FreeWord::generator(self.d, index_letter(idx) as i64))
            .collect::<Result<_, _>>()?;
        let mut worst: f64 = 0.0;
        for gamma in enumerate_sphere(self.d, depth)? {
            let mut pushed = 0.0;
            for (idx, g) in gens.iter().enumerate() {
                pushed += self.p[idx] * self.translated_cylinder_mass(g, &gamma)?;
            }
            worst = worst.max((pushed - self.harmonic_cylinder(&gamma)).abs());
        }
        Ok(worst)
    }
}

fn check_depth(rank: usize, depth: usize) -> Result<(), BoundaryError> {
    if depth > DEFAULT_DEPTH_CAP || sphere_size(rank, depth) > sphere_size(2, DEFAULT_DEPTH_CAP) {
        return Err(BoundaryError::DepthCap {
            depth,
            cap: DEFAULT_DEPTH_CAP,
        });
    }
    Ok(())
}

/// A measure `m` on `∂F_d` whose density with respect to `ν_μ` is constant on
/// the cylinders of a fixed depth `K`.
#[derive(Debug, Clone)]
pub struct CylinderDensity {
    bp: BoundaryParams,
    depth: usize,
    words: Vec<FreeWord>,
    index: StableMap<FreeWord, usize>,
    weights: Vec<f64>,
    masses: Vec<f64>,
}

impl CylinderDensity {
    /// The density `dm/dν ≡ 1`, i.e. `m = ν`.
    pub fn unit(bp: &BoundaryParams, depth: usize) -> Result<Self, BoundaryError> {
        Self::from_fn(bp, depth, |_| 1.0)
    }

    pub fn from_fn(
        bp: &BoundaryParams,
        depth: usize,
        mut weight: impl FnMut(&FreeWord) -> f64,
    ) -> Result<Self, BoundaryError> {
        if depth == 0 {
            return Err(BoundaryError::InvalidParameter("depth must be at least 1".into()));
        }
        check_depth(bp.d, depth + 1)?;
        let words = enumerate_sphere(bp.d, depth)?;
        let weights: Vec<f64> = words.iter().map(&mut weight).collect();
        Self::build(bp, depth, words, weights)
    }

    /// Weights listed in shortlex order of the depth-`K` words. The weights
    /// are rescaled so that `m` is a probability measure.
    pub fn from_weights(
        bp: &BoundaryParams,
        depth: usize,
        weights: Vec<f64>,
    ) -> Result<Self, BoundaryError> {
        if depth == 0 {
            return Err(BoundaryError::InvalidParameter("depth must be at least 1".into()));
        }
        check_depth(bp.d, depth + 1)?;
        let words = enumerate_sphere(bp.d, depth)?;
        if weights.len() != words.len() {
            return Err(BoundaryError::InvalidDensity(format!(
                "expected {} weights, got {}",
                words.len(),
                weights.len()
            )));
        }
        Self::build(bp, depth, words, weights)
    }

    fn build(
        bp: &BoundaryParams,
        depth: usize,
        words: Vec<FreeWord>,
        mut weights: Vec<f64>,
    ) -> Result<Self, BoundaryError> {
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(BoundaryError::InvalidDensity(format!(
                "weights must be finite and positive, got {bad}"
            )));
        }
        let masses: Vec<f64> = words.iter().map(|w| bp.harmonic_cylinder(w)).collect();
        let total: f64 = weights.iter().zip(&masses).map(|(w, m)| w * m).sum();
        for w in &mut weights {
            *w /= total;
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Self {
            bp: bp.clone(),
            depth,
            words,
            index,
            weights,
            masses,
        })
    }

    pub fn params(&self) -> &BoundaryParams {
        &self.bp
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[FreeWord] {
        &self.words
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ν(X_γ)` for each depth-`K` word, aligned with [`words`](Self::words).
    pub fn cylinder_masses(&self) -> &[f64] {
        &self.masses
    }

    /// `m(∂F) = Σ_γ weight(γ) ν(X_γ)`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().zip(&self.masses).map(|(w, m)| w * m).sum()
    }

    /// Density value on the cylinder of a word of length `>= K`.
    pub fn density_at(&self, word: &FreeWord) -> Option<f64> {
        if word.len() < self.depth {
            return None;
        }
        self.index
            .get(&word.prefix(self.depth))
            .map(|&i| self.weights[i])
    }

    pub fn sup_distance(&self, other: &CylinderDensity) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The density of `(m_1 + m_2)/2`.
    pub fn midpoint(&self, other: &CylinderDensity) -> Result<CylinderDensity, BoundaryError> {
        if self.depth != other.depth || self.bp != other.bp {
            return Err(BoundaryError::InvalidDensity(
                "midpoint needs densities over the same cylinders".into(),
            ));
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Self::build(&self.bp, self.depth, self.words.clone(), weights)
    }
}

/// `h_{λ,f}(m) = Σ_j λ_j D_f(a_j^{-1} m ‖ m)` as an exact finite sum over the
/// cylinders of depth `K + 1`. On `X_γ` the density of `a_j^{-1}m` with respect
/// to `m` is `h(a_j γ) · (d a_j^{-1}ν/dν)(γ) / h(γ)`.
pub fn density_entropy(
    m: &CylinderDensity,
    lambda: &GeneratorMeasure,
    f: &FDivergence,
) -> Result<f64, BoundaryError> {
    let bp = &m.bp;
    if lambda.rank() != bp.d {
        return Err(BoundaryError::RankMismatch(bp.d, lambda.rank()));
    }
    let fine = enumerate_sphere(bp.d, m.depth + 1)?;
    let mut total = 0.0;
    for gamma in &fine {
        let nu = bp.harmonic_cylinder(gamma);
        let here = m.density_at(gamma).expect("fine cylinder refines the density");
        let first = gamma.first().expect("nonempty");
        let mut inner = 0.0;
        for idx in 0..2 * bp.d {
            let j = index_letter(idx);
            let lj = lambda.get(j);
            let moved = gamma.left_mul_letter(j);
            let there = m.density_at(&moved).expect("translate keeps depth K");
            let ratio = there * bp.rn_letter(-j, first) / here;
            inner += lj * f.eval(ratio);
        }
        total += nu * here * inner;
    }
    Ok(total)
}

/// The density of `κ ∗ ν` with respect to `ν`, `Σ_g κ(g) d(gν)/dν`, on
/// cylinders of depth `max(1, max |g|)`.
pub fn push_convolve(
    kappa: &SparseMeasure<FreeWord>,
    bp: &BoundaryParams,
) -> Result<CylinderDensity, BoundaryError> {
    if !kappa.is_probability() {
        return Err(BoundaryError::InvalidDensity(format!(
            "κ must be a probability measure, total {}",
            kappa.total()
        )));
    }
    if kappa.identity().rank() != bp.d {
        return Err(BoundaryError::RankMismatch(bp.d, kappa.identity().rank()));
    }
    let depth = kappa.radius().max(1);
    let entries = kappa.sorted_entries();
    let mut err = None;
    let density = CylinderDensity::from_fn(bp, depth, |gamma| {
        let mut w = 0.0;
        for (g, mass) in &entries {
            match bp.rn_derivative(g, gamma) {
                Ok(r) => w += mass * r,
                Err(e) => err = Some(e),
            }
        }
        w
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(density),
    }
}

/// Monte Carlo settings for [`simulate_hitting_with`].
#[derive(Debug, Clone, Copy)]
pub struct HittingConfig {
    pub patience: usize,
    pub step_cap: usize,
}

impl Default for HittingConfig {
    fn default() -> Self {
        Self {
            patience: DEFAULT_PATIENCE,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

/// Empirical counts of the depth-`K` prefix of the walk's limit point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingCounts {
    pub depth: usize,
    pub paths: u64,
    /// Paths that hit the step cap before stabilizing.
    pub excluded: u64,
    #[serde(skip)]
    pub counts: BTreeMap<FreeWord, u64>,
}

impl HittingCounts {
    pub fn recorded(&self) -> u64 {
        self.paths - self.excluded
    }

    pub fn count(&self, gamma: &FreeWord) -> u64 {
        self.counts.get(gamma).copied().unwrap_or(0)
    }

    pub fn frequency(&self, gamma: &FreeWord) -> f64 {
        self.count(gamma) as f64 / self.recorded() as f64
    }

    /// Counts of the depth-`k` prefixes, for `k <= depth`.
    pub fn coarsen(&self, k: usize) -> HittingCounts {
        let mut counts = BTreeMap::new();
        for (w, &c) in &self.counts {
            *counts.entry(w.prefix(k)).or_insert(0) += c;
        }
        HittingCounts {
            depth: k.min(self.depth),
            paths: self.paths,
            excluded: self.excluded,
            counts,
        }
    }
}

/// One row of the cylinder comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderRow {
    pub word: String,
    pub nu_mass: f64,
    pub empirical_freq: f64,
    pub z_score: f64,
}

/// Compares empirical frequencies against `ν(X_γ)` for every depth-`K` word;
/// `z = (freq - ν) / σ` with `σ = √(ν(1-ν)/N)`.
pub fn cylinder_table(
    bp: &BoundaryParams,
    counts: &HittingCounts,
) -> Result<Vec<CylinderRow>, BoundaryError> {
    let n = counts.recorded() as f64;
    enumerate_sphere(bp.d, counts.depth)?
        .into_iter()
        .map(|gamma| {
            let nu = bp.harmonic_cylinder(&gamma);
            let freq = counts.frequency(&gamma);
            let sigma = (nu * (1.0 - nu) / n).sqrt();
            Ok(CylinderRow {
                word: gamma.to_string(),
                nu_mass: nu,
                empirical_freq: freq,
                z_score: (freq - nu) / sigma,
            })
        })
        .collect()
}

pub fn simulate_hitting(
    p: &GeneratorMeasure,
    paths: u64,
    depth: usize,
    seed: u64,
) -> Result<HittingCounts, BoundaryError> {
    simulate_hitting_with(p, paths, depth, seed, HittingConfig::default())
}

/// Runs `paths` independent walks, each until its reduced word reaches length
/// `depth + patience`, and records the depth-`K` prefix.
///
/// Paths are split into fixed blocks of 2^14; block `b` draws from ChaCha8
/// seeded with `seed` on stream `b`. Counts therefore do not depend on the
/// number of worker threads.
pub fn simulate_hitting_with(
    p: &GeneratorMeasure,
    paths: u64,
    depth: usize,
    seed: u64,
    config: HittingConfig,
) -> Result<HittingCounts, BoundaryError> {
    if paths == 0 {
        return Err(BoundaryError::InvalidParameter("paths must be at least 1".into()));
    }
    if depth == 0 {
        return Err(BoundaryError::InvalidParameter("depth must be at least 1".into()));
    }
    let rank = p.rank();
    let mut cumulative = Vec::with_capacity(2 * rank);
    let mut acc = 0.0;
    for &m in p.as_slice() {
        acc += m;
        cumulative.push(acc);
    }
    let target = depth + config.patience;
    let blocks = paths.div_ceil(PATHS_PER_BLOCK);
    let partials: Vec<(StableMap<Vec<Letter>, u64>, u64)> = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let start = block * PATHS_PER_BLOCK;
            let n = PATHS_PER_BLOCK.min(paths - start);
            let mut counts: StableMap<Vec<Letter>, u64> = StableMap::default();
            let mut excluded = 0;
            let mut word: Vec<Letter> = Vec::with_capacity(target + 1);
            for _ in 0..n {
                word.clear();
                let mut converged = false;
                for _ in 0..config.step_cap {
                    let u: f64 = rng.gen();
                    let idx = cumulative.iter().position(|&c| u < c).unwrap_or(2 * rank - 1);
                    let letter = index_letter(idx);
                    if word.last() == Some(&-letter) {
                        word.pop();
                    } else {
                        word.push(letter);
                    }
                    if word.len() >= target {
                        converged = true;
                        break;
                    }
                }
                if converged {
                    *counts.entry(word[..depth].to_vec()).or_insert(0) += 1;
                } else {
                    excluded += 1;
                }
            }
            (counts, excluded)
        })
        .collect();
    let mut counts = BTreeMap::new();
    let mut excluded = 0;
    for (block_counts, block_excluded) in partials {
        excluded += block_excluded;
        for (letters, c) in block_counts {
            let raw: Vec<i64> = letters.iter().map(|&l| l as i64).collect();
            *counts.entry(FreeWord::new(rank, &raw)?).or_insert(0) += c;
        }
    }
    Ok(HittingCounts {
        depth,
        paths,
        excluded,
        counts,
    })
}
