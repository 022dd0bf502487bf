//! Closed-form Abel measures `μ_a = (1-a) Σ_n a^n μ^{*n}` for nearest-neighbour
//! walks on `F_d`, together with radial and lattice oracles.
//!
//! With first-passage generating functions `F_j(a) = Σ_n P(τ_{a_j} = n) a^n`
//! the Green function is multiplicative along reduced words:
//! `μ_a(x) = (1-a) G_e Π_ℓ F_{x_ℓ}(a)`. The `F_j` solve
//! `F_j = a p_j + a F_j Σ_{i≠j} p_i F_{-i}`; at `a = 1` this is the
//! hitting-probability system, so `F_j(1^-) = q_j`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boundary::{solve_q, BoundaryError, DEFAULT_Q_TOL};
use crate::divergence::FDivergence;
use crate::group::{index_letter, sphere_size, FreeWord, LatticePoint};
use crate::measure::{abel_truncation_index, GeneratorMeasure, MeasureError, SparseMeasure};
use crate::tmap::{t_inverse, TMapError, DEFAULT_INVERSE_TOL};

pub const DEFAULT_GREEN_TOL: f64 = 1e-13;
const FIXED_POINT_CAP: usize = 1_000_000;
/// Work budget (lattice sites × steps × support) for the lattice oracle.
pub const LATTICE_WORK_CAP: u64 = 4_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreenError {
    #[error("a must lie in (0,1), got {0}")]
    InvalidA(f64),
    #[error("first-passage iteration did not converge: residual {0:e}")]
    NoConvergence(f64),
    #[error("branch-sum system is singular")]
    Singular,
    #[error("lattice computation infeasible: {0}")]
    Infeasible(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    TMap(#[from] TMapError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// First-passage and Green-function data realizing `μ_a` exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenParams {
    pub d: usize,
    pub p: Vec<f64>,
    pub a: f64,
    #[serde(rename = "F")]
    pub first_passage: Vec<f64>,
    #[serde(rename = "G_e")]
    pub g_e: f64,
    /// `B_i = Σ_{x starts with a_i} Π F_{x_ℓ}`.
    #[serde(rename = "B")]
    pub branch: Vec<f64>,
    #[serde(rename = "T_total")]
    pub t_total: f64,
    /// Largest residual of the first-passage equations.
    pub residual: f64,
    /// `|(1-a) G_e T_total - 1|`.
    pub mass_residual: f64,
}

impl GreenParams {
    pub fn f(&self, letter: i8) -> f64 {
        self.first_passage[crate::group::letter_index(letter)]
    }

    /// `W_i`, the `μ_a`-mass of words starting with `a_i`.
    pub fn branch_mass(&self, letter: i8) -> f64 {
        (1.0 - self.a) * self.g_e * self.branch[crate::group::letter_index(letter)]
    }
}

fn first_passage_residual(p: &[f64], a: f64, f: &[f64]) -> f64 {
    (0..p.len())
        .map(|j| {
            let s: f64 = (0..p.len()).filter(|&i| i != j).map(|i| p[i] * f[i ^ 1]).sum();
            (f[j] - a * p[j] - a * s * f[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Solves for `F_j(a)`, `G_e` and the branch sums.
///
/// The iteration `F_j ← a p_j / (1 - a Σ_{i≠j} p_i F_{-i})` starts at zero and
/// increases monotonically to the minimal solution.
pub fn solve_first_passage(
    p: &GeneratorMeasure,
    a: f64,
    tol: f64,
) -> Result<GreenParams, GreenError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(GreenError::InvalidA(a));
    }
    let n = p.as_slice().len();
    let pv = p.as_slice();
    let mut f = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..FIXED_POINT_CAP {
        for j in 0..n {
            let s: f64 = (0..n).filter(|&i| i != j).map(|i| pv[i] * f[i ^ 1]).sum();
            next[j] = a * pv[j] / (1.0 - a * s);
        }
        let change = f
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut f, &mut next);
        if change <= 1e-17 {
            converged = true;
            break;
        }
    }
    let residual = first_passage_residual(pv, a, &f);
    if !converged && residual > tol || !(residual <= tol) {
        return Err(GreenError::NoConvergence(residual));
    }
    let g_e = 1.0 / (1.0 - a * (0..n).map(|i| pv[i] * f[i ^ 1]).sum::<f64>());

    // unknowns B_1..B_{2d}, T: B_j + F_j B_{-j} - F_j T = 0, T - Σ B_i = 1
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for j in 0..n {
        m[(j, j)] = 1.0;
        m[(j, j ^ 1)] += f[j];
        m[(j, n)] = -f[j];
    }
    for i in 0..n {
        m[(n, i)] = -1.0;
    }
    m[(n, n)] = 1.0;
    rhs[n] = 1.0;
    let sol = m.lu().solve(&rhs).ok_or(GreenError::Singular)?;
    let branch: Vec<f64> = sol.iter().take(n).copied().collect();
    let t_total = sol[n];
    let mass_residual = ((1.0 - a) * g_e * t_total - 1.0).abs();
    Ok(GreenParams {
        d: p.rank(),
        p: pv.to_vec(),
        a,
        first_passage: f,
        g_e,
        branch,
        t_total,
        residual,
        mass_residual,
    })
}

/// `μ_a(x) = (1-a) G_e Π_ℓ F_{x_ℓ}(a)`.
pub fn mu_a_mass(gp: &GreenParams, x: &FreeWord) -> f64 {
    x.letters()
        .iter()
        .fold((1.0 - gp.a) * gp.g_e, |acc, &l| acc * gp.f(l))
}

/// `h_{λ,f}(F_d, μ_a) = Σ_j λ_j [W_{-j} f(1/F_{-j}) + (1 - W_{-j}) f(F_j)]`.
pub fn abel_entropy(gp: &GreenParams, lambda: &GeneratorMeasure, f: &FDivergence) -> f64 {
    (0..2 * gp.d)
        .map(|idx| {
            let j = index_letter(idx);
            let w = gp.branch_mass(-j);
            lambda.get(j) * (w * f.eval(1.0 / gp.f(-j)) + (1.0 - w) * f.eval(gp.f(j)))
        })
        .sum()
}

/// Law of `|R_n|` for the uniform walk on `F_d`: a birth-death chain moving
/// up with probability `(2d-1)/(2d)` away from the origin.
pub fn radial_distribution(d: usize, n: usize) -> Vec<f64> {
    let up = (2 * d - 1) as f64 / (2 * d) as f64;
    let down = 1.0 - up;
    let mut cur = vec![0.0; n + 1];
    cur[0] = 1.0;
    let mut next = vec![0.0; n + 1];
    for step in 0..n {
        next.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..=step.min(n) {
            let m = cur[k];
            if m == 0.0 {
                continue;
            }
            if k == 0 {
                next[1] += m;
            } else {
                next[k + 1] += m * up;
                next[k - 1] += m * down;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

fn ln_sphere_size(d: usize, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        ((2 * d) as f64).ln() + (k - 1) as f64 * ((2 * d - 1) as f64).ln()
    }
}

/// `H(μ^{*n})/n` for the uniform walk, using that `μ^{*n}` is uniform on each
/// sphere.
pub fn kv_entropy_rate(d: usize, n: usize) -> f64 {
    assert!(n > 0, "n must be positive");
    let dist = radial_distribution(d, n);
    let h: f64 = dist
        .iter()
        .enumerate()
        .filter(|(_, &pk)| pk > 0.0)
        .map(|(k, &pk)| pk * (-pk.ln() + ln_sphere_size(d, k)))
        .sum();
    h / n as f64
}

/// Radial Abel masses `(1-a) Σ_{n≤N} a^n P(|R_n| = k)` for `k = 0..=k_max`,
/// with `N` chosen so that `a^{N+1} <= tail`.
pub fn radial_abel_masses(
    d: usize,
    a: f64,
    k_max: usize,
    tail: f64,
) -> Result<Vec<f64>, GreenError> {
    let terms = abel_truncation_index(a, tail)?;
    let up = (2 * d - 1) as f64 / (2 * d) as f64;
    let down = 1.0 - up;
    let width = terms + 2;
    let mut cur = vec![0.0; width];
    cur[0] = 1.0;
    let mut next = vec![0.0; width];
    let mut out = vec![0.0; k_max + 1];
    let mut weight = 1.0 - a;
    for n in 0..=terms {
        if n > 0 {
            next.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..width - 1 {
                let m = cur[k];
                if m == 0.0 {
                    continue;
                }
                if k == 0 {
                    next[1] += m;
                } else {
                    next[k + 1] += m * up;
                    next[k - 1] += m * down;
                }
            }
            std::mem::swap(&mut cur, &mut next);
            weight *= a;
        }
        for k in 0..=k_max.min(width - 1) {
            out[k] += weight * cur[k];
        }
    }
    Ok(out)
}

/// Per-word Abel mass from the radial oracle: radial mass over sphere size.
pub fn radial_word_mass(radial: &[f64], d: usize, len: usize) -> f64 {
    radial[len] / sphere_size(d, len) as f64
}

/// One row of an `a`-sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub h_group: f64,
    pub h_boundary: f64,
    pub gap: f64,
    pub residual_mass_identity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `h_{λ,f}(∂F, ν_{T^{-1}(λ)})`, the minimal entropy number, when `λ` is
    /// symmetric and `f` strictly convex.
    pub floor: Option<f64>,
}

/// `h_{λ,f}(F, μ_a)` against `h_{λ,f}(∂F, ν_μ)` over a list of `a`.
pub fn sweep_a(
    p: &GeneratorMeasure,
    lambda: &GeneratorMeasure,
    f: &FDivergence,
    a_list: &[f64],
) -> Result<SweepTable, GreenError> {
    if lambda.rank() != p.rank() {
        return Err(GreenError::InvalidInput("λ and p have different ranks".into()));
    }
    let bp = solve_q(p, DEFAULT_Q_TOL)?;
    let h_boundary = bp.boundary_entropy(lambda, f);
    let rows = a_list
        .par_iter()
        .map(|&a| {
            let gp = solve_first_passage(p, a, DEFAULT_GREEN_TOL)?;
            let h_group = abel_entropy(&gp, lambda, f);
            Ok(SweepRow {
                a,
                h_group,
                h_boundary,
                gap: h_group - h_boundary,
                residual_mass_identity: gp.mass_residual,
            })
        })
        .collect::<Result<Vec<_>, GreenError>>()?;
    let floor = if lambda.is_symmetric() && f.is_strictly_convex() && f.is_smooth() {
        let mu = t_inverse(lambda, f, DEFAULT_INVERSE_TOL)?;
        Some(solve_q(&mu, DEFAULT_Q_TOL)?.boundary_entropy(lambda, f))
    } else {
        None
    };
    Ok(SweepTable { rows, floor })
}

/// Entropy of a truncated lattice Abel measure over its interior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeEntropy {
    pub value: f64,
    pub terms: usize,
    pub tail_bound: f64,
    /// Half-width of the box holding the truncated measure.
    pub half_width: usize,
    pub interior_mass: f64,
    pub shell_mass: f64,
    /// `(shell mass + tail) · max |f|` over the realized ratio range.
    pub bias_bound: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

fn lattice_offsets(
    m: &SparseMeasure<LatticePoint>,
    dim: usize,
) -> Result<Vec<(Vec<i64>, f64)>, GreenError> {
    m.sorted_entries()
        .into_iter()
        .map(|(x, w)| {
            if x.dim() != dim {
                return Err(GreenError::InvalidInput(format!(
                    "point {x} is not in Z^{dim}"
                )));
            }
            Ok((x.coords().to_vec(), w))
        })
        .collect()
}

/// `h_{λ,f}` of the truncated `μ_a` on `Z^k` (k = 1, 2), evaluated on the
/// interior: sites whose every `λ`-translate carries mass.
///
/// `μ^{*n}` is propagated on a dense box of half-width `N·s`, where `s` is the
/// largest coordinate in `supp μ`.
pub fn lattice_abel_entropy(
    dim: usize,
    mu: &SparseMeasure<LatticePoint>,
    lambda: &SparseMeasure<LatticePoint>,
    f: &FDivergence,
    a: f64,
    eps: f64,
) -> Result<LatticeEntropy, GreenError> {
    if !(dim == 1 || dim == 2) {
        return Err(GreenError::InvalidInput(format!("dimension {dim} not in {{1, 2}}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(GreenError::InvalidA(a));
    }
    if !mu.is_probability() {
        return Err(GreenError::InvalidInput("μ must be a probability measure".into()));
    }
    let steps = lattice_offsets(mu, dim)?;
    let weights = lattice_offsets(lambda, dim)?;
    let terms = abel_truncation_index(a, eps)?;
    let s = steps
        .iter()
        .flat_map(|(c, _)| c.iter().map(|x| x.unsigned_abs() as usize))
        .max()
        .unwrap_or(0)
        .max(1);
    let half = terms * s;
    let side = 2 * half + 1;
    let sites = (side as u64).pow(dim as u32);
    let work = sites
        .saturating_mul(terms as u64)
        .saturating_mul(steps.len() as u64);
    if work > LATTICE_WORK_CAP {
        return Err(GreenError::Infeasible(format!(
            "{sites} sites × {terms} steps exceeds the work cap; raise eps or lower a"
        )));
    }
    let flat = |c: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for &x in c {
            let shifted = x + half as i64;
            if shifted < 0 || shifted >= side as i64 {
                return None;
            }
            idx = idx * side + shifted as usize;
        }
        Some(idx)
    };
    let offset = |c: &[i64]| -> i64 {
        c.iter().fold(0i64, |acc, &x| acc * side as i64 + x)
    };
    let step_offsets: Vec<(i64, f64)> = steps.iter().map(|(c, w)| (offset(c), *w)).collect();
    let n_sites = sites as usize;
    let mut cur = vec![0.0; n_sites];
    let origin = flat(&vec![0; dim]).expect("origin in box");
    cur[origin] = 1.0;
    let mut next = vec![0.0; n_sites];
    let mut acc = vec![0.0; n_sites];
    let mut weight = 1.0 - a;
    acc[origin] = weight;
    // active region grows by s per step; restrict the sweep to it
    for n in 1..=terms {
        let reach = (n - 1) * s;
        next.iter_mut().for_each(|x| *x = 0.0);
        let lo = half - reach;
        let hi = half + reach;
        let mut visit = |idx: usize, m: f64| {
            for &(off, w) in &step_offsets {
                let target = (idx as i64 + off) as usize;
                next[target] += m * w;
            }
        };
        if dim == 1 {
            for i in lo..=hi {
                if cur[i] != 0.0 {
                    visit(i, cur[i]);
                }
            }
        } else {
            for r in lo..=hi {
                for c in lo..=hi {
                    let i = r * side + c;
                    if cur[i] != 0.0 {
                        visit(i, cur[i]);
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        weight *= a;
        for (t, x) in acc.iter_mut().zip(&cur) {
            *t += weight * x;
        }
    }

    let mut out = LatticeEntropy {
        value: 0.0,
        terms,
        tail_bound: a.powi(terms as i32 + 1),
        half_width: half,
        interior_mass: 0.0,
        shell_mass: 0.0,
        bias_bound: 0.0,
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
    };
    let coords_of = |mut idx: usize| -> Vec<i64> {
        let mut c = vec![0i64; dim];
        for slot in c.iter_mut().rev() {
            *slot = (idx % side) as i64 - half as i64;
            idx /= side;
        }
        c
    };
    for (idx, &kx) in acc.iter().enumerate() {
        if kx <= 0.0 {
            continue;
        }
        let here = coords_of(idx);
        let mut contribution = 0.0;
        let mut interior = true;
        for (g, lg) in &weights {
            let moved: Vec<i64> = here.iter().zip(g).map(|(x, y)| x + y).collect();
            match flat(&moved).map(|j| acc[j]).filter(|&m| m > 0.0) {
                Some(kgx) => {
                    let r = kgx / kx;
                    out.ratio_min = out.ratio_min.min(r);
                    out.ratio_max = out.ratio_max.max(r);
                    contribution += lg * kx * f.eval(r);
                }
                None => {
                    interior = false;
                    break;
                }
            }
        }
        if interior {
            out.value += contribution;
            out.interior_mass += kx;
        } else {
            out.shell_mass += kx;
        }
    }
    let f_max = if out.ratio_max > 0.0 {
        f.eval(out.ratio_min).abs().max(f.eval(out.ratio_max).abs())
    } else {
        0.0
    };
    out.bias_bound = (out.shell_mass + out.tail_bound) * f_max;
    Ok(out)
}

/// The lazy symmetric walk on `Z^k`: mass 1/2 at the origin, the rest spread
/// over `±e_i`.
pub fn lazy_lattice_walk(dim: usize) -> SparseMeasure<LatticePoint> {
    let w = 0.25 / dim as f64;
    let mut entries = vec![(LatticePoint::origin(dim), 0.5)];
    for axis in 0..dim {
        entries.push((LatticePoint::unit(dim, axis, 1), w));
        entries.push((LatticePoint::unit(dim, axis, -1), w));
    }
    SparseMeasure::from_entries(LatticePoint::origin(dim), entries).expect("positive masses")
}

/// The simple walk on `Z^k`: uniform on `±e_i`.
pub fn simple_lattice_walk(dim: usize) -> SparseMeasure<LatticePoint> {
    let w = 0.5 / dim as f64;
    let entries = (0..dim).flat_map(|axis| {
        [
            (LatticePoint::unit(dim, axis, 1), w),
            (LatticePoint::unit(dim, axis, -1), w),
        ]
    });
    SparseMeasure::from_entries(LatticePoint::origin(dim), entries).expect("positive masses")
}
