//! The correspondence `T: Δ_d → Δ_d` and its inverse.
//!
//! For symmetric `μ` with hitting probabilities `q`, `T(μ)` is the weight
//! measure `λ_j ∝ 1/φ(q_j)` with `φ(q) = Ψ_f(q) - Ψ_f(1/q)`; for that `λ` the
//! criterion `Ψ_{λ,f}(ν_μ; ·)` is constant, so `ν_μ` minimizes `h_{λ,f}`.
//!
//! The inverse works in `q` coordinates. `λ` fixes every `q_j` up to a common
//! scale `c` through `φ(q_j) = c/λ_j`; the scale is pinned by the realizability
//! condition `Σ_i v_i = 2 Σ_j q_j/(1+q_j) = 1`, and `p` then follows from the
//! linear system `M(q) p = 1`. Both unknowns are found by bisection on
//! monotone functions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::boundary::{solve_q, BoundaryError, DEFAULT_Q_TOL};
use crate::divergence::{psi, DivergenceError, FDivergence};
use crate::measure::{GeneratorMeasure, MeasureError};

/// Default bound on `|T(T^{-1}(λ)) - λ|_∞`.
pub const DEFAULT_INVERSE_TOL: f64 = 1e-12;
const REALIZABLE_SUM_TOL: f64 = 1e-9;
const BISECTION_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TMapError {
    #[error("T is defined on symmetric measures only")]
    NonSymmetric,
    #[error("q not realizable: {0}")]
    NotRealizable(String),
    #[error("inverse did not reach tolerance: residual {residual:e} > {tol:e}")]
    NoConvergence { residual: f64, tol: f64 },
    #[error("φ is not positive at q = {0}; f must be strictly convex with decreasing Ψ")]
    BadPhi(f64),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// `φ(q) = Ψ_f(q) - Ψ_f(1/q)`.
pub fn phi(f: &FDivergence, q: f64) -> Result<f64, DivergenceError> {
    Ok(psi(f, q)? - psi(f, 1.0 / q)?)
}

/// Weights `λ_j ∝ 1/φ(q_j)` for the half-vector `q_1..q_d`.
pub fn lambda_from_q(f: &FDivergence, q_half: &[f64]) -> Result<GeneratorMeasure, TMapError> {
    let inv: Vec<f64> = q_half
        .iter()
        .map(|&q| {
            let value = phi(f, q)?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(TMapError::BadPhi(q));
            }
            Ok(1.0 / value)
        })
        .collect::<Result<_, _>>()?;
    let total: f64 = inv.iter().sum();
    let half: Vec<f64> = inv.iter().map(|w| w / (2.0 * total)).collect();
    Ok(GeneratorMeasure::symmetric(&half)?)
}

fn half_q(p: &GeneratorMeasure) -> Result<Vec<f64>, TMapError> {
    let bp = solve_q(p, DEFAULT_Q_TOL)?;
    Ok((1..=p.rank()).map(|j| bp.q(j as i8)).collect())
}

/// `T(μ)` for symmetric generating `μ`.
pub fn t_forward(p: &GeneratorMeasure, f: &FDivergence) -> Result<GeneratorMeasure, TMapError> {
    if !p.is_symmetric() {
        return Err(TMapError::NonSymmetric);
    }
    f.require_smooth()?;
    f.require_strictly_convex()?;
    lambda_from_q(f, &half_q(p)?)
}

/// `M(q)`: diagonal `1/q_j + q_j`, off-diagonal entry `(j, k)` equal to `2 q_k`.
pub fn q_matrix(q_half: &[f64]) -> DMatrix<f64> {
    let d = q_half.len();
    DMatrix::from_fn(d, d, |j, k| {
        if j == k {
            1.0 / q_half[j] + q_half[j]
        } else {
            2.0 * q_half[k]
        }
    })
}

pub fn q_determinant(q_half: &[f64]) -> f64 {
    q_matrix(q_half).determinant()
}

/// Solves the hitting-probability equations for `p` given symmetric `q`.
pub fn q_to_p(q_half: &[f64]) -> Result<GeneratorMeasure, TMapError> {
    if q_half.is_empty() {
        return Err(TMapError::NotRealizable("empty q".into()));
    }
    if let Some(bad) = q_half.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(TMapError::NotRealizable(format!("q = {bad} outside (0,1)")));
    }
    let m = q_matrix(q_half);
    let d = q_half.len();
    let lu = m.lu();
    if !(lu.determinant() > 0.0) {
        return Err(TMapError::NotRealizable("M(q) is not positive definite".into()));
    }
    let half = lu
        .solve(&DVector::from_element(d, 1.0))
        .ok_or_else(|| TMapError::NotRealizable("M(q) is singular".into()))?;
    if let Some(bad) = half.iter().find(|x| !(**x > 0.0)) {
        return Err(TMapError::NotRealizable(format!("p component {bad} not positive")));
    }
    let total = 2.0 * half.sum();
    if (total - 1.0).abs() > REALIZABLE_SUM_TOL {
        return Err(TMapError::NotRealizable(format!("p sums to {total}")));
    }
    Ok(GeneratorMeasure::symmetric(half.as_slice())?)
}

/// Bisection for the largest-precision solution of a monotone predicate
/// flip on `(lo, hi)`: returns the midpoint once the interval collapses.
fn bisect(mut lo: f64, mut hi: f64, mut go_right: impl FnMut(f64) -> Result<bool, TMapError>) -> Result<f64, TMapError> {
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if go_right(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `q ∈ (0,1)` with `φ(q) = target`, using that `φ` decreases from `+∞` to 0.
fn phi_inverse(f: &FDivergence, target: f64) -> Result<f64, TMapError> {
    bisect(0.0, 1.0, |q| Ok(phi(f, q)? > target))
}

/// Result of [`t_inverse_report`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TMapReport {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub f: String,
    /// `|T(p) - λ|_∞`.
    pub residual: f64,
}

/// `T^{-1}(λ)` for symmetric generating `λ`; fails loudly unless the round
/// trip reaches `tol`.
pub fn t_inverse(
    lambda: &GeneratorMeasure,
    f: &FDivergence,
    tol: f64,
) -> Result<GeneratorMeasure, TMapError> {
    let report = t_inverse_report(lambda, f, tol)?;
    Ok(GeneratorMeasure::new(lambda.rank(), report.p)?)
}

pub fn t_inverse_report(
    lambda: &GeneratorMeasure,
    f: &FDivergence,
    tol: f64,
) -> Result<TMapReport, TMapError> {
    if !lambda.is_symmetric() {
        return Err(TMapError::NonSymmetric);
    }
    f.require_smooth()?;
    f.require_strictly_convex()?;
    let weights = lambda.half();
    let q_for = |ln_c: f64| -> Result<Vec<f64>, TMapError> {
        let c = ln_c.exp();
        weights.iter().map(|&l| phi_inverse(f, c / l)).collect()
    };
    let excess = |q: &[f64]| q.iter().map(|&x| 2.0 * x / (1.0 + x)).sum::<f64>() - 1.0;
    // Σ v is decreasing in c; bracket ln c
    let (mut lo, mut hi) = (-1.0, 1.0);
    while excess(&q_for(lo)?) < 0.0 {
        lo *= 2.0;
        if lo < -1e3 {
            return Err(TMapError::NotRealizable("no scale with Σ v ≥ 1".into()));
        }
    }
    while excess(&q_for(hi)?) > 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(TMapError::NotRealizable("no scale with Σ v ≤ 1".into()));
        }
    }
    let ln_c = bisect(lo, hi, |x| Ok(excess(&q_for(x)?) > 0.0))?;
    let q = q_for(ln_c)?;
    let p = q_to_p(&q)?;
    let image = t_forward(&p, f)?;
    let residual = image.max_abs_diff(lambda);
    if !(residual < tol) {
        return Err(TMapError::NoConvergence { residual, tol });
    }
    Ok(TMapReport {
        p: p.as_slice().to_vec(),
        q: (1..=p.rank()).flat_map(|j| [q[j - 1], q[j - 1]]).collect(),
        lambda: lambda.as_slice().to_vec(),
        f: f.name().to_string(),
        residual,
    })
}

/// `T(p)` together with its `q` values and the criterion spread of `ν_μ`.
pub fn t_forward_report(p: &GeneratorMeasure, f: &FDivergence) -> Result<TMapReport, TMapError> {
    let lambda = t_forward(p, f)?;
    let bp = solve_q(p, DEFAULT_Q_TOL)?;
    let residual = bp.criterion_spread(&lambda, f)?;
    Ok(TMapReport {
        p: p.as_slice().to_vec(),
        q: bp.q_values().to_vec(),
        lambda: lambda.as_slice().to_vec(),
        f: f.name().to_string(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_symmetric_half;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example() -> GeneratorMeasure {
        GeneratorMeasure::symmetric(&[1.0 / 3.0, 1.0 / 6.0]).unwrap()
    }

    #[test]
    fn uniform_is_fixed() {
        for name in ["kl", "reverse_kl", "chi2", "hellinger2"] {
            let f = FDivergence::builtin(name).unwrap();
            for d in 2..=4 {
                let u = GeneratorMeasure::uniform(d).unwrap();
                assert!(t_forward(&u, &f).unwrap().max_abs_diff(&u) < 1e-15);
                let back = t_inverse(&u, &f, DEFAULT_INVERSE_TOL).unwrap();
                assert!(back.max_abs_diff(&u) < 1e-12, "{name} d={d}");
            }
        }
    }

    #[test]
    fn worked_example() {
        let lambda = t_forward(&example(), &FDivergence::kl()).unwrap();
        assert!((lambda.get(1) - 0.32378).abs() < 5e-4, "{}", lambda.get(1));
        let bp = solve_q(&example(), DEFAULT_Q_TOL).unwrap();
        assert!(bp.criterion_spread(&lambda, &FDivergence::kl()).unwrap() < 1e-10);
        let back = t_inverse(&lambda, &FDivergence::kl(), DEFAULT_INVERSE_TOL).unwrap();
        assert!(back.max_abs_diff(&example()) < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = GeneratorMeasure::new(2, vec![0.3, 0.2, 0.25, 0.25]).unwrap();
        assert_eq!(t_forward(&p, &FDivergence::kl()), Err(TMapError::NonSymmetric));
        assert!(t_forward(&example(), &FDivergence::linear()).is_err());
        assert!(q_to_p(&[0.5, 1.2]).is_err());
        // not on the realizable surface
        assert!(matches!(q_to_p(&[0.1, 0.1]), Err(TMapError::NotRealizable(_))));
    }

    #[test]
    fn q_to_p_examples() {
        let u = q_to_p(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!(u.max_abs_diff(&GeneratorMeasure::uniform(2).unwrap()) < 1e-15);
        let bp = solve_q(&example(), DEFAULT_Q_TOL).unwrap();
        let p = q_to_p(&[bp.q(1), bp.q(2)]).unwrap();
        assert!(p.max_abs_diff(&example()) < 1e-12);
        let rounded = q_to_p(&[0.4308, 0.2481]);
        // rounding leaves the realizable surface by about 1e-4
        if let Ok(p) = rounded {
            assert!(p.max_abs_diff(&example()) < 1e-3);
        }
    }

    #[test]
    fn determinant_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let d = rng.gen_range(2..=6);
            let q: Vec<f64> = (0..d).map(|_| rng.gen_range(1e-6..1.0)).collect();
            assert!(q_determinant(&q) > 0.0, "{q:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn round_trip(seed in any::<u64>(), d in 2usize..=3, use_chi2 in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = GeneratorMeasure::symmetric(&random_symmetric_half(&mut rng, d, 0.05)).unwrap();
            let f = if use_chi2 { FDivergence::chi2() } else { FDivergence::kl() };
            let lambda = t_forward(&p, &f).unwrap();
            let back = t_inverse(&lambda, &f, DEFAULT_INVERSE_TOL).unwrap();
            prop_assert!(back.max_abs_diff(&p) < 1e-9);
        }

        #[test]
        fn q_round_trip(seed in any::<u64>(), d in 2usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = GeneratorMeasure::symmetric(&random_symmetric_half(&mut rng, d, 0.05)).unwrap();
            let q = half_q(&p).unwrap();
            let back = q_to_p(&q).unwrap();
            prop_assert!(back.max_abs_diff(&p) < 1e-10);
            let q2 = half_q(&back).unwrap();
            for (a, b) in q.iter().zip(&q2) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn injective_on_separated_pairs(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = GeneratorMeasure::symmetric(&random_symmetric_half(&mut rng, 3, 0.05)).unwrap();
            let r = GeneratorMeasure::symmetric(&random_symmetric_half(&mut rng, 3, 0.05)).unwrap();
            prop_assume!(p.max_abs_diff(&r) > 1e-3);
            let f = FDivergence::kl();
            prop_assert!(t_forward(&p, &f).unwrap().max_abs_diff(&t_forward(&r, &f).unwrap()) > 0.0);
        }
    }
}
