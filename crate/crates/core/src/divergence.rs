//! f-divergences and Furstenberg f-entropy of measures on a group.
//!
//! Conventions: `D_f(η‖m) = Σ_x m(x) f(η(x)/m(x))`, and the entropy with
//! weights `λ` is `h_{λ,f}(κ) = Σ_g λ(g) D_f(g^{-1}κ‖κ)`. The built-in `kl`
//! uses `f(z) = -ln z`, so `D_kl(η‖m) = Σ m ln(m/η)`: the argument order is
//! reversed with respect to the usual Kullback-Leibler convention.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::group::{FreeWord, GroupElement};
use crate::measure::{GeneratorMeasure, SparseMeasure};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Names accepted by [`FDivergence::builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["kl", "reverse_kl", "chi2", "hellinger2", "linear"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivergenceError {
    #[error("unknown divergence {0:?} (expected one of kl, reverse_kl, chi2, hellinger2, linear)")]
    UnknownName(String),
    #[error("divergence {0} has no analytic derivative")]
    NotSmooth(String),
    #[error("divergence {0} is not strictly convex")]
    NotStrictlyConvex(String),
    #[error("invalid convex function {name}: {reason}")]
    InvalidFunction { name: String, reason: String },
    #[error("measures do not share a support closed under the required translations")]
    SupportMismatch,
    #[error("measures live on different groups")]
    GroupMismatch,
}

/// A convex `f` on `(0, ∞)` with `f(1) = 0`, plus its derivative.
#[derive(Clone)]
pub struct FDivergence {
    name: String,
    f: RealFn,
    f_prime: Option<RealFn>,
    strictly_convex: bool,
}

impl fmt::Debug for FDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FDivergence")
            .field("name", &self.name)
            .field("smooth", &self.is_smooth())
            .field("strictly_convex", &self.strictly_convex)
            .finish()
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

impl FDivergence {
    pub fn kl() -> Self {
        Self::trusted("kl", |z| -z.ln(), |z| -1.0 / z, true)
    }

    pub fn reverse_kl() -> Self {
        Self::trusted("reverse_kl", |z| z * z.ln(), |z| z.ln() + 1.0, true)
    }

    pub fn chi2() -> Self {
        Self::trusted("chi2", |z| (z - 1.0) * (z - 1.0), |z| 2.0 * (z - 1.0), true)
    }

    pub fn hellinger2() -> Self {
        Self::trusted(
            "hellinger2",
            |z| {
                let s = z.sqrt() - 1.0;
                s * s
            },
            |z| 1.0 - 1.0 / z.sqrt(),
            true,
        )
    }

    /// `f(z) = z - 1`; every divergence vanishes.
    pub fn linear() -> Self {
        Self::trusted("linear", |z| z - 1.0, |_| 1.0, false)
    }

    fn trusted(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        strictly_convex: bool,
    ) -> Self {
        Self {
            name: name.to_string(),
            f: Arc::new(f),
            f_prime: Some(Arc::new(f_prime)),
            strictly_convex,
        }
    }

    pub fn builtin(name: &str) -> Result<Self, DivergenceError> {
        match name {
            "kl" => Ok(Self::kl()),
            "reverse_kl" => Ok(Self::reverse_kl()),
            "chi2" => Ok(Self::chi2()),
            "hellinger2" => Ok(Self::hellinger2()),
            "linear" => Ok(Self::linear()),
            other => Err(DivergenceError::UnknownName(other.to_string())),
        }
    }

    /// A user-supplied divergence. Checks `f(1) = 0`, midpoint convexity on a
    /// log grid, and (if given) that `f_prime` matches central differences of
    /// `f` within `1e-6` relative on `[1e-3, 1e3]`.
    pub fn custom(
        name: &str,
        f: RealFn,
        f_prime: Option<RealFn>,
        strictly_convex: bool,
    ) -> Result<Self, DivergenceError> {
        let invalid = |reason: String| DivergenceError::InvalidFunction {
            name: name.to_string(),
            reason,
        };
        let at_one = f(1.0);
        if at_one.abs() > 1e-15 {
            return Err(invalid(format!("f(1) = {at_one}, expected 0")));
        }
        let grid: Vec<f64> = log_grid(1e-3, 1e3, 61).collect();
        for &x in &grid {
            for &y in &grid {
                let mid = f(0.5 * (x + y));
                let avg = 0.5 * (f(x) + f(y));
                if mid > avg + 1e-12 * (1.0 + avg.abs()) {
                    return Err(invalid(format!("midpoint convexity fails at ({x}, {y})")));
                }
            }
        }
        if let Some(fp) = &f_prime {
            for &z in &grid {
                let h = 1e-5 * z;
                let fd = (f(z + h) - f(z - h)) / (2.0 * h);
                let exact = fp(z);
                if (fd - exact).abs() > 1e-6 * exact.abs().max(1.0) {
                    return Err(invalid(format!(
                        "derivative mismatch at {z}: analytic {exact}, finite difference {fd}"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            f,
            f_prime,
            strictly_convex,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_smooth(&self) -> bool {
        self.f_prime.is_some()
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.strictly_convex
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        (self.f)(z)
    }

    pub fn derivative(&self, z: f64) -> Result<f64, DivergenceError> {
        self.f_prime
            .as_ref()
            .map(|fp| fp(z))
            .ok_or_else(|| DivergenceError::NotSmooth(self.name.clone()))
    }

    /// Errors unless the divergence has an analytic derivative.
    pub fn require_smooth(&self) -> Result<(), DivergenceError> {
        if self.is_smooth() {
            Ok(())
        } else {
            Err(DivergenceError::NotSmooth(self.name.clone()))
        }
    }

    pub fn require_strictly_convex(&self) -> Result<(), DivergenceError> {
        self.require_smooth()?;
        if self.strictly_convex {
            Ok(())
        } else {
            Err(DivergenceError::NotStrictlyConvex(self.name.clone()))
        }
    }

    /// `F(x, y) = y f(x/y)`.
    pub fn homogeneous(&self, x: f64, y: f64) -> f64 {
        y * self.eval(x / y)
    }
}

/// `Ψ_f(z) = f(z) - z f'(z) + f'(1/z)`.
pub fn psi(f: &FDivergence, z: f64) -> Result<f64, DivergenceError> {
    let fp = f
        .f_prime
        .as_ref()
        .ok_or_else(|| DivergenceError::NotSmooth(f.name.clone()))?;
    Ok(f.eval(z) - z * fp(z) + fp(1.0 / z))
}

/// A divergence value, or `+∞` when the two measures are not in the same
/// measure class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DivergenceValue {
    Finite(f64),
    #[serde(serialize_with = "serialize_infinite")]
    Infinite,
}

fn serialize_infinite<S: serde::Serializer>(s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("+inf")
}

impl DivergenceValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            DivergenceValue::Finite(v) => Some(v),
            DivergenceValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, DivergenceValue::Infinite)
    }
}

impl fmt::Display for DivergenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceValue::Finite(v) => write!(f, "{v}"),
            DivergenceValue::Infinite => f.write_str("+inf"),
        }
    }
}

/// `D_f(η‖m) = Σ_{x ∈ supp m} m(x) f(η(x)/m(x))`; `+∞` when the supports differ.
pub fn f_divergence<E: GroupElement>(
    f: &FDivergence,
    eta: &SparseMeasure<E>,
    m: &SparseMeasure<E>,
) -> DivergenceValue {
    if !eta.same_group(m) || eta.support_len() != m.support_len() {
        return DivergenceValue::Infinite;
    }
    let mut sum = 0.0;
    for (x, mx) in m.iter() {
        let ex = eta.mass(x);
        if ex <= 0.0 {
            return DivergenceValue::Infinite;
        }
        sum += mx * f.eval(ex / mx);
    }
    DivergenceValue::Finite(sum)
}

/// `D_f(g^{-1}κ‖κ) = Σ_x κ(x) f(κ(gx)/κ(x))`; `+∞` if `g` moves the support.
fn translate_divergence<E: GroupElement>(
    f: &FDivergence,
    g: &E,
    kappa: &SparseMeasure<E>,
) -> DivergenceValue {
    let mut sum = 0.0;
    for (x, kx) in kappa.iter() {
        let kgx = kappa.mass(&g.compose(x));
        if kgx <= 0.0 {
            return DivergenceValue::Infinite;
        }
        sum += kx * f.eval(kgx / kx);
    }
    DivergenceValue::Finite(sum)
}

/// `h_{λ,f}(κ) = Σ_g λ(g) D_f(g^{-1}κ‖κ)` for finitely supported weights `λ`.
pub fn furstenberg_entropy<E: GroupElement>(
    f: &FDivergence,
    lambda: &SparseMeasure<E>,
    kappa: &SparseMeasure<E>,
) -> DivergenceValue {
    if !lambda.same_group(kappa) {
        return DivergenceValue::Infinite;
    }
    let mut total = 0.0;
    for (g, lg) in lambda.iter() {
        match translate_divergence(f, g, kappa) {
            DivergenceValue::Finite(v) => total += lg * v,
            DivergenceValue::Infinite => return DivergenceValue::Infinite,
        }
    }
    DivergenceValue::Finite(total)
}

/// [`furstenberg_entropy`] with weights on the free generators:
/// `Σ_j λ_j Σ_x κ(x) f(κ(a_j x)/κ(x))`.
pub fn furstenberg_entropy_group(
    f: &FDivergence,
    lambda: &GeneratorMeasure,
    kappa: &SparseMeasure<FreeWord>,
) -> DivergenceValue {
    furstenberg_entropy(f, &lambda.to_sparse(), kappa)
}

/// Entropy sum restricted to the interior of a finite support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorEntropy {
    /// `Σ_g λ(g) Σ_{x interior} κ(x) f(κ(gx)/κ(x))`.
    pub value: f64,
    /// κ-mass of points `x` with `gx ∈ supp κ` for every `g ∈ supp λ`.
    pub interior_mass: f64,
    /// κ-mass of the remaining support points.
    pub shell_mass: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Evaluates the entropy of a truncated measure on the points whose every
/// `λ`-translate stays inside the support.
pub fn interior_entropy<E: GroupElement>(
    f: &FDivergence,
    lambda: &SparseMeasure<E>,
    kappa: &SparseMeasure<E>,
) -> InteriorEntropy {
    let steps: Vec<(E, f64)> = lambda.sorted_entries();
    let mut out = InteriorEntropy {
        value: 0.0,
        interior_mass: 0.0,
        shell_mass: 0.0,
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
    };
    for (x, kx) in kappa.sorted_entries() {
        let ratios: Option<Vec<f64>> = steps
            .iter()
            .map(|(g, _)| {
                let kgx = kappa.mass(&g.compose(&x));
                (kgx > 0.0).then_some(kgx / kx)
            })
            .collect();
        match ratios {
            Some(ratios) => {
                out.interior_mass += kx;
                for ((_, lg), r) in steps.iter().zip(ratios) {
                    out.value += lg * kx * f.eval(r);
                    out.ratio_min = out.ratio_min.min(r);
                    out.ratio_max = out.ratio_max.max(r);
                }
            }
            None => out.shell_mass += kx,
        }
    }
    out
}

fn require_common_support<E: GroupElement>(
    nu: &SparseMeasure<E>,
    m: &SparseMeasure<E>,
) -> Result<(), DivergenceError> {
    if !nu.same_group(m) {
        return Err(DivergenceError::GroupMismatch);
    }
    if nu.support_len() != m.support_len() || m.iter().any(|(x, _)| !nu.contains(x)) {
        return Err(DivergenceError::SupportMismatch);
    }
    Ok(())
}

fn require_closed<E: GroupElement>(nu: &SparseMeasure<E>, g: &E) -> Result<(), DivergenceError> {
    let g_inv = g.inverse();
    for (x, _) in nu.iter() {
        if !nu.contains(&g.compose(x)) || !nu.contains(&g_inv.compose(x)) {
            return Err(DivergenceError::SupportMismatch);
        }
    }
    Ok(())
}

/// First-order convexity bound on `D_f(gm‖m)` around `ν`:
///
/// `D_f(gν‖ν) + Σ_x [f'(1/z₁(x)) + f(z₂(x)) - z₂(x) f'(z₂(x))] (m - ν)(x)`
///
/// with `z₁ = (g^{-1}ν)/ν` and `z₂ = (gν)/ν`. Requires `m` and `ν` to share a
/// support that is closed under `g^{±1}`.
pub fn first_order_bound<E: GroupElement>(
    f: &FDivergence,
    nu: &SparseMeasure<E>,
    m: &SparseMeasure<E>,
    g: &E,
) -> Result<f64, DivergenceError> {
    f.require_smooth()?;
    require_common_support(nu, m)?;
    require_closed(nu, g)?;
    let g_inv = g.inverse();
    let mut base = 0.0;
    let mut linear = 0.0;
    for (x, nx) in nu.sorted_entries() {
        let forward = nu.mass(&g.compose(&x)) / nx; // (g^{-1}ν)(x)/ν(x)
        let backward = nu.mass(&g_inv.compose(&x)) / nx; // (gν)(x)/ν(x)
        base += nx * f.eval(backward);
        let slope = f.derivative(1.0 / forward)? + f.eval(backward)
            - backward * f.derivative(backward)?;
        linear += slope * (m.mass(&x) - nx);
    }
    Ok(base + linear)
}

/// Lower bound on the `kl` entropy `h_μ(m)`:
///
/// `Σ_x m(x) [1 - (μ∗ν)(x)/ν(x) - Σ_g μ(g) ln(ν(gx)/ν(x))]`.
pub fn kl_lower_bound<E: GroupElement>(
    mu: &SparseMeasure<E>,
    nu: &SparseMeasure<E>,
    m: &SparseMeasure<E>,
) -> Result<f64, DivergenceError> {
    require_common_support(nu, m)?;
    if !mu.same_group(nu) {
        return Err(DivergenceError::GroupMismatch);
    }
    let steps = mu.sorted_entries();
    for (g, _) in &steps {
        require_closed(nu, g)?;
    }
    let mut sum = 0.0;
    for (x, mx) in m.sorted_entries() {
        let nx = nu.mass(&x);
        let mut integrand = 1.0;
        for (g, mg) in &steps {
            let pushed = nu.mass(&g.inverse().compose(&x)) / nx;
            let pulled = nu.mass(&g.compose(&x)) / nx;
            integrand -= mg * pushed + mg * pulled.ln();
        }
        sum += mx * integrand;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_cyclic_measure, random_free_measure, CyclicPoint};
    use crate::group::{FreeWord, LatticePoint};
    use crate::measure::{convolve, translate, tv_distance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_strict() -> Vec<FDivergence> {
        vec![
            FDivergence::kl(),
            FDivergence::reverse_kl(),
            FDivergence::chi2(),
            FDivergence::hellinger2(),
        ]
    }

    fn e2() -> FreeWord {
        FreeWord::identity(2).unwrap()
    }

    #[test]
    fn builtins_satisfy_the_construction_checks() {
        for name in BUILTIN_NAMES {
            let d = FDivergence::builtin(name).unwrap();
            let checked = FDivergence::custom(name, d.f.clone(), d.f_prime.clone(), d.strictly_convex);
            assert!(checked.is_ok(), "{name}: {checked:?}");
        }
        assert!(matches!(FDivergence::builtin("tv"), Err(DivergenceError::UnknownName(_))));
    }

    #[test]
    fn custom_rejects_bad_functions() {
        let shifted: RealFn = Arc::new(|z: f64| z * z);
        assert!(FDivergence::custom("sq", shifted, None, true).is_err());
        let concave: RealFn = Arc::new(|z: f64| z.ln());
        assert!(FDivergence::custom("ln", concave, None, true).is_err());
        let f: RealFn = Arc::new(|z: f64| (z - 1.0) * (z - 1.0));
        let wrong: RealFn = Arc::new(|z: f64| z - 1.0);
        assert!(FDivergence::custom("chi", f.clone(), Some(wrong), true).is_err());
        let tv: RealFn = Arc::new(|z: f64| (z - 1.0).abs());
        let tv = FDivergence::custom("tv", tv, None, false).unwrap();
        assert_eq!(psi(&tv, 2.0), Err(DivergenceError::NotSmooth("tv".into())));
    }

    #[test]
    fn divergence_examples() {
        let g = FreeWord::generator(2, 1).unwrap();
        let eta = SparseMeasure::from_entries(e2(), [(e2(), 0.5), (g.clone(), 0.5)]).unwrap();
        let m = SparseMeasure::from_entries(e2(), [(e2(), 0.25), (g.clone(), 0.75)]).unwrap();
        for f in all_strict() {
            assert_eq!(f_divergence(&f, &m, &m), DivergenceValue::Finite(0.0));
        }
        let lin = f_divergence(&FDivergence::linear(), &eta, &m).finite().unwrap();
        assert!(lin.abs() < 1e-15);
        let kl = f_divergence(&FDivergence::kl(), &eta, &m).finite().unwrap();
        let expected = -(0.25 * 2f64.ln() + 0.75 * (2.0f64 / 3.0).ln());
        assert!((kl - expected).abs() < 1e-15);
        assert!((kl - 0.13081).abs() < 1e-5);
        let other = SparseMeasure::dirac(g);
        assert!(f_divergence(&FDivergence::kl(), &other, &m).is_infinite());
    }

    #[test]
    fn entropy_of_truncated_ball_is_infinite() {
        let ball = crate::group::enumerate_ball(2, 2).unwrap();
        let n = ball.len() as f64;
        let kappa = SparseMeasure::from_entries(e2(), ball.into_iter().map(|w| (w, 1.0 / n))).unwrap();
        let lambda = GeneratorMeasure::uniform(2).unwrap();
        assert!(furstenberg_entropy_group(&FDivergence::kl(), &lambda, &kappa).is_infinite());
    }

    #[test]
    fn linear_entropy_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let kappa = random_cyclic_measure(&mut rng, 7);
            let lambda = random_cyclic_measure(&mut rng, 7);
            let h = furstenberg_entropy(&FDivergence::linear(), &lambda, &kappa).finite().unwrap();
            assert!(h.abs() < 1e-14);
        }
    }

    #[test]
    fn geometric_profile_on_z_has_constant_ratios() {
        // κ(x) ∝ r^{|x|}: away from 0 the ratios are r and 1/r.
        let r: f64 = 0.6;
        let origin = LatticePoint::origin(1);
        let kappa = SparseMeasure::from_entries(
            origin.clone(),
            (-30i64..=30).map(|x| (LatticePoint::new(vec![x]), r.powi(x.abs() as i32))),
        )
        .unwrap();
        let kappa = kappa.scaled(1.0 / kappa.total());
        let lambda = SparseMeasure::from_entries(
            origin.clone(),
            [(LatticePoint::new(vec![1]), 0.5), (LatticePoint::new(vec![-1]), 0.5)],
        )
        .unwrap();
        let f = FDivergence::chi2();
        let interior = interior_entropy(&f, &lambda, &kappa);
        // oracle: per-point sums with the constant ratios
        let mut expected = 0.0;
        for x in -29i64..=29 {
            let kx = kappa.mass(&LatticePoint::new(vec![x]));
            let (up, down) = if x > 0 {
                (r, 1.0 / r)
            } else if x < 0 {
                (1.0 / r, r)
            } else {
                (r, r)
            };
            expected += kx * (0.5 * f.eval(up) + 0.5 * f.eval(down));
        }
        assert!((interior.value - expected).abs() < 1e-14);
        assert!((interior.ratio_min - r).abs() < 1e-12);
        assert!((interior.ratio_max - 1.0 / r).abs() < 1e-12);
        let edge = 2.0 * kappa.mass(&LatticePoint::new(vec![30]));
        assert!((interior.shell_mass - edge).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let kl = FDivergence::kl();
        assert!(psi(&kl, 1.0).unwrap().abs() < 1e-15);
        for &z in &[0.1, 0.5, 2.0, 7.0] {
            assert!((psi(&kl, z).unwrap() - (-z.ln() + 1.0 - z)).abs() < 1e-13);
            let diff = psi(&kl, z).unwrap() - psi(&kl, 1.0 / z).unwrap();
            assert!((diff - (2.0 * (1.0 / z).ln() + 1.0 / z - z)).abs() < 1e-12);
        }
        let chi2 = FDivergence::chi2();
        assert!(psi(&chi2, 1.0).unwrap().abs() < 1e-15);
        for &z in &[0.2, 0.9, 3.0] {
            assert!((psi(&chi2, z).unwrap() - (1.0 - z * z + 2.0 / z - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_matches_finite_differences_of_homogeneous_form() {
        // Ψ_f(z) = ∂F/∂x(1, z) + ∂F/∂y(z, 1)
        for f in all_strict() {
            for &z in &[0.3, 1.0, 2.5] {
                let h = 1e-6;
                let fx = (f.homogeneous(1.0 + h, z) - f.homogeneous(1.0 - h, z)) / (2.0 * h);
                let fy = (f.homogeneous(z, 1.0 + h) - f.homogeneous(z, 1.0 - h)) / (2.0 * h);
                assert!((psi(&f, z).unwrap() - (fx + fy)).abs() < 1e-6, "{}", f.name());
            }
        }
    }

    #[test]
    fn psi_is_strictly_decreasing() {
        let grid: Vec<f64> = log_grid(1e-3, 1e3, 200).collect();
        for f in all_strict() {
            let values: Vec<f64> = grid.iter().map(|&z| psi(&f, z).unwrap()).collect();
            assert!(values.windows(2).all(|w| w[1] < w[0]), "{}", f.name());
        }
    }

    #[test]
    fn first_order_bound_is_tight_at_nu() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let nu = random_cyclic_measure(&mut rng, 6);
        let g = CyclicPoint::new(6, 2);
        for f in all_strict() {
            let exact = f_divergence(&f, &translate(&g, &nu), &nu).finite().unwrap();
            let bound = first_order_bound(&f, &nu, &nu, &g).unwrap();
            assert!((bound - exact).abs() < 1e-13);
        }
        let lin = first_order_bound(&FDivergence::linear(), &nu, &random_cyclic_measure(&mut rng, 6), &g).unwrap();
        assert!(lin.abs() < 1e-13);
    }

    #[test]
    fn first_order_bound_rejects_open_support() {
        let nu = GeneratorMeasure::uniform(2).unwrap().to_sparse();
        let g = FreeWord::generator(2, 1).unwrap();
        assert_eq!(
            first_order_bound(&FDivergence::kl(), &nu, &nu, &g),
            Err(DivergenceError::SupportMismatch)
        );
    }

    #[test]
    fn kl_lower_bound_equality_for_stationary_nu() {
        // On a finite group the uniform measure is stationary for every μ.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 8;
        let uniform = SparseMeasure::from_entries(
            CyclicPoint::new(n, 0),
            (0..n).map(|k| (CyclicPoint::new(n, k), 1.0 / n as f64)),
        )
        .unwrap();
        let mu = random_cyclic_measure(&mut rng, n);
        assert!(tv_distance(&convolve(&mu, &uniform).unwrap(), &uniform) < 1e-14);
        let bound = kl_lower_bound(&mu, &uniform, &uniform).unwrap();
        let h = furstenberg_entropy(&FDivergence::kl(), &mu, &uniform).finite().unwrap();
        assert!((bound - h).abs() < 1e-14);
    }

    #[test]
    fn inequalities_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..300 {
            let n = rng.gen_range(3..9);
            let a = random_cyclic_measure(&mut rng, n);
            let b = random_cyclic_measure(&mut rng, n);
            let g = CyclicPoint::new(n, rng.gen_range(0..n));
            for f in all_strict() {
                let d = f_divergence(&f, &a, &b).finite().unwrap();
                assert!(d >= -1e-12, "nonnegativity {}", f.name());
                let bound = first_order_bound(&f, &b, &a, &g).unwrap();
                let actual = f_divergence(&f, &translate(&g, &a), &a).finite().unwrap();
                assert!(bound <= actual + 1e-12, "first-order bound {}", f.name());
            }
            let kl = f_divergence(&FDivergence::kl(), &a, &b).finite().unwrap();
            assert!(tv_distance(&a, &b) <= (2.0 * kl).sqrt() + 1e-12);
            let mu = random_cyclic_measure(&mut rng, n);
            let lower = kl_lower_bound(&mu, &b, &a).unwrap();
            let h = furstenberg_entropy(&FDivergence::kl(), &mu, &a).finite().unwrap();
            assert!(lower <= h + 1e-12);
        }
    }

    #[test]
    fn merging_points_does_not_increase_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f_list = all_strict();
        for _ in 0..200 {
            let n = rng.gen_range(3..8);
            let eta = random_cyclic_measure(&mut rng, n);
            let m = random_cyclic_measure(&mut rng, n);
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if i == j {
                continue;
            }
            let merge = |mu: &SparseMeasure<CyclicPoint>| {
                let entries = mu.iter().map(|(x, mass)| {
                    let target = if x.value() == j { CyclicPoint::new(n, i) } else { x.clone() };
                    (target, mass)
                });
                SparseMeasure::from_entries(CyclicPoint::new(n, 0), entries).unwrap()
            };
            for f in &f_list {
                let before = f_divergence(f, &eta, &m).finite().unwrap();
                let after = f_divergence(f, &merge(&eta), &merge(&m)).finite().unwrap();
                assert!(after <= before + 1e-12);
            }
        }
    }

    #[test]
    fn entropy_is_convex_in_the_measure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(3..8);
            let k0 = random_cyclic_measure(&mut rng, n);
            let k1 = random_cyclic_measure(&mut rng, n);
            let lambda = random_cyclic_measure(&mut rng, n);
            let t: f64 = rng.gen_range(0.01..0.99);
            let mixed = k1.mix(&k0, t).unwrap();
            for f in all_strict() {
                let h = |k: &SparseMeasure<CyclicPoint>| furstenberg_entropy(&f, &lambda, k).finite().unwrap();
                assert!(h(&mixed) <= t * h(&k1) + (1.0 - t) * h(&k0) + 1e-12);
            }
        }
    }

    #[test]
    fn free_group_entropy_is_infinite_on_finite_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let kappa = random_free_measure(&mut rng, 2, 3);
        let lambda = GeneratorMeasure::uniform(2).unwrap();
        assert!(furstenberg_entropy_group(&FDivergence::kl(), &lambda, &kappa).is_infinite());
    }
}
