//! Furstenberg f-entropy of group actions, computed exactly where possible.
//!
//! The crate covers nearest-neighbour random walks on the free group `F_d`:
//! hitting probabilities and the harmonic measure on `∂F_d`, the map `T`
//! from walk measures to the entropy weights for which the harmonic measure
//! minimizes `h_{λ,f}`, closed-form Abel measures `μ_a = (1-a) Σ a^n μ^{*n}`
//! through first-passage generating functions, and amenable-group checks on
//! `Z^k`.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`group`] | reduced words in `F_d`, lattice points in `Z^k` |
//! | [`measure`] | finitely supported measures, convolution, truncated Abel sums |
//! | [`divergence`] | f-divergences, f-entropy, `Ψ_f`, convexity bounds |
//! | [`boundary`] | `q`/`v` parameters, cylinder masses, RN cocycle, minimizer criterion |
//! | [`tmap`] | the correspondence `T` and its inverse |
//! | [`green`] | first-passage functions, closed-form `μ_a`, radial and lattice oracles |
//! | [`experiments`] | multi-route evaluations used by the CLI and acceptance tests |

pub mod boundary;
pub mod divergence;
pub mod experiments;
pub mod fixtures;
pub mod green;
pub mod group;
pub mod measure;
pub mod tmap;

pub use boundary::{BoundaryParams, CylinderDensity};
pub use divergence::{DivergenceValue, FDivergence};
pub use green::GreenParams;
pub use group::{FreeWord, GroupElement, LatticePoint};
pub use measure::{GeneratorMeasure, SparseMeasure};
