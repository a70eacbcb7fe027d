//! Explicit commutator factorizations of near-identity diffeomorphisms of the
//! 2-torus.
//!
//! A map `f = id + u` close to the identity is cut into two pieces supported in
//! annuli ([`fragmentation`]), each piece into three maps preserving the leaves of
//! a foliation by circles ([`foliation`]), and each of those into two commutators
//! ([`leafwise`]): one from Herman's conjugacy to a Diophantine rotation
//! ([`herman`], [`cohomology`]) and one writing the leftover rotations as brackets
//! of Möbius maps ([`mobius`]). [`pipeline::decompose`] runs the whole chain and
//! returns twelve pairs `(g_i, h_i)` with `f = [g_1, h_1] o ... o [g_12, h_12]`.
//!
//! ```
//! use diffeo_commutators::pipeline::{decompose, PipelineConfig};
//! use diffeo_commutators::{suite, GridSpec};
//!
//! let grid = GridSpec::new(2, 128)?;
//! let f = suite::diffeo(0, 2.5e-4, grid)?;
//! let cfg = PipelineConfig { grid: 128, k_scan: 1000, ..PipelineConfig::default() };
//! let (pairs, report) = decompose(&f, &cfg)?;
//! assert_eq!(pairs.len(), 12);
//! assert!(report.verification.residual_c0 < 1e-6);
//! # Ok::<(), diffeo_commutators::Error>(())
//! ```

pub mod bump;
pub mod cli;
pub mod cohomology;
pub mod diffeo;
pub mod error;
pub mod foliation;
pub mod fragmentation;
pub mod grid;
pub mod herman;
pub mod interp;
pub mod io;
pub mod leafwise;
pub mod mobius;
pub mod pipeline;
pub mod suite;

pub use cohomology::{certify_diophantine, solve_cohomological, twisted_difference, DiophantineVector};
pub use diffeo::{c0_distance, c1_norm, commutator, compose, compose_inverse, invert, make_diffeo, Support, TorusDiffeo};
pub use error::{Error, Result};
pub use grid::{DisplacementField, GridSpec, SpectralField};
pub use herman::{herman_map, herman_solve, HermanConfig, HermanSolution};
pub use interp::Interp;
