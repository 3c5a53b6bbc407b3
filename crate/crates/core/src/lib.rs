//! Line-breaking constructions of α-stable trees for α ∈ (1, 2].
//!
//! A tree is grown by gluing segments whose lengths come from the increments
//! of an increasing Markov chain `(M_p)` with generalized Mittag-Leffler
//! marginals. Branches are attached either at a uniform point of the skeleton
//! or at an existing branch point. The [`verify`] module turns the
//! distributional identities satisfied by the construction into automated
//! checks (exact shape enumeration, closed-form moments, KS / chi-square).
//!
//! Module map:
//!
//! * [`distributions`]: Gamma, Beta, Dirichlet and Mittag-Leffler samplers.
//! * [`chain`]: the chain `(M_p)`, its Brownian special case and the
//!   normalized chain.
//! * [`rtree`]: rooted trees with edge lengths, vertex weights and a
//!   prefix-sum index for uniform skeleton points.
//! * [`linebreaking`]: growth algorithms (I, II, Aldous, normalized,
//!   Marchal / Rémy).
//! * [`verify`]: oracles, statistical kernel and test suites.
//! * [`cli`]: the `stable-tree` command line front end.

// Comparisons are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod distributions;
pub mod error;
mod fenwick;
pub mod linebreaking;
pub mod rng;
pub mod rtree;
pub mod verify;

pub use chain::{AlphaParam, ChainState};
pub use distributions::{DirichletParams, M1Sampler, MlParams};
pub use error::{Error, Result};
pub use linebreaking::{Algorithm, GrowthConfig, GrowthOutcome, GrowthTrace};
pub use rng::RngStream;
pub use rtree::{ShapeSignature, SkeletonPoint, WeightedRTree};
pub use verify::{ShapeTable, TestReport};
