//! Low-rank moment relaxations for polynomial optimization.
//!
//! A polynomial given as a sum of `r` products of univariate factors,
//! `f(x) = Σ_l Π_i f_{l,i}(x_i)`, is lifted with partial-product variables
//! `t_{l,i} = t_{l,i-1} f_{l,i}(x_i)`. The correlative sparsity graph of the
//! lifted problem has treewidth `min(n, r + 1)`, so the clique-wise moment
//! relaxation only involves PSD blocks whose size depends on the rank.
//!
//! The crate is organised along the pipeline:
//!
//! * [`polyrep`]: univariate factors, CP-form polynomials, dense expansion,
//!   instance generators.
//! * [`sparsity`]: the lifted graph, elimination orderings, clique trees.
//! * [`lifting`]: the lifted problem and constraint-to-clique assignment.
//! * [`relaxation`]: block moment SDP assembly (low-rank and dense).
//! * [`solver`]: an interior-point method for block SDPs.
//! * [`pipeline`]: end-to-end runs and machine-readable reports.

pub mod error;
pub mod lifting;
pub mod pipeline;
pub mod polyrep;
pub mod relaxation;
pub mod solver;
pub mod sparsity;

pub use error::{Error, Result};
pub use lifting::{assign_to_cliques, build_lifted_pop, CliqueAssignment, LiftedPop, LiftedVar};
pub use pipeline::{
    solve_dense, solve_low_rank, DenseOutput, InstanceDescriptor, PipelineOptions, PipelineOutput,
    RunReport,
};
pub use polyrep::{Basis, CpPoly, DensePoly, Monomial, UniPoly};
pub use relaxation::{BlockSdp, ComplexityReport, MomentRelaxation};
pub use solver::{solve_block_sdp, SolveResult, SolveStatus, SolverOptions};
pub use sparsity::{CliqueTree, SparsityGraph};
