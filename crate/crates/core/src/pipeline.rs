//! End-to-end runs: lift, build the clique tree, assemble, solve, extract.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lifting::{assign_to_cliques, build_lifted_pop, CliqueAssignment, LiftedPop};
use crate::polyrep::{Basis, CpPoly};
use crate::relaxation::{
    assemble_dense_moment_sdp, assemble_lr_moment_sdp, ComplexityReport, MomentRelaxation,
};
use crate::solver::{
    candidate_at, extract_candidate, solve_block_sdp, SolveResult, SolveStatus, SolverOptions,
};
use crate::sparsity::{lr_clique_tree, CliqueTree};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub order: usize,
    pub box_radius: f64,
    pub t_bounds: bool,
    pub strict_degree: bool,
    pub solver: SolverOptions,
}

impl PipelineOptions {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Default::default()
        }
    }
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            order: 2,
            box_radius: 1.0,
            t_bounds: false,
            strict_degree: false,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub pop: LiftedPop,
    pub tree: CliqueTree,
    pub assignment: CliqueAssignment,
    pub relaxation: MomentRelaxation,
    pub complexity: ComplexityReport,
    pub result: SolveResult,
    /// Candidate point and its objective value; present when the solve has a
    /// solution.
    pub candidate: Option<(Vec<f64>, f64)>,
    pub wall_time_seconds: f64,
}

impl PipelineOutput {
    pub fn lower_bound(&self) -> f64 {
        self.result.lower_bound
    }
}

/// Low-rank relaxation of `min f` over the box `[-R, R]^n`.
pub fn solve_low_rank(f: &CpPoly, opts: &PipelineOptions) -> Result<PipelineOutput> {
    let started = Instant::now();
    let pop = build_lifted_pop(f, opts.box_radius, opts.t_bounds);
    let tree = lr_clique_tree(f.rank(), f.n());
    let assignment = assign_to_cliques(&pop, &tree)?;
    let relaxation =
        assemble_lr_moment_sdp(&pop, &tree, &assignment, opts.order, opts.strict_degree)?;
    let complexity = ComplexityReport::new(&tree, &pop, &relaxation, opts.strict_degree);
    log::info!(
        "r={} n={} k={}: {} blocks (max {}), {} moments, {} equalities",
        f.rank(),
        f.n(),
        opts.order,
        relaxation.sdp.blocks.len(),
        complexity.max_block_size,
        relaxation.sdp.y_count,
        relaxation.sdp.equalities.n_rows()
    );
    let result = solve_block_sdp(&relaxation.sdp, &opts.solver)?;
    let candidate = result
        .status
        .has_solution()
        .then(|| extract_candidate(&result, &relaxation, &pop, f));
    Ok(PipelineOutput {
        pop,
        tree,
        assignment,
        relaxation,
        complexity,
        result,
        candidate,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Output of the dense baseline.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    pub relaxation: MomentRelaxation,
    pub result: SolveResult,
    pub candidate: Option<(Vec<f64>, f64)>,
    pub wall_time_seconds: f64,
}

/// Dense moment relaxation of the expanded polynomial over the box.
pub fn solve_dense(f: &CpPoly, opts: &PipelineOptions) -> Result<DenseOutput> {
    let started = Instant::now();
    let dense = f.to_basis(Basis::Monomial).expand()?;
    let relaxation = assemble_dense_moment_sdp(&dense, opts.box_radius, opts.order)?;
    let result = solve_block_sdp(&relaxation.sdp, &opts.solver)?;
    let idx: Vec<usize> = (0..f.n()).collect();
    let candidate = result
        .status
        .has_solution()
        .then(|| candidate_at(&result, &relaxation, &idx, opts.box_radius, f));
    Ok(DenseOutput {
        relaxation,
        result,
        candidate,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDescriptor {
    pub r: usize,
    pub n: usize,
    pub d: usize,
    pub basis: Basis,
    pub seed: Option<u64>,
}

impl InstanceDescriptor {
    pub fn of(f: &CpPoly, seed: Option<u64>) -> Self {
        Self {
            r: f.rank(),
            n: f.n(),
            d: f.max_degree(),
            basis: f.basis(),
            seed,
        }
    }
}

/// One result row. Bounds are absent when the solve did not finish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub instance: InstanceDescriptor,
    pub order: usize,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub wall_time_seconds: f64,
    pub complexity: Option<ComplexityReport>,
    pub status: SolveStatus,
}

impl RunReport {
    pub fn from_output(out: &PipelineOutput, seed: Option<u64>) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            instance: InstanceDescriptor::of(out.pop.factors(), seed),
            order: out.relaxation.order,
            lower_bound: out
                .result
                .status
                .has_solution()
                .then_some(out.result.lower_bound)
                .and_then(finite),
            upper_bound: out.candidate.as_ref().and_then(|c| finite(c.1)),
            wall_time_seconds: out.wall_time_seconds,
            complexity: Some(out.complexity.clone()),
            status: out.result.status,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
