//! Block SDP solving and candidate extraction.

mod external;
mod ipm;
mod kkt;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{LiftedPop, LiftedVar};
use crate::polyrep::{CpPoly, Monomial};
use crate::relaxation::{BlockSdp, MomentRelaxation};

pub use external::ExternalResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
    IterationLimit,
    /// Stopped by the time limit or a cancellation request.
    TimeLimit,
}

impl SolveStatus {
    /// Whether the solve ended at a usable iterate: converged, or stopped at
    /// the attainable accuracy. Other statuses carry no bound.
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NumericalLimit)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Value of the relaxation: the smaller of the two objectives below,
    /// which agree up to the gap at optimality.
    pub lower_bound: f64,
    /// Objective of the moment iterate `y`.
    pub primal_objective: f64,
    /// Objective of the dual iterate.
    pub dual_objective: f64,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub residuals: Residuals,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Embedded,
    /// Shell command template; `{input}` and `{output}` are replaced by the
    /// paths of the problem and result JSON files.
    External(String),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub backend: Backend,
    pub time_limit: Option<Duration>,
    /// Checked once per iteration; setting it stops the solve with
    /// [`SolveStatus::TimeLimit`].
    pub cancel: Option<Arc<AtomicBool>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 200,
            backend: Backend::Embedded,
            time_limit: None,
            cancel: None,
        }
    }
}

impl SolverOptions {
    fn cancelled(&self) -> bool {
        self.cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

pub fn solve_block_sdp(sdp: &BlockSdp, opts: &SolverOptions) -> Result<SolveResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::MalformedSdp(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    sdp.validate()?;
    match &opts.backend {
        Backend::Embedded => {
            let mut ipm = match ipm::Ipm::new(sdp) {
                Ok(ipm) => ipm,
                Err(status) => {
                    let bound = if status == SolveStatus::Unbounded {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    };
                    return Ok(SolveResult {
                        status,
                        lower_bound: bound,
                        primal_objective: bound,
                        dual_objective: bound,
                        y: vec![0.0; sdp.y_count],
                        iterations: 0,
                        residuals: Residuals::default(),
                        solve_seconds: 0.0,
                    });
                }
            };
            log::debug!("kkt envelope: {} entries", ipm.kkt_nnz());
            Ok(ipm.solve(opts))
        }
        Backend::External(cmd) => external::solve(sdp, cmd),
    }
}

/// Candidate minimizer from the first moments of the `x` variables, clamped
/// to the box, together with `f` evaluated there.
pub fn extract_candidate(
    res: &SolveResult,
    rel: &MomentRelaxation,
    pop: &LiftedPop,
    f: &CpPoly,
) -> (Vec<f64>, f64) {
    let idx: Vec<usize> = (1..=pop.n())
        .map(|i| pop.var_index(LiftedVar::X(i)))
        .collect();
    candidate_at(res, rel, &idx, pop.box_radius(), f)
}

/// Same as [`extract_candidate`] with the `x` variables at the given
/// monomial indices.
pub(crate) fn candidate_at(
    res: &SolveResult,
    rel: &MomentRelaxation,
    x_index: &[usize],
    radius: f64,
    f: &CpPoly,
) -> (Vec<f64>, f64) {
    let x: Vec<f64> = x_index
        .iter()
        .map(|&i| {
            rel.y_of(&Monomial::var(i))
                .map(|k| res.y[k])
                .unwrap_or(0.0)
                .clamp(-radius, radius)
        })
        .collect();
    let upper = f.eval(&x).expect("dimension matches");
    (x, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::{Block, BlockEntry, BlockKind, Equalities, LinearForm};

    fn one_var_sdp(rhs: &[f64]) -> BlockSdp {
        // y0 ≥ 0 as a 1×1 block.
        let mut eq = Equalities::default();
        for &b in rhs {
            eq.push_row(&LinearForm::single(0), b);
        }
        BlockSdp {
            y_count: 1,
            blocks: vec![Block {
                label: "b".into(),
                size: 1,
                kind: BlockKind::Moment,
                entries: vec![BlockEntry {
                    row: 0,
                    col: 0,
                    form: LinearForm::single(0),
                }],
            }],
            equalities: eq,
            objective: LinearForm::single(0),
        }
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let res = solve_block_sdp(&one_var_sdp(&[1.0, 0.0]), &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Infeasible);
    }

    #[test]
    fn trivial_equality() {
        let res = solve_block_sdp(&one_var_sdp(&[2.0]), &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.lower_bound - 2.0).abs() < 1e-7);
    }

    #[test]
    fn unknowns_outside_blocks_are_substituted() {
        // y0 ≥ 0, y0 + y1 = 3, y1 + y2 = 1, min y2  →  y = (0, 3, -2)
        let mut sdp = one_var_sdp(&[]);
        sdp.y_count = 3;
        sdp.equalities.push_row(
            &LinearForm {
                terms: vec![(0, 1.0), (1, 1.0)],
            },
            3.0,
        );
        sdp.equalities.push_row(
            &LinearForm {
                terms: vec![(1, 1.0), (2, 1.0)],
            },
            1.0,
        );
        sdp.objective = LinearForm::single(2);
        let res = solve_block_sdp(&sdp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.lower_bound + 2.0).abs() < 1e-7, "{}", res.lower_bound);
        for (a, b) in res.y.iter().zip([0.0, 3.0, -2.0]) {
            assert!((a - b).abs() < 1e-6, "{:?}", res.y);
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let opts = SolverOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(solve_block_sdp(&one_var_sdp(&[1.0]), &opts).is_err());
    }
}
