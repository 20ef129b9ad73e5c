use std::process::Command;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Residuals, SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::relaxation::BlockSdp;

/// Result document written by an external solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub y: Vec<f64>,
}

pub(super) fn solve(sdp: &BlockSdp, template: &str) -> Result<SolveResult> {
    let started = Instant::now();
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("problem.json");
    let output = dir.path().join("result.json");
    let ext = run(sdp, template, &input, &output)?;
    if ext.y.len() != sdp.y_count {
        return Err(Error::ExternalSolver(format!(
            "result has {} moments, problem has {}",
            ext.y.len(),
            sdp.y_count
        )));
    }
    Ok(SolveResult {
        status: ext.status,
        lower_bound: ext.objective,
        primal_objective: ext.objective,
        dual_objective: ext.objective,
        y: ext.y,
        iterations: 0,
        residuals: Residuals::default(),
        solve_seconds: started.elapsed().as_secs_f64(),
    })
}

fn run(
    sdp: &BlockSdp,
    template: &str,
    input: &std::path::Path,
    output: &std::path::Path,
) -> Result<ExternalResult> {
    sdp.save(input)?;
    let cmd = template
        .replace("{input}", &input.display().to_string())
        .replace("{output}", &output.display().to_string());
    let status = Command::new("sh").arg("-c").arg(&cmd).status()?;
    if !status.success() {
        return Err(Error::ExternalSolver(format!(
            "`{cmd}` exited with {status}"
        )));
    }
    let text = std::fs::read_to_string(output)
        .map_err(|e| Error::ExternalSolver(format!("no result file: {e}")))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::{Block, BlockEntry, BlockKind, Equalities, LinearForm};
    use crate::solver::{solve_block_sdp, Backend, SolverOptions};

    fn sdp() -> BlockSdp {
        let mut eq = Equalities::default();
        eq.push_row(&LinearForm::single(0), 1.0);
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
    fn round_trips_through_command() {
        let cmd = r#"test -s {input} && echo '{"status":"Optimal","objective":1.0,"y":[1.0]}' > {output}"#;
        let opts = SolverOptions {
            backend: Backend::External(cmd.into()),
            ..Default::default()
        };
        let res = solve_block_sdp(&sdp(), &opts).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.y, vec![1.0]);
    }

    #[test]
    fn failing_command_is_an_error() {
        let opts = SolverOptions {
            backend: Backend::External("exit 1".into()),
            ..Default::default()
        };
        assert!(matches!(
            solve_block_sdp(&sdp(), &opts),
            Err(Error::ExternalSolver(_))
        ));
    }

    #[test]
    fn wrong_length_is_an_error() {
        let cmd = r#"echo '{"status":"Optimal","objective":1.0,"y":[]}' > {output}"#;
        let opts = SolverOptions {
            backend: Backend::External(cmd.into()),
            ..Default::default()
        };
        assert!(solve_block_sdp(&sdp(), &opts).is_err());
    }
}
