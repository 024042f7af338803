//! Adaptive loop: solve, estimate, mark, refine.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{apply_initial_conditions, SystemState, TimeGrid};
use crate::error::{Error, Result};
use crate::estimator::{estimate_step, EstimatorOptions, EstimatorReport};
use crate::mesh::{refine, Mesh};
use crate::model::SourceData;
use crate::simulation::simulate;
use crate::spaces::DofMap;
use crate::verify::{step_errors, ErrorAccumulator, ErrorNorms};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    /// Dörfler bulk fraction in `(0, 1]`.
    pub theta_mark: f64,
    pub max_iters: usize,
    /// Stop once the global estimator is at or below this value.
    pub target_theta: f64,
    /// Stop once the dof count reaches this value.
    pub max_dofs: usize,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            theta_mark: 0.5,
            max_iters: 6,
            target_theta: 0.0,
            max_dofs: 1_000_000,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_mark > 0.0 && self.theta_mark <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta_mark must lie in (0, 1], got {}",
                self.theta_mark
            )));
        }
        if self.max_iters == 0 || self.max_dofs == 0 {
            return Err(Error::InvalidParameter(
                "iteration and dof budgets must be positive".into(),
            ));
        }
        if !(self.target_theta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target must be nonnegative, got {}",
                self.target_theta
            )));
        }
        Ok(())
    }
}

/// Smallest set of cells whose squared indicators sum to at least
/// `theta_mark` times the total, chosen greedily by decreasing indicator
/// with ties broken by cell id. Returned in ascending id order.
pub fn mark(theta2: &[f64], theta_mark: f64) -> Vec<usize> {
    let total: f64 = theta2.iter().sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..theta2.len()).filter(|&k| theta2[k] > 0.0).collect();
    order.sort_by(|&a, &b| theta2[b].total_cmp(&theta2[a]).then(a.cmp(&b)));
    let goal = theta_mark * total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if sum >= goal {
            break;
        }
        sum += theta2[k];
        marked.push(k);
    }
    marked.sort_unstable();
    marked
}

/// Dörfler marking of an estimator report.
pub fn mark_report(report: &EstimatorReport, theta_mark: f64) -> Vec<usize> {
    mark(&report.theta2(), theta_mark)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Target,
    DofBudget,
    Iterations,
}

/// One pass of the loop, logged as a JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct AdaptRecord {
    pub iter: usize,
    pub dofs: usize,
    pub cells: usize,
    pub theta: f64,
    pub zeta: f64,
    pub error_norms: Option<ErrorNorms>,
    pub error: Option<f64>,
    pub marked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    pub stop: Option<StopReason>,
}

/// Solution and estimate on one mesh of the loop.
#[derive(Debug, Clone)]
pub struct AdaptIteration {
    pub mesh: Mesh,
    pub final_state: SystemState,
    pub report: EstimatorReport,
    pub record: AdaptRecord,
}

/// Integrates over `grid` on `mesh` and returns the final state, the
/// estimator and, with a closed-form solution, the error norms.
pub fn solve_and_estimate(
    mesh: &Mesh,
    data: &dyn SourceData,
    grid: &TimeGrid,
    options: EstimatorOptions,
) -> Result<(SystemState, EstimatorReport, Option<ErrorNorms>)> {
    let dofs = DofMap::new(mesh);
    let init = apply_initial_conditions(mesh, &dofs, data)?;
    let mut report = EstimatorReport::new(mesh);
    let mut errors = ErrorAccumulator::new(mesh.num_cells());
    let state = simulate(mesh, &dofs, data, grid, init, |step| {
        report.accumulate_step(&estimate_step(
            mesh,
            &dofs,
            data,
            step.previous,
            step.current,
            options,
        )?)?;
        if let Some(case) = data.exact() {
            errors.add_step(&step_errors(mesh, &dofs, case, step.current)?, grid.dt)?;
        }
        Ok(())
    })?;
    Ok((state, report, data.exact().map(|_| errors.norms())))
}

/// Runs the adaptive loop from `mesh`, re-integrating the whole time
/// interval on every mesh. `on_iter` sees each iteration as it completes.
pub fn adapt_solve(
    mesh: &Mesh,
    data: &dyn SourceData,
    grid: &TimeGrid,
    options: EstimatorOptions,
    config: &AdaptConfig,
    mut on_iter: impl FnMut(&AdaptIteration) -> Result<()>,
) -> Result<Vec<AdaptIteration>> {
    config.validate()?;
    let mut current = mesh.clone();
    let mut out = Vec::new();
    for iter in 0..config.max_iters {
        let start = Instant::now();
        let (final_state, report, errors) = solve_and_estimate(&current, data, grid, options)
            .map_err(|e| Error::Iteration {
                iter,
                source: Box::new(e),
            })?;
        let (theta, zeta) = report.global();
        let dofs = DofMap::new(&current).num_dofs();
        let stop = if theta <= config.target_theta {
            Some(StopReason::Target)
        } else if dofs >= config.max_dofs {
            Some(StopReason::DofBudget)
        } else if iter + 1 == config.max_iters {
            Some(StopReason::Iterations)
        } else {
            None
        };
        let marked = if stop.is_none() {
            mark_report(&report, config.theta_mark)
        } else {
            Vec::new()
        };
        let record = AdaptRecord {
            iter,
            dofs,
            cells: current.num_cells(),
            theta,
            zeta,
            error_norms: errors,
            error: errors.map(|e| e.combined()),
            marked: marked.len(),
            wall_ms: Some(start.elapsed().as_secs_f64() * 1e3),
            stop,
        };
        let next = if stop.is_none() {
            Some(refine(&current, &marked)?.mesh)
        } else {
            None
        };
        let item = AdaptIteration {
            mesh: current,
            final_state,
            report,
            record,
        };
        on_iter(&item)?;
        out.push(item);
        match next {
            Some(m) => current = m,
            None => break,
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fraction_marks_all_positive() {
        assert_eq!(mark(&[1.0, 0.0, 2.0, 3.0], 1.0), vec![0, 2, 3]);
    }

    #[test]
    fn dominant_cell_alone() {
        assert_eq!(mark(&[0.01, 0.95, 0.02, 0.02], 0.9), vec![1]);
    }

    #[test]
    fn ties_by_id() {
        assert_eq!(mark(&[1.0, 1.0, 1.0, 1.0], 0.5), vec![0, 1]);
    }

    #[test]
    fn zero_indicators_mark_nothing() {
        assert!(mark(&[0.0, 0.0], 0.5).is_empty());
        assert!(mark(&[], 0.5).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(AdaptConfig::default().validate().is_ok());
        assert!(AdaptConfig {
            theta_mark: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AdaptConfig {
            theta_mark: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AdaptConfig {
            max_iters: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AdaptConfig {
            target_theta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
