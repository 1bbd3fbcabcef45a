//! Success, coefficient error and long-term prediction error.

use crate::dynamics::{integrate_model, DynError, SolverConfig, TrajectoryGrid};
use crate::expr::Binding;
use crate::regress::SparseModel;

/// `M = M*`.
pub fn success(model: &SparseModel, truth: &SparseModel) -> bool {
    model.mask == truth.mask
}

/// `‖W − W*‖₂`.
pub fn error_norm(model: &SparseModel, truth: &SparseModel) -> f64 {
    model
        .weights()
        .iter()
        .zip(truth.weights())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Success rate and RMSE over successful and over all scored runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregates {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub rmse_successful: Option<f64>,
    pub rmse_all: Option<f64>,
}

/// Aggregate `(success, ‖W − W*‖)` rows. Runs without a model count as
/// failures and are left out of both RMSE values.
pub fn aggregate(rows: &[(bool, Option<f64>)]) -> Aggregates {
    let rms = |xs: Vec<f64>| {
        if xs.is_empty() {
            None
        } else {
            Some((xs.iter().map(|e| e * e).sum::<f64>() / xs.len() as f64).sqrt())
        }
    };
    let successes = rows.iter().filter(|(s, _)| *s).count();
    Aggregates {
        runs: rows.len(),
        successes,
        success_rate: if rows.is_empty() { 0.0 } else { successes as f64 / rows.len() as f64 },
        rmse_successful: rms(rows.iter().filter(|(s, _)| *s).filter_map(|(_, e)| *e).collect()),
        rmse_all: rms(rows.iter().filter_map(|(_, e)| *e).collect()),
    }
}

/// `(rmse over successful runs or None, rmse over all runs)`.
pub fn rmse(runs: &[SparseModel], truth: &SparseModel) -> (Option<f64>, f64) {
    assert!(!runs.is_empty(), "rmse needs at least one run");
    let rows: Vec<(bool, Option<f64>)> = runs
        .iter()
        .map(|m| (success(m, truth), Some(error_norm(m, truth))))
        .collect();
    let a = aggregate(&rows);
    (a.rmse_successful, a.rmse_all.expect("non-empty"))
}

/// Spatial MSE per step averaged over initial conditions. `blown_up`
/// counts trajectories that diverged; the series stops at the first step
/// any of them failed to reach.
#[derive(Clone, Debug, PartialEq)]
pub struct LongTermSeries {
    pub mse: Vec<f64>,
    pub blown_up: usize,
}

/// Integrate `model` from the first row of each test trajectory for `steps`
/// steps and compare with the data.
pub fn long_term_mse(
    model: &SparseModel,
    tests: &[TrajectoryGrid],
    steps: usize,
    constants: &Binding,
) -> LongTermSeries {
    let mut sums: Vec<f64> = vec![0.0; steps + 1];
    let mut reached = steps;
    let mut blown_up = 0;
    for tr in tests {
        let cfg = integration_config(tr, steps);
        match integrate_model(model, tr.row(0), tr.t[0], &cfg, constants, tr.meta.system) {
            Ok(pred) => accumulate(&mut sums, &pred, tr, steps),
            Err(DynError::BlowUp { step, .. }) => {
                blown_up += 1;
                reached = reached.min(step.saturating_sub(1));
            }
            Err(_) => {
                blown_up += 1;
                reached = 0;
            }
        }
    }
    let ok = (tests.len() - blown_up).max(1) as f64;
    let n = if blown_up > 0 { reached + 1 } else { steps + 1 };
    LongTermSeries {
        mse: sums[..n.min(steps + 1)].iter().map(|s| s / ok).collect(),
        blown_up,
    }
}

fn accumulate(sums: &mut [f64], pred: &TrajectoryGrid, truth: &TrajectoryGrid, steps: usize) {
    for k in 0..=steps.min(truth.nt() - 1) {
        let a = pred.row(k);
        let b = truth.row(k);
        sums[k] += a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64;
    }
}

/// Integration settings matching a stored trajectory.
pub fn integration_config(tr: &TrajectoryGrid, steps: usize) -> SolverConfig {
    let mut cfg = SolverConfig::default_for(tr.meta.system);
    cfg.nx = tr.nx();
    cfg.length = tr.length;
    cfg.dt = tr.dt();
    cfg.nt = steps.min(tr.nt() - 1);
    cfg.substeps = 1;
    cfg.x_stride = 1;
    cfg.transient = 0.0;
    cfg.params = tr.meta.params.clone();
    cfg
}
