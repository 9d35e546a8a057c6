//! Gradient descent with Armijo backtracking over flat real coordinates.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentParams {
    pub max_iter: usize,
    /// Stop once `‖grad‖ < tol`.
    pub tol: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub min_step: f64,
}

impl Default for DescentParams {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            tol: 1e-8,
            c1: 1e-4,
            initial_step: 1.0,
            shrink: 0.5,
            min_step: 1e-18,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStatus {
    Converged,
    MaxIterations,
    /// The line search could not decrease the objective any further.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub action: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub status: DescentStatus,
    pub trace: Vec<TraceRow>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `f` starting at `x0`. `fg` returns the value and gradient.
///
/// The trial step starts from twice the last accepted step, so the search
/// adapts to the local curvature without a fixed schedule.
pub fn gradient_descent<F>(x0: Vec<f64>, mut fg: F, params: &DescentParams) -> DescentResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut value, mut grad) = fg(&x);
    let mut gnorm = norm(&grad);
    let mut step = params.initial_step;
    let mut trace = vec![TraceRow {
        iteration: 0,
        action: value,
        grad_norm: gnorm,
    }];
    let mut iterations = 0;
    let status = loop {
        if gnorm < params.tol {
            break DescentStatus::Converged;
        }
        if iterations >= params.max_iter {
            break DescentStatus::MaxIterations;
        }
        let g2 = gnorm * gnorm;
        let mut t = (2.0 * step).min(params.initial_step.max(step));
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - t * gi).collect();
            let (v, g) = fg(&trial);
            if v <= value - params.c1 * t * g2 {
                break Some((trial, v, g));
            }
            t *= params.shrink;
            if t < params.min_step {
                break None;
            }
        };
        let Some((trial, v, g)) = accepted else {
            break DescentStatus::Stalled;
        };
        step = t;
        x = trial;
        value = v;
        grad = g;
        gnorm = norm(&grad);
        iterations += 1;
        trace.push(TraceRow {
            iteration: iterations,
            action: value,
            grad_norm: gnorm,
        });
    };
    DescentResult {
        x,
        value,
        grad_norm: gnorm,
        iterations,
        status,
        trace,
    }
}
