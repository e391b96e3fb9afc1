//! Full-batch L-BFGS minimization with Armijo backtracking.
//!
//! Deterministic by construction: no randomness, fixed evaluation order,
//! and steps are only accepted when they decrease the objective, so the
//! recorded value sequence is non-increasing.

use std::collections::VecDeque;

/// Stopping and line-search parameters.
#[derive(Debug, Clone)]
pub struct LbfgsConfig {
    /// Number of curvature pairs kept for the two-loop recursion.
    pub memory: usize,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub max_step_halvings: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            tol: 1e-5,
            max_iters: 200,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_step_halvings: 40,
        }
    }
}

impl LbfgsConfig {
    pub fn with_stopping(tol: f64, max_iters: usize) -> Self {
        LbfgsConfig {
            tol,
            max_iters,
            ..LbfgsConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_max_norm: f64,
    pub iterations: usize,
    /// Objective value after each accepted step, starting at the initial
    /// point; non-increasing.
    pub values: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Minimizes `objective` (value and gradient) starting from `x0`.
///
/// Stops when the gradient max-norm drops below `config.tol`, after
/// `config.max_iters` accepted steps, or when the line search cannot make
/// progress.
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, config: &LbfgsConfig) -> LbfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut value, mut grad) = objective(&x);
    let mut values = vec![value];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;

    while iterations < config.max_iters {
        let grad_norm = max_abs(&grad);
        if grad_norm < config.tol || !grad_norm.is_finite() {
            break;
        }

        let mut direction = two_loop(&grad, &history);
        let mut descent = dot(&grad, &direction);
        if !descent.is_finite() || descent >= 0.0 {
            // Curvature information is stale; fall back to steepest descent.
            direction = grad.iter().map(|g| -g).collect();
            descent = -dot(&grad, &grad);
            history.clear();
        }

        let mut step = if history.is_empty() {
            (1.0 / grad_norm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..=config.max_step_halvings {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let (candidate_value, candidate_grad) = objective(&candidate);
            if candidate_value.is_finite()
                && candidate_value <= value + config.armijo_c1 * step * descent
            {
                accepted = Some((candidate, candidate_value, candidate_grad));
                break;
            }
            step *= config.backtrack;
        }
        let Some((new_x, new_value, new_grad)) = accepted else {
            break;
        };

        let s: Vec<f64> = new_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        x = new_x;
        value = new_value;
        grad = new_grad;
        values.push(value);
        iterations += 1;
    }

    LbfgsOutcome {
        grad_max_norm: max_abs(&grad),
        x,
        value,
        iterations,
        values,
    }
}
