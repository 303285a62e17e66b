//! Multinomial logistic regression baseline on the same weighted cross-entropy.

use std::collections::VecDeque;

use log::warn;
use serde::{Deserialize, Serialize};

use super::objective::{softmax_into, ClassWeights, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::fusion::Scaler;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitConfig {
    pub l2: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub history: usize,
}

impl Default for LogitConfig {
    fn default() -> Self {
        Self {
            l2: 1e-2,
            grad_tol: 1e-6,
            max_iter: 5000,
            history: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// K × F, row-major.
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub scaler: Option<Scaler>,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
}

impl LinearModel {
    pub fn zeros(k: usize, f: usize) -> Self {
        Self {
            n_classes: k,
            n_features: f,
            weights: vec![0.0; k * f],
            intercepts: vec![0.0; k],
            scaler: None,
            converged: false,
            grad_norm: f64::NAN,
            iterations: 0,
        }
    }

    fn margins_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.weights[k * self.n_features..(k + 1) * self.n_features];
            *o = self.intercepts[k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features {
            return Err(Error::Domain(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        let mut row = vec![0.0; self.n_features];
        let mut m = vec![0.0; self.n_classes];
        for i in 0..x.rows() {
            match &self.scaler {
                Some(s) => s.transform_row(x.row(i), &mut row),
                None => row.copy_from_slice(x.row(i)),
            }
            self.margins_into(&row, &mut m);
            softmax_into(&m, out.row_mut(i));
        }
        Ok(out)
    }
}

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    w: Vec<f64>,
    k: usize,
    l2: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.k * self.x.cols() + self.k
    }

    /// Objective and gradient at packed parameters `[W ‖ b]`.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let f = self.x.cols();
        let k = self.k;
        let n = self.x.rows() as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (wts, icp) = theta.split_at(k * f);
        let mut m = vec![0.0; k];
        let mut p = vec![0.0; k];
        let mut loss = 0.0;
        for i in 0..self.x.rows() {
            let xi = self.x.row(i);
            for c in 0..k {
                m[c] = icp[c] + wts[c * f..(c + 1) * f].iter().zip(xi).map(|(a, b)| a * b).sum::<f64>();
            }
            softmax_into(&m, &mut p);
            let yi = self.y[i];
            let wi = self.w[i];
            loss -= wi * p[yi].max(PROB_FLOOR).ln();
            for c in 0..k {
                let r = wi * (p[c] - if c == yi { 1.0 } else { 0.0 }) / n;
                let gw = &mut grad[c * f..(c + 1) * f];
                for (g, v) in gw.iter_mut().zip(xi) {
                    *g += r * v;
                }
                grad[k * f + c] += r;
            }
        }
        let mut reg = 0.0;
        for (j, w) in wts.iter().enumerate() {
            reg += w * w;
            grad[j] += self.l2 * w;
        }
        loss / n + 0.5 * self.l2 * reg
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimise weighted CE + (l2/2)‖W‖² with L-BFGS until ‖∇‖₂ < `grad_tol`.
///
/// Starting point is all zeros; a model that hits `max_iter` is returned with
/// `converged = false`.
pub fn fit_logit(x: &Matrix, y: &[usize], weights: &ClassWeights, cfg: &LogitConfig) -> Result<LinearModel> {
    let k = weights.n_classes();
    if x.rows() != y.len() || x.rows() == 0 {
        return Err(Error::Fit(format!("{} rows but {} labels", x.rows(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&v| v >= k) {
        return Err(Error::Fit(format!("label {bad} outside 0..{k}")));
    }
    let prob = Problem {
        x,
        y,
        w: y.iter().map(|&c| weights.get(c)).collect(),
        k,
        l2: cfg.l2,
    };
    let d = prob.dim();
    let mut theta = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut fval = prob.eval(&theta, &mut grad);
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut new_theta = vec![0.0; d];
    let mut new_grad = vec![0.0; d];
    let mut iterations = 0;
    let mut converged = norm(&grad) < cfg.grad_tol;

    while !converged && iterations < cfg.max_iter {
        iterations += 1;
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, yv, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = mem
            .back()
            .map(|(s, yv, _)| dot(s, yv) / dot(yv, yv))
            .unwrap_or_else(|| 1.0 / norm(&grad).max(1.0));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, yv, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            mem.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..d {
                new_theta[j] = theta[j] + step * dir[j];
            }
            let fnew = prob.eval(&new_theta, &mut new_grad);
            if fnew <= fval + 1e-4 * step * slope {
                let s: Vec<f64> = (0..d).map(|j| new_theta[j] - theta[j]).collect();
                let yv: Vec<f64> = (0..d).map(|j| new_grad[j] - grad[j]).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-16 {
                    if mem.len() == cfg.history {
                        mem.pop_front();
                    }
                    mem.push_back((s, yv, 1.0 / sy));
                }
                std::mem::swap(&mut theta, &mut new_theta);
                std::mem::swap(&mut grad, &mut new_grad);
                fval = fnew;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        converged = norm(&grad) < cfg.grad_tol;
    }
    let gn = norm(&grad);
    if !converged {
        warn!("logistic regression stopped after {iterations} iterations, |grad| = {gn:.3e}");
    }
    let f = x.cols();
    Ok(LinearModel {
        n_classes: k,
        n_features: f,
        weights: theta[..k * f].to_vec(),
        intercepts: theta[k * f..].to_vec(),
        scaler: None,
        converged,
        grad_norm: gn,
        iterations,
    })
}
