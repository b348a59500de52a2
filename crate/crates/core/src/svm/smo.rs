//! SMO dual solver with maximal-violating-pair working-set selection.
//!
//! Solves `min_a 1/2 a'Qa - e'a` subject to `0 <= a_i <= C` and `y'a = 0`,
//! with `Q_ij = y_i y_j K(x_i, x_j)`.

use std::collections::{HashMap, VecDeque};

use super::KernelSpec;

const TAU: f64 = 1e-12;
/// Kernel row cache budget in f64 entries (about 256 MiB).
const CACHE_ENTRIES: usize = 32 << 20;

/// Row-cached kernel matrix over the training points.
struct KernelRows<'a> {
    x: &'a [Vec<f64>],
    kernel: KernelSpec,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
    diag: Vec<f64>,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a [Vec<f64>], kernel: KernelSpec) -> Self {
        let n = x.len().max(1);
        let diag = x.iter().map(|r| kernel.eval_unchecked(r, r)).collect();
        KernelRows {
            x,
            kernel,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity: (CACHE_ENTRIES / n).max(2),
            diag,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = &self.x[i];
            let r: Vec<f64> = self.x.iter().map(|xj| self.kernel.eval_unchecked(xi, xj)).collect();
            self.rows.insert(i, r);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub max_violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn solve(x: &[Vec<f64>], y: &[f64], c: f64, kernel: KernelSpec, tol: f64, max_iter: usize) -> Solution {
    let n = x.len();
    let mut k = KernelRows::new(x, kernel);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut max_violation;

    loop {
        // i: argmax over I_up of -y_t g_t; j: argmin over I_low of -y_t g_t
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut i_sel = usize::MAX;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if low && v < g_min {
                g_min = v;
                j_sel = t;
            }
        }
        max_violation = if i_sel == usize::MAX || j_sel == usize::MAX { 0.0 } else { g_max - g_min };
        if max_violation < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let k_ii = k.diag[i];
        let k_jj = k.diag[j];
        let k_ij = k.row(i)[j];
        // curvature along the feasible direction; identical for both label cases
        let quad_raw = k_ii + k_jj - 2.0 * k_ij;
        let old_ai = alpha[i];
        let old_aj = alpha[j];

        if y[i] != y[j] {
            let quad = if quad_raw > 0.0 { quad_raw } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = if quad_raw > 0.0 { quad_raw } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = alpha[i] - old_ai;
        let d_j = alpha[j] - old_aj;
        if d_i != 0.0 {
            let yi = y[i];
            let row_i = k.row(i).to_vec();
            for t in 0..n {
                grad[t] += y[t] * yi * row_i[t] * d_i;
            }
        }
        if d_j != 0.0 {
            let yj = y[j];
            let row_j = k.row(j);
            for t in 0..n {
                grad[t] += y[t] * yj * row_j[t] * d_j;
            }
        }
    }

    // rho: average over free vectors, else the midpoint of the feasible range
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() / 2.0;
    Solution {
        alpha,
        rho,
        objective: -f,
        max_violation,
        iterations,
        converged,
    }
}
