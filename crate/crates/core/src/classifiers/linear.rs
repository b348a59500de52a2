use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::scaling::Standardizer;
use crate::svm::{KernelSpec, SvmModel};

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w . z + b` on standardized input `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub scaler: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, &self.scaler.transform_row(x)) + self.bias
    }

    /// L2-regularized logistic regression by accelerated gradient descent on
    /// `mean log(1 + exp(-y f)) + |w|^2 / (2 C n)`.
    pub fn fit_logistic(x: &[Vec<f64>], y: &[i8], c: f64, max_iter: usize) -> LinearModel {
        let scaler = Standardizer::fit(x);
        let z = scaler.transform(x);
        let n = z.len() as f64;
        let d = scaler.dim();
        let reg = 1.0 / (c * n);
        // trace bound on the Hessian of the averaged loss (bias column included)
        let lipschitz = 0.25 * (z.iter().map(|r| dot(r, r) + 1.0).sum::<f64>() / n) + reg;
        let step = 1.0 / lipschitz;

        let grad = |w: &[f64], b: f64| -> (Vec<f64>, f64) {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (r, &label) in z.iter().zip(y) {
                let yl = f64::from(label);
                let coef = -yl * sigmoid(-yl * (dot(w, r) + b)) / n;
                for (g, v) in gw.iter_mut().zip(r) {
                    *g += coef * v;
                }
                gb += coef;
            }
            for (g, wi) in gw.iter_mut().zip(w) {
                *g += reg * wi;
            }
            (gw, gb)
        };

        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut vw = w.clone();
        let mut vb = b;
        let mut t = 1.0f64;
        for _ in 0..max_iter {
            let (gw, gb) = grad(&vw, vb);
            let norm: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
            if norm.sqrt() < 1e-8 {
                w = vw;
                b = vb;
                break;
            }
            let nw: Vec<f64> = vw.iter().zip(&gw).map(|(v, g)| v - step * g).collect();
            let nb = vb - step * gb;
            let nt = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let mom = (t - 1.0) / nt;
            vw = nw.iter().zip(&w).map(|(a, o)| a + mom * (a - o)).collect();
            vb = nb + mom * (nb - b);
            w = nw;
            b = nb;
            t = nt;
        }
        LinearModel { scaler, weights: w, bias: b }
    }

    /// Collapse a linear-kernel SVM into a weight vector.
    pub fn from_linear_svm(svm: &SvmModel) -> LinearModel {
        debug_assert!(matches!(svm.kernel, KernelSpec::Linear));
        let mut weights = vec![0.0; svm.dim];
        for (sv, coef) in svm.support_vectors.iter().zip(&svm.dual_coefficients) {
            for (w, v) in weights.iter_mut().zip(sv) {
                *w += coef * v;
            }
        }
        let scaler = svm.scaler.clone().unwrap_or_else(|| Standardizer {
            mean: vec![0.0; svm.dim],
            scale: vec![1.0; svm.dim],
        });
        LinearModel { scaler, weights, bias: svm.bias }
    }

    /// Hinge-loss SGD with step `1 / (alpha (t + t0))`.
    pub fn fit_sgd(x: &[Vec<f64>], y: &[i8], alpha: f64, epochs: usize, seed: u64) -> LinearModel {
        let scaler = Standardizer::fit(x);
        let z = scaler.transform(x);
        let d = scaler.dim();
        let mut rng = rng::stream(seed, "sgd");
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let t0 = 1.0 / (alpha * 0.1);
        let mut t = 0.0;
        let mut order: Vec<usize> = (0..z.len()).collect();
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let eta = 1.0 / (alpha * (t + t0));
                let yl = f64::from(y[i]);
                let violated = yl * (dot(&w, &z[i]) + b) < 1.0;
                for (wj, v) in w.iter_mut().zip(&z[i]) {
                    *wj *= 1.0 - eta * alpha;
                    if violated {
                        *wj += eta * yl * v;
                    }
                }
                if violated {
                    b += eta * yl;
                }
                t += 1.0;
            }
        }
        LinearModel { scaler, weights: w, bias: b }
    }
}

/// Gaussian naive Bayes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// `[negative, positive]` log priors.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[i8], var_smoothing: f64) -> GaussianNb {
        let d = x[0].len();
        let overall = Standardizer::fit(x);
        let max_var = overall.scale.iter().map(|s| s * s).fold(0.0, f64::max);
        let eps = (var_smoothing * max_var).max(1e-12);
        let mut log_prior = [0.0; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for class in 0..2 {
            let rows: Vec<Vec<f64>> = x
                .iter()
                .zip(y)
                .filter(|(_, &l)| usize::from(l > 0) == class)
                .map(|(r, _)| r.clone())
                .collect();
            let n = rows.len() as f64;
            log_prior[class] = (n / x.len() as f64).ln();
            for j in 0..d {
                let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let v = rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
                mean[class][j] = m;
                var[class][j] = v + eps;
            }
        }
        GaussianNb { log_prior, mean, var }
    }

    fn log_joint(&self, class: usize, x: &[f64]) -> f64 {
        let mut s = self.log_prior[class];
        for ((v, m), s2) in x.iter().zip(&self.mean[class]).zip(&self.var[class]) {
            s -= 0.5 * (2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / (2.0 * s2);
        }
        s
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.log_joint(1, x) - self.log_joint(0, x))
    }
}
