//! Imbalance partitioning and ensemble logistic regression.
//!
//! The majority class is split across P = round(N-/N+) partitions, each
//! paired with every minority instance; one logistic model is fit per
//! partition and the ensemble averages the coefficients.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix};

/// Majority-class split into P partitions, each implicitly joined with all
/// minority indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionScheme {
    pub p: usize,
    /// Full index sets: minority indices plus one disjoint majority slice each.
    pub partitions: Vec<Vec<usize>>,
    pub minority_indices: Vec<usize>,
}

/// Splits the negative (majority-role) class without replacement across
/// P = round-half-up(N-/N+) partitions, minimum 1. Positives play the
/// minority role even when they outnumber negatives (then P = 1).
pub fn make_partitions(labels: &[u8], rng: &mut ChaCha8Rng) -> Result<PartitionScheme> {
    let minority: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut majority: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if minority.is_empty() || majority.is_empty() {
        return Err(Error::SingleClass);
    }
    let n_min = minority.len();
    let n_maj = majority.len();
    // round half up, floored at 1
    let p = ((n_maj as f64 / n_min as f64 + 0.5).floor() as usize).max(1);
    majority.shuffle(rng);

    let base = n_maj / p;
    let extra = n_maj % p;
    let mut partitions = Vec::with_capacity(p);
    let mut cursor = 0;
    for k in 0..p {
        // the last `extra` partitions take the ceil size
        let size = if k < p - extra { base } else { base + 1 };
        let mut part = minority.clone();
        part.extend_from_slice(&majority[cursor..cursor + size]);
        cursor += size;
        // sorted order keeps downstream fits independent of the shuffle order
        part.sort_unstable();
        partitions.push(part);
    }
    debug_assert_eq!(cursor, n_maj);
    Ok(PartitionScheme { p, partitions, minority_indices: minority })
}

/// One fitted logistic model; `coefficients[0]` is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub ridge_fallback: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Log-likelihood and gradient of the logistic model with intercept.
/// `beta[0]` is the intercept; `ridge` penalizes the non-intercept terms.
pub fn logistic_loglik(x: &Matrix, labels: &[u8], beta: &[f64], ridge: f64) -> (f64, Vec<f64>) {
    let n = x.rows;
    let p = x.cols;
    let mut ll = 0.0;
    let mut grad = vec![0.0; p + 1];
    for i in 0..n {
        let eta: f64 = beta[0] + x.row(i).iter().zip(&beta[1..]).map(|(&v, &b)| v * b).sum::<f64>();
        let mu = sigmoid(eta);
        let y = labels[i] as f64;
        ll += if y > 0.5 { mu.max(1e-300).ln() } else { (1.0 - mu).max(1e-300).ln() };
        let r = y - mu;
        grad[0] += r;
        for j in 0..p {
            grad[j + 1] += r * x.get(i, j);
        }
    }
    for j in 1..=p {
        ll -= 0.5 * ridge * beta[j] * beta[j];
        grad[j] -= ridge * beta[j];
    }
    (ll, grad)
}

fn newton_logistic(x: &Matrix, labels: &[u8], ridge: f64) -> Result<LogisticFit> {
    let n = x.rows;
    let p = x.cols;
    // unpenalized coefficients this large on standardized inputs mean the
    // classes are (near-)separated and the MLE does not exist
    let bound = if ridge > 0.0 { 1e3 } else { 15.0 };
    let mut beta = vec![0.0; p + 1];
    let (mut loglik, mut grad) = logistic_loglik(x, labels, &beta, ridge);
    for iter in 0..50 {
        let gmax = grad.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
        if gmax < 1e-8 {
            return Ok(LogisticFit { coefficients: beta, iterations: iter, ridge_fallback: ridge > 0.0 });
        }
        // observed information: X'WX with W = mu(1-mu), plus the ridge
        let mut info = Matrix::zeros(p + 1, p + 1);
        for i in 0..n {
            let eta: f64 =
                beta[0] + x.row(i).iter().zip(&beta[1..]).map(|(&v, &b)| v * b).sum::<f64>();
            let mu = sigmoid(eta);
            let w = mu * (1.0 - mu);
            let mut xi = Vec::with_capacity(p + 1);
            xi.push(1.0);
            xi.extend_from_slice(x.row(i));
            for a in 0..=p {
                for b in 0..=p {
                    let v = info.get(a, b) + w * xi[a] * xi[b];
                    info.set(a, b, v);
                }
            }
        }
        for j in 1..=p {
            let v = info.get(j, j) + ridge;
            info.set(j, j, v);
        }
        let step = solve(info, grad.clone())
            .map_err(|_| Error::FitFailure("logistic: singular information matrix".into()))?;
        // step halving keeps the penalized likelihood non-decreasing
        let mut scale = 1.0;
        loop {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(&b, &s)| b + scale * s).collect();
            let (ll, g) = logistic_loglik(x, labels, &trial, ridge);
            if (ll.is_finite() && ll >= loglik - 1e-12) || scale < 1e-6 {
                beta = trial;
                loglik = ll;
                grad = g;
                break;
            }
            scale /= 2.0;
        }
        if beta.iter().any(|&b| !b.is_finite() || b.abs() > bound) {
            return Err(Error::FitFailure("logistic: divergence (separation suspected)".into()));
        }
    }
    Err(Error::FitFailure("logistic: no convergence in 50 iterations".into()))
}

/// Maximum-likelihood logistic fit (Newton, |grad| max-norm < 1e-8, at most
/// 50 iterations). Separation or a singular information matrix falls back to
/// a ridge fit (lambda = 1e-4) with `ridge_fallback` set.
pub fn fit_logistic(x: &Matrix, labels: &[u8]) -> Result<LogisticFit> {
    if x.rows != labels.len() {
        return Err(Error::InvalidArgument("logistic: row mismatch".into()));
    }
    if labels.iter().all(|&l| l == 0) || labels.iter().all(|&l| l == 1) {
        return Err(Error::SingleClass);
    }
    match newton_logistic(x, labels, 0.0) {
        Ok(fit) => Ok(fit),
        Err(Error::FitFailure(_)) => newton_logistic(x, labels, 1e-4),
        Err(e) => Err(e),
    }
}

/// Partition-averaged logistic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFit {
    pub coefficients: Vec<f64>,
    pub n_partitions: usize,
    pub ridge_fallback: bool,
}

impl EnsembleFit {
    /// Event probability for one standardized feature row.
    pub fn score(&self, row: &[f64]) -> f64 {
        let eta: f64 = self.coefficients[0]
            + row.iter().zip(&self.coefficients[1..]).map(|(&v, &b)| v * b).sum::<f64>();
        sigmoid(eta)
    }
}

/// Fits one logistic model per imbalance partition and averages the
/// coefficients. Callers standardize the features first.
pub fn fit_ensemble_logistic(
    x: &Matrix,
    labels: &[u8],
    rng: &mut ChaCha8Rng,
) -> Result<EnsembleFit> {
    let scheme = make_partitions(labels, rng)?;
    let mut coef = vec![0.0; x.cols + 1];
    let mut ridge_used = false;
    for part in &scheme.partitions {
        let xs = x.select_rows(part);
        let ys: Vec<u8> = part.iter().map(|&i| labels[i]).collect();
        let fit = fit_logistic(&xs, &ys)?;
        ridge_used |= fit.ridge_fallback;
        for (c, f) in coef.iter_mut().zip(&fit.coefficients) {
            *c += f / scheme.p as f64;
        }
    }
    Ok(EnsembleFit { coefficients: coef, n_partitions: scheme.p, ridge_fallback: ridge_used })
}
