//! Rank statistics, multiple-testing correction, dependence and ROC analysis.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Average ranks (1-based), ties share the mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0; // mean of ranks i+1..=j
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        i = j;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with two-sided p-value from the t-approximation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("spearman: length mismatch".into()));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument("spearman: need at least 3 samples".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::ConstantInput("spearman over constant vector".into()));
    }
    let rs = pearson(&average_ranks(x), &average_ranks(y));
    let rs = rs.clamp(-1.0, 1.0);
    let p = if rs.abs() >= 1.0 {
        0.0
    } else {
        let t = rs * ((n as f64 - 2.0) / (1.0 - rs * rs)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n as f64 - 2.0).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok((rs, p))
}

/// Benjamini-Hochberg step-up procedure at FDR level `q`.
pub fn bh_fdr(p_values: &[f64], q: f64) -> Vec<bool> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).expect("finite p-values"));
    let mut k_star = None;
    for (k, &i) in order.iter().enumerate() {
        if p_values[i] <= (k + 1) as f64 * q / m as f64 {
            k_star = Some(k);
        }
    }
    let mut reject = vec![false; m];
    if let Some(k) = k_star {
        for &i in &order[..=k] {
            reject[i] = true;
        }
    }
    reject
}

/// Approximate maximal information coefficient with equal-frequency axis
/// partitions and grid resolution bound nx*ny <= n^0.6.
///
/// Constant inputs give 0. Symmetric in its arguments by construction.
pub fn mic(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 10 {
        return 0.0;
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return 0.0;
    }
    let b = (n as f64).powf(0.6);
    let rx = average_ranks(x);
    let ry = average_ranks(y);

    // equal-frequency bin index per sample for a given bin count
    let bins_for = |ranks: &[f64], k: usize| -> Vec<usize> {
        ranks
            .iter()
            .map(|&r| ((((r - 0.5) * k as f64) / n as f64).floor() as usize).min(k - 1))
            .collect()
    };

    let mut best: f64 = 0.0;
    let max_axis = (b / 2.0).floor() as usize;
    for nx in 2..=max_axis.max(2) {
        for ny in 2..=max_axis.max(2) {
            if (nx * ny) as f64 > b {
                continue;
            }
            let bx = bins_for(&rx, nx);
            let by = bins_for(&ry, ny);
            let mut joint = vec![0.0f64; nx * ny];
            let mut px = vec![0.0f64; nx];
            let mut py = vec![0.0f64; ny];
            for i in 0..n {
                joint[bx[i] * ny + by[i]] += 1.0;
                px[bx[i]] += 1.0;
                py[by[i]] += 1.0;
            }
            let nf = n as f64;
            let mut mi = 0.0;
            for a in 0..nx {
                for c in 0..ny {
                    let j = joint[a * ny + c];
                    if j > 0.0 {
                        mi += (j / nf) * ((j * nf) / (px[a] * py[c])).log2();
                    }
                }
            }
            let norm = (nx.min(ny) as f64).log2();
            if norm > 0.0 {
                best = best.max(mi / norm);
            }
        }
    }
    best.clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// ROC analysis

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocSummary {
    pub auc: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub threshold: f64,
}

fn check_binary(labels: &[u8]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// AUC by the midrank method (equivalent to concordant-pair counting with
/// half credit for score ties).
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument("auc: length mismatch".into()));
    }
    let (pos, neg) = check_binary(labels)?;
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&r, _)| r)
        .sum();
    Ok((rank_sum - pos as f64 * (pos as f64 + 1.0) / 2.0) / (pos as f64 * neg as f64))
}

/// ROC summary at a fixed probability threshold; score >= threshold counts
/// as a positive call.
pub fn roc_summary(scores: &[f64], labels: &[u8], threshold: f64) -> Result<RocSummary> {
    let auc = auc(scores, labels)?;
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut tn = 0.0;
    let mut fng = 0.0;
    for (&s, &l) in scores.iter().zip(labels) {
        let call_pos = s >= threshold;
        match (call_pos, l) {
            (true, 1) => tp += 1.0,
            (true, 0) => fp += 1.0,
            (false, 0) => tn += 1.0,
            (false, 1) => fng += 1.0,
            _ => unreachable!("labels are 0/1"),
        }
    }
    Ok(RocSummary {
        auc,
        sensitivity: tp / (tp + fng),
        specificity: tn / (tn + fp),
        accuracy: (tp + tn) / (tp + tn + fp + fng),
        threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelongResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub delta_auc: f64,
    pub z: f64,
    pub p: f64,
}

fn placement_components(scores: &[f64], labels: &[u8]) -> (Vec<f64>, Vec<f64>, f64) {
    // V10 per positive, V01 per negative, plus the AUC.
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l == 0).map(|(&s, _)| s).collect();
    let psi = |a: f64, b: f64| -> f64 {
        if a > b {
            1.0
        } else if a == b {
            0.5
        } else {
            0.0
        }
    };
    let v10: Vec<f64> = pos
        .iter()
        .map(|&p| neg.iter().map(|&q| psi(p, q)).sum::<f64>() / neg.len() as f64)
        .collect();
    let v01: Vec<f64> = neg
        .iter()
        .map(|&q| pos.iter().map(|&p| psi(p, q)).sum::<f64>() / pos.len() as f64)
        .collect();
    let auc = v10.iter().sum::<f64>() / v10.len() as f64;
    (v10, v01, auc)
}

/// DeLong comparison of two correlated AUCs measured on the same patients.
pub fn delong_compare(scores_a: &[f64], scores_b: &[f64], labels: &[u8]) -> Result<DelongResult> {
    if scores_a.len() != labels.len() || scores_b.len() != labels.len() {
        return Err(Error::InvalidArgument("delong: length mismatch".into()));
    }
    check_binary(labels)?;
    let (va10, va01, auc_a) = placement_components(scores_a, labels);
    let (vb10, vb01, auc_b) = placement_components(scores_b, labels);
    let m = va10.len() as f64;
    let n = va01.len() as f64;
    let var = |v: &[f64]| -> f64 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (v.len() as f64 - 1.0).max(1.0)
    };
    let d10: Vec<f64> = va10.iter().zip(&vb10).map(|(&a, &b)| a - b).collect();
    let d01: Vec<f64> = va01.iter().zip(&vb01).map(|(&a, &b)| a - b).collect();
    let variance = var(&d10) / m + var(&d01) / n;
    let delta = auc_a - auc_b;
    let (z, p) = if variance <= 0.0 {
        (0.0, 1.0)
    } else {
        let z = delta / variance.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (z, 2.0 * (1.0 - normal.cdf(z.abs())))
    };
    Ok(DelongResult { auc_a, auc_b, delta_auc: delta, z, p })
}
