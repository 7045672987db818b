//! Feature-set reduction, 0.632+ bootstrap AUC, stepwise model construction
//! and final ensemble-logistic coefficient averaging.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::logistic::{fit_ensemble_logistic, fit_logistic, make_partitions, EnsembleFit};
use crate::rng::SeedStream;
use crate::stats::{auc, mic, spearman};

/// Named feature columns over a patient cohort (rows = patients).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub data: Matrix,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, data: Matrix) -> Result<Self> {
        if names.len() != data.cols {
            return Err(Error::InvalidArgument("feature matrix: name/column mismatch".into()));
        }
        Ok(Self { names, data })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub reduced_set_size: usize,
    pub n_experiments: usize,
    pub n_bootstrap: usize,
    pub max_order: usize,
    /// Tradeoff between correlation with the outcome and redundancy with the
    /// already-selected set, in [0,1].
    pub gain_tradeoff: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            reduced_set_size: 25,
            n_experiments: 25,
            n_bootstrap: 100,
            max_order: 10,
            gain_tradeoff: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSet {
    /// Column indices in selection order.
    pub indices: Vec<usize>,
    /// Set when fewer candidates than requested were available.
    pub truncated: bool,
}

/// Gain of adding feature `f` to the selected set `s`:
/// delta * |spearman(f, labels)| - (1 - delta) * max MIC(f, selected).
fn gain(
    x: &Matrix,
    f: usize,
    selected: &[usize],
    delta: f64,
    abs_rs: &[f64],
    mic_cache: &mut HashMap<(usize, usize), f64>,
) -> f64 {
    let mut redundancy = 0.0;
    for &s in selected {
        let key = if f < s { (f, s) } else { (s, f) };
        let m = *mic_cache
            .entry(key)
            .or_insert_with(|| mic(&x.column(f), &x.column(s)));
        redundancy = f64::max(redundancy, m);
    }
    delta * abs_rs[f] - (1.0 - delta) * redundancy
}

/// Greedy forward reduction balancing outcome correlation against redundancy.
/// The first pick maximizes |spearman| alone; ties go to the lowest column
/// index.
pub fn reduce_feature_set(
    fm: &FeatureMatrix,
    labels: &[u8],
    cfg: &SelectionConfig,
) -> Result<ReducedSet> {
    let x = &fm.data;
    if x.rows != labels.len() {
        return Err(Error::InvalidArgument("reduce: row mismatch".into()));
    }
    let labels_f64: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let n_cols = x.cols;
    let abs_rs: Vec<f64> = (0..n_cols)
        .map(|c| match spearman(&x.column(c), &labels_f64) {
            Ok((rs, _)) => rs.abs(),
            // constant columns carry no signal
            Err(_) => 0.0,
        })
        .collect();
    let target = cfg.reduced_set_size.min(n_cols);
    let truncated = n_cols < cfg.reduced_set_size;

    let mut selected: Vec<usize> = Vec::with_capacity(target);
    let mut available: Vec<usize> = (0..n_cols).collect();
    let mut mic_cache: HashMap<(usize, usize), f64> = HashMap::new();
    while selected.len() < target {
        let mut best = available[0];
        let mut best_gain = f64::MIN;
        for &f in &available {
            let g = if selected.is_empty() {
                abs_rs[f]
            } else {
                gain(x, f, &selected, cfg.gain_tradeoff, &abs_rs, &mut mic_cache)
            };
            if g > best_gain {
                best_gain = g;
                best = f;
            }
        }
        selected.push(best);
        available.retain(|&f| f != best);
    }
    Ok(ReducedSet { indices: selected, truncated })
}

/// Per-column standardization constants frozen from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.rows as f64;
        let mut means = vec![0.0; x.cols];
        let mut sds = vec![0.0; x.cols];
        for c in 0..x.cols {
            let col = x.column(c);
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|&v| (v - m).powi(2)).sum::<f64>() / n;
            means[c] = m;
            // constant columns pass through unscaled
            sds[c] = if v > 0.0 { v.sqrt() } else { 1.0 };
        }
        Self { means, sds }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows, x.cols);
        for r in 0..x.rows {
            for c in 0..x.cols {
                out.set(r, c, (x.get(r, c) - self.means[c]) / self.sds[c]);
            }
        }
        out
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }
}

/// A model family: fits on a training matrix and returns a row scorer.
pub type Scorer = Box<dyn Fn(&[f64]) -> f64>;
pub type ModelFamily<'a> = dyn Fn(&Matrix, &[u8], &mut ChaCha8Rng) -> Result<Scorer> + 'a;

/// The imbalance-adjusted standardized logistic family used throughout the
/// stepwise search.
pub fn ensemble_logistic_family(
) -> impl Fn(&Matrix, &[u8], &mut ChaCha8Rng) -> Result<Scorer> {
    |x: &Matrix, y: &[u8], rng: &mut ChaCha8Rng| {
        let std = Standardizer::fit(x);
        let fit = fit_ensemble_logistic(&std.apply(x), y, rng)?;
        Ok(Box::new(move |row: &[f64]| fit.score(&std.apply_row(row))) as Scorer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Auc632 {
    pub estimate: f64,
    pub apparent: f64,
    pub oob: f64,
    pub draw_aucs: Vec<f64>,
}

impl Auc632 {
    /// Standard error of the out-of-bag AUC across bootstrap draws.
    pub fn se(&self) -> f64 {
        let n = self.draw_aucs.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.draw_aucs.iter().sum::<f64>() / n as f64;
        let v = self.draw_aucs.iter().map(|&a| (a - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (v / n as f64).sqrt()
    }
}

/// Combines apparent and out-of-bag AUC per the 0.632+ rule with
/// no-information AUC 0.5.
pub fn combine_632(apparent: f64, oob: f64) -> f64 {
    let oob = oob.max(0.5);
    let denom = apparent - 0.5;
    let r = if denom <= 0.0 { 0.0 } else { ((apparent - oob) / denom).clamp(0.0, 1.0) };
    let w = 0.632 / (1.0 - 0.368 * r);
    (1.0 - w) * apparent + w * oob
}

fn score_rows(scorer: &Scorer, x: &Matrix, idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| scorer(x.row(i))).collect()
}

/// 0.632+ bootstrap AUC of a model family. Out-of-bag draws missing a class
/// in either the sample or its complement are redrawn (up to 10 retries, then
/// skipped).
pub fn auc_632_plus<F>(
    family: &F,
    x: &Matrix,
    labels: &[u8],
    n_bootstrap: usize,
    stream: &SeedStream,
) -> Result<Auc632>
where
    F: Fn(&Matrix, &[u8], &mut ChaCha8Rng) -> Result<Scorer>,
{
    let n = x.rows;
    if n != labels.len() {
        return Err(Error::InvalidArgument("auc632: row mismatch".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let mut app_rng = stream.child("apparent", 0).rng();
    let scorer = family(x, labels, &mut app_rng)?;
    let apparent = auc(&score_rows(&scorer, x, &all), labels)?;

    let mut draw_aucs = Vec::with_capacity(n_bootstrap);
    for d in 0..n_bootstrap {
        let mut rng = stream.child("draw", d as u64).rng();
        for _retry in 0..10 {
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut in_bag = vec![false; n];
            for &i in &sample {
                in_bag[i] = true;
            }
            let oob_idx: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
            let sample_labels: Vec<u8> = sample.iter().map(|&i| labels[i]).collect();
            let oob_labels: Vec<u8> = oob_idx.iter().map(|&i| labels[i]).collect();
            let two_classes = |ls: &[u8]| ls.iter().any(|&l| l == 1) && ls.iter().any(|&l| l == 0);
            if !two_classes(&sample_labels) || !two_classes(&oob_labels) {
                continue;
            }
            let xs = x.select_rows(&sample);
            let scorer = match family(&xs, &sample_labels, &mut rng) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let oob_scores = score_rows(&scorer, x, &oob_idx);
            if let Ok(a) = auc(&oob_scores, &oob_labels) {
                draw_aucs.push(a);
                break;
            }
        }
    }
    if draw_aucs.is_empty() {
        return Err(Error::FitFailure("auc632: all bootstrap draws degenerate".into()));
    }
    let oob = draw_aucs.iter().sum::<f64>() / draw_aucs.len() as f64;
    Ok(Auc632 { estimate: combine_632(apparent, oob), apparent, oob, draw_aucs })
}

/// Best feature combination found at one model order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    pub order: usize,
    /// Column indices into the original feature matrix.
    pub features: Vec<usize>,
    pub auc: f64,
    pub auc_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    pub per_order: Vec<OrderResult>,
}

/// Forward selection from the reduced set: every reduced feature starts one
/// experiment; each experiment greedily appends the feature maximizing the
/// 0.632+ bootstrap AUC of the imbalance-adjusted logistic fit, up to
/// `max_order`. Per order the best experiment is kept.
pub fn stepwise_select(
    reduced: &[usize],
    x: &Matrix,
    labels: &[u8],
    cfg: &SelectionConfig,
    stream: &SeedStream,
) -> Result<StepwiseResult> {
    if reduced.is_empty() {
        return Err(Error::InvalidArgument("stepwise: empty reduced set".into()));
    }
    let family = ensemble_logistic_family();
    let n_exp = cfg.n_experiments.min(reduced.len());
    let mut best: Vec<Option<OrderResult>> = vec![None; cfg.max_order];

    for (e, &starter) in reduced.iter().take(n_exp).enumerate() {
        let exp_stream = stream.child("experiment", e as u64);
        let mut current = vec![starter];
        for order in 1..=cfg.max_order {
            let order_stream = exp_stream.child("order", order as u64);
            if order > 1 {
                // grow by the candidate with the best 0.632+ AUC
                let mut best_cand: Option<(usize, Auc632)> = None;
                for (ci, &cand) in reduced.iter().enumerate() {
                    if current.contains(&cand) {
                        continue;
                    }
                    let mut cols = current.clone();
                    cols.push(cand);
                    let xs = x.select_cols(&cols);
                    let a = auc_632_plus(
                        &family,
                        &xs,
                        labels,
                        cfg.n_bootstrap,
                        &order_stream.child("candidate", ci as u64),
                    )?;
                    let better = match &best_cand {
                        None => true,
                        Some((_, cur)) => a.estimate > cur.estimate,
                    };
                    if better {
                        best_cand = Some((cand, a));
                    }
                }
                match best_cand {
                    Some((cand, _)) => current.push(cand),
                    None => break,
                }
            }
            let xs = x.select_cols(&current);
            let a = auc_632_plus(&family, &xs, labels, cfg.n_bootstrap, &order_stream.child("final", 0))?;
            let replace = match &best[order - 1] {
                None => true,
                Some(b) => a.estimate > b.auc,
            };
            if replace {
                best[order - 1] = Some(OrderResult {
                    order,
                    features: current.clone(),
                    auc: a.estimate,
                    auc_se: a.se(),
                });
            }
        }
    }
    let per_order: Vec<OrderResult> = best.into_iter().flatten().collect();
    if per_order.is_empty() {
        return Err(Error::FitFailure("stepwise: no order produced a fit".into()));
    }
    Ok(StepwiseResult { per_order })
}

/// Smallest order whose AUC lies within one standard error of the maximum.
pub fn choose_order(result: &StepwiseResult) -> &OrderResult {
    let best = result
        .per_order
        .iter()
        .max_by(|a, b| a.auc.partial_cmp(&b.auc).unwrap())
        .expect("non-empty stepwise result");
    let threshold = best.auc - best.auc_se;
    result
        .per_order
        .iter()
        .find(|o| o.auc >= threshold)
        .unwrap_or(best)
}

/// Final averaged model over bootstrap draws and partitions, with frozen
/// training-set standardization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleLogisticModel {
    pub feature_names: Vec<String>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub standardizer: Standardizer,
    pub n_bootstrap: usize,
    pub n_fits: usize,
    pub ridge_fallback: bool,
}

impl EnsembleLogisticModel {
    /// Event probability for one raw feature row in model feature order.
    pub fn score(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.apply_row(row);
        let eta: f64 = self.coefficients[0]
            + z.iter().zip(&self.coefficients[1..]).map(|(&v, &b)| v * b).sum::<f64>();
        1.0 / (1.0 + (-eta).exp())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::MalformedHeader(format!("model json: {e}")))
    }
}

/// Averages coefficients over `n_bootstrap` draws, each contributing one fit
/// per imbalance partition. Standardization constants come from the full
/// training set and are stored with the model.
pub fn finalize_model(
    feature_names: &[String],
    x: &Matrix,
    labels: &[u8],
    n_bootstrap: usize,
    stream: &SeedStream,
) -> Result<EnsembleLogisticModel> {
    if feature_names.len() != x.cols {
        return Err(Error::InvalidArgument("finalize: name/column mismatch".into()));
    }
    if x.cols == 0 {
        return Err(Error::InvalidArgument("finalize: empty combination".into()));
    }
    let std = Standardizer::fit(x);
    let xs = std.apply(x);
    let n = x.rows;
    let mut sum = vec![0.0; x.cols + 1];
    let mut n_fits = 0usize;
    let mut ridge_used = false;
    for d in 0..n_bootstrap {
        let mut rng = stream.child("final-draw", d as u64).rng();
        for _retry in 0..10 {
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let ys: Vec<u8> = sample.iter().map(|&i| labels[i]).collect();
            if ys.iter().all(|&l| l == 0) || ys.iter().all(|&l| l == 1) {
                continue;
            }
            let xb = xs.select_rows(&sample);
            let scheme = match make_partitions(&ys, &mut rng) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let mut ok = true;
            let mut draw_fits = Vec::with_capacity(scheme.p);
            for part in &scheme.partitions {
                let xp = xb.select_rows(part);
                let yp: Vec<u8> = part.iter().map(|&i| ys[i]).collect();
                match fit_logistic(&xp, &yp) {
                    Ok(f) => draw_fits.push(f),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            for f in draw_fits {
                ridge_used |= f.ridge_fallback;
                for (s, c) in sum.iter_mut().zip(&f.coefficients) {
                    *s += c;
                }
                n_fits += 1;
            }
            break;
        }
    }
    if n_fits == 0 {
        return Err(Error::FitFailure("finalize: all bootstrap draws degenerate".into()));
    }
    let coefficients: Vec<f64> = sum.iter().map(|s| s / n_fits as f64).collect();
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::FitFailure("finalize: non-finite averaged coefficients".into()));
    }
    Ok(EnsembleLogisticModel {
        feature_names: feature_names.to_vec(),
        coefficients,
        standardizer: std,
        n_bootstrap,
        n_fits,
        ridge_fallback: ridge_used,
    })
}

/// Convenience: ensemble fit on the full set with frozen standardization,
/// used where a single non-bootstrapped model is wanted.
pub fn fit_standardized_ensemble(
    x: &Matrix,
    labels: &[u8],
    rng: &mut ChaCha8Rng,
) -> Result<(Standardizer, EnsembleFit)> {
    let std = Standardizer::fit(x);
    let fit = fit_ensemble_logistic(&std.apply(x), labels, rng)?;
    Ok((std, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn planted_cohort(
        n: usize,
        n_noise: usize,
        event_rate: f64,
        seed: u64,
    ) -> (FeatureMatrix, Vec<u8>) {
        let mut rng = SeedStream::from_master(seed).child("cohort", 0).rng();
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = u8::from(rng.gen::<f64>() < event_rate);
            let mut row = Vec::with_capacity(2 + n_noise);
            // two informative features shifted by the outcome
            row.push(rng.gen_range(-1.0..1.0) + 2.0 * y as f64);
            row.push(rng.gen_range(-1.0..1.0) - 1.5 * y as f64);
            for _ in 0..n_noise {
                row.push(rng.gen_range(-1.0..1.0));
            }
            rows.push(row);
            labels.push(y);
        }
        let names = (0..2 + n_noise).map(|i| format!("f{i}")).collect();
        (FeatureMatrix::new(names, Matrix::from_rows(&rows)).unwrap(), labels)
    }

    #[test]
    fn reduction_keeps_informative_features() {
        let (fm, labels) = planted_cohort(200, 10, 0.3, 42);
        let cfg = SelectionConfig { reduced_set_size: 5, ..Default::default() };
        let red = reduce_feature_set(&fm, &labels, &cfg).unwrap();
        assert_eq!(red.indices.len(), 5);
        assert!(!red.truncated);
        assert!(red.indices.contains(&0));
        assert!(red.indices.contains(&1));
    }

    #[test]
    fn duplicate_of_top_feature_is_not_picked_second() {
        let (fm, labels) = planted_cohort(150, 6, 0.3, 7);
        // append an exact duplicate of column 0
        let dup_col = fm.data.column(0);
        let mut rows: Vec<Vec<f64>> = (0..fm.data.rows).map(|r| fm.data.row(r).to_vec()).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            row.push(dup_col[r]);
        }
        let mut names = fm.names.clone();
        names.push("dup".into());
        let fm2 = FeatureMatrix::new(names, Matrix::from_rows(&rows)).unwrap();
        let dup_idx = fm2.data.cols - 1;
        let cfg = SelectionConfig { reduced_set_size: 3, ..Default::default() };
        let red = reduce_feature_set(&fm2, &labels, &cfg).unwrap();
        let first = red.indices[0];
        assert!(first == 0 || first == dup_idx);
        let twin = if first == 0 { dup_idx } else { 0 };
        assert_ne!(red.indices[1], twin, "exact duplicate picked second");
    }

    #[test]
    fn reduction_handles_fewer_candidates_than_requested() {
        let (fm, labels) = planted_cohort(80, 2, 0.3, 3);
        let cfg = SelectionConfig { reduced_set_size: 25, ..Default::default() };
        let red = reduce_feature_set(&fm, &labels, &cfg).unwrap();
        assert_eq!(red.indices.len(), 4);
        assert!(red.truncated);
    }

    #[test]
    fn combine_632_identity_and_memorizer() {
        assert!((combine_632(0.8, 0.8) - 0.8).abs() < 1e-12);
        // apparent 1.0 / out-of-bag 0.5: full overfitting collapses to 0.5
        assert!((combine_632(1.0, 0.5) - 0.5).abs() < 1e-12);
        // apparent below chance: R floors at 0, plain 0.632 blend with oob 0.5
        let v = combine_632(0.4, 0.3);
        assert!((v - (0.368 * 0.4 + 0.632 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn auc632_perfect_separator_is_one() {
        // feature equals the label: apparent and out-of-bag AUC are both 1
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = SeedStream::from_master(1).child("sep", 0).rng();
        for _ in 0..60 {
            let y = u8::from(rng.gen::<f64>() < 0.4);
            rows.push(vec![y as f64 * 10.0 + rng.gen_range(-1.0..1.0)]);
            labels.push(y);
        }
        let x = Matrix::from_rows(&rows);
        let family = ensemble_logistic_family();
        let a = auc_632_plus(&family, &x, &labels, 20, &SeedStream::from_master(2)).unwrap();
        assert!(a.estimate > 0.95, "estimate {}", a.estimate);
    }

    #[test]
    fn auc632_noise_is_near_chance() {
        let mut worst: f64 = 0.0;
        for seed in 0..5u64 {
            let mut rng = SeedStream::from_master(seed).child("noise", 0).rng();
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..200 {
                labels.push(u8::from(rng.gen::<f64>() < 0.3));
                rows.push(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            }
            let x = Matrix::from_rows(&rows);
            let family = ensemble_logistic_family();
            let a = auc_632_plus(&family, &x, &labels, 30, &SeedStream::from_master(seed + 100))
                .unwrap();
            worst = worst.max((a.estimate - 0.5).abs());
        }
        assert!(worst < 0.1, "worst deviation from chance {worst}");
    }

    fn small_cfg() -> SelectionConfig {
        SelectionConfig {
            reduced_set_size: 8,
            n_experiments: 8,
            n_bootstrap: 12,
            max_order: 3,
            gain_tradeoff: 0.5,
        }
    }

    #[test]
    fn stepwise_recovers_planted_pair() {
        let (fm, labels) = planted_cohort(150, 6, 0.25, 21);
        let cfg = small_cfg();
        let red = reduce_feature_set(&fm, &labels, &cfg).unwrap();
        let res =
            stepwise_select(&red.indices, &fm.data, &labels, &cfg, &SeedStream::from_master(5))
                .unwrap();
        assert_eq!(res.per_order.len(), 3);
        let order2 = &res.per_order[1];
        assert!(order2.features.contains(&0) && order2.features.contains(&1),
            "order-2 model {:?}", order2.features);
        // per-experiment sets grow monotonically, so order k is a prefix of order k+1
        for w in res.per_order.windows(2) {
            assert_eq!(w[1].features.len(), w[0].features.len() + 1);
        }
    }

    #[test]
    fn stepwise_is_deterministic() {
        let (fm, labels) = planted_cohort(100, 4, 0.3, 8);
        let cfg = small_cfg();
        let red = reduce_feature_set(&fm, &labels, &cfg).unwrap();
        let a = stepwise_select(&red.indices, &fm.data, &labels, &cfg, &SeedStream::from_master(9))
            .unwrap();
        let b = stepwise_select(&red.indices, &fm.data, &labels, &cfg, &SeedStream::from_master(9))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn choose_order_applies_one_se_rule() {
        let res = StepwiseResult {
            per_order: vec![
                OrderResult { order: 1, features: vec![0], auc: 0.78, auc_se: 0.0 },
                OrderResult { order: 2, features: vec![0, 1], auc: 0.80, auc_se: 0.03 },
                OrderResult { order: 3, features: vec![0, 1, 2], auc: 0.81, auc_se: 0.02 },
            ],
        };
        // max 0.81 with se 0.02: order 2 qualifies (0.80 >= 0.79), order 1 does not
        assert_eq!(choose_order(&res).order, 2);
    }

    #[test]
    fn finalized_model_is_reproducible_and_signed() {
        let (fm, labels) = planted_cohort(150, 2, 0.25, 30);
        let names: Vec<String> = vec!["up".into(), "down".into()];
        let x = fm.data.select_cols(&[0, 1]);
        let stream = SeedStream::from_master(77);
        let m1 = finalize_model(&names, &x, &labels, 30, &stream).unwrap();
        let m2 = finalize_model(&names, &x, &labels, 30, &stream).unwrap();
        assert_eq!(m1, m2);
        assert!(m1.coefficients[1] > 0.0, "positive-shift feature coefficient");
        assert!(m1.coefficients[2] < 0.0, "negative-shift feature coefficient");
        let back = EnsembleLogisticModel::from_json(&m1.to_json()).unwrap();
        assert_eq!(back, m1);
        let p = m1.score(&[3.0, -2.0]);
        assert!(p > 0.5, "event-like row scores high: {p}");
    }
}
