//! Imbalance-adjusted random forests over mixed radiomic and clinical
//! variables, minority-weight tuning, staging-group selection, permutation
//! importance and risk-group stratification.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::logistic::make_partitions;
use crate::rng::SeedStream;
use crate::stats::auc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HnType {
    Oropharynx,
    Hypopharynx,
    Nasopharynx,
    Larynx,
}

impl HnType {
    pub fn code(self) -> usize {
        match self {
            HnType::Oropharynx => 0,
            HnType::Hypopharynx => 1,
            HnType::Nasopharynx => 2,
            HnType::Larynx => 3,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "oropharynx" => Ok(HnType::Oropharynx),
            "hypopharynx" => Ok(HnType::Hypopharynx),
            "nasopharynx" => Ok(HnType::Nasopharynx),
            "larynx" => Ok(HnType::Larynx),
            other => Err(Error::InvalidArgument(format!("unknown tumour site {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClinicalVariables {
    pub age_years: f64,
    pub hn_type: HnType,
    pub t_stage: u8,
    pub n_stage: u8,
    pub tnm_stage: u8,
}

impl ClinicalVariables {
    pub fn validate(&self) -> Result<()> {
        if !(self.age_years > 0.0 && self.age_years.is_finite()) {
            return Err(Error::InvalidArgument("clinical: age must be positive".into()));
        }
        if !(1..=4).contains(&self.t_stage) {
            return Err(Error::InvalidArgument("clinical: T stage outside 1..4".into()));
        }
        if self.n_stage > 3 {
            return Err(Error::InvalidArgument("clinical: N stage outside 0..3".into()));
        }
        if !(1..=4).contains(&self.tnm_stage) {
            return Err(Error::InvalidArgument("clinical: TNM stage outside 1..4".into()));
        }
        Ok(())
    }
}

/// Candidate tumour-stage variable groups for the clinical model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StagingGroup {
    T,
    N,
    TAndN,
    Tnm,
}

impl StagingGroup {
    pub const ALL: [StagingGroup; 4] =
        [StagingGroup::T, StagingGroup::N, StagingGroup::TAndN, StagingGroup::Tnm];

    fn stage_columns(self) -> Vec<&'static str> {
        match self {
            StagingGroup::T => vec!["t_stage"],
            StagingGroup::N => vec!["n_stage"],
            StagingGroup::TAndN => vec!["t_stage", "n_stage"],
            StagingGroup::Tnm => vec!["tnm_stage"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical { arity: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSchema {
    pub columns: Vec<ColumnSchema>,
}

impl ForestSchema {
    pub fn numeric(names: &[String]) -> Self {
        Self {
            columns: names
                .iter()
                .map(|n| ColumnSchema { name: n.clone(), kind: ColumnKind::Numeric })
                .collect(),
        }
    }
}

/// Schema of the clinical-only model: age, tumour site, staging columns.
pub fn clinical_schema(group: StagingGroup) -> ForestSchema {
    let mut columns = vec![
        ColumnSchema { name: "age_years".into(), kind: ColumnKind::Numeric },
        ColumnSchema { name: "hn_type".into(), kind: ColumnKind::Categorical { arity: 4 } },
    ];
    for name in group.stage_columns() {
        columns.push(ColumnSchema { name: name.into(), kind: ColumnKind::Numeric });
    }
    ForestSchema { columns }
}

/// Encodes one patient's clinical variables in `clinical_schema` order.
pub fn encode_clinical(v: &ClinicalVariables, group: StagingGroup) -> Vec<f64> {
    let mut row = vec![v.age_years, v.hn_type.code() as f64];
    for name in group.stage_columns() {
        row.push(match name {
            "t_stage" => v.t_stage as f64,
            "n_stage" => v.n_stage as f64,
            _ => v.tnm_stage as f64,
        });
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitRule {
    /// Left branch takes values <= threshold.
    Threshold(f64),
    /// Left branch takes categories in the bitmask.
    Subset(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { class: u8 },
    Split { feature: usize, rule: SplitRule, left: Box<Node>, right: Box<Node> },
}

impl Node {
    fn predict(&self, row: &[f64]) -> u8 {
        match self {
            Node::Leaf { class } => *class,
            Node::Split { feature, rule, left, right } => {
                let v = row[*feature];
                let go_left = match rule {
                    SplitRule::Threshold(t) => v <= *t,
                    SplitRule::Subset(mask) => (mask >> (v as u64)) & 1 == 1,
                };
                if go_left { left.predict(row) } else { right.predict(row) }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Node>,
    pub n_trees: usize,
    pub oversampling_weight: f64,
    pub schema: ForestSchema,
    pub n_bootstrap: usize,
}

impl ForestModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("forest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::MalformedHeader(format!("forest json: {e}")))
    }
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    feature: usize,
    rule: SplitRule,
    impurity: f64,
}

fn best_numeric_split(
    x: &Matrix,
    rows: &[usize],
    labels: &[u8],
    feature: usize,
) -> Option<(SplitRule, f64)> {
    let mut vals: Vec<(f64, u8)> = rows.iter().map(|&r| (x.get(r, feature), labels[r])).collect();
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = vals.len();
    let total_pos = vals.iter().filter(|(_, y)| *y == 1).count();
    let mut left_pos = 0usize;
    let mut best: Option<(SplitRule, f64)> = None;
    let mut i = 0;
    while i < n {
        // advance over a block of equal values so both sides stay non-empty
        let v = vals[i].0;
        while i < n && vals[i].0 == v {
            left_pos += usize::from(vals[i].1 == 1);
            i += 1;
        }
        if i == n {
            break;
        }
        let n_left = i;
        let n_right = n - i;
        let imp = (n_left as f64 * gini(left_pos, n_left)
            + n_right as f64 * gini(total_pos - left_pos, n_right))
            / n as f64;
        let thr = 0.5 * (v + vals[i].0);
        if best.as_ref().map_or(true, |(_, b)| imp < *b) {
            best = Some((SplitRule::Threshold(thr), imp));
        }
    }
    best
}

fn best_categorical_split(
    x: &Matrix,
    rows: &[usize],
    labels: &[u8],
    feature: usize,
    arity: usize,
) -> Option<(SplitRule, f64)> {
    // counts per category present in this node
    let mut pos = vec![0usize; arity];
    let mut tot = vec![0usize; arity];
    for &r in rows {
        let c = x.get(r, feature) as usize;
        tot[c] += 1;
        pos[c] += usize::from(labels[r] == 1);
    }
    // order categories by positive rate; prefix subsets along that order are
    // the candidate binary splits
    let mut cats: Vec<usize> = (0..arity).filter(|&c| tot[c] > 0).collect();
    if cats.len() < 2 {
        return None;
    }
    cats.sort_by(|&a, &b| {
        let ra = pos[a] as f64 / tot[a] as f64;
        let rb = pos[b] as f64 / tot[b] as f64;
        ra.partial_cmp(&rb).unwrap().then(a.cmp(&b))
    });
    let n = rows.len();
    let total_pos: usize = pos.iter().sum();
    let mut best: Option<(SplitRule, f64)> = None;
    let mut mask = 0u64;
    let mut left_pos = 0usize;
    let mut left_tot = 0usize;
    for &c in cats.iter().take(cats.len() - 1) {
        mask |= 1 << c;
        left_pos += pos[c];
        left_tot += tot[c];
        let right_tot = n - left_tot;
        let imp = (left_tot as f64 * gini(left_pos, left_tot)
            + right_tot as f64 * gini(total_pos - left_pos, right_tot))
            / n as f64;
        if best.as_ref().map_or(true, |(_, b)| imp < *b) {
            best = Some((SplitRule::Subset(mask), imp));
        }
    }
    best
}

fn grow_tree(
    x: &Matrix,
    rows: &[usize],
    labels: &[u8],
    schema: &ForestSchema,
    rng: &mut ChaCha8Rng,
) -> Node {
    let n_pos = rows.iter().filter(|&&r| labels[r] == 1).count();
    if n_pos == 0 {
        return Node::Leaf { class: 0 };
    }
    if n_pos == rows.len() {
        return Node::Leaf { class: 1 };
    }
    let d = schema.columns.len();
    let mtry = ((d as f64).sqrt().floor() as usize).max(1);
    let mut features: Vec<usize> = (0..d).collect();
    features.shuffle(rng);
    features.truncate(mtry);
    features.sort_unstable();

    let parent = gini(n_pos, rows.len());
    let mut best: Option<BestSplit> = None;
    for &f in &features {
        let cand = match schema.columns[f].kind {
            ColumnKind::Numeric => best_numeric_split(x, rows, labels, f),
            ColumnKind::Categorical { arity } => best_categorical_split(x, rows, labels, f, arity),
        };
        if let Some((rule, imp)) = cand {
            if imp < parent - 1e-12 && best.as_ref().map_or(true, |b| imp < b.impurity) {
                best = Some(BestSplit { feature: f, rule, impurity: imp });
            }
        }
    }
    let Some(split) = best else {
        // no sampled feature separates this node; majority vote, ties positive
        return Node::Leaf { class: u8::from(2 * n_pos >= rows.len()) };
    };
    let (mut lrows, mut rrows) = (Vec::new(), Vec::new());
    for &r in rows {
        let v = x.get(r, split.feature);
        let left = match &split.rule {
            SplitRule::Threshold(t) => v <= *t,
            SplitRule::Subset(mask) => (mask >> (v as u64)) & 1 == 1,
        };
        if left { lrows.push(r) } else { rrows.push(r) }
    }
    debug_assert!(!lrows.is_empty() && !rrows.is_empty());
    let left = grow_tree(x, &lrows, labels, schema, rng);
    let right = grow_tree(x, &rrows, labels, schema, rng);
    Node::Split { feature: split.feature, rule: split.rule, left: Box::new(left), right: Box::new(right) }
}

/// Adjusts the minority rows of one partition to round(weight * count):
/// cyclic replication above 1, subsampling without replacement below.
fn adjust_minority(minority: &[usize], weight: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let target = ((minority.len() as f64 * weight + 0.5).floor() as usize).max(1);
    let mut shuffled = minority.to_vec();
    shuffled.shuffle(rng);
    (0..target).map(|i| shuffled[i % shuffled.len()]).collect()
}

/// Trains the partition-ensemble forest: per bootstrap draw one tree per
/// imbalance partition, with the minority class over/undersampled by
/// `weight`. Tree count is the sum of partition counts over all draws.
pub fn train_forest(
    x: &Matrix,
    schema: &ForestSchema,
    labels: &[u8],
    weight: f64,
    n_bootstrap: usize,
    stream: &SeedStream,
) -> Result<ForestModel> {
    if x.rows != labels.len() {
        return Err(Error::InvalidArgument("forest: row mismatch".into()));
    }
    if schema.columns.len() != x.cols {
        return Err(Error::InvalidArgument("forest: schema/column mismatch".into()));
    }
    if !(0.5..=2.0).contains(&weight) {
        return Err(Error::InvalidArgument("forest: weight outside [0.5, 2.0]".into()));
    }
    if labels.iter().all(|&l| l == 0) || labels.iter().all(|&l| l == 1) {
        return Err(Error::SingleClass);
    }
    let n = x.rows;
    let mut trees = Vec::new();
    for d in 0..n_bootstrap {
        let mut rng = stream.child("forest-draw", d as u64).rng();
        for _retry in 0..10 {
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let ys: Vec<u8> = sample.iter().map(|&i| labels[i]).collect();
            let scheme = match make_partitions(&ys, &mut rng) {
                Ok(s) => s,
                Err(_) => continue,
            };
            for part in &scheme.partitions {
                let majority: Vec<usize> = part
                    .iter()
                    .filter(|&&i| ys[i] == 0)
                    .map(|&i| sample[i])
                    .collect();
                let minority: Vec<usize> =
                    scheme.minority_indices.iter().map(|&i| sample[i]).collect();
                let mut rows = majority;
                rows.extend(adjust_minority(&minority, weight, &mut rng));
                trees.push(grow_tree(x, &rows, labels, schema, &mut rng));
            }
            break;
        }
    }
    if trees.is_empty() {
        return Err(Error::FitFailure("forest: all bootstrap draws degenerate".into()));
    }
    let n_trees = trees.len();
    Ok(ForestModel {
        trees,
        n_trees,
        oversampling_weight: weight,
        schema: schema.clone(),
        n_bootstrap,
    })
}

/// Fraction of trees voting for the positive class.
pub fn predict_forest(model: &ForestModel, row: &[f64]) -> Result<f64> {
    if row.len() != model.schema.columns.len() {
        return Err(Error::InvalidArgument("predict: row does not match schema".into()));
    }
    let votes = model.trees.iter().filter(|t| t.predict(row) == 1).count();
    Ok(votes as f64 / model.n_trees as f64)
}

pub fn predict_matrix(model: &ForestModel, x: &Matrix) -> Result<Vec<f64>> {
    (0..x.rows).map(|r| predict_forest(model, x.row(r))).collect()
}

/// Stratified random sub-sampling: 2:1 sub-training/sub-testing splits with
/// the event proportion preserved within one patient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubSamplingPlan {
    pub n_splits: usize,
}

impl Default for SubSamplingPlan {
    fn default() -> Self {
        Self { n_splits: 10 }
    }
}

pub fn stratified_splits(
    labels: &[u8],
    plan: &SubSamplingPlan,
    stream: &SeedStream,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.len() < plan.n_splits.min(3) || pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("stratify: too few events for stratified splits".into()));
    }
    let take_train = |n: usize| (2 * n + 2) / 3; // round(2n/3)
    let mut out = Vec::with_capacity(plan.n_splits);
    for s in 0..plan.n_splits {
        let mut rng = stream.child("split", s as u64).rng();
        let mut p = pos.clone();
        let mut q = neg.clone();
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        let (tp, tq) = (take_train(p.len()), take_train(q.len()));
        let mut train: Vec<usize> = p[..tp].iter().chain(q[..tq].iter()).copied().collect();
        let mut test: Vec<usize> = p[tp..].iter().chain(q[tq..].iter()).copied().collect();
        train.sort_unstable();
        test.sort_unstable();
        if test.iter().all(|&i| labels[i] == 0) || train.iter().all(|&i| labels[i] == 0) {
            return Err(Error::InvalidArgument("stratify: split lost all events".into()));
        }
        out.push((train, test));
    }
    Ok(out)
}

/// The minority-weight grid 0.5..=2.0 in steps of 0.1.
pub fn weight_grid() -> Vec<f64> {
    (5..=20).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub weight: f64,
    pub split_aucs: Vec<f64>,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_weight: f64,
    pub table: Vec<WeightRow>,
}

/// Average sub-testing AUC per weight over the stratified splits; the best
/// weight maximizes the mean, ties going to the smallest weight.
pub fn tune_weight(
    x: &Matrix,
    schema: &ForestSchema,
    labels: &[u8],
    plan: &SubSamplingPlan,
    weights: &[f64],
    n_bootstrap: usize,
    stream: &SeedStream,
) -> Result<TuneResult> {
    let splits = stratified_splits(labels, plan, &stream.child("tune-splits", 0))?;
    let mut table = Vec::with_capacity(weights.len());
    for (wi, &w) in weights.iter().enumerate() {
        let mut split_aucs = Vec::with_capacity(splits.len());
        for (si, (train, test)) in splits.iter().enumerate() {
            let xt = x.select_rows(train);
            let yt: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
            let model = train_forest(
                &xt,
                schema,
                &yt,
                w,
                n_bootstrap,
                &stream.child("tune", (wi * splits.len() + si) as u64),
            )?;
            let scores: Vec<f64> =
                test.iter().map(|&i| predict_forest(&model, x.row(i))).collect::<Result<_>>()?;
            let yv: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
            split_aucs.push(auc(&scores, &yv)?);
        }
        let mean_auc = split_aucs.iter().sum::<f64>() / split_aucs.len() as f64;
        table.push(WeightRow { weight: w, split_aucs, mean_auc });
    }
    let best_weight = table
        .iter()
        .fold(None::<&WeightRow>, |acc, row| match acc {
            Some(b) if row.mean_auc > b.mean_auc => Some(row),
            None => Some(row),
            other => other,
        })
        .expect("non-empty weight grid")
        .weight;
    Ok(TuneResult { best_weight, table })
}

/// Evaluates the four candidate staging groups with clinical-only forests and
/// returns the one with the highest average sub-testing AUC.
pub fn select_staging_group(
    clinical: &[ClinicalVariables],
    labels: &[u8],
    plan: &SubSamplingPlan,
    n_bootstrap: usize,
    stream: &SeedStream,
) -> Result<(StagingGroup, Vec<(StagingGroup, f64)>)> {
    let splits = stratified_splits(labels, plan, &stream.child("staging-splits", 0))?;
    let mut scores = Vec::with_capacity(4);
    for (gi, group) in StagingGroup::ALL.into_iter().enumerate() {
        let schema = clinical_schema(group);
        let rows: Vec<Vec<f64>> = clinical.iter().map(|c| encode_clinical(c, group)).collect();
        let x = Matrix::from_rows(&rows);
        let mut aucs = Vec::with_capacity(splits.len());
        for (si, (train, test)) in splits.iter().enumerate() {
            let xt = x.select_rows(train);
            let yt: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
            let model = train_forest(
                &xt,
                &schema,
                &yt,
                1.0,
                n_bootstrap,
                &stream.child("staging", (gi * splits.len() + si) as u64),
            )?;
            let s: Vec<f64> =
                test.iter().map(|&i| predict_forest(&model, x.row(i))).collect::<Result<_>>()?;
            let yv: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
            aucs.push(auc(&s, &yv)?);
        }
        scores.push((group, aucs.iter().sum::<f64>() / aucs.len() as f64));
    }
    let best = scores
        .iter()
        .fold(None::<&(StagingGroup, f64)>, |acc, row| match acc {
            Some(b) if row.1 > b.1 => Some(row),
            None => Some(row),
            other => other,
        })
        .expect("four staging groups")
        .0;
    Ok((best, scores))
}

/// Mean AUC drop over `n_perm` shuffles of one column at a time.
pub fn permutation_importance(
    model: &ForestModel,
    x_test: &Matrix,
    labels_test: &[u8],
    n_perm: usize,
    stream: &SeedStream,
) -> Result<Vec<f64>> {
    let baseline_scores = predict_matrix(model, x_test)?;
    let baseline = auc(&baseline_scores, labels_test)?;
    let mut importances = Vec::with_capacity(x_test.cols);
    for f in 0..x_test.cols {
        let mut drop_sum = 0.0;
        for p in 0..n_perm {
            let mut rng = stream.child("perm", (f * n_perm + p) as u64).rng();
            let mut perm: Vec<usize> = (0..x_test.rows).collect();
            perm.shuffle(&mut rng);
            let scores: Vec<f64> = (0..x_test.rows)
                .map(|r| {
                    let mut row = x_test.row(r).to_vec();
                    row[f] = x_test.get(perm[r], f);
                    predict_forest(model, &row)
                })
                .collect::<Result<_>>()?;
            drop_sum += baseline - auc(&scores, labels_test)?;
        }
        importances.push(drop_sum / n_perm as f64);
    }
    Ok(importances)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RiskGroup {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StratifyMode {
    TwoGroup,
    ThreeGroup,
}

/// Threshold stratification of forest probabilities. Two-group splits at 0.5
/// with the boundary on the high-risk side; three-group uses [0,1/3),
/// [1/3,2/3), [2/3,1].
pub fn stratify_risk(probabilities: &[f64], mode: StratifyMode) -> Result<Vec<RiskGroup>> {
    if probabilities.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument("stratify: probabilities outside [0,1]".into()));
    }
    Ok(probabilities
        .iter()
        .map(|&p| match mode {
            StratifyMode::TwoGroup => {
                if p >= 0.5 {
                    RiskGroup::High
                } else {
                    RiskGroup::Low
                }
            }
            StratifyMode::ThreeGroup => {
                if p >= 2.0 / 3.0 {
                    RiskGroup::High
                } else if p >= 1.0 / 3.0 {
                    RiskGroup::Medium
                } else {
                    RiskGroup::Low
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(n: usize, rate: f64, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = SeedStream::from_master(seed).child("forest-cohort", 0).rng();
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let y = u8::from(rng.gen::<f64>() < rate);
            rows.push(vec![
                rng.gen_range(-1.0..1.0) + 2.5 * y as f64,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]);
            labels.push(y);
        }
        (Matrix::from_rows(&rows), labels)
    }

    fn numeric_schema(d: usize) -> ForestSchema {
        ForestSchema::numeric(&(0..d).map(|i| format!("x{i}")).collect::<Vec<_>>())
    }

    #[test]
    fn balanced_weight_one_gives_one_tree_per_draw() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = SeedStream::from_master(3).child("bal", 0).rng();
        for i in 0..40 {
            let y = (i % 2) as u8;
            rows.push(vec![rng.gen_range(-1.0..1.0) + y as f64]);
            labels.push(y);
        }
        let x = Matrix::from_rows(&rows);
        let m = train_forest(&x, &numeric_schema(1), &labels, 1.0, 25, &SeedStream::from_master(4))
            .unwrap();
        // P stays at or near 1 per draw; exactly 1 unless a draw lands above 1.5:1
        assert!(m.n_trees >= 25);
        assert_eq!(m.n_trees, m.trees.len());
    }

    #[test]
    fn forest_separates_planted_signal() {
        let (x, y) = planted(120, 0.3, 11);
        let schema = numeric_schema(3);
        let m = train_forest(&x, &schema, &y, 1.0, 25, &SeedStream::from_master(12)).unwrap();
        let (xt, yt) = planted(80, 0.3, 99);
        let probs = predict_matrix(&m, &xt).unwrap();
        let a = auc(&probs, &yt).unwrap();
        assert!(a > 0.85, "held-out auc {a}");
        let mean_pos = probs
            .iter()
            .zip(&yt)
            .filter(|(_, &l)| l == 1)
            .map(|(&p, _)| p)
            .sum::<f64>()
            / yt.iter().filter(|&&l| l == 1).count() as f64;
        let mean_neg = probs
            .iter()
            .zip(&yt)
            .filter(|(_, &l)| l == 0)
            .map(|(&p, _)| p)
            .sum::<f64>()
            / yt.iter().filter(|&&l| l == 0).count() as f64;
        assert!(mean_pos > mean_neg);
    }

    #[test]
    fn probabilities_are_vote_fractions() {
        let (x, y) = planted(60, 0.4, 5);
        let m =
            train_forest(&x, &numeric_schema(3), &y, 1.0, 10, &SeedStream::from_master(6)).unwrap();
        let p = predict_forest(&m, x.row(0)).unwrap();
        let votes = p * m.n_trees as f64;
        assert!((votes - votes.round()).abs() < 1e-9);
    }

    #[test]
    fn prediction_invariant_under_tree_reordering() {
        let (x, y) = planted(60, 0.4, 7);
        let mut m =
            train_forest(&x, &numeric_schema(3), &y, 1.2, 10, &SeedStream::from_master(8)).unwrap();
        let before = predict_matrix(&m, &x).unwrap();
        m.trees.reverse();
        let after = predict_matrix(&m, &x).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn categorical_split_isolates_signal_category() {
        // category 2 of 4 carries all events
        let mut rng = SeedStream::from_master(21).child("cat", 0).rng();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..80 {
            let c = rng.gen_range(0..4usize);
            let y = u8::from(c == 2 && rng.gen::<f64>() < 0.9);
            rows.push(vec![c as f64]);
            labels.push(y);
        }
        let schema = ForestSchema {
            columns: vec![ColumnSchema {
                name: "site".into(),
                kind: ColumnKind::Categorical { arity: 4 },
            }],
        };
        let x = Matrix::from_rows(&rows);
        let m = train_forest(&x, &schema, &labels, 1.0, 20, &SeedStream::from_master(22)).unwrap();
        let p2 = predict_forest(&m, &[2.0]).unwrap();
        let p0 = predict_forest(&m, &[0.0]).unwrap();
        assert!(p2 > p0, "category 2 prob {p2} vs category 0 prob {p0}");
    }

    #[test]
    fn stratified_splits_preserve_proportion() {
        let mut labels = vec![0u8; 60];
        for l in labels.iter_mut().take(15) {
            *l = 1;
        }
        let plan = SubSamplingPlan { n_splits: 10 };
        let splits = stratified_splits(&labels, &plan, &SeedStream::from_master(31)).unwrap();
        assert_eq!(splits.len(), 10);
        for (train, test) in &splits {
            assert_eq!(train.len() + test.len(), 60);
            let tp = train.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!(tp, 10);
            assert_eq!(train.len(), 40);
        }
    }

    #[test]
    fn weight_table_shape_and_determinism() {
        let (x, y) = planted(70, 0.3, 41);
        let plan = SubSamplingPlan { n_splits: 3 };
        let weights = [0.5, 1.0, 2.0];
        let schema = numeric_schema(3);
        let a = tune_weight(&x, &schema, &y, &plan, &weights, 5, &SeedStream::from_master(42))
            .unwrap();
        let b = tune_weight(&x, &schema, &y, &plan, &weights, 5, &SeedStream::from_master(42))
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.table.len(), 3);
        for row in &a.table {
            assert_eq!(row.split_aucs.len(), 3);
        }
        assert!(weights.contains(&a.best_weight));
    }

    #[test]
    fn staging_group_follows_planted_n_stage_signal() {
        let mut rng = SeedStream::from_master(51).child("staging", 0).rng();
        let mut clinical = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..90 {
            let n_stage = rng.gen_range(0..4) as u8;
            let y = u8::from(n_stage >= 2 && rng.gen::<f64>() < 0.85);
            clinical.push(ClinicalVariables {
                age_years: rng.gen_range(40.0..80.0),
                hn_type: HnType::Oropharynx,
                t_stage: rng.gen_range(1..5) as u8,
                n_stage,
                tnm_stage: rng.gen_range(1..5) as u8,
            });
            labels.push(y);
        }
        let plan = SubSamplingPlan { n_splits: 4 };
        let (best, scores) =
            select_staging_group(&clinical, &labels, &plan, 8, &SeedStream::from_master(52))
                .unwrap();
        assert_eq!(scores.len(), 4);
        assert!(best == StagingGroup::N || best == StagingGroup::TAndN, "chose {best:?}");
    }

    #[test]
    fn permutation_importance_ranks_planted_feature_first() {
        let (x, y) = planted(100, 0.3, 61);
        let schema = numeric_schema(3);
        let m = train_forest(&x, &schema, &y, 1.0, 20, &SeedStream::from_master(62)).unwrap();
        let (xt, yt) = planted(80, 0.3, 63);
        let imp =
            permutation_importance(&m, &xt, &yt, 20, &SeedStream::from_master(64)).unwrap();
        assert_eq!(imp.len(), 3);
        assert!(imp[0] > imp[1] && imp[0] > imp[2], "importances {imp:?}");
        assert!(imp[1].abs() < 0.1 && imp[2].abs() < 0.1);
    }

    #[test]
    fn risk_thresholds_match_declared_rules() {
        let probs = [0.1, 0.5, 0.9];
        let two = stratify_risk(&probs, StratifyMode::TwoGroup).unwrap();
        assert_eq!(two, vec![RiskGroup::Low, RiskGroup::High, RiskGroup::High]);
        let three = stratify_risk(&probs, StratifyMode::ThreeGroup).unwrap();
        assert_eq!(three, vec![RiskGroup::Low, RiskGroup::Medium, RiskGroup::High]);
        let boundary = stratify_risk(&[1.0 / 3.0, 2.0 / 3.0], StratifyMode::ThreeGroup).unwrap();
        assert_eq!(boundary, vec![RiskGroup::Medium, RiskGroup::High]);
    }

    #[test]
    fn risk_groups_are_monotone_in_probability() {
        let mut rng = SeedStream::from_master(71).child("mono", 0).rng();
        for _ in 0..100 {
            let p: f64 = rng.gen();
            let q: f64 = (p + rng.gen::<f64>() * (1.0 - p)).min(1.0);
            let g = stratify_risk(&[p, q], StratifyMode::ThreeGroup).unwrap();
            assert!(g[1] >= g[0]);
        }
    }
}
