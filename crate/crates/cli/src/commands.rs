//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use radiomics_core::extract::{extract_all, ExtractionConfig};
use radiomics_core::forest::{
    clinical_schema, predict_forest, select_staging_group, stratify_risk, train_forest,
    tune_weight, weight_grid, ClinicalVariables, ColumnKind, ColumnSchema, ForestModel,
    ForestSchema, RiskGroup, StratifyMode, SubSamplingPlan,
};
use radiomics_core::linalg::Matrix;
use radiomics_core::rng::SeedStream;
use radiomics_core::selection::{
    choose_order, finalize_model, reduce_feature_set, stepwise_select, EnsembleLogisticModel,
    FeatureMatrix,
};
use radiomics_core::stats::{bh_fdr, delong_compare, roc_summary, spearman};
use radiomics_core::survival::{concordance_index, kaplan_meier, logrank, OutcomeVector};
use radiomics_core::volume::{load_mask, load_volume, Modality};

use crate::config::{Outcome, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{load_manifest, CohortManifest, PatientRecord, Split};
use crate::table::FeatureTable;

pub const CLINICAL_COLUMNS: [&str; 5] =
    ["CLIN_age", "CLIN_hn_type", "CLIN_t_stage", "CLIN_n_stage", "CLIN_tnm_stage"];

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

// ---------------------------------------------------------------------------
// extract

#[derive(Debug, Serialize, Deserialize)]
struct CachedExtraction {
    hash: String,
    columns: Vec<String>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ExtractSummary {
    pub n_extracted: usize,
    pub n_cached: usize,
    pub n_failed: usize,
}

fn content_hash(p: &PatientRecord, grid_tag: &str) -> Result<String> {
    let mut h = Sha256::new();
    for path in [&p.pet_path, &p.ct_path, &p.mask_path] {
        h.update(std::fs::read(path)?);
    }
    h.update(grid_tag.as_bytes());
    Ok(format!("{:x}", h.finalize()))
}

/// Extracts the feature table for every manifest patient. Results are cached
/// by content hash so reruns skip unchanged patients; per-patient failures are
/// logged and the run continues.
pub fn cmd_extract(manifest_path: &Path, cfg: &RunConfig, out: &Path) -> Result<ExtractSummary> {
    let manifest = load_manifest(manifest_path)?;
    let grid = cfg.grid();
    let grid_tag = format!("{grid:?}");
    let ecfg = ExtractionConfig::default();
    let cache_dir = out.join("cache");
    std::fs::create_dir_all(&cache_dir)?;

    let mut columns: Option<Vec<String>> = None;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut log = vec!["id,status,detail".to_string()];
    let mut summary = ExtractSummary { n_extracted: 0, n_cached: 0, n_failed: 0 };

    for p in &manifest.patients {
        let hash = content_hash(p, &grid_tag)?;
        let cache_path = cache_dir.join(format!("{}.json", p.id));
        let cached: Option<CachedExtraction> = std::fs::read_to_string(&cache_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .filter(|c: &CachedExtraction| c.hash == hash);

        let (cols, mut values) = if let Some(c) = cached {
            summary.n_cached += 1;
            log.push(format!("{},cached,", p.id));
            (c.columns, c.values)
        } else {
            let extracted = load_volume(&p.pet_path, Modality::Pet)
                .and_then(|pet| Ok((pet, load_volume(&p.ct_path, Modality::Ct)?)))
                .and_then(|(pet, ct)| Ok((pet, ct, load_mask(&p.mask_path)?)))
                .and_then(|(pet, ct, mask)| extract_all(&pet, &ct, &mask, &grid, &ecfg));
            match extracted {
                Ok(features) => {
                    let cols: Vec<String> = features.iter().map(|f| f.name.clone()).collect();
                    let values: Vec<f64> = features.iter().map(|f| f.value).collect();
                    write_json(
                        &cache_path,
                        &CachedExtraction { hash, columns: cols.clone(), values: values.clone() },
                    )?;
                    summary.n_extracted += 1;
                    log.push(format!("{},extracted,", p.id));
                    (cols, values)
                }
                Err(e) => {
                    summary.n_failed += 1;
                    log.push(format!("{},failed,{}", p.id, e.to_string().replace(',', ";")));
                    continue;
                }
            }
        };

        match &columns {
            None => {
                let mut all = cols.clone();
                all.extend(CLINICAL_COLUMNS.iter().map(|s| s.to_string()));
                columns = Some(all);
            }
            Some(existing) => {
                if existing[..cols.len()] != cols[..] {
                    return Err(CliError::Runtime(format!(
                        "extract: column layout changed at patient {}",
                        p.id
                    )));
                }
            }
        }
        let c = &p.clinical;
        values.extend([
            c.age_years,
            c.hn_type.code() as f64,
            c.t_stage as f64,
            c.n_stage as f64,
            c.tnm_stage as f64,
        ]);
        ids.push(p.id.clone());
        rows.push(values);
    }

    std::fs::write(out.join("extract_log.csv"), log.join("\n") + "\n")?;
    let columns = columns
        .ok_or_else(|| CliError::Runtime("extract: every patient failed".into()))?;
    let table = FeatureTable { ids, columns, values: Matrix::from_rows(&rows) };
    table.save(&out.join("features.csv"))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// univariate

#[derive(Debug, Serialize)]
pub struct UnivariateSummary {
    pub n_rows: usize,
    /// outcome tag -> modality prefix -> fraction of BH-significant features.
    pub significant_fractions: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Per feature and outcome: Spearman correlation with the event label, its
/// p-value, and Benjamini-Hochberg significance at the configured rate.
pub fn cmd_univariate(
    features_path: &Path,
    manifest_path: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<UnivariateSummary> {
    let manifest = load_manifest(manifest_path)?;
    let table = FeatureTable::load(features_path)?;
    let patients: Vec<&PatientRecord> = manifest
        .patients
        .iter()
        .filter(|p| table.ids.contains(&p.id))
        .collect();
    if patients.len() < 3 {
        return Err(CliError::Validation("univariate: fewer than 3 usable patients".into()));
    }
    let ids: Vec<&str> = patients.iter().map(|p| p.id.as_str()).collect();
    let sub = table.select_ids(&ids)?;

    let mut lines = vec!["feature,outcome,rs,p,significant".to_string()];
    let mut summary = UnivariateSummary { n_rows: 0, significant_fractions: BTreeMap::new() };
    for outcome in [Outcome::Lr, Outcome::Dm, Outcome::Os] {
        let labels: Vec<f64> = patients.iter().map(|p| p.outcome(outcome).0 as f64).collect();
        let mut stats: Vec<Option<(f64, f64)>> = Vec::with_capacity(sub.columns.len());
        for c in 0..sub.columns.len() {
            stats.push(spearman(&sub.values.column(c), &labels).ok());
        }
        let valid: Vec<usize> = (0..stats.len()).filter(|&i| stats[i].is_some()).collect();
        let pvals: Vec<f64> = valid.iter().map(|&i| stats[i].unwrap().1).collect();
        let flags = bh_fdr(&pvals, cfg.fdr_q);
        let mut significant = vec![false; stats.len()];
        for (k, &i) in valid.iter().enumerate() {
            significant[i] = flags[k];
        }
        for (c, name) in sub.columns.iter().enumerate() {
            match stats[c] {
                Some((rs, p)) => lines.push(format!(
                    "{name},{},{rs:?},{p:?},{}",
                    outcome.tag(),
                    significant[c]
                )),
                None => lines.push(format!("{name},{},NA,NA,false", outcome.tag())),
            }
            summary.n_rows += 1;
        }
        let mut fractions = BTreeMap::new();
        for prefix in ["PET_", "CT_", "CLIN_"] {
            let idx: Vec<usize> = (0..sub.columns.len())
                .filter(|&c| sub.columns[c].starts_with(prefix))
                .collect();
            if !idx.is_empty() {
                let hit = idx.iter().filter(|&&c| significant[c]).count();
                fractions
                    .insert(prefix.trim_end_matches('_').to_string(), hit as f64 / idx.len() as f64);
            }
        }
        summary.significant_fractions.insert(outcome.tag().to_string(), fractions);
    }
    std::fs::write(out.join("univariate.csv"), lines.join("\n") + "\n")?;
    write_json(&out.join("univariate_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// build

#[derive(Debug, Serialize, Deserialize)]
pub struct BuildSummary {
    pub outcome: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_events: usize,
    pub chosen_order: usize,
    pub chosen_features: Vec<String>,
    pub auc_by_order: Vec<(usize, f64, f64)>,
    pub staging_group: String,
    pub oversampling_weight: f64,
    pub n_trees_clinical: usize,
    pub n_trees_combined: usize,
}

fn forest_row(
    schema: &ForestSchema,
    feature_row: &[f64],
    feature_columns: &[String],
    clinical: &ClinicalVariables,
) -> Result<Vec<f64>> {
    schema
        .columns
        .iter()
        .map(|col| match col.name.as_str() {
            "age_years" => Ok(clinical.age_years),
            "hn_type" => Ok(clinical.hn_type.code() as f64),
            "t_stage" => Ok(clinical.t_stage as f64),
            "n_stage" => Ok(clinical.n_stage as f64),
            "tnm_stage" => Ok(clinical.tnm_stage as f64),
            name => feature_columns
                .iter()
                .position(|c| c == name)
                .map(|i| feature_row[i])
                .ok_or_else(|| {
                    CliError::Validation(format!("feature table: missing column {name:?}"))
                }),
        })
        .collect()
}

fn forest_matrix(
    schema: &ForestSchema,
    table: &FeatureTable,
    patients: &[&PatientRecord],
) -> Result<Matrix> {
    let mut rows = Vec::with_capacity(patients.len());
    for p in patients {
        let fr = table
            .row_for(&p.id)
            .ok_or_else(|| CliError::Validation(format!("feature table: missing id {:?}", p.id)))?;
        rows.push(forest_row(schema, fr, &table.columns, &p.clinical)?);
    }
    Ok(Matrix::from_rows(&rows))
}

/// Trains the three models on the training split only: the radiomic ensemble
/// logistic model, the clinical-only forest, and the combined forest.
pub fn cmd_build(
    features_path: &Path,
    manifest_path: &Path,
    cfg: &RunConfig,
    seed: u64,
    out: &Path,
) -> Result<BuildSummary> {
    let manifest = load_manifest(manifest_path)?;
    let table = FeatureTable::load(features_path)?;
    let train = manifest.split(Split::Train);
    if train.len() < 10 {
        return Err(CliError::Validation("build: fewer than 10 training patients".into()));
    }
    // the training slice must never contain a test-tagged patient
    if train.iter().any(|p| p.split == Split::Test) {
        return Err(CliError::Validation("build: test patient leaked into training".into()));
    }
    let ids: Vec<&str> = train.iter().map(|p| p.id.as_str()).collect();
    let sub = table.select_ids(&ids)?;
    let labels: Vec<u8> = train.iter().map(|p| p.outcome(cfg.outcome).0).collect();
    let n_events = labels.iter().filter(|&&l| l == 1).count();
    if n_events < 3 || n_events + 3 > labels.len() {
        return Err(CliError::Validation(format!(
            "build: need at least 3 events and 3 non-events, got {n_events}/{}",
            labels.len()
        )));
    }
    let stream = SeedStream::from_master(seed);

    // radiomic columns for the configured feature set
    let radiomic_idx: Vec<usize> = (0..sub.columns.len())
        .filter(|&c| cfg.feature_set.keeps(&sub.columns[c]))
        .collect();
    if radiomic_idx.is_empty() {
        return Err(CliError::Validation("build: no radiomic columns in the feature set".into()));
    }
    let radiomic = sub.select_columns(&radiomic_idx);
    let fm = FeatureMatrix::new(radiomic.columns.clone(), radiomic.values.clone())
        .map_err(CliError::from)?;

    let reduced = reduce_feature_set(&fm, &labels, &cfg.selection)?;
    let stepwise =
        stepwise_select(&reduced.indices, &fm.data, &labels, &cfg.selection, &stream.child("stepwise", 0))?;
    let chosen = choose_order(&stepwise).clone();
    let chosen_names: Vec<String> =
        chosen.features.iter().map(|&i| fm.names[i].clone()).collect();
    let xsel = fm.data.select_cols(&chosen.features);
    let radiomic_model = finalize_model(
        &chosen_names,
        &xsel,
        &labels,
        cfg.selection.n_bootstrap,
        &stream.child("finalize", 0),
    )?;
    std::fs::write(out.join("radiomic_model.json"), radiomic_model.to_json() + "\n")?;

    // clinical-only forest: staging-group selection then weight tuning
    let clinical: Vec<ClinicalVariables> = train.iter().map(|p| p.clinical).collect();
    let plan = SubSamplingPlan { n_splits: cfg.n_splits };
    let (group, _scores) = select_staging_group(
        &clinical,
        &labels,
        &plan,
        cfg.forest_bootstrap,
        &stream.child("staging", 0),
    )?;
    let clin_schema = clinical_schema(group);
    let clin_x = forest_matrix(&clin_schema, &table, &train)?;
    let clin_tuned = tune_weight(
        &clin_x,
        &clin_schema,
        &labels,
        &plan,
        &weight_grid(),
        cfg.forest_bootstrap,
        &stream.child("tune-clinical", 0),
    )?;
    let clinical_forest = train_forest(
        &clin_x,
        &clin_schema,
        &labels,
        clin_tuned.best_weight,
        cfg.forest_bootstrap,
        &stream.child("forest-clinical", 0),
    )?;
    std::fs::write(out.join("clinical_forest.json"), clinical_forest.to_json() + "\n")?;

    // combined forest: chosen radiomic features plus the clinical schema
    let mut combined_cols: Vec<ColumnSchema> = chosen_names
        .iter()
        .map(|n| ColumnSchema { name: n.clone(), kind: ColumnKind::Numeric })
        .collect();
    combined_cols.extend(clin_schema.columns.iter().cloned());
    let combined_schema = ForestSchema { columns: combined_cols };
    let comb_x = forest_matrix(&combined_schema, &table, &train)?;
    let comb_tuned = tune_weight(
        &comb_x,
        &combined_schema,
        &labels,
        &plan,
        &weight_grid(),
        cfg.forest_bootstrap,
        &stream.child("tune-combined", 0),
    )?;
    let combined_forest = train_forest(
        &comb_x,
        &combined_schema,
        &labels,
        comb_tuned.best_weight,
        cfg.forest_bootstrap,
        &stream.child("forest-combined", 0),
    )?;
    std::fs::write(out.join("combined_forest.json"), combined_forest.to_json() + "\n")?;

    let summary = BuildSummary {
        outcome: cfg.outcome.tag().to_string(),
        seed,
        n_train: train.len(),
        n_events,
        chosen_order: chosen.order,
        chosen_features: chosen_names,
        auc_by_order: stepwise.per_order.iter().map(|o| (o.order, o.auc, o.auc_se)).collect(),
        staging_group: format!("{group:?}"),
        oversampling_weight: comb_tuned.best_weight,
        n_trees_clinical: clinical_forest.n_trees,
        n_trees_combined: combined_forest.n_trees,
    };
    write_json(&out.join("build_summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model: String,
    pub auc: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub concordance_index: Option<f64>,
    pub logrank_p: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub outcome: String,
    pub n_test: usize,
    pub models: Vec<ModelMetrics>,
    pub delong_radiomic_vs_combined_p: Option<f64>,
}

fn score_metrics(
    name: &str,
    scores: &[f64],
    labels: &[u8],
    outcome: &OutcomeVector,
) -> ModelMetrics {
    let roc = roc_summary(scores, labels, 0.5).ok();
    let ci = concordance_index(scores, outcome).ok();
    // risk split at 0.5 for the two-group survival comparison
    let high: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= 0.5).collect();
    let low: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] < 0.5).collect();
    let logrank_p = if high.is_empty() || low.is_empty() {
        None
    } else {
        Some(logrank(&outcome.subset(&high), &outcome.subset(&low)).1)
    };
    ModelMetrics {
        model: name.to_string(),
        auc: roc.map(|r| r.auc),
        sensitivity: roc.map(|r| r.sensitivity),
        specificity: roc.map(|r| r.specificity),
        accuracy: roc.map(|r| r.accuracy),
        concordance_index: ci,
        logrank_p,
    }
}

fn load_models(models_dir: &Path) -> Result<(EnsembleLogisticModel, ForestModel, ForestModel)> {
    let read = |name: &str| -> Result<String> {
        std::fs::read_to_string(models_dir.join(name))
            .map_err(|e| CliError::Validation(format!("{name}: {e}")))
    };
    let radiomic = EnsembleLogisticModel::from_json(&read("radiomic_model.json")?)?;
    let clinical = ForestModel::from_json(&read("clinical_forest.json")?)?;
    let combined = ForestModel::from_json(&read("combined_forest.json")?)?;
    Ok((radiomic, clinical, combined))
}

fn model_scores(
    radiomic: &EnsembleLogisticModel,
    clinical: &ForestModel,
    combined: &ForestModel,
    table: &FeatureTable,
    patients: &[&PatientRecord],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut rad = Vec::with_capacity(patients.len());
    let mut clin = Vec::with_capacity(patients.len());
    let mut comb = Vec::with_capacity(patients.len());
    for p in patients {
        let fr = table
            .row_for(&p.id)
            .ok_or_else(|| CliError::Validation(format!("feature table: missing id {:?}", p.id)))?;
        let rad_row: Vec<f64> = radiomic
            .feature_names
            .iter()
            .map(|n| {
                table.columns.iter().position(|c| c == n).map(|i| fr[i]).ok_or_else(|| {
                    CliError::Validation(format!("feature table: missing column {n:?}"))
                })
            })
            .collect::<Result<_>>()?;
        rad.push(radiomic.score(&rad_row));
        let clin_row = forest_row(&clinical.schema, fr, &table.columns, &p.clinical)?;
        clin.push(predict_forest(clinical, &clin_row)?);
        let comb_row = forest_row(&combined.schema, fr, &table.columns, &p.clinical)?;
        comb.push(predict_forest(combined, &comb_row)?);
    }
    Ok((rad, clin, comb))
}

/// Evaluates the three persisted models on the test split.
pub fn cmd_evaluate(
    features_path: &Path,
    manifest_path: &Path,
    models_dir: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<EvaluationReport> {
    let manifest = load_manifest(manifest_path)?;
    let table = FeatureTable::load(features_path)?;
    let test = manifest.split(Split::Test);
    if test.is_empty() {
        return Err(CliError::Validation("evaluate: no test patients".into()));
    }
    let (radiomic, clinical, combined) = load_models(models_dir)?;
    let (rad, clin, comb) = model_scores(&radiomic, &clinical, &combined, &table, &test)?;
    let labels: Vec<u8> = test.iter().map(|p| p.outcome(cfg.outcome).0).collect();
    let outcome = CohortManifest::outcome_vector(&test, cfg.outcome);

    let models = vec![
        score_metrics("radiomic", &rad, &labels, &outcome),
        score_metrics("clinical", &clin, &labels, &outcome),
        score_metrics("combined", &comb, &labels, &outcome),
    ];
    let delong = delong_compare(&rad, &comb, &labels).ok().map(|d| d.p);
    let report = EvaluationReport {
        outcome: cfg.outcome.tag().to_string(),
        n_test: test.len(),
        models,
        delong_radiomic_vs_combined_p: delong,
    };
    write_json(&out.join("evaluation.json"), &report)?;

    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
    let mut lines =
        vec!["model,auc,sensitivity,specificity,accuracy,ci,logrank_p".to_string()];
    for m in &report.models {
        lines.push(format!(
            "{},{},{},{},{},{},{}",
            m.model,
            fmt(m.auc),
            fmt(m.sensitivity),
            fmt(m.specificity),
            fmt(m.accuracy),
            fmt(m.concordance_index),
            fmt(m.logrank_p)
        ));
    }
    std::fs::write(out.join("evaluation.csv"), lines.join("\n") + "\n")?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// stratify

#[derive(Debug, Serialize, Deserialize)]
pub struct StratifySummary {
    pub mode: String,
    pub group_sizes: BTreeMap<String, usize>,
    /// Adjacent-pair log-rank p-values, e.g. "high_vs_medium".
    pub adjacent_logrank_p: BTreeMap<String, Option<f64>>,
    pub empty_groups: Vec<String>,
}

fn group_name(g: RiskGroup) -> &'static str {
    match g {
        RiskGroup::Low => "low",
        RiskGroup::Medium => "medium",
        RiskGroup::High => "high",
    }
}

/// Applies the combined forest to the test split, assigns risk groups, and
/// writes per-group Kaplan-Meier curves plus adjacent-group log-rank tests.
pub fn cmd_stratify(
    features_path: &Path,
    manifest_path: &Path,
    models_dir: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<StratifySummary> {
    let manifest = load_manifest(manifest_path)?;
    let table = FeatureTable::load(features_path)?;
    let test = manifest.split(Split::Test);
    if test.is_empty() {
        return Err(CliError::Validation("stratify: no test patients".into()));
    }
    let (radiomic, clinical, combined) = load_models(models_dir)?;
    let (_, _, probs) = model_scores(&radiomic, &clinical, &combined, &table, &test)?;
    let mode = if cfg.three_group { StratifyMode::ThreeGroup } else { StratifyMode::TwoGroup };
    let groups = stratify_risk(&probs, mode)?;

    let mut lines = vec!["id,prob,group".to_string()];
    for ((p, &prob), &g) in test.iter().zip(&probs).zip(&groups) {
        lines.push(format!("{},{prob:?},{}", p.id, group_name(g)));
    }
    std::fs::write(out.join("risk_groups.csv"), lines.join("\n") + "\n")?;

    let outcome = CohortManifest::outcome_vector(&test, cfg.outcome);
    let order: &[RiskGroup] = if cfg.three_group {
        &[RiskGroup::Low, RiskGroup::Medium, RiskGroup::High]
    } else {
        &[RiskGroup::Low, RiskGroup::High]
    };
    let mut summary = StratifySummary {
        mode: if cfg.three_group { "three-group".into() } else { "two-group".into() },
        group_sizes: BTreeMap::new(),
        adjacent_logrank_p: BTreeMap::new(),
        empty_groups: Vec::new(),
    };
    let mut curves = Vec::new();
    for &g in order {
        let idx: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == g).collect();
        summary.group_sizes.insert(group_name(g).to_string(), idx.len());
        if idx.is_empty() {
            summary.empty_groups.push(group_name(g).to_string());
            continue;
        }
        let sub = outcome.subset(&idx);
        let km = kaplan_meier(&sub);
        let mut rows = vec!["time_months,survival,at_risk".to_string()];
        for ((t, s), n) in km.event_times.iter().zip(&km.survival_probs).zip(&km.at_risk_counts)
        {
            rows.push(format!("{t:?},{s:?},{n}"));
        }
        std::fs::write(out.join(format!("km_{}.csv", group_name(g))), rows.join("\n") + "\n")?;
        curves.push((group_name(g), km, idx.len()));
    }
    for pair in order.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let key = format!("{}_vs_{}", group_name(hi), group_name(lo));
        let lo_idx: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == lo).collect();
        let hi_idx: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == hi).collect();
        let p = if lo_idx.is_empty() || hi_idx.is_empty() {
            None
        } else {
            Some(logrank(&outcome.subset(&hi_idx), &outcome.subset(&lo_idx)).1)
        };
        summary.adjacent_logrank_p.insert(key, p);
    }
    std::fs::write(out.join("km.svg"), km_svg(&curves, &outcome))?;
    write_json(&out.join("stratify_summary.json"), &summary)?;
    Ok(summary)
}

/// Self-contained step-plot of the per-group survival curves.
fn km_svg(
    curves: &[(&'static str, radiomics_core::survival::KmCurve, usize)],
    outcome: &OutcomeVector,
) -> String {
    let (w, h, ml, mb) = (640.0, 420.0, 60.0, 50.0);
    let t_max = outcome.times_months.iter().fold(1.0f64, |m, &t| m.max(t)) * 1.05;
    let x = |t: f64| ml + (w - ml - 20.0) * t / t_max;
    let y = |s: f64| 20.0 + (h - mb - 20.0) * (1.0 - s);
    let colors = [("low", "#2166ac"), ("medium", "#762a83"), ("high", "#b2182b")];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ml}\" y1=\"20\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"13\">months</text>\n\
         <text x=\"12\" y=\"{}\" font-size=\"13\" transform=\"rotate(-90 12 {})\">survival</text>\n",
        h - mb,
        w - 20.0,
        h - mb,
        h - mb,
        w / 2.0 - 25.0,
        h - 14.0,
        h / 2.0,
        h / 2.0,
    );
    for (i, (name, km, n)) in curves.iter().enumerate() {
        let color = colors.iter().find(|(g, _)| g == name).map_or("#444444", |(_, c)| *c);
        let mut d = format!("M {} {}", x(0.0), y(1.0));
        let mut s_prev = 1.0;
        for (&t, &s) in km.event_times.iter().zip(&km.survival_probs) {
            d.push_str(&format!(" L {} {} L {} {}", x(t), y(s_prev), x(t), y(s)));
            s_prev = s;
        }
        d.push_str(&format!(" L {} {}", x(t_max), y(s_prev)));
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">{name} (n={n})</text>\n",
            w - 150.0,
            40.0 + 18.0 * i as f64,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
