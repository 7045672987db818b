//! Cohort manifest ingestion and validation.
//!
//! The manifest is a CSV with one row per patient:
//! id,split,cohort,pet,ct,mask,age,hn_type,t_stage,n_stage,tnm_stage,
//! lr_event,lr_months,dm_event,dm_months,os_event,os_months
//!
//! Volume paths are resolved relative to the manifest location. Patients with
//! no event on any outcome and less than 24 months of follow-up are excluded.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use radiomics_core::forest::{ClinicalVariables, HnType};
use radiomics_core::survival::OutcomeVector;

use crate::config::Outcome;
use crate::error::{CliError, Result};

pub const MANIFEST_COLUMNS: [&str; 17] = [
    "id", "split", "cohort", "pet", "ct", "mask", "age", "hn_type", "t_stage", "n_stage",
    "tnm_stage", "lr_event", "lr_months", "dm_event", "dm_months", "os_event", "os_months",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct PatientRecord {
    pub id: String,
    pub split: Split,
    /// Carried through for reporting; not used by any model.
    #[allow(dead_code)]
    pub cohort: String,
    pub pet_path: PathBuf,
    pub ct_path: PathBuf,
    pub mask_path: PathBuf,
    pub clinical: ClinicalVariables,
    /// (event, months) per outcome in LR, DM, OS order.
    pub outcomes: [(u8, f64); 3],
}

impl PatientRecord {
    pub fn outcome(&self, which: Outcome) -> (u8, f64) {
        match which {
            Outcome::Lr => self.outcomes[0],
            Outcome::Dm => self.outcomes[1],
            Outcome::Os => self.outcomes[2],
        }
    }
}

#[derive(Debug)]
pub struct CohortManifest {
    pub patients: Vec<PatientRecord>,
    /// Ids removed by the follow-up exclusion rule.
    #[allow(dead_code)]
    pub excluded: Vec<String>,
}

impl CohortManifest {
    pub fn split(&self, split: Split) -> Vec<&PatientRecord> {
        self.patients.iter().filter(|p| p.split == split).collect()
    }

    pub fn outcome_vector(patients: &[&PatientRecord], which: Outcome) -> OutcomeVector {
        let events = patients.iter().map(|p| p.outcome(which).0).collect();
        let times = patients.iter().map(|p| p.outcome(which).1).collect();
        OutcomeVector::new(events, times).expect("validated at ingest")
    }
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<&'a str> {
    rec.get(idx)
        .ok_or_else(|| CliError::Validation(format!("manifest line {line}: missing {name}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str, line: u64) -> Result<T> {
    s.parse()
        .map_err(|_| CliError::Validation(format!("manifest line {line}: bad {name} {s:?}")))
}

pub fn load_manifest(path: &Path) -> Result<CohortManifest> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Validation(format!("manifest {}: {e}", path.display())))?;
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = MANIFEST_COLUMNS.to_vec();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(CliError::Validation(format!(
            "manifest header mismatch: expected {expected:?}, got {got:?}"
        )));
    }

    let mut patients = Vec::new();
    let mut excluded = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let id = field(&rec, 0, "id", line)?.to_string();
        if id.is_empty() {
            return Err(CliError::Validation(format!("manifest line {line}: empty id")));
        }
        if !seen.insert(id.clone()) {
            return Err(CliError::Validation(format!("manifest: duplicate id {id:?}")));
        }
        let split = match field(&rec, 1, "split", line)? {
            "train" => Split::Train,
            "test" => Split::Test,
            other => {
                return Err(CliError::Validation(format!(
                    "manifest line {line}: split must be train or test, got {other:?}"
                )))
            }
        };
        let cohort = field(&rec, 2, "cohort", line)?.to_string();
        let pet_path = base.join(field(&rec, 3, "pet", line)?);
        let ct_path = base.join(field(&rec, 4, "ct", line)?);
        let mask_path = base.join(field(&rec, 5, "mask", line)?);
        for (p, what) in [(&pet_path, "pet"), (&ct_path, "ct"), (&mask_path, "mask")] {
            if !p.is_file() {
                return Err(CliError::Validation(format!(
                    "manifest line {line}: {what} file {} not found",
                    p.display()
                )));
            }
        }
        let clinical = ClinicalVariables {
            age_years: parse_num(field(&rec, 6, "age", line)?, "age", line)?,
            hn_type: HnType::parse(field(&rec, 7, "hn_type", line)?)
                .map_err(|e| CliError::Validation(format!("manifest line {line}: {e}")))?,
            t_stage: parse_num(field(&rec, 8, "t_stage", line)?, "t_stage", line)?,
            n_stage: parse_num(field(&rec, 9, "n_stage", line)?, "n_stage", line)?,
            tnm_stage: parse_num(field(&rec, 10, "tnm_stage", line)?, "tnm_stage", line)?,
        };
        clinical
            .validate()
            .map_err(|e| CliError::Validation(format!("manifest line {line}: {e}")))?;

        let mut outcomes = [(0u8, 0.0f64); 3];
        for (k, name) in ["lr", "dm", "os"].iter().enumerate() {
            let ev: u8 = parse_num(field(&rec, 11 + 2 * k, name, line)?, name, line)?;
            if ev > 1 {
                return Err(CliError::Validation(format!(
                    "manifest line {line}: {name}_event must be 0 or 1"
                )));
            }
            let months: f64 =
                parse_num(field(&rec, 12 + 2 * k, name, line)?, name, line)?;
            if !(months >= 0.0) || !months.is_finite() {
                return Err(CliError::Validation(format!(
                    "manifest line {line}: {name}_months must be non-negative"
                )));
            }
            outcomes[k] = (ev, months);
        }

        // follow-up exclusion: no event anywhere and under 24 months observed
        let any_event = outcomes.iter().any(|&(e, _)| e == 1);
        let follow_up = outcomes.iter().map(|&(_, m)| m).fold(0.0f64, f64::max);
        if !any_event && follow_up < 24.0 {
            excluded.push(id);
            continue;
        }

        patients.push(PatientRecord {
            id,
            split,
            cohort,
            pet_path,
            ct_path,
            mask_path,
            clinical,
            outcomes,
        });
    }
    if patients.is_empty() {
        return Err(CliError::Validation("manifest: no usable patients after exclusions".into()));
    }
    Ok(CohortManifest { patients, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn touch(dir: &Path, name: &str) -> String {
        std::fs::File::create(dir.join(name)).unwrap();
        name.to_string()
    }

    fn row(id: &str, split: &str, dm_event: u8, dm_months: f64) -> String {
        format!(
            "{id},{split},c1,{id}_pet.rvf,{id}_ct.rvf,{id}_mask.rvf,61.5,oropharynx,2,1,3,0,40,{dm_event},{dm_months},0,40\n"
        )
    }

    fn write_manifest(dir: &Path, rows: &[String]) -> PathBuf {
        let path = dir.join("manifest.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "{}", MANIFEST_COLUMNS.join(",")).unwrap();
        for r in rows {
            f.write_all(r.as_bytes()).unwrap();
        }
        path
    }

    #[test]
    fn loads_and_applies_exclusion_rule() {
        let dir = tempfile::tempdir().unwrap();
        for id in ["p1", "p2", "p3"] {
            touch(dir.path(), &format!("{id}_pet.rvf"));
            touch(dir.path(), &format!("{id}_ct.rvf"));
            touch(dir.path(), &format!("{id}_mask.rvf"));
        }
        // p3: no events and only 10 months of follow-up everywhere
        let p3 = "p3,test,c1,p3_pet.rvf,p3_ct.rvf,p3_mask.rvf,70,larynx,1,0,1,0,10,0,10,0,10\n";
        let rows =
            vec![row("p1", "train", 1, 12.0), row("p2", "test", 0, 40.0), p3.to_string()];
        let path = write_manifest(dir.path(), &rows);
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.patients.len(), 2);
        assert_eq!(m.excluded, vec!["p3".to_string()]);
        assert_eq!(m.split(Split::Train).len(), 1);
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "p1_pet.rvf");
        touch(dir.path(), "p1_ct.rvf");
        touch(dir.path(), "p1_mask.rvf");
        let rows = vec![row("p1", "train", 1, 12.0), row("p1", "test", 0, 40.0)];
        let path = write_manifest(dir.path(), &rows);
        assert!(matches!(load_manifest(&path), Err(CliError::Validation(_))));
    }

    #[test]
    fn unknown_site_vocabulary_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "p1_pet.rvf");
        touch(dir.path(), "p1_ct.rvf");
        touch(dir.path(), "p1_mask.rvf");
        let bad =
            "p1,train,c1,p1_pet.rvf,p1_ct.rvf,p1_mask.rvf,61.5,sinus,2,1,3,0,40,1,12,0,40\n";
        let path = write_manifest(dir.path(), &[bad.to_string()]);
        assert!(matches!(load_manifest(&path), Err(CliError::Validation(_))));
    }

    #[test]
    fn missing_volume_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "p1_pet.rvf");
        touch(dir.path(), "p1_ct.rvf");
        let path = write_manifest(dir.path(), &[row("p1", "train", 1, 12.0)]);
        assert!(matches!(load_manifest(&path), Err(CliError::Validation(_))));
    }
}
