//! Synthetic cohort generation: paired PET/CT volumes with a planted
//! outcome-correlated texture effect, clinical variables and a ground-truth
//! sidecar.

use std::path::Path;

use rand::Rng;
use serde::Serialize;

use radiomics_core::rng::SeedStream;
use radiomics_core::volume::{save_mask, save_volume, ImageVolume, Modality, RoiMask};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::MANIFEST_COLUMNS;

#[derive(Debug, Serialize)]
pub struct SynthSummary {
    pub n_patients: usize,
    pub n_events: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub planted_outcome: String,
    pub effect_size: f64,
    /// Feature columns expected to carry the planted signal.
    pub planted_columns: Vec<String>,
}

struct Patient {
    id: String,
    event: u8,
    split: &'static str,
}

/// Generates the cohort under `out`: volumes/, manifest.csv and truth.json.
pub fn synthesize(cfg: &RunConfig, seed: u64, out: &Path) -> Result<SynthSummary> {
    if cfg.synth_patients < 6 {
        return Err(CliError::Validation("synthesize: need at least 6 patients".into()));
    }
    let n = cfg.synth_patients;
    let effect = cfg.synth_effect_size;
    let stream = SeedStream::from_master(seed);
    let vol_dir = out.join("volumes");
    std::fs::create_dir_all(&vol_dir)?;

    // event labels, then a stratified train/test assignment
    let mut labels = Vec::with_capacity(n);
    {
        let mut rng = stream.child("labels", 0).rng();
        for _ in 0..n {
            labels.push(u8::from(rng.gen::<f64>() < cfg.synth_event_rate));
        }
        // degenerate draws would make every downstream fit impossible
        if !labels.contains(&1) {
            labels[0] = 1;
        }
        if !labels.contains(&0) {
            labels[0] = 0;
        }
    }
    let mut patients: Vec<Patient> = Vec::with_capacity(n);
    {
        let mut rng = stream.child("split", 0).rng();
        let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
        let mut neg: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
        use rand::seq::SliceRandom;
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let mut split_of = vec!["test"; n];
        let keep = |v: &[usize], f: f64| ((v.len() as f64 * f).round() as usize).clamp(1, v.len().saturating_sub(1).max(1));
        for &i in &pos[..keep(&pos, cfg.synth_train_fraction)] {
            split_of[i] = "train";
        }
        for &i in &neg[..keep(&neg, cfg.synth_train_fraction)] {
            split_of[i] = "train";
        }
        for i in 0..n {
            patients.push(Patient {
                id: format!("p{:03}", i + 1),
                event: labels[i],
                split: split_of[i],
            });
        }
    }

    let dims = cfg.synth_dims;
    let spacing = [2.0, 2.0, 3.0];
    let mut manifest_rows = Vec::with_capacity(n);
    for (i, p) in patients.iter().enumerate() {
        let pstream = stream.child("patient", i as u64);
        let mut rng = pstream.rng();
        let y = p.event as f64;

        // ellipsoid tumour mask in the grid center
        let c = [dims[0] as f64 / 2.0, dims[1] as f64 / 2.0, dims[2] as f64 / 2.0];
        let r = [c[0] * 0.7, c[1] * 0.7, c[2] * 0.7];
        let mut mask = vec![0u8; dims[0] * dims[1] * dims[2]];
        for z in 0..dims[2] {
            for yv in 0..dims[1] {
                for x in 0..dims[0] {
                    let d = ((x as f64 + 0.5 - c[0]) / r[0]).powi(2)
                        + ((yv as f64 + 0.5 - c[1]) / r[1]).powi(2)
                        + ((z as f64 + 0.5 - c[2]) / r[2]).powi(2);
                    if d <= 1.0 {
                        mask[x + dims[0] * (yv + dims[1] * z)] = 1;
                    }
                }
            }
        }

        // planted effect: events have higher uptake and rougher texture
        let pet_mean = 4.0 + 2.0 * effect * y;
        let pet_amp = 1.0 + 1.5 * effect * y;
        let ct_mean = 40.0 + 6.0 * effect * y;
        let mut pet = Vec::with_capacity(mask.len());
        let mut ct = Vec::with_capacity(mask.len());
        for &m in &mask {
            if m == 1 {
                pet.push((pet_mean + pet_amp * rng.gen_range(-1.0..1.0)) as f32);
                ct.push((ct_mean + 8.0 * rng.gen_range(-1.0..1.0)) as f32);
            } else {
                pet.push((1.0 + 0.1 * rng.gen_range(-1.0..1.0)) as f32);
                ct.push((10.0 + 2.0 * rng.gen_range(-1.0..1.0)) as f32);
            }
        }
        let pet_vol = ImageVolume::new(dims, spacing, pet, Modality::Pet)?;
        let ct_vol = ImageVolume::new(dims, spacing, ct, Modality::Ct)?;
        let roi = RoiMask::new(dims, spacing, mask)?;
        save_volume(&vol_dir.join(format!("{}_pet.rvf", p.id)), &pet_vol)?;
        save_volume(&vol_dir.join(format!("{}_ct.rvf", p.id)), &ct_vol)?;
        save_mask(&vol_dir.join(format!("{}_mask.rvf", p.id)), &roi)?;

        // clinical: events skew toward higher nodal stage
        let age = rng.gen_range(45.0..80.0);
        let hn_type = ["oropharynx", "hypopharynx", "nasopharynx", "larynx"]
            [rng.gen_range(0..4usize)];
        let t_stage = rng.gen_range(1..5u8);
        let n_base = rng.gen_range(0..3u8);
        let n_stage = if p.event == 1 && rng.gen::<f64>() < 0.5 * effect.min(1.0) {
            (n_base + 1).min(3)
        } else {
            n_base
        };
        let tnm_stage = t_stage.max(n_stage + 1).min(4);

        // planted outcome gets the true label; the others are background noise
        let mut events = [0u8; 3];
        let mut months = [0.0f64; 3];
        let planted_slot = match cfg.outcome {
            crate::config::Outcome::Lr => 0,
            crate::config::Outcome::Dm => 1,
            crate::config::Outcome::Os => 2,
        };
        for k in 0..3 {
            let e = if k == planted_slot {
                p.event
            } else {
                u8::from(rng.gen::<f64>() < cfg.synth_event_rate)
            };
            events[k] = e;
            months[k] =
                if e == 1 { rng.gen_range(4.0..20.0) } else { rng.gen_range(25.0..60.0) };
        }

        manifest_rows.push(format!(
            "{id},{split},synth,volumes/{id}_pet.rvf,volumes/{id}_ct.rvf,volumes/{id}_mask.rvf,{age:.1},{hn_type},{t},{nn},{tnm},{e0},{m0:.2},{e1},{m1:.2},{e2},{m2:.2}",
            id = p.id,
            split = p.split,
            t = t_stage,
            nn = n_stage,
            tnm = tnm_stage,
            e0 = events[0],
            m0 = months[0],
            e1 = events[1],
            m1 = months[1],
            e2 = events[2],
            m2 = months[2],
        ));
    }

    let manifest = format!("{}\n{}\n", MANIFEST_COLUMNS.join(","), manifest_rows.join("\n"));
    std::fs::write(out.join("manifest.csv"), manifest)?;

    let summary = SynthSummary {
        n_patients: n,
        n_events: patients.iter().filter(|p| p.event == 1).count(),
        n_train: patients.iter().filter(|p| p.split == "train").count(),
        n_test: patients.iter().filter(|p| p.split == "test").count(),
        planted_outcome: cfg.outcome.tag().to_string(),
        effect_size: effect,
        planted_columns: vec![
            "PET_INTENSITY_mean".into(),
            "PET_INTENSITY_variance".into(),
            "CT_INTENSITY_mean".into(),
        ],
    };
    std::fs::write(
        out.join("truth.json"),
        serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::Runtime(format!("truth.json: {e}")))?,
    )?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::load_manifest;

    #[test]
    fn event_count_tracks_rate_and_files_exist() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            synth_patients: 40,
            synth_event_rate: 0.25,
            ..RunConfig::default()
        };
        let s = synthesize(&cfg, 7, dir.path()).unwrap();
        assert_eq!(s.n_patients, 40);
        assert!(s.n_events >= 3 && s.n_events <= 20, "events {}", s.n_events);
        let m = load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(m.patients.len() + m.excluded.len(), 40);
        assert!(m.excluded.is_empty(), "generator avoids the exclusion rule");
        assert_eq!(s.n_train + s.n_test, 40);
    }

    #[test]
    fn generation_is_deterministic() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let cfg = RunConfig { synth_patients: 8, ..RunConfig::default() };
        synthesize(&cfg, 11, d1.path()).unwrap();
        synthesize(&cfg, 11, d2.path()).unwrap();
        let a = std::fs::read(d1.path().join("volumes/p001_pet.rvf")).unwrap();
        let b = std::fs::read(d2.path().join("volumes/p001_pet.rvf")).unwrap();
        assert_eq!(a, b);
        let ma = std::fs::read_to_string(d1.path().join("manifest.csv")).unwrap();
        let mb = std::fs::read_to_string(d2.path().join("manifest.csv")).unwrap();
        assert_eq!(ma, mb);
    }
}
