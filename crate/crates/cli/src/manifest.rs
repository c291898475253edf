//! Instance manifests tying together the files written by `synth`.

use std::fs;
use std::path::{Path, PathBuf};

use hsgd_core::io::{read_mask, read_signal};
use hsgd_core::synth::SpectralModel;
use hsgd_core::{HankelGeometry, ProblemInstance, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub truth: String,
    pub observed: String,
    pub mask: String,
    pub outliers: String,
}

/// File names are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    pub rank: usize,
    pub samples: usize,
    pub alpha: f64,
    pub outlier_scale: f64,
    pub separation_bins: f64,
    pub magnitudes: (f64, f64),
    pub seed: u64,
    pub frequencies: Vec<f64>,
    /// `[re, im]` pairs.
    pub amplitudes: Vec<[f64; 2]>,
    pub files: ManifestFiles,
}

pub struct LoadedManifest {
    pub manifest: Manifest,
    pub dir: PathBuf,
}

impl LoadedManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { manifest, dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Rebuilds the instance in the reweighted domain from the referenced files.
    pub fn instance(&self) -> Result<ProblemInstance, CliError> {
        let m = &self.manifest;
        let geom = HankelGeometry::new(m.n)?;
        let truth = read_signal(&self.path(&m.files.truth), Some(m.n))?;
        let observed = read_signal(&self.path(&m.files.observed), Some(m.n))?;
        let outliers = read_signal(&self.path(&m.files.outliers), Some(m.n))?;
        let mask = read_mask(&self.path(&m.files.mask), m.n)?;
        let zero = C64::new(0.0, 0.0);
        let f: Vec<C64> = (0..m.n)
            .map(|i| {
                if mask.contains(i) {
                    observed.values[i]
                } else {
                    zero
                }
            })
            .collect();
        let s: Vec<C64> = outliers
            .values
            .iter()
            .map(|v| if v.is_finite() { *v } else { zero })
            .collect();
        Ok(ProblemInstance {
            z_true: geom.reweight(&truth.values),
            f_obs: geom.reweight(&f),
            mask,
            s_true: geom.reweight(&s),
            model: SpectralModel {
                frequencies: m.frequencies.clone(),
                amplitudes: m.amplitudes.iter().map(|a| C64::new(a[0], a[1])).collect(),
                n: m.n,
            },
            seed: m.seed,
        })
    }
}
