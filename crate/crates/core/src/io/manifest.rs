use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridConfig;

use super::{read_json, Calibration};

/// Per-camera input: a precomputed feature tensor or a raw image that goes
/// through the stand-in encoder.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CameraSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
}

/// Everything a pipeline run reads. Relative paths in a manifest file are
/// resolved against the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub clouds: Vec<PathBuf>,
    #[serde(default)]
    pub cameras: BTreeMap<String, CameraSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_f: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: RunManifest = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in m
            .calibration
            .iter_mut()
            .chain(m.clouds.iter_mut())
            .chain(m.classes.iter_mut())
            .chain(m.out.iter_mut())
        {
            resolve(base, p);
        }
        for src in m.cameras.values_mut() {
            for p in src.features.iter_mut().chain(src.image.iter_mut()) {
                resolve(base, p);
            }
        }
        if let Some(g) = &m.grid {
            g.validate()
                .map_err(|e| Error::malformed(path, "grid", e.to_string()))?;
        }
        if m.d_f == Some(0) {
            return Err(Error::malformed(path, "d_f", "must be a positive integer"));
        }
        Ok(m)
    }

    pub fn calibration_path(&self) -> Result<&Path> {
        self.calibration.as_deref().ok_or_else(|| {
            Error::invalid("no calibration given (--calib or manifest `calibration`)")
        })
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::invalid("no output directory given (--out)"))
    }

    /// Checks that every referenced input exists and that the camera inputs
    /// name cameras of `calib`, and (when `need_inputs`) that every camera
    /// has exactly one input.
    pub fn check_inputs(&self, calib: &Calibration, need_inputs: bool) -> Result<()> {
        let missing = |p: &Path| -> Result<()> {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ))
            }
        };
        for p in &self.clouds {
            missing(p)?;
        }
        for (name, src) in &self.cameras {
            if calib.camera(name).is_none() {
                return Err(Error::invalid(format!(
                    "camera {name}: not present in the calibration"
                )));
            }
            match (&src.features, &src.image) {
                (Some(_), Some(_)) => {
                    return Err(Error::invalid(format!(
                        "camera {name}: give either features or an image, not both"
                    )));
                }
                (Some(p), None) | (None, Some(p)) => missing(p)?,
                (None, None) => {}
            }
        }
        if need_inputs {
            for cam in &calib.cameras {
                let has = self
                    .cameras
                    .get(&cam.name)
                    .is_some_and(|s| s.features.is_some() || s.image.is_some());
                if !has {
                    return Err(Error::invalid(format!(
                        "camera {}: no features or image given",
                        cam.name
                    )));
                }
            }
        }
        Ok(())
    }
}
