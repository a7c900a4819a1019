//! The optional `--config` TOML document.
//!
//! Every key is optional. A value given on the command line wins over the
//! file, and the file wins over the library default.

use std::path::{Path, PathBuf};

use rdsc_core::augment::AugmentConfig;
use rdsc_core::clahe::ClaheParams;
use rdsc_core::resample::{InterpMode, ResolutionStrategy};
use rdsc_core::sliding::{PredictorSpec, WindowSpec};
use rdsc_core::Error;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub resample: ResampleSection,
    pub study: StudySection,
    pub metrics: MetricsSection,
    pub mclahe: MclaheSection,
    pub augment: AugmentSection,
    pub predict: PredictSection,
    pub phantom: PhantomSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResampleSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub spacing: Option<ResolutionStrategy>,
    pub mode: Option<InterpMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub data: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub strategies: Option<Vec<ResolutionStrategy>>,
    pub mode: Option<InterpMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub tversky: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MclaheSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub params: Option<ClaheParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub image: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub params: Option<AugmentConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub predictor: Option<PredictorSpec>,
    pub window: Option<WindowSpec>,
    pub binarize: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    pub out_dir: Option<PathBuf>,
    pub cases: Option<usize>,
    pub dims: Option<[usize; 3]>,
    pub uniform_spacing: Option<bool>,
    pub images: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Error> {
        if let Some(p) = &self.mclahe.params {
            p.validate()?;
        }
        if let Some(a) = &self.augment.params {
            a.validate()?;
        }
        if let Some(w) = &self.predict.window {
            w.validate()?;
        }
        if let Some(m) = self.study.mode {
            m.ensure_mask_mode()?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }
}
