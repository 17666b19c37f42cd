use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dagprobit::{Error, Result};

/// Contents of the `--config` file. Every key is optional; command-line
/// flags win over file values, which win over defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub simulate: SimulateFile,
    #[serde(default)]
    pub fit: FitFile,
    #[serde(default)]
    pub effects: EffectsFile,
    #[serde(default)]
    pub evaluate: EvaluateFile,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub q: Option<usize>,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub xi: Option<f64>,
    pub coef_min: Option<f64>,
    pub coef_max: Option<f64>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFile {
    pub data1: Option<PathBuf>,
    pub data2: Option<PathBuf>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub xi: Option<f64>,
    pub a: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub sigma0_sq: Option<f64>,
    pub edge_threshold: Option<f64>,
    pub zero_tol: Option<f64>,
    pub x_tilde: Option<f64>,
    pub targets: Option<Vec<usize>>,
    pub center: Option<bool>,
    pub exact_proposal_ratio: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectsFile {
    pub trace: Option<PathBuf>,
    pub nodes: Option<Vec<usize>>,
    pub x_tilde: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateFile {
    pub truth_dir: Option<PathBuf>,
    pub fit_dir: Option<PathBuf>,
    pub grid: Option<GridFile>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub q: Option<Vec<usize>>,
    pub xi: Option<Vec<f64>>,
    pub sizes: Option<Vec<[usize; 2]>>,
    pub replications: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub x_tilde: Option<f64>,
    pub include_skipped: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulateSettings {
    pub q: usize,
    pub n1: usize,
    pub n2: usize,
    pub xi: f64,
    pub coef_range: (f64, f64),
    pub d_range: (f64, f64),
    pub theta_range: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct FitSettings {
    /// SHA-256 of each input file, so the hash follows the data rather than
    /// where it lives.
    pub data_sha256: [String; 2],
    #[serde(skip)]
    pub data: [PathBuf; 2],
    pub iterations: usize,
    pub burn_in: usize,
    pub xi: f64,
    pub a: Option<f64>,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub sigma0_sq: f64,
    pub edge_threshold: f64,
    pub zero_tol: f64,
    pub x_tilde: f64,
    pub targets: Option<Vec<usize>>,
    pub center: bool,
    pub exact_proposal_ratio: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EffectsSettings {
    pub trace_sha256: String,
    #[serde(skip)]
    pub trace: PathBuf,
    pub nodes: Option<Vec<usize>>,
    pub x_tilde: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridSettings {
    pub q: Vec<usize>,
    pub xi: Vec<f64>,
    pub sizes: Vec<[usize; 2]>,
    pub replications: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub x_tilde: f64,
    pub include_skipped: bool,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            q: vec![10],
            xi: vec![0.1],
            sizes: vec![[50, 50], [200, 200]],
            replications: 5,
            iterations: 5000,
            burn_in: 1000,
            x_tilde: 1.0,
            include_skipped: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum EvaluateSettings {
    Pair {
        truth_sha256: Vec<String>,
        trace_sha256: String,
        #[serde(skip)]
        truth_dir: PathBuf,
        #[serde(skip)]
        fit_dir: PathBuf,
    },
    Grid(GridSettings),
}

/// Hex SHA-256 of the TOML rendering of a resolved settings value, cut to
/// 16 characters.
pub fn config_hash<S: Serialize>(command: &str, settings: &S) -> String {
    #[derive(Serialize)]
    struct Tagged<'a, S> {
        command: &'a str,
        settings: &'a S,
    }
    let text = toml::to_string(&Tagged { command, settings }).expect("settings serialize");
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(digest)[..16].to_string()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
