//! Optional JSON config file. Every key mirrors a command-line flag (with
//! `-` spelled `_`); a flag given on the command line wins over the file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub out: Option<PathBuf>,
    pub simulation_set: Option<bool>,
    pub strict: Option<bool>,
    pub no_reductions: Option<bool>,

    pub profile: Option<PathBuf>,
    pub rule: Option<String>,
    pub model: Option<PathBuf>,
    pub trace: Option<PathBuf>,

    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub t_initial: Option<f64>,
    pub cooling: Option<f64>,

    pub x_plurality: Option<f64>,
    pub x_kemeny: Option<f64>,
    pub x_pav: Option<f64>,
    pub x_clustered: Option<f64>,

    pub x_max: Option<usize>,
    pub off_weight: Option<f64>,
    pub cluster_mode: Option<String>,
    pub budget: Option<u64>,

    pub agents: Option<Vec<usize>>,
    pub ranges: Option<Vec<String>>,
    pub rules: Option<Vec<String>>,
    pub songs: Option<usize>,
    pub synthetic: Option<usize>,
    pub scale: Option<f64>,
    pub timing: Option<bool>,

    pub top: Option<usize>,
    pub chords: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

/// Flag value, else file value, else `default`.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

/// Flag value, else file value.
pub fn pick_opt<T: Clone>(flag: Option<T>, file: &Option<T>) -> Option<T> {
    flag.or_else(|| file.clone())
}

/// A boolean switch is on if either the flag or the file turns it on.
pub fn pick_switch(flag: bool, file: &Option<bool>) -> bool {
    flag || file.unwrap_or(false)
}

/// Non-empty list from the flag (repeatable, items split on `sep`), else
/// the file, else `default`.
pub fn pick_list(flag: &[String], sep: char, file: &Option<Vec<String>>, default: &[&str]) -> Vec<String> {
    let from_flag: Vec<String> = flag
        .iter()
        .flat_map(|s| s.split(sep))
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if !from_flag.is_empty() {
        from_flag
    } else if let Some(list) = file {
        list.clone()
    } else {
        default.iter().map(|s| s.to_string()).collect()
    }
}
