use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use landau_core::sim::{recurrence_time, TRUST_FRACTION};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::RunError;

/// Env var that overrides the root against which relative output paths resolve.
pub const OUT_ENV: &str = "LANDAU_LAB_OUT";

/// Output directory of a config: `output` (or `runs/<experiment>`) under `root`.
pub fn resolve_output(cfg: &ExperimentConfig, root: &Path) -> PathBuf {
    let rel = cfg.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.as_str()));
    if rel.is_absolute() {
        rel
    } else {
        root.join(rel)
    }
}

/// Root for relative output paths: the env override or the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// Run directory that remembers which artifacts it holds and collects the
/// summary lines destined for `run.meta`.
pub struct RunDir {
    dir: PathBuf,
    written: Vec<String>,
    summary: Vec<(String, String)>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), summary: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        fs::write(self.dir.join(name), contents)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn summary(&self) -> &[(String, String)] {
        &self.summary
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.to_toml().as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                flatten(&format!("{prefix}.{k}"), v, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf.to_string())),
    }
}

/// The resolved config as flat `config.section.key` pairs.
pub fn config_pairs(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let value = toml::Value::try_from(cfg).expect("configuration is always serializable");
    let mut out = Vec::new();
    flatten("config", &value, &mut out);
    out
}

/// Writes `run.meta` as flat `key = value` lines: outcome, recurrence data,
/// the artifact list, the run summary and the full resolved config.
pub fn write_meta(run: &RunDir, cfg: &ExperimentConfig, result: &Result<(), RunError>) -> Result<(), RunError> {
    let mut s = String::from("# landau-lab run metadata\n");
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("version", &env!("CARGO_PKG_VERSION"));
    kv("experiment", &cfg.experiment);
    match result {
        Ok(()) => {
            kv("status", &"ok");
            kv("exit_code", &0);
            kv("partial", &false);
        }
        Err(e) => {
            kv("status", &e.class());
            kv("exit_code", &e.exit_code());
            // a failed certification still completes its report
            kv("partial", &!matches!(e, RunError::Certification(_)));
            kv("error", &e.to_string().replace('\n', " "));
        }
    }
    kv("config_sha256", &config_hash(cfg));
    let (nv, vmax) = (cfg.grid.nv, cfg.grid.vmax);
    if let Ok(tr) = recurrence_time(nv, vmax, 1) {
        kv("recurrence_time", &tr);
        kv("trusted_until", &(TRUST_FRACTION * tr));
    }
    if let Ok(tr) = recurrence_time(nv, vmax, cfg.perturbation.k) {
        kv("recurrence_time_perturbed_mode", &tr);
    }
    kv("artifacts", &run.written().join(","));
    for (k, v) in run.summary() {
        kv(&format!("result.{k}"), v);
    }
    for (k, v) in config_pairs(cfg) {
        kv(&k, &v);
    }
    fs::write(run.path().join("run.meta"), s)?;
    Ok(())
}
