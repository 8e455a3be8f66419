//! Parameter sweeps: one template, one isolated run directory per point.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{from_table, ExperimentConfig};
use crate::error::RunError;
use crate::experiments::run_experiment;

/// Short names accepted by `--param`; anything else must be a dotted path.
const ALIASES: [(&str, &str); 10] = [
    ("k", "perturbation.k"),
    ("amplitude", "perturbation.amplitude"),
    ("strength", "interaction.strength"),
    ("screening", "interaction.screening"),
    ("nx", "grid.nx"),
    ("nv", "grid.nv"),
    ("vmax", "grid.vmax"),
    ("dt", "time.dt"),
    ("t_end", "time.t_end"),
    ("tau", "echo.tau"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParam {
    pub path: String,
    pub values: Vec<toml::Value>,
}

fn scalar(s: &str) -> toml::Value {
    if let Ok(i) = s.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = s.parse::<f64>() {
        toml::Value::Float(f)
    } else if let Ok(b) = s.parse::<bool>() {
        toml::Value::Boolean(b)
    } else {
        toml::Value::String(s.to_string())
    }
}

/// Parses `name=a..b` (inclusive integer range) or `name=v1,v2,...`.
pub fn parse_param(arg: &str) -> Result<SweepParam, RunError> {
    let (name, spec) = arg
        .split_once('=')
        .ok_or_else(|| RunError::Config(format!("sweep parameter `{arg}` is not of the form name=values")))?;
    let name = name.trim();
    let path = match ALIASES.iter().find(|(a, _)| *a == name) {
        Some((_, p)) => p.to_string(),
        None if name.contains('.') => name.to_string(),
        None => return Err(RunError::Config(format!("unknown sweep parameter `{name}`; use section.key"))),
    };
    let spec = spec.trim();
    let values = if let Some((a, b)) = spec.split_once("..") {
        let lo: i64 = a.trim().parse().map_err(|_| RunError::Config(format!("bad range start in `{arg}`")))?;
        let hi: i64 = b.trim().parse().map_err(|_| RunError::Config(format!("bad range end in `{arg}`")))?;
        if hi < lo {
            return Err(RunError::Config(format!("empty range in `{arg}`")));
        }
        (lo..=hi).map(toml::Value::Integer).collect()
    } else {
        spec.split(',').map(|v| scalar(v.trim())).collect::<Vec<_>>()
    };
    if values.is_empty() || spec.is_empty() {
        return Err(RunError::Config(format!("no values in `{arg}`")));
    }
    Ok(SweepParam { path, values })
}

fn set(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), RunError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut t = table;
    for p in parts {
        t = t
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| RunError::Config(format!("`{p}` is not a section")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

fn label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One resolved sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub name: String,
    pub config: ExperimentConfig,
    pub dir: PathBuf,
}

/// Expands the cartesian product of `params` over `template`. Every point is
/// validated before anything runs.
pub fn expand(template: &str, params: &[SweepParam], base: &Path) -> Result<Vec<SweepPoint>, RunError> {
    let root: toml::Table = toml::from_str(template).map_err(|e| RunError::Config(e.to_string()))?;
    let mut points = vec![(String::new(), root)];
    for p in params {
        let mut next = Vec::with_capacity(points.len() * p.values.len());
        for (name, table) in &points {
            for v in &p.values {
                let mut t = table.clone();
                set(&mut t, &p.path, v.clone())?;
                let key = p.path.rsplit('.').next().unwrap_or(&p.path);
                let n = if name.is_empty() { format!("{key}={}", label(v)) } else { format!("{name}_{key}={}", label(v)) };
                next.push((n, t));
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|(name, table)| {
            let config = from_table(table).map_err(|e| RunError::Config(format!("sweep point {name}: {e}")))?;
            Ok(SweepPoint { dir: base.join(&name), name, config })
        })
        .collect()
}

#[derive(Debug)]
pub struct PointResult {
    pub name: String,
    pub dir: PathBuf,
    pub result: Result<(), RunError>,
}

/// Runs every point concurrently, each in its own directory, and writes
/// `sweep.csv` under `base`.
pub fn run_sweep(points: Vec<SweepPoint>, base: &Path) -> Result<Vec<PointResult>, RunError> {
    std::fs::create_dir_all(base)?;
    let results: Vec<PointResult> = points
        .into_par_iter()
        .map(|p| {
            let result = run_experiment(&p.config, &p.dir);
            PointResult { name: p.name, dir: p.dir, result }
        })
        .collect();
    let mut csv = String::from("point,dir,status,exit_code\n");
    for r in &results {
        let (status, code) = match &r.result {
            Ok(()) => ("ok", 0),
            Err(e) => (e.class(), e.exit_code()),
        };
        csv.push_str(&format!("{},{},{status},{code}\n", r.name, r.dir.display()));
    }
    std::fs::write(base.join("sweep.csv"), csv)?;
    Ok(results)
}
