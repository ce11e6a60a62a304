//! Run configuration: command-line values merged over a key=value file, the
//! FINITEGAP_TOL environment variable and built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use finitegap::potentials::{PotentialSpec, DEFAULT_CATALOG};
use finitegap::text::parse_pairs;

use crate::CliError;

pub const TOL_ENV: &str = "FINITEGAP_TOL";

/// Keys of the config file that are not potential parameters.
pub const RESERVED_KEYS: [&str; 13] =
    ["catalog", "format", "output", "tol", "grid", "variant", "lambda", "sheet", "suite", "form", "which", "x_imag", "wall_time"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(CliError::Config(format!("unknown format {s:?}; expected csv or jsonl"))),
        }
    }
}

/// `start:stop:count` with count ≥ 2 and start < stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = (self.count - 1) as f64;
        (0..self.count).map(|i| (self.start * (n - i as f64) + self.stop * i as f64) / n).collect()
    }
}

impl FromStr for Grid {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("grid {s:?}: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else { return Err(bad("expected start:stop:count")) };
        let start: f64 = a.trim().parse().map_err(|_| bad("bad start"))?;
        let stop: f64 = b.trim().parse().map_err(|_| bad("bad stop"))?;
        let count: usize = n.trim().parse().map_err(|_| bad("bad count"))?;
        if count < 2 {
            return Err(bad("count must be at least 2"));
        }
        if !(start < stop) || !start.is_finite() || !stop.is_finite() {
            return Err(bad("start must be below stop"));
        }
        Ok(Grid { start, stop, count })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

/// Parsed `key=value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Catalog text from a file, or the shipped fixtures.
pub fn catalog_text(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => Ok(DEFAULT_CATALOG.to_string()),
    }
}

/// The catalog record for `variant` with `overrides` applied key by key.
pub fn resolve_variant(catalog: &str, variant: &str, overrides: &[(String, String)]) -> Result<PotentialSpec, CliError> {
    let line = catalog
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .find(|l| l.split_whitespace().next() == Some(variant))
        .ok_or_else(|| CliError::Config(format!("variant {variant:?} not in the catalog")))?;
    let (name, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let mut pairs = parse_pairs(rest).map_err(|e| CliError::Config(e.to_string()))?;
    for (k, v) in overrides {
        match pairs.iter_mut().find(|(pk, _)| pk == k) {
            Some(slot) => slot.1 = v.clone(),
            None => pairs.push((k.clone(), v.clone())),
        }
    }
    let record = std::iter::once(name.to_string()).chain(pairs.into_iter().map(|(k, v)| format!("{k}={v}"))).collect::<Vec<_>>().join(" ");
    record.parse().map_err(|e: finitegap::Error| CliError::Config(format!("{record:?}: {e}")))
}

/// Tolerance from the environment, if set.
pub fn env_tolerance() -> Result<Option<f64>, CliError> {
    match std::env::var(TOL_ENV) {
        Ok(s) => parse_tol(&s).map(Some),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{TOL_ENV}: {e}"))),
    }
}

pub fn parse_tol(s: &str) -> Result<f64, CliError> {
    match s.trim().parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        _ => Err(CliError::Config(format!("tolerance {s:?} is not a positive number"))),
    }
}

/// Where and how a command writes its table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub catalog_path: Option<PathBuf>,
    pub params: Vec<(String, String)>,
    pub grid: Option<Grid>,
    /// Explicit tolerance, if any source provided one.
    pub tol: Option<f64>,
    pub output: OutputSpec,
    /// Remaining config-file values for command-specific keys.
    pub file: BTreeMap<String, String>,
}

impl RunConfig {
    /// Command-line value, else config-file value.
    pub fn pick(&self, cli: Option<String>, key: &str) -> Option<String> {
        cli.or_else(|| self.file.get(key).cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        let g: Grid = "0.1:1.9:100".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 100);
        assert_eq!((p[0], p[99]), (0.1, 1.9));
        for bad in ["1:0:5", "0:1:1", "0:1", "a:1:3", "0:1:-2"] {
            assert!(matches!(bad.parse::<Grid>(), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn config_lines() {
        let m = parse_config_text("# comment\nformat = jsonl\n\ntau=0+2i # trailing\n").unwrap();
        assert_eq!(m["format"], "jsonl");
        assert_eq!(m["tau"], "0+2i");
        assert!(parse_config_text("novalue").is_err());
    }

    #[test]
    fn overrides_replace_catalog_values() {
        let spec = resolve_variant(DEFAULT_CATALOG, "two-gap-lame", &[("tau".into(), "0+3i".into())]).unwrap();
        let PotentialSpec::TwoGapLame { tau, .. } = spec else { panic!() };
        assert_eq!(tau.tau(), finitegap::Complex64::new(0.0, 3.0));
        assert!(resolve_variant(DEFAULT_CATALOG, "nope", &[]).is_err());
        assert!(resolve_variant(DEFAULT_CATALOG, "two-gap-lame", &[("tau".into(), "0-1i".into())]).is_err());
    }
}
