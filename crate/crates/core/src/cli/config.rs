//! Suite configuration, loadable from TOML or JSON. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::report::Format;
use crate::boundary_quadrature::QuadConfig;
use crate::error::{Error, Result};

/// Truncation parameters shared by the lattice and sampling suites.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Truncation {
    /// Cone height for the zeta factorisation.
    pub height: Option<i64>,
    /// Largest height for the exhaustive involution check.
    pub involution_height: Option<i64>,
    /// Random draws per sampled identity.
    pub draws: Option<usize>,
    /// Random triples for the triangle inequality.
    pub triples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Format,
    /// Measure per-check wall time; off by default so reports are reproducible.
    pub timing: bool,
}

/// Grid overrides. `s` is `"re"` or `"re,im"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOverrides {
    pub s: Option<String>,
    pub k: Option<i32>,
    /// Limit on the number of point pairs.
    pub points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: String,
    pub seed: u64,
    pub quick: bool,
    /// Pass tolerance per identity id, overriding the built-in one.
    pub tolerances: BTreeMap<String, f64>,
    /// Overrides every tolerance when set.
    pub rel_tol: Option<f64>,
    pub quad: QuadConfig,
    pub truncation: Truncation,
    pub grid: GridOverrides,
    pub output: OutputConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suite: "all".into(),
            seed: 20240601,
            quick: false,
            tolerances: BTreeMap::new(),
            rel_tol: None,
            quad: QuadConfig::default(),
            truncation: Truncation::default(),
            grid: GridOverrides::default(),
            output: OutputConfig::default(),
        }
    }
}

impl SuiteConfig {
    /// Reads `.toml` or `.json` by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let cfg: SuiteConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
            Some("toml") => toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?,
            other => return Err(Error::Config(format!("unsupported config extension {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        if let Some(s) = &self.grid.s {
            parse_complex(s)?;
        }
        if let Some(t) = self.rel_tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("rel_tol = {t} must be positive")));
            }
        }
        for (k, v) in &self.tolerances {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance for {k} must be positive")));
            }
        }
        Ok(())
    }
}

/// Parses `"re"` or `"re,im"`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse number '{x}' in '{s}'")));
    match parts[..] {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Config(format!("expected 're' or 're,im', got '{s}'"))),
    }
}

/// Parses a comma-joined list of reals of length `n`.
pub fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse number '{x}' in '{s}'"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::Config(format!("expected {n} comma-separated numbers, got {} in '{s}'", v.len())));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<SuiteConfig>("suite = \"all\"\nbogus = 1").is_err());
        assert!(toml::from_str::<SuiteConfig>("[quad]\nnodes = 3").is_err());
        assert!(serde_json::from_str::<SuiteConfig>(r#"{"output": {"fmt": "csv"}}"#).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = "suite = \"poisson-integral\"\nseed = 7\n[quad]\ncells = 32\n[output]\nformat = \"csv\"\n[grid]\ns = \"1.5,0.1\"\n";
        let cfg: SuiteConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.quad.cells, 32);
        assert_eq!(cfg.output.format, Format::Csv);
        cfg.validate().unwrap();
        let back: SuiteConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1.5").unwrap(), Complex64::new(1.5, 0.0));
        assert_eq!(parse_complex("-1, 2").unwrap(), Complex64::new(-1.0, 2.0));
        assert!(parse_complex("1,2,3").is_err());
        assert_eq!(parse_reals("0.5,0,0,0", 4).unwrap(), vec![0.5, 0.0, 0.0, 0.0]);
        assert!(parse_reals("0.5,0", 4).is_err());
    }
}
