//! Check records and their JSON, CSV and text renderings.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary_quadrature::IdentityReport;
use crate::error::{Error, Result};

type C = Complex64;

/// Output format for reports and subcommand results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

/// One verified identity. `pass` is `rel_err ≤ tol`; a check that raised an
/// error carries `rel_err = null` and the message under `detail.error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub identity_id: String,
    pub inputs: BTreeMap<String, String>,
    pub lhs: C,
    pub rhs: C,
    pub rel_err: Option<f64>,
    pub tol: f64,
    pub pass: bool,
    pub runtime_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

impl CheckReport {
    pub fn new(id: &str, inputs: BTreeMap<String, String>, lhs: C, rhs: C, rel_err: f64, tol: f64) -> Self {
        let rel = if rel_err.is_finite() { Some(rel_err) } else { None };
        CheckReport {
            identity_id: id.to_string(),
            inputs,
            lhs,
            rhs,
            rel_err: rel,
            tol,
            pass: rel.is_some_and(|r| r <= tol),
            runtime_ms: None,
            detail: None,
        }
    }

    /// `lhs` against `rhs`, relative to `|rhs|`.
    pub fn compare(id: &str, inputs: BTreeMap<String, String>, lhs: C, rhs: C, tol: f64) -> Self {
        let scale = rhs.norm();
        let err = if scale > 0.0 { (lhs - rhs).norm() / scale } else { (lhs - rhs).norm() };
        Self::new(id, inputs, lhs, rhs, err, tol)
    }

    /// A scalar residual that should vanish: `lhs = residual`, `rhs = 0`.
    pub fn residual(id: &str, inputs: BTreeMap<String, String>, res: f64, tol: f64) -> Self {
        Self::new(id, inputs, C::from(res), C::new(0.0, 0.0), res, tol)
    }

    pub fn from_quadrature(rep: IdentityReport, tol: f64) -> Self {
        let mut out = Self::new(&rep.identity_id, rep.inputs, rep.lhs, rep.rhs, rep.rel_err, tol);
        let mut detail = serde_json::json!({ "quad_error": rep.quad_error, "cells": rep.cfg.cells });
        if let Some(shells) = rep.shells {
            detail["shells"] = serde_json::to_value(shells).unwrap_or_default();
        }
        out.detail = Some(detail);
        out
    }

    pub fn failed(id: &str, inputs: BTreeMap<String, String>, tol: f64, err: &Error) -> Self {
        let nan = C::new(f64::NAN, f64::NAN);
        let mut out = Self::new(id, inputs, nan, nan, f64::NAN, tol);
        out.detail = Some(serde_json::json!({ "error": err.to_string() }));
        out
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

/// Builds an `inputs` map from `(key, value)` pairs.
pub fn inputs<const N: usize>(kv: [(&str, String); N]) -> BTreeMap<String, String> {
    kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn fmt_c(z: C) -> String {
    format!("{},{}", z.re, z.im)
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}

fn joined(inputs: &BTreeMap<String, String>) -> String {
    inputs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Writes `reports` in `fmt`. An empty slice gives `[]`, a bare CSV header, or nothing.
pub fn write_reports(reports: &[CheckReport], fmt: Format, out: &mut dyn Write) -> Result<()> {
    match fmt {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, reports).map_err(io)?;
            writeln!(out).map_err(io)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "identity_id",
                "inputs",
                "lhs_re",
                "lhs_im",
                "rhs_re",
                "rhs_im",
                "rel_err",
                "tol",
                "pass",
                "runtime_ms",
            ])
            .map_err(io)?;
            for r in reports {
                w.write_record([
                    r.identity_id.clone(),
                    joined(&r.inputs),
                    format!("{:e}", r.lhs.re),
                    format!("{:e}", r.lhs.im),
                    format!("{:e}", r.rhs.re),
                    format!("{:e}", r.rhs.im),
                    opt(r.rel_err),
                    format!("{:e}", r.tol),
                    r.pass.to_string(),
                    opt(r.runtime_ms),
                ])
                .map_err(io)?;
            }
            w.flush().map_err(io)
        }
        Format::Text => {
            for r in reports {
                let verdict = if r.pass { "PASS" } else { "FAIL" };
                let err = r.rel_err.map_or("error".to_string(), |e| format!("{e:.3e}"));
                writeln!(out, "{verdict} {} [{}] rel_err={err} tol={:e}", r.identity_id, joined(&r.inputs), r.tol)
                    .map_err(io)?;
            }
            Ok(())
        }
    }
}

/// Process exit code for a report set: the failure count, capped at 125.
pub fn exit_code(reports: &[CheckReport]) -> i32 {
    reports.iter().filter(|r| !r.pass).count().min(125) as i32
}
