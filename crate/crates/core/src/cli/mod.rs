//! Command-line front end.
//!
//! Complex numbers are written `re,im` (or `re`); interior points `Z` as
//! `Re z1,Im z1,Re z2,Im z2`; boundary points `W` as `Re w,Im w,v`.
//! `PICARD_THREADS` sets the worker count.

pub mod config;
pub mod report;
pub mod suites;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::eisenstein_ring::{gcd, EisInt};
use crate::error::{Error, Result};
use crate::geometry;
use crate::hypergeometric::{self, HypArgs, RelationId};
use crate::kernels::{self, SpectralParam};
use crate::operators::{self, EigenKind, FdScheme};
use crate::picard_series as ps;
use crate::unitary_group::{BoundaryPoint, DomainPoint};
use config::{parse_complex, parse_reals, SuiteConfig};
use report::{exit_code, write_reports, Format};

type C = Complex64;

#[derive(Parser, Debug)]
#[command(name = "picard", version, about = "Kernels, series and identity checks on complex hyperbolic 2-space")]
#[command(
    after_help = "Complex values: \"re,im\" or \"re\". Z: \"Re z1,Im z1,Re z2,Im z2\". W: \"Re w,Im w,v\".\nThread count: PICARD_THREADS."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a verification suite (or `all`); exit code is the number of failed checks (max 125).
    Verify(VerifyArgs),
    /// Evaluate a named quantity.
    Eval(EvalArgs),
    /// Point-pair invariants σ, u, δ and the distance.
    Invariants {
        #[arg(long = "Z", allow_hyphen_values = true)]
        z: String,
        #[arg(long = "Z2", allow_hyphen_values = true)]
        z2: String,
    },
    /// Isotropic vectors in 𝒪³.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Epstein and Dedekind zeta partial sums.
    Zeta {
        #[command(subcommand)]
        cmd: ZetaCmd,
    },
    /// Truncated Eisenstein series.
    Series {
        #[command(subcommand)]
        cmd: SeriesCmd,
    },
    /// Gauss hypergeometric function.
    Hyp {
        #[command(subcommand)]
        cmd: HypCmd,
    },
    /// Kernel evaluation.
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Finite-difference operator checks.
    Op {
        #[command(subcommand)]
        cmd: OpCmd,
    },
    /// Exact arithmetic in the Eisenstein integers; integers as "(a,b)" or "a/2+b/2*sqrt(-3)".
    Ring {
        #[arg(value_parser = ["add", "sub", "mul", "gcd", "divrem", "norm", "canonical"])]
        op: String,
        #[arg(allow_hyphen_values = true)]
        x: String,
        #[arg(allow_hyphen_values = true)]
        y: Option<String>,
    },
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    /// Suite id, or `all`.
    pub suite: String,
    /// Reduced grids.
    #[arg(long)]
    pub quick: bool,
    /// Single spectral parameter, "re" or "re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<i32>,
    /// Limit on point pairs.
    #[arg(long)]
    pub points: Option<usize>,
    /// Radial quadrature panels.
    #[arg(long)]
    pub cells: Option<usize>,
    /// Pass tolerance for every check.
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML or JSON suite configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record per-check wall time.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// sigma | u | delta | distance | rho | poisson | poisson-s | poisson-k | green | kernel-k | phi | hyp | gamma | c | zeta-k
    pub expr: String,
    #[arg(long = "Z", allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long = "Z2", allow_hyphen_values = true)]
    pub z2: Option<String>,
    #[arg(long = "W", allow_hyphen_values = true)]
    pub w: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub k: i32,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long = "z", allow_hyphen_values = true)]
    pub zarg: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub height: i64,
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    Enum {
        #[arg(long)]
        height: i64,
        #[arg(long)]
        coprime: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
pub enum ZetaCmd {
    /// `Z(W, s)` for the chart matrix at `(rho, t, zc)`.
    Epstein {
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long)]
        height: i64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        t: f64,
        #[arg(long, allow_hyphen_values = true, default_value = "0,0")]
        zc: String,
    },
    Dedekind {
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long)]
        height: i64,
    },
}

#[derive(Subcommand, Debug)]
pub enum SeriesCmd {
    Eisenstein {
        #[arg(long = "Z", allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        k: i32,
        #[arg(long)]
        height: i64,
    },
}

#[derive(Args, Debug)]
pub struct HypParams {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, allow_hyphen_values = true)]
    pub c: String,
    #[arg(long, allow_hyphen_values = true)]
    pub z: String,
}

#[derive(Subcommand, Debug)]
pub enum HypCmd {
    Eval(HypParams),
    CheckRelation {
        #[arg(long)]
        id: String,
        #[command(flatten)]
        p: HypParams,
    },
}

#[derive(Subcommand, Debug)]
pub enum KernelCmd {
    /// poisson | poisson-s | poisson-k | green | kernel-k | phi | sl2-poisson | sl2-green
    Eval {
        #[arg(long)]
        id: String,
        #[arg(long = "Z", allow_hyphen_values = true)]
        z: String,
        #[arg(long = "Z2", allow_hyphen_values = true)]
        z2: Option<String>,
        #[arg(long = "W", allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        k: i32,
    },
}

#[derive(Subcommand, Debug)]
pub enum OpCmd {
    /// Eigen-residual of `target` at `Z`: poisson | poisson-k | green | kernel-k.
    Check {
        #[arg(long)]
        target: String,
        #[arg(long = "Z", allow_hyphen_values = true)]
        z: String,
        #[arg(long = "Z2", allow_hyphen_values = true)]
        z2: Option<String>,
        #[arg(long = "W", allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        k: i32,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long, default_value_t = 2)]
        order: u8,
    },
}

pub fn parse_point(s: &str) -> Result<DomainPoint> {
    let v = parse_reals(s, 4)?;
    DomainPoint::try_new(C::new(v[0], v[1]), C::new(v[2], v[3]))
}

pub fn parse_boundary(s: &str) -> Result<BoundaryPoint> {
    let v = parse_reals(s, 3)?;
    Ok(BoundaryPoint::new(C::new(v[0], v[1]), v[2]))
}

fn need<'a>(x: &'a Option<String>, name: &str) -> Result<&'a str> {
    x.as_deref().ok_or_else(|| Error::Config(format!("--{name} is required")))
}

fn emit(v: &impl Serialize, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out).map_err(|e| Error::Io(e.to_string()))
}

fn value_json(expr: &str, v: C, definition: &str) -> serde_json::Value {
    json!({ "expr": expr, "value": [v.re, v.im], "definition": definition })
}

/// Evaluates a registry entry; returns `(value, definition)`.
pub fn eval_expr(a: &EvalArgs) -> Result<(C, &'static str)> {
    let z = || parse_point(need(&a.z, "Z")?);
    let z2 = || parse_point(need(&a.z2, "Z2")?);
    let w = || parse_boundary(need(&a.w, "W")?);
    let s = || parse_complex(need(&a.s, "s")?);
    let p = || Ok::<_, Error>(SpectralParam::new(s()?, a.k));
    Ok(match a.expr.as_str() {
        "sigma" => (C::from(geometry::sigma(&z()?, &z2()?)), "σ = |ρ(Z,Z′)|²/(ρ(Z)ρ(Z′))"),
        "u" => (C::from(geometry::u_invariant(&z()?, &z2()?)), "u = σ − 1"),
        "delta" => (C::from(geometry::delta(&z()?, &z2()?)), "δ = (σ + 1)/2"),
        "distance" => (C::from(geometry::distance(&z()?, &z2()?)), "d with cosh d = δ"),
        "rho" => (C::from(z()?.rho()), "ρ(Z) = z₁ + z̄₁ − |z₂|²"),
        "poisson" => (C::from(kernels::poisson(&z()?, &w()?)?), "P(Z,W) = ρ(Z)/|ρ(Z,W)|²"),
        "poisson-s" => (kernels::poisson_pow(&z()?, &w()?, s()?)?, "P(Z,W)^s"),
        "poisson-k" => (kernels::poisson_weight(&z()?, &w()?, p()?)?.value, "P_k(Z,W;s) = P^s (ρ(Z,W)/|ρ(Z,W)|)^{2k}"),
        "green" => {
            let u = match a.u {
                Some(u) => u,
                None => geometry::u_invariant(&z()?, &z2()?),
            };
            (kernels::green_radial(u, s()?)?, "φ_s(u) = u^{−s} F(s, s−1; 2s−1; −1/u)")
        }
        "kernel-k" => (kernels::kernel_weight(&z()?, &z2()?, p()?)?.value, "K(Z,Z′;k,s), the weight-k radial kernel"),
        "phi" => (kernels::phi_closed(&z()?, &z2()?, p()?)?, "closed form of the boundary product integral"),
        "hyp" => {
            let f = |x: &Option<String>, n| parse_complex(need(x, n)?);
            (
                hypergeometric::gauss_2f1(HypArgs::new(f(&a.a, "a")?, f(&a.b, "b")?, f(&a.c, "c")?, f(&a.zarg, "z")?))?,
                "₂F₁(a, b; c; z)",
            )
        }
        "gamma" => (hypergeometric::gamma(s()?), "Γ(s)"),
        "c" => (kernels::c_fn(s()?), "c(s), the Harish-Chandra type factor"),
        "zeta-k" => (ps::dedekind_zeta(s()?, a.height)?.value, "ζ_K(s) for K = ℚ(√−3), truncated at height"),
        other => return Err(Error::UnknownExpression(other.to_string())),
    })
}

fn verify(v: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &v.config {
        Some(p) => SuiteConfig::load(p)?,
        None => SuiteConfig::default(),
    };
    cfg.suite = v.suite.clone();
    cfg.quick |= v.quick;
    cfg.output.timing |= v.timing;
    if let Some(s) = &v.s {
        cfg.grid.s = Some(s.clone());
    }
    if v.k.is_some() {
        cfg.grid.k = v.k;
    }
    if v.points.is_some() {
        cfg.grid.points = v.points;
    }
    if let Some(c) = v.cells {
        cfg.quad.cells = c;
    }
    if v.rel_tol.is_some() {
        cfg.rel_tol = v.rel_tol;
    }
    if let Some(s) = v.seed {
        cfg.seed = s;
    }
    if let Some(f) = v.format {
        cfg.output.format = f;
    }
    let reports = suites::run_suite(&cfg.suite, &cfg)?;
    match &v.out {
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            write_reports(&reports, cfg.output.format, &mut f)?;
        }
        None => write_reports(&reports, cfg.output.format, out)?,
    }
    Ok(exit_code(&reports))
}

fn ring(op: &str, x: &str, y: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let x: EisInt = x.parse()?;
    let y = || -> Result<EisInt> { y.ok_or_else(|| Error::Config("second operand required".into()))?.parse() };
    let v = match op {
        "add" => json!({ "value": x.checked_add(y()?)?.to_string() }),
        "sub" => json!({ "value": x.checked_sub(y()?)?.to_string() }),
        "mul" => json!({ "value": x.checked_mul(y()?)?.to_string() }),
        "gcd" => json!({ "value": gcd(x, y()?)?.to_string() }),
        "divrem" => {
            let (q, r) = x.div_rem(y()?)?;
            json!({ "quotient": q.to_string(), "remainder": r.to_string() })
        }
        "norm" => json!({ "value": x.checked_norm()? }),
        _ => json!({ "value": x.canonical_associate().to_string() }),
    };
    emit(&v, out)
}

/// Runs a parsed command, writing to `out`; returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Verify(v) => return verify(&v, out),
        Command::Eval(a) => {
            let (v, def) = eval_expr(&a)?;
            emit(&value_json(&a.expr, v, def), out)?;
        }
        Command::Invariants { z, z2 } => emit(&geometry::invariants(&parse_point(&z)?, &parse_point(&z2)?), out)?,
        Command::Lattice { cmd: LatticeCmd::Enum { height, coprime, format } } => {
            let v = ps::enumerate_isotropic(height, coprime)?;
            match format {
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    let io = |e: csv::Error| Error::Io(e.to_string());
                    w.write_record(["a1", "a2", "a3", "height"]).map_err(io)?;
                    for a in &v {
                        w.write_record([a.a1.to_string(), a.a2.to_string(), a.a3.to_string(), a.height().to_string()])
                            .map_err(io)?;
                    }
                    w.flush().map_err(|e| Error::Io(e.to_string()))?;
                }
                _ => emit(&json!({ "height": height, "coprime": coprime, "count": v.len(), "vectors": v }), out)?,
            }
        }
        Command::Zeta { cmd } => match cmd {
            ZetaCmd::Epstein { s, height, rho, t, zc } => {
                let y = ps::HermitianMatrix::w_chart(rho, t, parse_complex(&zc)?)?;
                emit(&ps::epstein_zeta(&y, parse_complex(&s)?, height)?, out)?;
            }
            ZetaCmd::Dedekind { s, height } => emit(&ps::dedekind_zeta(parse_complex(&s)?, height)?, out)?,
        },
        Command::Series { cmd: SeriesCmd::Eisenstein { z, s, k, height } } => {
            emit(&ps::eisenstein_truncated(&parse_point(&z)?, parse_complex(&s)?, k, height)?, out)?
        }
        Command::Hyp { cmd } => match cmd {
            HypCmd::Eval(p) => {
                let args = hyp_args(&p)?;
                let (v, route) = hypergeometric::gauss_2f1_routed(args, Default::default())?;
                emit(&json!({ "value": [v.re, v.im], "route": format!("{route:?}") }), out)?;
            }
            HypCmd::CheckRelation { id, p } => {
                let rel: RelationId = id.parse()?;
                let args = hyp_args(&p)?;
                let r = hypergeometric::contiguous_residual(rel, args)?;
                emit(&json!({ "relation": rel.name(), "residual": r, "pass": r <= 1e-10 }), out)?;
            }
        },
        Command::Kernel { cmd: KernelCmd::Eval { id, z, z2, w, s, k } } => {
            let p = SpectralParam::new(parse_complex(&s)?, k);
            let v = kernel_eval(&id, &z, z2.as_deref(), w.as_deref(), p)?;
            emit(&json!({ "kernel": id, "value": [v.re, v.im] }), out)?;
        }
        Command::Op { cmd: OpCmd::Check { target, z, z2, w, s, k, h, order } } => {
            let p = SpectralParam::new(parse_complex(&s)?, k);
            let at = parse_point(&z)?;
            let sc = FdScheme::new(h, order)?;
            let kind = match target.as_str() {
                "poisson" => EigenKind::Poisson(parse_boundary(need(&w, "W")?)?),
                "poisson-k" => EigenKind::PoissonK(parse_boundary(need(&w, "W")?)?),
                "green" => EigenKind::GreenRadial(parse_point(need(&z2, "Z2")?)?),
                "kernel-k" => EigenKind::KernelK(parse_point(need(&z2, "Z2")?)?),
                other => return Err(Error::UnknownExpression(other.to_string())),
            };
            let r = operators::eigen_residual(kind, p, &at, &sc)?;
            emit(&json!({ "target": target, "eigenvalue": [p.lambda().re, p.lambda().im], "residual": r }), out)?;
        }
        Command::Ring { op, x, y } => ring(&op, &x, y.as_deref(), out)?,
    }
    Ok(0)
}

fn hyp_args(p: &HypParams) -> Result<HypArgs> {
    Ok(HypArgs::new(parse_complex(&p.a)?, parse_complex(&p.b)?, parse_complex(&p.c)?, parse_complex(&p.z)?))
}

fn req<'a>(x: Option<&'a str>, n: &str) -> Result<&'a str> {
    x.ok_or_else(|| Error::Config(format!("--{n} is required")))
}

fn kernel_eval(id: &str, z: &str, z2: Option<&str>, w: Option<&str>, p: SpectralParam) -> Result<C> {
    let sl2 = |x: &str| -> Result<C> {
        let v = parse_reals(x, 2)?;
        Ok(C::new(v[0], v[1]))
    };
    Ok(match id {
        "poisson" => C::from(kernels::poisson(&parse_point(z)?, &parse_boundary(req(w, "W")?)?)?),
        "poisson-s" => kernels::poisson_pow(&parse_point(z)?, &parse_boundary(req(w, "W")?)?, p.s)?,
        "poisson-k" => kernels::poisson_weight(&parse_point(z)?, &parse_boundary(req(w, "W")?)?, p)?.value,
        "green" => kernels::r_kernel(&parse_point(z)?, &parse_point(req(z2, "Z2")?)?, p.s)?,
        "kernel-k" => kernels::kernel_weight(&parse_point(z)?, &parse_point(req(z2, "Z2")?)?, p)?.value,
        "phi" => kernels::phi_closed(&parse_point(z)?, &parse_point(req(z2, "Z2")?)?, p)?,
        "sl2-poisson" => {
            let zeta =
                req(w, "W")?.parse::<f64>().map_err(|_| Error::Config("W must be a real boundary point".into()))?;
            kernels::sl2::poisson_weight(sl2(z)?, zeta, p)?
        }
        "sl2-green" => kernels::sl2::green(sl2(z)?, sl2(req(z2, "Z2")?)?, p)?,
        other => return Err(Error::UnknownExpression(other.to_string())),
    })
}

/// Entry point for the binary: parses arguments, runs, and maps errors to exit codes
/// (2 for configuration and usage errors, 1 for numerical failures).
pub fn run() -> i32 {
    if let Some(n) = std::env::var("PICARD_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnknownExpression(_) | Error::InvalidParameter(_) => 2,
                _ => 1,
            }
        }
    }
}
