//! Quadrature over the Heisenberg boundary and the integral identities built on it.
//!
//! Boundary points are parametrised by polar coordinates in the half-plane
//! `(|w|²/2, v) = R(cos φ, sin φ)`, `φ ∈ (−π/2, π/2)`, and `ψ = arg w`. In these
//! coordinates `ρ(W, 0) = R e^{−iφ}` and `dm = ½ d|w|² dψ dv = R dR dφ dψ`.
//! The radius is compactified by `R = L tan(πt/2)`, `t ∈ (0, 1)`; `φ` uses
//! Gauss–Legendre panels and `ψ` the periodic trapezoid rule.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::u_invariant;
use crate::hypergeometric::{gamma, rgamma};
use crate::kernels::{c_fn, phi_closed, phi_green_form, poisson_pow, poisson_weight, removable, sl2, SpectralParam};
use crate::unitary_group::{cocycle_j, n_elem, BoundaryPoint, DomainPoint, GroupElement};

type C = Complex64;

/// A complex integrand on the boundary.
pub type BoundaryField<'a> = dyn Fn(&BoundaryPoint) -> Result<C> + Sync + 'a;

const MAX_CELLS: usize = 512;
const MAX_DEPTH: usize = 20;
const SLOW_DECAY: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TensorGaussLegendre,
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compactify {
    TanMap,
}

/// Quadrature settings. `cells` panels of `order` Gauss nodes along the radius,
/// half as many panels along `φ`, and `angular` trapezoid nodes in `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub scheme: Scheme,
    pub compactify: Compactify,
    pub cells: usize,
    pub order: usize,
    pub angular: usize,
    pub rel_tol: f64,
    /// Length scale `L` of the tan map; chosen from the geometry when absent.
    pub trunc_radius: Option<f64>,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            scheme: Scheme::TensorGaussLegendre,
            compactify: Compactify::TanMap,
            cells: 16,
            order: 8,
            angular: 32,
            rel_tol: 1e-7,
            trunc_radius: None,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.cells < 8 {
            return bad("cells must be at least 8");
        }
        if self.cells > MAX_CELLS {
            return bad("cells must be at most 512");
        }
        if !(2..=64).contains(&self.order) {
            return bad("order must lie in 2..=64");
        }
        if self.angular < 2 || !self.angular.is_multiple_of(2) {
            return bad("angular must be an even number >= 2");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad("rel_tol must lie in (0, 1)");
        }
        if let Some(l) = self.trunc_radius {
            if !(l > 0.0 && l.is_finite()) {
                return bad("trunc_radius must be positive");
            }
        }
        Ok(())
    }
}

/// Value of a quadrature with the difference to the half-resolution rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: C,
    pub error: f64,
    pub evaluations: usize,
    pub cells: usize,
    /// Decay exponent `p` of `R²|f|` along the radius.
    pub decay_exponent: f64,
}

/// One dyadic shell of the singular integral around `W′`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellStep {
    pub depth: usize,
    pub inner_radius: f64,
    pub total: C,
    pub increment: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: String,
    pub inputs: BTreeMap<String, String>,
    pub lhs: C,
    pub rhs: C,
    pub rel_err: f64,
    pub pass: bool,
    pub quad_error: f64,
    pub cfg: QuadConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shells: Option<Vec<ShellStep>>,
}

impl IdentityReport {
    fn new(id: &str, inputs: BTreeMap<String, String>, lhs: C, rhs: C, quad_error: f64, cfg: &QuadConfig) -> Self {
        let scale = rhs.norm();
        let rel_err = if scale > 0.0 { (lhs - rhs).norm() / scale } else { (lhs - rhs).norm() };
        IdentityReport {
            identity_id: id.to_string(),
            inputs,
            lhs,
            rhs,
            rel_err,
            pass: rel_err.is_finite() && rel_err <= cfg.rel_tol * 10.0,
            quad_error,
            cfg: cfg.clone(),
            shells: None,
        }
    }
}

fn fmt_c(z: C) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

fn fmt_point(z: &DomainPoint) -> String {
    format!("{},{}", fmt_c(z.z1), fmt_c(z.z2))
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    out
}

/// Composite rule: `cells` equal panels of `[a, b]`.
fn panels(a: f64, b: f64, cells: usize, order: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(order);
    let h = (b - a) / cells as f64;
    (0..cells)
        .flat_map(|c| {
            let lo = a + c as f64 * h;
            gl.iter().map(move |&(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w)).collect::<Vec<_>>()
        })
        .collect()
}

/// Boundary point with polar coordinates `(R, φ, ψ)`.
pub fn polar_point(r: f64, phi: f64, psi: f64) -> BoundaryPoint {
    let x = (2.0 * r * phi.cos()).max(0.0);
    BoundaryPoint::new(C::from_polar(x.sqrt(), psi), r * phi.sin())
}

#[derive(Clone, Copy, Debug)]
struct Grid {
    cells: usize,
    order: usize,
    angular: usize,
}

impl Grid {
    fn halved(self) -> Grid {
        Grid {
            cells: (self.cells / 2).max(2),
            order: self.order,
            angular: if self.angular > 1 { (self.angular / 2).max(2) } else { 1 },
        }
    }

    fn doubled(self) -> Grid {
        Grid { cells: self.cells * 2, order: self.order, angular: if self.angular > 1 { self.angular * 2 } else { 1 } }
    }

    fn phi_cells(&self) -> usize {
        (self.cells / 2).max(2)
    }
}

/// Angular sum over `φ` and `ψ` at fixed radius, weighted by `R` (the measure).
fn ring_sum(f: &(dyn Fn(f64, f64, f64) -> Result<C> + Sync), r: f64, phis: &[(f64, f64)], angular: usize) -> Result<C> {
    let dpsi = 2.0 * PI / angular as f64;
    let mut acc = C::new(0.0, 0.0);
    for &(phi, wphi) in phis {
        let mut ring = C::new(0.0, 0.0);
        for j in 0..angular {
            ring += f(r, phi, j as f64 * dpsi)?;
        }
        acc += wphi * ring;
    }
    Ok(acc * dpsi * r)
}

/// Deterministic parallel sum: nodes are evaluated in parallel, then added in order.
fn ordered_sum(nodes: &[(f64, f64)], term: impl Fn(f64) -> Result<C> + Sync) -> Result<C> {
    let parts: Vec<Result<C>> = nodes.par_iter().map(|&(r, w)| term(r).map(|v| v * w)).collect();
    let mut acc = C::new(0.0, 0.0);
    for p in parts {
        acc += p?;
    }
    if !(acc.re.is_finite() && acc.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(acc)
}

/// Tensor rule over `R ∈ (r0, ∞)` with `R = r0 + L tan(πt/2)`.
fn tensor(f: &(dyn Fn(f64, f64, f64) -> Result<C> + Sync), r0: f64, scale: f64, g: Grid) -> Result<C> {
    let ts = panels(0.0, 1.0, g.cells, g.order);
    let radial: Vec<(f64, f64)> = ts
        .iter()
        .map(|&(t, w)| {
            let th = 0.5 * PI * t;
            (r0 + scale * th.tan(), w * scale * 0.5 * PI / (th.cos() * th.cos()))
        })
        .collect();
    let phis = panels(-0.5 * PI, 0.5 * PI, g.phi_cells(), g.order);
    ordered_sum(&radial, |r| ring_sum(f, r, &phis, g.angular))
}

fn evaluations(g: Grid) -> usize {
    g.cells * g.order * g.phi_cells() * g.order * g.angular
}

/// Decay exponent of `R²|f|` between `R = 10³L` and `10⁴L`, worst over a few directions.
fn decay_exponent(f: &(dyn Fn(f64, f64, f64) -> Result<C> + Sync), scale: f64) -> Result<f64> {
    let (r1, r2) = (1e3 * scale, 1e4 * scale);
    let mut worst = f64::INFINITY;
    for &(phi, psi) in &[(0.0, 0.3), (0.7, 1.1), (-1.2, 2.0), (1.45, 4.0)] {
        let g1 = r1 * r1 * f(r1, phi, psi)?.norm();
        let g2 = r2 * r2 * f(r2, phi, psi)?.norm();
        if !(g1.is_finite() && g2.is_finite()) {
            return Err(Error::NonFinite);
        }
        if g1 < 1e-300 || g2 < 1e-300 {
            continue;
        }
        worst = worst.min((g1 / g2).ln() / (r2 / r1).ln());
    }
    Ok(worst)
}

fn integrate_polar(
    f: &(dyn Fn(f64, f64, f64) -> Result<C> + Sync),
    scale: f64,
    angular: usize,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    let p = decay_exponent(f, scale)?;
    if p <= SLOW_DECAY {
        return Err(Error::SlowDecay(p));
    }
    let mut g = Grid { cells: cfg.cells, order: cfg.order, angular };
    let mut coarse = tensor(f, 0.0, scale, g.halved())?;
    let mut fine = tensor(f, 0.0, scale, g)?;
    let mut evals = evaluations(g) + evaluations(g.halved());
    if cfg.scheme == Scheme::Adaptive {
        while (fine - coarse).norm() > cfg.rel_tol * fine.norm() && g.cells * 2 <= MAX_CELLS {
            g = g.doubled();
            coarse = fine;
            fine = tensor(f, 0.0, scale, g)?;
            evals += evaluations(g);
        }
    }
    let error = (fine - coarse).norm();
    if p < 1.0 && error > cfg.rel_tol * fine.norm() {
        return Err(Error::SlowDecay(p));
    }
    Ok(QuadResult { value: fine, error, evaluations: evals, cells: g.cells, decay_exponent: p })
}

/// `∫_{∂} f(W) dm(W)` with the tan-map scale `trunc_radius` (default 1).
pub fn integrate_boundary(f: &BoundaryField, cfg: &QuadConfig) -> Result<QuadResult> {
    let scale = cfg.trunc_radius.unwrap_or(1.0);
    let polar = |r: f64, phi: f64, psi: f64| f(&polar_point(r, phi, psi));
    integrate_polar(&polar, scale, cfg.angular, cfg)
}

/// Heisenberg translation taking `Z` to `(ρ(Z)/2, 0)`; `j ≡ 1`, so no kernel changes.
pub fn center_at(z: &DomainPoint) -> GroupElement {
    n_elem(-z.z2.conj(), -z.z1.im)
}

/// Heisenberg translation taking the boundary point `W` to the origin.
pub fn boundary_to_origin(w: &BoundaryPoint) -> GroupElement {
    n_elem(-w.w.conj(), -w.v)
}

fn radial(z: &DomainPoint) -> bool {
    z.z2.norm() < 1e-14
}

/// `∫ P(Z, W)^s dm(W) = π/(s−1) c(s) 4^{s−1} ρ^{2−s}` at `Z = (ρ/2, 0)`.
pub fn verify_poisson_integral(s: C, rho: f64, cfg: &QuadConfig) -> Result<IdentityReport> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    if (s - 1.0).norm() < crate::kernels::POLE_GUARD {
        return Err(Error::PoleAtPrefactor("1/(s−1) at s = 1".into()));
    }
    let z = DomainPoint::new(C::from(rho / 2.0), C::new(0.0, 0.0));
    let f = |r: f64, phi: f64, psi: f64| poisson_pow(&z, &polar_point(r, phi, psi), s);
    let q = integrate_polar(&f, cfg.trunc_radius.unwrap_or(rho / 2.0), 1, cfg)?;
    let rhs = PI / (s - 1.0) * c_fn(s) * ((s - 1.0) * 4f64.ln()).exp() * ((2.0 - s) * rho.ln()).exp();
    let inputs = BTreeMap::from([("rho".to_string(), format!("{rho:?}")), ("s".to_string(), fmt_c(s))]);
    Ok(IdentityReport::new("poisson_integral", inputs, q.value, rhs, q.error, cfg))
}

/// `φ(Z, Z′; k, s) = ∫ P_k(Z, W; s) P_{−k}(Z′, W; 2−s) dm(W)` by quadrature.
pub fn product_quadrature(z: &DomainPoint, z2: &DomainPoint, p: SpectralParam, cfg: &QuadConfig) -> Result<QuadResult> {
    let g = center_at(z);
    let zc = g.act(z)?;
    let z2c = g.act(z2)?;
    let q = SpectralParam::new(2.0 - p.s, -p.k);
    let f = |r: f64, phi: f64, psi: f64| {
        let w = polar_point(r, phi, psi);
        Ok(poisson_weight(&zc, &w, p)?.value * poisson_weight(&z2c, &w, q)?.value)
    };
    // Z′ casts its shadow near R* = |ρ(W*, 0)| for W* = (z₂′, Im z₁′).
    let shadow = C::new(z2c.z2.norm_sqr() / 2.0, z2c.z1.im).norm();
    let scale = cfg.trunc_radius.unwrap_or_else(|| (zc.rho() / 2.0 * shadow.max(z2c.rho() / 2.0)).sqrt());
    let angular = if radial(&z2c) { 1 } else { cfg.angular };
    integrate_polar(&f, scale, angular, cfg)
}

fn pair_inputs(z: &DomainPoint, z2: &DomainPoint, p: SpectralParam) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("Z".to_string(), fmt_point(z)),
        ("Z2".to_string(), fmt_point(z2)),
        ("k".to_string(), p.k.to_string()),
        ("s".to_string(), fmt_c(p.s)),
    ])
}

/// Product formula: the quadrature against `K(Z, Z′; k, s) + K(Z, Z′; k, 2−s)`
/// (for `k = 0`, the Green-kernel form).
pub fn verify_product_formula(
    z: &DomainPoint,
    z2: &DomainPoint,
    p: SpectralParam,
    cfg: &QuadConfig,
) -> Result<IdentityReport> {
    let rhs = if p.k == 0 { phi_green_form(u_invariant(z, z2), p.s)? } else { phi_closed(z, z2, p)? };
    let q = product_quadrature(z, z2, p, cfg)?;
    let id = if p.k == 0 { "product_formula" } else { "product_formula_k" };
    Ok(IdentityReport::new(id, pair_inputs(z, z2, p), q.value, rhs, q.error, cfg))
}

/// `φ(Z, Z′; k, s) = φ(Z′, Z; −k, 2−s)`, both sides by quadrature.
pub fn verify_product_symmetry(
    z: &DomainPoint,
    z2: &DomainPoint,
    p: SpectralParam,
    cfg: &QuadConfig,
) -> Result<IdentityReport> {
    let a = product_quadrature(z, z2, p, cfg)?;
    let b = product_quadrature(z2, z, SpectralParam::new(2.0 - p.s, -p.k), cfg)?;
    Ok(IdentityReport::new("product_symmetry", pair_inputs(z, z2, p), a.value, b.value, a.error + b.error, cfg))
}

/// `∫ P_k(Z, W; s) |ρ(W, W′)|^{2s−4} (ρ(W, W′)/|ρ(W, W′)|)^{2k} dm(W)
///   = π^{3/2} Γ(s−½)/((|k|+s−1) Γ(s)) 4^{s−1} P_k(Z, W′; 2−s)`.
///
/// The integrand is singular at `W′`. After translating `W′` to the origin the
/// ball `R < ε₀` is cut into dyadic shells down to depth 20; the remaining ball
/// is replaced by its leading term `P_k(Z, W′) · 2π ε^{2s−2}/(2s−2) · ∫e^{−2ikφ}dφ`.
pub fn verify_trivial_functional_eq(
    z: &DomainPoint,
    w2: &BoundaryPoint,
    p: SpectralParam,
    cfg: &QuadConfig,
) -> Result<IdentityReport> {
    cfg.validate()?;
    let s = p.s;
    let e = 2.0 * s - 2.0;
    if e.re <= 0.0 {
        return Err(Error::SingularityUnresolved(e.re));
    }
    let ak = p.k.unsigned_abs() as f64;
    if (s + ak - 1.0).norm() < crate::kernels::POLE_GUARD {
        return Err(Error::PoleAtPrefactor("1/(|k|+s−1)".into()));
    }
    let rhs = PI.powf(1.5) * gamma(s - 0.5) * rgamma(s) / (s + ak - 1.0)
        * ((s - 1.0) * 4f64.ln()).exp()
        * poisson_weight(z, w2, SpectralParam::new(2.0 - s, p.k))?.value;

    let zc = boundary_to_origin(w2).act(z)?;
    let k = p.k as f64;
    let f = |r: f64, phi: f64, psi: f64| {
        let pk = poisson_weight(&zc, &polar_point(r, phi, psi), p)?.value;
        Ok(pk * ((2.0 * s - 4.0) * r.ln()).exp() * C::from_polar(1.0, -2.0 * k * phi))
    };
    let angular = if radial(&zc) { 1 } else { cfg.angular };
    let g = Grid { cells: cfg.cells, order: cfg.order, angular };
    let eps0 = 0.125 * zc.z1.norm();
    let scale = cfg.trunc_radius.unwrap_or(zc.z1.norm());
    let outer = tensor(&f, eps0, scale, g)?;
    let outer_coarse = tensor(&f, eps0, scale, g.halved())?;

    let p0 = poisson_weight(&zc, &BoundaryPoint::origin(), p)?.value;
    let phi_mean = if p.k == 0 { PI } else { 0.0 };
    let ball = |eps: f64| p0 * 2.0 * PI * phi_mean * (e * eps.ln()).exp() / e;

    let phis = panels(-0.5 * PI, 0.5 * PI, g.phi_cells(), g.order);
    let taus = panels(0.0, 2f64.ln(), 1, g.order);
    let mut shells_total = C::new(0.0, 0.0);
    let mut total = outer + ball(eps0);
    let mut steps = vec![ShellStep { depth: 0, inner_radius: eps0, total, increment: f64::NAN }];
    let mut hi = eps0;
    for depth in 1..=MAX_DEPTH {
        let lo = hi / 2.0;
        let nodes: Vec<(f64, f64)> = taus.iter().map(|&(t, w)| (lo * t.exp(), w * lo * t.exp())).collect();
        shells_total += ordered_sum(&nodes, |r| ring_sum(&f, r, &phis, angular))?;
        let next = outer + shells_total + ball(lo);
        let increment = (next - total).norm();
        total = next;
        steps.push(ShellStep { depth, inner_radius: lo, total, increment });
        hi = lo;
        if increment <= 0.01 * cfg.rel_tol * total.norm() && depth >= 4 {
            break;
        }
    }
    let incs: Vec<f64> = steps.iter().skip(1).map(|s| s.increment).collect();
    let last = incs[incs.len() - 1];
    if incs.len() >= 3 && last > 0.01 * cfg.rel_tol * total.norm() && last >= incs[incs.len() - 3] {
        return Err(Error::SingularityUnresolved(last));
    }
    let quad_error = (outer - outer_coarse).norm() + last;
    let mut inputs = BTreeMap::from([
        ("Z".to_string(), fmt_point(z)),
        ("W2".to_string(), format!("{},{:?}", fmt_c(w2.w), w2.v)),
        ("k".to_string(), p.k.to_string()),
        ("s".to_string(), fmt_c(s)),
    ]);
    inputs.insert("shell_depth".to_string(), (steps.len() - 1).to_string());
    let id = if p.k == 0 { "trivial_functional_eq" } else { "trivial_functional_eq_k" };
    let mut report = IdentityReport::new(id, inputs, total, rhs, quad_error, cfg);
    report.shells = Some(steps);
    Ok(report)
}

/// Relative defect between the finite-difference Jacobian of `W ↦ gW` in the
/// coordinates `(Re w, Im w, v)` and `|j(g, W)|^{−4}`.
pub fn measure_jacobian_check(g: &GroupElement, w: &BoundaryPoint) -> Result<f64> {
    let map = |x: [f64; 3]| -> Result<[f64; 3]> {
        let b = g.act_boundary(&BoundaryPoint::new(C::new(x[0], x[1]), x[2]))?;
        Ok([b.w.re, b.w.im, b.v])
    };
    let x0 = [w.w.re, w.w.im, w.v];
    let h = 1e-3 * (1.0 + w.w.norm() + w.v.abs().sqrt());
    let mut jac = nalgebra::Matrix3::<f64>::zeros();
    for col in 0..3 {
        let shifted = |d: f64| {
            let mut x = x0;
            x[col] += d;
            map(x)
        };
        let (p1, m1, p2, m2) = (shifted(h)?, shifted(-h)?, shifted(2.0 * h)?, shifted(-2.0 * h)?);
        for row in 0..3 {
            jac[(row, col)] = (8.0 * (p1[row] - m1[row]) - (p2[row] - m2[row])) / (12.0 * h);
        }
    }
    let expected = cocycle_j(g, w).norm().powi(-4);
    Ok((jac.determinant().abs() - expected).abs() / expected)
}

/// Half-plane product formula
/// `∫_ℝ P_k(z, ζ; s) P_{−k}(z′, ζ; 1−s) dζ = K(z, z′; k, s) + K(z, z′; k, 1−s)`.
pub fn sl2_product_formula(z: C, z2: C, p: SpectralParam, cfg: &QuadConfig) -> Result<IdentityReport> {
    cfg.validate()?;
    let rhs = removable(p.s, |s| {
        Ok(sl2::green(z, z2, SpectralParam::new(s, p.k))? + sl2::green(z, z2, SpectralParam::new(1.0 - s, p.k))?)
    })?;
    let q = SpectralParam::new(1.0 - p.s, -p.k);
    let centre = 0.5 * (z.re + z2.re);
    let scale = cfg.trunc_radius.unwrap_or((z.im * z2.im).sqrt());
    let line = |cells: usize| -> Result<C> {
        let nodes: Vec<(f64, f64)> = panels(-1.0, 1.0, cells, cfg.order)
            .into_iter()
            .map(|(t, w)| {
                let th = 0.5 * PI * t;
                (centre + scale * th.tan(), w * scale * 0.5 * PI / (th.cos() * th.cos()))
            })
            .collect();
        ordered_sum(&nodes, |zeta| Ok(sl2::poisson_weight(z, zeta, p)? * sl2::poisson_weight(z2, zeta, q)?))
    };
    let mut cells = cfg.cells;
    let mut coarse = line(cells / 2)?;
    let mut fine = line(cells)?;
    while cfg.scheme == Scheme::Adaptive && (fine - coarse).norm() > cfg.rel_tol * fine.norm() && cells * 2 <= MAX_CELLS
    {
        cells *= 2;
        coarse = fine;
        fine = line(cells)?;
    }
    let inputs = BTreeMap::from([
        ("z".to_string(), fmt_c(z)),
        ("z2".to_string(), fmt_c(z2)),
        ("k".to_string(), p.k.to_string()),
        ("s".to_string(), fmt_c(p.s)),
    ]);
    Ok(IdentityReport::new("sl2_product_formula", inputs, fine, rhs, (fine - coarse).norm(), cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary_group::{random_element, random_point};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(z1: (f64, f64), z2: (f64, f64)) -> DomainPoint {
        DomainPoint::new(C::new(z1.0, z1.1), C::new(z2.0, z2.1))
    }

    #[test]
    fn legendre_nodes_are_exact_for_polynomials() {
        let gl = gauss_legendre(7);
        let sum: f64 = gl.iter().map(|&(x, w)| w * x.powi(12)).sum();
        assert!((sum - 2.0 / 13.0).abs() < 1e-15);
        assert!((gl.iter().map(|p| p.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_on_the_boundary() {
        let f = |w: &BoundaryPoint| Ok(C::from((-w.w.norm_sqr() - w.v * w.v).exp()));
        let q = integrate_boundary(&f, &QuadConfig::default()).unwrap();
        assert!((q.value.re - PI.powf(1.5)).abs() < 1e-9, "{:?}", q);
        assert!(q.decay_exponent.is_infinite());
    }

    #[test]
    fn poisson_integral_at_two() {
        let r = verify_poisson_integral(C::from(2.0), 1.0, &QuadConfig::default()).unwrap();
        assert!((r.rhs.re - 2.0 * PI * PI).abs() < 1e-12);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn poisson_integral_slow_decay() {
        let r = verify_poisson_integral(C::from(1.01), 1.0, &QuadConfig::default());
        assert!(matches!(r, Err(Error::SlowDecay(_))), "{r:?}");
    }

    #[test]
    fn product_formula_weight_zero_and_one() {
        let cfg = QuadConfig { rel_tol: 1e-7, ..Default::default() };
        let z = pt((0.5, 0.0), (0.0, 0.0));
        let z2 = pt((1.0, 0.3), (0.4, -0.2));
        for p in [SpectralParam::real(1.3, 0), SpectralParam::real(1.5, 1), SpectralParam::real(1.7, -1)] {
            let r = verify_product_formula(&z, &z2, p, &cfg).unwrap();
            assert!(r.rel_err < 1e-6, "{p:?} {r:?}");
        }
    }

    #[test]
    fn product_symmetry_holds() {
        let z = pt((0.8, 0.1), (0.2, 0.0));
        let z2 = pt((0.6, -0.4), (0.0, 0.3));
        let r = verify_product_symmetry(&z, &z2, SpectralParam::real(1.4, 1), &QuadConfig::default()).unwrap();
        assert!(r.rel_err < 1e-6, "{r:?}");
    }

    #[test]
    fn rotation_symmetry_is_exploited_consistently() {
        let z = pt((0.5, 0.0), (0.0, 0.0));
        let z2 = pt((1.5, 0.7), (0.0, 0.0));
        let p = SpectralParam::real(1.6, 0);
        let cfg = QuadConfig::default();
        let one = product_quadrature(&z, &z2, p, &cfg).unwrap();
        let g = center_at(&z);
        let (zc, z2c) = (g.act(&z).unwrap(), g.act(&z2).unwrap());
        let f = |w: &BoundaryPoint| {
            Ok(poisson_weight(&zc, w, p)?.value * poisson_weight(&z2c, w, SpectralParam::real(0.4, 0))?.value)
        };
        let full = integrate_boundary(&f, &QuadConfig { trunc_radius: Some(0.5), ..cfg }).unwrap();
        assert!((one.value - full.value).norm() < 1e-8 * one.value.norm());
    }

    #[test]
    fn trivial_functional_equation() {
        let cfg = QuadConfig::default();
        let z = pt((0.7, 0.2), (0.3, 0.1));
        let w2 = BoundaryPoint::new(C::new(0.2, -0.1), 0.3);
        for p in [SpectralParam::real(1.6, 0), SpectralParam::real(1.4, 1), SpectralParam::real(1.6, -1)] {
            let r = verify_trivial_functional_eq(&z, &w2, p, &cfg).unwrap();
            assert!(r.rel_err < 1e-5, "{p:?} {} {} {}", r.lhs, r.rhs, r.rel_err);
        }
        assert!(matches!(
            verify_trivial_functional_eq(&z, &w2, SpectralParam::real(0.9, 0), &cfg),
            Err(Error::SingularityUnresolved(_))
        ));
    }

    #[test]
    fn jacobian_matches_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let g = random_element(&mut rng, 0.5);
            let z = random_point(&mut rng, 0.5);
            let w = BoundaryPoint::new(z.z2, z.z1.im);
            assert!(measure_jacobian_check(&g, &w).unwrap() < 1e-7);
        }
    }

    #[test]
    fn sl2_formula() {
        let cfg = QuadConfig::default();
        for (k, s) in [(0, 0.3), (1, 0.6), (-1, 0.25), (0, 0.5)] {
            let r = sl2_product_formula(C::new(0.0, 1.0), C::new(0.4, 2.0), SpectralParam::real(s, k), &cfg).unwrap();
            assert!(r.rel_err < 1e-8, "{k} {s} {r:?}");
        }
        let same = sl2_product_formula(C::new(0.0, 1.0), C::new(0.0, 1.0), SpectralParam::real(0.3, 0), &cfg);
        assert!(matches!(same, Err(Error::CoincidentPoints(_))));
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(QuadConfig { cells: 4, ..Default::default() }.validate().is_err());
        assert!(QuadConfig { angular: 3, ..Default::default() }.validate().is_err());
        let parsed: std::result::Result<QuadConfig, _> = serde_json::from_str(r#"{"cells": 16, "bogus": 1}"#);
        assert!(parsed.is_err());
    }
}
