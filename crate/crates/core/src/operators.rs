//! Finite-difference realisation of the invariant operators and residual
//! checks for the eigen-equations, covariance and Casimir identities.
//!
//! Fields are complex-valued callbacks of two complex variables. Derivatives
//! are taken over the four real coordinates `(Re z₁, Im z₁, Re z₂, Im z₂)`
//! and combined into Wirtinger derivatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sigma, u_invariant};
use crate::kernels::{self, SpectralParam};
use crate::unitary_group::{cocycle_j, BoundaryPoint, DomainPoint, GroupElement};

type C = Complex64;

/// A scalar field of `(z₁, z₂)`; half-plane fields ignore the second argument.
pub type Field<'a> = dyn Fn(C, C) -> Result<C> + Sync + 'a;

const SCALE_EPS: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    pub h: f64,
    pub order: u8,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme { h: 1e-3, order: 2 }
    }
}

impl FdScheme {
    pub fn new(h: f64, order: u8) -> Result<Self> {
        if h.is_nan() || h <= 0.0 || !matches!(order, 2 | 4) {
            return Err(Error::InvalidParameter(format!("FD scheme h = {h}, order = {order}")));
        }
        Ok(FdScheme { h, order })
    }

    pub fn halved(&self) -> Self {
        FdScheme { h: self.h / 2.0, order: self.order }
    }

    /// First-derivative stencil as (offset in units of h, weight · h).
    fn first(&self) -> &'static [(f64, f64)] {
        if self.order == 4 {
            &[(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)]
        } else {
            &[(-1.0, -0.5), (1.0, 0.5)]
        }
    }

    /// Second-derivative stencil as (offset, weight · h²).
    fn second(&self) -> &'static [(f64, f64)] {
        if self.order == 4 {
            &[(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (0.0, -30.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)]
        } else {
            &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)]
        }
    }

    fn reach(&self) -> f64 {
        if self.order == 4 {
            2.0 * self.h
        } else {
            self.h
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorId {
    L,
    Lk,
    LalphaBeta,
    DeltaBall,
    DeltaKSl2,
    Xij(u8, u8),
    D1,
    D2,
}

/// Gradient and Hessian over `n` real coordinates.
struct Jet<const N: usize> {
    d1: [C; N],
    d2: [[C; N]; N],
}

fn to_real(z1: C, z2: C) -> [f64; 4] {
    [z1.re, z1.im, z2.re, z2.im]
}

fn from_real(x: &[f64; 4]) -> (C, C) {
    (C::new(x[0], x[1]), C::new(x[2], x[3]))
}

fn jet<const N: usize>(f: &dyn Fn(&[f64; N]) -> Result<C>, x: &[f64; N], sc: &FdScheme) -> Result<Jet<N>> {
    let h = sc.h;
    let at = |d: &[(usize, f64)]| {
        let mut y = *x;
        for &(i, o) in d {
            y[i] += o * h;
        }
        f(&y)
    };
    let f0 = f(x)?;
    let mut d1 = [C::new(0.0, 0.0); N];
    let mut d2 = [[C::new(0.0, 0.0); N]; N];
    for i in 0..N {
        for &(o, w) in sc.first() {
            d1[i] += w * at(&[(i, o)])?;
        }
        d1[i] /= h;
        for &(o, w) in sc.second() {
            let v = if o == 0.0 { f0 } else { at(&[(i, o)])? };
            d2[i][i] += w * v;
        }
        d2[i][i] /= h * h;
        for j in 0..i {
            let mut acc = C::new(0.0, 0.0);
            for &(oi, wi) in sc.first() {
                for &(oj, wj) in sc.first() {
                    acc += wi * wj * at(&[(i, oi), (j, oj)])?;
                }
            }
            d2[i][j] = acc / (h * h);
            d2[j][i] = d2[i][j];
        }
    }
    Ok(Jet { d1, d2 })
}

impl Jet<4> {
    /// `∂/∂z_a`.
    fn dz(&self, a: usize) -> C {
        0.5 * (self.d1[2 * a] - C::i() * self.d1[2 * a + 1])
    }

    /// `∂/∂z̄_a`.
    fn dzb(&self, a: usize) -> C {
        0.5 * (self.d1[2 * a] + C::i() * self.d1[2 * a + 1])
    }

    /// `∂²/∂z_a ∂z̄_b`.
    fn dz_dzb(&self, a: usize, b: usize) -> C {
        let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
        0.25 * (self.d2[xa][xb] + self.d2[ya][yb] + C::i() * (self.d2[xa][yb] - self.d2[ya][xb]))
    }
}

fn siegel_jet(f: &Field, z1: C, z2: C, sc: &FdScheme) -> Result<Jet<4>> {
    let r = sc.reach();
    // ρ over the stencil box is minimised at a corner; check it conservatively.
    let rho_min = 2.0 * (z1.re - 2.0 * r) - (z2.norm() + 2.0 * r).powi(2);
    if rho_min <= 0.0 {
        return Err(Error::StencilOutOfDomain(format!("ρ ≤ 0 within the stencil at ({z1}, {z2})")));
    }
    jet(
        &|x: &[f64; 4]| {
            let (a, b) = from_real(x);
            f(a, b)
        },
        &to_real(z1, z2),
        sc,
    )
}

fn ball_jet(f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<Jet<4>> {
    check_ball(w1, w2, sc)?;
    jet(
        &|x: &[f64; 4]| {
            let (a, b) = from_real(x);
            f(a, b)
        },
        &to_real(w1, w2),
        sc,
    )
}

fn check_ball(w1: C, w2: C, sc: &FdScheme) -> Result<()> {
    let r = (w1.norm_sqr() + w2.norm_sqr()).sqrt();
    if r + 3.0 * sc.reach() * 2f64.sqrt() >= 1.0 {
        return Err(Error::StencilOutOfDomain(format!("stencil leaves the ball at ({w1}, {w2})")));
    }
    Ok(())
}

/// `L_{(α,β)} f = ρ[(z₁+z̄₁)∂₁∂̄₁ + ∂₂∂̄₂ + z₂∂̄₁∂₂ + z̄₂∂₁∂̄₂ + β∂₁ + α∂̄₁]`.
pub fn l_alpha_beta(f: &Field, z1: C, z2: C, alpha: C, beta: C, sc: &FdScheme) -> Result<C> {
    let j = siegel_jet(f, z1, z2, sc)?;
    let rho = z1 + z1.conj() - z2 * z2.conj();
    Ok(rho
        * ((z1 + z1.conj()) * j.dz_dzb(0, 0)
            + j.dz_dzb(1, 1)
            + z2 * j.dz_dzb(1, 0)
            + z2.conj() * j.dz_dzb(0, 1)
            + beta * j.dz(0)
            + alpha * j.dzb(0)))
}

/// The Laplace–Beltrami operator `L` of the Siegel domain.
pub fn l_op(f: &Field, z1: C, z2: C, sc: &FdScheme) -> Result<C> {
    l_alpha_beta(f, z1, z2, C::new(0.0, 0.0), C::new(0.0, 0.0), sc)
}

/// `L_k = L_{(k,−k)}`, i.e. `L − kρ(∂₁ − ∂̄₁)`.
pub fn l_k(f: &Field, z1: C, z2: C, k: i32, sc: &FdScheme) -> Result<C> {
    let k = C::from(k as f64);
    l_alpha_beta(f, z1, z2, k, -k, sc)
}

/// The ball Laplacian `Δ`.
pub fn delta_ball(f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<C> {
    let j = ball_jet(f, w1, w2, sc)?;
    let (n1, n2) = (w1.norm_sqr(), w2.norm_sqr());
    Ok((1.0 - n1 - n2)
        * ((1.0 - n1) * j.dz_dzb(0, 0) + (1.0 - n2) * j.dz_dzb(1, 1)
            - w1 * w2.conj() * j.dz_dzb(0, 1)
            - w1.conj() * w2 * j.dz_dzb(1, 0)))
}

/// `Δ_k = −(z−z̄)²∂∂̄ − k(z−z̄)(∂ + ∂̄)` on the upper half-plane.
pub fn delta_k_sl2(f: &Field, z: C, k: i32, sc: &FdScheme) -> Result<C> {
    if z.im - sc.reach() <= 0.0 {
        return Err(Error::StencilOutOfDomain(format!("stencil leaves the half-plane at {z}")));
    }
    let j = jet(&|x: &[f64; 2]| f(C::new(x[0], x[1]), C::new(0.0, 0.0)), &[z.re, z.im], sc)?;
    let d = z - z.conj();
    let lap = 0.25 * (j.d2[0][0] + j.d2[1][1]);
    Ok(-d * d * lap - (k as f64) * d * j.d1[0])
}

/// Wirtinger gradient `(∂w₁, ∂w₂, ∂w̄₁, ∂w̄₂)` by first-order stencils only.
fn wirtinger_grad(f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<[C; 4]> {
    let x = to_real(w1, w2);
    let mut d = [C::new(0.0, 0.0); 4];
    for (i, di) in d.iter_mut().enumerate() {
        for &(o, wt) in sc.first() {
            let mut y = x;
            y[i] += o * sc.h;
            let (a, b) = from_real(&y);
            *di += wt * f(a, b)?;
        }
        *di /= sc.h;
    }
    let i = C::i();
    Ok([0.5 * (d[0] - i * d[1]), 0.5 * (d[2] - i * d[3]), 0.5 * (d[0] + i * d[1]), 0.5 * (d[2] + i * d[3])])
}

/// Coefficients of `X_{ij}` against `(∂w₁, ∂w₂, ∂w̄₁, ∂w̄₂)`.
fn x_coeffs(i: u8, j: u8, w1: C, w2: C) -> Result<[C; 4]> {
    let (c1, c2) = (w1.conj(), w2.conj());
    let o = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    Ok(match (i, j) {
        (1, 1) => [w1, o, -c1, o],
        (2, 2) => [o, w2, o, -c2],
        (3, 3) => [-w1, -w2, c1, c2],
        (1, 2) => [w2, o, o, -c1],
        (2, 1) => [o, w1, -c2, o],
        (1, 3) => [one, o, -c1 * c1, -c1 * c2],
        (3, 1) => [-w1 * w1, -w1 * w2, one, o],
        (2, 3) => [o, one, -c1 * c2, -c2 * c2],
        (3, 2) => [-w1 * w2, -w2 * w2, o, one],
        _ => return Err(Error::InvalidParameter(format!("X_{{{i}{j}}} is not defined"))),
    })
}

/// `X_{ij} f` at a ball point.
pub fn x_ij(i: u8, j: u8, f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<C> {
    let c = x_coeffs(i, j, w1, w2)?;
    let g = wirtinger_grad(f, w1, w2, sc)?;
    Ok(c.iter().zip(g.iter()).map(|(a, b)| a * b).sum())
}

/// `X_{a₁} X_{a₂} ⋯ f`, composing first-order stencils from the right.
fn word(ops: &[(u8, u8)], f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<C> {
    match ops.split_first() {
        None => f(w1, w2),
        Some((&(i, j), rest)) => {
            let inner = |a: C, b: C| word(rest, f, a, b, sc);
            x_ij(i, j, &inner, w1, w2, sc)
        }
    }
}

/// `D₁ = 2(X₁₁² + X₂₂² + X₁₁X₂₂ + X₁₂X₂₁ + X₂₃X₃₂ + X₃₁X₁₃)`.
pub fn d1(f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<C> {
    const WORDS: [[(u8, u8); 2]; 6] =
        [[(1, 1), (1, 1)], [(2, 2), (2, 2)], [(1, 1), (2, 2)], [(1, 2), (2, 1)], [(2, 3), (3, 2)], [(3, 1), (1, 3)]];
    let mut acc = C::new(0.0, 0.0);
    for w in &WORDS {
        acc += word(w, f, w1, w2, sc)?;
    }
    Ok(2.0 * acc)
}

/// `D₂ = 3[X₁₁(X₁₂X₂₁ − X₃₂X₂₃ − X₂₂²) + X₂₂(X₂₁X₁₂ − X₃₁X₁₃ − X₁₁²)
///        + X₂₃X₃₁X₁₂ + X₁₃X₃₂X₂₁ − X₃₁X₁₃ − X₃₂X₂₃ + X₁₁ + X₂₂]`.
pub fn d2(f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<C> {
    let terms: [(f64, &[(u8, u8)]); 12] = [
        (1.0, &[(1, 1), (1, 2), (2, 1)]),
        (-1.0, &[(1, 1), (3, 2), (2, 3)]),
        (-1.0, &[(1, 1), (2, 2), (2, 2)]),
        (1.0, &[(2, 2), (2, 1), (1, 2)]),
        (-1.0, &[(2, 2), (3, 1), (1, 3)]),
        (-1.0, &[(2, 2), (1, 1), (1, 1)]),
        (1.0, &[(2, 3), (3, 1), (1, 2)]),
        (1.0, &[(1, 3), (3, 2), (2, 1)]),
        (-1.0, &[(3, 1), (1, 3)]),
        (-1.0, &[(3, 2), (2, 3)]),
        (1.0, &[(1, 1)]),
        (1.0, &[(2, 2)]),
    ];
    let mut acc = C::new(0.0, 0.0);
    for (c, w) in terms {
        acc += c * word(w, f, w1, w2, sc)?;
    }
    Ok(3.0 * acc)
}

/// Dispatch by operator id. Ball operators read `at` as `(w₁, w₂)`; `Δ_k` reads `at.0` as `z`.
/// `L_{(α,β)}` takes `(α, β) = (s, k)` from the spectral parameter slot.
pub fn apply_operator(op: OperatorId, f: &Field, at: (C, C), sc: &FdScheme, p: SpectralParam) -> Result<C> {
    let (a, b) = at;
    match op {
        OperatorId::L => l_op(f, a, b, sc),
        OperatorId::Lk => l_k(f, a, b, p.k, sc),
        OperatorId::LalphaBeta => l_alpha_beta(f, a, b, p.s, C::from(p.k as f64), sc),
        OperatorId::DeltaBall => delta_ball(f, a, b, sc),
        OperatorId::DeltaKSl2 => delta_k_sl2(f, a, p.k, sc),
        OperatorId::Xij(i, j) => x_ij(i, j, f, a, b, sc),
        OperatorId::D1 => {
            check_ball(a, b, sc)?;
            d1(f, a, b, sc)
        }
        OperatorId::D2 => {
            check_ball(a, b, sc)?;
            d2(f, a, b, sc)
        }
    }
}

fn scaled(r: C, f: C) -> f64 {
    r.norm() / f.norm().max(SCALE_EPS)
}

/// Which eigenfunction an eigen-residual probes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EigenKind {
    /// `P(·, W)^s` under `L`.
    Poisson(BoundaryPoint),
    /// `P_k(·, W; s)` under `L_k`.
    PoissonK(BoundaryPoint),
    /// `r(·, Z′; s)` under `L`.
    GreenRadial(DomainPoint),
    /// `K(·, Z′; k, s)` under `L_k`.
    KernelK(DomainPoint),
    /// `j(γ,Z)^{−k} j̄(γ,Z)^k P_k(γZ, W; s)` under `L_k`.
    EisTerm(GroupElement, BoundaryPoint),
}

/// `|Op f − s(s−2) f| / |f|` at `at`.
pub fn eigen_residual(kind: EigenKind, p: SpectralParam, at: &DomainPoint, sc: &FdScheme) -> Result<f64> {
    let lam = p.lambda();
    let (z1, z2) = (at.z1, at.z2);
    let (f, apply): (Box<Field>, bool) = match kind {
        EigenKind::Poisson(w) => (Box::new(move |a, b| kernels::poisson_pow(&DomainPoint::new(a, b), &w, p.s)), false),
        EigenKind::PoissonK(w) => {
            (Box::new(move |a, b| Ok(kernels::poisson_weight(&DomainPoint::new(a, b), &w, p)?.value)), true)
        }
        EigenKind::GreenRadial(z) => (Box::new(move |a, b| kernels::r_kernel(&DomainPoint::new(a, b), &z, p.s)), false),
        EigenKind::KernelK(z) => {
            (Box::new(move |a, b| Ok(kernels::kernel_weight(&DomainPoint::new(a, b), &z, p)?.value)), true)
        }
        EigenKind::EisTerm(g, w) => (
            Box::new(move |a, b| {
                let z = DomainPoint::new(a, b);
                let j = cocycle_j(&g, &z);
                let ph = (j.conj() / j).powi(p.k);
                Ok(ph * kernels::poisson_weight(&g.act(&z)?, &w, p)?.value)
            }),
            true,
        ),
    };
    let lf = if apply { l_k(&*f, z1, z2, p.k, sc)? } else { l_op(&*f, z1, z2, sc)? };
    let f0 = f(z1, z2)?;
    Ok(scaled(lf - lam * f0, f0))
}

/// `|Δ_k f − s(s−1) f| / |f|` on the upper half-plane.
pub fn eigen_residual_sl2(f: &Field, s: C, k: i32, z: C, sc: &FdScheme) -> Result<f64> {
    let lf = delta_k_sl2(f, z, k, sc)?;
    let f0 = f(z, C::new(0.0, 0.0))?;
    Ok(scaled(lf - s * (s - 1.0) * f0, f0))
}

/// Covariance defect
/// `|L_k[f(g·) j^{−k} j̄^k](Z) − j^{−k} j̄^k (L_k f)(gZ)| / |f(gZ)|`.
pub fn covariance_residual(g: &GroupElement, f: &Field, at: &DomainPoint, k: i32, sc: &FdScheme) -> Result<f64> {
    let pulled = |a: C, b: C| {
        let z = DomainPoint::new(a, b);
        let gz = g.act(&z)?;
        Ok(f(gz.z1, gz.z2)? * pulled_factor(g, &z, k))
    };
    let lhs = l_k(&pulled, at.z1, at.z2, k, sc)?;
    let gz = g.act(at)?;
    let rhs = pulled_factor(g, at, k) * l_k(f, gz.z1, gz.z2, k, sc)?;
    Ok(scaled(lhs - rhs, f(gz.z1, gz.z2)?))
}

/// `j(g,Z)^{−k} conj(j(g,Z))^k`.
fn pulled_factor(g: &GroupElement, z: &DomainPoint, k: i32) -> C {
    let j = cocycle_j(g, z);
    j.powi(-k) * j.conj().powi(k)
}

/// Per-term annihilation defect `|L_{(α,β)}[j^{−α} j̄^{−β}]| / |j^{−α} j̄^{−β}|`.
pub fn annihilation_residual(alpha: C, beta: C, g: &GroupElement, z: &DomainPoint, sc: &FdScheme) -> Result<f64> {
    let j0 = cocycle_j(g, z);
    if j0.norm() < 1e-14 {
        return Err(Error::DenominatorVanishes(j0.norm()));
    }
    let f = |a: C, b: C| {
        let j = cocycle_j(g, &DomainPoint::new(a, b));
        Ok(j.powc(-alpha) * j.conj().powc(-beta))
    };
    let v = l_alpha_beta(&f, z.z1, z.z2, alpha, beta, sc)?;
    Ok(scaled(v, f(z.z1, z.z2)?))
}

/// Residuals `(|D₁f − 2Δf|, |D₂f + 3Δf|)`, each over `max(|f|, |Δf|)`.
pub fn casimir_residual(f: &Field, w1: C, w2: C, sc: &FdScheme) -> Result<(f64, f64)> {
    check_ball(w1, w2, sc)?;
    let lap = delta_ball(f, w1, w2, sc)?;
    let a = d1(f, w1, w2, sc)?;
    let b = d2(f, w1, w2, sc)?;
    let scale = f(w1, w2)?.norm().max(lap.norm()).max(SCALE_EPS);
    Ok(((a - 2.0 * lap).norm() / scale, (b + 3.0 * lap).norm() / scale))
}

/// Second-order (or fourth-order) 1-D derivatives of a radial profile.
fn radial_derivs(f: &dyn Fn(f64) -> Result<C>, x: f64, h: f64) -> Result<(C, C, C)> {
    let f0 = f(x)?;
    let (fp, fm) = (f(x + h)?, f(x - h)?);
    let (fp2, fm2) = (f(x + 2.0 * h)?, f(x - 2.0 * h)?);
    let d1 = (-fp2 + 8.0 * fp - 8.0 * fm + fm2) / (12.0 * h);
    let d2 = (-fp2 + 16.0 * fp - 30.0 * f0 + 16.0 * fm - fm2) / (12.0 * h * h);
    Ok((f0, d1, d2))
}

fn term_scaled(terms: &[C]) -> f64 {
    let sum: C = terms.iter().sum();
    let scale = terms.iter().map(|t| t.norm()).fold(SCALE_EPS, f64::max);
    sum.norm() / scale
}

/// Radial equation `u(u+1)f″ + (3u+2)f′ + s(2−s)f = 0` for `f = φ_s`,
/// normalised by the largest term; step `h·max(u, 1)`.
pub fn green_ode_residual(u: f64, s: C, h: f64) -> Result<f64> {
    let step = h * u.max(1.0).min(u.max(h * 10.0) / 4.0).max(h);
    let (f, d1, d2) = radial_derivs(&|x| kernels::green_radial(x, s), u, step)?;
    Ok(term_scaled(&[u * (u + 1.0) * d2, (3.0 * u + 2.0) * d1, s * (2.0 - s) * f]))
}

/// The weight-k profile `Φ(σ) = σ^{−|k|}(σ−1)^{|k|−s} F(s−|k|, s−1−|k|; 2s−1; −1/(σ−1))`.
pub fn phi_profile(sig: f64, k: i32, s: C) -> Result<C> {
    let ak = k.unsigned_abs() as f64;
    let f = crate::hypergeometric::f21(s - ak, s - 1.0 - ak, 2.0 * s - 1.0, C::from(-1.0 / (sig - 1.0)))?;
    Ok(sig.powf(-ak) * ((ak - s) * (sig - 1.0).ln()).exp() * f)
}

/// `Φ″ + (1/σ + 2/(σ−1))Φ′ + [k²/σ − s(s−2)]Φ/(σ(σ−1)) = 0`, normalised by the largest term.
pub fn weight_ode_residual(sig: f64, k: i32, s: C, h: f64) -> Result<f64> {
    let step = h * (sig - 1.0).min(1.0).max(h);
    let (f, d1, d2) = radial_derivs(&|x| phi_profile(x, k, s), sig, step)?;
    let kk = (k * k) as f64;
    Ok(term_scaled(&[d2, (1.0 / sig + 2.0 / (sig - 1.0)) * d1, (kk / sig - s * (s - 2.0)) / (sig * (sig - 1.0)) * f]))
}

/// Radial form `L f(u(·, Z′)) = u(u+1)f″ + (3u+2)f′`, for a profile with known derivatives.
pub fn radial_form_residual(
    prof: &(dyn Fn(f64) -> (f64, f64, f64) + Sync),
    z: &DomainPoint,
    z2: &DomainPoint,
    sc: &FdScheme,
) -> Result<f64> {
    let zz = *z2;
    let f = move |a: C, b: C| Ok(C::from(prof(u_invariant(&DomainPoint::new(a, b), &zz)).0));
    let lhs = l_op(&f, z.z1, z.z2, sc)?;
    let u = u_invariant(z, z2);
    let (v, d1, d2) = prof(u);
    let rhs = u * (u + 1.0) * d2 + (3.0 * u + 2.0) * d1;
    Ok((lhs - rhs).norm() / rhs.abs().max(v.abs()).max(SCALE_EPS))
}

/// Weighted radial form `L_k[H_k Φ(σ)] = H_k[(σ²−σ)Φ″ + (3σ−1)Φ′ + (k²/σ)Φ]`.
pub fn weight_radial_form_residual(
    prof: &(dyn Fn(f64) -> (f64, f64, f64) + Sync),
    k: i32,
    z: &DomainPoint,
    w: &DomainPoint,
    sc: &FdScheme,
) -> Result<f64> {
    let ww = *w;
    let f = move |a: C, b: C| {
        let p = DomainPoint::new(a, b);
        Ok(kernels::h_k(&p, &ww, k)? * prof(sigma(&p, &ww)).0)
    };
    let lhs = l_k(&f, z.z1, z.z2, k, sc)?;
    let sg = sigma(z, w);
    let (v, d1, d2) = prof(sg);
    let h = kernels::h_k(z, w, k)?;
    let rhs = h * ((sg * sg - sg) * d2 + (3.0 * sg - 1.0) * d1 + (k * k) as f64 / sg * v);
    Ok((lhs - rhs).norm() / rhs.norm().max(v.abs()).max(SCALE_EPS))
}

/// Ratio `r(h)/r(h/2)` of a residual under one halving (≈ 2^order when FD-dominated).
pub fn richardson_ratio(res: impl Fn(&FdScheme) -> Result<f64>, sc: &FdScheme) -> Result<(f64, f64, f64)> {
    let a = res(sc)?;
    let b = res(&sc.halved())?;
    Ok((a, b, a / b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary_group::{iwasawa_make, random_element, IwasawaData};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(a: f64, b: f64) -> C {
        C::new(a, b)
    }

    fn z0() -> DomainPoint {
        DomainPoint::from_horospherical(0.8, 0.3, c(0.2, -0.4))
    }

    #[test]
    fn constant_is_annihilated() {
        let one = |_: C, _: C| Ok(c(1.0, 0.0));
        let z = z0();
        assert_eq!(l_op(&one, z.z1, z.z2, &FdScheme::default()).unwrap(), c(0.0, 0.0));
        let (r1, r2) = casimir_residual(&one, c(0.2, 0.1), c(-0.3, 0.2), &FdScheme::default()).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12);
    }

    #[test]
    fn poisson_eigen_and_richardson() {
        let w = BoundaryPoint::new(c(0.3, 0.5), -0.2);
        let p = SpectralParam::real(1.7, 0);
        let sc = FdScheme::default();
        let r = eigen_residual(EigenKind::Poisson(w), p, &z0(), &sc).unwrap();
        assert!(r < 1e-5, "{r}");
        let (_, _, ratio) =
            richardson_ratio(|s| eigen_residual(EigenKind::Poisson(w), SpectralParam::real(1.5, 0), &z0(), s), &sc)
                .unwrap();
        assert!((ratio - 4.0).abs() < 0.8, "{ratio}");
    }

    #[test]
    fn weight_k_eigen() {
        let w = BoundaryPoint::new(c(0.3, 0.5), -0.2);
        let sc = FdScheme::default();
        for k in [-1, 1] {
            let p = SpectralParam::real(1.6, k);
            let r = eigen_residual(EigenKind::PoissonK(w), p, &z0(), &sc).unwrap();
            assert!(r < 1e-5, "k={k}: {r}");
        }
    }

    #[test]
    fn sl2_power() {
        let s = c(1.3, 0.0);
        let f = move |z: C, _: C| Ok((s * z.im.ln()).exp());
        let r = eigen_residual_sl2(&f, s, 0, c(0.4, 1.2), &FdScheme::default()).unwrap();
        assert!(r < 1e-5, "{r}");
    }

    #[test]
    fn covariance_identity_and_k0() {
        let f = |a: C, b: C| Ok(a * b.conj() * b.conj());
        let sc = FdScheme::default();
        let z = z0();
        assert!(covariance_residual(&GroupElement::identity(), &f, &z, 1, &sc).unwrap() < 1e-9);
        let g = iwasawa_make(&IwasawaData { z: c(0.3, -0.2), t: 0.4, rho: 1.3, beta: c(0.6, 0.8) }).unwrap();
        assert!(covariance_residual(&g, &f, &z, 1, &sc).unwrap() < 1e-5);
        assert!(covariance_residual(&g, &f, &z, 0, &sc).unwrap() < 1e-5);
    }

    #[test]
    fn annihilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_element(&mut rng, 0.5);
        let r = annihilation_residual(c(3.0, 0.0), c(0.0, 0.0), &g, &z0(), &FdScheme::default()).unwrap();
        assert!(r < 1e-5, "{r}");
        let r = annihilation_residual(c(1.0, 0.0), c(-1.0, 0.0), &g, &z0(), &FdScheme::default()).unwrap();
        assert!(r < 1e-5, "{r}");
        assert_eq!(
            annihilation_residual(c(3.0, 0.0), c(0.5, 0.0), &GroupElement::identity(), &z0(), &FdScheme::default())
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn casimir_examples() {
        let sc = FdScheme::new(1e-3, 4).unwrap();
        let f = |a: C, _: C| Ok(a * a.conj());
        let (r1, r2) = casimir_residual(&f, c(0.2, 0.1), c(-0.3, 0.2), &sc).unwrap();
        assert!(r1 < 1e-3 && r2 < 1e-3, "{r1} {r2}");
        let g = |a: C, b: C| Ok(a * a.conj() + b * b.conj());
        let (r1, r2) = casimir_residual(&g, c(0.1, -0.3), c(0.25, 0.2), &sc).unwrap();
        assert!(r1 < 1e-3 && r2 < 1e-3, "{r1} {r2}");
    }

    #[test]
    fn radial_odes() {
        for &u in &[0.1, 0.5, 2.0, 10.0] {
            assert!(green_ode_residual(u, c(1.4, 0.0), 1e-3).unwrap() < 1e-6);
        }
        for k in -1..=1 {
            for &sg in &[1.2, 2.0, 6.0] {
                let r = weight_ode_residual(sg, k, c(1.6, 0.0), 1e-3).unwrap();
                assert!(r < 1e-6, "k={k} σ={sg}: {r}");
            }
        }
    }

    #[test]
    fn kernel_and_series_terms() {
        let sc = FdScheme::default();
        let z2 = DomainPoint::from_horospherical(0.5, -0.6, c(0.4, 0.3));
        let w = BoundaryPoint::new(c(-0.2, 0.7), 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = random_element(&mut rng, 0.5);
        for k in -1..=1 {
            let p = SpectralParam::real(1.35, k);
            let r = eigen_residual(EigenKind::KernelK(z2), p, &z0(), &sc).unwrap();
            assert!(r < 1e-5, "kernel k={k}: {r}");
            let r = eigen_residual(EigenKind::EisTerm(g, w), p, &z0(), &sc).unwrap();
            assert!(r < 1e-5, "term k={k}: {r}");
        }
        let r = eigen_residual(EigenKind::GreenRadial(z2), SpectralParam::real(1.35, 0), &z0(), &sc).unwrap();
        assert!(r < 1e-5, "{r}");
    }

    #[test]
    fn radial_forms() {
        let sc = FdScheme::default();
        let z2 = DomainPoint::from_horospherical(0.5, -0.6, c(0.4, 0.3));
        let prof = |u: f64| (1.0 / (1.0 + u).powi(2), -2.0 / (1.0 + u).powi(3), 6.0 / (1.0 + u).powi(4));
        assert!(radial_form_residual(&prof, &z0(), &z2, &sc).unwrap() < 1e-5);
        for k in -1..=1 {
            let r = weight_radial_form_residual(&prof, k, &z0(), &z2, &sc).unwrap();
            assert!(r < 1e-5, "k={k}: {r}");
        }
    }

    #[test]
    fn stencil_guard() {
        let f = |a: C, _: C| Ok(a);
        let edge = DomainPoint::new(c(1e-4, 0.0), c(0.0, 0.0));
        assert!(matches!(l_op(&f, edge.z1, edge.z2, &FdScheme::default()), Err(Error::StencilOutOfDomain(_))));
    }
}
