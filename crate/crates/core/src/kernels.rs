//! Poisson kernels, radial Green kernels and the weight factor `H_k`, on the
//! Siegel domain and on the upper half-plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{rho_pair, u_invariant};
use crate::hypergeometric::{f21, gamma, rgamma};
use crate::unitary_group::{cocycle_j, BoundaryPoint, Coords, DomainPoint, GroupElement};

type C = Complex64;

/// Distance to a prefactor pole below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-8;
const COLLISION_TOL: f64 = 1e-14;
const COINCIDENT_TOL: f64 = 1e-12;

/// Spectral parameter `s` and weight `k`; the eigenvalue of `L` is `s(s−2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    pub s: C,
    pub k: i32,
}

impl SpectralParam {
    pub fn new(s: C, k: i32) -> Self {
        SpectralParam { s, k }
    }

    pub fn real(s: f64, k: i32) -> Self {
        SpectralParam { s: C::from(s), k }
    }

    pub fn lambda(&self) -> C {
        self.s * (self.s - 2.0)
    }

    /// `(2 − s, k)`.
    pub fn reflected(&self) -> Self {
        SpectralParam { s: 2.0 - self.s, k: self.k }
    }
}

/// A kernel value with the argument of the pairing that fed its complex powers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C,
    /// `arg ρ(Z, W)` (principal value).
    pub arg: f64,
    /// Set when the pairing sits within 1e−6 of the negative real axis.
    pub branch_warning: bool,
}

impl KernelValue {
    fn new(value: C, pairing: C) -> Self {
        let arg = pairing.arg();
        KernelValue { value, arg, branch_warning: PI - arg.abs() < 1e-6 }
    }
}

fn guard(s: C, pole: f64, what: &str) -> Result<()> {
    if (s - pole).norm() < POLE_GUARD {
        Err(Error::PoleAtPrefactor(format!("{what} at s = {s}")))
    } else {
        Ok(())
    }
}

fn nonzero_pairing(z: &impl Coords, w: &impl Coords) -> Result<C> {
    let r = rho_pair(z, w);
    if r.norm() < COLLISION_TOL {
        Err(Error::BoundaryCollision(r.norm()))
    } else {
        Ok(r)
    }
}

/// `P(Z, W) = ρ(Z)/|ρ(Z, W)|²`.
pub fn poisson(z: &DomainPoint, w: &BoundaryPoint) -> Result<f64> {
    let r = nonzero_pairing(z, w)?;
    Ok(z.rho() / r.norm_sqr())
}

/// `P(Z, W)^s`; `P > 0`, so `exp(s log P)` is unambiguous.
pub fn poisson_pow(z: &DomainPoint, w: &BoundaryPoint, s: C) -> Result<C> {
    Ok((s * poisson(z, w)?.ln()).exp())
}

/// `(ρ/|ρ|)^{2k}` for a nonzero pairing `ρ`.
fn phase_pow(r: C, k: i32) -> C {
    (r / r.norm()).powi(2 * k)
}

/// `P_k(Z, W; s) = ρ(Z)^s ρ(Z,W)^{k−s} ρ(Z̄,W̄)^{−k−s}`.
///
/// On principal branches this is `P^s (ρ/|ρ|)^{2k}`, which is how it is evaluated.
pub fn poisson_weight(z: &DomainPoint, w: &BoundaryPoint, p: SpectralParam) -> Result<KernelValue> {
    let r = nonzero_pairing(z, w)?;
    let ps = (p.s * (z.rho() / r.norm_sqr()).ln()).exp();
    let value = if p.k == 0 { ps } else { ps * phase_pow(r, p.k) };
    Ok(KernelValue::new(value, r))
}

/// `P_k` with the three complex powers taken literally, as a cross-check of the phase form.
pub fn poisson_weight_literal(z: &DomainPoint, w: &BoundaryPoint, p: SpectralParam) -> Result<C> {
    let r = nonzero_pairing(z, w)?;
    let rb = r.conj();
    Ok(C::from(z.rho()).powc(p.s) * r.powc(p.k as f64 - p.s) * rb.powc(-(p.k as f64) - p.s))
}

/// `|j|^{−2s} (j/|j|)^{2k}`, the branch-free form of `j^{k−s} j̄^{−k−s}`.
fn cocycle_factor(j: C, p: SpectralParam) -> C {
    (-p.s * j.norm_sqr().ln()).exp() * phase_pow(j, p.k)
}

/// Relative defect of the weight-k transformation law
/// `P_k(γZ, W; s) = P_k(Z, γ⁻¹W; s)(j/j̄)^k(γ,Z)·j(γ⁻¹,W)^{k−s} j̄(γ⁻¹,W)^{−k−s}`.
/// For `k = 0` this is `P(γZ, W)^s = |j(γ⁻¹,W)|^{−2s} P(Z, γ⁻¹W)^s`.
pub fn poisson_transform_residual(
    g: &GroupElement,
    z: &DomainPoint,
    w: &BoundaryPoint,
    p: SpectralParam,
) -> Result<f64> {
    let gi = g.inverse();
    let lhs = poisson_weight(&g.act(z)?, w, p)?.value;
    let jz = cocycle_j(g, z);
    let jw = cocycle_j(&gi, w);
    let rhs = poisson_weight(z, &gi.act_boundary(w)?, p)?.value * phase_pow(jz, p.k) * cocycle_factor(jw, p);
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// `H_k(Z, W) = ρ(Z,W)^{2k}/|ρ(Z,W)|^{2k} = ρ(Z,W)^k ρ(Z̄,W̄)^{−k}`.
pub fn h_k(z: &impl Coords, w: &impl Coords, k: i32) -> Result<C> {
    Ok(phase_pow(nonzero_pairing(z, w)?, k))
}

/// `c(s) = √π Γ(s−½)/Γ(s)`.
pub fn c_fn(s: C) -> C {
    PI.sqrt() * gamma(s - 0.5) * rgamma(s)
}

/// `φ_s(u) = Γ(s)/(√π Γ(s−½)) (1/4)^{s−1} u^{−s} F(s, s−1; 2s−1; −1/u)`.
pub fn green_radial(u: f64, s: C) -> Result<C> {
    if u <= 0.0 {
        return Err(Error::SingularAtZero(u));
    }
    let nearest = s.re.round();
    if nearest <= 0.0 {
        guard(s, nearest, "Γ(s)")?;
    }
    let pre = gamma(s) * rgamma(s - 0.5) / PI.sqrt() * (C::from(4.0f64.ln()) * (1.0 - s)).exp();
    let f = f21(s, s - 1.0, 2.0 * s - 1.0, C::from(-1.0 / u))?;
    Ok(pre * (-s * u.ln()).exp() * f)
}

/// `r(Z, Z′; s) = φ_s(u(Z, Z′))`.
pub fn r_kernel(z: &DomainPoint, z2: &DomainPoint, s: C) -> Result<C> {
    green_radial(u_invariant(z, z2), s)
}

/// Prefactor `π^{3/2} Γ(3/2−s)/((|k|+1−s) Γ(2−s)) (1/4)^{s−1}` of the weight-k kernel.
pub fn kernel_prefactor(k: i32, s: C) -> Result<C> {
    let ak = k.unsigned_abs() as f64;
    guard(s, ak + 1.0, "1/(|k|+1−s)")?;
    let nearest = (s.re - 1.5).round() + 1.5;
    if nearest >= 1.5 {
        guard(s, nearest, "Γ(3/2−s)")?;
    }
    Ok(PI.powf(1.5) * gamma(1.5 - s) * rgamma(2.0 - s) / (ak + 1.0 - s) * (C::from(4.0f64.ln()) * (1.0 - s)).exp())
}

/// The real radial part of `K(Z, Z′; k, s)` written in `u = σ − 1`:
/// prefactor · `σ^{−|k|} u^{|k|−s} F(s−|k|, s−1−|k|; 2s−1; −1/u)`.
pub fn kernel_radial(u: f64, k: i32, s: C) -> Result<C> {
    if u < COINCIDENT_TOL {
        return Err(Error::CoincidentPoints(u));
    }
    let ak = k.unsigned_abs() as f64;
    let pre = kernel_prefactor(k, s)?;
    let f = f21(s - ak, s - 1.0 - ak, 2.0 * s - 1.0, C::from(-1.0 / u))?;
    Ok(pre * (1.0 + u).powf(-ak) * ((ak - s) * u.ln()).exp() * f)
}

/// `K(Z, Z′; k, s) = H_k(Z, Z′) × kernel_radial(u, k, s)`.
pub fn kernel_weight(z: &DomainPoint, z2: &DomainPoint, p: SpectralParam) -> Result<KernelValue> {
    let u = u_invariant(z, z2);
    let radial = kernel_radial(u, p.k, p.s)?;
    let r = rho_pair(z, z2);
    Ok(KernelValue::new(radial * phase_pow(r, p.k), r))
}

const REMOVABLE_RADIUS: f64 = 0.02;
const REMOVABLE_NODES: usize = 12;

/// Evaluate an `s`-analytic sum of individually singular terms. Near `2s ∈ ℤ`
/// the terms have cancelling poles, so the value is taken as the mean over a
/// small circle around `s` (exact for analytic functions up to `ε^N`).
pub fn removable(s: C, f: impl Fn(C) -> Result<C>) -> Result<C> {
    let near = (2.0 * s.re).round() / 2.0;
    if (s - near).norm() > REMOVABLE_RADIUS {
        return f(s);
    }
    let mut acc = C::new(0.0, 0.0);
    for j in 0..REMOVABLE_NODES {
        let t = 2.0 * PI * (j as f64 + 0.5) / REMOVABLE_NODES as f64;
        acc += f(s + C::from_polar(REMOVABLE_RADIUS, t))?;
    }
    Ok(acc / REMOVABLE_NODES as f64)
}

/// `−(π/(s−1)) c(s) c(2−s) [r(u; s) − r(u; 2−s)]`, the weight-0 product in Green-kernel form.
pub fn phi_green_form(u: f64, s: C) -> Result<C> {
    removable(s, |s| {
        guard(s, 1.0, "1/(s−1)")?;
        let pre = -PI / (s - 1.0) * c_fn(s) * c_fn(2.0 - s);
        Ok(pre * (green_radial(u, s)? - green_radial(u, 2.0 - s)?))
    })
}

/// `K(u; k, s) + K(u; k, 2−s)` without the phase `H_k`.
pub fn phi_radial(u: f64, k: i32, s: C) -> Result<C> {
    removable(s, |s| Ok(kernel_radial(u, k, s)? + kernel_radial(u, k, 2.0 - s)?))
}

/// `K(Z, Z′; k, s) + K(Z, Z′; k, 2−s)`, the closed form of the two-kernel product.
pub fn phi_closed(z: &DomainPoint, z2: &DomainPoint, p: SpectralParam) -> Result<C> {
    let u = u_invariant(z, z2);
    Ok(phase_pow(rho_pair(z, z2), p.k) * phi_radial(u, p.k, p.s)?)
}

/// Relative defect of `K(γZ, γZ′) = (j/j̄)^k(γ,Z) (j/j̄)^{−k}(γ,Z′) K(Z, Z′)`.
pub fn kernel_covariance_residual(
    g: &GroupElement,
    z: &DomainPoint,
    z2: &DomainPoint,
    p: SpectralParam,
) -> Result<f64> {
    let lhs = kernel_weight(&g.act(z)?, &g.act(z2)?, p)?.value;
    let factor = phase_pow(cocycle_j(g, z), p.k) * phase_pow(cocycle_j(g, z2), -p.k);
    let rhs = factor * kernel_weight(z, z2, p)?.value;
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// Kernels on the upper half-plane.
pub mod sl2 {
    use super::*;

    /// Which half-plane kernel to evaluate.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
    #[serde(rename_all = "snake_case")]
    pub enum Sl2Kernel {
        Poisson,
        Green,
        Invariant,
    }

    /// Second argument: a boundary point for the Poisson kernel, an interior point otherwise.
    #[derive(Clone, Copy, Debug, PartialEq)]
    pub enum Sl2Arg {
        Boundary(f64),
        Interior(C),
    }

    fn upper(z: C) -> Result<()> {
        if z.im > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{z} is not in the upper half-plane")))
        }
    }

    /// `u(z, z′) = |z−z′|²/(4 Im z Im z′)`.
    pub fn u(z: C, z2: C) -> f64 {
        (z - z2).norm_sqr() / (4.0 * z.im * z2.im)
    }

    /// `σ(z, z′) = |z̄−z′|²/(4 Im z Im z′) = u + 1`.
    pub fn sigma(z: C, z2: C) -> f64 {
        (z.conj() - z2).norm_sqr() / (4.0 * z.im * z2.im)
    }

    /// `P(z, ζ) = Im z/|z̄ − ζ|²`.
    pub fn poisson(z: C, zeta: f64) -> Result<f64> {
        upper(z)?;
        Ok(z.im / (z.conj() - zeta).norm_sqr())
    }

    /// `P_k(z, ζ; s) = (z̄−ζ)^k (z−ζ)^{−k} P(z, ζ)^s`.
    pub fn poisson_weight(z: C, zeta: f64, p: SpectralParam) -> Result<C> {
        let ps = (p.s * poisson(z, zeta)?.ln()).exp();
        Ok(ps * ((z.conj() - zeta) / (z - zeta)).powi(p.k))
    }

    /// Weight factor normalised to `H_k(z, z) = 1`: `((w − z̄)/(z − w̄))^k`.
    pub fn h_k(z: C, w: C, k: i32) -> C {
        ((w - z.conj()) / (z - w.conj())).powi(k)
    }

    /// `√π Γ(½−s)/Γ(1−s) 4^{−s} s/(s−|k|) H_k u^{|k|−s}(1+u)^{−|k|} F(s−|k|, s−|k|; 2s; −1/u)`.
    pub fn green(z: C, z2: C, p: SpectralParam) -> Result<C> {
        upper(z)?;
        upper(z2)?;
        let ak = p.k.unsigned_abs() as f64;
        guard(p.s, 1.0, "1/Γ(1−s)")?;
        if p.k != 0 {
            guard(p.s, ak, "s/(s−|k|)")?;
        }
        let nearest = (p.s.re - 0.5).round() + 0.5;
        if nearest >= 0.5 {
            guard(p.s, nearest, "Γ(½−s)")?;
        }
        let uu = u(z, z2);
        if uu < COINCIDENT_TOL {
            return Err(Error::CoincidentPoints(uu));
        }
        let s = p.s;
        let pre = PI.sqrt() * gamma(0.5 - s) * rgamma(1.0 - s) * (-s * 4.0f64.ln()).exp() * s / (s - ak);
        let f = f21(s - ak, s - ak, 2.0 * s, C::from(-1.0 / uu))?;
        Ok(pre * h_k(z, z2, p.k) * ((ak - s) * uu.ln()).exp() * (1.0 + uu).powf(-ak) * f)
    }

    /// Dispatch over the three half-plane kernels; `Invariant` returns `u`.
    pub fn sl2_kernels(which: Sl2Kernel, z: C, arg: Sl2Arg, p: SpectralParam) -> Result<C> {
        match (which, arg) {
            (Sl2Kernel::Poisson, Sl2Arg::Boundary(zeta)) => poisson_weight(z, zeta, p),
            (Sl2Kernel::Green, Sl2Arg::Interior(w)) => green(z, w, p),
            (Sl2Kernel::Invariant, Sl2Arg::Interior(w)) => {
                upper(z)?;
                upper(w)?;
                Ok(C::from(u(z, w)))
            }
            _ => Err(Error::InvalidParameter("kernel and argument kind do not match".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary_group::random_element;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(a: f64, b: f64) -> C {
        C::new(a, b)
    }

    #[test]
    fn poisson_examples() {
        let z = DomainPoint::new(c(0.5, 0.0), c(0.0, 0.0));
        let o = BoundaryPoint::origin();
        assert!((poisson_pow(&z, &o, c(1.0, 0.0)).unwrap() - 4.0).norm() < 1e-14);
        assert_eq!(poisson_pow(&z, &o, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let p = DomainPoint::new(c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(poisson(&p, &o), Err(Error::BoundaryCollision(_))));
    }

    #[test]
    fn weight_collapse_and_modulus() {
        let z = DomainPoint::from_horospherical(0.7, 0.3, c(0.2, -0.5));
        let w = BoundaryPoint::new(c(-0.4, 0.9), 1.3);
        let s = c(1.7, 0.4);
        let p0 = poisson_weight(&z, &w, SpectralParam::new(s, 0)).unwrap().value;
        assert_eq!(p0, poisson_pow(&z, &w, s).unwrap());
        let p1 = poisson_weight(&z, &w, SpectralParam::real(1.7, 1)).unwrap().value;
        let mag = poisson_pow(&z, &w, c(1.7, 0.0)).unwrap().re;
        assert!((p1.norm() - mag).abs() < 1e-14 * mag);
        let lit = poisson_weight_literal(&z, &w, SpectralParam::new(s, -1)).unwrap();
        let ph = poisson_weight(&z, &w, SpectralParam::new(s, -1)).unwrap().value;
        assert!((lit - ph).norm() < 1e-13 * ph.norm());
    }

    #[test]
    fn transformation_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = DomainPoint::from_horospherical(0.9, -0.2, c(0.3, 0.1));
        let z2 = DomainPoint::from_horospherical(0.4, 0.6, c(-0.5, 0.2));
        let w = BoundaryPoint::new(c(0.6, -0.3), 0.4);
        for _ in 0..20 {
            let g = random_element(&mut rng, 0.7);
            for k in -1..=1 {
                let p = SpectralParam::new(c(1.6, 0.3), k);
                assert!(poisson_transform_residual(&g, &z, &w, p).unwrap() < 1e-9);
                assert!(kernel_covariance_residual(&g, &z, &z2, SpectralParam::real(1.4, k)).unwrap() < 1e-9);
            }
        }
    }

    #[test]
    fn h_k_properties() {
        let z = DomainPoint::from_horospherical(0.9, -0.2, c(0.3, 0.1));
        let z2 = DomainPoint::from_horospherical(0.4, 0.6, c(-0.5, 0.2));
        let h = h_k(&z, &z2, 1).unwrap();
        assert!((h.norm() - 1.0).abs() < 1e-15);
        assert!((h - h_k(&z2, &z, 1).unwrap().conj()).norm() < 1e-15);
        // Real configuration: ρ(Z, Z′) real ⇒ H_k = 1.
        let a = DomainPoint::new(c(0.5, 0.0), c(0.0, 0.0));
        let b = DomainPoint::new(c(0.9, 0.0), c(0.0, 0.0));
        assert_eq!(h_k(&a, &b, 1).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn green_examples() {
        // s = 2, u = 1: φ = Γ(2)/(√π Γ(3/2)) (1/4) F(2,1;3;−1) = (1/(2π))·2(1 − ln 2)·... with F = 2(1 − ln 2).
        let v = green_radial(1.0, c(2.0, 0.0)).unwrap();
        let expect = 1.0 / (PI.sqrt() * 0.5 * PI.sqrt()) * 0.25 * 2.0 * (1.0 - 2f64.ln());
        assert!((v.re - expect).abs() < 1e-13, "{v} vs {expect}");
        // u → ∞ limit of u^s φ_s.
        let s = c(1.7, 0.0);
        let lim = gamma(s) * rgamma(s - 0.5) / PI.sqrt() * 4f64.powf(-0.7);
        let big = 1e8;
        let v = green_radial(big, s).unwrap() * big.powf(1.7);
        assert!((v - lim).norm() < 1e-7 * lim.norm());
        assert!(matches!(green_radial(0.0, s), Err(Error::SingularAtZero(_))));
    }

    #[test]
    fn k0_kernel_matches_green_form() {
        for &u in &[0.05, 0.125, 1.0, 5.0] {
            for &s in &[1.2, 1.5, 1.7, 1.2 + 0.5e-2] {
                let s = c(s, 0.0);
                let a = phi_radial(u, 0, s).unwrap();
                let b = phi_green_form(u, s).unwrap();
                assert!((a - b).norm() < 1e-11 * b.norm(), "{u} {s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_symmetry_and_guards() {
        let z = DomainPoint::from_horospherical(0.9, -0.2, c(0.3, 0.1));
        let z2 = DomainPoint::from_horospherical(0.4, 0.6, c(-0.5, 0.2));
        let a = kernel_weight(&z2, &z, SpectralParam::real(1.3, 1)).unwrap().value;
        let b = kernel_weight(&z, &z2, SpectralParam::real(1.3, -1)).unwrap().value;
        assert!((a - b).norm() < 1e-12 * b.norm());
        assert!(matches!(kernel_weight(&z, &z, SpectralParam::real(1.3, 0)), Err(Error::CoincidentPoints(_))));
        assert!(matches!(kernel_prefactor(0, c(1.0, 0.0)), Err(Error::PoleAtPrefactor(_))));
        assert!(matches!(kernel_prefactor(1, c(1.5, 0.0)), Err(Error::PoleAtPrefactor(_))));
    }

    #[test]
    fn sl2_examples() {
        use sl2::*;
        let i = c(0.0, 1.0);
        assert_eq!(poisson(i, 0.0).unwrap(), 1.0);
        assert!((u(i, 2.0 * i) - 0.125).abs() < 1e-16);
        assert!((sigma(i, 2.0 * i) - 1.125).abs() < 1e-16);
        let r = green(i, 2.0 * i, SpectralParam::real(1.0, 0));
        assert!(matches!(r, Err(Error::PoleAtPrefactor(_))));
        assert_eq!(h_k(c(0.3, 0.8), c(0.3, 0.8), 1), c(1.0, 0.0));
        let r = sl2_kernels(Sl2Kernel::Invariant, i, Sl2Arg::Interior(2.0 * i), SpectralParam::real(0.4, 0)).unwrap();
        assert!((r.re - 0.125).abs() < 1e-16);
    }
}
