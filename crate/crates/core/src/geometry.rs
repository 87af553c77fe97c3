//! Hermitian pairing, point-pair invariants and the complex hyperbolic distance.

use serde::{Deserialize, Serialize};

use crate::unitary_group::{cocycle_j, Coords, DomainPoint, GroupElement, C64};

/// `ρ(Z, W) = z̄₁ + w₁ − z̄₂w₂`.
pub fn rho_pair(z: &impl Coords, w: &impl Coords) -> C64 {
    let [z1, z2] = z.coords();
    let [w1, w2] = w.coords();
    z1.conj() + w1 - z2.conj() * w2
}

/// `ρ(Z̄, W̄) := z₁ + w̄₁ − z₂w̄₂`, the conjugate partner used by weight-k kernels.
pub fn rho_pair_bar(z: &impl Coords, w: &impl Coords) -> C64 {
    rho_pair(z, w).conj()
}

/// `ρ(Z) = ρ(Z, Z)`.
pub fn rho(z: &impl Coords) -> f64 {
    rho_pair(z, z).re
}

/// σ, u, δ and the distance for a pair of interior points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairInvariants {
    pub rho_z: f64,
    pub rho_w: f64,
    pub rho_pair: C64,
    pub sigma: f64,
    pub u: f64,
    pub delta: f64,
    pub dist: f64,
}

/// `u = σ − 1` written as a sum of squares, so it stays accurate for close points:
/// `|ρ(Z,Z′)|² − ρρ′ = ¼(ρ−ρ′)² + ½(ρ+ρ′)|z−z′|² + ¼|z−z′|⁴ + (t′−t+Im z z̄′)²`.
pub fn u_invariant(z: &DomainPoint, z2: &DomainPoint) -> f64 {
    let (r1, t1, w1) = z.to_horospherical();
    let (r2, t2, w2) = z2.to_horospherical();
    let d2 = (w1 - w2).norm_sqr();
    let im = t2 - t1 + (w1 * w2.conj()).im;
    let num = 0.25 * (r1 - r2).powi(2) + 0.5 * (r1 + r2) * d2 + 0.25 * d2 * d2 + im * im;
    num / (r1 * r2)
}

/// `σ(Z, Z′) = |ρ(Z,Z′)|²/(ρ(Z)ρ(Z′))`.
pub fn sigma(z: &DomainPoint, z2: &DomainPoint) -> f64 {
    1.0 + u_invariant(z, z2)
}

/// Distance with `cosh d = δ = (σ+1)/2`, evaluated as `2 asinh(√u / 2)`.
pub fn distance(z: &DomainPoint, z2: &DomainPoint) -> f64 {
    2.0 * (u_invariant(z, z2).sqrt() / 2.0).asinh()
}

/// `δ(Z, Z′) = (σ + 1)/2`.
pub fn delta(z: &DomainPoint, z2: &DomainPoint) -> f64 {
    1.0 + 0.5 * u_invariant(z, z2)
}

pub fn invariants(z: &DomainPoint, z2: &DomainPoint) -> PairInvariants {
    let u = u_invariant(z, z2);
    PairInvariants {
        rho_z: z.rho(),
        rho_w: z2.rho(),
        rho_pair: rho_pair(z, z2),
        sigma: 1.0 + u,
        u,
        delta: 1.0 + 0.5 * u,
        dist: 2.0 * (u.sqrt() / 2.0).asinh(),
    }
}

/// Relative defect of `ρ(gZ, gW)·conj(j(g,Z))·j(g,W) = ρ(Z,W)`.
pub fn transform_residual(g: &GroupElement, z: &DomainPoint, w: &DomainPoint) -> crate::error::Result<f64> {
    let gz = g.act(z)?;
    let gw = g.act(w)?;
    let lhs = rho_pair(&gz, &gw) * cocycle_j(g, z).conj() * cocycle_j(g, w);
    let rhs = rho_pair(z, w);
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// Outcome of the two-sided triangle inequality with constant 72.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleCheck {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `δ(Q,R)/(72 δ(P,Q)) ≤ δ(P,R) ≤ 72 δ(P,Q) δ(Q,R)`.
pub fn triangle_check(p: &DomainPoint, q: &DomainPoint, r: &DomainPoint) -> TriangleCheck {
    let pq = delta(p, q);
    let qr = delta(q, r);
    let pr = delta(p, r);
    let lhs = qr / (72.0 * pq);
    let rhs = 72.0 * pq * qr;
    TriangleCheck { lhs, mid: pr, rhs, ok: lhs <= pr && pr <= rhs }
}

/// Both sides of the two trace formulas for a group element.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceCheck {
    /// `δ((1,0), g(1,0))`.
    pub lhs_single: f64,
    /// `5/8 + (1/8)Σ|g_ij|²`.
    pub rhs_single: f64,
    /// `δ(P,gP)+δ(Q,gQ)+δ(P,gQ)+δ(Q,gP)` with `P = (−ω,0)`, `Q = (−ω̄,0)`.
    pub lhs_pair: f64,
    pub rhs_pair: f64,
}

pub fn trace_formula_check(g: &GroupElement) -> crate::error::Result<TraceCheck> {
    let one = DomainPoint::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let lhs_single = delta(&one, &g.act(&one)?);
    let [a, b, c] = g.rows();
    let total: f64 = a.iter().chain(b.iter()).chain(c.iter()).map(|x| x.norm_sqr()).sum();
    let rhs_single = 0.625 + total / 8.0;

    let p = DomainPoint::base();
    let q = p.conj();
    let gp = g.act(&p)?;
    let gq = g.act(&q)?;
    let lhs_pair = delta(&p, &gp) + delta(&q, &gq) + delta(&p, &gq) + delta(&q, &gp);
    let n = |x: C64| x.norm_sqr();
    let rhs_pair =
        2.5 + 2.0 * (n(a[0]) + n(a[2]) + n(c[0]) + n(c[2])) + (n(a[1]) + n(c[1]) + n(b[0]) + n(b[2])) + 0.5 * n(b[1]);
    Ok(TraceCheck { lhs_single, rhs_single, lhs_pair, rhs_pair })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary_group::{omega, BoundaryPoint};

    fn c(a: f64, b: f64) -> C64 {
        C64::new(a, b)
    }

    #[test]
    fn pairing_examples() {
        let z = DomainPoint::new(c(0.5, 0.0), c(0.0, 0.0));
        assert_eq!(rho_pair(&z, &BoundaryPoint::origin()), c(0.5, 0.0));
        let p = DomainPoint::from_horospherical(0.7, -0.4, c(0.3, 0.8));
        assert!((rho_pair(&p, &p).re - p.rho()).abs() < 1e-15);
        assert!(rho_pair(&p, &p).im.abs() < 1e-15);
    }

    #[test]
    fn horospherical_modulus_formula() {
        let (r, t, z) = (0.6, 0.2, c(-0.4, 1.1));
        let (r2, t2, z2) = (1.9, -0.7, c(0.5, 0.3));
        let a = DomainPoint::from_horospherical(r, t, z);
        let b = DomainPoint::from_horospherical(r2, t2, z2);
        let lhs = rho_pair(&a, &b).norm_sqr();
        let rhs = 0.25 * (r + r2 + (z - z2).norm_sqr()).powi(2) + (t2 - t + (z * z2.conj()).im).powi(2);
        assert!((lhs - rhs).abs() < 1e-13 * rhs);
        let direct = lhs / (a.rho() * b.rho());
        assert!((sigma(&a, &b) - direct).abs() < 1e-13 * direct);
    }

    #[test]
    fn invariants_examples() {
        let z = DomainPoint::base();
        let inv = invariants(&z, &z);
        assert_eq!((inv.sigma, inv.u, inv.delta, inv.dist), (1.0, 0.0, 1.0, 0.0));
        let z2 = DomainPoint::new(-omega() * 2.0, c(0.0, 0.0));
        let inv = invariants(&z, &z2);
        assert!((inv.delta - 1.25).abs() < 1e-15);
        assert!((inv.dist - 2f64.ln()).abs() < 1e-15);
        let a = DomainPoint::new(c(0.5, 0.0), c(0.0, 0.0));
        let b = DomainPoint::new(c(1.0, 0.0), c(0.0, 0.0));
        assert!((u_invariant(&a, &b) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn triangle_identity_case() {
        let p = DomainPoint::base();
        let t = triangle_check(&p, &p, &p);
        assert!(t.ok && (t.lhs - 1.0 / 72.0).abs() < 1e-16 && t.rhs == 72.0);
    }

    #[test]
    fn trace_identity_case() {
        let t = trace_formula_check(&GroupElement::identity()).unwrap();
        assert_eq!(t.lhs_single, 1.0);
        assert!((t.rhs_single - 1.0).abs() < 1e-15);
        assert!((t.lhs_pair - t.rhs_pair).abs() < 1e-13);
    }
}
