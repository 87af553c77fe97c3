//! U(2,1) for the form `J = antidiag(−1, 1, −1)` acting on the Siegel domain.
//!
//! A matrix `g` acts on `Z = (z₁, z₂)` through homogeneous coordinates
//! `(z₁, z₂, 1)`; the denominator is the cocycle `j(g, Z) = c₁z₁ + c₂z₂ + c₃`
//! read off the bottom row.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat3 = Matrix3<C64>;

/// Default bound for `‖g*Jg − J‖∞`.
pub const UNITARITY_TOL: f64 = 1e-10;

const DENOM_TOL: f64 = 1e-14;

/// ω = (−1+√−3)/2.
pub fn omega() -> C64 {
    C64::new(-0.5, 3f64.sqrt() / 2.0)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The hermitian form `J`.
pub fn j_form() -> Mat3 {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Mat3::new(z, z, -one, z, one, z, -one, z, z)
}

/// Cayley matrix taking the unit ball to the Siegel domain.
pub fn cayley_matrix() -> Mat3 {
    let w = omega();
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    Mat3::new(-w.conj(), z, -w, z, one, z, -one, z, one)
}

/// Interior point `Z = (z₁, z₂)` with `ρ(Z) = z₁ + z̄₁ − |z₂|² > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub z1: C64,
    pub z2: C64,
}

/// Boundary point `W = (|w|²/2 + iv, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub w: C64,
    pub v: f64,
}

/// Point of the unit ball 𝔹².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub w1: C64,
    pub w2: C64,
}

/// Anything with Siegel coordinates `(z₁, z₂)`.
pub trait Coords {
    fn coords(&self) -> [C64; 2];

    fn homogeneous(&self) -> Vector3<C64> {
        let [a, b] = self.coords();
        Vector3::new(a, b, c(1.0, 0.0))
    }
}

impl Coords for DomainPoint {
    fn coords(&self) -> [C64; 2] {
        [self.z1, self.z2]
    }
}

impl Coords for BoundaryPoint {
    fn coords(&self) -> [C64; 2] {
        [c(self.w.norm_sqr() / 2.0, self.v), self.w]
    }
}

impl DomainPoint {
    pub fn new(z1: C64, z2: C64) -> Self {
        DomainPoint { z1, z2 }
    }

    /// Checked constructor.
    pub fn try_new(z1: C64, z2: C64) -> Result<Self> {
        let p = DomainPoint { z1, z2 };
        if p.rho() > 0.0 && p.rho().is_finite() {
            Ok(p)
        } else {
            Err(Error::InvalidParameter(format!("rho(Z) = {} is not positive", p.rho())))
        }
    }

    /// `ρ(Z) = z₁ + z̄₁ − |z₂|²`.
    pub fn rho(&self) -> f64 {
        2.0 * self.z1.re - self.z2.norm_sqr()
    }

    /// Horospherical chart: `z₁ = (ρ + |z|²)/2 + it`, `z₂ = z`.
    pub fn from_horospherical(rho: f64, t: f64, z: C64) -> Self {
        DomainPoint { z1: c((rho + z.norm_sqr()) / 2.0, t), z2: z }
    }

    /// Inverse of [`DomainPoint::from_horospherical`]: `(ρ, t, z)`.
    pub fn to_horospherical(&self) -> (f64, f64, C64) {
        (self.rho(), self.z1.im, self.z2)
    }

    /// Base point `(−ω, 0)`, where `ρ = 1`.
    pub fn base() -> Self {
        DomainPoint { z1: -omega(), z2: c(0.0, 0.0) }
    }

    pub fn conj(&self) -> Self {
        DomainPoint { z1: self.z1.conj(), z2: self.z2.conj() }
    }
}

impl BoundaryPoint {
    pub fn new(w: C64, v: f64) -> Self {
        BoundaryPoint { w, v }
    }

    /// Recover `(w, v)` from Siegel coordinates of a boundary point.
    pub fn from_coords(w1: C64, w2: C64) -> Self {
        BoundaryPoint { w: w2, v: w1.im }
    }

    pub fn origin() -> Self {
        BoundaryPoint { w: c(0.0, 0.0), v: 0.0 }
    }
}

/// Element of U(2,1) stored as a 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub m: Mat3,
}

/// Returns `(ok, residual)` with residual `max(‖g*Jg − J‖∞, ‖gJg* − J‖∞)`.
pub fn is_unitary(m: &Mat3) -> (bool, f64) {
    let j = j_form();
    let d1 = m.adjoint() * j * m - j;
    let d2 = m * j * m.adjoint() - j;
    let r = d1.iter().chain(d2.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    (r <= UNITARITY_TOL, r)
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { m: Mat3::identity() }
    }

    /// Wrap a matrix after checking the unitarity defect.
    pub fn try_new(m: Mat3) -> Result<Self> {
        let (ok, r) = is_unitary(&m);
        if ok {
            Ok(GroupElement { m })
        } else {
            Err(Error::InvalidParameter(format!("unitarity defect {r:e}")))
        }
    }

    /// Wrap without checking; the defect is still observable via [`is_unitary`].
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        GroupElement { m }
    }

    /// `g⁻¹ = J g* J`.
    pub fn inverse(&self) -> Self {
        let j = j_form();
        GroupElement { m: j * self.m.adjoint() * j }
    }

    pub fn compose(&self, other: &GroupElement) -> Self {
        GroupElement { m: self.m * other.m }
    }

    pub fn defect(&self) -> f64 {
        is_unitary(&self.m).1
    }

    /// Rows `(a, b, c)` of the matrix.
    pub fn rows(&self) -> [[C64; 3]; 3] {
        let m = &self.m;
        [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
    }

    fn apply(&self, p: &impl Coords) -> Result<(C64, C64)> {
        let v = self.m * p.homogeneous();
        if v[2].norm() < DENOM_TOL {
            return Err(Error::DenominatorVanishes(v[2].norm()));
        }
        Ok((v[0] / v[2], v[1] / v[2]))
    }

    /// `g(Z)` for interior points.
    pub fn act(&self, z: &DomainPoint) -> Result<DomainPoint> {
        let (a, b) = self.apply(z)?;
        Ok(DomainPoint { z1: a, z2: b })
    }

    /// `g(W)` for boundary points.
    pub fn act_boundary(&self, w: &BoundaryPoint) -> Result<BoundaryPoint> {
        let (a, b) = self.apply(w)?;
        Ok(BoundaryPoint::from_coords(a, b))
    }
}

/// Cocycle `j(g, Z) = c₁z₁ + c₂z₂ + c₃`.
pub fn cocycle_j(g: &GroupElement, p: &impl Coords) -> C64 {
    let [z1, z2] = p.coords();
    g.m[(2, 0)] * z1 + g.m[(2, 1)] * z2 + g.m[(2, 2)]
}

/// Complex Jacobian determinant of `Z ↦ gZ`, by fourth-order central differences with step `h`.
///
/// For a projective map this equals `det(g)·j(g,Z)^{−3}`; the routine does not assume it.
pub fn holomorphic_jacobian(g: &GroupElement, z: &DomainPoint, h: f64) -> Result<C64> {
    let d = |e1: C64, e2: C64| -> Result<[C64; 2]> {
        let at = |t: f64| g.act(&DomainPoint { z1: z.z1 + e1 * t, z2: z.z2 + e2 * t });
        let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
        let f = |a: C64, b: C64, c2: C64, d2: C64| (8.0 * (a - b) - (c2 - d2)) / (12.0 * h);
        Ok([f(p1.z1, m1.z1, p2.z1, m2.z1), f(p1.z2, m1.z2, p2.z2, m2.z2)])
    };
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let c1 = d(one, zero)?;
    let c2 = d(zero, one)?;
    Ok(c1[0] * c2[1] - c2[0] * c1[1])
}

/// Direction of the Cayley transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CayleyDir {
    BallToSiegel,
    SiegelToBall,
}

/// Ball → Siegel domain: `(0,0) ↦ (−ω, 0)`.
pub fn ball_to_siegel(b: &BallPoint) -> Result<DomainPoint> {
    let v = cayley_matrix() * Vector3::new(b.w1, b.w2, c(1.0, 0.0));
    if v[2].norm() < DENOM_TOL {
        return Err(Error::DenominatorVanishes(v[2].norm()));
    }
    if b.w1.norm_sqr() + b.w2.norm_sqr() >= 1.0 {
        return Err(Error::InvalidParameter("point is not inside the unit ball".into()));
    }
    Ok(DomainPoint { z1: v[0] / v[2], z2: v[1] / v[2] })
}

/// Siegel domain → ball.
pub fn siegel_to_ball(z: &DomainPoint) -> Result<BallPoint> {
    if z.rho() <= 0.0 {
        return Err(Error::InvalidParameter("point is not inside the Siegel domain".into()));
    }
    let ci = cayley_inverse();
    let v = ci * z.homogeneous();
    if v[2].norm() < DENOM_TOL {
        return Err(Error::DenominatorVanishes(v[2].norm()));
    }
    Ok(BallPoint { w1: v[0] / v[2], w2: v[1] / v[2] })
}

/// `C⁻¹ = [[1, 0, ω], [0, 1, 0], [1, 0, −ω̄]]`.
pub fn cayley_inverse() -> Mat3 {
    let w = omega();
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    Mat3::new(one, z, w, z, one, z, one, z, -w.conj())
}

/// Iwasawa coordinates for `n[z,t]·a(ρ)·m(β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IwasawaData {
    pub z: C64,
    pub t: f64,
    pub rho: f64,
    pub beta: C64,
}

/// Heisenberg translation `n[z,t]`.
pub fn n_elem(z: C64, t: f64) -> GroupElement {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    GroupElement { m: Mat3::new(one, z, c(z.norm_sqr() / 2.0, t), zero, one, z.conj(), zero, zero, one) }
}

/// Dilation `a(ρ) = diag(ρ⁻¹, 1, ρ)`.
pub fn a_elem(rho: f64) -> Result<GroupElement> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
    }
    Ok(GroupElement { m: Mat3::from_diagonal(&Vector3::new(c(1.0 / rho, 0.0), c(1.0, 0.0), c(rho, 0.0))) })
}

/// `m(β) = diag(β, β⁻², β)` with `|β| = 1`.
pub fn m_elem(beta: C64) -> Result<GroupElement> {
    if (beta.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("|beta| = {} != 1", beta.norm())));
    }
    let b2 = beta.conj() * beta.conj();
    Ok(GroupElement { m: Mat3::from_diagonal(&Vector3::new(beta, b2, beta)) })
}

/// `k = C·diag(U, e^{iθ})·C⁻¹`, the stabilizer of `(−ω, 0)`.
pub fn k_elem(u: &Matrix2<C64>, theta: f64) -> GroupElement {
    let mut b = Mat3::zeros();
    b.fixed_view_mut::<2, 2>(0, 0).copy_from(u);
    b[(2, 2)] = C64::from_polar(1.0, theta);
    GroupElement { m: cayley_matrix() * b * cayley_inverse() }
}

/// `n[z,t]·a(ρ)·m(β)`.
pub fn iwasawa_make(d: &IwasawaData) -> Result<GroupElement> {
    let n = n_elem(d.z, d.t);
    let a = a_elem(d.rho)?;
    let m = m_elem(d.beta)?;
    Ok(n.compose(&a).compose(&m))
}

/// Uniformly random point of U(2) via Gram-Schmidt on a complex Gaussian matrix.
pub fn random_u2<R: Rng>(rng: &mut R) -> Matrix2<C64> {
    let mut g = || c(gauss(rng), gauss(rng));
    let a = Vector2::new(g(), g());
    let b = Vector2::new(g(), g());
    let e1 = a / C64::from(a.norm());
    let b = b - e1 * e1.dotc(&b);
    let e2 = b / C64::from(b.norm());
    Matrix2::from_columns(&[e1, e2])
}

/// Standard normal sample via Box-Muller.
pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random `n·a·m·k` with moderate parameters (`ρ ∈ [e^{-scale}, e^{scale}]`).
pub fn random_element<R: Rng>(rng: &mut R, scale: f64) -> GroupElement {
    let z = c(gauss(rng), gauss(rng)) * scale * 0.5;
    let t = gauss(rng) * scale * 0.5;
    let rho = (rng.gen_range(-1.0..1.0) * scale).exp();
    let beta = C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let u = random_u2(rng);
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let g = iwasawa_make(&IwasawaData { z, t, rho, beta }).expect("valid Iwasawa data");
    g.compose(&k_elem(&u, theta))
}

/// Random interior point in horospherical coordinates.
pub fn random_point<R: Rng>(rng: &mut R, scale: f64) -> DomainPoint {
    let rho = (rng.gen_range(-1.0..1.0) * scale).exp();
    let t = gauss(rng) * scale * 0.5;
    let z = c(gauss(rng), gauss(rng)) * scale * 0.5;
    DomainPoint::from_horospherical(rho, t, z)
}

/// Result of [`normalize_pair`].
#[derive(Clone, Debug)]
pub struct Normalized {
    pub g: GroupElement,
    pub lambda: f64,
    /// `|T(P) − (−ω,0)|`.
    pub residual_p: f64,
    /// `|T(P2) − (−λω,0)|`.
    pub residual_p2: f64,
}

/// Find `T` with `T(P) = (−ω, 0)` and `T(P2) = (−λω, 0)`, `λ ≥ 1`.
///
/// The translation-dilation `T₁` centers `P`; the stabilizer step is built
/// explicitly in the ball model, where `K` acts by `U(2) × U(1)`.
pub fn normalize_pair(p: &DomainPoint, p2: &DomainPoint) -> Result<Normalized> {
    let rho = p.rho();
    if rho <= 0.0 || p2.rho() <= 0.0 {
        return Err(Error::InvalidParameter("points must be interior".into()));
    }
    let z = p.z2;
    let t = p.z1.im + rho * 3f64.sqrt() / 2.0;
    let sr = rho.sqrt();
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let dil = Mat3::from_diagonal(&Vector3::new(c(1.0 / sr, 0.0), one, c(sr, 0.0)));
    let tr = Mat3::new(one, -z.conj(), c(z.norm_sqr() / 2.0, -t), zero, one, -z, zero, zero, one);
    let t1 = GroupElement { m: dil * tr };
    let q = t1.act(p2)?;

    let delta = crate::geometry::invariants(p, p2).delta;
    let lambda = delta + (delta * delta - 1.0).max(0.0).sqrt();
    let target = DomainPoint { z1: -omega() * lambda, z2: zero };

    let bq = siegel_to_ball(&q)?;
    let bt = siegel_to_ball(&target)?;
    let vq = Vector2::new(bq.w1, bq.w2);
    let vt = Vector2::new(bt.w1, bt.w2);
    let u = if vq.norm() < 1e-14 {
        Matrix2::identity()
    } else {
        let e = vq / C64::from(vq.norm());
        let f = vt / C64::from(vt.norm());
        let eperp = Vector2::new(-e[1].conj(), e[0].conj());
        let fperp = Vector2::new(-f[1].conj(), f[0].conj());
        let src = Matrix2::from_columns(&[e, eperp]);
        let dst = Matrix2::from_columns(&[f, fperp]);
        dst * src.adjoint()
    };
    let k = k_elem(&u, 0.0);
    let g = k.compose(&t1);
    let ip = g.act(p)?;
    let ip2 = g.act(p2)?;
    let base = DomainPoint::base();
    let residual_p = ((ip.z1 - base.z1).norm_sqr() + ip.z2.norm_sqr()).sqrt();
    let residual_p2 = ((ip2.z1 - target.z1).norm_sqr() + ip2.z2.norm_sqr()).sqrt();
    if residual_p > 1e-6 || residual_p2 > 1e-6 {
        return Err(Error::SolverFailure(format!("stabilizer step missed: residuals {residual_p:e}, {residual_p2:e}")));
    }
    Ok(Normalized { g, lambda, residual_p, residual_p2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn unitarity_examples() {
        assert_eq!(is_unitary(&Mat3::identity()), (true, 0.0));
        assert!(is_unitary(&j_form()).0);
        let mut m = Mat3::identity();
        m[(0, 1)] += c(1e-3, 0.0);
        let (ok, r) = is_unitary(&m);
        assert!(!ok && r >= 1e-3);
    }

    #[test]
    fn cayley_matrix_intertwines_forms() {
        let cm = cayley_matrix();
        let i21 = Mat3::from_diagonal(&Vector3::new(c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)));
        let d = cm * i21 * cm.adjoint() - j_form();
        assert!(d.iter().all(|z| z.norm() < 1e-14));
        let e = cm * cayley_inverse() - Mat3::identity();
        assert!(e.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn cayley_base_point() {
        let z = ball_to_siegel(&BallPoint { w1: c(0.0, 0.0), w2: c(0.0, 0.0) }).unwrap();
        assert!(close(z.z1, -omega(), 1e-15) && z.z2.norm() < 1e-15);
        assert!((z.rho() - 1.0).abs() < 1e-15);
        let b = siegel_to_ball(&DomainPoint::base()).unwrap();
        assert!(b.w1.norm() < 1e-15 && b.w2.norm() < 1e-15);
    }

    #[test]
    fn cayley_round_trip_and_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = random_point(&mut rng, 1.0);
            let q = ball_to_siegel(&siegel_to_ball(&p).unwrap()).unwrap();
            assert!(close(q.z1, p.z1, 1e-12) && close(q.z2, p.z2, 1e-12));
        }
        let r = ball_to_siegel(&BallPoint { w1: c(1.0, 0.0), w2: c(0.0, 0.0) });
        assert!(matches!(r, Err(Error::DenominatorVanishes(_))));
    }

    #[test]
    fn iwasawa_factors_are_unitary() {
        assert_eq!(n_elem(c(0.0, 0.0), 0.0), GroupElement::identity());
        assert_eq!(a_elem(1.0).unwrap(), GroupElement::identity());
        let g =
            iwasawa_make(&IwasawaData { z: c(0.3, -1.2), t: 0.7, rho: 2.5, beta: C64::from_polar(1.0, 0.4) }).unwrap();
        assert!(is_unitary(&g.m).1 <= 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let k = k_elem(&random_u2(&mut rng), 1.1);
        assert!(is_unitary(&k.m).1 <= 1e-12);
        let fixed = k.act(&DomainPoint::base()).unwrap();
        assert!(close(fixed.z1, -omega(), 1e-12) && fixed.z2.norm() < 1e-12);
        assert!(a_elem(0.0).is_err());
        assert!(m_elem(c(1.1, 0.0)).is_err());
    }

    #[test]
    fn k_matrix_explicit_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = random_u2(&mut rng);
        let th = 0.9;
        let (al, be, ga, de) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        let e = C64::from_polar(1.0, th);
        let w = omega();
        let kx = Mat3::new(
            -w.conj() * al - w * e,
            -w.conj() * be,
            -al + e,
            ga,
            de,
            w * ga,
            -al + e,
            -be,
            -w * al - w.conj() * e,
        );
        let k = k_elem(&u, th);
        assert!((k.m - kx).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn heisenberg_composition_law() {
        let (z, t, z2, t2) = (c(0.4, 1.1), 0.3, c(-0.7, 0.2), -1.4);
        let prod = n_elem(z, t).compose(&n_elem(z2, t2));
        // [z,t][z',t'] = [z+z', t+t'+Im(z z̄')]
        let expect = n_elem(z + z2, t + t2 + (z * z2.conj()).im);
        assert!((prod.m - expect.m).iter().all(|q| q.norm() < 1e-14));
    }

    #[test]
    fn translations_preserve_rho_and_dilation_scales() {
        let z = DomainPoint::from_horospherical(0.8, 0.1, c(0.5, -0.3));
        let n = n_elem(c(1.2, 0.4), -0.9);
        assert!((n.act(&z).unwrap().rho() - z.rho()).abs() < 1e-12);
        let a = a_elem(1.7).unwrap();
        let img = a.act(&DomainPoint::base()).unwrap();
        assert!(close(img.z1, -omega() / (1.7 * 1.7), 1e-14));
        assert_eq!(cocycle_j(&GroupElement::identity(), &z), c(1.0, 0.0));
    }

    #[test]
    fn inverse_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_element(&mut rng, 1.0);
        let e = g.compose(&g.inverse()).m - Mat3::identity();
        assert!(e.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn normalize_pair_examples() {
        let p = DomainPoint::base();
        let p2 = DomainPoint { z1: -omega() * 2.0, z2: c(0.0, 0.0) };
        let n = normalize_pair(&p, &p2).unwrap();
        assert!((n.lambda - 2.0).abs() < 1e-12);
        assert!(n.residual_p < 1e-9 && n.residual_p2 < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let a = random_point(&mut rng, 1.0);
            let b = random_point(&mut rng, 1.0);
            let n = normalize_pair(&a, &b).unwrap();
            assert!(n.lambda >= 1.0);
            assert!(n.residual_p < 1e-9, "{}", n.residual_p);
            assert!(n.residual_p2 < 1e-8 * n.lambda, "{}", n.residual_p2);
        }
    }
}
