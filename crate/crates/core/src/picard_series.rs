//! Lattice sums for the Picard modular group `U(2,1; 𝒪)`: the isotropic cone in
//! `𝒪³`, truncated Eisenstein series, Epstein and Dedekind zeta functions, and
//! truncated sums over word balls in the group.
//!
//! Heights are `max N(aᵢ)`. Parallel sums are reduced in enumeration order, so
//! results do not depend on the thread count.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eisenstein_ring::{gcd3, units, EisInt};
use crate::error::{Error, Result};
use crate::geometry::{rho_pair, sigma, u_invariant};
use crate::kernels::{
    green_radial, kernel_covariance_residual, kernel_weight, poisson_transform_residual, poisson_weight, SpectralParam,
};
use crate::unitary_group::{cocycle_j, n_elem, BoundaryPoint, DomainPoint, GroupElement, Mat3};

type C = Complex64;

const DEDUP_TOL: f64 = 1e-9;
const ORBIT_TOL: f64 = 1e-10;

/// `(a₁, a₂, a₃) ∈ 𝒪³ ∖ 0` with `a₁ā₃ + ā₁a₃ = a₂ā₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IsotropicVector {
    pub a1: EisInt,
    pub a2: EisInt,
    pub a3: EisInt,
}

/// `2 Re(x ȳ)` as an exact integer.
fn trace_pair(x: EisInt, y: EisInt) -> Result<i64> {
    let p = x.a.checked_mul(y.a).ok_or(Error::Overflow)?;
    let q = x.b.checked_mul(y.b).and_then(|v| v.checked_mul(3)).ok_or(Error::Overflow)?;
    Ok(p.checked_add(q).ok_or(Error::Overflow)? / 2)
}

impl IsotropicVector {
    pub fn try_new(a1: EisInt, a2: EisInt, a3: EisInt) -> Result<Self> {
        if a1.is_zero() && a2.is_zero() && a3.is_zero() {
            return Err(Error::InvalidParameter("the zero vector is excluded".into()));
        }
        if trace_pair(a1, a3)? != a2.checked_norm()? {
            return Err(Error::InvalidParameter(format!("({a1}, {a2}, {a3}) is not isotropic")));
        }
        Ok(IsotropicVector { a1, a2, a3 })
    }

    pub fn height(&self) -> i64 {
        self.a1.norm().max(self.a2.norm()).max(self.a3.norm())
    }

    /// The ideal `(a₁, a₂, a₃)` is all of 𝒪.
    pub fn is_coprime(&self) -> bool {
        gcd3(self.a1, self.a2, self.a3).is_some_and(|g| g.is_unit())
    }

    /// `(a₃, −a₂, a₁)`.
    pub fn involution(&self) -> Self {
        IsotropicVector { a1: self.a3, a2: -self.a2, a3: self.a1 }
    }

    pub fn embed(&self) -> [C; 3] {
        [self.a1.embed(), self.a2.embed(), self.a3.embed()]
    }

    /// `j = a₁z₁ + a₂z₂ + a₃`.
    pub fn j(&self, z: &DomainPoint) -> C {
        let [a1, a2, a3] = self.embed();
        a1 * z.z1 + a2 * z.z2 + a3
    }
}

/// All elements of 𝒪 with norm at most `h`, sorted.
fn ring_ball(h: i64) -> Vec<EisInt> {
    let amax = (2.0 * (h as f64).sqrt()).floor() as i64 + 1;
    let bmax = (2.0 * (h as f64 / 3.0).sqrt()).floor() as i64 + 1;
    let mut out = Vec::new();
    for a in -amax..=amax {
        for b in -bmax..=bmax {
            if (a - b).rem_euclid(2) == 0 && a * a + 3 * b * b <= 4 * h {
                out.push(EisInt { a, b });
            }
        }
    }
    out.sort();
    out
}

/// Cone vectors grouped by their first coordinate, in enumeration order.
fn cone_map<T: Send>(
    height: i64,
    coprime: bool,
    init: impl Fn() -> T + Sync,
    visit: impl Fn(&mut T, IsotropicVector) + Sync,
) -> Vec<T> {
    let ball = ring_ball(height);
    let mut by_norm: HashMap<i64, Vec<EisInt>> = HashMap::new();
    for &x in &ball {
        by_norm.entry(x.norm()).or_default().push(x);
    }
    ball.par_iter()
        .map(|&a1| {
            let mut acc = init();
            for &a3 in &ball {
                let n = trace_pair(a1, a3).expect("bounded by height");
                let Some(mids) = by_norm.get(&n) else { continue };
                for &a2 in mids {
                    if a1.is_zero() && a2.is_zero() && a3.is_zero() {
                        continue;
                    }
                    let v = IsotropicVector { a1, a2, a3 };
                    if coprime && !v.is_coprime() {
                        continue;
                    }
                    visit(&mut acc, v);
                }
            }
            acc
        })
        .collect()
}

/// Every cone vector with `max N(aᵢ) ≤ height`, in a fixed order.
pub fn enumerate_isotropic(height: i64, coprime: bool) -> Result<Vec<IsotropicVector>> {
    if height < 1 {
        return Err(Error::InvalidParameter(format!("height = {height} must be at least 1")));
    }
    Ok(cone_map(height, coprime, Vec::new, |acc, v| acc.push(v)).into_iter().flatten().collect())
}

/// Exhaustive check that `a ↦ (a₃, −a₂, a₁)` is a height-preserving involution of the cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvolutionReport {
    pub height: i64,
    pub count: usize,
    pub maps_into_cone: bool,
    pub involutive: bool,
    pub height_preserving: bool,
    pub bijective: bool,
}

impl InvolutionReport {
    pub fn ok(&self) -> bool {
        self.maps_into_cone && self.involutive && self.height_preserving && self.bijective
    }
}

pub fn involution_check(height: i64) -> Result<InvolutionReport> {
    let all = enumerate_isotropic(height, false)?;
    let set: HashSet<IsotropicVector> = all.iter().copied().collect();
    let mut rep = InvolutionReport {
        height,
        count: all.len(),
        maps_into_cone: true,
        involutive: true,
        height_preserving: true,
        bijective: true,
    };
    let mut image = HashSet::with_capacity(all.len());
    for v in &all {
        let w = v.involution();
        rep.maps_into_cone &= IsotropicVector::try_new(w.a1, w.a2, w.a3).is_ok();
        rep.involutive &= w.involution() == *v;
        rep.height_preserving &= w.height() == v.height();
        rep.bijective &= set.contains(&w);
        image.insert(w);
    }
    rep.bijective &= image.len() == set.len();
    Ok(rep)
}

/// A partial sum with its truncation estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncated {
    pub value: C,
    pub tail_bound: f64,
    pub terms: usize,
}

fn convergence(s: C, edge: f64) -> Result<()> {
    if s.re <= edge {
        Err(Error::ConvergenceRegion(s.re))
    } else {
        Ok(())
    }
}

/// Partial sums at heights `H` and `H/2` of a positive majorant, and the implied
/// tail `(S(H) − S(H/2))/(2^{p} − 1)` for terms decaying with height like `h^{−p}` in measure.
#[derive(Default)]
struct Acc {
    value: C,
    abs_full: f64,
    abs_half: f64,
    terms: usize,
}

fn cone_sum(height: i64, coprime: bool, s: C, term: impl Fn(IsotropicVector) -> C + Sync) -> Result<Truncated> {
    if height < 2 {
        return Err(Error::InvalidParameter(format!("height = {height} must be at least 2")));
    }
    let half = height / 2;
    let parts = cone_map(height, coprime, Acc::default, |acc, v| {
        let t = term(v) / 6.0;
        acc.value += t;
        acc.abs_full += t.norm();
        if v.height() <= half {
            acc.abs_half += t.norm();
        }
        acc.terms += 1;
    });
    let mut tot = Acc::default();
    for p in parts {
        tot.value += p.value;
        tot.abs_full += p.abs_full;
        tot.abs_half += p.abs_half;
        tot.terms += p.terms;
    }
    // The cone has ~h² vectors of height ≤ h and terms ~h^{−Re s}.
    let ratio = (height as f64 / half as f64).powf(s.re - 2.0) - 1.0;
    let tail = (tot.abs_full - tot.abs_half) / ratio;
    Ok(Truncated { value: tot.value, tail_bound: tail, terms: tot.terms })
}

fn term_value(z: &DomainPoint, s: C, k: i32, a: &IsotropicVector) -> C {
    let j = a.j(z);
    let mag = (s * (z.rho().ln() - j.norm_sqr().ln())).exp();
    mag * C::from_polar(1.0, -2.0 * k as f64 * j.arg())
}

/// One term `(j̄/j)^k ρ(Z)^s / |j|^{2s}` of the series, without the `1/6`.
pub fn eisenstein_term(z: &DomainPoint, s: C, k: i32, a: &IsotropicVector) -> Result<C> {
    if z.rho() <= 0.0 {
        return Err(Error::InvalidParameter("point outside the domain".into()));
    }
    Ok(term_value(z, s, k, a))
}

/// `E(Z; k, s) = (1/6) Σ_{coprime cone a} (j̄/j)^k ρ(Z)^s / |j|^{2s}`, `j = a₁z₁ + a₂z₂ + a₃`.
///
/// Replacing `a` by `u·a` multiplies a term by `ū^{2k}`, so the sum vanishes unless `3 | k`.
pub fn eisenstein_truncated(z: &DomainPoint, s: C, k: i32, height: i64) -> Result<Truncated> {
    convergence(s, 2.0)?;
    cone_sum(height, true, s, |a| term_value(z, s, k, &a))
}

/// Hermitian positive definite `3 × 3` matrix with unit determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix {
    pub m: Mat3,
}

impl HermitianMatrix {
    pub fn try_new(m: Mat3) -> Result<Self> {
        let scale = m.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if (m - m.adjoint()).iter().any(|x| x.norm() > 1e-12 * scale) {
            return Err(Error::InvalidParameter("matrix is not hermitian".into()));
        }
        if m.cholesky().is_none() {
            return Err(Error::InvalidParameter("matrix is not positive definite".into()));
        }
        let det = m.determinant();
        if (det - 1.0).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("det = {det} differs from 1")));
        }
        Ok(HermitianMatrix { m })
    }

    /// `W_{(ρ,t,z)} = n*·diag(1/ρ, 1, ρ)·n` with `n = n[z, t]`.
    pub fn w_chart(rho: f64, t: f64, z: C) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
        }
        let n = n_elem(z, t).m;
        let a = Mat3::from_diagonal(&nalgebra::Vector3::new(C::from(1.0 / rho), C::from(1.0), C::from(rho)));
        Self::try_new(n.adjoint() * a * n)
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.m.try_inverse().ok_or_else(|| Error::InvalidParameter("singular matrix".into()))?;
        Self::try_new((inv + inv.adjoint()) * C::from(0.5))
    }

    /// `‖YJY − J‖∞`, zero on `ℋ₃ = SP₃ ∩ U(2,1)`.
    pub fn unitary_defect(&self) -> f64 {
        let j = crate::unitary_group::j_form();
        (self.m * j * self.m - j).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `Y[x] = x*Yx` for a column vector `x`.
    pub fn form(&self, x: [C; 3]) -> f64 {
        let v = nalgebra::Vector3::new(x[0], x[1], x[2]);
        (v.adjoint() * self.m * v)[(0, 0)].re
    }
}

/// Point of the Siegel domain matching `W_{(ρ,t,z)}`: `(ρ + |z|²/2 − it, −z̄)`.
/// Here `ρ = ½ρ(Z)`.
pub fn w_chart_point(rho: f64, t: f64, z: C) -> DomainPoint {
    DomainPoint::new(C::new(rho + z.norm_sqr() / 2.0, -t), -z.conj())
}

/// `(ρ, t, z)` with `w_chart_point(ρ, t, z) = Z`.
pub fn w_chart_coords(z: &DomainPoint) -> (f64, f64, C) {
    (z.rho() / 2.0, -z.z1.im, -z.z2.conj())
}

/// `Z(Y, s) = (1/6) Σ_{cone a} Y[a]^{−s}`.
pub fn epstein_zeta(y: &HermitianMatrix, s: C, height: i64) -> Result<Truncated> {
    convergence(s, 2.0)?;
    cone_sum(height, false, s, |a| (-s * y.form(a.embed()).ln()).exp())
}

/// `ζ_K(s) = (1/6) Σ_{α ≠ 0, N(α) ≤ H} N(α)^{−s}` for `K = ℚ(√−3)`.
///
/// The tail uses `#{N(α) ≤ x} ≈ 2πx/√3`, giving `π/(3√3) · H^{1−s}/(s−1)`.
pub fn dedekind_zeta(s: C, height: i64) -> Result<Truncated> {
    convergence(s, 1.0)?;
    if height < 1 {
        return Err(Error::InvalidParameter(format!("height = {height} must be at least 1")));
    }
    let mut counts = vec![0u64; height as usize + 1];
    for x in ring_ball(height) {
        counts[x.norm() as usize] += 1;
    }
    let mut value = C::new(0.0, 0.0);
    let mut terms = 0;
    for (n, &c) in counts.iter().enumerate().skip(1) {
        if c > 0 {
            value += c as f64 * (-s * (n as f64).ln()).exp();
            terms += c as usize;
        }
    }
    let tail = PI / (3.0 * 3f64.sqrt()) * (height as f64).powf(1.0 - s.re) / (s.re - 1.0);
    Ok(Truncated { value: value / 6.0, tail_bound: tail, terms })
}

/// Relative defect of `W_{(ρ,t,z)}[x] = ρ⁻¹|a₁z₁ + a₂z₂ + a₃|²` for `x = (a₃, −a₂, a₁)*`.
pub fn chart_form_residual(rho: f64, t: f64, z: C, a: &IsotropicVector) -> Result<f64> {
    let w = HermitianMatrix::w_chart(rho, t, z)?;
    let [a1, a2, a3] = a.embed();
    let lhs = w.form([a3.conj(), -a2.conj(), a1.conj()]);
    let rhs = a.j(&w_chart_point(rho, t, z)).norm_sqr() / rho;
    Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}

/// Relative defect of `Y⁻¹[a] = Y[(a₃, −a₂, a₁)]` for `Y ∈ ℋ₃`.
pub fn inverse_form_residual(y: &HermitianMatrix, a: &IsotropicVector) -> Result<f64> {
    let lhs = y.inverse()?.form(a.embed());
    let rhs = y.form(a.involution().embed());
    Ok((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsteinFunctionalEq {
    pub z_y: C,
    pub z_y_inv: C,
    /// Largest relative difference between matched terms.
    pub max_term_defect: f64,
    pub rel_defect: f64,
    pub terms: usize,
}

/// `Z(Y⁻¹, s) = Z(Y, s)` at matched truncation, term by term and in total.
pub fn epstein_functional_eq(y: &HermitianMatrix, s: C, height: i64) -> Result<EpsteinFunctionalEq> {
    let yi = y.inverse()?;
    let a = epstein_zeta(y, s, height)?;
    let b = epstein_zeta(&yi, s, height)?;
    let cone = enumerate_isotropic(height, false)?;
    let max_term_defect = cone
        .par_iter()
        .map(|v| {
            let p = (-s * yi.form(v.embed()).ln()).exp();
            let q = (-s * y.form(v.involution().embed()).ln()).exp();
            (p - q).norm() / q.norm()
        })
        .reduce(|| 0.0, f64::max);
    Ok(EpsteinFunctionalEq {
        z_y: a.value,
        z_y_inv: b.value,
        max_term_defect,
        rel_defect: (a.value - b.value).norm() / a.value.norm(),
        terms: cone.len(),
    })
}

/// Epstein zeta against the Eisenstein series in the `W` chart.
///
/// `E_chart` is the vector form with the chart's `ρ = ½ρ(Z)`, i.e.
/// `2^{−s} E(Z; s)`. Every cone vector factors uniquely (up to units) as
/// `d·b` with `b` primitive and `W[d·b] = N(d) W[b]`, so the sum factors with
/// `ζ_K(s)`; both that and the `ζ_K(2s)` factorisation are reported.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaFactorisation {
    pub s: C,
    pub height: i64,
    pub epstein: Truncated,
    pub eisenstein_chart: Truncated,
    pub zeta_k_2s: Truncated,
    pub zeta_k_s: Truncated,
    /// `|Z − ζ_K(2s)·E_chart| / |Z|`.
    pub rel_err_2s: f64,
    /// `|Z − ζ_K(s)·E_chart| / |Z|`.
    pub rel_err_s: f64,
    /// Combined relative truncation allowance.
    pub rel_tail: f64,
}

impl ZetaFactorisation {
    pub fn holds_2s(&self) -> bool {
        self.rel_err_2s <= self.rel_tail
    }

    pub fn holds_s(&self) -> bool {
        self.rel_err_s <= self.rel_tail
    }
}

pub fn zeta_factorisation(rho: f64, t: f64, z: C, s: C, height: i64) -> Result<ZetaFactorisation> {
    let w = HermitianMatrix::w_chart(rho, t, z)?;
    let p = w_chart_point(rho, t, z);
    let epstein = epstein_zeta(&w, s, height)?;
    let full = eisenstein_truncated(&p, s, 0, height)?;
    let half = (-s * 2f64.ln()).exp();
    let eisenstein_chart =
        Truncated { value: full.value * half, tail_bound: full.tail_bound * half.norm(), terms: full.terms };
    let zeta_k_2s = dedekind_zeta(2.0 * s, height)?;
    let zeta_k_s = dedekind_zeta(s, height)?;
    let zn = epstein.value.norm();
    let rel = |zk: &Truncated| (epstein.value - zk.value * eisenstein_chart.value).norm() / zn;
    let rel_tail = epstein.tail_bound / zn
        + eisenstein_chart.tail_bound / eisenstein_chart.value.norm()
        + zeta_k_s.tail_bound / zeta_k_s.value.norm();
    Ok(ZetaFactorisation {
        s,
        height,
        epstein,
        eisenstein_chart,
        zeta_k_2s,
        zeta_k_s,
        rel_err_2s: rel(&zeta_k_2s),
        rel_err_s: rel(&zeta_k_s),
        rel_tail,
    })
}

/// `3 × 3` matrix over 𝒪.
pub type ExactMatrix = [[EisInt; 3]; 3];

fn exact_mul(x: &ExactMatrix, y: &ExactMatrix) -> Result<ExactMatrix> {
    let mut out = [[EisInt::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = EisInt::ZERO;
            for (k, yk) in y.iter().enumerate() {
                acc = acc.checked_add(x[i][k].checked_mul(yk[j])?)?;
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

fn exact_identity() -> ExactMatrix {
    let mut m = [[EisInt::ZERO; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = EisInt::ONE;
    }
    m
}

fn embed_matrix(x: &ExactMatrix) -> Mat3 {
    Mat3::from_fn(|i, j| x[i][j].embed())
}

/// Heisenberg translation `[α, β]` with exact entries.
pub fn translation(alpha: EisInt, beta: EisInt) -> Result<ExactMatrix> {
    if alpha.checked_norm()? != beta.a {
        return Err(Error::NotInGammaN);
    }
    let (o, z) = (EisInt::ONE, EisInt::ZERO);
    Ok([[o, alpha, beta], [z, o, alpha.conj()], [z, z, o]])
}

/// `{J, m(u) for the six units, [α, β] for α ∈ {0, ±1, ±ω}}` (closed under inversion).
pub fn default_generators() -> Vec<ExactMatrix> {
    let (o, z) = (EisInt::ONE, EisInt::ZERO);
    let mut gens = vec![[[z, z, -o], [z, o, z], [-o, z, z]]];
    for u in units() {
        let inv2 = u.conj() * u.conj();
        gens.push([[u, z, z], [z, inv2, z], [z, z, u]]);
    }
    let h = EisInt { a: 1, b: 1 };
    for (alpha, beta) in [
        (EisInt::ONE, h),
        (-EisInt::ONE, h.conj()),
        (EisInt::OMEGA, h),
        (-EisInt::OMEGA, h.conj()),
        (EisInt::ZERO, EisInt::SQRT_M3),
        (EisInt::ZERO, -EisInt::SQRT_M3),
    ] {
        gens.push(translation(alpha, beta).expect("generators lie in Γ∩N"));
    }
    gens
}

/// Elements of word length `≤ max_len` in a generating set, deduplicated.
#[derive(Clone, Debug)]
pub struct GroupWordBall {
    pub generators: Vec<GroupElement>,
    pub max_len: usize,
    pub elements: Vec<GroupElement>,
    /// Word length of each element.
    pub lengths: Vec<usize>,
    /// Exact entries when the generators were exact.
    pub exact: Option<Vec<ExactMatrix>>,
}

fn float_key(m: &Mat3) -> Vec<i64> {
    m.iter().flat_map(|x| [(x.re / DEDUP_TOL).round() as i64, (x.im / DEDUP_TOL).round() as i64]).collect()
}

impl GroupWordBall {
    /// The ball `{identity}`.
    pub fn trivial() -> Self {
        GroupWordBall {
            generators: Vec::new(),
            max_len: 0,
            elements: vec![GroupElement::identity()],
            lengths: vec![0],
            exact: Some(vec![exact_identity()]),
        }
    }

    /// The default Picard generating set.
    pub fn picard(max_len: usize) -> Result<Self> {
        Self::from_exact(&default_generators(), max_len)
    }

    /// BFS with exact deduplication.
    pub fn from_exact(gens: &[ExactMatrix], max_len: usize) -> Result<Self> {
        let generators = gens.iter().map(|g| GroupElement::try_new(embed_matrix(g))).collect::<Result<Vec<_>>>()?;
        let mut seen: HashSet<ExactMatrix> = HashSet::from([exact_identity()]);
        let mut exact = vec![exact_identity()];
        let mut lengths = vec![0];
        let mut frontier = vec![exact_identity()];
        for len in 1..=max_len {
            let mut next = Vec::new();
            for x in &frontier {
                for g in gens {
                    let y = exact_mul(x, g)?;
                    if seen.insert(y) {
                        next.push(y);
                        exact.push(y);
                        lengths.push(len);
                    }
                }
            }
            frontier = next;
        }
        let elements = exact.iter().map(|m| GroupElement::from_matrix_unchecked(embed_matrix(m))).collect();
        Ok(GroupWordBall { generators, max_len, elements, lengths, exact: Some(exact) })
    }

    /// BFS over floating generators, deduplicating at matrix distance `1e−9`.
    pub fn from_generators(gens: Vec<GroupElement>, max_len: usize) -> Self {
        let id = GroupElement::identity();
        let mut seen: HashSet<Vec<i64>> = HashSet::from([float_key(&id.m)]);
        let mut elements = vec![id];
        let mut lengths = vec![0];
        let mut frontier = vec![id];
        for len in 1..=max_len {
            let mut next = Vec::new();
            for x in &frontier {
                for g in &gens {
                    let y = x.compose(g);
                    if seen.insert(float_key(&y.m)) {
                        next.push(y);
                        elements.push(y);
                        lengths.push(len);
                    }
                }
            }
            frontier = next;
        }
        GroupWordBall { generators: gens, max_len, elements, lengths, exact: None }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `{h·γ : γ ∈ ball}`.
    pub fn left_translate(&self, h: &GroupElement) -> Self {
        let mut out = self.clone();
        out.elements = self.elements.iter().map(|g| h.compose(g)).collect();
        out.exact = None;
        out
    }

    /// Whether `γ⁻¹` lies in the ball for every `γ`.
    pub fn closed_under_inversion(&self) -> bool {
        let keys: HashSet<Vec<i64>> = self.elements.iter().map(|g| float_key(&g.m)).collect();
        self.elements.iter().all(|g| keys.contains(&float_key(&g.inverse().m)))
    }
}

/// Which Γ-sum to truncate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AutomorphicKind {
    /// `Σ r(Z, γZ′; s)`.
    Green { z: DomainPoint, z2: DomainPoint },
    /// `Σ K(Z, γZ′; k, s)`.
    GreenK { z: DomainPoint, z2: DomainPoint },
    /// `Σ |ρ(γW, W′)|^{−2s} |j(γ, W)|^{−2s}`.
    SMatrix { w: BoundaryPoint, w2: BoundaryPoint },
    /// `Σ j^{k−s} j̄^{−k−s} ρ(γW, W′)^{−k−s} ρ̄(γW, W′)^{k−s}`.
    SMatrixK { w: BoundaryPoint, w2: BoundaryPoint },
    /// `Σ j(γ,Z)^{−k} j̄(γ,Z)^k P_k(γZ, W; s)`.
    EisBoundary { z: DomainPoint, w: BoundaryPoint },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutomorphicSum {
    pub value: C,
    pub terms: usize,
    /// Largest covariance defect over the sampled terms.
    pub sampled_covariance: f64,
}

const COVARIANCE_SAMPLES: usize = 8;

fn phase(x: C, n: f64) -> C {
    C::from_polar(1.0, n * x.arg())
}

fn abs_pow(x: C, e: C) -> C {
    (e * x.norm().ln()).exp()
}

fn orbit_guard(x: f64) -> Result<()> {
    if x < ORBIT_TOL {
        Err(Error::OrbitCollision(x))
    } else {
        Ok(())
    }
}

/// One term of an automorphic sum.
pub fn automorphic_term(kind: &AutomorphicKind, p: SpectralParam, g: &GroupElement) -> Result<C> {
    let (s, k) = (p.s, p.k as f64);
    match *kind {
        AutomorphicKind::Green { z, z2 } => {
            let u = u_invariant(&z, &g.act(&z2)?);
            orbit_guard(u)?;
            green_radial(u, s)
        }
        AutomorphicKind::GreenK { z, z2 } => {
            let gz2 = g.act(&z2)?;
            orbit_guard(sigma(&z, &gz2) - 1.0)?;
            Ok(kernel_weight(&z, &gz2, p)?.value)
        }
        AutomorphicKind::SMatrix { w, w2 } => {
            let r = rho_pair(&g.act_boundary(&w)?, &w2);
            orbit_guard(r.norm())?;
            Ok(abs_pow(r, -2.0 * s) * abs_pow(cocycle_j(g, &w), -2.0 * s))
        }
        AutomorphicKind::SMatrixK { w, w2 } => {
            let r = rho_pair(&g.act_boundary(&w)?, &w2);
            orbit_guard(r.norm())?;
            let j = cocycle_j(g, &w);
            Ok(abs_pow(j, -2.0 * s) * phase(j, 2.0 * k) * abs_pow(r, -2.0 * s) * phase(r, -2.0 * k))
        }
        AutomorphicKind::EisBoundary { z, w } => {
            let j = cocycle_j(g, &z);
            Ok(phase(j, -2.0 * k) * poisson_weight(&g.act(&z)?, &w, p)?.value)
        }
    }
}

fn covariance_sample(kind: &AutomorphicKind, p: SpectralParam, g: &GroupElement) -> Result<f64> {
    match *kind {
        AutomorphicKind::GreenK { z, z2 } => kernel_covariance_residual(g, &z, &z2, p),
        AutomorphicKind::Green { z, z2 } => {
            let a = u_invariant(&z, &z2);
            let b = u_invariant(&g.act(&z)?, &g.act(&z2)?);
            Ok((a - b).abs() / a.abs().max(f64::MIN_POSITIVE))
        }
        AutomorphicKind::EisBoundary { z, w } => poisson_transform_residual(g, &z, &w, p),
        AutomorphicKind::SMatrix { .. } | AutomorphicKind::SMatrixK { .. } => Ok(0.0),
    }
}

/// Partial sum over the ball.
pub fn automorphic_sum(kind: &AutomorphicKind, p: SpectralParam, ball: &GroupWordBall) -> Result<AutomorphicSum> {
    let terms: Vec<Result<C>> = ball.elements.par_iter().map(|g| automorphic_term(kind, p, g)).collect();
    let mut value = C::new(0.0, 0.0);
    for t in terms {
        value += t?;
    }
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sampled_covariance: f64 = 0.0;
    for g in ball.elements.iter().skip(1).take(COVARIANCE_SAMPLES) {
        sampled_covariance = sampled_covariance.max(covariance_sample(kind, p, g)?);
    }
    Ok(AutomorphicSum { value, terms: ball.len(), sampled_covariance })
}

/// `E(Z, gW; k, s)` over `B` against `j(g,W)^{s−k} j̄(g,W)^{s+k} E(Z, W; k, s)` over `g⁻¹B`.
pub fn boundary_eisenstein_covariance(
    ball: &GroupWordBall,
    g: &GroupElement,
    z: &DomainPoint,
    w: &BoundaryPoint,
    p: SpectralParam,
) -> Result<f64> {
    let lhs = automorphic_sum(&AutomorphicKind::EisBoundary { z: *z, w: g.act_boundary(w)? }, p, ball)?.value;
    let moved = ball.left_translate(&g.inverse());
    let rhs = automorphic_sum(&AutomorphicKind::EisBoundary { z: *z, w: *w }, p, &moved)?.value;
    let j = cocycle_j(g, w);
    let factor = abs_pow(j, 2.0 * p.s) * phase(j, -2.0 * p.k as f64);
    let rhs = factor * rhs;
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// `G(Z, Z′; k, s)` against `G(Z′, Z; −k, s)` on the same ball.
pub fn green_symmetry_defect(ball: &GroupWordBall, z: &DomainPoint, z2: &DomainPoint, p: SpectralParam) -> Result<f64> {
    let kind = |a: DomainPoint, b: DomainPoint| {
        if p.k == 0 {
            AutomorphicKind::Green { z: a, z2: b }
        } else {
            AutomorphicKind::GreenK { z: a, z2: b }
        }
    };
    let a = automorphic_sum(&kind(*z, *z2), p, ball)?.value;
    let b = automorphic_sum(&kind(*z2, *z), SpectralParam::new(p.s, -p.k), ball)?.value;
    Ok((a - b).norm() / a.norm())
}

/// Exact check of `[α′,β′][α,β]([α,β][α′,β′])⁻¹ = [0, 2√−3 Im(α′ᾱ)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergReport {
    pub commutator: ExactMatrix,
    /// Top-right entry of the commutator.
    pub central: EisInt,
    /// `2√−3 Im(α′ᾱ)`, with `Im` the `√−3` coefficient.
    pub expected: EisInt,
    pub identity_holds: bool,
    /// `2 q⁻¹ Im(α′ᾱ)` for `q = 1`.
    pub central_index: i64,
}

fn exact_translation_inverse(alpha: EisInt, beta: EisInt) -> Result<ExactMatrix> {
    translation(alpha.checked_neg()?, beta.conj())
}

pub fn heisenberg_checks(alpha: EisInt, beta: EisInt, alpha2: EisInt, beta2: EisInt) -> Result<HeisenbergReport> {
    let x = translation(alpha, beta)?;
    let y = translation(alpha2, beta2)?;
    let xi = exact_translation_inverse(alpha, beta)?;
    let yi = exact_translation_inverse(alpha2, beta2)?;
    let comm = exact_mul(&exact_mul(&y, &x)?, &exact_mul(&yi, &xi)?)?;
    let prod = alpha2.checked_mul(alpha.conj())?;
    // √−3 coefficient of α′ᾱ is b/2, so 2√−3·Im = b√−3 = (0, 2b)/2.
    let expected = EisInt { a: 0, b: prod.b.checked_mul(2).ok_or(Error::Overflow)? };
    let target = [
        [EisInt::ONE, EisInt::ZERO, expected],
        [EisInt::ZERO, EisInt::ONE, EisInt::ZERO],
        [EisInt::ZERO, EisInt::ZERO, EisInt::ONE],
    ];
    Ok(HeisenbergReport {
        commutator: comm,
        central: comm[0][2],
        expected,
        identity_holds: comm == target,
        central_index: prod.b,
    })
}

/// Partial sums of `σ(Z, γZ′)^{−s}` by word-length shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentProbe {
    pub s_grid: Vec<f64>,
    /// `shells[n][i]`: shell `n` at `s_grid[i]`.
    pub shells: Vec<Vec<f64>>,
    pub shell_sizes: Vec<usize>,
    /// Cumulative sums, same layout.
    pub partial: Vec<Vec<f64>>,
    /// Least-squares slope of `ln(shell)` against `n`, per `s`.
    pub slopes: Vec<f64>,
}

pub fn critical_exponent_probe(
    ball: &GroupWordBall,
    z: &DomainPoint,
    z2: &DomainPoint,
    s_grid: &[f64],
) -> Result<ExponentProbe> {
    let depth = ball.lengths.iter().copied().max().unwrap_or(0);
    let mut shells = vec![vec![0.0; s_grid.len()]; depth + 1];
    let mut shell_sizes = vec![0; depth + 1];
    for (g, &len) in ball.elements.iter().zip(&ball.lengths) {
        let sg = sigma(z, &g.act(z2)?);
        shell_sizes[len] += 1;
        for (i, &s) in s_grid.iter().enumerate() {
            shells[len][i] += sg.powf(-s);
        }
    }
    let mut partial = shells.clone();
    for n in 1..partial.len() {
        let (done, rest) = partial.split_at_mut(n);
        for (x, p) in rest[0].iter_mut().zip(&done[n - 1]) {
            *x += *p;
        }
    }
    let slopes = (0..s_grid.len())
        .map(|i| {
            let pts: Vec<(f64, f64)> = shells
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, v)| v[i] > 0.0)
                .map(|(n, v)| (n as f64, v[i].ln()))
                .collect();
            if pts.len() < 2 {
                return f64::NAN;
            }
            let m = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let (mx, my) = (sx / m, sy / m);
            let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            num / den
        })
        .collect();
    Ok(ExponentProbe { s_grid: s_grid.to_vec(), shells, shell_sizes, partial, slopes })
}

/// Number of distinct `Γ∩N`-cosets per bottom-row class (rows up to units), over an exact ball.
///
/// Two elements with equal bottom rows differ on the left by `n·diag(1, u, 1)`;
/// the coset is fixed by the unit `u`. Returns a histogram multiplicity → classes.
pub fn coset_multiplicity(ball: &GroupWordBall) -> Result<BTreeMap<usize, usize>> {
    let exact = ball.exact.as_ref().ok_or_else(|| Error::InvalidParameter("ball has no exact entries".into()))?;
    let mut by_class: BTreeMap<[EisInt; 3], HashSet<([EisInt; 3], EisInt)>> = BTreeMap::new();
    let mut reps: HashMap<[EisInt; 3], ExactMatrix> = HashMap::new();
    for m in exact {
        let row = m[2];
        let (class, _) = units()
            .into_iter()
            .map(|u| {
                let r = [u * row[0], u * row[1], u * row[2]];
                (r, u)
            })
            .max()
            .expect("six units");
        let rep = *reps.entry(row).or_insert(*m);
        // (γ·rep⁻¹) has bottom row e₃; its middle diagonal entry is the unit u.
        let rep_inv = exact_inverse_unitary(&rep)?;
        let u = exact_mul(m, &rep_inv)?[1][1];
        by_class.entry(class).or_default().insert((row, u));
    }
    let mut hist = BTreeMap::new();
    for cosets in by_class.values() {
        *hist.entry(cosets.len()).or_insert(0) += 1;
    }
    Ok(hist)
}

/// `g⁻¹ = J g* J` for `g ∈ U(2,1)` with `J = antidiag(−1, 1, −1)`.
fn exact_inverse_unitary(g: &ExactMatrix) -> Result<ExactMatrix> {
    let sign = [-1i64, 1, -1];
    let mut out = [[EisInt::ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            // (J g* J)_{ij} = J_{i,2−i} conj(g_{2−j, 2−i}) J_{2−j, j}
            let v = g[2 - j][2 - i].conj();
            *x = if sign[i] * sign[j] < 0 { v.checked_neg()? } else { v };
        }
    }
    Ok(out)
}

/// Member of `U(2,1)` built from an exact matrix, for callers in other modules.
pub fn exact_to_element(m: &ExactMatrix) -> Result<GroupElement> {
    GroupElement::try_new(embed_matrix(m))
}
