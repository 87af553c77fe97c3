//! Exact arithmetic in the Eisenstein integers 𝒪 = ℤ + ℤω, ω = (−1+√−3)/2.
//!
//! An element is stored as a pair `(a, b)` meaning `(a + b√−3)/2` with
//! `a ≡ b (mod 2)`. All arithmetic is checked; overflow is an error.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `(a + b√−3)/2` with `a ≡ b (mod 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EisInt {
    pub a: i64,
    pub b: i64,
}

impl EisInt {
    pub const ZERO: EisInt = EisInt { a: 0, b: 0 };
    pub const ONE: EisInt = EisInt { a: 2, b: 0 };
    /// ω = (−1+√−3)/2.
    pub const OMEGA: EisInt = EisInt { a: -1, b: 1 };
    /// √−3.
    pub const SQRT_M3: EisInt = EisInt { a: 0, b: 2 };

    /// Build from half-integer coordinates, rejecting pairs of mixed parity.
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if (a - b).rem_euclid(2) != 0 {
            return Err(Error::InvalidParameter(format!("({a},{b}) violates a ≡ b mod 2")));
        }
        Ok(EisInt { a, b })
    }

    /// The rational integer `n`.
    pub fn from_int(n: i64) -> Result<Self> {
        Ok(EisInt { a: n.checked_mul(2).ok_or(Error::Overflow)?, b: 0 })
    }

    /// `x + yω` in the ℤ[ω] basis.
    pub fn from_omega_basis(x: i64, y: i64) -> Result<Self> {
        let a = x.checked_mul(2).and_then(|v| v.checked_sub(y)).ok_or(Error::Overflow)?;
        Ok(EisInt { a, b: y })
    }

    /// Coordinates `(x, y)` with `self = x + yω`.
    pub fn to_omega_basis(self) -> (i64, i64) {
        ((self.a + self.b) / 2, self.b)
    }

    pub fn is_zero(self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn parity_ok(self) -> bool {
        (self.a - self.b).rem_euclid(2) == 0
    }

    pub fn checked_add(self, o: Self) -> Result<Self> {
        Ok(EisInt {
            a: self.a.checked_add(o.a).ok_or(Error::Overflow)?,
            b: self.b.checked_add(o.b).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_sub(self, o: Self) -> Result<Self> {
        Ok(EisInt {
            a: self.a.checked_sub(o.a).ok_or(Error::Overflow)?,
            b: self.b.checked_sub(o.b).ok_or(Error::Overflow)?,
        })
    }

    pub fn checked_neg(self) -> Result<Self> {
        Ok(EisInt { a: self.a.checked_neg().ok_or(Error::Overflow)?, b: self.b.checked_neg().ok_or(Error::Overflow)? })
    }

    /// `((ac − 3bd) + (ad + bc)√−3)/4`; parity makes both halves even.
    pub fn checked_mul(self, o: Self) -> Result<Self> {
        let ac = self.a.checked_mul(o.a).ok_or(Error::Overflow)?;
        let bd3 = self.b.checked_mul(o.b).and_then(|v| v.checked_mul(3)).ok_or(Error::Overflow)?;
        let ad = self.a.checked_mul(o.b).ok_or(Error::Overflow)?;
        let bc = self.b.checked_mul(o.a).ok_or(Error::Overflow)?;
        let re = ac.checked_sub(bd3).ok_or(Error::Overflow)?;
        let im = ad.checked_add(bc).ok_or(Error::Overflow)?;
        Ok(EisInt { a: re / 2, b: im / 2 })
    }

    pub fn conj(self) -> Self {
        EisInt { a: self.a, b: -self.b }
    }

    /// Field norm `(a² + 3b²)/4 = x·x̄`.
    pub fn norm(self) -> i64 {
        self.checked_norm().expect("norm overflow")
    }

    pub fn checked_norm(self) -> Result<i64> {
        let a2 = self.a.checked_mul(self.a).ok_or(Error::Overflow)?;
        let b2 = self.b.checked_mul(self.b).and_then(|v| v.checked_mul(3)).ok_or(Error::Overflow)?;
        Ok(a2.checked_add(b2).ok_or(Error::Overflow)? / 4)
    }

    /// Pair `(x̄, N(x))`.
    pub fn conj_norm(self) -> (Self, i64) {
        (self.conj(), self.norm())
    }

    /// Twice the coefficient of √−3, i.e. the integer `b`.
    pub fn sqrt_m3_coeff_twice(self) -> i64 {
        self.b
    }

    /// Coefficient of √−3 when `self` lies in ℤ[√−3] (both halves even).
    ///
    /// This is the "Im" of the integer basis `a + b√−3`; it is undefined for
    /// elements like ω whose √−3 coefficient is a half-integer.
    pub fn im_integer_basis(self) -> Option<i64> {
        if self.a % 2 == 0 && self.b % 2 == 0 {
            Some(self.b / 2)
        } else {
            None
        }
    }

    pub fn embed(self) -> Complex64 {
        Complex64::new(self.a as f64 / 2.0, self.b as f64 * SQRT3 / 2.0)
    }

    pub fn is_unit(self) -> bool {
        self.norm() == 1
    }

    /// `0 ≤ arg < π/3`, i.e. `0 ≤ b < a` in half-integer coordinates.
    pub fn is_canonical(self) -> bool {
        self.b >= 0 && self.b < self.a
    }

    /// The unique associate with argument in `[0, π/3)`; zero maps to zero.
    pub fn canonical_associate(self) -> Self {
        if self.is_zero() {
            return self;
        }
        units().into_iter().map(|u| u * self).find(|x| x.is_canonical()).expect("exactly one associate is canonical")
    }

    /// Euclidean division `self = q·d + r` with `N(r) < N(d)`.
    pub fn div_rem(self, d: Self) -> Result<(Self, Self)> {
        if d.is_zero() {
            return Err(Error::InvalidParameter("division by zero".into()));
        }
        let n = d.checked_norm()?;
        let num = self.checked_mul(d.conj())?;
        // self/d = (num.a + num.b √−3) / (2n)
        let bq = num.b as f64 / n as f64;
        let aq = num.a as f64 / n as f64;
        let mut best: Option<(i64, Self, Self)> = None;
        for b in [bq.floor() as i64 - 1, bq.floor() as i64, bq.floor() as i64 + 1, bq.ceil() as i64 + 1] {
            let af = aq.floor() as i64;
            for a in [af - 2, af - 1, af, af + 1, af + 2] {
                if (a - b).rem_euclid(2) != 0 {
                    continue;
                }
                let q = EisInt { a, b };
                let r = self.checked_sub(q.checked_mul(d)?)?;
                let nr = r.checked_norm()?;
                let better = match best {
                    None => true,
                    Some((bn, bq_, _)) => match nr.cmp(&bn) {
                        Ordering::Less => true,
                        Ordering::Equal => q < bq_,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((nr, q, r));
                }
            }
        }
        let (nr, q, r) = best.expect("candidate set is nonempty");
        debug_assert!(nr < n);
        Ok((q, r))
    }

    /// Does `self` divide `x` exactly?
    pub fn divides(self, x: Self) -> bool {
        if self.is_zero() {
            return x.is_zero();
        }
        matches!(x.div_rem(self), Ok((_, r)) if r.is_zero())
    }
}

/// The six units ±1, ±ω, ±ω̄.
pub fn units() -> Vec<EisInt> {
    vec![
        EisInt { a: 2, b: 0 },
        EisInt { a: 1, b: 1 },
        EisInt { a: -1, b: 1 },
        EisInt { a: -2, b: 0 },
        EisInt { a: -1, b: -1 },
        EisInt { a: 1, b: -1 },
    ]
}

/// Greatest common divisor, normalized to the canonical associate.
pub fn gcd(x: EisInt, y: EisInt) -> Result<EisInt> {
    if x.is_zero() && y.is_zero() {
        return Err(Error::GcdOfZeros);
    }
    let (mut p, mut q) = (x, y);
    while !q.is_zero() {
        let (_, r) = p.div_rem(q)?;
        p = q;
        q = r;
    }
    Ok(p.canonical_associate())
}

/// gcd of three elements, or `None` when all vanish.
pub fn gcd3(x: EisInt, y: EisInt, z: EisInt) -> Option<EisInt> {
    let mut acc: Option<EisInt> = None;
    for v in [x, y, z] {
        if v.is_zero() {
            continue;
        }
        acc = Some(match acc {
            None => v.canonical_associate(),
            Some(g) => gcd(g, v).ok()?,
        });
    }
    acc
}

/// Ring operation selector used by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
}

pub fn arith(op: ArithOp, x: EisInt, y: EisInt) -> Result<EisInt> {
    match op {
        ArithOp::Add => x.checked_add(y),
        ArithOp::Sub => x.checked_sub(y),
        ArithOp::Mul => x.checked_mul(y),
        ArithOp::Neg => x.checked_neg(),
    }
}

impl Add for EisInt {
    type Output = EisInt;
    fn add(self, o: Self) -> Self {
        self.checked_add(o).expect("EisInt overflow")
    }
}

impl Sub for EisInt {
    type Output = EisInt;
    fn sub(self, o: Self) -> Self {
        self.checked_sub(o).expect("EisInt overflow")
    }
}

impl Mul for EisInt {
    type Output = EisInt;
    fn mul(self, o: Self) -> Self {
        self.checked_mul(o).expect("EisInt overflow")
    }
}

impl Neg for EisInt {
    type Output = EisInt;
    fn neg(self) -> Self {
        self.checked_neg().expect("EisInt overflow")
    }
}

impl fmt::Display for EisInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl FromStr for EisInt {
    type Err = Error;

    /// Accepts `(a,b)` or `a/2+b/2*sqrt(-3)` (also `a/2-b/2*sqrt(-3)`).
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidParameter(format!("cannot parse Eisenstein integer '{s}'"));
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let mut it = inner.split(',');
            let a = it.next().ok_or_else(bad)?.parse::<i64>().map_err(|_| bad())?;
            let b = it.next().ok_or_else(bad)?.parse::<i64>().map_err(|_| bad())?;
            if it.next().is_some() {
                return Err(bad());
            }
            return EisInt::new(a, b);
        }
        let body = t.strip_suffix("*sqrt(-3)").ok_or_else(bad)?;
        let body = body.strip_suffix("/2").ok_or_else(bad)?;
        // body = "<a>/2<sign><b>"
        let split = body[1..].find(['+', '-']).map(|i| i + 1).ok_or_else(bad)?;
        let (first, second) = body.split_at(split);
        let a = first.strip_suffix("/2").ok_or_else(bad)?.parse::<i64>().map_err(|_| bad())?;
        let b = second.strip_prefix('+').unwrap_or(second).parse::<i64>().map_err(|_| bad())?;
        EisInt::new(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_squared() {
        let w = EisInt::OMEGA;
        assert_eq!(w * w, EisInt { a: -1, b: -1 });
        assert_eq!(w * w.conj(), EisInt::ONE);
        assert_eq!(w * w * w, EisInt::ONE);
    }

    #[test]
    fn conj_norm_examples() {
        assert_eq!(EisInt::OMEGA.conj_norm(), (EisInt { a: -1, b: -1 }, 1));
        assert_eq!(EisInt::ZERO.conj_norm(), (EisInt::ZERO, 0));
        assert_eq!(EisInt { a: 4, b: 2 }.conj_norm(), (EisInt { a: 4, b: -2 }, 7));
    }

    #[test]
    fn unit_group() {
        let us = units();
        assert_eq!(us.len(), 6);
        assert!(us.iter().all(|u| u.norm() == 1));
        let prod = us.iter().fold(EisInt::ONE, |acc, &u| acc * u);
        assert_eq!(prod, -EisInt::ONE);
        for &u in &us {
            assert!(us.contains(&u.conj()));
            for &v in &us {
                assert!(us.contains(&(u * v)));
            }
        }
    }

    #[test]
    fn gcd_examples() {
        let two = EisInt::from_int(2).unwrap();
        let x = EisInt { a: 2, b: 2 };
        assert_eq!(gcd(two, x).unwrap(), x.canonical_associate());
        assert_eq!(gcd(x, EisInt::ZERO).unwrap(), x.canonical_associate());
        assert_eq!(gcd(EisInt::OMEGA, EisInt { a: 7, b: 3 }).unwrap(), EisInt::ONE);
        assert_eq!(gcd(EisInt::ZERO, EisInt::ZERO), Err(Error::GcdOfZeros));
    }

    #[test]
    fn gcd_brute_force_small() {
        // Compare against the largest-norm common divisor found by search.
        let elems: Vec<EisInt> =
            (-6..=6).flat_map(|a| (-6..=6).map(move |b| EisInt { a, b })).filter(|x| x.parity_ok()).collect();
        for &x in elems.iter().step_by(7) {
            for &y in elems.iter().step_by(5) {
                if x.is_zero() && y.is_zero() {
                    continue;
                }
                let g = gcd(x, y).unwrap();
                assert!(g.divides(x) && g.divides(y));
                let best = elems
                    .iter()
                    .filter(|d| !d.is_zero() && d.divides(x) && d.divides(y))
                    .map(|d| d.norm())
                    .max()
                    .unwrap();
                assert_eq!(g.norm(), best, "gcd({x},{y})");
            }
        }
    }

    #[test]
    fn embed_values() {
        assert_eq!(EisInt::ONE.embed(), Complex64::new(1.0, 0.0));
        let w = EisInt::OMEGA.embed();
        assert_eq!(w.re, -0.5);
        assert!((w.im - 0.866_025_403_784_438_6).abs() < 1e-16);
    }

    #[test]
    fn overflow_is_an_error() {
        let big = EisInt { a: i64::MAX - 1, b: 0 };
        assert_eq!(big.checked_mul(big), Err(Error::Overflow));
        assert_eq!(big.checked_add(big), Err(Error::Overflow));
    }

    #[test]
    fn parse_forms() {
        assert_eq!("(4,2)".parse::<EisInt>().unwrap(), EisInt { a: 4, b: 2 });
        assert_eq!("-1/2+1/2*sqrt(-3)".parse::<EisInt>().unwrap(), EisInt::OMEGA);
        assert_eq!("3/2-1/2*sqrt(-3)".parse::<EisInt>().unwrap(), EisInt { a: 3, b: -1 });
        assert!("(1,2)".parse::<EisInt>().is_err());
    }

    #[test]
    fn integer_basis_accessor() {
        assert_eq!(EisInt::SQRT_M3.im_integer_basis(), Some(1));
        assert_eq!(EisInt::OMEGA.im_integer_basis(), None);
        assert_eq!(EisInt::OMEGA.sqrt_m3_coeff_twice(), 1);
    }
}
