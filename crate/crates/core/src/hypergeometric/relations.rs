//! Contiguous relations and transformation formulas as residual functionals.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{gamma, gauss_2f1_routed, rgamma, HypArgs, Route, Routes};
use crate::error::{Error, Result};

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationId {
    ADownBcUp,
    AThreeTerm,
    BThreeTerm,
    CThreeTerm,
    AUpBDown,
    AUpCUp,
    AUpCDown,
    ADownBUp,
    ADownBDown,
    ADownCUp,
    ADownCDown,
    Pfaff,
    Connection,
    Quadratic,
}

impl RelationId {
    pub const ALL: [RelationId; 14] = [
        RelationId::ADownBcUp,
        RelationId::AThreeTerm,
        RelationId::BThreeTerm,
        RelationId::CThreeTerm,
        RelationId::AUpBDown,
        RelationId::AUpCUp,
        RelationId::AUpCDown,
        RelationId::ADownBUp,
        RelationId::ADownBDown,
        RelationId::ADownCUp,
        RelationId::ADownCDown,
        RelationId::Pfaff,
        RelationId::Connection,
        RelationId::Quadratic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationId::ADownBcUp => "a_down_bc_up",
            RelationId::AThreeTerm => "a_three_term",
            RelationId::BThreeTerm => "b_three_term",
            RelationId::CThreeTerm => "c_three_term",
            RelationId::AUpBDown => "a_up_b_down",
            RelationId::AUpCUp => "a_up_c_up",
            RelationId::AUpCDown => "a_up_c_down",
            RelationId::ADownBUp => "a_down_b_up",
            RelationId::ADownBDown => "a_down_b_down",
            RelationId::ADownCUp => "a_down_c_up",
            RelationId::ADownCDown => "a_down_c_down",
            RelationId::Pfaff => "pfaff",
            RelationId::Connection => "connection",
            RelationId::Quadratic => "quadratic",
        }
    }

    /// The transformation this relation restates; it is kept out of the evaluations.
    fn excluded_route(self) -> Option<Route> {
        match self {
            RelationId::Pfaff => Some(Route::Pfaff),
            RelationId::Connection => Some(Route::Connection),
            RelationId::Quadratic => Some(Route::Quadratic),
            _ => None,
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RelationId::ALL.iter().copied().find(|r| r.name() == s).ok_or_else(|| Error::UnknownExpression(s.to_string()))
    }
}

/// The signed terms of a relation; they sum to zero.
pub fn relation_terms(rel: RelationId, args: HypArgs) -> Result<Vec<C>> {
    let routes = rel.excluded_route().map_or(Routes::default(), |r| Routes::default().without(r));
    let f = |a: C, b: C, c: C, z: C| gauss_2f1_routed(HypArgs { a, b, c, z }, routes).map(|v| v.0);
    let HypArgs { a, b, c, z } = args;
    let one = C::new(1.0, 0.0);
    let terms = match rel {
        // γF(α,β;γ;z) − βzF(α,β+1;γ+1;z) − γF(α−1,β;γ;z) = 0
        RelationId::ADownBcUp => {
            vec![c * f(a, b, c, z)?, -b * z * f(a, b + 1.0, c + 1.0, z)?, -c * f(a - 1.0, b, c, z)?]
        }
        RelationId::AThreeTerm => vec![
            (c - a) * f(a - 1.0, b, c, z)?,
            (2.0 * a - c - a * z + b * z) * f(a, b, c, z)?,
            a * (z - 1.0) * f(a + 1.0, b, c, z)?,
        ],
        RelationId::BThreeTerm => vec![
            (c - b) * f(a, b - 1.0, c, z)?,
            (2.0 * b - c - b * z + a * z) * f(a, b, c, z)?,
            b * (z - 1.0) * f(a, b + 1.0, c, z)?,
        ],
        RelationId::CThreeTerm => vec![
            c * (c - 1.0) * (z - 1.0) * f(a, b, c - 1.0, z)?,
            c * (c - 1.0 - (2.0 * c - a - b - 1.0) * z) * f(a, b, c, z)?,
            (c - a) * (c - b) * z * f(a, b, c + 1.0, z)?,
        ],
        RelationId::AUpBDown => {
            vec![(c - a - b) * f(a, b, c, z)?, a * (one - z) * f(a + 1.0, b, c, z)?, -(c - b) * f(a, b - 1.0, c, z)?]
        }
        RelationId::AUpCUp => vec![
            c * (a - (c - b) * z) * f(a, b, c, z)?,
            -a * c * (one - z) * f(a + 1.0, b, c, z)?,
            (c - a) * (c - b) * z * f(a, b, c + 1.0, z)?,
        ],
        RelationId::AUpCDown => {
            vec![(c - a - 1.0) * f(a, b, c, z)?, a * f(a + 1.0, b, c, z)?, -(c - 1.0) * f(a, b, c - 1.0, z)?]
        }
        RelationId::ADownBUp => {
            vec![(c - a - b) * f(a, b, c, z)?, -(c - a) * f(a - 1.0, b, c, z)?, b * (one - z) * f(a, b + 1.0, c, z)?]
        }
        RelationId::ADownBDown => {
            vec![(b - a) * (one - z) * f(a, b, c, z)?, -(c - a) * f(a - 1.0, b, c, z)?, (c - b) * f(a, b - 1.0, c, z)?]
        }
        RelationId::ADownCUp => {
            vec![c * (one - z) * f(a, b, c, z)?, -c * f(a - 1.0, b, c, z)?, (c - b) * z * f(a, b, c + 1.0, z)?]
        }
        RelationId::ADownCDown => vec![
            (a - 1.0 - (c - b - 1.0) * z) * f(a, b, c, z)?,
            (c - a) * f(a - 1.0, b, c, z)?,
            -(c - 1.0) * (one - z) * f(a, b, c - 1.0, z)?,
        ],
        RelationId::Pfaff => vec![f(a, b, c, z)?, -(one - z).powc(-a) * f(a, c - b, c, z / (z - 1.0))?],
        RelationId::Connection => {
            let w = one - z;
            vec![
                f(a, b, c, z)?,
                -gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b) * f(a, b, a + b - c + 1.0, w)?,
                -gamma(c)
                    * gamma(a + b - c)
                    * rgamma(a)
                    * rgamma(b)
                    * w.powc(c - a - b)
                    * f(c - a, c - b, c - a - b + 1.0, w)?,
            ]
        }
        // Uses (a, b, z) with c = 2b: F(a,b;2b;4z/(1+z)²) = (1+z)^{2a} F(a, a+½−b; b+½; z²).
        RelationId::Quadratic => {
            let x = 4.0 * z / ((one + z) * (one + z));
            vec![f(a, b, 2.0 * b, x)?, -(one + z).powc(2.0 * a) * f(a, a + 0.5 - b, b + 0.5, z * z)?]
        }
    };
    Ok(terms)
}

/// `|Σ terms| / max |term|`.
pub fn contiguous_residual(rel: RelationId, args: HypArgs) -> Result<f64> {
    let terms = relation_terms(rel, args)?;
    let sum: C = terms.iter().sum();
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(sum.norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowered_a_example() {
        let r = contiguous_residual(RelationId::ADownBcUp, HypArgs::real(2.0, 1.5, 3.0, 0.3)).unwrap();
        assert!(r < 1e-13, "{r}");
    }

    #[test]
    fn a_up_c_down_degenerate() {
        let args = HypArgs::new(C::new(0.0, 0.0), C::new(0.4, 0.2), C::new(2.3, 0.1), C::new(0.3, -0.2));
        assert!(contiguous_residual(RelationId::AUpCDown, args).unwrap() < 1e-15);
    }

    #[test]
    fn names_round_trip() {
        for r in RelationId::ALL {
            assert_eq!(r.name().parse::<RelationId>().unwrap(), r);
        }
        assert!("a_up_a_up".parse::<RelationId>().is_err());
    }
}
