//! Discrete Hubbard-Stratonovich decompositions of `exp(-J Z_i Z_j)` into
//! `gamma sum_{s=+-1} exp(-i s alpha G)` for two-qubit generators `G`.
//!
//! Matrices use the basis `|00>, |01>, |10>, |11>` with qubit `i` on the left.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliTerm};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `J < 0`, generators act on `{|01>, |10>}`.
    Negative,
    /// `J > 0`, generators act on `{|00>, |11>}`.
    Positive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// `(XX + YY)/2`
    XxPlusYy,
    /// `(XY - YX)/2`
    XyMinusYx,
    /// `(Z_j - Z_i)/2`
    ZjMinusZi,
    /// `(XX - YY)/2`
    XxMinusYy,
    /// `(XY + YX)/2`
    XyPlusYx,
    /// `(Z_j + Z_i)/2`
    ZjPlusZi,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::XxPlusYy,
        Channel::XyMinusYx,
        Channel::ZjMinusZi,
        Channel::XxMinusYy,
        Channel::XyPlusYx,
        Channel::ZjPlusZi,
    ];

    pub fn regime(self) -> Regime {
        match self {
            Channel::XxPlusYy | Channel::XyMinusYx | Channel::ZjMinusZi => Regime::Negative,
            _ => Regime::Positive,
        }
    }

    pub fn of_regime(r: Regime) -> [Channel; 3] {
        match r {
            Regime::Negative => [Channel::XxPlusYy, Channel::XyMinusYx, Channel::ZjMinusZi],
            Regime::Positive => [Channel::XxMinusYy, Channel::XyPlusYx, Channel::ZjPlusZi],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Channel::XxPlusYy => "(XX+YY)/2",
            Channel::XyMinusYx => "(XY-YX)/2",
            Channel::ZjMinusZi => "(Zj-Zi)/2",
            Channel::XxMinusYy => "(XX-YY)/2",
            Channel::XyPlusYx => "(XY+YX)/2",
            Channel::ZjPlusZi => "(Zj+Zi)/2",
        }
    }

    pub fn generator(self) -> PauliSum {
        let (a, b) = match self {
            Channel::XxPlusYy => (("XX", 1.0), ("YY", 1.0)),
            Channel::XxMinusYy => (("XX", 1.0), ("YY", -1.0)),
            Channel::XyMinusYx => (("XY", 1.0), ("YX", -1.0)),
            Channel::XyPlusYx => (("XY", 1.0), ("YX", 1.0)),
            Channel::ZjMinusZi => (("IZ", 1.0), ("ZI", -1.0)),
            Channel::ZjPlusZi => (("IZ", 1.0), ("ZI", 1.0)),
        };
        let term = |(l, c): (&str, f64)| PauliTerm::from_label(l, Complex64::new(0.5 * c, 0.0)).expect("valid label");
        PauliSum::from_terms(2, vec![term(a), term(b)]).expect("two-qubit terms")
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsVariant {
    pub regime: Regime,
    pub channel: Channel,
    pub gamma: f64,
    pub alpha: f64,
}

impl HsVariant {
    pub fn generator(&self) -> PauliSum {
        self.channel.generator()
    }

    /// `exp(-i s alpha G)` in closed form; `G^2` is the projector onto the
    /// active two-level subspace.
    pub fn summand(&self, s: i8) -> DMatrix<Complex64> {
        let g = self.generator().to_dense();
        let p = &g * &g;
        let theta = s as f64 * self.alpha;
        DMatrix::identity(4, 4) - &p + p * Complex64::new(theta.cos(), 0.0) - g * Complex64::new(0.0, theta.sin())
    }

    /// `gamma sum_s exp(-i s alpha G)`.
    pub fn rhs(&self) -> DMatrix<Complex64> {
        (self.summand(1) + self.summand(-1)) * Complex64::new(self.gamma, 0.0)
    }
}

/// `gamma` and `alpha` for coupling `J` within a regime.
pub fn regime_parameters(regime: Regime, j: f64) -> Result<(f64, f64)> {
    let x = match regime {
        Regime::Negative => 2.0 * j,
        Regime::Positive => -2.0 * j,
    };
    if !j.is_finite() || x > 0.0 {
        return Err(Error::InvalidParameter(format!("J = {j} is outside the {regime:?} regime")));
    }
    Ok(((-x / 2.0).exp() / 2.0, x.exp().acos()))
}

/// The three decompositions for the sign of `J`; `J = 0` gives `alpha = 0`.
pub fn decompose_zz(j: f64) -> Result<Vec<HsVariant>> {
    let regime = if j < 0.0 { Regime::Negative } else { Regime::Positive };
    let (gamma, alpha) = regime_parameters(regime, j)?;
    Ok(Channel::of_regime(regime).into_iter().map(|channel| HsVariant { regime, channel, gamma, alpha }).collect())
}

/// `exp(-J Z Z) = diag(e^{-J}, e^{J}, e^{J}, e^{-J})`.
pub fn zz_exponential(j: f64) -> DMatrix<Complex64> {
    let d = [(-j).exp(), j.exp(), j.exp(), (-j).exp()];
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, d.iter().map(|&x| Complex64::new(x, 0.0))))
}

fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Max elementwise deviation between `exp(-J Z Z)` and the variant's sum.
pub fn verify_variant(variant: &HsVariant, j: f64) -> f64 {
    max_dev(&zz_exponential(j), &variant.rhs())
}

/// Max deviation between the closed-form summands and a dense matrix
/// exponential.
pub fn cross_check_exponential(variant: &HsVariant) -> f64 {
    let g = variant.generator().to_dense();
    [1i8, -1]
        .iter()
        .map(|&s| {
            let dense = (&g * Complex64::new(0.0, -(s as f64) * variant.alpha)).exp();
            max_dev(&dense, &variant.summand(s))
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantCheck {
    pub channel: Channel,
    pub j: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub max_deviation: f64,
}

/// Every variant for every `J`.
pub fn verify_catalog(js: &[f64]) -> Result<Vec<VariantCheck>> {
    let mut out = Vec::new();
    for &j in js {
        for v in decompose_zz(j)? {
            out.push(VariantCheck {
                channel: v.channel,
                j,
                gamma: v.gamma,
                alpha: v.alpha,
                max_deviation: verify_variant(&v, j).max(cross_check_exponential(&v)),
            });
        }
    }
    Ok(out)
}

pub const DEFAULT_J_VALUES: [f64; 6] = [-2.0, -0.5, -0.1, 0.1, 0.5, 2.0];
