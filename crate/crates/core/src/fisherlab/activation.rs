use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

/// Scalar activations for the theory checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Softplus,
    /// `x * Phi(x)`; not monotonic.
    GeluLike,
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            // log(1 + e^x) without overflow
            Activation::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Activation::GeluLike => x * std_normal_cdf(x),
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Softplus => sigmoid(x),
            Activation::GeluLike => std_normal_cdf(x) + x * std_normal_pdf(x),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Softplus => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::GeluLike => std_normal_pdf(x) * (2.0 - x * x),
        }
    }

    pub fn is_monotonic(self) -> bool {
        !matches!(self, Activation::GeluLike)
    }

    /// `f^-1(y)`, or `None` outside the range of `f` (and for non-monotonic
    /// activations).
    pub fn inverse(self, y: f64) -> Option<f64> {
        let x = match self {
            Activation::Tanh if y.abs() < 1.0 => y.atanh(),
            Activation::Softplus if y > 0.0 => y + (-(-y).exp_m1()).ln(),
            _ => return None,
        };
        x.is_finite().then_some(x)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
            Activation::GeluLike => "gelu-like",
        })
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "softplus" => Ok(Activation::Softplus),
            "gelu-like" | "gelu" => Ok(Activation::GeluLike),
            other => Err(format!("unknown activation `{other}` (tanh, softplus, gelu-like)")),
        }
    }
}
