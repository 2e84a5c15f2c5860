use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::estimate::{mc_fisher, normal_log_density, FisherEstimate, McConfig};
use super::{Activation, FisherError, Result};
use crate::rng::derive_seed;

/// Relative MC tolerance on the DPI bound `I_Y <= 2 / W^2`.
pub const DPI_TOLERANCE: f64 = 0.02;

/// Above this relative standard error on `I_Y` the report is inconclusive.
pub const MAX_REL_STDERR: f64 = 0.05;

/// `X ~ N(0, sigma_x^2)`, `Y = f(W X + K)`, with `c1 = f'(K)`, `c2 = f''(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarModel {
    pub w: f64,
    pub k: f64,
    pub sigma_x: f64,
    pub activation: Activation,
    pub c1: f64,
    pub c2: f64,
}

impl ScalarModel {
    pub fn new(w: f64, k: f64, sigma_x: f64, activation: Activation) -> Result<Self> {
        if w == 0.0 || !w.is_finite() {
            return Err(FisherError::InvalidWeight(w));
        }
        if !(sigma_x > 0.0 && sigma_x.is_finite()) {
            return Err(FisherError::InvalidSigma(sigma_x));
        }
        if !k.is_finite() {
            return Err(FisherError::InvalidSettings(format!("K must be finite, got {k}")));
        }
        Ok(Self {
            w,
            k,
            sigma_x,
            activation,
            c1: activation.d1(k),
            c2: activation.d2(k),
        })
    }

    /// Fails when `f''(K) = 0`.
    pub fn require_curvature(&self) -> Result<()> {
        if self.c2 == 0.0 {
            Err(FisherError::ZeroCurvature)
        } else {
            Ok(())
        }
    }

    /// `I_Z(W) = 2 / W^2`.
    pub fn fisher_z(&self) -> f64 {
        2.0 / (self.w * self.w)
    }
}

/// Fisher information of `N(mu(theta), var(theta))` given `mu'`, `var'`
/// and `var` at the evaluation point.
pub fn fisher_normal_closed(dmu: f64, dvar: f64, var: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(FisherError::NonPositiveVariance(var));
    }
    Ok(dmu * dmu / var + dvar * dvar / (2.0 * var * var))
}

/// Closed-form `I_D` and its coefficient over `I_Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DClosed {
    pub value: f64,
    pub coefficient: f64,
}

pub fn fisher_d_closed_coeffs(w: f64, c1: f64, c2: f64, sigma_x: f64) -> Result<DClosed> {
    if w == 0.0 || !w.is_finite() {
        return Err(FisherError::InvalidWeight(w));
    }
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return Err(FisherError::InvalidSigma(sigma_x));
    }
    if c2 == 0.0 {
        return Err(FisherError::ZeroCurvature);
    }
    let coefficient = c1 * c1 / (2.0 * w * w * c2 * c2 * sigma_x * sigma_x) + 4.0;
    Ok(DClosed {
        value: 2.0 / (w * w) * coefficient,
        coefficient,
    })
}

pub fn fisher_d_closed(sm: &ScalarModel) -> Result<DClosed> {
    fisher_d_closed_coeffs(sm.w, sm.c1, sm.c2, sm.sigma_x)
}

/// MC estimate of `I_Y(W)` through the pushforward density of `f(Z)`.
pub fn fisher_y_mc(sm: &ScalarModel, cfg: &McConfig) -> Result<FisherEstimate> {
    let f = sm.activation;
    if !f.is_monotonic() {
        return Err(FisherError::NonMonotonic(f));
    }
    let (k, sigma_x) = (sm.k, sm.sigma_x);
    let sampler = |w: f64, rng: &mut rand_chacha::ChaCha8Rng| {
        let x: f64 = rng.sample::<f64, _>(StandardNormal) * sigma_x;
        f.eval(w * x + k)
    };
    let logdens = |w: f64, y: f64| match f.inverse(y) {
        Some(z) => normal_log_density(z, k, w * w * sigma_x * sigma_x) - f.d1(z).abs().ln(),
        None => f64::NAN,
    };
    mc_fisher(sampler, logdens, sm.w, cfg).map_err(|e| match e {
        FisherError::NonFiniteLogDensity { sample, .. } if f.inverse(sample).is_none() => {
            FisherError::InverseOutOfDomain { activation: f, y: sample }
        }
        other => other,
    })
}

/// MC estimate of `I_D(W)` on the first-order family
/// `N(c1 W, W^4 c2^2 sigma_x^2)`.
pub fn fisher_d_mc(sm: &ScalarModel, cfg: &McConfig) -> Result<FisherEstimate> {
    sm.require_curvature()?;
    let (c1, c2, s) = (sm.c1, sm.c2, sm.sigma_x);
    let var = |w: f64| w.powi(4) * c2 * c2 * s * s;
    mc_fisher(
        |w, rng| c1 * w + var(w).sqrt() * rng.sample::<f64, _>(StandardNormal),
        |w, d| normal_log_density(d, c1 * w, var(w)),
        sm.w,
        cfg,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub model: ScalarModel,
    pub seed: u64,
    pub coefficient: f64,
    pub i_z_closed: f64,
    pub i_d_closed: f64,
    /// Cross-check of `i_d_closed` on the approximate family.
    pub i_d_mc: FisherEstimate,
    pub i_y_mc: FisherEstimate,
    /// `I_D_closed >= coefficient * (I_Y - 3 se)`.
    pub bound_holds: bool,
    /// `I_Y <= (2 / W^2) (1 + DPI_TOLERANCE)`.
    pub dpi_holds: bool,
    /// False when the relative stderr of `I_Y` exceeds `MAX_REL_STDERR`.
    pub conclusive: bool,
}

impl TheoremReport {
    pub fn holds(&self) -> bool {
        self.conclusive && self.bound_holds && self.dpi_holds
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let lhs_rhs = self.coefficient * (self.i_y_mc.value - 3.0 * self.i_y_mc.stderr);
        let mut s = String::new();
        s += &format!(
            "model        f={} W={} K={} sigma_x={}\n",
            m.activation, m.w, m.k, m.sigma_x
        );
        s += &format!("c1, c2       {:.6e}, {:.6e}\n", m.c1, m.c2);
        s += &format!("coefficient  {:.6}\n", self.coefficient);
        s += &format!("I_Z closed   {:.6}\n", self.i_z_closed);
        s += &format!("I_D closed   {:.6}\n", self.i_d_closed);
        s += &format!(
            "I_D mc       {:.6} +/- {:.6}\n",
            self.i_d_mc.value, self.i_d_mc.stderr
        );
        s += &format!(
            "I_Y mc       {:.6} +/- {:.6}  (N={}, h={:e}, seed={})\n",
            self.i_y_mc.value, self.i_y_mc.stderr, self.i_y_mc.samples, self.i_y_mc.fd_step, self.seed
        );
        s += &format!(
            "bound        {:.6} >= {:.6}: {}\n",
            self.i_d_closed,
            lhs_rhs,
            verdict(self.bound_holds)
        );
        s += &format!(
            "dpi          {:.6} <= {:.6}: {}\n",
            self.i_y_mc.value,
            self.i_z_closed * (1.0 + DPI_TOLERANCE),
            verdict(self.dpi_holds)
        );
        if !self.conclusive {
            s += &format!(
                "inconclusive relative stderr {:.4} exceeds {}; increase N\n",
                self.i_y_mc.rel_stderr(),
                MAX_REL_STDERR
            );
        }
        s
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "VIOLATED"
    }
}

/// Run the closed forms and both MC estimates for one configuration.
/// Rejects `c2 = 0` before sampling.
pub fn verify_theorem(sm: &ScalarModel, cfg: &McConfig) -> Result<TheoremReport> {
    sm.require_curvature()?;
    if !sm.activation.is_monotonic() {
        return Err(FisherError::NonMonotonic(sm.activation));
    }
    let closed = fisher_d_closed(sm)?;
    let i_z_closed = fisher_normal_closed(0.0, 2.0 * sm.w * sm.sigma_x.powi(2), (sm.w * sm.sigma_x).powi(2))?;
    let y_cfg = McConfig {
        seed: derive_seed(cfg.seed, "fisher-y", &[]),
        ..*cfg
    };
    let d_cfg = McConfig {
        seed: derive_seed(cfg.seed, "fisher-d", &[]),
        ..*cfg
    };
    let i_y_mc = fisher_y_mc(sm, &y_cfg)?;
    let i_d_mc = fisher_d_mc(sm, &d_cfg)?;
    Ok(TheoremReport {
        model: *sm,
        seed: cfg.seed,
        coefficient: closed.coefficient,
        i_z_closed,
        i_d_closed: closed.value,
        bound_holds: closed.value >= closed.coefficient * (i_y_mc.value - 3.0 * i_y_mc.stderr),
        dpi_holds: i_y_mc.value <= i_z_closed * (1.0 + DPI_TOLERANCE),
        conclusive: i_y_mc.rel_stderr() <= MAX_REL_STDERR,
        i_y_mc,
        i_d_mc,
    })
}
