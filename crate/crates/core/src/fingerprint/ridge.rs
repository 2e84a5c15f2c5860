use nalgebra::DMatrix;

use super::{FingerprintError, Result};
use crate::clients::Embedder;

/// Ridge regularization strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeConfig {
    pub alpha: f64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self { alpha: 1e-3 }
    }
}

impl RidgeConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self { alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(FingerprintError::InvalidAlpha(self.alpha))
        }
    }
}

/// Stacked difference rows for one base query (`m` rows each).
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencePairs {
    pub base_index: usize,
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
}

impl DifferencePairs {
    /// True when every input difference is exactly zero.
    pub fn is_degenerate(&self) -> bool {
        self.dx.iter().all(|v| *v == 0.0)
    }
}

/// Arithmetic mean of equal-length vectors, summed in input order.
pub fn mean_vector(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or(FingerprintError::Empty("vectors to average"))?;
    let mut acc = vec![0.0; first.len()];
    for v in vectors {
        if v.len() != acc.len() {
            return Err(FingerprintError::Shape(format!(
                "vector of length {} among vectors of length {}",
                v.len(),
                acc.len()
            )));
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let t = vectors.len() as f64;
    Ok(acc.into_iter().map(|a| a / t).collect())
}

/// Mean embedding of `texts`.
pub fn mean_embedding<S: AsRef<str>, E: Embedder + ?Sized>(texts: &[S], embedder: &E) -> Result<Vec<f64>> {
    if texts.is_empty() {
        return Err(FingerprintError::Empty("texts to embed"));
    }
    let vectors = texts
        .iter()
        .map(|t| embedder.embed(t.as_ref()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    mean_vector(&vectors)
}

fn stack_differences(origin: &[f64], points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = origin.len();
    if let Some(bad) = points.iter().find(|p| p.len() != d) {
        return Err(FingerprintError::Shape(format!(
            "vector of length {} differenced against length {d}",
            bad.len()
        )));
    }
    Ok(DMatrix::from_fn(points.len(), d, |j, c| points[j][c] - origin[c]))
}

/// Row `j` of `dx` is `pert_in[j] - base_in`; row `j` of `dy` is
/// `pert_out[j] - base_out`.
pub fn difference_pairs(
    base_index: usize,
    base_in: &[f64],
    pert_in: &[Vec<f64>],
    base_out: &[f64],
    pert_out: &[Vec<f64>],
) -> Result<DifferencePairs> {
    if pert_in.len() != pert_out.len() {
        return Err(FingerprintError::Shape(format!(
            "{} perturbed inputs but {} perturbed outputs",
            pert_in.len(),
            pert_out.len()
        )));
    }
    Ok(DifferencePairs {
        base_index,
        dx: stack_differences(base_in, pert_in)?,
        dy: stack_differences(base_out, pert_out)?,
    })
}

fn check_inputs(dx: &DMatrix<f64>, dy: &DMatrix<f64>, alpha: f64) -> Result<()> {
    RidgeConfig { alpha }.validate()?;
    if dx.nrows() == 0 {
        return Err(FingerprintError::Empty("difference rows"));
    }
    if dx.nrows() != dy.nrows() {
        return Err(FingerprintError::Shape(format!(
            "dx has {} rows, dy has {}",
            dx.nrows(),
            dy.nrows()
        )));
    }
    if dx.iter().any(|v| !v.is_finite()) {
        return Err(FingerprintError::NonFinite("input differences"));
    }
    if dy.iter().any(|v| !v.is_finite()) {
        return Err(FingerprintError::NonFinite("output differences"));
    }
    Ok(())
}

/// Solve `g z = rhs` for symmetric positive definite `g`.
fn solve_spd(g: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = g.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    g.lu()
        .solve(rhs)
        .ok_or(FingerprintError::NonFinite("regularized normal equations"))
}

/// `J = dyᵀ dx (dxᵀ dx + alpha I_d)^-1`.
pub fn ridge_primal(dx: &DMatrix<f64>, dy: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    check_inputs(dx, dy, alpha)?;
    let d = dx.ncols();
    let gram = dx.transpose() * dx + DMatrix::identity(d, d) * alpha;
    let cross = dx.transpose() * dy;
    Ok(solve_spd(gram, &cross)?.transpose())
}

/// `J = dyᵀ (dx dxᵀ + alpha I_m)^-1 dx`.
pub fn ridge_dual(dx: &DMatrix<f64>, dy: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    check_inputs(dx, dy, alpha)?;
    let m = dx.nrows();
    let kernel = dx * dx.transpose() + DMatrix::identity(m, m) * alpha;
    let z = solve_spd(kernel, dx)?;
    Ok(dy.transpose() * z)
}

/// Ridge estimate of the local Jacobian; uses the dual form when there are
/// fewer difference rows than input dimensions.
pub fn ridge_jacobian(dp: &DifferencePairs, cfg: &RidgeConfig) -> Result<DMatrix<f64>> {
    if dp.dx.nrows() < dp.dx.ncols() {
        ridge_dual(&dp.dx, &dp.dy, cfg.alpha)
    } else {
        ridge_primal(&dp.dx, &dp.dy, cfg.alpha)
    }
}

/// `sum_j |dy_j - J dx_j|^2 + alpha |J|_F^2`.
pub fn ridge_objective(dx: &DMatrix<f64>, dy: &DMatrix<f64>, j: &DMatrix<f64>, alpha: f64) -> f64 {
    let residual = dy - dx * j.transpose();
    residual.norm_squared() + alpha * j.norm_squared()
}

/// Entrywise mean, summed in list order.
pub fn aggregate(jacobians: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let first = jacobians.first().ok_or(FingerprintError::Empty("jacobians to aggregate"))?;
    let shape = first.shape();
    let mut acc = DMatrix::zeros(shape.0, shape.1);
    for j in jacobians {
        if j.shape() != shape {
            return Err(FingerprintError::Shape(format!(
                "{:?} jacobian among {:?} jacobians",
                j.shape(),
                shape
            )));
        }
        acc += j;
    }
    Ok(acc / jacobians.len() as f64)
}
