//! Step-one local linear trend estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averages::{for_each_in_window, moment_matrix, DesignSeries, MomentMatrix};
use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, KernelSpec};

/// Below this `det(S_{T,x})` the 2x2 solve is refused.
pub const DET_GUARD: f64 = 1e-12;

/// A fitted curve on an evaluation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    /// Smallest eigenvalue of the local design matrix over the grid; `NaN`
    /// for estimators without one.
    pub lambda_floor: f64,
}

impl CurveEstimate {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value at the grid point nearest to `x`; grid must be ascending.
    pub fn nearest(&self, x: f64) -> f64 {
        let pos = self.grid.partition_point(|g| *g < x);
        let idx = if pos == 0 {
            0
        } else if pos >= self.grid.len() {
            self.grid.len() - 1
        } else if (x - self.grid[pos - 1]) <= (self.grid[pos] - x) {
            pos - 1
        } else {
            pos
        };
        self.values[idx]
    }
}

fn check_fit_args(t: usize, h: f64, grid: &[f64]) -> Result<()> {
    check_bandwidth(h)?;
    if !(t as f64 * h > 2.0) {
        return Err(Error::InvalidConfig(format!("T h = {} must exceed 2", t as f64 * h)));
    }
    if let Some(x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::PointOutOfRange(*x));
    }
    Ok(())
}

/// One pass over the window: `(S_{T,x}, D_{T,x})`.
fn local_sums(values: &[f64], spec: &KernelSpec, x: f64, h: f64) -> (MomentMatrix, [f64; 2]) {
    let (mut s0, mut s1, mut s2, mut d0, mut d1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for_each_in_window(spec, values.len(), x, h, |k, z, w| {
        let wz = w * z;
        s0 += w;
        s1 += wz;
        s2 += wz * z;
        d0 += w * values[k];
        d1 += wz * values[k];
    });
    let scale = 1.0 / (values.len() as f64 * h);
    (
        MomentMatrix { s0: s0 * scale, s1: s1 * scale, s2: s2 * scale, x, h },
        [d0 * scale, d1 * scale],
    )
}

/// `e1' S^-1 D`, refusing near-singular designs.
pub(crate) fn intercept(m: &MomentMatrix, d: [f64; 2]) -> Result<f64> {
    let det = m.determinant();
    if !(det >= DET_GUARD) {
        return Err(Error::SingularDesign { x: m.x, det });
    }
    Ok((m.s2 * d[0] - m.s1 * d[1]) / det)
}

/// Local linear fit `g_hat(x) = e1' S_{T,x}^-1 D_{T,x}` at every grid point.
pub fn fit_local_linear(
    series: &DesignSeries,
    spec: &KernelSpec,
    h: f64,
    grid: &[f64],
) -> Result<CurveEstimate> {
    check_fit_args(series.len(), h, grid)?;
    let values = series.values();
    let fitted: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&x| {
            let (m, d) = local_sums(values, spec, x, h);
            intercept(&m, d).map(|g| (g, m.min_eigenvalue()))
        })
        .collect::<Result<_>>()?;
    let lambda_floor = fitted.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(CurveEstimate {
        grid: grid.to_vec(),
        values: fitted.into_iter().map(|p| p.0).collect(),
        bandwidth: h,
        lambda_floor,
    })
}

/// Fit on the design grid `{t/T}`.
pub fn fit_on_design(series: &DesignSeries, spec: &KernelSpec, h: f64) -> Result<CurveEstimate> {
    fit_local_linear(series, spec, h, &series.design_grid())
}

/// Equivalent-kernel weights `W_t(x)` so that `g_hat(x) = sum_t W_t(x) Y_t`.
pub fn weights(spec: &KernelSpec, t: usize, x: f64, h: f64) -> Result<Vec<f64>> {
    check_fit_args(t, h, &[x])?;
    let m = moment_matrix(spec, t, x, h)?;
    let det = m.determinant();
    if !(det >= DET_GUARD) {
        return Err(Error::SingularDesign { x, det });
    }
    let mut w = vec![0.0; t];
    let scale = 1.0 / (t as f64 * h * det);
    for_each_in_window(spec, t, x, h, |k, z, kz| {
        w[k] = (m.s2 - m.s1 * z) * kz * scale;
    });
    Ok(w)
}

/// `min_x lambda_min(S_{T,x})` over the grid.
pub fn eigen_floor(spec: &KernelSpec, t: usize, h: f64, grid: &[f64]) -> Result<f64> {
    check_bandwidth(h)?;
    grid.iter().try_fold(f64::INFINITY, |acc, &x| {
        Ok(acc.min(moment_matrix(spec, t, x, h)?.min_eigenvalue()))
    })
}
