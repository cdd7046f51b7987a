//! Fixed-design kernel averages and the local design moment sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, support_indices, KernelSpec};

/// Observations bound to the equally spaced design `x_i = i / T`, `i = 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSeries {
    values: Vec<f64>,
}

impl DesignSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SeriesTooShort { needed: 2, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at index {}", i + 1)));
        }
        Ok(DesignSeries { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Design point of the 0-based position `k`, i.e. `(k + 1) / T`.
    #[inline]
    pub fn design_point(&self, k: usize) -> f64 {
        (k + 1) as f64 / self.values.len() as f64
    }

    pub fn design_grid(&self) -> Vec<f64> {
        design_grid(self.len())
    }
}

/// `{1/T, 2/T, ..., 1}`.
pub fn design_grid(t: usize) -> Vec<f64> {
    (1..=t).map(|i| i as f64 / t as f64).collect()
}

/// `{0, 1/(n-1), ..., 1}`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// Default sup-norm grid of 201 points.
pub fn sup_grid() -> Vec<f64> {
    uniform_grid(201)
}

fn check_args(x: f64, h: f64, j: usize) -> Result<()> {
    check_bandwidth(h)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::PointOutOfRange(x));
    }
    if j > 4 {
        return Err(Error::UnsupportedMoment(j));
    }
    Ok(())
}

/// Visits `(index0, z, K(z))` for every design point in the kernel window of `x`.
#[inline]
pub(crate) fn for_each_in_window(
    spec: &KernelSpec,
    t: usize,
    x: f64,
    h: f64,
    mut f: impl FnMut(usize, f64, f64),
) {
    let Some(range) = support_indices(t, x, h, spec.support_radius) else {
        return;
    };
    let tf = t as f64;
    for i in range {
        let z = (i as f64 / tf - x) / h;
        let k = spec.eval(z);
        if k != 0.0 {
            f(i - 1, z, k);
        }
    }
}

/// `T^-1 sum_i eps_i K_h(i/T - x) ((i/T - x)/h)^j`, summing over the kernel window only.
pub fn psi_hat(series: &DesignSeries, spec: &KernelSpec, x: f64, h: f64, j: usize) -> Result<f64> {
    check_args(x, h, j)?;
    let values = series.values();
    let mut acc = 0.0;
    for_each_in_window(spec, values.len(), x, h, |k, z, w| {
        acc += values[k] * w * z.powi(j as i32);
    });
    Ok(acc / (values.len() as f64 * h))
}

/// `s_{T,j}(x) = (T h)^-1 sum_t ((t/T - x)/h)^j K((t/T - x)/h)`.
pub fn design_moment(spec: &KernelSpec, t: usize, x: f64, h: f64, j: usize) -> Result<f64> {
    check_args(x, h, j)?;
    let mut acc = 0.0;
    for_each_in_window(spec, t, x, h, |_, z, w| acc += w * z.powi(j as i32));
    Ok(acc / (t as f64 * h))
}

/// Entries of the symmetric 2x2 local design matrix `S_{T,x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentMatrix {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub x: f64,
    pub h: f64,
}

impl MomentMatrix {
    pub fn determinant(&self) -> f64 {
        self.s0 * self.s2 - self.s1 * self.s1
    }

    /// Eigenvalues `(lambda_min, lambda_max)` in closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.s0 + self.s2);
        let half_diff = 0.5 * (self.s0 - self.s2);
        let r = half_diff.hypot(self.s1);
        // lambda_min = det / lambda_max avoids cancellation when det is tiny
        let lmax = mean + r;
        let lmin = if lmax > 0.0 { self.determinant() / lmax } else { mean - r };
        (lmin, lmax)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    /// `S^-1 v` via the adjugate; `None` when the determinant is not positive.
    pub fn solve(&self, v: [f64; 2]) -> Option<[f64; 2]> {
        let det = self.determinant();
        if !(det > 0.0) {
            return None;
        }
        Some([
            (self.s2 * v[0] - self.s1 * v[1]) / det,
            (self.s0 * v[1] - self.s1 * v[0]) / det,
        ])
    }
}

pub fn moment_matrix(spec: &KernelSpec, t: usize, x: f64, h: f64) -> Result<MomentMatrix> {
    check_args(x, h, 0)?;
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for_each_in_window(spec, t, x, h, |_, z, w| {
        s0 += w;
        s1 += w * z;
        s2 += w * z * z;
    });
    let scale = 1.0 / (t as f64 * h);
    Ok(MomentMatrix { s0: s0 * scale, s1: s1 * scale, s2: s2 * scale, x, h })
}

/// `D_{T,x}`: the Y-weighted counterparts of the first column of `S_{T,x}`.
pub fn data_vector(series: &DesignSeries, spec: &KernelSpec, x: f64, h: f64) -> Result<[f64; 2]> {
    check_args(x, h, 0)?;
    let values = series.values();
    let (mut d0, mut d1) = (0.0, 0.0);
    for_each_in_window(spec, values.len(), x, h, |k, z, w| {
        d0 += values[k] * w;
        d1 += values[k] * w * z;
    });
    let scale = 1.0 / (values.len() as f64 * h);
    Ok([d0 * scale, d1 * scale])
}
