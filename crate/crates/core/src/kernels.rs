//! Compactly supported kernels on `[-1, 1]`.
//!
//! Every family here is a polynomial in `|u|` on its support, so moments over
//! arbitrary sub-intervals have exact closed forms. Those closed forms are
//! what the Riemann-sum and moment checks compare against.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel families supported by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Epanechnikov,
    Triangular,
    Biweight,
    Triweight,
    Uniform,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Epanechnikov,
        KernelFamily::Triangular,
        KernelFamily::Biweight,
        KernelFamily::Triweight,
        KernelFamily::Uniform,
    ];

    /// Coefficients `c_k` such that `K(u) = sum_k c_k |u|^k` on `|u| <= 1`.
    fn poly(self) -> &'static [f64] {
        match self {
            KernelFamily::Epanechnikov => &[0.75, 0.0, -0.75],
            KernelFamily::Triangular => &[1.0, -1.0],
            // 15/16 (1 - u^2)^2
            KernelFamily::Biweight => &[0.9375, 0.0, -1.875, 0.0, 0.9375],
            // 35/32 (1 - u^2)^3
            KernelFamily::Triweight => &[1.09375, 0.0, -3.28125, 0.0, 3.28125, 0.0, -1.09375],
            KernelFamily::Uniform => &[0.5],
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Triangular => "triangular",
            KernelFamily::Biweight => "biweight",
            KernelFamily::Triweight => "triweight",
            KernelFamily::Uniform => "uniform",
        };
        f.write_str(name)
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(KernelFamily::Epanechnikov),
            "triangular" | "tri" => Ok(KernelFamily::Triangular),
            "biweight" | "quartic" => Ok(KernelFamily::Biweight),
            "triweight" => Ok(KernelFamily::Triweight),
            "uniform" | "box" => Ok(KernelFamily::Uniform),
            other => Err(Error::InvalidConfig(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// Which part of the support a boundary-aware moment integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportRegion {
    /// `[-1, 1]`
    Interior,
    /// `[0, 1]`, the region seen from `x = 0`
    LeftBoundary,
    /// `[-1, 0]`, the region seen from `x = 1`
    RightBoundary,
}

/// A kernel together with the constants the theory refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Upper bound on `|K|`.
    pub bound: f64,
    /// Support radius, normalised to one.
    pub support_radius: f64,
    /// Lipschitz constant; infinite for the uniform kernel.
    pub lipschitz: f64,
    pub symmetric: bool,
    pub nonnegative: bool,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::new(KernelFamily::Epanechnikov)
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        let (bound, lipschitz) = match family {
            KernelFamily::Epanechnikov => (0.75, 1.5),
            KernelFamily::Triangular => (1.0, 1.0),
            // max of (15/4) u (1 - u^2) at u = 1/sqrt(3)
            KernelFamily::Biweight => (0.9375, 2.5 / 3f64.sqrt()),
            // max of (105/16) u (1 - u^2)^2 at u = 1/sqrt(5)
            KernelFamily::Triweight => (1.09375, 4.2 / 5f64.sqrt()),
            KernelFamily::Uniform => (0.5, f64::INFINITY),
        };
        KernelSpec {
            family,
            bound,
            support_radius: 1.0,
            lipschitz,
            symmetric: true,
            nonnegative: true,
        }
    }

    pub fn epanechnikov() -> Self {
        KernelSpec::new(KernelFamily::Epanechnikov)
    }

    pub fn is_lipschitz(&self) -> bool {
        self.lipschitz.is_finite()
    }

    /// `K(u)`; exactly zero for `|u| > 1`.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let a = u.abs();
        if !(a <= self.support_radius) {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 0.75 * (1.0 - a * a),
            KernelFamily::Triangular => 1.0 - a,
            KernelFamily::Biweight => {
                let w = 1.0 - a * a;
                0.9375 * w * w
            }
            KernelFamily::Triweight => {
                let w = 1.0 - a * a;
                1.09375 * w * w * w
            }
            KernelFamily::Uniform => 0.5,
        }
    }

    /// `K_h(u) = K(u / h) / h`.
    pub fn eval_scaled(&self, u: f64, h: f64) -> Result<f64> {
        check_positive_bandwidth(h)?;
        Ok(self.eval(u / h) / h)
    }

    /// Exact `int_a^b u^j K(u) du`, with `[a, b]` clipped to the support.
    pub fn partial_moment(&self, j: usize, a: f64, b: f64) -> f64 {
        let lo = a.max(-self.support_radius);
        let hi = b.min(self.support_radius);
        if !(lo < hi) {
            return 0.0;
        }
        let poly = self.family.poly();
        // integral of w^j p(w) over [p, q] with 0 <= p <= q <= 1
        let pos = |p: f64, q: f64| -> f64 {
            poly.iter()
                .enumerate()
                .map(|(k, c)| {
                    let e = (j + k + 1) as i32;
                    c * (q.powi(e) - p.powi(e)) / e as f64
                })
                .sum::<f64>()
        };
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut total = 0.0;
        if hi > 0.0 {
            total += pos(lo.max(0.0), hi);
        }
        if lo < 0.0 {
            // substitute u = -w on the negative half
            total += sign * pos((-hi).max(0.0), -lo);
        }
        total
    }

    /// `mu_j` over the interior or one-sided support.
    pub fn analytic_moment(&self, j: usize, region: SupportRegion) -> Result<f64> {
        if j > 4 {
            return Err(Error::UnsupportedMoment(j));
        }
        let (a, b) = match region {
            SupportRegion::Interior => (-1.0, 1.0),
            SupportRegion::LeftBoundary => (0.0, 1.0),
            SupportRegion::RightBoundary => (-1.0, 0.0),
        };
        Ok(self.partial_moment(j, a, b))
    }

    /// `int_0^1 K_h(u - x) ((u - x) / h)^j du`, the continuous counterpart of
    /// the design moment sum at `x`.
    pub fn truncated_moment(&self, x: f64, h: f64, j: usize) -> f64 {
        self.partial_moment(j, -x / h, (1.0 - x) / h)
    }
}

pub(crate) fn check_positive_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(h))
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    check_positive_bandwidth(h)?;
    if h < 0.5 {
        Ok(())
    } else {
        Err(Error::BandwidthOutOfRange { h })
    }
}

/// 1-based indices `i` with `|i/T - x| <= L h`.
///
/// Returns `None` only when the preconditions `L >= 1`, `T L h > 1` are
/// violated badly enough that the window holds no design point.
pub fn support_indices(t: usize, x: f64, h: f64, reach: f64) -> Option<RangeInclusive<usize>> {
    let tf = t as f64;
    let centre = x * tf;
    // compared in index units with a little slack so exact ties like
    // |55/100 - 0.5| = 0.05 are kept despite rounding
    let radius = reach * h * tf + 1e-9;
    let first = (centre - radius).ceil().max(1.0);
    let last = (centre + radius).floor().min(tf);
    if !(first <= last) {
        return None;
    }
    Some(first as usize..=last as usize)
}

/// `|T^-1 sum_i K(z_i) z_i^j - int_0^1 K((u-x)/h) ((u-x)/h)^j du|` with
/// `z_i = (i/T - x) / h`, the integral taken in closed form.
pub fn riemann_gap(spec: &KernelSpec, t: usize, x: f64, h: f64, j: usize) -> Result<f64> {
    check_bandwidth(h)?;
    if j > 4 {
        return Err(Error::UnsupportedMoment(j));
    }
    let tf = t as f64;
    let sum: f64 = match support_indices(t, x, h, spec.support_radius) {
        Some(range) => range
            .map(|i| {
                let z = (i as f64 / tf - x) / h;
                spec.eval(z) * z.powi(j as i32)
            })
            .sum(),
        None => 0.0,
    };
    let integral = h * spec.truncated_moment(x, h, j);
    Ok((sum / tf - integral).abs())
}
