//! hv-block cross-validation for the step-one bandwidth.
//!
//! For every validation centre `t` the observations
//! `t - v_block - gap ..= t + v_block + gap` are deleted, the local linear fit
//! is recomputed from what remains, and `Y_t` is predicted. The score is the
//! mean squared prediction error over the centres.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averages::{for_each_in_window, DesignSeries};
use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, KernelSpec};
use crate::local_linear::DET_GUARD;

/// Size of the gap flanking the validation block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum GapRule {
    /// A fixed number of observations on each side.
    Fixed(usize),
    /// `ceil(fraction * T * h)` for the candidate `h`.
    KernelReach(f64),
}

impl GapRule {
    pub fn resolve(&self, t: usize, h: f64) -> usize {
        match *self {
            GapRule::Fixed(n) => n,
            GapRule::KernelReach(frac) => (frac * t as f64 * h).ceil() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    /// Candidate bandwidths, ascending, all in `(0, 1/2)`.
    pub h_grid: Vec<f64>,
    /// Validation half-width in observations.
    pub v_block: usize,
    /// Removed half-width flanking the validation block.
    pub h_gap: GapRule,
    /// Score every k-th centre.
    pub subsample_stride: usize,
}

impl CvConfig {
    /// Twenty log-spaced candidates in `[0.2 (ln T / T)^{1/5}, 0.49]`,
    /// `v_block = ceil(0.02 T)` and a gap of `ceil(T h / 4)`.
    pub fn default_for(t: usize) -> Self {
        CvConfig {
            h_grid: default_h_grid(t),
            v_block: (0.02 * t as f64).ceil() as usize,
            h_gap: GapRule::KernelReach(0.25),
            subsample_stride: 1,
        }
    }

    /// Ordinary leave-one-out CV over the given grid.
    pub fn leave_one_out(h_grid: Vec<f64>) -> Self {
        CvConfig { h_grid, v_block: 0, h_gap: GapRule::Fixed(0), subsample_stride: 1 }
    }

    pub fn removed_half_width(&self, t: usize, h: f64) -> usize {
        self.v_block + self.h_gap.resolve(t, h)
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if self.h_grid.is_empty() {
            return Err(Error::InvalidConfig("empty bandwidth grid".into()));
        }
        if self.h_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("bandwidth grid must be strictly ascending".into()));
        }
        for &h in &self.h_grid {
            check_bandwidth(h)?;
        }
        if self.subsample_stride == 0 {
            return Err(Error::InvalidConfig("stride must be positive".into()));
        }
        let widest = self.h_grid.iter().map(|&h| self.removed_half_width(t, h)).max().unwrap_or(0);
        if 2 * widest + 1 >= t {
            return Err(Error::InvalidConfig(format!(
                "removed block of {} observations leaves nothing of T = {t}",
                2 * widest + 1
            )));
        }
        Ok(())
    }
}

pub fn default_h_grid(t: usize) -> Vec<f64> {
    let tf = t as f64;
    let lo = 0.2 * (tf.ln() / tf).powf(0.2);
    let hi = 0.49;
    log_spaced(lo.min(hi * 0.5), hi, 20)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Per-centre squared errors, `None` where the deletion emptied the window.
fn centre_errors(series: &DesignSeries, spec: &KernelSpec, h: f64, removed: usize, stride: usize) -> Vec<Option<f64>> {
    let values = series.values();
    let t = values.len();
    (0..t)
        .step_by(stride)
        .map(|c| {
            let x = (c + 1) as f64 / t as f64;
            let (mut s0, mut s1, mut s2, mut d0, mut d1) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for_each_in_window(spec, t, x, h, |k, z, w| {
                if k.abs_diff(c) > removed {
                    let wz = w * z;
                    s0 += w;
                    s1 += wz;
                    s2 += wz * z;
                    d0 += w * values[k];
                    d1 += wz * values[k];
                }
            });
            let scale = 1.0 / (t as f64 * h);
            let (s0, s1, s2) = (s0 * scale, s1 * scale, s2 * scale);
            let det = s0 * s2 - s1 * s1;
            if !(s0 > 0.0 && det >= DET_GUARD) {
                return None;
            }
            let pred = (s2 * d0 * scale - s1 * d1 * scale) / det;
            let r = values[c] - pred;
            Some(r * r)
        })
        .collect()
}

/// Mean squared hv-block prediction error at bandwidth `h`.
pub fn cv_score(series: &DesignSeries, spec: &KernelSpec, h: f64, cfg: &CvConfig) -> Result<f64> {
    check_bandwidth(h)?;
    let t = series.len();
    let removed = cfg.removed_half_width(t, h);
    if 2 * removed + 1 >= t {
        return Err(Error::InvalidConfig(format!("removed block too wide for T = {t}")));
    }
    let errs = centre_errors(series, spec, h, removed, cfg.subsample_stride.max(1));
    let total = errs.len();
    let kept: Vec<f64> = errs.into_iter().flatten().collect();
    let skipped = total - kept.len();
    if 2 * skipped > total || kept.is_empty() {
        return Err(Error::InfeasibleBandwidth { h, skipped, total });
    }
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Per-centre errors, for standard errors of the score.
pub fn cv_centre_errors(series: &DesignSeries, spec: &KernelSpec, h: f64, cfg: &CvConfig) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    let removed = cfg.removed_half_width(series.len(), h);
    Ok(centre_errors(series, spec, h, removed, cfg.subsample_stride.max(1)).into_iter().flatten().collect())
}

/// The CV curve over the whole grid and its minimiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub h_grid: Vec<f64>,
    /// `None` marks an infeasible candidate.
    pub scores: Vec<Option<f64>>,
    pub selected: f64,
    pub min_score: f64,
}

pub fn cv_curve(series: &DesignSeries, spec: &KernelSpec, cfg: &CvConfig) -> Result<CvReport> {
    cfg.validate(series.len())?;
    let scores: Vec<Option<f64>> = cfg
        .h_grid
        .par_iter()
        .map(|&h| match cv_score(series, spec, h, cfg) {
            Ok(s) => Ok(Some(s)),
            Err(Error::InfeasibleBandwidth { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let (selected, min_score) = argmin_prefer_larger(&cfg.h_grid, &scores).ok_or(Error::NoFeasibleBandwidth)?;
    Ok(CvReport { h_grid: cfg.h_grid.clone(), scores, selected, min_score })
}

/// Minimiser over an ascending grid; ties resolve to the larger bandwidth.
fn argmin_prefer_larger(grid: &[f64], scores: &[Option<f64>]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (&h, s) in grid.iter().zip(scores) {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s <= b) {
                best = Some((h, s));
            }
        }
    }
    best
}

/// `argmin_h cv_score(h)` over the grid.
pub fn select_bandwidth(series: &DesignSeries, spec: &KernelSpec, cfg: &CvConfig) -> Result<f64> {
    cv_curve(series, spec, cfg).map(|r| r.selected)
}
