//! Regression with time-varying AR(1) errors:
//! `Y_t = g(t/T) + V_t`, `V_t = phi(t/T) V_{t-1} + e_t`.
//!
//! Step one estimates `g` by local linear smoothing, step two estimates `phi`
//! by a local constant ratio of lagged residual products.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averages::{for_each_in_window, DesignSeries};
use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, KernelSpec};
use crate::local_linear::{fit_on_design, CurveEstimate};

/// Smallest admissible `Psi_2(x)` in the step-two ratio.
pub const DENOMINATOR_GUARD: f64 = 1e-10;

pub type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Innovation law, always rescaled to variance `sigma_e^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Innovation {
    #[default]
    Gaussian,
    Uniform,
    /// Student-t with `df > 4` degrees of freedom.
    StudentT { df: f64 },
}

impl Innovation {
    fn validate(&self) -> Result<()> {
        match *self {
            Innovation::StudentT { df } if !(df > 4.0) => Err(Error::InvalidConfig(format!(
                "student-t innovations need df > 4, got {df}"
            ))),
            _ => Ok(()),
        }
    }

    /// A unit-variance draw.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Innovation::Gaussian => {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                z
            }
            Innovation::Uniform => {
                let u: f64 = rng.random_range(-1.0..1.0);
                u * 3f64.sqrt()
            }
            Innovation::StudentT { df } => {
                let t = StudentT::new(df).expect("validated df").sample(rng);
                t * ((df - 2.0) / df).sqrt()
            }
        }
    }
}

/// Trend `g`, AR coefficient curve `phi`, and innovation scale.
#[derive(Clone)]
pub struct TvarModel {
    g: CurveFn,
    phi: CurveFn,
    pub sigma_e: f64,
    /// `max |phi|` over a 10^4-point grid of `[0, 1]`.
    pub phi_bound: f64,
    pub innovation: Innovation,
}

impl fmt::Debug for TvarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TvarModel")
            .field("sigma_e", &self.sigma_e)
            .field("phi_bound", &self.phi_bound)
            .field("innovation", &self.innovation)
            .finish_non_exhaustive()
    }
}

impl TvarModel {
    pub fn new(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma_e: f64,
    ) -> Result<Self> {
        if !(sigma_e >= 0.0 && sigma_e.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma_e must be >= 0, got {sigma_e}")));
        }
        let n = 10_000;
        let phi_bound = (0..n)
            .map(|k| phi(k as f64 / (n - 1) as f64).abs())
            .fold(0.0, f64::max);
        if !(phi_bound < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "max |phi| = {phi_bound} violates the bound max |phi| < 1"
            )));
        }
        Ok(TvarModel {
            g: Arc::new(g),
            phi: Arc::new(phi),
            sigma_e,
            phi_bound,
            innovation: Innovation::Gaussian,
        })
    }

    pub fn with_innovation(mut self, innovation: Innovation) -> Result<Self> {
        innovation.validate()?;
        self.innovation = innovation;
        Ok(self)
    }

    /// The Monte Carlo design: `g(u) = -70 + 134u - 120 tanh(1.1(u - 0.56))`,
    /// `phi(u) = 0.755 + 0.02 exp(-0.36u) sin(1.72 pi u + 2.1)`.
    pub fn monte_carlo(sigma2: f64) -> Result<Self> {
        TvarModel::new(mc_trend, mc_phi, sigma2.sqrt())
    }

    /// Constant AR coefficient with the given trend.
    pub fn constant_phi(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi: f64,
        sigma_e: f64,
    ) -> Result<Self> {
        TvarModel::new(g, move |_| phi, sigma_e)
    }

    pub fn g(&self, u: f64) -> f64 {
        (self.g)(u)
    }

    pub fn phi(&self, u: f64) -> f64 {
        (self.phi)(u)
    }

    /// Simulates `Y_1..Y_T` from a generator seeded with `seed`.
    pub fn simulate(&self, t: usize, seed: u64) -> Result<DesignSeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.simulate_with(t, &mut rng)
    }

    /// Simulation drawing from a caller-owned generator. `V_0` is drawn first,
    /// then `e_1..e_T` in order.
    pub fn simulate_with<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Result<DesignSeries> {
        if t < 2 {
            return Err(Error::SeriesTooShort { needed: 2, got: t });
        }
        let (_, v) = self.simulate_parts(t, rng);
        let tf = t as f64;
        let ys = v
            .iter()
            .enumerate()
            .map(|(k, v)| self.g((k + 1) as f64 / tf) + v)
            .collect();
        DesignSeries::new(ys)
    }

    /// `(V_0, [V_1..V_T])` without the trend.
    pub fn simulate_errors<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> (f64, Vec<f64>) {
        self.simulate_parts(t, rng)
    }

    fn simulate_parts<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> (f64, Vec<f64>) {
        let phi0 = self.phi(0.0);
        let sd0 = self.sigma_e / (1.0 - phi0 * phi0).sqrt();
        let v0 = Normal::new(0.0, sd0).expect("finite scale").sample(rng);
        let tf = t as f64;
        let mut prev = v0;
        let mut out = Vec::with_capacity(t);
        for k in 1..=t {
            let e = self.sigma_e * self.innovation.draw(rng);
            prev = self.phi(k as f64 / tf) * prev + e;
            out.push(prev);
        }
        (v0, out)
    }
}

pub fn mc_trend(u: f64) -> f64 {
    -70.0 + 134.0 * u - 120.0 * (1.1 * (u - 0.56)).tanh()
}

pub fn mc_phi(u: f64) -> f64 {
    0.755 + 0.02 * (-0.36 * u).exp() * (1.72 * std::f64::consts::PI * u + 2.1).sin()
}

/// Design points `t/T` inside `[margin, 1 - margin]`.
pub fn interior_grid(t: usize, margin: f64) -> Vec<f64> {
    let tf = t as f64;
    (1..=t)
        .map(|i| i as f64 / tf)
        .filter(|x| *x >= margin && *x <= 1.0 - margin)
        .collect()
}

/// Default interior margin for a step-two bandwidth `v`: `2v`, capped at
/// `0.25` but never below `v` so every interior window stays inside `[0, 1]`.
pub fn default_interior_margin(v: f64) -> f64 {
    (2.0 * v).min(0.25).max(v)
}

/// Local constant estimate of `phi` at each grid point:
/// `sum_{t>=2} G_v(t/T - x) V_t V_{t-1} / sum_{t>=2} G_v(t/T - x) V_{t-1}^2`.
pub fn fit_local_constant_phi(
    v_hat: &[f64],
    spec: &KernelSpec,
    v_bw: f64,
    grid: &[f64],
) -> Result<CurveEstimate> {
    if v_hat.len() < 3 {
        return Err(Error::SeriesTooShort { needed: 3, got: v_hat.len() });
    }
    check_bandwidth(v_bw)?;
    if let Some(x) = grid.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::PointOutOfRange(*x));
    }
    let t = v_hat.len();
    let scale = 1.0 / (t as f64 * v_bw);
    let values = grid
        .par_iter()
        .map(|&x| {
            let (mut num, mut den) = (0.0, 0.0);
            for_each_in_window(spec, t, x, v_bw, |k, _, w| {
                if k >= 1 {
                    num += w * v_hat[k] * v_hat[k - 1];
                    den += w * v_hat[k - 1] * v_hat[k - 1];
                }
            });
            let den = den * scale;
            if !(den >= DENOMINATOR_GUARD) {
                return Err(Error::DegenerateDenominator { x, value: den });
            }
            Ok(num * scale / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CurveEstimate { grid: grid.to_vec(), values, bandwidth: v_bw, lambda_floor: f64::NAN })
}

/// Output of the two-step procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepFit {
    pub g_hat: CurveEstimate,
    /// `V_t = Y_t - g_hat(t/T)`, length `T`.
    pub residuals_v: Vec<f64>,
    /// `phi_hat` on the interior design points.
    pub phi_hat: CurveEstimate,
    /// `e_t = V_t - phi_hat(t/T) V_{t-1}` for `t = 2..T`, length `T - 1`.
    pub residuals_e: Vec<f64>,
    /// Marks residuals whose `phi_hat` was taken from the nearest interior point.
    pub residuals_e_clamped: Vec<bool>,
    pub h: f64,
    pub v: f64,
    pub interior_margin: f64,
}

impl TwoStepFit {
    /// `phi_hat` at every design point, clamped to the interior outside it.
    pub fn phi_on_design(&self) -> Vec<f64> {
        let t = self.residuals_v.len();
        (1..=t).map(|i| self.phi_hat.nearest(i as f64 / t as f64)).collect()
    }
}

/// Runs step one on the design grid and step two on `[b, 1 - b]`.
pub fn fit_two_step(
    series: &DesignSeries,
    spec_k: &KernelSpec,
    spec_g: &KernelSpec,
    h: f64,
    v_bw: f64,
    interior_margin: f64,
) -> Result<TwoStepFit> {
    if !(v_bw > 0.0 && v_bw <= interior_margin && interior_margin < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < v <= b < 1/2, got v = {v_bw}, b = {interior_margin}"
        )));
    }
    let t = series.len();
    let g_hat = fit_on_design(series, spec_k, h)?;
    let residuals_v: Vec<f64> =
        series.values().iter().zip(&g_hat.values).map(|(y, g)| y - g).collect();

    let grid = interior_grid(t, interior_margin);
    if grid.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "interior [{interior_margin}, {}] holds no design point",
            1.0 - interior_margin
        )));
    }
    let phi_hat = fit_local_constant_phi(&residuals_v, spec_g, v_bw, &grid)?;

    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let tf = t as f64;
    let mut residuals_e = Vec::with_capacity(t - 1);
    let mut clamped = Vec::with_capacity(t - 1);
    for k in 1..t {
        let x = (k + 1) as f64 / tf;
        residuals_e.push(residuals_v[k] - phi_hat.nearest(x) * residuals_v[k - 1]);
        clamped.push(x < lo || x > hi);
    }
    Ok(TwoStepFit {
        g_hat,
        residuals_v,
        phi_hat,
        residuals_e,
        residuals_e_clamped: clamped,
        h,
        v: v_bw,
        interior_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averages::uniform_grid;

    fn epa() -> KernelSpec {
        KernelSpec::epanechnikov()
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
    }

    fn lag1(xs: &[f64]) -> f64 {
        let (m, _) = mean_var(xs);
        let num: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let den: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
        num / den
    }

    #[test]
    fn dgp_anchors() {
        assert!((mc_trend(0.56) - 5.04).abs() < 1e-12);
        let expected = 0.755 + 0.02 * 2.1f64.sin();
        assert!((mc_phi(0.0) - expected).abs() < 1e-15);
        assert!((mc_phi(0.0) - 0.772_26).abs() < 1e-5);
    }

    #[test]
    fn noiseless_simulation_is_the_trend() {
        let m = TvarModel::new(mc_trend, mc_phi, 0.0).unwrap();
        let s = m.simulate(50, 1).unwrap();
        for (k, y) in s.values().iter().enumerate() {
            assert_eq!(*y, mc_trend((k + 1) as f64 / 50.0));
        }
    }

    #[test]
    fn white_noise_when_phi_is_zero() {
        let m = TvarModel::constant_phi(|_| 0.0, 0.0, 1.0).unwrap();
        let s = m.simulate(10_000, 4).unwrap();
        let r = lag1(s.values());
        assert!(r.abs() <= 2.5 / 100.0, "{r}");
    }

    #[test]
    fn stationary_ar1_variance() {
        let m = TvarModel::constant_phi(|_| 0.0, 0.75, 1.0).unwrap();
        let s = m.simulate(100_000, 9).unwrap();
        let (_, var) = mean_var(s.values());
        let target = 1.0 / (1.0 - 0.75 * 0.75);
        assert!((var / target - 1.0).abs() < 0.03, "{var} vs {target}");
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = TvarModel::monte_carlo(1.0).unwrap();
        assert_eq!(m.simulate(300, 42).unwrap(), m.simulate(300, 42).unwrap());
        assert_ne!(m.simulate(300, 42).unwrap(), m.simulate(300, 43).unwrap());
    }

    #[test]
    fn rejects_explosive_phi() {
        assert!(TvarModel::constant_phi(|_| 0.0, 1.0, 1.0).is_err());
        assert!(TvarModel::new(|_| 0.0, |u| 0.5 + u, 1.0).is_err());
        let m = TvarModel::monte_carlo(1.0).unwrap();
        assert!(m.phi_bound < 0.8 && m.phi_bound > 0.77);
    }

    #[test]
    fn non_gaussian_innovations_have_unit_scale() {
        for inn in [Innovation::Uniform, Innovation::StudentT { df: 8.0 }] {
            let m = TvarModel::constant_phi(|_| 0.0, 0.0, 2.0).unwrap().with_innovation(inn).unwrap();
            let s = m.simulate(50_000, 1).unwrap();
            let (_, var) = mean_var(s.values());
            assert!((var / 4.0 - 1.0).abs() < 0.05, "{inn:?}: {var}");
        }
        let bad = TvarModel::constant_phi(|_| 0.0, 0.0, 1.0)
            .unwrap()
            .with_innovation(Innovation::StudentT { df: 3.0 });
        assert!(bad.is_err());
    }

    #[test]
    fn geometric_residuals_match_explicit_ratio() {
        let (c, rho, t) = (2.0, 0.97f64, 200usize);
        let v: Vec<f64> = (1..=t).map(|k| c * rho.powi(k as i32)).collect();
        let x = 0.5;
        let bw = 0.1;
        let fit = fit_local_constant_phi(&v, &epa(), bw, &[x]).unwrap();
        // explicit oracle: full sums over t = 2..T, no window restriction
        let (mut num, mut den) = (0.0, 0.0);
        for k in 1..t {
            let w = epa().eval(((k + 1) as f64 / t as f64 - x) / bw);
            num += w * v[k] * v[k - 1];
            den += w * v[k - 1] * v[k - 1];
        }
        assert!((fit.values[0] - num / den).abs() < 1e-12);
        assert!((fit.values[0] - rho).abs() < 1e-12);
    }

    #[test]
    fn alternating_residuals_give_minus_one() {
        let v: Vec<f64> = (1..=400).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let fit = fit_local_constant_phi(&v, &epa(), 0.1, &uniform_grid(11)[2..9]).unwrap();
        assert!(fit.values.iter().all(|p| (p + 1.0).abs() < 1e-12));
    }

    #[test]
    fn phi_is_scale_invariant() {
        let m = TvarModel::constant_phi(|_| 0.0, 0.6, 1.0).unwrap();
        let v = m.simulate(2000, 8).unwrap().into_values();
        let grid = interior_grid(2000, 0.2);
        let a = fit_local_constant_phi(&v, &epa(), 0.1, &grid).unwrap();
        for c in [-3.0, 1e-3, 250.0] {
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            let b = fit_local_constant_phi(&scaled, &epa(), 0.1, &grid).unwrap();
            for (p, q) in a.values.iter().zip(&b.values) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_phi_is_recovered() {
        let m = TvarModel::constant_phi(|_| 0.0, 0.75, 1.0).unwrap();
        let v = m.simulate(10_000, 21).unwrap().into_values();
        let grid = interior_grid(10_000, 0.2);
        let fit = fit_local_constant_phi(&v, &epa(), 0.1, &grid).unwrap();
        let worst = fit.values.iter().map(|p| (p - 0.75).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.05, "{worst}");
    }

    #[test]
    fn zero_residuals_are_degenerate() {
        let err = fit_local_constant_phi(&[0.0; 100], &epa(), 0.1, &[0.5]).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { x, .. } if x == 0.5));
    }

    #[test]
    fn two_step_shapes_and_interior() {
        let m = TvarModel::monte_carlo(1.0).unwrap();
        let s = m.simulate(700, 3).unwrap();
        let fit = fit_two_step(&s, &epa(), &epa(), 0.15, 0.15, 0.25).unwrap();
        assert_eq!(fit.residuals_v.len(), 700);
        assert_eq!(fit.residuals_e.len(), 699);
        assert!(fit.phi_hat.grid.iter().all(|x| (0.25..=0.75).contains(x)));
        assert!(fit.residuals_e_clamped.iter().any(|c| *c));
        assert!(fit_two_step(&s, &epa(), &epa(), 0.15, 0.3, 0.25).is_err());
    }

    #[test]
    fn noiseless_two_step_is_degenerate() {
        // a linear trend is reproduced exactly, leaving nothing for step two
        let m = TvarModel::new(|u| 1.0 + 2.0 * u, mc_phi, 0.0).unwrap();
        let s = m.simulate(300, 0).unwrap();
        let err = fit_two_step(&s, &epa(), &epa(), 0.1, 0.1, 0.2).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }), "{err:?}");
    }

    #[test]
    fn constant_phi_curve_is_flat() {
        let m = TvarModel::constant_phi(|u| (3.0 * u).sin(), 0.75, 1.0).unwrap();
        let s = m.simulate(10_000, 17).unwrap();
        let fit = fit_two_step(&s, &epa(), &epa(), 0.1, 0.1, 0.2).unwrap();
        let (_, var) = mean_var(&fit.phi_hat.values);
        assert!(var.sqrt() < 0.05, "sd {}", var.sqrt());
    }

    #[test]
    fn default_margin() {
        assert_eq!(default_interior_margin(0.05), 0.1);
        assert_eq!(default_interior_margin(0.2), 0.25);
        assert_eq!(default_interior_margin(0.29), 0.29);
    }
}
