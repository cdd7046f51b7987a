//! Reproducible harnesses: the trend/AR Monte Carlo table, the uniform-rate
//! exponent calculator, and an empirical check of the sup-norm envelope.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averages::{psi_hat, sup_grid, DesignSeries};
use crate::bandwidth::{select_bandwidth, CvConfig};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::tvar::{default_interior_margin, fit_two_step, TvarModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    InProbability,
    AlmostSure,
}

/// Mixing decay `beta`, moment order `s`, parameter dimension `m`, growth
/// constant `c` and envelope exponent `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub beta: f64,
    pub s: f64,
    pub m: u32,
    pub c: f64,
    pub lambda: f64,
    pub mode: RateMode,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        let min_s = match self.mode {
            RateMode::InProbability => 2.0,
            RateMode::AlmostSure => 4.0,
        };
        if !(self.s > min_s) || !self.s.is_finite() {
            return Err(Error::InvalidParams(format!("{:?} requires s > {min_s}, got {}", self.mode, self.s)));
        }
        if !(self.beta > 2.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must exceed 2, got {}", self.beta)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParams(format!("c must be positive, got {}", self.c)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParams(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaResult {
    pub theta: f64,
    pub beta_lower_bound: f64,
    pub admissible: bool,
    /// Whether `theta` lies in `(0, 1)`.
    pub in_unit_interval: bool,
}

/// Bandwidth exponent `theta` and the mixing-rate lower bound for `beta`.
pub fn theta(p: &RateParams) -> Result<ThetaResult> {
    p.validate()?;
    let (b, s, m, c) = (p.beta, p.s, p.m as f64, p.c);
    let (theta, bound) = match p.mode {
        RateMode::InProbability => {
            let a = m * (s - 1.0) * (1.0 + 2.0 * c);
            ((b * (s - 2.0) - a - 2.0 * s + 1.0) / (b * s + m * (s - 1.0) + 1.0), (a + 2.0 * s - 1.0) / (s - 2.0))
        }
        RateMode::AlmostSure => {
            let a = (s - 1.0) * (5.0 + m * (1.0 + 2.0 * c));
            (
                ((b + 1.0) * (s - 4.0) - a) / ((b + 1.0) + (m + 1.0) * (s - 1.0)),
                (a - (s - 4.0)) / (s - 4.0),
            )
        }
    };
    Ok(ThetaResult {
        theta,
        beta_lower_bound: bound,
        admissible: b > bound,
        in_unit_interval: theta > 0.0 && theta < 1.0,
    })
}

/// `d_T^lambda sqrt(ln T / (T h))`.
pub fn rate_target(t: usize, h: f64, lambda: f64, d_t: f64) -> f64 {
    let tf = t as f64;
    d_t.powf(lambda) * (tf.ln() / (tf * h)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseProcess {
    Iid,
    Ar1 { phi: f64 },
}

/// `h(T) = scale (ln T / T)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    pub scale: f64,
    pub exponent: f64,
}

impl BandwidthRule {
    pub fn bandwidth(&self, t: usize) -> f64 {
        let tf = t as f64;
        self.scale * (tf.ln() / tf).powf(self.exponent)
    }
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule { scale: 1.0, exponent: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheckConfig {
    pub kernel: KernelFamily,
    pub process: NoiseProcess,
    pub j: usize,
    pub t_list: Vec<usize>,
    pub rule: BandwidthRule,
    pub n_reps: usize,
    pub seed: u64,
    /// Exponent `theta` that `ln T / (T^theta h)` must respect.
    pub theta: f64,
}

impl Default for RateCheckConfig {
    fn default() -> Self {
        RateCheckConfig {
            kernel: KernelFamily::Epanechnikov,
            process: NoiseProcess::Iid,
            j: 0,
            t_list: vec![500, 1000, 2000, 4000, 8000],
            rule: BandwidthRule::default(),
            n_reps: 100,
            seed: 0,
            theta: geometric_mixing_theta(8.0),
        }
    }
}

/// `theta` for geometrically mixing data with `s` moments and `m = 0`.
pub fn geometric_mixing_theta(s: f64) -> f64 {
    let p = RateParams { beta: 1e6, s, m: 0, c: 1.0, lambda: 0.0, mode: RateMode::InProbability };
    theta(&p).map(|r| r.theta).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub t_list: Vec<usize>,
    pub bandwidths: Vec<f64>,
    pub median_sup: Vec<f64>,
    pub targets: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line `y = a + b x`; returns `(b, a, R^2)`.
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateRegression(format!("need at least two points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateRegression("regressor has zero spread".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok((slope, my - slope * mx, r2))
}

fn replication_rng(seed: u64, block: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((block << 32) | rep);
    rng
}

fn zero_mean_series(process: NoiseProcess, t: usize, rng: &mut ChaCha8Rng) -> Result<DesignSeries> {
    let values = match process {
        NoiseProcess::Iid => (0..t).map(|_| StandardNormal.sample(rng)).collect(),
        NoiseProcess::Ar1 { phi } => {
            let sd0 = 1.0 / (1.0 - phi * phi).sqrt();
            let mut v: f64 = Normal::new(0.0, sd0).expect("finite scale").sample(rng);
            (0..t)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(rng);
                    v = phi * v + e;
                    v
                })
                .collect()
        }
    };
    DesignSeries::new(values)
}

/// Median over replications of `sup_x |Psi_hat(x)|` against the envelope
/// `sqrt(ln T / (T h))`, summarised by a log-log regression.
pub fn verify_rate(cfg: &RateCheckConfig) -> Result<SlopeReport> {
    if cfg.n_reps == 0 {
        return Err(Error::InvalidConfig("n_reps must be at least 1".into()));
    }
    if cfg.j > 2 {
        return Err(Error::UnsupportedMoment(cfg.j));
    }
    if let NoiseProcess::Ar1 { phi } = cfg.process {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidConfig(format!("AR coefficient {phi} must lie in (-1, 1)")));
        }
    }
    let mut distinct = cfg.t_list.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateRegression("slope needs at least two distinct sample sizes".into()));
    }
    let bandwidths: Vec<f64> = cfg.t_list.iter().map(|&t| cfg.rule.bandwidth(t)).collect();
    check_rule(cfg, &bandwidths)?;

    let spec = KernelSpec::new(cfg.kernel);
    let grid = sup_grid();
    let mut median_sup = Vec::with_capacity(cfg.t_list.len());
    for (block, (&t, &h)) in cfg.t_list.iter().zip(&bandwidths).enumerate() {
        let mut sups: Vec<f64> = (0..cfg.n_reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replication_rng(cfg.seed, block as u64, rep as u64);
                let series = zero_mean_series(cfg.process, t, &mut rng)?;
                grid.iter().try_fold(0f64, |acc, &x| Ok(acc.max(psi_hat(&series, &spec, x, h, cfg.j)?.abs())))
            })
            .collect::<Result<_>>()?;
        median_sup.push(quantile(&mut sups, 0.5));
    }
    let targets: Vec<f64> = cfg.t_list.iter().zip(&bandwidths).map(|(&t, &h)| rate_target(t, h, 0.0, 1.0)).collect();
    let lx: Vec<f64> = targets.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = median_sup.iter().map(|v| v.ln()).collect();
    let (slope, intercept, r2) = ols_line(&lx, &ly)?;
    Ok(SlopeReport { t_list: cfg.t_list.clone(), bandwidths, median_sup, targets, slope, intercept, r2 })
}

/// Bandwidths must lie in `(0, 1/2)` and `ln T / (T^theta h)` must decrease
/// strictly along the increasing sample sizes.
fn check_rule(cfg: &RateCheckConfig, bandwidths: &[f64]) -> Result<()> {
    for (&t, &h) in cfg.t_list.iter().zip(bandwidths) {
        if t < 3 || !(h > 0.0 && h < 0.5) || !(t as f64 * h > 2.0) {
            return Err(Error::InvalidBandwidthRule(format!("h({t}) = {h} outside (0, 1/2) or T h <= 2")));
        }
    }
    let mut pairs: Vec<(usize, f64)> = cfg.t_list.iter().copied().zip(bandwidths.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    pairs.dedup_by_key(|p| p.0);
    let ratio = |(t, h): (usize, f64)| (t as f64).ln() / ((t as f64).powf(cfg.theta) * h);
    for w in pairs.windows(2) {
        if !(ratio(w[1]) < ratio(w[0])) {
            return Err(Error::InvalidBandwidthRule(format!(
                "ln T / (T^{} h) does not decrease from T = {} to T = {}",
                cfg.theta, w[0].0, w[1].0
            )));
        }
    }
    Ok(())
}

/// Linear-interpolation sample quantile (type 7); sorts `xs` in place.
pub fn quantile(xs: &mut [f64], p: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let pos = p * (xs.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
}

pub const REPORT_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BandwidthMode {
    /// Cross-validated `h`; `None` uses the per-`T` default configuration.
    Cv { config: Option<CvConfig> },
    Fixed { h: f64, v: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub t_list: Vec<usize>,
    pub sigma2_list: Vec<f64>,
    pub n_reps: usize,
    pub seed_base: u64,
    pub mode: BandwidthMode,
    pub kernel: KernelFamily,
    /// Step-two bandwidth as a multiple of the selected `h`.
    pub v_ratio: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            t_list: vec![100, 300, 700],
            sigma2_list: vec![1.0, 3.0],
            n_reps: 200,
            seed_base: 0,
            mode: BandwidthMode::Cv { config: None },
            kernel: KernelFamily::Epanechnikov,
            v_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaseReport {
    #[serde(rename = "t")]
    pub t: usize,
    pub sigma2: f64,
    pub n_reps: usize,
    pub mase_g: f64,
    pub mase_phi: f64,
    pub ase_g_quantiles: Vec<f64>,
    pub ase_phi_quantiles: Vec<f64>,
    pub median_h: f64,
    pub seed_base: u64,
}

struct Replication {
    ase_g: f64,
    ase_phi: f64,
    h: f64,
}

fn replicate(model: &TvarModel, spec: &KernelSpec, t: usize, cfg: &McConfig, rep: usize) -> Result<Replication> {
    let mut rng = replication_rng(cfg.seed_base, 0, rep as u64);
    let series = model.simulate_with(t, &mut rng)?;
    let (h, v) = match &cfg.mode {
        BandwidthMode::Fixed { h, v } => (*h, *v),
        BandwidthMode::Cv { config } => {
            let cv = config.clone().unwrap_or_else(|| CvConfig::default_for(t));
            let h = select_bandwidth(&series, spec, &cv)?;
            (h, (cfg.v_ratio * h).min(0.49))
        }
    };
    let fit = fit_two_step(&series, spec, spec, h, v, default_interior_margin(v))?;
    let tf = t as f64;
    let ase_g = fit
        .g_hat
        .values
        .iter()
        .enumerate()
        .map(|(k, g)| (g - model.g((k + 1) as f64 / tf)).powi(2))
        .sum::<f64>()
        / tf;
    let phi = &fit.phi_hat;
    let ase_phi =
        phi.grid.iter().zip(&phi.values).map(|(x, p)| (p - model.phi(*x)).powi(2)).sum::<f64>() / phi.len() as f64;
    Ok(Replication { ase_g, ase_phi, h })
}

/// MASE of the trend and AR-curve estimates for every `(T, sigma^2)` cell.
/// Replication `r` draws from stream `r` of the generator seeded by
/// `seed_base`, so results do not depend on scheduling.
pub fn mc_table1(cfg: &McConfig) -> Result<Vec<MaseReport>> {
    if cfg.n_reps == 0 {
        return Err(Error::InvalidConfig("n_reps must be at least 1".into()));
    }
    if !(cfg.v_ratio > 0.0) {
        return Err(Error::InvalidConfig(format!("v_ratio must be positive, got {}", cfg.v_ratio)));
    }
    let spec = KernelSpec::new(cfg.kernel);
    let mut out = Vec::new();
    for &sigma2 in &cfg.sigma2_list {
        let model = TvarModel::monte_carlo(sigma2)?;
        for &t in &cfg.t_list {
            let reps: Vec<Replication> = (0..cfg.n_reps)
                .into_par_iter()
                .map(|r| replicate(&model, &spec, t, cfg, r))
                .collect::<Result<_>>()?;
            let mut g: Vec<f64> = reps.iter().map(|r| r.ase_g).collect();
            let mut p: Vec<f64> = reps.iter().map(|r| r.ase_phi).collect();
            let mut hs: Vec<f64> = reps.iter().map(|r| r.h).collect();
            let n = cfg.n_reps as f64;
            out.push(MaseReport {
                t,
                sigma2,
                n_reps: cfg.n_reps,
                mase_g: g.iter().sum::<f64>() / n,
                mase_phi: p.iter().sum::<f64>() / n,
                ase_g_quantiles: REPORT_QUANTILES.iter().map(|q| quantile(&mut g, *q)).collect(),
                ase_phi_quantiles: REPORT_QUANTILES.iter().map(|q| quantile(&mut p, *q)).collect(),
                median_h: quantile(&mut hs, 0.5),
                seed_base: cfg.seed_base,
            });
        }
    }
    Ok(out)
}

/// One row per `(sigma^2, estimator)` and one column per `T`.
pub fn mase_table_csv(reports: &[MaseReport]) -> String {
    let mut ts: Vec<usize> = reports.iter().map(|r| r.t).collect();
    ts.sort_unstable();
    ts.dedup();
    let mut sig: Vec<f64> = Vec::new();
    for r in reports {
        if !sig.contains(&r.sigma2) {
            sig.push(r.sigma2);
        }
    }
    let mut s = String::from("sigma2,estimator");
    for t in &ts {
        let _ = write!(s, ",t_{t}");
    }
    s.push('\n');
    for &sg in &sig {
        for (name, pick) in [("g", 0usize), ("phi", 1)] {
            let _ = write!(s, "{sg},{name}");
            for &t in &ts {
                match reports.iter().find(|r| r.t == t && r.sigma2 == sg) {
                    Some(r) => {
                        let v = if pick == 0 { r.mase_g } else { r.mase_phi };
                        let _ = write!(s, ",{v:.16e}");
                    }
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn params(beta: f64, s: f64, m: u32, c: f64, mode: RateMode) -> RateParams {
        RateParams { beta, s, m, c, lambda: 0.0, mode }
    }

    #[test]
    fn theta_hand_case() {
        let r = theta(&params(10.0, 4.0, 0, 1.0, RateMode::InProbability)).unwrap();
        assert!((r.theta - 13.0 / 41.0).abs() < 1e-12);
        assert!((r.beta_lower_bound - 3.5).abs() < 1e-12);
        assert!(r.admissible && r.in_unit_interval);
    }

    #[test]
    fn theta_large_beta_limit() {
        let r = theta(&params(1e6, 100.0, 0, 1.0, RateMode::InProbability)).unwrap();
        assert!((r.theta - 0.98).abs() < 1e-3, "{}", r.theta);
    }

    #[test]
    fn theta_rejects_low_moments() {
        assert!(matches!(theta(&params(50.0, 4.0, 0, 1.0, RateMode::AlmostSure)), Err(Error::InvalidParams(_))));
        assert!(matches!(theta(&params(50.0, 2.0, 0, 1.0, RateMode::InProbability)), Err(Error::InvalidParams(_))));
        assert!(theta(&params(2.0, 6.0, 0, 1.0, RateMode::InProbability)).is_err());
    }

    #[test]
    fn almost_sure_hand_case() {
        // s = 5, beta = 30, m = 1, c = 0.5: theta = (31 - 4*7)/(31 + 8) = 3/39, bound = (28 - 1)/1
        let r = theta(&params(30.0, 5.0, 1, 0.5, RateMode::AlmostSure)).unwrap();
        assert!((r.theta - 3.0 / 39.0).abs() < 1e-12);
        assert!((r.beta_lower_bound - 27.0).abs() < 1e-12);
        assert!(r.admissible);
    }

    #[test]
    fn in_probability_admissible_draws_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = 0;
        while seen < 10_000 {
            let p = params(
                rng.random_range(2.01..500.0),
                rng.random_range(2.01..60.0),
                rng.random_range(0..6),
                rng.random_range(0.01..5.0),
                RateMode::InProbability,
            );
            let r = theta(&p).unwrap();
            if r.admissible {
                assert!(r.in_unit_interval, "{p:?} -> {r:?}");
                seen += 1;
            }
        }
    }

    #[test]
    fn admissibility_is_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let mode = if rng.random_bool(0.5) { RateMode::InProbability } else { RateMode::AlmostSure };
            let p = params(
                rng.random_range(2.01..500.0),
                rng.random_range(4.01..60.0),
                rng.random_range(0..6),
                rng.random_range(0.01..5.0),
                mode,
            );
            let r = theta(&p).unwrap();
            assert_eq!(r.admissible, r.theta > 0.0, "{p:?} -> {r:?}");
        }
    }

    #[test]
    fn rate_target_arithmetic() {
        let e2 = std::f64::consts::E.powi(2);
        // T is an integer, so evaluate the closed form at T = 7
        let (t, h) = (7usize, 1.0 / e2);
        let direct = ((t as f64).ln() / (t as f64 * h)).sqrt();
        assert!((rate_target(t, h, 0.0, 5.0) - direct).abs() < 1e-15);
        assert!((rate_target(1000, 0.1, 2.0, 3.0) - 9.0 * rate_target(1000, 0.1, 0.0, 1.0)).abs() < 1e-12);
        assert!(rate_target(4000, 0.1, 0.0, 1.0) < rate_target(1000, 0.1, 0.0, 1.0));
    }

    #[test]
    fn rate_target_vanishes_with_growing_parameter_set() {
        let p = RateParams { beta: 20.0, s: 6.0, m: 1, c: 0.2, lambda: 1.0, mode: RateMode::InProbability };
        let th = theta(&p).unwrap().theta;
        let r = p.c.min((1.0 - th) / (2.0 * p.lambda));
        let rule = |t: usize| 0.5 * (t as f64).powf(-th / 2.0) * (t as f64).ln();
        let vals: Vec<f64> = [1_000usize, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&t| rate_target(t, rule(t).min(0.49), p.lambda, (t as f64).powf(r)))
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn ols_line_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (b, a, r2) = ols_line(&x, &y).unwrap();
        assert!((b + 0.5).abs() < 1e-14 && (a - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
        assert!(ols_line(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn verify_rate_degenerate() {
        let cfg = RateCheckConfig { t_list: vec![1000], n_reps: 1, ..Default::default() };
        assert!(matches!(verify_rate(&cfg), Err(Error::DegenerateRegression(_))));
    }

    #[test]
    fn verify_rate_rejects_slow_bandwidth_decay() {
        // h ~ T^-0.9 makes ln T / (T^theta h) grow for theta = 0.75
        let cfg = RateCheckConfig {
            t_list: vec![10_000, 100_000],
            rule: BandwidthRule { scale: 100.0, exponent: 0.9 },
            n_reps: 2,
            ..Default::default()
        };
        assert!(matches!(verify_rate(&cfg), Err(Error::InvalidBandwidthRule(_))));
    }

    #[test]
    fn verify_rate_small_run_is_order_independent() {
        let cfg = RateCheckConfig { t_list: vec![500, 2000, 8000], n_reps: 30, seed: 4, ..Default::default() };
        let a = verify_rate(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| verify_rate(&cfg)).unwrap();
        assert_eq!(a, b);
        assert!(a.slope > 0.5 && a.slope < 1.5, "{a:?}");
    }

    #[test]
    fn quantiles_sorted() {
        let mut xs = vec![5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&mut xs, 0.5), 3.0);
        assert_eq!(quantile(&mut xs, 0.0), 1.0);
        assert_eq!(quantile(&mut xs, 1.0), 5.0);
        assert!((quantile(&mut xs, 0.3) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn fixed_mode_table_is_deterministic() {
        let cfg = McConfig {
            t_list: vec![200, 400],
            sigma2_list: vec![1.0],
            n_reps: 8,
            seed_base: 9,
            mode: BandwidthMode::Fixed { h: 0.15, v: 0.15 },
            ..Default::default()
        };
        let a = mc_table1(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let b = pool.install(|| mc_table1(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        for r in &a {
            assert!(r.ase_g_quantiles.windows(2).all(|w| w[0] <= w[1]));
            assert!(r.mase_g > 0.0 && r.mase_phi > 0.0);
        }
        let csv = mase_table_csv(&a);
        assert_eq!(csv.lines().next().unwrap(), "sigma2,estimator,t_200,t_400");
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn cv_mode_runs() {
        let cfg = McConfig { t_list: vec![100], sigma2_list: vec![1.0], n_reps: 3, ..Default::default() };
        let r = mc_table1(&cfg).unwrap();
        assert!(r[0].median_h > 0.0 && r[0].median_h < 0.5);
        assert!(mc_table1(&McConfig { n_reps: 0, ..cfg }).is_err());
    }
}
