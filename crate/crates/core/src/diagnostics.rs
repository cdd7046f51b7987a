//! Residual diagnostics: sample ACF/PACF, Ljung–Box portmanteau tests and a
//! BIC grid over ARMA(p, q) fits by conditional sum of squares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{minimize, SimplexOptions};
use crate::special::chi_squared_sf;

/// Largest AR or MA order in the BIC grid.
pub const MAX_ARMA_ORDER: usize = 4;

/// Lags at which the pipeline reports Ljung–Box tests.
pub const LJUNG_BOX_LAGS: [usize; 11] = [5, 8, 10, 13, 15, 18, 20, 23, 25, 28, 30];

fn centred(x: &[f64]) -> (Vec<f64>, f64) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss = d.iter().map(|v| v * v).sum();
    (d, ss)
}

/// Sample autocorrelations `rho_1..rho_max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() < max_lag + 2 {
        return Err(Error::SeriesTooShort { needed: max_lag + 2, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("series contains non-finite values".into()));
    }
    let (d, ss) = centred(x);
    // relative test: a constant shifted by rounding must still count as degenerate
    let scale = x.iter().fold(0f64, |a, v| a.max(v.abs()));
    if !(ss > (1e-13 * scale).powi(2) * x.len() as f64) {
        return Err(Error::DegenerateSeries);
    }
    Ok((1..=max_lag)
        .map(|k| d[k..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / ss)
        .collect())
}

/// Durbin–Levinson recursion from autocorrelations to partial
/// autocorrelations; `out[0] == rho[0]`.
pub fn pacf_from_acf(rho: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rho.len());
    let mut phi: Vec<f64> = Vec::with_capacity(rho.len());
    let mut v = 1.0;
    for k in 0..rho.len() {
        let num = rho[k] - phi.iter().enumerate().map(|(j, p)| p * rho[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - a * prev[k - 1 - j];
        }
        phi.push(a);
        v *= 1.0 - a * a;
        out.push(a);
    }
    out
}

/// Sample partial autocorrelations at lags `1..=max_lag`.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    Ok(pacf_from_acf(&acf(x, max_lag)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub lag: usize,
    pub q: f64,
    pub p_value: f64,
}

/// `Q_m = T (T + 2) sum_{k<=m} rho_k^2 / (T - k)` against `chi^2_m`.
pub fn ljung_box(x: &[f64], lags: &[usize]) -> Result<Vec<LjungBox>> {
    let n = x.len();
    let max = lags.iter().copied().max().unwrap_or(0);
    if lags.contains(&0) {
        return Err(Error::InvalidConfig("Ljung-Box lags must be positive".into()));
    }
    if 2 * max >= n {
        return Err(Error::SeriesTooShort { needed: 2 * max + 1, got: n });
    }
    let rho = acf(x, max)?;
    let tf = n as f64;
    let mut cum = Vec::with_capacity(max);
    let mut acc = 0.0;
    for (k, r) in rho.iter().enumerate() {
        acc += r * r / (tf - (k + 1) as f64);
        cum.push(acc);
    }
    Ok(lags
        .iter()
        .map(|&m| {
            let q = tf * (tf + 2.0) * cum[m - 1];
            LjungBox { lag: m, q, p_value: chi_squared_sf(q, m as f64).clamp(0.0, 1.0) }
        })
        .collect())
}

/// Fitted ARMA(p, q) under the convention
/// `x_t = sum_i ar_i x_{t-i} + e_t + sum_j ma_j e_{t-j}` on the demeaned series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaFit {
    pub p: usize,
    pub q: usize,
    pub mean: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    pub bic: f64,
    pub evaluations: usize,
}

/// Maps partial autocorrelations in (-1, 1) to the coefficients of a
/// polynomial `1 - sum a_j z^j` with all roots outside the unit circle.
fn coefficients_from_partials(r: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = a.clone();
        for j in 0..k {
            a[j] = prev[j] - rk * prev[k - 1 - j];
        }
        a.push(rk);
    }
    a
}

fn unpack(u: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let r: Vec<f64> = u.iter().map(|v| v.tanh()).collect();
    let ar = coefficients_from_partials(&r[..p]);
    let ma = coefficients_from_partials(&r[p..]).into_iter().map(|a| -a).collect();
    (ar, ma)
}

/// Conditional residual sum of squares over `t = start..n`; residuals before
/// `p` and pre-sample errors are zero.
fn css(x: &[f64], ar: &[f64], ma: &[f64], start: usize, e: &mut [f64]) -> f64 {
    let p = ar.len();
    let mut ss = 0.0;
    for t in 0..x.len() {
        if t < p {
            e[t] = 0.0;
            continue;
        }
        let mut v = x[t];
        for (i, a) in ar.iter().enumerate() {
            v -= a * x[t - 1 - i];
        }
        for (j, m) in ma.iter().enumerate() {
            if t > j {
                v -= m * e[t - 1 - j];
            }
        }
        e[t] = v;
        if t >= start {
            ss += v * v;
        }
    }
    ss
}

/// Gaussian CSS fit of an ARMA(p, q) with orders in `0..=4`, conditioning on
/// the first `p` observations.
pub fn fit_arma_css(x: &[f64], p: usize, q: usize) -> Result<ArmaFit> {
    fit_arma_css_from(x, p, q, p)
}

/// As [`fit_arma_css`] but the sum of squares starts at index `start >= p`, so
/// fits of different orders share one likelihood sample.
pub fn fit_arma_css_from(x: &[f64], p: usize, q: usize, start: usize) -> Result<ArmaFit> {
    if start < p {
        return Err(Error::InvalidConfig(format!("conditioning start {start} below AR order {p}")));
    }
    if p > MAX_ARMA_ORDER || q > MAX_ARMA_ORDER {
        return Err(Error::InvalidConfig(format!("ARMA orders ({p}, {q}) exceed {MAX_ARMA_ORDER}")));
    }
    let k = p + q + 1;
    if x.len() < 20 * k {
        return Err(Error::SeriesTooShort { needed: 20 * k, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("series contains non-finite values".into()));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let n_eff = (d.len() - start) as f64;
    let scale = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
    if !(scale > 0.0) {
        return Err(Error::DegenerateSeries);
    }

    // start the AR block at the sample partial autocorrelations
    let mut u0 = vec![0.0; p + q];
    if p > 0 {
        for (u, r) in u0.iter_mut().zip(pacf(&d, p)?) {
            *u = r.clamp(-0.95, 0.95).atanh();
        }
    }
    let objective = |u: &[f64]| {
        let (ar, ma) = unpack(u, p);
        let mut e = vec![0.0; d.len()];
        css(&d, &ar, &ma, start, &mut e) / (n_eff * scale)
    };
    let opts = SimplexOptions { initial_step: 0.1, f_tol: 1e-12, x_tol: 1e-7, max_evals: 4000 * (p + q).max(1) };
    let best = minimize(objective, &u0, &opts).map_err(|e| match e {
        Error::ConvergenceFailure { iterations, best_value, best_params } => {
            let (ar, ma) = unpack(&best_params, p);
            Error::ConvergenceFailure { iterations, best_value: best_value * scale, best_params: [ar, ma].concat() }
        }
        other => other,
    })?;

    let (ar, ma) = unpack(&best.x, p);
    let sigma2 = best.value * scale;
    let loglik = -0.5 * n_eff * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    let bic = -2.0 * loglik + k as f64 * (x.len() as f64).ln();
    Ok(ArmaFit { p, q, mean, ar, ma, sigma2, loglik, bic, evaluations: best.evals })
}

/// BIC over `p, q in 0..=max_order`; cells that cannot be fitted are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicGrid {
    /// `values[p][q]`.
    pub values: Vec<Vec<Option<f64>>>,
    pub best_order: (usize, usize),
}

/// Fits every cell of the grid independently on the common sample
/// `t >= max_order` and picks the minimum, breaking ties by smaller `p + q`,
/// then smaller `p`.
pub fn bic_grid(x: &[f64], max_order: usize) -> Result<BicGrid> {
    let cells: Vec<(usize, usize)> =
        (0..=max_order).flat_map(|p| (0..=max_order).map(move |q| (p, q))).collect();
    let fits: Vec<Result<ArmaFit>> = cells.par_iter().map(|&(p, q)| fit_arma_css_from(x, p, q, max_order)).collect();
    let mut values = vec![vec![None; max_order + 1]; max_order + 1];
    let mut first_err = None;
    for (&(p, q), fit) in cells.iter().zip(fits) {
        match fit {
            Ok(f) => values[p][q] = Some(f.bic),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best_order = best_cell(&values).ok_or_else(|| first_err.unwrap_or(Error::DegenerateSeries))?;
    Ok(BicGrid { values, best_order })
}

fn best_cell(values: &[Vec<Option<f64>>]) -> Option<(usize, usize)> {
    let mut cells: Vec<(usize, usize, f64)> = values
        .iter()
        .enumerate()
        .flat_map(|(p, row)| row.iter().enumerate().filter_map(move |(q, v)| v.map(|v| (p, q, v))))
        .collect();
    cells.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0 + a.1).cmp(&(b.0 + b.1))).then(a.0.cmp(&b.0)));
    cells.first().map(|c| (c.0, c.1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
    pub bartlett_band: f64,
    pub ljung_box: Vec<LjungBox>,
    pub bic_grid: Option<BicGrid>,
}

/// ACF/PACF to `max_lag`, Ljung–Box at `lb_lags`, and optionally the BIC grid.
pub fn diagnose(x: &[f64], max_lag: usize, lb_lags: &[usize], with_bic: bool) -> Result<DiagnosticsReport> {
    let acf = acf(x, max_lag)?;
    let pacf = pacf_from_acf(&acf);
    let ljung_box = if lb_lags.is_empty() { Vec::new() } else { ljung_box(x, lb_lags)? };
    let bic_grid = if with_bic { Some(bic_grid(x, MAX_ARMA_ORDER)?) } else { None };
    Ok(DiagnosticsReport {
        n: x.len(),
        acf,
        pacf,
        bartlett_band: 1.96 / (x.len() as f64).sqrt(),
        ljung_box,
        bic_grid,
    })
}
