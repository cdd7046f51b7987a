//! End-to-end analysis of an equally spaced series read from CSV: optional
//! drift and seasonal removal, the two-step fit, residual diagnostics, and
//! the curves / diagnostics / SVG outputs.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::averages::DesignSeries;
use crate::bandwidth::{cv_curve, CvConfig, CvReport};
use crate::diagnostics::{diagnose, DiagnosticsReport, LJUNG_BOX_LAGS};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::plot::{line_plot, stem_plot, LineSeries};
use crate::report::{format_real, to_json_string};
use crate::tvar::{default_interior_margin, fit_two_step, TwoStepFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PipelineBandwidth {
    #[default]
    Cv,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub time_column: String,
    pub value_column: String,
    pub deseasonalize: bool,
    /// Seasonal periods in samples.
    pub harmonics: Vec<f64>,
    /// Subtracted as `rate * (year - epoch)`; `None` skips the stage.
    pub linear_drift_rate: Option<f64>,
    /// Reference year for the drift; defaults to the first timestamp.
    pub drift_epoch: Option<f64>,
    pub kernel: KernelFamily,
    pub bandwidth_mode: PipelineBandwidth,
    pub h: Option<f64>,
    pub v: Option<f64>,
    pub b_t: Option<f64>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Free-text unit annotation copied into the outputs.
    pub units: Option<String>,
    pub max_lag: usize,
    pub ljung_box_lags: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_path: PathBuf::new(),
            time_column: "time".into(),
            value_column: "value".into(),
            deseasonalize: true,
            harmonics: vec![12.0, 6.0],
            linear_drift_rate: None,
            drift_epoch: None,
            kernel: KernelFamily::Epanechnikov,
            bandwidth_mode: PipelineBandwidth::Cv,
            h: None,
            v: None,
            b_t: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            units: None,
            max_lag: 30,
            ljung_box_lags: LJUNG_BOX_LAGS.to_vec(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_column.is_empty() || self.value_column.is_empty() {
            return Err(Error::InvalidConfig("time and value column names must be non-empty".into()));
        }
        if let Some(p) = self.harmonics.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidConfig(format!("harmonic period {p} must be positive")));
        }
        if self.bandwidth_mode == PipelineBandwidth::Fixed && self.h.is_none() {
            return Err(Error::InvalidConfig("fixed bandwidth mode needs h".into()));
        }
        if self.linear_drift_rate.is_some_and(|r| !r.is_finite()) {
            return Err(Error::InvalidConfig("drift rate must be finite".into()));
        }
        if self.max_lag == 0 {
            return Err(Error::InvalidConfig("max_lag must be positive".into()));
        }
        Ok(())
    }
}

/// How timestamps were interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAxis {
    /// Plain numbers, read as decimal years.
    Numeric,
    /// Dates sharing one day of month, stepped in whole months.
    Monthly,
    Daily,
}

/// An ingested series with its time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub labels: Vec<String>,
    /// Timestamps as decimal years.
    pub years: Vec<f64>,
    pub series: DesignSeries,
    pub axis: TimeAxis,
}

enum Stamp {
    Number(f64),
    Date(NaiveDate),
}

fn parse_stamp(s: &str) -> Option<Stamp> {
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(Stamp::Number(v));
    }
    for fmt in ["%Y-%m-%d", "%Y/%m/%d"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Some(Stamp::Date(d));
        }
    }
    NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d").ok().map(Stamp::Date)
}

fn decimal_year(d: NaiveDate) -> f64 {
    let len = if NaiveDate::from_ymd_opt(d.year(), 2, 29).is_some() { 366.0 } else { 365.0 };
    d.year() as f64 + (d.ordinal0() as f64) / len
}

/// Reads `cfg.time_column` and `cfg.value_column` from a headed CSV file and
/// checks that the timestamps are increasing with constant spacing (1%).
pub fn ingest_csv(path: &Path, cfg: &PipelineConfig) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| Error::Data(format!("{}: header: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            let have: Vec<&str> = headers.iter().collect();
            Error::Data(format!("{}: column '{name}' not found in header {have:?}", path.display()))
        })
    };
    let (tc, vc) = (col(&cfg.time_column)?, col(&cfg.value_column)?);

    let mut labels = Vec::new();
    let mut stamps = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                headers.len(),
                rec.len()
            )));
        }
        let (ts, vs) = (&rec[tc], &rec[vc]);
        let stamp = parse_stamp(ts)
            .ok_or_else(|| Error::Data(format!("{}: line {line}: cannot parse timestamp '{ts}'", path.display())))?;
        let v: f64 = vs.parse().map_err(|_| {
            Error::Data(format!("{}: line {line}: non-numeric value '{vs}' in column '{}'", path.display(), cfg.value_column))
        })?;
        if !v.is_finite() {
            return Err(Error::Data(format!(
                "{}: line {line}: missing or non-finite value '{vs}' in column '{}'",
                path.display(),
                cfg.value_column
            )));
        }
        labels.push(ts.to_string());
        stamps.push(stamp);
        values.push(v);
        lines.push(line);
    }
    if values.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: values.len() });
    }

    let numeric = matches!(stamps[0], Stamp::Number(_));
    let mut native = Vec::with_capacity(stamps.len());
    let mut years = Vec::with_capacity(stamps.len());
    let mut dates = Vec::new();
    for (k, s) in stamps.iter().enumerate() {
        match (s, numeric) {
            (Stamp::Number(v), true) => {
                native.push(*v);
                years.push(*v);
            }
            (Stamp::Date(d), false) => dates.push(*d),
            _ => {
                return Err(Error::Data(format!(
                    "{}: line {}: timestamp '{}' mixes numeric and date formats",
                    path.display(),
                    lines[k],
                    labels[k]
                )))
            }
        }
    }
    let axis = if numeric {
        TimeAxis::Numeric
    } else if dates.iter().all(|d| d.day() == dates[0].day()) {
        for d in &dates {
            native.push((d.year() * 12 + d.month0() as i32) as f64);
            years.push(d.year() as f64 + d.month0() as f64 / 12.0);
        }
        TimeAxis::Monthly
    } else {
        for d in &dates {
            native.push(d.num_days_from_ce() as f64);
            years.push(decimal_year(*d));
        }
        TimeAxis::Daily
    };

    let mut steps: Vec<f64> = native.windows(2).map(|w| w[1] - w[0]).collect();
    let unit = match axis {
        TimeAxis::Numeric => "",
        TimeAxis::Monthly => " months",
        TimeAxis::Daily => " days",
    };
    let mut sorted = steps.clone();
    sorted.sort_by(f64::total_cmp);
    let typical = sorted[sorted.len() / 2];
    if !(typical > 0.0) {
        return Err(Error::Data(format!("{}: timestamps are not increasing", path.display())));
    }
    for (k, step) in steps.iter_mut().enumerate() {
        if !((*step - typical).abs() <= 0.01 * typical) {
            return Err(Error::Data(format!(
                "{}: irregular spacing between line {} ('{}') and line {} ('{}'): step {}{unit}, expected {}{unit}",
                path.display(),
                lines[k],
                labels[k],
                lines[k + 1],
                labels[k + 1],
                step,
                typical
            )));
        }
    }
    Ok(Ingested { labels, years, series: DesignSeries::new(values)?, axis })
}

/// `value_t - rate (year_t - epoch)`.
pub fn apply_drift_correction(values: &[f64], years: &[f64], rate_per_year: f64, epoch: f64) -> Vec<f64> {
    values.iter().zip(years).map(|(v, y)| v - rate_per_year * (y - epoch)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub period: f64,
    pub sin_coef: f64,
    pub cos_coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deseasonalized {
    #[serde(skip)]
    pub residual: Vec<f64>,
    /// Fitted level; it is not subtracted.
    pub intercept: f64,
    pub harmonics: Vec<HarmonicFit>,
}

/// Least squares on `[1, sin(2 pi t/P_k), cos(2 pi t/P_k)]` for `t = 1..T`,
/// via modified Gram-Schmidt; removes the seasonal part, keeps the level.
pub fn deseasonalize(values: &[f64], periods: &[f64]) -> Result<Deseasonalized> {
    let n = values.len();
    let n_coef = 2 * periods.len();
    if n <= 4 * n_coef {
        return Err(Error::SeriesTooShort { needed: 4 * n_coef + 1, got: n });
    }
    if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidConfig(format!("harmonic period {p} must be positive")));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    for p in periods {
        cols.push((1..=n).map(|t| (tau * t as f64 / p).sin()).collect());
        cols.push((1..=n).map(|t| (tau * t as f64 / p).cos()).collect());
    }
    let k = cols.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut v = cols[j].clone();
        // two passes keep the basis orthogonal to rounding level
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[i][j] += c;
                for (a, b) in v.iter_mut().zip(qi) {
                    *a -= c * b;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        // columns have entries in [-1, 1], so their scale is sqrt(n)
        if !(norm > 1e-9 * (n as f64).sqrt()) {
            let what = if j == 0 { "intercept".to_string() } else { format!("period {}", periods[(j - 1) / 2]) };
            return Err(Error::RankDeficient(format!("harmonic column for {what} is collinear with earlier columns")));
        }
        r[j][j] = norm;
        q.push(v.into_iter().map(|x| x / norm).collect());
    }
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, values)).collect();
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        beta[i] = (qty[i] - (i + 1..k).map(|j| r[i][j] * beta[j]).sum::<f64>()) / r[i][i];
    }
    let residual = (0..n)
        .map(|t| values[t] - (1..k).map(|j| beta[j] * cols[j][t]).sum::<f64>())
        .collect();
    let harmonics = periods
        .iter()
        .enumerate()
        .map(|(i, p)| HarmonicFit { period: *p, sin_coef: beta[1 + 2 * i], cos_coef: beta[2 + 2 * i] })
        .collect();
    Ok(Deseasonalized { residual, intercept: beta[0], harmonics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftInfo {
    pub rate_per_year: f64,
    pub epoch: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSummary {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

/// Everything written to `diagnostics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub input_file: String,
    pub n: usize,
    pub units: Option<String>,
    pub time_axis: TimeAxis,
    pub first_time: String,
    pub last_time: String,
    pub kernel: KernelFamily,
    pub bandwidth_mode: PipelineBandwidth,
    pub h: f64,
    pub v: f64,
    pub b_t: f64,
    pub cv: Option<CvReport>,
    pub drift: Option<DriftInfo>,
    pub seasonal: Option<Deseasonalized>,
    pub lambda_floor: f64,
    pub phi_hat: PhiSummary,
    /// Residuals `e_t` whose `phi_hat` was taken from the nearest interior point.
    pub clamped_residuals: usize,
    pub residuals_v: DiagnosticsReport,
    pub residuals_e: DiagnosticsReport,
    pub seed: u64,
}

/// In-memory result of the analysis stages.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    /// Series handed to the smoother, after drift and seasonal removal.
    pub y: Vec<f64>,
    pub fit: TwoStepFit,
    pub labels: Vec<String>,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs every stage after ingestion.
pub fn analyse(data: &Ingested, cfg: &PipelineConfig, input_file: &str) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut y = data.series.values().to_vec();

    let drift = cfg.linear_drift_rate.map(|rate| {
        let epoch = cfg.drift_epoch.unwrap_or(data.years[0]);
        y = apply_drift_correction(&y, &data.years, rate, epoch);
        DriftInfo { rate_per_year: rate, epoch }
    });

    let seasonal = if cfg.deseasonalize && !cfg.harmonics.is_empty() {
        let d = deseasonalize(&y, &cfg.harmonics).map_err(|e| e.in_stage("deseasonalize"))?;
        y.clone_from(&d.residual);
        Some(d)
    } else {
        None
    };

    let series = DesignSeries::new(y.clone())?;
    let spec = KernelSpec::new(cfg.kernel);
    let (h, cv) = match cfg.bandwidth_mode {
        PipelineBandwidth::Fixed => (cfg.h.expect("validated"), None),
        PipelineBandwidth::Cv => {
            let rep = cv_curve(&series, &spec, &CvConfig::default_for(series.len()))
                .map_err(|e| e.in_stage("bandwidth selection"))?;
            (rep.selected, Some(rep))
        }
    };
    let v = cfg.v.unwrap_or(h);
    let b_t = cfg.b_t.unwrap_or_else(|| default_interior_margin(v));
    let fit = fit_two_step(&series, &spec, &spec, h, v, b_t).map_err(|e| e.in_stage("two-step fit"))?;

    let n = y.len();
    let lags_v = cfg.max_lag.min(n - 2);
    let residuals_v = diagnose(&fit.residuals_v, lags_v, &[], true).map_err(|e| e.in_stage("diagnostics on V"))?;
    let ne = fit.residuals_e.len();
    let lb: Vec<usize> = cfg.ljung_box_lags.iter().copied().filter(|&l| 2 * l < ne).collect();
    let residuals_e = diagnose(&fit.residuals_e, cfg.max_lag.min(ne - 2), &lb, false)
        .map_err(|e| e.in_stage("diagnostics on e"))?;

    let phi = &fit.phi_hat.values;
    let report = PipelineReport {
        input_file: input_file.to_string(),
        n,
        units: cfg.units.clone(),
        time_axis: data.axis,
        first_time: data.labels[0].clone(),
        last_time: data.labels[n - 1].clone(),
        kernel: cfg.kernel,
        bandwidth_mode: cfg.bandwidth_mode,
        h,
        v,
        b_t,
        cv,
        drift,
        seasonal,
        lambda_floor: fit.g_hat.lambda_floor,
        phi_hat: PhiSummary {
            median: median(phi),
            min: phi.iter().copied().fold(f64::INFINITY, f64::min),
            max: phi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        clamped_residuals: fit.residuals_e_clamped.iter().filter(|c| **c).count(),
        residuals_v,
        residuals_e,
        seed: cfg.seed,
    };
    Ok(PipelineOutput { report, y, fit, labels: data.labels.clone() })
}

/// `curves.csv`: one row per observation; `phi_hat` is blank outside the
/// interior and `e_hat` blank for the first observation.
pub fn curves_csv(out: &PipelineOutput) -> Result<String> {
    let fit = &out.fit;
    let n = out.y.len();
    let interior: std::collections::HashMap<usize, f64> = {
        let tf = n as f64;
        fit.phi_hat
            .grid
            .iter()
            .zip(&fit.phi_hat.values)
            .map(|(x, p)| (((x * tf).round() as usize), *p))
            .collect()
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["index", "time", "x", "y", "g_hat", "v_hat", "phi_hat", "e_hat", "phi_clamped"]).map_err(csv_err)?;
    for k in 0..n {
        let i = k + 1;
        let phi = interior.get(&i).map_or(String::new(), |p| format_real(*p));
        let (e, clamped) = if k == 0 {
            (String::new(), String::new())
        } else {
            (format_real(fit.residuals_e[k - 1]), fit.residuals_e_clamped[k - 1].to_string())
        };
        w.write_record([
            i.to_string(),
            out.labels[k].clone(),
            format_real(i as f64 / n as f64),
            format_real(out.y[k]),
            format_real(fit.g_hat.values[k]),
            format_real(fit.residuals_v[k]),
            phi,
            e,
            clamped,
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// SVG files keyed by file name.
pub fn plots(out: &PipelineOutput) -> Vec<(&'static str, String)> {
    let n = out.y.len();
    let x: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
    let units = out.report.units.as_deref().map_or(String::new(), |u| format!(" [{u}]"));
    let r = &out.report;
    vec![
        (
            "series.svg",
            line_plot(
                &format!("observed series and fitted trend{units}"),
                "t / T",
                &[
                    LineSeries { name: "y", x: &x, y: &out.y },
                    LineSeries { name: "g_hat", x: &x, y: &out.fit.g_hat.values },
                ],
            ),
        ),
        (
            "phi_hat.svg",
            line_plot(
                "local AR(1) coefficient",
                "t / T",
                &[LineSeries { name: "phi_hat", x: &out.fit.phi_hat.grid, y: &out.fit.phi_hat.values }],
            ),
        ),
        (
            "acf_v.svg",
            stem_plot(
                "trend residuals: ACF and PACF",
                &[("acf", &r.residuals_v.acf), ("pacf", &r.residuals_v.pacf)],
                r.residuals_v.bartlett_band,
            ),
        ),
        (
            "acf_e.svg",
            stem_plot(
                "innovation residuals: ACF and PACF",
                &[("acf", &r.residuals_e.acf), ("pacf", &r.residuals_e.pacf)],
                r.residuals_e.bartlett_band,
            ),
        ),
    ]
}

/// Ingests, analyses and writes `curves.csv`, `diagnostics.json` and the
/// SVG plots into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let data = ingest_csv(&cfg.input_path, cfg).map_err(|e| e.in_stage("ingest"))?;
    let name = cfg.input_path.file_name().map_or(String::new(), |s| s.to_string_lossy().into_owned());
    let out = analyse(&data, cfg, &name)?;
    write_outputs(&out, &cfg.output_dir).map_err(|e| e.in_stage("write outputs"))?;
    Ok(out)
}

pub fn write_outputs(out: &PipelineOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("curves.csv"), curves_csv(out)?)?;
    fs::write(dir.join("diagnostics.json"), to_json_string(&out.report)?)?;
    for (name, svg) in plots(out) {
        fs::write(dir.join(name), svg)?;
    }
    Ok(())
}

/// A monthly series shaped like a sea-level anomaly record: smooth rising
/// trend, annual and semi-annual cycles, and AR(1) noise with coefficient
/// `phi`, starting January 1993.
pub fn synthetic_monthly_csv(n: usize, phi: f64, seed: u64) -> Result<String> {
    use crate::tvar::TvarModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let model = TvarModel::constant_phi(|u| 60.0 * u + 12.0 * (3.0 * (u - 0.5)).tanh(), phi, 8.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = model.simulate_with(n, &mut rng)?;
    let mut out = String::from("time,sla\n");
    for (k, v) in y.values().iter().enumerate() {
        let t = (k + 1) as f64;
        let seasonal = 25.0 * (std::f64::consts::TAU * t / 12.0 + 0.4).sin() + 6.0 * (std::f64::consts::TAU * t / 6.0).cos();
        out.push_str(&format!("{}-{:02},{:.6}\n", 1993 + k / 12, k % 12 + 1, v + seasonal));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::io::Write;

    fn write_csv(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    fn monthly(n: usize, skip: Option<usize>) -> String {
        let mut s = String::from("time,value\n");
        let mut m = 0;
        for k in 0..n {
            if Some(k) == skip {
                m += 1;
            }
            let _ = writeln!(s, "{}-{:02},{}", 2000 + m / 12, m % 12 + 1, k as f64 * 0.5);
            m += 1;
        }
        s
    }

    use std::fmt::Write as _;

    #[test]
    fn ingest_monthly() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "a.csv", &monthly(12, None));
        let d = ingest_csv(&p, &PipelineConfig::default()).unwrap();
        assert_eq!(d.series.len(), 12);
        assert_eq!(d.axis, TimeAxis::Monthly);
        assert!((d.years[11] - d.years[0] - 11.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn ingest_reports_gap() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "gap.csv", &monthly(12, Some(5)));
        let err = ingest_csv(&p, &PipelineConfig::default()).unwrap_err().to_string();
        assert!(err.contains("irregular spacing") && err.contains("2000-05") && err.contains("2000-07"), "{err}");
    }

    #[test]
    fn ingest_rejects_nan_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "nan.csv", "time,value\n1,1.0\n2,NaN\n3,2.0\n");
        let err = ingest_csv(&p, &PipelineConfig::default()).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("NaN"), "{err}");
    }

    #[test]
    fn ingest_other_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::default();
        let ragged = write_csv(dir.path(), "r.csv", "time,value\n1,1\n2,2,9\n");
        assert!(ingest_csv(&ragged, &cfg).unwrap_err().to_string().contains("line 3"));
        let text = write_csv(dir.path(), "t.csv", "time,value\n1,1\n2,abc\n");
        assert!(ingest_csv(&text, &cfg).unwrap_err().to_string().contains("non-numeric"));
        let cols = write_csv(dir.path(), "c.csv", "date,sla\n1,1\n2,2\n");
        assert!(ingest_csv(&cols, &cfg).unwrap_err().to_string().contains("column 'time'"));
        let daily = write_csv(dir.path(), "d.csv", "time,value\n2020-01-30,1\n2020-01-31,2\n2020-02-01,3\n");
        let d = ingest_csv(&daily, &cfg).unwrap();
        assert_eq!(d.axis, TimeAxis::Daily);
        assert!(ingest_csv(&dir.path().join("missing.csv"), &cfg).is_err());
    }

    #[test]
    fn drift_correction_is_affine() {
        let years: Vec<f64> = (0..=120).map(|k| 2000.0 + k as f64 / 12.0).collect();
        let ys = vec![3.0; years.len()];
        assert_eq!(apply_drift_correction(&ys, &years, 0.0, 2000.0), ys);
        let out = apply_drift_correction(&ys, &years, 0.145, 2000.0);
        assert!(((out[0] - out[120]) - 1.45).abs() < 1e-12);
        for w in out.windows(3) {
            assert!(((w[2] - w[1]) - (w[1] - w[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn removes_pure_sinusoid() {
        let y: Vec<f64> = (1..=240).map(|t| 4.0 * (std::f64::consts::TAU * t as f64 / 12.0 + 0.3).sin()).collect();
        let d = deseasonalize(&y, &[12.0]).unwrap();
        assert!(d.residual.iter().all(|r| r.abs() <= 1e-8));
    }

    #[test]
    fn white_noise_keeps_its_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = (0..600).map(|_| StandardNormal.sample(&mut rng)).collect();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let d = deseasonalize(&y, &[12.0, 6.0]).unwrap();
        let rel = (var(&d.residual) - var(&y)).abs() / var(&y);
        assert!(rel <= 2.0 * (2.0 * 4.0 / 600.0), "{rel}");
    }

    #[test]
    fn trend_survives() {
        let n = 360;
        let trend: Vec<f64> = (1..=n).map(|t| 0.05 * t as f64).collect();
        let y: Vec<f64> =
            trend.iter().enumerate().map(|(k, tr)| tr + 2.0 * (std::f64::consts::TAU * (k + 1) as f64 / 12.0).cos()).collect();
        let d = deseasonalize(&y, &[12.0]).unwrap();
        let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mr, mt) = (m(&d.residual), m(&trend));
        let cov: f64 = d.residual.iter().zip(&trend).map(|(a, b)| (a - mr) * (b - mt)).sum();
        let sr: f64 = d.residual.iter().map(|a| (a - mr).powi(2)).sum::<f64>().sqrt();
        let st: f64 = trend.iter().map(|b| (b - mt).powi(2)).sum::<f64>().sqrt();
        assert!(cov / (sr * st) > 0.99);
    }

    #[test]
    fn rank_deficiency() {
        let y: Vec<f64> = (0..100).map(|t| t as f64).collect();
        // sin(pi t) vanishes on the integers
        assert!(matches!(deseasonalize(&y, &[2.0]), Err(Error::RankDeficient(_))));
        assert!(matches!(deseasonalize(&y, &[12.0, 12.0]), Err(Error::RankDeficient(_))));
        assert!(matches!(deseasonalize(&y[..16], &[12.0, 6.0]), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = PipelineConfig { h: Some(0.2), bandwidth_mode: PipelineBandwidth::Fixed, ..Default::default() };
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"bandwidth_mode\":\"fixed\""));
        let back: PipelineConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let partial: PipelineConfig = serde_json::from_str(r#"{"input_path": "x.csv", "kernel": "biweight"}"#).unwrap();
        assert_eq!(partial.kernel, KernelFamily::Biweight);
        assert_eq!(partial.harmonics, vec![12.0, 6.0]);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
        assert!(PipelineConfig { bandwidth_mode: PipelineBandwidth::Fixed, ..Default::default() }.validate().is_err());
    }
}
