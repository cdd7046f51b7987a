use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use tvreg::bandwidth::{cv_curve, CvConfig, CvReport};
use tvreg::diagnostics::{diagnose, LJUNG_BOX_LAGS};
use tvreg::experiments::{
    mase_table_csv, mc_table1, theta, verify_rate, BandwidthMode, McConfig, NoiseProcess, RateCheckConfig,
    RateMode, RateParams,
};
use tvreg::kernels::{KernelFamily, KernelSpec};
use tvreg::pipeline::{ingest_csv, run_pipeline, Ingested, PipelineConfig};
use tvreg::report::{format_real, to_json_string};
use tvreg::tvar::{default_interior_margin, fit_two_step, mc_trend, TvarModel};
use tvreg::{Error, Result};

use crate::{Cli, Command, InputArgs, ModeArg, ProcessArg};

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Fit(a) => fit(cli, a),
        Command::Cv(a) => cv(cli, a),
        Command::McTable1(a) => mc(cli, a),
        Command::RateCheck(a) => rate_check(cli, a),
        Command::Theta(a) => theta_cmd(cli, a),
        Command::Diagnose(a) => diagnose_cmd(cli, a),
        Command::Pipeline(a) => pipeline(cli, a),
    }
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn load_or_default<T: DeserializeOwned + Default>(cli: &Cli) -> Result<T> {
    cli.config.as_deref().map_or_else(|| Ok(T::default()), load_json)
}

fn output_dir(cli: &Cli) -> PathBuf {
    cli.output.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn read_input(a: &InputArgs) -> Result<Ingested> {
    let cfg = PipelineConfig {
        input_path: a.input.clone(),
        time_column: a.time_column.clone(),
        value_column: a.value_column.clone(),
        ..Default::default()
    };
    ingest_csv(&a.input, &cfg).map_err(|e| e.in_stage("ingest"))
}

fn simulate(cli: &Cli, a: &crate::SimulateArgs) -> Result<()> {
    if a.sigma2.is_nan() || a.sigma2 < 0.0 {
        return Err(Error::InvalidConfig(format!("sigma2 must be >= 0, got {}", a.sigma2)));
    }
    let model = match a.phi {
        Some(phi) => TvarModel::constant_phi(mc_trend, phi, a.sigma2.sqrt())?,
        None => TvarModel::monte_carlo(a.sigma2)?,
    };
    let series = model.simulate(a.length, cli.seed.unwrap_or(0))?;
    let t = series.len();
    let mut out = String::from("time,x,value,g,phi\n");
    for (k, y) in series.values().iter().enumerate() {
        let x = (k + 1) as f64 / t as f64;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            k + 1,
            format_real(x),
            format_real(*y),
            format_real(model.g(x)),
            format_real(model.phi(x))
        ));
    }
    let path = write(&output_dir(cli), "series.csv", &out)?;
    println!("wrote {} observations to {}", t, path.display());
    Ok(())
}

#[derive(Serialize)]
struct FitSummary {
    input_file: String,
    n: usize,
    kernel: KernelFamily,
    h: f64,
    v: f64,
    b_t: f64,
    lambda_floor: f64,
    phi_hat_min: f64,
    phi_hat_max: f64,
    cv: Option<CvReport>,
}

fn fit(cli: &Cli, a: &crate::FitArgs) -> Result<()> {
    let data = read_input(&a.input)?;
    let spec = KernelSpec::new(a.input.kernel);
    let (h, cv) = match a.h {
        Some(h) => (h, None),
        None => {
            let rep = cv_curve(&data.series, &spec, &CvConfig::default_for(data.series.len()))
                .map_err(|e| e.in_stage("bandwidth selection"))?;
            (rep.selected, Some(rep))
        }
    };
    let v = a.v.unwrap_or(h);
    let b_t = a.b_t.unwrap_or_else(|| default_interior_margin(v));
    let fit = fit_two_step(&data.series, &spec, &spec, h, v, b_t).map_err(|e| e.in_stage("two-step fit"))?;

    let y = data.series.values();
    let phi = fit.phi_on_design();
    let mut csv = String::from("index,time,x,y,g_hat,v_hat,phi_hat,e_hat,phi_clamped\n");
    for k in 0..y.len() {
        let (e, clamped) = if k == 0 {
            (String::new(), String::new())
        } else {
            (format_real(fit.residuals_e[k - 1]), fit.residuals_e_clamped[k - 1].to_string())
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            k + 1,
            data.labels[k],
            format_real(fit.g_hat.grid[k]),
            format_real(y[k]),
            format_real(fit.g_hat.values[k]),
            format_real(fit.residuals_v[k]),
            format_real(phi[k]),
            e,
            clamped
        ));
    }
    let summary = FitSummary {
        input_file: a.input.input.display().to_string(),
        n: y.len(),
        kernel: a.input.kernel,
        h,
        v,
        b_t,
        lambda_floor: fit.g_hat.lambda_floor,
        phi_hat_min: fit.phi_hat.values.iter().copied().fold(f64::INFINITY, f64::min),
        phi_hat_max: fit.phi_hat.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        cv,
    };
    let dir = output_dir(cli);
    write(&dir, "curves.csv", &csv)?;
    write(&dir, "fit.json", &to_json_string(&summary)?)?;
    println!(
        "h = {h:.4}, v = {v:.4}, phi_hat in [{:.4}, {:.4}]; outputs in {}",
        summary.phi_hat_min,
        summary.phi_hat_max,
        dir.display()
    );
    Ok(())
}

fn cv(cli: &Cli, a: &InputArgs) -> Result<()> {
    let data = read_input(a)?;
    let cfg = match &cli.config {
        Some(path) => load_json(path)?,
        None => CvConfig::default_for(data.series.len()),
    };
    let rep = cv_curve(&data.series, &KernelSpec::new(a.kernel), &cfg)?;
    let path = write(&output_dir(cli), "cv.json", &to_json_string(&rep)?)?;
    println!("selected h = {:.6} (score {:.6}); curve in {}", rep.selected, rep.min_score, path.display());
    Ok(())
}

fn mc(cli: &Cli, a: &crate::McArgs) -> Result<()> {
    let mut cfg: McConfig = load_or_default(cli)?;
    if let Some(t) = &a.t_list {
        cfg.t_list.clone_from(t);
    }
    if let Some(s) = &a.sigma2_list {
        cfg.sigma2_list.clone_from(s);
    }
    if let Some(n) = a.n_reps {
        cfg.n_reps = n;
    }
    if let (Some(h), Some(v)) = (a.h, a.v) {
        cfg.mode = BandwidthMode::Fixed { h, v };
    }
    if let Some(k) = a.kernel {
        cfg.kernel = k;
    }
    if let Some(seed) = cli.seed {
        cfg.seed_base = seed;
    }
    let reports = mc_table1(&cfg)?;
    let table = mase_table_csv(&reports);
    let dir = output_dir(cli);
    write(&dir, "mase.csv", &table)?;
    write(&dir, "mc_table1.json", &to_json_string(&reports)?)?;
    print!("{table}");
    Ok(())
}

fn rate_check(cli: &Cli, a: &crate::RateArgs) -> Result<()> {
    let mut cfg: RateCheckConfig = load_or_default(cli)?;
    match a.process {
        Some(ProcessArg::Iid) => cfg.process = NoiseProcess::Iid,
        Some(ProcessArg::Ar1) => cfg.process = NoiseProcess::Ar1 { phi: a.phi },
        None => {}
    }
    if let Some(j) = a.j {
        cfg.j = j;
    }
    if let Some(t) = &a.t_list {
        cfg.t_list.clone_from(t);
    }
    if let Some(n) = a.n_reps {
        cfg.n_reps = n;
    }
    if let Some(s) = a.scale {
        cfg.rule.scale = s;
    }
    if let Some(e) = a.exponent {
        cfg.rule.exponent = e;
    }
    if let Some(k) = a.kernel {
        cfg.kernel = k;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let rep = verify_rate(&cfg)?;
    let path = write(&output_dir(cli), "rate_check.json", &to_json_string(&rep)?)?;
    println!("slope = {:.4}, R^2 = {:.4}; details in {}", rep.slope, rep.r2, path.display());
    Ok(())
}

fn theta_cmd(cli: &Cli, a: &crate::ThetaArgs) -> Result<()> {
    let mut p = match &cli.config {
        Some(path) => load_json(path)?,
        None => RateParams { beta: 10.0, s: 4.0, m: 0, c: 1.0, lambda: 0.0, mode: RateMode::InProbability },
    };
    if let Some(b) = a.beta {
        p.beta = b;
    }
    if let Some(s) = a.s {
        p.s = s;
    }
    if let Some(m) = a.m {
        p.m = m;
    }
    if let Some(c) = a.c {
        p.c = c;
    }
    if let Some(l) = a.lambda {
        p.lambda = l;
    }
    match a.mode {
        Some(ModeArg::InProbability) => p.mode = RateMode::InProbability,
        Some(ModeArg::AlmostSure) => p.mode = RateMode::AlmostSure,
        None => {}
    }
    let r = theta(&p)?;
    if r.admissible && !r.in_unit_interval {
        eprintln!("warning: admissible parameters give theta = {} outside (0, 1)", r.theta);
    }
    print!("{}", to_json_string(&r)?);
    Ok(())
}

fn diagnose_cmd(cli: &Cli, a: &crate::DiagnoseArgs) -> Result<()> {
    let data = read_input(&a.input)?;
    let x = data.series.values();
    let lags: Vec<usize> = match &a.lags {
        Some(l) => l.clone(),
        None => LJUNG_BOX_LAGS.iter().copied().filter(|l| 2 * l < x.len()).collect(),
    };
    let rep = diagnose(x, a.max_lag, &lags, a.bic)?;
    let path = write(&output_dir(cli), "diagnostics.json", &to_json_string(&rep)?)?;
    for lb in &rep.ljung_box {
        println!("Ljung-Box lag {:>2}: Q = {:>9.3}, p = {:.4}", lb.lag, lb.q, lb.p_value);
    }
    if let Some(grid) = &rep.bic_grid {
        println!("BIC-best ARMA order: {:?}", grid.best_order);
    }
    println!("report in {}", path.display());
    Ok(())
}

fn pipeline(cli: &Cli, a: &crate::PipelineArgs) -> Result<()> {
    let mut cfg: PipelineConfig = load_or_default(cli)?;
    if let Some(input) = &a.input {
        cfg.input_path.clone_from(input);
    }
    if let Some(c) = &a.time_column {
        cfg.time_column.clone_from(c);
    }
    if let Some(c) = &a.value_column {
        cfg.value_column.clone_from(c);
    }
    if cfg.input_path.as_os_str().is_empty() {
        return Err(Error::InvalidConfig("no input: pass --input or set input_path in --config".into()));
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir.clone_from(dir);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = run_pipeline(&cfg)?;
    let r = &out.report;
    println!(
        "n = {}, h = {:.4}, v = {:.4}, median phi_hat = {:.4}; outputs in {}",
        r.n,
        r.h,
        r.v,
        r.phi_hat.median,
        cfg.output_dir.display()
    );
    Ok(())
}
