use std::fs;
use std::path::{Path, PathBuf};

use tvreg::pipeline::{
    analyse, ingest_csv, run_pipeline, synthetic_monthly_csv, PipelineBandwidth, PipelineConfig,
};
use tvreg::{Error, ErrorCategory};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn config(input: PathBuf, out: &Path) -> PipelineConfig {
    PipelineConfig {
        input_path: input,
        value_column: "sla".into(),
        units: Some("mm".into()),
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn bundled_fixture_is_regenerable() {
    let on_disk = fs::read_to_string(fixture("synthetic_monthly.csv")).unwrap();
    assert_eq!(on_disk, synthetic_monthly_csv(383, 0.75, 0).unwrap());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_pipeline(&config(fixture("synthetic_monthly.csv"), &a)).unwrap();
    run_pipeline(&config(fixture("synthetic_monthly.csv"), &b)).unwrap();
    for f in ["curves.csv", "diagnostics.json", "series.svg", "phi_hat.svg", "acf_v.svg", "acf_e.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn fixture_outputs_are_sensible() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&config(fixture("synthetic_monthly.csv"), dir.path())).unwrap();
    let r = &out.report;
    assert_eq!(r.n, 383);
    assert!((0.65..=0.85).contains(&r.phi_hat.median), "{}", r.phi_hat.median);
    assert_eq!(r.residuals_v.bic_grid.as_ref().unwrap().best_order, (1, 0));
    assert_eq!(r.residuals_e.ljung_box.len(), 11);
    let seasonal = r.seasonal.as_ref().unwrap();
    let annual = seasonal.harmonics[0].sin_coef.hypot(seasonal.harmonics[0].cos_coef);
    assert!((annual - 25.0).abs() < 3.0, "{annual}");

    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next().unwrap(), "index,time,x,y,g_hat,v_hat,phi_hat,e_hat,phi_clamped");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 383);
    assert!(rows[0].ends_with(",,"), "{}", rows[0]);

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(json["units"], "mm");
    assert_eq!(json["n"], 383);
    assert!(json["residuals_e"]["bartlett_band"].as_f64().unwrap() > 0.0);
}

#[test]
fn svg_references_each_series_once() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&config(fixture("synthetic_monthly.csv"), dir.path())).unwrap();
    let expect: [(&str, &[&str]); 4] = [
        ("series.svg", &["y", "g_hat"]),
        ("phi_hat.svg", &["phi_hat"]),
        ("acf_v.svg", &["band", "acf", "pacf"]),
        ("acf_e.svg", &["band", "acf", "pacf"]),
    ];
    for (file, names) in expect {
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{file}: {e}"));
        let found: Vec<&str> = doc.descendants().filter_map(|n| n.attribute("data-series")).collect();
        assert_eq!(found, names, "{file}");
    }
}

#[test]
fn optional_stages_reduce_to_fit_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        deseasonalize: false,
        bandwidth_mode: PipelineBandwidth::Fixed,
        h: Some(0.15),
        v: Some(0.15),
        ..config(fixture("synthetic_monthly.csv"), dir.path())
    };
    let data = ingest_csv(&cfg.input_path, &cfg).unwrap();
    let out = analyse(&data, &cfg, "x").unwrap();
    assert!(out.report.seasonal.is_none() && out.report.drift.is_none() && out.report.cv.is_none());
    assert_eq!(out.y, data.series.values());
    let direct = tvreg::tvar::fit_two_step(
        &data.series,
        &tvreg::KernelSpec::epanechnikov(),
        &tvreg::KernelSpec::epanechnikov(),
        0.15,
        0.15,
        tvreg::tvar::default_interior_margin(0.15),
    )
    .unwrap();
    // boundary entries are NaN, so compare the printed forms
    assert_eq!(format!("{:?}", out.fit), format!("{direct:?}"));
}

#[test]
fn drift_stage_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let base = PipelineConfig { deseasonalize: false, ..config(fixture("synthetic_monthly.csv"), dir.path()) };
    let data = ingest_csv(&base.input_path, &base).unwrap();
    let cfg = PipelineConfig { linear_drift_rate: Some(1.2), drift_epoch: Some(1993.0), ..base };
    let out = analyse(&data, &cfg, "x").unwrap();
    let raw = data.series.values();
    // 120 months after the epoch
    assert!(((raw[120] - out.y[120]) - 1.2 * 10.0).abs() < 1e-9);
}

#[test]
fn ljung_box_passes_on_fitted_innovations() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = 50;
    let mut passing = 0;
    for seed in 0..seeds {
        let path = dir.path().join(format!("s{seed}.csv"));
        fs::write(&path, synthetic_monthly_csv(383, 0.75, 1000 + seed).unwrap()).unwrap();
        let cfg = config(path, dir.path());
        let data = ingest_csv(&cfg.input_path, &cfg).unwrap();
        let out = analyse(&data, &cfg, "x").unwrap();
        if out.report.residuals_e.ljung_box.iter().all(|l| l.p_value > 0.05) {
            passing += 1;
        }
    }
    assert!(passing * 100 >= 80 * seeds, "{passing}/{seeds}");
}

#[test]
fn malformed_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (file, needle) in [
        ("ragged.csv", "line 20"),
        ("non_numeric.csv", "line 15"),
        ("nan_value.csv", "line 25"),
        ("gap_month.csv", "1995-06"),
        ("missing_column.csv", "column 'time'"),
    ] {
        let err = run_pipeline(&config(fixture(file), dir.path())).unwrap_err();
        assert_eq!(err.category(), ErrorCategory::Data, "{file}: {err}");
        assert!(err.to_string().contains(needle), "{file}: {err}");
        assert!(err.to_string().starts_with("ingest: "), "{file}: {err}");
    }
    let missing = run_pipeline(&config(fixture("absent.csv"), dir.path())).unwrap_err();
    assert!(matches!(missing.root(), Error::Io(_)));
}
