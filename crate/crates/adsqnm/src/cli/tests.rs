use super::config::*;
use super::tables::*;
use super::*;
use crate::geometry::BlackHoleParams;

fn params(m: f64, a: f64) -> BlackHoleParams {
    BlackHoleParams { mass: m, spin: a, nu: 1.5, k: 0 }
}

/// Small grids so a whole pipeline runs in well under a second.
fn small(dir: &Path, stages: Vec<Stage>) -> RunConfig {
    let mut c = RunConfig::new(params(1.0, 0.1), stages);
    c.grid.n_radial = 12;
    c.grid.n_angular = 6;
    c.scan = Some(crate::spectra::ScanSpec {
        re_min: 1.0,
        re_max: 5.0,
        h: 1.0,
        c_minus: -0.5,
        c_plus: 1.0,
        n_re: 5,
        n_im: 3,
        candidate_factor: 10.0,
    });
    c.flow.n_seeds = 2;
    c.seed = 3;
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn horizon_only_run_records_r_plus() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), vec![Stage::Horizon]);
    cfg.params.spin = 0.0;
    let m = run(&cfg, &RunOptions::default()).unwrap();
    let h = m.horizon.unwrap();
    assert!((h.r_plus - 1.0).abs() < 1e-12);
    assert_eq!(m.summary["r_plus"], h.r_plus);
    assert!(dir.path().join(MANIFEST_FILE).is_file());
    assert_eq!(m.stages.len(), 1);
    assert!(m.outputs.is_empty());
}

#[test]
fn spin_above_one_is_rejected_with_the_physical_reason() {
    let text = r#"{"params": {"M": 1, "a": 1.2, "nu": 1.5, "k": 0}, "pipeline": ["horizon"]}"#;
    match RunConfig::from_json_str(text) {
        Err(e @ CliError::ConfigInvalid(_)) => {
            assert!(e.to_string().contains("|a| < 1"), "{e}");
            assert_eq!(e.exit_code(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_rejects_unknown_fields_and_stages() {
    for text in [
        r#"{"params": {"M": 1, "a": 0, "nu": 1.5, "k": 0}, "pipeline": ["horizon"], "colour": 1}"#,
        r#"{"params": {"M": 1, "a": 0, "nu": 1.5, "k": 0}, "pipeline": ["teleport"]}"#,
        r#"{"params": {"M": 1, "a": 0, "nu": 1.5}, "pipeline": ["horizon"]}"#,
        r#"{"params": {"M": 1, "a": 0, "nu": 1.5, "k": 0}, "pipeline": []}"#,
        r#"{"params": {"M": 1, "a": 0, "nu": 1.5, "k": 0}, "pipeline": ["horizon"], "bc": {"kind": "robin"}}"#,
        "not json",
    ] {
        assert!(matches!(RunConfig::from_json_str(text), Err(CliError::ConfigInvalid(_))), "{text}");
    }
}

#[test]
fn invariants_beyond_the_schema_are_checked() {
    let mut c = RunConfig::new(params(1.0, 0.0), vec![Stage::Horizon]);
    c.grid.fine_n_radial = Some(c.grid.n_radial);
    assert!(matches!(c.check(), Err(CliError::ConfigInvalid(_))));
    let mut c = RunConfig::new(params(1.0, 0.0), vec![Stage::Horizon]);
    c.params.k = 40;
    assert!(matches!(c.check(), Err(CliError::ConfigInvalid(_))));
}

#[test]
fn canonical_config_validates_and_round_trips() {
    let mut c = RunConfig::new(params(1.0, 0.3), vec![Stage::Match, Stage::Flow]);
    c.bc = crate::operator::BoundaryCondition::Robin { beta: crate::operator::BetaProfile::Legendre(vec![0.1, 0.0, 0.2]) };
    c.params.nu = 0.75;
    let text = serde_json::to_string(&c).unwrap();
    let back = RunConfig::from_json_str(&text).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
    let moved = RunConfig { output_dir: "elsewhere".into(), ..c.clone() };
    assert_eq!(moved.hash(), c.hash());
    let other = RunConfig { seed: 1, ..c.clone() };
    assert_ne!(other.hash(), c.hash());
}

#[test]
fn dependencies_are_pulled_in_and_ordered() {
    let c = RunConfig::new(params(1.0, 0.0), vec![Stage::Match]);
    assert_eq!(c.stage_plan(), vec![Stage::Horizon, Stage::Assemble, Stage::Solve, Stage::Quasimodes, Stage::Match]);
    let c = RunConfig::new(params(1.0, 0.0), vec![Stage::Probe, Stage::Flow]);
    assert_eq!(c.stage_plan(), vec![Stage::Horizon, Stage::Flow, Stage::Probe]);
}

fn csv_files(dir: &Path, m: &RunManifest) -> Vec<(String, Vec<u8>)> {
    m.outputs.iter().filter(|o| o.ends_with(".csv")).map(|o| (o.clone(), std::fs::read(dir.join(o)).unwrap())).collect()
}

#[test]
fn reruns_are_byte_identical_and_headers_match() {
    let stages = vec![Stage::Solve, Stage::Scan, Stage::Verify, Stage::Flow, Stage::Probe];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run(&small(a.path(), stages.clone()), &RunOptions::default()).unwrap();
    let mb = run(&small(b.path(), stages), &RunOptions { output_dir: None, workers: Some(2) }).unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.outputs, mb.outputs);
    let (fa, fb) = (csv_files(a.path(), &ma), csv_files(b.path(), &mb));
    assert!(fa.len() >= 8);
    assert_eq!(fa, fb);
    for (rel, _) in &fa {
        check_header(a.path(), rel).unwrap();
    }
    let first = String::from_utf8(std::fs::read(a.path().join("qnf.csv")).unwrap()).unwrap();
    assert_eq!(first.lines().next().unwrap(), "ell_hint,k,re_lambda,im_lambda,residual,converged");
    assert!(ma.missing_outputs().is_empty());
}

#[test]
fn export_json_validates_against_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(dir.path(), vec![Stage::Solve, Stage::Verify]), &RunOptions::default()).unwrap();
    let paths = export(&m, ExportFormat::Json).unwrap();
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
    tables::validate_export(&value).unwrap();
    let indicial = &value["tables"]["indicial"];
    assert_eq!(indicial["header"][0], "k");
    assert!(indicial["rows"][0][0].is_i64());
    let csv = export(&m, ExportFormat::Csv).unwrap();
    assert_eq!(csv.len(), m.outputs.iter().filter(|o| o.ends_with(".csv")).count());
    let mut broken = value.clone();
    broken["config_hash"] = "xyz".into();
    assert!(tables::validate_export(&broken).is_err());
}

#[test]
fn tampered_header_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(dir.path(), vec![Stage::Solve]), &RunOptions::default()).unwrap();
    std::fs::write(dir.path().join("qnf.csv"), "lambda\n1\n").unwrap();
    assert!(matches!(export(&m, ExportFormat::Csv), Err(CliError::SchemaMismatch { .. })));
}

#[test]
fn failing_stage_sets_exit_code_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), vec![Stage::Scan, Stage::Flow]);
    // Below −κ/2 the rectangle is rejected.
    cfg.scan.as_mut().unwrap().c_minus = -50.0;
    match run(&cfg, &RunOptions::default()) {
        Err(e @ CliError::StageFailure { .. }) => {
            assert_eq!(e.exit_code(), 1);
            let CliError::StageFailure { stage, manifest, .. } = e else { unreachable!() };
            assert_eq!(stage, "scan");
            assert_eq!(manifest.status(Stage::Scan), Some(StageStatus::Failed));
            assert_eq!(manifest.status(Stage::Flow), Some(StageStatus::Ok));
            let saved = RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
            assert_eq!(saved.status(Stage::Scan), Some(StageStatus::Failed));
        }
        other => panic!("{other:?}"),
    }
    cfg.optional_stages = vec![Stage::Scan];
    let m = run(&cfg, &RunOptions::default()).unwrap();
    assert!(m.partial_success);
}

#[test]
fn dependents_of_a_failed_stage_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), vec![Stage::Match]);
    // A wall inside the horizon makes the quasimode stage fail.
    cfg.quasimodes.r1 = Some(0.5);
    cfg.quasimodes.ell_min = 3;
    cfg.quasimodes.ell_max = 4;
    cfg.optional_stages = vec![Stage::Quasimodes, Stage::Match];
    let m = run(&cfg, &RunOptions::default()).unwrap();
    assert!(m.partial_success);
    assert_eq!(m.status(Stage::Solve), Some(StageStatus::Ok));
    assert_eq!(m.status(Stage::Quasimodes), Some(StageStatus::Failed));
    assert_eq!(m.status(Stage::Match), Some(StageStatus::Skipped));
    let rec = m.stages.iter().find(|s| s.stage == Stage::Match).unwrap();
    assert!(rec.message.as_deref().unwrap().contains("quasimodes"));
}

fn synthetic_manifest(dir: &Path, outputs: &[&str]) -> RunManifest {
    let cfg = RunConfig::new(params(1.0, 0.0), vec![Stage::Horizon]);
    let mut m = RunManifest::new(&cfg, dir);
    m.horizon = Some(crate::geometry::find_horizon(&cfg.params).unwrap());
    m.outputs = outputs.iter().map(|s| s.to_string()).collect();
    m
}

#[test]
fn spectrum_plot_has_one_marker_per_converged_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("qnf.csv"),
        "ell_hint,k,re_lambda,im_lambda,residual,converged\n0,0,2.8,-2.6,1e-12,true\n1,0,3.4,-2.5,1e-12,true\n,0,9.0,-0.1,1e-2,false\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("match.csv"),
        "ell,lambda_sharp,quasimode_residual,re_pole,im_pole,distance\n3,3.3,0.1,3.4,-2.5,2.5\n4,5.0,0.1,,,\n",
    )
    .unwrap();
    let m = synthetic_manifest(dir.path(), &["qnf.csv", "match.csv"]);
    let svg = std::fs::read_to_string(plot(&m, PlotKind::Spectrum).unwrap()).unwrap();
    assert_eq!(svg.matches(r#"class="qnf""#).count(), 2);
    assert_eq!(svg.matches(r#"class="quasimode""#).count(), 2);
    assert_eq!(svg.matches(r#"class="match-link""#).count(), 1);
    assert!(svg.contains("Re λ") && svg.contains("Im λ"));
    assert!(!svg.contains("href"));
}

#[test]
fn residual_trend_annotates_the_slope() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("ell,lambda_sharp,residual,r1,transition_width\n");
    for l in 3..=9 {
        body += &format!("{l},{},{},2.0,0.5\n", 1.0 + l as f64, (-0.5 * l as f64).exp());
    }
    std::fs::write(dir.path().join("quasimodes.csv"), body).unwrap();
    let m = synthetic_manifest(dir.path(), &["quasimodes.csv"]);
    let svg = std::fs::read_to_string(plot(&m, PlotKind::ResidualTrend).unwrap()).unwrap();
    assert!(svg.contains(r#"class="fit""#));
    assert!(svg.contains("= -0.5000"), "{svg}");
    assert_eq!(svg.matches(r#"class="residual""#).count(), 7);
}

#[test]
fn plots_need_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let m = synthetic_manifest(dir.path(), &[]);
    for k in [PlotKind::Spectrum, PlotKind::ResidualTrend, PlotKind::ScanHeatmap, PlotKind::FlowPortrait] {
        assert!(matches!(plot(&m, k), Err(CliError::MissingStageOutput(_))), "{k:?}");
    }
}

#[test]
fn flow_portrait_is_reproducible_and_marks_the_source() {
    let mut hashes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let m = run(&small(dir.path(), vec![Stage::Flow]), &RunOptions::default()).unwrap();
        let svg = std::fs::read_to_string(plot(&m, PlotKind::FlowPortrait).unwrap()).unwrap();
        assert!(svg.contains("L₊ (source)"));
        assert_eq!(svg.matches(r#"class="source-arrow""#).count(), 2);
        assert_eq!(svg.matches(r#"class="trajectory"#).count(), 4);
        let paths: String = svg.lines().filter(|l| l.contains("<path")).collect();
        hashes.push(super::config::hex(&<sha2::Sha256 as sha2::Digest>::digest(paths.as_bytes())));
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn scan_heatmap_draws_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&small(dir.path(), vec![Stage::Scan]), &RunOptions::default()).unwrap();
    let svg = std::fs::read_to_string(plot(&m, PlotKind::ScanHeatmap).unwrap()).unwrap();
    assert_eq!(svg.matches(r#"class="cell""#).count(), 15);
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"params": {"M": 1, "a": 1.2, "nu": 1.5, "k": 0}, "pipeline": ["horizon"]}"#).unwrap();
    assert_eq!(main_with_args(["adsqnm", "validate", bad.to_str().unwrap()]), 2);
    assert_eq!(main_with_args(["adsqnm", "run", bad.to_str().unwrap()]), 2);
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"params": {"M": 1, "a": 0, "nu": 1.5, "k": 0}, "pipeline": ["horizon"]}"#).unwrap();
    assert_eq!(main_with_args(["adsqnm", "validate", good.to_str().unwrap()]), 0);
    let out = dir.path().join("out");
    assert_eq!(main_with_args(["adsqnm", "run", good.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    assert!(out.join(MANIFEST_FILE).is_file());
    assert_eq!(main_with_args(["adsqnm", "plot", out.to_str().unwrap(), "--kind", "spectrum"]), 1);
    assert_eq!(main_with_args(["adsqnm", "schema"]), 0);
    assert_eq!(main_with_args(["adsqnm", "frobnicate"]), 2);
}

#[test]
fn output_directory_precedence() {
    let c = RunConfig::new(params(1.0, 0.0), vec![Stage::Horizon]);
    assert_eq!(resolve_output_dir(&c, Some("flag".into())), PathBuf::from("flag"));
    std::env::set_var("ADSQNM_OUT", "from_env");
    assert_eq!(resolve_output_dir(&c, None), PathBuf::from("from_env"));
    assert_eq!(resolve_output_dir(&c, Some("flag".into())), PathBuf::from("flag"));
    std::env::remove_var("ADSQNM_OUT");
    assert_eq!(resolve_output_dir(&c, None), c.output_dir);
}

#[test]
fn every_documented_table_has_a_unique_file() {
    let mut files: Vec<&str> = ALL_TABLES.iter().map(|t| t.file).collect();
    files.sort();
    files.dedup();
    assert_eq!(files.len(), ALL_TABLES.len());
    assert_eq!(schema_for("flow/seed_004_backward.csv"), Some(TRAJECTORY));
    assert_eq!(schema_for("qnf.csv"), Some(QNF));
    assert_eq!(num(1e-13), "1e-13");
    assert_eq!(num(2.5), "2.5");
}
