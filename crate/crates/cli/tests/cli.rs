use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use sixdma::scenario::reference_scene;
use sixdma::Execution;
use sixdma_cli::config::parse_powers;
use sixdma_cli::export::{geometry_export, load_record, to_json, CSV_HEADER};
use sixdma_cli::pipeline::optimize;
use sixdma_cli::record::{Scheme, Timings};
use sixdma_cli::{cmd_sweep, RunConfig, RunRecord, GEOMETRY_FILE, RESULTS_FILE, RUN_FILE};

fn quick() -> RunConfig {
    RunConfig {
        kappa_max: 3,
        mbar: 64,
        powers_dbm: vec![0.0, 15.0, 30.0],
        mc_samples: 0,
        ..RunConfig::default()
    }
}

fn sixdma(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sixdma"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn binary_writes_outputs_and_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let run = sixdma(&[
        "optimize",
        "--kappa-max",
        "2",
        "--mbar",
        "64",
        "--mc-samples",
        "0",
        "--powers",
        "0,10",
        "--out",
        path(out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    for f in [RUN_FILE, RESULTS_FILE, GEOMETRY_FILE] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let run_json = out.join(RUN_FILE);
    assert_eq!(
        sixdma(&["verify", "--run", path(&run_json)]).status.code(),
        Some(0)
    );

    let mut rec = load_record(&run_json).unwrap();
    for p in &mut rec.placement.positions {
        *p = nalgebra::Vector3::zeros();
    }
    let tampered = out.join("tampered.json");
    std::fs::write(&tampered, to_json(&rec).unwrap()).unwrap();
    assert_eq!(
        sixdma(&["verify", "--run", path(&tampered)]).status.code(),
        Some(2)
    );

    let bad = out.join("bad.toml");
    std::fs::write(&bad, "wavelength = \"long\"\n").unwrap();
    assert_eq!(
        sixdma(&["optimize", "--scene", path(&bad), "--out", path(out)])
            .status
            .code(),
        Some(3)
    );

    let sweep = sixdma(&[
        "sweep",
        "--run",
        path(&run_json),
        "--powers",
        "",
        "--out",
        path(out),
    ]);
    assert!(sweep.status.success());
    let csv = std::fs::read_to_string(out.join(RESULTS_FILE)).unwrap();
    assert_eq!(csv.trim_end(), CSV_HEADER.join(","));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("run.toml");
    std::fs::write(
        &cfg,
        "kappa_max = 0\nmbar = 32\nmc_samples = 0\npowers_dbm = [5.0]\n",
    )
    .unwrap();
    let run = sixdma(&[
        "optimize",
        "--config",
        path(&cfg),
        "--powers",
        "-3,7",
        "--out",
        path(out),
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let rec = load_record(&out.join(RUN_FILE)).unwrap();
    assert_eq!(rec.config.kappa_max, 0);
    assert_eq!(rec.config.mbar, 32);
    assert_eq!(rec.config.powers_dbm, vec![-3.0, 7.0]);

    std::fs::write(&cfg, "kappa = 3\n").unwrap();
    assert_eq!(
        sixdma(&["optimize", "--config", path(&cfg), "--out", path(out)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn geometry_export_describes_every_surface() {
    let rec = optimize(&reference_scene(), &quick(), Execution::Parallel).unwrap();
    let g = geometry_export(&rec);
    assert_eq!(g.surfaces.len(), 8);
    assert_eq!(
        g.surfaces.iter().map(|s| s.antennas.len()).sum::<usize>(),
        32
    );
    for s in &g.surfaces {
        assert!((s.normal.norm() - 1.0).abs() < 1e-12);
        for p in &s.rim {
            let d = p - s.center;
            assert!((d.norm() - g.cer_radius).abs() < 1e-9);
            assert!(d.dot(&s.normal).abs() < 1e-9);
        }
        for a in &s.antennas {
            assert!((a - s.center).norm() <= g.cer_radius + 1e-12);
        }
    }
    assert!((g.bounding_cube.edge - rec.cube_edge()).abs() < 1e-12);
}

fn without_timings(mut r: RunRecord) -> RunRecord {
    r.timings = Timings::default();
    r
}

#[test]
fn records_replay_exactly() {
    let cfg = RunConfig {
        mc_samples: 50,
        ..quick()
    };
    let a = optimize(&reference_scene(), &cfg, Execution::Parallel).unwrap();
    let b = optimize(&reference_scene(), &cfg, Execution::Sequential).unwrap();
    assert_eq!(without_timings(a.clone()), without_timings(b));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(RUN_FILE), to_json(&a).unwrap()).unwrap();
    let back = load_record(&dir.path().join(RUN_FILE)).unwrap();
    assert_eq!(back, a);
}

#[test]
fn zero_iterations_keep_greedy_start() {
    let cfg = RunConfig {
        kappa_max: 0,
        ..quick()
    };
    let rec = optimize(&reference_scene(), &cfg, Execution::Parallel).unwrap();
    assert_eq!(rec.design.optimized, rec.design.initial);
    assert_eq!(rec.design.trace, vec![rec.design.initial_objective]);
}

#[test]
fn sum_log_rate_grows_with_power() {
    let rec = optimize(&reference_scene(), &quick(), Execution::Parallel).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let powers: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
    cmd_sweep(&rec, &powers, 0, dir.path(), Execution::Parallel).unwrap();
    let rows = sixdma_cli::pipeline::evaluate(&rec, &powers, 0, Execution::Parallel).unwrap();
    for scheme in [Scheme::Optimized, Scheme::Fpa] {
        let s: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| r.report.sum_log_rate)
            .collect();
        assert_eq!(s.len(), powers.len());
        assert!(s.windows(2).all(|w| w[1] >= w[0]), "{scheme:?}: {s:?}");
    }
    let csv = std::fs::read_to_string(dir.path().join(RESULTS_FILE)).unwrap();
    assert_eq!(
        csv.lines().count(),
        1 + 2 * powers.len() * rec.scene.users.len()
    );
}

proptest! {
    #[test]
    fn power_lists_round_trip(p in prop::collection::vec(-50.0..50.0f64, 0..8)) {
        let text = p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_powers(&text).unwrap(), p);
    }
}
