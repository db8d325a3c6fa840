//! End-to-end runs of the `machflow` binary on small configurations.

use std::path::Path;
use std::process::Command;

use machflow_harness::converge::run_converge;
use machflow_harness::emit::Manifest;
use machflow_harness::ExperimentConfig;

const SMALL: [&str; 4] = ["lattice.cutoff=8", "sweep.eps=[0.1,0.05]", "sweep.t_end=0.01", "sweep.sample_every=10"];

fn machflow(args: &[&str], overrides: &[&str], out: &Path) -> String {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_machflow"));
    cmd.args(args).arg("--output").arg(out);
    for o in overrides {
        cmd.arg("--set").arg(o);
    }
    let res = cmd.output().expect("binary runs");
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    String::from_utf8(res.stdout).unwrap()
}

fn small() -> Vec<String> {
    SMALL.iter().map(|s| s.to_string()).collect()
}

#[test]
fn converge_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    machflow(&["converge"], &SMALL, &a);
    machflow(&["converge"], &SMALL, &b);
    for f in ["convergence.csv", "series.csv", "convergence_summary.json"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs between runs");
    }
    let (ma, mb) = (
        Manifest::load(&a.join("manifest_converge.json")).unwrap(),
        Manifest::load(&b.join("manifest_converge.json")).unwrap(),
    );
    assert_eq!(ma.config_sha256, mb.config_sha256);
    assert_eq!(ma.files, mb.files);
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    machflow(&["converge"], &SMALL, &first);
    let manifest = Manifest::load(&first.join("manifest_converge.json")).unwrap();
    assert_eq!(manifest.command, "converge");
    assert!(manifest.files.iter().any(|f| f.file == "convergence.csv"));

    let cfg = manifest.config().unwrap();
    assert_eq!(cfg.hash(), ExperimentConfig::from_toml_str("schema = 1", &small()).unwrap().hash());
    let again = run_converge(&cfg).unwrap();

    let mut rdr = csv::Reader::from_path(first.join("convergence.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let wcol = headers.iter().position(|h| h == "w").unwrap();
    let recorded: Vec<f64> = rdr.records().map(|r| r.unwrap()[wcol].parse().unwrap()).collect();
    assert_eq!(recorded.len(), again.rows.len());
    for (w, row) in recorded.iter().zip(&again.rows) {
        assert!((w - row.w).abs() <= 1e-12 * w.abs().max(1e-300), "{w} vs {}", row.w);
    }

    // Replaying through the CLI gives byte-identical tables.
    let second = dir.path().join("second");
    let m = first.join("manifest_converge.json");
    machflow(&["converge", "--manifest", m.to_str().unwrap()], &[], &second);
    assert_eq!(
        std::fs::read(first.join("convergence.csv")).unwrap(),
        std::fs::read(second.join("convergence.csv")).unwrap()
    );
}

#[test]
fn single_eps_reports_no_fit() {
    let mut o = small();
    o[1] = "sweep.eps=[0.1]".into();
    let cfg = ExperimentConfig::from_toml_str("schema = 1", &o).unwrap();
    let t = run_converge(&cfg).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert!(t.w_fit.is_none() && t.mean_fit.is_none() && t.z_nonincreasing.is_none());
    assert!(t.note.as_deref().unwrap().contains("insufficient for fit"));
}

#[test]
fn kernel_data_stay_out_of_the_acoustic_part() {
    // Dissipation and the nonlinearity both feed the acoustic part, in
    // proportion to the amplitude, so the amplitude is kept tiny.
    let mut o = small();
    o.extend(["initial.osc_amplitude=0".to_string(), "initial.norm.value=1e-6".to_string()]);
    let cfg = ExperimentConfig::from_toml_str("schema = 1", &o).unwrap();
    let t = run_converge(&cfg).unwrap();
    for r in &t.rows {
        assert!(r.z < 1e-8, "Z = {} at eps = {}", r.z, r.eps);
        assert!(r.x > 1e3 * r.y, "oscillating part {} against kernel part {}", r.y, r.x);
    }
    assert!(t.limit.v_norm_initial < 1e-12);
}

#[test]
fn identities_and_divisor_commands_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let text = machflow(&["identities"], &["identities.modes=20", "identities.fields=10", "identities.cancellation_inputs=5"], &out);
    assert!(text.lines().all(|l| l.ends_with("ok")), "{text}");
    machflow(&["divisor"], &["divisor.radii=[2,4,8]", "divisor.aspect_samples=2"], &out);
    for f in ["identities.csv", "divisor.csv", "divisor_fits.csv", "manifest_identities.json", "manifest_divisor.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let failing = Command::new(env!("CARGO_BIN_EXE_machflow"))
        .args(["identities", "--perturb-weight", "1e-3", "--output"])
        .arg(&out)
        .args(["--set", "identities.modes=20", "--set", "identities.fields=10", "--set", "identities.cancellation_inputs=5"])
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stdout).contains("skew_adjointness"));
}

#[test]
fn simulate_snapshots_round_trip_through_norm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let text = machflow(&["simulate"], &["lattice.cutoff=8", "sweep.t_end=0.005", "simulate.snapshots=2"], &out);
    assert_eq!(text.lines().count(), 3);
    let snap = out.join("snapshots/snap_0000.mfld");
    let v: f64 = machflow(&["norm", snap.to_str().unwrap(), "--s", "1", "--sobolev"], &[], &out).trim().parse().unwrap();
    assert!(v.is_finite() && v > 0.0);
    let bad = Command::new(env!("CARGO_BIN_EXE_machflow")).args(["norm", "/nonexistent.mfld"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
