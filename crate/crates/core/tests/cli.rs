use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ramanforge::dataio::{read_batch, read_dark_stats, write_batch, BatchFile, DatasetManifest};
use ramanforge::report::Report;
use ramanforge::rng::sample_gaussian;
use ramanforge::{RngStream, Spectrum, SpectrumGrid};

fn ramanforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramanforge"))
        .args(args)
        .env_remove("RAMANFORGE_THREADS")
        .output()
        .expect("spawn ramanforge")
}

fn ok(args: &[&str]) -> Output {
    let out = ramanforge(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fails_with(args: &[&str], code: i32) -> String {
    let out = ramanforge(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn grid() -> SpectrumGrid {
    SpectrumGrid::new(600.0, 1790.0, 693).unwrap()
}

fn write_frames(path: &Path, count: usize, identical: bool) {
    let mut rng = RngStream::new(5, 0).rng();
    let g = grid();
    let first: Vec<f64> = (0..g.len()).map(|_| sample_gaussian(&mut rng, 200.0, 16.0).unwrap()).collect();
    let frames: Vec<Spectrum> = (0..count)
        .map(|_| {
            let v = if identical {
                first.clone()
            } else {
                (0..g.len()).map(|_| sample_gaussian(&mut rng, 200.0, 16.0).unwrap()).collect()
            };
            Spectrum::new(g, v).unwrap()
        })
        .collect();
    write_batch(path, &BatchFile::from_spectra(&frames).unwrap()).unwrap();
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn dark(&self) -> PathBuf {
        let frames = self.path("frames.csv");
        let out = self.path("dark.json");
        if !out.exists() {
            write_frames(&frames, 30, false);
            ok(&["dark-stats", "--frames", s(&frames), "--itime", "0.1", "--out", s(&out)]);
        }
        out
    }

    fn dataset(&self, name: &str, count: &str, skin: bool) -> PathBuf {
        let dark = self.dark();
        let out = self.path(name);
        let cmd = if skin { "simulate-skin" } else { "simulate" };
        ok(&[cmd, "--count", count, "--split", "test", "--dark", s(&dark), "--seed", "3", "--out", s(&out)]);
        out
    }
}

#[test]
fn dark_stats_records_frames_and_itime() {
    let f = Fixture::new();
    let frames = f.path("frames.csv");
    write_frames(&frames, 1000, false);
    let out = f.path("d.json");
    ok(&["dark-stats", "--frames", s(&frames), "--itime", "0.1", "--out", s(&out)]);
    let stats = read_dark_stats(&out).unwrap();
    assert_eq!(stats.n_frames, 1000);
    assert_eq!(stats.integration_time, 0.1);
    assert!(stats.variance.iter().all(|v| (v - 16.0).abs() < 16.0 * 0.35));
}

#[test]
fn dark_stats_edge_cases() {
    let f = Fixture::new();
    let one = f.path("one.csv");
    write_frames(&one, 1, false);
    let err = fails_with(&["dark-stats", "--frames", s(&one), "--itime", "0.1", "--out", s(&f.path("x.json"))], 1);
    assert!(err.contains("insufficient frames"), "{err}");

    let same = f.path("same.csv");
    write_frames(&same, 5, true);
    let out = f.path("same.json");
    ok(&["dark-stats", "--frames", s(&same), "--itime", "0.5", "--out", s(&out)]);
    assert!(read_dark_stats(&out).unwrap().variance.iter().all(|&v| v == 0.0));
}

#[test]
fn parse_errors_name_the_line() {
    let f = Fixture::new();
    let bad = f.path("bad.csv");
    std::fs::write(&bad, "wavenumber,spec_0\n600,1\n700,oops\n800,3\n").unwrap();
    let err = fails_with(&["dark-stats", "--frames", s(&bad), "--itime", "0.1", "--out", s(&f.path("x.json"))], 1);
    assert!(err.contains(":3:"), "{err}");
}

#[test]
fn simulate_writes_manifest_and_batches() {
    let f = Fixture::new();
    let ds = f.dataset("ds", "12", false);
    let m = DatasetManifest::read(ds.join("manifest.json")).unwrap();
    let test = m.split("test").unwrap();
    assert_eq!(test.count, 12);
    assert_eq!(test.examples.len(), 12);
    for file in [&test.files.noisy, &test.files.clean, &test.files.pure, &test.files.fluor] {
        assert_eq!(read_batch(ds.join(file)).unwrap().len(), 12);
    }
    m.validate(&ds).unwrap();
}

#[test]
fn simulate_requires_dark_stats() {
    let f = Fixture::new();
    fails_with(&["simulate", "--count", "3", "--out", s(&f.path("o"))], 1);
    let err = fails_with(
        &["simulate", "--count", "3", "--dark", s(&f.path("nope.json")), "--out", s(&f.path("o"))],
        2,
    );
    assert!(err.contains("nope.json"), "{err}");
}

#[test]
fn simulate_rejects_bad_ranges() {
    let f = Fixture::new();
    let dark = f.dark();
    fails_with(
        &["simulate", "--count", "3", "--dark", s(&dark), "--snr-min", "5", "--snr-max", "1", "--out", s(&f.path("o"))],
        1,
    );
}

#[test]
fn simulate_refuses_inconsistent_merge() {
    let f = Fixture::new();
    let ds = f.dataset("ds", "4", false);
    let dark = f.dark();
    let err = fails_with(
        &["simulate", "--count", "4", "--split", "train", "--dark", s(&dark), "--seed", "4", "--out", s(&ds)],
        1,
    );
    assert!(err.contains("root_seed"), "{err}");
}

#[test]
fn sg_reproduces_quadratics() {
    let f = Fixture::new();
    let g = grid();
    let quads: Vec<Spectrum> = (0..3)
        .map(|k| Spectrum::from_fn(g, |x| 1.0 + k as f64 * 1e-3 * x - 2e-6 * x * x).unwrap())
        .collect();
    let input = f.path("q.csv");
    write_batch(&input, &BatchFile::from_spectra(&quads).unwrap()).unwrap();
    let out = f.path("o.csv");
    ok(&["denoise", "--method", "sg", "--m", "2", "--d", "2", "--in", s(&input), "--out", s(&out)]);
    let back = read_batch(&out).unwrap().spectra().unwrap();
    for (a, b) in back.iter().zip(&quads) {
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn modpoly_flattens_baselines() {
    let f = Fixture::new();
    let g = grid();
    let bases: Vec<Spectrum> = (0..2)
        .map(|k| {
            Spectrum::from_fn(g, |x| {
                let t = (x - 600.0) / 1190.0;
                5.0 + k as f64 + 2.0 * t - 3.0 * t * t + t * t * t
            })
            .unwrap()
        })
        .collect();
    let input = f.path("b.csv");
    write_batch(&input, &BatchFile::from_spectra(&bases).unwrap()).unwrap();
    let out = f.path("o.csv");
    ok(&["denoise", "--method", "modpoly", "--in", s(&input), "--out", s(&out)]);
    for sp in read_batch(&out).unwrap().spectra().unwrap() {
        assert!(sp.values().iter().all(|v| v.abs() < 1e-6));
    }
}

#[test]
fn wavelet_and_unknown_methods() {
    let f = Fixture::new();
    let ds = f.dataset("ds", "3", false);
    let input = ds.join("test_noisy.csv");
    let out = f.path("w.csv");
    ok(&["denoise", "--method", "wavelet", "--levels", "3", "--rule", "hard", "--in", s(&input), "--out", s(&out)]);
    assert_eq!(read_batch(&out).unwrap().len(), 3);
    fails_with(&["denoise", "--method", "fourier", "--in", s(&input), "--out", s(&out)], 1);
    fails_with(&["denoise", "--method", "wavelet", "--family", "sym8", "--in", s(&input), "--out", s(&out)], 1);
}

#[cfg(unix)]
fn script(f: &Fixture, name: &str, body: &str) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let p = f.path(name);
    std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
    p
}

#[cfg(unix)]
#[test]
fn external_tool_contract() {
    let f = Fixture::new();
    let ds = f.dataset("ds", "3", false);
    let input = ds.join("test_noisy.csv");

    // argument order: --in <file> --out <file>
    let copy = script(&f, "copy.sh", r#"cp "$2" "$4""#);
    let out = f.path("copy.csv");
    ok(&["denoise", "--method", "external", "--command", s(&copy), "--in", s(&input), "--out", s(&out)]);
    assert_eq!(
        read_batch(&out).unwrap().spectra().unwrap(),
        read_batch(&input).unwrap().spectra().unwrap()
    );

    let short = script(&f, "short.sh", r#"head -n 100 "$2" > "$4""#);
    let err = fails_with(
        &["denoise", "--method", "external", "--command", s(&short), "--in", s(&input), "--out", s(&f.path("s.csv"))],
        3,
    );
    assert!(err.contains("shape mismatch") && err.contains("out.csv"), "{err}");

    let crash = script(&f, "crash.sh", "echo boom >&2; exit 7");
    let err = fails_with(
        &["denoise", "--method", "external", "--command", s(&crash), "--in", s(&input), "--out", s(&f.path("c.csv"))],
        3,
    );
    assert!(err.contains("boom"), "{err}");

    let manifest = ds.join("manifest.json");
    let report = f.path("ext.json");
    ok(&[
        "eval",
        "peaks",
        "--manifest",
        s(&manifest),
        "--denoiser",
        &format!("external:{}", s(&copy)),
        "--out",
        s(&report),
    ]);
}

#[test]
fn eval_protocols_and_plots() {
    let f = Fixture::new();
    let ds = f.dataset("ds", "10", false);
    let manifest = ds.join("manifest.json");

    let snri = f.path("snri.json");
    ok(&[
        "eval", "snri", "--manifest", s(&manifest), "--denoiser", "identity", "--pairs", "8", "--out", s(&snri),
    ]);
    let Report::Snri(r) = Report::read(&snri).unwrap() else {
        panic!("wrong report kind")
    };
    assert_eq!(r.records.len(), 8);
    assert!(r.records.iter().all(|x| x.snri_db.abs() < 3.0));
    assert!(f.path("snri.csv").exists());

    let peaks = f.path("peaks.json");
    ok(&["eval", "peaks", "--manifest", s(&manifest), "--denoiser", "oracle", "--out", s(&peaks)]);
    let Report::Peaks(r) = Report::read(&peaks).unwrap() else {
        panic!("wrong report kind")
    };
    assert_eq!(r.n_spectra, 10);
    assert!(r
        .sweep
        .levels
        .iter()
        .all(|l| l.missing_ratio == 0.0 && l.artifact_ratio == 0.0));
    let table = std::fs::read_to_string(f.path("peaks.csv")).unwrap();
    assert!(table.starts_with("prominence,missing_ratio,artifact_ratio,value_bias,shift_mean\n"));
    assert_eq!(table.lines().count(), 6);

    for (report, out) in [(&snri, "snri.svg"), (&peaks, "peaks.svg")] {
        ok(&["plot", "--report", s(report), "--out", s(&f.path(out))]);
        assert!(std::fs::read_to_string(f.path(out)).unwrap().starts_with("<svg"));
    }
    fails_with(&["plot", "--report", s(&peaks), "--out", s(&f.path("p.png"))], 1);
}

#[test]
fn skin_eval_reports_slopes_and_mse() {
    let f = Fixture::new();
    let ds = f.dataset("skin", "12", true);
    let manifest = ds.join("manifest.json");
    let out = f.path("skin.json");
    ok(&["eval", "skin", "--manifest", s(&manifest), "--denoiser", "oracle", "--out", s(&out)]);
    let Report::Skin(r) = Report::read(&out).unwrap() else {
        panic!("wrong report kind")
    };
    assert_eq!(r.components.len(), 7);
    assert_eq!(r.all.mse, 0.0);
    for c in &r.all.components {
        let fit = c.fit.expect("fit");
        assert!((fit.slope - 1.0).abs() < 1e-9 && fit.intercept.abs() < 1e-6 * r.all.weights_pure[0][0].max(1.0));
    }
    assert_eq!(r.groups.iter().map(|g| g.n_spectra).sum::<usize>(), 12);

    let plain = f.dataset("plain", "3", false);
    let err = fails_with(
        &[
            "eval",
            "skin",
            "--manifest",
            s(&plain.join("manifest.json")),
            "--denoiser",
            "identity",
            "--out",
            s(&f.path("x.json")),
        ],
        1,
    );
    assert!(err.contains("kind"), "{err}");
}

#[test]
fn export_basis_round_trips_through_simulate_skin() {
    let f = Fixture::new();
    let basis = f.path("basis");
    ok(&["export-basis", "--out", s(&basis)]);
    assert_eq!(std::fs::read_dir(&basis).unwrap().count(), 7);
    let dark = f.dark();
    let a = f.path("a");
    let b = f.path("b");
    ok(&["simulate-skin", "--count", "4", "--dark", s(&dark), "--out", s(&a)]);
    ok(&["simulate-skin", "--count", "4", "--dark", s(&dark), "--basis", s(&basis), "--out", s(&b)]);
    // the reloaded basis is renormalized, so allow last-digit differences
    let xa = read_batch(a.join("train_noisy.csv")).unwrap().spectra().unwrap();
    let xb = read_batch(b.join("train_noisy.csv")).unwrap().spectra().unwrap();
    for (p, q) in xa.iter().zip(&xb) {
        for (x, y) in p.values().iter().zip(q.values()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }
}

#[test]
fn manifest_problems_name_the_file() {
    let f = Fixture::new();
    let ds = f.dataset("ds", "4", false);
    std::fs::remove_file(ds.join("test_pure.csv")).unwrap();
    let err = fails_with(
        &[
            "eval",
            "peaks",
            "--manifest",
            s(&ds.join("manifest.json")),
            "--denoiser",
            "identity",
            "--out",
            s(&f.path("r.json")),
        ],
        1,
    );
    assert!(err.contains("test_pure.csv"), "{err}");
}

#[test]
fn thread_variable_is_checked() {
    let out = Command::new(env!("CARGO_BIN_EXE_ramanforge"))
        .args(["export-basis", "--out", "unused"])
        .env("RAMANFORGE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(ramanforge(&["--help"]).status.code(), Some(0));
    assert_eq!(ramanforge(&["frobnicate"]).status.code(), Some(1));
}
