use std::path::{Path, PathBuf};
use std::process::{Command, Output};

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("spect-cli-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Self(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn spect(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spect"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = spect(dir, args);
    assert!(
        out.status.success(),
        "spect {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rmse_of(stdout: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    v["rmse"].as_f64().unwrap()
}

#[test]
fn metrics_of_phantom_against_itself() {
    let s = Scratch::new("self");
    ok(&s.0, &["phantom", "--n", "64", "--out", "a.img"]);
    ok(&s.0, &["phantom", "--n", "64", "--out", "b.img"]);
    assert_eq!(
        rmse_of(&ok(&s.0, &["metrics", "--ref", "a.img", "b.img"])),
        0.0
    );
    assert!(s.path("a.img.manifest.json").exists());
}

#[test]
fn noise_is_reproducible() {
    let s = Scratch::new("noise");
    ok(
        &s.0,
        &[
            "project", "--mu0", "1", "--views", "60", "--rays", "50", "--out", "g.sino",
        ],
    );
    ok(
        &s.0,
        &[
            "noise", "--counts", "1e6", "--seed", "7", "g.sino", "a.sino",
        ],
    );
    ok(
        &s.0,
        &[
            "noise", "--counts", "1e6", "--seed", "7", "g.sino", "b.sino",
        ],
    );
    ok(
        &s.0,
        &[
            "noise", "--counts", "1e6", "--seed", "8", "g.sino", "c.sino",
        ],
    );
    let a = std::fs::read(s.path("a.sino")).unwrap();
    assert_eq!(a, std::fs::read(s.path("b.sino")).unwrap());
    assert_ne!(a, std::fs::read(s.path("c.sino")).unwrap());
}

#[test]
fn replay_reproduces_outputs() {
    let s = Scratch::new("replay");
    ok(
        &s.0,
        &[
            "project", "--mu0", "0.5", "--views", "90", "--rays", "64", "--out", "g.sino",
        ],
    );
    ok(
        &s.0,
        &[
            "noise", "--counts", "1e6", "--seed", "3", "g.sino", "n.sino",
        ],
    );
    ok(
        &s.0,
        &["reconstruct", "n.sino", "--grid", "48", "--out", "r.img"],
    );
    let first = std::fs::read(s.path("r.img")).unwrap();
    std::fs::remove_file(s.path("r.img")).unwrap();
    ok(&s.0, &["replay", "n.sino.manifest.json"]);
    ok(&s.0, &["replay", "r.img.manifest.json"]);
    assert_eq!(first, std::fs::read(s.path("r.img")).unwrap());
}

#[test]
fn unattenuated_chain_is_accurate() {
    let s = Scratch::new("chain");
    ok(&s.0, &["phantom", "--n", "128", "--out", "ref.img"]);
    ok(
        &s.0,
        &[
            "project", "--mu0", "0", "--views", "360", "--rays", "200", "--out", "g.sino",
        ],
    );
    ok(
        &s.0,
        &[
            "reconstruct",
            "g.sino",
            "--grid",
            "128",
            "--out",
            "r.img",
            "--png",
            "r.pgm",
        ],
    );
    let e = rmse_of(&ok(
        &s.0,
        &[
            "metrics", "--ref", "ref.img", "r.img", "--region", "interior",
        ],
    ));
    assert!(e <= 0.05, "rmse {e}");
    let csv = std::fs::read_to_string({
        ok(&s.0, &["profile", "--x1", "0", "r.img", "--out", "p.csv"]);
        s.path("p.csv")
    })
    .unwrap();
    assert_eq!(csv.lines().count(), 129);
}

#[test]
fn interior_problem_exits_nonzero() {
    let s = Scratch::new("interior");
    ok(
        &s.0,
        &[
            "project", "--mu0", "1", "--views", "90", "--rays", "64", "--out", "g.sino",
        ],
    );
    ok(
        &s.0,
        &["truncate", "--box=-0.3,-0.3,0.3,0.3", "g.sino", "t.sino"],
    );
    let out = spect(
        &s.0,
        &[
            "reconstruct",
            "t.sino",
            "--grid",
            "32",
            "--box=-0.3,-0.3,0.3,0.3",
            "--out",
            "r.img",
        ],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim().lines().count(), 1, "{err}");
    assert!(err.contains("interior"), "{err}");
    assert!(!s.path("r.img").exists());
}

#[test]
fn truncated_box_reconstructs() {
    let s = Scratch::new("box");
    ok(
        &s.0,
        &[
            "project", "--mu0", "1", "--views", "180", "--rays", "128", "--out", "g.sino",
        ],
    );
    ok(
        &s.0,
        &["reconstruct", "g.sino", "--grid", "64", "--out", "full.img"],
    );
    ok(
        &s.0,
        &["truncate", "--box=-0.45,-1,0.45,1", "g.sino", "t.sino"],
    );
    ok(
        &s.0,
        &[
            "reconstruct",
            "t.sino",
            "--grid",
            "64",
            "--default-box",
            "--out",
            "roi.img",
        ],
    );
    let e = rmse_of(&ok(
        &s.0,
        &[
            "metrics",
            "--ref",
            "full.img",
            "roi.img",
            "--region=-0.45,-1,0.45,1",
        ],
    ));
    assert!(e <= 1e-3, "rmse {e}");
}

#[test]
fn invert_line_recovers_semicircle() {
    let s = Scratch::new("line");
    let n = 200;
    let mut text = format!("mu1 0\nc_mu1 {}\n", std::f64::consts::FRAC_PI_2);
    for k in 1..=n {
        let t = ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        text.push_str(&format!("{t} {t}\n"));
    }
    std::fs::write(s.path("line.txt"), text).unwrap();
    ok(
        &s.0,
        &[
            "invert-line",
            "line.txt",
            "--m-order",
            "4",
            "--out",
            "f.csv",
        ],
    );
    let csv = std::fs::read_to_string(s.path("f.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let (t, f) = row.split_once(',').unwrap();
        let (t, f): (f64, f64) = (t.parse().unwrap(), f.parse().unwrap());
        assert!((f - (1.0 - t * t).sqrt()).abs() < 1e-6, "t {t}: {f}");
    }
}

#[test]
fn bad_input_is_diagnosed() {
    let s = Scratch::new("bad");
    std::fs::write(s.path("junk.sino"), b"not a sinogram").unwrap();
    let out = spect(&s.0, &["reconstruct", "junk.sino", "--out", "r.img"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        String::from_utf8_lossy(&out.stderr).trim().lines().count(),
        1
    );
    let out = spect(&s.0, &["project", "--views", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = spect(
        &s.0,
        &["project", "--mu0", "1", "--views", "0", "--out", "g.sino"],
    );
    assert_eq!(out.status.code(), Some(1));
}
