use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SCENE: &str = r#"
seed = 11
noise = 0.01

[ground]
normal = [0.01, 0.02, 1.0]
offset = -0.5
extent = [0.0, 0.0, 6.0, 5.0]
points = 24000

[[boxes]]
center = [2.0, 2.0]
size = [1.5, 1.0, 1.2]
points = 3000

[[poles]]
position = [4.5, 4.0]
radius = 0.1
height = 3.0
points = 1000
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_groundfilt"));
    c.env_remove("GROUNDFILT_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes the test scene and returns its path.
fn scene(dir: &Path) -> PathBuf {
    let spec = dir.join("scene.toml");
    fs::write(&spec, SCENE).unwrap();
    let cloud = dir.join("scene.xyz");
    ok(&["synth", "--spec", s(&spec), s(&cloud)]);
    cloud
}

#[test]
fn synth_writes_labelled_points() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    let text = fs::read_to_string(&cloud).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 28_000);
    let ground = lines.iter().filter(|l| l.split(' ').nth(3) == Some("1")).count();
    assert_eq!(ground, 24_000);

    let again = d.path().join("again.xyz");
    ok(&["synth", "--spec", s(&d.path().join("scene.toml")), s(&again)]);
    assert_eq!(fs::read(&cloud).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn filter_voxel_then_eval() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    let out = d.path().join("voxel.xyz");
    ok(&["filter-voxel", s(&cloud), s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    for line in text.lines() {
        let f: Vec<&str> = line.split(' ').collect();
        assert_eq!(f.len(), 5, "{line}");
        assert!(f[3] == "0" || f[3] == "1");
    }
    let eval = ok(&["eval", s(&out), s(&cloud)]);
    let table = String::from_utf8(eval.stdout).unwrap();
    for metric in ["accuracy", "precision", "recall", "f_measure", "iou"] {
        assert!(table.contains(metric), "{table}");
    }
    let json = ok(&["eval", "--json", s(&out), s(&cloud)]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v["metrics"]["accuracy"].as_f64().unwrap() > 0.9);
    assert_eq!(
        v["confusion"]["tp"].as_u64().unwrap()
            + v["confusion"]["fp"].as_u64().unwrap()
            + v["confusion"]["fn"].as_u64().unwrap()
            + v["confusion"]["tn"].as_u64().unwrap(),
        28_000
    );
}

#[test]
fn backends_give_identical_files() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    let kd = d.path().join("kd.xyz");
    let brute = d.path().join("brute.xyz");
    ok(&["filter-normal", "--knn-backend", "kdtree", s(&cloud), s(&kd)]);
    ok(&["filter-normal", "--knn-backend", "brute", s(&cloud), s(&brute)]);
    assert_eq!(fs::read(&kd).unwrap(), fs::read(&brute).unwrap());
}

#[test]
fn thread_count_does_not_change_output() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    for cmd in ["filter-normal", "filter-voxel"] {
        let one = d.path().join("one.xyz");
        let many = d.path().join("many.xyz");
        ok(&["--threads", "1", cmd, s(&cloud), s(&one)]);
        let out = bin()
            .env("GROUNDFILT_THREADS", "4")
            .args([cmd, s(&cloud), s(&many)])
            .output()
            .unwrap();
        assert!(out.status.success());
        assert_eq!(fs::read(&one).unwrap(), fs::read(&many).unwrap(), "{cmd}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    let cfg = d.path().join("run.cfg");
    let out = d.path().join("o.xyz");

    fs::write(&cfg, "# too small\nk = 2\n").unwrap();
    let r = run(&["--config", s(&cfg), "filter-normal", s(&cloud), s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    ok(&["--config", s(&cfg), "filter-normal", "--k", "20", s(&cloud), s(&out)]);

    fs::write(&cfg, "neighbour = 3\n").unwrap();
    let r = run(&["--config", s(&cfg), "filter-voxel", s(&cloud), s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains(":1:"));

    // A config value changes the result exactly like the flag does.
    fs::write(&cfg, "min_points = 50\n").unwrap();
    let via_cfg = d.path().join("cfg.xyz");
    let via_flag = d.path().join("flag.xyz");
    ok(&["--config", s(&cfg), "filter-voxel", s(&cloud), s(&via_cfg)]);
    ok(&["filter-voxel", "--min-points", "50", s(&cloud), s(&via_flag)]);
    let default = d.path().join("default.xyz");
    ok(&["filter-voxel", s(&cloud), s(&default)]);
    assert_eq!(fs::read(&via_cfg).unwrap(), fs::read(&via_flag).unwrap());
    assert_ne!(fs::read(&via_cfg).unwrap(), fs::read(&default).unwrap());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["filter-normal"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["filter-normal", "--knn-backend", "gpu", "a", "b"]).status.code(), Some(2));
    assert_eq!(run(&["synth", s(&d.path().join("x.xyz"))]).status.code(), Some(2));
    let out = bin().env("GROUNDFILT_THREADS", "many").args(["synth", "--street", "10", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing = d.path().join("missing.xyz");
    let r = run(&["filter-voxel", s(&missing), s(&d.path().join("o.xyz"))]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!r.stderr.is_empty());

    let bad = d.path().join("bad.xyz");
    fs::write(&bad, "0 0 0\n1 2\n").unwrap();
    let r = run(&["filter-voxel", s(&bad), s(&d.path().join("o.xyz"))]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains(":2:"));
}

#[test]
fn bench_reports_each_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    let out = ok(&["bench", "--repetitions", "1", "--pipelines", "voxel,kdtree", "--json", s(&cloud)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["total_secs"].as_f64().is_some()));
    let text = ok(&["bench", "--repetitions", "1", "--pipelines", "voxel", s(&cloud)]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("average"));
}

#[test]
fn ply_output_and_baseline() {
    let d = tempfile::tempdir().unwrap();
    let cloud = scene(d.path());
    let ply = d.path().join("out.ply");
    ok(&["filter-normal", "--baseline", "ls", s(&cloud), s(&ply)]);
    let text = fs::read_to_string(&ply).unwrap();
    assert!(text.starts_with("ply\nformat ascii 1.0\nelement vertex 28000\n"));
    ok(&["eval", s(&ply), s(&cloud)]);
}
