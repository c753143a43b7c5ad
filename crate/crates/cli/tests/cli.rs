use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const TINY: &str = r#"
seed = 5

[agent]
hidden = [8, 8]
episodes = 200
episodes_per_epoch = 100
warmup_episodes = 64
batch_size = 32
eval_episodes = 20
candidates = 4

[eval]
episodes = 50
"#;

fn stroke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stroke")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tiny_config(dir: &Path) -> PathBuf {
    let p = dir.join("tiny.toml");
    fs::write(&p, TINY).unwrap();
    p
}

fn train_into(config: &Path, out: &Path) {
    let o = stroke(&["train", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn calibrate_prints_coefficients() {
    let o = stroke(&["calibrate", "--h1", "1.0", "--h2", "0.81", "--theta", "45"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("restitution 0.900000"), "{text}");
    assert!(text.contains("friction 1.000000"), "{text}");
}

#[test]
fn calibrate_rejects_zero_drop_height() {
    let o = stroke(&["calibrate", "--h1", "0", "--h2", "0.5"]);
    assert!(!o.status.success());
}

#[test]
fn missing_config_names_the_path() {
    let o = stroke(&["train", "--config", "/nonexistent/run.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/nonexistent/run.toml"), "{}", stderr(&o));
}

#[test]
fn rollout_writes_evenly_spaced_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("traj.csv");
    let o = stroke(&["rollout", "--seed", "3", "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,px,py,pz,vx,vy,vz,wx,wy,wz"));
    let t: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(t.len() > 100);
    for w in t.windows(2) {
        assert!((w[1] - w[0] - 1e-3).abs() < 1e-12);
    }
}

#[test]
fn train_is_reproducible_and_eval_reads_the_weights() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train_into(&cfg, &a);
    train_into(&cfg, &b);
    for name in ["weights.json", "metrics.toml", "training_log.toml"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    assert!(a.join("run_info.toml").exists());

    let weights = a.join("weights.json");
    let out = dir.path().join("eval.toml");
    let o = stroke(&[
        "eval",
        "--weights",
        weights.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--episodes",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("episodes 30"));
    assert!(fs::read_to_string(&out).unwrap().contains("success_rate"));

    // the default config expects a wider network
    let o = stroke(&["eval", "--weights", weights.to_str().unwrap(), "--episodes", "10"]);
    assert!(!o.status.success());

    let corrupt = dir.path().join("corrupt.json");
    fs::write(&corrupt, "{ not json").unwrap();
    let o = stroke(&["eval", "--weights", corrupt.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn ablate_reports_six_variants_in_order() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path());
    let out = dir.path().join("ablation");
    let o = stroke(&["ablate", "--config", cfg.to_str().unwrap(), "--seeds", "1,2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("ablation.txt")).unwrap();
    let medians: Vec<&str> = text
        .lines()
        .filter(|l| l.split_whitespace().nth(1) == Some("median"))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(medians, ["DDPG", "DDPG+argmax", "DDPG+argmax+3DQ", "TD3", "TD3+argmax", "TD3+argmax+3DQ"]);
    assert!(out.join("ablation.toml").exists());
}
