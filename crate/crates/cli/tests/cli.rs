use std::path::Path;
use std::process::{Command, Output};

fn irl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irl")).args(args).output().expect("run irl")
}

fn ok(args: &[&str]) -> String {
    let out = irl(args);
    assert!(out.status.success(), "irl {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn train_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let trainer = dir.path().join("trainer.json");
    let stdout = ok(&[
        "train-trainer",
        "--scenario",
        "open",
        "--seed",
        "3",
        "--out",
        p(&trainer),
        "--extend-until-greedy",
        "300",
    ]);
    assert!(stdout.contains("reaches the goal"));
    assert!(trainer.exists());

    let mut dirs = Vec::new();
    for condition in ["autonomous", "policy", "reward", "both"] {
        let out = dir.path().join(condition);
        let mut args =
            vec!["train", "--scenario", "open", "--condition", condition, "--agents", "3", "--episodes", "4"];
        args.extend(["--seed", "1", "--out", p(&out)]);
        if condition != "autonomous" {
            args.extend(["--trainer", p(&trainer)]);
        }
        let stdout = ok(&args);
        assert!(stdout.contains(&format!("open-{condition}-s1")));
        assert!(out.join("episodes.csv").exists());
        dirs.push(out);
    }

    let mut args = vec!["summarize", "--format", "table"];
    args.extend(dirs.iter().map(|d| p(d)));
    let table = ok(&args);
    assert!(table.contains("open: policy highest = "));

    let mut args = vec!["summarize", "--format", "structured"];
    args.extend(dirs.iter().map(|d| p(d)));
    let structured = ok(&args);
    assert!(structured.trim_start().starts_with('{'));
}

#[test]
fn overrides_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&[
        "train",
        "--condition",
        "autonomous",
        "--agents",
        "1",
        "--episodes",
        "2",
        "--out",
        p(&out),
        "--alpha",
        "0.5",
        "--gamma",
        "0.9",
        "--epsilon",
        "0.2",
        "--step-cap",
        "50",
    ]);
    let config = std::fs::read_to_string(out.join("config.json")).unwrap();
    assert!(config.contains("\"step_cap\": 50"));

    assert!(!irl(&["train", "--condition", "policy", "--agents", "1", "--episodes", "1", "--out", p(&out)])
        .status
        .success());
    assert!(!irl(&["train", "--condition", "sideways", "--out", p(&out)]).status.success());
    assert!(!irl(&["train", "--alpha", "0", "--out", p(&out)]).status.success());
    assert!(!irl(&["summarize", p(&dir.path().join("missing"))]).status.success());
}
