use std::path::Path;
use std::process::Command;

const TINY: &str = r#"
seed = 3
dataset.n_per_class = 40
dataset.n_classes = 3
dataset.dim = 6
train.hidden = [12, 12]
train.epochs = 3
train.batch_size = 16
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bnnfilter"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn train_subcommand_writes_runlog_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let res = bin()
        .args(["train", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!res.stdout.is_empty());
    let runlogs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("runlog_") && n.ends_with("_3.csv"))
        .collect();
    assert_eq!(runlogs.len(), 1, "{runlogs:?}");
    let log = std::fs::read_to_string(out.join(&runlogs[0])).unwrap();
    assert!(log.starts_with("record,step,epoch,series,unit,value"));
    assert!(log.contains("ff_ratio"));
    assert!(log.contains("test_accuracy"));
    assert!(out.join("summary.csv").exists());
}

#[test]
fn seed_flag_overrides_config_and_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let res = bin()
            .args(["alpha-decay", "--seed", seed, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let stdout: Vec<String> = String::from_utf8(res.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("results written to"))
            .map(str::to_string)
            .collect();
        (stdout, std::fs::read_to_string(out.join("summary.csv")).unwrap())
    };
    let a = run("a", "9");
    let b = run("b", "9");
    assert_eq!(a, b);
    assert!(dir.path().join("a").read_dir().unwrap().any(|e| e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .ends_with("_9.csv")));
}

#[test]
fn bad_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "train.epochz = 3\n");
    let res = bin().args(["train", "--config"]).arg(&cfg).output().unwrap();
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("train.epochz"), "{err}");

    let cfg = write_config(dir.path(), "filtered.alpha = -1.0\n");
    let res = bin().args(["train", "--config"]).arg(&cfg).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("filtered.alpha"));

    let res = bin().args(["train", "--config"]).arg(dir.path().join("missing.toml")).output().unwrap();
    assert!(!res.status.success());
    assert!(!res.stderr.is_empty());
}

#[test]
fn unknown_subcommand_rejected() {
    let res = bin().arg("bogus").output().unwrap();
    assert!(!res.status.success());
}
