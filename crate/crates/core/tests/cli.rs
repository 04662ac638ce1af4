use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radagrad"))
}

#[test]
fn run_writes_outputs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ls");
    let o = bin()
        .args(["run", "--experiment", "least_squares", "--optimizer", "adagrad_diag,radagrad", "--eta", "0.01"])
        .args(["--tau", "3", "--oversample", "2", "--epochs", "2", "--seeds", "0,1"])
        .args(["--set", "n=100", "--set", "p=12", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("radagrad") && stdout.contains("adagrad_diag"));
    for f in ["records.csv", "aggregate.csv", "summary.txt", "config.resolved", "runs/radagrad-seed1.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert!(records.starts_with("run_id,optimizer,seed,epoch,step,train_loss,test_metric,step_wall_us\n"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# small run\nexperiment = synthetic_classification\nn = 80\np = 16\ntau = 4\nepochs = 1\nseeds = 2\neta = 0.05\n").unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .args(["run", "--optimizer", "ada_full"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = std::fs::read_to_string(out.join("config.resolved")).unwrap();
    assert!(resolved.contains("optimizers=ada_full") && resolved.contains("n=80"), "{resolved}");
}

#[test]
fn invalid_values_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (args, key) in [
        (vec!["run", "--tau", "200"], "tau"),
        (vec!["run", "--set", "bogus=1"], "bogus"),
        (vec!["run", "--eta", "-1"], "eta"),
    ] {
        let o = bin().args(&args).arg("--out").arg(dir.path()).output().unwrap();
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(key), "{args:?}: {err}");
    }
}

#[test]
fn tune_prints_step_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["tune", "--optimizer", "adagrad_diag", "--set", "n=100", "--set", "p=10", "--set", "eta_grid=0.01,0.1"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("adagrad_diag"));
    assert!(dir.path().join("tuning.csv").exists());
}
