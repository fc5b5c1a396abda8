use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bp(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bp")).arg("--out").arg(out).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_identity_passes_and_writes_report() {
    let out = scratch("verify");
    let o = bp(&out, &["verify", "identity"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("all checks passed"));
    let csv = std::fs::read_to_string(out.join("verify_identity.csv")).unwrap();
    assert!(csv.starts_with("suite,family,check,value,tolerance,status,detail\n"));
    assert_eq!(csv.lines().count(), 13);
    assert!(out.join("run.manifest").exists());
}

#[test]
fn generate_then_solve_with_each_map() {
    let out = scratch("solve");
    let cfg = out.join("small.cfg");
    std::fs::write(&cfg, "[cdr]\nn = 24\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = bp(&out, &["--config", cfg, "--seed", "3", "generate", "--family", "cdr", "--count", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = out.join("cdr_000.manifest");
    assert!(manifest.exists() && out.join("cdr_001.manifest").exists());
    let m = manifest.to_str().unwrap();

    let solved = out.join("cbs");
    let o = bp(&solved, &["solve", m, "--format", "cbs", "--rtol", "1e-6"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("converged"), "{}", stdout(&o));
    let trace = std::fs::read_to_string(solved.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,res_l2_rel,res_Reta_rel\n"));
    assert!(solved.join("solution.bpfd").exists() && solved.join("solution.csv").exists());

    // loose tolerance on a contracting setup finishes almost at once
    let o = bp(&out.join("loose"), &["solve", m, "--format", "npbs", "--rtol", "0.5"]);
    assert!(o.status.success());
    let steps = std::fs::read_to_string(out.join("loose").join("trace.csv")).unwrap().lines().count() - 2;
    assert!(steps <= 5, "{steps}");

    let o = bp(&out.join("dense"), &["solve", m, "--format", "npbs", "--dense", "--rtol", "1e-10"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains(": 1 iterations"), "{}", stdout(&o));

    let o = bp(&out.join("fixed"), &["solve", m, "--format", "npbs", "--gamma", "0.5,0.1", "--max-iters", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn train_writes_map_usable_by_solve() {
    let out = scratch("train");
    let cfg = out.join("t.cfg");
    std::fs::write(&cfg, "[cdr]\nn = 16\n[train]\nepochs = 0\nbatch = 2\nsamples = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = bp(&out, &["--config", cfg, "train", "--family", "cdr", "--loss", "bs-reta"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(out.join("train_cdr_bs_reta.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("step,loss,step_size"));
    assert_eq!(log.lines().count(), 2);
    let map = out.join("map_cdr_bs_reta.bpfd");
    assert!(map.exists());

    assert!(bp(&out, &["--config", cfg, "generate", "--family", "cdr"]).status.success());
    let m = out.join("cdr_000.manifest");
    let o = bp(&out.join("s"), &["solve", m.to_str().unwrap(), "--format", "npbs", "--map", map.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_and_input_errors_exit_nonzero() {
    let out = scratch("errors");
    let o = bp(&out, &["train", "--family", "cdr", "--loss", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bp(&out, &["bench"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
    let o = bp(&out, &["solve", "/nonexistent.manifest"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_three_csvs() {
    let out = scratch("bench");
    let cfg = out.join("sweep.cfg");
    std::fs::write(
        &cfg,
        "[sweep]\nfamily = helmholtz\nsamples = 2\ntrain_samples = 1\nmethods = cbs, npbs_bs_reta\nppw = 12, 8\n\
         max_iters = 200\n[helmholtz]\nn = 24\nsponge_points = 3\n[train]\nepochs = 5\nbatch = 2\n",
    )
    .unwrap();
    let o = bp(&out, &["--config", cfg.to_str().unwrap(), "bench"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
    let training = std::fs::read_to_string(out.join("training.csv")).unwrap();
    assert_eq!(training.lines().count(), 1 + 2);
}
