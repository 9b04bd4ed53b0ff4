use std::fs;
use std::path::Path;
use std::process::Command;

use gsam::harness::{
    expand_grid, load_config, read_summary, read_trace_csv, resume, run, sweep, write_outputs, write_sweep, Checkpoint,
    ExperimentConfig, GridAxis, RunState, RunStatus, TRACE_HEADER,
};
use gsam::optimizer::BaseOptimizerState;
use gsam::{GsamError, Variant};

const MLP: &str = r#"
name = "tiny_mlp"
seeds = [1, 2]
total_steps = 60
log_every = 7
batch_size = 10

[objective]
kind = "mlp"
layer_sizes = [2, 6, 3]
data = { seed = 4, n_per_class = 10, dim = 2, classes = 3, spread = 1.0 }
test_n_per_class = 10

[optimizer]
variant = "gsam"
alpha = 0.3
rho_max = 0.1
rho_min = 0.02

[base]
kind = "sgd_momentum"

[lr]
shape = "linear_decay"
lr_max = 0.1
lr_min = 0.01
warmup_steps = 5

[eigen]
policy = "at_end"
max_iters = 50
tol = 1e-6
"#;

const QUAD: &str = r#"
name = "tiny_quad"
seeds = [0]
total_steps = 40
log_every = 10

[objective]
kind = "quadratic"
diagonal = [3.0, 1.0, 0.5]

[optimizer]
variant = "sam"
rho_max = 0.05

[base]
kind = "sgd_momentum"
momentum = 0.0

[lr]
shape = "constant"
lr_max = 0.1
"#;

fn mlp() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(MLP).unwrap()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_write_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = mlp();
    for name in ["a", "b"] {
        write_outputs(&run(&cfg, 1).unwrap(), &tmp.path().join(name)).unwrap();
    }
    let a = read_dir_bytes(&tmp.path().join("a"));
    assert_eq!(a, read_dir_bytes(&tmp.path().join("b")));
    assert!(a.iter().any(|(n, _)| n == "trace.csv"));
    assert_ne!(run(&cfg, 1).unwrap().final_params, run(&cfg, 2).unwrap().final_params);
}

#[test]
fn logged_steps_and_summary() {
    let r = run(&mlp(), 1).unwrap();
    let ts: Vec<u64> = r.traces.iter().map(|t| t.t).collect();
    assert_eq!(ts, vec![1, 7, 14, 21, 28, 35, 42, 49, 56, 60]);
    let s = &r.summary;
    assert_eq!(s.status, RunStatus::Completed);
    assert_eq!(s.steps_completed, 60);
    assert_eq!(s.final_h, Some(r.traces.last().unwrap().h));
    assert!(s.train_accuracy.unwrap() > 0.5);
    assert!(s.test_accuracy.is_some() && s.dataset_gap.is_some() && s.sharpness.is_some());
    assert!(r.trajectory.is_none());
}

#[test]
fn resume_matches_uninterrupted_run() {
    let cfg = mlp();
    let full = run(&cfg, 2).unwrap();
    let spec = cfg.objective.build().unwrap().spec;
    let start = RunState {
        step: 0,
        params: cfg.init.initial_point(&spec, 2).unwrap(),
        optimizer: BaseOptimizerState::new(cfg.base, spec.dim()),
        last_trace: None,
        status: RunStatus::Completed,
    };
    let early = resume(&cfg, 2, start, 23).unwrap();
    assert_eq!(early.summary.steps_completed, 23);

    let tmp = tempfile::tempdir().unwrap();
    write_outputs(&early, tmp.path()).unwrap();
    let ck = Checkpoint::load(&tmp.path().join("checkpoint.json")).unwrap();
    let rest = resume(&ck.config, ck.seed, ck.state, 1000).unwrap();
    assert_eq!(rest.summary.steps_completed, 60);
    assert_eq!(rest.final_params, full.final_params);
    assert_eq!(rest.summary.final_h, full.summary.final_h);
    assert_eq!(rest.summary.sharpness, full.summary.sharpness);
}

#[test]
fn checkpoint_rejects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(QUAD).unwrap();
    let out = tmp.path().join("run");
    write_outputs(&run(&cfg, 0).unwrap(), &out).unwrap();
    let path = out.join("checkpoint.json");
    assert!(Checkpoint::load(&path).is_ok());

    let text = fs::read_to_string(&path).unwrap();
    let bumped = text.replacen("\"version\": 1", "\"version\": 9", 1);
    fs::write(&path, bumped).unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(GsamError::Parse { .. })));

    let edited = text.replacen("\"rho_max\": 0.05", "\"rho_max\": 0.06", 1);
    assert_ne!(edited, text);
    fs::write(&path, edited).unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(GsamError::Parse { .. })));
}

#[test]
fn trace_and_summary_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(&ExperimentConfig::from_toml_str(QUAD).unwrap(), 0).unwrap();
    write_outputs(&r, tmp.path()).unwrap();
    let text = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(TRACE_HEADER));
    let back = read_trace_csv(&tmp.path().join("trace.csv")).unwrap();
    assert_eq!(back.len(), r.traces.len());
    for (a, b) in back.iter().zip(&r.traces) {
        assert_eq!((a.t, a.f, a.h, a.cos_theta, a.rho), (b.t, b.f, b.h, b.cos_theta, b.rho));
    }
    let mut s = read_summary(&tmp.path().join("summary.json")).unwrap();
    s.wall_clock_seconds = r.summary.wall_clock_seconds;
    assert_eq!(s, r.summary);

    fs::write(tmp.path().join("bad.csv"), "t,f\n1,2\n").unwrap();
    assert!(matches!(read_trace_csv(&tmp.path().join("bad.csv")), Err(GsamError::Parse { .. })));
}

#[test]
fn landscape_runs_record_trajectory() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
name = "l"
seeds = [0]
total_steps = 30
[objective]
kind = "landscape2d"
[init]
point = [1.5, 0.05]
[optimizer]
variant = "gsam"
alpha = 0.5
rho_max = 0.05
[base]
kind = "sgd_momentum"
[lr]
shape = "constant"
lr_max = 0.01
"#,
    )
    .unwrap();
    let r = run(&cfg, 0).unwrap();
    let traj = r.trajectory.as_ref().unwrap();
    assert_eq!(traj.len(), 31);
    assert_eq!(traj[0], (0, [1.5, 0.05]));
    let tmp = tempfile::tempdir().unwrap();
    let paths = write_outputs(&r, tmp.path()).unwrap();
    assert!(paths.iter().any(|p| p.ends_with("trajectory.csv")));
}

#[test]
fn divergence_is_recorded_not_raised() {
    let mut cfg = ExperimentConfig::from_toml_str(QUAD).unwrap();
    cfg.lr.lr_max = 1e150;
    cfg.lr.lr_min = 1e150;
    let r = run(&cfg, 0).unwrap();
    assert!(matches!(r.summary.status, RunStatus::Failed { .. }));
    assert!(r.summary.steps_completed < cfg.total_steps);
    assert!(r.summary.final_loss.is_none());
}

#[test]
fn config_errors() {
    assert!(matches!(
        ExperimentConfig::from_toml_str(&MLP.replace("alpha = 0.3", "alpha = -0.3")),
        Err(GsamError::Config(_))
    ));
    assert!(ExperimentConfig::from_toml_str(&MLP.replace("alpha = 0.3", "alpah = 0.3")).is_err());
    assert!(ExperimentConfig::from_toml_str(&QUAD.replace("diagonal = [3.0, 1.0, 0.5]", "")).is_err());
    let epochs = MLP.replace("total_steps = 60", "epochs = 4");
    assert_eq!(ExperimentConfig::from_toml_str(&epochs).unwrap().total_steps, 12);
    assert!(matches!(load_config(Path::new("/nonexistent/x.toml")), Err(GsamError::Io { .. })));

    let cfg = mlp();
    let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.fingerprint(), cfg.fingerprint());
}

#[test]
fn doubled_vanilla_preset() {
    let cfg = ExperimentConfig::from_toml_str(&format!("preset = \"vanilla2x\"\n{MLP}")).unwrap();
    assert_eq!(cfg.optimizer.variant, Variant::Vanilla);
    assert_eq!(cfg.optimizer.rho_max, 0.0);
    assert_eq!(cfg.total_steps, 120);
}

#[test]
fn sweep_is_independent_of_parallelism() {
    let base: toml::Table = MLP.replace("total_steps = 60", "total_steps = 20").parse().unwrap();
    let axes = [
        GridAxis::parse("optimizer.variant=sam,gsam").unwrap(),
        GridAxis::parse("optimizer.alpha=0,0.4").unwrap(),
    ];
    let points = expand_grid(&base, &axes).unwrap();
    assert_eq!(points.len(), 4);
    assert_eq!(points[1].label(), "optimizer.variant=sam;optimizer.alpha=0.4");
    assert!(expand_grid(&base, &[]).is_err());

    let tmp = tempfile::tempdir().unwrap();
    for (k, par) in [1, 3].into_iter().enumerate() {
        write_sweep(&sweep(&points, par).unwrap(), &tmp.path().join(k.to_string())).unwrap();
    }
    let a = read_dir_bytes(&tmp.path().join("0"));
    assert_eq!(a, read_dir_bytes(&tmp.path().join("1")));
    assert_eq!(a.iter().filter(|(n, _)| n.ends_with("summary.json")).count(), 8);
}

fn gsam_bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gsam"));
    c.env_remove("GSAM_OUTPUT_ROOT");
    c
}

#[test]
fn cli_commands_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("q.toml");
    fs::write(&cfg_path, QUAD).unwrap();

    let out = tmp.path().join("run");
    let st = gsam_bin().args(["run", "--config"]).arg(&cfg_path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    assert!(out.join("summary.json").exists());

    let st = gsam_bin().args(["eigen", "--checkpoint"]).arg(out.join("checkpoint.json")).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&st.stdout).unwrap();
    assert!((report["sigma_power"].as_f64().unwrap() - 3.0).abs() < 1e-6);

    let cmp = tmp.path().join("cmp");
    let st = gsam_bin().args(["compare", "--out"]).arg(&cmp).arg(&out).arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(fs::read_to_string(cmp.join("compare.csv")).unwrap().lines().count(), 3);

    let sw = tmp.path().join("sw");
    let st = gsam_bin()
        .args(["sweep", "--config"])
        .arg(&cfg_path)
        .args(["--grid", "optimizer.rho_max=0.01,0.05", "--parallel", "2", "--out"])
        .arg(&sw)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(fs::read_to_string(sw.join("summary.csv")).unwrap().lines().count(), 3);

    // Relative output directories land under the output root.
    let st = gsam_bin()
        .env("GSAM_OUTPUT_ROOT", tmp.path())
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--out", "rel"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(tmp.path().join("rel/trace.csv").exists());

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, QUAD.replace("rho_max = 0.05", "rho_max = -1.0")).unwrap();
    let code = |args: &[&std::ffi::OsStr]| gsam_bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["run".as_ref(), "--config".as_ref(), bad.as_os_str(), "--out".as_ref(), out.as_os_str()]), Some(1));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&["run".as_ref(), "--config".as_ref(), missing.as_os_str(), "--out".as_ref(), out.as_os_str()]), Some(3));
    let diverge = tmp.path().join("div.toml");
    fs::write(&diverge, QUAD.replace("lr_max = 0.1", "lr_max = 1e150")).unwrap();
    assert_eq!(code(&["run".as_ref(), "--config".as_ref(), diverge.as_os_str(), "--out".as_ref(), out.as_os_str()]), Some(2));
    assert_eq!(code(&["frobnicate".as_ref()]), Some(1));
}
