use std::path::Path;
use std::process::{Command, Output};

fn dampwave(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dampwave")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const SIMULATE: &str = r#"
kind = "simulate"
seed = 5
t_end = 20.0
[grid]
dim = 1
points = 256
[damping]
family = "constant"
a = 0.1
[solver]
dt = 0.002
trace_stride = 50
[initial]
kind = "random"
min_mode = 1
max_mode = 12
"#;

#[test]
fn simulate_writes_a_dissipating_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sim.toml", SIMULATE);
    let out = dampwave(&["simulate", "--config", "sim.toml", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = dampwave::EnergyTrace::read_csv(std::fs::File::open(dir.path().join("run/trace.csv")).unwrap()).unwrap();
    assert!(trace.energy.windows(2).all(|p| p[1] <= p[0]));
    assert_eq!(*trace.times.last().unwrap(), 20.0);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["config"].as_str().unwrap().contains("constant"));
    assert!(dir.path().join("run/plot.py").exists());

    // same seed, identical bytes; another seed, different data
    let again = dampwave(&["simulate", "--config", "sim.toml", "--out", "run2"], dir.path());
    assert!(again.status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("trace.csv")).unwrap();
    assert_eq!(read("run"), read("run2"));
    assert!(dampwave(&["simulate", "--config", "sim.toml", "--out", "run3", "--seed", "6"], dir.path()).status.success());
    assert_ne!(read("run"), read("run3"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "typo.toml", "t_end = 1.0\n[solver]\ndt = 0.001\nstride = 3\n");
    let out = dampwave(&["simulate", "--config", "typo.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stride"));
    write(dir.path(), "neg.toml", "[damping]\nfamily = \"constant\"\na = -2.0\n");
    assert_eq!(dampwave(&["simulate", "--config", "neg.toml"], dir.path()).status.code(), Some(1));
    write(dir.path(), "kind.toml", "kind = \"beam\"\n");
    assert_eq!(dampwave(&["simulate", "--config", "kind.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(dampwave(&["reproduce", "no-such-thing"], dir.path()).status.code(), Some(1));
}

#[test]
fn tgcc_reports_a_witness_when_the_bump_misses_a_geodesic() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "tgcc.toml",
        r#"
[grid]
dim = 2
points = 32
[damping]
family = "space_bump"
w0 = 1.0
center = [3.14159, 3.14159]
radius = 1.5
[sampling]
dim = 2
n_points = 8
n_directions = 4
[tgcc]
t0 = 4.0
"#,
    );
    let out = dampwave(&["tgcc", "--config", "tgcc.toml", "--out", "t"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("not satisfied") && text.contains("witness"), "{text}");
}

#[test]
fn sweep_writes_summary_with_slope() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "sweep.toml",
        r#"
t_end = 1.0
[grid]
dim = 1
points = 64
[damping]
family = "constant"
a = 0.2
[beam]
x0 = [3.0, 0.0]
k = 16.0
[sweep]
parameter = "k"
values = [16.0, 32.0, 64.0, 128.0]
"#,
    );
    let out = dampwave(&["sweep", "--config", "sweep.toml", "--out", "s", "--threads", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("s/summary.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["k", "measured", "slope", "status"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    let slope: f64 = rows[0][2].parse().unwrap();
    assert!(slope < -0.4, "{slope}");
}

#[test]
fn failing_sweep_points_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.toml", "[sweep]\nparameter = \"delta\"\nvalues = [0.01, -1.0, 0.1]\n");
    let out = dampwave(&["sweep", "--config", "d.toml", "--out", "d"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("d/summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(2).unwrap().contains("positive"), "{text}");
}

#[test]
fn fit_reads_a_trace_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sim.toml", SIMULATE);
    assert!(dampwave(&["simulate", "--config", "sim.toml", "--out", "run"], dir.path()).status.success());
    write(dir.path(), "fit.toml", "[fit]\ntrace = \"run/trace.csv\"\nmodels = [\"power\", \"stretched\"]\nwindow = [2.0, 20.0]\n");
    let out = dampwave(&["fit", "--config", "fit.toml", "--out", "f"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("f/fits.csv")).unwrap();
    assert!(text.starts_with("model,prefactor,rate,exponent"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn reproduce_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let list = dampwave(&["list-experiments"], dir.path());
    let text = String::from_utf8_lossy(&list.stdout);
    assert!(text.contains("poly-beta-05") && text.contains("shrinking-on"));
    let out = dampwave(&["reproduce", "poly-beta-05", "--out", "r"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    for f in ["trace.csv", "fit.csv", "checks.json", "manifest.json"] {
        assert!(dir.path().join("r/poly-beta-05").join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS criterion 8"));
}
