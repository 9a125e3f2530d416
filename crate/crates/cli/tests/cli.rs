use std::path::Path;
use std::process::{Command, Output};

fn rvcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvcv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "exp.toml",
        "experiment = \"exponential\"\nseed = 9\nreplicates = 2\niterations = [100, 200]\nk = [1, 5]\ndegrees = [1, 2]\nburn_in = 50\n",
    );
    let out = dir.path().join("out");
    let res = rvcv(&["run", "--config", &config, "--cores", "2", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let table = std::fs::read_to_string(out.join("table.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2 * 2);
    assert!(lines[0].starts_with("experiment,i,k,degree,"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 8);
    assert_eq!(summary["workers"], 2);
    assert!(summary["fingerprint"].as_str().unwrap().len() == 16);
    assert!(summary["oracle"]["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn run_is_reproducible_across_core_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "exp.toml",
        "experiment = \"exponential\"\nseed = 4\nreplicates = 2\niterations = [150]\nk = [3]\ndegrees = [2]\nburn_in = 20\n",
    );
    let fingerprint = |cores: &str| {
        let out = dir.path().join(format!("out{cores}"));
        let res = rvcv(&["run", "--config", &config, "--cores", cores, "--out", out.to_str().unwrap()]);
        assert!(res.status.success());
        let s: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        s["fingerprint"].as_str().unwrap().to_string()
    };
    assert_eq!(fingerprint("1"), fingerprint("3"));
}

#[test]
fn gen_data_writes_each_format() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["ising", "ergm", "sir"] {
        let out = dir.path().join(format!("{kind}.txt"));
        let res = rvcv(&["gen-data", "--experiment", kind, "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{kind}: {}", String::from_utf8_lossy(&res.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(!text.trim().is_empty(), "{kind} output is empty");
    }
    let again = dir.path().join("again.txt");
    rvcv(&["gen-data", "--experiment", "ising", "--seed", "3", "--out", again.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(dir.path().join("ising.txt")).unwrap(),
        std::fs::read(again).unwrap()
    );
}

#[test]
fn oracle_prints_grid_posterior() {
    let dir = tempfile::tempdir().unwrap();
    let lattice = write(dir.path(), "l.txt", "1 1 -1\n1 1 1\n-1 1 1\n");
    let res = rvcv(&[
        "oracle",
        "--experiment",
        "ising",
        "--theta-grid=-4:4:801",
        "--data",
        &lattice,
        "--prior-sd",
        "1",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let post: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let mean = post["mean"].as_f64().unwrap();
    assert!(mean > 0.0 && mean < 1.0, "mean {mean}");
    assert_eq!(post["truncated"], false);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    let res = rvcv(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error [config]"));

    let res = rvcv(&[
        "oracle",
        "--experiment",
        "ising",
        "--theta-grid=-1:1:21",
        "--data",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with("error [io]"));

    let bad = write(dir.path(), "bad.toml", "experiment = \"exponential\"\nseed = 1\niterations = [2]\nk = [1]\n");
    let res = rvcv(&["run", "--config", &bad]);
    assert_eq!(res.status.code(), Some(3));

    let unknown = write(dir.path(), "unknown.toml", "experiment = \"exponential\"\nseed = 1\niterations = [10]\nk = [1]\ncolour = 3\n");
    let res = rvcv(&["run", "--config", &unknown]);
    assert_eq!(res.status.code(), Some(3));

    let res = rvcv(&["oracle", "--experiment", "ising", "--theta-grid", "1:0:5"]);
    assert_eq!(res.status.code(), Some(2));
}
