use std::path::PathBuf;
use std::process::{Command, Output};

fn streamdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamdist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("cli-{}-{name}", std::process::id()))
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

#[test]
fn exit_codes() {
    assert_eq!(streamdist(&["predicate", "xor", "--k", "3"]).status.code(), Some(0));
    // unknown subcommand, bad parameter, incompatible pairing
    assert_eq!(streamdist(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        streamdist(&["predicate", "xor", "-p", "k=three"]).status.code(),
        Some(1)
    );
    assert_eq!(
        streamdist(&["distinguish", "sparse_sat", "--source", "subspace"])
            .status
            .code(),
        Some(1)
    );
    // a failed assertion
    let o = streamdist(&["predicate", "xor", "--k", "3", "-p", "expect_resilience=2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stdout.is_empty(), "the report is still written");
    // a budget refusal
    let o = streamdist(&[
        "reduce", "parity", "-p", "reps=auto", "-p", "max_reps=10", "--trials", "4",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn rows_carry_version_seed_and_params() {
    let o = streamdist(&["--seed", "42", "predicate", "maj", "-p", "k=3"]);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(column(&text, "version")
        .iter()
        .all(|v| v.starts_with(env!("CARGO_PKG_VERSION"))));
    assert!(column(&text, "seed").iter().all(|v| v == "42"));
    assert!(column(&text, "params").iter().all(|v| v == "k=3"));
    assert_eq!(column(&text, "coefficient")[0], "0");
    assert_eq!(column(&text, "coefficient")[1], "0.500000000000");
}

#[test]
fn empty_grid_gives_header_only() {
    let o = streamdist(&[
        "sweep", "subspace_rank", "--source", "subspace", "--axis", "memory", "--grid", "",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("version,seed,command,params,"));
}

#[test]
fn window_sweep_is_nondecreasing() {
    let o = streamdist(&[
        "sweep", "subspace_rank", "--source", "subspace", "-p", "n=24", "-p", "k=4", "--axis", "memory", "--grid",
        "4,8,32", "--trials", "600",
    ]);
    let text = stdout(&o);
    assert!(column(&text, "sanity").iter().all(|v| v == "true"));
    let s: Vec<f64> = column(&text, "success").iter().map(|v| v.parse().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[1] >= w[0]), "{s:?}");
}

#[test]
fn trials_sweep_shrinks_interval() {
    let o = streamdist(&[
        "sweep", "coin", "--source", "subspace", "--axis", "trials", "--grid", "100,400,1600,6400",
    ]);
    let text = stdout(&o);
    assert_eq!(column(&text, "sanity"), vec!["true"; 4]);
}

#[test]
fn config_file_and_flag_override() {
    let cfg = scratch("config.json");
    std::fs::write(&cfg, r#"{"seed": 5, "trials": 200, "params": {"n": 12, "k": 3}}"#).unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = stdout(&streamdist(&[
        "--config", path, "distinguish", "subspace_rank", "--source", "subspace",
    ]));
    assert_eq!(column(&from_file, "seed"), vec!["5"]);
    assert_eq!(column(&from_file, "trials"), vec!["200"]);
    assert_eq!(column(&from_file, "params"), vec!["k=3;n=12"]);
    let flags = [
        "--config", path, "--seed", "6", "-p", "k=2", "distinguish", "subspace_rank", "--source", "subspace",
    ];
    let overridden = stdout(&streamdist(&flags));
    assert_eq!(column(&overridden, "seed"), vec!["6"]);
    assert_eq!(column(&overridden, "k"), vec!["2"]);
    std::fs::write(&cfg, r#"{"seed": "x"}"#).unwrap();
    assert_eq!(
        streamdist(&["--config", path, "predicate", "xor", "--k", "2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn same_config_same_bytes() {
    let out = scratch("run.csv");
    let args = [
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "distinguish",
        "orthogonal_tester",
        "--source",
        "subspace",
        "-p",
        "n=10",
        "-p",
        "k=3",
        "--trials",
        "300",
    ];
    assert!(streamdist(&args).stdout.is_empty());
    let first = std::fs::read(&out).unwrap();
    streamdist(&args);
    assert_eq!(first, std::fs::read(&out).unwrap());
    let other_seed = streamdist(&[
        "--seed", "4", "distinguish", "orthogonal_tester", "--source", "subspace", "-p", "n=10", "-p", "k=3",
        "--trials", "300",
    ]);
    assert_ne!(first, other_seed.stdout);
}

#[test]
fn json_output() {
    let o = streamdist(&["--format", "json", "verify", "minent", "-p", "programs=3", "-p", "n=6"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["command"], "verify minent");
    assert_eq!(rows[0]["pass"], true);
}

#[test]
fn predicate_file_with_parse_error() {
    let good = scratch("p.txt");
    std::fs::write(&good, "2\n0110\n").unwrap();
    let o = streamdist(&["predicate", good.to_str().unwrap(), "-p", "expect_resilience=2"]);
    assert_eq!(o.status.code(), Some(0));
    let bad = scratch("bad.txt");
    std::fs::write(&bad, "2\n011\n").unwrap();
    let o = streamdist(&["predicate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn single_repetition_degrades_recovery() {
    let run = |reps: &str| -> f64 {
        let o = streamdist(&[
            "reduce",
            "parity",
            "-p",
            "n=12",
            "-p",
            "k=6",
            "-p",
            "inner_m=6",
            "-p",
            &format!("reps={reps}"),
            "--trials",
            "60",
        ]);
        let text = stdout(&o);
        let rows = column(&text, "row");
        let rates = column(&text, "rate");
        rates[rows.iter().position(|r| r == "summary").unwrap()]
            .parse()
            .unwrap()
    };
    let (one, many) = (run("1"), run("41"));
    assert!(one < many, "reps=1 gives {one}, reps=41 gives {many}");
}
