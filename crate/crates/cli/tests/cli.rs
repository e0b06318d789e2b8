use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wsnmf<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_wsnmf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Default benchmark plus a fitted model in a fresh directory.
struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(method: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let o = wsnmf(["synth", "--out", p(dir.path())]);
        assert!(o.status.success(), "{}", stderr(&o));
        let f = Fixture { dir };
        let o = wsnmf([
            "fit",
            p(&f.train()),
            "--out",
            p(&f.model()),
            "--method",
            method,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn train(&self) -> PathBuf {
        self.path("train.csv")
    }

    fn test(&self) -> PathBuf {
        self.path("test.csv")
    }

    fn model(&self) -> PathBuf {
        self.path("model.json")
    }
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn diagonality(m: &[Vec<f64>]) -> f64 {
    let mut off = 0.0;
    let mut total = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            total += v * v;
            if i != j {
                off += v * v;
            }
        }
    }
    off / total
}

fn printed_value(out: &str, key: &str) -> f64 {
    let line = out
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no '{key}' in {out}"));
    line[key.len()..]
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn synth_writes_train_and_test() {
    let dir = tempfile::tempdir().unwrap();
    let o = wsnmf(["synth", "--out", p(dir.path())]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("seed 2020"));
    for name in ["train.csv", "test.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("id,label,dt,s0,s1,"));
        assert_eq!(lines.count(), 12);
    }
}

#[test]
fn synth_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(wsnmf(["synth", "--seed", "7", "--out", p(d.path())])
            .status
            .success());
    }
    for name in ["train.csv", "test.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    let c = tempfile::tempdir().unwrap();
    assert!(wsnmf(["synth", "--seed", "8", "--out", p(c.path())])
        .status
        .success());
    assert_ne!(
        fs::read(a.path().join("train.csv")).unwrap(),
        fs::read(c.path().join("train.csv")).unwrap()
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        wsnmf(["synth", "--out", p(dir.path()), "--classes", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        wsnmf(["synth", "--out", p(dir.path()), "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        wsnmf(["fit", "x.csv", "--out", "m.json", "--method", "ica"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(wsnmf(["frobnicate"]).status.code(), Some(2));
    assert_eq!(wsnmf(Vec::<&str>::new()).status.code(), Some(2));
}

#[test]
fn synth_into_unwritable_path_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = wsnmf(["synth", "--out", p(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fit_reports_whitening_diagnostics() {
    let f = Fixture::new("zca");
    let o = wsnmf(["fit", p(&f.train()), "--out", p(&f.path("again.json"))]);
    let out = stdout(&o);
    assert!(out.contains("atoms 12"), "{out}");
    assert!(printed_value(&out, "diagonality before") >= 0.05);
    assert!(printed_value(&out, "diagonality after") <= 1e-6);
    assert_eq!(
        fs::read(f.model()).unwrap(),
        fs::read(f.path("again.json")).unwrap()
    );
}

#[test]
fn fit_missing_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = wsnmf([
        "fit",
        p(&dir.path().join("nope.csv")),
        "--out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn fit_zca_cor_on_equal_variance_data() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [
        ("a", "x", [1.0, -1.0, 1.0, -1.0, 0.5, -0.5]),
        ("b", "y", [1.0, 1.0, -1.0, -1.0, 0.5, -0.5]),
        ("c", "z", [1.0, -1.0, -1.0, 1.0, -0.5, 0.5]),
    ];
    let mut text = String::from("id,label,s0,s1,s2,s3,s4,s5\n");
    for (id, label, v) in rows {
        let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        text.push_str(&format!("{id},{label},{}\n", vals.join(",")));
    }
    let train = dir.path().join("eq.csv");
    fs::write(&train, text).unwrap();
    let model = dir.path().join("m.json");
    let o = wsnmf(["fit", p(&train), "--out", p(&model), "--method", "zca-cor"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(json["format_version"], 1);
    assert_eq!(json["whitening_method"], "zca-cor");
}

#[test]
fn identify_recovers_held_out_mine_d() {
    let f = Fixture::new("zca");
    let o = wsnmf(["identify", "--model", p(&f.model()), p(&f.test())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 12);
    let line = out.lines().find(|l| l.starts_with("mine_d_")).unwrap();
    assert_eq!(line.split('\t').nth(1), Some("mine_d"));

    let raw = wsnmf([
        "identify",
        "--model",
        p(&f.model()),
        p(&f.test()),
        "--no-whiten",
    ]);
    assert!(raw.status.success());
    assert_eq!(stdout(&raw).lines().count(), 12);
}

#[test]
fn identify_json_lists_top_three() {
    let f = Fixture::new("zca");
    let o = wsnmf(["identify", "--model", p(&f.model()), p(&f.test()), "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 12);
    for q in arr {
        let top = q["top"].as_array().unwrap();
        assert_eq!(top.len(), 3);
        assert_eq!(top[0]["label"], q["winner"]);
        let scores: Vec<f64> = top.iter().map(|s| s["score"].as_f64().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        let m = q["margin"].as_f64().unwrap();
        assert!((m - (scores[0] - scores[1]) / scores[0]).abs() < 1e-12);
    }
}

#[test]
fn identify_rejects_mismatched_and_empty_queries() {
    let f = Fixture::new("zca");
    let short = f.path("short.csv");
    fs::write(&short, "id,label,s0,s1,s2\nq7,mine_a,1,2,3\n").unwrap();
    let o = wsnmf(["identify", "--model", p(&f.model()), p(&short)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("q7"), "{}", stderr(&o));

    let empty = f.path("empty.csv");
    fs::write(&empty, "").unwrap();
    assert_eq!(
        wsnmf(["identify", "--model", p(&f.model()), p(&empty)])
            .status
            .code(),
        Some(1)
    );
    let header_only = f.path("header.csv");
    fs::write(&header_only, "id,label,s0,s1\n").unwrap();
    assert_eq!(
        wsnmf(["identify", "--model", p(&f.model()), p(&header_only)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn identify_is_deterministic() {
    let f = Fixture::new("pca-cor");
    let (model, test) = (f.model(), f.test());
    let args = ["identify", "--model", p(&model), p(&test), "--json"];
    assert_eq!(wsnmf(args).stdout, wsnmf(args).stdout);
}

#[test]
fn eval_whitened_is_at_least_unwhitened() {
    let f = Fixture::new("zca");
    let (model, test) = (f.model(), f.test());
    let acc = |extra: &[&str], out: &Path| {
        let mut args = vec![
            "eval",
            "--model",
            p(&model),
            p(&test),
            "--out",
            p(out),
            "--json",
        ];
        args.extend_from_slice(extra);
        let o = wsnmf(args);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["accuracy"].as_f64().unwrap()
    };
    let white = acc(&[], &f.path("cw.csv"));
    let raw = acc(&["--no-whiten"], &f.path("cr.csv"));
    assert!(white >= raw, "whitened {white} unwhitened {raw}");

    let text = fs::read_to_string(f.path("cw.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 13);
    assert!(rows[0].starts_with("true\\predicted,mine_a,"));
    assert!(rows[0].ends_with(",indeterminate"));
    let counted: usize = rows[1..]
        .iter()
        .flat_map(|r| r.split(',').skip(1).map(|c| c.parse::<usize>().unwrap()))
        .sum();
    assert_eq!(counted, 12);

    let o = wsnmf([
        "eval",
        "--model",
        p(&f.model()),
        p(&f.test()),
        "--out",
        p(&f.path("c.csv")),
    ]);
    assert!(stdout(&o).starts_with("accuracy "));
}

#[test]
fn eval_unknown_label_exits_one() {
    let f = Fixture::new("zca");
    let text = fs::read_to_string(f.test())
        .unwrap()
        .replacen("mine_a", "mine_z", 2);
    let bad = f.path("bad.csv");
    fs::write(&bad, text).unwrap();
    let o = wsnmf([
        "eval",
        "--model",
        p(&f.model()),
        p(&bad),
        "--out",
        p(&f.path("c.csv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mine_z"));
}

#[test]
fn diagnose_exports_matrices() {
    let f = Fixture::new("zca");
    let out = f.path("diag");
    fs::create_dir(&out).unwrap();
    let o = wsnmf(["diagnose", "--model", p(&f.model()), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let before = read_matrix(&out.join("cov_before.csv"));
    let after = read_matrix(&out.join("cov_after.csv"));
    let cross = read_matrix(&out.join("crosscorr.csv"));
    for m in [&before, &after, &cross] {
        assert_eq!(m.len(), 12);
        assert!(m.iter().all(|r| r.len() == 12));
    }
    assert!(diagonality(&before) >= 0.05);
    assert!(diagonality(&after) <= 1e-6);
    assert!(cross.iter().flatten().all(|v| v.abs() <= 1.0 + 1e-12));
    let first = fs::read_to_string(out.join("cov_after.csv")).unwrap();
    let cell = first.split([',', '\n']).next().unwrap();
    let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{cell}");
}

#[test]
fn diagnose_into_missing_dir_exits_one() {
    let f = Fixture::new("zca");
    let o = wsnmf([
        "diagnose",
        "--model",
        p(&f.model()),
        "--out",
        p(&f.path("missing/deeper")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn corrupt_model_exits_one() {
    let f = Fixture::new("zca");
    fs::write(f.model(), "{\"format_version\": 99}").unwrap();
    let o = wsnmf(["identify", "--model", p(&f.model()), p(&f.test())]);
    assert_eq!(o.status.code(), Some(1));
}
