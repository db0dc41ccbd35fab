use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bartvs::benchmark::{generate_dataset, lookup, MetricsRow, Snr};
use bartvs::io::{load_trace, read_dataset, read_metrics, read_partial_metrics, write_dataset, ResultsDocument};
use tempfile::TempDir;

fn bartvs(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bartvs"))
        .args(args)
        .current_dir(dir)
        .env_remove("BARTVS_JOBS")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Product fixture with two relevant features and `s` copies each.
fn fixture(dir: &TempDir, s: usize) -> PathBuf {
    let g = generate_dataset(&lookup("product").unwrap(), 200, Snr::Ratio(10.0), s, 3).unwrap();
    let path = dir.path().join("data.csv");
    write_dataset(&path, &g.dataset).unwrap();
    path
}

const QUICK: [&str; 6] = ["--trees", "10", "--burnin", "200", "--draws", "200"];

#[test]
fn fit_writes_a_reloadable_deterministic_trace() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.csv"), "y,x1,x2\n1,0.1,5\n2,0.2,4\n3,0.3,3\n4,0.4,2\n5,0.5,1\n").unwrap();
    let mut args = vec!["fit", "small.csv", "--out", "a.bvc", "--seed", "5"];
    args.extend(QUICK);
    let o = bartvs(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    args[3] = "b.bvc";
    assert!(bartvs(&args, dir.path()).status.success());

    let a = std::fs::read(dir.path().join("a.bvc")).unwrap();
    assert_eq!(&a[..4], b"BVC1");
    assert_eq!(a, std::fs::read(dir.path().join("b.bvc")).unwrap());
    let t = load_trace(&dir.path().join("a.bvc")).unwrap();
    assert_eq!((t.n_draws(), t.n_features()), (200, 2));
    assert_eq!(t.seed(), 5);

    let o = bartvs(&["report", "a.bvc"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("index,vip,vc,mpvip\n"));
}

#[test]
fn missing_response_names_available_columns() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), "a,b\n1,2\n").unwrap();
    let o = bartvs(&["fit", "d.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("available columns: a, b"), "{}", stderr(&o));
    std::fs::write(dir.path().join("r.csv"), "y,x1\n1,2\n3\n").unwrap();
    let o = bartvs(&["fit", "r.csv"], dir.path());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn select_writes_document_and_importance_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(&dir, 3);
    let mut args = vec!["select", csv.to_str().unwrap(), "--method", "dart-vc-measure", "--lrep", "2"];
    args.extend(QUICK);
    args.extend(["--truth", "1,2", "--out", "out"]);
    let o = bartvs(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));

    let doc = ResultsDocument::load(&dir.path().join("out/results.json")).unwrap();
    assert_eq!(doc.p, 8);
    assert!(doc.features.iter().all(|f| f.summary.as_ref().unwrap().len() == 4));
    assert_eq!(doc.fit_seeds, vec![0, 1]);
    for s in &doc.selected {
        assert_eq!(doc.features[s.index - 1].name, s.name);
        assert!(doc.features[s.index - 1].selected);
    }
    assert!(doc.metrics.is_some());
    let json = std::fs::read_to_string(dir.path().join("out/results.json")).unwrap();
    assert_eq!(ResultsDocument::from_json(&json).unwrap(), doc);

    let table = std::fs::read_to_string(dir.path().join("out/importance.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "index,name,importance,threshold,selected,z1,z2,z3,z4");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    for (j, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{},", j + 1)));
    }
}

#[test]
fn mi_method_enables_logging_and_empty_selection_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(&dir, 2);
    let mut args = vec!["select", csv.to_str().unwrap(), "--method", "bart-mi-local", "--lrep", "1", "--lperm", "3"];
    args.extend(QUICK);
    args.extend(["--alpha", "0.01", "--out", "mi"]);
    let o = bartvs(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = ResultsDocument::load(&dir.path().join("mi/results.json")).unwrap();
    assert!(doc.config.fit.record_mi);
    assert_eq!(doc.permutation_seeds, vec![10_000, 10_001, 10_002]);

    // y independent of every column: an empty selection still exits 0.
    let noise = "y,x1,x2\n".to_string()
        + &(0..40).map(|i| format!("{},{},{}\n", (i * 7) % 11, i % 5, (i * 3) % 7)).collect::<String>();
    std::fs::write(dir.path().join("noise.csv"), noise).unwrap();
    let mut args = vec!["select", "noise.csv", "--method", "bart-vip-gmax", "--lrep", "1", "--lperm", "2"];
    args.extend(QUICK);
    args.extend(["--alpha", "0.5", "--out", "noise"]);
    let o = bartvs(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2_before_fitting() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["select", "absent.csv", "--method", "bart-vip-gse", "--lperm", "0"],
        vec!["select", "absent.csv", "--method", "bart-mi-gse"],
        vec!["select", "absent.csv", "--method", "dart-vc-measure", "--lrep", "0"],
        vec!["select", "absent.csv", "--method", "unknown"],
        vec!["select", "absent.csv"],
        vec!["nonsense"],
    ] {
        let o = bartvs(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = bartvs(&["select", "absent.csv", "--method", "dart-mpm"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn jobs_environment_variable_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(&dir, 1);
    let o = Command::new(env!("CARGO_BIN_EXE_bartvs"))
        .args(["select", csv.to_str().unwrap(), "--method", "dart-mpm", "--out", "j"])
        .args(QUICK)
        .env("BARTVS_JOBS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_bartvs"))
        .args(["select", csv.to_str().unwrap(), "--method", "dart-mpm", "--out", "j"])
        .args(QUICK)
        .env("BARTVS_JOBS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

const GRID: &str = r#"
[settings]
trees = 10
burn_in = 100
draws = 100
replicates = 2
seed = 4

[[scenario]]
equation = "product"
n = 120
snr = 10
s = 3
methods = ["dart-vc-measure"]

[[scenario]]
expression = "x1 + x2"
ranges = [[0, 1], [0, 1]]
n = 120
snr = [5, "noiseless"]
s = 2
methods = ["dart-mpm"]
"#;

fn strip_runtime(path: &Path) -> Vec<MetricsRow> {
    read_metrics(path)
        .unwrap()
        .into_iter()
        .map(|r| MetricsRow { runtime: 0.0, ..r })
        .collect()
}

#[test]
fn benchmark_counts_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("grid.toml"), GRID).unwrap();
    let o = bartvs(&["benchmark", "grid.toml", "--out", "full"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let full = dir.path().join("full");
    let rows = read_metrics(&full.join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| !r.is_error()));
    let agg = std::fs::read_to_string(full.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 3);

    // Simulate an interrupted run: keep the header, two rows, and a torn
    // third record.
    let partial = std::fs::read_to_string(full.join("metrics.partial.csv")).unwrap();
    let lines: Vec<&str> = partial.lines().collect();
    assert_eq!(lines.len(), 7);
    let resumed = dir.path().join("resumed");
    std::fs::create_dir(&resumed).unwrap();
    let torn = format!("{}\n{}\n{}\n{}", lines[0], lines[1], lines[2], &lines[3][..lines[3].len() / 2]);
    std::fs::write(resumed.join("metrics.partial.csv"), torn).unwrap();
    let kept = read_partial_metrics(&resumed.join("metrics.partial.csv")).unwrap();
    assert_eq!(kept.len(), 2);
    let o = bartvs(&["benchmark", "grid.toml", "--out", "resumed", "--resume"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("(2 already complete)"), "{}", stderr(&o));
    assert_eq!(strip_runtime(&full.join("metrics.csv")), strip_runtime(&resumed.join("metrics.csv")));

    // Carried-over rows keep their recorded runtime exactly.
    let after = read_metrics(&resumed.join("metrics.csv")).unwrap();
    for row in &kept {
        assert!(after.contains(row), "{row:?}");
    }
}

#[test]
fn bad_grid_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g.toml"), "[settings]\ntrees = 5\n\n[[scenario]]\nn = 10\nsnr = 1\nmethods = [\"nope\"]\n").unwrap();
    let o = bartvs(&["benchmark", "g.toml"], dir.path());
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("g.toml: line 7"), "{}", stderr(&o));
}

#[test]
fn written_dataset_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let csv = fixture(&dir, 1);
    let d = read_dataset(&csv, "y").unwrap();
    assert_eq!(d.feature_names(), &["x1", "x2", "x1_irr1", "x2_irr1"]);
    assert_eq!(d.n(), 200);
}
