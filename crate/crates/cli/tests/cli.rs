use std::path::Path;
use std::process::Command;

use pigeonhole_cli::output::{parse_csv, parse_json, summarize};
use pigeonhole_cli::{CliError, EXIT_STARVED};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pigeonhole"))
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let status = bin()
        .args(args)
        .arg("--out")
        .arg(&path)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
    std::fs::read_to_string(path).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

const SMALL_RUNS: &[&[&str]] = &[
    &["empirical-hist", "--N", "5000", "--s", "2"],
    &[
        "empirical-hist",
        "--N",
        "3000",
        "--alpha",
        "1/3",
        "--remove-squares",
    ],
    &["limit-hist", "--samples", "20000", "--s", "1.5"],
    &["compare", "--N", "1000,4000", "--samples", "20000"],
    &["second-moment", "--N", "1000,10000"],
    &["second-moment", "--N", "1000,10000", "--remove-squares"],
    &[
        "void",
        "--N",
        "2000,8000",
        "--intervals",
        "0,1;2,3",
        "--samples",
        "20000",
    ],
    &["minkowski", "--samples", "20000"],
    &[
        "horocycle",
        "--N",
        "100,1000",
        "--samples",
        "20000",
        "--M-ratio",
        "2",
    ],
];

#[test]
fn hand_histogram_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = run_to(
        dir.path(),
        "h.csv",
        &["empirical-hist", "--N", "5", "--s", "1"],
    );
    let out = parse_csv(&text).unwrap();
    let rows: Vec<(&str, f64)> = out
        .table
        .rows
        .iter()
        .map(|r| (r.label.as_str(), r.values[0]))
        .collect();
    assert_eq!(rows, vec![("0", 0.2), ("1", 0.6), ("2", 0.2)]);
    let empty = parse_csv(&run_to(
        dir.path(),
        "e.csv",
        &["empirical-hist", "--N", "5", "--s", "0"],
    ))
    .unwrap();
    assert_eq!(empty.table.rows.len(), 1);
    assert_eq!(empty.table.rows[0].values, vec![1.0]);
}

#[test]
fn summaries_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in SMALL_RUNS.iter().enumerate() {
        let csv = parse_csv(&run_to(dir.path(), &format!("{i}.csv"), args)).unwrap();
        assert!(!csv.summary.is_empty(), "{args:?}");
        assert_eq!(summarize(&csv.table), csv.summary, "{args:?}");
        let mut json_args = args.to_vec();
        json_args.extend(["--format", "json"]);
        let json = parse_json(&run_to(dir.path(), &format!("{i}.json"), &json_args)).unwrap();
        assert_eq!(summarize(&json.table), json.summary, "{args:?}");
        assert_eq!(json.table, csv.table, "{args:?}");
    }
}

fn without_wall_time(text: &str) -> String {
    text.lines()
        .map(|l| {
            if l.starts_with("# {") {
                let mut meta: serde_json::Value = serde_json::from_str(&l[2..]).unwrap();
                meta.as_object_mut().unwrap().remove("wall_time_s");
                format!("# {meta}")
            } else if l.contains("\"wall_time_s\"") {
                String::new()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in SMALL_RUNS.iter().enumerate() {
        for format in ["csv", "json"] {
            let mut a = args.to_vec();
            a.extend(["--format", format, "--threads", "1"]);
            let first = run_to(dir.path(), &format!("{i}a.{format}"), &a);
            a.pop();
            a.push("3");
            let second = run_to(dir.path(), &format!("{i}b.{format}"), &a);
            assert_eq!(
                without_wall_time(&first),
                without_wall_time(&second),
                "{args:?}"
            );
            // Only the metadata line may differ in the raw bytes.
            let body = |t: &str| {
                t.lines()
                    .filter(|l| !l.contains("wall_time_s"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(body(&first), body(&second));
        }
    }
}

#[test]
fn seed_changes_monte_carlo_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_to(dir.path(), "a.csv", &["limit-hist", "--samples", "5000"]);
    let b = run_to(
        dir.path(),
        "b.csv",
        &["limit-hist", "--samples", "5000", "--seed", "7"],
    );
    assert_ne!(without_wall_time(&a), without_wall_time(&b));
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&["empirical-hist", "--N", "5"]), 0);
    assert_eq!(exit_code(&["empirical-hist", "--alpha", "3/2"]), 2);
    assert_eq!(exit_code(&["empirical-hist", "--N", "10", "--s", "-1"]), 2);
    assert_eq!(
        exit_code(&["void", "--intervals", "0,1;0.5,2", "--N", "10"]),
        2
    );
    assert_eq!(exit_code(&["horocycle", "--section", "cubic"]), 2);
    assert_eq!(
        exit_code(&[
            "horocycle",
            "--N",
            "100",
            "--M-ratio",
            "5",
            "--samples",
            "10"
        ]),
        2
    );
    assert_eq!(exit_code(&["no-such-command"]), 2);
    assert_eq!(
        exit_code(&["empirical-hist", "--N", "10", "--s", "1e30"]),
        3
    );
    assert_eq!(
        exit_code(&["empirical-hist", "--N", "2000000000", "--s", "0"]),
        3
    );
    assert_eq!(
        exit_code(&[
            "empirical-hist",
            "--N",
            "5",
            "--out",
            "/nonexistent-dir/x.csv"
        ]),
        4
    );
    let starved = CliError::Core(pigeonhole::Error::ConditioningStarved { samples: 10_000 });
    assert_eq!(starved.exit_code(), EXIT_STARVED);
}

#[test]
fn json_and_stdout() {
    let out = bin()
        .args(["empirical-hist", "--N", "5", "--format", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let parsed = parse_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(parsed.metadata["command"], "empirical-hist");
    assert_eq!(parsed.metadata["N"], 5);
}
