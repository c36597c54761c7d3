//! End-to-end checks of the `nsgate` binary: output formats, determinism,
//! round-tripping, exit codes, and config-file handling.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsgate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

#[test]
fn sweep_csv_anchors() {
    let out = run(&["sweep", "--scheme", "vlpc", "--eta-min", "1", "--eta-max", "1", "--steps", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scheme,eta,gate_fidelity,success_at_one,success_at_min"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "vlpc");
    assert!((row[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
    assert!((row[3].parse::<f64>().unwrap() - 0.25).abs() < 1e-12);

    let out = run(&["sweep", "--scheme", "dda", "--eta-min", "1", "--eta-max", "1", "--steps", "1"]);
    let text = stdout(&out);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap() - 0.7654).abs() < 1e-3);
}

#[test]
fn sweep_is_deterministic_and_round_trips() {
    let args = [
        "sweep", "--scheme", "dda", "--eta-min", "0.5", "--eta-max", "1", "--steps", "3",
        "--seed", "11",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "byte-identical reruns");

    // write -> parse -> write fixpoint
    let text = stdout(&first);
    let mut rewritten = String::from("scheme,eta,gate_fidelity,success_at_one,success_at_min\n");
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let reformatted: Vec<String> = fields[1..]
            .iter()
            .map(|v| format!("{:.11e}", v.parse::<f64>().unwrap()))
            .collect();
        rewritten.push_str(&format!("{},{}\n", fields[0], reformatted.join(",")));
    }
    assert_eq!(text, rewritten);
}

#[test]
fn sweep_json_contains_minimizer_params() {
    let out = run(&[
        "sweep", "--scheme", "vlpc", "--eta-min", "0.9", "--eta-max", "1", "--steps", "2",
        "--format", "json",
    ]);
    assert!(out.status.success());
    let records: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 2);
    for record in records {
        assert_eq!(record["scheme"], "vlpc");
        assert_eq!(record["minimizer_params"].as_array().unwrap().len(), 4);
        let fidelity = record["gate_fidelity"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&fidelity));
    }
    assert!((records[1]["eta"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let zero_eta = run(&["sweep", "--scheme", "dda", "--eta-min", "0", "--eta-max", "1", "--steps", "2"]);
    assert_eq!(zero_eta.status.code(), Some(2));
    let message = String::from_utf8(zero_eta.stderr).unwrap();
    assert!(message.contains("eta") && message.contains("undefined"));

    let unknown = run(&["sweep", "--scheme", "spad", "--eta-min", "0.5", "--eta-max", "1", "--steps", "2"]);
    assert_eq!(unknown.status.code(), Some(2));

    let bad_flag = run(&["sweep", "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let bad_reflectivity = run(&["amplitudes", "--r1", "1.5"]);
    assert_eq!(bad_reflectivity.status.code(), Some(2));
}

#[test]
fn povm_tables() {
    let out = run(&["povm", "--model", "dda", "--eta", "1", "--cutoff", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|line| line.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows[0], vec![1.0, 0.0, 0.0]);
    assert_eq!(rows[1], vec![0.0, 1.0, 0.5]);
    assert_eq!(rows[2], vec![0.0, 0.0, 0.5]);

    let out = run(&["povm", "--model", "vlpc", "--eta", "0.5", "--cutoff", "2"]);
    let text = stdout(&out);
    let k1: Vec<f64> = text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(k1
        .iter()
        .zip(&[0.0, 0.5, 0.5])
        .all(|(a, b)| (a - b).abs() < 1e-12));

    // cascade(2) table is identical to the DDA table
    let cascade = run(&["povm", "--model", "cascade:2", "--eta", "0.73", "--cutoff", "3"]);
    let dda = run(&["povm", "--model", "dda", "--eta", "0.73", "--cutoff", "3"]);
    let strip_labels = |text: String| -> Vec<String> {
        text.lines()
            .skip(1)
            .map(|l| l.split_once(',').unwrap().1.to_string())
            .collect()
    };
    assert_eq!(strip_labels(stdout(&cascade)), strip_labels(stdout(&dda)));

    let bad_eta = run(&["povm", "--model", "dda", "--eta", "1.5", "--cutoff", "2"]);
    assert_eq!(bad_eta.status.code(), Some(2));
}

#[test]
fn amplitude_tables() {
    let out = run(&["amplitudes"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value_of = |ijk: &str| -> f64 {
        text.lines()
            .find(|l| l.starts_with(ijk))
            .unwrap_or_else(|| panic!("entry {ijk} missing"))
            .split(',')
            .nth(3)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value_of("0,1,0") - 0.5).abs() < 1e-10);
    assert!((value_of("0,1,1") - 0.5).abs() < 1e-10);
    assert!((value_of("0,1,2") + 0.5).abs() < 1e-10);
    assert!(value_of("1,1,0").abs() < 1e-10);

    for extra in [&[][..], &["--r1", "0.3", "--r2", "0.3", "--r3", "0.3"][..]] {
        let mut args = vec!["amplitudes", "--source", "both"];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert!(out.status.success());
        let text = stdout(&out);
        let discrepancy: f64 = text
            .lines()
            .find(|l| l.starts_with("max_discrepancy"))
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert!(discrepancy <= 1e-10);
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join("nsgate-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("sweep.conf");
    std::fs::write(
        &config_path,
        "scheme = vlpc\neta-min = 0.9\neta-max = 1\nsteps = 2\nformat = csv\n",
    )
    .unwrap();
    let config = config_path.to_str().unwrap();

    let from_config = run(&["sweep", "--config", config]);
    assert!(from_config.status.success());
    assert_eq!(stdout(&from_config).lines().count(), 3);

    // flag overrides the file
    let overridden = run(&["sweep", "--config", config, "--steps", "1"]);
    assert!(overridden.status.success());
    assert_eq!(stdout(&overridden).lines().count(), 2);

    let out_path = dir.join("sweep.csv");
    let to_file = run(&["sweep", "--config", config, "--out", out_path.to_str().unwrap()]);
    assert!(to_file.status.success());
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(written, stdout(&from_config));
}

#[test]
fn seeded_spot_check_passes() {
    let out = run(&[
        "sweep", "--scheme", "vlpc", "--eta-min", "1", "--eta-max", "1", "--steps", "1",
        "--seed", "42",
    ]);
    assert!(out.status.success());
}
