//! End-to-end runs of the `wsmf` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use wsmf::io::RAW_HEADER_LEN;
use wsmf::report::{AnalysisReport, HminRow, SplitRow};

fn wsmf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsmf")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = wsmf(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two fGn channels of 2^13 samples.
fn synth_fgn(dir: &Path) -> std::path::PathBuf {
    let file = dir.join("fgn.csv");
    ok(&[
        "synth",
        "--model",
        "fgn",
        "--alpha",
        "-0.25",
        "-n",
        "8192",
        "--seed",
        "3",
        "--realizations",
        "2",
        "-o",
        path(&file),
    ]);
    file
}

#[test]
fn synth_then_analyze_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_fgn(dir.path());
    let header = fs::read_to_string(&input).unwrap();
    assert!(header.starts_with("seed3,seed4\n"), "{}", &header[..20]);

    let json = dir.path().join("report.json");
    let tsv = dir.path().join("tsv");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            r#"
[input]
path = "{}"
channels = [1]

[multiscale]
formalism = {{ kind = "leaders" }}

[scaling]
j1 = 5
j2 = 9
q_min = -4.0
q_max = 4.0
q_count = 17

[sparsity]
enabled = true

[output]
json = "{}"
tsv_dir = "{}"
"#,
            path(&input),
            path(&json),
            path(&tsv)
        ),
    )
    .unwrap();
    ok(&["analyze", "--config", path(&config)]);

    let report = AnalysisReport::from_json(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.channels.len(), 1);
    let ch = &report.channels[0];
    assert_eq!(ch.label, "seed4");
    assert_eq!(ch.formalism, "leaders");
    assert_eq!(ch.scales, (5, 9));
    assert_eq!(ch.scaling.len(), 17);
    assert!(ch.sparsity.is_some());
    let table = fs::read_to_string(tsv.join("seed4.tsv")).unwrap();
    assert!(table.starts_with("H\tD\n"));
    assert_eq!(table.lines().count(), ch.spectrum.h.len() + 1);
}

#[test]
fn flags_override_config_and_stdout_is_the_default_sink() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_fgn(dir.path());
    let config = dir.path().join("run.toml");
    fs::write(&config, "[multiscale]\nfractional_order = 0.5\n").unwrap();
    let out = ok(&[
        "analyze",
        "--config",
        path(&config),
        "--input",
        path(&input),
        "--fractional-order",
        "1",
        "--formalism",
        "p-leaders",
        "--p",
        "2",
    ]);
    let report = AnalysisReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.channels.len(), 2);
    for ch in &report.channels {
        assert_eq!(ch.fractional_order, 1.0);
        assert_eq!(ch.spectrum.offset, -1.0);
        assert_eq!(ch.formalism, "2-leaders");
    }
}

#[test]
fn hmin_and_split_print_one_row_per_channel() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_fgn(dir.path());
    let out = ok(&["hmin", "--input", path(&input)]);
    let rows: Vec<HminRow> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.hmin < 0.0, "{}: {}", r.label, r.hmin);
        assert!(!r.admissibility.exists_positive);
    }
    let out = ok(&["split", "--input", path(&input), "--sparsity-q", "1", "--budget", "2"]);
    let rows: Vec<SplitRow> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!((r.sparsity.q, r.sparsity.budget), (1.0, 2.0));
    }
}

#[test]
fn spectrum_of_a_linear_table_is_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("zeta.tsv");
    // H = 0.3 ± 0.3 with |q| up to 8 gives 1 - 2.4, below the -0.5 floor
    let rows: String = (-8..=8).map(|q| format!("{q}\t{}\n", 0.3 * q as f64)).collect();
    fs::write(&table, format!("q\tzeta\n{rows}")).unwrap();
    let out = ok(&[
        "spectrum",
        "-i",
        path(&table),
        "--h-min",
        "0",
        "--h-max",
        "0.6",
        "--h-count",
        "3",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "H\tD");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        let (h, d) = line.split_once('\t').unwrap();
        let h: f64 = h.parse().unwrap();
        if (h - 0.3).abs() < 1e-12 {
            assert_eq!(d.parse::<f64>().unwrap(), 1.0);
        } else {
            assert_eq!(d, "-inf", "H = {h}");
        }
    }
}

#[test]
fn synth_reads_a_model_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("synth.toml");
    fs::write(
        &config,
        "n = 4096\nseed = 9\n\n[model]\ntype = \"rws\"\nuniform_bound = 0.3\natoms = [{ alpha = 0.3, eta = 0.4 }, { alpha = 0.8, eta = 1.0 }]\n",
    )
    .unwrap();
    let a = dir.path().join("a.raw");
    let b = dir.path().join("b.raw");
    ok(&["synth", "--config", path(&config), "-o", path(&a)]);
    ok(&["synth", "--config", path(&config), "-o", path(&b)]);
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes.len(), RAW_HEADER_LEN + 4096 * 8);
    assert_eq!(bytes, fs::read(&b).unwrap());
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_fgn(dir.path());
    for args in [
        vec!["analyze", "--input", path(&input), "--j1", "4", "--j2", "20"],
        vec![
            "analyze",
            "--input",
            path(&input),
            "--formalism",
            "p-leaders",
            "--p",
            "-1",
        ],
        vec![
            "synth",
            "--model",
            "mrw",
            "--hurst",
            "0.6",
            "--lambda",
            "0.9",
            "-o",
            path(&input),
        ],
        vec![
            "synth",
            "--model",
            "fbm",
            "--hurst",
            "0.5",
            "-n",
            "1000",
            "-o",
            path(&input),
        ],
    ] {
        let out = wsmf(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
    }
    let config = dir.path().join("bad.toml");
    fs::write(&config, "[scaling]\nj_one = 3\n").unwrap();
    let out = wsmf(&["analyze", "--config", path(&config), "--input", path(&input)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    for sub in ["analyze", "hmin", "split"] {
        let out = wsmf(&[sub, "--input", path(&missing)]);
        assert_eq!(out.status.code(), Some(4), "{sub}");
    }
    let out = wsmf(&["spectrum", "-i", path(&missing)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn reports_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_fgn(dir.path());
    let out = ok(&["analyze", "--input", path(&input), "--channels", "0"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["provenance"]["tool"], "wsmf");
    assert_eq!(v["provenance"]["input"], path(&input));
    assert_eq!(v["provenance"]["config"]["input"]["channels"], serde_json::json!([0]));
    assert_eq!(v["channels"].as_array().unwrap().len(), 1);
}
