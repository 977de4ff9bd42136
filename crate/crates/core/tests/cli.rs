//! End-to-end checks of the `chorus` binary: flags, config and sweep files,
//! trace export, and the graph dump.

use chorus_core::engine::SessionTrace;
use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn chorus() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chorus"))
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("chorus_cli_{}_{name}", std::process::id()))
}

const FAST_FLAGS: &[&str] = &[
    "--num-paths",
    "3",
    "--suffix-len",
    "2",
    "--max-seq-len",
    "24",
    "--vocab-size",
    "64",
    "--order",
    "1",
    "--base-concentration",
    "0.05",
    "--eos-prob",
    "0",
    "--rng-seed",
    "5",
];

#[test]
fn run_prints_summary_and_answer() {
    let out = chorus().arg("run").args(FAST_FLAGS).output().unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("paths=3"), "summary missing: {stdout}");
    assert!(stdout.contains("mean_accept_len="));
    assert!(stdout.contains("answer "));
}

#[test]
fn drafted_and_vanilla_traces_agree() {
    let drafted = temp_path("drafted.jsonl");
    let vanilla = temp_path("vanilla.jsonl");
    for (path, extra) in [(&drafted, None), (&vanilla, Some("--vanilla"))] {
        let mut cmd = chorus();
        cmd.arg("run").args(FAST_FLAGS).arg("--trace").arg(path);
        if let Some(flag) = extra {
            cmd.arg(flag);
        }
        let out = cmd.output().unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let read = |p: &PathBuf| {
        SessionTrace::read_jsonl(std::io::BufReader::new(fs::File::open(p).unwrap())).unwrap()
    };
    let a = read(&drafted);
    let b = read(&vanilla);
    assert!(a.meta.drafting && !b.meta.drafting);
    for p in 0..a.paths.len() {
        assert_eq!(
            a.path_tokens(p),
            b.path_tokens(p),
            "lossless equivalence via the CLI"
        );
    }
    fs::remove_file(&drafted).ok();
    fs::remove_file(&vanilla).ok();
}

#[test]
fn dump_graph_emits_dump_lines() {
    let out = chorus()
        .arg("run")
        .args([
            "--num-paths",
            "3",
            "--suffix-len",
            "2",
            "--max-seq-len",
            "48",
            "--vocab-size",
            "64",
            "--order",
            "1",
            "--base-concentration",
            "0.05",
            "--eos-prob",
            "0",
            "--rng-seed",
            "5",
            "--dump-graph",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("graph alpha="),
        "no dump produced:\n{stdout}"
    );
    assert!(stdout.contains("layer 0:"));
}

#[test]
fn sweep_file_to_csv_and_json() {
    let spec = temp_path("sweep.conf");
    fs::write(
        &spec,
        "num_paths = 3\nsuffix_len = 2\nmax_seq_len = 24\nrng_seed = 11\n\
         model.vocab_size = 64\nmodel.order = 1\nmodel.base_concentration = 0.05\n\
         model.eos_prob = 0\naxis = draft_len\nvalues = 3, 2\ntrials = 2\n",
    )
    .unwrap();
    let csv_a = temp_path("sweep_a.csv");
    let csv_b = temp_path("sweep_b.csv");
    let json = temp_path("sweep.json");
    for csv in [&csv_a, &csv_b] {
        let out = chorus()
            .arg("sweep")
            .arg("--spec")
            .arg(&spec)
            .arg("--csv")
            .arg(csv)
            .arg("--json")
            .arg(&json)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    let text = fs::read_to_string(&csv_a).unwrap();
    assert!(text.starts_with(chorus_core::bench::CSV_HEADER));
    assert_eq!(text.lines().count(), 3, "two axis values -> two rows");

    // accept-length statistics are seeded: reruns agree on everything but
    // the wall-clock column
    let strip_timing = |text: &str| -> Vec<String> {
        text.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                if f.len() == 7 {
                    f[5] = "-";
                }
                f.join(",")
            })
            .collect()
    };
    assert_eq!(
        strip_timing(&text),
        strip_timing(&fs::read_to_string(&csv_b).unwrap())
    );

    let parsed = chorus_core::bench::parse_json(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed.rows.len(), 2);
    for p in [&spec, &csv_a, &csv_b, &json] {
        fs::remove_file(p).ok();
    }
}

#[test]
fn ablate_emits_six_cells() {
    let csv = temp_path("ablate.csv");
    let out = chorus()
        .arg("ablate")
        .args(FAST_FLAGS)
        .args(["--trials", "1", "--csv"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 7, "six grid cells plus the header");
    assert!(text.contains("dag+fuzzy") && text.contains("list+exact"));
    fs::remove_file(&csv).ok();
}

#[test]
fn config_file_plus_flag_precedence() {
    let conf = temp_path("run.conf");
    fs::write(
        &conf,
        "num_paths = 6\nmax_seq_len = 24\nsuffix_len = 2\n\
         model.vocab_size = 64\nmodel.order = 1\nmodel.eos_prob = 0\n",
    )
    .unwrap();
    // the flag overrides the file
    let out = chorus()
        .arg("run")
        .arg("--config")
        .arg(&conf)
        .args(["--num-paths", "4"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("paths=4"));
    fs::remove_file(&conf).ok();
}

#[test]
fn invalid_config_is_reported() {
    let out = chorus()
        .arg("run")
        .args(["--num-paths", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("num_paths"),
        "error should name the field: {stderr}"
    );
}
