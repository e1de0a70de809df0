use std::process::Command;

fn mmtrain() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmtrain"))
}

fn stdout_of(args: &[&str]) -> (i32, String, String) {
    let out = mmtrain().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn fig3_defaults() {
    let (code, csv, _) = stdout_of(&["fig3"]);
    assert_eq!(code, 0);
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "K_G,p_out,rho_fq,rho_ag_fq,rho_cs,rho_ag_cs");
    assert_eq!(lines.len(), 1 + 200);
    let row16 = lines.iter().find(|l| l.starts_with("16,0,")).unwrap();
    let rho: f64 = row16.split(',').nth(5).unwrap().parse().unwrap();
    assert!((rho - 289.380_88).abs() < 1e-4);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let expected = if f[1] == "0" { "50" } else { "35" };
        assert_eq!(f[4], expected, "{line}");
    }
}

#[test]
fn config_file_overrides_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small grid\ngroup_max = 3\noutage = 0.3\n").unwrap();
    let out = dir.path().join("fig3.csv");
    let status = mmtrain()
        .args(["fig3", "--config"])
        .arg(&cfg)
        .args(["--seed", "7", "--set", "group_max=2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# seed: 7\n"));
    assert!(!text.contains('\r'));
    let lines = data_lines(&text);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,0.3,7,"));
}

#[test]
fn unknown_key_is_rejected() {
    let (code, csv, err) = stdout_of(&["fig3", "--set", "antennas=4"]);
    assert_eq!(code, 2);
    assert!(csv.is_empty());
    assert!(err.contains("unknown key `antennas`"), "{err}");
    let (code, _, err) = stdout_of(&["netsim", "--config", "/nonexistent/cfg"]);
    assert_eq!(code, 2);
    assert!(err.contains("/nonexistent/cfg"));
}

#[test]
fn codebook_verify_prints_matrix() {
    let (code, csv, err) = stdout_of(&["codebook-verify", "--set", "ones=3", "--set", "users=4"]);
    assert_eq!(code, 0);
    assert_eq!(err, "4 4 3 1\n1110\n1101\n1011\n0111\n");
    let lines = data_lines(&csv);
    assert_eq!(lines[1], "3,1,4,1,0,4,0,6,0,4,6,1,0,true");

    let (code, csv, _) = stdout_of(&["codebook-verify"]);
    assert_eq!(code, 0);
    assert!(data_lines(&csv)[1].starts_with("20,1,21,1,0,21,0,210,0,"));

    let (code, csv, _) = stdout_of(&["codebook-verify", "--set", "users=0"]);
    assert_eq!(code, 0);
    assert_eq!(data_lines(&csv)[1], "20,1,0,1,0,0,0,0,0,0,0,1,0,true");

    let (code, _, err) = stdout_of(&["codebook-verify", "--set", "users=22"]);
    assert_eq!(code, 2);
    assert!(err.contains("capacity"), "{err}");
}

#[test]
fn codebook_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("book.txt");
    let set = format!("codebook_out={}", path.display());
    let (code, _, _) = stdout_of(&[
        "codebook-verify",
        "--set",
        "zeros=2",
        "--set",
        "users=50",
        "--set",
        &set,
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let book = mmtrain_core::pilots::PilotCodebook::from_text(&text).unwrap();
    assert_eq!(
        book,
        mmtrain_core::pilots::PilotCodebook::build(50, 20, 2).unwrap()
    );
}

#[test]
fn detect_sweep_rows() {
    let (code, csv, _) = stdout_of(&["detect-sweep", "--set", "trials=40000", "--set", "gp=0,2,10"]);
    assert_eq!(code, 0);
    let lines = data_lines(&csv);
    assert_eq!(lines[0], "M_BS,gP,threshold,Pe_mc,Pe_stderr");
    let rows: Vec<Vec<f64>> = lines[1..]
        .iter()
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    for r in rows.iter().filter(|r| r[1] == 0.0) {
        assert!((r[3] - 0.5).abs() <= 3.0 * r[4], "{r:?}");
    }
    let gp2: Vec<&Vec<f64>> = rows.iter().filter(|r| r[1] == 2.0).collect();
    for w in gp2.windows(2) {
        assert!(w[1][3] <= w[0][3] + 2.0 * (w[0][4] + w[1][4]), "{w:?}");
    }
    let strong = rows.iter().find(|r| r[0] == 128.0 && r[1] == 10.0).unwrap();
    assert!(strong[3] < 1e-3);
}

#[test]
fn recover_bench_rows() {
    let (code, csv, _) = stdout_of(&["recover-bench", "--set", "trials=20", "--set", "snr_db=inf,20"]);
    assert_eq!(code, 0);
    let lines = data_lines(&csv);
    assert_eq!(
        lines[0],
        "snr_db,method,nmse_db_mean,support_rate,pilot_tones_used,solver_failures"
    );
    assert_eq!(lines.len(), 1 + 8);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        let tones = if f[1] == "fde_ls" { "100" } else { "20" };
        assert_eq!(f[4], tones);
        assert_eq!(f[5], "0");
    }
    let methods: Vec<&str> = lines[1..5].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(methods, ["dantzig", "dantzig+debias", "omp", "fde_ls"]);
}

#[test]
fn netsim_rows() {
    let (code, csv, _) = stdout_of(&[
        "netsim",
        "--set",
        "trials=2000",
        "--set",
        "cells=16",
        "--set",
        "coverage=1",
    ]);
    assert_eq!(code, 0);
    let lines = data_lines(&csv);
    assert_eq!(
        lines[0],
        "N,K_G,alpha,p_analytic,p_mc,p_stderr,expected_singletons,optimal_K_G"
    );
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[3].starts_with("16,16,1,0.62018"));
    assert!(lines[3].ends_with(",16"));
}

#[test]
fn same_seed_same_bytes_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = mmtrain()
            .args([
                "netsim",
                "--set",
                "trials=3000",
                "--seed",
                "42",
                "--threads",
                threads,
                "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("3", "b.csv"));
    assert_eq!(a, run("1", "c.csv"));
}
