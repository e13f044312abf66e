mod common;

use std::path::PathBuf;
use std::process::{Command, Output};

use common::{ground_kernel_oracle, resonant_kernel_oracle, PI};
use layercp::cli::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_layercp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("layercp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn assert_tables_close(a: &ScanTable, b: &ScanTable, tol: f64) {
    assert_eq!(a.spec, b.spec);
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.flag, y.flag);
        for (u, v) in [(x.value_par, y.value_par), (x.value_perp, y.value_perp), (x.value_total, y.value_total)] {
            assert!((u - v).abs() <= tol * v.abs(), "{u} {v}");
        }
    }
}

#[test]
fn ground_scan_matches_golden_file() {
    let o = run(&["ground", "--range", "0.5:2:4", "--sweep", "Z", "--L", "0.3"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    let want = golden("ground_z.csv");
    let header = |s: &str| s.lines().take_while(|l| !l.starts_with(|c: char| c.is_ascii_digit())).map(String::from).collect::<Vec<_>>();
    assert_eq!(header(&text), header(&want));
    assert_tables_close(&parse_csv(&text).unwrap(), &parse_csv(&want).unwrap(), 1e-12);
}

#[test]
fn golden_files_agree_with_brute_force() {
    // |E| = 1, so a = Z and b = L
    let g = parse_csv(&golden("ground_z.csv")).unwrap();
    let row = &g.rows[1];
    let (op, oz) = ground_kernel_oracle(2.0, 1.5, row.sweep_value, 0.3, (4096, 4096));
    let pre = 1.0 / (8.0 * PI * PI);
    assert!((row.value_par - pre * op).abs() < 1e-6 * row.value_par.abs());
    assert!((row.value_perp - pre * oz).abs() < 1e-6 * row.value_perp.abs());

    let r = parse_csv(&golden("resonant_z.csv")).unwrap();
    let row = &r.rows[0];
    let (kp, kz) = resonant_kernel_oracle(3.0, 1.2, row.sweep_value, 1.0, 1_000_000);
    let pre = 1.0 / (8.0 * PI);
    assert!((row.value_par - pre * kp).abs() < 1e-6 * row.value_par.abs());
    assert!((row.value_perp - pre * kz).abs() < 1e-6 * row.value_perp.abs());
}

#[test]
fn resonant_scan_matches_golden_file() {
    let o = run(&["excited", "--resonant-only", "--range", "1:8:3", "--n-l", "3", "--n-s", "1.2", "--L", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_tables_close(&parse_csv(&stdout(&o)).unwrap(), &parse_csv(&golden("resonant_z.csv")).unwrap(), 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["ground", "--range", "1:0:x"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(run(&["ground", "--range", "0:1:3"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(run(&["ground", "--range", "1:2:2", "--n-l", "0.5"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(EXIT_INVALID));
    assert_eq!(run(&["--help"]).status.code(), Some(EXIT_OK));
    let all_failed = run(&["ground", "--E", "1e308", "--range", "1e10:2e10:2"]);
    assert_eq!(all_failed.status.code(), Some(EXIT_ALL_FAILED));
    assert!(stdout(&all_failed).contains(",error"));
    let o = run(&["greens", "--range", "1:2:2", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    let o = run(&["greens", "--range", "1:2:2", "--config", "/nonexistent-dir/cfg.txt"]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
}

#[test]
fn csv_and_json_round_trip() {
    let csv = stdout(&run(&["excited", "--range", "0.5:3:4:log", "--normalize", "times-Z3"]));
    let table = parse_csv(&csv).unwrap();
    let json = to_json(&table);
    let back = parse_json(&json).unwrap();
    assert_eq!(back.rows, table.rows);
    assert_eq!(to_csv(&back), csv);
    let direct = stdout(&run(&["excited", "--range", "0.5:3:4:log", "--normalize", "times-Z3", "--format", "json"]));
    assert_eq!(direct, json);
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["ground", "--sweep", "L", "--range", "0:2:9", "--Z", "0.7"];
    let one = stdout(&run(&[&args[..], &["--threads", "1"]].concat()));
    let four = stdout(&run(&[&args[..], &["--threads", "4"]].concat()));
    assert_eq!(one, four);
    assert_eq!(one, stdout(&run(&args)));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let cfg = tmp("scan.cfg");
    std::fs::write(&cfg, "# comment\nn_l=3\nn-s=1.2\nL=0.4\nrange=1:2:2\nformat=json\n").unwrap();
    let path = cfg.to_str().unwrap();
    let from_file = parse_json(&stdout(&run(&["greens", "--config", path]))).unwrap();
    assert_eq!((from_file.spec.params.n_l, from_file.spec.params.n_s, from_file.spec.params.l), (3.0, 1.2, 0.4));
    let overridden = parse_json(&stdout(&run(&["greens", "--config", path, "--n-l", "2.5"]))).unwrap();
    assert_eq!(overridden.spec.params.n_l, 2.5);
    // the echoed header lines reproduce the run
    let csv = stdout(&run(&["greens", "--config", path, "--format", "csv"]));
    let echo = tmp("echo.cfg");
    let header: String = csv.lines().filter(|l| l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    std::fs::write(&echo, header).unwrap();
    let again = stdout(&run(&["greens", "--config", echo.to_str().unwrap()]));
    assert_eq!(again, csv);
}

#[test]
fn out_file_receives_the_table() {
    let out = tmp("modes.csv");
    let o = run(&["modes", "--range", "1:30:4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(o.stdout.is_empty());
    let t = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows.windows(2).all(|w| w[1].value_total >= w[0].value_total));
    assert!(t.rows[3].value_total > 0.0);
}

#[test]
fn resonance_map_echoes_thicknesses() {
    let o = run(&["resonance-map", "--n-l", "6.283185307179586", "--n-s", "1", "--Z", "20", "--range", "0.25:1.25:5", "--kappa-max", "2"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("# l_res=")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("# l_antires=")));
    let t = parse_csv(&text).unwrap();
    // anti-resonant thickness 0.5 against resonant 0.75
    assert!(t.rows[1].value_par.abs() * 10.0 < t.rows[2].value_par.abs());
}

#[test]
fn completeness_quantity_reports_small_residuals() {
    let o = run(&["completeness", "--range", "0.3:0.6:2", "--rho", "0.2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let t = parse_json(&stdout(&o)).unwrap();
    assert!(t.rows.iter().all(|r| r.value_total < 1e-3 && r.flag == Flag::Ok));
}
