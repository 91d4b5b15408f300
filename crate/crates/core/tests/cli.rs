use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nhphase");

const MENDED: &str = r#"
scenario = "dyson41"

[functions]
alpha_r = "1"
mu_r = "0"
tau_i = "2"

[constants]
omega = 0.3
c1 = 2.0
c2 = 1.0

[grid]
t1 = 1.0
steps = 200
"#;

fn nhphase(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_csv_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mended.toml", MENDED);
    let report = dir.path().join("report.txt");
    let out = nhphase(&["run", &cfg, "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let mut rdr = csv::Reader::from_path(dir.path().join("mended.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "t");
    let im = header.iter().position(|h| h == "im_e_plus").unwrap();
    let delta = header.iter().position(|h| h == "delta").unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 201);
    for r in &rows {
        assert!(r[im].parse::<f64>().unwrap().abs() <= 1e-10);
        assert!(r[delta].parse::<f64>().unwrap() < 0.0);
    }

    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("scenario dyson41\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["scenario"], "dyson41");
    let checks = json["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "reality"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mended.toml", MENDED);
    assert_eq!(nhphase(&["verify", &cfg]).status.code(), Some(0));
    let strict = nhphase(&["verify", &cfg, "--tol", "ptrel_i=1e-18", "--tol", "c_tilde_commutator=1e-18"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stdout).contains("FAIL"));
    assert_eq!(nhphase(&["verify", &cfg, "--tol", "bogus=1"]).status.code(), Some(2));
    assert_eq!(nhphase(&["verify", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(nhphase(&["transmogrify"]).status.code(), Some(2));
    assert_eq!(nhphase(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &MENDED.replace(r#"mu_r = "0""#, r#"mu_r = "0 +""#));
    let out = nhphase(&["verify", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:6"), "{err}");
    assert!(err.contains("functions.mu_r"), "{err}");
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "mended.toml", MENDED);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert_eq!(nhphase(&["run", &cfg, "--csv", p.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn regimes_over_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "static.toml",
        r#"
scenario = "static"
[functions]
alpha_r = "1"
mu_i = "0.5"
tau_i = "t"
[grid]
t1 = 2
steps = 20
[regimes]
x = { name = "alpha_r", min = 0.5, max = 1.5, points = 5 }
y = { name = "tau_i", min = 0.0, max = 2.0, points = 4 }
fixed = { mu_i = 0.3 }
"#,
    );
    let csv_path = dir.path().join("map.csv");
    let out = nhphase(&["regimes", &cfg, "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["alpha_r", "tau_i", "delta", "regime"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    for r in &rows {
        let (ar, ti): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        // μ_r = 0 on a static path: Δ = α_r²(α_r² − μ_i² − τ_i²)
        let want = ar * ar * (ar * ar - 0.09 - ti * ti);
        let got: f64 = r[2].parse().unwrap();
        assert!((got - want).abs() <= 1e-12);
        let regime = if want > 0.0 { "symmetric" } else { "broken" };
        assert_eq!(&r[3], regime);
    }
}

#[test]
fn shipped_configs_verify() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = nhphase(&["verify", path.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stdout));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
