use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DEMO: &str = r#"
[kernel]
family = "riemann_liouville"
alpha = 0.5

[space]
s = 0.5
nodes = 32

[time]
horizon = 1.0
steps = 64

[data]
f = "indicator"
u0 = "bump"
u0_scale = 3.0

[kernels]
lambdas = [1.0, 0.1]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdiff")).args(args).output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_long_table_and_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "demo.toml", DEMO);
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out), "--export-operator"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("t,x,u"));
    assert_eq!(lines.count(), 65 * 32);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["nodes"], 32);
    assert_eq!(report["kernel"]["family"], "riemann_liouville");
    assert!(report["max_step_residual"].as_f64().unwrap() < 1e-10);
    let operator = std::fs::read_to_string(out.join("operator.csv")).unwrap();
    assert_eq!(operator.lines().count(), 32);
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "demo.toml", DEMO);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", s(out), "--threads", "2"]).status.code(), Some(0));
    }
    for file in ["solution.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn zero_data_gives_all_zero_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "zero.toml", "[kernel]\nfamily = \"exp_weighted\"\nmu_w = 2.0\n[data]\nf = \"zero\"\nu0 = \"zero\"\n[time]\nsteps = 8\n[space]\nnodes = 6\n");
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let table = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    for line in table.lines().skip(1) {
        assert_eq!(line.rsplit(',').next(), Some("0"));
    }
}

#[test]
fn verify_passes_then_fails_on_corrupted_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "demo.toml", DEMO);
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let table = out.join("solution.csv");
    let o = run(&["verify", "--config", s(&cfg), "--out", s(&out), "--solution", s(&table)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("entropy_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["schema_version"], 1);

    // add 5 to u at t = 0.5 and the node just right of the centre
    let text = std::fs::read_to_string(&table).unwrap();
    let row = 1 + 32 * 32 + 16;
    let corrupted: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i != row {
                return line.to_string();
            }
            let mut f: Vec<String> = line.split(',').map(str::to_string).collect();
            let u: f64 = f[2].parse().unwrap();
            f[2] = (u + 5.0).to_string();
            f.join(",")
        })
        .collect();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, corrupted.join("\n")).unwrap();
    let o = run(&["verify", "--config", s(&cfg), "--out", s(&out), "--solution", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("FAIL entropy["), "{err}");
}

#[test]
fn verify_rejects_grid_mismatch_and_empty_suite() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "demo.toml", DEMO);
    let out = dir.path().join("out");
    assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let coarse = write_config(&dir, "coarse.toml", &DEMO.replace("steps = 64", "steps = 32"));
    let o = run(&["verify", "--config", s(&coarse), "--solution", s(&out.join("solution.csv")), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid mismatch"));

    let empty = write_config(&dir, "empty.toml", &format!("{DEMO}\n[verify]\nentropy = false\nweak_form = false\nenergy = false\n"));
    let o = run(&["verify", "--config", s(&empty), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("usage error"));
}

#[test]
fn config_errors_name_the_key() {
    let dir = TempDir::new().unwrap();
    for (text, key) in [
        ("[kernel]\nfamily = \"riemann_liouville\"\nalpha = 2.0\n", "kernel.alpha"),
        ("[kernel]\nfamily = \"riemann_liouville\"\n[space]\nnodes = 0\n", "space.nodes"),
        ("[kernel]\nfamily = \"riemann_liouville\"\n[data]\nu0 = \"missing.csv\"\n", "data.u0"),
        ("[kernel]\nfamily = \"riemann_liouville\"\n[verify]\ntolerance = 1.0\n", "verify.tolerance"),
        ("[kernel]\nfamily = \"riemann_liouville\"\n[data]\nf_scale = -1.0\n", "data.signed"),
    ] {
        let cfg = write_config(&dir, "bad.toml", text);
        let o = run(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains(&format!("`{key}`")), "{key}: {}", stderr(&o));
    }
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
    assert_eq!(run(&["explode"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_data_sources_and_tabulated_kernels() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("u0.csv"), "x,u\n-0.5,0\n0,2\n0.5,0\n").unwrap();
    // RL α = 0.5 sampled on a fine grid; k and l coincide
    let table: String = (0..=400)
        .map(|i| {
            let t = 1e-4 + i as f64 * 0.0025;
            format!("{t},{}\n", 1.0 / (std::f64::consts::PI * t).sqrt())
        })
        .collect();
    std::fs::write(dir.path().join("k.csv"), &table).unwrap();
    let cfg = write_config(
        &dir,
        "tab.toml",
        "[kernel]\nfamily = \"tabulated\"\ntable = \"k.csv\"\npartner_table = \"k.csv\"\n[data]\nu0 = \"u0.csv\"\n[time]\nsteps = 16\n[space]\nnodes = 9\n",
    );
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["verify", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let no_partner = write_config(&dir, "np.toml", "[kernel]\nfamily = \"tabulated\"\ntable = \"k.csv\"\n");
    let o = run(&["simulate", "--config", s(&no_partner), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`kernel.partner_table`"));
}

#[test]
fn kernels_dump_has_fixed_header_and_sane_columns() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "demo.toml", &DEMO.replace("steps = 64", "steps = 256"));
    let out = dir.path().join("out");
    let o = run(&["kernels", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("kernels.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(
        header,
        ["t", "k", "l", "k_conv_l", "k_lambda[1]", "k_lambda[0.1]", "s_lambda[1]", "s_lambda[0.1]"]
    );
    let mut rows = 0;
    for record in reader.records() {
        let r: Vec<f64> = record.unwrap().iter().map(|v| v.parse().unwrap()).collect();
        assert!((r[3] - 1.0).abs() < 1e-3, "t={}: {}", r[0], r[3]);
        assert!(r[4] <= r[1] && r[5] <= r[1]);
        rows += 1;
    }
    assert_eq!(rows, 256);
}

#[test]
fn sweep_writes_one_directory_per_run() {
    let dir = TempDir::new().unwrap();
    let text = DEMO.replace("nodes = 32", "nodes = 12").replace("steps = 64", "steps = 16")
        + "\n[sweep]\nalpha = [0.3, 0.7]\ns = [0.25, 0.75]\n";
    let cfg = write_config(&dir, "sweep.toml", &text);
    let out = dir.path().join("out");
    let o = run(&["sweep", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for a in ["0.3", "0.7"] {
        for sv in ["0.25", "0.75"] {
            let sub = out.join(format!("alpha={a}_s={sv}_steps=16"));
            assert!(sub.join("solution.csv").is_file() && sub.join("entropy_report.json").is_file());
        }
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 4);

    let plain = write_config(&dir, "plain.toml", DEMO);
    assert_eq!(run(&["sweep", "--config", s(&plain), "--out", s(&out)]).status.code(), Some(2));
}
