use std::path::PathBuf;
use std::process::{Command, Output};

fn afw2d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afw2d")).args(args).env_remove("AFW2D_THREADS").output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("afw2d-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let o = afw2d(&[]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8_lossy(&o.stderr).to_string() + &stdout(&o);
    assert!(text.contains("Usage"), "{text}");
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(afw2d(&["converge", "--bogus"]).status.code(), Some(2));
    assert_eq!(afw2d(&["converge", "--domain", "disc"]).status.code(), Some(2));
    assert_eq!(afw2d(&["solve", "--order", "x"]).status.code(), Some(2));
    assert_eq!(afw2d(&["adapt", "--fraction", "1.5"]).status.code(), Some(2));
    assert_eq!(afw2d(&["verify", "--tol", "nope=1"]).status.code(), Some(2));
    assert_eq!(afw2d(&["corner", "--file", "/nonexistent/corner.toml"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_afw2d")).args(["corner"]).env("AFW2D_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_affine_commuting_residuals() {
    let out = scratch("verify");
    let o = afw2d(&["verify", "--domain", "lshape_affine", "--orders", "0..3", "--out", out.to_str().unwrap(), "--tables"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let v: f64 = r[3].parse().unwrap();
        assert!(v < 1e-9, "{r:?}");
    }
    for f in ["verify.csv", "verify_stability.csv", "dofs.csv", "quadrature.csv", "basis.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(out.join("verify.csv")).unwrap(), csv);
}

#[test]
fn circular_convergence_rows_are_monotone() {
    let out = scratch("converge");
    let o = afw2d(&["converge", "--domain", "lshape_circular", "--order", "1", "--levels", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let pct: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(6).unwrap().parse().unwrap()).collect();
    assert_eq!(pct.len(), 4);
    assert!(pct.windows(2).all(|w| w[1] < w[0]), "{pct:?}");
    assert!(std::fs::read_to_string(out.join("converge.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let out = scratch(&format!("det{k}"));
            let o = afw2d(&["adapt", "--domain", "lshape_affine", "--order", "1", "--steps", "4", "--seed", "7", "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0));
            let mut bytes = std::fs::read(out.join("adapt.csv")).unwrap();
            bytes.extend(std::fs::read(out.join("adapt_mesh.txt")).unwrap());
            bytes
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    let threaded: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|n| {
            let out = scratch(&format!("thr{n}"));
            let o = Command::new(env!("CARGO_BIN_EXE_afw2d"))
                .args(["solve", "--domain", "unit_square", "--order", "2", "--level", "1", "--out", out.to_str().unwrap()])
                .env("AFW2D_THREADS", n)
                .output()
                .unwrap();
            assert_eq!(o.status.code(), Some(0));
            std::fs::read(out.join("solution.csv")).unwrap()
        })
        .collect();
    assert_eq!(threaded[0], threaded[1]);
}

#[test]
fn config_file_and_flags() {
    let out = scratch("config");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("run.toml");
    std::fs::write(&cfg, "[run]\ndomain = \"unit_square\"\norder = \"0\"\n[refine]\nlevels = 5\n").unwrap();
    let o = afw2d(&["converge", "--config", cfg.to_str().unwrap(), "--levels", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn mesh_and_corner_subcommands() {
    let out = scratch("mesh");
    let o = afw2d(&["mesh", "--domain", "lshape_circular", "--level", "1", "--mark", "0,3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o2 = afw2d(&["mesh", "--input", out.join("mesh.txt").to_str().unwrap(), "--out", out.join("again").to_str().unwrap()]);
    assert_eq!(o2.status.code(), Some(0));
    assert_eq!(std::fs::read(out.join("mesh.txt")).unwrap(), std::fs::read(out.join("again/mesh.txt")).unwrap());
    assert_eq!(afw2d(&["mesh", "--mark", "9999"]).status.code(), Some(2));
    let c = afw2d(&["corner"]);
    assert_eq!(c.status.code(), Some(0));
    assert!(stdout(&c).contains("displacement exponent 0.6040443"));
}

#[test]
fn plot_overlays_tables() {
    let out = scratch("plot");
    let dir = out.to_str().unwrap();
    for (order, sub) in [("0", "p0"), ("1", "p1")] {
        let d = format!("{dir}/{sub}");
        let o = afw2d(&["converge", "--domain", "unit_square", "--order", order, "--levels", "2", "--out", &d]);
        assert_eq!(o.status.code(), Some(0));
    }
    let svg = format!("{dir}/both.svg");
    let o = afw2d(&["plot", &format!("p=0={dir}/p0/converge.csv"), &format!("p=1={dir}/p1/converge.csv"), "--output", &svg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 4);
    assert_eq!(afw2d(&["plot", "nolabel"]).status.code(), Some(2));
    assert_eq!(afw2d(&["plot", &format!("x={dir}/missing.csv")]).status.code(), Some(2));
}
