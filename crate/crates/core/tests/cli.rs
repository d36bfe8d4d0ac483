mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use fvns::config::{Config, MeshSource};
use fvns::io;
use fvns::Error;

fn fvns(args: &[&str], dir: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fvns"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn config_round_trips_and_hashes() {
    let text = "mesh.generate = 16x16\nfluid.re = 50\ntime.k = 0.02\ntime.T = 0.2 # short\nsolver.pressure.max_iter = 300\noutput.dir = a\n";
    let c = Config::parse(text).unwrap();
    assert_eq!(c.mesh, MeshSource::Generate { nx: 16, ny: 16 });
    assert_eq!(c.run.solvers.pressure.max_iter, Some(300));
    assert_eq!(c.study.re, 50.0);
    let back = Config::parse(&c.to_text()).unwrap();
    assert_eq!(back, c);
    let mut moved = c.clone();
    moved.output_dir = "elsewhere".into();
    assert_eq!(moved.hash(), c.hash());
    let mut other = c.clone();
    other.run.re = 51.0;
    assert_ne!(other.hash(), c.hash());
}

#[test]
fn config_errors_name_line_and_key() {
    let e = Config::parse("fluid.re = 10\nfluid.viscosity = 1\n").unwrap_err();
    assert!(matches!(&e, Error::Config { line: 2, key, .. } if key == "fluid.viscosity"), "{e}");
    let e = Config::parse("mesh.generate = 8x8\nmesh.file = m.txt\n").unwrap_err();
    assert!(matches!(e, Error::Config { line: 2, .. }));
    let e = Config::parse("time.k = 0.03\ntime.T = 0.1\n").unwrap_err();
    assert!(matches!(&e, Error::Config { key, .. } if key == "time.T"));
    let e = Config::parse("time.k = -1\n").unwrap_err();
    assert!(matches!(e, Error::Config { line: 1, .. }));
    assert!("generate:8x".parse::<MeshSource>().is_err());
    assert_eq!("file:a/b.txt".parse::<MeshSource>().unwrap(), MeshSource::File("a/b.txt".into()));
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, stderr) = fvns(
        &["run", "--mesh", "generate:6x6", "--dt", "0.02", "--tend", "0.2", "--out", "o", "--no-timestamp"],
        dir.path(),
    );
    assert_eq!(code, 0, "{stdout}{stderr}");
    let o = dir.path().join("o");
    let diag = fs::read_to_string(o.join("diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    assert!(lines.next().unwrap().starts_with("# config="));
    assert!(lines.next().unwrap().starts_with("step,time,u_l2"));
    assert_eq!(lines.count(), 10);

    let cfg = Config::parse(&fs::read_to_string(o.join("config.txt")).unwrap()).unwrap();
    assert_eq!(cfg.run.k, 0.02);
    assert!(diag.starts_with(&format!("# config={}", cfg.hash())));

    let (space, rows) = io::read_field_csv(&fs::read_to_string(o.join("final_velocity.csv")).unwrap()).unwrap();
    let mesh = cfg.mesh.load().unwrap();
    assert_eq!((space.as_str(), rows.len()), ("P0V", mesh.n_cells()));
    let (space, rows) = io::read_field_csv(&fs::read_to_string(o.join("final_pressure.csv")).unwrap()).unwrap();
    assert_eq!((space.as_str(), rows.len()), ("P1NC", mesh.n_edges()));

    let snaps: Vec<_> = fs::read_dir(o.join("snapshots")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(snaps.len(), 2);
    let vtk = fs::read_to_string(o.join("snapshots/snapshot_00010.vtk")).unwrap();
    assert!(vtk.contains(&format!("POINTS {} double", mesh.vertices().len())));
    assert!(vtk.contains(&format!("CELL_TYPES {}", mesh.n_cells())));
    assert!(!vtk.contains("written"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(fvns(&["mesh-info", "--mesh", "generate:8x8"], p).0, 0);
    fs::write(p.join("obtuse.txt"), "3 1\n0 0\n1 0\n0.5 0.1\n0 1 2\n").unwrap();
    let (code, out, _) = fvns(&["mesh-info", "--mesh", "file:obtuse.txt"], p);
    assert_eq!(code, 1, "{out}");
    assert_eq!(fvns(&["run", "--mesh", "file:obtuse.txt", "--out", "x"], p).0, 1);
    fs::write(p.join("square.txt"), "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n").unwrap();
    let (code, out, _) = fvns(&["mesh-info", "--mesh", "file:square.txt"], p);
    assert_eq!(code, 1);
    assert!(out.contains("admissible: no") && out.contains("min d_sigma = 0e0"), "{out}");
    assert_eq!(fvns(&["run", "--dt", "0.03", "--tend", "0.1"], p).0, 2);
    assert_eq!(fvns(&["run", "--mesh", "file:missing.txt"], p).0, 2);
    fs::write(p.join("bad.cfg"), "fluid.re = 10\nbogus = 1\n").unwrap();
    let (code, _, err) = fvns(&["run", "--config", "bad.cfg"], p);
    assert_eq!(code, 2);
    assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
    fs::write(
        p.join("starved.cfg"),
        "time.k = 0.01\ntime.T = 0.05\nsolver.momentum.max_iter = 1\nsolver.momentum.rtol = 1e-14\nsolver.momentum.atol = 1e-300\n",
    )
    .unwrap();
    let (code, _, err) = fvns(&["run", "--config", "starved.cfg", "--out", "s"], p);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn verify_and_converge_commands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let (code, out, err) = fvns(&["verify", "--mesh", "generate:8x8", "--seed", "7"], p);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 9, "{out}");
    assert!(!out.contains("FAIL"));

    fs::write(p.join("study.cfg"), "study.levels = 2\nstudy.T = 0.2\n").unwrap();
    let (code, out, err) = fvns(&["converge", "--config", "study.cfg", "--out", "c"], p);
    assert_eq!(code, 0, "{out}{err}");
    let (h, e) = io::read_study_csv(&fs::read_to_string(p.join("c/study.csv")).unwrap()).unwrap();
    assert_eq!(h.len(), 2);
    assert!(e[1] < e[0] && h[1] < h[0]);
}
