//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

mod common;

use std::fs;
use std::process::{Command, ExitCode};

use common::{jittered, structured};
use fvns::config::MeshSource;
use fvns::fields::{h_inner_scalar, P0Scalar};
use fvns::mesh::{kite, Mesh};
use fvns::operators::assemble_laplacian_p0;
use fvns::scheme::{self, Discretization, RunConfig, StabilityRecord};
use fvns::verification::{
    builtin_mms, consistency_order_test, convection_constant, convergence_study, div_stability_constant,
    identity_suite, smooth_div_free, IdentityOptions, NeumannField, StudyConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { name, passed, detail }
}

fn imported_mesh(dir: &std::path::Path) -> Mesh {
    let path = dir.join("irregular.txt");
    fs::write(&path, jittered(8, 0.3, 2024).to_text()).unwrap();
    let m = MeshSource::File(path).load().unwrap();
    assert!(m.validate(0.01).admissible);
    m
}

fn spread(c: &[f64]) -> f64 {
    let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = c.iter().cloned().fold(0.0, f64::max);
    (hi - lo) / lo
}

fn identities(meshes: &[(&str, &Mesh)], property: &'static str) -> Outcome {
    let opts = IdentityOptions { trials: 50, seed: 1, constants: false, ..IdentityOptions::default() };
    let mut worst = 0.0f64;
    let mut ok = true;
    for (_, m) in meshes {
        let r = identity_suite(m, &opts).unwrap();
        let e = r.entry(property).unwrap();
        ok &= e.passed && e.trials == 50;
        worst = worst.max(e.worst);
    }
    let names: Vec<&str> = meshes.iter().map(|(n, _)| *n).collect();
    (property, ok, format!("worst relative defect {worst:.2e} over 50 trials on {}", names.join(", "))).into()
}

impl From<(&'static str, bool, String)> for Outcome {
    fn from((name, passed, detail): (&'static str, bool, String)) -> Self {
        outcome(name, passed, detail)
    }
}

fn kite_norm() -> Outcome {
    let m = kite();
    let v = [1.0, 0.0];
    let got = h_inner_scalar(&v, &v, &m);
    // circumcenter (0.5, 14/45), radius R; boundary edge of length l sits at sqrt(R² − l²/4)
    let r2 = 0.25 + (14.0f64 / 45.0).powi(2);
    let l = 1.06f64.sqrt();
    let tau_side = l / (r2 - l * l / 4.0).sqrt();
    let expected = 45.0 / 28.0 + 2.0 * tau_side;
    let lap = fvns::operators::apply_laplacian_p0(&v, &m);
    let pairing = -fvns::fields::L2Space::inner(&P0Scalar(lap), &P0Scalar(v.to_vec()), &m).unwrap();
    let ok = (got - expected).abs() <= 1e-10 && (pairing - expected).abs() <= 1e-10 && (got - 8.8071).abs() < 5e-5;
    outcome("kite norm closed form", ok, format!("|v|_h^2 = {got:.10} expected {expected:.10}"))
}

fn matrix_symmetry(meshes: &[(&str, &Mesh)]) -> Outcome {
    let mut worst = 0.0f64;
    for (_, m) in meshes {
        let a = assemble_laplacian_p0(m);
        worst = worst.max(a.asymmetry() / a.max_abs());
    }
    outcome("symmetry", worst <= 1e-14, format!("max |A - A^T| / max |A| = {worst:.2e}"))
}

fn constants() -> Outcome {
    let meshes: Vec<Mesh> = [8, 16, 32].iter().map(|&n| structured(n)).collect();
    let div: Vec<f64> = meshes.iter().map(|m| div_stability_constant(m, 1).unwrap()).collect();
    let conv: Vec<f64> = meshes
        .iter()
        .map(|m| convection_constant(&smooth_div_free(m), m, 1).unwrap().unwrap())
        .collect();
    let (sd, sc) = (spread(&div), spread(&conv));
    outcome(
        "stability constants",
        sd < 0.25 && sc < 0.25,
        format!("div {div:.4?} (spread {sd:.3}), convection {conv:.4?} (spread {sc:.3})"),
    )
}

fn consistency() -> Outcome {
    let meshes: Vec<Mesh> = [8, 16, 32].iter().map(|&n| structured(n)).collect();
    let r = consistency_order_test(&NeumannField, &meshes).unwrap();
    outcome(
        "consistency",
        r.precondition_met && r.passed(),
        format!("defect ratios {:.4?} band [{}, {}]", r.ratios, r.band.0, r.band.1),
    )
}

fn mms_run(n: usize) -> Vec<StabilityRecord> {
    let m = structured(n);
    let disc = Discretization::new(&m);
    let mms = builtin_mms(100.0).unwrap();
    let cfg = RunConfig { k: 0.01, t_end: 1.0, ..RunConfig::default() };
    scheme::run(&cfg, &mms, &disc, &mut []).unwrap().records
}

fn incompressibility(levels: &[Vec<StabilityRecord>]) -> Outcome {
    let tol = 10.0 * RunConfig::default().solvers.pressure.rtol;
    let all = || levels.iter().flatten();
    let div = all().map(|r| r.max_div).fold(0.0, f64::max);
    let jump = all().map(|r| r.max_jump).fold(0.0, f64::max);
    outcome(
        "incompressibility",
        levels.iter().all(|l| l.len() == 100) && div <= tol && jump <= tol,
        format!("100 steps on 8x8, 16x16, 32x32: max |div_h u| {div:.2e}, max normal jump {jump:.2e}, bound {tol:.0e}"),
    )
}

fn monitors(levels: &[Vec<StabilityRecord>]) -> Outcome {
    let finite = levels.iter().all(|l| l.iter().all(StabilityRecord::is_finite));
    let peak = |l: &[StabilityRecord], i: usize| l.iter().map(|r| r.monitors()[i].1).fold(0.0, f64::max);
    let mut growth = 0.0f64;
    for w in levels.windows(2) {
        for i in 0..5 {
            growth = growth.max(peak(&w[1], i) / peak(&w[0], i));
        }
    }
    outcome(
        "stability monitors",
        finite && growth <= 10.0,
        format!("finite: {finite}, largest growth between levels {growth:.3}"),
    )
}

fn convergence() -> Outcome {
    let s = convergence_study(&StudyConfig { levels: 3, alpha: 1.5, ..StudyConfig::default() }).unwrap();
    let errs: Vec<String> = s.rows.iter().map(|r| format!("{:.3e}", r.err_l2l2_u)).collect();
    outcome(
        "convergence",
        s.rows.len() == 3 && s.errors_decreasing() && s.min_eoc() > 0.3,
        format!("errors [{}], min eoc {:.3}", errs.join(", "), s.min_eoc()),
    )
}

fn determinism(dir: &std::path::Path) -> Outcome {
    let run = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_fvns"))
            .args(["run", "--mesh", "generate:8x8", "--dt", "0.01", "--tend", "0.2", "--out", out])
            .current_dir(dir)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        fs::read(dir.join(out).join("diagnostics.csv")).unwrap()
    };
    let (a, b) = (run("first"), run("second"));
    outcome("determinism", a == b && !a.is_empty(), format!("{} bytes, identical: {}", a.len(), a == b))
}

fn forcing() -> Outcome {
    let mms = builtin_mms(100.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let worst = (0..1000)
        .map(|_| mms.forcing_residual([rng.gen(), rng.gen()], rng.gen_range(0.0..1.0)))
        .fold(0.0, f64::max);
    outcome("forcing residual", worst <= 1e-8, format!("max |f - f_fd| = {worst:.2e} at 1000 points"))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let k = kite();
    let m8 = structured(8);
    let irregular = imported_mesh(dir.path());
    let meshes = [("kite", &k), ("8x8", &m8), ("imported", &irregular)];
    let (m16, m32) = (structured(16), structured(32));
    let sym_meshes = [("kite", &k), ("8x8", &m8), ("16x16", &m16), ("32x32", &m32), ("imported", &irregular)];
    let levels: Vec<Vec<StabilityRecord>> = [8, 16, 32].iter().map(|&n| mms_run(n)).collect();

    let results = vec![
        identities(&meshes, "adjointness"),
        identities(&meshes, "coercivity"),
        kite_norm(),
        matrix_symmetry(&sym_meshes),
        constants(),
        consistency(),
        incompressibility(&levels),
        monitors(&levels),
        convergence(),
        determinism(dir.path()),
        forcing(),
    ];
    for r in &results {
        println!("{} {:<22} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
