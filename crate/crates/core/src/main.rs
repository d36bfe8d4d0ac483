use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fvns::config::{Config, MeshSource, ProblemKind};
use fvns::io::{self, DiagnosticsSink, Provenance, VtkSink};
use fvns::mesh::{Mesh, Rect};
use fvns::scheme::{self, Discretization, Problem, Sink, ZeroProblem};
use fvns::verification::{self, DecayingVortex, IdentityOptions, NeumannField};
use fvns::Error;

#[derive(Parser)]
#[command(name = "fvns", version, about = "Finite-volume projection solver for 2D incompressible flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write diagnostics and snapshots.
    Run(Common),
    /// Check the discrete operator identities and the laplacian consistency order.
    Verify(Common),
    /// Run a convergence study on the manufactured solution.
    Converge(Common),
    /// Print the admissibility report of a mesh.
    MeshInfo(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// generate:NXxNY or file:PATH
    #[arg(long)]
    mesh: Option<MeshSource>,
    #[arg(long)]
    re: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Leave the wall-clock stamp out of VTK titles.
    #[arg(long)]
    no_timestamp: bool,
}

type Action = fn(&Config) -> Result<(), Failure>;

/// Exit status of a failed command.
enum Failure {
    Assertion(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } | Error::Breakdown { .. } | Error::SolverFailure(_) | Error::NonFinite(_) => 3,
        Error::IdentityViolation { .. } | Error::OrderViolation(_) => 1,
        _ => 2,
    }
}

impl Common {
    fn resolve(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::parse(&fs::read_to_string(p)?)?,
            None => Config::default(),
        };
        if let Some(m) = &self.mesh {
            cfg.mesh = m.clone();
        }
        let overrides = [
            ("fluid.re", self.re.map(|v| format!("{v:?}"))),
            ("time.k", self.dt.map(|v| format!("{v:?}"))),
            ("time.T", self.tend.map(|v| format!("{v:?}"))),
            ("study.levels", self.levels.map(|v| v.to_string())),
            ("study.alpha", self.alpha.map(|v| format!("{v:?}"))),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (key, v) in overrides {
            if let Some(v) = v {
                cfg.set(0, key, &v)?;
            }
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if self.no_timestamp {
            cfg.timestamp = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_admissible(cfg: &Config) -> Result<Mesh, Failure> {
    let mesh = cfg.mesh.load()?;
    let report = mesh.validate(cfg.angle_margin);
    if !report.admissible {
        return Err(Failure::Assertion(format!("mesh is not admissible\n{}", report.summary())));
    }
    Ok(mesh)
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)?;
    Ok(())
}

fn run(cfg: &Config) -> Result<(), Failure> {
    let mesh = load_admissible(cfg)?;
    let prov = Provenance {
        config_hash: cfg.hash(),
        mesh_hash: mesh.hash().to_string(),
    };
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(Error::from)?;
    write(&dir.join("config.txt"), &cfg.to_text())?;

    let disc = Discretization::new(&mesh);
    let mms = verification::builtin_mms(cfg.run.re)?;
    let vortex = DecayingVortex { mms };
    let problem: &dyn Problem = match cfg.problem {
        ProblemKind::Mms => &mms,
        ProblemKind::Vortex => &vortex,
        ProblemKind::Zero => &ZeroProblem,
    };
    let mut diag = DiagnosticsSink::create(&dir.join("diagnostics.csv"), &prov)?;
    let mut vtk = VtkSink::new(&dir.join("snapshots"), prov.clone(), cfg.timestamp)?;
    let out = {
        let mut sinks: [&mut dyn Sink; 2] = [&mut diag, &mut vtk];
        scheme::run(&cfg.run, problem, &disc, &mut sinks)?
    };
    write(&dir.join("final_velocity.csv"), &io::p0_vector_csv(&out.state.u_curr, &prov))?;
    write(&dir.join("final_pressure.csv"), &io::p1nc_csv(&out.state.p_curr, &prov))?;

    let last = out.records.last().expect("at least two records");
    println!(
        "{} steps on {} cells, t = {}: |u| = {:.6e}, max div = {:.3e}, max jump = {:.3e}",
        last.step,
        mesh.n_cells(),
        last.time,
        last.u_l2,
        out.records.iter().map(|r| r.max_div).fold(0.0, f64::max),
        out.records.iter().map(|r| r.max_jump).fold(0.0, f64::max)
    );
    println!("output in {}", dir.display());
    Ok(())
}

fn verify(cfg: &Config) -> Result<(), Failure> {
    let mesh = load_admissible(cfg)?;
    let opts = IdentityOptions {
        trials: cfg.trials,
        seed: cfg.seed,
        ..IdentityOptions::default()
    };
    let report = verification::identity_suite(&mesh, &opts)?;
    print!("{report}");
    let base = match cfg.mesh {
        MeshSource::Generate { nx, .. } => nx,
        MeshSource::File(_) => 8,
    };
    let meshes = (0..3)
        .map(|l| Mesh::generate_structured(base << l, base << l, Rect::UNIT))
        .collect::<Result<Vec<_>, _>>()?;
    let cons = verification::consistency_order_test(&NeumannField, &meshes)?;
    print!("{cons}");
    report.check()?;
    cons.check()?;
    Ok(())
}

fn converge(cfg: &Config) -> Result<(), Failure> {
    let study = verification::convergence_study(&cfg.study)?;
    print!("{}", study.report());
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(Error::from)?;
    let prov = Provenance {
        config_hash: cfg.hash(),
        mesh_hash: format!("structured-{}x{}", cfg.study.base_resolution, cfg.study.base_resolution),
    };
    write(&dir.join("study.csv"), &io::study_csv(&study, &prov))?;
    write(&dir.join("study.txt"), &study.report())?;
    if !study.errors_decreasing() {
        return Err(Failure::Assertion("errors do not decrease under refinement".into()));
    }
    Ok(())
}

fn mesh_info(cfg: &Config) -> Result<(), Failure> {
    let mesh = cfg.mesh.load()?;
    let report = mesh.validate(cfg.angle_margin);
    println!("mesh {} ({})", mesh.hash(), cfg.mesh);
    println!("vertices {} triangles {} edges {}", mesh.vertices().len(), mesh.n_cells(), mesh.n_edges());
    println!("{}", report.summary());
    if !report.admissible {
        return Err(Failure::Assertion("mesh is not admissible".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, action): (&Common, Action) = match &cli.command {
        Command::Run(c) => (c, run),
        Command::Verify(c) => (c, verify),
        Command::Converge(c) => (c, converge),
        Command::MeshInfo(c) => (c, mesh_info),
    };
    let cfg = match common.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match action(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
