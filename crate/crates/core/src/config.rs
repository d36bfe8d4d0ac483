//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment, keys are dotted by section:
//!
//! ```text
//! mesh.generate = 16x16
//! fluid.re = 100
//! time.k = 0.01
//! time.T = 0.5
//! output.dir = out
//! ```
//!
//! Unknown keys are rejected. [`Config::to_text`] writes every key with its
//! resolved value and parses back to an identical configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{Preconditioner, SolverConfig};
use crate::mesh::{Mesh, Rect};
use crate::scheme::{InitMode, RunConfig, Solvers};
use crate::verification::StudyConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSource {
    Generate { nx: usize, ny: usize },
    File(PathBuf),
}

impl MeshSource {
    pub fn load(&self) -> Result<Mesh> {
        match self {
            MeshSource::Generate { nx, ny } => Mesh::generate_structured(*nx, *ny, Rect::UNIT),
            MeshSource::File(path) => Mesh::load(&std::fs::read_to_string(path)?),
        }
    }
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshSource::Generate { nx, ny } => write!(f, "generate:{nx}x{ny}"),
            MeshSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

fn parse_resolution(s: &str) -> Option<(usize, usize)> {
    let (a, b) = s.trim().split_once(['x', 'X'])?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl FromStr for MeshSource {
    type Err = String;

    /// `generate:NXxNY` or `file:PATH`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(rest) = s.strip_prefix("generate:") {
            let (nx, ny) = parse_resolution(rest).ok_or_else(|| format!("bad resolution `{rest}`, expected NXxNY"))?;
            Ok(MeshSource::Generate { nx, ny })
        } else if let Some(rest) = s.strip_prefix("file:") {
            Ok(MeshSource::File(PathBuf::from(rest)))
        } else {
            Err(format!("bad mesh source `{s}`, expected generate:NXxNY or file:PATH"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProblemKind {
    /// Built-in manufactured solution.
    #[default]
    Mms,
    /// Manufactured initial velocity, no forcing.
    Vortex,
    /// Fluid at rest.
    Zero,
}

impl ProblemKind {
    fn name(self) -> &'static str {
        match self {
            ProblemKind::Mms => "mms",
            ProblemKind::Vortex => "vortex",
            ProblemKind::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mesh: MeshSource,
    pub angle_margin: f64,
    pub problem: ProblemKind,
    pub run: RunConfig,
    pub output_dir: PathBuf,
    pub timestamp: bool,
    pub seed: u64,
    pub trials: usize,
    pub study: StudyConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            mesh: MeshSource::Generate { nx: 8, ny: 8 },
            angle_margin: 0.01,
            problem: ProblemKind::Mms,
            run: RunConfig::default(),
            output_dir: PathBuf::from("out"),
            timestamp: true,
            seed: 1,
            trials: 50,
            study: StudyConfig::default(),
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(line, key, format!("cannot parse `{v}`")))
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = value(line, key, v)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::config(line, key, format!("must be positive, got {v}")));
    }
    Ok(x)
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(line, key, format!("expected true or false, got `{v}`"))),
    }
}

fn solver_key(cfg: &mut SolverConfig, line: usize, key: &str, field: &str, v: &str) -> Result<()> {
    match field {
        "rtol" => cfg.rtol = positive(line, key, v)?,
        "atol" => cfg.atol = positive(line, key, v)?,
        "max_iter" => {
            cfg.max_iter = match v {
                "auto" => None,
                _ => {
                    let n: usize = value(line, key, v)?;
                    if n == 0 {
                        return Err(Error::config(line, key, "must be at least 1"));
                    }
                    Some(n)
                }
            }
        }
        "precond" => {
            cfg.preconditioner = match v {
                "none" => Preconditioner::None,
                "diagonal" => Preconditioner::Diagonal,
                _ => return Err(Error::config(line, key, format!("expected none or diagonal, got `{v}`"))),
            }
        }
        _ => return Err(Error::config(line, key, "unknown key")),
    }
    Ok(())
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut c = Config::default();
        let mut mesh_line: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, v) = content
                .split_once('=')
                .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
            let (key, v) = (key.trim(), v.trim());
            c.set(line, key, v)?;
            if key == "mesh.generate" || key == "mesh.file" {
                if let Some(prev) = mesh_line {
                    return Err(Error::config(line, key, format!("mesh source already given on line {prev}")));
                }
                mesh_line = Some(line);
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Applies one setting.
    pub fn set(&mut self, line: usize, key: &str, v: &str) -> Result<()> {
        match key {
            "mesh.generate" => {
                let (nx, ny) = parse_resolution(v).ok_or_else(|| Error::config(line, key, format!("expected NXxNY, got `{v}`")))?;
                self.mesh = MeshSource::Generate { nx, ny };
            }
            "mesh.file" => self.mesh = MeshSource::File(PathBuf::from(v)),
            "mesh.angle_margin" => {
                let a: f64 = value(line, key, v)?;
                if !(0.0..std::f64::consts::FRAC_PI_2).contains(&a) {
                    return Err(Error::config(line, key, "must lie in [0, pi/2)"));
                }
                self.angle_margin = a;
            }
            "problem" => {
                self.problem = match v {
                    "mms" => ProblemKind::Mms,
                    "vortex" => ProblemKind::Vortex,
                    "zero" => ProblemKind::Zero,
                    _ => return Err(Error::config(line, key, format!("unknown problem `{v}`"))),
                }
            }
            "fluid.re" => self.run.re = positive(line, key, v)?,
            "time.k" => self.run.k = positive(line, key, v)?,
            "time.T" => self.run.t_end = positive(line, key, v)?,
            "init.mode" => {
                self.run.init = match v {
                    "backward-euler" => InitMode::BackwardEuler,
                    "exact" => InitMode::Exact,
                    _ => return Err(Error::config(line, key, format!("expected backward-euler or exact, got `{v}`"))),
                }
            }
            "output.dir" => self.output_dir = PathBuf::from(v),
            "output.cadence" => {
                let n: usize = value(line, key, v)?;
                if n == 0 {
                    return Err(Error::config(line, key, "must be at least 1"));
                }
                self.run.snapshot_every = n;
            }
            "output.timestamp" => self.timestamp = boolean(line, key, v)?,
            "seed" => self.seed = value(line, key, v)?,
            "verify.trials" => self.trials = value(line, key, v)?,
            "study.levels" => self.study.levels = value(line, key, v)?,
            "study.alpha" => self.study.alpha = positive(line, key, v)?,
            "study.k0" => self.study.k0 = positive(line, key, v)?,
            "study.T" => self.study.t_end = positive(line, key, v)?,
            "study.base" => self.study.base_resolution = value(line, key, v)?,
            "study.uncoupled" => self.study.uncoupled = boolean(line, key, v)?,
            _ => {
                if let Some(field) = key.strip_prefix("solver.momentum.") {
                    solver_key(&mut self.run.solvers.momentum, line, key, field, v)?;
                } else if let Some(field) = key.strip_prefix("solver.pressure.") {
                    solver_key(&mut self.run.solvers.pressure, line, key, field, v)?;
                } else {
                    return Err(Error::config(line, key, "unknown key"));
                }
            }
        }
        Ok(())
    }

    /// Cross-key checks; `line` 0 means "whole file".
    pub fn validate(&mut self) -> Result<()> {
        self.run.steps().map_err(|e| match e {
            Error::InvalidInput(m) => Error::config(0, "time.T", m),
            e => e,
        })?;
        if self.study.levels < 2 {
            return Err(Error::config(0, "study.levels", "need at least 2 levels"));
        }
        if !(self.study.alpha > 1.0) {
            return Err(Error::config(0, "study.alpha", "must exceed 1"));
        }
        self.study.re = self.run.re;
        self.study.solvers = self.run.solvers.clone();
        self.study.init = self.run.init;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        fn solver(out: &mut String, name: &str, s: &SolverConfig) {
            out.push_str(&format!("solver.{name}.rtol = {:?}\n", s.rtol));
            out.push_str(&format!("solver.{name}.atol = {:?}\n", s.atol));
            out.push_str(&format!(
                "solver.{name}.max_iter = {}\n",
                s.max_iter.map_or("auto".to_string(), |n| n.to_string())
            ));
            let p = match s.preconditioner {
                Preconditioner::None => "none",
                Preconditioner::Diagonal => "diagonal",
            };
            out.push_str(&format!("solver.{name}.precond = {p}\n"));
        }
        let mut s = String::new();
        match &self.mesh {
            MeshSource::Generate { nx, ny } => s.push_str(&format!("mesh.generate = {nx}x{ny}\n")),
            MeshSource::File(p) => s.push_str(&format!("mesh.file = {}\n", p.display())),
        }
        s.push_str(&format!("mesh.angle_margin = {:?}\n", self.angle_margin));
        s.push_str(&format!("problem = {}\n", self.problem.name()));
        s.push_str(&format!("fluid.re = {:?}\n", self.run.re));
        s.push_str(&format!("time.k = {:?}\n", self.run.k));
        s.push_str(&format!("time.T = {:?}\n", self.run.t_end));
        let init = match self.run.init {
            InitMode::BackwardEuler => "backward-euler",
            InitMode::Exact => "exact",
        };
        s.push_str(&format!("init.mode = {init}\n"));
        solver(&mut s, "momentum", &self.run.solvers.momentum);
        solver(&mut s, "pressure", &self.run.solvers.pressure);
        s.push_str(&format!("output.dir = {}\n", self.output_dir.display()));
        s.push_str(&format!("output.cadence = {}\n", self.run.snapshot_every));
        s.push_str(&format!("output.timestamp = {}\n", self.timestamp));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("verify.trials = {}\n", self.trials));
        s.push_str(&format!("study.levels = {}\n", self.study.levels));
        s.push_str(&format!("study.alpha = {:?}\n", self.study.alpha));
        s.push_str(&format!("study.k0 = {:?}\n", self.study.k0));
        s.push_str(&format!("study.T = {:?}\n", self.study.t_end));
        s.push_str(&format!("study.base = {}\n", self.study.base_resolution));
        s.push_str(&format!("study.uncoupled = {}\n", self.study.uncoupled));
        s
    }

    /// Hash of the resolved configuration; output settings that do not
    /// change results are excluded.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("output."))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn solvers(&self) -> &Solvers {
        &self.run.solvers
    }
}
