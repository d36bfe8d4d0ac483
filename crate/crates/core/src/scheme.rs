//! BDF2 incremental projection time stepping.
//!
//! Each step from `t_n` to `t_{n+1}`:
//!
//! 1. momentum: solve per component
//!    `[3/(2k) + b̃_h(w, ·) − (1/Re) Δ̃_h] ũ = f^{n+1} + (4uⁿ − u^{n−1})/(2k) − ∇_h pⁿ`
//!    with the advecting field `w = 2uⁿ − u^{n−1}`;
//! 2. pressure: `Δ_h δ = (3/(2k)) div_h ũ`, `p^{n+1} = pⁿ + δ`;
//! 3. correction: `u^{n+1} = ũ − (2k/3) ∇_h δ`.
//!
//! Linear systems are solved in cell- or edge-integrated form, which makes
//! the diffusion and pressure operators symmetric.

use crate::error::{Error, Result};
use crate::fields::{cell_areas, edge_mass, h_inner_scalar, project_p0, project_p1nc, L2Space, P0Vector, P1ncField};
use crate::linalg::{self, ConstantMode, CsrMatrix, SolveReport, SolverConfig};
use crate::mesh::Mesh;
use crate::operators::{self, DivBoundary, OperatorMatrix};
use crate::par;
use crate::Point;

/// Data of an incompressible flow problem with homogeneous Dirichlet
/// velocity on the whole boundary.
pub trait Problem: Sync {
    fn initial_velocity(&self, x: Point) -> Point;

    fn forcing(&self, x: Point, t: f64) -> Point;

    /// Whether [`Problem::exact_velocity`] and [`Problem::exact_pressure`]
    /// are available.
    fn has_exact(&self) -> bool {
        false
    }

    fn exact_velocity(&self, _x: Point, _t: f64) -> Point {
        [f64::NAN, f64::NAN]
    }

    fn exact_pressure(&self, _x: Point, _t: f64) -> f64 {
        f64::NAN
    }
}

/// Fluid at rest, no forcing.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroProblem;

impl Problem for ZeroProblem {
    fn initial_velocity(&self, _x: Point) -> Point {
        [0.0, 0.0]
    }

    fn forcing(&self, _x: Point, _t: f64) -> Point {
        [0.0, 0.0]
    }

    fn has_exact(&self) -> bool {
        true
    }

    fn exact_velocity(&self, _x: Point, _t: f64) -> Point {
        [0.0, 0.0]
    }

    fn exact_pressure(&self, _x: Point, _t: f64) -> f64 {
        0.0
    }
}

/// How `u¹` and `p¹` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// One semi-implicit backward Euler projection step.
    #[default]
    BackwardEuler,
    /// Projections of the exact solution (requires [`Problem::has_exact`]).
    Exact,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solvers {
    pub momentum: SolverConfig,
    pub pressure: SolverConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub re: f64,
    pub k: f64,
    pub t_end: f64,
    pub init: InitMode,
    pub solvers: Solvers,
    /// Snapshots every this many steps, plus the first and last.
    pub snapshot_every: usize,
    pub div_boundary: DivBoundary,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            re: 100.0,
            k: 0.01,
            t_end: 0.1,
            init: InitMode::BackwardEuler,
            solvers: Solvers::default(),
            snapshot_every: 10,
            div_boundary: DivBoundary::AdjointConsistent,
        }
    }
}

impl RunConfig {
    /// Number of steps `N = T/k`; `T` must be an integer multiple of `k`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.re > 0.0 && self.re.is_finite()) {
            return Err(Error::InvalidInput(format!("Re must be positive, got {}", self.re)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", self.k)));
        }
        if !(self.t_end >= self.k) {
            return Err(Error::InvalidInput(format!(
                "final time {} is shorter than the time step {}",
                self.t_end, self.k
            )));
        }
        let n = (self.t_end / self.k).round();
        if (n * self.k - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::InvalidInput(format!(
                "final time {} is not a multiple of the time step {}",
                self.t_end, self.k
            )));
        }
        Ok(n as usize)
    }
}

/// Precomputed mesh-dependent operators.
#[derive(Debug, Clone)]
pub struct Discretization<'m> {
    pub mesh: &'m Mesh,
    pub cell_mass: Vec<f64>,
    pub edge_mass: Vec<f64>,
    /// Two-point stiffness `−M Δ̃_h`.
    pub stiffness: OperatorMatrix,
    /// Pressure stiffness `−M_{P1nc} Δ_h`.
    pub pressure: OperatorMatrix,
}

impl<'m> Discretization<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        Discretization {
            mesh,
            cell_mass: cell_areas(mesh),
            edge_mass: edge_mass(mesh),
            stiffness: operators::assemble_p0_stiffness(mesh),
            pressure: operators::assemble_pressure_stiffness(mesh),
        }
    }

    fn kernel(&self) -> Option<ConstantMode<'_>> {
        Some(ConstantMode {
            weights: &self.edge_mass,
        })
    }

    /// Momentum matrix `a·M + (1/Re) K + M C(w)` in cell-integrated form.
    pub fn momentum_matrix(&self, a: f64, re: f64, flux: &crate::Rt0Flux) -> Result<CsrMatrix> {
        let mass = CsrMatrix::diagonal_matrix(&self.cell_mass);
        let base = mass.add(a, &self.stiffness.matrix, 1.0 / re);
        let conv = operators::assemble_convection_integrated(flux, self.mesh)?;
        Ok(base.add(1.0, &conv.matrix, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub u_prev: P0Vector,
    pub u_curr: P0Vector,
    pub u_tilde: P0Vector,
    pub p_curr: P1ncField,
    pub step: usize,
    pub time: f64,
}

/// Per-step monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRecord {
    pub step: usize,
    pub time: f64,
    /// `|uⁿ|`
    pub u_l2: f64,
    /// `k Σ_{j=2}^n ‖ũ^j‖_h²`
    pub dissipation: f64,
    /// `|uⁿ − u^{n−1}| / k`
    pub increment: f64,
    /// `k Σ_{j=1}^n |p^j|²`
    pub pressure_sum: f64,
    /// `|∇_h pⁿ|`
    pub grad_p: f64,
    pub momentum_iterations: usize,
    pub pressure_iterations: usize,
    /// Final pressure-solve residual, `‖b − A δ‖₂`.
    pub pressure_residual: f64,
    /// `max_σ |div_h uⁿ|`
    pub max_div: f64,
    /// Largest normal-component jump of `uⁿ` across interior edges.
    pub max_jump: f64,
    /// `|∫ pⁿ| / |Ω|`
    pub pressure_mean: f64,
}

impl StabilityRecord {
    pub const HEADER: &'static str = "step,time,u_l2,dissipation,increment,pressure_sum,grad_p,\
momentum_iterations,pressure_iterations,pressure_residual,max_div,max_jump,pressure_mean";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{:e},{:e},{:e},{:e},{:e},{},{},{:e},{:e},{:e},{:e}",
            self.step,
            self.time,
            self.u_l2,
            self.dissipation,
            self.increment,
            self.pressure_sum,
            self.grad_p,
            self.momentum_iterations,
            self.pressure_iterations,
            self.pressure_residual,
            self.max_div,
            self.max_jump,
            self.pressure_mean
        )
    }

    /// The stability-estimate quantities, by name.
    pub fn monitors(&self) -> [(&'static str, f64); 5] {
        [
            ("energy", self.u_l2 + self.dissipation),
            ("dissipation", self.dissipation),
            ("increment", self.increment),
            ("pressure_sum", self.pressure_sum),
            ("grad_p", self.grad_p),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.monitors().iter().all(|(_, v)| v.is_finite())
            && self.max_div.is_finite()
            && self.max_jump.is_finite()
            && self.pressure_mean.is_finite()
    }
}

/// Receives the run's output.
pub trait Sink {
    /// Called once per time level, starting with `n = 1`.
    fn step(&mut self, _state: &SchemeState, _record: &StabilityRecord, _mesh: &Mesh) -> Result<()> {
        Ok(())
    }

    /// Called for `n = 0`, every `snapshot_every` steps, and the final step.
    fn snapshot(&mut self, _state: &SchemeState, _mesh: &Mesh) -> Result<()> {
        Ok(())
    }

    /// Called at the end of the run, also after an abort.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Keeps `(t_n, uⁿ)` for every time level `n ≥ 1`.
#[derive(Debug, Clone, Default)]
pub struct History {
    pub levels: Vec<(f64, P0Vector)>,
}

impl Sink for History {
    fn step(&mut self, state: &SchemeState, _record: &StabilityRecord, _mesh: &Mesh) -> Result<()> {
        self.levels.push((state.time, state.u_curr.clone()));
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Building blocks

fn weighted(mass: &[f64], v: &[f64]) -> Vec<f64> {
    mass.iter().zip(v).map(|(m, x)| m * x).collect()
}

/// Solves `Δ_h q = s·div_h v` for zero-mean `q`, in the form `A_p q = −s M_{P1nc} div_h v`.
fn pressure_solve(disc: &Discretization, div: &P1ncField, s: f64, cfg: &SolverConfig) -> Result<(P1ncField, SolveReport)> {
    let rhs: Vec<f64> = disc.edge_mass.iter().zip(&div.values).map(|(m, d)| -s * m * d).collect();
    let scale: f64 = rhs.iter().map(|v| v.abs()).sum();
    let compat: f64 = rhs.iter().sum();
    if compat.abs() > 1e-12 * scale {
        log::warn!("pressure right-hand side has nonzero sum {compat:e} (scale {scale:e})");
    }
    if scale == 0.0 {
        let rep = SolveReport {
            iterations: 0,
            residual: 0.0,
            threshold: cfg.atol,
            converged: true,
            solver: "pcg",
        };
        return Ok((P1ncField::zeros(disc.mesh), rep));
    }
    let (q, rep) = linalg::solve_spd_deflated(&disc.pressure, &rhs, disc.kernel(), cfg)?;
    Ok((
        P1ncField {
            values: q,
            zero_mean: true,
        },
        rep,
    ))
}

/// Discrete Leray projection: `w = v − ∇_h q` with `Δ_h q = div_h v`.
/// The result satisfies `div_h w = 0` up to the solver tolerance.
pub fn discrete_leray_project(v: &P0Vector, disc: &Discretization, cfg: &SolverConfig) -> Result<(P0Vector, P1ncField)> {
    let div = operators::div_h(v, disc.mesh);
    let (q, _) = pressure_solve(disc, &div, 1.0, cfg)?;
    let g = operators::grad_h(&q, disc.mesh);
    Ok((v.lincomb(1.0, &g, -1.0), q))
}

fn solve_components(a: &CsrMatrix, rhs: [Vec<f64>; 2], guess: &P0Vector, cfg: &SolverConfig) -> Result<(P0Vector, usize)> {
    let [bx, by] = rhs;
    let (rx, ry) = par::join(
        || linalg::solve_general_from(a, &bx, cfg, Some(&guess.x)),
        || linalg::solve_general_from(a, &by, cfg, Some(&guess.y)),
    );
    let (x, repx) = rx?;
    let (y, repy) = ry?;
    Ok((P0Vector { x, y }, repx.iterations + repy.iterations))
}

/// Momentum prediction `ũ^{n+1}`. Returns the field and the total number of
/// Krylov iterations over both components.
pub fn momentum_step<P: Problem + ?Sized>(
    state: &SchemeState,
    cfg: &RunConfig,
    problem: &P,
    disc: &Discretization,
    t_next: f64,
) -> Result<(P0Vector, usize)> {
    let mesh = disc.mesh;
    let k = cfg.k;
    let w = state.u_curr.lincomb(2.0, &state.u_prev, -1.0);
    let flux = operators::flux_from_p0(&w, mesh);
    let a = disc.momentum_matrix(1.5 / k, cfg.re, &flux)?;
    let f = project_p0(&|x: Point| problem.forcing(x, t_next), mesh);
    let gp = operators::grad_h(&state.p_curr, mesh);
    let src = |c: usize| -> Vec<f64> {
        let (f, un, up, g) = match c {
            0 => (&f.x, &state.u_curr.x, &state.u_prev.x, &gp.x),
            _ => (&f.y, &state.u_curr.y, &state.u_prev.y, &gp.y),
        };
        let pointwise: Vec<f64> = (0..mesh.n_cells())
            .map(|i| f[i] + (4.0 * un[i] - up[i]) / (2.0 * k) - g[i])
            .collect();
        weighted(&disc.cell_mass, &pointwise)
    };
    solve_components(&a, [src(0), src(1)], &state.u_curr, &cfg.solvers.momentum)
}

/// Pressure update. Returns `(p^{n+1}, δ, report)`.
pub fn pressure_step(
    state: &SchemeState,
    u_tilde: &P0Vector,
    cfg: &RunConfig,
    disc: &Discretization,
) -> Result<(P1ncField, P1ncField, SolveReport)> {
    let div = operators::div_h_with(u_tilde, disc.mesh, cfg.div_boundary);
    let (delta, rep) = pressure_solve(disc, &div, 1.5 / cfg.k, &cfg.solvers.pressure)?;
    let p = P1ncField::new(state.p_curr.values.iter().zip(&delta.values).map(|(a, b)| a + b).collect())
        .centered(disc.mesh);
    Ok((p, delta, rep))
}

/// `u^{n+1} = ũ^{n+1} − (2k/3) ∇_h δ`.
pub fn correction_step(u_tilde: &P0Vector, delta: &P1ncField, k: f64, mesh: &Mesh) -> P0Vector {
    let g = operators::grad_h(delta, mesh);
    u_tilde.lincomb(1.0, &g, -2.0 * k / 3.0)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn diff_l2(a: &P0Vector, b: &P0Vector, mesh: &Mesh) -> f64 {
    a.lincomb(1.0, b, -1.0).l2_norm(mesh)
}

fn norm_h_sq(v: &P0Vector, mesh: &Mesh) -> f64 {
    h_inner_scalar(&v.x, &v.x, mesh) + h_inner_scalar(&v.y, &v.y, mesh)
}

fn make_record(
    state: &SchemeState,
    prev: Option<&StabilityRecord>,
    k: f64,
    disc: &Discretization,
    iters: (usize, usize),
    pressure_residual: f64,
) -> StabilityRecord {
    let mesh = disc.mesh;
    let (dissipation, pressure_sum) = match prev {
        Some(r) => (
            r.dissipation + k * norm_h_sq(&state.u_tilde, mesh),
            r.pressure_sum + k * state.p_curr.l2_norm(mesh).powi(2),
        ),
        None => (0.0, k * state.p_curr.l2_norm(mesh).powi(2)),
    };
    let div = operators::div_h(&state.u_curr, mesh);
    StabilityRecord {
        step: state.step,
        time: state.time,
        u_l2: state.u_curr.l2_norm(mesh),
        dissipation,
        increment: diff_l2(&state.u_curr, &state.u_prev, mesh) / k,
        pressure_sum,
        grad_p: operators::grad_h(&state.p_curr, mesh).l2_norm(mesh),
        momentum_iterations: iters.0,
        pressure_iterations: iters.1,
        pressure_residual,
        max_div: max_abs(&div.values),
        max_jump: operators::max_normal_jump(&state.u_curr, mesh),
        pressure_mean: (state.p_curr.integral(mesh) / mesh.area()).abs(),
    }
}

/// Builds `(u⁰, u¹, p¹)`. The returned record describes level 1.
pub fn initialize<P: Problem + ?Sized>(
    cfg: &RunConfig,
    problem: &P,
    disc: &Discretization,
) -> Result<(SchemeState, StabilityRecord)> {
    let mesh = disc.mesh;
    let k = cfg.k;
    let pcfg = &cfg.solvers.pressure;
    let (state, iters, residual) = match cfg.init {
        InitMode::BackwardEuler => {
            let (u0, _) = discrete_leray_project(&project_p0(&|x: Point| problem.initial_velocity(x), mesh), disc, pcfg)?;
            let flux = operators::flux_from_p0(&u0, mesh);
            let a = disc.momentum_matrix(1.0 / k, cfg.re, &flux)?;
            let f = project_p0(&|x: Point| problem.forcing(x, k), mesh);
            let rhs = |fc: &[f64], uc: &[f64]| -> Vec<f64> {
                let pw: Vec<f64> = fc.iter().zip(uc).map(|(f, u)| f + u / k).collect();
                weighted(&disc.cell_mass, &pw)
            };
            let (ut, mit) = solve_components(&a, [rhs(&f.x, &u0.x), rhs(&f.y, &u0.y)], &u0, &cfg.solvers.momentum)?;
            let div = operators::div_h_with(&ut, mesh, cfg.div_boundary);
            let (p1, rep) = pressure_solve(disc, &div, 1.0 / k, pcfg)?;
            let u1 = ut.lincomb(1.0, &operators::grad_h(&p1, mesh), -k);
            let p1 = p1.centered(mesh);
            (
                SchemeState {
                    u_prev: u0,
                    u_tilde: u1.clone(),
                    u_curr: u1,
                    p_curr: p1,
                    step: 1,
                    time: k,
                },
                (mit, rep.iterations),
                rep.residual,
            )
        }
        InitMode::Exact => {
            if !problem.has_exact() {
                return Err(Error::Precondition("exact initialization needs an exact solution".into()));
            }
            let (u0, _) = discrete_leray_project(&project_p0(&|x: Point| problem.exact_velocity(x, 0.0), mesh), disc, pcfg)?;
            let (u1, _) = discrete_leray_project(&project_p0(&|x: Point| problem.exact_velocity(x, k), mesh), disc, pcfg)?;
            let p1 = project_p1nc(&|x: Point| problem.exact_pressure(x, k), mesh).centered(mesh);
            (
                SchemeState {
                    u_prev: u0,
                    u_tilde: u1.clone(),
                    u_curr: u1,
                    p_curr: p1,
                    step: 1,
                    time: k,
                },
                (0, 0),
                0.0,
            )
        }
    };
    let record = make_record(&state, None, k, disc, iters, residual);
    log::debug!("initial increment |u1 - u0|/k = {:e}", record.increment);
    Ok((state, record))
}

/// One full step `n → n+1`.
pub fn advance<P: Problem + ?Sized>(
    state: &SchemeState,
    prev: &StabilityRecord,
    cfg: &RunConfig,
    problem: &P,
    disc: &Discretization,
) -> Result<(SchemeState, StabilityRecord)> {
    if state.step < 1 {
        return Err(Error::Precondition("advance needs u0 and u1".into()));
    }
    let step = state.step + 1;
    let t_next = step as f64 * cfg.k;
    let (u_tilde, mit) = momentum_step(state, cfg, problem, disc, t_next)?;
    let (p_next, delta, rep) = pressure_step(state, &u_tilde, cfg, disc)?;
    let u_next = correction_step(&u_tilde, &delta, cfg.k, disc.mesh);
    let next = SchemeState {
        u_prev: state.u_curr.clone(),
        u_curr: u_next,
        u_tilde,
        p_curr: p_next,
        step,
        time: t_next,
    };
    let record = make_record(&next, Some(prev), cfg.k, disc, (mit, rep.iterations), rep.residual);
    if !(record.is_finite() && next.u_curr.is_finite()) {
        return Err(Error::NonFinite(format!("non-finite state at step {step}")));
    }
    Ok((next, record))
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SchemeState,
    pub records: Vec<StabilityRecord>,
}

/// Initializes and advances to `T`, feeding `sinks`. On error the sinks are
/// still finished so partial output is flushed.
pub fn run<P: Problem + ?Sized>(
    cfg: &RunConfig,
    problem: &P,
    disc: &Discretization,
    sinks: &mut [&mut dyn Sink],
) -> Result<RunOutput> {
    let result = run_inner(cfg, problem, disc, sinks);
    let mut flush = Ok(());
    for s in sinks.iter_mut() {
        if let Err(e) = s.finish() {
            flush = flush.and(Err(e));
        }
    }
    let out = result?;
    flush?;
    Ok(out)
}

fn run_inner<P: Problem + ?Sized>(
    cfg: &RunConfig,
    problem: &P,
    disc: &Discretization,
    sinks: &mut [&mut dyn Sink],
) -> Result<RunOutput> {
    let n_steps = cfg.steps()?;
    if n_steps < 2 {
        return Err(Error::InvalidInput(format!("need at least two steps, got {n_steps}")));
    }
    let mesh = disc.mesh;
    let every = cfg.snapshot_every.max(1);
    let (mut state, mut record) = initialize(cfg, problem, disc)?;
    let initial = SchemeState {
        u_prev: state.u_prev.clone(),
        u_curr: state.u_prev.clone(),
        u_tilde: state.u_prev.clone(),
        p_curr: P1ncField::zeros(mesh),
        step: 0,
        time: 0.0,
    };
    for s in sinks.iter_mut() {
        s.snapshot(&initial, mesh)?;
    }
    let mut records = Vec::with_capacity(n_steps);
    loop {
        for s in sinks.iter_mut() {
            s.step(&state, &record, mesh)?;
            if state.step % every == 0 || state.step == n_steps {
                s.snapshot(&state, mesh)?;
            }
        }
        records.push(record.clone());
        if state.step == n_steps {
            break;
        }
        let (next, rec) = advance(&state, &record, cfg, problem, disc)?;
        state = next;
        record = rec;
    }
    Ok(RunOutput { state, records })
}
