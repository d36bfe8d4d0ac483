//! Manufactured solutions, error norms, convergence studies and the
//! operator identity suite.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{
    self, edge_mass, h_inner_scalar, project_p0, project_tilde_p0, L2Space, P0Scalar, P0Vector, P1ncField,
    VectorFn,
};
use crate::linalg::{self, ConstantMode, CsrMatrix, SolverConfig};
use crate::mesh::{Mesh, Rect};
use crate::operators::{self, DivBoundary};
use crate::par;
use crate::scheme::{self, Discretization, History, InitMode, Problem, RunConfig, Solvers};
use crate::Point;

// ---------------------------------------------------------------------------
// Manufactured solution

/// `g(s) = s²(1 − s)²` and its derivatives.
#[inline]
fn g(s: f64) -> [f64; 4] {
    let t = s * (1.0 - s);
    [t * t, 2.0 * t * (1.0 - 2.0 * s), 2.0 - 12.0 * s + 12.0 * s * s, 24.0 * s - 12.0]
}

/// Built-in manufactured solution on the unit square.
///
/// Stream function `ψ = cos t · g(x) g(y)`, velocity
/// `u = (∂ψ/∂y, −∂ψ/∂x)`, pressure `p = cos t · (x³ + y³ − 1/2)` (zero
/// mean), and the forcing `f = u_t − (1/Re) Δu + (u·∇)u + ∇p` in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub re: f64,
}

pub fn builtin_mms(re: f64) -> Result<ManufacturedSolution> {
    if !(re > 0.0 && re.is_finite()) {
        return Err(Error::InvalidInput(format!("Re must be positive, got {re}")));
    }
    Ok(ManufacturedSolution { re })
}

impl ManufacturedSolution {
    pub fn velocity(&self, x: Point, t: f64) -> Point {
        let (gx, gy, c) = (g(x[0]), g(x[1]), t.cos());
        [c * gx[0] * gy[1], -c * gx[1] * gy[0]]
    }

    pub fn pressure(&self, x: Point, t: f64) -> f64 {
        t.cos() * (x[0].powi(3) + x[1].powi(3) - 0.5)
    }

    pub fn pressure_gradient(&self, x: Point, t: f64) -> Point {
        let c = t.cos();
        [3.0 * c * x[0] * x[0], 3.0 * c * x[1] * x[1]]
    }

    pub fn velocity_dt(&self, x: Point, t: f64) -> Point {
        let (gx, gy, s) = (g(x[0]), g(x[1]), -t.sin());
        [s * gx[0] * gy[1], -s * gx[1] * gy[0]]
    }

    /// `jacobian[i][j] = ∂u_i/∂x_j`.
    pub fn velocity_jacobian(&self, x: Point, t: f64) -> [[f64; 2]; 2] {
        let (gx, gy, c) = (g(x[0]), g(x[1]), t.cos());
        [
            [c * gx[1] * gy[1], c * gx[0] * gy[2]],
            [-c * gx[2] * gy[0], -c * gx[1] * gy[1]],
        ]
    }

    pub fn velocity_laplacian(&self, x: Point, t: f64) -> Point {
        let (gx, gy, c) = (g(x[0]), g(x[1]), t.cos());
        [
            c * (gx[2] * gy[1] + gx[0] * gy[3]),
            -c * (gx[3] * gy[0] + gx[1] * gy[2]),
        ]
    }

    pub fn forcing(&self, x: Point, t: f64) -> Point {
        let u = self.velocity(x, t);
        let ut = self.velocity_dt(x, t);
        let j = self.velocity_jacobian(x, t);
        let lap = self.velocity_laplacian(x, t);
        let gp = self.pressure_gradient(x, t);
        let mut f = [0.0; 2];
        for i in 0..2 {
            f[i] = ut[i] - lap[i] / self.re + u[0] * j[i][0] + u[1] * j[i][1] + gp[i];
        }
        f
    }

    /// The forcing rebuilt from finite differences of `u` and `p` alone.
    pub fn forcing_fd(&self, x: Point, t: f64) -> Point {
        let h = 1e-3;
        let d1 = |f: &dyn Fn(f64) -> f64, s: f64| (f(s - 2.0 * h) - 8.0 * f(s - h) + 8.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h);
        let d2 = |f: &dyn Fn(f64) -> f64, s: f64| {
            (-f(s - 2.0 * h) + 16.0 * f(s - h) - 30.0 * f(s) + 16.0 * f(s + h) - f(s + 2.0 * h)) / (12.0 * h * h)
        };
        let u = self.velocity(x, t);
        let px = d1(&|s| self.pressure([s, x[1]], t), x[0]);
        let py = d1(&|s| self.pressure([x[0], s], t), x[1]);
        let gp = [px, py];
        let mut f = [0.0; 2];
        for i in 0..2 {
            let ut = d1(&|s| self.velocity(x, s)[i], t);
            let ux = d1(&|s| self.velocity([s, x[1]], t)[i], x[0]);
            let uy = d1(&|s| self.velocity([x[0], s], t)[i], x[1]);
            let lap = d2(&|s| self.velocity([s, x[1]], t)[i], x[0]) + d2(&|s| self.velocity([x[0], s], t)[i], x[1]);
            f[i] = ut - lap / self.re + u[0] * ux + u[1] * uy + gp[i];
        }
        f
    }

    /// `|f − f_fd|` at one point.
    pub fn forcing_residual(&self, x: Point, t: f64) -> f64 {
        let (a, b) = (self.forcing(x, t), self.forcing_fd(x, t));
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// `div u` at one point.
    pub fn divergence(&self, x: Point, t: f64) -> f64 {
        let j = self.velocity_jacobian(x, t);
        j[0][0] + j[1][1]
    }
}

impl Problem for ManufacturedSolution {
    fn initial_velocity(&self, x: Point) -> Point {
        self.velocity(x, 0.0)
    }

    fn forcing(&self, x: Point, t: f64) -> Point {
        ManufacturedSolution::forcing(self, x, t)
    }

    fn has_exact(&self) -> bool {
        true
    }

    fn exact_velocity(&self, x: Point, t: f64) -> Point {
        self.velocity(x, t)
    }

    fn exact_pressure(&self, x: Point, t: f64) -> f64 {
        self.pressure(x, t)
    }
}

/// The manufactured velocity at `t = 0` with no forcing: a decaying vortex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayingVortex {
    pub mms: ManufacturedSolution,
}

impl Problem for DecayingVortex {
    fn initial_velocity(&self, x: Point) -> Point {
        self.mms.velocity(x, 0.0)
    }

    fn forcing(&self, _x: Point, _t: f64) -> Point {
        [0.0, 0.0]
    }
}

// ---------------------------------------------------------------------------
// Errors

/// Discrete `L²(0,T;L²)` error `(k Σ_{n=1}^N |uⁿ − Π_P0 u(t_n)|²)^{1/2}`.
///
/// `history` must hold every time level `t_n = n k`, `n = 1..N`.
pub fn error_l2l2<F>(history: &[(f64, P0Vector)], k: f64, t_end: f64, exact: F, mesh: &Mesh) -> Result<f64>
where
    F: Fn(Point, f64) -> Point + Sync,
{
    let n = (t_end / k).round() as usize;
    if history.len() != n || n == 0 {
        return Err(Error::MissingSnapshots(format!("expected {n} time levels, got {}", history.len())));
    }
    let mut sum = 0.0;
    for (i, (t, u)) in history.iter().enumerate() {
        let want = (i + 1) as f64 * k;
        if (t - want).abs() > 1e-9 * t_end {
            return Err(Error::MissingSnapshots(format!("time level {} at t = {t}, expected {want}", i + 1)));
        }
        let pu = project_p0(&|x: Point| exact(x, *t), mesh);
        sum += k * u.lincomb(1.0, &pu, -1.0).l2_norm(mesh).powi(2);
    }
    Ok(sum.sqrt())
}

// ---------------------------------------------------------------------------
// Convergence study

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub levels: usize,
    pub alpha: f64,
    /// Cells per side on the coarsest level.
    pub base_resolution: usize,
    /// Time step on the coarsest level.
    pub k0: f64,
    pub t_end: f64,
    pub re: f64,
    pub solvers: Solvers,
    pub init: InitMode,
    /// Halve `k` with `h` instead of following the `h ≤ C k^α` coupling.
    /// Outside the convergence theorem's hypotheses.
    pub uncoupled: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            levels: 3,
            alpha: 1.5,
            base_resolution: 8,
            k0: 0.02,
            t_end: 0.4,
            re: 100.0,
            solvers: Solvers::default(),
            init: InitMode::BackwardEuler,
            uncoupled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub resolution: usize,
    pub h: f64,
    pub k: f64,
    pub steps: usize,
    pub err_l2l2_u: f64,
    /// Observed order against the previous level.
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub alpha: f64,
    pub uncoupled: bool,
    pub rows: Vec<StudyRow>,
}

impl ConvergenceStudy {
    pub fn errors_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err_l2l2_u < w[0].err_l2l2_u)
    }

    /// Largest `h_ℓ / (k_ℓ^α h₀/k₀^α)`; at most 1 when the coupling holds.
    pub fn coupling_ratio(&self) -> f64 {
        let r0 = &self.rows[0];
        let c = r0.h / r0.k.powf(self.alpha);
        self.rows.iter().map(|r| r.h / (c * r.k.powf(self.alpha))).fold(0.0, f64::max)
    }

    pub fn min_eoc(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.eoc).fold(f64::INFINITY, f64::min)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("level,h,k,err_l2l2_u,eoc\n");
        for r in &self.rows {
            let eoc = r.eoc.map(|e| format!("{e:.6}")).unwrap_or_default();
            s.push_str(&format!("{},{:?},{:?},{:e},{}\n", r.level, r.h, r.k, r.err_l2l2_u, eoc));
        }
        s
    }

    pub fn report(&self) -> String {
        let mut s = format!(
            "convergence study: alpha = {}, {}\n",
            self.alpha,
            if self.uncoupled {
                "uncoupled (k halves with h; outside the convergence theorem)"
            } else {
                "coupled h <= C k^alpha"
            }
        );
        for r in &self.rows {
            s.push_str(&format!(
                "  level {}: {}x{} h = {:.5} k = {:.6} N = {} error = {:.6e}{}\n",
                r.level,
                r.resolution,
                r.resolution,
                r.h,
                r.k,
                r.steps,
                r.err_l2l2_u,
                r.eoc.map(|e| format!(" eoc = {e:.3}")).unwrap_or_default()
            ));
        }
        s.push_str(&format!(
            "  decreasing: {}  coupling ratio: {:.4}\n",
            self.errors_decreasing(),
            self.coupling_ratio()
        ));
        s
    }
}

/// `log(e_{ℓ−1}/e_ℓ) / log(h_{ℓ−1}/h_ℓ)` for each level after the first.
pub fn eoc_from_table(h: &[f64], err: &[f64]) -> Vec<Option<f64>> {
    (0..err.len())
        .map(|i| (i > 0).then(|| (err[i - 1] / err[i]).ln() / (h[i - 1] / h[i]).ln()))
        .collect()
}

/// Time steps for each level: `N_ℓ = ⌊T / k̂_ℓ⌋` with `k̂_ℓ = k₀ (h_ℓ/h₀)^{1/α}`,
/// so that `k_ℓ = T/N_ℓ ≥ k̂_ℓ` and `h_ℓ ≤ C k_ℓ^α` with `C = h₀/k₀^α`.
pub fn time_schedule(h: &[f64], cfg: &StudyConfig) -> Vec<(f64, usize)> {
    let n0 = (cfg.t_end / cfg.k0).round();
    h.iter()
        .enumerate()
        .map(|(l, &hl)| {
            let target = if cfg.uncoupled {
                cfg.k0 / 2f64.powi(l as i32)
            } else {
                cfg.k0 * (hl / h[0]).powf(1.0 / cfg.alpha)
            };
            let n = if l == 0 { n0 } else { (cfg.t_end / target * (1.0 + 1e-12)).floor() };
            let n = n.max(2.0) as usize;
            (cfg.t_end / n as f64, n)
        })
        .collect()
}

/// Runs the manufactured solution on nested structured meshes. Levels run
/// concurrently; rows are ordered by level.
pub fn convergence_study(cfg: &StudyConfig) -> Result<ConvergenceStudy> {
    if cfg.levels < 2 {
        return Err(Error::Precondition(format!("a study needs at least 2 levels, got {}", cfg.levels)));
    }
    if !(cfg.alpha > 1.0) && !cfg.uncoupled {
        return Err(Error::Precondition(format!("alpha must exceed 1, got {}", cfg.alpha)));
    }
    let n0 = (cfg.t_end / cfg.k0).round();
    if !(cfg.k0 > 0.0) || (n0 * cfg.k0 - cfg.t_end).abs() > 1e-9 * cfg.t_end {
        return Err(Error::InvalidInput(format!("T = {} is not a multiple of k0 = {}", cfg.t_end, cfg.k0)));
    }
    let mms = builtin_mms(cfg.re)?;
    let res: Vec<usize> = (0..cfg.levels).map(|l| cfg.base_resolution << l).collect();
    let meshes = res
        .iter()
        .map(|&n| Mesh::generate_structured(n, n, Rect::UNIT))
        .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = meshes.iter().map(Mesh::h).collect();
    let schedule = time_schedule(&h, cfg);

    let errors = par::map_tasks(cfg.levels, |l| -> Result<f64> {
        let mesh = &meshes[l];
        let (k, _) = schedule[l];
        let disc = Discretization::new(mesh);
        let run_cfg = RunConfig {
            re: cfg.re,
            k,
            t_end: cfg.t_end,
            init: cfg.init,
            solvers: cfg.solvers.clone(),
            snapshot_every: usize::MAX,
            div_boundary: DivBoundary::AdjointConsistent,
        };
        let mut hist = History::default();
        scheme::run(&run_cfg, &mms, &disc, &mut [&mut hist])?;
        error_l2l2(&hist.levels, k, cfg.t_end, |x, t| mms.velocity(x, t), mesh)
    });
    let errors = errors.into_iter().collect::<Result<Vec<_>>>()?;
    let eoc = eoc_from_table(&h, &errors);
    let rows = (0..cfg.levels)
        .map(|l| StudyRow {
            level: l,
            resolution: res[l],
            h: h[l],
            k: schedule[l].0,
            steps: schedule[l].1,
            err_l2l2_u: errors[l],
            eoc: eoc[l],
        })
        .collect();
    Ok(ConvergenceStudy {
        alpha: cfg.alpha,
        uncoupled: cfg.uncoupled,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Random fields

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_p0_vector(rng: &mut impl Rng, mesh: &Mesh) -> P0Vector {
    P0Vector::from_components(random_vec(rng, mesh.n_cells()), random_vec(rng, mesh.n_cells()))
}

pub fn random_p1nc(rng: &mut impl Rng, mesh: &Mesh) -> P1ncField {
    P1ncField::new(random_vec(rng, mesh.n_edges()))
}

/// Vertices lying on the boundary.
pub fn boundary_vertices(mesh: &Mesh) -> Vec<bool> {
    let mut on = vec![false; mesh.vertices().len()];
    for (_, e) in mesh.boundary_edges() {
        on[e.vertices[0]] = true;
        on[e.vertices[1]] = true;
    }
    on
}

/// `curl ψ = (∂ψ/∂y, −∂ψ/∂x)` of the continuous piecewise-linear function
/// with vertex values `psi`. Lies in `P0 ∩ RT0` when `psi` vanishes on the
/// boundary.
pub fn curl_of_vertex_stream(psi: &[f64], mesh: &Mesh) -> P0Vector {
    let v: Vec<Point> = (0..mesh.n_cells())
        .map(|t| {
            let tri = &mesh.triangles()[t];
            let p = mesh.triangle_points(t);
            // ∇λ_i = rot(p_{i+2} − p_{i+1}) / (2|K|) for CCW vertices.
            let mut gpsi = [0.0; 2];
            for i in 0..3 {
                let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                let gl = [(a[1] - b[1]) / (2.0 * tri.area), (b[0] - a[0]) / (2.0 * tri.area)];
                let s = psi[tri.vertices[i]];
                gpsi[0] += s * gl[0];
                gpsi[1] += s * gl[1];
            }
            [gpsi[1], -gpsi[0]]
        })
        .collect();
    P0Vector {
        x: v.iter().map(|a| a[0]).collect(),
        y: v.iter().map(|a| a[1]).collect(),
    }
}

/// Random discretely divergence-free field from a random vertex stream
/// function that vanishes on the boundary.
pub fn random_div_free(rng: &mut impl Rng, mesh: &Mesh) -> P0Vector {
    let on = boundary_vertices(mesh);
    let psi: Vec<f64> = on.iter().map(|&b| if b { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
    curl_of_vertex_stream(&psi, mesh)
}

/// Smooth divergence-free field: curl of `sin²(πx̂) sin²(πŷ)` in bounding-box
/// coordinates, interpolated at vertices.
pub fn smooth_div_free(mesh: &Mesh) -> P0Vector {
    let vs = mesh.vertices();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in vs {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let on = boundary_vertices(mesh);
    let psi: Vec<f64> = vs
        .iter()
        .zip(&on)
        .map(|(v, &b)| {
            if b {
                return 0.0;
            }
            let s = (std::f64::consts::PI * (v[0] - lo[0]) / (hi[0] - lo[0])).sin();
            let t = (std::f64::consts::PI * (v[1] - lo[1]) / (hi[1] - lo[1])).sin();
            (s * t).powi(2)
        })
        .collect();
    curl_of_vertex_stream(&psi, mesh)
}

// ---------------------------------------------------------------------------
// Measured constants

/// Solver settings for the inner solves of the eigenvalue iterations.
fn inner_cfg() -> SolverConfig {
    SolverConfig::default().with_rtol(1e-12)
}

const POWER_MAX_ITER: usize = 400;
const POWER_RTOL: f64 = 1e-7;

fn normalize(x: &mut [f64]) {
    let n = par::dot(x, x).sqrt();
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

/// Largest eigenvalue of `K⁻¹ B` for symmetric positive semidefinite `B`
/// (applied by `apply_b`) and the symmetric positive definite `K`, by power
/// iteration on the Rayleigh quotient.
fn generalized_power<F>(apply_b: F, k: &CsrMatrix, kblocks: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = k.nrows() * kblocks;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = random_vec(&mut rng, n);
    normalize(&mut x);
    let cfg = inner_cfg();
    let mut lambda = 0.0;
    let kmul = |x: &[f64]| -> Vec<f64> { x.chunks(k.nrows()).flat_map(|c| k.matvec(c)).collect() };
    for _ in 0..POWER_MAX_ITER {
        let bx = apply_b(&x);
        let kx = kmul(&x);
        let next_lambda = par::dot(&x, &bx) / par::dot(&x, &kx);
        let mut y = Vec::with_capacity(n);
        for c in bx.chunks(k.nrows()) {
            let (sol, _) = linalg::solve_spd_deflated(k, c, None::<ConstantMode>, &cfg)?;
            y.extend(sol);
        }
        normalize(&mut y);
        x = y;
        let done = (next_lambda - lambda).abs() <= POWER_RTOL * next_lambda.abs();
        lambda = next_lambda;
        if done {
            break;
        }
    }
    Ok(lambda)
}

/// `sup_v |div_h v| / ‖v‖_h` over P0 vector fields.
pub fn div_stability_constant(mesh: &Mesh, seed: u64) -> Result<f64> {
    let k = operators::assemble_p0_stiffness(mesh);
    let n = mesh.n_cells();
    let m1 = edge_mass(mesh);
    let [dx, dy] = operators::assemble_divergence(mesh, DivBoundary::AdjointConsistent);
    let (dxt, dyt) = (dx.transpose(), dy.transpose());
    let apply = |z: &[f64]| -> Vec<f64> {
        let (vx, vy) = z.split_at(n);
        let d: Vec<f64> = dx.matvec(vx).iter().zip(dy.matvec(vy)).zip(&m1).map(|((a, b), m)| m * (a + b)).collect();
        let mut out = dxt.matvec(&d);
        out.extend(dyt.matvec(&d));
        out
    };
    Ok(generalized_power(apply, &k, 2, seed)?.max(0.0).sqrt())
}

/// `sup_{v,w} |b_h(u, v, w)| / (|u| ‖v‖_h ‖w‖_h)` for a fixed advecting
/// field `u` with continuous normal components.
pub fn convection_constant(u: &P0Vector, mesh: &Mesh, seed: u64) -> Result<Option<f64>> {
    let unorm = u.l2_norm(mesh);
    if unorm == 0.0 {
        return Ok(None);
    }
    let flux = operators::flux_from_p0(u, mesh);
    let b = operators::assemble_convection_integrated(&flux, mesh)?;
    let bt = b.transpose();
    let k = operators::assemble_p0_stiffness(mesh);
    let cfg = inner_cfg();
    let apply = |x: &[f64]| -> Result<Vec<f64>> {
        let (y, _) = linalg::solve_spd_deflated(&k, &b.matvec(x), None::<ConstantMode>, &cfg)?;
        Ok(bt.matvec(&y))
    };
    // Bᵀ K⁻¹ B is applied with one inner solve; errors surface afterwards.
    let failure = std::cell::RefCell::new(None);
    let sigma2 = generalized_power(
        |x| match apply(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                vec![0.0; x.len()]
            }
        },
        &k,
        1,
        seed,
    )?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(Some(sigma2.max(0.0).sqrt() / unorm))
}

/// Discrete Poincaré constant `sup_v |v| / ‖v‖_h`, by inverse iteration.
pub fn poincare_constant(mesh: &Mesh, seed: u64) -> Result<f64> {
    let k = operators::assemble_p0_stiffness(mesh);
    let m = fields::cell_areas(mesh);
    let lambda = generalized_power(|x| x.iter().zip(&m).map(|(a, b)| a * b).collect(), &k, 1, seed)?;
    Ok(lambda.max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// Identity suite

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityEntry {
    pub property: &'static str,
    pub passed: bool,
    pub trials: usize,
    /// Worst relative defect (identities) or worst observed ratio.
    pub worst: f64,
    pub tolerance: f64,
    /// Measured constant for inequality-type properties.
    pub constant: Option<f64>,
    /// Seed of the worst trial.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub mesh_hash: String,
    pub entries: Vec<IdentityEntry>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn entry(&self, property: &str) -> Option<&IdentityEntry> {
        self.entries.iter().find(|e| e.property == property)
    }

    /// First failing entry as an error.
    pub fn check(&self) -> Result<()> {
        match self.entries.iter().find(|e| !e.passed) {
            None => Ok(()),
            Some(e) => Err(Error::IdentityViolation {
                property: e.property.to_string(),
                seed: e.seed,
                detail: format!("defect {:e} exceeds {:e}", e.worst, e.tolerance),
            }),
        }
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "identity suite, mesh {}", self.mesh_hash)?;
        for e in &self.entries {
            write!(
                f,
                "{} {:<22} trials={:<3} worst={:.3e} tol={:.1e}",
                if e.passed { "PASS" } else { "FAIL" },
                e.property,
                e.trials,
                e.worst,
                e.tolerance
            )?;
            if let Some(c) = e.constant {
                write!(f, " C={c:.6}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityOptions {
    pub trials: usize,
    pub seed: u64,
    pub div_boundary: DivBoundary,
    /// Also compute the inequality constants (one eigenvalue iteration each).
    pub constants: bool,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            trials: 50,
            seed: 1,
            div_boundary: DivBoundary::AdjointConsistent,
            constants: true,
        }
    }
}

struct Tracker {
    property: &'static str,
    tolerance: f64,
    worst: f64,
    seed: u64,
    trials: usize,
}

impl Tracker {
    fn new(property: &'static str, tolerance: f64) -> Self {
        Tracker {
            property,
            tolerance,
            worst: 0.0,
            seed: 0,
            trials: 0,
        }
    }

    fn add(&mut self, defect: f64, seed: u64) {
        self.trials += 1;
        if !(defect <= self.worst) {
            self.worst = defect;
            self.seed = seed;
        }
    }

    fn finish(self, constant: Option<f64>) -> IdentityEntry {
        IdentityEntry {
            property: self.property,
            passed: self.worst <= self.tolerance,
            trials: self.trials,
            worst: self.worst,
            tolerance: self.tolerance,
            constant,
            seed: self.seed,
        }
    }
}

fn rel(defect: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        defect.abs()
    } else {
        defect.abs() / scale
    }
}

pub const ADJOINTNESS_TOL: f64 = 1e-12;
pub const COERCIVITY_TOL: f64 = 1e-12;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const MATRIX_SYMMETRY_TOL: f64 = 1e-14;

/// Seeded random checks of the discrete identities and inequalities. Each
/// trial uses its own seed `seed + trial` so failures are reproducible.
pub fn identity_suite(mesh: &Mesh, opts: &IdentityOptions) -> Result<IdentityReport> {
    let mut adj = Tracker::new("adjointness", ADJOINTNESS_TOL);
    let mut coer = Tracker::new("coercivity", COERCIVITY_TOL);
    let mut sym = Tracker::new("symmetry", SYMMETRY_TOL);
    let mut divs = Tracker::new("div stability", f64::INFINITY);
    let mut dissip = Tracker::new("upwind dissipativity", 1e-12);
    let mut mean = Tracker::new("div zero mean", 1e-12);

    for trial in 0..opts.trials {
        let seed = opts.seed.wrapping_add(trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_p0_vector(&mut rng, mesh);
        let q = random_p1nc(&mut rng, mesh);
        let gq = operators::grad_h(&q, mesh);
        let dv = operators::div_h_with(&v, mesh, opts.div_boundary);
        let lhs = v.inner(&gq, mesh)?;
        let rhs = q.inner(&dv, mesh)?;
        let scale = v.l2_norm(mesh) * gq.l2_norm(mesh) + q.l2_norm(mesh) * dv.l2_norm(mesh);
        adj.add(rel(lhs + rhs, scale), seed);
        mean.add(rel(dv.integral(mesh), v.l2_norm(mesh) * mesh.area().sqrt()), seed);

        let a = P0Scalar(random_vec(&mut rng, mesh.n_cells()));
        let b = P0Scalar(random_vec(&mut rng, mesh.n_cells()));
        let la = P0Scalar(operators::apply_laplacian_p0(&a.0, mesh));
        let lb = P0Scalar(operators::apply_laplacian_p0(&b.0, mesh));
        let nh = h_inner_scalar(&a.0, &a.0, mesh);
        coer.add(rel(-la.inner(&a, mesh)? - nh, nh), seed);
        let (ab, ba) = (la.inner(&b, mesh)?, a.inner(&lb, mesh)?);
        let s = la.l2_norm(mesh) * b.l2_norm(mesh) + a.l2_norm(mesh) * lb.l2_norm(mesh);
        sym.add(rel(ab - ba, s), seed);

        let nv = fields::norm_h(&v, mesh);
        if nv > 0.0 {
            divs.add(dv.l2_norm(mesh) / nv, seed);
        }

        let u = random_div_free(&mut rng, mesh);
        let flux = operators::flux_from_p0(&u, mesh);
        let w = random_p0_vector(&mut rng, mesh);
        let bvv = operators::trilinear_b_h(&flux, &w, &w, mesh)?;
        let scale = u.max_abs() * w.l2_norm(mesh).powi(2) / mesh.h();
        dissip.add(if bvv >= 0.0 { 0.0 } else { rel(bvv, scale) }, seed);
    }

    let lap = operators::assemble_laplacian_p0(mesh);
    let mut msym = Tracker::new("symmetry (matrix)", MATRIX_SYMMETRY_TOL);
    msym.add(rel(lap.asymmetry(), lap.max_abs()), opts.seed);

    let (c_div, c_conv) = if opts.constants {
        let c_div = div_stability_constant(mesh, opts.seed)?;
        let c_conv = convection_constant(&smooth_div_free(mesh), mesh, opts.seed)?;
        (Some(c_div), c_conv)
    } else {
        (None, None)
    };
    let mut conv = Tracker::new("convection bound", f64::INFINITY);
    if let Some(c) = c_conv {
        conv.add(c, opts.seed);
    }
    let mut entries = vec![
        adj.finish(None),
        coer.finish(None),
        sym.finish(None),
        msym.finish(None),
        mean.finish(None),
    ];
    // A measured sup must bound every sampled ratio.
    let mut div_entry = divs.finish(c_div);
    if let Some(c) = c_div {
        div_entry.tolerance = c * (1.0 + 1e-6);
        div_entry.passed = div_entry.worst <= div_entry.tolerance;
    }
    entries.push(div_entry);
    entries.push(conv.finish(c_conv));
    entries.push(dissip.finish(None));
    Ok(IdentityReport {
        mesh_hash: mesh.hash().to_string(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// Consistency of the two-point laplacian

/// `(cos πx cos πy, cos 2πx cos 2πy)`: smooth with zero normal derivative on
/// the unit square.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumannField;

impl VectorFn for NeumannField {
    fn eval(&self, x: Point) -> Point {
        use std::f64::consts::PI;
        [
            (PI * x[0]).cos() * (PI * x[1]).cos(),
            (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos(),
        ]
    }

    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        use std::f64::consts::PI;
        let (a, b) = (PI * x[0], PI * x[1]);
        [
            [-PI * a.sin() * b.cos(), -PI * a.cos() * b.sin()],
            [
                -2.0 * PI * (2.0 * a).sin() * (2.0 * b).cos(),
                -2.0 * PI * (2.0 * a).cos() * (2.0 * b).sin(),
            ],
        ]
    }

    fn laplacian(&self, x: Point) -> Point {
        use std::f64::consts::PI;
        let v = self.eval(x);
        [-2.0 * PI * PI * v[0], -8.0 * PI * PI * v[1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub h: Vec<f64>,
    pub defect: Vec<f64>,
    /// `defect(h/2) / defect(h)` per refinement.
    pub ratios: Vec<f64>,
    pub precondition_met: bool,
    pub band: (f64, f64),
}

impl ConsistencyReport {
    /// True when the precondition is unmet (nothing to assert) or every
    /// ratio lies in the band.
    pub fn passed(&self) -> bool {
        !self.precondition_met || self.ratios.iter().all(|r| (self.band.0..=self.band.1).contains(r))
    }

    pub fn check(&self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            Err(Error::OrderViolation(format!(
                "defect ratios {:?} outside [{}, {}]",
                self.ratios, self.band.0, self.band.1
            )))
        }
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.precondition_met {
            return writeln!(f, "consistency: precondition unmet (nonzero normal derivative on the boundary)");
        }
        for (i, (h, d)) in self.h.iter().zip(&self.defect).enumerate() {
            write!(f, "  h = {h:.5} defect = {d:.6e}")?;
            if i > 0 {
                write!(f, " ratio = {:.4}", self.ratios[i - 1])?;
            }
            writeln!(f)?;
        }
        writeln!(f, "{} consistency", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Largest `|∇v·n|` sampled along the boundary edges.
pub fn boundary_normal_derivative<F: VectorFn + ?Sized>(v: &F, mesh: &Mesh) -> f64 {
    let mut worst: f64 = 0.0;
    for (_, e) in mesh.boundary_edges() {
        for s in [0.1, 0.5, 0.9] {
            let [a, b] = [mesh.vertices()[e.vertices[0]], mesh.vertices()[e.vertices[1]]];
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let j = v.jacobian(x);
            for row in j {
                worst = worst.max((row[0] * e.normal[0] + row[1] * e.normal[1]).abs());
            }
        }
    }
    worst
}

/// `‖Π_P0(Δv) − Δ̃_h(Π̃_P0 v)‖_{−1,h}` on one mesh, with the two-point
/// laplacian taken without boundary terms to match the zero normal
/// derivative of `v`.
pub fn consistency_defect<F: VectorFn + ?Sized>(v: &F, mesh: &Mesh, cfg: &SolverConfig) -> Result<f64> {
    let lap = project_p0(&|x: Point| v.laplacian(x), mesh);
    let pv = project_tilde_p0(&|x: Point| v.eval(x), mesh);
    let dx = operators::apply_laplacian_p0_neumann(&pv.x, mesh);
    let dy = operators::apply_laplacian_p0_neumann(&pv.y, mesh);
    let diff = P0Vector::from_components(
        lap.x.iter().zip(&dx).map(|(a, b)| a - b).collect(),
        lap.y.iter().zip(&dy).map(|(a, b)| a - b).collect(),
    );
    fields::norm_dual(&diff, mesh, cfg)
}

pub const CONSISTENCY_BAND: (f64, f64) = (0.35, 0.65);

/// Consistency defect on a sequence of meshes with halving `h`.
pub fn consistency_order_test<F: VectorFn + ?Sized>(v: &F, meshes: &[Mesh]) -> Result<ConsistencyReport> {
    if meshes.len() < 2 {
        return Err(Error::Precondition("consistency test needs at least two meshes".into()));
    }
    let met = meshes.iter().all(|m| boundary_normal_derivative(v, m) <= 1e-8);
    let h: Vec<f64> = meshes.iter().map(Mesh::h).collect();
    if !met {
        return Ok(ConsistencyReport {
            h,
            defect: Vec::new(),
            ratios: Vec::new(),
            precondition_met: false,
            band: CONSISTENCY_BAND,
        });
    }
    let cfg = SolverConfig::default().with_rtol(1e-12);
    let defect = par::map_tasks(meshes.len(), |i| consistency_defect(v, &meshes[i], &cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ratios = defect.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(ConsistencyReport {
        h,
        defect,
        ratios,
        precondition_met: true,
        band: CONSISTENCY_BAND,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::kite;

    #[test]
    fn g_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &s in &[0.1, 0.37, 0.8] {
            for d in 0..3 {
                let fd = (g(s + h)[d] - g(s - h)[d]) / (2.0 * h);
                assert!((fd - g(s)[d + 1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn mms_is_divergence_free_and_vanishes_on_boundary() {
        let m = builtin_mms(100.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            assert!(m.divergence(x, rng.gen_range(0.0..1.0)).abs() < 1e-12);
            let s = rng.gen_range(0.0..1.0);
            for b in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
                let u = m.velocity(b, 0.3);
                assert!(u[0].abs() < 1e-14 && u[1].abs() < 1e-14);
            }
        }
        assert!(builtin_mms(0.0).is_err());
    }

    #[test]
    fn random_div_free_fields_are_discretely_div_free() {
        let mesh = Mesh::generate_structured(6, 6, Rect::UNIT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_div_free(&mut rng, &mesh);
        let d = operators::div_h(&u, &mesh);
        assert!(d.values.iter().all(|v| v.abs() < 1e-10));
        assert!(operators::max_normal_jump(&u, &mesh) < 1e-12);
    }

    #[test]
    fn eoc_table_is_pure() {
        let e = eoc_from_table(&[0.2, 0.1, 0.05], &[4.0, 2.0, 1.0]);
        assert_eq!(e[0], None);
        assert!((e[1].unwrap() - 1.0).abs() < 1e-12 && (e[2].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_needs_every_level() {
        let mesh = kite();
        let z = P0Vector::zeros(&mesh);
        let hist = vec![(0.1, z.clone()), (0.2, z.clone())];
        assert_eq!(error_l2l2(&hist, 0.1, 0.2, |_, _| [0.0, 0.0], &mesh).unwrap(), 0.0);
        assert!(matches!(
            error_l2l2(&hist[..1], 0.1, 0.2, |_, _| [0.0, 0.0], &mesh),
            Err(Error::MissingSnapshots(_))
        ));
    }

    #[test]
    fn kite_identities_pass() {
        let r = identity_suite(&kite(), &IdentityOptions { trials: 20, ..Default::default() }).unwrap();
        assert!(r.passed(), "{r}");
        let empty = identity_suite(&kite(), &IdentityOptions { trials: 0, constants: false, ..Default::default() }).unwrap();
        assert!(empty.passed());
    }
}
