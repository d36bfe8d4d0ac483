//! Discrete function spaces, projections and norms.
//!
//! * [`P0Scalar`] / [`P0Vector`]: one value per triangle.
//! * [`P1ncField`]: Crouzeix-Raviart, one value per edge midpoint.
//! * [`Rt0Flux`]: lowest-order Raviart-Thomas, one normal flux per edge,
//!   measured along the edge's stored normal; zero on the boundary.
//!
//! Projections use fixed rules (see [`crate::quadrature`]) so that results
//! are reproducible. The L² inner product on P1nc is the three-midpoint rule,
//! which is exact for products of piecewise-affine functions.

use crate::error::{Error, Result};
use crate::linalg::{self, ConstantMode, SolverConfig};
use crate::mesh::Mesh;
use crate::operators;
use crate::par;
use crate::quadrature;
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct P0Scalar(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct P0Vector {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct P1ncField {
    pub values: Vec<f64>,
    /// Set when the field has been centered to zero integral.
    pub zero_mean: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rt0Flux(pub Vec<f64>);

impl P0Scalar {
    pub fn zeros(mesh: &Mesh) -> Self {
        P0Scalar(vec![0.0; mesh.n_cells()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl P0Vector {
    pub fn zeros(mesh: &Mesh) -> Self {
        let n = mesh.n_cells();
        P0Vector {
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    pub fn from_components(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        P0Vector { x, y }
    }

    pub fn constant(mesh: &Mesh, c: Point) -> Self {
        let n = mesh.n_cells();
        P0Vector {
            x: vec![c[0]; n],
            y: vec![c[1]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn get(&self, cell: usize) -> Point {
        [self.x[cell], self.y[cell]]
    }

    #[inline]
    pub fn set(&mut self, cell: usize, v: Point) {
        self.x[cell] = v[0];
        self.y[cell] = v[1];
    }

    pub fn component(&self, i: usize) -> &[f64] {
        match i {
            0 => &self.x,
            1 => &self.y,
            _ => panic!("component index {i} out of range"),
        }
    }

    /// `a·self + b·other`, componentwise.
    pub fn lincomb(&self, a: f64, other: &P0Vector, b: f64) -> P0Vector {
        let n = self.len();
        P0Vector {
            x: (0..n).map(|i| a * self.x[i] + b * other.x[i]).collect(),
            y: (0..n).map(|i| a * self.y[i] + b * other.y[i]).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> P0Vector {
        P0Vector {
            x: self.x.iter().map(|v| a * v).collect(),
            y: self.y.iter().map(|v| a * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }
}

impl P1ncField {
    pub fn zeros(mesh: &Mesh) -> Self {
        P1ncField {
            values: vec![0.0; mesh.n_edges()],
            zero_mean: true,
        }
    }

    pub fn new(values: Vec<f64>) -> Self {
        P1ncField {
            values,
            zero_mean: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫_Ω q dx`, exact for the piecewise-affine field.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        let m = edge_mass(mesh);
        par::sum_by(self.len(), |i| m[i] * self.values[i])
    }

    /// Subtracts the mean so that the integral vanishes.
    pub fn centered(&self, mesh: &Mesh) -> P1ncField {
        let mean = self.integral(mesh) / mesh.area();
        P1ncField {
            values: self.values.iter().map(|v| v - mean).collect(),
            zero_mean: true,
        }
    }

    /// Value of the piecewise-affine field at the centroid of `cell`.
    pub fn cell_average(&self, mesh: &Mesh, cell: usize) -> f64 {
        mesh.triangles()[cell].edges.iter().map(|&e| self.values[e]).sum::<f64>() / 3.0
    }

    /// Evaluates the piecewise-affine field at a point of `cell`.
    pub fn eval_in_cell(&self, mesh: &Mesh, cell: usize, x: Point) -> f64 {
        // On K the Crouzeix-Raviart basis function of the edge opposite
        // vertex i is 1 − 2 λ_i.
        let lambda = barycentric(mesh.triangle_points(cell), x);
        let tri = &mesh.triangles()[cell];
        (0..3).map(|i| self.values[tri.edges[i]] * (1.0 - 2.0 * lambda[i])).sum()
    }
}

impl Rt0Flux {
    pub fn zeros(mesh: &Mesh) -> Self {
        Rt0Flux(vec![0.0; mesh.n_edges()])
    }

    /// Flux through `edge` measured along the normal pointing out of `cell`.
    #[inline]
    pub fn outward(&self, mesh: &Mesh, cell: usize, edge: usize) -> f64 {
        mesh.edge_sign(cell, edge) * self.0[edge]
    }

    /// `Σ_σ |σ| (u·n_{K,σ})` for one cell.
    pub fn net_outflow(&self, mesh: &Mesh, cell: usize) -> f64 {
        mesh.triangles()[cell]
            .edges
            .iter()
            .map(|&e| mesh.edges()[e].length * self.outward(mesh, cell, e))
            .sum()
    }

    pub fn max_boundary_flux(&self, mesh: &Mesh) -> f64 {
        mesh.boundary_edges().map(|(i, _)| self.0[i].abs()).fold(0.0, f64::max)
    }

    /// Value of the reconstructed Raviart-Thomas field at `x` in `cell`.
    pub fn eval_in_cell(&self, mesh: &Mesh, cell: usize, x: Point) -> Point {
        let tri = &mesh.triangles()[cell];
        let p = mesh.triangle_points(cell);
        let mut v = [0.0; 2];
        for (&e, pi) in tri.edges.iter().zip(&p) {
            let s = self.outward(mesh, cell, e) * mesh.edges()[e].length / (2.0 * tri.area);
            v[0] += s * (x[0] - pi[0]);
            v[1] += s * (x[1] - pi[1]);
        }
        v
    }

    pub fn lincomb(&self, a: f64, other: &Rt0Flux, b: f64) -> Rt0Flux {
        Rt0Flux(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }
}

pub(crate) fn barycentric(p: [Point; 3], x: Point) -> [f64; 3] {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let l1 = ((x[0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (x[1] - p[0][1])) / det;
    let l2 = ((p[1][0] - p[0][0]) * (x[1] - p[0][1]) - (x[0] - p[0][0]) * (p[1][1] - p[0][1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Lumped P1nc mass: `Σ_{K ∋ σ} |K| / 3` per edge.
pub fn edge_mass(mesh: &Mesh) -> Vec<f64> {
    let tris = mesh.triangles();
    mesh.edges()
        .iter()
        .map(|e| (tris[e.k].area + e.l.map_or(0.0, |l| tris[l].area)) / 3.0)
        .collect()
}

pub fn cell_areas(mesh: &Mesh) -> Vec<f64> {
    mesh.triangles().iter().map(|t| t.area).collect()
}

// ---------------------------------------------------------------------------
// Smooth fields

const FD_STEP: f64 = 1e-3;

/// Fourth-order central first derivative.
fn fd1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative.
fn fd2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h * h)
}

/// A smooth scalar function on the plane. Derivatives default to
/// fourth-order finite differences.
pub trait ScalarFn: Sync {
    fn eval(&self, x: Point) -> f64;

    fn gradient(&self, x: Point) -> Point {
        [
            fd1(|s| self.eval([s, x[1]]), x[0], FD_STEP),
            fd1(|s| self.eval([x[0], s]), x[1], FD_STEP),
        ]
    }

    fn laplacian(&self, x: Point) -> f64 {
        fd2(|s| self.eval([s, x[1]]), x[0], FD_STEP) + fd2(|s| self.eval([x[0], s]), x[1], FD_STEP)
    }
}

/// A smooth vector function on the plane.
pub trait VectorFn: Sync {
    fn eval(&self, x: Point) -> Point;

    /// `jacobian[i][j] = ∂v_i / ∂x_j`.
    fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        let mut j = [[0.0; 2]; 2];
        for (i, row) in j.iter_mut().enumerate() {
            row[0] = fd1(|s| self.eval([s, x[1]])[i], x[0], FD_STEP);
            row[1] = fd1(|s| self.eval([x[0], s])[i], x[1], FD_STEP);
        }
        j
    }

    fn laplacian(&self, x: Point) -> Point {
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = fd2(|s| self.eval([s, x[1]])[i], x[0], FD_STEP)
                + fd2(|s| self.eval([x[0], s])[i], x[1], FD_STEP);
        }
        out
    }
}

impl<F: Fn(Point) -> f64 + Sync> ScalarFn for F {
    fn eval(&self, x: Point) -> f64 {
        self(x)
    }
}

impl<F: Fn(Point) -> Point + Sync> VectorFn for F {
    fn eval(&self, x: Point) -> Point {
        self(x)
    }
}

// ---------------------------------------------------------------------------
// Projections

/// Cell averages of a scalar function.
pub fn project_p0_scalar<F: ScalarFn + ?Sized>(f: &F, mesh: &Mesh) -> P0Scalar {
    P0Scalar(par::map(mesh.n_cells(), |t| {
        quadrature::triangle_average(mesh.triangle_points(t), |x| f.eval(x))
    }))
}

/// Cell averages of a vector function.
pub fn project_p0<F: VectorFn + ?Sized>(f: &F, mesh: &Mesh) -> P0Vector {
    let vals: Vec<Point> = par::map(mesh.n_cells(), |t| {
        let p = mesh.triangle_points(t);
        [
            quadrature::triangle_average(p, |x| f.eval(x)[0]),
            quadrature::triangle_average(p, |x| f.eval(x)[1]),
        ]
    });
    P0Vector {
        x: vals.iter().map(|v| v[0]).collect(),
        y: vals.iter().map(|v| v[1]).collect(),
    }
}

/// Circumcenter values of a scalar function.
pub fn project_tilde_p0_scalar<F: ScalarFn + ?Sized>(f: &F, mesh: &Mesh) -> P0Scalar {
    P0Scalar(par::map(mesh.n_cells(), |t| f.eval(mesh.triangles()[t].circumcenter)))
}

/// Circumcenter values of a vector function.
pub fn project_tilde_p0<F: VectorFn + ?Sized>(f: &F, mesh: &Mesh) -> P0Vector {
    let vals: Vec<Point> = par::map(mesh.n_cells(), |t| f.eval(mesh.triangles()[t].circumcenter));
    P0Vector {
        x: vals.iter().map(|v| v[0]).collect(),
        y: vals.iter().map(|v| v[1]).collect(),
    }
}

/// Edge averages: the Crouzeix-Raviart interpolant.
pub fn project_p1nc<F: ScalarFn + ?Sized>(f: &F, mesh: &Mesh) -> P1ncField {
    P1ncField::new(par::map(mesh.n_edges(), |e| {
        let [a, b] = mesh.edge_points(e);
        quadrature::edge_average(a, b, |x| f.eval(x))
    }))
}

/// Edge averages of the normal component. Boundary fluxes are forced to
/// zero; a warning is logged when the input had a noticeable normal trace.
pub fn project_rt0<F: VectorFn + ?Sized>(f: &F, mesh: &Mesh) -> Rt0Flux {
    let mut flux: Vec<f64> = par::map(mesh.n_edges(), |e| {
        let edge = &mesh.edges()[e];
        let [a, b] = mesh.edge_points(e);
        let n = edge.normal;
        quadrature::edge_average(a, b, |x| {
            let v = f.eval(x);
            v[0] * n[0] + v[1] * n[1]
        })
    });
    let mut worst: f64 = 0.0;
    for (e, _) in mesh.boundary_edges() {
        worst = worst.max(flux[e].abs());
        flux[e] = 0.0;
    }
    if worst > 1e-12 {
        log::warn!("project_rt0: forced boundary normal flux {worst:e} to zero");
    }
    Rt0Flux(flux)
}

/// `|v − Π_RT0 v|_{L²}` with the Raviart-Thomas field reconstructed per cell.
pub fn rt0_l2_error<F: VectorFn + ?Sized>(f: &F, flux: &Rt0Flux, mesh: &Mesh) -> f64 {
    par::sum_by(mesh.n_cells(), |t| {
        let area = mesh.triangles()[t].area;
        area * quadrature::triangle_average(mesh.triangle_points(t), |x| {
            let v = f.eval(x);
            let r = flux.eval_in_cell(mesh, t, x);
            (v[0] - r[0]).powi(2) + (v[1] - r[1]).powi(2)
        })
    })
    .sqrt()
}

/// `|v − v_h|_{L²}` for a P0 field against a smooth function.
pub fn p0_l2_error<F: VectorFn + ?Sized>(f: &F, v: &P0Vector, mesh: &Mesh) -> f64 {
    par::sum_by(mesh.n_cells(), |t| {
        let area = mesh.triangles()[t].area;
        let vt = v.get(t);
        area * quadrature::triangle_average(mesh.triangle_points(t), |x| {
            let w = f.eval(x);
            (w[0] - vt[0]).powi(2) + (w[1] - vt[1]).powi(2)
        })
    })
    .sqrt()
}

// ---------------------------------------------------------------------------
// Inner products and norms

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::SpaceMismatch(format!("{what}: length {got}, expected {want}")));
    }
    Ok(())
}

/// Fields that carry an L² inner product.
pub trait L2Space {
    fn inner(&self, other: &Self, mesh: &Mesh) -> Result<f64>;

    fn l2_norm(&self, mesh: &Mesh) -> f64 {
        self.inner(self, mesh).map(f64::sqrt).unwrap_or(f64::NAN)
    }
}

impl L2Space for P0Scalar {
    fn inner(&self, other: &Self, mesh: &Mesh) -> Result<f64> {
        check_len("P0 scalar", self.len(), mesh.n_cells())?;
        check_len("P0 scalar", other.len(), mesh.n_cells())?;
        let t = mesh.triangles();
        Ok(par::sum_by(self.len(), |i| t[i].area * self.0[i] * other.0[i]))
    }
}

impl L2Space for P0Vector {
    fn inner(&self, other: &Self, mesh: &Mesh) -> Result<f64> {
        check_len("P0 vector", self.len(), mesh.n_cells())?;
        check_len("P0 vector", other.len(), mesh.n_cells())?;
        let t = mesh.triangles();
        Ok(par::sum_by(self.len(), |i| {
            t[i].area * (self.x[i] * other.x[i] + self.y[i] * other.y[i])
        }))
    }
}

impl L2Space for P1ncField {
    fn inner(&self, other: &Self, mesh: &Mesh) -> Result<f64> {
        check_len("P1nc", self.len(), mesh.n_edges())?;
        check_len("P1nc", other.len(), mesh.n_edges())?;
        let m = edge_mass(mesh);
        Ok(par::sum_by(self.len(), |i| m[i] * self.values[i] * other.values[i]))
    }
}

/// Bilinear form whose diagonal is `‖·‖_h²`.
pub fn h_inner_scalar(a: &[f64], b: &[f64], mesh: &Mesh) -> f64 {
    let edges = mesh.edges();
    par::sum_by(edges.len(), |i| {
        let e = &edges[i];
        match e.l {
            Some(l) => e.tau * (a[l] - a[e.k]) * (b[l] - b[e.k]),
            None => e.tau * a[e.k] * b[e.k],
        }
    })
}

pub fn norm_h_scalar(v: &P0Scalar, mesh: &Mesh) -> f64 {
    h_inner_scalar(&v.0, &v.0, mesh).sqrt()
}

/// Discrete H¹₀ norm of a P0 vector field.
pub fn norm_h(v: &P0Vector, mesh: &Mesh) -> f64 {
    (h_inner_scalar(&v.x, &v.x, mesh) + h_inner_scalar(&v.y, &v.y, mesh)).sqrt()
}

/// Dual norm `‖v‖_{−1,h}` of a scalar P0 field.
///
/// Solves `⟨w, ψ⟩_h = (v, ψ)` for all P0 `ψ` and returns `‖w‖_h`; the
/// supremum in the definition is attained at `ψ = w`.
pub fn norm_dual_scalar(v: &[f64], mesh: &Mesh, cfg: &SolverConfig) -> Result<f64> {
    Ok(dual_representer(v, mesh, cfg)?.1)
}

/// Riesz representer `w` of `v` in `⟨·,·⟩_h` together with `‖w‖_h`.
pub fn dual_representer(v: &[f64], mesh: &Mesh, cfg: &SolverConfig) -> Result<(Vec<f64>, f64)> {
    check_len("P0 scalar", v.len(), mesh.n_cells())?;
    if v.iter().all(|&x| x == 0.0) {
        return Ok((vec![0.0; v.len()], 0.0));
    }
    let k = operators::assemble_p0_stiffness(mesh);
    let rhs: Vec<f64> = mesh.triangles().iter().zip(v).map(|(t, x)| t.area * x).collect();
    let (w, _) = linalg::solve_spd_deflated(&k, &rhs, None::<ConstantMode>, cfg)?;
    let n = h_inner_scalar(&w, &w, mesh).max(0.0).sqrt();
    Ok((w, n))
}

/// Dual norm of a vector field, componentwise and combined in the
/// Euclidean norm.
pub fn norm_dual(v: &P0Vector, mesh: &Mesh, cfg: &SolverConfig) -> Result<f64> {
    let a = norm_dual_scalar(&v.x, mesh, cfg)?;
    let b = norm_dual_scalar(&v.y, mesh, cfg)?;
    Ok(a.hypot(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{kite, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn p0_projection_of_constants_and_affine() {
        let m = kite();
        let v = project_p0(&|_x: Point| [3.0, -1.0], &m);
        assert!(v.x.iter().all(|&a| close(a, 3.0, 1e-15)));
        assert!(v.y.iter().all(|&a| close(a, -1.0, 1e-15)));
        let s = project_p0_scalar(&|x: Point| x[0], &m);
        assert!(close(s.0[0], 0.5, 1e-15));
    }

    #[test]
    fn p0_projection_orthogonality() {
        let m = Mesh::generate_structured(8, 8, Rect::UNIT).unwrap();
        let w = |x: Point| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + x[0] * x[1];
        let pw = project_p0_scalar(&w, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let v = P0Scalar((0..m.n_cells()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let lhs = pw.inner(&v, &m).unwrap();
            // (w, v_h) with the same quadrature.
            let rhs: f64 = (0..m.n_cells())
                .map(|t| {
                    m.triangles()[t].area
                        * v.0[t]
                        * crate::quadrature::triangle_average(m.triangle_points(t), w)
                })
                .sum();
            assert!(close(lhs, rhs, 1e-12));
        }
    }

    #[test]
    fn tilde_projection_uses_circumcenters() {
        let m = kite();
        assert!(project_tilde_p0_scalar(&|_x: Point| 7.0, &m).0.iter().all(|&v| v == 7.0));
        let s = project_tilde_p0_scalar(&|x: Point| x[1], &m);
        assert!(close(s.0[0], 14.0 / 45.0, 1e-15));
    }

    #[test]
    fn p1nc_projection() {
        let m = kite();
        let q = project_p1nc(&|_x: Point| 2.0, &m);
        assert!(q.values.iter().all(|&v| close(v, 2.0, 1e-15)));
        let q = project_p1nc(&|x: Point| x[0], &m);
        let (ab, _) = m.interior_edges().next().unwrap();
        assert!(close(q.values[ab], 0.5, 1e-15));
    }

    #[test]
    fn rt0_projection_signs() {
        let m = kite();
        let (ab, _) = m.interior_edges().next().unwrap();
        let f = project_rt0(&|_x: Point| [1.0, 0.0], &m);
        assert!(f.0[ab].abs() < 1e-15);
        let f = project_rt0(&|_x: Point| [0.0, -1.0], &m);
        assert!(close(f.0[ab], 1.0, 1e-15));
        assert_eq!(f.max_boundary_flux(&m), 0.0);
    }

    #[test]
    fn rt0_reconstruction_recovers_edge_fluxes() {
        let m = Mesh::generate_structured(8, 8, Rect::UNIT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut flux = Rt0Flux((0..m.n_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for (e, _) in m.boundary_edges() {
            flux.0[e] = 0.0;
        }
        for (e, edge) in m.edges().iter().enumerate() {
            for cell in std::iter::once(edge.k).chain(edge.l) {
                let v = flux.eval_in_cell(&m, cell, edge.midpoint);
                let n = m.outward_normal(cell, e);
                let got = v[0] * n[0] + v[1] * n[1];
                assert!(close(got, flux.outward(&m, cell, e), 1e-12));
            }
        }
    }

    #[test]
    fn inner_products_on_kite() {
        let m = kite();
        let one = P0Scalar(vec![1.0, 1.0]);
        assert!(close(one.inner(&one, &m).unwrap(), 0.9, 1e-15));
        let (ab, _) = m.interior_edges().next().unwrap();
        let mut q = P1ncField::new(vec![0.0; m.n_edges()]);
        q.values[ab] = 1.0;
        assert!(close(q.inner(&q, &m).unwrap(), 0.3, 1e-15));
        let short = P0Scalar(vec![1.0]);
        assert!(matches!(one.inner(&short, &m), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn kite_norm_h_closed_form() {
        let m = kite();
        let v = P0Scalar(vec![1.0, 0.0]);
        // τ_AC = τ_CB = |σ| / d(x_σ, x_K); both equal 3.6 on this kite.
        let tau_ac = m.boundary_edges().find(|(_, e)| e.k == 0).unwrap().1.tau;
        assert!(close(tau_ac, 3.6, 1e-13));
        let got = norm_h_scalar(&v, &m).powi(2);
        assert!(close(got, 45.0 / 28.0 + 7.2, 1e-13), "{got}");
        assert_eq!(norm_h_scalar(&P0Scalar(vec![0.0, 0.0]), &m), 0.0);
    }

    #[test]
    fn centering_is_idempotent() {
        let m = Mesh::generate_structured(8, 8, Rect::UNIT).unwrap();
        let q = project_p1nc(&|x: Point| x[0] * x[0] + 3.0, &m);
        let c = q.centered(&m);
        assert!(c.integral(&m).abs() < 1e-14);
        let cc = c.centered(&m);
        for (a, b) in c.values.iter().zip(&cc.values) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn p1nc_cell_evaluation_hits_midpoints() {
        let m = kite();
        let q = P1ncField::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        for (t, tri) in m.triangles().iter().enumerate() {
            for &e in &tri.edges {
                assert!(close(q.eval_in_cell(&m, t, m.edges()[e].midpoint), q.values[e], 1e-14));
            }
        }
    }
}
