//! Discrete differential operators.
//!
//! Matrix-free applications work on the field types directly; assemblers
//! return [`OperatorMatrix`] values acting on one scalar component.
//!
//! Sign conventions: an edge's stored normal points out of `K_σ`; per-cell
//! loops use [`Mesh::outward_normal`], so the `L_σ` side sees the flipped
//! normal. Fluxes in [`Rt0Flux`] are measured along the stored normal.

use std::io::{self, Write};
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::fields::{edge_mass, P0Vector, P1ncField, Rt0Flux};
use crate::linalg::CsrMatrix;
use crate::mesh::Mesh;
use crate::par;

/// Index space of a matrix dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// One value per triangle.
    P0,
    /// One value per edge midpoint.
    P1nc,
    /// One normal flux per edge.
    Rt0,
}

impl Space {
    pub fn tag(self) -> &'static str {
        match self {
            Space::P0 => "P0S",
            Space::P1nc => "P1NC",
            Space::Rt0 => "RT0",
        }
    }

    fn dim(self, mesh: &Mesh) -> usize {
        match self {
            Space::P0 => mesh.n_cells(),
            Space::P1nc | Space::Rt0 => mesh.n_edges(),
        }
    }
}

/// Relative asymmetry below which a matrix is flagged symmetric.
pub const SYMMETRY_FLAG_TOL: f64 = 1e-14;

/// A sparse matrix tagged with the spaces it maps between.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: CsrMatrix,
    pub domain: Space,
    pub codomain: Space,
    pub symmetric: bool,
}

impl OperatorMatrix {
    pub fn new(matrix: CsrMatrix, domain: Space, codomain: Space) -> Self {
        let symmetric = domain == codomain
            && matrix.nrows() == matrix.ncols()
            && matrix.asymmetry() <= SYMMETRY_FLAG_TOL * matrix.max_abs();
        OperatorMatrix {
            matrix,
            domain,
            codomain,
            symmetric,
        }
    }

    /// Checks the dimensions against `mesh`.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        let want = (self.codomain.dim(mesh), self.domain.dim(mesh));
        let got = (self.matrix.nrows(), self.matrix.ncols());
        if want != got {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} matrix for {} -> {} on a mesh needing {}x{}",
                got.0,
                got.1,
                self.domain.tag(),
                self.codomain.tag(),
                want.0,
                want.1
            )));
        }
        Ok(())
    }

    /// Writes `row col value` lines after a header naming the spaces and
    /// the mesh.
    pub fn write_coo<W: Write>(&self, mesh: &Mesh, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# coo rows={} cols={} nnz={} domain={} codomain={} symmetric={} mesh={}",
            self.matrix.nrows(),
            self.matrix.ncols(),
            self.matrix.nnz(),
            self.domain.tag(),
            self.codomain.tag(),
            self.symmetric,
            mesh.hash()
        )?;
        for (r, c, v) in self.matrix.triplets() {
            writeln!(out, "{r} {c} {v:?}")?;
        }
        Ok(())
    }
}

impl Deref for OperatorMatrix {
    type Target = CsrMatrix;

    fn deref(&self) -> &CsrMatrix {
        &self.matrix
    }
}

// ---------------------------------------------------------------------------
// Gradient and divergence

/// Cellwise gradient of a Crouzeix-Raviart field:
/// `(1/|K|) Σ_σ |σ| q_σ n_{K,σ}`.
pub fn grad_h(q: &P1ncField, mesh: &Mesh) -> P0Vector {
    let g: Vec<[f64; 2]> = par::map(mesh.n_cells(), |t| grad_cell(&q.values, mesh, t));
    P0Vector {
        x: g.iter().map(|v| v[0]).collect(),
        y: g.iter().map(|v| v[1]).collect(),
    }
}

#[inline]
fn grad_cell(q: &[f64], mesh: &Mesh, t: usize) -> [f64; 2] {
    let tri = &mesh.triangles()[t];
    let mut g = [0.0; 2];
    for &e in &tri.edges {
        let n = mesh.outward_normal(t, e);
        let s = mesh.edges()[e].length * q[e];
        g[0] += s * n[0];
        g[1] += s * n[1];
    }
    [g[0] / tri.area, g[1] / tri.area]
}

/// Scaling of the discrete divergence on boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivBoundary {
    /// `3|σ|/|K_σ|`: exact adjoint of [`grad_h`] under the lumped P1nc mass.
    #[default]
    AdjointConsistent,
    /// `3|σ|/(2|K_σ|)`: the interior formula with `L_σ := K_σ` and a zero
    /// exterior value. Breaks adjointness on boundary edges.
    StrictPaper,
}

/// Discrete divergence with the default boundary scaling.
pub fn div_h(v: &P0Vector, mesh: &Mesh) -> P1ncField {
    div_h_with(v, mesh, DivBoundary::AdjointConsistent)
}

pub fn div_h_with(v: &P0Vector, mesh: &Mesh, mode: DivBoundary) -> P1ncField {
    let values = par::map(mesh.n_edges(), |e| div_edge(v, mesh, e, mode));
    P1ncField {
        values,
        zero_mean: mode == DivBoundary::AdjointConsistent,
    }
}

#[inline]
fn div_edge(v: &P0Vector, mesh: &Mesh, e: usize, mode: DivBoundary) -> f64 {
    let edge = &mesh.edges()[e];
    let tris = mesh.triangles();
    let n = edge.normal;
    let vk = v.get(edge.k);
    match edge.l {
        Some(l) => {
            let vl = v.get(l);
            3.0 * edge.length / (tris[edge.k].area + tris[l].area)
                * ((vl[0] - vk[0]) * n[0] + (vl[1] - vk[1]) * n[1])
        }
        None => {
            let denom = match mode {
                DivBoundary::AdjointConsistent => tris[edge.k].area,
                DivBoundary::StrictPaper => 2.0 * tris[edge.k].area,
            };
            -3.0 * edge.length / denom * (vk[0] * n[0] + vk[1] * n[1])
        }
    }
}

/// `Δ_h q = div_h(∇_h q)`, pointwise at edge midpoints.
pub fn apply_laplacian_p1nc(q: &P1ncField, mesh: &Mesh) -> P1ncField {
    div_h(&grad_h(q, mesh), mesh)
}

/// Gradient matrices `[G_x, G_y]`, cells × edges.
pub fn assemble_gradient(mesh: &Mesh) -> [OperatorMatrix; 2] {
    let mut tx = Vec::with_capacity(3 * mesh.n_cells());
    let mut ty = Vec::with_capacity(3 * mesh.n_cells());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &e in &tri.edges {
            let n = mesh.outward_normal(t, e);
            let s = mesh.edges()[e].length / tri.area;
            tx.push((t, e, s * n[0]));
            ty.push((t, e, s * n[1]));
        }
    }
    let (nc, ne) = (mesh.n_cells(), mesh.n_edges());
    [
        OperatorMatrix::new(CsrMatrix::from_triplets(nc, ne, &tx), Space::P1nc, Space::P0),
        OperatorMatrix::new(CsrMatrix::from_triplets(nc, ne, &ty), Space::P1nc, Space::P0),
    ]
}

/// Divergence matrices `[D_x, D_y]`, edges × cells.
pub fn assemble_divergence(mesh: &Mesh, mode: DivBoundary) -> [OperatorMatrix; 2] {
    let tris = mesh.triangles();
    let mut tx = Vec::with_capacity(2 * mesh.n_edges());
    let mut ty = Vec::with_capacity(2 * mesh.n_edges());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let n = edge.normal;
        match edge.l {
            Some(l) => {
                let s = 3.0 * edge.length / (tris[edge.k].area + tris[l].area);
                tx.extend([(e, l, s * n[0]), (e, edge.k, -s * n[0])]);
                ty.extend([(e, l, s * n[1]), (e, edge.k, -s * n[1])]);
            }
            None => {
                let denom = match mode {
                    DivBoundary::AdjointConsistent => tris[edge.k].area,
                    DivBoundary::StrictPaper => 2.0 * tris[edge.k].area,
                };
                let s = -3.0 * edge.length / denom;
                tx.push((e, edge.k, s * n[0]));
                ty.push((e, edge.k, s * n[1]));
            }
        }
    }
    let (nc, ne) = (mesh.n_cells(), mesh.n_edges());
    [
        OperatorMatrix::new(CsrMatrix::from_triplets(ne, nc, &tx), Space::P0, Space::P1nc),
        OperatorMatrix::new(CsrMatrix::from_triplets(ne, nc, &ty), Space::P0, Space::P1nc),
    ]
}

/// Pressure stiffness `Gᵀ M_{P0} G = −M_{P1nc} Δ_h`: symmetric positive
/// semidefinite with the constants as kernel.
pub fn assemble_pressure_stiffness(mesh: &Mesh) -> OperatorMatrix {
    let mut t = Vec::with_capacity(9 * mesh.n_cells());
    for (c, tri) in mesh.triangles().iter().enumerate() {
        let w: Vec<[f64; 2]> = tri
            .edges
            .iter()
            .map(|&e| {
                let n = mesh.outward_normal(c, e);
                let l = mesh.edges()[e].length;
                [l * n[0], l * n[1]]
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let v = (w[i][0] * w[j][0] + w[i][1] * w[j][1]) / tri.area;
                t.push((tri.edges[i], tri.edges[j], v));
            }
        }
    }
    let n = mesh.n_edges();
    let mut op = OperatorMatrix::new(CsrMatrix::from_triplets(n, n, &t), Space::P1nc, Space::P1nc);
    // Summation order can leave a few ulps of asymmetry; symmetrize exactly.
    if !op.symmetric {
        op = OperatorMatrix::new(op.matrix.add(0.5, &op.matrix.transpose(), 0.5), Space::P1nc, Space::P1nc);
    }
    op
}

/// `Δ_h` as a pointwise matrix, edges × edges.
pub fn assemble_laplacian_p1nc(mesh: &Mesh) -> OperatorMatrix {
    let a = assemble_pressure_stiffness(mesh);
    let inv: Vec<f64> = edge_mass(mesh).iter().map(|m| -1.0 / m).collect();
    OperatorMatrix::new(a.matrix.scale_rows(&inv), Space::P1nc, Space::P1nc)
}

// ---------------------------------------------------------------------------
// Two-point laplacian on P0

/// Finite-volume laplacian with homogeneous Dirichlet data, pointwise:
/// `(1/|K|)[Σ_int τ_σ (v_L − v_K) − Σ_ext τ_σ v_K]`.
pub fn apply_laplacian_p0(v: &[f64], mesh: &Mesh) -> Vec<f64> {
    laplacian_p0(v, mesh, true)
}

/// As [`apply_laplacian_p0`] with the boundary terms dropped
/// (homogeneous Neumann data).
pub fn apply_laplacian_p0_neumann(v: &[f64], mesh: &Mesh) -> Vec<f64> {
    laplacian_p0(v, mesh, false)
}

fn laplacian_p0(v: &[f64], mesh: &Mesh, dirichlet: bool) -> Vec<f64> {
    assert_eq!(v.len(), mesh.n_cells());
    par::map(mesh.n_cells(), |t| {
        let tri = &mesh.triangles()[t];
        let mut s = 0.0;
        for &e in &tri.edges {
            let edge = &mesh.edges()[e];
            match mesh.neighbor(t, e) {
                Some(l) => s += edge.tau * (v[l] - v[t]),
                None if dirichlet => s -= edge.tau * v[t],
                None => {}
            }
        }
        s / tri.area
    })
}

pub fn apply_laplacian_p0_vector(v: &P0Vector, mesh: &Mesh) -> P0Vector {
    let (x, y) = par::join(|| apply_laplacian_p0(&v.x, mesh), || apply_laplacian_p0(&v.y, mesh));
    P0Vector { x, y }
}

/// Two-point stiffness `K = −M_{P0} Δ̃_h`: `K_KK = Σ_σ τ_σ` over all edges
/// of `K`, `K_KL = −τ_σ`. Symmetric positive definite.
pub fn assemble_p0_stiffness(mesh: &Mesh) -> OperatorMatrix {
    let mut t = Vec::with_capacity(4 * mesh.n_edges());
    for edge in mesh.edges() {
        match edge.l {
            Some(l) => t.extend([
                (edge.k, edge.k, edge.tau),
                (l, l, edge.tau),
                (edge.k, l, -edge.tau),
                (l, edge.k, -edge.tau),
            ]),
            None => t.push((edge.k, edge.k, edge.tau)),
        }
    }
    let n = mesh.n_cells();
    OperatorMatrix::new(CsrMatrix::from_triplets(n, n, &t), Space::P0, Space::P0)
}

/// `Δ̃_h` in cell-integrated form, `M_{P0} Δ̃_h = −K`. This is the symmetric
/// representation; divide row `K` by `|K|` for pointwise values.
pub fn assemble_laplacian_p0(mesh: &Mesh) -> OperatorMatrix {
    let k = assemble_p0_stiffness(mesh);
    let neg = CsrMatrix::from_triplets(
        k.nrows(),
        k.ncols(),
        &k.triplets().into_iter().map(|(r, c, v)| (r, c, -v)).collect::<Vec<_>>(),
    );
    OperatorMatrix::new(neg, Space::P0, Space::P0)
}

/// `Δ̃_h` as a pointwise matrix; not symmetric unless all areas agree.
pub fn assemble_laplacian_p0_pointwise(mesh: &Mesh) -> OperatorMatrix {
    let a = assemble_laplacian_p0(mesh);
    let inv: Vec<f64> = mesh.triangles().iter().map(|t| 1.0 / t.area).collect();
    OperatorMatrix::new(a.matrix.scale_rows(&inv), Space::P0, Space::P0)
}

// ---------------------------------------------------------------------------
// Upwind convection

fn check_boundary_flux(flux: &Rt0Flux, mesh: &Mesh) -> Result<()> {
    if flux.0.len() != mesh.n_edges() {
        return Err(Error::SpaceMismatch(format!(
            "RT0 flux of length {}, mesh has {} edges",
            flux.0.len(),
            mesh.n_edges()
        )));
    }
    match mesh.boundary_edges().find(|(e, _)| flux.0[*e] != 0.0) {
        Some((edge, _)) => Err(Error::NonzeroBoundaryFlux {
            edge,
            flux: flux.0[edge],
        }),
        None => Ok(()),
    }
}

/// Upwind convection `b̃_h(u, v)` per cell:
/// `(1/|K|) Σ_int |σ| [(u·n)⁺ v_K + (u·n)⁻ v_L]`.
pub fn upwind_apply(flux: &Rt0Flux, v: &P0Vector, mesh: &Mesh) -> Result<P0Vector> {
    check_boundary_flux(flux, mesh)?;
    let out: Vec<[f64; 2]> = par::map(mesh.n_cells(), |t| {
        let tri = &mesh.triangles()[t];
        let vk = v.get(t);
        let mut s = [0.0; 2];
        for &e in &tri.edges {
            if let Some(l) = mesh.neighbor(t, e) {
                let a = flux.outward(mesh, t, e);
                let len = mesh.edges()[e].length;
                let vl = v.get(l);
                let (ap, am) = (a.max(0.0), a.min(0.0));
                s[0] += len * (ap * vk[0] + am * vl[0]);
                s[1] += len * (ap * vk[1] + am * vl[1]);
            }
        }
        [s[0] / tri.area, s[1] / tri.area]
    });
    Ok(P0Vector {
        x: out.iter().map(|v| v[0]).collect(),
        y: out.iter().map(|v| v[1]).collect(),
    })
}

/// `b_h(u, v, w) = Σ_K |K| w_K · b̃_h(u, v)|_K`.
pub fn trilinear_b_h(flux: &Rt0Flux, v: &P0Vector, w: &P0Vector, mesh: &Mesh) -> Result<f64> {
    let b = upwind_apply(flux, v, mesh)?;
    let tris = mesh.triangles();
    Ok(par::sum_by(mesh.n_cells(), |t| {
        tris[t].area * (w.x[t] * b.x[t] + w.y[t] * b.y[t])
    }))
}

/// Pointwise upwind matrix `C` with `C v = b̃_h(u, v)` per component.
pub fn assemble_convection_matrix(flux: &Rt0Flux, mesh: &Mesh) -> Result<OperatorMatrix> {
    let c = assemble_convection_integrated(flux, mesh)?;
    let inv: Vec<f64> = mesh.triangles().iter().map(|t| 1.0 / t.area).collect();
    Ok(OperatorMatrix::new(c.matrix.scale_rows(&inv), Space::P0, Space::P0))
}

/// Cell-integrated upwind matrix `M_{P0} C`.
pub fn assemble_convection_integrated(flux: &Rt0Flux, mesh: &Mesh) -> Result<OperatorMatrix> {
    check_boundary_flux(flux, mesh)?;
    let mut t = Vec::with_capacity(4 * mesh.n_edges());
    for (e, edge) in mesh.interior_edges() {
        let l = edge.l.expect("interior edge");
        // Flux out of K is `a`, out of L is `−a`.
        let a = flux.0[e] * edge.length;
        t.push((edge.k, edge.k, a.max(0.0)));
        t.push((edge.k, l, a.min(0.0)));
        t.push((l, l, (-a).max(0.0)));
        t.push((l, edge.k, (-a).min(0.0)));
    }
    let n = mesh.n_cells();
    Ok(OperatorMatrix::new(CsrMatrix::from_triplets(n, n, &t), Space::P0, Space::P0))
}

/// Normal fluxes of a P0 field: the average normal component on interior
/// edges, zero on the boundary. Exact on fields with continuous normal
/// components.
pub fn flux_from_p0(v: &P0Vector, mesh: &Mesh) -> Rt0Flux {
    Rt0Flux(par::map(mesh.n_edges(), |e| {
        let edge = &mesh.edges()[e];
        match edge.l {
            Some(l) => {
                let (a, b) = (v.get(edge.k), v.get(l));
                0.5 * ((a[0] + b[0]) * edge.normal[0] + (a[1] + b[1]) * edge.normal[1])
            }
            None => 0.0,
        }
    }))
}

/// Largest `|(v_K − v_L)·n_σ|` over interior edges.
pub fn max_normal_jump(v: &P0Vector, mesh: &Mesh) -> f64 {
    mesh.interior_edges()
        .map(|(_, edge)| {
            let (a, b) = (v.get(edge.k), v.get(edge.l.expect("interior edge")));
            ((a[0] - b[0]) * edge.normal[0] + (a[1] - b[1]) * edge.normal[1]).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{norm_h_scalar, L2Space, P0Scalar};
    use crate::mesh::{kite, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn ab_edge(m: &Mesh) -> usize {
        m.interior_edges().next().unwrap().0
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn kite_gradient_of_ab_basis() {
        let m = kite();
        let mut q = P1ncField::new(vec![0.0; m.n_edges()]);
        q.values[ab_edge(&m)] = 1.0;
        let g = grad_h(&q, &m);
        assert!(close(g.x[0], 0.0, 1e-14));
        assert!(close(g.y[0], -20.0 / 9.0, 1e-14));
    }

    #[test]
    fn kite_divergence() {
        let m = kite();
        let v = P0Vector::from_components(vec![0.0, 0.0], vec![1.0, 0.0]);
        let d = div_h(&v, &m);
        let ab = ab_edge(&m);
        assert!(close(d.values[ab], 10.0 / 3.0, 1e-14));
        for (e, edge) in m.boundary_edges() {
            let want = if edge.k == 0 { -10.0 / 3.0 } else { 0.0 };
            assert!(close(d.values[e], want, 1e-14), "edge {e}: {}", d.values[e]);
        }
        assert!(d.integral(&m).abs() < 1e-14);
    }

    #[test]
    fn gradient_of_affine_is_exact() {
        let m = Mesh::generate_structured(6, 6, Rect::UNIT).unwrap();
        let q = crate::fields::project_p1nc(&|x: crate::Point| 2.0 * x[0] - 3.0 * x[1] + 1.0, &m);
        let g = grad_h(&q, &m);
        assert!(g.x.iter().all(|&v| close(v, 2.0, 1e-12)));
        assert!(g.y.iter().all(|&v| close(v, -3.0, 1e-12)));
    }

    #[test]
    fn kite_laplacian_p0() {
        let m = kite();
        let lap = apply_laplacian_p0(&[1.0, 0.0], &m);
        let nh = norm_h_scalar(&P0Scalar(vec![1.0, 0.0]), &m).powi(2);
        assert!(close(lap[0], -nh / 0.45, 1e-13));
        assert!(close(lap[0], -19.571428571428573, 1e-12));
    }

    #[test]
    fn matrices_match_matrix_free() {
        let m = Mesh::generate_structured(6, 6, Rect::UNIT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = P1ncField::new(random_vec(&mut rng, m.n_edges()));
        let v = P0Vector::from_components(random_vec(&mut rng, m.n_cells()), random_vec(&mut rng, m.n_cells()));

        let [gx, gy] = assemble_gradient(&m);
        let g = grad_h(&q, &m);
        for (a, b) in gx.matvec(&q.values).iter().zip(&g.x).chain(gy.matvec(&q.values).iter().zip(&g.y)) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }

        let [dx, dy] = assemble_divergence(&m, DivBoundary::AdjointConsistent);
        let d = div_h(&v, &m);
        let (ax, ay) = (dx.matvec(&v.x), dy.matvec(&v.y));
        for i in 0..m.n_edges() {
            assert!((ax[i] + ay[i] - d.values[i]).abs() < 1e-12 * (1.0 + d.values[i].abs()));
        }

        let lap = assemble_laplacian_p1nc(&m);
        let lq = apply_laplacian_p1nc(&q, &m);
        for (a, b) in lap.matvec(&q.values).iter().zip(&lq.values) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }

        let lp0 = assemble_laplacian_p0_pointwise(&m);
        for (a, b) in lp0.matvec(&v.x).iter().zip(&apply_laplacian_p0(&v.x, &m)) {
            assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn stiffness_matrices_are_symmetric() {
        let m = Mesh::generate_structured(8, 8, Rect::UNIT).unwrap();
        assert!(assemble_p0_stiffness(&m).symmetric);
        assert!(assemble_laplacian_p0(&m).symmetric);
        let a = assemble_pressure_stiffness(&m);
        assert!(a.symmetric);
        let ones = vec![1.0; m.n_edges()];
        assert!(a.matvec(&ones).iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn adjointness_and_coercivity_on_kite() {
        let m = kite();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let q = P1ncField::new(random_vec(&mut rng, m.n_edges()));
            let v = P0Vector::from_components(random_vec(&mut rng, 2), random_vec(&mut rng, 2));
            let lhs = v.inner(&grad_h(&q, &m), &m).unwrap();
            let rhs = q.inner(&div_h(&v, &m), &m).unwrap();
            assert!((lhs + rhs).abs() < 1e-13 * (1.0 + lhs.abs()));

            let s = P0Scalar(random_vec(&mut rng, 2));
            let lap = P0Scalar(apply_laplacian_p0(&s.0, &m));
            let nh = norm_h_scalar(&s, &m).powi(2);
            assert!(close(-lap.inner(&s, &m).unwrap(), nh, 1e-13));
        }
    }

    #[test]
    fn strict_boundary_mode_breaks_adjointness() {
        let m = kite();
        // Only the boundary scaling differs: (1, div v) = −|AB|/2 · v·n_AB.
        let v = P0Vector::from_components(vec![0.0, 0.0], vec![1.0, 0.0]);
        let q = P1ncField::new(vec![1.0; m.n_edges()]);
        let lhs = v.inner(&grad_h(&q, &m), &m).unwrap();
        assert!(lhs.abs() < 1e-15);
        let ok = q.inner(&div_h(&v, &m), &m).unwrap();
        assert!(ok.abs() < 1e-14);
        let strict = q.inner(&div_h_with(&v, &m, DivBoundary::StrictPaper), &m).unwrap();
        assert!(close(strict, 0.5, 1e-13), "{strict}");
    }

    #[test]
    fn upwind_kite_against_edge_loop() {
        let m = kite();
        let ab = ab_edge(&m);
        let mut flux = Rt0Flux::zeros(&m);
        flux.0[ab] = 1.0;
        let v = P0Vector::from_components(vec![1.0, 0.0], vec![0.0, 0.0]);
        let b = upwind_apply(&flux, &v, &m).unwrap();
        // Flux leaves ABC through AB with |AB| = 1: donor is ABC.
        assert!(close(b.x[0], 1.0 / 0.45, 1e-14));
        assert!(close(b.x[1], -1.0 / 0.45, 1e-14));
        assert_eq!(b.y, vec![0.0, 0.0]);

        let c = assemble_convection_matrix(&flux, &m).unwrap();
        let cx = c.matvec(&v.x);
        assert!(close(cx[0], b.x[0], 1e-14) && close(cx[1], b.x[1], 1e-14));

        let mut bad = flux.clone();
        let (e, _) = m.boundary_edges().next().unwrap();
        bad.0[e] = 0.5;
        assert!(matches!(upwind_apply(&bad, &v, &m), Err(Error::NonzeroBoundaryFlux { .. })));
    }

    #[test]
    fn coo_header_names_spaces() {
        let m = kite();
        let [gx, _] = assemble_gradient(&m);
        let mut buf = Vec::new();
        gx.write_coo(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.contains("domain=P1NC") && first.contains("codomain=P0S"));
        assert!(first.contains(m.hash()));
        assert_eq!(text.lines().count(), 1 + gx.nnz());
    }
}
