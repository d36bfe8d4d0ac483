//! Sparse matrices and Krylov solvers.
//!
//! Two entry points cover what the scheme needs:
//!
//! * [`solve_spd_deflated`]: preconditioned conjugate gradients for
//!   symmetric positive (semi)definite systems, optionally restricted to the
//!   complement of the constant vector. Used for the pressure Poisson system
//!   and for dual-norm evaluations.
//! * [`solve_general`]: BiCGStab with right Jacobi preconditioning, falling
//!   back to restarted GMRES on breakdown. Used for the momentum systems.
//!
//! Every accepted solution is re-checked with one explicit product:
//! `‖b − A x‖ ≤ rtol·‖b‖ + atol`.

use std::fmt;

use crate::error::Error;
use crate::par;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// input order, columns sorted within each row.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cursor = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let p = cursor[r];
            cols[p] = c;
            vals[p] = v;
            cursor[r] += 1;
        }

        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|p| (cols[p], vals[p])));
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().peekable();
            while let Some(&(c, mut v)) = iter.next() {
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(d.len(), d.len(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[r]..self.indptr[r + 1]).map(move |p| (self.indices[p], self.values[p]))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(p) => self.values[self.indptr[r] + p],
            Err(_) => 0.0,
        }
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for p in self.indptr[r]..self.indptr[r + 1] {
            s += self.values[p] * x[self.indices[p]];
        }
        s
    }

    /// `y = A x`, rows in parallel when enabled.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        par::fill(y, |r| self.row_dot(r, x));
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// Always-sequential `A x`.
    pub fn matvec_serial(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        par::serial::fill(&mut y, |r| self.row_dot(r, x));
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A − Aᵀ|` entrywise.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    /// `A B`.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        for r in 0..self.nrows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    t.push((r, c, a * b));
                }
            }
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, &t)
    }

    /// `a·A + b·B` for matrices of the same shape.
    pub fn add(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t: Vec<_> = self.triplets().into_iter().map(|(r, c, v)| (r, c, a * v)).collect();
        t.extend(other.triplets().into_iter().map(|(r, c, v)| (r, c, b * v)));
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Multiplies row `i` by `d[i]`.
    pub fn scale_rows(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.nrows);
        let mut out = self.clone();
        for (r, &dr) in d.iter().enumerate() {
            for p in out.indptr[r]..out.indptr[r + 1] {
                out.values[p] *= dr;
            }
        }
        out
    }

    /// Dense copy, row major. Only for small test systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] += v;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Defaults to ten times the number of unknowns.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-10,
            atol: 1e-14,
            max_iter: None,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl SolverConfig {
    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self
    }

    fn max_iterations(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n.max(1)).max(1)
    }

    fn validate(&self) -> Result<(), SolveError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) || self.max_iter == Some(0) {
            return Err(SolveError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final explicit residual `‖b − A x‖₂`.
    pub residual: f64,
    /// `rtol·‖b‖ + atol` for this solve.
    pub threshold: f64,
    pub converged: bool,
    pub solver: &'static str,
}

#[derive(Debug, Clone)]
pub enum SolveError {
    /// The iteration limit was reached; carries the best iterate.
    NotConverged { x: Vec<f64>, report: SolveReport },
    Breakdown { report: SolveReport },
    AsymmetricMatrix(f64),
    DimensionMismatch(String),
    InvalidConfig(String),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NotConverged { report, .. } => write!(
                f,
                "{} did not converge: residual {:e} > {:e} after {} iterations",
                report.solver, report.residual, report.threshold, report.iterations
            ),
            SolveError::Breakdown { report } => {
                write!(f, "{} breakdown after {} iterations", report.solver, report.iterations)
            }
            SolveError::AsymmetricMatrix(a) => write!(f, "matrix is not symmetric ({a:e})"),
            SolveError::DimensionMismatch(s) => write!(f, "dimension mismatch: {s}"),
            SolveError::InvalidConfig(s) => write!(f, "invalid solver config: {s}"),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<SolveError> for Error {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotConverged { report, .. } => Error::NotConverged {
                solver: report.solver,
                iterations: report.iterations,
                residual: report.residual,
            },
            SolveError::Breakdown { report } => Error::Breakdown {
                solver: report.solver,
                iterations: report.iterations,
            },
            SolveError::AsymmetricMatrix(a) => Error::AsymmetricMatrix(a),
            other => Error::SolverFailure(other.to_string()),
        }
    }
}

/// The constant vector spans the kernel. After solving, the solution is
/// shifted to zero weighted mean `Σ wᵢ xᵢ = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMode<'a> {
    pub weights: &'a [f64],
}

fn norm2(x: &[f64]) -> f64 {
    par::dot(x, x).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = par::sum_by(x.len(), |i| x[i]) / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

fn inverse_diagonal(a: &CsrMatrix, pc: Preconditioner) -> Vec<f64> {
    match pc {
        Preconditioner::None => vec![1.0; a.nrows()],
        Preconditioner::Diagonal => a
            .diagonal()
            .into_iter()
            .map(|d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<(), SolveError> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(SolveError::DimensionMismatch(format!(
            "{}x{} matrix with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    Ok(())
}

/// Relative asymmetry accepted by [`solve_spd_deflated`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi)definite matrix.
///
/// With `kernel` set the right-hand side, the preconditioned residuals and
/// hence all iterates are kept orthogonal to the constant vector, and the
/// returned solution is shifted to zero weighted mean.
pub fn solve_spd_deflated(
    a: &CsrMatrix,
    b: &[f64],
    kernel: Option<ConstantMode<'_>>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    solve_spd_deflated_from(a, b, kernel, cfg, None)
}

/// As [`solve_spd_deflated`], starting from `x0`.
pub fn solve_spd_deflated_from(
    a: &CsrMatrix,
    b: &[f64],
    kernel: Option<ConstantMode<'_>>,
    cfg: &SolverConfig,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    const NAME: &str = "pcg";
    check_square(a, b)?;
    cfg.validate()?;
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs() {
        return Err(SolveError::AsymmetricMatrix(asym));
    }
    let n = b.len();
    let deflate = kernel.is_some();
    let mut rhs = b.to_vec();
    if deflate {
        remove_mean(&mut rhs);
    }
    let bnorm = norm2(&rhs);
    let threshold = cfg.rtol * bnorm + cfg.atol;
    let max_iter = cfg.max_iterations(n);
    let dinv = inverse_diagonal(a, cfg.preconditioner);

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if deflate {
        remove_mean(&mut x);
    }
    let mut r = residual(a, &x, &rhs);
    let mut rnorm = norm2(&r);
    let mut iterations = 0;
    let mut best = (rnorm, x.clone());

    // Outer loop restarts from the explicit residual when the recursive one
    // has drifted below the threshold but the true one has not.
    let mut restarts = 0;
    while rnorm > threshold && iterations < max_iter && restarts < 5 {
        let precondition = |r: &[f64]| -> Vec<f64> {
            let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
            if deflate {
                remove_mean(&mut z);
            }
            z
        };
        let mut z = precondition(&r);
        let mut p = z.clone();
        let mut rz = par::dot(&r, &z);
        let mut ap = vec![0.0; n];
        while iterations < max_iter {
            a.matvec_into(&p, &mut ap);
            let pap = par::dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            axpy(&mut x, alpha, &p);
            axpy(&mut r, -alpha, &ap);
            iterations += 1;
            let rn = norm2(&r);
            if rn <= threshold {
                break;
            }
            z = precondition(&r);
            let rz_new = par::dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
        if deflate {
            remove_mean(&mut x);
        }
        r = residual(a, &x, &rhs);
        rnorm = norm2(&r);
        if rnorm < best.0 {
            best = (rnorm, x.clone());
        }
        restarts += 1;
    }

    let (rnorm, mut x) = best;
    if let Some(mode) = kernel {
        let wsum: f64 = mode.weights.iter().sum();
        let mean = par::sum_by(n, |i| mode.weights[i] * x[i]) / wsum;
        for v in &mut x {
            *v -= mean;
        }
    }
    let report = SolveReport {
        iterations,
        residual: rnorm,
        threshold,
        converged: rnorm <= threshold,
        solver: NAME,
    };
    if report.converged {
        Ok((x, report))
    } else {
        Err(SolveError::NotConverged { x, report })
    }
}

/// Solves a general square system with BiCGStab, restarting with GMRES(30)
/// if BiCGStab breaks down or stalls.
pub fn solve_general(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    solve_general_from(a, b, cfg, None)
}

/// As [`solve_general`], starting from `x0`.
pub fn solve_general_from(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &SolverConfig,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    check_square(a, b)?;
    cfg.validate()?;
    let n = b.len();
    let threshold = cfg.rtol * norm2(b) + cfg.atol;
    let max_iter = cfg.max_iterations(n);
    let dinv = inverse_diagonal(a, cfg.preconditioner);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };

    let (iters, ok) = bicgstab(a, b, &mut x, &dinv, threshold, max_iter);
    let mut rnorm = norm2(&residual(a, &x, b));
    if ok && rnorm <= threshold {
        return Ok((
            x,
            SolveReport {
                iterations: iters,
                residual: rnorm,
                threshold,
                converged: true,
                solver: "bicgstab",
            },
        ));
    }
    log::debug!("bicgstab stopped after {iters} iterations (residual {rnorm:e}); switching to gmres");
    if !x.iter().all(|v| v.is_finite()) {
        x = vec![0.0; n];
    }
    let remaining = max_iter.saturating_sub(iters).max(1);
    let (giters, broke) = gmres(a, b, &mut x, &dinv, threshold, remaining, 30);
    rnorm = norm2(&residual(a, &x, b));
    let report = SolveReport {
        iterations: iters + giters,
        residual: rnorm,
        threshold,
        converged: rnorm <= threshold,
        solver: "bicgstab+gmres",
    };
    if report.converged {
        Ok((x, report))
    } else if broke {
        Err(SolveError::Breakdown { report })
    } else {
        Err(SolveError::NotConverged { x, report })
    }
}

/// Right-preconditioned BiCGStab. Returns the iteration count and whether
/// the loop ended normally (false on breakdown or iteration limit).
fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    dinv: &[f64],
    threshold: f64,
    max_iter: usize,
) -> (usize, bool) {
    let n = b.len();
    let mut r = residual(a, x, b);
    if norm2(&r) <= threshold {
        return (0, true);
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut zs = vec![0.0; n];
    let mut t = vec![0.0; n];
    let tiny = f64::MIN_POSITIVE.sqrt();
    for it in 1..=max_iter {
        let rho_new = par::dot(&r_hat, &r);
        if rho_new.abs() < tiny * norm2(&r_hat) * norm2(&r) {
            return (it - 1, false);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = dinv[i] * p[i];
        }
        a.matvec_into(&y, &mut v);
        let rv = par::dot(&r_hat, &v);
        if rv.abs() < tiny {
            return (it - 1, false);
        }
        alpha = rho / rv;
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        if norm2(&s) <= threshold {
            axpy(x, alpha, &y);
            return (it, true);
        }
        for i in 0..n {
            zs[i] = dinv[i] * s[i];
        }
        a.matvec_into(&zs, &mut t);
        let tt = par::dot(&t, &t);
        if tt == 0.0 {
            return (it, false);
        }
        omega = par::dot(&t, &s) / tt;
        axpy(x, alpha, &y);
        axpy(x, omega, &zs);
        r = s;
        axpy(&mut r, -omega, &t);
        if norm2(&r) <= threshold {
            return (it, true);
        }
        if omega.abs() < tiny {
            return (it, false);
        }
    }
    (max_iter, false)
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
/// Returns the iteration count and whether a breakdown was detected.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    dinv: &[f64],
    threshold: f64,
    max_iter: usize,
    restart: usize,
) -> (usize, bool) {
    let n = b.len();
    let mut total = 0;
    while total < max_iter {
        let r = residual(a, x, b);
        let beta = norm2(&r);
        if beta <= threshold {
            return (total, false);
        }
        let m = restart.min(max_iter - total);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for j in 0..m {
            let z: Vec<f64> = basis[j].iter().zip(dinv).map(|(v, d)| v * d).collect();
            let mut w = a.matvec(&z);
            for (i, vi) in basis.iter().enumerate() {
                let hij = par::dot(&w, vi);
                hess[i][j] = hij;
                axpy(&mut w, -hij, vi);
            }
            let wn = norm2(&w);
            hess[j + 1][j] = wn;
            for i in 0..j {
                let tmp = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = tmp;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 {
                return (total + j, true);
            }
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            total += 1;
            if g[j + 1].abs() <= threshold || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut yv = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in i + 1..k_used {
                s -= hess[i][l] * yv[l];
            }
            yv[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (i, yi) in yv.iter().enumerate() {
            axpy(&mut update, *yi, &basis[i]);
        }
        for i in 0..n {
            x[i] += dinv[i] * update[i];
        }
    }
    (total, false)
}
