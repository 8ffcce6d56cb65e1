//! Dense complex linear algebra on top of `nalgebra`.
//!
//! Matrices are `DMatrix<Complex<f64>>`. Subspaces are carried as matrices
//! with orthonormal columns expressed in ambient coordinates.

use nalgebra::linalg::Schur;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use nalgebra::{Complex, DMatrix};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;

/// Singular values within this (scaled) distance are treated as one cluster
/// when choosing a canonical basis.
const CLUSTER_TOL: f64 = 1e-9;
/// Relative cutoff on Gram eigenvalues used when pairing frames.
pub const GRAM_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.6e})")]
    NotPsd { min_eig: f64 },
    #[error("frame Gram matrices differ (residual {residual:.3e})")]
    GramMismatch { residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("completion is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub min_eig: f64,
    pub is_psd: bool,
    pub threshold: f64,
}

/// A partial isometry together with orthonormal bases of its initial and
/// final spaces, so that `map = final_space * initial_space^*`.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    pub map: ComplexMatrix,
    pub initial_space: ComplexMatrix,
    pub final_space: ComplexMatrix,
}

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> ComplexMatrix {
    assert_eq!(data.len(), rows * cols);
    ComplexMatrix::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn fro_norm(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc + z.norm_sqr()).sqrt()
}

pub fn is_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `||lhs - rhs||_F / max(1, ||rhs||_F)`.
pub fn residual(lhs: &ComplexMatrix, rhs: &ComplexMatrix) -> f64 {
    assert_eq!(lhs.shape(), rhs.shape(), "residual shape mismatch");
    fro_norm(&(lhs - rhs)) / fro_norm(rhs).max(1.0)
}

/// Largest singular value.
pub fn op_norm(a: &ComplexMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let g = if a.nrows() <= a.ncols() { a * a.adjoint() } else { a.adjoint() * a };
    hermitian_eigen(&g).0.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// The QR iteration result is finished with cyclic Jacobi sweeps, which
/// drive the off-diagonal part to machine precision.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let h = hermitian_part(a);
    let mut v = h.clone().symmetric_eigen().eigenvectors;
    let mut b = hermitian_part(&(v.adjoint() * &h * &v));
    jacobi_sweeps(&mut b, &mut v);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| b[(i, i)].re.total_cmp(&b[(j, j)].re));
    let vals = order.iter().map(|&i| b[(i, i)].re).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |r, k| v[(r, order[k])]);
    (vals, vecs)
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Diagonalize the Hermitian `b` in place by two-sided rotations, applying
/// the same rotations to the columns of `v`.
fn jacobi_sweeps(b: &mut ComplexMatrix, v: &mut ComplexMatrix) {
    let n = b.nrows();
    let scale = fro_norm(b);
    if scale == 0.0 {
        return;
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for q in 0..n {
            for p in 0..q {
                off += b[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-18 * scale {
            return;
        }
        for q in 1..n {
            for p in 0..q {
                let bpq = b[(p, q)];
                let r = bpq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = bpq / r;
                let zeta = (b[(q, q)].re - b[(p, p)].re) / (2.0 * r);
                let t = zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // G = diag(1, conj(phase)) on (p, q) followed by the real rotation.
                let g_pp = c(cs, 0.0);
                let g_pq = c(sn, 0.0);
                let g_qp = phase.conj() * (-sn);
                let g_qq = phase.conj() * cs;
                for m in [&mut *b, &mut *v] {
                    for i in 0..m.nrows() {
                        let (x, y) = (m[(i, p)], m[(i, q)]);
                        m[(i, p)] = x * g_pp + y * g_qp;
                        m[(i, q)] = x * g_pq + y * g_qq;
                    }
                }
                for j in 0..n {
                    let (x, y) = (b[(p, j)], b[(q, j)]);
                    b[(p, j)] = g_pp.conj() * x + g_qp.conj() * y;
                    b[(q, j)] = g_pq.conj() * x + g_qq.conj() * y;
                }
                b[(p, q)] = c(0.0, 0.0);
                b[(q, p)] = c(0.0, 0.0);
                b[(p, p)] = c(b[(p, p)].re, 0.0);
                b[(q, q)] = c(b[(q, q)].re, 0.0);
            }
        }
    }
}

fn check_hermitian(a: &ComplexMatrix, tol: f64) -> Result<(), LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let residual = fro_norm(&(a - a.adjoint()));
    if residual > tol * fro_norm(a).max(1.0) {
        return Err(LinalgError::NotHermitian { residual });
    }
    Ok(())
}

/// PSD test with threshold `tol * max(1, ||A||_2)`.
pub fn psd_check(a: &ComplexMatrix, tol: f64) -> Result<PsdReport, LinalgError> {
    check_hermitian(a, tol)?;
    let (vals, _) = hermitian_eigen(a);
    let min_eig = vals.first().copied().unwrap_or(0.0);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let threshold = tol * scale;
    Ok(PsdReport { min_eig, is_psd: min_eig >= -threshold, threshold })
}

/// Unique PSD square root. Eigenvalues in `[-tol*scale, 0)` are clamped to 0.
pub fn psd_sqrt(a: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    let report = psd_check(a, tol)?;
    if !report.is_psd {
        return Err(LinalgError::NotPsd { min_eig: report.min_eig });
    }
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (k, v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for r in 0..n {
            scaled[(r, k)] *= s;
        }
    }
    Ok(hermitian_part(&(scaled * vecs.adjoint())))
}

/// Spectral radius via complex Schur form. Exactly structured input (for
/// instance nilpotent maps with many zero entries) can stall the shifted QR
/// iteration; then the matrix is conjugated by fixed seeded unitaries first.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::DimensionMismatch("spectral radius of non-square matrix".into()));
    }
    let scale = fro_norm(a);
    if a.nrows() == 0 || scale == 0.0 {
        return Ok(0.0);
    }
    let b = a / c(scale, 0.0);
    for attempt in 0..SCHUR_ATTEMPTS {
        let m = if attempt == 0 {
            b.clone()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(attempt);
            let q = crate::random::haar_unitary(b.nrows(), &mut rng);
            q.adjoint() * &b * q
        };
        if let Some(schur) = Schur::try_new(m, f64::EPSILON, 10_000) {
            let (_, t) = schur.unpack();
            return Ok(scale * (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max));
        }
    }
    Err(LinalgError::Numerical("Schur iteration did not converge".into()))
}

const SCHUR_ATTEMPTS: u64 = 5;

fn normalize_phase(v: &mut ComplexMatrix) {
    let scale = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8 * scale).copied() {
        let ph = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= ph;
        }
    }
}

/// Canonical orthonormal basis of the range of a projector: pivoted
/// Gram-Schmidt on its columns, output ordered by pivot coordinate.
fn canonical_basis_of_projector(p: &ComplexMatrix, dim: usize) -> ComplexMatrix {
    let n = p.nrows();
    let mut picked: Vec<(usize, ComplexMatrix)> = Vec::with_capacity(dim);
    let mut residuals: Vec<ComplexMatrix> = (0..n).map(|j| p.columns(j, 1).into_owned()).collect();
    for _ in 0..dim {
        let norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        let best = norms.iter().fold(0.0f64, |m, &x| m.max(x));
        let j = norms.iter().position(|&x| x >= best * (1.0 - 1e-12)).unwrap_or(0);
        let v = &residuals[j] / c(norms[j].max(f64::MIN_POSITIVE), 0.0);
        for r in residuals.iter_mut() {
            let proj = v.adjoint() * &*r;
            *r -= &v * proj[(0, 0)];
        }
        picked.push((j, v));
    }
    picked.sort_by_key(|(j, _)| *j);
    let mut out = zeros(n, dim);
    for (k, (_, mut v)) in picked.into_iter().enumerate() {
        normalize_phase(&mut v);
        out.set_column(k, &v.column(0));
    }
    out
}

/// Orthonormal basis of the column space of `a`, keeping singular values
/// above `rank_tol * max(1, sigma_max)`. Columns are ordered by descending
/// singular value; within a cluster of equal singular values the basis is
/// chosen canonically from the cluster projector. Hermitian input is read
/// off its own spectrum; otherwise the spectrum of `a a^*` is used.
pub fn range_basis(a: &ComplexMatrix, rank_tol: f64) -> ComplexMatrix {
    let rows = a.nrows();
    if rows == 0 || a.ncols() == 0 {
        return zeros(rows, 0);
    }
    let hermitian = a.is_square() && fro_norm(&(a - a.adjoint())) <= 1e-14 * fro_norm(a).max(1.0);
    let (vals, u) = if hermitian { hermitian_eigen(a) } else { hermitian_eigen(&(a * a.adjoint())) };
    let sv: Vec<f64> = vals.iter().map(|&v| if hermitian { v.abs() } else { v.max(0.0).sqrt() }).collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let sig: Vec<f64> = order.iter().map(|&i| sv[i]).collect();
    let scale = sig.first().copied().unwrap_or(0.0).max(1.0);
    let rank = sig.iter().filter(|&&s| s > rank_tol * scale).count();
    let mut out = zeros(rows, rank);
    let mut start = 0;
    while start < rank {
        let mut end = start + 1;
        while end < rank && sig[end - 1] - sig[end] <= CLUSTER_TOL * scale {
            end += 1;
        }
        let mut p = zeros(rows, rows);
        for &k in &order[start..end] {
            let col = u.column(k);
            p += &col * col.adjoint();
        }
        let block = canonical_basis_of_projector(&p, end - start);
        for k in 0..(end - start) {
            out.set_column(start + k, &block.column(k));
        }
        start = end;
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `basis` inside `C^dim`.
pub fn orthogonal_complement(basis: &ComplexMatrix, dim: usize) -> ComplexMatrix {
    assert_eq!(basis.nrows(), dim);
    let p = identity(dim) - basis * basis.adjoint();
    let k = dim - basis.ncols();
    if k == 0 {
        return zeros(dim, 0);
    }
    canonical_basis_of_projector(&p, k)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn direct_sum(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut q) = (0, 0);
    for b in blocks {
        out.view_mut((r, q), b.shape()).copy_from(*b);
        r += b.nrows();
        q += b.ncols();
    }
    out
}

/// Stack blocks vertically (all must share the column count).
pub fn vstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    out
}

/// Stack blocks horizontally (all must share the row count).
pub fn hstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut q = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, q), b.shape()).copy_from(*b);
        q += b.ncols();
    }
    out
}

/// Nearest partial isometry: singular values above 1/2 are set to one,
/// the rest dropped.
fn polar_polish(w: &ComplexMatrix) -> PartialIsometry {
    let (rows, cols) = w.shape();
    if rows == 0 || cols == 0 {
        return PartialIsometry { map: zeros(rows, cols), initial_space: zeros(cols, 0), final_space: zeros(rows, 0) };
    }
    let (vals, vecs) = hermitian_eigen(&(w.adjoint() * w));
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 0.25).collect();
    let initial_space = ComplexMatrix::from_fn(cols, keep.len(), |r, k| vecs[(r, keep[k])]);
    let mut final_space = w * &initial_space;
    for (k, &idx) in keep.iter().enumerate() {
        let inv = 1.0 / vals[idx].sqrt();
        final_space.column_mut(k).scale_mut(inv);
    }
    PartialIsometry { map: &final_space * initial_space.adjoint(), initial_space, final_space }
}

/// The partial isometry sending `X h` to `Y h` for every `h`, given frames
/// with equal Gram matrices `X^* X = Y^* Y`.
pub fn isometry_from_frames(x: &ComplexMatrix, y: &ComplexMatrix, tol: f64) -> Result<PartialIsometry, LinalgError> {
    if x.ncols() != y.ncols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "frames index different sets ({} vs {} vectors)",
            x.ncols(),
            y.ncols()
        )));
    }
    let gx = x.adjoint() * x;
    let gy = y.adjoint() * y;
    let residual = fro_norm(&(&gx - &gy)) / fro_norm(&gx).max(1.0);
    if residual > tol {
        return Err(LinalgError::GramMismatch { residual });
    }
    let (vals, vecs) = hermitian_eigen(&gx);
    let top = vals.last().copied().unwrap_or(0.0).max(1.0);
    let mut pinv = zeros(gx.nrows(), gx.ncols());
    for (k, &v) in vals.iter().enumerate() {
        if v > GRAM_RANK_TOL * top {
            let col = vecs.column(k);
            pinv += (&col * col.adjoint()) * c(1.0 / v, 0.0);
        }
    }
    let w = y * pinv * x.adjoint();
    Ok(polar_polish(&w))
}

/// Extend a partial isometry `w` to a unitary by sending the orthonormal
/// columns of `domain_complement` to those of `codomain_complement` in order.
pub fn unitary_completion(
    w: &ComplexMatrix,
    domain_complement: &ComplexMatrix,
    codomain_complement: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    let (rows, cols) = w.shape();
    if rows != cols
        || domain_complement.nrows() != cols
        || codomain_complement.nrows() != rows
        || domain_complement.ncols() != codomain_complement.ncols()
    {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot complete a {}x{} map with complements {}x{} and {}x{}",
            rows,
            cols,
            domain_complement.nrows(),
            domain_complement.ncols(),
            codomain_complement.nrows(),
            codomain_complement.ncols()
        )));
    }
    let u = w + codomain_complement * domain_complement.adjoint();
    let residual = fro_norm(&(u.adjoint() * &u - identity(cols)));
    if residual > 1e-6 {
        return Err(LinalgError::NotUnitary { residual });
    }
    let polished = polar_polish(&u);
    if polished.initial_space.ncols() != cols {
        return Err(LinalgError::NotUnitary { residual });
    }
    Ok(polished.map)
}
