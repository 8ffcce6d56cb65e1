//! Seeded generators of class members.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, identity, zeros, ComplexMatrix, C64};
use crate::tuple::{phases_from_lower, AlgebraStructure, TupleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Style {
    JointlyNilpotent,
    ScaledCommuting,
    UCommuting,
    Covariant,
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("n must be at least 1 and dimH at least 1")]
    BadShape,
    #[error("covariant generation needs dimH >= 2")]
    TooSmallForCovariant,
    #[error("no class member found after shrinking {0} times")]
    GenerationFailed(usize),
}

const SHRINK: f64 = 0.85;
const MAX_SHRINKS: usize = 80;

pub fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut m = zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn haar_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    if n == 0 {
        return zeros(0, 0);
    }
    let qr = gaussian_matrix(n, n, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut out = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            out[(i, j)] *= ph;
        }
    }
    out
}

fn normalized(m: ComplexMatrix) -> ComplexMatrix {
    let norm = linalg::op_norm(&m);
    if norm > 1e-12 {
        m / c(norm, 0.0)
    } else {
        m
    }
}

fn polynomial(base: &ComplexMatrix, coeffs: &[(usize, C64)]) -> ComplexMatrix {
    let n = base.nrows();
    let mut acc = zeros(n, n);
    for &(k, z) in coeffs {
        let mut p = identity(n);
        for _ in 0..k {
            p *= base;
        }
        acc += p * z;
    }
    acc
}

/// Scale every operator by its own random factor, then shrink the whole
/// tuple until it lies in the class.
fn shrink_into_class(mut spec: TupleSpec, rng: &mut ChaCha8Rng) -> Result<TupleSpec, GenerationError> {
    for row in spec.blocks.iter_mut() {
        let r: f64 = rng.gen_range(0.4..0.95);
        row[0] = normalized(row[0].clone()) * c(r, 0.0);
    }
    for _ in 0..MAX_SHRINKS {
        if let Ok(report) = spec.classify() {
            if report.in_t1n && report.is_representation() {
                return Ok(spec);
            }
        }
        for row in spec.blocks.iter_mut() {
            row[0] *= c(SHRINK, 0.0);
        }
    }
    Err(GenerationError::GenerationFailed(MAX_SHRINKS))
}

pub fn jointly_nilpotent(n: usize, dim_h: usize, rng: &mut ChaCha8Rng) -> Result<TupleSpec, GenerationError> {
    let mut base = gaussian_matrix(dim_h, dim_h, rng);
    for i in 0..dim_h {
        for j in 0..=i {
            base[(i, j)] = c(0.0, 0.0);
        }
    }
    let mats = (0..n)
        .map(|_| {
            let coeffs: Vec<(usize, C64)> = (1..dim_h.max(2)).map(|k| (k, gaussian(rng))).collect();
            polynomial(&base, &coeffs)
        })
        .collect();
    shrink_into_class(TupleSpec::new(mats), rng)
}

pub fn scaled_commuting(n: usize, dim_h: usize, rng: &mut ChaCha8Rng) -> Result<TupleSpec, GenerationError> {
    let mut base = gaussian_matrix(dim_h, dim_h, rng);
    for i in 0..dim_h {
        for j in 0..i {
            base[(i, j)] = c(0.0, 0.0);
        }
    }
    let mats = (0..n)
        .map(|_| polynomial(&base, &[(0, gaussian(rng) * 0.3), (1, gaussian(rng)), (2, gaussian(rng) * 0.5)]))
        .collect();
    shrink_into_class(TupleSpec::new(mats), rng)
}

const QUARTER_PHASES: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];

/// One weighted shift and diagonal operators `diag(λ q^k)`, so that
/// `t_j t_s = q_j t_s t_j` with `q_j ∈ {±1, ±i}`.
pub fn u_commuting(n: usize, dim_h: usize, rng: &mut ChaCha8Rng) -> Result<TupleSpec, GenerationError> {
    let s = rng.gen_range(0..n);
    let mut mats = Vec::with_capacity(n);
    let mut lower = Vec::new();
    for j in 0..n {
        if j == s {
            let mut shift = zeros(dim_h, dim_h);
            for k in 0..dim_h.saturating_sub(1) {
                shift[(k + 1, k)] = c(rng.gen_range(0.3..1.0), 0.0);
            }
            mats.push(shift);
        } else {
            let (qr, qi) = QUARTER_PHASES[rng.gen_range(0..4)];
            let q = c(qr, qi);
            let lambda = gaussian(rng);
            let diag = ComplexMatrix::from_fn(dim_h, dim_h, |a, b| if a == b { lambda * crate::fock::phase_pow(q, a) } else { c(0.0, 0.0) });
            mats.push(diag);
            if j > s {
                lower.push(((j, s), q));
            } else {
                lower.push(((s, j), q.conj()));
            }
        }
    }
    let spec = TupleSpec::new(mats).with_phases(phases_from_lower(n, &lower));
    shrink_into_class(spec, rng)
}

/// Tuples covariant for `C^2` acting on `H = H_0 ⊕ H_1`: polynomials in a
/// block off-diagonal operator, odd for the swap and even for the identity.
pub fn covariant_with(n: usize, dim_h: usize, swaps: &[bool], rng: &mut ChaCha8Rng) -> Result<TupleSpec, GenerationError> {
    if dim_h < 2 {
        return Err(GenerationError::TooSmallForCovariant);
    }
    let a = dim_h.div_ceil(2);
    let b = dim_h - a;
    let mut base = zeros(dim_h, dim_h);
    base.view_mut((0, a), (a, b)).copy_from(&gaussian_matrix(a, b, rng));
    base.view_mut((a, 0), (b, a)).copy_from(&gaussian_matrix(b, a, rng));
    let mats = (0..n)
        .map(|i| {
            if swaps[i] {
                polynomial(&base, &[(1, gaussian(rng)), (3, gaussian(rng) * 0.3)])
            } else {
                polynomial(&base, &[(0, gaussian(rng) * 0.3), (2, gaussian(rng))])
            }
        })
        .collect();
    let algebra = AlgebraStructure {
        k: 2,
        block_of: (0..dim_h).map(|i| usize::from(i >= a)).collect(),
        automorphisms: swaps.iter().map(|&s| if s { vec![1, 0] } else { vec![0, 1] }).collect(),
    };
    shrink_into_class(TupleSpec::new(mats).with_algebra(algebra), rng)
}

pub fn generate(style: Style, n: usize, dim_h: usize, seed: u64) -> Result<TupleSpec, GenerationError> {
    if n == 0 || dim_h == 0 {
        return Err(GenerationError::BadShape);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match style {
        Style::JointlyNilpotent => jointly_nilpotent(n, dim_h, &mut rng),
        Style::ScaledCommuting => scaled_commuting(n, dim_h, &mut rng),
        Style::UCommuting => u_commuting(n, dim_h, &mut rng),
        Style::Covariant => covariant_with(n, dim_h, &vec![true; n], &mut rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_tuple() {
        let a = generate(Style::ScaledCommuting, 3, 3, 7).unwrap();
        let b = generate(Style::ScaledCommuting, 3, 3, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn u_commuting_relations_hold() {
        for seed in 0..5 {
            let t = generate(Style::UCommuting, 3, 4, seed).unwrap();
            assert!(t.commutation_residual() < 1e-14);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_unitary(4, &mut rng);
        assert!(linalg::residual(&(u.adjoint() * &u), &identity(4)) < 1e-14);
    }
}
