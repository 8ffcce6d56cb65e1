//! Truncated Fock model `F_N(E) ⊗ D` over multi-indices of total degree at
//! most `N`, with twisted creation operators.

use std::collections::HashMap;

use crate::linalg::{c, zeros, ComplexMatrix, C64};

pub type MultiIndex = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct FockModel {
    pub m: usize,
    pub degree: usize,
    pub coeff_dim: usize,
    pub indices: Vec<MultiIndex>,
    /// `phases[i][j]`: scalar picked up when generator `i` moves past `j`.
    pub phases: Vec<Vec<C64>>,
    lookup: HashMap<MultiIndex, usize>,
}

/// All `α ∈ Z_+^m` with `|α| <= degree`, by total degree, then with larger
/// leading entries first.
pub fn enumerate_indices(m: usize, degree: usize) -> Vec<MultiIndex> {
    fn fill(prefix: &mut MultiIndex, remaining_slots: usize, total: usize, out: &mut Vec<MultiIndex>) {
        if remaining_slots == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            fill(prefix, remaining_slots - 1, total - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        out.push(Vec::new());
        return out;
    }
    for total in 0..=degree {
        fill(&mut Vec::with_capacity(m), m, total, &mut out);
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn total(alpha: &[usize]) -> usize {
    alpha.iter().sum()
}

pub fn plus_e(alpha: &[usize], i: usize) -> MultiIndex {
    let mut a = alpha.to_vec();
    a[i] += 1;
    a
}

pub fn phase_pow(z: C64, k: usize) -> C64 {
    (0..k).fold(c(1.0, 0.0), |acc, _| acc * z)
}

impl FockModel {
    pub fn new(m: usize, degree: usize, coeff_dim: usize, phases: Vec<Vec<C64>>) -> Self {
        assert!(m >= 1, "at least one generator is required");
        assert!(phases.len() == m && phases.iter().all(|r| r.len() == m), "phase table must be m x m");
        let indices = enumerate_indices(m, degree);
        let lookup = indices.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
        FockModel { m, degree, coeff_dim, indices, phases, lookup }
    }

    pub fn with_trivial_phases(m: usize, degree: usize, coeff_dim: usize) -> Self {
        Self::new(m, degree, coeff_dim, vec![vec![c(1.0, 0.0); m]; m])
    }

    pub fn num_cells(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.indices.len() * self.coeff_dim
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn offset(&self, cell: usize) -> usize {
        cell * self.coeff_dim
    }

    /// `prod_{j<i} u(i,j)^{α_j}`: phase of `e_i ⊗ δ_α` in the canonical order.
    pub fn creation_phase(&self, i: usize, alpha: &[usize]) -> C64 {
        (0..i).fold(c(1.0, 0.0), |acc, j| acc * phase_pow(self.phases[i][j], alpha[j]))
    }

    /// `prod_{j>0} u(j,0)^{α_j}`: phase of `δ_α ⊗ e_0` in the canonical order.
    pub fn append_first_phase(&self, alpha: &[usize]) -> C64 {
        (1..self.m).fold(c(1.0, 0.0), |acc, j| acc * phase_pow(self.phases[j][0], alpha[j]))
    }

    /// Creation operator of generator `i`; top-degree cells map to zero.
    pub fn creation_matrix(&self, i: usize) -> ComplexMatrix {
        let n = self.dim();
        let mut out = zeros(n, n);
        for (k, alpha) in self.indices.iter().enumerate() {
            if let Some(target) = self.position(&plus_e(alpha, i)) {
                let ph = self.creation_phase(i, alpha);
                for r in 0..self.coeff_dim {
                    out[(self.offset(target) + r, self.offset(k) + r)] = ph;
                }
            }
        }
        out
    }

    /// Orthogonal projection onto cells with `|α| <= max_degree`.
    pub fn degree_projector(&self, max_degree: usize) -> ComplexMatrix {
        let n = self.dim();
        let mut out = zeros(n, n);
        for (k, alpha) in self.indices.iter().enumerate() {
            if total(alpha) <= max_degree {
                for r in 0..self.coeff_dim {
                    out[(self.offset(k) + r, self.offset(k) + r)] = c(1.0, 0.0);
                }
            }
        }
        out
    }

    /// Projection onto cells at least `margin` below the truncation degree.
    pub fn interior_projector(&self, margin: usize) -> ComplexMatrix {
        match self.degree.checked_sub(margin) {
            Some(d) => self.degree_projector(d),
            None => zeros(self.dim(), self.dim()),
        }
    }

    /// Columns of the cells with `|α| <= max_degree`, as a selection matrix.
    pub fn degree_selector(&self, max_degree: usize) -> ComplexMatrix {
        let cells: Vec<usize> = (0..self.num_cells()).filter(|&k| total(&self.indices[k]) <= max_degree).collect();
        let mut out = zeros(self.dim(), cells.len() * self.coeff_dim);
        for (q, &k) in cells.iter().enumerate() {
            for r in 0..self.coeff_dim {
                out[(self.offset(k) + r, q * self.coeff_dim + r)] = c(1.0, 0.0);
            }
        }
        out
    }

    /// `I ⊗ block` for a square coefficient map, scaled per cell.
    pub fn cellwise(&self, block: &ComplexMatrix, cell_phase: impl Fn(&[usize]) -> C64) -> ComplexMatrix {
        assert_eq!(block.shape(), (self.coeff_dim, self.coeff_dim));
        let n = self.dim();
        let mut out = zeros(n, n);
        for (k, alpha) in self.indices.iter().enumerate() {
            let o = self.offset(k);
            let ph = cell_phase(alpha);
            out.view_mut((o, o), block.shape()).copy_from(&(block * ph));
        }
        out
    }

    /// `δ_α ⊗ d ↦ (δ_α ⊗ e_0) ⊗ block d`, written in the canonical order of
    /// the cell `α + e_0`; top-degree cells map to zero.
    pub fn embed_shift(&self, block: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(block.shape(), (self.coeff_dim, self.coeff_dim));
        let n = self.dim();
        let mut out = zeros(n, n);
        for (k, alpha) in self.indices.iter().enumerate() {
            if let Some(target) = self.position(&plus_e(alpha, 0)) {
                let ph = self.append_first_phase(alpha);
                out.view_mut((self.offset(target), self.offset(k)), block.shape()).copy_from(&(block * ph));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::residual;

    #[test]
    fn index_order() {
        let idx = enumerate_indices(2, 1);
        assert_eq!(idx, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
        assert_eq!(enumerate_indices(3, 4).len(), binomial(7, 3));
    }

    #[test]
    fn single_generator_shift() {
        let f = FockModel::with_trivial_phases(1, 2, 1);
        let l = f.creation_matrix(0);
        assert_eq!(l[(1, 0)], c(1.0, 0.0));
        assert_eq!(l[(2, 1)], c(1.0, 0.0));
        assert_eq!(crate::linalg::fro_norm(&l), 2f64.sqrt());
    }

    #[test]
    fn twisted_creation_phase() {
        let u = vec![vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(1.0, 0.0)]];
        let f = FockModel::new(2, 2, 1, u);
        let l2 = f.creation_matrix(1);
        let src = f.position(&[1, 0]).unwrap();
        let dst = f.position(&[1, 1]).unwrap();
        assert_eq!(l2[(dst, src)], c(0.0, -1.0));
    }

    #[test]
    fn embed_shift_matches_creation_with_cell_phase() {
        let u = vec![vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(1.0, 0.0)]];
        let f = FockModel::new(2, 3, 2, u);
        let block = crate::linalg::from_real(2, 2, &[0.3, -1.0, 2.0, 0.5]);
        let lhs = f.embed_shift(&block);
        let rhs = f.creation_matrix(0) * f.cellwise(&block, |a| f.append_first_phase(a));
        assert!(residual(&lhs, &rhs) < 1e-15);
    }
}
