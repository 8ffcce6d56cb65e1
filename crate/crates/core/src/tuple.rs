//! Operator tuples, Szegő operators, purity and class membership.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, identity, kron, zeros, ComplexMatrix, LinalgError, C64};

pub const PSD_TOL: f64 = 1e-10;
pub const CONTRACTION_TOL: f64 = 1e-10;
pub const PURITY_MARGIN: f64 = 1e-8;
pub const STRUCTURE_TOL: f64 = 1e-10;
const PHASE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TupleError {
    #[error("malformed tuple: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn malformed<T>(msg: impl Into<String>) -> Result<T, TupleError> {
    Err(TupleError::Malformed(msg.into()))
}

/// Finite-dimensional `C^k` coefficient algebra acting on `H` by block
/// projections. `automorphisms[i][q]` is the component that `t_i` maps
/// component `q` into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraStructure {
    pub k: usize,
    pub block_of: Vec<usize>,
    pub automorphisms: Vec<Vec<usize>>,
}

impl AlgebraStructure {
    pub fn projector(&self, p: usize) -> ComplexMatrix {
        let n = self.block_of.len();
        ComplexMatrix::from_fn(n, n, |i, j| if i == j && self.block_of[i] == p { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &b in &self.block_of {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Composition `outer ∘ inner` of two permutations.
pub fn compose(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&q| outer[q]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TupleSpec {
    pub n: usize,
    pub dim_h: usize,
    pub d: usize,
    /// `blocks[i][j]` is `T_{i,j}`.
    pub blocks: Vec<Vec<ComplexMatrix>>,
    /// `phases[i][j] = u_{i,j}` with `t_i t_j = u_{i,j} t_j t_i`.
    pub phases: Vec<Vec<C64>>,
    pub algebra: Option<AlgebraStructure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityVerdict {
    Pure,
    NotPure,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub index: usize,
    pub spectral_radius: f64,
    pub verdict: PurityVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SzegoReport {
    /// 1-based indices of the subset.
    pub subset: Vec<usize>,
    pub min_eig: f64,
    pub psd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkvwEntry {
    pub p: usize,
    pub q: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub n: usize,
    pub dim_h: usize,
    pub d: usize,
    pub row_norms: Vec<f64>,
    pub is_contraction_tuple: bool,
    pub commutation_residual: f64,
    pub covariance_residual: Option<f64>,
    pub szego_hat1: SzegoReport,
    pub szego_hatn: SzegoReport,
    pub hatn_purity: Vec<PurityReport>,
    pub hatn_pure: PurityVerdict,
    pub in_t1n: bool,
    pub gkvw: Vec<GkvwEntry>,
}

impl ClassReport {
    pub fn is_representation(&self) -> bool {
        self.is_contraction_tuple
            && self.commutation_residual <= STRUCTURE_TOL
            && self.covariance_residual.map_or(true, |r| r <= STRUCTURE_TOL)
    }
}

impl TupleSpec {
    /// A `d = 1` tuple with trivial phases.
    pub fn new(matrices: Vec<ComplexMatrix>) -> Self {
        let n = matrices.len();
        let dim_h = matrices.first().map_or(0, |m| m.nrows());
        TupleSpec {
            n,
            dim_h,
            d: 1,
            blocks: matrices.into_iter().map(|m| vec![m]).collect(),
            phases: trivial_phases(n),
            algebra: None,
        }
    }

    /// Scalars on `H = C`.
    pub fn scalars(values: &[C64]) -> Self {
        Self::new(values.iter().map(|&z| ComplexMatrix::from_element(1, 1, z)).collect())
    }

    pub fn with_phases(mut self, phases: Vec<Vec<C64>>) -> Self {
        self.phases = phases;
        self
    }

    pub fn with_algebra(mut self, algebra: AlgebraStructure) -> Self {
        self.algebra = Some(algebra);
        self
    }

    /// `t_i` for a `d = 1` tuple.
    pub fn op(&self, i: usize) -> &ComplexMatrix {
        &self.blocks[i][0]
    }

    pub fn phase(&self, i: usize, j: usize) -> C64 {
        self.phases[i][j]
    }

    pub fn has_trivial_phases(&self) -> bool {
        self.phases.iter().flatten().all(|z| (z - c(1.0, 0.0)).norm() <= PHASE_TOL)
    }

    pub fn validate(&self) -> Result<(), TupleError> {
        if self.n == 0 {
            return malformed("n must be at least 1");
        }
        if self.d == 0 {
            return malformed("d must be at least 1");
        }
        if self.blocks.len() != self.n {
            return malformed(format!("expected {} operators, found {}", self.n, self.blocks.len()));
        }
        for (i, row) in self.blocks.iter().enumerate() {
            if row.len() != self.d {
                return malformed(format!("operator {} has {} components, expected d = {}", i + 1, row.len(), self.d));
            }
            for (j, m) in row.iter().enumerate() {
                if m.shape() != (self.dim_h, self.dim_h) {
                    return malformed(format!(
                        "T[{}][{}] is {}x{}, expected {}x{}",
                        i + 1,
                        j + 1,
                        m.nrows(),
                        m.ncols(),
                        self.dim_h,
                        self.dim_h
                    ));
                }
                if !linalg::is_finite(m) {
                    return malformed(format!("T[{}][{}] has non-finite entries", i + 1, j + 1));
                }
            }
        }
        self.validate_phases()?;
        if let Some(alg) = &self.algebra {
            self.validate_algebra(alg)?;
        }
        Ok(())
    }

    fn validate_phases(&self) -> Result<(), TupleError> {
        if self.phases.len() != self.n || self.phases.iter().any(|r| r.len() != self.n) {
            return malformed(format!("phase table must be {}x{}", self.n, self.n));
        }
        for i in 0..self.n {
            for j in 0..self.n {
                let u = self.phases[i][j];
                if !(u.re.is_finite() && u.im.is_finite()) || (u.norm() - 1.0).abs() > PHASE_TOL {
                    return malformed(format!("phase u[{}][{}] is not unimodular", i + 1, j + 1));
                }
                if i == j && (u - c(1.0, 0.0)).norm() > PHASE_TOL {
                    return malformed(format!("phase u[{}][{}] must be 1", i + 1, i + 1));
                }
                if (u - self.phases[j][i].conj()).norm() > PHASE_TOL {
                    return malformed(format!("phase u[{}][{}] is not the conjugate of u[{}][{}]", j + 1, i + 1, i + 1, j + 1));
                }
            }
        }
        if self.d > 1 && !self.has_trivial_phases() {
            return malformed("phases are only supported for d = 1");
        }
        Ok(())
    }

    fn validate_algebra(&self, alg: &AlgebraStructure) -> Result<(), TupleError> {
        if alg.k == 0 {
            return malformed("algebra must have k >= 1");
        }
        if self.d != 1 {
            return malformed("algebra structure is only supported for d = 1");
        }
        if alg.block_of.len() != self.dim_h {
            return malformed(format!("block_of has length {}, expected dimH = {}", alg.block_of.len(), self.dim_h));
        }
        if let Some(b) = alg.block_of.iter().find(|&&b| b >= alg.k) {
            return malformed(format!("block_of entry {} is out of range for k = {}", b, alg.k));
        }
        if alg.automorphisms.len() != self.n {
            return malformed(format!("expected {} automorphisms, found {}", self.n, alg.automorphisms.len()));
        }
        for (i, p) in alg.automorphisms.iter().enumerate() {
            let mut seen = vec![false; alg.k];
            if p.len() != alg.k || p.iter().any(|&x| x >= alg.k || std::mem::replace(&mut seen[x], true)) {
                return malformed(format!("automorphism {} is not a permutation of 0..{}", i + 1, alg.k));
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                let (a, b) = (&alg.automorphisms[i], &alg.automorphisms[j]);
                if compose(a, b) != compose(b, a) {
                    return malformed(format!("automorphisms {} and {} do not commute", j + 1, i + 1));
                }
            }
        }
        Ok(())
    }

    /// Row operator `(T_{i,1} ... T_{i,d})`.
    pub fn row_operator(&self, i: usize) -> ComplexMatrix {
        let parts: Vec<&ComplexMatrix> = self.blocks[i].iter().collect();
        linalg::hstack(&parts)
    }

    /// `T_{n1} (I ⊗ T_{n2}) ... (I ⊗ ... ⊗ T_{nk})` for 0-based indices.
    pub fn subset_product(&self, g: &[usize]) -> ComplexMatrix {
        match g.split_first() {
            None => identity(self.dim_h),
            Some((&first, rest)) => {
                let head = self.row_operator(first);
                if rest.is_empty() {
                    head
                } else {
                    head * kron(&identity(self.d), &self.subset_product(rest))
                }
            }
        }
    }

    /// `sum_{G ⊆ S} (-1)^{|G|} T_G T_G^*` with `G` in increasing order.
    pub fn szego_operator(&self, subset: &[usize]) -> ComplexMatrix {
        let mut s: Vec<usize> = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        let mut acc = zeros(self.dim_h, self.dim_h);
        for mask in 0u64..(1u64 << s.len()) {
            let g: Vec<usize> = s.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
            let tg = self.subset_product(&g);
            let sign = if g.len() % 2 == 0 { 1.0 } else { -1.0 };
            acc += (&tg * tg.adjoint()) * c(sign, 0.0);
        }
        acc
    }

    /// Matrix of `X ↦ sum_j T_{i,j} X T_{i,j}^*` on column-major `vec(X)`.
    pub fn cp_map_matrix(&self, i: usize) -> ComplexMatrix {
        let n2 = self.dim_h * self.dim_h;
        let mut acc = zeros(n2, n2);
        for t in &self.blocks[i] {
            acc += kron(&t.map(|z| z.conj()), t);
        }
        acc
    }

    pub fn purity(&self, i: usize) -> Result<PurityReport, TupleError> {
        let rho = linalg::spectral_radius(&self.cp_map_matrix(i))?;
        let verdict = if rho < 1.0 - PURITY_MARGIN {
            PurityVerdict::Pure
        } else if rho > 1.0 + PURITY_MARGIN {
            PurityVerdict::NotPure
        } else {
            PurityVerdict::Indeterminate
        };
        Ok(PurityReport { index: i + 1, spectral_radius: rho, verdict })
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        let r = self.row_operator(i);
        linalg::op_norm(&(&r * r.adjoint())).sqrt()
    }

    pub fn commutation_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let u = self.phases[i][j];
                for a in &self.blocks[i] {
                    for b in &self.blocks[j] {
                        let lhs = a * b;
                        let rhs = (b * a) * u;
                        worst = worst.max(linalg::residual(&lhs, &rhs));
                    }
                }
            }
        }
        worst
    }

    pub fn covariance_residual(&self) -> Option<f64> {
        let alg = self.algebra.as_ref()?;
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let t = self.op(i);
            let mut patterned = zeros(self.dim_h, self.dim_h);
            for q in 0..alg.k {
                patterned += alg.projector(alg.automorphisms[i][q]) * t * alg.projector(q);
            }
            worst = worst.max(linalg::fro_norm(&(t - patterned)));
        }
        Some(worst)
    }

    fn szego_report(&self, subset: &[usize], tol: f64) -> Result<SzegoReport, TupleError> {
        let report = linalg::psd_check(&self.szego_operator(subset), tol)?;
        Ok(SzegoReport { subset: subset.iter().map(|i| i + 1).collect(), min_eig: report.min_eig, psd: report.is_psd })
    }

    pub fn classify(&self) -> Result<ClassReport, TupleError> {
        self.classify_with_tol(PSD_TOL)
    }

    /// Classification with a caller-chosen relative PSD tolerance.
    pub fn classify_with_tol(&self, psd_tol: f64) -> Result<ClassReport, TupleError> {
        self.validate()?;
        let n = self.n;
        let row_norms: Vec<f64> = (0..n).map(|i| self.row_norm(i)).collect();
        let is_contraction_tuple = row_norms.iter().all(|&r| r <= 1.0 + CONTRACTION_TOL);
        let hat1: Vec<usize> = (1..n).collect();
        let hatn: Vec<usize> = (0..n.saturating_sub(1)).collect();
        let szego_hat1 = self.szego_report(&hat1, psd_tol)?;
        let szego_hatn = self.szego_report(&hatn, psd_tol)?;
        let hatn_purity = hatn.iter().map(|&i| self.purity(i)).collect::<Result<Vec<_>, _>>()?;
        let hatn_pure = if hatn_purity.iter().all(|p| p.verdict == PurityVerdict::Pure) {
            PurityVerdict::Pure
        } else if hatn_purity.iter().any(|p| p.verdict == PurityVerdict::NotPure) {
            PurityVerdict::NotPure
        } else {
            PurityVerdict::Indeterminate
        };
        let mut omit_psd = Vec::with_capacity(n);
        for p in 0..n {
            let rest: Vec<usize> = (0..n).filter(|&i| i != p).collect();
            omit_psd.push(linalg::psd_check(&self.szego_operator(&rest), psd_tol)?.is_psd);
        }
        let mut gkvw = Vec::new();
        for p in 0..n {
            for q in (p + 1)..n {
                gkvw.push(GkvwEntry { p: p + 1, q: q + 1, holds: omit_psd[p] && omit_psd[q] });
            }
        }
        Ok(ClassReport {
            n,
            dim_h: self.dim_h,
            d: self.d,
            row_norms,
            is_contraction_tuple,
            commutation_residual: self.commutation_residual(),
            covariance_residual: self.covariance_residual(),
            in_t1n: szego_hat1.psd && szego_hatn.psd && hatn_pure == PurityVerdict::Pure,
            szego_hat1,
            szego_hatn,
            hatn_purity,
            hatn_pure,
            gkvw,
        })
    }

    /// Phases of the merged tuple `(t_1 t_n, t_2, ..., t_{n-1})`.
    pub fn merged_phases(&self) -> Vec<Vec<C64>> {
        let n = self.n;
        let m = n - 1;
        let mut u = vec![vec![c(1.0, 0.0); m]; m];
        for i in 0..m {
            for j in 0..m {
                u[i][j] = match (i, j) {
                    (0, 0) => c(1.0, 0.0),
                    (i, 0) => self.phases[i][0] * self.phases[i][n - 1],
                    (0, j) => (self.phases[j][0] * self.phases[j][n - 1]).conj(),
                    (i, j) => self.phases[i][j],
                };
            }
        }
        u
    }

    /// The merged tuple `(t_1 t_n, t_2, ..., t_{n-1})` for `d = 1`, `n >= 2`.
    pub fn merge_1n(&self) -> TupleSpec {
        assert!(self.d == 1 && self.n >= 2, "merging needs d = 1 and n >= 2");
        let n = self.n;
        let mut mats = vec![self.op(0) * self.op(n - 1)];
        mats.extend((1..n - 1).map(|i| self.op(i).clone()));
        let algebra = self.algebra.as_ref().map(|alg| {
            let mut autos = vec![compose(&alg.automorphisms[0], &alg.automorphisms[n - 1])];
            autos.extend((1..n - 1).map(|i| alg.automorphisms[i].clone()));
            AlgebraStructure { k: alg.k, block_of: alg.block_of.clone(), automorphisms: autos }
        });
        TupleSpec {
            n: n - 1,
            dim_h: self.dim_h,
            d: 1,
            blocks: mats.into_iter().map(|m| vec![m]).collect(),
            phases: self.merged_phases(),
            algebra,
        }
    }
}

impl TupleSpec {
    /// `t^α = t_0^{α_0} t_1^{α_1} ...` for a `d = 1` tuple.
    pub fn monomial(&self, alpha: &[usize]) -> ComplexMatrix {
        let mut out = identity(self.dim_h);
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                out *= self.op(j);
            }
        }
        out
    }

    /// `I - sum_{|α| <= degree} t^α D^2 t^{α*}` in closed form, where `D^2` is
    /// the Szegő operator of the whole tuple: a signed sum of `t^β t^{β*}`
    /// over `degree < |β| <= degree + |supp β|`.
    pub fn simplex_tail(&self, degree: usize) -> ComplexMatrix {
        let m = self.n;
        let mut acc = zeros(self.dim_h, self.dim_h);
        for beta in crate::fock::enumerate_indices(m, degree + m) {
            let size: usize = beta.iter().sum();
            if size <= degree {
                continue;
            }
            let support = beta.iter().filter(|&&b| b > 0).count();
            let r = size - degree;
            if r > support {
                continue;
            }
            let coeff = crate::fock::binomial(support - 1, r - 1) as f64 * if r % 2 == 1 { 1.0 } else { -1.0 };
            let mono = self.monomial(&beta);
            acc += (&mono * mono.adjoint()) * c(coeff, 0.0);
        }
        acc
    }

    /// `I - sum_{max α_j < k} t^α D^2 t^{α*} = -sum_{G != ∅} (-1)^{|G|} t_G^k t_G^{k*}`.
    pub fn box_tail(&self, k: usize) -> ComplexMatrix {
        let m = self.n;
        let mut acc = zeros(self.dim_h, self.dim_h);
        for mask in 1u64..(1u64 << m) {
            let beta: Vec<usize> = (0..m).map(|j| if mask >> j & 1 == 1 { k } else { 0 }).collect();
            let mono = self.monomial(&beta);
            let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            acc += (&mono * mono.adjoint()) * c(sign, 0.0);
        }
        acc
    }
}

pub fn trivial_phases(n: usize) -> Vec<Vec<C64>> {
    vec![vec![c(1.0, 0.0); n]; n]
}

/// Phase table from the entries below the diagonal, `lower[(i, j)] = u_{i,j}`
/// for `i > j` (0-based); the rest is filled by conjugation.
pub fn phases_from_lower(n: usize, lower: &[((usize, usize), C64)]) -> Vec<Vec<C64>> {
    let mut u = trivial_phases(n);
    for &((i, j), z) in lower {
        u[i][j] = z;
        u[j][i] = z.conj();
    }
    u
}
