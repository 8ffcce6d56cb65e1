//! Finite-dimensional assembly of the dilation: defect operators, the
//! coupling unitary `U`, the transfer unitaries `U_1`, `U_n`, the induced
//! isometries on the truncated Fock model and the embedding `Π`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fock::{self, FockModel, MultiIndex};
use crate::linalg::{self, c, hstack, identity, vstack, zeros, ComplexMatrix, LinalgError, C64};
use crate::random::haar_unitary;
use crate::tuple::{compose, AlgebraStructure, TupleError, TupleSpec, PSD_TOL};
use crate::verifier;

/// Relative cutoff on eigenvalues of squared defect operators.
pub const DEFECT_RANK_TOL: f64 = 1e-10;
pub const GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Malformed(#[from] TupleError),
    #[error("tuple is not in the class: {0}")]
    NotInClass(String),
    #[error("multiplicity d = {0} is not supported by the dilation builder")]
    UnsupportedMultiplicity(usize),
    #[error("no auxiliary padding up to {max_pad} per component balances the complements (M1 = {m1:?}, M2 = {m2:?})")]
    InfeasibleFinitePadding { m1: Vec<usize>, m2: Vec<usize>, max_pad: usize },
    #[error("identity {name} has residual {residual:.3e} above {tol:.1e}")]
    IdentityResidualExceeded { name: String, residual: f64, tol: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub degree: usize,
    /// Extra auxiliary dimension in scalar mode.
    pub aux_pad: usize,
    /// Search bound per component for equivariant padding.
    pub max_pad: usize,
    /// 0 pairs complements canonically; other values rotate the codomain
    /// complement by a seeded unitary inside each component.
    pub completion_seed: u64,
    /// Relative PSD tolerance of the class test.
    pub psd_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { degree: 4, aux_pad: 0, max_pad: 6, completion_seed: 0, psd_tol: PSD_TOL }
    }
}

/// Squared defects, their roots and component-adapted range bases.
#[derive(Debug, Clone)]
pub struct DefectData {
    pub d1_sq: ComplexMatrix,
    pub dn_sq: ComplexMatrix,
    pub d1n_sq: ComplexMatrix,
    pub d1: ComplexMatrix,
    pub dn: ComplexMatrix,
    pub d1n: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub bn: ComplexMatrix,
    pub b1n: ComplexMatrix,
    pub labels1: Vec<usize>,
    pub labelsn: Vec<usize>,
    pub labels1n: Vec<usize>,
}

impl DefectData {
    pub fn r1(&self) -> usize {
        self.b1.ncols()
    }
    pub fn rn(&self) -> usize {
        self.bn.ncols()
    }
    pub fn r1n(&self) -> usize {
        self.b1n.ncols()
    }
}

/// `V`, `U` and the auxiliary data. Coordinates:
/// `D = [D_n | E_1 ⊗ D_1 | aux_1]` and the domain of `U` is
/// `[D_1 | E_n ⊗ D_n | aux_2]`.
#[derive(Debug, Clone)]
pub struct CouplingData {
    pub aux_dim: usize,
    pub frame_x: ComplexMatrix,
    pub frame_y: ComplexMatrix,
    pub v: ComplexMatrix,
    pub v0: ComplexMatrix,
    pub u: ComplexMatrix,
    pub u1_aux: ComplexMatrix,
    pub u2_aux: ComplexMatrix,
    pub complement_dims1: Vec<usize>,
    pub complement_dims2: Vec<usize>,
    pub aux_labels1: Vec<usize>,
    pub aux_labels2: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StructuralMaps {
    pub p1: ComplexMatrix,
    pub p2: ComplexMatrix,
    pub i1: ComplexMatrix,
    pub i2: ComplexMatrix,
    pub i1p: ComplexMatrix,
    pub i2p: ComplexMatrix,
    pub j2p: ComplexMatrix,
    pub embed_n: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct Blocks {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
}

impl Blocks {
    pub fn full(&self) -> ComplexMatrix {
        let top = hstack(&[&self.a, &self.b]);
        let bottom = hstack(&[&self.c, &zeros(self.c.nrows(), self.b.ncols())]);
        vstack(&[&top, &bottom])
    }
}

#[derive(Debug, Clone)]
pub struct TransferData {
    pub maps: StructuralMaps,
    pub first: Blocks,
    pub last: Blocks,
}

#[derive(Debug, Clone)]
pub struct DilationModel {
    pub spec: TupleSpec,
    pub merged: TupleSpec,
    pub defects: DefectData,
    pub coupling: CouplingData,
    pub transfer: TransferData,
    pub fock: FockModel,
    /// `Π: H → F_N(E) ⊗ D`.
    pub pi: ComplexMatrix,
    /// `[τ_1, L_2, ..., L_{n-1}, τ_n]` as operators on the truncated model.
    pub isometries: Vec<ComplexMatrix>,
    /// `I ⊗ (A^* + [I ⊗ C^*] B^*)` for the first and last generator, before
    /// moving the new tensor factor to the front.
    pub tau_raw: [ComplexMatrix; 2],
    /// Component label of each coordinate of `D` and of the whole model.
    pub coeff_labels: Vec<usize>,
    pub labels: Vec<usize>,
}

impl DilationModel {
    pub fn degree(&self) -> usize {
        self.fock.degree
    }

    pub fn coeff_dim(&self) -> usize {
        self.fock.coeff_dim
    }

    /// `ρ(e_p)` on the truncated model.
    pub fn rho(&self, p: usize) -> ComplexMatrix {
        label_projector(&self.labels, p)
    }

    pub fn k(&self) -> usize {
        self.spec.algebra.as_ref().map_or(1, |a| a.k)
    }
}

pub fn label_projector(labels: &[usize], p: usize) -> ComplexMatrix {
    let n = labels.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j && labels[i] == p { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn permute_labels(perm: &[usize], labels: &[usize]) -> Vec<usize> {
    labels.iter().map(|&l| perm[l]).collect()
}

/// Lift a single contraction to the pair `(t, 0)`.
pub fn embed_single(spec: &TupleSpec) -> TupleSpec {
    if spec.n != 1 {
        return spec.clone();
    }
    let mut out = spec.clone();
    out.n = 2;
    out.blocks.push(vec![zeros(spec.dim_h, spec.dim_h); spec.d]);
    out.phases = crate::tuple::trivial_phases(2);
    if let Some(alg) = out.algebra.as_mut() {
        alg.automorphisms.push((0..alg.k).collect());
    }
    out
}

fn components(spec: &TupleSpec) -> (usize, Vec<Vec<usize>>) {
    match &spec.algebra {
        Some(alg) => {
            let mut comps = vec![Vec::new(); alg.k];
            for (i, &b) in alg.block_of.iter().enumerate() {
                comps[b].push(i);
            }
            (alg.k, comps)
        }
        None => (1, vec![(0..spec.dim_h).collect()]),
    }
}

/// Root and range basis of a squared defect, computed blockwise per
/// component with one shared rank decision.
fn defect_root(d2: &ComplexMatrix, comps: &[Vec<usize>]) -> Result<(ComplexMatrix, ComplexMatrix, Vec<usize>), LinalgError> {
    let report = linalg::psd_check(d2, PSD_TOL)?;
    if !report.is_psd {
        return Err(LinalgError::NotPsd { min_eig: report.min_eig });
    }
    let h = d2.nrows();
    let scale = linalg::op_norm(d2).max(1.0);
    let mut root = zeros(h, h);
    let mut cols: Vec<ComplexMatrix> = Vec::new();
    let mut labels = Vec::new();
    for (p, idx) in comps.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let sub = ComplexMatrix::from_fn(idx.len(), idx.len(), |i, j| d2[(idx[i], idx[j])]);
        let (vals, vecs) = linalg::hermitian_eigen(&sub);
        let mut sub_root = zeros(idx.len(), idx.len());
        let mut proj = zeros(idx.len(), idx.len());
        for (k, &v) in vals.iter().enumerate() {
            if v > DEFECT_RANK_TOL * scale {
                let col = vecs.column(k);
                let outer = &col * col.adjoint();
                sub_root += &outer * c(v.sqrt(), 0.0);
                proj += outer;
            }
        }
        let basis = linalg::range_basis(&proj, 0.5);
        for i in 0..idx.len() {
            for j in 0..idx.len() {
                root[(idx[i], idx[j])] = sub_root[(i, j)];
            }
        }
        for k in 0..basis.ncols() {
            let mut col = zeros(h, 1);
            for i in 0..idx.len() {
                col[(idx[i], 0)] = basis[(i, k)];
            }
            cols.push(col);
            labels.push(p);
        }
    }
    let refs: Vec<&ComplexMatrix> = cols.iter().collect();
    let basis = if refs.is_empty() { zeros(h, 0) } else { hstack(&refs) };
    Ok((linalg::hermitian_part(&root), basis, labels))
}

pub fn build_defects(spec: &TupleSpec) -> Result<DefectData, BuildError> {
    let n = spec.n;
    let hat1: Vec<usize> = (1..n).collect();
    let hatn: Vec<usize> = (0..n - 1).collect();
    let merged = spec.merge_1n();
    let all: Vec<usize> = (0..merged.n).collect();
    let d1_sq = spec.szego_operator(&hat1);
    let dn_sq = spec.szego_operator(&hatn);
    let d1n_sq = merged.szego_operator(&all);
    let (_, comps) = components(spec);
    let (d1, b1, labels1) = defect_root(&d1_sq, &comps)?;
    let (dn, bn, labelsn) = defect_root(&dn_sq, &comps)?;
    let (d1n, b1n, labels1n) = defect_root(&d1n_sq, &comps)?;
    Ok(DefectData { d1_sq, dn_sq, d1n_sq, d1, dn, d1n, b1, bn, b1n, labels1, labelsn, labels1n })
}

/// Orthonormal basis of `(I - P) ambient`, split by component label.
fn complement_by_component(initial: &ComplexMatrix, labels: &[usize], k: usize) -> Vec<ComplexMatrix> {
    let dim = labels.len();
    let perp = identity(dim) - initial * initial.adjoint();
    (0..k)
        .map(|p| {
            let q = label_projector(labels, p);
            linalg::range_basis(&(&q * &perp * &q), 1e-6)
        })
        .collect()
}

/// Smallest `m1` (then lexicographically) with `m1 = m2 ∘ π_1^{-1}`,
/// `m2 = m1 ∘ π_n^{-1}` and `μ2 + m2 = μ1 + m1`.
pub fn solve_aux(mu1: &[usize], mu2: &[usize], pi1: &[usize], pin: &[usize], max_pad: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let k = mu1.len();
    let inv = |p: &[usize]| {
        let mut out = vec![0; p.len()];
        for (q, &x) in p.iter().enumerate() {
            out[x] = q;
        }
        out
    };
    let (pi1_inv, pin_inv) = (inv(pi1), inv(pin));
    let mut best: Option<(usize, Vec<usize>, Vec<usize>)> = None;
    let mut m1 = vec![0usize; k];
    loop {
        let m2: Vec<usize> = (0..k).map(|p| m1[pin_inv[p]]).collect();
        let feasible = (0..k).all(|p| m1[p] == m2[pi1_inv[p]] && mu2[p] + m2[p] == mu1[p] + m1[p]);
        if feasible {
            let size: usize = m1.iter().sum();
            if best.as_ref().map_or(true, |(s, _, _)| size < *s) {
                best = Some((size, m1.clone(), m2));
            }
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return best.map(|(_, a, b)| (a, b));
            }
            pos -= 1;
            if m1[pos] < max_pad {
                m1[pos] += 1;
                for x in m1.iter_mut().skip(pos + 1) {
                    *x = 0;
                }
                break;
            }
        }
    }
}

fn grouped_labels(mult: &[usize]) -> Vec<usize> {
    mult.iter().enumerate().flat_map(|(p, &m)| std::iter::repeat(p).take(m)).collect()
}

/// Permutation matrix sending the `j`-th basis vector of label `p` in the
/// source to the `j`-th basis vector of label `p` in the target.
fn label_matching(source: &[usize], target: &[usize]) -> ComplexMatrix {
    let mut out = zeros(target.len(), source.len());
    let mut used = vec![false; target.len()];
    for (s, &l) in source.iter().enumerate() {
        let t = (0..target.len()).find(|&t| !used[t] && target[t] == l).expect("label multiplicities agree");
        used[t] = true;
        out[(t, s)] = c(1.0, 0.0);
    }
    out
}

fn embed_rows(m: &ComplexMatrix, total: usize, offset: usize) -> ComplexMatrix {
    let mut out = zeros(total, m.ncols());
    out.view_mut((offset, 0), m.shape()).copy_from(m);
    out
}

/// `X_0 = [D_n h ; D_1 t_1^* h]` and `Y_0 = [D_1 h ; D_n t_n^* h]` in the
/// coordinates of the defect bases.
pub fn frames(spec: &TupleSpec, defects: &DefectData) -> (ComplexMatrix, ComplexMatrix) {
    let (t1, tn) = (spec.op(0), spec.op(spec.n - 1));
    let x0 = vstack(&[&(defects.bn.adjoint() * &defects.dn), &(defects.b1.adjoint() * &defects.d1 * t1.adjoint())]);
    let y0 = vstack(&[&(defects.b1.adjoint() * &defects.d1), &(defects.bn.adjoint() * &defects.dn * tn.adjoint())]);
    (x0, y0)
}

pub fn build_coupling(spec: &TupleSpec, defects: &DefectData, options: &BuildOptions) -> Result<CouplingData, BuildError> {
    let n = spec.n;
    let (r1, rn) = (defects.r1(), defects.rn());
    let (x0, y0) = frames(spec, defects);
    let v0 = linalg::isometry_from_frames(&x0, &y0, GRAM_TOL)?;

    let (k, pi1, pin) = match &spec.algebra {
        Some(alg) => (alg.k, alg.automorphisms[0].clone(), alg.automorphisms[n - 1].clone()),
        None => (1, vec![0], vec![0]),
    };
    let labels_amb1: Vec<usize> = defects.labelsn.iter().copied().chain(permute_labels(&pi1, &defects.labels1)).collect();
    let labels_amb2: Vec<usize> = defects.labels1.iter().copied().chain(permute_labels(&pin, &defects.labelsn)).collect();
    let comp1 = complement_by_component(&v0.initial_space, &labels_amb1, k);
    let comp2 = complement_by_component(&v0.final_space, &labels_amb2, k);
    let mu1: Vec<usize> = comp1.iter().map(|b| b.ncols()).collect();
    let mu2: Vec<usize> = comp2.iter().map(|b| b.ncols()).collect();

    let (m1, m2) = if spec.algebra.is_some() {
        let bound = options.max_pad.max(options.aux_pad);
        solve_aux(&mu1, &mu2, &pi1, &pin, bound).ok_or(BuildError::InfeasibleFinitePadding {
            m1: mu1.clone(),
            m2: mu2.clone(),
            max_pad: bound,
        })?
    } else {
        if mu1 != mu2 {
            return Err(BuildError::InfeasibleFinitePadding { m1: mu1, m2: mu2, max_pad: options.aux_pad });
        }
        (vec![options.aux_pad], vec![options.aux_pad])
    };
    let aux_labels1 = grouped_labels(&m1);
    let aux_labels2 = grouped_labels(&m2);
    let e = aux_labels1.len();
    let u2_aux = label_matching(&aux_labels2, &permute_labels(&pin, &aux_labels1));
    let u1_aux = label_matching(&permute_labels(&pi1, &aux_labels2), &aux_labels1);

    let delta0 = r1 + rn;
    let delta = delta0 + e;
    let w = linalg::direct_sum(&[&v0.map.adjoint(), &zeros(e, e)]);
    let mut rng = ChaCha8Rng::seed_from_u64(options.completion_seed);
    let mut dom_cols: Vec<ComplexMatrix> = Vec::new();
    let mut cod_cols: Vec<ComplexMatrix> = Vec::new();
    for p in 0..k {
        let aux2 = ComplexMatrix::from_fn(e, m2[p], |i, j| {
            let pos = aux_labels2.iter().position(|&l| l == p).unwrap_or(0);
            if i == pos + j { c(1.0, 0.0) } else { c(0.0, 0.0) }
        });
        let aux1 = ComplexMatrix::from_fn(e, m1[p], |i, j| {
            let pos = aux_labels1.iter().position(|&l| l == p).unwrap_or(0);
            if i == pos + j { c(1.0, 0.0) } else { c(0.0, 0.0) }
        });
        let dom = hstack(&[&embed_rows(&comp2[p], delta, 0), &embed_rows(&aux2, delta, delta0)]);
        let mut cod = hstack(&[&embed_rows(&comp1[p], delta, 0), &embed_rows(&aux1, delta, delta0)]);
        if options.completion_seed != 0 && cod.ncols() > 0 {
            let rot = haar_unitary(cod.ncols(), &mut rng);
            cod *= rot;
        }
        dom_cols.push(dom);
        cod_cols.push(cod);
    }
    let dom_refs: Vec<&ComplexMatrix> = dom_cols.iter().collect();
    let cod_refs: Vec<&ComplexMatrix> = cod_cols.iter().collect();
    let u = linalg::unitary_completion(&w, &hstack(&dom_refs), &hstack(&cod_refs))?;

    let frame_x = vstack(&[&x0, &zeros(e, spec.dim_h)]);
    let frame_y = vstack(&[&y0, &zeros(e, spec.dim_h)]);
    let f = defects.b1n.adjoint() * &defects.d1n;
    let v = linalg::isometry_from_frames(&f, &frame_x, GRAM_TOL)?;
    if v.initial_space.ncols() != defects.r1n() {
        return Err(LinalgError::Numerical(format!(
            "V has rank {} on a defect space of dimension {}",
            v.initial_space.ncols(),
            defects.r1n()
        ))
        .into());
    }
    Ok(CouplingData {
        aux_dim: e,
        frame_x,
        frame_y,
        v: v.map,
        v0: v0.map,
        u,
        u1_aux,
        u2_aux,
        complement_dims1: mu1,
        complement_dims2: mu2,
        aux_labels1,
        aux_labels2,
    })
}

fn selector(total: usize, offset: usize, len: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(total, len, |i, j| if i == offset + j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn build_transfer(spec: &TupleSpec, defects: &DefectData, coupling: &CouplingData) -> TransferData {
    let (r1, rn, e) = (defects.r1(), defects.rn(), coupling.aux_dim);
    let delta = r1 + rn + e;
    let u = &coupling.u;
    let p1 = selector(delta, rn, r1).adjoint();
    let i1 = selector(delta, 0, r1);
    let i2 = hstack(&[&selector(delta, 0, rn), &selector(delta, rn + r1, e)]);
    let i2p = selector(delta, r1, rn + e);
    let j2p = &i2p * linalg::direct_sum(&[&identity(rn), &coupling.u2_aux.adjoint()]);
    let p2 = selector(delta, r1, rn + e).adjoint();
    let embed_n = hstack(&[&selector(delta, 0, rn), &(selector(delta, rn + r1, e) * &coupling.u2_aux)]);
    let i1p = selector(delta, rn, r1);
    let u1n = spec.phase(0, spec.n - 1);
    let first = Blocks { a: u * &i1 * &p1, b: u * &j2p, c: i2.adjoint() };
    let last = Blocks { a: &embed_n * &p2 * u.adjoint(), b: &i1p * u1n, c: i1.adjoint() * u.adjoint() };
    TransferData { maps: StructuralMaps { p1, p2, i1, i2, i1p, i2p, j2p, embed_n }, first, last }
}

/// Scalar with `s^α t_g = κ t_g s^α` for the merged monomial `s^α` and the
/// original generator `g`.
pub fn commute_phase(spec: &TupleSpec, alpha: &[usize], g: usize) -> C64 {
    let n = spec.n;
    alpha.iter().enumerate().fold(c(1.0, 0.0), |acc, (j, &a)| {
        let step = if j == 0 { spec.phase(0, g) * spec.phase(n - 1, g) } else { spec.phase(j, g) };
        acc * fock::phase_pow(step, a)
    })
}

fn transfer_operator(fock: &FockModel, blocks: &Blocks) -> ComplexMatrix {
    let shifted = blocks.c.adjoint() * blocks.b.adjoint();
    fock.cellwise(&blocks.a.adjoint(), |_| c(1.0, 0.0)) + fock.embed_shift(&shifted)
}

/// Assemble the model from coupling data without any residual gating.
pub fn assemble_model(spec: &TupleSpec, defects: DefectData, coupling: CouplingData, degree: usize) -> DilationModel {
    let n = spec.n;
    let merged = spec.merge_1n();
    let transfer = build_transfer(spec, &defects, &coupling);
    let delta = defects.r1() + defects.rn() + coupling.aux_dim;
    let fock = FockModel::new(n - 1, degree, delta, merged.phases.clone());

    let f = &coupling.v * defects.b1n.adjoint() * &defects.d1n;
    let mut pi = zeros(fock.dim(), spec.dim_h);
    for (k, alpha) in fock.indices.iter().enumerate() {
        let cell = &f * merged.monomial(alpha).adjoint();
        pi.view_mut((fock.offset(k), 0), cell.shape()).copy_from(&cell);
    }

    let tau_first = transfer_operator(&fock, &transfer.first);
    let tau_last = transfer_operator(&fock, &transfer.last);
    let flip = |g: usize| fock.cellwise(&identity(delta), |a| commute_phase(spec, a, g).conj());
    let mut isometries = vec![&tau_first * flip(0)];
    for i in 1..n - 1 {
        isometries.push(fock.creation_matrix(i));
    }
    isometries.push(&tau_last * flip(n - 1));

    let (coeff_labels, labels) = model_labels(spec, &defects, &coupling, &fock);
    DilationModel {
        spec: spec.clone(),
        merged,
        defects,
        coupling,
        transfer,
        fock,
        pi,
        isometries,
        tau_raw: [tau_first, tau_last],
        coeff_labels,
        labels,
    }
}

fn model_labels(spec: &TupleSpec, defects: &DefectData, coupling: &CouplingData, fock: &FockModel) -> (Vec<usize>, Vec<usize>) {
    let n = spec.n;
    let default_alg;
    let alg: &AlgebraStructure = match &spec.algebra {
        Some(a) => a,
        None => {
            default_alg = AlgebraStructure { k: 1, block_of: vec![0; spec.dim_h], automorphisms: vec![vec![0]; n] };
            &default_alg
        }
    };
    let pi1 = &alg.automorphisms[0];
    let coeff: Vec<usize> = defects
        .labelsn
        .iter()
        .copied()
        .chain(permute_labels(pi1, &defects.labels1))
        .chain(coupling.aux_labels1.iter().copied())
        .collect();
    let mut gens = vec![compose(&alg.automorphisms[0], &alg.automorphisms[n - 1])];
    gens.extend((1..n - 1).map(|i| alg.automorphisms[i].clone()));
    let mut labels = Vec::with_capacity(fock.dim());
    for alpha in &fock.indices {
        let mut perm: Vec<usize> = (0..alg.k).collect();
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                perm = compose(&gens[j], &perm);
            }
        }
        labels.extend(permute_labels(&perm, &coeff));
    }
    (coeff, labels)
}

/// Gate each construction identity against its tolerance.
pub fn self_check(model: &DilationModel) -> Result<(), BuildError> {
    for entry in verifier::verify_construction(model) {
        if let Some(tol) = entry.tol {
            if !(entry.residual <= tol) {
                return Err(BuildError::IdentityResidualExceeded { name: entry.name, residual: entry.residual, tol });
            }
        }
    }
    Ok(())
}

/// Classify, then construct the model without gating its identities.
pub fn build(spec: &TupleSpec, options: &BuildOptions) -> Result<DilationModel, BuildError> {
    spec.validate()?;
    if spec.d != 1 {
        return Err(BuildError::UnsupportedMultiplicity(spec.d));
    }
    let spec = embed_single(spec);
    let report = spec.classify_with_tol(options.psd_tol)?;
    if !report.in_t1n {
        let mut reasons = Vec::new();
        if !report.szego_hat1.psd {
            reasons.push(format!("Szegő operator without index 1 has min eigenvalue {:.6e}", report.szego_hat1.min_eig));
        }
        if !report.szego_hatn.psd {
            reasons.push(format!("Szegő operator without index n has min eigenvalue {:.6e}", report.szego_hatn.min_eig));
        }
        for p in &report.hatn_purity {
            if p.verdict != crate::tuple::PurityVerdict::Pure {
                reasons.push(format!("t_{} has spectral radius {:.12} ({:?})", p.index, p.spectral_radius, p.verdict));
            }
        }
        return Err(BuildError::NotInClass(reasons.join("; ")));
    }
    if !report.is_representation() {
        return Err(BuildError::NotInClass(format!(
            "not a covariant commuting contraction tuple (row norms {:?}, commutation {:.3e}, covariance {:?})",
            report.row_norms, report.commutation_residual, report.covariance_residual
        )));
    }
    let defects = build_defects(&spec)?;
    let coupling = build_coupling(&spec, &defects, options)?;
    Ok(assemble_model(&spec, defects, coupling, options.degree))
}

/// Build the model and gate every construction identity.
pub fn dilate(spec: &TupleSpec, options: &BuildOptions) -> Result<DilationModel, BuildError> {
    let model = build(spec, options)?;
    self_check(&model)?;
    Ok(model)
}

/// Multi-indices of `Z_+^m` with `|α| <= degree`, exposed for callers that
/// enumerate moments.
pub fn multi_indices(m: usize, degree: usize) -> Vec<MultiIndex> {
    fock::enumerate_indices(m, degree)
}
