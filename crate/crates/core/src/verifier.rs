//! Residual checks for a dilation model. Every residual is
//! `||LHS - RHS||_F / max(1, ||RHS||_F)`, restricted to cells far enough
//! from the truncation degree for the identity to be exact.

use serde::{Deserialize, Serialize};

use crate::builder::{label_projector, permute_labels, DilationModel};
use crate::fock;
use crate::linalg::{identity, residual, ComplexMatrix};

pub const TOL_LINEAR: f64 = 1e-10;
pub const TOL_COMPOSED: f64 = 1e-9;
pub const TOL_UNITARY: f64 = 1e-12;
pub const TOL_TELESCOPING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub name: String,
    pub residual: f64,
    /// `None` for values that are reported but not gated.
    pub tol: Option<f64>,
}

impl ResidualEntry {
    pub fn gated(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        ResidualEntry { name: name.into(), residual, tol: Some(tol) }
    }

    pub fn reported(name: impl Into<String>, residual: f64) -> Self {
        ResidualEntry { name: name.into(), residual, tol: None }
    }

    pub fn passed(&self) -> bool {
        self.tol.map_or(true, |t| self.residual <= t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub degree: usize,
    pub entries: Vec<ResidualEntry>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed())
    }

    pub fn failures(&self) -> Vec<&ResidualEntry> {
        self.entries.iter().filter(|e| !e.passed()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn max_gated(&self) -> f64 {
        self.entries.iter().filter(|e| e.tol.is_some()).map(|e| e.residual).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub moment_degree: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { moment_degree: 3 }
    }
}

fn unitary_residual(u: &ComplexMatrix) -> f64 {
    let id = identity(u.ncols());
    residual(&(u.adjoint() * u), &id).max(residual(&(u * u.adjoint()), &identity(u.nrows())))
}

/// Identities of the finite construction: defect identity, frame Grams,
/// unitarity of `U`, `U_1`, `U_n`, their block relations and the lemmas
/// relating them to `V D_{1n}`.
pub fn verify_construction(model: &DilationModel) -> Vec<ResidualEntry> {
    let spec = &model.spec;
    let n = spec.n;
    let (t1, tn) = (spec.op(0), spec.op(n - 1));
    let d = &model.defects;
    let cp = &model.coupling;
    let tr = &model.transfer;
    let e = cp.aux_dim;
    let mut out = Vec::new();

    out.push(ResidualEntry::gated("defect_identity_first", residual(&d.d1n_sq, &(&d.dn_sq + t1 * &d.d1_sq * t1.adjoint())), TOL_LINEAR));
    out.push(ResidualEntry::gated("defect_identity_last", residual(&d.d1n_sq, &(&d.d1_sq + tn * &d.dn_sq * tn.adjoint())), TOL_LINEAR));
    out.push(ResidualEntry::gated(
        "frame_gram",
        residual(&(cp.frame_x.adjoint() * &cp.frame_x), &(cp.frame_y.adjoint() * &cp.frame_y)),
        TOL_LINEAR,
    ));
    out.push(ResidualEntry::gated("v_isometry", residual(&(cp.v.adjoint() * &cp.v), &identity(cp.v.ncols())), TOL_UNITARY));
    let vd = &cp.v * d.b1n.adjoint() * &d.d1n;
    out.push(ResidualEntry::gated("v_frame", residual(&vd, &cp.frame_x), TOL_LINEAR));
    out.push(ResidualEntry::gated("u_unitary", unitary_residual(&cp.u), TOL_UNITARY));
    out.push(ResidualEntry::gated("u_frames", residual(&(&cp.u * &cp.frame_y), &cp.frame_x), TOL_LINEAR));
    out.push(ResidualEntry::gated(
        "aux_unitaries",
        unitary_residual(&cp.u1_aux).max(unitary_residual(&cp.u2_aux)),
        TOL_UNITARY,
    ));

    for (tag, blocks) in [("first", &tr.first), ("last", &tr.last)] {
        out.push(ResidualEntry::gated(format!("transfer_{tag}_unitary"), unitary_residual(&blocks.full()), TOL_UNITARY));
        let ac = &blocks.a * blocks.c.adjoint();
        out.push(ResidualEntry::gated(
            format!("transfer_{tag}_ac"),
            residual(&ac, &ComplexMatrix::zeros(ac.nrows(), ac.ncols())),
            TOL_LINEAR,
        ));
        out.push(ResidualEntry::gated(
            format!("transfer_{tag}_cc"),
            residual(&(&blocks.c * blocks.c.adjoint()), &identity(blocks.c.nrows())),
            TOL_LINEAR,
        ));
        out.push(ResidualEntry::gated(
            format!("transfer_{tag}_aa_bb"),
            residual(&(&blocks.a * blocks.a.adjoint() + &blocks.b * blocks.b.adjoint()), &identity(blocks.a.nrows())),
            TOL_LINEAR,
        ));
    }

    let merged_first = t1 * tn;
    let (rn, r1) = (d.rn(), d.r1());
    let pad = |m: ComplexMatrix| crate::linalg::vstack(&[&m, &ComplexMatrix::zeros(e, m.ncols())]);
    let dn_c = d.bn.adjoint() * &d.dn;
    let d1_c = d.b1.adjoint() * &d.d1;
    let first = &tr.first;
    let lhs = &first.a * &vd + &first.b * pad(&dn_c * merged_first.adjoint());
    out.push(ResidualEntry::gated("transfer_first_lemma_top", residual(&lhs, &(&cp.frame_x * t1.adjoint())), TOL_LINEAR));
    out.push(ResidualEntry::gated("transfer_first_lemma_bottom", residual(&(&first.c * &vd), &pad(dn_c.clone())), TOL_LINEAR));
    let last = &tr.last;
    let lhs = &last.a * &vd + &last.b * (&d1_c * merged_first.adjoint());
    out.push(ResidualEntry::gated("transfer_last_lemma_top", residual(&lhs, &(&cp.frame_x * tn.adjoint())), TOL_LINEAR));
    out.push(ResidualEntry::gated("transfer_last_lemma_bottom", residual(&(&last.c * &vd), &d1_c), TOL_LINEAR));
    debug_assert_eq!(vd.nrows(), rn + r1 + e);
    out
}

/// `τ^* Π = Π t^*` for the two transfer isometries and `L_i^* Π = Π t_i^*`
/// for the creation operators, on cells of degree at most `N - 1`.
pub fn verify_intertwining(model: &DilationModel) -> Vec<ResidualEntry> {
    let n = model.spec.n;
    let Some(top) = model.degree().checked_sub(1) else { return Vec::new() };
    let sel = model.fock.degree_selector(top).adjoint();
    let mut out = Vec::new();
    for (g, w) in model.isometries.iter().enumerate() {
        let lhs = &sel * w.adjoint() * &model.pi;
        let rhs = &sel * &model.pi * model.spec.op(g).adjoint();
        out.push(ResidualEntry::gated(format!("intertwine_{}", g + 1), residual(&lhs, &rhs), TOL_LINEAR));
    }
    let l1 = model.fock.creation_matrix(0);
    let lhs = &sel * l1.adjoint() * &model.pi;
    let rhs = &sel * &model.pi * model.merged.op(0).adjoint();
    out.push(ResidualEntry::gated("intertwine_merged", residual(&lhs, &rhs), TOL_LINEAR));
    debug_assert_eq!(model.isometries.len(), n);
    out
}

/// Isometry on `interior(1)` and twisted commutation on `interior(2)`.
pub fn verify_isometric_rep(model: &DilationModel) -> Vec<ResidualEntry> {
    let n = model.spec.n;
    let mut out = Vec::new();
    if let Some(top) = model.degree().checked_sub(1) {
        let sel = model.fock.degree_selector(top);
        for (g, w) in model.isometries.iter().enumerate() {
            out.push(ResidualEntry::gated(format!("isometry_{}", g + 1), residual(&(w.adjoint() * (w * &sel)), &sel), TOL_LINEAR));
        }
    }
    if let Some(top) = model.degree().checked_sub(2) {
        let sel = model.fock.degree_selector(top);
        for i in 0..n {
            for j in (i + 1)..n {
                let (wi, wj) = (&model.isometries[i], &model.isometries[j]);
                let lhs = wi * (wj * &sel);
                let rhs = wj * (wi * &sel) * model.spec.phase(i, j);
                out.push(ResidualEntry::gated(format!("commute_{}_{}", i + 1, j + 1), residual(&lhs, &rhs), TOL_COMPOSED));
            }
        }
    }
    out
}

/// `τ_1 τ_n = L_1` and `τ_n τ_1 = u_{n,1} L_1` on `interior(2)`.
pub fn verify_factorization(model: &DilationModel) -> Vec<ResidualEntry> {
    let n = model.spec.n;
    let Some(top) = model.degree().checked_sub(2) else { return Vec::new() };
    let sel = model.fock.degree_selector(top);
    let l1 = model.fock.creation_matrix(0) * &sel;
    let (w1, wn) = (&model.isometries[0], &model.isometries[n - 1]);
    vec![
        ResidualEntry::gated("factor_first_last", residual(&(w1 * (wn * &sel)), &l1), TOL_COMPOSED),
        ResidualEntry::gated("factor_last_first", residual(&(wn * (w1 * &sel)), &(&l1 * model.spec.phase(n - 1, 0))), TOL_COMPOSED),
    ]
}

/// `<Π h, W^α Π g>` against `<h, t^α g>` for `|α| <= max_degree`. The gated
/// entry accounts for truncation exactly: the left side is cut to cells of
/// degree at most `N - |α|` and the right side carries the matching
/// closed-form tail of the merged tuple.
pub fn verify_moments(model: &DilationModel, max_degree: usize) -> Vec<ResidualEntry> {
    let n = model.spec.n;
    let max_degree = max_degree.min(model.degree());
    let mut worst = 0.0f64;
    let mut worst_raw = 0.0f64;
    let pi = &model.pi;
    let tails: Vec<ComplexMatrix> = (0..=model.degree()).map(|k| model.merged.simplex_tail(k)).collect();
    let apply = |alpha: &[usize], mut x: ComplexMatrix| {
        for (g, &a) in alpha.iter().enumerate().rev() {
            for _ in 0..a {
                x = &model.isometries[g] * x;
            }
        }
        x
    };
    for alpha in fock::enumerate_indices(n, max_degree) {
        let t = model.spec.monomial(&alpha);
        let keep = model.degree() - fock::total(&alpha);
        let lhs = pi.adjoint() * apply(&alpha, model.fock.degree_projector(keep) * pi);
        let rhs = &t * (identity(model.spec.dim_h) - &tails[keep]);
        worst = worst.max(residual(&lhs, &rhs));
        worst_raw = worst_raw.max(residual(&(pi.adjoint() * apply(&alpha, pi.clone())), &t));
    }
    vec![ResidualEntry::gated("moments", worst, TOL_LINEAR), ResidualEntry::reported("moments_untruncated", worst_raw)]
}

/// `Π^* Π + tail = I` for the total-degree truncation and for the largest
/// box `max α_j < k` inside it, both with closed-form tails.
pub fn verify_pi(model: &DilationModel) -> Vec<ResidualEntry> {
    let pi = &model.pi;
    let h = model.spec.dim_h;
    let m = model.fock.m;
    let tail = model.merged.simplex_tail(model.degree());
    let gram = pi.adjoint() * pi;
    let id = identity(h);
    let k = model.degree() / m + 1;
    let mut box_sel = ComplexMatrix::zeros(model.fock.dim(), model.fock.dim());
    for (cell, alpha) in model.fock.indices.iter().enumerate() {
        if alpha.iter().all(|&a| a < k) {
            for r in 0..model.coeff_dim() {
                let o = model.fock.offset(cell) + r;
                box_sel[(o, o)] = crate::linalg::c(1.0, 0.0);
            }
        }
    }
    let box_gram = pi.adjoint() * box_sel * pi;
    let max_tail = (0..h).map(|i| tail[(i, i)].re).fold(0.0, f64::max);
    vec![
        ResidualEntry::gated("pi_isometry", residual(&(&gram + &tail), &id), TOL_TELESCOPING),
        ResidualEntry::gated("pi_tail_match", residual(&(&box_gram + model.merged.box_tail(k)), &id), TOL_TELESCOPING),
        ResidualEntry::reported("pi_tail_max", max_tail),
    ]
}

/// Per-basis-vector tails `||h||^2 - ||Π h||^2` from the closed form.
pub fn tails(model: &DilationModel) -> Vec<f64> {
    let tail = model.merged.simplex_tail(model.degree());
    (0..model.spec.dim_h).map(|i| tail[(i, i)].re).collect()
}

/// Covariance of `U`, `U_1`, `U_n`, the model isometries and `Π` with
/// respect to the coefficient algebra. Empty without an algebra.
pub fn verify_equivariance(model: &DilationModel) -> Vec<ResidualEntry> {
    let Some(alg) = model.spec.algebra.as_ref() else { return Vec::new() };
    let n = model.spec.n;
    let d = &model.defects;
    let cp = &model.coupling;
    let (pi1, pin) = (&alg.automorphisms[0], &alg.automorphisms[n - 1]);
    let pi1n = crate::tuple::compose(pi1, pin);
    let coeff = &model.coeff_labels;
    let u_dom: Vec<usize> = d
        .labels1
        .iter()
        .copied()
        .chain(permute_labels(pin, &d.labelsn))
        .chain(cp.aux_labels2.iter().copied())
        .collect();
    let dprime: Vec<usize> = d.labelsn.iter().copied().chain(cp.aux_labels1.iter().copied()).collect();
    let first_dom: Vec<usize> = coeff.iter().copied().chain(permute_labels(&pi1n, &dprime)).collect();
    let first_cod: Vec<usize> = permute_labels(pi1, coeff).into_iter().chain(dprime.iter().copied()).collect();
    let last_dom: Vec<usize> = coeff.iter().copied().chain(permute_labels(&pi1n, &d.labels1)).collect();
    let last_cod: Vec<usize> = permute_labels(pin, coeff).into_iter().chain(d.labels1.iter().copied()).collect();
    let first_full = model.transfer.first.full();
    let last_full = model.transfer.last.full();

    let mut worst = std::collections::BTreeMap::<String, f64>::new();
    let mut note = |name: String, r: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(r);
    };
    for p in 0..alg.k {
        let check = |m: &ComplexMatrix, dom: &[usize], cod: &[usize]| {
            residual(&(m * label_projector(dom, p)), &(label_projector(cod, p) * m))
        };
        note("equivariant_u".into(), check(&cp.u, &u_dom, coeff));
        note("equivariant_transfer_first".into(), check(&first_full, &first_dom, &first_cod));
        note("equivariant_transfer_last".into(), check(&last_full, &last_dom, &last_cod));
        for (g, w) in model.isometries.iter().enumerate() {
            let twisted = permute_labels(&alg.automorphisms[g], &model.labels);
            note(format!("equivariant_isometry_{}", g + 1), check(w, &twisted, &model.labels));
        }
        let sigma = alg.projector(p);
        note("equivariant_pi".into(), residual(&(model.rho(p) * &model.pi), &(&model.pi * sigma)));
    }
    worst.into_iter().map(|(k, v)| ResidualEntry::gated(k, v, TOL_LINEAR)).collect()
}

pub fn verify_all(model: &DilationModel, options: &VerifyOptions) -> VerificationReport {
    let mut entries = verify_construction(model);
    entries.extend(verify_intertwining(model));
    entries.extend(verify_isometric_rep(model));
    entries.extend(verify_factorization(model));
    entries.extend(verify_moments(model, options.moment_degree));
    entries.extend(verify_pi(model));
    entries.extend(verify_equivariance(model));
    VerificationReport { degree: model.degree(), entries }
}
