mod common;

use approx::assert_abs_diff_eq;
use common::{triple, zero_tuple};
use dilation_forge::builder::label_projector;
use dilation_forge::io::{model_to_string, parse_model};
use dilation_forge::linalg::{c, fro_norm, identity, residual};
use dilation_forge::random::{generate, Style};
use dilation_forge::verifier::tails;
use dilation_forge::{dilate, verify_all, BuildOptions, DilationModel, TupleSpec, VerifyOptions};

fn at_degree(degree: usize) -> BuildOptions {
    BuildOptions { degree, ..BuildOptions::default() }
}

fn assert_passes(model: &DilationModel) {
    let report = verify_all(model, &VerifyOptions::default());
    let failing: Vec<_> = report.failures().iter().map(|e| (e.name.clone(), e.residual)).collect();
    assert!(failing.is_empty(), "failing entries: {failing:?}");
}

#[test]
fn zero_tuple_has_exact_residuals_and_no_tail() {
    let model = dilate(&zero_tuple(3, 2), &at_degree(3)).unwrap();
    let report = verify_all(&model, &VerifyOptions::default());
    for e in report.entries.iter().filter(|e| e.tol.is_some()) {
        assert!(e.residual < 1e-15, "{} = {}", e.name, e.residual);
    }
    assert!(tails(&model).iter().all(|&t| t == 0.0));
    // Π is supported on the vacuum cell
    let vacuum = model.fock.coeff_dim;
    assert_eq!(fro_norm(&model.pi.rows(vacuum, model.pi.nrows() - vacuum).into_owned()), 0.0);
}

#[test]
fn pair_with_unit_second_coordinate_has_geometric_tail() {
    let spec = TupleSpec::scalars(&[c(0.5, 0.0), c(1.0, 0.0)]);
    let model = dilate(&spec, &at_degree(4)).unwrap();
    assert_abs_diff_eq!(model.merged.op(0)[(0, 0)].re, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(tails(&model)[0], 0.25f64.powi(5), epsilon = 1e-14);
    assert_passes(&model);
}

#[test]
fn scalar_triple_model_shape() {
    let model = dilate(&triple(), &at_degree(4)).unwrap();
    assert_eq!(model.fock.num_cells(), 15);
    assert_eq!(model.isometries.len(), 3);
    // tail of the merged pair (0.15, 0.4) against direct summation
    let (a, b) = (0.15f64 * 0.15, 0.16f64);
    let d2 = (1.0 - a) * (1.0 - b);
    let kept: f64 = (0..=4).flat_map(|i| (0..=4 - i).map(move |j| a.powi(i) * b.powi(j as i32))).sum::<f64>() * d2;
    assert_abs_diff_eq!(tails(&model)[0], 1.0 - kept, epsilon = 1e-14);
    assert_passes(&model);
}

#[test]
fn degree_zero_model() {
    let t = generate(Style::ScaledCommuting, 3, 3, 11).unwrap();
    let model = dilate(&t, &at_degree(0)).unwrap();
    assert_eq!(model.fock.num_cells(), 1);
    let report = verify_all(&model, &VerifyOptions::default());
    assert!(report.passed());
    assert!(report.get("intertwine_1").is_none());
    let gram = model.pi.adjoint() * &model.pi;
    assert!(residual(&gram, &model.defects.d1n_sq) < 1e-12);
}

#[test]
fn single_contraction_is_embedded() {
    let spec = TupleSpec::scalars(&[c(0.6, 0.0)]);
    let model = dilate(&spec, &at_degree(3)).unwrap();
    assert_eq!(model.spec.n, 2);
    // the merged operator t·0 vanishes, so Π is an isometry at every degree
    assert_eq!(tails(&model)[0], 0.0);
    assert!(residual(&(model.pi.adjoint() * &model.pi), &identity(1)) < 1e-15);
    assert_passes(&model);
}

#[test]
fn every_style_passes_at_degree_four() {
    for style in [Style::JointlyNilpotent, Style::ScaledCommuting, Style::UCommuting, Style::Covariant] {
        for (n, seed) in [(2, 1u64), (3, 2), (4, 3)] {
            let t = generate(style, n, 3, seed).unwrap();
            let model = dilate(&t, &at_degree(4)).unwrap();
            assert_passes(&model);
        }
    }
}

#[test]
fn padding_and_seeds_keep_the_model_valid() {
    let t = generate(Style::JointlyNilpotent, 3, 4, 5).unwrap();
    let base = dilate(&t, &at_degree(3)).unwrap();
    let padded = dilate(&t, &BuildOptions { aux_pad: 2, ..at_degree(3) }).unwrap();
    assert_eq!(padded.coupling.aux_dim, base.coupling.aux_dim + 2);
    assert_passes(&padded);
    let seeded = dilate(&t, &BuildOptions { completion_seed: 9, ..at_degree(3) }).unwrap();
    assert_passes(&seeded);
    // Π only depends on V, which is fixed by the frames
    assert!(residual(&seeded.pi, &base.pi) < 1e-12);
}

#[test]
fn covariant_coupling_respects_components() {
    let t = generate(Style::Covariant, 3, 4, 2).unwrap();
    let model = dilate(&t, &at_degree(3)).unwrap();
    let report = verify_all(&model, &VerifyOptions::default());
    assert!(report.get("equivariant_u").is_some());
    assert_passes(&model);
    // every cell carries the coefficient labels permuted by the generators
    assert_eq!(model.labels.len(), model.fock.dim());
    for p in 0..2 {
        let rho = model.rho(p);
        assert_eq!(rho, label_projector(&model.labels, p));
    }
    let total = model.rho(0) + model.rho(1);
    assert_eq!(total, identity(model.fock.dim()));
}

#[test]
fn model_file_round_trip_is_consistent() {
    let t = generate(Style::UCommuting, 3, 3, 8).unwrap();
    let model = dilate(&t, &at_degree(3)).unwrap();
    let loaded = parse_model(&model_to_string(&model)).unwrap();
    for e in &loaded.consistency {
        assert!(e.passed(), "{} = {}", e.name, e.residual);
    }
    assert!(residual(&loaded.model.pi, &model.pi) < 1e-14);
    assert_passes(&loaded.model);
}
