use dilation_forge::fock::{binomial, enumerate_indices, total, FockModel};
use dilation_forge::linalg::{c, identity, residual, zeros, ComplexMatrix};
use dilation_forge::tuple::phases_from_lower;
use proptest::prelude::*;

#[test]
fn index_enumeration() {
    let idx = enumerate_indices(2, 2);
    assert_eq!(idx, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
    assert_eq!(idx.len(), binomial(4, 2));
    for (m, n) in [(1, 5), (3, 4), (4, 3)] {
        let idx = enumerate_indices(m, n);
        assert_eq!(idx.len(), binomial(m + n, m));
        assert!(idx.windows(2).all(|w| total(&w[0]) <= total(&w[1])));
    }
    let f = FockModel::with_trivial_phases(2, 2, 3);
    assert_eq!((f.num_cells(), f.dim()), (6, 18));
    assert_eq!(f.position(&[1, 1]), Some(4));
    assert_eq!(f.position(&[3, 0]), None);
}

#[test]
fn single_generator_is_the_jordan_shift() {
    let f = FockModel::with_trivial_phases(1, 3, 1);
    let mut jordan = zeros(4, 4);
    for k in 0..3 {
        jordan[(k + 1, k)] = c(1.0, 0.0);
    }
    assert_eq!(f.creation_matrix(0), jordan);
}

fn quarter_twist(m: usize) -> Vec<Vec<dilation_forge::linalg::C64>> {
    let lower: Vec<_> = (0..m).flat_map(|i| (0..i).map(move |j| ((i, j), c(0.0, -1.0)))).collect();
    phases_from_lower(m, &lower)
}

#[test]
fn twisted_phase_on_a_cell() {
    let f = FockModel::new(2, 3, 1, quarter_twist(2));
    let l2 = f.creation_matrix(1);
    let from = f.position(&[2, 0]).unwrap();
    let to = f.position(&[2, 1]).unwrap();
    // (-i)^2 from moving past two copies of the first generator
    assert_eq!(l2[(to, from)], c(-1.0, 0.0));
    let l1 = f.creation_matrix(0);
    assert_eq!(l1[(f.position(&[1, 2]).unwrap(), f.position(&[0, 2]).unwrap())], c(1.0, 0.0));
}

#[test]
fn projectors_and_selectors() {
    let f = FockModel::with_trivial_phases(2, 3, 2);
    assert_eq!(f.interior_projector(0), identity(f.dim()));
    assert_eq!(f.interior_projector(4), zeros(f.dim(), f.dim()));
    let p = f.interior_projector(1);
    let trace: f64 = (0..f.dim()).map(|i| p[(i, i)].re).sum();
    assert_eq!(trace as usize, 2 * binomial(4, 2));
    let s = f.degree_selector(1);
    assert_eq!(s.adjoint() * &s, identity(s.ncols()));
    assert_eq!(&s * s.adjoint(), f.degree_projector(1));
}

#[test]
fn embed_shift_is_first_creation_times_cell_phase() {
    let f = FockModel::new(3, 3, 2, quarter_twist(3));
    let block = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
    let expected = f.creation_matrix(0) * f.cellwise(&block, |a| f.append_first_phase(a));
    assert!(residual(&f.embed_shift(&block), &expected) == 0.0);
}

fn random_phases(m: usize, angles: &[f64]) -> Vec<Vec<dilation_forge::linalg::C64>> {
    let mut lower = Vec::new();
    let mut k = 0;
    for i in 0..m {
        for j in 0..i {
            lower.push(((i, j), c(angles[k].cos(), angles[k].sin())));
            k += 1;
        }
    }
    phases_from_lower(m, &lower)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn creation_operators_are_isometric_inside(m in 1usize..4, n in 1usize..4, angles in prop::collection::vec(0.0..std::f64::consts::TAU, 6)) {
        let f = FockModel::new(m, n, 2, random_phases(m, &angles));
        let p = f.interior_projector(1);
        for i in 0..m {
            let l = f.creation_matrix(i);
            prop_assert!(residual(&(l.adjoint() * &l * &p), &p) < 1e-14);
            // the top degree is annihilated
            prop_assert!(residual(&(&l * (identity(f.dim()) - &p)), &zeros(f.dim(), f.dim())) == 0.0);
        }
    }

    #[test]
    fn creation_operators_twist_commute(m in 2usize..4, n in 2usize..4, angles in prop::collection::vec(0.0..std::f64::consts::TAU, 6)) {
        let f = FockModel::new(m, n, 1, random_phases(m, &angles));
        let p = f.interior_projector(2);
        for i in 0..m {
            for j in 0..m {
                let (li, lj) = (f.creation_matrix(i), f.creation_matrix(j));
                let lhs = &li * &lj * &p;
                let rhs = &lj * &li * &p * f.phases[i][j];
                prop_assert!(residual(&lhs, &rhs) < 1e-14);
            }
        }
    }
}
