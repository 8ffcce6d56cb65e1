#![allow(dead_code)]

use dilation_forge::linalg::{c, from_real, zeros, ComplexMatrix};
use dilation_forge::TupleSpec;

/// `T_i = [[0, 0], [A_i, 0]]` on `C^4` with `A = (I, X, Z)`.
pub fn parrott() -> TupleSpec {
    let a = [
        from_real(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]),
    ];
    TupleSpec::new(
        a.iter()
            .map(|ai| {
                let mut t = zeros(4, 4);
                t.view_mut((2, 0), (2, 2)).copy_from(ai);
                t
            })
            .collect(),
    )
}

pub fn triple() -> TupleSpec {
    TupleSpec::scalars(&[c(0.5, 0.0), c(0.4, 0.0), c(0.3, 0.0)])
}

pub fn zero_tuple(n: usize, dim_h: usize) -> TupleSpec {
    TupleSpec::new(vec![zeros(dim_h, dim_h); n])
}

pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}
