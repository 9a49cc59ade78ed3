use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use polariton_ed::sparse::CsrMatrix;

/// Dense GOE sample stored as a CSR matrix: off-diagonal entries N(0, 1),
/// diagonal N(0, 2).
pub fn goe_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CsrMatrix<f64> {
    let mut a = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let x: f64 = StandardNormal.sample(rng);
            let v = if i == j { x * 2f64.sqrt() } else { x };
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    CsrMatrix::from_rows(dim, a.into_iter().map(|row| row.into_iter().enumerate().collect()).collect())
}
