//! Random-matrix surrogates for the spectral and multifractal estimators.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use polariton_ed::eigen::dense_eigensystem;
use polariton_ed::multifractal::{column_gfds, gfd_from_intensities, goe_reference, Moment};
use polariton_ed::spectral::{mean_r, Window, R_POISSON};

/// Large-D GOE value of the mean spacing ratio.
const R_GOE_ASYMPTOTIC: f64 = 0.5307;

#[test]
fn goe_surrogate_ratio_and_eigenvector_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dim = 600;
    let mut r_sum = 0.0;
    let mut d1 = Vec::new();
    for _ in 0..3 {
        let (values, vectors, _) = dense_eigensystem(&common::goe_matrix(dim, &mut rng), true, dim).unwrap();
        r_sum += mean_r(&values, &Window::MiddleThird).unwrap().mean;
        d1.extend(column_gfds(&vectors.unwrap(), Moment::ONE, dim as u64).unwrap());
    }
    let r = r_sum / 3.0;
    assert!((r - R_GOE_ASYMPTOTIC).abs() < 0.04, "<r> = {r}");

    let n = d1.len() as f64;
    let mean = d1.iter().sum::<f64>() / n;
    let var = d1.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let goe = goe_reference(dim as u64).unwrap();
    assert!((mean / goe.mean_d1 - 1.0).abs() < 0.005, "{mean} vs {}", goe.mean_d1);
    assert!(var / goe.var_d1 > 0.6 && var / goe.var_d1 < 1.6, "{var} vs {}", goe.var_d1);
}

#[test]
fn poisson_surrogate_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut levels: Vec<f64> = (0..6000).map(|_| rng.gen::<f64>()).collect();
    levels.sort_by(f64::total_cmp);
    let r = mean_r(&levels, &Window::MiddleThird).unwrap().mean;
    assert!((r - R_POISSON).abs() < 0.02, "<r> = {r}");
}

/// Monte Carlo over normalized real Gaussian vectors, which share the GOE
/// eigenvector distribution.
#[test]
fn goe_reference_matches_porter_thomas_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for dim in [50usize, 400, 3000] {
        let samples = 4000;
        let values: Vec<f64> = (0..samples)
            .map(|_| {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm: f64 = v.iter().map(|x| x * x).sum();
                let p: Vec<f64> = v.iter().map(|x| x * x / norm).collect();
                gfd_from_intensities(&p, Moment::ONE, dim as u64).unwrap().value
            })
            .collect();
        let mean = values.iter().sum::<f64>() / samples as f64;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / samples as f64;
        let goe = goe_reference(dim as u64).unwrap();
        let mean_err = 4.0 * (var / samples as f64).sqrt();
        assert!((mean - goe.mean_d1).abs() < mean_err, "D={dim}: {mean} vs {}", goe.mean_d1);
        assert!((var / goe.var_d1 - 1.0).abs() < 0.15, "D={dim}: {var} vs {}", goe.var_d1);
    }
}
