//! Generalized fractal dimensions of state vectors and the GOE reference
//! values of the information dimension.

use std::fmt;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{column, SpectrumResult};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{bin_values, degenerate_levels, scale_energies, BinnedStatistic, Window};

/// Intensities below this are treated as exact zeros in the `q = 1` sum.
pub const INTENSITY_FLOOR: f64 = 1e-30;
/// Allowed deviation of `sum |psi|^2` from one.
pub const NORMALIZATION_TOL: f64 = 1e-10;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Moment {
    Order(f64),
    #[serde(with = "infinity_tag")]
    Infinity,
}

mod infinity_tag {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "inf" | "infinity" => Ok(()),
            other => Err(de::Error::custom(format!("unknown moment {other:?}"))),
        }
    }
}

impl Moment {
    pub const ONE: Moment = Moment::Order(1.0);
    pub const TWO: Moment = Moment::Order(2.0);

    fn validate(self) -> Result<Self> {
        match self {
            Moment::Order(q) if !(q > 0.0) || !q.is_finite() => Err(Error::MomentDomain(q)),
            m => Ok(m),
        }
    }

    /// Short label for column names: `1`, `2`, `inf`.
    pub fn label(self) -> String {
        match self {
            Moment::Infinity => "inf".into(),
            Moment::Order(q) if q.fract() == 0.0 => format!("{}", q as i64),
            Moment::Order(q) => format!("{q}"),
        }
    }
}

impl fmt::Display for Moment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for Moment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Ok(Moment::Infinity),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad moment {s:?}")))
                .and_then(|q| Moment::Order(q).validate()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfdRecord {
    pub q: Moment,
    pub value: f64,
    /// Basis size whose logarithm normalizes the dimension.
    pub basis_size: u64,
}

/// `D_q` of a normalized state given by its amplitudes.
pub fn gfd<T: Scalar>(amplitudes: &[T], q: Moment, basis_size: u64) -> Result<GfdRecord> {
    let intensities: Vec<f64> = amplitudes.iter().map(|a| a.abs_sqr()).collect();
    gfd_from_intensities(&intensities, q, basis_size)
}

/// `D_q` from intensities `|psi_a|^2`. Components absent from `intensities`
/// count as zeros, so a state supported on a subset of a larger basis can be
/// passed sparsely.
pub fn gfd_from_intensities(intensities: &[f64], q: Moment, basis_size: u64) -> Result<GfdRecord> {
    let q = q.validate()?;
    if basis_size < 2 {
        return Err(Error::InvalidParameter(format!("basis size {basis_size} < 2")));
    }
    let total: f64 = intensities.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized(total));
    }
    let ln_n = (basis_size as f64).ln();
    let value = match q {
        Moment::Infinity => {
            let max = intensities.iter().copied().fold(0.0, f64::max);
            -max.ln() / ln_n
        }
        Moment::Order(q) if q == 1.0 => {
            let entropy: f64 = intensities
                .iter()
                .filter(|&&p| p >= INTENSITY_FLOOR)
                .map(|&p| -p * p.ln())
                .sum();
            entropy / ln_n
        }
        Moment::Order(q) => {
            let r_q: f64 = intensities.iter().filter(|&&p| p > 0.0).map(|&p| p.powf(q)).sum();
            r_q.ln() / ((1.0 - q) * ln_n)
        }
    };
    // exact localization can produce -0.0
    Ok(GfdRecord {
        q,
        value: value + 0.0,
        basis_size,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoeReference {
    pub dimension: u64,
    pub mean_d1: f64,
    pub var_d1: f64,
}

/// Harmonic number `H_x` for real `x >= 0`.
pub fn harmonic(x: f64) -> f64 {
    statrs::function::gamma::digamma(x + 1.0) + EULER_GAMMA
}

/// Trigamma function for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 16.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic series with Bernoulli-number coefficients
    let tail = inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))));
    acc + inv + 0.5 * inv2 + inv * tail
}

/// Mean and variance of the information dimension of GOE eigenvectors.
pub fn goe_reference(dimension: u64) -> Result<GoeReference> {
    if dimension < 2 {
        return Err(Error::InvalidParameter(format!(
            "GOE reference needs dimension >= 2, got {dimension}"
        )));
    }
    let d = dimension as f64;
    let ln_d = d.ln();
    let mean_d1 = (harmonic(d / 2.0) - 2.0 + 4f64.ln()) / ln_d;
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let first = ((3.0 * pi2 - 24.0) * (d + 2.0) - 8.0) / (2.0 * (d + 2.0).powi(2) * ln_d * ln_d);
    let var_d1 = first - trigamma(2.0 + d / 2.0) / (ln_d * ln_d);
    Ok(GoeReference {
        dimension,
        mean_d1,
        var_d1,
    })
}

/// `D_q` of every column of `vectors`, in column order.
pub fn column_gfds<T: Scalar>(vectors: &Mat<T>, q: Moment, basis_size: u64) -> Result<Vec<f64>> {
    (0..vectors.ncols())
        .into_par_iter()
        .map(|k| gfd(column(vectors, k), q, basis_size).map(|r| r.value))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GfdWindowStats {
    pub q: Moment,
    pub basis_size: u64,
    pub mean: f64,
    /// Population variance over the window.
    pub variance: f64,
    pub count: usize,
    /// Window levels skipped for lying in a degenerate cluster.
    pub excluded: usize,
    /// Per-level values over the whole spectrum, binned by scaled energy,
    /// without degenerate levels.
    pub binned: BinnedStatistic,
}

impl GfdWindowStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Window mean and variance of the eigenstate GFDs, with the sector
/// dimension as logarithm base. Eigenvectors of degenerate levels depend on
/// the solver's choice of basis within the cluster and are left out.
pub fn gfd_window_stats<T: Scalar>(
    spectrum: &SpectrumResult<T>,
    q: Moment,
    window: &Window,
    bins: usize,
) -> Result<GfdWindowStats> {
    let values = column_gfds(spectrum.vectors()?, q, spectrum.dim() as u64)?;
    window_stats_from_values(&spectrum.eigenvalues, &values, q, window, bins)
}

/// Same as [`gfd_window_stats`] for precomputed per-level values.
pub fn window_stats_from_values(
    eigenvalues: &[f64],
    values: &[f64],
    q: Moment,
    window: &Window,
    bins: usize,
) -> Result<GfdWindowStats> {
    if eigenvalues.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: eigenvalues.len(),
            right: values.len(),
        });
    }
    let scaled = scale_energies(eigenvalues)?;
    let degenerate = degenerate_levels(eigenvalues);
    let window_levels = window.select(&scaled);
    let selected: Vec<usize> = window_levels.iter().copied().filter(|&i| !degenerate[i]).collect();
    let excluded = window_levels.len() - selected.len();
    if selected.is_empty() {
        return Err(Error::EmptyWindow(format!(
            "{} ({excluded} degenerate levels excluded)",
            window.describe()
        )));
    }
    let count = selected.len();
    let mean = selected.iter().map(|&i| values[i]).sum::<f64>() / count as f64;
    let variance = selected.iter().map(|&i| (values[i] - mean).powi(2)).sum::<f64>() / count as f64;
    let (eps, vals): (Vec<f64>, Vec<f64>) = (0..values.len())
        .filter(|&i| !degenerate[i])
        .map(|i| (scaled.epsilons[i], values[i]))
        .unzip();
    let binned = bin_values(&eps, &vals, bins)?;
    Ok(GfdWindowStats {
        q,
        basis_size: eigenvalues.len() as u64,
        mean,
        variance,
        count,
        excluded,
        binned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    const ALL: [Moment; 3] = [Moment::ONE, Moment::TWO, Moment::Infinity];

    #[test]
    fn localized_and_uniform() {
        let mut e = vec![0.0; 10];
        e[3] = 1.0;
        for q in ALL {
            assert_eq!(gfd(&e, q, 10).unwrap().value, 0.0);
        }
        let u = vec![0.1; 100];
        for q in ALL {
            assert_relative_eq!(gfd(&u, q, 100).unwrap().value, 1.0, epsilon = 1e-12);
        }
        let two = [std::f64::consts::FRAC_1_SQRT_2; 2];
        assert_relative_eq!(gfd(&two, Moment::ONE, 4).unwrap().value, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn complex_amplitudes() {
        let v = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let r = gfd(&v, Moment::Infinity, 2).unwrap();
        assert_relative_eq!(r.value, -(0.64f64).log2(), epsilon = 1e-14);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(gfd(&[1.0], Moment::Order(0.0), 2), Err(Error::MomentDomain(_))));
        assert!(matches!(gfd(&[1.0], Moment::Order(-1.0), 2), Err(Error::MomentDomain(_))));
        assert!(matches!(gfd(&[0.5, 0.5], Moment::ONE, 2), Err(Error::NotNormalized(_))));
        assert!(gfd(&[1.0], Moment::ONE, 1).is_err());
    }

    #[test]
    fn moment_parsing() {
        assert_eq!("inf".parse::<Moment>().unwrap(), Moment::Infinity);
        assert_eq!("2".parse::<Moment>().unwrap(), Moment::TWO);
        assert!("0".parse::<Moment>().is_err());
        assert_eq!(Moment::Order(0.5).label(), "0.5");
        let json = serde_json::to_string(&[Moment::ONE, Moment::Infinity]).unwrap();
        assert_eq!(json, "[1.0,\"inf\"]");
        let back: Vec<Moment> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Moment::ONE, Moment::Infinity]);
    }

    #[test]
    fn trigamma_values() {
        // psi1(1) = pi^2/6, psi1(1/2) = pi^2/2, psi1(3) = pi^2/6 - 5/4
        let pi2 = std::f64::consts::PI.powi(2);
        assert_relative_eq!(trigamma(1.0), pi2 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(trigamma(0.5), pi2 / 2.0, max_relative = 1e-14);
        assert_relative_eq!(trigamma(3.0), pi2 / 6.0 - 1.25, max_relative = 1e-14);
        // psi1(x) - psi1(x+1) = 1/x^2
        for x in [0.3, 2.7, 11.5, 1e3, 4.2e5] {
            assert_relative_eq!(trigamma(x) - trigamma(x + 1.0), 1.0 / (x * x), max_relative = 1e-9);
        }
    }

    #[test]
    fn harmonic_numbers() {
        assert_relative_eq!(harmonic(1.0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(harmonic(4.0), 25.0 / 12.0, epsilon = 1e-13);
        // H_{1/2} = 2 - 2 ln 2
        assert_relative_eq!(harmonic(0.5), 2.0 - 2.0 * 2f64.ln(), epsilon = 1e-13);
    }

    #[test]
    fn goe_reference_values() {
        let r = goe_reference(2).unwrap();
        assert_relative_eq!(r.mean_d1, (4f64.ln() - 1.0) / 2f64.ln(), epsilon = 1e-13);
        assert!((r.mean_d1 - 0.5573).abs() < 1e-4);
        assert!(goe_reference(10_000).unwrap().mean_d1 > goe_reference(100).unwrap().mean_d1);
        assert!(goe_reference(1).is_err());

        // independent evaluation at D = 9581 from H_n as an explicit sum
        let d = 9581u64;
        let half = d as f64 / 2.0;
        // H_{n+1/2} = 2 H_{2n+1} - H_n - 2 ln 2
        let n = (d / 2) as usize;
        let h = |m: usize| (1..=m).map(|k| 1.0 / k as f64).sum::<f64>();
        let h_half = 2.0 * h(2 * n + 1) - h(n) - 2.0 * 2f64.ln();
        assert_relative_eq!(harmonic(half), h_half, epsilon = 1e-11);
        let r = goe_reference(d).unwrap();
        assert!((r.mean_d1 - 0.9204).abs() < 5e-4, "{}", r.mean_d1);
        assert!(r.var_d1 > 0.9e-6 && r.var_d1 < 1.1e-6, "{}", r.var_d1);
    }

    #[test]
    fn goe_reference_is_finite_and_positive() {
        let mut d = 2u64;
        while d <= 1_000_000 {
            let r = goe_reference(d).unwrap();
            assert!(r.mean_d1 > 0.0 && r.mean_d1 < 1.0 && r.mean_d1.is_finite(), "D={d}");
            assert!(r.var_d1 > 0.0 && r.var_d1.is_finite(), "D={d}: {}", r.var_d1);
            d = d * 3 / 2 + 1;
        }
        for d in [3u64, 4, 5, 17, 999_999, 1_000_000] {
            let r = goe_reference(d).unwrap();
            assert!(r.var_d1 > 0.0 && r.mean_d1 > 0.0);
        }
    }

    #[test]
    fn degenerate_levels_are_left_out() {
        let e = [0.0, 1.0, 2.0, 2.0, 3.0, 4.0];
        let values = [0.5, 0.6, 0.0, 0.1, 0.7, 0.8];
        let s = window_stats_from_values(&e, &values, Moment::ONE, &Window::All, 4).unwrap();
        assert_eq!((s.count, s.excluded), (4, 2));
        assert_relative_eq!(s.mean, 0.65, epsilon = 1e-15);
        assert_eq!(s.binned.bins.iter().map(|b| b.count).sum::<usize>(), 4);
        let err = window_stats_from_values(&[1.0, 1.0], &[0.1, 0.2], Moment::ONE, &Window::All, 4);
        assert!(matches!(err, Err(Error::DegenerateRange(_)) | Err(Error::EmptyWindow(_))));
    }

    #[test]
    fn identical_vectors_have_zero_variance() {
        let mut m = Mat::<f64>::zeros(4, 4);
        for j in 0..4 {
            for i in 0..4 {
                m[(i, j)] = 0.5;
            }
        }
        let values = column_gfds(&m, Moment::ONE, 4).unwrap();
        let s = window_stats_from_values(&[0.0, 1.0, 2.0, 3.0], &values, Moment::ONE, &Window::All, 10).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_relative_eq!(s.mean, 1.0, epsilon = 1e-14);
        assert_eq!(s.count, 4);
    }

    fn normalized_state() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, 2..64).prop_filter_map("nonzero", |v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
        })
    }

    proptest! {
        #[test]
        fn dimensions_are_ordered(v in normalized_state()) {
            let n = v.len() as u64;
            let d1 = gfd(&v, Moment::ONE, n).unwrap().value;
            let d2 = gfd(&v, Moment::TWO, n).unwrap().value;
            let di = gfd(&v, Moment::Infinity, n).unwrap().value;
            prop_assert!(di >= -1e-12);
            prop_assert!(di <= d2 + 1e-12);
            prop_assert!(d2 <= d1 + 1e-12);
            prop_assert!(d1 <= 1.0 + 1e-12);
        }

        #[test]
        fn permutation_invariant(v in normalized_state(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut w = v.clone();
            w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let n = v.len() as u64;
            for q in ALL {
                let a = gfd(&v, q, n).unwrap().value;
                let b = gfd(&w, q, n).unwrap().value;
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn q_one_is_the_limit(v in normalized_state()) {
            let n = v.len() as u64;
            let d1 = gfd(&v, Moment::ONE, n).unwrap().value;
            for q in [1.0 - 1e-5, 1.0 + 1e-5] {
                let dq = gfd(&v, Moment::Order(q), n).unwrap().value;
                prop_assert!((d1 - dq).abs() < 1e-3);
            }
        }
    }
}
