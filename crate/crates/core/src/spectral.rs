//! Spectral statistics on sorted eigenvalues.
//!
//! Conventions used throughout:
//! - the middle third of a spectrum of `D` levels is the index range
//!   `floor(D/3) .. floor(2D/3)` (end exclusive);
//! - a spacing ratio `r_n` built from levels `n, n+1, n+2` is attributed to
//!   its central level `n+1`;
//! - spacings below `1e-12` times the spectral range are degenerate and the
//!   ratios touching them are excluded (and counted), not set to zero;
//! - levels inside such a degenerate cluster have no unique eigenvector, so
//!   eigenvector statistics skip them as well.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 100;
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Reference mean spacing ratios.
pub const R_WIGNER_DYSON: f64 = 0.5295;
pub const R_POISSON: f64 = 0.386;

#[derive(Clone, Debug, PartialEq)]
pub struct ScaledSpectrum {
    pub epsilons: Vec<f64>,
    pub e_min: f64,
    pub e_max: f64,
}

impl ScaledSpectrum {
    /// Normalized trace: the mean scaled energy.
    pub fn mean(&self) -> f64 {
        self.epsilons.iter().sum::<f64>() / self.epsilons.len() as f64
    }
}

/// `ε = (E - E_min) / (E_max - E_min)`.
pub fn scale_energies(eigenvalues: &[f64]) -> Result<ScaledSpectrum> {
    if eigenvalues.len() < 2 {
        return Err(Error::TooFewLevels {
            needed: 2,
            got: eigenvalues.len(),
        });
    }
    let e_min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = e_max - e_min;
    if !(range > 0.0) {
        return Err(Error::DegenerateRange(e_min));
    }
    let epsilons = eigenvalues
        .iter()
        .map(|&e| ((e - e_min) / range).clamp(0.0, 1.0))
        .collect();
    Ok(ScaledSpectrum { epsilons, e_min, e_max })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpacingRatios {
    /// `values[n]` is `r_n`, attributed to level `n + 1`; `None` if excluded.
    pub values: Vec<Option<f64>>,
    pub excluded: usize,
}

impl SpacingRatios {
    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

/// Marks levels within the degeneracy floor of a neighbour.
pub fn degenerate_levels(eigenvalues: &[f64]) -> Vec<bool> {
    let n = eigenvalues.len();
    let mut out = vec![false; n];
    if n < 2 {
        return out;
    }
    let floor = DEGENERACY_FLOOR * (eigenvalues[n - 1] - eigenvalues[0]);
    for i in 1..n {
        if eigenvalues[i] - eigenvalues[i - 1] <= floor {
            out[i - 1] = true;
            out[i] = true;
        }
    }
    out
}

/// `r_n = min(δ_{n+1}/δ_n, δ_n/δ_{n+1})` with `δ_n = E_{n+1} - E_n`.
pub fn r_ratios(eigenvalues: &[f64]) -> Result<SpacingRatios> {
    if eigenvalues.len() < 3 {
        return Err(Error::TooFewLevels {
            needed: 3,
            got: eigenvalues.len(),
        });
    }
    let range = eigenvalues[eigenvalues.len() - 1] - eigenvalues[0];
    let floor = DEGENERACY_FLOOR * range;
    let mut excluded = 0;
    let values = eigenvalues
        .windows(3)
        .map(|w| {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            if a <= floor || b <= floor {
                excluded += 1;
                None
            } else {
                Some(if a < b { a / b } else { b / a })
            }
        })
        .collect();
    Ok(SpacingRatios { values, excluded })
}

/// Energy window over which averages are taken.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    MiddleThird,
    All,
    /// Levels with scaled energy in `[lo, hi)` (closed at 1).
    Epsilon { lo: f64, hi: f64 },
    /// Explicit index range, end exclusive.
    Indices { start: usize, end: usize },
}

pub fn middle_third(dim: usize) -> Range<usize> {
    dim / 3..2 * dim / 3
}

impl Window {
    /// Whether level `index` (with scaled energy `eps`) of a `dim`-level
    /// spectrum lies in the window.
    pub fn contains(&self, index: usize, eps: f64, dim: usize) -> bool {
        match *self {
            Window::MiddleThird => middle_third(dim).contains(&index),
            Window::All => index < dim,
            Window::Epsilon { lo, hi } => eps >= lo && (eps < hi || (hi >= 1.0 && eps <= 1.0)),
            Window::Indices { start, end } => (start..end).contains(&index),
        }
    }

    /// Indices of the levels inside the window, ascending.
    pub fn select(&self, scaled: &ScaledSpectrum) -> Vec<usize> {
        let dim = scaled.epsilons.len();
        (0..dim)
            .filter(|&i| self.contains(i, scaled.epsilons[i], dim))
            .collect()
    }

    pub fn describe(&self) -> String {
        match *self {
            Window::MiddleThird => "middle third".into(),
            Window::All => "all levels".into(),
            Window::Epsilon { lo, hi } => format!("eps in [{lo}, {hi})"),
            Window::Indices { start, end } => format!("indices {start}..{end}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub mean: f64,
    pub count: usize,
    /// Ratios inside the window dropped for degenerate spacings.
    pub excluded: usize,
}

/// Mean of the defined spacing ratios whose central level lies in `window`.
pub fn mean_r(eigenvalues: &[f64], window: &Window) -> Result<RatioSummary> {
    let ratios = r_ratios(eigenvalues)?;
    let scaled = scale_energies(eigenvalues)?;
    let dim = eigenvalues.len();
    let mut sum = 0.0;
    let mut count = 0;
    let mut excluded = 0;
    for (n, r) in ratios.values.iter().enumerate() {
        let centre = n + 1;
        if !window.contains(centre, scaled.epsilons[centre], dim) {
            continue;
        }
        match r {
            Some(r) => {
                sum += r;
                count += 1;
            }
            None => excluded += 1,
        }
    }
    if count == 0 {
        return Err(Error::EmptyWindow(format!(
            "no defined spacing ratio in {} ({excluded} excluded)",
            window.describe()
        )));
    }
    Ok(RatioSummary {
        mean: sum / count as f64,
        count,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    #[default]
    EqualWidth,
    /// Edges at quantiles so bins carry (nearly) equal numbers of levels.
    EqualCount,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub count: usize,
    /// `None` for empty bins.
    pub mean: Option<f64>,
    pub variance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinnedStatistic {
    pub edges: Vec<f64>,
    pub bins: Vec<Bin>,
}

impl BinnedStatistic {
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

fn equal_width_edges(bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| k as f64 / bins as f64).collect()
}

fn equal_count_edges(epsilons: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = epsilons.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges = vec![0.0];
    for k in 1..bins {
        let idx = (k * n) / bins;
        let edge = if idx == 0 { 0.0 } else { 0.5 * (sorted[idx - 1] + sorted[idx.min(n - 1)]) };
        edges.push(edge.max(*edges.last().unwrap()));
    }
    edges.push(1.0);
    edges
}

/// Bin index of `eps` for the given edges; the final bin is right-closed.
fn bin_of(edges: &[f64], eps: f64) -> Option<usize> {
    let bins = edges.len() - 1;
    if !(edges[0]..=edges[bins]).contains(&eps) {
        return None;
    }
    // first edge strictly greater than eps
    let upper = edges.partition_point(|&e| e <= eps);
    Some(upper.saturating_sub(1).min(bins - 1))
}

/// Per-bin mean and population variance of `values` against `epsilons`.
pub fn bin_values(epsilons: &[f64], values: &[f64], bins: usize) -> Result<BinnedStatistic> {
    bin_values_with(epsilons, values, bins, BinScheme::EqualWidth)
}

pub fn bin_values_with(epsilons: &[f64], values: &[f64], bins: usize, scheme: BinScheme) -> Result<BinnedStatistic> {
    if epsilons.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: epsilons.len(),
            right: values.len(),
        });
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let edges = match scheme {
        BinScheme::EqualWidth => equal_width_edges(bins),
        BinScheme::EqualCount if !epsilons.is_empty() => equal_count_edges(epsilons, bins),
        BinScheme::EqualCount => equal_width_edges(bins),
    };
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); bins];
    for (&eps, &v) in epsilons.iter().zip(values) {
        if let Some(b) = bin_of(&edges, eps) {
            let cell = &mut sums[b];
            cell.0 += 1;
            cell.1 += v;
        }
    }
    // second pass for a numerically stable population variance
    for (&eps, &v) in epsilons.iter().zip(values) {
        if let Some(b) = bin_of(&edges, eps) {
            let mean = sums[b].1 / sums[b].0 as f64;
            sums[b].2 += (v - mean) * (v - mean);
        }
    }
    let bins = sums
        .into_iter()
        .map(|(count, sum, sq)| {
            if count == 0 {
                Bin {
                    count,
                    mean: None,
                    variance: None,
                }
            } else {
                Bin {
                    count,
                    mean: Some(sum / count as f64),
                    variance: Some(sq / count as f64),
                }
            }
        })
        .collect();
    Ok(BinnedStatistic { edges, bins })
}

/// Coarse-grained density `ρ = count / (D * width)` per bin.
pub fn density_of_states(epsilons: &[f64], bins: usize) -> Result<BinnedStatistic> {
    density_of_states_with(epsilons, bins, BinScheme::EqualWidth)
}

pub fn density_of_states_with(epsilons: &[f64], bins: usize, scheme: BinScheme) -> Result<BinnedStatistic> {
    let ones = vec![1.0; epsilons.len()];
    let mut stat = bin_values_with(epsilons, &ones, bins, scheme)?;
    let d = epsilons.len() as f64;
    for (k, bin) in stat.bins.iter_mut().enumerate() {
        let width = stat.edges[k + 1] - stat.edges[k];
        bin.mean = Some(if width > 0.0 { bin.count as f64 / (d * width) } else { 0.0 });
        bin.variance = None;
    }
    Ok(stat)
}

/// Spacing ratios binned by the scaled energy of their central level.
pub fn binned_r(eigenvalues: &[f64], bins: usize) -> Result<BinnedStatistic> {
    let ratios = r_ratios(eigenvalues)?;
    let scaled = scale_energies(eigenvalues)?;
    let (eps, vals): (Vec<f64>, Vec<f64>) = ratios
        .values
        .iter()
        .enumerate()
        .filter_map(|(n, r)| r.map(|r| (scaled.epsilons[n + 1], r)))
        .unzip();
    bin_values(&eps, &vals, bins)
}
