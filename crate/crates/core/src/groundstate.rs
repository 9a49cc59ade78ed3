//! Ground-state multifractality across the Mott-insulator/superfluid
//! crossover.
//!
//! The Hamiltonian is stoquastic after flipping the sign of every state with
//! an odd number of excited atoms, so the ground state is nodeless in that
//! gauge and invariant under translation and reflection. It is therefore
//! computed in the `p = +1` sector (with `Q = 0` under PBC) and expanded back
//! onto the product basis, where its GFDs use the full dimension `𝒩` as the
//! logarithm base.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_sector_basis, full_dimension, Boundary, KeyCodec, Parity, Sector, SymBasis};
use crate::eigen::{extremal_eigenpair, Eigenpair, LanczosOptions};
use crate::error::{Error, Result};
use crate::model::{build_block, HamiltonianBlock, ModelParams};
use crate::multifractal::{gfd_from_intensities, Moment};

/// Default sweep range in `t/g`.
pub const GRID_MIN: f64 = 1e-3;
pub const GRID_MAX: f64 = 1e2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GsSweepPoint {
    pub t_over_g: f64,
    pub delta_over_g: f64,
    pub sites: usize,
    pub excitations: usize,
    pub boundary: Boundary,
    pub d1: f64,
    pub d2: f64,
    pub dinf: f64,
    pub energy: f64,
    pub residual: f64,
    pub matvecs: usize,
}

impl GsSweepPoint {
    pub fn dimension(&self, q: Moment) -> Result<f64> {
        match q {
            Moment::Infinity => Ok(self.dinf),
            Moment::Order(x) if x == 1.0 => Ok(self.d1),
            Moment::Order(x) if x == 2.0 => Ok(self.d2),
            Moment::Order(x) => Err(Error::InvalidParameter(format!(
                "ground-state sweeps record q = 1, 2, inf only, not {x}"
            ))),
        }
    }
}

/// Sector holding the ground state for the given boundary condition.
pub fn ground_state_sector(sites: usize, excitations: usize, boundary: Boundary) -> Result<Sector> {
    let momentum = (boundary == Boundary::Pbc).then_some(0);
    Sector::new(sites, excitations, boundary, momentum, Some(Parity::Even))
}

/// Solver hook: lowest eigenpair of a real block.
pub type GroundSolver<'a> = dyn Fn(&HamiltonianBlock<f64>) -> Result<Eigenpair<f64>> + Sync + 'a;

/// Basis and `t`-independent Hamiltonian parts shared by a sweep.
pub struct GroundStateProblem {
    basis: SymBasis,
    /// Block assembled at `t = 1`; other `t` rescale its tunneling part.
    unit: HamiltonianBlock<f64>,
    full_dim: u64,
}

impl GroundStateProblem {
    pub fn new(sites: usize, excitations: usize, boundary: Boundary, delta: f64) -> Result<Self> {
        let sector = ground_state_sector(sites, excitations, boundary)?;
        let basis = build_sector_basis(&sector)?;
        Self::with_basis(basis, delta)
    }

    pub fn with_basis(basis: SymBasis, delta: f64) -> Result<Self> {
        let sector = basis
            .sector()
            .copied()
            .ok_or_else(|| Error::InvalidSector("ground-state problems need a sector basis".into()))?;
        let unit = build_block::<f64>(&ModelParams::new(delta, 1.0, sector.boundary), &basis)?;
        let full_dim = full_dimension(basis.sites(), basis.excitations())?;
        Ok(Self { basis, unit, full_dim })
    }

    pub fn basis(&self) -> &SymBasis {
        &self.basis
    }

    pub fn full_dimension(&self) -> u64 {
        self.full_dim
    }

    pub fn block(&self, t_over_g: f64) -> Result<HamiltonianBlock<f64>> {
        let mut params = self.unit.params;
        params.hopping = t_over_g;
        params.validate()?;
        let tunneling = self.unit.tunneling.scaled(t_over_g);
        let total = self.unit.interaction.add(&tunneling);
        Ok(HamiltonianBlock {
            params,
            sector: self.unit.sector,
            interaction: self.unit.interaction.clone(),
            tunneling,
            total,
        })
    }

    pub fn solve(&self, t_over_g: f64, opts: &LanczosOptions) -> Result<GsSweepPoint> {
        self.solve_with(t_over_g, &|block| extremal_eigenpair(block, opts))
    }

    pub fn solve_with(&self, t_over_g: f64, solver: &GroundSolver<'_>) -> Result<GsSweepPoint> {
        let block = self.block(t_over_g)?;
        let pair = solver(&block)?;
        let intensities = self.basis.product_intensities(&pair.vector)?;
        let gfd = |q| gfd_from_intensities(&intensities, q, self.full_dim).map(|r| r.value);
        Ok(GsSweepPoint {
            t_over_g,
            delta_over_g: block.params.delta,
            sites: self.basis.sites(),
            excitations: self.basis.excitations(),
            boundary: block.params.boundary,
            d1: gfd(Moment::ONE)?,
            d2: gfd(Moment::TWO)?,
            dinf: gfd(Moment::Infinity)?,
            energy: pair.value,
            residual: pair.residual,
            matvecs: pair.matvecs,
        })
    }
}

fn tag(t_over_g: f64, e: Error) -> Error {
    Error::GridPoint {
        t_over_g,
        source: Box::new(e),
    }
}

/// Ground-state GFDs at every grid point, in grid order.
pub fn gs_sweep(problem: &GroundStateProblem, grid: &[f64], opts: &LanczosOptions) -> Result<Vec<GsSweepPoint>> {
    gs_sweep_with(problem, grid, &|block| extremal_eigenpair(block, opts))
}

pub fn gs_sweep_with(problem: &GroundStateProblem, grid: &[f64], solver: &GroundSolver<'_>) -> Result<Vec<GsSweepPoint>> {
    grid.par_iter()
        .map(|&t| problem.solve_with(t, solver).map_err(|e| tag(t, e)))
        .collect()
}

/// `points_per_decade` geometric steps from `lo` to `hi`, both included.
pub fn geometric_grid(lo: f64, hi: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points_per_decade == 0 {
        return Err(Error::InvalidParameter(format!(
            "geometric grid needs 0 < lo < hi and a positive density, got [{lo}, {hi}] x {points_per_decade}"
        )));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * points_per_decade as f64).round().max(1.0) as usize;
    Ok((0..=steps)
        .map(|k| {
            if k == steps {
                hi
            } else {
                lo * 10f64.powf(decades * k as f64 / steps as f64)
            }
        })
        .collect())
}

/// Adds `points` evenly spaced values between the neighbours of
/// `grid[center]` and returns the merged, sorted grid.
pub fn refine_grid(grid: &[f64], center: usize, points: usize) -> Vec<f64> {
    let lo = grid[center.saturating_sub(1)];
    let hi = grid[(center + 1).min(grid.len() - 1)];
    let mut out = grid.to_vec();
    for k in 1..=points {
        out.push(lo + (hi - lo) * k as f64 / (points + 1) as f64);
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    out
}

/// New grid points for a refinement pass: `points` linear values around the
/// `|dD_q/dt|` maximum of each sweep, merged over sweeps, excluding `grid`.
pub fn refinement_points(grid: &[f64], sweeps: &[&[GsSweepPoint]], q: Moment, points: usize) -> Result<Vec<f64>> {
    let mut new = Vec::new();
    if points == 0 {
        return Ok(new);
    }
    for sweep in sweeps {
        let t: Vec<f64> = sweep.iter().map(|p| p.t_over_g).collect();
        if t.len() < 3 {
            continue;
        }
        let peak = argmax_abs_derivative(sweep, q)?;
        new.extend(
            refine_grid(&t, peak.index, points)
                .into_iter()
                .filter(|x| !grid.contains(x)),
        );
    }
    new.sort_by(f64::total_cmp);
    new.dedup();
    Ok(new)
}

/// Coarse sweep, then a linear refinement around the largest `|dD_q/dt|`.
/// Only the new grid points are solved in the second pass.
pub fn refined_sweep(
    problem: &GroundStateProblem,
    grid: &[f64],
    q: Moment,
    refine_points: usize,
    solver: &GroundSolver<'_>,
) -> Result<Vec<GsSweepPoint>> {
    let coarse = gs_sweep_with(problem, grid, solver)?;
    let new = refinement_points(grid, &[&coarse], q, refine_points)?;
    let mut all = coarse;
    all.extend(gs_sweep_with(problem, &new, solver)?);
    all.sort_by(|a, b| a.t_over_g.total_cmp(&b.t_over_g));
    Ok(all)
}

/// Derivative of `values` on the strictly increasing grid `t`: second-order
/// three-point formulas, centred inside and one-sided at the ends.
pub fn derivative(t: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if t.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: values.len(),
        });
    }
    let n = t.len();
    if n < 3 {
        return Err(Error::TooFewLevels { needed: 3, got: n });
    }
    if let Some(i) = (1..n).find(|&i| !(t[i] > t[i - 1])) {
        return Err(Error::NonMonotoneGrid(i));
    }
    // derivative at x0 from points x0, x1, x2
    let three = |x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64| {
        let (a, b) = (x1 - x0, x2 - x0);
        -(a + b) / (a * b) * f0 + b / (a * (b - a)) * f1 - a / (b * (b - a)) * f2
    };
    let mut out = Vec::with_capacity(n);
    out.push(three(t[0], t[1], t[2], values[0], values[1], values[2]));
    for i in 1..n - 1 {
        let h1 = t[i] - t[i - 1];
        let h2 = t[i + 1] - t[i];
        out.push(
            -h2 / (h1 * (h1 + h2)) * values[i - 1] + (h2 - h1) / (h1 * h2) * values[i]
                + h1 / (h2 * (h1 + h2)) * values[i + 1],
        );
    }
    out.push(three(
        t[n - 1],
        t[n - 2],
        t[n - 3],
        values[n - 1],
        values[n - 2],
        values[n - 3],
    ));
    Ok(out)
}

/// `(t/g, dD_q/d(t/g))` along a sweep.
pub fn gfd_derivative(sweep: &[GsSweepPoint], q: Moment) -> Result<Vec<(f64, f64)>> {
    let t: Vec<f64> = sweep.iter().map(|p| p.t_over_g).collect();
    let d = sweep.iter().map(|p| p.dimension(q)).collect::<Result<Vec<_>>>()?;
    Ok(t.iter().copied().zip(derivative(&t, &d)?).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativePeak {
    pub t_over_g: f64,
    pub abs_derivative: f64,
    pub index: usize,
    /// The maximum sits on the first or last grid point.
    pub on_grid_edge: bool,
}

pub fn argmax_abs_derivative(sweep: &[GsSweepPoint], q: Moment) -> Result<DerivativePeak> {
    let deriv = gfd_derivative(sweep, q)?;
    let (index, &(t, d)) = deriv
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.abs().total_cmp(&b.1 .1.abs()))
        .expect("derivative has at least three points");
    Ok(DerivativePeak {
        t_over_g: t,
        abs_derivative: d.abs(),
        index,
        on_grid_edge: index == 0 || index + 1 == deriv.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub q: Moment,
    pub sites: usize,
    pub pbc: DerivativePeak,
    pub hwbc: DerivativePeak,
    pub lower: f64,
    pub upper: f64,
    /// Either maximum sits on a grid edge; widen the grid.
    pub grid_edge_warning: bool,
}

impl CriticalEstimate {
    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        self.lower <= hi && self.upper >= lo
    }
}

/// Interval spanned by the PBC and HWBC derivative maxima.
pub fn critical_bracket(pbc: &[GsSweepPoint], hwbc: &[GsSweepPoint], q: Moment) -> Result<CriticalEstimate> {
    let grid = |s: &[GsSweepPoint]| s.iter().map(|p| p.t_over_g).collect::<Vec<_>>();
    if grid(pbc) != grid(hwbc) {
        return Err(Error::InvalidParameter(
            "PBC and HWBC sweeps must share the same grid".into(),
        ));
    }
    let sites = pbc.first().map_or(0, |p| p.sites);
    let a = argmax_abs_derivative(pbc, q)?;
    let b = argmax_abs_derivative(hwbc, q)?;
    if a.on_grid_edge || b.on_grid_edge {
        log::warn!("derivative maximum on the grid edge for L = {sites}, q = {q}");
    }
    Ok(CriticalEstimate {
        q,
        sites,
        pbc: a,
        hwbc: b,
        lower: a.t_over_g.min(b.t_over_g),
        upper: a.t_over_g.max(b.t_over_g),
        grid_edge_warning: a.on_grid_edge || b.on_grid_edge,
    })
}

/// Interior grid indices where the slope of `values` changes abruptly:
/// the one-sided slopes differ in sign or by more than `factor`, and at
/// least one exceeds `floor`.
pub fn non_smooth_points(t: &[f64], values: &[f64], factor: f64, floor: f64) -> Vec<usize> {
    (1..t.len().saturating_sub(1))
        .filter(|&i| {
            let left = (values[i] - values[i - 1]) / (t[i] - t[i - 1]);
            let right = (values[i + 1] - values[i]) / (t[i + 1] - t[i]);
            let (lo, hi) = if left.abs() < right.abs() { (left, right) } else { (right, left) };
            hi.abs() > floor && (lo * hi < 0.0 || hi.abs() > factor * lo.abs())
        })
        .collect()
}

/// The `t -> ∞` ground state `sqrt(N! / (L^N Π ν_i!))` on photon Fock
/// states with every atom in `g`, as `(product key, amplitude)` ascending in
/// key.
pub fn analytic_infinite_t_state(sites: usize, excitations: usize) -> Result<Vec<(u64, f64)>> {
    let codec = KeyCodec::new(sites, excitations)?;
    let ln_fact = |n: usize| statrs::function::factorial::ln_factorial(n as u64);
    let base = ln_fact(excitations) - excitations as f64 * (sites as f64).ln();
    let mut out = Vec::new();
    let mut occ = vec![0usize; sites];
    let mut digits = vec![0u8; sites];
    fn walk(
        site: usize,
        left: usize,
        occ: &mut [usize],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if site + 1 == occ.len() {
            occ[site] = left;
            visit(occ);
            return;
        }
        for n in 0..=left {
            occ[site] = n;
            walk(site + 1, left - n, occ, visit);
        }
    }
    if sites == 0 {
        return Err(Error::InvalidParameter("need at least one site".into()));
    }
    walk(0, excitations, &mut occ, &mut |occ| {
        let ln_p = base - occ.iter().map(|&n| ln_fact(n)).sum::<f64>();
        for (d, &n) in digits.iter_mut().zip(occ) {
            *d = (2 * n) as u8;
        }
        out.push((codec.from_digits(&digits), (0.5 * ln_p).exp()));
    });
    out.sort_by_key(|&(k, _)| k);
    Ok(out)
}

/// GFDs `(D_1, D_2, D_inf)` of the analytic state with logarithm base
/// `basis_size`.
pub fn analytic_gfds(sites: usize, excitations: usize, basis_size: u64) -> Result<[f64; 3]> {
    let intensities: Vec<f64> = analytic_infinite_t_state(sites, excitations)?
        .iter()
        .map(|&(_, a)| a * a)
        .collect();
    let g = |q| gfd_from_intensities(&intensities, q, basis_size).map(|r| r.value);
    Ok([g(Moment::ONE)?, g(Moment::TWO)?, g(Moment::Infinity)?])
}
