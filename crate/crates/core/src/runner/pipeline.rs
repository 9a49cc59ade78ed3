//! Sweep orchestration: expands a [`RunConfig`] into grid points, solves or
//! loads each one, runs the requested analyses and writes a manifest.
//!
//! Every point is computed in full before any of its files are written, and
//! failures (including panics) are confined to the point that raised them.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{resolve_dir, write_atomic, Cache};
use super::config::{Analysis, CachePolicy, EthOptions, RunConfig};
use super::output::{emit_file, fmt_f64, id_float, FileRecord, Table};
use super::solver::{ExactSolver, Spectrum, SpectrumSolver};
use crate::basis::{build_sector_basis, Boundary, Sector, SymBasis};
use crate::eigen::{LanczosOptions, Method, SpectrumResult};
use crate::error::{Error, Result};
use crate::eth::{self, EthSummary};
use crate::groundstate::{
    argmax_abs_derivative, critical_bracket, derivative, non_smooth_points, refinement_points, CriticalEstimate,
    DerivativePeak, GroundStateProblem, GsSweepPoint,
};
use crate::model::{build_hamiltonian, Hamiltonian, ModelParams};
use crate::multifractal::{column_gfds, goe_reference, window_stats_from_values, GoeReference, Moment};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;
use crate::spectral::{binned_r, density_of_states_with, mean_r, BinScheme, RatioSummary, Window};
use crate::CODE_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

const SMALL_T_NOTE: &str = "as t -> 0 the ground state is a product of single-site dressed states; its D_q in \
the product basis stay positive (D_1 = L ln 2 / ln N at resonance) rather than vanishing";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Spectrum,
    GroundStateSweep,
    CriticalReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: String,
    pub kind: PointKind,
    pub sites: usize,
    pub excitations: usize,
    pub boundary: Option<Boundary>,
    pub delta: f64,
    pub hopping: Option<f64>,
    pub analyses: Vec<Analysis>,
    pub status: Status,
    pub error: Option<String>,
    pub files: Vec<FileRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub schema_version: u32,
    pub code_version: String,
    pub config: RunConfig,
    pub points: Vec<PointRecord>,
    /// Files written next to the manifest but not covered by it.
    pub sidecars: Vec<String>,
}

impl ResultManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn all_ok(&self) -> bool {
        self.points.iter().all(|p| p.status == Status::Ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PointRecord> {
        self.points.iter().filter(|p| p.status == Status::Failed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointTiming {
    pub id: String,
    pub wall_seconds: f64,
    pub cache_hits: usize,
    pub solver_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub cache_dir: Option<PathBuf>,
    pub solver_calls: usize,
    pub points: Vec<PointTiming>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: ResultManifest,
    pub manifest_path: PathBuf,
    pub timings: Timings,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfdSummary {
    pub q: Moment,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
    /// Window levels left out as degenerate.
    pub excluded: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DosSummary {
    pub bins: usize,
    pub empty_bins: usize,
}

/// Contents of a spectrum point's `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub id: String,
    pub sites: usize,
    pub excitations: usize,
    pub boundary: Boundary,
    pub momentum: Option<usize>,
    pub parity: Option<i8>,
    pub delta: f64,
    pub hopping: f64,
    pub dimension: usize,
    pub method: Method,
    pub residual_max: Option<f64>,
    pub window: Window,
    pub rstat: Option<RatioSummary>,
    pub gfd: Vec<GfdSummary>,
    pub goe: Option<GoeReference>,
    pub dos: Option<DosSummary>,
    pub eth: Option<EthSummary>,
}

/// Contents of a ground-state sweep's `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub id: String,
    pub sites: usize,
    pub excitations: usize,
    pub boundary: Boundary,
    pub delta: f64,
    pub sector: Sector,
    pub sector_dimension: usize,
    pub full_dimension: u64,
    pub points: usize,
    pub failed: Vec<FailedGridPoint>,
    pub peaks: Vec<(Moment, DerivativePeak)>,
    /// Grid values where the slope of `D_q` changes abruptly.
    pub non_smooth: Vec<(Moment, Vec<f64>)>,
    pub small_t_note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailedGridPoint {
    pub t_over_g: f64,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub sites: usize,
    pub delta: f64,
    pub estimates: Vec<CriticalEstimate>,
}

/// One spectral grid point and the analyses to run on it.
#[derive(Clone, Debug)]
pub struct PointRequest<'a> {
    pub params: ModelParams,
    pub sector: Sector,
    pub analyses: &'a [Analysis],
    pub bins: usize,
    pub bin_scheme: BinScheme,
    pub window: &'a Window,
    pub moments: &'a [Moment],
    pub eth: &'a EthOptions,
    pub dense_threshold: usize,
}

impl PointRequest<'_> {
    pub fn id(&self) -> String {
        spectrum_id(&self.sector, self.params.delta, self.params.hopping)
    }

    fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

pub fn sector_tag(sector: &Sector) -> String {
    let mut s = String::new();
    if let Some(q) = sector.momentum {
        s.push_str(&format!("Q{q}"));
    }
    if let Some(p) = sector.parity {
        if !s.is_empty() {
            s.push('_');
        }
        s.push_str(if p.sign() > 0 { "p+1" } else { "p-1" });
    }
    if s.is_empty() {
        s.push_str("full");
    }
    s
}

pub fn spectrum_id(sector: &Sector, delta: f64, hopping: f64) -> String {
    format!(
        "L{}_N{}_{}_{}_d{}_t{}",
        sector.sites,
        sector.excitations,
        sector.boundary,
        sector_tag(sector),
        id_float(delta),
        id_float(hopping)
    )
}

pub fn sweep_id(sites: usize, excitations: usize, boundary: Boundary, delta: f64) -> String {
    format!("gs_L{sites}_N{excitations}_{boundary}_d{}", id_float(delta))
}

pub fn critical_id(sites: usize, excitations: usize, delta: f64) -> String {
    format!("critical_L{sites}_N{excitations}_d{}", id_float(delta))
}

/// Files (relative to the point directory) and summary of a solved point.
#[derive(Clone, Debug)]
pub struct PointOutputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: SpectrumSummary,
    pub cache_hit: bool,
    pub solver_calls: usize,
}

/// Solves (or loads) one sector spectrum and runs the requested analyses.
pub fn compute_spectrum_point(
    req: &PointRequest<'_>,
    basis: &SymBasis,
    cache: &Cache,
    solver: &dyn SpectrumSolver,
) -> Result<PointOutputs> {
    let want_vectors = req.analyses.iter().any(|a| a.needs_vectors());
    let mut hamiltonian: Option<Hamiltonian> = None;
    let mut solver_calls = 0;
    let (spectrum, cache_hit) = match cache.load_spectrum(&req.params, &req.sector, Method::Dense, want_vectors) {
        Some(s) => (s, true),
        None => {
            let h = build_hamiltonian(&req.params, basis)?;
            solver_calls += 1;
            let s = solver.spectrum(&h, want_vectors, req.dense_threshold)?;
            cache.store_spectrum(&req.sector, &s)?;
            hamiltonian = Some(h);
            (s, false)
        }
    };
    if spectrum.dim() != basis.dimension() {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            actual: spectrum.dim(),
        });
    }
    if req.wants(Analysis::Eth) && hamiltonian.is_none() {
        hamiltonian = Some(build_hamiltonian(&req.params, basis)?);
    }
    let (files, summary) = match (&spectrum, &hamiltonian) {
        (Spectrum::Real(s), Some(Hamiltonian::Real(h))) => analyze(req, s, Some(&h.tunneling))?,
        (Spectrum::Complex(s), Some(Hamiltonian::Complex(h))) => analyze(req, s, Some(&h.tunneling))?,
        (Spectrum::Real(s), None) => analyze(req, s, None)?,
        (Spectrum::Complex(s), None) => analyze(req, s, None)?,
        _ => return Err(Error::Eigensolver("spectrum and Hamiltonian scalar types differ".into())),
    };
    Ok(PointOutputs {
        files,
        summary,
        cache_hit,
        solver_calls,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn analyze<T: Scalar>(
    req: &PointRequest<'_>,
    s: &SpectrumResult<T>,
    tunneling: Option<&CsrMatrix<T>>,
) -> Result<(Vec<(String, Vec<u8>)>, SpectrumSummary)> {
    let mut files = Vec::new();
    let scaled = crate::spectral::scale_energies(&s.eigenvalues)?;
    let mut spec = Table::new(&["index", "energy", "epsilon"]);
    for (k, (e, eps)) in s.eigenvalues.iter().zip(&scaled.epsilons).enumerate() {
        spec.push(vec![k.to_string(), fmt_f64(*e), fmt_f64(*eps)]);
    }
    files.push(("spectrum.csv".to_string(), spec.to_bytes()));

    let mut summary = SpectrumSummary {
        id: req.id(),
        sites: req.sector.sites,
        excitations: req.sector.excitations,
        boundary: req.sector.boundary,
        momentum: req.sector.momentum,
        parity: req.sector.parity.map(|p| p.sign()),
        delta: req.params.delta,
        hopping: req.params.hopping,
        dimension: s.dim(),
        method: s.method,
        residual_max: s.residual_max,
        window: req.window.clone(),
        rstat: None,
        gfd: Vec::new(),
        goe: None,
        dos: None,
        eth: None,
    };

    if req.wants(Analysis::Rstat) {
        summary.rstat = Some(mean_r(&s.eigenvalues, req.window)?);
        let binned = binned_r(&s.eigenvalues, req.bins)?;
        files.push(("rstat.csv".into(), Table::from_binned(&binned, "mean_r", "var_r").to_bytes()));
    }
    if req.wants(Analysis::Gfd) {
        let vectors = s.vectors()?;
        for &q in req.moments {
            let values = column_gfds(vectors, q, s.dim() as u64)?;
            let stats = window_stats_from_values(&s.eigenvalues, &values, q, req.window, req.bins)?;
            let label = q.label();
            let table = Table::from_binned(&stats.binned, &format!("mean_D{label}"), &format!("var_D{label}"));
            files.push((format!("gfd_q{label}.csv"), table.to_bytes()));
            summary.gfd.push(GfdSummary {
                q,
                mean: stats.mean,
                variance: stats.variance,
                count: stats.count,
                excluded: stats.excluded,
            });
        }
        let goe = goe_reference(s.dim() as u64)?;
        files.push(("goe.json".into(), to_json(&goe)?));
        summary.goe = Some(goe);
    }
    if req.wants(Analysis::Dos) {
        let dos = density_of_states_with(&scaled.epsilons, req.bins, req.bin_scheme)?;
        let mut t = Table::new(&["epsilon_bin_center", "rho", "count"]);
        for (c, b) in dos.centers().iter().zip(&dos.bins) {
            t.push(vec![fmt_f64(*c), crate::runner::output::fmt_opt(b.mean), b.count.to_string()]);
        }
        files.push(("dos.csv".into(), t.to_bytes()));
        summary.dos = Some(DosSummary {
            bins: dos.bins.len(),
            empty_bins: dos.bins.iter().filter(|b| b.count == 0).count(),
        });
    }
    if req.wants(Analysis::Eth) {
        let tun = tunneling.ok_or_else(|| Error::Eigensolver("ETH analysis needs the tunneling block".into()))?;
        let diag = eth::diagonal_elements(s, tun, req.window)?;
        let z_mean = eth::z_statistic(&diag.values)?;
        let off = eth::offdiagonal_elements(s, tun, req.eth.pair_window, req.eth.running_length)?;
        let mut d = Table::new(&["eps_over_epsav", "value"]);
        for (r, v) in diag.eps_over_eps_av().zip(&diag.values) {
            d.push(vec![fmt_f64(r), fmt_f64(*v)]);
        }
        let mut o = Table::new(&["omega", "absvalue", "running_avg"]);
        for (p, r) in off.pairs.iter().zip(&off.running) {
            o.push(vec![fmt_f64(p.omega), fmt_f64(p.abs_value), fmt_f64(*r)]);
        }
        files.push(("eth_diagonal.csv".into(), d.to_bytes()));
        files.push(("eth_offdiagonal.csv".into(), o.to_bytes()));
        summary.eth = Some(EthSummary {
            eps_av: diag.eps_av,
            z_mean,
            offdiag_mean: off.mean_abs,
            diagonal_count: diag.values.len(),
            pair_count: off.pairs.len(),
        });
    }
    files.push(("summary.json".into(), to_json(&summary)?));
    Ok((files, summary))
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

fn isolated<T>(f: impl FnOnce() -> Result<T>) -> Result<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(Error::Eigensolver(format!("panic: {}", panic_message(p)))),
    }
}

fn write_point_files(root: &Path, id: &str, files: &[(String, Vec<u8>)]) -> Result<Vec<FileRecord>> {
    files
        .iter()
        .map(|(name, bytes)| emit_file(root, &format!("{id}/{name}"), bytes))
        .collect()
}

struct Counters {
    solver_calls: AtomicUsize,
}

pub fn run_sweep(config: &RunConfig) -> Result<RunOutcome> {
    run_sweep_with(config, &ExactSolver)
}

/// Runs every point of `config` with `solver`. Per-point failures are
/// recorded in the manifest; only configuration and I/O problems at the
/// run level are returned as errors.
pub fn run_sweep_with(config: &RunConfig, solver: &dyn SpectrumSolver) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let root = config.output_dir.clone();
    std::fs::create_dir_all(&root)?;
    let cache_dir = resolve_dir(config.cache_dir.as_deref(), &root);
    let cache = match config.cache {
        CachePolicy::Off => Cache::disabled(),
        policy => Cache::open(&cache_dir, policy)?,
    };
    let workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let counters = Counters {
        solver_calls: AtomicUsize::new(0),
    };

    let (mut records, mut timings) = pool.install(|| spectrum_points(config, &root, &cache, solver, &counters))?;
    if config.has(Analysis::Groundstate) {
        let (r, t) = pool.install(|| ground_state_points(config, &root, &cache, solver, &counters))?;
        records.extend(r);
        timings.extend(t);
    }

    let manifest = ResultManifest {
        schema_version: super::config::SCHEMA_VERSION,
        code_version: CODE_VERSION.to_string(),
        config: config.clone(),
        points: records,
        sidecars: vec![TIMINGS_FILE.to_string()],
    };
    let manifest_path = root.join(MANIFEST_FILE);
    write_atomic(&manifest_path, &to_json(&manifest)?)?;
    let timings = Timings {
        total_seconds: started.elapsed().as_secs_f64(),
        cache_dir: (config.cache != CachePolicy::Off).then_some(cache_dir),
        solver_calls: counters.solver_calls.load(Ordering::Relaxed),
        points: timings,
    };
    write_atomic(&root.join(TIMINGS_FILE), &to_json(&timings)?)?;
    for failed in manifest.failures() {
        log::error!("{} failed: {}", failed.id, failed.error.as_deref().unwrap_or("unknown error"));
    }
    Ok(RunOutcome {
        manifest,
        manifest_path,
        timings,
    })
}

fn spectrum_points(
    config: &RunConfig,
    root: &Path,
    cache: &Cache,
    solver: &dyn SpectrumSolver,
    counters: &Counters,
) -> Result<(Vec<PointRecord>, Vec<PointTiming>)> {
    let analyses: Vec<Analysis> = config.analyses.iter().copied().filter(|a| a.uses_spectrum()).collect();
    if analyses.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    // one basis per (L, boundary), shared by all points
    let mut bases: BTreeMap<(usize, Boundary), std::result::Result<SymBasis, String>> = BTreeMap::new();
    let mut requests = Vec::new();
    for &l in &config.sizes {
        let n = config.excitations(l)?;
        for &b in &config.boundaries {
            let sector = config.sector.resolve(l, n, b)?;
            bases
                .entry((l, b))
                .or_insert_with(|| isolated(|| build_sector_basis(&sector)).map_err(|e| e.to_string()));
            for &delta in &config.deltas {
                for &t in &config.hoppings {
                    let mut params = ModelParams::new(delta, t, b);
                    params.validate()?;
                    params.coupling = 1.0;
                    requests.push(PointRequest {
                        params,
                        sector,
                        analyses: &analyses,
                        bins: config.bins,
                        bin_scheme: config.bin_scheme,
                        window: &config.window,
                        moments: &config.moments,
                        eth: &config.eth,
                        dense_threshold: config.dense_threshold,
                    });
                }
            }
        }
    }

    let results: Vec<(PointRecord, PointTiming)> = requests
        .par_iter()
        .map(|req| {
            let started = Instant::now();
            let id = req.id();
            let basis = &bases[&(req.sector.sites, req.sector.boundary)];
            let outcome = isolated(|| {
                let basis = basis.as_ref().map_err(|e| Error::InvalidSector(e.clone()))?;
                let out = compute_spectrum_point(req, basis, cache, solver)?;
                counters.solver_calls.fetch_add(out.solver_calls, Ordering::Relaxed);
                let files = write_point_files(root, &id, &out.files)?;
                Ok((files, out.cache_hit, out.solver_calls))
            });
            let (status, error, files, hits, calls) = match outcome {
                Ok((files, hit, calls)) => (Status::Ok, None, files, usize::from(hit), calls),
                Err(e) => (Status::Failed, Some(e.to_string()), Vec::new(), 0, 0),
            };
            let record = PointRecord {
                id: id.clone(),
                kind: PointKind::Spectrum,
                sites: req.sector.sites,
                excitations: req.sector.excitations,
                boundary: Some(req.sector.boundary),
                delta: req.params.delta,
                hopping: Some(req.params.hopping),
                analyses: req.analyses.to_vec(),
                status,
                error,
                files,
            };
            let timing = PointTiming {
                id,
                wall_seconds: started.elapsed().as_secs_f64(),
                cache_hits: hits,
                solver_calls: calls,
            };
            (record, timing)
        })
        .collect();
    Ok(results.into_iter().unzip())
}

struct GroundContext<'a> {
    cache: &'a Cache,
    solver: &'a dyn SpectrumSolver,
    opts: LanczosOptions,
    counters: &'a Counters,
}

impl GroundContext<'_> {
    /// Solves grid points independently; each keeps its own result.
    fn solve(
        &self,
        problem: &GroundStateProblem,
        delta: f64,
        boundary: Boundary,
        grid: &[f64],
        hits: &AtomicUsize,
        calls: &AtomicUsize,
    ) -> Vec<(f64, Result<GsSweepPoint>)> {
        grid.par_iter()
            .map(|&t| {
                let result = isolated(|| {
                    let params = ModelParams::new(delta, t, boundary);
                    let (l, n) = (problem.basis().sites(), problem.basis().excitations());
                    if let Some(p) = self.cache.load_ground(&params, l, n, &self.opts) {
                        hits.fetch_add(1, Ordering::Relaxed);
                        return Ok(p);
                    }
                    calls.fetch_add(1, Ordering::Relaxed);
                    self.counters.solver_calls.fetch_add(1, Ordering::Relaxed);
                    let point = problem.solve_with(t, &|b| self.solver.ground_state(b, &self.opts))?;
                    self.cache.store_ground(&params, &self.opts, &point)?;
                    Ok(point)
                });
                (t, result)
            })
            .collect()
    }
}

const SWEEP_MOMENTS: [Moment; 3] = [Moment::ONE, Moment::TWO, Moment::Infinity];

struct SweepState {
    boundary: Boundary,
    problem: std::result::Result<GroundStateProblem, String>,
    results: Vec<(f64, Result<GsSweepPoint>)>,
    hits: AtomicUsize,
    calls: AtomicUsize,
}

impl SweepState {
    fn ok_points(&self) -> Vec<GsSweepPoint> {
        let mut v: Vec<GsSweepPoint> = self.results.iter().filter_map(|(_, r)| r.as_ref().ok().copied()).collect();
        v.sort_by(|a, b| a.t_over_g.total_cmp(&b.t_over_g));
        v
    }
}

fn ground_state_points(
    config: &RunConfig,
    root: &Path,
    cache: &Cache,
    solver: &dyn SpectrumSolver,
    counters: &Counters,
) -> Result<(Vec<PointRecord>, Vec<PointTiming>)> {
    let opts = &config.ground_state;
    let grid = opts.grid.points()?;
    let ctx = GroundContext {
        cache,
        solver,
        opts: opts.lanczos(),
        counters,
    };
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for &l in &config.sizes {
        let n = config.excitations(l)?;
        for &delta in &config.deltas {
            let started = Instant::now();
            let mut states: Vec<SweepState> = config
                .boundaries
                .iter()
                .map(|&b| SweepState {
                    boundary: b,
                    problem: isolated(|| GroundStateProblem::new(l, n, b, delta)).map_err(|e| e.to_string()),
                    results: Vec::new(),
                    hits: AtomicUsize::new(0),
                    calls: AtomicUsize::new(0),
                })
                .collect();
            for s in &mut states {
                if let Ok(p) = &s.problem {
                    s.results = ctx.solve(p, delta, s.boundary, &grid, &s.hits, &s.calls);
                }
            }
            // one refinement grid shared by all boundaries keeps brackets comparable
            let coarse: Vec<Vec<GsSweepPoint>> = states.iter().map(SweepState::ok_points).collect();
            let refs: Vec<&[GsSweepPoint]> = coarse.iter().map(|v| v.as_slice()).collect();
            let extra = refinement_points(&grid, &refs, opts.refine_moment, opts.refine_points).unwrap_or_default();
            for s in &mut states {
                if let Ok(p) = &s.problem {
                    let more = ctx.solve(p, delta, s.boundary, &extra, &s.hits, &s.calls);
                    s.results.extend(more);
                    s.results.sort_by(|a, b| a.0.total_cmp(&b.0));
                }
            }

            let mut finished: Vec<(Boundary, Vec<GsSweepPoint>, bool)> = Vec::new();
            for s in &states {
                let id = sweep_id(l, n, s.boundary, delta);
                let outcome = isolated(|| sweep_outputs(&id, l, n, delta, s));
                let (status, error, files) = match outcome.and_then(|(files, failed)| {
                    write_point_files(root, &id, &files).map(|f| (f, failed))
                }) {
                    Ok((files, failed)) if failed.is_empty() => (Status::Ok, None, files),
                    Ok((files, failed)) => (
                        Status::Failed,
                        Some(format!(
                            "{} grid point(s) failed, first at t/g = {}: {}",
                            failed.len(),
                            failed[0].t_over_g,
                            failed[0].error
                        )),
                        files,
                    ),
                    Err(e) => (Status::Failed, Some(e.to_string()), Vec::new()),
                };
                finished.push((s.boundary, s.ok_points(), status == Status::Ok));
                records.push(PointRecord {
                    id: id.clone(),
                    kind: PointKind::GroundStateSweep,
                    sites: l,
                    excitations: n,
                    boundary: Some(s.boundary),
                    delta,
                    hopping: None,
                    analyses: vec![Analysis::Groundstate],
                    status,
                    error,
                    files,
                });
                timings.push(PointTiming {
                    id,
                    wall_seconds: started.elapsed().as_secs_f64(),
                    cache_hits: s.hits.load(Ordering::Relaxed),
                    solver_calls: s.calls.load(Ordering::Relaxed),
                });
            }

            let pbc = finished.iter().find(|f| f.0 == Boundary::Pbc);
            let hwbc = finished.iter().find(|f| f.0 == Boundary::Hwbc);
            if let (Some(p), Some(h)) = (pbc, hwbc) {
                let id = critical_id(l, n, delta);
                let outcome = if p.2 && h.2 {
                    isolated(|| {
                        let estimates = SWEEP_MOMENTS
                            .iter()
                            .map(|&q| critical_bracket(&p.1, &h.1, q))
                            .collect::<Result<Vec<_>>>()?;
                        let report = CriticalReport {
                            sites: l,
                            delta,
                            estimates,
                        };
                        write_point_files(root, &id, &[("critical.json".into(), to_json(&report)?)])
                    })
                } else {
                    Err(Error::MissingAnalysis {
                        figure: 6,
                        analysis: "complete PBC and HWBC ground-state sweeps",
                    })
                };
                let (status, error, files) = match outcome {
                    Ok(f) => (Status::Ok, None, f),
                    Err(e) => (Status::Failed, Some(e.to_string()), Vec::new()),
                };
                records.push(PointRecord {
                    id,
                    kind: PointKind::CriticalReport,
                    sites: l,
                    excitations: n,
                    boundary: None,
                    delta,
                    hopping: None,
                    analyses: vec![Analysis::Groundstate],
                    status,
                    error,
                    files,
                });
            }
        }
    }
    Ok((records, timings))
}

type SweepFiles = (Vec<(String, Vec<u8>)>, Vec<FailedGridPoint>);

fn sweep_outputs(id: &str, l: usize, n: usize, delta: f64, s: &SweepState) -> Result<SweepFiles> {
    let problem = s.problem.as_ref().map_err(|e| Error::InvalidSector(e.clone()))?;
    let failed: Vec<FailedGridPoint> = s
        .results
        .iter()
        .filter_map(|(t, r)| {
            r.as_ref().err().map(|e| FailedGridPoint {
                t_over_g: *t,
                error: e.to_string(),
            })
        })
        .collect();
    let points = s.ok_points();
    let mut files = Vec::new();
    let mut gs = Table::new(&["t_over_g", "D1", "D2", "Dinf", "E0"]);
    for p in &points {
        gs.push(vec![
            fmt_f64(p.t_over_g),
            fmt_f64(p.d1),
            fmt_f64(p.d2),
            fmt_f64(p.dinf),
            fmt_f64(p.energy),
        ]);
    }
    files.push(("gs.csv".to_string(), gs.to_bytes()));

    let mut peaks = Vec::new();
    let mut non_smooth = Vec::new();
    if points.len() >= 3 {
        let t: Vec<f64> = points.iter().map(|p| p.t_over_g).collect();
        let mut columns = Vec::new();
        for q in SWEEP_MOMENTS {
            let values = points.iter().map(|p| p.dimension(q)).collect::<Result<Vec<_>>>()?;
            columns.push(derivative(&t, &values)?);
            peaks.push((q, argmax_abs_derivative(&points, q)?));
            let flagged = non_smooth_points(&t, &values, 5.0, 1e-3);
            non_smooth.push((q, flagged.into_iter().map(|i| t[i]).collect()));
        }
        let mut d = Table::new(&["t_over_g", "dD1_dt", "dD2_dt", "dDinf_dt"]);
        for (i, &x) in t.iter().enumerate() {
            d.push(vec![
                fmt_f64(x),
                fmt_f64(columns[0][i]),
                fmt_f64(columns[1][i]),
                fmt_f64(columns[2][i]),
            ]);
        }
        files.push(("gs_derivative.csv".to_string(), d.to_bytes()));
    }
    let sector = *problem.basis().sector().expect("ground-state bases carry a sector");
    let summary = SweepSummary {
        id: id.to_string(),
        sites: l,
        excitations: n,
        boundary: s.boundary,
        delta,
        sector,
        sector_dimension: problem.basis().dimension(),
        full_dimension: problem.full_dimension(),
        points: points.len(),
        failed: failed.clone(),
        peaks,
        non_smooth,
        small_t_note: SMALL_T_NOTE.to_string(),
    };
    files.push(("summary.json".to_string(), to_json(&summary)?));
    Ok((files, failed))
}
