use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polariton_ed::basis::{build_sector_basis, full_dimension, Boundary, Parity, Sector};
use polariton_ed::eigen::{extremal_eigenpair, DEFAULT_DENSE_THRESHOLD};
use polariton_ed::groundstate::{
    argmax_abs_derivative, geometric_grid, refined_sweep, GroundStateProblem, GRID_MAX, GRID_MIN,
};
use polariton_ed::model::{build_hamiltonian, Hamiltonian, ModelParams};
use polariton_ed::multifractal::Moment;
use polariton_ed::runner::cache::{resolve_dir, Cache, CACHE_DIR_ENV};
use polariton_ed::runner::config::{Analysis, CachePolicy, EthOptions, RunConfig};
use polariton_ed::runner::emit::{emit_figure_data, Figure};
use polariton_ed::runner::output::{emit_file, fmt_f64, Table};
use polariton_ed::runner::pipeline::{compute_spectrum_point, run_sweep, PointRequest, ResultManifest, MANIFEST_FILE};
use polariton_ed::runner::solver::ExactSolver;
use polariton_ed::spectral::{BinScheme, Window, DEFAULT_BINS};
use polariton_ed::Result;

#[derive(Parser)]
#[command(name = "polariton-ed", version, about = "Exact diagonalization of the Jaynes-Cummings-Hubbard chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a JSON config and write a manifest.
    Run {
        config: PathBuf,
        /// Overrides the config's cache directory.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Dimension of a symmetry sector.
    SectorDim {
        #[command(flatten)]
        sector: SectorArgs,
    },
    /// Eigenvalues of one sector Hamiltonian.
    Spectrum {
        #[command(flatten)]
        point: PointArgs,
        /// Also write the Hamiltonian as `row col value` triplets.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Eigenstate generalized fractal dimensions.
    Gfd {
        #[command(flatten)]
        point: PointArgs,
        /// Moment orders; `inf` for the maximum-intensity limit.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        q: Vec<Moment>,
    },
    /// Spacing-ratio statistics.
    Rstat {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Coarse-grained density of states.
    Dos {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        equal_count: bool,
    },
    /// Diagonal and off-diagonal tunneling matrix elements.
    Eth {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = polariton_ed::eth::DEFAULT_PAIR_WINDOW)]
        pair_window: f64,
        #[arg(long, default_value_t = polariton_ed::eth::DEFAULT_RUNNING_LENGTH)]
        running_length: usize,
    },
    /// Ground-state GFDs over a geometric grid of t/g.
    GroundState {
        #[arg(long, short = 'L', alias = "L")]
        sites: usize,
        #[arg(long, short = 'N', alias = "N")]
        excitations: Option<usize>,
        #[arg(long, default_value = "pbc")]
        boundary: Boundary,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta: f64,
        #[arg(long, default_value_t = GRID_MIN)]
        t_min: f64,
        #[arg(long, default_value_t = GRID_MAX)]
        t_max: f64,
        #[arg(long, default_value_t = 10)]
        points_per_decade: usize,
        /// Extra points around the D1 derivative maximum.
        #[arg(long, default_value_t = 8)]
        refine: usize,
    },
    /// Figure tables from a finished run.
    Emit {
        #[arg(long)]
        figure: u8,
        /// Run output directory or its manifest.json.
        #[arg(long, default_value = ".")]
        results: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SectorArgs {
    #[arg(long, short = 'L', alias = "L")]
    sites: usize,
    /// Defaults to unit filling.
    #[arg(long, short = 'N', alias = "N")]
    excitations: Option<usize>,
    #[arg(long, default_value = "pbc")]
    boundary: Boundary,
    /// Momentum index (PBC only).
    #[arg(long, short = 'Q', alias = "Q")]
    momentum: Option<usize>,
    /// Reflection parity, +1 or -1.
    #[arg(long, short = 'p', alias = "p", allow_hyphen_values = true)]
    parity: Option<i64>,
}

impl SectorArgs {
    fn excitations(&self) -> usize {
        self.excitations.unwrap_or(self.sites)
    }

    /// Unset momentum means Q=0 under PBC.
    fn sector(&self) -> Result<Sector> {
        let momentum = match self.boundary {
            Boundary::Pbc => Some(self.momentum.unwrap_or(0)),
            Boundary::Hwbc => self.momentum,
        };
        let parity = self.parity.map(Parity::from_sign).transpose()?;
        Sector::new(self.sites, self.excitations(), self.boundary, momentum, parity)
    }
}

#[derive(Args, Clone)]
struct PointArgs {
    #[command(flatten)]
    sector: SectorArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, short = 't', default_value_t = 1.0)]
    hopping: f64,
    /// Directory for the point's CSV/JSON files; only the summary is printed otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_DENSE_THRESHOLD)]
    dense_threshold: usize,
}

impl PointArgs {
    /// A cache only when asked for, either by flag or environment.
    fn cache(&self) -> Result<Cache> {
        if self.no_cache {
            return Ok(Cache::disabled());
        }
        match (&self.cache_dir, std::env::var_os(CACHE_DIR_ENV)) {
            (None, None) => Ok(Cache::disabled()),
            (explicit, _) => Cache::open(&resolve_dir(explicit.as_deref(), Path::new(".")), CachePolicy::Use),
        }
    }

    fn params(&self) -> Result<ModelParams> {
        let p = ModelParams::new(self.delta, self.hopping, self.sector.boundary);
        p.validate()?;
        Ok(p)
    }

    fn run(&self, analyses: &[Analysis], moments: &[Moment], eth: &EthOptions, scheme: BinScheme) -> Result<()> {
        let sector = self.sector.sector()?;
        let basis = build_sector_basis(&sector)?;
        let window = Window::MiddleThird;
        let req = PointRequest {
            params: self.params()?,
            sector,
            analyses,
            bins: self.bins,
            bin_scheme: scheme,
            window: &window,
            moments,
            eth,
            dense_threshold: self.dense_threshold,
        };
        let out = compute_spectrum_point(&req, &basis, &self.cache()?, &ExactSolver)?;
        if let Some(dir) = &self.out {
            for (name, bytes) in &out.files {
                emit_file(dir, name, bytes)?;
            }
        }
        println!("{}", serde_json::to_string_pretty(&out.summary)?);
        Ok(())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the command ran but some points failed.
fn dispatch(command: Command) -> Result<bool> {
    let eth_defaults = EthOptions::default();
    match command {
        Command::Run {
            config,
            cache_dir,
            workers,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if cache_dir.is_some() {
                cfg.cache_dir = cache_dir;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let outcome = run_sweep(&cfg)?;
            let failed = outcome.manifest.failures().count();
            println!(
                "{} points, {} failed, manifest {}",
                outcome.manifest.points.len(),
                failed,
                outcome.manifest_path.display()
            );
            Ok(failed == 0)
        }
        Command::SectorDim { sector } => {
            let s = sector.sector()?;
            let dim = build_sector_basis(&s)?.dimension();
            let full = full_dimension(s.sites, s.excitations)?;
            println!("{dim}");
            log::info!("full product-basis dimension {full}");
            Ok(true)
        }
        Command::Spectrum { point, dump_matrix } => {
            if let Some(path) = dump_matrix {
                let basis = build_sector_basis(&point.sector.sector()?)?;
                let out = BufWriter::new(File::create(&path)?);
                match build_hamiltonian(&point.params()?, &basis)? {
                    Hamiltonian::Real(h) => h.total.write_triplets(out)?,
                    Hamiltonian::Complex(h) => h.total.write_triplets(out)?,
                }
            }
            point.run(&[], &[], &eth_defaults, BinScheme::EqualWidth)?;
            Ok(true)
        }
        Command::Gfd { point, q } => {
            point.run(&[Analysis::Gfd], &q, &eth_defaults, BinScheme::EqualWidth)?;
            Ok(true)
        }
        Command::Rstat { point } => {
            point.run(&[Analysis::Rstat], &[], &eth_defaults, BinScheme::EqualWidth)?;
            Ok(true)
        }
        Command::Dos { point, equal_count } => {
            let scheme = if equal_count {
                BinScheme::EqualCount
            } else {
                BinScheme::EqualWidth
            };
            point.run(&[Analysis::Dos], &[], &eth_defaults, scheme)?;
            Ok(true)
        }
        Command::Eth {
            point,
            pair_window,
            running_length,
        } => {
            let eth = EthOptions {
                pair_window,
                running_length,
            };
            point.run(&[Analysis::Eth], &[], &eth, BinScheme::EqualWidth)?;
            Ok(true)
        }
        Command::GroundState {
            sites,
            excitations,
            boundary,
            delta,
            t_min,
            t_max,
            points_per_decade,
            refine,
        } => {
            let problem = GroundStateProblem::new(sites, excitations.unwrap_or(sites), boundary, delta)?;
            let opts = polariton_ed::eigen::LanczosOptions::default();
            let grid = geometric_grid(t_min, t_max, points_per_decade)?;
            let solver = |block: &_| extremal_eigenpair(block, &opts);
            let sweep = refined_sweep(&problem, &grid, Moment::ONE, refine, &solver)?;
            let mut table = Table::new(&["t_over_g", "D1", "D2", "Dinf", "E0"]);
            for p in &sweep {
                table.push(vec![
                    fmt_f64(p.t_over_g),
                    fmt_f64(p.d1),
                    fmt_f64(p.d2),
                    fmt_f64(p.dinf),
                    fmt_f64(p.energy),
                ]);
            }
            std::io::stdout().write_all(&table.to_bytes())?;
            for q in [Moment::ONE, Moment::TWO, Moment::Infinity] {
                let peak = argmax_abs_derivative(&sweep, q)?;
                log::info!(
                    "argmax |dD{}/dt| at t/g = {:.4}{}",
                    q.label(),
                    peak.t_over_g,
                    if peak.on_grid_edge { " (grid edge)" } else { "" }
                );
            }
            Ok(true)
        }
        Command::Emit { figure, results, out } => {
            let manifest_path = if results.is_dir() {
                results.join(MANIFEST_FILE)
            } else {
                results
            };
            let root = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
            let manifest = ResultManifest::load(&manifest_path)?;
            let figure = Figure::from_number(figure)?;
            let out = out.unwrap_or_else(|| root.join("figures"));
            for rec in emit_figure_data(&manifest, &root, figure, &out)? {
                println!("{}", out.join(&rec.path).display());
            }
            Ok(true)
        }
    }
}
