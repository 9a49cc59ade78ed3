//! Tidy long-format figure tables built from a finished run's outputs.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::config::Analysis;
use super::output::{emit_file, fmt_f64, read_table, FileRecord, Table};
use super::pipeline::{CriticalReport, PointKind, PointRecord, ResultManifest, SpectrumSummary, Status};
use crate::error::{Error, Result};
use crate::multifractal::Moment;

pub const SCHEMA_FILE: &str = "schema.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Figure {
    /// Per-bin `<r>`, `<D1>` and `log10 var(D1)` against `t` and `ε`.
    SpectralMaps,
    /// Middle-window summaries against `t` with GOE references.
    WindowSummaries,
    /// Coarse-grained density of states.
    DensityOfStates,
    /// Diagonal and off-diagonal tunneling matrix elements.
    Eth,
    /// Ground-state GFDs, derivatives and critical brackets.
    GroundState,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::SpectralMaps,
        Figure::WindowSummaries,
        Figure::DensityOfStates,
        Figure::Eth,
        Figure::GroundState,
    ];

    pub fn number(self) -> u8 {
        match self {
            Figure::SpectralMaps => 1,
            Figure::WindowSummaries => 2,
            Figure::DensityOfStates => 3,
            Figure::Eth => 4,
            Figure::GroundState => 6,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.number() == n)
            .ok_or_else(|| Error::InvalidParameter(format!("no figure {n}; expected one of 1, 2, 3, 4, 6")))
    }

    fn requires(self) -> &'static [Analysis] {
        match self {
            Figure::SpectralMaps | Figure::WindowSummaries => &[Analysis::Rstat, Analysis::Gfd],
            Figure::DensityOfStates => &[Analysis::Dos],
            Figure::Eth => &[Analysis::Eth],
            Figure::GroundState => &[Analysis::Groundstate],
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fig{}", self.number())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim_start_matches("fig");
        let n = digits
            .parse::<u8>()
            .map_err(|_| Error::InvalidParameter(format!("unknown figure `{s}`")))?;
        Self::from_number(n)
    }
}

#[derive(Serialize)]
struct ColumnDoc {
    name: &'static str,
    description: &'static str,
}

#[derive(Serialize)]
struct TableDoc {
    file: &'static str,
    columns: Vec<ColumnDoc>,
}

macro_rules! columns {
    ($($name:literal => $desc:literal),* $(,)?) => {
        vec![$(ColumnDoc { name: $name, description: $desc }),*]
    };
}

fn point_columns() -> Vec<ColumnDoc> {
    columns![
        "sites" => "chain length L",
        "boundary" => "pbc or hwbc",
        "delta_over_g" => "detuning in units of g",
        "t_over_g" => "photon tunneling in units of g",
    ]
}

fn with_point(mut rest: Vec<ColumnDoc>) -> Vec<ColumnDoc> {
    let mut cols = point_columns();
    cols.append(&mut rest);
    cols
}

fn schema(figure: Figure) -> Vec<TableDoc> {
    match figure {
        Figure::SpectralMaps => vec![TableDoc {
            file: "fig1.csv",
            columns: with_point(columns![
                "eps_bin_center" => "center of the scaled-energy bin",
                "mean_r" => "mean spacing ratio of levels in the bin (empty if none)",
                "mean_D1" => "mean eigenstate D1, log base = sector dimension",
                "log10_var_D1" => "log10 of the population variance of D1 in the bin (empty if zero)",
                "count" => "number of eigenstates in the bin",
            ]),
        }],
        Figure::WindowSummaries => vec![TableDoc {
            file: "fig2.csv",
            columns: with_point(columns![
                "dimension" => "sector dimension D",
                "mean_r" => "mean spacing ratio over the analysis window",
                "mean_D1" => "mean eigenstate D1 over the window",
                "var_D1" => "population variance of D1 over the window",
                "goe_mean_D1" => "GOE expectation of D1 at dimension D",
                "goe_var_D1" => "GOE variance of D1 at dimension D",
            ]),
        }],
        Figure::DensityOfStates => vec![TableDoc {
            file: "fig3.csv",
            columns: with_point(columns![
                "eps_bin_center" => "center of the scaled-energy bin",
                "rho" => "count / (D * bin width)",
            ]),
        }],
        Figure::Eth => vec![
            TableDoc {
                file: "fig4_diagonal.csv",
                columns: with_point(columns![
                    "eps_over_epsav" => "eigenstate energy over the normalized trace",
                    "value" => "<a|H_tun|a>",
                ]),
            },
            TableDoc {
                file: "fig4_offdiagonal.csv",
                columns: with_point(columns![
                    "omega" => "E_a - E_b of the pair",
                    "absvalue" => "|<a|H_tun|b>|",
                    "running_avg" => "trailing running mean of absvalue over omega-sorted pairs",
                ]),
            },
            TableDoc {
                file: "fig4_summary.csv",
                columns: with_point(columns![
                    "dimension" => "sector dimension D",
                    "eps_av" => "normalized trace of H",
                    "z_mean" => "mean |difference| of consecutive diagonal elements",
                    "offdiag_mean" => "mean |<a|H_tun|b>| over the pair window",
                    "pair_count" => "number of pairs in the window",
                ]),
            },
        ],
        Figure::GroundState => vec![
            TableDoc {
                file: "fig6.csv",
                columns: columns![
                    "sites" => "chain length L",
                    "boundary" => "pbc or hwbc",
                    "delta_over_g" => "detuning in units of g",
                    "t_over_g" => "photon tunneling in units of g",
                    "D1" => "ground-state D1 in the product basis, log base = full dimension",
                    "D2" => "ground-state D2",
                    "Dinf" => "ground-state D_inf",
                    "dD1_dt" => "finite-difference derivative of D1 with respect to t/g",
                    "dD2_dt" => "derivative of D2",
                    "dDinf_dt" => "derivative of D_inf",
                ],
            },
            TableDoc {
                file: "fig6_critical.csv",
                columns: columns![
                    "sites" => "chain length L",
                    "delta_over_g" => "detuning in units of g",
                    "q" => "moment order",
                    "t_pbc" => "argmax |dD_q/dt| for periodic boundaries",
                    "t_hwbc" => "argmax |dD_q/dt| for hard-wall boundaries",
                    "lower" => "min of the two",
                    "upper" => "max of the two",
                    "grid_edge_warning" => "true if either maximum sits on a grid edge",
                ],
            },
        ],
    }
}

fn point_fields(p: &PointRecord) -> Vec<String> {
    vec![
        p.sites.to_string(),
        p.boundary.map(|b| b.to_string()).unwrap_or_default(),
        fmt_f64(p.delta),
        p.hopping.map(fmt_f64).unwrap_or_default(),
    ]
}

fn file_of<'a>(p: &'a PointRecord, name: &str) -> Result<&'a str> {
    p.files
        .iter()
        .map(|f| f.path.as_str())
        .find(|path| path.rsplit('/').next() == Some(name))
        .ok_or_else(|| Error::Config(format!("point {} has no {name}", p.id)))
}

/// Reads one of a point's CSV outputs, keyed by header name.
fn point_table(root: &Path, p: &PointRecord, name: &str) -> Result<Vec<std::collections::HashMap<String, String>>> {
    let (header, rows) = read_table(&root.join(file_of(p, name)?))?;
    Ok(rows
        .into_iter()
        .map(|r| header.iter().cloned().zip(r).collect())
        .collect())
}

fn point_json<T: serde::de::DeserializeOwned>(root: &Path, p: &PointRecord, name: &str) -> Result<T> {
    let text = std::fs::read_to_string(root.join(file_of(p, name)?))?;
    Ok(serde_json::from_str(&text)?)
}

fn log10_cell(cell: &str) -> Result<String> {
    if cell.is_empty() {
        return Ok(String::new());
    }
    let v: f64 = cell
        .parse()
        .map_err(|_| Error::Config(format!("not a number: `{cell}`")))?;
    Ok(if v > 0.0 { fmt_f64(v.log10()) } else { String::new() })
}

fn get<'a>(row: &'a std::collections::HashMap<String, String>, key: &str) -> Result<&'a str> {
    row.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Config(format!("missing column `{key}`")))
}

/// Writes the tables for `figure` and the column schema into `out_dir`,
/// reading per-point outputs from `results_dir`.
pub fn emit_figure_data(
    manifest: &ResultManifest,
    results_dir: &Path,
    figure: Figure,
    out_dir: &Path,
) -> Result<Vec<FileRecord>> {
    if manifest.points.is_empty() {
        return Err(Error::EmptyManifest);
    }
    for &a in figure.requires() {
        if !manifest.config.has(a) {
            return Err(Error::MissingAnalysis {
                figure: figure.number(),
                analysis: a.name(),
            });
        }
    }
    if figure.requires().contains(&Analysis::Gfd) && !manifest.config.moments.contains(&Moment::ONE) {
        return Err(Error::MissingAnalysis {
            figure: figure.number(),
            analysis: "gfd with q = 1",
        });
    }
    let kind = match figure {
        Figure::GroundState => PointKind::GroundStateSweep,
        _ => PointKind::Spectrum,
    };
    let points: Vec<&PointRecord> = manifest
        .points
        .iter()
        .filter(|p| p.kind == kind && p.status == Status::Ok)
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyManifest);
    }

    let tables = match figure {
        Figure::SpectralMaps => vec![("fig1.csv", spectral_maps(results_dir, &points)?)],
        Figure::WindowSummaries => vec![("fig2.csv", window_summaries(results_dir, &points)?)],
        Figure::DensityOfStates => vec![("fig3.csv", density(results_dir, &points)?)],
        Figure::Eth => eth_tables(results_dir, &points)?,
        Figure::GroundState => ground_state_tables(results_dir, manifest, &points)?,
    };
    let mut records = Vec::new();
    for (name, table) in tables {
        records.push(emit_file(out_dir, name, &table.to_bytes())?);
    }
    let mut doc = serde_json::to_vec_pretty(&schema(figure))?;
    doc.push(b'\n');
    records.push(emit_file(out_dir, &format!("{figure}_{SCHEMA_FILE}"), &doc)?);
    Ok(records)
}

fn header_with_point(rest: &[&'static str]) -> Vec<&'static str> {
    let mut h = vec!["sites", "boundary", "delta_over_g", "t_over_g"];
    h.extend_from_slice(rest);
    h
}

fn spectral_maps(root: &Path, points: &[&PointRecord]) -> Result<Table> {
    let mut t = Table::new(&header_with_point(&["eps_bin_center", "mean_r", "mean_D1", "log10_var_D1", "count"]));
    for p in points {
        let r = point_table(root, p, "rstat.csv")?;
        let d = point_table(root, p, "gfd_q1.csv")?;
        if r.len() != d.len() {
            return Err(Error::LengthMismatch {
                left: r.len(),
                right: d.len(),
            });
        }
        for (rr, dr) in r.iter().zip(&d) {
            let mut row = point_fields(p);
            row.push(get(dr, "epsilon_bin_center")?.to_string());
            row.push(get(rr, "mean_r")?.to_string());
            row.push(get(dr, "mean_D1")?.to_string());
            row.push(log10_cell(get(dr, "var_D1")?)?);
            row.push(get(dr, "count")?.to_string());
            t.push(row);
        }
    }
    Ok(t)
}

fn window_summaries(root: &Path, points: &[&PointRecord]) -> Result<Table> {
    let mut t = Table::new(&header_with_point(&[
        "dimension",
        "mean_r",
        "mean_D1",
        "var_D1",
        "goe_mean_D1",
        "goe_var_D1",
    ]));
    for p in points {
        let s: SpectrumSummary = point_json(root, p, "summary.json")?;
        let d1 = s.gfd.iter().find(|g| g.q == Moment::ONE).ok_or(Error::MissingAnalysis {
            figure: 2,
            analysis: "gfd with q = 1",
        })?;
        let goe = s.goe.ok_or(Error::MissingAnalysis {
            figure: 2,
            analysis: "gfd",
        })?;
        let rstat = s.rstat.ok_or(Error::MissingAnalysis {
            figure: 2,
            analysis: "rstat",
        })?;
        let mut row = point_fields(p);
        row.extend([
            s.dimension.to_string(),
            fmt_f64(rstat.mean),
            fmt_f64(d1.mean),
            fmt_f64(d1.variance),
            fmt_f64(goe.mean_d1),
            fmt_f64(goe.var_d1),
        ]);
        t.push(row);
    }
    Ok(t)
}

fn density(root: &Path, points: &[&PointRecord]) -> Result<Table> {
    let mut t = Table::new(&header_with_point(&["eps_bin_center", "rho"]));
    for p in points {
        for r in point_table(root, p, "dos.csv")? {
            let mut row = point_fields(p);
            row.push(get(&r, "epsilon_bin_center")?.to_string());
            row.push(get(&r, "rho")?.to_string());
            t.push(row);
        }
    }
    Ok(t)
}

fn eth_tables(root: &Path, points: &[&PointRecord]) -> Result<Vec<(&'static str, Table)>> {
    let mut diag = Table::new(&header_with_point(&["eps_over_epsav", "value"]));
    let mut off = Table::new(&header_with_point(&["omega", "absvalue", "running_avg"]));
    let mut summary = Table::new(&header_with_point(&[
        "dimension",
        "eps_av",
        "z_mean",
        "offdiag_mean",
        "pair_count",
    ]));
    for p in points {
        for r in point_table(root, p, "eth_diagonal.csv")? {
            let mut row = point_fields(p);
            row.push(get(&r, "eps_over_epsav")?.to_string());
            row.push(get(&r, "value")?.to_string());
            diag.push(row);
        }
        for r in point_table(root, p, "eth_offdiagonal.csv")? {
            let mut row = point_fields(p);
            for key in ["omega", "absvalue", "running_avg"] {
                row.push(get(&r, key)?.to_string());
            }
            off.push(row);
        }
        let s: SpectrumSummary = point_json(root, p, "summary.json")?;
        let e = s.eth.ok_or(Error::MissingAnalysis {
            figure: 4,
            analysis: "eth",
        })?;
        let mut row = point_fields(p);
        row.extend([
            s.dimension.to_string(),
            fmt_f64(e.eps_av),
            fmt_f64(e.z_mean),
            fmt_f64(e.offdiag_mean),
            e.pair_count.to_string(),
        ]);
        summary.push(row);
    }
    Ok(vec![
        ("fig4_diagonal.csv", diag),
        ("fig4_offdiagonal.csv", off),
        ("fig4_summary.csv", summary),
    ])
}

fn ground_state_tables(
    root: &Path,
    manifest: &ResultManifest,
    sweeps: &[&PointRecord],
) -> Result<Vec<(&'static str, Table)>> {
    let mut gfd = Table::new(&[
        "sites",
        "boundary",
        "delta_over_g",
        "t_over_g",
        "D1",
        "D2",
        "Dinf",
        "dD1_dt",
        "dD2_dt",
        "dDinf_dt",
    ]);
    for p in sweeps {
        let values = point_table(root, p, "gs.csv")?;
        let derivs = if p.files.iter().any(|f| f.path.ends_with("/gs_derivative.csv")) {
            point_table(root, p, "gs_derivative.csv")?
        } else {
            Vec::new()
        };
        for (i, v) in values.iter().enumerate() {
            let d = derivs.get(i);
            let cell = |key: &str| d.and_then(|d| d.get(key)).cloned().unwrap_or_default();
            let mut row = vec![
                p.sites.to_string(),
                p.boundary.map(|b| b.to_string()).unwrap_or_default(),
                fmt_f64(p.delta),
            ];
            for key in ["t_over_g", "D1", "D2", "Dinf"] {
                row.push(get(v, key)?.to_string());
            }
            row.extend([cell("dD1_dt"), cell("dD2_dt"), cell("dDinf_dt")]);
            gfd.push(row);
        }
    }
    let mut crit = Table::new(&[
        "sites",
        "delta_over_g",
        "q",
        "t_pbc",
        "t_hwbc",
        "lower",
        "upper",
        "grid_edge_warning",
    ]);
    let reports = manifest
        .points
        .iter()
        .filter(|p| p.kind == PointKind::CriticalReport && p.status == Status::Ok);
    for p in reports {
        let report: CriticalReport = point_json(root, p, "critical.json")?;
        for e in &report.estimates {
            crit.push(vec![
                report.sites.to_string(),
                fmt_f64(report.delta),
                e.q.label(),
                fmt_f64(e.pbc.t_over_g),
                fmt_f64(e.hwbc.t_over_g),
                fmt_f64(e.lower),
                fmt_f64(e.upper),
                e.grid_edge_warning.to_string(),
            ]);
        }
    }
    Ok(vec![("fig6.csv", gfd), ("fig6_critical.csv", crit)])
}
