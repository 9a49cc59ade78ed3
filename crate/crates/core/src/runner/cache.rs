//! On-disk cache of solved spectra and ground-state points.
//!
//! Entries are named by the SHA-256 of a canonical JSON description of the
//! point (model parameters, sector, solver method, code version). Spectra
//! are stored in a small versioned binary format; ground-state points as
//! JSON. `index.json` maps every digest to a readable description.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use faer::Mat;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::CachePolicy;
use super::solver::Spectrum;
use crate::basis::{Boundary, Sector};
use crate::eigen::{LanczosOptions, Method, SpectrumResult};
use crate::error::{Error, Result};
use crate::groundstate::GsSweepPoint;
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::CODE_VERSION;

pub const CACHE_DIR_ENV: &str = "POLARITON_ED_CACHE_DIR";
const MAGIC: &[u8; 8] = b"PEDSPEC\0";
const FORMAT_VERSION: u32 = 1;
const INDEX_FILE: &str = "index.json";

#[derive(Serialize)]
struct SpectrumKey<'a> {
    kind: &'static str,
    format: u32,
    code: &'a str,
    sites: usize,
    excitations: usize,
    boundary: Boundary,
    momentum: Option<usize>,
    parity: Option<i8>,
    delta: f64,
    coupling: f64,
    hopping: f64,
    method: Method,
    vectors: bool,
}

#[derive(Serialize)]
struct GroundKey<'a> {
    kind: &'static str,
    format: u32,
    code: &'a str,
    sites: usize,
    excitations: usize,
    boundary: Boundary,
    delta: f64,
    coupling: f64,
    hopping: f64,
    tolerance: f64,
    max_matvecs: usize,
    krylov_dim: usize,
    keep: usize,
}

fn digest<K: Serialize>(key: &K) -> (String, String) {
    let text = serde_json::to_string(key).expect("cache keys serialize");
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    (hash, text)
}

/// Digest and description of a spectrum entry.
pub fn spectrum_key(params: &ModelParams, sector: &Sector, method: Method, vectors: bool) -> (String, String) {
    digest(&SpectrumKey {
        kind: "spectrum",
        format: FORMAT_VERSION,
        code: CODE_VERSION,
        sites: sector.sites,
        excitations: sector.excitations,
        boundary: sector.boundary,
        momentum: sector.momentum,
        parity: sector.parity.map(|p| p.sign()),
        delta: params.delta,
        coupling: params.coupling,
        hopping: params.hopping,
        method,
        vectors,
    })
}

pub fn ground_key(params: &ModelParams, sites: usize, excitations: usize, opts: &LanczosOptions) -> (String, String) {
    digest(&GroundKey {
        kind: "ground_state",
        format: FORMAT_VERSION,
        code: CODE_VERSION,
        sites,
        excitations,
        boundary: params.boundary,
        delta: params.delta,
        coupling: params.coupling,
        hopping: params.hopping,
        tolerance: opts.tolerance,
        max_matvecs: opts.max_matvecs,
        krylov_dim: opts.krylov_dim,
        keep: opts.keep,
    })
}

/// Cache directory: explicit setting, then the environment, then
/// `<output_dir>/.cache`.
pub fn resolve_dir(explicit: Option<&Path>, output_dir: &Path) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => output_dir.join(".cache"),
    }
}

pub struct Cache {
    dir: PathBuf,
    policy: CachePolicy,
    index: Mutex<BTreeMap<String, String>>,
}

impl Cache {
    pub fn open(dir: &Path, policy: CachePolicy) -> Result<Self> {
        let cache_err = |reason: String| Error::Cache {
            path: dir.to_path_buf(),
            reason,
        };
        let mut index = BTreeMap::new();
        if policy != CachePolicy::Off {
            fs::create_dir_all(dir).map_err(|e| cache_err(e.to_string()))?;
            let path = dir.join(INDEX_FILE);
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| cache_err(e.to_string()))?;
                index = serde_json::from_str(&text).unwrap_or_else(|e| {
                    log::warn!("ignoring unreadable cache index {}: {e}", path.display());
                    BTreeMap::new()
                });
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            policy,
            index: Mutex::new(index),
        })
    }

    /// A cache that never reads or writes.
    pub fn disabled() -> Self {
        Self {
            dir: PathBuf::new(),
            policy: CachePolicy::Off,
            index: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn reads(&self) -> bool {
        self.policy == CachePolicy::Use
    }

    fn writes(&self) -> bool {
        self.policy != CachePolicy::Off
    }

    fn entry(&self, hash: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{hash}.{ext}"))
    }

    fn record(&self, hash: &str, description: &str) -> Result<()> {
        let mut index = self.index.lock().expect("cache index lock");
        index.insert(hash.to_string(), description.to_string());
        let text = serde_json::to_string_pretty(&*index)?;
        write_atomic(&self.dir.join(INDEX_FILE), text.as_bytes())
    }

    /// A cached spectrum satisfying the request; an entry with vectors also
    /// serves eigenvalue-only requests.
    pub fn load_spectrum(
        &self,
        params: &ModelParams,
        sector: &Sector,
        method: Method,
        want_vectors: bool,
    ) -> Option<Spectrum> {
        if !self.reads() {
            return None;
        }
        let candidates: &[bool] = if want_vectors { &[true] } else { &[false, true] };
        for &vectors in candidates {
            let (hash, _) = spectrum_key(params, sector, method, vectors);
            let path = self.entry(&hash, "spec");
            if !path.exists() {
                continue;
            }
            match read_spectrum(&path, &hash, params, sector) {
                Ok(mut s) => {
                    if !want_vectors {
                        s.drop_vectors();
                    }
                    return Some(s);
                }
                Err(e) => log::warn!("discarding cache entry {}: {e}", path.display()),
            }
        }
        None
    }

    pub fn store_spectrum(&self, sector: &Sector, spectrum: &Spectrum) -> Result<()> {
        if !self.writes() {
            return Ok(());
        }
        let (params, method) = match spectrum {
            Spectrum::Real(s) => (s.params, s.method),
            Spectrum::Complex(s) => (s.params, s.method),
        };
        let (hash, description) = spectrum_key(&params, sector, method, spectrum.has_vectors());
        let path = self.entry(&hash, "spec");
        let tmp = path.with_extension("spec.tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp)?);
            write_spectrum(&mut out, &hash, spectrum)?;
            out.flush()?;
        }
        fs::rename(&tmp, &path)?;
        self.record(&hash, &description)
    }

    pub fn load_ground(&self, params: &ModelParams, sites: usize, excitations: usize, opts: &LanczosOptions) -> Option<GsSweepPoint> {
        if !self.reads() {
            return None;
        }
        let (hash, _) = ground_key(params, sites, excitations, opts);
        let path = self.entry(&hash, "gs.json");
        let text = fs::read_to_string(&path).ok()?;
        match serde_json::from_str(&text) {
            Ok(p) => Some(p),
            Err(e) => {
                log::warn!("discarding cache entry {}: {e}", path.display());
                None
            }
        }
    }

    pub fn store_ground(&self, params: &ModelParams, opts: &LanczosOptions, point: &GsSweepPoint) -> Result<()> {
        if !self.writes() {
            return Ok(());
        }
        let (hash, description) = ground_key(params, point.sites, point.excitations, opts);
        write_atomic(&self.entry(&hash, "gs.json"), serde_json::to_string(point)?.as_bytes())?;
        self.record(&hash, &description)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_spectrum<W: Write>(out: &mut W, hash: &str, spectrum: &Spectrum) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(hash.as_bytes())?;
    match spectrum {
        Spectrum::Real(s) => write_body(out, s, 0),
        Spectrum::Complex(s) => write_body(out, s, 1),
    }
}

fn write_body<W: Write, T: Scalar>(out: &mut W, s: &SpectrumResult<T>, kind: u8) -> Result<()> {
    let method = match s.method {
        Method::Dense => 0u8,
        Method::Iterative => 1u8,
    };
    out.write_all(&[kind, method, u8::from(s.eigenvectors.is_some())])?;
    out.write_all(&s.residual_max.unwrap_or(f64::NAN).to_le_bytes())?;
    out.write_all(&(s.eigenvalues.len() as u64).to_le_bytes())?;
    for e in &s.eigenvalues {
        out.write_all(&e.to_le_bytes())?;
    }
    if let Some(v) = &s.eigenvectors {
        for j in 0..v.ncols() {
            for &x in crate::eigen::column(v, j) {
                let c = x.to_complex();
                out.write_all(&c.re.to_le_bytes())?;
                if T::IS_COMPLEX {
                    out.write_all(&c.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_spectrum(path: &Path, hash: &str, params: &ModelParams, sector: &Sector) -> Result<Spectrum> {
    let bad = |reason: &str| Error::Cache {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a spectrum file"));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    if u32::from_le_bytes(v) != FORMAT_VERSION {
        return Err(bad("unsupported format version"));
    }
    let mut stored = vec![0u8; hash.len()];
    r.read_exact(&mut stored)?;
    if stored != hash.as_bytes() {
        return Err(bad("content key mismatch"));
    }
    let mut flags = [0u8; 3];
    r.read_exact(&mut flags)?;
    let method = match flags[1] {
        0 => Method::Dense,
        1 => Method::Iterative,
        _ => return Err(bad("unknown method tag")),
    };
    let has_vectors = flags[2] == 1;
    let residual = read_f64(&mut r)?;
    let mut d = [0u8; 8];
    r.read_exact(&mut d)?;
    let dim = usize::try_from(u64::from_le_bytes(d)).map_err(|_| bad("dimension overflow"))?;
    let spectrum = match flags[0] {
        0 => read_body::<_, f64>(&mut r, dim, has_vectors, residual, method, params, sector).map(Spectrum::Real)?,
        1 => read_body::<_, Complex64>(&mut r, dim, has_vectors, residual, method, params, sector)
            .map(Spectrum::Complex)?,
        _ => return Err(bad("unknown scalar tag")),
    };
    // trailing bytes mean a foreign or interrupted writer
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(bad("trailing data"));
    }
    Ok(spectrum)
}

fn read_body<R: Read, T: Scalar>(
    r: &mut R,
    dim: usize,
    has_vectors: bool,
    residual: f64,
    method: Method,
    params: &ModelParams,
    sector: &Sector,
) -> Result<SpectrumResult<T>> {
    let eigenvalues = (0..dim).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
    let eigenvectors = if has_vectors {
        let mut m = Mat::<T>::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                let re = read_f64(r)?;
                let im = if T::IS_COMPLEX { read_f64(r)? } else { 0.0 };
                m[(i, j)] = T::from_complex(Complex64::new(re, im));
            }
        }
        Some(m)
    } else {
        None
    };
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        residual_max: (!residual.is_nan()).then_some(residual),
        params: *params,
        sector: Some(*sector),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_sector_basis, Parity};
    use crate::model::build_hamiltonian;
    use crate::runner::solver::{ExactSolver, SpectrumSolver};

    fn solve(sector: &Sector, params: &ModelParams, vectors: bool) -> Spectrum {
        let basis = build_sector_basis(sector).unwrap();
        let h = build_hamiltonian(params, &basis).unwrap();
        ExactSolver.spectrum(&h, vectors, usize::MAX).unwrap()
    }

    #[test]
    fn round_trip_real_and_complex() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path(), CachePolicy::Use).unwrap();
        let params = ModelParams::new(0.5, 0.8, Boundary::Pbc);
        for sector in [
            Sector::new(4, 4, Boundary::Pbc, Some(0), Some(Parity::Odd)).unwrap(),
            Sector::new(5, 5, Boundary::Pbc, Some(2), None).unwrap(),
        ] {
            let s = solve(&sector, &params, true);
            assert!(cache.load_spectrum(&params, &sector, Method::Dense, true).is_none());
            cache.store_spectrum(&sector, &s).unwrap();
            let back = cache.load_spectrum(&params, &sector, Method::Dense, true).unwrap();
            match (&s, &back) {
                (Spectrum::Real(a), Spectrum::Real(b)) => {
                    assert_eq!(a.eigenvalues, b.eigenvalues);
                    assert_eq!(a.eigenvectors, b.eigenvectors);
                    assert_eq!(a.residual_max, b.residual_max);
                }
                (Spectrum::Complex(a), Spectrum::Complex(b)) => {
                    assert_eq!(a.eigenvalues, b.eigenvalues);
                    assert_eq!(a.eigenvectors, b.eigenvectors);
                }
                _ => panic!("scalar type changed"),
            }
            // vectors serve eigenvalue-only requests
            let values_only = cache.load_spectrum(&params, &sector, Method::Dense, false).unwrap();
            assert!(!values_only.has_vectors());
        }
        let index: BTreeMap<String, String> =
            serde_json::from_str(&fs::read_to_string(dir.path().join(INDEX_FILE)).unwrap()).unwrap();
        assert_eq!(index.len(), 2);
    }

    #[test]
    fn keys_separate_parameters() {
        let sector = Sector::new(4, 4, Boundary::Pbc, Some(0), Some(Parity::Odd)).unwrap();
        let a = spectrum_key(&ModelParams::new(0.0, 1.0, Boundary::Pbc), &sector, Method::Dense, true).0;
        let b = spectrum_key(&ModelParams::new(0.0, 1.0 + 1e-15, Boundary::Pbc), &sector, Method::Dense, true).0;
        let c = spectrum_key(&ModelParams::new(0.0, 1.0, Boundary::Pbc), &sector, Method::Dense, false).0;
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn corrupt_entries_are_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path(), CachePolicy::Use).unwrap();
        let params = ModelParams::new(0.0, 1.0, Boundary::Pbc);
        let sector = Sector::new(3, 3, Boundary::Pbc, Some(0), Some(Parity::Even)).unwrap();
        let s = solve(&sector, &params, false);
        cache.store_spectrum(&sector, &s).unwrap();
        let (hash, _) = spectrum_key(&params, &sector, Method::Dense, false);
        let path = dir.path().join(format!("{hash}.spec"));
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(cache.load_spectrum(&params, &sector, Method::Dense, false).is_none());
    }

    #[test]
    fn policies() {
        let dir = tempfile::tempdir().unwrap();
        let params = ModelParams::new(0.0, 1.0, Boundary::Pbc);
        let sector = Sector::new(3, 3, Boundary::Pbc, Some(0), Some(Parity::Even)).unwrap();
        let s = solve(&sector, &params, false);
        let refresh = Cache::open(dir.path(), CachePolicy::Refresh).unwrap();
        refresh.store_spectrum(&sector, &s).unwrap();
        assert!(refresh.load_spectrum(&params, &sector, Method::Dense, false).is_none());
        let usable = Cache::open(dir.path(), CachePolicy::Use).unwrap();
        assert!(usable.load_spectrum(&params, &sector, Method::Dense, false).is_some());
        let off = Cache::disabled();
        off.store_spectrum(&sector, &s).unwrap();
        assert!(off.load_spectrum(&params, &sector, Method::Dense, false).is_none());
    }

    #[test]
    fn directory_resolution() {
        let out = Path::new("/tmp/out");
        assert_eq!(resolve_dir(Some(Path::new("/x")), out), PathBuf::from("/x"));
    }
}
