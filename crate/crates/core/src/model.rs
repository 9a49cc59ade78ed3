//! The rotating-wave JCH Hamiltonian
//!
//! ```text
//! H = Σ_i [Δ σ+_i σ-_i + g (a_i σ+_i + a†_i σ-_i)] - t Σ_<ij> (a†_i a_j + a_i a†_j)
//!   = H_int + H_tun
//! ```
//!
//! assembled directly in a sector basis. Each sector column is obtained by
//! acting with `H` on the orbit representative and folding every product
//! state reached back onto its own representative with the phase
//! `χ(g_s) sqrt(|Stab(r')| / |Stab(r)|)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Boundary, KeyCodec, Sector, SymBasis};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Atom-photon detuning `Δ/g`.
    pub delta: f64,
    /// Coupling `g`; the unit of energy, 1 unless deliberately changed.
    #[serde(default = "unit_coupling")]
    pub coupling: f64,
    /// Photon tunneling `t/g`.
    pub hopping: f64,
    pub boundary: Boundary,
}

fn unit_coupling() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(delta: f64, hopping: f64, boundary: Boundary) -> Self {
        Self {
            delta,
            coupling: 1.0,
            hopping,
            boundary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling g must be positive, got {}", self.coupling)));
        }
        if !(self.hopping >= 0.0 && self.hopping.is_finite()) {
            return Err(Error::InvalidParameter(format!("hopping t must be >= 0, got {}", self.hopping)));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("detuning must be finite, got {}", self.delta)));
        }
        Ok(())
    }
}

/// Nearest-neighbour bonds, 0-based. PBC adds the `(L, 1)` bond for `L >= 3`;
/// for `L <= 2` it would duplicate an existing bond or hop onto the same site.
pub fn bonds(sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Pbc && sites >= 3 {
        out.push((sites - 1, 0));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Interaction,
    Tunneling,
}

/// Nonzero matrix elements `<s|H|key>` in the product basis.
fn act_on_product(
    codec: &KeyCodec,
    key: u64,
    params: &ModelParams,
    bonds: &[(usize, usize)],
    digits: &mut [u8],
    out: &mut Vec<(u64, f64, Part)>,
) {
    out.clear();
    codec.digits(key, digits);
    let g = params.coupling;
    let mut excited_atoms = 0u32;
    for i in 0..digits.len() {
        let d = digits[i];
        let n = u32::from(d / 2);
        if d % 2 == 1 {
            excited_atoms += 1;
            // a† σ-: |n, e> -> sqrt(n+1) |n+1, g>
            digits[i] = d + 1;
            out.push((codec.from_digits(digits), g * f64::from(n + 1).sqrt(), Part::Interaction));
            digits[i] = d;
        } else if n >= 1 {
            // a σ+: |n, g> -> sqrt(n) |n-1, e>
            digits[i] = d - 1;
            out.push((codec.from_digits(digits), g * f64::from(n).sqrt(), Part::Interaction));
            digits[i] = d;
        }
    }
    if excited_atoms > 0 && params.delta != 0.0 {
        out.push((key, params.delta * f64::from(excited_atoms), Part::Interaction));
    }
    if params.hopping == 0.0 {
        return;
    }
    let t = params.hopping;
    for &(i, j) in bonds {
        let (di, dj) = (digits[i], digits[j]);
        let (ni, nj) = (f64::from(di / 2), f64::from(dj / 2));
        // a†_i a_j
        if dj >= 2 {
            digits[i] = di + 2;
            digits[j] = dj - 2;
            out.push((codec.from_digits(digits), -t * (nj * (ni + 1.0)).sqrt(), Part::Tunneling));
        }
        // a_i a†_j
        if di >= 2 {
            digits[i] = di - 2;
            digits[j] = dj + 2;
            out.push((codec.from_digits(digits), -t * (ni * (nj + 1.0)).sqrt(), Part::Tunneling));
        }
        digits[i] = di;
        digits[j] = dj;
    }
}

/// One Hamiltonian block with separately accessible `H_int` and `H_tun`.
#[derive(Clone, Debug)]
pub struct HamiltonianBlock<T> {
    pub params: ModelParams,
    pub sector: Option<Sector>,
    pub interaction: CsrMatrix<T>,
    pub tunneling: CsrMatrix<T>,
    pub total: CsrMatrix<T>,
}

impl<T: Scalar> HamiltonianBlock<T> {
    pub fn dim(&self) -> usize {
        self.total.dim()
    }
}

/// A block whose scalar type was chosen from the sector's characters.
#[derive(Clone, Debug)]
pub enum Hamiltonian {
    Real(HamiltonianBlock<f64>),
    Complex(HamiltonianBlock<Complex64>),
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        match self {
            Hamiltonian::Real(b) => b.dim(),
            Hamiltonian::Complex(b) => b.dim(),
        }
    }
}

/// Assembles `H` in `basis`, real whenever all sector characters are real.
pub fn build_hamiltonian(params: &ModelParams, basis: &SymBasis) -> Result<Hamiltonian> {
    if basis.is_real() {
        build_block::<f64>(params, basis).map(Hamiltonian::Real)
    } else {
        build_block::<Complex64>(params, basis).map(Hamiltonian::Complex)
    }
}

/// Assembles `H` with an explicit scalar type. Real scalars require a basis
/// with real characters.
pub fn build_block<T: Scalar>(params: &ModelParams, basis: &SymBasis) -> Result<HamiltonianBlock<T>> {
    params.validate()?;
    if let Some(sector) = basis.sector() {
        if sector.boundary != params.boundary {
            return Err(Error::InvalidParameter(format!(
                "basis built for {} but parameters ask for {}",
                sector.boundary, params.boundary
            )));
        }
    }
    if !T::IS_COMPLEX && !basis.is_real() {
        return Err(Error::InvalidParameter(
            "complex momentum sector requested with a real scalar type".into(),
        ));
    }
    let bonds = bonds(basis.sites(), params.boundary);
    let dim = basis.dimension();
    let codec = *basis.codec();
    let stabs = basis.stabilizers();

    let rows: Vec<(Vec<(usize, T)>, Vec<(usize, T)>)> = (0..dim)
        .into_par_iter()
        .with_min_len(256)
        .map_init(
            || (vec![0u8; basis.sites()], Vec::with_capacity(4 * basis.sites())),
            |(digits, scratch), col| {
                let key = basis.representatives()[col];
                act_on_product(&codec, key, params, &bonds, digits, scratch);
                let s_col = f64::from(stabs[col]);
                let mut int = Vec::new();
                let mut tun = Vec::new();
                for &(target, amp, part) in scratch.iter() {
                    let Some((row, chi)) = basis.locate(target) else {
                        continue;
                    };
                    let factor = (f64::from(stabs[row]) / s_col).sqrt();
                    let value = T::from_complex(chi * (amp * factor));
                    // this is H[row, col]; Hermiticity gives row `col` as its conjugate
                    let entry = (row, value.conj());
                    match part {
                        Part::Interaction => int.push(entry),
                        Part::Tunneling => tun.push(entry),
                    }
                }
                (int, tun)
            },
        )
        .collect();

    let (int_rows, tun_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let interaction = CsrMatrix::from_rows(dim, int_rows);
    let tunneling = CsrMatrix::from_rows(dim, tun_rows);
    let total = interaction.add(&tunneling);
    Ok(HamiltonianBlock {
        params: *params,
        sector: basis.sector().copied(),
        interaction,
        tunneling,
        total,
    })
}

/// Single-site dressed energies `(E+, E-) = ((Δ + χ_n)/2, (Δ - χ_n)/2)` with
/// `χ_n = sqrt(4 g^2 n + Δ^2)`. At `n = 0` only the bare vacuum exists and
/// both entries are 0.
pub fn dressed_energies(n: i64, delta: f64, coupling: f64) -> Result<(f64, f64)> {
    if n < 0 {
        return Err(Error::InvalidParameter(format!("excitation number must be >= 0, got {n}")));
    }
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let chi = (4.0 * coupling * coupling * n as f64 + delta * delta).sqrt();
    Ok(((delta + chi) / 2.0, (delta - chi) / 2.0))
}

/// Sign of the chiral operator `Γ` on a product state: `(-1)^(photons on
/// even sites) * (-1)^(excited atoms on odd sites)`, sites counted from 1.
pub fn chiral_sign(codec: &KeyCodec, key: u64) -> f64 {
    let mut digits = vec![0u8; codec.sites()];
    codec.digits(key, &mut digits);
    let mut parity = 0u32;
    for (i, &d) in digits.iter().enumerate() {
        let site = i + 1;
        if site % 2 == 0 {
            parity += u32::from(d / 2);
        } else {
            parity += u32::from(d % 2);
        }
    }
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Diagonal of `Γ` in a sector basis. Fails when `Γ` does not map the
/// sector onto itself (its sign varies along an orbit).
pub fn chiral_diagonal(basis: &SymBasis) -> Result<Vec<f64>> {
    let codec = basis.codec();
    basis
        .representatives()
        .iter()
        .map(|&rep| {
            let sign = chiral_sign(codec, rep);
            let mut x = rep;
            let mut r = codec.reflect(rep);
            for _ in 0..codec.sites() {
                let consistent = chiral_sign(codec, x) == sign
                    && (!has_reflection(basis) || chiral_sign(codec, r) == sign);
                if !consistent {
                    return Err(Error::InvalidSector(
                        "chiral operator does not preserve this sector".into(),
                    ));
                }
                if !has_translation(basis) {
                    break;
                }
                x = codec.translate(x);
                r = codec.translate(r);
            }
            Ok(sign)
        })
        .collect()
}

fn has_translation(basis: &SymBasis) -> bool {
    basis.group().iter().any(|g| g.shift != 0)
}

fn has_reflection(basis: &SymBasis) -> bool {
    basis.group().iter().any(|g| g.reflect)
}

/// `Γ ψ` for a state given in `basis`.
pub fn apply_chiral<T: Scalar>(state: &[T], basis: &SymBasis) -> Result<Vec<T>> {
    if state.len() != basis.dimension() {
        return Err(Error::DimensionMismatch {
            expected: basis.dimension(),
            actual: state.len(),
        });
    }
    let signs = chiral_diagonal(basis)?;
    Ok(state.iter().zip(&signs).map(|(&v, &s)| v.scale(s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_sector_basis, Atom, BasisState, Parity, SiteState};

    fn real(h: Hamiltonian) -> HamiltonianBlock<f64> {
        match h {
            Hamiltonian::Real(b) => b,
            Hamiltonian::Complex(_) => panic!("expected a real block"),
        }
    }

    #[test]
    fn single_site_resonance() {
        let basis = SymBasis::unreduced(1, 1).unwrap();
        let h = real(build_hamiltonian(&ModelParams::new(0.0, 0.0, Boundary::Hwbc), &basis).unwrap());
        // keys: |0,e> then |1,g>
        let dense = h.total.to_dense();
        assert_eq!(dense[(0, 0)], 0.0);
        assert_eq!(dense[(1, 1)], 0.0);
        assert_eq!(dense[(0, 1)], 1.0);
        assert_eq!(dense[(1, 0)], 1.0);
    }

    #[test]
    fn dressed_energy_examples() {
        assert_eq!(dressed_energies(1, 0.0, 1.0).unwrap(), (1.0, -1.0));
        let (p, m) = dressed_energies(2, 0.0, 1.0).unwrap();
        assert!((p - 2f64.sqrt()).abs() < 1e-15 && (m + 2f64.sqrt()).abs() < 1e-15);
        let (p, m) = dressed_energies(1, 3.0, 1.0).unwrap();
        assert!((p - (3.0 + 13f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((m - (3.0 - 13f64.sqrt()) / 2.0).abs() < 1e-15);
        assert_eq!(dressed_energies(0, 3.0, 1.0).unwrap(), (0.0, 0.0));
        assert!(dressed_energies(-1, 0.0, 1.0).is_err());
    }

    #[test]
    fn hermitian_and_split_exactly() {
        for sector in Sector::all(5, 5, Boundary::Pbc).unwrap() {
            let basis = build_sector_basis(&sector).unwrap();
            let params = ModelParams::new(0.7, 0.45, Boundary::Pbc);
            match build_hamiltonian(&params, &basis).unwrap() {
                Hamiltonian::Real(b) => check_block(&b),
                Hamiltonian::Complex(b) => check_block(&b),
            }
        }
    }

    fn check_block<T: Scalar>(b: &HamiltonianBlock<T>) {
        let scale = b.total.max_abs();
        assert!(b.total.hermiticity_defect() <= 1e-12 * scale);
        let sum = b.interaction.add(&b.tunneling);
        assert_eq!(sum, b.total);
    }

    #[test]
    fn boundary_mismatch_rejected() {
        let sector = Sector::new(4, 4, Boundary::Hwbc, None, Some(Parity::Odd)).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        assert!(build_hamiltonian(&ModelParams::new(0.0, 1.0, Boundary::Pbc), &basis).is_err());
        assert!(build_hamiltonian(&ModelParams::new(0.0, -1.0, Boundary::Hwbc), &basis).is_err());
    }

    #[test]
    fn hwbc_drops_wrap_bond() {
        assert_eq!(bonds(4, Boundary::Hwbc), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(bonds(4, Boundary::Pbc), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(bonds(2, Boundary::Pbc), vec![(0, 1)]);
    }

    #[test]
    fn chiral_sign_example() {
        // sites 1,2 = (n=1,g),(n=0,e): no photons on even site, no excited atom on odd site
        let codec = KeyCodec::new(2, 2).unwrap();
        let s = BasisState::new(vec![SiteState::new(1, Atom::Ground), SiteState::new(0, Atom::Excited)]);
        assert_eq!(chiral_sign(&codec, codec.encode(&s)), 1.0);
    }

    #[test]
    fn chiral_is_an_involution_and_anticommutes_at_resonance() {
        let sector = Sector::new(4, 4, Boundary::Pbc, Some(0), Some(Parity::Odd)).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        let v: Vec<f64> = (0..basis.dimension()).map(|i| (i as f64 * 0.37).sin()).collect();
        let twice = apply_chiral(&apply_chiral(&v, &basis).unwrap(), &basis).unwrap();
        assert_eq!(twice, v);

        let h = real(build_hamiltonian(&ModelParams::new(0.0, 0.8, Boundary::Pbc), &basis).unwrap());
        let gamma = chiral_diagonal(&basis).unwrap();
        for i in 0..basis.dimension() {
            for (j, val) in h.total.row(i) {
                // Γ H Γ = -H
                assert!((gamma[i] * val * gamma[j] + val).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chiral_rejects_odd_pbc_sectors() {
        let sector = Sector::new(3, 3, Boundary::Pbc, Some(0), None).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        assert!(chiral_diagonal(&basis).is_err());
    }
}
