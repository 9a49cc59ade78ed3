//! Product and symmetry-adapted bases of the JCH chain at fixed excitation
//! number.
//!
//! A product state `|n_1 a_1, ..., n_L a_L>` is encoded as a mixed-radix
//! integer key with digit `2 n_i + a_i` per site, site 1 most significant, so
//! lexicographic order on site tuples is numeric order on keys. Photon counts
//! never exceed `N`, which makes the radix `2 (N + 1)` exact.
//!
//! Symmetry sectors use orbit representatives: each sector vector is
//! `|r; Q, p> = Σ_g χ(g)* g|r> / sqrt(|G| |Stab(r)|)` where `r` is the
//! smallest key in its orbit. Orbits whose stabilizer carries a nontrivial
//! character project to zero and are dropped.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on the number of enumerated product states.
pub const MAX_PRODUCT_STATES: usize = 1 << 26;

const CHARACTER_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Pbc,
    Hwbc,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Pbc => "pbc",
            Boundary::Hwbc => "hwbc",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbc" | "periodic" => Ok(Boundary::Pbc),
            "hwbc" | "obc" | "open" | "hard-wall" => Ok(Boundary::Hwbc),
            other => Err(Error::InvalidParameter(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            other => Err(Error::InvalidSector(format!("parity must be +1 or -1, got {other}"))),
        }
    }
}

impl Serialize for Parity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign())
    }
}

impl<'de> Deserialize<'de> for Parity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Parity::from_sign(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Ground,
    Excited,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteState {
    pub photons: u32,
    pub atom: Atom,
}

impl SiteState {
    pub fn new(photons: u32, atom: Atom) -> Self {
        Self { photons, atom }
    }

    pub fn excitations(&self) -> u32 {
        self.photons + u32::from(self.atom == Atom::Excited)
    }

    fn digit(&self) -> u64 {
        2 * u64::from(self.photons) + u64::from(self.atom == Atom::Excited)
    }

    fn from_digit(d: u64) -> Self {
        let atom = if d % 2 == 1 { Atom::Excited } else { Atom::Ground };
        Self {
            photons: (d / 2) as u32,
            atom,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    pub sites: Vec<SiteState>,
}

impl BasisState {
    pub fn new(sites: Vec<SiteState>) -> Self {
        Self { sites }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn excitations(&self) -> u32 {
        self.sites.iter().map(SiteState::excitations).sum()
    }
}

/// Cyclic shift by one site: `(A, B, C) -> (C, A, B)`.
pub fn apply_translation(state: &BasisState) -> BasisState {
    let mut sites = state.sites.clone();
    sites.rotate_right(1);
    BasisState { sites }
}

/// Site-order reversal: `(A, B, C) -> (C, B, A)`.
pub fn apply_reflection(state: &BasisState) -> BasisState {
    let mut sites = state.sites.clone();
    sites.reverse();
    BasisState { sites }
}

/// Mixed-radix encoding of product states for a fixed `(L, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyCodec {
    sites: usize,
    radix: u64,
    /// `radix^(L-1)`
    top: u64,
}

impl KeyCodec {
    pub fn new(sites: usize, excitations: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidParameter("chain needs at least one site".into()));
        }
        let radix = 2 * (excitations as u64 + 1);
        let mut top: u64 = 1;
        for _ in 1..sites {
            top = top.checked_mul(radix).ok_or(Error::Overflow("state key"))?;
        }
        // the full key range radix^L must fit as well
        top.checked_mul(radix).ok_or(Error::Overflow("state key"))?;
        Ok(Self { sites, radix, top })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn encode(&self, state: &BasisState) -> u64 {
        debug_assert_eq!(state.len(), self.sites);
        state
            .sites
            .iter()
            .fold(0, |key, s| key * self.radix + s.digit())
    }

    pub fn decode(&self, key: u64) -> BasisState {
        let mut buf = vec![0u8; self.sites];
        self.digits(key, &mut buf);
        BasisState {
            sites: buf.iter().map(|&d| SiteState::from_digit(u64::from(d))).collect(),
        }
    }

    /// Writes the per-site digits `2 n + a`, site 1 first.
    #[inline]
    pub fn digits(&self, mut key: u64, buf: &mut [u8]) {
        for slot in buf.iter_mut().rev() {
            *slot = (key % self.radix) as u8;
            key /= self.radix;
        }
    }

    #[inline]
    pub fn from_digits(&self, buf: &[u8]) -> u64 {
        buf.iter().fold(0, |key, &d| key * self.radix + u64::from(d))
    }

    #[inline]
    pub fn translate(&self, key: u64) -> u64 {
        (key % self.radix) * self.top + key / self.radix
    }

    #[inline]
    pub fn reflect(&self, mut key: u64) -> u64 {
        let mut out = 0;
        for _ in 0..self.sites {
            out = out * self.radix + key % self.radix;
            key /= self.radix;
        }
        out
    }
}

/// `Σ_{s=0}^{min(N,L)} C(L,s) C(N-s+L-1, L-1)`: choose which atoms are
/// excited, distribute the remaining photons.
pub fn full_dimension(sites: usize, excitations: usize) -> Result<u64> {
    if sites == 0 {
        return Err(Error::InvalidParameter("chain needs at least one site".into()));
    }
    let mut total: u128 = 0;
    for s in 0..=sites.min(excitations) {
        let term = binomial(sites as u128, s as u128)?
            .checked_mul(binomial((excitations - s + sites - 1) as u128, (sites - 1) as u128)?)
            .ok_or(Error::Overflow("full dimension"))?;
        total = total.checked_add(term).ok_or(Error::Overflow("full dimension"))?;
    }
    u64::try_from(total).map_err(|_| Error::Overflow("full dimension"))
}

fn binomial(n: u128, k: u128) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n-i) is divisible by (i+1)
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i + 1);
    }
    Ok(acc)
}

/// All product-state keys with `Σ (n_i + a_i) = N`, ascending.
pub fn enumerate_keys(codec: &KeyCodec, excitations: usize, limit: usize) -> Result<Vec<u64>> {
    let dim = full_dimension(codec.sites, excitations)?;
    if dim > limit as u64 {
        return Err(Error::Capacity {
            what: "product basis",
            required: u128::from(dim),
            limit: limit as u128,
        });
    }
    let mut keys = Vec::with_capacity(dim as usize);
    let mut digits = vec![0u8; codec.sites];
    fill_keys(codec, 0, excitations, &mut digits, &mut keys);
    debug_assert_eq!(keys.len() as u64, dim);
    Ok(keys)
}

fn fill_keys(codec: &KeyCodec, site: usize, remaining: usize, digits: &mut [u8], out: &mut Vec<u64>) {
    if site == digits.len() {
        if remaining == 0 {
            out.push(codec.from_digits(digits));
        }
        return;
    }
    // the last site must absorb everything that is left
    if site + 1 == digits.len() {
        // (n-1, e) sorts before (n, g)
        if remaining > 0 {
            digits[site] = (2 * remaining - 1) as u8;
            out.push(codec.from_digits(digits));
        }
        digits[site] = (2 * remaining) as u8;
        out.push(codec.from_digits(digits));
        return;
    }
    for d in 0..codec.radix as usize {
        let used = d / 2 + d % 2;
        if used > remaining {
            break;
        }
        digits[site] = d as u8;
        fill_keys(codec, site + 1, remaining - used, digits, out);
    }
}

/// Every product state at fixed `(L, N)` in ascending key order.
pub fn enumerate_basis(sites: usize, excitations: usize) -> Result<Vec<BasisState>> {
    enumerate_basis_with_limit(sites, excitations, MAX_PRODUCT_STATES)
}

pub fn enumerate_basis_with_limit(sites: usize, excitations: usize, limit: usize) -> Result<Vec<BasisState>> {
    let codec = KeyCodec::new(sites, excitations)?;
    Ok(enumerate_keys(&codec, excitations, limit)?
        .into_iter()
        .map(|k| codec.decode(k))
        .collect())
}

/// Conserved-quantity labels of one Hamiltonian block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sector {
    pub sites: usize,
    pub excitations: usize,
    pub boundary: Boundary,
    /// Momentum index `Q` in `[0, L)`; present iff PBC.
    pub momentum: Option<usize>,
    pub parity: Option<Parity>,
}

impl Sector {
    pub fn new(
        sites: usize,
        excitations: usize,
        boundary: Boundary,
        momentum: Option<usize>,
        parity: Option<Parity>,
    ) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidSector("chain needs at least one site".into()));
        }
        match (boundary, momentum) {
            (Boundary::Hwbc, Some(q)) => {
                return Err(Error::InvalidSector(format!(
                    "momentum Q={q} is not a good quantum number under HWBC"
                )))
            }
            (Boundary::Pbc, None) => {
                return Err(Error::InvalidSector("PBC sectors need a momentum Q".into()))
            }
            (Boundary::Pbc, Some(q)) if q >= sites => {
                return Err(Error::InvalidSector(format!("momentum Q={q} outside [0, {sites})")))
            }
            (Boundary::Pbc, Some(q)) if parity.is_some() && (2 * q) % sites != 0 => {
                return Err(Error::InvalidSector(format!(
                    "parity only commutes with momentum for Q=0 or Q=L/2, got Q={q}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            sites,
            excitations,
            boundary,
            momentum,
            parity,
        })
    }

    pub fn filling(&self) -> f64 {
        self.excitations as f64 / self.sites as f64
    }

    /// A complete set of sectors for `(L, N, boundary)`: parity is resolved
    /// wherever it commutes with momentum.
    pub fn all(sites: usize, excitations: usize, boundary: Boundary) -> Result<Vec<Sector>> {
        let mut out = Vec::new();
        match boundary {
            Boundary::Pbc => {
                for q in 0..sites {
                    if (2 * q) % sites == 0 {
                        for p in [Parity::Even, Parity::Odd] {
                            out.push(Sector::new(sites, excitations, boundary, Some(q), Some(p))?);
                        }
                    } else {
                        out.push(Sector::new(sites, excitations, boundary, Some(q), None)?);
                    }
                }
            }
            Boundary::Hwbc => {
                for p in [Parity::Even, Parity::Odd] {
                    out.push(Sector::new(sites, excitations, boundary, None, Some(p))?);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={} N={} {}", self.sites, self.excitations, self.boundary)?;
        if let Some(q) = self.momentum {
            write!(f, " Q={q}")?;
        }
        if let Some(p) = self.parity {
            write!(f, " p={:+}", p.sign())?;
        }
        Ok(())
    }
}

/// Element `T^shift P^reflect` of the dihedral (or cyclic, or parity) group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement {
    pub shift: usize,
    pub reflect: bool,
    pub character: Complex64,
}

fn momentum_character(q: usize, shift: usize, sites: usize) -> Complex64 {
    let m = (q * shift) % sites;
    // exact values where the phase is real keeps Q=0 and Q=L/2 blocks real
    if m == 0 {
        Complex64::new(1.0, 0.0)
    } else if 2 * m == sites {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / sites as f64)
    }
}

/// Orthonormal symmetry-adapted basis of one sector (or of the unreduced
/// product space when `sector` is `None`).
#[derive(Clone, Debug)]
pub struct SymBasis {
    sector: Option<Sector>,
    sites: usize,
    excitations: usize,
    codec: KeyCodec,
    shifts: usize,
    branches: usize,
    group: Vec<GroupElement>,
    representatives: Vec<u64>,
    stabilizers: Vec<u32>,
}

impl SymBasis {
    pub fn sector(&self) -> Option<&Sector> {
        self.sector.as_ref()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn excitations(&self) -> usize {
        self.excitations
    }

    pub fn codec(&self) -> &KeyCodec {
        &self.codec
    }

    pub fn dimension(&self) -> usize {
        self.representatives.len()
    }

    pub fn group(&self) -> &[GroupElement] {
        &self.group
    }

    pub fn representatives(&self) -> &[u64] {
        &self.representatives
    }

    pub fn stabilizers(&self) -> &[u32] {
        &self.stabilizers
    }

    /// `sqrt(|G| |Stab(r)|)`, the norm of the unnormalized projection of `r`.
    pub fn normalizations(&self) -> Vec<f64> {
        let g = self.group.len() as f64;
        self.stabilizers.iter().map(|&s| (g * f64::from(s)).sqrt()).collect()
    }

    pub fn orbit_size(&self, index: usize) -> usize {
        self.group.len() / self.stabilizers[index] as usize
    }

    /// Whether every group character is real, so the block is real symmetric.
    pub fn is_real(&self) -> bool {
        self.group.iter().all(|g| g.character.im == 0.0)
    }

    pub fn state(&self, index: usize) -> BasisState {
        self.codec.decode(self.representatives[index])
    }

    pub fn index_of(&self, key: u64) -> Option<usize> {
        self.representatives.binary_search(&key).ok()
    }

    /// Smallest key in the orbit of `key` and the index of a group element
    /// mapping `key` onto it.
    pub fn canonical(&self, key: u64) -> (u64, usize) {
        let mut best = (key, 0);
        for branch in 0..self.branches {
            let mut x = if branch == 1 { self.codec.reflect(key) } else { key };
            for shift in 0..self.shifts {
                if x < best.0 {
                    best = (x, branch * self.shifts + shift);
                }
                x = self.codec.translate(x);
            }
        }
        best
    }

    /// Sector index of the orbit of a product state together with
    /// `χ(g_s)` for the group element `g_s` taking the representative to it.
    pub fn locate(&self, key: u64) -> Option<(usize, Complex64)> {
        let (rep, elem) = self.canonical(key);
        let idx = self.index_of(rep)?;
        Some((idx, self.group[elem].character.conj()))
    }

    /// Expands sector coefficients into the full product basis, returning
    /// the ascending product keys and the corresponding amplitudes.
    pub fn expand_to_product<T: Scalar>(&self, coeffs: &[T]) -> Result<(Vec<u64>, Vec<Complex64>)> {
        if coeffs.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: coeffs.len(),
            });
        }
        let keys = enumerate_keys(&self.codec, self.excitations, MAX_PRODUCT_STATES)?;
        let group_order = self.group.len() as f64;
        let amps = keys
            .iter()
            .map(|&key| {
                let (rep, elem) = self.canonical(key);
                match self.index_of(rep) {
                    Some(idx) => {
                        let weight = (f64::from(self.stabilizers[idx]) / group_order).sqrt();
                        coeffs[idx].to_complex() * self.group[elem].character * weight
                    }
                    None => Complex64::new(0.0, 0.0),
                }
            })
            .collect();
        Ok((keys, amps))
    }

    /// `|ψ_n|^2` over the product states of every sector orbit with nonzero
    /// weight. Zero-weight product states are omitted.
    pub fn product_intensities<T: Scalar>(&self, coeffs: &[T]) -> Result<Vec<f64>> {
        if coeffs.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: coeffs.len(),
            });
        }
        let mut out = Vec::new();
        for (idx, c) in coeffs.iter().enumerate() {
            let orbit = self.orbit_size(idx);
            let w = c.abs_sqr() / orbit as f64;
            out.extend(std::iter::repeat_n(w, orbit));
        }
        Ok(out)
    }

    /// The full product basis without symmetry reduction.
    pub fn unreduced(sites: usize, excitations: usize) -> Result<Self> {
        let codec = KeyCodec::new(sites, excitations)?;
        let representatives = enumerate_keys(&codec, excitations, MAX_PRODUCT_STATES)?;
        let stabilizers = vec![1; representatives.len()];
        Ok(Self {
            sector: None,
            sites,
            excitations,
            codec,
            shifts: 1,
            branches: 1,
            group: vec![GroupElement {
                shift: 0,
                reflect: false,
                character: Complex64::new(1.0, 0.0),
            }],
            representatives,
            stabilizers,
        })
    }

    /// Reassembles a basis from cached representatives, re-deriving the group.
    pub fn from_parts(sector: Sector, representatives: Vec<u64>, stabilizers: Vec<u32>) -> Result<Self> {
        if representatives.len() != stabilizers.len() {
            return Err(Error::LengthMismatch {
                left: representatives.len(),
                right: stabilizers.len(),
            });
        }
        let mut basis = Self::skeleton(sector)?;
        basis.representatives = representatives;
        basis.stabilizers = stabilizers;
        Ok(basis)
    }

    fn skeleton(sector: Sector) -> Result<Self> {
        let sites = sector.sites;
        let codec = KeyCodec::new(sites, sector.excitations)?;
        let (shifts, branches) = match (sector.boundary, sector.parity) {
            (Boundary::Pbc, None) => (sites, 1),
            (Boundary::Pbc, Some(_)) => (sites, 2),
            (Boundary::Hwbc, None) => (1, 1),
            (Boundary::Hwbc, Some(_)) => (1, 2),
        };
        let q = sector.momentum.unwrap_or(0);
        let mut group = Vec::with_capacity(shifts * branches);
        for branch in 0..branches {
            for shift in 0..shifts {
                let mut character = momentum_character(q, shift, sites);
                if branch == 1 {
                    character *= f64::from(sector.parity.map_or(1, Parity::sign));
                }
                group.push(GroupElement {
                    shift,
                    reflect: branch == 1,
                    character,
                });
            }
        }
        Ok(Self {
            sector: Some(sector),
            sites,
            excitations: sector.excitations,
            codec,
            shifts,
            branches,
            group,
            representatives: Vec::new(),
            stabilizers: Vec::new(),
        })
    }

    /// Stabilizer order of `key`, or `None` if its stabilizer carries a
    /// nontrivial character (the projected vector vanishes).
    fn compatible_stabilizer(&self, key: u64) -> Option<u32> {
        let mut count = 0;
        for branch in 0..self.branches {
            let mut x = if branch == 1 { self.codec.reflect(key) } else { key };
            for shift in 0..self.shifts {
                if x == key {
                    let chi = self.group[branch * self.shifts + shift].character;
                    if (chi - 1.0).norm() > CHARACTER_TOL {
                        return None;
                    }
                    count += 1;
                }
                x = self.codec.translate(x);
            }
        }
        Some(count)
    }

    fn is_orbit_minimum(&self, key: u64) -> bool {
        for branch in 0..self.branches {
            let mut x = if branch == 1 { self.codec.reflect(key) } else { key };
            for _ in 0..self.shifts {
                if x < key {
                    return false;
                }
                x = self.codec.translate(x);
            }
        }
        true
    }
}

/// Builds the orthonormal symmetry-adapted basis of one sector.
pub fn build_sector_basis(sector: &Sector) -> Result<SymBasis> {
    build_sector_basis_with_limit(sector, MAX_PRODUCT_STATES)
}

pub fn build_sector_basis_with_limit(sector: &Sector, limit: usize) -> Result<SymBasis> {
    // re-validate in case the labels were assembled by hand
    let sector = Sector::new(
        sector.sites,
        sector.excitations,
        sector.boundary,
        sector.momentum,
        sector.parity,
    )?;
    let mut basis = SymBasis::skeleton(sector)?;
    let keys = enumerate_keys(&basis.codec, sector.excitations, limit)?;
    let mut reps = Vec::new();
    let mut stabs = Vec::new();
    for key in keys {
        if !basis.is_orbit_minimum(key) {
            continue;
        }
        if let Some(stab) = basis.compatible_stabilizer(key) {
            reps.push(key);
            stabs.push(stab);
        }
    }
    basis.representatives = reps;
    basis.stabilizers = stabs;
    Ok(basis)
}

/// Dimension of one sector.
pub fn sector_dimension(sector: &Sector) -> Result<usize> {
    Ok(build_sector_basis(sector)?.dimension())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(n: u32, e: bool) -> SiteState {
        SiteState::new(n, if e { Atom::Excited } else { Atom::Ground })
    }

    /// Independent count: brute force over all digit tuples.
    fn brute_force_count(sites: usize, n: usize) -> usize {
        let radix = 2 * (n + 1);
        let total = radix.pow(sites as u32);
        (0..total)
            .filter(|&mut_idx| {
                let mut idx = mut_idx;
                let mut sum = 0;
                for _ in 0..sites {
                    let d = idx % radix;
                    sum += d / 2 + d % 2;
                    idx /= radix;
                }
                sum == n
            })
            .count()
    }

    #[test]
    fn single_site_one_excitation() {
        let states = enumerate_basis(1, 1).unwrap();
        assert_eq!(states, vec![BasisState::new(vec![st(0, true)]), BasisState::new(vec![st(1, false)])]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (l, n) in [(1, 1), (2, 2), (3, 3), (4, 2), (3, 5), (5, 5)] {
            let expected = brute_force_count(l, n);
            assert_eq!(enumerate_basis(l, n).unwrap().len(), expected, "L={l} N={n}");
            assert_eq!(full_dimension(l, n).unwrap() as usize, expected, "L={l} N={n}");
        }
        assert_eq!(full_dimension(2, 2).unwrap(), 8);
    }

    #[test]
    fn large_dimensions() {
        assert_eq!(enumerate_basis(8, 8).unwrap().len(), 157_184);
        assert_eq!(full_dimension(8, 8).unwrap(), 157_184);
        // enumeration oracle for (9, 9)
        let codec = KeyCodec::new(9, 9).unwrap();
        assert_eq!(enumerate_keys(&codec, 9, MAX_PRODUCT_STATES).unwrap().len(), 864_146);
        assert_eq!(full_dimension(9, 9).unwrap(), 864_146);
    }

    #[test]
    fn capacity_and_overflow_errors() {
        assert!(matches!(enumerate_basis_with_limit(6, 6, 100), Err(Error::Capacity { .. })));
        assert!(matches!(KeyCodec::new(40, 40), Err(Error::Overflow(_))));
        assert!(matches!(full_dimension(200, 200), Err(Error::Overflow(_))));
    }

    #[test]
    fn keys_strictly_increase() {
        let codec = KeyCodec::new(4, 4).unwrap();
        let keys = enumerate_keys(&codec, 4, MAX_PRODUCT_STATES).unwrap();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        for &k in &keys {
            assert_eq!(codec.encode(&codec.decode(k)), k);
        }
    }

    #[test]
    fn translation_and_reflection_examples() {
        let s = BasisState::new(vec![st(0, false), st(1, false), st(2, true)]);
        assert_eq!(apply_translation(&s).sites, vec![st(2, true), st(0, false), st(1, false)]);
        assert_eq!(apply_reflection(&s).sites, vec![st(2, true), st(1, false), st(0, false)]);
        let codec = KeyCodec::new(3, 3).unwrap();
        let k = codec.encode(&s);
        assert_eq!(codec.decode(codec.translate(k)), apply_translation(&s));
        assert_eq!(codec.decode(codec.reflect(k)), apply_reflection(&s));
    }

    #[test]
    fn uniform_state_has_trivial_orbit() {
        let sector = Sector::new(5, 5, Boundary::Pbc, Some(0), None).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        let uniform = BasisState::new(vec![st(1, false); 5]);
        let idx = basis.index_of(basis.codec().encode(&uniform)).unwrap();
        assert_eq!(basis.orbit_size(idx), 1);
    }

    #[test]
    fn published_sector_dimensions() {
        for (l, d) in [(6, 399), (7, 1996), (8, 9581)] {
            let sector = Sector::new(l, l, Boundary::Pbc, Some(0), Some(Parity::Odd)).unwrap();
            assert_eq!(sector_dimension(&sector).unwrap(), d, "L={l}");
        }
    }

    #[test]
    fn sector_completeness() {
        for boundary in [Boundary::Pbc, Boundary::Hwbc] {
            for l in 1..=6 {
                for n in 0..=l {
                    let total: usize = Sector::all(l, n, boundary)
                        .unwrap()
                        .iter()
                        .map(|s| sector_dimension(s).unwrap())
                        .sum();
                    assert_eq!(total as u64, full_dimension(l, n).unwrap(), "{boundary} L={l} N={n}");
                }
            }
        }
        let dims: usize = Sector::all(2, 2, Boundary::Pbc)
            .unwrap()
            .iter()
            .map(|s| sector_dimension(s).unwrap())
            .sum();
        assert_eq!(dims, 8);
    }

    #[test]
    fn invalid_sectors_rejected() {
        assert!(Sector::new(4, 4, Boundary::Hwbc, Some(0), None).is_err());
        assert!(Sector::new(4, 4, Boundary::Pbc, None, None).is_err());
        assert!(Sector::new(4, 4, Boundary::Pbc, Some(4), None).is_err());
        assert!(Sector::new(4, 4, Boundary::Pbc, Some(1), Some(Parity::Even)).is_err());
        assert!(Sector::new(4, 4, Boundary::Pbc, Some(2), Some(Parity::Even)).is_ok());
    }

    #[test]
    fn symmetry_adapted_vectors_are_orthonormal() {
        for sector in Sector::all(4, 4, Boundary::Pbc)
            .unwrap()
            .into_iter()
            .chain(Sector::all(4, 3, Boundary::Hwbc).unwrap())
        {
            let basis = build_sector_basis(&sector).unwrap();
            let d = basis.dimension();
            let columns: Vec<Vec<Complex64>> = (0..d)
                .map(|i| {
                    let mut e = vec![Complex64::new(0.0, 0.0); d];
                    e[i] = Complex64::new(1.0, 0.0);
                    basis.expand_to_product(&e).unwrap().1
                })
                .collect();
            for i in 0..d {
                for j in 0..d {
                    let ip: Complex64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a.conj() * b).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - expect).norm() < 1e-12, "{sector}: <{i}|{j}> = {ip}");
                }
            }
        }
    }

    #[test]
    fn product_intensities_match_expansion() {
        let sector = Sector::new(4, 4, Boundary::Pbc, Some(1), None).unwrap();
        let basis = build_sector_basis(&sector).unwrap();
        let d = basis.dimension();
        let coeffs: Vec<Complex64> = (0..d)
            .map(|i| Complex64::new((i as f64 + 1.0).sin(), (i as f64).cos()))
            .collect();
        let norm = crate::scalar::norm(&coeffs);
        let coeffs: Vec<Complex64> = coeffs.iter().map(|c| c / norm).collect();
        let mut a: Vec<f64> = basis.product_intensities(&coeffs).unwrap();
        let mut b: Vec<f64> = basis
            .expand_to_product(&coeffs)
            .unwrap()
            .1
            .iter()
            .map(|z| z.norm_sqr())
            .filter(|&w| w > 0.0)
            .collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    fn arb_state(sites: usize, n: usize) -> impl Strategy<Value = u64> {
        let codec = KeyCodec::new(sites, n).unwrap();
        let keys = enumerate_keys(&codec, n, MAX_PRODUCT_STATES).unwrap();
        (0..keys.len()).prop_map(move |i| keys[i])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn group_laws(key in arb_state(7, 7)) {
            let codec = KeyCodec::new(7, 7).unwrap();
            let mut x = key;
            for _ in 0..7 {
                x = codec.translate(x);
            }
            prop_assert_eq!(x, key);
            prop_assert_eq!(codec.reflect(codec.reflect(key)), key);
            // P T P = T^-1
            let ptp = codec.reflect(codec.translate(codec.reflect(key)));
            prop_assert_eq!(codec.translate(ptp), key);
        }
    }
}
