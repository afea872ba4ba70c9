//! Open-boundary lattices, the Hubbard Hamiltonian pieces `K` and `D`, and
//! their Jordan-Wigner images.
//!
//! Sites are numbered from zero. Spin-up orbitals occupy qubits `0..N` and
//! spin-down orbitals qubits `N..2N`, so same-spin hops never cross the other
//! spin block.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{multiply, Pauli, PauliSum, PauliTerm};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Ladder,
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Chain => f.write_str("chain"),
            LatticeKind::Ladder => f.write_str("ladder"),
        }
    }
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(LatticeKind::Chain),
            "ladder" => Ok(LatticeKind::Ladder),
            other => Err(Error::InvalidLattice(format!("unsupported lattice kind {other:?}"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

/// Open-boundary lattice with a bipartite sublattice coloring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    kind: LatticeKind,
    n_sites: usize,
    edges: Vec<(usize, usize)>,
    sublattice: Vec<i8>,
}

impl Lattice {
    /// Chain: edges `(i, i+1)`. Ladder: two legs of length `n_sites / 2`
    /// joined by rungs, numbered as a snake (leg 0 left to right, then leg 1
    /// right to left) so that the rung at the far end is the edge `(L-1, L)`.
    pub fn build(kind: LatticeKind, n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidLattice(format!("need at least 2 sites, got {n_sites}")));
        }
        let (mut edges, sublattice) = match kind {
            LatticeKind::Chain => {
                let edges = (0..n_sites - 1).map(|i| (i, i + 1)).collect();
                let sub = (0..n_sites).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
                (edges, sub)
            }
            LatticeKind::Ladder => {
                if n_sites % 2 != 0 {
                    return Err(Error::InvalidLattice(format!("ladder needs an even site count, got {n_sites}")));
                }
                let leg = n_sites / 2;
                let site = |l: usize, x: usize| if l == 0 { x } else { n_sites - 1 - x };
                let mut edges = Vec::new();
                let mut sub = vec![0i8; n_sites];
                for x in 0..leg {
                    sub[site(0, x)] = if x % 2 == 0 { 1 } else { -1 };
                    sub[site(1, x)] = if x % 2 == 0 { -1 } else { 1 };
                    if x + 1 < leg {
                        for l in 0..2 {
                            let (a, b) = (site(l, x), site(l, x + 1));
                            edges.push((a.min(b), a.max(b)));
                        }
                    }
                    let (a, b) = (site(0, x), site(1, x));
                    edges.push((a.min(b), a.max(b)));
                }
                (edges, sub)
            }
        };
        edges.sort_unstable();
        let lattice = Self { kind, n_sites, edges, sublattice };
        lattice.validate()?;
        Ok(lattice)
    }

    /// Parses `chain:N` or `ladder:N`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, n) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidLattice(format!("expected kind:N, got {spec:?}")))?;
        let n = n
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidLattice(format!("bad site count in {spec:?}")))?;
        Self::build(kind.trim().parse()?, n)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &self.edges {
            if i >= j || j >= self.n_sites {
                return Err(Error::InvalidLattice(format!("bad edge ({i}, {j})")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidLattice(format!("duplicate edge ({i}, {j})")));
            }
            if self.sublattice[i] == self.sublattice[j] {
                return Err(Error::InvalidLattice(format!("edge ({i}, {j}) joins equal sublattices")));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn sublattice(&self) -> &[i8] {
        &self.sublattice
    }

    pub fn layout(&self) -> QubitLayout {
        QubitLayout::new(self.n_sites)
    }

    /// Single-particle hopping matrix: `-J` on every edge.
    pub fn hopping_matrix(&self, j: f64) -> DMatrix<Complex64> {
        let mut t = DMatrix::zeros(self.n_sites, self.n_sites);
        for &(a, b) in &self.edges {
            t[(a, b)] = Complex64::new(-j, 0.0);
            t[(b, a)] = Complex64::new(-j, 0.0);
        }
        t
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.n_sites)
    }
}

/// Map from `(site, spin)` to qubit index: up block first, then down.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitLayout {
    n_sites: usize,
}

impl QubitLayout {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites
    }

    pub fn qubit(&self, site: usize, spin: Spin) -> usize {
        match spin {
            Spin::Up => site,
            Spin::Down => self.n_sites + site,
        }
    }

    pub fn checked_qubit(&self, site: usize, spin: Spin) -> Result<usize> {
        if site >= self.n_sites {
            return Err(Error::IndexOutOfRange { index: site, limit: self.n_sites });
        }
        Ok(self.qubit(site, spin))
    }

    /// Inverse of [`QubitLayout::qubit`].
    pub fn site_spin(&self, qubit: usize) -> (usize, Spin) {
        if qubit < self.n_sites {
            (qubit, Spin::Up)
        } else {
            (qubit - self.n_sites, Spin::Down)
        }
    }

    /// Splits a full-register basis index into per-spin occupation masks,
    /// each an `N`-bit index with site 0 as the most significant bit.
    #[inline]
    pub fn split(&self, b: u64) -> (u64, u64) {
        let mask = (1u64 << self.n_sites) - 1;
        (b >> self.n_sites, b & mask)
    }

    #[inline]
    pub fn join(&self, up: u64, down: u64) -> u64 {
        (up << self.n_sites) | down
    }
}

/// `K = -(J/2) sum_sigma sum_<ij> (X_i X_j + Y_i Y_j) Z_string` and
/// `D = (1/4) sum_i Z_{i up} Z_{i down}` (without the `U` prefactor).
pub fn hubbard_terms(lattice: &Lattice, j: f64, u: f64) -> Result<(PauliSum, PauliSum)> {
    if !(j > 0.0) {
        return Err(Error::InvalidParameter(format!("hopping J must be positive, got {j}")));
    }
    if !(u >= 0.0) {
        return Err(Error::InvalidParameter(format!("interaction U must be nonnegative, got {u}")));
    }
    Ok((kinetic_term(lattice, j), double_occupancy_term(lattice)))
}

pub fn kinetic_term(lattice: &Lattice, j: f64) -> PauliSum {
    let layout = lattice.layout();
    let n = layout.n_qubits();
    let coeff = Complex64::new(-j / 2.0, 0.0);
    let mut terms = Vec::new();
    for spin in Spin::BOTH {
        for &(a, b) in lattice.edges() {
            let (p, q) = (layout.qubit(a, spin), layout.qubit(b, spin));
            let (p, q) = (p.min(q), p.max(q));
            for op in [Pauli::X, Pauli::Y] {
                let mut ops = vec![Pauli::I; n];
                ops[p] = op;
                ops[q] = op;
                for k in ops.iter_mut().take(q).skip(p + 1) {
                    *k = Pauli::Z;
                }
                terms.push(PauliTerm::new(coeff, ops));
            }
        }
    }
    PauliSum::from_terms(n, terms).expect("terms built at register width")
}

/// `K_sigma` restricted to one spin sector's `N` qubits.
pub fn kinetic_term_sector(lattice: &Lattice, j: f64) -> PauliSum {
    let n = lattice.n_sites();
    let coeff = Complex64::new(-j / 2.0, 0.0);
    let mut terms = Vec::new();
    for &(p, q) in lattice.edges() {
        for op in [Pauli::X, Pauli::Y] {
            let mut ops = vec![Pauli::I; n];
            ops[p] = op;
            ops[q] = op;
            for k in ops.iter_mut().take(q).skip(p + 1) {
                *k = Pauli::Z;
            }
            terms.push(PauliTerm::new(coeff, ops));
        }
    }
    PauliSum::from_terms(n, terms).expect("terms built at sector width")
}

pub fn double_occupancy_term(lattice: &Lattice) -> PauliSum {
    let layout = lattice.layout();
    let n = layout.n_qubits();
    let terms = (0..lattice.n_sites())
        .map(|i| {
            let mut ops = vec![Pauli::I; n];
            ops[layout.qubit(i, Spin::Up)] = Pauli::Z;
            ops[layout.qubit(i, Spin::Down)] = Pauli::Z;
            PauliTerm::new(Complex64::new(0.25, 0.0), ops)
        })
        .collect();
    PauliSum::from_terms(n, terms).expect("terms built at register width")
}

/// `n_{i sigma} = (I - Z_{i sigma}) / 2`.
pub fn number_operator_term(layout: &QubitLayout, site: usize, spin: Spin) -> Result<PauliSum> {
    let q = layout.checked_qubit(site, spin)?;
    let n = layout.n_qubits();
    PauliSum::from_terms(
        n,
        vec![
            PauliTerm::identity(n, Complex64::new(0.5, 0.0)),
            PauliTerm::from_sparse(n, Complex64::new(-0.5, 0.0), &[(q, Pauli::Z)])?,
        ],
    )
}

/// Jordan-Wigner image of `c_q = Z_0 ... Z_{q-1} (X_q + i Y_q) / 2`.
fn annihilator(n_qubits: usize, q: usize) -> [PauliTerm; 2] {
    [(Pauli::X, Complex64::new(0.5, 0.0)), (Pauli::Y, Complex64::new(0.0, 0.5))].map(|(p, c)| {
        let mut ops = vec![Pauli::Z; q];
        ops.push(p);
        ops.resize(n_qubits, Pauli::I);
        PauliTerm::new(c, ops)
    })
}

/// `sum_ij o_ij c_{offset+i}^dagger c_{offset+j}` on an `n_qubits` register.
pub fn one_body_operator(o: &DMatrix<Complex64>, n_qubits: usize, offset: usize) -> Result<PauliSum> {
    if o.nrows() != o.ncols() {
        return Err(Error::DimensionMismatch { expected: o.nrows(), found: o.ncols() });
    }
    if offset + o.nrows() > n_qubits {
        return Err(Error::IndexOutOfRange { index: offset + o.nrows() - 1, limit: n_qubits });
    }
    let mut terms = Vec::new();
    for i in 0..o.nrows() {
        for j in 0..o.ncols() {
            if o[(i, j)].norm() == 0.0 {
                continue;
            }
            for a in annihilator(n_qubits, offset + i) {
                let a_dag = PauliTerm::new(a.coefficient.conj(), a.ops().to_vec());
                for b in annihilator(n_qubits, offset + j) {
                    let mut t = multiply(&a_dag, &b)?;
                    t.coefficient *= o[(i, j)];
                    terms.push(t);
                }
            }
        }
    }
    PauliSum::from_terms(n_qubits, terms)
}

/// JSON description of a Hubbard model used by the command-line tools.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub kind: LatticeKind,
    pub n_sites: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub edges: Vec<(usize, usize)>,
}

impl HamiltonianSpec {
    pub fn new(lattice: &Lattice, j: f64, u: f64) -> Self {
        Self { kind: lattice.kind(), n_sites: lattice.n_sites(), j, u, edges: lattice.edges().to_vec() }
    }

    /// Rebuilds the lattice and checks that the stored edge list matches.
    pub fn lattice(&self) -> Result<Lattice> {
        let lattice = Lattice::build(self.kind, self.n_sites)?;
        if lattice.edges() != self.edges.as_slice() {
            return Err(Error::InvalidLattice("edge list does not match lattice kind".into()));
        }
        Ok(lattice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_chain() {
        let l = Lattice::build(LatticeKind::Chain, 2).unwrap();
        assert_eq!(l.edges(), &[(0, 1)]);
    }

    #[test]
    fn chain_of_four() {
        let l = Lattice::build(LatticeKind::Chain, 4).unwrap();
        assert_eq!(l.edges(), &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(l.sublattice(), &[1, -1, 1, -1]);
    }

    #[test]
    fn ladder_edges_match_grid_enumeration() {
        // Independent enumeration over a 4x2 open grid with (x, leg) coordinates.
        let mut grid_edges = 0;
        for x in 0..4 {
            for leg in 0..2 {
                if x + 1 < 4 {
                    grid_edges += 1;
                }
                if leg == 0 {
                    grid_edges += 1;
                }
            }
        }
        let l = Lattice::build(LatticeKind::Ladder, 8).unwrap();
        assert_eq!(grid_edges, 10);
        assert_eq!(l.edges().len(), grid_edges);
        let rungs = l.edges().iter().filter(|&&(a, b)| a + b == 7).count();
        assert_eq!(rungs, 4);
    }

    #[test]
    fn invalid_lattices() {
        assert!(Lattice::build(LatticeKind::Ladder, 7).is_err());
        assert!(Lattice::build(LatticeKind::Chain, 1).is_err());
        assert!(Lattice::parse("square:4").is_err());
        assert!(Lattice::parse("chain4").is_err());
        assert_eq!(Lattice::parse("ladder:8").unwrap().n_sites(), 8);
    }

    #[test]
    fn two_site_terms() {
        let l = Lattice::build(LatticeKind::Chain, 2).unwrap();
        let (k, d) = hubbard_terms(&l, 1.0, 4.0).unwrap();
        let mut labels: Vec<_> = k.terms().iter().map(|t| (t.label(), t.coefficient.re)).collect();
        labels.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(
            labels,
            vec![
                ("IIXX".to_string(), -0.5),
                ("IIYY".to_string(), -0.5),
                ("XXII".to_string(), -0.5),
                ("YYII".to_string(), -0.5)
            ]
        );
        let dl: Vec<_> = d.terms().iter().map(|t| (t.label(), t.coefficient.re)).collect();
        assert!(dl.contains(&("ZIZI".to_string(), 0.25)));
        assert!(dl.contains(&("IZIZ".to_string(), 0.25)));
        assert_eq!(dl.len(), 2);
    }

    #[test]
    fn negative_u_rejected() {
        let l = Lattice::build(LatticeKind::Chain, 2).unwrap();
        assert!(hubbard_terms(&l, 1.0, -1.0).is_err());
        assert!(hubbard_terms(&l, 0.0, 1.0).is_err());
    }

    #[test]
    fn number_operator() {
        let layout = QubitLayout::new(1);
        let n = number_operator_term(&layout, 0, Spin::Up).unwrap();
        let labels: Vec<_> = n.terms().iter().map(|t| (t.label(), t.coefficient.re)).collect();
        assert!(labels.contains(&("II".to_string(), 0.5)));
        assert!(labels.contains(&("ZI".to_string(), -0.5)));
        // <1|n|1> = 1, <0|n|0> = 0 for qubit 0 (most significant bit).
        assert!((n.diagonal_value(0b10).unwrap().re - 1.0).abs() < 1e-15);
        assert!(n.diagonal_value(0b00).unwrap().re.abs() < 1e-15);
        assert!(number_operator_term(&layout, 1, Spin::Up).is_err());
    }

    #[test]
    fn spec_roundtrip_json() {
        let l = Lattice::build(LatticeKind::Ladder, 8).unwrap();
        let spec = HamiltonianSpec::new(&l, 1.0, 4.0);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"ladder\""));
        let back: HamiltonianSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.lattice().unwrap(), l);
    }

    #[test]
    fn one_body_kinetic_matches_pauli_form() {
        for spec in ["chain:4", "ladder:6"] {
            let lat = Lattice::parse(spec).unwrap();
            let layout = lat.layout();
            let t = lat.hopping_matrix(1.3);
            let up = one_body_operator(&t, layout.n_qubits(), 0).unwrap();
            let dn = one_body_operator(&t, layout.n_qubits(), lat.n_sites()).unwrap();
            let k = kinetic_term(&lat, 1.3);
            let diff = up.add(&dn).unwrap().add(&k.scaled(Complex64::new(-1.0, 0.0))).unwrap();
            assert!(diff.is_empty(), "{spec}: {diff}");
        }
        let n = DMatrix::from_diagonal_element(1, 1, Complex64::new(1.0, 0.0));
        let layout = QubitLayout::new(2);
        let via = one_body_operator(&n, 4, 1).unwrap();
        assert_eq!(via, number_operator_term(&layout, 1, Spin::Up).unwrap());
        assert!(one_body_operator(&n, 1, 1).is_err());
    }
}
