//! Pauli strings and weighted sums of them.
//!
//! Qubit `0` is the most significant bit of a computational-basis index, so
//! on an `n`-qubit register qubit `q` lives at bit `n - 1 - q`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MERGE_DROP: f64 = 1e-15;

/// Single-qubit Pauli operator.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Bit mask of qubit `q` in an `n`-qubit register.
#[inline]
pub fn qubit_bit(n_qubits: usize, q: usize) -> u64 {
    1u64 << (n_qubits - 1 - q)
}

/// A Pauli string with a complex coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coefficient: Complex64,
    ops: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(coefficient: Complex64, ops: Vec<Pauli>) -> Self {
        Self { coefficient, ops }
    }

    pub fn identity(n_qubits: usize, coefficient: Complex64) -> Self {
        Self::new(coefficient, vec![Pauli::I; n_qubits])
    }

    /// Builds a term from `(qubit, op)` pairs; unspecified qubits are identity.
    pub fn from_sparse(n_qubits: usize, coefficient: Complex64, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut full = vec![Pauli::I; n_qubits];
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange { index: q, limit: n_qubits });
            }
            full[q] = p;
        }
        Ok(Self::new(coefficient, full))
    }

    /// Parses a label such as `"XZIY"`.
    pub fn from_label(label: &str, coefficient: Complex64) -> Result<Self> {
        let ops = label
            .chars()
            .map(|c| Pauli::from_symbol(c).ok_or_else(|| Error::InvalidParameter(format!("bad Pauli symbol {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coefficient, ops))
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn label(&self) -> String {
        self.ops.iter().map(|p| p.symbol()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    /// `(x_mask, z_mask, n_y)`: X or Y positions flip, Z or Y positions carry a sign.
    pub fn masks(&self) -> (u64, u64, u32) {
        let n = self.ops.len();
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for (q, p) in self.ops.iter().enumerate() {
            let bit = qubit_bit(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// Image of basis state `b`: `P|b> = phase |b'>` (coefficient included).
    pub fn apply_to_basis(&self, b: u64) -> (u64, Complex64) {
        let c = self.compiled();
        (b ^ c.x, c.phase(b))
    }

    pub(crate) fn compiled(&self) -> CompiledTerm {
        let (x, z, ny) = self.masks();
        CompiledTerm { x, z, coeff: self.coefficient * i_pow(ny) }
    }
}

/// Operator product `a * b`.
pub fn multiply(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch { expected: a.n_qubits(), found: b.n_qubits() });
    }
    let mut coeff = a.coefficient * b.coefficient;
    let ops = a
        .ops
        .iter()
        .zip(&b.ops)
        .map(|(&p, &q)| {
            let (r, k) = single_product(p, q);
            coeff *= i_pow(k);
            r
        })
        .collect();
    Ok(PauliTerm::new(coeff, ops))
}

/// `p q = i^k r`.
fn single_product(p: Pauli, q: Pauli) -> (Pauli, u32) {
    use Pauli::*;
    match (p, q) {
        (I, r) | (r, I) => (r, 0),
        (a, b) if a == b => (I, 0),
        (X, Y) => (Z, 1),
        (Y, Z) => (X, 1),
        (Z, X) => (Y, 1),
        (Y, X) => (Z, 3),
        (Z, Y) => (X, 3),
        (X, Z) => (Y, 3),
        _ => unreachable!(),
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.6}{:+.6}i) {}", self.coefficient.re, self.coefficient.im, self.label())
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Pauli string reduced to masks: `P|b> = coeff * (-1)^{|b & z|} |b ^ x>`.
#[derive(Copy, Clone, Debug)]
pub(crate) struct CompiledTerm {
    pub x: u64,
    pub z: u64,
    pub coeff: Complex64,
}

impl CompiledTerm {
    #[inline]
    pub fn phase(&self, b: u64) -> Complex64 {
        if (b & self.z).count_ones() % 2 == 0 {
            self.coeff
        } else {
            -self.coeff
        }
    }
}

/// Sum of Pauli strings over a fixed number of qubits. Terms with identical
/// operator strings are always merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_terms(n_qubits, vec![PauliTerm::identity(n_qubits, Complex64::new(1.0, 0.0))])
            .expect("identity has matching width")
    }

    pub fn from_terms(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        let mut sum = Self::zero(n_qubits);
        for t in terms {
            sum.push(t)?;
        }
        sum.normalize();
        Ok(sum)
    }

    fn push(&mut self, term: PauliTerm) -> Result<()> {
        if term.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: term.n_qubits() });
        }
        self.terms.push(term);
        Ok(())
    }

    /// Adds a term and re-merges.
    pub fn add_term(&mut self, term: PauliTerm) -> Result<()> {
        self.push(term)?;
        self.normalize();
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::from_terms(self.n_qubits, terms)
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coefficient *= factor;
        }
        out.normalize();
        out
    }

    fn normalize(&mut self) {
        let mut merged: BTreeMap<Vec<Pauli>, Complex64> = BTreeMap::new();
        for t in self.terms.drain(..) {
            *merged.entry(t.ops).or_insert(Complex64::new(0.0, 0.0)) += t.coefficient;
        }
        self.terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() > MERGE_DROP)
            .map(|(ops, c)| PauliTerm::new(c, ops))
            .collect();
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn compiled(&self) -> Vec<CompiledTerm> {
        self.terms.iter().map(PauliTerm::compiled).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.masks().0 == 0)
    }

    /// `<b|O|b>` for an operator built only from `I` and `Z`.
    pub fn diagonal_value(&self, b: u64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in self.compiled() {
            if t.x != 0 {
                return Err(Error::NotDiagonal);
            }
            acc += t.phase(b);
        }
        Ok(acc)
    }

    /// Dense matrix in the computational basis. Only sensible for small registers.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for t in self.compiled() {
            for b in 0..dim as u64 {
                m[((b ^ t.x) as usize, b as usize)] += t.phase(b);
            }
        }
        m
    }

    /// Hermitian iff every coefficient is real (Pauli strings are Hermitian
    /// and distinct strings are linearly independent).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|t| t.coefficient.im.abs() <= tol)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
