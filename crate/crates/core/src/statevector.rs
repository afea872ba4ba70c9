//! Dense statevector simulation.
//!
//! Amplitude index bit `n - 1 - q` holds qubit `q`, so qubit 0 is the
//! leftmost factor of a ket `|q0 q1 ... >`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{qubit_bit, PauliSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Statevectors at or above this length are updated in parallel.
const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero_state(n_qubits: usize) -> Self {
        Self::basis_state(n_qubits, 0)
    }

    pub fn basis_state(n_qubits: usize, index: u64) -> Self {
        assert!(n_qubits < 64, "register too wide");
        let mut amps = vec![ZERO; 1usize << n_qubits];
        amps[index as usize] = ONE;
        Self { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        let expected = 1usize << n_qubits;
        if amps.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: amps.len() });
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Swap(a, b) => {
                let (ba, bb) = (qubit_bit(self.n_qubits, a), qubit_bit(self.n_qubits, b));
                for i in 0..self.amps.len() {
                    let i = i as u64;
                    if i & ba != 0 && i & bb == 0 {
                        self.amps.swap(i as usize, ((i ^ ba) | bb) as usize);
                    }
                }
            }
            Gate::Cnot { control, target } => self.apply_single(target, Some(control), &Gate::x_matrix()),
            Gate::Crz { control, target, theta } => {
                self.apply_single(target, Some(control), &Gate::rz_matrix(theta))
            }
            _ => {
                let q = gate.qubits()[0];
                let m = gate.single_qubit_matrix().expect("single-qubit gate");
                self.apply_single(q, None, &m);
            }
        }
        Ok(())
    }

    pub fn apply_circuit<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    fn apply_single(&mut self, target: usize, control: Option<usize>, m: &[[Complex64; 2]; 2]) {
        let tb = qubit_bit(self.n_qubits, target) as usize;
        let cb = control.map(|c| qubit_bit(self.n_qubits, c) as usize).unwrap_or(0);
        // Diagonal gates touch each amplitude once.
        if m[0][1] == ZERO && m[1][0] == ZERO {
            let (d0, d1) = (m[0][0], m[1][1]);
            let f = |(i, a): (usize, &mut Complex64)| {
                if i & cb == cb {
                    *a *= if i & tb == 0 { d0 } else { d1 };
                }
            };
            if self.amps.len() >= PAR_THRESHOLD {
                self.amps.par_iter_mut().enumerate().for_each(f);
            } else {
                self.amps.iter_mut().enumerate().for_each(f);
            }
            return;
        }
        for i in 0..self.amps.len() {
            if i & tb != 0 || i & cb != cb {
                continue;
            }
            let j = i | tb;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// Multiplies every amplitude by a function of its basis index.
    pub fn apply_diagonal(&mut self, f: impl Fn(u64) -> Complex64 + Sync) {
        if self.amps.len() >= PAR_THRESHOLD {
            self.amps.par_iter_mut().enumerate().for_each(|(b, a)| *a *= f(b as u64));
        } else {
            self.amps.iter_mut().enumerate().for_each(|(b, a)| *a *= f(b as u64));
        }
    }

    /// `O|self>` without materializing `O`.
    pub fn apply_pauli_sum(&self, op: &PauliSum) -> Result<StateVector> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: self.n_qubits, found: op.n_qubits() });
        }
        let terms = op.compiled();
        let src = &self.amps;
        let row = |(b, out): (usize, &mut Complex64)| {
            let b = b as u64;
            let mut acc = ZERO;
            for t in &terms {
                let from = b ^ t.x;
                acc += t.phase(from) * src[from as usize];
            }
            *out = acc;
        };
        let mut out = vec![ZERO; src.len()];
        if src.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(row);
        } else {
            out.iter_mut().enumerate().for_each(row);
        }
        Ok(StateVector { n_qubits: self.n_qubits, amps: out })
    }

    /// `<self|O|self>`.
    pub fn expectation(&self, op: &PauliSum) -> Result<Complex64> {
        matrix_element(self, Some(op), self)
    }

    /// Writes the little-endian dump: `u64` qubit count then interleaved
    /// `(re, im)` doubles.
    pub fn write_dump(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.n_qubits as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_dump(mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let n = u64::from_le_bytes(head) as usize;
        if n >= 40 {
            return Err(Error::TooLarge(format!("dump declares {n} qubits")));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let expected = (1usize << n) * 16;
        if body.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: body.len() });
        }
        let amps = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { n_qubits: n, amps })
    }

    pub fn dump_to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_dump(std::io::BufWriter::new(f))
    }
}

/// `<bra|O|ket>`, with `O = I` when `op` is `None`.
pub fn matrix_element(bra: &StateVector, op: Option<&PauliSum>, ket: &StateVector) -> Result<Complex64> {
    bra.check_same(ket)?;
    let Some(op) = op else {
        return bra.inner(ket);
    };
    if op.n_qubits() != ket.n_qubits {
        return Err(Error::DimensionMismatch { expected: ket.n_qubits, found: op.n_qubits() });
    }
    let terms = op.compiled();
    let (ba, ka) = (&bra.amps, &ket.amps);
    let row = |b: usize| -> Complex64 {
        let kb = ka[b];
        if kb == ZERO {
            return ZERO;
        }
        let b = b as u64;
        terms.iter().map(|t| ba[(b ^ t.x) as usize].conj() * t.phase(b)).sum::<Complex64>() * kb
    };
    Ok(if ka.len() >= PAR_THRESHOLD {
        (0..ka.len()).into_par_iter().map(row).sum()
    } else {
        (0..ka.len()).map(row).sum()
    })
}

/// Circuit element. Qubit indices are zero-based.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    /// `diag(1, -i)`.
    Sdg(usize),
    /// `exp(-i theta Z / 2) = diag(e^{-i theta/2}, e^{i theta/2})`.
    Rz { qubit: usize, theta: f64 },
    Rx { qubit: usize, theta: f64 },
    Cnot { control: usize, target: usize },
    Crz { control: usize, target: usize, theta: f64 },
    Swap(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Sdg(q) => vec![q],
            Gate::Rz { qubit, .. } | Gate::Rx { qubit, .. } => vec![qubit],
            Gate::Cnot { control, target } | Gate::Crz { control, target, .. } => vec![control, target],
            Gate::Swap(a, b) => vec![a, b],
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rz { theta, .. } | Gate::Rx { theta, .. } | Gate::Crz { theta, .. } => Some(theta),
            _ => None,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n_qubits {
                return Err(Error::IndexOutOfRange { index: q, limit: n_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::InvalidParameter(format!("gate {self:?} repeats a qubit")));
        }
        if let Some(t) = self.angle() {
            if !t.is_finite() {
                return Err(Error::InvalidParameter(format!("gate {self:?} has a non-finite angle")));
            }
        }
        Ok(())
    }

    fn x_matrix() -> [[Complex64; 2]; 2] {
        [[ZERO, ONE], [ONE, ZERO]]
    }

    fn rz_matrix(theta: f64) -> [[Complex64; 2]; 2] {
        [[Complex64::from_polar(1.0, -theta / 2.0), ZERO], [ZERO, Complex64::from_polar(1.0, theta / 2.0)]]
    }

    /// 2x2 matrix of a single-qubit gate, `None` for two-qubit gates.
    pub fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Some(match *self {
            Gate::H(_) => {
                let h = Complex64::new(s, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::X(_) => Self::x_matrix(),
            Gate::Sdg(_) => [[ONE, ZERO], [ZERO, Complex64::new(0.0, -1.0)]],
            Gate::Rz { theta, .. } => Self::rz_matrix(theta),
            Gate::Rx { theta, .. } => {
                let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
                [[Complex64::new(c, 0.0), Complex64::new(0.0, -sn)], [Complex64::new(0.0, -sn), Complex64::new(c, 0.0)]]
            }
            _ => return None,
        })
    }

    /// Dense matrix of the gate on its own qubits (listed by [`Gate::qubits`],
    /// first listed qubit most significant).
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let k = self.qubits().len();
        let relabeled = match *self {
            Gate::Cnot { .. } => Gate::Cnot { control: 0, target: 1 },
            Gate::Crz { theta, .. } => Gate::Crz { control: 0, target: 1, theta },
            Gate::Swap(..) => Gate::Swap(0, 1),
            Gate::H(_) => Gate::H(0),
            Gate::X(_) => Gate::X(0),
            Gate::Sdg(_) => Gate::Sdg(0),
            Gate::Rz { theta, .. } => Gate::Rz { qubit: 0, theta },
            Gate::Rx { theta, .. } => Gate::Rx { qubit: 0, theta },
        };
        circuit_unitary(k, &[relabeled]).expect("relabeled gate fits")
    }
}

/// Dense unitary of a circuit on `n_qubits`, column `b` = circuit applied to `|b>`.
pub fn circuit_unitary(n_qubits: usize, gates: &[Gate]) -> Result<DMatrix<Complex64>> {
    let dim = 1usize << n_qubits;
    let mut u = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let mut s = StateVector::basis_state(n_qubits, b as u64);
        s.apply_circuit(gates)?;
        for (r, a) in s.amps.iter().enumerate() {
            u[(r, b)] = *a;
        }
    }
    Ok(u)
}
