//! Lowest eigenpair of a Hermitian Pauli sum by restarted Lanczos.
//!
//! The operator is applied matrix-free on the full register, or through a
//! sparse row table when the search is restricted to a particle-number
//! sector. Krylov vectors are kept and fully reorthogonalized.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{CompiledTerm, PauliSum};
use crate::statevector::StateVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PAR_THRESHOLD: usize = 1 << 14;
/// Eigenvalues closer than this count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;
const KRYLOV_BYTES: usize = 1 << 30;

/// Restriction of the search to a fixed number of fermions. `PerSpin` treats
/// the first half of the register as spin up and the second half as spin down.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ParticleSector {
    Total(usize),
    PerSpin { n_up: usize, n_down: usize },
}

impl ParticleSector {
    fn contains(&self, n_qubits: usize, b: u64) -> bool {
        match *self {
            ParticleSector::Total(n) => b.count_ones() as usize == n,
            ParticleSector::PerSpin { n_up, n_down } => {
                let half = n_qubits / 2;
                let mask = (1u64 << half) - 1;
                (b >> half).count_ones() as usize == n_up && (b & mask).count_ones() as usize == n_down
            }
        }
    }

    /// Sorted basis of the sector.
    pub fn basis(&self, n_qubits: usize) -> Result<Vec<u64>> {
        if let ParticleSector::PerSpin { .. } = self {
            if n_qubits % 2 != 0 {
                return Err(Error::InvalidParameter("per-spin sector needs an even register".into()));
            }
        }
        let basis: Vec<u64> = match *self {
            ParticleSector::Total(_) => (0..1u64 << n_qubits).filter(|&b| self.contains(n_qubits, b)).collect(),
            ParticleSector::PerSpin { n_up, n_down } => {
                let half = n_qubits / 2;
                let ups = combinations(half, n_up);
                let downs = combinations(half, n_down);
                ups.iter().flat_map(|&u| downs.iter().map(move |&d| (u << half) | d)).collect()
            }
        };
        if basis.is_empty() {
            return Err(Error::InvalidParameter(format!("sector {self:?} is empty on {n_qubits} qubits")));
        }
        Ok(basis)
    }
}

/// All `n`-bit masks with `k` set bits, ascending.
pub fn combinations(n: usize, k: usize) -> Vec<u64> {
    (0..1u64 << n).filter(|b| b.count_ones() as usize == k).collect()
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Number of eigenvalues within [`DEGENERACY_GAP`] of the lowest one.
    pub degeneracy: usize,
    /// Next eigenvalue above the ground multiplet, when it was computed.
    pub next_energy: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    n_qubits: usize,
    basis: Option<Vec<u64>>,
    coeffs: Vec<Complex64>,
}

impl GroundState {
    /// Ground-state vector embedded in the full register.
    pub fn state(&self) -> StateVector {
        let amps = match &self.basis {
            None => self.coeffs.clone(),
            Some(basis) => {
                let mut amps = vec![ZERO; 1usize << self.n_qubits];
                for (&b, &c) in basis.iter().zip(&self.coeffs) {
                    amps[b as usize] = c;
                }
                amps
            }
        };
        StateVector::from_amplitudes(self.n_qubits, amps).expect("length matches register")
    }
}

trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

struct FullOp {
    terms: Vec<CompiledTerm>,
    dim: usize,
}

impl LinearOp for FullOp {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let row = |(b, out): (usize, &mut Complex64)| {
            let b = b as u64;
            *out = self.terms.iter().map(|t| t.phase(b ^ t.x) * x[(b ^ t.x) as usize]).sum();
        };
        if self.dim >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
    }
}

struct SparseOp {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseOp {
    fn build(op: &PauliSum, basis: &[u64]) -> Self {
        let terms = op.compiled();
        let rows: Vec<Vec<(u32, Complex64)>> = basis
            .par_iter()
            .map(|&b| {
                let mut row: Vec<(u32, Complex64)> = Vec::new();
                for t in &terms {
                    let from = b ^ t.x;
                    // Out-of-sector columns only arise from number-changing terms.
                    let Ok(c) = basis.binary_search(&from) else { continue };
                    let v = t.phase(from);
                    match row.iter_mut().find(|(col, _)| *col == c as u32) {
                        Some(e) => e.1 += v,
                        None => row.push((c as u32, v)),
                    }
                }
                row.retain(|(_, v)| v.norm() > 1e-15);
                row
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(basis.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }
}

impl LinearOp for SparseOp {
    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let row = |(r, out): (usize, &mut Complex64)| {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *out = (a..b).map(|k| self.vals[k] * x[self.cols[k] as usize]).sum();
        };
        if self.dim() >= PAR_THRESHOLD {
            y.par_iter_mut().enumerate().for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn orthogonalize(w: &mut [Complex64], against: &[Vec<Complex64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for v in against {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

/// Options for [`exact_ground_state_with`].
#[derive(Copy, Clone, Debug)]
pub struct LanczosOptions {
    pub tolerance: f64,
    pub max_restarts: usize,
    pub krylov_dim: usize,
    /// Also look for degenerate partners of the ground state.
    pub resolve_degeneracy: bool,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_restarts: 300, krylov_dim: 60, resolve_degeneracy: true, seed: 7 }
    }
}

/// Lowest eigenpair of a Hermitian `op`, optionally restricted to a particle sector.
pub fn exact_ground_state(op: &PauliSum, sector: Option<ParticleSector>) -> Result<GroundState> {
    exact_ground_state_with(op, sector, LanczosOptions::default())
}

pub fn exact_ground_state_with(
    op: &PauliSum,
    sector: Option<ParticleSector>,
    opts: LanczosOptions,
) -> Result<GroundState> {
    let n = op.n_qubits();
    if n > 24 {
        return Err(Error::TooLarge(format!("{n} qubits exceeds the 24-qubit limit")));
    }
    if !op.is_hermitian(1e-12) {
        return Err(Error::InvalidParameter("operator is not Hermitian".into()));
    }
    let (lin, basis): (Box<dyn LinearOp>, Option<Vec<u64>>) = match sector {
        None => (Box::new(FullOp { terms: op.compiled(), dim: 1usize << n }), None),
        Some(s) => {
            let basis = s.basis(n)?;
            (Box::new(SparseOp::build(op, &basis)), Some(basis))
        }
    };
    let dim = lin.dim();
    let krylov = opts.krylov_dim.min(KRYLOV_BYTES / (16 * dim)).clamp(8, 200).min(dim);
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);

    let mut locked: Vec<Vec<Complex64>> = Vec::new();
    let first = lanczos(lin.as_ref(), &locked, krylov, &opts, &mut rng)?;
    let mut degeneracy = 1;
    let mut next_energy = None;
    let mut iterations = first.iterations;
    if opts.resolve_degeneracy {
        locked.push(first.vector.clone());
        while locked.len() < dim {
            let next = lanczos(lin.as_ref(), &locked, krylov, &opts, &mut rng)?;
            iterations += next.iterations;
            if next.value - first.value < DEGENERACY_GAP {
                degeneracy += 1;
                locked.push(next.vector);
            } else {
                next_energy = Some(next.value);
                break;
            }
        }
    }
    Ok(GroundState {
        energy: first.value,
        degeneracy,
        next_energy,
        residual: first.residual,
        iterations,
        n_qubits: n,
        basis,
        coeffs: first.vector,
    })
}

struct Ritz {
    value: f64,
    vector: Vec<Complex64>,
    residual: f64,
    iterations: usize,
}

fn lanczos(
    op: &dyn LinearOp,
    locked: &[Vec<Complex64>],
    krylov: usize,
    opts: &LanczosOptions,
    rng: &mut ChaCha12Rng,
) -> Result<Ritz> {
    let dim = op.dim();
    let mut x: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    orthogonalize(&mut x, locked);
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut w = vec![ZERO; dim];
    let mut residual = f64::INFINITY;
    let mut total = 0;
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![x.clone()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let m = krylov.min(dim - locked.len());
        for k in 0..m {
            op.apply(&basis[k], &mut w);
            total += 1;
            let a = dot(&basis[k], &w).re;
            alphas.push(a);
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let b = norm(&w);
            if k + 1 == m || b < 1e-13 {
                break;
            }
            betas.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }
        let k = alphas.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty tridiagonal");
        let y = eig.eigenvectors.column(imin);
        x.iter_mut().for_each(|v| *v = ZERO);
        for (j, v) in basis.iter().enumerate().take(k) {
            axpy(Complex64::new(y[j], 0.0), v, &mut x);
        }
        orthogonalize(&mut x, locked);
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        op.apply(&x, &mut w);
        total += 1;
        let theta_x = dot(&x, &w).re;
        axpy(Complex64::new(-theta_x, 0.0), &x, &mut w);
        orthogonalize(&mut w, locked);
        residual = norm(&w);
        if residual <= opts.tolerance * theta_x.abs().max(1.0) {
            return Ok(Ritz { value: theta_x, vector: x, residual, iterations: total });
        }
    }
    Err(Error::NoConvergence { iterations: total, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{hubbard_terms, Lattice};

    fn hamiltonian(spec: &str, j: f64, u: f64) -> PauliSum {
        let lat = Lattice::parse(spec).unwrap();
        let (k, d) = hubbard_terms(&lat, j, u).unwrap();
        k.add(&d.scaled(Complex64::new(u, 0.0))).unwrap()
    }

    #[test]
    fn two_site_u4() {
        let h = hamiltonian("chain:2", 1.0, 4.0);
        let gs = exact_ground_state(&h, Some(ParticleSector::Total(2))).unwrap();
        assert!((gs.energy + 8f64.sqrt()).abs() < 1e-10, "{}", gs.energy);
        assert_eq!(gs.degeneracy, 1);
        let st = gs.state();
        assert!((st.norm() - 1.0).abs() < 1e-12);
        assert!((st.expectation(&h).unwrap().re - gs.energy).abs() < 1e-10);
    }

    #[test]
    fn two_site_free() {
        let h = hamiltonian("chain:2", 1.0, 0.0);
        let gs = exact_ground_state(&h, Some(ParticleSector::PerSpin { n_up: 1, n_down: 1 })).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-10);
    }

    #[test]
    fn full_register_finds_global_minimum() {
        // Unrestricted, the U=4 two-site ground state still lies at half filling.
        let h = hamiltonian("chain:2", 1.0, 4.0);
        let gs = exact_ground_state(&h, None).unwrap();
        let dense = SymmetricEigen::new(h.to_dense().map(|c| c.re)).eigenvalues.min();
        assert!((gs.energy - dense).abs() < 1e-10);
    }

    #[test]
    fn degeneracy_is_counted() {
        // Free chain-2 with one up particle and any number of down particles
        // in the full register: Z-only operator with a degenerate minimum.
        let op = PauliSum::from_terms(
            2,
            vec![crate::pauli::PauliTerm::from_label("ZI", Complex64::new(1.0, 0.0)).unwrap()],
        )
        .unwrap();
        let gs = exact_ground_state(&op, None).unwrap();
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy, 2);
        assert!((gs.next_energy.unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sector_basis_sizes() {
        assert_eq!(ParticleSector::PerSpin { n_up: 2, n_down: 2 }.basis(8).unwrap().len(), 36);
        assert_eq!(ParticleSector::Total(4).basis(8).unwrap().len(), 70);
        assert!(ParticleSector::Total(9).basis(8).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let op = PauliSum::from_terms(
            1,
            vec![crate::pauli::PauliTerm::from_label("X", Complex64::new(0.0, 1.0)).unwrap()],
        )
        .unwrap();
        assert!(exact_ground_state(&op, None).is_err());
    }
}
