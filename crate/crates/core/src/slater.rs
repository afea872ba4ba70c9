//! Free-fermion trial states of one spin species and their field-dressed
//! overlaps and Green's functions.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, QubitLayout};
use crate::statevector::StateVector;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Overlap matrices with a larger 1-norm condition estimate are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Minimum single-particle gap at the Fermi level.
pub const MIN_FERMI_GAP: f64 = 1e-8;

/// Occupied orbitals `phi` (`N_site x N_particle`, orthonormal columns) of
/// one spin sector.
#[derive(Clone, Debug, PartialEq)]
pub struct SlaterState {
    phi: DMatrix<Complex64>,
    energies: Vec<f64>,
}

impl SlaterState {
    pub fn from_orbitals(phi: DMatrix<Complex64>) -> Result<Self> {
        if phi.ncols() > phi.nrows() {
            return Err(Error::InvalidParameter(format!(
                "{} orbitals do not fit on {} sites",
                phi.ncols(),
                phi.nrows()
            )));
        }
        let gram = phi.adjoint() * &phi;
        let err = (gram - DMatrix::identity(phi.ncols(), phi.ncols())).map(|c| c.norm()).max();
        if err > 1e-12 {
            return Err(Error::InvalidParameter(format!("orbitals are not orthonormal (error {err:e})")));
        }
        Ok(Self { phi, energies: Vec::new() })
    }

    pub fn phi(&self) -> &DMatrix<Complex64> {
        &self.phi
    }

    pub fn n_sites(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_particles(&self) -> usize {
        self.phi.ncols()
    }

    /// Single-particle energies of the occupied orbitals when known.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `<mask|psi>` in the sector's own `N`-qubit register (site 0 = MSB).
    pub fn amplitude(&self, mask: u64) -> Complex64 {
        let n = self.n_sites();
        if mask.count_ones() as usize != self.n_particles() {
            return ZERO;
        }
        let rows: Vec<usize> = (0..n).filter(|&i| mask >> (n - 1 - i) & 1 == 1).collect();
        if rows.is_empty() {
            return Complex64::new(1.0, 0.0);
        }
        self.phi.select_rows(rows.iter()).determinant()
    }

    /// Expansion of the sector state over its `N` qubits.
    pub fn to_sector_statevector(&self) -> StateVector {
        let n = self.n_sites();
        let amps = (0..1u64 << n).map(|b| self.amplitude(b)).collect();
        StateVector::from_amplitudes(n, amps).expect("2^N amplitudes")
    }
}

/// Lowest `n_particles` orbitals of the hopping matrix (`-J = -1` on edges).
pub fn ground_state_of_k(lattice: &Lattice, n_particles: usize) -> Result<SlaterState> {
    let n = lattice.n_sites();
    if n_particles == 0 || n_particles > n {
        return Err(Error::InvalidParameter(format!("cannot place {n_particles} particles on {n} sites")));
    }
    let t = lattice.hopping_matrix(1.0).map(|c| c.re);
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if n_particles < n {
        let gap = eig.eigenvalues[order[n_particles]] - eig.eigenvalues[order[n_particles - 1]];
        if gap < MIN_FERMI_GAP {
            return Err(Error::DegenerateFilling { gap });
        }
    }
    let mut phi = DMatrix::zeros(n, n_particles);
    let mut energies = Vec::with_capacity(n_particles);
    for (col, &k) in order.iter().take(n_particles).enumerate() {
        let v = eig.eigenvectors.column(k);
        let big = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let pivot = v.iter().position(|x| x.abs() >= big - 1e-12).expect("nonzero eigenvector");
        let sign = v[pivot].signum();
        for i in 0..n {
            phi[(i, col)] = Complex64::new(sign * v[i], 0.0);
        }
        energies.push(eig.eigenvalues[k]);
    }
    Ok(SlaterState { phi, energies })
}

/// Orbitals shared by both spins at half filling (`N/2` per spin).
pub fn half_filled_trial(lattice: &Lattice) -> Result<SlaterState> {
    let n = lattice.n_sites();
    if n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("half filling needs an even site count, got {n}")));
    }
    ground_state_of_k(lattice, n / 2)
}

/// Full-register product state `|psi_up> (x) |psi_down>`.
pub fn slater_to_statevector(up: &SlaterState, down: &SlaterState, layout: &QubitLayout) -> Result<StateVector> {
    let n = layout.n_sites();
    for s in [up, down] {
        if s.n_sites() != n {
            return Err(Error::DimensionMismatch { expected: n, found: s.n_sites() });
        }
    }
    let a_up = up.to_sector_statevector();
    let a_dn = down.to_sector_statevector();
    let mut amps = vec![ZERO; 1usize << (2 * n)];
    for (u, &au) in a_up.amplitudes().iter().enumerate() {
        if au == ZERO {
            continue;
        }
        for (d, &ad) in a_dn.amplitudes().iter().enumerate() {
            amps[layout.join(u as u64, d as u64) as usize] = au * ad;
        }
    }
    let mut sv = StateVector::from_amplitudes(2 * n, amps)?;
    sv.normalize();
    Ok(sv)
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DressedOverlap {
    pub value: Complex64,
    pub log_magnitude: f64,
    /// 1-norm condition estimate of `phi^dagger diag(phases) phi`.
    pub condition: f64,
}

/// `<psi| prod_i exp(i theta_i (n_i - 1/2)) |psi>`.
///
/// `theta_i = alpha (s_{i,1} + s_{i,2})` for the product of both field slots.
pub fn dressed_overlap(slater: &SlaterState, theta: &[f64]) -> Result<DressedOverlap> {
    let m = overlap_matrix(slater, &vec![0.0; theta.len()], theta)?;
    let shift: f64 = -theta.iter().sum::<f64>() / 2.0;
    let lu = m.clone().lu();
    let diag = lu.u().diagonal();
    let det = lu.determinant();
    let log_magnitude = diag.iter().map(|d| d.norm().ln()).sum();
    let condition = match lu.try_inverse() {
        Some(inv) => one_norm(&m) * one_norm(&inv),
        None => f64::INFINITY,
    };
    Ok(DressedOverlap { value: det * Complex64::from_polar(1.0, shift), log_magnitude, condition })
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `phi^dagger diag(e^{i theta_bra}) diag(e^{i theta_ket}) phi`.
fn overlap_matrix(slater: &SlaterState, theta_bra: &[f64], theta_ket: &[f64]) -> Result<DMatrix<Complex64>> {
    let n = slater.n_sites();
    for t in [theta_bra, theta_ket] {
        if t.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: t.len() });
        }
    }
    let mut right = slater.phi.clone();
    for i in 0..n {
        let p = Complex64::from_polar(1.0, theta_bra[i] + theta_ket[i]);
        right.row_mut(i).iter_mut().for_each(|x| *x *= p);
    }
    Ok(slater.phi.adjoint() * right)
}

/// Single-particle Green's function `G_{ji} = <L| c_i^dagger c_j |R> / <L|R>`
/// between the ket dressed by `theta_ket` and the bra dressed by `theta_bra`.
///
/// `G = Phi_R (Phi_L^dagger Phi_R)^{-1} Phi_L^dagger` with
/// `Phi_R = diag(e^{i theta_ket}) phi` and `Phi_L^dagger = phi^dagger diag(e^{i theta_bra})`.
pub fn dressed_green(slater: &SlaterState, theta_bra: &[f64], theta_ket: &[f64]) -> Result<DMatrix<Complex64>> {
    let m = overlap_matrix(slater, theta_bra, theta_ket)?;
    let inv = m.clone().try_inverse().ok_or(Error::NearSingular { condition: f64::INFINITY })?;
    let condition = one_norm(&m) * one_norm(&inv);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::NearSingular { condition });
    }
    let n = slater.n_sites();
    let mut phi_r = slater.phi.clone();
    let mut phi_l_dag = slater.phi.adjoint();
    for i in 0..n {
        let pk = Complex64::from_polar(1.0, theta_ket[i]);
        phi_r.row_mut(i).iter_mut().for_each(|x| *x *= pk);
        let pb = Complex64::from_polar(1.0, theta_bra[i]);
        phi_l_dag.column_mut(i).iter_mut().for_each(|x| *x *= pb);
    }
    Ok(phi_r * inv * phi_l_dag)
}

/// `<psi|u_bra O u_ket|psi> / <psi|u_bra u_ket|psi>` for a one-body
/// `O = sum_ij O_ij c_i^dagger c_j`.
pub fn dressed_one_body(
    slater: &SlaterState,
    theta_bra: &[f64],
    theta_ket: &[f64],
    one_body: &DMatrix<Complex64>,
) -> Result<Complex64> {
    let n = slater.n_sites();
    if one_body.nrows() != n || one_body.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: one_body.nrows() });
    }
    let g = dressed_green(slater, theta_bra, theta_ket)?;
    Ok(trace_product(one_body, &g))
}

/// `tr(O G)`.
pub fn trace_product(o: &DMatrix<Complex64>, g: &DMatrix<Complex64>) -> Complex64 {
    let n = o.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += o[(i, j)] * g[(j, i)];
        }
    }
    acc
}
