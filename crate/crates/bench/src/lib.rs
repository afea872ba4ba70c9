//! Fixtures shared by the benchmarks.

use gutz_core::lattice::hubbard_terms;
use gutz_core::slater::{half_filled_trial, slater_to_statevector};
use gutz_core::{Complex64, Lattice, PauliSum, SlaterState, StateVector};

pub struct Fixture {
    pub lattice: Lattice,
    pub trial: SlaterState,
    pub hamiltonian: PauliSum,
}

impl Fixture {
    pub fn new(spec: &str, u: f64) -> Self {
        let lattice = Lattice::parse(spec).expect("valid lattice");
        let trial = half_filled_trial(&lattice).expect("nondegenerate filling");
        let (k, d) = hubbard_terms(&lattice, 1.0, u).expect("valid couplings");
        let hamiltonian = k.add(&d.scaled(Complex64::new(u, 0.0))).expect("same register");
        Self { lattice, trial, hamiltonian }
    }

    pub fn statevector(&self) -> StateVector {
        slater_to_statevector(&self.trial, &self.trial, &self.lattice.layout()).expect("fits in memory")
    }
}
