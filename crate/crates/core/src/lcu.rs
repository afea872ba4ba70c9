//! Probabilistic preparation of the Gutzwiller state with one ancilla per
//! site.
//!
//! The register holds qubits `0..2N` and the ancillas `2N..3N`, so in an
//! amplitude index the ancilla bits are the `N` least significant bits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gutzwiller::{DoubleOccupancyHistogram, HsParams};
use crate::lattice::{Lattice, QubitLayout, Spin};
use crate::slater::half_filled_trial;
use crate::statevector::{Gate, StateVector};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LcuVariant {
    /// Uncontrolled `Rz(-alpha)` pair followed by a controlled `Rz(2 alpha)` pair.
    Simplified,
    /// Controlled `Rz(alpha)` pair plus anti-controlled `Rz(-alpha)` pair.
    Naive,
}

pub fn ancilla_qubit(layout: &QubitLayout, site: usize) -> usize {
    layout.n_qubits() + site
}

/// Gate list of the ancilla circuit on `3N` qubits.
pub fn lcu_circuit(g: f64, layout: &QubitLayout, variant: LcuVariant) -> Result<Vec<Gate>> {
    let p = HsParams::new(g)?;
    let a = p.alpha;
    let mut gates = Vec::new();
    for i in 0..layout.n_sites() {
        let anc = ancilla_qubit(layout, i);
        let targets = Spin::BOTH.map(|s| layout.qubit(i, s));
        gates.push(Gate::H(anc));
        match variant {
            LcuVariant::Simplified => {
                for &t in &targets {
                    gates.push(Gate::Rz { qubit: t, theta: -a });
                }
                for &t in &targets {
                    gates.push(Gate::Crz { control: anc, target: t, theta: 2.0 * a });
                }
            }
            LcuVariant::Naive => {
                for &t in &targets {
                    gates.push(Gate::Crz { control: anc, target: t, theta: a });
                }
                gates.push(Gate::X(anc));
                for &t in &targets {
                    gates.push(Gate::Crz { control: anc, target: t, theta: -a });
                }
                gates.push(Gate::X(anc));
            }
        }
        gates.push(Gate::H(anc));
    }
    Ok(gates)
}

/// `trial (x) |0...0>_anc` evolved by the ancilla circuit.
pub fn build_lcu_state(trial: &StateVector, g: f64, layout: &QubitLayout, variant: LcuVariant) -> Result<StateVector> {
    let nq = layout.n_qubits();
    if trial.n_qubits() != nq {
        return Err(Error::DimensionMismatch { expected: nq, found: trial.n_qubits() });
    }
    let n_anc = layout.n_sites();
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); 1usize << (nq + n_anc)];
    for (r, &a) in trial.amplitudes().iter().enumerate() {
        amps[r << n_anc] = a;
    }
    let mut whole = StateVector::from_amplitudes(nq + n_anc, amps)?;
    whole.apply_circuit(&lcu_circuit(g, layout, variant)?)?;
    Ok(whole)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcuOutcome {
    pub success_probability: f64,
    /// Normalized register state after the all-zero ancilla outcome.
    pub projected_state: StateVector,
}

/// Projects the ancillas (the `n_ancillas` least significant bits) onto `|0...0>`.
pub fn measure_ancillas_success(whole: &StateVector, n_ancillas: usize) -> Result<LcuOutcome> {
    if n_ancillas > whole.n_qubits() {
        return Err(Error::DimensionMismatch { expected: whole.n_qubits(), found: n_ancillas });
    }
    let n_reg = whole.n_qubits() - n_ancillas;
    let amps: Vec<_> = (0..1usize << n_reg).map(|r| whole.amplitudes()[r << n_ancillas]).collect();
    let mut projected = StateVector::from_amplitudes(n_reg, amps)?;
    let norm = projected.norm();
    if norm < 1e-300 {
        return Err(Error::ZeroProbability(norm * norm));
    }
    projected.normalize();
    Ok(LcuOutcome { success_probability: norm * norm, projected_state: projected })
}

/// `ln p` with `p = exp(-g N / 2) <psi_0|exp(-2 g D)|psi_0>` from the occupation histogram.
pub fn log_success_probability(hist: &DoubleOccupancyHistogram, n_sites: usize, g: f64) -> f64 {
    -g * n_sites as f64 / 2.0 + hist.log_norm(g)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessPoint {
    pub n_sites: usize,
    pub g: f64,
    pub p: f64,
    pub log_p: f64,
}

/// Success probability over `g_grid` for the half-filled ground state of `K`.
pub fn success_probability_curve(lattice: &Lattice, g_grid: &[f64]) -> Result<Vec<SuccessPoint>> {
    let trial = half_filled_trial(lattice)?;
    let hist = DoubleOccupancyHistogram::new(&trial, &trial)?;
    let n = lattice.n_sites();
    g_grid
        .par_iter()
        .map(|&g| {
            HsParams::new(g)?;
            let log_p = log_success_probability(&hist, n, g);
            Ok(SuccessPoint { n_sites: n, g, p: log_p.exp(), log_p })
        })
        .collect()
}

/// `<D>_g` recovered from the logarithmic derivative of the success
/// probability by a centered difference of width `2 delta`.
pub fn docc_from_success_probability(lattice: &Lattice, g: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    HsParams::new(g)?;
    let trial = half_filled_trial(lattice)?;
    let hist = DoubleOccupancyHistogram::new(&trial, &trial)?;
    let n = lattice.n_sites();
    let slope = (log_success_probability(&hist, n, g + delta) - log_success_probability(&hist, n, g - delta)) / (2.0 * delta);
    Ok(-(n as f64 / 4.0 + slope / 2.0))
}
