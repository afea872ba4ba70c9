//! Metropolis sampling of the auxiliary fields.
//!
//! Configurations are drawn with probability proportional to the weight
//! `W(s) = <psi_0| prod_i exp(i alpha (s_{i,ket} + s_{i,bra})(n_{i up} + n_{i dn} - 1)) |psi_0>`,
//! and observables are averaged through their local estimators
//! `<psi_0|U(s_bra) O U(s_ket)|psi_0> / W(s)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gutzwiller::{apply_field, AuxFieldConfig, HsParams, Slot};
use crate::lattice::{hubbard_terms, Lattice, QubitLayout};
use crate::pauli::PauliSum;
use crate::slater::{dressed_green, dressed_overlap, half_filled_trial, slater_to_statevector, trace_product, SlaterState, MAX_CONDITION};
use crate::statevector::{matrix_element, StateVector};
use crate::stats::{bin_means, binned_estimate, EstimatorResult};

/// Identifier of the pseudo-random generator recorded in run metadata.
pub const GENERATOR_ID: &str = "rand_chacha::ChaCha12Rng(seed_from_u64)";
/// Relative tolerance on the imaginary part of a weight.
pub const WEIGHT_IMAG_TOL: f64 = 1e-10;
/// Relative tolerance on a negative real part of a weight.
pub const WEIGHT_NEG_TOL: f64 = 1e-12;
/// The statevector backend enumerates `4^N` amplitudes per weight.
pub const MAX_STATEVECTOR_SITES: usize = 8;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Statevector,
    Determinant,
}

impl std::str::FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statevector" => Ok(BackendKind::Statevector),
            "determinant" => Ok(BackendKind::Determinant),
            other => Err(Error::InvalidParameter(format!("unknown backend {other:?}"))),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Statevector => "statevector",
            BackendKind::Determinant => "determinant",
        })
    }
}

/// Observables with a local estimator.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Kinetic,
    DoubleOccupancy,
    /// `O_up (x) O_dn` for one-body operators given as `N x N` matrices.
    SpinProduct { up: DMatrix<Complex64>, down: DMatrix<Complex64> },
}

/// Weight of one configuration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Weight {
    pub value: Complex64,
    /// The overlap matrices are too ill-conditioned for a Green's function.
    pub singular: bool,
}

/// Local estimates of `K` and `D` for one configuration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LocalEstimates {
    pub kinetic: Complex64,
    pub docc: Complex64,
}

pub trait Backend: Sync {
    fn n_sites(&self) -> usize;
    fn params(&self) -> &HsParams;
    fn weight(&self, config: &AuxFieldConfig) -> Result<Weight>;
    fn local(&self, config: &AuxFieldConfig, observable: &Observable) -> Result<Complex64>;

    fn local_kd(&self, config: &AuxFieldConfig) -> Result<LocalEstimates> {
        Ok(LocalEstimates {
            kinetic: self.local(config, &Observable::Kinetic)?,
            docc: self.local(config, &Observable::DoubleOccupancy)?,
        })
    }
}

/// Dense statevector evaluation of weights and estimators.
pub struct StatevectorBackend {
    layout: QubitLayout,
    params: HsParams,
    trial: StateVector,
    kinetic: PauliSum,
    docc: PauliSum,
    n_sites: usize,
}

impl StatevectorBackend {
    pub fn new(lattice: &Lattice, j: f64, g: f64, up: &SlaterState, down: &SlaterState) -> Result<Self> {
        let n = lattice.n_sites();
        if n > MAX_STATEVECTOR_SITES {
            return Err(Error::TooLarge(format!("statevector backend is limited to {MAX_STATEVECTOR_SITES} sites")));
        }
        let layout = lattice.layout();
        let (kinetic, docc) = hubbard_terms(lattice, j, 0.0)?;
        let trial = slater_to_statevector(up, down, &layout)?;
        Ok(Self { layout, params: HsParams::new(g)?, trial, kinetic, docc, n_sites: n })
    }

    fn dressed(&self, config: &AuxFieldConfig) -> (StateVector, StateVector) {
        let a = self.params.alpha;
        let ket = apply_field(&self.trial, &self.layout, &config.slot_angles(Slot::Ket, a));
        let bra = apply_field(&self.trial, &self.layout, &config.slot_angles(Slot::Bra, -a));
        (bra, ket)
    }

    fn operator(&self, observable: &Observable) -> Result<PauliSum> {
        Ok(match observable {
            Observable::Kinetic => self.kinetic.clone(),
            Observable::DoubleOccupancy => self.docc.clone(),
            Observable::SpinProduct { up, down } => {
                let nq = self.layout.n_qubits();
                let a = crate::lattice::one_body_operator(up, nq, 0)?;
                let b = crate::lattice::one_body_operator(down, nq, self.n_sites)?;
                let mut terms = Vec::new();
                for x in a.terms() {
                    for y in b.terms() {
                        terms.push(crate::pauli::multiply(x, y)?);
                    }
                }
                PauliSum::from_terms(nq, terms)?
            }
        })
    }
}

impl Backend for StatevectorBackend {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn params(&self) -> &HsParams {
        &self.params
    }

    fn weight(&self, config: &AuxFieldConfig) -> Result<Weight> {
        let (bra, ket) = self.dressed(config);
        Ok(Weight { value: matrix_element(&bra, None, &ket)?, singular: false })
    }

    fn local(&self, config: &AuxFieldConfig, observable: &Observable) -> Result<Complex64> {
        let (bra, ket) = self.dressed(config);
        let den = matrix_element(&bra, None, &ket)?;
        if den.norm() < 1e-300 {
            return Err(Error::NearSingular { condition: f64::INFINITY });
        }
        let op = self.operator(observable)?;
        Ok(matrix_element(&bra, Some(&op), &ket)? / den)
    }
}

/// Per-spin Slater determinants and Green's functions.
pub struct DeterminantBackend {
    params: HsParams,
    up: SlaterState,
    down: SlaterState,
    hopping: DMatrix<Complex64>,
    same_orbitals: bool,
}

impl DeterminantBackend {
    pub fn new(lattice: &Lattice, j: f64, g: f64, up: &SlaterState, down: &SlaterState) -> Result<Self> {
        let n = lattice.n_sites();
        for s in [up, down] {
            if s.n_sites() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.n_sites() });
            }
        }
        Ok(Self {
            params: HsParams::new(g)?,
            up: up.clone(),
            down: down.clone(),
            hopping: lattice.hopping_matrix(j),
            same_orbitals: up == down,
        })
    }

    fn greens(&self, config: &AuxFieldConfig) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        let a = self.params.alpha;
        let tb = config.slot_angles(Slot::Bra, a);
        let tk = config.slot_angles(Slot::Ket, a);
        let gu = dressed_green(&self.up, &tb, &tk)?;
        let gd = if self.same_orbitals { gu.clone() } else { dressed_green(&self.down, &tb, &tk)? };
        Ok((gu, gd))
    }
}

impl Backend for DeterminantBackend {
    fn n_sites(&self) -> usize {
        self.up.n_sites()
    }

    fn params(&self) -> &HsParams {
        &self.params
    }

    fn weight(&self, config: &AuxFieldConfig) -> Result<Weight> {
        let theta = config.combined_angles(self.params.alpha);
        let wu = dressed_overlap(&self.up, &theta)?;
        let wd = if self.same_orbitals { wu } else { dressed_overlap(&self.down, &theta)? };
        Ok(Weight {
            value: wu.value * wd.value,
            singular: !(wu.condition <= MAX_CONDITION && wd.condition <= MAX_CONDITION),
        })
    }

    fn local(&self, config: &AuxFieldConfig, observable: &Observable) -> Result<Complex64> {
        let (gu, gd) = self.greens(config)?;
        Ok(match observable {
            Observable::Kinetic => trace_product(&self.hopping, &gu) + trace_product(&self.hopping, &gd),
            Observable::DoubleOccupancy => docc_from_greens(&gu, &gd),
            Observable::SpinProduct { up, down } => trace_product(up, &gu) * trace_product(down, &gd),
        })
    }

    fn local_kd(&self, config: &AuxFieldConfig) -> Result<LocalEstimates> {
        let (gu, gd) = self.greens(config)?;
        Ok(LocalEstimates {
            kinetic: trace_product(&self.hopping, &gu) + trace_product(&self.hopping, &gd),
            docc: docc_from_greens(&gu, &gd),
        })
    }
}

/// `sum_i (G_up_ii - 1/2)(G_dn_ii - 1/2)`.
fn docc_from_greens(gu: &DMatrix<Complex64>, gd: &DMatrix<Complex64>) -> Complex64 {
    let h = Complex64::new(0.5, 0.0);
    (0..gu.nrows()).map(|i| (gu[(i, i)] - h) * (gd[(i, i)] - h)).sum()
}

pub fn make_backend(
    kind: BackendKind,
    lattice: &Lattice,
    j: f64,
    g: f64,
    up: &SlaterState,
    down: &SlaterState,
) -> Result<Box<dyn Backend>> {
    Ok(match kind {
        BackendKind::Statevector => Box::new(StatevectorBackend::new(lattice, j, g, up, down)?),
        BackendKind::Determinant => Box::new(DeterminantBackend::new(lattice, j, g, up, down)?),
    })
}

/// `min(1, w_new / w_old)`.
pub fn acceptance_probability(w_old: f64, w_new: f64) -> f64 {
    if w_old <= 0.0 {
        return 1.0;
    }
    (w_new / w_old).clamp(0.0, 1.0)
}

/// Real part of a weight after the phase-problem check. Tolerances are
/// relative to `max(|w|, reference)`.
pub fn real_weight(w: Complex64, reference: f64) -> Result<f64> {
    let scale = w.norm().max(reference);
    if w.im.abs() > WEIGHT_IMAG_TOL * scale || w.re < -WEIGHT_NEG_TOL * scale {
        return Err(Error::PhaseProblem { re: w.re, im: w.im });
    }
    Ok(w.re.max(0.0))
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: AuxFieldConfig,
    pub weight: f64,
    pub proposals: u64,
    pub accepted: u64,
    /// Largest relative gap between the cached and a recomputed weight.
    pub max_drift: f64,
}

impl ChainState {
    /// Starts from all fields `+1`.
    pub fn new(backend: &dyn Backend) -> Result<Self> {
        let config = AuxFieldConfig::all_plus(backend.n_sites());
        let w = backend.weight(&config)?;
        let weight = real_weight(w.value, 0.0)?;
        if !(weight > 0.0) {
            return Err(Error::ZeroProbability(weight));
        }
        Ok(Self { config, weight, proposals: 0, accepted: 0, max_drift: 0.0 })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposals as f64
    }

    /// Recomputes the weight of the current configuration and records the drift.
    pub fn reanchor(&mut self, backend: &dyn Backend) -> Result<()> {
        let fresh = real_weight(backend.weight(&self.config)?.value, self.weight)?;
        let drift = (fresh - self.weight).abs() / fresh.abs().max(f64::MIN_POSITIVE);
        self.max_drift = self.max_drift.max(drift);
        self.weight = fresh;
        Ok(())
    }
}

/// One pass proposing a flip of every field once, site by site and ket
/// before bra. A uniform number is drawn for every proposal.
pub fn metropolis_sweep(chain: &mut ChainState, backend: &dyn Backend, rng: &mut impl Rng) -> Result<usize> {
    let mut accepted = 0;
    for i in 0..backend.n_sites() {
        for slot in Slot::BOTH {
            chain.config.flip(i, slot);
            let w = backend.weight(&chain.config)?;
            let u: f64 = rng.random();
            let new = real_weight(w.value, chain.weight)?;
            chain.proposals += 1;
            if !w.singular && u < acceptance_probability(chain.weight, new) {
                chain.weight = new;
                chain.accepted += 1;
                accepted += 1;
            } else {
                chain.config.flip(i, slot);
            }
        }
    }
    Ok(accepted)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    /// Measurement sweeps summed over all chains.
    pub n_sweeps: usize,
    /// Burn-in sweeps per chain; `None` means `max(n_sweeps / 10, 500)`.
    pub n_burnin: Option<usize>,
    pub n_bins: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub n_chains: usize,
}

impl McParams {
    pub fn new(n_sweeps: usize, seed: u64) -> Self {
        Self { n_sweeps, n_burnin: None, n_bins: 20, seed, backend: BackendKind::Determinant, n_chains: 1 }
    }

    pub fn burnin(&self) -> usize {
        self.n_burnin.unwrap_or((self.n_sweeps / 10).max(500))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 10 {
            return Err(Error::InvalidParameter(format!("need at least 10 bins, got {}", self.n_bins)));
        }
        if self.n_sweeps == 0 || self.n_sweeps % self.n_bins != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_sweeps {} is not a positive multiple of n_bins {}",
                self.n_sweeps, self.n_bins
            )));
        }
        if self.n_chains == 0 || self.n_bins % self.n_chains != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_bins {} is not a multiple of n_chains {}",
                self.n_bins, self.n_chains
            )));
        }
        Ok(())
    }

    /// Seed of chain `c`; chain 0 uses the master seed.
    pub fn chain_seed(&self, c: usize) -> u64 {
        if c == 0 {
            return self.seed;
        }
        derive_seed(self.seed, c as u64)
    }
}

/// SplitMix64 mix of `master + stream * golden`; distinct streams give
/// decorrelated seeds.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw per-sweep measurements of one or more chains.
#[derive(Clone, Debug, Default)]
pub struct McSamples {
    /// Bin means of `<K>_s` and `<D>_s`, chain by chain.
    pub kinetic_bins: Vec<f64>,
    pub docc_bins: Vec<f64>,
    pub proposals: u64,
    pub accepted: u64,
    pub flagged: usize,
    pub max_drift: f64,
    pub n_samples: usize,
}

impl McSamples {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposals as f64
    }
}

/// Runs one chain: burn-in, then one measurement of `K` and `D` per sweep.
pub fn run_chain(backend: &dyn Backend, sweeps: usize, burnin: usize, n_bins: usize, seed: u64) -> Result<McSamples> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut chain = ChainState::new(backend)?;
    for _ in 0..burnin {
        metropolis_sweep(&mut chain, backend, &mut rng)?;
    }
    chain.proposals = 0;
    chain.accepted = 0;
    let mut ks = Vec::with_capacity(sweeps);
    let mut ds = Vec::with_capacity(sweeps);
    let mut flagged = 0;
    let mut last = None;
    for _ in 0..sweeps {
        metropolis_sweep(&mut chain, backend, &mut rng)?;
        chain.reanchor(backend)?;
        match backend.local_kd(&chain.config) {
            Ok(l) => {
                last = Some(l);
                ks.push(l.kinetic.re);
                ds.push(l.docc.re);
            }
            Err(Error::NearSingular { .. }) => {
                // Repeat the previous measurement to keep bins aligned.
                flagged += 1;
                let l = last.ok_or(Error::NearSingular { condition: f64::INFINITY })?;
                ks.push(l.kinetic.re);
                ds.push(l.docc.re);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(McSamples {
        kinetic_bins: bin_means(&ks, n_bins)?,
        docc_bins: bin_means(&ds, n_bins)?,
        proposals: chain.proposals,
        accepted: chain.accepted,
        flagged,
        max_drift: chain.max_drift,
        n_samples: sweeps,
    })
}

/// Runs `params.n_chains` independent chains in parallel and pools their bins.
pub fn sample(backend: &dyn Backend, params: &McParams) -> Result<McSamples> {
    params.validate()?;
    let per_chain = params.n_sweeps / params.n_chains;
    let bins = params.n_bins / params.n_chains;
    let burnin = params.burnin();
    let runs: Vec<McSamples> = (0..params.n_chains)
        .into_par_iter()
        .map(|c| run_chain(backend, per_chain, burnin, bins, params.chain_seed(c)))
        .collect::<Result<_>>()?;
    let mut out = McSamples::default();
    for r in runs {
        out.kinetic_bins.extend(r.kinetic_bins);
        out.docc_bins.extend(r.docc_bins);
        out.proposals += r.proposals;
        out.accepted += r.accepted;
        out.flagged += r.flagged;
        out.max_drift = out.max_drift.max(r.max_drift);
        out.n_samples += r.n_samples;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub g: f64,
    pub u: f64,
    pub energy: EstimatorResult,
    pub kinetic: EstimatorResult,
    pub interaction: EstimatorResult,
    pub flagged: usize,
    pub max_drift: f64,
}

/// Estimates of `E = K + U D`, `K` and `U D` from pooled bins.
pub fn estimates(samples: &McSamples, g: f64, u: f64) -> McPoint {
    let acc = samples.acceptance_rate();
    let make = |name: &str, bins: Vec<f64>| {
        let (mean, stderr) = binned_estimate(&bins);
        EstimatorResult { name: name.to_string(), mean, stderr, n_samples: samples.n_samples, acceptance_rate: acc }
    };
    let e: Vec<f64> = samples.kinetic_bins.iter().zip(&samples.docc_bins).map(|(k, d)| k + u * d).collect();
    let ud: Vec<f64> = samples.docc_bins.iter().map(|d| u * d).collect();
    McPoint {
        g,
        u,
        energy: make("E", e),
        kinetic: make("K", samples.kinetic_bins.clone()),
        interaction: make("UD", ud),
        flagged: samples.flagged,
        max_drift: samples.max_drift,
    }
}

/// The sampled distribution does not depend on `U`, so one run serves
/// every interaction strength in `us`.
pub fn run_mc_multi_u(lattice: &Lattice, j: f64, us: &[f64], g: f64, params: &McParams) -> Result<Vec<McPoint>> {
    if let Some(&u) = us.iter().find(|&&u| !(u >= 0.0)) {
        return Err(Error::InvalidParameter(format!("interaction U must be nonnegative, got {u}")));
    }
    hubbard_terms(lattice, j, 0.0)?;
    let trial = half_filled_trial(lattice)?;
    let backend = make_backend(params.backend, lattice, j, g, &trial, &trial)?;
    let samples = sample(backend.as_ref(), params)?;
    Ok(us.iter().map(|&u| estimates(&samples, g, u)).collect())
}

pub fn run_mc(lattice: &Lattice, j: f64, u: f64, g: f64, params: &McParams) -> Result<McPoint> {
    Ok(run_mc_multi_u(lattice, j, &[u], g, params)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub n_configs: usize,
    pub max_imag: f64,
    pub min_real: f64,
    pub passed: bool,
}

/// Exhaustive scan of all `4^N` weights on the dense statevector.
pub fn phase_problem_check(lattice: &Lattice, g: f64, up: &SlaterState, down: &SlaterState) -> Result<PhaseReport> {
    let n = lattice.n_sites();
    if n > 5 {
        return Err(Error::TooLarge(format!("phase-problem enumeration is limited to 5 sites, got {n}")));
    }
    let backend = StatevectorBackend::new(lattice, 1.0, g, up, down)?;
    let weights: Vec<Complex64> = AuxFieldConfig::enumerate(n)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|c| backend.weight(c).map(|w| w.value))
        .collect::<Result<_>>()?;
    let max_imag = weights.iter().map(|w| w.im.abs()).fold(0.0, f64::max);
    let min_real = weights.iter().map(|w| w.re).fold(f64::INFINITY, f64::min);
    Ok(PhaseReport { n_configs: weights.len(), max_imag, min_real, passed: max_imag < 1e-10 && min_real >= -1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slater::ground_state_of_k;

    fn chain(n: usize) -> Lattice {
        Lattice::parse(&format!("chain:{n}")).unwrap()
    }

    fn backends(lat: &Lattice, g: f64) -> (StatevectorBackend, DeterminantBackend) {
        let t = half_filled_trial(lat).unwrap();
        (
            StatevectorBackend::new(lat, 1.0, g, &t, &t).unwrap(),
            DeterminantBackend::new(lat, 1.0, g, &t, &t).unwrap(),
        )
    }

    #[test]
    fn zero_g_weights_are_one() {
        let lat = chain(4);
        let (sv, det) = backends(&lat, 0.0);
        for c in AuxFieldConfig::enumerate(4).step_by(17) {
            assert!((sv.weight(&c).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!((det.weight(&c).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn cancelling_fields_give_trial_expectations() {
        let lat = chain(4);
        let (sv, det) = backends(&lat, 0.9);
        let c = AuxFieldConfig::from_fields(vec![[1, -1], [-1, 1], [1, -1], [1, -1]]).unwrap();
        let t = half_filled_trial(&lat).unwrap();
        let psi = slater_to_statevector(&t, &t, &lat.layout()).unwrap();
        let (k, d) = hubbard_terms(&lat, 1.0, 0.0).unwrap();
        // Diagonal observables commute with the fields; K sees the rotated trial.
        let rotated = apply_field(&psi, &lat.layout(), &c.slot_angles(Slot::Ket, HsParams::new(0.9).unwrap().alpha));
        for b in [&sv as &dyn Backend, &det] {
            assert!((b.weight(&c).unwrap().value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            let l = b.local_kd(&c).unwrap();
            assert!((l.kinetic - rotated.expectation(&k).unwrap()).norm() < 1e-12);
            assert!((l.docc - psi.expectation(&d).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn two_site_kinetic_at_zero_g() {
        let lat = chain(2);
        let (sv, det) = backends(&lat, 0.0);
        let c = AuxFieldConfig::from_index(2, 5);
        assert!((sv.local(&c, &Observable::Kinetic).unwrap() + 2.0).norm() < 1e-12);
        assert!((det.local(&c, &Observable::Kinetic).unwrap() + 2.0).norm() < 1e-12);
    }

    #[test]
    fn spin_product_backends_agree() {
        let lat = chain(4);
        let (sv, det) = backends(&lat, 0.7);
        let mut n0 = DMatrix::zeros(4, 4);
        n0[(0, 0)] = Complex64::new(1.0, 0.0);
        let obs = Observable::SpinProduct { up: n0.clone(), down: lat.hopping_matrix(1.0) };
        for c in AuxFieldConfig::enumerate(4).step_by(7) {
            let a = sv.local(&c, &obs).unwrap();
            let b = det.local(&c, &obs).unwrap();
            assert!((a - b).norm() < 1e-10 * a.norm().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn zero_g_acceptance_is_one() {
        let lat = chain(4);
        let (_, det) = backends(&lat, 0.0);
        let mut chain = ChainState::new(&det).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(metropolis_sweep(&mut chain, &det, &mut rng).unwrap(), 8);
        }
        assert_eq!(chain.acceptance_rate(), 1.0);
    }

    #[test]
    fn acceptance_rule() {
        assert_eq!(acceptance_probability(1.0, 2.0), 1.0);
        assert_eq!(acceptance_probability(2.0, 1.0), 0.5);
        assert_eq!(acceptance_probability(1.0, 0.0), 0.0);
    }

    #[test]
    fn weight_checks() {
        assert_eq!(real_weight(Complex64::new(0.5, 1e-14), 0.0).unwrap(), 0.5);
        assert!(real_weight(Complex64::new(0.5, 1e-3), 0.0).is_err());
        assert!(real_weight(Complex64::new(-0.5, 0.0), 0.0).is_err());
        assert_eq!(real_weight(Complex64::new(-1e-20, 1e-19), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn params_validation() {
        let mut p = McParams::new(2000, 1);
        assert!(p.validate().is_ok());
        assert_eq!(p.burnin(), 500);
        p.n_bins = 5;
        assert!(p.validate().is_err());
        p.n_bins = 30;
        assert!(p.validate().is_err());
        p.n_bins = 20;
        p.n_chains = 3;
        assert!(p.validate().is_err());
        p.n_chains = 4;
        assert!(p.validate().is_ok());
        assert_ne!(p.chain_seed(1), p.chain_seed(2));
        assert_eq!(p.chain_seed(0), 1);
        assert_eq!(McParams::new(100_000, 1).burnin(), 10_000);
    }

    #[test]
    fn same_seed_same_result() {
        let lat = chain(4);
        let mut p = McParams::new(400, 42);
        p.n_burnin = Some(50);
        let a = run_mc(&lat, 1.0, 2.0, 0.5, &p).unwrap();
        let b = run_mc(&lat, 1.0, 2.0, 0.5, &p).unwrap();
        assert_eq!(a, b);
        p.n_chains = 2;
        let c = run_mc(&lat, 1.0, 2.0, 0.5, &p).unwrap();
        assert_eq!(c.energy.n_samples, 400);
    }

    #[test]
    fn phase_check_small_chains() {
        for (n, g) in [(2, 1.0), (4, 0.5), (4, 2.0)] {
            let lat = chain(n);
            let t = half_filled_trial(&lat).unwrap();
            let r = phase_problem_check(&lat, g, &t, &t).unwrap();
            assert!(r.passed, "{n} {g}: {r:?}");
            assert_eq!(r.n_configs, 1 << (2 * n));
        }
        assert!(phase_problem_check(&chain(6), 1.0, &ground_state_of_k(&chain(6), 3).unwrap(), &ground_state_of_k(&chain(6), 3).unwrap()).is_err());
    }
}
