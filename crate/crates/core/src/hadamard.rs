//! Hadamard-test estimation of single-sector primitives
//! `P^O_s = <psi| u(s_bra) O u(s_ket) |psi>` with `u(s) = prod_i Rz(alpha s_i)`,
//! and the two-site energy assembled from them.
//!
//! The test circuit acts on the `N` sector qubits plus one ancilla, which is
//! the last (least significant) qubit.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gutzwiller::{AuxFieldConfig, HsParams, Slot};
use crate::lattice::Lattice;
use crate::mc::derive_seed;
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::slater::ground_state_of_k;
use crate::stats::{mean, std_dev};
use crate::statevector::{matrix_element, Gate, StateVector};

/// Coupling at which the strong-coupling anchor is measured.
pub const STRONG_COUPLING_G: f64 = 10.0;
/// Smallest reference magnitude `pas_correct` accepts.
pub const MIN_REFERENCE: f64 = 1e-6;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HadamardEstimate {
    pub real_part: f64,
    pub imag_part: f64,
    /// Shots spent on each of the two parts.
    pub shots: u64,
    pub real_stderr: f64,
    pub imag_stderr: f64,
}

impl HadamardEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.real_part, self.imag_part)
    }
}

/// Synthetic device error. A circuit with `m` controlled gates has its
/// ancilla expectation multiplied by
/// `scale^(m/4) exp(i phase m/4) (1 - drift sin^2 alpha)`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    pub scale: f64,
    pub phase: f64,
    pub drift: f64,
}

impl BiasModel {
    pub fn new(scale: f64, phase: f64) -> Result<Self> {
        Self::with_drift(scale, phase, 0.0)
    }

    pub fn with_drift(scale: f64, phase: f64, drift: f64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::InvalidParameter(format!("bias scale must lie in (0, 1], got {scale}")));
        }
        if !phase.is_finite() || !(0.0..1.0).contains(&drift) {
            return Err(Error::InvalidParameter(format!("bad bias phase {phase} or drift {drift}")));
        }
        Ok(Self { scale, phase, drift })
    }

    pub fn factor(&self, controlled_gates: usize, alpha: f64) -> Complex64 {
        let m = controlled_gates as f64 / 4.0;
        Complex64::from_polar(self.scale.powf(m), self.phase * m) * (1.0 - self.drift * alpha.sin().powi(2))
    }
}

fn check_inputs(config: &AuxFieldConfig, ops: &[Pauli], trial: &StateVector) -> Result<usize> {
    let n = config.n_sites();
    if ops.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ops.len() });
    }
    if trial.n_qubits() != n {
        return Err(Error::DimensionMismatch { expected: n, found: trial.n_qubits() });
    }
    Ok(n)
}

fn sector_rotations(config: &AuxFieldConfig, slot: Slot, alpha: f64) -> Vec<Gate> {
    config.slot_angles(slot, alpha).into_iter().enumerate().map(|(q, theta)| Gate::Rz { qubit: q, theta }).collect()
}

fn exact_with_alpha(config: &AuxFieldConfig, ops: &[Pauli], trial: &StateVector, alpha: f64) -> Result<Complex64> {
    let n = check_inputs(config, ops, trial)?;
    let mut ket = trial.clone();
    ket.apply_circuit(&sector_rotations(config, Slot::Ket, alpha))?;
    let mut bra = trial.clone();
    let inverse: Vec<Gate> = config
        .slot_angles(Slot::Bra, alpha)
        .into_iter()
        .enumerate()
        .map(|(q, theta)| Gate::Rz { qubit: q, theta: -theta })
        .collect();
    bra.apply_circuit(&inverse)?;
    let op = PauliSum::from_terms(n, vec![PauliTerm::new(Complex64::new(1.0, 0.0), ops.to_vec())])?;
    matrix_element(&bra, Some(&op), &ket)
}

/// `<psi| u(s_bra) O u(s_ket) |psi>` on one spin sector.
pub fn hadamard_exact(config: &AuxFieldConfig, ops: &[Pauli], trial: &StateVector, params: &HsParams) -> Result<Complex64> {
    exact_with_alpha(config, ops, trial, params.alpha)
}

/// Number of two-qubit gates in the test circuit.
pub fn controlled_gate_count(config: &AuxFieldConfig, ops: &[Pauli]) -> usize {
    2 * config.n_sites() + ops.iter().filter(|&&p| p != Pauli::I).count()
}

/// Test circuit on `N + 1` qubits. With `imaginary` set an `S^dagger` on the
/// ancilla precedes the final Hadamard.
pub fn hadamard_circuit(config: &AuxFieldConfig, ops: &[Pauli], alpha: f64, imaginary: bool) -> Result<Vec<Gate>> {
    let n = config.n_sites();
    if ops.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ops.len() });
    }
    let anc = n;
    let controlled = |slot: Slot| -> Vec<Gate> {
        config
            .slot_angles(slot, alpha)
            .into_iter()
            .enumerate()
            .map(|(q, theta)| Gate::Crz { control: anc, target: q, theta })
            .collect()
    };
    let mut gates = vec![Gate::H(anc)];
    gates.extend(controlled(Slot::Ket));
    for (q, &p) in ops.iter().enumerate() {
        let cx = Gate::Cnot { control: anc, target: q };
        match p {
            Pauli::I => {}
            Pauli::X => gates.push(cx),
            Pauli::Z => gates.extend([Gate::H(q), cx, Gate::H(q)]),
            Pauli::Y => gates.extend([
                Gate::Rz { qubit: q, theta: -FRAC_PI_2 },
                cx,
                Gate::Rz { qubit: q, theta: FRAC_PI_2 },
            ]),
        }
    }
    gates.extend(controlled(Slot::Bra));
    if imaginary {
        gates.push(Gate::Sdg(anc));
    }
    gates.push(Gate::H(anc));
    Ok(gates)
}

/// Probability of reading `0` on the ancilla.
pub fn ancilla_zero_probability(trial: &StateVector, circuit: &[Gate]) -> Result<f64> {
    let n = trial.n_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << (n + 1)];
    for (r, &a) in trial.amplitudes().iter().enumerate() {
        amps[r << 1] = a;
    }
    let mut whole = StateVector::from_amplitudes(n + 1, amps)?;
    whole.apply_circuit(circuit)?;
    Ok(whole.amplitudes().iter().step_by(2).map(|a| a.norm_sqr()).sum())
}

fn circuit_value(config: &AuxFieldConfig, ops: &[Pauli], trial: &StateVector, alpha: f64) -> Result<Complex64> {
    check_inputs(config, ops, trial)?;
    let re = 2.0 * ancilla_zero_probability(trial, &hadamard_circuit(config, ops, alpha, false)?)? - 1.0;
    let im = 2.0 * ancilla_zero_probability(trial, &hadamard_circuit(config, ops, alpha, true)?)? - 1.0;
    Ok(Complex64::new(re, im))
}

/// Noiseless ancilla statistics of the test circuit, as `2 P_0 - 1` for
/// both branches.
pub fn hadamard_circuit_value(config: &AuxFieldConfig, ops: &[Pauli], trial: &StateVector, params: &HsParams) -> Result<Complex64> {
    circuit_value(config, ops, trial, params.alpha)
}

fn sample_part(expectation: f64, shots: u64, rng: &mut ChaCha12Rng) -> (f64, f64) {
    let p0 = ((1.0 + expectation) / 2.0).clamp(0.0, 1.0);
    let n0 = Binomial::new(shots, p0).expect("p0 in [0, 1]").sample(rng);
    let est = 2.0 * n0 as f64 / shots as f64 - 1.0;
    (est, ((1.0 - est * est) / shots as f64).sqrt())
}

fn sample_value(value: Complex64, shots: u64, rng: &mut ChaCha12Rng) -> HadamardEstimate {
    let (real_part, real_stderr) = sample_part(value.re, shots, rng);
    let (imag_part, imag_stderr) = sample_part(value.im, shots, rng);
    HadamardEstimate { real_part, imag_part, shots, real_stderr, imag_stderr }
}

/// Shot-sampled Hadamard test: `shots` ancilla readouts for each of the real
/// and imaginary branches, optionally through a [`BiasModel`].
pub fn hadamard_shots(
    config: &AuxFieldConfig,
    ops: &[Pauli],
    trial: &StateVector,
    params: &HsParams,
    shots: u64,
    bias: Option<&BiasModel>,
    rng: &mut ChaCha12Rng,
) -> Result<HadamardEstimate> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let mut v = hadamard_circuit_value(config, ops, trial, params)?;
    if let Some(b) = bias {
        v *= b.factor(controlled_gate_count(config, ops), params.alpha);
    }
    Ok(sample_value(v, shots, rng))
}

/// Multiplies every value by `reference_ideal / reference_raw`.
pub fn pas_correct(values: &[Complex64], reference_raw: Complex64, reference_ideal: Complex64) -> Result<Vec<Complex64>> {
    if reference_raw.norm() < MIN_REFERENCE {
        return Err(Error::UnreliableReference(reference_raw.norm()));
    }
    if reference_ideal == Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidParameter("reference ideal value must be nonzero".into()));
    }
    let f = reference_ideal / reference_raw;
    Ok(values.iter().map(|v| v * f).collect())
}

/// Two-site circuit families.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    II,
    ZI,
    XX,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::II, Family::ZI, Family::XX];

    pub fn ops(self) -> [Pauli; 2] {
        match self {
            Family::II => [Pauli::I, Pauli::I],
            Family::ZI => [Pauli::Z, Pauli::I],
            Family::XX => [Pauli::X, Pauli::X],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::II => "II",
            Family::ZI => "ZI",
            Family::XX => "XX",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Bonding orbital of one spin sector, `(|01> + |10>)/sqrt 2`.
pub fn two_site_sector_trial() -> Result<StateVector> {
    let lat = Lattice::parse("chain:2")?;
    Ok(ground_state_of_k(&lat, 1)?.to_sector_statevector())
}

/// Values of the three families over the 16 two-site configurations, in
/// [`AuxFieldConfig::enumerate`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Primitives {
    pub values: [Vec<Complex64>; 3],
}

impl Primitives {
    pub fn family(&self, f: Family) -> &[Complex64] {
        &self.values[f.index()]
    }

    fn build(mut f: impl FnMut(Family, &AuxFieldConfig) -> Result<Complex64>) -> Result<Self> {
        let configs: Vec<_> = AuxFieldConfig::enumerate(2).collect();
        let mut values: [Vec<Complex64>; 3] = Default::default();
        for fam in Family::ALL {
            values[fam.index()] = configs.iter().map(|c| f(fam, c)).collect::<Result<_>>()?;
        }
        Ok(Self { values })
    }
}

fn primitives_with_alpha(trial: &StateVector, alpha: f64) -> Result<Primitives> {
    Primitives::build(|fam, c| exact_with_alpha(c, &fam.ops(), trial, alpha))
}

pub fn exact_primitives(g: f64) -> Result<Primitives> {
    primitives_with_alpha(&two_site_sector_trial()?, HsParams::new(g)?.alpha)
}

/// Exact primitives in the `g -> infinity` limit, `alpha = pi/2`.
pub fn strong_coupling_primitives() -> Result<Primitives> {
    primitives_with_alpha(&two_site_sector_trial()?, FRAC_PI_2)
}

/// Assembled two-site quantities. `denominator` is `<exp(-2gD)>`, the
/// numerators are `<exp(-gD) O exp(-gD)>` for `O = Z_0up Z_0dn` and
/// `X_0up X_1up`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assembled {
    pub denominator: f64,
    pub zz_numerator: f64,
    pub xx_numerator: f64,
}

impl Assembled {
    pub fn energies(&self, j: f64, u: f64) -> (f64, f64, f64) {
        let k = -2.0 * j * self.xx_numerator / self.denominator;
        let ud = u * 0.5 * self.zz_numerator / self.denominator;
        (k + ud, k, ud)
    }
}

/// Spin-down factors equal the spin-up ones, so each configuration
/// contributes a product of two same-config primitives.
pub fn assemble(p: &Primitives, g: f64) -> Result<Assembled> {
    let gamma4 = HsParams::new(g)?.gamma.powi(4);
    let ii = p.family(Family::II);
    let dot = |a: &[Complex64]| -> f64 { (a.iter().zip(ii).map(|(x, y)| x * y).sum::<Complex64>() * gamma4).re };
    let zi = p.family(Family::ZI);
    Ok(Assembled {
        denominator: dot(ii),
        zz_numerator: (zi.iter().map(|z| z * z).sum::<Complex64>() * gamma4).re,
        xx_numerator: dot(p.family(Family::XX)),
    })
}

/// `(E, K, U<D>)` from exact primitives.
pub fn two_site_exact_energy(j: f64, u: f64, g: f64) -> Result<(f64, f64, f64)> {
    Ok(assemble(&exact_primitives(g)?, g)?.energies(j, u))
}

/// Anchors: per configuration at `g = 0` for `II` and `XX`, one family-wide
/// projection against the strong-coupling values for `ZI`.
#[derive(Clone, Debug, PartialEq)]
pub struct PasReferences {
    pub raw_zero: Primitives,
    pub raw_strong: Primitives,
    pub ideal_zero: Primitives,
    pub ideal_strong: Primitives,
}

pub fn mitigate(raw: &Primitives, refs: &PasReferences) -> Result<Primitives> {
    let mut values: [Vec<Complex64>; 3] = Default::default();
    for fam in [Family::II, Family::XX] {
        let k = fam.index();
        values[k] = raw.values[k]
            .iter()
            .zip(&refs.raw_zero.values[k])
            .zip(&refs.ideal_zero.values[k])
            .map(|((&v, &r), &i)| Ok(pas_correct(&[v], r, i)?[0]))
            .collect::<Result<_>>()?;
    }
    let k = Family::ZI.index();
    let ideal = &refs.ideal_strong.values[k];
    let ref_raw: Complex64 = ideal.iter().zip(&refs.raw_strong.values[k]).map(|(i, r)| i.conj() * r).sum();
    let ref_ideal: Complex64 = ideal.iter().map(|i| Complex64::new(i.norm_sqr(), 0.0)).sum();
    values[k] = pas_correct(&raw.values[k], ref_raw, ref_ideal)?;
    Ok(Primitives { values })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotSettings {
    pub shots: u64,
    pub reps: usize,
    pub bias: Option<BiasModel>,
    pub seed: u64,
}

impl ShotSettings {
    pub fn new(seed: u64) -> Self {
        Self { shots: 8192, reps: 16, bias: None, seed }
    }
}

/// Raw and mitigated primitives, indexed `[rep][g]`.
#[derive(Clone, Debug)]
pub struct PrimitiveRuns {
    pub g_grid: Vec<f64>,
    pub raw: Vec<Vec<Primitives>>,
    pub mitigated: Vec<Vec<Primitives>>,
}

/// Shot-samples every family and configuration at each grid point and at
/// the two anchors, `reps` times. Each `(rep, point, family, config)` batch
/// draws from its own stream derived from the master seed.
pub fn run_primitives(g_grid: &[f64], settings: &ShotSettings) -> Result<PrimitiveRuns> {
    if settings.shots == 0 || settings.reps == 0 {
        return Err(Error::InvalidParameter("shots and reps must be at least 1".into()));
    }
    if g_grid.is_empty() {
        return Err(Error::InvalidParameter("empty g grid".into()));
    }
    let trial = two_site_sector_trial()?;
    let points: Vec<f64> = [0.0, STRONG_COUPLING_G].into_iter().chain(g_grid.iter().copied()).collect();
    let params: Vec<HsParams> = points.iter().map(|&g| HsParams::new(g)).collect::<Result<_>>()?;
    let configs: Vec<_> = AuxFieldConfig::enumerate(2).collect();

    let mut noiseless = Vec::with_capacity(points.len());
    for p in &params {
        noiseless.push(Primitives::build(|fam, c| {
            let ops = fam.ops();
            let mut v = circuit_value(c, &ops, &trial, p.alpha)?;
            if let Some(b) = &settings.bias {
                v *= b.factor(controlled_gate_count(c, &ops), p.alpha);
            }
            Ok(v)
        })?);
    }

    let n_cfg = configs.len();
    let per_rep = points.len() * 3 * n_cfg;
    let sampled: Vec<Complex64> = (0..settings.reps * per_rep)
        .into_par_iter()
        .map(|stream| {
            let rest = stream % per_rep;
            let (point, fam, cfg) = (rest / (3 * n_cfg), rest / n_cfg % 3, rest % n_cfg);
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(settings.seed, stream as u64));
            sample_value(noiseless[point].values[fam][cfg], settings.shots, &mut rng).value()
        })
        .collect();

    let ideal_zero = primitives_with_alpha(&trial, 0.0)?;
    let ideal_strong = primitives_with_alpha(&trial, FRAC_PI_2)?;
    let mut raw = Vec::with_capacity(settings.reps);
    let mut mitigated = Vec::with_capacity(settings.reps);
    for rep in sampled.chunks(per_rep) {
        let sets: Vec<Primitives> = rep
            .chunks(3 * n_cfg)
            .map(|c| Primitives { values: [0, 1, 2].map(|f| c[f * n_cfg..(f + 1) * n_cfg].to_vec()) })
            .collect();
        let refs = PasReferences {
            raw_zero: sets[0].clone(),
            raw_strong: sets[1].clone(),
            ideal_zero: ideal_zero.clone(),
            ideal_strong: ideal_strong.clone(),
        };
        let grid_sets = sets[2..].to_vec();
        mitigated.push(grid_sets.iter().map(|p| mitigate(p, &refs)).collect::<Result<Vec<_>>>()?);
        raw.push(grid_sets);
    }
    Ok(PrimitiveRuns { g_grid: g_grid.to_vec(), raw, mitigated })
}

/// Mean and standard deviation over repetitions.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepStat {
    pub mean: f64,
    pub err: f64,
}

impl RepStat {
    fn of(xs: &[f64]) -> Self {
        Self { mean: mean(xs), err: std_dev(xs) }
    }

    /// `|mean - target| <= k err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.err
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPoint {
    pub g: f64,
    pub e: RepStat,
    pub k: RepStat,
    pub ud: RepStat,
    pub denominator: RepStat,
    pub zz_numerator: RepStat,
    pub xx_numerator: RepStat,
}

/// Per-g repetition statistics of the energies assembled from `sets[rep][g]`.
pub fn shot_curve(g_grid: &[f64], sets: &[Vec<Primitives>], j: f64, u: f64) -> Result<Vec<ShotPoint>> {
    g_grid
        .iter()
        .enumerate()
        .map(|(k, &g)| {
            let a: Vec<Assembled> = sets.iter().map(|rep| assemble(&rep[k], g)).collect::<Result<_>>()?;
            let en: Vec<(f64, f64, f64)> = a.iter().map(|x| x.energies(j, u)).collect();
            let col = |f: &dyn Fn(usize) -> f64| RepStat::of(&(0..a.len()).map(f).collect::<Vec<_>>());
            Ok(ShotPoint {
                g,
                e: col(&|r| en[r].0),
                k: col(&|r| en[r].1),
                ud: col(&|r| en[r].2),
                denominator: col(&|r| a[r].denominator),
                zz_numerator: col(&|r| a[r].zz_numerator),
                xx_numerator: col(&|r| a[r].xx_numerator),
            })
        })
        .collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSiteShotResult {
    pub raw: ShotPoint,
    pub mitigated: ShotPoint,
}

/// Single-point shot run: `E, K, U<D>` with repetition errors, raw and
/// PaS-corrected.
pub fn two_site_energy_from_primitives(j: f64, u: f64, g: f64, settings: &ShotSettings) -> Result<TwoSiteShotResult> {
    let runs = run_primitives(&[g], settings)?;
    Ok(TwoSiteShotResult {
        raw: shot_curve(&runs.g_grid, &runs.raw, j, u)?[0],
        mitigated: shot_curve(&runs.g_grid, &runs.mitigated, j, u)?[0],
    })
}
