//! Discrete Hubbard-Stratonovich machinery for the Gutzwiller factor
//! `exp(-g D)`.
//!
//! Per site, `exp(-g (n_up - 1/2)(n_dn - 1/2)) = gamma sum_{s=+-1} exp(i alpha s (n_up + n_dn - 1))`
//! with `alpha = arccos(exp(-g/2))` and `gamma = exp(g/4)/2`. Under the
//! qubit mapping the field unitary is `Rz(s alpha) (x) Rz(s alpha)` exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{QubitLayout, Spin};
use crate::pauli::PauliSum;
use crate::slater::SlaterState;
use crate::statevector::{matrix_element, Gate, StateVector};

/// Largest lattice for the explicit `4^N` field enumeration.
pub const MAX_ENUMERATION_SITES: usize = 7;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsParams {
    pub g: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl HsParams {
    pub fn new(g: f64) -> Result<Self> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!("g must be finite and nonnegative, got {g}")));
        }
        Ok(Self { g, alpha: (-g / 2.0).exp().acos(), gamma: (g / 4.0).exp() / 2.0 })
    }
}

pub fn hs_params(g: f64) -> Result<HsParams> {
    HsParams::new(g)
}

/// Max elementwise deviation between the two sides of the one-site identity
/// on the `|n_up n_dn>` basis.
pub fn verify_hs_identity(g: f64) -> Result<f64> {
    let p = HsParams::new(g)?;
    let mut dev = 0.0f64;
    for b in 0..4u32 {
        let (nu, nd) = ((b >> 1) as f64, (b & 1) as f64);
        let lhs = (-g * (nu - 0.5) * (nd - 0.5)).exp();
        let rhs: Complex64 =
            [1.0, -1.0].iter().map(|s| Complex64::from_polar(p.gamma, p.alpha * s * (nu + nd - 1.0))).sum();
        dev = dev.max((rhs - lhs).norm());
    }
    Ok(dev)
}

/// Field slot: `Ket` dresses `|psi_0>`, `Bra` dresses `<psi_0|`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Ket,
    Bra,
}

impl Slot {
    pub const BOTH: [Slot; 2] = [Slot::Ket, Slot::Bra];

    pub fn index(self) -> usize {
        match self {
            Slot::Ket => 0,
            Slot::Bra => 1,
        }
    }
}

/// Auxiliary fields `s_{i,slot} = +-1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuxFieldConfig {
    s: Vec<[i8; 2]>,
}

impl AuxFieldConfig {
    pub fn all_plus(n_sites: usize) -> Self {
        Self { s: vec![[1, 1]; n_sites] }
    }

    /// `fields[i] = [s_ket, s_bra]`.
    pub fn from_fields(fields: Vec<[i8; 2]>) -> Result<Self> {
        if fields.iter().flatten().any(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter("auxiliary fields must be +1 or -1".into()));
        }
        Ok(Self { s: fields })
    }

    /// Decodes `2N` bits: bit `i` is the ket field of site `i`, bit `N + i` the
    /// bra field; a set bit means `-1`.
    pub fn from_index(n_sites: usize, index: u64) -> Self {
        let s = (0..n_sites)
            .map(|i| {
                let f = |bit: usize| if index >> bit & 1 == 1 { -1 } else { 1 };
                [f(i), f(n_sites + i)]
            })
            .collect();
        Self { s }
    }

    pub fn index(&self) -> u64 {
        let n = self.s.len();
        let mut idx = 0u64;
        for (i, f) in self.s.iter().enumerate() {
            if f[0] < 0 {
                idx |= 1 << i;
            }
            if f[1] < 0 {
                idx |= 1 << (n + i);
            }
        }
        idx
    }

    /// All `4^N` configurations in index order.
    pub fn enumerate(n_sites: usize) -> impl Iterator<Item = AuxFieldConfig> {
        (0..1u64 << (2 * n_sites)).map(move |k| AuxFieldConfig::from_index(n_sites, k))
    }

    pub fn n_sites(&self) -> usize {
        self.s.len()
    }

    pub fn get(&self, site: usize, slot: Slot) -> i8 {
        self.s[site][slot.index()]
    }

    pub fn flip(&mut self, site: usize, slot: Slot) {
        self.s[site][slot.index()] *= -1;
    }

    pub fn fields(&self) -> &[[i8; 2]] {
        &self.s
    }

    /// Per-site angles `alpha s_{i,slot}`.
    pub fn slot_angles(&self, slot: Slot, alpha: f64) -> Vec<f64> {
        self.s.iter().map(|f| alpha * f[slot.index()] as f64).collect()
    }

    /// Per-site angles `alpha (s_{i,ket} + s_{i,bra})`.
    pub fn combined_angles(&self, alpha: f64) -> Vec<f64> {
        self.s.iter().map(|f| alpha * (f[0] + f[1]) as f64).collect()
    }
}

/// `prod_i exp(i theta_i (n_{i up} + n_{i dn} - 1))` as a diagonal phase of
/// basis index `b`.
pub fn field_phase(layout: &QubitLayout, theta: &[f64], b: u64) -> Complex64 {
    let n = layout.n_sites();
    let (up, dn) = layout.split(b);
    let mut phase = 0.0;
    for (i, t) in theta.iter().enumerate() {
        let bit = n - 1 - i;
        let occ = ((up >> bit) & 1) + ((dn >> bit) & 1);
        phase += t * (occ as f64 - 1.0);
    }
    Complex64::from_polar(1.0, phase)
}

/// `U(theta)|state>` for per-site angles `theta`.
pub fn apply_field(state: &StateVector, layout: &QubitLayout, theta: &[f64]) -> StateVector {
    let mut out = state.clone();
    out.apply_diagonal(|b| field_phase(layout, theta, b));
    out
}

/// Rotations `Rz(s_{i,slot} alpha)` on both spin qubits of every site.
pub fn field_rotation_circuit(config: &AuxFieldConfig, slot: Slot, params: &HsParams, layout: &QubitLayout) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(2 * config.n_sites());
    for i in 0..config.n_sites() {
        let theta = config.get(i, slot) as f64 * params.alpha;
        for spin in Spin::BOTH {
            gates.push(Gate::Rz { qubit: layout.qubit(i, spin), theta });
        }
    }
    gates
}

/// `exp(-g D)|state>` for diagonal `D`, not renormalized.
pub fn apply_gutzwiller_exact(state: &StateVector, g: f64, d: &PauliSum) -> Result<StateVector> {
    if d.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch { expected: state.n_qubits(), found: d.n_qubits() });
    }
    if !d.is_diagonal() {
        return Err(Error::NotDiagonal);
    }
    let mut out = state.clone();
    out.apply_diagonal(|b| {
        let v = d.diagonal_value(b).expect("diagonal operator").re;
        Complex64::new((-g * v).exp(), 0.0)
    });
    Ok(out)
}

/// `<psi_g|O|psi_g>` for each observable with `psi_g` the normalized
/// `exp(-g D)|trial>`.
pub fn gutzwiller_expectations(trial: &StateVector, g: f64, d: &PauliSum, observables: &[&PauliSum]) -> Result<Vec<f64>> {
    let mut psi = apply_gutzwiller_exact(trial, g, d)?;
    psi.normalize();
    observables.iter().map(|o| psi.expectation(o).map(|v| v.re)).collect()
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Explicit double sum over all `4^N` field configurations of
/// `<psi_0|U(s_bra) O U(s_ket)|psi_0>`, divided by the same sum without `O`.
pub fn full_sum_expectation(observable: &PauliSum, g: f64, trial: &StateVector, layout: &QubitLayout) -> Result<f64> {
    Ok(full_sum_expectations(&[observable], g, trial, layout)?[0])
}

pub fn full_sum_expectations(
    observables: &[&PauliSum],
    g: f64,
    trial: &StateVector,
    layout: &QubitLayout,
) -> Result<Vec<f64>> {
    let n = layout.n_sites();
    if n > MAX_ENUMERATION_SITES {
        return Err(Error::TooLarge(format!("{n} sites exceeds the {MAX_ENUMERATION_SITES}-site enumeration limit")));
    }
    if trial.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch { expected: layout.n_qubits(), found: trial.n_qubits() });
    }
    let p = HsParams::new(g)?;
    let singles: Vec<AuxFieldConfig> = (0..1u64 << n).map(|k| AuxFieldConfig::from_index(n, k)).collect();
    // U(s)|psi_0> for every single-slot configuration, and the bra-side
    // vectors U(-s)|psi_0> so that <psi_0|U(s) = (U(-s)|psi_0>)^dagger.
    let kets: Vec<StateVector> =
        singles.par_iter().map(|c| apply_field(trial, layout, &c.slot_angles(Slot::Ket, p.alpha))).collect();
    let bras: Vec<StateVector> = singles
        .par_iter()
        .map(|c| {
            let neg: Vec<f64> = c.slot_angles(Slot::Ket, -p.alpha);
            apply_field(trial, layout, &neg)
        })
        .collect();
    let mut ops: Vec<Option<&PauliSum>> = vec![None];
    ops.extend(observables.iter().map(|o| Some(*o)));
    let mut sums = Vec::with_capacity(ops.len());
    for op in ops {
        let o_kets: Vec<StateVector> = match op {
            None => kets.clone(),
            Some(o) => kets.par_iter().map(|k| k.apply_pauli_sum(o)).collect::<Result<_>>()?,
        };
        let terms: Vec<Complex64> = bras
            .par_iter()
            .flat_map_iter(|bra| o_kets.iter().map(move |k| matrix_element(bra, None, k).expect("same register")))
            .collect();
        sums.push(pairwise_sum(&terms));
    }
    let den = sums[0];
    if den.norm() < 1e-300 {
        return Err(Error::ZeroProbability(den.norm()));
    }
    Ok(sums[1..].iter().map(|s| (s / den).re).collect())
}

/// Weight of `|psi_0|^2` on basis states grouped by the number `m` of sites
/// with exactly one spin, for a product `|psi_up> (x) |psi_dn>`.
///
/// `D` takes the value `(N - 2m)/4` on such states, so every diagonal
/// function of `D` reduces to a sum over `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleOccupancyHistogram {
    n_sites: usize,
    weights: Vec<f64>,
}

impl DoubleOccupancyHistogram {
    pub fn new(up: &SlaterState, down: &SlaterState) -> Result<Self> {
        let n = up.n_sites();
        if down.n_sites() != n {
            return Err(Error::DimensionMismatch { expected: n, found: down.n_sites() });
        }
        let probs = |s: &SlaterState| -> Vec<(u64, f64)> {
            (0..1u64 << n)
                .filter(|b| b.count_ones() as usize == s.n_particles())
                .map(|b| (b, s.amplitude(b).norm_sqr()))
                .collect()
        };
        let (pu, pd) = (probs(up), probs(down));
        let mut weights = vec![0.0; n + 1];
        for &(u, wu) in &pu {
            for &(d, wd) in &pd {
                weights[(u ^ d).count_ones() as usize] += wu * wd;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { n_sites: n, weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn d_value(&self, m: usize) -> f64 {
        (self.n_sites as f64 - 2.0 * m as f64) / 4.0
    }

    /// `ln <psi_0|exp(-2 g D)|psi_0>`.
    pub fn log_norm(&self, g: f64) -> f64 {
        let logs: Vec<f64> = (0..=self.n_sites)
            .filter(|&m| self.weights[m] > 0.0)
            .map(|m| self.weights[m].ln() - 2.0 * g * self.d_value(m))
            .collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
    }

    /// `<psi_g|D|psi_g>`.
    pub fn docc(&self, g: f64) -> f64 {
        let ln_z = self.log_norm(g);
        (0..=self.n_sites)
            .filter(|&m| self.weights[m] > 0.0)
            .map(|m| self.d_value(m) * (self.weights[m].ln() - 2.0 * g * self.d_value(m) - ln_z).exp())
            .sum()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSitePoint {
    pub g: f64,
    pub e: f64,
    pub k: f64,
    pub ud: f64,
}

/// Closed-form two-site energies with the bonding-orbital trial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoSiteCurves {
    pub j: f64,
    pub u: f64,
    pub points: Vec<TwoSitePoint>,
    pub g_opt: f64,
    pub e_opt: f64,
}

pub fn two_site_point(j: f64, u: f64, g: f64) -> TwoSitePoint {
    let k = -2.0 * j / g.cosh();
    let ud = -0.5 * u * g.tanh();
    TwoSitePoint { g, e: k + ud, k, ud }
}

pub fn two_site_curves(j: f64, u: f64, g_grid: &[f64]) -> Result<TwoSiteCurves> {
    if !(j > 0.0) {
        return Err(Error::InvalidParameter(format!("J must be positive, got {j}")));
    }
    let g_opt = (u / (4.0 * j)).asinh();
    let e_opt = -(4.0 * j * j + u * u / 4.0).sqrt();
    let points = g_grid.iter().map(|&g| two_site_point(j, u, g)).collect();
    Ok(TwoSiteCurves { j, u, points, g_opt, e_opt })
}

/// `min, min + step, ...` up to `max` inclusive (within half a step).
pub fn g_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidParameter(format!("bad g grid {min}..{max} step {step}")));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| min + k as f64 * step).collect())
}

pub fn default_g_grid() -> Vec<f64> {
    g_grid(0.0, 2.0, 0.1).expect("valid default grid")
}

/// Dense `4x4` matrix of the field unitary for one site, basis `|n_up n_dn>`.
pub fn site_field_matrix(alpha: f64, s: i8) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(4, 4);
    for b in 0..4usize {
        let occ = ((b >> 1) + (b & 1)) as f64;
        m[(b, b)] = Complex64::from_polar(1.0, alpha * s as f64 * (occ - 1.0));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{double_occupancy_term, hubbard_terms, Lattice};
    use crate::slater::{ground_state_of_k, slater_to_statevector};
    use crate::statevector::circuit_unitary;

    fn trial(spec: &str) -> (Lattice, StateVector) {
        let lat = Lattice::parse(spec).unwrap();
        let s = ground_state_of_k(&lat, lat.n_sites() / 2).unwrap();
        let sv = slater_to_statevector(&s, &s, &lat.layout()).unwrap();
        (lat, sv)
    }

    #[test]
    fn params() {
        let p = HsParams::new(0.0).unwrap();
        assert_eq!((p.alpha, p.gamma), (0.0, 0.5));
        let p = HsParams::new(0.5).unwrap();
        assert!((p.alpha - 0.678045).abs() < 1e-6);
        assert!((p.gamma - 0.56658).abs() < 1e-5);
        let p = HsParams::new(60.0).unwrap();
        assert!((p.alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(HsParams::new(-0.1).is_err());
        assert!(HsParams::new(f64::NAN).is_err());
    }

    #[test]
    fn identity_deviation() {
        assert_eq!(verify_hs_identity(0.0).unwrap(), 0.0);
        assert!(verify_hs_identity(1.0).unwrap() < 1e-14);
        assert!(verify_hs_identity(10.0).unwrap() < 1e-12);
    }

    #[test]
    fn config_index_roundtrip() {
        for k in 0..256 {
            let c = AuxFieldConfig::from_index(4, k);
            assert_eq!(c.index(), k);
        }
        assert!(AuxFieldConfig::from_fields(vec![[1, 0]]).is_err());
        assert_eq!(AuxFieldConfig::enumerate(2).count(), 16);
    }

    #[test]
    fn rotation_circuit_matrix() {
        let layout = QubitLayout::new(1);
        let p = HsParams::new(0.8).unwrap();
        let c = AuxFieldConfig::all_plus(1);
        let u = circuit_unitary(2, &field_rotation_circuit(&c, Slot::Ket, &p, &layout)).unwrap();
        let a = p.alpha;
        let expect = [Complex64::from_polar(1.0, -a), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, a)];
        for r in 0..4 {
            for col in 0..4 {
                let e = if r == col { expect[r] } else { Complex64::new(0.0, 0.0) };
                assert!((u[(r, col)] - e).norm() < 1e-15);
            }
        }
        assert!((u - site_field_matrix(a, 1)).map(|c| c.norm()).max() < 1e-15);
    }

    #[test]
    fn rotation_inverse_and_zero_angle() {
        let layout = QubitLayout::new(2);
        let p = HsParams::new(1.3).unwrap();
        let mut c = AuxFieldConfig::from_fields(vec![[1, -1], [-1, 1]]).unwrap();
        let mut gates = field_rotation_circuit(&c, Slot::Ket, &p, &layout);
        c.flip(0, Slot::Ket);
        c.flip(1, Slot::Ket);
        gates.extend(field_rotation_circuit(&c, Slot::Ket, &p, &layout));
        let u = circuit_unitary(4, &gates).unwrap();
        assert!((u - DMatrix::identity(16, 16)).map(|c| c.norm()).max() < 1e-14);
        let zero = HsParams::new(0.0).unwrap();
        for g in field_rotation_circuit(&c, Slot::Bra, &zero, &layout) {
            assert!(matches!(g, Gate::Rz { theta, .. } if theta == 0.0));
        }
    }

    #[test]
    fn two_site_norm_is_cosh() {
        let (lat, sv) = trial("chain:2");
        let d = double_occupancy_term(&lat);
        for g in [0.0, 0.5, 1.7] {
            let out = apply_gutzwiller_exact(&sv, g, &d).unwrap();
            // ||exp(-gD) psi||^2 = <psi|exp(-2gD)|psi>
            assert!((out.norm_sqr() - g.cosh()).abs() < 1e-12 * g.cosh());
        }
        assert_eq!(apply_gutzwiller_exact(&sv, 0.0, &d).unwrap(), sv);
        let v = gutzwiller_expectations(&sv, 30.0, &d, &[&d]).unwrap();
        assert!((v[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn full_sum_two_site_kinetic() {
        let (lat, sv) = trial("chain:2");
        let (k, _) = hubbard_terms(&lat, 1.0, 4.0).unwrap();
        for g in [0.0, 0.4, 1.1] {
            let v = full_sum_expectation(&k, g, &sv, &lat.layout()).unwrap();
            assert!((v + 2.0 / g.cosh()).abs() < 1e-12, "g={g}: {v}");
        }
    }

    #[test]
    fn full_sum_matches_exact_route_chain4() {
        let (lat, sv) = trial("chain:4");
        let (k, d) = hubbard_terms(&lat, 1.0, 2.0).unwrap();
        let fs = full_sum_expectations(&[&k, &d], 0.5, &sv, &lat.layout()).unwrap();
        let ex = gutzwiller_expectations(&sv, 0.5, &d, &[&k, &d]).unwrap();
        assert!((fs[0] - ex[0]).abs() < 1e-10);
        assert!((fs[1] - ex[1]).abs() < 1e-10);
        let g0 = full_sum_expectation(&k, 0.0, &sv, &lat.layout()).unwrap();
        assert!((g0 - sv.expectation(&k).unwrap().re).abs() < 1e-12);
    }

    #[test]
    fn full_sum_size_limit() {
        let (lat, sv) = trial("chain:2");
        let big = QubitLayout::new(8);
        let d = double_occupancy_term(&lat);
        assert!(matches!(full_sum_expectation(&d, 0.1, &sv, &big), Err(Error::TooLarge(_))));
    }

    #[test]
    fn histogram_matches_statevector() {
        let lat = Lattice::parse("chain:6").unwrap();
        let s = ground_state_of_k(&lat, 3).unwrap();
        let sv = slater_to_statevector(&s, &s, &lat.layout()).unwrap();
        let d = double_occupancy_term(&lat);
        let h = DoubleOccupancyHistogram::new(&s, &s).unwrap();
        for g in [0.0, 0.3, 2.0, 9.0] {
            let out = apply_gutzwiller_exact(&sv, g, &d).unwrap();
            assert!((out.norm_sqr().ln() - h.log_norm(g)).abs() < 1e-12);
            let v = gutzwiller_expectations(&sv, g, &d, &[&d]).unwrap()[0];
            assert!((v - h.docc(g)).abs() < 1e-12);
        }
    }

    #[test]
    fn curves() {
        let c = two_site_curves(1.0, 4.0, &default_g_grid()).unwrap();
        assert!((c.g_opt - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-12);
        assert!((c.e_opt + 8f64.sqrt()).abs() < 1e-12);
        let p = two_site_point(1.0, 4.0, 0.5);
        assert!((p.e + 2.697872).abs() < 1e-6);
        assert!(c.points.iter().all(|p| p.e >= c.e_opt - 1e-12));
        let c0 = two_site_curves(1.0, 0.0, &[0.0]).unwrap();
        assert_eq!((c0.g_opt, c0.e_opt), (0.0, -2.0));
        assert!(two_site_curves(0.0, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn grids() {
        let g = default_g_grid();
        assert_eq!(g.len(), 21);
        assert!((g[20] - 2.0).abs() < 1e-12);
        assert_eq!(g_grid(0.0, 2.0, 0.2).unwrap().len(), 11);
        assert!(g_grid(1.0, 0.0, 0.1).is_err());
        assert!(g_grid(0.0, 1.0, 0.0).is_err());
    }
}
