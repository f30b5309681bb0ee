//! Two quantum Rabi systems coupled through a flux-modulated SQUID.

use serde::{Deserialize, Serialize};

use crate::drive::Envelope;
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{kron, CsrMatrix, RMatrix, C64};
use crate::propagate::{first_local_maximum, propagate_observe, StepOptions, TermHamiltonian};
use crate::qrm::{build_rabi_hamiltonian, diagonalize, DressedBasis, OperatorKind, RabiParams};

/// SQUID and resonator constants, SI units except where noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledCircuitParams {
    /// Resonator impedances `[Z_l, Z_r]` in ohms.
    pub impedance: [f64; 2],
    /// Resonator capacitances `[C_l, C_r]` in farads.
    pub capacitance: [f64; 2],
    /// Resonator frequencies `[ω_l, ω_r]` in units of `ω_c`.
    pub omega: [f64; 2],
    /// SQUID critical current in amperes.
    pub critical_current: f64,
    /// Reduced flux quantum `ħ/2e` in webers.
    pub flux_quantum: f64,
    /// Static bias phase `φ̄ = πΦ̄/Φ_0`.
    pub phi_bar: f64,
    /// Modulation depth `Δφ = πΔΦ/Φ_0`.
    pub delta_phi: f64,
}

impl Default for CoupledCircuitParams {
    fn default() -> Self {
        let phi_bar = std::f64::consts::PI / 4.0;
        CoupledCircuitParams {
            impedance: [80.0, 80.0],
            capacitance: [200e-15, 200e-15],
            omega: [1.0, 1.0],
            critical_current: 180e-6,
            flux_quantum: 3.2911e-16,
            phi_bar,
            delta_phi: 0.1 * phi_bar,
        }
    }
}

impl CoupledCircuitParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("impedance", self.impedance[0]),
            ("impedance", self.impedance[1]),
            ("capacitance", self.capacitance[0]),
            ("capacitance", self.capacitance[1]),
            ("omega", self.omega[0]),
            ("omega", self.omega[1]),
            ("critical_current", self.critical_current),
            ("flux_quantum", self.flux_quantum),
        ];
        for (name, v) in named {
            ensure_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        ensure_finite("phi_bar", self.phi_bar)?;
        ensure_finite("delta_phi", self.delta_phi)?;
        if self.phi_bar.cos() <= 0.0 {
            return Err(Error::invalid("phi_bar", format!("cos φ̄ = {} must be > 0", self.phi_bar.cos())));
        }
        if self.delta_phi < 0.0 || self.delta_phi > 0.2 * self.phi_bar.abs() {
            return Err(Error::invalid("delta_phi", "needs 0 ≤ Δφ ≤ 0.2 φ̄"));
        }
        Ok(())
    }
}

/// Static and modulated couplings in units of `ω_c`. The modulated
/// amplitudes are `J_j(t) = j[j]·Ω(t)`, `J_0(t) = j_0·Ω(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCouplings {
    pub jbar: [f64; 2],
    pub jbar_0: f64,
    pub j: [f64; 2],
    pub j_0: f64,
}

impl DerivedCouplings {
    pub fn zero() -> Self {
        DerivedCouplings { jbar: [0.0; 2], jbar_0: 0.0, j: [0.0; 2], j_0: 0.0 }
    }

    /// Rescales both modulated self-couplings so that `J_0 = 2√(J_l J_r)`
    /// equals `j_0`; the static terms are kept.
    pub fn with_modulation_amplitude(mut self, j_0: f64) -> Self {
        let scale = if self.j_0 > 0.0 { j_0 / self.j_0 } else { 0.0 };
        self.j = [self.j[0] * scale, self.j[1] * scale];
        self.j_0 = 2.0 * (self.j[0] * self.j[1]).sqrt();
        self
    }

    pub fn scaled_j0(mut self, factor: f64) -> Self {
        self.j_0 *= factor;
        self
    }
}

/// `J̄_j = φ_0 ω_j / (4 I_c cos φ̄ Z_j² C_j)`, `J_j = J̄_j Δφ tan φ̄`, and the
/// geometric means `J̄_0 = 2√(J̄_l J̄_r)`, `J_0 = 2√(J_l J_r)`.
pub fn circuit_couplings(params: &CoupledCircuitParams) -> Result<DerivedCouplings> {
    params.validate()?;
    let (s, c) = params.phi_bar.sin_cos();
    let side = |j: usize| params.flux_quantum / (4.0 * params.critical_current) * params.omega[j] / (params.impedance[j].powi(2) * params.capacitance[j]);
    let jbar = [side(0) / c, side(1) / c];
    let j = [side(0) * s / (c * c) * params.delta_phi, side(1) * s / (c * c) * params.delta_phi];
    Ok(DerivedCouplings { jbar, jbar_0: 2.0 * (jbar[0] * jbar[1]).sqrt(), j, j_0: 2.0 * (j[0] * j[1]).sqrt() })
}

/// Largest product-space dimension accepted by the Fock engine.
pub const DEFAULT_DIMENSION_CEILING: usize = 4096;

/// Flux-drive settings shared by both engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxDrive {
    pub omega_d: f64,
    pub phi_d: f64,
    pub envelope: Envelope,
}

impl FluxDrive {
    pub fn modulation(&self, t: f64) -> f64 {
        self.envelope.value(t) * (self.omega_d * t + self.phi_d).cos()
    }
}

/// Full coupled Hamiltonian in the Fock product basis `(qubit ⊗ Fock)_l ⊗ (qubit ⊗ Fock)_r`.
pub fn coupled_fock_hamiltonian(
    left: &RabiParams,
    right: &RabiParams,
    couplings: &DerivedCouplings,
    drive: &FluxDrive,
    ceiling: usize,
) -> Result<TermHamiltonian> {
    let (dl, dr) = (left.dim(), right.dim());
    let dim = dl * dr;
    if dim > ceiling {
        return Err(Error::DimensionOverflow { dim, ceiling });
    }
    let hl = build_rabi_hamiltonian(left)?;
    let hr = build_rabi_hamiltonian(right)?;
    let (il, ir) = (RMatrix::identity(dl, dl), RMatrix::identity(dr, dr));
    let xl = OperatorKind::Quadrature.matrix(left.n_fock);
    let xr = OperatorKind::Quadrature.matrix(right.n_fock);
    let x2l = OperatorKind::QuadratureSquared.matrix(left.n_fock);
    let x2r = OperatorKind::QuadratureSquared.matrix(right.n_fock);
    let squeeze_l = kron(&x2l, &ir);
    let squeeze_r = kron(&il, &x2r);
    let cross = kron(&xl, &xr);
    let base = kron(&hl, &ir) + kron(&il, &hr) + &squeeze_l * couplings.jbar[0] + &squeeze_r * couplings.jbar[1] + &cross * couplings.jbar_0;
    let modulated = squeeze_l * couplings.j[0] + squeeze_r * couplings.j[1] + cross * couplings.j_0;
    let d = *drive;
    Ok(TermHamiltonian::new(CsrMatrix::from_dense(&base, 0.0)).with_term(move |t| d.modulation(t), CsrMatrix::from_dense(&modulated, 0.0)))
}

/// `H(t)` of [`coupled_fock_hamiltonian`] as a dense matrix.
pub fn build_coupled_hamiltonian(t: f64, left: &RabiParams, right: &RabiParams, couplings: &DerivedCouplings, drive: &FluxDrive) -> Result<RMatrix> {
    ensure_finite("t", t)?;
    Ok(coupled_fock_hamiltonian(left, right, couplings, drive, DEFAULT_DIMENSION_CEILING)?.dense_at(t))
}

/// Per-side dressed data on the lowest `levels` states.
#[derive(Debug, Clone)]
pub struct SideBlocks {
    pub energies: RMatrix,
    pub quadrature: RMatrix,
    pub squeezing: RMatrix,
}

impl SideBlocks {
    pub fn new(basis: &DressedBasis, levels: usize) -> Result<Self> {
        Ok(SideBlocks {
            energies: basis.energy_block(levels),
            quadrature: basis.operator_block(OperatorKind::Quadrature, levels)?,
            squeezing: basis.operator_block(OperatorKind::QuadratureSquared, levels)?,
        })
    }
}

/// Coupled Hamiltonian projected onto products `|s_l⟩⊗|u_r⟩` of the lowest
/// `levels` dressed states per side, index `s_l·levels + u_r`.
pub fn coupled_dressed_hamiltonian(
    left: &DressedBasis,
    right: &DressedBasis,
    levels: usize,
    couplings: &DerivedCouplings,
    drive: &FluxDrive,
) -> Result<TermHamiltonian> {
    let l = SideBlocks::new(left, levels)?;
    let r = SideBlocks::new(right, levels)?;
    let id = RMatrix::identity(levels, levels);
    let squeeze_l = kron(&l.squeezing, &id);
    let squeeze_r = kron(&id, &r.squeezing);
    let cross = kron(&l.quadrature, &r.quadrature);
    let base = kron(&l.energies, &id) + kron(&id, &r.energies) + &squeeze_l * couplings.jbar[0] + &squeeze_r * couplings.jbar[1] + &cross * couplings.jbar_0;
    let modulated = squeeze_l * couplings.j[0] + squeeze_r * couplings.j[1] + cross * couplings.j_0;
    let d = *drive;
    Ok(TermHamiltonian::new(CsrMatrix::from_dense(&base, 1e-14)).with_term(move |t| d.modulation(t), CsrMatrix::from_dense(&modulated, 1e-14)))
}

fn element(basis: &DressedBasis, kind: OperatorKind, s: usize, t: usize) -> Result<f64> {
    Ok(crate::qrm::matrix_element(kind, basis, s, t)?.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    /// Stark-shifted drive frequency for `|1_l0_r⟩ ↔ |0_l1_r⟩`, signed.
    pub omega_d: f64,
    /// `ω_{1_r0_r} − ω_{1_l0_l}`.
    pub bare: f64,
    /// `|ω_{1_l0_l} − ω_{1_r0_r}| < 10 J_eff`.
    pub degenerate: bool,
}

/// `ω_d = ω_{1_r0_r} + J̄_r(X_{1_r1_r} − X_{0_r0_r}) − [ω_{1_l0_l} + J̄_l(X_{1_l1_l} − X_{0_l0_l})]`.
pub fn resonance_frequency(left: &DressedBasis, right: &DressedBasis, couplings: &DerivedCouplings) -> Result<Resonance> {
    let shift = |b: &DressedBasis, jbar: f64| -> Result<f64> {
        let x11 = element(b, OperatorKind::QuadratureSquared, 1, 1)?;
        let x00 = element(b, OperatorKind::QuadratureSquared, 0, 0)?;
        Ok(b.transition(1, 0) + jbar * (x11 - x00))
    };
    let omega_d = shift(right, couplings.jbar[1])? - shift(left, couplings.jbar[0])?;
    let bare = right.transition(1, 0) - left.transition(1, 0);
    let f = element(left, OperatorKind::Quadrature, 0, 1)? * element(right, OperatorKind::Quadrature, 0, 1)?;
    let j_eff = 0.5 * couplings.j_0 * f.abs();
    Ok(Resonance { omega_d, bare, degenerate: bare.abs() < 10.0 * j_eff })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaCondition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs / lhs`.
    pub margin: f64,
    pub satisfied: bool,
}

/// Required `rhs/lhs` for a condition to count as satisfied.
pub const RWA_MARGIN: f64 = 20.0;

fn condition(name: String, lhs: f64, rhs: f64) -> RwaCondition {
    let margin = if lhs == 0.0 { f64::INFINITY } else { rhs / lhs };
    RwaCondition { name, lhs, rhs, margin, satisfied: margin >= RWA_MARGIN }
}

/// Diagnostic for the rotating-wave reduction of the coupled Hamiltonian.
pub fn rwa_validity_check(left: &DressedBasis, right: &DressedBasis, couplings: &DerivedCouplings, omega_d: f64) -> Result<Vec<RwaCondition>> {
    let mut out = Vec::new();
    for (j, (name, b)) in [("l", left), ("r", right)].into_iter().enumerate() {
        let x12 = element(b, OperatorKind::QuadratureSquared, 1, 2)?.abs();
        let w21 = b.transition(2, 1);
        let xdiag = (0..3).map(|s| element(b, OperatorKind::QuadratureSquared, s, s).map(f64::abs)).collect::<Result<Vec<_>>>()?;
        let xmax = xdiag.into_iter().fold(0.0, f64::max);
        out.push(condition(format!("Jbar_{name}|X_12| << w_21"), couplings.jbar[j] * x12, w21));
        out.push(condition(format!("J_{name}|X_12| << |w_21 + w_d|"), couplings.j[j] * x12, (w21 + omega_d).abs()));
        out.push(condition(format!("J_{name}|X_12| << |w_21 - w_d|"), couplings.j[j] * x12, (w21 - omega_d).abs()));
        out.push(condition(format!("J_{name}|X_ss| << |w_d|"), couplings.j[j] * xmax, omega_d.abs()));
    }
    let ff = (element(left, OperatorKind::Quadrature, 0, 1)? * element(right, OperatorKind::Quadrature, 0, 1)?).abs();
    let (wl, wr) = (left.transition(1, 0), right.transition(1, 0));
    out.push(condition("Jbar_0|f_l f_r| << |w_l10 - w_r10|".into(), couplings.jbar_0 * ff, (wl - wr).abs()));
    out.push(condition("J_0|f_l f_r| << w_l10 + w_r10".into(), couplings.j_0 * ff, wl + wr));
    Ok(out)
}

/// `J_eff = (J_0/2)|f_{0_l1_l} f_{0_r1_r}|`.
pub fn effective_coupling(left: &DressedBasis, right: &DressedBasis, j_0: f64) -> Result<f64> {
    ensure_finite("j0", j_0)?;
    let fl = element(left, OperatorKind::Quadrature, 0, 1)?;
    let fr = element(right, OperatorKind::Quadrature, 0, 1)?;
    for (name, f) in [("f_01 (left)", fl), ("f_01 (right)", fr)] {
        if f.abs() < 1e-12 {
            return Err(Error::VanishingElement { name: name.to_string(), value: f.abs() });
        }
    }
    Ok(0.5 * j_0 * (fl * fr).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub left: RabiParams,
    pub right: RabiParams,
    pub couplings: DerivedCouplings,
    /// Dressed levels kept per side.
    pub levels: usize,
    /// Drive frequency; `None` selects the Stark-shifted resonance.
    pub omega_d: Option<f64>,
    pub phi_d: f64,
    pub t_max: f64,
    pub points: usize,
}

/// Modulation amplitude giving `J_eff ≈ 5.5e−4` at the
/// population-inversion parameters.
pub const FIGURE_J0: f64 = 8e-4;

impl InversionConfig {
    /// Population-inversion figure: circuit static couplings, `J_0 = 8e−4`.
    pub fn figure() -> Result<Self> {
        let base = Self::from_circuit()?;
        Ok(InversionConfig { couplings: base.couplings.with_modulation_amplitude(FIGURE_J0), ..base })
    }

    /// All couplings from the circuit formulas at the default parameters.
    pub fn from_circuit() -> Result<Self> {
        let couplings = circuit_couplings(&CoupledCircuitParams::default())?;
        Ok(InversionConfig {
            left: RabiParams::new(0.8, 0.3).with_cutoff(20),
            right: RabiParams::new(1.0, 0.9).with_cutoff(20),
            couplings,
            levels: 10,
            omega_d: None,
            phi_d: 0.0,
            t_max: 6500.0,
            points: 6501,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate()?;
        self.right.validate()?;
        if self.levels < 3 || self.levels > self.left.dim().min(self.right.dim()) {
            return Err(Error::invalid("levels", format!("must lie in [3, {}]", self.left.dim().min(self.right.dim()))));
        }
        ensure_finite("t_max", self.t_max)?;
        ensure_finite("phi_d", self.phi_d)?;
        if self.t_max <= 0.0 || self.points < 2 {
            return Err(Error::invalid("t_max", "needs t_max > 0 and at least 2 points"));
        }
        let c = &self.couplings;
        for v in [c.jbar[0], c.jbar[1], c.jbar_0, c.j[0], c.j[1], c.j_0] {
            ensure_finite("couplings", v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionTrace {
    pub times: Vec<f64>,
    pub p10: Vec<f64>,
    pub p01: Vec<f64>,
    pub leakage: Vec<f64>,
    pub omega_d: f64,
    pub j_eff: f64,
    pub max_leakage: f64,
    /// Leakage above 0.1 at some time: the rotating-wave picture broke down.
    pub rwa_breakdown: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionSummary {
    pub t_inversion: f64,
    pub j_eff_measured: f64,
    pub j_eff_predicted: f64,
    pub max_p01: f64,
    /// `max P_01 − min P_01`.
    pub contrast: f64,
    pub max_leakage: f64,
}

impl InversionTrace {
    /// First full inversion of `P_01`, read as the half-period `π/(2 J_eff)`.
    /// The inversion time is the midpoint of the rising and falling
    /// crossings of `P_01 = 1/2`, falling back to the first maximum above 0.9.
    pub fn summary(&self) -> Option<InversionSummary> {
        let t_inv = half_crossing_midpoint(&self.times, &self.p01).or_else(|| first_local_maximum(&self.times, &self.p01, 0.9).map(|m| m.0))?;
        let max_p01 = self.p01.iter().copied().fold(0.0, f64::max);
        let min_p01 = self.p01.iter().copied().fold(1.0, f64::min);
        Some(InversionSummary {
            t_inversion: t_inv,
            j_eff_measured: std::f64::consts::PI / (2.0 * t_inv),
            j_eff_predicted: self.j_eff,
            max_p01,
            contrast: max_p01 - min_p01,
            max_leakage: self.max_leakage,
        })
    }

    /// `t,P_10,P_01,leakage`.
    pub fn to_csv(&self) -> String {
        let rows = (0..self.times.len()).map(|k| vec![self.times[k], self.p10[k], self.p01[k], self.leakage[k]]);
        crate::output::numeric_csv(&["t", "P_10", "P_01", "leakage"], rows)
    }
}

fn half_crossing_midpoint(times: &[f64], p: &[f64]) -> Option<f64> {
    let cross = |k: usize| times[k] + (0.5 - p[k]) / (p[k + 1] - p[k]) * (times[k + 1] - times[k]);
    let n = times.len().min(p.len());
    let top = (0..n).find(|&k| p[k] > 0.9)?;
    let up = (0..top).rev().find(|&k| p[k] < 0.5 && p[k + 1] >= 0.5)?;
    let down = (top..n - 1).find(|&k| p[k] >= 0.5 && p[k + 1] < 0.5)?;
    Some(0.5 * (cross(up) + cross(down)))
}

/// Propagates the projected coupled Hamiltonian from `|1_l0_r⟩` and tracks
/// the pair `|1_l0_r⟩`, `|0_l1_r⟩`.
pub fn simulate_population_inversion(cfg: &InversionConfig) -> Result<InversionTrace> {
    cfg.validate()?;
    let left = diagonalize(&build_rabi_hamiltonian(&cfg.left)?, cfg.left.n_fock)?;
    let right = diagonalize(&build_rabi_hamiltonian(&cfg.right)?, cfg.right.n_fock)?;
    let omega_d = match cfg.omega_d {
        Some(w) => {
            ensure_finite("omega_d", w)?;
            w
        }
        None => resonance_frequency(&left, &right, &cfg.couplings)?.omega_d,
    };
    let j_eff = effective_coupling(&left, &right, cfg.couplings.j_0)?;
    let k = cfg.levels;
    let drive = FluxDrive { omega_d, phi_d: cfg.phi_d, envelope: Envelope::Constant };
    let ham = coupled_dressed_hamiltonian(&left, &right, k, &cfg.couplings, &drive)?;
    let (i10, i01) = (k, 1);
    let mut psi0 = vec![C64::new(0.0, 0.0); k * k];
    psi0[i10] = C64::new(1.0, 0.0);
    let omega_max = left.energies[k - 1] + right.energies[k - 1];
    let grid = crate::propagate::uniform_grid(0.0, cfg.t_max, cfg.points);
    let pops = propagate_observe(&ham, &psi0, &grid, StepOptions::for_max_frequency(omega_max), |_, psi| {
        (psi[i10].norm_sqr(), psi[i01].norm_sqr())
    })?;
    let p10: Vec<f64> = pops.values.iter().map(|p| p.0).collect();
    let p01: Vec<f64> = pops.values.iter().map(|p| p.1).collect();
    let leakage: Vec<f64> = p10.iter().zip(&p01).map(|(a, b)| (1.0 - a - b).max(0.0)).collect();
    let max_leakage = leakage.iter().copied().fold(0.0, f64::max);
    Ok(InversionTrace { times: pops.times, p10, p01, leakage, omega_d, j_eff, max_leakage, rwa_breakdown: max_leakage > 0.1 })
}

/// Inputs and derived couplings, for the circuit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitReport {
    pub inputs: CoupledCircuitParams,
    pub couplings: DerivedCouplings,
}
