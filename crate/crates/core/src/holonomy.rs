//! Holonomic gates: single-qubit gates from cyclic Λ evolution and the
//! two-qubit geometric phase gate on the logical pair `{|1_l0_r⟩, |0_l1_r⟩}`.

use serde::{Deserialize, Serialize};

use crate::drive::{lambda_from_pulse, DrivePulse, Envelope, LambdaModel};
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{expm_minus_i, sigma_x, sigma_y, sigma_z, to_complex, CMatrix, C64};
use crate::propagate::{propagator, propagate_observe, DenseHamiltonian, StepOptions};
use crate::qrm::{matrix_element, DressedBasis, OperatorKind};

use std::f64::consts::PI;

/// `n·σ` with `n = (sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn single_qubit_holonomy_matrix(theta: f64, phi: f64) -> CMatrix {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    to_complex(&sigma_x()) * C64::new(st * cp, 0.0) + sigma_y() * C64::new(st * sp, 0.0) + to_complex(&sigma_z()) * C64::new(ct, 0.0)
}

/// `(σ_x + σ_z)/√2`.
pub fn hadamard() -> CMatrix {
    single_qubit_holonomy_matrix(PI / 4.0, 0.0)
}

/// Real and imaginary parts of a complex matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixParts {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixParts {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        MatrixParts { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn to_matrix(&self) -> CMatrix {
        let n = self.re.len();
        let m = self.re.first().map_or(0, Vec::len);
        CMatrix::from_fn(n, m, |i, j| C64::new(self.re[i][j], self.im[i][j]))
    }
}

/// `|Tr(target† achieved)| / dim`; insensitive to a global phase.
pub fn gate_fidelity(target: &CMatrix, achieved: &CMatrix) -> f64 {
    (target.adjoint() * achieved).trace().norm() / target.nrows() as f64
}

/// `‖U†U − 1‖_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    (u.adjoint() * u - CMatrix::identity(u.ncols(), u.ncols())).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub target: MatrixParts,
    pub achieved: MatrixParts,
    pub fidelity: f64,
    pub leakage: f64,
    pub unitarity_defect: f64,
    pub pulse: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SechPulseSpec {
    pub beta: f64,
    pub theta: f64,
    pub phi: f64,
    pub truncation_ratio: f64,
}

impl SechPulseSpec {
    pub fn new(beta: f64, theta: f64, phi: f64) -> Self {
        SechPulseSpec { beta, theta, phi, truncation_ratio: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("beta", self.beta), ("theta", self.theta), ("phi", self.phi), ("truncation_ratio", self.truncation_ratio)] {
            ensure_finite(n, v)?;
        }
        if self.beta <= 0.0 {
            return Err(Error::invalid("beta", "pulse rate must be > 0"));
        }
        if !(self.truncation_ratio > 0.0 && self.truncation_ratio < 1.0) {
            return Err(Error::invalid("truncation_ratio", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `τ = (2/β) arcsech(r)`.
    pub fn duration(&self) -> f64 {
        let r = self.truncation_ratio;
        2.0 / self.beta * ((1.0 + (1.0 - r * r).sqrt()) / r).ln()
    }

    /// `∫ β sech(βt) dt` over `[−τ/2, τ/2]`, which is `2 arccos(r)`.
    pub fn area(&self) -> f64 {
        2.0 * self.truncation_ratio.acos()
    }

    pub fn envelope(&self) -> Envelope {
        Envelope::Sech { beta: self.beta, half_width: 0.5 * self.duration() }
    }

    /// Coefficients `(Υ_0, Υ_1)` of `|2⟩⟨0|` and `|2⟩⟨1|` whose cyclic
    /// evolution yields `n·σ` up to a global sign.
    pub fn upsilon(&self) -> (C64, C64) {
        upsilon(self.theta, self.phi)
    }

    /// Λ model `β sech(βt) (Υ_0|2⟩⟨0| + Υ_1|2⟩⟨1| + h.c.)`.
    pub fn lambda_model(&self) -> LambdaModel {
        let (u0, u1) = self.upsilon();
        LambdaModel::from_couplings(u0 * self.beta, u1 * self.beta, self.envelope())
    }
}

/// `Υ_0 = e^{iφ} cos(θ/2)`, `Υ_1 = sin(θ/2)`.
pub fn upsilon(theta: f64, phi: f64) -> (C64, C64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (C64::from_polar(c, phi), C64::new(s, 0.0))
}

/// Inverse of [`upsilon`] for coefficients with `Υ_1` real and non-negative.
pub fn angles_from_upsilon(u0: C64, u1: C64) -> (f64, f64) {
    let theta = 2.0 * u1.norm().atan2(u0.norm());
    let phi = if u0.norm() > 0.0 { (u0 * u1.conj()).arg() } else { 0.0 };
    (theta, phi)
}

/// Largest `β/ω_21` accepted by [`design_sech_pulse`].
pub const SECH_RATE_GUARD: f64 = 0.05;

/// Two-tone drive whose RWA Λ model is [`SechPulseSpec::lambda_model`].
pub fn design_sech_pulse(spec: &SechPulseSpec, basis: &DressedBasis) -> Result<DrivePulse> {
    spec.validate()?;
    let (w20, w21) = (basis.transition(2, 0), basis.transition(2, 1));
    if spec.beta > SECH_RATE_GUARD * w21 {
        return Err(Error::RwaPrecondition {
            detail: format!("β = {} exceeds {SECH_RATE_GUARD} ω_21 = {}", spec.beta, SECH_RATE_GUARD * w21),
        });
    }
    let x20 = matrix_element(OperatorKind::SigmaX, basis, 2, 0)?;
    let z21 = matrix_element(OperatorKind::SigmaZ, basis, 2, 1)?;
    let (u0, u1) = spec.upsilon();
    let tone = |u: C64, element: C64, name: &str| -> Result<(f64, f64)> {
        if u.norm() < 1e-14 {
            return Ok((0.0, 0.0));
        }
        if element.norm() < 1e-10 {
            return Err(Error::VanishingElement { name: name.to_string(), value: element.norm() });
        }
        let ratio = u / element;
        Ok((2.0 * spec.beta * ratio.norm(), -ratio.arg()))
    };
    let (a1, phi1) = tone(u0, x20, "x_20")?;
    let (a2, phi2) = tone(u1, z21, "z_21")?;
    Ok(DrivePulse { omega1_amp: a1, omega2_amp: a2, bar_omega1: w20, bar_omega2: w21, phi1, phi2, envelope: spec.envelope() })
}

/// Runs the designed pulse through its Λ model over `[−τ/2, τ/2]` and
/// compares the propagator on `span{|0⟩,|1⟩}` with `n·σ`.
pub fn execute_single_qubit_gate(spec: &SechPulseSpec, basis: &DressedBasis) -> Result<GateReport> {
    let pulse = design_sech_pulse(spec, basis)?;
    let model = lambda_from_pulse(basis, &pulse)?;
    let tau = spec.duration();
    let (achieved, leakage, dyn_phase) = cyclic_propagator(&model, -0.5 * tau, 0.5 * tau)?;
    if leakage > 0.01 {
        return Err(Error::Leakage { leakage, limit: 0.01 });
    }
    let target = single_qubit_holonomy_matrix(spec.theta, spec.phi);
    Ok(GateReport {
        fidelity: gate_fidelity(&target, &achieved),
        unitarity_defect: unitarity_defect(&achieved),
        target: MatrixParts::from_matrix(&target),
        achieved: MatrixParts::from_matrix(&achieved),
        leakage,
        pulse: serde_json::json!({
            "spec": spec,
            "duration": tau,
            "area": spec.area(),
            "drive": pulse,
            "upsilon": [spec.upsilon().0, spec.upsilon().1],
            "dynamical_phase": dyn_phase,
        }),
    })
}

/// Internal steps per pulse duration for Λ-model propagation.
const LAMBDA_STEPS: f64 = 4000.0;

/// Propagator of a Λ model restricted to `{|0⟩,|1⟩}`, the mean leakage
/// into `|2⟩` of the two basis inputs, and the largest accumulated
/// dynamical phase `|∫⟨ψ|H|ψ⟩dt|` over the inputs `|0⟩, |1⟩, |±⟩`.
pub fn cyclic_propagator(model: &LambdaModel, t0: f64, t1: f64) -> Result<(CMatrix, f64, f64)> {
    let ham = model.as_dense_hamiltonian();
    let opts = StepOptions::with_max_step((t1 - t0) / LAMBDA_STEPS);
    let full = propagator(&ham, t0, t1, opts)?;
    let u = full.view((0, 0), (2, 2)).into_owned();
    let leakage = (1.0 - 0.5 * u.norm_squared()).max(0.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zero = C64::new(0.0, 0.0);
    let inputs = [
        [C64::new(1.0, 0.0), zero, zero],
        [zero, C64::new(1.0, 0.0), zero],
        [C64::new(s, 0.0), C64::new(s, 0.0), zero],
        [C64::new(s, 0.0), C64::new(-s, 0.0), zero],
    ];
    let mut dyn_phase = 0.0_f64;
    for psi0 in inputs {
        dyn_phase = dyn_phase.max(dynamical_phase(model, &psi0, t0, t1)?.abs());
    }
    Ok((u, leakage, dyn_phase))
}

/// `∫ ⟨ψ(t)|H(t)|ψ(t)⟩ dt` by the trapezoid rule on 2001 samples.
pub fn dynamical_phase(model: &LambdaModel, psi0: &[C64], t0: f64, t1: f64) -> Result<f64> {
    let ham = model.as_dense_hamiltonian();
    let grid = crate::propagate::uniform_grid(t0, t1, 2001);
    let opts = StepOptions::with_max_step((t1 - t0) / LAMBDA_STEPS);
    let energy = propagate_observe(&ham, psi0, &grid, opts, |t, psi| {
        let h = model.hamiltonian(t);
        let mut e = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                e += psi[i].conj() * h[(i, j)] * psi[j];
            }
        }
        e.re
    })?;
    let dt = grid[1] - grid[0];
    let v = &energy.values;
    Ok(dt * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1])))
}

/// Two-state logical qubit `|0⟩_L = |0_l1_r⟩`, `|1⟩_L = |1_l0_r⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalTwoQubit {
    pub sx: CMatrix,
    pub sy: CMatrix,
}

impl Default for LogicalTwoQubit {
    fn default() -> Self {
        LogicalTwoQubit { sx: to_complex(&sigma_x()), sy: sigma_y() }
    }
}

impl LogicalTwoQubit {
    /// Labels of the logical basis, in matrix order.
    pub const BASIS: [&'static str; 2] = ["|0_l 1_r>", "|1_l 0_r>"];

    /// Positions of `|0⟩_L, |1⟩_L` in the order `{|0_l0_r⟩, |1_l0_r⟩, |0_l1_r⟩, |1_l1_r⟩}`.
    pub const EMBEDDING: [usize; 2] = [2, 1];

    pub fn axis(&self, phi: f64) -> CMatrix {
        &self.sx * C64::new(phi.cos(), 0.0) + &self.sy * C64::new(phi.sin(), 0.0)
    }

    /// `exp(i·angle·(cos φ S_x + sin φ S_y))`.
    pub fn rotation(&self, angle: f64, phi: f64) -> CMatrix {
        let (s, c) = angle.sin_cos();
        CMatrix::identity(2, 2) * C64::new(c, 0.0) + self.axis(phi) * C64::new(0.0, s)
    }

    /// Embeds a logical 2×2 into the two-qubit space with unit outer diagonal.
    pub fn embed(&self, block: &CMatrix) -> CMatrix {
        let mut u = CMatrix::identity(4, 4);
        for (a, &i) in Self::EMBEDDING.iter().enumerate() {
            for (b, &j) in Self::EMBEDDING.iter().enumerate() {
                u[(i, j)] = block[(a, b)];
            }
        }
        u
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicalHamiltonian {
    pub matrix: CMatrix,
    /// `(J_0/2)|f_l f_r|`.
    pub coupling: f64,
    /// Added to `φ_d` by the phase of `f_l f_r^*`.
    pub phase_offset: f64,
}

/// `(J_0/2)|f_l f_r| (cos φ S_x + sin φ S_y)` with `φ = φ_d + phase_offset`.
pub fn logical_hamiltonian(j0: f64, phi_d: f64, f_left: C64, f_right: C64) -> Result<LogicalHamiltonian> {
    ensure_finite("j0", j0)?;
    ensure_finite("phi_d", phi_d)?;
    for (name, f) in [("f_left", f_left), ("f_right", f_right)] {
        if f.norm() < 1e-12 {
            return Err(Error::VanishingElement { name: name.to_string(), value: f.norm() });
        }
    }
    let product = f_left * f_right.conj();
    let phase_offset = -product.arg();
    let coupling = 0.5 * j0 * product.norm();
    let matrix = LogicalTwoQubit::default().axis(phi_d + phase_offset) * C64::new(coupling, 0.0);
    Ok(LogicalHamiltonian { matrix, coupling, phase_offset })
}

/// One step of the four-step sequence, `exp(−i·area·(cos φ_d S_x + sin φ_d S_y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPulse {
    pub phi_d: f64,
    pub area: f64,
}

/// Sequence realizing `e^{iπS_y/4}`, `e^{iπS_x/2}`, `e^{iπ(cosβ S_x + sinβ S_y)/2}`,
/// `e^{−iπS_y/4}` with non-negative areas.
pub fn four_step_pulses(beta_phase: f64) -> [StepPulse; 4] {
    [
        StepPulse { phi_d: 1.5 * PI, area: PI / 4.0 },
        StepPulse { phi_d: PI, area: PI / 2.0 },
        StepPulse { phi_d: beta_phase + PI, area: PI / 2.0 },
        StepPulse { phi_d: 0.5 * PI, area: PI / 4.0 },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourStepResult {
    /// Two-qubit gate in `{|0_l0_r⟩, |1_l0_r⟩, |0_l1_r⟩, |1_l1_r⟩}`.
    pub u2: CMatrix,
    /// Logical product of the four steps as applied.
    pub raw_block: CMatrix,
    /// `raw_block` with the factor `i` of each π-rotation removed.
    pub block: CMatrix,
    pub steps: [StepPulse; 4],
}

/// `U_β = diag(e^{−iβ}, e^{iβ})` on `|±⟩_L`, written in `{|0⟩_L, |1⟩_L}`.
pub fn u_beta(beta_phase: f64) -> CMatrix {
    let (s, c) = beta_phase.sin_cos();
    CMatrix::identity(2, 2) * C64::new(c, 0.0) - to_complex(&sigma_x()) * C64::new(0.0, s)
}

/// The target two-qubit gate with `cos β` / `−i sin β` central block.
pub fn target_u2(beta_phase: f64) -> CMatrix {
    LogicalTwoQubit::default().embed(&u_beta(beta_phase))
}

pub fn four_step_protocol(beta_phase: f64) -> Result<FourStepResult> {
    ensure_finite("beta_phase", beta_phase)?;
    if !(beta_phase > -PI && beta_phase <= PI) {
        return Err(Error::invalid("beta_phase", "must lie in (−π, π]"));
    }
    let lq = LogicalTwoQubit::default();
    let steps = four_step_pulses(beta_phase);
    let mut raw = CMatrix::identity(2, 2);
    for s in &steps {
        raw = lq.rotation(-s.area, s.phi_d) * raw;
    }
    let deviation = unitarity_defect(&raw);
    if deviation > 1e-8 {
        return Err(Error::NonUnitary { deviation });
    }
    let half_turns = steps.iter().filter(|s| (s.area - PI / 2.0).abs() < 1e-15).count() as i32;
    let block = &raw * C64::new(0.0, -1.0).powi(half_turns);
    Ok(FourStepResult { u2: lq.embed(&block), raw_block: raw, block, steps })
}

/// Time-integrates the four steps with flat-top envelopes of amplitude
/// `coupling` and ramp time `rise`, returning the logical propagator.
pub fn integrate_four_step(beta_phase: f64, coupling: f64, rise: f64) -> Result<CMatrix> {
    ensure_finite("coupling", coupling)?;
    ensure_finite("rise", rise)?;
    if coupling <= 0.0 || rise < 0.0 {
        return Err(Error::invalid("coupling", "needs coupling > 0 and rise >= 0"));
    }
    let lq = LogicalTwoQubit::default();
    let mut u = CMatrix::identity(2, 2);
    for s in four_step_pulses(beta_phase) {
        // sin² ramps each contribute rise/2 of area
        let length = s.area / coupling + rise;
        let env = Envelope::FlatTop { start: 0.0, end: length, rise };
        let axis = lq.axis(s.phi_d) * C64::new(coupling, 0.0);
        let ham = DenseHamiltonian::new(2, |t| &axis * C64::new(env.value(t), 0.0));
        let step = propagator(&ham, 0.0, length, StepOptions::with_max_step(length / 2000.0))?;
        u = step * u;
    }
    Ok(u)
}

/// Same as the exact steps, via eigen-exponentials of the step generators.
pub fn four_step_exponentials(beta_phase: f64) -> Result<CMatrix> {
    let lq = LogicalTwoQubit::default();
    let mut u = CMatrix::identity(2, 2);
    for s in four_step_pulses(beta_phase) {
        u = expm_minus_i(&(lq.axis(s.phi_d) * C64::new(s.area, 0.0)))? * u;
    }
    Ok(u)
}

/// Operator-Schmidt rank of a 4×4 gate on `{|l r⟩}` with index `l + 2r`.
/// Rank 1 means the gate is a product of single-qubit operators.
pub fn operator_schmidt_rank(u: &CMatrix, tol: f64) -> usize {
    let idx = |l: usize, r: usize| l + 2 * r;
    let realigned = CMatrix::from_fn(4, 4, |row, col| {
        let (r, rp) = (row / 2, row % 2);
        let (l, lp) = (col / 2, col % 2);
        u[(idx(l, r), idx(lp, rp))]
    });
    realigned.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Phase-aligned distance `min_φ ‖a − e^{iφ} b‖_max`.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    (a - b * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
