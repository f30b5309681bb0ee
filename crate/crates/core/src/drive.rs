//! Two-tone driving of the physical qubit and the effective Λ system.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{kron, sigma_x, sigma_z, CMatrix, CsrMatrix, RMatrix, C64};
use crate::propagate::{propagate_observe, DenseHamiltonian, StepOptions, TermHamiltonian, TimeSeries};
use crate::qrm::{build_rabi_hamiltonian, matrix_element, DressedBasis, OperatorKind, RabiParams};

/// Dimensionless envelope multiplying both drive amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Constant,
    /// `sech(β t)` on `|t| ≤ half_width`, zero outside.
    Sech { beta: f64, half_width: f64 },
    /// Unit plateau on `[start + rise, end − rise]` with `sin²` ramps.
    FlatTop { start: f64, end: f64, rise: f64 },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Sech { beta, half_width } => {
                if t.abs() <= half_width {
                    1.0 / (beta * t).cosh()
                } else {
                    0.0
                }
            }
            Envelope::FlatTop { start, end, rise } => {
                if t < start || t > end {
                    0.0
                } else if rise > 0.0 && t < start + rise {
                    (0.5 * std::f64::consts::PI * (t - start) / rise).sin().powi(2)
                } else if rise > 0.0 && t > end - rise {
                    (0.5 * std::f64::consts::PI * (end - t) / rise).sin().powi(2)
                } else {
                    1.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Constant => Ok(()),
            Envelope::Sech { beta, half_width } => {
                ensure_finite("envelope.beta", beta)?;
                ensure_finite("envelope.half_width", half_width)?;
                if beta <= 0.0 || half_width <= 0.0 {
                    return Err(Error::invalid("envelope", "sech rate and half width must be > 0"));
                }
                Ok(())
            }
            Envelope::FlatTop { start, end, rise } => {
                for (n, v) in [("envelope.start", start), ("envelope.end", end), ("envelope.rise", rise)] {
                    ensure_finite(n, v)?;
                }
                if end <= start || rise < 0.0 || 2.0 * rise > end - start {
                    return Err(Error::invalid("envelope", "flat-top needs start < end and 0 ≤ 2·rise ≤ end − start"));
                }
                Ok(())
            }
        }
    }
}

/// `H_d(t) = Ω_1 e(t) cos(ω̄_1 t + φ_1) σ_x + Ω_2 e(t) cos(ω̄_2 t + φ_2) σ_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    pub omega1_amp: f64,
    pub omega2_amp: f64,
    pub bar_omega1: f64,
    pub bar_omega2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub envelope: Envelope,
}

impl DrivePulse {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega1_amp", self.omega1_amp),
            ("omega2_amp", self.omega2_amp),
            ("bar_omega1", self.bar_omega1),
            ("bar_omega2", self.bar_omega2),
            ("phi1", self.phi1),
            ("phi2", self.phi2),
        ];
        for (name, v) in fields {
            ensure_finite(name, v)?;
        }
        if self.omega1_amp < 0.0 || self.omega2_amp < 0.0 {
            return Err(Error::invalid("omega_amp", "drive amplitudes must be >= 0"));
        }
        if self.bar_omega1 <= 0.0 || self.bar_omega2 <= 0.0 {
            return Err(Error::invalid("bar_omega", "carrier frequencies must be > 0"));
        }
        self.envelope.validate()
    }

    /// Coefficient of `σ_x` at time `t`.
    pub fn x_coefficient(&self, t: f64) -> f64 {
        self.omega1_amp * self.envelope.value(t) * (self.bar_omega1 * t + self.phi1).cos()
    }

    /// Coefficient of `σ_z` at time `t`.
    pub fn z_coefficient(&self, t: f64) -> f64 {
        self.omega2_amp * self.envelope.value(t) * (self.bar_omega2 * t + self.phi2).cos()
    }
}

/// `H_d(t)` on the `qubit ⊗ Fock` space.
pub fn build_drive_hamiltonian(t: f64, pulse: &DrivePulse, n_fock: usize) -> Result<RMatrix> {
    ensure_finite("t", t)?;
    pulse.validate()?;
    let id = RMatrix::identity(n_fock, n_fock);
    Ok(kron(&sigma_x(), &id) * pulse.x_coefficient(t) + kron(&sigma_z(), &id) * pulse.z_coefficient(t))
}

/// `H_p + H_d(t)` in the product basis, as sparse terms.
pub fn lab_frame_hamiltonian(params: &RabiParams, pulse: &DrivePulse) -> Result<TermHamiltonian> {
    pulse.validate()?;
    let n = params.n_fock;
    let hp = build_rabi_hamiltonian(params)?;
    let id = RMatrix::identity(n, n);
    let sx = CsrMatrix::from_dense(&kron(&sigma_x(), &id), 0.0);
    let sz = CsrMatrix::from_dense(&kron(&sigma_z(), &id), 0.0);
    let (p1, p2) = (*pulse, *pulse);
    Ok(TermHamiltonian::new(CsrMatrix::from_dense(&hp, 0.0))
        .with_term(move |t| p1.x_coefficient(t), sx)
        .with_term(move |t| p2.z_coefficient(t), sz))
}

/// `P_i(t) = |⟨i|ψ(t)⟩|²` for product-basis states and dressed indices.
pub fn populations(traj: &TimeSeries<DVector<C64>>, basis: &DressedBasis, indices: &[usize]) -> Result<TimeSeries<Vec<f64>>> {
    for &i in indices {
        if i >= basis.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: basis.dim() });
        }
    }
    let projectors = dressed_rows(basis, indices);
    Ok(traj.map(|_, psi| project_populations(&projectors, psi.as_slice())))
}

fn dressed_rows(basis: &DressedBasis, indices: &[usize]) -> Vec<Vec<f64>> {
    indices.iter().map(|&i| basis.state(i).iter().copied().collect()).collect()
}

fn project_populations(rows: &[Vec<f64>], psi: &[C64]) -> Vec<f64> {
    rows.iter()
        .map(|v| v.iter().zip(psi).map(|(&a, &b)| b * a).sum::<C64>().norm_sqr())
        .collect()
}

/// Propagates `H_p + H_d(t)` from the product-basis state `psi0` and
/// records the dressed populations `indices` at each grid time.
pub fn lab_frame_populations(
    params: &RabiParams,
    basis: &DressedBasis,
    pulse: &DrivePulse,
    psi0: &[C64],
    t_grid: &[f64],
    indices: &[usize],
    opts: StepOptions,
) -> Result<TimeSeries<Vec<f64>>> {
    for &i in indices {
        if i >= basis.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: basis.dim() });
        }
    }
    let ham = lab_frame_hamiltonian(params, pulse)?;
    let rows = dressed_rows(basis, indices);
    propagate_observe(&ham, psi0, t_grid, opts, |_, psi| project_populations(&rows, psi))
}

/// Dressed state `|s⟩` as a complex product-basis vector.
pub fn dressed_state(basis: &DressedBasis, s: usize) -> Result<Vec<C64>> {
    if s >= basis.dim() {
        return Err(Error::IndexOutOfRange { index: s, dim: basis.dim() });
    }
    Ok(basis.state(s).iter().map(|&x| C64::new(x, 0.0)).collect())
}

/// Step `(2π/ω_max)/50` with `ω_max` the largest transition in `basis`.
pub fn default_step(basis: &DressedBasis) -> StepOptions {
    StepOptions::for_max_frequency(basis.energies[basis.dim() - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaTolerances {
    /// Allowed `|ω̄_j − ω_target|`.
    pub detuning: f64,
    /// Allowed `Ω_j / min(ω_ts, ω̄_j)`.
    pub rwa_ratio: f64,
}

impl Default for LambdaTolerances {
    fn default() -> Self {
        LambdaTolerances { detuning: 1e-6, rwa_ratio: 0.1 }
    }
}

/// Three-level RWA model of the driven Rabi system in the interaction
/// picture of `H_p`, levels ordered `|0⟩, |1⟩, |2⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaModel {
    /// Peak `Ω`, from `Ω² = (Ω_1²|x_20|² + Ω_2²|z_21|²)/4`.
    pub omega_rabi: f64,
    pub theta: f64,
    pub phi: f64,
    pub x20: C64,
    pub z21: C64,
    /// Coefficient of `|2⟩⟨0|`, `(Ω_1/2) e^{−iφ_1} x_20`.
    pub coupling0: C64,
    /// Coefficient of `|2⟩⟨1|`, `(Ω_2/2) e^{−iφ_2} z_21`.
    pub coupling1: C64,
    pub envelope: Envelope,
}

impl LambdaModel {
    /// Model with couplings given directly: `Ω e(t) (Υ_0|2⟩⟨0| + Υ_1|2⟩⟨1| + h.c.)`.
    pub fn from_couplings(coupling0: C64, coupling1: C64, envelope: Envelope) -> Self {
        let omega_rabi = (coupling0.norm_sqr() + coupling1.norm_sqr()).sqrt();
        LambdaModel {
            omega_rabi,
            theta: lambda_angle(coupling0.norm(), coupling1.norm()),
            phi: (coupling1.arg() - coupling0.arg()),
            x20: C64::new(f64::NAN, 0.0),
            z21: C64::new(f64::NAN, 0.0),
            coupling0,
            coupling1,
            envelope,
        }
    }

    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        let e = self.envelope.value(t);
        let mut h = CMatrix::zeros(3, 3);
        h[(2, 0)] = self.coupling0 * e;
        h[(2, 1)] = self.coupling1 * e;
        h[(0, 2)] = (self.coupling0 * e).conj();
        h[(1, 2)] = (self.coupling1 * e).conj();
        h
    }

    /// Period of the `|b⟩ ↔ |2⟩` population oscillation at unit envelope.
    pub fn population_period(&self) -> f64 {
        std::f64::consts::PI / self.omega_rabi
    }

    /// Normalized bright state `∝ Υ_0^*|0⟩ + Υ_1^*|1⟩`, the combination
    /// that the couplings actually address.
    pub fn bright_state(&self) -> Option<[C64; 2]> {
        let n = self.omega_rabi;
        (n > 0.0).then(|| [self.coupling0.conj() / n, self.coupling1.conj() / n])
    }

    /// `|d⟩⟨d| − |b⟩⟨b|` on `span{|0⟩, |1⟩}`; the unit matrix for an empty pulse.
    pub fn cyclic_holonomy(&self) -> CMatrix {
        let mut u = CMatrix::identity(2, 2);
        if let Some(b) = self.bright_state() {
            for i in 0..2 {
                for j in 0..2 {
                    u[(i, j)] -= 2.0 * b[i] * b[j].conj();
                }
            }
        }
        u
    }

    pub fn as_dense_hamiltonian(&self) -> DenseHamiltonian<impl Fn(f64) -> CMatrix + Sync + '_> {
        DenseHamiltonian::new(3, move |t| self.hamiltonian(t))
    }
}

/// `θ = −2 arctan(a/b)`, folded into `(−π, π]`.
fn lambda_angle(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let theta = if b == 0.0 { std::f64::consts::PI } else { -2.0 * (a / b).atan() };
    if theta <= -std::f64::consts::PI {
        theta + 2.0 * std::f64::consts::PI
    } else {
        theta
    }
}

/// RWA reduction of `H_p + H_d` onto the lowest three dressed states.
pub fn effective_lambda(basis: &DressedBasis, pulse: &DrivePulse, tol: LambdaTolerances) -> Result<LambdaModel> {
    pulse.validate()?;
    if basis.dim() < 3 {
        return Err(Error::IndexOutOfRange { index: 2, dim: basis.dim() });
    }
    let (w10, w20, w21) = (basis.transition(1, 0), basis.transition(2, 0), basis.transition(2, 1));
    if pulse.omega1_amp > 0.0 && (pulse.bar_omega1 - w20).abs() > tol.detuning {
        return Err(Error::OffResonant {
            detail: format!("σx carrier {} must match ω_20 = {w20}", pulse.bar_omega1),
        });
    }
    if pulse.omega2_amp > 0.0 && (pulse.bar_omega2 - w21).abs() > tol.detuning {
        return Err(Error::OffResonant {
            detail: format!("σz carrier {} must match ω_21 = {w21}", pulse.bar_omega2),
        });
    }
    let smallest = w10.abs().min(w20.abs()).min(w21.abs());
    for (name, amp, carrier) in [("Ω_1", pulse.omega1_amp, pulse.bar_omega1), ("Ω_2", pulse.omega2_amp, pulse.bar_omega2)] {
        let limit = tol.rwa_ratio * smallest.min(carrier);
        if amp > limit {
            return Err(Error::RwaPrecondition {
                detail: format!("{name} = {amp} exceeds {} × min(ω_ts, ω̄) = {limit}", tol.rwa_ratio),
            });
        }
    }
    lambda_from_pulse(basis, pulse)
}

/// The Λ model of `pulse` without the resonance and RWA checks of
/// [`effective_lambda`].
pub fn lambda_from_pulse(basis: &DressedBasis, pulse: &DrivePulse) -> Result<LambdaModel> {
    let x20 = matrix_element(OperatorKind::SigmaX, basis, 2, 0)?;
    let z21 = matrix_element(OperatorKind::SigmaZ, basis, 2, 1)?;
    let coupling0 = 0.5 * pulse.omega1_amp * C64::from_polar(1.0, -pulse.phi1) * x20;
    let coupling1 = 0.5 * pulse.omega2_amp * C64::from_polar(1.0, -pulse.phi2) * z21;
    let omega_rabi = 0.5 * ((pulse.omega1_amp * x20.norm()).powi(2) + (pulse.omega2_amp * z21.norm()).powi(2)).sqrt();
    Ok(LambdaModel {
        omega_rabi,
        theta: lambda_angle(pulse.omega1_amp * x20.re, pulse.omega2_amp * z21.re),
        phi: pulse.phi2 - pulse.phi1,
        x20,
        z21,
        coupling0,
        coupling1,
        envelope: pulse.envelope,
    })
}

/// `Ω e(t) (e^{iφ} sin(θ/2)|2⟩⟨0| − cos(θ/2)|2⟩⟨1| + h.c.)` on `{|0⟩,|1⟩,|2⟩}`.
pub fn lambda_hamiltonian(omega: f64, theta: f64, phi: f64) -> CMatrix {
    let (s, c) = (0.5 * theta).sin_cos();
    let model = LambdaModel::from_couplings(C64::from_polar(omega * s, phi), C64::new(-omega * c, 0.0), Envelope::Constant);
    model.hamiltonian(0.0)
}

/// Bright and dark states of [`lambda_hamiltonian`], as three-level vectors.
pub fn bright_dark(theta: f64, phi: f64) -> ([C64; 3], [C64; 3]) {
    let (s, c) = (0.5 * theta).sin_cos();
    let zero = C64::new(0.0, 0.0);
    let bright = [C64::from_polar(s, -phi), C64::new(-c, 0.0), zero];
    let dark = [C64::new(c, 0.0), C64::from_polar(s, phi), zero];
    (bright, dark)
}

/// Propagates the Λ model from a three-level state and records `P_0, P_1, P_2`.
pub fn lambda_populations(model: &LambdaModel, psi0: &[C64], t_grid: &[f64], opts: StepOptions) -> Result<TimeSeries<Vec<f64>>> {
    let ham = model.as_dense_hamiltonian();
    propagate_observe(&ham, psi0, t_grid, opts, |_, psi| psi.iter().map(|z| z.norm_sqr()).collect())
}

/// The three drive configurations of the Rabi-oscillation figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RabiPanel {
    /// σx drive at `ω_20`, amplitude `0.02 ω_20`, from `|0⟩`.
    A,
    /// σz drive at `ω_21`, amplitude `0.02 ω_21`, from `|1⟩`.
    B,
    /// Both tones at amplitude `0.02 ω_21`, from `|1⟩`.
    C,
}

impl RabiPanel {
    pub fn pulse(self, basis: &DressedBasis) -> DrivePulse {
        let (w20, w21) = (basis.transition(2, 0), basis.transition(2, 1));
        let (a1, a2) = match self {
            RabiPanel::A => (0.02 * w20, 0.0),
            RabiPanel::B => (0.0, 0.02 * w21),
            RabiPanel::C => (0.02 * w21, 0.02 * w21),
        };
        DrivePulse {
            omega1_amp: a1,
            omega2_amp: a2,
            bar_omega1: w20,
            bar_omega2: w21,
            phi1: 0.0,
            phi2: 0.0,
            envelope: Envelope::Constant,
        }
    }

    pub fn initial_level(self) -> usize {
        match self {
            RabiPanel::A => 0,
            RabiPanel::B | RabiPanel::C => 1,
        }
    }
}

/// `t,P0,P1,...` with one column per entry of each sample.
pub fn trajectory_csv(pops: &TimeSeries<Vec<f64>>) -> String {
    let width = pops.values.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((0..width).map(|i| format!("P{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = pops.times.iter().zip(&pops.values).map(|(&t, v)| {
        let mut row = vec![t];
        row.extend_from_slice(v);
        row
    });
    crate::output::numeric_csv(&header, rows)
}
