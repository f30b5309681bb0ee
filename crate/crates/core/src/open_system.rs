//! Time-convolutionless master equation for the dressed three-level system
//! and the holonomic Hadamard fidelity benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::holonomy::{hadamard, SechPulseSpec};
use crate::linalg::{hermitian_eigen, max_hermitian_defect, pairwise_sum, to_complex, CMatrix, C64};
use crate::propagate::{check_uniform_grid, TimeSeries};
use crate::qrm::{DressedBasis, OperatorKind};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelLabel {
    /// Transversal noise through `σ_x`.
    X,
    /// Longitudinal noise through `σ_z`.
    Z,
    /// Field-quadrature noise through `a + a†`.
    C,
}

impl ChannelLabel {
    pub fn operator(self) -> OperatorKind {
        match self {
            ChannelLabel::X => OperatorKind::SigmaX,
            ChannelLabel::Z => OperatorKind::SigmaZ,
            ChannelLabel::C => OperatorKind::Quadrature,
        }
    }
}

/// Bath occupancy `N̄(ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Thermal {
    Zero,
    /// Bose–Einstein occupancy at temperature `k_B T` in frequency units.
    BoseEinstein { temperature: f64 },
}

impl Thermal {
    pub fn occupancy(&self, omega: f64) -> f64 {
        match *self {
            Thermal::Zero => 0.0,
            Thermal::BoseEinstein { temperature } => {
                if temperature <= 0.0 || omega <= 0.0 {
                    0.0
                } else {
                    1.0 / (omega / temperature).exp_m1()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathChannel {
    pub label: ChannelLabel,
    /// Bare rate `γ_n`.
    pub rate: f64,
    /// `ω_n` in `γ_n(ω) = (γ_n/ω_n) ω Θ(ω)`.
    pub reference_frequency: f64,
    pub thermal: Thermal,
}

impl BathChannel {
    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega > 0.0 {
            self.rate / self.reference_frequency * omega
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub channels: Vec<BathChannel>,
}

impl BathSpec {
    /// Zero-temperature `x`, `z`, `c` channels with the given rates; the
    /// qubit channels reference `ω_a`, the cavity channel `ω_c`.
    pub fn ohmic(gamma_x: f64, gamma_z: f64, gamma_c: f64, omega_a: f64, omega_c: f64) -> Self {
        let ch = |label, rate, reference_frequency| BathChannel { label, rate, reference_frequency, thermal: Thermal::Zero };
        BathSpec {
            channels: vec![ch(ChannelLabel::X, gamma_x, omega_a), ch(ChannelLabel::Z, gamma_z, omega_a), ch(ChannelLabel::C, gamma_c, omega_c)],
        }
    }

    pub fn uniform(gamma: f64, omega_a: f64, omega_c: f64) -> Self {
        Self::ohmic(gamma, gamma, gamma, omega_a, omega_c)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for ch in &mut out.channels {
            ch.rate *= factor;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for ch in &self.channels {
            ensure_finite("rate", ch.rate)?;
            ensure_finite("reference_frequency", ch.reference_frequency)?;
            if ch.rate < 0.0 {
                return Err(Error::invalid("rate", format!("channel {:?} has negative rate {}", ch.label, ch.rate)));
            }
            if ch.reference_frequency <= 0.0 {
                return Err(Error::invalid("reference_frequency", "must be > 0"));
            }
            if let Thermal::BoseEinstein { temperature } = ch.thermal {
                ensure_finite("temperature", temperature)?;
                if temperature < 0.0 {
                    return Err(Error::invalid("temperature", "must be >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Density matrix with validated invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        let asym = max_hermitian_defect(&matrix);
        if asym > 1e-10 {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let rho = DensityMatrix { matrix };
        if (rho.trace() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("rho", format!("trace {} is not 1", rho.trace())));
        }
        let min = rho.min_eigenvalue()?;
        if min < -1e-8 {
            return Err(Error::invalid("rho", format!("negative eigenvalue {min}")));
        }
        Ok(rho)
    }

    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigen(&self.matrix)?.0[0])
    }
}

/// Channel operators `S_n` and the TCL operators `U_n`, both in the basis of
/// the system Hamiltonian they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct TclGenerator {
    pub channels: Vec<(CMatrix, CMatrix)>,
}

impl TclGenerator {
    pub fn is_zero(&self) -> bool {
        self.channels.iter().all(|(_, u)| u.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    /// `Σ_n (U_n ρ S_n + S_n ρ U_n† − S_n U_n ρ − ρ U_n† S_n)`.
    pub fn dissipator(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for (s, u) in &self.channels {
            let ud = u.adjoint();
            let urho = u * rho;
            let rhoud = rho * &ud;
            out += &urho * s + s * &rhoud - s * &urho - &rhoud * s;
        }
        out
    }
}

/// Builds `U_n` in the eigenbasis of `h_system`: downward elements
/// `½γ_n(Δ)(N̄+1) S_mk` and upward elements `½γ_n(Δ) N̄ S_mk`, Lamb shift dropped.
pub fn build_tcl_generator(h_system: &CMatrix, operators: &[(BathChannel, CMatrix)]) -> Result<TclGenerator> {
    let asym = max_hermitian_defect(h_system);
    if asym > 1e-10 {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let dim = h_system.nrows();
    let (energies, v) = hermitian_eigen(h_system)?;
    let mut channels = Vec::with_capacity(operators.len());
    for (ch, s) in operators {
        BathSpec { channels: vec![*ch] }.validate()?;
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: s.nrows() });
        }
        let se = v.adjoint() * s * &v;
        let mut ue = CMatrix::zeros(dim, dim);
        for m in 0..dim {
            for k in 0..dim {
                let delta = energies[k] - energies[m];
                let weight = if delta > 0.0 {
                    0.5 * ch.spectral_density(delta) * (ch.thermal.occupancy(delta) + 1.0)
                } else if delta < 0.0 {
                    0.5 * ch.spectral_density(-delta) * ch.thermal.occupancy(-delta)
                } else {
                    0.0
                };
                ue[(m, k)] = se[(m, k)] * weight;
            }
        }
        channels.push((s.clone(), &v * ue * v.adjoint()));
    }
    Ok(TclGenerator { channels })
}

/// Which Hamiltonian the bath correlation operators are built against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorFrame {
    /// Static dressed spectrum of `H_p` on the retained levels.
    StaticDressed,
    /// Instantaneous eigenbasis of the driven `H_s(t)`, rebuilt at every evaluation.
    InstantaneousDriven,
}

/// Dissipative part of the master equation.
pub enum Dissipator {
    Static(TclGenerator),
    Instantaneous(Vec<(BathChannel, CMatrix)>),
}

impl Dissipator {
    /// Dressed-frame generator for the lowest `levels` states of `basis`.
    pub fn dressed(basis: &DressedBasis, bath: &BathSpec, levels: usize, frame: GeneratorFrame) -> Result<Self> {
        bath.validate()?;
        let ops = channel_operators(basis, bath, levels)?;
        match frame {
            GeneratorFrame::StaticDressed => {
                let h = to_complex(&basis.energy_block(levels));
                Ok(Dissipator::Static(build_tcl_generator(&h, &ops)?))
            }
            GeneratorFrame::InstantaneousDriven => Ok(Dissipator::Instantaneous(ops)),
        }
    }

    fn apply(&self, h: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
        match self {
            Dissipator::Static(g) => Ok(g.dissipator(rho)),
            Dissipator::Instantaneous(ops) => Ok(build_tcl_generator(h, ops)?.dissipator(rho)),
        }
    }
}

/// Channel operators projected on the lowest `levels` dressed states.
pub fn channel_operators(basis: &DressedBasis, bath: &BathSpec, levels: usize) -> Result<Vec<(BathChannel, CMatrix)>> {
    bath.channels
        .iter()
        .map(|ch| Ok((*ch, to_complex(&basis.operator_block(ch.label.operator(), levels)?))))
        .collect()
}

fn master_rhs(h: &CMatrix, rho: &CMatrix, diss: &Dissipator) -> Result<CMatrix> {
    let comm = h * rho - rho * h;
    Ok(comm * C64::new(0.0, -1.0) + diss.apply(h, rho)?)
}

fn symmetrize(rho: &mut CMatrix) {
    let adj = rho.adjoint();
    *rho = (&*rho + adj) * C64::new(0.5, 0.0);
}

/// Largest trace drift tolerated before aborting.
pub const TRACE_TOLERANCE: f64 = 1e-4;

/// RK4 integration of the master equation. `max_step` bounds the internal
/// step; each step is followed by Hermitian symmetrization. `observe` runs
/// at each grid point. With `unit_trace` false the input is allowed to be
/// traceless (as for basis operators of a dynamical map) and the trace is
/// only required to stay constant.
#[allow(clippy::too_many_arguments)]
pub fn propagate_master_observe<T>(
    rho0: &CMatrix,
    h_of_t: &(dyn Fn(f64) -> CMatrix + Sync),
    diss: &Dissipator,
    t_grid: &[f64],
    max_step: f64,
    observe: impl Fn(f64, &CMatrix) -> T,
) -> Result<TimeSeries<T>> {
    let dt = check_uniform_grid(t_grid)?;
    if !(max_step > 0.0) {
        return Err(Error::invalid("max_step", "must be > 0"));
    }
    let substeps = if dt > 0.0 { (dt / max_step).ceil().max(1.0) as usize } else { 1 };
    let h = dt / substeps as f64;
    let trace0 = rho0.trace();
    let mut rho = rho0.clone();
    let mut values = Vec::with_capacity(t_grid.len());
    values.push(observe(t_grid[0], &rho));
    for &t_start in &t_grid[..t_grid.len() - 1] {
        for s in 0..substeps {
            let t = t_start + h * s as f64;
            let hm = h_of_t(t + 0.5 * h);
            let h0 = h_of_t(t);
            let h1 = h_of_t(t + h);
            let k1 = master_rhs(&h0, &rho, diss)?;
            let k2 = master_rhs(&hm, &(&rho + &k1 * C64::new(0.5 * h, 0.0)), diss)?;
            let k3 = master_rhs(&hm, &(&rho + &k2 * C64::new(0.5 * h, 0.0)), diss)?;
            let k4 = master_rhs(&h1, &(&rho + &k3 * C64::new(h, 0.0)), diss)?;
            rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
            symmetrize(&mut rho);
        }
        let drift = (rho.trace() - trace0).norm();
        if !drift.is_finite() || drift > TRACE_TOLERANCE {
            return Err(Error::TraceDrift { drift, time: t_start + dt, step: h });
        }
        values.push(observe(t_start + dt, &rho));
    }
    Ok(TimeSeries { times: t_grid.to_vec(), values })
}

/// Density-matrix trajectory from a validated initial state.
pub fn propagate_master(
    rho0: &DensityMatrix,
    h_of_t: &(dyn Fn(f64) -> CMatrix + Sync),
    diss: &Dissipator,
    t_grid: &[f64],
    max_step: f64,
) -> Result<TimeSeries<CMatrix>> {
    propagate_master_observe(&rho0.matrix, h_of_t, diss, t_grid, max_step, |_, r| r.clone())
}

/// Undriven relaxation from the dressed level `initial` on the lowest
/// `levels` states; returns `Σ_{s ≥ 1} ρ_ss(t)`.
pub fn excited_population_decay(
    basis: &DressedBasis,
    bath: &BathSpec,
    levels: usize,
    initial: usize,
    t_max: f64,
    points: usize,
) -> Result<TimeSeries<f64>> {
    if initial >= levels {
        return Err(Error::IndexOutOfRange { index: initial, dim: levels });
    }
    let diss = Dissipator::dressed(basis, bath, levels, GeneratorFrame::StaticDressed)?;
    let mut rho0 = CMatrix::zeros(levels, levels);
    rho0[(initial, initial)] = C64::new(1.0, 0.0);
    let zero = CMatrix::zeros(levels, levels);
    let grid = crate::propagate::uniform_grid(0.0, t_max, points);
    propagate_master_observe(&rho0, &|_| zero.clone(), &diss, &grid, 0.1, |_, r| (1..levels).map(|s| r[(s, s)].re).sum())
}

/// First time the series falls to `1/e` of its initial value, by linear
/// interpolation; `None` if it never does.
pub fn one_over_e_time(series: &TimeSeries<f64>) -> Option<f64> {
    let target = series.values.first()? / std::f64::consts::E;
    for k in 1..series.len() {
        let (a, b) = (series.values[k - 1], series.values[k]);
        if b <= target {
            let frac = if a == b { 0.0 } else { (a - target) / (a - b) };
            return Some(series.times[k - 1] + frac * (series.times[k] - series.times[k - 1]));
        }
    }
    None
}

/// Deterministic quasi-uniform Bloch-sphere sampling on `n` points.
pub fn fibonacci_bloch_states(n: usize) -> Vec<[C64; 2]> {
    let golden = PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let polar = z.clamp(-1.0, 1.0).acos();
            let azimuth = (golden * i as f64).rem_euclid(2.0 * PI);
            [C64::new((0.5 * polar).cos(), 0.0), C64::from_polar((0.5 * polar).sin(), azimuth)]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub bath: BathSpec,
    /// Dressed levels retained (at least 3).
    pub levels: usize,
    pub truncation_ratio: f64,
    pub frame: GeneratorFrame,
    /// Internal step in units of `1/β`.
    pub step_per_beta: f64,
    /// Grid points per pulse at which positivity is checked.
    pub checkpoints: usize,
}

impl BenchmarkConfig {
    pub fn new(bath: BathSpec) -> Self {
        BenchmarkConfig { bath, levels: 3, truncation_ratio: 1e-3, frame: GeneratorFrame::StaticDressed, step_per_beta: 0.02, checkpoints: 51 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub beta: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub n_states: usize,
    /// Smallest eigenvalue of any output state over the pulse (from the
    /// Choi matrix of the map), a positivity diagnostic.
    pub min_eigenvalue: f64,
}

/// Evolved images of the four Hermitian operators spanning the
/// computational block, and the minimum Choi eigenvalue seen along the way.
fn hadamard_map(basis: &DressedBasis, beta: f64, cfg: &BenchmarkConfig) -> Result<([CMatrix; 4], f64)> {
    let k = cfg.levels;
    let spec = SechPulseSpec { beta, theta: PI / 4.0, phi: 0.0, truncation_ratio: cfg.truncation_ratio };
    spec.validate()?;
    let model = spec.lambda_model();
    let h_of_t = move |t: f64| {
        let h3 = model.hamiltonian(t);
        let mut h = CMatrix::zeros(k, k);
        h.view_mut((0, 0), (3, 3)).copy_from(&h3);
        h
    };
    let diss = Dissipator::dressed(basis, &cfg.bath, k, cfg.frame)?;
    let tau = spec.duration();
    let grid = crate::propagate::uniform_grid(-0.5 * tau, 0.5 * tau, cfg.checkpoints.max(2));
    let one = C64::new(1.0, 0.0);
    let mut inputs = [CMatrix::zeros(k, k), CMatrix::zeros(k, k), CMatrix::zeros(k, k), CMatrix::zeros(k, k)];
    inputs[0][(0, 0)] = one;
    inputs[1][(1, 1)] = one;
    inputs[2][(0, 1)] = one;
    inputs[2][(1, 0)] = one;
    inputs[3][(0, 1)] = C64::new(0.0, 1.0);
    inputs[3][(1, 0)] = C64::new(0.0, -1.0);
    let h_step = cfg.step_per_beta / beta;
    let mut traj = Vec::with_capacity(4);
    for input in &inputs {
        traj.push(propagate_master_observe(input, &h_of_t, &diss, &grid, h_step, |_, r| r.clone())?);
    }
    let mut min_eig = f64::INFINITY;
    for step in 0..grid.len() {
        let images: [&CMatrix; 4] = [&traj[0].values[step], &traj[1].values[step], &traj[2].values[step], &traj[3].values[step]];
        min_eig = min_eig.min(choi_min_eigenvalue(images)?);
    }
    let finals = [0, 1, 2, 3].map(|i| traj[i].values.last().expect("grid has points").clone());
    Ok((finals, min_eig))
}

/// Map images of `E_00, E_11, E_01+E_10, i(E_01−E_10)` → smallest eigenvalue
/// of the normalized Choi matrix, i.e. of the output for half of a
/// maximally entangled input.
fn choi_min_eigenvalue(images: [&CMatrix; 4]) -> Result<f64> {
    let half = C64::new(0.5, 0.0);
    let e01 = (images[2] - images[3] * C64::new(0.0, 1.0)) * half;
    let e10 = (images[2] + images[3] * C64::new(0.0, 1.0)) * half;
    let blocks = [[images[0].clone(), e01], [e10, images[1].clone()]];
    let k = images[0].nrows();
    let mut choi = CMatrix::zeros(2 * k, 2 * k);
    for i in 0..2 {
        for j in 0..2 {
            choi.view_mut((i * k, j * k), (k, k)).copy_from(&(&blocks[i][j] * half));
        }
    }
    let herm = (&choi + choi.adjoint()) * half;
    Ok(hermitian_eigen(&herm)?.0[0])
}

fn output_state(images: &[CMatrix; 4], chi: &[C64; 2]) -> CMatrix {
    let (a, b) = (chi[0], chi[1]);
    let rho01 = a * b.conj();
    &images[0] * C64::new(a.norm_sqr(), 0.0)
        + &images[1] * C64::new(b.norm_sqr(), 0.0)
        + &images[2] * C64::new(rho01.re, 0.0)
        + &images[3] * C64::new(rho01.im, 0.0)
}

/// `F = ⟨χ|U†ρ_out U|χ⟩` per input state for one pulse rate.
pub fn hadamard_fidelities(basis: &DressedBasis, beta: f64, states: &[[C64; 2]], cfg: &BenchmarkConfig) -> Result<(Vec<Result<f64>>, f64)> {
    let (images, min_eig) = hadamard_map(basis, beta, cfg)?;
    let u = hadamard();
    let k = cfg.levels;
    let fids = states
        .par_iter()
        .map(|chi| {
            let rho = output_state(&images, chi);
            let trace = rho.trace().re;
            if (trace - 1.0).abs() > TRACE_TOLERANCE {
                return Err(Error::TraceDrift { drift: (trace - 1.0).abs(), time: f64::NAN, step: cfg.step_per_beta / beta });
            }
            let target = &u * nalgebra::DVector::from_row_slice(chi);
            let mut phi = nalgebra::DVector::zeros(k);
            phi[0] = target[0];
            phi[1] = target[1];
            Ok((phi.adjoint() * &rho * &phi)[(0, 0)].re)
        })
        .collect();
    Ok((fids, min_eig))
}

/// Mean and spread of the Hadamard fidelity over `n_states` Fibonacci
/// Bloch inputs at each `β`. Individual failed runs are dropped if they
/// are fewer than 0.1 % of all runs; otherwise the benchmark aborts.
pub fn hadamard_fidelity_benchmark(basis: &DressedBasis, beta_grid: &[f64], n_states: usize, cfg: &BenchmarkConfig) -> Result<Vec<FidelityRow>> {
    if n_states == 0 {
        return Err(Error::invalid("n_states", "must be >= 1"));
    }
    if cfg.levels < 3 || cfg.levels > basis.dim() {
        return Err(Error::invalid("levels", format!("must lie in [3, {}]", basis.dim())));
    }
    if !(cfg.step_per_beta > 0.0) {
        return Err(Error::invalid("step_per_beta", "must be > 0"));
    }
    for &b in beta_grid {
        ensure_finite("beta", b)?;
        if b <= 0.0 {
            return Err(Error::invalid("beta", "pulse rates must be > 0"));
        }
    }
    let states = fibonacci_bloch_states(n_states);
    let per_beta: Vec<Result<(Vec<Result<f64>>, f64)>> =
        beta_grid.par_iter().map(|&beta| hadamard_fidelities(basis, beta, &states, cfg)).collect();

    let total = beta_grid.len() * n_states;
    let mut failed = 0;
    let mut first: Option<String> = None;
    let mut rows = Vec::with_capacity(beta_grid.len());
    for (&beta, result) in beta_grid.iter().zip(per_beta) {
        match result {
            Err(e) => {
                failed += n_states;
                first.get_or_insert_with(|| format!("β = {beta}: {e}"));
            }
            Ok((fids, min_eig)) => {
                let mut ok = Vec::with_capacity(n_states);
                for f in fids {
                    match f {
                        Ok(v) => ok.push(v),
                        Err(e) => {
                            failed += 1;
                            first.get_or_insert_with(|| format!("β = {beta}: {e}"));
                        }
                    }
                }
                if ok.is_empty() {
                    continue;
                }
                let mean = pairwise_sum(&ok) / ok.len() as f64;
                let dev: Vec<f64> = ok.iter().map(|f| (f - mean).powi(2)).collect();
                let std = (pairwise_sum(&dev) / ok.len() as f64).sqrt();
                rows.push(FidelityRow { beta, mean_fidelity: mean, std_fidelity: std, n_states: ok.len(), min_eigenvalue: min_eig });
            }
        }
    }
    if failed > 0 && (failed as f64) >= 1e-3 * total as f64 {
        return Err(Error::BenchmarkFailures { failed, total, first: first.unwrap_or_default() });
    }
    Ok(rows)
}

/// `count` pulse rates `β = γ_ref · 10^{3k/(count−1)}`, spanning
/// `β/γ_ref ∈ [1, 10³]`.
pub fn default_beta_grid(gamma_ref: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|k| gamma_ref * 10f64.powf(3.0 * k as f64 / (count - 1) as f64)).collect()
}

/// `beta,mean_fidelity,std_fidelity,n_states`.
pub fn benchmark_csv(rows: &[FidelityRow]) -> String {
    crate::output::numeric_csv(
        &["beta", "mean_fidelity", "std_fidelity", "n_states"],
        rows.iter().map(|r| vec![r.beta, r.mean_fidelity, r.std_fidelity, r.n_states as f64]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, CMatrix};
    use crate::qrm::{dressed_basis, RabiParams};

    fn basis() -> DressedBasis {
        dressed_basis(&RabiParams::working_point()).unwrap()
    }

    #[test]
    fn zero_rates_give_zero_generator() {
        let b = basis();
        let diss = Dissipator::dressed(&b, &BathSpec::uniform(0.0, 0.8, 1.0), 3, GeneratorFrame::StaticDressed).unwrap();
        match diss {
            Dissipator::Static(g) => assert!(g.is_zero()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn two_level_generator_has_only_lowering_element() {
        let w = 0.7;
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[C64::new(0.0, 0.0), C64::new(w, 0.0)]));
        let ch = BathChannel { label: ChannelLabel::X, rate: 0.02, reference_frequency: 1.0, thermal: Thermal::Zero };
        let g = build_tcl_generator(&h, &[(ch, to_complex(&sigma_x()))]).unwrap();
        let u = &g.channels[0].1;
        assert!((u[(0, 1)] - C64::new(0.5 * 0.02 * w, 0.0)).norm() < 1e-15);
        assert_eq!(u[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(u[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(u[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(build_tcl_generator(&h, &[]), Err(Error::NotHermitian { .. })));
        assert!(BathSpec::uniform(-1e-3, 0.8, 1.0).validate().is_err());
    }

    #[test]
    fn two_level_relaxation_matches_rate_equation() {
        // H_s = 0 in the frame, dissipator from a splitting w
        let w = 0.6;
        let gamma = 0.05;
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[C64::new(0.0, 0.0), C64::new(w, 0.0)]));
        let ch = BathChannel { label: ChannelLabel::X, rate: gamma, reference_frequency: 1.0, thermal: Thermal::Zero };
        let g = build_tcl_generator(&h, &[(ch, to_complex(&sigma_x()))]).unwrap();
        let diss = Dissipator::Static(g);
        let mut rho0 = CMatrix::zeros(2, 2);
        rho0[(1, 1)] = C64::new(1.0, 0.0);
        let zero = CMatrix::zeros(2, 2);
        let grid = crate::propagate::uniform_grid(0.0, 100.0, 101);
        let traj = propagate_master_observe(&rho0, &|_| zero.clone(), &diss, &grid, 0.05, |_, r| r[(1, 1)].re).unwrap();
        let rate = gamma * w;
        for (&t, &p) in traj.times.iter().zip(&traj.values) {
            assert!((p - (-rate * t).exp()).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn thermal_generator_has_upward_element() {
        let w = 0.5;
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[C64::new(0.0, 0.0), C64::new(w, 0.0)]));
        let ch = BathChannel { label: ChannelLabel::X, rate: 0.01, reference_frequency: 1.0, thermal: Thermal::BoseEinstein { temperature: 0.4 } };
        let g = build_tcl_generator(&h, &[(ch, to_complex(&sigma_x()))]).unwrap();
        let n = 1.0 / (w / 0.4_f64).exp_m1();
        let u = &g.channels[0].1;
        assert!((u[(1, 0)].re - 0.5 * 0.01 * w * n).abs() < 1e-15);
        assert!((u[(0, 1)].re - 0.5 * 0.01 * w * (n + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn unitary_limit_matches_schrodinger() {
        let b = basis();
        let spec = SechPulseSpec::new(0.05, 1.0, 0.3);
        let model = spec.lambda_model();
        let diss = Dissipator::dressed(&b, &BathSpec::uniform(0.0, 0.8, 1.0), 3, GeneratorFrame::StaticDressed).unwrap();
        let psi0 = [C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)];
        let rho0 = DensityMatrix::pure(&psi0).unwrap();
        let tau = spec.duration();
        let grid = crate::propagate::uniform_grid(-0.5 * tau, 0.5 * tau, 11);
        let step = 0.01 / spec.beta;
        let h = move |t: f64| model.hamiltonian(t);
        let rho = propagate_master(&rho0, &h, &diss, &grid, step).unwrap();
        let ham = model.as_dense_hamiltonian();
        let psi = crate::propagate::propagate_schrodinger(&ham, &psi0, &grid, crate::propagate::StepOptions::with_max_step(step)).unwrap();
        for (r, p) in rho.values.iter().zip(&psi.values) {
            let pure = p * p.adjoint();
            assert!((r - &pure).norm() < 1e-8, "{}", (r - &pure).norm());
        }
    }

    #[test]
    fn fibonacci_points_cover_sphere() {
        let pts = fibonacci_bloch_states(1000);
        let mut mean = [0.0; 3];
        for [a, b] in &pts {
            assert!(((a.norm_sqr() + b.norm_sqr()) - 1.0).abs() < 1e-14);
            let rho01 = a * b.conj();
            mean[0] += 2.0 * rho01.re;
            mean[1] += -2.0 * rho01.im;
            mean[2] += a.norm_sqr() - b.norm_sqr();
        }
        assert!(mean.iter().all(|m| (m / 1000.0).abs() < 1e-2));
    }

    #[test]
    fn lossless_benchmark_is_nearly_perfect() {
        let b = basis();
        let cfg = BenchmarkConfig::new(BathSpec::uniform(0.0, 0.8, 1.0));
        let rows = hadamard_fidelity_benchmark(&b, &[0.05], 50, &cfg).unwrap();
        assert!(rows[0].mean_fidelity > 0.999 && rows[0].mean_fidelity <= 1.0 + 1e-12);
        assert!(rows[0].min_eigenvalue > -1e-6, "{}", rows[0].min_eigenvalue);
    }

    #[test]
    fn one_over_e_interpolates() {
        let ts = TimeSeries { times: vec![0.0, 1.0, 2.0], values: vec![1.0, 0.5, 0.25] };
        let t = one_over_e_time(&ts).unwrap();
        assert!(t > 1.0 && t < 2.0);
        let flat = TimeSeries { times: vec![0.0, 1.0], values: vec![1.0, 1.0] };
        assert!(one_over_e_time(&flat).is_none());
    }

    #[test]
    fn beta_grid_spans_three_decades() {
        let g = default_beta_grid(1e-2, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-2).abs() < 1e-18 && (g[6] - 10.0).abs() < 1e-12);
    }
}
