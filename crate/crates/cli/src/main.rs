//! `usc-hqc`: command-line front end for the hqc-core simulations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hqc_core::coupled::{
    circuit_couplings, resonance_frequency, rwa_validity_check, simulate_population_inversion, CircuitReport, CoupledCircuitParams,
    InversionConfig,
};
use hqc_core::drive::{default_step, dressed_state, lab_frame_populations, lambda_from_pulse, trajectory_csv, RabiPanel};
use hqc_core::holonomy::{
    execute_single_qubit_gate, four_step_protocol, integrate_four_step, operator_schmidt_rank, phase_aligned_distance, target_u2, MatrixParts,
    SechPulseSpec,
};
use hqc_core::open_system::{benchmark_csv, hadamard_fidelity_benchmark, BathSpec, BenchmarkConfig, GeneratorFrame, Thermal};
use hqc_core::output::{write_atomic, write_json};
use hqc_core::propagate::uniform_grid;
use hqc_core::qrm::{dressed_basis, linear_grid, spectrum_csv, spectrum_sweep, RabiParams};
use hqc_core::{Error, Result};

#[derive(Parser)]
#[command(name = "usc-hqc", version, about = "Holonomic gates in ultrastrongly coupled quantum Rabi systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dressed spectrum as a function of the coupling g.
    Spectrum(SpectrumArgs),
    /// Driven populations of the lowest three dressed states.
    RabiDrive(RabiArgs),
    /// Single-qubit holonomic gate from a sech pulse pair.
    Gate(GateArgs),
    /// Hadamard fidelity versus pulse rate under dissipation.
    Fidelity(FidelityArgs),
    /// Population inversion between two coupled systems, plus the four-step two-qubit gate.
    TwoQubit(TwoQubitArgs),
    /// Coupling strengths from the SQUID circuit parameters.
    Circuit(CircuitArgs),
}

#[derive(Args, Serialize)]
struct SpectrumArgs {
    /// Qubit frequency [ω_c]
    #[arg(long, default_value_t = 0.8)]
    omega_a: f64,
    /// Smallest coupling [ω_c]
    #[arg(long, default_value_t = 0.0)]
    g_min: f64,
    /// Largest coupling [ω_c]
    #[arg(long, default_value_t = 1.0)]
    g_max: f64,
    /// Number of coupling values [count]
    #[arg(long, default_value_t = 101)]
    g_steps: usize,
    /// Dressed levels per row [count]
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// Fock cutoff [count]
    #[arg(long, default_value_t = 30)]
    cutoff: usize,
    /// Output CSV [path]
    #[arg(long, default_value = "spectrum.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Panel {
    A,
    B,
    C,
}

#[derive(Args, Serialize)]
struct RabiArgs {
    /// Drive configuration [label]
    #[arg(long, value_enum, default_value_t = Panel::A)]
    panel: Panel,
    /// Qubit frequency [ω_c]
    #[arg(long, default_value_t = 0.8)]
    omega_a: f64,
    /// Qubit-oscillator coupling [ω_c]
    #[arg(long, default_value_t = 0.3)]
    g: f64,
    /// Fock cutoff [count]
    #[arg(long, default_value_t = 30)]
    cutoff: usize,
    /// Override for the σx tone amplitude [ω_c]
    #[arg(long)]
    omega1: Option<f64>,
    /// Override for the σz tone amplitude [ω_c]
    #[arg(long)]
    omega2: Option<f64>,
    /// Initial dressed level, defaults to the panel's [index]
    #[arg(long)]
    initial: Option<usize>,
    /// Final time, defaults to two population periods [1/ω_c]
    #[arg(long)]
    t_max: Option<f64>,
    /// Output samples [count]
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Output CSV [path]
    #[arg(long, default_value = "rabi.csv")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GateArgs {
    /// Polar angle of the rotation axis [rad]
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    theta: f64,
    /// Azimuth of the rotation axis [rad]
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Sech rate, defaults to 0.02 ω_21 [ω_c]
    #[arg(long)]
    beta: Option<f64>,
    /// Envelope value at the pulse edges relative to the peak [ratio]
    #[arg(long, default_value_t = 1e-3)]
    truncation: f64,
    /// Qubit frequency [ω_c]
    #[arg(long, default_value_t = 0.8)]
    omega_a: f64,
    /// Qubit-oscillator coupling [ω_c]
    #[arg(long, default_value_t = 0.3)]
    g: f64,
    /// Fock cutoff [count]
    #[arg(long, default_value_t = 30)]
    cutoff: usize,
    /// Output gate report [path]
    #[arg(long, default_value = "gate.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Frame {
    Static,
    Instantaneous,
}

#[derive(Args, Serialize)]
struct FidelityArgs {
    /// Loss rate applied to every channel unless overridden [ω_c]
    #[arg(long, default_value_t = 1e-2)]
    gamma: f64,
    /// σx channel rate [ω_c]
    #[arg(long)]
    gamma_x: Option<f64>,
    /// σz channel rate [ω_c]
    #[arg(long)]
    gamma_z: Option<f64>,
    /// Cavity channel rate [ω_c]
    #[arg(long)]
    gamma_c: Option<f64>,
    /// Bath temperature, zero for a vacuum bath [ω_c]
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Smallest pulse rate [ω_c]
    #[arg(long, default_value_t = 1e-2)]
    beta_min: f64,
    /// Largest pulse rate [ω_c]
    #[arg(long, default_value_t = 10.0)]
    beta_max: f64,
    /// Logarithmically spaced pulse rates [count]
    #[arg(long, default_value_t = 13)]
    beta_count: usize,
    /// Bloch-sphere input states [count]
    #[arg(long, default_value_t = 4000)]
    states: usize,
    /// Dressed levels kept in the master equation [count]
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Frame of the bath correlation operators [label]
    #[arg(long, value_enum, default_value_t = Frame::Static)]
    frame: Frame,
    /// Qubit frequency [ω_c]
    #[arg(long, default_value_t = 0.8)]
    omega_a: f64,
    /// Qubit-oscillator coupling [ω_c]
    #[arg(long, default_value_t = 0.3)]
    g: f64,
    /// Fock cutoff [count]
    #[arg(long, default_value_t = 30)]
    cutoff: usize,
    /// Output CSV [path]
    #[arg(long, default_value = "fidelity.csv")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TwoQubitArgs {
    /// Left qubit frequency [ω_c]
    #[arg(long, default_value_t = 0.8)]
    omega_a_left: f64,
    /// Left coupling [ω_c]
    #[arg(long, default_value_t = 0.3)]
    g_left: f64,
    /// Right qubit frequency [ω_c]
    #[arg(long, default_value_t = 1.0)]
    omega_a_right: f64,
    /// Right coupling [ω_c]
    #[arg(long, default_value_t = 0.9)]
    g_right: f64,
    /// Fock cutoff per side [count]
    #[arg(long, default_value_t = 20)]
    cutoff: usize,
    /// Dressed levels kept per side [count]
    #[arg(long, default_value_t = 10)]
    levels: usize,
    /// Modulated cross-coupling amplitude J_0 [ω_c]
    #[arg(long, default_value_t = 8e-4)]
    j0: f64,
    /// Take every coupling from the circuit formulas, ignoring --j0 [flag]
    #[arg(long)]
    from_circuit: bool,
    /// Drive frequency, defaults to the Stark-shifted resonance [ω_c]
    #[arg(long)]
    omega_d: Option<f64>,
    /// Drive phase [rad]
    #[arg(long, default_value_t = 0.0)]
    phi_d: f64,
    /// Final time [1/ω_c]
    #[arg(long, default_value_t = 6500.0)]
    t_max: f64,
    /// Output samples [count]
    #[arg(long, default_value_t = 6501)]
    points: usize,
    /// Phase of the four-step controlled gate [rad]
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    beta_phase: f64,
    /// Also integrate the four steps with this logical coupling [ω_c]
    #[arg(long)]
    step_coupling: Option<f64>,
    /// Flat-top ramp time for the integrated steps [1/ω_c]
    #[arg(long, default_value_t = 0.0)]
    rise: f64,
    /// Output inversion CSV [path]
    #[arg(long, default_value = "inversion.csv")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CircuitArgs {
    /// Left resonator impedance [Ω]
    #[arg(long, default_value_t = 80.0)]
    z_left: f64,
    /// Right resonator impedance [Ω]
    #[arg(long, default_value_t = 80.0)]
    z_right: f64,
    /// Left resonator capacitance [F]
    #[arg(long, default_value_t = 200e-15)]
    c_left: f64,
    /// Right resonator capacitance [F]
    #[arg(long, default_value_t = 200e-15)]
    c_right: f64,
    /// Left resonator frequency [ω_c]
    #[arg(long, default_value_t = 1.0)]
    omega_left: f64,
    /// Right resonator frequency [ω_c]
    #[arg(long, default_value_t = 1.0)]
    omega_right: f64,
    /// SQUID critical current [A]
    #[arg(long, default_value_t = 180e-6)]
    ic: f64,
    /// Reduced flux quantum ħ/2e [Wb]
    #[arg(long, default_value_t = 3.2911e-16)]
    flux_quantum: f64,
    /// Static bias phase [rad]
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    phi_bar: f64,
    /// Modulation depth, defaults to 0.1 φ̄ [rad]
    #[arg(long)]
    delta_phi: Option<f64>,
    /// Output coupling report [path]
    #[arg(long, default_value = "circuit.json")]
    out: PathBuf,
}

#[derive(Serialize)]
struct Sidecar<'a, A: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    args: &'a A,
    results: R,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.config.json"))
}

fn write_sidecar<A: Serialize, R: Serialize>(command: &str, out: &Path, args: &A, results: R) -> Result<()> {
    let side = Sidecar { command, version: env!("CARGO_PKG_VERSION"), args, results };
    write_json(&sidecar_path(out), &side)
}

fn rabi_params(omega_a: f64, g: f64, cutoff: usize) -> RabiParams {
    RabiParams::new(omega_a, g).with_cutoff(cutoff)
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    if a.g_steps == 0 {
        return Err(invalid("--g-steps", "must be at least 1"));
    }
    let grid = linear_grid(a.g_min, a.g_max, a.g_steps);
    let sweep = spectrum_sweep(a.omega_a, &grid, a.levels, a.cutoff)?;
    write_atomic(&a.out, spectrum_csv(&sweep).as_bytes())?;
    write_sidecar("spectrum", &a.out, a, serde_json::json!({ "rows": sweep.rows.len() }))
}

fn cmd_rabi_drive(a: &RabiArgs) -> Result<()> {
    let params = rabi_params(a.omega_a, a.g, a.cutoff);
    let basis = dressed_basis(&params)?;
    let panel = match a.panel {
        Panel::A => RabiPanel::A,
        Panel::B => RabiPanel::B,
        Panel::C => RabiPanel::C,
    };
    let mut pulse = panel.pulse(&basis);
    if let Some(w) = a.omega1 {
        pulse.omega1_amp = w;
    }
    if let Some(w) = a.omega2 {
        pulse.omega2_amp = w;
    }
    pulse.validate()?;
    let initial = a.initial.unwrap_or(panel.initial_level());
    let model = lambda_from_pulse(&basis, &pulse)?;
    let period = model.population_period();
    let t_max = match a.t_max {
        Some(t) => t,
        None if period.is_finite() => 2.0 * period,
        None => 100.0,
    };
    if !(t_max > 0.0 && t_max.is_finite()) || a.points < 2 {
        return Err(invalid("--t-max", "needs t_max > 0 and at least 2 points"));
    }
    let grid = uniform_grid(0.0, t_max, a.points);
    let psi0 = dressed_state(&basis, initial)?;
    let pops = lab_frame_populations(&params, &basis, &pulse, &psi0, &grid, &[0, 1, 2], default_step(&basis))?;
    write_atomic(&a.out, trajectory_csv(&pops).as_bytes())?;
    let results = serde_json::json!({
        "pulse": pulse,
        "initial_level": initial,
        "t_max": t_max,
        "lambda_population_period": if period.is_finite() { Some(period) } else { None },
    });
    write_sidecar("rabi-drive", &a.out, a, results)
}

fn cmd_gate(a: &GateArgs) -> Result<()> {
    let basis = dressed_basis(&rabi_params(a.omega_a, a.g, a.cutoff))?;
    let beta = a.beta.unwrap_or(0.02 * basis.transition(2, 1));
    let spec = SechPulseSpec { beta, theta: a.theta, phi: a.phi, truncation_ratio: a.truncation };
    let report = execute_single_qubit_gate(&spec, &basis)?;
    write_json(&a.out, &report)?;
    write_sidecar("gate", &a.out, a, serde_json::json!({ "beta": beta, "fidelity": report.fidelity, "leakage": report.leakage }))
}

fn cmd_fidelity(a: &FidelityArgs) -> Result<()> {
    let params = rabi_params(a.omega_a, a.g, a.cutoff);
    let basis = dressed_basis(&params)?;
    let mut bath = BathSpec::ohmic(
        a.gamma_x.unwrap_or(a.gamma),
        a.gamma_z.unwrap_or(a.gamma),
        a.gamma_c.unwrap_or(a.gamma),
        params.omega_a,
        params.omega_c,
    );
    if a.temperature < 0.0 || !a.temperature.is_finite() {
        return Err(invalid("--temperature", "must be finite and ≥ 0"));
    }
    if a.temperature > 0.0 {
        for ch in &mut bath.channels {
            ch.thermal = Thermal::BoseEinstein { temperature: a.temperature };
        }
    }
    if !(a.beta_min > 0.0 && a.beta_max >= a.beta_min && a.beta_max.is_finite()) || a.beta_count == 0 {
        return Err(invalid("--beta-min", "needs 0 < beta_min ≤ beta_max and beta_count ≥ 1"));
    }
    let grid: Vec<f64> = if a.beta_count == 1 {
        vec![a.beta_min]
    } else {
        let ratio = (a.beta_max / a.beta_min).log10();
        (0..a.beta_count)
            .map(|k| if k + 1 == a.beta_count { a.beta_max } else { a.beta_min * 10f64.powf(ratio * k as f64 / (a.beta_count - 1) as f64) })
            .collect()
    };
    let mut cfg = BenchmarkConfig::new(bath);
    cfg.levels = a.levels;
    cfg.frame = match a.frame {
        Frame::Static => GeneratorFrame::StaticDressed,
        Frame::Instantaneous => GeneratorFrame::InstantaneousDriven,
    };
    let rows = hadamard_fidelity_benchmark(&basis, &grid, a.states, &cfg)?;
    write_atomic(&a.out, benchmark_csv(&rows).as_bytes())?;
    write_sidecar("fidelity", &a.out, a, serde_json::json!({ "bath": cfg.bath, "rows": rows }))
}

fn cmd_two_qubit(a: &TwoQubitArgs) -> Result<()> {
    let base = if a.from_circuit { InversionConfig::from_circuit()? } else { InversionConfig::figure()? };
    let couplings = if a.from_circuit { base.couplings } else { base.couplings.with_modulation_amplitude(a.j0) };
    let cfg = InversionConfig {
        left: rabi_params(a.omega_a_left, a.g_left, a.cutoff),
        right: rabi_params(a.omega_a_right, a.g_right, a.cutoff),
        couplings,
        levels: a.levels,
        omega_d: a.omega_d,
        phi_d: a.phi_d,
        t_max: a.t_max,
        points: a.points,
    };
    cfg.validate()?;
    let left = dressed_basis(&cfg.left)?;
    let right = dressed_basis(&cfg.right)?;
    let resonance = resonance_frequency(&left, &right, &cfg.couplings)?;
    let omega_d = cfg.omega_d.unwrap_or(resonance.omega_d);
    let rwa = rwa_validity_check(&left, &right, &cfg.couplings, omega_d)?;
    for c in rwa.iter().filter(|c| !c.satisfied) {
        eprintln!("warning: rotating-wave condition {} holds only with margin {:.3}", c.name, c.margin);
    }
    if resonance.degenerate {
        eprintln!("warning: the two sides are nearly degenerate");
    }
    let trace = simulate_population_inversion(&cfg)?;
    if trace.rwa_breakdown {
        eprintln!("warning: leakage {:.3} out of the tracked pair", trace.max_leakage);
    }
    write_atomic(&a.out, trace.to_csv().as_bytes())?;

    let protocol = four_step_protocol(a.beta_phase)?;
    let integrated = match a.step_coupling {
        Some(j) => {
            let u = integrate_four_step(a.beta_phase, j, a.rise)?;
            Some(serde_json::json!({ "raw_block": MatrixParts::from_matrix(&u), "distance": phase_aligned_distance(&u, &protocol.raw_block) }))
        }
        None => None,
    };
    let results = serde_json::json!({
        "couplings": cfg.couplings,
        "resonance": resonance,
        "rwa": rwa,
        "summary": trace.summary(),
        "j_eff": trace.j_eff,
        "max_leakage": trace.max_leakage,
        "four_step": {
            "beta_phase": a.beta_phase,
            "steps": protocol.steps,
            "u2": MatrixParts::from_matrix(&protocol.u2),
            "target": MatrixParts::from_matrix(&target_u2(a.beta_phase)),
            "distance": phase_aligned_distance(&protocol.u2, &target_u2(a.beta_phase)),
            "schmidt_rank": operator_schmidt_rank(&protocol.u2, 1e-9),
            "integrated": integrated,
        },
    });
    write_sidecar("two-qubit", &a.out, a, results)
}

fn cmd_circuit(a: &CircuitArgs) -> Result<()> {
    let inputs = CoupledCircuitParams {
        impedance: [a.z_left, a.z_right],
        capacitance: [a.c_left, a.c_right],
        omega: [a.omega_left, a.omega_right],
        critical_current: a.ic,
        flux_quantum: a.flux_quantum,
        phi_bar: a.phi_bar,
        delta_phi: a.delta_phi.unwrap_or(0.1 * a.phi_bar),
    };
    let report = CircuitReport { inputs, couplings: circuit_couplings(&inputs)? };
    write_json(&a.out, &report)?;
    write_sidecar("circuit", &a.out, a, serde_json::Value::Null)
}

fn invalid(flag: &'static str, reason: &str) -> Error {
    Error::InvalidParameter { name: flag, reason: reason.to_string() }
}

/// Command-line flag behind a core parameter name.
fn flag_for(name: &str) -> String {
    let mapped = match name {
        "n_levels" => "--levels",
        "g_grid" => "--g-min/--g-max",
        "n_fock" => "--cutoff",
        "n_states" => "--states",
        "truncation_ratio" => "--truncation",
        "omega_amp" => "--omega1/--omega2",
        "rate" => "--gamma",
        "coupling" => "--step-coupling",
        other if other.starts_with("--") => other,
        other => return format!("--{}", other.replace('_', "-")),
    };
    mapped.to_string()
}

fn configure_workers() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var("HQC_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("HQC_WORKERS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("HQC_WORKERS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_workers() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::RabiDrive(a) => cmd_rabi_drive(a),
        Command::Gate(a) => cmd_gate(a),
        Command::Fidelity(a) => cmd_fidelity(a),
        Command::TwoQubit(a) => cmd_two_qubit(a),
        Command::Circuit(a) => cmd_circuit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::InvalidParameter { name, reason } => eprintln!("error: invalid value for {}: {reason}", flag_for(name)),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
