use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hqc_core::coupled::{circuit_couplings, simulate_population_inversion, CoupledCircuitParams, InversionConfig};
use hqc_core::drive::{default_step, dressed_state, lab_frame_populations, lambda_from_pulse, RabiPanel};
use hqc_core::holonomy::{
    execute_single_qubit_gate, four_step_protocol, gate_fidelity, hadamard, integrate_four_step, phase_aligned_distance, target_u2, LogicalTwoQubit,
    SechPulseSpec,
};
use hqc_core::linalg::{CMatrix, C64};
use hqc_core::open_system::{default_beta_grid, excited_population_decay, hadamard_fidelity_benchmark, one_over_e_time, BathSpec, BenchmarkConfig};
use hqc_core::propagate::uniform_grid;
use hqc_core::qrm::{dressed_basis, matrix_element, OperatorKind, RabiParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn read_oracle(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/oracles/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn selection_rules() -> Outcome {
    let basis = dressed_basis(&RabiParams::new(0.8, 0.3).with_cutoff(30)).unwrap();
    let mut worst: f64 = 0.0;
    for s in 0..9 {
        for t in 0..9 {
            let same = basis.parities[s] == basis.parities[t];
            let forbidden = [(OperatorKind::SigmaX, same), (OperatorKind::SigmaZ, !same), (OperatorKind::Quadrature, same)];
            for (kind, is_forbidden) in forbidden {
                if is_forbidden {
                    worst = worst.max(matrix_element(kind, &basis, s, t).unwrap().norm());
                }
            }
        }
    }
    outcome(worst < 1e-10, format!("largest forbidden element {worst:.2e}"))
}

fn spectrum_oracle() -> Outcome {
    let text = read_oracle("spectrum_oracle.csv");
    let mut worst: f64 = 0.0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let basis = dressed_basis(&RabiParams::new(0.8, v[0]).with_cutoff(30)).unwrap();
        for k in 0..6 {
            worst = worst.max((basis.energies[k] - v[k + 1]).abs());
        }
    }
    let free = dressed_basis(&RabiParams::new(0.8, 0.0).with_cutoff(30)).unwrap();
    let closed = [0.0, 0.8, 1.0, 1.8, 2.0, 2.8];
    let exact = (0..6).map(|k| (free.energies[k] - closed[k]).abs()).fold(0.0, f64::max);
    outcome(worst < 1e-8 && exact < 1e-12, format!("oracle deviation {worst:.2e}, g=0 closed-form deviation {exact:.2e}"))
}

/// Midpoint of the half-height crossings around the first maximum.
fn first_peak(times: &[f64], p: &[f64]) -> Option<f64> {
    let max = p.iter().copied().fold(0.0, f64::max);
    let min = p.iter().copied().fold(1.0, f64::min);
    let level = 0.5 * (max + min);
    let cross = |k: usize| times[k] + (level - p[k]) / (p[k + 1] - p[k]) * (times[k + 1] - times[k]);
    let top = p.iter().position(|&v| v > min + 0.95 * (max - min))?;
    let up = (0..top).rev().find(|&k| p[k] < level && p[k + 1] >= level)?;
    let down = (top..p.len() - 1).find(|&k| p[k] >= level && p[k + 1] < level)?;
    Some(0.5 * (cross(up) + cross(down)))
}

fn rabi_panels() -> Outcome {
    let params = RabiParams::working_point();
    let basis = dressed_basis(&params).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for panel in [RabiPanel::A, RabiPanel::B, RabiPanel::C] {
        let pulse = panel.pulse(&basis);
        let model = lambda_from_pulse(&basis, &pulse).unwrap();
        let period = model.population_period();
        let grid = uniform_grid(0.0, 2.0 * period, 4001);
        let psi0 = dressed_state(&basis, panel.initial_level()).unwrap();
        let pops = lab_frame_populations(&params, &basis, &pulse, &psi0, &grid, &[0, 1, 2], default_step(&basis)).unwrap();
        let col = |i: usize| pops.values.iter().map(|v| v[i]).collect::<Vec<f64>>();
        let p2 = col(2);
        let (max, min) = (p2.iter().copied().fold(0.0, f64::max), p2.iter().copied().fold(1.0, f64::min));
        let leak = pops.values.iter().map(|v| 1.0 - v.iter().sum::<f64>()).fold(0.0, f64::max);
        let (contrast, off_target, amplitude_ok) = match panel {
            RabiPanel::A => (max - min, col(1).into_iter().fold(leak, f64::max), true),
            RabiPanel::B => (max - min, col(0).into_iter().fold(leak, f64::max), true),
            RabiPanel::C => {
                let bright = model.bright_state().unwrap();
                let predicted = bright[1].norm_sqr();
                ((max - min) / (max + min), leak, (max - predicted).abs() < 0.05)
            }
        };
        let measured = first_peak(&pops.times, &p2).map(|t| 2.0 * t).unwrap_or(f64::NAN);
        let period_err = (measured - period).abs() / period;
        let ok = contrast > 0.95 && off_target < 0.05 && period_err < 0.03 && amplitude_ok;
        pass &= ok;
        parts.push(format!("{panel:?}: contrast {contrast:.4}, period error {:.2}%, off-target {off_target:.1e}", 100.0 * period_err));
    }
    outcome(pass, parts.join("; "))
}

fn holonomic_gates() -> Outcome {
    let basis = dressed_basis(&RabiParams::working_point()).unwrap();
    let beta = 0.02 * basis.transition(2, 1);
    let (mut min_f, mut max_leak) = (1.0f64, 0.0f64);
    for i in 0..5 {
        for j in 0..5 {
            let theta = PI * i as f64 / 4.0;
            let phi = 2.0 * PI * j as f64 / 5.0;
            let report = execute_single_qubit_gate(&SechPulseSpec::new(beta, theta, phi), &basis).unwrap();
            min_f = min_f.min(report.fidelity);
            max_leak = max_leak.max(report.leakage);
        }
    }
    let h = execute_single_qubit_gate(&SechPulseSpec::new(beta, PI / 4.0, 0.0), &basis).unwrap();
    let hf = gate_fidelity(&hadamard(), &h.achieved.to_matrix());
    outcome(
        min_f > 0.999 && max_leak < 1e-3 && hf > 0.999,
        format!("min fidelity {min_f:.6}, max leakage {max_leak:.1e}, Hadamard fidelity {hf:.6}"),
    )
}

fn open_system() -> Outcome {
    let basis = dressed_basis(&RabiParams::working_point()).unwrap();
    let bath = BathSpec::uniform(1e-2, 0.8, 1.0);
    let cfg = BenchmarkConfig::new(bath.clone());
    let grid = default_beta_grid(1e-2, 13);
    let rows = hadamard_fidelity_benchmark(&basis, &grid, 2000, &cfg).unwrap();
    let means: Vec<f64> = rows.iter().map(|r| r.mean_fidelity).collect();
    let monotone = means.windows(2).all(|w| w[1] > w[0]);
    let top = *means.last().unwrap();

    let text = read_oracle("fidelity_oracle.csv");
    let oracle: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    let betas: Vec<f64> = oracle.iter().map(|o| o.0).collect();
    let small = hadamard_fidelity_benchmark(&basis, &betas, 200, &cfg).unwrap();
    let oracle_dev = small.iter().zip(&oracle).map(|(r, o)| (r.mean_fidelity - o.1).abs()).fold(0.0, f64::max);

    let mut decay_ok = true;
    let mut times = Vec::new();
    for initial in [1, 2] {
        let series = excited_population_decay(&basis, &bath, 3, initial, 600.0, 6001).unwrap();
        let t = one_over_e_time(&series).unwrap_or(f64::INFINITY);
        decay_ok &= t > 50.0 && t < 200.0;
        times.push(t);
    }
    outcome(
        monotone && top > 0.99 && oracle_dev < 1e-6 && decay_ok,
        format!(
            "monotone {monotone}, F(β_max) {top:.5}, oracle deviation {oracle_dev:.1e}, 1/e times {:.1} and {:.1}",
            times[0], times[1]
        ),
    )
}

fn two_qubit() -> Outcome {
    let mut worst: f64 = 0.0;
    for beta in [PI / 6.0, PI / 2.0, 3.0 * PI / 4.0] {
        let res = four_step_protocol(beta).unwrap();
        worst = worst.max(phase_aligned_distance(&res.u2, &target_u2(beta)));
        let block = integrate_four_step(beta, 0.01, 0.0).unwrap() * C64::new(0.0, -1.0).powi(2);
        worst = worst.max(phase_aligned_distance(&LogicalTwoQubit::default().embed(&block), &target_u2(beta)));
    }
    let pi_gate = four_step_protocol(PI).unwrap().u2;
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, -1.0, 1.0].into_iter().map(|x| C64::new(x, 0.0)).collect()));
    let pi_dev = phase_aligned_distance(&pi_gate, &diag);
    outcome(worst < 1e-6 && pi_dev < 1e-6, format!("max distance {worst:.1e}, β=π distance {pi_dev:.1e}"))
}

fn circuit() -> Outcome {
    let c = circuit_couplings(&CoupledCircuitParams::default()).unwrap();
    let checks = [(c.jbar[0], 5e-4), (c.jbar[1], 5e-4), (c.jbar_0, 1e-3), (c.j[0], 4e-5), (c.j[1], 4e-5), (c.j_0, 8e-5)];
    let worst = checks.iter().map(|(v, r)| (v - r).abs() / r).fold(0.0, f64::max);
    outcome(
        worst < 0.15,
        format!("J̄ {:.3e}, J̄_0 {:.3e}, J {:.3e}, J_0 {:.3e}, worst relative deviation {:.1}%", c.jbar[0], c.jbar_0, c.j[0], c.j_0, 100.0 * worst),
    )
}

fn inversion() -> Outcome {
    let cfg = InversionConfig::figure().unwrap();
    let trace = simulate_population_inversion(&cfg).unwrap();
    let Some(s) = trace.summary() else {
        return outcome(false, "no inversion within the window".into());
    };
    let err = (s.j_eff_measured - 5.5e-4).abs() / 5.5e-4;
    outcome(
        err < 0.1 && s.contrast > 0.9 && s.max_leakage < 0.1,
        format!("measured J_eff {:.4e} ({:.1}% off), contrast {:.4}, max leakage {:.1e}", s.j_eff_measured, 100.0 * err, s.contrast, s.max_leakage),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("selection rules", Duration::from_secs(5), selection_rules),
        ("spectrum oracle", Duration::from_secs(10), spectrum_oracle),
        ("Rabi oscillation panels", Duration::from_secs(120), rabi_panels),
        ("holonomic gate suite", Duration::from_secs(120), holonomic_gates),
        ("open-system benchmark", Duration::from_secs(600), open_system),
        ("two-qubit gate", Duration::from_secs(10), two_qubit),
        ("circuit couplings", Duration::from_secs(1), circuit),
        ("population inversion", Duration::from_secs(600), inversion),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed < budget;
        if !pass {
            failures += 1;
        }
        println!("{} {name}: {} [{:.2}s of {}s]", if pass { "PASS" } else { "FAIL" }, out.detail, elapsed.as_secs_f64(), budget.as_secs());
    }
    println!("{} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
