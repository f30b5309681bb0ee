use hqc_core::coupled::{
    circuit_couplings, effective_coupling, resonance_frequency, simulate_population_inversion, CoupledCircuitParams, InversionConfig,
};
use hqc_core::linalg::RMatrix;
use hqc_core::open_system::{excited_population_decay, one_over_e_time, BathSpec};
use hqc_core::qrm::{build_rabi_hamiltonian, dressed_basis, matrix_element, OperatorKind, RabiParams};

fn scalar_oracle() -> serde_json::Value {
    let path = format!("{}/tests/oracles/scalar_oracle.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap()
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
fn jacobi_eigenvalues(mut a: RMatrix) -> Vec<f64> {
    let n = a.nrows();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn dressed_energies_match_jacobi() {
    for g in [0.0, 0.15, 0.3, 0.7, 1.0] {
        let params = RabiParams::new(0.8, g).with_cutoff(10);
        let reference = jacobi_eigenvalues(build_rabi_hamiltonian(&params).unwrap());
        let basis = dressed_basis(&params).unwrap();
        for (k, e) in basis.energies.iter().enumerate() {
            assert!((e + basis.ground_energy - reference[k]).abs() < 1e-10, "g={g} level {k}");
        }
    }
}

#[test]
fn working_point_transitions() {
    let o = scalar_oracle();
    let b = dressed_basis(&RabiParams::working_point()).unwrap();
    let wp = &o["working_point"];
    assert!((b.transition(1, 0) - num(&wp["omega10"])).abs() < 1e-10);
    assert!((b.transition(2, 0) - num(&wp["omega20"])).abs() < 1e-10);
    assert!((b.transition(2, 1) - num(&wp["omega21"])).abs() < 1e-10);
}

#[test]
fn relaxation_times() {
    let o = scalar_oracle();
    let b = dressed_basis(&RabiParams::working_point()).unwrap();
    let bath = BathSpec::uniform(1e-2, 0.8, 1.0);
    for (initial, key) in [(1, "from_1"), (2, "from_2")] {
        let series = excited_population_decay(&b, &bath, 3, initial, 400.0, 40001).unwrap();
        let t = one_over_e_time(&series).unwrap();
        let expect = num(&o["decay_one_over_e"][key]);
        // the oracle is a secular rate equation
        assert!((t - expect).abs() / expect < 5e-3, "{key}: {t} vs {expect}");
    }
}

#[test]
fn coupled_scalars() {
    let o = &scalar_oracle()["coupled"];
    let c = circuit_couplings(&CoupledCircuitParams::default()).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(c.jbar[0], num(&o["jbar_j"])) < 1e-12);
    assert!(rel(c.jbar_0, num(&o["jbar_0"])) < 1e-12);
    assert!(rel(c.j[1], num(&o["j_j"])) < 1e-12);
    assert!(rel(c.j_0, num(&o["j_0"])) < 1e-12);

    let l = dressed_basis(&RabiParams::new(0.8, 0.3).with_cutoff(40)).unwrap();
    let r = dressed_basis(&RabiParams::new(1.0, 0.9).with_cutoff(40)).unwrap();
    let res = resonance_frequency(&l, &r, &c).unwrap();
    assert!((res.omega_d - num(&o["omega_d"])).abs() < 1e-9);
    assert!((res.bare - num(&o["omega_d_bare"])).abs() < 1e-9);
    let x = |b, s| matrix_element(OperatorKind::QuadratureSquared, b, s, s).unwrap().re;
    assert!((x(&l, 0) - num(&o["left_X00"])).abs() < 1e-9);
    assert!((x(&l, 1) - num(&o["left_X11"])).abs() < 1e-9);
    assert!((x(&r, 0) - num(&o["right_X00"])).abs() < 1e-9);
    assert!((x(&r, 1) - num(&o["right_X11"])).abs() < 1e-9);
    let j_eff = effective_coupling(&l, &r, 2.0).unwrap();
    assert!((j_eff - num(&o["abs_f01_product"])).abs() < 1e-9);
}

#[test]
fn inversion_follows_two_level_model() {
    let mut cfg = InversionConfig::figure().unwrap();
    let j_eff = {
        let l = dressed_basis(&cfg.left).unwrap();
        let r = dressed_basis(&cfg.right).unwrap();
        effective_coupling(&l, &r, cfg.couplings.j_0).unwrap()
    };
    cfg.t_max = std::f64::consts::PI / j_eff;
    cfg.points = 2001;
    let trace = simulate_population_inversion(&cfg).unwrap();
    let worst = trace
        .times
        .iter()
        .zip(&trace.p01)
        .map(|(t, p)| (p - (trace.j_eff * t).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "{worst}");
    assert!(!trace.rwa_breakdown);
}

#[test]
fn projection_converges_in_levels() {
    let base = InversionConfig::figure().unwrap();
    let cfg = |levels| InversionConfig { couplings: base.couplings.with_modulation_amplitude(2e-2), levels, t_max: 200.0, points: 201, ..base.clone() };
    let small = simulate_population_inversion(&cfg(10)).unwrap();
    let large = simulate_population_inversion(&cfg(14)).unwrap();
    let worst = small.p01.iter().zip(&large.p01).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let moved = large.p01.iter().copied().fold(0.0, f64::max);
    assert!(moved > 0.5, "{moved}");
    assert!(worst < 1e-2, "{worst}");
}
