use std::f64::consts::PI;

use proptest::prelude::*;

use hqc_core::coupled::{circuit_couplings, CoupledCircuitParams};
use hqc_core::holonomy::{four_step_protocol, gate_fidelity, phase_aligned_distance, single_qubit_holonomy_matrix, target_u2, unitarity_defect};
use hqc_core::linalg::{CMatrix, C64};
use hqc_core::open_system::{BathSpec, Dissipator, GeneratorFrame, TclGenerator};
use hqc_core::qrm::{dressed_basis, matrix_element, OperatorKind, RabiParams};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

fn random_density(entries: &[f64]) -> CMatrix {
    let a = CMatrix::from_fn(3, 3, |i, j| C64::new(entries[3 * i + j], entries[9 + 3 * i + j]));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn static_generator(bath: &BathSpec) -> TclGenerator {
    let basis = dressed_basis(&RabiParams::working_point()).unwrap();
    match Dissipator::dressed(&basis, bath, 3, GeneratorFrame::StaticDressed).unwrap() {
        Dissipator::Static(g) => g,
        Dissipator::Instantaneous(_) => unreachable!(),
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn parity_selection_rules(omega_a in 0.2f64..1.5, g in 0.0f64..1.0) {
        let basis = dressed_basis(&RabiParams::new(omega_a, g).with_cutoff(24)).unwrap();
        for s in 0..6 {
            for t in 0..6 {
                let same = basis.parities[s] == basis.parities[t];
                let x = matrix_element(OperatorKind::SigmaX, &basis, s, t).unwrap().norm();
                let z = matrix_element(OperatorKind::SigmaZ, &basis, s, t).unwrap().norm();
                let f = matrix_element(OperatorKind::Quadrature, &basis, s, t).unwrap().norm();
                if same {
                    prop_assert!(x < 1e-10 && f < 1e-10);
                } else {
                    prop_assert!(z < 1e-10);
                }
            }
        }
    }

    #[test]
    fn holonomy_is_a_reflection(theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI) {
        let u = single_qubit_holonomy_matrix(theta, phi);
        prop_assert!(unitarity_defect(&u) < 1e-12);
        prop_assert!((&u * &u - CMatrix::identity(2, 2)).camax() < 1e-12);
        prop_assert!((gate_fidelity(&u, &u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_step_matches_target(beta in (-PI + 1e-9)..PI) {
        let res = four_step_protocol(beta).unwrap();
        prop_assert!(phase_aligned_distance(&res.u2, &target_u2(beta)) < 1e-10);
        prop_assert!(unitarity_defect(&res.u2) < 1e-12);
    }

    #[test]
    fn modulated_coupling_linear_in_depth(depth in 0.0f64..0.2, z_right in 40.0f64..120.0) {
        let base = CoupledCircuitParams { impedance: [80.0, z_right], ..CoupledCircuitParams::default() };
        let a = circuit_couplings(&CoupledCircuitParams { delta_phi: depth * base.phi_bar, ..base }).unwrap();
        let b = circuit_couplings(&CoupledCircuitParams { delta_phi: 0.5 * depth * base.phi_bar, ..base }).unwrap();
        prop_assert!((a.j[1] - 2.0 * b.j[1]).abs() <= 1e-15 * a.j[1].abs().max(1e-30));
        prop_assert!((a.jbar_0 - 2.0 * (a.jbar[0] * a.jbar[1]).sqrt()).abs() < 1e-18);
        prop_assert_eq!(a.jbar, b.jbar);
    }

    #[test]
    fn dissipator_is_traceless_and_hermitian(entries in prop::collection::vec(-1.0f64..1.0, 18), gamma in 1e-4f64..1e-1) {
        let rho = random_density(&entries);
        let d = static_generator(&BathSpec::uniform(gamma, 0.8, 1.0)).dissipator(&rho);
        prop_assert!(d.trace().norm() < 1e-14);
        prop_assert!((&d - d.adjoint()).camax() < 1e-14);
    }
}
