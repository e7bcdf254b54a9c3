use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use holonomy::dynamics::{evolve_schrodinger, EvolutionOptions, Hamiltonian};
use holonomy::metrics::{gate_input_state, gate_target_state, state_fidelity};
use holonomy::path::{
    bright_dark_basis, dynamical_phase, eq_residuals, error_sensitivity_qs, holonomy_target, inverse_engineer, qs_closed_form,
    standard_path, HolonomySpec, PathSpec,
};
use holonomy::quantum::{tensor, DensityMatrix, Operator, StateVector, C64};
use holonomy::transmon::{single_qubit_hamiltonian, DriveModel, DriveSnapshot, TransmonParams, TwoQubitDeviceParams, TwoQubitSystem};
use holonomy::two_qubit::target_two_qubit_unitary;

fn complex_matrix(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n)
        .prop_map(move |v| DMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| C64::new(re, im))))
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn pure_state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(move |v| {
            let amps = nalgebra::DVector::from_iterator(n, v.into_iter().map(|(re, im)| C64::new(re, im)));
            StateVector::normalized(amps, vec![n]).unwrap()
        })
}

fn gate() -> impl Strategy<Value = HolonomySpec> {
    (0.1..PI - 0.1, -PI..PI, 0.2..2.0 * PI).prop_map(|(theta, phi, gamma)| HolonomySpec::new(theta, phi, gamma))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(a in complex_matrix(2), b in complex_matrix(2), c in complex_matrix(3)) {
        let (a, b, c) = (Operator::from_matrix(a).unwrap(), Operator::from_matrix(b).unwrap(), Operator::from_matrix(c).unwrap());
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert!(max_diff(left.matrix(), right.matrix()) < 1e-12);
    }

    #[test]
    fn double_dagger_is_identity(a in complex_matrix(3)) {
        let op = Operator::from_matrix(a).unwrap();
        let back = op.dagger().dagger();
        prop_assert_eq!(back.matrix(), op.matrix());
    }

    #[test]
    fn hermitian_spectrum_sums_to_trace(a in complex_matrix(4)) {
        let h = Operator::from_matrix(&a + a.adjoint()).unwrap();
        let sum: f64 = h.hermitian_eigenvalues().iter().sum();
        prop_assert!((sum - h.matrix().trace().re).abs() < 1e-10);
    }

    #[test]
    fn holonomy_is_unitary_with_unit_determinant(spec in gate()) {
        let u = holonomy_target(&spec);
        prop_assert!(max_diff(&(u.adjoint() * &u), &DMatrix::identity(2, 2)) < 1e-12);
        prop_assert!((u.determinant().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controls_round_trip(spec in gate(), n in 0.0..2.0f64, tau in 40.0..120.0f64, frac in 0.001..0.999f64) {
        prop_assume!((frac - 0.5).abs() > 0.001);
        let path = standard_path(tau, spec, n).unwrap();
        let wf = inverse_engineer(&path, 10.0).unwrap();
        let s = wf.at(frac * tau);
        let (a, b) = eq_residuals(&path, &s);
        prop_assert!(a.abs() < 1e-8 && b.abs() < 1e-8, "residuals {a:e} {b:e}");
        // φ₂ is built from φ₁, not solved for.
        prop_assert!((s.phi1 + s.phi2 + PI - spec.phi).abs() < 1e-14);
    }

    #[test]
    fn dark_state_is_decoupled(spec in gate(), n in 0.0..2.0f64, frac in 0.0..1.0f64) {
        let path = standard_path(60.0, spec, n).unwrap();
        let wf = inverse_engineer(&path, 10.0).unwrap();
        let h = single_qubit_hamiltonian(&wf, spec.theta, &TransmonParams::default(), DriveModel::Ideal3).unwrap();
        let (_, dark) = bright_dark_basis(spec.theta, spec.phi);
        prop_assert!(h.operator(frac * 60.0).apply(&dark).unwrap().norm() < 1e-12);
    }

    #[test]
    fn built_hamiltonians_are_hermitian(spec in gate(), n in 0.0..2.0f64, frac in 0.0..1.0f64,
                                        omega in (0.0..3.0f64, 0.0..3.0f64), phase in (-PI..PI, -PI..PI), shift in -1.0..1.0f64) {
        let path = standard_path(60.0, spec, n).unwrap();
        let wf = inverse_engineer(&path, 10.0).unwrap();
        let h = single_qubit_hamiltonian(&wf, spec.theta, &TransmonParams::default(), DriveModel::Leaky4).unwrap();
        prop_assert!(h.operator(frac * 60.0).hermiticity_error() < 1e-13);
        let system = TwoQubitSystem::new(TwoQubitDeviceParams::default()).unwrap();
        let drive = DriveSnapshot { omega: [omega.0, omega.1], phase: [phase.0, phase.1], shift };
        prop_assert!(system.hamiltonian(&drive).hermiticity_error() < 1e-13);
    }

    #[test]
    fn state_fidelity_is_linear(a in pure_state(4), b in pure_state(4), t in pure_state(4), w in 0.0..1.0f64) {
        let (ra, rb) = (a.to_density(), b.to_density());
        let mixed: DensityMatrix = ra.mix(&rb, w).unwrap();
        let lhs = state_fidelity(&mixed, &t).unwrap();
        let rhs = w * state_fidelity(&ra, &t).unwrap() + (1.0 - w) * state_fidelity(&rb, &t).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gate_inputs_are_two_pi_periodic(spec in gate(), theta in 0.0..2.0 * PI) {
        let shifted = theta + 2.0 * PI;
        let d = |x: &StateVector, y: &StateVector| (x.amplitudes() - y.amplitudes()).norm();
        prop_assert!(d(&gate_input_state(4, theta).unwrap(), &gate_input_state(4, shifted).unwrap()) < 1e-12);
        prop_assert!(d(&gate_target_state(&spec, 4, theta).unwrap(), &gate_target_state(&spec, 4, shifted).unwrap()) < 1e-12);
    }

    #[test]
    fn two_qubit_target_is_an_involution(vartheta in 0.0..PI) {
        let u = target_two_qubit_unitary(vartheta);
        prop_assert!(max_diff(&(&u * &u), &DMatrix::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn sensitivity_matches_closed_form(n in 0.0..3.0f64) {
        let qs = error_sensitivity_qs(&PathSpec::family(50.0, HolonomySpec::not_gate(), n).unwrap()).unwrap();
        prop_assert!((qs - qs_closed_form(n)).abs() < 1e-8, "n = {n}: {qs} vs {}", qs_closed_form(n));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn standard_paths_have_no_dynamical_phase(spec in gate(), n in 0.0..2.0f64) {
        let path = standard_path(55.0, spec, n).unwrap();
        prop_assert!(dynamical_phase(&path).unwrap().abs() < 1e-6);
    }

    /// Evolving |b⟩ over the loop returns it with phase γ.
    #[test]
    fn bright_state_picks_up_the_geometric_phase(spec in gate(), n in 0.0..1.5f64) {
        let path = standard_path(60.0, spec, n).unwrap();
        let wf = inverse_engineer(&path, 10.0).unwrap();
        let h = single_qubit_hamiltonian(&wf, spec.theta, &TransmonParams::default(), DriveModel::Ideal3).unwrap();
        let (bright, _) = bright_dark_basis(spec.theta, spec.phi);
        let opts = EvolutionOptions { max_samples: 2, ..Default::default() };
        let psi = evolve_schrodinger(&h, &bright, 0.0, 60.0, &opts).unwrap().final_state;
        let overlap = bright.inner(&psi).unwrap();
        prop_assert!((overlap.norm() - 1.0).abs() < 1e-6);
        let mismatch = (overlap * C64::from_polar(1.0, -spec.gamma)).arg();
        prop_assert!(mismatch.abs() < 1e-4, "phase off by {mismatch}");
    }
}

/// No jumps on a Δn = 1e−3 grid beyond the closed form's own steps, which
/// reach 4.19e−3 near n = 0.41 where |dq_s/dn| is largest.
#[test]
fn sensitivity_is_continuous_in_n() {
    let grid: Vec<f64> = (0..=2000).map(|k| k as f64 * 1e-3).collect();
    let qs: Vec<f64> = grid
        .iter()
        .map(|&n| error_sensitivity_qs(&PathSpec::family(50.0, HolonomySpec::not_gate(), n).unwrap()).unwrap())
        .collect();
    for (k, w) in qs.windows(2).enumerate() {
        let exact = qs_closed_form(grid[k + 1]) - qs_closed_form(grid[k]);
        assert!((w[1] - w[0] - exact).abs() < 1e-8, "step at n = {} differs from closed form", grid[k]);
        assert!((w[1] - w[0]).abs() < 4.2e-3, "jump at n = {}", grid[k]);
    }
    for n in [1.0, 2.0, 3.0] {
        let q = error_sensitivity_qs(&PathSpec::family(50.0, HolonomySpec::not_gate(), n).unwrap()).unwrap();
        assert!(q < 1e-8, "q_s({n}) = {q}");
    }
}
