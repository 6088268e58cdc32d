use std::f64::consts::PI;

use bathsim::analysis::fit_exponential;
use bathsim::cli::config::{parse_angle, parse_frequency};
use bathsim::cli::output::fmt_e;
use bathsim::model::{
    build_hamiltonian, design_drive, effective_rabi, frame_vectors, rotation_matrix, theta_closed_form,
    SystemParams, TargetState,
};
use bathsim::operators::{expm, kron, partial_trace_resonator_op, Operator, Space};
use bathsim::tcl::{populations, RateMode};
use bathsim::units::mhz_2pi;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols).prop_map(move |v| {
        let entries: Vec<C64> = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        Operator::from_row_major(rows, cols, &entries).unwrap()
    })
}

fn target() -> impl Strategy<Value = TargetState> {
    (0.0f64..PI, 0.0f64..2.0 * PI).prop_map(|(t, p)| TargetState::new(t, p).unwrap())
}

fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(a in matrix(2, 2), b in matrix(3, 3), c in matrix(2, 2), d in matrix(3, 3)) {
        let lhs = Operator::from_matrix(kron(&a, &b).matrix() * kron(&c, &d).matrix());
        let rhs = kron(
            &Operator::from_matrix(a.matrix() * c.matrix()),
            &Operator::from_matrix(b.matrix() * d.matrix()),
        );
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn kron_associative(a in matrix(2, 2), b in matrix(2, 3), c in matrix(3, 2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(close(&left, &right, 1e-15));
    }

    #[test]
    fn expm_inverse(m in matrix(4, 4), scale in 0.1f64..2.5) {
        // Entries below 1 in modulus keep the 1-norm under 10.
        let m = m.scale_re(scale);
        let p = expm(&m).unwrap();
        let q = expm(&m.scale_re(-1.0)).unwrap();
        let prod = Operator::from_matrix(p.matrix() * q.matrix());
        prop_assert!(close(&prod, &Operator::identity(4), 1e-10));
    }

    #[test]
    fn partial_trace_linear_and_trace_preserving(
        a in matrix(6, 6), b in matrix(6, 6), s in -2.0f64..2.0,
    ) {
        let tag = |op: Operator| op.with_space(Space::Joint(2)).unwrap();
        let (ta, tb) = (tag(a.clone()), tag(b.clone()));
        let sum = tag(Operator::from_matrix(a.matrix() + b.matrix().scale(s)));
        let lhs = partial_trace_resonator_op(&sum).unwrap();
        let ra = partial_trace_resonator_op(&ta).unwrap();
        let rb = partial_trace_resonator_op(&tb).unwrap();
        let rhs = Operator::from_matrix(ra.matrix() + rb.matrix().scale(s));
        prop_assert!(close(&lhs, &rhs, 1e-12));
        prop_assert!((ra.trace() - ta.trace()).norm() < 1e-12);
    }

    #[test]
    fn rotation_is_proper_orthogonal(t in target()) {
        let r = rotation_matrix(&t);
        let err = (r.transpose() * r - nalgebra::Matrix3::identity()).abs().max();
        prop_assert!(err < 1e-14);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn theta_vector_normalized(t in target()) {
        let (p, m, z) = theta_closed_form(&t);
        prop_assert!((p.norm_sqr() + m.norm_sqr() + 2.0 * z.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn design_reproduces_rabi_and_zeroes_transverse(t in target(), omega_mhz in 1.0f64..500.0) {
        let omega_bar = mhz_2pi(omega_mhz);
        let dd = design_drive(&t, omega_bar, &SystemParams::typical()).unwrap();
        let rabi = effective_rabi(&dd.system, &dd.drive, &dd.target);
        prop_assert!((rabi / omega_bar - 1.0).abs() < 1e-12);
        let fv = frame_vectors(&dd.system, &dd.drive, &dd.target);
        prop_assert!(fv.a[0].abs() < 1e-12 * omega_bar);
        prop_assert!(fv.a[1].abs() < 1e-12 * omega_bar);
        prop_assert!(fv.delta_minus.abs() < 1e-12 * omega_bar);
        prop_assert!((fv.a[2] - omega_bar).abs() < 1e-12 * omega_bar);
    }

    #[test]
    fn antipode_minus_is_plus(t in target()) {
        let overlap = t.antipode().minus_ket().dotc(&t.plus_ket()).norm();
        prop_assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_hermitian(t in target(), g in 0.1f64..10.0, omega_mhz in 1.0f64..300.0) {
        let sys = SystemParams { g: mhz_2pi(g), fock: 5, ..SystemParams::typical() };
        let dd = design_drive(&t, mhz_2pi(omega_mhz), &sys).unwrap();
        let h = build_hamiltonian(&dd.system, &dd.drive).unwrap();
        prop_assert!(h.hermiticity_deviation() < 1e-14 * h.max_abs());
    }

    #[test]
    fn rate_equation_conserves_probability(
        g4 in 0.0f64..1e7, g5 in 0.0f64..1e7, nbar in 0.0f64..3.0, p in 0.0f64..1.0, t in 0.0f64..1e-5,
    ) {
        let terms = [(g4, RateMode::Mode4), (g5, RateMode::Mode5)];
        let q = populations([p, 1.0 - p], &terms, nbar, t).unwrap();
        prop_assert!((q[0] + q[1] - 1.0).abs() < 1e-14);
        prop_assert!(q.iter().all(|x| (-1e-15..=1.0 + 1e-15).contains(x)));
    }

    #[test]
    fn fit_scale_equivariant(tau in 0.1f64..5.0, c in 0.01f64..100.0) {
        let t: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| 1.0 - (-x / tau).exp()).collect();
        let base = fit_exponential(&t, &y).unwrap().tau;
        let scaled_t: Vec<f64> = t.iter().map(|x| x * c).collect();
        let scaled = fit_exponential(&scaled_t, &y).unwrap().tau;
        prop_assert!((scaled / (c * base) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frequency_units_agree(v in 0.001f64..1e4) {
        let mhz = parse_frequency(&format!("{v}MHz2pi")).unwrap();
        let ghz = parse_frequency(&format!("{}GHz2pi", v / 1e3)).unwrap();
        let rad = parse_frequency(&format!("{}rad_s", 2.0 * PI * v * 1e6)).unwrap();
        prop_assert!((mhz / ghz - 1.0).abs() < 1e-14);
        prop_assert!((mhz / rad - 1.0).abs() < 1e-14);
    }

    #[test]
    fn angle_forms_agree(deg in 0.0f64..360.0) {
        let a = parse_angle(&format!("{deg}deg")).unwrap();
        let b = parse_angle(&format!("{}pi", deg / 180.0)).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn formatted_floats_round_trip(x in prop::num::f64::NORMAL) {
        let back: f64 = fmt_e(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.abs());
    }
}

#[test]
fn fit_scale_exact_for_powers_of_two() {
    let t: Vec<f64> = (0..40).map(|k| k as f64 * 0.1).collect();
    let y: Vec<f64> = t.iter().map(|x| 1.0 - (-x / 0.7).exp()).collect();
    let base = fit_exponential(&t, &y).unwrap().tau;
    for c in [0.25, 2.0, 1024.0] {
        let scaled: Vec<f64> = t.iter().map(|x| x * c).collect();
        assert_eq!(fit_exponential(&scaled, &y).unwrap().tau, c * base);
    }
}

#[test]
fn from_matrix_keeps_entries() {
    let m = DMatrix::from_fn(3, 2, |i, j| C64::new(i as f64, j as f64));
    let op = Operator::from_matrix(m.clone());
    assert_eq!(op.matrix(), &m);
    assert_eq!(op.entries().len(), 6);
}
