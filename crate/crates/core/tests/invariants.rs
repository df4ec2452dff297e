//! Property tests over randomly drawn steady flows, points and parameters.

use std::f64::consts::TAU;

use eulerband_core::bound;
use eulerband_core::critical::{self, PointKind};
use eulerband_core::dynamics::{self, IntegratorConfig};
use eulerband_core::flowbox::{CutoffGamma, GridField};
use eulerband_core::flowfield::{FourierStream, Mat2, TorusPoint, Wave};
use eulerband_core::spectrum::{self, BandVerdict, GalerkinOperator};
use num_complex::Complex64;
use proptest::prelude::*;

/// Wavevectors with `|k|² = 5`, one per `±k` pair.
const SHELL_5: [Wave; 4] = [[1, 2], [2, 1], [1, -2], [2, -1]];

/// Any combination of one Laplacian shell is a steady state.
fn shell_flow() -> impl Strategy<Value = FourierStream> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4).prop_filter_map("nonzero flow", |amps| {
        let modes: Vec<(Wave, Complex64)> = SHELL_5
            .iter()
            .zip(&amps)
            .map(|(k, (re, im))| (*k, Complex64::new(*re, *im)))
            .collect();
        if modes.iter().all(|(_, c)| c.norm() < 0.05) {
            return None;
        }
        FourierStream::from_modes("shell", modes, 64).ok()
    })
}

fn point() -> impl Strategy<Value = TorusPoint> {
    (0.0..TAU, 0.0..TAU).prop_map(|(a, b)| TorusPoint::new(a, b))
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shell_flows_are_steady_and_incompressible(psi in shell_flow(), x in point()) {
        prop_assert!(psi.steadiness_residual(32) <= 1e-10);
        prop_assert!(psi.jacobian(x).trace().abs() <= 1e-12);
        // u ⟂ ∇ψ
        let d = psi.derivs(x);
        let u = psi.velocity(x);
        prop_assert!((u[0] * d.d1 + u[1] * d.d2).abs() <= 1e-12);
    }

    #[test]
    fn coefficients_are_hermitian(psi in shell_flow()) {
        for (k, c) in psi.coeffs() {
            prop_assert_eq!(psi.coeff([-k[0], -k[1]]), c.conj());
        }
    }

    #[test]
    fn flow_preserves_stream_and_area(psi in shell_flow(), x in point(), t in -3.0f64..3.0) {
        let (y, dphi) = dynamics::variational_flow(&psi, x, t, &cfg()).unwrap();
        prop_assert!((psi.value(y) - psi.value(x)).abs() <= 1e-8);
        prop_assert!((dphi.det() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn flow_is_a_group(x in point(), s in -4.0f64..4.0, t in -4.0f64..4.0) {
        let psi = FourierStream::cellular();
        let two_steps = dynamics::flow(&psi, dynamics::flow(&psi, x, s, &cfg()).unwrap(), t, &cfg()).unwrap();
        let one_step = dynamics::flow(&psi, x, s + t, &cfg()).unwrap();
        prop_assert!(two_steps.dist(&one_step) <= 1e-7);
    }

    #[test]
    fn trace_free_classification(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0) {
        let jac = Mat2::new(a, b, c, -a);
        let det = jac.det();
        prop_assume!(det.abs() > 1e-6);
        match critical::classify(&jac, critical::CLASSIFY_TOL).unwrap() {
            PointKind::Hyperbolic { lambda } => {
                prop_assert!(det < 0.0);
                prop_assert!((lambda - (-det).sqrt()).abs() <= 1e-12 * (1.0 + lambda));
            }
            PointKind::Elliptic { omega } => {
                prop_assert!(det > 0.0);
                prop_assert!((omega - det.sqrt()).abs() <= 1e-12 * (1.0 + omega));
            }
            PointKind::Degenerate => prop_assert!(false, "det {det} classified degenerate"),
        }
    }

    #[test]
    fn rayleigh_bound_ignores_constant_speed(speed in 0.1f64..10.0, lambda in -0.9f64..0.9, n in 4.0f64..20.0) {
        let m = (200.0 * n).ceil() as usize;
        let times: Vec<f64> = (0..=m)
            .map(|i| if i == m { n } else { -n + 2.0 * n * i as f64 / m as f64 })
            .collect();
        let make = |s: f64| dynamics::Trajectory {
            points: vec![TorusPoint::new(0.0, 0.0); times.len()],
            lifted: vec![[0.0, 0.0]; times.len()],
            dphi: None,
            speeds: vec![s; times.len()],
            times: times.clone(),
        };
        let g = CutoffGamma::triangle(n).unwrap();
        let unit = bound::rayleigh_bound(&make(1.0), lambda, &g).unwrap();
        let scaled = bound::rayleigh_bound(&make(speed), lambda, &g).unwrap();
        prop_assert!((unit.bound - scaled.bound).abs() <= 1e-10 * unit.bound);
        prop_assert!(unit.bound > 0.0);
    }

    #[test]
    fn deposit_conserves_mass(x in (-10.0f64..10.0, -10.0f64..10.0), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut f = GridField::zeros(16);
        let mass = Complex64::new(re, im);
        f.deposit([x.0, x.1], mass);
        let total = f.mean() * (TAU * TAU);
        prop_assert!((total - mass).norm() <= 1e-12 * (1.0 + mass.norm()));
    }

    #[test]
    fn fourier_round_trip(values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)) {
        let f = GridField::from_values(8, values.iter().map(|(a, b)| Complex64::new(*a, *b)).collect()).unwrap();
        let back = GridField::from_fourier(8, &f.fourier()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() <= 1e-13);
        }
    }

    #[test]
    fn galerkin_structure_holds_for_shell_flows(psi in shell_flow()) {
        let op = GalerkinOperator::assemble(&psi, 4).unwrap();
        prop_assert!(op.advection_skew_defect() <= 1e-12);
        prop_assert!(op.reality_defect() <= 1e-12);
    }

    #[test]
    fn sigma_min_is_one_lipschitz(re in -2.0f64..2.0, im in -2.0f64..2.0, dre in -0.5f64..0.5, dim in -0.5f64..0.5) {
        let op = GalerkinOperator::assemble(&FourierStream::cellular(), 3).unwrap();
        let a = Complex64::new(re, im);
        let b = a + Complex64::new(dre, dim);
        let (sa, sb) = (spectrum::sigma_min(&op, a).unwrap(), spectrum::sigma_min(&op, b).unwrap());
        prop_assert!((sa - sb).abs() <= (a - b).norm() + 1e-12);
    }

    #[test]
    fn profile_classification_thresholds(base in 0.1f64..10.0, ratios in prop::collection::vec(0.5f64..3.0, 2)) {
        let norms = [base, base * ratios[0], base * ratios[0] * ratios[1]];
        let (growth, variation, verdict) = spectrum::classify_profile(&norms);
        prop_assert!((growth - ratios[0] * ratios[1]).abs() <= 1e-12 * growth);
        match verdict {
            BandVerdict::InteriorGrowing => prop_assert!(growth >= spectrum::GROWTH_THRESHOLD),
            BandVerdict::ExteriorStable => {
                prop_assert!(growth < spectrum::GROWTH_THRESHOLD && variation <= spectrum::STABILITY_THRESHOLD)
            }
            BandVerdict::Inconclusive => {
                prop_assert!(growth < spectrum::GROWTH_THRESHOLD && variation > spectrum::STABILITY_THRESHOLD)
            }
        }
    }
}
