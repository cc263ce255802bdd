//! Property tests for the structural invariants of the model and its
//! analysis layers.

use cpr_core::equilibrium::{equilibrium_dual, equilibrium_well_mixed, Existence};
use cpr_core::model::{integrate, ModelParams, StepControl, SystemState};
use cpr_core::network::{laplacian_spectrum, net_influence, InfluenceNetwork};
use cpr_core::stability::LyapunovCoefficients;
use proptest::prelude::*;

fn unit_open() -> impl Strategy<Value = f64> {
    0.02f64..0.98
}

fn susceptibility() -> impl Strategy<Value = f64> {
    0.05f64..3.0
}

// random row-stochastic zero-diagonal weights for n agents
fn weights(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, n), n).prop_map(move |raw| {
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                if i != j {
                    w[i][j] = raw[i][j];
                    sum += raw[i][j];
                }
            }
            for j in 0..n {
                w[i][j] /= sum;
            }
        }
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The net influences always cancel; no network can be all-leader.
    #[test]
    fn net_influence_sums_to_zero(
        b in proptest::collection::vec(susceptibility(), 4),
        alpha in proptest::collection::vec(unit_open(), 4),
        rho in proptest::collection::vec(unit_open(), 4),
        w in weights(4),
    ) {
        let p = ModelParams::new(b, alpha, rho, w).unwrap();
        let infl = net_influence(&p).unwrap();
        let total: f64 = infl.iter().sum();
        prop_assert!(total.abs() < 1e-10, "net influence total {total}");
    }

    // Interior equilibrium conservation: stock plus efforts fill the capacity.
    #[test]
    fn dual_equilibrium_conserves_capacity(
        b1 in susceptibility(), b2 in susceptibility(),
        a1 in unit_open(), a2 in unit_open(),
        r1 in unit_open(), r2 in unit_open(),
    ) {
        let p = ModelParams::dyad([b1, b2], [a1, a2], [r1, r2]).unwrap();
        let rep = equilibrium_dual(&p).unwrap();
        if let (Existence::Unique, Some(eq)) = (&rep.existence, &rep.equilibrium) {
            if eq.x_bar > 0.0 {
                let total = eq.x_bar + eq.y_bar.iter().sum::<f64>();
                prop_assert!((total - 1.0).abs() < 1e-10);
                // the stock interpolates the two setpoints
                prop_assert!(eq.x_bar >= r1.min(r2) - 1e-12 && eq.x_bar <= r1.max(r2) + 1e-12);
            }
        }
    }

    #[test]
    fn well_mixed_equilibrium_conserves_capacity(
        b in proptest::collection::vec(susceptibility(), 4),
        alpha in proptest::collection::vec(unit_open(), 4),
        rho in proptest::collection::vec(unit_open(), 4),
    ) {
        let p = ModelParams::well_mixed(b, alpha, rho).unwrap();
        let rep = equilibrium_well_mixed(&p).unwrap();
        if let (Existence::Unique, Some(eq)) = (&rep.existence, &rep.equilibrium) {
            if eq.x_bar > 0.0 {
                let total = eq.x_bar + eq.y_bar.iter().sum::<f64>();
                prop_assert!((total - 1.0).abs() < 1e-10);
            }
        }
    }

    // The stock can touch but never cross zero, whatever the efforts do.
    #[test]
    fn stock_stays_nonnegative(
        b in proptest::collection::vec(susceptibility(), 3),
        alpha in proptest::collection::vec(unit_open(), 3),
        rho in proptest::collection::vec(-0.5f64..1.5, 3),
        x0 in 0.001f64..1.5,
        y0 in proptest::collection::vec(-1.0f64..2.0, 3),
    ) {
        let p = ModelParams::well_mixed(b, alpha, rho).unwrap();
        let init = SystemState::new(x0, y0).unwrap();
        if let Ok(tr) = integrate(&p, &init, 30.0, StepControl::default()) {
            prop_assert!(tr.states.iter().all(|s| s.x >= 0.0));
        }
    }

    // Structural bounds of the transformed-coordinate coefficients.
    #[test]
    fn lyapunov_coefficient_bounds(
        b1 in susceptibility(), b2 in susceptibility(),
        n1 in unit_open(), n2 in unit_open(),
        r1 in unit_open(), r2 in unit_open(),
    ) {
        let p = ModelParams::dyad([b1, b2], [1.0 - n1, 1.0 - n2], [r1, r2]).unwrap();
        let c = LyapunovCoefficients::from_params(&p);
        prop_assert!(c.bounds_hold());
    }

    // Symmetrized coupling matrices have real, nonnegative spectra.
    #[test]
    fn symmetric_laplacian_spectrum_is_real_nonnegative(
        raw in proptest::collection::vec(proptest::collection::vec(0.0f64..2.0, 5), 5),
    ) {
        let mut gamma = vec![vec![0.0; 5]; 5];
        for i in 0..5 {
            for j in (i + 1)..5 {
                let v = raw[i][j];
                gamma[i][j] = v;
                gamma[j][i] = v;
            }
        }
        let net = InfluenceNetwork::from_weights(gamma).unwrap();
        let rep = laplacian_spectrum(&net);
        let eig = rep.real_eigenvalues.expect("symmetric spectrum must be real");
        prop_assert!(eig.iter().all(|v| *v >= -1e-10));
    }

    // Round trips: equilibrium reports serialize bit-exactly.
    #[test]
    fn equilibrium_report_json_round_trip(
        b1 in susceptibility(), b2 in susceptibility(),
        a1 in unit_open(), a2 in unit_open(),
        r1 in unit_open(), r2 in unit_open(),
    ) {
        let p = ModelParams::dyad([b1, b2], [a1, a2], [r1, r2]).unwrap();
        let rep = equilibrium_dual(&p).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: cpr_core::EquilibriumReport = serde_json::from_str(&json).unwrap();
        if let (Some(a), Some(b)) = (&rep.equilibrium, &back.equilibrium) {
            prop_assert_eq!(a.x_bar.to_bits(), b.x_bar.to_bits());
            for (x, y) in a.y_bar.iter().zip(&b.y_bar) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
