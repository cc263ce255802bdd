//! Acceptance suite: one test per release criterion, each printing a PASS or
//! FAIL line (visible under `--nocapture`). Tolerances are pinned in code.

use cpr_core::control::{
    regime, saddle_point, simulate_optimal, sustainability_check, synthesize_feedback, OcpParams,
    Regime, Sustainability,
};
use cpr_core::equilibrium::{
    equilibrium_dual, equilibrium_single, equilibrium_star, equilibrium_well_mixed, Existence,
};
use cpr_core::game::{
    best_response_iteration, build_discrete_game, idx, nash_equilibrium, pareto_optimal_set,
    pure_nash_set, tragicness, ContinuousGame, DiscreteThresholds, GameLabel, PROFILES,
};
use cpr_core::learning::learning_equilibrium;
use cpr_core::model::{
    complete_weights, integrate_sampled, steady_state, ConvergenceSpec, ModelParams,
    SteadyStateOutcome, StepControl, SystemState,
};
use cpr_core::network::{
    aggregate_approximate, aggregate_self_directed, laplacian_spectrum, InfluenceNetwork,
};
use cpr_core::stability::{
    classify_single, lyapunov_dual, routh_dual, stability_oracle, GlobalCondition, LocalClass,
};
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, ok: bool, detail: &str) {
    println!("[acceptance] {} - {name}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

fn tight() -> ConvergenceSpec {
    ConvergenceSpec::default()
}

// Numeric Jacobian of the full model at a state (independent of the module's
// analytic forms).
fn fd_jacobian(params: &ModelParams, state: &SystemState) -> DMatrix<f64> {
    let dim = 1 + state.y.len();
    let f = |v: &[f64]| -> Vec<f64> {
        let s = SystemState {
            x: v[0],
            y: v[1..].to_vec(),
        };
        let (dx, dy) = cpr_core::model::rhs(params, &s);
        let mut out = vec![dx];
        out.extend(dy);
        out
    };
    let mut base = vec![state.x];
    base.extend_from_slice(&state.y);
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let h = 1e-7 * base[j].abs().max(1e-3);
        let mut up = base.clone();
        let mut dn = base.clone();
        up[j] += h;
        dn[j] -= h;
        let (fu, fd) = (f(&up), f(&dn));
        for i in 0..dim {
            jac[(i, j)] = (fu[i] - fd[i]) / (2.0 * h);
        }
    }
    jac
}

fn spectral_abscissa(jac: &DMatrix<f64>) -> f64 {
    jac.complex_eigenvalues()
        .iter()
        .map(|c| c.re)
        .fold(f64::MIN, f64::max)
}

// -------------------------------------------------------------------------
// 1. Closed-form equilibria match numerical steady states on random stable
//    draws across all four topologies (tolerance 1e-5, 100 draws each).
// -------------------------------------------------------------------------
#[test]
fn criterion_equilibrium_oracle_equivalence() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut worst: f64 = 0.0;

    let mut check = |params: &ModelParams, eq_x: f64, eq_y: &[f64]| {
        let init = SystemState::new(0.5, vec![0.0; params.n_agents()]).unwrap();
        let out = steady_state(params, &init, &tight()).unwrap();
        let s = out.converged_state().expect("filtered to stable instances");
        worst = worst.max((s.x - eq_x).abs());
        for (a, b) in s.y.iter().zip(eq_y) {
            worst = worst.max((a - b).abs());
        }
    };

    // single agent: always stable for interior setpoints
    for _ in 0..100 {
        let p = ModelParams::single(
            rng.gen_range(0.05..2.0),
            rng.gen_range(0.05..0.95),
            rng.gen_range(0.05..0.95),
        )
        .unwrap();
        let eq = equilibrium_single(&p).unwrap().equilibrium.unwrap();
        check(&p, eq.x_bar, &eq.y_bar);
    }

    // dyad: filter by the exact cubic test plus a decay-rate margin
    let mut accepted = 0;
    while accepted < 100 {
        let p = ModelParams::dyad(
            [rng.gen_range(0.1..1.5), rng.gen_range(0.1..1.5)],
            [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)],
            [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)],
        )
        .unwrap();
        let Ok(routh) = routh_dual(&p) else { continue };
        if !routh.stable {
            continue;
        }
        if routh.eigenvalues.iter().any(|(re, _)| *re > -0.02) {
            continue; // too slow to settle inside the time budget
        }
        let eq = equilibrium_dual(&p).unwrap().equilibrium.unwrap();
        accepted += 1;
        check(&p, eq.x_bar, &eq.y_bar);
    }

    // well-mixed and star populations, n in 3..=6, stability screened by the
    // spectral abscissa of the finite-difference Jacobian
    for topology in 0..2 {
        let mut accepted = 0;
        while accepted < 100 {
            let n = rng.gen_range(3..=6usize);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.5)).collect();
            let alpha: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.95)).collect();
            let (p, rep) = if topology == 0 {
                let p = ModelParams::well_mixed(b, alpha, rho).unwrap();
                let rep = equilibrium_well_mixed(&p).unwrap();
                (p, rep)
            } else {
                let p = ModelParams::star(b, alpha, rho).unwrap();
                let rep = equilibrium_star(&p).unwrap();
                (p, rep)
            };
            let (Existence::Unique, Some(eq)) = (&rep.existence, &rep.equilibrium) else {
                continue;
            };
            let state = SystemState::new(eq.x_bar, eq.y_bar.clone()).unwrap();
            if eq.x_bar <= 0.0 || spectral_abscissa(&fd_jacobian(&p, &state)) > -0.02 {
                continue;
            }
            accepted += 1;
            check(&p, eq.x_bar, &eq.y_bar);
        }
    }

    let elapsed = started.elapsed();
    let ok = worst < 1e-5 && elapsed.as_secs_f64() < 120.0;
    report(
        "equilibrium oracle equivalence (4 topologies x 100 draws, 1e-5)",
        ok,
        &format!("worst deviation {worst:.2e}, elapsed {elapsed:?}"),
    );
}

// -------------------------------------------------------------------------
// 2. The three reference parameter sets classify as node / spiral /
//    degenerate, and the simulated approach shows the matching signature.
// -------------------------------------------------------------------------
#[test]
fn criterion_single_agent_classification() {
    let cases = [
        (0.1, 0.5, 0.5, LocalClass::StableNode),
        (1.0, 0.5, 0.5, LocalClass::StableSpiral),
        (0.5, 0.25, 0.5, LocalClass::StableDegenerate),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (b, alpha, rho, want) in cases {
        let p = ModelParams::single(b, alpha, rho).unwrap();
        let got = classify_single(&p).unwrap().local;
        if got != want {
            ok = false;
            detail =
                format!("(b={b}, alpha={alpha}, rho={rho}) classified {got:?}, wanted {want:?}");
            break;
        }
        // approach signature: winding of the sampled trajectory around the
        // fixed point separates monotone approach from decaying oscillation
        let init = SystemState::new(0.1, vec![0.0]).unwrap();
        let tr = integrate_sampled(&p, &init, &grid(150.0, 0.25), StepControl::default()).unwrap();
        let mut angle = 0.0;
        for w in tr.states.windows(2) {
            let (ax, ay) = (w[0].x - rho, w[0].y[0] - (1.0 - rho));
            let (bx, by) = (w[1].x - rho, w[1].y[0] - (1.0 - rho));
            angle += (ax * by - ay * bx).atan2(ax * bx + ay * by);
        }
        let angle = angle.abs();
        let oscillatory = angle > std::f64::consts::TAU;
        let expect_osc = want == LocalClass::StableSpiral;
        if oscillatory != expect_osc {
            ok = false;
            detail = format!("approach signature for {want:?}: winding {angle:.2} rad");
            break;
        }
    }
    report(
        "single-agent classification with approach signatures",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 3. The reference cycle-bearing point fails the exact stability test and
//    orbits boundedly without converging from both reference starts.
// -------------------------------------------------------------------------
#[test]
fn criterion_limit_cycle() {
    let p = ModelParams::dyad([0.2, 0.1], [0.99, 0.1], [0.001, 0.1]).unwrap();
    let routh = routh_dual(&p).unwrap();
    let mut ok = !routh.stable;
    let mut detail = format!("margin = {}", routh.margin);
    for (x0, y10, y20) in [(0.001, 0.5, 0.5), (0.1, 1.0, 0.3)] {
        let init = SystemState::new(x0, vec![y10, y20]).unwrap();
        // bounded over the whole window
        let tr = integrate_sampled(&p, &init, &grid(5000.0, 1.0), StepControl::default()).unwrap();
        let bounded = tr
            .states
            .iter()
            .all(|s| s.x >= 0.0 && s.x <= 2.0 && s.y.iter().all(|y| y.abs() <= 10.0));
        // and non-convergent
        let spec = ConvergenceSpec {
            t_max: 5000.0,
            ..ConvergenceSpec::default()
        };
        let non_convergent = matches!(
            steady_state(&p, &init, &spec).unwrap(),
            SteadyStateOutcome::NoConvergence { .. }
        );
        if !(bounded && non_convergent) {
            ok = false;
            detail =
                format!("start ({x0}, {y10}, {y20}): bounded={bounded}, nonconv={non_convergent}");
        }
    }
    report(
        "limit cycle: exact test fails, orbits bounded and non-convergent",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 4. Wherever the global certificate holds, every perturbation trial
//    converges; zero counterexamples tolerated (200 draws x 5 trials).
// -------------------------------------------------------------------------
#[test]
fn criterion_global_certificate_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut accepted = 0;
    let mut ok = true;
    let mut detail = String::new();
    while accepted < 200 {
        let p = ModelParams::dyad(
            [rng.gen_range(0.1..1.5), rng.gen_range(0.1..1.5)],
            [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)],
            [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)],
        )
        .unwrap();
        let lyap = lyapunov_dual(&p).unwrap();
        if !matches!(lyap.condition, GlobalCondition::Holds { .. }) {
            continue;
        }
        let eq = equilibrium_dual(&p).unwrap().equilibrium.unwrap();
        let state = SystemState::new(eq.x_bar, eq.y_bar).unwrap();
        accepted += 1;
        let oracle = stability_oracle(&p, &state, 5, 0.3, 4000 + accepted as u64, 4000.0).unwrap();
        if oracle.converged != 5 {
            ok = false;
            detail = format!("{p:?}: only {}/5 trials converged", oracle.converged);
            break;
        }
    }
    report(
        "global-certificate soundness (200 certified draws x 5 trials)",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 5. Aggregation exactness on the 100-agent uniform-weight self-directed
//    instance; arbitrary responsiveness with the exact setpoint leaves only
//    transient error.
// -------------------------------------------------------------------------
#[test]
fn criterion_aggregation_exactness() {
    let n = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let mut alpha = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.gen_range(0.02..0.98);
        alpha.push(a);
        rho.push(rng.gen_range(0.02..0.98));
        b.push(1.0 / (1.0 - a)); // uniform social responsiveness: no leaders
    }
    let params = ModelParams::new(b, alpha, rho, complete_weights(n)).unwrap();
    let lump = aggregate_self_directed(&params).unwrap();
    let ctrl = StepControl {
        atol: 1e-12,
        rtol: 1e-10,
    };

    // exact-parameter co-integration
    let init = SystemState::new(0.2, vec![0.0; n]).unwrap();
    let samples = grid(100.0, 0.25);
    let exact =
        aggregate_approximate(&params, &init, lump.ba_hat, lump.p_hat, &samples, ctrl).unwrap();
    let mut ok = exact.sup_e_x < 1e-5 && exact.sup_e_y < 1e-5;
    let mut detail = format!(
        "exact sup errors ({:.2e}, {:.2e})",
        exact.sup_e_x, exact.sup_e_y
    );

    // wrong responsiveness, exact setpoint: zero steady error, visible transient
    if ok {
        let long = grid(600.0, 0.5);
        let mut transient_seen = false;
        for x0 in [0.15, 0.6] {
            let init = SystemState::new(x0, vec![0.0; n]).unwrap();
            let rep =
                aggregate_approximate(&params, &init, 2.7 * lump.ba_hat, lump.p_hat, &long, ctrl)
                    .unwrap();
            if rep.steady_e_x.abs() >= 1e-6 || rep.steady_e_y.abs() >= 1e-6 {
                ok = false;
                detail = format!(
                    "steady errors ({:.2e}, {:.2e}) from x0={x0}",
                    rep.steady_e_x, rep.steady_e_y
                );
                break;
            }
            if rep.sup_e_x > 1e-3 || rep.sup_e_y > 1e-3 {
                transient_seen = true;
            }
        }
        if ok && !transient_seen {
            ok = false;
            detail = "no initial condition produced a visible transient".into();
        }
    }
    report(
        "aggregation exactness on the 100-agent instance",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 6. Sustainable-regime synthesis: closed loop hits the rest point from all
//    reference starts; transversality holds on the whole table; saddle
//    eigenvalues match the closed form to 1e-10.
// -------------------------------------------------------------------------
#[test]
fn criterion_ocp_sustainable() {
    let mut ok = true;
    let mut detail = String::new();
    'outer: for delta in [0.01, 0.5, 0.9] {
        let s = saddle_point(delta).unwrap();
        let x_hat = (1.0 - delta) / 2.0;
        let y_hat = (1.0 + delta) / 2.0;
        let z_lo = (1.0f64 / 0.9).min(s.z) / 8.0;
        let z_hi = (1.0f64 / 0.05).max(s.z) * 8.0;
        let law = synthesize_feedback(delta, z_lo, z_hi, 400).unwrap();
        // transversality at every synthesis sample
        for (z, l) in law.z.iter().zip(&law.lambda) {
            let phi = -l * z;
            if !(phi > 0.0 && phi < 1.0 / delta) {
                ok = false;
                detail = format!("transversality violated at z = {z}");
                break 'outer;
            }
        }
        // saddle eigenvalues: numerical 2x2 spectrum vs closed form
        let jac = Matrix2::new(
            -1.0,
            1.0 / (s.lambda * s.lambda),
            -2.0 / (s.z * s.z),
            delta + 1.0,
        );
        let eig = jac.complex_eigenvalues();
        let mut numeric: Vec<f64> = eig.iter().map(|c| c.re).collect();
        numeric.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (n, f) in numeric.iter().zip(&s.eigenvalues) {
            if (n - f).abs() > 1e-10 {
                ok = false;
                detail = format!("delta={delta}: eigenvalue {n} vs closed form {f}");
                break 'outer;
            }
        }
        for x0 in [0.05, x_hat, 0.9] {
            let ocp = OcpParams::new(delta, 0.0, 1.0, x0).unwrap();
            let tr = simulate_optimal(&ocp, &law, &grid(1000.0, 1.0)).unwrap();
            let (xf, yf) = (*tr.x.last().unwrap(), *tr.y.last().unwrap());
            if (xf - x_hat).abs() >= 1e-4 || (yf - y_hat).abs() >= 1e-4 {
                ok = false;
                detail = format!("delta={delta}, x0={x0}: reached ({xf}, {yf})");
                break 'outer;
            }
        }
    }
    report(
        "sustainable-regime synthesis and closed-loop convergence",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 7. Depletion-regime synthesis: the harvest tracks the discount rate within
//    1% and the stock's log-slope matches within 5% by the horizon end.
// -------------------------------------------------------------------------
#[test]
fn criterion_ocp_unsustainable() {
    let mut ok = true;
    let mut detail = String::new();
    for delta in [1.0, 2.0, 10.0] {
        assert_eq!(regime(delta), Regime::Unsustainable);
        let law = synthesize_feedback(delta, 0.5, 2e4, 400).unwrap();
        let ocp = OcpParams::new(delta, 0.0, 1.0, 0.5).unwrap();
        let t_end = if delta <= 1.0 { 150.0 } else { 60.0 };
        let tr = simulate_optimal(&ocp, &law, &grid(t_end, 0.25)).unwrap();
        let y_end = *tr.y.last().unwrap();
        if (y_end - delta).abs() / delta >= 0.01 {
            ok = false;
            detail = format!("delta={delta}: final harvest {y_end}");
            break;
        }
        let k = tr.times.len();
        let tail = k / 10;
        let slope = (tr.x[k - 1].ln() - tr.x[k - 1 - tail].ln())
            / (tr.times[k - 1] - tr.times[k - 1 - tail]);
        let target = 1.0 - delta;
        // relative 5% against the depletion slope; absolute at the boundary
        // case where the target slope vanishes
        if (slope - target).abs() > 0.05 * target.abs().max(1.0) {
            ok = false;
            detail = format!("delta={delta}: log-slope {slope} vs {target}");
            break;
        }
    }
    report(
        "depletion-regime synthesis tracks the discount rate",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 8. The closed-form Nash point, damped best-reply iteration and the
//    learning fixed point agree to 1e-10; learned efforts are positive.
// -------------------------------------------------------------------------
#[test]
fn criterion_nash_learning_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let mut ok = true;
    let mut detail = String::new();
    for _ in 0..500 {
        let nu1: f64 = rng.gen_range(0.05..0.95);
        let nu2: f64 = rng.gen_range(0.05..0.95);
        let nash = nash_equilibrium(nu1, nu2).unwrap();
        let game = ContinuousGame::new(nu1, nu2).unwrap();
        let Some(iter) = best_response_iteration(
            |r| [game.best_response(0, r[1]), game.best_response(1, r[0])],
            [0.5, 0.5],
            0.2,
            1e-13,
            60000,
        ) else {
            ok = false;
            detail = format!("iteration stalled at ({nu1}, {nu2})");
            break;
        };
        let learn = learning_equilibrium(nu1, nu2).unwrap();
        let spread = (iter[0] - nash[0])
            .abs()
            .max((iter[1] - nash[1]).abs())
            .max((learn.rho[0] - nash[0]).abs())
            .max((learn.rho[1] - nash[1]).abs());
        if spread >= 1e-10 || learn.y[0] <= 0.0 || learn.y[1] <= 0.0 {
            ok = false;
            detail = format!("({nu1}, {nu2}): spread {spread:.2e}, efforts {:?}", learn.y);
            break;
        }
    }
    report(
        "Nash, best-reply iteration and learning fixed point agree",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 9. Tragicness is a true distance: nonnegative, vanishing in the fully
//    social limit, and the welfare line really holds the joint maximizer.
// -------------------------------------------------------------------------
#[test]
fn criterion_tragicness() {
    let mut ok = true;
    let mut detail = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9009);
    for _ in 0..400 {
        let nu1: f64 = rng.gen_range(0.02..0.98);
        let nu2: f64 = rng.gen_range(0.02..0.98);
        if tragicness(nu1, nu2).unwrap().tragicness < 0.0 {
            ok = false;
            detail = format!("negative distance at ({nu1}, {nu2})");
            break;
        }
    }
    if ok && tragicness(0.999, 0.999).unwrap().tragicness >= 1e-3 {
        ok = false;
        detail = "distance did not vanish toward full social relevance".into();
    }
    if ok {
        for (nu1, nu2) in [(0.3, 0.9), (0.6, 0.45)] {
            let game = ContinuousGame::new(nu1, nu2).unwrap();
            let line = game.welfare_line();
            let cells = 200;
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
            for i in 0..=cells {
                for j in 0..=cells {
                    let r1 = i as f64 / cells as f64;
                    let r2 = j as f64 / cells as f64;
                    let p = game.payoffs(r1, r2).unwrap();
                    if p[0] + p[1] > best.0 {
                        best = (p[0] + p[1], r1, r2);
                    }
                }
            }
            let dist = line.distance(best.1, best.2);
            if dist > 1.0 / cells as f64 {
                ok = false;
                detail = format!("grid maximizer sits {dist} from the welfare line");
                break;
            }
        }
    }
    report(
        "tragicness distance and welfare-line maximizer",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 10. Discrete-game classification agrees with an independent enumerator on
//     1e4 random cells; threshold sums above capacity are never tragic.
// -------------------------------------------------------------------------
#[test]
fn criterion_discrete_game_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut ok = true;
    let mut detail = String::new();
    let mut checked = 0;
    while checked < 10_000 && ok {
        let rho_low: f64 = rng.gen_range(0.02..0.9);
        let rho_high: f64 = rng.gen_range(rho_low + 0.005..0.98);
        let nu_low: f64 = rng.gen_range(0.03..0.9);
        let nu_high: f64 = rng.gen_range(nu_low + 0.005..0.96);
        let thresholds = DiscreteThresholds {
            rho_low,
            rho_high,
            nu_low,
            nu_high,
        };
        let Ok(game) = build_discrete_game(thresholds, [1.0, 1.0]) else {
            continue;
        };
        if game.label == GameLabel::Degenerate {
            continue; // ties excluded by the criterion
        }
        checked += 1;
        // independent enumeration from scratch
        let mut nash = Vec::new();
        for &(s1, s2) in &PROFILES {
            let mut best = true;
            for &(t1, t2) in &PROFILES {
                if t2 == s2 && game.payoffs[idx(t1)][idx(t2)][0] > game.payoffs[idx(s1)][idx(s2)][0]
                {
                    best = false;
                }
                if t1 == s1 && game.payoffs[idx(t1)][idx(t2)][1] > game.payoffs[idx(s1)][idx(s2)][1]
                {
                    best = false;
                }
            }
            if best {
                nash.push((s1, s2));
            }
        }
        let pareto = pareto_optimal_set(&game.payoffs);
        let tragic = nash.iter().any(|p| !pareto.contains(p));
        if game.nash_set != pure_nash_set(&game.payoffs)
            || game.nash_set != nash
            || game.tragic != tragic
        {
            ok = false;
            detail = format!("enumerator disagreement at {thresholds:?}");
        }
        if rho_low + rho_high > 1.0 && game.tragic {
            ok = false;
            detail = format!("tragic game above the capacity line at {thresholds:?}");
        }
    }
    // dedicated pass over the rich-threshold region
    let mut region_checked = 0;
    while region_checked < 2000 && ok {
        let rho_high: f64 = rng.gen_range(0.55..0.95);
        let lo_bound = (1.0 - rho_high).max(0.02);
        let rho_low: f64 = rng.gen_range(lo_bound..rho_high);
        if rho_low + rho_high <= 1.0 {
            continue;
        }
        let nu_low: f64 = rng.gen_range(0.03..0.9);
        let nu_high: f64 = rng.gen_range(nu_low + 0.005..0.96);
        let thresholds = DiscreteThresholds {
            rho_low,
            rho_high,
            nu_low,
            nu_high,
        };
        let Ok(game) = build_discrete_game(thresholds, [1.0, 1.0]) else {
            continue;
        };
        region_checked += 1;
        if game.tragic {
            ok = false;
            detail = format!("tragic game above the capacity line at {thresholds:?}");
        }
    }
    report(
        "discrete-game classification vs brute force (1e4 cells)",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 11. Sustainability truth table over random parameter triples.
// -------------------------------------------------------------------------
#[test]
fn criterion_sustainability_truth_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut ok = true;
    let mut detail = String::new();
    for _ in 0..1000 {
        let delta: f64 = rng.gen_range(0.05..4.0);
        let mu: f64 = rng.gen_range(0.0..3.0);
        let beta: f64 = rng.gen_range(0.05..1.0);
        let ocp = OcpParams::new(delta, mu, beta, 0.5).unwrap();
        let got = sustainability_check(&ocp);
        let want = if delta < 1.0 {
            Sustainability::StronglySustainable
        } else if mu / beta >= delta - 1.0 {
            Sustainability::Sustainable
        } else {
            Sustainability::Unsustainable
        };
        if got != want {
            ok = false;
            detail = format!("({delta}, {mu}, {beta}): got {got:?}, want {want:?}");
            break;
        }
    }
    report(
        "sustainability criterion truth table (1000 triples)",
        ok,
        &detail,
    );
}

// -------------------------------------------------------------------------
// 12. Spectral structure: disconnected graphs expose their component count,
//     and adding edges never lowers the connectivity eigenvalue.
// -------------------------------------------------------------------------
#[test]
fn criterion_laplacian_spectrum() {
    let mut ok = true;
    let mut detail = String::new();

    let two_components = vec![
        vec![0.0, 1.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0, 0.0, 1.0],
        vec![0.0, 0.0, 1.0, 1.0, 0.0],
    ];
    let rep = laplacian_spectrum(&InfluenceNetwork::from_weights(two_components).unwrap());
    if rep.zero_multiplicity != 2 || rep.component_count != 2 {
        ok = false;
        detail = format!(
            "two-component graph: multiplicity {}, components {}",
            rep.zero_multiplicity, rep.component_count
        );
    }

    if ok {
        let n = 6;
        let mut gamma = vec![vec![0.0; n]; n];
        for i in 0..n - 1 {
            gamma[i][i + 1] = 1.0;
            gamma[i + 1][i] = 1.0;
        }
        let mut last = laplacian_spectrum(&InfluenceNetwork::from_weights(gamma.clone()).unwrap())
            .algebraic_connectivity;
        for (a, b) in [(0, 3), (2, 5), (1, 4), (0, 5), (2, 4)] {
            gamma[a][b] = 1.0;
            gamma[b][a] = 1.0;
            let l2 = laplacian_spectrum(&InfluenceNetwork::from_weights(gamma.clone()).unwrap())
                .algebraic_connectivity;
            if l2 < last - 1e-10 {
                ok = false;
                detail = format!("connectivity dropped {last} -> {l2} after edge ({a},{b})");
                break;
            }
            last = l2;
        }
    }
    report(
        "Laplacian spectrum: components and connectivity monotonicity",
        ok,
        &detail,
    );
}
