//! Best-response learning coupled to the two-agent resource system: each
//! group drifts its environmentalism toward the best response to the other's
//! current strategy, on top of the usual stock/effort dynamics.

use crate::game::{best_response_curve, best_response_slope, nash_component, GameError};
use crate::model::StepControl;
use crate::ode::Dopri5;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearningError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("integration failed: {0}")]
    Integration(String),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LearningParams {
    pub nu: [f64; 2],
    pub b: [f64; 2],
}

impl LearningParams {
    pub fn new(nu1: f64, nu2: f64, b1: f64, b2: f64) -> Result<Self, LearningError> {
        for nu in [nu1, nu2] {
            if nu <= 1e-12 || nu >= 1.0 - 1e-12 {
                return Err(LearningError::Game(GameError::DegenerateRelevance(nu)));
            }
        }
        if b1 <= 0.0 || b2 <= 0.0 {
            return Err(LearningError::InvalidState(
                "susceptibilities must be positive".into(),
            ));
        }
        Ok(Self {
            nu: [nu1, nu2],
            b: [b1, b2],
        })
    }
}

/// The 5-dimensional coupled state: stock, two efforts, two strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningState {
    pub x: f64,
    pub y: [f64; 2],
    pub rho: [f64; 2],
}

impl LearningState {
    pub fn new(x: f64, y: [f64; 2], rho: [f64; 2]) -> Result<Self, LearningError> {
        if !(x >= 0.0) {
            return Err(LearningError::InvalidState(format!(
                "stock must be nonnegative, got {x}"
            )));
        }
        Ok(Self { x, y, rho })
    }
}

/// Time derivative of the coupled state. The strategy pair evolves toward the
/// mutual best response and is structurally independent of (x, y).
pub fn learning_rhs(params: &LearningParams, state: &LearningState) -> LearningState {
    let [n1, n2] = params.nu;
    let [b1, b2] = params.b;
    let x = state.x;
    let [y1, y2] = state.y;
    let [r1, r2] = state.rho;
    let dx = (1.0 - x) * x - (y1 + y2) * x;
    let dy1 = b1 * (1.0 - n1) * (x - r1) - b1 * n1 * (y1 - y2);
    let dy2 = b2 * (1.0 - n2) * (x - r2) - b2 * n2 * (y2 - y1);
    let dr1 = best_response_curve(n1, n2, r2) - r1;
    let dr2 = best_response_curve(n2, n1, r1) - r2;
    LearningState {
        x: dx,
        y: [dy1, dy2],
        rho: [dr1, dr2],
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LearningEquilibrium {
    pub x: f64,
    pub y: [f64; 2],
    pub rho: [f64; 2],
}

/// Closed-form fixed point of the coupled system. The strategies land on the
/// Nash point and both steady efforts are positive.
pub fn learning_equilibrium(nu1: f64, nu2: f64) -> Result<LearningEquilibrium, LearningError> {
    let params = LearningParams::new(nu1, nu2, 1.0, 1.0)?;
    let [n1, n2] = params.nu;
    let s = n1 + n2 + 2.0 * n1 * n2;
    Ok(LearningEquilibrium {
        x: 2.0 * n1 * n2 / s,
        y: [n1 / s, n2 / s],
        rho: [nash_component(n1, n2), nash_component(n2, n1)],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningStabilityReport {
    /// eigenvalues of the strategy subsystem, as (re, im)
    pub rho_eigenvalues: [(f64, f64); 2],
    /// product of the two best-response slopes; the subsystem spectrum is
    /// -1 +- sqrt of this
    pub slope_product: f64,
    /// resource-subsystem certificate value (positive means certified)
    pub resource_criterion: f64,
    pub resource_holds: bool,
    /// strategy-subsystem criterion value (negative means certified)
    pub strategy_criterion: f64,
    pub strategy_holds: bool,
    /// both criteria certified
    pub stable: bool,
}

/// Analytic convergence verdict: the strategy subsystem is linear with
/// spectrum `-1 +- sqrt(k1 k2)`; the resource subsystem settles under its
/// global certificate once the strategies do.
pub fn learning_stability(
    nu1: f64,
    nu2: f64,
    b1: f64,
    b2: f64,
) -> Result<LearningStabilityReport, LearningError> {
    let params = LearningParams::new(nu1, nu2, b1, b2)?;
    let [n1, n2] = params.nu;
    let k1 = best_response_slope(n1, n2);
    let k2 = best_response_slope(n2, n1);
    let slope_product = k1 * k2;
    let rho_eigenvalues = if slope_product >= 0.0 {
        let s = slope_product.sqrt();
        [(-1.0 - s, 0.0), (-1.0 + s, 0.0)]
    } else {
        let s = (-slope_product).sqrt();
        [(-1.0, -s), (-1.0, s)]
    };
    let resource_criterion = (b1 - b2) * (b1 * n1 - b2 * n2) + 4.0 * b1 * n1 * b2 * n2;
    let strategy_criterion = (n1 - n2).powi(2) + 4.0 * n1 * n1 * n2 * n2 - 4.0 * n1 * n2;
    let resource_holds = resource_criterion > 0.0;
    let strategy_holds = strategy_criterion < 0.0;
    Ok(LearningStabilityReport {
        rho_eigenvalues,
        slope_product,
        resource_criterion,
        resource_holds,
        strategy_criterion,
        strategy_holds,
        stable: resource_holds && strategy_holds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<LearningState>,
}

impl LearningTrajectory {
    pub fn last(&self) -> &LearningState {
        self.states.last().expect("nonempty trajectory")
    }

    /// CSV with header `t,x,y1,y2,rho1,rho2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y1,y2,rho1,rho2\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!(
                "{t},{},{},{},{},{}\n",
                s.x, s.y[0], s.y[1], s.rho[0], s.rho[1]
            ));
        }
        out
    }
}

/// Integrate the coupled 5-D system, sampling at the requested times. The
/// stock is propagated in log-space so it stays positive structurally.
pub fn simulate_learning(
    params: &LearningParams,
    init: &LearningState,
    samples: &[f64],
    ctrl: StepControl,
) -> Result<LearningTrajectory, LearningError> {
    let log_space = init.x > 0.0;
    let u0 = if log_space {
        vec![init.x.ln(), init.y[0], init.y[1], init.rho[0], init.rho[1]]
    } else {
        vec![init.y[0], init.y[1], init.rho[0], init.rho[1]]
    };
    let f = |_t: f64, u: &[f64], du: &mut [f64]| {
        let state = if log_space {
            LearningState {
                x: u[0].exp(),
                y: [u[1], u[2]],
                rho: [u[3], u[4]],
            }
        } else {
            LearningState {
                x: 0.0,
                y: [u[0], u[1]],
                rho: [u[2], u[3]],
            }
        };
        let d = learning_rhs(params, &state);
        if log_space {
            du[0] = 1.0 - state.x - (state.y[0] + state.y[1]);
            du[1] = d.y[0];
            du[2] = d.y[1];
            du[3] = d.rho[0];
            du[4] = d.rho[1];
        } else {
            du[0] = d.y[0];
            du[1] = d.y[1];
            du[2] = d.rho[0];
            du[3] = d.rho[1];
        }
    };
    let solver = Dopri5 {
        atol: ctrl.atol,
        rtol: ctrl.rtol,
        ..Dopri5::default()
    };
    let sol = solver
        .solve_sampled(&f, 0.0, &u0, samples)
        .map_err(|e| LearningError::Integration(e.to_string()))?;
    let states = sol
        .states
        .into_iter()
        .map(|u| {
            if log_space {
                LearningState {
                    x: u[0].exp(),
                    y: [u[1], u[2]],
                    rho: [u[3], u[4]],
                }
            } else {
                LearningState {
                    x: 0.0,
                    y: [u[0], u[1]],
                    rho: [u[2], u[3]],
                }
            }
        })
        .collect();
    Ok(LearningTrajectory {
        times: sol.times,
        states,
    })
}
