//! The two-player consumption game over steady-state harvests: best
//! responses, the Nash point, the welfare-optimal locus and the distance
//! between them (tragicness), plus the discrete two-strategy variant with its
//! nine-type taxonomy.

use crate::equilibrium::{dual_closed_form, equilibrium_dual, Existence};
use crate::model::{ModelError, ModelParams};
use crate::stability::routh_dual;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance under which payoffs count as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("social relevance must lie strictly inside (0, 1), got {0}")]
    DegenerateRelevance(f64),
    #[error("thresholds must be ordered: {0}")]
    BadThresholds(String),
    #[error("profile {profile}: equilibrium does not exist ({reason})")]
    NonexistentProfile { profile: String, reason: String },
    #[error("profile {profile}: equilibrium fails the stability filter")]
    UnstableProfile { profile: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_interior(nu: f64) -> Result<(), GameError> {
    if nu <= 1e-12 || nu >= 1.0 - 1e-12 {
        return Err(GameError::DegenerateRelevance(nu));
    }
    Ok(())
}

/// The reduced game: environmentalisms are the strategies, social relevances
/// fixed parameters, payoffs the steady-state harvests.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContinuousGame {
    pub nu: [f64; 2],
}

impl ContinuousGame {
    pub fn new(nu1: f64, nu2: f64) -> Result<Self, GameError> {
        check_interior(nu1)?;
        check_interior(nu2)?;
        Ok(Self { nu: [nu1, nu2] })
    }

    pub fn dyad(&self, rho1: f64, rho2: f64) -> ModelParams {
        ModelParams::dyad(
            [1.0, 1.0],
            [1.0 - self.nu[0], 1.0 - self.nu[1]],
            [rho1, rho2],
        )
        .expect("interior relevances form a valid dyad")
    }

    /// Steady-state harvests `x * y_i` at a strategy profile, read off the
    /// fixed-point algebra over the whole real strategy plane.
    pub fn payoffs(&self, rho1: f64, rho2: f64) -> Result<[f64; 2], GameError> {
        let [n1, n2] = self.nu;
        let (x_bar, y_bar) = dual_closed_form([1.0 - n1, 1.0 - n2], [n1, n2], [rho1, rho2]);
        Ok([x_bar * y_bar[0], x_bar * y_bar[1]])
    }

    /// Scalar best response of `player` to the opponent's environmentalism.
    pub fn best_response(&self, player: usize, rho_other: f64) -> f64 {
        let (ni, nj) = (self.nu[player], self.nu[1 - player]);
        best_response_curve(ni, nj, rho_other)
    }

    /// Closed-form Nash point of the reduced game.
    pub fn nash_equilibrium(&self) -> [f64; 2] {
        [
            nash_component(self.nu[0], self.nu[1]),
            nash_component(self.nu[1], self.nu[0]),
        ]
    }

    pub fn welfare_line(&self) -> WelfareLine {
        welfare_optimal_line(self.nu[0], self.nu[1])
    }

    pub fn tragicness(&self) -> TragicnessReport {
        let nash = self.nash_equilibrium();
        let line = self.welfare_line();
        TragicnessReport {
            nash,
            tragicness: line.distance(nash[0], nash[1]),
            line,
        }
    }
}

/// Payoff-maximizing environmentalism against `(nu_j, rho_j)`, for own
/// relevance `nu_i`.
pub fn best_response_curve(nu_i: f64, nu_j: f64, rho_j: f64) -> f64 {
    ((1.0 - nu_j) * (rho_j - nu_j * (1.0 - rho_j)) / (2.0 * nu_j)) * (1.0 / (nu_i - 1.0))
        + (rho_j + nu_j * (1.0 - rho_j) * (2.0 * nu_j - 1.0)) / (2.0 * nu_j)
}

/// Slope of the best-response map in the opponent's strategy.
pub fn best_response_slope(nu_i: f64, nu_j: f64) -> f64 {
    ((1.0 - nu_j) / (2.0 * nu_j)) * ((2.0 * nu_j + 1.0) - (1.0 + nu_j) / (1.0 - nu_i))
}

/// One component of the Nash point: own environmentalism given `(nu_i, nu_j)`.
/// Sweeping the relevances through the open square traces the equilibrium
/// locus of the unreduced game, where both attributes are choice variables;
/// optimization itself is implemented only for the reduced game.
pub fn nash_component(nu_i: f64, nu_j: f64) -> f64 {
    nu_i * (3.0 * nu_j - nu_i - 2.0 * nu_i * nu_j)
        / ((1.0 - nu_i) * (nu_i + nu_j + 2.0 * nu_i * nu_j))
}

pub fn nash_equilibrium(nu1: f64, nu2: f64) -> Result<[f64; 2], GameError> {
    Ok(ContinuousGame::new(nu1, nu2)?.nash_equilibrium())
}

/// Line `a rho1 + b rho2 + c = 0` of joint-harvest maximizers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WelfareLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl WelfareLine {
    pub fn distance(&self, rho1: f64, rho2: f64) -> f64 {
        (self.a * rho1 + self.b * rho2 + self.c).abs() / (self.a * self.a + self.b * self.b).sqrt()
    }

    /// rho2 on the line for a given rho1.
    pub fn rho2_at(&self, rho1: f64) -> f64 {
        -(self.a * rho1 + self.c) / self.b
    }
}

pub fn welfare_optimal_line(nu1: f64, nu2: f64) -> WelfareLine {
    WelfareLine {
        a: 2.0 * nu2 * (1.0 - nu1),
        b: 2.0 * nu1 * (1.0 - nu2),
        c: -nu1 * (1.0 - nu2) - nu2 * (1.0 - nu1),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TragicnessReport {
    pub nash: [f64; 2],
    pub line: WelfareLine,
    /// Euclidean distance from the Nash point to the welfare-optimal line
    pub tragicness: f64,
}

pub fn tragicness(nu1: f64, nu2: f64) -> Result<TragicnessReport, GameError> {
    Ok(ContinuousGame::new(nu1, nu2)?.tragicness())
}

// ---------------------------------------------------------------------------
// Generic best-response iteration (validated on the quantity-competition
// fixture below)
// ---------------------------------------------------------------------------

/// Iterate `x <- (1 - w) x + w BR(x)` to a fixed point of the best-response
/// map. `damping = 1` is the plain best-reply process; smaller values keep
/// the iteration convergent when the reply slopes are steep.
pub fn best_response_iteration<F>(
    br: F,
    init: [f64; 2],
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Option<[f64; 2]>
where
    F: Fn([f64; 2]) -> [f64; 2],
{
    assert!(damping > 0.0 && damping <= 1.0);
    let mut x = init;
    for _ in 0..max_iter {
        let reply = br(x);
        let next = [
            (1.0 - damping) * x[0] + damping * reply[0],
            (1.0 - damping) * x[1] + damping * reply[1],
        ];
        let delta = (reply[0] - x[0]).abs().max((reply[1] - x[1]).abs());
        x = next;
        if delta < tol {
            return Some(x);
        }
        if !x[0].is_finite() || !x[1].is_finite() {
            return None;
        }
    }
    None
}

/// Two symmetric firms choosing production quantities against a linear
/// inverse-demand curve; the classic fixture for best-response machinery.
#[derive(Debug, Clone, Copy)]
pub struct QuantityGame {
    pub demand_intercept: f64,
    pub demand_slope: f64,
    pub unit_cost: f64,
}

impl QuantityGame {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, GameError> {
        if !(a > c && c > 0.0 && b > 0.0) {
            return Err(GameError::BadThresholds(format!(
                "need demand intercept > unit cost > 0 and slope > 0, got a={a}, b={b}, c={c}"
            )));
        }
        Ok(Self {
            demand_intercept: a,
            demand_slope: b,
            unit_cost: c,
        })
    }

    pub fn payoff(&self, q_own: f64, q_other: f64) -> f64 {
        (self.demand_intercept - self.demand_slope * (q_own + q_other)) * q_own
            - self.unit_cost * q_own
    }

    pub fn best_response(&self, q_other: f64) -> f64 {
        (self.demand_intercept - self.unit_cost) / (2.0 * self.demand_slope) - q_other / 2.0
    }

    pub fn nash_closed_form(&self) -> f64 {
        (self.demand_intercept - self.unit_cost) / (3.0 * self.demand_slope)
    }
}

// ---------------------------------------------------------------------------
// Discrete consumption game
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Cooperate,
    Defect,
}

pub const PROFILES: [(Strategy, Strategy); 4] = [
    (Strategy::Cooperate, Strategy::Cooperate),
    (Strategy::Cooperate, Strategy::Defect),
    (Strategy::Defect, Strategy::Cooperate),
    (Strategy::Defect, Strategy::Defect),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GameLabel {
    Type1,
    Type2,
    Type3,
    Type4,
    Type5,
    Type6,
    Type7,
    Type8,
    Type9,
    Degenerate,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiscreteThresholds {
    pub rho_low: f64,
    pub rho_high: f64,
    pub nu_low: f64,
    pub nu_high: f64,
}

impl DiscreteThresholds {
    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.rho_low < self.rho_high) {
            return Err(GameError::BadThresholds(format!(
                "rho_low {} must be below rho_high {}",
                self.rho_low, self.rho_high
            )));
        }
        if !(self.nu_low < self.nu_high) {
            return Err(GameError::BadThresholds(format!(
                "nu_low {} must be below nu_high {}",
                self.nu_low, self.nu_high
            )));
        }
        check_interior(self.nu_low)?;
        check_interior(self.nu_high)?;
        Ok(())
    }

    fn of(&self, s: Strategy) -> (f64, f64) {
        match s {
            Strategy::Cooperate => (self.rho_high, self.nu_high),
            Strategy::Defect => (self.rho_low, self.nu_low),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteGame {
    pub thresholds: DiscreteThresholds,
    /// payoff pairs indexed by (player 1 strategy, player 2 strategy);
    /// 0 = cooperate, 1 = defect
    pub payoffs: [[[f64; 2]; 2]; 2],
    /// steady-state stock per profile, same indexing
    pub stock: [[f64; 2]; 2],
    pub nash_set: Vec<(Strategy, Strategy)>,
    pub pareto_set: Vec<(Strategy, Strategy)>,
    pub label: GameLabel,
    /// some pure equilibrium is strictly dominated by another outcome
    pub tragic: bool,
}

pub fn idx(s: Strategy) -> usize {
    match s {
        Strategy::Cooperate => 0,
        Strategy::Defect => 1,
    }
}

/// Build the 2x2 game whose payoffs are the steady-state harvests at the four
/// threshold profiles. Every profile must admit a stable interior equilibrium.
pub fn build_discrete_game(
    thresholds: DiscreteThresholds,
    susceptibility: [f64; 2],
) -> Result<DiscreteGame, GameError> {
    thresholds.validate()?;
    let mut payoffs = [[[0.0; 2]; 2]; 2];
    let mut stock = [[0.0; 2]; 2];
    for (s1, s2) in PROFILES {
        let (r1, n1) = thresholds.of(s1);
        let (r2, n2) = thresholds.of(s2);
        let params = ModelParams::dyad(susceptibility, [1.0 - n1, 1.0 - n2], [r1, r2])?;
        let profile = format!("({s1:?}, {s2:?})");
        let rep = equilibrium_dual(&params)?;
        let eq = match (&rep.existence, &rep.equilibrium) {
            (Existence::Unique, Some(eq)) => eq.clone(),
            (e, _) => {
                return Err(GameError::NonexistentProfile {
                    profile,
                    reason: format!("{e:?}"),
                });
            }
        };
        let routh = routh_dual(&params).map_err(|_| GameError::UnstableProfile {
            profile: profile.clone(),
        })?;
        if !routh.stable {
            return Err(GameError::UnstableProfile { profile });
        }
        payoffs[idx(s1)][idx(s2)] = [eq.x_bar * eq.y_bar[0], eq.x_bar * eq.y_bar[1]];
        stock[idx(s1)][idx(s2)] = eq.x_bar;
    }

    let nash_set = pure_nash_set(&payoffs);
    let pareto_set = pareto_optimal_set(&payoffs);
    let tragic = nash_set.iter().any(|p| !pareto_set.contains(p));
    let label = ordinal_label(&payoffs);
    Ok(DiscreteGame {
        thresholds,
        payoffs,
        stock,
        nash_set,
        pareto_set,
        label,
        tragic,
    })
}

/// Pure equilibria by best-response comparison (weak: ties stay in the set).
pub fn pure_nash_set(payoffs: &[[[f64; 2]; 2]; 2]) -> Vec<(Strategy, Strategy)> {
    PROFILES
        .iter()
        .copied()
        .filter(|&(s1, s2)| {
            let own = payoffs[idx(s1)][idx(s2)][0];
            let dev1 = payoffs[1 - idx(s1)][idx(s2)][0];
            let other = payoffs[idx(s1)][idx(s2)][1];
            let dev2 = payoffs[idx(s1)][1 - idx(s2)][1];
            own >= dev1 && other >= dev2
        })
        .collect()
}

/// Profiles not weakly dominated by any other profile.
pub fn pareto_optimal_set(payoffs: &[[[f64; 2]; 2]; 2]) -> Vec<(Strategy, Strategy)> {
    PROFILES
        .iter()
        .copied()
        .filter(|&(s1, s2)| {
            let here = payoffs[idx(s1)][idx(s2)];
            !PROFILES.iter().any(|&(t1, t2)| {
                let there = payoffs[idx(t1)][idx(t2)];
                there[0] >= here[0]
                    && there[1] >= here[1]
                    && (there[0] > here[0] || there[1] > here[1])
            })
        })
        .collect()
}

// Rank of each of player 1's payoffs (reward, sucker, temptation, punishment)
// decides the game type; a tie anywhere makes the ordering meaningless.
fn ordinal_label(payoffs: &[[[f64; 2]; 2]; 2]) -> GameLabel {
    let r = payoffs[0][0][0];
    let s = payoffs[0][1][0];
    let t = payoffs[1][0][0];
    let p = payoffs[1][1][0];
    let vals = [r, s, t, p];
    let scale = vals.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (vals[i] - vals[j]).abs() <= TIE_TOL * scale {
                return GameLabel::Degenerate;
            }
        }
    }
    let rank_of = |v: f64| vals.iter().filter(|w| **w < v).count() + 1;
    // (reward, sucker, temptation, punishment) ranks, 4 = best
    match (rank_of(r), rank_of(s), rank_of(t), rank_of(p)) {
        (3, 1, 4, 2) => GameLabel::Type1,
        (4, 1, 3, 2) => GameLabel::Type2,
        (3, 2, 4, 1) => GameLabel::Type3,
        (2, 1, 4, 3) => GameLabel::Type4,
        (1, 2, 4, 3) => GameLabel::Type5,
        (2, 3, 4, 1) => GameLabel::Type6,
        (4, 2, 3, 1) => GameLabel::Type7,
        (1, 3, 4, 2) => GameLabel::Type8,
        (1, 2, 3, 4) => GameLabel::Type9,
        _ => GameLabel::Degenerate,
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuousCell {
    pub nu_avg: f64,
    pub nu_diff: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub tragicness: Option<f64>,
    pub stock_at_nash: Option<f64>,
    pub total_consumption: Option<f64>,
    pub consumption_1: Option<f64>,
    pub consumption_gap: Option<f64>,
    /// stability certified for every susceptibility ratio
    pub stability_guaranteed: bool,
    pub error: Option<String>,
}

/// Whether the ratio-free sufficient test certifies stability at these
/// relevances for every susceptibility pair.
pub fn stability_guaranteed(nu1: f64, nu2: f64) -> bool {
    let coef = nu1 * (2.0 * nu2 - 1.0) + nu2 * (2.0 * nu1 - 1.0);
    coef * coef - 4.0 * nu1 * nu2 < 0.0
}

/// Sweep the game characteristics over the (average, difference) plane of the
/// social relevances.
pub fn sweep_continuous(cells_per_axis: usize) -> Vec<ContinuousCell> {
    let mut out = Vec::new();
    for i in 0..cells_per_axis {
        for j in 0..cells_per_axis {
            let nu_avg = (i as f64 + 0.5) / cells_per_axis as f64;
            let nu_diff = 2.0 * ((j as f64 + 0.5) / cells_per_axis as f64) - 1.0;
            let nu1 = nu_avg + nu_diff / 2.0;
            let nu2 = nu_avg - nu_diff / 2.0;
            let mut cell = ContinuousCell {
                nu_avg,
                nu_diff,
                nu1,
                nu2,
                tragicness: None,
                stock_at_nash: None,
                total_consumption: None,
                consumption_1: None,
                consumption_gap: None,
                stability_guaranteed: false,
                error: None,
            };
            if !(1e-3..=1.0 - 1e-3).contains(&nu1) || !(1e-3..=1.0 - 1e-3).contains(&nu2) {
                cell.error = Some("relevances outside the open unit square".into());
                out.push(cell);
                continue;
            }
            cell.stability_guaranteed = stability_guaranteed(nu1, nu2);
            match ContinuousGame::new(nu1, nu2) {
                Ok(game) => {
                    let rep = game.tragicness();
                    cell.tragicness = Some(rep.tragicness);
                    let nash = rep.nash;
                    match game.payoffs(nash[0], nash[1]) {
                        Ok(pay) => {
                            let params = game.dyad(nash[0], nash[1]);
                            if let Ok(eqr) = equilibrium_dual(&params) {
                                if let Some(eq) = eqr.equilibrium {
                                    cell.stock_at_nash = Some(eq.x_bar);
                                }
                            }
                            cell.total_consumption = Some(pay[0] + pay[1]);
                            cell.consumption_1 = Some(pay[0]);
                            cell.consumption_gap = Some(pay[0] - pay[1]);
                        }
                        Err(e) => cell.error = Some(e.to_string()),
                    }
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            out.push(cell);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteCell {
    pub rho_low: f64,
    pub rho_high: f64,
    pub nu_low: f64,
    pub nu_high: f64,
    pub label: Option<GameLabel>,
    pub tragic: Option<bool>,
    /// stock at the best pure equilibrium (highest joint payoff)
    pub stock_at_nash: Option<f64>,
    pub error: Option<String>,
}

/// Sweep the discrete game over a (rho_low, rho_high) grid at fixed social
/// thresholds; infeasible corners are recorded, not fatal.
pub fn sweep_discrete(nu_low: f64, nu_high: f64, cells_per_axis: usize) -> Vec<DiscreteCell> {
    let mut out = Vec::new();
    for i in 0..cells_per_axis {
        for j in 0..cells_per_axis {
            let rho_low = (i as f64 + 0.5) / cells_per_axis as f64;
            let rho_high = (j as f64 + 0.5) / cells_per_axis as f64;
            let mut cell = DiscreteCell {
                rho_low,
                rho_high,
                nu_low,
                nu_high,
                label: None,
                tragic: None,
                stock_at_nash: None,
                error: None,
            };
            if rho_low >= rho_high {
                cell.error = Some("rho_low >= rho_high".into());
                out.push(cell);
                continue;
            }
            let thresholds = DiscreteThresholds {
                rho_low,
                rho_high,
                nu_low,
                nu_high,
            };
            match build_discrete_game(thresholds, [1.0, 1.0]) {
                Ok(game) => {
                    cell.label = Some(game.label);
                    cell.tragic = Some(game.tragic);
                    cell.stock_at_nash = game
                        .nash_set
                        .iter()
                        .map(|&(s1, s2)| {
                            let pay = game.payoffs[idx(s1)][idx(s2)];
                            (pay[0] + pay[1], game.stock[idx(s1)][idx(s2)])
                        })
                        .max_by(|a, b| a.0.partial_cmp(&b.0).expect("finite payoffs"))
                        .map(|(_, stock)| stock);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            out.push(cell);
        }
    }
    out
}
