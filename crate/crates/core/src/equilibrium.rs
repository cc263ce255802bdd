//! Closed-form fixed points for the analyzed topologies (single agent, dyad,
//! well-mixed, star), existence logic for the degenerate parameter branches,
//! free-riding classification, and comparative statics for the dyad.

use crate::model::{
    steady_state, ConvergenceSpec, ModelError, ModelParams, SteadyStateOutcome, SystemState,
};
use serde::{Deserialize, Serialize};

/// Tolerance for recognizing the exact-zero / exact-one relevance branches.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// A steady-state effort this close to zero is classified as boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Sign bucketing tolerance for comparative statics.
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x_bar: f64,
    pub y_bar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum Existence {
    Unique,
    NonExistent(String),
    InfinitelyMany(String),
    /// numerical search said nothing either way
    Undetermined(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Classification {
    SelfReliant,
    FreeRiding {
        riders: Vec<usize>,
        subsidizers: Vec<usize>,
    },
    Boundary {
        zero_effort: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceFormula {
    #[serde(rename = "closed_form_1")]
    ClosedFormSingle,
    #[serde(rename = "closed_form_2")]
    ClosedFormDual,
    #[serde(rename = "closed_form_well_mixed")]
    ClosedFormWellMixed,
    #[serde(rename = "closed_form_star")]
    ClosedFormStar,
    #[serde(rename = "numerical")]
    Numerical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub existence: Existence,
    pub equilibrium: Option<Equilibrium>,
    /// further isolated equilibria in degenerate branches
    pub alternates: Vec<Equilibrium>,
    pub classification: Option<Classification>,
    pub source: SourceFormula,
    pub notes: Vec<String>,
}

impl EquilibriumReport {
    pub fn exists(&self) -> bool {
        matches!(
            self.existence,
            Existence::Unique | Existence::InfinitelyMany(_)
        )
    }

    fn unique(x_bar: f64, y_bar: Vec<f64>, source: SourceFormula, notes: Vec<String>) -> Self {
        let classification = Some(classify_efforts(&y_bar));
        Self {
            existence: Existence::Unique,
            equilibrium: Some(Equilibrium { x_bar, y_bar }),
            alternates: Vec::new(),
            classification,
            source,
            notes,
        }
    }

    fn non_existent(reason: impl Into<String>, source: SourceFormula) -> Self {
        Self {
            existence: Existence::NonExistent(reason.into()),
            equilibrium: None,
            alternates: Vec::new(),
            classification: None,
            source,
            notes: Vec::new(),
        }
    }
}

/// Sign-based classification: free-riding means the positive-effort agents
/// (riders) coast on the negative-effort agents (subsidizers).
pub fn classify_efforts(y_bar: &[f64]) -> Classification {
    let zero: Vec<usize> = y_bar
        .iter()
        .enumerate()
        .filter(|(_, y)| y.abs() <= BOUNDARY_TOL)
        .map(|(i, _)| i)
        .collect();
    if !zero.is_empty() {
        return Classification::Boundary { zero_effort: zero };
    }
    let riders: Vec<usize> = y_bar
        .iter()
        .enumerate()
        .filter(|(_, y)| **y > 0.0)
        .map(|(i, _)| i)
        .collect();
    let subsidizers: Vec<usize> = y_bar
        .iter()
        .enumerate()
        .filter(|(_, y)| **y < 0.0)
        .map(|(i, _)| i)
        .collect();
    if subsidizers.is_empty() {
        Classification::SelfReliant
    } else if riders.is_empty() {
        // nobody harvests; flagged as a boundary case with a note upstream
        Classification::Boundary {
            zero_effort: Vec::new(),
        }
    } else {
        Classification::FreeRiding {
            riders,
            subsidizers,
        }
    }
}

/// Fixed point of the single-agent system: `x = rho`, `y = 1 - rho`.
pub fn equilibrium_single(params: &ModelParams) -> Result<EquilibriumReport, ModelError> {
    params.validate()?;
    if params.n_agents() != 1 {
        return Err(ModelError::InvalidParams(
            "single-agent form needs n = 1".into(),
        ));
    }
    let rho = params.environmentalism[0];
    if rho < 0.0 {
        return Ok(EquilibriumReport::non_existent(
            "negative environmentalism unreachable: the stock stays nonnegative",
            SourceFormula::ClosedFormSingle,
        ));
    }
    let mut notes = Vec::new();
    if rho > 1.0 {
        notes.push("negative aggregate effort: environmentalism beyond carrying capacity".into());
    }
    Ok(EquilibriumReport::unique(
        rho,
        vec![1.0 - rho],
        SourceFormula::ClosedFormSingle,
        notes,
    ))
}

fn require_dyad(params: &ModelParams) -> Result<(), ModelError> {
    if params.n_agents() != 2
        || (params.weights[0][1] - 1.0).abs() > 1e-9
        || (params.weights[1][0] - 1.0).abs() > 1e-9
    {
        return Err(ModelError::InvalidParams(
            "dual form needs the symmetric dyad w_12 = w_21 = 1".into(),
        ));
    }
    Ok(())
}

/// Unique fixed point of the two-agent system, with the degenerate
/// all-social / all-ecological branches reported separately.
pub fn equilibrium_dual(params: &ModelParams) -> Result<EquilibriumReport, ModelError> {
    params.validate()?;
    require_dyad(params)?;
    let (n1, n2) = (params.social_relevance[0], params.social_relevance[1]);
    let (a1, a2) = (
        params.ecological_relevance[0],
        params.ecological_relevance[1],
    );
    let (r1, r2) = (params.environmentalism[0], params.environmentalism[1]);

    if n1 <= DEGENERACY_TOL && n2 <= DEGENERACY_TOL {
        return Ok(if (r1 - r2).abs() <= DEGENERACY_TOL {
            EquilibriumReport {
                existence: Existence::InfinitelyMany(
                    "purely ecological agents with equal environmentalism: every effort split with y_1 + y_2 = 1 - rho is steady".into(),
                ),
                equilibrium: Some(Equilibrium { x_bar: r1, y_bar: vec![(1.0 - r1) / 2.0, (1.0 - r1) / 2.0] }),
                alternates: Vec::new(),
                classification: None,
                source: SourceFormula::ClosedFormDual,
                notes: vec!["representative member of the equilibrium family".into()],
            }
        } else {
            EquilibriumReport::non_existent(
                "purely ecological agents with different environmentalisms: no equilibrium exists",
                SourceFormula::ClosedFormDual,
            )
        });
    }
    if n1 >= 1.0 - DEGENERACY_TOL && n2 >= 1.0 - DEGENERACY_TOL {
        return Ok(EquilibriumReport {
            existence: Existence::InfinitelyMany(
                "purely social agents: equal efforts of any magnitude are steady".into(),
            ),
            equilibrium: None,
            alternates: Vec::new(),
            classification: None,
            source: SourceFormula::ClosedFormDual,
            notes: Vec::new(),
        });
    }

    let (x_bar, y_bar) = dual_closed_form([a1, a2], [n1, n2], [r1, r2]);
    if x_bar < 0.0 {
        return Ok(EquilibriumReport::non_existent(
            format!("resource equilibrium {x_bar} below zero is unreachable from positive stock"),
            SourceFormula::ClosedFormDual,
        ));
    }
    Ok(EquilibriumReport::unique(
        x_bar,
        y_bar.to_vec(),
        SourceFormula::ClosedFormDual,
        Vec::new(),
    ))
}

/// The dyad fixed-point algebra itself, with no reachability or degeneracy
/// screening. Callers that treat the formulas as payoff surfaces over all
/// real environmentalisms evaluate this directly.
pub fn dual_closed_form(alpha: [f64; 2], nu: [f64; 2], rho: [f64; 2]) -> (f64, [f64; 2]) {
    let d = alpha[1] * nu[0] + alpha[0] * nu[1];
    let x_bar = (alpha[0] * nu[1] * rho[0] + alpha[1] * nu[0] * rho[1]) / d;
    let shared = (1.0 - rho[0]) * alpha[0] * nu[1] + (1.0 - rho[1]) * alpha[1] * nu[0];
    let y1 = (shared - (rho[0] - rho[1]) * alpha[0] * alpha[1]) / (2.0 * d);
    let y2 = (shared - (rho[1] - rho[0]) * alpha[0] * alpha[1]) / (2.0 * d);
    (x_bar, [y1, y2])
}

// Shared degenerate-branch detection for the n-agent closed forms.
enum Branch {
    AllSocial,
    AllEcological { uniform_rho: Option<f64> },
    MultipleZeroSocial(Vec<usize>),
    Regular { zero_social: Option<usize> },
}

fn detect_branch(params: &ModelParams) -> Branch {
    let nu = &params.social_relevance;
    if nu.iter().all(|v| *v >= 1.0 - DEGENERACY_TOL) {
        return Branch::AllSocial;
    }
    if nu.iter().all(|v| *v <= DEGENERACY_TOL) {
        let rho = &params.environmentalism;
        let (lo, hi) = rho
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), r| {
                (l.min(*r), h.max(*r))
            });
        let uniform_rho = if hi - lo <= DEGENERACY_TOL {
            Some(rho[0])
        } else {
            None
        };
        return Branch::AllEcological { uniform_rho };
    }
    let zeros: Vec<usize> = nu
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= DEGENERACY_TOL)
        .map(|(i, _)| i)
        .collect();
    match zeros.len() {
        0 => Branch::Regular { zero_social: None },
        1 => Branch::Regular {
            zero_social: Some(zeros[0]),
        },
        _ => Branch::MultipleZeroSocial(zeros),
    }
}

fn all_ecological_report(
    uniform_rho: Option<f64>,
    n: usize,
    source: SourceFormula,
) -> EquilibriumReport {
    match uniform_rho {
        Some(rho) => EquilibriumReport {
            existence: Existence::InfinitelyMany(
                "purely ecological population with uniform environmentalism: every effort split with total 1 - rho is steady".into(),
            ),
            equilibrium: Some(Equilibrium { x_bar: rho, y_bar: vec![(1.0 - rho) / n as f64; n] }),
            alternates: Vec::new(),
            classification: None,
            source,
            notes: vec!["representative member of the equilibrium family".into()],
        },
        None => EquilibriumReport::non_existent(
            "purely ecological population with different environmentalisms: no equilibrium exists",
            source,
        ),
    }
}

fn rho_extreme_notes(params: &ModelParams) -> Vec<f64> {
    params.environmentalism.clone()
}

// Product of nu over all agents except `skip`.
fn prod_except(nu: &[f64], skip: usize) -> f64 {
    nu.iter()
        .enumerate()
        .filter(|(j, _)| *j != skip)
        .map(|(_, v)| v)
        .product()
}

/// Closed-form fixed point of the uniformly weighted complete network.
pub fn equilibrium_well_mixed(params: &ModelParams) -> Result<EquilibriumReport, ModelError> {
    params.validate()?;
    let n = params.n_agents();
    if n < 2 {
        return Err(ModelError::InvalidParams(
            "well-mixed form needs n >= 2".into(),
        ));
    }
    let expected = 1.0 / (n - 1) as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j && (params.weights[i][j] - expected).abs() > 1e-9 {
                return Err(ModelError::InvalidParams(
                    "well-mixed form needs uniform complete weights 1/(n-1)".into(),
                ));
            }
        }
    }
    let source = SourceFormula::ClosedFormWellMixed;
    match detect_branch(params) {
        Branch::AllSocial => Ok(EquilibriumReport {
            existence: Existence::InfinitelyMany(
                "maximally social population: equal efforts y with x = 0 or x = 1 - n y are all steady".into(),
            ),
            equilibrium: None,
            alternates: Vec::new(),
            classification: None,
            source,
            notes: Vec::new(),
        }),
        Branch::AllEcological { uniform_rho } => Ok(all_ecological_report(uniform_rho, n, source)),
        Branch::MultipleZeroSocial(idx) => Ok(EquilibriumReport::non_existent(
            format!("agents {idx:?} have zero social relevance; at most one is allowed"),
            source,
        )),
        Branch::Regular { zero_social } => {
            let nu = &params.social_relevance;
            let rho = &params.environmentalism;
            let x_bar = match zero_social {
                Some(i) => rho[i],
                None => {
                    let num: f64 =
                        (0..n).map(|i| rho[i] * (nu[i] - 1.0) * prod_except(nu, i)).sum();
                    let den: f64 = n as f64 * nu.iter().product::<f64>()
                        - (0..n).map(|j| prod_except(nu, j)).sum::<f64>();
                    num / den
                }
            };
            if x_bar < 0.0 {
                return Ok(EquilibriumReport::non_existent(
                    format!("resource equilibrium {x_bar} below zero is unreachable from positive stock"),
                    source,
                ));
            }
            let mut y_bar = vec![0.0; n];
            let mut assigned_total = 0.0;
            for i in 0..n {
                if Some(i) == zero_social {
                    continue;
                }
                let g = (1.0 - nu[i]) / nu[i];
                y_bar[i] = ((n - 1) as f64 * g * (x_bar - rho[i]) + (1.0 - x_bar)) / n as f64;
                assigned_total += y_bar[i];
            }
            if let Some(i) = zero_social {
                y_bar[i] = (1.0 - x_bar) - assigned_total;
            }
            let mut notes = Vec::new();
            let rhos = rho_extreme_notes(params);
            if rhos.iter().all(|r| (*r - 1.0).abs() <= DEGENERACY_TOL) {
                notes.push("maximally environmental population: equilibrium sits at full stock with zero efforts".into());
            }
            if rhos.iter().all(|r| r.abs() <= DEGENERACY_TOL) {
                notes.push("minimally environmental population: extinct-stock effort families coexist with this point".into());
            }
            Ok(EquilibriumReport::unique(x_bar, y_bar, source, notes))
        }
    }
}

/// Closed-form fixed point of the star network (hub at index 0).
pub fn equilibrium_star(params: &ModelParams) -> Result<EquilibriumReport, ModelError> {
    params.validate()?;
    let n = params.n_agents();
    if n < 2 {
        return Err(ModelError::InvalidParams("star form needs n >= 2".into()));
    }
    let hub_w = 1.0 / (n - 1) as f64;
    for j in 1..n {
        if (params.weights[0][j] - hub_w).abs() > 1e-9 || (params.weights[j][0] - 1.0).abs() > 1e-9
        {
            return Err(ModelError::InvalidParams(
                "star form needs hub weights 1/(n-1) and leaf weights 1".into(),
            ));
        }
        for k in 1..n {
            if k != j && params.weights[j][k] != 0.0 {
                return Err(ModelError::InvalidParams(
                    "star form forbids leaf-leaf edges".into(),
                ));
            }
        }
    }
    let source = SourceFormula::ClosedFormStar;
    match detect_branch(params) {
        Branch::AllSocial => {
            // two isolated equilibria: untouched full stock and total extinction
            let full = Equilibrium {
                x_bar: 1.0,
                y_bar: vec![0.0; n],
            };
            let extinct = Equilibrium {
                x_bar: 0.0,
                y_bar: vec![0.0; n],
            };
            Ok(EquilibriumReport {
                existence: Existence::Unique,
                classification: Some(classify_efforts(&full.y_bar)),
                equilibrium: Some(full),
                alternates: vec![extinct],
                source,
                notes: vec!["maximally social population: exactly two isolated equilibria".into()],
            })
        }
        Branch::AllEcological { uniform_rho } => Ok(all_ecological_report(uniform_rho, n, source)),
        Branch::MultipleZeroSocial(idx) => Ok(EquilibriumReport::non_existent(
            format!("agents {idx:?} have zero social relevance; at most one is allowed"),
            source,
        )),
        Branch::Regular { zero_social } => {
            let nu = &params.social_relevance;
            let rho = &params.environmentalism;
            let m = (n - 1) as f64;
            let x_bar = match zero_social {
                Some(i) => rho[i],
                None => {
                    let hub_term = m * rho[0] * (nu[0] - 1.0) * prod_except(nu, 0);
                    let leaf_terms: f64 = (1..n)
                        .map(|i| rho[i] * (nu[i] - 1.0) * prod_except(nu, i))
                        .sum();
                    let hub_den = m * (nu[0] - 1.0) * prod_except(nu, 0);
                    let leaf_den: f64 = (1..n).map(|i| (nu[i] - 1.0) * prod_except(nu, i)).sum();
                    (hub_term + leaf_terms) / (hub_den + leaf_den)
                }
            };
            if x_bar < 0.0 {
                return Ok(EquilibriumReport::non_existent(
                    format!("resource equilibrium {x_bar} below zero is unreachable from positive stock"),
                    source,
                ));
            }
            let mut y_bar = vec![0.0; n];
            let hub_zero = zero_social == Some(0);
            if hub_zero {
                // hub pins the stock; its effort balances the leaves
                let leaf_sum: f64 = (1..n)
                    .map(|i| (1.0 - nu[i]) / nu[i] * (x_bar - rho[i]))
                    .sum();
                y_bar[0] = ((1.0 - x_bar) - leaf_sum) / n as f64;
            } else {
                let g0 = (1.0 - nu[0]) / nu[0];
                y_bar[0] = (m * g0 * (x_bar - rho[0]) + (1.0 - x_bar)) / n as f64;
            }
            let mut assigned = y_bar[0];
            for i in 1..n {
                if Some(i) == zero_social {
                    continue;
                }
                let g = (1.0 - nu[i]) / nu[i];
                y_bar[i] = y_bar[0] + g * (x_bar - rho[i]);
                assigned += y_bar[i];
            }
            if let Some(i) = zero_social {
                if i != 0 {
                    y_bar[i] = (1.0 - x_bar) - assigned;
                }
            }
            Ok(EquilibriumReport::unique(x_bar, y_bar, source, Vec::new()))
        }
    }
}

/// Numerical fallback for arbitrary topologies: a steady-state search that
/// never asserts nonexistence.
pub fn equilibrium_numerical(
    params: &ModelParams,
    init: &SystemState,
    spec: &ConvergenceSpec,
) -> Result<EquilibriumReport, ModelError> {
    match steady_state(params, init, spec)? {
        SteadyStateOutcome::Converged { state, .. } => Ok(EquilibriumReport::unique(
            state.x,
            state.y,
            SourceFormula::Numerical,
            vec!["numerically attracting from the supplied initial state".into()],
        )),
        SteadyStateOutcome::NoConvergence { reason, .. } => Ok(EquilibriumReport {
            existence: Existence::Undetermined(format!(
                "no convergence ({reason:?}); existence is not decided by the search"
            )),
            equilibrium: None,
            alternates: Vec::new(),
            classification: None,
            source: SourceFormula::Numerical,
            notes: Vec::new(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Comparative statics of the dyad equilibrium
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeSign {
    Plus,
    Minus,
    Zero,
    /// direction depends on the remaining parameters
    Ambiguous,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StaticsEntry {
    pub value: f64,
    pub sign: Sign,
    pub regime_sign: RegimeSign,
}

/// Partial derivatives of (x, y_1, y_2) with respect to (nu_1, nu_2, rho_1,
/// rho_2), evaluated at the given dyad parameters. Rows are quantities,
/// columns are parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparativeStatics {
    pub entries: [[StaticsEntry; 4]; 3],
    pub regime: RhoRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RhoRegime {
    Equal,
    FirstLarger,
    SecondLarger,
}

fn bucket(value: f64) -> Sign {
    if value > SIGN_TOL {
        Sign::Plus
    } else if value < -SIGN_TOL {
        Sign::Minus
    } else {
        Sign::Zero
    }
}

fn regime_of(diff: f64) -> RhoRegime {
    if diff > SIGN_TOL {
        RhoRegime::FirstLarger
    } else if diff < -SIGN_TOL {
        RhoRegime::SecondLarger
    } else {
        RhoRegime::Equal
    }
}

fn signed(regime: RhoRegime, on_first_larger: RegimeSign) -> RegimeSign {
    match (regime, on_first_larger) {
        (RhoRegime::Equal, _) => RegimeSign::Zero,
        (RhoRegime::FirstLarger, s) => s,
        (RhoRegime::SecondLarger, RegimeSign::Plus) => RegimeSign::Minus,
        (RhoRegime::SecondLarger, RegimeSign::Minus) => RegimeSign::Plus,
        (RhoRegime::SecondLarger, s) => s,
    }
}

pub fn comparative_statics_dual(params: &ModelParams) -> Result<ComparativeStatics, ModelError> {
    params.validate()?;
    require_dyad(params)?;
    let (n1, n2) = (params.social_relevance[0], params.social_relevance[1]);
    if n1 <= DEGENERACY_TOL
        || n2 <= DEGENERACY_TOL
        || n1 >= 1.0 - DEGENERACY_TOL
        || n2 >= 1.0 - DEGENERACY_TOL
    {
        return Err(ModelError::InvalidParams(
            "comparative statics requires interior social relevances".into(),
        ));
    }
    let (r1, r2) = (params.environmentalism[0], params.environmentalism[1]);
    let dr = r1 - r2;
    let d = n1 + n2 - 2.0 * n1 * n2;
    let d2 = d * d;

    // analytic partials of the closed form (alphas eliminated via alpha = 1 - nu)
    let x_nu1 = -n2 * (1.0 - n2) * dr / d2;
    let x_nu2 = n1 * (1.0 - n1) * dr / d2;
    let x_r1 = n2 * (1.0 - n1) / d;
    let x_r2 = n1 * (1.0 - n2) / d;

    let y1_nu1 = (1.0 - n2) * dr / (2.0 * d2);
    let y1_nu2 = -(1.0 - n1) * (2.0 * n1 - 1.0) * dr / (2.0 * d2);
    let y1_r1 = -(1.0 - n1) / (2.0 * d);
    let y1_r2 = -(2.0 * n1 - 1.0) * (1.0 - n2) / (2.0 * d);

    let y2_nu1 = (1.0 - n2) * (2.0 * n2 - 1.0) * dr / (2.0 * d2);
    let y2_nu2 = -(1.0 - n1) * dr / (2.0 * d2);
    let y2_r1 = -(1.0 - n1) * (2.0 * n2 - 1.0) / (2.0 * d);
    let y2_r2 = -(1.0 - n2) / (2.0 * d);

    let regime = regime_of(dr);
    let amb = |nonzero: bool| {
        if nonzero {
            RegimeSign::Ambiguous
        } else {
            RegimeSign::Zero
        }
    };
    let dr_nonzero = regime != RhoRegime::Equal;

    let entry = |v: f64, rs: RegimeSign| StaticsEntry {
        value: v,
        sign: bucket(v),
        regime_sign: rs,
    };
    let entries = [
        [
            entry(x_nu1, signed(regime, RegimeSign::Minus)),
            entry(x_nu2, signed(regime, RegimeSign::Plus)),
            entry(x_r1, RegimeSign::Plus),
            entry(x_r2, RegimeSign::Plus),
        ],
        [
            entry(y1_nu1, signed(regime, RegimeSign::Plus)),
            entry(y1_nu2, amb(dr_nonzero)),
            entry(y1_r1, RegimeSign::Minus),
            entry(y1_r2, RegimeSign::Ambiguous),
        ],
        [
            entry(y2_nu1, amb(dr_nonzero)),
            entry(y2_nu2, signed(regime, RegimeSign::Minus)),
            entry(y2_r1, RegimeSign::Ambiguous),
            entry(y2_r2, RegimeSign::Minus),
        ],
    ];
    Ok(ComparativeStatics { entries, regime })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_conserved(rep: &EquilibriumReport) {
        let eq = rep.equilibrium.as_ref().unwrap();
        if eq.x_bar > 0.0 {
            let total: f64 = eq.x_bar + eq.y_bar.iter().sum::<f64>();
            assert!(
                (total - 1.0).abs() < 1e-10,
                "conservation violated: {total}"
            );
        }
    }

    #[test]
    fn single_interior() {
        let p = ModelParams::single(1.0, 0.5, 0.5).unwrap();
        let rep = equilibrium_single(&p).unwrap();
        let eq = rep.equilibrium.unwrap();
        assert_eq!(eq.x_bar, 0.5);
        assert_eq!(eq.y_bar, vec![0.5]);
    }

    #[test]
    fn single_beyond_capacity_is_boundary_flavored() {
        let p = ModelParams::single(1.0, 0.5, 1.2).unwrap();
        let rep = equilibrium_single(&p).unwrap();
        let eq = rep.equilibrium.as_ref().unwrap();
        assert!((eq.x_bar - 1.2).abs() < 1e-15);
        assert!((eq.y_bar[0] + 0.2).abs() < 1e-15);
        assert!(rep
            .notes
            .iter()
            .any(|n| n.contains("negative aggregate effort")));
    }

    #[test]
    fn single_negative_rho_has_no_equilibrium() {
        let p = ModelParams::single(1.0, 0.5, -0.1).unwrap();
        let rep = equilibrium_single(&p).unwrap();
        assert!(matches!(rep.existence, Existence::NonExistent(_)));
    }

    #[test]
    fn dual_symmetric_rho_splits_evenly() {
        let p = ModelParams::dyad([1.0, 2.0], [0.3, 0.8], [0.4, 0.4]).unwrap();
        let rep = equilibrium_dual(&p).unwrap();
        let eq = rep.equilibrium.unwrap();
        assert!((eq.x_bar - 0.4).abs() < 1e-12);
        assert!((eq.y_bar[0] - 0.3).abs() < 1e-12);
        assert!((eq.y_bar[1] - 0.3).abs() < 1e-12);
        assert!(matches!(
            rep.classification,
            Some(Classification::SelfReliant)
        ));
    }

    #[test]
    fn dual_nominal_point() {
        let p = ModelParams::dyad([1.0, 1.0], [0.25, 0.75], [0.75, 0.25]).unwrap();
        let rep = equilibrium_dual(&p).unwrap();
        let eq = rep.equilibrium.clone().unwrap();
        assert!((eq.x_bar - 0.3).abs() < 1e-12);
        assert!((eq.y_bar[0] - 0.275).abs() < 1e-12);
        assert!((eq.y_bar[1] - 0.425).abs() < 1e-12);
        assert_conserved(&rep);
    }

    #[test]
    fn dual_x_is_convex_combination_of_rhos() {
        let p = ModelParams::dyad([0.7, 1.3], [0.15, 0.9], [0.2, 0.8]).unwrap();
        let rep = equilibrium_dual(&p).unwrap();
        let x = rep.equilibrium.unwrap().x_bar;
        assert!((0.2..=0.8).contains(&x));
    }

    #[test]
    fn dual_degenerate_branches() {
        // all-ecological, unequal rho: none
        let p = ModelParams::dyad([1.0, 1.0], [1.0, 1.0], [0.3, 0.7]).unwrap();
        assert!(matches!(
            equilibrium_dual(&p).unwrap().existence,
            Existence::NonExistent(_)
        ));
        // all-ecological, equal rho: family
        let p = ModelParams::dyad([1.0, 1.0], [1.0, 1.0], [0.3, 0.3]).unwrap();
        assert!(matches!(
            equilibrium_dual(&p).unwrap().existence,
            Existence::InfinitelyMany(_)
        ));
        // all-social: family
        let p = ModelParams::dyad([1.0, 1.0], [0.0, 0.0], [0.3, 0.7]).unwrap();
        assert!(matches!(
            equilibrium_dual(&p).unwrap().existence,
            Existence::InfinitelyMany(_)
        ));
    }

    #[test]
    fn dual_free_riding_detected() {
        // strongly unequal environmentalism with weak social ties on one side
        let p = ModelParams::dyad([1.0, 1.0], [0.1, 0.9], [0.9, 0.1]).unwrap();
        let rep = equilibrium_dual(&p).unwrap();
        let eq = rep.equilibrium.as_ref().unwrap();
        let signs: Vec<bool> = eq.y_bar.iter().map(|y| *y > 0.0).collect();
        if signs[0] != signs[1] {
            assert!(matches!(
                rep.classification,
                Some(Classification::FreeRiding { .. })
            ));
        } else {
            assert!(matches!(
                rep.classification,
                Some(Classification::SelfReliant)
            ));
        }
    }

    #[test]
    fn well_mixed_uniform_reduces_to_homogeneous() {
        let n = 5;
        let p = ModelParams::well_mixed(vec![1.0; n], vec![0.4; n], vec![0.37; n]).unwrap();
        let rep = equilibrium_well_mixed(&p).unwrap();
        let eq = rep.equilibrium.unwrap();
        assert!((eq.x_bar - 0.37).abs() < 1e-12);
        for y in &eq.y_bar {
            assert!((y - (1.0 - 0.37) / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn well_mixed_all_ecological_distinct_rho_nonexistent() {
        let p = ModelParams::well_mixed(vec![1.0; 3], vec![1.0; 3], vec![0.2, 0.5, 0.7]).unwrap();
        assert!(matches!(
            equilibrium_well_mixed(&p).unwrap().existence,
            Existence::NonExistent(_)
        ));
    }

    #[test]
    fn well_mixed_two_zero_social_agents_rejected_branch() {
        let p = ModelParams::well_mixed(vec![1.0; 3], vec![1.0, 1.0, 0.4], vec![0.2, 0.5, 0.7])
            .unwrap();
        assert!(matches!(
            equilibrium_well_mixed(&p).unwrap().existence,
            Existence::NonExistent(_)
        ));
    }

    #[test]
    fn well_mixed_closed_form_is_fixed_point_of_rhs() {
        let p = ModelParams::well_mixed(
            vec![0.8, 1.1, 0.6],
            vec![0.8, 0.5, 0.2],
            vec![0.3, 0.5, 0.7],
        )
        .unwrap();
        let rep = equilibrium_well_mixed(&p).unwrap();
        let eq = rep.equilibrium.as_ref().unwrap();
        let state = SystemState::new(eq.x_bar, eq.y_bar.clone()).unwrap();
        let (dx, dy) = crate::model::rhs(&p, &state);
        assert!(dx.abs() < 1e-12);
        assert!(dy.iter().all(|d| d.abs() < 1e-12), "dy = {dy:?}");
        assert_conserved(&rep);
    }

    #[test]
    fn well_mixed_single_zero_social_agent_pins_stock() {
        let p = ModelParams::well_mixed(
            vec![1.0, 1.0, 1.0],
            vec![1.0, 0.5, 0.3],
            vec![0.45, 0.2, 0.9],
        )
        .unwrap();
        let rep = equilibrium_well_mixed(&p).unwrap();
        let eq = rep.equilibrium.as_ref().unwrap();
        assert!((eq.x_bar - 0.45).abs() < 1e-12);
        let state = SystemState::new(eq.x_bar, eq.y_bar.clone()).unwrap();
        let (dx, dy) = crate::model::rhs(&p, &state);
        assert!(dx.abs() < 1e-12 && dy.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn star_all_social_has_two_isolated_equilibria() {
        let p = ModelParams::star(vec![1.0; 4], vec![0.0; 4], vec![0.3, 0.1, 0.2, 0.4]).unwrap();
        let rep = equilibrium_star(&p).unwrap();
        let eq = rep.equilibrium.as_ref().unwrap();
        assert_eq!(eq.x_bar, 1.0);
        assert!(eq.y_bar.iter().all(|y| *y == 0.0));
        assert_eq!(rep.alternates.len(), 1);
        assert_eq!(rep.alternates[0].x_bar, 0.0);
    }

    #[test]
    fn star_uniform_reduces_to_homogeneous() {
        let n = 4;
        let p = ModelParams::star(vec![1.0; n], vec![0.6; n], vec![0.25; n]).unwrap();
        let rep = equilibrium_star(&p).unwrap();
        let eq = rep.equilibrium.unwrap();
        assert!((eq.x_bar - 0.25).abs() < 1e-12, "x = {}", eq.x_bar);
        for y in &eq.y_bar {
            assert!((y - 0.75 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn star_closed_form_is_fixed_point_of_rhs() {
        let p = ModelParams::star(
            vec![0.9, 1.2, 0.7, 1.5],
            vec![0.35, 0.6, 0.15, 0.8],
            vec![0.55, 0.25, 0.65, 0.4],
        )
        .unwrap();
        let rep = equilibrium_star(&p).unwrap();
        let eq = rep.equilibrium.as_ref().unwrap();
        let state = SystemState::new(eq.x_bar, eq.y_bar.clone()).unwrap();
        let (dx, dy) = crate::model::rhs(&p, &state);
        assert!(dx.abs() < 1e-12, "dx = {dx}");
        assert!(dy.iter().all(|d| d.abs() < 1e-12), "dy = {dy:?}");
        assert_conserved(&rep);
    }

    #[test]
    fn star_reduces_to_dual_at_n_two() {
        let b = [0.8, 1.3];
        let al = [0.3, 0.7];
        let rh = [0.6, 0.2];
        let star = ModelParams::star(b.to_vec(), al.to_vec(), rh.to_vec()).unwrap();
        let dyad = ModelParams::dyad(b, al, rh).unwrap();
        let es = equilibrium_star(&star).unwrap().equilibrium.unwrap();
        let ed = equilibrium_dual(&dyad).unwrap().equilibrium.unwrap();
        assert!((es.x_bar - ed.x_bar).abs() < 1e-12);
        assert!((es.y_bar[0] - ed.y_bar[0]).abs() < 1e-12);
        assert!((es.y_bar[1] - ed.y_bar[1]).abs() < 1e-12);
    }

    #[test]
    fn statics_equal_rho_panel() {
        let p = ModelParams::dyad([1.0, 1.0], [0.7, 0.4], [0.3, 0.3]).unwrap();
        let cs = comparative_statics_dual(&p).unwrap();
        assert_eq!(cs.regime, RhoRegime::Equal);
        // x row: nu derivatives vanish, rho derivatives positive
        assert_eq!(cs.entries[0][0].sign, Sign::Zero);
        assert_eq!(cs.entries[0][1].sign, Sign::Zero);
        assert_eq!(cs.entries[0][2].sign, Sign::Plus);
        assert_eq!(cs.entries[0][3].sign, Sign::Plus);
    }

    #[test]
    fn statics_own_rho_always_lowers_own_effort() {
        for (r1, r2) in [(0.3, 0.3), (0.7, 0.2), (0.2, 0.7)] {
            let p = ModelParams::dyad([1.0, 1.0], [0.6, 0.45], [r1, r2]).unwrap();
            let cs = comparative_statics_dual(&p).unwrap();
            assert_eq!(cs.entries[1][2].sign, Sign::Minus, "y1/rho1 at ({r1},{r2})");
            assert_eq!(cs.entries[2][3].sign, Sign::Minus, "y2/rho2 at ({r1},{r2})");
            assert_eq!(cs.entries[1][2].regime_sign, RegimeSign::Minus);
            assert_eq!(cs.entries[2][3].regime_sign, RegimeSign::Minus);
        }
    }

    #[test]
    fn statics_rejects_degenerate_relevances() {
        let p = ModelParams::dyad([1.0, 1.0], [1.0, 0.4], [0.3, 0.4]).unwrap();
        assert!(comparative_statics_dual(&p).is_err());
    }

    #[test]
    fn classification_ignores_susceptibility_scale() {
        let base = ModelParams::dyad([1.0, 1.0], [0.1, 0.9], [0.9, 0.1]).unwrap();
        let scaled = ModelParams::dyad([17.0, 17.0], [0.1, 0.9], [0.9, 0.1]).unwrap();
        let a = equilibrium_dual(&base).unwrap();
        let b = equilibrium_dual(&scaled).unwrap();
        assert_eq!(a.classification, b.classification);
        let (ea, eb) = (a.equilibrium.unwrap(), b.equilibrium.unwrap());
        assert!((ea.x_bar - eb.x_bar).abs() < 1e-15);
    }

    #[test]
    fn report_serializes_with_source_tag() {
        let p = ModelParams::single(1.0, 0.5, 0.5).unwrap();
        let rep = equilibrium_single(&p).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("closed_form_1"));
        let back: EquilibriumReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.equilibrium.unwrap().x_bar.to_bits(), 0.5f64.to_bits());
    }
}
