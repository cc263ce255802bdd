//! Influence-network constructions over the consumer model: net-influence and
//! leadership diagnostics, recognition of the canonical (homogeneous,
//! semi-homogeneous, symmetric semi-homogeneous) populations, exact and
//! approximate aggregation into block models, and Laplacian spectra.

use crate::model::{ModelError, ModelParams, StepControl, SystemState};
use crate::ode::Dopri5;
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for the canonical-network classification. The
/// definitions are exact; measured data never is.
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("network is not symmetric semi-homogeneous for this partition: {0}")]
    NotAggregable(String),
    #[error("node {node} is not influence-neutral (net influence {influence:.3e})")]
    NotSelfDirected { node: usize, influence: f64 },
}

/// The effective influence graph: `gamma_ij = b_i * nu_i * w_ij` is the pull
/// that j exerts on i's consumption.
#[derive(Debug, Clone)]
pub struct InfluenceNetwork {
    gamma: DMatrix<f64>,
}

impl InfluenceNetwork {
    pub fn from_params(params: &ModelParams) -> Result<Self, NetworkError> {
        params.validate()?;
        let n = params.n_agents();
        let gamma = DMatrix::from_fn(n, n, |i, j| {
            params.susceptibility[i] * params.social_relevance[i] * params.weights[i][j]
        });
        Ok(Self { gamma })
    }

    /// Directly supplied influence weights (zero diagonal, nonnegative).
    pub fn from_weights(gamma: Vec<Vec<f64>>) -> Result<Self, NetworkError> {
        let n = gamma.len();
        if gamma.iter().any(|r| r.len() != n) {
            return Err(NetworkError::InvalidPartition(
                "influence matrix must be square".into(),
            ));
        }
        for (i, row) in gamma.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(NetworkError::InvalidPartition(format!(
                    "self-influence of node {i} must be zero"
                )));
            }
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(NetworkError::InvalidPartition(format!(
                    "row {i} holds a negative or non-finite weight"
                )));
            }
        }
        Ok(Self {
            gamma: DMatrix::from_fn(n, n, |i, j| gamma[i][j]),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[(i, j)]
    }

    /// In-degree of node i: total influence arriving at i.
    pub fn in_degree(&self, i: usize) -> f64 {
        self.gamma.row(i).sum()
    }

    /// `L = diag(d^-) - Gamma`, the consumption-dynamics coupling matrix.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut l = -self.gamma.clone();
        for i in 0..n {
            l[(i, i)] = self.in_degree(i);
        }
        l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    Leader,
    Follower,
    Neutral,
}

/// Out-influence minus in-influence per node. Leaders push more than they
/// receive; the values always sum to zero.
pub fn net_influence(params: &ModelParams) -> Result<Vec<f64>, NetworkError> {
    params.validate()?;
    let n = params.n_agents();
    let bv: Vec<f64> = (0..n)
        .map(|i| params.susceptibility[i] * params.social_relevance[i])
        .collect();
    Ok((0..n)
        .map(|i| {
            let out: f64 = (0..n).map(|j| params.weights[j][i] * bv[j]).sum();
            let inn: f64 = (0..n).map(|j| params.weights[i][j] * bv[i]).sum();
            out - inn
        })
        .collect())
}

pub fn node_roles(influence: &[f64], tol: f64) -> Vec<NodeRole> {
    let scale = influence.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    influence
        .iter()
        .map(|v| {
            if v.abs() <= tol * scale {
                NodeRole::Neutral
            } else if *v > 0.0 {
                NodeRole::Leader
            } else {
                NodeRole::Follower
            }
        })
        .collect()
}

/// Disjoint cover of the agent set by nonempty groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<Self, NetworkError> {
        if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
            return Err(NetworkError::InvalidPartition(
                "every group must be nonempty".into(),
            ));
        }
        let mut seen = vec![false; n];
        for g in &groups {
            for &i in g {
                if i >= n {
                    return Err(NetworkError::InvalidPartition(format!(
                        "index {i} out of range"
                    )));
                }
                if seen[i] {
                    return Err(NetworkError::InvalidPartition(format!(
                        "index {i} appears twice"
                    )));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|s| *s) {
            return Err(NetworkError::InvalidPartition(
                "groups must cover every agent".into(),
            ));
        }
        Ok(Self { groups })
    }

    pub fn single_group(n: usize) -> Self {
        Self {
            groups: vec![(0..n).collect()],
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub holds: bool,
    pub violation: Option<String>,
}

impl ClassVerdict {
    fn ok() -> Self {
        Self {
            holds: true,
            violation: None,
        }
    }
    fn fail(msg: impl Into<String>) -> Self {
        Self {
            holds: false,
            violation: Some(msg.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetworkClass {
    Homogeneous,
    SymmetricSemiHomogeneous,
    SemiHomogeneous,
    SelfDirected,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub self_directed: ClassVerdict,
    pub homogeneous: ClassVerdict,
    pub semi_homogeneous: ClassVerdict,
    pub symmetric_semi_homogeneous: ClassVerdict,
}

impl ClassificationReport {
    pub fn strongest(&self) -> Option<NetworkClass> {
        if self.homogeneous.holds {
            Some(NetworkClass::Homogeneous)
        } else if self.symmetric_semi_homogeneous.holds {
            Some(NetworkClass::SymmetricSemiHomogeneous)
        } else if self.semi_homogeneous.holds {
            Some(NetworkClass::SemiHomogeneous)
        } else if self.self_directed.holds {
            Some(NetworkClass::SelfDirected)
        } else {
            None
        }
    }
}

fn uniform_within(vals: &[f64], tol: f64) -> bool {
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let scale = lo.abs().max(hi.abs()).max(1.0);
    hi - lo <= tol * scale
}

/// Check the canonical-network definitions for a given partition, within a
/// relative tolerance.
pub fn classify_network(
    params: &ModelParams,
    partition: &Partition,
    tol: f64,
) -> Result<ClassificationReport, NetworkError> {
    params.validate()?;
    let n = params.n_agents();
    Partition::new(partition.groups.clone(), n)?;
    let influence = net_influence(params)?;
    let infl_scale = (0..n)
        .map(|i| params.susceptibility[i] * params.social_relevance[i])
        .fold(1.0f64, f64::max);

    let self_directed = match influence
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() > tol * infl_scale)
    {
        None => ClassVerdict::ok(),
        Some((i, v)) => ClassVerdict::fail(format!(
            "leaders/followers present: node {i} has net influence {v:.3e}"
        )),
    };

    let ba: Vec<f64> = (0..n)
        .map(|i| params.susceptibility[i] * params.ecological_relevance[i])
        .collect();
    let bv: Vec<f64> = (0..n)
        .map(|i| params.susceptibility[i] * params.social_relevance[i])
        .collect();
    let rho = &params.environmentalism;

    let homogeneous = if !uniform_within(&ba, tol) {
        ClassVerdict::fail("ecological responsiveness b*alpha differs across agents")
    } else if !uniform_within(&bv, tol) {
        ClassVerdict::fail("social responsiveness b*nu differs across agents")
    } else if !uniform_within(rho, tol) {
        ClassVerdict::fail("environmentalism differs across agents")
    } else if !self_directed.holds {
        ClassVerdict::fail(
            self_directed
                .violation
                .clone()
                .unwrap_or_else(|| "leaders/followers present".into()),
        )
    } else {
        ClassVerdict::ok()
    };

    // per-group homogeneity plus cross-group influence uniformity
    let mut semi = ClassVerdict::ok();
    'outer: for (k, group) in partition.groups.iter().enumerate() {
        let g_ba: Vec<f64> = group.iter().map(|&i| ba[i]).collect();
        let g_bv: Vec<f64> = group.iter().map(|&i| bv[i]).collect();
        let g_rho: Vec<f64> = group.iter().map(|&i| rho[i]).collect();
        if !uniform_within(&g_ba, tol) {
            semi = ClassVerdict::fail(format!("group {k}: b*alpha not uniform"));
            break;
        }
        if !uniform_within(&g_bv, tol) {
            semi = ClassVerdict::fail(format!("group {k}: b*nu not uniform"));
            break;
        }
        if !uniform_within(&g_rho, tol) {
            semi = ClassVerdict::fail(format!("group {k}: environmentalism not uniform"));
            break;
        }
        for &i in group {
            let within: f64 = group
                .iter()
                .map(|&j| params.weights[j][i] * bv[j] - params.weights[i][j] * bv[i])
                .sum();
            if within.abs() > tol * infl_scale {
                semi = ClassVerdict::fail(format!(
                    "group {k}: leaders/followers present within the group (node {i})"
                ));
                break 'outer;
            }
        }
    }
    let m = partition.groups.len();
    let mut delta_in = vec![vec![0.0; m]; m];
    let mut delta_out = vec![vec![0.0; m]; m];
    if semi.holds {
        'pairs: for s in 0..m {
            for r in 0..m {
                if s == r {
                    continue;
                }
                // in-influence on each member of s from group r
                let sums: Vec<f64> = partition.groups[s]
                    .iter()
                    .map(|&i| {
                        partition.groups[r]
                            .iter()
                            .map(|&j| params.weights[i][j])
                            .sum()
                    })
                    .collect();
                if !uniform_within(&sums, tol) {
                    semi = ClassVerdict::fail(format!(
                        "incoming weight from group {r} is not uniform across group {s}"
                    ));
                    break 'pairs;
                }
                delta_in[s][r] = sums[0];
                // out-influence of group s collected at each member of r
                let sums: Vec<f64> = partition.groups[r]
                    .iter()
                    .map(|&j| {
                        partition.groups[s]
                            .iter()
                            .map(|&i| params.weights[i][j])
                            .sum()
                    })
                    .collect();
                if !uniform_within(&sums, tol) {
                    semi = ClassVerdict::fail(format!(
                        "weight into group {s} is not uniformly sourced across group {r}"
                    ));
                    break 'pairs;
                }
                delta_out[s][r] = sums[0];
            }
        }
    }

    let symmetric = if !semi.holds {
        ClassVerdict::fail("not semi-homogeneous".to_string())
    } else {
        let mut v = ClassVerdict::ok();
        'sym: for s in 0..m {
            for r in 0..m {
                if s != r && (delta_in[s][r] - delta_out[s][r]).abs() > tol {
                    v = ClassVerdict::fail(format!(
                        "group pair ({s},{r}): incoming weight {} differs from outgoing weight {}",
                        delta_in[s][r], delta_out[s][r]
                    ));
                    break 'sym;
                }
            }
        }
        v
    };

    Ok(ClassificationReport {
        self_directed,
        homogeneous,
        semi_homogeneous: semi,
        symmetric_semi_homogeneous: symmetric,
    })
}

/// Block model of a symmetric semi-homogeneous population. Group k of size
/// `sizes[k]` carries susceptibility `b[k]`, relevances `a[k]` / `v[k]`,
/// environmentalism `p[k]`, and lumped ties `w[s][r]` with a nonzero
/// self-weight allowed (bonding capital).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockModelParams {
    pub sizes: Vec<usize>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

impl BlockModelParams {
    pub fn m_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let m = self.m_groups();
        if self.b.len() != m
            || self.a.len() != m
            || self.v.len() != m
            || self.p.len() != m
            || self.w.len() != m
        {
            return Err(NetworkError::InvalidPartition(
                "block-model field lengths differ".into(),
            ));
        }
        for s in 0..m {
            if self.w[s].len() != m {
                return Err(NetworkError::InvalidPartition(
                    "lumped weight matrix must be m x m".into(),
                ));
            }
            let sum: f64 = self.w[s].iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(NetworkError::InvalidPartition(format!(
                    "lumped weight row {s} sums to {sum}"
                )));
            }
            if self.w[s].iter().any(|v| *v < -1e-12) {
                return Err(NetworkError::InvalidPartition(format!(
                    "lumped weight row {s} has a negative entry"
                )));
            }
            if (self.a[s] + self.v[s] - 1.0).abs() > 1e-9 {
                return Err(NetworkError::InvalidPartition(format!(
                    "group {s}: relevances do not sum to 1"
                )));
            }
        }
        Ok(())
    }

    /// Aggregate dynamics: group totals `Y_k` against the shared stock.
    pub fn rhs(&self, x: f64, y: &[f64]) -> (f64, Vec<f64>) {
        let m = self.m_groups();
        let total: f64 = y.iter().sum();
        let dx = (1.0 - x) * x - x * total;
        let dy = (0..m)
            .map(|k| {
                let social: f64 = (0..m).map(|j| self.w[k][j] * (y[k] - y[j])).sum();
                self.sizes[k] as f64 * self.b[k] * self.a[k] * (x - self.p[k])
                    - self.b[k] * self.v[k] * social
            })
            .collect();
        (dx, dy)
    }

    /// Integrate the block model, sampling at the given times.
    pub fn integrate_sampled(
        &self,
        x0: f64,
        y0: &[f64],
        samples: &[f64],
        ctrl: StepControl,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), NetworkError> {
        self.validate()?;
        let mut state = Vec::with_capacity(1 + y0.len());
        state.push(x0);
        state.extend_from_slice(y0);
        let f = |_t: f64, s: &[f64], ds: &mut [f64]| {
            let (dx, dy) = self.rhs(s[0], &s[1..]);
            ds[0] = dx;
            ds[1..].copy_from_slice(&dy);
        };
        let solver = Dopri5 {
            atol: ctrl.atol,
            rtol: ctrl.rtol,
            ..Dopri5::default()
        };
        let sol = solver
            .solve_sampled(&f, 0.0, &state, samples)
            .map_err(|e| {
                NetworkError::Model(ModelError::InvalidParams(format!(
                    "block-model integration failed: {e}"
                )))
            })?;
        Ok((sol.times, sol.states))
    }
}

/// Exact aggregation of a symmetric semi-homogeneous population into its
/// block model. Fails with the first violated condition otherwise.
pub fn aggregate_exact(
    params: &ModelParams,
    partition: &Partition,
) -> Result<BlockModelParams, NetworkError> {
    let report = classify_network(params, partition, CLASSIFY_TOL)?;
    if !report.symmetric_semi_homogeneous.holds {
        let why = report
            .symmetric_semi_homogeneous
            .violation
            .or(report.semi_homogeneous.violation)
            .unwrap_or_else(|| "unknown violation".into());
        return Err(NetworkError::NotAggregable(why));
    }
    let m = partition.groups.len();
    let mut sizes = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    let mut a = Vec::with_capacity(m);
    let mut v = Vec::with_capacity(m);
    let mut p = Vec::with_capacity(m);
    for group in partition.groups.iter() {
        let i = group[0];
        let ba = params.susceptibility[i] * params.ecological_relevance[i];
        let bv = params.susceptibility[i] * params.social_relevance[i];
        let bk = ba + bv;
        sizes.push(group.len());
        b.push(bk);
        a.push(ba / bk);
        v.push(bv / bk);
        p.push(params.environmentalism[i]);
    }
    let mut w = vec![vec![0.0; m]; m];
    for s in 0..m {
        let mut off = 0.0;
        for r in 0..m {
            if s == r {
                continue;
            }
            let i = partition.groups[s][0];
            let wsr: f64 = partition.groups[r]
                .iter()
                .map(|&j| params.weights[i][j])
                .sum();
            w[s][r] = wsr;
            off += wsr;
        }
        w[s][s] = 1.0 - off; // bonding capital
    }
    let block = BlockModelParams {
        sizes,
        b,
        a,
        v,
        p,
        w,
    };
    block.validate()?;
    Ok(block)
}

/// Lumped 2-D surrogate for a self-directed population: the mean ecological
/// responsiveness and the responsiveness-weighted environmentalism.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LumpedParams {
    pub n: usize,
    /// product of lumped susceptibility and ecological relevance
    pub ba_hat: f64,
    /// lumped environmentalism; equals the steady-state stock
    pub p_hat: f64,
}

impl LumpedParams {
    pub fn rhs(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (1.0 - x) * x - x * y,
            self.n as f64 * self.ba_hat * (x - self.p_hat),
        )
    }

    pub fn integrate_sampled(
        &self,
        x0: f64,
        y0: f64,
        samples: &[f64],
        ctrl: StepControl,
    ) -> Result<(Vec<f64>, Vec<[f64; 2]>), NetworkError> {
        let f = |_t: f64, s: &[f64], ds: &mut [f64]| {
            let (dx, dy) = self.rhs(s[0], s[1]);
            ds[0] = dx;
            ds[1] = dy;
        };
        let solver = Dopri5 {
            atol: ctrl.atol,
            rtol: ctrl.rtol,
            ..Dopri5::default()
        };
        let sol = solver
            .solve_sampled(&f, 0.0, &[x0, y0], samples)
            .map_err(|e| {
                NetworkError::Model(ModelError::InvalidParams(format!(
                    "lumped integration failed: {e}"
                )))
            })?;
        Ok((
            sol.times,
            sol.states.into_iter().map(|s| [s[0], s[1]]).collect(),
        ))
    }
}

/// Steady-state-exact parameter choice for a self-directed population:
/// `ba_hat` is the mean of `b_i alpha_i` and `p_hat` the convex combination of
/// the individual environmentalisms weighted by `b_i alpha_i`.
pub fn aggregate_self_directed(params: &ModelParams) -> Result<LumpedParams, NetworkError> {
    params.validate()?;
    let influence = net_influence(params)?;
    let scale = (0..params.n_agents())
        .map(|i| params.susceptibility[i] * params.social_relevance[i])
        .fold(1.0f64, f64::max);
    if let Some((i, v)) = influence
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() > CLASSIFY_TOL * scale)
    {
        return Err(NetworkError::NotSelfDirected {
            node: i,
            influence: *v,
        });
    }
    let n = params.n_agents();
    let ba: Vec<f64> = (0..n)
        .map(|i| params.susceptibility[i] * params.ecological_relevance[i])
        .collect();
    let total: f64 = ba.iter().sum();
    if total <= 0.0 {
        return Err(NetworkError::InvalidPartition(
            "aggregation needs at least one ecologically responsive agent".into(),
        ));
    }
    let ba_hat = total / n as f64;
    let p_hat = ba
        .iter()
        .zip(&params.environmentalism)
        .map(|(w, r)| w * r)
        .sum::<f64>()
        / total;
    Ok(LumpedParams { n, ba_hat, p_hat })
}

/// Errors of an approximate 2-D aggregation against the true aggregate, over
/// time and at steady state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproximationReport {
    pub times: Vec<f64>,
    pub e_x: Vec<f64>,
    pub e_y: Vec<f64>,
    pub sup_e_x: f64,
    pub sup_e_y: f64,
    pub steady_e_x: f64,
    pub steady_e_y: f64,
}

/// Co-integrate the full model's aggregate and a guessed 2-D surrogate with
/// parameters `(ba_tilde, p_tilde)` from matched initial conditions.
pub fn aggregate_approximate(
    params: &ModelParams,
    init: &SystemState,
    ba_tilde: f64,
    p_tilde: f64,
    samples: &[f64],
    ctrl: StepControl,
) -> Result<ApproximationReport, NetworkError> {
    if !(ba_tilde.is_finite() && p_tilde.is_finite()) {
        return Err(NetworkError::InvalidPartition(
            "surrogate parameters must be finite".into(),
        ));
    }
    // the steady-state guarantee holds for self-directed populations only
    let influence = net_influence(params)?;
    let scale = (0..params.n_agents())
        .map(|i| params.susceptibility[i] * params.social_relevance[i])
        .fold(1.0f64, f64::max);
    if let Some((i, v)) = influence
        .iter()
        .enumerate()
        .find(|(_, v)| v.abs() > CLASSIFY_TOL * scale)
    {
        return Err(NetworkError::NotSelfDirected {
            node: i,
            influence: *v,
        });
    }

    let full = crate::model::integrate_sampled(params, init, samples, ctrl)?;
    let surrogate = LumpedParams {
        n: params.n_agents(),
        ba_hat: ba_tilde,
        p_hat: p_tilde,
    };
    let y0: f64 = init.y.iter().sum();
    let (_, approx) = surrogate.integrate_sampled(init.x, y0, samples, ctrl)?;

    let mut e_x = Vec::with_capacity(samples.len());
    let mut e_y = Vec::with_capacity(samples.len());
    for (s, a) in full.states.iter().zip(&approx) {
        e_x.push(s.x - a[0]);
        e_y.push(s.y.iter().sum::<f64>() - a[1]);
    }
    let sup_e_x = e_x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup_e_y = e_y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ApproximationReport {
        times: full.times,
        steady_e_x: *e_x.last().unwrap(),
        steady_e_y: *e_y.last().unwrap(),
        e_x,
        e_y,
        sup_e_x,
        sup_e_y,
    })
}

// ---------------------------------------------------------------------------
// Laplacian spectrum
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// eigenvalues of the coupling matrix, sorted by real part then imaginary
    pub eigenvalues: Vec<(f64, f64)>,
    /// filled when every eigenvalue is real within tolerance
    pub real_eigenvalues: Option<Vec<f64>>,
    pub zero_multiplicity: usize,
    /// connected components of the symmetrized support graph
    pub component_count: usize,
    /// second-smallest eigenvalue (by real part)
    pub algebraic_connectivity: f64,
    pub symmetric: bool,
}

pub fn laplacian_spectrum(net: &InfluenceNetwork) -> SpectrumReport {
    let l = net.laplacian();
    let n = net.n_nodes();
    let symmetric = {
        let mut sym = true;
        'chk: for i in 0..n {
            for j in (i + 1)..n {
                let scale = l[(i, j)].abs().max(l[(j, i)].abs()).max(1.0);
                if (l[(i, j)] - l[(j, i)]).abs() > 1e-12 * scale {
                    sym = false;
                    break 'chk;
                }
            }
        }
        sym
    };

    let eig: Vec<Complex<f64>> = if symmetric {
        l.symmetric_eigenvalues()
            .iter()
            .map(|v| Complex::new(*v, 0.0))
            .collect()
    } else {
        l.complex_eigenvalues().iter().copied().collect()
    };
    let mut pairs: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));

    let magnitude_scale = pairs
        .iter()
        .fold(1.0f64, |m, (re, im)| m.max(re.hypot(*im)));
    let all_real = pairs
        .iter()
        .all(|(_, im)| im.abs() <= 1e-9 * magnitude_scale);
    let real_eigenvalues = all_real.then(|| pairs.iter().map(|(re, _)| *re).collect::<Vec<f64>>());
    let zero_multiplicity = pairs
        .iter()
        .filter(|(re, im)| re.hypot(*im) <= 1e-9 * magnitude_scale)
        .count();

    // union-find over the symmetrized support
    let mut dsu: Vec<usize> = (0..n).collect();
    fn find(dsu: &mut Vec<usize>, i: usize) -> usize {
        if dsu[i] != i {
            let root = find(dsu, dsu[i]);
            dsu[i] = root;
        }
        dsu[i]
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && (net.gamma(i, j) > 0.0 || net.gamma(j, i) > 0.0) {
                let (a, b) = (find(&mut dsu, i), find(&mut dsu, j));
                if a != b {
                    dsu[a] = b;
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).map(|i| find(&mut dsu, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    let component_count = roots.len();

    let algebraic_connectivity = if n >= 2 { pairs[1].0 } else { 0.0 };
    SpectrumReport {
        eigenvalues: pairs,
        real_eigenvalues,
        zero_multiplicity,
        component_count,
        algebraic_connectivity,
        symmetric,
    }
}

// ---------------------------------------------------------------------------
// JSON interchange format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkNode {
    pub b: f64,
    pub alpha: f64,
    pub nu: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkEdge {
    pub from: usize,
    pub to: usize,
    pub w: f64,
}

/// On-disk network description: nodes with psychological parameters plus a
/// weighted edge list (`w` is the weight agent `from` places on agent `to`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<NetworkEdge>,
}

impl NetworkFile {
    pub fn to_params(&self) -> Result<ModelParams, ModelError> {
        let n = self.nodes.len();
        let mut weights = vec![vec![0.0; n]; n];
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                return Err(ModelError::InvalidParams(format!(
                    "edge ({}, {}) references a missing node",
                    e.from, e.to
                )));
            }
            weights[e.from][e.to] = e.w;
        }
        let p = ModelParams {
            susceptibility: self.nodes.iter().map(|v| v.b).collect(),
            ecological_relevance: self.nodes.iter().map(|v| v.alpha).collect(),
            social_relevance: self.nodes.iter().map(|v| v.nu).collect(),
            environmentalism: self.nodes.iter().map(|v| v.rho).collect(),
            weights,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_params(params: &ModelParams) -> Self {
        let n = params.n_agents();
        let nodes = (0..n)
            .map(|i| NetworkNode {
                b: params.susceptibility[i],
                alpha: params.ecological_relevance[i],
                nu: params.social_relevance[i],
                rho: params.environmentalism[i],
            })
            .collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if params.weights[i][j] != 0.0 {
                    edges.push(NetworkEdge {
                        from: i,
                        to: j,
                        w: params.weights[i][j],
                    });
                }
            }
        }
        Self { nodes, edges }
    }
}
