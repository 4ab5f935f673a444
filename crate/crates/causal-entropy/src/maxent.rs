//! Entropy maximization under linear expectation constraints.
//!
//! The maximizer has exponential-family form `p(x) ∝ exp(-Σ_j λ_j f_j(x))`;
//! we find the multipliers by minimizing the convex dual
//! `λ ↦ log Z(λ) + Σ_j λ_j c_j` with damped Newton steps and a backtracking
//! line search, falling back to gradient steps when the Hessian (the feature
//! covariance) is near-singular. Support restrictions coming from relations
//! are handled structurally, by restricting the domain before dual
//! optimization, so they never show up as infinite multipliers.
//!
//! The conditional variant maximizes `Σ_x p(x) H(q(·|x))` for a fixed cause
//! marginal `p`; the solution has the same per-row exponential form with
//! multipliers shared across rows.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dist::{ConditionalTable, FiniteDomain, LinearConstraint, ProbTable};
use crate::error::{Error, Result};
use crate::opt::{minimize_violation, IntervalConstraint};

/// Gradient-norm tolerance for the dual solver.
pub const DUAL_GRADIENT_TOL: f64 = 1e-10;
/// Iteration cap for the dual solver.
pub const DUAL_MAX_ITERS: usize = 500;
/// Squared-residual threshold below which a constraint set counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-16;
/// Condition-number estimate above which Newton falls back to gradient steps.
const HESSIAN_CONDITION_CAP: f64 = 1e12;
/// Rank tolerance for dropping linearly dependent constraints.
const RANK_TOL: f64 = 1e-10;

/// Termination state of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Infeasible,
}

/// Outcome of the feasibility phase: a witness distribution when the
/// constraint set intersects the simplex, the minimal squared hinge residual
/// otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub witness: Option<ProbTable>,
    pub min_squared_residual: f64,
}

/// Fitted distribution plus solver diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct MaxEntSolution {
    /// The entropy maximizer (or, when infeasible, the residual-minimizing
    /// distribution from the feasibility phase).
    pub distribution: ProbTable,
    /// One multiplier per input constraint; structurally handled or dropped
    /// (linearly dependent) constraints carry 0.
    pub multipliers: Vec<f64>,
    /// `log Z` of the exponential-family solution.
    pub log_partition: f64,
    pub dual_objective: f64,
    /// `|E[f_j] - c_j|` of the returned distribution, per input constraint.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub status: SolveStatus,
    pub feasibility: FeasibilityReport,
}

/// Conditional fit: row-stochastic table plus the shared multipliers.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalMaxEntSolution {
    pub conditional: ConditionalTable,
    pub multipliers: Vec<f64>,
    pub residuals: Vec<f64>,
    pub dual_objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

// ---------------------------------------------------------------------------
// Dual solver over weighted blocks
// ---------------------------------------------------------------------------

/// One block of the dual problem: a weighted simplex with a feature value per
/// cell and constraint. Classical maximization is a single block of weight 1;
/// the conditional variant has one block per cause value (or parent
/// configuration), weighted by its marginal probability.
struct Block {
    weight: f64,
    /// Number of cells (needed explicitly: the feature list may be empty).
    cells: usize,
    /// features[j][cell]
    features: Vec<Vec<f64>>,
}

struct DualOutcome {
    lambda: Vec<f64>,
    /// Per block: normalized cell probabilities.
    block_probs: Vec<Vec<f64>>,
    /// Per block: log partition value.
    log_partitions: Vec<f64>,
    dual_objective: f64,
    iterations: usize,
    converged: bool,
}

fn block_state(block: &Block, lambda: &[f64]) -> (Vec<f64>, f64) {
    let cells = block.cells;
    if lambda.is_empty() || cells == 0 {
        // no active constraints: the maximizer over the block is uniform
        let n = cells.max(1);
        return (vec![1.0 / n as f64; cells], (n as f64).ln());
    }
    let mut energies = vec![0.0; cells];
    for (lj, fj) in lambda.iter().zip(&block.features) {
        for (e, v) in energies.iter_mut().zip(fj) {
            *e -= lj * v;
        }
    }
    let m = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = energies.iter().map(|e| (e - m).exp()).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    (probs, z.ln() + m)
}

fn dual_value(blocks: &[Block], lambda: &[f64], targets: &[f64]) -> f64 {
    let mut v: f64 = lambda.iter().zip(targets).map(|(l, c)| l * c).sum();
    for b in blocks {
        if b.weight > 0.0 {
            let (_, logz) = block_state(b, lambda);
            v += b.weight * logz;
        }
    }
    v
}

fn dual_newton(blocks: &[Block], targets: &[f64]) -> DualOutcome {
    let m = targets.len();
    let mut lambda = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = m == 0;
    while !converged && iterations < DUAL_MAX_ITERS {
        iterations += 1;
        // expectations and covariance, weighted over blocks
        let mut expect = vec![0.0; m];
        let mut second = DMatrix::zeros(m, m);
        for b in blocks {
            if b.weight == 0.0 {
                continue;
            }
            let (probs, _) = block_state(b, &lambda);
            let mut e = vec![0.0; m];
            for (j, fj) in b.features.iter().enumerate() {
                e[j] = probs.iter().zip(fj).map(|(p, v)| p * v).sum();
            }
            for j in 0..m {
                expect[j] += b.weight * e[j];
                for k in 0..m {
                    let cross: f64 = probs
                        .iter()
                        .zip(b.features[j].iter().zip(&b.features[k]))
                        .map(|(p, (a, c))| p * a * c)
                        .sum();
                    second[(j, k)] += b.weight * (cross - e[j] * e[k]);
                }
            }
        }
        let grad: Vec<f64> = targets.iter().zip(&expect).map(|(c, e)| c - e).collect();
        let gnorm = grad.iter().fold(0.0_f64, |acc, g| acc.max(g.abs()));
        if gnorm <= DUAL_GRADIENT_TOL {
            converged = true;
            break;
        }
        let gvec = DVector::from_column_slice(&grad);
        let svd = second.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let direction = if smin > 0.0 && smax / smin < HESSIAN_CONDITION_CAP {
            svd.solve(&gvec, 1e-14).unwrap_or_else(|_| gvec.clone())
        } else {
            gvec.clone()
        };
        let slope: f64 = grad.iter().zip(direction.iter()).map(|(g, d)| g * d).sum();
        let direction = if slope > 0.0 { direction } else { gvec.clone() };
        let slope = if slope > 0.0 {
            slope
        } else {
            grad.iter().map(|g| g * g).sum()
        };
        let current = dual_value(blocks, &lambda, targets);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = lambda
                .iter()
                .zip(direction.iter())
                .map(|(l, d)| l - t * d)
                .collect();
            if dual_value(blocks, &trial, targets) <= current - 1e-4 * t * slope {
                lambda = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-14 {
                lambda = trial;
                break;
            }
        }
    }
    let mut block_probs = Vec::with_capacity(blocks.len());
    let mut log_partitions = Vec::with_capacity(blocks.len());
    for b in blocks {
        let (p, logz) = block_state(b, &lambda);
        block_probs.push(p);
        log_partitions.push(logz);
    }
    let dual_objective = dual_value(blocks, &lambda, targets);
    DualOutcome {
        lambda,
        block_probs,
        log_partitions,
        dual_objective,
        iterations,
        converged,
    }
}

// ---------------------------------------------------------------------------
// Constraint preprocessing
// ---------------------------------------------------------------------------

fn check_domains(domain: &FiniteDomain, constraints: &[LinearConstraint]) -> Result<()> {
    for c in constraints {
        if c.domain() != domain {
            return Err(Error::Invalid("constraint domain mismatch".into()));
        }
    }
    Ok(())
}

/// Intersect the allowed supports of all pure support restrictions; `None`
/// means the full domain.
fn structural_support(domain: &FiniteDomain, constraints: &[LinearConstraint]) -> Vec<usize> {
    let mut allowed = vec![true; domain.size()];
    for c in constraints {
        if c.is_support_restriction() {
            let ok = c.allowed_support();
            let mut mask = vec![false; domain.size()];
            for i in ok {
                mask[i] = true;
            }
            for (a, m) in allowed.iter_mut().zip(mask) {
                *a &= m;
            }
        }
    }
    (0..domain.size()).filter(|&i| allowed[i]).collect()
}

/// Greedy rank filter: indices of constraints whose feature rows (restricted
/// to the support, modulo constants) are linearly independent.
fn independent_rows(features: &[Vec<f64>]) -> Vec<usize> {
    let n = features.first().map_or(0, |f| f.len());
    if n == 0 {
        return Vec::new();
    }
    // start the basis with the constant vector: constants shift targets, they
    // do not constrain anything on the simplex
    let ones = vec![1.0 / (n as f64).sqrt(); n];
    let mut basis: Vec<Vec<f64>> = vec![ones];
    let mut kept = Vec::new();
    for (idx, f) in features.iter().enumerate() {
        let mut v = f.clone();
        let scale = v.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1.0);
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > RANK_TOL * scale {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push(v);
            kept.push(idx);
        }
    }
    kept
}

/// Resolve the targets for the dual phase: with relaxed constraints the dual
/// solves exact equalities at the nearest feasible point of each interval.
fn resolve_targets(
    intervals: &[(Vec<f64>, f64, f64)], // (coeffs over blocks, target, eps)
    block_lens: &[usize],
) -> Vec<f64> {
    let any_relaxed = intervals.iter().any(|(_, _, eps)| *eps > 0.0);
    if !any_relaxed {
        return intervals.iter().map(|(_, c, _)| *c).collect();
    }
    let tight: Vec<IntervalConstraint> = intervals
        .iter()
        .map(|(coeffs, c, _)| IntervalConstraint {
            coeffs: coeffs.clone(),
            lo: *c,
            hi: *c,
        })
        .collect();
    let (x, _) = minimize_violation(&tight, block_lens, None, 50_000);
    intervals
        .iter()
        .map(|(coeffs, c, eps)| {
            let v: f64 = coeffs.iter().zip(&x).map(|(a, b)| a * b).sum();
            v.clamp(c - eps, c + eps)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Test whether any distribution on the domain satisfies all constraints
/// (each within its own epsilon), by minimizing the squared hinge residual
/// over the simplex.
pub fn feasibility(
    domain: &FiniteDomain,
    constraints: &[LinearConstraint],
) -> Result<FeasibilityReport> {
    check_domains(domain, constraints)?;
    let intervals: Vec<IntervalConstraint> = constraints
        .iter()
        .map(|c| IntervalConstraint {
            coeffs: c.values().to_vec(),
            lo: c.target() - c.epsilon(),
            hi: c.target() + c.epsilon(),
        })
        .collect();
    let (x, fval) = minimize_violation(&intervals, &[domain.size()], None, 50_000);
    let feasible = fval <= FEASIBILITY_TOL;
    let witness = if feasible {
        let sum: f64 = x.iter().sum();
        let w: Vec<f64> = x.iter().map(|v| v / sum).collect();
        Some(ProbTable::from_float(domain.clone(), w)?)
    } else {
        None
    };
    Ok(FeasibilityReport {
        feasible,
        witness,
        min_squared_residual: fval,
    })
}

/// The unique entropy maximizer subject to the constraints, when feasible.
pub fn maxent(domain: &FiniteDomain, constraints: &[LinearConstraint]) -> Result<MaxEntSolution> {
    check_domains(domain, constraints)?;
    let support = structural_support(domain, constraints);
    let report = feasibility(domain, constraints)?;
    if support.is_empty() || !report.feasible {
        let distribution = report
            .witness
            .clone()
            .unwrap_or_else(|| ProbTable::uniform(domain.clone()).to_float());
        let residuals = constraints.iter().map(|c| c.residual(&distribution)).collect();
        return Ok(MaxEntSolution {
            distribution,
            multipliers: vec![0.0; constraints.len()],
            log_partition: 0.0,
            dual_objective: 0.0,
            residuals,
            iterations: 0,
            status: SolveStatus::Infeasible,
            feasibility: report,
        });
    }

    let expectation_idx: Vec<usize> = (0..constraints.len())
        .filter(|&j| !constraints[j].is_support_restriction())
        .collect();
    let restricted: Vec<Vec<f64>> = expectation_idx
        .iter()
        .map(|&j| support.iter().map(|&i| constraints[j].values()[i]).collect())
        .collect();
    let kept_local = independent_rows(&restricted);
    let kept: Vec<usize> = kept_local.iter().map(|&k| expectation_idx[k]).collect();

    let intervals: Vec<(Vec<f64>, f64, f64)> = kept
        .iter()
        .map(|&j| {
            (
                support.iter().map(|&i| constraints[j].values()[i]).collect(),
                constraints[j].target(),
                constraints[j].epsilon(),
            )
        })
        .collect();
    let targets = resolve_targets(&intervals, &[support.len()]);

    let block = Block {
        weight: 1.0,
        cells: support.len(),
        features: intervals.iter().map(|(f, _, _)| f.clone()).collect(),
    };
    let outcome = dual_newton(&[block], &targets);

    let mut weights = vec![0.0; domain.size()];
    for (&cell, &p) in support.iter().zip(&outcome.block_probs[0]) {
        weights[cell] = p;
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    let distribution = ProbTable::from_float(domain.clone(), weights)?;

    let mut multipliers = vec![0.0; constraints.len()];
    for (&j, &l) in kept.iter().zip(&outcome.lambda) {
        multipliers[j] = l;
    }
    let residuals = constraints.iter().map(|c| c.residual(&distribution)).collect();
    Ok(MaxEntSolution {
        distribution,
        multipliers,
        log_partition: outcome.log_partitions[0],
        dual_objective: outcome.dual_objective,
        residuals,
        iterations: outcome.iterations,
        status: if outcome.converged {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIters
        },
        feasibility: report,
    })
}

/// Maximize `Σ_x p(x) H(q(·|x))` over row-stochastic `q`, subject to joint
/// expectation constraints, for a fixed cause marginal `p`.
///
/// `row_groups`, when given, assigns each cause point a group id; rows in the
/// same group share a single distribution (used for parent-restricted
/// conditionals in DAG fitting). Rows with `p(x) = 0` are set uniform over
/// their structural support.
pub fn conditional_maxent(
    joint_domain: &FiniteDomain,
    constraints: &[LinearConstraint],
    cause_marginal: &ProbTable,
    row_groups: Option<&[usize]>,
) -> Result<ConditionalMaxEntSolution> {
    check_domains(joint_domain, constraints)?;
    let cause_names: Vec<&str> = cause_marginal
        .domain()
        .variables()
        .iter()
        .map(|v| v.name.as_str())
        .collect();
    let cause_idx = joint_domain.var_indices(&cause_names)?;
    let target_idx: Vec<usize> = (0..joint_domain.num_variables())
        .filter(|i| !cause_idx.contains(i))
        .collect();
    if target_idx.is_empty() {
        return Err(Error::Invalid("no effect variables left".into()));
    }
    let given = joint_domain.subdomain(&cause_idx)?;
    let target = joint_domain.subdomain(&target_idx)?;
    if &given != cause_marginal.domain() {
        return Err(Error::Invalid("cause marginal domain mismatch".into()));
    }
    let n_rows = given.size();
    let n_cols = target.size();
    let groups: Vec<usize> = match row_groups {
        Some(g) => {
            if g.len() != n_rows {
                return Err(Error::Invalid("row group length mismatch".into()));
            }
            g.to_vec()
        }
        None => (0..n_rows).collect(),
    };
    let n_groups = groups.iter().copied().max().map_or(0, |m| m + 1);

    // joint cell index per (row, col)
    let cell = |g: usize, t: usize| -> usize {
        let gp = given.point(g);
        let tp = target.point(t);
        let mut full = vec![0; joint_domain.num_variables()];
        for (k, &vi) in cause_idx.iter().enumerate() {
            full[vi] = gp[k];
        }
        for (k, &vi) in target_idx.iter().enumerate() {
            full[vi] = tp[k];
        }
        joint_domain.index_of(&full)
    };

    let support_mask = {
        let s = structural_support(joint_domain, constraints);
        let mut m = vec![false; joint_domain.size()];
        for i in s {
            m[i] = true;
        }
        m
    };

    // group weights and supports (a group's support is the intersection over
    // its positive-weight rows)
    let mut group_weight = vec![0.0; n_groups];
    let mut group_support: Vec<Vec<bool>> = vec![vec![true; n_cols]; n_groups];
    for g in 0..n_rows {
        let w = cause_marginal.prob(g);
        let grp = groups[g];
        group_weight[grp] += w;
        if w > 0.0 {
            for t in 0..n_cols {
                group_support[grp][t] &= support_mask[cell(g, t)];
            }
        }
    }
    let group_cells: Vec<Vec<usize>> = group_support
        .iter()
        .map(|s| (0..n_cols).filter(|&t| s[t]).collect())
        .collect();
    for grp in 0..n_groups {
        if group_weight[grp] > 0.0 && group_cells[grp].is_empty() {
            return Ok(infeasible_conditional(
                given,
                target,
                constraints,
                cause_marginal,
            ));
        }
    }

    // aggregated features per group: fbar(grp, t) = sum_{rows in grp} w_g f(g,t)
    let expectation_idx: Vec<usize> = (0..constraints.len())
        .filter(|&j| !constraints[j].is_support_restriction())
        .collect();
    let mut agg: Vec<Vec<Vec<f64>>> =
        vec![vec![vec![0.0; n_cols]; n_groups]; expectation_idx.len()];
    for (jj, &j) in expectation_idx.iter().enumerate() {
        let f = constraints[j].values();
        for g in 0..n_rows {
            let w = cause_marginal.prob(g);
            if w > 0.0 {
                let grp = groups[g];
                for t in 0..n_cols {
                    agg[jj][grp][t] += w * f[cell(g, t)];
                }
            }
        }
    }

    // feasibility over the product of group simplices
    let active_groups: Vec<usize> = (0..n_groups).filter(|&g| group_weight[g] > 0.0).collect();
    let block_lens: Vec<usize> = active_groups.iter().map(|&g| group_cells[g].len()).collect();
    let total_len: usize = block_lens.iter().sum();
    let mut flat_coeffs: Vec<Vec<f64>> = vec![vec![0.0; total_len]; expectation_idx.len()];
    {
        let mut offset = 0;
        for (&grp, &len) in active_groups.iter().zip(&block_lens) {
            for (k, &t) in group_cells[grp].iter().enumerate().take(len) {
                for (jj, coeffs) in flat_coeffs.iter_mut().enumerate() {
                    coeffs[offset + k] = agg[jj][grp][t];
                }
            }
            offset += len;
        }
    }
    let hinge: Vec<IntervalConstraint> = expectation_idx
        .iter()
        .enumerate()
        .map(|(jj, &j)| IntervalConstraint {
            coeffs: flat_coeffs[jj].clone(),
            lo: constraints[j].target() - constraints[j].epsilon(),
            hi: constraints[j].target() + constraints[j].epsilon(),
        })
        .collect();
    let (_, fval) = minimize_violation(&hinge, &block_lens, None, 50_000);
    if fval > FEASIBILITY_TOL {
        return Ok(infeasible_conditional(
            given,
            target,
            constraints,
            cause_marginal,
        ));
    }

    // rank filter on aggregated features
    let restricted: Vec<Vec<f64>> = flat_coeffs.clone();
    let kept_local = independent_rows(&restricted);
    let kept: Vec<usize> = kept_local.iter().map(|&k| expectation_idx[k]).collect();
    let intervals: Vec<(Vec<f64>, f64, f64)> = kept_local
        .iter()
        .map(|&k| {
            (
                flat_coeffs[k].clone(),
                constraints[expectation_idx[k]].target(),
                constraints[expectation_idx[k]].epsilon(),
            )
        })
        .collect();
    let targets = resolve_targets(&intervals, &block_lens);

    // dual blocks: per active group, weight W, features fbar/W on its support
    let blocks: Vec<Block> = active_groups
        .iter()
        .map(|&grp| Block {
            weight: group_weight[grp],
            cells: group_cells[grp].len(),
            features: kept_local
                .iter()
                .map(|&k| {
                    group_cells[grp]
                        .iter()
                        .map(|&t| agg[k][grp][t] / group_weight[grp])
                        .collect()
                })
                .collect(),
        })
        .collect();
    let outcome = dual_newton(&blocks, &targets);

    // assemble rows
    let mut group_dist: Vec<Vec<f64>> = vec![Vec::new(); n_groups];
    for (bi, &grp) in active_groups.iter().enumerate() {
        let mut row = vec![0.0; n_cols];
        for (&t, &p) in group_cells[grp].iter().zip(&outcome.block_probs[bi]) {
            row[t] = p;
        }
        let s: f64 = row.iter().sum();
        for v in &mut row {
            *v /= s;
        }
        group_dist[grp] = row;
    }
    let mut rows = Vec::with_capacity(n_rows);
    for g in 0..n_rows {
        let grp = groups[g];
        let row = if !group_dist[grp].is_empty() {
            ProbTable::from_float(target.clone(), group_dist[grp].clone())?
        } else {
            // zero-weight group: uniform over its structural support
            let cells = &group_cells[grp];
            if cells.is_empty() {
                ProbTable::uniform(target.clone()).to_float()
            } else {
                ProbTable::uniform_over(target.clone(), cells)?.to_float()
            }
        };
        rows.push(row);
    }
    let conditional = ConditionalTable::new(given, target, rows)?;
    let joint = conditional.join(&cause_marginal.to_float())?;
    let residuals: Vec<f64> = constraints.iter().map(|c| c.residual(&joint)).collect();
    let mut multipliers = vec![0.0; constraints.len()];
    for (&j, &l) in kept.iter().zip(&outcome.lambda) {
        multipliers[j] = l;
    }
    Ok(ConditionalMaxEntSolution {
        conditional,
        multipliers,
        residuals,
        dual_objective: outcome.dual_objective,
        iterations: outcome.iterations,
        status: if outcome.converged {
            SolveStatus::Converged
        } else {
            SolveStatus::MaxIters
        },
    })
}

fn infeasible_conditional(
    given: FiniteDomain,
    target: FiniteDomain,
    constraints: &[LinearConstraint],
    cause_marginal: &ProbTable,
) -> ConditionalMaxEntSolution {
    let conditional = ConditionalTable::uniform(given, target);
    let residuals = match conditional.join(&cause_marginal.to_float()) {
        Ok(joint) => constraints.iter().map(|c| c.residual(&joint)).collect(),
        Err(_) => vec![f64::INFINITY; constraints.len()],
    };
    ConditionalMaxEntSolution {
        conditional,
        multipliers: vec![0.0; constraints.len()],
        residuals,
        dual_objective: 0.0,
        iterations: 0,
        status: SolveStatus::Infeasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{relation_to_constraint, Relation};
    use approx::assert_relative_eq;

    fn binary_domain() -> FiniteDomain {
        FiniteDomain::single("X", vec!["0", "1"]).unwrap()
    }

    #[test]
    fn unconstrained_is_uniform() {
        let d = FiniteDomain::single("X", vec!["a", "b", "c", "d"]).unwrap();
        let s = maxent(&d, &[]).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        for i in 0..4 {
            assert_relative_eq!(s.distribution.prob(i), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn binary_mean_pins_distribution() {
        let d = binary_domain();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1)], 0.3, 0.0).unwrap();
        let s = maxent(&d, &[c]).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert_relative_eq!(s.distribution.prob(1), 0.3, epsilon = 1e-9);
        assert!(s.residuals[0] <= 1e-9);
    }

    #[test]
    fn die_mean_fixture() {
        let d = FiniteDomain::single("X", vec!["1", "2", "3", "4", "5", "6"]).unwrap();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1)], 4.5, 0.0).unwrap();
        let s = maxent(&d, &[c]).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert!(s.residuals[0] <= 1e-8);
        let expect = [0.054, 0.079, 0.114, 0.165, 0.240, 0.348];
        for (i, e) in expect.iter().enumerate() {
            assert!((s.distribution.prob(i) - e).abs() < 1e-3);
        }
        // exponential-family form: log p linear in f on the support
        let lambda = s.multipliers[0];
        for i in 0..6 {
            let model = (-lambda * (i as f64 + 1.0) - s.log_partition).exp();
            assert_relative_eq!(s.distribution.prob(i), model, max_relative = 1e-8);
        }
    }

    #[test]
    fn infeasible_mean_reported() {
        let d = binary_domain();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1)], 2.0, 0.0).unwrap();
        let s = maxent(&d, &[c]).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(!s.feasibility.feasible);
        assert!(s.feasibility.min_squared_residual > 0.5);
    }

    #[test]
    fn feasibility_witness_cases() {
        let d = binary_domain();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1)], 0.3, 0.0).unwrap();
        let r = feasibility(&d, &[c]).unwrap();
        assert!(r.feasible);
        let w = r.witness.unwrap();
        assert_relative_eq!(w.prob(1), 0.3, epsilon = 1e-7);

        // parity over general joints is feasible: point mass on (1,1)
        let d2 = FiniteDomain::new(vec![("X1", vec!["-1", "1"]), ("X2", vec!["-1", "1"])]).unwrap();
        let c = LinearConstraint::moment(d2.clone(), &[(0, 1), (1, 1)], 1.0, 0.0).unwrap();
        let r = feasibility(&d2, &[c]).unwrap();
        assert!(r.feasible);
    }

    #[test]
    fn duplicate_constraints_dropped() {
        let d = binary_domain();
        let c1 = LinearConstraint::moment(d.clone(), &[(0, 1)], 0.3, 0.0).unwrap();
        // 2x + 1 is affinely dependent on x; consistent target
        let c2 = LinearConstraint::new(d.clone(), vec![1.0, 3.0], 1.6, 0.0).unwrap();
        let s = maxent(&d, &[c1, c2]).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert_relative_eq!(s.distribution.prob(1), 0.3, epsilon = 1e-9);
        assert_eq!(s.multipliers[1], 0.0);
        // inconsistent duplicate: infeasible
        let c1 = LinearConstraint::moment(d.clone(), &[(0, 1)], 0.3, 0.0).unwrap();
        let c3 = LinearConstraint::new(d.clone(), vec![0.0, 1.0], 0.5, 0.0).unwrap();
        let s = maxent(&d, &[c1, c3]).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn support_restriction_is_structural() {
        let d = FiniteDomain::new(vec![("X", vec!["1", "2", "3"]), ("Y", vec!["1", "2", "3"])])
            .unwrap();
        let rel = Relation::from_labels(
            d.clone(),
            &[
                vec!["1", "2"],
                vec!["1", "3"],
                vec!["2", "1"],
                vec!["3", "1"],
            ],
        )
        .unwrap();
        let c = relation_to_constraint(&rel).unwrap();
        let s = maxent(&d, &[c]).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        // maxent over the support is uniform over the 4 admissible cells
        for &m in rel.members() {
            assert_relative_eq!(s.distribution.prob(m), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn conditional_no_constraints_uniform_rows() {
        let d = FiniteDomain::new(vec![("X", vec!["a", "b"]), ("Y", vec!["0", "1", "2"])]).unwrap();
        let px = ProbTable::uniform(FiniteDomain::single("X", vec!["a", "b"]).unwrap());
        let s = conditional_maxent(&d, &[], &px, None).unwrap();
        for g in 0..2 {
            for t in 0..3 {
                assert_relative_eq!(s.conditional.row(g).prob(t), 1.0 / 3.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn conditional_device_support() {
        let d = FiniteDomain::new(vec![("X", vec!["1", "2", "3"]), ("Y", vec!["1", "2", "3"])])
            .unwrap();
        let rel = Relation::from_labels(
            d.clone(),
            &[
                vec!["1", "2"],
                vec!["1", "3"],
                vec!["2", "1"],
                vec!["3", "1"],
            ],
        )
        .unwrap();
        let c = relation_to_constraint(&rel).unwrap();
        let px = ProbTable::uniform(FiniteDomain::single("X", vec!["1", "2", "3"]).unwrap());
        let s = conditional_maxent(&d, &[c], &px, None).unwrap();
        assert_eq!(s.status, SolveStatus::Converged);
        assert_relative_eq!(s.conditional.row(0).prob(1), 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.conditional.row(0).prob(2), 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.conditional.row(1).prob(0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.conditional.row(2).prob(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parity_with_shared_rows_is_infeasible() {
        // q constant in x (single shared row) cannot satisfy E[X1 X2] = 1
        // under a uniform cause marginal
        let d = FiniteDomain::new(vec![("X1", vec!["-1", "1"]), ("X2", vec!["-1", "1"])]).unwrap();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1), (1, 1)], 1.0, 0.0).unwrap();
        let px = ProbTable::uniform(FiniteDomain::single("X1", vec!["-1", "1"]).unwrap());
        let s = conditional_maxent(&d, &[c], &px, Some(&[0, 0])).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn entropy_monotone_under_constraint_addition() {
        let d = FiniteDomain::single("X", vec!["1", "2", "3", "4"]).unwrap();
        let c1 = LinearConstraint::moment(d.clone(), &[(0, 1)], 2.8, 0.0).unwrap();
        let c2 = LinearConstraint::moment(d.clone(), &[(0, 2)], 9.0, 0.0).unwrap();
        let h1 = maxent(&d, &[c1.clone()]).unwrap().distribution.entropy();
        let h2 = maxent(&d, &[c1, c2]).unwrap().distribution.entropy();
        assert!(h2 <= h1 + 1e-9);
    }

    #[test]
    fn dual_equals_primal_entropy() {
        let d = FiniteDomain::single("X", vec!["1", "2", "3", "4", "5", "6"]).unwrap();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1)], 4.5, 0.0).unwrap();
        let s = maxent(&d, &[c]).unwrap();
        assert_relative_eq!(s.distribution.entropy(), s.dual_objective, epsilon = 1e-7);
    }
}
