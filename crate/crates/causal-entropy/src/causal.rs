//! Sequential entropy maximization along a causal order.
//!
//! Instead of maximizing the joint entropy under all constraints at once, the
//! causal variant walks a DAG in topological order and maximizes the entropy
//! of each node given its parents, subject to the constraints being
//! *completable*: a candidate conditional for the current node is admissible
//! only if the variables still to come can be distributed so that every
//! constraint holds. Two completion classes are supported:
//!
//! - [`FeasibilityScope::GeneralJoint`]: later variables may follow any
//!   conditional distribution given the earlier ones.
//! - [`FeasibilityScope::MarkovRespecting`]: later variables must factor as
//!   the product of their own parent conditionals. This class is smaller, so
//!   a step can be infeasible here while feasible in the general scope, and
//!   the per-step maximizer may stop being unique; non-uniqueness is
//!   reported by branching on each maximizing candidate.
//!
//! At every step the variables placed so far keep the distribution already
//! fixed; the final joint is exactly the product of the per-step
//! conditionals.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{ConditionalTable, FiniteDomain, LinearConstraint, ProbTable, Relation};
use crate::error::{Error, Result};
use crate::maxent::{conditional_maxent, SolveStatus, FEASIBILITY_TOL};
use crate::opt::{dykstra, minimize_violation, project_blocks, AffineProjector, ConvexSet, IntervalConstraint};

/// Cap on the number of topological orders [`order_sensitivity`] will
/// enumerate (7!).
pub const MAX_TOPOLOGICAL_ORDERS: usize = 5040;

/// Residual threshold for the multi-start penalty solver used in the
/// Markov-respecting scope. Looser than the convex-solver tolerance because
/// the penalty method only reaches the constraint set in the limit.
const MARKOV_FEASIBILITY_TOL: f64 = 1e-10;

/// Which class of completions a candidate step distribution must admit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityScope {
    GeneralJoint,
    MarkovRespecting,
}

// ---------------------------------------------------------------------------
// DAG
// ---------------------------------------------------------------------------

/// A directed acyclic graph over named nodes. Edges point from parent to
/// child.
#[derive(Debug, Clone, Serialize)]
pub struct Dag {
    nodes: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl Dag {
    pub fn new<S: Into<String>>(nodes: Vec<S>, edges_by_name: &[(&str, &str)]) -> Result<Self> {
        let nodes: Vec<String> = nodes.into_iter().map(Into::into).collect();
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].contains(n) {
                return Err(Error::Invalid(format!("duplicate node {n}")));
            }
        }
        let find = |name: &str| -> Result<usize> {
            nodes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let mut edges = Vec::with_capacity(edges_by_name.len());
        for &(p, c) in edges_by_name {
            let (p, c) = (find(p)?, find(c)?);
            if p == c {
                return Err(Error::Invalid(format!("self loop on {}", nodes[p])));
            }
            if !edges.contains(&(p, c)) {
                edges.push((p, c));
            }
        }
        let dag = Self { nodes, edges };
        if dag.kahn_order().is_none() {
            return Err(Error::Invalid("graph has a directed cycle".into()));
        }
        Ok(dag)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn parents(&self, node: usize) -> Vec<usize> {
        let mut p: Vec<usize> = self
            .edges
            .iter()
            .filter(|&&(_, c)| c == node)
            .map(|&(p, _)| p)
            .collect();
        p.sort_unstable();
        p
    }

    /// All nodes reachable from `node` along directed edges (excluding the
    /// node itself).
    pub fn descendants(&self, node: usize) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            for &(p, c) in &self.edges {
                if p == u && !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        (0..self.nodes.len()).filter(|&i| seen[i]).collect()
    }

    /// Kahn's algorithm, always removing the smallest-index available node.
    /// `None` when the graph has a cycle.
    fn kahn_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, c) in &self.edges {
            indeg[c] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut done = vec![false; n];
        while order.len() < n {
            let next = (0..n).find(|&i| !done[i] && indeg[i] == 0)?;
            done[next] = true;
            order.push(next);
            for &(p, c) in &self.edges {
                if p == next {
                    indeg[c] -= 1;
                }
            }
        }
        Some(order)
    }

    /// The canonical (smallest-index-first) topological order.
    pub fn default_order(&self) -> Vec<usize> {
        self.kahn_order().expect("constructor rejects cycles")
    }

    pub fn is_topological(&self, order: &[usize]) -> bool {
        if order.len() != self.nodes.len() {
            return false;
        }
        let mut pos = vec![usize::MAX; self.nodes.len()];
        for (i, &v) in order.iter().enumerate() {
            if v >= self.nodes.len() || pos[v] != usize::MAX {
                return false;
            }
            pos[v] = i;
        }
        self.edges.iter().all(|&(p, c)| pos[p] < pos[c])
    }

    /// All topological orders, capped at [`MAX_TOPOLOGICAL_ORDERS`].
    pub fn topological_orders(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.nodes.len();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(n);
        let mut used = vec![false; n];
        fn rec(
            dag: &Dag,
            used: &mut Vec<bool>,
            current: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) -> Result<()> {
            if current.len() == dag.nodes.len() {
                if out.len() >= MAX_TOPOLOGICAL_ORDERS {
                    return Err(Error::SizeCap(format!(
                        "more than {MAX_TOPOLOGICAL_ORDERS} topological orders"
                    )));
                }
                out.push(current.clone());
                return Ok(());
            }
            for v in 0..dag.nodes.len() {
                if used[v] {
                    continue;
                }
                if dag.parents(v).iter().all(|&p| used[p]) {
                    used[v] = true;
                    current.push(v);
                    rec(dag, used, current, out)?;
                    current.pop();
                    used[v] = false;
                }
            }
            Ok(())
        }
        rec(self, &mut used, &mut current, &mut out)?;
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Fit result types
// ---------------------------------------------------------------------------

/// One fitted step: the node's conditional given its DAG parents.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub node: String,
    /// Conditional of the node given its parents (the given domain is the
    /// unit domain for root nodes, so root records hold plain marginals).
    pub conditional: ConditionalTable,
    /// Achieved `Σ_pa m(pa) H(q(·|pa))` in nats.
    pub conditional_entropy: f64,
    /// Solver iterations; 0 when the step had a closed form.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Ok,
    /// The step index (0-based, in fit order) at which no admissible
    /// conditional existed.
    InfeasibleAtStep(usize),
    /// Some step had several maximizers; all completions are listed in
    /// `alternatives`.
    NonUnique,
}

/// Result of a sequential fit along one topological order.
#[derive(Debug, Clone, Serialize)]
pub struct CausalFitResult {
    pub order: Vec<String>,
    pub steps: Vec<StepRecord>,
    /// Product of the per-step conditionals; `None` when infeasible.
    pub joint: Option<ProbTable>,
    /// All completions when the fit was non-unique (the first one equals
    /// `joint`); empty otherwise.
    pub alternatives: Vec<ProbTable>,
    pub status: FitStatus,
}

impl CausalFitResult {
    /// Largest conditional mutual information `I(X; nondesc \ pa | pa)` over
    /// the nodes, a residual that is 0 iff the joint is Markov relative to
    /// the DAG.
    pub fn markov_residual(&self, dag: &Dag) -> Result<f64> {
        let joint = self
            .joint
            .as_ref()
            .ok_or_else(|| Error::Invalid("no joint on an infeasible fit".into()))?;
        markov_residual(joint, dag)
    }
}

/// Largest conditional mutual information between a node and its
/// nondescendants (beyond its parents), given its parents.
pub fn markov_residual(joint: &ProbTable, dag: &Dag) -> Result<f64> {
    let domain = joint.domain();
    let var_of: Vec<usize> = dag
        .nodes()
        .iter()
        .map(|n| domain.var_index(n))
        .collect::<Result<_>>()?;
    let h = |vars: &[usize]| -> Result<f64> {
        if vars.is_empty() {
            return Ok(0.0);
        }
        let names: Vec<&str> = vars
            .iter()
            .map(|&v| domain.variables()[v].name.as_str())
            .collect();
        Ok(joint.marginalize(&names)?.entropy())
    };
    let mut worst: f64 = 0.0;
    for node in 0..dag.nodes().len() {
        let desc = dag.descendants(node);
        let pa: Vec<usize> = dag.parents(node).iter().map(|&p| var_of[p]).collect();
        let rest: Vec<usize> = (0..dag.nodes().len())
            .filter(|&m| m != node && !desc.contains(&m) && !dag.parents(node).contains(&m))
            .map(|m| var_of[m])
            .collect();
        if rest.is_empty() {
            continue;
        }
        let a = vec![var_of[node]];
        let union = |x: &[usize], y: &[usize]| -> Vec<usize> {
            let mut v: Vec<usize> = x.iter().chain(y).copied().collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        // I(A; B | C) = H(A,C) + H(B,C) - H(C) - H(A,B,C)
        let mi = h(&union(&a, &pa))? + h(&union(&rest, &pa))?
            - h(&pa)?
            - h(&union(&union(&a, &rest), &pa))?;
        worst = worst.max(mi);
    }
    Ok(worst)
}

/// Total variation distance `max_A |P(A) - Q(A)| = (1/2) Σ |p - q|`.
pub fn total_variation(a: &ProbTable, b: &ProbTable) -> Result<f64> {
    if a.domain() != b.domain() {
        return Err(Error::Invalid("total variation needs a common domain".into()));
    }
    Ok(0.5
        * (0..a.domain().size())
            .map(|i| (a.prob(i) - b.prob(i)).abs())
            .sum::<f64>())
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn support_mask(domain: &FiniteDomain, constraints: &[LinearConstraint]) -> Vec<bool> {
    let mut mask = vec![true; domain.size()];
    for c in constraints {
        if c.is_support_restriction() {
            for (i, m) in mask.iter_mut().enumerate() {
                *m &= c.values()[i] == 0.0;
            }
        }
    }
    mask
}

fn unit_table() -> ProbTable {
    ProbTable::from_exact(FiniteDomain::unit(), vec![BigRational::one()])
        .expect("unit table is normalized")
}

fn sorted_insert(placed: &[usize], node: usize) -> Vec<usize> {
    let mut v = placed.to_vec();
    let pos = v.partition_point(|&x| x < node);
    v.insert(pos, node);
    v
}

/// Positions of `inner` (sorted, subset) within `outer` (sorted).
fn positions_within(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner
        .iter()
        .map(|x| outer.binary_search(x).expect("subset of placed variables"))
        .collect()
}

fn var_names<'a>(domain: &'a FiniteDomain, vars: &[usize]) -> Vec<&'a str> {
    vars.iter()
        .map(|&v| domain.variables()[v].name.as_str())
        .collect()
}

/// Marginal of `mu` (a table over the placed variables) on the parent set;
/// the unit table for root nodes.
fn parent_marginal(domain: &FiniteDomain, mu: &ProbTable, parents: &[usize]) -> Result<ProbTable> {
    if parents.is_empty() {
        return Ok(unit_table());
    }
    mu.marginalize(&var_names(domain, parents))
}

/// Extend the placed-variable marginal by one node:
/// `mu'(w, v) = mu(w) * q(v | pa(w))`. Exact when both inputs are exact.
fn extend_marginal(
    domain: &FiniteDomain,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
    parents: &[usize],
    cond: &ConditionalTable,
) -> Result<(Vec<usize>, ProbTable)> {
    let new_placed = sorted_insert(placed, node);
    let sub_new = domain.subdomain(&new_placed)?;
    let node_pos = new_placed.binary_search(&node).unwrap();
    let parent_pos = positions_within(&new_placed, parents);
    let pdom = cond.given_domain();
    let exact = mu.exact_weights().is_some()
        && cond.rows().iter().all(|r| r.exact_weights().is_some());
    if exact {
        let mut w = Vec::with_capacity(sub_new.size());
        for i in 0..sub_new.size() {
            let pt = sub_new.point(i);
            let mut wpt = pt.clone();
            wpt.remove(node_pos);
            let papt: Vec<usize> = parent_pos.iter().map(|&k| pt[k]).collect();
            let wi = mu.domain().index_of(&wpt);
            let pa = pdom.index_of(&papt);
            w.push(mu.exact_prob(wi).unwrap() * cond.row(pa).exact_prob(pt[node_pos]).unwrap());
        }
        Ok((new_placed, ProbTable::from_exact(sub_new, w)?))
    } else {
        let mut w = Vec::with_capacity(sub_new.size());
        for i in 0..sub_new.size() {
            let pt = sub_new.point(i);
            let mut wpt = pt.clone();
            wpt.remove(node_pos);
            let papt: Vec<usize> = parent_pos.iter().map(|&k| pt[k]).collect();
            let wi = mu.domain().index_of(&wpt);
            let pa = pdom.index_of(&papt);
            w.push(mu.prob(wi) * cond.row(pa).prob(pt[node_pos]));
        }
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            for x in &mut w {
                *x /= sum;
            }
        }
        Ok((new_placed, ProbTable::from_float(sub_new, w)?))
    }
}

/// Try to round a float row onto a small-denominator rational row, for
/// presenting boundary solutions exactly. `None` when no denominator up to 16
/// fits within 0.02 per entry.
fn snap_row(probs: &[f64]) -> Option<Vec<BigRational>> {
    for den in [1i64, 2, 3, 4, 5, 6, 8, 10, 12, 16] {
        let mut snapped = Vec::with_capacity(probs.len());
        let mut total = BigRational::zero();
        let mut ok = true;
        for &p in probs {
            let num = (p * den as f64).round();
            if (p - num / den as f64).abs() > 0.02 || num < 0.0 {
                ok = false;
                break;
            }
            let r = BigRational::new(BigInt::from(num as i64), BigInt::from(den));
            total += &r;
            snapped.push(r);
        }
        if ok && total.is_one() {
            return Some(snapped);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Fit context and recursion
// ---------------------------------------------------------------------------

struct Ctx<'a> {
    domain: &'a FiniteDomain,
    constraints: &'a [LinearConstraint],
    /// Indices of expectation constraints (support restrictions excluded).
    expect: Vec<usize>,
    /// Admissible-cell mask from the support restrictions.
    mask: Vec<bool>,
    /// Parents per domain variable index.
    parents: Vec<Vec<usize>>,
    /// Fit order, as domain variable indices.
    order: Vec<usize>,
    scope: FeasibilityScope,
}

struct Leaf {
    steps: Vec<StepRecord>,
    joint: ProbTable,
}

enum RecOutcome {
    Leaves(Vec<Leaf>),
    Infeasible { step: usize, steps: Vec<StepRecord> },
}

enum StepOutcome {
    Unique {
        cond: ConditionalTable,
        iterations: usize,
    },
    Multiple {
        candidates: Vec<ConditionalTable>,
        iterations: usize,
    },
    Infeasible,
}

/// Sequential entropy maximization along a topological order of `dag`.
///
/// `order` must be a topological order of the DAG node names; when absent the
/// smallest-index-first order is used.
pub fn causal_maxent_dag(
    domain: &FiniteDomain,
    constraints: &[LinearConstraint],
    dag: &Dag,
    order: Option<&[&str]>,
    scope: FeasibilityScope,
) -> Result<CausalFitResult> {
    for c in constraints {
        if c.domain() != domain {
            return Err(Error::Invalid("constraint domain mismatch".into()));
        }
    }
    if dag.nodes().len() != domain.num_variables() {
        return Err(Error::Invalid(
            "graph nodes must match the domain variables".into(),
        ));
    }
    let var_of: Vec<usize> = dag
        .nodes()
        .iter()
        .map(|n| domain.var_index(n))
        .collect::<Result<_>>()?;
    let order_nodes: Vec<usize> = match order {
        Some(names) => {
            let mut o = Vec::with_capacity(names.len());
            for n in names {
                let idx = dag
                    .nodes()
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::UnknownVariable(n.to_string()))?;
                o.push(idx);
            }
            if !dag.is_topological(&o) {
                return Err(Error::Invalid("order is not topological".into()));
            }
            o
        }
        None => dag.default_order(),
    };

    let mut parents = vec![Vec::new(); domain.num_variables()];
    for (node, &v) in var_of.iter().enumerate() {
        let mut p: Vec<usize> = dag.parents(node).iter().map(|&q| var_of[q]).collect();
        p.sort_unstable();
        parents[v] = p;
    }
    let ctx = Ctx {
        domain,
        constraints,
        expect: (0..constraints.len())
            .filter(|&j| !constraints[j].is_support_restriction())
            .collect(),
        mask: support_mask(domain, constraints),
        parents,
        order: order_nodes.iter().map(|&n| var_of[n]).collect(),
        scope,
    };
    let order_names: Vec<String> = order_nodes
        .iter()
        .map(|&n| dag.nodes()[n].clone())
        .collect();

    match fit_rec(&ctx, 0, &[], &unit_table(), Vec::new())? {
        RecOutcome::Leaves(mut leaves) => {
            let alternatives: Vec<ProbTable> = if leaves.len() > 1 {
                leaves.iter().map(|l| l.joint.clone()).collect()
            } else {
                Vec::new()
            };
            let status = if leaves.len() > 1 {
                FitStatus::NonUnique
            } else {
                FitStatus::Ok
            };
            let first = leaves.remove(0);
            Ok(CausalFitResult {
                order: order_names,
                steps: first.steps,
                joint: Some(first.joint),
                alternatives,
                status,
            })
        }
        RecOutcome::Infeasible { step, steps } => Ok(CausalFitResult {
            order: order_names,
            steps,
            joint: None,
            alternatives: Vec::new(),
            status: FitStatus::InfeasibleAtStep(step),
        }),
    }
}

/// Two-variable special case: maximize the cause's marginal entropy over all
/// marginals admitting a constraint-satisfying joint, then the conditional
/// entropy of the effect. Equivalent to [`causal_maxent_dag`] on the
/// two-node graph `cause -> effect` in the general scope.
pub fn causal_maxent_bivariate(
    domain: &FiniteDomain,
    constraints: &[LinearConstraint],
    cause: &str,
) -> Result<CausalFitResult> {
    if domain.num_variables() != 2 {
        return Err(Error::Invalid("bivariate fit needs exactly two variables".into()));
    }
    let cause_idx = domain.var_index(cause)?;
    let effect = &domain.variables()[1 - cause_idx].name;
    let dag = Dag::new(vec![cause.to_string(), effect.clone()], &[(cause, effect)])?;
    causal_maxent_dag(
        domain,
        constraints,
        &dag,
        Some(&[cause, effect]),
        FeasibilityScope::GeneralJoint,
    )
}

fn fit_rec(
    ctx: &Ctx,
    j: usize,
    placed: &[usize],
    mu: &ProbTable,
    steps: Vec<StepRecord>,
) -> Result<RecOutcome> {
    if j == ctx.order.len() {
        return Ok(RecOutcome::Leaves(vec![Leaf {
            steps,
            joint: mu.clone(),
        }]));
    }
    let node = ctx.order[j];
    let parents = &ctx.parents[node];
    let final_step = j + 1 == ctx.order.len();
    // the two scopes coincide on the last step: the joint is the full product
    let outcome = if ctx.scope == FeasibilityScope::GeneralJoint || final_step {
        general_step(ctx, placed, mu, node)?
    } else {
        markov_step(ctx, j, placed, mu, node)?
    };
    match outcome {
        StepOutcome::Infeasible => Ok(RecOutcome::Infeasible { step: j, steps }),
        StepOutcome::Unique { cond, iterations } => {
            let record = step_record(ctx, mu, node, parents, &cond, iterations)?;
            let (new_placed, new_mu) =
                extend_marginal(ctx.domain, placed, mu, node, parents, &cond)?;
            let mut steps = steps;
            steps.push(record);
            fit_rec(ctx, j + 1, &new_placed, &new_mu, steps)
        }
        StepOutcome::Multiple {
            candidates,
            iterations,
        } => {
            let mut leaves = Vec::new();
            let mut first_infeasible: Option<(usize, Vec<StepRecord>)> = None;
            for cond in candidates {
                let record = step_record(ctx, mu, node, parents, &cond, iterations)?;
                let (new_placed, new_mu) =
                    extend_marginal(ctx.domain, placed, mu, node, parents, &cond)?;
                let mut branch_steps = steps.clone();
                branch_steps.push(record);
                match fit_rec(ctx, j + 1, &new_placed, &new_mu, branch_steps)? {
                    RecOutcome::Leaves(mut l) => leaves.append(&mut l),
                    RecOutcome::Infeasible { step, steps } => {
                        first_infeasible.get_or_insert((step, steps));
                    }
                }
            }
            if leaves.is_empty() {
                let (step, steps) = first_infeasible
                    .unwrap_or((j, steps));
                Ok(RecOutcome::Infeasible { step, steps })
            } else {
                Ok(RecOutcome::Leaves(leaves))
            }
        }
    }
}

fn step_record(
    ctx: &Ctx,
    mu: &ProbTable,
    node: usize,
    parents: &[usize],
    cond: &ConditionalTable,
    iterations: usize,
) -> Result<StepRecord> {
    let m = parent_marginal(ctx.domain, mu, parents)?;
    let entropy: f64 = (0..cond.given_domain().size())
        .map(|pa| m.prob(pa) * cond.row(pa).entropy())
        .sum();
    Ok(StepRecord {
        node: ctx.domain.variables()[node].name.clone(),
        conditional: cond.clone(),
        conditional_entropy: entropy,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// General-joint scope step
// ---------------------------------------------------------------------------

struct StepGeometry {
    pdom: FiniteDomain,
    vdom: FiniteDomain,
    /// For each mu point, its parent-configuration index.
    pa_of_w: Vec<usize>,
    /// allowed[pa][v]: every positive-mass prefix consistent with pa can be
    /// completed inside the support after choosing v.
    allowed: Vec<Vec<bool>>,
    /// Parent configurations that carry positive mass.
    touched: Vec<bool>,
    /// m(pa): parent-marginal mass.
    pa_mass: Vec<f64>,
}

fn step_geometry(
    ctx: &Ctx,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
) -> Result<StepGeometry> {
    let parents = &ctx.parents[node];
    let pdom = ctx.domain.subdomain(parents)?;
    let vdom = ctx.domain.subdomain(&[node])?;
    let k = ctx.domain.cardinality(node);
    let sub_w = mu.domain();
    let parent_pos = positions_within(placed, parents);

    // completable[w][v]: some full support point projects to (w, v)
    let mut completable = vec![vec![false; k]; sub_w.size()];
    for idx in 0..ctx.domain.size() {
        if !ctx.mask[idx] {
            continue;
        }
        let z = ctx.domain.point(idx);
        let w = sub_w.index_of(&ctx.domain.project_point(&z, placed));
        completable[w][z[node]] = true;
    }

    let mut pa_of_w = vec![0usize; sub_w.size()];
    let mut allowed = vec![vec![true; k]; pdom.size()];
    let mut touched = vec![false; pdom.size()];
    let mut pa_mass = vec![0.0; pdom.size()];
    for wi in 0..sub_w.size() {
        let wpt = sub_w.point(wi);
        let papt: Vec<usize> = parent_pos.iter().map(|&p| wpt[p]).collect();
        let pa = pdom.index_of(&papt);
        pa_of_w[wi] = pa;
        let mass = mu.prob(wi);
        if mass > 0.0 {
            touched[pa] = true;
            pa_mass[pa] += mass;
            for v in 0..k {
                allowed[pa][v] &= completable[wi][v];
            }
        }
    }
    Ok(StepGeometry {
        pdom,
        vdom,
        pa_of_w,
        allowed,
        touched,
        pa_mass,
    })
}

/// Entropy-greedy rows when no expectation constraint binds: uniform over
/// the allowed options of every positive-mass parent configuration.
fn uniform_rows(geo: &StepGeometry) -> Result<Option<Vec<ProbTable>>> {
    let k = geo.vdom.size();
    let mut rows = Vec::with_capacity(geo.pdom.size());
    for pa in 0..geo.pdom.size() {
        if geo.touched[pa] {
            let vals: Vec<usize> = (0..k).filter(|&v| geo.allowed[pa][v]).collect();
            if vals.is_empty() {
                return Ok(None);
            }
            rows.push(ProbTable::uniform_over(geo.vdom.clone(), &vals)?);
        } else {
            rows.push(ProbTable::uniform(geo.vdom.clone()));
        }
    }
    Ok(Some(rows))
}

fn general_step(
    ctx: &Ctx,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
) -> Result<StepOutcome> {
    let parents = &ctx.parents[node];
    let geo = step_geometry(ctx, placed, mu, node)?;
    let final_step = placed.len() + 1 == ctx.domain.num_variables();

    let rows0 = match uniform_rows(&geo)? {
        Some(rows) => rows,
        None => return Ok(StepOutcome::Infeasible),
    };
    let cond0 = ConditionalTable::new(geo.pdom.clone(), geo.vdom.clone(), rows0)?;
    if ctx.expect.is_empty() {
        return Ok(StepOutcome::Unique {
            cond: cond0,
            iterations: 0,
        });
    }

    // the unconstrained optimum stands whenever some completion satisfies
    // the expectation constraints with it
    if q0_completable(ctx, placed, mu, node, &geo, &cond0, final_step)? {
        return Ok(StepOutcome::Unique {
            cond: cond0,
            iterations: 0,
        });
    }

    if final_step {
        general_final_step(ctx, placed, mu, node, parents, &geo)
    } else {
        general_inner_step(ctx, placed, mu, node, &geo)
    }
}

/// Can the candidate conditional be completed within the constraint set?
fn q0_completable(
    ctx: &Ctx,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
    _geo: &StepGeometry,
    cond: &ConditionalTable,
    final_step: bool,
) -> Result<bool> {
    let parents = &ctx.parents[node];
    let (_, mu0) = extend_marginal(ctx.domain, placed, mu, node, parents, cond)?;
    if final_step {
        return Ok(ctx
            .expect
            .iter()
            .all(|&j| ctx.constraints[j].residual(&mu0) <= ctx.constraints[j].epsilon() + 1e-9));
    }
    // look for a full joint matching the extended prefix marginal
    let new_placed = sorted_insert(placed, node);
    let cells: Vec<usize> = (0..ctx.domain.size())
        .filter(|&idx| {
            if !ctx.mask[idx] {
                return false;
            }
            let z = ctx.domain.point(idx);
            mu0.prob(mu0.domain().index_of(&ctx.domain.project_point(&z, &new_placed))) > 0.0
        })
        .collect();
    if cells.is_empty() {
        return Ok(false);
    }
    let mut intervals: Vec<IntervalConstraint> = Vec::new();
    for wi in 0..mu0.domain().size() {
        let mass = mu0.prob(wi);
        if mass == 0.0 {
            continue;
        }
        let coeffs: Vec<f64> = cells
            .iter()
            .map(|&idx| {
                let z = ctx.domain.point(idx);
                let w = mu0
                    .domain()
                    .index_of(&ctx.domain.project_point(&z, &new_placed));
                if w == wi {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        intervals.push(IntervalConstraint {
            coeffs,
            lo: mass,
            hi: mass,
        });
    }
    for &j in &ctx.expect {
        let c = &ctx.constraints[j];
        intervals.push(IntervalConstraint {
            coeffs: cells.iter().map(|&idx| c.values()[idx]).collect(),
            lo: c.target() - c.epsilon(),
            hi: c.target() + c.epsilon(),
        });
    }
    let (_, fval) = minimize_violation(&intervals, &[cells.len()], None, 50_000);
    Ok(fval <= FEASIBILITY_TOL)
}

/// Last variable: the whole problem is a conditional entropy maximization
/// with rows tied per parent configuration.
fn general_final_step(
    ctx: &Ctx,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
    parents: &[usize],
    geo: &StepGeometry,
) -> Result<StepOutcome> {
    let groups: Vec<usize> = geo.pa_of_w.clone();
    let sol = conditional_maxent(ctx.domain, ctx.constraints, mu, Some(&groups))?;
    if sol.status == SolveStatus::Infeasible {
        return Ok(StepOutcome::Infeasible);
    }
    let mut rows = Vec::with_capacity(geo.pdom.size());
    for pa in 0..geo.pdom.size() {
        let w = (0..geo.pa_of_w.len())
            .find(|&wi| geo.pa_of_w[wi] == pa && mu.prob(wi) > 0.0)
            .or_else(|| (0..geo.pa_of_w.len()).find(|&wi| geo.pa_of_w[wi] == pa))
            .expect("every parent configuration has a prefix point");
        rows.push(sol.conditional.row(w).clone());
    }
    let cond = ConditionalTable::new(geo.pdom.clone(), geo.vdom.clone(), rows)?;
    let cond = polish_final_rows(ctx, placed, mu, node, parents, geo, cond)?;
    Ok(StepOutcome::Unique {
        cond,
        iterations: sol.iterations,
    })
}

/// Boundary solutions (multipliers running off to infinity) converge to
/// simple rational rows; snap each row when the snapped table stays feasible
/// and loses no conditional entropy beyond roundoff.
fn polish_final_rows(
    ctx: &Ctx,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
    parents: &[usize],
    geo: &StepGeometry,
    cond: ConditionalTable,
) -> Result<ConditionalTable> {
    let mut snapped_rows = Vec::with_capacity(geo.pdom.size());
    for pa in 0..geo.pdom.size() {
        match snap_row(&cond.row(pa).probs()) {
            Some(w) => snapped_rows.push(ProbTable::from_exact(geo.vdom.clone(), w)?),
            None => return Ok(cond),
        }
    }
    let snapped = ConditionalTable::new(geo.pdom.clone(), geo.vdom.clone(), snapped_rows)?;
    let (_, joint) = extend_marginal(ctx.domain, placed, mu, node, parents, &snapped)?;
    let feasible = ctx
        .expect
        .iter()
        .all(|&j| ctx.constraints[j].residual(&joint) <= ctx.constraints[j].epsilon() + 1e-9)
        && {
            let off_support: f64 = (0..ctx.domain.size())
                .filter(|&i| !ctx.mask[i])
                .map(|i| joint.prob(i))
                .sum();
            off_support <= 1e-12
        };
    if !feasible {
        return Ok(cond);
    }
    let h = |c: &ConditionalTable| -> f64 {
        (0..geo.pdom.size())
            .map(|pa| geo.pa_mass[pa] * c.row(pa).entropy())
            .sum()
    };
    if h(&snapped) >= h(&cond) - 1e-7 {
        Ok(snapped)
    } else {
        Ok(cond)
    }
}

/// Intermediate variable with binding expectation constraints: maximize the
/// conditional entropy of the candidate over the polytope of prefix
/// distributions that admit a constraint-satisfying completion. The
/// candidate conditional is eliminated in favor of the completing joint `p`;
/// tying rows across prefixes sharing a parent configuration becomes a set
/// of proportionality equalities on `p`.
fn general_inner_step(
    ctx: &Ctx,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
    geo: &StepGeometry,
) -> Result<StepOutcome> {
    let sub_w = mu.domain();
    let k = ctx.domain.cardinality(node);
    let cells: Vec<usize> = (0..ctx.domain.size())
        .filter(|&idx| {
            if !ctx.mask[idx] {
                return false;
            }
            let z = ctx.domain.point(idx);
            mu.prob(sub_w.index_of(&ctx.domain.project_point(&z, placed))) > 0.0
        })
        .collect();
    if cells.is_empty() {
        return Ok(StepOutcome::Infeasible);
    }
    // per cell: prefix point and node value
    let cell_w: Vec<usize> = cells
        .iter()
        .map(|&idx| {
            let z = ctx.domain.point(idx);
            sub_w.index_of(&ctx.domain.project_point(&z, placed))
        })
        .collect();
    let cell_v: Vec<usize> = cells
        .iter()
        .map(|&idx| ctx.domain.point(idx)[node])
        .collect();

    let mut equalities: Vec<(Vec<f64>, f64)> = Vec::new();
    // prefix marginal must stay fixed
    for wi in 0..sub_w.size() {
        let mass = mu.prob(wi);
        if mass == 0.0 {
            continue;
        }
        let coeffs: Vec<f64> = cell_w
            .iter()
            .map(|&w| if w == wi { 1.0 } else { 0.0 })
            .collect();
        equalities.push((coeffs, mass));
    }
    // rows sharing a parent configuration must be proportional:
    // mu(w2) T(w1, v) = mu(w1) T(w2, v) for consecutive prefixes of each pa
    for pa in 0..geo.pdom.size() {
        let members: Vec<usize> = (0..sub_w.size())
            .filter(|&wi| geo.pa_of_w[wi] == pa && mu.prob(wi) > 0.0)
            .collect();
        for pair in members.windows(2) {
            let (w1, w2) = (pair[0], pair[1]);
            for v in 0..k {
                let coeffs: Vec<f64> = (0..cells.len())
                    .map(|c| {
                        if cell_v[c] != v {
                            0.0
                        } else if cell_w[c] == w1 {
                            mu.prob(w2)
                        } else if cell_w[c] == w2 {
                            -mu.prob(w1)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                equalities.push((coeffs, 0.0));
            }
        }
    }
    let mut slabs: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    for &j in &ctx.expect {
        let c = &ctx.constraints[j];
        let coeffs: Vec<f64> = cells.iter().map(|&idx| c.values()[idx]).collect();
        if c.epsilon() == 0.0 {
            equalities.push((coeffs, c.target()));
        } else {
            slabs.push((coeffs, c.target() - c.epsilon(), c.target() + c.epsilon()));
        }
    }

    // feasibility over p with the candidate free
    let intervals: Vec<IntervalConstraint> = equalities
        .iter()
        .map(|(coeffs, b)| IntervalConstraint {
            coeffs: coeffs.clone(),
            lo: *b,
            hi: *b,
        })
        .chain(slabs.iter().map(|(coeffs, lo, hi)| IntervalConstraint {
            coeffs: coeffs.clone(),
            lo: *lo,
            hi: *hi,
        }))
        .collect();
    let (witness, fval) = minimize_violation(&intervals, &[cells.len()], None, 50_000);
    if fval > FEASIBILITY_TOL {
        return Ok(StepOutcome::Infeasible);
    }

    // projected gradient ascent on Σ_pa m(pa) H(T(pa,·)/m(pa))
    let a = DMatrix::from_fn(equalities.len(), cells.len(), |r, c| equalities[r].0[c]);
    let b = DVector::from_iterator(equalities.len(), equalities.iter().map(|(_, b)| *b));
    let mut sets = vec![ConvexSet::Affine(AffineProjector::new(a, b))];
    for (coeffs, lo, hi) in &slabs {
        sets.push(ConvexSet::slab(coeffs.clone(), *lo, *hi));
    }
    sets.push(ConvexSet::Orthant);

    let aggregate = |x: &[f64]| -> Vec<Vec<f64>> {
        let mut t = vec![vec![0.0; k]; geo.pdom.size()];
        for c in 0..cells.len() {
            t[geo.pa_of_w[cell_w[c]]][cell_v[c]] += x[c];
        }
        t
    };
    let objective = |x: &[f64]| -> f64 {
        let t = aggregate(x);
        let mut h = 0.0;
        for pa in 0..geo.pdom.size() {
            let m = geo.pa_mass[pa];
            if m > 0.0 {
                for v in 0..k {
                    let tv = t[pa][v];
                    if tv > 0.0 {
                        h -= tv * (tv / m).ln();
                    }
                }
            }
        }
        h
    };

    let mut x = dykstra(&witness, &sets, 3000, 1e-13);
    let mut fx = objective(&x);
    let mut step = 0.1;
    let mut stall = 0;
    let mut iterations = 0;
    for _ in 0..4000 {
        let t = aggregate(&x);
        let grad: Vec<f64> = (0..cells.len())
            .map(|c| {
                let pa = geo.pa_of_w[cell_w[c]];
                let m = geo.pa_mass[pa];
                if m <= 0.0 {
                    return 0.0;
                }
                let q = (t[pa][cell_v[c]] / m).max(1e-18);
                -(1.0 + q.ln())
            })
            .collect();
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + step * gi).collect();
            let y = dykstra(&trial, &sets, 400, 1e-13);
            let fy = objective(&y);
            if fy > fx + 1e-15 {
                let gain = fy - fx;
                x = y;
                fx = fy;
                accepted = true;
                iterations += 1;
                step *= 1.4;
                stall = if gain < 1e-13 { stall + 1 } else { 0 };
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }
        if !accepted || stall >= 10 {
            break;
        }
    }

    let t = aggregate(&x);
    let mut rows = Vec::with_capacity(geo.pdom.size());
    for pa in 0..geo.pdom.size() {
        if geo.touched[pa] && geo.pa_mass[pa] > 0.0 {
            let mut w: Vec<f64> = t[pa].iter().map(|&v| v.max(0.0)).collect();
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                for v in &mut w {
                    *v /= s;
                }
                rows.push(ProbTable::from_float(geo.vdom.clone(), w)?);
            } else {
                let vals: Vec<usize> = (0..k).filter(|&v| geo.allowed[pa][v]).collect();
                rows.push(ProbTable::uniform_over(geo.vdom.clone(), &vals)?.to_float());
            }
        } else {
            rows.push(ProbTable::uniform(geo.vdom.clone()).to_float());
        }
    }
    Ok(StepOutcome::Unique {
        cond: ConditionalTable::new(geo.pdom.clone(), geo.vdom.clone(), rows)?,
        iterations,
    })
}

// ---------------------------------------------------------------------------
// Markov-respecting scope step
// ---------------------------------------------------------------------------

/// Parameterization of the remaining conditionals: one simplex block per
/// (remaining node, parent configuration).
struct ThetaLayout {
    /// (domain var of the node, parent configuration index, candidate values)
    blocks: Vec<(usize, usize, Vec<usize>)>,
    offsets: Vec<usize>,
    lens: Vec<usize>,
    total: usize,
    /// Per full-domain point: prefix mass and the parameter index of each
    /// remaining node's factor; `None` when the point cannot carry mass.
    point_params: Vec<Option<(f64, Vec<usize>)>>,
}

fn markov_step(
    ctx: &Ctx,
    j: usize,
    placed: &[usize],
    mu: &ProbTable,
    node: usize,
) -> Result<StepOutcome> {
    let theta_nodes: Vec<usize> = ctx.order[j..].to_vec();
    let domain = ctx.domain;
    let sub_w = mu.domain();

    // blocks with structurally admissible candidate values
    let mut blocks: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    let mut pdoms: Vec<FiniteDomain> = Vec::new();
    for &r in &theta_nodes {
        let pdom = domain.subdomain(&ctx.parents[r])?;
        for pa in 0..pdom.size() {
            let papt = pdom.point(pa);
            let vals: Vec<usize> = (0..domain.cardinality(r))
                .filter(|&v| {
                    (0..domain.size()).any(|idx| {
                        if !ctx.mask[idx] {
                            return false;
                        }
                        let z = domain.point(idx);
                        z[r] == v
                            && ctx.parents[r]
                                .iter()
                                .enumerate()
                                .all(|(i, &p)| z[p] == papt[i])
                    })
                })
                .collect();
            let vals = if vals.is_empty() {
                (0..domain.cardinality(r)).collect()
            } else {
                vals
            };
            blocks.push((r, pa, vals));
        }
        pdoms.push(pdom);
    }
    let lens: Vec<usize> = blocks.iter().map(|(_, _, vals)| vals.len()).collect();
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut total = 0;
    for &l in &lens {
        offsets.push(total);
        total += l;
    }

    // block lookup per (node, pa)
    let block_of = |r: usize, pa: usize| -> usize {
        blocks
            .iter()
            .position(|&(br, bpa, _)| br == r && bpa == pa)
            .expect("block exists")
    };

    let mut point_params = Vec::with_capacity(domain.size());
    for idx in 0..domain.size() {
        let z = domain.point(idx);
        let mass = mu.prob(sub_w.index_of(&domain.project_point(&z, placed)));
        if mass == 0.0 {
            point_params.push(None);
            continue;
        }
        let mut params = Vec::with_capacity(theta_nodes.len());
        let mut possible = true;
        for (ti, &r) in theta_nodes.iter().enumerate() {
            let pa = pdoms[ti].index_of(&domain.project_point(&z, &ctx.parents[r]));
            let b = block_of(r, pa);
            match blocks[b].2.iter().position(|&v| v == z[r]) {
                Some(pos) => params.push(offsets[b] + pos),
                None => {
                    possible = false;
                    break;
                }
            }
        }
        point_params.push(if possible { Some((mass, params)) } else { None });
    }
    let layout = ThetaLayout {
        blocks,
        offsets,
        lens,
        total,
        point_params,
    };

    // all constraints become penalties: support restrictions keep mass inside
    // the relation, expectation constraints hit their intervals
    let penalties: Vec<(Vec<f64>, f64, f64)> = ctx
        .constraints
        .iter()
        .map(|c| {
            (
                c.values().to_vec(),
                c.target() - c.epsilon(),
                c.target() + c.epsilon(),
            )
        })
        .collect();

    // objective weights: the current node's parent-configuration masses
    let node_pdom = domain.subdomain(&ctx.parents[node])?;
    let m = parent_marginal(domain, mu, &ctx.parents[node])?;
    let node_blocks: Vec<(usize, f64)> = layout
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, &(r, _, _))| r == node)
        .map(|(b, &(_, pa, _))| (b, m.prob(pa)))
        .collect();

    let eval_expectations = |x: &[f64]| -> (Vec<f64>, Vec<Vec<f64>>) {
        // returns E_c and per-point except-products for gradient reuse
        let mut expects = vec![0.0; penalties.len()];
        let mut except: Vec<Vec<f64>> = Vec::with_capacity(domain.size());
        for pp in &layout.point_params {
            match pp {
                None => except.push(Vec::new()),
                Some((mass, params)) => {
                    let factors: Vec<f64> = params.iter().map(|&k| x[k]).collect();
                    let n = factors.len();
                    let mut pref = vec![1.0; n + 1];
                    for i in 0..n {
                        pref[i + 1] = pref[i] * factors[i];
                    }
                    let mut suff = vec![1.0; n + 1];
                    for i in (0..n).rev() {
                        suff[i] = suff[i + 1] * factors[i];
                    }
                    let weight = mass * pref[n];
                    let idx = except.len();
                    for (c, (fvals, _, _)) in penalties.iter().enumerate() {
                        expects[c] += fvals[idx] * weight;
                    }
                    except.push((0..n).map(|i| mass * pref[i] * suff[i + 1]).collect());
                }
            }
        }
        (expects, except)
    };

    let penalty_and_grad = |x: &[f64]| -> (f64, Vec<f64>) {
        let (expects, except) = eval_expectations(x);
        let mut value = 0.0;
        let mut hinge = vec![0.0; penalties.len()];
        for (c, (_, lo, hi)) in penalties.iter().enumerate() {
            let e = expects[c];
            let h = if e < *lo {
                e - lo
            } else if e > *hi {
                e - hi
            } else {
                0.0
            };
            hinge[c] = h;
            value += h * h;
        }
        let mut grad = vec![0.0; layout.total];
        for (idx, pp) in layout.point_params.iter().enumerate() {
            if let Some((_, params)) = pp {
                for (i, &k) in params.iter().enumerate() {
                    let exc = except[idx][i];
                    if exc == 0.0 {
                        continue;
                    }
                    let mut d = 0.0;
                    for (c, (fvals, _, _)) in penalties.iter().enumerate() {
                        if hinge[c] != 0.0 {
                            d += 2.0 * hinge[c] * fvals[idx] * exc;
                        }
                    }
                    grad[k] += d;
                }
            }
        }
        (value, grad)
    };

    let entropy_and_grad = |x: &[f64]| -> (f64, Vec<f64>) {
        let mut h = 0.0;
        let mut grad = vec![0.0; layout.total];
        for &(b, weight) in &node_blocks {
            if weight <= 0.0 {
                continue;
            }
            let o = layout.offsets[b];
            for k in o..o + layout.lens[b] {
                let p = x[k];
                if p > 0.0 {
                    h -= weight * p * p.ln();
                }
                grad[k] = weight * (-(1.0 + p.max(1e-18).ln()));
            }
        }
        (h, grad)
    };

    // starting points: uniform, then either all vertex combinations or
    // random rows from a fixed seed
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let uniform_start: Vec<f64> = {
        let mut v = vec![0.0; layout.total];
        for (b, &l) in layout.lens.iter().enumerate() {
            for k in layout.offsets[b]..layout.offsets[b] + l {
                v[k] = 1.0 / l as f64;
            }
        }
        v
    };
    starts.push(uniform_start);
    let combos: usize = layout
        .lens
        .iter()
        .try_fold(1usize, |acc, &l| {
            let next = acc.checked_mul(l)?;
            if next > 64 {
                None
            } else {
                Some(next)
            }
        })
        .unwrap_or(usize::MAX);
    if combos <= 64 {
        for combo in 0..combos {
            let mut v = vec![0.0; layout.total];
            let mut rem = combo;
            for (b, &l) in layout.lens.iter().enumerate() {
                let pick = rem % l;
                rem /= l;
                v[layout.offsets[b] + pick] = 1.0;
            }
            starts.push(v);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..64 {
            let mut v = vec![0.0; layout.total];
            for (b, &l) in layout.lens.iter().enumerate() {
                let o = layout.offsets[b];
                let mut s = 0.0;
                for k in o..o + l {
                    let u: f64 = rng.gen_range(1e-3..1.0);
                    v[k] = u;
                    s += u;
                }
                for k in o..o + l {
                    v[k] /= s;
                }
            }
            starts.push(v);
        }
    }

    // projected gradient descent on a closure objective
    let descend = |x0: &[f64], f: &dyn Fn(&[f64]) -> (f64, Vec<f64>), iters: usize| -> (Vec<f64>, f64, usize) {
        let mut x = x0.to_vec();
        project_blocks(&mut x, &layout.lens);
        let (mut fx, mut grad) = f(&x);
        let mut step = 0.5;
        let mut count = 0;
        for _ in 0..iters {
            let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-14 {
                break;
            }
            let mut accepted = false;
            for _ in 0..50 {
                let mut y: Vec<f64> =
                    x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
                project_blocks(&mut y, &layout.lens);
                let (fy, gy) = f(&y);
                if fy < fx - 1e-18 {
                    x = y;
                    fx = fy;
                    grad = gy;
                    accepted = true;
                    count += 1;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    break;
                }
            }
            if !accepted {
                break;
            }
        }
        (x, fx, count)
    };

    // phase 1: pure feasibility
    let mut phase1: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut best_pen = f64::INFINITY;
    for s in &starts {
        let (x, pen, _) = descend(s, &|x| penalty_and_grad(x), 2000);
        best_pen = best_pen.min(pen);
        phase1.push((x, pen));
    }
    if best_pen > MARKOV_FEASIBILITY_TOL {
        return Ok(StepOutcome::Infeasible);
    }

    // phase 2: penalty ramp on -(entropy) + rho * penalty
    struct Run {
        q: Vec<Vec<f64>>, // node rows in pa order (full cardinality)
        x: Vec<f64>,
        entropy: f64,
        penalty: f64,
        iterations: usize,
    }
    let extract_q = |x: &[f64]| -> Vec<Vec<f64>> {
        let k = domain.cardinality(node);
        let mut rows = vec![vec![0.0; k]; node_pdom.size()];
        for (b, &(r, pa, ref vals)) in layout.blocks.iter().enumerate() {
            if r == node {
                for (i, &v) in vals.iter().enumerate() {
                    rows[pa][v] = x[layout.offsets[b] + i];
                }
            }
        }
        rows
    };
    let mut runs: Vec<Run> = Vec::new();
    for (x0, _) in &phase1 {
        let mut x = x0.clone();
        let mut total_iters = 0;
        for rho in [1e2, 1e3, 1e4, 1e5, 1e6, 1e7] {
            let obj = |x: &[f64]| -> (f64, Vec<f64>) {
                let (h, hg) = entropy_and_grad(x);
                let (p, pg) = penalty_and_grad(x);
                let val = -h + rho * p;
                let grad: Vec<f64> = hg
                    .iter()
                    .zip(&pg)
                    .map(|(a, b)| -a + rho * b)
                    .collect();
                (val, grad)
            };
            let (xn, _, it) = descend(&x, &obj, 400);
            x = xn;
            total_iters += it;
        }
        let (pen, _) = penalty_and_grad(&x);
        let (h, _) = entropy_and_grad(&x);
        runs.push(Run {
            q: extract_q(&x),
            x,
            entropy: h,
            penalty: pen,
            iterations: total_iters,
        });
    }
    let mut ok_runs: Vec<&Run> = runs.iter().filter(|r| r.penalty <= 1e-9).collect();
    if ok_runs.is_empty() {
        // keep the closest run rather than mislabel a feasible step
        let best = runs
            .iter()
            .min_by(|a, b| a.penalty.partial_cmp(&b.penalty).unwrap())
            .unwrap();
        ok_runs.push(best);
    }
    let best_h = ok_runs
        .iter()
        .map(|r| r.entropy)
        .fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&Run> = ok_runs
        .iter()
        .copied()
        .filter(|r| r.entropy >= best_h - 1e-6)
        .collect();

    // cluster the maximizing candidates by their node rows
    let mut clusters: Vec<&Run> = Vec::new();
    for r in top {
        let distinct = clusters.iter().all(|c| {
            c.q.iter()
                .zip(&r.q)
                .flat_map(|(a, b)| a.iter().zip(b))
                .map(|(x, y)| (x - y).abs())
                .fold(0.0_f64, f64::max)
                > 1e-3
        });
        if distinct {
            clusters.push(r);
        }
    }

    let vdom = domain.subdomain(&[node])?;
    let residual_ok = |x: &[f64]| -> bool {
        let (expects, _) = eval_expectations(x);
        penalties
            .iter()
            .zip(&expects)
            .all(|((_, lo, hi), &e)| e >= lo - 1e-9 && e <= hi + 1e-9)
    };
    let mut candidates = Vec::with_capacity(clusters.len());
    let mut iterations = 0;
    for run in &clusters {
        iterations = iterations.max(run.iterations);
        // snap all remaining conditionals to small rationals when that stays
        // within the constraint set; the node rows then come out exact
        let snapped_x: Option<Vec<f64>> = {
            let mut x = run.x.clone();
            let mut ok = true;
            for (b, &l) in layout.lens.iter().enumerate() {
                let o = layout.offsets[b];
                match snap_row(&x[o..o + l]) {
                    Some(r) => {
                        for (i, v) in r.iter().enumerate() {
                            x[o + i] = v.to_f64().unwrap_or(0.0);
                        }
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && residual_ok(&x) {
                Some(x)
            } else {
                None
            }
        };
        let rows_f = match &snapped_x {
            Some(x) => extract_q(x),
            None => run.q.clone(),
        };
        let mut rows = Vec::with_capacity(node_pdom.size());
        for (pa, row) in rows_f.iter().enumerate() {
            if m.prob(pa) > 0.0 || row.iter().sum::<f64>() > 0.5 {
                let row = if snapped_x.is_some() {
                    match snap_row(row) {
                        Some(w) => ProbTable::from_exact(vdom.clone(), w)?,
                        None => normalized_row(&vdom, row)?,
                    }
                } else {
                    normalized_row(&vdom, row)?
                };
                rows.push(row);
            } else {
                rows.push(ProbTable::uniform(vdom.clone()));
            }
        }
        candidates.push(ConditionalTable::new(node_pdom.clone(), vdom.clone(), rows)?);
    }

    if candidates.len() == 1 {
        Ok(StepOutcome::Unique {
            cond: candidates.pop().unwrap(),
            iterations,
        })
    } else {
        Ok(StepOutcome::Multiple {
            candidates,
            iterations,
        })
    }
}

fn normalized_row(vdom: &FiniteDomain, row: &[f64]) -> Result<ProbTable> {
    let mut w: Vec<f64> = row.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = w.iter().sum();
    if s <= 0.0 {
        return Ok(ProbTable::uniform(vdom.clone()).to_float());
    }
    for v in &mut w {
        *v /= s;
    }
    ProbTable::from_float(vdom.clone(), w)
}

// ---------------------------------------------------------------------------
// Order sensitivity
// ---------------------------------------------------------------------------

/// One fit per topological order, with the largest pairwise total-variation
/// distance between the resulting joints.
///
/// The DAG's role here is to delimit which orders are admissible; within an
/// order every node is conditioned on all of its predecessors, so the report
/// isolates pure order dependence rather than the DAG's independence
/// structure (an edgeless DAG, for instance, admits every order while fixing
/// identical parent sets for all of them).
#[derive(Debug, Clone, Serialize)]
pub struct OrderSensitivityReport {
    pub orders: Vec<Vec<String>>,
    pub results: Vec<CausalFitResult>,
    pub max_total_variation: f64,
}

pub fn order_sensitivity(
    domain: &FiniteDomain,
    constraints: &[LinearConstraint],
    dag: &Dag,
    scope: FeasibilityScope,
) -> Result<OrderSensitivityReport> {
    let orders = dag.topological_orders()?;
    let mut results = Vec::with_capacity(orders.len());
    let mut order_names = Vec::with_capacity(orders.len());
    for o in &orders {
        let names: Vec<String> = o.iter().map(|&n| dag.nodes()[n].clone()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        // complete the order into a full factorization: every node may
        // depend on each of its predecessors
        let mut edges: Vec<(&str, &str)> = Vec::new();
        for i in 0..refs.len() {
            for j in i + 1..refs.len() {
                edges.push((refs[i], refs[j]));
            }
        }
        let completed = Dag::new(dag.nodes().to_vec(), &edges)?;
        results.push(causal_maxent_dag(domain, constraints, &completed, Some(&refs), scope)?);
        order_names.push(names);
    }
    let mut max_tv = 0.0_f64;
    let joints: Vec<&ProbTable> = results.iter().filter_map(|r| r.joint.as_ref()).collect();
    for i in 0..joints.len() {
        for j in i + 1..joints.len() {
            max_tv = max_tv.max(total_variation(joints[i], joints[j])?);
        }
    }
    Ok(OrderSensitivityReport {
        orders: order_names,
        results,
        max_total_variation: max_tv,
    })
}

// ---------------------------------------------------------------------------
// Rolling-window comparison for the channel device
// ---------------------------------------------------------------------------

/// Static versus sequential priors for a device observed in a time series.
///
/// The window holds `(Yprev, Ycur, X)`: when the binary switch `X` is on, the
/// channel device constrains `(Yprev, Ycur)` to its relation; when off,
/// nothing is constrained. The static prior is uniform over all admissible
/// triples; the sequential prior distributes `Yprev` first and is uniform
/// over its values, so the two disagree on the marginal of `Yprev`.
#[derive(Debug, Clone, Serialize)]
pub struct TimeseriesCompareReport {
    pub relation: Relation,
    /// Uniform distribution over the admissible triples.
    pub static_joint: ProbTable,
    /// Its marginal on `Yprev`.
    pub static_prev_marginal: ProbTable,
    /// Marginal of `Yprev` under the sequential prior.
    pub sequential_prev_marginal: ProbTable,
}

pub fn timeseries_window_compare() -> Result<TimeseriesCompareReport> {
    let domain = FiniteDomain::new(vec![
        ("Yprev", vec!["1", "2", "3"]),
        ("Ycur", vec!["1", "2", "3"]),
        ("X", vec!["0", "1"]),
    ])?;
    let device = [(0usize, 1usize), (0, 2), (1, 0), (2, 0)];
    let mut members = Vec::new();
    for yp in 0..3 {
        for yc in 0..3 {
            // switch off: no restriction
            members.push(domain.index_of(&[yp, yc, 0]));
            if device.contains(&(yp, yc)) {
                members.push(domain.index_of(&[yp, yc, 1]));
            }
        }
    }
    let relation = Relation::from_indices(domain.clone(), members)?;
    let static_joint = ProbTable::uniform_over(domain.clone(), relation.members())?;
    let static_prev_marginal = static_joint.marginalize(&["Yprev"])?;
    let prev_values = relation.occurring_values(0);
    let prev_domain = domain.subdomain(&[0])?;
    let sequential_prev_marginal = ProbTable::uniform_over(prev_domain, &prev_values)?;
    Ok(TimeseriesCompareReport {
        relation,
        static_joint,
        static_prev_marginal,
        sequential_prev_marginal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::relation_to_constraint;
    use crate::maxent::maxent;
    use crate::pir::causal_pir_joint;
    use approx::assert_relative_eq;
    use num_rational::BigRational;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn device_relation() -> Relation {
        let d = FiniteDomain::new(vec![("X", vec!["1", "2", "3"]), ("Y", vec!["1", "2", "3"])])
            .unwrap();
        Relation::from_labels(
            d,
            &[
                vec!["1", "2"],
                vec!["1", "3"],
                vec!["2", "1"],
                vec!["3", "1"],
            ],
        )
        .unwrap()
    }

    #[test]
    fn dag_construction_and_orders() {
        let dag = Dag::new(vec!["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        assert_eq!(dag.default_order(), vec![0, 1, 2]);
        assert_eq!(dag.topological_orders().unwrap().len(), 1);
        assert!(Dag::new(vec!["A", "B"], &[("A", "B"), ("B", "A")]).is_err());
        let free = Dag::new(vec!["A", "B", "C"], &[]).unwrap();
        assert_eq!(free.topological_orders().unwrap().len(), 6);
        let collider = Dag::new(vec!["A", "B", "C"], &[("A", "C"), ("B", "C")]).unwrap();
        assert!(collider.is_topological(&[1, 0, 2]));
        assert!(!collider.is_topological(&[2, 0, 1]));
        assert_eq!(collider.descendants(0), vec![2]);
    }

    #[test]
    fn device_relation_only_matches_uniform_prior_rule() {
        let rel = device_relation();
        let c = relation_to_constraint(&rel).unwrap();
        let fit = causal_maxent_bivariate(rel.domain(), &[c], "X").unwrap();
        assert_eq!(fit.status, FitStatus::Ok);
        let joint = fit.joint.unwrap();
        let prior = causal_pir_joint(&rel, "X").unwrap();
        assert!(joint.exact_eq(&prior));
        // step entropies: H(X) = ln 3, H(Y|X) = (1/3) ln 2
        assert_relative_eq!(fit.steps[0].conditional_entropy, 3.0_f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(
            fit.steps[1].conditional_entropy,
            2.0_f64.ln() / 3.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn chain_of_three_is_exact() {
        let d = FiniteDomain::new(vec![
            ("X1", vec!["0", "1"]),
            ("X2", vec!["0", "1"]),
            ("X3", vec!["0", "1"]),
        ])
        .unwrap();
        // admissible words: 000, 100, 110, 111
        let rel = Relation::from_points(
            d.clone(),
            &[vec![0, 0, 0], vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]],
        )
        .unwrap();
        let c = relation_to_constraint(&rel).unwrap();
        let dag = Dag::new(vec!["X1", "X2", "X3"], &[("X1", "X2"), ("X2", "X3")]).unwrap();
        let fit =
            causal_maxent_dag(&d, &[c.clone()], &dag, None, FeasibilityScope::GeneralJoint).unwrap();
        assert_eq!(fit.status, FitStatus::Ok);
        let joint = fit.joint.clone().unwrap();
        assert_eq!(joint.exact_prob(d.index_of(&[0, 0, 0])).unwrap(), &ratio(1, 2));
        assert_eq!(joint.exact_prob(d.index_of(&[1, 0, 0])).unwrap(), &ratio(1, 4));
        assert_eq!(joint.exact_prob(d.index_of(&[1, 1, 0])).unwrap(), &ratio(1, 8));
        assert_eq!(joint.exact_prob(d.index_of(&[1, 1, 1])).unwrap(), &ratio(1, 8));
        // sequential entropy 1.75 bits versus 2 bits for the symmetric rule
        assert_relative_eq!(joint.entropy(), 1.75 * 2.0_f64.ln(), epsilon = 1e-12);
        let sym = maxent(&d, &[c]).unwrap().distribution;
        assert_relative_eq!(sym.entropy(), 2.0 * 2.0_f64.ln(), epsilon = 1e-9);
        // the product respects the chain structure
        assert!(fit.markov_residual(&dag).unwrap() < 1e-10);
    }

    fn parity_setup() -> (FiniteDomain, Vec<LinearConstraint>, Dag) {
        let d = FiniteDomain::new(vec![("X1", vec!["-1", "1"]), ("X2", vec!["-1", "1"])]).unwrap();
        let c = LinearConstraint::moment(d.clone(), &[(0, 1), (1, 1)], 1.0, 0.0).unwrap();
        let dag = Dag::new(vec!["X1", "X2"], &[]).unwrap();
        (d, vec![c], dag)
    }

    #[test]
    fn parity_general_scope_infeasible_at_second_step() {
        let (d, cs, dag) = parity_setup();
        let fit = causal_maxent_dag(&d, &cs, &dag, None, FeasibilityScope::GeneralJoint).unwrap();
        assert_eq!(fit.status, FitStatus::InfeasibleAtStep(1));
        // the first step still went through: uniform marginal for X1
        assert_eq!(fit.steps.len(), 1);
        let row = fit.steps[0].conditional.row(0);
        assert_relative_eq!(row.prob(0), 0.5, epsilon = 1e-9);
        assert_relative_eq!(row.prob(1), 0.5, epsilon = 1e-9);
        assert!(fit.joint.is_none());
    }

    #[test]
    fn parity_markov_scope_non_unique_point_masses() {
        let (d, cs, dag) = parity_setup();
        let fit =
            causal_maxent_dag(&d, &cs, &dag, None, FeasibilityScope::MarkovRespecting).unwrap();
        assert_eq!(fit.status, FitStatus::NonUnique);
        assert_eq!(fit.alternatives.len(), 2);
        let both = d.index_of(&[1, 1]);
        let neither = d.index_of(&[0, 0]);
        let mut hits = [false; 2];
        for alt in &fit.alternatives {
            if (alt.prob(both) - 1.0).abs() < 1e-8 {
                hits[0] = true;
            }
            if (alt.prob(neither) - 1.0).abs() < 1e-8 {
                hits[1] = true;
            }
        }
        assert!(hits[0] && hits[1], "expected the two point masses");
    }

    #[test]
    fn bivariate_matches_plain_maxent_on_separable_constraints() {
        // constraints touching only X pin the first stage to the plain
        // entropy maximizer over X
        let d = FiniteDomain::new(vec![("X", vec!["0", "1", "2"]), ("Y", vec!["0", "1"])]).unwrap();
        let cx = LinearConstraint::moment(d.clone(), &[(0, 1)], 1.2, 0.0).unwrap();
        let cy = LinearConstraint::moment(d.clone(), &[(1, 1)], 0.6, 0.0).unwrap();
        let fit = causal_maxent_bivariate(&d, &[cx, cy], "X").unwrap();
        assert_eq!(fit.status, FitStatus::Ok);
        let dx = FiniteDomain::single("X", vec!["0", "1", "2"]).unwrap();
        let cx1 = LinearConstraint::moment(dx.clone(), &[(0, 1)], 1.2, 0.0).unwrap();
        let reference = maxent(&dx, &[cx1]).unwrap().distribution;
        let marg = fit.joint.as_ref().unwrap().marginalize(&["X"]).unwrap();
        for i in 0..3 {
            assert_relative_eq!(marg.prob(i), reference.prob(i), epsilon = 1e-5);
        }
        let my = fit.joint.unwrap().marginalize(&["Y"]).unwrap();
        assert_relative_eq!(my.prob(1), 0.6, epsilon = 1e-6);
    }

    #[test]
    fn dag_reduction_matches_bivariate() {
        let d = FiniteDomain::new(vec![("X", vec!["0", "1", "2"]), ("Y", vec!["0", "1"])]).unwrap();
        let cx = LinearConstraint::moment(d.clone(), &[(0, 1)], 1.2, 0.0).unwrap();
        let cy = LinearConstraint::moment(d.clone(), &[(1, 1)], 0.6, 0.0).unwrap();
        let dag = Dag::new(vec!["X", "Y"], &[("X", "Y")]).unwrap();
        let a = causal_maxent_bivariate(&d, &[cx.clone(), cy.clone()], "X").unwrap();
        let b = causal_maxent_dag(&d, &[cx, cy], &dag, None, FeasibilityScope::GeneralJoint)
            .unwrap();
        let tv = total_variation(a.joint.as_ref().unwrap(), b.joint.as_ref().unwrap()).unwrap();
        assert!(tv < 1e-9);
    }

    #[test]
    fn order_sensitivity_no_constraints_is_zero() {
        let d = FiniteDomain::new(vec![("A", vec!["0", "1"]), ("B", vec!["0", "1"])]).unwrap();
        let dag = Dag::new(vec!["A", "B"], &[]).unwrap();
        let rep = order_sensitivity(&d, &[], &dag, FeasibilityScope::GeneralJoint).unwrap();
        assert_eq!(rep.orders.len(), 2);
        assert!(rep.max_total_variation < 1e-12);
    }

    #[test]
    fn order_sensitivity_device_directions_differ() {
        // fitting the device relation with X first or Y first gives
        // different joints: that asymmetry is the direction signal
        let rel = device_relation();
        let c = relation_to_constraint(&rel).unwrap();
        let dag = Dag::new(vec!["X", "Y"], &[]).unwrap();
        let rep =
            order_sensitivity(rel.domain(), &[c], &dag, FeasibilityScope::GeneralJoint).unwrap();
        assert_eq!(rep.results.len(), 2);
        // (2,1): 1/3 under X-first, 1/6 under Y-first
        let tv = rep.max_total_variation;
        assert!(tv > 0.15, "expected visible order dependence, got {tv}");
    }

    #[test]
    fn timeseries_window_marginals() {
        let rep = timeseries_window_compare().unwrap();
        assert_eq!(rep.relation.len(), 13);
        assert_eq!(rep.static_prev_marginal.exact_prob(0).unwrap(), &ratio(5, 13));
        assert_eq!(rep.static_prev_marginal.exact_prob(1).unwrap(), &ratio(4, 13));
        assert_eq!(rep.static_prev_marginal.exact_prob(2).unwrap(), &ratio(4, 13));
        for v in 0..3 {
            assert_eq!(rep.sequential_prev_marginal.exact_prob(v).unwrap(), &ratio(1, 3));
        }
    }

    #[test]
    fn markov_residual_detects_dependence() {
        let d = FiniteDomain::new(vec![("A", vec!["0", "1"]), ("B", vec!["0", "1"])]).unwrap();
        let dag = Dag::new(vec!["A", "B"], &[]).unwrap();
        let independent = ProbTable::uniform(d.clone());
        assert!(markov_residual(&independent, &dag).unwrap() < 1e-12);
        let correlated =
            ProbTable::uniform_over(d.clone(), &[d.index_of(&[0, 0]), d.index_of(&[1, 1])])
                .unwrap();
        assert!(markov_residual(&correlated, &dag).unwrap() > 0.5);
    }
}
