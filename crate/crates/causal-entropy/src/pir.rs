//! Uniform priors over constrained outcome sets, in causal and symmetric
//! flavors, and the likelihood comparison between the two orientations.
//!
//! For a relation `S` of admissible `(cause, effect)` pairs, the causal rule
//! puts a uniform prior on the cause values occurring in `S` and then a
//! uniform conditional over the remaining effect options per cause. The
//! symmetric rule spreads mass uniformly over all members of `S`. The two
//! differ exactly when cause values admit different numbers of options, and
//! the likelihood ratio of an observation under the two orientations yields a
//! direction call.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dist::{FiniteDomain, ProbTable, Relation};
use crate::error::{Error, Result};

/// Orientation of a bivariate relation. `CauseToEffect` treats the first
/// declared variable as the cause, `EffectToCause` the second, and
/// `Symmetric` is the direction-agnostic / common-cause reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    CauseToEffect,
    EffectToCause,
    Symmetric,
}

/// Outcome of a direction inference: the orientation with strictly larger
/// likelihood, or an explicit tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InferredDirection {
    CauseToEffect,
    EffectToCause,
    Tie,
}

/// Cap on brute-force function enumeration (`|Y|^|X|`).
pub const FUNCTION_ENUMERATION_CAP: u64 = 1_000_000;

/// The function class induced by a relation: cause support, per-cause option
/// sets, and the exact number of functions mapping every supported cause
/// value to an admissible effect.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionClassSummary {
    /// Cause value indices occurring in some member of the relation.
    pub cause_support: Vec<usize>,
    /// For every cause value index: the admissible effect value indices.
    /// Empty for cause values outside the support.
    pub options: Vec<Vec<usize>>,
    /// `∏_{x in support} |options(x)| · |Y|^(|X| - |support|)`, exact.
    pub count: BigUint,
}

fn bivariate_roles(rel: &Relation, cause: &str) -> Result<(usize, usize)> {
    let domain = rel.domain();
    if domain.num_variables() != 2 {
        return Err(Error::Invalid(
            "causal/symmetric uniform priors are defined for bivariate relations".into(),
        ));
    }
    let cause_var = domain.var_index(cause)?;
    Ok((cause_var, 1 - cause_var))
}

/// Cause values occurring in some member of the relation.
pub fn cause_support(rel: &Relation, cause: &str) -> Result<Vec<usize>> {
    if rel.is_empty() {
        return Err(Error::EmptyRelation);
    }
    let (cause_var, _) = bivariate_roles(rel, cause)?;
    Ok(rel.occurring_values(cause_var))
}

/// Per-cause option sets and the exact size of the admissible function class.
pub fn function_class(rel: &Relation, cause: &str) -> Result<FunctionClassSummary> {
    if rel.is_empty() {
        return Err(Error::EmptyRelation);
    }
    let (cause_var, effect_var) = bivariate_roles(rel, cause)?;
    let domain = rel.domain();
    let k = domain.cardinality(cause_var);
    let l = domain.cardinality(effect_var);
    let mut options: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &m in rel.members() {
        let p = domain.point(m);
        options[p[cause_var]].push(p[effect_var]);
    }
    for o in &mut options {
        o.sort_unstable();
        o.dedup();
    }
    let cause_support: Vec<usize> = (0..k).filter(|&x| !options[x].is_empty()).collect();
    let mut count = BigUint::one();
    for &x in &cause_support {
        count *= BigUint::from(options[x].len());
    }
    count *= BigUint::from(l).pow((k - cause_support.len()) as u32);
    Ok(FunctionClassSummary {
        cause_support,
        options,
        count,
    })
}

/// Brute-force count of functions `f: X -> Y` with `(x, f(x))` admissible for
/// every supported cause value. Oracle for [`function_class`]; errors when
/// `|Y|^|X|` exceeds [`FUNCTION_ENUMERATION_CAP`].
pub fn function_class_brute_force(rel: &Relation, cause: &str) -> Result<BigUint> {
    if rel.is_empty() {
        return Err(Error::EmptyRelation);
    }
    let (cause_var, effect_var) = bivariate_roles(rel, cause)?;
    let domain = rel.domain();
    let k = domain.cardinality(cause_var);
    let l = domain.cardinality(effect_var);
    let total = (l as u64).checked_pow(k as u32).filter(|&t| t <= FUNCTION_ENUMERATION_CAP);
    let total = total.ok_or_else(|| {
        Error::SizeCap(format!(
            "function space |Y|^|X| = {l}^{k} exceeds {FUNCTION_ENUMERATION_CAP}"
        ))
    })?;
    let summary = function_class(rel, cause)?;
    let mut admissible: u64 = 0;
    // functions encoded as mixed-radix numbers over Y^X
    for code in 0..total {
        let mut c = code;
        let mut ok = true;
        for x in (0..k).rev() {
            let y = (c % l as u64) as usize;
            c /= l as u64;
            if summary.cause_support.contains(&x) && !summary.options[x].contains(&y) {
                ok = false;
                break;
            }
        }
        if ok {
            admissible += 1;
        }
    }
    Ok(BigUint::from(admissible))
}

/// The causal uniform prior: `P(x) = 1/|S_X|` on the cause support,
/// `P(y|x) = 1/|options(x)|` on the admissible options, exact rationals.
pub fn causal_pir_joint(rel: &Relation, cause: &str) -> Result<ProbTable> {
    if rel.is_empty() {
        return Err(Error::EmptyRelation);
    }
    let (cause_var, effect_var) = bivariate_roles(rel, cause)?;
    let summary = function_class(rel, cause)?;
    let domain = rel.domain();
    let support_size = summary.cause_support.len();
    let mut weights = vec![BigRational::zero(); domain.size()];
    for &m in rel.members() {
        let p = domain.point(m);
        let opts = summary.options[p[cause_var]].len();
        debug_assert!(summary.options[p[cause_var]].contains(&p[effect_var]));
        weights[m] = BigRational::new((1).into(), (support_size as i64 * opts as i64).into());
    }
    ProbTable::from_exact(domain.clone(), weights)
}

/// The symmetric uniform prior: equal exact weight on every member of the
/// relation.
pub fn symmetric_pir_joint(rel: &Relation) -> Result<ProbTable> {
    if rel.is_empty() {
        return Err(Error::EmptyRelation);
    }
    ProbTable::uniform_over(rel.domain().clone(), rel.members())
}

/// Exact likelihood of an i.i.d. observation list (point indices) under the
/// uniform prior for the given orientation.
///
/// An observation outside the relation is a contradiction with the relation
/// itself and reported as an error rather than silently returning zero.
pub fn pir_likelihood(rel: &Relation, observations: &[usize], direction: Direction) -> Result<BigRational> {
    for &obs in observations {
        if !rel.contains(obs) {
            let labels = rel.domain().point_labels(obs).join(",");
            return Err(Error::ObservationOutsideRelation(format!("({labels})")));
        }
    }
    let joint = match direction {
        Direction::CauseToEffect => causal_pir_joint(rel, &rel.domain().variables()[0].name)?,
        Direction::EffectToCause => causal_pir_joint(rel, &rel.domain().variables()[1].name)?,
        Direction::Symmetric => symmetric_pir_joint(rel)?,
    };
    let mut lik = BigRational::one();
    for &obs in observations {
        lik *= joint.exact_prob(obs).expect("uniform priors are exact");
    }
    Ok(lik)
}

/// Result of comparing the two orientations on an observation list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionCall {
    pub inferred: InferredDirection,
    pub likelihood_cause_to_effect: BigRational,
    pub likelihood_effect_to_cause: BigRational,
}

/// Infer the orientation with strictly larger likelihood; equal likelihoods
/// yield an explicit tie.
pub fn infer_direction(rel: &Relation, observations: &[usize]) -> Result<DirectionCall> {
    let fwd = pir_likelihood(rel, observations, Direction::CauseToEffect)?;
    let bwd = pir_likelihood(rel, observations, Direction::EffectToCause)?;
    let inferred = match fwd.cmp(&bwd) {
        std::cmp::Ordering::Greater => InferredDirection::CauseToEffect,
        std::cmp::Ordering::Less => InferredDirection::EffectToCause,
        std::cmp::Ordering::Equal => InferredDirection::Tie,
    };
    Ok(DirectionCall {
        inferred,
        likelihood_cause_to_effect: fwd,
        likelihood_effect_to_cause: bwd,
    })
}

/// The party invitation puzzle: two independent binary causes `A`, `B` and an
/// effect `C` that stays home exactly when both causes come. All triples
/// except (come, come, come) are admissible.
#[derive(Debug, Clone, Serialize)]
pub struct PearlPuzzleReport {
    /// Triple domain (A, B, C), each in {come, home}.
    pub domain: FiniteDomain,
    /// The 7 admissible triples.
    pub relation: Relation,
    /// Sequential construction: uniform over the 4 (A,B) pairs, then uniform
    /// over C's remaining options.
    pub causal_joint: ProbTable,
    /// Uniform over the 7 admissible triples.
    pub symmetric_joint: ProbTable,
    /// Marginal of (A, B) under each construction.
    pub causal_ab: ProbTable,
    pub symmetric_ab: ProbTable,
    /// Exact independence check of A and B under each construction.
    pub causal_ab_independent: bool,
    pub symmetric_ab_independent: bool,
    /// Mutual information I(A;B) in nats under the symmetric construction.
    pub symmetric_ab_mutual_information: f64,
}

fn exactly_independent(ab: &ProbTable) -> bool {
    let a = ab.marginalize(&["A"]).unwrap();
    let b = ab.marginalize(&["B"]).unwrap();
    let d = ab.domain();
    d.points().all(|pt| {
        let pab = ab.exact_prob(d.index_of(&pt)).unwrap();
        pab == &(a.exact_prob(pt[0]).unwrap() * b.exact_prob(pt[1]).unwrap())
    })
}

/// Build both constructions for the invitation puzzle and report the
/// dependence structure of the two causes under each.
pub fn pearl_puzzle() -> PearlPuzzleReport {
    let come = "come";
    let home = "home";
    let domain = FiniteDomain::new(vec![
        ("A", vec![come, home]),
        ("B", vec![come, home]),
        ("C", vec![come, home]),
    ])
    .expect("static domain");
    let all_but_ccc: Vec<usize> = (0..domain.size())
        .filter(|&i| domain.point(i) != vec![0, 0, 0])
        .collect();
    let relation = Relation::from_indices(domain.clone(), all_but_ccc).expect("static relation");

    // causal: P(a,b) = 1/4 each; C forced home when both come, else uniform
    let quarter = BigRational::new(1.into(), 4.into());
    let eighth = BigRational::new(1.into(), 8.into());
    let mut weights = vec![BigRational::zero(); domain.size()];
    for a in 0..2 {
        for b in 0..2 {
            if a == 0 && b == 0 {
                weights[domain.index_of(&[a, b, 1])] = quarter.clone();
            } else {
                weights[domain.index_of(&[a, b, 0])] = eighth.clone();
                weights[domain.index_of(&[a, b, 1])] = eighth.clone();
            }
        }
    }
    let causal_joint = ProbTable::from_exact(domain.clone(), weights).expect("static table");
    let symmetric_joint =
        ProbTable::uniform_over(domain.clone(), relation.members()).expect("static table");

    let causal_ab = causal_joint.marginalize(&["A", "B"]).unwrap();
    let symmetric_ab = symmetric_joint.marginalize(&["A", "B"]).unwrap();
    let causal_ab_independent = exactly_independent(&causal_ab);
    let symmetric_ab_independent = exactly_independent(&symmetric_ab);
    let mi = symmetric_ab.marginalize(&["A"]).unwrap().entropy()
        + symmetric_ab.marginalize(&["B"]).unwrap().entropy()
        - symmetric_ab.entropy();

    PearlPuzzleReport {
        domain,
        relation,
        causal_joint,
        symmetric_joint,
        causal_ab,
        symmetric_ab,
        causal_ab_independent,
        symmetric_ab_independent,
        symmetric_ab_mutual_information: mi,
    }
}
