//! A parity constraint that classical entropy maximization satisfies easily
//! but sequential fitting cannot: X1 and X2 are fair +/-1 coins with
//! E[X1 * X2] = 1 forced exactly.
//!
//! Under the general-joint feasibility scope the first step happily picks
//! the uniform marginal for X1, and the second step then discovers that no
//! conditional for X2 can deliver the product moment. Under the scope that
//! only quantifies over distributions respecting the (empty) graph, the
//! constraint already pins both marginals at the first step and the fit is
//! feasible but not unique.

use causal_entropy::causal::{causal_maxent_dag, Dag, FeasibilityScope, FitStatus};
use causal_entropy::dist::{FiniteDomain, LinearConstraint};

fn main() {
    let domain =
        FiniteDomain::new(vec![("X1", vec!["-1", "1"]), ("X2", vec!["-1", "1"])]).unwrap();
    let parity = LinearConstraint::moment(domain.clone(), &[(0, 1), (1, 1)], 1.0, 0.0).unwrap();
    let dag = Dag::new(vec!["X1", "X2"], &[]).unwrap();

    let general = causal_maxent_dag(
        &domain,
        &[parity.clone()],
        &dag,
        None,
        FeasibilityScope::GeneralJoint,
    )
    .unwrap();
    println!("general-joint scope: {:?}", general.status);
    if let FitStatus::InfeasibleAtStep(step) = general.status {
        let first = &general.steps[0];
        println!(
            "  step 1 chose the uniform marginal for {} ({:.2}, {:.2})",
            first.node,
            first.conditional.row(0).prob(0),
            first.conditional.row(0).prob(1)
        );
        println!("  step {} then had no admissible conditional", step + 1);
    }
    println!();

    let markov = causal_maxent_dag(
        &domain,
        &[parity],
        &dag,
        None,
        FeasibilityScope::MarkovRespecting,
    )
    .unwrap();
    println!("markov-respecting scope: {:?}", markov.status);
    for alt in &markov.alternatives {
        let d = alt.domain();
        let point = (0..d.size())
            .find(|&i| alt.prob(i) > 0.5)
            .map(|i| d.point_labels(i).join(", "))
            .unwrap();
        println!("  completion: point mass on ({point})");
    }
}
