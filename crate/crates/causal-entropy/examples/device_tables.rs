//! The ball device: four admissible input/output pairs on a 3 x 3 domain.
//! Builds the sequential (cause-first) prior and the symmetric prior over
//! the relation, then infers the causal direction from a single observation.

use causal_entropy::dist::{FiniteDomain, Relation};
use causal_entropy::pir::{causal_pir_joint, infer_direction, symmetric_pir_joint};
use causal_entropy::ProbTable;

fn print_table(title: &str, t: &ProbTable) {
    println!("{title}");
    let d = t.domain();
    for idx in 0..d.size() {
        let p = t.prob(idx);
        if p == 0.0 {
            continue;
        }
        let labels = d.point_labels(idx).join(", ");
        match t.exact_prob(idx) {
            Some(q) => println!("  ({labels})  {q}"),
            None => println!("  ({labels})  {p:.6}"),
        }
    }
    println!();
}

fn main() {
    let domain =
        FiniteDomain::new(vec![("X", vec!["1", "2", "3"]), ("Y", vec!["1", "2", "3"])]).unwrap();
    let relation = Relation::from_labels(
        domain.clone(),
        &[
            vec!["1", "2"],
            vec!["1", "3"],
            vec!["2", "1"],
            vec!["3", "1"],
        ],
    )
    .unwrap();

    // Cause first: uniform over the three input values, then uniform over
    // whatever outputs each input admits. Input 1 has two options, so its
    // pairs get 1/6 each; inputs 2 and 3 are forced, so their pairs get 1/3.
    let causal = causal_pir_joint(&relation, "X").unwrap();
    print_table("sequential prior, X as cause:", &causal);

    let symmetric = symmetric_pir_joint(&relation).unwrap();
    print_table("symmetric prior (uniform over the relation):", &symmetric);

    // One observed pair is enough to prefer a direction: (2, 1) has
    // probability 1/3 if X drives Y but only 1/6 the other way around.
    let obs = vec![domain.index_of(&[1, 0])];
    let call = infer_direction(&relation, &obs).unwrap();
    println!("observed the pair (2, 1)");
    println!("  likelihood if X -> Y: {}", call.likelihood_cause_to_effect);
    println!("  likelihood if Y -> X: {}", call.likelihood_effect_to_cause);
    println!("  inferred: {:?}", call.inferred);
}
