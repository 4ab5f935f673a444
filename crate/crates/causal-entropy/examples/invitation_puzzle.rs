//! Two guests decide independently whether to come; a third comes exactly
//! when at least one of the first two stays home. Symmetric reasoning over
//! the seven admissible outcomes couples the two independent guests, while
//! the sequential prior keeps them independent.

use causal_entropy::pir::pearl_puzzle;

fn main() {
    let r = pearl_puzzle();

    println!("admissible outcomes (A, B, C):");
    let d = &r.domain;
    for &m in r.relation.members() {
        println!("  {}", d.point_labels(m).join(", "));
    }
    println!();

    println!("sequential prior (A, then B, then C):");
    println!("  P(A come, B come) = {}", r.causal_ab.exact_prob(0).unwrap());
    println!("  A and B independent: {}", r.causal_ab_independent);
    let both_forced = d.index_of(&[0, 0, 1]);
    println!(
        "  P(A come, B come, C home) = {}   (C is forced home)",
        r.causal_joint.exact_prob(both_forced).unwrap()
    );
    println!();

    println!("symmetric prior (uniform over the seven outcomes):");
    println!("  P(A come, B come) = {}", r.symmetric_ab.exact_prob(0).unwrap());
    println!("  A and B independent: {}", r.symmetric_ab_independent);
    println!(
        "  I(A; B) = {:.6} nats",
        r.symmetric_ab_mutual_information
    );
}
