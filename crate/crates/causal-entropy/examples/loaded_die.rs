//! Classical entropy maximization: a die whose mean is pinned to 4.5.

use causal_entropy::dist::{FiniteDomain, LinearConstraint};
use causal_entropy::maxent::maxent;

fn main() {
    let domain = FiniteDomain::single("X", vec!["1", "2", "3", "4", "5", "6"]).unwrap();
    let mean = LinearConstraint::moment(domain.clone(), &[(0, 1)], 4.5, 0.0).unwrap();

    let sol = maxent(&domain, &[mean]).unwrap();

    println!("max-entropy die with E[X] = 4.5");
    for face in 0..6 {
        println!("  P(X = {}) = {:.9}", face + 1, sol.distribution.prob(face));
    }
    println!();
    println!("entropy            {:.9} nats", sol.distribution.entropy());
    println!("dual multiplier    {:.9}", sol.multipliers[0]);
    println!("log partition      {:.9}", sol.log_partition);
    println!("constraint residual {:.3e}", sol.residuals[0]);
    println!("newton iterations  {}", sol.iterations);

    // the solution is exponential in the face value: each ratio of adjacent
    // probabilities is the same constant
    let r = sol.distribution.prob(1) / sol.distribution.prob(0);
    println!("adjacent-face ratio {r:.9} (constant across the die)");
}
