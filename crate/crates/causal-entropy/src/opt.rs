//! Small dense optimization primitives shared by the solvers: Euclidean
//! simplex projection, affine and slab projections, cyclic Dykstra iteration,
//! and a projected-gradient minimizer for constraint residuals over products
//! of simplices.

use nalgebra::{DMatrix, DVector};

/// Euclidean projection onto the probability simplex `{x >= 0, sum x = 1}`.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i + 1;
            theta = t;
        }
    }
    debug_assert!(rho > 0);
    for x in v.iter_mut().take(n) {
        *x = (*x - theta).max(0.0);
    }
}

/// Projection onto an affine subspace `{x : A x = b}` via the pseudoinverse
/// of `A A^T`, precomputed once.
pub(crate) struct AffineProjector {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram_pinv: DMatrix<f64>,
}

impl AffineProjector {
    pub(crate) fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let gram = &a * a.transpose();
        let gram_pinv = gram
            .svd(true, true)
            .pseudo_inverse(1e-12)
            .expect("svd computed with u and v");
        Self { a, b, gram_pinv }
    }

    pub(crate) fn project(&self, x: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let resid = &self.a * &xv - &self.b;
        let corr = self.a.transpose() * (&self.gram_pinv * resid);
        for (xi, ci) in x.iter_mut().zip(corr.iter()) {
            *xi -= ci;
        }
    }
}

/// One convex set for the cyclic Dykstra iteration.
pub(crate) enum ConvexSet {
    Affine(AffineProjector),
    /// `{x : lo <= a . x <= hi}`
    Slab {
        a: Vec<f64>,
        lo: f64,
        hi: f64,
        norm_sq: f64,
    },
    /// Nonnegative orthant.
    Orthant,
}

impl ConvexSet {
    pub(crate) fn slab(a: Vec<f64>, lo: f64, hi: f64) -> Self {
        let norm_sq: f64 = a.iter().map(|v| v * v).sum();
        ConvexSet::Slab { a, lo, hi, norm_sq }
    }

    fn project(&self, x: &mut [f64]) {
        match self {
            ConvexSet::Affine(p) => p.project(x),
            ConvexSet::Slab { a, lo, hi, norm_sq } => {
                if *norm_sq == 0.0 {
                    return;
                }
                let dot: f64 = a.iter().zip(x.iter()).map(|(ai, xi)| ai * xi).sum();
                let clamped = dot.clamp(*lo, *hi);
                if dot != clamped {
                    let scale = (dot - clamped) / norm_sq;
                    for (xi, ai) in x.iter_mut().zip(a) {
                        *xi -= scale * ai;
                    }
                }
            }
            ConvexSet::Orthant => {
                for xi in x.iter_mut() {
                    if *xi < 0.0 {
                        *xi = 0.0;
                    }
                }
            }
        }
    }
}

/// Cyclic Dykstra projection onto an intersection of convex sets. Returns
/// the final iterate; convergence to the true projection holds when the
/// intersection is nonempty.
pub(crate) fn dykstra(x0: &[f64], sets: &[ConvexSet], sweeps: usize, tol: f64) -> Vec<f64> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut increments = vec![vec![0.0; n]; sets.len()];
    for _ in 0..sweeps {
        let before = x.clone();
        for (s, inc) in sets.iter().zip(increments.iter_mut()) {
            let mut y: Vec<f64> = x.iter().zip(inc.iter()).map(|(xi, pi)| xi + pi).collect();
            s.project(&mut y);
            for i in 0..n {
                inc[i] = x[i] + inc[i] - y[i];
            }
            x = y;
        }
        let delta: f64 = x
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if delta < tol {
            break;
        }
    }
    x
}

/// Linear functionals with interval targets over a flat variable vector.
pub(crate) struct IntervalConstraint {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalConstraint {
    fn violation(&self, x: &[f64]) -> f64 {
        let v: f64 = self.coeffs.iter().zip(x).map(|(c, xi)| c * xi).sum();
        if v < self.lo {
            v - self.lo
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }
}

/// Block structure: the variable vector is a concatenation of simplices with
/// the given lengths (each block is projected onto its own simplex).
pub(crate) fn project_blocks(x: &mut [f64], block_lens: &[usize]) {
    let mut offset = 0;
    for &len in block_lens {
        project_simplex(&mut x[offset..offset + len]);
        offset += len;
    }
}

/// Minimize `sum_j violation_j(x)^2` over a product of simplices by projected
/// gradient descent with backtracking. Returns `(x, objective)`.
pub(crate) fn minimize_violation(
    constraints: &[IntervalConstraint],
    block_lens: &[usize],
    x0: Option<Vec<f64>>,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n: usize = block_lens.iter().sum();
    let mut x = x0.unwrap_or_else(|| {
        let mut v = vec![0.0; n];
        let mut offset = 0;
        for &len in block_lens {
            for xi in &mut v[offset..offset + len] {
                *xi = 1.0 / len as f64;
            }
            offset += len;
        }
        v
    });
    project_blocks(&mut x, block_lens);

    let objective = |x: &[f64]| -> f64 {
        constraints.iter().map(|c| c.violation(x).powi(2)).sum()
    };
    let mut fx = objective(&x);
    let mut step = 1.0;
    for _ in 0..max_iters {
        if fx <= 1e-20 {
            break;
        }
        let mut grad = vec![0.0; n];
        for c in constraints {
            let v = c.violation(&x);
            if v != 0.0 {
                for (gi, ci) in grad.iter_mut().zip(&c.coeffs) {
                    *gi += 2.0 * v * ci;
                }
            }
        }
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-16 {
            break;
        }
        // backtracking on the projected step
        let mut accepted = false;
        for _ in 0..60 {
            let mut y: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - step * gi).collect();
            project_blocks(&mut y, block_lens);
            let fy = objective(&y);
            if fy < fx - 1e-22 {
                let moved: f64 = y
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                x = y;
                fx = fy;
                accepted = true;
                step *= 1.5;
                if moved < 1e-30 {
                    return (x, fx);
                }
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_basics() {
        let mut v = vec![0.25, 0.25, 0.25, 0.25];
        project_simplex(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut v = vec![2.0, -1.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
        let mut v = vec![0.4, 0.8];
        project_simplex(&mut v);
        assert!((v[0] - 0.3).abs() < 1e-12 && (v[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn feasibility_finds_witness() {
        // E[X] = 0.3 over {0,1}
        let c = IntervalConstraint {
            coeffs: vec![0.0, 1.0],
            lo: 0.3,
            hi: 0.3,
        };
        let (x, f) = minimize_violation(&[c], &[2], None, 10_000);
        assert!(f < 1e-18);
        assert!((x[1] - 0.3).abs() < 1e-8);
    }

    #[test]
    fn infeasible_target_reported() {
        // E[X] = 2 over {0,1}: best achievable is 1, squared residual 1
        let c = IntervalConstraint {
            coeffs: vec![0.0, 1.0],
            lo: 2.0,
            hi: 2.0,
        };
        let (_, f) = minimize_violation(&[c], &[2], None, 10_000);
        assert!((f - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dykstra_reaches_intersection() {
        // affine {x0 + x1 = 1} with orthant, starting outside
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0]);
        let sets = vec![ConvexSet::Affine(AffineProjector::new(a, b)), ConvexSet::Orthant];
        let x = dykstra(&[-0.5, 0.2], &sets, 500, 1e-14);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-10);
        assert!(x.iter().all(|&v| v >= -1e-12));
    }
}
