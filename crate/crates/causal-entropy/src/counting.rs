//! Exact combinatorics behind entropy concentration.
//!
//! The number of `n`-tuples realizing a frequency vector is a multinomial
//! coefficient; its normalized logarithm approaches the entropy of the
//! empirical distribution, so typical tuples concentrate on the
//! entropy-maximizing distribution. This module verifies that argument with
//! arbitrary-precision integers: realization counts, the count-vs-entropy
//! gap, the conditional (per-cause-row) extension, and an exhaustive census
//! of empirical distributions over constrained tuple spaces under two
//! sampling measures.

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::dist::{FiniteDomain, ProbTable, Relation};
use crate::error::{Error, Result};
use crate::pir::{causal_pir_joint, symmetric_pir_joint};

/// Cap on the number of empirical type classes a census will enumerate.
pub const CENSUS_TYPE_CAP: u64 = 10_000_000;

/// Occurrence counts `n_1, …, n_k` with `n = Σ n_j ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyVector {
    counts: Vec<u64>,
}

impl FrequencyVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.iter().sum::<u64>() == 0 {
            return Err(Error::Invalid("frequency vector needs total count >= 1".into()));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Relative frequencies as an exact distribution over an index domain.
    pub fn empirical(&self) -> Vec<BigRational> {
        let n = BigInt::from(self.n());
        self.counts
            .iter()
            .map(|&c| BigRational::new(BigInt::from(c), n.clone()))
            .collect()
    }

    /// Shannon entropy of the relative frequencies, in nats.
    pub fn entropy(&self) -> f64 {
        let n = self.n() as f64;
        self.counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }
}

/// Per-cause-row occurrence counts `n^i_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalFrequencyTable {
    rows: Vec<Vec<u64>>,
}

impl ConditionalFrequencyTable {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("conditional frequency table needs rows".into()));
        }
        let width = rows[0].len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Invalid("rows must share a nonzero width".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Exact multinomial coefficient `n! / (n_1! ⋯ n_k!)`, the number of
/// `n`-tuples with the given occurrence counts.
pub fn count_realizations(freq: &FrequencyVector) -> BigUint {
    multinomial(freq.counts())
}

fn multinomial(counts: &[u64]) -> BigUint {
    let mut remaining: u64 = counts.iter().sum();
    let mut acc = BigUint::one();
    for &c in counts {
        acc *= binomial(BigUint::from(remaining), BigUint::from(c));
        remaining -= c;
    }
    acc
}

fn log_biguint(x: &BigUint) -> f64 {
    // exact for small values; for large ones use the bit representation
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v.ln();
        }
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * 2.0_f64.ln()
}

/// `|(1/n) log #(n_1,…,n_k) − H(n_j / n)|`: how far the normalized count
/// logarithm sits from the empirical entropy. Shrinks like `O(k log n / n)`.
pub fn log_count_entropy_gap(freq: &FrequencyVector) -> f64 {
    let n = freq.n() as f64;
    let log_count = log_biguint(&count_realizations(freq));
    (log_count / n - freq.entropy()).abs()
}

/// Exact product of per-row multinomial coefficients: the number of effect
/// `n`-tuples compatible with an observed cause tuple and the given joint
/// occurrence counts.
pub fn conditional_count(
    cause_freq: &FrequencyVector,
    table: &ConditionalFrequencyTable,
) -> Result<BigUint> {
    let sums = table.row_sums();
    if sums.len() != cause_freq.counts().len()
        || sums
            .iter()
            .zip(cause_freq.counts())
            .any(|(s, c)| s != c)
    {
        return Err(Error::Invalid(
            "row sums must equal the cause frequency vector".into(),
        ));
    }
    let mut acc = BigUint::one();
    for row in table.rows() {
        if row.iter().sum::<u64>() > 0 {
            acc *= multinomial(row);
        }
    }
    Ok(acc)
}

/// Exhaustive census of empirical joints over constrained `n`-tuples.
///
/// Tuples of pairs are drawn either i.i.d. from the sequential-uniform joint
/// (uniform cause, then uniform over its options — the "causal" measure) or
/// i.i.d. uniform over the relation itself (the "symmetric" measure). For
/// every tolerance `δ` the census reports the exact probability, under each
/// measure, that the empirical joint lies within L1 distance `δ` of each of
/// the two candidate joints.
#[derive(Debug, Clone)]
pub struct ConcentrationCensus {
    pub n: u64,
    pub deltas: Vec<f64>,
    /// Number of enumerated empirical type classes.
    pub num_types: usize,
    /// Per delta: causal-measure mass within delta of the sequential joint.
    pub causal_near_causal: Vec<BigRational>,
    /// Per delta: causal-measure mass within delta of the symmetric joint.
    pub causal_near_symmetric: Vec<BigRational>,
    /// Per delta: uniform-over-Sⁿ mass within delta of the sequential joint.
    pub uniform_near_causal: Vec<BigRational>,
    /// Per delta: uniform-over-Sⁿ mass within delta of the symmetric joint.
    pub uniform_near_symmetric: Vec<BigRational>,
    /// Exact expectation of the empirical joint under the causal measure;
    /// equals the sequential-uniform joint identically.
    pub expected_causal_empirical: ProbTable,
    /// Same under the uniform-over-Sⁿ measure; equals the symmetric joint.
    pub expected_uniform_empirical: ProbTable,
}

/// Enumerate all compositions of `n` into `k` parts, calling `visit` on each.
fn for_each_composition<F: FnMut(&[u64])>(n: u64, k: usize, visit: &mut F) {
    fn rec<F: FnMut(&[u64])>(rest: u64, slot: usize, buf: &mut Vec<u64>, visit: &mut F) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            visit(buf);
            return;
        }
        for c in 0..=rest {
            buf[slot] = c;
            rec(rest - c, slot + 1, buf, visit);
        }
    }
    let mut buf = vec![0u64; k];
    rec(n, 0, &mut buf, visit);
}

fn compositions_count(n: u64, k: usize) -> BigUint {
    binomial(BigUint::from(n + k as u64 - 1), BigUint::from(k as u64 - 1))
}

fn l1(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            if d < BigRational::zero() {
                -d
            } else {
                d
            }
        })
        .sum()
}

fn pow_rational(base: &BigRational, exp: u64) -> BigRational {
    BigRational::new(
        base.numer().pow(exp as u32),
        base.denom().pow(exp as u32),
    )
}

pub fn concentration_census(
    rel: &Relation,
    cause: &str,
    n: u64,
    deltas: &[f64],
) -> Result<ConcentrationCensus> {
    if rel.is_empty() {
        return Err(Error::EmptyRelation);
    }
    if n == 0 {
        return Err(Error::Invalid("census needs n >= 1".into()));
    }
    let k = rel.len();
    if compositions_count(n, k) > BigUint::from(CENSUS_TYPE_CAP) {
        return Err(Error::SizeCap(format!(
            "census would enumerate more than {CENSUS_TYPE_CAP} type classes"
        )));
    }
    let causal = causal_pir_joint(rel, cause)?;
    let symmetric = symmetric_pir_joint(rel)?;
    let cells = rel.members().to_vec();
    let causal_p: Vec<BigRational> = cells
        .iter()
        .map(|&i| causal.exact_prob(i).unwrap().clone())
        .collect();
    let symmetric_p: Vec<BigRational> = cells
        .iter()
        .map(|&i| symmetric.exact_prob(i).unwrap().clone())
        .collect();
    let delta_r: Vec<BigRational> = deltas
        .iter()
        .map(|&d| {
            BigRational::from_float(d)
                .ok_or_else(|| Error::Invalid(format!("delta {d} is not finite")))
        })
        .collect::<Result<_>>()?;

    let mut num_types = 0usize;
    let zero = || vec![BigRational::zero(); deltas.len()];
    let mut causal_near_causal = zero();
    let mut causal_near_symmetric = zero();
    let mut uniform_near_causal = zero();
    let mut uniform_near_symmetric = zero();
    let mut expect_causal = vec![BigRational::zero(); k];
    let mut expect_uniform = vec![BigRational::zero(); k];
    let n_rat = BigRational::from_integer(BigInt::from(n));
    let uniform_tuple = pow_rational(
        &BigRational::new(BigInt::one(), BigInt::from(k as u64)),
        n,
    );

    for_each_composition(n, k, &mut |counts| {
        num_types += 1;
        let placements = BigRational::from_integer(BigInt::from(multinomial(counts)));
        // causal mass: multinomial * prod p_cell^count (zero if a zero-mass
        // cell carries counts — cannot happen here since all cells are in S)
        let mut causal_mass = placements.clone();
        for (c, p) in counts.iter().zip(&causal_p) {
            if *c > 0 {
                causal_mass *= pow_rational(p, *c);
            }
        }
        let uniform_mass = &placements * &uniform_tuple;
        let empirical: Vec<BigRational> = counts
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)) / &n_rat)
            .collect();
        let d_causal = l1(&empirical, &causal_p);
        let d_symmetric = l1(&empirical, &symmetric_p);
        for (di, dr) in delta_r.iter().enumerate() {
            if &d_causal <= dr {
                causal_near_causal[di] += &causal_mass;
                uniform_near_causal[di] += &uniform_mass;
            }
            if &d_symmetric <= dr {
                causal_near_symmetric[di] += &causal_mass;
                uniform_near_symmetric[di] += &uniform_mass;
            }
        }
        for (cell, e) in empirical.iter().enumerate() {
            expect_causal[cell] += &causal_mass * e;
            expect_uniform[cell] += &uniform_mass * e;
        }
    });

    let expand = |vals: Vec<BigRational>, domain: &FiniteDomain| -> Result<ProbTable> {
        let mut w = vec![BigRational::zero(); domain.size()];
        for (cell, v) in cells.iter().zip(vals) {
            w[*cell] = v;
        }
        ProbTable::from_exact(domain.clone(), w)
    };
    Ok(ConcentrationCensus {
        n,
        deltas: deltas.to_vec(),
        num_types,
        causal_near_causal,
        causal_near_symmetric,
        uniform_near_causal,
        uniform_near_symmetric,
        expected_causal_empirical: expand(expect_causal, rel.domain())?,
        expected_uniform_empirical: expand(expect_uniform, rel.domain())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    fn fv(counts: &[u64]) -> FrequencyVector {
        FrequencyVector::new(counts.to_vec()).unwrap()
    }

    fn device() -> Relation {
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
    fn multinomial_values() {
        assert_eq!(count_realizations(&fv(&[2, 1, 1])), BigUint::from(12u32));
        assert_eq!(count_realizations(&fv(&[7, 0, 0])), BigUint::one());
        let central = count_realizations(&fv(&[50, 50]));
        assert_eq!(
            central,
            BigUint::from_str("100891344545564193334812497256").unwrap()
        );
    }

    #[test]
    fn gap_examples_and_envelope() {
        assert_eq!(log_count_entropy_gap(&fv(&[5])), 0.0);
        let g = log_count_entropy_gap(&fv(&[50, 50]));
        assert!(g < 0.04, "gap {g}");
        assert!(g > 0.0);
        // envelope: gap <= 2 k log n / n for a spread of vectors
        for counts in [
            vec![50u64, 50],
            vec![10, 20, 30],
            vec![1, 1, 1, 1],
            vec![97, 2, 1],
        ] {
            let f = fv(&counts);
            let bound = 2.0 * counts.len() as f64 * (f.n() as f64).ln() / f.n() as f64;
            assert!(log_count_entropy_gap(&f) <= bound);
        }
    }

    #[test]
    fn gap_decreases_with_n() {
        let mut prev = f64::INFINITY;
        for t in 1..=10u64 {
            let g = log_count_entropy_gap(&fv(&[10 * t, 10 * t]));
            assert!(g < prev, "gap not decreasing at t={t}");
            prev = g;
        }
    }

    #[test]
    fn central_binomial_gap_criterion() {
        // |(1/n) log C(n, n/2) - log 2| decreasing over n = 20, 40, ..., 200
        let mut prev = f64::INFINITY;
        for n in (20..=200).step_by(20) {
            let g = log_count_entropy_gap(&fv(&[n / 2, n / 2]));
            assert!(g < prev);
            if n == 100 {
                assert!(g <= 0.04, "gap at n=100 is {g}");
            }
            prev = g;
        }
    }

    #[test]
    fn conditional_counts() {
        // all effect mass on one value per row
        let t = ConditionalFrequencyTable::new(vec![vec![3, 0], vec![0, 2]]).unwrap();
        assert_eq!(conditional_count(&fv(&[3, 2]), &t).unwrap(), BigUint::one());
        let t = ConditionalFrequencyTable::new(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(conditional_count(&fv(&[2, 2]), &t).unwrap(), BigUint::from(4u32));
        let t = ConditionalFrequencyTable::new(vec![vec![2, 2], vec![2, 2]]).unwrap();
        assert_eq!(conditional_count(&fv(&[4, 4]), &t).unwrap(), BigUint::from(36u32));
        // row-sum mismatch
        let t = ConditionalFrequencyTable::new(vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert!(conditional_count(&fv(&[3, 1]), &t).is_err());
        // single cause value reduces to the plain count
        let t = ConditionalFrequencyTable::new(vec![vec![2, 1, 1]]).unwrap();
        assert_eq!(
            conditional_count(&fv(&[4]), &t).unwrap(),
            count_realizations(&fv(&[2, 1, 1]))
        );
    }

    #[test]
    fn total_count_identity() {
        // sum over all frequency vectors of fixed n equals k^n
        for k in 1..=4usize {
            for n in [1u64, 5, 12] {
                let mut total = BigUint::zero();
                for_each_composition(n, k, &mut |c| {
                    total += multinomial(c);
                });
                assert_eq!(total, BigUint::from(k as u64).pow(n as u32));
            }
        }
    }

    #[test]
    fn census_expected_empirical_identity() {
        let rel = device();
        for n in [1u64, 4, 8] {
            let census = concentration_census(&rel, "X", n, &[0.1, 0.2, 0.4]).unwrap();
            let causal = causal_pir_joint(&rel, "X").unwrap();
            let symmetric = symmetric_pir_joint(&rel).unwrap();
            assert!(census.expected_causal_empirical.exact_eq(&causal));
            assert!(census.expected_uniform_empirical.exact_eq(&symmetric));
        }
    }

    #[test]
    fn census_concentration_ordering() {
        let rel = device();
        let census = concentration_census(&rel, "X", 8, &[0.4]).unwrap();
        // each measure concentrates near its own joint
        assert!(census.causal_near_causal[0] > census.causal_near_symmetric[0]);
        assert!(census.uniform_near_symmetric[0] > census.uniform_near_causal[0]);
        // total mass over all types is exactly 1 per measure
        let all = concentration_census(&rel, "X", 8, &[2.0]).unwrap();
        assert!(all.causal_near_causal[0].is_one());
        assert!(all.uniform_near_symmetric[0].is_one());
    }

    #[test]
    fn census_mass_monotone_in_n() {
        let rel = device();
        let mut prev = BigRational::zero();
        for n in [4u64, 8, 12] {
            let census = concentration_census(&rel, "X", n, &[0.4]).unwrap();
            assert!(census.causal_near_causal[0] >= prev);
            prev = census.causal_near_causal[0].clone();
        }
    }

    #[test]
    fn census_size_cap() {
        let rel = device();
        assert!(matches!(
            concentration_census(&rel, "X", 5000, &[0.4]),
            Err(Error::SizeCap(_))
        ));
    }
}
