//! Weighted sets: generators, counting functions and structural predicates.

mod profile;
mod structure;

pub use profile::{
    check_condition_c, estimate_kappa, ConditionCReport, DistributionProfile, IntRow, KappaRule,
    PairVerdict, ProfileMode,
};
pub use structure::{
    check_convexity, log_density, verify_sidon, Convexity, LogDensity, SidonReport,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith;
use crate::error::{invalid, Error, Result};

/// Which generator produced a set; closed-form distribution data hangs off it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Naturals,
    Primes,
    Ellipsephic { p: u64, digits: Vec<u64> },
    Smooth { q: u64 },
    Explicit,
}

/// A recipe for a weighted set.
#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec {
    Naturals,
    Primes,
    Ellipsephic { p: u64, digits: Vec<u64> },
    Smooth { q: u64 },
    Explicit { pairs: Vec<(u64, BigRational)> },
    FromFile { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
enum Weights {
    Unit,
    Rational(Vec<BigRational>),
}

/// A finite prefix of a weighted sequence `(a_n)` on `[1, bound]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSet {
    bound: u64,
    support: Vec<u64>,
    weights: Weights,
    label: String,
    origin: Origin,
}

impl WeightedSet {
    /// Unit-weight set on the given support.
    pub fn unit(bound: u64, mut support: Vec<u64>, label: impl Into<String>) -> Result<Self> {
        support.sort_unstable();
        support.dedup();
        if support.first() == Some(&0) {
            return Err(invalid("support must lie in [1, X]"));
        }
        if let Some(&m) = support.last() {
            if m > bound {
                return Err(Error::BoundExceeded { x: m, bound });
            }
        }
        Ok(WeightedSet {
            bound,
            support,
            weights: Weights::Unit,
            label: label.into(),
            origin: Origin::Explicit,
        })
    }

    /// Set from explicit `(n, a_n)` pairs. Zero weights are dropped.
    pub fn from_pairs(
        bound: u64,
        mut pairs: Vec<(u64, BigRational)>,
        label: impl Into<String>,
    ) -> Result<Self> {
        pairs.sort_by_key(|(n, _)| *n);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(invalid(format!("duplicate element {}", w[0].0)));
            }
        }
        let mut support = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        for (n, a) in pairs {
            if a.is_negative() {
                return Err(invalid(format!("negative weight at {n}")));
            }
            if a.is_zero() {
                continue;
            }
            if n == 0 {
                return Err(invalid("support must lie in [1, X]"));
            }
            if n > bound {
                return Err(Error::BoundExceeded { x: n, bound });
            }
            support.push(n);
            weights.push(a);
        }
        let weights = if weights.iter().all(|a| a.is_one()) {
            Weights::Unit
        } else {
            Weights::Rational(weights)
        };
        Ok(WeightedSet {
            bound,
            support,
            weights,
            label: label.into(),
            origin: Origin::Explicit,
        })
    }

    fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    /// Sorted support.
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn has_unit_weights(&self) -> bool {
        matches!(self.weights, Weights::Unit)
    }

    /// Weight of the `i`-th support element.
    pub fn weight_at(&self, i: usize) -> BigRational {
        match &self.weights {
            Weights::Unit => BigRational::one(),
            Weights::Rational(w) => w[i].clone(),
        }
    }

    /// `a_n`, zero off the support.
    pub fn weight(&self, n: u64) -> BigRational {
        match self.support.binary_search(&n) {
            Ok(i) => self.weight_at(i),
            Err(_) => BigRational::zero(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, BigRational)> + '_ {
        self.support
            .iter()
            .enumerate()
            .map(move |(i, &n)| (n, self.weight_at(i)))
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        match &self.weights {
            Weights::Unit => vec![1.0; self.support.len()],
            Weights::Rational(w) => w.iter().map(arith::rat_to_f64).collect(),
        }
    }

    pub fn max_weight(&self) -> BigRational {
        match &self.weights {
            Weights::Unit if self.is_empty() => BigRational::zero(),
            Weights::Unit => BigRational::one(),
            Weights::Rational(w) => w.iter().max().cloned().unwrap_or_else(BigRational::zero),
        }
    }

    /// Integer numerators over the least common denominator of all weights.
    pub fn integer_weights(&self) -> (Vec<BigUint>, BigUint) {
        match &self.weights {
            Weights::Unit => (vec![BigUint::one(); self.support.len()], BigUint::one()),
            Weights::Rational(w) => {
                let den = w
                    .iter()
                    .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
                let nums = w
                    .iter()
                    .map(|a| (a.numer() * (&den / a.denom())).to_biguint().unwrap())
                    .collect();
                (nums, den.to_biguint().unwrap())
            }
        }
    }

    /// Restriction to `[1, x]`.
    pub fn truncate(&self, x: u64) -> Result<Self> {
        if x > self.bound {
            return Err(Error::BoundExceeded { x, bound: self.bound });
        }
        let end = self.support.partition_point(|&n| n <= x);
        let weights = match &self.weights {
            Weights::Unit => Weights::Unit,
            Weights::Rational(w) => Weights::Rational(w[..end].to_vec()),
        };
        Ok(WeightedSet {
            bound: x,
            support: self.support[..end].to_vec(),
            weights,
            label: self.label.clone(),
            origin: self.origin.clone(),
        })
    }

    /// All weights multiplied by a positive rational `c`.
    pub fn scaled(&self, c: &BigRational) -> Result<Self> {
        if !c.is_positive() {
            return Err(invalid("scale must be positive"));
        }
        let w = (0..self.len()).map(|i| self.weight_at(i) * c).collect();
        let mut out = self.clone();
        out.weights = Weights::Rational(w);
        if c.is_one() {
            out.weights = self.weights.clone();
        }
        Ok(out)
    }

    /// `A(x) = sum of a_n over n <= x`, exactly.
    pub fn count_up_to(&self, x: u64) -> Result<BigRational> {
        if x > self.bound {
            return Err(Error::BoundExceeded { x, bound: self.bound });
        }
        let end = self.support.partition_point(|&n| n <= x);
        Ok(match &self.weights {
            Weights::Unit => BigRational::from_integer(BigInt::from(end)),
            Weights::Rational(w) => w[..end].iter().sum(),
        })
    }

    /// `A(x)` in floating point.
    pub fn count_up_to_f64(&self, x: f64) -> f64 {
        let end = self.support.partition_point(|&n| (n as f64) <= x);
        match &self.weights {
            Weights::Unit => end as f64,
            Weights::Rational(w) => w[..end].iter().map(arith::rat_to_f64).sum(),
        }
    }

    /// Prefix masses `A(x_i)` at every support point.
    pub fn cumulative_masses(&self) -> Vec<BigRational> {
        let mut acc = BigRational::zero();
        (0..self.len())
            .map(|i| {
                acc += self.weight_at(i);
                acc.clone()
            })
            .collect()
    }

    /// `A(q, b; x)`: weighted count of `n <= x` with `n = b mod q`.
    pub fn residue_count(&self, q: u64, b: u64, x: u64) -> Result<BigRational> {
        if q == 0 || b >= q {
            return Err(Error::ResidueOutOfRange { b, q });
        }
        if x > self.bound {
            return Err(Error::BoundExceeded { x, bound: self.bound });
        }
        let mut acc = BigRational::zero();
        for (i, &n) in self.support.iter().enumerate() {
            if n > x {
                break;
            }
            if n % q == b {
                acc += self.weight_at(i);
            }
        }
        Ok(acc)
    }

    /// Serialises to the set file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.label);
        let _ = writeln!(out, "# bound {}", self.bound);
        for (n, a) in self.iter() {
            if a.is_one() {
                let _ = writeln!(out, "{n}");
            } else {
                let _ = writeln!(out, "{n}\t{}/{}", a.numer(), a.denom());
            }
        }
        out
    }
}

/// Parses the set file format into `(n, a_n)` pairs.
pub fn parse_set_file(text: &str) -> Result<Vec<(u64, BigRational)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
        let n_field = fields.next().unwrap_or("");
        let n: u64 = n_field.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("bad element {n_field:?}"),
        })?;
        let w = match fields.next() {
            None => BigRational::one(),
            Some(f) => arith::parse_rational(f).ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("bad weight {f:?}"),
            })?,
        };
        if let Some(extra) = fields.next() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("unexpected field {extra:?}"),
            });
        }
        if w.is_negative() {
            return Err(Error::Parse {
                line: lineno,
                msg: "negative weight".into(),
            });
        }
        pairs.push((n, w));
    }
    Ok(pairs)
}

/// Builds the weighted set described by `spec`, truncated at `x`.
pub fn generate_set(spec: &SetSpec, x: u64) -> Result<WeightedSet> {
    if x < 2 {
        return Err(invalid("X must be at least 2"));
    }
    match spec {
        SetSpec::Naturals => {
            Ok(WeightedSet::unit(x, (1..=x).collect(), "naturals")?.with_origin(Origin::Naturals))
        }
        SetSpec::Primes => {
            Ok(WeightedSet::unit(x, arith::primes_up_to(x), "primes")?.with_origin(Origin::Primes))
        }
        SetSpec::Ellipsephic { p, digits } => {
            let digits = check_digits(*p, digits)?;
            let label = format!("ellipsephic(p={p},D={digits:?})");
            let support = ellipsephic_support(*p, &digits, x);
            Ok(WeightedSet::unit(x, support, label)?.with_origin(Origin::Ellipsephic {
                p: *p,
                digits,
            }))
        }
        SetSpec::Smooth { q } => {
            let ps = arith::primes_up_to(q.saturating_sub(1));
            let support = (1..=x)
                .filter(|&n| {
                    let mut m = n;
                    for &p in &ps {
                        while m % p == 0 {
                            m /= p;
                        }
                    }
                    m == 1
                })
                .collect();
            Ok(WeightedSet::unit(x, support, format!("smooth(Q={q})"))?
                .with_origin(Origin::Smooth { q: *q }))
        }
        SetSpec::Explicit { pairs } => {
            let kept = pairs.iter().filter(|(n, _)| *n <= x).cloned().collect();
            WeightedSet::from_pairs(x, kept, "explicit")
        }
        SetSpec::FromFile { path } => {
            let text = std::fs::read_to_string(path)?;
            let pairs = parse_set_file(&text)?;
            let kept = pairs.into_iter().filter(|(n, _)| *n <= x).collect();
            WeightedSet::from_pairs(x, kept, format!("file({})", path.display()))
        }
    }
}

/// Validated, sorted digit set.
pub(crate) fn check_digits(p: u64, digits: &[u64]) -> Result<Vec<u64>> {
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if digits.is_empty() {
        return Err(invalid("digit set must be nonempty"));
    }
    for &d in digits {
        if d >= p {
            return Err(Error::InvalidDigit { digit: d, p });
        }
    }
    let set: BTreeSet<u64> = digits.iter().copied().collect();
    Ok(set.into_iter().collect())
}

fn ellipsephic_support(p: u64, digits: &[u64], x: u64) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    let mut frontier = vec![0u64];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            for &d in digits {
                let Some(w) = v.checked_mul(p).and_then(|w| w.checked_add(d)) else {
                    continue;
                };
                if w == 0 || w > x || !seen.insert(w) {
                    continue;
                }
                next.push(w);
            }
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

/// Float view of an exact rational count.
pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn generators_small() {
        let p = generate_set(&SetSpec::Primes, 10).unwrap();
        assert_eq!(p.support(), &[2, 3, 5, 7]);
        assert!(p.has_unit_weights());
        let e = generate_set(
            &SetSpec::Ellipsephic {
                p: 3,
                digits: vec![0, 1],
            },
            10,
        )
        .unwrap();
        assert_eq!(e.support(), &[1, 3, 4, 9, 10]);
        let n = generate_set(&SetSpec::Naturals, 5).unwrap();
        assert_eq!(n.support(), &[1, 2, 3, 4, 5]);
        let s = generate_set(&SetSpec::Smooth { q: 5 }, 20).unwrap();
        assert_eq!(s.support(), &[1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
    }

    #[test]
    fn generator_errors() {
        assert!(matches!(
            generate_set(&SetSpec::Ellipsephic { p: 4, digits: vec![0] }, 10),
            Err(Error::NotPrime(4))
        ));
        assert!(matches!(
            generate_set(&SetSpec::Ellipsephic { p: 3, digits: vec![3] }, 10),
            Err(Error::InvalidDigit { digit: 3, p: 3 })
        ));
        assert!(generate_set(&SetSpec::Naturals, 1).is_err());
    }

    #[test]
    fn counting_functions() {
        let p = generate_set(&SetSpec::Primes, 10).unwrap();
        assert_eq!(p.count_up_to(10).unwrap(), r(4, 1));
        let n = generate_set(&SetSpec::Naturals, 5).unwrap();
        assert_eq!(n.count_up_to(5).unwrap(), r(5, 1));
        let e = generate_set(&SetSpec::Ellipsephic { p: 3, digits: vec![0, 1] }, 10).unwrap();
        assert_eq!(e.count_up_to(9).unwrap(), r(4, 1));
        assert!(matches!(n.count_up_to(6), Err(Error::BoundExceeded { .. })));

        let p100 = generate_set(&SetSpec::Primes, 100).unwrap();
        assert_eq!(p100.residue_count(3, 1, 100).unwrap(), r(11, 1));
        let n12 = generate_set(&SetSpec::Naturals, 12).unwrap();
        assert_eq!(n12.residue_count(4, 0, 12).unwrap(), r(3, 1));
        assert_eq!(e.residue_count(3, 2, 10).unwrap(), r(0, 1));
        assert!(matches!(
            e.residue_count(3, 3, 10),
            Err(Error::ResidueOutOfRange { .. })
        ));
    }

    #[test]
    fn set_file_parse_errors_carry_line_numbers() {
        let text = "# header\n1\n2\t3/2\n\nx\t1\n";
        match parse_set_file(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let ok = parse_set_file("# c\n4\t1/3\n7\n").unwrap();
        assert_eq!(ok, vec![(4, r(1, 3)), (7, r(1, 1))]);
    }

    #[test]
    fn weights_scale_and_integerise() {
        let s = WeightedSet::from_pairs(10, vec![(2, r(3, 2)), (5, r(1, 3))], "w").unwrap();
        let (nums, den) = s.integer_weights();
        assert_eq!(den, BigUint::from(6u32));
        assert_eq!(nums, vec![BigUint::from(9u32), BigUint::from(2u32)]);
        let t = s.scaled(&r(2, 1)).unwrap();
        assert_eq!(t.weight(2), r(3, 1));
        assert_eq!(t.count_up_to(10).unwrap(), r(11, 3));
    }
}
