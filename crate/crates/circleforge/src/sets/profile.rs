use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Value};

use super::{Origin, WeightedSet};
use crate::arith;
use crate::error::{invalid, Error, Result};

/// How the coefficients were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Exact,
    Empirical,
}

/// Source of the coefficients `kappa(q, b)`.
#[derive(Clone, Debug, PartialEq)]
pub enum KappaRule {
    /// `1/q` for every class.
    Classical,
    /// `1/phi(q)` on reduced classes.
    Primes,
    /// `1/(q1 r^h)` on classes whose `h` low base-`p` digits lie in the digit set.
    Ellipsephic { p: u64, digits: Vec<u64> },
    /// Explicit rows, one per profiled modulus.
    Table(BTreeMap<u64, Vec<BigRational>>),
}

/// A row of `kappa(q, .)` as integer numerators over one denominator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntRow {
    pub den: BigUint,
    pub num: Vec<BigUint>,
}

/// Distribution data for a set over residue classes.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionProfile {
    rule: KappaRule,
    level: u64,
    mode: ProfileMode,
    error_bound: BTreeMap<u64, BigRational>,
}

impl DistributionProfile {
    /// `kappa = 1/q` up to `level`.
    pub fn classical(level: u64) -> Self {
        Self::exact(KappaRule::Classical, level)
    }

    pub fn primes(level: u64) -> Self {
        Self::exact(KappaRule::Primes, level)
    }

    pub fn ellipsephic(p: u64, digits: &[u64], level: u64) -> Result<Self> {
        let digits = super::check_digits(p, digits)?;
        Ok(Self::exact(KappaRule::Ellipsephic { p, digits }, level))
    }

    fn exact(rule: KappaRule, level: u64) -> Self {
        DistributionProfile {
            rule,
            level,
            mode: ProfileMode::Exact,
            error_bound: BTreeMap::new(),
        }
    }

    /// Profile from explicit rows; every row must sum to one.
    pub fn from_table(table: BTreeMap<u64, Vec<BigRational>>) -> Result<Self> {
        for (&q, row) in &table {
            if q == 0 || row.len() as u64 != q {
                return Err(invalid(format!("row for q = {q} has {} entries", row.len())));
            }
            if row.iter().any(|k| k.is_negative()) {
                return Err(invalid(format!("negative kappa at q = {q}")));
            }
            let total: BigRational = row.iter().sum();
            if !total.is_one() {
                return Err(invalid(format!("kappa({q}, .) sums to {total}")));
            }
        }
        let level = table.keys().next_back().copied().unwrap_or(0);
        Ok(DistributionProfile {
            rule: KappaRule::Table(table),
            level,
            mode: ProfileMode::Empirical,
            error_bound: BTreeMap::new(),
        })
    }

    pub fn rule(&self) -> &KappaRule {
        &self.rule
    }

    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    /// Largest profiled modulus.
    pub fn level_qd(&self) -> u64 {
        self.level
    }

    pub fn is_profiled(&self, q: u64) -> bool {
        match &self.rule {
            KappaRule::Table(t) => t.contains_key(&q),
            _ => q >= 1 && q <= self.level,
        }
    }

    pub fn moduli(&self) -> Vec<u64> {
        match &self.rule {
            KappaRule::Table(t) => t.keys().copied().collect(),
            _ => (1..=self.level).collect(),
        }
    }

    /// Observed `max_b |A(q,b;X) - kappa(q,b) A(X)|` over the estimation grid.
    pub fn error_bound(&self, q: u64) -> Option<&BigRational> {
        self.error_bound.get(&q)
    }

    pub fn error_bounds(&self) -> &BTreeMap<u64, BigRational> {
        &self.error_bound
    }

    pub fn max_error_bound(&self) -> Option<BigRational> {
        self.error_bound.values().max().cloned()
    }

    fn check(&self, q: u64) -> Result<()> {
        if self.is_profiled(q) {
            Ok(())
        } else {
            Err(Error::UnprofiledModulus(q))
        }
    }

    pub fn kappa(&self, q: u64, b: u64) -> Result<BigRational> {
        self.check(q)?;
        if b >= q {
            return Err(Error::ResidueOutOfRange { b, q });
        }
        Ok(match &self.rule {
            KappaRule::Table(t) => t[&q][b as usize].clone(),
            _ => {
                let row = self.kappa_int_row(q)?;
                BigRational::new(
                    BigInt::from(row.num[b as usize].clone()),
                    BigInt::from(row.den),
                )
            }
        })
    }

    pub fn kappa_row(&self, q: u64) -> Result<Vec<BigRational>> {
        self.check(q)?;
        if let KappaRule::Table(t) = &self.rule {
            return Ok(t[&q].clone());
        }
        let row = self.kappa_int_row(q)?;
        let den = BigInt::from(row.den);
        Ok(row
            .num
            .into_iter()
            .map(|n| BigRational::new(BigInt::from(n), den.clone()))
            .collect())
    }

    /// `kappa(q, .)` as integer numerators over a common denominator.
    pub fn kappa_int_row(&self, q: u64) -> Result<IntRow> {
        self.check(q)?;
        let qs = q as usize;
        Ok(match &self.rule {
            KappaRule::Classical => IntRow {
                den: BigUint::from(q),
                num: vec![BigUint::one(); qs],
            },
            KappaRule::Primes => IntRow {
                den: BigUint::from(arith::totient(q)),
                num: (0..q)
                    .map(|b| BigUint::from((arith::gcd(b, q) == 1) as u32))
                    .collect(),
            },
            KappaRule::Ellipsephic { p, digits } => {
                let (q1, h, ph) = split_prime_power(q, *p);
                let mut admissible = vec![false; ph as usize];
                for (low, slot) in admissible.iter_mut().enumerate() {
                    let mut v = low as u64;
                    let mut ok = true;
                    for _ in 0..h {
                        if digits.binary_search(&(v % p)).is_err() {
                            ok = false;
                            break;
                        }
                        v /= p;
                    }
                    *slot = ok;
                }
                let r = BigUint::from(digits.len());
                IntRow {
                    den: BigUint::from(q1) * r.pow(h),
                    num: (0..q)
                        .map(|b| BigUint::from(admissible[(b % ph) as usize] as u32))
                        .collect(),
                }
            }
            KappaRule::Table(t) => {
                let row = &t[&q];
                let den = row.iter().fold(BigInt::one(), |acc, k| acc.lcm(k.denom()));
                IntRow {
                    num: row
                        .iter()
                        .map(|k| (k.numer() * (&den / k.denom())).to_biguint().unwrap())
                        .collect(),
                    den: den.to_biguint().unwrap(),
                }
            }
        })
    }

    pub fn kappa_f64_row(&self, q: u64) -> Result<Vec<f64>> {
        let row = self.kappa_int_row(q)?;
        let den = row.den.to_f64().unwrap_or(f64::INFINITY);
        Ok(row
            .num
            .iter()
            .map(|n| n.to_f64().unwrap_or(0.0) / den)
            .collect())
    }

    /// Whether `kappa(q, .)` takes a single value on its support.
    pub fn is_equidistributed_shape(&self, q: u64) -> Result<bool> {
        let row = self.kappa_int_row(q)?;
        let mut nz = row.num.iter().filter(|n| !n.is_zero());
        let first = nz.next();
        Ok(match first {
            Some(f) => nz.all(|n| n == f),
            None => false,
        })
    }

    /// JSON of the form `{q: {b: "num/den"}}` for profiled `q <= max_q`.
    pub fn to_json(&self, max_q: u64) -> Result<Value> {
        let mut out = Map::new();
        for q in self.moduli().into_iter().filter(|&q| q <= max_q) {
            let mut row = Map::new();
            for (b, k) in self.kappa_row(q)?.iter().enumerate() {
                row.insert(b.to_string(), Value::String(arith::format_rational(k)));
            }
            out.insert(q.to_string(), Value::Object(row));
        }
        Ok(Value::Object(out))
    }

    /// Reads the `{q: {b: "num/den"}}` form back as a table profile.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| invalid("kappa JSON must be an object"))?;
        let mut table = BTreeMap::new();
        for (qs, row) in obj {
            let q: u64 = qs.parse().map_err(|_| invalid(format!("bad modulus {qs:?}")))?;
            let row = row
                .as_object()
                .ok_or_else(|| invalid(format!("row {qs} must be an object")))?;
            let mut v = vec![BigRational::zero(); q as usize];
            for (bs, k) in row {
                let b: u64 = bs.parse().map_err(|_| invalid(format!("bad residue {bs:?}")))?;
                if b >= q {
                    return Err(Error::ResidueOutOfRange { b, q });
                }
                let k = k
                    .as_str()
                    .and_then(arith::parse_rational)
                    .ok_or_else(|| invalid(format!("bad kappa at ({q},{b})")))?;
                v[b as usize] = k;
            }
            table.insert(q, v);
        }
        Self::from_table(table)
    }
}

/// `q = q1 p^h` with `p` not dividing `q1`; returns `(q1, h, p^h)`.
fn split_prime_power(q: u64, p: u64) -> (u64, u32, u64) {
    let mut q1 = q;
    let mut h = 0;
    let mut ph = 1;
    while q1 % p == 0 {
        q1 /= p;
        h += 1;
        ph *= p;
    }
    (q1, h, ph)
}

/// Closed-form ellipsephic coefficients need the digit differences to have gcd one.
fn ellipsephic_closed_form_valid(digits: &[u64]) -> bool {
    let g = digits.iter().fold(0u64, |g, &d| arith::gcd(g, d - digits[0]));
    g == 1
}

/// Estimates `kappa(q, b)` for `q <= q_max` from the set, together with the
/// observed error proxy over `grid`.
pub fn estimate_kappa(a: &WeightedSet, q_max: u64, grid: &[u64]) -> Result<DistributionProfile> {
    if grid.is_empty() {
        return Err(invalid("empty grid"));
    }
    if q_max == 0 {
        return Err(invalid("q_max must be at least 1"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid must be strictly increasing"));
    }
    let x_max = *grid.last().unwrap();
    if x_max > a.bound() {
        return Err(Error::BoundExceeded {
            x: x_max,
            bound: a.bound(),
        });
    }
    let (weights, den) = a.integer_weights();
    let den_r = BigRational::from_integer(BigInt::from(den));

    // counts[q-1][b] = numerator of A(q, b; X) while sweeping X upward.
    let mut counts: Vec<Vec<BigUint>> = (1..=q_max)
        .map(|q| vec![BigUint::zero(); q as usize])
        .collect();
    let mut total = BigUint::zero();
    let mut snapshots: Vec<(Vec<Vec<BigUint>>, BigUint)> = Vec::with_capacity(grid.len());
    let support = a.support();
    let mut i = 0;
    for &x in grid {
        while i < support.len() && support[i] <= x {
            let n = support[i];
            for q in 1..=q_max {
                counts[(q - 1) as usize][(n % q) as usize] += &weights[i];
            }
            total += &weights[i];
            i += 1;
        }
        snapshots.push((counts.clone(), total.clone()));
    }
    let (final_counts, final_total) = snapshots.last().unwrap();
    if final_total.is_zero() {
        return Err(invalid("A(X_max) = 0"));
    }

    let closed = match a.origin() {
        Origin::Naturals => Some(KappaRule::Classical),
        Origin::Primes => Some(KappaRule::Primes),
        Origin::Ellipsephic { p, digits } if ellipsephic_closed_form_valid(digits) => {
            Some(KappaRule::Ellipsephic {
                p: *p,
                digits: digits.clone(),
            })
        }
        _ => None,
    };
    let mut profile = match closed {
        Some(rule) => DistributionProfile::exact(rule, q_max),
        None => {
            let mut table = BTreeMap::new();
            let tot = BigInt::from(final_total.clone());
            for q in 1..=q_max {
                let cap = BigInt::from(arith::lcm(q, 720));
                let snapped: Vec<BigRational> = final_counts[(q - 1) as usize]
                    .iter()
                    .map(|c| {
                        let exact = BigRational::new(BigInt::from(c.clone()), tot.clone());
                        arith::limit_denominator(&exact, &cap)
                    })
                    .collect();
                let s: BigRational = snapped.iter().sum();
                table.insert(q, snapped.into_iter().map(|k| k / &s).collect());
            }
            let mut p = DistributionProfile::from_table(table)?;
            p.level = q_max;
            p
        }
    };

    for q in 1..=q_max {
        let row = profile.kappa_row(q)?;
        let mut worst = BigRational::zero();
        for (snap, tot) in &snapshots {
            let tot = BigRational::from_integer(BigInt::from(tot.clone()));
            for (b, k) in row.iter().enumerate() {
                let c = BigRational::from_integer(BigInt::from(snap[(q - 1) as usize][b].clone()));
                let dev = (c - k * &tot).abs() / &den_r;
                if dev > worst {
                    worst = dev;
                }
            }
        }
        profile.error_bound.insert(q, worst);
    }
    Ok(profile)
}

/// Verdict for one coprime pair in the multiplicativity check of `kappa`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PairVerdict {
    pub q: u64,
    pub q2: u64,
    pub checked: u64,
    pub holds: bool,
    /// Up to ten failing `(b, b2)` pairs.
    pub failures: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConditionCReport {
    pub pairs: Vec<PairVerdict>,
    /// Per modulus: does `kappa(q, .)` take one value on its support.
    pub equidistributed_shape: BTreeMap<u64, bool>,
    pub all_hold: bool,
}

/// Checks `kappa(qq2, q b2 + q2 b) = kappa(q, q2 b) kappa(q2, q b2)` exactly.
pub fn check_condition_c(
    profile: &DistributionProfile,
    pairs: &[(u64, u64)],
) -> Result<ConditionCReport> {
    let mut verdicts = Vec::new();
    let mut shape = BTreeMap::new();
    for &(q, q2) in pairs {
        if arith::gcd(q, q2) != 1 {
            return Err(Error::NotCoprime(q, q2));
        }
        let n = q * q2;
        let (r1, r2, rn) = (
            profile.kappa_row(q)?,
            profile.kappa_row(q2)?,
            profile.kappa_row(n)?,
        );
        let mut failures = Vec::new();
        let mut bad = false;
        for b in 0..q {
            for b2 in 0..q2 {
                let l = ((q as u128 * b2 as u128 + q2 as u128 * b as u128) % n as u128) as usize;
                let lhs = &rn[l];
                let rhs = &r1[((q2 * b) % q) as usize] * &r2[((q * b2) % q2) as usize];
                if *lhs != rhs {
                    bad = true;
                    if failures.len() < 10 {
                        failures.push((b, b2));
                    }
                }
            }
        }
        for m in [q, q2, n] {
            if let std::collections::btree_map::Entry::Vacant(e) = shape.entry(m) {
                e.insert(profile.is_equidistributed_shape(m)?);
            }
        }
        verdicts.push(PairVerdict {
            q,
            q2,
            checked: q * q2,
            holds: !bad,
            failures,
        });
    }
    let all_hold = verdicts.iter().all(|v| v.holds);
    Ok(ConditionCReport {
        pairs: verdicts,
        equidistributed_shape: shape,
        all_hold,
    })
}
