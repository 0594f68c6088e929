//! Exact representation counts and mean values.

use std::collections::HashMap;
use std::fmt::Write;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{self, checked_pow, iroot};
use crate::conv::{coefficient_at, convolve, Kernel};
use crate::error::{invalid, Error, Result};
use crate::expsum::{least_squares, PolySystem};
use crate::sets::{generate_set, to_f64, SetSpec, WeightedSet};

/// Largest index a table may address.
pub const INDEX_CEILING: u64 = 1 << 34;
/// Entry cap for the associative tables used when `r >= 2`.
pub const MITM_CAP: u128 = 100_000_000;
const DEFAULT_BUDGET_MB: u64 = 2048;
/// Seed for the random windows that cross-check the fast kernel.
pub const WINDOW_SEED: u64 = 0x5eed_c0de;

/// Memory budget in bytes, from `CIRCLEFORGE_BUDGET_MB`.
pub fn budget_bytes() -> u64 {
    std::env::var("CIRCLEFORGE_BUDGET_MB")
        .ok()
        .and_then(|v| v.trim().parse::<u64>().ok())
        .unwrap_or(DEFAULT_BUDGET_MB)
        .saturating_mul(1 << 20)
}

const ENTRY_BYTES: u64 = 32;

fn check_len(len: u64, what: &str) -> Result<()> {
    let budget = budget_bytes();
    if len.saturating_mul(ENTRY_BYTES) > budget {
        return Err(Error::Budget {
            what: what.to_string(),
            n: Some(budget / ENTRY_BYTES),
        });
    }
    Ok(())
}

fn check_table(num: &[BigUint], what: &str) -> Result<()> {
    let budget = budget_bytes();
    let mut used = 0u64;
    for (n, v) in num.iter().enumerate() {
        used += ENTRY_BYTES + 8 * v.iter_u64_digits().len() as u64;
        if used > budget {
            return Err(Error::Budget {
                what: what.to_string(),
                n: Some(n as u64),
            });
        }
    }
    Ok(())
}

/// Coefficients `c[m] = sum_{x <= X, x^k = m} a_x`, raised to a convolution power.
#[derive(Clone, Debug, PartialEq)]
pub struct RepTable {
    k: u32,
    x: u64,
    s: u32,
    den: BigUint,
    num: Vec<BigUint>,
    /// Windows `[lo, hi)` checked exactly when the fast kernel was used.
    pub verified_windows: Vec<(u64, u64)>,
    pub fast: bool,
}

impl RepTable {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn n_max(&self) -> u64 {
        self.num.len() as u64 - 1
    }

    /// Common denominator of every entry.
    pub fn den(&self) -> &BigUint {
        &self.den
    }

    pub fn numerators(&self) -> &[BigUint] {
        &self.num
    }

    pub fn get(&self, m: u64) -> BigRational {
        let n = self.num.get(m as usize).cloned().unwrap_or_default();
        BigRational::new(BigInt::from(n), BigInt::from(self.den.clone()))
    }

    pub fn get_f64(&self, m: u64) -> f64 {
        to_f64(&self.get(m))
    }

    /// Sum of all stored entries.
    pub fn mass(&self) -> BigRational {
        let s: BigUint = self.num.iter().sum();
        BigRational::new(BigInt::from(s), BigInt::from(self.den.clone()))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (u64, BigRational)> + '_ {
        self.num
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(m, _)| (m as u64, self.get(m as u64)))
    }

    /// `n,count` rows for every `n` in range, counts as exact decimals or fractions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,count\n");
        for m in 0..self.num.len() as u64 {
            let _ = writeln!(out, "{m},{}", arith::format_rational(&self.get(m)));
        }
        out
    }
}

/// The `s = 1` table for `x <= X`.
pub fn rep_poly(a: &WeightedSet, k: u32, x: u64) -> Result<RepTable> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    if x > a.bound() {
        return Err(Error::BoundExceeded { x, bound: a.bound() });
    }
    let top = checked_pow(x, k)
        .filter(|&v| v <= INDEX_CEILING as u128)
        .ok_or_else(|| Error::Budget {
            what: format!("index ceiling for X^k with X = {x}, k = {k}"),
            n: Some(INDEX_CEILING),
        })? as u64;
    check_len(top + 1, "rep_poly table")?;
    let (w, den) = a.integer_weights();
    let mut num = vec![BigUint::zero(); top as usize + 1];
    for (i, &n) in a.support().iter().enumerate() {
        if n > x {
            break;
        }
        num[n.pow(k) as usize] += &w[i];
    }
    Ok(RepTable {
        k,
        x,
        s: 1,
        den,
        num,
        verified_windows: Vec::new(),
        fast: false,
    })
}

fn verify_windows(a: &[BigUint], b: &[BigUint], prod: &[BigUint], rng: &mut ChaCha8Rng) -> Result<Vec<(u64, u64)>> {
    const WINDOWS: usize = 3;
    const WIDTH: usize = 32;
    let mut out = Vec::with_capacity(WINDOWS);
    for _ in 0..WINDOWS {
        let lo = rng.gen_range(0..prod.len().max(1));
        let hi = (lo + WIDTH).min(prod.len());
        for n in lo..hi {
            let want = coefficient_at(a, b, n);
            if want != prod[n] {
                return Err(Error::PathMismatch {
                    what: "fast convolution".into(),
                    detail: format!("coefficient {n}: fast {} vs exact {want}", prod[n]),
                });
            }
        }
        out.push((lo as u64, hi as u64));
    }
    Ok(out)
}

fn multiply(
    a: &RepTable,
    b: &RepTable,
    n_max: u64,
    kernel: Kernel,
    rng: &mut ChaCha8Rng,
) -> Result<RepTable> {
    check_len(n_max + 1, "convolution output")?;
    let num = convolve(&a.num, &b.num, n_max as usize, kernel)?;
    let mut windows = a.verified_windows.clone();
    windows.extend(&b.verified_windows);
    if kernel == Kernel::Ntt {
        windows.extend(verify_windows(&a.num, &b.num, &num, rng)?);
    }
    check_table(&num, "convolution output")?;
    Ok(RepTable {
        k: a.k,
        x: a.x,
        s: a.s + b.s,
        den: &a.den * &b.den,
        num,
        verified_windows: windows,
        fast: a.fast || b.fast || kernel == Kernel::Ntt,
    })
}

fn identity(k: u32, x: u64) -> RepTable {
    RepTable {
        k,
        x,
        s: 0,
        den: BigUint::one(),
        num: vec![BigUint::one()],
        verified_windows: Vec::new(),
        fast: false,
    }
}

fn power(base: &RepTable, s: u32, n_max: u64, kernel: Kernel, rng: &mut ChaCha8Rng) -> Result<RepTable> {
    let mut result = identity(base.k, base.x);
    let mut b = base.clone();
    b.num.truncate(n_max as usize + 1);
    let mut e = s;
    while e > 0 {
        if e & 1 == 1 {
            result = multiply(&result, &b, n_max, kernel, rng)?;
        }
        e >>= 1;
        if e > 0 {
            b = multiply(&b, &b, n_max, kernel, rng)?;
        }
    }
    let len = n_max as usize + 1;
    result.num.resize(len, BigUint::zero());
    Ok(result)
}

fn base_for(a: &WeightedSet, k: u32, s: u32, n_max: u64) -> Result<RepTable> {
    if s == 0 {
        return Err(invalid("s must be at least 1"));
    }
    let full = checked_pow(a.bound(), k).map(|v| v * s as u128);
    if full.is_some_and(|f| (n_max as u128) > f) {
        return Err(invalid(format!("nMax = {n_max} exceeds s X^k for X = {}", a.bound())));
    }
    let x = a.bound().min(iroot(n_max, k));
    rep_poly(a, k, x)
}

/// `R_{s;k}(n; A)` for `n <= n_max`.
pub fn count_representations(a: &WeightedSet, k: u32, s: u32, n_max: u64, kernel: Kernel) -> Result<RepTable> {
    let base = base_for(a, k, s, n_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(WINDOW_SEED);
    power(&base, s, n_max, kernel, &mut rng)
}

/// `R_{s,u;k}(n; A)`: `s` variables from `A`, `u` unweighted naturals.
pub fn count_mixed(a: &WeightedSet, k: u32, s: u32, u: u32, n_max: u64, kernel: Kernel) -> Result<RepTable> {
    let base = base_for(a, k, s, n_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(WINDOW_SEED);
    let left = power(&base, s, n_max, kernel, &mut rng)?;
    if u == 0 {
        return Ok(left);
    }
    let y = iroot(n_max, k).max(1);
    let nat = generate_set(&SetSpec::Naturals, y.max(2))?.truncate(y)?;
    let right = power(&rep_poly(&nat, k, y)?, u, n_max, kernel, &mut rng)?;
    let mut out = multiply(&left, &right, n_max, kernel, &mut rng)?;
    out.num.resize(n_max as usize + 1, BigUint::zero());
    out.s = s;
    Ok(out)
}

/// Mean value `I_{t, phi}(X; A)` with its normalised ratio.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnergyRecord {
    pub t: u32,
    pub x: u64,
    #[serde(serialize_with = "crate::arith::ser_rational")]
    pub value: BigRational,
    /// `I X^K / A(X)^{2t}`.
    pub delta_hat: f64,
    /// `max((sum a_x^2)^t, A(X)^{2t} / #support)`: diagonal and Cauchy-Schwarz.
    #[serde(serialize_with = "crate::arith::ser_rational")]
    pub lower_bound: BigRational,
    pub lower_bound_holds: bool,
    /// `I / (A^t + A^{2t} X^{-K})`.
    pub display_ratio: f64,
    /// Number of distinct sums `phi(x_1) + ... + phi(x_t)`.
    pub support: u64,
}

fn rat(n: BigUint, d: BigUint) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `I_{t,phi}(X; A)`, exactly.
pub fn mean_value(a: &WeightedSet, phi: &PolySystem, t: u32, x: u64) -> Result<EnergyRecord> {
    if t == 0 {
        return Err(invalid("t must be at least 1"));
    }
    if x > a.bound() {
        return Err(Error::BoundExceeded { x, bound: a.bound() });
    }
    let ax = a.count_up_to(x)?;
    let (value, support) = if phi.r() == 1 {
        let k = phi.k_max();
        let top = checked_pow(x, k).map(|v| v * t as u128).unwrap_or(u128::MAX);
        if top > INDEX_CEILING as u128 {
            return Err(Error::Budget {
                what: "Parseval table".into(),
                n: Some(INDEX_CEILING),
            });
        }
        let base = rep_poly(a, k, x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(WINDOW_SEED);
        let table = power(&base, t, top as u64, Kernel::Auto, &mut rng)?;
        let sq: BigUint = table.num.iter().map(|v| v * v).sum();
        let support = table.num.iter().filter(|v| !v.is_zero()).count() as u64;
        (rat(sq, &table.den * &table.den), support)
    } else {
        mean_value_mitm(a, phi, t, x)?
    };
    let sum_sq: BigRational = a
        .iter()
        .take_while(|(n, _)| *n <= x)
        .map(|(_, w)| &w * &w)
        .sum();
    let a2t = num_traits::pow(ax.clone(), 2 * t as usize);
    let diag = num_traits::pow(sum_sq, t as usize);
    let cs = if support > 0 {
        &a2t / BigRational::from_integer(BigInt::from(support))
    } else {
        BigRational::zero()
    };
    let lower_bound = diag.max(cs);
    let axf = to_f64(&ax);
    let xk = (x as f64).powi(phi.big_k() as i32);
    let vf = to_f64(&value);
    let a2tf = axf.powi(2 * t as i32);
    Ok(EnergyRecord {
        t,
        x,
        delta_hat: vf * xk / a2tf,
        lower_bound_holds: value >= lower_bound,
        lower_bound,
        display_ratio: vf / (axf.powi(t as i32) + a2tf / xk),
        value,
        support,
    })
}

type SumTable = HashMap<Vec<i128>, BigUint>;

fn table_conv(p: &SumTable, q: &SumTable) -> Result<SumTable> {
    if (p.len() as u128) * (q.len() as u128) > MITM_CAP * 10 {
        return Err(Error::Budget {
            what: "meet-in-the-middle combination".into(),
            n: None,
        });
    }
    let mut out: SumTable = HashMap::new();
    for (kp, vp) in p {
        for (kq, vq) in q {
            let key: Vec<i128> = kp.iter().zip(kq).map(|(a, b)| a + b).collect();
            *out.entry(key).or_default() += vp * vq;
        }
    }
    if out.len() as u128 > MITM_CAP {
        return Err(Error::Budget {
            what: "meet-in-the-middle table".into(),
            n: Some(out.len() as u64),
        });
    }
    Ok(out)
}

fn table_power(base: &SumTable, h: u32, r: usize) -> Result<SumTable> {
    let mut out: SumTable = HashMap::new();
    out.insert(vec![0; r], BigUint::one());
    for _ in 0..h {
        out = table_conv(&out, base)?;
    }
    Ok(out)
}

fn mean_value_mitm(a: &WeightedSet, phi: &PolySystem, t: u32, x: u64) -> Result<(BigRational, u64)> {
    let (w, den) = a.integer_weights();
    let n = a.support().partition_point(|&v| v <= x);
    let half = t.div_ceil(2);
    if (n as u128).saturating_pow(half) > MITM_CAP {
        return Err(Error::Budget {
            what: format!("meet-in-the-middle with {n}^{half} tuples"),
            n: None,
        });
    }
    let mut base: SumTable = HashMap::new();
    for i in 0..n {
        let key = phi
            .eval(a.support()[i])
            .ok_or_else(|| invalid("polynomial value overflows"))?;
        *base.entry(key).or_default() += &w[i];
    }
    let left = table_power(&base, half, phi.r())?;
    let right = table_power(&base, t / 2, phi.r())?;
    let full = table_conv(&left, &right)?;
    let sq: BigUint = full.values().map(|v| v * v).sum();
    let d = num_traits::pow(den, 2 * t as usize);
    Ok((rat(sq, d), full.len() as u64))
}

/// `Delta(X)` trace and the fitted exponent `omega`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DeltaEstimate {
    pub t: u32,
    pub trace: Vec<EnergyRecord>,
    pub omega: f64,
    pub residual_max: f64,
    /// `omega (2r + 3) / rho` when a Weyl exponent is supplied.
    pub sigma0: Option<f64>,
}

/// Slope of `log Delta` against `log min(X, A(X))`.
pub fn fit_omega(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 || points.iter().any(|p| !(p.0 > 1.0 && p.1 > 0.0)) {
        return Err(Error::DegenerateFit("need two distinct scales above 1 and positive Delta".into()));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let (slope, icpt) = least_squares(&pts);
    let res = pts
        .iter()
        .map(|p| (p.1 - slope * p.0 - icpt).abs())
        .fold(0.0, f64::max);
    Ok((slope, res))
}

pub fn estimate_delta(
    a: &WeightedSet,
    k: u32,
    t: u32,
    grid: &[u64],
    rho: Option<(f64, usize)>,
) -> Result<DeltaEstimate> {
    if grid.len() < 3 {
        return Err(Error::DegenerateFit("need at least three grid points".into()));
    }
    let phi = PolySystem::monomial(k);
    let mut trace = Vec::with_capacity(grid.len());
    let mut pts = Vec::with_capacity(grid.len());
    for &x in grid {
        let rec = mean_value(a, &phi, t, x)?;
        let scale = (x as f64).min(to_f64(&a.count_up_to(x)?));
        pts.push((scale, rec.delta_hat));
        trace.push(rec);
    }
    let (omega, residual_max) = fit_omega(&pts)?;
    Ok(DeltaEstimate {
        t,
        trace,
        omega,
        residual_max,
        sigma0: rho.map(|(rho, r)| omega * (2 * r + 3) as f64 / rho),
    })
}

/// Brute-force `R_{s;k}(n)` over all ordered tuples; for tests and tiny inputs.
pub fn brute_force_counts(a: &WeightedSet, k: u32, s: u32, n_max: u64) -> Vec<BigRational> {
    let elems: Vec<(u64, BigRational)> = a
        .iter()
        .filter(|(n, _)| n.checked_pow(k).is_some_and(|v| v <= n_max))
        .map(|(n, w)| (n.pow(k), w))
        .collect();
    let mut out = vec![BigRational::zero(); n_max as usize + 1];
    let mut stack = vec![(0u64, BigRational::one(), 0u32)];
    while let Some((sum, w, depth)) = stack.pop() {
        if depth == s {
            out[sum as usize] += w;
            continue;
        }
        for (v, wt) in &elems {
            if sum + v <= n_max {
                stack.push((sum + v, &w * wt, depth + 1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    fn nat(x: u64) -> WeightedSet {
        generate_set(&SetSpec::Naturals, x).unwrap()
    }

    #[test]
    fn rep_poly_examples() {
        let t = rep_poly(&nat(3), 2, 3).unwrap();
        let nz: Vec<u64> = t.nonzero().map(|p| p.0).collect();
        assert_eq!(nz, vec![1, 4, 9]);
        let p = generate_set(&SetSpec::Primes, 10).unwrap();
        let t = rep_poly(&p, 2, 10).unwrap();
        assert_eq!(t.nonzero().map(|p| p.0).collect::<Vec<_>>(), vec![4, 9, 25, 49]);
        let e = WeightedSet::from_pairs(2, vec![(2, ratio(3, 2))], "e").unwrap();
        assert_eq!(rep_poly(&e, 3, 2).unwrap().get(8), ratio(3, 2));
    }

    #[test]
    fn representation_examples() {
        let r = count_representations(&nat(10), 2, 2, 60, Kernel::Auto).unwrap();
        assert_eq!(r.get(25), ratio(2, 1));
        assert_eq!(r.get(50), ratio(3, 1));
        let r3 = count_representations(&nat(5), 3, 3, 3, Kernel::Auto).unwrap();
        assert_eq!(r3.get(3), ratio(1, 1));
    }

    #[test]
    fn mixed_examples() {
        let p = generate_set(&SetSpec::Primes, 10).unwrap();
        let m = count_mixed(&p, 2, 1, 1, 13, Kernel::Auto).unwrap();
        assert_eq!(m.get(13), ratio(2, 1));
        let n = nat(10);
        let m = count_mixed(&n, 2, 1, 1, 60, Kernel::Auto).unwrap();
        let r = count_representations(&n, 2, 2, 60, Kernel::Auto).unwrap();
        assert_eq!(m.numerators(), r.numerators());
        let empty = WeightedSet::unit(10, vec![], "empty").unwrap();
        let z = count_mixed(&empty, 2, 1, 1, 50, Kernel::Auto).unwrap();
        assert!(z.numerators().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn fast_kernel_matches() {
        let n = nat(100);
        let exact = count_representations(&n, 2, 3, 10_000, Kernel::Auto).unwrap();
        let fast = count_representations(&n, 2, 3, 10_000, Kernel::Ntt).unwrap();
        assert!(fast.fast && !fast.verified_windows.is_empty());
        assert_eq!(exact.numerators(), fast.numerators());
    }

    #[test]
    fn mean_value_examples() {
        let sq = PolySystem::monomial(2);
        let r = mean_value(&nat(4), &sq, 2, 4).unwrap();
        assert_eq!(r.value, ratio(28, 1));
        assert!(r.lower_bound_holds);
        let lin = PolySystem::monomial(1);
        assert_eq!(mean_value(&nat(2), &lin, 1, 2).unwrap().value, ratio(2, 1));
        let sys = PolySystem::new(vec![(1, 1), (1, 2)]).unwrap();
        assert_eq!(mean_value(&nat(3), &sys, 1, 3).unwrap().value, ratio(3, 1));
    }

    #[test]
    fn brute_force_agrees() {
        let e = generate_set(&SetSpec::Ellipsephic { p: 3, digits: vec![0, 1] }, 30).unwrap();
        let r = count_representations(&e, 2, 3, 300, Kernel::Auto).unwrap();
        let b = brute_force_counts(&e, 2, 3, 300);
        for n in 0..=300u64 {
            assert_eq!(r.get(n), b[n as usize]);
        }
    }
}
