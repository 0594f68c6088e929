//! Truncated singular series, local factors, multiplicativity and the Euler product.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::SeriesMode;
use crate::arith::{self, format_rational, rat_to_f64, ser_rational};
use crate::conv::{convolve, cyclic_convolve, cyclic_power, Kernel};
use crate::error::{invalid, Error, Result};
use crate::expsum::{complete_sum_with, complete_sums_row, least_squares, PolySystem};
use crate::quad::{e, tree_sum};
use crate::sets::{DistributionProfile, IntRow};

/// Largest residue table `(Z/q)^r` handled exactly.
const TABLE_CAP: u64 = 1 << 24;
/// Agreement required between the exact and floating paths.
const PATH_TOL: f64 = 1e-10;
const STABLE_TOL: f64 = 1e-9;

fn table_len(q: u64, r: usize) -> Result<usize> {
    match q.checked_pow(r as u32) {
        Some(n) if n <= TABLE_CAP => Ok(n as usize),
        _ => Err(Error::Budget {
            what: format!("residue table modulo {q} in dimension {r}"),
            n: Some(q),
        }),
    }
}

fn unflatten(mut i: usize, q: u64, r: usize) -> Vec<u64> {
    (0..r)
        .map(|_| {
            let d = (i as u64) % q;
            i /= q as usize;
            d
        })
        .collect()
}

fn flatten(m: &[u64], q: u64) -> usize {
    m.iter().rev().fold(0usize, |acc, &d| acc * q as usize + d as usize)
}

fn negate(m: &[u64], q: u64) -> Vec<u64> {
    m.iter().map(|&d| (q - d) % q).collect()
}

fn tuple_gcd(q: u64, m: &[u64]) -> u64 {
    m.iter().fold(q, |g, &d| arith::gcd(g, d))
}

/// Weighted distribution on `(Z/q)^r` with integer numerators over `den`.
#[derive(Clone, Debug)]
struct Dist {
    q: u64,
    r: usize,
    den: BigUint,
    num: Vec<BigUint>,
}

impl Dist {
    fn delta(q: u64, r: usize) -> Result<Dist> {
        let mut num = vec![BigUint::zero(); table_len(q, r)?];
        num[0] = BigUint::one();
        Ok(Dist {
            q,
            r,
            den: BigUint::one(),
            num,
        })
    }

    /// Push-forward of `kappa(q, .)` under `l -> phi(l) mod q`.
    fn pushforward(row: &IntRow, phi: &PolySystem, q: u64) -> Result<Dist> {
        let r = phi.r();
        let mut num = vec![BigUint::zero(); table_len(q, r)?];
        for (l, k) in row.num.iter().enumerate() {
            if k.is_zero() {
                continue;
            }
            let m: Vec<u64> = (0..r).map(|j| phi.eval_mod(j, l as u64, q)).collect();
            num[flatten(&m, q)] += k;
        }
        Ok(Dist {
            q,
            r,
            den: row.den.clone(),
            num,
        })
    }

    fn classical(phi: &PolySystem, q: u64) -> Result<Dist> {
        let row = IntRow {
            den: BigUint::from(q),
            num: vec![BigUint::one(); q as usize],
        };
        Dist::pushforward(&row, phi, q)
    }

    fn convolve(&self, other: &Dist) -> Result<Dist> {
        let (q, r) = (self.q as usize, self.r);
        let num = if r == 1 {
            cyclic_convolve(&self.num, &other.num, q)?
        } else {
            // Embed with stride 2q - 1 so that the linear product has no carries.
            let l = 2 * q - 1;
            let len = l
                .checked_pow(r as u32)
                .filter(|&n| n as u64 <= 4 * TABLE_CAP)
                .ok_or_else(|| Error::Budget {
                    what: "embedded residue product".into(),
                    n: Some(self.q),
                })?;
            let embed = |d: &Dist| {
                let mut v = vec![BigUint::zero(); len];
                for (i, x) in d.num.iter().enumerate() {
                    if !x.is_zero() {
                        let idx = unflatten(i, d.q, r).iter().rev().fold(0, |acc, &m| acc * l + m as usize);
                        v[idx] = x.clone();
                    }
                }
                v
            };
            let lin = convolve(&embed(self), &embed(other), len - 1, Kernel::Auto)?;
            let mut out = vec![BigUint::zero(); self.num.len()];
            for (i, v) in lin.into_iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let (mut j, mut idx, mut stride) = (i, 0, 1);
                for _ in 0..r {
                    idx += (j % l) % q * stride;
                    j /= l;
                    stride *= q;
                }
                out[idx] += v;
            }
            out
        };
        Ok(Dist {
            q: self.q,
            r,
            den: &self.den * &other.den,
            num,
        })
    }

    fn power(&self, s: u32) -> Result<Dist> {
        if self.r == 1 {
            return Ok(Dist {
                q: self.q,
                r: 1,
                den: self.den.pow(s),
                num: cyclic_power(&self.num, s, self.q as usize)?,
            });
        }
        let mut result = Dist::delta(self.q, self.r)?;
        let mut base = self.clone();
        let mut e = s;
        while e > 0 {
            if e & 1 == 1 {
                result = result.convolve(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.convolve(&base)?;
            }
        }
        Ok(result)
    }

    fn reversed(&self) -> Dist {
        let mut num = vec![BigUint::zero(); self.num.len()];
        for (i, x) in self.num.iter().enumerate() {
            num[flatten(&negate(&unflatten(i, self.q, self.r), self.q), self.q)] = x.clone();
        }
        Dist {
            num,
            ..self.clone()
        }
    }

    fn at(&self, idx: usize) -> BigRational {
        BigRational::new(BigInt::from(self.num[idx].clone()), BigInt::from(self.den.clone()))
    }
}

fn check_mode(phi: &PolySystem, mode: &SeriesMode) -> Result<()> {
    if mode.s() == 0 {
        return Err(invalid("s must be at least 1"));
    }
    if !matches!(mode, SeriesMode::MeanValue { .. }) && phi.r() != 1 {
        return Err(Error::ModeMismatch(
            "Waring and mixed series take a single polynomial".into(),
        ));
    }
    Ok(())
}

/// Exact data at one modulus: `P = D^{*s}` (times the classical part) and,
/// in mean-value mode, `R = P * reverse(P)`.
struct Level {
    q: u64,
    r: usize,
    p: Dist,
    rr: Option<Dist>,
}

impl Level {
    fn build(profile: &DistributionProfile, phi: &PolySystem, mode: &SeriesMode, q: u64) -> Result<Level> {
        check_mode(phi, mode)?;
        let a = Dist::pushforward(&profile.kappa_int_row(q)?, phi, q)?;
        let mut p = a.power(mode.s())?;
        if let SeriesMode::Mixed { u, .. } = *mode {
            p = p.convolve(&Dist::classical(phi, q)?.power(u)?)?;
        }
        let rr = match mode {
            SeriesMode::MeanValue { .. } => Some(p.convolve(&p.reversed())?),
            _ => None,
        };
        Ok(Level {
            q,
            r: phi.r(),
            p,
            rr,
        })
    }

    fn weights(&self) -> &Dist {
        self.rr.as_ref().unwrap_or(&self.p)
    }

    fn shift(&self, mode: &SeriesMode) -> u64 {
        mode.target().map_or(0, |n| n % self.q)
    }

    /// `Gamma(q)`: the weighted proportion of solutions modulo `q`.
    fn gamma(&self, mode: &SeriesMode) -> BigRational {
        self.weights().at(self.shift(mode) as usize)
    }

    /// `B(q)` as a Ramanujan-sum expansion of the residue weights.
    fn b(&self, mode: &SeriesMode) -> BigRational {
        let (q, r) = (self.q, self.r);
        let t = self.shift(mode);
        let w = self.weights();
        let mut cache: HashMap<u64, BigInt> = HashMap::new();
        let mut acc = BigInt::zero();
        for (i, x) in w.num.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let mut m = unflatten(i, q, r);
            m[0] = (m[0] + q - t) % q;
            let g = tuple_gcd(q, &m);
            let c = cache.entry(g).or_insert_with(|| {
                let mut key = vec![0; r];
                key[0] = g;
                arith::ramanujan_sum(q, &key)
            });
            if !c.is_zero() {
                acc += BigInt::from(x.clone()) * &*c;
            }
        }
        BigRational::new(acc, BigInt::from(w.den.clone()))
    }
}

/// Sums `f` over `b` in `(Z/q)^r`, pairing `b` with `-b`.
fn paired_sum<F>(q: u64, r: usize, units_only: bool, mut f: F) -> Result<Complex64>
where
    F: FnMut(&[u64]) -> Result<Complex64>,
{
    let n = table_len(q, r)?;
    let mut parts = Vec::new();
    for i in 0..n {
        let b = unflatten(i, q, r);
        if units_only && tuple_gcd(q, &b) != 1 {
            continue;
        }
        let nb = negate(&b, q);
        let j = flatten(&nb, q);
        if j < i {
            continue;
        }
        let mut v = f(&b)?;
        if j != i {
            v += f(&nb)?;
        }
        parts.push(v);
    }
    Ok(tree_sum(&parts))
}

/// Complete-sum rows for a single polynomial.
struct Rows {
    a: Vec<Complex64>,
    classical: Option<Vec<Complex64>>,
}

fn term_value(mode: &SeriesMode, q: u64, sa: Complex64, sc: Complex64, b: u64) -> Complex64 {
    match *mode {
        SeriesMode::MeanValue { s } => Complex64::new(sa.norm_sqr().powi(s as i32), 0.0),
        SeriesMode::Waring { s, n } => sa.powu(s) * e(-(arith::mulmod(b, n % q, q) as f64) / q as f64),
        SeriesMode::Mixed { s, u, n } => {
            sa.powu(s) * sc.powu(u) * e(-(arith::mulmod(b, n % q, q) as f64) / q as f64)
        }
    }
}

/// Floating evaluation of `B(q)` and `q^r Gamma(q)` from complete sums.
pub struct SeriesEngine<'a> {
    profile: &'a DistributionProfile,
    phi: PolySystem,
    rows: HashMap<u64, Rows>,
}

impl<'a> SeriesEngine<'a> {
    pub fn new(profile: &'a DistributionProfile, phi: &PolySystem) -> Self {
        SeriesEngine {
            profile,
            phi: phi.clone(),
            rows: HashMap::new(),
        }
    }

    fn ensure_rows(&mut self, q: u64, classical: bool) -> Result<()> {
        if !self.rows.contains_key(&q) {
            let kappa = self.profile.kappa_f64_row(q)?;
            let a = complete_sums_row(&kappa, &self.phi, q)?;
            self.rows.insert(q, Rows { a, classical: None });
        }
        let rows = self.rows.get_mut(&q).unwrap();
        if classical && rows.classical.is_none() {
            let kappa = vec![1.0 / q as f64; q as usize];
            rows.classical = Some(complete_sums_row(&kappa, &self.phi, q)?);
        }
        Ok(())
    }

    fn sum(&mut self, mode: &SeriesMode, q: u64, units_only: bool) -> Result<Complex64> {
        check_mode(&self.phi, mode)?;
        let r = self.phi.r();
        if r == 1 {
            self.ensure_rows(q, matches!(mode, SeriesMode::Mixed { .. }))?;
            let rows = &self.rows[&q];
            return paired_sum(q, 1, units_only, |b| {
                let sc = rows.classical.as_ref().map_or(Complex64::zero(), |c| c[b[0] as usize]);
                Ok(term_value(mode, q, rows.a[b[0] as usize], sc, b[0]))
            });
        }
        let kappa = self.profile.kappa_f64_row(q)?;
        let phi = &self.phi;
        paired_sum(q, r, units_only, |b| {
            let sa = complete_sum_with(&kappa, phi, q, b)?;
            Ok(term_value(mode, q, sa, Complex64::zero(), 0))
        })
    }

    /// `B(q)`: the sum over `b` with `gcd(q, b) = 1`.
    pub fn term(&mut self, mode: &SeriesMode, q: u64) -> Result<Complex64> {
        self.sum(mode, q, true)
    }

    /// `Gamma(q)` through the complete sums.
    pub fn gamma(&mut self, mode: &SeriesMode, q: u64) -> Result<Complex64> {
        let r = self.phi.r() as i32;
        Ok(self.sum(mode, q, false)? / (q as f64).powi(r))
    }

    /// Partial sums of `B(q)` for `q <= q_max`.
    pub fn series(&mut self, mode: &SeriesMode, q_max: u64) -> Result<SingularReport> {
        if q_max == 0 {
            return Err(invalid("truncation must be at least 1"));
        }
        let mut per_q = Vec::with_capacity(q_max as usize);
        let mut partial = vec![0.0; q_max as usize + 1];
        let mut acc = Complex64::zero();
        let mut imag_max: f64 = 0.0;
        for q in 1..=q_max {
            let t = self.term(mode, q)?;
            if matches!(mode, SeriesMode::MeanValue { .. }) && t.re < 0.0 {
                return Err(Error::PathMismatch {
                    what: "mean-value term".into(),
                    detail: format!("negative term {} at q = {q}", t.re),
                });
            }
            acc += t;
            imag_max = imag_max.max(acc.im.abs());
            if acc.im.abs() > PATH_TOL * acc.re.abs().max(1.0) {
                return Err(Error::PathMismatch {
                    what: "conjugate pairing".into(),
                    detail: format!("partial sum at q = {q} has imaginary part {:e}", acc.im),
                });
            }
            per_q.push((q, t.re));
            partial[q as usize] = acc.re;
        }
        let mut dyadic = Vec::new();
        let mut h = q_max / 2;
        while h >= 1 {
            let hi = (2 * h).min(q_max);
            dyadic.push((h, (partial[hi as usize] - partial[h as usize]).abs()));
            h /= 2;
        }
        dyadic.reverse();
        let pts: Vec<(f64, f64)> = dyadic.iter().map(|&(q, d)| (q as f64, d)).collect();
        let (tail, tail_note) = match tail_fit(&pts) {
            Ok(t) => (Some(t), None),
            Err(err) => (None, Some(err.to_string())),
        };
        Ok(SingularReport {
            mode: *mode,
            q_max,
            value: acc.re,
            imag_max,
            per_q,
            dyadic,
            tail,
            tail_note,
            local_factors: BTreeMap::new(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularReport {
    pub mode: SeriesMode,
    pub q_max: u64,
    pub value: f64,
    /// Largest imaginary part seen in a partial sum.
    pub imag_max: f64,
    pub per_q: Vec<(u64, f64)>,
    /// `(Q, |S(2Q) - S(Q)|)` for `Q = q_max/2, q_max/4, ...`, ascending.
    pub dyadic: Vec<(u64, f64)>,
    pub tail: Option<TailFit>,
    pub tail_note: Option<String>,
    pub local_factors: BTreeMap<u64, LocalFactor>,
}

impl SingularReport {
    /// Partial sum up to `q`.
    pub fn partial(&self, q: u64) -> f64 {
        let terms: Vec<f64> = self.per_q.iter().take_while(|t| t.0 <= q).map(|t| t.1).collect();
        terms.iter().sum()
    }

    pub fn terms_csv(&self) -> String {
        let mut out = String::from("q,term\n");
        for (q, t) in &self.per_q {
            let _ = writeln!(out, "{q},{t:e}");
        }
        out
    }

    pub fn dyadic_csv(&self) -> String {
        let mut out = String::from("Q,diff\n");
        for (q, d) in &self.dyadic {
            let _ = writeln!(out, "{q},{d:e}");
        }
        out
    }
}

/// Truncated singular series `sum_{q <= Q} B(q)`.
pub fn truncated_series(
    profile: &DistributionProfile,
    phi: &PolySystem,
    mode: &SeriesMode,
    q_max: u64,
) -> Result<SingularReport> {
    SeriesEngine::new(profile, phi).series(mode, q_max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    /// Decay exponent; absent when the trace is exact.
    pub delta: Option<f64>,
    pub residual_max: f64,
    /// Smallest `Q` whose dyadic difference vanishes.
    pub exact_at: Option<f64>,
    pub non_convergent: bool,
    pub points: usize,
}

/// Negated log-log slope of a dyadic difference trace.
pub fn tail_fit(points: &[(f64, f64)]) -> Result<TailFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} dyadic points, need at least 3",
            points.len()
        )));
    }
    if points.iter().any(|&(q, d)| !(q > 0.0) || !d.is_finite() || d < 0.0) {
        return Err(invalid("dyadic points need Q > 0 and finite nonnegative differences"));
    }
    if let Some(&(q, _)) = points.iter().find(|p| p.1 == 0.0) {
        return Ok(TailFit {
            delta: None,
            residual_max: 0.0,
            exact_at: Some(q),
            non_convergent: false,
            points: points.len(),
        });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(q, d)| (q.ln(), d.ln())).collect();
    let (slope, icpt) = least_squares(&logs);
    let residual_max = logs
        .iter()
        .map(|&(x, y)| (y - slope * x - icpt).abs())
        .fold(0.0, f64::max);
    let delta = -slope;
    Ok(TailFit {
        delta: Some(delta),
        residual_max,
        exact_at: None,
        non_convergent: delta <= 1e-9,
        points: points.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaReport {
    pub q: u64,
    #[serde(serialize_with = "ser_rational")]
    pub exact: BigRational,
    pub value: f64,
    /// Same quantity from the complete sums.
    pub float_path: f64,
    pub imag: f64,
    pub difference: f64,
}

fn cross_check(q: u64, exact: &BigRational, float: Complex64) -> Result<GammaReport> {
    let x = rat_to_f64(exact);
    let diff = Complex64::new(float.re - x, float.im).norm();
    if !(diff <= PATH_TOL * x.abs().max(1.0)) {
        return Err(Error::PathMismatch {
            what: format!("Gamma({q})"),
            detail: format!("congruence count {x:e}, complete sums {float}"),
        });
    }
    Ok(GammaReport {
        q,
        exact: exact.clone(),
        value: x,
        float_path: float.re,
        imag: float.im,
        difference: diff,
    })
}

/// `Gamma(q)`, counted exactly and cross-checked against the complete sums.
pub fn gamma_count(
    profile: &DistributionProfile,
    phi: &PolySystem,
    mode: &SeriesMode,
    q: u64,
) -> Result<GammaReport> {
    let level = Level::build(profile, phi, mode, q)?;
    let exact = level.gamma(mode);
    let float = SeriesEngine::new(profile, phi).gamma(mode, q)?;
    cross_check(q, &exact, float)
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalFactor {
    pub p: u64,
    pub h_max: u32,
    pub mode: SeriesMode,
    /// `p^{rh} Gamma(p^h)` for `h = 0..=h_max`.
    pub trace: Vec<f64>,
    pub trace_exact: Vec<String>,
    /// `B(p^h)` for `h = 0..=h_max`.
    pub b_terms: Vec<String>,
    /// The partial sums of `B(p^h)` matched the trace at every `h`.
    pub paths_agree: bool,
    #[serde(serialize_with = "ser_rational")]
    pub exact: BigRational,
    pub value: f64,
    pub stabilized: bool,
}

/// `chi_p` as the limit of `p^{rh} Gamma(p^h)`.
pub fn local_factor(
    profile: &DistributionProfile,
    phi: &PolySystem,
    mode: &SeriesMode,
    p: u64,
    h_max: u32,
) -> Result<LocalFactor> {
    let target = mode.target().unwrap_or(0);
    Ok(local_factors(profile, phi, mode, p, h_max, &[target])?.remove(0))
}

/// Local factors at `p` for several targets sharing one residue computation.
/// Mean-value mode ignores the targets and returns one factor.
pub fn local_factors(
    profile: &DistributionProfile,
    phi: &PolySystem,
    mode: &SeriesMode,
    p: u64,
    h_max: u32,
    targets: &[u64],
) -> Result<Vec<LocalFactor>> {
    check_mode(phi, mode)?;
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let modes: Vec<SeriesMode> = match mode {
        SeriesMode::MeanValue { .. } => vec![*mode],
        _ => targets.iter().map(|&n| mode.with_target(n)).collect(),
    };
    if modes.is_empty() {
        return Err(invalid("at least one target is needed"));
    }
    let r = phi.r() as u32;
    let one = BigRational::one();
    let mut traces: Vec<Vec<BigRational>> = vec![vec![one.clone()]; modes.len()];
    let mut bterms: Vec<Vec<BigRational>> = vec![vec![one.clone()]; modes.len()];
    let mut partials: Vec<BigRational> = vec![one; modes.len()];
    let mut engine = SeriesEngine::new(profile, phi);
    let mut q = 1u64;
    for _ in 1..=h_max {
        q = q.checked_mul(p).ok_or_else(|| invalid("prime power overflows"))?;
        let level = Level::build(profile, phi, mode, q)?;
        let scale = BigRational::from_integer(BigInt::from(q).pow(r));
        for (i, m) in modes.iter().enumerate() {
            let gamma = level.gamma(m);
            cross_check(q, &gamma, engine.gamma(m, q)?)?;
            let b = level.b(m);
            partials[i] += &b;
            let scaled = &gamma * &scale;
            if scaled != partials[i] {
                return Err(Error::PathMismatch {
                    what: format!("local factor at p = {p}"),
                    detail: format!(
                        "p^(rh) Gamma = {} but sum of B = {} at q = {q}",
                        format_rational(&scaled),
                        format_rational(&partials[i])
                    ),
                });
            }
            traces[i].push(scaled);
            bterms[i].push(b);
        }
    }
    Ok(modes
        .into_iter()
        .zip(traces.into_iter().zip(bterms))
        .map(|(m, (trace, bs))| {
            let vals: Vec<f64> = trace.iter().map(rat_to_f64).collect();
            let stabilized = match vals.len() {
                0 | 1 => true,
                n => {
                    let (a, b) = (vals[n - 2], vals[n - 1]);
                    (a - b).abs() <= STABLE_TOL * a.abs().max(b.abs())
                }
            };
            let exact = trace.last().unwrap().clone();
            LocalFactor {
                p,
                h_max,
                mode: m,
                value: rat_to_f64(&exact),
                trace: vals,
                trace_exact: trace.iter().map(format_rational).collect(),
                b_terms: bs.iter().map(format_rational).collect(),
                paths_agree: true,
                exact,
                stabilized,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct MultPair {
    pub q1: u64,
    pub q2: u64,
    pub tuples_checked: u64,
    pub s_identity: bool,
    /// Mismatches in the group ring that vanished modulo the cyclotomic polynomial.
    pub cyclotomic_fallbacks: u64,
    /// First few failing `(b, b')`.
    pub failures: Vec<(Vec<u64>, Vec<u64>)>,
    #[serde(serialize_with = "ser_rational")]
    pub b_q1: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub b_q2: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub b_product: BigRational,
    pub b_identity: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicativityReport {
    pub mode: SeriesMode,
    pub pairs: Vec<MultPair>,
    pub all_hold: bool,
}

/// Phase counts `sum_l kappa(l) [b . phi(l) = m mod q]` for every `b`.
fn phase_tables(row: &IntRow, phi: &PolySystem, q: u64) -> Result<Vec<Vec<BigUint>>> {
    let r = phi.r();
    let vals: Vec<(Vec<u64>, &BigUint)> = row
        .num
        .iter()
        .enumerate()
        .filter(|(_, k)| !k.is_zero())
        .map(|(l, k)| ((0..r).map(|j| phi.eval_mod(j, l as u64, q)).collect(), k))
        .collect();
    let n = table_len(q, r)?;
    Ok((0..n)
        .map(|i| {
            let b = unflatten(i, q, r);
            let mut out = vec![BigUint::zero(); q as usize];
            for (v, k) in &vals {
                let m = b
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&bj, &vj)| (acc + arith::mulmod(bj, vj, q)) % q);
                out[m as usize] += *k;
            }
            out
        })
        .collect())
}

/// `Phi_n` with integer coefficients, lowest degree first.
fn cyclotomic(n: u64) -> Vec<BigInt> {
    let x_d_minus_1 = |d: usize| {
        let mut v = vec![BigInt::zero(); d + 1];
        v[0] = -BigInt::one();
        v[d] = BigInt::one();
        v
    };
    let mut poly = vec![BigInt::one()];
    let divs = arith::divisors(n);
    for &d in &divs {
        if arith::mobius(n / d) == 1 {
            let f = x_d_minus_1(d as usize);
            let mut out = vec![BigInt::zero(); poly.len() + d as usize];
            for (i, a) in poly.iter().enumerate() {
                for (j, b) in f.iter().enumerate() {
                    if !b.is_zero() {
                        out[i + j] += a * b;
                    }
                }
            }
            poly = out;
        }
    }
    for &d in &divs {
        if arith::mobius(n / d) == -1 {
            // Exact division by x^d - 1.
            let d = d as usize;
            let deg = poly.len() - 1;
            let mut quot = vec![BigInt::zero(); deg - d + 1];
            for i in (d..=deg).rev() {
                let c = std::mem::take(&mut poly[i]);
                poly[i - d] += &c;
                quot[i - d] = c;
            }
            poly = quot;
        }
    }
    poly
}

/// Whether `sum_i v_i x^i` vanishes modulo the monic `m`.
fn vanishes_mod(v: &[BigInt], m: &[BigInt]) -> bool {
    let mut v = v.to_vec();
    let deg = m.len() - 1;
    for i in (deg..v.len()).rev() {
        let c = std::mem::take(&mut v[i]);
        if c.is_zero() {
            continue;
        }
        for j in 0..deg {
            v[i - deg + j] -= &c * &m[j];
        }
    }
    v.iter().all(|c| c.is_zero())
}

/// Checks `S(q, b) S(q', b') = S(qq', q b' + q' b)` exactly in `Q[Z/qq']` for
/// every residue tuple, and `B(qq') = B(q) B(q')`.
pub fn check_multiplicativity(
    profile: &DistributionProfile,
    phi: &PolySystem,
    mode: &SeriesMode,
    pairs: &[(u64, u64)],
) -> Result<MultiplicativityReport> {
    check_mode(phi, mode)?;
    let r = phi.r();
    let mut out = Vec::with_capacity(pairs.len());
    for &(q1, q2) in pairs {
        if q1 == 0 || q2 == 0 || arith::gcd(q1, q2) != 1 {
            return Err(Error::NotCoprime(q1, q2));
        }
        let n = q1.checked_mul(q2).ok_or_else(|| invalid("modulus overflows"))?;
        let (row1, row2, row_n) = (
            profile.kappa_int_row(q1)?,
            profile.kappa_int_row(q2)?,
            profile.kappa_int_row(n)?,
        );
        let (t1, t2, tn) = (
            phase_tables(&row1, phi, q1)?,
            phase_tables(&row2, phi, q2)?,
            phase_tables(&row_n, phi, n)?,
        );
        let big = |v: &BigUint| BigInt::from(v.clone());
        let (d1, d2, dn) = (big(&row1.den), big(&row2.den), big(&row_n.den));
        let scale_r = &d1 * &d2;
        let nu = n as usize;
        let mut checked = 0u64;
        let mut fallbacks = 0u64;
        let mut failed = 0u64;
        let mut failures = Vec::new();
        let mut phi_n: Option<Vec<BigInt>> = None;
        for (i1, u) in t1.iter().enumerate() {
            let b1 = unflatten(i1, q1, r);
            for (i2, v) in t2.iter().enumerate() {
                let b2 = unflatten(i2, q2, r);
                let c: Vec<u64> = b1
                    .iter()
                    .zip(&b2)
                    .map(|(&x, &y)| (q1 * y + q2 * x) % n)
                    .collect();
                let w = &tn[flatten(&c, n)];
                let mut lhs = vec![BigInt::zero(); nu];
                for (m1, a) in u.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (m2, b) in v.iter().enumerate() {
                        if !b.is_zero() {
                            lhs[(q2 as usize * m1 + q1 as usize * m2) % nu] += big(&(a * b));
                        }
                    }
                }
                let diff: Vec<BigInt> = lhs
                    .iter()
                    .zip(w)
                    .map(|(l, x)| l * &dn - big(x) * &scale_r)
                    .collect();
                checked += 1;
                if diff.iter().all(|d| d.is_zero()) {
                    continue;
                }
                let m = phi_n.get_or_insert_with(|| cyclotomic(n));
                if vanishes_mod(&diff, m) {
                    fallbacks += 1;
                } else {
                    failed += 1;
                    if failures.len() < 16 {
                        failures.push((b1.clone(), b2));
                    }
                }
            }
        }
        let b_q1 = Level::build(profile, phi, mode, q1)?.b(mode);
        let b_q2 = Level::build(profile, phi, mode, q2)?.b(mode);
        let b_product = Level::build(profile, phi, mode, n)?.b(mode);
        let b_identity = b_product == &b_q1 * &b_q2;
        out.push(MultPair {
            q1,
            q2,
            tuples_checked: checked,
            s_identity: failed == 0,
            cyclotomic_fallbacks: fallbacks,
            failures,
            b_q1,
            b_q2,
            b_product,
            b_identity,
        });
    }
    let all_hold = out.iter().all(|p| p.s_identity && p.b_identity);
    Ok(MultiplicativityReport {
        mode: *mode,
        pairs: out,
        all_hold,
    })
}

/// How the product beyond `p_max` is bracketed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailPolicy {
    /// Fit `|chi_p - 1| ~ C p^{-theta}` and sum the fitted tail.
    #[default]
    PowerFit,
    /// No bracket.
    Omit,
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerProduct {
    pub p_max: u64,
    pub primes: Vec<u64>,
    pub factors: Vec<f64>,
    pub value: f64,
    pub local_obstruction: bool,
    /// The bracket is a heuristic extrapolation, not a bound.
    pub heuristic: bool,
    pub theta: Option<f64>,
    pub c: Option<f64>,
    pub tail: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub note: Option<String>,
}

/// `prod_{p <= p_max} chi_p` with a fitted tail bracket.
pub fn euler_product(factors: &[LocalFactor], p_max: u64, policy: TailPolicy) -> Result<EulerProduct> {
    let mut used: Vec<&LocalFactor> = factors.iter().filter(|f| f.p <= p_max).collect();
    used.sort_by_key(|f| f.p);
    if let Some(f) = used.iter().find(|f| !f.stabilized) {
        return Err(Error::Unstabilized(f.p));
    }
    let local_obstruction = used.iter().any(|f| f.exact.is_zero());
    let value: f64 = used.iter().map(|f| f.value).product();
    let mut res = EulerProduct {
        p_max,
        primes: used.iter().map(|f| f.p).collect(),
        factors: used.iter().map(|f| f.value).collect(),
        value,
        local_obstruction,
        heuristic: true,
        theta: None,
        c: None,
        tail: None,
        lower: None,
        upper: None,
        note: None,
    };
    if policy == TailPolicy::Omit || local_obstruction {
        return Ok(res);
    }
    let pts: Vec<(f64, f64)> = used
        .iter()
        .filter(|f| f.p > 2 && f.value != 1.0)
        .map(|f| ((f.p as f64).ln(), (f.value - 1.0).abs().ln()))
        .collect();
    if used.iter().all(|f| f.value == 1.0) {
        res.tail = Some(0.0);
        res.lower = Some(value);
        res.upper = Some(value);
        return Ok(res);
    }
    if pts.len() < 3 {
        res.note = Some("fewer than three odd primes with chi_p != 1".into());
        return Ok(res);
    }
    let (slope, icpt) = least_squares(&pts);
    let theta = -slope;
    let c = icpt.exp();
    res.theta = Some(theta);
    res.c = Some(c);
    if theta <= 1.0 {
        res.note = Some(format!("fitted theta = {theta:.4} does not give a summable tail"));
        return Ok(res);
    }
    let pm = p_max as f64;
    let tail = c * pm.powf(1.0 - theta) / ((theta - 1.0) * pm.ln());
    res.tail = Some(tail);
    res.lower = Some(value * (-tail).exp());
    res.upper = Some(value * tail.exp());
    Ok(res)
}
