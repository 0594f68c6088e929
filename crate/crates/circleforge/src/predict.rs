//! Predicted main terms, applicability bookkeeping and exact-vs-predicted comparison.

use std::fmt::Write;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::arith::{format_rational, rat_to_f64};
use crate::error::{invalid, Error, Result};
use crate::singular::SeriesMode;

const fn isqrt(n: u64) -> u64 {
    let mut r = 0;
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

const fn rho0_inv_const(k: u64) -> u64 {
    let a = 1u64 << (k - 1);
    let b = if k < 3 { 0 } else { (k - 1) * (k - 2) } + 2 * isqrt(2 * k);
    if a < b {
        a
    } else {
        b
    }
}

const RHO0_MAX_K: usize = 64;

const RHO0_INV: [u64; RHO0_MAX_K + 1] = {
    let mut t = [0u64; RHO0_MAX_K + 1];
    let mut k = 1;
    while k <= RHO0_MAX_K {
        t[k] = rho0_inv_const(k as u64);
        k += 1;
    }
    t
};

/// `1 / rho_0(k) = min(2^{k-1}, (k-1)(k-2) + 2 floor(sqrt(2k)))`.
pub fn rho0_inverse(k: u32) -> Result<u64> {
    match k as usize {
        1..=RHO0_MAX_K => Ok(RHO0_INV[k as usize]),
        _ => Err(invalid(format!("rho_0 is tabulated for 1 <= k <= {RHO0_MAX_K}"))),
    }
}

pub fn rho0(k: u32) -> Result<f64> {
    Ok(1.0 / rho0_inverse(k)? as f64)
}

/// Which asymptotic formula a prediction follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "theorem", rename_all = "snake_case", deny_unknown_fields)]
pub enum Theorem {
    /// `A(n^{1/k})^s n^{-1} S J`.
    Waring { k: u32, s: u32, n: u64 },
    /// `A(n^{1/k})^s n^{u/k - 1} S* J*`.
    Mixed { k: u32, s: u32, u: u32, n: u64 },
    /// `A(X)^{2s} X^{-K} S J`.
    MeanValue { big_k: u32, s: u32, x: u64 },
    /// `Gamma(1/k)^s / Gamma(s/k) S_P(n) n^{s/k - 1} / (log n)^s`.
    PrimeWaring { k: u32, s: u32, n: u64 },
}

/// The measured factors of a main term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constituents {
    /// `A(n^{1/k})` or `A(X)`; unused for primes.
    pub a: f64,
    pub series: f64,
    pub series_q: Option<u64>,
    pub series_delta: Option<f64>,
    /// Unused for primes, where the Gamma ratio takes its place.
    pub integral: f64,
    pub integral_q: Option<f64>,
    pub integral_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionReport {
    pub theorem: Theorem,
    pub main_term: f64,
    pub constituents: Constituents,
    /// Gamma ratio for the prime formula.
    pub gamma_ratio: Option<f64>,
    /// Smaller of the two fitted tail exponents.
    pub confidence: Option<f64>,
    pub exact: Option<String>,
    pub ratio: Option<f64>,
    /// `ratio - 1`.
    pub residual: Option<f64>,
}

impl PredictionReport {
    pub fn with_exact(mut self, exact: &BigRational) -> Self {
        let e = rat_to_f64(exact);
        self.exact = Some(format_rational(exact));
        if self.main_term != 0.0 {
            let r = e / self.main_term;
            self.ratio = Some(r);
            self.residual = Some(r - 1.0);
        }
        self
    }
}

/// `n^{a/b}` for positive integers `n`, `b`.
fn rational_power(n: f64, a: i64, b: u32) -> f64 {
    if a % b as i64 == 0 {
        n.powi((a / b as i64) as i32)
    } else {
        n.powf(a as f64 / b as f64)
    }
}

fn expect_mode(got: Option<&SeriesMode>, want: SeriesMode, what: &str, check_target: bool) -> Result<()> {
    let Some(got) = got else { return Ok(()) };
    let same = match (got, want) {
        (SeriesMode::Waring { s, n }, SeriesMode::Waring { s: s2, n: n2 }) => *s == s2 && (!check_target || *n == n2),
        (SeriesMode::Mixed { s, u, n }, SeriesMode::Mixed { s: s2, u: u2, n: n2 }) => {
            *s == s2 && *u == u2 && (!check_target || *n == n2)
        }
        (SeriesMode::MeanValue { s }, SeriesMode::MeanValue { s: s2 }) => *s == s2,
        _ => false,
    };
    if same {
        Ok(())
    } else {
        Err(Error::ModeMismatch(format!("{what} computed in {got:?}, theorem needs {want:?}")))
    }
}

/// Main term of the given theorem from its constituents.
///
/// The modes, when given, must match the theorem; the integral does not depend
/// on `n`, so only the series mode is checked against the target.
pub fn main_term(
    theorem: &Theorem,
    c: &Constituents,
    series_mode: Option<&SeriesMode>,
    integral_mode: Option<&SeriesMode>,
) -> Result<PredictionReport> {
    let mut gamma_ratio = None;
    let value = match *theorem {
        Theorem::Waring { k, s, n } => {
            check_ks(k, s)?;
            let want = SeriesMode::Waring { s, n };
            expect_mode(series_mode, want, "series", true)?;
            expect_mode(integral_mode, want, "integral", false)?;
            c.a.powi(s as i32) / n as f64 * c.series * c.integral
        }
        Theorem::Mixed { k, s, u, n } => {
            check_ks(k, s)?;
            let want = SeriesMode::Mixed { s, u, n };
            expect_mode(series_mode, want, "series", true)?;
            expect_mode(integral_mode, want, "integral", false)?;
            c.a.powi(s as i32) * rational_power(n as f64, u as i64 - k as i64, k) * c.series * c.integral
        }
        Theorem::MeanValue { big_k, s, x } => {
            if s == 0 || x == 0 {
                return Err(invalid("s and X must be positive"));
            }
            let want = SeriesMode::MeanValue { s };
            expect_mode(series_mode, want, "series", false)?;
            expect_mode(integral_mode, want, "integral", false)?;
            c.a.powi(2 * s as i32) * (x as f64).powi(-(big_k as i32)) * c.series * c.integral
        }
        Theorem::PrimeWaring { k, s, n } => {
            expect_mode(series_mode, SeriesMode::Waring { s, n }, "series", true)?;
            gamma_ratio = Some(prime_gamma_ratio(k, s)?);
            prime_main_term(k, s, n, c.series)?
        }
    };
    let confidence = match (c.series_delta, c.integral_delta) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    Ok(PredictionReport {
        theorem: *theorem,
        main_term: value,
        constituents: *c,
        gamma_ratio,
        confidence,
        exact: None,
        ratio: None,
        residual: None,
    })
}

fn check_ks(k: u32, s: u32) -> Result<()> {
    if k == 0 || s == 0 {
        return Err(invalid("k and s must be positive"));
    }
    Ok(())
}

/// `Gamma(1/k)^s / Gamma(s/k)`.
pub fn prime_gamma_ratio(k: u32, s: u32) -> Result<f64> {
    check_ks(k, s)?;
    let (kf, sf) = (k as f64, s as f64);
    // log-gamma keeps large s finite
    Ok((sf * libm::lgamma(1.0 / kf) - libm::lgamma(sf / kf)).exp())
}

/// `Gamma(1/k)^s / Gamma(s/k) S n^{s/k - 1} / (log n)^s`.
pub fn prime_main_term(k: u32, s: u32, n: u64, series: f64) -> Result<f64> {
    if n < 3 {
        return Err(invalid("n must be at least 3"));
    }
    let ratio = prime_gamma_ratio(k, s)?;
    let nf = n as f64;
    Ok(ratio * series * rational_power(nf, s as i64 - k as i64, k) / nf.ln().powi(s as i32))
}

/// Same formula at a real `n`, for checks at points like `n = e`.
pub fn prime_main_term_real(k: u32, s: u32, n: f64, series: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(invalid("n must exceed 1"));
    }
    let ratio = prime_gamma_ratio(k, s)?;
    Ok(ratio * series * n.powf(s as f64 / k as f64 - 1.0) / n.ln().powi(s as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum YVariant {
    /// Four branches, exponent `1/5`.
    Waring,
    /// No `Q_W` branch, exponent `1/5`.
    Mixed,
    /// Four branches, exponent `1/(2r + 3)`.
    MeanValue { r: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YInputs {
    pub q_d: f64,
    pub q_w: f64,
    pub a: f64,
    pub e: f64,
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct YReport {
    pub variant: YVariant,
    pub branches: Vec<(String, f64)>,
    pub value: f64,
    pub binding: String,
}

/// `Y(X)` with every branch reported.
pub fn compute_y(inputs: &YInputs, variant: YVariant) -> Result<YReport> {
    let YInputs { q_d, q_w, a, e, x } = *inputs;
    if [q_d, q_w, a, e, x].iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("Y inputs must be positive and finite"));
    }
    let expo = match variant {
        YVariant::Waring | YVariant::Mixed => 1.0 / 5.0,
        YVariant::MeanValue { r } if r >= 1 => 1.0 / (2 * r + 3) as f64,
        YVariant::MeanValue { .. } => return Err(invalid("r must be at least 1")),
    };
    let mut branches = vec![("Q_D".to_string(), q_d)];
    if variant != YVariant::Mixed {
        branches.push(("Q_W".into(), q_w));
    }
    branches.push(("(A/E)^e".into(), (a / e).powf(expo)));
    branches.push(("X^e".into(), x.powf(expo)));
    let (binding, value) = branches
        .iter()
        .fold((String::new(), f64::INFINITY), |acc, (n, v)| if *v < acc.1 { (n.clone(), *v) } else { acc });
    Ok(YReport {
        variant,
        branches,
        value,
        binding,
    })
}

/// Which hypothesis set to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    /// `s > 2 t0 + sigma0`.
    Waring,
    /// `s >= 2 t0` and `u > sigma0`.
    Mixed,
    /// `2s > 2 t0 + sigma0`.
    MeanValue,
    /// Dense sets via the mean value theorem.
    DenseA,
    /// Convex sets with a supplied constant `C`.
    ConvexB,
    /// Ellipsephic sets with a `B_m` digit set.
    Ellipsephic,
    /// `s >= k(k-1) + 2 floor(sqrt(2k+1)) + 1`.
    Primes,
}

/// Measured or configured proxies; absent values are reported as missing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Measurements {
    pub k: Option<u32>,
    pub r: Option<u32>,
    pub s: Option<u32>,
    pub u: Option<u32>,
    pub t0: Option<f64>,
    pub rho: Option<f64>,
    pub omega: Option<f64>,
    pub sigma0: Option<f64>,
    pub lambda: Option<f64>,
    pub m: Option<u32>,
    /// The constant of the convex case.
    pub c: Option<f64>,
    /// Gaps of the set are nondecreasing.
    pub convex: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Applicability {
    pub theorem: TheoremId,
    pub checks: Vec<Check>,
    /// Where `sigma0` came from when it was derived.
    pub sigma0_source: Option<String>,
    pub verdict: bool,
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::MissingMeasurement(name.into()))
}

fn check(name: &str, op: &str, lhs: f64, rhs: f64) -> Check {
    let holds = match op {
        ">" => lhs > rhs,
        ">=" => lhs >= rhs,
        "<" => lhs < rhs,
        _ => lhs <= rhs,
    };
    Check {
        name: name.into(),
        inequality: format!("{lhs} {op} {rhs}"),
        lhs,
        rhs,
        holds,
    }
}

/// `sigma0` as given, or from the corollary bound `c omega / rho`.
fn sigma0(m: &Measurements, factor: f64, rho: Option<f64>) -> Result<(f64, Option<String>)> {
    if let Some(s) = m.sigma0 {
        return Ok((s, None));
    }
    match (m.omega, rho) {
        (Some(w), Some(rho)) if rho > 0.0 => Ok((factor * w / rho, Some(format!("{factor} * omega / rho")))),
        _ => Err(Error::MissingMeasurement("sigma0 (or omega and rho)".into())),
    }
}

/// Evaluates the hypotheses of a theorem on measured proxies.
pub fn applicability(theorem: TheoremId, m: &Measurements) -> Result<Applicability> {
    let mut checks = Vec::new();
    let mut source = None;
    match theorem {
        TheoremId::Waring => {
            let s = need(m.s, "s")? as f64;
            let t0 = need(m.t0, "t0")?;
            let (sig, src) = sigma0(m, 5.0, m.rho)?;
            source = src;
            checks.push(check("s > 2 t0 + sigma0", ">", s, 2.0 * t0 + sig));
        }
        TheoremId::Mixed => {
            let s = need(m.s, "s")? as f64;
            let u = need(m.u, "u")? as f64;
            let t0 = need(m.t0, "t0")?;
            let rho = match m.k {
                Some(k) => Some(rho0(k)?),
                None => m.rho,
            };
            let (sig, src) = sigma0(m, 5.0, rho)?;
            source = src;
            checks.push(check("s >= 2 t0", ">=", s, 2.0 * t0));
            checks.push(check("u > sigma0", ">", u, sig));
        }
        TheoremId::MeanValue => {
            let s = need(m.s, "s")? as f64;
            let t0 = need(m.t0, "t0")?;
            let r = need(m.r, "r")? as f64;
            let (sig, src) = sigma0(m, 2.0 * r + 3.0, m.rho)?;
            source = src;
            checks.push(check("2s > 2 t0 + sigma0", ">", 2.0 * s, 2.0 * t0 + sig));
        }
        TheoremId::DenseA => {
            let k = need(m.k, "k")?;
            let s = need(m.s, "s")? as f64;
            let lam = need(m.lambda, "lambda")?;
            let (a, b) = (rho0(k)?, rho0(k + 1)?);
            checks.push(check("1/lambda < 1 + rho0(k) rho0(k+1) / 5", "<", 1.0 / lam, 1.0 + a * b / 5.0));
            checks.push(check("s >= 1/rho0(k+1) + 1", ">=", s, 1.0 / b + 1.0));
        }
        TheoremId::ConvexB => {
            let k = need(m.k, "k")?;
            let s = need(m.s, "s")? as f64;
            let lam = need(m.lambda, "lambda")?;
            let c = need(m.c, "C")?;
            let convex = need(m.convex, "convex")?;
            let kf = k as f64;
            checks.push(check("1/lambda < 1 + rho0(k) / (10k)", "<", 1.0 / lam, 1.0 + rho0(k)? / (10.0 * kf)));
            checks.push(Check {
                name: "gaps nondecreasing".into(),
                inequality: format!("{convex}"),
                lhs: f64::from(u8::from(convex)),
                rhs: 1.0,
                holds: convex,
            });
            checks.push(check("s >= C 2^k log k", ">=", s, c * 2f64.powi(k as i32) * kf.ln()));
        }
        TheoremId::Ellipsephic => {
            let k = need(m.k, "k")?;
            let s = need(m.s, "s")? as f64;
            let lam = need(m.lambda, "lambda")?;
            let mm = need(m.m, "m")?;
            let kf = k as f64;
            let rhs = 1.0 / lam - 2.0 * rho0(k)? / (5.0 * kf * (kf + 1.0));
            checks.push(check("m > 1/lambda - 2 rho0 / (5k(k+1))", ">", mm as f64, rhs));
            checks.push(check("s >= m k (k+1)", ">=", s, mm as f64 * kf * (kf + 1.0)));
        }
        TheoremId::Primes => {
            let k = need(m.k, "k")? as u64;
            let s = need(m.s, "s")? as f64;
            let bound = k * k.saturating_sub(1) + 2 * isqrt(2 * k + 1) + 1;
            checks.push(check("s >= k(k-1) + 2 floor(sqrt(2k+1)) + 1", ">=", s, bound as f64));
        }
    }
    let verdict = checks.iter().all(|c| c.holds);
    Ok(Applicability {
        theorem,
        checks,
        sigma0_source: source,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparePoint {
    pub n: u64,
    pub exact: String,
    pub predicted: f64,
    pub ratio: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub window: (u64, u64),
    pub points: Vec<ComparePoint>,
    pub mean_ratio: Option<f64>,
    pub max_deviation: Option<f64>,
    pub flagged: usize,
}

impl Comparison {
    /// `n,exact,predicted,ratio`; the ratio is empty where undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,exact,predicted,ratio\n");
        for p in &self.points {
            let ratio = p.ratio.map(|r| r.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", p.n, p.exact, p.predicted, ratio);
        }
        out
    }
}

/// Pairs exact values with predictions on the shared `n` inside `window`.
pub fn compare(
    exact: &[(u64, BigRational)],
    predicted: &[(u64, f64)],
    window: Option<(u64, u64)>,
) -> Result<Comparison> {
    let (lo, hi) = window.unwrap_or((0, u64::MAX));
    let mut pred: Vec<(u64, f64)> = predicted.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi).collect();
    pred.sort_by_key(|p| p.0);
    let mut points = Vec::new();
    for (n, e) in exact {
        if *n < lo || *n > hi {
            continue;
        }
        let Ok(i) = pred.binary_search_by_key(n, |p| p.0) else { continue };
        let predicted = pred[i].1;
        let ef = rat_to_f64(e);
        let (ratio, flag) = if predicted != 0.0 {
            (Some(ef / predicted), None)
        } else if ef > 0.0 {
            (None, Some("local obstruction mismatch".to_string()))
        } else {
            (None, Some("local obstruction".to_string()))
        };
        points.push(ComparePoint {
            n: *n,
            exact: format_rational(e),
            predicted,
            ratio,
            flag,
        });
    }
    if points.is_empty() {
        return Err(invalid("exact values and predictions do not overlap"));
    }
    points.sort_by_key(|p| p.n);
    let ratios: Vec<f64> = points.iter().filter_map(|p| p.ratio).collect();
    let mean_ratio = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);
    let max_deviation = ratios.iter().map(|r| (r - 1.0).abs()).reduce(f64::max);
    let window = (points[0].n, points[points.len() - 1].n);
    let flagged = points.iter().filter(|p| p.flag.as_deref() == Some("local obstruction mismatch")).count();
    Ok(Comparison {
        window,
        points,
        mean_ratio,
        max_deviation,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rho0_table() {
        assert_eq!(rho0_inverse(1).unwrap(), 1);
        assert_eq!(rho0_inverse(2).unwrap(), 2);
        assert_eq!(rho0_inverse(3).unwrap(), 4);
        assert_eq!(rho0_inverse(6).unwrap(), 26);
        assert_eq!(rho0_inverse(64).unwrap(), 63 * 62 + 2 * 11);
        assert!(rho0_inverse(65).is_err());
    }

    #[test]
    fn unit_constants_give_the_power() {
        let c = Constituents {
            a: 100.0,
            series: 1.0,
            integral: 1.0,
            ..Default::default()
        };
        let r = main_term(&Theorem::Waring { k: 2, s: 5, n: 10_000 }, &c, None, None).unwrap();
        assert!((r.main_term - 1e6).abs() < 1e-6);
        let r = main_term(&Theorem::MeanValue { big_k: 2, s: 4, x: 100 }, &c, None, None).unwrap();
        assert!((r.main_term - 1e12).abs() < 1.0);
        let err = main_term(
            &Theorem::Waring { k: 2, s: 5, n: 10 },
            &c,
            Some(&SeriesMode::MeanValue { s: 5 }),
            None,
        );
        assert!(matches!(err, Err(Error::ModeMismatch(_))));
    }

    #[test]
    fn prime_formula() {
        let n = 1_000_000u64;
        let v = prime_main_term(2, 5, n, 1.0).unwrap();
        let nf = n as f64;
        let want = 4.0 * PI * PI / 3.0 * nf.powf(1.5) / nf.ln().powi(5);
        assert!((v - want).abs() < 1e-12 * want);
        let v = prime_main_term_real(1, 2, std::f64::consts::E, 1.0).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-12);
        for k in 1..6 {
            let g = prime_gamma_ratio(k, k).unwrap();
            let direct = libm::tgamma(1.0 / k as f64).powi(k as i32) / libm::tgamma(1.0);
            assert!((g - direct).abs() < 1e-12 * direct);
        }
        assert!(prime_main_term(2, 5, 2, 1.0).is_err());
    }

    #[test]
    fn y_branches() {
        let inp = YInputs {
            q_d: 1e5,
            q_w: 1e5,
            a: 1e5,
            e: 1.0,
            x: 1e5,
        };
        let y = compute_y(&inp, YVariant::Waring).unwrap();
        assert!((y.value - 10.0).abs() < 1e-9);
        assert_eq!(y.branches.len(), 4);
        let y1 = compute_y(&inp, YVariant::MeanValue { r: 1 }).unwrap();
        assert_eq!(y.value, y1.value);
        assert_eq!(compute_y(&inp, YVariant::Mixed).unwrap().branches.len(), 3);
        let deg = YInputs { e: 1e5, ..inp };
        let y = compute_y(&deg, YVariant::Waring).unwrap();
        assert_eq!(y.value, 1.0);
        assert_eq!(y.binding, "(A/E)^e");
    }

    #[test]
    fn applicability_cases() {
        let m = Measurements {
            k: Some(2),
            s: Some(12),
            lambda: Some(3f64.ln() / 5f64.ln()),
            m: Some(2),
            ..Default::default()
        };
        let v = applicability(TheoremId::Ellipsephic, &m).unwrap();
        assert!(v.verdict);
        assert!((v.checks[0].rhs - (5f64.ln() / 3f64.ln() - 1.0 / 30.0)).abs() < 1e-12);
        let m = Measurements {
            s: Some(10),
            t0: Some(5.0),
            sigma0: Some(0.0),
            ..Default::default()
        };
        assert!(!applicability(TheoremId::Waring, &m).unwrap().verdict);
        assert!(matches!(
            applicability(TheoremId::Mixed, &m),
            Err(Error::MissingMeasurement(_))
        ));
        let m = Measurements {
            k: Some(2),
            s: Some(7),
            ..Default::default()
        };
        assert!(applicability(TheoremId::Primes, &m).unwrap().verdict);
        let m = Measurements { s: Some(6), ..m };
        assert!(!applicability(TheoremId::Primes, &m).unwrap().verdict);
    }

    #[test]
    fn compare_flags() {
        let r = |n: i64| BigRational::from_integer(n.into());
        let exact = vec![(1, r(4)), (2, r(6)), (3, r(2))];
        let pred = vec![(1, 4.0), (2, 6.0), (3, 0.0)];
        let c = compare(&exact, &pred, None).unwrap();
        assert_eq!(c.mean_ratio, Some(1.0));
        assert_eq!(c.flagged, 1);
        assert!(c.to_csv().starts_with("n,exact,predicted,ratio\n1,4,4,1\n"));
        assert!(compare(&exact, &[(9, 1.0)], None).is_err());
    }
}
