//! Continuous approximants `Psi` to the counting function `A(X)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::arith::{format_rational, rat_to_f64};
use crate::error::{invalid, Error, Result};
use crate::quad::{self, QuadConfig};
use crate::sets::WeightedSet;

/// Piecewise-linear interpolant of `A` through its support points.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseStar {
    xs: Vec<u64>,
    masses: Vec<BigRational>,
    densities: Vec<BigRational>,
    masses_f64: Vec<f64>,
    densities_f64: Vec<f64>,
    /// Maximal runs of equal density as `(x_start, x_end, density)`.
    runs: Vec<(u64, u64, f64)>,
}

/// `Psi = li(tau) x / tau` below `tau` and `li(x)` above.
#[derive(Clone, Debug, PartialEq)]
pub struct LiProfile {
    tau: f64,
    li_tau: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsiKind {
    PiecewiseStar(PiecewiseStar),
    LiProfile(LiProfile),
}

/// An approximant together with its scale `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiApprox {
    kind: PsiKind,
    scale: u64,
}

/// A piece of the rescaled measure `sigma_A` on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaPiece {
    /// Constant density on `[z0, z1]`.
    Const { z0: f64, z1: f64, density: f64 },
    /// Density `coef / log(scale z)` on `[z0, z1]`.
    InvLog { z0: f64, z1: f64, coef: f64, scale: f64 },
}

impl SigmaPiece {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            SigmaPiece::Const { z0, z1, .. } | SigmaPiece::InvLog { z0, z1, .. } => (z0, z1),
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        match *self {
            SigmaPiece::Const { density, .. } => density,
            SigmaPiece::InvLog { coef, scale, .. } => coef / (scale * z).ln(),
        }
    }
}

/// Builds the piecewise-linear approximant `Psi*` of `A`.
pub fn build_psi_star(a: &WeightedSet) -> Result<PsiApprox> {
    if a.is_empty() {
        return Err(invalid("empty support"));
    }
    let xs = a.support().to_vec();
    let masses = a.cumulative_masses();
    let mut densities = Vec::with_capacity(xs.len());
    let mut prev = 0u64;
    for (i, &x) in xs.iter().enumerate() {
        densities.push(a.weight_at(i) / BigRational::from_integer(BigInt::from(x - prev)));
        prev = x;
    }
    let mut runs: Vec<(u64, u64, f64)> = Vec::new();
    let mut start = 0u64;
    for i in 0..xs.len() {
        let last = i + 1 == xs.len() || densities[i + 1] != densities[i];
        if last {
            runs.push((start, xs[i], rat_to_f64(&densities[i])));
            start = xs[i];
        }
    }
    Ok(PsiApprox {
        kind: PsiKind::PiecewiseStar(PiecewiseStar {
            masses_f64: masses.iter().map(rat_to_f64).collect(),
            densities_f64: densities.iter().map(rat_to_f64).collect(),
            xs,
            masses,
            densities,
            runs,
        }),
        scale: a.bound(),
    })
}

/// The prime-counting approximant with crossover `tau > 2`.
pub fn li_profile(tau: f64, scale: u64) -> Result<PsiApprox> {
    if !(tau > 2.0) {
        return Err(invalid("tau must exceed 2"));
    }
    Ok(PsiApprox {
        kind: PsiKind::LiProfile(LiProfile { tau, li_tau: li(tau) }),
        scale,
    })
}

/// `li(x) = integral of 1/log t over [2, x]`, to `1e-12` absolute or a few ulps
/// of the value, whichever is larger.
pub fn li(x: f64) -> f64 {
    if x == 2.0 {
        return 0.0;
    }
    if x < 2.0 {
        return -li_between(x, 2.0);
    }
    li_between(2.0, x)
}

fn li_between(a: f64, b: f64) -> f64 {
    let mut breaks = vec![a];
    let mut t = a;
    while t * 2.0 < b {
        t *= 2.0;
        breaks.push(t);
    }
    breaks.push(b);
    // 1e-12 overall, but never below rounding of the integrand itself
    let cfg = QuadConfig {
        tol: (1e-12 / (b - a).max(1.0)).max(16.0 * f64::EPSILON / a.max(2.0).ln()),
        max_depth: 40,
        ..QuadConfig::default()
    };
    quad::integrate_breaks(&mut |t: f64| 1.0 / t.ln(), &breaks, &cfg)
        .map(|q| q.value)
        .unwrap_or(f64::NAN)
}

impl PsiApprox {
    pub fn kind(&self) -> &PsiKind {
        &self.kind
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    /// Same approximant at a different scale.
    pub fn with_scale(&self, scale: u64) -> PsiApprox {
        PsiApprox {
            kind: self.kind.clone(),
            scale,
        }
    }

    /// `(Psi(x), psi(x))`, with `psi` the right derivative at breakpoints.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        if !(x >= 0.0) {
            return Err(invalid("x must be nonnegative"));
        }
        Ok(match &self.kind {
            PsiKind::PiecewiseStar(s) => s.eval(x),
            PsiKind::LiProfile(l) => {
                if x <= l.tau {
                    let d = l.li_tau / l.tau;
                    (d * x, if x < l.tau { d } else { 1.0 / x.ln() })
                } else {
                    (l.li_tau + li_between(l.tau, x), 1.0 / x.ln())
                }
            }
        })
    }

    /// `Psi(X)` at the approximant's own scale.
    pub fn total(&self) -> f64 {
        self.evaluate(self.scale as f64).map(|v| v.0).unwrap_or(f64::NAN)
    }

    /// Exact `Psi(x)` for the piecewise-linear variant.
    pub fn evaluate_exact(&self, x: &BigRational) -> Result<BigRational> {
        let PsiKind::PiecewiseStar(s) = &self.kind else {
            return Err(invalid("exact evaluation needs the piecewise-linear variant"));
        };
        if x.is_negative() {
            return Err(invalid("x must be nonnegative"));
        }
        let i = s
            .xs
            .partition_point(|&v| BigRational::from_integer(BigInt::from(v)) <= *x);
        if i == s.xs.len() {
            return Ok(s.masses[i - 1].clone());
        }
        let (x0, m0) = if i == 0 {
            (BigRational::zero(), BigRational::zero())
        } else {
            (
                BigRational::from_integer(BigInt::from(s.xs[i - 1])),
                s.masses[i - 1].clone(),
            )
        };
        Ok(m0 + &s.densities[i] * (x - x0))
    }

    /// Least `x` with `Psi(x) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let top = self.total();
        if !(y >= 0.0) || y > top * (1.0 + 1e-14) + 1e-300 {
            return Err(invalid(format!("y = {y} outside [0, {top}]")));
        }
        let y = y.min(top);
        Ok(match &self.kind {
            PsiKind::PiecewiseStar(s) => s.inv(y),
            PsiKind::LiProfile(l) => l.inv(y),
        })
    }

    /// Exact inverse for the piecewise-linear variant.
    pub fn inverse_exact(&self, y: &BigRational) -> Result<BigRational> {
        let PsiKind::PiecewiseStar(s) = &self.kind else {
            return Err(invalid("exact inverse needs the piecewise-linear variant"));
        };
        let top = s.masses.last().unwrap();
        if y.is_negative() || y > top {
            return Err(invalid(format!("y = {y} outside [0, {top}]")));
        }
        if y.is_zero() {
            return Ok(BigRational::zero());
        }
        let i = s.masses.partition_point(|m| m < y);
        let (x0, m0) = if i == 0 {
            (BigRational::zero(), BigRational::zero())
        } else {
            (
                BigRational::from_integer(BigInt::from(s.xs[i - 1])),
                s.masses[i - 1].clone(),
            )
        };
        Ok(x0 + (y - m0) / &s.densities[i])
    }

    /// `z(xi) = Psi^{-1}(Psi(X) xi) / X`.
    pub fn z_map(&self, x: u64, xi: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(invalid("xi must lie in [0, 1]"));
        }
        let scaled = self.with_scale(x);
        let y = scaled.total() * xi;
        Ok(scaled.inverse(y)? / x as f64)
    }

    /// The measure `sigma_A` on `[0, 1]` at scale `x`, as pieces.
    pub fn sigma_pieces(&self, x: u64) -> Vec<SigmaPiece> {
        let xf = x as f64;
        let scaled = self.with_scale(x);
        let norm = xf / scaled.total();
        match &self.kind {
            PsiKind::PiecewiseStar(s) => s
                .runs
                .iter()
                .filter(|r| (r.0 as f64) < xf)
                .map(|&(x0, x1, d)| SigmaPiece::Const {
                    z0: x0 as f64 / xf,
                    z1: (x1 as f64).min(xf) / xf,
                    density: norm * d,
                })
                .collect(),
            PsiKind::LiProfile(l) => {
                let zt = (l.tau / xf).min(1.0);
                let mut v = vec![SigmaPiece::Const {
                    z0: 0.0,
                    z1: zt,
                    density: norm * l.li_tau / l.tau,
                }];
                if zt < 1.0 {
                    v.push(SigmaPiece::InvLog {
                        z0: zt,
                        z1: 1.0,
                        coef: norm,
                        scale: xf,
                    });
                }
                v
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match &self.kind {
            PsiKind::PiecewiseStar(s) => json!({
                "variant": "piecewise_star",
                "scale": self.scale,
                "breakpoints": s.xs,
                "densities": s.densities.iter().map(format_rational).collect::<Vec<_>>(),
            }),
            PsiKind::LiProfile(l) => json!({
                "variant": "li_profile",
                "scale": self.scale,
                "tau": l.tau,
            }),
        }
    }
}

impl PiecewiseStar {
    fn eval(&self, x: f64) -> (f64, f64) {
        let i = self.xs.partition_point(|&v| (v as f64) <= x);
        if i == self.xs.len() {
            return (*self.masses_f64.last().unwrap(), 0.0);
        }
        let (x0, m0) = if i == 0 {
            (0.0, 0.0)
        } else {
            (self.xs[i - 1] as f64, self.masses_f64[i - 1])
        };
        let d = self.densities_f64[i];
        (m0 + d * (x - x0), d)
    }

    fn inv(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let i = self.masses_f64.partition_point(|&m| m < y);
        if i == self.xs.len() {
            return *self.xs.last().unwrap() as f64;
        }
        let (x0, m0) = if i == 0 {
            (0.0, 0.0)
        } else {
            (self.xs[i - 1] as f64, self.masses_f64[i - 1])
        };
        (x0 + (y - m0) / self.densities_f64[i]).min(self.xs[i] as f64)
    }
}

impl LiProfile {
    fn inv(&self, y: f64) -> f64 {
        if y <= self.li_tau {
            return y * self.tau / self.li_tau;
        }
        // Safeguarded Newton on li(x) = y with incremental integrals.
        let (mut lo, mut hi) = (self.tau, self.tau.max(2.0 * y * (y.ln() + 2.0)));
        let mut x = (y * y.ln()).clamp(lo, hi);
        let mut lx = self.li_tau + li_between(self.tau, x);
        for _ in 0..200 {
            let f = lx - y;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - f * x.ln();
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = next - x;
            lx += if step >= 0.0 {
                li_between(x, next)
            } else {
                -li_between(next, x)
            };
            x = next;
            if step.abs() <= 1e-13 * x {
                break;
            }
        }
        x
    }
}

/// Observed `sup |A(X) - Psi(X)|` over a grid.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ApproxError {
    pub sup: f64,
    pub argmax: u64,
    /// Largest single weight, for the piecewise-linear variant.
    pub max_weight: Option<String>,
}

pub fn approximation_error(a: &WeightedSet, approx: &PsiApprox, grid: &[u64]) -> Result<ApproxError> {
    let mut sup = -1.0;
    let mut argmax = 0;
    for &x in grid {
        if x > a.bound() {
            return Err(Error::BoundExceeded { x, bound: a.bound() });
        }
        let d = (a.count_up_to_f64(x as f64) - approx.evaluate(x as f64)?.0).abs();
        if d > sup {
            sup = d;
            argmax = x;
        }
    }
    let max_weight = match approx.kind {
        PsiKind::PiecewiseStar(_) => Some(format_rational(&a.max_weight())),
        PsiKind::LiProfile(_) => None,
    };
    Ok(ApproxError {
        sup: sup.max(0.0),
        argmax,
        max_weight,
    })
}

/// Float value of an exact Psi mass, for reports.
pub fn mass_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{generate_set, SetSpec};

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn powers() -> WeightedSet {
        WeightedSet::unit(8, vec![1, 2, 4, 8], "powers").unwrap()
    }

    #[test]
    fn star_examples() {
        let p = build_psi_star(&powers()).unwrap();
        let PsiKind::PiecewiseStar(s) = p.kind() else { unreachable!() };
        assert_eq!(s.densities, vec![r(1, 1), r(1, 1), r(1, 2), r(1, 4)]);
        assert_eq!(p.evaluate_exact(&r(4, 1)).unwrap(), r(3, 1));
        assert_eq!(p.evaluate(3.0).unwrap(), (2.5, 0.5));
        assert_eq!(p.inverse_exact(&r(5, 2)).unwrap(), r(3, 1));
        assert!((p.z_map(8, 0.5).unwrap() - 0.25).abs() < 1e-15);

        let single = WeightedSet::from_pairs(3, vec![(3, r(5, 1))], "atom").unwrap();
        let q = build_psi_star(&single).unwrap();
        assert_eq!(q.evaluate_exact(&r(3, 1)).unwrap(), r(5, 1));
        assert_eq!(q.evaluate_exact(&r(3, 2)).unwrap(), r(5, 2));
    }

    #[test]
    fn naturals_give_identity() {
        let n = generate_set(&SetSpec::Naturals, 5).unwrap();
        let p = build_psi_star(&n).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 10.0;
            assert_eq!(p.evaluate(x).unwrap().0, x);
        }
        assert_eq!(p.inverse(4.25).unwrap(), 4.25);
        assert_eq!(p.sigma_pieces(5).len(), 1);
        assert_eq!(p.evaluate(0.0).unwrap().0, 0.0);
    }

    #[test]
    fn li_profile_values() {
        // integral of 1/log t over [2, 3]
        assert!((li(3.0) - 1.118_424_814_549_699).abs() < 1e-12);
        let p = li_profile(3.0, 1000).unwrap();
        let (v, _) = p.evaluate(3.0).unwrap();
        assert!((v - li(3.0)).abs() < 1e-15);
        assert!((p.inverse(v).unwrap() - 3.0).abs() < 1e-12);
        let (v, d) = p.evaluate(500.0).unwrap();
        assert!((p.inverse(v).unwrap() - 500.0).abs() < 1e-9);
        assert!((d - 1.0 / 500f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn approximation_error_of_powers() {
        let a = powers();
        let p = build_psi_star(&a).unwrap();
        let grid: Vec<u64> = (1..=8).collect();
        let e = approximation_error(&a, &p, &grid).unwrap();
        assert!((e.sup - 0.75).abs() < 1e-15);
        assert_eq!(e.argmax, 7);
        assert_eq!(e.max_weight.as_deref(), Some("1"));
    }
}
