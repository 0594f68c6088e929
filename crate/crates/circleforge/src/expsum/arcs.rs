use num_complex::Complex64;
use rayon::prelude::*;

use super::{complete_sum, v_integral, weyl_sum, Phase, PolySystem};
use crate::arith;
use crate::error::{invalid, Error, Result};
use crate::psi::PsiApprox;
use crate::quad::{e, QuadConfig};
use crate::sets::{to_f64, DistributionProfile, WeightedSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ArcMode {
    /// `||q alpha|| <= Q X^{-k}` for a single polynomial.
    M,
    /// `|alpha_j - b_j/q| <= Q X^{-k_j}` for every component.
    N,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ArcParams {
    pub x: u64,
    pub q: u64,
    pub degrees: Vec<u32>,
    /// `2 Q^2 <= X^{k_1}`, under which distinct arcs cannot overlap.
    pub disjoint: bool,
}

impl ArcParams {
    pub fn new(x: u64, q: u64, phi: &PolySystem) -> Result<Self> {
        if q == 0 || x == 0 {
            return Err(invalid("X and Q must be positive"));
        }
        let k1 = phi.k_min() as i32;
        Ok(ArcParams {
            x,
            q,
            degrees: phi.terms().iter().map(|t| t.1).collect(),
            disjoint: 2.0 * (q as f64).powi(2) <= (x as f64).powi(k1),
        })
    }

    fn width(&self, j: usize) -> f64 {
        self.q as f64 * (self.x as f64).powi(-(self.degrees[j] as i32))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub enum Membership {
    Major {
        q: u64,
        b: Vec<u64>,
        beta: Vec<f64>,
        /// `gcd(q, b_1, ..., b_r)`.
        gcd: u64,
    },
    Minor,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ArcPoint {
    pub alpha: Vec<f64>,
    pub membership: Membership,
}

impl ArcPoint {
    pub fn is_major(&self) -> bool {
        matches!(self.membership, Membership::Major { .. })
    }
}

/// Finds the least `q <= Q` approximating `alpha`.
pub fn arc_membership(alpha: &[f64], params: &ArcParams, mode: ArcMode) -> Result<ArcPoint> {
    if alpha.len() != params.degrees.len() {
        return Err(invalid("alpha must have one entry per polynomial"));
    }
    if alpha.iter().any(|a| !(0.0..1.0).contains(a)) {
        return Err(invalid("alpha components must lie in [0, 1)"));
    }
    if mode == ArcMode::M && alpha.len() != 1 {
        return Err(invalid("mode M is defined for a single polynomial"));
    }
    for q in 1..=params.q {
        let qf = q as f64;
        let mut b = Vec::with_capacity(alpha.len());
        let mut beta = Vec::with_capacity(alpha.len());
        let mut ok = true;
        for (j, &a) in alpha.iter().enumerate() {
            let bj = (a * qf).round();
            let bt = a - bj / qf;
            let hit = match mode {
                ArcMode::M => (a * qf - bj).abs() <= params.width(j),
                ArcMode::N => bt.abs() <= params.width(j),
            };
            if !hit {
                ok = false;
                break;
            }
            b.push((bj as u64) % q);
            beta.push(bt);
        }
        if ok {
            let gcd = b.iter().fold(q, |g, &v| arith::gcd(g, v));
            return Ok(ArcPoint {
                alpha: alpha.to_vec(),
                membership: Membership::Major { q, b, beta, gcd },
            });
        }
    }
    Ok(ArcPoint {
        alpha: alpha.to_vec(),
        membership: Membership::Minor,
    })
}

/// Grid search settings for the minor-arc supremum.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Grid points per unit are `density * Q * X^{k-1}`; at least 4.
    pub density: f64,
    pub refine_steps: u32,
    /// Number of best grid points refined by golden-section ascent.
    pub candidates: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            density: 4.0,
            refine_steps: 40,
            candidates: 8,
        }
    }
}

/// Observed minor-arc supremum; always a lower bound for the true value.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SupEstimate {
    pub q: u64,
    pub sup: f64,
    pub argmax: f64,
    pub grid_points: u64,
    pub lower_bound: bool,
}

/// `min_{q <= qmax} max(q, ||q j/n|| X^k)`; the point is major for `Q` iff this is `<= Q`.
fn major_level(j: u64, n: u64, qmax: u64, xk: f64) -> f64 {
    let mut best = f64::INFINITY;
    for q in 1..=qmax {
        if q as f64 >= best {
            break;
        }
        let r = arith::mulmod(q, j, n);
        let dist = r.min(n - r) as f64 / n as f64 * xk;
        best = best.min(dist.max(q as f64));
    }
    best
}

fn level_at(alpha: f64, qmax: u64, xk: f64) -> f64 {
    let mut best = f64::INFINITY;
    for q in 1..=qmax {
        if q as f64 >= best {
            break;
        }
        let t = alpha * q as f64;
        let dist = (t - t.round()).abs() * xk;
        best = best.min(dist.max(q as f64));
    }
    best
}

/// Sweeps `alpha = j/N` over `[0, 1/2]` and reports the largest `|f|` on the
/// minor arcs for each `Q`, refined locally.
pub fn minor_arc_sweep(
    a: &WeightedSet,
    phi: &PolySystem,
    x: u64,
    qs: &[u64],
    search: &SearchConfig,
) -> Result<Vec<SupEstimate>> {
    if phi.r() != 1 {
        return Err(invalid("the minor-arc search supports a single polynomial only"));
    }
    if x > a.bound() {
        return Err(Error::BoundExceeded { x, bound: a.bound() });
    }
    if qs.is_empty() || qs.contains(&0) {
        return Err(invalid("Q list must be nonempty and positive"));
    }
    if search.density < 4.0 {
        return Err(invalid("grid density must be at least 4 Q X^{k-1}"));
    }
    let k = phi.k_max() as i32;
    let xk = (x as f64).powi(k);
    let qmax = *qs.iter().max().unwrap();
    for &q in qs {
        if (q as f64).powi(2) >= xk {
            return Err(invalid(format!(
                "Q = {q} leaves no minor arcs: Q^2 >= X^k"
            )));
        }
    }
    let n_f = (search.density * qmax as f64 * (x as f64).powi(k - 1)).ceil();
    if n_f > 1e9 {
        return Err(Error::Budget {
            what: format!("minor-arc grid of {n_f} points"),
            n: None,
        });
    }
    let n = n_f as u64;
    let table: Vec<Complex64> = (0..n).map(|t| e(t as f64 / n as f64)).collect();
    let w = a.weights_f64();
    let (xs, ws): (Vec<u64>, Vec<f64>) = a
        .support()
        .iter()
        .zip(&w)
        .filter(|(&v, _)| v <= x)
        .map(|(&v, &wt)| (phi.eval_mod(0, v, n), wt))
        .unzip();
    let qmin = *qs.iter().min().unwrap() as f64;
    let half = n / 2;
    let chunk = 4096u64;
    let starts: Vec<u64> = (0..=half).step_by(chunk as usize).collect();
    let values: Vec<(u64, f64, f64)> = starts
        .par_iter()
        .flat_map_iter(|&s| {
            let end = (s + chunk).min(half + 1);
            let mut idx: Vec<u64> = xs.iter().map(|&v| arith::mulmod(v, s, n)).collect();
            let mut out = Vec::new();
            for j in s..end {
                let lvl = major_level(j, n, qmax, xk);
                if lvl > qmin {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, &t) in idx.iter().enumerate() {
                        acc += table[t as usize] * ws[i];
                    }
                    out.push((j, lvl, acc.norm()));
                }
                for (i, t) in idx.iter_mut().enumerate() {
                    *t += xs[i];
                    if *t >= n {
                        *t -= n;
                    }
                }
            }
            out.into_iter()
        })
        .collect();

    let mut out = Vec::with_capacity(qs.len());
    for &q in qs {
        let qf = q as f64;
        let mut minor: Vec<&(u64, f64, f64)> = values.iter().filter(|v| v.1 > qf).collect();
        minor.sort_by(|u, v| v.2.total_cmp(&u.2).then(u.0.cmp(&v.0)));
        let (mut sup, mut arg) = match minor.first() {
            Some(v) => (v.2, v.0 as f64 / n as f64),
            None => (0.0, 0.0),
        };
        for cand in minor.iter().take(search.candidates) {
            let c = cand.0 as f64 / n as f64;
            let (v, at) = golden(a, phi, x, c - 1.0 / n as f64, c + 1.0 / n as f64, qf, qmax, xk, search.refine_steps)?;
            if v > sup {
                sup = v;
                arg = at;
            }
        }
        out.push(SupEstimate {
            q,
            sup,
            argmax: arg,
            grid_points: half + 1,
            lower_bound: true,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn golden(
    a: &WeightedSet,
    phi: &PolySystem,
    x: u64,
    lo: f64,
    hi: f64,
    q: f64,
    qmax: u64,
    xk: f64,
    steps: u32,
) -> Result<(f64, f64)> {
    let eval = |t: f64| -> Result<f64> {
        let t = t.rem_euclid(1.0);
        if level_at(t, qmax.max(q as u64), xk) <= q {
            return Ok(0.0);
        }
        Ok(weyl_sum(a, phi, &[Phase::from_f64(t)], x)?.norm())
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut l, mut h) = (lo, hi);
    let mut c = h - g * (h - l);
    let mut d = l + g * (h - l);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..steps {
        if fc >= fd {
            h = d;
            d = c;
            fd = fc;
            c = h - g * (h - l);
            fc = eval(c)?;
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + g * (h - l);
            fd = eval(d)?;
        }
    }
    Ok(if fc >= fd {
        (fc, c.rem_euclid(1.0))
    } else {
        (fd, d.rem_euclid(1.0))
    })
}

/// Single-`Q` convenience wrapper.
pub fn minor_arc_sup(
    a: &WeightedSet,
    phi: &PolySystem,
    x: u64,
    q: u64,
    search: &SearchConfig,
) -> Result<SupEstimate> {
    Ok(minor_arc_sweep(a, phi, x, &[q], search)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RhoFit {
    pub rho: f64,
    /// Intercept of the fit, `log L`.
    pub log_l: f64,
    pub residuals: Vec<f64>,
    pub residual_max: f64,
}

/// Least-squares slope of `log(sup / A(X))` against `-log Q`.
pub fn fit_rho(table: &[(f64, f64)], a_x: f64) -> Result<RhoFit> {
    let mut qs: Vec<f64> = table.iter().map(|t| t.0).collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    if qs.len() < 3 {
        return Err(Error::DegenerateFit("need at least three distinct Q".into()));
    }
    if table.iter().any(|t| !(t.0 > 0.0 && t.1 > 0.0)) || !(a_x > 0.0) {
        return Err(invalid("Q, sup and A(X) must be positive"));
    }
    let pts: Vec<(f64, f64)> = table.iter().map(|t| (-t.0.ln(), (t.1 / a_x).ln())).collect();
    let (slope, icpt) = least_squares(&pts);
    let residuals: Vec<f64> = pts.iter().map(|p| p.1 - (slope * p.0 + icpt)).collect();
    Ok(RhoFit {
        rho: slope,
        log_l: icpt,
        residual_max: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
        residuals,
    })
}

pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct MajorApproxError {
    pub q: u64,
    pub b: Vec<u64>,
    pub beta: Vec<f64>,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Compares `f(alpha)` with `S_A(q, b) v_A(beta; X)` on an extended major arc.
pub fn major_arc_approx_error(
    a: &WeightedSet,
    profile: &DistributionProfile,
    approx: &PsiApprox,
    phi: &PolySystem,
    alpha: &[Phase],
    x: u64,
    q_level: u64,
    cfg: &QuadConfig,
) -> Result<MajorApproxError> {
    let af: Vec<f64> = alpha.iter().map(|p| p.to_f64()).collect();
    let params = ArcParams::new(x, q_level, phi)?;
    let Membership::Major { q, b, .. } = arc_membership(&af, &params, ArcMode::N)?.membership else {
        return Err(invalid("alpha lies on the minor arcs"));
    };
    if q > profile.level_qd() {
        return Err(Error::UnprofiledModulus(q));
    }
    // beta from the exact phase, so that tiny offsets survive.
    let beta: Vec<f64> = alpha
        .iter()
        .zip(&b)
        .map(|(p, &bj)| {
            let t = p.to_f64() - bj as f64 / q as f64;
            t - t.round()
        })
        .collect();
    let f = weyl_sum(a, phi, alpha, x)?;
    let s = complete_sum(profile, phi, q, &b)?;
    let v = v_integral(approx, phi, &beta, x, cfg)?.value;
    let measured = (f - s * v).norm();
    let e_x = match profile.error_bound(q) {
        Some(v) => to_f64(v),
        None => profile
            .max_error_bound()
            .map(|v| to_f64(&v))
            .ok_or_else(|| Error::MissingMeasurement("error bound for the profile".into()))?,
    };
    let ax = to_f64(&a.count_up_to(x)?);
    let growth: f64 = 1.0
        + beta
            .iter()
            .zip(phi.terms())
            .map(|(bt, t)| bt.abs() * (x as f64).powi(t.1 as i32))
            .sum::<f64>();
    let bound = growth * (q as f64 * e_x + ax / x as f64);
    Ok(MajorApproxError {
        q,
        b,
        beta,
        measured,
        bound,
        ratio: measured / bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::build_psi_star;
    use crate::sets::{generate_set, SetSpec};

    #[test]
    fn membership_examples() {
        let phi = PolySystem::monomial(2);
        let p = ArcParams::new(100, 5, &phi).unwrap();
        let z = arc_membership(&[0.0], &p, ArcMode::M).unwrap();
        assert_eq!(
            z.membership,
            Membership::Major { q: 1, b: vec![0], beta: vec![0.0], gcd: 1 }
        );
        let pt = arc_membership(&[1.0 / 3.0 + 1e-6], &p, ArcMode::N).unwrap();
        match pt.membership {
            Membership::Major { q, ref b, ref beta, .. } => {
                assert_eq!((q, b[0]), (3, 1));
                assert!((beta[0] - 1e-6).abs() < 1e-15);
            }
            Membership::Minor => panic!("expected major"),
        }
        let m = arc_membership(&[2f64.sqrt() - 1.0], &p, ArcMode::M).unwrap();
        assert!(!m.is_major());
        assert!(p.disjoint);
    }

    #[test]
    fn sweep_basics() {
        let n = generate_set(&SetSpec::Naturals, 500).unwrap();
        let phi = PolySystem::monomial(2);
        let r = minor_arc_sup(&n, &phi, 500, 4, &SearchConfig::default()).unwrap();
        assert!(r.sup > 0.0 && r.sup < 500.0 && r.lower_bound);
        assert!(minor_arc_sup(&n, &phi, 10, 10, &SearchConfig::default()).is_err());
    }

    #[test]
    fn rho_fits() {
        let t: Vec<(f64, f64)> = [4.0f64, 8.0, 16.0, 32.0].iter().map(|&q| (q, 1000.0 * q.powf(-0.5))).collect();
        assert!((fit_rho(&t, 1000.0).unwrap().rho - 0.5).abs() < 1e-9);
        let c: Vec<(f64, f64)> = [4.0, 8.0, 16.0].iter().map(|&q| (q, 7.0)).collect();
        assert!(fit_rho(&c, 100.0).unwrap().rho.abs() < 1e-12);
        assert!(fit_rho(&[(4.0, 1.0), (4.0, 2.0), (4.0, 3.0)], 10.0).is_err());
    }

    #[test]
    fn major_arc_naturals_at_zero() {
        let n = generate_set(&SetSpec::Naturals, 100).unwrap();
        let ps = build_psi_star(&n).unwrap();
        let prof = crate::sets::estimate_kappa(&n, 5, &[50, 100]).unwrap();
        let r = major_arc_approx_error(
            &n,
            &prof,
            &ps,
            &PolySystem::monomial(2),
            &[Phase::zero()],
            100,
            5,
            &QuadConfig::default(),
        )
        .unwrap();
        assert!(r.measured < 1e-9);
    }
}
