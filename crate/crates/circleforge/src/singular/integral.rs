//! Truncated singular integrals and the smoothed integrals `W_T`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tail_fit, SeriesMode, TailFit};
use crate::error::{invalid, Error, Result};
use crate::expsum::{PolySystem, WEvaluator};
use crate::psi::{PsiApprox, SigmaPiece};
use crate::quad::{integrate_breaks, integrate_parts, tree_sum, Quad, QuadConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegralConfig {
    /// Inner quadrature for `w`, also used for the outer panels.
    pub quad: QuadConfig,
    /// Outer panels per unit of `gamma`, multiplied by `max(1, M)`.
    pub panels_per_unit: f64,
    /// Samples for the Monte Carlo path (`r > 2`).
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        IntegralConfig {
            quad: QuadConfig::default(),
            panels_per_unit: 8.0,
            mc_samples: 100_000,
            seed: 0x5eed_0001,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralReport {
    pub mode: SeriesMode,
    pub q_max: f64,
    pub value: f64,
    pub error_estimate: f64,
    /// Present for the Monte Carlo path.
    pub std_error: Option<f64>,
    pub method: &'static str,
    pub w_evaluations: usize,
    /// `(Q', J(Q'))` at the dyadic points and at `q_max`, ascending.
    pub partials: Vec<(f64, f64)>,
    /// `(Q', |J(2Q') - J(Q')|)`, ascending.
    pub dyadic: Vec<(f64, f64)>,
    pub tail: Option<TailFit>,
    pub tail_note: Option<String>,
    /// `(4 M pi r)^{-r} 2^{-2s}` in mean-value mode.
    pub lower_bound: Option<f64>,
    pub lower_bound_holds: Option<bool>,
    pub schmidt: Vec<SchmidtEstimate>,
}

impl IntegralReport {
    /// `J(Q')` for a recorded `Q'`.
    pub fn partial(&self, q: f64) -> Option<f64> {
        self.partials.iter().find(|p| p.0 == q).map(|p| p.1)
    }

    pub fn dyadic_csv(&self) -> String {
        let mut out = String::from("Q,diff\n");
        for (q, d) in &self.dyadic {
            let _ = writeln!(out, "{q},{d:e}");
        }
        out
    }
}

fn dyadic_points(q: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut h = q / 2.0;
    while h >= 1.0 {
        v.push(h);
        h /= 2.0;
    }
    v.reverse();
    v
}

/// `w_A` and the classical `w` with memoized values, shared across modes.
pub struct IntegralEngine {
    phi: PolySystem,
    wa: WEvaluator,
    wc: WEvaluator,
    cache_a: HashMap<Vec<u64>, Complex64>,
    cache_c: HashMap<Vec<u64>, Complex64>,
    cfg: IntegralConfig,
}

impl IntegralEngine {
    pub fn new(approx: &PsiApprox, phi: &PolySystem, x: u64, cfg: IntegralConfig) -> Result<Self> {
        if !(cfg.panels_per_unit > 0.0) {
            return Err(invalid("panels_per_unit must be positive"));
        }
        Ok(IntegralEngine {
            phi: phi.clone(),
            wa: WEvaluator::new(approx, phi, x, cfg.quad)?,
            wc: WEvaluator::uniform(phi, cfg.quad),
            cache_a: HashMap::new(),
            cache_c: HashMap::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &IntegralConfig {
        &self.cfg
    }

    pub fn phi(&self) -> &PolySystem {
        &self.phi
    }

    fn key(g: &[f64]) -> Vec<u64> {
        // -0.0 and 0.0 share a slot
        g.iter().map(|v| (v + 0.0).to_bits()).collect()
    }

    pub fn w(&mut self, g: &[f64]) -> Result<Complex64> {
        let k = Self::key(g);
        if let Some(v) = self.cache_a.get(&k) {
            return Ok(*v);
        }
        let v = self.wa.eval(g)?;
        self.cache_a.insert(k, v);
        Ok(v)
    }

    pub fn w_classical(&mut self, g: &[f64]) -> Result<Complex64> {
        let k = Self::key(g);
        if let Some(v) = self.cache_c.get(&k) {
            return Ok(*v);
        }
        let v = self.wc.eval(g)?;
        self.cache_c.insert(k, v);
        Ok(v)
    }

    fn check(&self, mode: &SeriesMode) -> Result<()> {
        if mode.s() == 0 {
            return Err(invalid("s must be at least 1"));
        }
        if !matches!(mode, SeriesMode::MeanValue { .. }) && self.phi.r() != 1 {
            return Err(Error::ModeMismatch(
                "Waring and mixed integrals take a single polynomial".into(),
            ));
        }
        Ok(())
    }

    /// The real integrand at `gamma`; the imaginary part cancels against `-gamma`.
    pub fn integrand(&mut self, mode: &SeriesMode, g: &[f64]) -> Result<f64> {
        Ok(match *mode {
            SeriesMode::MeanValue { s } => self.w(g)?.norm_sqr().powi(s as i32),
            SeriesMode::Waring { s, .. } => (self.w(g)?.powu(s) * crate::quad::e(-g[0])).re,
            SeriesMode::Mixed { s, u, .. } => {
                (self.w(g)?.powu(s) * self.w_classical(g)?.powu(u) * crate::quad::e(-g[0])).re
            }
        })
    }

    fn step(&self) -> f64 {
        1.0 / (self.cfg.panels_per_unit * self.phi.sup_norm().max(1.0))
    }

    /// Uniform breaks on `[lo, hi]` merged with `extra`.
    fn breaks(&self, lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
        let h = self.step();
        let n = ((hi - lo) / h).ceil() as usize;
        let mut b: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
        b.push(hi);
        b.extend(extra.iter().copied().filter(|&x| x > lo && x < hi));
        b.sort_by(|a, c| a.total_cmp(c));
        b.dedup();
        b
    }

    fn line<F>(&mut self, breaks: &[f64], mut f: F) -> Result<Vec<Quad<f64>>>
    where
        F: FnMut(&mut Self, f64) -> Result<f64>,
    {
        let mut fail = None;
        let quad = self.cfg.quad;
        let parts = integrate_parts(
            &mut |g| match f(self, g) {
                Ok(v) => v,
                Err(err) => {
                    fail.get_or_insert(err);
                    0.0
                }
            },
            breaks,
            &quad,
        )?;
        match fail {
            Some(err) => Err(err),
            None => Ok(parts),
        }
    }

    /// `J(Q)` with its dyadic trace.
    pub fn truncated(&mut self, mode: &SeriesMode, q: f64) -> Result<IntegralReport> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(invalid("Q must be positive and finite"));
        }
        self.check(mode)?;
        let dy = dyadic_points(q);
        let r = self.phi.r();
        let (mut partials, value, error, std_error, method) = match r {
            1 => {
                let breaks = self.breaks(0.0, q, &dy);
                let m = *mode;
                let parts = self.line(&breaks, |eng, g| eng.integrand(&m, &[g]))?;
                let vals: Vec<f64> = parts.iter().map(|p| 2.0 * p.value).collect();
                let mut partials = Vec::new();
                let mut acc = 0.0;
                let mut next = dy.iter().peekable();
                for (i, v) in vals.iter().enumerate() {
                    acc += v;
                    if next.peek().is_some_and(|&&d| d == breaks[i + 1]) {
                        partials.push((*next.next().unwrap(), acc));
                    }
                }
                let value = tree_sum(&vals);
                partials.push((q, value));
                let err = parts.iter().map(|p| 2.0 * p.error).sum();
                (partials, value, err, None, "quadrature")
            }
            2 => {
                let mut partials = Vec::new();
                let mut err = 0.0;
                for &b in dy.iter().chain(std::iter::once(&q)) {
                    let v = self.tensor(mode, b)?;
                    err = v.error;
                    partials.push((b, v.value));
                }
                let value = partials.last().unwrap().1;
                (partials, value, err, None, "tensor")
            }
            _ => {
                let (partials, se) = self.monte_carlo(mode, q, &dy)?;
                let value = partials.last().unwrap().1;
                (partials, value, 0.0, Some(se), "monte_carlo")
            }
        };
        let dyadic: Vec<(f64, f64)> = dy
            .iter()
            .enumerate()
            .map(|(i, &d)| (d, (partials[i + 1].1 - partials[i].1).abs()))
            .collect();
        let (tail, tail_note) = match tail_fit(&dyadic) {
            Ok(t) => (Some(t), None),
            Err(err) => (None, Some(err.to_string())),
        };
        let (lower_bound, lower_bound_holds) = match *mode {
            SeriesMode::MeanValue { s } => {
                let rf = r as f64;
                let lb = (4.0 * self.phi.sup_norm() * PI * rf).powf(-rf) * 2f64.powi(-2 * s as i32);
                (Some(lb), Some(value >= lb))
            }
            _ => (None, None),
        };
        partials.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(IntegralReport {
            mode: *mode,
            q_max: q,
            value,
            error_estimate: error,
            std_error,
            method,
            w_evaluations: self.cache_a.len() + self.cache_c.len(),
            partials,
            dyadic,
            tail,
            tail_note,
            lower_bound,
            lower_bound_holds,
            schmidt: Vec::new(),
        })
    }

    /// `int_{|gamma|_inf <= b} |w|^{2s}` for `r = 2` by a tensor rule.
    fn tensor(&mut self, mode: &SeriesMode, b: f64) -> Result<Quad<f64>> {
        let outer = self.breaks(0.0, b, &[]);
        let inner = self.breaks(-b, b, &[0.0]);
        let m = *mode;
        let mut err = 0.0;
        let parts = self.line(&outer, |eng, g1| {
            let row = eng.line(&inner, |e2, g2| e2.integrand(&m, &[g1, g2]))?;
            err += row.iter().map(|p| p.error).sum::<f64>();
            Ok(tree_sum(&row.iter().map(|p| p.value).collect::<Vec<_>>()))
        })?;
        let vals: Vec<f64> = parts.iter().map(|p| 2.0 * p.value).collect();
        Ok(Quad {
            value: tree_sum(&vals),
            error: 2.0 * (err + parts.iter().map(|p| p.error).sum::<f64>()),
            evaluations: 0,
        })
    }

    /// Uniform sampling of the box; sub-box estimates reuse the same draws.
    fn monte_carlo(&mut self, mode: &SeriesMode, q: f64, dy: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
        let r = self.phi.r();
        let n = self.cfg.mc_samples.max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let boxes: Vec<f64> = dy.iter().copied().chain(std::iter::once(q)).collect();
        let mut sums = vec![0.0; boxes.len()];
        let mut sq = 0.0;
        let mut g = vec![0.0; r];
        for _ in 0..n {
            for x in g.iter_mut() {
                *x = rng.gen_range(-q..q);
            }
            let v = self.integrand(mode, &g)?;
            let size = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (i, &b) in boxes.iter().enumerate() {
                if size <= b {
                    sums[i] += v;
                }
            }
            sq += v * v;
        }
        let vol = (2.0 * q).powi(r as i32);
        let nf = n as f64;
        let mean = sums[boxes.len() - 1] / nf;
        let se = vol * ((sq / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt();
        Ok((boxes.iter().zip(&sums).map(|(&b, &s)| (b, vol * s / nf)).collect(), se))
    }

    /// `W_T = int |w|^{2s} K_T` over the real line, for `r = 1`.
    pub fn schmidt_gamma(&mut self, s: u32, t: f64, g_max: f64) -> Result<f64> {
        if self.phi.r() != 1 {
            return Err(invalid("the frequency-side W_T needs a single polynomial"));
        }
        if !(t >= 1.0) {
            return Err(invalid("T must be at least 1"));
        }
        let dy = dyadic_points(g_max);
        let breaks = self.breaks(0.0, g_max, &dy);
        let mode = SeriesMode::MeanValue { s };
        let parts = self.line(&breaks, |eng, g| Ok(eng.integrand(&mode, &[g])? * fejer(g, t)))?;
        Ok(2.0 * tree_sum(&parts.iter().map(|p| p.value).collect::<Vec<_>>()))
    }
}

/// `K_T(gamma) = (sin(pi gamma / T) / (pi gamma / T))^2`.
fn fejer(g: f64, t: f64) -> f64 {
    let x = PI * g / t;
    if x.abs() < 1e-8 {
        1.0
    } else {
        (x.sin() / x).powi(2)
    }
}

/// `J(Q)` for one mode; see [`IntegralEngine`] to share `w` values across calls.
pub fn truncated_integral(
    approx: &PsiApprox,
    phi: &PolySystem,
    x: u64,
    mode: &SeriesMode,
    q: f64,
    cfg: &IntegralConfig,
) -> Result<IntegralReport> {
    IntegralEngine::new(approx, phi, x, *cfg)?.truncated(mode, q)
}

/// `W_T` through the frequency side, for `r = 1`.
pub fn schmidt_wt_gamma(engine: &mut IntegralEngine, s: u32, t: f64, g_max: f64) -> Result<f64> {
    engine.schmidt_gamma(s, t, g_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    /// `z = Psi^{-1}(Psi(X) xi) / X` with `xi` uniform.
    ZMap,
    /// Every variable sits at `z`.
    PointMass { z: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchmidtConfig {
    pub samples: u64,
    pub batches: u32,
    pub seed: u64,
    /// Largest acceptable standard error.
    pub se_cap: f64,
    pub sampler: Sampler,
    /// Integrate the first variable exactly when the system is a single monomial.
    pub conditional: bool,
}

impl Default for SchmidtConfig {
    fn default() -> Self {
        SchmidtConfig {
            samples: 1 << 18,
            batches: 32,
            seed: 0x5eed_0002,
            se_cap: 0.05,
            sampler: Sampler::ZMap,
            conditional: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchmidtEstimate {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub batches: u32,
    pub seed: u64,
    pub conditional: bool,
}

/// `h_T(y) = T (1 - T|y|)` on `|y| <= 1/T`.
fn tent(y: f64, t: f64) -> f64 {
    let v = 1.0 - t * y.abs();
    if v > 0.0 {
        t * v
    } else {
        0.0
    }
}

/// `int_0^1 h_T(a z^k + c) d sigma(z)` for `a > 0`.
fn conditional_tent(pieces: &[SigmaPiece], a: f64, k: u32, c: f64, t: f64, quad: &QuadConfig) -> Result<f64> {
    let root = |u: f64| (u / a).max(0.0).powf(1.0 / k as f64).min(1.0);
    let (ulo, uhi) = (-c - 1.0 / t, -c + 1.0 / t);
    if uhi <= 0.0 {
        return Ok(0.0);
    }
    let (zlo, zhi) = (root(ulo), root(uhi));
    if zlo >= 1.0 || zhi <= zlo {
        return Ok(0.0);
    }
    let mut breaks = vec![zlo, root(-c), zhi];
    for p in pieces {
        let (z0, z1) = p.bounds();
        breaks.extend([z0, z1]);
    }
    breaks.retain(|&z| z >= zlo && z <= zhi);
    breaks.sort_by(|x, y| x.total_cmp(y));
    breaks.dedup();
    let density = |z: f64| {
        let i = pieces.partition_point(|p| p.bounds().1 < z);
        pieces.get(i).filter(|p| p.bounds().0 <= z).map_or(0.0, |p| p.density(z))
    };
    Ok(integrate_breaks(&mut |z| tent(a * z.powi(k as i32) + c, t) * density(z), &breaks, quad)?.value)
}

/// Smoothed integral `W_T` by Monte Carlo over the `2s` variables.
pub fn schmidt_wt(
    approx: &PsiApprox,
    phi: &PolySystem,
    s: u32,
    x: u64,
    t: f64,
    cfg: &SchmidtConfig,
) -> Result<SchmidtEstimate> {
    if !(t >= 1.0) {
        return Err(invalid("T must be at least 1"));
    }
    if s == 0 || x == 0 {
        return Err(invalid("s and X must be positive"));
    }
    if cfg.batches < 2 || cfg.samples < 2 * cfg.batches as u64 {
        return Err(invalid("need at least two batches of two samples"));
    }
    if let Sampler::PointMass { z } = cfg.sampler {
        if !(0.0..=1.0).contains(&z) {
            return Err(invalid("point mass must lie in [0, 1]"));
        }
    }
    let r = phi.r();
    let nvar = 2 * s as usize;
    let scaled = approx.with_scale(x);
    let total = scaled.total();
    let xf = x as f64;
    let pieces = approx.sigma_pieces(x);
    let mono = match phi.terms() {
        [(a, k)] if r == 1 && *a != 0 => Some((*a as f64, *k)),
        _ => None,
    };
    let conditional = cfg.conditional && matches!(cfg.sampler, Sampler::ZMap) && mono.is_some();
    let strat = usize::from(conditional);
    let per = cfg.samples / cfg.batches as u64;
    let draw = |xi: f64| -> Result<f64> {
        match cfg.sampler {
            Sampler::ZMap => Ok((scaled.inverse(total * xi)? / xf).clamp(0.0, 1.0)),
            Sampler::PointMass { z } => Ok(z),
        }
    };
    let means: Vec<f64> = (0..cfg.batches)
        .into_par_iter()
        .map(|batch| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(batch as u64));
            let mut zs = vec![0.0; nvar];
            let mut phis = vec![0.0; r];
            let mut acc = Vec::with_capacity(per as usize);
            for i in 0..per {
                for (v, z) in zs.iter_mut().enumerate() {
                    let u: f64 = rng.gen();
                    let xi = if v == strat { (i as f64 + u) / per as f64 } else { u };
                    *z = draw(xi)?;
                }
                phis.iter_mut().for_each(|p| *p = 0.0);
                for (v, &z) in zs.iter().enumerate().skip(strat) {
                    let sign = if v < s as usize { 1.0 } else { -1.0 };
                    for (p, val) in phis.iter_mut().zip(phi.eval_f64(z)) {
                        *p += sign * val;
                    }
                }
                let value = match (conditional, mono) {
                    (true, Some((a, k))) => {
                        let c = phis[0] * a.signum();
                        conditional_tent(&pieces, a.abs(), k, c, t, &QuadConfig::default())?
                    }
                    _ => phis.iter().map(|&p| tent(p, t)).product(),
                };
                acc.push(value);
            }
            Ok(acc.iter().sum::<f64>() / per as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let b = means.len() as f64;
    let value = means.iter().sum::<f64>() / b;
    let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>() / (b - 1.0);
    let std_error = (var / b).sqrt();
    if std_error > cfg.se_cap {
        return Err(Error::NonConvergence(format!(
            "W_T standard error {std_error:e} above cap {:e}",
            cfg.se_cap
        )));
    }
    Ok(SchmidtEstimate {
        t,
        value,
        std_error,
        samples: per * cfg.batches as u64,
        batches: cfg.batches,
        seed: cfg.seed,
        conditional,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::build_psi_star;
    use crate::sets::{generate_set, SetSpec};

    fn naturals(x: u64) -> PsiApprox {
        build_psi_star(&generate_set(&SetSpec::Naturals, x).unwrap()).unwrap()
    }

    fn gamma_fn(x: f64) -> f64 {
        libm::tgamma(x)
    }

    #[test]
    fn waring_integral_matches_gamma_formula() {
        let ps = naturals(100);
        let phi = PolySystem::monomial(2);
        let mut eng = IntegralEngine::new(&ps, &phi, 100, IntegralConfig::default()).unwrap();
        let rep = eng.truncated(&SeriesMode::Waring { s: 4, n: 1 }, 40.0).unwrap();
        let want = gamma_fn(1.5).powi(4) / gamma_fn(2.0);
        assert!((rep.value - want).abs() < 0.01 * want, "{} vs {want}", rep.value);
        assert_eq!(eng.integrand(&SeriesMode::MeanValue { s: 3 }, &[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn linear_slice_volume() {
        let ps = naturals(100);
        let phi = PolySystem::monomial(1);
        let rep = truncated_integral(&ps, &phi, 100, &SeriesMode::Waring { s: 2, n: 1 }, 64.0, &IntegralConfig::default())
            .unwrap();
        assert!((rep.value - 1.0).abs() < 2e-3, "{}", rep.value);
    }

    #[test]
    fn mean_value_lower_bound_and_trace() {
        let ps = naturals(100);
        let phi = PolySystem::monomial(2);
        let rep = truncated_integral(&ps, &phi, 100, &SeriesMode::MeanValue { s: 3 }, 16.0, &IntegralConfig::default())
            .unwrap();
        assert_eq!(rep.lower_bound_holds, Some(true));
        assert_eq!(rep.dyadic.len(), 4);
        assert!(rep.tail.as_ref().unwrap().delta.unwrap() > 0.5);
        assert_eq!(rep.partial(16.0), Some(rep.value));
    }

    #[test]
    fn tensor_and_monte_carlo_paths_run() {
        let ps = naturals(30);
        let sys = PolySystem::new(vec![(1, 1), (1, 2)]).unwrap();
        let cfg = IntegralConfig {
            panels_per_unit: 2.0,
            quad: QuadConfig {
                tol: 1e-7,
                ..QuadConfig::default()
            },
            ..IntegralConfig::default()
        };
        let rep = truncated_integral(&ps, &sys, 30, &SeriesMode::MeanValue { s: 2 }, 2.0, &cfg).unwrap();
        assert_eq!(rep.method, "tensor");
        assert!(rep.value > rep.lower_bound.unwrap());
        let sys3 = PolySystem::new(vec![(1, 1), (1, 2), (1, 3)]).unwrap();
        let cfg = IntegralConfig {
            mc_samples: 2000,
            ..IntegralConfig::default()
        };
        let rep = truncated_integral(&ps, &sys3, 30, &SeriesMode::MeanValue { s: 2 }, 1.0, &cfg).unwrap();
        assert_eq!(rep.method, "monte_carlo");
        assert!(rep.std_error.unwrap() > 0.0);
        assert!(matches!(
            truncated_integral(&ps, &sys, 30, &SeriesMode::Waring { s: 2, n: 1 }, 2.0, &cfg),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn schmidt_closed_forms() {
        let ps = naturals(100);
        let lin = PolySystem::monomial(1);
        for conditional in [true, false] {
            let cfg = SchmidtConfig {
                samples: 1 << 16,
                conditional,
                ..SchmidtConfig::default()
            };
            let est = schmidt_wt(&ps, &lin, 1, 100, 10.0, &cfg).unwrap();
            let want = 1.0 - 1.0 / 30.0;
            assert!((est.value - want).abs() <= 3.0 * est.std_error.max(1e-12), "{est:?}");
        }
        let cfg = SchmidtConfig {
            samples: 64,
            batches: 4,
            sampler: Sampler::PointMass { z: 0.3 },
            ..SchmidtConfig::default()
        };
        let est = schmidt_wt(&ps, &PolySystem::monomial(2), 2, 100, 8.0, &cfg).unwrap();
        assert_eq!(est.value, 8.0);
        assert_eq!(est.std_error, 0.0);
        // gamma side of the k = 1, s = 1 case
        let mut eng = IntegralEngine::new(&ps, &lin, 100, IntegralConfig::default()).unwrap();
        let g = eng.schmidt_gamma(1, 10.0, 60.0).unwrap();
        assert!((g - (1.0 - 1.0 / 30.0)).abs() < 5e-3, "{g}");
    }

    #[test]
    fn schmidt_is_deterministic() {
        let ps = naturals(50);
        let cfg = SchmidtConfig {
            samples: 4096,
            ..SchmidtConfig::default()
        };
        let a = schmidt_wt(&ps, &PolySystem::monomial(2), 2, 50, 4.0, &cfg).unwrap();
        let b = schmidt_wt(&ps, &PolySystem::monomial(2), 2, 50, 4.0, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
