use num_complex::Complex64;

use super::PolySystem;
use crate::error::{invalid, Result};
use crate::psi::{PsiApprox, SigmaPiece};
use crate::quad::{e, integrate, tree_sum, Quad, QuadConfig};

fn check_gamma(phi: &PolySystem, gamma: &[f64]) -> Result<()> {
    if gamma.len() != phi.r() {
        return Err(invalid("one frequency per polynomial expected"));
    }
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(invalid("frequencies must be finite"));
    }
    Ok(())
}

/// Number of oscillations of `e(gamma . phi(t))` for `t` in `[t0, t1]`.
fn oscillations(phi: &PolySystem, gamma: &[f64], t0: f64, t1: f64) -> f64 {
    phi.terms()
        .iter()
        .zip(gamma)
        .map(|(&(c, k), g)| (g * c as f64).abs() * (t1.powi(k as i32) - t0.powi(k as i32)).abs())
        .sum()
}

fn panels_for(cfg: &QuadConfig, width: f64, total: f64, osc: f64) -> usize {
    let by_width = (cfg.min_panels as f64 * width / total).ceil();
    let by_osc = (cfg.panels_per_oscillation * osc).ceil();
    by_width.max(by_osc).max(1.0) as usize
}

#[inline]
fn phase(phi: &PolySystem, gamma: &[f64], t: f64) -> f64 {
    phi.eval_f64(t).zip(gamma).map(|(p, g)| p * g).sum()
}

/// Evaluates `w_A(gamma)` repeatedly for a fixed approximant, system and scale.
///
/// Uses the measure form `int_0^1 e(gamma . phi(z)) d sigma_A(z)`.
#[derive(Clone, Debug)]
pub struct WEvaluator {
    pieces: Vec<SigmaPiece>,
    phi: PolySystem,
    cfg: QuadConfig,
}

impl WEvaluator {
    pub fn new(approx: &PsiApprox, phi: &PolySystem, x: u64, cfg: QuadConfig) -> Result<Self> {
        if x == 0 {
            return Err(invalid("scale must be positive"));
        }
        Ok(WEvaluator {
            pieces: approx.sigma_pieces(x),
            phi: phi.clone(),
            cfg,
        })
    }

    /// The classical `w(gamma) = int_0^1 e(gamma . phi(z)) dz`.
    pub fn uniform(phi: &PolySystem, cfg: QuadConfig) -> Self {
        WEvaluator {
            pieces: vec![SigmaPiece::Const {
                z0: 0.0,
                z1: 1.0,
                density: 1.0,
            }],
            phi: phi.clone(),
            cfg,
        }
    }

    pub fn pieces(&self) -> &[SigmaPiece] {
        &self.pieces
    }

    pub fn phi(&self) -> &PolySystem {
        &self.phi
    }

    pub fn eval(&self, gamma: &[f64]) -> Result<Complex64> {
        Ok(self.eval_quad(gamma)?.value)
    }

    pub fn eval_quad(&self, gamma: &[f64]) -> Result<Quad<Complex64>> {
        check_gamma(&self.phi, gamma)?;
        if gamma.iter().all(|&g| g == 0.0) {
            return Ok(Quad {
                value: Complex64::new(1.0, 0.0),
                error: 0.0,
                evaluations: 0,
            });
        }
        let mut parts = Vec::with_capacity(self.pieces.len());
        let (mut err, mut evals) = (0.0, 0);
        for piece in &self.pieces {
            let (z0, z1) = piece.bounds();
            if z1 <= z0 {
                continue;
            }
            let n = panels_for(&self.cfg, z1 - z0, 1.0, oscillations(&self.phi, gamma, z0, z1));
            let q = match *piece {
                SigmaPiece::Const { density, .. } => {
                    let r = integrate(&mut |z| e(phase(&self.phi, gamma, z)), z0, z1, n, &self.cfg)?;
                    Quad {
                        value: r.value * density,
                        error: r.error * density,
                        evaluations: r.evaluations,
                    }
                }
                SigmaPiece::InvLog { coef, scale, .. } => integrate(
                    &mut |z| e(phase(&self.phi, gamma, z)) * (coef / (scale * z).ln()),
                    z0,
                    z1,
                    n,
                    &self.cfg,
                )?,
            };
            parts.push(q.value);
            err += q.error;
            evals += q.evaluations;
        }
        Ok(Quad {
            value: tree_sum(&parts),
            error: err,
            evaluations: evals,
        })
    }
}

/// `w_A(gamma)` at scale `x`; `w(0) = 1` exactly.
pub fn w_integral(
    approx: &PsiApprox,
    phi: &PolySystem,
    gamma: &[f64],
    x: u64,
    cfg: &QuadConfig,
) -> Result<Quad<Complex64>> {
    WEvaluator::new(approx, phi, x, *cfg)?.eval_quad(gamma)
}

/// `w_A(gamma)` through `int_0^1 e(gamma . phi(z(xi))) d xi`, inverting `Psi`
/// at every node. Slow; used as a reference.
pub fn w_integral_xi(
    approx: &PsiApprox,
    phi: &PolySystem,
    gamma: &[f64],
    x: u64,
    cfg: &QuadConfig,
) -> Result<Quad<Complex64>> {
    check_gamma(phi, gamma)?;
    if gamma.iter().all(|&g| g == 0.0) {
        return Ok(Quad {
            value: Complex64::new(1.0, 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    let scaled = approx.with_scale(x);
    let total = scaled.total();
    let xf = x as f64;
    let mut breaks = vec![0.0];
    let mut zs = vec![0.0];
    for piece in approx.sigma_pieces(x) {
        let z1 = piece.bounds().1;
        breaks.push((scaled.evaluate(z1 * xf)?.0 / total).min(1.0));
        zs.push(z1);
    }
    let mut parts = Vec::new();
    let (mut err, mut evals) = (0.0, 0);
    for i in 0..breaks.len() - 1 {
        let (a, b) = (breaks[i], breaks[i + 1]);
        if b <= a {
            continue;
        }
        let n = panels_for(cfg, b - a, 1.0, oscillations(phi, gamma, zs[i], zs[i + 1]));
        let mut fail = None;
        let q = integrate(
            &mut |xi| match scaled.inverse((total * xi).min(total)) {
                Ok(v) => e(phase(phi, gamma, v / xf)),
                Err(err) => {
                    fail.get_or_insert(err);
                    Complex64::new(0.0, 0.0)
                }
            },
            a,
            b,
            n,
            cfg,
        )?;
        if let Some(err) = fail {
            return Err(err);
        }
        parts.push(q.value);
        err += q.error;
        evals += q.evaluations;
    }
    Ok(Quad {
        value: tree_sum(&parts),
        error: err,
        evaluations: evals,
    })
}

/// `v_A(beta; X) = int_0^X psi(xi) e(beta . phi(xi)) d xi`.
pub fn v_integral(
    approx: &PsiApprox,
    phi: &PolySystem,
    beta: &[f64],
    x: u64,
    cfg: &QuadConfig,
) -> Result<Quad<Complex64>> {
    check_gamma(phi, beta)?;
    let xf = x as f64;
    let scaled = approx.with_scale(x);
    if beta.iter().all(|&b| b == 0.0) {
        return Ok(Quad {
            value: Complex64::new(scaled.total(), 0.0),
            error: 0.0,
            evaluations: 0,
        });
    }
    // Break points in xi where psi is discontinuous.
    let mut breaks = vec![0.0];
    breaks.extend(approx.sigma_pieces(x).iter().map(|p| p.bounds().1 * xf));
    let mut parts = Vec::new();
    let (mut err, mut evals) = (0.0, 0);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let n = panels_for(cfg, b - a, xf, oscillations(phi, beta, a, b));
        let q = integrate(
            &mut |t| {
                let d = scaled.evaluate(t).map(|v| v.1).unwrap_or(0.0);
                e(phase(phi, beta, t)) * d
            },
            a,
            b,
            n,
            cfg,
        )?;
        parts.push(q.value);
        err += q.error;
        evals += q.evaluations;
    }
    Ok(Quad {
        value: tree_sum(&parts),
        error: err,
        evaluations: evals,
    })
}
