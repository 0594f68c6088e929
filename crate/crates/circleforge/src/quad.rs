//! Panel quadrature with an embedded Gauss-Kronrod (7, 15) error check.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values the integrator can accumulate.
pub trait QuadValue: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Settings shared by every oscillatory integral.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Absolute tolerance per unit length for the embedded error check.
    pub tol: f64,
    pub min_panels: usize,
    pub panels_per_oscillation: f64,
    /// Maximum bisection depth for a failing panel.
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            tol: 1e-10,
            min_panels: 64,
            panels_per_oscillation: 8.0,
            max_depth: 24,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Kronrod panel: returns the 15-point value and `|K15 - G7|`.
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    (k * h, (k - g).magnitude() * h.abs())
}

fn adaptive<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<(T, f64)> {
    let (v, e) = gk15(f, a, b);
    *evals += 15;
    if e <= tol {
        return Ok((v, e));
    }
    if depth == 0 {
        return Err(Error::NonConvergence(format!(
            "panel [{a:.6e}, {b:.6e}] error {e:.3e} above {tol:.3e} at bisection cap"
        )));
    }
    let m = 0.5 * (a + b);
    let (l, el) = adaptive(f, a, m, 0.5 * tol, depth - 1, evals)?;
    let (r, er) = adaptive(f, m, b, 0.5 * tol, depth - 1, evals)?;
    Ok((l + r, el + er))
}

/// Integrates over `[a, b]` split into `panels` equal panels, bisecting any
/// panel that fails the embedded check.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    a: f64,
    b: f64,
    panels: usize,
    cfg: &QuadConfig,
) -> Result<Quad<T>> {
    let breaks: Vec<f64> = (0..=panels.max(1))
        .map(|i| a + (b - a) * i as f64 / panels.max(1) as f64)
        .collect();
    integrate_breaks(f, &breaks, cfg)
}

/// Integrates over consecutive intervals `[breaks[i], breaks[i+1]]`.
pub fn integrate_breaks<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<Quad<T>> {
    let parts = integrate_parts(f, breaks, cfg)?;
    let values: Vec<T> = parts.iter().map(|p| p.value).collect();
    Ok(Quad {
        value: tree_sum(&values),
        error: parts.iter().map(|p| p.error).sum(),
        evaluations: parts.iter().map(|p| p.evaluations).sum(),
    })
}

/// Per-interval results for consecutive break points.
pub fn integrate_parts<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<Vec<Quad<T>>> {
    let mut out = Vec::with_capacity(breaks.len().saturating_sub(1));
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            out.push(Quad::default());
            continue;
        }
        let tol = cfg.tol * (b - a).max(1e-3);
        let mut evals = 0;
        let (v, e) = adaptive(f, a, b, tol, cfg.max_depth, &mut evals)?;
        out.push(Quad {
            value: v,
            error: e,
            evaluations: evals,
        });
    }
    Ok(out)
}

/// Pairwise summation in a fixed order.
pub fn tree_sum<T: QuadValue>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::default(),
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            tree_sum(l) + tree_sum(r)
        }
    }
}

/// `e(x) = exp(2 pi i x)` with the argument reduced mod 1 first.
pub fn e(x: f64) -> Complex64 {
    let t = x - x.floor();
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}
