//! Exponential sums and integrals, arc geometry and the Weyl exponent fit.

mod arcs;
mod integrals;

pub use arcs::{
    arc_membership, fit_rho, major_arc_approx_error, minor_arc_sup, minor_arc_sweep, ArcMode,
    ArcParams, ArcPoint, MajorApproxError, Membership, RhoFit, SearchConfig, SupEstimate,
};
pub(crate) use arcs::least_squares;
pub use integrals::{v_integral, w_integral, w_integral_xi, WEvaluator};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith;
use crate::error::{invalid, Error, Result};
use crate::quad::e;
use crate::sets::{DistributionProfile, WeightedSet};

/// A diagonal system `phi_j(x) = c_j x^{k_j}` with increasing degrees.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PolySystem {
    terms: Vec<(i64, u32)>,
}

impl PolySystem {
    pub fn new(terms: Vec<(i64, u32)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("empty polynomial system"));
        }
        for (i, &(c, k)) in terms.iter().enumerate() {
            if c == 0 || k == 0 {
                return Err(invalid("coefficients must be nonzero and degrees positive"));
            }
            if i > 0 && terms[i - 1].1 >= k {
                return Err(invalid("degrees must be strictly increasing"));
            }
        }
        Ok(PolySystem { terms })
    }

    /// The single term `x^k`.
    pub fn monomial(k: u32) -> Self {
        PolySystem { terms: vec![(1, k)] }
    }

    pub fn terms(&self) -> &[(i64, u32)] {
        &self.terms
    }

    pub fn r(&self) -> usize {
        self.terms.len()
    }

    /// `K = sum of the degrees`.
    pub fn big_k(&self) -> u32 {
        self.terms.iter().map(|t| t.1).sum()
    }

    pub fn k_max(&self) -> u32 {
        self.terms.last().unwrap().1
    }

    pub fn k_min(&self) -> u32 {
        self.terms[0].1
    }

    /// `M = max_j sup_{[0,1]} |phi_j|`.
    pub fn sup_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.0.unsigned_abs() as f64)
            .fold(0.0, f64::max)
    }

    /// Exact values `phi_j(x)`, `None` on overflow.
    pub fn eval(&self, x: u64) -> Option<Vec<i128>> {
        self.terms
            .iter()
            .map(|&(c, k)| (x as i128).checked_pow(k).and_then(|v| v.checked_mul(c as i128)))
            .collect()
    }

    pub fn eval_f64(&self, z: f64) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(move |&(c, k)| c as f64 * z.powi(k as i32))
    }

    /// `phi_j(x) mod m`, exactly.
    pub fn eval_mod(&self, j: usize, x: u64, m: u64) -> u64 {
        let (c, k) = self.terms[j];
        let c = c.rem_euclid(m as i64) as u64;
        arith::mulmod(c, arith::powmod(x % m, k as u64, m), m)
    }
}

/// A point of the torus as an exact fraction `num/den` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase {
    num: u64,
    den: u64,
}

impl Phase {
    pub fn new(num: i128, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(invalid("zero denominator"));
        }
        let n = num.rem_euclid(den as i128) as u64;
        let g = arith::gcd(n, den).max(1);
        Ok(Phase {
            num: n / g,
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        Phase { num: 0, den: 1 }
    }

    /// Nearest dyadic fraction with denominator `2^60`.
    pub fn from_f64(x: f64) -> Self {
        let t = x - x.floor();
        let den = 1u64 << 60;
        let num = ((t * den as f64).round() as u64) % den;
        Phase::new(num as i128, den).unwrap()
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn neg(&self) -> Self {
        Phase::new(-(self.num as i128), self.den).unwrap()
    }

    /// Fractional part of `self * v` for an integer `v` reduced mod `den`.
    fn times(&self, v_mod_den: u64) -> f64 {
        arith::mulmod(self.num, v_mod_den, self.den) as f64 / self.den as f64
    }
}

/// Phase of `alpha . phi(x)` reduced mod 1 exactly, then as a float in `[0, 1)`.
pub(crate) fn phase_of(alpha: &[Phase], phi: &PolySystem, x: u64) -> f64 {
    let mut t = 0.0;
    for (j, a) in alpha.iter().enumerate() {
        if a.num == 0 {
            continue;
        }
        t += a.times(phi.eval_mod(j, x, a.den));
    }
    t - t.floor()
}

/// `f(alpha; X) = sum_{x <= X} a_x e(alpha . phi(x))` by direct summation.
pub fn weyl_sum(a: &WeightedSet, phi: &PolySystem, alpha: &[Phase], x: u64) -> Result<Complex64> {
    if alpha.len() != phi.r() {
        return Err(invalid("alpha must have one entry per polynomial"));
    }
    if x > a.bound() {
        return Err(Error::BoundExceeded { x, bound: a.bound() });
    }
    let w = a.weights_f64();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &n) in a.support().iter().enumerate() {
        if n > x {
            break;
        }
        acc += e(phase_of(alpha, phi, n)) * w[i];
    }
    Ok(acc)
}

/// `S_A(q, b) = sum_{l mod q} kappa(q, l) e(b . phi(l) / q)`.
pub fn complete_sum(
    profile: &DistributionProfile,
    phi: &PolySystem,
    q: u64,
    b: &[u64],
) -> Result<Complex64> {
    let kappa = profile.kappa_f64_row(q)?;
    complete_sum_with(&kappa, phi, q, b)
}

/// The classical sum with `kappa = 1/q`.
pub fn classical_sum(phi: &PolySystem, q: u64, b: &[u64]) -> Result<Complex64> {
    let kappa = vec![1.0 / q as f64; q as usize];
    complete_sum_with(&kappa, phi, q, b)
}

pub(crate) fn complete_sum_with(kappa: &[f64], phi: &PolySystem, q: u64, b: &[u64]) -> Result<Complex64> {
    if b.len() != phi.r() {
        return Err(invalid("b must have one entry per polynomial"));
    }
    if let Some(&bj) = b.iter().find(|&&bj| bj >= q) {
        return Err(Error::ResidueOutOfRange { b: bj, q });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, &k) in kappa.iter().enumerate() {
        if k == 0.0 {
            continue;
        }
        let mut m = 0u64;
        for (j, &bj) in b.iter().enumerate() {
            m = (m + arith::mulmod(bj, phi.eval_mod(j, l as u64, q), q)) % q;
        }
        acc += e(m as f64 / q as f64) * k;
    }
    Ok(acc)
}

/// Push-forward of `kappa(q, .)` under `x -> phi(x) mod q` for a single polynomial.
pub(crate) fn residue_distribution_f64(kappa: &[f64], phi: &PolySystem, q: u64) -> Vec<f64> {
    let mut d = vec![0.0; q as usize];
    for (l, &k) in kappa.iter().enumerate() {
        if k != 0.0 {
            d[phi.eval_mod(0, l as u64, q) as usize] += k;
        }
    }
    d
}

/// `S(q, b)` for every `b mod q` at once, for a single polynomial.
pub fn complete_sums_row(kappa: &[f64], phi: &PolySystem, q: u64) -> Result<Vec<Complex64>> {
    if phi.r() != 1 {
        return Err(invalid("row evaluation needs a single polynomial"));
    }
    let d = residue_distribution_f64(kappa, phi, q);
    let qs = q as usize;
    if qs <= 512 {
        let table: Vec<Complex64> = (0..qs).map(|t| e(t as f64 / q as f64)).collect();
        let support: Vec<(usize, f64)> = d
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(m, &v)| (m, v))
            .collect();
        return Ok((0..qs)
            .map(|b| {
                support
                    .iter()
                    .map(|&(m, v)| table[(b * m) % qs] * v)
                    .sum()
            })
            .collect());
    }
    let mut buf: Vec<Complex64> = d.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(qs).process(&mut buf);
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{generate_set, SetSpec};

    #[test]
    fn poly_system_validation() {
        assert!(PolySystem::new(vec![(1, 2), (1, 1)]).is_err());
        assert!(PolySystem::new(vec![(0, 2)]).is_err());
        let p = PolySystem::new(vec![(2, 1), (-3, 2)]).unwrap();
        assert_eq!(p.big_k(), 3);
        assert_eq!(p.eval(5), Some(vec![10, -75]));
        assert_eq!(p.eval_mod(1, 5, 7), (-75i64).rem_euclid(7) as u64);
    }

    #[test]
    fn weyl_examples() {
        let n = generate_set(&SetSpec::Naturals, 100).unwrap();
        let sq = PolySystem::monomial(2);
        let f = weyl_sum(&n, &sq, &[Phase::zero()], 100).unwrap();
        assert_eq!(f, Complex64::new(100.0, 0.0));
        let half = Phase::new(1, 2).unwrap();
        assert!(weyl_sum(&n, &sq, &[half], 10).unwrap().norm() < 1e-12);
        let p = generate_set(&SetSpec::Primes, 10).unwrap();
        let f = weyl_sum(&p, &sq, &[Phase::new(1, 4).unwrap()], 10).unwrap();
        assert!((f - Complex64::new(1.0, 3.0)).norm() < 1e-12);
    }

    #[test]
    fn large_arguments_keep_precision() {
        // alpha = 1/7 and x = 10^6: phase of x^2/7 computed exactly.
        let a = WeightedSet::unit(1_000_000, vec![1_000_000], "one").unwrap();
        let f = weyl_sum(&a, &PolySystem::monomial(2), &[Phase::new(1, 7).unwrap()], 1_000_000)
            .unwrap();
        let r = (1_000_000u128 * 1_000_000 % 7) as f64 / 7.0;
        assert!((f - e(r)).norm() < 1e-15);
    }

    #[test]
    fn complete_sum_examples() {
        let prof = DistributionProfile::classical(10);
        let sq = PolySystem::monomial(2);
        assert_eq!(complete_sum(&prof, &sq, 1, &[0]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(complete_sum(&prof, &sq, 2, &[1]).unwrap().norm() < 1e-15);
        let ell = DistributionProfile::ellipsephic(3, &[0, 1], 10).unwrap();
        let s = complete_sum(&ell, &sq, 3, &[1]).unwrap();
        assert!((s - Complex64::new(0.25, 3f64.sqrt() / 4.0)).norm() < 1e-15);
        assert!(matches!(
            complete_sum(&prof, &sq, 3, &[3]),
            Err(Error::ResidueOutOfRange { .. })
        ));
        assert!(matches!(
            complete_sum(&prof, &sq, 11, &[1]),
            Err(Error::UnprofiledModulus(11))
        ));
    }

    #[test]
    fn rows_match_single_sums() {
        let sq = PolySystem::monomial(3);
        for q in [7u64, 40, 600, 729] {
            let kappa = vec![1.0 / q as f64; q as usize];
            let row = complete_sums_row(&kappa, &sq, q).unwrap();
            for b in [0, 1, 5, q - 1] {
                let s = classical_sum(&sq, q, &[b]).unwrap();
                assert!((row[b as usize] - s).norm() < 1e-12, "q={q} b={b}");
            }
        }
    }
}
