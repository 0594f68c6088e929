//! Exact convolution of nonnegative integer sequences.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::arith::{mulmod, powmod};
use crate::error::{Error, Result};

/// Convolution algorithm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Schoolbook for small tables, Kronecker substitution above.
    #[default]
    Auto,
    Schoolbook,
    /// Pack into one big integer and multiply (Karatsuba / Toom inside).
    Kronecker,
    /// Number-theoretic transform modulo a 62-bit prime. Fast, unverified.
    Ntt,
}

/// Product `nnz(a) * nnz(b)` above which `Auto` leaves the schoolbook.
pub const SCHOOLBOOK_WORK: u128 = 1 << 28;

/// NTT modulus `4194240 * 2^40 + 1`.
pub const NTT_PRIME: u64 = 4_611_615_649_683_210_241;
const NTT_ROOT: u64 = 11;
const NTT_TWO_ADICITY: u32 = 46;

struct Stats {
    max: BigUint,
    sum: BigUint,
    nnz: usize,
    small: bool,
}

fn stats(a: &[BigUint]) -> Stats {
    let mut s = Stats {
        max: BigUint::zero(),
        sum: BigUint::zero(),
        nnz: 0,
        small: true,
    };
    for v in a {
        if v.is_zero() {
            continue;
        }
        s.nnz += 1;
        s.sum += v;
        if *v > s.max {
            s.max = v.clone();
        }
    }
    s.small = s.max.bits() <= 64;
    s
}

/// Upper bound for any coefficient of `a * b`.
pub fn coefficient_bound(a: &[BigUint], b: &[BigUint]) -> BigUint {
    let (sa, sb) = (stats(a), stats(b));
    (&sa.max * &sb.sum).min(&sa.sum * &sb.max)
}

/// Linear convolution truncated to indices `<= n_max`.
pub fn convolve(a: &[BigUint], b: &[BigUint], n_max: usize, kernel: Kernel) -> Result<Vec<BigUint>> {
    let a = &a[..a.len().min(n_max + 1)];
    let b = &b[..b.len().min(n_max + 1)];
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let out_len = (a.len() + b.len() - 1).min(n_max + 1);
    let (sa, sb) = (stats(a), stats(b));
    if sa.nnz == 0 || sb.nnz == 0 {
        return Ok(vec![BigUint::zero(); out_len]);
    }
    let bound = (&sa.max * &sb.sum).min(&sa.sum * &sb.max);
    let kernel = match kernel {
        Kernel::Auto if (sa.nnz as u128) * (sb.nnz as u128) <= SCHOOLBOOK_WORK => Kernel::Schoolbook,
        Kernel::Auto => Kernel::Kronecker,
        k => k,
    };
    let mut out = match kernel {
        Kernel::Schoolbook => {
            if sa.small && sb.small && bound.bits() <= 127 {
                schoolbook_u128(a, b, out_len)
            } else {
                schoolbook_big(a, b, out_len)
            }
        }
        Kernel::Kronecker => kronecker(a, b, bound.bits() as usize),
        Kernel::Ntt => {
            if bound >= BigUint::from(NTT_PRIME) {
                return Err(Error::InvalidInput(format!(
                    "fast mode refused: coefficient bound {bound} reaches the NTT modulus"
                )));
            }
            ntt_convolve(a, b)?
        }
        Kernel::Auto => unreachable!(),
    };
    out.truncate(out_len);
    out.resize(out_len, BigUint::zero());
    Ok(out)
}

fn nonzero_u64(a: &[BigUint]) -> Vec<(usize, u64)> {
    a.iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| (i, v.to_u64().unwrap()))
        .collect()
}

fn schoolbook_u128(a: &[BigUint], b: &[BigUint], out_len: usize) -> Vec<BigUint> {
    let (na, nb) = (nonzero_u64(a), nonzero_u64(b));
    let mut acc = vec![0u128; out_len];
    for &(i, x) in &na {
        if i >= out_len {
            break;
        }
        for &(j, y) in &nb {
            let t = i + j;
            if t >= out_len {
                break;
            }
            acc[t] += x as u128 * y as u128;
        }
    }
    acc.into_iter().map(BigUint::from).collect()
}

fn schoolbook_big(a: &[BigUint], b: &[BigUint], out_len: usize) -> Vec<BigUint> {
    let na: Vec<(usize, &BigUint)> = a.iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
    let nb: Vec<(usize, &BigUint)> = b.iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
    let mut acc = vec![BigUint::zero(); out_len];
    for &(i, x) in &na {
        for &(j, y) in &nb {
            let t = i + j;
            if t >= out_len {
                break;
            }
            acc[t] += x * y;
        }
    }
    acc
}

fn pack(a: &[BigUint], w: usize) -> BigUint {
    let bits = a.len() * w;
    let mut limbs = vec![0u64; bits / 64 + 2];
    for (i, v) in a.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let off = i * w;
        let (q, r) = (off / 64, off % 64);
        for (t, d) in v.iter_u64_digits().enumerate() {
            limbs[q + t] |= d << r;
            if r != 0 {
                limbs[q + t + 1] |= d >> (64 - r);
            }
        }
    }
    BigUint::from_slice(
        &limbs
            .iter()
            .flat_map(|&l| [l as u32, (l >> 32) as u32])
            .collect::<Vec<u32>>(),
    )
}

fn extract(limbs: &[u64], off: usize, w: usize) -> BigUint {
    let n = w.div_ceil(64);
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let p = off + 64 * t;
        let (q, r) = (p / 64, p % 64);
        let lo = limbs.get(q).copied().unwrap_or(0);
        let mut word = lo >> r;
        if r != 0 {
            word |= limbs.get(q + 1).copied().unwrap_or(0) << (64 - r);
        }
        let remaining = w - 64 * t;
        if remaining < 64 {
            word &= (1u64 << remaining) - 1;
        }
        out.push(word);
    }
    let mut words = Vec::with_capacity(2 * n);
    for l in out {
        words.push(l as u32);
        words.push((l >> 32) as u32);
    }
    BigUint::from_slice(&words)
}

fn kronecker(a: &[BigUint], b: &[BigUint], bound_bits: usize) -> Vec<BigUint> {
    // Coefficients are <= bound < 2^bound_bits, so slots of that width never carry.
    let w = bound_bits.max(1);
    let prod = pack(a, w) * pack(b, w);
    let limbs: Vec<u64> = prod.iter_u64_digits().collect();
    (0..a.len() + b.len() - 1).map(|i| extract(&limbs, i * w, w)).collect()
}

fn ntt(v: &mut [u64], invert: bool) {
    let n = v.len();
    let p = NTT_PRIME;
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            v.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = powmod(NTT_ROOT, (p - 1) / len as u64, p);
        if invert {
            w = powmod(w, p - 2, p);
        }
        let half = len / 2;
        let mut tw = Vec::with_capacity(half);
        let mut cur = 1u64;
        for _ in 0..half {
            tw.push(cur);
            cur = mulmod(cur, w, p);
        }
        for chunk in v.chunks_mut(len) {
            for k in 0..half {
                let u = chunk[k];
                let t = mulmod(chunk[k + half], tw[k], p);
                chunk[k] = if u + t >= p { u + t - p } else { u + t };
                chunk[k + half] = if u >= t { u - t } else { u + p - t };
            }
        }
        len <<= 1;
    }
    if invert {
        let inv = powmod(n as u64, p - 2, p);
        for x in v.iter_mut() {
            *x = mulmod(*x, inv, p);
        }
    }
}

fn ntt_convolve(a: &[BigUint], b: &[BigUint]) -> Result<Vec<BigUint>> {
    let need = a.len() + b.len() - 1;
    let n = need.next_power_of_two();
    if n.trailing_zeros() > NTT_TWO_ADICITY {
        return Err(Error::Budget {
            what: "NTT length".into(),
            n: Some(need as u64),
        });
    }
    let p = BigUint::from(NTT_PRIME);
    let lift = |x: &[BigUint]| -> Vec<u64> {
        let mut v: Vec<u64> = x.iter().map(|c| (c % &p).to_u64().unwrap()).collect();
        v.resize(n, 0);
        v
    };
    let (mut fa, mut fb) = (lift(a), lift(b));
    ntt(&mut fa, false);
    ntt(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = mulmod(*x, *y, NTT_PRIME);
    }
    ntt(&mut fa, true);
    fa.truncate(need);
    Ok(fa.into_iter().map(BigUint::from).collect())
}

/// Coefficient `n` of `a * b` by direct summation.
pub fn coefficient_at(a: &[BigUint], b: &[BigUint], n: usize) -> BigUint {
    let lo = n.saturating_sub(b.len().saturating_sub(1));
    let hi = n.min(a.len().saturating_sub(1));
    let mut acc = BigUint::zero();
    if a.is_empty() || b.is_empty() || lo > hi {
        return acc;
    }
    for i in lo..=hi {
        if !a[i].is_zero() && !b[n - i].is_zero() {
            acc += &a[i] * &b[n - i];
        }
    }
    acc
}

/// Cyclic convolution modulo `q` (indices taken mod `q`).
pub fn cyclic_convolve(a: &[BigUint], b: &[BigUint], q: usize) -> Result<Vec<BigUint>> {
    let lin = convolve(a, b, 2 * q, Kernel::Auto)?;
    let mut out = vec![BigUint::zero(); q];
    for (i, v) in lin.into_iter().enumerate() {
        if !v.is_zero() {
            out[i % q] += v;
        }
    }
    Ok(out)
}

/// `a^{* s}` under cyclic convolution modulo `q`, by binary powering.
pub fn cyclic_power(a: &[BigUint], s: u32, q: usize) -> Result<Vec<BigUint>> {
    let mut result = vec![BigUint::zero(); q];
    result[0] = BigUint::one();
    let mut base = a.to_vec();
    let mut e = s;
    while e > 0 {
        if e & 1 == 1 {
            result = cyclic_convolve(&result, &base, q)?;
        }
        e >>= 1;
        if e > 0 {
            base = cyclic_convolve(&base, &base, q)?;
        }
    }
    Ok(result)
}
