use super::WeightedSet;
use crate::error::{invalid, Error, Result};

/// Outcome of the `B_m` Sidon test.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SidonReport {
    pub holds: bool,
    pub m: u32,
    /// `m!`, the allowed number of ordered representations.
    pub allowed: u64,
    pub max_count: u64,
    /// First `n` whose ordered count exceeds `m!`, with that count.
    pub witness: Option<(u64, u64)>,
    /// Ordered representation counts for `n = 0 ..= m(p-1)`.
    pub counts: Vec<u64>,
}

/// Tests whether every `n <= m p` has at most `m!` ordered representations as
/// a sum of `m` digits.
pub fn verify_sidon(digits: &[u64], m: u32, p: u64) -> Result<SidonReport> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    for &d in digits {
        if d >= p {
            return Err(Error::InvalidDigit { digit: d, p });
        }
    }
    let mut uniq = digits.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let top = (m as u64) * (p.saturating_sub(1));
    let mut counts = vec![0u64; top as usize + 1];
    counts[0] = 1;
    for _ in 0..m {
        let mut next = vec![0u64; counts.len()];
        for (n, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &d in &uniq {
                let t = n + d as usize;
                if t < next.len() {
                    next[t] += c;
                }
            }
        }
        counts = next;
    }
    let allowed: u64 = (1..=m as u64).product();
    let witness = counts
        .iter()
        .enumerate()
        .find(|(_, &c)| c > allowed)
        .map(|(n, &c)| (n as u64, c));
    Ok(SidonReport {
        holds: witness.is_none(),
        m,
        allowed,
        max_count: counts.iter().copied().max().unwrap_or(0),
        witness,
        counts,
    })
}

/// Finite-sample proxy for the logarithmic lower density.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct LogDensity {
    /// Minimum of `log A(X) / log X` over the grid.
    pub lambda: f64,
    pub trace: Vec<(u64, f64)>,
}

pub fn log_density(a: &WeightedSet, grid: &[u64]) -> Result<LogDensity> {
    if grid.len() < 2 {
        return Err(invalid("log density needs at least two grid points"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid must be strictly increasing"));
    }
    let mut trace = Vec::with_capacity(grid.len());
    for &x in grid {
        let ax = super::to_f64(&a.count_up_to(x)?);
        if ax <= 1.0 {
            return Err(invalid(format!("A({x}) <= 1")));
        }
        trace.push((x, ax.ln() / (x as f64).ln()));
    }
    let lambda = trace.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    Ok(LogDensity { lambda, trace })
}

/// Convexity of the support: consecutive gaps never shrink.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Convexity {
    pub holds: bool,
    /// Index `n` of the first gap smaller than gap `n - 1`.
    pub first_violation: Option<usize>,
    pub gaps: Vec<u64>,
}

pub fn check_convexity(a: &WeightedSet) -> Result<Convexity> {
    let s = a.support();
    if s.len() < 3 {
        return Err(invalid("support has fewer than three elements"));
    }
    let gaps: Vec<u64> = s.windows(2).map(|w| w[1] - w[0]).collect();
    let first_violation = (1..gaps.len()).find(|&n| gaps[n] < gaps[n - 1]);
    Ok(Convexity {
        holds: first_violation.is_none(),
        first_violation,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{generate_set, SetSpec};

    #[test]
    fn sidon_examples() {
        let a = verify_sidon(&[0, 1, 3], 2, 7).unwrap();
        assert!(a.holds);
        assert_eq!(a.max_count, 2);
        let b = verify_sidon(&[0, 1], 3, 5).unwrap();
        assert!(b.holds);
        assert_eq!(&b.counts[..4], &[1, 3, 3, 1]);
        let c = verify_sidon(&[0, 1, 2], 2, 7).unwrap();
        assert!(!c.holds);
        assert_eq!(c.witness, Some((2, 3)));
    }

    #[test]
    fn log_density_examples() {
        let e = generate_set(&SetSpec::Ellipsephic { p: 3, digits: vec![0, 1] }, 3u64.pow(8)).unwrap();
        let grid: Vec<u64> = (2..=8).map(|h| 3u64.pow(h)).collect();
        let ld = log_density(&e, &grid).unwrap();
        for (_, v) in &ld.trace {
            assert!((v - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
        }
        let n = generate_set(&SetSpec::Naturals, 1000).unwrap();
        assert!((log_density(&n, &[10, 100, 1000]).unwrap().lambda - 1.0).abs() < 1e-12);
        assert!(log_density(&n, &[1, 10]).is_err());
    }

    #[test]
    fn convexity_examples() {
        let g = WeightedSet::unit(16, vec![1, 2, 4, 8, 16], "g").unwrap();
        assert!(check_convexity(&g).unwrap().holds);
        let e = WeightedSet::unit(10, vec![1, 3, 4, 9, 10], "e").unwrap();
        let c = check_convexity(&e).unwrap();
        assert!(!c.holds);
        assert_eq!(c.first_violation, Some(1));
        let n = WeightedSet::unit(5, vec![1, 2, 3, 4, 5], "n").unwrap();
        assert!(check_convexity(&n).unwrap().holds);
        let small = WeightedSet::unit(5, vec![1, 2], "s").unwrap();
        assert!(check_convexity(&small).is_err());
    }
}
