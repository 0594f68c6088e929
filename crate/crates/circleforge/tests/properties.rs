//! Property tests for the invariants of each module.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use circleforge::arith::{format_rational, ratio};
use circleforge::conv::Kernel;
use circleforge::counting::{count_representations, mean_value};
use circleforge::expsum::{
    arc_membership, complete_sum, w_integral, weyl_sum, ArcMode, ArcParams, Phase, PolySystem,
};
use circleforge::predict::{applicability, compute_y, main_term, Constituents, Measurements, Theorem, TheoremId, YInputs, YVariant};
use circleforge::psi::{build_psi_star, li_profile};
use circleforge::quad::QuadConfig;
use circleforge::sets::{generate_set, verify_sidon, DistributionProfile, SetSpec, WeightedSet};
use circleforge::singular::{SeriesEngine, SeriesMode};

fn set_spec() -> impl Strategy<Value = SetSpec> {
    prop_oneof![
        Just(SetSpec::Naturals),
        Just(SetSpec::Primes),
        Just(SetSpec::Ellipsephic { p: 5, digits: vec![0, 1, 3] }),
        Just(SetSpec::Ellipsephic { p: 3, digits: vec![0, 2] }),
        (2u64..8).prop_map(|q| SetSpec::Smooth { q }),
        prop::collection::btree_map(1u64..40, (1i64..6, 1i64..4), 1..10).prop_map(|m| SetSpec::Explicit {
            pairs: m.into_iter().map(|(n, (a, b))| (n, BigRational::new(a.into(), b.into()))).collect(),
        }),
    ]
}

fn profile() -> impl Strategy<Value = DistributionProfile> {
    prop_oneof![
        Just(DistributionProfile::classical(120)),
        Just(DistributionProfile::primes(120)),
        Just(DistributionProfile::ellipsephic(5, &[0, 1, 3], 120).unwrap()),
        Just(DistributionProfile::ellipsephic(7, &[0, 1, 3], 120).unwrap()),
    ]
}

fn scale(a: &WeightedSet, c: &BigRational) -> WeightedSet {
    a.scaled(c).unwrap()
}

/// Ordered `m`-tuples of digits with each sum, by enumeration.
fn sidon_brute(digits: &[u64], m: u32, p: u64) -> Vec<u64> {
    let mut uniq = digits.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let mut counts = vec![0u64; (m as u64 * (p - 1)) as usize + 1];
    let mut idx = vec![0usize; m as usize];
    loop {
        let s: u64 = idx.iter().map(|&i| uniq[i]).sum();
        counts[s as usize] += 1;
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < uniq.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            return counts;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn residue_classes_partition_the_mass(spec in set_spec(), x in 2u64..300, q in 1u64..25) {
        let a = generate_set(&spec, x).unwrap();
        let total: BigRational = (0..q).map(|b| a.residue_count(q, b, x).unwrap()).sum();
        prop_assert_eq!(total, a.count_up_to(x).unwrap());
    }

    #[test]
    fn profiles_are_normalized_and_additive(p in profile(), q in 1u64..12, q2 in 1u64..10) {
        let row = p.kappa_row(q).unwrap();
        prop_assert!(row.iter().sum::<BigRational>().is_one());
        let big = p.kappa_row(q * q2).unwrap();
        for b in 0..q as usize {
            let folded: BigRational = (0..q2 as usize).map(|j| big[b + j * q as usize].clone()).sum();
            prop_assert_eq!(&folded, &row[b]);
        }
    }

    #[test]
    fn explicit_sets_round_trip_through_files(spec in set_spec()) {
        let a = generate_set(&spec, 60).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.txt");
        std::fs::write(&path, a.to_file_string()).unwrap();
        let b = generate_set(&SetSpec::FromFile { path }, 60).unwrap();
        prop_assert_eq!(a.support(), b.support());
        for (n, w) in a.iter() {
            prop_assert_eq!(b.weight(n), w);
        }
    }

    #[test]
    fn sidon_matches_enumeration(
        p in prop::sample::select(vec![3u64, 5, 7, 11]),
        raw in prop::collection::vec(0u64..11, 1..=6),
        m in 1u32..=4,
    ) {
        let digits: Vec<u64> = raw.into_iter().map(|d| d % p).collect();
        let r = verify_sidon(&digits, m, p).unwrap();
        let brute = sidon_brute(&digits, m, p);
        prop_assert_eq!(&r.counts, &brute);
        let allowed: u64 = (1..=m as u64).product();
        prop_assert_eq!(r.holds, brute.iter().all(|&c| c <= allowed));
    }

    #[test]
    fn psi_is_monotone_and_interpolates(spec in set_spec(), x in 5u64..200, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let set = generate_set(&spec, x).unwrap();
        prop_assume!(!set.is_empty());
        let psi = build_psi_star(&set).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let xf = x as f64;
        prop_assert!(psi.evaluate(lo * xf).unwrap().0 <= psi.evaluate(hi * xf).unwrap().0);
        for &n in set.support() {
            let exact = psi.evaluate_exact(&BigRational::from_integer(n.into())).unwrap();
            prop_assert_eq!(exact, set.count_up_to(n).unwrap());
        }
        let z0 = psi.z_map(x, 0.0).unwrap();
        prop_assert_eq!(z0, 0.0);
        prop_assert!(psi.z_map(x, lo).unwrap() <= psi.z_map(x, hi).unwrap());
        let t = hi * xf;
        let (v, d) = psi.evaluate(t).unwrap();
        if d > 0.0 && v > 0.0 {
            let back = psi.inverse(v).unwrap();
            prop_assert!((back - t).abs() <= 1e-10 * t.max(1.0), "{} vs {}", back, t);
        }
    }

    #[test]
    fn li_profile_round_trips(tau in 2.01f64..5.0, x in 3.0f64..1e6) {
        let psi = li_profile(tau, 1_000_000).unwrap();
        let (v, _) = psi.evaluate(x).unwrap();
        let back = psi.inverse(v).unwrap();
        prop_assert!((back - x).abs() <= 1e-10 * x);
    }

    #[test]
    fn weyl_sums_are_bounded_and_symmetric(spec in set_spec(), x in 2u64..200, num in 0i128..1000, den in 1u64..1000) {
        let a = generate_set(&spec, x).unwrap();
        let phi = PolySystem::monomial(2);
        let mass = circleforge::sets::to_f64(&a.count_up_to(x).unwrap());
        let alpha = Phase::new(num, den).unwrap();
        let f = weyl_sum(&a, &phi, &[alpha], x).unwrap();
        let g = weyl_sum(&a, &phi, &[alpha.neg()], x).unwrap();
        prop_assert!(f.norm() <= mass * (1.0 + 1e-12) + 1e-12);
        prop_assert!((f - g.conj()).norm() <= 1e-9 * mass.max(1.0));
        let z = weyl_sum(&a, &phi, &[Phase::zero()], x).unwrap();
        prop_assert!((z.norm() - mass).abs() <= 1e-9 * mass.max(1.0));
    }

    #[test]
    fn complete_sums_are_bounded(p in profile(), q in 1u64..60, b in 0u64..60, k in 1u32..4) {
        let s = complete_sum(&p, &PolySystem::monomial(k), q, &[b % q]).unwrap();
        prop_assert!(s.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn larger_q_never_demotes_major_points(alpha in 0.0f64..1.0, q in 1u64..20, extra in 0u64..20) {
        let phi = PolySystem::monomial(2);
        let a = arc_membership(&[alpha], &ArcParams::new(200, q, &phi).unwrap(), ArcMode::M).unwrap();
        let b = arc_membership(&[alpha], &ArcParams::new(200, q + extra, &phi).unwrap(), ArcMode::M).unwrap();
        prop_assert!(!a.is_major() || b.is_major());
    }

    #[test]
    fn counts_convolve_and_conserve_mass(spec in set_spec(), x in 2u64..25, k in 1u32..4, s in 1u32..4) {
        let a = generate_set(&spec, x).unwrap();
        let n_max = s as u64 * x.pow(k);
        let r = count_representations(&a, k, s, n_max, Kernel::Auto).unwrap();
        let total: BigRational = (0..=n_max).map(|n| r.get(n)).sum();
        prop_assert_eq!(total, num_traits::pow(a.count_up_to(x).unwrap(), s as usize));
        if s > 1 {
            let xk = x.pow(k);
            let prev = count_representations(&a, k, s - 1, (s as u64 - 1) * xk, Kernel::Auto).unwrap();
            let one = count_representations(&a, k, 1, xk, Kernel::Auto).unwrap();
            for n in (0..=n_max).step_by(7) {
                let conv: BigRational = (n.saturating_sub(xk)..=n.min((s as u64 - 1) * xk))
                    .map(|m| prev.get(m) * one.get(n - m))
                    .sum();
                prop_assert_eq!(r.get(n), conv);
            }
        }
    }

    #[test]
    fn kernels_agree(spec in set_spec(), x in 2u64..40, k in 1u32..4, s in 1u32..5) {
        let a = generate_set(&spec, x).unwrap();
        let n_max = (s as u64 * x.pow(k)).min(20_000);
        let base = count_representations(&a, k, s, n_max, Kernel::Schoolbook).unwrap();
        for kernel in [Kernel::Auto, Kernel::Kronecker, Kernel::Ntt] {
            let other = count_representations(&a, k, s, n_max, kernel).unwrap();
            prop_assert_eq!(base.numerators(), other.numerators());
            prop_assert_eq!(base.den(), other.den());
        }
    }

    #[test]
    fn parseval_and_scaling(spec in set_spec(), x in 2u64..20, k in 1u32..4, t in 1u32..3, c in (1i64..5, 1i64..5)) {
        let a = generate_set(&spec, x).unwrap();
        let n_max = t as u64 * x.pow(k);
        let r = count_representations(&a, k, t, n_max, Kernel::Auto).unwrap();
        let sq: BigRational = (0..=n_max).map(|n| { let v = r.get(n); &v * &v }).sum();
        prop_assert_eq!(mean_value(&a, &PolySystem::monomial(k), t, x).unwrap().value, sq);
        let c = ratio(c.0 as u64, c.1 as u64);
        let rc = count_representations(&scale(&a, &c), k, t, n_max, Kernel::Auto).unwrap();
        let f = num_traits::pow(c, t as usize);
        for n in 0..=n_max {
            prop_assert_eq!(rc.get(n), &f * r.get(n));
        }
    }

    #[test]
    fn mean_value_series_is_at_least_one(p in profile(), s in 1u32..5, k in 1u32..4, q_max in 1u64..60) {
        let phi = PolySystem::monomial(k);
        let mut eng = SeriesEngine::new(&p, &phi);
        let mode = SeriesMode::MeanValue { s };
        for q in 1..=q_max.min(20) {
            let t = eng.term(&mode, q).unwrap();
            prop_assert!(t.re >= -1e-12 && t.im.abs() <= 1e-10, "B({}) = {}", q, t);
        }
        let r = eng.series(&mode, q_max).unwrap();
        prop_assert!(r.value >= 1.0 - 1e-12);
    }

    #[test]
    fn waring_series_is_real(p in profile(), s in 1u32..6, n in 0u64..100, q_max in 1u64..60) {
        let phi = PolySystem::monomial(2);
        let r = SeriesEngine::new(&p, &phi).series(&SeriesMode::Waring { s, n }, q_max).unwrap();
        prop_assert!(r.imag_max <= 1e-10);
    }

    #[test]
    fn y_is_monotone(
        base in prop::array::uniform5(1.0f64..1e6),
        which in 0usize..5,
        factor in 1.0f64..10.0,
        r in 1u32..4,
    ) {
        let make = |v: [f64; 5]| YInputs { q_d: v[0], q_w: v[1], a: v[2], e: v[3], x: v[4] };
        let mut up = base;
        // Y grows with every argument except E, where it shrinks
        if which == 3 { up[3] /= factor } else { up[which] *= factor }
        for variant in [YVariant::Waring, YVariant::Mixed, YVariant::MeanValue { r }] {
            let a = compute_y(&make(base), variant).unwrap().value;
            let b = compute_y(&make(up), variant).unwrap().value;
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn main_terms_scale(a in 1.0f64..100.0, c in 0.5f64..4.0, s in 1u32..6, u in 0u32..4, n in 1u64..10_000, big_k in 1u32..6) {
        let base = Constituents { a, series: 1.3, integral: 0.7, ..Default::default() };
        let scaled = Constituents { a: a * c, ..base };
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs());
        let th = Theorem::Waring { k: 2, s, n };
        let m0 = main_term(&th, &base, None, None).unwrap().main_term;
        let m1 = main_term(&th, &scaled, None, None).unwrap().main_term;
        prop_assert!(close(m1, m0 * c.powi(s as i32)));
        let th = Theorem::MeanValue { big_k, s, x: n };
        let m0 = main_term(&th, &base, None, None).unwrap().main_term;
        let m1 = main_term(&th, &scaled, None, None).unwrap().main_term;
        prop_assert!(close(m1, m0 * c.powi(2 * s as i32)));
        let w = main_term(&Theorem::Waring { k: 2, s, n }, &base, None, None).unwrap().main_term;
        let m = main_term(&Theorem::Mixed { k: 2, s, u, n }, &base, None, None).unwrap().main_term;
        prop_assert!(close(m, w * (n as f64).powf(u as f64 / 2.0)));
    }

    #[test]
    fn applicability_is_pure(s in 1u32..40, t0 in 0.0f64..20.0, sigma in 0.0f64..10.0, u in 0u32..20) {
        let m = Measurements { s: Some(s), u: Some(u), t0: Some(t0), sigma0: Some(sigma), r: Some(1), ..Default::default() };
        for th in [TheoremId::Waring, TheoremId::Mixed, TheoremId::MeanValue] {
            prop_assert_eq!(applicability(th, &m).unwrap(), applicability(th, &m).unwrap());
        }
    }
}

#[test]
fn naturals_star_is_the_identity() {
    let psi = build_psi_star(&generate_set(&SetSpec::Naturals, 50).unwrap()).unwrap();
    for i in 0..=500 {
        let x = i as f64 / 10.0;
        assert_eq!(psi.evaluate(x).unwrap().0, x);
    }
    let exact = psi.evaluate_exact(&ratio(7, 3)).unwrap();
    assert_eq!(format_rational(&exact), "7/3");
}

#[test]
fn w_is_conjugate_symmetric() {
    let psi = build_psi_star(&generate_set(&SetSpec::Naturals, 100).unwrap()).unwrap();
    let cfg = QuadConfig::default();
    for phi in [PolySystem::monomial(2), PolySystem::monomial(3)] {
        for g in [0.3, 2.5, 17.0, 140.0] {
            let a = w_integral(&psi, &phi, &[g], 100, &cfg).unwrap().value;
            let b = w_integral(&psi, &phi, &[-g], 100, &cfg).unwrap().value;
            assert!((a - b.conj()).norm() < 1e-9, "{a} {b}");
        }
    }
    let zero = w_integral(&psi, &PolySystem::monomial(2), &[0.0], 100, &cfg).unwrap().value;
    assert!((zero - Complex64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn gamma_ratio_for_s_equal_k() {
    for k in 1..8u32 {
        let direct = libm::tgamma(1.0 / k as f64).powi(k as i32) / libm::tgamma(1.0);
        let v = circleforge::predict::prime_gamma_ratio(k, k).unwrap();
        assert!((v - direct).abs() <= 1e-12 * direct);
    }
    assert!(BigRational::zero() < BigRational::one());
}
