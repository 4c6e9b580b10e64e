use super::*;
use proptest::prelude::*;

fn seeded(seed: u64, depth: u32) -> DyadicPath {
    refine(&mut BitSource::seeded(seed), depth).unwrap()
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn depth_one_has_three_samples() {
    let p = seeded(5, 1);
    assert_eq!(p.values().len(), 3);
    assert_eq!(p.values()[0], 0.0);
}

#[test]
fn refine_consumes_exactly_its_words() {
    let mut s = BitSource::seeded(1);
    refine(&mut s, 6).unwrap();
    assert_eq!(s.cursor(), 64 * 64);
}

#[test]
fn short_sources_are_refused() {
    let mut s = SourceSpec::Literal { bits: "1".repeat(64 * 3) }.open().unwrap();
    assert!(matches!(refine(&mut s, 2), Err(Error::InsufficientBits { .. })));
    let mut s = SourceSpec::Literal { bits: "1".repeat(64 * 4) }.open().unwrap();
    refine(&mut s, 2).unwrap();
}

#[test]
fn first_word_sets_the_endpoint() {
    let mut s = BitSource::seeded(17);
    let w = s.clone().next_u64().unwrap();
    let p = refine(&mut s, 3).unwrap();
    assert_eq!(p.values()[8], gaussian_from_word(w));
}

#[test]
fn lazy_refinement_matches_materialized_paths() {
    let shallow = seeded(3, 6);
    let deep = seeded(3, 10);
    for k in 0..=1024u128 {
        let lazy = shallow.value_at_dyadic(k, 10).unwrap();
        assert_eq!(lazy.to_bits(), deep.values()[k as usize].to_bits(), "k = {k}");
    }
}

#[test]
fn evaluate_at_zero_and_grid() {
    let p = seeded(2, 12);
    assert_eq!(p.evaluate(&BigRational::zero(), 60).unwrap(), Interval::point(0.0));
    let iv = p.evaluate(&ratio(1234, 4096), 40).unwrap();
    assert!(iv.contains(p.values()[1234]));
    assert_eq!(iv.width(), 0.0);
}

#[test]
fn evaluate_one_third_meets_width() {
    let p = seeded(4, 20);
    let iv = p.evaluate(&ratio(1, 3), 8).unwrap();
    assert!(iv.width() <= 1.0 / 256.0, "{iv:?}");
    // the deepest reachable value near 1/3
    let k = ((1u128 << 64) - 1) / 3;
    let v = p.value_at_dyadic(k, 64).unwrap();
    assert!(iv.contains(v), "{iv:?} vs {v}");
}

#[test]
fn evaluate_rejects_out_of_domain() {
    let p = seeded(4, 4);
    assert!(matches!(p.evaluate(&ratio(-1, 3), 4), Err(Error::OutOfDomain(_))));
    assert!(matches!(p.evaluate(&ratio(4, 3), 4), Err(Error::OutOfDomain(_))));
    assert!(matches!(p.evaluate_f64(1.5, 4), Err(Error::OutOfDomain(_))));
}

#[test]
fn evaluate_refuses_beyond_modulus_floor() {
    let p = seeded(4, 10);
    assert!(matches!(
        p.evaluate(&ratio(1, 3), 40),
        Err(Error::PrecisionUnattainable { requested: 40, .. })
    ));
}

#[test]
fn walk_paths_interpolate_exactly() {
    let p = DyadicPath::from_walk(&"10".parse().unwrap(), 3).unwrap();
    assert_eq!(p.refinable_level(), 3);
    let iv = p.evaluate(&ratio(1, 3), 40).unwrap();
    let exact = std::f64::consts::SQRT_2 / 3.0;
    assert!(iv.contains(exact) || (iv.midpoint() - exact).abs() < 1e-15, "{iv:?}");
    assert!(iv.width() < 1e-14);
}

#[test]
fn ramp_walk_is_identity_on_grid() {
    let p = DyadicPath::from_walk(&"1".parse().unwrap(), 5).unwrap();
    for (k, v) in p.values().iter().enumerate() {
        assert_eq!(*v, k as f64 / 32.0);
    }
}

#[test]
fn explicit_samples_must_start_at_zero() {
    assert!(DyadicPath::from_samples(1, vec![1.0, 0.0, 0.0]).is_err());
    assert!(DyadicPath::from_samples(1, vec![0.0, 0.0]).is_err());
    assert!(DyadicPath::from_samples(1, vec![0.0, 0.5, 0.0]).is_ok());
}

#[test]
fn approximant_of_positive_endpoint_is_up() {
    let mut seed = 0;
    loop {
        let p = seeded(seed, 8);
        if p.values()[256] > 0.0 {
            assert_eq!(code_of_walk(&approximant(&p, 1).unwrap()).unwrap().to_string(), "1");
            break;
        }
        seed += 1;
    }
}

#[test]
fn approximant_error_respects_rate() {
    let p = seeded(21, 20);
    let w = approximant(&p, 1 << 10).unwrap();
    let d = sup_distance(&w, &p);
    let m = 1024f64;
    let c = d * m.sqrt() / m.ln();
    assert!(c <= 4.0, "C = {c}");
}

#[test]
fn sup_distance_of_path_to_itself_is_zero() {
    let code: WalkCode = "1101".parse().unwrap();
    let p = DyadicPath::from_walk(&code, 2).unwrap();
    assert!(sup_distance(&walk_from_code(&code), &p) < 1e-15);
}

#[test]
fn convergence_fit_reports_points() {
    let p = seeded(8, 14);
    let fit = convergence_fit(&p, &[1 << 6, 1 << 8, 1 << 10]).unwrap();
    assert_eq!(fit.points.len(), 3);
    assert_eq!(fit.onset, 64);
    assert!(fit.constant > 0.0);
    assert_eq!(fit.residuals.len(), 3);
}

#[test]
fn modulus_of_ramp() {
    let p = DyadicPath::from_walk(&"1".parse().unwrap(), 4).unwrap();
    let r = modulus_check(&p, &[0, 1]).unwrap();
    assert_eq!(r.rows[1].max_increment, 0.5);
    assert_eq!(r.rows[0].max_increment, 1.0);
    assert!(r.rows[0].holder_log_ratio.is_none());
}

#[test]
fn modulus_unit_scale_is_endpoint() {
    let p = seeded(12, 6);
    let r = modulus_check(&p, &[0]).unwrap();
    assert_eq!(r.rows[0].max_increment, p.values()[64].abs());
    assert!(modulus_check(&p, &[7]).is_err());
}

#[test]
fn snapshot_round_trip_restores_refinement() {
    let p = seeded(77, 7);
    let bytes = p.to_snapshot_bytes();
    let q = DyadicPath::from_snapshot_bytes(&bytes).unwrap();
    assert_eq!(p, q);
    assert_eq!(q.refinable_level(), MAX_REFINE_LEVEL);
    assert_eq!(
        p.value_at_dyadic(5, 12).unwrap().to_bits(),
        q.value_at_dyadic(5, 12).unwrap().to_bits()
    );
    assert_eq!(q.sidecar()["source"], "seed:77");
}

#[test]
fn snapshot_rejects_garbage() {
    let p = seeded(1, 2);
    let mut bytes = p.to_snapshot_bytes();
    assert!(DyadicPath::from_snapshot_bytes(&bytes[..bytes.len() - 1]).is_err());
    bytes[0] = b'X';
    assert!(DyadicPath::from_snapshot_bytes(&bytes).is_err());
}

#[test]
fn walk_snapshot_keeps_code() {
    let p = DyadicPath::from_walk(&"0110".parse().unwrap(), 3).unwrap();
    let q = DyadicPath::from_snapshot_bytes(&p.to_snapshot_bytes()).unwrap();
    assert_eq!(p, q);
}

#[test]
fn round_trip_exhaustive_to_twelve() {
    for n in 1..=12 {
        for code in WalkCode::all_of_length(n) {
            assert_eq!(code_of_walk(&walk_from_code(&code)).unwrap(), code);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deeper_refinement_preserves_coarse_values(seed in any::<u64>(), d in 1u32..10) {
        let a = seeded(seed, d);
        let b = seeded(seed, d + 1);
        for (k, v) in a.values().iter().enumerate() {
            prop_assert_eq!(v.to_bits(), b.values()[2 * k].to_bits());
        }
    }

    #[test]
    fn evaluate_contains_stored_interpolant_on_closed_paths(
        seed in any::<u64>(), num in 0u64..1000, den in 1u64..1000,
    ) {
        prop_assume!(num <= den);
        let p = seeded(seed, 8);
        let q = DyadicPath::from_samples(8, p.values().to_vec()).unwrap();
        let iv = q.evaluate(&BigRational::new(num.into(), den.into()), 30).unwrap();
        prop_assert!(iv.contains(q.value_at_ratio(num, den)));
    }

    #[test]
    fn evaluate_contains_interpolant_at_level_used(
        seed in any::<u64>(), num in 1u64..999, n in 4u32..20,
    ) {
        let p = seeded(seed, 8);
        let t = BigRational::new(num.into(), 999u64.into());
        let iv = p.evaluate(&t, n).unwrap();
        prop_assert!(iv.width() <= (-(n as f64)).exp2());
        let k = ((1u128 << 64) / 999) * num as u128;
        let deep = p.value_at_dyadic(k, 64).unwrap();
        prop_assert!(iv.contains(deep));
    }
}

#[test]
fn extreme_words_stay_finite() {
    for w in [0u64, u64::MAX, 1 << 63] {
        assert!(gaussian_from_word(w).is_finite());
    }
    assert!(gaussian_from_word(1 << 63).abs() < 1e-15);
    assert!(gaussian_from_word(u64::MAX) > 8.0);
}
