use gslab::bessel::Order;
use gslab::phase::*;
use proptest::prelude::*;

fn far_gamma() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1f64..10.0, -1.0f64..2.0, 0.0f64..1.0).prop_map(|(p, log_sigma, g)| {
        let sigma = 10f64.powf(log_sigma);
        let gamma = if sigma >= 1.0 { 1.0 + 0.5 * g } else { -0.5 + 1.5 * g };
        (p, sigma, gamma)
    })
}

fn assert_partition_covers(params: &PhaseParams) {
    let (lo, hi) = params.domain();
    let part = params.partition();
    let s = &part.segments;
    assert!(!s.is_empty());
    assert_eq!(s[0].lo, lo);
    assert_eq!(s[s.len() - 1].hi, hi);
    for w in s.windows(2) {
        assert_eq!(w[0].hi, w[1].lo);
    }
    assert!(s.iter().all(|x| x.lo <= x.hi));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn near_stationary_point_identity(two_nu in 4u32..4097, eta in 0.05f64..3.0, gamma in 0.0f64..(1.0 / 3.0)) {
        let np = NearParams::new(Order::from_two_nu(two_nu), eta, gamma).unwrap();
        let params = PhaseParams::Near(np);
        let u0 = 1.0 + np.nu_f().powf(-gamma);
        let v = phase_eval(&params, a_of_gamma(&params), u0).unwrap();
        prop_assert!(v.phi_prime.abs() <= 1e-10 * np.nu_f(), "{}", v.phi_prime);
        prop_assert!(v.psi > 0.0);
    }

    #[test]
    fn far_stationary_point_identity((p, sigma, gamma) in far_gamma()) {
        let params = PhaseParams::Far(FarParams::new(p, sigma, gamma).unwrap());
        let u0 = sigma + sigma.powf(gamma);
        let v = phase_eval(&params, a_of_gamma(&params), u0).unwrap();
        prop_assert!(v.phi_prime.abs() <= 1e-10, "{}", v.phi_prime);
        prop_assert!(v.psi > 0.0);
    }

    #[test]
    fn near_partition_covers_domain(two_nu in 4u32..4097, eta in 0.05f64..3.0, gamma in 0.0f64..(1.0 / 3.0)) {
        let params = PhaseParams::Near(NearParams::new(Order::from_two_nu(two_nu), eta, gamma).unwrap());
        let (lo, hi) = params.domain();
        if lo < hi {
            assert_partition_covers(&params);
        }
    }

    #[test]
    fn far_partition_covers_domain((p, sigma, gamma) in far_gamma()) {
        assert_partition_covers(&PhaseParams::Far(FarParams::new(p, sigma, gamma).unwrap()));
    }

    #[test]
    fn far_phi_second_changes_sign_at_most_once((p, sigma, gamma) in far_gamma()) {
        let params = PhaseParams::Far(FarParams::new(p, sigma, gamma).unwrap());
        let u0 = sigma + sigma.powf(gamma);
        let hi = u0 + (10.0 * sigma.powf(gamma / 2.0)).max(1e3);
        prop_assert!(phi_second_sign_changes(&params, a_of_gamma(&params), 2.0 * sigma, hi, 4096) <= 1);
    }
}
