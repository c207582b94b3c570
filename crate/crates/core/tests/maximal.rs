use std::f64::consts::PI;

use gslab::bessel::Order;
use gslab::maximal::*;
use gslab::operators::{build_kernel, Grid, KernelSpec, Piece};
use num_complex::Complex64;

fn bump(s: f64) -> Complex64 {
    Complex64::new((-4.0 * (s - 2.0) * (s - 2.0)).exp(), 0.0)
}

/// Composite Simpson on `n` (even) intervals.
fn simpson<F: Fn(f64) -> Complex64>(a: f64, b: f64, n: usize, f: F) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

#[test]
fn indicator_over_full_periods_vanishes() {
    let g = RadialDatum::from_fn((1.0, 2.0), 1.0, 0.0, |_| Complex64::new(1.0, 0.0)).unwrap();
    assert!(q_nu_t(&g, Order::from_two_nu(1), 0.0, 1.0).unwrap().norm() < 1e-13);
}

#[test]
fn three_halves_matches_simpson_oracle() {
    let (t, r) = (0.1, 0.5);
    let g = RadialDatum::from_fn((0.0, 6.0), r, t, bump).unwrap();
    let got = q_nu_t(&g, Order::from_two_nu(3), t, r).unwrap();
    // √x J_{3/2}(x) = √(2/π) (sin x / x − cos x)
    let jt = |x: f64| if x < 1e-4 { (2.0 / PI).sqrt() * x * x / 3.0 } else { (2.0 / PI).sqrt() * (x.sin() / x - x.cos()) };
    let want = simpson(0.0, 6.0, 20000, |s| Complex64::from_polar(jt(2.0 * PI * r * s), -2.0 * PI * t * s * s) * bump(s));
    assert!((got - want).norm() < 1e-10 * want.norm(), "{got} vs {want}");
}

#[test]
fn ratio_vanishes_far_below_turning_point() {
    let g = RadialDatum::from_fn((1.0, 2.0), 1.0, 0.5, |s| Complex64::new(s, 0.0)).unwrap();
    let q = q_star_ratio(&g, Order::from_two_nu(200), &[0.0, 0.25, 0.5], &Grid::r_uniform(32)).unwrap();
    assert!(q < 1e-40, "{q}");
}

#[test]
fn crosscheck_against_one_dimensional_propagator() {
    let g = |s: f64| Complex64::new(s * (-PI * s * s).exp(), 0.0);
    let r = Grid::r_uniform(64);
    let at_zero = n1_crosscheck(g, (0.0, 6.0), 0.0, &r, &CrossCheckOptions::default()).unwrap();
    assert!(at_zero <= 1e-10, "{at_zero}");
    let later = n1_crosscheck(g, (0.0, 6.0), 0.05, &r, &CrossCheckOptions::default()).unwrap();
    assert!(later <= 1e-6, "{later}");
}

#[test]
fn gaussian_half_order_closed_form() {
    // g = s e^{−πs²}: Q^t g(r) = r (1+2it)^{−3/2} e^{−πr²/(1+2it)} / √(2π)
    let g = RadialDatum::from_fn((0.0, 6.0), 1.0, 0.2, |s| Complex64::new(s * (-PI * s * s).exp(), 0.0)).unwrap();
    for (t, r) in [(0.0, 0.3), (0.2, 0.7), (-0.1, 1.0)] {
        let z = Complex64::new(1.0, 2.0 * t);
        let want = r * z.powf(-1.5) * (-PI * r * r / z).exp() / (2.0 * PI).sqrt();
        let got = q_nu_t(&g, Order::from_two_nu(1), t, r).unwrap();
        assert!((got - want).norm() < 1e-12, "t={t} r={r}: {got} vs {want}");
    }
}

#[test]
fn convention_bridge_at_a_fixed_time() {
    let nu = Order::from_two_nu(3);
    let s = Grid::s_panels(2.0, 12.0, 0.2, 8);
    let r = Grid::r_uniform(40);
    let tau = 0.013;
    let mut spec = KernelSpec::new(Piece::Full, nu, (2.0, 12.0), 0.25);
    spec.t_field = vec![tau; r.len()];
    let op = build_kernel(&spec, &s, &r).unwrap();
    // G_i = √w_i g(σ_i) for a smooth complex g
    let datum: Vec<Complex64> =
        s.nodes.iter().zip(&s.weights).map(|(x, w)| Complex64::from_polar(w.sqrt() * (1.0 + x).recip(), 0.3 * x)).collect();
    let g: Vec<Complex64> = datum.iter().zip(&s.weights).map(|(d, w)| d / w.sqrt()).collect();
    let tg = op.apply(&g).unwrap();
    let t_ratio = tg.iter().zip(&r.weights).map(|(v, w)| v.norm_sqr() * w).sum::<f64>() / datum.iter().map(|d| d.norm_sqr()).sum::<f64>();
    let (q_datum, times) = datum_from_operator(&s, &datum, &[tau]).unwrap();
    let q = q_star_ratio_with(&q_datum, nu, &times, &r, &SupOptions { refine_steps: 0 }).unwrap();
    let want = t_ratio / (2.0 * PI).sqrt();
    assert!((q - want).abs() < 1e-10 * want, "{q} vs {want}");
}

#[test]
fn ratio_scales_with_square_root_of_dilation() {
    let nu = Order::from_two_nu(5);
    let g = RadialDatum::from_fn((1.0, 4.0), 4.0, 0.5, |s| Complex64::from_polar(s.sin().abs() + 0.1, s)).unwrap();
    let r = Grid::r_uniform(32);
    let times = [0.0, 0.01, 0.05, 0.1];
    let opts = SupOptions { refine_steps: 0 };
    let lam: f64 = 2.5;
    // g_λ(s) = g(λs) on nodes s_i/λ, weights w_i/λ; r and t rescale with it.
    let g_lam = RadialDatum::new(
        g.s_nodes.iter().map(|s| s / lam).collect(),
        g.weights.iter().map(|w| w / lam).collect(),
        g.values.clone(),
        (g.interval.0 / lam, g.interval.1 / lam),
    )
    .unwrap();
    let r_over = Grid::new(r.nodes.iter().map(|x| x / lam).collect(), r.weights.iter().map(|w| w / lam).collect()).unwrap();
    let t_over: Vec<f64> = times.iter().map(|t| t / (lam * lam)).collect();
    let a = q_star_ratio_with(&g_lam, nu, &times, &r, &opts).unwrap();
    let b = q_star_ratio_with(&g, nu, &t_over, &r_over, &opts).unwrap();
    assert!((a - lam.sqrt() * b).abs() < 1e-11 * a, "{a} vs {}", lam.sqrt() * b);
}

#[test]
fn plancherel_at_time_zero() {
    let g = RadialDatum::from_fn((0.0, 6.0), 40.0, 0.0, bump).unwrap();
    for tn in [1u32, 4, 9] {
        let lhs = q_zero_norm_sqr(&g, Order::from_two_nu(tn), 40.0, 0.05).unwrap();
        let rhs = g.l2_norm_sqr() / (2.0 * PI);
        assert!((lhs - rhs).abs() < 1e-6 * rhs, "2ν={tn}: {lhs} vs {rhs}");
    }
}

#[test]
fn ratio_monotone_under_t_refinement() {
    let nu = Order::from_two_nu(2);
    let g = RadialDatum::from_fn((0.5, 3.0), 1.0, 2.0, |s| Complex64::new((-s).exp(), 0.0)).unwrap();
    let r = Grid::r_uniform(32);
    let opts = SupOptions { refine_steps: 0 };
    let mut prev = 0.0;
    for n in [3usize, 5, 9, 17, 33] {
        let t: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 / (n - 1) as f64).collect();
        let q = q_star_ratio_with(&g, nu, &t, &r, &opts).unwrap();
        assert!(q >= prev, "{n}: {q} < {prev}");
        prev = q;
    }
}
