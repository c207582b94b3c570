use gslab::bessel::Order;
use gslab::frozen::REMAINDER_SQUARE_CONSTANT;
use gslab::operators::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn svd_sigma(op: &DiscreteOperator) -> f64 {
    let n = op.normalized();
    let m = DMatrix::from_row_slice(n.rows, n.cols, &n.a);
    m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b))
}

fn tight() -> PowerOptions {
    PowerOptions { tol: 1e-14, max_iter: 20000, restarts: 2 }
}

#[test]
fn rank_one_kernel_matches_svd() {
    let r = Grid::r_uniform(24);
    let s = Grid::s_panels(0.5, 3.0, 0.5, 6);
    let f = |r: f64| (1.0 + r * r).recip();
    let g = |s: f64| (-(s - 1.5) * (s - 1.5)).exp();
    let mut m = Vec::new();
    for &rj in &r.nodes {
        for (&si, &wi) in s.nodes.iter().zip(&s.weights) {
            m.push(Complex64::new(f(rj) * g(si) * wi, 0.0));
        }
    }
    let op = DiscreteOperator { rows: r.len(), cols: s.len(), matrix: m, s_grid: s.clone(), r_grid: r.clone() };
    // ‖f‖_{ℓ²(ρ)} ‖g‖_{ℓ²(w)} in closed form for a rank-one kernel
    let fr: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| f(*x).powi(2) * w).sum::<f64>().sqrt();
    let gs: f64 = s.nodes.iter().zip(&s.weights).map(|(x, w)| g(*x).powi(2) * w).sum::<f64>().sqrt();
    let p = operator_norm(&op, &tight(), 7).sigma;
    let svd = svd_sigma(&op);
    assert!((p - svd).abs() < 1e-8 * svd, "{p} vs {svd}");
    assert!((svd - fr * gs).abs() < 1e-10 * svd);
}

#[test]
fn t1_lower_bound_below_svd() {
    let spec = KernelSpec::new(Piece::T1, Order::from_two_nu(2), (0.0, 2.0), 0.25);
    let s = Grid::s_panels(0.0, 2.0, 0.25, 8);
    let r = Grid::r_uniform(64);
    let opts = NormOptions { rounds: 1, focus_seeds: 0, power: tight(), ..Default::default() };
    let est = op_norm_lower(&spec, &s, &r, &[0.0], &opts).unwrap();
    let svd = svd_sigma(&build_kernel(&spec, &s, &r).unwrap());
    assert!(est.lower_bound <= svd * (1.0 + 1e-12), "{} > {svd}", est.lower_bound);
    assert!(est.lower_bound >= svd * (1.0 - 1e-6));
}

#[test]
fn global_time_shift_leaves_norm_unchanged() {
    let nu = Order::from_two_nu(3);
    let mut spec = KernelSpec::new(Piece::Full, nu, (0.5, 4.0), 0.25);
    let s = Grid::s_panels(0.5, 4.0, 0.125, 8);
    let r = Grid::r_uniform(48);
    spec.t_field = r.nodes.iter().map(|x| x / 3.0).collect();
    let opts = NormOptions { rounds: 1, focus_seeds: 0, power: tight(), ..Default::default() };
    let a = op_norm_lower(&spec, &s, &r, &[0.0], &opts).unwrap().lower_bound;
    spec.t_field.iter_mut().for_each(|t| *t += 0.37);
    let b = op_norm_lower(&spec, &s, &r, &[0.37], &opts).unwrap().lower_bound;
    assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
}

#[test]
fn t4_entry_off_support_is_zero() {
    let spec = KernelSpec::new(Piece::T4, Order::from_two_nu(32), (19.0, 21.0), 0.25);
    let s = Grid::new(vec![20.0], vec![1.0]).unwrap();
    let r = Grid::new(vec![0.9], vec![1.0]).unwrap();
    assert_eq!(build_kernel(&spec, &s, &r).unwrap().entry(0, 0), Complex64::new(0.0, 0.0));
}

#[test]
fn more_rounds_and_refinement_never_lower() {
    let nu = Order::from_two_nu(8);
    let (s, r, t) = SweepGrids { r_points: 48, r_per_s: 0.5, r_max: 64, s_order: 6, t_points: 17 }.build((4.0, 8.0));
    let spec = KernelSpec::new(Piece::Full, nu, (4.0, 8.0), 0.25);
    let one = op_norm_lower(&spec, &s, &r, &t, &NormOptions { rounds: 1, ..Default::default() }).unwrap();
    let four = op_norm_lower(&spec, &s, &r, &t, &NormOptions { rounds: 4, ..Default::default() }).unwrap();
    assert!(four.lower_bound >= one.lower_bound, "{} < {}", four.lower_bound, one.lower_bound);
    assert!(four.history.windows(2).all(|w| w[1] >= w[0]));

    let base = BaseKernel::new(Piece::Full, nu, 0.25, &s, &r);
    let t_fine = default_t_grid(t[t.len() - 1], 2 * t.len() - 1);
    let fine = op_norm_refine(&base, &four, &t_fine, &NormOptions::default()).unwrap();
    assert!(fine.lower_bound >= four.lower_bound);
}

#[test]
fn tt_star_kernels_below_majorants() {
    for (piece, nu) in [(Piece::T4, 8u32), (Piece::T5, 16), (Piece::T6, 8), (Piece::T6, 32)] {
        let order = Order::from_two_nu(nu);
        let interval = (0.5, 8.0 * nu as f64);
        for (r, rho) in [(1.0, 0.5), (0.75, 0.25), (0.5, 0.375)] {
            for dt in [0.0, 0.05] {
                let p = tt_star_probe(piece, order, r, rho, dt, 0.0, interval).unwrap();
                assert!(!p.skipped);
                assert!(p.k_mag <= p.bound, "{piece} 2ν={nu} r={r} ρ={rho}: {} > {}", p.k_mag, p.bound);
            }
        }
        assert!(tt_star_probe(piece, order, 0.5, 0.5 + 1e-4, 0.0, 0.0, interval).unwrap().skipped);
    }
}

#[test]
fn remainder_square_amplitude_within_frozen_constant() {
    for tn in [4u32, 16, 64, 256, 1024, 4096] {
        let c = remainder_square_ratio(Order::from_two_nu(tn), 2000);
        assert!(c <= REMAINDER_SQUARE_CONSTANT, "2ν={tn}: {c}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schur_dominates_svd(
        rows in 1usize..9,
        cols in 1usize..9,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<Complex64> = (0..rows * cols).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let grid = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            Grid::new((0..n).map(|k| k as f64).collect(), (0..n).map(|_| rng.gen_range(0.1..2.0)).collect()).unwrap()
        };
        let op = DiscreteOperator { rows, cols, matrix: m, s_grid: grid(cols, &mut rng), r_grid: grid(rows, &mut rng) };
        let svd = svd_sigma(&op);
        prop_assert!(svd * svd <= schur_bound(&op) * (1.0 + 1e-12));
        let p = operator_norm(&op, &PowerOptions::default(), seed).sigma;
        prop_assert!(p <= svd * (1.0 + 1e-12));
    }
}
