//! Default lattices and gated sweeps shared by the `gslab` commands and the
//! acceptance suite.
//!
//! Every `run_*` function records its lattice as JSON in `command_echo`, which
//! keys the frozen baseline. Baseline gates are applied only when a baseline
//! store is supplied; a store without a matching entry fails the gate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::Baselines;
use crate::bessel::{bessel_j, classical_envelopes, Order};
use crate::error::{Error, Result};
use crate::maximal::{
    beta_probe, gate_beta, gate_sharpness, n1_crosscheck, sharpness_probe, BetaLattice, CrossCheckOptions, ProbeOptions,
};
use crate::operators::{
    cell_seed, decompose_check, gate_norm_report, norm_cells, norm_report, operator_norm, remainder_ratio_sup,
    schur_bound, BaseKernel, DiscreteOperator, Grid, IntervalFamily, NormOptions, Piece, PowerOptions, SweepGrids,
    SweepOptions,
};
use crate::oscillatory::{canonical_family, validate_vdc_hypotheses, Amplitude, PhasePair, VdcFamily};
use crate::phase::{
    bracket_integral_with, derivative_bounds_check, interior_grid, parametrized_a_range, BracketOptions, FarParams,
    NearParams, PhaseParams, Region,
};
use crate::report::{Gate, Row, SlopeFit, SweepReport, Verdict};

/// Two-sided gate on norm-sweep slopes.
pub const NORM_SLOPE_GATE: f64 = 0.1;
/// Relative tolerance for suprema against their baseline.
pub const SUP_REL: f64 = 0.02;
/// Relative tolerance for `∫|J_ν|` and Van der Corput constants.
pub const VALUE_REL: f64 = 0.01;
/// Slope gate for the remainder ratio.
pub const BARCELO_SLOPE_GATE: f64 = 0.05;
/// Flat-slope gate of the sharpness probe.
pub const FLAT_GATE: f64 = 0.1;
/// Relative tolerance of bracket suprema under grid doubling.
pub const BRACKET_REL: f64 = 0.02;

fn echo<T: Serialize>(lattice: &T) -> String {
    serde_json::to_string(lattice).expect("lattices serialize")
}

fn row(params: Vec<f64>, value: f64, verdict: Verdict) -> Row {
    Row { params, value, delta: None, verdict, error: None }
}

fn error_row(params: Vec<f64>, e: &Error, verdict: Verdict) -> Row {
    Row { params, value: f64::NAN, delta: None, verdict, error: Some(e.to_string()) }
}

fn failed_rows(rep: &SweepReport) -> usize {
    rep.rows.iter().filter(|r| r.verdict == Verdict::Fail).count()
}

/// Looks up the frozen report for `rep`; pushes a failing gate when a store
/// was given but has no entry.
fn lookup<'a>(rep: &mut SweepReport, store: Option<&'a Baselines>) -> Option<&'a SweepReport> {
    let store = store?;
    let found = store.get(&rep.command, &rep.command_echo);
    if found.is_none() {
        rep.gates.push(Gate::new("baseline", false, format!("no frozen baseline for {}", rep.command)));
    }
    found
}

/// Orders `ν = lo, 2lo, 4lo, …` up to `hi`.
pub fn dyadic_orders(lo: f64, hi: f64) -> Vec<Order> {
    let mut v = Vec::new();
    let mut x = lo;
    while x <= hi * (1.0 + 1e-12) {
        v.push(Order::from_two_nu((2.0 * x).round() as u32));
        x *= 2.0;
    }
    v
}

/// Marks each row `Pass`/`Fail` by its relative distance to the baseline row
/// with equal parameters; a gate summarizes.
pub fn gate_rows_against(rep: &mut SweepReport, name: &str, baseline: &SweepReport, rel: f64) {
    let mut ok = true;
    let mut missing = 0;
    let mut worst = 0.0f64;
    for r in rep.rows.iter_mut().filter(|r| r.verdict != Verdict::Error) {
        match baseline.rows.iter().find(|b| b.params == r.params) {
            Some(b) => {
                let d = r.value - b.value;
                let scale = b.value.abs().max(1e-300);
                let pass = d.abs() <= rel * scale;
                worst = worst.max(d.abs() / scale);
                r.delta = Some(d);
                r.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
                ok &= pass;
            }
            None => missing += 1,
        }
    }
    rep.gates.push(Gate::new(
        name,
        ok && missing == 0,
        format!("worst relative drift {worst:.3e} (tolerance {rel}), {missing} rows without baseline"),
    ));
}

/// Fills `delta` with the drift from the baseline row of the same parameters
/// where no other delta was recorded, and returns the largest relative drift.
pub fn record_drift(rep: &mut SweepReport, baseline: &SweepReport) -> f64 {
    let mut worst = 0.0f64;
    for r in rep.rows.iter_mut().filter(|r| r.value.is_finite()) {
        if let Some(b) = baseline.rows.iter().find(|b| b.params == r.params && b.value.is_finite()) {
            let d = r.value - b.value;
            worst = worst.max(d.abs() / b.value.abs().max(1e-300));
            r.delta.get_or_insert(d);
        }
    }
    worst
}

/// Closed forms of `J_{1/2}`, `J_{3/2}`, `J_{5/2}` on equispaced points of
/// `[0.1, 100]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselLattice {
    pub points: usize,
    pub tol: f64,
}

impl Default for BesselLattice {
    fn default() -> Self {
        BesselLattice { points: 10_000, tol: 1e-12 }
    }
}

/// `J_{k+1/2}(x)` for `k ∈ {0, 1, 2}`.
pub fn half_integer_closed_form(k: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let pre = (2.0 / (PI * x)).sqrt();
    match k {
        0 => pre * s,
        1 => pre * (s / x - c),
        _ => pre * ((3.0 / (x * x) - 1.0) * s - 3.0 * c / x),
    }
}

pub fn run_bessel(lat: &BesselLattice) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.bessel", &["two_nu"]);
    rep.command_echo = echo(lat);
    let n = lat.points.max(2);
    let mut worst = [0.0f64; 3];
    for i in 0..n {
        let x = 0.1 + 99.9 * i as f64 / (n - 1) as f64;
        for (k, w) in worst.iter_mut().enumerate() {
            let got = bessel_j(Order::from_two_nu(2 * k as u32 + 1), x)?.value;
            *w = w.max((got - half_integer_closed_form(k, x)).abs());
        }
    }
    for (k, w) in worst.iter().enumerate() {
        rep.rows.push(row(vec![(2 * k + 1) as f64], *w, if *w <= lat.tol { Verdict::Pass } else { Verdict::Fail }));
    }
    rep.summary.sup = rep.row_sup();
    let sup = rep.summary.sup.unwrap_or(f64::NAN);
    rep.gates.push(Gate::new("closed_forms", failed_rows(&rep) == 0, format!("max abs error {sup:.3e} (tolerance {:e})", lat.tol)));
    Ok(rep)
}

/// Remainder `h_ν = J_ν − J_ν^B` against its envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarceloLattice {
    pub nu: Vec<Order>,
    /// Log-spaced radii per order.
    pub points: usize,
}

impl Default for BarceloLattice {
    fn default() -> Self {
        BarceloLattice { nu: [4, 16, 64, 256].map(Order::from_two_nu).to_vec(), points: 400 }
    }
}

/// Log-spaced radii in `(ν + ν^{1/3}, 64ν]`.
pub fn barcelo_radii(nu: f64, points: usize) -> Vec<f64> {
    let lo = nu + nu.cbrt();
    let hi = 64.0 * nu;
    (1..=points).map(|k| lo * (hi / lo).powf(k as f64 / points as f64)).collect()
}

pub fn run_barcelo(lat: &BarceloLattice, store: Option<&Baselines>) -> Result<SweepReport> {
    let mut rep = SweepReport::new("sweep.barcelo", &["nu"]);
    rep.command_echo = echo(lat);
    for &nu in &lat.nu {
        if nu.value() < 1.0 {
            rep.rows.push(error_row(vec![nu.value()], &Error::Domain("the expansion needs ν ≥ 1".into()), Verdict::Error));
            continue;
        }
        let ratio = remainder_ratio_sup(nu, &barcelo_radii(nu.value(), lat.points));
        rep.rows.push(row(vec![nu.value()], ratio, Verdict::Info));
    }
    rep.summary.sup = rep.row_sup();
    let pts: Vec<(f64, f64)> =
        rep.rows.iter().filter(|r| r.verdict != Verdict::Error).map(|r| (r.params[0], r.value)).collect();
    let fit = SlopeFit::log_log(&pts);
    rep.summary.slope_fits.insert("ratio".into(), fit);
    rep.gates.push(match fit.slope {
        Some(s) => Gate::new("ratio.slope", s <= BARCELO_SLOPE_GATE, format!("log-log slope {s:.4} (gate ≤ {BARCELO_SLOPE_GATE})")),
        None => Gate::new("ratio.slope", false, "slope undefined"),
    });
    if let Some(b) = lookup(&mut rep, store) {
        let mut ok = true;
        for r in rep.rows.iter_mut().filter(|r| r.verdict != Verdict::Error) {
            let frozen = b.rows.iter().find(|x| x.params == r.params).map(|x| x.value);
            let pass = frozen.is_some_and(|f| r.value <= f * (1.0 + 1e-9));
            r.delta = frozen.map(|f| r.value - f);
            r.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
            ok &= pass;
        }
        rep.gates.push(Gate::new("ratio.baseline", ok, "each ratio at most its frozen value"));
    }
    Ok(rep)
}

/// Classical envelopes and `∫_0^ν |J_ν|` per order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeLattice {
    pub nu: Vec<Order>,
}

impl Default for EnvelopeLattice {
    fn default() -> Self {
        EnvelopeLattice { nu: (1..=256).map(|k| Order::from_two_nu(2 * k)).collect() }
    }
}

pub fn run_envelopes(lat: &EnvelopeLattice, store: Option<&Baselines>) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.envelopes", &["nu"]);
    rep.command_echo = echo(lat);
    let res: Vec<_> = lat.nu.par_iter().map(|&nu| classical_envelopes(nu)).collect();
    let (mut small, mut trans) = (true, true);
    let (mut turning, mut transition) = (0.0f64, 0.0f64);
    for (&nu, r) in lat.nu.iter().zip(res) {
        match r {
            Ok(e) => {
                small &= e.small_arg_ok;
                trans &= e.transition_ok;
                turning = turning.max(e.turning_constant);
                transition = transition.max(e.transition_constant);
                rep.rows.push(row(vec![nu.value()], e.l1_value, Verdict::Info));
            }
            Err(e) => rep.rows.push(error_row(vec![nu.value()], &e, Verdict::Fail)),
        }
    }
    rep.summary.sup = rep.row_sup();
    rep.summary.metrics.insert("turning_constant".into(), turning);
    rep.summary.metrics.insert("transition_constant".into(), transition);
    rep.gates.push(Gate::new("small_argument", small, "J_ν(t) ≤ t^ν/(2^ν Γ(ν+1)) on [0, ν/2]"));
    rep.gates.push(Gate::new(
        "transition",
        trans,
        format!("turning constant {turning:.4}, transition constant {transition:.4} within frozen values"),
    ));
    if let Some(b) = lookup(&mut rep, store) {
        gate_rows_against(&mut rep, "l1.baseline", b, VALUE_REL);
    }
    Ok(rep)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct VdcLattice {
    family: String,
}

/// A phase whose derivative has an interior minimum, which the validator
/// must reject.
pub fn nonmonotone_witness() -> Result<PhasePair<'static>> {
    PhasePair::new(|u: f64| u * u * u / 3.0 - u * u + 2.0 * u, |u: f64| u * u - 2.0 * u + 2.0, |_| 1.0, 0.0, 3.0)
}

/// Van der Corput constants over the canonical family.
pub fn run_vdc(store: Option<&Baselines>) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.oscillatory", &["k", "scale", "amplitude", "a", "b"]);
    rep.command_echo = echo(&VdcLattice { family: "canonical".into() });
    let cases = canonical_family();
    let measured: Vec<_> = cases.par_iter().map(|c| c.measure()).collect();
    let mut fam = VdcFamily::default();
    for (c, m) in cases.iter().zip(measured) {
        let amp = Amplitude::ALL.iter().position(|a| *a == c.amplitude).unwrap_or(0);
        let params = vec![c.k as f64, c.scale, amp as f64, c.a, c.b];
        match m {
            Ok(r) => {
                fam.record(&r);
                rep.rows.push(row(params, r.empirical_c, Verdict::Info));
            }
            Err(e) => rep.rows.push(error_row(params, &e, Verdict::Fail)),
        }
    }
    rep.summary.sup = Some(fam.sup);
    rep.summary.metrics.insert("empirical_C".into(), fam.sup);
    rep.gates.push(Gate::new(
        "finite",
        fam.sup.is_finite() && fam.count == cases.len(),
        format!("sup empirical_C {:.6} over {} cases", fam.sup, fam.count),
    ));
    let rejected = validate_vdc_hypotheses(&nonmonotone_witness()?, 0.5).is_err();
    rep.gates.push(Gate::new("rejects_nonmonotone", rejected, "validator on φ′(u) = u² − 2u + 2 over [0, 3]"));
    if let Some(b) = lookup(&mut rep, store) {
        gate_rows_against(&mut rep, "empirical_C.baseline", b, VALUE_REL);
    }
    Ok(rep)
}

/// Seeded random time field with values in `[0, t_max]`.
pub fn random_t_field(n: usize, t_max: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..=t_max)).collect()
}

/// Grids covering every piece's support: `s ∈ [ν/2, 4ν]`.
pub fn piece_grids(nu: f64, rows: usize, panel: f64, order: usize) -> (Grid, Grid) {
    (Grid::s_panels(0.5 * nu, 4.0 * nu, panel, order), Grid::r_uniform(rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionLattice {
    pub nu: Vec<Order>,
    pub seed: u64,
    pub tol: f64,
}

impl Default for DecompositionLattice {
    fn default() -> Self {
        DecompositionLattice { nu: [2, 8, 32, 128, 512].map(Order::from_two_nu).to_vec(), seed: 0x5eed, tol: 1e-12 }
    }
}

/// Full kernel against the sum of the six pieces with random time fields.
pub fn run_decomposition(lat: &DecompositionLattice) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.decomposition", &["nu"]);
    rep.command_echo = echo(lat);
    let res: Vec<Result<f64>> = lat
        .nu
        .par_iter()
        .enumerate()
        .map(|(k, &nu)| {
            let v = nu.value();
            let (s, r) = piece_grids(v, 64, 0.5, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(lat.seed, k as u64));
            let t = random_t_field(r.len(), 1.0 / v, &mut rng);
            decompose_check(nu, &s, &r, &t, 0.25)
        })
        .collect();
    for (&nu, r) in lat.nu.iter().zip(res) {
        match r {
            Ok(d) => rep.rows.push(row(vec![nu.value()], d, if d <= lat.tol { Verdict::Pass } else { Verdict::Fail })),
            Err(e) => rep.rows.push(error_row(vec![nu.value()], &e, Verdict::Fail)),
        }
    }
    rep.summary.sup = rep.row_sup();
    let sup = rep.summary.sup.unwrap_or(f64::NAN);
    rep.gates.push(Gate::new("identity", failed_rows(&rep) == 0, format!("worst scaled gap {sup:.3e} (tolerance {:e})", lat.tol)));
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurLattice {
    pub random: usize,
    pub size: usize,
    pub nu: Vec<Order>,
    pub seed: u64,
}

impl Default for SchurLattice {
    fn default() -> Self {
        SchurLattice { random: 100, size: 16, nu: [8, 64].map(Order::from_two_nu).to_vec(), seed: 0x5c40 }
    }
}

/// Seeded complex matrix with entries uniform in the unit square.
pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..rows * cols).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// The kernels of the Schur check, tagged `(kind, index, ν)`: random kernels
/// (kind 0) and every piece (kind 1, index into [`Piece::ALL`]).
pub fn schur_operators(lat: &SchurLattice) -> Result<Vec<([f64; 3], DiscreteOperator)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(lat.seed);
    let mut ops: Vec<([f64; 3], DiscreteOperator)> = Vec::new();
    for k in 0..lat.random {
        let m = random_matrix(lat.size, lat.size, &mut rng);
        ops.push(([0.0, k as f64, 0.0], DiscreteOperator::from_matrix(lat.size, lat.size, m)?));
    }
    for &nu in &lat.nu {
        let v = nu.value();
        let (s, r) = piece_grids(v, 48, 1.0, 4);
        let t = random_t_field(r.len(), 1.0 / v, &mut rng);
        let full = BaseKernel::new(Piece::Full, nu, 0.25, &s, &r);
        for (pi, p) in Piece::ALL.iter().enumerate() {
            if p.uses_barcelo() && v < 1.0 {
                continue;
            }
            let base = if *p == Piece::Full { full.clone() } else { BaseKernel::piece_from_full(&full, *p) };
            ops.push(([1.0, pi as f64, v], base.with_time(&t)?));
        }
    }
    Ok(ops)
}

/// `‖K‖²` (power iteration to `1e−13`) against the Schur bound on every
/// kernel of [`schur_operators`].
pub fn run_schur(lat: &SchurLattice) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.schur", &["kind", "index", "nu", "norm_sqr"]);
    rep.command_echo = echo(lat);
    let opts = PowerOptions { tol: 1e-13, max_iter: 5000, restarts: 3 };
    let ops = schur_operators(lat)?;
    let seed = lat.seed;
    rep.rows = ops
        .par_iter()
        .enumerate()
        .map(|(k, (p, op))| {
            let n2 = operator_norm(op, &opts, cell_seed(seed, k as u64)).sigma.powi(2);
            let b = schur_bound(op);
            row(vec![p[0], p[1], p[2], n2], b, if n2 <= b { Verdict::Pass } else { Verdict::Fail })
        })
        .collect();
    let failed = failed_rows(&rep);
    rep.gates.push(Gate::new("schur", failed == 0, format!("{failed} of {} kernels violate ‖K‖² ≤ bound", rep.rows.len())));
    Ok(rep)
}

/// Near and far phase cells for the derivative-bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLattice {
    pub near_nu: Vec<Order>,
    pub eta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub far_sigma: Vec<f64>,
    pub far_p: Vec<f64>,
    /// `γ` values used when `σ ≥ 1`.
    pub far_gamma_large: Vec<f64>,
    /// `γ` values used when `σ < 1`.
    pub far_gamma_small: Vec<f64>,
    pub points: usize,
}

impl Default for PhaseLattice {
    fn default() -> Self {
        PhaseLattice {
            near_nu: [4, 16, 64, 256, 1024, 4096].map(Order::from_two_nu).to_vec(),
            eta: vec![0.1, 0.25, 0.5, 1.0, 2.0],
            gamma: vec![0.0, 1.0 / 6.0, 1.0 / 3.0],
            far_sigma: vec![0.25, 0.5, 2.0, 8.0, 32.0],
            far_p: vec![0.1, 1.0, 10.0],
            far_gamma_large: vec![1.0, 1.25, 1.5],
            far_gamma_small: vec![-0.5, 0.0, 0.5, 1.0],
            points: 256,
        }
    }
}

impl PhaseLattice {
    pub fn cells(&self) -> Result<Vec<PhaseParams>> {
        let mut v = Vec::new();
        for &nu in &self.near_nu {
            for &eta in &self.eta {
                for &gamma in &self.gamma {
                    v.push(PhaseParams::Near(NearParams::new(nu, eta, gamma)?));
                }
            }
        }
        for &sigma in &self.far_sigma {
            let gammas = if sigma >= 1.0 { &self.far_gamma_large } else { &self.far_gamma_small };
            for &p in &self.far_p {
                for &gamma in gammas {
                    v.push(PhaseParams::Far(FarParams::new(p, sigma, gamma)?));
                }
            }
        }
        Ok(v)
    }
}

/// `(mode, ν or σ, η or p, γ)` with mode 0 near and 1 far.
pub fn phase_params_row(p: &PhaseParams) -> Vec<f64> {
    match p {
        PhaseParams::Near(n) => vec![0.0, n.nu_f(), n.eta, n.gamma],
        PhaseParams::Far(f) => vec![1.0, f.sigma, f.p, f.gamma],
    }
}

/// Interior grid of the cell's domain; the far domain is cut at
/// `u₀ + 2(u₀ − 2σ) + 4`. `None` when the domain is empty.
pub fn phase_u_grid(p: &PhaseParams, points: usize) -> Option<Vec<f64>> {
    let (lo, hi) = p.domain();
    let hi = if hi.is_finite() { hi } else { p.u0() + 2.0 * (p.u0() - lo) + 4.0 };
    (lo < hi).then(|| interior_grid(lo, hi, points))
}

/// Derivative lower bounds, near-mode sign hypotheses and stationary
/// residuals on every cell. With a store, the largest `|f″(u₀)|` constant is
/// gated against its frozen value.
pub fn run_phase(lat: &PhaseLattice, store: Option<&Baselines>) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.phase", &["mode", "nu_or_sigma", "eta_or_p", "gamma"]);
    rep.command_echo = echo(lat);
    let cells = lat.cells()?;
    let results: Vec<_> =
        cells.par_iter().map(|p| phase_u_grid(p, lat.points).map(|g| derivative_bounds_check(p, &g))).collect();
    let (mut residual, mut f2c) = (0.0f64, 0.0f64);
    let mut empty = 0;
    for (p, r) in cells.iter().zip(results) {
        let params = phase_params_row(p);
        match r {
            None => {
                empty += 1;
                rep.rows.push(row(params, f64::NAN, Verdict::Info));
            }
            Some(Ok(b)) => {
                residual = residual.max(b.stationary_residual);
                f2c = f2c.max(b.f2_constant.unwrap_or(0.0));
                let slack = b.min_slack.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
                let ok = b.holds && b.stationary_residual <= 1e-10;
                rep.rows.push(row(params, slack, if ok { Verdict::Pass } else { Verdict::Fail }));
            }
            Some(Err(e)) => rep.rows.push(error_row(params, &e, Verdict::Fail)),
        }
    }
    rep.summary.metrics.insert("stationary_residual".into(), residual);
    rep.summary.metrics.insert("f2_constant".into(), f2c);
    rep.summary.metrics.insert("empty_cells".into(), empty as f64);
    let failed = failed_rows(&rep);
    rep.gates.push(Gate::new(
        "phase_bounds",
        failed == 0,
        format!("{failed} failing cells of {}, worst stationary residual {residual:.3e}", rep.rows.len() - empty),
    ));
    if let Some(b) = lookup(&mut rep, store) {
        let frozen = b.summary.metrics.get("f2_constant").copied().unwrap_or(f64::NAN);
        rep.gates.push(Gate::new(
            "f2_constant",
            f2c <= frozen * (1.0 + 1e-9),
            format!("max |f″(u₀)| ν^(η−3γ/2−ξ) = {f2c:.6} vs frozen {frozen:.6}"),
        ));
    }
    Ok(rep)
}

/// Cells of the bracket sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketLattice {
    /// `(ν, η, γ)`.
    pub near: Vec<(Order, f64, f64)>,
    /// `(p, σ, γ)`.
    pub far: Vec<(f64, f64, f64)>,
    /// Values of `a` spread over the parametrized range, besides `a(γ)`.
    pub a_points: usize,
}

impl Default for BracketLattice {
    fn default() -> Self {
        BracketLattice {
            near: vec![
                (Order::from_two_nu(128), 0.5, 0.1),
                (Order::from_two_nu(512), 0.3, 0.2),
                (Order::from_two_nu(2048), 0.2, 1.0 / 3.0),
                (Order::from_two_nu(128), 1.0, 1.0 / 3.0),
            ],
            far: vec![(1.0, 4.0, 1.0), (0.5, 3.0, 1.2), (2.0, 0.5, 0.5), (1.0, 0.5, -0.5)],
            a_points: 7,
        }
    }
}

impl BracketLattice {
    pub fn cells(&self) -> Result<Vec<PhaseParams>> {
        let mut v = Vec::new();
        for &(nu, eta, gamma) in &self.near {
            v.push(PhaseParams::Near(NearParams::new(nu, eta, gamma)?));
        }
        for &(p, sigma, gamma) in &self.far {
            v.push(PhaseParams::Far(FarParams::new(p, sigma, gamma)?));
        }
        Ok(v)
    }
}

/// `a(γ)` followed by an even spread over the parametrized range.
pub fn bracket_a_values(p: &PhaseParams, n: usize) -> Vec<f64> {
    let mut v = vec![p.a_of_gamma()];
    if let Some((a0, a1)) = parametrized_a_range(p) {
        v.extend(interior_grid(a0.min(a1), a0.max(a1), n));
    }
    v
}

fn bracket_sup(p: &PhaseParams, a_values: &[f64], opts: &BracketOptions) -> Result<f64> {
    let mut sup = 0.0f64;
    for &a in a_values {
        sup = sup.max(bracket_integral_with(p, a, None, opts)?.magnitude);
    }
    Ok(sup)
}

/// Per cell, the supremum over `a` of the bracketed integral and its change
/// under [`BracketOptions::refined`]. The last parameter is the region:
/// 0 for ℱ, 1 for 𝒢, 2 for far.
pub fn run_bracket(lat: &BracketLattice) -> Result<SweepReport> {
    let mut rep = SweepReport::new("sweep.bracket", &["mode", "nu_or_sigma", "eta_or_p", "gamma", "region"]);
    rep.command_echo = echo(lat);
    let cells = lat.cells()?;
    let res: Vec<Result<(f64, f64)>> = cells
        .par_iter()
        .map(|p| {
            let a = bracket_a_values(p, lat.a_points);
            let opts = BracketOptions::default();
            Ok((bracket_sup(p, &a, &opts)?, bracket_sup(p, &a, &opts.refined())?))
        })
        .collect();
    for (p, r) in cells.iter().zip(res) {
        let mut params = phase_params_row(p);
        params.push(match p {
            PhaseParams::Near(n) if n.region() == Region::F => 0.0,
            PhaseParams::Near(_) => 1.0,
            PhaseParams::Far(_) => 2.0,
        });
        match r {
            Ok((coarse, fine)) => {
                let stable = coarse.is_finite() && (coarse - fine).abs() <= BRACKET_REL * fine.abs();
                rep.rows.push(Row {
                    params,
                    value: coarse,
                    delta: Some(fine - coarse),
                    verdict: if stable { Verdict::Pass } else { Verdict::Fail },
                    error: None,
                });
            }
            Err(e) => rep.rows.push(error_row(params, &e, Verdict::Fail)),
        }
    }
    rep.summary.sup = rep.row_sup();
    let failed = failed_rows(&rep);
    rep.gates.push(Gate::new(
        "bracket_stable",
        failed == 0,
        format!("{failed} of {} cells infinite or moved more than {BRACKET_REL} under doubling", rep.rows.len()),
    ));
    Ok(rep)
}

/// Grids sized for a desk-scale run of the norm sweep.
pub fn desk_grids() -> SweepGrids {
    SweepGrids { r_points: 128, r_per_s: 0.5, r_max: 1024, s_order: 6, t_points: 65 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormLattice {
    pub pieces: Vec<Piece>,
    pub alpha: f64,
    pub nu: Vec<Order>,
    pub family: IntervalFamily,
    pub options: SweepOptions,
}

impl Default for NormLattice {
    fn default() -> Self {
        NormLattice {
            pieces: Piece::ALL.to_vec(),
            alpha: 0.25,
            nu: dyadic_orders(0.5, 256.0),
            family: IntervalFamily::default(),
            options: SweepOptions { grids: desk_grids(), norm: NormOptions::default(), refine: false },
        }
    }
}

/// Norm lower bounds for every requested piece, as one report whose first
/// parameter indexes [`Piece::ALL`]. Slope fits and `sup.<piece>` metrics are
/// per piece; each piece is gated on its slope and, with a store, on its
/// supremum.
pub fn run_norms(lat: &NormLattice, store: Option<&Baselines>) -> Result<SweepReport> {
    let cells = norm_cells(&lat.pieces, lat.alpha, &lat.nu, &lat.family, &lat.options)?;
    let mut rep = SweepReport::new("sweep.norms", &["piece", "nu", "alpha", "i_lo", "i_hi"]);
    rep.command_echo = echo(lat);
    let mut per_piece = Vec::new();
    for &piece in &lat.pieces {
        let idx = Piece::ALL.iter().position(|p| *p == piece).unwrap_or(0) as f64;
        let mut sub = norm_report(piece, lat.alpha, &cells);
        gate_norm_report(&mut sub, piece, NORM_SLOPE_GATE, None, SUP_REL);
        for mut r in sub.rows {
            r.params.insert(0, idx);
            rep.rows.push(r);
        }
        rep.summary.slope_fits.extend(sub.summary.slope_fits);
        if let Some(s) = sub.summary.sup {
            rep.summary.metrics.insert(format!("sup.{piece}"), s);
        }
        rep.gates.extend(sub.gates);
        per_piece.push((piece, sub.summary.sup));
    }
    rep.summary.sup = rep.row_sup();
    if let Some(b) = lookup(&mut rep, store) {
        for (piece, sup) in per_piece {
            let frozen = b.summary.metrics.get(&format!("sup.{piece}")).copied();
            let (ok, detail) = match (sup, frozen) {
                (Some(s), Some(f)) => ((s - f).abs() <= SUP_REL * f, format!("sup {s:.6} vs baseline {f:.6}")),
                _ => (false, "sup or baseline missing".to_string()),
            };
            rep.gates.push(Gate::new(format!("{piece}.sup"), ok, detail));
        }
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessLattice {
    pub alpha: Vec<f64>,
    pub m: Vec<f64>,
    pub nu: Order,
    /// Exponents expected to give a flat slope.
    pub flat: Vec<f64>,
    /// Exponents expected to grow.
    pub growing: Vec<f64>,
    pub options: ProbeOptions,
}

impl Default for SharpnessLattice {
    fn default() -> Self {
        SharpnessLattice {
            alpha: vec![0.125, 0.25],
            m: vec![64.0, 128.0, 256.0, 512.0],
            nu: Order::from_two_nu(1),
            flat: vec![0.25],
            growing: vec![0.125],
            options: ProbeOptions { grids: desk_grids(), norm: NormOptions::default() },
        }
    }
}

pub fn run_sharpness(lat: &SharpnessLattice, store: Option<&Baselines>) -> Result<SweepReport> {
    let mut rep = sharpness_probe(&lat.alpha, &lat.m, lat.nu, &lat.options)?;
    rep.command_echo = echo(lat);
    gate_sharpness(&mut rep, &lat.flat, &lat.growing, FLAT_GATE);
    if let Some(b) = lookup(&mut rep, store) {
        gate_rows_against(&mut rep, "rows.baseline", b, SUP_REL);
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaProbeLattice {
    pub beta: Vec<f64>,
    pub nu: Vec<Order>,
    pub growing: Vec<f64>,
    pub bounded: Vec<f64>,
    pub lattice: BetaLattice,
}

impl Default for BetaProbeLattice {
    fn default() -> Self {
        BetaProbeLattice {
            beta: vec![0.1, 1.0 / 6.0, 0.5],
            nu: dyadic_orders(1.0, 256.0),
            growing: vec![0.1],
            bounded: vec![0.5],
            lattice: BetaLattice::default(),
        }
    }
}

fn beta_sup(rep: &SweepReport, beta: f64) -> f64 {
    rep.rows.iter().filter(|r| r.params[0] == beta).map(|r| r.value).fold(f64::NAN, f64::max)
}

/// β probe gated on growth at `growing` exponents and on bounded suprema at
/// `bounded` exponents; without a store the supremum is compared with itself,
/// so only the slope sign is checked.
pub fn run_beta(lat: &BetaProbeLattice, store: Option<&Baselines>) -> Result<SweepReport> {
    let mut rep = beta_probe(&lat.beta, &lat.lattice, &lat.nu)?;
    rep.command_echo = echo(lat);
    let frozen = lookup(&mut rep, store).cloned();
    let source = frozen.as_ref().unwrap_or(&rep);
    let bounded: Vec<(f64, f64)> = lat.bounded.iter().map(|&b| (b, beta_sup(source, b))).collect();
    gate_beta(&mut rep, &lat.growing, &bounded, SUP_REL);
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckLattice {
    pub times: Vec<f64>,
    pub r_points: usize,
    pub tol: f64,
}

impl Default for CrosscheckLattice {
    fn default() -> Self {
        CrosscheckLattice { times: vec![0.0, 0.01, 0.05], r_points: 128, tol: 1e-6 }
    }
}

/// `g(s) = s e^{−πs²}`.
pub fn gaussian_datum(s: f64) -> Complex64 {
    Complex64::new(s * (-PI * s * s).exp(), 0.0)
}

/// Radial evolution against the one-dimensional Schrödinger group on the
/// Gaussian datum.
pub fn run_crosscheck(lat: &CrosscheckLattice) -> Result<SweepReport> {
    let mut rep = SweepReport::new("check.maximal", &["t"]);
    rep.command_echo = echo(lat);
    let r = Grid::r_uniform(lat.r_points);
    for &t in &lat.times {
        match n1_crosscheck(gaussian_datum, (0.0, 6.0), t, &r, &CrossCheckOptions::default()) {
            Ok(d) => rep.rows.push(row(vec![t], d, if d <= lat.tol { Verdict::Pass } else { Verdict::Fail })),
            Err(e) => rep.rows.push(error_row(vec![t], &e, Verdict::Fail)),
        }
    }
    rep.summary.sup = rep.row_sup();
    let sup = rep.summary.sup.unwrap_or(f64::NAN);
    rep.gates.push(Gate::new("n1_crosscheck", failed_rows(&rep) == 0, format!("max deviation {sup:.3e} (tolerance {:e})", lat.tol)));
    Ok(rep)
}

/// Runs every sweep that has a frozen baseline on its default lattice.
pub fn freeze_defaults() -> Result<Baselines> {
    let mut b = Baselines::default();
    b.insert(&run_barcelo(&BarceloLattice::default(), None)?);
    b.insert(&run_envelopes(&EnvelopeLattice::default(), None)?);
    b.insert(&run_vdc(None)?);
    b.insert(&run_phase(&PhaseLattice::default(), None)?);
    b.insert(&run_norms(&NormLattice::default(), None)?);
    b.insert(&run_sharpness(&SharpnessLattice::default(), None)?);
    b.insert(&run_beta(&BetaProbeLattice::default(), None)?);
    Ok(b)
}
