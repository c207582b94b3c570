//! The radial propagator `Q_ν^t g(r) = ∫_0^∞ e^{−2πits²} J̃_ν(2πrs) g(s) ds`,
//! the maximal ratio for `∫_0^1 sup_t |Q_ν^t g|² dr ≤ C ∫ |g(s)|² s^{1/2} ds`,
//! and the probes built on them.
//!
//! # Convention bridge
//!
//! `operators` works with `T g(r) = ∫ e^{iτσ²} J̃_ν(rσ) σ^{−1/4} g(σ) dσ`.
//! Substituting `σ = 2πs`, `τ = t/(2π)` and `g_T(σ) = conj(g(s)) s^{1/4}` gives
//! `|Q_ν^t g(r)|² = (2π)^{−3/2} |T g_T(r)|²` and
//! `∫ |g|² s^{1/2} ds = ∫ |g_T|² dσ / (2π)`, so
//! `q_star_ratio = (2π)^{−1/2} ‖T‖²` on matching data. [`datum_from_operator`]
//! performs this map.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{j_tilde_value, j_value, Order};
use crate::error::{Error, Result};
use crate::operators::{
    default_t_grid, default_t_max, op_norm_lower, Grid, KernelSpec, NormOptions, Piece, SweepGrids,
};
use crate::quadrature::{composite, GaussLegendre};
use crate::report::{Gate, Row, SlopeFit, SweepReport, Verdict};

/// Samples of `g` on quadrature nodes; the weights are the quadrature used for
/// every integral of `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialDatum {
    pub s_nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub interval: (f64, f64),
}

impl RadialDatum {
    pub fn new(s_nodes: Vec<f64>, weights: Vec<f64>, values: Vec<Complex64>, interval: (f64, f64)) -> Result<Self> {
        if s_nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: s_nodes.len(), got: weights.len() });
        }
        if s_nodes.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: s_nodes.len(), got: values.len() });
        }
        if s_nodes.windows(2).any(|w| !(w[0] < w[1])) || s_nodes.first().is_some_and(|s| *s < 0.0) {
            return Err(Error::input("datum nodes must be nonnegative and strictly increasing"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::input("datum values must be finite"));
        }
        Ok(RadialDatum { s_nodes, weights, values, interval })
    }

    /// Samples `f` on Gauss–Legendre panels fine enough for `Q_ν^t` with
    /// `r ≤ r_max` and `|t| ≤ t_max`.
    pub fn from_fn<F: Fn(f64) -> Complex64>(interval: (f64, f64), r_max: f64, t_max: f64, f: F) -> Result<Self> {
        let (lo, hi) = interval;
        if !(0.0 <= lo && lo < hi && hi.is_finite()) {
            return Err(Error::input(format!("bad datum interval [{lo}, {hi}]")));
        }
        // Phase speed 2π(r + 2ts) at most; keep about a quarter turn per panel.
        let speed = 2.0 * PI * (r_max + 2.0 * t_max * hi);
        let panel = (PI / (2.0 * speed)).min(0.25);
        let (nodes, weights) = composite(lo, hi, panel, 16);
        let values = nodes.iter().map(|&s| f(s)).collect();
        RadialDatum::new(nodes, weights, values, interval)
    }

    /// Arbitrary samples with trapezoidal weights.
    pub fn from_samples(s: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if s.len() < 2 {
            return Err(Error::input("a datum needs at least two samples"));
        }
        let n = s.len();
        let mut w = vec![0.0; n];
        for k in 0..n - 1 {
            let h = s[k + 1] - s[k];
            w[k] += h / 2.0;
            w[k + 1] += h / 2.0;
        }
        let interval = (s[0], s[n - 1]);
        RadialDatum::new(s, w, values, interval)
    }

    /// Reads `s,re,im` lines; a header line is allowed.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let (mut s, mut v) = (Vec::new(), Vec::new());
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::input(format!("line {}: expected s,re,im", k + 1)));
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(x) => {
                    s.push(x[0]);
                    v.push(Complex64::new(x[1], x[2]));
                }
                Err(_) if k == 0 => continue,
                Err(e) => return Err(Error::input(format!("line {}: {e}", k + 1))),
            }
        }
        RadialDatum::from_samples(s, v)
    }

    pub fn len(&self) -> usize {
        self.s_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_nodes.is_empty()
    }

    /// `∫ |g|²`.
    pub fn l2_norm_sqr(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v.norm_sqr() * w).sum()
    }

    /// `∫ |g(s)|² s^{1/2} ds`.
    pub fn weighted_norm_sqr(&self) -> f64 {
        self.values.iter().zip(&self.weights).zip(&self.s_nodes).map(|((v, w), s)| v.norm_sqr() * w * s.sqrt()).sum()
    }

    /// `c · g`.
    pub fn scaled(&self, c: Complex64) -> Self {
        RadialDatum { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }
}

/// `Q_ν^t g(r)` by the datum's quadrature.
pub fn q_nu_t(g: &RadialDatum, nu: Order, t: f64, r: f64) -> Result<Complex64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("q_nu_t needs r > 0, got {r}")));
    }
    if !t.is_finite() {
        return Err(Error::input("t must be finite"));
    }
    Ok(g.s_nodes
        .iter()
        .zip(&g.weights)
        .zip(&g.values)
        .map(|((&s, &w), &v)| Complex64::from_polar(j_tilde_value(nu, 2.0 * PI * r * s) * w, -2.0 * PI * t * s * s) * v)
        .sum())
}

/// Options for the per-row supremum over `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupOptions {
    /// Golden-section steps around each per-row argmax; 0 keeps the pure grid maximum.
    pub refine_steps: usize,
}

impl Default for SupOptions {
    fn default() -> Self {
        SupOptions { refine_steps: 16 }
    }
}

/// Per-row maxima of `|Q_ν^t g(r_j)|` over the t-grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalRows {
    pub values: Vec<f64>,
    pub times: Vec<f64>,
}

pub fn maximal_rows(g: &RadialDatum, nu: Order, t_grid: &[f64], r_grid: &Grid, opts: &SupOptions) -> Result<MaximalRows> {
    if t_grid.is_empty() {
        return Err(Error::config("t_grid must not be empty"));
    }
    if r_grid.nodes.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::domain("r-grid must lie in (0, ∞)"));
    }
    let s2: Vec<f64> = g.s_nodes.iter().map(|s| -2.0 * PI * s * s).collect();
    let rows: Vec<(f64, f64)> = r_grid
        .nodes
        .par_iter()
        .map(|&r| {
            let c: Vec<Complex64> = g
                .s_nodes
                .iter()
                .zip(&g.weights)
                .zip(&g.values)
                .map(|((&s, &w), &v)| v * (j_tilde_value(nu, 2.0 * PI * r * s) * w))
                .collect();
            let eval = |t: f64| -> f64 { c.iter().zip(&s2).map(|(ci, p)| ci * Complex64::from_polar(1.0, t * p)).sum::<Complex64>().norm() };
            let mut best = (t_grid[0], eval(t_grid[0]));
            let mut best_k = 0;
            for (k, &t) in t_grid.iter().enumerate().skip(1) {
                let v = eval(t);
                if v > best.1 {
                    best = (t, v);
                    best_k = k;
                }
            }
            if opts.refine_steps > 0 && t_grid.len() > 1 {
                let lo = t_grid[best_k.saturating_sub(1)];
                let hi = t_grid[(best_k + 1).min(t_grid.len() - 1)];
                let (t, v) = golden_max(&eval, lo, hi, opts.refine_steps);
                if v > best.1 {
                    best = (t, v);
                }
            }
            (best.1, best.0)
        })
        .collect();
    Ok(MaximalRows { values: rows.iter().map(|r| r.0).collect(), times: rows.iter().map(|r| r.1).collect() })
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, steps: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..steps {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `Σ_j max_t |Q_ν^t g(r_j)|² ρ_j / Σ_i |g_i|² s_i^{1/2} w_i`.
pub fn q_star_ratio(g: &RadialDatum, nu: Order, t_grid: &[f64], r_grid: &Grid) -> Result<f64> {
    q_star_ratio_with(g, nu, t_grid, r_grid, &SupOptions::default())
}

pub fn q_star_ratio_with(g: &RadialDatum, nu: Order, t_grid: &[f64], r_grid: &Grid, opts: &SupOptions) -> Result<f64> {
    let den = g.weighted_norm_sqr();
    if !(den > 0.0) {
        return Err(Error::input("datum has zero weighted norm"));
    }
    let rows = maximal_rows(g, nu, t_grid, r_grid, opts)?;
    let num: f64 = rows.values.iter().zip(&r_grid.weights).map(|(v, w)| v * v * w).sum();
    Ok(num / den)
}

/// Maps an `operators` datum (`G_i = √w_i g(σ_i)` on the σ-grid) to the `Q`
/// convention, together with the matching times `t = 2πτ`.
pub fn datum_from_operator(s_grid: &Grid, datum: &[Complex64], tau: &[f64]) -> Result<(RadialDatum, Vec<f64>)> {
    if datum.len() != s_grid.len() {
        return Err(Error::DimensionMismatch { expected: s_grid.len(), got: datum.len() });
    }
    let two_pi = 2.0 * PI;
    let nodes: Vec<f64> = s_grid.nodes.iter().map(|s| s / two_pi).collect();
    let weights: Vec<f64> = s_grid.weights.iter().map(|w| w / two_pi).collect();
    let values: Vec<Complex64> = datum
        .iter()
        .zip(&s_grid.weights)
        .zip(&nodes)
        .map(|((g, w), s)| (g / w.sqrt()).conj() * s.powf(-0.25))
        .collect();
    let interval = (nodes.first().copied().unwrap_or(0.0), nodes.last().copied().unwrap_or(0.0));
    let times = tau.iter().map(|t| two_pi * t).collect();
    Ok((RadialDatum::new(nodes, weights, values, interval)?, times))
}

/// Options for the one-dimensional cross-check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckOptions {
    /// Points of the uniform Fourier grid on `[−S, S]`.
    pub fourier_points: usize,
    /// Rows below this radius are skipped.
    pub r_min: f64,
}

impl Default for CrossCheckOptions {
    fn default() -> Self {
        CrossCheckOptions { fourier_points: 1 << 14, r_min: 1e-3 }
    }
}

/// Compares `Q_{1/2}^t g` with the one-dimensional propagator.
///
/// For `ν = 1/2`, `Q^t g(r) = S_t f(r) / (i√(2π))` where `f̂` is the odd
/// extension of `g` and `S_t f(x) = ∫ f̂(ξ) e^{2πi(xξ − tξ²)} dξ`. The right
/// side is summed on a dense uniform grid over `[−S, S]`, `S` the end of the
/// support. Returns `max_j |Q − S_t f/(i√(2π))| / max_j |S_t f/(i√(2π))|`.
pub fn n1_crosscheck<F>(g: F, support: (f64, f64), t: f64, r_grid: &Grid, opts: &CrossCheckOptions) -> Result<f64>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let (lo, hi) = support;
    if !(0.0 <= lo && lo < hi && hi.is_finite()) {
        return Err(Error::input("n1 cross-check needs a compact support [lo, hi] ⊂ [0, ∞)"));
    }
    let r_max = r_grid.nodes.iter().copied().fold(0.0, f64::max);
    let datum = RadialDatum::from_fn(support, r_max, t.abs(), &g)?;
    let half = Order::from_two_nu(1);

    let n = opts.fourier_points.max(16);
    let h = 2.0 * hi / n as f64;
    let xi: Vec<f64> = (0..n).map(|k| -hi + (k as f64 + 0.5) * h).collect();
    let ghat: Vec<Complex64> = xi
        .iter()
        .map(|&x| {
            let a = x.abs();
            if a < lo || a > hi {
                Complex64::new(0.0, 0.0)
            } else if x >= 0.0 {
                g(a)
            } else {
                -g(a)
            }
        })
        .collect();
    let rows: Vec<(f64, f64)> = r_grid
        .nodes
        .par_iter()
        .filter(|&&r| r >= opts.r_min)
        .map(|&r| {
            let q = q_nu_t(&datum, half, t, r)?;
            let s: Complex64 = xi
                .iter()
                .zip(&ghat)
                .map(|(&x, &gh)| gh * Complex64::from_polar(h, 2.0 * PI * (r * x - t * x * x)))
                .sum();
            let want = s / Complex64::new(0.0, (2.0 * PI).sqrt());
            Ok(((q - want).norm(), want.norm()))
        })
        .collect::<Result<_>>()?;
    let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::input("cross-check datum propagates to zero on the r-grid"));
    }
    Ok(rows.iter().map(|r| r.0).fold(0.0, f64::max) / scale)
}

/// `‖Q_ν^0 g‖²_{L²(0, R)}` by composite Gauss–Legendre in `r`.
pub fn q_zero_norm_sqr(g: &RadialDatum, nu: Order, r_max: f64, panel: f64) -> Result<f64> {
    let (nodes, weights) = composite(0.0, r_max, panel, 16);
    let vals: Vec<f64> = nodes.par_iter().map(|&r| q_nu_t(g, nu, 0.0, r).map(|z| z.norm_sqr())).collect::<Result<_>>()?;
    Ok(vals.iter().zip(&weights).map(|(v, w)| v * w).sum())
}

/// Settings shared by the operator-norm probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct ProbeOptions {
    pub grids: SweepGrids,
    pub norm: NormOptions,
}


/// Full-kernel norms on `I = [M, 2M]` for each `(α, M)`, with the per-`α`
/// growth slope in `log M`.
pub fn sharpness_probe(alpha_list: &[f64], m_list: &[f64], nu: Order, opts: &ProbeOptions) -> Result<SweepReport> {
    if alpha_list.iter().any(|a| !(*a > 0.0 && *a < 0.5)) {
        return Err(Error::config("alpha_list must lie in (0, 1/2)"));
    }
    if m_list.windows(2).any(|w| !(w[0] < w[1])) || m_list.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::config("M_list must be positive and increasing"));
    }
    let cells: Vec<(f64, f64)> = alpha_list.iter().flat_map(|&a| m_list.iter().map(move |&m| (a, m))).collect();
    let results: Vec<Result<f64>> = cells
        .iter()
        .enumerate()
        .map(|(k, &(alpha, m))| {
            let interval = (m, 2.0 * m);
            let (s, r, t) = opts.grids.build(interval);
            let norm = NormOptions { seed: crate::operators::cell_seed(opts.norm.seed, k as u64), ..opts.norm.clone() };
            op_norm_lower(&KernelSpec::new(Piece::Full, nu, interval, alpha), &s, &r, &t, &norm).map(|e| e.lower_bound)
        })
        .collect();
    let mut rep = SweepReport::new("probe.sharpness", &["alpha", "m"]);
    rep.command_echo = format!("nu={nu}");
    for (&(alpha, m), res) in cells.iter().zip(&results) {
        rep.rows.push(match res {
            Ok(v) => Row { params: vec![alpha, m], value: *v, delta: None, verdict: Verdict::Info, error: None },
            Err(e) => Row { params: vec![alpha, m], value: f64::NAN, delta: None, verdict: Verdict::Error, error: Some(e.to_string()) },
        });
    }
    for &alpha in alpha_list {
        let pts: Vec<(f64, f64)> =
            rep.rows.iter().filter(|r| r.params[0] == alpha && r.verdict != Verdict::Error).map(|r| (r.params[1], r.value)).collect();
        rep.summary.slope_fits.insert(alpha_key(alpha), SlopeFit::log_log(&pts));
    }
    rep.summary.sup = rep.row_sup();
    Ok(rep)
}

pub fn alpha_key(alpha: f64) -> String {
    format!("alpha={alpha}")
}

pub fn beta_key(beta: f64) -> String {
    format!("beta={beta}")
}

/// Sharpness gates: flat growth at each `flat` exponent and a 95%-confident
/// positive slope at each `growing` exponent.
pub fn gate_sharpness(rep: &mut SweepReport, flat: &[f64], growing: &[f64], flat_gate: f64) {
    for &a in flat {
        let fit = rep.summary.slope_fits.get(&alpha_key(a)).copied();
        let g = match fit.and_then(|f| f.slope) {
            Some(s) => Gate::new(format!("{}.flat", alpha_key(a)), s.abs() <= flat_gate, format!("slope {s:.4} (gate ±{flat_gate})")),
            None => Gate::new(format!("{}.flat", alpha_key(a)), false, "slope undefined"),
        };
        rep.gates.push(g);
    }
    for &a in growing {
        let fit = rep.summary.slope_fits.get(&alpha_key(a)).copied();
        let g = match fit.and_then(|f| f.lower95.zip(f.slope)) {
            Some((lo, s)) => Gate::new(format!("{}.growth", alpha_key(a)), lo > 0.0, format!("slope {s:.4}, 95% lower bound {lo:.4}")),
            None => Gate::new(format!("{}.growth", alpha_key(a)), false, "slope or confidence bound undefined"),
        };
        rep.gates.push(g);
    }
}

/// Lattice for the `β` probe, scaled with `ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaLattice {
    /// `a = c/(4ν)` for each factor `c`; `a = 1/(4ν)` is where the phase
    /// `as² − θ(s)` has a degenerate stationary point (at `s = √2 ν`).
    pub a_factors: Vec<f64>,
    /// All subintervals of `[0, c·max(ν, 1)]` are searched.
    pub s_max_factor: f64,
    /// Panel length of the cumulative integral.
    pub panel: f64,
    /// Golden-section steps in `a` around the best lattice factor.
    pub refine_steps: usize,
}

impl Default for BetaLattice {
    fn default() -> Self {
        BetaLattice { a_factors: vec![0.5, 0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.25, 2.0], s_max_factor: 4.0, panel: 0.5, refine_steps: 20 }
    }
}

/// `sup_{I ⊂ [0, S]} |∫_I e^{ias²} J_ν(s) s^{−β} ds|`, exactly over intervals
/// whose ends are panel endpoints: the diameter of the cumulative-integral
/// curve.
pub fn beta_integral_sup(nu: Order, beta: f64, a: f64, s_max: f64, panel: f64) -> Result<f64> {
    let table = BesselTable::new(nu, s_max, panel);
    Ok(table.sup(beta, a))
}

struct BesselTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    j: Vec<f64>,
    panel_of: Vec<usize>,
    panels: usize,
}

impl BesselTable {
    fn new(nu: Order, s_max: f64, panel: f64) -> Self {
        let panels = if s_max > 0.0 { ((s_max / panel).ceil() as usize).max(1) } else { 0 };
        let h = if panels > 0 { s_max / panels as f64 } else { 0.0 };
        let gl = GaussLegendre::cached(12);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut panel_of = Vec::new();
        for p in 0..panels {
            let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(0.5 * (b - a) * x + 0.5 * (a + b));
                weights.push(0.5 * (b - a) * w);
                panel_of.push(p);
            }
        }
        let j = nodes.par_iter().map(|&s| j_value(nu, s)).collect();
        BesselTable { nodes, weights, j, panel_of, panels }
    }

    fn sup(&self, beta: f64, a: f64) -> f64 {
        let mut cum = vec![Complex64::new(0.0, 0.0); self.panels + 1];
        for k in 0..self.nodes.len() {
            let s = self.nodes[k];
            cum[self.panel_of[k] + 1] += Complex64::from_polar(self.weights[k] * self.j[k] * s.powf(-beta), a * s * s);
        }
        for p in 0..self.panels {
            let prev = cum[p];
            cum[p + 1] += prev;
        }
        let mut best = 0.0f64;
        for i in 0..cum.len() {
            for k in i + 1..cum.len() {
                best = best.max((cum[k] - cum[i]).norm_sqr());
            }
        }
        best.sqrt()
    }
}

/// For each `(β, ν)`: the supremum over the lattice of `a` and all
/// subintervals `I`; per-`β` slope of the supremum in `log ν`.
pub fn beta_probe(beta_list: &[f64], lattice: &BetaLattice, nu_list: &[Order]) -> Result<SweepReport> {
    if beta_list.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
        return Err(Error::config("beta_list must lie in (0, 1)"));
    }
    if nu_list.is_empty() {
        return Err(Error::config("nu_list must not be empty"));
    }
    let mut rep = SweepReport::new("probe.beta", &["beta", "nu", "a_best"]);
    let tables: Vec<(Order, BesselTable)> = nu_list
        .iter()
        .map(|&nu| (nu, BesselTable::new(nu, lattice.s_max_factor * nu.value().max(1.0), lattice.panel)))
        .collect();
    for &beta in beta_list {
        for (nu, table) in &tables {
            let v = nu.value().max(0.5);
            let (mut best, mut a_best, mut k_best) = (0.0f64, 0.0, 0);
            for (k, &c) in lattice.a_factors.iter().enumerate() {
                let a = c / (4.0 * v);
                let s = table.sup(beta, a);
                if s > best {
                    best = s;
                    a_best = a;
                    k_best = k;
                }
            }
            // The peak in `a` narrows like ν^{−2/3}; refine between the neighbours.
            if lattice.refine_steps > 0 && lattice.a_factors.len() > 1 {
                let f = &lattice.a_factors;
                let lo = f[k_best.saturating_sub(1)] / (4.0 * v);
                let hi = f[(k_best + 1).min(f.len() - 1)] / (4.0 * v);
                let (a, s) = golden_max(&|a| table.sup(beta, a), lo, hi, lattice.refine_steps);
                if s > best {
                    best = s;
                    a_best = a;
                }
            }
            rep.rows.push(Row { params: vec![beta, nu.value(), a_best], value: best, delta: None, verdict: Verdict::Info, error: None });
        }
        let pts: Vec<(f64, f64)> = rep.rows.iter().filter(|r| r.params[0] == beta).map(|r| (r.params[1], r.value)).collect();
        rep.summary.slope_fits.insert(beta_key(beta), SlopeFit::log_log(&pts));
    }
    rep.summary.sup = rep.row_sup();
    Ok(rep)
}

/// β-threshold gates: positive slope (95% confident) at each `growing` β and
/// a lattice supremum within `rel` of `baseline` at each bounded β.
pub fn gate_beta(rep: &mut SweepReport, growing: &[f64], bounded: &[(f64, f64)], rel: f64) {
    for &b in growing {
        let fit = rep.summary.slope_fits.get(&beta_key(b)).copied();
        let g = match fit.and_then(|f| f.lower95.zip(f.slope)) {
            Some((lo, s)) => Gate::new(format!("{}.growth", beta_key(b)), lo > 0.0, format!("slope {s:.4}, 95% lower bound {lo:.4}")),
            None => Gate::new(format!("{}.growth", beta_key(b)), false, "slope or confidence bound undefined"),
        };
        rep.gates.push(g);
    }
    for &(b, baseline) in bounded {
        let sup = rep.rows.iter().filter(|r| r.params[0] == b).map(|r| r.value).fold(0.0, f64::max);
        let slope = rep.summary.slope_fits.get(&beta_key(b)).and_then(|f| f.slope).unwrap_or(f64::NAN);
        rep.gates.push(Gate::new(
            format!("{}.bounded", beta_key(b)),
            (sup - baseline).abs() <= rel * baseline && slope <= 0.0,
            format!("sup {sup:.6} vs baseline {baseline:.6}, slope {slope:.4}"),
        ));
    }
}

/// Default t-grid for a `Q` datum supported in `[s_lo, s_hi]`, mapped from the
/// operator convention.
pub fn default_q_t_grid(s_lo: f64, points: usize) -> Vec<f64> {
    let sigma = 2.0 * PI * s_lo.max(1e-3);
    default_t_grid(default_t_max(sigma), points).into_iter().map(|t| 2.0 * PI * t).collect()
}
