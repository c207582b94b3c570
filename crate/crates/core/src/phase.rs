//! Phase and amplitude functions of the `TT*` kernels in the transition
//! regime (`ν + ν^{2/3} ≤ rs ≤ 2ν`, "near") and the oscillatory regime
//! (`rs ≥ 2ν`, "far"), with their stationary-point parametrizations, interval
//! partitions, derivative bounds, and the bracketed kernel integrals.
//!
//! Near regime, for `u > 1` and `q = 1 + ν^{−η}`:
//!
//! ```text
//! f(u) = √(q² − u⁻²) − √(1 − u⁻²)
//! φ(u) = −aνu²/2 + θ̃(qu) − θ̃(u),   φ′(u) = ν(f(u) − au)
//! ψ(u) = ν^{1/2}(q−1)^β u^{1/2} q^{1/2} / ((u²−1)^{1/4}(q²u²−1)^{1/4})
//! ```
//!
//! Far regime, for `u > σ` and `ν = σ/p`:
//!
//! ```text
//! f(u) = (p+2)u / (√((p+1)²u² − σ²) + √(u² − σ²))
//! φ(u) = −au²/2 + θ((p+1)u/p) − θ(u/p),   φ′(u) = f(u) − au
//! ψ(u) = 1 / (u^{1/2}(1 − σ²(p+1)⁻²u⁻²)^{1/4}(1 − σ²u⁻²)^{1/4})
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{theta_unchecked, Order};
use crate::error::{Error, Result};
use crate::oscillatory::{integrate_oscillatory_with, PhasePair, QuadOptions};
use crate::report::{Gate, Row, SweepReport, Verdict};

pub const DEFAULT_BETA: f64 = 0.75;
pub const DEFAULT_N: f64 = 16.0;

/// Region of the `(η, γ)` rectangle: `ℱ` when `δ ≥ γ`, otherwise `𝒢`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    F,
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearParams {
    pub nu: Order,
    /// `q = 1 + ν^{−η}`.
    pub eta: f64,
    /// Stationary point `1 + ν^{−γ}`.
    pub gamma: f64,
    pub beta: f64,
    /// Width divisor of the interval around the stationary point.
    pub n_cut: f64,
}

impl NearParams {
    pub fn new(nu: Order, eta: f64, gamma: f64) -> Result<Self> {
        Self::with(nu, eta, gamma, DEFAULT_BETA, DEFAULT_N)
    }

    pub fn with(nu: Order, eta: f64, gamma: f64, beta: f64, n_cut: f64) -> Result<Self> {
        if nu.value() < 1.0 {
            return Err(Error::domain(format!("near regime needs ν ≥ 1, got {nu}")));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain(format!("η must be positive, got {eta}")));
        }
        if !(0.0..=1.0 / 3.0 + 1e-12).contains(&gamma) {
            return Err(Error::domain(format!("γ must lie in [0, 1/3], got {gamma}")));
        }
        if !(0.5..1.0).contains(&beta) {
            return Err(Error::domain(format!("β must lie in [1/2, 1), got {beta}")));
        }
        if !(n_cut > 0.0) {
            return Err(Error::domain(format!("N must be positive, got {n_cut}")));
        }
        Ok(NearParams { nu, eta, gamma, beta, n_cut })
    }

    pub fn nu_f(&self) -> f64 {
        self.nu.value()
    }

    pub fn q(&self) -> f64 {
        1.0 + self.nu_f().powf(-self.eta)
    }

    /// `q² − 1`, without cancellation.
    fn q2m1(&self) -> f64 {
        let y = self.nu_f().powf(-self.eta);
        y * (2.0 + y)
    }

    pub fn xi(&self) -> f64 {
        self.eta.min(self.gamma)
    }

    pub fn delta(&self) -> f64 {
        0.5 - self.eta * self.beta + self.gamma / 4.0 + self.xi() / 4.0
    }

    pub fn region(&self) -> Region {
        if self.delta() >= self.gamma {
            Region::F
        } else {
            Region::G
        }
    }

    pub fn u0(&self) -> f64 {
        1.0 + self.nu_f().powf(-self.gamma)
    }

    /// `[1 + ν^{−1/3}, 2/q]`; empty when the left end exceeds the right.
    pub fn domain(&self) -> (f64, f64) {
        (1.0 + self.nu_f().powf(-1.0 / 3.0), 2.0 / self.q())
    }

    fn f(&self, u: f64) -> f64 {
        let w1 = (u - 1.0) * (u + 1.0) / (u * u);
        let wq = w1 + self.q2m1();
        self.q2m1() / (wq.sqrt() + w1.sqrt())
    }

    /// `(f′, f″, f‴)` from closed forms; differences of powers of
    /// `w = c² − u⁻²` are formed without cancellation.
    pub fn f_derivatives(&self, u: f64) -> [f64; 3] {
        let w1 = (u - 1.0) * (u + 1.0) / (u * u);
        let ratio = self.q2m1() / w1;
        let d = |k: f64| w1.powf(-k / 2.0) * (-(k / 2.0) * ratio.ln_1p()).exp_m1();
        let (d1, d3, d5) = (d(1.0), d(3.0), d(5.0));
        let f1 = u.powi(-3) * d1;
        let f2 = -3.0 * u.powi(-4) * d1 - u.powi(-6) * d3;
        let f3 = 12.0 * u.powi(-5) * d1 + 9.0 * u.powi(-7) * d3 + 3.0 * u.powi(-9) * d5;
        [f1, f2, f3]
    }

    fn phi(&self, a: f64, u: f64) -> f64 {
        let v = self.nu_f();
        -a * v * u * u / 2.0 + theta_unchecked(v, v * self.q() * u) - theta_unchecked(v, v * u)
    }

    fn psi(&self, u: f64) -> f64 {
        let v = self.nu_f();
        let q = self.q();
        let pre = v.sqrt() * (q - 1.0).powf(self.beta);
        let qq = (q * u - 1.0) * (q * u + 1.0);
        pre * (u * q).sqrt() / (((u - 1.0) * (u + 1.0)).sqrt() * qq.sqrt()).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarParams {
    /// `p = (r − ρ)/ρ`.
    pub p: f64,
    /// `σ = pν`.
    pub sigma: f64,
    /// Stationary point `σ + σ^γ`.
    pub gamma: f64,
}

impl FarParams {
    pub fn new(p: f64, sigma: f64, gamma: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::domain(format!("p must be positive, got {p}")));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("σ must be positive, got {sigma}")));
        }
        if !gamma.is_finite() || (sigma > 1.0 && gamma < 1.0) || (sigma < 1.0 && gamma > 1.0) {
            return Err(Error::domain(format!(
                "γ = {gamma} incompatible with σ = {sigma} (need γ ≥ 1 for σ ≥ 1, γ ≤ 1 for σ ≤ 1)"
            )));
        }
        Ok(FarParams { p, sigma, gamma })
    }

    /// `ν = σ/p`; need not be a half-integer.
    pub fn nu(&self) -> f64 {
        self.sigma / self.p
    }

    pub fn u0(&self) -> f64 {
        self.sigma + self.sigma.powf(self.gamma)
    }

    /// Largest `a` whose stationary point lies in `[2σ, ∞)`.
    pub fn a_max(&self) -> f64 {
        let p = self.p;
        ((4.0 * (p + 1.0) * (p + 1.0) - 1.0).sqrt() - 3f64.sqrt()) / (4.0 * self.sigma * p)
    }

    fn radicals(&self, u: f64) -> (f64, f64) {
        let s = self.sigma;
        let c = self.p + 1.0;
        let r1 = ((c * u - s) * (c * u + s)).sqrt();
        let r0 = ((u - s) * (u + s)).sqrt();
        (r0, r1)
    }

    fn f(&self, u: f64) -> f64 {
        let (r0, r1) = self.radicals(u);
        (self.p + 2.0) * u / (r1 + r0)
    }

    /// `f′(u) = −σ²(p+2) / (R₀R₁(R₀+R₁))`.
    pub fn f_prime(&self, u: f64) -> f64 {
        let (r0, r1) = self.radicals(u);
        -self.sigma * self.sigma * (self.p + 2.0) / (r0 * r1 * (r0 + r1))
    }

    fn phi(&self, a: f64, u: f64) -> f64 {
        let v = self.nu();
        let p = self.p;
        -a * u * u / 2.0 + theta_unchecked(v, (p + 1.0) * u / p) - theta_unchecked(v, u / p)
    }

    fn psi(&self, u: f64) -> f64 {
        let s = self.sigma;
        let c = self.p + 1.0;
        let w1 = (c * u - s) * (c * u + s) / (c * c * u * u);
        let w0 = (u - s) * (u + s) / (u * u);
        1.0 / (u.sqrt() * (w1 * w0).sqrt().sqrt())
    }

    /// `ψ′/ψ`.
    fn psi_log_derivative(&self, u: f64) -> f64 {
        let c0 = self.sigma * self.sigma;
        let c1 = c0 / ((self.p + 1.0) * (self.p + 1.0));
        -0.5 / u - c1 / (2.0 * u * (u * u - c1)) - c0 / (2.0 * u * (u * u - c0))
    }
}

/// Parameters of either regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhaseParams {
    Near(NearParams),
    Far(FarParams),
}

/// `φ`, `φ′`, `ψ` at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseValue {
    pub phi: f64,
    pub phi_prime: f64,
    pub psi: f64,
}

impl PhaseParams {
    /// Left end of the open domain (`1` near, `σ` far).
    pub fn singular_endpoint(&self) -> f64 {
        match self {
            PhaseParams::Near(_) => 1.0,
            PhaseParams::Far(fp) => fp.sigma,
        }
    }

    /// Integration domain of the bracketed integral.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            PhaseParams::Near(np) => np.domain(),
            PhaseParams::Far(fp) => (2.0 * fp.sigma, f64::INFINITY),
        }
    }

    /// Parametrized stationary point `1 + ν^{−γ}` resp. `σ + σ^γ`.
    pub fn u0(&self) -> f64 {
        match self {
            PhaseParams::Near(np) => np.u0(),
            PhaseParams::Far(fp) => fp.u0(),
        }
    }

    fn check_u(&self, u: f64) -> Result<()> {
        let e = self.singular_endpoint();
        if !(u > e) || !u.is_finite() {
            return Err(Error::domain(format!("u = {u} must exceed the singular endpoint {e}")));
        }
        Ok(())
    }

    pub fn f(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(self.f_unchecked(u))
    }

    pub(crate) fn f_unchecked(&self, u: f64) -> f64 {
        match self {
            PhaseParams::Near(np) => np.f(u),
            PhaseParams::Far(fp) => fp.f(u),
        }
    }

    /// Scale factor of `φ′ = scale·(f − au)`.
    fn phi_scale(&self) -> f64 {
        match self {
            PhaseParams::Near(np) => np.nu_f(),
            PhaseParams::Far(_) => 1.0,
        }
    }

    pub(crate) fn phi_prime_unchecked(&self, a: f64, u: f64) -> f64 {
        self.phi_scale() * (self.f_unchecked(u) - a * u)
    }

    pub(crate) fn phi_unchecked(&self, a: f64, u: f64) -> f64 {
        match self {
            PhaseParams::Near(np) => np.phi(a, u),
            PhaseParams::Far(fp) => fp.phi(a, u),
        }
    }

    pub(crate) fn psi_unchecked(&self, u: f64) -> f64 {
        match self {
            PhaseParams::Near(np) => np.psi(u),
            PhaseParams::Far(fp) => fp.psi(u),
        }
    }

    pub fn phase(&self, a: f64, u: f64) -> Result<PhaseValue> {
        self.check_u(u)?;
        Ok(PhaseValue {
            phi: self.phi_unchecked(a, u),
            phi_prime: self.phi_prime_unchecked(a, u),
            psi: self.psi_unchecked(u),
        })
    }

    /// The `a` for which `φ′` vanishes at the parametrized stationary point.
    pub fn a_of_gamma(&self) -> f64 {
        let u0 = self.u0();
        self.f_unchecked(u0) / u0
    }

    /// `φ″(u) = scale·(f′(u) − a)`.
    pub fn phi_second(&self, a: f64, u: f64) -> f64 {
        let fp = match self {
            PhaseParams::Near(np) => np.f_derivatives(u)[0],
            PhaseParams::Far(fp) => fp.f_prime(u),
        };
        self.phi_scale() * (fp - a)
    }

    /// The zero of `φ′` in the domain for the given `a`, if any. `f(u)/u` is
    /// strictly decreasing, so the zero is unique.
    pub fn stationary_point(&self, a: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(a > 0.0) || lo >= hi {
            return None;
        }
        let g = |u: f64| self.f_unchecked(u) / u - a;
        if g(lo) < 0.0 {
            return None;
        }
        let mut right = if hi.is_finite() { hi } else { lo.max(1.0) * 2.0 + 4.0 / a };
        if g(right) > 0.0 {
            if hi.is_finite() {
                return None;
            }
            while g(right) > 0.0 {
                right *= 2.0;
            }
        }
        let mut left = lo;
        for _ in 0..200 {
            let mid = 0.5 * (left + right);
            if mid <= left || mid >= right {
                break;
            }
            if g(mid) > 0.0 {
                left = mid;
            } else {
                right = mid;
            }
        }
        Some(0.5 * (left + right))
    }

    pub fn partition(&self) -> Partition {
        match self {
            PhaseParams::Near(np) => near_partition(np),
            PhaseParams::Far(fp) => far_partition(fp),
        }
    }
}

pub fn f_eval(params: &PhaseParams, u: f64) -> Result<f64> {
    params.f(u)
}

pub fn phase_eval(params: &PhaseParams, a: f64, u: f64) -> Result<PhaseValue> {
    params.phase(a, u)
}

pub fn a_of_gamma(params: &PhaseParams) -> f64 {
    params.a_of_gamma()
}

pub fn partition(params: &PhaseParams) -> Partition {
    params.partition()
}

/// One labelled piece of a partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    /// The raw cut points were out of order (or coincided), so the piece
    /// carries no mass after clamping.
    pub empty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub segments: Vec<Segment>,
    /// Some interior cut point fell outside the domain and was clamped.
    pub clamped: bool,
}

impl Partition {
    pub fn nonempty(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| !s.empty)
    }

    /// Builds contiguous segments from raw cut points `c₀ ≤ … ≤ c_k`, clamping
    /// each into `[c₀, c_k]` and making the sequence nondecreasing.
    fn from_cuts(labels: &[&str], raw: &[f64]) -> Partition {
        debug_assert_eq!(labels.len() + 1, raw.len());
        let lo = raw[0];
        let hi = raw[raw.len() - 1];
        let mut clamped = false;
        let mut cuts = Vec::with_capacity(raw.len());
        let mut run = lo;
        for (i, &c) in raw.iter().enumerate() {
            let mut v = c;
            if i > 0 && i + 1 < raw.len() && (c > hi || c < lo) {
                clamped = true;
            }
            if i + 1 < raw.len() {
                v = v.min(hi);
            }
            run = run.max(v);
            cuts.push(run);
        }
        let segments = labels
            .iter()
            .enumerate()
            .map(|(i, l)| Segment { label: (*l).to_string(), lo: cuts[i], hi: cuts[i + 1], empty: !(raw[i] < raw[i + 1]) || !(cuts[i] < cuts[i + 1]) })
            .collect();
        Partition { segments, clamped }
    }
}

fn near_partition(np: &NearParams) -> Partition {
    let v = np.nu_f();
    let (lo, hi) = np.domain();
    let c1 = 1.0 + v.powf(-np.gamma) / 10.0;
    match np.region() {
        Region::F => {
            let w = v.powf(-np.delta()) / np.n_cut;
            let u0 = np.u0();
            Partition::from_cuts(&["A1", "A2", "A3", "A4"], &[lo, c1, u0 - w, u0 + w, hi])
        }
        Region::G => {
            let c2 = 1.0 + 2.0 * v.powf(-0.5 + np.eta * np.beta - np.gamma / 2.0);
            Partition::from_cuts(&["A1", "A2", "A3"], &[lo, c1, c2, hi])
        }
    }
}

fn far_partition(fp: &FarParams) -> Partition {
    let s = fp.sigma;
    let sg = s.powf(fp.gamma);
    let sg2 = s.powf(fp.gamma / 2.0);
    let inf = f64::INFINITY;
    if s >= 1.0 {
        let u1 = 2.0 * s;
        let u2 = u1.max(s + sg / 2.0);
        let u3 = u2.max(s + sg - sg2);
        let u4 = s + sg + sg2;
        Partition::from_cuts(&["[u1,u2]", "[u2,u3]", "[u3,u4]", "[u4,inf)"], &[u1, u2, u3, u4, inf])
    } else if fp.gamma >= 0.0 {
        Partition::from_cuts(&["[2s,3]", "[3,inf)"], &[2.0 * s, 3.0, inf])
    } else {
        let u3 = 3f64.max(s + sg / 2.0);
        let u4 = u3.max(s + sg - sg2);
        let u5 = s + sg + sg2;
        Partition::from_cuts(
            &["[u1,u2]", "[u2,u3]", "[u3,u4]", "[u4,u5]", "[u5,inf)"],
            &[2.0 * s, 3.0, u3, u4, u5, inf],
        )
    }
}

/// Outcome of the derivative-bound checks on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    pub points: usize,
    /// Smallest `(lhs − rhs)/scale` over the grid, per inequality.
    pub min_slack: Vec<(String, f64)>,
    /// `|f″(u₀)| ν^{η − 3γ/2 − ξ}` (near only).
    pub f2_constant: Option<f64>,
    /// `|φ′(u₀)|/scale` at the parametrized stationary point.
    pub stationary_residual: f64,
    pub holds: bool,
}

impl DerivativeBounds {
    pub fn to_report(&self, params: &PhaseParams) -> SweepReport {
        let mut rep = SweepReport::new("phase.derivative_bounds", &["u_points"]);
        for (name, slack) in &self.min_slack {
            let ok = *slack >= -SLACK_TOL;
            rep.summary.metrics.insert(format!("min_slack.{name}"), *slack);
            rep.gates.push(Gate::new(name, ok, format!("min normalized slack {slack:e}")));
        }
        if let Some(c) = self.f2_constant {
            rep.summary.metrics.insert("f2_constant".into(), c);
        }
        rep.summary.metrics.insert("stationary_residual".into(), self.stationary_residual);
        rep.rows.push(Row {
            params: vec![self.points as f64],
            value: self.min_slack.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
            delta: None,
            verdict: if self.holds { Verdict::Pass } else { Verdict::Fail },
            error: None,
        });
        rep.command_echo = format!("{params:?}");
        rep
    }
}

/// Normalized slack below which an inequality counts as violated.
pub const SLACK_TOL: f64 = 1e-11;
/// Noise tolerance for finite-difference sign checks.
pub const FD_SIGN_TOL: f64 = 1e-6;

/// Finite-difference estimates of `(f′, f″, f‴)`.
pub fn near_f_finite_differences(np: &NearParams, u: f64) -> [f64; 3] {
    let h = 0.02 * (u - 1.0).min(1.0);
    let f = |x: f64| np.f(x);
    let (fm2, fm1, f0, fp1, fp2) = (f(u - 2.0 * h), f(u - h), f(u), f(u + h), f(u + 2.0 * h));
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    let d3 = (-fm2 + 2.0 * fm1 - 2.0 * fp1 + fp2) / (2.0 * h * h * h);
    [d1, d2, d3]
}

/// Checks the sign hypotheses `f′ ≤ 0`, `f″ ≥ 0`, `f‴ ≤ 0` on the grid by finite
/// differences.
pub fn check_sign_hypotheses(np: &NearParams, u_grid: &[f64]) -> Result<()> {
    let d: Vec<[f64; 3]> = u_grid.iter().map(|&u| near_f_finite_differences(np, u)).collect();
    let names = ["f' <= 0", "f'' >= 0", "f''' <= 0"];
    let signs = [-1.0, 1.0, -1.0];
    for k in 0..3 {
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v[k].abs()));
        if let Some((u, v)) = u_grid.iter().zip(&d).find(|(_, v)| signs[k] * v[k] < -FD_SIGN_TOL * scale) {
            return Err(Error::Hypothesis(format!("{} fails at u = {u} (finite difference {})", names[k], v[k])));
        }
    }
    Ok(())
}

/// Evaluates both sides of the applicable lower bounds for `|φ′|` on `u_grid`
/// at `a = a(γ)`.
pub fn derivative_bounds_check(params: &PhaseParams, u_grid: &[f64]) -> Result<DerivativeBounds> {
    let (lo, hi) = params.domain();
    for &u in u_grid {
        let inside = u >= lo * (1.0 - 1e-14) && u <= hi * (1.0 + 1e-14);
        if !inside {
            return Err(Error::domain(format!("grid point {u} outside [{lo}, {hi}]")));
        }
    }
    let a = params.a_of_gamma();
    let u0 = params.u0();
    let scale_at = |u: f64| params.phi_scale() * (params.f_unchecked(u).abs() + (a * u).abs());
    let stationary_residual = params.phi_prime_unchecked(a, u0).abs() / scale_at(u0);
    match params {
        PhaseParams::Near(np) => {
            check_sign_hypotheses(np, u_grid)?;
            let v = np.nu_f();
            let [f1, f2, _] = np.f_derivatives(u0);
            let mut s51 = f64::INFINITY;
            let mut s52 = f64::INFINITY;
            for &u in u_grid {
                let lhs = params.phi_prime_unchecked(a, u).abs();
                let scale = scale_at(u);
                if u < u0 {
                    let rhs = v * (u0 - u) * (a - f1);
                    s51 = s51.min((lhs - rhs) / scale);
                } else if u > u0 {
                    let d = u - u0;
                    let rhs = v * d * (a - f1 - 0.5 * f2 * d);
                    s52 = s52.min((lhs - rhs) / scale);
                }
            }
            let f2c = f2.abs() * v.powf(np.eta - 1.5 * np.gamma - np.xi());
            let holds = s51 >= -SLACK_TOL && s52 >= -SLACK_TOL;
            Ok(DerivativeBounds {
                points: u_grid.len(),
                min_slack: vec![("below_u0".into(), s51), ("above_u0".into(), s52)],
                f2_constant: Some(f2c),
                stationary_residual,
                holds,
            })
        }
        PhaseParams::Far(_) => {
            let mut s = f64::INFINITY;
            for &u in u_grid {
                let lhs = params.phi_prime_unchecked(a, u).abs();
                let rhs = (u0 - u).abs() / u0;
                s = s.min((lhs - rhs) / scale_at(u));
            }
            Ok(DerivativeBounds {
                points: u_grid.len(),
                min_slack: vec![("far_lower".into(), s)],
                f2_constant: None,
                stationary_residual,
                holds: s >= -SLACK_TOL,
            })
        }
    }
}

/// Counts sign changes of `φ″` on a uniform grid over `[lo, hi]`.
pub fn phi_second_sign_changes(params: &PhaseParams, a: f64, lo: f64, hi: f64, points: usize) -> usize {
    let mut prev = 0.0f64;
    let mut changes = 0;
    for i in 0..points {
        let u = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let v = params.phi_second(a, u);
        if v != 0.0 {
            if prev != 0.0 && v.signum() != prev.signum() {
                changes += 1;
            }
            prev = v;
        }
    }
    changes
}

/// Integration settings for [`bracket_integral`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketOptions {
    pub tol: f64,
    pub order: usize,
    /// Target size of the asymptotic tail remainder (far regime).
    pub tail_tol: f64,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions { tol: 1e-8, order: 10, tail_tol: 1e-7 }
    }
}

impl BracketOptions {
    /// Doubled resolution: twice the nodes per panel and a tighter tolerance.
    pub fn refined(self) -> Self {
        BracketOptions { tol: (self.tol * 0.01).max(1e-12), order: self.order * 2, tail_tol: self.tail_tol * 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketValue {
    pub value: Complex64,
    pub magnitude: f64,
    pub est_error: f64,
    pub panels: usize,
    /// Where the numerical integration stopped (far regime), else the domain end.
    pub truncation: f64,
    /// Size bound of the neglected tail remainder.
    pub tail_bound: f64,
}

/// `∫_{I_clip ∩ domain} e^{iφ(u)} ψ(u) du` for the given `a`.
pub fn bracket_integral(params: &PhaseParams, a: f64, clip: Option<(f64, f64)>) -> Result<BracketValue> {
    bracket_integral_with(params, a, clip, &BracketOptions::default())
}

pub fn bracket_integral_with(
    params: &PhaseParams,
    a: f64,
    clip: Option<(f64, f64)>,
    opts: &BracketOptions,
) -> Result<BracketValue> {
    if !a.is_finite() {
        return Err(Error::input(format!("a must be finite, got {a}")));
    }
    let (dlo, dhi) = params.domain();
    let (clo, chi) = clip.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    if clo > chi {
        return Err(Error::input(format!("clip interval out of order: [{clo}, {chi}]")));
    }
    let lo = dlo.max(clo);
    let hi = dhi.min(chi);
    let zero = BracketValue {
        value: Complex64::new(0.0, 0.0),
        magnitude: 0.0,
        est_error: 0.0,
        panels: 0,
        truncation: lo,
        tail_bound: 0.0,
    };
    if !(lo < hi) {
        return Ok(zero);
    }

    // Split points: partition cuts and the actual stationary point.
    let mut cuts: Vec<f64> = params.partition().segments.iter().flat_map(|s| [s.lo, s.hi]).collect();
    if let Some(us) = params.stationary_point(a) {
        cuts.push(us);
    }
    let mut finite_hi = hi;
    let mut tail_start = None;
    if hi.is_infinite() {
        let start = far_tail_start(params, a, lo, &cuts);
        finite_hi = start;
        tail_start = Some(start);
    }
    cuts.retain(|c| c.is_finite() && *c > lo && *c < finite_hi);
    cuts.push(lo);
    cuts.push(finite_hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut acc = zero;
    acc.truncation = finite_hi;
    for w in cuts.windows(2) {
        add_segment(params, a, w[0], w[1], opts, &mut acc)?;
    }

    if let (Some(mut u), PhaseParams::Far(fp)) = (tail_start, params) {
        // Extend the numerical range until the asymptotic tail is accurate.
        let mut tail = far_tail(fp, a, u);
        let mut guard = 0;
        while tail.1 > opts.tail_tol {
            guard += 1;
            if guard > 60 {
                return Err(Error::NonConvergence {
                    best: crate::oscillatory::QuadResult { value: acc.value, est_error: acc.est_error + tail.1, panels: acc.panels },
                });
            }
            let next = u * 1.5;
            add_segment(params, a, u, next, opts, &mut acc)?;
            u = next;
            tail = far_tail(fp, a, u);
        }
        acc.value += tail.0;
        acc.tail_bound = tail.1;
        acc.truncation = u;
    }
    acc.magnitude = acc.value.norm();
    Ok(acc)
}

fn add_segment(params: &PhaseParams, a: f64, lo: f64, hi: f64, opts: &BracketOptions, acc: &mut BracketValue) -> Result<()> {
    if !(lo < hi) {
        return Ok(());
    }
    // u = e + v² removes the endpoint singularity of ψ at e.
    let e = params.singular_endpoint();
    let p = *params;
    let pair = PhasePair::new(
        move |v: f64| p.phi_unchecked(a, e + v * v),
        move |v: f64| p.phi_prime_unchecked(a, e + v * v) * 2.0 * v,
        move |v: f64| p.psi_unchecked(e + v * v) * 2.0 * v,
        (lo - e).sqrt(),
        (hi - e).sqrt(),
    )?;
    let qo = QuadOptions { order: opts.order, ..QuadOptions::default() };
    let r = integrate_oscillatory_with(&pair, opts.tol, &qo)?;
    acc.value += r.value;
    acc.est_error += r.est_error;
    acc.panels += r.panels;
    Ok(())
}

/// Start of the asymptotic tail: beyond every cut and well past the
/// stationary point, where `|φ′|` grows without further zeros.
fn far_tail_start(params: &PhaseParams, a: f64, lo: f64, cuts: &[f64]) -> f64 {
    let mut start = lo;
    for &c in cuts {
        if c.is_finite() {
            start = start.max(c);
        }
    }
    if let PhaseParams::Far(fp) = params {
        start = start.max(fp.u0() + 10.0 * fp.sigma.powf(fp.gamma / 2.0));
        if let Some(us) = params.stationary_point(a) {
            let width = 1.0 / params.phi_second(a, us).abs().sqrt();
            start = start.max(us + 10.0 * width.max(1.0));
        }
        start = start.max(4.0 * fp.sigma).max(8.0);
    }
    start
}

/// Asymptotic expansion of `∫_U^∞ e^{iφ}ψ` by three integrations by parts.
/// Returns the sum of the terms and the magnitude of the last one, which
/// bounds the remainder once the terms decrease.
fn far_tail(fp: &FarParams, a: f64, u: f64) -> (Complex64, f64) {
    let pp = PhaseParams::Far(*fp);
    let d1 = |x: f64| pp.phi_prime_unchecked(a, x);
    let g = |x: f64| {
        let psi = fp.psi(x);
        let d = d1(x);
        let d2 = fp.f_prime(x) - a;
        psi * fp.psi_log_derivative(x) / d - psi * d2 / (d * d)
    };
    let hfun = |x: f64| g(x) / d1(x);
    let step = 1e-3 * u;
    let h_prime = (hfun(u - 2.0 * step) - 8.0 * hfun(u - step) + 8.0 * hfun(u + step) - hfun(u + 2.0 * step)) / (12.0 * step);
    let phase = Complex64::from_polar(1.0, pp.phi_unchecked(a, u));
    let d = d1(u);
    let i = Complex64::i();
    let t0 = i * phase * fp.psi(u) / d;
    let t1 = -phase * g(u) / d;
    let t2 = -i * phase * h_prime / d;
    if !(t0.norm().is_finite() && t1.norm().is_finite() && t2.norm().is_finite()) {
        return (Complex64::new(0.0, 0.0), f64::INFINITY);
    }
    // The series is only asymptotic; require decreasing terms.
    let bound = if t2.norm() <= t1.norm() && t1.norm() <= t0.norm() { t2.norm() } else { f64::INFINITY };
    (t0 + t1 + t2, bound)
}

/// The first term alone controls `ψ(U)/|φ′(U)|`, the Van der Corput size of the tail.
pub fn far_tail_vdc_size(fp: &FarParams, a: f64, u: f64) -> f64 {
    let pp = PhaseParams::Far(*fp);
    fp.psi(u) / pp.phi_prime_unchecked(a, u).abs()
}

/// The `a` range covered by the stationary-point parametrization, used to
/// extend sweeps past both ends: `(a at the left end, a at the right end)`.
pub fn parametrized_a_range(params: &PhaseParams) -> Option<(f64, f64)> {
    match params {
        PhaseParams::Near(np) => {
            let (lo, hi) = np.domain();
            if lo >= hi {
                return None;
            }
            Some((np.f(lo) / lo, np.f(hi) / hi))
        }
        PhaseParams::Far(fp) => Some((fp.a_max(), 0.0)),
    }
}

/// Uniform grid of `n` points strictly inside `[lo, hi]`.
pub fn interior_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(two_nu: u32, eta: f64, gamma: f64) -> PhaseParams {
        PhaseParams::Near(NearParams::new(Order::from_two_nu(two_nu), eta, gamma).unwrap())
    }

    fn far(p: f64, s: f64, g: f64) -> PhaseParams {
        PhaseParams::Far(FarParams::new(p, s, g).unwrap())
    }

    #[test]
    fn f_examples() {
        // q → 1: radicals coincide
        let p = near(200, 60.0, 0.2);
        assert!(p.f(1.5).unwrap() < 1e-100);
        // q = 2 needs ν^{-η} = 1
        let p = PhaseParams::Near(NearParams { nu: Order::from_two_nu(2), eta: 1.0, gamma: 0.0, beta: 0.75, n_cut: 16.0 });
        assert!((p.f(1e8).unwrap() - 1.0).abs() < 1e-12);
        let p = far(1.0, 1.0, 1.0);
        let want = 6.0 / (15f64.sqrt() + 3f64.sqrt());
        assert!((p.f(2.0).unwrap() - want).abs() < 1e-15);
        assert!(p.f(1.0).is_err());
        assert!(near(200, 0.5, 0.2).f(1.0).is_err());
    }

    #[test]
    fn near_phi_prime_identity_and_stationary_point() {
        let p = near(100, 0.5, 0.2);
        let a = p.a_of_gamma();
        for i in 1..100 {
            let u = 1.0 + i as f64 * 0.01;
            let pv = p.phase(a, u).unwrap();
            let want = 50.0 * (p.f(u).unwrap() - a * u);
            assert!((pv.phi_prime - want).abs() <= 1e-9 * want.abs().max(1e-300));
            assert!(pv.psi > 0.0);
        }
        let p = near(200, 0.5, 0.25);
        let a = p.a_of_gamma();
        let u0 = 1.0 + 100f64.powf(-0.25);
        assert!(p.phase(a, u0).unwrap().phi_prime.abs() <= 1e-10 * 100.0);
    }

    #[test]
    fn near_phi_prime_matches_derivative_of_phi() {
        let p = near(64, 0.3, 0.1);
        let a = 0.7 * p.a_of_gamma();
        for &u in &[1.2, 1.35, 1.5] {
            let h = 1e-5;
            let fd = (p.phase(a, u + h).unwrap().phi - p.phase(a, u - h).unwrap().phi) / (2.0 * h);
            let d = p.phase(a, u).unwrap().phi_prime;
            assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "{fd} vs {d}");
        }
    }

    #[test]
    fn far_phi_prime_matches_derivative_of_phi() {
        let p = far(0.7, 3.0, 1.4);
        let a = p.a_of_gamma();
        for &u in &[6.5, 9.0, 20.0, 80.0] {
            let h = 1e-5 * u;
            let fd = (p.phase(a, u + h).unwrap().phi - p.phase(a, u - h).unwrap().phi) / (2.0 * h);
            let d = p.phase(a, u).unwrap().phi_prime;
            assert!((fd - d).abs() < 1e-6 * (1.0 + a * u), "{fd} vs {d}");
        }
    }

    #[test]
    fn far_stationary_point_and_a_max() {
        let p = far(1.0, 2.0, 1.0);
        let a = p.a_of_gamma();
        assert!(p.phase(a, 4.0).unwrap().phi_prime.abs() < 1e-10);
        for (pp, s) in [(0.1, 1.0), (1.0, 4.0), (10.0, 100.0), (3.0, 0.5)] {
            let FarParams { .. } = FarParams::new(pp, s, 1.0).unwrap();
            let fp = FarParams::new(pp, s, 1.0).unwrap();
            let at_edge = PhaseParams::Far(fp).f(2.0 * s).unwrap() / (2.0 * s);
            assert!((fp.a_max() - at_edge).abs() <= 1e-14 * at_edge);
            for g in [1.0, 1.5, 2.0] {
                let g = if s < 1.0 { 2.0 - g } else { g };
                let q = PhaseParams::Far(FarParams::new(pp, s, g).unwrap());
                assert!(q.a_of_gamma() <= fp.a_max() * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn far_psi_bound() {
        let p = far(1.0, 4.0, 1.0);
        let psi = p.phase(0.0, 8.0).unwrap().psi;
        assert!(psi <= 0.5);
        for i in 1..400 {
            let u = 4.0 + i as f64 * 0.1;
            assert!(p.phase(0.0, u).unwrap().psi <= 1.0 / (u - 4.0).sqrt());
        }
    }

    #[test]
    fn near_psi_positive_at_right_end() {
        // q = 1.5 at ν = 16 requires 16^{-η} = 1/2, η = 1/4.
        let p = near(32, 0.25, 0.1);
        let PhaseParams::Near(np) = p else { unreachable!() };
        assert!((np.q() - 1.5).abs() < 1e-15);
        let v = p.phase(0.0, 2.0 / 1.5).unwrap().psi;
        let u: f64 = 4.0 / 3.0;
        let want = 4.0 * 0.5f64.powf(0.75) * (u * 1.5).sqrt() / ((u * u - 1.0) * (4.0 - 1.0)).powf(0.25);
        assert!((v - want).abs() < 1e-14 * want);
    }

    #[test]
    fn partition_examples() {
        let PhaseParams::Near(np) = near(2, 2.0 / 3.0, 1.0 / 3.0) else { unreachable!() };
        assert!((np.xi() - 1.0 / 3.0).abs() < 1e-15);
        assert!((np.delta() - 1.0 / 6.0).abs() < 1e-15);
        let np = NearParams::new(Order::from_two_nu(64), 2.0 / 3.0, 1.0 / 3.0).unwrap();
        assert_eq!(np.region(), Region::G);
        assert_eq!(PhaseParams::Near(np).partition().segments.len(), 3);

        let part = far(1.0, 4.0, 1.0).partition();
        let b: Vec<(f64, f64, bool)> = part.segments.iter().map(|s| (s.lo, s.hi, s.empty)).collect();
        assert_eq!(b, vec![(8.0, 8.0, true), (8.0, 8.0, true), (8.0, 10.0, false), (10.0, f64::INFINITY, false)]);

        // ν = 10⁶, η = 0.1, γ = 0.3: 1 + ν^{−γ}/10 < 1 + ν^{−1/3}, so 𝒜₁ is empty
        // and three pieces carry mass.
        let np = NearParams::new(Order::from_two_nu(2_000_000), 0.1, 0.3).unwrap();
        assert_eq!(np.region(), Region::F);
        let part = PhaseParams::Near(np).partition();
        let labels: Vec<&str> = part.nonempty().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, vec!["A2", "A3", "A4"]);
        assert!(part.segments[0].empty);
    }

    #[test]
    fn near_derivatives_agree_with_finite_differences() {
        for (tn, eta, gamma) in [(64u32, 0.2, 0.1), (512, 1.0, 0.3), (2048, 0.05, 0.0), (200, 2.5, 0.2)] {
            let PhaseParams::Near(np) = near(tn, eta, gamma) else { unreachable!() };
            let (lo, hi) = np.domain();
            for u in interior_grid(lo, hi, 7) {
                let an = np.f_derivatives(u);
                let fd = near_f_finite_differences(&np, u);
                for (k, rel) in [1e-4, 1e-4, 5e-3].into_iter().enumerate() {
                    assert!((an[k] - fd[k]).abs() <= rel * an[k].abs(), "k={k} u={u}: {} vs {}", an[k], fd[k]);
                }
                assert!(an[0] <= 0.0 && an[1] >= 0.0 && an[2] <= 0.0);
            }
        }
    }

    #[test]
    fn stationary_point_matches_parametrization() {
        let p = near(400, 0.3, 0.2);
        let a = p.a_of_gamma();
        let us = p.stationary_point(a).unwrap();
        assert!((us - p.u0()).abs() < 1e-12);
        let p = far(2.0, 5.0, 1.3);
        let a = p.a_of_gamma();
        let us = p.stationary_point(a).unwrap();
        assert!((us - p.u0()).abs() < 1e-9 * us);
        assert!(p.stationary_point(10.0).is_none());
        assert!(p.stationary_point(-1.0).is_none());
    }

    #[test]
    fn bracket_empty_clip_is_zero() {
        let p = near(64, 0.5, 0.1);
        let b = bracket_integral(&p, 0.0, Some((3.0, 4.0))).unwrap();
        assert_eq!(b.magnitude, 0.0);
    }

    #[test]
    fn far_tail_matches_long_integration() {
        let fp = FarParams::new(1.0, 2.0, 1.0).unwrap();
        let p = PhaseParams::Far(fp);
        let a = p.a_of_gamma();
        let u = 40.0;
        let (tail, bound) = far_tail(&fp, a, u);
        assert!(bound < 1e-5);
        // ∫_u^U numerically plus the expansion at U must reproduce the expansion at u.
        let mut acc = BracketValue { value: Complex64::new(0.0, 0.0), magnitude: 0.0, est_error: 0.0, panels: 0, truncation: 0.0, tail_bound: 0.0 };
        add_segment(&p, a, u, 400.0, &BracketOptions { tol: 1e-11, ..BracketOptions::default() }, &mut acc).unwrap();
        let (tail2, _) = far_tail(&fp, a, 400.0);
        assert!((acc.value + tail2 - tail).norm() < 2.0 * bound + 1e-9, "{} vs {}", acc.value + tail2, tail);
    }

    #[test]
    fn far_bracket_is_stable_under_refinement() {
        let p = far(1.0, 4.0, 1.0);
        let a = p.a_of_gamma();
        let coarse = bracket_integral(&p, a, None).unwrap();
        let fine = bracket_integral_with(&p, a, None, &BracketOptions::default().refined()).unwrap();
        assert!(coarse.magnitude.is_finite() && coarse.magnitude > 0.0);
        assert!((coarse.magnitude - fine.magnitude).abs() <= 0.05 * fine.magnitude);
        assert!((coarse.value - fine.value).norm() < 1e-6);
    }

    #[test]
    fn phi_second_changes_sign_once() {
        let p = far(0.5, 3.0, 1.2);
        let a = p.a_of_gamma();
        assert!(phi_second_sign_changes(&p, a, 6.0, 200.0, 4096) <= 1);
    }
}
