//! Adaptive quadrature for `∫_a^b e^{iφ(u)} ψ(u) du` and empirical Van der
//! Corput constants.
//!
//! The interval is first bisected until no panel carries more than `π/4` of
//! phase, then every panel is integrated with a fixed Gauss–Legendre rule and
//! compared against the same rule on its two halves. Panels with the largest
//! disagreement are split until the summed disagreement meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

type Handle<'a> = Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>;

/// Phase `φ`, its derivative, and amplitude `ψ` on `[a, b]`.
///
/// The handles are called concurrently when sweeps run in parallel, so they
/// must be pure.
pub struct PhasePair<'a> {
    phi: Handle<'a>,
    phi_prime: Handle<'a>,
    psi: Handle<'a>,
    pub a: f64,
    pub b: f64,
}

impl<'a> PhasePair<'a> {
    pub fn new<P, D, S>(phi: P, phi_prime: D, psi: S, a: f64, b: f64) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'a,
        D: Fn(f64) -> f64 + Send + Sync + 'a,
        S: Fn(f64) -> f64 + Send + Sync + 'a,
    {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::input(format!("integration limits must be finite, got [{a}, {b}]")));
        }
        if a > b {
            return Err(Error::input(format!("integration limits out of order: [{a}, {b}]")));
        }
        Ok(PhasePair { phi: Box::new(phi), phi_prime: Box::new(phi_prime), psi: Box::new(psi), a, b })
    }

    pub fn phi(&self, u: f64) -> f64 {
        (self.phi)(u)
    }

    pub fn phi_prime(&self, u: f64) -> f64 {
        (self.phi_prime)(u)
    }

    pub fn psi(&self, u: f64) -> f64 {
        (self.psi)(u)
    }

    /// The same pair with `φ` replaced by `−φ`.
    pub fn conjugate(&self) -> PhasePair<'_> {
        PhasePair {
            phi: Box::new(move |u| -(self.phi)(u)),
            phi_prime: Box::new(move |u| -(self.phi_prime)(u)),
            psi: Box::new(move |u| (self.psi)(u)),
            a: self.a,
            b: self.b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub est_error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Panel budget; exceeding it is a non-convergence error.
    pub max_panels: usize,
    /// Upper bound on the initial panel length.
    pub max_panel_len: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { order: 10, max_panels: 400_000, max_panel_len: f64::INFINITY }
    }
}

pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-3;

pub fn integrate_oscillatory(p: &PhasePair<'_>, tol: f64) -> Result<QuadResult> {
    integrate_oscillatory_with(p, tol, &QuadOptions::default())
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn rule_on(p: &PhasePair<'_>, gl: &GaussLegendre, a: f64, b: f64) -> Result<Complex64> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        let u = mid + half * x;
        let amp = p.psi(u);
        let ph = p.phi(u);
        if amp.is_nan() || ph.is_nan() {
            return Err(Error::input(format!("phase or amplitude returned NaN at u = {u}")));
        }
        if amp != 0.0 {
            let (s, c) = ph.sin_cos();
            acc += Complex64::new(c, s) * (amp * w);
        }
    }
    Ok(acc * half)
}

fn make_panel(p: &PhasePair<'_>, gl: &GaussLegendre, a: f64, b: f64) -> Result<Panel> {
    let coarse = rule_on(p, gl, a, b)?;
    let m = 0.5 * (a + b);
    let fine = rule_on(p, gl, a, m)? + rule_on(p, gl, m, b)?;
    Ok(Panel { a, b, value: fine, err: (fine - coarse).norm() })
}

/// Splits `[a, b]` until each panel carries at most `π/4` of phase.
fn initial_panels(p: &PhasePair<'_>, opts: &QuadOptions) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut stack = vec![(p.a, p.b)];
    while let Some((a, b)) = stack.pop() {
        let h = b - a;
        let m = 0.5 * (a + b);
        let slope = [a, 0.75 * a + 0.25 * b, m, 0.25 * a + 0.75 * b, b]
            .iter()
            .map(|&u| p.phi_prime(u).abs())
            .fold(0.0f64, |acc, d| if d.is_nan() { acc } else { acc.max(d) });
        let jump = (p.phi(b) - p.phi(a)).abs();
        let fine_enough = slope * h <= FRAC_PI_4 && !(jump > FRAC_PI_4) && h <= opts.max_panel_len;
        if fine_enough || h <= 1e-14 * a.abs().max(b.abs()).max(1e-300) {
            out.push((a, b));
        } else {
            stack.push((m, b));
            stack.push((a, m));
        }
        if out.len() + stack.len() > opts.max_panels {
            return Err(Error::NonConvergence {
                best: QuadResult { value: Complex64::new(f64::NAN, f64::NAN), est_error: f64::INFINITY, panels: out.len() },
            });
        }
    }
    Ok(out)
}

pub fn integrate_oscillatory_with(p: &PhasePair<'_>, tol: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::input(format!("tolerance {tol} outside [{MIN_TOL}, {MAX_TOL}]")));
    }
    if p.a == p.b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), est_error: 0.0, panels: 0 });
    }
    let gl = if opts.order <= 64 { GaussLegendre::cached(opts.order.max(1)).clone() } else { GaussLegendre::new(opts.order) };

    let mut heap = BinaryHeap::new();
    for (a, b) in initial_panels(p, opts)? {
        heap.push(make_panel(p, &gl, a, b)?);
    }
    loop {
        let (value, est_error) = heap
            .iter()
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), pan| (v + pan.value, e + pan.err));
        let result = QuadResult { value, est_error, panels: heap.len() };
        if est_error <= tol * (1.0 + value.norm()) {
            return Ok(result);
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::NonConvergence { best: result });
        }
        // Split the worst panels in one batch to keep the summation cost linear.
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            let m = 0.5 * (worst.a + worst.b);
            if m <= worst.a || m >= worst.b {
                // Cannot split further; keep the panel as is.
                heap.push(Panel { err: 0.0, ..worst });
                continue;
            }
            heap.push(make_panel(p, &gl, worst.a, m)?);
            heap.push(make_panel(p, &gl, m, worst.b)?);
        }
    }
}

/// Outcome of one Van der Corput measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcReport {
    /// `|∫ e^{iφ} ψ|`.
    pub lhs: f64,
    /// `ψ(a) / λ`.
    pub bound: f64,
    #[serde(rename = "empirical_C")]
    pub empirical_c: f64,
}

pub const VALIDATION_POINTS: usize = 512;
const VDC_TOL: f64 = 1e-10;

/// Checks the first-derivative hypotheses on a 512-point grid.
pub fn validate_vdc_hypotheses(p: &PhasePair<'_>, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::input(format!("lambda must be positive, got {lambda}")));
    }
    let n = VALIDATION_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| p.a + (p.b - p.a) * i as f64 / (n - 1) as f64).collect();
    let d: Vec<f64> = grid.iter().map(|&u| p.phi_prime(u)).collect();
    let s: Vec<f64> = grid.iter().map(|&u| p.psi(u)).collect();
    if d.iter().chain(&s).any(|v| v.is_nan()) {
        return Err(Error::input("phase derivative or amplitude returned NaN on the validation grid"));
    }
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = 1e-12 * scale;
    let up = d.windows(2).all(|w| w[1] >= w[0] - slack);
    let down = d.windows(2).all(|w| w[1] <= w[0] + slack);
    if !(up || down) {
        return Err(Error::Hypothesis("phi' is not monotone on [a, b]".into()));
    }
    if let Some(u) = grid.iter().zip(&d).find(|(_, v)| v.abs() < lambda * (1.0 - 1e-12)).map(|(u, _)| *u) {
        return Err(Error::Hypothesis(format!("|phi'| < lambda at u = {u}")));
    }
    if let Some(u) = grid.iter().zip(&s).find(|(_, v)| !(**v > 0.0)).map(|(u, _)| *u) {
        return Err(Error::Hypothesis(format!("psi is not positive at u = {u}")));
    }
    let s_scale = s.iter().fold(0.0f64, |m, v| m.max(*v));
    if let Some(w) = grid.windows(2).zip(s.windows(2)).find(|(_, v)| v[1] > v[0] + 1e-12 * s_scale) {
        return Err(Error::Hypothesis(format!("psi is not nonincreasing near u = {}", w.0[0])));
    }
    Ok(())
}

/// Measures `|∫ e^{iφ}ψ| / (ψ(a)/λ)` after validating the hypotheses.
pub fn vdc_check(p: &PhasePair<'_>, lambda: f64) -> Result<VdcReport> {
    validate_vdc_hypotheses(p, lambda)?;
    let bound = p.psi(p.a) / lambda;
    if p.a == p.b {
        return Ok(VdcReport { lhs: 0.0, bound, empirical_c: 0.0 });
    }
    let lhs = integrate_oscillatory(p, VDC_TOL)?.value.norm();
    Ok(VdcReport { lhs, bound, empirical_c: lhs / bound })
}

/// Running supremum of empirical Van der Corput constants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VdcFamily {
    pub sup: f64,
    pub count: usize,
}

impl VdcFamily {
    pub fn record(&mut self, r: &VdcReport) {
        self.sup = self.sup.max(r.empirical_c);
        self.count += 1;
    }

    pub fn merge(mut self, other: VdcFamily) -> VdcFamily {
        self.sup = self.sup.max(other.sup);
        self.count += other.count;
        self
    }
}

/// Amplitudes of the canonical test family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Amplitude {
    One,
    ExpDecay,
    InvSqrt,
}

impl Amplitude {
    pub const ALL: [Amplitude; 3] = [Amplitude::One, Amplitude::ExpDecay, Amplitude::InvSqrt];

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Amplitude::One => 1.0,
            Amplitude::ExpDecay => (-u).exp(),
            Amplitude::InvSqrt => 1.0 / (1.0 + u).sqrt(),
        }
    }
}

/// One member `φ(u) = λu^k` of the canonical family on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcCase {
    pub k: u32,
    pub scale: f64,
    pub amplitude: Amplitude,
    pub a: f64,
    pub b: f64,
}

impl VdcCase {
    /// Smallest `|φ′|` on `[a, b]`.
    pub fn lambda(&self) -> f64 {
        self.scale * self.k as f64 * self.a.powi(self.k as i32 - 1)
    }

    pub fn pair(&self) -> Result<PhasePair<'static>> {
        let (k, c, amp) = (self.k as i32, self.scale, self.amplitude);
        PhasePair::new(
            move |u| c * u.powi(k),
            move |u| c * k as f64 * u.powi(k - 1),
            move |u| amp.eval(u),
            self.a,
            self.b,
        )
    }

    pub fn measure(&self) -> Result<VdcReport> {
        vdc_check(&self.pair()?, self.lambda())
    }
}

const FAMILY_ENDPOINTS: [f64; 8] = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];

/// All cases of `φ = λu^k`, `k ∈ {1,2,3}`, `λ ∈ {1,10,100}`, three amplitudes,
/// and intervals with endpoints in `{0, ¼, ½, 1, 3/2, 2, 3, 4}` on which
/// `|φ′|` stays away from zero.
pub fn canonical_family() -> Vec<VdcCase> {
    let mut out = Vec::new();
    for k in 1..=3u32 {
        for scale in [1.0, 10.0, 100.0] {
            for amplitude in Amplitude::ALL {
                for (i, &a) in FAMILY_ENDPOINTS.iter().enumerate() {
                    if k > 1 && a == 0.0 {
                        continue;
                    }
                    for &b in &FAMILY_ENDPOINTS[i + 1..] {
                        out.push(VdcCase { k, scale, amplitude, a, b });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(lambda: f64, a: f64, b: f64) -> PhasePair<'static> {
        PhasePair::new(move |u| lambda * u, move |_| lambda, |_| 1.0, a, b).unwrap()
    }

    #[test]
    fn linear_phase_closed_form() {
        let r = integrate_oscillatory(&linear(10.0, 0.0, 1.0), 1e-12).unwrap();
        let i = Complex64::i();
        let want = ((i * 10.0).exp() - 1.0) / (i * 10.0);
        assert!((r.value - want).norm() < 1e-13);
        assert!((r.value.norm() - 2.0 * 5f64.sin().abs() / 10.0).abs() < 1e-13);
    }

    #[test]
    fn no_oscillation() {
        let p = PhasePair::new(|_| 0.0, |_| 0.0, |u| u, 0.0, 1.0).unwrap();
        let r = integrate_oscillatory(&p, 1e-12).unwrap();
        assert!((r.value.re - 0.5).abs() < 1e-15 && r.value.im.abs() < 1e-15);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = integrate_oscillatory(&linear(3.0, 1.0, 1.0), 1e-8).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        let v = vdc_check(&linear(3.0, 1.0, 1.0), 3.0).unwrap();
        assert_eq!(v.empirical_c, 0.0);
    }

    #[test]
    fn nan_handle_is_input_error() {
        let p = PhasePair::new(|u| u, |_| 1.0, |u: f64| (u - 2.0).sqrt(), 0.0, 1.0).unwrap();
        assert!(matches!(integrate_oscillatory(&p, 1e-8), Err(Error::Input(_))));
    }

    #[test]
    fn tolerance_range_enforced() {
        assert!(integrate_oscillatory(&linear(1.0, 0.0, 1.0), 1e-14).is_err());
        assert!(integrate_oscillatory(&linear(1.0, 0.0, 1.0), 1e-2).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let p = PhasePair::new(|_| 0.0, |_| 0.0, |u: f64| u.powf(-0.9), 0.0, 1.0).unwrap();
        let opts = QuadOptions { max_panels: 20, ..QuadOptions::default() };
        match integrate_oscillatory_with(&p, 1e-12, &opts) {
            Err(Error::NonConvergence { best }) => assert!(best.panels >= 20 && best.value.re > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn vdc_examples() {
        let v = vdc_check(&linear(10.0, 0.0, 1.0), 10.0).unwrap();
        assert!((v.empirical_c - 2.0 * 5f64.sin().abs()).abs() < 1e-12);
        let p = PhasePair::new(|u| 10.0 * u, |_| 10.0, |u: f64| (-u).exp(), 0.0, 1.0).unwrap();
        let v = vdc_check(&p, 10.0).unwrap();
        let z = Complex64::new(-1.0, 10.0);
        let exact = ((z).exp() - 1.0) / z;
        assert!((v.lhs - exact.norm()).abs() < 1e-12);
    }

    #[test]
    fn vdc_rejects_bad_hypotheses() {
        let p = PhasePair::new(|u: f64| u.sin(), |u: f64| u.cos() + 2.0, |_| 1.0, 0.0, 10.0).unwrap();
        match vdc_check(&p, 0.5) {
            Err(Error::Hypothesis(m)) => assert!(m.contains("monotone")),
            other => panic!("{other:?}"),
        }
        let p = PhasePair::new(|u| u, |_| 1.0, |u| u, 0.5, 1.0).unwrap();
        assert!(matches!(vdc_check(&p, 1.0), Err(Error::Hypothesis(m)) if m.contains("nonincreasing")));
        let p = PhasePair::new(|u| u, |_| 1.0, |_| 0.0, 0.5, 1.0).unwrap();
        assert!(matches!(vdc_check(&p, 1.0), Err(Error::Hypothesis(m)) if m.contains("positive")));
        assert!(matches!(vdc_check(&linear(1.0, 0.0, 1.0), 2.0), Err(Error::Hypothesis(m)) if m.contains("lambda")));
    }

    #[test]
    fn canonical_family_satisfies_hypotheses() {
        let fam = canonical_family();
        assert!(fam.len() > 500);
        let mut sup = VdcFamily::default();
        for c in &fam {
            sup.record(&c.measure().unwrap());
        }
        assert!(sup.sup.is_finite() && sup.sup > 1.0 && sup.sup < 10.0);
    }
}
