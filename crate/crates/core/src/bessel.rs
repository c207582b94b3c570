//! Bessel functions `J_ν` of half-integer order, the normalized form
//! `J̃_ν(x) = √x J_ν(x)`, Barceló's asymptotic main term with its remainder,
//! and the classical size envelopes used to bound the operator pieces.
//!
//! Evaluation regions for `J_ν(x)`, with `n = ⌊ν⌋` and `μ = ν − n ∈ {0, ½}`:
//!
//! * `x² ≤ 4(ν + 1)`: ascending power series (at most a factor `e` of
//!   cancellation in this region).
//! * `x < ν` otherwise: Miller backward recurrence from an order well above
//!   `ν`, normalized by the quadratic Neumann sums
//!   `J₀² + 2ΣJ_k² = 1` resp. `Σ(2k+1) j_k² = 1`.
//! * `x ≥ ν`: forward recurrence, stable above the turning point, seeded by
//!   the spherical closed forms (`μ = ½`) or by `J₀, J₁` from Hankel's
//!   expansion (`x ≥ 25`) or Miller recurrence.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillatory::{integrate_oscillatory, PhasePair};

/// Order `ν = two_nu / 2` of a Bessel function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Order {
    two_nu: u32,
}

impl Order {
    /// Largest supported `2ν`.
    pub const MAX_TWO_NU: u32 = 4096;

    pub const fn from_two_nu(two_nu: u32) -> Self {
        Order { two_nu }
    }

    /// Builds an order from a real value, which must be a nonnegative
    /// multiple of ½.
    pub fn new(nu: f64) -> Result<Self> {
        let two = 2.0 * nu;
        if !(two >= 0.0) || (two - two.round()).abs() > 1e-9 || two.round() > u32::MAX as f64 {
            return Err(Error::domain(format!("order {nu} is not a nonnegative multiple of 1/2")));
        }
        Ok(Order { two_nu: two.round() as u32 })
    }

    pub const fn two_nu(self) -> u32 {
        self.two_nu
    }

    pub fn value(self) -> f64 {
        self.two_nu as f64 * 0.5
    }

    /// True for orders `k + ½`.
    pub const fn is_half_odd(self) -> bool {
        self.two_nu % 2 == 1
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_half_odd() {
            write!(f, "{}/2", self.two_nu)
        } else {
            write!(f, "{}", self.two_nu / 2)
        }
    }
}

/// A computed function value together with an estimate of its absolute error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselValue {
    pub value: f64,
    pub abs_error_bound: f64,
}

const EPS: f64 = f64::EPSILON;
const RESCALE_ABOVE: f64 = 1e150;
const RESCALE_BY: f64 = 1e-150;
const HANKEL_FROM: f64 = 25.0;

/// `J_ν(x)` for `x > 0` and `2ν ≤ 4096`.
pub fn bessel_j(nu: Order, x: f64) -> Result<BesselValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("bessel_j needs finite x > 0, got {x}")));
    }
    if nu.two_nu > Order::MAX_TWO_NU {
        return Err(Error::domain(format!("order 2ν = {} exceeds {}", nu.two_nu, Order::MAX_TWO_NU)));
    }
    let out = eval(nu, x);
    if !out.value.is_finite() {
        return Err(Error::Overflow(format!("J_{nu}({x}) left the representable range")));
    }
    Ok(out)
}

/// Value-only evaluation for hot loops. Panics are impossible for valid
/// `x > 0`; invalid input yields NaN.
#[inline]
pub(crate) fn j_value(nu: Order, x: f64) -> f64 {
    if !(x > 0.0) {
        return if x == 0.0 && nu.two_nu == 0 { 1.0 } else if x == 0.0 { 0.0 } else { f64::NAN };
    }
    eval(nu, x).value
}

/// `J̃_ν(x) = √x J_ν(x)`.
pub fn bessel_j_tilde(nu: Order, x: f64) -> Result<f64> {
    Ok(x.sqrt() * bessel_j(nu, x)?.value)
}

#[inline]
pub(crate) fn j_tilde_value(nu: Order, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x.sqrt() * j_value(nu, x)
}

fn eval(nu: Order, x: f64) -> BesselValue {
    let v = nu.value();
    if x * x <= 4.0 * (v + 1.0) {
        series(nu, x)
    } else if x < v {
        miller(nu, x, 1.0)
    } else if nu.is_half_odd() {
        forward_half_odd(nu, x)
    } else {
        forward_integer(nu, x)
    }
}

/// Independent evaluation by Miller recurrence started from roughly twice the
/// usual depth, used to cross-check the production path in every region.
pub fn bessel_j_refined(nu: Order, x: f64) -> Result<BesselValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("bessel_j needs finite x > 0, got {x}")));
    }
    Ok(miller(nu, x, 2.0))
}

fn ln_gamma_table() -> &'static [f64] {
    // ln Γ(1 + k/2) for k = 0..=MAX_TWO_NU + 2, Kahan-summed.
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let len = Order::MAX_TWO_NU as usize + 3;
        let mut t = vec![0.0; len];
        if len > 1 {
            t[1] = (PI.sqrt() / 2.0).ln();
        }
        for start in 0..2 {
            let (mut sum, mut comp) = (t[start], 0.0);
            let mut k = start;
            while k + 2 < len {
                let y = (1.0 + k as f64 / 2.0).ln() - comp;
                let s = sum + y;
                comp = (s - sum) - y;
                sum = s;
                k += 2;
                t[k] = sum;
            }
        }
        t
    })
}

/// `ln Γ(ν + 1)` for a half-integer order.
pub fn ln_gamma_order_plus_one(nu: Order) -> f64 {
    ln_gamma_table()[nu.two_nu as usize]
}

fn series(nu: Order, x: f64) -> BesselValue {
    let v = nu.value();
    let half = 0.5 * x;
    let lead = if v == 0.0 { 1.0 } else { (v * half.ln() - ln_gamma_order_plus_one(nu)).exp() };
    if lead == 0.0 {
        return BesselValue { value: 0.0, abs_error_bound: f64::MIN_POSITIVE };
    }
    let q = half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut abs_sum = lead;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (v + k));
        sum += term;
        abs_sum += term.abs();
        if term.abs() <= 0.25 * EPS * sum.abs() || k > 400.0 {
            break;
        }
    }
    // exp() turns the absolute rounding error of its argument into relative error.
    let lead_rel = if v == 0.0 { 0.0 } else { 2.0 * EPS * ((v * half.ln()).abs() + ln_gamma_order_plus_one(nu)) };
    BesselValue { value: sum, abs_error_bound: abs_sum * (4.0 * EPS * (1.0 + k.sqrt()) + lead_rel) }
}

fn start_order(n: usize, x: f64, depth: f64) -> usize {
    let top = (n as f64).max(x);
    let extra = depth * (240.0 * top.max(1.0)).sqrt() + 16.0 * depth;
    let m = (top + extra).ceil() as usize + 2;
    m + (m % 2)
}

/// Miller backward recurrence over orders `μ + k`, returning `J_{μ+n}(x)`.
fn miller(nu: Order, x: f64, depth: f64) -> BesselValue {
    let n = (nu.two_nu / 2) as usize;
    let half_odd = nu.is_half_odd();
    let mu = if half_odd { 0.5 } else { 0.0 };
    let top = start_order(n, x, depth);

    // hi = Ĵ_{μ+k+1}, cur = Ĵ_{μ+k}
    let mut hi = 0.0f64;
    let mut cur = 1.0f64;
    let mut at_n = if top == n { cur } else { 0.0 };
    let mut quad = 0.0f64; // Σ weight_k Ĵ_{μ+k}²
    let mut lin = 0.0f64; // Σ Ĵ_{2k} (integer case)
    let mut j_half = 0.0; // Ĵ_{1/2}
    let mut j_three_half = 0.0; // Ĵ_{3/2}
    let mut k = top;
    loop {
        let w = if half_odd { (2 * k + 1) as f64 } else if k == 0 { 1.0 } else { 2.0 };
        quad += w * cur * cur;
        if !half_odd && k.is_multiple_of(2) {
            lin += if k == 0 { cur } else { 2.0 * cur };
        }
        if half_odd && k == 1 {
            j_three_half = cur;
        }
        if k == 0 {
            if half_odd {
                j_half = cur;
            }
            break;
        }
        let lo = 2.0 * (mu + k as f64) / x * cur - hi;
        hi = cur;
        cur = lo;
        k -= 1;
        if k == n {
            at_n = cur;
        }
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            hi *= RESCALE_BY;
            at_n *= RESCALE_BY;
            quad *= RESCALE_BY * RESCALE_BY;
            lin *= RESCALE_BY;
            j_three_half *= RESCALE_BY;
        }
    }

    let scale = if half_odd {
        let mag = (2.0 * x / (PI * quad)).sqrt();
        let pre = (2.0 / (PI * x)).sqrt();
        let (s, c) = x.sin_cos();
        let exact_half = pre * s;
        let exact_three_half = pre * (s / x - c);
        let sign = if exact_half.abs() >= exact_three_half.abs() {
            (exact_half * j_half).signum()
        } else {
            (exact_three_half * j_three_half).signum()
        };
        sign * mag
    } else {
        lin.signum() / quad.sqrt()
    };
    let value = at_n * scale;
    let bound = 8.0 * EPS * (top + n + 8) as f64 * value.abs().max(if x >= nu.value() { 1.0 } else { 0.0 })
        + f64::MIN_POSITIVE;
    BesselValue { value, abs_error_bound: bound }
}

fn forward_half_odd(nu: Order, x: f64) -> BesselValue {
    let n = (nu.two_nu / 2) as usize;
    let (s, c) = x.sin_cos();
    let mut lo = s / x; // j_0
    let mut cur = s / (x * x) - c / x; // j_1
    let j = if n == 0 {
        lo
    } else {
        for k in 1..n {
            let next = (2 * k + 1) as f64 / x * cur - lo;
            lo = cur;
            cur = next;
        }
        cur
    };
    let pre = (2.0 * x / PI).sqrt();
    BesselValue { value: pre * j, abs_error_bound: 8.0 * EPS * (n + 4) as f64 }
}

/// `J₀(x)` and `J₁(x)` for `x ≥ 25` via Hankel's expansion.
fn hankel_j0_j1(x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let pre = (2.0 / (PI * x)).sqrt();
    let mut out = [0.0; 2];
    for (m, slot) in out.iter_mut().enumerate() {
        let four_mu2 = 4.0 * (m * m) as f64;
        let (mut p, mut q) = (1.0, 0.0);
        let mut term = 1.0f64;
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let kk = k as f64;
            term *= (four_mu2 - (2.0 * kk - 1.0).powi(2)) / (kk * 8.0 * x);
            if term.abs() > prev || term.abs() < 1e-18 {
                break;
            }
            prev = term.abs();
            match k % 4 {
                1 => q += term,
                2 => p -= term,
                3 => q -= term,
                _ => p += term,
            }
        }
        // χ = x − (m/2 + 1/4)π; expand cos(x − χ₀) with exact sin x, cos x.
        let chi0 = (m as f64 * 0.5 + 0.25) * PI;
        let (s0, c0) = chi0.sin_cos();
        let cos_chi = c * c0 + s * s0;
        let sin_chi = s * c0 - c * s0;
        *slot = pre * (p * cos_chi - q * sin_chi);
    }
    (out[0], out[1])
}

fn forward_integer(nu: Order, x: f64) -> BesselValue {
    let n = (nu.two_nu / 2) as usize;
    let (j0, j1) = if x >= HANKEL_FROM {
        hankel_j0_j1(x)
    } else {
        let a = miller(Order::from_two_nu(0), x, 1.0).value;
        let b = miller(Order::from_two_nu(2), x, 1.0).value;
        (a, b)
    };
    let value = match n {
        0 => j0,
        1 => j1,
        _ => {
            let (mut lo, mut cur) = (j0, j1);
            for k in 1..n {
                let next = 2.0 * k as f64 / x * cur - lo;
                lo = cur;
                cur = next;
            }
            cur
        }
    };
    BesselValue { value, abs_error_bound: 8.0 * EPS * (n + 8) as f64 }
}

/// Barceló's phase `θ(r) = √(r² − ν²) − ν arccos(ν/r) − π/4`, for `r > ν`.
pub fn theta(nu: Order, r: f64) -> Result<f64> {
    theta_real(nu.value(), r)
}

/// [`theta`] for a real (not necessarily half-integer) order.
pub fn theta_real(nu: f64, r: f64) -> Result<f64> {
    if !(r > nu) {
        return Err(Error::domain(format!("theta needs r > ν, got r = {r}, ν = {nu}")));
    }
    Ok(theta_unchecked(nu, r))
}

#[inline]
pub(crate) fn theta_unchecked(nu: f64, r: f64) -> f64 {
    let rad = ((r - nu) * (r + nu)).sqrt();
    rad - nu * rad.atan2(nu) - FRAC_PI_4
}

fn check_barcelo_domain(nu: Order, r: f64) -> Result<()> {
    let v = nu.value();
    if v <= 0.5 {
        return Err(Error::domain(format!("Barceló expansion needs ν > 1/2, got ν = {nu}")));
    }
    if !(r > v + v.cbrt()) {
        return Err(Error::domain(format!("Barceló expansion needs r > ν + ν^(1/3), got r = {r}, ν = {nu}")));
    }
    Ok(())
}

/// Main term `J_ν^B(r) = √(2/π) cos θ(r) / (r² − ν²)^{1/4}`.
pub fn barcelo_main(nu: Order, r: f64) -> Result<f64> {
    check_barcelo_domain(nu, r)?;
    Ok(barcelo_main_unchecked(nu.value(), r))
}

#[inline]
pub(crate) fn barcelo_main_unchecked(nu: f64, r: f64) -> f64 {
    let d = (r - nu) * (r + nu);
    (2.0 / PI).sqrt() * theta_unchecked(nu, r).cos() / d.sqrt().sqrt()
}

/// Remainder `h_ν = J_ν − J_ν^B` compared with its size envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Remainder {
    pub h: f64,
    /// `ν²(r² − ν²)^{−7/4} + 1/r` below `2ν`, `1/r` from `2ν` on.
    pub envelope: f64,
    pub ratio: f64,
}

pub fn remainder_envelope(nu: f64, r: f64) -> f64 {
    if r >= 2.0 * nu {
        1.0 / r
    } else {
        let d = (r - nu) * (r + nu);
        nu * nu * d.powf(-1.75) + 1.0 / r
    }
}

pub fn barcelo_remainder(nu: Order, r: f64) -> Result<Remainder> {
    check_barcelo_domain(nu, r)?;
    let j = bessel_j(nu, r)?.value;
    let h = j - barcelo_main_unchecked(nu.value(), r);
    let envelope = remainder_envelope(nu.value(), r);
    Ok(Remainder { h, envelope, ratio: h.abs() / envelope })
}

/// Bound for `|h_ν(νu)|²` on `u ∈ [1 + ν^{−2/3}, 2]`, up to a constant.
pub fn remainder_square_envelope(nu: f64, u: f64) -> f64 {
    let w = u * u - 1.0;
    nu.powi(-3) * w.powf(-3.5) + 2.0 * nu.powf(-2.5) * w.powf(-1.75) / u + 1.0 / (nu * nu * u * u)
}

/// Diagnostics for the classical size estimates of `J_ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEnvelopes {
    /// `J_ν(t) ≤ t^ν / (2^ν Γ(ν+1))` at every grid point of `[0, ν/2]`.
    pub small_arg_ok: bool,
    /// `∫_0^ν |J_ν(s)| ds`.
    pub l1_value: f64,
    /// Both transition-region envelopes hold with the frozen constants.
    pub transition_ok: bool,
    /// `sup |J̃_ν(s)| / ν^{1/6}` over `[ν, ν + ν^{1/3}]`.
    pub turning_constant: f64,
    /// `sup |J̃_ν(s)| (s − ν)^{1/4} / ν^{1/4}` over `[ν + ν^{1/3}, 2ν]`.
    pub transition_constant: f64,
}

const SMALL_ARG_POINTS: usize = 1000;
const TRANSITION_POINTS: usize = 2000;

pub fn classical_envelopes(nu: Order) -> Result<ClassicalEnvelopes> {
    let v = nu.value();
    if v <= 0.0 {
        return Err(Error::domain("classical envelopes need ν > 0"));
    }
    let lg = ln_gamma_order_plus_one(nu);
    let mut small_arg_ok = true;
    for i in 0..SMALL_ARG_POINTS {
        let t = 0.5 * v * i as f64 / (SMALL_ARG_POINTS - 1) as f64;
        if t == 0.0 {
            continue; // both sides vanish
        }
        let bound = (v * (0.5 * t).ln() - lg).exp();
        let j = bessel_j(nu, t)?;
        if j.value > bound * (1.0 + 1e-12) + j.abs_error_bound {
            small_arg_ok = false;
        }
    }

    let l1_value = l1_norm_below_order(nu)?;

    let mut turning_constant = 0.0f64;
    let lo = v;
    let mid = v + v.cbrt();
    for i in 0..TRANSITION_POINTS {
        let s = lo + (mid - lo) * i as f64 / (TRANSITION_POINTS - 1) as f64;
        let jt = j_tilde_value(nu, s).abs();
        turning_constant = turning_constant.max(jt / v.powf(1.0 / 6.0));
    }
    let mut transition_constant = 0.0f64;
    let hi = 2.0 * v;
    if hi > mid {
        for i in 0..TRANSITION_POINTS {
            let s = mid + (hi - mid) * i as f64 / (TRANSITION_POINTS - 1) as f64;
            let jt = j_tilde_value(nu, s).abs();
            transition_constant = transition_constant.max(jt * (s - v).powf(0.25) / v.powf(0.25));
        }
    }
    let transition_ok = turning_constant <= crate::frozen::TURNING_ENVELOPE_CONSTANT * 1.01
        && transition_constant <= crate::frozen::TRANSITION_ENVELOPE_CONSTANT * 1.01;

    Ok(ClassicalEnvelopes { small_arg_ok, l1_value, transition_ok, turning_constant, transition_constant })
}

/// `∫_0^ν |J_ν(s)| ds`, integrated in the variable `s = v²`.
pub fn l1_norm_below_order(nu: Order) -> Result<f64> {
    let v = nu.value();
    let integrand = move |w: f64| {
        let s = w * w;
        2.0 * w * j_value(nu, s).abs()
    };
    let pair = PhasePair::new(|_| 0.0, |_| 0.0, integrand, 0.0, v.sqrt())?;
    Ok(integrate_oscillatory(&pair, 1e-12)?.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_half(x: f64) -> f64 {
        (2.0 / (PI * x)).sqrt() * x.sin()
    }

    #[test]
    fn order_parsing() {
        assert_eq!(Order::new(1.5).unwrap().two_nu(), 3);
        assert!(Order::new(0.3).is_err());
        assert!(Order::new(-1.0).is_err());
        assert_eq!(Order::from_two_nu(5).to_string(), "5/2");
        assert_eq!(Order::from_two_nu(8).to_string(), "4");
    }

    #[test]
    fn closed_form_examples() {
        let half = Order::from_two_nu(1);
        let v = bessel_j(half, PI / 2.0).unwrap().value;
        assert!((v - 2.0 / PI).abs() < 1e-15);
        let three_half = Order::from_two_nu(3);
        let v = bessel_j(three_half, PI).unwrap().value;
        assert!((v - 2f64.sqrt() / PI).abs() < 1e-15);
        let jt = bessel_j_tilde(half, PI / 2.0).unwrap();
        assert!((jt - (2.0 / PI).sqrt()).abs() < 1e-15);
        let jt = bessel_j_tilde(three_half, PI).unwrap();
        assert!((jt - (2.0 / PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_j(Order::from_two_nu(2), 0.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(Order::from_two_nu(2), -1.0), Err(Error::Domain(_))));
        assert!(matches!(bessel_j(Order::from_two_nu(5000), 1.0), Err(Error::Domain(_))));
        assert!(matches!(theta(Order::from_two_nu(8), 4.0), Err(Error::Domain(_))));
        assert!(barcelo_main(Order::from_two_nu(1), 5.0).is_err());
        assert!(barcelo_main(Order::from_two_nu(2), 2.0).is_err());
    }

    #[test]
    fn theta_examples() {
        let v = theta(Order::from_two_nu(8), 4.0 * 2f64.sqrt()).unwrap();
        assert!((v - (4.0 - 5.0 * PI / 4.0)).abs() < 1e-14);
        let v = theta(Order::from_two_nu(20), 25.0).unwrap();
        // 40-digit reference: 10.53468550410766572485873718259600835144
        assert!((v - 10.534_685_504_107_666).abs() < 1e-12);
        let near = theta(Order::from_two_nu(6), 3.0 + 1e-12).unwrap();
        assert!((near + FRAC_PI_4).abs() < 1e-5);
    }

    #[test]
    fn barcelo_main_examples() {
        let r = 4.0 * 2f64.sqrt();
        let m = barcelo_main(Order::from_two_nu(8), r).unwrap();
        let want = (2.0 / PI).sqrt() * (4.0 - 5.0 * PI / 4.0).cos() / 2.0;
        assert!((m - want).abs() < 1e-14);
        assert!((m - 0.3978).abs() < 1e-4);
        let one = Order::from_two_nu(2);
        let v = barcelo_main(one, 2.0 + 1e-9).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn remainder_branches() {
        let nu = Order::from_two_nu(20);
        let far = barcelo_remainder(nu, 25.0).unwrap();
        assert!((far.envelope - 1.0 / 25.0).abs() < 1e-15);
        // 40-digit reference: h = -0.00104700125969447872, |h|·25 = 0.0261750314923
        assert!((far.h + 0.001_047_001_259_694_478_7).abs() < 1e-11);
        assert!((far.ratio - 0.026_175_031_492_362).abs() < 1e-9);
        let r = 10.0 + 10f64.cbrt() * 1.01;
        let near = barcelo_remainder(nu, r).unwrap();
        let d: f64 = r * r - 100.0;
        assert!((near.envelope - (100.0 * d.powf(-1.75) + 1.0 / r)).abs() < 1e-14);
        // 2ν belongs to the far branch
        let at = barcelo_remainder(nu, 20.0).unwrap();
        assert!((at.envelope - 0.05).abs() < 1e-15);
    }

    #[test]
    fn recurrence_consistency() {
        for two_nu in [3u32, 4, 9, 20, 41, 100, 257, 600] {
            let nu = Order::from_two_nu(two_nu);
            let lo = Order::from_two_nu(two_nu - 2);
            let hi = Order::from_two_nu(two_nu + 2);
            for i in 0..400 {
                let x = 0.05 + i as f64 * 0.9;
                let a = bessel_j(lo, x).unwrap().value;
                let b = bessel_j(hi, x).unwrap().value;
                let c = bessel_j(nu, x).unwrap().value;
                let rhs = 2.0 * nu.value() / x * c;
                let scale = a.abs().max(b.abs()).max(rhs.abs()).max(1e-300);
                assert!((a + b - rhs).abs() <= 1e-9 * scale, "ν={nu} x={x}: {a}+{b} vs {rhs}");
            }
        }
    }

    #[test]
    fn refined_path_agrees_within_bound() {
        for two_nu in [0u32, 1, 2, 7, 16, 33, 128, 513, 2048, 4096] {
            let nu = Order::from_two_nu(two_nu);
            for &x in &[0.3, 1.0, 7.5, 24.0, 26.0, 80.0, 300.0, 1000.0, 2100.0] {
                let a = bessel_j(nu, x).unwrap();
                let b = bessel_j_refined(nu, x).unwrap();
                assert!(
                    (a.value - b.value).abs() <= a.abs_error_bound.max(b.abs_error_bound),
                    "ν={nu} x={x}: {} vs {} (bound {})",
                    a.value,
                    b.value,
                    a.abs_error_bound
                );
                assert!(a.abs_error_bound <= 1e-10 * a.value.abs().max(1.0));
            }
        }
    }

    #[test]
    fn half_order_tilde_is_scaled_sine() {
        let nu = Order::from_two_nu(1);
        for i in 1..200 {
            let x = i as f64 * 0.37;
            let want = (2.0 / PI).sqrt() * x.sin();
            assert!((bessel_j_tilde(nu, x).unwrap() - want).abs() < 1e-13);
            assert!((bessel_j(nu, x).unwrap().value - closed_half(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn deep_below_turning_point_underflows_cleanly() {
        let nu = Order::from_two_nu(4096);
        let v = bessel_j(nu, 10.0).unwrap();
        assert!(v.value >= 0.0 && v.value < 1e-300);
        let v = bessel_j(nu, 1500.0).unwrap();
        assert!(v.value > 0.0 && v.value < 1e-20);
    }

    #[test]
    fn small_argument_envelope_example() {
        let env = classical_envelopes(Order::from_two_nu(4)).unwrap();
        assert!(env.small_arg_ok);
        let j = bessel_j(Order::from_two_nu(4), 1.0).unwrap().value;
        assert!(j <= 0.125);
    }
}
