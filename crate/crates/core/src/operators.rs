//! Discretized `T_ν g(r) = ∫_I e^{it(r)s²} J̃_ν(rs) s^{−α} g(s) ds` and its six
//! pieces, with Schur bounds, power-iteration norms, and adversarial
//! time fields.
//!
//! Piece supports in `x = rs` are half-open: `T1` on `[0, ν)`, `T2` on
//! `[ν, ν + ν^{2/3})`, `T3`/`T4` on `[ν + ν^{2/3}, 2ν)`, `T5`/`T6` on
//! `[2ν, ∞)`. `T3` and `T5` carry the remainder `h̃_ν = J̃_ν − J̃_ν^B`,
//! `T4` and `T6` the main term `J̃_ν^B`.
//!
//! The discrete operator acts between `ℓ²(w)` on the s-nodes and `ℓ²(ρ)` on
//! the r-nodes; its norm is the spectral norm of `D_ρ^{1/2} K D_w^{−1/2}`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{barcelo_main_unchecked, j_tilde_value, remainder_envelope, Order};
use crate::error::{Error, Result};
use crate::oscillatory::{integrate_oscillatory_with, PhasePair, QuadOptions};
use crate::quadrature::{composite, midpoint_unit};
use crate::report::{Gate, Row, SlopeFit, SweepReport, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Piece {
    Full,
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl Piece {
    pub const ALL: [Piece; 7] = [Piece::Full, Piece::T1, Piece::T2, Piece::T3, Piece::T4, Piece::T5, Piece::T6];
    pub const PIECES: [Piece; 6] = [Piece::T1, Piece::T2, Piece::T3, Piece::T4, Piece::T5, Piece::T6];

    /// Whether the piece uses Barceló's expansion (needs `ν ≥ 1`).
    pub fn uses_barcelo(self) -> bool {
        matches!(self, Piece::T3 | Piece::T4 | Piece::T5 | Piece::T6)
    }

    /// Support `[lo, hi)` in `x = rs`.
    pub fn support(self, nu: f64) -> (f64, f64) {
        let mid = nu + nu.powf(2.0 / 3.0);
        match self {
            Piece::Full => (0.0, f64::INFINITY),
            Piece::T1 => (0.0, nu),
            Piece::T2 => (nu, mid),
            Piece::T3 | Piece::T4 => (mid, 2.0 * nu),
            Piece::T5 | Piece::T6 => (2.0 * nu, f64::INFINITY),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Piece::Full => "full",
            Piece::T1 => "t1",
            Piece::T2 => "t2",
            Piece::T3 => "t3",
            Piece::T4 => "t4",
            Piece::T5 => "t5",
            Piece::T6 => "t6",
        }
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Piece {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Piece::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown piece '{s}' (expected full, t1..t6)")))
    }
}

/// Kernel amplitude `B(x)` of a piece, zero off its support.
pub fn piece_amplitude(piece: Piece, nu: Order, x: f64) -> f64 {
    let v = nu.value();
    let (lo, hi) = piece.support(v);
    if !(x >= lo && x < hi) || x <= 0.0 {
        return 0.0;
    }
    match piece {
        Piece::Full | Piece::T1 | Piece::T2 => j_tilde_value(nu, x),
        Piece::T4 | Piece::T6 => x.sqrt() * barcelo_main_unchecked(v, x),
        Piece::T3 | Piece::T5 => j_tilde_value(nu, x) - x.sqrt() * barcelo_main_unchecked(v, x),
    }
}

/// Quadrature nodes with positive weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: weights.len() });
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::input("grid nodes must be strictly increasing"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::input("grid weights must be positive"));
        }
        Ok(Grid { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `n` midpoints of `(0, 1]` with equal weights.
    pub fn r_uniform(n: usize) -> Self {
        let (nodes, weights) = midpoint_unit(n);
        Grid { nodes, weights }
    }

    /// Composite Gauss–Legendre nodes on `[lo, hi]`.
    pub fn s_panels(lo: f64, hi: f64, max_panel: f64, order: usize) -> Self {
        if !(lo < hi) {
            return Grid { nodes: Vec::new(), weights: Vec::new() };
        }
        let (nodes, weights) = composite(lo, hi, max_panel, order);
        Grid { nodes, weights }
    }

    /// The s-grid rule: panels no longer than `min(1, π/(2 S_max T_max))`.
    pub fn s_for_interval(interval: (f64, f64), t_max: f64, order: usize) -> Self {
        let (lo, hi) = interval;
        let len = (PI / (2.0 * hi * t_max)).min(1.0);
        Grid::s_panels(lo, hi, len, order)
    }
}

/// Largest time in the default t-grid for `I = [s_min, s_max]`.
///
/// Focusing times `r/(2s)` with `r ≤ 1` reach `1/(2 s_min)`; the grid covers
/// `max(4/s_min², 1/s_min)` so those are included.
pub fn default_t_max(s_min: f64) -> f64 {
    let s = s_min.max(1e-12);
    (4.0 / (s * s)).max(1.0 / s).clamp(1e-4, 1e4)
}

/// Zero, then `n/2` uniform and `n/2` geometric points up to `t_max`.
pub fn default_t_grid(t_max: f64, n: usize) -> Vec<f64> {
    let half = (n.saturating_sub(1) / 2).max(1);
    let mut t = vec![0.0];
    for k in 1..=half {
        t.push(t_max * k as f64 / half as f64);
    }
    let t_min = t_max * 1e-4;
    for k in 0..half {
        t.push(t_min * (t_max / t_min).powf(k as f64 / half as f64));
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub piece: Piece,
    pub nu: Order,
    pub interval: (f64, f64),
    pub alpha: f64,
    /// `t(r_j)` on the r-grid; empty means `t ≡ 0`.
    pub t_field: Vec<f64>,
}

impl KernelSpec {
    pub fn new(piece: Piece, nu: Order, interval: (f64, f64), alpha: f64) -> Self {
        KernelSpec { piece, nu, interval, alpha, t_field: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.piece.uses_barcelo() && self.nu.value() < 1.0 {
            return Err(Error::config(format!("piece {} needs ν ≥ 1, got ν = {}", self.piece, self.nu)));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::config(format!("α must lie in (0, 1/2), got {}", self.alpha)));
        }
        let (lo, hi) = self.interval;
        if !(lo >= 0.0) || !hi.is_finite() {
            return Err(Error::config(format!("interval [{lo}, {hi}] must be finite and nonnegative")));
        }
        Ok(())
    }
}

/// Amplitudes `B(r_j s_i) χ(r_j s_i) s_i^{−α}` without time factor or weights.
#[derive(Clone, Debug)]
pub struct BaseKernel {
    pub piece: Piece,
    pub nu: Order,
    pub alpha: f64,
    pub s_grid: Grid,
    pub r_grid: Grid,
    amp: Vec<f64>,
}

impl BaseKernel {
    pub fn new(piece: Piece, nu: Order, alpha: f64, s_grid: &Grid, r_grid: &Grid) -> Self {
        let cols = s_grid.len();
        let amp: Vec<f64> = r_grid
            .nodes
            .par_iter()
            .flat_map_iter(|&r| {
                s_grid.nodes.iter().map(move |&s| piece_amplitude(piece, nu, r * s) * s.powf(-alpha))
            })
            .collect();
        debug_assert_eq!(amp.len(), cols * r_grid.len());
        BaseKernel { piece, nu, alpha, s_grid: s_grid.clone(), r_grid: r_grid.clone(), amp }
    }

    /// Restricts a full-kernel base to a piece by masking its support, reusing
    /// the Bessel values where they coincide.
    pub fn piece_from_full(full: &BaseKernel, piece: Piece) -> Self {
        let cols = full.s_grid.len();
        let v = full.nu.value();
        let (lo, hi) = piece.support(v);
        let mut amp = full.amp.clone();
        for (j, &r) in full.r_grid.nodes.iter().enumerate() {
            for (i, &s) in full.s_grid.nodes.iter().enumerate() {
                let x = r * s;
                let k = j * cols + i;
                if !(x >= lo && x < hi) {
                    amp[k] = 0.0;
                } else if piece.uses_barcelo() {
                    let main = x.sqrt() * barcelo_main_unchecked(v, x) * s.powf(-full.alpha);
                    amp[k] = match piece {
                        Piece::T4 | Piece::T6 => main,
                        _ => amp[k] - main,
                    };
                }
            }
        }
        BaseKernel { piece, nu: full.nu, alpha: full.alpha, s_grid: full.s_grid.clone(), r_grid: full.r_grid.clone(), amp }
    }

    pub fn rows(&self) -> usize {
        self.r_grid.len()
    }

    pub fn cols(&self) -> usize {
        self.s_grid.len()
    }

    pub fn amplitude(&self, j: usize, i: usize) -> f64 {
        self.amp[j * self.cols() + i]
    }

    pub fn is_zero(&self) -> bool {
        self.amp.iter().all(|a| *a == 0.0)
    }

    /// The operator `K[j,i] = e^{i t_j s_i²} amp[j,i] w_i`.
    pub fn with_time(&self, t_field: &[f64]) -> Result<DiscreteOperator> {
        let (rows, cols) = (self.rows(), self.cols());
        if !t_field.is_empty() && t_field.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: t_field.len() });
        }
        let s = &self.s_grid;
        let matrix: Vec<Complex64> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|j| {
                let t = t_field.get(j).copied().unwrap_or(0.0);
                (0..cols).map(move |i| {
                    let a = self.amp[j * cols + i] * s.weights[i];
                    if a == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::from_polar(a, t * s.nodes[i] * s.nodes[i])
                    }
                })
            })
            .collect();
        Ok(DiscreteOperator { rows, cols, matrix, s_grid: self.s_grid.clone(), r_grid: self.r_grid.clone() })
    }
}

/// Dense kernel with quadrature weights folded into the columns.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteOperator {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `K[j, i]`.
    pub matrix: Vec<Complex64>,
    pub s_grid: Grid,
    pub r_grid: Grid,
}

pub fn build_kernel(spec: &KernelSpec, s_grid: &Grid, r_grid: &Grid) -> Result<DiscreteOperator> {
    spec.validate()?;
    BaseKernel::new(spec.piece, spec.nu, spec.alpha, s_grid, r_grid).with_time(&spec.t_field)
}

impl DiscreteOperator {
    /// Wraps a raw matrix with counting measures on both sides.
    pub fn from_matrix(rows: usize, cols: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: matrix.len() });
        }
        let unit = |n: usize| Grid { nodes: (0..n).map(|k| k as f64).collect(), weights: vec![1.0; n] };
        Ok(DiscreteOperator { rows, cols, matrix, s_grid: unit(cols), r_grid: unit(rows) })
    }

    pub fn entry(&self, j: usize, i: usize) -> Complex64 {
        self.matrix[j * self.cols + i]
    }

    /// `(Kg)_j = Σ_i K[j,i] g_i`.
    pub fn apply(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if g.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: g.len() });
        }
        Ok(self.matrix.par_chunks(self.cols.max(1)).take(self.rows).map(|row| dot(row, g)).collect())
    }

    /// Matrix of the operator between unweighted ℓ² spaces:
    /// `A[j,i] = √ρ_j K[j,i] / √w_i`.
    pub fn normalized(&self) -> NormalizedOperator {
        let sr: Vec<f64> = self.r_grid.weights.iter().map(|w| w.sqrt()).collect();
        let sw: Vec<f64> = self.s_grid.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut a = self.matrix.clone();
        for j in 0..self.rows {
            for i in 0..self.cols {
                a[j * self.cols + i] *= sr[j] * sw[i];
            }
        }
        NormalizedOperator { rows: self.rows, cols: self.cols, a }
    }

    /// Writes the matrix in the GSOP debug format: a 32-byte header
    /// (`b"GSOP"`, version u32, rows u64, cols u64, 8 reserved bytes), then
    /// row-major little-endian `(re, im)` f64 pairs.
    pub fn write_gsop<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = [0u8; 32];
        header[..4].copy_from_slice(GSOP_MAGIC);
        header[4..8].copy_from_slice(&GSOP_VERSION.to_le_bytes());
        header[8..16].copy_from_slice(&(self.rows as u64).to_le_bytes());
        header[16..24].copy_from_slice(&(self.cols as u64).to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.matrix.len() * 16);
        for z in &self.matrix {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn dump_gsop(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_gsop(std::io::BufWriter::new(f))
    }
}

pub const GSOP_MAGIC: &[u8; 4] = b"GSOP";
pub const GSOP_VERSION: u32 = 1;

/// Reads a GSOP dump back as `(rows, cols, matrix)`.
pub fn read_gsop<R: Read>(mut r: R) -> Result<(usize, usize, Vec<Complex64>)> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[..4] != GSOP_MAGIC {
        return Err(Error::input("not a GSOP file"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != GSOP_VERSION {
        return Err(Error::input(format!("unsupported GSOP version {version}")));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes")) as usize;
    let mut data = vec![0u8; rows * cols * 16];
    r.read_exact(&mut data)?;
    let matrix = data
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    Ok((rows, cols, matrix))
}

fn dot(row: &[Complex64], g: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (k, x) in row.iter().zip(g) {
        re += k.re * x.re - k.im * x.im;
        im += k.re * x.im + k.im * x.re;
    }
    Complex64::new(re, im)
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `D_ρ^{1/2} K D_w^{−1/2}` as a dense matrix.
#[derive(Clone, Debug)]
pub struct NormalizedOperator {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Complex64>,
}

impl NormalizedOperator {
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.a.par_chunks(self.cols.max(1)).take(self.rows).map(|row| dot(row, x)).collect()
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (j, yj) in y.iter().enumerate() {
            let row = &self.a[j * self.cols..(j + 1) * self.cols];
            for (o, k) in out.iter_mut().zip(row) {
                *o += k.conj() * yj;
            }
        }
        out
    }
}

/// Schur bound for `‖K‖²`: with `A` the normalized matrix,
/// `‖A‖² = ‖AA*‖ ≤ max_u Σ_y |A[u,y]| Σ_x |A[x,y]|`.
pub fn schur_bound(op: &DiscreteOperator) -> f64 {
    let n = op.normalized();
    let col_sums: Vec<f64> =
        (0..n.cols).map(|i| (0..n.rows).map(|j| n.a[j * n.cols + i].norm()).sum::<f64>()).collect();
    (0..n.rows)
        .map(|u| (0..n.cols).map(|y| n.a[u * n.cols + y].norm() * col_sums[y]).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Settings for power iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions { tol: 1e-8, max_iter: 500, restarts: 3 }
    }
}

/// Largest singular value and its right singular vector.
#[derive(Clone, Debug)]
pub struct PowerResult {
    pub sigma: f64,
    pub vector: Vec<Complex64>,
    pub iterations: usize,
    /// `‖A*A x − σ²x‖ / σ²`.
    pub residual: f64,
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn power_from(a: &NormalizedOperator, start: Vec<Complex64>, opts: &PowerOptions) -> PowerResult {
    let mut x = start;
    let nx = norm2(&x);
    let zero = PowerResult { sigma: 0.0, vector: vec![Complex64::new(0.0, 0.0); a.cols], iterations: 0, residual: 0.0 };
    if nx == 0.0 {
        return zero;
    }
    x.iter_mut().for_each(|z| *z /= nx);
    let mut lambda = 0.0f64;
    let mut it = 0;
    let mut residual = f64::INFINITY;
    while it < opts.max_iter {
        it += 1;
        let y = a.apply(&x);
        let z = a.apply_adjoint(&y);
        let l = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
        let nz = norm2(&z);
        if nz == 0.0 {
            return zero;
        }
        residual = (z.iter().zip(&x).map(|(zi, xi)| (zi - xi * l).norm_sqr()).sum::<f64>()).sqrt() / l.max(1e-300);
        let done = (l - lambda).abs() <= opts.tol * l;
        lambda = lambda.max(l);
        x = z.into_iter().map(|v| v / nz).collect();
        if done {
            break;
        }
    }
    // Rayleigh quotient of the final vector.
    let y = a.apply(&x);
    let l = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
    PowerResult { sigma: l.max(0.0).sqrt(), vector: x, iterations: it, residual }
}

/// Power iteration on `A*A` with seeded random restarts plus an optional warm start.
pub fn power_iteration(
    a: &NormalizedOperator,
    warm: Option<&[Complex64]>,
    opts: &PowerOptions,
    rng: &mut ChaCha8Rng,
) -> PowerResult {
    let mut best: Option<PowerResult> = None;
    let mut starts: Vec<Vec<Complex64>> = Vec::new();
    if let Some(w) = warm {
        starts.push(w.to_vec());
    }
    for _ in 0..opts.restarts.max(if warm.is_some() { 0 } else { 1 }) {
        starts.push(random_vector(a.cols, rng));
    }
    for s in starts {
        let r = power_from(a, s, opts);
        if best.as_ref().is_none_or(|b| r.sigma > b.sigma) {
            best = Some(r);
        }
    }
    best.expect("at least one start")
}

/// Discrete operator norm (`ℓ²(w) → ℓ²(ρ)`) by power iteration.
pub fn operator_norm(op: &DiscreteOperator, opts: &PowerOptions, seed: u64) -> PowerResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    power_iteration(&op.normalized(), None, opts, &mut rng)
}

/// Largest entrywise gap between the full kernel and the sum of the six pieces,
/// scaled by `1 + max |full entry|`.
pub fn decompose_check(nu: Order, s_grid: &Grid, r_grid: &Grid, t_field: &[f64], alpha: f64) -> Result<f64> {
    if nu.value() < 1.0 {
        return Err(Error::config("decomposition check needs ν ≥ 1"));
    }
    let full = BaseKernel::new(Piece::Full, nu, alpha, s_grid, r_grid).with_time(t_field)?;
    let pieces: Vec<DiscreteOperator> = Piece::PIECES
        .iter()
        .map(|&p| BaseKernel::new(p, nu, alpha, s_grid, r_grid).with_time(t_field))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..full.matrix.len() {
        let sum: Complex64 = pieces.iter().map(|p| p.matrix[k]).sum();
        worst = worst.max((full.matrix[k] - sum).norm());
        scale = scale.max(full.matrix[k].norm());
    }
    Ok(worst / (1.0 + scale))
}

/// Lower bound for the maximal operator norm with its witnesses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower_bound: f64,
    pub iterations: usize,
    pub residual: f64,
    pub t_field_used: Vec<f64>,
    /// Maximizing datum in `ℓ²(w)`-normalized coordinates (`G_i = √w_i g_i`).
    #[serde(skip)]
    pub datum: Vec<Complex64>,
    /// Best value after each round.
    pub history: Vec<f64>,
}

/// Settings for the alternating maximization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub rounds: usize,
    pub power: PowerOptions,
    /// Focusing seeds `t(r) = r/(2 s_c)` for this many centres `s_c ∈ I`.
    pub focus_seeds: usize,
    /// Golden-section steps around each per-row argmax.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { rounds: 4, power: PowerOptions::default(), focus_seeds: 3, refine_steps: 12, seed: 0x5eed }
    }
}

/// Per-row chirp sums `F_j(t) = Σ_i amp[j,i] √w_i G_i e^{i t s_i²}`.
struct ChirpRows<'a> {
    base: &'a BaseKernel,
    coeff: Vec<Vec<(usize, Complex64)>>,
}

impl<'a> ChirpRows<'a> {
    fn new(base: &'a BaseKernel, datum: &[Complex64]) -> Self {
        let cols = base.cols();
        let sw: Vec<f64> = base.s_grid.weights.iter().map(|w| w.sqrt()).collect();
        let coeff = (0..base.rows())
            .map(|j| {
                (0..cols)
                    .filter_map(|i| {
                        let a = base.amp[j * cols + i];
                        (a != 0.0).then(|| (i, datum[i] * (a * sw[i])))
                    })
                    .collect()
            })
            .collect();
        ChirpRows { base, coeff }
    }

    fn eval(&self, j: usize, t: f64) -> f64 {
        let s = &self.base.s_grid.nodes;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(i, c) in &self.coeff[j] {
            acc += c * Complex64::from_polar(1.0, t * s[i] * s[i]);
        }
        acc.norm()
    }
}

/// For each row, the time in `t_grid ∪ {t_prev}` (refined by golden-section
/// search around the winner) maximizing `|F_j(t)|`.
fn update_times(base: &BaseKernel, datum: &[Complex64], t_grid: &[f64], t_prev: &[f64], refine_steps: usize) -> Vec<f64> {
    let rows = ChirpRows::new(base, datum);
    // Shared phase table for the grid part.
    let s = &base.s_grid.nodes;
    let table: Vec<Vec<Complex64>> =
        t_grid.iter().map(|&t| s.iter().map(|&x| Complex64::from_polar(1.0, t * x * x)).collect()).collect();
    (0..base.rows())
        .into_par_iter()
        .map(|j| {
            let coeff = &rows.coeff[j];
            let prev = t_prev.get(j).copied().unwrap_or(0.0);
            if coeff.is_empty() {
                return prev;
            }
            let mut best_t = prev;
            let mut best_v = rows.eval(j, prev);
            let mut best_k = None;
            for (k, ph) in table.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(i, c) in coeff {
                    acc += c * ph[i];
                }
                let v = acc.norm();
                if v > best_v {
                    best_v = v;
                    best_t = t_grid[k];
                    best_k = Some(k);
                }
            }
            if let Some(k) = best_k {
                let lo = if k > 0 { t_grid[k - 1] } else { t_grid[k] };
                let hi = if k + 1 < t_grid.len() { t_grid[k + 1] } else { t_grid[k] };
                let (t, v) = golden_max(|t| rows.eval(j, t), lo, hi, refine_steps);
                if v > best_v {
                    best_t = t;
                }
            }
            best_t
        })
        .collect()
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, steps: usize) -> (f64, f64) {
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

/// Alternating maximization over data `g` and per-row times `t(r) ∈ t_grid`.
pub fn op_norm_lower(spec: &KernelSpec, s_grid: &Grid, r_grid: &Grid, t_grid: &[f64], opts: &NormOptions) -> Result<NormEstimate> {
    spec.validate()?;
    if t_grid.is_empty() {
        return Err(Error::config("t_grid must not be empty"));
    }
    if opts.rounds == 0 {
        return Err(Error::config("rounds must be at least 1"));
    }
    let base = BaseKernel::new(spec.piece, spec.nu, spec.alpha, s_grid, r_grid);
    op_norm_lower_base(&base, &spec.t_field, t_grid, opts)
}

/// [`op_norm_lower`] on a precomputed base kernel.
pub fn op_norm_lower_base(base: &BaseKernel, t_start: &[f64], t_grid: &[f64], opts: &NormOptions) -> Result<NormEstimate> {
    let rows = base.rows();
    let zero = NormEstimate {
        lower_bound: 0.0,
        iterations: 0,
        residual: 0.0,
        t_field_used: vec![0.0; rows],
        datum: vec![Complex64::new(0.0, 0.0); base.cols()],
        history: vec![0.0],
    };
    if base.cols() == 0 || base.is_zero() {
        return Ok(zero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    seeds.push(if t_start.is_empty() { vec![0.0; rows] } else { t_start.to_vec() });
    let (s_lo, s_hi) = (base.s_grid.nodes[0], base.s_grid.nodes[base.cols() - 1]);
    for k in 0..opts.focus_seeds {
        let sc = s_lo + (s_hi - s_lo) * (k as f64 + 0.5) / opts.focus_seeds as f64;
        seeds.push(base.r_grid.nodes.iter().map(|r| r / (2.0 * sc)).collect());
    }

    let mut best: Option<NormEstimate> = None;
    for t0 in seeds {
        let est = alternate(base, t0, None, t_grid, opts, &mut rng)?;
        if best.as_ref().is_none_or(|b| est.lower_bound > b.lower_bound) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one seed"))
}

/// Continues the alternating maximization from `prev` on a finer `t_grid`.
/// The result is never below `prev.lower_bound`.
pub fn op_norm_refine(base: &BaseKernel, prev: &NormEstimate, t_grid: &[f64], opts: &NormOptions) -> Result<NormEstimate> {
    if prev.lower_bound == 0.0 || prev.datum.len() != base.cols() {
        return Ok(prev.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xf1e2);
    let est = alternate(base, prev.t_field_used.clone(), Some(&prev.datum), t_grid, opts, &mut rng)?;
    Ok(if est.lower_bound >= prev.lower_bound { est } else { prev.clone() })
}

fn alternate(
    base: &BaseKernel,
    t0: Vec<f64>,
    warm: Option<&[Complex64]>,
    t_grid: &[f64],
    opts: &NormOptions,
    rng: &mut ChaCha8Rng,
) -> Result<NormEstimate> {
    let mut t_field = t0;
    let a = base.with_time(&t_field)?.normalized();
    let power = if warm.is_some() { PowerOptions { restarts: 0, ..opts.power } } else { opts.power };
    let first = power_iteration(&a, warm, &power, rng);
    let mut best = first.sigma;
    let mut datum = first.vector;
    let mut iterations = first.iterations;
    let mut residual = first.residual;
    let mut history = vec![best];
    for _ in 1..opts.rounds {
        let t_new = update_times(base, &datum, t_grid, &t_field, opts.refine_steps);
        let a = base.with_time(&t_new)?.normalized();
        let warm = power_iteration(&a, Some(&datum), &PowerOptions { restarts: 0, ..opts.power }, rng);
        iterations += warm.iterations;
        if warm.sigma > best {
            let gain = (warm.sigma - best) / warm.sigma;
            best = warm.sigma;
            datum = warm.vector;
            t_field = t_new;
            residual = warm.residual;
            history.push(best);
            if gain < 1e-10 {
                break;
            }
        } else {
            history.push(best);
            break;
        }
    }
    Ok(NormEstimate { lower_bound: best, iterations, residual, t_field_used: t_field, datum, history })
}

/// Probe result for a `TT*` kernel value against its majorant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtStarProbe {
    pub k_mag: f64,
    pub bound: f64,
    /// `|r − ρ|` too small for the majorant; nothing was computed.
    pub skipped: bool,
}

/// Separation below which the diagonal probe is skipped.
pub const DIAGONAL_GAP: f64 = 1e-3;

/// `|K(r, ρ)|` for the `TT*` kernel of `T4` (its `e^{+iθ}` half), `T5`, or
/// `T6` (`e^{+iθ}` half), with the matching majorant using the frozen
/// constant.
pub fn tt_star_probe(piece: Piece, nu: Order, r: f64, rho: f64, t_r: f64, t_rho: f64, interval: (f64, f64)) -> Result<TtStarProbe> {
    if !(0.0 < rho && rho < r && r <= 1.0) && !(0.0 < r && r < rho && rho <= 1.0) {
        if (r - rho).abs() < DIAGONAL_GAP {
            return Ok(TtStarProbe { k_mag: 0.0, bound: f64::INFINITY, skipped: true });
        }
        return Err(Error::domain(format!("need 0 < ρ, r ≤ 1 with ρ ≠ r, got r = {r}, ρ = {rho}")));
    }
    if (r - rho).abs() < DIAGONAL_GAP {
        return Ok(TtStarProbe { k_mag: 0.0, bound: f64::INFINITY, skipped: true });
    }
    let (r, rho, t_r, t_rho) = if rho < r { (r, rho, t_r, t_rho) } else { (rho, r, t_rho, t_r) };
    let k_mag = tt_star_kernel(piece, nu, r, rho, t_r - t_rho, interval)?;
    let v = nu.value();
    let bound = match piece {
        Piece::T4 => crate::frozen::TT_STAR_T4_CONSTANT * rho.powf(crate::phase::DEFAULT_BETA - 0.5) / (r - rho).powf(crate::phase::DEFAULT_BETA),
        Piece::T5 => crate::frozen::TT_STAR_T5_CONSTANT * rho.min(r).sqrt() / (v * r * rho).sqrt(),
        Piece::T6 => crate::frozen::TT_STAR_T6_CONSTANT / (r - rho).sqrt(),
        _ => return Err(Error::config(format!("no TT* probe for piece {piece}"))),
    };
    Ok(TtStarProbe { k_mag, bound, skipped: false })
}

/// `|∫_I …|` for the `TT*` kernel, evaluated directly in the variable `s`,
/// with `ρ < r` and `Δt = t(r) − t(ρ)`.
pub fn tt_star_kernel(piece: Piece, nu: Order, r: f64, rho: f64, dt: f64, interval: (f64, f64)) -> Result<f64> {
    let v = nu.value();
    let (sup_lo, sup_hi) = piece.support(v);
    // Both rs and ρs must lie in the support.
    let lo = interval.0.max(sup_lo / rho).max(sup_lo / r);
    let hi = interval.1.min(if sup_hi.is_finite() { sup_hi / r } else { f64::INFINITY });
    if !(lo < hi) {
        return Ok(0.0);
    }
    if hi.is_infinite() {
        return Err(Error::config("TT* probe needs a bounded interval"));
    }
    let opts = QuadOptions { max_panel_len: 0.25, ..QuadOptions::default() };
    let value = match piece {
        Piece::T5 => {
            let pair = PhasePair::new(
                move |s: f64| dt * s * s,
                move |s: f64| 2.0 * dt * s,
                move |s: f64| {
                    let h = |x: f64| j_tilde_value(nu, x) - x.sqrt() * barcelo_main_unchecked(v, x);
                    h(r * s) * h(rho * s) / s.sqrt()
                },
                lo,
                hi,
            )?;
            integrate_oscillatory_with(&pair, 1e-10, &opts)?.value
        }
        Piece::T4 | Piece::T6 => {
            let th = move |x: f64| crate::bessel::theta_unchecked(v, x);
            let th_d = move |x: f64| ((x - v) * (x + v)).sqrt() / x;
            let pair = PhasePair::new(
                move |s: f64| dt * s * s + th(r * s) - th(rho * s),
                move |s: f64| 2.0 * dt * s + r * th_d(r * s) - rho * th_d(rho * s),
                move |s: f64| {
                    let a = ((r * s - v) * (r * s + v)).sqrt().sqrt();
                    let b = ((rho * s - v) * (rho * s + v)).sqrt().sqrt();
                    (r * rho * s).sqrt() / (a * b)
                },
                lo,
                hi,
            )?;
            integrate_oscillatory_with(&pair, 1e-10, &opts)?.value
        }
        _ => return Err(Error::config(format!("no TT* kernel for piece {piece}"))),
    };
    Ok(value.norm())
}

/// `|h_ν(νu)|²` against its envelope on `u ∈ [1 + ν^{−2/3}, 2]`: the largest ratio.
pub fn remainder_square_ratio(nu: Order, points: usize) -> f64 {
    let v = nu.value();
    let lo = 1.0 + v.powf(-2.0 / 3.0);
    let mut worst = 0.0f64;
    for k in 0..points {
        let u = lo + (2.0 - lo) * k as f64 / (points - 1).max(1) as f64;
        let x = v * u;
        if x <= v + v.cbrt() {
            continue;
        }
        let h = crate::bessel::j_value(nu, x) - barcelo_main_unchecked(v, x);
        worst = worst.max(h * h / crate::bessel::remainder_square_envelope(v, u));
    }
    worst
}

/// Largest `|h_ν(r)|/envelope` on the given radii.
pub fn remainder_ratio_sup(nu: Order, radii: &[f64]) -> f64 {
    let v = nu.value();
    radii
        .iter()
        .filter(|&&r| r > v + v.cbrt())
        .map(|&r| {
            let h = crate::bessel::j_value(nu, r) - barcelo_main_unchecked(v, r);
            h.abs() / remainder_envelope(v, r)
        })
        .fold(0.0, f64::max)
}

/// Resolution settings for norm sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrids {
    /// Fewest r-points; more are used when `r_per_s · S_max` is larger.
    pub r_points: usize,
    pub r_per_s: f64,
    pub r_max: usize,
    pub s_order: usize,
    pub t_points: usize,
}

impl Default for SweepGrids {
    fn default() -> Self {
        SweepGrids { r_points: 512, r_per_s: 0.5, r_max: 1024, s_order: 8, t_points: 257 }
    }
}

impl SweepGrids {
    /// Grids for `I`: the r-spacing stays below `1/(r_per_s · S_max)` so rows
    /// resolve the kernel's oscillation in `r`.
    pub fn build(&self, interval: (f64, f64)) -> (Grid, Grid, Vec<f64>) {
        let t_max = default_t_max(interval.0.max(1e-3));
        let s = Grid::s_for_interval(interval, t_max, self.s_order);
        let rows = ((self.r_per_s * interval.1).ceil() as usize).clamp(self.r_points, self.r_max.max(self.r_points));
        let r = Grid::r_uniform(rows);
        let t = default_t_grid(t_max, self.t_points);
        (s, r, t)
    }
}

/// `I` in units of `ν`: `(c₀ν, c₁ν)`, with `ν` replaced by 1 below 1.
pub fn scaled_interval(nu: f64, factors: (f64, f64)) -> (f64, f64) {
    let unit = nu.max(1.0);
    (factors.0 * unit, factors.1 * unit)
}

/// Intervals probed at each `ν`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum IntervalFamily {
    /// `[c₀ν, c₁ν]` per factor pair.
    Scaled(Vec<(f64, f64)>),
    /// Dyadic `[2^k, 2^{k+1}]` for `min_exp ≤ k ≤ max(base_max_exp, ⌈log₂ ν⌉ + above_nu)`.
    Dyadic { min_exp: i32, base_max_exp: i32, above_nu: i32 },
    /// The same intervals at every `ν`.
    Fixed(Vec<(f64, f64)>),
}

impl Default for IntervalFamily {
    fn default() -> Self {
        IntervalFamily::Dyadic { min_exp: -1, base_max_exp: 6, above_nu: 1 }
    }
}

impl IntervalFamily {
    pub fn intervals(&self, nu: f64) -> Vec<(f64, f64)> {
        match self {
            IntervalFamily::Scaled(f) => f.iter().map(|&c| scaled_interval(nu, c)).collect(),
            IntervalFamily::Fixed(v) => v.clone(),
            IntervalFamily::Dyadic { min_exp, base_max_exp, above_nu } => {
                let top = (*base_max_exp).max(nu.max(1.0).log2().ceil() as i32 + above_nu);
                (*min_exp..=top).map(|k| (2f64.powi(k), 2f64.powi(k + 1))).collect()
            }
        }
    }
}

/// One cell of a norm sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormCell {
    pub piece: Piece,
    pub nu: Order,
    pub interval: (f64, f64),
    pub estimate: Option<NormEstimate>,
    /// Gain from continuing on a doubled t-grid, when requested.
    pub refinement_delta: Option<f64>,
    pub error: Option<String>,
}

/// Settings shared by the cells of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct SweepOptions {
    pub grids: SweepGrids,
    pub norm: NormOptions,
    pub refine: bool,
}


/// `op_norm_lower` over `ν × I` for several pieces at once; the Bessel table
/// of each `(ν, I)` cell is shared between pieces.
pub fn norm_cells(pieces: &[Piece], alpha: f64, nu_list: &[Order], family: &IntervalFamily, opts: &SweepOptions) -> Result<Vec<NormCell>> {
    if nu_list.is_empty() {
        return Err(Error::config("nu_list must not be empty"));
    }
    if pieces.is_empty() {
        return Err(Error::config("no pieces requested"));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::config(format!("α must lie in (0, 1/2), got {alpha}")));
    }
    let cells: Vec<(Order, (f64, f64))> =
        nu_list.iter().flat_map(|&nu| family.intervals(nu.value()).into_iter().map(move |i| (nu, i))).collect();
    let out: Vec<Vec<NormCell>> = cells
        .par_iter()
        .enumerate()
        .map(|(k, &(nu, interval))| {
            let (s, r, t) = opts.grids.build(interval);
            let full = BaseKernel::new(Piece::Full, nu, alpha, &s, &r);
            pieces
                .iter()
                .map(|&piece| {
                    let cell = |estimate, refinement_delta, error| NormCell { piece, nu, interval, estimate, refinement_delta, error };
                    if piece.uses_barcelo() && nu.value() < 1.0 {
                        return cell(None, None, Some(format!("piece {piece} needs ν ≥ 1")));
                    }
                    let base = if piece == Piece::Full { full.clone() } else { BaseKernel::piece_from_full(&full, piece) };
                    let norm = NormOptions { seed: cell_seed(opts.norm.seed, k as u64), ..opts.norm.clone() };
                    let est = match op_norm_lower_base(&base, &[], &t, &norm) {
                        Ok(e) => e,
                        Err(e) => return cell(None, None, Some(e.to_string())),
                    };
                    if !opts.refine {
                        return cell(Some(est), None, None);
                    }
                    let fine = default_t_grid(default_t_max(interval.0.max(1e-3)), 2 * opts.grids.t_points - 1);
                    match op_norm_refine(&base, &est, &fine, &norm) {
                        Ok(f) => {
                            let d = f.lower_bound - est.lower_bound;
                            cell(Some(f), Some(d), None)
                        }
                        Err(e) => cell(Some(est), None, Some(e.to_string())),
                    }
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Norm sweep of one piece, with the log-log slope of the per-`ν` supremum
/// over `I`.
pub fn norm_sweep(piece: Piece, alpha: f64, nu_list: &[Order], family: &IntervalFamily, opts: &SweepOptions) -> Result<SweepReport> {
    let cells = norm_cells(&[piece], alpha, nu_list, family, opts)?;
    Ok(norm_report(piece, alpha, &cells))
}

/// Deterministic per-cell seed.
pub fn cell_seed(base: u64, index: u64) -> u64 {
    let mut x = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^ (x >> 33)
}

/// Per-`ν` supremum over the cells of one piece.
pub fn sup_by_nu(piece: Piece, cells: &[NormCell]) -> Vec<(f64, f64)> {
    let mut per_nu: Vec<(f64, f64)> = Vec::new();
    for c in cells.iter().filter(|c| c.piece == piece) {
        let Some(e) = &c.estimate else { continue };
        let v = c.nu.value();
        match per_nu.iter_mut().find(|p| p.0 == v) {
            Some(p) => p.1 = p.1.max(e.lower_bound),
            None => per_nu.push((v, e.lower_bound)),
        }
    }
    per_nu
}

pub fn norm_report(piece: Piece, alpha: f64, cells: &[NormCell]) -> SweepReport {
    let mut rep = SweepReport::new("sweep.norms", &["nu", "alpha", "i_lo", "i_hi"]);
    rep.command_echo = format!("piece={piece} alpha={alpha}");
    for c in cells.iter().filter(|c| c.piece == piece) {
        let (value, verdict) = match &c.estimate {
            Some(e) if c.error.is_none() => (e.lower_bound, Verdict::Info),
            _ => (f64::NAN, Verdict::Error),
        };
        rep.rows.push(Row {
            params: vec![c.nu.value(), alpha, c.interval.0, c.interval.1],
            value,
            delta: c.refinement_delta,
            verdict,
            error: c.error.clone(),
        });
    }
    rep.summary.sup = rep.row_sup();
    rep.summary.slope_fits.insert(piece.as_str().to_string(), SlopeFit::log_log(&sup_by_nu(piece, cells)));
    rep
}

/// Applies the uniform-boundedness gates: slope within `±slope_gate` and the
/// supremum within `rel` of `baseline`.
pub fn gate_norm_report(rep: &mut SweepReport, piece: Piece, slope_gate: f64, baseline: Option<f64>, rel: f64) {
    let fit = rep.summary.slope_fits.get(piece.as_str()).copied();
    match fit.and_then(|f| f.slope) {
        Some(s) => rep.gates.push(Gate::new(
            format!("{piece}.slope"),
            s.abs() <= slope_gate,
            format!("log-log slope {s:.4} (gate ±{slope_gate})"),
        )),
        None => rep.gates.push(Gate::new(format!("{piece}.slope"), false, "slope undefined")),
    }
    if let (Some(b), Some(sup)) = (baseline, rep.summary.sup) {
        rep.gates.push(Gate::new(
            format!("{piece}.sup"),
            (sup - b).abs() <= rel * b,
            format!("sup {sup:.6} vs baseline {b:.6}"),
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grids(interval: (f64, f64)) -> (Grid, Grid) {
        (Grid::s_panels(interval.0, interval.1, 0.5, 6), Grid::r_uniform(24))
    }

    #[test]
    fn support_examples() {
        let nu = Order::from_two_nu(32);
        assert_eq!(piece_amplitude(Piece::T1, nu, 0.9 * 20.0), 0.0);
        assert_eq!(piece_amplitude(Piece::T4, nu, 0.9 * 20.0), 0.0);
        assert!(piece_amplitude(Piece::T1, nu, 8.0) != 0.0);
        let only_t1: Vec<Piece> =
            Piece::ALL.iter().copied().filter(|&p| p != Piece::Full && piece_amplitude(p, nu, 8.0) != 0.0).collect();
        assert_eq!(only_t1, vec![Piece::T1]);
        // 2ν belongs to the far pieces
        assert_eq!(piece_amplitude(Piece::T4, nu, 32.0), 0.0);
        assert!(piece_amplitude(Piece::T6, nu, 32.0) != 0.0);
    }

    #[test]
    fn full_half_order_entries() {
        let nu = Order::from_two_nu(1);
        let (s, r) = tiny_grids((0.5, 3.0));
        let op = build_kernel(&KernelSpec::new(Piece::Full, nu, (0.5, 3.0), 0.25), &s, &r).unwrap();
        for j in [0, 7, 23] {
            for i in [0, 5, s.len() - 1] {
                let (rj, si) = (r.nodes[j], s.nodes[i]);
                let want = (2.0 / PI).sqrt() * (rj * si).sin() * si.powf(-0.25) * s.weights[i];
                assert!((op.entry(j, i).re - want).abs() < 1e-13);
                assert!(op.entry(j, i).im.abs() < 1e-16);
            }
        }
    }

    #[test]
    fn barcelo_piece_rejected_below_one() {
        let spec = KernelSpec::new(Piece::T4, Order::from_two_nu(1), (1.0, 2.0), 0.25);
        let (s, r) = tiny_grids((1.0, 2.0));
        assert!(matches!(build_kernel(&spec, &s, &r), Err(Error::Config(_))));
    }

    #[test]
    fn apply_basics() {
        let nu = Order::from_two_nu(8);
        let (s, r) = tiny_grids((2.0, 9.0));
        let mut spec = KernelSpec::new(Piece::Full, nu, (2.0, 9.0), 0.25);
        spec.t_field = r.nodes.iter().map(|x| 0.3 * x).collect();
        let op = build_kernel(&spec, &s, &r).unwrap();
        let z = op.apply(&vec![Complex64::new(0.0, 0.0); op.cols]).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
        let mut e = vec![Complex64::new(0.0, 0.0); op.cols];
        e[3] = Complex64::new(1.0, 0.0);
        let col = op.apply(&e).unwrap();
        for j in 0..op.rows {
            assert_eq!(col[j], op.entry(j, 3));
        }
        assert!(op.apply(&[Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn schur_small_examples() {
        let id = DiscreteOperator::from_matrix(2, 2, vec![1.0.into(), 0.0.into(), 0.0.into(), 1.0.into()]).unwrap();
        assert_eq!(schur_bound(&id), 1.0);
        let a = [1.0, -2.0, 0.5];
        let b = [0.3, 1.5];
        let m: Vec<Complex64> = a.iter().flat_map(|x| b.iter().map(move |y| Complex64::new(x * y, 0.0))).collect();
        let op = DiscreteOperator::from_matrix(3, 2, m).unwrap();
        let l1: f64 = a.iter().map(|x| x.abs()).sum();
        let want = l1 * 2.0 * b.iter().map(|y| y * y).sum::<f64>();
        assert!((schur_bound(&op) - want).abs() < 1e-12);
        let norm2 = a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|y| y * y).sum::<f64>();
        assert!(norm2 <= schur_bound(&op));
        let p = operator_norm(&op, &PowerOptions::default(), 1);
        assert!((p.sigma * p.sigma - norm2).abs() < 1e-10 * norm2);
    }

    #[test]
    fn decomposition_identity_small() {
        let nu = Order::from_two_nu(8);
        let (s, r) = tiny_grids((1.0, 14.0));
        let t: Vec<f64> = r.nodes.iter().map(|x| x * x).collect();
        assert!(decompose_check(nu, &s, &r, &t, 0.25).unwrap() <= 1e-12);
    }

    #[test]
    fn norm_estimate_is_monotone() {
        let nu = Order::from_two_nu(4);
        let interval = (4.0, 8.0);
        let (s, r) = tiny_grids(interval);
        let t = default_t_grid(default_t_max(4.0), 33);
        let est = op_norm_lower(&KernelSpec::new(Piece::Full, nu, interval, 0.25), &s, &r, &t, &NormOptions::default()).unwrap();
        assert!(est.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(est.lower_bound > 0.0);
    }

    #[test]
    fn gsop_round_trip() {
        let op = DiscreteOperator::from_matrix(2, 3, (0..6).map(|k| Complex64::new(k as f64, -0.5 * k as f64)).collect()).unwrap();
        let mut buf = Vec::new();
        op.write_gsop(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 6 * 16);
        assert_eq!(&buf[..4], b"GSOP");
        let (rows, cols, m) = read_gsop(&buf[..]).unwrap();
        assert_eq!((rows, cols), (2, 3));
        assert_eq!(m, op.matrix);
    }

    #[test]
    fn empty_interval_gives_zero_norm() {
        let nu = Order::from_two_nu(4);
        let s = Grid::s_panels(3.0, 3.0, 1.0, 6);
        let r = Grid::r_uniform(8);
        let est = op_norm_lower(&KernelSpec::new(Piece::Full, nu, (3.0, 3.0), 0.25), &s, &r, &[0.0], &NormOptions::default()).unwrap();
        assert_eq!(est.lower_bound, 0.0);
    }

    #[test]
    fn piece_from_full_matches_direct() {
        let nu = Order::from_two_nu(16);
        let (s, r) = tiny_grids((4.0, 24.0));
        let full = BaseKernel::new(Piece::Full, nu, 0.25, &s, &r);
        for p in Piece::PIECES {
            let a = BaseKernel::piece_from_full(&full, p);
            let b = BaseKernel::new(p, nu, 0.25, &s, &r);
            for k in 0..a.amp.len() {
                assert!((a.amp[k] - b.amp[k]).abs() <= 1e-15 * (1.0 + b.amp[k].abs()), "{p}");
            }
        }
    }
}
