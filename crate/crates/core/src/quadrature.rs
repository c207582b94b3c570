//! Gauss–Legendre rules and composite panel grids.

use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const CACHED: usize = 64;

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule for `n ≤ 64`; larger orders are built on demand.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static RULES: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
        assert!((1..=CACHED).contains(&n), "cached rules cover orders 1..={CACHED}");
        &RULES.get_or_init(|| (1..=CACHED).map(GaussLegendre::new).collect())[n - 1]
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<T, F>(&self, a: f64, b: f64, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(f64) -> T,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(mid + half * x) * (w * half);
        }
        acc
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre nodes on `[a, b]` with panels no longer than
/// `max_panel`. Returns `(nodes, weights)` in increasing node order.
pub fn composite(a: f64, b: f64, max_panel: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    if !(b > a) {
        return (Vec::new(), Vec::new());
    }
    let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let rule = GaussLegendre::cached(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Midpoint grid of `n` points on `(0, 1]` with equal weights.
pub fn midpoint_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / n as f64;
    ((0..n).map(|j| (j as f64 + 0.5) * h).collect(), vec![h; n])
}
