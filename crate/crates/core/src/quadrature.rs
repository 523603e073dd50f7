//! Gauss–Legendre rules and a locally adaptive composite integrator.

use std::sync::OnceLock;

const MAX_DEPTH: u32 = 60;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

pub(crate) fn gl4() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(4))
}

/// 16-point Gauss–Legendre estimate of the integral of `f` over [a, b].
pub fn gl16_interval<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let (x, w) = gl16();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for k in 0..x.len() {
        acc += w[k] * f(mid + half * x[k]);
    }
    acc * half
}

/// Composite 16-point Gauss–Legendre over the partition `breaks` (sorted),
/// each cell refined dyadically until two successive estimates differ by
/// less than `tol`.
pub fn adaptive_on_partition<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], tol: f64) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            let whole = gl16_interval(f, a, b);
            total += refine(f, a, b, whole, tol, 0);
        }
    }
    total
}

/// Adaptive integral of `f` over [a, b] starting from `pieces` uniform cells.
pub fn adaptive<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let pieces = pieces.max(1);
    let breaks: Vec<f64> = (0..=pieces)
        .map(|k| a + (b - a) * k as f64 / pieces as f64)
        .collect();
    adaptive_on_partition(f, &breaks, tol)
}

fn refine<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gl16_interval(f, a, mid);
    let right = gl16_interval(f, mid, b);
    let split = left + right;
    if (split - whole).abs() <= tol || depth >= MAX_DEPTH || mid <= a || mid >= b {
        return split;
    }
    refine(f, a, mid, left, tol, depth + 1) + refine(f, mid, b, right, tol, depth + 1)
}
