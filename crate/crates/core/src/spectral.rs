//! Monodromy matrices and their spectral diagnostics: boundary resolvent,
//! the exponent α, Ritt constant, mean-ergodic projection, r(T|_Z),
//! fractional powers (I−T)^γ and the Katznelson–Tzafriri profile.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::DampingRegion;
use crate::linalg::{self, HessenbergLu};
use crate::transport::TransportMonodromy;
use crate::wave;

/// Inner product of the coordinate space: ⟨x,y⟩ = weight·Σ xᵢyᵢ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerProduct {
    /// Discrete L²(0,1) on cell values.
    L2 { cell_width: f64 },
    /// Wave energy product in normalized ring coordinates, where it is the
    /// plain Euclidean product.
    WaveEnergy { cell_width: f64 },
}

impl InnerProduct {
    pub fn weight(&self) -> f64 {
        match *self {
            InnerProduct::L2 { cell_width } => cell_width,
            InnerProduct::WaveEnergy { .. } => 1.0,
        }
    }

    pub fn cell_width(&self) -> f64 {
        match *self {
            InnerProduct::L2 { cell_width } | InnerProduct::WaveEnergy { cell_width } => cell_width,
        }
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weight() * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.dot(x, x).sqrt()
    }

    pub fn name(&self) -> &'static str {
        match self {
            InnerProduct::L2 { .. } => "L2",
            InnerProduct::WaveEnergy { .. } => "wave-energy",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Operator {
    Diagonal(Vec<f64>),
    Dense(Mat<f64>),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Diagonal(d) => d.len(),
            Operator::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Operator::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
            Operator::Dense(m) => linalg::mat_vec(m, x),
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            Operator::Diagonal(d) => {
                Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
            }
            Operator::Dense(m) => m.clone(),
        }
    }

    /// Euclidean operator norm (equal to the norm in any scalar-weighted
    /// product).
    pub fn norm(&self) -> f64 {
        match self {
            Operator::Diagonal(d) => d.iter().fold(0.0, |m, x| m.max(x.abs())),
            Operator::Dense(m) => linalg::norm2(m),
        }
    }

    fn product(&self, other: &Operator) -> Operator {
        match (self, other) {
            (Operator::Diagonal(a), Operator::Diagonal(b)) => {
                Operator::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => Operator::Dense(&self.to_dense() * &other.to_dense()),
        }
    }

    fn combine(&self, other: &Operator, a: f64, b: f64) -> Operator {
        match (self, other) {
            (Operator::Diagonal(x), Operator::Diagonal(y)) => {
                Operator::Diagonal(x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
            }
            _ => {
                let (x, y) = (self.to_dense(), other.to_dense());
                Operator::Dense(Mat::from_fn(x.nrows(), x.ncols(), |i, j| {
                    a * x[(i, j)] + b * y[(i, j)]
                }))
            }
        }
    }

    fn identity_like(&self) -> Operator {
        match self {
            Operator::Diagonal(d) => Operator::Diagonal(vec![1.0; d.len()]),
            Operator::Dense(m) => Operator::Dense(Mat::identity(m.nrows(), m.nrows())),
        }
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        match (self, other) {
            (Operator::Diagonal(x), Operator::Diagonal(y)) => {
                x.iter().zip(y).fold(0.0, |m, (p, q)| m.max((p - q).abs()))
            }
            _ => linalg::max_abs_diff(&self.to_dense(), &other.to_dense()),
        }
    }
}

/// T = U(τ,0) on a grid basis, tagged with its inner product.
#[derive(Clone, Debug)]
pub struct MonodromyOperator {
    pub op: Operator,
    pub inner: InnerProduct,
    pub period: f64,
}

impl MonodromyOperator {
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.op.apply(x)
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        match &self.op {
            Operator::Diagonal(d) => Some(d),
            Operator::Dense(_) => None,
        }
    }

    pub fn norm(&self) -> f64 {
        self.op.norm()
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        match &self.op {
            Operator::Diagonal(d) => Ok(d.iter().map(|&x| C64::new(x, 0.0)).collect()),
            Operator::Dense(m) => m
                .eigenvalues()
                .map_err(|e| Error::numerical("eigenvalues", format!("{e:?}"))),
        }
    }
}

/// A deterministic linear one-period solver.
pub trait PeriodMap {
    fn dim(&self) -> usize;
    fn period(&self) -> f64;
    fn inner_product(&self) -> InnerProduct;
    /// Applies the map to `cols` column-major vectors.
    fn apply_block(&self, cols: usize, data: &[f64]) -> Result<Vec<f64>>;
    /// Multiplicative solvers expose their multiplier.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl PeriodMap for TransportMonodromy {
    fn dim(&self) -> usize {
        self.n()
    }

    fn period(&self) -> f64 {
        1.0
    }

    fn inner_product(&self) -> InnerProduct {
        InnerProduct::L2 {
            cell_width: self.cell_width(),
        }
    }

    fn apply_block(&self, cols: usize, data: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let mut out = data.to_vec();
        for j in 0..cols {
            for i in 0..n {
                out[j * n + i] *= self.m[i];
            }
        }
        Ok(out)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.m.clone())
    }
}

/// U(2,0) for the damped wave equation in normalized ring coordinates,
/// restricted to physical states (the spurious mode is sent to zero).
#[derive(Clone, Debug)]
pub struct WavePeriodMap {
    pub region: DampingRegion,
    pub n: usize,
}

impl WavePeriodMap {
    pub fn new(region: DampingRegion, n: usize) -> Result<Self> {
        if (region.period() - 2.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("wave monodromy needs period 2".into()));
        }
        Ok(WavePeriodMap { region, n })
    }
}

impl PeriodMap for WavePeriodMap {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn period(&self) -> f64 {
        2.0
    }

    fn inner_product(&self) -> InnerProduct {
        InnerProduct::WaveEnergy {
            cell_width: 1.0 / self.n as f64,
        }
    }

    fn apply_block(&self, cols: usize, data: &[f64]) -> Result<Vec<f64>> {
        let mut out = wave::monodromy_apply_columns(&self.region, self.n, cols, data)?;
        let c = wave::spurious_mode(self.n);
        let len = 2 * self.n;
        for j in 0..cols {
            let x = &data[j * len..(j + 1) * len];
            let k: f64 = x.iter().zip(&c).map(|(a, b)| a * b).sum();
            for (o, ci) in out[j * len..(j + 1) * len].iter_mut().zip(&c) {
                *o -= k * ci;
            }
        }
        Ok(out)
    }
}

/// Column j = U(τ,0)eⱼ; multiplicative solvers take the diagonal shortcut.
/// A random linearity probe guards against nonlinear solvers.
pub fn assemble(map: &dyn PeriodMap) -> Result<MonodromyOperator> {
    let d = map.dim();
    let inner = map.inner_product();
    let period = map.period();
    let mut rng = ChaCha8Rng::seed_from_u64(0x11ea5);
    let mut probe = vec![0.0; 3 * d];
    for i in 0..d {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        probe[i] = x;
        probe[d + i] = y;
        probe[2 * d + i] = x + y;
    }
    let out = map.apply_block(3, &probe)?;
    let scale = out.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let defect = (0..d)
        .map(|i| (out[2 * d + i] - out[i] - out[d + i]).abs())
        .fold(0.0, f64::max);
    if defect > 1e-8 * scale {
        return Err(Error::numerical(
            "linearity",
            format!("U(x+y) − Ux − Uy = {defect:e} relative to {scale:e}"),
        ));
    }
    if let Some(diag) = map.diagonal() {
        return Ok(MonodromyOperator {
            op: Operator::Diagonal(diag),
            inner,
            period,
        });
    }
    let mut m = Mat::<f64>::zeros(d, d);
    let batch = 256.min(d);
    let mut start = 0;
    while start < d {
        let cols = batch.min(d - start);
        let mut block = vec![0.0; d * cols];
        for j in 0..cols {
            block[j * d + start + j] = 1.0;
        }
        let out = map.apply_block(cols, &block)?;
        for j in 0..cols {
            m.col_as_slice_mut(start + j).copy_from_slice(&out[j * d..(j + 1) * d]);
        }
        start += cols;
    }
    Ok(MonodromyOperator {
        op: Operator::Dense(m),
        inner,
        period,
    })
}

/// Log-spaced θ grid on [lo, hi] with `per_decade` points per decade.
pub fn theta_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let count = (decades * per_decade as f64).ceil() as usize + 1;
    (0..count)
        .map(|k| lo * 10f64.powf(decades * k as f64 / (count - 1) as f64))
        .collect()
}

/// The default grid: 60 points per decade on [1e−6, π].
pub fn default_theta_grid() -> Vec<f64> {
    theta_grid(1e-6, std::f64::consts::PI, 60)
}

#[derive(Clone, Debug, Default)]
pub struct ResolventProfile {
    /// (θ, ‖R(e^{iθ},T)‖), θ ascending.
    pub samples: Vec<(f64, f64)>,
    /// θ values skipped because e^{iθ} is numerically in the spectrum,
    /// with the observed σ_min.
    pub skipped: Vec<(f64, f64)>,
}

/// ‖R(e^{iθ},T)‖ = 1/σ_min(e^{iθ}I − T) on the given θ values.
pub fn boundary_resolvent(t: &MonodromyOperator, thetas: &[f64]) -> ResolventProfile {
    let mut thetas = thetas.to_vec();
    thetas.sort_by(f64::total_cmp);
    let mut prof = ResolventProfile::default();
    match &t.op {
        Operator::Diagonal(m) => {
            for &th in &thetas {
                let z = C64::from_polar(1.0, th);
                let smin = m.iter().map(|&x| (z - x).norm()).fold(f64::INFINITY, f64::min);
                if smin < 1e-13 {
                    prof.skipped.push((th, smin));
                } else {
                    prof.samples.push((th, 1.0 / smin));
                }
            }
        }
        Operator::Dense(a) => {
            let h = linalg::hessenberg_form(a);
            let scale = t.norm().max(1.0);
            let mut lu: Option<HessenbergLu> = None;
            let mut start = Vec::new();
            // large θ first: the warm start then tracks the vector that
            // becomes dominant as θ → 0
            for &th in thetas.iter().rev() {
                let z = C64::from_polar(1.0, th);
                match lu.as_mut() {
                    Some(f) => f.refactor(&h, z),
                    None => lu = Some(HessenbergLu::new(&h, z)),
                }
                let f = lu.as_ref().unwrap();
                let smin = if f.min_abs_pivot() == 0.0 {
                    0.0
                } else {
                    linalg::smallest_singular_value(f, &mut start, 60)
                };
                if !(smin >= 1e-13 * scale) {
                    prof.skipped.push((th, smin));
                    start.clear();
                } else {
                    prof.samples.push((th, 1.0 / smin));
                }
            }
            prof.samples.reverse();
            prof.skipped.reverse();
        }
    }
    prof
}

#[derive(Clone, Debug)]
pub struct AlphaFit {
    /// Zero is the sentinel for a bounded profile (no blow-up at θ → 0).
    pub alpha: f64,
    pub c: f64,
    /// RMS of the log residuals.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// The low-θ end saturates (1 is not in the spectrum at grid level);
    /// the fit then uses the decade above the knee.
    pub plateau: bool,
}

impl AlphaFit {
    fn sentinel() -> Self {
        AlphaFit {
            alpha: 0.0,
            c: 0.0,
            residual: 0.0,
            window: (0.0, 0.0),
            points: 0,
            plateau: false,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.alpha == 0.0 && self.points == 0
    }
}

/// Least squares (intercept, slope, rms residual) of y on x.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let rms = (ss / n).sqrt();
    // standard error of the slope
    let se = if n > 2.0 && sxx > 0.0 { (ss / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (icpt, slope, rms, se)
}

/// Slope of log‖R‖ against −log θ over the lowest decade with ‖R‖ ≥ 10.
pub fn fit_alpha(profile: &ResolventProfile) -> AlphaFit {
    let s = &profile.samples;
    if s.len() < 10 {
        return AlphaFit::sentinel();
    }
    let rmax = s.iter().map(|p| p.1).fold(0.0, f64::max);
    if rmax < 10.0 {
        return AlphaFit::sentinel();
    }
    let th0 = s[0].0;
    let r_at = |th: f64| s.iter().find(|p| p.0 >= th).map(|p| p.1).unwrap_or(s[s.len() - 1].1);
    let plateau = s[0].1 / r_at(10.0 * th0) < 2.0;
    let floor = if plateau {
        s.iter().filter(|p| p.1 >= 0.5 * rmax).map(|p| p.0).fold(th0, f64::max)
    } else {
        th0
    };
    let pts: Vec<&(f64, f64)> = s
        .iter()
        .filter(|p| p.0 >= floor && p.0 <= 10.0 * floor * (1.0 + 1e-12) && p.1 >= 10.0)
        .collect();
    if pts.len() < 3 {
        return AlphaFit::sentinel();
    }
    let x: Vec<f64> = pts.iter().map(|p| -p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (icpt, slope, rms, _) = linear_fit(&x, &y);
    AlphaFit {
        alpha: slope,
        c: icpt.exp(),
        residual: rms,
        window: (floor, 10.0 * floor),
        points: pts.len(),
        plateau,
    }
}

/// sup_θ |e^{iθ} − 1|·‖R(e^{iθ},T)‖ over the sampled θ.
pub fn ritt_constant(profile: &ResolventProfile) -> f64 {
    profile
        .samples
        .iter()
        .map(|&(th, r)| (C64::from_polar(1.0, th) - 1.0).norm() * r)
        .fold(0.0, f64::max)
}

/// Whether every eigenvalue has |λ| < 1 or |λ − 1| ≤ tol; returns the
/// offending eigenvalue of largest modulus otherwise.
pub fn unit_circle_check(eigs: &[C64], tol: f64) -> std::result::Result<(), C64> {
    let mut worst: Option<C64> = None;
    for &l in eigs {
        if !(l.norm() < 1.0 || (l - 1.0).norm() <= tol) {
            if worst.map(|w| l.norm() > w.norm()).unwrap_or(true) {
                worst = Some(l);
            }
        }
    }
    match worst {
        None => Ok(()),
        Some(w) => Err(w),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErgodicMode {
    Cesaro,
    Power,
}

#[derive(Clone, Debug)]
pub struct ErgodicProjection {
    pub p: Operator,
    pub mode: ErgodicMode,
    /// Index n of the last average or power.
    pub n_reached: u64,
    pub converged: bool,
    /// Max-entry change at the last doubling.
    pub increment: f64,
    /// max |P² − P|.
    pub idempotency: f64,
    /// max(|TP − P|, |PT − P|).
    pub commutation: f64,
    /// max_k ‖T^{2^k}‖ for 2^k ≤ 1024.
    pub power_bound: f64,
}

pub const ERGODIC_TOL: f64 = 1e-10;
pub const ERGODIC_CAP: u64 = 1_000_000;

/// The mean-ergodic projection by Cesàro doubling A_{2n} = (A_n + TⁿA_n)/2
/// or by repeated squaring of T.
pub fn ergodic_projection(t: &MonodromyOperator, mode: ErgodicMode) -> Result<ErgodicProjection> {
    let op = &t.op;
    // power boundedness over n ≤ 10³
    let mut pw = op.clone();
    let mut power_bound = 1.0f64;
    for _ in 0..=10 {
        power_bound = power_bound.max(pw.norm());
        pw = pw.product(&pw);
    }
    if !(power_bound <= 1e3) {
        return Err(Error::numerical(
            "power-bounded",
            format!("sup ‖T^n‖ over n ≤ 1024 is {power_bound:e}"),
        ));
    }
    let (mut a, mut tn, mut n) = match mode {
        ErgodicMode::Power => (op.clone(), op.clone(), 1u64),
        ErgodicMode::Cesaro => (op.identity_like(), op.clone(), 1u64),
    };
    let mut increment = f64::INFINITY;
    let mut converged = false;
    while n < ERGODIC_CAP {
        let next = match mode {
            ErgodicMode::Power => a.product(&a),
            ErgodicMode::Cesaro => a.combine(&tn.product(&a), 0.5, 0.5),
        };
        increment = next.max_abs_diff(&a);
        a = next;
        if mode == ErgodicMode::Cesaro {
            tn = tn.product(&tn);
        }
        n *= 2;
        if increment < ERGODIC_TOL {
            converged = true;
            break;
        }
    }
    let p2 = a.product(&a);
    let idempotency = p2.max_abs_diff(&a);
    let tp = op.product(&a);
    let pt = a.product(op);
    let commutation = tp.max_abs_diff(&a).max(pt.max_abs_diff(&a));
    Ok(ErgodicProjection {
        p: a,
        mode,
        n_reached: n,
        converged,
        increment,
        idempotency,
        commutation,
        power_bound,
    })
}

/// Orthonormal basis (in the declared product) of Ran P, with the largest
/// residual ‖Tv − v‖ among the basis vectors.
pub fn fix_basis(t: &MonodromyOperator, p: &Operator) -> (Vec<Vec<f64>>, f64) {
    let w = t.inner.weight();
    let basis: Vec<Vec<f64>> = match p {
        Operator::Diagonal(d) => d
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.5)
            .map(|(i, _)| {
                let mut e = vec![0.0; d.len()];
                e[i] = 1.0 / w.sqrt();
                e
            })
            .collect(),
        Operator::Dense(m) => {
            let sym = linalg::symmetrize(m);
            match sym.self_adjoint_eigen(Side::Lower) {
                Ok(eig) => {
                    let s = eig.S().column_vector();
                    let u = eig.U();
                    (0..m.nrows())
                        .filter(|&k| s[k] > 0.5)
                        .map(|k| (0..m.nrows()).map(|i| u[(i, k)] / w.sqrt()).collect())
                        .collect()
                }
                Err(_) => Vec::new(),
            }
        }
    };
    let resid = basis
        .iter()
        .map(|v| {
            let tv = t.apply(v);
            let d: Vec<f64> = tv.iter().zip(v).map(|(a, b)| a - b).collect();
            t.inner.norm(&d)
        })
        .fold(0.0, f64::max);
    (basis, resid)
}

#[derive(Clone, Debug)]
pub struct RestrictedRadius {
    pub radius: f64,
    /// (n, ‖Sⁿ‖^{1/n}).
    pub gelfand: Vec<(u64, f64)>,
    pub slow_convergence: bool,
    /// 1 − r is within a few cell widths of zero: no gap at this resolution.
    pub near_unit: bool,
}

/// Spectral radius of S = (I−P)T(I−P) on Ran(I−P).
pub fn restricted_radius(t: &MonodromyOperator, p: &Operator) -> RestrictedRadius {
    let h = t.inner.cell_width();
    match (&t.op, p) {
        (Operator::Diagonal(m), Operator::Diagonal(pd)) => {
            let r = m
                .iter()
                .zip(pd)
                .map(|(&mi, &pi)| (mi * (1.0 - pi)).abs())
                .fold(0.0, f64::max);
            RestrictedRadius {
                radius: r,
                gelfand: vec![(32, r), (64, r), (128, r)],
                slow_convergence: false,
                near_unit: 1.0 - r <= 4.0 * h,
            }
        }
        _ => {
            let tm = t.op.to_dense();
            let pm = p.to_dense();
            let d = tm.nrows();
            let q = Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - pm[(i, j)]);
            let s = &(&q * &tm) * &q;
            let mut s16 = s.clone();
            for _ in 0..4 {
                s16 = &s16 * &s16;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0xab5);
            let mut radius = 0.0f64;
            for _ in 0..5 {
                let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let x0: Vec<f64> = linalg::mat_vec(&q, &x);
                x = x0;
                let mut logs = Vec::new();
                for _ in 0..625 {
                    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if nx == 0.0 || !nx.is_finite() {
                        break;
                    }
                    x.iter_mut().for_each(|v| *v /= nx);
                    x = linalg::mat_vec(&s16, &x);
                    let ny = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if ny == 0.0 {
                        logs.push(f64::NEG_INFINITY);
                        break;
                    }
                    logs.push(ny.ln());
                }
                let est = if logs.iter().any(|l| !l.is_finite()) {
                    0.0
                } else {
                    let tail = &logs[logs.len() / 2..];
                    (tail.iter().sum::<f64>() / tail.len() as f64 / 16.0).exp()
                };
                radius = radius.max(est);
            }
            let mut gelfand = Vec::new();
            let mut sp = s16;
            let mut n = 16u64;
            while n < 128 {
                sp = &sp * &sp;
                n *= 2;
                gelfand.push((n, linalg::norm2(&sp).powf(1.0 / n as f64)));
            }
            let slow = gelfand.windows(2).any(|w| (w[0].1 - w[1].1).abs() > 0.01);
            RestrictedRadius {
                radius,
                gelfand,
                slow_convergence: slow,
                near_unit: 1.0 - radius <= 4.0 * h,
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct FractionalPower {
    pub value: Vec<f64>,
    pub terms: usize,
    pub tail_bound: f64,
}

pub const FRACTIONAL_TOL: f64 = 1e-10;
pub const FRACTIONAL_CAP: usize = 1_000_000;

/// (I−T)^γ x = Σ c_k Tᵏ(I−P)x with c_k the Taylor coefficients of (1−z)^γ.
/// The Fix T part is annihilated exactly. Once k > γ+1 the remaining
/// coefficients share one sign, so the tail is bounded by
/// |Σ_{j≤K} c_j|·sup‖Tⁿ‖·‖T^K y‖.
pub fn fractional_power_apply(
    t: &MonodromyOperator,
    gamma: f64,
    x: &[f64],
    p: Option<&Operator>,
    power_bound: f64,
) -> Result<FractionalPower> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut y: Vec<f64> = match p {
        Some(p) => {
            let px = p.apply(x);
            x.iter().zip(&px).map(|(a, b)| a - b).collect()
        }
        None => x.to_vec(),
    };
    let xnorm = t.inner.norm(x).max(f64::MIN_POSITIVE);
    let mut acc = vec![0.0; x.len()];
    let mut c = 1.0;
    let mut partial = 0.0;
    let mut k = 0usize;
    loop {
        for (a, v) in acc.iter_mut().zip(&y) {
            *a += c * v;
        }
        partial += c;
        k += 1;
        let next = c * ((k as f64 - 1.0) - gamma) / k as f64;
        if next == 0.0 {
            return Ok(FractionalPower {
                value: acc,
                terms: k,
                tail_bound: 0.0,
            });
        }
        y = t.apply(&y);
        let ynorm = t.inner.norm(&y);
        if ynorm == 0.0 {
            return Ok(FractionalPower {
                value: acc,
                terms: k,
                tail_bound: 0.0,
            });
        }
        if k as f64 > gamma + 1.0 {
            let bound = partial.abs() * power_bound * ynorm;
            if bound < FRACTIONAL_TOL * xnorm {
                return Ok(FractionalPower {
                    value: acc,
                    terms: k,
                    tail_bound: bound,
                });
            }
            if k >= FRACTIONAL_CAP {
                return Err(Error::Truncated {
                    terms: k,
                    tail_bound: bound,
                    partial: acc,
                });
            }
        }
        c = next;
    }
}

/// n·‖Tⁿ(I−T)‖ at n = 1, 2, 4, …, n_max.
pub fn kt_profile(t: &MonodromyOperator, n_max: u64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    match &t.op {
        Operator::Diagonal(m) => {
            let mut n = 1u64;
            while n <= n_max {
                let nf = n as f64;
                let v = m
                    .iter()
                    .map(|&mi| nf * mi.abs().powf(nf) * (1.0 - mi).abs())
                    .fold(0.0, f64::max);
                out.push((n, v));
                n *= 2;
            }
        }
        Operator::Dense(a) => {
            let mut tn = a.clone();
            let mut n = 1u64;
            while n <= n_max {
                let tn1 = &tn * a;
                let diff = Mat::from_fn(a.nrows(), a.ncols(), |i, j| tn[(i, j)] - tn1[(i, j)]);
                out.push((n, n as f64 * linalg::norm2(&diff)));
                tn = &tn * &tn;
                n *= 2;
            }
        }
    }
    out
}

/// Everything the spectral module reports about one monodromy.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub dim: usize,
    pub inner: InnerProduct,
    pub eigenvalues: Vec<C64>,
    pub profile: ResolventProfile,
    pub alpha: AlphaFit,
    pub ritt_constant: f64,
    pub projection: ErgodicProjection,
    pub fix_dim: usize,
    pub fix_residual: f64,
    pub restricted: RestrictedRadius,
    pub kt: Vec<(u64, f64)>,
}

pub fn spectral_report(t: &MonodromyOperator, thetas: &[f64], kt_max: u64) -> Result<SpectralReport> {
    let eigenvalues = t.eigenvalues()?;
    let profile = boundary_resolvent(t, thetas);
    let alpha = fit_alpha(&profile);
    let ritt = ritt_constant(&profile);
    let projection = ergodic_projection(t, ErgodicMode::Power)?;
    let (basis, fix_residual) = fix_basis(t, &projection.p);
    let restricted = restricted_radius(t, &projection.p);
    let kt = kt_profile(t, kt_max);
    Ok(SpectralReport {
        dim: t.dim(),
        inner: t.inner,
        eigenvalues,
        profile,
        alpha,
        ritt_constant: ritt,
        projection,
        fix_dim: basis.len(),
        fix_residual,
        restricted,
        kt,
    })
}
