//! Distances ‖z(nτ) − z₀(nτ)‖ along trajectories, exponential and
//! polynomial fits, and initial data built to land in each decay regime.

use crate::error::{Error, Result};
use crate::geometry::{self, DampingRegion, A_TOL};
use crate::linalg;
use crate::spectral::{linear_fit, MonodromyOperator, Operator};
use crate::transport::{self, TransportMonodromy, TransportState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// x − Px is (numerically) zero: the trajectory is periodic from the start.
    Exact,
    Exponential { beta: f64 },
    Polynomial { gamma: f64 },
    Superpolynomial,
    Stagnant,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> String {
        match self {
            Verdict::Exact => "exact".into(),
            Verdict::Exponential { beta } => format!("exponential(beta={beta:.6})"),
            Verdict::Polynomial { gamma } => format!("polynomial(gamma={gamma:.6})"),
            Verdict::Superpolynomial => "superpolynomial".into(),
            Verdict::Stagnant => "stagnant".into(),
            Verdict::Inconclusive => "inconclusive".into(),
        }
    }
}

/// ln d ≈ ln M − β t.
#[derive(Clone, Copy, Debug)]
pub struct ExpFit {
    pub beta: f64,
    pub m: f64,
    pub residual: f64,
    pub std_err: f64,
}

/// ln d ≈ ln c − γ ln t.
#[derive(Clone, Copy, Debug)]
pub struct PolyFit {
    pub gamma: f64,
    pub c: f64,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct RateFit {
    /// (t, distance) with t = nτ.
    pub series: Vec<(f64, f64)>,
    pub exp_fit: Option<ExpFit>,
    /// Exponential fit over the final half of the usable range: multi-mode
    /// transients have died out there, so this is the asymptotic rate.
    pub tail_fit: Option<ExpFit>,
    pub poly_fit: Option<PolyFit>,
    /// Times (t_lo, t_hi) of the fitted window.
    pub window: (f64, f64),
    pub verdict: Verdict,
}

/// Periods excluded from fits as transient.
pub const TRANSIENT: u64 = 10;
/// Distances below this fraction of the initial one are round-off.
pub const FLOOR: f64 = 1e-13;

/// Sample indices: every period up to 16, then 40 per decade, then the
/// stride multiples, up to `horizon` periods.
pub fn sample_points(horizon: u64, stride: u64) -> Vec<u64> {
    let mut pts: Vec<u64> = (0..=horizon.min(16)).collect();
    if horizon > 16 {
        let decades = (horizon as f64 / 16.0).log10();
        let count = (decades * 40.0).ceil() as usize;
        for k in 1..=count {
            let n = (16.0 * 10f64.powf(decades * k as f64 / count as f64)).round() as u64;
            pts.push(n.min(horizon));
        }
    }
    if stride > 0 {
        pts.extend((1..=horizon / stride).map(|k| k * stride));
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Fits both models over the final decade of n ≥ 10 and applies the
/// verdict rules.
pub fn fit_series(samples: &[(u64, f64)], period: f64) -> RateFit {
    let series: Vec<(f64, f64)> = samples.iter().map(|&(n, d)| (n as f64 * period, d)).collect();
    let d0 = samples.first().map(|s| s.1).unwrap_or(0.0);
    let mut out = RateFit {
        series,
        exp_fit: None,
        tail_fit: None,
        poly_fit: None,
        window: (0.0, 0.0),
        verdict: Verdict::Inconclusive,
    };
    if d0 == 0.0 || samples.iter().all(|s| s.1 <= FLOOR * d0.max(f64::MIN_POSITIVE)) {
        out.verdict = Verdict::Exact;
        return out;
    }
    let floor = FLOOR * d0;
    let usable: Vec<(u64, f64)> = samples.iter().copied().filter(|&(n, d)| n >= TRANSIENT && d > floor).collect();
    let reached_floor = samples.iter().any(|&(n, d)| n >= 1 && d <= floor);
    let Some(&(n_last, _)) = usable.last() else {
        // hit round-off before the transient ended
        out.verdict = if reached_floor { Verdict::Exponential { beta: f64::INFINITY } } else { Verdict::Inconclusive };
        return out;
    };
    let lo = (n_last / 10).max(TRANSIENT);
    let win: Vec<(u64, f64)> = usable.iter().copied().filter(|&(n, _)| n >= lo).collect();
    if win.len() < 4 {
        if reached_floor {
            let (t, y): (Vec<f64>, Vec<f64>) =
                usable.iter().map(|&(n, d)| (n as f64 * period, d.ln())).unzip();
            if t.len() >= 2 {
                let (ic, slope, res, se) = linear_fit(&t, &y);
                out.exp_fit = Some(ExpFit { beta: -slope, m: ic.exp(), residual: res, std_err: se });
            }
            out.verdict = Verdict::Exponential { beta: out.exp_fit.map(|f| f.beta).unwrap_or(f64::INFINITY) };
        }
        return out;
    }
    out.window = (win[0].0 as f64 * period, win[win.len() - 1].0 as f64 * period);
    let t: Vec<f64> = win.iter().map(|&(n, _)| n as f64 * period).collect();
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let ld: Vec<f64> = win.iter().map(|&(_, d)| d.ln()).collect();
    let (ic, slope, eres, se) = linear_fit(&t, &ld);
    let exp_fit = ExpFit { beta: (-slope).max(0.0), m: ic.exp(), residual: eres, std_err: se };
    let (pic, pslope, pres, _) = linear_fit(&lt, &ld);
    let poly_fit = PolyFit { gamma: (-pslope).max(0.0), c: pic.exp(), residual: pres };
    out.exp_fit = Some(exp_fit);
    out.poly_fit = Some(poly_fit);
    let tail: Vec<&(u64, f64)> = win.iter().filter(|p| p.0 >= n_last / 2).collect();
    if tail.len() >= 4 {
        let tt: Vec<f64> = tail.iter().map(|p| p.0 as f64 * period).collect();
        let ty: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
        let (ic, slope, res, se) = linear_fit(&tt, &ty);
        out.tail_fit = Some(ExpFit { beta: (-slope).max(0.0), m: ic.exp(), residual: res, std_err: se });
    }
    // early multi-mode curvature spoils the decade fit while the tail is
    // already a single exponential
    let tail_linear = out.tail_fit.map(|f| f.residual < 0.01).unwrap_or(false);
    let horizon = out.window.1;
    // stagnation: under 1e−6 relative change per decade of the window
    let (d_first, d_last) = (win[0].1, win[win.len() - 1].1);
    let decades = ((win[win.len() - 1].0 as f64) / (win[0].0 as f64)).log10().max(1e-300);
    let per_decade = ((d_first - d_last).abs() / d_first) / decades;
    out.verdict = if per_decade < 1e-6 {
        Verdict::Stagnant
    } else if (exp_fit.residual < 0.01 || tail_linear || reached_floor)
        && exp_fit.residual < poly_fit.residual
        && exp_fit.beta * horizon > 5.0
        && exp_fit.beta > 10.0 * exp_fit.std_err
    {
        Verdict::Exponential { beta: out.tail_fit.unwrap_or(exp_fit).beta }
    } else if poly_fit.residual < 0.05 {
        Verdict::Polynomial { gamma: poly_fit.gamma }
    } else if growing_slope(&usable) {
        Verdict::Superpolynomial
    } else {
        Verdict::Inconclusive
    };
    out
}

/// log-log slope of the last decade at least 1.5 times that of the decade
/// before, with the slope itself ≥ 1.
fn growing_slope(usable: &[(u64, f64)]) -> bool {
    let n_last = match usable.last() {
        Some(&(n, _)) => n,
        None => return false,
    };
    let slope = |lo: u64, hi: u64| {
        let w: Vec<&(u64, f64)> = usable.iter().filter(|p| p.0 >= lo && p.0 <= hi).collect();
        if w.len() < 3 {
            return None;
        }
        let x: Vec<f64> = w.iter().map(|p| (p.0 as f64).ln()).collect();
        let y: Vec<f64> = w.iter().map(|p| p.1.ln()).collect();
        Some(-linear_fit(&x, &y).1)
    };
    match (slope(n_last / 100, n_last / 10), slope(n_last / 10, n_last)) {
        (Some(a), Some(b)) => b >= 1.0 && b >= 1.5 * a.max(0.0),
        _ => false,
    }
}

/// Transport distances ‖Tⁿ(x − Px)‖ with sub-cell exact norms; z₀ = Px is
/// constant at period multiples.
pub fn measure_transport(mono: &TransportMonodromy, x: &TransportState, horizon: u64, stride: u64) -> RateFit {
    let y = x.sub(&mono.fixed_projection(x));
    let samples: Vec<(u64, f64)> = sample_points(horizon, stride)
        .into_iter()
        .map(|n| (n, if n == 0 { y.norm() } else { mono.power_norm(&y, n) }))
        .collect();
    fit_series(&samples, 1.0)
}

/// Distances ‖Tⁿ(x − Px)‖ by repeated application of an assembled monodromy.
pub fn measure_operator(
    t: &MonodromyOperator,
    p: &Operator,
    x: &[f64],
    horizon: u64,
    stride: u64,
) -> RateFit {
    let px = p.apply(x);
    let mut y: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
    let pts = sample_points(horizon, stride);
    let mut samples = Vec::with_capacity(pts.len());
    let mut n = 0u64;
    for &target in &pts {
        while n < target {
            y = t.apply(&y);
            n += 1;
        }
        samples.push((n, t.inner.norm(&y)));
    }
    fit_series(&samples, t.period)
}

/// x(s) = a(s)^{γ+margin} on I_a and zero on J_a, as a function of s.
pub fn polynomial_profile(region: &DampingRegion, gamma: f64, margin: f64) -> impl Fn(f64) -> f64 + '_ {
    move |s: f64| {
        let a = geometry::line_average_at(region, s).unwrap_or(0.0);
        if a > A_TOL {
            a.powf(gamma + margin)
        } else {
            0.0
        }
    }
}

/// Grid data in the rate class of exponent γ but not of γ + 2·margin + ½.
pub fn make_polynomial_data(region: &DampingRegion, n: usize, gamma: f64, margin: f64) -> Result<TransportState> {
    if !(gamma > 0.0 && margin >= 0.0) {
        return Err(Error::InvalidParameter("need gamma > 0 and margin >= 0".into()));
    }
    let p = geometry::line_average(region, n)?;
    if p.active_set().is_empty() {
        return Err(Error::InvalidParameter("a vanishes identically: no decaying data".into()));
    }
    let e = gamma + margin;
    Ok(TransportState::new(
        p.values.iter().map(|&a| if a > A_TOL { a.powf(e) } else { 0.0 }).collect(),
    ))
}

#[derive(Clone, Debug)]
pub struct Soundness {
    pub membership: transport::Membership,
    /// c = n₀^γ d(n₀) fitted at the window start n₀ = 16.
    pub c: f64,
    /// max over the window of n^γ d(n)/c.
    pub worst_ratio: f64,
    pub holds: bool,
}

/// If a^{−γ}(x − Px) ∈ L², then d(n) ≤ c·n^{−γ} over [16, horizon] with c
/// fitted at n = 16 (one percent tolerance).
pub fn soundness_check(
    region: &DampingRegion,
    x: &dyn Fn(f64) -> f64,
    gamma: f64,
    n: usize,
    horizon: u64,
) -> Result<Soundness> {
    let rc = transport::rate_class(region, x, gamma, 256, n.max(256))?;
    let mono = transport::monodromy(region, n)?;
    let xs = TransportState::from_fn(n, x);
    let y = xs.sub(&mono.fixed_projection(&xs));
    let d16 = mono.power_norm(&y, 16);
    let c = 16f64.powf(gamma) * d16;
    let mut worst = 0.0f64;
    for k in sample_points(horizon, 0).into_iter().filter(|&k| k >= 16) {
        let r = (k as f64).powf(gamma) * mono.power_norm(&y, k) / c.max(f64::MIN_POSITIVE);
        worst = worst.max(r);
    }
    let holds = !rc.is_member() || worst <= 1.01;
    Ok(Soundness {
        membership: rc.membership,
        c,
        worst_ratio: worst,
        holds,
    })
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub n: u64,
    pub target: f64,
    pub achieved: f64,
    /// Largest ‖Tⁿ(I−P)v‖ over unit v: no data of norm ≤ cap can beat
    /// cap times this.
    pub best_possible: f64,
}

#[derive(Clone, Debug)]
pub struct SlowData {
    pub coords: Vec<f64>,
    pub norm: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub passed: bool,
}

/// Upper bound on the norm of slow data; without it any target is met by
/// scaling.
pub const SLOW_NORM_CAP: f64 = 10.0;

fn slow_targets(r: &dyn Fn(f64) -> f64, levels: usize) -> Vec<(u64, f64)> {
    (1..=levels).map(|k| (1u64 << k, r((1u64 << k) as f64))).collect()
}

/// Transport slow data: x = Σ c_k 𝟙_{A_k} with A_k = {a < 2/n_k} on I_a and
/// c_k raised greedily until ‖T^{n_k}x‖ ≥ r(n_k) at n_k = 2ᵏ.
pub fn make_slow_data(
    region: &DampingRegion,
    n: usize,
    r: &dyn Fn(f64) -> f64,
    levels: usize,
) -> Result<SlowData> {
    let mono = transport::monodromy(region, n)?;
    let prof = &mono.profile;
    let h = prof.cell_width();
    let active = prof.active_set();
    if active.is_empty() {
        return Err(Error::InvalidParameter("a vanishes identically".into()));
    }
    let targets = slow_targets(r, levels);
    if targets.iter().all(|t| t.1 <= 0.0) {
        let mut v = vec![0.0; n];
        let scale = 1.0 / ((active.len() as f64) * h).sqrt();
        for &i in &active {
            v[i] = scale;
        }
        return Ok(SlowData {
            coords: v,
            norm: 1.0,
            checkpoints: Vec::new(),
            passed: true,
        });
    }
    let min_a = prof.min_active().unwrap_or(0.0);
    let eps_last = 2.0 / targets.last().unwrap().0 as f64;
    if min_a >= eps_last {
        return Err(Error::numerical(
            "slow-data",
            format!(
                "exponential regime: ess inf of a on I_a is {min_a:e} at N = {n}, above the last level 2/n_K = {eps_last:e}"
            ),
        ));
    }
    let norm_at = |x: &[f64], k: u64| mono.power_norm_midpoint(&TransportState::new(x.to_vec()), k);
    let mut x = vec![0.0; n];
    for &(nk, target) in &targets {
        let eps = 2.0 / nk as f64;
        let ind: Vec<usize> = active.iter().copied().filter(|&i| prof.values[i] < eps).collect();
        let cur = norm_at(&x, nk);
        if cur >= target || ind.is_empty() {
            continue;
        }
        // ‖Tⁿ(x + c𝟙)‖² = cur² + 2cβ + c²α with nonnegative data
        let nf = nk as f64;
        let (mut alpha, mut beta) = (0.0, 0.0);
        for &i in &ind {
            let w = (-2.0 * nf * prof.values[i]).exp() * h;
            alpha += w;
            beta += w * x[i];
        }
        let c = (-beta + (beta * beta + alpha * (target * target - cur * cur)).sqrt()) / alpha;
        let c = c * (1.0 + 1e-9);
        for &i in &ind {
            x[i] += c;
        }
    }
    let xs = TransportState::new(x.clone());
    let norm = xs.norm();
    let mut passed = norm <= SLOW_NORM_CAP;
    let checkpoints = targets
        .iter()
        .map(|&(nk, target)| {
            let achieved = norm_at(&x, nk);
            passed &= achieved >= target;
            let best = active
                .iter()
                .map(|&i| (-(nk as f64) * prof.values[i]).exp())
                .fold(0.0, f64::max);
            Checkpoint {
                n: nk,
                target,
                achieved,
                best_possible: best,
            }
        })
        .collect();
    Ok(SlowData {
        coords: x,
        norm,
        checkpoints,
        passed,
    })
}

/// Slow data for an assembled monodromy: x = Σ c_k v_k with v_k the top
/// right singular vector of T^{n_k}(I−P), grown greedily. The best-possible
/// column certifies infeasibility when cap·‖T^{n_k}(I−P)‖ < r(n_k).
pub fn make_slow_data_operator(
    t: &MonodromyOperator,
    p: &Operator,
    r: &dyn Fn(f64) -> f64,
    levels: usize,
) -> Result<SlowData> {
    let d = t.dim();
    let w = t.inner.weight();
    let targets = slow_targets(r, levels);
    let tm = t.op.to_dense();
    let pm = p.to_dense();
    let q = faer::Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - pm[(i, j)]);
    let mut power = &tm * &q;
    let mut cur_n = 1u64;
    let mut x = vec![0.0; d];
    let mut checkpoints = Vec::new();
    let mut mats = Vec::new();
    for &(nk, target) in &targets {
        while cur_n < nk {
            power = &power * &power;
            cur_n *= 2;
        }
        let best = linalg::norm2(&power);
        mats.push(power.clone());
        let apply = |v: &[f64]| linalg::mat_vec(&power, v);
        let norm = |v: &[f64]| (w * v.iter().map(|a| a * a).sum::<f64>()).sqrt();
        let cur = norm(&apply(&x));
        // unreachable levels are left alone: the certificate fails there
        // regardless, and chasing them would blow up the norm
        if cur < target && best * SLOW_NORM_CAP >= target {
            let v = top_right_singular(&power);
            let tv = apply(&v);
            let tx = apply(&x);
            // grow c ≥ 0 along ±v until the target is met
            let a: f64 = w * tv.iter().map(|z| z * z).sum::<f64>();
            let b: f64 = w * tv.iter().zip(&tx).map(|(p, q)| p * q).sum::<f64>();
            let sgn = if b >= 0.0 { 1.0 } else { -1.0 };
            let disc = b * b + a * (target * target - cur * cur);
            let c = (-b.abs() + disc.max(0.0).sqrt()) / a;
            for (xi, vi) in x.iter_mut().zip(&v) {
                *xi += sgn * c * (1.0 + 1e-9) * vi;
            }
        }
        checkpoints.push(Checkpoint {
            n: nk,
            target,
            achieved: 0.0,
            best_possible: best,
        });
    }
    let norm = t.inner.norm(&x);
    let mut passed = norm <= SLOW_NORM_CAP;
    for (cp, m) in checkpoints.iter_mut().zip(&mats) {
        cp.achieved = t.inner.norm(&linalg::mat_vec(m, &x));
        passed &= cp.achieved >= cp.target;
    }
    Ok(SlowData {
        coords: x,
        norm,
        checkpoints,
        passed,
    })
}

/// Unit (in the Euclidean sense, rescaled by the inner-product weight by
/// the caller) top right singular vector by power iteration on AᵀA.
fn top_right_singular(a: &faer::Mat<f64>) -> Vec<f64> {
    let n = a.ncols();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 * 0.01).collect();
    let at = a.transpose().to_owned();
    for _ in 0..300 {
        let av = linalg::mat_vec(a, &v);
        let mut nv = linalg::mat_vec(&at, &av);
        let s = nv.iter().map(|z| z * z).sum::<f64>().sqrt();
        if s == 0.0 {
            break;
        }
        nv.iter_mut().for_each(|z| *z /= s);
        let diff: f64 = nv.iter().zip(&v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        v = nv;
        if diff < 1e-12 {
            break;
        }
    }
    v
}

/// Transport superpolynomial data: Px + χ(a)(x − Px), with χ a smooth step
/// vanishing where a ≤ ε and equal to one where a ≥ 2ε.
pub fn make_superpoly_transport(mono: &TransportMonodromy, seed: &TransportState, eps: f64) -> TransportState {
    let px = mono.fixed_projection(seed);
    let y = seed.sub(&px);
    let values = y
        .values
        .iter()
        .zip(&mono.profile.values)
        .zip(&px.values)
        .map(|((v, &a), p)| p + smooth_step((a - eps) / eps) * v)
        .collect();
    TransportState::new(values)
}

/// C^∞ step: 0 for u ≤ 0, 1 for u ≥ 1.
pub fn smooth_step(u: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let (p, q) = (f(u), f(1.0 - u));
    if p + q == 0.0 {
        0.0
    } else {
        p / (p + q)
    }
}

/// Superpolynomial data for an assembled monodromy: (I−T)ᵏx + Px.
pub fn make_superpoly_operator(t: &MonodromyOperator, p: &Operator, seed: &[f64], k: u32) -> Vec<f64> {
    let mut y = seed.to_vec();
    for _ in 0..k {
        let ty = t.apply(&y);
        y = y.iter().zip(&ty).map(|(a, b)| a - b).collect();
    }
    let px = p.apply(seed);
    y.iter().zip(&px).map(|(a, b)| a + b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_polynomial_series() {
        let exp: Vec<(u64, f64)> = sample_points(200, 0).into_iter().map(|n| (n, (-0.1 * n as f64).exp())).collect();
        let f = fit_series(&exp, 1.0);
        match f.verdict {
            Verdict::Exponential { beta } => assert!((beta - 0.1).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
        let poly: Vec<(u64, f64)> =
            sample_points(10_000, 0).into_iter().map(|n| (n, 3.0 / (1.0 + n as f64).powf(0.7))).collect();
        let f = fit_series(&poly, 1.0);
        match f.verdict {
            Verdict::Polynomial { gamma } => assert!((gamma - 0.7).abs() < 0.01, "{gamma}"),
            v => panic!("{v:?}"),
        }
        let flat: Vec<(u64, f64)> = sample_points(1000, 0).into_iter().map(|n| (n, 1.0)).collect();
        assert_eq!(fit_series(&flat, 1.0).verdict, Verdict::Stagnant);
        let zero: Vec<(u64, f64)> = sample_points(100, 0).into_iter().map(|n| (n, 0.0)).collect();
        assert_eq!(fit_series(&zero, 1.0).verdict, Verdict::Exact);
    }

    #[test]
    fn two_mode_series_is_exponential() {
        // slow mode plus a large fast transient: curved over the decade,
        // log-linear in the tail
        let s: Vec<(u64, f64)> = sample_points(150, 0)
            .into_iter()
            .map(|n| {
                let t = 2.0 * n as f64;
                (n, (-0.09 * t).exp() + 40.0 * (-0.2 * t).exp())
            })
            .collect();
        let f = fit_series(&s, 2.0);
        assert!(f.exp_fit.unwrap().residual > 0.01);
        match f.verdict {
            Verdict::Exponential { beta } => assert!((beta - 0.09).abs() < 1e-3, "{beta}"),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn transport_rate_oracle() {
        // CornerSquare(1/2), x ≡ 1: ‖Tⁿx‖² = (1 − e^{−n})/n
        let region = DampingRegion::corner_square(0.5).unwrap();
        let mono = transport::monodromy(&region, 1024).unwrap();
        let x = TransportState::from_fn(1024, |_| 1.0);
        let f = measure_transport(&mono, &x, 10_000, 0);
        match f.verdict {
            Verdict::Polynomial { gamma } => assert!((gamma - 0.5).abs() < 0.1, "{gamma}"),
            v => panic!("{v:?}"),
        }
        for &(t, d) in &f.series {
            // the grid resolves e^{−ns} for n up to about N
            if (1.0..=1000.0).contains(&t) {
                let exact = ((-(-t).exp_m1()) / t).sqrt();
                assert!((d - exact).abs() < 2e-3 * exact, "t={t}");
            }
        }
    }

    #[test]
    fn polynomial_data_rate() {
        let region = DampingRegion::corner_square(0.5).unwrap();
        let x = make_polynomial_data(&region, 2048, 1.0, 0.1).unwrap();
        let mono = transport::monodromy(&region, 2048).unwrap();
        let f = measure_transport(&mono, &x, 300, 0);
        match f.verdict {
            Verdict::Polynomial { gamma } => assert!((0.9..=1.7).contains(&gamma), "{gamma}"),
            v => panic!("{v:?}"),
        }
        // data in J_a does not move
        let sq = DampingRegion::corner_square(0.3).unwrap();
        let m3 = transport::monodromy(&sq, 256).unwrap();
        let xj = TransportState::from_fn(256, |s| if s > 0.6 { 1.0 + s } else { 0.0 });
        assert_eq!(measure_transport(&m3, &xj, 100, 0).verdict, Verdict::Exact);
    }

    #[test]
    fn soundness_on_polynomial_data() {
        let region = DampingRegion::corner_square(0.5).unwrap();
        for gamma in [0.5, 1.0, 2.0] {
            let f = polynomial_profile(&region, gamma, 0.1);
            let s = soundness_check(&region, &f, gamma, 2048, 2000).unwrap();
            assert!(s.holds, "gamma={gamma}: {s:?}");
        }
    }

    #[test]
    fn slow_data_transport() {
        let region = DampingRegion::corner_square(0.5).unwrap();
        let r = |n: f64| 1.0 / (n + 2.0).ln();
        let s = make_slow_data(&region, 1 << 14, &r, 10).unwrap();
        assert!(s.passed, "{s:?}");
        let zero = |_: f64| 0.0;
        let s = make_slow_data(&region, 256, &zero, 10).unwrap();
        assert!((s.norm - 1.0).abs() < 1e-12);
        // a ≥ c on I_a: the rectangle spanning a full period
        let band = DampingRegion::rectangles(vec![geometry::Rect::new(0.2, 0.4, 0.0, 1.0)], 1.0).unwrap();
        assert!(make_slow_data(&band, 256, &r, 10).is_err());
    }

    #[test]
    fn superpoly_transport() {
        let region = DampingRegion::corner_square(0.5).unwrap();
        let mono = transport::monodromy(&region, 2048).unwrap();
        let seed = TransportState::from_fn(2048, |_| 1.0);
        let x = make_superpoly_transport(&mono, &seed, 0.05);
        let f = measure_transport(&mono, &x, 2000, 0);
        assert!(matches!(f.verdict, Verdict::Exponential { .. }), "{:?}", f.verdict);
        assert!(smooth_step(-1.0) == 0.0 && smooth_step(2.0) == 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }
}
