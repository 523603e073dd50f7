//! Periodically damped transport z_t = z_s − b z on the circle: exact
//! solution along characteristics and the diagonal monodromy m = e^{−a}.

use crate::error::{Error, Result};
use crate::geometry::{self, DampingRegion, LineAverageProfile, A_TOL};
use crate::quadrature;

/// Grid function on the cell centers sᵢ = (i+½)/N with the discrete L² norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportState {
    pub values: Vec<f64>,
}

impl TransportState {
    pub fn new(values: Vec<f64>) -> Self {
        TransportState { values }
    }

    pub fn zeros(n: usize) -> Self {
        TransportState { values: vec![0.0; n] }
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Self {
        TransportState {
            values: (0..n).map(|i| f((i as f64 + 0.5) / n as f64)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.cell_width()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        TransportState::new(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        TransportState::new(self.values.iter().map(|v| c * v).collect())
    }

    /// x(· + t) on the periodic grid: an index rotation when tN is an
    /// integer, linear interpolation otherwise.
    pub fn shifted(&self, t: f64) -> Self {
        let n = self.n();
        let steps = t * n as f64;
        let k = steps.round();
        if (steps - k).abs() < 1e-9 {
            let k = (k as i64).rem_euclid(n as i64) as usize;
            let values = (0..n).map(|i| self.values[(i + k) % n]).collect();
            return TransportState::new(values);
        }
        let values = (0..n)
            .map(|i| {
                let p = i as f64 + steps;
                let j = p.floor();
                let f = p - j;
                let j0 = (j as i64).rem_euclid(n as i64) as usize;
                let j1 = (j0 + 1) % n;
                (1.0 - f) * self.values[j0] + f * self.values[j1]
            })
            .collect();
        TransportState::new(values)
    }
}

fn require_transport(region: &DampingRegion) -> Result<()> {
    if (region.period() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "transport needs a 1-periodic damping, got period {}",
            region.period()
        )));
    }
    Ok(())
}

/// ∫₀ᵗ b(σ − r, r) dr, using 1-periodicity for whole periods.
fn accumulated_damping(region: &DampingRegion, sigma: f64, t: f64) -> f64 {
    let whole = t.floor();
    let mut total = 0.0;
    if whole > 0.0 {
        total += whole * geometry::line_average_at(region, sigma.rem_euclid(1.0)).unwrap_or(0.0);
    }
    if t > whole {
        total += geometry::transport_line(sigma, whole, t)
            .iter()
            .map(|seg| region.segment_integral(seg))
            .sum::<f64>();
    }
    total
}

/// z(·, t) for initial data x.
pub fn solve(region: &DampingRegion, x: &TransportState, t: f64) -> Result<TransportState> {
    require_transport(region)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    let n = x.n();
    let mut z = x.shifted(t);
    for (i, zi) in z.values.iter_mut().enumerate() {
        if *zi != 0.0 {
            let sigma = (i as f64 + 0.5) / n as f64 + t;
            *zi *= (-accumulated_damping(region, sigma, t)).exp();
        }
    }
    Ok(z)
}

/// T = U(1,0) as the multiplier m = e^{−a} on the cell grid, with a also
/// sampled at four Gauss nodes per cell for sub-cell accurate norms.
#[derive(Clone, Debug)]
pub struct TransportMonodromy {
    pub profile: LineAverageProfile,
    pub m: Vec<f64>,
    sub_a: Vec<[f64; 4]>,
    sub_w: [f64; 4],
}

pub fn monodromy(region: &DampingRegion, n: usize) -> Result<TransportMonodromy> {
    require_transport(region)?;
    let profile = geometry::line_average(region, n)?;
    let m = profile
        .values
        .iter()
        .enumerate()
        .map(|(i, &a)| if profile.is_active(i) { (-a).exp() } else { 1.0 })
        .collect();
    let (x, w) = quadrature::gl4();
    let h = 1.0 / n as f64;
    let mut sub_a = Vec::with_capacity(n);
    for i in 0..n {
        let mut cell = [0.0; 4];
        if profile.is_active(i) {
            for q in 0..4 {
                let s = (i as f64 + 0.5 + 0.5 * x[q]) * h;
                cell[q] = geometry::line_average_at(region, s)?.max(0.0);
            }
        }
        sub_a.push(cell);
    }
    let sub_w = [0.5 * w[0], 0.5 * w[1], 0.5 * w[2], 0.5 * w[3]];
    Ok(TransportMonodromy {
        profile,
        m,
        sub_a,
        sub_w,
    })
}

impl TransportMonodromy {
    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn apply(&self, x: &TransportState) -> TransportState {
        TransportState::new(x.values.iter().zip(&self.m).map(|(x, m)| x * m).collect())
    }

    /// Tⁿx computed entrywise as e^{−n a}x.
    pub fn apply_power(&self, x: &TransportState, n: u64) -> TransportState {
        let values = x
            .values
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                if self.profile.is_active(i) {
                    xi * (-(n as f64) * self.profile.values[i]).exp()
                } else {
                    xi
                }
            })
            .collect();
        TransportState::new(values)
    }

    /// 𝟙_{J_a} x, the orthogonal projection onto Fix T.
    pub fn fixed_projection(&self, x: &TransportState) -> TransportState {
        let values = x
            .values
            .iter()
            .enumerate()
            .map(|(i, &xi)| if self.profile.is_active(i) { 0.0 } else { xi })
            .collect();
        TransportState::new(values)
    }

    /// ‖Tⁿx‖ for the piecewise-constant interpolant of x, integrating
    /// e^{−2n a(s)} exactly within each cell by 4-point Gauss–Legendre.
    /// Cells of J_a keep multiplier one. Evaluated in log space.
    pub fn power_norm(&self, x: &TransportState, n: u64) -> f64 {
        let h = self.cell_width();
        let nf = n as f64;
        let mut logs = Vec::with_capacity(4 * self.n());
        for (i, &xi) in x.values.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let base = 2.0 * xi.abs().ln() + h.ln();
            if self.profile.is_active(i) {
                for q in 0..4 {
                    logs.push(base + self.sub_w[q].ln() - 2.0 * nf * self.sub_a[i][q]);
                }
            } else {
                logs.push(base);
            }
        }
        log_sum_exp(&logs).map(|l| (0.5 * l).exp()).unwrap_or(0.0)
    }

    /// ‖Tⁿx‖ with the cell-center multiplier, (Δs Σ e^{−2n aᵢ}|xᵢ|²)^{1/2}.
    pub fn power_norm_midpoint(&self, x: &TransportState, n: u64) -> f64 {
        let h = self.cell_width();
        let nf = n as f64;
        let logs: Vec<f64> = x
            .values
            .iter()
            .enumerate()
            .filter(|(_, &xi)| xi != 0.0)
            .map(|(i, &xi)| {
                let a = if self.profile.is_active(i) { self.profile.values[i] } else { 0.0 };
                2.0 * xi.abs().ln() + h.ln() - 2.0 * nf * a
            })
            .collect();
        log_sum_exp(&logs).map(|l| (0.5 * l).exp()).unwrap_or(0.0)
    }

    /// max_i n·mᵢⁿ(1 − mᵢ).
    pub fn kt_value(&self, n: u64) -> f64 {
        let nf = n as f64;
        self.m
            .iter()
            .map(|&m| if m >= 1.0 { 0.0 } else { nf * m.powf(nf) * (1.0 - m) })
            .fold(0.0, f64::max)
    }
}

fn log_sum_exp(logs: &[f64]) -> Option<f64> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let s: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Some(max + s.ln())
}

/// sup_{m ∈ [0,1]} n mⁿ(1−m) = (n/(n+1))^{n+1}.
pub fn kt_bound(n: u64) -> f64 {
    let nf = n as f64;
    (nf / (nf + 1.0)).powf(nf + 1.0)
}

/// Dᵢ = ∫₀¹ b(σᵢ − t, t) e^{−2Λ(σᵢ,t)} dt with Λ the accumulated damping,
/// integrated piece by piece along the characteristic.
fn one_period_dissipation(region: &DampingRegion, sigma: f64) -> f64 {
    let mut lambda = 0.0;
    let mut total = 0.0;
    for seg in geometry::transport_line(sigma, 0.0, 1.0) {
        let breaks = region.segment_breaks(&seg);
        for w in breaks.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let b_at = |t: f64| region.b_wrapped(seg.s_at(t), t);
            let mut inner = |t: f64| {
                let mut cum = |r: f64| b_at(r);
                let local = if t > t0 { quadrature::gl16_interval(&mut cum, t0, t) } else { 0.0 };
                b_at(t) * (-2.0 * (lambda + local)).exp()
            };
            total += quadrature::gl16_interval(&mut inner, t0, t1);
            let mut b_only = |t: f64| b_at(t);
            lambda += quadrature::gl16_interval(&mut b_only, t0, t1);
        }
    }
    total
}

/// ∫₀ⁿ ‖b(·,t)^{1/2} z(·,t)‖² dt for the exact solution on the grid,
/// computed independently of the monodromy: one period of dissipation per
/// characteristic, then a geometric sum over periods.
pub fn damping_integral(
    region: &DampingRegion,
    mono: &TransportMonodromy,
    x: &TransportState,
    periods: u64,
) -> f64 {
    let n = x.n();
    let h = 1.0 / n as f64;
    let mut total = 0.0;
    for (i, &xi) in x.values.iter().enumerate() {
        if xi == 0.0 || !mono.profile.is_active(i) {
            continue;
        }
        let d = one_period_dissipation(region, (i as f64 + 0.5) * h);
        let a = mono.profile.values[i];
        // Σ_{k<n} e^{−2ka}
        let geo = if a > 0.0 {
            -(-2.0 * a * periods as f64).exp_m1() / -(-2.0 * a).exp_m1()
        } else {
            periods as f64
        };
        total += xi * xi * h * d * geo;
    }
    total
}

/// Energy balance (‖x‖² − ‖Tⁿx‖²)/2 against the dissipation integral.
#[derive(Clone, Copy, Debug)]
pub struct EnergyBalance {
    pub lost: f64,
    pub dissipated: f64,
}

impl EnergyBalance {
    pub fn relative_residual(&self) -> f64 {
        let scale = self.lost.abs().max(self.dissipated.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.lost - self.dissipated).abs() / scale
        }
    }
}

pub fn energy_balance(
    region: &DampingRegion,
    mono: &TransportMonodromy,
    x: &TransportState,
    periods: u64,
) -> EnergyBalance {
    let before = x.norm().powi(2);
    let after = mono.power_norm_midpoint(x, periods).powi(2);
    EnergyBalance {
        lost: 0.5 * (before - after),
        dissipated: damping_integral(region, mono, x, periods),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NotMember,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct RateClass {
    pub membership: Membership,
    /// Last computed value of ∫_{I_a} a^{−2γ}|x|².
    pub integral: f64,
    /// (N, integral) at each refinement.
    pub levels: Vec<(usize, f64)>,
}

impl RateClass {
    pub fn is_member(&self) -> bool {
        self.membership == Membership::Member
    }
}

pub const RATE_CLASS_CAP: f64 = 1e12;

/// Decides whether a^{−γ}𝟙_{I_a}x ∈ L² by refining the grid from `n0` cells
/// up to `n_max` cells (doubling).
pub fn rate_class(
    region: &DampingRegion,
    x: &dyn Fn(f64) -> f64,
    gamma: f64,
    n0: usize,
    n_max: usize,
) -> Result<RateClass> {
    require_transport(region)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut levels = Vec::new();
    let mut n = n0.max(16);
    while n <= n_max {
        let prof = geometry::line_average(region, n)?;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            if prof.values[i] > A_TOL {
                let xi = x(prof.center(i));
                if xi != 0.0 {
                    acc += xi * xi * prof.values[i].powf(-2.0 * gamma) * h;
                }
            }
        }
        levels.push((n, acc));
        if let Some(m) = classify(&levels) {
            return Ok(RateClass {
                membership: m,
                integral: acc,
                levels,
            });
        }
        n *= 2;
    }
    let integral = levels.last().map(|l| l.1).unwrap_or(0.0);
    Ok(RateClass {
        membership: Membership::Inconclusive,
        integral,
        levels,
    })
}

fn classify(levels: &[(usize, f64)]) -> Option<Membership> {
    let v: Vec<f64> = levels.iter().map(|l| l.1).collect();
    let last = *v.last()?;
    if !last.is_finite() || last > RATE_CLASS_CAP {
        return Some(Membership::NotMember);
    }
    if v.len() < 3 {
        return None;
    }
    let k = v.len();
    if v[k - 3..].iter().all(|&x| x == 0.0) {
        return Some(Membership::Member);
    }
    let rel = |a: f64, b: f64| (b - a).abs() / b.abs().max(f64::MIN_POSITIVE);
    let inc: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let ratio = |i: usize| inc[i].abs() / inc[i - 1].abs().max(f64::MIN_POSITIVE);
    // non-contracting increments: the integral grows without bound
    if inc.len() >= 3 {
        let j = inc.len() - 1;
        if ratio(j) >= 0.98 && ratio(j - 1) >= 0.98 && inc[j] > 0.0 && inc[j - 1] > 0.0 {
            return Some(Membership::NotMember);
        }
    }
    let j = inc.len() - 1;
    let contracting = inc[j].abs() <= inc[j - 1].abs();
    if rel(v[k - 3], v[k - 2]) <= 0.1 && rel(v[k - 2], v[k - 1]) <= 0.1 && contracting {
        return Some(Membership::Member);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undamped_is_rotation() {
        let r = DampingRegion::empty(1.0).unwrap();
        let x = TransportState::from_fn(64, |s| (2.0 * std::f64::consts::PI * s).sin() + s);
        let z = solve(&r, &x, 0.5).unwrap();
        for i in 0..64 {
            assert_eq!(z.values[i], x.values[(i + 32) % 64]);
        }
        assert!((z.norm() - x.norm()).abs() < 1e-14);
    }

    #[test]
    fn corner_square_one_period() {
        let r = DampingRegion::corner_square(0.5).unwrap();
        let x = TransportState::from_fn(128, |_| 1.0);
        let z = solve(&r, &x, 1.0).unwrap();
        for (i, zi) in z.values.iter().enumerate() {
            let s = (i as f64 + 0.5) / 128.0;
            assert!((zi - (-(s.min(1.0 - s))).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_matches_monodromy_at_integer_times() {
        let r = DampingRegion::diamond(0.3).unwrap();
        let t = monodromy(&r, 64).unwrap();
        let x = TransportState::from_fn(64, |s| 1.0 + s * s);
        let z = solve(&r, &x, 3.0).unwrap();
        let y = t.apply_power(&x, 3);
        for i in 0..64 {
            assert!((z.values[i] - y.values[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn evolution_law_on_grid_times() {
        // U(1 + t, 0) = U(t, 0) U(1, 0) by periodicity
        let r = DampingRegion::diamond(0.4).unwrap();
        let x = TransportState::from_fn(64, |s| (3.0 * s).cos());
        let t2 = 27.0 / 64.0;
        let direct = solve(&r, &x, 1.0 + t2).unwrap();
        let two_step = solve(&r, &solve(&r, &x, 1.0).unwrap(), t2).unwrap();
        for i in 0..64 {
            assert!((two_step.values[i] - direct.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn monodromy_examples() {
        let t = monodromy(&DampingRegion::empty(1.0).unwrap(), 32).unwrap();
        assert!(t.m.iter().all(|&m| m == 1.0));
        let t = monodromy(&DampingRegion::corner_square(0.25).unwrap(), 64).unwrap();
        for i in 32..64 {
            assert_eq!(t.m[i], 1.0);
        }
        assert!(t.m[..32].iter().all(|&m| m < 1.0));
    }

    #[test]
    fn projection_and_fixed_vectors() {
        let t = monodromy(&DampingRegion::corner_square(0.25).unwrap(), 64).unwrap();
        let x = TransportState::from_fn(64, |_| 1.0);
        let p = t.fixed_projection(&x);
        assert_eq!(p.values[..32].iter().sum::<f64>(), 0.0);
        assert!(p.values[32..].iter().all(|&v| v == 1.0));
        assert_eq!(t.fixed_projection(&p), p);
        for n in [0, 1, 100, 100_000] {
            assert!((t.power_norm(&p, n) - p.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn power_norm_oracle() {
        let t = monodromy(&DampingRegion::corner_square(0.5).unwrap(), 2048).unwrap();
        let x = TransportState::from_fn(2048, |_| 1.0);
        for n in [1u64, 10, 100, 1000] {
            let nf = n as f64;
            let exact = -(-nf).exp_m1() / nf;
            let got = t.power_norm(&x, n).powi(2);
            assert!((got - exact).abs() / exact < 2e-3, "n={n}: {got} vs {exact}");
        }
        assert!(t.power_norm(&x, 1 << 40) >= 0.0);
    }

    #[test]
    fn kt_bound_is_the_scalar_maximum() {
        for n in [1u64, 2, 5, 50, 5000] {
            let brute = (0..=100_000)
                .map(|k| {
                    let m = k as f64 / 100_000.0;
                    n as f64 * m.powf(n as f64) * (1.0 - m)
                })
                .fold(0.0, f64::max);
            assert!(kt_bound(n) >= brute - 1e-12);
            assert!(kt_bound(n) - brute < 1e-6);
            assert!(kt_bound(n) <= (-1.0f64).exp());
        }
    }

    #[test]
    fn rate_class_examples() {
        let r = DampingRegion::corner_square(0.5).unwrap();
        let cut = |s: f64| if s > 0.1 && s < 0.9 { 1.0 } else { 0.0 };
        assert!(rate_class(&r, &cut, 5.0, 256, 1 << 14).unwrap().is_member());
        let p = 1.0;
        let x = move |s: f64| (s * (1.0 - s)).powf(p);
        assert!(rate_class(&r, &x, 1.2, 256, 1 << 16).unwrap().is_member());
        let rc = rate_class(&r, &x, 1.6, 256, 1 << 16).unwrap();
        assert_eq!(rc.membership, Membership::NotMember, "{:?}", rc.levels);
        let rq = DampingRegion::corner_square(0.25).unwrap();
        let fixed = |s: f64| if s > 0.5 { 3.0 } else { 0.0 };
        assert!(rate_class(&rq, &fixed, 7.0, 256, 1 << 12).unwrap().is_member());
    }
}
