//! Observability Gramians of (B*, A₀), observability constants, the
//! two-sided comparison between damped and undamped output energies, and
//! the geometric control condition by ray tracing.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::geometry::{self, DampingRegion, Segment};
use crate::linalg;
use crate::quadrature;
use crate::spectral::{InnerProduct, Operator};
use crate::states::{self, State};
use crate::transport::{self, TransportState};
use crate::wave::{self, WaveState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum System {
    Transport,
    Wave,
}

impl System {
    pub fn period(&self) -> f64 {
        match self {
            System::Transport => 1.0,
            System::Wave => 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            System::Transport => "transport",
            System::Wave => "wave",
        }
    }

    pub fn check_region(&self, region: &DampingRegion) -> Result<()> {
        if (region.period() - self.period()).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "{} needs a damping of period {}, got {}",
                self.name(),
                self.period(),
                region.period()
            )));
        }
        Ok(())
    }

    pub fn random_state(&self, n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> State {
        match self {
            System::Transport => State::Transport(states::random_transport(n, rng)),
            System::Wave => State::Wave(states::random_wave(n, rng)),
        }
    }
}

impl std::str::FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transport" => Ok(System::Transport),
            "wave" => Ok(System::Wave),
            other => Err(Error::Config(format!("unknown system '{other}'"))),
        }
    }
}

/// G with ⟨Gx, x⟩ = ∫₀^τ ‖B(t)*T₀(t)x‖² dt in the declared inner product.
#[derive(Clone, Debug)]
pub struct Gramian {
    pub system: System,
    pub matrix: Operator,
    pub inner: InnerProduct,
    /// Time samples per characteristic (transport: Gauss points per panel
    /// times panels) or per period (wave: two per step).
    pub n_t: usize,
}

impl Gramian {
    /// ⟨Gx, x⟩ for coordinates x.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let gx = self.matrix.apply(x);
        self.inner.dot(&gx, x)
    }
}

/// Quadrature path: for transport, ∫₀¹ b along the characteristic through
/// each cell center, on `n_t` uniform panels refined at the indicator's
/// switching times (four Gauss points each); for the wave, the undamped ring
/// flow sampled at the damped solver's times.
pub fn gramian(system: System, region: &DampingRegion, n: usize, n_t: usize) -> Result<Gramian> {
    system.check_region(region)?;
    match system {
        System::Transport => {
            let panels = n_t.max(1);
            let h = 1.0 / n as f64;
            let diag = (0..n)
                .map(|i| {
                    let sigma = (i as f64 + 0.5) * h;
                    characteristic_integral(region, sigma, panels)
                })
                .collect();
            Ok(Gramian {
                system,
                matrix: Operator::Diagonal(diag),
                inner: InnerProduct::L2 { cell_width: h },
                n_t: 4 * panels,
            })
        }
        System::Wave => {
            let len = 2 * n;
            let g = wave::gramian_ring(region, n)?;
            Ok(Gramian {
                system,
                matrix: Operator::Dense(Mat::from_fn(len, len, |i, j| g[i * len + j])),
                inner: InnerProduct::WaveEnergy {
                    cell_width: 1.0 / n as f64,
                },
                n_t: 2 * len,
            })
        }
    }
}

fn characteristic_integral(region: &DampingRegion, sigma: f64, panels: usize) -> f64 {
    let (nodes, weights) = quadrature::gl4();
    let mut total = 0.0;
    for seg in geometry::transport_line(sigma, 0.0, 1.0) {
        let mut cuts = region.segment_breaks(&seg);
        cuts.extend((1..panels).map(|k| k as f64 / panels as f64).filter(|&t| t > seg.t0 && t < seg.t1));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, wt) in nodes.iter().zip(weights) {
                let t = mid + half * x;
                let s = seg.s_at(t).rem_euclid(1.0);
                total += wt * half * region.b(s, t);
            }
        }
    }
    total
}

/// Transport shortcut G = diag(a) by change of variables along
/// characteristics.
pub fn transport_gramian_shortcut(region: &DampingRegion, n: usize) -> Result<Gramian> {
    let profile = geometry::line_average(region, n)?;
    let h = profile.cell_width();
    Ok(Gramian {
        system: System::Transport,
        matrix: Operator::Diagonal(profile.values),
        inner: InnerProduct::L2 { cell_width: h },
        n_t: 0,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ObservabilityConstants {
    /// Smallest eigenvalue of G on the whole (physical) state space.
    pub kappa2_full: f64,
    /// Smallest eigenvalue of (I−P)G(I−P) on Ran(I−P).
    pub kappa2_z: f64,
}

/// κ² constants in the declared inner product. For the wave, the spurious
/// ring direction is excluded together with Ran P.
pub fn observability_constants(g: &Gramian, p: Option<&Operator>) -> Result<ObservabilityConstants> {
    match (&g.matrix, p) {
        (Operator::Diagonal(a), p) => {
            let full = a.iter().copied().fold(f64::INFINITY, f64::min);
            let pd: Option<Vec<f64>> = p.map(|p| match p {
                Operator::Diagonal(d) => d.clone(),
                Operator::Dense(m) => (0..m.nrows()).map(|i| m[(i, i)]).collect(),
            });
            let z = a
                .iter()
                .enumerate()
                .filter(|(i, _)| pd.as_ref().map(|d| d[*i] < 0.5).unwrap_or(true))
                .map(|(_, &v)| v)
                .fold(f64::INFINITY, f64::min);
            Ok(ObservabilityConstants {
                kappa2_full: full,
                kappa2_z: if z.is_finite() { z } else { 0.0 },
            })
        }
        (Operator::Dense(gm), p) => {
            let d = gm.nrows();
            let gs = linalg::symmetrize(gm);
            // directions outside the space of interest are lifted above the
            // spectrum of G
            let lift = 1.0 + 2.0 * gs.norm_l2();
            let mut excluded = Mat::<f64>::zeros(d, d);
            if g.system == System::Wave {
                let c = wave::spurious_mode(d / 2);
                excluded = Mat::from_fn(d, d, |i, j| c[i] * c[j]);
            }
            let full_m = Mat::from_fn(d, d, |i, j| gs[(i, j)] + lift * excluded[(i, j)]);
            let full = min_eigenvalue(&full_m)?;
            let z = match p {
                None => full,
                Some(p) => {
                    let ps = linalg::symmetrize(&p.to_dense());
                    let q = Mat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - ps[(i, j)]);
                    let qgq = &(&q * &gs) * &q;
                    let m = Mat::from_fn(d, d, |i, j| {
                        qgq[(i, j)] + lift * (ps[(i, j)] + excluded[(i, j)])
                    });
                    min_eigenvalue(&m)?
                }
            };
            Ok(ObservabilityConstants {
                kappa2_full: full.max(0.0),
                kappa2_z: z.max(0.0),
            })
        }
    }
}

fn min_eigenvalue(m: &Mat<f64>) -> Result<f64> {
    let ev = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::numerical("gramian-eigenvalues", format!("{e:?}")))?;
    Ok(ev.first().copied().unwrap_or(0.0))
}

/// One sample of the two-sided bound.
#[derive(Clone, Copy, Debug)]
pub struct SandwichSample {
    /// ∫‖B*T₀(t)x‖² dt.
    pub undamped: f64,
    /// ∫‖B*U(t,0)x‖² dt.
    pub damped: f64,
    pub norm_sq: f64,
}

impl SandwichSample {
    /// damped·c_τ²/undamped, ≥ 1 when the lower bound holds.
    pub fn lower_ratio(&self, c_tau: f64) -> f64 {
        if self.undamped == 0.0 {
            f64::INFINITY
        } else {
            self.damped * c_tau * c_tau / self.undamped
        }
    }

    /// damped/undamped, ≤ 1 when the upper bound holds.
    pub fn upper_ratio(&self) -> f64 {
        if self.undamped == 0.0 {
            if self.damped == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.damped / self.undamped
        }
    }
}

#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub c_tau: f64,
    pub samples: Vec<SandwichSample>,
    pub worst_lower: f64,
    pub worst_upper: f64,
    pub slack: f64,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.worst_lower >= 1.0 - self.slack && self.worst_upper <= 1.0 + self.slack
    }
}

pub const SANDWICH_SLACK: f64 = 0.05;

/// Both output integrals for one state.
pub fn sandwich_sample(region: &DampingRegion, x: &State) -> Result<SandwichSample> {
    match x {
        State::Transport(x) => {
            let mono = transport::monodromy(region, x.n())?;
            let undamped: f64 = mono
                .profile
                .values
                .iter()
                .zip(&x.values)
                .map(|(a, v)| a * v * v)
                .sum::<f64>()
                * x.cell_width();
            let damped = transport::damping_integral(region, &mono, x, 1);
            Ok(SandwichSample {
                undamped,
                damped,
                norm_sq: x.norm().powi(2),
            })
        }
        State::Wave(x) => {
            let undamped = wave::y_membership_defect(region, x)?.full_period;
            let damped = wave::damped_run(region, x, 2.0)?.damping_integral;
            Ok(SandwichSample {
                undamped,
                damped,
                norm_sq: x.norm_sq(),
            })
        }
    }
}

/// c_τ⁻² ∫‖B*T₀x‖² ≤ ∫‖B*Ux‖² ≤ ∫‖B*T₀x‖² on `samples` seeded random states.
/// A violation beyond the slack is an error naming the sample.
pub fn sandwich_check(
    system: System,
    region: &DampingRegion,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<SandwichReport> {
    system.check_region(region)?;
    let c_tau = region.c_tau();
    let mut rng = states::rng(seed);
    let mut out = Vec::with_capacity(samples);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..samples {
        let x = system.random_state(n, &mut rng);
        let s = sandwich_sample(region, &x)?;
        let (l, u) = (s.lower_ratio(c_tau), s.upper_ratio());
        if l < 1.0 - SANDWICH_SLACK || u > 1.0 + SANDWICH_SLACK {
            return Err(Error::numerical(
                "observability-sandwich",
                format!("sample {k}: lower ratio {l:.6}, upper ratio {u:.6}"),
            ));
        }
        lo = lo.min(l);
        hi = hi.max(u);
        out.push(s);
    }
    Ok(SandwichReport {
        c_tau,
        samples: out,
        worst_lower: lo,
        worst_upper: hi,
        slack: SANDWICH_SLACK,
    })
}

/// A characteristic: wave rays fold(s0 ± t), transport lines (s0 − t) mod 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub s0: f64,
    /// +1 or −1: sign of ds/dt at t = 0.
    pub direction: i8,
}

impl Ray {
    fn segments(&self, system: System, t0: f64, t1: f64) -> Vec<Segment> {
        match system {
            System::Wave => {
                let c = if self.direction > 0 { self.s0 } else { -self.s0 };
                geometry::wave_ray(c, t0, t1)
            }
            System::Transport => geometry::transport_line(self.s0, t0, t1),
        }
    }

    pub fn position(&self, system: System, t: f64) -> f64 {
        match system {
            System::Wave => geometry::fold(self.s0 + self.direction as f64 * t),
            System::Transport => (self.s0 - t).rem_euclid(1.0),
        }
    }

    /// Time spent inside the open support over the window.
    pub fn dwell(&self, system: System, region: &DampingRegion, window: (f64, f64)) -> f64 {
        self.segments(system, window.0, window.1)
            .iter()
            .map(|seg| region.segment_dwell(seg))
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct GccVerdict {
    pub holds: bool,
    pub witness: Option<Ray>,
    /// The witness misses the closed support at every sampled time.
    pub witness_verified: bool,
    pub min_dwell: f64,
    pub min_ray: Ray,
    pub rays: usize,
}

/// Dwell below this counts as zero.
pub const DWELL_TOL: f64 = 1e-12;
pub const DEFAULT_RAYS: usize = 4096;

/// Ray parameter c ∈ [0, 2) for the wave (s(t) = fold(c + t)) or σ ∈ [0, 1)
/// for transport, together with the ray it describes.
fn ray_of(system: System, c: f64) -> Ray {
    match system {
        System::Wave => {
            let c = c.rem_euclid(2.0);
            if c <= 1.0 {
                Ray { s0: c, direction: 1 }
            } else {
                Ray {
                    s0: 2.0 - c,
                    direction: -1,
                }
            }
        }
        System::Transport => Ray {
            s0: c.rem_euclid(1.0),
            direction: -1,
        },
    }
}

fn candidate_params(system: System, region: &DampingRegion, window: (f64, f64), m: usize) -> Vec<(f64, bool)> {
    let span = match system {
        System::Wave => 2.0,
        System::Transport => 1.0,
    };
    let mut out: Vec<(f64, bool)> = (0..m).map(|k| (span * k as f64 / m as f64, true)).collect();
    let tau = region.period();
    let first = (window.0 / tau).floor() as i64;
    let last = (window.1 / tau).ceil() as i64;
    for (sv, tv) in region.vertices() {
        for p in first..=last {
            let t = tv + p as f64 * tau;
            if t < window.0 - 1e-12 || t > window.1 + 1e-12 {
                continue;
            }
            let cs: Vec<f64> = match system {
                System::Wave => vec![sv - t, -sv - t],
                System::Transport => vec![sv + t],
            };
            for c in cs {
                for e in [-1e-9, 0.0, 1e-9] {
                    out.push(((c + e).rem_euclid(span), false));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

fn misses_closure(system: System, region: &DampingRegion, ray: &Ray, window: (f64, f64)) -> bool {
    let samples = 20_000;
    (0..=samples).all(|k| {
        let t = window.0 + (window.1 - window.0) * k as f64 / samples as f64;
        !region.in_closure(ray.position(system, t), t)
    })
}

/// Every ray must spend positive time inside the damped region over the
/// window. Rays run over an M-point grid plus rays through region corners.
pub fn gcc_check(system: System, region: &DampingRegion, window: (f64, f64), m: usize) -> Result<GccVerdict> {
    system.check_region(region)?;
    if !region.kind().is_indicator() {
        return Err(Error::Unsupported("GCC ray tracing needs an indicator region".into()));
    }
    if !(window.1 > window.0) {
        return Err(Error::InvalidParameter("empty time window".into()));
    }
    let params = candidate_params(system, region, window, m.max(16));
    let dwell: Vec<f64> = params
        .iter()
        .map(|&(c, _)| ray_of(system, c).dwell(system, region, window))
        .collect();
    let (imin, &min_dwell) = dwell
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty ray set");
    let min_ray = ray_of(system, params[imin].0);
    let holds = min_dwell > DWELL_TOL;
    let mut witness = None;
    let mut verified = false;
    if !holds {
        // middle of the longest run of zero-dwell grid rays, falling back to
        // the minimizing ray
        let mut best: Option<(usize, usize)> = None;
        let mut run_start: Option<usize> = None;
        for k in 0..=params.len() {
            let zero = k < params.len() && dwell[k] <= DWELL_TOL;
            match (zero, run_start) {
                (true, None) => run_start = Some(k),
                (false, Some(s)) => {
                    if best.map(|(a, b)| k - s > b - a).unwrap_or(true) {
                        best = Some((s, k));
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
        let pick = best.map(|(a, b)| params[(a + b - 1) / 2].0).unwrap_or(params[imin].0);
        let ray = ray_of(system, pick);
        verified = misses_closure(system, region, &ray, window);
        witness = Some(ray);
    }
    Ok(GccVerdict {
        holds,
        witness,
        witness_verified: verified,
        min_dwell,
        min_ray,
        rays: params.len(),
    })
}

#[derive(Clone, Debug)]
pub struct KroneckerSweep {
    pub period: f64,
    /// (n, smallest dwell over (0, nτ)).
    pub min_dwell: Vec<(usize, f64)>,
    /// First n at which every ray dwells.
    pub first_n: Option<usize>,
}

/// Wave rays against a damping of period τ (typically incommensurate with
/// the ray period 2) over growing windows (0, nτ). Dwell is accumulated one
/// period at a time on a fixed ray grid.
pub fn kronecker_sweep(region: &DampingRegion, n_max: usize, m: usize) -> Result<KroneckerSweep> {
    if !region.kind().is_indicator() {
        return Err(Error::Unsupported("GCC ray tracing needs an indicator region".into()));
    }
    let tau = region.period();
    let rays: Vec<Ray> = (0..m.max(16)).map(|k| ray_of(System::Wave, 2.0 * k as f64 / m as f64)).collect();
    let mut acc = vec![0.0; rays.len()];
    let mut out = Vec::new();
    let mut first = None;
    for n in 1..=n_max {
        let w = ((n - 1) as f64 * tau, n as f64 * tau);
        for (a, r) in acc.iter_mut().zip(&rays) {
            if *a <= DWELL_TOL {
                *a += r.dwell(System::Wave, region, w);
            }
        }
        let mn = acc.iter().copied().fold(f64::INFINITY, f64::min);
        out.push((n, mn));
        if mn > DWELL_TOL {
            first = Some(n);
            break;
        }
    }
    Ok(KroneckerSweep {
        period: tau,
        min_dwell: out,
        first_n: first,
    })
}

/// Transport GCC in its line-average form: a > 0 on every cell. The witness
/// is the center of a J_a cell.
pub fn transport_gcc_from_profile(region: &DampingRegion, n: usize) -> Result<(bool, Option<Ray>)> {
    let p = geometry::line_average(region, n)?;
    let null = p.null_set();
    Ok(match null.first() {
        None => (true, None),
        Some(&i) => (
            false,
            Some(Ray {
                s0: p.center(i),
                direction: -1,
            }),
        ),
    })
}

/// ‖x‖-normalized ⟨Gx, x⟩ for a wave state; zero exactly on Y.
pub fn wave_output_energy(region: &DampingRegion, x: &WaveState) -> Result<f64> {
    Ok(wave::y_membership_defect(region, x)?.full_period)
}

/// ⟨Gx, x⟩ for a transport state by the shortcut G = diag(a).
pub fn transport_output_energy(region: &DampingRegion, x: &TransportState) -> Result<f64> {
    let p = geometry::line_average(region, x.n())?;
    Ok(p.values.iter().zip(&x.values).map(|(a, v)| a * v * v).sum::<f64>() * x.cell_width())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transport_gramian_paths_agree() {
        for region in [
            DampingRegion::corner_square(0.25).unwrap(),
            DampingRegion::diamond(0.3).unwrap(),
            DampingRegion::rectangles(
                vec![geometry::Rect::new(0.1, 0.35, 0.2, 0.7), geometry::Rect::new(0.6, 0.9, 0.5, 0.95)],
                1.0,
            )
            .unwrap(),
        ] {
            let q = gramian(System::Transport, &region, 256, 8).unwrap();
            let s = transport_gramian_shortcut(&region, 256).unwrap();
            assert!(q.matrix.max_abs_diff(&s.matrix) < 1e-6, "{}", region.describe());
        }
    }

    #[test]
    fn wave_gramian_zero_and_full() {
        let n = 32;
        let g = gramian(System::Wave, &DampingRegion::empty(2.0).unwrap(), n, 0).unwrap();
        assert_eq!(g.matrix.norm(), 0.0);
        let full = DampingRegion::full(2.0).unwrap();
        let g = gramian(System::Wave, &full, n, 0).unwrap();
        let mut rng = states::rng(3);
        for _ in 0..5 {
            let x = states::random_wave(n, &mut rng);
            let q = g.quadratic(&x.to_ring());
            // oracle: midpoint-in-time quadrature of d'Alembert velocities
            let h = 1.0 / n as f64;
            let mut direct = 0.0;
            for k in 0..2 * n {
                for t in [k as f64 * h, (k + 1) as f64 * h] {
                    let y = wave::dalembert(&x, t);
                    direct += 0.5 * h * y.v.iter().map(|v| v * v).sum::<f64>() * h;
                }
            }
            assert!((q - direct).abs() < 1e-10 * direct, "{q} {direct}");
        }
        let k = observability_constants(&g, None).unwrap();
        assert!(k.kappa2_full > 0.1, "{k:?}");
    }

    #[test]
    fn transport_constants() {
        let region = DampingRegion::corner_square(0.25).unwrap();
        let g = transport_gramian_shortcut(&region, 128).unwrap();
        let mono = transport::monodromy(&region, 128).unwrap();
        let p = Operator::Diagonal(mono.m.iter().map(|&m| if m == 1.0 { 1.0 } else { 0.0 }).collect());
        let k = observability_constants(&g, Some(&p)).unwrap();
        assert_eq!(k.kappa2_full, 0.0);
        let expect = mono
            .profile
            .values
            .iter()
            .copied()
            .filter(|&a| a > geometry::A_TOL)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(k.kappa2_z, expect);
    }

    #[test]
    fn gcc_examples() {
        let w = (0.0, 2.0);
        let v = gcc_check(System::Wave, &DampingRegion::switched(0.6).unwrap(), w, 1024).unwrap();
        assert!(v.holds && v.min_dwell > 0.0, "{v:?}");
        let v = gcc_check(System::Wave, &DampingRegion::switched(0.4).unwrap(), w, 1024).unwrap();
        assert!(!v.holds);
        assert!(v.witness_verified, "{v:?}");
        // corner square δ = 0.3: a = 0 exactly on [0.6, 1]
        let sq = DampingRegion::corner_square(0.3).unwrap();
        let v = gcc_check(System::Transport, &sq, (0.0, 1.0), 1024).unwrap();
        assert!(!v.holds && v.witness_verified);
        let s0 = v.witness.unwrap().s0;
        assert!(s0 > 0.6 && s0 < 1.0, "witness {s0} should sit in J_a");
        let (holds, w) = transport_gcc_from_profile(&sq, 64).unwrap();
        assert!(!holds && w.unwrap().s0 > 0.6);
        // δ = 1/2: only the single line through s = 0 misses
        let v = gcc_check(System::Transport, &DampingRegion::corner_square(0.5).unwrap(), (0.0, 1.0), 1024)
            .unwrap();
        assert!(!v.holds);
        let s0 = v.witness.unwrap().s0;
        assert!(s0.min(1.0 - s0) < 1e-8, "{s0}");
        assert!(transport_gcc_from_profile(&DampingRegion::corner_square(0.5).unwrap(), 64).unwrap().0);
    }

    #[test]
    fn kronecker_windows() {
        let commensurate = DampingRegion::switched(0.4).unwrap();
        let k = kronecker_sweep(&commensurate, 64, 1024).unwrap();
        assert_eq!(k.first_n, None);
        assert_eq!(k.min_dwell.len(), 64);
        let irrational = commensurate.with_period(std::f64::consts::SQRT_2).unwrap();
        let k = kronecker_sweep(&irrational, 64, 1024).unwrap();
        assert!(k.first_n.is_some_and(|n| n <= 64), "{k:?}");
    }

    #[test]
    fn sandwich_transport_and_wave() {
        let r = sandwich_check(System::Transport, &DampingRegion::corner_square(0.5).unwrap(), 128, 20, 1).unwrap();
        assert!(r.passed() && r.worst_upper <= 1.0, "{r:?}");
        let r = sandwich_check(System::Wave, &DampingRegion::switched(0.5).unwrap(), 64, 20, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = sandwich_check(System::Wave, &DampingRegion::empty(2.0).unwrap(), 32, 3, 1).unwrap();
        assert!(r.samples.iter().all(|s| s.undamped == 0.0 && s.damped == 0.0));
    }
}
