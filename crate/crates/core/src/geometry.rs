//! Damping coefficients b(s,t), their supports, and the transport line
//! average a(s) = ∫₀¹ b(s−r, r) dr.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature;

/// Threshold separating I_a (a > A_TOL) from J_a on the grid.
pub const A_TOL: f64 = 1e-12;

/// Per-cell tolerance of the adaptive line quadrature.
const QUAD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub s0: f64,
    pub s1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Rect {
    pub fn new(s0: f64, s1: f64, t0: f64, t1: f64) -> Self {
        Rect { s0, s1, t0, t1 }
    }

    fn contains_open(&self, s: f64, t: f64) -> bool {
        s > self.s0 && s < self.s1 && t > self.t0 && t < self.t1
    }

    fn contains_closed(&self, s: f64, t: f64) -> bool {
        s >= self.s0 && s <= self.s1 && t >= self.t0 && t <= self.t1
    }

    fn is_empty(&self) -> bool {
        self.s1 <= self.s0 || self.t1 <= self.t0
    }
}

/// User supplied coefficient b(s, t) for the `Analytic` kind.
#[derive(Clone)]
pub struct CoefficientFn(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl CoefficientFn {
    pub fn new(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientFn(Arc::new(f))
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.0)(s, t)
    }
}

impl fmt::Debug for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CoefficientFn(..)")
    }
}

#[derive(Clone, Debug)]
pub enum RegionKind {
    /// |s−½| + |t−½| < δ.
    Diamond(f64),
    /// 0 < s, t < δ.
    CornerSquare(f64),
    /// Complement of a band of half-width ½−δ around the triangular ray
    /// through (½,0), (0,½), (½,1), (1,3/2), (½,2).
    RayBand(f64),
    /// ((1−δ,1)×(0,τ/2)) ∪ ((0,δ)×(τ/2,τ)).
    Switched(f64),
    RectangleUnion(Vec<Rect>),
    Analytic(CoefficientFn),
}

impl RegionKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::Diamond(_) => "diamond",
            RegionKind::CornerSquare(_) => "corner_square",
            RegionKind::RayBand(_) => "ray_band",
            RegionKind::Switched(_) => "switched",
            RegionKind::RectangleUnion(_) => "rectangles",
            RegionKind::Analytic(_) => "analytic",
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match *self {
            RegionKind::Diamond(d)
            | RegionKind::CornerSquare(d)
            | RegionKind::RayBand(d)
            | RegionKind::Switched(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_indicator(&self) -> bool {
        !matches!(self, RegionKind::Analytic(_))
    }
}

/// A straight piece of a characteristic: s(t) = s0 + slope·(t − t0) for
/// t in [t0, t1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub s0: f64,
    pub slope: f64,
}

impl Segment {
    pub fn s_at(&self, t: f64) -> f64 {
        self.s0 + self.slope * (t - self.t0)
    }

    fn t_where(&self, s: f64) -> Option<f64> {
        if self.slope == 0.0 {
            None
        } else {
            Some(self.t0 + (s - self.s0) / self.slope)
        }
    }
}

/// Triangular wave of period 2 mapping ℝ onto [0, 1] (reflection at the ends).
pub fn fold(x: f64) -> f64 {
    let y = x.rem_euclid(2.0);
    if y <= 1.0 {
        y
    } else {
        2.0 - y
    }
}

/// Pieces of the transport characteristic r ↦ ((σ − r) mod 1, r), r ∈ [r0, r1].
pub fn transport_line(sigma: f64, r0: f64, r1: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut r = r0;
    while r < r1 {
        let x = sigma - r;
        let mut s = x - x.floor();
        if s <= 0.0 {
            s = 1.0;
        }
        let end = (r + s).min(r1);
        out.push(Segment {
            t0: r,
            t1: end,
            s0: s,
            slope: -1.0,
        });
        if end <= r {
            break;
        }
        r = end;
    }
    out
}

/// Pieces of the reflected wave ray t ↦ fold(c + t), t ∈ [t0, t1].
pub fn wave_ray(c: f64, t0: f64, t1: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut t = t0;
    while t < t1 {
        let y = (c + t).rem_euclid(2.0);
        let (s, slope, len) = if y < 1.0 {
            (y, 1.0, 1.0 - y)
        } else {
            (2.0 - y, -1.0, 2.0 - y)
        };
        let len = if len <= 0.0 { 1.0 } else { len };
        let end = (t + len).min(t1);
        out.push(Segment {
            t0: t,
            t1: end,
            s0: s,
            slope,
        });
        if end <= t {
            break;
        }
        t = end;
    }
    out
}

#[derive(Clone, Debug)]
pub struct DampingRegion {
    kind: RegionKind,
    period: f64,
    amplitude: f64,
}

impl DampingRegion {
    pub fn new(kind: RegionKind, period: f64, amplitude: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be nonnegative, got {amplitude}"
            )));
        }
        let check = |d: f64, hi: f64| -> Result<()> {
            if d.is_finite() && (0.0..=hi).contains(&d) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{} requires delta in [0, {hi}], got {d}",
                    kind.name()
                )))
            }
        };
        match &kind {
            RegionKind::Diamond(d) => check(*d, 0.5)?,
            RegionKind::CornerSquare(d) | RegionKind::Switched(d) => check(*d, 1.0)?,
            RegionKind::RayBand(d) => {
                check(*d, 1.0)?;
                if (period - 2.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("ray_band is defined for period 2".into()));
                }
            }
            RegionKind::RectangleUnion(rects) => {
                for r in rects {
                    let ok = r.s0 >= 0.0
                        && r.s1 <= 1.0
                        && r.t0 >= 0.0
                        && r.t1 <= period + 1e-12
                        && r.s0 <= r.s1
                        && r.t0 <= r.t1;
                    if !ok {
                        return Err(Error::InvalidParameter(format!(
                            "rectangle {r:?} not inside (0,1)x(0,{period})"
                        )));
                    }
                }
            }
            RegionKind::Analytic(_) => {}
        }
        Ok(DampingRegion {
            kind,
            period,
            amplitude,
        })
    }

    pub fn diamond(delta: f64) -> Result<Self> {
        Self::new(RegionKind::Diamond(delta), 1.0, 1.0)
    }

    pub fn corner_square(delta: f64) -> Result<Self> {
        Self::new(RegionKind::CornerSquare(delta), 1.0, 1.0)
    }

    pub fn ray_band(delta: f64) -> Result<Self> {
        Self::new(RegionKind::RayBand(delta), 2.0, 1.0)
    }

    pub fn switched(delta: f64) -> Result<Self> {
        Self::new(RegionKind::Switched(delta), 2.0, 1.0)
    }

    pub fn rectangles(rects: Vec<Rect>, period: f64) -> Result<Self> {
        Self::new(RegionKind::RectangleUnion(rects), period, 1.0)
    }

    pub fn analytic(f: CoefficientFn, period: f64) -> Result<Self> {
        Self::new(RegionKind::Analytic(f), period, 1.0)
    }

    /// b ≡ 0.
    pub fn empty(period: f64) -> Result<Self> {
        Self::rectangles(Vec::new(), period)
    }

    /// b ≡ 1 on (0,1)×(0,τ).
    pub fn full(period: f64) -> Result<Self> {
        Self::rectangles(vec![Rect::new(0.0, 1.0, 0.0, period)], period)
    }

    pub fn with_amplitude(self, amplitude: f64) -> Result<Self> {
        Self::new(self.kind, self.period, amplitude)
    }

    pub fn with_period(self, period: f64) -> Result<Self> {
        Self::new(self.kind, period, self.amplitude)
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            RegionKind::RectangleUnion(r) => format!(
                "rectangles(n={}) period={} amplitude={}",
                r.len(),
                self.period,
                self.amplitude
            ),
            RegionKind::Analytic(_) => format!("analytic period={}", self.period),
            k => format!(
                "{}(delta={}) period={} amplitude={}",
                k.name(),
                k.delta().unwrap_or(0.0),
                self.period,
                self.amplitude
            ),
        }
    }

    /// b(s, t mod τ) for s in the open interval (0, 1).
    pub fn eval_b(&self, s: f64, t: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("s = {s} is outside (0, 1)")));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("t = {t} is not finite")));
        }
        Ok(self.b(s, t))
    }

    /// b at (s, t) with t reduced modulo τ; s is not range checked.
    pub(crate) fn b(&self, s: f64, t: f64) -> f64 {
        let tl = t.rem_euclid(self.period);
        self.b_local(s, tl)
    }

    /// b at (s mod 1, t mod τ); used along periodic transport characteristics.
    pub(crate) fn b_wrapped(&self, s: f64, t: f64) -> f64 {
        self.b(s.rem_euclid(1.0), t)
    }

    fn b_local(&self, s: f64, tl: f64) -> f64 {
        match &self.kind {
            RegionKind::Analytic(f) => self.amplitude * f.eval(s, tl).max(0.0),
            _ => {
                if self.indicator(s, tl) {
                    self.amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// Center of the undamped band of `RayBand` at local time tl ∈ [0, 2).
    pub fn ray_center(tl: f64) -> f64 {
        fold(0.5 - tl)
    }

    fn rects(&self) -> Vec<Rect> {
        let tau = self.period;
        match &self.kind {
            RegionKind::CornerSquare(d) => vec![Rect::new(0.0, *d, 0.0, *d)],
            RegionKind::Switched(d) => vec![
                Rect::new(1.0 - d, 1.0, 0.0, 0.5 * tau),
                Rect::new(0.0, *d, 0.5 * tau, tau),
            ],
            RegionKind::RectangleUnion(r) => r.clone(),
            _ => Vec::new(),
        }
    }

    /// Membership in the open support; `tl` already reduced to [0, τ).
    fn indicator(&self, s: f64, tl: f64) -> bool {
        if self.amplitude == 0.0 {
            return false;
        }
        match &self.kind {
            RegionKind::Diamond(d) => (s - 0.5).abs() + (tl - 0.5).abs() < *d,
            RegionKind::RayBand(d) => {
                if !(s > 0.0 && s < 1.0) {
                    return false;
                }
                (s - Self::ray_center(tl)).abs() > 0.5 - d
            }
            RegionKind::Analytic(f) => f.eval(s, tl) > 0.0,
            _ => self.rects().iter().any(|r| r.contains_open(s, tl)),
        }
    }

    /// Corner points (s, local t) of the support boundary for polygonal
    /// kinds; rays through them are where dwell times change slope.
    pub fn vertices(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            RegionKind::Diamond(d) => vec![
                (0.5 - d, 0.5),
                (0.5 + d, 0.5),
                (0.5, 0.5 - d),
                (0.5, 0.5 + d),
            ],
            RegionKind::RayBand(d) => {
                let h = 0.5 - d;
                vec![(0.5 - h, 0.0), (0.5 + h, 0.0), (h, 0.5), (1.0 - h, 1.5)]
            }
            RegionKind::Analytic(_) => Vec::new(),
            _ => self
                .rects()
                .iter()
                .filter(|r| !r.is_empty())
                .flat_map(|r| [(r.s0, r.t0), (r.s0, r.t1), (r.s1, r.t0), (r.s1, r.t1)])
                .collect(),
        }
    }

    /// Membership in the closure of the support (indicator kinds).
    pub fn in_closure(&self, s: f64, t: f64) -> bool {
        if self.amplitude == 0.0 {
            return false;
        }
        let tl = t.rem_euclid(self.period);
        match &self.kind {
            RegionKind::Diamond(d) => *d > 0.0 && (s - 0.5).abs() + (tl - 0.5).abs() <= *d,
            RegionKind::RayBand(d) => {
                // the closure of the complement of an open band; empty when the band covers all
                if *d == 0.0 {
                    return false;
                }
                let c = Self::ray_center(tl);
                let c2 = if tl == 0.0 { Self::ray_center(self.period) } else { c };
                (s - c).abs() >= 0.5 - d || (s - c2).abs() >= 0.5 - d
            }
            RegionKind::Analytic(f) => f.eval(s, tl) > 0.0,
            _ => self.rects().iter().any(|r| {
                let wraps = tl == 0.0 && r.contains_closed(s, self.period);
                !r.is_empty() && (r.contains_closed(s, tl) || wraps)
            }),
        }
    }

    /// Local times in [ta, tb] (within one period cell) where the indicator
    /// may switch along `seg`.
    fn crossings(&self, seg: &Segment, ta: f64, tb: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut push = |t: f64| {
            if t > ta && t < tb {
                out.push(t);
            }
        };
        match &self.kind {
            RegionKind::Diamond(d) => {
                push(0.5);
                if let Some(t) = seg.t_where(0.5) {
                    push(t);
                }
                for e1 in [-1.0, 1.0] {
                    for e2 in [-1.0, 1.0] {
                        let coef = e1 * seg.slope + e2;
                        if coef != 0.0 {
                            let rhs = d - e1 * (seg.s0 - 0.5 - seg.slope * seg.t0) + 0.5 * e2;
                            push(rhs / coef);
                        }
                    }
                }
            }
            RegionKind::RayBand(d) => {
                let h = 0.5 - d;
                push(0.5);
                push(1.5);
                // center pieces: (start, p(start), slope)
                for (start, p0, rho) in [(0.0, 0.5, -1.0), (0.5, 0.0, 1.0), (1.5, 1.0, -1.0)] {
                    let diff = seg.slope - rho;
                    if diff != 0.0 {
                        for sign in [-1.0, 1.0] {
                            let t = (sign * h - seg.s0 + seg.slope * seg.t0 + p0 - rho * start) / diff;
                            push(t);
                        }
                    }
                }
            }
            RegionKind::Analytic(_) => {}
            _ => {
                for r in self.rects() {
                    push(r.t0);
                    push(r.t1);
                    if let Some(t) = seg.t_where(r.s0) {
                        push(t);
                    }
                    if let Some(t) = seg.t_where(r.s1) {
                        push(t);
                    }
                }
            }
        }
        out
    }

    /// Splits `seg` at period boundaries and returns (local segment, local
    /// start, local end) triples.
    fn local_pieces(&self, seg: &Segment) -> Vec<(Segment, f64, f64)> {
        let tau = self.period;
        let mut out = Vec::new();
        let mut t = seg.t0;
        while t < seg.t1 {
            let k = (t / tau).floor();
            let mut cell_end = (k + 1.0) * tau;
            if cell_end <= t {
                cell_end = t + tau;
            }
            let end = cell_end.min(seg.t1);
            let shift = k * tau;
            let local = Segment {
                t0: seg.t0 - shift,
                t1: seg.t1 - shift,
                s0: seg.s0,
                slope: seg.slope,
            };
            out.push((local, t - shift, end - shift));
            t = end;
        }
        out
    }

    fn local_breaks(&self, local: &Segment, ta: f64, tb: f64) -> Vec<f64> {
        if !self.kind.is_indicator() {
            // no geometric hints: start from a uniform partition
            let n = 16;
            return (0..=n).map(|k| ta + (tb - ta) * k as f64 / n as f64).collect();
        }
        let mut breaks = vec![ta];
        let mut cross = self.crossings(local, ta, tb);
        cross.sort_by(f64::total_cmp);
        breaks.extend(cross);
        breaks.push(tb);
        breaks
    }

    fn integrate_segment<F: Fn(f64, f64) -> f64>(&self, seg: &Segment, f: F) -> f64 {
        let mut total = 0.0;
        for (local, ta, tb) in self.local_pieces(seg) {
            let breaks = self.local_breaks(&local, ta, tb);
            let mut g = |t: f64| f(local.s_at(t), t);
            total += quadrature::adaptive_on_partition(&mut g, &breaks, QUAD_TOL);
        }
        total
    }

    /// Sorted absolute times splitting `seg` into pieces on which an
    /// indicator coefficient is constant (uniform pieces for analytic kinds).
    pub fn segment_breaks(&self, seg: &Segment) -> Vec<f64> {
        let mut out = vec![seg.t0];
        for (local, ta, tb) in self.local_pieces(seg) {
            let shift = seg.t0 - local.t0;
            for t in self.local_breaks(&local, ta, tb).into_iter().skip(1) {
                out.push(t + shift);
            }
        }
        out
    }

    /// ∫ b(s(t), t) dt along a characteristic segment (s taken modulo 1).
    pub fn segment_integral(&self, seg: &Segment) -> f64 {
        self.integrate_segment(seg, |s, tl| self.b_local(wrap_unit(s), tl))
    }

    /// Time spent inside the open support along a characteristic segment.
    pub fn segment_dwell(&self, seg: &Segment) -> f64 {
        self.integrate_segment(seg, |s, tl| {
            if self.b_local(wrap_unit(s), tl) > 0.0 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// ∬_{(0,1)×(0,τ)} b ds dt.
    pub fn area(&self) -> f64 {
        let amp = self.amplitude;
        match &self.kind {
            RegionKind::Diamond(d) => amp * 2.0 * d * d,
            RegionKind::CornerSquare(d) => amp * d * d,
            RegionKind::Switched(d) => amp * d * self.period,
            RegionKind::RectangleUnion(r) => amp * union_area(r),
            RegionKind::RayBand(d) => {
                let h = 0.5 - d;
                let slice = |t: f64| {
                    let c = Self::ray_center(t);
                    let lo = (c - h).max(0.0);
                    let hi = (c + h).min(1.0);
                    1.0 - (hi - lo).max(0.0)
                };
                let mut breaks = vec![0.0, 0.5, 1.5, 2.0];
                for t in [0.5 - h, 0.5 + h, 1.5 - h, 1.5 + h, h - 0.5, 2.5 - h] {
                    if t > 0.0 && t < 2.0 {
                        breaks.push(t);
                    }
                }
                breaks.sort_by(f64::total_cmp);
                let mut g = slice;
                amp * quadrature::adaptive_on_partition(&mut g, &breaks, 1e-13)
            }
            RegionKind::Analytic(_) => {
                let mut outer = |t: f64| {
                    let mut inner = |s: f64| self.b_local(s, t);
                    quadrature::adaptive(&mut inner, 0.0, 1.0, 8, 1e-11)
                };
                quadrature::adaptive(&mut outer, 0.0, self.period, 8, 1e-10)
            }
        }
    }

    /// ∫₀^τ ess sup_s b(s, t) dt; for indicator kinds this is amplitude times
    /// the measure of times at which the support has a nonempty slice.
    pub fn sup_integral(&self) -> f64 {
        let amp = self.amplitude;
        if amp == 0.0 {
            return 0.0;
        }
        match &self.kind {
            RegionKind::Diamond(d) => amp * 2.0 * d,
            RegionKind::CornerSquare(d) => amp * d,
            RegionKind::Switched(d) | RegionKind::RayBand(d) => {
                if *d > 0.0 {
                    amp * self.period
                } else {
                    0.0
                }
            }
            RegionKind::RectangleUnion(rects) => {
                let mut iv: Vec<(f64, f64)> =
                    rects.iter().filter(|r| !r.is_empty()).map(|r| (r.t0, r.t1)).collect();
                amp * interval_union_length(&mut iv)
            }
            RegionKind::Analytic(f) => {
                // sampled: 2048 times × 512 positions
                let (nt, ns) = (2048, 512);
                let dt = self.period / nt as f64;
                let mut acc = 0.0;
                for j in 0..nt {
                    let t = (j as f64 + 0.5) * dt;
                    let m = (0..ns)
                        .map(|i| f.eval((i as f64 + 0.5) / ns as f64, t).max(0.0))
                        .fold(0.0, f64::max);
                    acc += m * dt;
                }
                amp * acc
            }
        }
    }

    /// c_τ = 1 + ∫₀^τ ‖B(t)‖² dt.
    pub fn c_tau(&self) -> f64 {
        1.0 + self.sup_integral()
    }
}

fn wrap_unit(s: f64) -> f64 {
    if (0.0..=1.0).contains(&s) {
        s
    } else {
        s.rem_euclid(1.0)
    }
}

fn interval_union_length(iv: &mut [(f64, f64)]) -> f64 {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(a, b) in iv.iter() {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total
}

fn union_area(rects: &[Rect]) -> f64 {
    let mut xs: Vec<f64> = rects.iter().flat_map(|r| [r.s0, r.s1]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut area = 0.0;
    for w in xs.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let mut iv: Vec<(f64, f64)> = rects
            .iter()
            .filter(|r| !r.is_empty() && r.s0 < mid && mid < r.s1)
            .map(|r| (r.t0, r.t1))
            .collect();
        area += (w[1] - w[0]) * interval_union_length(&mut iv);
    }
    area
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineAverageMethod {
    ClosedForm,
    Quadrature,
}

/// a(s) on the cell-centered grid sᵢ = (i+½)/N.
#[derive(Clone, Debug)]
pub struct LineAverageProfile {
    pub values: Vec<f64>,
    pub method: LineAverageMethod,
}

impl LineAverageProfile {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n() as f64
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.values[i] > A_TOL
    }

    /// Cells of I_a.
    pub fn active_set(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.is_active(i)).collect()
    }

    /// Cells of J_a.
    pub fn null_set(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.is_active(i)).collect()
    }

    /// Σ a(sᵢ) Δs.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_width()
    }

    /// Smallest value of a over I_a, if I_a is nonempty.
    pub fn min_active(&self) -> Option<f64> {
        self.values
            .iter()
            .copied()
            .filter(|&a| a > A_TOL)
            .min_by(f64::total_cmp)
    }
}

fn require_unit_period(region: &DampingRegion) -> Result<()> {
    if (region.period() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "the transport line average needs a 1-periodic coefficient, got period {}",
            region.period()
        )));
    }
    Ok(())
}

/// a(s) at a single point by the closed form (corner square) or by adaptive
/// quadrature along the characteristic line.
pub fn line_average_at(region: &DampingRegion, s: f64) -> Result<f64> {
    require_unit_period(region)?;
    Ok(line_average_unchecked(region, s))
}

fn line_average_unchecked(region: &DampingRegion, s: f64) -> f64 {
    if let RegionKind::CornerSquare(_) = region.kind() {
        let cf = closed_form_a(region.kind()).expect("corner square has a closed form");
        return region.amplitude() * cf.eval(s);
    }
    transport_line(s, 0.0, 1.0)
        .iter()
        .map(|seg| region.segment_integral(seg))
        .sum()
}

/// The line average on N cells. The corner square uses its closed form; every
/// other kind (including the diamond, whose reference closed form fails the
/// mass identity) goes through the quadrature path.
pub fn line_average(region: &DampingRegion, n: usize) -> Result<LineAverageProfile> {
    require_unit_period(region)?;
    if n < 16 {
        return Err(Error::InvalidParameter(format!("need N >= 16 cells, got {n}")));
    }
    let method = match region.kind() {
        RegionKind::CornerSquare(_) => LineAverageMethod::ClosedForm,
        _ => LineAverageMethod::Quadrature,
    };
    let values = (0..n)
        .map(|i| line_average_unchecked(region, (i as f64 + 0.5) / n as f64).max(0.0))
        .collect();
    Ok(LineAverageProfile { values, method })
}

/// ∫₀¹ a(s) ds by adaptive quadrature of the pointwise line average, broken
/// at the kinks of a: the lines s(t) = σ − t through region vertices.
/// Without them a small support can fool the refinement test.
pub fn line_average_integral(region: &DampingRegion) -> Result<f64> {
    require_unit_period(region)?;
    let mut f = |s: f64| line_average_unchecked(region, s);
    let mut breaks: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
    breaks.extend(region.vertices().iter().map(|&(s, t)| (s + t).rem_euclid(1.0)));
    // corners of a union of overlapping rectangles sit where the edges of
    // one rectangle cross those of another
    let rects = region.rects();
    for a in &rects {
        for b in &rects {
            for s in [a.s0, a.s1] {
                for t in [b.t0, b.t1] {
                    breaks.push((s + t).rem_euclid(1.0));
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(quadrature::adaptive_on_partition(&mut f, &breaks, 1e-13))
}

/// value = intercept + slope·s on (lo, hi).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Clone, Debug)]
pub struct ClosedForm {
    pub pieces: Vec<Piece>,
    /// Set for the diamond: the reference profile must be checked against
    /// the quadrature oracle before use.
    pub needs_oracle_check: bool,
}

impl ClosedForm {
    pub fn eval(&self, s: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| s > p.lo && s < p.hi)
            .map(|p| p.intercept + p.slope * s)
            .unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| (p.hi - p.lo) * (p.intercept + p.slope * 0.5 * (p.lo + p.hi)))
            .sum()
    }
}

/// The reference piecewise profiles of a for the diamond and corner square
/// (unit amplitude).
pub fn closed_form_a(kind: &RegionKind) -> Result<ClosedForm> {
    let piece = |lo: f64, hi: f64, intercept: f64, slope: f64| Piece {
        lo,
        hi,
        intercept,
        slope,
    };
    let mut pieces = Vec::new();
    let needs_oracle_check;
    match *kind {
        RegionKind::CornerSquare(d) => {
            needs_oracle_check = false;
            if d < 0.5 {
                pieces.push(piece(0.0, d, 0.0, 1.0));
                pieces.push(piece(d, 2.0 * d, 2.0 * d, -1.0));
                pieces.push(piece(2.0 * d, 1.0, 0.0, 0.0));
            } else {
                pieces.push(piece(0.0, 2.0 * d - 1.0, 2.0 * d - 1.0, 0.0));
                pieces.push(piece(2.0 * d - 1.0, d, 0.0, 1.0));
                pieces.push(piece(d, 1.0, 2.0 * d, -1.0));
            }
        }
        RegionKind::Diamond(d) => {
            needs_oracle_check = true;
            pieces.push(piece(0.0, 1.0 - 2.0 * d, 0.0, 0.0));
            pieces.push(piece(1.0 - 2.0 * d, 1.0, 0.5 * d, 0.0));
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "no closed-form line average for {}",
                kind.name()
            )))
        }
    }
    pieces.retain(|p| p.hi > p.lo);
    Ok(ClosedForm {
        pieces,
        needs_oracle_check,
    })
}

/// Comparison of the reference diamond profile with the quadrature oracle.
#[derive(Clone, Debug)]
pub struct DiamondCrossCheck {
    pub delta: f64,
    pub n: usize,
    pub area: f64,
    pub oracle_mass: f64,
    pub closed_form_mass: f64,
    pub max_abs_difference: f64,
    /// Whether the reference profile agrees with the oracle on the grid.
    pub closed_form_matches: bool,
    pub oracle: LineAverageProfile,
}

impl DiamondCrossCheck {
    pub fn summary(&self) -> String {
        format!(
            "diamond delta={} N={}: area={:.12e} oracle_mass={:.12e} reference_mass={:.12e} \
             max|reference-oracle|={:.3e} reference closed form {}",
            self.delta,
            self.n,
            self.area,
            self.oracle_mass,
            self.closed_form_mass,
            self.max_abs_difference,
            if self.closed_form_matches {
                "MATCHES the oracle"
            } else {
                "DOES NOT match the oracle"
            }
        )
    }
}

pub fn diamond_cross_check(delta: f64, n: usize) -> Result<DiamondCrossCheck> {
    let region = DampingRegion::diamond(delta)?;
    let oracle = line_average(&region, n)?;
    let cf = closed_form_a(region.kind())?;
    let max_abs_difference = (0..n)
        .map(|i| (cf.eval(oracle.center(i)) - oracle.values[i]).abs())
        .fold(0.0, f64::max);
    let area = region.area();
    let oracle_mass = oracle.mass();
    let closed_form_mass = cf.mass();
    let closed_form_matches =
        max_abs_difference <= 1e-6 && (closed_form_mass - area).abs() <= 1e-6 * area.max(1e-300);
    Ok(DiamondCrossCheck {
        delta,
        n,
        area,
        oracle_mass,
        closed_form_mass,
        max_abs_difference,
        closed_form_matches,
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint rule with many samples along one characteristic line.
    fn brute_line(region: &DampingRegion, s: f64, samples: usize) -> f64 {
        let h = 1.0 / samples as f64;
        (0..samples)
            .map(|k| {
                let r = (k as f64 + 0.5) * h;
                region.b_wrapped(s - r, r)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn eval_b_examples() {
        let d = DampingRegion::diamond(0.25).unwrap();
        assert_eq!(d.eval_b(0.5, 0.5).unwrap(), 1.0);
        let d0 = DampingRegion::diamond(0.0).unwrap();
        assert_eq!(d0.eval_b(0.5, 0.5).unwrap(), 0.0);
        let sw = DampingRegion::switched(0.3).unwrap();
        assert_eq!(sw.eval_b(0.9, 0.5).unwrap(), 1.0);
        assert_eq!(sw.eval_b(0.9, 1.5).unwrap(), 0.0);
        assert_eq!(sw.eval_b(0.1, 1.5).unwrap(), 1.0);
        assert!(d.eval_b(0.0, 0.1).is_err());
        assert!(d.eval_b(1.2, 0.1).is_err());
        // periodic in t
        assert_eq!(sw.eval_b(0.9, 2.5).unwrap(), 1.0);
    }

    #[test]
    fn ray_band_geometry() {
        let rb = DampingRegion::ray_band(0.25).unwrap();
        // band (center ± 1/4) around the ray; at t = 0 the center is 1/2
        assert_eq!(rb.eval_b(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(rb.eval_b(0.9, 0.0).unwrap(), 1.0);
        assert_eq!(rb.eval_b(0.1, 1.5).unwrap(), 1.0);
        assert_eq!(rb.eval_b(0.9, 1.5).unwrap(), 0.0);
        let all = DampingRegion::ray_band(0.5).unwrap();
        assert_eq!(all.eval_b(0.5, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DampingRegion::diamond(0.6).is_err());
        assert!(DampingRegion::corner_square(1.1).is_err());
        assert!(DampingRegion::switched(-0.1).is_err());
        assert!(DampingRegion::new(RegionKind::RayBand(0.2), 1.0, 1.0).is_err());
        assert!(DampingRegion::corner_square(0.5).unwrap().with_amplitude(-1.0).is_err());
    }

    #[test]
    fn corner_square_examples() {
        let r = DampingRegion::corner_square(0.3).unwrap();
        assert!((line_average_at(&r, 0.15).unwrap() - 0.15).abs() < 1e-15);
        assert!((line_average_at(&r, 0.45).unwrap() - 0.15).abs() < 1e-15);
        assert_eq!(line_average_at(&r, 0.8).unwrap(), 0.0);
        let r = DampingRegion::corner_square(0.75).unwrap();
        assert!((line_average_at(&r, 0.25).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_examples() {
        let cf = closed_form_a(&RegionKind::CornerSquare(0.3)).unwrap();
        assert_eq!(cf.pieces.len(), 3);
        assert!((cf.eval(0.2) - 0.2).abs() < 1e-15);
        assert!((cf.eval(0.5) - 0.1).abs() < 1e-15);
        assert_eq!(cf.eval(0.7), 0.0);
        let cf = closed_form_a(&RegionKind::CornerSquare(0.5)).unwrap();
        assert!((cf.eval(0.2) - 0.2).abs() < 1e-15);
        assert!((cf.eval(0.7) - 0.3).abs() < 1e-15);
        let cf = closed_form_a(&RegionKind::Diamond(0.25)).unwrap();
        assert!(cf.needs_oracle_check);
        assert_eq!(cf.eval(0.25), 0.0);
        assert_eq!(cf.eval(0.75), 0.125);
        assert!(closed_form_a(&RegionKind::Switched(0.2)).is_err());
    }

    #[test]
    fn closed_form_corner_square_agrees_with_quadrature() {
        for &d in &[0.1, 0.3, 0.5, 0.7, 1.0] {
            let cf = closed_form_a(&RegionKind::CornerSquare(d)).unwrap();
            let rect = DampingRegion::rectangles(vec![Rect::new(0.0, d, 0.0, d)], 1.0).unwrap();
            for k in 0..37 {
                let s = (k as f64 + 0.31) / 37.0;
                let q = line_average_at(&rect, s).unwrap();
                assert!((q - cf.eval(s)).abs() < 1e-9, "d={d} s={s}: {q} vs {}", cf.eval(s));
            }
        }
    }

    #[test]
    fn diamond_quadrature_matches_brute_force() {
        let r = DampingRegion::diamond(0.25).unwrap();
        let prof = line_average(&r, 64).unwrap();
        for i in (0..64).step_by(7) {
            let brute = brute_line(&r, prof.center(i), 1_000_000);
            assert!((prof.values[i] - brute).abs() < 2e-6, "cell {i}");
        }
    }

    #[test]
    fn mass_conservation() {
        for region in [
            DampingRegion::diamond(0.25).unwrap(),
            DampingRegion::diamond(0.375).unwrap(),
            DampingRegion::corner_square(0.5).unwrap(),
            DampingRegion::rectangles(
                vec![Rect::new(0.1, 0.4, 0.2, 0.9), Rect::new(0.3, 0.8, 0.5, 0.7)],
                1.0,
            )
            .unwrap(),
        ] {
            let prof = line_average(&region, 1024).unwrap();
            let area = region.area();
            // midpoint rule in s is exact up to O(Δs²) at kinks
            assert!((prof.mass() - area).abs() < 1e-5 * area, "{}", region.describe());
        }
    }

    #[test]
    fn continuous_mass_with_unaligned_jumps() {
        let r = DampingRegion::diamond(0.37).unwrap();
        let m = line_average_integral(&r).unwrap();
        assert!((m - r.area()).abs() < 1e-6 * r.area(), "{m} vs {}", r.area());
    }

    #[test]
    fn union_area_overlaps() {
        let rects = vec![Rect::new(0.0, 0.5, 0.0, 0.5), Rect::new(0.25, 0.75, 0.25, 0.75)];
        assert!((union_area(&rects) - (0.25 + 0.25 - 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn ray_band_area_matches_brute_force() {
        let r = DampingRegion::ray_band(0.2).unwrap();
        let (ns, nt) = (800, 1600);
        let mut acc = 0.0;
        for j in 0..nt {
            for i in 0..ns {
                acc += r.b((i as f64 + 0.5) / ns as f64, 2.0 * (j as f64 + 0.5) / nt as f64);
            }
        }
        acc *= 2.0 / (ns * nt) as f64;
        assert!((acc - r.area()).abs() < 2e-3);
    }

    #[test]
    fn c_tau_values() {
        assert!((DampingRegion::switched(0.5).unwrap().c_tau() - 3.0).abs() < 1e-15);
        assert!((DampingRegion::corner_square(0.25).unwrap().c_tau() - 1.25).abs() < 1e-15);
        assert_eq!(DampingRegion::empty(2.0).unwrap().c_tau(), 1.0);
    }

    #[test]
    fn wave_ray_folds() {
        let segs = wave_ray(0.3, 0.0, 2.0);
        // 0.3 → 1 (t=0.7) → 0 (t=1.7) → 0.3 (t=2)
        assert_eq!(segs.len(), 3);
        assert!((segs[0].t1 - 0.7).abs() < 1e-15);
        assert!((segs[1].s_at(1.2) - 0.5).abs() < 1e-15);
        for t in [0.1, 0.9, 1.5, 1.95] {
            let seg = segs.iter().find(|s| t >= s.t0 && t <= s.t1).unwrap();
            assert!((seg.s_at(t) - fold(0.3 + t)).abs() < 1e-14);
        }
    }

    #[test]
    fn dwell_of_switched_rays() {
        let r = DampingRegion::switched(0.4).unwrap();
        // the ray starting at 1/2 moving left stays in the undamped band
        let dwell: f64 = wave_ray(1.5, 0.0, 2.0).iter().map(|s| r.segment_dwell(s)).sum();
        assert!(dwell.abs() < 1e-14);
        let dwell: f64 = wave_ray(0.0, 0.0, 2.0).iter().map(|s| r.segment_dwell(s)).sum();
        assert!(dwell > 0.1);
    }
}
