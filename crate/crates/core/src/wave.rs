//! The 1-D wave equation u_tt = u_ss − b u_t on (0,1) with Dirichlet ends.
//!
//! States are stored as u at the N+1 nodes and v = u_t on the N cells.
//! Both solvers work on the Riemann variables w⁺ = v + u_s (moving left)
//! and w⁻ = v − u_s (moving right) laid out on a ring of 2N slots:
//! slot k < N holds w⁻ of cell k, slot N + j holds w⁺ of cell N−1−j.
//! One time step Δt = Δs is a rotation of the ring by one slot, with a sign
//! flip for the two entries that pass a boundary.

use crate::error::{Error, Result};
use crate::geometry::DampingRegion;

#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    /// Position at nodes s_j = j/N, j = 0..=N.
    pub u: Vec<f64>,
    /// Velocity on cells.
    pub v: Vec<f64>,
}

impl WaveState {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() + 1 || v.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "need N+1 nodes and N cells, got {} and {}",
                u.len(),
                v.len()
            )));
        }
        let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        if u[0].abs() > 1e-12 * scale || u[u.len() - 1].abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter("u must vanish at both ends".into()));
        }
        Ok(WaveState { u, v })
    }

    pub fn zeros(n: usize) -> Self {
        WaveState {
            u: vec![0.0; n + 1],
            v: vec![0.0; n],
        }
    }

    /// Samples u at the interior nodes and v at the cell centers.
    pub fn from_fns(n: usize, u: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> Self {
        let h = 1.0 / n as f64;
        let mut uu: Vec<f64> = (0..=n).map(|j| u(j as f64 * h)).collect();
        uu[0] = 0.0;
        uu[n] = 0.0;
        let vv = (0..n).map(|i| v((i as f64 + 0.5) * h)).collect();
        WaveState { u: uu, v: vv }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// Difference quotient u′ on cell i.
    pub fn du(&self, i: usize) -> f64 {
        (self.u[i + 1] - self.u[i]) * self.n() as f64
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let h = self.cell_width();
        (0..self.n())
            .map(|i| self.du(i) * other.du(i) + self.v[i] * other.v[i])
            .sum::<f64>()
            * h
    }

    /// Squared energy norm Σ(u′² + v²)Δs.
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// E = ‖x‖²/2.
    pub fn energy(&self) -> f64 {
        0.5 * self.norm_sq()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, c: f64) -> Self {
        WaveState {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + c * b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        WaveState {
            u: self.u.iter().map(|x| c * x).collect(),
            v: self.v.iter().map(|x| c * x).collect(),
        }
    }

    pub fn to_riemann(&self) -> RiemannState {
        let n = self.n();
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.du(i);
            plus.push(self.v[i] + d);
            minus.push(self.v[i] - d);
        }
        RiemannState { plus, minus }
    }

    /// Ring vector scaled by √(Δs/2), so that its Euclidean norm is the
    /// energy norm.
    pub fn to_ring(&self) -> Vec<f64> {
        let r = self.to_riemann();
        let n = self.n();
        let c = (0.5 * self.cell_width()).sqrt();
        let mut ring = vec![0.0; 2 * n];
        for i in 0..n {
            ring[i] = c * r.minus[i];
            ring[2 * n - 1 - i] = c * r.plus[i];
        }
        ring
    }

    /// Inverse of [`WaveState::to_ring`]; also returns the endpoint residual
    /// of the reconstruction.
    pub fn from_ring(ring: &[f64]) -> (WaveState, f64) {
        let n = ring.len() / 2;
        let c = (0.5 / n as f64).sqrt();
        let mut r = RiemannState {
            plus: vec![0.0; n],
            minus: vec![0.0; n],
        };
        for i in 0..n {
            r.minus[i] = ring[i] / c;
            r.plus[i] = ring[2 * n - 1 - i] / c;
        }
        r.to_wave()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiemannState {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl RiemannState {
    pub fn n(&self) -> usize {
        self.plus.len()
    }

    /// (Δs/2) Σ(|w⁺|² + |w⁻|²), which equals ‖x‖² = 2E.
    pub fn norm_sq(&self) -> f64 {
        let h = 1.0 / self.n() as f64;
        0.5 * h
            * self
                .plus
                .iter()
                .zip(&self.minus)
                .map(|(p, m)| p * p + m * m)
                .sum::<f64>()
    }

    /// Rebuilds u by prefix sums from u(0) = 0. The value left at s = 1 is
    /// not corrected; it is returned as the endpoint residual.
    pub fn to_wave(&self) -> (WaveState, f64) {
        let n = self.n();
        let h = 1.0 / n as f64;
        let mut u = vec![0.0; n + 1];
        let mut v = vec![0.0; n];
        for i in 0..n {
            let d = 0.5 * (self.plus[i] - self.minus[i]);
            v[i] = 0.5 * (self.plus[i] + self.minus[i]);
            u[i + 1] = u[i] + d * h;
        }
        let residual = u[n];
        (WaveState { u, v }, residual)
    }
}

/// Ring slot holding w⁻ of cell i and the slot holding w⁺ of cell i.
fn slots(n: usize, i: usize) -> (usize, usize) {
    (i, 2 * n - 1 - i)
}

/// Rotates a ring by m slots in the direction of travel.
fn rotate_ring(ring: &[f64], m: i64) -> Vec<f64> {
    let len = ring.len() as i64;
    let n = len / 2;
    let mut out = vec![0.0; ring.len()];
    for (k, &x) in ring.iter().enumerate() {
        let k = k as i64;
        let target = k + m;
        let crossings = target.div_euclid(n) - k.div_euclid(n);
        let sign = if crossings.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        out[target.rem_euclid(len) as usize] = sign * x;
    }
    out
}

/// The undamped solution at time t. Integer multiples of Δs are exact index
/// arithmetic; other times blend the two neighbouring shifts, which is the
/// exact cell average of the shifted piecewise constant data.
pub fn dalembert(x: &WaveState, t: f64) -> WaveState {
    let n = x.n();
    let ring = x.to_ring();
    let steps = t * n as f64;
    let k = steps.round();
    let out = if (steps - k).abs() < 1e-9 * steps.abs().max(1.0) {
        rotate_ring(&ring, k as i64)
    } else {
        let lo = steps.floor();
        let f = steps - lo;
        let a = rotate_ring(&ring, lo as i64);
        let b = rotate_ring(&ring, lo as i64 + 1);
        a.iter().zip(&b).map(|(a, b)| (1.0 - f) * a + f * b).collect()
    };
    WaveState::from_ring(&out).0
}

fn require_wave(region: &DampingRegion) -> Result<()> {
    if (region.period() - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "the wave solver needs a 2-periodic damping, got period {}",
            region.period()
        )));
    }
    Ok(())
}

fn step_count(t: f64, n: usize) -> Result<usize> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
    }
    let steps = t * n as f64;
    let k = steps.round();
    if (steps - k).abs() > 1e-9 * steps.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} is not a multiple of the step 1/{n}"
        )));
    }
    Ok(k as usize)
}

/// Times at which the damping is sampled in step k: a quarter step after
/// its start (first half step) and a quarter step before its end (second).
/// Keeping samples off the half-step grid stops band edges from landing on
/// cell centers, and the pair is still symmetric about the step midpoint.
fn sample_times(k: usize, h: f64) -> (f64, f64) {
    let t0 = k as f64 * h;
    (t0 + 0.25 * h, t0 + 0.75 * h)
}

/// Per-cell half-step damping factors e^{−bΔs/2} at time t (None if b ≡ 0
/// there), along with the b values.
fn half_step_factors(region: &DampingRegion, n: usize, t: f64, f: &mut [f64], b: &mut [f64]) -> bool {
    let h = 1.0 / n as f64;
    let mut any = false;
    for i in 0..n {
        let bi = region.b((i as f64 + 0.5) * h, t);
        b[i] = bi;
        f[i] = (-0.5 * bi * h).exp();
        any |= bi > 0.0;
    }
    any
}

/// Rows of ring data evolved in place without moving memory: a rotation is
/// an offset change plus two sign flips.
pub(crate) struct RingBlock {
    n: usize,
    cols: usize,
    data: Vec<f64>,
    sign: Vec<f64>,
    offset: usize,
}

impl RingBlock {
    /// `rows` holds 2N rows of `cols` entries each, row-major, in ring order.
    pub(crate) fn new(n: usize, cols: usize, rows: Vec<f64>) -> Self {
        debug_assert_eq!(rows.len(), 2 * n * cols);
        RingBlock {
            n,
            cols,
            data: rows,
            sign: vec![1.0; 2 * n],
            offset: 0,
        }
    }

    fn row_of(&self, slot: usize) -> usize {
        let len = 2 * self.n;
        (slot + len - self.offset) % len
    }

    fn shift(&mut self) {
        let len = 2 * self.n;
        self.offset = (self.offset + 1) % len;
        let r0 = self.row_of(0);
        let rn = self.row_of(self.n);
        self.sign[r0] = -self.sign[r0];
        self.sign[rn] = -self.sign[rn];
    }

    /// Scales the velocity of cell i by f; returns Σ over columns of v²
    /// before the update (for dissipation bookkeeping).
    fn damp_cell(&mut self, i: usize, f: f64) -> f64 {
        let (sm, sp) = slots(self.n, i);
        let (rm, rp) = (self.row_of(sm), self.row_of(sp));
        let (gm, gp) = (self.sign[rm], self.sign[rp]);
        let c = self.cols;
        let (a, b) = if rm < rp {
            let (lo, hi) = self.data.split_at_mut(rp * c);
            (&mut lo[rm * c..rm * c + c], &mut hi[..c])
        } else {
            let (lo, hi) = self.data.split_at_mut(rm * c);
            (&mut hi[..c], &mut lo[rp * c..rp * c + c])
        };
        let g = 1.0 - f;
        let mut v2 = 0.0;
        for j in 0..c {
            let v = 0.5 * (gm * a[j] + gp * b[j]);
            v2 += v * v;
            let d = v * g;
            a[j] -= gm * d;
            b[j] -= gp * d;
        }
        v2
    }

    /// Rows back in ring order with signs applied.
    pub(crate) fn into_rows(self) -> Vec<f64> {
        let c = self.cols;
        let mut out = vec![0.0; self.data.len()];
        for slot in 0..2 * self.n {
            let r = self.row_of(slot);
            let g = self.sign[r];
            for j in 0..c {
                out[slot * c + j] = g * self.data[r * c + j];
            }
        }
        out
    }
}

/// Evolves the block over `steps` Strang steps starting at time 0. The
/// optional hook sees (cell, b, v² summed over columns before, factor) for
/// every damped half step.
fn evolve_block(
    region: &DampingRegion,
    block: &mut RingBlock,
    steps: usize,
    mut hook: impl FnMut(usize, f64, f64, f64),
    mut after_step: impl FnMut(&RingBlock),
) {
    let n = block.n;
    let h = 1.0 / n as f64;
    let mut f = vec![1.0; n];
    let mut b = vec![0.0; n];
    for k in 0..steps {
        let (ta, tb) = sample_times(k, h);
        if half_step_factors(region, n, ta, &mut f, &mut b) {
            for i in 0..n {
                if b[i] > 0.0 {
                    let v2 = block.damp_cell(i, f[i]);
                    hook(i, b[i], v2, f[i]);
                }
            }
        }
        block.shift();
        if half_step_factors(region, n, tb, &mut f, &mut b) {
            for i in 0..n {
                if b[i] > 0.0 {
                    let v2 = block.damp_cell(i, f[i]);
                    hook(i, b[i], v2, f[i]);
                }
            }
        }
        after_step(block);
    }
}

/// Output of a damped run.
#[derive(Clone, Debug)]
pub struct DampedRun {
    pub state: WaveState,
    /// ∫‖b^{1/2}v‖² dt by the trapezoid rule on every half step.
    pub damping_integral: f64,
    /// ‖z‖² after each full step (index 0 is the initial state).
    pub norm_sq_history: Vec<f64>,
    pub endpoint_residual: f64,
}

impl DampedRun {
    pub fn energy_lost(&self) -> f64 {
        let first = self.norm_sq_history[0];
        let last = *self.norm_sq_history.last().unwrap();
        0.5 * (first - last)
    }

    /// |lost − dissipated| / lost. Both sides below 1e−12 of the initial
    /// norm are round-off, so that serves as a floor on the scale.
    pub fn balance_residual(&self) -> f64 {
        let lost = self.energy_lost();
        let scale = lost
            .abs()
            .max(self.damping_integral.abs())
            .max(1e-12 * self.norm_sq_history[0]);
        if scale == 0.0 {
            0.0
        } else {
            (lost - self.damping_integral).abs() / scale
        }
    }
}

/// Strang splitting with Δt = Δs: half-step exact damping, exact one-cell
/// advection, half-step exact damping.
pub fn damped_solve(region: &DampingRegion, x: &WaveState, t: f64) -> Result<WaveState> {
    Ok(damped_run(region, x, t)?.state)
}

pub fn damped_run(region: &DampingRegion, x: &WaveState, t: f64) -> Result<DampedRun> {
    require_wave(region)?;
    let n = x.n();
    let steps = step_count(t, n)?;
    let h = 1.0 / n as f64;
    let rp = x.to_riemann();
    let mut rows = vec![0.0; 2 * n];
    for i in 0..n {
        rows[i] = rp.minus[i];
        rows[2 * n - 1 - i] = rp.plus[i];
    }
    let mut block = RingBlock::new(n, 1, rows);
    let mut dissipated = 0.0;
    let mut history = vec![x.norm_sq()];
    evolve_block(
        region,
        &mut block,
        steps,
        |_, b, v2, f| {
            // trapezoid in time over the half step, cell width h
            dissipated += h * 0.5 * h * b * 0.5 * (v2 + v2 * f * f);
        },
        |blk| {
            let mut acc = 0.0;
            for k in 0..2 * n {
                let r = blk.row_of(k);
                acc += blk.data[r] * blk.data[r];
            }
            history.push(0.5 * h * acc);
        },
    );
    let ring = block.into_rows();
    let mut r = RiemannState {
        plus: vec![0.0; n],
        minus: vec![0.0; n],
    };
    for i in 0..n {
        r.minus[i] = ring[i];
        r.plus[i] = ring[2 * n - 1 - i];
    }
    let (state, endpoint_residual) = r.to_wave();
    Ok(DampedRun {
        state,
        damping_integral: dissipated,
        norm_sq_history: history,
        endpoint_residual,
    })
}

/// Applies U(2,0) to each column of a 2N × cols matrix of normalized ring
/// vectors (column-major input and output).
pub fn monodromy_apply_columns(region: &DampingRegion, n: usize, cols: usize, data: &[f64]) -> Result<Vec<f64>> {
    require_wave(region)?;
    let len = 2 * n;
    let mut rows = vec![0.0; len * cols];
    for j in 0..cols {
        for k in 0..len {
            rows[k * cols + j] = data[j * len + k];
        }
    }
    let mut block = RingBlock::new(n, cols, rows);
    evolve_block(region, &mut block, 2 * n, |_, _, _, _| {}, |_| {});
    let rows = block.into_rows();
    let mut out = vec![0.0; len * cols];
    for j in 0..cols {
        for k in 0..len {
            out[j * len + k] = rows[k * cols + j];
        }
    }
    Ok(out)
}

/// Unit ring vector of the spurious mode w⁻ ≡ −1, w⁺ ≡ 1: it has zero
/// velocity and u′ ≡ 1, so it violates u(1) = 0 and is fixed by every
/// discrete evolution. Physical states are exactly its orthogonal complement.
pub fn spurious_mode(n: usize) -> Vec<f64> {
    let c = 1.0 / ((2 * n) as f64).sqrt();
    (0..2 * n).map(|k| if k < n { -c } else { c }).collect()
}

/// ∬ b |v|² over the undamped trajectory, sampled at the same times as the
/// damped solver.
#[derive(Clone, Copy, Debug)]
pub struct YDefect {
    /// Over one full period (0, 2).
    pub full_period: f64,
    /// Over the window (1, 2) only.
    pub second_half: f64,
}

pub fn y_membership_defect(region: &DampingRegion, x: &WaveState) -> Result<YDefect> {
    require_wave(region)?;
    let n = x.n();
    let h = 1.0 / n as f64;
    let mut ring = x.to_ring();
    // ring is normalized: v_i = (g_m r_m + g_p r_p) / (2√(Δs/2))
    let scale = 1.0 / (2.0 * (0.5 * h).sqrt());
    let vel = |ring: &[f64], i: usize| {
        let (sm, sp) = slots(n, i);
        scale * (ring[sm] + ring[sp])
    };
    let (mut full, mut late) = (0.0, 0.0);
    for k in 0..2 * n {
        let (ta, tb) = sample_times(k, h);
        let mut acc = 0.0;
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let b = region.b(s, ta);
            if b > 0.0 {
                acc += b * vel(&ring, i).powi(2);
            }
        }
        ring = rotate_ring(&ring, 1);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let b = region.b(s, tb);
            if b > 0.0 {
                acc += b * vel(&ring, i).powi(2);
            }
        }
        let contrib = acc * h * 0.5 * h;
        full += contrib;
        if k >= n {
            late += contrib;
        }
    }
    Ok(YDefect {
        full_period: full,
        second_half: late,
    })
}

/// Matrix of x ↦ ∫₀² ‖b^{1/2} v(t; x)‖² dt along the undamped flow, in
/// normalized ring coordinates and at the sample times of the damped solver
/// (row-major 2N × 2N). ⟨Gx, x⟩ equals `y_membership_defect(..).full_period`.
pub(crate) fn gramian_ring(region: &DampingRegion, n: usize) -> Result<Vec<f64>> {
    require_wave(region)?;
    let h = 1.0 / n as f64;
    let len = 2 * n;
    let mut g = vec![0.0; len * len];
    // label ring: rotating it tells where every slot came from, and with
    // which sign
    let mut labels: Vec<f64> = (0..len).map(|j| (j + 1) as f64).collect();
    let add = |labels: &[f64], t: f64, g: &mut [f64]| {
        for i in 0..n {
            let b = region.b((i as f64 + 0.5) * h, t);
            if b == 0.0 {
                continue;
            }
            let (sm, sp) = slots(n, i);
            let (lm, lp) = (labels[sm], labels[sp]);
            let idx = [(lm.abs() as usize - 1, lm.signum()), (lp.abs() as usize - 1, lp.signum())];
            let c = 0.25 * h * b;
            for &(a, ga) in &idx {
                for &(bb, gb) in &idx {
                    g[a * len + bb] += c * ga * gb;
                }
            }
        }
    };
    for k in 0..len {
        let (ta, tb) = sample_times(k, h);
        add(&labels, ta, &mut g);
        labels = rotate_ring(&labels, 1);
        add(&labels, tb, &mut g);
    }
    Ok(g)
}

/// Membership tolerance 1e−6‖x‖² for the defect integrals.
pub fn membership_tolerance(x: &WaveState) -> f64 {
    1e-6 * x.norm_sq()
}

/// δ snapped to the band the damped solver realizes: I_δ = (δ_h, 1−δ_h) is a
/// union of whole cells. Damping is sampled at (k+¼)h and (k+¾)h, so a ray
/// riding the edge of the undamped band sees it widened by a quarter cell on
/// each side; δN rounds down when its fractional part is at most ¼ and up
/// otherwise.
#[derive(Clone, Copy, Debug)]
pub struct SnappedDelta {
    pub n: usize,
    /// Index of the first node of I_δ.
    pub first: usize,
    pub delta: f64,
}

impl SnappedDelta {
    pub fn new(delta: f64, n: usize) -> Result<Self> {
        if !(delta.is_finite() && (0.0..0.5).contains(&delta)) {
            return Err(Error::InvalidParameter(format!("need delta in [0, 1/2), got {delta}")));
        }
        let x = delta * n as f64;
        let frac = x - x.floor();
        let first = if frac > 1e-9 && frac <= 0.25 + 1e-9 {
            x.floor()
        } else {
            (x - 1e-9).ceil().max(0.0)
        } as usize;
        if 2 * first >= n {
            return Err(Error::InvalidParameter(format!(
                "I_delta is empty on a grid of {n} cells for delta = {delta}"
            )));
        }
        Ok(SnappedDelta {
            n,
            first,
            delta: first as f64 / n as f64,
        })
    }

    /// Node index of 1 − δ_h.
    pub fn last(&self) -> usize {
        self.n - self.first
    }

    pub fn in_interval(&self, cell: usize) -> bool {
        cell >= self.first && cell < self.last()
    }
}

/// (u_δ, v_δ) on the grid.
pub fn y_delta(sd: &SnappedDelta) -> WaveState {
    let d = sd.delta;
    let n = sd.n;
    let h = 1.0 / n as f64;
    let u = (0..=n)
        .map(|j| {
            let s = j as f64 * h;
            if j <= sd.first {
                s
            } else if j < sd.last() {
                d * (1.0 - 2.0 * s) / (1.0 - 2.0 * d)
            } else {
                s - 1.0
            }
        })
        .collect::<Vec<_>>();
    let mut u = u;
    u[n] = 0.0;
    let v = (0..n)
        .map(|i| if sd.in_interval(i) { -1.0 / (1.0 - 2.0 * d) } else { 0.0 })
        .collect();
    WaveState { u, v }
}

/// φ_{δ,s}(x) at node j of I_δ: (u(s) − u(δ))/2 + ½∫_δ^s v.
fn phi(x: &WaveState, sd: &SnappedDelta, j: usize) -> f64 {
    let h = x.cell_width();
    let int_v: f64 = x.v[sd.first..j].iter().sum::<f64>() * h;
    0.5 * (x.u[j] - x.u[sd.first]) + 0.5 * int_v
}

/// ψ_δ(x) = φ_{δ,1−δ}(x).
pub fn psi(x: &WaveState, sd: &SnappedDelta) -> f64 {
    phi(x, sd, sd.last())
}

/// The orthogonal projection onto Y for the ray-band example:
/// Px = −2ψ/(1+2δ)(u_δ, v_δ) + (w, w′) with
/// w(s) = φ_{δ,s}(x) − (s−δ)/(1−2δ)ψ on I_δ and zero elsewhere.
pub fn example51_projection(delta: f64, x: &WaveState) -> Result<WaveState> {
    let sd = SnappedDelta::new(delta, x.n())?;
    Ok(example51_projection_snapped(&sd, x))
}

pub(crate) fn example51_projection_snapped(sd: &SnappedDelta, x: &WaveState) -> WaveState {
    let n = x.n();
    let h = 1.0 / n as f64;
    let d = sd.delta;
    let ps = psi(x, sd);
    let coef = -2.0 * ps / (1.0 + 2.0 * d);
    let mut w = vec![0.0; n + 1];
    for j in sd.first..=sd.last() {
        let s = j as f64 * h;
        w[j] = phi(x, sd, j) - (s - d) / (1.0 - 2.0 * d) * ps;
    }
    // w vanishes at both ends of I_δ up to round-off; pin it
    w[sd.first] = 0.0;
    w[sd.last()] = 0.0;
    let mut wv = vec![0.0; n];
    for i in sd.first..sd.last() {
        wv[i] = (w[i + 1] - w[i]) / h;
    }
    let y = y_delta(sd);
    let wstate = WaveState { u: w, v: wv };
    y.scaled(coef).add(&wstate)
}

/// ‖u′ + v‖_{L²(I_δ)} + |⟨x, y_δ⟩| / ‖y_δ‖; zero exactly on Z.
pub fn z_membership_defect(delta: f64, x: &WaveState) -> Result<f64> {
    let sd = SnappedDelta::new(delta, x.n())?;
    let h = x.cell_width();
    let first: f64 = (sd.first..sd.last())
        .map(|i| (x.du(i) + x.v[i]).powi(2))
        .sum::<f64>()
        * h;
    let y = y_delta(&sd);
    Ok(first.sqrt() + x.dot(&y).abs() / y.norm())
}

/// (w, w′) with w ∈ H¹₀(I_δ) given by a profile on [0,1] mapped onto I_δ.
pub fn example51_w_state(delta: f64, n: usize, profile: impl Fn(f64) -> f64) -> Result<WaveState> {
    let sd = SnappedDelta::new(delta, n)?;
    let h = 1.0 / n as f64;
    let lo = sd.delta;
    let len = 1.0 - 2.0 * lo;
    let mut u = vec![0.0; n + 1];
    for j in sd.first + 1..sd.last() {
        let r = (j as f64 * h - lo) / len;
        u[j] = profile(r);
    }
    let v = (0..n).map(|i| (u[i + 1] - u[i]) / h).collect::<Vec<_>>();
    let v = v
        .into_iter()
        .enumerate()
        .map(|(i, x)| if sd.in_interval(i) { x } else { 0.0 })
        .collect();
    Ok(WaveState { u, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(n: usize) -> WaveState {
        WaveState::from_fns(
            n,
            |s| (PI * s).sin() + 0.3 * (3.0 * PI * s).sin() + s * (1.0 - s),
            |s| (2.0 * PI * s).cos() + s,
        )
    }

    #[test]
    fn riemann_round_trip() {
        let x = sample(64);
        let (y, res) = x.to_riemann().to_wave();
        assert!(res.abs() < 1e-14);
        for i in 0..=64 {
            assert!((x.u[i] - y.u[i]).abs() < 1e-14);
        }
        assert!((x.to_riemann().norm_sq() - x.norm_sq()).abs() < 1e-12);
        let ring = x.to_ring();
        let rn: f64 = ring.iter().map(|r| r * r).sum();
        assert!((rn - x.norm_sq()).abs() < 1e-12);
        let (z, _) = WaveState::from_ring(&ring);
        assert!(z.sub(&x).norm() < 1e-12);
    }

    #[test]
    fn resonance_and_group_law() {
        for n in [16, 64, 256] {
            let x = sample(n);
            let y = dalembert(&x, 2.0);
            assert!(y.sub(&x).norm() <= 1e-12 * x.norm());
            let t1 = 5.0 / n as f64;
            let t2 = 0.75;
            let a = dalembert(&dalembert(&x, t1), t2);
            let b = dalembert(&x, t1 + t2);
            assert!(a.sub(&b).norm() <= 1e-12 * x.norm());
            assert!((dalembert(&x, t2).norm() - x.norm()).abs() <= 1e-12 * x.norm());
            assert!(dalembert(&x, -t2).sub(&dalembert(&x, 2.0 - t2)).norm() < 1e-12);
        }
    }

    #[test]
    fn standing_wave_velocity() {
        // u = sin(πs), v = 0 gives v(s,t) = −π sin(πs) sin(πt); compare the
        // exact cell averages
        let n = 128;
        let h = 1.0 / n as f64;
        let x = WaveState::from_fns(n, |s| (PI * s).sin(), |_| 0.0);
        for k in [1usize, 17, 64, 100] {
            let t = k as f64 * h;
            let z = dalembert(&x, t);
            for i in 0..n {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                let avg = -(PI * t).sin() * ((PI * a).cos() - (PI * b).cos()) / h;
                assert!((z.v[i] - avg).abs() < 1e-12, "t={t} i={i}: {} vs {avg}", z.v[i]);
            }
        }
    }

    #[test]
    fn undamped_solver_is_exact() {
        let r = DampingRegion::empty(2.0).unwrap();
        let x = sample(64);
        let y = damped_solve(&r, &x, 2.0).unwrap();
        assert!(y.sub(&x).norm() < 1e-13);
        let y = damped_solve(&r, &x, 0.5).unwrap();
        assert!(y.sub(&dalembert(&x, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn solver_rejects_bad_input() {
        let r = DampingRegion::switched(0.3).unwrap();
        assert!(damped_solve(&r, &sample(64), 1.0 / 128.0).is_err());
        let r1 = DampingRegion::corner_square(0.3).unwrap();
        assert!(damped_solve(&r1, &sample(64), 1.0).is_err());
    }

    #[test]
    fn energy_is_dissipated_step_by_step() {
        let r = DampingRegion::switched(0.6).unwrap();
        let run = damped_run(&r, &sample(128), 2.0).unwrap();
        for w in run.norm_sq_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14));
        }
        assert!(run.balance_residual() < 1e-5);
        assert!(run.endpoint_residual.abs() < 1e-13);
    }

    #[test]
    fn block_matches_single_state_solver() {
        let r = DampingRegion::ray_band(0.2).unwrap();
        let n = 32;
        let xs = [sample(n), sample(n).scaled(-0.5)];
        let mut cols = Vec::new();
        for x in &xs {
            cols.extend(x.to_ring());
        }
        let out = monodromy_apply_columns(&r, n, 2, &cols).unwrap();
        for (j, x) in xs.iter().enumerate() {
            let y = damped_solve(&r, x, 2.0).unwrap().to_ring();
            for k in 0..2 * n {
                assert!((out[j * 2 * n + k] - y[k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn spurious_mode_is_fixed() {
        let n = 16;
        let c = spurious_mode(n);
        let r = DampingRegion::full(2.0).unwrap();
        let out = monodromy_apply_columns(&r, n, 1, &c).unwrap();
        for k in 0..2 * n {
            assert!((out[k] - c[k]).abs() < 1e-15);
        }
        // orthogonal to every physical state
        let x = sample(n).to_ring();
        let d: f64 = x.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!(d.abs() < 1e-13);
    }

    #[test]
    fn ray_band_y_members() {
        for &delta in &[0.1, 0.25, 0.4] {
            let n = 128;
            let r = DampingRegion::ray_band(delta).unwrap();
            let sd = SnappedDelta::new(delta, n).unwrap();
            let y = y_delta(&sd);
            let d = y_membership_defect(&r, &y).unwrap();
            assert!(d.full_period <= membership_tolerance(&y), "{delta}: {d:?}");
            let w = example51_w_state(delta, n, |r| (PI * r).sin().powi(2) * (1.0 + r)).unwrap();
            let d = y_membership_defect(&r, &w).unwrap();
            assert!(d.full_period <= membership_tolerance(&w));
            // members are fixed by the damped monodromy
            let ty = damped_solve(&r, &y, 2.0).unwrap();
            assert!(ty.sub(&y).norm() < 1e-12 * y.norm());
        }
        let full = DampingRegion::full(2.0).unwrap();
        let x = sample(64);
        assert!(y_membership_defect(&full, &x).unwrap().full_period > 0.1);
    }

    #[test]
    fn projection_examples() {
        let n = 256;
        for &delta in &[0.0, 0.1, 0.25, 0.4] {
            let sd = SnappedDelta::new(delta, n).unwrap();
            let y = y_delta(&sd);
            let py = example51_projection(delta, &y).unwrap();
            assert!(py.sub(&y).norm() <= 1e-8 * y.norm(), "delta={delta}");
            let x = sample(n);
            let px = example51_projection(delta, &x).unwrap();
            let ppx = example51_projection(delta, &px).unwrap();
            assert!(ppx.sub(&px).norm() <= 1e-12 * x.norm());
            let rest = x.sub(&px);
            assert!(px.dot(&rest).abs() <= 1e-12 * x.norm_sq());
            assert!(z_membership_defect(delta, &rest).unwrap() < 1e-10);
            assert!(z_membership_defect(delta, &y).unwrap() > 0.1);
            // (u, −u′) lies in Z and projects to zero
            let z = WaveState::from_fns(n, |s| (PI * s).sin(), |_| 0.0);
            let zv: Vec<f64> = (0..n).map(|i| -z.du(i)).collect();
            let z = WaveState { u: z.u, v: zv };
            assert!(example51_projection(delta, &z).unwrap().norm() < 1e-12);
        }
        assert!(example51_projection(0.5, &sample(n)).is_err());
    }

    #[test]
    fn snapping_matches_the_solver_band() {
        let n = 128;
        for frac in [0.0, 0.2, 0.25, 0.3, 0.5, 0.9] {
            let delta = (20.0 + frac) / n as f64;
            let r = DampingRegion::ray_band(delta).unwrap();
            let sd = SnappedDelta::new(delta, n).unwrap();
            let y = y_delta(&sd);
            let ty = damped_solve(&r, &y, 2.0).unwrap();
            assert!(ty.sub(&y).norm() < 1e-12 * y.norm(), "frac {frac}");
            // one cell wider on each side is already damped
            let wide = SnappedDelta {
                first: sd.first - 1,
                delta: (sd.first - 1) as f64 / n as f64,
                ..sd
            };
            let y = y_delta(&wide);
            let ty = damped_solve(&r, &y, 2.0).unwrap();
            assert!(ty.sub(&y).norm() > 1e-3 * y.norm(), "frac {frac}");
        }
    }
}
