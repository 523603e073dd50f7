//! Dense kernels on top of faer: Hessenberg reduction, a complex Hessenberg
//! LU with Lanczos for σ_min(zI − H), and matrix norms by power
//! iteration.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::hessenberg;
use faer::{Mat, Par, Side};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Upper Hessenberg form H = QᵀAQ (Q discarded).
pub fn hessenberg_form(a: &Mat<f64>) -> Mat<f64> {
    let n = a.nrows();
    let mut h = a.clone();
    if n > 2 {
        let bs = 32.min(n - 1).max(1);
        let mut hh = Mat::<f64>::zeros(bs, n - 1);
        let mut buf = MemBuffer::new(hessenberg::hessenberg_in_place_scratch::<f64>(
            n,
            bs,
            Par::Seq,
            Default::default(),
        ));
        hessenberg::hessenberg_in_place(
            h.as_mut(),
            hh.as_mut(),
            Par::Seq,
            MemStack::new(&mut buf),
            Default::default(),
        );
        // the reflectors are stored below the subdiagonal
        for j in 0..n {
            for i in j + 2..n {
                h[(i, j)] = 0.0;
            }
        }
    }
    h
}

/// LU of zI − H for upper Hessenberg H with pivoting between adjacent rows.
pub struct HessenbergLu {
    n: usize,
    /// Row-major upper triangular factor.
    u: Vec<C64>,
    mult: Vec<C64>,
    swap: Vec<bool>,
}

impl HessenbergLu {
    pub fn new(h: &Mat<f64>, z: C64) -> Self {
        let n = h.nrows();
        let mut lu = HessenbergLu {
            n,
            u: vec![C64::new(0.0, 0.0); n * n],
            mult: vec![C64::new(0.0, 0.0); n.saturating_sub(1)],
            swap: vec![false; n.saturating_sub(1)],
        };
        lu.refactor(h, z);
        lu
    }

    /// Reuses the storage for a new shift z.
    pub fn refactor(&mut self, h: &Mat<f64>, z: C64) {
        let n = self.n;
        let u = &mut self.u;
        for i in 0..n {
            let lo = i.saturating_sub(1);
            for j in 0..lo {
                u[i * n + j] = C64::new(0.0, 0.0);
            }
            for j in lo..n {
                u[i * n + j] = C64::new(-h[(i, j)], 0.0);
            }
            u[i * n + i] += z;
        }
        for k in 0..n.saturating_sub(1) {
            let (top, bottom) = u.split_at_mut((k + 1) * n);
            let rk = &mut top[k * n..];
            let rk1 = &mut bottom[..n];
            let swap = rk1[k].norm_sqr() > rk[k].norm_sqr();
            if swap {
                for j in k..n {
                    std::mem::swap(&mut rk[j], &mut rk1[j]);
                }
            }
            let piv = rk[k];
            let l = if piv.norm_sqr() == 0.0 { C64::new(0.0, 0.0) } else { rk1[k] / piv };
            rk1[k] = C64::new(0.0, 0.0);
            if l.norm_sqr() != 0.0 {
                for j in k + 1..n {
                    rk1[j] -= l * rk[j];
                }
            }
            self.mult[k] = l;
            self.swap[k] = swap;
        }
    }

    pub fn min_abs_pivot(&self) -> f64 {
        (0..self.n).map(|i| self.u[i * self.n + i].norm()).fold(f64::INFINITY, f64::min)
    }

    /// Solves (zI − H)x = b in place.
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swap[k] {
                b.swap(k, k + 1);
            }
            let l = self.mult[k];
            let bk = b[k];
            b[k + 1] -= l * bk;
        }
        for i in (0..n).rev() {
            let row = &self.u[i * n..(i + 1) * n];
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= row[j] * b[j];
            }
            b[i] = acc / row[i];
        }
    }

    /// Solves (zI − H)^* y = c in place.
    pub fn solve_adjoint(&self, c: &mut [C64]) {
        let n = self.n;
        // U^* w = c, column sweep over the rows of U
        for i in 0..n {
            let row = &self.u[i * n..(i + 1) * n];
            let wi = c[i] / row[i].conj();
            c[i] = wi;
            for j in i + 1..n {
                c[j] -= row[j].conj() * wi;
            }
        }
        // y = E₀^* ⋯ E_{n−2}^* w with E_k^* = P_k L_k^*
        for k in (0..n.saturating_sub(1)).rev() {
            let l = self.mult[k];
            let w1 = c[k + 1];
            c[k] -= l.conj() * w1;
            if self.swap[k] {
                c.swap(k, k + 1);
            }
        }
    }
}

fn normalize(x: &mut [C64]) -> f64 {
    let nrm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for v in x.iter_mut() {
            *v /= nrm;
        }
    }
    nrm
}

/// σ_min of the factored matrix: Lanczos with full reorthogonalization on
/// the Hermitian operator (A^*A)⁻¹, seeded with `start` (updated to the
/// dominant Ritz vector). Power iteration alone stalls when the smallest
/// singular values cluster.
pub fn smallest_singular_value(lu: &HessenbergLu, start: &mut Vec<C64>, max_steps: usize) -> f64 {
    let n = lu.n;
    if n == 0 {
        return f64::INFINITY;
    }
    // a warm start that is an exact eigenvector spans an invariant Krylov
    // space, so it is always blended with a fixed random direction
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c05);
    let mut noise: Vec<C64> = (0..n)
        .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    normalize(&mut noise);
    if start.len() != n || normalize(start) == 0.0 {
        *start = noise;
    } else {
        for (s, r) in start.iter_mut().zip(&noise) {
            *s += 1e-2 * r;
        }
        normalize(start);
    }
    let kmax = max_steps.min(n).max(1);
    let mut q: Vec<Vec<C64>> = vec![start.clone()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    let mut ritz = 0.0;
    let mut ritz_vec: Vec<f64> = vec![1.0];
    let mut quiet = 0;
    for k in 0..kmax {
        let mut w = q[k].clone();
        lu.solve_adjoint(&mut w);
        lu.solve(&mut w);
        if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return 0.0;
        }
        let ak = q[k].iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        alpha.push(ak);
        // two passes of Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for qi in &q {
                let c: C64 = qi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (wv, qv) in w.iter_mut().zip(qi) {
                    *wv -= c * qv;
                }
            }
        }
        let bk = normalize(&mut w);
        let m = alpha.len();
        let t = Mat::<f64>::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i == j + 1 {
                beta[j]
            } else if j == i + 1 {
                beta[i]
            } else {
                0.0
            }
        });
        let Ok(eig) = t.self_adjoint_eigen(Side::Lower) else {
            break;
        };
        let sv = eig.S().column_vector();
        ritz = sv[m - 1];
        ritz_vec = (0..m).map(|i| eig.U()[(i, m - 1)]).collect();
        // Ritz values increase monotonically towards the top eigenvalue;
        // two quiet steps in a row end the run
        let resid = bk * ritz_vec[m - 1].abs();
        quiet = if (ritz - prev).abs() <= 1e-10 * ritz { quiet + 1 } else { 0 };
        let settled = quiet >= 2 || resid <= 1e-12 * ritz;
        if settled || bk <= 1e-14 * ritz.abs() || k + 1 == kmax {
            break;
        }
        prev = ritz;
        beta.push(bk);
        q.push(w);
    }
    let mut v = vec![C64::new(0.0, 0.0); n];
    for (c, qi) in ritz_vec.iter().zip(&q) {
        for (vv, qv) in v.iter_mut().zip(qi) {
            *vv += *c * qv;
        }
    }
    if normalize(&mut v) > 0.0 {
        *start = v;
    }
    if ritz <= 0.0 {
        0.0
    } else {
        1.0 / ritz.sqrt()
    }
}

/// ‖A‖₂ by power iteration on AᵀA (deterministic start).
pub fn norm2(a: &Mat<f64>) -> f64 {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return 0.0;
    }
    if n <= 64 {
        return a.singular_values().map(|s| s[0]).unwrap_or(f64::NAN);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = Mat::<f64>::from_fn(n, 1, |_, _| StandardNormal.sample(&mut rng));
    let mut est = 0.0;
    for _ in 0..500 {
        let nx = x.norm_l2();
        if nx == 0.0 {
            return 0.0;
        }
        x = x * faer::Scale(1.0 / nx);
        let y = a * &x;
        let z = a.transpose() * &y;
        let new = y.norm_l2();
        x = z;
        if (new - est).abs() <= 1e-12 * new {
            est = new;
            break;
        }
        est = new;
    }
    est
}

/// Eigenvalues of a symmetric matrix (lower triangle used), ascending.
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Vec<f64> {
    a.self_adjoint_eigenvalues(Side::Lower).unwrap_or_default()
}

/// (A + Aᵀ)/2.
pub fn symmetrize(a: &Mat<f64>) -> Mat<f64> {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn max_abs(a: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

pub fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub fn mat_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut y = vec![0.0; n];
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            let col = a.col_as_slice(j);
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(n, n, |_, _| {
            let x: f64 = StandardNormal.sample(&mut rng);
            x / (n as f64).sqrt()
        })
    }

    #[test]
    fn hessenberg_preserves_spectrum_invariants() {
        let a = sample(40, 1);
        let h = hessenberg_form(&a);
        for j in 0..40 {
            for i in j + 2..40 {
                assert_eq!(h[(i, j)], 0.0);
            }
        }
        let tr_a: f64 = (0..40).map(|i| a[(i, i)]).sum();
        let tr_h: f64 = (0..40).map(|i| h[(i, i)]).sum();
        assert!((tr_a - tr_h).abs() < 1e-12);
        let fa = a.norm_l2();
        let fh = h.norm_l2();
        assert!((fa - fh).abs() < 1e-12 * fa);
    }

    #[test]
    fn lu_solves_and_adjoint_solves() {
        let a = sample(30, 2);
        let h = hessenberg_form(&a);
        let z = C64::new(0.3, 0.7);
        let lu = HessenbergLu::new(&h, z);
        let b: Vec<C64> = (0..30).map(|i| C64::new(i as f64, 1.0 - i as f64 * 0.1)).collect();
        let mut x = b.clone();
        lu.solve(&mut x);
        // residual (zI − H)x − b
        for i in 0..30 {
            let mut r = z * x[i] - b[i];
            for j in 0..30 {
                r -= h[(i, j)] * x[j];
            }
            assert!(r.norm() < 1e-10);
        }
        let mut y = b.clone();
        lu.solve_adjoint(&mut y);
        for j in 0..30 {
            let mut r = z.conj() * y[j] - b[j];
            for i in 0..30 {
                r -= h[(i, j)] * y[i];
            }
            assert!(r.norm() < 1e-10);
        }
    }

    #[test]
    fn lanczos_sigma_min_matches_svd() {
        let a = sample(50, 3);
        let h = hessenberg_form(&a);
        for &theta in &[0.01, 0.5, 2.0] {
            let z = C64::from_polar(1.0, theta);
            let lu = HessenbergLu::new(&h, z);
            let mut start = Vec::new();
            let s = smallest_singular_value(&lu, &mut start, 500);
            // oracle: singular values of the real 2n embedding of zI − A
            let n = 50;
            let m = Mat::<f64>::from_fn(2 * n, 2 * n, |i, j| {
                let (bi, bj) = (i / n, j / n);
                let (ii, jj) = (i % n, j % n);
                let re = if ii == jj { z.re } else { 0.0 } - a[(ii, jj)];
                let im = if ii == jj { z.im } else { 0.0 };
                match (bi, bj) {
                    (0, 0) | (1, 1) => re,
                    (0, 1) => -im,
                    _ => im,
                }
            });
            let sv = m.singular_values().unwrap();
            let oracle = sv[2 * n - 1];
            assert!((s - oracle).abs() < 1e-8 * oracle.max(1e-3), "{s} vs {oracle}");
        }
    }

    #[test]
    fn norm2_matches_svd() {
        let a = sample(100, 4);
        let s = a.singular_values().unwrap()[0];
        assert!((norm2(&a) - s).abs() < 1e-8 * s);
    }
}
