//! Seeded random initial data and a common wrapper over the two state kinds.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::transport::TransportState;
use crate::wave::WaveState;

/// Number of Fourier modes in random states.
pub const MODES: usize = 16;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Σ_k (a_k cos 2πks + b_k sin 2πks)/(1+k) at cell centers.
pub fn random_transport(n: usize, rng: &mut ChaCha8Rng) -> TransportState {
    let coef: Vec<(f64, f64)> = (0..MODES).map(|_| (normal(rng), normal(rng))).collect();
    TransportState::from_fn(n, |s| {
        coef.iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let w = 2.0 * PI * k as f64 * s;
                (a * w.cos() + b * w.sin()) / (1.0 + k as f64)
            })
            .sum()
    })
}

/// u = Σ c_k sin(kπs)/(kπ), v = Σ d_k sin(kπs) with standard normal
/// coefficients; both components carry energy O(1) per mode.
pub fn random_wave(n: usize, rng: &mut ChaCha8Rng) -> WaveState {
    let coef: Vec<(f64, f64)> = (1..=MODES).map(|_| (normal(rng), normal(rng))).collect();
    let mut x = WaveState::from_fns(
        n,
        |s| {
            coef.iter()
                .enumerate()
                .map(|(k, (c, _))| {
                    let w = PI * (k + 1) as f64;
                    c * (w * s).sin() / w
                })
                .sum()
        },
        |s| {
            coef.iter()
                .enumerate()
                .map(|(k, (_, d))| d * (PI * (k + 1) as f64 * s).sin())
                .sum()
        },
    );
    x.u[0] = 0.0;
    x.u[n] = 0.0;
    x
}

#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Transport(TransportState),
    Wave(WaveState),
}

impl State {
    /// Coordinates in the basis the monodromy acts on: cell values for
    /// transport, normalized ring entries for the wave.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            State::Transport(x) => x.values.clone(),
            State::Wave(x) => x.to_ring(),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            State::Transport(x) => x.norm(),
            State::Wave(x) => x.norm(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            State::Transport(x) => x.n(),
            State::Wave(x) => x.n(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_physical() {
        let a = random_wave(64, &mut rng(7));
        let b = random_wave(64, &mut rng(7));
        assert_eq!(a, b);
        assert_eq!(a.u[64], 0.0);
        let (back, resid) = WaveState::from_ring(&a.to_ring());
        assert!(resid.abs() < 1e-12);
        assert!(back.sub(&a).norm() < 1e-12 * a.norm());
        let t = random_transport(64, &mut rng(7));
        assert!(t.norm() > 0.0);
        assert_ne!(random_transport(64, &mut rng(8)), t);
    }
}
