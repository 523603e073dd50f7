//! Fixtures shared by the kernel benchmarks.

use permon::geometry::DampingRegion;
use permon::spectral::{self, MonodromyOperator, WavePeriodMap};
use permon::states;
use permon::transport::{self, TransportMonodromy, TransportState};
use permon::wave::WaveState;

pub fn transport_case(n: usize) -> (TransportMonodromy, TransportState) {
    let region = DampingRegion::corner_square(0.5).expect("valid region");
    let mono = transport::monodromy(&region, n).expect("transport monodromy");
    (mono, TransportState::from_fn(n, |_| 1.0))
}

pub fn wave_region() -> DampingRegion {
    DampingRegion::switched(0.6).expect("valid region")
}

pub fn wave_state(n: usize) -> WaveState {
    states::random_wave(n, &mut states::rng(7))
}

pub fn wave_operator(n: usize) -> MonodromyOperator {
    let map = WavePeriodMap::new(wave_region(), n).expect("wave period map");
    spectral::assemble(&map).expect("assembled monodromy")
}
