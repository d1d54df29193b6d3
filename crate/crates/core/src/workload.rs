//! Background service traffic: Poisson packet streams over virtual links.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::netgraph::VlinkId;

/// One packet stream traversing a chain of virtual links (multi-hop for
/// service function chains, a single hop otherwise).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamSpec {
    pub id: usize,
    /// Ordered virtual-link chain every packet traverses.
    pub vlinks: Vec<VlinkId>,
    /// Mean packet arrival rate, packets/s.
    pub rate: f64,
    /// Mean packet size, bits. Sizes are Normal with 10% deviation,
    /// truncated positive.
    pub packet_bits: f64,
    pub start: f64,
    pub stop: f64,
}

/// Live generator state of one stream. Each stream owns an independent RNG
/// derived from the run seed, so arrival processes do not depend on how the
/// rest of the simulation interleaves.
#[derive(Debug, Clone)]
pub struct StreamState {
    pub spec: StreamSpec,
    rng: ChaCha8Rng,
    inter: Exp<f64>,
    size: Normal<f64>,
}

impl StreamState {
    pub fn new(spec: StreamSpec, seed: u64) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(spec.id as u64 + 1)));
        let inter = Exp::new(spec.rate.max(1e-12)).expect("positive rate");
        let size = Normal::new(spec.packet_bits, 0.1 * spec.packet_bits).expect("valid size");
        StreamState { spec, rng, inter, size }
    }

    /// Next inter-arrival gap, seconds.
    pub fn next_gap(&mut self) -> f64 {
        self.inter.sample(&mut self.rng)
    }

    /// Next packet size in bits, truncated positive by resampling.
    pub fn next_size(&mut self) -> f64 {
        loop {
            let s = self.size.sample(&mut self.rng);
            if s > 0.0 {
                return s;
            }
        }
    }
}

/// Draws a load size from Normal(mean, 0.2 mean), truncated positive.
pub fn sample_load(rng: &mut impl Rng, mean: f64) -> f64 {
    let dist = Normal::new(mean, 0.2 * mean).expect("valid load");
    loop {
        let s = dist.sample(rng);
        if s > 0.0 {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: usize, rate: f64) -> StreamSpec {
        StreamSpec { id, vlinks: vec![], rate, packet_bits: 5e6, start: 0.0, stop: 100.0 }
    }

    #[test]
    fn arrival_rate_close_to_mean() {
        let mut s = StreamState::new(spec(0, 20.0), 42);
        let n = 20_000;
        let total: f64 = (0..n).map(|_| s.next_gap()).sum();
        let mean = total / n as f64;
        assert!((mean - 0.05).abs() < 0.002, "mean gap {mean}");
    }

    #[test]
    fn sizes_positive_and_near_mean() {
        let mut s = StreamState::new(spec(1, 200.0), 7);
        let sizes: Vec<f64> = (0..10_000).map(|_| s.next_size()).collect();
        assert!(sizes.iter().all(|&x| x > 0.0));
        let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
        assert!((mean - 5e6).abs() < 5e4, "mean size {mean}");
    }

    #[test]
    fn streams_are_deterministic_and_independent() {
        let mut a1 = StreamState::new(spec(0, 20.0), 1);
        let mut a2 = StreamState::new(spec(0, 20.0), 1);
        let mut b = StreamState::new(spec(1, 20.0), 1);
        let ga: Vec<f64> = (0..100).map(|_| a1.next_gap()).collect();
        let ga2: Vec<f64> = (0..100).map(|_| a2.next_gap()).collect();
        let gb: Vec<f64> = (0..100).map(|_| b.next_gap()).collect();
        assert_eq!(ga, ga2);
        assert_ne!(ga, gb);
    }

    #[test]
    fn load_sampling_truncated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert!(sample_load(&mut rng, 100.0) > 0.0);
        }
    }
}
