//! Analytic and iterative models of a single pre-copy live migration.
//!
//! The model tracks the iterative memory copy of a running instance: round 0
//! transfers the full (compressed) memory image, each following round re-sends
//! the pages dirtied during the previous round, and the final round is the
//! stop-and-copy during which the instance is paused. Convergence is governed
//! by `sigma = rho * R / L`, the ratio of the compressed dirty rate to the
//! bandwidth assigned to the migration.

use serde::{Deserialize, Serialize};

/// Static parameters of one pre-copy migration.
///
/// All sizes are in bits, rates in bits/s, times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MigrationSpec {
    /// Memory size of the instance, bits.
    pub memory: f64,
    /// Average dirty page rate, bits/s.
    pub dirty_rate: f64,
    /// Memory compression ratio, in (0, 1]. 1.0 means no compression.
    pub compression: f64,
    /// Downtime threshold used to trigger the stop-and-copy round, seconds.
    pub downtime_threshold: f64,
    /// Maximum allowed number of memory-copy rounds.
    pub max_rounds: u32,
    /// Pre-migration processing time (pre-migration, init, reservation), seconds.
    pub pre_time: f64,
    /// Post-migration processing time (commitment, activation, cleanup), seconds.
    pub post_time: f64,
    /// Resume/reassignment part of the post phase that counts towards downtime,
    /// seconds. Must not exceed `post_time`.
    pub resume_time: f64,
}

impl MigrationSpec {
    /// Builds a spec with the default phase timings (0.8 s pre, 1.2 s post,
    /// 0.3 s resume), no compression, 30-round cap and a 0.5 s downtime
    /// threshold.
    pub fn new(memory: f64, dirty_rate: f64) -> Self {
        MigrationSpec {
            memory,
            dirty_rate,
            compression: 1.0,
            downtime_threshold: 0.5,
            max_rounds: 30,
            pre_time: 0.8,
            post_time: 1.2,
            resume_time: 0.3,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.memory > 0.0) {
            return Err(ModelError::Invalid("memory must be positive"));
        }
        if !(self.dirty_rate >= 0.0) {
            return Err(ModelError::Invalid("dirty rate must be non-negative"));
        }
        if !(self.compression > 0.0 && self.compression <= 1.0) {
            return Err(ModelError::Invalid("compression ratio must be in (0, 1]"));
        }
        if self.max_rounds < 1 {
            return Err(ModelError::Invalid("max rounds must be at least 1"));
        }
        if !(self.downtime_threshold >= 0.0
            && self.pre_time >= 0.0
            && self.post_time >= 0.0
            && self.resume_time >= 0.0)
        {
            return Err(ModelError::Invalid("times must be non-negative"));
        }
        if self.resume_time > self.post_time {
            return Err(ModelError::Invalid("resume time must not exceed post time"));
        }
        Ok(())
    }

    /// `sigma = rho * R / L` for a given bandwidth.
    pub fn sigma(&self, bandwidth: f64) -> f64 {
        self.compression * self.dirty_rate / bandwidth
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid migration spec: {0}")]
    Invalid(&'static str),
    #[error("bandwidth must be positive")]
    NonPositiveBandwidth,
}

/// Predicted outcome of one migration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MigrationEstimate {
    /// Index of the stop-and-copy round. Rounds 0..=rounds are transferred.
    pub rounds: u32,
    /// Total memory copying time including the stop-and-copy round, seconds.
    pub mem_time: f64,
    /// Downtime: stop-and-copy transfer plus resume/reassignment, seconds.
    pub downtime: f64,
    /// Total bits moved over the network across all rounds.
    pub transferred: f64,
    /// End-to-end migration time: pre + mem + post.
    pub total_time: f64,
    /// Whether the iterative copy converges (dirty rate below bandwidth).
    pub converged: bool,
}

/// Transferred volume of one memory-copy round (Eq. for `V_i`): the full
/// compressed image for round 0, otherwise the pages dirtied during the
/// previous round.
pub fn round_volume(spec: &MigrationSpec, round: u32, prev_duration: f64) -> f64 {
    if round == 0 {
        spec.compression * spec.memory
    } else {
        spec.compression * prev_duration * spec.dirty_rate
    }
}

/// Closed-form estimate under a constant assigned bandwidth.
///
/// Uses the geometric-series form of the per-round volumes. The degenerate
/// cases (`sigma >= 1`, where the closed form is invalid or singular, and
/// `R = 0`) are routed through direct iteration.
pub fn estimate_constant_rate(spec: &MigrationSpec, bandwidth: f64) -> Result<MigrationEstimate, ModelError> {
    spec.validate()?;
    if !(bandwidth > 0.0) {
        return Err(ModelError::NonPositiveBandwidth);
    }
    let rho = spec.compression;
    let m = spec.memory;
    if spec.dirty_rate == 0.0 {
        // Single full copy, empty stop-and-copy.
        let mem_time = rho * m / bandwidth;
        return Ok(MigrationEstimate {
            rounds: 0,
            mem_time,
            downtime: spec.resume_time,
            transferred: rho * m,
            total_time: spec.pre_time + mem_time + spec.post_time,
            converged: true,
        });
    }
    let sigma = spec.sigma(bandwidth);
    if sigma >= 1.0 {
        // Diverging (or exactly critical) copy: geometric closed form invalid.
        return Ok(iterate_constant(spec, bandwidth, spec.max_rounds));
    }
    let vthd = spec.downtime_threshold * bandwidth;
    let n = stop_round(rho * m, sigma, vthd, spec.max_rounds);
    let mem_time = rho * m / bandwidth * (1.0 - sigma.powi(n as i32 + 1)) / (1.0 - sigma);
    let last_volume = rho * m * sigma.powi(n as i32);
    Ok(MigrationEstimate {
        rounds: n,
        mem_time,
        downtime: last_volume / bandwidth + spec.resume_time,
        transferred: mem_time * bandwidth,
        total_time: spec.pre_time + mem_time + spec.post_time,
        converged: true,
    })
}

/// First round index whose volume `rho*M*sigma^i` drops to the stop-and-copy
/// threshold, capped at the round limit. Computed from the logarithmic form
/// and then nudged to the exact first index to guard against floating-point
/// boundary error.
fn stop_round(v0: f64, sigma: f64, vthd: f64, cap: u32) -> u32 {
    if v0 <= vthd {
        return 0;
    }
    if sigma == 0.0 {
        return 1;
    }
    let raw = (vthd / v0).ln() / sigma.ln();
    let mut n = raw.ceil().max(0.0) as u32;
    while n > 0 && v0 * sigma.powi(n as i32 - 1) <= vthd {
        n -= 1;
    }
    while v0 * sigma.powi(n as i32) > vthd && n < cap {
        n += 1;
    }
    n.min(cap)
}

fn iterate_constant(spec: &MigrationSpec, bandwidth: f64, cap: u32) -> MigrationEstimate {
    let vthd = spec.downtime_threshold * bandwidth;
    let mut volume = spec.compression * spec.memory;
    let mut round = 0u32;
    let mut mem_time = 0.0;
    let mut transferred = 0.0;
    loop {
        let duration = volume / bandwidth;
        if volume <= vthd || round >= cap {
            mem_time += duration;
            transferred += volume;
            let stopped_by_volume = volume <= vthd;
            return MigrationEstimate {
                rounds: round,
                mem_time,
                downtime: duration + spec.resume_time,
                transferred,
                total_time: spec.pre_time + mem_time + spec.post_time,
                converged: stopped_by_volume || spec.sigma(bandwidth) < 1.0,
            };
        }
        mem_time += duration;
        transferred += volume;
        volume = spec.compression * duration * spec.dirty_rate;
        round += 1;
    }
}

/// Piecewise-constant bandwidth assigned to a migration over time.
pub trait BandwidthProfile {
    /// Rate available at time `t` (seconds from the start of memory copy).
    fn rate(&self, t: f64) -> f64;
    /// Next instant strictly after `t` at which the rate changes, if any.
    fn next_change(&self, t: f64) -> Option<f64>;
}

/// Constant bandwidth.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile(pub f64);

impl BandwidthProfile for ConstantProfile {
    fn rate(&self, _t: f64) -> f64 {
        self.0
    }
    fn next_change(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// Step profile: sorted `(start_time, rate)` segments; the first segment must
/// start at 0.
#[derive(Debug, Clone)]
pub struct StepProfile {
    steps: Vec<(f64, f64)>,
}

impl StepProfile {
    pub fn new(steps: Vec<(f64, f64)>) -> Self {
        assert!(!steps.is_empty() && steps[0].0 == 0.0, "profile must start at t=0");
        assert!(steps.windows(2).all(|w| w[0].0 < w[1].0), "steps must be increasing");
        StepProfile { steps }
    }
}

impl BandwidthProfile for StepProfile {
    fn rate(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .rev()
            .find(|(start, _)| *start <= t)
            .map(|(_, r)| *r)
            .unwrap_or(self.steps[0].1)
    }
    fn next_change(&self, t: f64) -> Option<f64> {
        self.steps.iter().map(|(s, _)| *s).find(|s| *s > t)
    }
}

/// Time to transfer `volume` bits starting at `t0` against a piecewise
/// bandwidth profile.
fn transfer_duration(profile: &dyn BandwidthProfile, t0: f64, volume: f64) -> f64 {
    let mut t = t0;
    let mut left = volume;
    loop {
        let rate = profile.rate(t);
        assert!(rate > 0.0, "bandwidth profile must stay positive");
        match profile.next_change(t) {
            Some(next) => {
                let seg = next - t;
                if left <= rate * seg {
                    return t + left / rate - t0;
                }
                left -= rate * seg;
                t = next;
            }
            None => return t + left / rate - t0,
        }
    }
}

/// Round-by-round simulation of the memory copy against a time-varying
/// bandwidth. Identical to [`estimate_constant_rate`] for a constant profile.
pub fn simulate_rounds(spec: &MigrationSpec, profile: &dyn BandwidthProfile) -> Result<MigrationEstimate, ModelError> {
    spec.validate()?;
    let rho = spec.compression;
    if spec.dirty_rate == 0.0 {
        let duration = transfer_duration(profile, 0.0, rho * spec.memory);
        return Ok(MigrationEstimate {
            rounds: 0,
            mem_time: duration,
            downtime: spec.resume_time,
            transferred: rho * spec.memory,
            total_time: spec.pre_time + duration + spec.post_time,
            converged: true,
        });
    }
    let mut t = 0.0;
    let mut volume = rho * spec.memory;
    let mut round = 0u32;
    let mut transferred = 0.0;
    loop {
        let rate_now = profile.rate(t);
        if !(rate_now > 0.0) {
            return Err(ModelError::NonPositiveBandwidth);
        }
        let stop = volume <= spec.downtime_threshold * rate_now || round >= spec.max_rounds;
        let duration = transfer_duration(profile, t, volume);
        t += duration;
        transferred += volume;
        if stop {
            let converged = if volume <= spec.downtime_threshold * rate_now {
                true
            } else {
                spec.compression * spec.dirty_rate < profile.rate(t)
            };
            return Ok(MigrationEstimate {
                rounds: round,
                mem_time: t,
                downtime: duration + spec.resume_time,
                transferred,
                total_time: spec.pre_time + t + spec.post_time,
                converged,
            });
        }
        volume = rho * duration * spec.dirty_rate;
        round += 1;
    }
}

/// True iff the iterative copy converges at all: `rho * R < L`.
pub fn is_convergent(spec: &MigrationSpec, bandwidth: f64) -> bool {
    spec.compression * spec.dirty_rate < bandwidth
}
