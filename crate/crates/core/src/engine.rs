//! Slotted simulation loop.
//!
//! Each interval `i` runs, in order:
//!
//! 1. the receiver adjudicates symbols whose deadline is `i`;
//! 2. the sender consumes the feedback outcome of interval `i - 1` and builds `p_i`;
//! 3. the channel decides whether `p_i` is erased;
//! 4. the receiver processes `p_i` if it arrived;
//! 5. the receiver produces the feedback record for `p_i`;
//! 6. a Bernoulli draw decides whether that record reaches the sender.
//!
//! The run stops once `min_failures` delivery failures have been counted (or
//! the interval cap is hit), then keeps expiring for `delta_max` intervals
//! without sending, so every generated symbol is adjudicated.
//!
//! Channel, feedback and scheme randomness come from separate ChaCha streams
//! of the run seed: two schemes run with the same seed see the same erasure
//! and feedback sample paths.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{feedback_arrives, ChannelSpec, GilbertElliottParams};
use crate::error::{Error, Result};
use crate::receiver::ReceiverState;
use crate::schemes::{make_sender, BlindConfig, SchemeContext, SchemeKind};
use crate::symbol::{Feedback, Packet, SymbolId, SymbolSource, TimeConfig};

const STREAM_CHANNEL: u64 = 0;
const STREAM_FEEDBACK: u64 = 1;
const STREAM_SCHEME: u64 = 2;
const PAYLOAD_SALT: u64 = 0x5EED_0F_B10C_u64;

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scheme: SchemeKind,
    pub channel: ChannelSpec,
    pub p_feedback: f64,
    pub b: usize,
    pub delta_max: u64,
    #[serde(default = "default_symbol_len")]
    pub l: usize,
    /// Blind-coding degree; defaults to `delta_max / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blind_degree: Option<u64>,
    #[serde(default = "default_min_failures")]
    pub min_failures: u64,
    #[serde(default = "default_max_intervals")]
    pub max_intervals: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_symbol_len() -> usize {
    1
}

fn default_min_failures() -> u64 {
    100
}

fn default_max_intervals() -> u64 {
    10_000_000
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: SchemeKind::Windowed,
            channel: ChannelSpec::default(),
            p_feedback: 0.5,
            b: 3,
            delta_max: 16,
            l: default_symbol_len(),
            blind_degree: None,
            min_failures: default_min_failures(),
            max_intervals: default_max_intervals(),
            seed: 0,
        }
    }
}

/// Names accepted by [`RunConfig::set_axis`].
pub const AXES: &[&str] = &[
    "p_success",
    "p_gb",
    "p_bg",
    "p_feedback",
    "delta_max",
    "b",
    "l",
    "blind_degree",
    "n_interferers",
    "interferer_tx_prob",
    "nakagami_m",
    "capture_threshold_db",
    "min_failures",
    "max_intervals",
];

fn as_count(axis: &str, v: f64) -> Result<u64> {
    if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
        return Err(Error::InvalidConfig(format!("axis `{axis}` needs a non-negative integer, got {v}")));
    }
    Ok(v as u64)
}

impl RunConfig {
    pub fn time(&self) -> TimeConfig {
        TimeConfig { delta_max: self.delta_max, b: self.b, l: self.l }
    }

    pub fn blind(&self) -> BlindConfig {
        BlindConfig { degree: self.blind_degree }
    }

    pub fn validate(&self) -> Result<()> {
        self.time().validate()?;
        if !(0.0..=1.0).contains(&self.p_feedback) {
            return Err(Error::InvalidConfig(format!("p_feedback must lie in [0, 1], got {}", self.p_feedback)));
        }
        if self.min_failures == 0 {
            return Err(Error::InvalidConfig("min_failures must be at least 1".into()));
        }
        if self.max_intervals == 0 {
            return Err(Error::InvalidConfig("max_intervals must be at least 1".into()));
        }
        self.blind().validate(&self.time())?;
        self.channel.validate()
    }

    /// Overwrites one numeric field by name.
    pub fn set_axis(&mut self, axis: &str, value: f64) -> Result<()> {
        let channel_name = self.channel.name();
        let wrong_channel = || Error::InvalidConfig(format!("axis `{axis}` does not apply to a {channel_name} channel"));
        match (axis, &mut self.channel) {
            ("p_success", ChannelSpec::Bernoulli { p_success }) => *p_success = value,
            ("p_gb", ChannelSpec::GilbertElliott(GilbertElliottParams { p_gb, .. })) => *p_gb = value,
            ("p_bg", ChannelSpec::GilbertElliott(GilbertElliottParams { p_bg, .. })) => *p_bg = value,
            ("n_interferers", ChannelSpec::Lora(p)) => p.n_interferers = as_count(axis, value)? as usize,
            ("interferer_tx_prob", ChannelSpec::Lora(p)) => p.interferer_tx_prob = value,
            ("nakagami_m", ChannelSpec::Lora(p)) => p.nakagami_m = value,
            ("capture_threshold_db", ChannelSpec::Lora(p)) => p.capture_threshold_db = value,
            ("p_success" | "p_gb" | "p_bg" | "n_interferers" | "interferer_tx_prob" | "nakagami_m"
            | "capture_threshold_db", _) => return Err(wrong_channel()),
            ("p_feedback", _) => self.p_feedback = value,
            ("delta_max", _) => self.delta_max = as_count(axis, value)?,
            ("b", _) => self.b = as_count(axis, value)? as usize,
            ("l", _) => self.l = as_count(axis, value)? as usize,
            ("blind_degree", _) => self.blind_degree = Some(as_count(axis, value)?),
            ("min_failures", _) => self.min_failures = as_count(axis, value)?,
            ("max_intervals", _) => self.max_intervals = as_count(axis, value)?,
            _ => return Err(Error::UnknownAxis(axis.to_string())),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scheme: SchemeKind,
    pub channel: String,
    pub seed: u64,
    pub b: usize,
    pub delta_max: u64,
    pub p_feedback: f64,
    /// Symbols generated (all adjudicated after the drain).
    pub generated: u64,
    pub delivered: u64,
    pub failures: u64,
    /// `failures / (delivered + failures)`.
    pub dfr: f64,
    pub packets_sent: u64,
    /// Sum of coded-slot degrees over all packets.
    pub symbols_combined_total: u64,
    /// Sum of `degree - 1` over all coded slots.
    pub xor_ops_total: u64,
    pub avg_xors_per_packet: f64,
    pub intervals_run: u64,
    /// The interval cap ended the run before `min_failures` was reached.
    pub hit_cap: bool,
}

impl RunMetrics {
    pub fn avg_symbols_combined_per_packet(&self) -> f64 {
        ratio(self.symbols_combined_total, self.packets_sent)
    }

    /// Every generated symbol was either delivered in time or failed.
    pub fn is_conserved(&self) -> bool {
        self.generated == self.delivered + self.failures
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// What happened during one interval, for observers.
#[derive(Debug)]
pub struct IntervalEvent<'a> {
    pub now: SymbolId,
    pub packet: &'a Packet,
    pub received: bool,
    pub newly_delivered: &'a [SymbolId],
    pub feedback: Feedback,
    pub feedback_arrived: bool,
    pub receiver: &'a ReceiverState,
}

pub fn run(cfg: &RunConfig) -> Result<RunMetrics> {
    run_with_observer(cfg, |_| {})
}

pub fn run_with_observer<F>(cfg: &RunConfig, mut observe: F) -> Result<RunMetrics>
where
    F: FnMut(&IntervalEvent<'_>),
{
    cfg.validate()?;
    let time = cfg.time();
    let source = SymbolSource::new(cfg.seed ^ PAYLOAD_SALT, time.l);
    let mut sender = make_sender(cfg.scheme, SchemeContext::new(time, source)?, cfg.blind());
    let mut receiver = ReceiverState::new(time);

    let mut channel_rng = substream(cfg.seed, STREAM_CHANNEL);
    let mut feedback_rng = substream(cfg.seed, STREAM_FEEDBACK);
    let mut scheme_rng = substream(cfg.seed, STREAM_SCHEME);
    let mut channel = cfg.channel.build(&mut channel_rng)?;

    let mut pending_fb: Option<Feedback> = None;
    let mut packets_sent = 0u64;
    let mut symbols_combined_total = 0u64;
    let mut xor_ops_total = 0u64;
    let mut now = 0u64;

    while receiver.failure_count() < cfg.min_failures && now < cfg.max_intervals {
        let id = SymbolId(now);
        receiver.expire_and_count(id);
        receiver.note_generated(id);

        sender.observe_feedback(id, pending_fb.as_ref());
        let pkt = sender.build_packet(id, &mut scheme_rng as &mut dyn RngCore);
        debug_assert_eq!(pkt.check_structure(&time), Ok(()));
        packets_sent += 1;
        symbols_combined_total += pkt.symbols_combined();
        xor_ops_total += pkt.xor_ops();

        let received = channel.transmit(&mut channel_rng);
        let newly = if received { receiver.process_packet(&pkt, id) } else { Vec::new() };
        for d in &newly {
            if receiver.payload(*d) != Some(&source.payload(*d)[..]) {
                return Err(Error::DecodeMismatch(d.0));
            }
        }

        let feedback = receiver.make_feedback(received, id, id);
        let feedback_arrived = feedback_arrives(cfg.p_feedback, &mut feedback_rng);
        pending_fb = feedback_arrived.then_some(feedback);

        observe(&IntervalEvent {
            now: id,
            packet: &pkt,
            received,
            newly_delivered: &newly,
            feedback,
            feedback_arrived,
            receiver: &receiver,
        });
        now += 1;
    }
    let hit_cap = receiver.failure_count() < cfg.min_failures;

    for t in now..now + cfg.delta_max {
        receiver.expire_and_count(SymbolId(t));
    }

    let failures = receiver.failure_count();
    let delivered = receiver.delivered_count();
    Ok(RunMetrics {
        scheme: cfg.scheme,
        channel: cfg.channel.name().to_string(),
        seed: cfg.seed,
        b: cfg.b,
        delta_max: cfg.delta_max,
        p_feedback: cfg.p_feedback,
        generated: receiver.generated_count(),
        delivered,
        failures,
        dfr: ratio(failures, failures + delivered),
        packets_sent,
        symbols_combined_total,
        xor_ops_total,
        avg_xors_per_packet: ratio(xor_ops_total, packets_sent),
        intervals_run: now,
        hit_cap,
    })
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub replicate: u64,
    pub metrics: RunMetrics,
}

/// Configurations of a sweep, ordered by value then replicate. Replicate
/// `r` uses seed `base.seed + r`.
pub fn sweep_configs(base: &RunConfig, axis: &str, values: &[f64], replicates: u64) -> Result<Vec<(f64, u64, RunConfig)>> {
    if !AXES.contains(&axis) {
        return Err(Error::UnknownAxis(axis.to_string()));
    }
    let mut out = Vec::with_capacity(values.len() * replicates as usize);
    for &v in values {
        for r in 0..replicates {
            let mut cfg = base.clone();
            cfg.set_axis(axis, v)?;
            cfg.seed = base.seed.wrapping_add(r);
            cfg.validate()?;
            out.push((v, r, cfg));
        }
    }
    Ok(out)
}

/// Runs every (value, replicate) pair, in parallel; results keep the order
/// of [`sweep_configs`].
pub fn sweep(base: &RunConfig, axis: &str, values: &[f64], replicates: u64) -> Result<Vec<SweepPoint>> {
    let cfgs = sweep_configs(base, axis, values, replicates)?;
    cfgs.into_par_iter()
        .map(|(axis_value, replicate, cfg)| Ok(SweepPoint { axis_value, replicate, metrics: run(&cfg)? }))
        .collect()
}
