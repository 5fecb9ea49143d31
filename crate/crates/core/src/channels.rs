//! Packet-erasure channels and the feedback-arrival process.
//!
//! Three forward channels are provided: independent Bernoulli erasures, a
//! two-state Gilbert-Elliott chain, and a LoRa-style link where a packet is
//! lost to Nakagami-m fading below receiver sensitivity or to co-channel
//! interference from randomly placed transmitters without enough capture
//! margin.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn bernoulli_transmit<R: Rng + ?Sized>(p_success: f64, rng: &mut R) -> bool {
    rng.random_bool(p_success)
}

/// Whether the receiver's feedback for this interval reaches the sender.
pub fn feedback_arrives<R: Rng + ?Sized>(p_feedback: f64, rng: &mut R) -> bool {
    rng.random_bool(p_feedback)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeInitial {
    Good,
    Bad,
    /// Drawn from the stationary distribution.
    #[default]
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GilbertElliottParams {
    pub p_gb: f64,
    pub p_bg: f64,
    #[serde(default)]
    pub initial: GeInitial,
}

impl GilbertElliottParams {
    pub fn validate(&self) -> Result<()> {
        check_probability("p_gb", self.p_gb)?;
        check_probability("p_bg", self.p_bg)
    }

    /// Long-run fraction of time in the bad state.
    pub fn stationary_loss(&self) -> f64 {
        let total = self.p_gb + self.p_bg;
        if total == 0.0 {
            0.0
        } else {
            self.p_gb / total
        }
    }
}

#[derive(Debug, Clone)]
pub struct GilbertElliott {
    params: GilbertElliottParams,
    bad: bool,
}

impl GilbertElliott {
    pub fn new<R: Rng + ?Sized>(params: GilbertElliottParams, rng: &mut R) -> Self {
        let bad = match params.initial {
            GeInitial::Good => false,
            GeInitial::Bad => true,
            GeInitial::Stationary => rng.random_bool(params.stationary_loss()),
        };
        GilbertElliott { params, bad }
    }

    pub fn is_bad(&self) -> bool {
        self.bad
    }

    /// Advances the chain one packet and reports whether that packet got through.
    pub fn step_and_transmit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let flip = if self.bad { self.params.p_bg } else { self.params.p_gb };
        if rng.random_bool(flip) {
            self.bad = !self.bad;
        }
        !self.bad
    }
}

/// Geometry and radio constants of the LoRa erasure model. The receiver
/// (gateway) sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoRaParams {
    pub sender_pos: [f64; 2],
    pub n_interferers: usize,
    /// Interferer x and y coordinates are uniform in `[lo, hi]` metres.
    pub interferer_box: [f64; 2],
    pub pathloss_exponent: f64,
    /// Nakagami-m shape; `inf` disables fading.
    pub nakagami_m: f64,
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
    pub capture_threshold_db: f64,
    /// Probability that a given interferer's transmission overlaps the
    /// sender's packet, roughly twice the interferer duty cycle. The default
    /// corresponds to interferers at about 0.1 % duty cycle.
    pub interferer_tx_prob: f64,
    pub ref_distance_m: f64,
    pub ref_pathloss_db: f64,
}

impl Default for LoRaParams {
    fn default() -> Self {
        LoRaParams {
            sender_pos: [36.0, 36.0],
            n_interferers: 0,
            interferer_box: [30.0, 42.0],
            pathloss_exponent: 4.0,
            nakagami_m: 2.5,
            tx_power_dbm: 14.0,
            sensitivity_dbm: -132.0,
            capture_threshold_db: 6.0,
            interferer_tx_prob: 0.002,
            ref_distance_m: 40.0,
            ref_pathloss_db: 127.0,
        }
    }
}

impl LoRaParams {
    pub fn validate(&self) -> Result<()> {
        if self.nakagami_m.is_nan() || self.nakagami_m <= 0.5 {
            return Err(Error::InvalidConfig(format!("nakagami_m must exceed 0.5, got {}", self.nakagami_m)));
        }
        if !(self.interferer_box[0] <= self.interferer_box[1]) {
            return Err(Error::InvalidConfig("interferer_box must be [lo, hi] with lo <= hi".into()));
        }
        if !(self.ref_distance_m > 0.0) {
            return Err(Error::InvalidConfig("ref_distance_m must be positive".into()));
        }
        if self.pathloss_exponent.is_nan() || self.pathloss_exponent < 0.0 {
            return Err(Error::InvalidConfig("pathloss_exponent must be non-negative".into()));
        }
        check_probability("interferer_tx_prob", self.interferer_tx_prob)
    }

    /// Log-distance path loss in dB.
    pub fn pathloss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(1e-3);
        self.ref_pathloss_db + 10.0 * self.pathloss_exponent * (d / self.ref_distance_m).log10()
    }

    /// Mean received power (before fading) from a transmitter at `pos`.
    pub fn mean_rx_dbm(&self, pos: [f64; 2]) -> f64 {
        self.tx_power_dbm - self.pathloss_db(pos[0].hypot(pos[1]))
    }
}

/// A LoRa link with a fixed interferer topology.
#[derive(Debug, Clone)]
pub struct LoRaLink {
    params: LoRaParams,
    sender_rx_mw: f64,
    interferer_rx_mw: Vec<f64>,
    fading: Option<Gamma<f64>>,
    /// `ln(1 - interferer_tx_prob)`, for skipping over idle interferers.
    ln_idle: f64,
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

impl LoRaLink {
    /// Places the interferers once, using `rng`.
    pub fn new<R: Rng + ?Sized>(params: LoRaParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let [lo, hi] = params.interferer_box;
        let interferer_rx_mw = (0..params.n_interferers)
            .map(|_| {
                let pos = [rng.random_range(lo..=hi), rng.random_range(lo..=hi)];
                dbm_to_mw(params.mean_rx_dbm(pos))
            })
            .collect();
        // Unit-mean power gain: Gamma(m, 1/m).
        let fading = if params.nakagami_m.is_finite() {
            Some(Gamma::new(params.nakagami_m, 1.0 / params.nakagami_m).map_err(|e| Error::InvalidConfig(e.to_string()))?)
        } else {
            None
        };
        Ok(LoRaLink {
            sender_rx_mw: dbm_to_mw(params.mean_rx_dbm(params.sender_pos)),
            ln_idle: (-params.interferer_tx_prob).ln_1p(),
            params,
            interferer_rx_mw,
            fading,
        })
    }

    pub fn params(&self) -> &LoRaParams {
        &self.params
    }

    fn gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.fading {
            Some(g) => g.sample(rng),
            None => 1.0,
        }
    }

    pub fn transmit<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let signal = self.sender_rx_mw * self.gain(rng);
        let mut strongest: f64 = 0.0;
        let p = self.params.interferer_tx_prob;
        if p >= 1.0 {
            for &mean in &self.interferer_rx_mw {
                strongest = strongest.max(mean * self.gain(rng));
            }
        } else if p > 0.0 {
            // Geometric gaps between active interferers.
            let mut idx = 0usize;
            loop {
                let u: f64 = 1.0 - rng.random::<f64>();
                let gap = (u.ln() / self.ln_idle).floor();
                if gap >= (self.interferer_rx_mw.len() - idx) as f64 {
                    break;
                }
                idx += gap as usize;
                strongest = strongest.max(self.interferer_rx_mw[idx] * self.gain(rng));
                idx += 1;
            }
        }
        let signal_dbm = 10.0 * signal.log10();
        if signal_dbm < self.params.sensitivity_dbm {
            return false;
        }
        strongest == 0.0 || 10.0 * (signal / strongest).log10() >= self.params.capture_threshold_db
    }
}

/// Forward channel selection as it appears in configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Bernoulli { p_success: f64 },
    GilbertElliott(GilbertElliottParams),
    Lora(LoRaParams),
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec::Bernoulli { p_success: 0.8 }
    }
}

impl ChannelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelSpec::Bernoulli { .. } => "bernoulli",
            ChannelSpec::GilbertElliott(_) => "gilbert_elliott",
            ChannelSpec::Lora(_) => "lora",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ChannelSpec::Bernoulli { p_success } => check_probability("p_success", *p_success),
            ChannelSpec::GilbertElliott(p) => p.validate(),
            ChannelSpec::Lora(p) => p.validate(),
        }
    }

    pub fn build(&self, rng: &mut dyn RngCore) -> Result<Channel> {
        self.validate()?;
        Ok(match self {
            ChannelSpec::Bernoulli { p_success } => Channel::Bernoulli(*p_success),
            ChannelSpec::GilbertElliott(p) => Channel::GilbertElliott(GilbertElliott::new(*p, rng)),
            ChannelSpec::Lora(p) => Channel::Lora(LoRaLink::new(*p, rng)?),
        })
    }
}

/// Run-scoped channel state.
#[derive(Debug, Clone)]
pub enum Channel {
    Bernoulli(f64),
    GilbertElliott(GilbertElliott),
    Lora(LoRaLink),
}

impl Channel {
    pub fn transmit(&mut self, rng: &mut dyn RngCore) -> bool {
        match self {
            Channel::Bernoulli(p) => bernoulli_transmit(*p, rng),
            Channel::GilbertElliott(ge) => ge.step_and_transmit(rng),
            Channel::Lora(link) => link.transmit(rng),
        }
    }
}
