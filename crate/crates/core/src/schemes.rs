//! Sender-side packet construction.
//!
//! Every scheme puts the current symbol `s_now` in slot 0 and fills the
//! remaining `b - 1` slots from its own view of which past symbols may still
//! be undelivered:
//!
//! * [`Windowed`] treats the contiguous range from the oldest undelivered
//!   symbol reported by feedback up to `s_{now-1}` as the coding set.
//! * [`Selective`] keeps a list of unacknowledged symbols and prunes it with
//!   every ACK, so its coding set is a subset of the windowed one.
//! * [`Repetition`] repeats the newest unacknowledged symbols, never codes.
//! * [`Blind`] ignores feedback and sends fixed-degree XORs of unexpired
//!   symbols.
//!
//! The engine drives a scheme through [`Sender`]: `observe_feedback` once at
//! the start of each interval (with the feedback for the previous packet, if
//! it arrived), then `build_packet`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::degree::{uniform_degree, DegreeTable};
use crate::error::{Error, Result};
use crate::symbol::{oldest_unexpired, Feedback, Packet, PayloadSlot, SymbolId, SymbolSource, TimeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Windowed,
    Selective,
    Repetition,
    Blind,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] =
        [SchemeKind::Windowed, SchemeKind::Selective, SchemeKind::Repetition, SchemeKind::Blind];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Windowed => "windowed",
            SchemeKind::Selective => "selective",
            SchemeKind::Repetition => "repetition",
            SchemeKind::Blind => "blind",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// Per-interval sender contract.
pub trait Sender: Send {
    /// Called once at the start of interval `now` with the feedback for
    /// packet `now - 1`, or `None` when it did not reach the sender.
    fn observe_feedback(&mut self, now: SymbolId, fb: Option<&Feedback>);

    /// Builds packet `p_now`. Called exactly once per interval, after
    /// `observe_feedback`.
    fn build_packet(&mut self, now: SymbolId, rng: &mut dyn RngCore) -> Packet;

    /// Symbols the scheme currently considers possibly undelivered; coded and
    /// repeated slots are drawn from this set.
    fn coding_set(&self, now: SymbolId) -> Vec<SymbolId>;
}

/// Shared, read-only inputs of every scheme.
#[derive(Debug, Clone)]
pub struct SchemeContext {
    pub time: TimeConfig,
    pub source: SymbolSource,
    pub table: Arc<DegreeTable>,
}

impl SchemeContext {
    pub fn new(time: TimeConfig, source: SymbolSource) -> Result<SchemeContext> {
        time.validate()?;
        let table = Arc::new(DegreeTable::build(time.delta_max.max(2))?);
        Ok(SchemeContext { time, source, table })
    }
}

pub fn make_sender(kind: SchemeKind, ctx: SchemeContext, blind: BlindConfig) -> Box<dyn Sender> {
    match kind {
        SchemeKind::Windowed => Box::new(Windowed::new(ctx)),
        SchemeKind::Selective => Box::new(Selective::new(ctx)),
        SchemeKind::Repetition => Box::new(Repetition::new(ctx)),
        SchemeKind::Blind => Box::new(Blind::new(ctx, blind)),
    }
}

/// Slot list that silently refuses to grow past `b`.
struct SlotsBuilder<'a> {
    ctx: &'a SchemeContext,
    seq: SymbolId,
    slots: Vec<PayloadSlot>,
}

impl<'a> SlotsBuilder<'a> {
    fn new(ctx: &'a SchemeContext, now: SymbolId) -> Self {
        let mut slots = Vec::with_capacity(ctx.time.b);
        slots.push(ctx.source.uncoded(now));
        SlotsBuilder { ctx, seq: now, slots }
    }

    fn free(&self) -> usize {
        self.ctx.time.b - self.slots.len()
    }

    fn uncoded(&mut self, id: SymbolId) {
        if self.free() > 0 {
            self.slots.push(self.ctx.source.uncoded(id));
        }
    }

    /// XOR of `degree` members of `pool` drawn uniformly without replacement;
    /// the degree is clamped to the pool size.
    fn coded(&mut self, pool: &[SymbolId], degree: u64, rng: &mut dyn RngCore) {
        if self.free() == 0 || pool.is_empty() {
            return;
        }
        let d = (degree as usize).clamp(1, pool.len());
        let ids = sample(rng, pool.len(), d).into_iter().map(|i| pool[i]).collect();
        self.slots.push(self.ctx.source.coded(ids));
    }

    fn finish(self) -> Packet {
        Packet { seq: self.seq, slots: self.slots }
    }
}

/// Feedback for `p_{now-1}` as seen at interval `now`: the reported oldest
/// undelivered symbol may have expired in between, in which case it no
/// longer counts towards `beta`.
fn aged_feedback(fb: &Feedback, now: SymbolId, time: &TimeConfig) -> (SymbolId, u64, bool) {
    let oldest = oldest_unexpired(now, time);
    if fb.beta > 0 && fb.u < oldest {
        (oldest, fb.beta - 1, true)
    } else {
        (fb.u, fb.beta, false)
    }
}

fn id_range(from: u64, to_exclusive: u64) -> Vec<SymbolId> {
    (from..to_exclusive).map(SymbolId).collect()
}

/// Windowed coding.
#[derive(Debug, Clone)]
pub struct Windowed {
    ctx: SchemeContext,
    /// `u` of the most recent feedback received.
    last_u: SymbolId,
    fresh: Option<Feedback>,
}

impl Windowed {
    pub fn new(ctx: SchemeContext) -> Self {
        Windowed { ctx, last_u: SymbolId(0), fresh: None }
    }

    pub fn last_u(&self) -> SymbolId {
        self.last_u
    }

    /// Window size `z` used when feedback is missing.
    fn blind_span(&self, now: SymbolId) -> u64 {
        let u_max = oldest_unexpired(now, &self.ctx.time);
        now.0.saturating_sub(self.last_u.0).min(now.0 - u_max.0)
    }
}

impl Sender for Windowed {
    fn observe_feedback(&mut self, _now: SymbolId, fb: Option<&Feedback>) {
        if let Some(fb) = fb {
            self.last_u = self.last_u.max(fb.u);
        }
        self.fresh = fb.copied();
    }

    fn build_packet(&mut self, now: SymbolId, rng: &mut dyn RngCore) -> Packet {
        let ctx = &self.ctx;
        let b = ctx.time.b as u64;
        let mut out = SlotsBuilder::new(ctx, now);

        match self.fresh {
            Some(fb) => {
                let (u, beta, _) = aged_feedback(&fb, now, &ctx.time);
                if u >= now || beta == 0 {
                    return out.finish();
                }
                out.uncoded(u);
                let span = now.0 - u.0;
                if span <= b - 1 {
                    for j in u.0 + 1..now.0 {
                        out.uncoded(SymbolId(j));
                    }
                } else if beta >= span {
                    // Nothing in the window was delivered: send it oldest first.
                    for j in u.0 + 1..now.0 {
                        out.uncoded(SymbolId(j));
                    }
                } else if beta > 1 {
                    let pool = id_range(u.0 + 1, now.0);
                    let d = ctx.table.degree(span - 1, beta - 1).expect("span > beta > 1");
                    for _ in 0..b.saturating_sub(2) {
                        out.coded(&pool, d, rng);
                    }
                }
            }
            None => {
                let z = self.blind_span(now);
                if z == 0 {
                    return out.finish();
                }
                if z <= b - 1 {
                    for j in 1..=z {
                        out.uncoded(SymbolId(now.0 - j));
                    }
                } else {
                    let pool = id_range(now.0 - z, now.0);
                    for _ in 0..b - 1 {
                        let d = uniform_degree(z, rng).expect("z >= 1");
                        out.coded(&pool, d, rng);
                    }
                }
            }
        }
        out.finish()
    }

    fn coding_set(&self, now: SymbolId) -> Vec<SymbolId> {
        match self.fresh {
            Some(fb) => {
                let (u, beta, _) = aged_feedback(&fb, now, &self.ctx.time);
                if beta == 0 {
                    Vec::new()
                } else {
                    id_range(u.0, now.0)
                }
            }
            None => id_range(now.0 - self.blind_span(now), now.0),
        }
    }
}

/// Unacknowledged-symbol bookkeeping shared by selective coding and
/// repetition redundancy.
#[derive(Debug, Clone, Default)]
pub struct AckBook {
    /// Unexpired symbols, not below the latest feedback `u`, not covered by an ACK.
    pub unacked: BTreeSet<SymbolId>,
    /// Uncoded ids carried by each recent packet.
    pub sent_contents: BTreeMap<SymbolId, Vec<SymbolId>>,
    pub last_u: SymbolId,
    pub fresh: Option<Feedback>,
}

impl AckBook {
    pub fn observe_feedback(&mut self, now: SymbolId, fb: Option<&Feedback>, time: &TimeConfig) {
        if let Some(fb) = fb {
            self.unacked.retain(|id| *id >= fb.u);
            if fb.ack {
                if let Some(prev) = now.0.checked_sub(1) {
                    if let Some(carried) = self.sent_contents.get(&SymbolId(prev)) {
                        for id in carried {
                            self.unacked.remove(id);
                        }
                    }
                }
            }
            self.last_u = self.last_u.max(fb.u);
        }
        self.fresh = fb.copied();
        let oldest = oldest_unexpired(now, time);
        self.unacked.retain(|id| *id >= oldest);
        // Only the previous packet's contents are ever consulted.
        self.sent_contents.retain(|seq, _| seq.0 + 1 >= now.0);
    }

    pub fn record_sent(&mut self, pkt: &Packet) {
        self.unacked.insert(pkt.seq);
        self.sent_contents.insert(pkt.seq, pkt.uncoded_ids().collect());
    }

    /// `(u, beta)` of the fresh feedback after accounting for expiry. When the
    /// reported `u` has expired, the oldest remaining unacknowledged symbol
    /// takes its place.
    fn fresh_view(&self, now: SymbolId, time: &TimeConfig) -> Option<(Option<SymbolId>, u64)> {
        let fb = self.fresh?;
        let (u, beta, aged) = aged_feedback(&fb, now, time);
        if beta == 0 {
            return Some((None, 0));
        }
        let u = if aged { self.unacked.iter().next().copied() } else { Some(u) };
        match u {
            Some(u) if u < now => Some((Some(u), beta)),
            _ => Some((None, 0)),
        }
    }
}

/// Selective coding.
#[derive(Debug, Clone)]
pub struct Selective {
    ctx: SchemeContext,
    book: AckBook,
}

impl Selective {
    pub fn new(ctx: SchemeContext) -> Self {
        Selective { ctx, book: AckBook::default() }
    }

    pub fn book(&self) -> &AckBook {
        &self.book
    }
}

impl Sender for Selective {
    fn observe_feedback(&mut self, now: SymbolId, fb: Option<&Feedback>) {
        self.book.observe_feedback(now, fb, &self.ctx.time);
    }

    fn build_packet(&mut self, now: SymbolId, rng: &mut dyn RngCore) -> Packet {
        let ctx = &self.ctx;
        let b = ctx.time.b;
        let mut out = SlotsBuilder::new(ctx, now);
        let unacked: Vec<SymbolId> = self.book.unacked.iter().copied().collect();

        match self.book.fresh_view(now, &ctx.time) {
            Some((None, _)) => {}
            Some((Some(u), beta)) => {
                out.uncoded(u);
                if beta > 1 {
                    let others: Vec<SymbolId> = unacked.iter().copied().filter(|id| *id != u).collect();
                    let n = others.len() + 1;
                    if n as u64 <= beta {
                        // Every listed symbol is undelivered.
                        for id in others.iter().take((n - 1).min(b.saturating_sub(2))) {
                            out.uncoded(*id);
                        }
                    } else if n <= b - 1 {
                        for id in &others {
                            out.uncoded(*id);
                        }
                    } else {
                        let d = ctx.table.degree(n as u64 - 1, beta - 1).expect("n > beta > 1");
                        for _ in 0..b.saturating_sub(2) {
                            out.coded(&others, d, rng);
                        }
                    }
                }
            }
            None => {
                let n = unacked.len();
                if n <= b - 1 {
                    for id in &unacked {
                        out.uncoded(*id);
                    }
                } else {
                    for _ in 0..b - 1 {
                        let d = uniform_degree(n as u64, rng).expect("n >= 1");
                        out.coded(&unacked, d, rng);
                    }
                }
            }
        }
        let pkt = out.finish();
        self.book.record_sent(&pkt);
        pkt
    }

    fn coding_set(&self, now: SymbolId) -> Vec<SymbolId> {
        match self.book.fresh_view(now, &self.ctx.time) {
            // Fresh feedback says nothing is missing.
            Some((None, _)) => Vec::new(),
            _ => self.book.unacked.iter().copied().collect(),
        }
    }
}

/// Repetition redundancy: feedback-driven, never codes.
#[derive(Debug, Clone)]
pub struct Repetition {
    ctx: SchemeContext,
    book: AckBook,
}

impl Repetition {
    pub fn new(ctx: SchemeContext) -> Self {
        Repetition { ctx, book: AckBook::default() }
    }

    pub fn book(&self) -> &AckBook {
        &self.book
    }
}

impl Sender for Repetition {
    fn observe_feedback(&mut self, now: SymbolId, fb: Option<&Feedback>) {
        self.book.observe_feedback(now, fb, &self.ctx.time);
    }

    fn build_packet(&mut self, now: SymbolId, _rng: &mut dyn RngCore) -> Packet {
        let mut out = SlotsBuilder::new(&self.ctx, now);
        let mut oldest_missing = None;
        if let Some((Some(u), _)) = self.book.fresh_view(now, &self.ctx.time) {
            out.uncoded(u);
            oldest_missing = Some(u);
        }
        for id in self.book.unacked.iter().rev() {
            if out.free() == 0 {
                break;
            }
            if Some(*id) != oldest_missing && *id != now {
                out.uncoded(*id);
            }
        }
        let pkt = out.finish();
        self.book.record_sent(&pkt);
        pkt
    }

    fn coding_set(&self, _now: SymbolId) -> Vec<SymbolId> {
        self.book.unacked.iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlindConfig {
    /// Fixed coded-symbol degree; `None` means `delta_max / 2`.
    pub degree: Option<u64>,
}

impl BlindConfig {
    pub fn resolved_degree(&self, time: &TimeConfig) -> u64 {
        self.degree.unwrap_or(time.delta_max / 2).max(1)
    }

    pub fn validate(&self, time: &TimeConfig) -> Result<()> {
        match self.degree {
            Some(d) if d < 1 || d > time.delta_max => Err(Error::InvalidConfig(format!(
                "blind degree must lie in [1, {}], got {d}",
                time.delta_max
            ))),
            _ => Ok(()),
        }
    }
}

/// Blind coding: feedback-oblivious fixed-degree XORs.
#[derive(Debug, Clone)]
pub struct Blind {
    ctx: SchemeContext,
    degree: u64,
}

impl Blind {
    pub fn new(ctx: SchemeContext, cfg: BlindConfig) -> Self {
        let degree = cfg.resolved_degree(&ctx.time);
        Blind { ctx, degree }
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }
}

impl Sender for Blind {
    fn observe_feedback(&mut self, _now: SymbolId, _fb: Option<&Feedback>) {}

    fn build_packet(&mut self, now: SymbolId, rng: &mut dyn RngCore) -> Packet {
        let pool = self.coding_set(now);
        let mut out = SlotsBuilder::new(&self.ctx, now);
        for _ in 1..self.ctx.time.b {
            out.coded(&pool, self.degree, rng);
        }
        out.finish()
    }

    fn coding_set(&self, now: SymbolId) -> Vec<SymbolId> {
        id_range(oldest_unexpired(now, &self.ctx.time).0, now.0)
    }
}
