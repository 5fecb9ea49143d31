//! Symbols, packets, feedback records and the expiry convention.
//!
//! Time is slotted: interval `i` generates information symbol `s_i` and
//! transmits packet `p_i`. A symbol generated at interval `i` is of interest
//! during intervals `i ..= i + delta_max - 1` and is adjudicated (delivered or
//! failed) when interval `i + delta_max` begins.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sequence number of an information symbol. One symbol per packet interval,
/// so the id doubles as the interval index at which it was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SymbolId(pub u64);

impl SymbolId {
    pub fn next(self) -> SymbolId {
        SymbolId(self.0 + 1)
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s_{}", self.0)
    }
}

impl From<u64> for SymbolId {
    fn from(v: u64) -> Self {
        SymbolId(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoSymbol {
    pub id: SymbolId,
    pub payload: Vec<u8>,
}

/// One of the `b` symbol positions of a packet payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PayloadSlot {
    Uncoded { id: SymbolId, payload: Vec<u8> },
    /// XOR of the payloads of `ids` (sorted ascending, no duplicates).
    Coded { ids: Vec<SymbolId>, payload: Vec<u8> },
}

impl PayloadSlot {
    pub fn payload(&self) -> &[u8] {
        match self {
            PayloadSlot::Uncoded { payload, .. } | PayloadSlot::Coded { payload, .. } => payload,
        }
    }

    /// Number of information symbols combined into this slot (1 for uncoded).
    pub fn degree(&self) -> usize {
        match self {
            PayloadSlot::Uncoded { .. } => 1,
            PayloadSlot::Coded { ids, .. } => ids.len(),
        }
    }

    pub fn ids(&self) -> &[SymbolId] {
        match self {
            PayloadSlot::Uncoded { id, .. } => std::slice::from_ref(id),
            PayloadSlot::Coded { ids, .. } => ids,
        }
    }

    pub fn is_coded(&self) -> bool {
        matches!(self, PayloadSlot::Coded { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    /// Id of the newest symbol carried, always `slots[0]`.
    pub seq: SymbolId,
    pub slots: Vec<PayloadSlot>,
}

impl Packet {
    /// A packet carrying only the current symbol.
    pub fn new(current: InfoSymbol) -> Packet {
        Packet {
            seq: current.id,
            slots: vec![PayloadSlot::Uncoded { id: current.id, payload: current.payload }],
        }
    }

    /// Ids carried uncoded, in slot order.
    pub fn uncoded_ids(&self) -> impl Iterator<Item = SymbolId> + '_ {
        self.slots.iter().filter_map(|s| match s {
            PayloadSlot::Uncoded { id, .. } => Some(*id),
            PayloadSlot::Coded { .. } => None,
        })
    }

    pub fn coded_slots(&self) -> impl Iterator<Item = &PayloadSlot> + '_ {
        self.slots.iter().filter(|s| s.is_coded())
    }

    /// Sum of coded-slot degrees: information symbols read to build the coded part.
    pub fn symbols_combined(&self) -> u64 {
        self.coded_slots().map(|s| s.degree() as u64).sum()
    }

    /// XOR operations spent on coded slots (`d - 1` per degree-`d` slot).
    pub fn xor_ops(&self) -> u64 {
        self.coded_slots().map(|s| s.degree() as u64 - 1).sum()
    }

    /// Checks the structural invariants: slot 0 uncoded with `seq`, at most
    /// `b` slots, no repeated uncoded id, no expired id.
    pub fn check_structure(&self, cfg: &TimeConfig) -> std::result::Result<(), String> {
        match self.slots.first() {
            Some(PayloadSlot::Uncoded { id, .. }) if *id == self.seq => {}
            _ => return Err(format!("slot 0 of packet {} is not the current symbol", self.seq)),
        }
        if self.slots.len() > cfg.b {
            return Err(format!("packet {} has {} slots, b = {}", self.seq, self.slots.len(), cfg.b));
        }
        let mut seen = std::collections::HashSet::new();
        for id in self.uncoded_ids() {
            if !seen.insert(id) {
                return Err(format!("packet {} repeats {}", self.seq, id));
            }
        }
        let oldest = oldest_unexpired(self.seq, cfg);
        for slot in &self.slots {
            for id in slot.ids() {
                if *id < oldest || *id > self.seq {
                    return Err(format!("packet {} carries out-of-window {}", self.seq, id));
                }
            }
            if slot.payload().len() != cfg.l {
                return Err(format!("packet {} has a slot of {} bytes", self.seq, slot.payload().len()));
            }
        }
        Ok(())
    }
}

/// Cumulative feedback record sent by the receiver after each packet interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feedback {
    /// Whether the packet of the interval was received.
    pub ack: bool,
    /// Oldest undelivered unexpired symbol, or one past the last packet when none.
    pub u: SymbolId,
    /// Number of undelivered unexpired symbols.
    pub beta: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeConfig {
    /// Delay tolerance in packet intervals.
    pub delta_max: u64,
    /// Symbols per packet.
    pub b: usize,
    /// Bytes per symbol.
    pub l: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { delta_max: 16, b: 3, l: 1 }
    }
}

impl TimeConfig {
    pub fn new(delta_max: u64, b: usize, l: usize) -> Result<TimeConfig> {
        let cfg = TimeConfig { delta_max, b, l };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_max == 0 {
            return Err(Error::InvalidConfig("delta_max must be at least 1".into()));
        }
        if self.b == 0 {
            return Err(Error::InvalidConfig("b must be at least 1".into()));
        }
        if self.l == 0 {
            return Err(Error::InvalidConfig("l must be at least 1".into()));
        }
        Ok(())
    }

    /// Maximum number of simultaneously unexpired symbols.
    pub fn max_unexpired(&self) -> u64 {
        self.delta_max
    }
}

/// XOR of two equally sized payloads.
pub fn xor_payloads(a: &[u8], b: &[u8]) -> Result<Vec<u8>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// In-place `acc ^= other`. Lengths must match.
pub fn xor_into(acc: &mut [u8], other: &[u8]) -> Result<()> {
    if acc.len() != other.len() {
        return Err(Error::LengthMismatch(acc.len(), other.len()));
    }
    acc.iter_mut().zip(other).for_each(|(x, y)| *x ^= y);
    Ok(())
}

/// Smallest sequence number still unexpired at interval `now`.
pub fn oldest_unexpired(now: SymbolId, cfg: &TimeConfig) -> SymbolId {
    SymbolId((now.0 + 1).saturating_sub(cfg.delta_max))
}

/// Deterministic pseudo-random payloads, addressable by symbol id so the
/// sender and any verifier agree without sharing storage.
#[derive(Debug, Clone, Copy)]
pub struct SymbolSource {
    seed: u64,
    len: usize,
}

impl SymbolSource {
    pub fn new(seed: u64, len: usize) -> SymbolSource {
        SymbolSource { seed, len }
    }

    pub fn symbol_len(&self) -> usize {
        self.len
    }

    pub fn payload(&self, id: SymbolId) -> Vec<u8> {
        let mut state = self.seed ^ id.0.wrapping_mul(0xD1B5_4A32_D192_ED03);
        let mut out = Vec::with_capacity(self.len);
        while out.len() < self.len {
            let word = splitmix64(&mut state);
            let take = (self.len - out.len()).min(8);
            out.extend_from_slice(&word.to_le_bytes()[..take]);
        }
        out
    }

    pub fn symbol(&self, id: SymbolId) -> InfoSymbol {
        InfoSymbol { id, payload: self.payload(id) }
    }

    pub fn uncoded(&self, id: SymbolId) -> PayloadSlot {
        PayloadSlot::Uncoded { id, payload: self.payload(id) }
    }

    /// Coded slot over `ids`; the ids are sorted and deduplicated.
    pub fn coded(&self, mut ids: Vec<SymbolId>) -> PayloadSlot {
        ids.sort_unstable();
        ids.dedup();
        let mut payload = vec![0u8; self.len];
        for id in &ids {
            xor_into(&mut payload, &self.payload(*id)).expect("source payloads share one length");
        }
        PayloadSlot::Coded { ids, payload }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
