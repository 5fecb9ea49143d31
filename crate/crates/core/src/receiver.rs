//! Receiver: delivery tracking, peeling decoder, feedback records and
//! delivery-failure accounting.
//!
//! Coded slots are reduced against the delivered set as they arrive. A slot
//! left with a single unknown member delivers it; slots with two or more
//! unknowns are buffered and revisited whenever something new is delivered,
//! until no buffered slot can be reduced further. Buffered slots that still
//! reference an expired symbol are dropped at expiry.

use std::collections::BTreeMap;

use crate::symbol::{oldest_unexpired, xor_into, Feedback, Packet, PayloadSlot, SymbolId, TimeConfig};

#[derive(Debug, Clone)]
struct PendingSlot {
    /// Undelivered members only, ascending.
    ids: Vec<SymbolId>,
    payload: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct ReceiverState {
    time: TimeConfig,
    /// Delivered symbols that have not been adjudicated yet.
    delivered: BTreeMap<SymbolId, Vec<u8>>,
    pending: Vec<PendingSlot>,
    /// Every id below this has been counted as delivered or failed.
    adjudicated_upto: SymbolId,
    generated_count: u64,
    delivered_count: u64,
    failure_count: u64,
}

impl ReceiverState {
    pub fn new(time: TimeConfig) -> Self {
        ReceiverState {
            time,
            delivered: BTreeMap::new(),
            pending: Vec::new(),
            adjudicated_upto: SymbolId(0),
            generated_count: 0,
            delivered_count: 0,
            failure_count: 0,
        }
    }

    /// Records that symbol `id` was generated (one per interval, whether or
    /// not its packet arrives).
    pub fn note_generated(&mut self, id: SymbolId) {
        self.generated_count = self.generated_count.max(id.0 + 1);
    }

    pub fn generated_count(&self) -> u64 {
        self.generated_count
    }

    /// Symbols delivered before their deadline, counted at adjudication.
    pub fn delivered_count(&self) -> u64 {
        self.delivered_count
    }

    pub fn failure_count(&self) -> u64 {
        self.failure_count
    }

    /// Symbols whose deadline has passed.
    pub fn adjudicated_count(&self) -> u64 {
        self.delivered_count + self.failure_count
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_delivered(&self, id: SymbolId) -> bool {
        self.delivered.contains_key(&id)
    }

    /// Recovered payload of an unexpired delivered symbol.
    pub fn payload(&self, id: SymbolId) -> Option<&[u8]> {
        self.delivered.get(&id).map(Vec::as_slice)
    }

    /// Absorbs a received packet and returns the ids it made deliverable,
    /// in delivery order.
    pub fn process_packet(&mut self, pkt: &Packet, now: SymbolId) -> Vec<SymbolId> {
        let oldest = oldest_unexpired(now, &self.time);
        let mut newly = Vec::new();
        for slot in &pkt.slots {
            if let PayloadSlot::Uncoded { id, payload } = slot {
                if *id >= oldest && !self.delivered.contains_key(id) {
                    self.delivered.insert(*id, payload.clone());
                    newly.push(*id);
                }
            }
        }
        for slot in &pkt.slots {
            if let PayloadSlot::Coded { ids, payload } = slot {
                if ids.iter().any(|id| *id < oldest) {
                    continue;
                }
                self.pending.push(PendingSlot { ids: ids.clone(), payload: payload.clone() });
            }
        }
        self.peel(&mut newly);
        newly
    }

    fn peel(&mut self, newly: &mut Vec<SymbolId>) {
        loop {
            let mut progress = false;
            let mut i = 0;
            while i < self.pending.len() {
                let slot = &mut self.pending[i];
                let delivered = &self.delivered;
                slot.ids.retain(|id| match delivered.get(id) {
                    Some(p) => {
                        xor_into(&mut slot.payload, p).expect("uniform symbol size");
                        false
                    }
                    None => true,
                });
                match slot.ids.len() {
                    0 => {
                        self.pending.swap_remove(i);
                    }
                    1 => {
                        let slot = self.pending.swap_remove(i);
                        self.delivered.insert(slot.ids[0], slot.payload);
                        newly.push(slot.ids[0]);
                        progress = true;
                    }
                    _ => i += 1,
                }
            }
            if !progress {
                break;
            }
        }
    }

    /// Adjudicates every symbol whose deadline is reached at interval `now`
    /// and returns how many of them failed.
    pub fn expire_and_count(&mut self, now: SymbolId) -> u64 {
        let oldest = oldest_unexpired(now, &self.time);
        let mut failed = 0;
        while self.adjudicated_upto < oldest {
            let id = self.adjudicated_upto;
            if self.delivered.remove(&id).is_some() {
                self.delivered_count += 1;
            } else if id.0 < self.generated_count {
                failed += 1;
            }
            self.adjudicated_upto = id.next();
        }
        self.failure_count += failed;
        self.pending.retain(|slot| slot.ids.iter().all(|id| *id >= oldest));
        failed
    }

    /// Feedback record for packet `last_pkt_seq`, computed at interval `now`.
    pub fn make_feedback(&self, just_received: bool, last_pkt_seq: SymbolId, now: SymbolId) -> Feedback {
        let oldest = oldest_unexpired(now, &self.time);
        let mut u = None;
        let mut beta = 0;
        for j in oldest.0..=last_pkt_seq.0 {
            let id = SymbolId(j);
            if !self.delivered.contains_key(&id) {
                u.get_or_insert(id);
                beta += 1;
            }
        }
        Feedback { ack: just_received, u: u.unwrap_or(last_pkt_seq.next()), beta }
    }
}
