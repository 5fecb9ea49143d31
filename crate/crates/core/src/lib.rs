//! Application-layer XOR erasure coding for delay-constrained links with
//! intermittent cumulative feedback.
//!
//! The crate contains the packet-construction policies ([`schemes`]), the
//! receiver-side peeling decoder and feedback generator ([`receiver`]),
//! packet-erasure channel models ([`channels`]) and a slotted simulator
//! ([`engine`]) that measures the delivery failure rate (DFR) and the coding
//! complexity of each policy.
//!
//! ```
//! use deltacode::engine::{run, RunConfig};
//! use deltacode::schemes::SchemeKind;
//! use deltacode::channels::ChannelSpec;
//!
//! let mut cfg = RunConfig::default();
//! cfg.scheme = SchemeKind::Selective;
//! cfg.channel = ChannelSpec::Bernoulli { p_success: 1.0 };
//! cfg.max_intervals = 500;
//! let metrics = run(&cfg).unwrap();
//! assert_eq!(metrics.failures, 0);
//! ```

pub mod channels;
pub mod degree;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod receiver;
pub mod schemes;
pub mod symbol;

pub use error::{Error, Result};
pub use symbol::{Feedback, InfoSymbol, Packet, PayloadSlot, SymbolId, SymbolSource, TimeConfig};
