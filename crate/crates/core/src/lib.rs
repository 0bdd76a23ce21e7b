//! Cycle-accurate simulation and worst-case latency analysis for
//! flit-interleaving mesh networks-on-chip.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: flits, packets, addresses, flows and the wire format.
//! * [`arbiter`]: XY output selection and the weighted round-robin
//!   output arbiter with priority-channel credit.
//! * [`router`]: cycle-level interleaving and wormhole routers.
//! * [`network`]: mesh construction, XY paths and contention profiles.
//! * [`engine`]: the two-phase cycle-driven kernel and its metrics.
//! * [`analytics`]: closed-form latency and worst-case bounds.
//! * [`scenario`]: config-file scenarios and CSV result tables.

pub mod analytics;
pub mod arbiter;
pub mod engine;
pub mod error;
pub mod model;
pub mod network;
pub mod router;
pub mod scenario;

pub use engine::{Metrics, PacketRecord, SimConfig};
pub use error::{NocError, Result};
pub use model::{
    Address, Coord, Flit, FlitKind, FlitLayout, FlowSpec, Packet, PortId, RateLaw, SizeLaw,
};
pub use network::{ContentionProfile, Network, RouterKind};
