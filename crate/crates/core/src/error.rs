use thiserror::Error;

use crate::model::{Address, Coord, PortId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NocError {
    #[error("invalid packet size {0}; packets need at least one flit")]
    InvalidSize(u32),
    #[error("flit encoding error: {0}")]
    Encoding(String),
    #[error("flit decoding error: {0}")]
    Decoding(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("arbiter protocol error: request from unregistered channel {0}")]
    Protocol(PortId),
    #[error("topology error: router {router} has no port {port}")]
    Topology { router: Coord, port: PortId },
    #[error("placement error: {0}")]
    Placement(String),
    #[error("coordinate {0} is outside the mesh")]
    Bounds(Coord),
    #[error("no core attached at {0}")]
    Lookup(Address),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("channel saturated: occupied bandwidth {occupied} >= available {available}")]
    Saturated { occupied: f64, available: f64 },
}

pub type Result<T, E = NocError> = std::result::Result<T, E>;
