//! Flits, packets, addresses and flow descriptions.
//!
//! A flit is the unit that routers arbitrate on. Every flit carries its
//! destination, so routing decisions are made independently for each flit
//! and flits of different packets can share a channel in alternation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NocError, Result};

/// One of the eight router ports, named after compass points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PortId {
    NN,
    NE,
    EE,
    SE,
    SS,
    SW,
    WW,
    NW,
}

impl PortId {
    pub const ALL: [PortId; 8] = [
        PortId::NN,
        PortId::NE,
        PortId::EE,
        PortId::SE,
        PortId::SS,
        PortId::SW,
        PortId::WW,
        PortId::NW,
    ];

    /// Cardinal ports in their fixed initial arbitration order.
    pub const CARDINAL: [PortId; 4] = [PortId::NN, PortId::SS, PortId::EE, PortId::WW];

    /// Diagonal ports in their fixed initial arbitration order.
    pub const DIAGONAL: [PortId; 4] = [PortId::NE, PortId::SE, PortId::SW, PortId::NW];

    /// Cardinal ports are the ones that may link routers together and
    /// receive multi-flit grant credit.
    pub fn is_cardinal(self) -> bool {
        matches!(self, PortId::NN | PortId::SS | PortId::EE | PortId::WW)
    }

    /// The port on the neighbouring router that a link from `self` lands on.
    pub fn opposite(self) -> PortId {
        match self {
            PortId::NN => PortId::SS,
            PortId::SS => PortId::NN,
            PortId::EE => PortId::WW,
            PortId::WW => PortId::EE,
            PortId::NE => PortId::SW,
            PortId::SW => PortId::NE,
            PortId::SE => PortId::NW,
            PortId::NW => PortId::SE,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<PortId> {
        PortId::ALL.get(i).copied()
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for PortId {
    type Err = NocError;

    fn from_str(s: &str) -> Result<Self> {
        PortId::ALL
            .iter()
            .copied()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| NocError::Config(format!("unknown port `{s}`")))
    }
}

/// Router position in the mesh. `x` grows eastward, `y` grows northward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x: u32,
    pub y: u32,
}

impl Coord {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// A core attachment point: a router and one of its ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Address {
    pub router: Coord,
    pub port: PortId,
}

impl Address {
    pub const fn new(router: Coord, port: PortId) -> Self {
        Self { router, port }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.router, self.port)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlitKind {
    Header,
    Payload,
    Tail,
    /// Sole flit of a one-flit packet.
    HeaderTail,
}

impl FlitKind {
    pub fn is_head(self) -> bool {
        matches!(self, FlitKind::Header | FlitKind::HeaderTail)
    }

    pub fn is_tail(self) -> bool {
        matches!(self, FlitKind::Tail | FlitKind::HeaderTail)
    }

    /// Kind of the flit at position `seq` in a packet of `len` flits.
    pub fn at(seq: u32, len: u32) -> FlitKind {
        match (seq == 0, seq + 1 == len) {
            (true, true) => FlitKind::HeaderTail,
            (true, false) => FlitKind::Header,
            (false, true) => FlitKind::Tail,
            (false, false) => FlitKind::Payload,
        }
    }

    fn code(self) -> u128 {
        match self {
            FlitKind::Payload => 0b00,
            FlitKind::Tail => 0b01,
            FlitKind::HeaderTail => 0b10,
            FlitKind::Header => 0b11,
        }
    }

    fn from_code(code: u128) -> FlitKind {
        match code & 0b11 {
            0b00 => FlitKind::Payload,
            0b01 => FlitKind::Tail,
            0b10 => FlitKind::HeaderTail,
            _ => FlitKind::Header,
        }
    }
}

/// Index of a flow inside one simulation's flow list.
pub type FlowIdx = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Flit {
    pub kind: FlitKind,
    pub dst: Address,
    pub src: Address,
    pub data: u64,
    pub seq: u32,
    /// Simulator bookkeeping, not carried on the wire.
    pub flow: FlowIdx,
    pub packet: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub flits: Vec<Flit>,
    pub inject_time: u64,
}

impl Packet {
    pub fn len(&self) -> u32 {
        self.flits.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.flits.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeLaw {
    Fixed(u32),
    Uniform { min: u32, max: u32 },
}

impl SizeLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SizeLaw::Fixed(0) => Err(NocError::InvalidSize(0)),
            SizeLaw::Uniform { min, max } if min == 0 || min > max => Err(NocError::Config(
                format!("uniform size law needs 1 <= min <= max, got {min}..{max}"),
            )),
            _ => Ok(()),
        }
    }

    /// Largest packet this law can produce.
    pub fn max_len(&self) -> u32 {
        match *self {
            SizeLaw::Fixed(f) => f,
            SizeLaw::Uniform { max, .. } => max,
        }
    }

    pub fn mean_len(&self) -> f64 {
        match *self {
            SizeLaw::Fixed(f) => f as f64,
            SizeLaw::Uniform { min, max } => (min as f64 + max as f64) / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateLaw {
    /// Keep the source queue non-empty from `start` on.
    Saturating {
        start: u64,
    },
    /// One packet every `period` cycles, first one at `phase`.
    Periodic {
        period: u64,
        phase: u64,
    },
    SingleShot {
        at: u64,
    },
    /// Never generates traffic.
    Silent,
}

impl RateLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RateLaw::Periodic { period: 0, .. } => Err(NocError::Config(
                "periodic rate law needs period >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// A recurring source-to-destination traffic stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSpec {
    pub id: String,
    pub src: Address,
    pub dst: Address,
    pub size: SizeLaw,
    pub rate: RateLaw,
    /// Data word of flit `seq` is `data_base + seq + 1`, truncated to the
    /// data width.
    pub data_base: u64,
}

impl FlowSpec {
    pub fn new(
        id: impl Into<String>,
        src: Address,
        dst: Address,
        size: SizeLaw,
        rate: RateLaw,
    ) -> Self {
        Self {
            id: id.into(),
            src,
            dst,
            size,
            rate,
            data_base: 0,
        }
    }

    pub fn with_data_base(mut self, base: u64) -> Self {
        self.data_base = base;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.size.validate()?;
        self.rate.validate()?;
        if self.src == self.dst {
            return Err(NocError::Config(format!(
                "flow `{}` sends to its own source {}",
                self.id, self.src
            )));
        }
        Ok(())
    }
}

/// Builds a packet of `f` flits for `flow`.
pub fn make_packet(flow: &FlowSpec, f: u32, inject_time: u64) -> Result<Packet> {
    make_packet_for(flow, 0, 0, f, inject_time)
}

pub(crate) fn make_packet_for(
    flow: &FlowSpec,
    flow_idx: FlowIdx,
    packet: u64,
    f: u32,
    inject_time: u64,
) -> Result<Packet> {
    if f == 0 {
        return Err(NocError::InvalidSize(0));
    }
    let flits = (0..f)
        .map(|seq| Flit {
            kind: FlitKind::at(seq, f),
            dst: flow.dst,
            src: flow.src,
            data: flow.data_base.wrapping_add(seq as u64 + 1),
            seq,
            flow: flow_idx,
            packet,
        })
        .collect();
    Ok(Packet { flits, inject_time })
}

/// Bit packing of a flit on the wire, least significant field first:
///
/// ```text
/// | dst.y | dst.x | dst.port (3) | kind (2) | pad (2) | data (W) |
/// ```
///
/// The kind field sits in the top half of a nibble so hex dumps show it
/// as a single digit above the data field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlitLayout {
    pub data_bits: u32,
    pub x_bits: u32,
    pub y_bits: u32,
}

const KIND_BITS: u32 = 2;
const PAD_BITS: u32 = 2;
const PORT_BITS: u32 = 3;

fn bits_for(n: u32) -> u32 {
    if n <= 1 {
        0
    } else {
        32 - (n - 1).leading_zeros()
    }
}

impl FlitLayout {
    pub fn for_mesh(width: u32, height: u32, data_bits: u32) -> Result<Self> {
        if data_bits == 0 || data_bits > 64 || !data_bits.is_multiple_of(4) {
            return Err(NocError::Config(format!(
                "data width must be a multiple of 4 in 4..=64, got {data_bits}"
            )));
        }
        Ok(Self {
            data_bits,
            x_bits: bits_for(width),
            y_bits: bits_for(height),
        })
    }

    pub fn width(&self) -> u32 {
        self.data_bits + PAD_BITS + KIND_BITS + PORT_BITS + self.x_bits + self.y_bits
    }

    fn kind_shift(&self) -> u32 {
        self.data_bits + PAD_BITS
    }

    fn port_shift(&self) -> u32 {
        self.kind_shift() + KIND_BITS
    }

    fn x_shift(&self) -> u32 {
        self.port_shift() + PORT_BITS
    }

    fn y_shift(&self) -> u32 {
        self.x_shift() + self.x_bits
    }
}

fn mask(bits: u32) -> u128 {
    if bits == 0 {
        0
    } else {
        (1u128 << bits) - 1
    }
}

pub fn encode_flit(flit: &Flit, layout: &FlitLayout) -> Result<u128> {
    let check = |what: &'static str, value: u64, bits: u32| {
        if (value as u128) & !mask(bits) != 0 {
            Err(NocError::Encoding(format!(
                "{what} {value:#x} does not fit in {bits} bits"
            )))
        } else {
            Ok(value as u128)
        }
    };
    let data = check("data", flit.data, layout.data_bits)?;
    let x = check("dst.x", flit.dst.router.x as u64, layout.x_bits)?;
    let y = check("dst.y", flit.dst.router.y as u64, layout.y_bits)?;
    Ok(data
        | flit.kind.code() << layout.kind_shift()
        | (flit.dst.port.index() as u128) << layout.port_shift()
        | x << layout.x_shift()
        | y << layout.y_shift())
}

/// Inverse of [`encode_flit`]. Source, sequence number and flow identity
/// are not on the wire and come back zeroed.
pub fn decode_flit(word: u128, layout: &FlitLayout) -> Result<Flit> {
    if word & !mask(layout.width()) != 0 {
        return Err(NocError::Decoding(format!(
            "word {word:#x} is wider than the {}-bit layout",
            layout.width()
        )));
    }
    if (word >> layout.data_bits) & mask(PAD_BITS) != 0 {
        return Err(NocError::Decoding(format!(
            "word {word:#x} has malformed kind bits"
        )));
    }
    let field = |shift: u32, bits: u32| ((word >> shift) & mask(bits)) as u64;
    let port = PortId::from_index(field(layout.port_shift(), PORT_BITS) as usize)
        .expect("3-bit port index is always valid");
    let dst = Address::new(
        Coord::new(
            field(layout.x_shift(), layout.x_bits) as u32,
            field(layout.y_shift(), layout.y_bits) as u32,
        ),
        port,
    );
    Ok(Flit {
        kind: FlitKind::from_code(word >> layout.kind_shift()),
        dst,
        src: Address::new(Coord::new(0, 0), PortId::NN),
        data: field(0, layout.data_bits),
        seq: 0,
        flow: 0,
        packet: 0,
    })
}

/// Trace word shown in waveform dumps: a `4` nibble marks packet
/// boundaries (header or tail), `0` marks payload, followed by the data.
pub fn trace_word(flit: &Flit, data_bits: u32) -> u128 {
    let nibble: u128 = if flit.kind == FlitKind::Payload { 0 } else { 4 };
    nibble << data_bits | (flit.data as u128 & mask(data_bits))
}

pub fn render_trace(flit: &Flit, data_bits: u32) -> String {
    let digits = (data_bits / 4 + 1) as usize;
    format!("{:0digits$X}", trace_word(flit, data_bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(x: u32, y: u32, p: PortId) -> Address {
        Address::new(Coord::new(x, y), p)
    }

    fn flow(base: u64) -> FlowSpec {
        FlowSpec::new(
            "s7",
            addr(1, 0, PortId::NE),
            addr(0, 1, PortId::NN),
            SizeLaw::Fixed(6),
            RateLaw::SingleShot { at: 0 },
        )
        .with_data_base(base)
    }

    #[test]
    fn six_flit_packet_shape() {
        let p = make_packet(&flow(0x870), 6, 0).unwrap();
        let kinds: Vec<_> = p.flits.iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            [
                FlitKind::Header,
                FlitKind::Payload,
                FlitKind::Payload,
                FlitKind::Payload,
                FlitKind::Payload,
                FlitKind::Tail
            ]
        );
        assert!(p.flits.iter().enumerate().all(|(i, f)| f.seq == i as u32));
    }

    #[test]
    fn single_and_double_flit_packets() {
        let p = make_packet(&flow(0), 1, 0).unwrap();
        assert_eq!(p.flits[0].kind, FlitKind::HeaderTail);
        let p = make_packet(&flow(0), 2, 5).unwrap();
        assert_eq!(p.inject_time, 5);
        assert_eq!(p.flits[0].kind, FlitKind::Header);
        assert_eq!(p.flits[1].kind, FlitKind::Tail);
    }

    #[test]
    fn zero_size_packet_rejected() {
        assert!(matches!(
            make_packet(&flow(0), 0, 0),
            Err(NocError::InvalidSize(0))
        ));
    }

    #[test]
    fn table_words_render() {
        let p7 = make_packet(&flow(0x870), 6, 0).unwrap();
        assert_eq!(trace_word(&p7.flits[0], 16), 0x40871);
        assert_eq!(render_trace(&p7.flits[0], 16), "40871");
        let p3 = make_packet(&flow(0x830), 6, 0).unwrap();
        assert_eq!(trace_word(&p3.flits[2], 16), 0x00833);
        assert_eq!(render_trace(&p3.flits[5], 16), "40836");
    }

    #[test]
    fn decode_table_tail_word() {
        let layout = FlitLayout::for_mesh(2, 2, 16).unwrap();
        let f = decode_flit(0x40836, &layout).unwrap();
        assert_eq!(f.kind, FlitKind::Tail);
        assert_eq!(f.data, 0x0836);
        let z = decode_flit(0, &layout).unwrap();
        assert_eq!(z.kind, FlitKind::Payload);
        assert_eq!(z.data, 0);
    }

    #[test]
    fn decode_rejects_pad_bits_and_wide_words() {
        let layout = FlitLayout::for_mesh(2, 2, 16).unwrap();
        assert!(decode_flit(0x10000, &layout).is_err());
        assert!(decode_flit(1 << layout.width(), &layout).is_err());
    }

    #[test]
    fn encode_rejects_overflow() {
        let layout = FlitLayout::for_mesh(2, 2, 16).unwrap();
        let mut f = make_packet(&flow(0), 1, 0).unwrap().flits[0];
        f.data = 0x1_0000;
        assert!(matches!(
            encode_flit(&f, &layout),
            Err(NocError::Encoding(_))
        ));
        f.data = 1;
        f.dst.router.x = 2;
        assert!(encode_flit(&f, &layout).is_err());
    }

    #[test]
    fn layout_widths() {
        assert_eq!(FlitLayout::for_mesh(1, 1, 16).unwrap().width(), 23);
        let l = FlitLayout::for_mesh(5, 5, 16).unwrap();
        assert_eq!((l.x_bits, l.y_bits), (3, 3));
        assert!(FlitLayout::for_mesh(2, 2, 0).is_err());
        assert!(FlitLayout::for_mesh(2, 2, 80).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_flit(layout: FlitLayout) -> impl Strategy<Value = Flit> {
            (
                0u32..4,
                0u64..(1 << layout.data_bits),
                0u32..(1 << layout.x_bits),
                0u32..(1 << layout.y_bits),
                0usize..8,
            )
                .prop_map(|(k, data, x, y, p)| Flit {
                    kind: FlitKind::from_code(k as u128),
                    dst: Address::new(Coord::new(x, y), PortId::from_index(p).unwrap()),
                    src: Address::new(Coord::new(0, 0), PortId::NN),
                    data,
                    seq: 0,
                    flow: 0,
                    packet: 0,
                })
        }

        proptest! {
            #[test]
            fn roundtrip(flit in arb_flit(FlitLayout::for_mesh(5, 3, 32).unwrap())) {
                let layout = FlitLayout::for_mesh(5, 3, 32).unwrap();
                let word = encode_flit(&flit, &layout).unwrap();
                prop_assert_eq!(decode_flit(word, &layout).unwrap(), flit);
                prop_assert_eq!(encode_flit(&decode_flit(word, &layout).unwrap(), &layout).unwrap(), word);
            }

            #[test]
            fn packet_kinds_follow_position(f in 1u32..40, base in 0u64..1000) {
                let p = make_packet(&flow(base), f, 3).unwrap();
                prop_assert_eq!(p.len(), f);
                prop_assert!(p.flits[0].kind.is_head());
                prop_assert!(p.flits[f as usize - 1].kind.is_tail());
                let heads = p.flits.iter().filter(|x| x.kind.is_head()).count();
                let tails = p.flits.iter().filter(|x| x.kind.is_tail()).count();
                prop_assert_eq!((heads, tails), (1, 1));
                prop_assert!(p.flits.iter().all(|x| x.dst == p.flits[0].dst && x.src == p.flits[0].src));
            }
        }
    }
}
