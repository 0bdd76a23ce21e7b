//! 2-D mesh construction, XY paths and per-flow contention profiles.
//!
//! Router `id = y * width + x`. Every router exposes all eight ports;
//! cardinal ports facing a neighbour are links, every other port may host
//! one core.

use std::collections::{BTreeMap, BTreeSet};

use crate::arbiter::xy_route;
use crate::error::{NocError, Result};
use crate::model::{Address, Coord, FlowSpec, PortId};
use crate::router::Router;
pub use crate::router::RouterKind;

pub type CoreId = u32;

/// Per output port, the sequential budget of each priority input.
pub type CreditTable = BTreeMap<PortId, BTreeMap<PortId, u32>>;

#[derive(Debug, Clone)]
pub struct Network {
    width: u32,
    height: u32,
    kind: RouterKind,
    fifo_depth: usize,
    drain_interval: u64,
    cores: BTreeMap<CoreId, Address>,
    by_address: BTreeMap<Address, CoreId>,
    credits: Vec<CreditTable>,
}

/// One router traversal of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hop {
    pub router: Coord,
    pub input: PortId,
    pub output: PortId,
}

/// Structural contention seen by one flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionProfile {
    /// Per hop, the number of distinct input channels (the flow's own
    /// included) carrying traffic to that hop's output.
    pub n: Vec<u32>,
    /// Flows, the analysed one included, addressed to its destination.
    pub k: u32,
    pub h_path: u32,
}

impl Network {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn kind(&self) -> RouterKind {
        self.kind
    }

    /// Depth `B` of every network-interface FIFO, in flits.
    pub fn fifo_depth(&self) -> usize {
        self.fifo_depth
    }

    /// Destination cores read one flit every `drain_interval` cycles.
    pub fn drain_interval(&self) -> u64 {
        self.drain_interval
    }

    pub fn set_drain_interval(&mut self, cycles: u64) -> Result<()> {
        if cycles == 0 {
            return Err(NocError::Config(
                "drain interval must be at least one cycle".into(),
            ));
        }
        self.drain_interval = cycles;
        Ok(())
    }

    /// Interface depth that can hold foreign flits ahead of a packet:
    /// zero when destinations read every cycle.
    pub fn effective_buffer_depth(&self) -> usize {
        if self.drain_interval <= 1 {
            0
        } else {
            self.fifo_depth
        }
    }

    pub fn router_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn router_id(&self, c: Coord) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn coord_of(&self, id: usize) -> Coord {
        Coord::new(id as u32 % self.width, id as u32 / self.width)
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn cores(&self) -> &BTreeMap<CoreId, Address> {
        &self.cores
    }

    pub fn core_address(&self, id: CoreId) -> Option<Address> {
        self.cores.get(&id).copied()
    }

    pub fn core_at(&self, a: Address) -> Option<CoreId> {
        self.by_address.get(&a).copied()
    }

    /// True when `port` of router `c` is wired to a neighbouring router.
    pub fn is_link(&self, c: Coord, port: PortId) -> bool {
        match port {
            PortId::EE => c.x + 1 < self.width,
            PortId::WW => c.x > 0,
            PortId::NN => c.y + 1 < self.height,
            PortId::SS => c.y > 0,
            _ => false,
        }
    }

    /// Router on the other end of a link port.
    pub fn neighbour(&self, c: Coord, port: PortId) -> Option<Coord> {
        if !self.is_link(c, port) {
            return None;
        }
        Some(match port {
            PortId::EE => Coord::new(c.x + 1, c.y),
            PortId::WW => Coord::new(c.x - 1, c.y),
            PortId::NN => Coord::new(c.x, c.y + 1),
            PortId::SS => Coord::new(c.x, c.y - 1),
            _ => unreachable!(),
        })
    }

    pub fn credits(&self, router: Coord) -> &CreditTable {
        &self.credits[self.router_id(router)]
    }

    /// Fresh routers with the current credit tables.
    pub fn build_routers(&self) -> Result<Vec<Router>> {
        (0..self.router_count())
            .map(|id| {
                Router::new(
                    self.coord_of(id),
                    self.kind,
                    &PortId::ALL,
                    &self.credits[id],
                )
            })
            .collect()
    }

    /// Replaces the topology-derived credits with flow-derived ones: each
    /// priority input gets one sequential grant per flow it carries to the
    /// output, and at least one.
    pub fn assign_flow_credits(&mut self, flows: &[FlowSpec]) -> Result<()> {
        let mut counts: Vec<BTreeMap<(PortId, PortId), u32>> =
            vec![BTreeMap::new(); self.router_count()];
        for flow in flows {
            for hop in self.xy_path(flow.src, flow.dst)? {
                if hop.input.is_cardinal() && self.is_link(hop.router, hop.input) {
                    *counts[self.router_id(hop.router)]
                        .entry((hop.output, hop.input))
                        .or_default() += 1;
                }
            }
        }
        for (id, table) in self.credits.iter_mut().enumerate() {
            for (out, inputs) in table.iter_mut() {
                for (inp, credit) in inputs.iter_mut() {
                    *credit = counts[id].get(&(*out, *inp)).copied().unwrap_or(0).max(1);
                }
            }
        }
        Ok(())
    }

    /// Router-level XY path between two mesh positions, as
    /// `(router, output)` pairs; the last output is the destination port.
    fn walk(&self, from: Coord, to: Address) -> Vec<(Coord, PortId)> {
        let mut hops = Vec::new();
        let mut at = from;
        loop {
            let out = xy_route(at, to);
            hops.push((at, out));
            match self.neighbour(at, out) {
                Some(next) if at != to.router => at = next,
                _ => break,
            }
        }
        hops
    }

    /// The unique XY path from core `src` to core `dst`.
    pub fn xy_path(&self, src: Address, dst: Address) -> Result<Vec<Hop>> {
        for a in [src, dst] {
            if !self.by_address.contains_key(&a) {
                return Err(NocError::Lookup(a));
            }
        }
        let mut input = src.port;
        Ok(self
            .walk(src.router, dst)
            .into_iter()
            .map(|(router, output)| {
                let hop = Hop {
                    router,
                    input,
                    output,
                };
                input = output.opposite();
                hop
            })
            .collect())
    }

    /// Contention seen by `flows[target]` given the whole flow set.
    pub fn contention_profile(
        &self,
        flows: &[FlowSpec],
        target: usize,
    ) -> Result<ContentionProfile> {
        let t = flows
            .get(target)
            .ok_or_else(|| NocError::Config(format!("no flow with index {target}")))?;
        let path = self.xy_path(t.src, t.dst)?;
        let mut feeders: BTreeMap<(Coord, PortId), BTreeSet<PortId>> = BTreeMap::new();
        for f in flows {
            for hop in self.xy_path(f.src, f.dst)? {
                feeders
                    .entry((hop.router, hop.output))
                    .or_default()
                    .insert(hop.input);
            }
        }
        let n = path
            .iter()
            .map(|h| feeders[&(h.router, h.output)].len() as u32)
            .collect();
        let k = flows.iter().filter(|f| f.dst == t.dst).count() as u32;
        Ok(ContentionProfile {
            n,
            k,
            h_path: path.len() as u32,
        })
    }
}

/// Topology-only credit: the number of routers whose XY traffic can enter
/// through a priority input and leave through a given output.
fn topology_credits(net: &Network) -> Vec<CreditTable> {
    let mut sources: Vec<BTreeMap<(PortId, PortId), BTreeSet<usize>>> =
        vec![BTreeMap::new(); net.router_count()];
    for s in 0..net.router_count() {
        for d in 0..net.router_count() {
            if s == d {
                continue;
            }
            let to = Address::new(net.coord_of(d), PortId::NE);
            let mut input: Option<PortId> = None;
            for (at, out) in net.walk(net.coord_of(s), to) {
                if let Some(inp) = input {
                    let outs: Vec<PortId> = if at == to.router {
                        PortId::ALL
                            .iter()
                            .copied()
                            .filter(|&p| !net.is_link(at, p))
                            .collect()
                    } else {
                        vec![out]
                    };
                    for o in outs {
                        sources[net.router_id(at)]
                            .entry((o, inp))
                            .or_default()
                            .insert(s);
                    }
                }
                input = Some(out.opposite());
            }
        }
    }
    (0..net.router_count())
        .map(|id| {
            let at = net.coord_of(id);
            PortId::ALL
                .iter()
                .map(|&out| {
                    let inputs = PortId::CARDINAL
                        .iter()
                        .filter(|&&p| p != out && net.is_link(at, p))
                        .map(|&p| {
                            let n = sources[id].get(&(out, p)).map_or(0, |s| s.len()) as u32;
                            (p, n.max(1))
                        })
                        .collect();
                    (out, inputs)
                })
                .collect()
        })
        .collect()
}

/// Builds a `width` x `height` mesh with cores at `placements` and
/// network-interface FIFOs of depth `fifo_depth`.
pub fn build_mesh(
    width: u32,
    height: u32,
    placements: &[(CoreId, Address)],
    fifo_depth: usize,
    kind: RouterKind,
) -> Result<Network> {
    if width == 0 || height == 0 {
        return Err(NocError::Config(format!(
            "mesh must be at least 1x1, got {width}x{height}"
        )));
    }
    if fifo_depth == 0 {
        return Err(NocError::Config(
            "interface FIFO depth must be at least 1".into(),
        ));
    }
    let mut net = Network {
        width,
        height,
        kind,
        fifo_depth,
        drain_interval: 1,
        cores: BTreeMap::new(),
        by_address: BTreeMap::new(),
        credits: Vec::new(),
    };
    for &(id, addr) in placements {
        if !net.in_bounds(addr.router) {
            return Err(NocError::Bounds(addr.router));
        }
        if net.is_link(addr.router, addr.port) {
            return Err(NocError::Placement(format!(
                "core {id} placed on inter-router port {addr}"
            )));
        }
        if let Some(other) = net.by_address.insert(addr, id) {
            return Err(NocError::Placement(format!(
                "cores {other} and {id} share attachment point {addr}"
            )));
        }
        if net.cores.insert(id, addr).is_some() {
            return Err(NocError::Placement(format!("core id {id} placed twice")));
        }
    }
    net.credits = topology_credits(&net);
    Ok(net)
}

/// Places `per_router` cores on every router, numbering cores router by
/// router in router-id order and filling free ports in the order
/// NE, SE, SW, NW, then unused cardinal ports NN, EE, SS, WW.
pub fn dense_placement(
    width: u32,
    height: u32,
    per_router: usize,
) -> Result<Vec<(CoreId, Address)>> {
    let probe = build_mesh(width, height, &[], 1, RouterKind::Rts)?;
    let order = [
        PortId::NE,
        PortId::SE,
        PortId::SW,
        PortId::NW,
        PortId::NN,
        PortId::EE,
        PortId::SS,
        PortId::WW,
    ];
    let mut out = Vec::new();
    for id in 0..probe.router_count() {
        let at = probe.coord_of(id);
        let free: Vec<PortId> = order
            .iter()
            .copied()
            .filter(|&p| !probe.is_link(at, p))
            .collect();
        if free.len() < per_router {
            return Err(NocError::Placement(format!(
                "router {at} has only {} free ports for {per_router} cores",
                free.len()
            )));
        }
        for &p in &free[..per_router] {
            out.push((out.len() as CoreId, Address::new(at, p)));
        }
    }
    Ok(out)
}
