//! Deterministic cycle-driven simulation kernel.
//!
//! Each cycle runs in a fixed order:
//!
//! 1. traffic generation and source-queue refill,
//! 2. destination cores read from their receive FIFOs,
//! 3. every router arbitrates from the state left by the previous cycle,
//! 4. granted flits from earlier cycles move across links, into receive
//!    FIFOs, and sources inject into free local input latches.
//!
//! Steps 3 and 4 read only state that no other router writes within the
//! same step, so the result does not depend on router evaluation order.
//!
//! Latency is measured from the cycle a packet's header enters the input
//! channel of its source router to the cycle its tail leaves the output
//! channel at the destination router.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytics::{self, WclBreakdown};
use crate::error::{NocError, Result};
use crate::model::{make_packet_for, Address, Flit, FlowSpec, PortId, RateLaw, SizeLaw};
use crate::network::{CoreId, Network};
use crate::router::Router;

/// How priority-channel credit is derived before a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CreditMode {
    /// One sequential grant per flow merged into the channel.
    Flows,
    /// Number of upstream routers that can route through the channel.
    Topology,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub network: Network,
    pub flows: Vec<FlowSpec>,
    pub duration: u64,
    pub seed: u64,
    pub clock_ns: f64,
    pub credit_mode: CreditMode,
}

impl SimConfig {
    pub fn new(network: Network, flows: Vec<FlowSpec>, duration: u64) -> Self {
        Self {
            network,
            flows,
            duration,
            seed: 0,
            clock_ns: 10.0,
            credit_mode: CreditMode::Flows,
        }
    }

    pub fn flow_index(&self, id: &str) -> Option<usize> {
        self.flows.iter().position(|f| f.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration == 0 {
            return Err(NocError::Config(
                "simulation duration must be positive".into(),
            ));
        }
        if self.clock_ns.is_nan() || self.clock_ns <= 0.0 {
            return Err(NocError::Config(format!(
                "clock period {} ns is not positive",
                self.clock_ns
            )));
        }
        for (i, f) in self.flows.iter().enumerate() {
            f.validate()?;
            if self.flows[..i].iter().any(|g| g.id == f.id) {
                return Err(NocError::Config(format!("duplicate flow id `{}`", f.id)));
            }
            self.network.xy_path(f.src, f.dst)?;
        }
        Ok(())
    }

    /// Worst-case bound of every flow under this configuration.
    pub fn wcl_table(&self) -> Result<Vec<WclBreakdown>> {
        (0..self.flows.len())
            .map(|i| analytics::wcl_for_flow(&self.network, &self.flows, i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub flow: usize,
    pub packet: u64,
    pub flits: u32,
    /// Cycle the source generated the packet.
    pub created_cycle: u64,
    /// Cycle the header entered the source router's input channel.
    pub inject_cycle: u64,
    pub header_arrival_cycle: u64,
    pub tail_departure_cycle: u64,
}

impl PacketRecord {
    pub fn header_latency(&self) -> u64 {
        self.header_arrival_cycle - self.inject_cycle
    }

    pub fn packet_latency(&self) -> u64 {
        self.tail_departure_cycle - self.inject_cycle
    }
}

/// A flit leaving the network at its destination core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub cycle: u64,
    pub core: CoreId,
    pub flit: Flit,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowStats {
    pub packets: u64,
    pub flits: u64,
    pub avg_latency: f64,
    pub max_latency: u64,
    pub max_header_latency: u64,
    /// Delivered flits per cycle over the whole run.
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub flow_ids: Vec<String>,
    pub duration: u64,
    pub packets: Vec<PacketRecord>,
    /// Every delivered flit, in delivery order.
    pub deliveries: Vec<Delivery>,
    pub packets_generated: Vec<u64>,
    /// Flits delivered out of injection order (always zero for XY).
    pub order_violations: u64,
}

impl Metrics {
    pub fn flow_packets(&self, flow: usize) -> impl Iterator<Item = &PacketRecord> {
        self.packets.iter().filter(move |p| p.flow == flow)
    }

    pub fn flow_deliveries(&self, flow: usize) -> impl Iterator<Item = &Delivery> {
        self.deliveries.iter().filter(move |d| d.flit.flow == flow)
    }

    /// Delivery cycles seen on the output channel of `core`.
    pub fn channel_timestamps(&self, core: CoreId) -> Vec<u64> {
        self.deliveries
            .iter()
            .filter(|d| d.core == core)
            .map(|d| d.cycle)
            .collect()
    }

    /// Packets whose latency exceeds `bounds[flow]`, as
    /// `(record, bound)` pairs.
    pub fn bound_violations<'a>(
        &'a self,
        bounds: &'a [u64],
    ) -> impl Iterator<Item = (&'a PacketRecord, u64)> + 'a {
        self.packets
            .iter()
            .map(move |p| (p, bounds[p.flow]))
            .filter(|(p, b)| p.packet_latency() > *b)
    }

    pub fn flow_stats(&self, flow: usize) -> FlowStats {
        let lat: Vec<u64> = self
            .flow_packets(flow)
            .map(|p| p.packet_latency())
            .collect();
        let flits = self.flow_deliveries(flow).count() as u64;
        FlowStats {
            packets: lat.len() as u64,
            flits,
            avg_latency: if lat.is_empty() {
                0.0
            } else {
                lat.iter().sum::<u64>() as f64 / lat.len() as f64
            },
            max_latency: lat.iter().copied().max().unwrap_or(0),
            max_header_latency: self
                .flow_packets(flow)
                .map(|p| p.header_latency())
                .max()
                .unwrap_or(0),
            throughput: flits as f64 / self.duration as f64,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Interface {
    /// Generated packets whose flits have not all entered `tx` yet.
    pending: VecDeque<VecDeque<Flit>>,
    tx: VecDeque<Flit>,
    rx: VecDeque<Flit>,
}

#[derive(Debug, Clone)]
struct Source {
    core: CoreId,
    next_packet: u64,
    /// Packets generated but whose header is not in the network yet.
    queued: u64,
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    created: u64,
    inject: Option<u64>,
    header_arrival: Option<u64>,
    flits: u32,
}

/// A running simulation. Use [`run`] for the one-shot form.
#[derive(Debug)]
pub struct Engine {
    net: Network,
    flows: Vec<FlowSpec>,
    duration: u64,
    now: u64,
    rng: ChaCha8Rng,
    routers: Vec<Router>,
    interfaces: BTreeMap<CoreId, Interface>,
    sources: Vec<Source>,
    in_flight: BTreeMap<(usize, u64), InFlight>,
    /// Last `(packet, seq)` delivered per flow.
    last_delivered: Vec<Option<(u64, u32)>>,
    generated_flits: u64,
    consumed_flits: u64,
    metrics: Metrics,
}

impl Engine {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mut net = cfg.network.clone();
        if cfg.credit_mode == CreditMode::Flows {
            net.assign_flow_credits(&cfg.flows)?;
        }
        let routers = net.build_routers()?;
        let interfaces = net
            .cores()
            .keys()
            .map(|&c| (c, Interface::default()))
            .collect();
        let sources = cfg
            .flows
            .iter()
            .map(|f| Source {
                core: net.core_at(f.src).expect("validated source"),
                next_packet: 0,
                queued: 0,
            })
            .collect();
        Ok(Self {
            duration: cfg.duration,
            now: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            routers,
            interfaces,
            sources,
            in_flight: BTreeMap::new(),
            last_delivered: vec![None; cfg.flows.len()],
            generated_flits: 0,
            consumed_flits: 0,
            metrics: Metrics {
                flow_ids: cfg.flows.iter().map(|f| f.id.clone()).collect(),
                duration: cfg.duration,
                packets: Vec::new(),
                deliveries: Vec::new(),
                packets_generated: vec![0; cfg.flows.len()],
                order_violations: 0,
            },
            flows: cfg.flows.clone(),
            net,
        })
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn routers(&self) -> &[Router] {
        &self.routers
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn tx_len(&self, core: CoreId) -> usize {
        self.interfaces.get(&core).map_or(0, |i| i.tx.len())
    }

    /// Flits generated so far, and where they are now:
    /// `(generated, queued_at_sources, in_routers, in_rx_fifos, consumed)`.
    pub fn flit_census(&self) -> (u64, u64, u64, u64, u64) {
        let mut queued = 0;
        let mut rx = 0;
        for i in self.interfaces.values() {
            queued += i.tx.len() as u64 + i.pending.iter().map(|p| p.len() as u64).sum::<u64>();
            rx += i.rx.len() as u64;
        }
        let routers = self.routers.iter().map(|r| r.occupancy() as u64).sum();
        (
            self.generated_flits,
            queued,
            routers,
            rx,
            self.consumed_flits,
        )
    }

    /// Generates one packet of `flow` now and queues it at its source.
    pub fn inject(&mut self, flow: usize) -> Result<()> {
        let spec = self
            .flows
            .get(flow)
            .ok_or_else(|| NocError::Config(format!("no flow with index {flow}")))?;
        let f = match spec.size {
            SizeLaw::Fixed(f) => f,
            SizeLaw::Uniform { min, max } => self.rng.gen_range(min..=max),
        };
        let src = &mut self.sources[flow];
        let id = src.next_packet;
        src.next_packet += 1;
        src.queued += 1;
        let packet = make_packet_for(spec, flow, id, f, self.now)?;
        self.generated_flits += f as u64;
        self.metrics.packets_generated[flow] += 1;
        self.in_flight.insert(
            (flow, id),
            InFlight {
                created: self.now,
                inject: None,
                header_arrival: None,
                flits: f,
            },
        );
        let core = self.sources[flow].core;
        self.interfaces
            .get_mut(&core)
            .expect("source interface")
            .pending
            .push_back(packet.flits.into_iter().collect());
        Ok(())
    }

    fn generate(&mut self) -> Result<()> {
        let t = self.now;
        for i in 0..self.flows.len() {
            let due = match self.flows[i].rate {
                RateLaw::Saturating { start } => t >= start && self.sources[i].queued == 0,
                RateLaw::Periodic { period, phase } => {
                    t >= phase && (t - phase).is_multiple_of(period)
                }
                RateLaw::SingleShot { at } => t == at,
                RateLaw::Silent => false,
            };
            if due {
                self.inject(i)?;
            }
        }
        let depth = self.net.fifo_depth();
        for nic in self.interfaces.values_mut() {
            while nic.tx.len() < depth {
                let Some(front) = nic.pending.front_mut() else {
                    break;
                };
                nic.tx
                    .push_back(front.pop_front().expect("non-empty pending packet"));
                if front.is_empty() {
                    nic.pending.pop_front();
                }
            }
        }
        Ok(())
    }

    fn drain(&mut self) {
        if !self.now.is_multiple_of(self.net.drain_interval()) {
            return;
        }
        for nic in self.interfaces.values_mut() {
            if nic.rx.pop_front().is_some() {
                self.consumed_flits += 1;
            }
        }
    }

    fn deliver(&mut self, core: CoreId, flit: Flit, cycle: u64) {
        let key = (flit.flow, flit.packet);
        let in_order = match self.last_delivered[flit.flow] {
            None => flit.packet == 0 && flit.seq == 0,
            Some((p, s)) => {
                (flit.packet == p && flit.seq == s + 1) || (flit.packet == p + 1 && flit.seq == 0)
            }
        };
        if !in_order {
            self.metrics.order_violations += 1;
        }
        self.last_delivered[flit.flow] = Some((flit.packet, flit.seq));
        let rec = self
            .in_flight
            .get_mut(&key)
            .expect("delivered flit belongs to a live packet");
        if flit.kind.is_head() {
            rec.header_arrival = Some(cycle);
        }
        if flit.kind.is_tail() {
            let rec = self.in_flight.remove(&key).expect("live packet");
            self.metrics.packets.push(PacketRecord {
                flow: flit.flow,
                packet: flit.packet,
                flits: rec.flits,
                created_cycle: rec.created,
                inject_cycle: rec.inject.expect("header injected before tail"),
                header_arrival_cycle: rec.header_arrival.expect("header delivered before tail"),
                tail_departure_cycle: cycle,
            });
        }
        self.metrics.deliveries.push(Delivery { cycle, core, flit });
    }

    /// Advances the simulation by one cycle.
    pub fn step(&mut self) -> Result<()> {
        let t = self.now;
        self.generate()?;
        self.drain();

        for r in &mut self.routers {
            r.arbitrate(t)?;
        }

        // Moves out of output registers. Link moves need the downstream
        // latch to be free after this cycle's arbitration.
        let depth = self.net.fifo_depth();
        let mut moves: Vec<(usize, PortId)> = Vec::new();
        for (id, r) in self.routers.iter().enumerate() {
            let at = r.coord();
            for out in r.ready_outputs(t) {
                let ready = match self.net.neighbour(at, out) {
                    Some(next) => self.routers[self.net.router_id(next)].input_free(out.opposite()),
                    None => {
                        let core =
                            self.net
                                .core_at(Address::new(at, out))
                                .ok_or(NocError::Topology {
                                    router: at,
                                    port: out,
                                })?;
                        self.interfaces[&core].rx.len() < depth
                    }
                };
                if ready {
                    moves.push((id, out));
                }
            }
        }
        for (id, out) in moves {
            let at = self.routers[id].coord();
            let flit = self.routers[id].take_output(out).expect("ready output");
            match self.net.neighbour(at, out) {
                Some(next) => {
                    let nid = self.net.router_id(next);
                    self.routers[nid].accept(out.opposite(), flit, t + 1)?;
                }
                None => {
                    let core = self
                        .net
                        .core_at(Address::new(at, out))
                        .expect("checked above");
                    self.interfaces
                        .get_mut(&core)
                        .expect("interface")
                        .rx
                        .push_back(flit);
                    self.deliver(core, flit, t + 1);
                }
            }
        }

        // Injection from source queues into local input latches.
        let cores: Vec<(CoreId, Address)> =
            self.net.cores().iter().map(|(&c, &a)| (c, a)).collect();
        for (core, addr) in cores {
            let rid = self.net.router_id(addr.router);
            if !self.routers[rid].input_free(addr.port) {
                continue;
            }
            let nic = self.interfaces.get_mut(&core).expect("interface");
            let Some(flit) = nic.tx.pop_front() else {
                continue;
            };
            self.routers[rid].accept(addr.port, flit, t + 1)?;
            if flit.kind.is_head() {
                let rec = self
                    .in_flight
                    .get_mut(&(flit.flow, flit.packet))
                    .expect("live packet");
                rec.inject = Some(t + 1);
                self.sources[flit.flow].queued -= 1;
            }
        }

        self.now += 1;
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.now < self.duration {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_metrics(self) -> Metrics {
        self.metrics
    }
}

/// Simulates `cfg.duration` cycles and returns the collected metrics.
pub fn run(cfg: &SimConfig) -> Result<Metrics> {
    let mut e = Engine::new(cfg)?;
    e.run_to_end()?;
    Ok(e.into_metrics())
}

/// One load point of an offered-load sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub offered_load: f64,
    /// Competitor load actually delivered, as a fraction of channel
    /// capacity.
    pub achieved_load: f64,
    pub avg_latency: f64,
    pub max_latency: u64,
    pub packets: u64,
    /// Set when competitors could not sustain the requested load.
    pub unreachable: bool,
}

/// Channel capacity in flits per cycle: one grant every two cycles.
pub const CHANNEL_CAPACITY: f64 = 0.5;

/// Runs `base` once per load point, rescaling every flow other than
/// `target` to a periodic law so that together they offer `load` of one
/// channel's capacity. Points run in parallel; rows come back in input
/// order.
pub fn offered_load_sweep(base: &SimConfig, target: &str, loads: &[f64]) -> Result<Vec<SweepRow>> {
    let t = base
        .flow_index(target)
        .ok_or_else(|| NocError::Config(format!("no flow `{target}`")))?;
    if let Some(bad) = loads.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(NocError::Config(format!("load point {bad} outside [0, 1]")));
    }
    let competitors: Vec<usize> = (0..base.flows.len()).filter(|&i| i != t).collect();
    loads
        .par_iter()
        .map(|&load| {
            let mut cfg = base.clone();
            let mean_total: f64 = competitors
                .iter()
                .map(|&i| cfg.flows[i].size.mean_len())
                .sum();
            for (j, &i) in competitors.iter().enumerate() {
                cfg.flows[i].rate = if load <= 0.0 {
                    RateLaw::Silent
                } else {
                    let period = (mean_total / (load * CHANNEL_CAPACITY)).round().max(1.0) as u64;
                    RateLaw::Periodic {
                        period,
                        phase: (j as u64 * period) / competitors.len() as u64,
                    }
                };
            }
            let m = run(&cfg)?;
            let delivered: usize = competitors
                .iter()
                .map(|&i| m.flow_deliveries(i).count())
                .sum();
            let achieved = delivered as f64 / cfg.duration as f64 / CHANNEL_CAPACITY;
            let stats = m.flow_stats(t);
            Ok(SweepRow {
                offered_load: load,
                achieved_load: achieved,
                avg_latency: stats.avg_latency,
                max_latency: stats.max_latency,
                packets: stats.packets,
                unreachable: load > 0.0 && achieved < 0.9 * load,
            })
        })
        .collect()
}
