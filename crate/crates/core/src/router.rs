//! Cycle-level router models.
//!
//! Both router kinds share the same datapath: a one-flit latch on every
//! input and a one-flit register on every output. A flit granted in cycle
//! `t` leaves the output in cycle `t + 1` and can be arbitrated at the next
//! router in cycle `t + 2`, giving the two-cycle forwarding delay and one
//! flit every two cycles per output.
//!
//! A cycle has two phases so that routers can be evaluated in any order:
//!
//! 1. [`Router::arbitrate`]: every free output grants one latched flit.
//! 2. [`Router::take_output`]: output registers whose flit was granted in an
//!    earlier cycle hand it to the downstream latch, if that latch is free
//!    after phase 1. Otherwise the flit stays put and the output stalls.
//!
//! The interleaving router arbitrates with [`ArbiterState`]; the wormhole
//! router lets a header claim an output until its tail has been granted.

use std::collections::BTreeMap;

use crate::arbiter::{init_arbiter, xy_route, ArbiterState};
use crate::error::{NocError, Result};
use crate::model::{Coord, Flit, PortId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouterKind {
    Rts,
    Wormhole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Latched {
    flit: Flit,
    out: PortId,
    /// First cycle in which the flit may take part in arbitration.
    since: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Staged {
    flit: Flit,
    granted_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Policy {
    Interleave(ArbiterState),
    Wormhole {
        inputs: Vec<PortId>,
        /// Input holding the output until its packet's tail is granted.
        owner: Option<PortId>,
        /// Index into `inputs` of the last header winner.
        pointer: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Output {
    policy: Policy,
    stage: Option<Staged>,
}

/// Grant event reported by [`Router::arbitrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub input: PortId,
    pub output: PortId,
    pub flit: Flit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Router {
    coord: Coord,
    kind: RouterKind,
    ports: Vec<PortId>,
    latches: [Option<Latched>; 8],
    outputs: [Option<Output>; 8],
}

impl Router {
    /// A router with the given configured ports. `credits` maps each
    /// output to the sequential budget of its priority input channels; it
    /// is ignored by the wormhole kind.
    pub fn new(
        coord: Coord,
        kind: RouterKind,
        ports: &[PortId],
        credits: &BTreeMap<PortId, BTreeMap<PortId, u32>>,
    ) -> Result<Self> {
        if !(5..=8).contains(&ports.len()) {
            return Err(NocError::Config(format!(
                "router {coord} needs 5..=8 ports, got {}",
                ports.len()
            )));
        }
        let mut sorted = ports.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != ports.len() {
            return Err(NocError::Config(format!(
                "router {coord} lists a port twice"
            )));
        }
        let mut outputs: [Option<Output>; 8] = Default::default();
        for &out in &sorted {
            let inputs: Vec<PortId> = sorted.iter().copied().filter(|&p| p != out).collect();
            let policy = match kind {
                RouterKind::Rts => {
                    let empty = BTreeMap::new();
                    let cfg = credits.get(&out).unwrap_or(&empty);
                    let cfg: BTreeMap<PortId, u32> = cfg
                        .iter()
                        .filter(|(p, _)| inputs.contains(p))
                        .map(|(&p, &c)| (p, c))
                        .collect();
                    Policy::Interleave(init_arbiter(&inputs, &cfg)?)
                }
                RouterKind::Wormhole => Policy::Wormhole {
                    pointer: inputs.len() - 1,
                    inputs,
                    owner: None,
                },
            };
            outputs[out.index()] = Some(Output {
                policy,
                stage: None,
            });
        }
        Ok(Self {
            coord,
            kind,
            ports: sorted,
            latches: Default::default(),
            outputs,
        })
    }

    pub fn coord(&self) -> Coord {
        self.coord
    }

    pub fn kind(&self) -> RouterKind {
        self.kind
    }

    pub fn ports(&self) -> &[PortId] {
        &self.ports
    }

    pub fn has_port(&self, p: PortId) -> bool {
        self.outputs[p.index()].is_some()
    }

    /// Arbiter of an output of an interleaving router.
    pub fn arbiter(&self, out: PortId) -> Option<&ArbiterState> {
        match &self.outputs[out.index()].as_ref()?.policy {
            Policy::Interleave(a) => Some(a),
            Policy::Wormhole { .. } => None,
        }
    }

    /// Input currently holding `out` (wormhole kind only).
    pub fn owner(&self, out: PortId) -> Option<PortId> {
        match &self.outputs[out.index()].as_ref()?.policy {
            Policy::Wormhole { owner, .. } => *owner,
            Policy::Interleave(_) => None,
        }
    }

    pub fn input_free(&self, p: PortId) -> bool {
        self.has_port(p) && self.latches[p.index()].is_none()
    }

    pub fn latched(&self, p: PortId) -> Option<&Flit> {
        self.latches[p.index()].as_ref().map(|l| &l.flit)
    }

    pub fn staged(&self, p: PortId) -> Option<&Flit> {
        self.outputs[p.index()]
            .as_ref()?
            .stage
            .as_ref()
            .map(|s| &s.flit)
    }

    /// Flits held in latches and output registers.
    pub fn occupancy(&self) -> usize {
        self.latches.iter().flatten().count()
            + self
                .outputs
                .iter()
                .flatten()
                .filter(|o| o.stage.is_some())
                .count()
    }

    /// Latches a flit arriving on input `port`; it competes for its output
    /// from cycle `since` on.
    pub fn accept(&mut self, port: PortId, flit: Flit, since: u64) -> Result<()> {
        if !self.has_port(port) {
            return Err(NocError::Topology {
                router: self.coord,
                port,
            });
        }
        let out = xy_route(self.coord, flit.dst);
        if !self.has_port(out) || out == port {
            return Err(NocError::Topology {
                router: self.coord,
                port: out,
            });
        }
        let slot = &mut self.latches[port.index()];
        if slot.is_some() {
            return Err(NocError::Config(format!(
                "input {port} of router {} overrun",
                self.coord
            )));
        }
        *slot = Some(Latched { flit, out, since });
        Ok(())
    }

    /// Phase one: each output with an empty register grants at most one
    /// latched flit.
    pub fn arbitrate(&mut self, now: u64) -> Result<Vec<Grant>> {
        let mut grants = Vec::new();
        for out in PortId::ALL {
            let Some(output) = self.outputs[out.index()].as_mut() else {
                continue;
            };
            if output.stage.is_some() {
                continue;
            }
            let requests: Vec<PortId> = PortId::ALL
                .iter()
                .copied()
                .filter(|p| {
                    matches!(self.latches[p.index()], Some(l) if l.out == out && l.since <= now)
                })
                .collect();
            let winner = match &mut output.policy {
                Policy::Interleave(arb) => arb.grant(&requests)?,
                Policy::Wormhole {
                    inputs,
                    owner,
                    pointer,
                } => {
                    let latches = &self.latches;
                    wormhole_pick(inputs, owner, pointer, &requests, |p| {
                        latches[p.index()].expect("requesting latch").flit
                    })
                }
            };
            if let Some(input) = winner {
                let latched = self.latches[input.index()].take().expect("granted latch");
                output.stage = Some(Staged {
                    flit: latched.flit,
                    granted_at: now,
                });
                grants.push(Grant {
                    input,
                    output: out,
                    flit: latched.flit,
                });
            }
        }
        Ok(grants)
    }

    /// Outputs holding a flit that may leave this cycle.
    pub fn ready_outputs(&self, now: u64) -> Vec<PortId> {
        PortId::ALL
            .iter()
            .copied()
            .filter(|p| {
                matches!(&self.outputs[p.index()], Some(Output { stage: Some(s), .. }) if s.granted_at < now)
            })
            .collect()
    }

    /// Phase two: hand the flit on output `out` to the downstream side.
    pub fn take_output(&mut self, out: PortId) -> Option<Flit> {
        self.outputs[out.index()]
            .as_mut()?
            .stage
            .take()
            .map(|s| s.flit)
    }

    /// One full cycle for a stand-alone router: arbitrate, emit on outputs
    /// whose downstream is ready, then latch `incoming` (eligible next
    /// cycle).
    pub fn cycle(
        &mut self,
        now: u64,
        incoming: &[(PortId, Flit)],
        downstream_ready: impl Fn(PortId) -> bool,
    ) -> Result<Vec<(PortId, Flit)>> {
        for (p, _) in incoming {
            if !self.has_port(*p) {
                return Err(NocError::Topology {
                    router: self.coord,
                    port: *p,
                });
            }
        }
        self.arbitrate(now)?;
        let mut out = Vec::new();
        for p in self.ready_outputs(now) {
            if downstream_ready(p) {
                out.push((p, self.take_output(p).expect("ready output")));
            }
        }
        for &(p, flit) in incoming {
            self.accept(p, flit, now + 1)?;
        }
        Ok(out)
    }
}

fn wormhole_pick(
    inputs: &[PortId],
    owner: &mut Option<PortId>,
    pointer: &mut usize,
    requests: &[PortId],
    flit_of: impl Fn(PortId) -> Flit,
) -> Option<PortId> {
    if let Some(o) = *owner {
        if !requests.contains(&o) {
            return None;
        }
        if flit_of(o).kind.is_tail() {
            *owner = None;
        }
        return Some(o);
    }
    let n = inputs.len();
    let winner = (1..=n)
        .map(|k| (*pointer + k) % n)
        .find(|&i| requests.contains(&inputs[i]) && flit_of(inputs[i]).kind.is_head())?;
    *pointer = winner;
    let w = inputs[winner];
    if !flit_of(w).kind.is_tail() {
        *owner = Some(w);
    }
    Some(w)
}
