//! Closed-form latency models.
//!
//! Three families live here:
//!
//! * contention-free and best-effort packet latency (`T_h + F/b` and its
//!   topology and occupied-bandwidth refinements),
//! * the interleaving worst-case latency: a header bound summed over hops,
//!   a payload/tail bound driven by destination contention and an
//!   end-point buffer term,
//! * the slot-table (TDM) throughput model used to derive best-effort
//!   bandwidth for the comparison network.
//!
//! Cycle-valued inputs are `f64` where the models admit fractional
//! bandwidths; worst-case bounds are exact integers.

use crate::error::{NocError, Result};
use crate::model::FlowSpec;
use crate::network::Network;

/// Cycles an interleaving router takes per arbitration grant. One flit is
/// forwarded every grant period, so a channel delivers 1/2 flit per cycle.
pub const GRANT_PERIOD: u64 = 2;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(NocError::Domain(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `T_h + F / b`.
pub fn latency_basic(header_time: f64, flits: f64, bandwidth: f64) -> Result<f64> {
    positive("bandwidth", bandwidth)?;
    Ok(header_time + flits / bandwidth)
}

/// Header time from hop count and router delay, plus serialisation.
pub fn latency_topo(hops: u32, router_delay: f64, flits: f64, bandwidth: f64) -> Result<f64> {
    latency_basic(hops as f64 * router_delay, flits, bandwidth)
}

/// Best-effort wormhole latency when `occupied` of the channel bandwidth is
/// taken by other flows.
pub fn latency_wormhole_be(
    hops: u32,
    router_delay: f64,
    flits: f64,
    bandwidth: f64,
    occupied: f64,
) -> Result<f64> {
    positive("bandwidth", bandwidth)?;
    if occupied < 0.0 {
        return Err(NocError::Domain(format!(
            "occupied bandwidth {occupied} is negative"
        )));
    }
    if occupied >= bandwidth {
        return Err(NocError::Saturated {
            occupied,
            available: bandwidth,
        });
    }
    latency_topo(hops, router_delay, flits, bandwidth - occupied)
}

/// Interleaving latency with `contenders` packets sharing every router on
/// the path. Independent of how much bandwidth the contenders offer.
pub fn latency_interleave(
    hops: u32,
    router_delay: f64,
    contenders: u32,
    flits: f64,
    bandwidth: f64,
) -> Result<f64> {
    positive("bandwidth", bandwidth)?;
    if contenders == 0 {
        return Err(NocError::Domain(
            "at least one contender (the flow itself) is required".into(),
        ));
    }
    Ok(hops as f64 * router_delay + contenders as f64 * (flits / bandwidth))
}

/// Network and core components of a transaction, in cycles.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TransactionParams {
    pub wait_request: f64,
    pub request: f64,
    pub wait_reply: f64,
    pub reply: f64,
    pub core: f64,
}

/// Returns `(T_noc, T_transaction)`. A write without reply leaves the
/// reply terms at zero.
pub fn transaction_time(p: &TransactionParams) -> (f64, f64) {
    let noc = p.wait_request + p.request + p.wait_reply + p.reply;
    (noc, noc + p.core)
}

/// Header worst case: every hop costs one grant period per contender.
pub fn header_wcl(contenders_per_hop: &[u32]) -> Result<u64> {
    if contenders_per_hop.is_empty() {
        return Err(NocError::Domain("a path has at least one hop".into()));
    }
    if let Some(i) = contenders_per_hop.iter().position(|&n| n == 0) {
        return Err(NocError::Domain(format!("hop {i} has zero contenders")));
    }
    Ok(contenders_per_hop
        .iter()
        .map(|&n| GRANT_PERIOD * n as u64)
        .sum())
}

/// Payload and tail worst case: each of the `f - 1` trailing flits waits
/// for one flit of every flow contending for the destination.
pub fn payload_tail_wcl(dest_contenders: u32, flits: u32) -> u64 {
    GRANT_PERIOD * dest_contenders as u64 * flits.saturating_sub(1) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WclBreakdown {
    pub header: u64,
    pub payload_tail: u64,
    pub buffers: u64,
}

impl WclBreakdown {
    pub fn total(&self) -> u64 {
        self.header + self.payload_tail + self.buffers
    }
}

pub fn packet_wcl_breakdown(
    contenders_per_hop: &[u32],
    dest_contenders: u32,
    flits: u32,
    fifo_depth: u64,
) -> Result<WclBreakdown> {
    if dest_contenders == 0 || flits == 0 {
        return Err(NocError::Domain("k and f must be at least 1".into()));
    }
    Ok(WclBreakdown {
        header: header_wcl(contenders_per_hop)?,
        payload_tail: payload_tail_wcl(dest_contenders, flits),
        // Both end-point FIFOs may hold foreign flits.
        buffers: 2 * fifo_depth,
    })
}

/// Worst-case packet latency in cycles.
pub fn packet_wcl(
    contenders_per_hop: &[u32],
    dest_contenders: u32,
    flits: u32,
    fifo_depth: u64,
) -> Result<u64> {
    packet_wcl_breakdown(contenders_per_hop, dest_contenders, flits, fifo_depth).map(|b| b.total())
}

/// Worst-case latency of `flows[target]` in `net`, for its largest packet.
///
/// The end-point buffer term counts the interface depth only when the
/// destination does not read every cycle; a destination that drains each
/// flit on arrival never leaves foreign flits queued ahead.
pub fn wcl_for_flow(net: &Network, flows: &[FlowSpec], target: usize) -> Result<WclBreakdown> {
    let profile = net.contention_profile(flows, target)?;
    let f = flows[target].size.max_len();
    packet_wcl_breakdown(
        &profile.n,
        profile.k,
        f,
        net.effective_buffer_depth() as u64,
    )
}

/// Slot-table configuration of a TDM network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdmParams {
    /// Slots reserved for the circuit under analysis.
    pub slots: u32,
    /// Packets per transaction.
    pub packets: u32,
    /// Slot-table period.
    pub period: u32,
    /// Slot duration in cycles.
    pub slot_cycles: u32,
    /// Guaranteed-service flows, one slot each.
    pub gs_flows: u32,
    /// Fraction of its slot each GS flow actually uses.
    pub gs_utilization: f64,
    /// Whether best-effort traffic may use idle GS slot time.
    pub slot_reuse: bool,
}

impl TdmParams {
    /// One best-effort slot out of four, three GS flows at 60 %.
    pub fn comparison_default() -> Self {
        Self {
            slots: 1,
            packets: 1,
            period: 4,
            slot_cycles: 1,
            gs_flows: 3,
            gs_utilization: 0.6,
            slot_reuse: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.period == 0 || self.slot_cycles == 0 {
            return Err(NocError::Domain(
                "slot period and duration must be non-zero".into(),
            ));
        }
        if self.slots > self.period {
            return Err(NocError::Domain(format!(
                "{} slots do not fit a period of {}",
                self.slots, self.period
            )));
        }
        if !(0.0..=1.0).contains(&self.gs_utilization) {
            return Err(NocError::Domain(format!(
                "GS utilisation {} outside [0, 1]",
                self.gs_utilization
            )));
        }
        Ok(())
    }
}

/// `(p * n) / (P * s)` flits per cycle.
pub fn tdm_throughput(p: &TdmParams) -> Result<f64> {
    p.validate()?;
    Ok((p.slots as f64 * p.packets as f64) / (p.period as f64 * p.slot_cycles as f64))
}

/// Bandwidth left for best-effort traffic: its own slots, plus the unused
/// share of every GS slot when reuse is enabled.
pub fn tdm_be_bandwidth(p: &TdmParams) -> Result<f64> {
    let own = tdm_throughput(p)?;
    if !p.slot_reuse {
        return Ok(own);
    }
    let per_slot = tdm_throughput(&TdmParams { slots: 1, ..*p })?;
    Ok(own + p.gs_flows as f64 * (1.0 - p.gs_utilization) * per_slot)
}

/// Best-effort latency on a TDM network with `occupied` flits/cycle of the
/// best-effort bandwidth already taken by other flows.
pub fn tdm_be_latency(
    hops: u32,
    router_delay: f64,
    flits: u32,
    p: &TdmParams,
    occupied: f64,
) -> Result<f64> {
    let b = tdm_be_bandwidth(p)?;
    latency_wormhole_be(hops, router_delay, flits as f64, b, occupied)
}

/// Smallest load in `(lo, hi)` at which `f` rises past `level`, found by
/// bisection. `f` must be increasing on the interval.
pub fn crossing_load(f: impl Fn(f64) -> f64, level: f64, lo: f64, hi: f64) -> Option<f64> {
    if f(lo) >= level || f(hi) < level {
        return None;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(m) < level {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
