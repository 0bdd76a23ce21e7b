//! Per-router decision procedures: XY output selection and the output
//! channel arbiter.
//!
//! The arbiter is a weighted round-robin over input channels. Cardinal
//! channels (the ones that can carry traffic merged from other routers)
//! start ahead of the diagonal ones and may hold the grant for up to
//! `credit` consecutive flits while they keep requesting. Any other
//! channel drops to the lowest priority as soon as it is served.

use std::collections::BTreeMap;

use crate::error::{NocError, Result};
use crate::model::{Address, Coord, PortId};

/// Output port selected by dimension-order routing: X is corrected first,
/// then Y, then the flit leaves on the destination core's port.
pub fn xy_route(current: Coord, dst: Address) -> PortId {
    use std::cmp::Ordering::*;
    match (dst.router.x.cmp(&current.x), dst.router.y.cmp(&current.y)) {
        (Greater, _) => PortId::EE,
        (Less, _) => PortId::WW,
        (Equal, Greater) => PortId::NN,
        (Equal, Less) => PortId::SS,
        (Equal, Equal) => dst.port,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArbiterState {
    /// Registered input channels, most preferred first.
    order: Vec<PortId>,
    /// Sequential-grant budget of each priority channel.
    budget: BTreeMap<PortId, u32>,
    /// Channel currently spending its budget and how many grants it used.
    burst: Option<(PortId, u32)>,
    last_granted: Option<PortId>,
}

/// Builds the start-up arbiter state for one output channel.
///
/// `credit_config` may only name cardinal channels; cardinal channels it
/// leaves out get a budget of one flit.
pub fn init_arbiter(
    registered_inputs: &[PortId],
    credit_config: &BTreeMap<PortId, u32>,
) -> Result<ArbiterState> {
    if registered_inputs.is_empty() {
        return Err(NocError::Config("arbiter needs at least one input".into()));
    }
    for (i, p) in registered_inputs.iter().enumerate() {
        if registered_inputs[..i].contains(p) {
            return Err(NocError::Config(format!(
                "input channel {p} registered twice"
            )));
        }
    }
    for (&p, &c) in credit_config {
        if !p.is_cardinal() {
            return Err(NocError::Config(format!(
                "credit given to non-priority channel {p}"
            )));
        }
        if c == 0 {
            return Err(NocError::Config(format!("zero credit for channel {p}")));
        }
    }
    let order: Vec<PortId> = PortId::CARDINAL
        .iter()
        .chain(PortId::DIAGONAL.iter())
        .copied()
        .filter(|p| registered_inputs.contains(p))
        .collect();
    let budget = order
        .iter()
        .filter(|p| p.is_cardinal())
        .map(|&p| (p, credit_config.get(&p).copied().unwrap_or(1)))
        .collect();
    Ok(ArbiterState {
        order,
        budget,
        burst: None,
        last_granted: None,
    })
}

impl ArbiterState {
    pub fn priority_order(&self) -> &[PortId] {
        &self.order
    }

    pub fn last_granted(&self) -> Option<PortId> {
        self.last_granted
    }

    pub fn is_registered(&self, port: PortId) -> bool {
        self.order.contains(&port)
    }

    /// Configured sequential budget; zero for non-priority channels.
    pub fn credit(&self, port: PortId) -> u32 {
        self.budget.get(&port).copied().unwrap_or(0)
    }

    /// Grants left before `port` yields, counting the one it would take next.
    pub fn remaining_credit(&self, port: PortId) -> u32 {
        match self.burst {
            Some((p, used)) if p == port => self.credit(port) - used,
            _ => self.credit(port),
        }
    }

    /// Sum of all configured priority budgets.
    pub fn total_credit(&self) -> u32 {
        self.budget.values().sum()
    }

    fn demote(&mut self, port: PortId) {
        if let Some(i) = self.order.iter().position(|&p| p == port) {
            let p = self.order.remove(i);
            self.order.push(p);
        }
    }

    /// One arbitration round. Returns the granted channel, if any, and
    /// updates the priority state.
    pub fn grant(&mut self, requests: &[PortId]) -> Result<Option<PortId>> {
        if let Some(&bad) = requests.iter().find(|p| !self.is_registered(**p)) {
            return Err(NocError::Protocol(bad));
        }
        if requests.is_empty() {
            return Ok(None);
        }
        // A burst only continues through back-to-back requests.
        if let Some((p, _)) = self.burst {
            if !requests.contains(&p) {
                self.burst = None;
                self.demote(p);
            }
        }
        let winner = match self.burst {
            Some((p, _)) => p,
            None => *self
                .order
                .iter()
                .find(|p| requests.contains(p))
                .expect("some request is registered"),
        };
        let budget = self.credit(winner);
        if budget == 0 {
            self.demote(winner);
        } else {
            let used = match self.burst {
                Some((p, used)) if p == winner => used + 1,
                _ => 1,
            };
            if used >= budget {
                self.burst = None;
                self.demote(winner);
            } else {
                self.burst = Some((winner, used));
            }
        }
        self.last_granted = Some(winner);
        Ok(Some(winner))
    }
}

/// Functional form of [`ArbiterState::grant`].
pub fn arbiter_grant(
    state: &ArbiterState,
    requests: &[PortId],
) -> Result<(Option<PortId>, ArbiterState)> {
    let mut next = state.clone();
    let granted = next.grant(requests)?;
    Ok((granted, next))
}
