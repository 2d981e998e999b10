//! Exact success probability on tiny fixed roads, by weighted enumeration of
//! every random choice the protocol makes: which eligible relay transmits next
//! (uniform), every reception bit (Bernoulli(g)), every fusion tie coin and
//! the destination's final tie coin.
//!
//! Branches that reach the same protocol state are merged through a memo
//! table of the value function `Pr(success | state)`.

use std::collections::HashMap;

use crate::connectivity::ConnectionModel;
use crate::error::{Error, Result};
use crate::fusion::{apply_malice, Inbox, Message};
use crate::topology::Topology;

/// Largest relay count the enumeration accepts.
pub const MAX_ORACLE_RELAYS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProtocolState {
    /// Inboxes of relays that have not transmitted; transmitted relays keep
    /// an empty inbox since nothing they receive matters any more.
    pub inboxes: Vec<Inbox>,
    /// Bit `i` set once relay `i` has transmitted.
    pub transmitted: u32,
    pub destination: Inbox,
}

struct Enumerator<'a> {
    positions: &'a [f64],
    malicious: &'a [bool],
    road_length: f64,
    model: &'a ConnectionModel,
    payoff: fn(&Inbox) -> f64,
    memo: HashMap<ProtocolState, f64>,
}

impl Enumerator<'_> {
    fn g(&self, a: f64, b: f64) -> f64 {
        self.model.link_probability_unchecked((a - b).abs())
    }

    fn value(&mut self, state: &ProtocolState) -> f64 {
        if let Some(&v) = self.memo.get(state) {
            return v;
        }
        let eligible: Vec<usize> = (0..self.positions.len())
            .filter(|&i| state.transmitted & (1 << i) == 0 && !state.inboxes[i].is_empty())
            .collect();
        let v = if eligible.is_empty() {
            (self.payoff)(&state.destination)
        } else {
            let pick = 1.0 / eligible.len() as f64;
            let mut acc = 0.0;
            for &relay in &eligible {
                let inbox = state.inboxes[relay];
                let fused: Vec<(Message, f64)> = match inbox.majority() {
                    Some(m) => vec![(m, 1.0)],
                    None => vec![(Message::True, 0.5), (Message::False, 0.5)],
                };
                let mut after = state.clone();
                after.transmitted |= 1 << relay;
                after.inboxes[relay] = Inbox::default();
                for (m, w) in fused {
                    let sent = apply_malice(m, self.malicious[relay]);
                    acc += pick * w * self.deliver(&after, self.positions[relay], sent);
                }
            }
            acc
        };
        self.memo.insert(state.clone(), v);
        v
    }

    /// Expected value after `message` is broadcast from `from`, summed over
    /// every reception outcome among pending relays and the destination.
    fn deliver(&mut self, state: &ProtocolState, from: f64, message: Message) -> f64 {
        let receivers: Vec<usize> = (0..self.positions.len())
            .filter(|&i| state.transmitted & (1 << i) == 0)
            .collect();
        let mut acc = 0.0;
        let mut next = state.clone();
        self.receptions(&receivers, 0, 1.0, from, message, &mut next, &mut acc);
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn receptions(
        &mut self,
        receivers: &[usize],
        idx: usize,
        weight: f64,
        from: f64,
        message: Message,
        next: &mut ProtocolState,
        acc: &mut f64,
    ) {
        if idx == receivers.len() {
            let p = self.g(self.road_length, from);
            if p < 1.0 {
                *acc += weight * (1.0 - p) * self.value(next);
            }
            if p > 0.0 {
                let saved = next.destination;
                next.destination.receive(message);
                *acc += weight * p * self.value(next);
                next.destination = saved;
            }
            return;
        }
        let r = receivers[idx];
        let p = self.g(self.positions[r], from);
        if p < 1.0 {
            self.receptions(
                receivers,
                idx + 1,
                weight * (1.0 - p),
                from,
                message,
                next,
                acc,
            );
        }
        if p > 0.0 {
            let saved = next.inboxes[r];
            next.inboxes[r].receive(message);
            self.receptions(receivers, idx + 1, weight * p, from, message, next, acc);
            next.inboxes[r] = saved;
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_RELAYS {
        return Err(Error::Infeasible {
            what: "exact enumeration",
            required: n,
            ceiling: MAX_ORACLE_RELAYS,
        });
    }
    Ok(())
}

fn run(topology: &Topology, model: &ConnectionModel, payoff: fn(&Inbox) -> f64) -> Result<f64> {
    model.validate()?;
    check_size(topology.len())?;
    let mut e = Enumerator {
        positions: topology.positions(),
        malicious: topology.malicious(),
        road_length: topology.road_length(),
        model,
        payoff,
        memo: HashMap::new(),
    };
    let start = ProtocolState {
        inboxes: vec![Inbox::default(); topology.len()],
        transmitted: 0,
        destination: Inbox::default(),
    };
    Ok(e.deliver(&start, 0.0, Message::True))
}

fn destination_decides_true(inbox: &Inbox) -> f64 {
    match inbox.majority() {
        Some(Message::True) => 1.0,
        Some(Message::False) => 0.0,
        None => 0.5,
    }
}

/// Exact `Pr(M_D = +1)` for fixed positions and malice flags.
pub fn exact_p_succ_fixed(topology: &Topology, model: &ConnectionModel) -> Result<f64> {
    run(topology, model, destination_decides_true)
}

/// Total probability over all terminal branches; 1 up to rounding.
pub fn total_path_probability(topology: &Topology, model: &ConnectionModel) -> Result<f64> {
    run(topology, model, |_| 1.0)
}

/// Exact `Pr(M_D = +1)` for fixed positions with i.i.d. Bernoulli(p_m) malice.
pub fn exact_p_succ_marginal(
    topology: &Topology,
    model: &ConnectionModel,
    p_m: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_m) {
        return Err(crate::error::invalid(format!(
            "malice probability must lie in [0, 1], got {p_m}"
        )));
    }
    let n = topology.len();
    check_size(n)?;
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let flags: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
        let bad = flags.iter().filter(|&&f| f).count() as i32;
        let weight = p_m.powi(bad) * (1.0 - p_m).powi(n as i32 - bad);
        if weight == 0.0 {
            continue;
        }
        total += weight * exact_p_succ_fixed(&topology.with_malice(flags)?, model)?;
    }
    Ok(total)
}
