//! Event-level execution of the broadcast protocol and Monte Carlo estimation.
//!
//! Protocol per trial: the source at 0 broadcasts `+1`; then, one at a time, a
//! relay chosen uniformly among those holding at least one copy and not yet
//! transmitted fuses its inbox by majority vote, tampers with the result if
//! malicious, and broadcasts once. Every reception is an independent
//! Bernoulli(g(distance)) draw taken in position order, destination last. The
//! destination never transmits; it fuses everything it heard at the end.

use rand::Rng;
use rayon::prelude::*;

use crate::connectivity::ConnectionModel;
use crate::error::{invalid, Result};
use crate::estimate::Estimate;
use crate::fusion::{apply_malice, majority_vote, Inbox, Message};
use crate::rng::{self, domain};
use crate::topology::{sample_topology, Scenario, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub broadcasts_made: u32,
    pub destination_inbox_size: u32,
    pub destination_tie: bool,
}

/// How relay malice is decided when running on a fixed topology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureMalice {
    /// Use the flags stored in the topology.
    Fixed,
    /// Redraw every flag as Bernoulli(p) each trial.
    Random(f64),
}

#[inline]
fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    }
}

/// One trial on a freshly sampled road.
pub fn run_trial<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> TrialOutcome {
    let topology = sample_topology(scenario, rng);
    run_on_topology(&topology, &scenario.model, rng)
}

/// One trial on a given road with its stored malice flags.
pub fn run_on_topology<R: Rng + ?Sized>(
    topology: &Topology,
    model: &ConnectionModel,
    rng: &mut R,
) -> TrialOutcome {
    let positions = topology.positions();
    let malicious = topology.malicious();
    let road_length = topology.road_length();
    let n = positions.len();

    let mut inbox = vec![Inbox::default(); n];
    let mut transmitted = vec![false; n];
    let mut eligible: Vec<usize> = Vec::with_capacity(n);
    let mut destination = Inbox::default();

    // Receivers out of range can be skipped for the unit disk: their draw
    // would be a certain failure that consumes no randomness.
    let window = |from: f64| -> (usize, usize) {
        match *model {
            ConnectionModel::UnitDisk { range_m } => (
                positions.partition_point(|&p| p < from - range_m),
                positions.partition_point(|&p| p <= from + range_m),
            ),
            ConnectionModel::LogNormal { .. } => (0, n),
        }
    };

    let deliver = |from: f64,
                   message: Message,
                   rng: &mut R,
                   inbox: &mut [Inbox],
                   transmitted: &[bool],
                   eligible: &mut Vec<usize>,
                   destination: &mut Inbox| {
        let (lo, hi) = window(from);
        for j in lo..hi {
            if transmitted[j] {
                continue;
            }
            if bernoulli(
                model.link_probability_unchecked((positions[j] - from).abs()),
                rng,
            ) {
                if inbox[j].is_empty() {
                    eligible.push(j);
                }
                inbox[j].receive(message);
            }
        }
        if bernoulli(model.link_probability_unchecked(road_length - from), rng) {
            destination.receive(message);
        }
    };

    deliver(
        0.0,
        Message::True,
        rng,
        &mut inbox,
        &transmitted,
        &mut eligible,
        &mut destination,
    );

    let mut broadcasts_made = 0;
    while !eligible.is_empty() {
        let pick = rng.random_range(0..eligible.len());
        let relay = eligible.swap_remove(pick);
        transmitted[relay] = true;
        let fused = majority_vote(&inbox[relay], rng);
        let sent = apply_malice(fused, malicious[relay]);
        broadcasts_made += 1;
        deliver(
            positions[relay],
            sent,
            rng,
            &mut inbox,
            &transmitted,
            &mut eligible,
            &mut destination,
        );
    }

    let destination_tie = destination.is_tie();
    let success = majority_vote(&destination, rng) == Message::True;
    TrialOutcome {
        success,
        broadcasts_made,
        destination_inbox_size: destination.len(),
        destination_tie,
    }
}

/// Averages over trials, kept as integer sums so any aggregation order agrees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub successes: u64,
    pub broadcasts: u64,
    pub destination_receptions: u64,
    pub destination_ties: u64,
}

impl Tally {
    fn of(o: TrialOutcome) -> Self {
        Tally {
            trials: 1,
            successes: o.success as u64,
            broadcasts: o.broadcasts_made as u64,
            destination_receptions: o.destination_inbox_size as u64,
            destination_ties: o.destination_tie as u64,
        }
    }

    fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            broadcasts: self.broadcasts + o.broadcasts,
            destination_receptions: self.destination_receptions + o.destination_receptions,
            destination_ties: self.destination_ties + o.destination_ties,
        }
    }

    pub fn mean_broadcasts(&self) -> f64 {
        self.broadcasts as f64 / self.trials as f64
    }

    pub fn mean_destination_inbox(&self) -> f64 {
        self.destination_receptions as f64 / self.trials as f64
    }

    pub fn destination_tie_rate(&self) -> f64 {
        self.destination_ties as f64 / self.trials as f64
    }
}

/// Runs `trials` independent trials; trial `i` draws from stream `(master_seed, i)`.
pub fn run_trials<F>(trials: u64, master_seed: u64, trial: F) -> Result<Tally>
where
    F: Fn(&mut rng::StreamRng) -> TrialOutcome + Sync,
{
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|i| Tally::of(trial(&mut rng::stream(master_seed, domain::TRIAL, i))))
        .reduce(Tally::default, Tally::merge))
}

pub fn estimate_p_succ(scenario: &Scenario, trials: u64, master_seed: u64) -> Result<Estimate> {
    estimate_with_diagnostics(scenario, trials, master_seed).map(|(e, _)| e)
}

pub fn estimate_with_diagnostics(
    scenario: &Scenario,
    trials: u64,
    master_seed: u64,
) -> Result<(Estimate, Tally)> {
    scenario.validate()?;
    let tally = run_trials(trials, master_seed, |rng| run_trial(scenario, rng))?;
    Ok((
        Estimate::from_successes(tally.successes, trials, master_seed),
        tally,
    ))
}

/// Monte Carlo on a fixed road instead of sampled ones.
pub fn estimate_on_topology(
    topology: &Topology,
    model: &ConnectionModel,
    malice: FixtureMalice,
    trials: u64,
    master_seed: u64,
) -> Result<Estimate> {
    model.validate()?;
    if let FixtureMalice::Random(p) = malice {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!(
                "malice probability must lie in [0, 1], got {p}"
            )));
        }
    }
    let tally = run_trials(trials, master_seed, |rng| match malice {
        FixtureMalice::Fixed => run_on_topology(topology, model, rng),
        FixtureMalice::Random(p) => {
            let flags = (0..topology.len()).map(|_| rng.random_bool(p)).collect();
            let t = topology.with_malice(flags).expect("same cardinality");
            run_on_topology(&t, model, rng)
        }
    })?;
    Ok(Estimate::from_successes(
        tally.successes,
        trials,
        master_seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(r: f64) -> ConnectionModel {
        ConnectionModel::unit_disk(r).unwrap()
    }

    #[test]
    fn honest_fully_connected_always_succeeds() {
        let s = Scenario::new(1000.0, 0.01, 0.0, unit(1500.0)).unwrap();
        let e = estimate_p_succ(&s, 2000, 5).unwrap();
        assert_eq!(e.p_succ, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn empty_road_out_of_range_is_a_coin() {
        let t = Topology::new(1000.0, vec![], vec![]).unwrap();
        let e = estimate_on_topology(&t, &unit(250.0), FixtureMalice::Fixed, 40_000, 9).unwrap();
        assert!((e.p_succ - 0.5).abs() <= 3.0 * e.stderr + 1e-9, "{e:?}");
        let mut r = rng::stream(1, 0, 0);
        let o = run_on_topology(&t, &unit(250.0), &mut r);
        assert_eq!(
            (
                o.broadcasts_made,
                o.destination_inbox_size,
                o.destination_tie
            ),
            (0, 0, true)
        );
    }

    #[test]
    fn single_relay_fixed_flags() {
        let m = unit(2000.0);
        let honest = Topology::new(1000.0, vec![500.0], vec![false]).unwrap();
        let mut r = rng::stream(1, 0, 0);
        let o = run_on_topology(&honest, &m, &mut r);
        assert_eq!(
            o,
            TrialOutcome {
                success: true,
                broadcasts_made: 1,
                destination_inbox_size: 2,
                destination_tie: false
            }
        );
        let rogue = honest.with_malice(vec![true]).unwrap();
        let o = run_on_topology(&rogue, &m, &mut r);
        assert!(o.destination_tie);
    }

    #[test]
    fn single_relay_random_malice() {
        let t = Topology::new(1000.0, vec![500.0], vec![false]).unwrap();
        let e = estimate_on_topology(&t, &unit(2000.0), FixtureMalice::Random(0.2), 100_000, 4)
            .unwrap();
        assert!((e.p_succ - 0.9).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn trials_are_deterministic() {
        let s = Scenario::new(
            3000.0,
            0.05,
            0.1,
            ConnectionModel::log_normal(250.0, 2.0, 4.0).unwrap(),
        )
        .unwrap();
        let a = run_trial(&s, &mut rng::stream(77, domain::TRIAL, 3));
        let b = run_trial(&s, &mut rng::stream(77, domain::TRIAL, 3));
        assert_eq!(a, b);
        let (e1, t1) = estimate_with_diagnostics(&s, 200, 8).unwrap();
        let (e2, t2) = estimate_with_diagnostics(&s, 200, 8).unwrap();
        assert_eq!((e1, t1), (e2, t2));
    }

    #[test]
    fn broadcasts_bounded_by_relays() {
        let s = Scenario::new(2000.0, 0.02, 0.3, unit(250.0)).unwrap();
        for i in 0..300 {
            let mut r = rng::stream(3, domain::TRIAL, i);
            let t = sample_topology(&s, &mut r);
            let o = run_on_topology(&t, &s.model, &mut r);
            assert!(o.broadcasts_made as usize <= t.len());
        }
    }

    #[test]
    fn honest_relays_never_go_below_half() {
        let s = Scenario::new(2000.0, 0.01, 0.0, unit(250.0)).unwrap();
        let e = estimate_p_succ(&s, 5000, 2).unwrap();
        assert!(e.p_succ >= 0.5 - 3.0 * e.stderr);
    }

    #[test]
    fn zero_trials_rejected() {
        let s = Scenario::new(100.0, 0.01, 0.0, unit(250.0)).unwrap();
        assert!(estimate_p_succ(&s, 0, 1).is_err());
    }
}
