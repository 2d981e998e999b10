//! Analytical evaluation of the success probability.
//!
//! The evaluation conditions on the number of relays `n` (Poisson weights,
//! truncated with a certified tail) and on the broadcast locations
//! `y_1..y_n` listed in broadcast order. Given the locations, the success
//! probability is computed exactly over the message and reception dimensions:
//!
//! * relay `i` sees a vote `1 + sum_{j<i} m_j B_ij` with independent
//!   `B_ij ~ Bernoulli(g(|y_i - y_j|))`; the leading `1` is the source, which
//!   every relay counts;
//! * it sends `+1` with probability `(1 - p_m)` on a positive vote, `p_m` on a
//!   negative vote and `1/2` on a tie;
//! * the destination's vote is `h_0 + sum_i h_i m_i` with
//!   `h_0 ~ Bernoulli(g(L))`, `h_i ~ Bernoulli(g(L - y_i))`.
//!
//! Vote sums are carried as [`VoteDistribution`]s built by convolution, so no
//! reception subset is ever enumerated. Locations are integrated either by
//! nested grid quadrature (small `n`) or by averaging the exact conditional
//! probability over sampled layouts.

use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use rand::Rng;
use rayon::prelude::*;

use crate::connectivity::ConnectionModel;
use crate::error::{invalid, Error, Result};
use crate::estimate::{Estimate, Method};
use crate::fusion::Message;
use crate::rng::{self, domain};
use crate::topology::{poisson_pmf, poisson_tail, truncation_bound, Scenario};

/// Default ceiling on the relay count the analytic route will evaluate.
pub const DEFAULT_MAX_RELAYS: usize = 12;

/// Broadcast locations `y_1..y_n` in broadcast order (not spatial order).
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastLayout {
    positions: Vec<f64>,
}

impl BroadcastLayout {
    pub fn new(positions: Vec<f64>, road_length: f64) -> Result<Self> {
        if let Some(&p) = positions.iter().find(|&&p| !(p > 0.0 && p < road_length)) {
            return Err(invalid(format!(
                "broadcast position {p} is outside (0, {road_length})"
            )));
        }
        Ok(BroadcastLayout { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Distribution of an integer vote sum, stored densely from `offset` upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteDistribution {
    offset: i32,
    probs: Vec<f64>,
}

impl VoteDistribution {
    pub fn point(value: i32) -> Self {
        VoteDistribution {
            offset: value,
            probs: vec![1.0],
        }
    }

    /// Adds `sign * B` with `B ~ Bernoulli(p)` independent of the current sum.
    pub fn add_bernoulli(&mut self, sign: i32, p: f64) {
        debug_assert!(sign == 1 || sign == -1);
        if p >= 1.0 {
            self.offset += sign;
            return;
        }
        if p <= 0.0 {
            return;
        }
        let q = 1.0 - p;
        // new[k] = stay * old[k] + carry * old[k - 1]
        let (stay, carry) = if sign > 0 { (q, p) } else { (p, q) };
        if sign < 0 {
            self.offset -= 1;
        }
        let mut prev = 0.0;
        for v in self.probs.iter_mut() {
            let old = *v;
            *v = stay * old + carry * prev;
            prev = old;
        }
        self.probs.push(carry * prev);
    }

    pub fn probability(&self, value: i32) -> f64 {
        let idx = value - self.offset;
        if idx < 0 {
            return 0.0;
        }
        self.probs.get(idx as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (self.offset + k as i32, p))
    }

    pub fn prob_positive(&self) -> f64 {
        self.iter().filter(|&(v, _)| v > 0).map(|(_, p)| p).sum()
    }

    pub fn prob_zero(&self) -> f64 {
        self.probability(0)
    }

    pub fn prob_negative(&self) -> f64 {
        self.iter().filter(|&(v, _)| v < 0).map(|(_, p)| p).sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Probability that a relay facing `vote` sends `+1`.
pub fn send_true_probability(vote: &VoteDistribution, malice_prob: f64) -> f64 {
    vote.prob_positive() * (1.0 - malice_prob)
        + vote.prob_negative() * malice_prob
        + 0.5 * vote.prob_zero()
}

/// Probability that the destination decides `+1` given its vote distribution.
pub fn decide_true_probability(vote: &VoteDistribution) -> f64 {
    vote.prob_positive() + 0.5 * vote.prob_zero()
}

fn check_prob(p_m: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p_m) {
        Ok(())
    } else {
        Err(invalid(format!(
            "malice probability must lie in [0, 1], got {p_m}"
        )))
    }
}

/// `Pr(M_i = +1 | M_1..M_{i-1} = prefix)` with `i = prefix.len() + 1`.
pub fn message_prefix_conditional(
    layout: &BroadcastLayout,
    model: &ConnectionModel,
    p_m: f64,
    prefix: &[Message],
) -> Result<f64> {
    check_prob(p_m)?;
    let i = prefix.len();
    let Some(&y_i) = layout.positions.get(i) else {
        return Err(invalid(format!(
            "prefix of length {i} leaves no relay to decide in a layout of {}",
            layout.len()
        )));
    };
    let mut vote = VoteDistribution::point(1);
    for (&y_j, m) in layout.positions.iter().zip(prefix) {
        vote.add_bernoulli(
            m.sign(),
            model.link_probability_unchecked((y_i - y_j).abs()),
        );
    }
    Ok(send_true_probability(&vote, p_m))
}

/// Joint probability of a full message assignment, by the chain rule.
pub fn message_vector_probability(
    layout: &BroadcastLayout,
    model: &ConnectionModel,
    p_m: f64,
    assignment: &[Message],
) -> Result<f64> {
    if assignment.len() != layout.len() {
        return Err(invalid(format!(
            "assignment has {} messages for {} relays",
            assignment.len(),
            layout.len()
        )));
    }
    let mut prob = 1.0;
    for i in 0..assignment.len() {
        let p_true = message_prefix_conditional(layout, model, p_m, &assignment[..i])?;
        prob *= match assignment[i] {
            Message::True => p_true,
            Message::False => 1.0 - p_true,
        };
    }
    Ok(prob)
}

/// `Pr(M_D = +1 | Y = layout)`.
///
/// Deterministic link models go through [`success_by_state_merging`]; the
/// rest through [`success_by_enumeration`]. Both are exact.
pub fn conditional_success_probability(
    layout: &BroadcastLayout,
    model: &ConnectionModel,
    p_m: f64,
    road_length: f64,
) -> Result<f64> {
    if model.is_deterministic() {
        success_by_state_merging(layout, model, p_m, road_length)
    } else {
        success_by_enumeration(layout, model, p_m, road_length)
    }
}

struct Links {
    /// `relay[k][j] = g(|y_k - y_j|)` for `j < k`.
    relay: Vec<Vec<f64>>,
    /// `g(L - y_i)`.
    destination: Vec<f64>,
    /// `g(L)`.
    source_to_destination: f64,
}

impl Links {
    fn new(layout: &BroadcastLayout, model: &ConnectionModel, road_length: f64) -> Links {
        let y = &layout.positions;
        Links {
            relay: (0..y.len())
                .map(|k| {
                    (0..k)
                        .map(|j| model.link_probability_unchecked((y[k] - y[j]).abs()))
                        .collect()
                })
                .collect(),
            destination: y
                .iter()
                .map(|&p| model.link_probability_unchecked(road_length - p))
                .collect(),
            source_to_destination: model.link_probability_unchecked(road_length),
        }
    }
}

/// Walks the `2^n` message assignments depth first, carrying the vote
/// distribution of every relay still to decide and of the destination.
pub fn success_by_enumeration(
    layout: &BroadcastLayout,
    model: &ConnectionModel,
    p_m: f64,
    road_length: f64,
) -> Result<f64> {
    check_prob(p_m)?;
    let n = layout.len();
    let links = Links::new(layout, model, road_length);

    let mut destination = VoteDistribution::point(0);
    destination.add_bernoulli(1, links.source_to_destination);
    // stack[d] is the state before relay d decides; only entries k >= d are live.
    let initial = (vec![VoteDistribution::point(1); n], destination);
    let mut stack = vec![initial; n + 1];

    Ok(enumerate(0, 1.0, &mut stack, &links, p_m))
}

fn enumerate(
    depth: usize,
    path: f64,
    stack: &mut Vec<(Vec<VoteDistribution>, VoteDistribution)>,
    links: &Links,
    p_m: f64,
) -> f64 {
    let n = links.destination.len();
    if depth == n {
        return path * decide_true_probability(&stack[depth].1);
    }
    let p_true = send_true_probability(&stack[depth].0[depth], p_m);
    let mut acc = 0.0;
    for (sign, q) in [(1, p_true), (-1, 1.0 - p_true)] {
        if q <= 0.0 {
            continue;
        }
        {
            let (head, tail) = stack.split_at_mut(depth + 1);
            let current = &head[depth];
            let next = &mut tail[0];
            for k in depth + 1..n {
                next.0[k].clone_from(&current.0[k]);
                next.0[k].add_bernoulli(sign, links.relay[k][depth]);
            }
            next.1.clone_from(&current.1);
            next.1.add_bernoulli(sign, links.destination[depth]);
        }
        acc += enumerate(depth + 1, path * q, stack, links, p_m);
    }
    acc
}

type StateMap =
    HashMap<Vec<i8>, f64, BuildHasherDefault<std::collections::hash_map::DefaultHasher>>;

/// Exact evaluation for links that are all certain or impossible.
///
/// Every vote is then an integer, so the process after relay `i` is fully
/// described by the pending votes of relays `i+1..n` plus the destination's.
/// Assignments reaching the same description are merged, and each pending
/// vote is clamped to `±(remaining contributors + 1)`, beyond which its sign
/// can no longer change.
pub fn success_by_state_merging(
    layout: &BroadcastLayout,
    model: &ConnectionModel,
    p_m: f64,
    road_length: f64,
) -> Result<f64> {
    check_prob(p_m)?;
    let links = Links::new(layout, model, road_length);
    let certain = |p: f64| -> Result<bool> {
        if p == 1.0 {
            Ok(true)
        } else if p == 0.0 {
            Ok(false)
        } else {
            Err(invalid(
                "state merging needs link probabilities of exactly 0 or 1",
            ))
        }
    };
    let n = layout.len();
    let hears: Vec<Vec<bool>> = links
        .relay
        .iter()
        .map(|row| row.iter().map(|&p| certain(p)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let dest_hears: Vec<bool> = links
        .destination
        .iter()
        .map(|&p| certain(p))
        .collect::<Result<_>>()?;
    let source_heard = certain(links.source_to_destination)?;

    // remaining[k][i]: contributors j with i <= j < k that relay k hears.
    let remaining: Vec<Vec<i32>> = (0..n)
        .map(|k| {
            (0..=n)
                .map(|i| (i..k).filter(|&j| hears[k][j]).count() as i32)
                .collect()
        })
        .collect();
    let dest_remaining: Vec<i32> = (0..=n)
        .map(|i| (i..n).filter(|&j| dest_hears[j]).count() as i32)
        .collect();
    let clamp = |v: i32, rem: i32| v.clamp(-(rem + 1), rem + 1);

    let mut key: Vec<i8> = (0..n).map(|k| clamp(1, remaining[k][0]) as i8).collect();
    key.push(clamp(source_heard as i32, dest_remaining[0]) as i8);
    let mut states = StateMap::default();
    states.insert(key, 1.0);

    for i in 0..n {
        let mut next = StateMap::default();
        next.reserve(states.len() * 2);
        for (key, prob) in &states {
            let vote = key[0] as i32;
            let p_true = match vote.signum() {
                1 => 1.0 - p_m,
                -1 => p_m,
                _ => 0.5,
            };
            for (sign, q) in [(1i32, p_true), (-1, 1.0 - p_true)] {
                if q <= 0.0 {
                    continue;
                }
                let mut child = Vec::with_capacity(key.len() - 1);
                for k in i + 1..n {
                    let mut v = key[k - i] as i32;
                    if hears[k][i] {
                        v += sign;
                    }
                    child.push(clamp(v, remaining[k][i + 1]) as i8);
                }
                let mut s = key[n - i] as i32;
                if dest_hears[i] {
                    s += sign;
                }
                child.push(clamp(s, dest_remaining[i + 1]) as i8);
                *next.entry(child).or_insert(0.0) += prob * q;
            }
        }
        states = next;
    }

    Ok(states
        .iter()
        .map(|(key, p)| match key[0].signum() {
            1 => *p,
            0 => 0.5 * p,
            _ => 0.0,
        })
        .sum())
}

/// A probability density tabulated at cell centers `(k + 1/2) h` of a uniform
/// partition of `(0, L)`, normalized so that `sum(values) * h = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub step: f64,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.step
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }
}

/// Per-cell probability that no broadcaster so far has reached the cell center.
struct ReachGrid {
    step: f64,
    unreached: Vec<f64>,
}

impl ReachGrid {
    fn new(road_length: f64, grid_step: f64) -> Result<ReachGrid> {
        if !(grid_step.is_finite() && grid_step > 0.0) {
            return Err(invalid(format!(
                "grid step must be positive, got {grid_step}"
            )));
        }
        if !(road_length.is_finite() && road_length > 0.0) {
            return Err(invalid(format!(
                "road length must be positive, got {road_length}"
            )));
        }
        let cells = (road_length / grid_step).ceil().max(1.0) as usize;
        Ok(ReachGrid {
            step: road_length / cells as f64,
            unreached: vec![1.0; cells],
        })
    }

    fn add_broadcaster(&mut self, y: f64, model: &ConnectionModel) {
        let h = self.step;
        match *model {
            ConnectionModel::UnitDisk { range_m } => {
                // Cells whose center lies within range of y.
                let lo = (((y - range_m) / h) - 0.5).ceil().max(0.0) as usize;
                let hi = ((((y + range_m) / h) - 0.5).floor() + 1.0)
                    .clamp(0.0, self.unreached.len() as f64) as usize;
                for k in lo..hi {
                    let x = (k as f64 + 0.5) * h;
                    if (x - y).abs() <= range_m {
                        self.unreached[k] = 0.0;
                    }
                }
            }
            ConnectionModel::LogNormal { .. } => {
                for (k, u) in self.unreached.iter_mut().enumerate() {
                    let x = (k as f64 + 0.5) * h;
                    *u *= 1.0 - model.link_probability_unchecked((x - y).abs());
                }
            }
        }
    }

    fn reach_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.unreached.iter().map(|u| 1.0 - u)
    }

    fn density(&self) -> Result<GridDensity> {
        let total: f64 = self.reach_weights().sum::<f64>() * self.step;
        if total <= 0.0 {
            return Err(Error::DisconnectedLayout);
        }
        Ok(GridDensity {
            step: self.step,
            values: self.reach_weights().map(|w| w / total).collect(),
        })
    }

    /// Inverse-CDF draw: pick a cell by weight, then a uniform point inside it.
    fn sample<R: Rng + ?Sized>(&self, road_length: f64, rng: &mut R) -> Result<f64> {
        let total: f64 = self.reach_weights().sum();
        if total <= 0.0 {
            return Err(Error::DisconnectedLayout);
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut cell = None;
        for (k, w) in self.reach_weights().enumerate() {
            if w <= 0.0 {
                continue;
            }
            cell = Some(k);
            acc += w;
            if acc > target {
                break;
            }
        }
        let k = cell.expect("positive total has a positive cell");
        loop {
            let y = (k as f64 + rng.random::<f64>()) * self.step;
            if y > 0.0 && y < road_length {
                return Ok(y);
            }
        }
    }
}

/// Density of the next broadcaster's location given earlier broadcasters at
/// `prior` (the source at 0 must be included): proportional to the
/// probability of having heard at least one of them.
pub fn next_broadcaster_density(
    prior: &[f64],
    model: &ConnectionModel,
    road_length: f64,
    grid_step: f64,
) -> Result<GridDensity> {
    let mut grid = ReachGrid::new(road_length, grid_step)?;
    for &y in prior {
        grid.add_broadcaster(y, model);
    }
    grid.density()
}

/// Draws `y_1..y_n` sequentially from the next-broadcaster densities.
pub fn sample_layout<R: Rng + ?Sized>(
    n: usize,
    model: &ConnectionModel,
    road_length: f64,
    grid_step: f64,
    rng: &mut R,
) -> Result<BroadcastLayout> {
    if n == 0 {
        return Err(invalid("a sampled layout needs at least one broadcaster"));
    }
    let mut grid = ReachGrid::new(road_length, grid_step)?;
    grid.add_broadcaster(0.0, model);
    let mut positions = Vec::with_capacity(n);
    for m in 0..n {
        let y = grid.sample(road_length, rng)?;
        positions.push(y);
        if m + 1 < n {
            grid.add_broadcaster(y, model);
        }
    }
    Ok(BroadcastLayout { positions })
}

/// How location space is integrated for a fixed relay count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayoutBudget {
    /// Layout samples for the Monte Carlo route.
    pub samples: u64,
    /// Use nested grid quadrature instead when `n <= QUADRATURE_MAX_RELAYS`.
    pub quadrature: bool,
}

pub const QUADRATURE_MAX_RELAYS: usize = 3;

/// `Pr(M_D = +1 | N = n)`.
pub fn analytic_p_succ_given_n(
    n: usize,
    scenario: &Scenario,
    budget: LayoutBudget,
    grid_step: f64,
    master_seed: u64,
) -> Result<Estimate> {
    scenario.validate()?;
    if budget.samples == 0 {
        return Err(invalid("layout budget must be at least one sample"));
    }
    let model = &scenario.model;
    let length = scenario.road_length;
    let p_m = scenario.malice_prob;
    if n == 0 {
        let g = model.link_probability_unchecked(length);
        return Ok(with_seed(
            Estimate::exact(g + 0.5 * (1.0 - g), Method::Analytic),
            master_seed,
        ));
    }
    if budget.quadrature && n <= QUADRATURE_MAX_RELAYS {
        let mut prior = vec![0.0];
        let p = quadrature(n, &mut prior, model, length, p_m, grid_step)?;
        return Ok(with_seed(Estimate::exact(p, Method::Analytic), master_seed));
    }

    let stream_domain = domain::LAYOUT.wrapping_add(n as u64);
    let values: Vec<f64> = (0..budget.samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(master_seed, stream_domain, s);
            let layout = sample_layout(n, model, length, grid_step, &mut rng)?;
            conditional_success_probability(&layout, model, p_m, length)
        })
        .collect::<Result<_>>()?;
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    Ok(Estimate::from_mean(
        mean,
        stderr,
        0.0,
        budget.samples,
        Method::Analytic,
        master_seed,
    ))
}

fn with_seed(mut e: Estimate, master_seed: u64) -> Estimate {
    e.master_seed = master_seed;
    e
}

fn quadrature(
    n: usize,
    prior: &mut Vec<f64>,
    model: &ConnectionModel,
    road_length: f64,
    p_m: f64,
    grid_step: f64,
) -> Result<f64> {
    let density = next_broadcaster_density(prior, model, road_length, grid_step)?;
    let mut acc = 0.0;
    for (k, &f) in density.values.iter().enumerate() {
        if f <= 0.0 {
            continue;
        }
        prior.push(density.center(k));
        let inner = if prior.len() == n + 1 {
            let layout = BroadcastLayout {
                positions: prior[1..].to_vec(),
            };
            conditional_success_probability(&layout, model, p_m, road_length)?
        } else {
            quadrature(n, prior, model, road_length, p_m, grid_step)?
        };
        prior.pop();
        acc += f * density.step * inner;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticConfig {
    /// Poisson tail mass left out of the mixture.
    pub tail_mass: f64,
    pub budget: LayoutBudget,
    pub grid_step: f64,
    /// Refuse to evaluate when the truncation needs more relays than this.
    pub max_relays: usize,
    pub master_seed: u64,
}

impl Default for AnalyticConfig {
    fn default() -> Self {
        AnalyticConfig {
            tail_mass: 1e-6,
            budget: LayoutBudget {
                samples: 10_000,
                quadrature: false,
            },
            grid_step: 1.0,
            max_relays: DEFAULT_MAX_RELAYS,
            master_seed: 0,
        }
    }
}

/// Poisson mixture of the per-`n` terms, truncated at the smallest `n_max`
/// whose tail is below `tail_mass`. The omitted tail can only raise the
/// result, so it widens the interval upwards.
pub fn analytic_p_succ(scenario: &Scenario, config: &AnalyticConfig) -> Result<Estimate> {
    scenario.validate()?;
    let n_max =
        truncation_bound(scenario.density, scenario.road_length, config.tail_mass)? as usize;
    if n_max > config.max_relays {
        return Err(Error::Infeasible {
            what: "analytic evaluation",
            required: n_max,
            ceiling: config.max_relays,
        });
    }
    let mut p = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    for n in 0..=n_max {
        let weight = poisson_pmf(scenario.density, scenario.road_length, n as u64);
        let term = analytic_p_succ_given_n(
            n,
            scenario,
            config.budget,
            config.grid_step,
            config.master_seed,
        )?;
        p += weight * term.p_succ;
        var += (weight * term.stderr).powi(2);
        samples += term.trials;
    }
    let tail = poisson_tail(scenario.density, scenario.road_length, n_max as u64);
    Ok(Estimate::from_mean(
        p,
        var.sqrt(),
        tail,
        samples,
        Method::Analytic,
        config.master_seed,
    ))
}
