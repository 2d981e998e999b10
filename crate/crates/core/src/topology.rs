//! Scenarios and random road realizations under the Poisson placement model.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::connectivity::ConnectionModel;
use crate::error::{invalid, Error, Result};

/// The sub-network between the source at 0 and the destination at `road_length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub road_length: f64,
    /// Vehicles per meter.
    pub density: f64,
    pub malice_prob: f64,
    pub model: ConnectionModel,
}

impl Scenario {
    pub fn new(
        road_length: f64,
        density: f64,
        malice_prob: f64,
        model: ConnectionModel,
    ) -> Result<Self> {
        let s = Scenario {
            road_length,
            density,
            malice_prob,
            model,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.road_length.is_finite() && self.road_length > 0.0) {
            return Err(invalid(format!(
                "road length must be positive, got {}",
                self.road_length
            )));
        }
        if !(self.density.is_finite() && self.density > 0.0) {
            return Err(invalid(format!(
                "density must be positive, got {}",
                self.density
            )));
        }
        if !(0.0..=1.0).contains(&self.malice_prob) {
            return Err(invalid(format!(
                "malice probability must lie in [0, 1], got {}",
                self.malice_prob
            )));
        }
        self.model.validate()
    }

    /// Expected number of relays, `density * road_length`.
    pub fn mean_relays(&self) -> f64 {
        self.density * self.road_length
    }
}

/// One realized road. The source (position 0) and destination (position
/// `road_length`) are protocol roles and are not stored in `positions`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    road_length: f64,
    positions: Vec<f64>,
    malicious: Vec<bool>,
}

impl Topology {
    pub fn new(road_length: f64, positions: Vec<f64>, malicious: Vec<bool>) -> Result<Self> {
        if !(road_length.is_finite() && road_length > 0.0) {
            return Err(invalid(format!(
                "road length must be positive, got {road_length}"
            )));
        }
        if positions.len() != malicious.len() {
            return Err(invalid(format!(
                "{} positions but {} malice flags",
                positions.len(),
                malicious.len()
            )));
        }
        for (i, &p) in positions.iter().enumerate() {
            if !(p > 0.0 && p < road_length) {
                return Err(invalid(format!(
                    "position {p} is outside (0, {road_length})"
                )));
            }
            if i > 0 && positions[i - 1] >= p {
                return Err(invalid("positions must be strictly increasing"));
            }
        }
        Ok(Topology {
            road_length,
            positions,
            malicious,
        })
    }

    pub fn road_length(&self) -> f64 {
        self.road_length
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn malicious(&self) -> &[bool] {
        &self.malicious
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn with_malice(&self, malicious: Vec<bool>) -> Result<Self> {
        Topology::new(self.road_length, self.positions.clone(), malicious)
    }

    /// Serializes as one `position<TAB>malice` line per relay, malice as `0`/`1`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, m) in self.positions.iter().zip(&self.malicious) {
            out.push_str(&format!("{p}\t{}\n", u8::from(*m)));
        }
        out
    }

    /// Parses the text form. Blank lines and `#` comments are skipped; the
    /// malice column accepts `0`/`1`/`false`/`true`.
    pub fn from_text(text: &str, road_length: f64) -> Result<Self> {
        let mut positions = Vec::new();
        let mut malicious = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let mut fields = line.split('\t');
            let (Some(pos), Some(flag), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(parse_err(format!(
                    "expected `position<TAB>malice`, got {line:?}"
                )));
            };
            let pos: f64 = pos
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad position {pos:?}")))?;
            let flag = match flag.trim() {
                "0" | "false" => false,
                "1" | "true" => true,
                other => return Err(parse_err(format!("bad malice flag {other:?}"))),
            };
            positions.push(pos);
            malicious.push(flag);
        }
        Topology::new(road_length, positions, malicious)
    }
}

/// `Pr(N = count)` for `N ~ Poisson(density * length)`, evaluated in log space.
pub fn poisson_pmf(density: f64, length: f64, count: u64) -> f64 {
    let mean = density * length;
    debug_assert!(mean > 0.0);
    let log_fact: f64 = (2..=count).map(|k| (k as f64).ln()).sum();
    (count as f64 * mean.ln() - mean - log_fact).exp()
}

/// Pmf values for 0..=upper where the mass beyond `upper` is far below 1e-300.
fn pmf_table(mean: f64) -> Vec<f64> {
    let upper = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    let mut table = Vec::with_capacity(upper + 1);
    let mut log_p = -mean;
    for k in 0..=upper {
        if k > 0 {
            log_p += mean.ln() - (k as f64).ln();
        }
        table.push(log_p.exp());
    }
    table
}

/// `Pr(N > count)`, summed from the upper tail so tiny tails keep full precision.
pub fn poisson_tail(density: f64, length: f64, count: u64) -> f64 {
    let table = pmf_table(density * length);
    table.iter().skip(count as usize + 1).rev().sum()
}

/// Smallest `n_max` with `Pr(N > n_max) < tail_mass`.
pub fn truncation_bound(density: f64, length: f64, tail_mass: f64) -> Result<u64> {
    if !(tail_mass > 0.0 && tail_mass < 1.0) {
        return Err(invalid(format!(
            "tail mass must lie in (0, 1), got {tail_mass}"
        )));
    }
    let mean = density * length;
    if !(mean.is_finite() && mean > 0.0) {
        return Err(invalid(format!(
            "density * length must be positive, got {mean}"
        )));
    }
    let table = pmf_table(mean);
    let mut tail = 0.0;
    // tail after the loop body is Pr(N > n).
    for n in (0..table.len()).rev() {
        if tail >= tail_mass {
            return Ok(n as u64 + 1);
        }
        tail += table[n];
    }
    Ok(0)
}

/// Draws one road: `N ~ Poisson(rho L)`, then `N` sorted uniforms on (0, L)
/// and independent Bernoulli(p_m) malice flags.
pub fn sample_topology<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Topology {
    let length = scenario.road_length;
    let count = Poisson::new(scenario.mean_relays())
        .expect("validated scenario has a positive mean")
        .sample(rng) as usize;
    let positions = loop {
        let mut ps: Vec<f64> = (0..count)
            .map(|_| loop {
                let x = rng.random::<f64>() * length;
                if x > 0.0 && x < length {
                    break x;
                }
            })
            .collect();
        ps.sort_by(f64::total_cmp);
        if ps.windows(2).all(|w| w[0] < w[1]) {
            break ps;
        }
    };
    let malicious = (0..count)
        .map(|_| rng.random_bool(scenario.malice_prob))
        .collect();
    Topology {
        road_length: length,
        positions,
        malicious,
    }
}
