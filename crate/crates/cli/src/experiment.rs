//! Turning a parsed configuration into scenarios and result rows.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vanet_core::analytic::{analytic_p_succ, AnalyticConfig, LayoutBudget, DEFAULT_MAX_RELAYS};
use vanet_core::oracle::{exact_p_succ_fixed, exact_p_succ_marginal};
use vanet_core::sim::{estimate_on_topology, estimate_p_succ};
use vanet_core::{ConnectionModel, Estimate, FixtureMalice, Method, Scenario, Topology};

use crate::config::ConfigMap;
use crate::error::{input, CliError};

const DEFAULT_RANGE: f64 = 250.0;
const DEFAULT_ALPHA: f64 = 2.0;
const DEFAULT_SIGMA: f64 = 4.0;
const DEFAULT_TRIALS: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParam {
    MaliceProb,
    RoadLength,
    Density,
}

impl FromStr for SweptParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "malice_prob" | "pm" => Ok(SweptParam::MaliceProb),
            "road_length" | "L" => Ok(SweptParam::RoadLength),
            "density" | "rho" => Ok(SweptParam::Density),
            other => Err(format!(
                "unknown sweep parameter {other:?} (expected malice_prob, road_length or density)"
            )),
        }
    }
}

/// Malice handling for a fixed road read from a fixture file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureMode {
    /// Use the flags stored in the file.
    Fixed,
    /// Ignore stored flags and draw them i.i.d. with the configured `pm`.
    Random,
}

impl FromStr for FixtureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(FixtureMode::Fixed),
            "random" => Ok(FixtureMode::Random),
            other => Err(format!(
                "unknown fixture_malice {other:?} (expected fixed or random)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub topology: Topology,
    pub mode: FixtureMode,
}

/// One experiment: a base scenario, an optional swept parameter, how to
/// evaluate each point and where to write the rows.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub sweep: Option<(SweptParam, Vec<f64>)>,
    pub method: Method,
    /// Monte Carlo trials for simulation; ignored otherwise.
    pub trials: u64,
    pub master_seed: u64,
    pub analytic: AnalyticConfig,
    pub fixture: Option<Fixture>,
    pub outputs: Vec<PathBuf>,
    pub record_runtime: bool,
}

/// One evaluated point, in the column order of the CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub model: String,
    pub r: f64,
    pub alpha: Option<f64>,
    pub sigma: Option<f64>,
    /// Empty for rows computed on a fixed road.
    pub rho: Option<f64>,
    #[serde(rename = "L")]
    pub road_length: f64,
    pub pm: f64,
    pub trials: u64,
    pub p_succ: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub runtime_s: Option<f64>,
}

impl ResultRow {
    pub fn model(&self) -> Result<ConnectionModel, CliError> {
        let m = match (self.model.as_str(), self.alpha, self.sigma) {
            ("unit_disk", _, _) => ConnectionModel::unit_disk(self.r)?,
            ("log_normal", Some(a), Some(s)) => ConnectionModel::log_normal(self.r, a, s)?,
            (other, _, _) => return Err(input(format!("row has unusable model {other:?}"))),
        };
        Ok(m)
    }
}

fn model_from_config(cfg: &ConfigMap) -> Result<ConnectionModel, CliError> {
    let r = cfg.get_or("r", DEFAULT_RANGE)?;
    match cfg.raw("model").unwrap_or("unit_disk") {
        "unit_disk" => {
            for key in ["alpha", "sigma"] {
                if cfg.contains(key) {
                    return Err(
                        cfg.error_at(key, format!("`{key}` only applies to model = log_normal"))
                    );
                }
            }
            Ok(ConnectionModel::unit_disk(r)?)
        }
        "log_normal" => Ok(ConnectionModel::log_normal(
            r,
            cfg.get_or("alpha", DEFAULT_ALPHA)?,
            cfg.get_or("sigma", DEFAULT_SIGMA)?,
        )?),
        other => Err(cfg.error_at(
            "model",
            format!("unknown model {other:?} (expected unit_disk or log_normal)"),
        )),
    }
}

impl SweepSpec {
    pub fn from_config(cfg: &ConfigMap) -> Result<Self, CliError> {
        let model = model_from_config(cfg)?;
        let sweep = match cfg.get::<SweptParam>("sweep")? {
            None => {
                if cfg.contains("values") {
                    return Err(cfg.error_at("values", "`values` given without `sweep`"));
                }
                None
            }
            Some(param) => {
                let values = cfg
                    .get_list::<f64>("values")?
                    .ok_or_else(|| CliError::MissingKey("values".into()))?;
                Some((param, values))
            }
        };
        let swept = |p: SweptParam| matches!(sweep, Some((q, _)) if q == p);
        let fixture_path = cfg.get::<PathBuf>("topology")?;

        let road_length = cfg
            .get("L")?
            .or(swept(SweptParam::RoadLength).then_some(0.0))
            .ok_or_else(|| CliError::MissingKey("L".into()))?;
        let malice_prob = cfg
            .get("pm")?
            .or((swept(SweptParam::MaliceProb) || fixture_path.is_some()).then_some(0.0))
            .ok_or_else(|| CliError::MissingKey("pm".into()))?;
        let density = cfg
            .get("rho")?
            .or((swept(SweptParam::Density) || fixture_path.is_some()).then_some(0.0))
            .ok_or_else(|| CliError::MissingKey("rho".into()))?;
        let base = Scenario {
            road_length,
            density,
            malice_prob,
            model,
        };

        let method = cfg.get_or("method", Method::Simulation)?;
        let fixture = match fixture_path {
            None => None,
            Some(path) => {
                if road_length <= 0.0 || swept(SweptParam::RoadLength) || swept(SweptParam::Density)
                {
                    return Err(cfg.error_at(
                        "topology",
                        "a fixture needs a fixed `L` and cannot sweep road_length or density",
                    ));
                }
                let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                let topology = Topology::from_text(&text, road_length)?;
                let mode = cfg.get_or("fixture_malice", FixtureMode::Fixed)?;
                if mode == FixtureMode::Fixed && swept(SweptParam::MaliceProb) {
                    return Err(cfg.error_at("sweep", "sweeping pm needs fixture_malice = random"));
                }
                Some(Fixture { topology, mode })
            }
        };
        match (method, &fixture) {
            (Method::Oracle, None) => {
                return Err(input(
                    "method = oracle needs a fixed road via `topology = FILE`",
                ));
            }
            (Method::Analytic, Some(_)) => {
                return Err(
                    cfg.error_at("topology", "method = analytic works on random roads only")
                );
            }
            _ => {}
        }

        let analytic = AnalyticConfig {
            tail_mass: cfg.get_or("tail_mass", 1e-6)?,
            budget: LayoutBudget {
                samples: cfg.get_or("layout_samples", 10_000)?,
                quadrature: cfg.get_or("quadrature", false)?,
            },
            grid_step: cfg.get_or("grid_step", 1.0)?,
            max_relays: cfg.get_or("max_relays", DEFAULT_MAX_RELAYS)?,
            master_seed: 0,
        };
        let master_seed = cfg.get_or("seed", 1)?;
        let outputs = cfg.get_list::<PathBuf>("out")?.unwrap_or_default();
        for path in &outputs {
            OutputFormat::of(path)?;
        }
        let spec = SweepSpec {
            base,
            sweep,
            method,
            trials: cfg.get_or("trials", DEFAULT_TRIALS)?,
            master_seed,
            analytic: AnalyticConfig {
                master_seed,
                ..analytic
            },
            fixture,
            outputs,
            record_runtime: cfg.get_or("record_runtime", true)?,
        };
        // Surface invalid parameters before any work starts.
        for scenario in spec.points() {
            if spec.fixture.is_some() {
                scenario.model.validate()?;
                if !(0.0..=1.0).contains(&scenario.malice_prob) {
                    return Err(input(format!(
                        "malice probability must lie in [0, 1], got {}",
                        scenario.malice_prob
                    )));
                }
            } else {
                scenario.validate()?;
            }
        }
        Ok(spec)
    }

    /// Scenarios in sweep order.
    pub fn points(&self) -> Vec<Scenario> {
        match &self.sweep {
            None => vec![self.base],
            Some((param, values)) => values
                .iter()
                .map(|&v| {
                    let mut s = self.base;
                    match param {
                        SweptParam::MaliceProb => s.malice_prob = v,
                        SweptParam::RoadLength => s.road_length = v,
                        SweptParam::Density => s.density = v,
                    }
                    s
                })
                .collect(),
        }
    }

    fn evaluate(&self, scenario: &Scenario) -> Result<(Estimate, u64), CliError> {
        let est = match (self.method, &self.fixture) {
            (Method::Simulation, None) => (
                estimate_p_succ(scenario, self.trials, self.master_seed)?,
                self.trials,
            ),
            (Method::Simulation, Some(f)) => {
                let malice = match f.mode {
                    FixtureMode::Fixed => FixtureMalice::Fixed,
                    FixtureMode::Random => FixtureMalice::Random(scenario.malice_prob),
                };
                let est = estimate_on_topology(
                    &f.topology,
                    &scenario.model,
                    malice,
                    self.trials,
                    self.master_seed,
                )?;
                (est, self.trials)
            }
            (Method::Analytic, _) => (
                analytic_p_succ(scenario, &self.analytic)?,
                self.analytic.budget.samples,
            ),
            (Method::Oracle, Some(f)) => {
                let p = match f.mode {
                    FixtureMode::Fixed => exact_p_succ_fixed(&f.topology, &scenario.model)?,
                    FixtureMode::Random => {
                        exact_p_succ_marginal(&f.topology, &scenario.model, scenario.malice_prob)?
                    }
                };
                (Estimate::exact(p, Method::Oracle), 1)
            }
            (Method::Oracle, None) => unreachable!("rejected when the spec was built"),
        };
        Ok(est)
    }

    fn row(
        &self,
        scenario: &Scenario,
        est: &Estimate,
        trials: u64,
        runtime: Option<f64>,
    ) -> ResultRow {
        let (alpha, sigma) = match scenario.model {
            ConnectionModel::UnitDisk { .. } => (None, None),
            ConnectionModel::LogNormal {
                path_loss_exponent,
                shadowing_stddev,
                ..
            } => (Some(path_loss_exponent), Some(shadowing_stddev)),
        };
        ResultRow {
            method: self.method.as_str().to_string(),
            model: scenario.model.kind().to_string(),
            r: scenario.model.range_m(),
            alpha,
            sigma,
            rho: self.fixture.is_none().then_some(scenario.density),
            road_length: scenario.road_length,
            pm: scenario.malice_prob,
            trials,
            p_succ: est.p_succ,
            stderr: est.stderr,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            seed: self.master_seed,
            runtime_s: runtime,
        }
    }

    /// Evaluates every point. Points run concurrently; rows come back in
    /// sweep order regardless.
    pub fn run(&self) -> Result<Vec<ResultRow>, CliError> {
        self.points()
            .par_iter()
            .map(|scenario| {
                let start = Instant::now();
                let (est, trials) = self.evaluate(scenario)?;
                let runtime = self.record_runtime.then(|| start.elapsed().as_secs_f64());
                Ok(self.row(scenario, &est, trials, runtime))
            })
            .collect()
    }
}

/// Parses `text` as a config and evaluates it. Outputs are not written.
pub fn run_config(text: &str) -> Result<Vec<ResultRow>, CliError> {
    let cfg = ConfigMap::parse(text, "config")?;
    SweepSpec::from_config(&cfg)?.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn of(path: &std::path::Path) -> Result<Self, CliError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(OutputFormat::Csv),
            Some("json") => Ok(OutputFormat::Json),
            Some("svg") => Ok(OutputFormat::Svg),
            _ => Err(input(format!(
                "cannot tell output format of {} (use .csv, .json or .svg)",
                path.display()
            ))),
        }
    }
}
