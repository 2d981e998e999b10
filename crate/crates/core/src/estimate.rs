use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Simulation,
    Analytic,
    Oracle,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Simulation => "simulation",
            Method::Analytic => "analytic",
            Method::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulation" => Ok(Method::Simulation),
            "analytic" => Ok(Method::Analytic),
            "oracle" => Ok(Method::Oracle),
            other => Err(format!(
                "unknown method {other:?} (expected simulation, analytic or oracle)"
            )),
        }
    }
}

/// A success-probability estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_succ: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trials for simulation, layout samples for the analytic route, 1 for exact values.
    pub trials: u64,
    pub method: Method,
    pub master_seed: u64,
}

impl Estimate {
    /// Binomial proportion with a normal-approximation interval.
    pub fn from_successes(successes: u64, trials: u64, master_seed: u64) -> Self {
        assert!(trials > 0, "at least one trial");
        let p = successes as f64 / trials as f64;
        let stderr = (p * (1.0 - p) / trials as f64).sqrt();
        Self::from_mean(p, stderr, 0.0, trials, Method::Simulation, master_seed)
    }

    /// Mean with standard error; `upper_bias` widens the interval upwards
    /// for a known one-sided omission (a truncated tail).
    pub fn from_mean(
        p: f64,
        stderr: f64,
        upper_bias: f64,
        trials: u64,
        method: Method,
        master_seed: u64,
    ) -> Self {
        let p_succ = p.clamp(0.0, 1.0);
        Estimate {
            p_succ,
            stderr,
            ci_low: (p_succ - Z_95 * stderr).clamp(0.0, p_succ),
            ci_high: (p_succ + Z_95 * stderr + upper_bias).clamp(p_succ, 1.0),
            trials,
            method,
            master_seed,
        }
    }

    pub fn exact(p: f64, method: Method) -> Self {
        Self::from_mean(p, 0.0, 0.0, 1, method, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportion_interval() {
        let e = Estimate::from_successes(90, 100, 3);
        assert_eq!(e.p_succ, 0.9);
        assert!((e.stderr - 0.03).abs() < 1e-12);
        assert!(e.ci_low < 0.9 && e.ci_high > 0.9);
        let all = Estimate::from_successes(10, 10, 3);
        assert_eq!(
            (all.p_succ, all.stderr, all.ci_low, all.ci_high),
            (1.0, 0.0, 1.0, 1.0)
        );
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Simulation, Method::Analytic, Method::Oracle] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("magic".parse::<Method>().is_err());
    }
}
