//! Link-success functions `g(d)`: the probability that a broadcast is received
//! at distance `d` from the transmitter.
//!
//! The log-normal model uses `libm::erfc`, a port of the FreeBSD msun
//! implementation (rational approximations, error below 1 ulp), which is far
//! inside the 1e-7 absolute accuracy this crate needs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectionModel {
    /// Hard transmission range: received with certainty up to `range_m`.
    UnitDisk { range_m: f64 },
    /// Log-normal shadowing around an equivalent range `range_m`.
    LogNormal {
        range_m: f64,
        path_loss_exponent: f64,
        shadowing_stddev: f64,
    },
}

impl ConnectionModel {
    pub fn unit_disk(range_m: f64) -> Result<Self> {
        let model = ConnectionModel::UnitDisk { range_m };
        model.validate()?;
        Ok(model)
    }

    pub fn log_normal(
        range_m: f64,
        path_loss_exponent: f64,
        shadowing_stddev: f64,
    ) -> Result<Self> {
        let model = ConnectionModel::LogNormal {
            range_m,
            path_loss_exponent,
            shadowing_stddev,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            ConnectionModel::UnitDisk { range_m } => {
                if !positive(range_m) {
                    return Err(invalid(format!("range must be positive, got {range_m}")));
                }
            }
            ConnectionModel::LogNormal {
                range_m,
                path_loss_exponent,
                shadowing_stddev,
            } => {
                if !positive(range_m) {
                    return Err(invalid(format!("range must be positive, got {range_m}")));
                }
                if !positive(path_loss_exponent) {
                    return Err(invalid(format!(
                        "path loss exponent must be positive, got {path_loss_exponent}"
                    )));
                }
                if !positive(shadowing_stddev) {
                    return Err(invalid(format!(
                        "shadowing stddev must be positive (use unit_disk for sigma = 0), got {shadowing_stddev}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn range_m(&self) -> f64 {
        match *self {
            ConnectionModel::UnitDisk { range_m } | ConnectionModel::LogNormal { range_m, .. } => {
                range_m
            }
        }
    }

    /// Short machine name used in result files.
    pub fn kind(&self) -> &'static str {
        match self {
            ConnectionModel::UnitDisk { .. } => "unit_disk",
            ConnectionModel::LogNormal { .. } => "log_normal",
        }
    }

    /// True when every link probability is exactly 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, ConnectionModel::UnitDisk { .. })
    }

    /// `g(distance)`. Rejects negative or NaN distances.
    pub fn link_probability(&self, distance: f64) -> Result<f64> {
        if distance.is_nan() || distance < 0.0 {
            return Err(invalid(format!(
                "distance must be non-negative, got {distance}"
            )));
        }
        Ok(self.link_probability_unchecked(distance))
    }

    /// `g(distance)` for a distance already known to be non-negative.
    #[inline]
    pub fn link_probability_unchecked(&self, distance: f64) -> f64 {
        match *self {
            ConnectionModel::UnitDisk { range_m } => {
                if distance <= range_m {
                    1.0
                } else {
                    0.0
                }
            }
            ConnectionModel::LogNormal {
                range_m,
                path_loss_exponent,
                shadowing_stddev,
            } => {
                if distance == 0.0 {
                    return 1.0;
                }
                if distance.is_infinite() {
                    return 0.0;
                }
                let z = 10.0 * path_loss_exponent * (distance / range_m).log10()
                    / (std::f64::consts::SQRT_2 * shadowing_stddev);
                (0.5 * libm::erfc(z)).clamp(0.0, 1.0)
            }
        }
    }
}
