use crate::error::{input, CliError};

/// Smallest `p_m` whose success probability is within `epsilon` of the 0.5
/// floor, or `None` if the curve never gets there.
pub fn find_threshold(curve: &[(f64, f64)], epsilon: f64) -> Result<Option<f64>, CliError> {
    if curve.is_empty() {
        return Err(input("threshold needs a non-empty curve"));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(input(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    if curve.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(input("curve must be sorted by p_m"));
    }
    Ok(curve
        .iter()
        .find(|&&(_, p)| (p - 0.5).abs() <= epsilon)
        .map(|&(pm, _)| pm))
}
