//! Angular percentiles θ_i^(p) of the slab `{x : |(Dᵀx)_i| <= sin(θ/2)}`.

use crate::error::{Error, Result};
use crate::sampler::SampleSet;
use crate::special::erf_inv;

fn check_axis(axis: usize) -> Result<()> {
    if axis == 1 || axis == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("axis must be 1 or 2, got {axis}")))
    }
}

/// Gaussian approximation `θ ≈ 2 erf⁻¹(p) / sqrt(λ3 - λ_i)`, valid for
/// large eigenvalue gaps. `axis` is 1-based.
pub fn percentile_theta_approx(lambda: [f64; 3], axis: usize, p: f64) -> Result<f64> {
    check_axis(axis)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p must lie in (0, 1), got {p}")));
    }
    let gap = lambda[2] - lambda[axis - 1];
    if !(gap > 0.0) {
        return Err(Error::DegenerateAxis(gap));
    }
    Ok(2.0 * erf_inv(p)? / gap.sqrt())
}

/// Empirical percentile from samples carrying their generating frame:
/// `2 asin(q_p)` where `q_p` is the `p`-quantile of `|(Dᵀx)_i|`.
pub fn percentile_theta_empirical(samples: &SampleSet, axis: usize, p: f64) -> Result<f64> {
    check_axis(axis)?;
    let frame = samples
        .frame
        .ok_or_else(|| Error::InvalidArgument("sample set has no frame".into()))?;
    if samples.len() < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 samples, got {}",
            samples.len()
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p must lie in (0, 1], got {p}")));
    }
    if p == 1.0 {
        // Every slab narrower than the whole sphere misses positive mass.
        return Ok(std::f64::consts::PI);
    }
    let d = frame.col(axis - 1);
    let mut coords: Vec<f64> = samples.points.iter().map(|x| d.dot(*x).abs()).collect();
    let rank = ((p * coords.len() as f64).ceil() as usize).clamp(1, coords.len());
    let (_, q, _) = coords.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(2.0 * q.min(1.0).asin())
}
