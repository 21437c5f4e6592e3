//! Exact Bingham sampling by rejection from an angular central Gaussian.
//!
//! With `Λ = -λ >= 0` the target is `f*(x) = exp(-Σ Λ_k x_k²)` in the eigenframe.
//! The proposal is the ACG with `Ω = I + 2Λ/b`, whose unnormalized density is
//! `g*(x) = (xᵀΩx)^{-3/2}`. Here `b` solves `Σ_k 1/(b + 2Λ_k) = 1`, and the ratio
//! `f*/g*` is bounded by `M = exp(-(3 - b)/2) (3/b)^{3/2}`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bingham::Bingham2D;
use crate::error::{Error, Result};
use crate::mat3::{Mat3, Vec3};
use crate::rng::{stream_rng, streams};

/// Cap on proposals per accepted point.
pub const MAX_PROPOSALS: usize = 1_000_000;

/// Unit vectors on S², optionally with the frame used to generate them.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec3>,
    pub frame: Option<Mat3>,
}

impl SampleSet {
    pub fn new(points: Vec<Vec3>, frame: Option<Mat3>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            p.ensure_unit(1e-9)
                .map_err(|_| Error::InvalidArgument(format!("sample {i} is not a unit vector")))?;
        }
        Ok(Self { points, frame })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Rejection sampler specialized to one distribution.
#[derive(Clone, Debug)]
pub struct KentSampler {
    frame: Mat3,
    concentration: [f64; 3],
    /// `1 / sqrt(Ω_k)`: scales of the proposal Gaussian in the eigenframe.
    proposal_scale: [f64; 3],
    omega: [f64; 3],
    log_bound: f64,
}

impl KentSampler {
    pub fn new(dist: &Bingham2D) -> Self {
        let concentration = dist.lambda().map(|l| (-l).max(0.0));
        let b = solve_b(&concentration);
        let omega = concentration.map(|c| 1.0 + 2.0 * c / b);
        Self {
            frame: *dist.frame(),
            concentration,
            proposal_scale: omega.map(|o| 1.0 / o.sqrt()),
            omega,
            log_bound: -(3.0 - b) / 2.0 + 1.5 * (3.0 / b).ln(),
        }
    }

    /// Draws one point, in world coordinates.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec3> {
        for _ in 0..MAX_PROPOSALS {
            let mut y = [0.0f64; 3];
            for k in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                y[k] = z * self.proposal_scale[k];
            }
            let norm = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            if norm == 0.0 {
                continue;
            }
            let x = y.map(|v| v / norm);
            let log_target: f64 = -(0..3).map(|k| self.concentration[k] * x[k] * x[k]).sum::<f64>();
            let quad: f64 = (0..3).map(|k| self.omega[k] * x[k] * x[k]).sum();
            let log_proposal = -1.5 * quad.ln();
            let u: f64 = rng.gen();
            if u.ln() < log_target - self.log_bound - log_proposal {
                let local = Vec3::from_array(x);
                return Ok(self.frame.mul_vec(local));
            }
        }
        Err(Error::SamplingFailure(format!(
            "no proposal accepted within {MAX_PROPOSALS} draws"
        )))
    }
}

/// Solves `Σ_k 1/(b + 2Λ_k) = 1` for `b ∈ (0, 3]` by bisection.
///
/// The left side decreases in `b`; it diverges at `0` because `Λ3 = 0`
/// and is at most one at `b = 3`.
pub fn solve_b(concentration: &[f64; 3]) -> f64 {
    let f = |b: f64| concentration.iter().map(|c| 1.0 / (b + 2.0 * c)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0f64, 3.0f64);
    if f(hi) >= 0.0 {
        return hi;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draws `n` i.i.d. points; deterministic in `seed`.
pub fn sample(dist: &Bingham2D, n: usize, seed: u64) -> Result<SampleSet> {
    let mut rng = stream_rng(seed, streams::SAMPLER);
    sample_with_rng(dist, n, &mut rng)
}

pub fn sample_with_rng<R: Rng + ?Sized>(dist: &Bingham2D, n: usize, rng: &mut R) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let sampler = KentSampler::new(dist);
    let points = (0..n).map(|_| sampler.draw(rng)).collect::<Result<Vec<_>>>()?;
    Ok(SampleSet { points, frame: Some(*dist.frame()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat3::Sym3;

    fn dist(l: [f64; 3]) -> Bingham2D {
        Bingham2D::analyze(&Sym3::diag(l)).unwrap()
    }

    #[test]
    fn b_for_uniform_is_three() {
        assert_eq!(solve_b(&[0.0; 3]), 3.0);
    }

    #[test]
    fn b_solves_its_equation() {
        for c in [[50.0, 10.0, 0.0], [400.0, 400.0, 0.0], [1.0, 0.0, 0.0]] {
            let b = solve_b(&c);
            let s: f64 = c.iter().map(|ck| 1.0 / (b + 2.0 * ck)).sum();
            assert!(b > 0.0 && b <= 3.0);
            assert!((s - 1.0).abs() < 1e-9, "{c:?}: {s}");
        }
    }

    #[test]
    fn bound_dominates_ratio() {
        let d = dist([-50.0, -10.0, 0.0]);
        let s = KentSampler::new(&d);
        let mut rng = stream_rng(3, 0);
        for _ in 0..10_000 {
            let x: [f64; 3] = {
                let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                v.normalized().unwrap().to_array()
            };
            let lt: f64 = -(0..3).map(|k| s.concentration[k] * x[k] * x[k]).sum::<f64>();
            let lp = -1.5 * (0..3).map(|k| s.omega[k] * x[k] * x[k]).sum::<f64>().ln();
            assert!(lt - lp <= s.log_bound + 1e-12);
        }
    }

    #[test]
    fn uniform_second_moments() {
        let set = sample(&dist([0.0; 3]), 200_000, 11).unwrap();
        for k in 0..3 {
            let m: f64 = set.points.iter().map(|p| p[k] * p[k]).sum::<f64>() / set.len() as f64;
            assert!((m - 1.0 / 3.0).abs() < 0.004, "axis {k}: {m}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let d = dist([-5.0, -1.0, 0.0]);
        assert_eq!(sample(&d, 100, 9).unwrap(), sample(&d, 100, 9).unwrap());
        assert_ne!(sample(&d, 100, 9).unwrap(), sample(&d, 100, 10).unwrap());
    }

    #[test]
    fn points_are_unit_and_framed() {
        let set = sample(&dist([-400.0, -400.0, 0.0]), 1000, 1).unwrap();
        assert!(set.frame.is_some());
        for p in &set.points {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            assert!(p.z.abs() > 0.9);
        }
    }

    #[test]
    fn zero_count_rejected() {
        assert!(sample(&dist([0.0; 3]), 0, 0).is_err());
    }
}
