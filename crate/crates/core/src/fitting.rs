//! Maximum-likelihood estimation of a Bingham distribution from unit vectors.
//!
//! The frame is taken from the eigenvectors of the scatter matrix
//! `S = (1/n) Σ x xᵀ`. With `λ3 = 0` the remaining per-sample NLL is
//! `f(λ1, λ2) = -(λ1 s1 + λ2 s2) + ln C(λ1, λ2, 0)`, whose gradient is
//! `E[c_i²] - s_i`; it is minimized by projected gradient descent with Armijo
//! backtracking.

use serde::{Deserialize, Serialize};

use crate::bingham::{Bingham2D, DistributionJson};
use crate::error::{Error, Result};
use crate::mat3::{eig_sym3, Mat3, Sym3};
use crate::normconst::{quadrature_for, NormConstQuadrature, QuadratureConfig};
use crate::sampler::SampleSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Initial trial step; later trials start from twice the last accepted step.
    pub step: f64,
    /// Stop once the projected gradient norm is at most this.
    pub tol: f64,
    pub lambda_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iters: 5000, step: 1.0, tol: 1e-8, lambda_floor: -1e4 }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.lambda_floor < 0.0 && self.lambda_floor.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_floor must be negative, got {}",
                self.lambda_floor
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub dist: Bingham2D,
    pub iters: usize,
    pub final_grad_norm: f64,
    pub nll_per_sample: f64,
    /// False when `max_iters` ran out before the gradient tolerance was met.
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReportJson {
    pub dist: DistributionJson,
    pub iters: usize,
    pub final_grad_norm: f64,
    pub nll_per_sample: f64,
    pub converged: bool,
}

impl From<&FitReport> for FitReportJson {
    fn from(r: &FitReport) -> Self {
        Self {
            dist: r.dist.to_json(),
            iters: r.iters,
            final_grad_norm: r.final_grad_norm,
            nll_per_sample: r.nll_per_sample,
            converged: r.converged,
        }
    }
}

/// `S = (1/n) Σ x xᵀ`.
pub fn scatter_matrix(samples: &SampleSet) -> Result<Sym3> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 samples, got {n}")));
    }
    let mut acc = [[0.0f64; 3]; 3];
    for p in &samples.points {
        let v = p.to_array();
        for i in 0..3 {
            for j in i..3 {
                acc[i][j] += v[i] * v[j];
            }
        }
    }
    let mut m = Mat3::zeros();
    for i in 0..3 {
        for j in i..3 {
            m.0[i][j] = acc[i][j] / n as f64;
            m.0[j][i] = m.0[i][j];
        }
    }
    Ok(Sym3::from_mat3_symmetrized(&m))
}

pub fn fit_mle(samples: &SampleSet, opts: &FitOptions, cfg: &QuadratureConfig) -> Result<FitReport> {
    fit_mle_with(samples, opts, &*quadrature_for(cfg)?)
}

pub fn fit_mle_with(
    samples: &SampleSet,
    opts: &FitOptions,
    quad: &NormConstQuadrature,
) -> Result<FitReport> {
    opts.validate()?;
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 samples, got {}",
            samples.len()
        )));
    }
    let eig = eig_sym3(&scatter_matrix(samples)?)?;
    let s = eig.lambda;
    let floor = opts.lambda_floor;

    let objective = |l: [f64; 2]| -> Result<(f64, [f64; 2])> {
        let (log_c, dlog) = quad.log_value_and_grad([l[0], l[1], 0.0])?;
        Ok((-(l[0] * s[0] + l[1] * s[1]) + log_c, [dlog[0] - s[0], dlog[1] - s[1]]))
    };
    let project = |l: [f64; 2]| l.map(|v| v.clamp(floor, 0.0));
    // Components pinned at a bound with the gradient pointing outward do not count.
    let projected_norm = |l: [f64; 2], g: [f64; 2]| {
        (0..2)
            .map(|i| {
                let pinned = (l[i] <= floor && g[i] > 0.0) || (l[i] >= 0.0 && g[i] < 0.0);
                if pinned { 0.0 } else { g[i] * g[i] }
            })
            .sum::<f64>()
            .sqrt()
    };

    // Small-variance start: s_i ≈ 1/(2(λ3 - λ_i)).
    let start = |si: f64| 0.5 / s[2].max(1e-300) - 0.5 / si.max(1e-300);
    let mut lam = project([start(s[0]), start(s[1])]);
    let (mut f, mut g) = objective(lam)?;
    let mut trace = vec![f];
    let mut step = opts.step;
    let mut iters = 0;
    let mut gnorm = projected_norm(lam, g);

    while gnorm > opts.tol && iters < opts.max_iters {
        iters += 1;
        let mut t = step;
        let mut accepted = None;
        for _ in 0..80 {
            let trial = project([lam[0] - t * g[0], lam[1] - t * g[1]]);
            let decrease = g[0] * (trial[0] - lam[0]) + g[1] * (trial[1] - lam[1]);
            if trial == lam {
                break;
            }
            let (ft, gt) = objective(trial)?;
            if ft <= f + 1e-4 * decrease {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft, gt)) = accepted else {
            // No representable descent step: we are at the numerical optimum.
            break;
        };
        lam = trial;
        f = ft;
        g = gt;
        trace.push(f);
        step = 2.0 * t;
        gnorm = projected_norm(lam, g);
    }

    let dist = Bingham2D::from_frame(&eig.frame, [lam[0], lam[1], 0.0])?;
    Ok(FitReport {
        dist,
        iters,
        final_grad_norm: gnorm,
        nll_per_sample: f,
        converged: gnorm <= opts.tol,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat3::Vec3;
    use crate::sampler::sample;

    #[test]
    fn scatter_of_poles() {
        let pts = vec![Vec3::Z, -Vec3::Z, Vec3::Z];
        let s = scatter_matrix(&SampleSet::new(pts, None).unwrap()).unwrap();
        assert_eq!(s.to_mat3(), Mat3::diag([0.0, 0.0, 1.0]));
    }

    #[test]
    fn scatter_trace_is_one() {
        let d = Bingham2D::analyze(&Sym3::diag([-3.0, -1.0, 0.0])).unwrap();
        let s = scatter_matrix(&sample(&d, 1000, 1).unwrap()).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let s = SampleSet::new(vec![Vec3::Z; 2], None).unwrap();
        assert!(scatter_matrix(&s).is_err());
        let s = SampleSet::new(vec![Vec3::Z; 9], None).unwrap();
        assert!(fit_mle(&s, &FitOptions::default(), &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn options_validation() {
        let cfg = QuadratureConfig::default();
        let s = SampleSet::new(vec![Vec3::Z; 20], None).unwrap();
        for o in [
            FitOptions { max_iters: 0, ..Default::default() },
            FitOptions { step: 0.0, ..Default::default() },
            FitOptions { tol: -1.0, ..Default::default() },
        ] {
            assert!(matches!(fit_mle(&s, &o, &cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn exact_poles_hit_the_floor() {
        let s = SampleSet::new(vec![Vec3::Z; 20], None).unwrap();
        let r = fit_mle(&s, &FitOptions::default(), &QuadratureConfig::default()).unwrap();
        let l = r.dist.lambda();
        assert_eq!(l[0], -1e4);
        assert_eq!(l[1], -1e4);
        assert_eq!(r.dist.mode().z.abs(), 1.0);
    }

    #[test]
    fn stationarity_and_descent() {
        let d = Bingham2D::analyze(&Sym3::diag([-20.0, -4.0, 0.0])).unwrap();
        let set = sample(&d, 20_000, 3).unwrap();
        let opts = FitOptions::default();
        let r = fit_mle(&set, &opts, &QuadratureConfig::default()).unwrap();
        assert!(r.converged, "{:?}", (r.iters, r.final_grad_norm));
        assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        let s = eig_sym3(&scatter_matrix(&set).unwrap()).unwrap().lambda;
        let (_, dlog) = NormConstQuadrature::default_instance()
            .log_value_and_grad(r.dist.lambda())
            .unwrap();
        for i in 0..2 {
            assert!((dlog[i] - s[i]).abs() <= 10.0 * opts.tol);
        }
    }
}
