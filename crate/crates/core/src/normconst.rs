//! Normalizing constant of the Bingham distribution on S² and its gradient.
//!
//! `C(λ) = ∫_{S²} exp(vᵀ diag(λ) v) dv` is evaluated with a damped trapezoidal
//! rule for the inverse Fourier-Laplace transform:
//!
//! ```text
//! C(λ) = Re[ e^c h √π Σ_{n=-N-1}^{N} w(|nh|) F(nh, λ) e^{i nh} ],
//! F(t, λ) = Π_k (c - λ_k + i t)^(-1/2),
//! w(x) = erfc(x/p1 - p2) / 2.
//! ```
//!
//! All node data (abscissae, damping weights, phase factors) depends only on the
//! configuration, so it is computed once in [`NormConstQuadrature::new`].

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::erfc;

/// Free constants of the quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub r: f64,
    pub omega_d: f64,
    /// Number of nodes on each side of the origin.
    pub n: usize,
    pub n_min: usize,
    /// `d = d_frac * c`.
    pub d_frac: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { r: 2.5, omega_d: 0.5, n: 200, n_min: 15, d_frac: 0.5 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.r.is_finite() && self.r >= 2.0) {
            return bad(format!("r must be >= 2, got {}", self.r));
        }
        if !(self.omega_d >= 1.0 / self.r && self.omega_d <= 1.0) {
            return bad(format!("omega_d must lie in [1/r, 1], got {}", self.omega_d));
        }
        if self.n_min == 0 {
            return bad("N_min must be positive".into());
        }
        if self.n < self.n_min {
            return bad(format!("N = {} must be >= N_min = {}", self.n, self.n_min));
        }
        if !(self.d_frac > 0.0 && self.d_frac < 1.0) {
            return bad(format!("d_frac must lie in (0, 1), got {}", self.d_frac));
        }
        Ok(())
    }

    /// Damping shift `c = N_min π / (r²(1+r) ω_d)`.
    pub fn c(&self) -> f64 {
        self.n_min as f64 * PI / (self.r * self.r * (1.0 + self.r) * self.omega_d)
    }

    /// Step `h = sqrt(2π d (1+r) / (ω_d N))`.
    pub fn h(&self) -> f64 {
        let d = self.d_frac * self.c();
        (2.0 * PI * d * (1.0 + self.r) / (self.omega_d * self.n as f64)).sqrt()
    }
}

/// Precomputed quadrature nodes for one [`QuadratureConfig`].
#[derive(Clone, Debug)]
pub struct NormConstQuadrature {
    cfg: QuadratureConfig,
    c: f64,
    prefactor: f64,
    /// Nodes `n = 0..=N`: `(t_n, w(|t_n|) e^{i t_n})`. Nodes `-N..-1` are their
    /// complex conjugates and are folded in when summing.
    nodes: Vec<(f64, Complex64)>,
    /// The unpaired node `n = -N-1`.
    tail: (f64, Complex64),
}

impl NormConstQuadrature {
    pub fn new(cfg: QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.c();
        let h = cfg.h();
        let n = cfg.n as f64;
        let p1 = (n * h / cfg.omega_d).sqrt();
        let p2 = (cfg.omega_d * n * h / 4.0).sqrt();
        let weight = |x: f64| 0.5 * erfc(x / p1 - p2);
        let node = |k: i64| {
            let t = k as f64 * h;
            (t, Complex64::from_polar(weight(t.abs()), t))
        };
        let nodes = (0..=cfg.n as i64).map(node).collect();
        let tail = node(-(cfg.n as i64) - 1);
        Ok(Self { cfg, c, prefactor: c.exp() * h * PI.sqrt(), nodes, tail })
    }

    /// Shared instance for the default configuration.
    pub fn default_instance() -> &'static NormConstQuadrature {
        static DEFAULT: OnceLock<NormConstQuadrature> = OnceLock::new();
        DEFAULT.get_or_init(|| {
            NormConstQuadrature::new(QuadratureConfig::default()).expect("default config is valid")
        })
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    fn check(&self, lambda: &[f64; 3]) -> Result<()> {
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("lambda contains non-finite values".into()));
        }
        // Re(c - λ_k) > 0 keeps every factor on the principal branch.
        if lambda.iter().any(|&l| l >= self.c) {
            return Err(Error::InvalidArgument(format!(
                "lambda components must be below c = {}; shift so that max(lambda) = 0",
                self.c
            )));
        }
        Ok(())
    }

    pub fn value(&self, lambda: [f64; 3]) -> Result<f64> {
        self.check(&lambda)?;
        let term = |(t, coef): (f64, Complex64)| coef * self.kernel(&lambda, t).0;
        Ok(self.fold(term))
    }

    /// `C(λ)` and `∂C/∂λ_k`, from one pass over the nodes.
    pub fn value_and_grad(&self, lambda: [f64; 3]) -> Result<(f64, [f64; 3])> {
        self.check(&lambda)?;
        let mut acc = [0.0f64; 4];
        let mut add = |(t, coef): (f64, Complex64), mult: f64| {
            let (f, z) = self.kernel(&lambda, t);
            let cf = coef * f;
            acc[0] += mult * cf.re;
            for k in 0..3 {
                // ∂F/∂λ_k = F / (2 z_k)
                acc[k + 1] += mult * (cf * 0.5 / z[k]).re;
            }
        };
        add(self.nodes[0], 1.0);
        for &node in &self.nodes[1..] {
            add(node, 2.0);
        }
        add(self.tail, 1.0);
        let p = self.prefactor;
        Ok((p * acc[0], [p * acc[1], p * acc[2], p * acc[3]]))
    }

    /// `ln C(λ)` and `∇ ln C(λ)`.
    pub fn log_value_and_grad(&self, lambda: [f64; 3]) -> Result<(f64, [f64; 3])> {
        let (c, g) = self.value_and_grad(lambda)?;
        if !(c > 0.0) {
            return Err(Error::Internal(format!("normalizing constant {c} is not positive")));
        }
        Ok((c.ln(), g.map(|gk| gk / c)))
    }

    /// `F(t, λ)` together with the factors `z_k = c - λ_k + i t`.
    fn kernel(&self, lambda: &[f64; 3], t: f64) -> (Complex64, [Complex64; 3]) {
        let z = lambda.map(|l| Complex64::new(self.c - l, t));
        let f = (z[0].sqrt() * z[1].sqrt() * z[2].sqrt()).inv();
        (f, z)
    }

    fn fold(&self, term: impl Fn((f64, Complex64)) -> Complex64) -> f64 {
        // term(-n) = conj(term(n)), so the symmetric part contributes twice its real part.
        let mut sum = term(self.nodes[0]).re;
        for &node in &self.nodes[1..] {
            sum += 2.0 * term(node).re;
        }
        sum += term(self.tail).re;
        self.prefactor * sum
    }
}

pub fn norm_const(lambda: [f64; 3], cfg: &QuadratureConfig) -> Result<f64> {
    quadrature_for(cfg)?.value(lambda)
}

pub fn norm_const_grad(lambda: [f64; 3], cfg: &QuadratureConfig) -> Result<[f64; 3]> {
    Ok(quadrature_for(cfg)?.value_and_grad(lambda)?.1)
}

/// Borrows the shared default instance when `cfg` is the default.
pub(crate) fn quadrature_for(
    cfg: &QuadratureConfig,
) -> Result<std::borrow::Cow<'static, NormConstQuadrature>> {
    let default = NormConstQuadrature::default_instance();
    if *cfg == default.cfg {
        Ok(std::borrow::Cow::Borrowed(default))
    } else {
        Ok(std::borrow::Cow::Owned(NormConstQuadrature::new(*cfg)?))
    }
}
