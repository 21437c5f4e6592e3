//! The Bingham distribution on S² with density `exp(vᵀAv) / C(λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::{eig_sym3, triu_pack, triu_unpack, Mat3, PackedSym6, Sym3, Vec3};
use crate::normconst::{quadrature_for, NormConstQuadrature, QuadratureConfig};

/// Tolerance on `‖v‖ - 1` for points passed to the density.
pub const UNIT_TOL: f64 = 1e-9;

/// Smallest eigenvalue gap for which the spectral gradient formula is used.
pub const SPECTRAL_GAP_FLOOR: f64 = 1e-8;

/// An analyzed distribution: eigenframe, shifted eigenvalues and cached `ln C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bingham2D {
    a: Sym3,
    frame: Mat3,
    lambda: [f64; 3],
    log_c: f64,
}

impl Bingham2D {
    /// Analyzes `A` with the default quadrature.
    pub fn analyze(a: &Sym3) -> Result<Self> {
        Self::analyze_with(a, NormConstQuadrature::default_instance())
    }

    pub fn analyze_with(a: &Sym3, quad: &NormConstQuadrature) -> Result<Self> {
        let eig = eig_sym3(a)?;
        let top = eig.lambda[2];
        let lambda = [eig.lambda[0] - top, eig.lambda[1] - top, 0.0];
        let c = quad.value(lambda)?;
        if !(c > 0.0) {
            return Err(Error::Internal(format!("normalizing constant {c} is not positive")));
        }
        Ok(Self { a: *a, frame: eig.frame, lambda, log_c: c.ln() })
    }

    /// Builds `D diag(λ) Dᵀ` from a frame and eigenvalues and analyzes it.
    pub fn from_frame(frame: &Mat3, lambda: [f64; 3]) -> Result<Self> {
        let m = *frame * Mat3::diag(lambda) * frame.transpose();
        Self::analyze(&Sym3::from_mat3_symmetrized(&m))
    }

    pub fn a(&self) -> &Sym3 {
        &self.a
    }

    pub fn frame(&self) -> &Mat3 {
        &self.frame
    }

    /// Shifted eigenvalues, `λ1 <= λ2 <= λ3 = 0`.
    pub fn lambda(&self) -> [f64; 3] {
        self.lambda
    }

    pub fn log_c(&self) -> f64 {
        self.log_c
    }

    /// `D diag(λ) Dᵀ` with the shifted eigenvalues.
    pub fn shifted_a(&self) -> Mat3 {
        self.frame * Mat3::diag(self.lambda) * self.frame.transpose()
    }

    /// Exponent `vᵀ A_shifted v`, evaluated in the eigenframe.
    fn exponent(&self, v: Vec3) -> f64 {
        (0..3)
            .map(|k| {
                let c = self.frame.col(k).dot(v);
                self.lambda[k] * c * c
            })
            .sum()
    }

    pub fn log_pdf(&self, v: Vec3) -> Result<f64> {
        v.ensure_unit(UNIT_TOL)?;
        Ok(self.exponent(v) - self.log_c)
    }

    /// Density with respect to surface area on S².
    pub fn pdf(&self, v: Vec3) -> Result<f64> {
        self.log_pdf(v).map(f64::exp)
    }

    /// Density maximizer: the eigenvector of the largest eigenvalue.
    ///
    /// For a uniform distribution every direction is a mode; callers should
    /// check [`Bingham2D::confidence`] before trusting this.
    pub fn mode(&self) -> Vec3 {
        self.frame.col(2)
    }

    /// `(λ3 - λ2) + (λ3 - λ1)`.
    pub fn confidence(&self) -> f64 {
        (self.lambda[2] - self.lambda[1]) + (self.lambda[2] - self.lambda[0])
    }

    pub fn to_json(&self) -> DistributionJson {
        DistributionJson {
            a: triu_pack(&self.a).expect("analyzed matrices are finite").0,
            frame: Some(self.frame.to_row_major()),
            lambda: Some(self.lambda),
            log_c: Some(self.log_c),
        }
    }
}

/// Serialized distribution. Only `A` is needed to rebuild it; the other fields
/// are derived and checked for shape when present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionJson {
    #[serde(rename = "A")]
    pub a: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<[f64; 9]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 3]>,
    #[serde(rename = "logC", default, skip_serializing_if = "Option::is_none")]
    pub log_c: Option<f64>,
}

impl DistributionJson {
    pub fn to_distribution(&self, quad: &NormConstQuadrature) -> Result<Bingham2D> {
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field `A` contains non-finite values".into()));
        }
        for (name, ok) in [
            ("frame", self.frame.is_none_or(|f| f.iter().all(|v| v.is_finite()))),
            ("lambda", self.lambda.is_none_or(|l| l.iter().all(|v| v.is_finite()))),
            ("logC", self.log_c.is_none_or(f64::is_finite)),
        ] {
            if !ok {
                return Err(Error::InvalidArgument(format!("field `{name}` contains non-finite values")));
            }
        }
        Bingham2D::analyze_with(&triu_unpack(PackedSym6(self.a))?, quad)
    }
}

/// Bingham negative log-likelihood `-vᵀAv + ln C(λ)`.
///
/// Evaluated with the eigenvalues shifted so that `λ3 = 0`; the shift cancels
/// between the two terms.
pub fn nll(a: &Sym3, v_gt: Vec3, cfg: &QuadratureConfig) -> Result<f64> {
    let quad = quadrature_for(cfg)?;
    nll_with(a, v_gt, &quad)
}

pub fn nll_with(a: &Sym3, v_gt: Vec3, quad: &NormConstQuadrature) -> Result<f64> {
    v_gt.ensure_unit(UNIT_TOL)?;
    let eig = eig_sym3(a)?;
    let top = eig.lambda[2];
    let lambda = [eig.lambda[0] - top, eig.lambda[1] - top, 0.0];
    let c = quad.value(lambda)?;
    Ok(-(a.quadratic_form(v_gt) - top) + c.ln())
}

/// Gradient of [`nll`] with respect to the symmetric matrix `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NllGradient {
    pub grad: Sym3,
    /// Set when an eigenvalue gap fell below [`SPECTRAL_GAP_FLOOR`] and the
    /// gradient was taken by central differences instead.
    pub finite_difference: bool,
}

impl NllGradient {
    /// Gradient with respect to the six packed coordinates (off-diagonals doubled).
    pub fn packed(&self) -> [f64; 6] {
        let g = &self.grad;
        [g.get(0, 0), 2.0 * g.get(0, 1), 2.0 * g.get(0, 2), g.get(1, 1), 2.0 * g.get(1, 2), g.get(2, 2)]
    }
}

/// `∂L/∂A = -v vᵀ + D diag(∇ ln C(λ)) Dᵀ`.
pub fn nll_grad_a(a: &Sym3, v_gt: Vec3, cfg: &QuadratureConfig) -> Result<NllGradient> {
    let quad = quadrature_for(cfg)?;
    nll_grad_a_with(a, v_gt, &quad)
}

pub fn nll_grad_a_with(a: &Sym3, v_gt: Vec3, quad: &NormConstQuadrature) -> Result<NllGradient> {
    nll_and_grad_with(a, v_gt, quad).map(|(_, g)| g)
}

/// Loss and gradient from a single eigendecomposition and quadrature pass.
pub fn nll_and_grad_with(
    a: &Sym3,
    v_gt: Vec3,
    quad: &NormConstQuadrature,
) -> Result<(f64, NllGradient)> {
    v_gt.ensure_unit(UNIT_TOL)?;
    let eig = eig_sym3(a)?;
    let l = eig.lambda;
    let min_gap = (l[1] - l[0]).min(l[2] - l[1]);
    if min_gap <= SPECTRAL_GAP_FLOOR {
        return Ok((nll_with(a, v_gt, quad)?, nll_grad_a_fd(a, v_gt, quad)?));
    }
    let (log_c, dlog) = quad.log_value_and_grad([l[0] - l[2], l[1] - l[2], 0.0])?;
    let loss = -(a.quadratic_form(v_gt) - l[2]) + log_c;
    let spectral = eig.frame * Mat3::diag(dlog) * eig.frame.transpose();
    let m = spectral - Mat3::outer(v_gt, v_gt);
    Ok((loss, NllGradient { grad: Sym3::from_mat3_symmetrized(&m), finite_difference: false }))
}

fn nll_grad_a_fd(a: &Sym3, v_gt: Vec3, quad: &NormConstQuadrature) -> Result<NllGradient> {
    const STEP: f64 = 1e-5;
    let base = triu_pack(a)?;
    let mut packed = [0.0; 6];
    for (i, g) in packed.iter_mut().enumerate() {
        let (mut up, mut dn) = (base, base);
        up.0[i] += STEP;
        dn.0[i] -= STEP;
        let fu = nll_with(&triu_unpack(up)?, v_gt, quad)?;
        let fd = nll_with(&triu_unpack(dn)?, v_gt, quad)?;
        *g = (fu - fd) / (2.0 * STEP);
    }
    for i in [1, 2, 4] {
        packed[i] *= 0.5;
    }
    Ok(NllGradient { grad: triu_unpack(PackedSym6(packed))?, finite_difference: true })
}
