//! The 9-parameter planar-symmetric rotation representation `[a; x]`.
//!
//! `a` packs a symmetric matrix `A` whose Bingham mode is the symmetric-plane
//! normal `±e_z`; `x` is the in-plane approach direction `e_x`. A 180° flip
//! about `e_x` negates `e_y` and `e_z` and leaves the encoding unchanged.

use serde::{Deserialize, Serialize};

use crate::bingham::{nll_and_grad_with, nll_with, Bingham2D};
use crate::error::{Error, Result};
use crate::mat3::{gram_schmidt_rotation, triu_unpack, Mat3, PackedSym6, Rotation3, Sym3, Vec3};
use crate::normconst::{quadrature_for, NormConstQuadrature, QuadratureConfig};
use crate::sampler::sample;

/// Default confidence threshold below which a prediction is masked out.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RepJson", into = "RepJson")]
pub struct PlanarSymRep {
    pub a: PackedSym6,
    pub x: Vec3,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepJson {
    a: [f64; 6],
    x: [f64; 3],
}

impl TryFrom<RepJson> for PlanarSymRep {
    type Error = Error;
    fn try_from(j: RepJson) -> Result<Self> {
        let rep = PlanarSymRep { a: PackedSym6(j.a), x: Vec3::from_array(j.x) };
        rep.check_finite()?;
        Ok(rep)
    }
}

impl From<PlanarSymRep> for RepJson {
    fn from(r: PlanarSymRep) -> Self {
        RepJson { a: r.a.0, x: r.x.to_array() }
    }
}

impl PlanarSymRep {
    pub fn new(a: PackedSym6, x: Vec3) -> Result<Self> {
        let rep = Self { a, x };
        rep.check_finite()?;
        Ok(rep)
    }

    /// Builds from a flat 9-vector `[a1..a6, x1..x3]`.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != 9 {
            return Err(Error::InvalidArgument(format!("expected 9 values, got {}", v.len())));
        }
        let mut a = [0.0; 6];
        a.copy_from_slice(&v[..6]);
        Self::new(PackedSym6(a), Vec3::new(v[6], v[7], v[8]))
    }

    fn check_finite(&self) -> Result<()> {
        if self.a.0.iter().all(|v| v.is_finite()) && self.x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument("representation contains non-finite values".into()))
        }
    }

    pub fn matrix(&self) -> Result<Sym3> {
        triu_unpack(self.a)
    }

    pub fn distribution(&self) -> Result<Bingham2D> {
        Bingham2D::analyze(&self.matrix()?)
    }
}

/// A grasp rotation and its 180°-flipped twin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraspRotationPair {
    pub primary: Rotation3,
    pub flipped: Rotation3,
}

/// `{"matrix": [9 row-major]}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationJson {
    pub matrix: [f64; 9],
}

impl From<&Rotation3> for RotationJson {
    fn from(r: &Rotation3) -> Self {
        Self { matrix: r.matrix().to_row_major() }
    }
}

impl TryFrom<RotationJson> for Rotation3 {
    type Error = Error;
    fn try_from(j: RotationJson) -> Result<Self> {
        Rotation3::new(Mat3::from_row_major(j.matrix))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationPairJson {
    pub primary: RotationJson,
    pub flipped: RotationJson,
}

impl From<&GraspRotationPair> for RotationPairJson {
    fn from(p: &GraspRotationPair) -> Self {
        Self { primary: (&p.primary).into(), flipped: (&p.flipped).into() }
    }
}

/// 180° rotation about the approach axis `e_x`: `R diag(1, -1, -1)`.
pub fn flip_rotation(r: &Rotation3) -> Rotation3 {
    let m = r.matrix();
    Rotation3::from_matrix_unchecked(Mat3::from_cols(m.col(0), -m.col(1), -m.col(2)))
}

/// `1 - cos∠(x, e)`.
pub fn cosine_loss(x: Vec3, e: Vec3) -> Result<f64> {
    let (nx, ne) = (x.norm(), e.norm());
    if !(nx > 1e-9) {
        return Err(Error::DegenerateDirection(nx));
    }
    if !(ne > 1e-9) {
        return Err(Error::DegenerateDirection(ne));
    }
    Ok(1.0 - x.dot(e) / (nx * ne))
}

/// Gradient of [`cosine_loss`] with respect to `x`.
pub fn cosine_loss_grad(x: Vec3, e: Vec3) -> Result<Vec3> {
    let (nx, ne) = (x.norm(), e.norm());
    if !(nx > 1e-9) {
        return Err(Error::DegenerateDirection(nx));
    }
    if !(ne > 1e-9) {
        return Err(Error::DegenerateDirection(ne));
    }
    Ok(x * (x.dot(e) / (nx * nx * nx * ne)) - e * (1.0 / (nx * ne)))
}

/// The two terms of the representation loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepLossTerms {
    pub cosine: f64,
    pub bnll: f64,
}

impl RepLossTerms {
    pub fn total(&self) -> f64 {
        self.cosine + self.bnll
    }
}

/// `(1 - cos∠(x, e_x)) + L_BNLL(A, e_z)` against the columns of `r_gt`.
pub fn rep_loss(rep: &PlanarSymRep, r_gt: &Rotation3, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(rep_loss_terms(rep, r_gt, &*quadrature_for(cfg)?)?.total())
}

pub fn rep_loss_terms(
    rep: &PlanarSymRep,
    r_gt: &Rotation3,
    quad: &NormConstQuadrature,
) -> Result<RepLossTerms> {
    let cosine = cosine_loss(rep.x, r_gt.ex())?;
    let bnll = nll_with(&rep.matrix()?, r_gt.ez(), quad)?;
    Ok(RepLossTerms { cosine, bnll })
}

/// Gradient of [`rep_loss`] over `(a1..a6, x1..x3)`.
pub fn rep_loss_grad(rep: &PlanarSymRep, r_gt: &Rotation3, cfg: &QuadratureConfig) -> Result<[f64; 9]> {
    rep_loss_grad_with(rep, r_gt, &*quadrature_for(cfg)?)
}

pub fn rep_loss_grad_with(
    rep: &PlanarSymRep,
    r_gt: &Rotation3,
    quad: &NormConstQuadrature,
) -> Result<[f64; 9]> {
    rep_loss_and_grad_with(rep, r_gt, quad).map(|(_, g)| g)
}

/// Loss terms and gradient together, sharing one quadrature pass.
pub fn rep_loss_and_grad_with(
    rep: &PlanarSymRep,
    r_gt: &Rotation3,
    quad: &NormConstQuadrature,
) -> Result<(RepLossTerms, [f64; 9])> {
    let cosine = cosine_loss(rep.x, r_gt.ex())?;
    let gx = cosine_loss_grad(rep.x, r_gt.ex())?;
    let (bnll, ga) = nll_and_grad_with(&rep.matrix()?, r_gt.ez(), quad)?;
    let mut g = [0.0; 9];
    g[..6].copy_from_slice(&ga.packed());
    g[6..].copy_from_slice(&gx.to_array());
    Ok((RepLossTerms { cosine, bnll }, g))
}

/// Rotation from the Bingham mode: `e_z = v_λ3`, Gram-Schmidt against `x`.
pub fn reconstruct_mode(rep: &PlanarSymRep) -> Result<GraspRotationPair> {
    let ez = rep.distribution()?.mode();
    let primary = gram_schmidt_rotation(rep.x, ez)?;
    Ok(GraspRotationPair { primary, flipped: flip_rotation(&primary) })
}

/// `n` rotations, each built from one `e_z` sampled from `B(A)` and the shared `x`.
pub fn reconstruct_sampled(rep: &PlanarSymRep, n: usize, seed: u64) -> Result<Vec<Rotation3>> {
    let samples = sample(&rep.distribution()?, n, seed)?;
    samples
        .points
        .iter()
        .map(|&ez| gram_schmidt_rotation(rep.x, ez))
        .collect()
}

/// True when the eigenvalue-gap confidence reaches `threshold`.
pub fn confidence_mask(rep: &PlanarSymRep, threshold: f64) -> Result<bool> {
    Ok(rep.distribution()?.confidence() >= threshold)
}

/// Which ground truth of a symmetric pair produced the smaller loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Primary,
    Flipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipMinLoss {
    pub loss: f64,
    pub branch: Branch,
    pub primary_loss: f64,
    pub flipped_loss: f64,
}

impl FlipMinLoss {
    fn pick(primary_loss: f64, flipped_loss: f64) -> Self {
        // ties go to the non-flipped ground truth
        let branch = if flipped_loss < primary_loss { Branch::Flipped } else { Branch::Primary };
        let loss = primary_loss.min(flipped_loss);
        Self { loss, branch, primary_loss, flipped_loss }
    }
}

/// Flip-min loss for the 6-channel `(e_x, e_z)` rotation-matrix baseline.
pub fn flipmin_loss_rotmat(pred_ex: Vec3, pred_ez: Vec3, r_gt: &Rotation3) -> Result<FlipMinLoss> {
    let branch_loss = |g: &Rotation3| -> Result<f64> {
        Ok(cosine_loss(pred_ex, g.ex())? + cosine_loss(pred_ez, g.ez())?)
    };
    Ok(FlipMinLoss::pick(branch_loss(r_gt)?, branch_loss(&flip_rotation(r_gt))?))
}

/// Flip-min loss and its gradient over `(ex1..ex3, ez1..ez3)`, taken on the
/// winning branch.
pub fn flipmin_loss_rotmat_grad(
    pred_ex: Vec3,
    pred_ez: Vec3,
    r_gt: &Rotation3,
) -> Result<(FlipMinLoss, [f64; 6])> {
    let loss = flipmin_loss_rotmat(pred_ex, pred_ez, r_gt)?;
    let target = match loss.branch {
        Branch::Primary => *r_gt,
        Branch::Flipped => flip_rotation(r_gt),
    };
    let gx = cosine_loss_grad(pred_ex, target.ex())?;
    let gz = cosine_loss_grad(pred_ez, target.ez())?;
    let mut g = [0.0; 6];
    g[..3].copy_from_slice(&gx.to_array());
    g[3..].copy_from_slice(&gz.to_array());
    Ok((loss, g))
}

/// Unit quaternion `w + xi + yj + zk`; `q` and `-q` are the same rotation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    /// The 180° rotation about the body x axis.
    pub const FLIP: UnitQuaternion = UnitQuaternion { w: 0.0, x: 1.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Self { w, x, y, z };
        let n = q.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("quaternion norm {n} is not 1")));
        }
        Ok(q)
    }

    /// Normalizes an arbitrary 4-vector.
    pub fn from_raw(v: [f64; 4]) -> Result<Self> {
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(n > 1e-9) || !n.is_finite() {
            return Err(Error::DegenerateDirection(n));
        }
        Ok(Self { w: v[0] / n, x: v[1] / n, y: v[2] / n, z: v[3] / n })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &UnitQuaternion) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Hamilton product `self ⊗ o`.
    pub fn mul(&self, o: &UnitQuaternion) -> UnitQuaternion {
        UnitQuaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn to_rotation(&self) -> Rotation3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Rotation3::from_matrix_unchecked(Mat3([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]))
    }

    /// Shepperd's method; the sign is chosen so that the largest component is positive.
    pub fn from_rotation(r: &Rotation3) -> UnitQuaternion {
        let m = &r.matrix().0;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let q = if trace > m[0][0].max(m[1][1]).max(m[2][2]) {
            let s = 2.0 * (1.0 + trace).sqrt();
            [0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s]
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let s = 2.0 * (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt();
            [(m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
        } else if m[1][1] >= m[2][2] {
            let s = 2.0 * (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt();
            [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s]
        } else {
            let s = 2.0 * (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt();
            [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s]
        };
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        UnitQuaternion { w: q[0] / n, x: q[1] / n, y: q[2] / n, z: q[3] / n }
    }
}

impl std::ops::Neg for UnitQuaternion {
    type Output = UnitQuaternion;
    fn neg(self) -> UnitQuaternion {
        UnitQuaternion { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

/// Flip-min loss `min_g (1 - |⟨q, g⟩|)` over `g ∈ {q_gt, q_gt ⊗ q_flip}`.
pub fn flipmin_loss_quat(pred_q: &UnitQuaternion, q_gt: &UnitQuaternion) -> Result<FlipMinLoss> {
    for q in [pred_q, q_gt] {
        UnitQuaternion::new(q.w, q.x, q.y, q.z)?;
    }
    let flipped = q_gt.mul(&UnitQuaternion::FLIP);
    Ok(FlipMinLoss::pick(1.0 - pred_q.dot(q_gt).abs(), 1.0 - pred_q.dot(&flipped).abs()))
}

/// Flip-min quaternion loss on an unnormalized 4-channel output, with its
/// gradient through the normalization.
pub fn flipmin_loss_quat_raw_grad(raw: [f64; 4], q_gt: &UnitQuaternion) -> Result<(FlipMinLoss, [f64; 4])> {
    let q = UnitQuaternion::from_raw(raw)?;
    let loss = flipmin_loss_quat(&q, q_gt)?;
    let target = match loss.branch {
        Branch::Primary => *q_gt,
        Branch::Flipped => q_gt.mul(&UnitQuaternion::FLIP),
    };
    let n = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
    let d = q.dot(&target);
    let sign = if d >= 0.0 { 1.0 } else { -1.0 };
    let (qa, ga) = (q.to_array(), target.to_array());
    // ∂(q·g)/∂raw = (g - q (q·g)) / |raw|
    let grad = std::array::from_fn(|k| -sign * (ga[k] - qa[k] * d) / n);
    Ok((loss, grad))
}
