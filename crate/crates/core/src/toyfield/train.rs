use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{RepKind, TinyModel};
use super::scene::{yaw_grasp, CellLabel, FieldScene};
use crate::error::{Error, Result};
use crate::mat3::{Rotation3, Vec3};
use crate::normconst::NormConstQuadrature;
use crate::rng::{stream_rng, streams};
use crate::symrep::{
    cosine_loss, cosine_loss_grad, flip_rotation, flipmin_loss_quat_raw_grad,
    flipmin_loss_rotmat_grad, rep_loss_and_grad_with, PlanarSymRep, UnitQuaternion,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Box cells present `R` on even epochs and `flip(R)` on odd ones. When
    /// off, every box cell always presents `R` and baselines regress to it
    /// directly instead of taking the flip-min.
    pub alternate_signs: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { epochs: 2000, seed: 0, learning_rate: 1e-2, alternate_signs: true }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: TinyModel,
    /// Mean loss over labeled cells at each epoch, before that epoch's update.
    pub epoch_losses: Vec<f64>,
}

/// Seed for one kind in a multi-kind comparison run.
pub fn derive_seed(seed: u64, kind: RepKind) -> u64 {
    let tag = RepKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64;
    // splitmix64 finalizer
    let mut z = seed ^ (tag + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn train_toy(scene: &FieldScene, kind: RepKind, epochs: usize, seed: u64) -> Result<TinyModel> {
    let opts = TrainOptions { epochs, seed, ..Default::default() };
    Ok(train_toy_with(scene, kind, &opts, NormConstQuadrature::default_instance())?.model)
}

/// Loss and output gradient of one cell against one ground-truth pose.
pub fn cell_loss_and_grad(
    kind: RepKind,
    output: &[f64],
    target: &Rotation3,
    flip_min: bool,
    quad: &NormConstQuadrature,
) -> Result<(f64, Vec<f64>)> {
    match kind {
        RepKind::Ours => {
            let rep = PlanarSymRep::from_slice(output)?;
            let (terms, g) = rep_loss_and_grad_with(&rep, target, quad)?;
            Ok((terms.total(), g.to_vec()))
        }
        RepKind::Rotmat => {
            let ex = Vec3::new(output[0], output[1], output[2]);
            let ez = Vec3::new(output[3], output[4], output[5]);
            if flip_min {
                let (loss, g) = flipmin_loss_rotmat_grad(ex, ez, target)?;
                Ok((loss.loss, g.to_vec()))
            } else {
                let loss = cosine_loss(ex, target.ex())? + cosine_loss(ez, target.ez())?;
                let gx = cosine_loss_grad(ex, target.ex())?.to_array();
                let gz = cosine_loss_grad(ez, target.ez())?.to_array();
                Ok((loss, gx.iter().chain(&gz).copied().collect()))
            }
        }
        RepKind::Quat => {
            let raw = [output[0], output[1], output[2], output[3]];
            let q_gt = UnitQuaternion::from_rotation(target);
            let (loss, g) = flipmin_loss_quat_raw_grad(raw, &q_gt)?;
            let (value, g) = if flip_min {
                (loss.loss, g)
            } else {
                // Primary branch only: 1 - |q·q_gt|, differentiated through the normalization.
                let q = UnitQuaternion::from_raw(raw)?;
                let n = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
                let d = q.dot(&q_gt);
                let sign = if d >= 0.0 { 1.0 } else { -1.0 };
                let (qa, ga) = (q.to_array(), q_gt.to_array());
                (loss.primary_loss, std::array::from_fn(|k| -sign * (ga[k] - qa[k] * d) / n))
            };
            Ok((value, g.to_vec()))
        }
    }
}

/// Full-batch gradient descent over all labeled cells.
pub fn train_toy_with(
    scene: &FieldScene,
    kind: RepKind,
    opts: &TrainOptions,
    quad: &NormConstQuadrature,
) -> Result<TrainOutcome> {
    opts.validate()?;
    let labeled: Vec<_> = scene.labeled().collect();
    if labeled.is_empty() {
        return Err(Error::InvalidArgument("scene has no labeled cells".into()));
    }
    let mut model = TinyModel::new(kind, &mut stream_rng(opts.seed, streams::MODEL_INIT));
    let mut label_rng = stream_rng(opts.seed, streams::LABELS);
    let inputs: Vec<[f64; 2]> = labeled.iter().map(|c| scene.normalized_input(c)).collect();
    let scale = 1.0 / labeled.len() as f64;
    let mut epoch_losses = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        let mut grads = model.zero_grad();
        let mut total = 0.0;
        for (cell, &input) in labeled.iter().zip(&inputs) {
            let (target, flip_min) = match cell.label {
                CellLabel::SymmetricPair(r) if opts.alternate_signs && epoch % 2 == 1 => {
                    (flip_rotation(&r), true)
                }
                CellLabel::SymmetricPair(r) => (r, opts.alternate_signs),
                CellLabel::YawFree => {
                    (yaw_grasp(label_rng.gen_range(0.0..std::f64::consts::TAU)), true)
                }
                CellLabel::Empty => unreachable!("filtered above"),
            };
            let cache = model.forward(input);
            let (loss, d_out) = cell_loss_and_grad(kind, &cache.output, &target, flip_min, quad)?;
            total += loss;
            model.backward(&cache, &d_out, &mut grads);
        }
        epoch_losses.push(total * scale);
        model.apply(&grads, opts.learning_rate, scale);
        if !model.is_finite() {
            return Err(Error::Internal(format!("training diverged at epoch {epoch}")));
        }
    }
    Ok(TrainOutcome { model, epoch_losses })
}
