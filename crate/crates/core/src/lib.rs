//! Planar-symmetric SO(3) representation built on the Bingham distribution on S².
//!
//! A grasp rotation `[e_x e_y e_z]` of a planar-symmetric gripper is encoded by
//! nine numbers: a symmetric matrix `A` (six packed parameters) whose Bingham
//! mode gives `±e_z`, and a free direction `x` giving `e_x`. Because the Bingham
//! density is antipodally symmetric, both 180°-flipped poses share one
//! parameter set.
//!
//! Modules:
//! - [`mat3`]: vectors, packed symmetric matrices, Jacobi eigensolver, Gram-Schmidt.
//! - [`normconst`], [`bingham`], [`sampler`], [`percentile`]: the distribution.
//! - [`symrep`]: the representation, its loss and rotation reconstruction, and
//!   flip-min baselines.
//! - [`fitting`]: maximum-likelihood estimation from samples.
//! - [`toyfield`]: small synthetic rotation-field experiment.

pub mod bingham;
pub mod error;
pub mod fitting;
pub mod mat3;
pub mod normconst;
pub mod percentile;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod symrep;
pub mod toyfield;

pub use bingham::{nll, nll_grad_a, Bingham2D, DistributionJson, NllGradient};
pub use error::{Error, Result};
pub use mat3::{
    eig_sym3, gram_schmidt_rotation, triu_pack, triu_unpack, EigSym3, Mat3, PackedSym6,
    Rotation3, Sym3, Vec3,
};
pub use normconst::{norm_const, norm_const_grad, NormConstQuadrature, QuadratureConfig};
pub use percentile::{percentile_theta_approx, percentile_theta_empirical};
pub use sampler::{sample, KentSampler, SampleSet};
pub use symrep::{
    confidence_mask, flip_rotation, flipmin_loss_quat, flipmin_loss_rotmat, reconstruct_mode,
    reconstruct_sampled, rep_loss, rep_loss_grad, Branch, FlipMinLoss, GraspRotationPair,
    PlanarSymRep, UnitQuaternion,
};
pub use fitting::{fit_mle, scatter_matrix, FitOptions, FitReport};
pub use toyfield::{
    evaluate_field, gen_scene, train_toy, ConsistencyReport, FieldScene, RepKind, SceneConfig,
    TinyModel,
};
