//! Benchmark inputs shared by the criterion targets.

use bingsym::{Bingham2D, PlanarSymRep, Rotation3, Sym3, Vec3};

pub fn concentrated() -> Bingham2D {
    Bingham2D::analyze(&Sym3::diag([-50.0, -10.0, 0.0])).expect("diagonal input")
}

pub fn dense_matrix() -> Sym3 {
    let m = bingsym::Mat3::from_row_major([-3.0, 1.2, 0.4, 1.2, -7.5, 2.0, 0.4, 2.0, 1.0]);
    Sym3::from_mat3_symmetrized(&m)
}

pub fn rep_and_target() -> (PlanarSymRep, Rotation3) {
    let rep = PlanarSymRep::from_slice(&[-3.0, 1.2, 0.4, -7.5, 2.0, 1.0, 0.9, 0.1, -0.2])
        .expect("finite input");
    let r = Rotation3::from_axis_angle(Vec3::new(0.3, -0.5, 0.8), 1.1).expect("nonzero axis");
    (rep, r)
}
