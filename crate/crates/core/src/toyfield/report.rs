use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::model::{RepKind, TinyModel};
use super::scene::{CellLabel, FieldScene};
use crate::error::Result;
use crate::mat3::{gram_schmidt_rotation, Vec3};
use crate::symrep::{reconstruct_mode, PlanarSymRep, UnitQuaternion};

/// Cells whose `|e_z · e_z*|` falls below `cos 30°` count as intermediate.
pub const INTERMEDIATE_COS: f64 = 0.866_025_403_784_438_6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellPrediction {
    pub ix: usize,
    pub iy: usize,
    pub center: [f64; 2],
    pub ez: Vec3,
    /// Eigenvalue-gap confidence; only the Bingham representation has one.
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub kind: RepKind,
    pub axis_alignment: f64,
    pub neighbor_coherence: f64,
    pub intermediate_fraction: f64,
    pub box_confidence: Option<f64>,
    pub cylinder_center_confidence: Option<f64>,
    pub box_cells: usize,
    pub cylinder_center_cells: usize,
}

/// Reconstructs `e_z` in every cell of the grid.
pub fn predict_field(model: &TinyModel, scene: &FieldScene) -> Result<Vec<CellPrediction>> {
    scene
        .cells
        .iter()
        .map(|cell| {
            let out = model.predict(scene.normalized_input(cell));
            let (ez, confidence) = match model.kind {
                RepKind::Ours => {
                    let rep = PlanarSymRep::from_slice(&out)?;
                    let conf = rep.distribution()?.confidence();
                    (reconstruct_mode(&rep)?.primary.ez(), Some(conf))
                }
                RepKind::Rotmat => {
                    let ex = Vec3::new(out[0], out[1], out[2]);
                    let ez = Vec3::new(out[3], out[4], out[5]);
                    (gram_schmidt_rotation(ex, ez)?.ez(), None)
                }
                RepKind::Quat => {
                    let q = UnitQuaternion::from_raw([out[0], out[1], out[2], out[3]])?;
                    (q.to_rotation().ez(), None)
                }
            };
            Ok(CellPrediction { ix: cell.ix, iy: cell.iy, center: cell.center, ez, confidence })
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Metrics over a predicted field; `preds` is indexed like `scene.cells`.
pub fn summarize(scene: &FieldScene, kind: RepKind, preds: &[CellPrediction]) -> ConsistencyReport {
    assert_eq!(preds.len(), scene.cells.len(), "one prediction per cell");
    let box_axis = |i: usize| match scene.cells[i].label {
        CellLabel::SymmetricPair(r) => Some(r.ez()),
        _ => None,
    };
    let box_idx: Vec<usize> = (0..preds.len()).filter(|&i| box_axis(i).is_some()).collect();
    let yaw_idx: Vec<usize> =
        (0..preds.len()).filter(|&i| scene.cells[i].label == CellLabel::YawFree).collect();

    let align: Vec<f64> = box_idx
        .iter()
        .map(|&i| preds[i].ez.dot(box_axis(i).unwrap()).abs().min(1.0))
        .collect();
    let axis_alignment = mean(align.iter().copied()).unwrap_or(0.0);
    let intermediate_fraction = if align.is_empty() {
        0.0
    } else {
        align.iter().filter(|&&a| a < INTERMEDIATE_COS).count() as f64 / align.len() as f64
    };

    let mut pairs = Vec::new();
    for &i in &box_idx {
        let (ix, iy) = (scene.cells[i].ix, scene.cells[i].iy);
        for (jx, jy) in [(ix + 1, iy), (ix, iy + 1)] {
            if jx < scene.nx && jy < scene.ny {
                let j = jy * scene.nx + jx;
                if box_axis(j).is_some() {
                    pairs.push(preds[i].ez.dot(preds[j].ez).abs().min(1.0));
                }
            }
        }
    }
    let neighbor_coherence = mean(pairs.into_iter()).unwrap_or(0.0);

    let conf = |idx: &[usize]| {
        let vals: Option<Vec<f64>> = idx.iter().map(|&i| preds[i].confidence).collect();
        vals.and_then(|v| mean(v.into_iter()))
    };
    ConsistencyReport {
        kind,
        axis_alignment,
        neighbor_coherence,
        intermediate_fraction,
        box_confidence: conf(&box_idx),
        cylinder_center_confidence: conf(&yaw_idx),
        box_cells: box_idx.len(),
        cylinder_center_cells: yaw_idx.len(),
    }
}

pub fn evaluate_field(model: &TinyModel, scene: &FieldScene) -> Result<ConsistencyReport> {
    Ok(summarize(scene, model.kind, &predict_field(model, scene)?))
}

/// `cx,cy,ezx,ezy,ezz,confidence` rows; confidence is blank for baselines.
pub fn field_csv(preds: &[CellPrediction]) -> String {
    let mut s = String::from("cx,cy,ezx,ezy,ezz,confidence\n");
    for p in preds {
        let conf = p.confidence.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{}", p.center[0], p.center[1], p.ez.x, p.ez.y, p.ez.z, conf);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toyfield::scene::{gen_scene, SceneConfig};

    fn synthetic(scene: &FieldScene, ez_of: impl Fn(usize) -> Vec3) -> Vec<CellPrediction> {
        scene
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| CellPrediction { ix: c.ix, iy: c.iy, center: c.center, ez: ez_of(i), confidence: None })
            .collect()
    }

    #[test]
    fn perfect_field() {
        let scene = gen_scene(&SceneConfig::box_only()).unwrap();
        let preds = synthetic(&scene, |i| if i % 3 == 0 { -Vec3::Y } else { Vec3::Y });
        let r = summarize(&scene, RepKind::Rotmat, &preds);
        assert_eq!(r.axis_alignment, 1.0);
        assert_eq!(r.intermediate_fraction, 0.0);
        assert_eq!(r.neighbor_coherence, 1.0);
        assert_eq!(r.box_cells, 120);
        assert_eq!(r.box_confidence, None);
    }

    #[test]
    fn one_intermediate_cell_in_a_hundred() {
        let mut cfg = SceneConfig::box_only();
        cfg.x_range = [-0.1, 0.1];
        cfg.y_range = [-0.025, 0.025];
        cfg.box_.as_mut().unwrap().size = [0.2, 0.05];
        let scene = gen_scene(&cfg).unwrap();
        assert_eq!(scene.labeled().count(), 100);
        let preds = synthetic(&scene, |i| match i {
            17 => Vec3::X,
            i if i % 2 == 0 => Vec3::Y,
            _ => -Vec3::Y,
        });
        let r = summarize(&scene, RepKind::Quat, &preds);
        assert!((r.intermediate_fraction - 0.01).abs() < 1e-15);
        assert!((r.axis_alignment - 0.99).abs() < 1e-15);
    }

    #[test]
    fn metrics_ignore_the_sign_of_ez() {
        let scene = gen_scene(&SceneConfig::box_and_cylinder()).unwrap();
        let dir = |i: usize| Vec3::new((i as f64).sin(), (i as f64 * 0.3).cos(), 0.2).normalized().unwrap();
        let a = synthetic(&scene, dir);
        let b = synthetic(&scene, |i| if i % 5 < 2 { -dir(i) } else { dir(i) });
        assert_eq!(summarize(&scene, RepKind::Ours, &a), summarize(&scene, RepKind::Ours, &b));
    }

    #[test]
    fn csv_layout() {
        let scene = gen_scene(&SceneConfig::box_only()).unwrap();
        let mut preds = synthetic(&scene, |_| Vec3::Y);
        preds[0].confidence = Some(20.5);
        let text = field_csv(&preds);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "cx,cy,ezx,ezy,ezz,confidence");
        assert_eq!(lines.len(), scene.cells.len() + 1);
        assert!(lines[1].ends_with(",20.5"));
        assert!(lines[2].ends_with(','));
    }
}
