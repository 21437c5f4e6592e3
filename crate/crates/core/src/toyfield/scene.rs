use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat3::{Mat3, Rotation3, Vec3};

/// Axis-aligned box footprint on the table plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: [f64; 2],
    /// Extent along x and y, meters.
    pub size: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub center: [f64; 2],
    pub diameter: f64,
    /// Cells closer than this to the axis accept any yaw.
    pub center_radius: f64,
}

/// Scene description, all lengths in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub cell: f64,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cylinder: Option<CylinderSpec>,
}

impl SceneConfig {
    /// A 200×60 mm box at the origin, long side along x.
    pub fn box_only() -> Self {
        Self {
            x_range: [-0.12, 0.12],
            y_range: [-0.05, 0.05],
            cell: 0.01,
            box_: Some(BoxSpec { center: [0.0, 0.0], size: [0.2, 0.06] }),
            cylinder: None,
        }
    }

    /// The box next to a 70 mm diameter flat cylinder.
    pub fn box_and_cylinder() -> Self {
        Self {
            x_range: [-0.12, 0.12],
            y_range: [-0.08, 0.10],
            cell: 0.01,
            box_: Some(BoxSpec { center: [0.0, -0.04], size: [0.2, 0.06] }),
            cylinder: Some(CylinderSpec { center: [0.0, 0.05], diameter: 0.07, center_radius: 0.02 }),
        }
    }

    fn validate(&self) -> Result<(usize, usize)> {
        let finite = self.x_range.iter().chain(&self.y_range).all(|v| v.is_finite());
        if !finite || self.x_range[1] <= self.x_range[0] || self.y_range[1] <= self.y_range[0] {
            return Err(Error::Config("grid ranges must be finite and increasing".into()));
        }
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::Config(format!("cell size must be positive, got {}", self.cell)));
        }
        let nx = ((self.x_range[1] - self.x_range[0]) / self.cell).round() as usize;
        let ny = ((self.y_range[1] - self.y_range[0]) / self.cell).round() as usize;
        if nx == 0 || ny == 0 || nx * ny > 1_000_000 {
            return Err(Error::Config(format!("grid of {nx}×{ny} cells is out of range")));
        }
        if let Some(b) = &self.box_ {
            if !(b.size[0] > 0.0 && b.size[1] > 0.0) {
                return Err(Error::Config("box size must be positive".into()));
            }
        }
        if let Some(c) = &self.cylinder {
            if !(c.diameter > 0.0 && c.center_radius > 0.0 && c.center_radius <= 0.5 * c.diameter) {
                return Err(Error::Config(
                    "cylinder needs 0 < center_radius <= diameter/2".into(),
                ));
            }
        }
        if let (Some(b), Some(c)) = (&self.box_, &self.cylinder) {
            // distance from the cylinder axis to the closest point of the box
            let dx = ((c.center[0] - b.center[0]).abs() - 0.5 * b.size[0]).max(0.0);
            let dy = ((c.center[1] - b.center[1]).abs() - 0.5 * b.size[1]).max(0.0);
            if dx.hypot(dy) < 0.5 * c.diameter {
                return Err(Error::Config("box and cylinder overlap".into()));
            }
        }
        Ok((nx, ny))
    }
}

/// Ground truth for one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellLabel {
    Empty,
    /// Two valid rotations, `primary` and its flip about `e_x`.
    SymmetricPair(Rotation3),
    /// Top-down grasp with any yaw about z.
    YawFree,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
    pub center: [f64; 2],
    pub label: CellLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldScene {
    pub config: SceneConfig,
    pub nx: usize,
    pub ny: usize,
    /// Row-major over `(iy, ix)`.
    pub cells: Vec<Cell>,
}

/// Top-down box grasp: approach `e_x = -z`, symmetric-plane normal `e_z = +y`.
pub fn box_grasp() -> Rotation3 {
    let ex = -Vec3::Z;
    let ez = Vec3::Y;
    Rotation3::from_matrix_unchecked(Mat3::from_cols(ex, ez.cross(ex), ez))
}

/// Top-down grasp whose symmetric-plane normal has the given yaw.
pub fn yaw_grasp(yaw: f64) -> Rotation3 {
    let ex = -Vec3::Z;
    let ez = Vec3::new(yaw.cos(), yaw.sin(), 0.0);
    Rotation3::from_matrix_unchecked(Mat3::from_cols(ex, ez.cross(ex), ez))
}

pub fn gen_scene(config: &SceneConfig) -> Result<FieldScene> {
    let (nx, ny) = config.validate()?;
    let mut cells = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let cx = config.x_range[0] + (ix as f64 + 0.5) * config.cell;
            let cy = config.y_range[0] + (iy as f64 + 0.5) * config.cell;
            let in_box = config.box_.as_ref().is_some_and(|b| {
                (cx - b.center[0]).abs() <= 0.5 * b.size[0] && (cy - b.center[1]).abs() <= 0.5 * b.size[1]
            });
            let at_axis = config.cylinder.as_ref().is_some_and(|c| {
                (cx - c.center[0]).hypot(cy - c.center[1]) <= c.center_radius
            });
            let label = if in_box {
                CellLabel::SymmetricPair(box_grasp())
            } else if at_axis {
                CellLabel::YawFree
            } else {
                CellLabel::Empty
            };
            cells.push(Cell { ix, iy, center: [cx, cy], label });
        }
    }
    Ok(FieldScene { config: config.clone(), nx, ny, cells })
}

impl FieldScene {
    pub fn cell(&self, ix: usize, iy: usize) -> &Cell {
        &self.cells[iy * self.nx + ix]
    }

    pub fn labeled(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.label != CellLabel::Empty)
    }

    /// Cell center mapped to roughly `[-1, 1]²`.
    pub fn normalized_input(&self, cell: &Cell) -> [f64; 2] {
        let c = &self.config;
        let mid = [0.5 * (c.x_range[0] + c.x_range[1]), 0.5 * (c.y_range[0] + c.y_range[1])];
        let half = 0.5 * (c.x_range[1] - c.x_range[0]).max(c.y_range[1] - c.y_range[0]);
        [(cell.center[0] - mid[0]) / half, (cell.center[1] - mid[1]) / half]
    }
}
