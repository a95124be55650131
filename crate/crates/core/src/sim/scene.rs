use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::field::{BuildingMask, Grid3};

/// Axis-aligned solid box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Building {
    /// Footprint `[x0, x1] x [y0, y1]` standing on the ground (z = 0) with `height`.
    pub fn block(x: [f64; 2], y: [f64; 2], height: f64) -> Building {
        Building {
            min: [x[0], y[0], 0.0],
            max: [x[1], y[1], height],
        }
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }
}

/// Domain grid plus building boxes; serialized as the scene JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub grid: Grid3,
    #[serde(default)]
    pub boxes: Vec<Building>,
}

impl SceneSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<SceneSpec> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: SceneSpec = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("scene {}: {e}", path.display())))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let lo = self.grid.origin;
        let ext = self.grid.extent();
        let tol = 1e-9 * ext.iter().cloned().fold(1.0, f64::max);
        for (n, b) in self.boxes.iter().enumerate() {
            for a in 0..3 {
                ensure!(
                    b.min[a] < b.max[a],
                    "box {n} is empty along axis {a}"
                );
                ensure!(
                    b.min[a] >= lo[a] - tol && b.max[a] <= lo[a] + ext[a] + tol,
                    "box {n} extends outside the domain along axis {a}"
                );
            }
        }
        Ok(())
    }

    /// A cell is solid iff its center lies inside (or on) some box.
    pub fn rasterize(&self) -> Result<BuildingMask> {
        self.validate()?;
        let g = &self.grid;
        let mut solid = Vec::with_capacity(g.len());
        for k in 0..g.nz {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let c = g.center(i, j, k);
                    solid.push(self.boxes.iter().any(|b| b.contains(c)));
                }
            }
        }
        BuildingMask::new(*g, solid)
    }

    /// The same buildings on a different grid covering the same domain.
    pub fn with_grid(&self, grid: Grid3) -> SceneSpec {
        SceneSpec {
            grid,
            boxes: self.boxes.clone(),
        }
    }
}

pub fn rasterize_scene(scene: &SceneSpec) -> Result<BuildingMask> {
    scene.rasterize()
}
