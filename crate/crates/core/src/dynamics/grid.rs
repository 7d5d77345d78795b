use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Uniform cells on `[-L, L]`.
    FullLine,
    /// Spherical shells on `[0, L]` in dimension `d`, graded by `r = a sinh(xi)`.
    Radial { d: usize },
}

/// Finite-volume mesh. Cell `i` spans faces `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub kind: GridKind,
    pub centers: Vec<f64>,
    pub faces: Vec<f64>,
    pub volumes: Vec<f64>,
    pub face_areas: Vec<f64>,
    /// Mapping scale of radial grids (zero on the full line).
    pub core: f64,
}

/// Surface area of the unit sphere in `R^d` (2 for `d = 1`).
pub fn sphere_area(d: usize) -> f64 {
    let dd = d as f64;
    2.0 * PI.powf(0.5 * dd) / gamma(0.5 * dd)
}

impl Grid {
    pub fn full_line(cells: usize, half_width: f64) -> Result<Self> {
        if cells < 4 || !(half_width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need >= 4 cells and L > 0, got {cells} cells, L = {half_width}"),
            });
        }
        let h = 2.0 * half_width / cells as f64;
        let faces: Vec<f64> = (0..=cells).map(|i| -half_width + h * i as f64).collect();
        let centers = (0..cells).map(|i| -half_width + h * (i as f64 + 0.5)).collect();
        Ok(Self {
            kind: GridKind::FullLine,
            centers,
            faces,
            volumes: vec![h; cells],
            face_areas: vec![1.0; cells + 1],
            core: 0.0,
        })
    }

    /// Radial shells on `[0, L]`; `core` is the length below which the mesh
    /// is close to uniform.
    pub fn radial(d: usize, cells: usize, radius: f64, core: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "radial grids need d >= 2; use the full line for d = 1".into(),
            });
        }
        if cells < 4 || !(radius > 0.0) || !(core > 0.0) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need >= 4 cells, L > 0 and core > 0 (got {cells}, {radius}, {core})"),
            });
        }
        let xi_max = (radius / core).asinh();
        let dxi = xi_max / cells as f64;
        let map = |xi: f64| core * xi.sinh();
        let mut faces: Vec<f64> = (0..=cells).map(|i| map(dxi * i as f64)).collect();
        faces[0] = 0.0;
        faces[cells] = radius;
        let centers = (0..cells).map(|i| map(dxi * (i as f64 + 0.5))).collect();
        let omega = sphere_area(d);
        let dd = d as f64;
        let volumes = faces
            .windows(2)
            .map(|w| omega * (w[1].powi(d as i32) - w[0].powi(d as i32)) / dd)
            .collect();
        let face_areas = faces.iter().map(|r| omega * r.powi(d as i32 - 1)).collect();
        Ok(Self {
            kind: GridKind::Radial { d },
            centers,
            faces,
            volumes,
            face_areas,
            core,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            GridKind::FullLine => 1,
            GridKind::Radial { d } => d,
        }
    }

    pub fn extent(&self) -> f64 {
        *self.faces.last().expect("nonempty grid")
    }

    /// `sum_i f_i V_i`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.volumes).map(|(v, w)| v * w).sum()
    }

    pub fn integrate_with(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.volumes.iter().enumerate().map(|(i, w)| f(i) * w).sum()
    }

    pub fn second_moment(&self, u: &[f64]) -> f64 {
        self.integrate_with(|i| self.centers[i] * self.centers[i] * u[i])
    }

    /// Identically zero on radial grids.
    pub fn first_moment(&self, u: &[f64]) -> f64 {
        match self.kind {
            GridKind::FullLine => self.integrate_with(|i| self.centers[i] * u[i]),
            GridKind::Radial { .. } => 0.0,
        }
    }

    /// Distance between the centers adjacent to interior face `f` (`1 <= f < N`).
    pub fn center_gap(&self, f: usize) -> f64 {
        self.centers[f] - self.centers[f - 1]
    }

    /// Same geometry with every cell halved.
    pub fn refine(&self) -> Result<Self> {
        match self.kind {
            GridKind::FullLine => Self::full_line(2 * self.len(), self.extent()),
            GridKind::Radial { d } => Self::radial(d, 2 * self.len(), self.extent(), self.core),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn full_line_geometry() {
        let g = Grid::full_line(8, 2.0).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g.integrate(&[1.0; 8]) - 4.0).abs() < 1e-14);
        assert!(g.first_moment(&[1.0; 8]).abs() < 1e-14);
    }

    #[test]
    fn radial_volumes_sum_to_ball() {
        let g = Grid::radial(3, 200, 5.0, 0.5).unwrap();
        let vol: f64 = g.volumes.iter().sum();
        assert!((vol - 4.0 / 3.0 * PI * 125.0).abs() < 1e-9 * vol);
        assert_eq!(g.faces[0], 0.0);
        assert!(g.volumes.iter().all(|v| *v > 0.0));
        assert!(g.faces.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn refine_keeps_mapping() {
        let g = Grid::radial(5, 100, 50.0, 0.7).unwrap();
        let r = g.refine().unwrap();
        assert_eq!(r.len(), 200);
        assert!((r.faces[2] - g.faces[1]).abs() < 1e-9 * g.faces[1]);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Grid::full_line(2, 1.0).is_err());
        assert!(Grid::radial(1, 100, 1.0, 1.0).is_err());
        assert!(Grid::radial(3, 100, -1.0, 1.0).is_err());
    }
}
