//! Tilted multi-well surface in two dimensions.
//!
//! `f(w) = slope * w[0] - sum_i depth_i * exp(-|w - c_i|^2 / (2 width_i^2))`.
//! Narrow wells are sharp minima, wide wells are flat ones; the tilt makes
//! descent drift towards negative `w[0]`.

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};
use crate::objective::{Batch, ObjectiveSpec};
use crate::sharpness::{power_iteration, PowerIterationConfig};
use crate::vector::ParamVector;

pub const DEFAULT_SLOPE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Well {
    pub center: [f64; 2],
    pub depth: f64,
    pub width: f64,
}

impl Well {
    pub fn new(center: [f64; 2], depth: f64, width: f64) -> Self {
        Well { center, depth, width }
    }

    /// Curvature at the centre of an isolated well.
    pub fn peak_curvature(&self) -> f64 {
        self.depth / (self.width * self.width)
    }
}

/// A local minimum found by descending from a well centre.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalMinimum {
    pub point: [f64; 2],
    pub value: f64,
    pub sigma_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LandscapeRepr", into = "LandscapeRepr")]
pub struct Landscape2D {
    wells: Vec<Well>,
    slope: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandscapeRepr {
    wells: Vec<Well>,
    #[serde(default = "default_slope")]
    slope: f64,
}

fn default_slope() -> f64 {
    DEFAULT_SLOPE
}

impl TryFrom<LandscapeRepr> for Landscape2D {
    type Error = GsamError;

    fn try_from(r: LandscapeRepr) -> Result<Self> {
        Landscape2D::new(r.wells, r.slope)
    }
}

impl From<Landscape2D> for LandscapeRepr {
    fn from(l: Landscape2D) -> Self {
        LandscapeRepr {
            wells: l.wells,
            slope: l.slope,
        }
    }
}

impl Landscape2D {
    /// Validates the well list and checks, by local descent from every well
    /// centre, that the surface has at least two local minima whose dominant
    /// Hessian eigenvalues differ.
    pub fn new(wells: Vec<Well>, slope: f64) -> Result<Self> {
        let l = Landscape2D::unchecked(wells, slope)?;
        let minima = l.local_minima()?;
        let mut sigmas: Vec<f64> = minima.iter().map(|m| m.sigma_max).collect();
        sigmas.sort_by(f64::total_cmp);
        sigmas.dedup_by(|a, b| (*a - *b).abs() <= 1e-6 * a.abs().max(b.abs()));
        if sigmas.len() < 2 {
            return Err(GsamError::Config(format!(
                "landscape must have two local minima of different sharpness, found {} minima",
                minima.len()
            )));
        }
        Ok(l)
    }

    fn unchecked(wells: Vec<Well>, slope: f64) -> Result<Self> {
        if wells.len() < 2 {
            return Err(GsamError::Config("landscape needs at least two wells".into()));
        }
        for w in &wells {
            let ok = w.center.iter().all(|c| c.is_finite())
                && w.depth > 0.0
                && w.depth.is_finite()
                && w.width > 0.0
                && w.width.is_finite();
            if !ok {
                return Err(GsamError::Config(format!("invalid well {w:?}")));
            }
        }
        if !wells.iter().any(|w| w.width != wells[0].width) {
            return Err(GsamError::Config("landscape needs wells of at least two distinct widths".into()));
        }
        if !slope.is_finite() {
            return Err(GsamError::Config("landscape slope must be finite".into()));
        }
        Ok(Landscape2D { wells, slope })
    }

    pub fn wells(&self) -> &[Well] {
        &self.wells
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let mut f = self.slope * w[0];
        for well in &self.wells {
            let (dx, dy) = (w[0] - well.center[0], w[1] - well.center[1]);
            let s2 = well.width * well.width;
            f -= well.depth * (-(dx * dx + dy * dy) / (2.0 * s2)).exp();
        }
        f
    }

    pub fn gradient(&self, w: &[f64]) -> [f64; 2] {
        let mut g = [self.slope, 0.0];
        for well in &self.wells {
            let (dx, dy) = (w[0] - well.center[0], w[1] - well.center[1]);
            let s2 = well.width * well.width;
            let c = well.depth * (-(dx * dx + dy * dy) / (2.0 * s2)).exp() / s2;
            g[0] += c * dx;
            g[1] += c * dy;
        }
        g
    }

    /// Closed-form Hessian, used as an independent check of the
    /// finite-difference Hessian-vector product.
    pub fn hessian(&self, w: &[f64]) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for well in &self.wells {
            let d = [w[0] - well.center[0], w[1] - well.center[1]];
            let s2 = well.width * well.width;
            let e = well.depth * (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * s2)).exp();
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    h[i][j] += e * (delta / s2 - d[i] * d[j] / (s2 * s2));
                }
            }
        }
        h
    }

    /// Runs gradient descent from each well centre and returns the distinct
    /// minima it reaches, with their power-iteration sharpness. Descents that
    /// leave the region around the wells are dropped.
    pub fn local_minima(&self) -> Result<Vec<LocalMinimum>> {
        let max_curv = self.wells.iter().map(Well::peak_curvature).fold(0.0, f64::max);
        let reach = self
            .wells
            .iter()
            .map(|w| w.center[0].abs().max(w.center[1].abs()) + 10.0 * w.width)
            .fold(0.0, f64::max);
        let spec = ObjectiveSpec::Landscape2D(self.clone());
        let mut found: Vec<LocalMinimum> = Vec::new();
        for well in &self.wells {
            let Some(point) = self.descend(well.center, 0.5 / max_curv, reach) else {
                continue;
            };
            if found
                .iter()
                .any(|m| (m.point[0] - point[0]).hypot(m.point[1] - point[1]) < 1e-6)
            {
                continue;
            }
            let w = ParamVector::new(point.to_vec())?;
            let report = power_iteration(
                &spec,
                &w,
                &Batch::full(),
                &PowerIterationConfig {
                    max_iters: 200,
                    tol: 1e-7,
                    seed: 0,
                },
            )?;
            found.push(LocalMinimum {
                point,
                value: self.value(&point),
                sigma_max: report.sigma,
            });
        }
        Ok(found)
    }

    fn descend(&self, start: [f64; 2], step: f64, reach: f64) -> Option<[f64; 2]> {
        let mut w = start;
        for _ in 0..400_000 {
            let g = self.gradient(&w);
            if g[0].hypot(g[1]) < 1e-10 {
                return Some(w);
            }
            w = [w[0] - step * g[0], w[1] - step * g[1]];
            if w[0].abs() > reach || w[1].abs() > reach {
                return None;
            }
        }
        None
    }
}

/// The surface used by the examples and trajectory experiments.
///
/// Descending the tilt from the start region near `(1.6, 0)`, the path passes
/// four sharp wells (width 0.1, `sigma` about 30), then five medium wells
/// (width 0.2, `sigma` about 17), alternating sides of the `w[1] = 0` ridge,
/// and ends in one wide well (width 0.8, `sigma` about 1.6). Wells are
/// staggered so the ridge itself has no stationary points.
pub fn default_landscape() -> Landscape2D {
    let mut wells = vec![Well::new([-3.5, 0.0], 1.0, 0.8)];
    for (i, x) in [1.2, 0.8, 0.4, 0.0].into_iter().enumerate() {
        wells.push(Well::new([x, if i % 2 == 0 { 0.2 } else { -0.2 }], 0.3, 0.1));
    }
    for (i, x) in [-0.5, -0.95, -1.4, -1.85, -2.3].into_iter().enumerate() {
        wells.push(Well::new([x, if i % 2 == 0 { 0.3 } else { -0.3 }], 0.7, 0.2));
    }
    Landscape2D::new(wells, DEFAULT_SLOPE).expect("default landscape is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_two_widths_and_two_wells() {
        let same = vec![Well::new([0.0, 0.0], 1.0, 0.5), Well::new([3.0, 0.0], 1.0, 0.5)];
        assert!(Landscape2D::new(same, 0.0).is_err());
        assert!(Landscape2D::new(vec![Well::new([0.0, 0.0], 1.0, 0.5)], 0.0).is_err());
        assert!(Landscape2D::new(vec![Well::new([0.0, 0.0], -1.0, 0.5), Well::new([3.0, 0.0], 1.0, 0.2)], 0.0).is_err());
    }

    #[test]
    fn sharp_and_flat_minima_are_detected() {
        let l = Landscape2D::new(
            vec![Well::new([0.0, 0.0], 1.0, 0.1), Well::new([3.0, 0.0], 1.0, 1.0)],
            0.0,
        )
        .unwrap();
        let minima = l.local_minima().unwrap();
        assert_eq!(minima.len(), 2);
        // The flat well's tail bends the sharp one by about -0.09.
        assert!((minima[0].sigma_max - 100.0).abs() < 0.2);
        assert!((minima[1].sigma_max - 1.0).abs() < 1e-3);
    }

    #[test]
    fn default_landscape_has_distinct_sharpness() {
        let minima = default_landscape().local_minima().unwrap();
        assert!(minima.len() >= 2);
    }
}
