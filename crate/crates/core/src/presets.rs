//! Named test contours, source and target fields, and perturbations.

use crate::error::{argument, Result};
use crate::geometry::{Contour, ContourFunction};
use crate::spectral::{ChebGrid, GridField};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// The closed test contours, each given as a parametrization over `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContourPreset {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
}

impl ContourPreset {
    pub const ALL: [ContourPreset; 6] =
        [ContourPreset::C1, ContourPreset::C2, ContourPreset::C3, ContourPreset::C4, ContourPreset::C5, ContourPreset::C6];

    pub fn point(self, t: f64) -> [f64; 2] {
        let (c, s) = (t.cos(), t.sin());
        match self {
            ContourPreset::C1 => [0.4 * c + 0.1, 0.4 * s - 0.1],
            ContourPreset::C2 => [0.2 * c + 0.4, 0.2 * s + 0.4],
            ContourPreset::C3 => [0.3 * c, 0.2 * s],
            ContourPreset::C4 => {
                let r = 0.4 * (1.0 + 0.1 * (3.0 * t).cos());
                [r * c + 0.1, r * s + 0.1]
            }
            ContourPreset::C5 => {
                let r = 0.4 * (1.0 + 0.1 * (4.0 * t).cos());
                [r * c + 0.1, r * s + 0.1]
            }
            ContourPreset::C6 => {
                let r = 3.0 / (2.0 * PI);
                [r * c - 0.4, r * s + 0.3]
            }
        }
    }

    /// The contour resampled to `m` nodes equispaced in arc length.
    pub fn contour(self, m: usize) -> Result<Contour> {
        let m_in = (4 * m).max(512);
        Contour::from_parametric(|t| self.point(t), m_in, m)
    }

    pub fn name(self) -> &'static str {
        match self {
            ContourPreset::C1 => "C1",
            ContourPreset::C2 => "C2",
            ContourPreset::C3 => "C3",
            ContourPreset::C4 => "C4",
            ContourPreset::C5 => "C5",
            ContourPreset::C6 => "C6",
        }
    }
}

impl fmt::Display for ContourPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContourPreset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        ContourPreset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| argument(format!("unknown contour preset '{s}' (expected C1..C6)")))
    }
}

/// Closed-form source and target fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldPreset {
    /// `50 − 15x² − 15(y − 1/2)²`
    QPaper,
    /// `15 + sin(4x − 1) cos(4y − 1)`
    UbarSin,
    /// `15 + sin(2πx + π) cos(2πy + π/2)`
    UbarCells,
}

impl FieldPreset {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            FieldPreset::QPaper => 50.0 - 15.0 * x * x - 15.0 * (y - 0.5).powi(2),
            FieldPreset::UbarSin => 15.0 + (4.0 * x - 1.0).sin() * (4.0 * y - 1.0).cos(),
            FieldPreset::UbarCells => 15.0 + (2.0 * PI * x + PI).sin() * (2.0 * PI * y + PI / 2.0).cos(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldPreset::QPaper => "q_paper",
            FieldPreset::UbarSin => "ubar_sin",
            FieldPreset::UbarCells => "ubar_cells",
        }
    }
}

impl FromStr for FieldPreset {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        [FieldPreset::QPaper, FieldPreset::UbarSin, FieldPreset::UbarCells]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| argument(format!("unknown field preset '{s}' (expected q_paper, ubar_sin or ubar_cells)")))
    }
}

/// A scalar field on the square: constant, closed form, or samples on a
/// Chebyshev grid of matching resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    Preset(FieldPreset),
    Samples(GridField),
}

impl FieldSpec {
    pub fn sample(&self, grid: &ChebGrid) -> Result<GridField> {
        match self {
            FieldSpec::Constant(c) => Ok(GridField::from_fn(grid, |_, _| *c)),
            FieldSpec::Preset(p) => Ok(GridField::from_fn(grid, |x, y| p.eval(x, y))),
            FieldSpec::Samples(f) if f.n == grid.n() => Ok(f.clone()),
            FieldSpec::Samples(f) => Err(argument(format!(
                "gridded samples have resolution {} but the grid has {}",
                f.n,
                grid.n()
            ))),
        }
    }
}

impl FieldSpec {
    /// Values at arbitrary points; gridded samples are interpolated by the
    /// tensor Chebyshev polynomial.
    pub fn eval_points(&self, grid: &ChebGrid, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        match self {
            FieldSpec::Constant(c) => Ok(vec![*c; points.len()]),
            FieldSpec::Preset(p) => Ok(points.iter().map(|q| p.eval(q[0], q[1])).collect()),
            FieldSpec::Samples(_) => Ok(grid.eval_polynomial(&self.sample(grid)?, points)),
        }
    }
}

/// Perturbation `ζ_j = sin(j t)` with `t = 2πs/L` at the contour nodes.
pub fn perturbation(contour: &Contour, j: u32) -> ContourFunction {
    let m = contour.len();
    ContourFunction::from_fn(contour, |l| (j as f64 * 2.0 * PI * l as f64 / m as f64).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c6_has_length_three() {
        let c = ContourPreset::C6.contour(64).unwrap();
        assert!((c.length() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn presets_parse_by_name() {
        assert_eq!("c4".parse::<ContourPreset>().unwrap(), ContourPreset::C4);
        assert!("C7".parse::<ContourPreset>().is_err());
        assert_eq!("ubar_cells".parse::<FieldPreset>().unwrap(), FieldPreset::UbarCells);
        assert!("q".parse::<FieldPreset>().is_err());
    }

    #[test]
    fn field_samples_must_match_grid() {
        let g = ChebGrid::new(10).unwrap();
        let spec = FieldSpec::Samples(GridField::zeros(12));
        assert!(spec.sample(&g).is_err());
        let v = FieldSpec::Preset(FieldPreset::QPaper).sample(&g).unwrap();
        let (x, y) = (g.nodes()[2], g.nodes()[7]);
        assert_eq!(v.at(2, 7), 50.0 - 15.0 * x * x - 15.0 * (y - 0.5) * (y - 0.5));
    }
}
