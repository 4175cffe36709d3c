use serde::{Deserialize, Serialize};

use crate::geometry::KerrAds;
use crate::numerics::chebyshev::ChebGrid;
use crate::numerics::legendre::LegendreGrid;

use super::OperatorError;

pub const MIN_RADIAL: usize = 8;
pub const MIN_ANGULAR: usize = 4;

/// Where the radial interval ends on the black-hole side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnerEdge {
    /// Collocation continues to r₊ − δ with no boundary row.
    Extended { delta: f64 },
    /// Dirichlet wall at r = r1.
    Wall { r1: f64 },
}

/// Tensor grid in (s, x) with s = 1/r ∈ [0, s_max] (Chebyshev–Lobatto, s = 0 first)
/// and x = cos θ at Gauss–Legendre nodes. Unknown (i, j) sits at index i·n_angular + j.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub n_radial: usize,
    pub n_angular: usize,
    pub inner: InnerEdge,
    pub s_max: f64,
    pub radial: ChebGrid,
    pub angular: LegendreGrid,
}

impl GridSpec {
    pub fn new(n_radial: usize, n_angular: usize, s_max: f64, inner: InnerEdge) -> Result<Self, OperatorError> {
        if n_radial < MIN_RADIAL || n_angular < MIN_ANGULAR {
            return Err(OperatorError::InvalidCounts { n_radial, n_angular });
        }
        Ok(Self {
            n_radial,
            n_angular,
            inner,
            s_max,
            radial: ChebGrid::new(n_radial, 0.0, s_max),
            angular: LegendreGrid::new(n_angular),
        })
    }

    pub fn len(&self) -> usize {
        self.n_radial * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_angular + j
    }

    pub fn s(&self, i: usize) -> f64 {
        self.radial.nodes[i]
    }

    pub fn x(&self, j: usize) -> f64 {
        self.angular.nodes[j]
    }

    /// Radius of radial node i (infinite at the conformal boundary).
    pub fn r(&self, i: usize) -> f64 {
        1.0 / self.radial.nodes[i]
    }

    pub fn theta(&self, j: usize) -> f64 {
        self.angular.nodes[j].acos()
    }

    /// Index of the angular node mirrored through the equator.
    pub fn mirror(&self, j: usize) -> usize {
        self.n_angular - 1 - j
    }

    /// Same layout with different node counts.
    pub fn resized(&self, n_radial: usize, n_angular: usize) -> Result<Self, OperatorError> {
        Self::new(n_radial, n_angular, self.s_max, self.inner)
    }

    /// Interpolate a grid function from `self` onto `target`. Target nodes beyond
    /// this grid's s-range receive zero.
    pub fn interpolate_to(&self, target: &GridSpec, values: &[crate::numerics::C64]) -> Vec<crate::numerics::C64> {
        use crate::numerics::C64;
        let mut out = vec![C64::new(0.0, 0.0); target.len()];
        let tol = 1e-14 * self.s_max;
        let ang_rows: Vec<Vec<f64>> = (0..target.n_angular).map(|jt| self.angular.interp_row(target.x(jt))).collect();
        for it in 0..target.n_radial {
            let st = target.s(it);
            if st > self.s_max + tol {
                continue;
            }
            let rad = self.radial.interp_row(st.min(self.s_max));
            for (jt, arow) in ang_rows.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (i, &ci) in rad.iter().enumerate() {
                    if ci == 0.0 {
                        continue;
                    }
                    for (j, &cj) in arow.iter().enumerate() {
                        acc += values[self.index(i, j)] * (ci * cj);
                    }
                }
                out[target.index(it, jt)] = acc;
            }
        }
        out
    }
}

/// Grid on X_δ = (r₊ − δ, ∞).
pub fn build_grid(geom: &KerrAds, n_radial: usize, n_angular: usize) -> Result<GridSpec, OperatorError> {
    GridSpec::new(n_radial, n_angular, 1.0 / geom.r_inner(), InnerEdge::Extended { delta: geom.delta })
}

/// Grid on {r ≥ r1} with a Dirichlet wall at r1.
pub fn build_truncated_grid(
    geom: &KerrAds,
    n_radial: usize,
    n_angular: usize,
    r1: f64,
) -> Result<GridSpec, OperatorError> {
    if r1 <= geom.r_plus() {
        return Err(OperatorError::InvalidWall { r1, r_plus: geom.r_plus() });
    }
    GridSpec::new(n_radial, n_angular, 1.0 / r1, InnerEdge::Wall { r1 })
}
