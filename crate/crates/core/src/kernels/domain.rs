use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[0, L)^d` with `M` grid points per axis.
///
/// Grid point `i` along an axis sits at `i * L / M`; fields are stored
/// row-major, so in `d = 2` the flat index of `(i, j)` is `i * M + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusDomain {
    dim: usize,
    edge: f64,
    points: usize,
}

impl TorusDomain {
    pub fn new(dim: usize, edge: f64, points: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if !(edge.is_finite() && edge > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "edge length must be positive, got {edge}"
            )));
        }
        if points < 2 {
            return Err(Error::InvalidDomain(format!(
                "need at least 2 grid points per axis, got {points}"
            )));
        }
        Ok(Self { dim, edge, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    /// Grid points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Total number of grid cells, `M^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.edge / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.edge.powi(self.dim as i32)
    }

    /// Coordinate of grid index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.edge / self.points as f64
    }

    /// Integer offset of index `i` in `(-M/2, M/2]`.
    pub fn signed_offset(&self, i: usize) -> i64 {
        let m = self.points as i64;
        let i = i as i64;
        if 2 * i <= m {
            i
        } else {
            i - m
        }
    }

    /// Multi-index of a flat index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.points, flat % self.points],
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.points + idx[1],
        }
    }

    /// Flat index of the grid cell containing a point of the torus.
    pub fn cell_of(&self, x: &[f64; 2]) -> usize {
        let h = self.spacing();
        let axis = |v: f64| ((v / h).floor() as i64).rem_euclid(self.points as i64) as usize;
        match self.dim {
            1 => axis(x[0]),
            _ => axis(x[0]) * self.points + axis(x[1]),
        }
    }

    /// Flat index of the grid point nearest to a point of the torus.
    pub fn nearest_index(&self, x: &[f64; 2]) -> usize {
        let h = self.spacing();
        let axis = |v: f64| ((v / h).round() as i64).rem_euclid(self.points as i64) as usize;
        match self.dim {
            1 => axis(x[0]),
            _ => axis(x[0]) * self.points + axis(x[1]),
        }
    }

    /// Index of `-i` modulo `M` along every axis.
    pub fn negate(&self, flat: usize) -> usize {
        let m = self.points;
        let [i, j] = self.unflatten(flat);
        self.flatten([(m - i) % m, (m - j) % m])
    }

    pub(crate) fn same_as(&self, other: &TorusDomain) -> bool {
        self == other
    }
}
