//! Stretched tensor-product meshes on [-1,1]^2.

use crate::error::{Error, Result};

/// Cartesian mesh graded toward all four walls.
///
/// Node coordinates are built for one half axis and mirrored, so the grid is
/// symmetric about zero to machine precision. Cell widths grow geometrically
/// from each wall to the center.
#[derive(Debug, Clone)]
pub struct StretchedMesh {
    nx: usize,
    ny: usize,
    x_coords: Vec<f64>,
    y_coords: Vec<f64>,
}

impl StretchedMesh {
    /// Uniform mesh (no grading).
    pub fn uniform(n: usize) -> Result<Self> {
        Self::stretched(n, 1.0)
    }

    /// Mesh with `n` cells per side and `max h / min h = stretch_ratio`.
    ///
    /// The per-cell growth factor follows from the geometric progression:
    /// with m = n/2 cells per half axis, ratio = r^(m-1).
    pub fn stretched(n: usize, stretch_ratio: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Contract(format!(
                "mesh cells per side must be even and >= 4, got {n}"
            )));
        }
        if !(stretch_ratio >= 1.0) {
            return Err(Error::Contract(format!(
                "stretch ratio must be >= 1, got {stretch_ratio}"
            )));
        }
        let m = n / 2;
        let r = stretch_ratio.powf(1.0 / (m - 1) as f64);
        let h0 = if r == 1.0 {
            1.0 / m as f64
        } else {
            (r - 1.0) / (r.powi(m as i32) - 1.0)
        };

        let mut coords = vec![0.0; n + 1];
        coords[0] = -1.0;
        let mut pos = -1.0;
        let mut width = h0;
        for k in 1..m {
            pos += width;
            coords[k] = pos;
            width *= r;
        }
        coords[m] = 0.0;
        for k in 1..=m {
            coords[n - k + 1] = -coords[k - 1];
        }
        Ok(Self {
            nx: n,
            ny: n,
            x_coords: coords.clone(),
            y_coords: coords,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn x_coords(&self) -> &[f64] {
        &self.x_coords
    }

    pub fn y_coords(&self) -> &[f64] {
        &self.y_coords
    }

    pub fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x_coords[i], self.y_coords[j])
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Unknown index of interior node (i, j), x-fastest ordering.
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.is_boundary(i, j) {
            None
        } else {
            Some((j - 1) * (self.nx - 1) + (i - 1))
        }
    }

    pub fn n_interior(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    /// Inverse of `interior_index`.
    pub fn interior_node(&self, idx: usize) -> (usize, usize) {
        let i = idx % (self.nx - 1) + 1;
        let j = idx / (self.nx - 1) + 1;
        (i, j)
    }

    pub fn min_spacing(&self) -> f64 {
        self.x_coords
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.x_coords
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.max_spacing() / self.min_spacing()
    }

    /// Plain-text coordinate dump: x list then y list.
    pub fn write_coordinates<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "x {}", self.x_coords.len())?;
        for x in &self.x_coords {
            writeln!(w, "{x:.17e}")?;
        }
        writeln!(w, "y {}", self.y_coords.len())?;
        for y in &self.y_coords {
            writeln!(w, "{y:.17e}")?;
        }
        Ok(())
    }
}
