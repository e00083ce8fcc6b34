//! Finite site sets on `Z^d` and the states living on them.
//!
//! Two geometries are supported: a centered box `{ x : |x_j| <= radius_j }`
//! (open boundary, used for dense real-space evolution) and a torus with
//! `n_cells_j` copies of the fundamental cell per axis (side `n_cells_j * q_j`,
//! used for the discrete Floquet analysis). Sites are enumerated
//! lexicographically, first axis slowest, and a state is a flat complex
//! vector over that enumeration.

use num_complex::Complex64;

use crate::error::{BlochError, Result};

/// Dense-matrix guard: requests above this side length are refused.
pub const DENSE_GUARD_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    /// Centered box: sites `x` with `|x_j| <= radius[j]`.
    Box { radius: Vec<i64> },
    /// Discrete torus commensurate with a `q`-periodic operator:
    /// `n_cells[j]` fundamental cells, side `n_cells[j] * q[j]`, sites labeled
    /// by canonical representatives in `[0, side_j)`.
    Torus { n_cells: Vec<usize>, q: Vec<i64> },
}

impl Geometry {
    pub fn box_with_radius(radius: Vec<i64>) -> Result<Self> {
        if radius.is_empty() {
            return Err(BlochError::Invalid("geometry needs d >= 1".into()));
        }
        for &r in &radius {
            if r < 0 {
                return Err(BlochError::Invalid(format!("negative box radius {r}")));
            }
        }
        Ok(Geometry::Box { radius })
    }

    pub fn torus(n_cells: Vec<usize>, q: Vec<i64>) -> Result<Self> {
        if n_cells.is_empty() || n_cells.len() != q.len() {
            return Err(BlochError::DimensionMismatch {
                expected: q.len(),
                got: n_cells.len(),
            });
        }
        for (j, (&n, &qj)) in n_cells.iter().zip(&q).enumerate() {
            if qj < 1 || n == 0 {
                return Err(BlochError::IncommensurateTorus {
                    axis: j + 1,
                    side: n as i64 * qj.max(0),
                    q: qj,
                });
            }
        }
        Ok(Geometry::Torus { n_cells, q })
    }

    pub fn dim(&self) -> usize {
        match self {
            Geometry::Box { radius } => radius.len(),
            Geometry::Torus { n_cells, .. } => n_cells.len(),
        }
    }

    /// Number of sites per axis.
    pub fn extents(&self) -> Vec<usize> {
        match self {
            Geometry::Box { radius } => radius.iter().map(|&r| (2 * r + 1) as usize).collect(),
            Geometry::Torus { n_cells, q } => n_cells
                .iter()
                .zip(q)
                .map(|(&n, &qj)| n * qj as usize)
                .collect(),
        }
    }

    pub fn num_sites(&self) -> usize {
        self.extents().iter().product()
    }

    /// Lexicographic index of a site, if it lies in the geometry.
    /// Torus coordinates are reduced modulo the sides first, so any
    /// representative of a torus site is accepted.
    pub fn site_index(&self, x: &[i64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(BlochError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let extents = self.extents();
        let mut idx = 0usize;
        match self {
            Geometry::Box { radius } => {
                for (j, (&xj, &rj)) in x.iter().zip(radius).enumerate() {
                    if xj.abs() > rj {
                        return Err(BlochError::GeometryMismatch(format!(
                            "site {x:?} outside box (|x_{}| > {rj})",
                            j + 1
                        )));
                    }
                    idx = idx * extents[j] + (xj + rj) as usize;
                }
            }
            Geometry::Torus { .. } => {
                for (j, &xj) in x.iter().enumerate() {
                    let side = extents[j] as i64;
                    idx = idx * extents[j] + xj.rem_euclid(side) as usize;
                }
            }
        }
        Ok(idx)
    }

    /// Site at a lexicographic index: box coordinates are centered,
    /// torus coordinates canonical in `[0, side_j)`.
    pub fn site_at(&self, mut idx: usize) -> Vec<i64> {
        let extents = self.extents();
        let mut out = vec![0i64; extents.len()];
        for j in (0..extents.len()).rev() {
            out[j] = (idx % extents[j]) as i64;
            idx /= extents[j];
        }
        if let Geometry::Box { radius } = self {
            for (o, &r) in out.iter_mut().zip(radius) {
                *o -= r;
            }
        }
        out
    }

    /// Like [`site_at`](Self::site_at) but torus coordinates are mapped to the
    /// centered representative in `[-floor(M/2), ceil(M/2))`; position
    /// expectations on a torus are defined through this choice.
    pub fn centered_site_at(&self, idx: usize) -> Vec<i64> {
        let mut x = self.site_at(idx);
        if let Geometry::Torus { .. } = self {
            for (xj, m) in x.iter_mut().zip(self.extents()) {
                let m = m as i64;
                let half = m / 2;
                *xj = (*xj + half).rem_euclid(m) - half;
            }
        }
        x
    }

    /// Index of the nearest neighbor `site_at(idx) + step * e_axis`
    /// (`axis` is 1-based). `None` if it falls outside a box.
    pub fn neighbor_index(&self, idx: usize, axis: usize, step: i64) -> Option<usize> {
        let extents = self.extents();
        let j = axis - 1;
        let stride: usize = extents[j + 1..].iter().product();
        let ej = extents[j];
        let cj = (idx / stride) % ej;
        let nj = cj as i64 + step;
        match self {
            Geometry::Box { .. } => {
                if nj < 0 || nj >= ej as i64 {
                    None
                } else {
                    Some((idx as i64 + (nj - cj as i64) * stride as i64) as usize)
                }
            }
            Geometry::Torus { .. } => {
                let wrapped = nj.rem_euclid(ej as i64) as usize;
                Some(idx - cj * stride + wrapped * stride)
            }
        }
    }

    /// Iterate all sites in enumeration order.
    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.num_sites()).map(|i| self.site_at(i))
    }
}

/// A complex wavefunction over the sites of a geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub geometry: Geometry,
    pub amplitudes: Vec<Complex64>,
}

impl LatticeState {
    pub fn zero(geometry: Geometry) -> Self {
        let n = geometry.num_sites();
        LatticeState {
            geometry,
            amplitudes: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Normalized point mass at `site`.
    pub fn delta(geometry: Geometry, site: &[i64]) -> Result<Self> {
        let idx = geometry.site_index(site)?;
        let mut s = LatticeState::zero(geometry);
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `<self, other>`, antilinear in `self`.
    pub fn inner(&self, other: &LatticeState) -> Result<Complex64> {
        if self.geometry != other.geometry {
            return Err(BlochError::GeometryMismatch(
                "inner product between states on different geometries".into(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amplitudes {
            *a *= c;
        }
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.scale(Complex64::new(1.0 / n, 0.0));
        }
        self
    }

    pub fn get(&self, site: &[i64]) -> Result<Complex64> {
        Ok(self.amplitudes[self.geometry.site_index(site)?])
    }

    pub fn set(&mut self, site: &[i64], value: Complex64) -> Result<()> {
        let idx = self.geometry.site_index(site)?;
        self.amplitudes[idx] = value;
        Ok(())
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &LatticeState) -> Result<f64> {
        if self.geometry != other.geometry {
            return Err(BlochError::GeometryMismatch(
                "distance between states on different geometries".into(),
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// Lexicographic index of `coords` within a grid of the given extents
/// (no bounds reduction; caller guarantees `0 <= coords[j] < extents[j]`).
pub(crate) fn lex_index(coords: &[usize], extents: &[usize]) -> usize {
    let mut idx = 0;
    for (c, e) in coords.iter().zip(extents) {
        idx = idx * e + c;
    }
    idx
}

/// Inverse of [`lex_index`].
pub(crate) fn lex_coords(mut idx: usize, extents: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; extents.len()];
    for j in (0..extents.len()).rev() {
        out[j] = idx % extents[j];
        idx /= extents[j];
    }
    out
}

pub(crate) fn cis(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}
