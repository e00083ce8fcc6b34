//! Band structure over the quasimomentum grid: eigendecomposition of the
//! fibers, degeneracy-aware band velocities (Hellmann-Feynman), and spectrum
//! summaries.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{BlochError, Result};
use crate::floquet::{fiber_hamiltonian, fiber_velocity};
use crate::lattice::lex_coords;
use crate::operator::PeriodicJacobiOperator;

/// Absolute Hermiticity tolerance accepted by the eigendecomposition.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Relative factor for the degeneracy clustering width.
pub const CLUSTER_TOL_FACTOR: f64 = 1e-8;

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// a matching orthonormal column frame. Input within [`HERMITICITY_TOL`] of
/// Hermitian is symmetrized (exactly Hermitian input is unchanged bit for
/// bit); anything further away is refused. Real symmetric input takes a
/// faster real path.
pub fn hermitian_eigendecomposition(
    m: &DMatrix<Complex64>,
) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if n == 0 || !m.is_square() {
        return Err(BlochError::Invalid(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut defect = 0.0f64;
    for r in 0..n {
        for c in r..n {
            let d = (m[(r, c)] - m[(c, r)].conj()).norm();
            defect = defect.max(d);
        }
    }
    if defect > HERMITICITY_TOL {
        return Err(BlochError::NotHermitian {
            defect,
            tol: HERMITICITY_TOL,
        });
    }
    let herm = DMatrix::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);

    let (vals, vecs) = if herm.iter().all(|z| z.im == 0.0) {
        let real = DMatrix::<f64>::from_fn(n, n, |r, c| herm[(r, c)].re);
        let se = real.symmetric_eigen();
        let vecs = DMatrix::from_fn(n, n, |r, c| Complex64::new(se.eigenvectors[(r, c)], 0.0));
        (se.eigenvalues, vecs)
    } else {
        let se = herm.symmetric_eigen();
        (se.eigenvalues, se.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = DVector::from_iterator(n, order.iter().map(|&i| vals[i]));
    let mut sorted_vecs = DMatrix::<Complex64>::zeros(n, n);
    for (slot, &i) in order.iter().enumerate() {
        sorted_vecs.set_column(slot, &vecs.column(i));
    }
    Ok((sorted_vals, sorted_vecs))
}

/// Degeneracy clustering width for a spectrum spanning `range`.
pub fn default_cluster_tol(range: f64) -> f64 {
    CLUSTER_TOL_FACTOR * range.abs().max(1.0)
}

/// Maximal runs of ascending `energies` whose consecutive gaps are `<= tol`.
fn clusters(energies: &DVector<f64>, tol: f64) -> Vec<std::ops::Range<usize>> {
    let n = energies.len();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if energies[i] - energies[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..n);
    out
}

/// Band velocities at one quasimomentum from an eigendecomposition of
/// `J(theta)` and the velocity fiber `P_k(theta)`.
///
/// Simple bands get the Hellmann-Feynman value `<w_j, P w_j>`. Bands whose
/// energies fall within `cluster_tol` of each other form a degenerate
/// cluster; there the frame is rotated to diagonalize the compressed velocity
/// block `W* P W` and its eigenvalues are assigned in ascending order, which
/// is the one-sided-limit convention at band crossings.
pub fn band_velocity(
    energies: &DVector<f64>,
    frame: &DMatrix<Complex64>,
    p_matrix: &DMatrix<Complex64>,
    cluster_tol: f64,
) -> Result<Vec<f64>> {
    let n = energies.len();
    if frame.nrows() != n || frame.ncols() != n || p_matrix.nrows() != n || p_matrix.ncols() != n {
        return Err(BlochError::DimensionMismatch {
            expected: n,
            got: frame.nrows().max(p_matrix.nrows()),
        });
    }
    let mut velocities = vec![0.0f64; n];
    for cluster in clusters(energies, cluster_tol) {
        let size = cluster.len();
        if size == 1 {
            let j = cluster.start;
            let w = frame.column(j);
            let pw = p_matrix * w;
            velocities[j] = w.dotc(&pw).re;
        } else {
            let w = frame.columns(cluster.start, size);
            let block = w.adjoint() * p_matrix * w;
            let (vals, _) = hermitian_eigendecomposition(&block)?;
            for (k, j) in cluster.enumerate() {
                velocities[j] = vals[k];
            }
        }
    }
    Ok(velocities)
}

/// Eigendata at one grid quasimomentum.
#[derive(Debug, Clone)]
pub struct BandPoint {
    pub theta: Vec<f64>,
    pub energies: DVector<f64>,
    pub frame: DMatrix<Complex64>,
    /// One velocity list per requested axis, aligned with `energies`.
    pub velocities: Vec<Vec<f64>>,
}

/// Eigendecompositions over the full quasimomentum grid
/// `theta_n = (n_1/N_1, .., n_d/N_d)`, enumerated lexicographically.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub q: Vec<i64>,
    pub n_cells: Vec<usize>,
    /// 1-based axes for which velocities were computed.
    pub axes: Vec<usize>,
    pub cluster_tol: f64,
    pub points: Vec<BandPoint>,
}

impl BandStructure {
    pub fn num_bands(&self) -> usize {
        self.points.first().map_or(0, |p| p.energies.len())
    }

    pub fn axis_slot(&self, axis: usize) -> Result<usize> {
        self.axes
            .iter()
            .position(|&a| a == axis)
            .ok_or(BlochError::InvalidAxis {
                axis,
                d: self.q.len(),
            })
    }
}

/// Diagonalize every fiber on the grid and extract band velocities for the
/// requested (1-based, distinct) axes. Work is parallelized over grid points;
/// the result is independent of the thread count.
pub fn compute_bands(
    op: &PeriodicJacobiOperator,
    n_cells: &[usize],
    axes: &[usize],
) -> Result<BandStructure> {
    let d = op.dim();
    if n_cells.len() != d {
        return Err(BlochError::DimensionMismatch {
            expected: d,
            got: n_cells.len(),
        });
    }
    if n_cells.iter().any(|&n| n == 0) {
        return Err(BlochError::Invalid("grid needs N_j >= 1".into()));
    }
    for (i, &axis) in axes.iter().enumerate() {
        if axis == 0 || axis > d {
            return Err(BlochError::InvalidAxis { axis, d });
        }
        if axes[..i].contains(&axis) {
            return Err(BlochError::Invalid(format!("duplicate axis {axis}")));
        }
    }

    let grid: usize = n_cells.iter().product();
    let thetas: Vec<Vec<f64>> = (0..grid)
        .map(|f| {
            lex_coords(f, n_cells)
                .iter()
                .zip(n_cells)
                .map(|(&n, &nn)| n as f64 / nn as f64)
                .collect()
        })
        .collect();

    let eigs: Vec<(DVector<f64>, DMatrix<Complex64>)> = thetas
        .par_iter()
        .map(|theta| {
            let fiber = fiber_hamiltonian(op, theta)?;
            hermitian_eigendecomposition(&fiber.matrix)
        })
        .collect::<Result<_>>()?;

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (vals, _) in &eigs {
        lo = lo.min(vals[0]);
        hi = hi.max(vals[vals.len() - 1]);
    }
    let cluster_tol = default_cluster_tol(hi - lo);

    let points: Vec<BandPoint> = thetas
        .into_par_iter()
        .zip(eigs.into_par_iter())
        .map(|(theta, (energies, frame))| {
            let mut velocities = Vec::with_capacity(axes.len());
            for &axis in axes {
                let p = fiber_velocity(op, &theta, axis)?;
                velocities.push(band_velocity(&energies, &frame, &p.matrix, cluster_tol)?);
            }
            Ok(BandPoint {
                theta,
                energies,
                frame,
                velocities,
            })
        })
        .collect::<Result<_>>()?;

    Ok(BandStructure {
        q: op.q().to_vec(),
        n_cells: n_cells.to_vec(),
        axes: axes.to_vec(),
        cluster_tol,
        points,
    })
}

/// Per-band sampled ranges `[min_theta E_j, max_theta E_j]`.
pub fn spectrum_intervals(bands: &BandStructure) -> Vec<(f64, f64)> {
    let nb = bands.num_bands();
    let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); nb];
    for p in &bands.points {
        for j in 0..nb {
            out[j].0 = out[j].0.min(p.energies[j]);
            out[j].1 = out[j].1.max(p.energies[j]);
        }
    }
    out
}

/// Union of the band intervals with overlapping pieces merged; an
/// approximation of the spectrum as a disjoint union of closed intervals.
pub fn merged_spectrum(bands: &BandStructure) -> Vec<(f64, f64)> {
    let mut intervals = spectrum_intervals(bands);
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Fraction of `(grid point, band)` pairs whose velocity along `axis` has
/// magnitude below `eps` — a sampled estimate of the flat-band / kernel mass
/// of the asymptotic velocity observable.
pub fn kernel_mass_estimate(bands: &BandStructure, axis: usize, eps: f64) -> Result<f64> {
    let slot = bands.axis_slot(axis)?;
    let nb = bands.num_bands();
    let total = bands.points.len() * nb;
    if total == 0 {
        return Ok(0.0);
    }
    let hits: usize = bands
        .points
        .iter()
        .map(|p| p.velocities[slot].iter().filter(|v| v.abs() < eps).count())
        .sum();
    Ok(hits as f64 / total as f64)
}
