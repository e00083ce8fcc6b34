//! Floquet-Bloch fibers of a periodic operator and the discrete transform
//! that block-diagonalizes it on commensurate tori.
//!
//! # Conventions
//!
//! The whole crate hangs together through one orientation choice, so it is
//! spelled out here once.
//!
//! **Fiber assembly (pull form).** For a cell site `x` and neighbor
//! `y = x +- e_j`, split `y = y' + n . q` with `y'` in the fundamental cell
//! and integer `n`. Then the fiber matrix at quasimomentum `theta` gains
//!
//! ```text
//! J(theta)[row x, col y']  +=  a_{x,y} e^{+2 pi i <theta, n>}
//! ```
//!
//! plus `b_x` on the diagonal. The velocity fiber `P_k(theta)` uses the same
//! rule with coefficients `+i a_{x, x+e_k}` / `-i a_{x, x-e_k}` (the matrix
//! elements of `i [J, X_k]`).
//!
//! **Discrete transform.** On a torus with `N_j` cells per axis, for grid
//! quasimomenta `theta_n = (n_1/N_1, .., n_d/N_d)`:
//!
//! ```text
//! (F psi)(theta_n, x) = (prod_j N_j)^{-1/2} sum_m psi_{x + m . q} e^{-2 pi i <theta_n, m>}
//! ```
//!
//! which is unitary, and under which `F (J psi) = J(theta) (F psi)` holds
//! exactly fiber by fiber (same for `P_k`). The two signs above must move
//! together; flipping one without the other scatters `J` across fibers.
//!
//! **Gauge.** `M(theta) = diag(e^{2 pi i <theta, x/q>})` over cell sites `x`
//! (componentwise `x_j / q_j`), and the gauged fiber is `M^-1 J(theta) M`.
//! In the gauged frame the velocity fiber is the quasimomentum derivative of
//! the Hamiltonian fiber:
//!
//! ```text
//! gauged P_k(theta) = (q_k / 2 pi) d/d theta_k [gauged J(theta)]
//! ```
//!
//! Phases inside fiber assembly are computed from `<theta, n>` reduced to
//! `[0, 1)`, which makes `J(theta + e_j) = J(theta)` exact (bit-for-bit at
//! dyadic `theta`). The gauge matrix deliberately uses the *literal* `theta`:
//! `M` is not 1-periodic, and finite differences of the gauged fiber across
//! the zone seam rely on the unreduced phase.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{BlochError, Result};
use crate::lattice::{cis, lex_coords, lex_index, Geometry, LatticeState};
use crate::operator::PeriodicJacobiOperator;
use crate::rng::DeterministicRng;

use std::f64::consts::TAU;

/// One Floquet-Bloch fiber: a `qbar x qbar` matrix attached to a
/// quasimomentum `theta` (stored reduced to `[0,1)^d`).
#[derive(Debug, Clone)]
pub struct FiberOperator {
    pub theta: Vec<f64>,
    pub matrix: DMatrix<Complex64>,
}

enum FiberKind {
    Hamiltonian,
    Velocity { axis: usize },
}

fn canonical_theta(op: &PeriodicJacobiOperator, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != op.dim() {
        return Err(BlochError::DimensionMismatch {
            expected: op.dim(),
            got: theta.len(),
        });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(BlochError::Invalid(format!("non-finite theta {theta:?}")));
    }
    Ok(theta.iter().map(|t| t.rem_euclid(1.0)).collect())
}

fn assemble(op: &PeriodicJacobiOperator, theta: &[f64], kind: FiberKind) -> DMatrix<Complex64> {
    let d = op.dim();
    let cells = op.cells();
    let extents = op.cell_extents();
    let i_unit = Complex64::new(0.0, 1.0);
    let mut m = DMatrix::<Complex64>::zeros(cells, cells);
    for row in 0..cells {
        let x: Vec<i64> = lex_coords(row, &extents).iter().map(|&c| c as i64).collect();
        if let FiberKind::Hamiltonian = kind {
            m[(row, row)] += Complex64::new(op.potential(row), 0.0);
        }
        for j in 1..=d {
            if let FiberKind::Velocity { axis } = kind {
                if axis != j {
                    continue;
                }
            }
            for step in [1i64, -1] {
                let qj = op.q()[j - 1];
                let yj = x[j - 1] + step;
                let yj_red = yj.rem_euclid(qj);
                let n_wrap = (yj - yj_red) / qj; // in {-1, 0, 1}
                let mut ycoods: Vec<usize> = x.iter().map(|&c| c as usize).collect();
                ycoods[j - 1] = yj_red as usize;
                let col = lex_index(&ycoods, &extents);
                let a_signed = if step == 1 {
                    op.hopping(row, j)
                } else {
                    op.hopping(col, j).conj()
                };
                let coeff = match kind {
                    FiberKind::Hamiltonian => a_signed,
                    FiberKind::Velocity { .. } => i_unit * (step as f64) * a_signed,
                };
                let phase = if n_wrap == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    cis(TAU * (theta[j - 1] * n_wrap as f64).rem_euclid(1.0))
                };
                m[(row, col)] += coeff * phase;
            }
        }
    }
    m
}

/// The Hamiltonian fiber `J(theta)`.
pub fn fiber_hamiltonian(op: &PeriodicJacobiOperator, theta: &[f64]) -> Result<FiberOperator> {
    let theta = canonical_theta(op, theta)?;
    let matrix = assemble(op, &theta, FiberKind::Hamiltonian);
    Ok(FiberOperator { theta, matrix })
}

/// The velocity fiber `P_k(theta)` (`axis` 1-based).
pub fn fiber_velocity(
    op: &PeriodicJacobiOperator,
    theta: &[f64],
    axis: usize,
) -> Result<FiberOperator> {
    if axis == 0 || axis > op.dim() {
        return Err(BlochError::InvalidAxis {
            axis,
            d: op.dim(),
        });
    }
    let theta = canonical_theta(op, theta)?;
    let matrix = assemble(op, &theta, FiberKind::Velocity { axis });
    Ok(FiberOperator { theta, matrix })
}

/// Diagonal of the (unitary) gauge `M(theta) = diag(e^{2 pi i <theta, x/q>})`
/// over cell sites. Uses the literal, unreduced `theta`.
pub fn gauge_matrix(op: &PeriodicJacobiOperator, theta: &[f64]) -> Result<DVector<Complex64>> {
    if theta.len() != op.dim() {
        return Err(BlochError::DimensionMismatch {
            expected: op.dim(),
            got: theta.len(),
        });
    }
    let extents = op.cell_extents();
    let q = op.q();
    Ok(DVector::from_iterator(
        op.cells(),
        (0..op.cells()).map(|cell| {
            let x = lex_coords(cell, &extents);
            let angle: f64 = x
                .iter()
                .zip(theta)
                .zip(q)
                .map(|((&xj, &tj), &qj)| tj * xj as f64 / qj as f64)
                .sum();
            cis(TAU * angle)
        }),
    ))
}

/// The gauged pair `(M^-1 J(theta) M, M^-1 P_axis(theta) M)`; in this frame
/// the second is `(q_axis / 2 pi)` times the `theta_axis`-derivative of the
/// first.
pub fn gauged_fiber(
    op: &PeriodicJacobiOperator,
    theta: &[f64],
    axis: usize,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let m = gauge_matrix(op, theta)?;
    let j = fiber_hamiltonian(op, theta)?.matrix;
    let p = fiber_velocity(op, theta, axis)?.matrix;
    let conjugate = |a: &DMatrix<Complex64>| -> DMatrix<Complex64> {
        let n = a.nrows();
        DMatrix::from_fn(n, n, |r, c| m[r].conj() * a[(r, c)] * m[c])
    };
    Ok((conjugate(&j), conjugate(&p)))
}

/// A state in the Floquet representation: one `qbar`-vector per grid
/// quasimomentum, enumerated lexicographically over the `N_j` grid.
#[derive(Debug, Clone)]
pub struct FiberField {
    pub n_cells: Vec<usize>,
    pub q: Vec<i64>,
    pub fibers: Vec<DVector<Complex64>>,
}

impl FiberField {
    pub fn grid_size(&self) -> usize {
        self.n_cells.iter().product()
    }

    /// Grid quasimomentum of fiber `idx`: `theta_j = n_j / N_j`.
    pub fn theta_at(&self, idx: usize) -> Vec<f64> {
        lex_coords(idx, &self.n_cells)
            .iter()
            .zip(&self.n_cells)
            .map(|(&n, &nn)| n as f64 / nn as f64)
            .collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.fibers.iter().map(|g| g.norm_squared()).sum()
    }
}

struct TorusLayout {
    n_cells: Vec<usize>,
    grid: usize,
    cells: usize,
    /// Flat torus index of cell site `r` (offset of the `m = 0` copy).
    cell_base: Vec<usize>,
    /// Flat torus offset of translation `m` (lex over the `N` grid).
    m_offset: Vec<usize>,
    /// `phase_tables[j][k] = e^{-2 pi i k / N_j}`.
    phase_tables: Vec<Vec<Complex64>>,
}

fn torus_layout(op: &PeriodicJacobiOperator, geometry: &Geometry) -> Result<TorusLayout> {
    let Geometry::Torus { n_cells, q } = geometry else {
        return Err(BlochError::GeometryMismatch(
            "Floquet transform needs a torus state".into(),
        ));
    };
    if q != op.q() {
        return Err(BlochError::GeometryMismatch(format!(
            "torus periods {q:?} differ from operator periods {:?}",
            op.q()
        )));
    }
    let d = op.dim();
    let sides = geometry.extents();
    // Row-major strides of the site enumeration.
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * sides[j + 1];
    }
    let cell_extents = op.cell_extents();
    let cells = op.cells();
    let cell_base: Vec<usize> = (0..cells)
        .map(|r| {
            lex_coords(r, &cell_extents)
                .iter()
                .zip(&strides)
                .map(|(&c, &s)| c * s)
                .sum()
        })
        .collect();
    let grid: usize = n_cells.iter().product();
    let m_offset: Vec<usize> = (0..grid)
        .map(|f| {
            lex_coords(f, n_cells)
                .iter()
                .zip(op.q())
                .zip(&strides)
                .map(|((&mj, &qj), &s)| mj * qj as usize * s)
                .sum()
        })
        .collect();
    let phase_tables: Vec<Vec<Complex64>> = n_cells
        .iter()
        .map(|&nj| (0..nj).map(|k| cis(-TAU * k as f64 / nj as f64)).collect())
        .collect();
    Ok(TorusLayout {
        n_cells: n_cells.clone(),
        grid,
        cells,
        cell_base,
        m_offset,
        phase_tables,
    })
}

impl TorusLayout {
    /// `e^{-2 pi i <theta_n, m>}` via exact per-axis integer reduction.
    fn kernel(&self, n: &[usize], m: &[usize]) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..n.len() {
            let nj = self.n_cells[j];
            p *= self.phase_tables[j][(n[j] * m[j]) % nj];
        }
        p
    }
}

/// Forward transform of a commensurate torus state; unitary.
pub fn floquet_transform(op: &PeriodicJacobiOperator, psi: &LatticeState) -> Result<FiberField> {
    let layout = torus_layout(op, &psi.geometry)?;
    let scale = 1.0 / (layout.grid as f64).sqrt();
    let grid_coords: Vec<Vec<usize>> = (0..layout.grid)
        .map(|f| lex_coords(f, &layout.n_cells))
        .collect();
    let mut fibers = Vec::with_capacity(layout.grid);
    for nf in 0..layout.grid {
        let n = &grid_coords[nf];
        // Phase row shared by all cell components of this fiber.
        let phases: Vec<Complex64> = (0..layout.grid)
            .map(|mf| layout.kernel(n, &grid_coords[mf]))
            .collect();
        let g = DVector::from_iterator(
            layout.cells,
            layout.cell_base.iter().map(|&base| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (mf, ph) in phases.iter().enumerate() {
                    acc += ph * psi.amplitudes[base + layout.m_offset[mf]];
                }
                acc * scale
            }),
        );
        fibers.push(g);
    }
    Ok(FiberField {
        n_cells: layout.n_cells.clone(),
        q: op.q().to_vec(),
        fibers,
    })
}

/// Inverse transform; exact left and right inverse of [`floquet_transform`].
pub fn inverse_floquet_transform(
    op: &PeriodicJacobiOperator,
    field: &FiberField,
) -> Result<LatticeState> {
    if field.q != op.q() {
        return Err(BlochError::GeometryMismatch(format!(
            "field periods {:?} differ from operator periods {:?}",
            field.q,
            op.q()
        )));
    }
    let geometry = Geometry::torus(field.n_cells.clone(), op.q().to_vec())?;
    let layout = torus_layout(op, &geometry)?;
    if field.fibers.len() != layout.grid
        || field.fibers.iter().any(|g| g.len() != layout.cells)
    {
        return Err(BlochError::DimensionMismatch {
            expected: layout.grid,
            got: field.fibers.len(),
        });
    }
    let scale = 1.0 / (layout.grid as f64).sqrt();
    let grid_coords: Vec<Vec<usize>> = (0..layout.grid)
        .map(|f| lex_coords(f, &layout.n_cells))
        .collect();
    let mut psi = LatticeState::zero(geometry);
    for mf in 0..layout.grid {
        let m = &grid_coords[mf];
        for nf in 0..layout.grid {
            let n = &grid_coords[nf];
            let ph = layout.kernel(n, m).conj() * scale;
            let g = &field.fibers[nf];
            for r in 0..layout.cells {
                psi.amplitudes[layout.cell_base[r] + layout.m_offset[mf]] += ph * g[r];
            }
        }
    }
    Ok(psi)
}

/// Measures how exactly the transform block-diagonalizes an operator on the
/// commensurate torus with `n_cells` cells per axis: the worst, over a few
/// seeded random states `psi`, global defect
///
/// ```text
/// || F (K psi)  -  { theta_n  ->  K(theta_n) [F psi](theta_n) } ||
/// ```
///
/// where `K` is the Hamiltonian for `axis = None` and the velocity operator
/// along the (1-based) axis for `axis = Some(k)`. Exact block
/// diagonalization means a defect at roundoff scale.
pub fn verify_block_diagonalization(
    op: &PeriodicJacobiOperator,
    n_cells: &[usize],
    axis: Option<usize>,
    seed: u64,
) -> Result<f64> {
    let geometry = Geometry::torus(n_cells.to_vec(), op.q().to_vec())?;
    if let Some(k) = axis {
        if k == 0 || k > op.dim() {
            return Err(BlochError::InvalidAxis { axis: k, d: op.dim() });
        }
    }
    let grid: usize = n_cells.iter().product();
    let fibers: Vec<DMatrix<Complex64>> = (0..grid)
        .map(|nf| {
            let theta: Vec<f64> = lex_coords(nf, n_cells)
                .iter()
                .zip(n_cells)
                .map(|(&n, &nn)| n as f64 / nn as f64)
                .collect();
            Ok(match axis {
                None => fiber_hamiltonian(op, &theta)?.matrix,
                Some(k) => fiber_velocity(op, &theta, k)?.matrix,
            })
        })
        .collect::<Result<_>>()?;

    let mut rng = DeterministicRng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let mut psi = LatticeState::zero(geometry.clone());
        for a in psi.amplitudes.iter_mut() {
            let (re, im) = rng.normal_pair();
            *a = Complex64::new(re, im);
        }
        let psi = psi.normalized();
        let k_psi = match axis {
            None => op.apply_j(&psi)?,
            Some(k) => op.apply_p(&psi, k)?,
        };
        let lhs = floquet_transform(op, &k_psi)?;
        let rhs = floquet_transform(op, &psi)?;
        let defect_sq: f64 = lhs
            .fibers
            .iter()
            .zip(rhs.fibers.iter().enumerate())
            .map(|(l, (nf, g))| (l - &fibers[nf] * g).norm_squared())
            .sum();
        worst = worst.max(defect_sq.sqrt());
    }
    Ok(worst)
}
