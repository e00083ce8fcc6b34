//! The asymptotic velocity observable `Q_k` and the ballistic comparison
//! `X_k(t)/t -> Q_k`.
//!
//! `Q_k` acts fiberwise: in the eigenframe of `J(theta)` it multiplies the
//! band components by the band velocities `v_{j,k}(theta)`. Strong ballistic
//! transport says `X_k(t) psi / t -> Q_k psi` in norm, with the first-moment
//! consequence `<X_k>(t)/t -> <Q_k>`; [`ballistic_report`] measures both on
//! one state, comparing exact dense box dynamics against the fiberwise
//! construction on a commensurate torus.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bands::{compute_bands, BandStructure};
use crate::dynamics::{boundary_band_mass, position_moments, BoxPlan};
use crate::error::{BlochError, Result};
use crate::floquet::{floquet_transform, inverse_floquet_transform, FiberField};
use crate::lattice::{Geometry, LatticeState};
use crate::operator::PeriodicJacobiOperator;

/// The asymptotic velocity observable on a fixed quasimomentum grid,
/// represented through the band decomposition.
#[derive(Debug, Clone)]
pub struct AsymptoticVelocity {
    op: PeriodicJacobiOperator,
    bands: BandStructure,
}

/// Build `Q` for the given 1-based axes on the `n_cells` grid.
pub fn asymptotic_velocity(
    op: &PeriodicJacobiOperator,
    n_cells: &[usize],
    axes: &[usize],
) -> Result<AsymptoticVelocity> {
    Ok(AsymptoticVelocity {
        op: op.clone(),
        bands: compute_bands(op, n_cells, axes)?,
    })
}

impl AsymptoticVelocity {
    pub fn bands(&self) -> &BandStructure {
        &self.bands
    }

    pub fn operator(&self) -> &PeriodicJacobiOperator {
        &self.op
    }

    fn expected_geometry(&self) -> Geometry {
        Geometry::Torus {
            n_cells: self.bands.n_cells.clone(),
            q: self.bands.q.clone(),
        }
    }

    fn transform_checked(&self, psi: &LatticeState) -> Result<FiberField> {
        if psi.geometry != self.expected_geometry() {
            return Err(BlochError::GeometryMismatch(
                "state does not live on this observable's torus".into(),
            ));
        }
        floquet_transform(&self.op, psi)
    }

    /// `Q_axis psi` on the commensurate torus.
    pub fn apply_q(&self, psi: &LatticeState, axis: usize) -> Result<LatticeState> {
        let slot = self.bands.axis_slot(axis)?;
        let mut field = self.transform_checked(psi)?;
        for (g, point) in field.fibers.iter_mut().zip(&self.bands.points) {
            let mut c = point.frame.adjoint() * &*g;
            for (ci, &v) in c.iter_mut().zip(&point.velocities[slot]) {
                *ci *= Complex64::new(v, 0.0);
            }
            *g = &point.frame * c;
        }
        inverse_floquet_transform(&self.op, &field)
    }

    /// `(<psi, Q psi>, ||Q psi||^2)` — the second value equals
    /// `<psi, Q^2 psi>` since `Q` is Hermitian. Literal bilinear values.
    pub fn q_moments(&self, psi: &LatticeState, axis: usize) -> Result<(f64, f64)> {
        let q_psi = self.apply_q(psi, axis)?;
        Ok((psi.inner(&q_psi)?.re, q_psi.norm_sq()))
    }

    /// The spectral measure of `Q_axis` in `psi` as sampled atoms: one pair
    /// `(v_{j,axis}(theta), |<w_j(theta), (F psi)(theta)>|^2)` per grid
    /// quasimomentum and band, sorted by velocity (stable in grid order for
    /// ties). Weights sum to `||psi||^2`.
    pub fn velocity_distribution(
        &self,
        psi: &LatticeState,
        axis: usize,
    ) -> Result<Vec<(f64, f64)>> {
        let slot = self.bands.axis_slot(axis)?;
        let field = self.transform_checked(psi)?;
        let mut atoms = Vec::with_capacity(field.fibers.len() * self.bands.num_bands());
        for (g, point) in field.fibers.iter().zip(&self.bands.points) {
            let c = point.frame.adjoint() * g;
            for (ci, &v) in c.iter().zip(&point.velocities[slot]) {
                atoms.push((v, ci.norm_sqr()));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(atoms)
    }
}

/// One row of the ballistic comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub t: f64,
    /// `|| X(t) psi / t - Q psi ||` (strong convergence).
    pub strong_error: f64,
    /// `| <X>(t)/t - <Q> |` (first-moment convergence).
    pub mean_error: f64,
    pub q_mean: f64,
    pub q_second_moment: f64,
    /// Boundary-band mass fraction of the evolved box state.
    pub boundary_mass: f64,
}

/// Measure ballistic convergence for a compactly supported box state.
///
/// The state is normalized internally. Its support must fit the torus
/// (`2 radius_j + 1 <= n_cells_j q_j`); `Q psi` is computed fiberwise on the
/// torus and compared against exact dense box evolution at each requested
/// time through centered-representative identification.
pub fn ballistic_report(
    op: &PeriodicJacobiOperator,
    psi0: &LatticeState,
    axis: usize,
    times: &[f64],
    n_cells: &[usize],
) -> Result<Vec<ReportRow>> {
    let Geometry::Box { radius } = &psi0.geometry else {
        return Err(BlochError::GeometryMismatch(
            "ballistic report starts from a box state".into(),
        ));
    };
    if times.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
        return Err(BlochError::Invalid(
            "report times must be finite and positive".into(),
        ));
    }
    let psi0 = psi0.clone().normalized();
    if psi0.norm_sq() == 0.0 {
        return Err(BlochError::Invalid("zero initial state".into()));
    }

    let torus = Geometry::torus(n_cells.to_vec(), op.q().to_vec())?;
    let sides = torus.extents();
    for (j, (&rj, &side)) in radius.iter().zip(&sides).enumerate() {
        if 2 * rj + 1 > side as i64 {
            return Err(BlochError::RadiusTooLarge {
                radius: rj,
                limit: (side as i64 - 1) / 2,
                axis: j + 1,
            });
        }
    }

    // Embed the box state on the torus (injective since the box fits).
    let mut psi_torus = LatticeState::zero(torus);
    for (i, a) in psi0.amplitudes.iter().enumerate() {
        if a.norm_sqr() != 0.0 {
            let x = psi0.geometry.site_at(i);
            psi_torus.set(&x, *a)?;
        }
    }

    let q_obs = asymptotic_velocity(op, n_cells, &[axis])?;
    let q_psi_torus = q_obs.apply_q(&psi_torus, axis)?;
    let q_mean = psi_torus.inner(&q_psi_torus)?.re;
    let q_second = q_psi_torus.norm_sq();

    // Pull Q psi back onto the box through the same identification.
    let mut q_psi_box = LatticeState::zero(psi0.geometry.clone());
    for i in 0..q_psi_box.amplitudes.len() {
        let x = q_psi_box.geometry.site_at(i);
        q_psi_box.amplitudes[i] = q_psi_torus.get(&x)?;
    }

    let plan = BoxPlan::new(op, radius)?;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let xt_psi = plan.heisenberg_position_apply(&psi0, axis, t)?;
        let mut diff = xt_psi;
        for (dst, src) in diff.amplitudes.iter_mut().zip(&q_psi_box.amplitudes) {
            *dst = *dst / Complex64::new(t, 0.0) - src;
        }
        let strong_error = diff.norm();

        let psi_t = plan.evolve(&psi0, t)?;
        let (m1, _) = position_moments(&psi_t, axis)?;
        let mean_error = (m1 / t - q_mean).abs();
        let boundary_mass = boundary_band_mass(&psi_t)?;
        rows.push(ReportRow {
            t,
            strong_error,
            mean_error,
            q_mean,
            q_second_moment: q_second,
            boundary_mass,
        });
    }
    Ok(rows)
}

/// Build the lattice state of a single band eigenvector at one grid
/// quasimomentum, together with its band velocity along `axis`. `Q_axis`
/// applied to this state must scale it by exactly that velocity — the
/// spectral-mapping check used by the verification suites.
pub fn band_eigenstate(
    av: &AsymptoticVelocity,
    grid_index: usize,
    band: usize,
    axis: usize,
) -> Result<(LatticeState, f64)> {
    let slot = av.bands.axis_slot(axis)?;
    let point = av
        .bands
        .points
        .get(grid_index)
        .ok_or_else(|| BlochError::Invalid(format!("grid index {grid_index} out of range")))?;
    let v = point.velocities[slot][band];
    let mut field = FiberField {
        n_cells: av.bands.n_cells.clone(),
        q: av.bands.q.clone(),
        fibers: (0..av.bands.points.len())
            .map(|_| DVector::zeros(av.bands.num_bands()))
            .collect(),
    };
    field.fibers[grid_index] = point.frame.column(band).into_owned();
    let psi = inverse_floquet_transform(&av.op, &field)?;
    Ok((psi, v))
}
