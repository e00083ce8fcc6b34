//! `q`-periodic Jacobi operators on `Z^d`.
//!
//! The operator acts by
//!
//! ```text
//! [J u]_x = sum_{y ~ x} a_{x,y} u_y + b_x u_x
//! ```
//!
//! with nearest-neighbor hoppings `a` (Hermitian: `a_{y,x} = conj(a_{x,y})`,
//! never zero) and a real potential `b`, both invariant under translation by
//! `q_j` along each axis. The data is stored on the fundamental cell
//! `Gamma = prod_j {0, .., q_j - 1}`: one complex hopping per `(site, axis)`
//! for the bond `x -> x + e_axis`, one real potential value per site. Reverse
//! bonds are recovered from Hermitian symmetry, so operators built from this
//! data are Hermitian by construction.
//!
//! Matrix elements are written in pull (row) form: row `x`, column `y` holds
//! `a_{x,y}`, i.e. the coefficient with which `u_y` feeds `[J u]_x`.

use num_complex::Complex64;

use crate::error::{BlochError, Result};
use crate::lattice::{Geometry, LatticeState, DENSE_GUARD_LIMIT};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone)]
pub struct PeriodicJacobiOperator {
    q: Vec<i64>,
    /// `hoppings[cell * d + (axis-1)] = a_{x, x + e_axis}` for the cell site `x`.
    hoppings: Vec<Complex64>,
    /// `potential[cell] = b_x`.
    potential: Vec<f64>,
}

impl PeriodicJacobiOperator {
    /// Build from dense per-cell data, `hoppings` and `potential` indexed by
    /// the lexicographic enumeration of the fundamental cell.
    pub fn new(q: Vec<i64>, hoppings: Vec<Complex64>, potential: Vec<f64>) -> Result<Self> {
        let d = q.len();
        if d == 0 {
            return Err(BlochError::Invalid("operator needs d >= 1".into()));
        }
        for &qj in &q {
            if qj < 1 {
                return Err(BlochError::Invalid(format!("period {qj} < 1")));
            }
        }
        let cells: usize = q.iter().map(|&qj| qj as usize).product();
        if hoppings.len() != cells * d {
            return Err(BlochError::DimensionMismatch {
                expected: cells * d,
                got: hoppings.len(),
            });
        }
        if potential.len() != cells {
            return Err(BlochError::DimensionMismatch {
                expected: cells,
                got: potential.len(),
            });
        }
        for (i, a) in hoppings.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(BlochError::Invalid(format!("non-finite hopping at {i}")));
            }
            if a.norm_sqr() == 0.0 {
                return Err(BlochError::Invalid(format!(
                    "zero hopping at flat index {i}: Jacobi operators need a != 0 on every bond"
                )));
            }
        }
        if potential.iter().any(|b| !b.is_finite()) {
            return Err(BlochError::Invalid("non-finite potential".into()));
        }
        Ok(PeriodicJacobiOperator {
            q,
            hoppings,
            potential,
        })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[i64] {
        &self.q
    }

    /// Number of sites in the fundamental cell.
    pub fn cells(&self) -> usize {
        self.q.iter().map(|&qj| qj as usize).product()
    }

    pub(crate) fn cell_extents(&self) -> Vec<usize> {
        self.q.iter().map(|&qj| qj as usize).collect()
    }

    /// Lexicographic cell index of the reduction of `x` modulo `q`.
    pub fn cell_index(&self, x: &[i64]) -> usize {
        let mut idx = 0usize;
        for (&xj, &qj) in x.iter().zip(&self.q) {
            idx = idx * qj as usize + xj.rem_euclid(qj) as usize;
        }
        idx
    }

    /// `a_{x, x + e_axis}` by cell index (`axis` 1-based).
    pub fn hopping(&self, cell: usize, axis: usize) -> Complex64 {
        self.hoppings[cell * self.dim() + (axis - 1)]
    }

    pub fn potential(&self, cell: usize) -> f64 {
        self.potential[cell]
    }

    /// Largest hopping magnitude overall; `2 * max|a|` bounds the velocity
    /// operator norm and the ballistic spreading speed.
    pub fn max_hopping(&self) -> f64 {
        self.hoppings.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest hopping magnitude among bonds along one axis (1-based).
    pub fn axis_max_hopping(&self, axis: usize) -> Result<f64> {
        self.check_axis(axis)?;
        let d = self.dim();
        Ok((0..self.cells())
            .map(|c| self.hoppings[c * d + (axis - 1)].norm())
            .fold(0.0, f64::max))
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis == 0 || axis > self.dim() {
            return Err(BlochError::InvalidAxis {
                axis,
                d: self.dim(),
            });
        }
        Ok(())
    }

    /// The matrix element `a_{x,y} = J_{x,y}` for nearest neighbors `x ~ y`,
    /// resolved through periodicity and Hermitian symmetry:
    /// `a_{x, x+e_j}` is table data at `x mod q`, and
    /// `a_{x, x-e_j} = conj(a_{x-e_j, x})`.
    pub fn hopping_at(&self, x: &[i64], y: &[i64]) -> Result<Complex64> {
        let d = self.dim();
        if x.len() != d {
            return Err(BlochError::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if y.len() != d {
            return Err(BlochError::DimensionMismatch {
                expected: d,
                got: y.len(),
            });
        }
        let mut step: Option<(usize, i64)> = None;
        for j in 0..d {
            match y[j] - x[j] {
                0 => {}
                s @ (1 | -1) if step.is_none() => step = Some((j + 1, s)),
                _ => {
                    return Err(BlochError::NotNeighbors {
                        x: x.to_vec(),
                        y: y.to_vec(),
                    })
                }
            }
        }
        let Some((axis, s)) = step else {
            return Err(BlochError::NotNeighbors {
                x: x.to_vec(),
                y: y.to_vec(),
            });
        };
        Ok(if s == 1 {
            self.hopping(self.cell_index(x), axis)
        } else {
            self.hopping(self.cell_index(y), axis).conj()
        })
    }

    /// Check a state's geometry against this operator: dimensions must match,
    /// and a torus must be built over the same periods.
    fn check_geometry(&self, geometry: &Geometry) -> Result<()> {
        if geometry.dim() != self.dim() {
            return Err(BlochError::DimensionMismatch {
                expected: self.dim(),
                got: geometry.dim(),
            });
        }
        if let Geometry::Torus { q, .. } = geometry {
            if q != &self.q {
                return Err(BlochError::GeometryMismatch(format!(
                    "torus periods {q:?} differ from operator periods {:?}",
                    self.q
                )));
            }
        }
        Ok(())
    }

    /// `J psi`. On a box the sum is truncated at the boundary (Dirichlet);
    /// on a commensurate torus the neighbors wrap.
    pub fn apply_j(&self, psi: &LatticeState) -> Result<LatticeState> {
        self.check_geometry(&psi.geometry)?;
        let d = self.dim();
        let geom = &psi.geometry;
        let mut out = LatticeState::zero(geom.clone());
        for idx in 0..geom.num_sites() {
            let x = geom.site_at(idx);
            let cell = self.cell_index(&x);
            let mut acc = Complex64::new(self.potential[cell], 0.0) * psi.amplitudes[idx];
            for j in 1..=d {
                if let Some(nidx) = geom.neighbor_index(idx, j, 1) {
                    acc += self.hoppings[cell * d + (j - 1)] * psi.amplitudes[nidx];
                }
                if let Some(nidx) = geom.neighbor_index(idx, j, -1) {
                    let mut xm = x.clone();
                    xm[j - 1] -= 1;
                    let a_back = self.hoppings[self.cell_index(&xm) * d + (j - 1)].conj();
                    acc += a_back * psi.amplitudes[nidx];
                }
            }
            out.amplitudes[idx] = acc;
        }
        Ok(out)
    }

    /// `P_k psi` for the velocity operator `P_k = i [J, X_k]`:
    ///
    /// ```text
    /// [P_k psi]_x = i a_{x, x+e_k} psi_{x+e_k} - i a_{x, x-e_k} psi_{x-e_k}
    /// ```
    pub fn apply_p(&self, psi: &LatticeState, axis: usize) -> Result<LatticeState> {
        self.check_axis(axis)?;
        self.check_geometry(&psi.geometry)?;
        let d = self.dim();
        let geom = &psi.geometry;
        let mut out = LatticeState::zero(geom.clone());
        for idx in 0..geom.num_sites() {
            let x = geom.site_at(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            if let Some(nidx) = geom.neighbor_index(idx, axis, 1) {
                let a_fwd = self.hoppings[self.cell_index(&x) * d + (axis - 1)];
                acc += I * a_fwd * psi.amplitudes[nidx];
            }
            if let Some(nidx) = geom.neighbor_index(idx, axis, -1) {
                let mut xm = x.clone();
                xm[axis - 1] -= 1;
                let a_back = self.hoppings[self.cell_index(&xm) * d + (axis - 1)].conj();
                acc -= I * a_back * psi.amplitudes[nidx];
            }
            out.amplitudes[idx] = acc;
        }
        Ok(out)
    }

    /// Dense matrix of `J` restricted to a commensurate torus with `n_cells`
    /// fundamental cells per axis. Guarded at side length
    /// [`DENSE_GUARD_LIMIT`].
    pub fn torus_matrix(&self, n_cells: &[usize]) -> Result<nalgebra::DMatrix<Complex64>> {
        let geom = Geometry::torus(n_cells.to_vec(), self.q.clone())?;
        let n = geom.num_sites();
        if n > DENSE_GUARD_LIMIT {
            return Err(BlochError::TooLarge {
                size: n,
                limit: DENSE_GUARD_LIMIT,
            });
        }
        let d = self.dim();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for row in 0..n {
            let x = geom.site_at(row);
            let cell = self.cell_index(&x);
            m[(row, row)] += Complex64::new(self.potential[cell], 0.0);
            for j in 1..=d {
                // Degenerate side of length 1: +e_j and -e_j are the same
                // column; both contributions accumulate.
                if let Some(col) = geom.neighbor_index(row, j, 1) {
                    m[(row, col)] += self.hoppings[cell * d + (j - 1)];
                }
                if let Some(col) = geom.neighbor_index(row, j, -1) {
                    let mut xm = x.clone();
                    xm[j - 1] -= 1;
                    m[(row, col)] += self.hoppings[self.cell_index(&xm) * d + (j - 1)].conj();
                }
            }
        }
        Ok(m)
    }
}

/// Raw, unvalidated description of a periodic Jacobi operator — the exchange
/// schema used by configuration files and external callers.
///
/// `hoppings` lists `a_{site, site + e_axis}` for every `(site, axis)` pair of
/// the fundamental cell; `potential` entries are optional per site (missing
/// sites default to `b = 0`) but must be real to survive validation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDescription {
    pub q: Vec<i64>,
    pub hoppings: Vec<HoppingEntry>,
    pub potential: Vec<PotentialEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoppingEntry {
    /// Site of the fundamental cell (`0 <= site[j] < q[j]`).
    pub site: Vec<i64>,
    /// 1-based lattice direction of the bond `site -> site + e_axis`.
    pub axis: usize,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialEntry {
    pub site: Vec<i64>,
    /// Kept complex at the schema level so non-real input is reportable.
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    BadPeriod { axis: usize, q: i64 },
    BadAxis { axis: usize, d: usize },
    SiteOutsideCell { site: Vec<i64> },
    DuplicateHopping { site: Vec<i64>, axis: usize },
    DuplicatePotential { site: Vec<i64> },
    MissingHopping { site: Vec<i64>, axis: usize },
    ZeroHopping { site: Vec<i64>, axis: usize },
    NonFiniteHopping { site: Vec<i64>, axis: usize },
    NonRealPotential { site: Vec<i64> },
    NonFinitePotential { site: Vec<i64> },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::BadPeriod { axis, q } => write!(f, "period q_{axis} = {q} must be >= 1"),
            Violation::BadAxis { axis, d } => {
                write!(f, "axis {axis} out of range (valid: 1..={d})")
            }
            Violation::SiteOutsideCell { site } => {
                write!(f, "site {site:?} outside the fundamental cell")
            }
            Violation::DuplicateHopping { site, axis } => {
                write!(f, "duplicate hopping entry for site {site:?}, axis {axis}")
            }
            Violation::DuplicatePotential { site } => {
                write!(f, "duplicate potential entry for site {site:?}")
            }
            Violation::MissingHopping { site, axis } => {
                write!(f, "missing hopping for site {site:?}, axis {axis}")
            }
            Violation::ZeroHopping { site, axis } => {
                write!(
                    f,
                    "zero hopping at site {site:?}, axis {axis}: Jacobi operators need a != 0"
                )
            }
            Violation::NonFiniteHopping { site, axis } => {
                write!(f, "non-finite hopping at site {site:?}, axis {axis}")
            }
            Violation::NonRealPotential { site } => {
                write!(
                    f,
                    "potential at site {site:?} has a non-zero imaginary part; b must be real"
                )
            }
            Violation::NonFinitePotential { site } => {
                write!(f, "non-finite potential at site {site:?}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "operator description is valid");
        }
        writeln!(f, "operator description has {} problem(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Structural and value checks for a description; every problem found is
/// reported, not just the first.
pub fn validate(desc: &OperatorDescription) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = desc.q.len();
    if d == 0 {
        report.violations.push(Violation::BadPeriod { axis: 1, q: 0 });
        return report;
    }
    for (j, &qj) in desc.q.iter().enumerate() {
        if qj < 1 {
            report.violations.push(Violation::BadPeriod { axis: j + 1, q: qj });
        }
    }
    if !report.is_valid() {
        return report;
    }

    let in_cell =
        |site: &[i64]| site.len() == d && site.iter().zip(&desc.q).all(|(&s, &q)| s >= 0 && s < q);
    let cells: usize = desc.q.iter().map(|&qj| qj as usize).product();
    let cell_index = |site: &[i64]| -> usize {
        let mut idx = 0usize;
        for (&s, &q) in site.iter().zip(&desc.q) {
            idx = idx * q as usize + s as usize;
        }
        idx
    };

    let mut have_hopping = vec![false; cells * d];
    for h in &desc.hoppings {
        if h.axis == 0 || h.axis > d {
            report.violations.push(Violation::BadAxis { axis: h.axis, d });
            continue;
        }
        if !in_cell(&h.site) {
            report
                .violations
                .push(Violation::SiteOutsideCell { site: h.site.clone() });
            continue;
        }
        let slot = cell_index(&h.site) * d + h.axis - 1;
        if have_hopping[slot] {
            report.violations.push(Violation::DuplicateHopping {
                site: h.site.clone(),
                axis: h.axis,
            });
            continue;
        }
        have_hopping[slot] = true;
        if !h.value.re.is_finite() || !h.value.im.is_finite() {
            report.violations.push(Violation::NonFiniteHopping {
                site: h.site.clone(),
                axis: h.axis,
            });
        } else if h.value.norm_sqr() == 0.0 {
            report.violations.push(Violation::ZeroHopping {
                site: h.site.clone(),
                axis: h.axis,
            });
        }
    }
    // Report missing slots in cell order for a stable message.
    for cell in 0..cells {
        for axis in 1..=d {
            if !have_hopping[cell * d + axis - 1] {
                let site = crate::lattice::lex_coords(
                    cell,
                    &desc.q.iter().map(|&qj| qj as usize).collect::<Vec<_>>(),
                )
                .into_iter()
                .map(|c| c as i64)
                .collect();
                report.violations.push(Violation::MissingHopping { site, axis });
            }
        }
    }

    let mut have_potential = vec![false; cells];
    for p in &desc.potential {
        if !in_cell(&p.site) {
            report
                .violations
                .push(Violation::SiteOutsideCell { site: p.site.clone() });
            continue;
        }
        let slot = cell_index(&p.site);
        if have_potential[slot] {
            report
                .violations
                .push(Violation::DuplicatePotential { site: p.site.clone() });
            continue;
        }
        have_potential[slot] = true;
        if !p.value.re.is_finite() || !p.value.im.is_finite() {
            report
                .violations
                .push(Violation::NonFinitePotential { site: p.site.clone() });
        } else if p.value.im != 0.0 {
            report
                .violations
                .push(Violation::NonRealPotential { site: p.site.clone() });
        }
    }

    report
}

impl OperatorDescription {
    /// Validate and assemble. Missing potential entries default to `b = 0`.
    pub fn build(&self) -> Result<PeriodicJacobiOperator, ValidationReport> {
        let report = validate(self);
        if !report.is_valid() {
            return Err(report);
        }
        let d = self.q.len();
        let cells: usize = self.q.iter().map(|&qj| qj as usize).product();
        let cell_index = |site: &[i64]| -> usize {
            let mut idx = 0usize;
            for (&s, &q) in site.iter().zip(&self.q) {
                idx = idx * q as usize + s as usize;
            }
            idx
        };
        let mut hoppings = vec![Complex64::new(0.0, 0.0); cells * d];
        for h in &self.hoppings {
            hoppings[cell_index(&h.site) * d + h.axis - 1] = h.value;
        }
        let mut potential = vec![0.0f64; cells];
        for p in &self.potential {
            potential[cell_index(&p.site)] = p.value.re;
        }
        Ok(PeriodicJacobiOperator {
            q: self.q.clone(),
            hoppings,
            potential,
        })
    }
}
