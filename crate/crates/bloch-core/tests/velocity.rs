//! The asymptotic velocity observable `Q`: spectral atoms, moments, the
//! diagonal action on band eigenstates, and the ballistic comparison table.

use bloch_core::velocity::band_eigenstate;
use bloch_core::{
    asymptotic_velocity, ballistic_report, free1d, free2d, random_state, ssh, BlochError,
    Geometry, LatticeState,
};

#[test]
fn free_chain_point_mass_moments() {
    // delta_0 spreads uniformly over quasimomenta: <Q> = 0 by symmetry and
    // <Q^2> = mean of 4 sin^2(2 pi theta) = 2, exactly on any grid with
    // N >= 3.
    let op = free1d();
    let av = asymptotic_velocity(&op, &[64], &[1]).unwrap();
    let psi = LatticeState::delta(Geometry::torus(vec![64], vec![1]).unwrap(), &[0]).unwrap();
    let (mean, second) = av.q_moments(&psi, 1).unwrap();
    assert!(mean.abs() <= 1e-12);
    assert!((second - 2.0).abs() <= 1e-12);
}

#[test]
fn free_square_lattice_moments_per_axis() {
    let op = free2d();
    let av = asymptotic_velocity(&op, &[6, 6], &[1, 2]).unwrap();
    let psi =
        LatticeState::delta(Geometry::torus(vec![6, 6], vec![1, 1]).unwrap(), &[0, 0]).unwrap();
    for axis in 1..=2 {
        let (mean, second) = av.q_moments(&psi, axis).unwrap();
        assert!(mean.abs() <= 1e-12);
        assert!((second - 2.0).abs() <= 1e-12);
    }
}

#[test]
fn dimer_point_mass_moments() {
    // For bonds 1 and 2 the band velocity is -4 sin(phi)/sqrt(5 + 4 cos phi);
    // averaging its square gives exactly 2 (residue calculus), and the grid
    // sum converges to that geometrically.
    let op = ssh(1.0, 2.0).unwrap();
    let av = asymptotic_velocity(&op, &[64], &[1]).unwrap();
    let psi = LatticeState::delta(Geometry::torus(vec![64], vec![2]).unwrap(), &[0]).unwrap();
    let (mean, second) = av.q_moments(&psi, 1).unwrap();
    assert!(mean.abs() <= 1e-12);
    assert!((second - 2.0).abs() <= 1e-12);
}

#[test]
fn free_ring_velocity_atoms() {
    // N = 4: velocities -2 sin(2 pi n/4) = {0, -2, 0, 2}, each with weight
    // 1/4 of the flat point-mass fiber distribution.
    let op = free1d();
    let av = asymptotic_velocity(&op, &[4], &[1]).unwrap();
    let psi = LatticeState::delta(Geometry::torus(vec![4], vec![1]).unwrap(), &[0]).unwrap();
    let atoms = av.velocity_distribution(&psi, 1).unwrap();
    assert_eq!(atoms.len(), 4);
    let expect = [-2.0, 0.0, 0.0, 2.0];
    for ((v, w), e) in atoms.iter().zip(expect) {
        assert!((v - e).abs() <= 1e-12, "atom {v} vs {e}");
        assert!((w - 0.25).abs() <= 1e-12);
    }
}

#[test]
fn distribution_weights_sum_to_the_norm() {
    let op = bloch_core::random_periodic(1, &[3], 2).unwrap();
    let geom = Geometry::torus(vec![5], vec![3]).unwrap();
    let psi = random_state(&geom, 4, 8).unwrap();
    let av = asymptotic_velocity(&op, &[5], &[1]).unwrap();
    let atoms = av.velocity_distribution(&psi, 1).unwrap();
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    assert!((total - psi.norm_sq()).abs() <= 1e-12);
    for pair in atoms.windows(2) {
        assert!(pair[0].0 <= pair[1].0);
    }
}

#[test]
fn q_is_diagonal_on_band_eigenstates() {
    let op = bloch_core::random_periodic(1, &[3], 2).unwrap();
    let av = asymptotic_velocity(&op, &[5], &[1]).unwrap();
    for grid_index in [0, 2, 4] {
        for band in 0..3 {
            let (psi, v) = band_eigenstate(&av, grid_index, band, 1).unwrap();
            let q_psi = av.apply_q(&psi, 1).unwrap();
            let mut scaled = psi.clone();
            scaled.scale(bloch_core::Complex64::new(v, 0.0));
            assert!(
                q_psi.distance(&scaled).unwrap() <= 1e-12,
                "grid {grid_index} band {band}"
            );
        }
    }
}

#[test]
fn q_moments_are_an_expectation_and_a_square_norm() {
    let op = ssh(1.0, 2.0).unwrap();
    let geom = Geometry::torus(vec![8], vec![2]).unwrap();
    let psi = random_state(&geom, 6, 5).unwrap();
    let av = asymptotic_velocity(&op, &[8], &[1]).unwrap();
    let (mean, second) = av.q_moments(&psi, 1).unwrap();
    let q_psi = av.apply_q(&psi, 1).unwrap();
    assert!((mean - psi.inner(&q_psi).unwrap().re).abs() <= 1e-13);
    assert!((second - q_psi.norm_sq()).abs() <= 1e-13);
    // Cauchy-Schwarz keeps the variance nonnegative.
    assert!(second + 1e-13 >= mean * mean);
}

#[test]
fn observable_requires_its_own_torus() {
    let op = free1d();
    let av = asymptotic_velocity(&op, &[8], &[1]).unwrap();
    let wrong = LatticeState::delta(Geometry::torus(vec![16], vec![1]).unwrap(), &[0]).unwrap();
    assert!(av.apply_q(&wrong, 1).is_err());
    let boxed = LatticeState::delta(Geometry::box_with_radius(vec![4]).unwrap(), &[0]).unwrap();
    assert!(av.apply_q(&boxed, 1).is_err());
}

#[test]
fn ballistic_report_free_chain() {
    // X(t)/t equals Q on the free chain up to quadrature-free dense algebra,
    // so the strong error sits at the eigensolver's noise floor.
    let op = free1d();
    let psi = LatticeState::delta(Geometry::box_with_radius(vec![44]).unwrap(), &[0]).unwrap();
    let rows = ballistic_report(&op, &psi, 1, &[2.5, 5.0], &[96]).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!(row.strong_error <= 1e-9, "t {}: strong {}", row.t, row.strong_error);
        assert!(row.mean_error <= 1e-10);
        assert!(row.q_mean.abs() <= 1e-12);
        assert!((row.q_second_moment - 2.0).abs() <= 1e-12);
        assert!(row.boundary_mass <= 1e-12);
    }
}

#[test]
fn report_refuses_a_box_bigger_than_the_torus() {
    let op = free1d();
    let psi = LatticeState::delta(Geometry::box_with_radius(vec![10]).unwrap(), &[0]).unwrap();
    assert!(matches!(
        ballistic_report(&op, &psi, 1, &[1.0], &[8]),
        Err(BlochError::RadiusTooLarge { .. })
    ));
}

#[test]
fn report_needs_positive_times() {
    let op = free1d();
    let psi = LatticeState::delta(Geometry::box_with_radius(vec![10]).unwrap(), &[0]).unwrap();
    assert!(ballistic_report(&op, &psi, 1, &[0.0], &[64]).is_err());
    assert!(ballistic_report(&op, &psi, 1, &[-1.0], &[64]).is_err());
}
