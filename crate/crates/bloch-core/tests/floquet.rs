//! Fiber matrices, the discrete Floquet transform, and the gauge frame,
//! pinned against closed forms of the free chain and the dimer chain.

use bloch_core::{
    fiber_hamiltonian, fiber_velocity, floquet_transform, free1d, gauge_matrix, gauged_fiber,
    hermitian_eigendecomposition, inverse_floquet_transform, random_state, ssh,
    verify_block_diagonalization, Complex64, Geometry, LatticeState,
};

#[test]
fn free_fiber_closed_form() {
    // q = 1: J(theta) = 2 cos(2 pi theta), P(theta) = -2 sin(2 pi theta).
    let op = free1d();
    for k in 0..16 {
        let theta = [k as f64 / 16.0];
        let j = fiber_hamiltonian(&op, &theta).unwrap().matrix;
        let p = fiber_velocity(&op, &theta, 1).unwrap().matrix;
        let phi = 2.0 * std::f64::consts::PI * theta[0];
        assert!((j[(0, 0)].re - 2.0 * phi.cos()).abs() <= 1e-14);
        assert!(j[(0, 0)].im.abs() <= 1e-14);
        assert!((p[(0, 0)].re + 2.0 * phi.sin()).abs() <= 1e-14);
        assert!(p[(0, 0)].im.abs() <= 1e-14);
    }
    // Band crossing: J(1/4) vanishes to rounding, P(1/4) = -2.
    let j = fiber_hamiltonian(&op, &[0.25]).unwrap().matrix;
    assert!(j[(0, 0)].norm() <= 1e-15);
    let p = fiber_velocity(&op, &[0.25], 1).unwrap().matrix;
    assert!((p[(0, 0)].re + 2.0).abs() <= 1e-14);
}

#[test]
fn dimer_fiber_spectrum_closed_form() {
    // |1 + 2 e^{i phi}|^2 = 5 + 4 cos phi, so E(theta) = ±sqrt(5 + 4 cos(2 pi theta)).
    let op = ssh(1.0, 2.0).unwrap();
    for k in 0..32 {
        let theta = [k as f64 / 32.0];
        let j = fiber_hamiltonian(&op, &theta).unwrap().matrix;
        let (vals, _) = hermitian_eigendecomposition(&j).unwrap();
        let e = (5.0 + 4.0 * (2.0 * std::f64::consts::PI * theta[0]).cos()).sqrt();
        assert!((vals[0] + e).abs() <= 1e-13, "theta {theta:?}: {} vs {}", vals[0], -e);
        assert!((vals[1] - e).abs() <= 1e-13, "theta {theta:?}: {} vs {}", vals[1], e);
    }
}

#[test]
fn dimer_fiber_at_zero_is_the_periodic_cell() {
    // theta = 0 closes the cell periodically: both bonds land on the same
    // off-diagonal entry.
    let op = ssh(1.0, 2.0).unwrap();
    let j = fiber_hamiltonian(&op, &[0.0]).unwrap().matrix;
    assert_eq!(j[(0, 0)], Complex64::new(0.0, 0.0));
    assert_eq!(j[(0, 1)], Complex64::new(3.0, 0.0));
    assert_eq!(j[(1, 0)], Complex64::new(3.0, 0.0));
    let (vals, _) = hermitian_eigendecomposition(&j).unwrap();
    assert!((vals[0] + 3.0).abs() <= 1e-14);
    assert!((vals[1] - 3.0).abs() <= 1e-14);
}

#[test]
fn fiber_is_exactly_periodic_at_dyadic_quasimomenta() {
    // Canonicalization maps theta to [0,1) before any trigonometry, so a
    // dyadic shift by a whole period reproduces the matrix bit for bit.
    let op = ssh(1.0, 2.0).unwrap();
    let a = fiber_hamiltonian(&op, &[0.25]).unwrap().matrix;
    let b = fiber_hamiltonian(&op, &[1.25]).unwrap().matrix;
    let c = fiber_hamiltonian(&op, &[-0.75]).unwrap().matrix;
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn transform_of_a_point_mass_is_flat() {
    // q = 1, N = 4: each fiber of F delta_0 is the constant 1/sqrt(4).
    let op = free1d();
    let geom = Geometry::torus(vec![4], vec![1]).unwrap();
    let delta = LatticeState::delta(geom, &[0]).unwrap();
    let field = floquet_transform(&op, &delta).unwrap();
    assert_eq!(field.grid_size(), 4);
    for fiber in &field.fibers {
        assert_eq!(fiber.len(), 1);
        assert!((fiber[0] - Complex64::new(0.5, 0.0)).norm() <= 1e-15);
    }
}

#[test]
fn transform_is_unitary_and_invertible() {
    let op = ssh(1.0, 2.0).unwrap();
    let geom = Geometry::torus(vec![8], vec![2]).unwrap();
    for seed in 0..5u64 {
        let psi = random_state(&geom, 6, seed).unwrap();
        let field = floquet_transform(&op, &psi).unwrap();
        assert!((field.norm_sq() - psi.norm_sq()).abs() <= 1e-13);
        let back = inverse_floquet_transform(&op, &field).unwrap();
        assert!(psi.distance(&back).unwrap() <= 1e-13);
    }
}

#[test]
fn transform_requires_a_commensurate_torus() {
    let op = ssh(1.0, 2.0).unwrap();
    let boxed = LatticeState::delta(Geometry::box_with_radius(vec![4]).unwrap(), &[0]).unwrap();
    assert!(floquet_transform(&op, &boxed).is_err());
    // Torus over the wrong periods is refused too.
    let wrong = LatticeState::delta(Geometry::torus(vec![8], vec![1]).unwrap(), &[0]).unwrap();
    assert!(floquet_transform(&op, &wrong).is_err());
}

#[test]
fn transform_block_diagonalizes_j_and_p() {
    let free = free1d();
    assert!(verify_block_diagonalization(&free, &[4], None, 1).unwrap() <= 1e-12);
    assert!(verify_block_diagonalization(&free, &[4], Some(1), 2).unwrap() <= 1e-12);
    let dimer = ssh(1.0, 2.0).unwrap();
    assert!(verify_block_diagonalization(&dimer, &[8], None, 3).unwrap() <= 1e-12);
    assert!(verify_block_diagonalization(&dimer, &[8], Some(1), 4).unwrap() <= 1e-12);
}

#[test]
fn gauge_matrix_closed_form() {
    // q = 2, theta = 1/4: M = diag(e^{2 pi i theta x / q}) = diag(1, e^{i pi/4}).
    let op = ssh(1.0, 2.0).unwrap();
    let m = gauge_matrix(&op, &[0.25]).unwrap();
    assert!((m[0] - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
    let eighth = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    assert!((m[1] - eighth).norm() <= 1e-15);
}

#[test]
fn gauge_conjugation_preserves_the_spectrum() {
    let op = bloch_core::random_periodic(1, &[3], 5).unwrap();
    for k in 0..8 {
        let theta = [k as f64 / 8.0 + 0.013];
        let plain = fiber_hamiltonian(&op, &theta).unwrap().matrix;
        let (gauged_j, gauged_p) = gauged_fiber(&op, &theta, 1).unwrap();
        let (a, _) = hermitian_eigendecomposition(&plain).unwrap();
        let (b, _) = hermitian_eigendecomposition(&gauged_j).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12);
        }
        // The gauged velocity stays Hermitian.
        let defect = (&gauged_p - gauged_p.adjoint()).norm();
        assert!(defect <= 1e-13);
    }
}

#[test]
fn fiber_matrices_are_hermitian() {
    let op = bloch_core::random_periodic(2, &[2, 2], 9).unwrap();
    for a in 0..5 {
        for b in 0..5 {
            let theta = [a as f64 / 5.0, b as f64 / 5.0 + 0.07];
            let j = fiber_hamiltonian(&op, &theta).unwrap().matrix;
            assert!((&j - j.adjoint()).norm() <= 1e-14);
            for axis in 1..=2 {
                let p = fiber_velocity(&op, &theta, axis).unwrap().matrix;
                assert!((&p - p.adjoint()).norm() <= 1e-14);
            }
        }
    }
}

#[test]
fn fiber_velocity_rejects_bad_axis() {
    let op = free1d();
    assert!(fiber_velocity(&op, &[0.1], 0).is_err());
    assert!(fiber_velocity(&op, &[0.1], 2).is_err());
}
