//! Built-in model families: name parsing, the seeded disorder law, and the
//! seeded initial states.

use bloch_core::{builtin, free2d, random_periodic, random_state, BlochError, Geometry};

#[test]
fn builtin_names_round_trip() {
    let free = builtin("free1d").unwrap();
    assert_eq!(free.q(), &[1]);
    assert_eq!(free.hopping_at(&[0], &[1]).unwrap().re, 1.0);

    let sq = builtin(" free2d ").unwrap();
    assert_eq!(sq.q(), &[1, 1]);

    let dimer = builtin("ssh(1, 2)").unwrap();
    assert_eq!(dimer.hopping_at(&[0], &[1]).unwrap().re, 1.0);
    assert_eq!(dimer.hopping_at(&[1], &[2]).unwrap().re, 2.0);

    let rnd = builtin("random_periodic(2, [2, 3], 17)").unwrap();
    assert_eq!(rnd.q(), &[2, 3]);
    let direct = random_periodic(2, &[2, 3], 17).unwrap();
    for x in [[0i64, 0], [1, 2], [0, 1]] {
        for step in [[1i64, 0], [0, 1]] {
            let y = [x[0] + step[0], x[1] + step[1]];
            assert_eq!(
                rnd.hopping_at(&x, &y).unwrap(),
                direct.hopping_at(&x, &y).unwrap()
            );
        }
    }
}

#[test]
fn builtin_rejects_malformed_names() {
    for bad in [
        "free3d",
        "ssh",
        "ssh(1)",
        "ssh(1,2,3)",
        "ssh(1,x)",
        "ssh(1,0)",
        "random_periodic(1,3,5)",
        "random_periodic(1,[3)",
        "random_periodic(2,[2,2])",
        "random_periodic(0,[],1)",
        "mystery(1)",
    ] {
        assert!(builtin(bad).is_err(), "'{bad}' should not parse");
    }
}

#[test]
fn disorder_law_respects_its_scales() {
    // d = 1 scales: |a| in [0.9, 1.1], |arg a| <= 0.15, |b| <= 0.1.
    for seed in 0..20u64 {
        let op = random_periodic(1, &[3], seed).unwrap();
        for cell in 0..3usize {
            let a = op.hopping(cell, 1);
            assert!((a.norm() - 1.0).abs() < 0.1 + 1e-12);
            assert!(a.arg().abs() < 0.15 + 1e-12);
            assert!(op.potential(cell).abs() < 0.1 + 1e-12);
        }
    }
    // d = 2 turns the disorder up; the phase can wind anywhere.
    let op = random_periodic(2, &[2, 2], 0).unwrap();
    let mut spread = 0.0f64;
    for cell in 0..4usize {
        for axis in 1..=2 {
            spread = spread.max((op.hopping(cell, axis).norm() - 1.0).abs());
        }
        assert!(op.potential(cell).abs() < 2.0 + 1e-12);
    }
    assert!(spread > 0.2, "2d magnitudes stay near 1: spread {spread}");
}

#[test]
fn disorder_is_deterministic_in_the_seed() {
    let a = random_periodic(2, &[2, 2], 123).unwrap();
    let b = random_periodic(2, &[2, 2], 123).unwrap();
    let other = random_periodic(2, &[2, 2], 124).unwrap();
    let mut differs = false;
    for cell in 0..4usize {
        assert_eq!(a.potential(cell), b.potential(cell));
        for axis in 1..=2 {
            assert_eq!(a.hopping(cell, axis), b.hopping(cell, axis));
            differs |= a.hopping(cell, axis) != other.hopping(cell, axis);
        }
    }
    assert!(differs, "seeds 123 and 124 produced the same operator");
}

#[test]
fn random_state_is_normalized_and_supported() {
    let geom = Geometry::torus(vec![16], vec![1]).unwrap();
    let psi = random_state(&geom, 3, 9).unwrap();
    assert!((psi.norm() - 1.0).abs() <= 1e-14);
    for (i, a) in psi.amplitudes.iter().enumerate() {
        let x = psi.geometry.centered_site_at(i);
        if x[0].abs() > 3 {
            assert_eq!(a.norm_sqr(), 0.0, "mass outside the support at {x:?}");
        }
    }
    let again = random_state(&geom, 3, 9).unwrap();
    assert_eq!(psi.amplitudes, again.amplitudes);
}

#[test]
fn random_state_rejects_oversized_support() {
    let geom = Geometry::box_with_radius(vec![4]).unwrap();
    assert!(matches!(
        random_state(&geom, 5, 0),
        Err(BlochError::RadiusTooLarge { .. })
    ));
    let torus = Geometry::torus(vec![3], vec![1]).unwrap();
    assert!(random_state(&torus, 2, 0).is_err());
}

#[test]
fn free_square_lattice_has_unit_bonds_both_ways() {
    let op = free2d();
    assert_eq!(op.hopping_at(&[0, 0], &[1, 0]).unwrap().re, 1.0);
    assert_eq!(op.hopping_at(&[0, 0], &[0, 1]).unwrap().re, 1.0);
    assert_eq!(op.dim(), 2);
}
