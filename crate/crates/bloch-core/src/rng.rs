//! Deterministic random sources.
//!
//! Everything random in the library flows through [`DeterministicRng`]: a
//! ChaCha8 stream with a pinned u64-to-float mapping and a hand-rolled
//! Box-Muller transform. This keeps seeded models and states bit-reproducible
//! across platforms and dependency upgrades (no distribution-crate internals
//! in the loop).

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{BlochError, Result};
use crate::lattice::{Geometry, LatticeState};
use num_complex::Complex64;

pub struct DeterministicRng {
    inner: ChaCha8Rng,
}

impl DeterministicRng {
    pub fn new(seed: u64) -> Self {
        DeterministicRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in the open interval (0, 1): top 53 bits, offset by half a ulp
    /// so 0 and 1 are never produced (safe under `ln`).
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * 2f64.powi(-53)
    }

    /// Uniform in (-scale, scale).
    pub fn symmetric(&mut self, scale: f64) -> f64 {
        scale * (2.0 * self.uniform() - 1.0)
    }

    /// One Box-Muller pair of independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        (r * a.cos(), r * a.sin())
    }
}

/// Normalized Gaussian state supported on the centered ball
/// `{ x : |x_j| <= support_radius }`, amplitudes drawn site by site in
/// lexicographic order (real part, then imaginary part).
pub fn random_state(geometry: &Geometry, support_radius: i64, seed: u64) -> Result<LatticeState> {
    if support_radius < 0 {
        return Err(BlochError::Invalid(format!(
            "negative support radius {support_radius}"
        )));
    }
    match geometry {
        Geometry::Box { radius } => {
            for (j, &r) in radius.iter().enumerate() {
                if support_radius > r {
                    return Err(BlochError::RadiusTooLarge {
                        radius: support_radius,
                        limit: r,
                        axis: j + 1,
                    });
                }
            }
        }
        Geometry::Torus { .. } => {
            for (j, side) in geometry.extents().iter().enumerate() {
                if 2 * support_radius + 1 > *side as i64 {
                    return Err(BlochError::RadiusTooLarge {
                        radius: support_radius,
                        limit: (*side as i64 - 1) / 2,
                        axis: j + 1,
                    });
                }
            }
        }
    }

    let d = geometry.dim();
    let mut rng = DeterministicRng::new(seed);
    let mut state = LatticeState::zero(geometry.clone());
    let width = (2 * support_radius + 1) as usize;
    let extents = vec![width; d];
    let ball_sites: usize = extents.iter().product();
    for flat in 0..ball_sites {
        let site: Vec<i64> = crate::lattice::lex_coords(flat, &extents)
            .into_iter()
            .map(|c| c as i64 - support_radius)
            .collect();
        let (re, im) = rng.normal_pair();
        state.set(&site, Complex64::new(re, im))?;
    }
    Ok(state.normalized())
}
