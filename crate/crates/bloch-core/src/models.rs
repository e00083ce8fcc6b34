//! Built-in operator families used throughout the tests and the harness.

use num_complex::Complex64;

use crate::error::{BlochError, Result};
use crate::operator::PeriodicJacobiOperator;
use crate::rng::DeterministicRng;

/// Free Laplacian-type chain: `d = 1`, `q = [1]`, `a = 1`, `b = 0`.
/// Dispersion `E(theta) = 2 cos(2 pi theta)`, group velocity `-2 sin(2 pi theta)`.
pub fn free1d() -> PeriodicJacobiOperator {
    PeriodicJacobiOperator::new(vec![1], vec![Complex64::new(1.0, 0.0)], vec![0.0]).unwrap()
}

/// Free square-lattice operator: `d = 2`, `q = [1, 1]`, unit hoppings.
pub fn free2d() -> PeriodicJacobiOperator {
    PeriodicJacobiOperator::new(
        vec![1, 1],
        vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
        vec![0.0],
    )
    .unwrap()
}

/// Dimerized chain with alternating bonds `t1, t2`: `d = 1`, `q = [2]`.
/// Two bands `+-sqrt(t1^2 + t2^2 + 2 t1 t2 cos(2 pi theta))`.
pub fn ssh(t1: f64, t2: f64) -> Result<PeriodicJacobiOperator> {
    if !(t1.is_finite() && t2.is_finite()) || t1 == 0.0 || t2 == 0.0 {
        return Err(BlochError::Invalid(format!(
            "ssh bonds must be finite and non-zero, got ({t1}, {t2})"
        )));
    }
    PeriodicJacobiOperator::new(
        vec![2],
        vec![Complex64::new(t1, 0.0), Complex64::new(t2, 0.0)],
        vec![0.0, 0.0],
    )
}

/// Disorder scales `(magnitude, phase, potential)` for the seeded periodic
/// family.
///
/// The 1d family is deliberately weak: small commutator norms keep the
/// time-quadrature identity checks deep inside their fourth-order asymptotic
/// regime at practical step sizes. The family for `d >= 2` is deliberately
/// strong: wide avoided-crossing gaps give clean level repulsion, so
/// degeneracy-cluster velocity extraction is exercised against
/// well-conditioned band geometry instead of near-crossing noise.
pub fn random_scales(d: usize) -> (f64, f64, f64) {
    if d == 1 {
        (0.10, 0.15, 0.10)
    } else {
        (1.2, std::f64::consts::PI, 2.0)
    }
}

/// Seeded `q`-periodic operator with complex hoppings
/// `a = (1 + m u) e^{i p v}` and potential `b = b0 w`, where `u, v, w` are
/// independent uniforms on (-1, 1) drawn from a ChaCha8 stream in a fixed
/// order: for each cell site in lexicographic order, per axis, one
/// (magnitude, phase) pair; then one potential draw per site in the same
/// order. Scales come from [`random_scales`].
pub fn random_periodic(d: usize, q: &[i64], seed: u64) -> Result<PeriodicJacobiOperator> {
    if d == 0 || q.len() != d {
        return Err(BlochError::DimensionMismatch {
            expected: d.max(1),
            got: q.len(),
        });
    }
    for &qj in q {
        if qj < 1 {
            return Err(BlochError::Invalid(format!("period {qj} < 1")));
        }
    }
    let (m_scale, p_scale, b_scale) = random_scales(d);
    let cells: usize = q.iter().map(|&qj| qj as usize).product();
    let mut rng = DeterministicRng::new(seed);
    let mut hoppings = Vec::with_capacity(cells * d);
    for _cell in 0..cells {
        for _axis in 0..d {
            let mag = 1.0 + rng.symmetric(m_scale);
            let phase = rng.symmetric(p_scale);
            hoppings.push(Complex64::from_polar(mag, phase));
        }
    }
    let potential: Vec<f64> = (0..cells).map(|_| rng.symmetric(b_scale)).collect();
    PeriodicJacobiOperator::new(q.to_vec(), hoppings, potential)
}

/// Parse a built-in model name: `free1d`, `free2d`, `ssh(t1,t2)`,
/// `random_periodic(d,[q1,...],seed)`.
pub fn builtin(name: &str) -> Result<PeriodicJacobiOperator> {
    let name = name.trim();
    match name {
        "free1d" => return Ok(free1d()),
        "free2d" => return Ok(free2d()),
        _ => {}
    }
    let bad = || BlochError::Invalid(format!("unknown builtin model '{name}'"));
    let (head, rest) = name.split_once('(').ok_or_else(bad)?;
    let args = rest.strip_suffix(')').ok_or_else(bad)?;
    let parts = split_top_level(args);
    match head.trim() {
        "ssh" => {
            if parts.len() != 2 {
                return Err(BlochError::Invalid(format!(
                    "ssh takes 2 arguments, got {} in '{name}'",
                    parts.len()
                )));
            }
            let t1 = parse_f64(&parts[0])?;
            let t2 = parse_f64(&parts[1])?;
            ssh(t1, t2)
        }
        "random_periodic" => {
            if parts.len() != 3 {
                return Err(BlochError::Invalid(format!(
                    "random_periodic takes 3 arguments (d, [q..], seed), got {} in '{name}'",
                    parts.len()
                )));
            }
            let d: usize = parts[0]
                .trim()
                .parse()
                .map_err(|_| BlochError::Invalid(format!("bad dimension '{}'", parts[0])))?;
            let qs = parts[1].trim();
            let qs = qs
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| {
                    BlochError::Invalid(format!("periods must be a bracketed list, got '{qs}'"))
                })?;
            let q: Vec<i64> = qs
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| BlochError::Invalid(format!("bad period '{p}'")))
                })
                .collect::<Result<_>>()?;
            let seed: u64 = parts[2]
                .trim()
                .parse()
                .map_err(|_| BlochError::Invalid(format!("bad seed '{}'", parts[2])))?;
            random_periodic(d, &q, seed)
        }
        _ => Err(bad()),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| BlochError::Invalid(format!("bad number '{s}'")))
}

/// Split on commas that are not nested inside brackets.
fn split_top_level(s: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '[' | '(' => {
                depth += 1;
                cur.push(ch);
            }
            ']' | ')' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    parts.push(cur);
    parts
}
