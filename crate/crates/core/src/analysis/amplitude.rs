//! Feasibility of an amplitude set-point.
//!
//! At a frequency-regulated steady state the AC side is linear,
//! `(ZY + I) v = ½μ v_dc,ref e₂ − Z s`, so `‖v‖ = r` is a quadratic in `μ`:
//!
//! `μ² − b μ − 4ψ / v_dc,ref² = 0`, with `ψ = r²‖ZY + I‖² − ‖Z s‖²` and
//! `b = (4 / v_dc,ref) e₂ᵀ Z s`.
//!
//! The product of the roots is `−4ψ/v²`, so a positive and a negative root
//! exist exactly when `ψ > 0`.

use crate::error::{Error, Result};
use crate::frames::{CurrentDq, PlanarOperator};

pub fn psi(r_ref: f64, z: PlanarOperator, y: PlanarOperator, s_l: CurrentDq) -> f64 {
    let n = z * y + PlanarOperator::IDENTITY;
    r_ref * r_ref * n.det() - (z * s_l).norm_sq()
}

pub fn b_coefficient(z: PlanarOperator, s_l: CurrentDq, v_dc_ref: f64) -> f64 {
    4.0 / v_dc_ref * (z * s_l).x2
}

/// `(μ₊, μ₋) = b/2 ± √((b/2)² + 4ψ/v²)`.
pub fn mu_roots(psi: f64, b: f64, v_dc_ref: f64) -> Result<(f64, f64)> {
    let half_b = 0.5 * b;
    let disc = half_b * half_b + 4.0 * psi / (v_dc_ref * v_dc_ref);
    if !(disc >= 0.0) {
        return Err(Error::ComplexRoots { discriminant: disc });
    }
    let root = disc.sqrt();
    // The larger-magnitude root is formed without cancellation; the other
    // follows from the product.
    let product = -4.0 * psi / (v_dc_ref * v_dc_ref);
    if half_b >= 0.0 {
        let plus = half_b + root;
        let minus = if plus != 0.0 { product / plus } else { 0.0 };
        Ok((plus, minus))
    } else {
        let minus = half_b - root;
        Ok((product / minus, minus))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unloaded_roots_are_symmetric() {
        let z = PlanarOperator::impedance(0.1, 5e-4, 100.0 * PI);
        let y = PlanarOperator::admittance(0.01, 1e-5, 100.0 * PI);
        let p = psi(165.0, z, y, CurrentDq::ZERO);
        let n = z * y + PlanarOperator::IDENTITY;
        assert!((p - 165.0f64.powi(2) * n.norm().powi(2)).abs() < 1e-9);
        assert_eq!(b_coefficient(z, CurrentDq::ZERO, 1000.0), 0.0);
        let (a, b) = mu_roots(p, 0.0, 1000.0).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn complex_roots_are_an_error() {
        assert!(matches!(mu_roots(-1e6, 0.01, 1000.0), Err(Error::ComplexRoots { .. })));
    }

    /// Scaling the load current towards `ψ = 0` moves `μ₊` continuously to `max(b, 0)`.
    #[test]
    fn continuation_to_the_feasibility_boundary() {
        let z = PlanarOperator::impedance(0.1, 5e-4, 100.0 * PI);
        let y = PlanarOperator::admittance(0.01, 1e-5, 100.0 * PI);
        for dir in [CurrentDq::new(1.0, 0.3), CurrentDq::new(-0.4, 1.0), CurrentDq::new(0.2, -1.0)] {
            let n = z * y + PlanarOperator::IDENTITY;
            // ψ(k) = r²‖N‖² − k²‖Z dir‖² vanishes at k*
            let k_star = 165.0 * n.norm() / (z * dir).norm();
            let mut prev: Option<f64> = None;
            for j in 0..=200 {
                let k = k_star * (1.0 - (1.0 - j as f64 / 200.0).powi(3)) * (1.0 - 1e-12);
                let s = dir * k;
                let b = b_coefficient(z, s, 1000.0);
                let (mp, _) = mu_roots(psi(165.0, z, y, s), b, 1000.0).unwrap();
                if let Some(p) = prev {
                    assert!((mp - p).abs() < 0.01, "jump at step {j}");
                }
                prev = Some(mp);
                if j == 200 {
                    assert!((mp - b.max(0.0)).abs() < 1e-5, "{mp} vs {b}");
                }
            }
        }
    }
}
