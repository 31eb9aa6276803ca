//! Incremental storage functions around an equilibrium.
//!
//! `V₁` is the physical energy of the deviation. `V₂` adds the energy of the
//! integral state and the capacitance contributed by a derivative gain. `V₃`
//! adds the PI-PBC integrator with weight `κ_i/4`: the modulation deviation
//! enters `V̇₂` as `½ μ̃ y`, and with `μ̃ = −κ_p y − κ_i ν̃` that weight is the
//! one that cancels the cross term `ν̃ y`, leaving `V̇₃ = −(·)ᵀQ(·) − ½κ_p y²`.

use crate::analysis::Equilibrium;
use crate::frames::{CurrentDq, VoltageDq};
use crate::plant::ConverterParams;

/// The quadratic variables of the matched converter in its own frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DqSnapshot {
    pub v_dc: f64,
    pub i: CurrentDq,
    pub v: VoltageDq,
    pub xi: f64,
    pub nu: f64,
}

impl DqSnapshot {
    pub fn at(eq: &Equilibrium) -> Self {
        Self {
            v_dc: eq.v_dc_star,
            i: eq.i_dq_star,
            v: eq.v_dq_star,
            xi: eq.xi_star,
            nu: eq.nu_star,
        }
    }
}

pub fn storage_v1(x: &DqSnapshot, eq: &Equilibrium, p: &ConverterParams) -> f64 {
    let dv = x.v_dc - eq.v_dc_star;
    0.5 * (p.c_dc * dv * dv + p.l * (x.i - eq.i_dq_star).norm_sq() + p.c * (x.v - eq.v_dq_star).norm_sq())
}

pub fn storage_v2(x: &DqSnapshot, eq: &Equilibrium, p: &ConverterParams, k_i: f64, k_d: f64) -> f64 {
    let dv = x.v_dc - eq.v_dc_star;
    let dxi = x.xi - eq.xi_star;
    storage_v1(x, eq, p) + 0.5 * (k_i * dxi * dxi + k_d * dv * dv)
}

pub fn storage_v3(x: &DqSnapshot, eq: &Equilibrium, p: &ConverterParams, k_i: f64, k_d: f64, kappa_i: f64) -> f64 {
    let dnu = x.nu - eq.nu_star;
    storage_v2(x, eq, p, k_i, k_d) + 0.25 * kappa_i * dnu * dnu
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::feedforward_equilibrium;
    use crate::control::DcControlConfig;
    use crate::plant::LoadParams;

    #[test]
    fn zero_at_equilibrium_and_dc_example() {
        let p = ConverterParams::default();
        let eq = feedforward_equilibrium(&p, &DcControlConfig::default(), &LoadParams::conductance(0.367), 165.0).unwrap();
        let x = DqSnapshot::at(&eq);
        assert_eq!(storage_v1(&x, &eq, &p), 0.0);
        assert_eq!(storage_v3(&x, &eq, &p, 10.0, 0.0, 10.0), 0.0);
        let bumped = DqSnapshot {
            v_dc: eq.v_dc_star + 1.0,
            ..x
        };
        assert!((storage_v1(&bumped, &eq, &p) - 5e-4).abs() < 1e-15);
        let with_kd = storage_v2(&bumped, &eq, &p, 10.0, 0.002);
        assert!((with_kd - 5e-4 - 1e-3).abs() < 1e-15);
    }
}
