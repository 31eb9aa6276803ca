//! Steady-state characteristics of matching control under the proportional
//! DC source: nose curves, droop slopes and proportional power sharing.
//!
//! With `g = G_dc + K_p` and `i_0 = i_dc,ref + K_p v_dc,ref`, the DC balance at
//! a steady state is `g v_dc² − i_0 v_dc + P_x = 0`. Frequency and switching
//! amplitude are both proportional to `v_dc` (`ω_x = η v_dc`,
//! `r_x = ½μ v_dc`), so the whole characteristic is one quadratic.

use serde::Serialize;

use crate::error::{Error, Result};

/// One grid point of a nose curve. `branches` is `None` beyond the tip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NosePoint {
    pub p_x: f64,
    /// `[high, low]` branch values.
    pub branches: Option<[NoseBranch; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoseBranch {
    pub v_dc: f64,
    pub r_x: f64,
    pub omega_x: f64,
}

pub fn p_max(i_0: f64, g_dc: f64, k_p: f64) -> f64 {
    i_0 * i_0 / (4.0 * (g_dc + k_p))
}

pub fn nose_curve(p_x_grid: &[f64], i_0: f64, g_dc: f64, k_p: f64, mu: f64, eta: f64) -> Vec<NosePoint> {
    let g = g_dc + k_p;
    p_x_grid
        .iter()
        .map(|&p_x| {
            let disc = i_0 * i_0 - 4.0 * g * p_x;
            let branches = (disc >= 0.0).then(|| {
                let root = disc.sqrt();
                let at = |v_dc: f64| NoseBranch {
                    v_dc,
                    r_x: 0.5 * mu * v_dc,
                    omega_x: eta * v_dc,
                };
                let high = (i_0 + root) / (2.0 * g);
                // Low branch from the product of the roots, `P_x / g`.
                let low = if high != 0.0 { p_x / (g * high) } else { 0.0 };
                [at(high), at(low)]
            });
            NosePoint { p_x, branches }
        })
        .collect()
}

/// `P_x(ω) = −(g/η²) ω² + (i_0/η) ω`.
pub fn p_of_omega(omega_x: f64, i_0: f64, g_dc: f64, k_p: f64, eta: f64) -> f64 {
    let g = g_dc + k_p;
    -(g / (eta * eta)) * omega_x * omega_x + (i_0 / eta) * omega_x
}

/// Local droop slopes at an operating frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DroopReport {
    pub omega_x: f64,
    pub r_x: f64,
    pub p_x: f64,
    /// `∂P_x/∂ω_x`.
    pub d_omega: f64,
    /// `∂P_x/∂r_x`, by the chain rule through `r_x = (μ/2η) ω_x`.
    pub d_r: f64,
    pub p_max: f64,
}

pub fn droop_coefficients(omega_x: f64, i_0: f64, g_dc: f64, k_p: f64, eta: f64, mu: f64) -> DroopReport {
    let g = g_dc + k_p;
    let d_omega = -2.0 * g * omega_x / (eta * eta) + i_0 / eta;
    DroopReport {
        omega_x,
        r_x: mu / (2.0 * eta) * omega_x,
        p_x: p_of_omega(omega_x, i_0, g_dc, k_p, eta),
        d_omega,
        d_r: 2.0 * eta / mu * d_omega,
        p_max: p_max(i_0, g_dc, k_p),
    }
}

/// Gains of a partner converter so that the reference converter carries `ρ`
/// times its power: `K_p' = K_p/ρ`, `i_dc,ref' = i_dc,ref/ρ`.
///
/// Exact when both DC-side conductances are zero: then `P_x = v_dc i_dc` and,
/// at the common frequency, `i_dc` scales with the gains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharingGains {
    pub rho: f64,
    pub k_p: [f64; 2],
    pub i_dc_ref: [f64; 2],
    /// Whether the zero DC-conductance assumption was met.
    pub lossless_dc: bool,
}

pub fn power_sharing_design(rho: f64, k_p_1: f64, i_dc_ref_1: f64, g_dc: f64) -> Result<SharingGains> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidConfig(format!("sharing ratio must be positive, got {rho}")));
    }
    Ok(SharingGains {
        rho,
        k_p: [k_p_1, k_p_1 / rho],
        i_dc_ref: [i_dc_ref_1, i_dc_ref_1 / rho],
        lossless_dc: g_dc == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA: f64 = 0.314_159_265_358_979_3;

    #[test]
    fn nose_endpoints() {
        let (i_0, g_dc, k_p, mu) = (2100.0, 0.0, 2.0, 0.33);
        let pts = nose_curve(&[0.0, p_max(i_0, g_dc, k_p), p_max(i_0, g_dc, k_p) * 1.01], i_0, g_dc, k_p, mu, ETA);
        let [hi, lo] = pts[0].branches.unwrap();
        assert_eq!(hi.v_dc, i_0 / (g_dc + k_p));
        assert_eq!(lo.v_dc, 0.0);
        let [hi, lo] = pts[1].branches.unwrap();
        assert!((hi.v_dc - lo.v_dc).abs() < 1e-9);
        assert!((hi.v_dc - i_0 / (2.0 * (g_dc + k_p))).abs() < 1e-9);
        assert!(pts[2].branches.is_none());
    }

    #[test]
    fn network_converter_numbers() {
        assert_eq!(p_max(2100.0, 0.0, 2.0), 551_250.0);
        let d = droop_coefficients(100.0 * std::f64::consts::PI, 2100.0, 0.0, 2.0, 0.3142, 0.33);
        assert!((d.d_omega + 6.05e3).abs() < 10.0, "{}", d.d_omega);
        let vertex = 2100.0 * ETA / (2.0 * 2.0);
        let d = droop_coefficients(vertex, 2100.0, 0.0, 2.0, ETA, 0.33);
        assert!(d.d_omega.abs() < 1e-9);
        assert!((d.p_x - d.p_max).abs() < 1e-6);
    }

    #[test]
    fn inverse_round_trip() {
        let (i_0, g_dc, k_p, mu) = (1100.0, 0.1, 1.0, 0.33);
        let grid: Vec<f64> = (0..50).map(|k| k as f64 * 5000.0).collect();
        for pt in nose_curve(&grid, i_0, g_dc, k_p, mu, ETA) {
            let [hi, lo] = pt.branches.unwrap();
            let back = p_of_omega(hi.omega_x, i_0, g_dc, k_p, ETA);
            assert!((back - pt.p_x).abs() < 1e-9 * pt.p_x.max(1.0), "{back} vs {}", pt.p_x);
            assert!((hi.r_x - mu / (2.0 * ETA) * hi.omega_x).abs() < 1e-9);
            let g = g_dc + k_p;
            assert!((hi.v_dc + lo.v_dc - i_0 / g).abs() < 1e-12 * i_0 / g);
            assert!((hi.v_dc * lo.v_dc - pt.p_x / g).abs() < 1e-12 * (pt.p_x / g).max(1.0));
        }
    }

    #[test]
    fn sharing_gains() {
        let s = power_sharing_design(1.0, 2.0, 100.0, 0.0).unwrap();
        assert_eq!(s.k_p, [2.0, 2.0]);
        let s = power_sharing_design(3.0, 2.0, 100.0, 0.0).unwrap();
        assert_eq!(s.k_p[1], 2.0 / 3.0);
        assert_eq!(s.i_dc_ref[1], 100.0 / 3.0);
        assert!(s.lossless_dc);
        assert!(power_sharing_design(0.0, 2.0, 100.0, 0.0).is_err());
    }
}
