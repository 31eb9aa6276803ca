//! Feedback laws: matching modulation, DC current source, amplitude loops.
//!
//! Every law is a pure function of measurements and controller state; the
//! scenario loop owns the integrator states `ξ` and `ν`.

use serde::{Deserialize, Serialize};

use crate::analysis::{b_coefficient, mu_roots, psi};
use crate::error::{ensure_finite, Error, Result};
use crate::frames::{CurrentDq, ModulationAb, PlanarOperator, VoltageDq};

/// Oscillator gain and modulation depth of the matching controller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingConfig {
    pub eta: f64,
    pub mu: f64,
}

impl MatchingConfig {
    /// `η = ω₀ / v_dc,ref`, so that the converter rotates at `ω₀` when the
    /// DC voltage sits at its reference.
    pub fn new(omega0: f64, v_dc_ref: f64, mu: f64) -> Result<Self> {
        ensure_finite(&[omega0, v_dc_ref, mu], "matching configuration")?;
        if omega0 <= 0.0 || v_dc_ref <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "omega0 and v_dc_ref must be positive (got {omega0}, {v_dc_ref})"
            )));
        }
        Ok(Self {
            eta: omega0 / v_dc_ref,
            mu,
        })
    }
}

/// `m = μ [−sin θ, cos θ]ᵀ`. In the frame of `θ` this is `μ e₂`.
pub fn matching_modulation(theta: f64, mu: f64) -> ModulationAb {
    let (s, c) = theta.sin_cos();
    ModulationAb::new(-mu * s, mu * c)
}

/// DC current source gains. P mode when `k_i = k_d = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcControlConfig {
    pub i_dc_ref: f64,
    pub v_dc_ref: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    /// Nominal AC frequency; fixes `η = ω₀/v_dc,ref`.
    pub omega0: f64,
}

impl Default for DcControlConfig {
    fn default() -> Self {
        Self {
            i_dc_ref: 100.0,
            v_dc_ref: 1000.0,
            k_p: 1.0,
            k_i: 10.0,
            k_d: 0.0,
            omega0: 2.0 * std::f64::consts::PI * 50.0,
        }
    }
}

impl DcControlConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(
            &[self.i_dc_ref, self.v_dc_ref, self.k_p, self.k_i, self.k_d, self.omega0],
            "DC control configuration",
        )?;
        if self.k_p < 0.0 || self.k_i < 0.0 || self.k_d < 0.0 {
            return Err(Error::InvalidConfig("DC gains must be non-negative".into()));
        }
        if self.v_dc_ref <= 0.0 || self.omega0 <= 0.0 {
            return Err(Error::InvalidConfig("v_dc_ref and omega0 must be positive".into()));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.omega0 / self.v_dc_ref
    }

    pub fn is_proportional(&self) -> bool {
        self.k_i == 0.0 && self.k_d == 0.0
    }

    /// `i_0 = i_dc,ref + K_p v_dc,ref`, the DC current at zero voltage.
    pub fn i_0(&self) -> f64 {
        self.i_dc_ref + self.k_p * self.v_dc_ref
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DcControlState {
    /// Integral of the DC voltage error.
    pub xi: f64,
}

/// `i_dc = i_dc,ref − K_p (v_dc − v_dc,ref)`.
pub fn dc_p_control(v_dc: f64, cfg: &DcControlConfig) -> f64 {
    cfg.i_dc_ref - cfg.k_p * (v_dc - cfg.v_dc_ref)
}

/// Proportional and integral part of the PID source, plus `ξ̇`.
///
/// The derivative gain is not differentiated here: it enters the plant as
/// extra DC capacitance, see
/// [`ConverterParams::with_derivative_gain`](crate::plant::ConverterParams::with_derivative_gain).
pub fn dc_pid_control(v_dc: f64, state: &DcControlState, cfg: &DcControlConfig) -> (f64, f64) {
    let err = v_dc - cfg.v_dc_ref;
    (dc_p_control(v_dc, cfg) - cfg.k_i * state.xi, err)
}

/// How the modulation depth `μ` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AmplitudeConfig {
    Constant { mu: f64 },
    /// Load-current feedforward that places the steady amplitude at `r_ref`.
    Feedforward { r_ref: f64 },
    /// Feedforward plus a PI loop on the power-imbalance output `y`.
    PiPbc { r_ref: f64, kappa_p: f64, kappa_i: f64 },
    /// `μ = μ_ref + d_v (P_l − P_ref)`.
    Droop { mu_ref: f64, d_v: f64, p_ref: f64 },
}

impl AmplitudeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        match *self {
            Self::Constant { mu } if !(mu >= 0.0 && mu.is_finite()) => bad("constant mu must be finite and >= 0"),
            Self::Feedforward { r_ref } if !(r_ref > 0.0) => bad("r_ref must be positive"),
            Self::PiPbc { r_ref, kappa_p, kappa_i } if !(r_ref > 0.0 && kappa_p > 0.0 && kappa_i > 0.0) => {
                bad("pi_pbc needs r_ref, kappa_p, kappa_i > 0")
            }
            Self::Droop { mu_ref, d_v, p_ref } if !(d_v >= 0.0 && mu_ref.is_finite() && p_ref.is_finite()) => {
                bad("droop needs d_v >= 0 and finite set-points")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AmplitudeState {
    pub nu: f64,
}

/// A modulation depth after range limiting. `raw` is the unclipped law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modulation {
    pub mu: f64,
    pub raw: f64,
}

impl Modulation {
    pub fn clipped(raw: f64, lo: f64, hi: f64) -> Self {
        Self {
            mu: raw.clamp(lo, hi),
            raw,
        }
    }

    pub fn is_clipped(&self) -> bool {
        self.mu != self.raw
    }
}

/// Disturbance-decoupling amplitude: the positive root `μ₊` for the measured
/// load current, limited to 1.
pub fn amplitude_feedforward(
    i_l_dq: CurrentDq,
    r_ref: f64,
    z: PlanarOperator,
    y: PlanarOperator,
    v_dc_ref: f64,
) -> Result<Modulation> {
    let psi = psi(r_ref, z, y, i_l_dq);
    if !(psi > 0.0) {
        return Err(Error::InfeasibleAmplitude { psi });
    }
    let (mu_plus, _) = mu_roots(psi, b_coefficient(z, i_l_dq, v_dc_ref), v_dc_ref)?;
    Ok(Modulation::clipped(mu_plus, f64::NEG_INFINITY, 1.0))
}

/// Steady-state q current `e₂ᵀ(Z + Y⁻¹)⁻¹(½μ e₂ v_dc,ref + Y⁻¹ s)` for a
/// load current source `s`.
pub fn i_q_star(mu: f64, z: PlanarOperator, y: PlanarOperator, s_l: CurrentDq, v_dc_ref: f64) -> Result<f64> {
    let y_inv = y.inv()?;
    let drive = VoltageDq::new(0.0, 0.5 * mu * v_dc_ref) + (y_inv * s_l).cast();
    Ok(((z + y_inv).inv()? * drive).x2)
}

/// Output of one PI-PBC evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiPbcOutput {
    pub modulation: Modulation,
    pub dnu: f64,
    pub y: f64,
}

/// `μ = μ₊ − κ_p y − κ_i ν`, `ν̇ = y`, with the power-imbalance output
/// `y = i_q v_dc,ref − i_q* v_dc`. The steady value of `ν` is zero.
pub fn pi_pbc_control(
    v_dc: f64,
    i_q: f64,
    state: &AmplitudeState,
    kappa_p: f64,
    kappa_i: f64,
    mu_plus: f64,
    i_q_star: f64,
    v_dc_ref: f64,
) -> PiPbcOutput {
    let y = i_q * v_dc_ref - i_q_star * v_dc;
    PiPbcOutput {
        modulation: Modulation::clipped(mu_plus - kappa_p * y - kappa_i * state.nu, 0.0, 1.0),
        dnu: y,
        y,
    }
}

/// `μ = μ_ref + d_v (P_l − P_ref)`, limited to `[0, 1]`.
pub fn voltage_droop(p_l: f64, mu_ref: f64, d_v: f64, p_ref: f64) -> Modulation {
    Modulation::clipped(mu_ref + d_v * (p_l - p_ref), 0.0, 1.0)
}
