//! The complete controller of one converter: DC source plus amplitude loop.

use crate::analysis::{
    droop_equilibrium, feedforward_equilibrium, passivity_certificate, solve_equilibrium_p, solve_equilibrium_pid,
    storage_v2, storage_v3, Certificate, DqSnapshot, Equilibrium,
};
use crate::control::{
    amplitude_feedforward, dc_pid_control, i_q_star, pi_pbc_control, voltage_droop, AmplitudeConfig, AmplitudeState,
    DcControlConfig, DcControlState, Modulation,
};
use crate::error::Result;
use crate::frames::{CurrentDq, PlanarOperator, VoltageDq};
use crate::plant::{ConverterParams, LoadParams};

/// What the controller sees, in the converter's own frame.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Measurement {
    pub v_dc: f64,
    pub i_q: f64,
    pub i_l: CurrentDq,
    pub v: VoltageDq,
    pub xi: f64,
    pub nu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LawOutput {
    pub mu: Modulation,
    pub i_dc: f64,
    pub dxi: f64,
    pub dnu: f64,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Law {
    pub dc: DcControlConfig,
    pub amplitude: AmplitudeConfig,
    /// Filter impedance and admittance at the nominal frequency.
    z: PlanarOperator,
    y: PlanarOperator,
}

impl Law {
    pub fn new(p: &ConverterParams, dc: DcControlConfig, amplitude: AmplitudeConfig) -> Self {
        Self {
            dc,
            amplitude,
            z: PlanarOperator::impedance(p.r, p.l, dc.omega0),
            y: PlanarOperator::admittance(p.g, p.c, dc.omega0),
        }
    }

    pub fn eval(&self, m: &Measurement) -> Result<LawOutput> {
        let (i_dc, dxi) = dc_pid_control(m.v_dc, &DcControlState { xi: m.xi }, &self.dc);
        let v_ref = self.dc.v_dc_ref;
        let (mu, dnu) = match self.amplitude {
            AmplitudeConfig::Constant { mu } => (Modulation { mu, raw: mu }, 0.0),
            AmplitudeConfig::Feedforward { r_ref } => (amplitude_feedforward(m.i_l, r_ref, self.z, self.y, v_ref)?, 0.0),
            AmplitudeConfig::PiPbc { r_ref, kappa_p, kappa_i } => {
                let mu_plus = amplitude_feedforward(m.i_l, r_ref, self.z, self.y, v_ref)?.raw;
                let iqs = i_q_star(mu_plus, self.z, self.y, m.i_l, v_ref)?;
                let o = pi_pbc_control(m.v_dc, m.i_q, &AmplitudeState { nu: m.nu }, kappa_p, kappa_i, mu_plus, iqs, v_ref);
                (o.modulation, o.dnu)
            }
            AmplitudeConfig::Droop { mu_ref, d_v, p_ref } => (voltage_droop(m.i_l.dot(m.v), mu_ref, d_v, p_ref), 0.0),
        };
        Ok(LawOutput { mu, i_dc, dxi, dnu })
    }

    /// Updates one named gain or reference. Returns false for unknown names.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let dc = &mut self.dc;
        match (name, &mut self.amplitude) {
            ("k_p", _) => dc.k_p = value,
            ("k_i", _) => dc.k_i = value,
            ("k_d", _) => dc.k_d = value,
            ("i_dc_ref", _) => dc.i_dc_ref = value,
            ("mu", AmplitudeConfig::Constant { mu }) => *mu = value,
            ("r_ref", AmplitudeConfig::Feedforward { r_ref } | AmplitudeConfig::PiPbc { r_ref, .. }) => *r_ref = value,
            ("kappa_p", AmplitudeConfig::PiPbc { kappa_p, .. }) => *kappa_p = value,
            ("kappa_i", AmplitudeConfig::PiPbc { kappa_i, .. }) => *kappa_i = value,
            ("mu_ref", AmplitudeConfig::Droop { mu_ref, .. }) => *mu_ref = value,
            ("d_v", AmplitudeConfig::Droop { d_v, .. }) => *d_v = value,
            ("p_ref", AmplitudeConfig::Droop { p_ref, .. }) => *p_ref = value,
            _ => return false,
        }
        true
    }
}

/// Which storage function is monitored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum StorageKind {
    V1,
    V2,
    V3,
}

/// Reference equilibrium of a segment with its certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reference {
    pub equilibrium: Equilibrium,
    pub certificate: Certificate,
    pub kind: StorageKind,
}

impl Reference {
    pub(crate) fn storage(&self, x: &DqSnapshot, p: &ConverterParams, law: &Law) -> f64 {
        let eq = &self.equilibrium;
        match (self.kind, law.amplitude) {
            (StorageKind::V3, AmplitudeConfig::PiPbc { kappa_i, .. }) => storage_v3(x, eq, p, law.dc.k_i, law.dc.k_d, kappa_i),
            _ => storage_v2(x, eq, p, law.dc.k_i, law.dc.k_d),
        }
    }
}

/// Equilibrium the closed loop is expected to settle to, if the analysis
/// covers the controller combination.
pub(crate) fn single_reference(p: &ConverterParams, law: &Law, load: &LoadParams) -> Result<Option<Reference>> {
    let dc = &law.dc;
    let eq = match (dc.k_i > 0.0, law.amplitude) {
        (true, AmplitudeConfig::Constant { mu }) => solve_equilibrium_pid(p, dc, load, mu)?,
        (true, AmplitudeConfig::Feedforward { r_ref } | AmplitudeConfig::PiPbc { r_ref, .. }) => {
            feedforward_equilibrium(p, dc, load, r_ref)?
        }
        (true, AmplitudeConfig::Droop { mu_ref, d_v, p_ref }) => droop_equilibrium(p, dc, load, mu_ref, d_v, p_ref)?,
        (false, AmplitudeConfig::Constant { mu }) => solve_equilibrium_p(p, dc, load, mu)?,
        (false, _) => return Ok(None),
    };
    let kind = match (dc.k_i > 0.0 || dc.k_d > 0.0, law.amplitude) {
        (_, AmplitudeConfig::PiPbc { .. }) => StorageKind::V3,
        (true, _) => StorageKind::V2,
        (false, _) => StorageKind::V1,
    };
    let certificate = passivity_certificate(p, &eq, dc.eta(), dc.k_p, load.g_l);
    Ok(Some(Reference {
        equilibrium: eq,
        certificate,
        kind,
    }))
}
