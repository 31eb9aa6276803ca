//! Load model: a shunt admittance in parallel with a current source that
//! rotates at the converter frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentAb, CurrentDq, PlanarOperator, VoltageAb, VoltageDq};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadParams {
    /// Load conductance.
    pub g_l: f64,
    /// Load susceptance.
    pub b_l: f64,
    /// d component of the current source, constant in the converter frame.
    pub s_l_d: f64,
    /// q component of the current source.
    pub s_l_q: f64,
}

impl LoadParams {
    pub fn conductance(g_l: f64) -> Self {
        Self {
            g_l,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_l >= 0.0 && self.b_l >= 0.0) || !self.s_l_d.is_finite() || !self.s_l_q.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "load needs g_l >= 0, b_l >= 0 and finite source: {self:?}"
            )));
        }
        Ok(())
    }

    /// `Y_l = G_l·I + B_l·J`.
    pub fn admittance(&self) -> PlanarOperator {
        PlanarOperator::new(self.g_l, self.b_l)
    }

    pub fn s_l_dq(&self) -> CurrentDq {
        CurrentDq::new(self.s_l_d, self.s_l_q)
    }

    /// Load current in the converter frame, where the source is constant.
    pub fn output_dq(&self, v: VoltageDq) -> CurrentDq {
        (self.admittance() * v).cast() + self.s_l_dq()
    }
}

/// Stationary-frame load: `ṡ_l = ω J s_l`, `i_l = Y_l v + s_l`.
pub fn load_rhs_and_output(
    s_l: CurrentAb,
    omega: f64,
    v: VoltageAb,
    lp: &LoadParams,
) -> (CurrentAb, CurrentAb) {
    let ds = s_l.quarter_turn() * omega;
    let i_l = (lp.admittance() * v).cast() + s_l;
    (ds, i_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{inverse_park, park};

    #[test]
    fn zero_load_draws_nothing() {
        let (ds, i) = load_rhs_and_output(CurrentAb::ZERO, 314.0, VoltageAb::new(100.0, -50.0), &LoadParams::default());
        assert_eq!(ds, CurrentAb::ZERO);
        assert_eq!(i, CurrentAb::ZERO);
    }

    #[test]
    fn rated_conductance_power() {
        let lp = LoadParams::conductance(0.367);
        let v = VoltageDq::new(165.0, 0.0);
        let i = lp.output_dq(v);
        assert!((i.x1 - 60.555).abs() < 1e-9);
        assert!((i.dot(v) - 9991.575).abs() < 1e-6);
    }

    /// The rotating source integrated with θ̇ = ω stays constant in dq, and the
    /// stationary-frame output agrees with the dq formula along the way.
    #[test]
    fn source_is_constant_in_the_rotating_frame() {
        let lp = LoadParams {
            g_l: 0.3,
            b_l: 0.1,
            s_l_d: 12.0,
            s_l_q: -4.0,
        };
        let omega = 314.159;
        let dt = 1e-5;
        let mut theta: f64 = 0.7;
        let mut s = inverse_park(lp.s_l_dq(), theta);
        for k in 0..2000 {
            // Exact rotation step for the source (the linear ODE ṡ = ωJs).
            s = (PlanarOperator::rotation(omega * dt) * s.cast::<crate::frames::Unitless>()).cast();
            theta += omega * dt;
            let v_dq = VoltageDq::new(160.0 + 0.01 * k as f64, 5.0);
            let (_, i_ab) = load_rhs_and_output(s, omega, inverse_park(v_dq, theta), &lp);
            let expect = lp.output_dq(v_dq);
            assert!((park(i_ab, theta) - expect).norm() < 1e-9);
        }
    }
}
