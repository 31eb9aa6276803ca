//! Synchronous machine and the equivalent machine of the matched converter.

use crate::error::{ensure_finite, Error, Result};
use crate::frames::{CurrentAb, ModulationAb, VoltageAb};
use crate::plant::converter::ConverterParams;

/// Single-pole-pair, non-salient synchronous machine with constant
/// excitation and a capacitor at its terminals.
///
/// The mutual inductance and field current only ever appear as their product,
/// so they are stored as one signed value `lm_if`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmParams {
    /// Rotor inertia `M`.
    pub m: f64,
    /// Rotor damping `D`.
    pub d: f64,
    /// Mechanical torque `τ_m`.
    pub tau_m: f64,
    /// `L_m · i_f`.
    pub lm_if: f64,
    pub l_s: f64,
    pub r_s: f64,
    pub c: f64,
    pub g: f64,
}

impl SmParams {
    pub fn validate(&self) -> Result<()> {
        let v = [self.m, self.d, self.tau_m, self.lm_if, self.l_s, self.r_s, self.c, self.g];
        ensure_finite(&v, "machine parameters")?;
        if self.m <= 0.0 || self.d < 0.0 || self.l_s <= 0.0 || self.r_s <= 0.0 || self.c <= 0.0 || self.g <= 0.0 {
            return Err(Error::InvalidConfig(format!("machine parameters must be positive: {self:?}")));
        }
        Ok(())
    }

    /// The machine a matched converter behaves like: inertia `C_dc/η²`,
    /// damping `G_dc/η²`, torque `i_dc/η` and `L_m i_f = −μ/(2η)`.
    pub fn matched(p: &ConverterParams, eta: f64, mu: f64, i_dc: f64) -> Self {
        let eta2 = eta * eta;
        Self {
            m: p.c_dc / eta2,
            d: p.g_dc / eta2,
            tau_m: i_dc / eta,
            lm_if: -mu / (2.0 * eta),
            l_s: p.l,
            r_s: p.r,
            c: p.c,
            g: p.g,
        }
    }
}

/// Rotor angle and speed plus stator current and terminal voltage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SmState {
    pub theta: f64,
    pub omega: f64,
    pub i: CurrentAb,
    pub v: VoltageAb,
}

impl SmState {
    /// `½Mω² + ½L_s‖i‖² + ½C‖v‖²`.
    pub fn energy(&self, p: &SmParams) -> f64 {
        0.5 * (p.m * self.omega * self.omega + p.l_s * self.i.norm_sq() + p.c * self.v.norm_sq())
    }

    fn ensure_finite(&self) -> Result<()> {
        ensure_finite(
            &[self.theta, self.omega, self.i.x1, self.i.x2, self.v.x1, self.v.x2],
            "machine state",
        )
    }
}

fn rotor_direction(theta: f64) -> ModulationAb {
    let (s, c) = theta.sin_cos();
    ModulationAb::new(-s, c)
}

/// Electrical torque `L_m i_f [−sin θ, cos θ]ᵀ i`, entering the swing equation with a plus sign.
pub fn electrical_torque(theta: f64, i: CurrentAb, p: &SmParams) -> f64 {
    p.lm_if * rotor_direction(theta).dot(i)
}

/// EMF term `−L_m i_f [−sin θ, cos θ] ω` of the stator equation.
pub fn emf(theta: f64, omega: f64, p: &SmParams) -> VoltageAb {
    (rotor_direction(theta) * (-p.lm_if * omega)).cast()
}

pub fn sm_rhs(s: &SmState, i_l: CurrentAb, p: &SmParams) -> Result<SmState> {
    s.ensure_finite()?;
    ensure_finite(&[i_l.x1, i_l.x2], "machine load current")?;
    Ok(SmState {
        theta: s.omega,
        omega: (-p.d * s.omega + p.tau_m + electrical_torque(s.theta, s.i, p)) / p.m,
        i: ((emf(s.theta, s.omega, p) - s.v).cast() - s.i * p.r_s) * (1.0 / p.l_s),
        v: ((s.i - i_l).cast() - s.v * p.g) * (1.0 / p.c),
    })
}

/// The matched converter written in machine variables, `ω = η v_dc`.
///
/// Algebraically the same vector field as
/// [`converter_rhs_ab`](crate::plant::converter_rhs_ab) under matching
/// modulation; kept separate so the identity can be checked.
pub fn equivalent_sm_rhs(
    s: &SmState,
    i_dc: f64,
    i_l: CurrentAb,
    p: &ConverterParams,
    eta: f64,
    mu: f64,
) -> Result<SmState> {
    s.ensure_finite()?;
    ensure_finite(&[i_dc, i_l.x1, i_l.x2, eta, mu], "equivalent machine inputs")?;
    let m = rotor_direction(s.theta) * mu;
    let eta2 = eta * eta;
    let inertia = p.c_dc / eta2;
    let damping = p.g_dc / eta2;
    let torque_e = m.dot(s.i) / (2.0 * eta);
    let emf: VoltageAb = (m * (s.omega / (2.0 * eta))).cast();
    Ok(SmState {
        theta: s.omega,
        omega: (-damping * s.omega + i_dc / eta - torque_e) / inertia,
        i: ((emf - s.v).cast() - s.i * p.r) * (1.0 / p.l),
        v: ((s.i - i_l).cast() - s.v * p.g) * (1.0 / p.c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::matching_modulation;
    use crate::plant::converter::{converter_rhs_ab, ConverterStateAb};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ETA: f64 = 0.314_159_265_358_979_3;

    #[test]
    fn origin_is_equilibrium() {
        let p = SmParams::matched(&ConverterParams::default(), ETA, 0.33, 0.0);
        let d = sm_rhs(&SmState::default(), CurrentAb::ZERO, &p).unwrap();
        assert_eq!(d, SmState::default());
    }

    #[test]
    fn matched_constants() {
        let p = ConverterParams::default();
        let sm = SmParams::matched(&p, 0.3142, 0.33, 100.0);
        assert!((sm.m - 0.010_130).abs() < 1e-6, "{}", sm.m);
        assert!((sm.tau_m - 318.27).abs() < 0.01, "{}", sm.tau_m);
        assert!(sm.lm_if < 0.0);
    }

    #[test]
    fn equivalent_machine_is_the_converter_field() {
        let p = ConverterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let cs = ConverterStateAb {
                theta: rng.random_range(-20.0..20.0),
                v_dc: rng.random_range(0.0..2000.0),
                i: CurrentAb::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)),
                v: VoltageAb::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)),
            };
            let mu = rng.random_range(0.0..1.0);
            let i_dc = rng.random_range(-200.0..200.0);
            let i_l = CurrentAb::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0));
            let dc = converter_rhs_ab(&cs, matching_modulation(cs.theta, mu), i_dc, i_l, &p, ETA).unwrap();
            let ss = SmState {
                theta: cs.theta,
                omega: ETA * cs.v_dc,
                i: cs.i,
                v: cs.v,
            };
            let ds = equivalent_sm_rhs(&ss, i_dc, i_l, &p, ETA, mu).unwrap();
            // Rounding is bounded relative to the size of the summed terms, not the result.
            let m = matching_modulation(cs.theta, mu);
            let dc_scale = ETA * (p.g_dc * cs.v_dc.abs() + i_dc.abs() + 0.5 * m.dot(cs.i).abs()) / p.c_dc;
            let i_scale = (0.5 * mu * cs.v_dc.abs() + cs.v.norm() + p.r * cs.i.norm()) / p.l;
            let v_scale = (cs.i.norm() + i_l.norm() + p.g * cs.v.norm()) / p.c;
            assert!((ds.theta - dc.theta).abs() <= 1e-12 * dc.theta.abs().max(1.0));
            assert!((ds.omega - ETA * dc.v_dc).abs() <= 1e-12 * dc_scale.max(1.0));
            assert!((ds.i - dc.i).norm() <= 1e-12 * i_scale.max(1.0));
            assert!((ds.v - dc.v).norm() <= 1e-12 * v_scale.max(1.0));

            // The generic machine with matched parameters is the same field too.
            let sm = SmParams::matched(&p, ETA, mu, i_dc);
            let dm = sm_rhs(&ss, i_l, &sm).unwrap();
            assert!((dm.omega - ds.omega).abs() <= 1e-9 * ds.omega.abs().max(1.0));
            assert!((dm.i - ds.i).norm() <= 1e-9 * ds.i.norm().max(1.0));
        }
    }

    #[test]
    fn machine_power_balance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = SmParams {
            m: 2.0,
            d: 0.5,
            tau_m: 3.0,
            lm_if: -1.2,
            l_s: 0.01,
            r_s: 0.2,
            c: 1e-3,
            g: 0.05,
        };
        p.validate().unwrap();
        for _ in 0..200 {
            let s = SmState {
                theta: rng.random_range(-5.0..5.0),
                omega: rng.random_range(-400.0..400.0),
                i: CurrentAb::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)),
                v: VoltageAb::new(rng.random_range(-200.0..200.0), rng.random_range(-200.0..200.0)),
            };
            let i_l = CurrentAb::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let d = sm_rhs(&s, i_l, &p).unwrap();
            let h = 1e-7;
            let shift = |k: f64| SmState {
                theta: s.theta + k * d.theta,
                omega: s.omega + k * d.omega,
                i: s.i + d.i * k,
                v: s.v + d.v * k,
            };
            let fd = (shift(h).energy(&p) - shift(-h).energy(&p)) / (2.0 * h);
            let supply = p.tau_m * s.omega - p.d * s.omega * s.omega - p.r_s * s.i.norm_sq() - p.g * s.v.norm_sq()
                - i_l.dot(s.v);
            assert!((fd - supply).abs() < 1e-6 * supply.abs().max(1e3), "{fd} vs {supply}");
        }
    }
}
