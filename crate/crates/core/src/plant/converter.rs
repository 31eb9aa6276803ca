//! Averaged three-phase DC/AC converter.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::frames::{CurrentAb, CurrentDq, ModulationAb, VoltageAb, VoltageDq};

/// Circuit constants of the converter. All values in SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConverterParams {
    /// DC-side conductance.
    pub g_dc: f64,
    /// DC-link capacitance.
    pub c_dc: f64,
    /// Filter series resistance.
    pub r: f64,
    /// Filter inductance.
    pub l: f64,
    /// Output capacitance.
    pub c: f64,
    /// Output shunt conductance.
    pub g: f64,
}

impl Default for ConverterParams {
    /// The 10 kW design used in the bundled presets. `g` is not part of that
    /// design and defaults to a small positive value.
    fn default() -> Self {
        Self {
            g_dc: 0.1,
            c_dc: 0.001,
            r: 0.1,
            l: 5e-4,
            c: 1e-5,
            g: 0.01,
        }
    }
}

impl ConverterParams {
    /// Checks positivity. `g_dc` may be zero (lossless DC side).
    pub fn validate(&self) -> Result<()> {
        let Self { g_dc, c_dc, r, l, c, g } = *self;
        ensure_finite(&[g_dc, c_dc, r, l, c, g], "converter parameters")?;
        if g_dc < 0.0 || c_dc <= 0.0 || r <= 0.0 || l <= 0.0 || c <= 0.0 || g <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "converter parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Parameters seen by the DC equation when a derivative gain `k_d` acts on
    /// the DC voltage: the gain adds to the DC-link capacitance.
    pub fn with_derivative_gain(mut self, k_d: f64) -> Self {
        self.c_dc += k_d;
        self
    }
}

/// Converter state in stationary coordinates, including the oscillator angle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConverterStateAb {
    /// Oscillator angle, unwrapped.
    pub theta: f64,
    pub v_dc: f64,
    pub i: CurrentAb,
    pub v: VoltageAb,
}

/// Converter state in the frame of its own oscillator angle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConverterStateDq {
    pub v_dc: f64,
    pub i: CurrentDq,
    pub v: VoltageDq,
}

impl ConverterStateAb {
    fn ensure_finite(&self) -> Result<()> {
        ensure_finite(
            &[self.theta, self.v_dc, self.i.x1, self.i.x2, self.v.x1, self.v.x2],
            "converter state",
        )
    }

    /// Stored energy `½C_dc v_dc² + ½L‖i‖² + ½C‖v‖²`.
    pub fn energy(&self, p: &ConverterParams) -> f64 {
        0.5 * (p.c_dc * self.v_dc * self.v_dc + p.l * self.i.norm_sq() + p.c * self.v.norm_sq())
    }
}

impl ConverterStateDq {
    fn ensure_finite(&self) -> Result<()> {
        ensure_finite(
            &[self.v_dc, self.i.x1, self.i.x2, self.v.x1, self.v.x2],
            "converter state",
        )
    }
}

/// DC-side switching current `i_x = ½ mᵀ i`.
pub fn switch_current(m: ModulationAb, i: CurrentAb) -> f64 {
    0.5 * m.dot(i)
}

/// AC-side switching-node voltage `v_x = ½ m v_dc`.
pub fn switch_voltage(m: ModulationAb, v_dc: f64) -> VoltageAb {
    (m * (0.5 * v_dc)).cast()
}

/// Right-hand side of the averaged converter in αβ coordinates, augmented with
/// the oscillator `θ̇ = η v_dc`.
///
/// `m` is not clamped: an overmodulated input (`‖m‖ > 1`) is integrated as is
/// and flagged by the caller.
pub fn converter_rhs_ab(
    s: &ConverterStateAb,
    m: ModulationAb,
    i_dc: f64,
    i_l: CurrentAb,
    p: &ConverterParams,
    eta: f64,
) -> Result<ConverterStateAb> {
    s.ensure_finite()?;
    ensure_finite(&[m.x1, m.x2, i_dc, i_l.x1, i_l.x2, eta], "converter inputs")?;
    let i_x = switch_current(m, s.i);
    let v_x = switch_voltage(m, s.v_dc);
    Ok(ConverterStateAb {
        theta: eta * s.v_dc,
        v_dc: (-p.g_dc * s.v_dc + i_dc - i_x) / p.c_dc,
        i: ((v_x - s.v).cast() - s.i * p.r) * (1.0 / p.l),
        v: ((s.i - i_l).cast() - s.v * p.g) * (1.0 / p.c),
    })
}

/// Right-hand side of the matched converter in its own dq frame.
///
/// The modulation is `(μ/2)·e₂` in this frame, and rotation of the frame at
/// `ω = η v_dc` appears as the `ωL·J` and `ωC·J` coupling terms.
pub fn converter_rhs_dq(
    s: &ConverterStateDq,
    mu: f64,
    i_dc: f64,
    i_l: CurrentDq,
    p: &ConverterParams,
    eta: f64,
) -> Result<ConverterStateDq> {
    s.ensure_finite()?;
    ensure_finite(&[mu, i_dc, i_l.x1, i_l.x2, eta], "converter inputs")?;
    let omega = eta * s.v_dc;
    let half_mu = 0.5 * mu;
    let di = VoltageDq::new(0.0, half_mu * s.v_dc)
        - s.v
        - (s.i * p.r).cast()
        - (s.i.quarter_turn() * (omega * p.l)).cast();
    let dv = (s.i - i_l).cast() - s.v * p.g - s.v.quarter_turn() * (omega * p.c);
    Ok(ConverterStateDq {
        v_dc: (-p.g_dc * s.v_dc + i_dc - half_mu * s.i.x2) / p.c_dc,
        i: di.cast::<crate::frames::Amperes>() * (1.0 / p.l),
        v: dv * (1.0 / p.c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::matching_modulation;
    use crate::frames::{inverse_park, park};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng) -> ConverterStateAb {
        ConverterStateAb {
            theta: rng.random_range(-10.0..10.0),
            v_dc: rng.random_range(500.0..1500.0),
            i: CurrentAb::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)),
            v: VoltageAb::new(rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)),
        }
    }

    #[test]
    fn origin_is_equilibrium_of_unforced_system() {
        let d = converter_rhs_ab(
            &ConverterStateAb::default(),
            ModulationAb::ZERO,
            0.0,
            CurrentAb::ZERO,
            &ConverterParams::default(),
            0.3142,
        )
        .unwrap();
        assert_eq!(d, ConverterStateAb::default());
    }

    #[test]
    fn dc_discharge_rate() {
        let s = ConverterStateAb {
            v_dc: 1000.0,
            ..Default::default()
        };
        let d = converter_rhs_ab(&s, ModulationAb::ZERO, 0.0, CurrentAb::ZERO, &ConverterParams::default(), 0.3142)
            .unwrap();
        assert!((d.v_dc + 100_000.0).abs() < 1e-9);
        assert!((d.theta - 314.2).abs() < 1e-9);

        let sdq = ConverterStateDq {
            v_dc: 1000.0,
            ..Default::default()
        };
        let d = converter_rhs_dq(&sdq, 0.0, 0.0, CurrentDq::ZERO, &ConverterParams::default(), 0.3142).unwrap();
        assert!((d.v_dc + 100_000.0).abs() < 1e-9);
        assert_eq!(d.i, CurrentDq::ZERO);
        assert_eq!(d.v, VoltageDq::ZERO);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let s = ConverterStateAb {
            v_dc: f64::NAN,
            ..Default::default()
        };
        let r = converter_rhs_ab(&s, ModulationAb::ZERO, 0.0, CurrentAb::ZERO, &ConverterParams::default(), 0.3);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn lossless_switch_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = random_state(&mut rng);
            let m = ModulationAb::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let lhs = switch_current(m, s.i) * s.v_dc;
            let rhs = switch_voltage(m, s.v_dc).dot(s.i);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    /// Energy balance checked against a central finite difference of the
    /// stored energy along the vector field.
    #[test]
    fn energy_balance_matches_finite_difference() {
        let p = ConverterParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let s = random_state(&mut rng);
            let m = ModulationAb::new(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7));
            let i_dc = rng.random_range(0.0..200.0);
            let i_l = CurrentAb::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            let d = converter_rhs_ab(&s, m, i_dc, i_l, &p, 0.3142).unwrap();
            let h = 1e-7;
            let shift = |k: f64| ConverterStateAb {
                theta: s.theta + k * d.theta,
                v_dc: s.v_dc + k * d.v_dc,
                i: s.i + d.i * k,
                v: s.v + d.v * k,
            };
            let fd = (shift(h).energy(&p) - shift(-h).energy(&p)) / (2.0 * h);
            let supply = -p.g_dc * s.v_dc * s.v_dc - p.r * s.i.norm_sq() - p.g * s.v.norm_sq() + i_dc * s.v_dc
                - i_l.dot(s.v);
            assert!((fd - supply).abs() < 1e-6 * supply.abs().max(1e3), "fd {fd} vs {supply}");
        }
    }

    /// Rotating the αβ vector field into the oscillator frame gives the dq
    /// field plus the frame-rotation terms, pointwise.
    #[test]
    fn dq_field_is_rotated_ab_field() {
        let p = ConverterParams::default();
        let eta = 0.3142;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let s = random_state(&mut rng);
            let mu = rng.random_range(0.0..1.0);
            let i_dc = rng.random_range(0.0..200.0);
            let i_l_dq = CurrentDq::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            let m = matching_modulation(s.theta, mu);
            let d_ab = converter_rhs_ab(&s, m, i_dc, inverse_park(i_l_dq, s.theta), &p, eta).unwrap();
            let sdq = ConverterStateDq {
                v_dc: s.v_dc,
                i: park(s.i, s.theta),
                v: park(s.v, s.theta),
            };
            let d_dq = converter_rhs_dq(&sdq, mu, i_dc, i_l_dq, &p, eta).unwrap();
            let omega = eta * s.v_dc;
            // d/dt (R_θᵀ z) = R_θᵀ ż − ω J R_θᵀ z
            let di = park(d_ab.i, s.theta) - sdq.i.quarter_turn() * omega;
            let dv = park(d_ab.v, s.theta) - sdq.v.quarter_turn() * omega;
            assert!((di - d_dq.i).norm() < 1e-6 * di.norm().max(1.0));
            assert!((dv - d_dq.v).norm() < 1e-6 * dv.norm().max(1.0));
            assert!((d_ab.v_dc - d_dq.v_dc).abs() < 1e-9 * d_ab.v_dc.abs().max(1.0));
        }
    }
}
