//! Two converters feeding one load node through Π-line sections.
//!
//! Each converter's output capacitor is the sending-end shunt of its line; the
//! receiving-end shunts are lumped into `C_net`, which also carries the load
//! conductance `G_net`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::frames::{CurrentAb, VoltageAb};
use crate::plant::converter::ConverterParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PiNetworkParams {
    pub r_net: f64,
    pub l_net: f64,
    pub c_net: f64,
    /// Load conductance at the common node; stepped by events.
    pub g_net: f64,
}

impl Default for PiNetworkParams {
    fn default() -> Self {
        Self {
            r_net: 0.5,
            l_net: 2.5e-5,
            c_net: 2e-7,
            g_net: 0.367,
        }
    }
}

impl PiNetworkParams {
    pub fn validate(&self) -> Result<()> {
        let v = [self.r_net, self.l_net, self.c_net, self.g_net];
        ensure_finite(&v, "network parameters")?;
        if v.iter().any(|&x| x <= 0.0) {
            return Err(Error::InvalidConfig(format!("network parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PiNetworkState {
    pub i_net: [CurrentAb; 2],
    pub v_net: VoltageAb,
}

/// Terminal quantities of one converter as seen by the network.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Terminal {
    /// Filter inductor current flowing into the terminal capacitor.
    pub i: CurrentAb,
    /// Terminal capacitor voltage.
    pub v: VoltageAb,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PiNetworkDerivative {
    /// Terminal voltage derivatives, one per converter.
    pub dv: [VoltageAb; 2],
    pub net: PiNetworkState,
}

/// Capacitor and line dynamics of the interconnection. The converters'
/// own DC and inductor equations are handled by
/// [`converter_rhs_ab`](crate::plant::converter_rhs_ab) with `i_l = i_net,k`.
pub fn pi_network_rhs(
    terminals: &[Terminal; 2],
    net: &PiNetworkState,
    converters: &[ConverterParams; 2],
    p: &PiNetworkParams,
) -> Result<PiNetworkDerivative> {
    for t in terminals {
        ensure_finite(&[t.i.x1, t.i.x2, t.v.x1, t.v.x2], "converter terminal")?;
    }
    let n = net;
    ensure_finite(
        &[n.i_net[0].x1, n.i_net[0].x2, n.i_net[1].x1, n.i_net[1].x2, n.v_net.x1, n.v_net.x2],
        "network state",
    )?;
    let mut out = PiNetworkDerivative::default();
    for k in 0..2 {
        let (t, c) = (terminals[k], converters[k]);
        out.dv[k] = ((t.i - n.i_net[k]).cast() - t.v * c.g) * (1.0 / c.c);
        out.net.i_net[k] = ((t.v - n.v_net).cast() - n.i_net[k] * p.r_net) * (1.0 / p.l_net);
    }
    out.net.v_net = ((n.i_net[0] + n.i_net[1]).cast() - n.v_net * p.g_net) * (1.0 / p.c_net);
    Ok(out)
}

/// Energy stored in the terminal capacitors, line inductors and load-node capacitor.
pub fn network_energy(
    terminals: &[Terminal; 2],
    net: &PiNetworkState,
    converters: &[ConverterParams; 2],
    p: &PiNetworkParams,
) -> f64 {
    0.5 * (converters[0].c * terminals[0].v.norm_sq()
        + converters[1].c * terminals[1].v.norm_sq()
        + p.l_net * (net.i_net[0].norm_sq() + net.i_net[1].norm_sq())
        + p.c_net * net.v_net.norm_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{inverse_park, park, CurrentDq, PlanarOperator, VoltageDq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ([ConverterParams; 2], PiNetworkParams) {
        ([ConverterParams::default(); 2], PiNetworkParams::default())
    }

    #[test]
    fn zero_state_is_at_rest() {
        let (c, p) = params();
        let d = pi_network_rhs(&[Terminal::default(); 2], &PiNetworkState::default(), &c, &p).unwrap();
        assert_eq!(d, PiNetworkDerivative::default());
    }

    /// Stored energy changes by exactly the injected minus dissipated power.
    #[test]
    fn energy_audit() {
        let (c, p) = params();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut r = |s: f64| rng.random_range(-s..s);
        for _ in 0..200 {
            let t = [
                Terminal {
                    i: CurrentAb::new(r(50.0), r(50.0)),
                    v: VoltageAb::new(r(200.0), r(200.0)),
                },
                Terminal {
                    i: CurrentAb::new(r(50.0), r(50.0)),
                    v: VoltageAb::new(r(200.0), r(200.0)),
                },
            ];
            let n = PiNetworkState {
                i_net: [CurrentAb::new(r(50.0), r(50.0)), CurrentAb::new(r(50.0), r(50.0))],
                v_net: VoltageAb::new(r(200.0), r(200.0)),
            };
            let d = pi_network_rhs(&t, &n, &c, &p).unwrap();
            let h = 1e-9;
            let shift = |k: f64| {
                let tt = [
                    Terminal {
                        i: t[0].i,
                        v: t[0].v + d.dv[0] * k,
                    },
                    Terminal {
                        i: t[1].i,
                        v: t[1].v + d.dv[1] * k,
                    },
                ];
                let nn = PiNetworkState {
                    i_net: [n.i_net[0] + d.net.i_net[0] * k, n.i_net[1] + d.net.i_net[1] * k],
                    v_net: n.v_net + d.net.v_net * k,
                };
                network_energy(&tt, &nn, &c, &p)
            };
            let fd = (shift(h) - shift(-h)) / (2.0 * h);
            let injected = t[0].i.dot(t[0].v) + t[1].i.dot(t[1].v);
            let lost = c[0].g * t[0].v.norm_sq()
                + c[1].g * t[1].v.norm_sq()
                + p.r_net * (n.i_net[0].norm_sq() + n.i_net[1].norm_sq())
                + p.g_net * n.v_net.norm_sq();
            assert!((fd - (injected - lost)).abs() < 1e-5 * lost.max(1e3), "{fd} vs {}", injected - lost);
        }
    }

    /// Stiff 165 V sources at both terminals: the line currents settle to the
    /// phasor solution of `Z_net i_k + v_net = v_k`, `Y_node v_net = i_1 + i_2`.
    #[test]
    fn static_operating_point() {
        let (c, mut p) = params();
        p.g_net = 0.5;
        let omega = 100.0 * std::f64::consts::PI;
        let z = PlanarOperator::impedance(p.r_net, p.l_net, omega);
        let y = PlanarOperator::admittance(p.g_net, p.c_net, omega);
        // v_net = (Y + 2 Z⁻¹)⁻¹ Z⁻¹ (v_1 + v_2), i_k = Z⁻¹(v_k − v_net)
        let vs = [VoltageDq::new(165.0, 0.0), VoltageDq::new(165.0, 0.0)];
        let zi = z.inv().unwrap();
        let v_net = (y + zi * 2.0).inv().unwrap() * zi * (vs[0] + vs[1]);
        let i_exp: [CurrentDq; 2] = [(zi * (vs[0] - v_net)).cast(), (zi * (vs[1] - v_net)).cast()];

        let dt = 2.5e-8;
        let mut n = PiNetworkState::default();
        let steps = (0.005 / dt) as usize;
        let mut t = 0.0;
        for _ in 0..steps {
            // midpoint rule on the network only; terminal voltages are imposed
            let term = [
                Terminal {
                    i: CurrentAb::ZERO,
                    v: inverse_park(vs[0], omega * t),
                },
                Terminal {
                    i: CurrentAb::ZERO,
                    v: inverse_park(vs[1], omega * t),
                },
            ];
            let f = |n: &PiNetworkState| pi_network_rhs(&term, n, &c, &p).unwrap().net;
            let k1 = f(&n);
            let mid = PiNetworkState {
                i_net: [n.i_net[0] + k1.i_net[0] * (0.5 * dt), n.i_net[1] + k1.i_net[1] * (0.5 * dt)],
                v_net: n.v_net + k1.v_net * (0.5 * dt),
            };
            let k2 = f(&mid);
            n.i_net[0] += k2.i_net[0] * dt;
            n.i_net[1] += k2.i_net[1] * dt;
            n.v_net += k2.v_net * dt;
            t += dt;
        }
        for k in 0..2 {
            let got = park(n.i_net[k], omega * t);
            let rel = (got - i_exp[k]).norm() / i_exp[k].norm();
            assert!(rel < 1e-3, "line {k}: {got:?} vs {:?}", i_exp[k]);
        }
    }
}
