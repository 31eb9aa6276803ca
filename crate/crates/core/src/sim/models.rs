//! Closed-loop vector fields assembled from plant and controller.

use crate::analysis::DqSnapshot;
use crate::control::AmplitudeConfig;
use crate::error::{Error, Result};
use crate::frames::{wrap_angle, AlphaBeta, CurrentAb, CurrentDq, Dq, Frame, FrameVector, Unit, VoltageAb, VoltageDq};
use crate::plant::{
    converter_rhs_ab, converter_rhs_dq, pi_network_rhs, sm_rhs, ConverterParams, ConverterStateAb, ConverterStateDq,
    LoadParams, PiNetworkParams, PiNetworkState, SmParams, SmState, Terminal,
};
use crate::sim::integrator::OdeSystem;
use crate::sim::law::{single_reference, Law, LawOutput, Measurement, Reference};
use crate::sim::scenario::{Event, EventAction, Scenario};

/// Per-step diagnostics evaluated on accepted states.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct StepMonitor {
    pub storage: f64,
    pub clipped: bool,
    /// `‖m‖ > 1` reaching the plant.
    pub overmodulated: bool,
}

pub(crate) trait Model<const N: usize>: OdeSystem<N> {
    fn columns(&self) -> Vec<String>;
    fn initial_state(&self) -> [f64; N];
    /// Latches the controller outputs at `x` for a sample-and-hold period.
    fn hold(&mut self, x: &[f64; N]) -> Result<()>;
    fn monitor(&self, x: &[f64; N]) -> Result<StepMonitor>;
    fn observe(&self, t: f64, x: &[f64; N], storage: f64, row: &mut Vec<f64>) -> Result<()>;
    fn apply_event(&mut self, ev: &Event, x: &mut [f64; N]) -> Result<()>;
    /// Recomputes the reference equilibrium for the current parameters.
    fn refresh_reference(&mut self) -> Result<Option<Reference>>;
}

/// Columns shared by every single-converter record, without `t`.
pub const CONVERTER_COLUMNS: [&str; 16] = [
    "v_dc",
    "theta",
    "omega",
    "i_alpha",
    "i_beta",
    "v_alpha",
    "v_beta",
    "i_d",
    "i_q",
    "v_d",
    "v_q",
    "mu",
    "i_dc_cmd",
    "v_ac_amplitude",
    "P_x",
    "P_l",
];

fn single_columns() -> Vec<String> {
    std::iter::once("t")
        .chain(CONVERTER_COLUMNS)
        .chain(std::iter::once("V_storage"))
        .map(String::from)
        .collect()
}

/// `R_θᵀ z` with a precomputed `(sin θ, cos θ)`.
#[inline]
fn to_dq<U: Unit>(z: FrameVector<AlphaBeta, U>, (s, c): (f64, f64)) -> FrameVector<Dq, U> {
    FrameVector::new(c * z.x1 + s * z.x2, -s * z.x1 + c * z.x2)
}

#[inline]
fn to_ab<U: Unit>(z: FrameVector<Dq, U>, (s, c): (f64, f64)) -> FrameVector<AlphaBeta, U> {
    FrameVector::new(c * z.x1 - s * z.x2, s * z.x1 + c * z.x2)
}

fn v2<F: Frame, U: Unit>(x: &[f64], k: usize) -> FrameVector<F, U> {
    FrameVector::new(x[k], x[k + 1])
}

fn put<F: Frame, U: Unit>(dx: &mut [f64], k: usize, v: FrameVector<F, U>) {
    dx[k] = v.x1;
    dx[k + 1] = v.x2;
}

/// Row values of one converter, in [`CONVERTER_COLUMNS`] order.
fn converter_row(
    row: &mut Vec<f64>,
    theta: f64,
    v_dc: f64,
    eta: f64,
    i_ab: CurrentAb,
    v_ab: VoltageAb,
    i_l_ab: CurrentAb,
    out: &LawOutput,
) {
    let sc = theta.sin_cos();
    let (i_dq, v_dq) = (to_dq(i_ab, sc), to_dq(v_ab, sc));
    let mu = out.mu.mu;
    row.extend_from_slice(&[
        v_dc,
        wrap_angle(theta),
        eta * v_dc,
        i_ab.x1,
        i_ab.x2,
        v_ab.x1,
        v_ab.x2,
        i_dq.x1,
        i_dq.x2,
        v_dq.x1,
        v_dq.x2,
        mu,
        out.i_dc,
        v_ab.norm(),
        0.5 * mu * v_dc * i_dq.x2,
        i_l_ab.dot(v_ab),
    ]);
}

fn unknown_target(ev: &Event) -> Error {
    Error::InvalidConfig(format!("event target {:?} does not apply to this scenario", ev.target))
}

/// Applies a load event to a [`LoadParams`]; `s` receives the new source in dq.
fn load_event(load: &mut LoadParams, ev: &Event) -> Result<()> {
    match ev.action {
        EventAction::SetLoadConductance => load.g_l = ev.value,
        EventAction::ScaleLoadConductance => load.g_l *= ev.value,
        EventAction::SetSL => match ev.target_parts()? {
            ("d", _) => load.s_l_d = ev.value,
            ("q", _) => load.s_l_q = ev.value,
            _ => return Err(unknown_target(ev)),
        },
        _ => unreachable!("not a load event"),
    }
    load.validate()
}

fn law_event(law: &mut Law, ev: &Event) -> Result<()> {
    let (name, _) = ev.target_parts()?;
    if !law.set(name, ev.value) {
        return Err(unknown_target(ev));
    }
    law.dc.validate()?;
    law.amplitude.validate()
}

// ---------------------------------------------------------------------------
// Single converter, stationary frame: [θ, v_dc, i, v, s_l, ξ, ν]

pub(crate) struct SingleAb {
    p: ConverterParams,
    law: Law,
    load: LoadParams,
    eta: f64,
    v_dc_init: f64,
    held: Option<LawOutput>,
    reference: Option<Reference>,
}

impl SingleAb {
    pub fn new(sc: &Scenario) -> Self {
        Self {
            p: sc.converter,
            law: Law::new(&sc.converter, sc.dc, sc.amplitude),
            load: sc.load,
            eta: sc.dc.eta(),
            v_dc_init: sc.v_dc_init,
            held: None,
            reference: None,
        }
    }

    fn measure(&self, x: &[f64; 10], sc: (f64, f64)) -> (Measurement, CurrentAb, DqSnapshot) {
        let (i, v, s): (CurrentAb, VoltageAb, CurrentAb) = (v2(x, 2), v2(x, 4), v2(x, 6));
        let i_l = (self.load.admittance() * v).cast() + s;
        let (i_dq, v_dq) = (to_dq(i, sc), to_dq(v, sc));
        let m = Measurement {
            v_dc: x[1],
            i_q: i_dq.x2,
            i_l: to_dq(i_l, sc),
            v: v_dq,
            xi: x[8],
            nu: x[9],
        };
        let snap = DqSnapshot {
            v_dc: x[1],
            i: i_dq,
            v: v_dq,
            xi: x[8],
            nu: x[9],
        };
        (m, i_l, snap)
    }

    fn law_at(&self, m: &Measurement) -> Result<LawOutput> {
        match self.held {
            Some(o) => Ok(o),
            None => self.law.eval(m),
        }
    }
}

impl OdeSystem<10> for SingleAb {
    fn rhs(&self, _t: f64, x: &[f64; 10], dx: &mut [f64; 10]) -> Result<()> {
        let sc = x[0].sin_cos();
        let (m, i_l, _) = self.measure(x, sc);
        let out = self.law_at(&m)?;
        let s = ConverterStateAb {
            theta: x[0],
            v_dc: x[1],
            i: v2(x, 2),
            v: v2(x, 4),
        };
        let mu = out.mu.mu;
        let modulation = crate::frames::ModulationAb::new(-mu * sc.0, mu * sc.1);
        let p = self.p.with_derivative_gain(self.law.dc.k_d);
        let d = converter_rhs_ab(&s, modulation, out.i_dc, i_l, &p, self.eta)?;
        let s_l: CurrentAb = v2(x, 6);
        dx[0] = d.theta;
        dx[1] = d.v_dc;
        put(dx, 2, d.i);
        put(dx, 4, d.v);
        put(dx, 6, s_l.quarter_turn() * (self.eta * x[1]));
        dx[8] = out.dxi;
        dx[9] = out.dnu;
        Ok(())
    }
}

impl Model<10> for SingleAb {
    fn columns(&self) -> Vec<String> {
        single_columns()
    }

    fn initial_state(&self) -> [f64; 10] {
        let mut x = [0.0; 10];
        x[1] = self.v_dc_init;
        // θ(0) = 0, so the stationary source equals its dq value
        x[6] = self.load.s_l_d;
        x[7] = self.load.s_l_q;
        x
    }

    fn hold(&mut self, x: &[f64; 10]) -> Result<()> {
        self.held = None;
        let (m, _, _) = self.measure(x, x[0].sin_cos());
        self.held = Some(self.law.eval(&m)?);
        Ok(())
    }

    fn monitor(&self, x: &[f64; 10]) -> Result<StepMonitor> {
        let (m, _, snap) = self.measure(x, x[0].sin_cos());
        let out = self.law_at(&m)?;
        Ok(StepMonitor {
            storage: self.reference.map_or(f64::NAN, |r| r.storage(&snap, &self.p, &self.law)),
            clipped: out.mu.is_clipped(),
            overmodulated: out.mu.mu > 1.0,
        })
    }

    fn observe(&self, t: f64, x: &[f64; 10], storage: f64, row: &mut Vec<f64>) -> Result<()> {
        let (m, i_l, _) = self.measure(x, x[0].sin_cos());
        let out = self.law_at(&m)?;
        row.push(t);
        converter_row(row, x[0], x[1], self.eta, v2(x, 2), v2(x, 4), i_l, &out);
        row.push(storage);
        Ok(())
    }

    fn apply_event(&mut self, ev: &Event, x: &mut [f64; 10]) -> Result<()> {
        match ev.action {
            EventAction::SetLoadConductance | EventAction::ScaleLoadConductance => load_event(&mut self.load, ev),
            EventAction::SetSL => {
                load_event(&mut self.load, ev)?;
                let s = to_ab(self.load.s_l_dq(), x[0].sin_cos());
                put(x, 6, s);
                Ok(())
            }
            EventAction::SetGain | EventAction::SetReference => law_event(&mut self.law, ev),
        }
    }

    fn refresh_reference(&mut self) -> Result<Option<Reference>> {
        self.reference = None;
        let r = single_reference(&self.p, &self.law, &self.load)?;
        self.reference = r;
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Single converter, own rotating frame: [θ, v_dc, i_dq, v_dq, ξ, ν]

pub(crate) struct SingleDq {
    p: ConverterParams,
    law: Law,
    load: LoadParams,
    eta: f64,
    v_dc_init: f64,
    held: Option<LawOutput>,
    reference: Option<Reference>,
}

impl SingleDq {
    pub fn new(sc: &Scenario) -> Self {
        Self {
            p: sc.converter,
            law: Law::new(&sc.converter, sc.dc, sc.amplitude),
            load: sc.load,
            eta: sc.dc.eta(),
            v_dc_init: sc.v_dc_init,
            held: None,
            reference: None,
        }
    }

    fn measure(&self, x: &[f64; 8]) -> (Measurement, CurrentDq, DqSnapshot) {
        let (i, v): (CurrentDq, VoltageDq) = (v2(x, 2), v2(x, 4));
        let i_l = self.load.output_dq(v);
        let m = Measurement {
            v_dc: x[1],
            i_q: i.x2,
            i_l,
            v,
            xi: x[6],
            nu: x[7],
        };
        let snap = DqSnapshot {
            v_dc: x[1],
            i,
            v,
            xi: x[6],
            nu: x[7],
        };
        (m, i_l, snap)
    }

    fn law_at(&self, m: &Measurement) -> Result<LawOutput> {
        match self.held {
            Some(o) => Ok(o),
            None => self.law.eval(m),
        }
    }
}

impl OdeSystem<8> for SingleDq {
    fn rhs(&self, _t: f64, x: &[f64; 8], dx: &mut [f64; 8]) -> Result<()> {
        let (m, i_l, _) = self.measure(x);
        let out = self.law_at(&m)?;
        let s = ConverterStateDq {
            v_dc: x[1],
            i: v2(x, 2),
            v: v2(x, 4),
        };
        let p = self.p.with_derivative_gain(self.law.dc.k_d);
        let d = converter_rhs_dq(&s, out.mu.mu, out.i_dc, i_l, &p, self.eta)?;
        dx[0] = self.eta * x[1];
        dx[1] = d.v_dc;
        put(dx, 2, d.i);
        put(dx, 4, d.v);
        dx[6] = out.dxi;
        dx[7] = out.dnu;
        Ok(())
    }
}

impl Model<8> for SingleDq {
    fn columns(&self) -> Vec<String> {
        single_columns()
    }

    fn initial_state(&self) -> [f64; 8] {
        let mut x = [0.0; 8];
        x[1] = self.v_dc_init;
        x
    }

    fn hold(&mut self, x: &[f64; 8]) -> Result<()> {
        self.held = None;
        let (m, _, _) = self.measure(x);
        self.held = Some(self.law.eval(&m)?);
        Ok(())
    }

    fn monitor(&self, x: &[f64; 8]) -> Result<StepMonitor> {
        let (m, _, snap) = self.measure(x);
        let out = self.law_at(&m)?;
        Ok(StepMonitor {
            storage: self.reference.map_or(f64::NAN, |r| r.storage(&snap, &self.p, &self.law)),
            clipped: out.mu.is_clipped(),
            overmodulated: out.mu.mu > 1.0,
        })
    }

    fn observe(&self, t: f64, x: &[f64; 8], storage: f64, row: &mut Vec<f64>) -> Result<()> {
        let (m, i_l, _) = self.measure(x);
        let out = self.law_at(&m)?;
        let sc = x[0].sin_cos();
        row.push(t);
        converter_row(
            row,
            x[0],
            x[1],
            self.eta,
            to_ab(v2::<Dq, _>(x, 2), sc),
            to_ab(v2::<Dq, _>(x, 4), sc),
            to_ab(i_l, sc),
            &out,
        );
        row.push(storage);
        Ok(())
    }

    fn apply_event(&mut self, ev: &Event, _x: &mut [f64; 8]) -> Result<()> {
        match ev.action {
            EventAction::SetLoadConductance | EventAction::ScaleLoadConductance | EventAction::SetSL => {
                load_event(&mut self.load, ev)
            }
            EventAction::SetGain | EventAction::SetReference => law_event(&mut self.law, ev),
        }
    }

    fn refresh_reference(&mut self) -> Result<Option<Reference>> {
        self.reference = None;
        let r = single_reference(&self.p, &self.law, &self.load)?;
        self.reference = r;
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Matched converter next to its equivalent machine:
// [θ, v_dc, i, v | θ_m, ω, i_s, v_s]

pub(crate) struct MatchingPair {
    p: ConverterParams,
    law: Law,
    load: LoadParams,
    eta: f64,
    mu: f64,
    sm: SmParams,
    v_dc_init: f64,
    reference: Option<Reference>,
}

/// Extra columns of the machine comparison.
pub const SM_COLUMNS: [&str; 7] = ["sm_theta", "sm_omega", "sm_i_alpha", "sm_i_beta", "sm_v_alpha", "sm_v_beta", "match_error"];

impl MatchingPair {
    pub fn new(sc: &Scenario) -> Result<Self> {
        let AmplitudeConfig::Constant { mu } = sc.amplitude else {
            return Err(Error::InvalidConfig("machine comparison needs constant mu".into()));
        };
        let eta = sc.dc.eta();
        let mut s = Self {
            p: sc.converter,
            law: Law::new(&sc.converter, sc.dc, sc.amplitude),
            load: sc.load,
            eta,
            mu,
            sm: SmParams::matched(&sc.converter, eta, mu, 0.0),
            v_dc_init: sc.v_dc_init,
            reference: None,
        };
        s.rebuild_machine();
        Ok(s)
    }

    /// The proportional DC source acts on the machine as a governor: it adds
    /// `K_p/η²` of damping and sets the torque to `i_0/η`.
    fn rebuild_machine(&mut self) {
        let mut q = self.p;
        q.g_dc += self.law.dc.k_p;
        self.sm = SmParams::matched(&q, self.eta, self.mu, self.law.dc.i_0());
    }

    /// Largest mapped-state difference: angles, speed in both units, currents, voltages.
    pub fn match_error(&self, x: &[f64; 12]) -> f64 {
        let e = [
            x[0] - x[6],
            self.eta * x[1] - x[7],
            x[1] - x[7] / self.eta,
            x[2] - x[8],
            x[3] - x[9],
            x[4] - x[10],
            x[5] - x[11],
        ];
        e.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn dc_out(&self, v_dc: f64) -> LawOutput {
        LawOutput {
            mu: crate::control::Modulation { mu: self.mu, raw: self.mu },
            i_dc: crate::control::dc_p_control(v_dc, &self.law.dc),
            dxi: 0.0,
            dnu: 0.0,
        }
    }
}

impl OdeSystem<12> for MatchingPair {
    fn rhs(&self, _t: f64, x: &[f64; 12], dx: &mut [f64; 12]) -> Result<()> {
        let c = ConverterStateAb {
            theta: x[0],
            v_dc: x[1],
            i: v2(x, 2),
            v: v2(x, 4),
        };
        let i_l = (self.load.admittance() * c.v).cast();
        let m = crate::control::matching_modulation(x[0], self.mu);
        let d = converter_rhs_ab(&c, m, self.dc_out(x[1]).i_dc, i_l, &self.p, self.eta)?;
        let s = SmState {
            theta: x[6],
            omega: x[7],
            i: v2(x, 8),
            v: v2(x, 10),
        };
        let i_ls = (self.load.admittance() * s.v).cast();
        let ds = sm_rhs(&s, i_ls, &self.sm)?;
        dx[0] = d.theta;
        dx[1] = d.v_dc;
        put(dx, 2, d.i);
        put(dx, 4, d.v);
        dx[6] = ds.theta;
        dx[7] = ds.omega;
        put(dx, 8, ds.i);
        put(dx, 10, ds.v);
        Ok(())
    }
}

impl Model<12> for MatchingPair {
    fn columns(&self) -> Vec<String> {
        let mut c = single_columns();
        c.extend(SM_COLUMNS.iter().map(|s| s.to_string()));
        c
    }

    fn initial_state(&self) -> [f64; 12] {
        let mut x = [0.0; 12];
        x[1] = self.v_dc_init;
        x[7] = self.eta * self.v_dc_init;
        x
    }

    fn hold(&mut self, _x: &[f64; 12]) -> Result<()> {
        Err(Error::InvalidConfig("sample-and-hold is not supported by the machine comparison".into()))
    }

    fn monitor(&self, x: &[f64; 12]) -> Result<StepMonitor> {
        let storage = match self.reference {
            Some(r) => {
                let sc = x[0].sin_cos();
                let snap = DqSnapshot {
                    v_dc: x[1],
                    i: to_dq(v2::<AlphaBeta, _>(x, 2), sc),
                    v: to_dq(v2::<AlphaBeta, _>(x, 4), sc),
                    xi: 0.0,
                    nu: 0.0,
                };
                r.storage(&snap, &self.p, &self.law)
            }
            None => f64::NAN,
        };
        Ok(StepMonitor {
            storage,
            clipped: false,
            overmodulated: self.mu > 1.0,
        })
    }

    fn observe(&self, t: f64, x: &[f64; 12], storage: f64, row: &mut Vec<f64>) -> Result<()> {
        let v: VoltageAb = v2(x, 4);
        let i_l = (self.load.admittance() * v).cast();
        row.push(t);
        converter_row(row, x[0], x[1], self.eta, v2(x, 2), v, i_l, &self.dc_out(x[1]));
        row.push(storage);
        row.extend_from_slice(&[wrap_angle(x[6]), x[7], x[8], x[9], x[10], x[11], self.match_error(x)]);
        Ok(())
    }

    fn apply_event(&mut self, ev: &Event, _x: &mut [f64; 12]) -> Result<()> {
        match ev.action {
            EventAction::SetLoadConductance | EventAction::ScaleLoadConductance => load_event(&mut self.load, ev)?,
            EventAction::SetSL => return Err(unknown_target(ev)),
            EventAction::SetGain | EventAction::SetReference => {
                law_event(&mut self.law, ev)?;
                if let AmplitudeConfig::Constant { mu } = self.law.amplitude {
                    self.mu = mu;
                }
                if !self.law.dc.is_proportional() {
                    return Err(Error::InvalidConfig("machine comparison needs k_i = k_d = 0".into()));
                }
                self.rebuild_machine();
            }
        }
        Ok(())
    }

    fn refresh_reference(&mut self) -> Result<Option<Reference>> {
        self.reference = None;
        let r = single_reference(&self.p, &self.law, &self.load)?;
        self.reference = r;
        Ok(r)
    }
}

// ---------------------------------------------------------------------------
// Two converters and the Π network:
// [θ, v_dc, i, v, ξ, ν]₁ [θ, v_dc, i, v, ξ, ν]₂ i_net,1 i_net,2 v_net

pub(crate) const NET_N: usize = 22;
const NET_OFF: usize = 16;

pub(crate) struct Network {
    p: [ConverterParams; 2],
    laws: [Law; 2],
    net: PiNetworkParams,
    eta: f64,
    v_dc_init: f64,
    held: [Option<LawOutput>; 2],
}

impl Network {
    pub fn new(sc: &Scenario) -> Result<Self> {
        let spec = sc.network.ok_or_else(|| Error::InvalidConfig("missing network section".into()))?;
        let gains = crate::analysis::power_sharing_design(spec.rho, sc.dc.k_p, sc.dc.i_dc_ref, sc.converter.g_dc)?;
        let dc2 = crate::control::DcControlConfig {
            k_p: gains.k_p[1],
            i_dc_ref: gains.i_dc_ref[1],
            ..sc.dc
        };
        Ok(Self {
            p: [sc.converter; 2],
            laws: [
                Law::new(&sc.converter, sc.dc, sc.amplitude),
                Law::new(&sc.converter, dc2, sc.amplitude),
            ],
            net: spec.params,
            eta: sc.dc.eta(),
            v_dc_init: sc.v_dc_init,
            held: [None; 2],
        })
    }

    fn measure(&self, x: &[f64; NET_N], k: usize, sc: (f64, f64)) -> Measurement {
        let o = 8 * k;
        let i_net: CurrentAb = v2(x, NET_OFF + 2 * k);
        Measurement {
            v_dc: x[o + 1],
            i_q: to_dq(v2::<AlphaBeta, crate::frames::Amperes>(x, o + 2), sc).x2,
            i_l: to_dq(i_net, sc),
            v: to_dq(v2::<AlphaBeta, crate::frames::Volts>(x, o + 4), sc),
            xi: x[o + 6],
            nu: x[o + 7],
        }
    }

    fn law_at(&self, k: usize, m: &Measurement) -> Result<LawOutput> {
        match self.held[k] {
            Some(o) => Ok(o),
            None => self.laws[k].eval(m),
        }
    }
}

impl OdeSystem<NET_N> for Network {
    fn rhs(&self, _t: f64, x: &[f64; NET_N], dx: &mut [f64; NET_N]) -> Result<()> {
        let net = PiNetworkState {
            i_net: [v2(x, NET_OFF), v2(x, NET_OFF + 2)],
            v_net: v2(x, NET_OFF + 4),
        };
        let mut terminals = [Terminal::default(); 2];
        for k in 0..2 {
            let o = 8 * k;
            let sc = x[o].sin_cos();
            let out = self.law_at(k, &self.measure(x, k, sc))?;
            let s = ConverterStateAb {
                theta: x[o],
                v_dc: x[o + 1],
                i: v2(x, o + 2),
                v: v2(x, o + 4),
            };
            terminals[k] = Terminal { i: s.i, v: s.v };
            let mu = out.mu.mu;
            let m = crate::frames::ModulationAb::new(-mu * sc.0, mu * sc.1);
            let p = self.p[k].with_derivative_gain(self.laws[k].dc.k_d);
            let d = converter_rhs_ab(&s, m, out.i_dc, net.i_net[k], &p, self.eta)?;
            dx[o] = d.theta;
            dx[o + 1] = d.v_dc;
            put(dx, o + 2, d.i);
            put(dx, o + 4, d.v);
            dx[o + 6] = out.dxi;
            dx[o + 7] = out.dnu;
        }
        let d = pi_network_rhs(&terminals, &net, &self.p, &self.net)?;
        put(dx, NET_OFF, d.net.i_net[0]);
        put(dx, NET_OFF + 2, d.net.i_net[1]);
        put(dx, NET_OFF + 4, d.net.v_net);
        Ok(())
    }
}

impl Model<NET_N> for Network {
    fn columns(&self) -> Vec<String> {
        let mut c = vec!["t".to_string()];
        for k in 1..=2 {
            c.extend(CONVERTER_COLUMNS.iter().map(|n| format!("{n}_{k}")));
        }
        c.extend(
            [
                "i_net_alpha_1",
                "i_net_beta_1",
                "i_net_alpha_2",
                "i_net_beta_2",
                "v_net_alpha",
                "v_net_beta",
                "V_storage",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        c
    }

    fn initial_state(&self) -> [f64; NET_N] {
        let mut x = [0.0; NET_N];
        x[1] = self.v_dc_init;
        x[9] = self.v_dc_init;
        x
    }

    fn hold(&mut self, x: &[f64; NET_N]) -> Result<()> {
        self.held = [None; 2];
        let mut h = [None; 2];
        for (k, slot) in h.iter_mut().enumerate() {
            let m = self.measure(x, k, x[8 * k].sin_cos());
            *slot = Some(self.laws[k].eval(&m)?);
        }
        self.held = h;
        Ok(())
    }

    fn monitor(&self, x: &[f64; NET_N]) -> Result<StepMonitor> {
        let mut mon = StepMonitor {
            storage: f64::NAN,
            ..Default::default()
        };
        for k in 0..2 {
            let out = self.law_at(k, &self.measure(x, k, x[8 * k].sin_cos()))?;
            mon.clipped |= out.mu.is_clipped();
            mon.overmodulated |= out.mu.mu > 1.0;
        }
        Ok(mon)
    }

    fn observe(&self, t: f64, x: &[f64; NET_N], storage: f64, row: &mut Vec<f64>) -> Result<()> {
        row.push(t);
        for k in 0..2 {
            let o = 8 * k;
            let out = self.law_at(k, &self.measure(x, k, x[o].sin_cos()))?;
            let i_net: CurrentAb = v2(x, NET_OFF + 2 * k);
            converter_row(row, x[o], x[o + 1], self.eta, v2(x, o + 2), v2(x, o + 4), i_net, &out);
        }
        row.extend_from_slice(&x[NET_OFF..NET_N]);
        row.push(storage);
        Ok(())
    }

    fn apply_event(&mut self, ev: &Event, _x: &mut [f64; NET_N]) -> Result<()> {
        match ev.action {
            EventAction::SetLoadConductance => self.net.g_net = ev.value,
            EventAction::ScaleLoadConductance => self.net.g_net *= ev.value,
            EventAction::SetSL => return Err(unknown_target(ev)),
            EventAction::SetGain | EventAction::SetReference => {
                let (_, which) = ev.target_parts()?;
                let ks: &[usize] = match which {
                    Some(0) => &[0],
                    Some(_) => &[1],
                    None => &[0, 1],
                };
                for &k in ks {
                    law_event(&mut self.laws[k], ev)?;
                }
                return Ok(());
            }
        }
        self.net.validate()
    }

    fn refresh_reference(&mut self) -> Result<Option<Reference>> {
        Ok(None)
    }
}
