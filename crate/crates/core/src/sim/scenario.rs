//! Declarative description of one experiment.

use serde::{Deserialize, Serialize};

use crate::control::{AmplitudeConfig, DcControlConfig};
use crate::error::{Error, Result};
use crate::plant::{ConverterParams, LoadParams, PiNetworkParams};
use crate::sim::law::{single_reference, Law, Reference};

/// Which vector field is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    /// Single converter in stationary coordinates.
    Ab,
    /// Single converter in its own rotating frame.
    Dq,
    /// Matched converter side by side with its equivalent synchronous machine.
    Sm,
    /// Two converters sharing a load through Π-line sections.
    Network,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    SetLoadConductance,
    ScaleLoadConductance,
    /// `target` is `d` or `q`.
    SetSL,
    /// `target` is one of `k_p`, `k_i`, `k_d`, `kappa_p`, `kappa_i`, `d_v`.
    SetGain,
    /// `target` is one of `i_dc_ref`, `r_ref`, `mu_ref`, `p_ref`, `mu`.
    SetReference,
}

/// A parameter change applied between two integration steps.
///
/// In network scenarios a `target` may carry a converter suffix, `k_p:2`;
/// without one the change applies to both converters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub time: f64,
    pub action: EventAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub value: f64,
}

impl Event {
    pub fn new(time: f64, action: EventAction, target: Option<&str>, value: f64) -> Self {
        Self {
            time,
            action,
            target: target.map(str::to_string),
            value,
        }
    }

    /// Splits `name:k` into the name and a zero-based converter index.
    pub fn target_parts(&self) -> Result<(&str, Option<usize>)> {
        let t = self
            .target
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig(format!("event {:?} needs a target", self.action)))?;
        match t.split_once(':') {
            None => Ok((t, None)),
            Some((name, "1")) => Ok((name, Some(0))),
            Some((name, "2")) => Ok((name, Some(1))),
            Some(_) => Err(Error::InvalidConfig(format!("bad converter suffix in target {t:?}"))),
        }
    }
}

/// Second-converter data of a network scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetworkSpec {
    pub params: PiNetworkParams,
    /// Power ratio of converter 1 to converter 2; converter 2 gains follow.
    pub rho: f64,
}

/// Everything a run needs. Build one from a config file or a preset.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantKind,
    pub converter: ConverterParams,
    pub dc: DcControlConfig,
    pub amplitude: AmplitudeConfig,
    pub load: LoadParams,
    pub network: Option<NetworkSpec>,
    pub t_end: f64,
    pub dt: f64,
    pub record_decimation: usize,
    /// Abort on the first clipped modulation instead of warning.
    pub strict: bool,
    pub v_dc_init: f64,
    /// Controller sample-and-hold period; zero means continuous control.
    pub control_hold: f64,
    pub events: Vec<Event>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.converter.validate()?;
        self.dc.validate()?;
        self.amplitude.validate()?;
        self.load.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dt and t_end must be positive (dt = {}, t_end = {})",
                self.dt, self.t_end
            )));
        }
        if self.record_decimation == 0 {
            return Err(Error::InvalidConfig("record_decimation must be at least 1".into()));
        }
        if !(self.control_hold >= 0.0) || !self.v_dc_init.is_finite() {
            return Err(Error::InvalidConfig("control_hold must be >= 0 and v_dc_init finite".into()));
        }
        match (self.plant, &self.network) {
            (PlantKind::Network, None) => return Err(Error::InvalidConfig("network plant needs a [network] section".into())),
            (PlantKind::Network, Some(n)) => {
                n.params.validate()?;
                if !(n.rho > 0.0) {
                    return Err(Error::InvalidConfig("rho must be positive".into()));
                }
            }
            _ => {}
        }
        if self.plant == PlantKind::Sm {
            if !matches!(self.amplitude, AmplitudeConfig::Constant { .. }) || self.dc.k_i != 0.0 || self.dc.k_d != 0.0 {
                return Err(Error::InvalidConfig(
                    "the machine comparison needs constant mu and a proportional DC source (k_i = k_d = 0)".into(),
                ));
            }
            if self.load.s_l_d != 0.0 || self.load.s_l_q != 0.0 {
                return Err(Error::InvalidConfig("the machine comparison supports admittance loads only".into()));
            }
        }
        for w in self.events.windows(2) {
            if w[1].time < w[0].time {
                return Err(Error::InvalidConfig("events must be sorted by time".into()));
            }
        }
        for e in &self.events {
            if !(e.time >= 0.0 && e.time <= self.t_end) || !e.value.is_finite() {
                return Err(Error::InvalidConfig(format!("event outside the run or non-finite: {e:?}")));
            }
            if !matches!(e.action, EventAction::SetLoadConductance | EventAction::ScaleLoadConductance) {
                e.target_parts()?;
            }
        }
        Ok(())
    }

    /// Equilibrium and certificate of a single-converter scenario at its
    /// initial settings, before any event. `None` for the network and for
    /// controller combinations the analysis does not cover.
    pub fn reference(&self) -> Result<Option<Reference>> {
        if self.plant == PlantKind::Network {
            return Ok(None);
        }
        single_reference(&self.converter, &Law::new(&self.converter, self.dc, self.amplitude), &self.load)
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Event step indices; the bool is set when a time had to be moved onto the grid.
    pub fn snapped_events(&self) -> Vec<(u64, bool, &Event)> {
        self.events
            .iter()
            .map(|e| {
                let k = (e.time / self.dt).round();
                let moved = (k * self.dt - e.time).abs() > 1e-9 * self.dt;
                (k as u64, moved, e)
            })
            .collect()
    }
}
