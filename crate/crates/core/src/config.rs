//! Sectioned TOML scenario files and the bundled presets.
//!
//! ```toml
//! [converter]          # g_dc, c_dc, r, l, c, g
//! [control.dc]         # i_dc_ref, v_dc_ref, k_p, k_i, k_d, omega0
//! [control.amplitude]  # mode = "constant" | "feedforward" | "pi_pbc" | "droop"
//! [load]               # g_l, b_l, s_l_d, s_l_q
//! [network]            # r_net, l_net, c_net, g_net, rho
//! [simulation]         # name, plant, t_end, dt, record_decimation, ...
//! [[events]]           # time, action, target, value
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::control::{AmplitudeConfig, DcControlConfig};
use crate::error::{Error, Result};
use crate::plant::{ConverterParams, LoadParams, PiNetworkParams};
use crate::sim::{Event, EventAction, NetworkSpec, PlantKind, Scenario};

/// Base load of the single-converter studies: rated 10 kW at 165 V.
pub const RATED_CONDUCTANCE: f64 = 1.0e4 / (165.0 * 165.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeMode {
    Constant,
    Feedforward,
    PiPbc,
    Droop,
}

/// Flat `[control.amplitude]` section; only the keys of `mode` are used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplitudeSection {
    pub mode: AmplitudeMode,
    pub mu: f64,
    pub r_ref: f64,
    pub kappa_p: f64,
    pub kappa_i: f64,
    pub mu_ref: f64,
    pub d_v: f64,
    pub p_ref: f64,
}

impl Default for AmplitudeSection {
    fn default() -> Self {
        Self {
            mode: AmplitudeMode::Feedforward,
            mu: 0.33,
            r_ref: 165.0,
            kappa_p: 0.1,
            kappa_i: 10.0,
            mu_ref: 0.33,
            d_v: 1e-5,
            p_ref: 1e4,
        }
    }
}

impl AmplitudeSection {
    pub fn to_config(&self) -> AmplitudeConfig {
        match self.mode {
            AmplitudeMode::Constant => AmplitudeConfig::Constant { mu: self.mu },
            AmplitudeMode::Feedforward => AmplitudeConfig::Feedforward { r_ref: self.r_ref },
            AmplitudeMode::PiPbc => AmplitudeConfig::PiPbc {
                r_ref: self.r_ref,
                kappa_p: self.kappa_p,
                kappa_i: self.kappa_i,
            },
            AmplitudeMode::Droop => AmplitudeConfig::Droop {
                mu_ref: self.mu_ref,
                d_v: self.d_v,
                p_ref: self.p_ref,
            },
        }
    }

    pub fn from_config(a: AmplitudeConfig) -> Self {
        let d = Self::default();
        match a {
            AmplitudeConfig::Constant { mu } => Self {
                mode: AmplitudeMode::Constant,
                mu,
                ..d
            },
            AmplitudeConfig::Feedforward { r_ref } => Self {
                mode: AmplitudeMode::Feedforward,
                r_ref,
                ..d
            },
            AmplitudeConfig::PiPbc { r_ref, kappa_p, kappa_i } => Self {
                mode: AmplitudeMode::PiPbc,
                r_ref,
                kappa_p,
                kappa_i,
                ..d
            },
            AmplitudeConfig::Droop { mu_ref, d_v, p_ref } => Self {
                mode: AmplitudeMode::Droop,
                mu_ref,
                d_v,
                p_ref,
                ..d
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlSection {
    pub dc: DcControlConfig,
    pub amplitude: AmplitudeSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub r_net: f64,
    pub l_net: f64,
    pub c_net: f64,
    pub g_net: f64,
    pub rho: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let p = PiNetworkParams::default();
        Self {
            r_net: p.r_net,
            l_net: p.l_net,
            c_net: p.c_net,
            g_net: p.g_net,
            rho: 3.0,
        }
    }
}

impl NetworkSection {
    fn spec(&self) -> NetworkSpec {
        NetworkSpec {
            params: PiNetworkParams {
                r_net: self.r_net,
                l_net: self.l_net,
                c_net: self.c_net,
                g_net: self.g_net,
            },
            rho: self.rho,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub name: String,
    pub plant: PlantKind,
    pub t_end: f64,
    pub dt: f64,
    pub record_decimation: usize,
    pub strict: bool,
    /// Defaults to `v_dc_ref`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_dc_init: Option<f64>,
    pub control_hold: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            plant: PlantKind::Ab,
            t_end: 1.0,
            dt: 1e-6,
            record_decimation: 100,
            strict: false,
            v_dc_init: None,
            control_hold: 0.0,
        }
    }
}

/// The on-disk scenario format.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub converter: ConverterParams,
    pub control: ControlSection,
    pub load: LoadParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSection>,
    pub simulation: SimulationSection,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let s = &self.simulation;
        let sc = Scenario {
            name: s.name.clone(),
            plant: s.plant,
            converter: self.converter,
            dc: self.control.dc,
            amplitude: self.control.amplitude.to_config(),
            load: self.load,
            network: self.network.map(|n| n.spec()),
            t_end: s.t_end,
            dt: s.dt,
            record_decimation: s.record_decimation,
            strict: s.strict,
            v_dc_init: s.v_dc_init.unwrap_or(self.control.dc.v_dc_ref),
            control_hold: s.control_hold,
            events: self.events.clone(),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        Self {
            converter: sc.converter,
            control: ControlSection {
                dc: sc.dc,
                amplitude: AmplitudeSection::from_config(sc.amplitude),
            },
            load: sc.load,
            network: sc.network.map(|n| NetworkSection {
                r_net: n.params.r_net,
                l_net: n.params.l_net,
                c_net: n.params.c_net,
                g_net: n.params.g_net,
                rho: n.rho,
            }),
            simulation: SimulationSection {
                name: sc.name.clone(),
                plant: sc.plant,
                t_end: sc.t_end,
                dt: sc.dt,
                record_decimation: sc.record_decimation,
                strict: sc.strict,
                v_dc_init: (sc.v_dc_init != sc.dc.v_dc_ref).then_some(sc.v_dc_init),
                control_hold: sc.control_hold,
            },
            events: sc.events.clone(),
        }
    }
}

/// Parses a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    ConfigFile::parse(text)?.to_scenario()
}

pub const PRESETS: [&str; 5] = [
    "single-pid-feedforward",
    "single-pid-pipbc",
    "single-pid-droop",
    "parallel-sharing",
    "matching-vs-sm",
];

fn single(name: &str, amplitude: AmplitudeConfig, g_l: f64) -> Scenario {
    let dc = DcControlConfig::default();
    Scenario {
        name: name.into(),
        plant: PlantKind::Ab,
        converter: ConverterParams::default(),
        dc,
        amplitude,
        load: LoadParams::conductance(g_l),
        network: None,
        t_end: 1.0,
        dt: 1e-6,
        record_decimation: 100,
        strict: false,
        v_dc_init: dc.v_dc_ref,
        control_hold: 0.0,
        events: vec![Event::new(0.5, EventAction::ScaleLoadConductance, None, 1.55)],
    }
}

/// The frozen experiment definitions.
pub fn preset(name: &str) -> Result<Scenario> {
    let sc = match name {
        "single-pid-feedforward" => single(name, AmplitudeConfig::Feedforward { r_ref: 165.0 }, RATED_CONDUCTANCE),
        "single-pid-pipbc" => Scenario {
            // the output-feedback loop has a pole near −κ_p v_ref² / (2L) ≈ −1e8 s⁻¹
            dt: 2e-8,
            record_decimation: 5000,
            ..single(
                name,
                AmplitudeConfig::PiPbc {
                    r_ref: 165.0,
                    kappa_p: 0.1,
                    kappa_i: 10.0,
                },
                RATED_CONDUCTANCE,
            )
        },
        "single-pid-droop" => single(
            name,
            AmplitudeConfig::Droop {
                mu_ref: 0.33,
                d_v: 1e-5,
                p_ref: 1e4,
            },
            0.25,
        ),
        "parallel-sharing" => {
            let dc = DcControlConfig {
                i_dc_ref: 100.0,
                k_p: 2.0,
                k_i: 0.0,
                k_d: 0.0,
                ..DcControlConfig::default()
            };
            Scenario {
                name: name.into(),
                plant: PlantKind::Network,
                converter: ConverterParams {
                    g_dc: 0.0,
                    ..ConverterParams::default()
                },
                dc,
                amplitude: AmplitudeConfig::Constant { mu: 0.33 },
                load: LoadParams::default(),
                network: Some(NetworkSpec {
                    params: PiNetworkParams {
                        g_net: 0.1,
                        ..PiNetworkParams::default()
                    },
                    rho: 3.0,
                }),
                t_end: 1.0,
                dt: 2.5e-7,
                record_decimation: 400,
                strict: false,
                v_dc_init: dc.v_dc_ref,
                control_hold: 0.0,
                events: vec![
                    // heavier loads leave no synchronous state with a 3:1 split
                    // on this mostly resistive line
                    Event::new(0.3, EventAction::SetLoadConductance, None, 0.15),
                    Event::new(0.7, EventAction::SetLoadConductance, None, 0.2),
                ],
            }
        }
        "matching-vs-sm" => {
            let dc = DcControlConfig {
                k_i: 0.0,
                ..DcControlConfig::default()
            };
            Scenario {
                name: name.into(),
                plant: PlantKind::Sm,
                converter: ConverterParams::default(),
                dc,
                amplitude: AmplitudeConfig::Constant { mu: 0.33 },
                load: LoadParams::conductance(RATED_CONDUCTANCE),
                network: None,
                t_end: 0.1,
                dt: 1e-6,
                record_decimation: 100,
                strict: false,
                v_dc_init: dc.v_dc_ref,
                control_hold: 0.0,
                events: Vec::new(),
            }
        }
        _ => {
            return Err(Error::InvalidConfig(format!(
                "unknown preset {name:?}; available: {}",
                PRESETS.join(", ")
            )))
        }
    };
    sc.validate()?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_documented_defaults() {
        let sc = parse_scenario("").unwrap();
        assert_eq!(sc.converter, ConverterParams::default());
        assert_eq!(sc.dc.k_i, 10.0);
        assert_eq!(sc.amplitude, AmplitudeConfig::Feedforward { r_ref: 165.0 });
        assert_eq!(sc.v_dc_init, 1000.0);
        assert_eq!((sc.dt, sc.record_decimation), (1e-6, 100));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let e = parse_scenario("[converter]\nc_dcc = 1e-3\n").unwrap_err();
        assert!(e.to_string().contains("c_dcc"), "{e}");
        assert!(parse_scenario("[simulaton]\n").is_err());
    }

    #[test]
    fn events_and_sections_parse() {
        let text = r#"
            [control.amplitude]
            mode = "droop"
            d_v = 2e-5
            [load]
            g_l = 0.3
            [simulation]
            t_end = 0.2
            [[events]]
            time = 0.1
            action = "set_gain"
            target = "k_p"
            value = 2.0
        "#;
        let sc = parse_scenario(text).unwrap();
        assert_eq!(
            sc.amplitude,
            AmplitudeConfig::Droop {
                mu_ref: 0.33,
                d_v: 2e-5,
                p_ref: 1e4
            }
        );
        assert_eq!(sc.events, vec![Event::new(0.1, EventAction::SetGain, Some("k_p"), 2.0)]);
        let t = ConfigFile::from_scenario(&preset("parallel-sharing").unwrap()).to_toml().unwrap();
        assert!(t.contains("set_load_conductance"), "{t}");
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let sc = preset(name).unwrap();
            let text = ConfigFile::from_scenario(&sc).to_toml().unwrap();
            assert_eq!(parse_scenario(&text).unwrap(), sc, "{name}");
        }
        assert!(preset("nope").is_err());
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6..1e6f64, 1e-9..1e-3f64, Just(0.0)]
    }

    fn config() -> impl Strategy<Value = ConfigFile> {
        (
            prop::array::uniform6(finite()),
            prop::array::uniform6(finite()),
            prop::array::uniform8(finite()),
            prop::array::uniform4(finite()),
            prop::option::of(prop::array::uniform5(finite())),
            (finite(), finite(), 1usize..1000, any::<bool>(), prop::option::of(finite())),
            prop::collection::vec((finite(), 0usize..5, prop::option::of("[a-z_]{1,8}"), finite()), 0..4),
            0usize..4,
        )
            .prop_map(|(c, d, a, l, n, s, ev, mode)| {
                let actions = [
                    EventAction::SetLoadConductance,
                    EventAction::ScaleLoadConductance,
                    EventAction::SetSL,
                    EventAction::SetGain,
                    EventAction::SetReference,
                ];
                let modes = [
                    AmplitudeMode::Constant,
                    AmplitudeMode::Feedforward,
                    AmplitudeMode::PiPbc,
                    AmplitudeMode::Droop,
                ];
                ConfigFile {
                    converter: ConverterParams {
                        g_dc: c[0],
                        c_dc: c[1],
                        r: c[2],
                        l: c[3],
                        c: c[4],
                        g: c[5],
                    },
                    control: ControlSection {
                        dc: DcControlConfig {
                            i_dc_ref: d[0],
                            v_dc_ref: d[1],
                            k_p: d[2],
                            k_i: d[3],
                            k_d: d[4],
                            omega0: d[5],
                        },
                        amplitude: AmplitudeSection {
                            mode: modes[mode],
                            mu: a[0],
                            r_ref: a[1],
                            kappa_p: a[2],
                            kappa_i: a[3],
                            mu_ref: a[4],
                            d_v: a[5],
                            p_ref: a[6],
                        },
                    },
                    load: LoadParams {
                        g_l: l[0],
                        b_l: l[1],
                        s_l_d: l[2],
                        s_l_q: l[3],
                    },
                    network: n.map(|n| NetworkSection {
                        r_net: n[0],
                        l_net: n[1],
                        c_net: n[2],
                        g_net: n[3],
                        rho: n[4],
                    }),
                    simulation: SimulationSection {
                        name: "prop".into(),
                        plant: PlantKind::Dq,
                        t_end: s.0,
                        dt: s.1,
                        record_decimation: s.2,
                        strict: s.3,
                        v_dc_init: s.4,
                        control_hold: a[7],
                    },
                    events: ev
                        .into_iter()
                        .map(|(t, k, target, v)| Event {
                            time: t,
                            action: actions[k],
                            target,
                            value: v,
                        })
                        .collect(),
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]
        #[test]
        fn parse_serialize_parse_is_identity(cfg in config()) {
            let text = cfg.to_toml().unwrap();
            let back = ConfigFile::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_toml().unwrap(), text);
        }
    }
}
