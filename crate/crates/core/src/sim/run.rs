//! The integration loop: events, sample-and-hold, recording and monitors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::integrator::Rk4;
use crate::sim::law::{Reference, StorageKind};
use crate::sim::models::{MatchingPair, Model, Network, SingleAb, SingleDq, NET_N};
use crate::sim::scenario::{PlantKind, Scenario};
use crate::sim::series::TimeSeries;

/// Per-step slack on storage increase, relative to the segment's initial value.
pub const STORAGE_SLACK: f64 = 1e-8;

/// A warning kind, aggregated over the run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Warning {
    pub kind: &'static str,
    pub first_t: f64,
    pub count: u64,
    pub detail: String,
}

/// Storage monitoring over one interval between parameter changes.
#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub reference: Option<Reference>,
    /// Storage at the start of the segment.
    pub v0: f64,
    /// Largest single-step increase seen.
    pub max_increase: f64,
    /// Steps whose increase exceeded `STORAGE_SLACK · v0`.
    pub violations: u64,
    pub steps: u64,
}

impl LyapunovSegment {
    pub fn kind(&self) -> Option<StorageKind> {
        self.reference.map(|r| r.kind)
    }

    /// True when the certificate holds and the storage was monotone.
    pub fn certified(&self) -> bool {
        self.reference.is_some_and(|r| r.certificate.holds)
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub series: TimeSeries,
    pub warnings: Vec<Warning>,
    pub segments: Vec<LyapunovSegment>,
    pub steps: u64,
}

impl RunResult {
    pub fn warning(&self, kind: &str) -> Option<&Warning> {
        self.warnings.iter().find(|w| w.kind == kind)
    }
}

#[derive(Default)]
struct Warnings(Vec<Warning>);

impl Warnings {
    fn push(&mut self, kind: &'static str, t: f64, detail: impl FnOnce() -> String) {
        match self.0.iter_mut().find(|w| w.kind == kind) {
            Some(w) => w.count += 1,
            None => self.0.push(Warning {
                kind,
                first_t: t,
                count: 1,
                detail: detail(),
            }),
        }
    }
}

/// Integrates the scenario and records its trajectory.
pub fn run_scenario(sc: &Scenario) -> Result<RunResult> {
    sc.validate()?;
    match sc.plant {
        PlantKind::Ab => drive::<10, _>(sc, SingleAb::new(sc)),
        PlantKind::Dq => drive::<8, _>(sc, SingleDq::new(sc)),
        PlantKind::Sm => drive::<12, _>(sc, MatchingPair::new(sc)?),
        PlantKind::Network => drive::<NET_N, _>(sc, Network::new(sc)?),
    }
}

fn open_segment<const N: usize, M: Model<N>>(
    model: &mut M,
    x: &[f64; N],
    t: f64,
    warnings: &mut Warnings,
) -> Result<(LyapunovSegment, f64)> {
    let reference = match model.refresh_reference() {
        Ok(r) => r,
        Err(e @ (Error::InvalidConfig(_) | Error::Blowup { .. })) => return Err(e),
        Err(e) => {
            warnings.push("no_reference", t, || e.to_string());
            None
        }
    };
    let v0 = model.monitor(x)?.storage;
    Ok((
        LyapunovSegment {
            t_start: t,
            t_end: t,
            reference,
            v0,
            max_increase: f64::NEG_INFINITY,
            violations: 0,
            steps: 0,
        },
        v0,
    ))
}

fn drive<const N: usize, M: Model<N>>(sc: &Scenario, mut model: M) -> Result<RunResult> {
    let n = sc.n_steps();
    let dec = sc.record_decimation as u64;
    let hold_every = if sc.control_hold > 0.0 {
        ((sc.control_hold / sc.dt).round() as u64).max(1)
    } else {
        0
    };
    let mut warnings = Warnings::default();
    let events = sc.snapped_events();
    for &(_, moved, e) in &events {
        if moved {
            warnings.push("event_snapped", e.time, || format!("event at t = {} moved onto the step grid", e.time));
        }
    }
    let mut next_event = 0;

    let mut series = TimeSeries::new(model.columns());
    let mut row = Vec::with_capacity(series.columns().len());
    let mut x = model.initial_state();
    let mut rk = Rk4::new(sc.dt);
    let mut segments = Vec::new();

    let apply_due = |k: u64, next: &mut usize, model: &mut M, x: &mut [f64; N]| -> Result<bool> {
        let mut any = false;
        while *next < events.len() && events[*next].0 <= k {
            model.apply_event(events[*next].2, x)?;
            *next += 1;
            any = true;
        }
        Ok(any)
    };

    apply_due(0, &mut next_event, &mut model, &mut x)?;
    if hold_every > 0 {
        model.hold(&x)?;
    }
    let (mut seg, mut prev) = open_segment(&mut model, &x, 0.0, &mut warnings)?;
    row.clear();
    model.observe(0.0, &x, prev, &mut row)?;
    series.push_row(&row);

    for k in 0..n {
        if k > 0 && apply_due(k, &mut next_event, &mut model, &mut x)? {
            let t = rk.t();
            seg.t_end = t;
            segments.push(seg);
            if hold_every > 0 {
                model.hold(&x)?;
            }
            (seg, prev) = open_segment(&mut model, &x, t, &mut warnings)?;
        }
        if hold_every > 0 && k > 0 && k % hold_every == 0 {
            model.hold(&x)?;
        }
        rk.advance(&model, &mut x)?;
        let t = rk.t();
        let mon = model.monitor(&x)?;
        if mon.clipped {
            if sc.strict {
                return Err(Error::Overmodulation(format!("modulation clipped at t = {t}")));
            }
            warnings.push("modulation_clipped", t, || "modulation amplitude clipped to [0, 1]".into());
        }
        if mon.overmodulated {
            if sc.strict {
                return Err(Error::Overmodulation(format!("|m| > 1 at t = {t}")));
            }
            warnings.push("overmodulation", t, || "modulation amplitude above 1".into());
        }
        if seg.reference.is_some() && mon.storage.is_finite() {
            let inc = mon.storage - prev;
            seg.max_increase = seg.max_increase.max(inc);
            if inc > STORAGE_SLACK * seg.v0 {
                seg.violations += 1;
            }
            seg.steps += 1;
        }
        prev = mon.storage;
        if (k + 1) % dec == 0 || k + 1 == n {
            row.clear();
            model.observe(t, &x, mon.storage, &mut row)?;
            series.push_row(&row);
        }
    }
    seg.t_end = rk.t();
    segments.push(seg);
    Ok(RunResult {
        series,
        warnings: warnings.0,
        segments,
        steps: n,
    })
}
