use gridform::config::preset;
use gridform::control::{AmplitudeConfig, DcControlConfig};
use gridform::plant::LoadParams;
use gridform::sim::{run_scenario, Event, EventAction, PlantKind, Scenario};
use proptest::prelude::*;

const STATES: [&str; 6] = ["v_dc", "i_alpha", "i_beta", "v_alpha", "v_beta", "theta"];

fn short_ff(dt: f64, t_end: f64, events: Vec<Event>) -> Scenario {
    Scenario {
        dt,
        t_end,
        record_decimation: 1,
        events,
        ..preset("single-pid-feedforward").unwrap()
    }
}

fn largest_jump(sc: &Scenario, row: usize) -> f64 {
    let r = run_scenario(sc).unwrap();
    STATES
        .iter()
        .map(|c| {
            let col = r.series.column(c).unwrap();
            (col[row + 1] - col[row]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn events_change_parameters_not_state() {
    let step = |t| vec![Event::new(t, EventAction::ScaleLoadConductance, None, 1.55)];
    let with = run_scenario(&short_ff(1e-6, 4e-3, step(2e-3))).unwrap();
    let without = run_scenario(&short_ff(1e-6, 4e-3, Vec::new())).unwrap();
    // identical up to and including the event instant
    for c in STATES {
        let (a, b) = (with.series.column(c).unwrap(), without.series.column(c).unwrap());
        assert_eq!(a[..=2000], b[..=2000], "{c}");
        assert_ne!(a[2001], b[2001], "{c}");
    }
    // a state jump would not shrink with the step; a continuous response does
    let coarse = largest_jump(&short_ff(1e-6, 4e-3, step(2e-3)), 2000);
    let fine = largest_jump(&short_ff(5e-7, 4e-3, step(2e-3)), 4000);
    let ratio = coarse / fine;
    assert!((1.8..2.2).contains(&ratio), "one-step change ratio {ratio}");
}

#[test]
fn sample_and_hold_latches_on_a_fixed_grid() {
    let sc = Scenario {
        control_hold: 1e-4,
        ..short_ff(1e-6, 5e-3, Vec::new())
    };
    let r = run_scenario(&sc).unwrap();
    let mu = r.series.column("mu").unwrap();
    let changes: Vec<usize> = (1..mu.len()).filter(|&k| mu[k] != mu[k - 1]).collect();
    assert!(changes.len() >= 45, "{} changes", changes.len());
    let phase = changes[0] % 100;
    assert!(changes.iter().all(|k| k % 100 == phase), "{changes:?}");
}

#[test]
fn snapped_events_are_reported() {
    let sc = short_ff(1e-6, 1e-3, vec![Event::new(5.0000004e-4, EventAction::ScaleLoadConductance, None, 1.2)]);
    let r = run_scenario(&sc).unwrap();
    let w = r.warning("event_snapped").expect("warning");
    assert_eq!(w.count, 1);
    assert_eq!(r.segments.len(), 2);
    assert!((r.segments[1].t_start - 5e-4).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// Wherever the certificate holds, the monitored storage never rises by
    /// more than the per-step slack; time is strictly increasing and the
    /// record finite whatever the draw.
    #[test]
    fn storage_is_monotone_under_certificate(
        k_p in 0.5f64..5.0,
        pid in any::<bool>(),
        g_l in 0.0f64..0.8,
        mu in 0.25f64..0.45,
        dv in -30.0f64..30.0,
        plant in prop_oneof![Just(PlantKind::Ab), Just(PlantKind::Dq)],
    ) {
        let amplitude = if pid { AmplitudeConfig::Feedforward { r_ref: 165.0 } } else { AmplitudeConfig::Constant { mu } };
        let sc = Scenario {
            plant,
            dc: DcControlConfig { k_p, k_i: if pid { 10.0 } else { 0.0 }, ..DcControlConfig::default() },
            amplitude,
            load: LoadParams::conductance(g_l),
            v_dc_init: 1000.0 + dv,
            t_end: 0.02,
            record_decimation: 10,
            events: Vec::new(),
            ..preset("single-pid-feedforward").unwrap()
        };
        let r = run_scenario(&sc).unwrap();
        let t = r.series.time();
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
        let storage = r.series.index_of("V_storage").unwrap();
        for k in 0..r.series.n_rows() {
            let row = r.series.row(k);
            prop_assert!(row.iter().enumerate().all(|(j, v)| v.is_finite() || j == storage));
        }
        for s in &r.segments {
            if s.certified() {
                prop_assert_eq!(s.violations, 0, "largest increase {:e}, V(0) {:e}", s.max_increase, s.v0);
            }
        }
    }
}
