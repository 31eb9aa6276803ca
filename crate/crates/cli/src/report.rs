//! Plain-text run summaries: `key = value` lines, one quantity per line.

use std::fmt::Write;

use gridform::sim::{find, steady_window_stats, PlantKind, RunResult, Scenario};

/// Trailing window used for the steady-state summary.
pub fn summary_window(sc: &Scenario) -> f64 {
    (0.1 * sc.t_end).min(0.1)
}

fn quantities(plant: PlantKind) -> Vec<(String, &'static str)> {
    let single = [("v_dc", "V"), ("omega", "rad/s"), ("v_ac_amplitude", "V"), ("mu", ""), ("P_x", "W"), ("P_l", "W")];
    match plant {
        PlantKind::Network => (1..=2)
            .flat_map(|k| single.iter().map(move |&(n, u)| (format!("{n}_{k}"), u)))
            .collect(),
        _ => single.iter().map(|&(n, u)| (n.to_string(), u)).collect(),
    }
}

pub fn run_summary(sc: &Scenario, run: &RunResult) -> String {
    let mut s = String::new();
    let w = summary_window(sc);
    let _ = writeln!(s, "scenario = {}", sc.name);
    let _ = writeln!(s, "steps = {} (dt = {:e} s, t_end = {} s)", run.steps, sc.dt, sc.t_end);
    let _ = writeln!(s, "rows = {}", run.series.n_rows());
    match steady_window_stats(&run.series, w) {
        Ok(stats) => {
            let _ = writeln!(s, "steady window = last {w} s");
            for (name, unit) in quantities(sc.plant) {
                if let Some(c) = find(&stats, &name) {
                    let _ = writeln!(s, "{name} = {:.4} ± {:.4} {unit}", c.mean, c.max_dev);
                }
            }
            if sc.plant == PlantKind::Network {
                if let Some((mean, dev)) = power_ratio(run, w) {
                    let _ = writeln!(s, "P ratio = {mean:.2} ± {dev:.3}");
                }
            }
        }
        Err(e) => {
            let _ = writeln!(s, "steady window unavailable: {e}");
        }
    }
    for seg in &run.segments {
        let _ = match seg.reference {
            Some(r) => writeln!(
                s,
                "storage [{:.4}, {:.4}] s = {:?}, passivity condition {}, {} increases above slack in {} steps",
                seg.t_start,
                seg.t_end,
                r.kind,
                if r.certificate.holds { "HOLDS" } else { "FAILS" },
                seg.violations,
                seg.steps
            ),
            None => writeln!(s, "storage [{:.4}, {:.4}] s = not monitored", seg.t_start, seg.t_end),
        };
    }
    for wn in &run.warnings {
        let _ = writeln!(s, "warning {} = {} time(s), first at t = {:.6} s: {}", wn.kind, wn.count, wn.first_t, wn.detail);
    }
    s
}

/// Mean and largest deviation of the row-wise ratio `P_x,1 / P_x,2`.
pub fn power_ratio(run: &RunResult, window: f64) -> Option<(f64, f64)> {
    let t = run.series.time();
    let p1 = run.series.column("P_x_1")?;
    let p2 = run.series.column("P_x_2")?;
    let t_from = t.last()? - window - 1e-12;
    let ratios: Vec<f64> = t
        .iter()
        .zip(p1.iter().zip(&p2))
        .filter(|(&tk, _)| tk >= t_from)
        .map(|(_, (a, b))| a / b)
        .collect();
    if ratios.is_empty() {
        return None;
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let dev = ratios.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
    Some((mean, dev))
}
