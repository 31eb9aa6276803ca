//! Closed-form reports. Infeasibility is a result here, not an error: it is
//! printed as a `finding = ...` line and the command still exits 0.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use gridform::analysis::{droop_coefficients, nose_curve, p_max, power_sharing_design, NosePoint};
use gridform::control::AmplitudeConfig;
use gridform::plant::LoadParams;
use gridform::sim::{PlantKind, Scenario};

use crate::{load, write_atomic, CliResult, Failure, Source};

#[derive(Subcommand)]
pub enum Analysis {
    /// Steady state of the closed loop at the scenario's initial settings.
    Equilibrium(Base),
    /// Passivity condition and the smallest eigenvalue of the damping matrix.
    Certificate {
        #[command(flatten)]
        base: Base,
        /// Evaluate with the load removed.
        #[arg(long)]
        zero_load: bool,
    },
    /// Steady-state DC voltage, AC amplitude and frequency against power (P source).
    NoseCurve {
        #[command(flatten)]
        base: Base,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Grid upper end as a multiple of the maximum power.
        #[arg(long, default_value_t = 1.25)]
        span: f64,
        /// Also report whether this power has a steady state.
        #[arg(long)]
        p_x: Option<f64>,
        /// Write the curve as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frequency and amplitude droop slopes of the P source.
    Droop {
        #[command(flatten)]
        base: Base,
        /// Operating frequency; defaults to the nominal one.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Write slopes over `0 ≤ ω ≤ ω(P = 0)` as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gains of a second converter for a power ratio `rho`.
    SharingGains {
        #[command(flatten)]
        base: Base,
        /// Ratio P_1 / P_2; defaults to the scenario's network ratio or 1.
        #[arg(long)]
        rho: Option<f64>,
    },
}

#[derive(Args)]
pub struct Base {
    #[command(flatten)]
    source: Source,
}

pub fn run(a: Analysis) -> CliResult<()> {
    let text = match a {
        Analysis::Equilibrium(b) => equilibrium(&load(&b.source, Some("single-pid-feedforward"))?),
        Analysis::Certificate { base, zero_load } => {
            let mut sc = load(&base.source, Some("single-pid-feedforward"))?;
            if zero_load {
                sc.load = LoadParams::default();
            }
            certificate(&sc)
        }
        Analysis::NoseCurve { base, points, span, p_x, out } => {
            let sc = load(&base.source, Some("parallel-sharing"))?;
            nose(&sc, points, span, p_x, out)?
        }
        Analysis::Droop { base, omega, points, out } => {
            let sc = load(&base.source, Some("parallel-sharing"))?;
            droop(&sc, omega, points, out)?
        }
        Analysis::SharingGains { base, rho } => {
            let sc = load(&base.source, Some("parallel-sharing"))?;
            sharing(&sc, rho.or(sc.network.map(|n| n.rho)).unwrap_or(1.0))?
        }
    };
    print!("{text}");
    Ok(())
}

fn header(s: &mut String, sc: &Scenario) {
    let _ = writeln!(s, "scenario = {}", sc.name);
}

/// `None` with a finding line when the reference cannot be formed.
fn reference(s: &mut String, sc: &Scenario) -> Option<gridform::sim::Reference> {
    if sc.plant == PlantKind::Network {
        let _ = writeln!(s, "finding = the network has no closed-form equilibrium; use nose-curve, droop or sharing-gains");
        return None;
    }
    match sc.reference() {
        Ok(Some(r)) => Some(r),
        Ok(None) => {
            let _ = writeln!(s, "finding = no closed-form equilibrium for this controller combination");
            None
        }
        Err(e) => {
            let _ = writeln!(s, "finding = infeasible: {e}");
            None
        }
    }
}

fn equilibrium(sc: &Scenario) -> String {
    let mut s = String::new();
    header(&mut s, sc);
    if let Some(r) = reference(&mut s, sc) {
        let eq = r.equilibrium;
        let eta = sc.dc.eta();
        let lines = [
            ("v_dc", eq.v_dc_star, "V"),
            ("omega", eq.omega_star(eta), "rad/s"),
            ("mu", eq.mu_star, ""),
            ("i_d", eq.i_dq_star.x1, "A"),
            ("i_q", eq.i_dq_star.x2, "A"),
            ("v_d", eq.v_dq_star.x1, "V"),
            ("v_q", eq.v_dq_star.x2, "V"),
            ("v_ac_amplitude", eq.v_dq_star.norm(), "V"),
            ("xi", eq.xi_star, "A"),
            ("i_dc", eq.i_dc_star, "A"),
            ("P_x", eq.p_x(), "W"),
            ("P_l", eq.p_l(), "W"),
            ("max residual", eq.max_residual(&sc.converter, &sc.dc), ""),
        ];
        for (k, v, u) in lines {
            let _ = writeln!(s, "{k} = {v:.9e} {u}");
        }
        if !(0.0..=1.0).contains(&eq.mu_star) {
            let _ = writeln!(s, "finding = mu* = {:.6e} lies outside [0, 1]: the set-point needs overmodulation", eq.mu_star);
        }
    }
    s
}

fn certificate(sc: &Scenario) -> String {
    let mut s = String::new();
    header(&mut s, sc);
    let _ = writeln!(s, "load conductance = {:e} S", sc.load.g_l);
    if let Some(r) = reference(&mut s, sc) {
        let c = r.certificate;
        let _ = writeln!(s, "passivity condition: {}", if c.holds { "HOLDS" } else { "FAILS" });
        let _ = writeln!(s, "margin = {:.9e}", -c.condition_value);
        let _ = writeln!(s, "Q min eigenvalue = {:.9e}", c.q_min_eigenvalue);
        let _ = writeln!(s, "storage = {:?}", r.kind);
    }
    s
}

/// Modulation depth the P-source curves are drawn at.
fn curve_mu(sc: &Scenario) -> f64 {
    match sc.amplitude {
        AmplitudeConfig::Constant { mu } => mu,
        AmplitudeConfig::Droop { mu_ref, .. } => mu_ref,
        _ => sc.reference().ok().flatten().map_or(0.33, |r| r.equilibrium.mu_star),
    }
}

fn p_source_note(s: &mut String, sc: &Scenario) {
    let _ = writeln!(
        s,
        "source = proportional, G_dc + K_p = {:e} S, i_0 = {:e} A, mu = {}",
        sc.converter.g_dc + sc.dc.k_p,
        sc.dc.i_0(),
        curve_mu(sc)
    );
    if sc.dc.k_i != 0.0 || sc.dc.k_d != 0.0 {
        let _ = writeln!(s, "note = k_i and k_d are ignored; the curve describes the proportional source");
    }
}

fn csv_cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn nose_csv(pts: &[NosePoint]) -> String {
    let mut s = String::from("p_x,v_dc_high,r_x_high,omega_x_high,v_dc_low,r_x_low,omega_x_low\n");
    for p in pts {
        let [h, l] = p.branches.map_or([None; 2], |[h, l]| [Some(h), Some(l)]);
        let cells = [
            Some(p.p_x),
            h.map(|b| b.v_dc),
            h.map(|b| b.r_x),
            h.map(|b| b.omega_x),
            l.map(|b| b.v_dc),
            l.map(|b| b.r_x),
            l.map(|b| b.omega_x),
        ];
        let _ = writeln!(s, "{}", cells.map(csv_cell).join(","));
    }
    s
}

fn nose(sc: &Scenario, points: usize, span: f64, probe: Option<f64>, out: Option<PathBuf>) -> CliResult<String> {
    if points < 2 || !(span > 0.0) {
        return Err(Failure::input(anyhow::anyhow!("need --points >= 2 and --span > 0")));
    }
    let (i_0, g_dc, k_p, eta, mu) = (sc.dc.i_0(), sc.converter.g_dc, sc.dc.k_p, sc.dc.eta(), curve_mu(sc));
    if !(g_dc + k_p > 0.0) {
        return Err(Failure::input(anyhow::anyhow!("nose curve needs G_dc + K_p > 0")));
    }
    let pm = p_max(i_0, g_dc, k_p);
    let grid: Vec<f64> = (0..points).map(|k| span * pm * k as f64 / (points - 1) as f64).collect();
    let pts = nose_curve(&grid, i_0, g_dc, k_p, mu, eta);
    let mut s = String::new();
    header(&mut s, sc);
    p_source_note(&mut s, sc);
    let _ = writeln!(s, "P_max = {pm:.9e} W");
    let _ = writeln!(s, "v_dc at P_max = {:.9e} V", i_0 / (2.0 * (g_dc + k_p)));
    let beyond = pts.iter().filter(|p| p.branches.is_none()).count();
    let _ = writeln!(s, "grid points = {points}, beyond the tip = {beyond}");
    if let Some(p) = probe {
        match nose_curve(&[p], i_0, g_dc, k_p, mu, eta)[0].branches {
            Some([h, l]) => {
                let _ = writeln!(s, "P_x = {p:e} W: high branch v_dc = {:.6e} V, low branch v_dc = {:.6e} V", h.v_dc, l.v_dc);
            }
            None => {
                let _ = writeln!(s, "finding = P_x = {p:e} W exceeds P_max = {pm:.6e} W: no steady state");
            }
        }
    }
    if let Some(path) = out {
        write_atomic(&path, nose_csv(&pts).as_bytes())?;
        let _ = writeln!(s, "csv = {}", path.display());
    }
    Ok(s)
}

fn droop(sc: &Scenario, omega: Option<f64>, points: usize, out: Option<PathBuf>) -> CliResult<String> {
    if points < 2 {
        return Err(Failure::input(anyhow::anyhow!("need --points >= 2")));
    }
    let (i_0, g_dc, k_p, eta, mu) = (sc.dc.i_0(), sc.converter.g_dc, sc.dc.k_p, sc.dc.eta(), curve_mu(sc));
    let g = g_dc + k_p;
    let omega = omega.unwrap_or(sc.dc.omega0);
    let d = droop_coefficients(omega, i_0, g_dc, k_p, eta, mu);
    let mut s = String::new();
    header(&mut s, sc);
    p_source_note(&mut s, sc);
    for (k, v, u) in [
        ("omega_x", d.omega_x, "rad/s"),
        ("r_x", d.r_x, "V"),
        ("P_x", d.p_x, "W"),
        ("dP/domega", d.d_omega, "W s/rad"),
        ("dP/dr", d.d_r, "W/V"),
        ("P_max", d.p_max, "W"),
    ] {
        let _ = writeln!(s, "{k} = {v:.9e} {u}");
    }
    if d.p_x < -1e-9 * d.p_max {
        let _ = writeln!(s, "finding = negative power at this frequency: the source absorbs");
    }
    if d.d_omega > 0.0 {
        let _ = writeln!(s, "finding = low branch: power rises with frequency");
    }
    if let Some(path) = out {
        let w_top = if g > 0.0 { eta * i_0 / g } else { 2.0 * omega };
        let mut csv = String::from("omega_x,r_x,p_x,dp_domega,dp_dr\n");
        for k in 0..points {
            let w = w_top * k as f64 / (points - 1) as f64;
            let r = droop_coefficients(w, i_0, g_dc, k_p, eta, mu);
            let _ = writeln!(csv, "{:e},{:e},{:e},{:e},{:e}", r.omega_x, r.r_x, r.p_x, r.d_omega, r.d_r);
        }
        write_atomic(&path, csv.as_bytes())?;
        let _ = writeln!(s, "csv = {}", path.display());
    }
    Ok(s)
}

fn sharing(sc: &Scenario, rho: f64) -> CliResult<String> {
    let g = power_sharing_design(rho, sc.dc.k_p, sc.dc.i_dc_ref, sc.converter.g_dc).map_err(Failure::model)?;
    let mut s = String::new();
    header(&mut s, sc);
    let _ = writeln!(s, "rho = {}", g.rho);
    for k in 0..2 {
        let _ = writeln!(s, "converter {} = K_p {:.9e} S, i_dc_ref {:.9e} A", k + 1, g.k_p[k], g.i_dc_ref[k]);
    }
    if !g.lossless_dc {
        let _ = writeln!(s, "finding = G_dc = {:e} S is nonzero: the ratio is approximate", sc.converter.g_dc);
    }
    Ok(s)
}
