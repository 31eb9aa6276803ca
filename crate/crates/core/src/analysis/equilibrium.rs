//! Steady states of the matched converter in its own dq frame.

use nalgebra::{Matrix5, Vector5};

use crate::analysis::amplitude::{b_coefficient, mu_roots, psi};
use crate::control::DcControlConfig;
use crate::error::{ensure_finite, Error, Result};
use crate::frames::{CurrentDq, PlanarOperator, VoltageDq};
use crate::plant::{ConverterParams, LoadParams};

/// A steady state together with the inputs that produce it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equilibrium {
    pub xi_star: f64,
    pub v_dc_star: f64,
    pub i_dq_star: CurrentDq,
    pub v_dq_star: VoltageDq,
    pub mu_star: f64,
    /// Steady PI-PBC integrator value (zero by construction).
    pub nu_star: f64,
    /// DC source current at the steady state.
    pub i_dc_star: f64,
    pub load: LoadParams,
}

impl Equilibrium {
    pub fn omega_star(&self, eta: f64) -> f64 {
        eta * self.v_dc_star
    }

    /// Power at the switching node, `½μ v_dc i_q`.
    pub fn p_x(&self) -> f64 {
        0.5 * self.mu_star * self.v_dc_star * self.i_dq_star.x2
    }

    pub fn p_l(&self) -> f64 {
        self.load.output_dq(self.v_dq_star).dot(self.v_dq_star)
    }

    /// Residuals of the steady-state equations, each divided by a nominal
    /// scale of its equation (terms' magnitudes), for the plant closed by the
    /// DC law in `dc` and frequency `η v_dc*`.
    pub fn residuals(&self, p: &ConverterParams, dc: &DcControlConfig) -> [f64; 6] {
        let eta = dc.eta();
        let w = eta * self.v_dc_star;
        let (i, v) = (self.i_dq_star, self.v_dq_star);
        let z = PlanarOperator::impedance(p.r, p.l, w);
        let y = PlanarOperator::admittance(p.g, p.c, w) + self.load.admittance();
        let swing = 0.5 * self.mu_star * i.x2;
        let i_dc = dc.i_dc_ref - dc.k_p * (self.v_dc_star - dc.v_dc_ref) - dc.k_i * self.xi_star;
        let dc_res = (-p.g_dc * self.v_dc_star + i_dc - swing)
            / (p.g_dc * self.v_dc_star.abs() + i_dc.abs() + swing.abs()).max(1.0);
        let drive = VoltageDq::new(0.0, 0.5 * self.mu_star * self.v_dc_star);
        let zi = z * i;
        let ac_v = drive - v - zi.cast();
        let v_scale = (drive.norm() + v.norm() + zi.norm()).max(1.0);
        let yv = y * v;
        let ac_i = (i - self.load.s_l_dq()).cast() - yv;
        let i_scale = (i.norm() + yv.norm() + self.load.s_l_dq().norm()).max(1.0);
        let reg = if dc.k_i > 0.0 {
            (self.v_dc_star - dc.v_dc_ref) / dc.v_dc_ref
        } else {
            0.0
        };
        [dc_res, ac_v.x1 / v_scale, ac_v.x2 / v_scale, ac_i.x1 / i_scale, ac_i.x2 / i_scale, reg]
    }

    pub fn max_residual(&self, p: &ConverterParams, dc: &DcControlConfig) -> f64 {
        self.residuals(p, dc).iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// The 5×5 matrix acting on `(ξ, i_d, i_q, v_d, v_q)` at a regulated
/// DC voltage, and its right-hand side.
pub fn pid_system(
    p: &ConverterParams,
    dc: &DcControlConfig,
    load: &LoadParams,
    mu: f64,
) -> (Matrix5<f64>, Vector5<f64>) {
    let w = dc.omega0;
    let z = PlanarOperator::impedance(p.r, p.l, w).to_matrix();
    let y = (PlanarOperator::admittance(p.g, p.c, w) + load.admittance()).to_matrix();
    let mut a = Matrix5::zeros();
    a[(0, 0)] = -dc.k_i;
    a[(0, 2)] = -0.5 * mu;
    for r in 0..2 {
        for c in 0..2 {
            a[(1 + r, 1 + c)] = -z[r][c];
            a[(3 + r, 3 + c)] = -y[r][c];
        }
        a[(1 + r, 3 + r)] = -1.0;
        a[(3 + r, 1 + r)] = 1.0;
    }
    let rhs = Vector5::new(
        -(dc.i_dc_ref - p.g_dc * dc.v_dc_ref),
        0.0,
        -0.5 * mu * dc.v_dc_ref,
        load.s_l_d,
        load.s_l_q,
    );
    (a, rhs)
}

/// Steady state under the PID source: `v_dc* = v_dc,ref` and the rest solves
/// a linear system whose determinant is `−K_i ‖Z(Y+Y_l) + I‖²`.
pub fn solve_equilibrium_pid(
    p: &ConverterParams,
    dc: &DcControlConfig,
    load: &LoadParams,
    mu: f64,
) -> Result<Equilibrium> {
    ensure_finite(&[mu], "modulation depth")?;
    let (a, rhs) = pid_system(p, dc, load, mu);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("steady-state matrix with K_i = {}", dc.k_i)))?;
    ensure_finite(x.as_slice(), "equilibrium")?;
    let eq = Equilibrium {
        xi_star: x[0],
        v_dc_star: dc.v_dc_ref,
        i_dq_star: CurrentDq::new(x[1], x[2]),
        v_dq_star: VoltageDq::new(x[3], x[4]),
        mu_star: mu,
        nu_star: 0.0,
        i_dc_star: dc.i_dc_ref - dc.k_i * x[0],
        load: *load,
    };
    Ok(eq)
}

/// AC steady state at a given DC voltage, and its derivative with respect
/// to that voltage (the frequency `η v_dc` moves with it).
fn ac_response(
    v_dc: f64,
    p: &ConverterParams,
    load: &LoadParams,
    mu: f64,
    eta: f64,
) -> Result<(CurrentDq, VoltageDq, CurrentDq)> {
    let w = eta * v_dc;
    let z = PlanarOperator::impedance(p.r, p.l, w);
    let yt = PlanarOperator::admittance(p.g, p.c, w) + load.admittance();
    let dz = PlanarOperator::new(0.0, eta * p.l);
    let dy = PlanarOperator::new(0.0, eta * p.c);
    let n = z * yt + PlanarOperator::IDENTITY;
    let n_inv = n.inv()?;
    let s = load.s_l_dq();
    // N v = ½μ v_dc e₂ − Z s,  i = Y_t v + s
    let v = n_inv * (VoltageDq::new(0.0, 0.5 * mu * v_dc) - (z * s).cast());
    let i = (yt * v).cast() + s;
    let dn = dz * yt + z * dy;
    let dv = n_inv * (VoltageDq::new(0.0, 0.5 * mu) - (dz * s).cast() - dn * v);
    let di = (yt * dv + dy * v).cast();
    Ok((i, v, di))
}

/// Steady state under the proportional source, high-voltage branch.
///
/// The DC balance `−(G_dc+K_p) v_dc + i_0 − ½μ i_q(v_dc) = 0` is solved by
/// damped Newton with an analytic derivative, starting from the high branch
/// of the nose curve at the power drawn with `v_dc = v_dc,ref`.
pub fn solve_equilibrium_p(
    p: &ConverterParams,
    dc: &DcControlConfig,
    load: &LoadParams,
    mu: f64,
) -> Result<Equilibrium> {
    ensure_finite(&[mu], "modulation depth")?;
    let eta = dc.eta();
    let g = p.g_dc + dc.k_p;
    let i_0 = dc.i_0();
    let p_max = i_0 * i_0 / (4.0 * g);
    let tip = i_0 / (2.0 * g);
    let f = |v: f64| -> Result<(f64, f64, CurrentDq, VoltageDq)> {
        let (i, vac, di) = ac_response(v, p, load, mu, eta)?;
        Ok((-g * v + i_0 - 0.5 * mu * i.x2, -g - 0.5 * mu * di.x2, i, vac))
    };

    let (i_ref, _, _) = ac_response(dc.v_dc_ref, p, load, mu, eta)?;
    let p_guess = 0.5 * mu * dc.v_dc_ref * i_ref.x2;
    let disc = i_0 * i_0 - 4.0 * g * p_guess;
    let mut v = if disc >= 0.0 { (i_0 + disc.sqrt()) / (2.0 * g) } else { tip };
    let (mut r, mut dr, _, _) = f(v)?;
    let mut converged = false;
    for _ in 0..100 {
        if dr == 0.0 {
            break;
        }
        let mut step = -r / dr;
        let mut trial = f(v + step)?;
        let mut halvings = 0;
        while trial.0.abs() > r.abs() && halvings < 30 {
            step *= 0.5;
            trial = f(v + step)?;
            halvings += 1;
        }
        v += step;
        (r, dr) = (trial.0, trial.1);
        if step.abs() <= 1e-12 * v.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged || !v.is_finite() {
        return Err(Error::BeyondNoseTip {
            p_max,
            reason: format!("Newton iteration did not converge (last v_dc = {v:.6})"),
        });
    }
    if v < tip {
        return Err(Error::BeyondNoseTip {
            p_max,
            reason: format!("only a low-voltage solution exists (v_dc = {v:.6} < {tip:.6})"),
        });
    }
    let (_, _, i, vac) = f(v)?;
    Ok(Equilibrium {
        xi_star: 0.0,
        v_dc_star: v,
        i_dq_star: i,
        v_dq_star: vac,
        mu_star: mu,
        nu_star: 0.0,
        i_dc_star: dc.i_dc_ref - dc.k_p * (v - dc.v_dc_ref),
        load: *load,
    })
}

/// Steady state reached by the load-current feedforward under the PID
/// source.
///
/// For the load current `i_l = Y_l v + s_l` the amplitude condition becomes
/// the same quadratic with `Y` replaced by `Y + Y_l` and `s` by `s_l`; its
/// positive root coincides with the feedforward law evaluated at the steady
/// measured current.
pub fn feedforward_equilibrium(
    p: &ConverterParams,
    dc: &DcControlConfig,
    load: &LoadParams,
    r_ref: f64,
) -> Result<Equilibrium> {
    let z = PlanarOperator::impedance(p.r, p.l, dc.omega0);
    let yt = PlanarOperator::admittance(p.g, p.c, dc.omega0) + load.admittance();
    let s = load.s_l_dq();
    let ps = psi(r_ref, z, yt, s);
    if !(ps > 0.0) {
        return Err(Error::InfeasibleAmplitude { psi: ps });
    }
    let (mu, _) = mu_roots(ps, b_coefficient(z, s, dc.v_dc_ref), dc.v_dc_ref)?;
    solve_equilibrium_pid(p, dc, load, mu)
}

/// Steady state of the voltage droop `μ = μ_ref + d_v (P_l − P_ref)` under the
/// PID source.
///
/// With the DC voltage regulated, `v*` is affine in `μ`, so `P_l` is a
/// quadratic `αμ² + βμ + γ` and the droop law is a scalar quadratic. The
/// root that tends to `μ_ref + d_v(γ − P_ref)` as `d_v → 0` is returned.
pub fn droop_equilibrium(
    p: &ConverterParams,
    dc: &DcControlConfig,
    load: &LoadParams,
    mu_ref: f64,
    d_v: f64,
    p_ref: f64,
) -> Result<Equilibrium> {
    let z = PlanarOperator::impedance(p.r, p.l, dc.omega0);
    let yl = load.admittance();
    let yt = PlanarOperator::admittance(p.g, p.c, dc.omega0) + yl;
    let n_inv = (z * yt + PlanarOperator::IDENTITY).inv()?;
    let s = load.s_l_dq();
    let a_vec = n_inv * VoltageDq::new(0.0, 0.5 * dc.v_dc_ref);
    let c_vec = -(n_inv * (z * s).cast::<crate::frames::Volts>());
    let power = |x: VoltageDq, w: VoltageDq| (yl * x).dot(w);
    let alpha = power(a_vec, a_vec);
    let beta = power(a_vec, c_vec) + power(c_vec, a_vec) + a_vec.dot(s);
    let gamma = power(c_vec, c_vec) + c_vec.dot(s);
    let c = mu_ref + d_v * (gamma - p_ref);
    let lin = 1.0 - d_v * beta;
    let disc = lin * lin - 4.0 * d_v * alpha * c;
    if !(disc >= 0.0) {
        return Err(Error::NoEquilibrium(format!(
            "droop law has no real modulation depth (discriminant {disc:.6e})"
        )));
    }
    let mu = 2.0 * c / (lin + disc.sqrt());
    solve_equilibrium_pid(p, dc, load, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::amplitude::psi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn paper() -> (ConverterParams, DcControlConfig) {
        (ConverterParams::default(), DcControlConfig::default())
    }

    #[test]
    fn unloaded_unmodulated() {
        let (p, dc) = paper();
        let eq = solve_equilibrium_pid(&p, &dc, &LoadParams::default(), 0.0).unwrap();
        assert_eq!(eq.i_dq_star, CurrentDq::ZERO);
        assert_eq!(eq.v_dq_star, VoltageDq::ZERO);
        // DC balance with the reference current: K_i ξ* = i_dc,ref − G_dc v_dc,ref
        assert!((eq.xi_star - (dc.i_dc_ref - p.g_dc * dc.v_dc_ref) / dc.k_i).abs() < 1e-12);
        assert!(eq.max_residual(&p, &dc) < 1e-12);
    }

    #[test]
    fn feedforward_hits_the_amplitude() {
        let (p, dc) = paper();
        for g_l in [0.0, 0.367, 0.367 * 1.55, 0.25] {
            let load = LoadParams::conductance(g_l);
            let eq = feedforward_equilibrium(&p, &dc, &load, 165.0).unwrap();
            assert!((eq.v_dq_star.norm() - 165.0).abs() < 1e-9, "{g_l}: {}", eq.v_dq_star.norm());
            assert!(eq.max_residual(&p, &dc) < 1e-9);

            // The feedforward law fed with the steady measured current gives the same μ.
            let z = PlanarOperator::impedance(p.r, p.l, dc.omega0);
            let y = PlanarOperator::admittance(p.g, p.c, dc.omega0);
            let i_l = load.output_dq(eq.v_dq_star);
            let ps = psi(165.0, z, y, i_l);
            let (mu, _) = mu_roots(ps, b_coefficient(z, i_l, dc.v_dc_ref), dc.v_dc_ref).unwrap();
            assert!((mu - eq.mu_star).abs() < 1e-12, "{mu} vs {}", eq.mu_star);
        }
    }

    #[test]
    fn determinant_identity_spot_check() {
        let (p, dc) = paper();
        let load = LoadParams {
            g_l: 0.3,
            b_l: 0.05,
            ..Default::default()
        };
        let (a, _) = pid_system(&p, &dc, &load, 0.33);
        let z = PlanarOperator::impedance(p.r, p.l, dc.omega0);
        let yt = PlanarOperator::admittance(p.g, p.c, dc.omega0) + load.admittance();
        let n = z * yt + PlanarOperator::IDENTITY;
        let expect = -dc.k_i * n.norm().powi(2);
        assert!((a.determinant() - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn proportional_unloaded() {
        let (p, mut dc) = paper();
        dc.k_i = 0.0;
        let eq = solve_equilibrium_p(&p, &dc, &LoadParams::default(), 0.0).unwrap();
        assert!((eq.v_dc_star - dc.i_0() / (p.g_dc + dc.k_p)).abs() < 1e-9);
    }

    /// Two-converter study gains: residual and high-branch checks.
    #[test]
    fn proportional_network_gains() {
        let mut p = ConverterParams::default();
        p.g_dc = 0.0;
        let dc = DcControlConfig {
            k_p: 2.0,
            k_i: 0.0,
            ..Default::default()
        };
        for g_l in [0.1, 0.367, 0.734] {
            let eq = solve_equilibrium_p(&p, &dc, &LoadParams::conductance(g_l), 0.33).unwrap();
            assert!(eq.max_residual(&p, &dc) < 1e-9, "{:?}", eq.residuals(&p, &dc));
            assert!(eq.v_dc_star >= dc.i_0() / (2.0 * (p.g_dc + dc.k_p)));
        }
    }

    /// Near the nose tip the solver returns the high branch or fails, never the low one.
    #[test]
    fn low_branch_is_never_returned() {
        let mut p = ConverterParams::default();
        p.g_dc = 0.0;
        let dc = DcControlConfig {
            k_p: 2.0,
            k_i: 0.0,
            ..Default::default()
        };
        let tip = dc.i_0() / (2.0 * dc.k_p);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let g_l = rng.random_range(0.0..40.0);
            let mu = rng.random_range(0.05..1.0);
            match solve_equilibrium_p(&p, &dc, &LoadParams::conductance(g_l), mu) {
                Ok(eq) => {
                    assert!(eq.v_dc_star >= tip);
                    assert!(eq.max_residual(&p, &dc) < 1e-9);
                }
                Err(Error::BeyondNoseTip { p_max, .. }) => assert!((p_max - dc.i_0().powi(2) / 8.0).abs() < 1e-6),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn droop_identity() {
        let (p, dc) = paper();
        for g_l in [0.25, 0.3875, 0.367] {
            let load = LoadParams::conductance(g_l);
            let eq = droop_equilibrium(&p, &dc, &load, 0.33, 1e-5, 1e4).unwrap();
            let lhs = eq.mu_star - 0.33;
            let rhs = 1e-5 * (eq.p_l() - 1e4);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
            assert!(eq.max_residual(&p, &dc) < 1e-9);
        }
    }
}
