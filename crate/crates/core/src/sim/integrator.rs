//! Classical fourth-order Runge–Kutta on fixed-size state arrays.

use crate::error::{Error, Result};

/// A vector field `ẋ = f(t, x)` on `ℝᴺ`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, x: &[f64; N], dx: &mut [f64; N]) -> Result<()>;
}

impl<const N: usize, F> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N], &mut [f64; N]),
{
    fn rhs(&self, t: f64, x: &[f64; N], dx: &mut [f64; N]) -> Result<()> {
        self(t, x, dx);
        Ok(())
    }
}

fn axpy<const N: usize>(x: &[f64; N], k: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *x;
    for (o, d) in out.iter_mut().zip(k) {
        *o += h * d;
    }
    out
}

fn blowup<const N: usize>(t: f64, x: &[f64; N]) -> Error {
    Error::Blowup {
        t,
        step: 0,
        state: x.to_vec(),
    }
}

/// One RK4 step. A non-finite stage, or a stage the vector field rejects
/// as non-finite, is reported as a blow-up carrying the state at the
/// start of the step.
pub fn rk4_step<const N: usize, S: OdeSystem<N> + ?Sized>(sys: &S, t: f64, x: &[f64; N], dt: f64) -> Result<[f64; N]> {
    let stage = |t: f64, y: &[f64; N]| -> Result<[f64; N]> {
        let mut d = [0.0; N];
        match sys.rhs(t, y, &mut d) {
            Ok(()) if d.iter().all(|v| v.is_finite()) => Ok(d),
            Ok(()) | Err(Error::NonFinite(_)) => Err(blowup(t, x)),
            Err(e) => Err(e),
        }
    };
    let h = 0.5 * dt;
    let k1 = stage(t, x)?;
    let k2 = stage(t + h, &axpy(x, &k1, h))?;
    let k3 = stage(t + h, &axpy(x, &k2, h))?;
    let k4 = stage(t + dt, &axpy(x, &k3, dt))?;
    let mut out = *x;
    let w = dt / 6.0;
    for i in 0..N {
        out[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(blowup(t, x));
    }
    Ok(out)
}

/// Fixed-step stepper that keeps its own step counter for diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct Rk4 {
    pub dt: f64,
    pub step: u64,
}

impl Rk4 {
    pub fn new(dt: f64) -> Self {
        Self { dt, step: 0 }
    }

    /// Time of the current step; computed from the counter so it does not drift.
    pub fn t(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn advance<const N: usize, S: OdeSystem<N> + ?Sized>(&mut self, sys: &S, x: &mut [f64; N]) -> Result<()> {
        let t = self.t();
        match rk4_step(sys, t, x, self.dt) {
            Ok(next) => {
                *x = next;
                self.step += 1;
                Ok(())
            }
            Err(Error::Blowup { t, state, .. }) => Err(Error::Blowup {
                t,
                step: self.step,
                state,
            }),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_rate_is_exact() {
        let f = |_t: f64, _x: &[f64; 1], d: &mut [f64; 1]| d[0] = 314.159;
        let mut x = [0.25];
        let mut s = Rk4::new(1e-3);
        for _ in 0..1000 {
            s.advance(&f, &mut x).unwrap();
        }
        assert!((x[0] - (0.25 + 314.159)).abs() < 1e-10);
    }

    #[test]
    fn cubic_in_time_is_exact() {
        let f = |t: f64, _x: &[f64; 1], d: &mut [f64; 1]| d[0] = 3.0 * t * t;
        let x = rk4_step(&f, 0.5, &[0.125], 0.5).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    fn oscillator_error(steps: usize) -> f64 {
        let w = 2.0 * PI * 50.0;
        let f = move |_t: f64, x: &[f64; 2], d: &mut [f64; 2]| {
            d[0] = -w * x[1];
            d[1] = w * x[0];
        };
        let dt = 0.02 / steps as f64;
        let mut s = Rk4::new(dt);
        let mut x = [1.0, 0.0];
        for _ in 0..steps {
            s.advance(&f, &mut x).unwrap();
        }
        ((x[0] - 1.0).powi(2) + x[1].powi(2)).sqrt()
    }

    #[test]
    fn fourth_order_convergence() {
        let e1 = oscillator_error(200);
        let e2 = oscillator_error(400);
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn lossless_lc_energy_drift() {
        let (l, c) = (5e-4, 1e-5);
        let f = move |_t: f64, x: &[f64; 2], d: &mut [f64; 2]| {
            d[0] = -x[1] / l;
            d[1] = x[0] / c;
        };
        let energy = |x: &[f64; 2]| 0.5 * (l * x[0] * x[0] + c * x[1] * x[1]);
        let mut x = [10.0, 0.0];
        let e0 = energy(&x);
        let dt = 1e-6;
        let mut s = Rk4::new(dt);
        for _ in 0..10_000 {
            s.advance(&f, &mut x).unwrap();
        }
        let drift = (e0 - energy(&x)) / e0;
        // RK4 on ẋ = iωx multiplies by R(ih) = 1 − h²/2 + h⁴/24 + i(h − h³/6),
        // so the energy shrinks by exactly |R|^(2n); at ω = 1/√(LC) this is ≈ 1.11e-9
        let h = dt / (l * c).sqrt();
        let (re, im) = (1.0 - h * h / 2.0 + h.powi(4) / 24.0, h - h.powi(3) / 6.0);
        let predicted = 1.0 - (re * re + im * im).powi(10_000);
        assert!(drift > 0.0, "RK4 is dissipative on oscillators");
        assert!(((drift - predicted) / predicted).abs() < 1e-3, "{drift} vs {predicted}");
        assert!(drift < 1.2e-9, "{drift}");
    }

    #[test]
    fn blowup_is_reported_with_step() {
        let f = |_t: f64, x: &[f64; 1], d: &mut [f64; 1]| d[0] = x[0] * x[0];
        let mut x = [1.0];
        let mut s = Rk4::new(0.1);
        let err = (0..100).try_for_each(|_| s.advance(&f, &mut x)).unwrap_err();
        match err {
            Error::Blowup { step, state, .. } => {
                assert!(step > 0);
                assert_eq!(state.len(), 1);
            }
            e => panic!("{e}"),
        }
    }
}
