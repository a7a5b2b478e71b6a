//! Explicit Runge–Kutta integration with dense output and terminal events.
//!
//! The adaptive method is the Dormand–Prince 5(4) pair with a PI step size
//! controller; the fixed method is classical RK4. Both record accepted steps
//! together with the derivative at each node, so the trajectory can be
//! evaluated anywhere by cubic Hermite interpolation.

mod scenario;

pub use scenario::*;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Adapter turning a closure into an [`OdeSystem`].
pub struct FnSystem<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.f)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Rk45,
    /// Classical RK4 with constant step `dt_init`.
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// First trial step (adaptive) or the step itself (fixed).
    pub dt_init: f64,
    pub dt_max: f64,
    pub t_end: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            rtol: 1e-8,
            atol: 1e-10,
            dt_init: 1e-3,
            dt_max: 1.0,
            t_end: 500.0,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.dt_init > 0.0
            && self.dt_max > 0.0
            && self.t_end.is_finite()
            && self.t_end >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidSettings(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),
    #[error("step size underflow at t = {t} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64, partial: Box<Trajectory> },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64, partial: Box<Trajectory> },
    #[error("state has dimension {got}, system expects {expected}")]
    Dimension { expected: usize, got: usize },
}

/// Accepted integration nodes with derivatives for Hermite interpolation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.y.last().map(Vec::as_slice)
    }

    fn push(&mut self, t: f64, y: &[f64], dy: &[f64]) {
        self.t.push(t);
        self.y.push(y.to_vec());
        self.dy.push(dy.to_vec());
    }

    /// State at `t`, clamped to the recorded interval.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let n = self.t.len();
        assert!(n > 0, "sampling an empty trajectory");
        if n == 1 || t <= self.t[0] {
            return self.y[0].clone();
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1].clone();
        }
        let i = self.t.partition_point(|&s| s <= t) - 1;
        hermite(
            self.t[i],
            &self.y[i],
            &self.dy[i],
            self.t[i + 1],
            &self.y[i + 1],
            &self.dy[i + 1],
            t,
        )
    }

    /// CSV with the given column names after `t`, one row per node.
    pub fn to_csv(&self, columns: &[String]) -> String {
        let mut out = String::from("t");
        for c in columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (t, y) in self.t.iter().zip(&self.y) {
            write!(out, "{t}").unwrap();
            for v in y {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Cubic Hermite interpolant between `(t0, y0, f0)` and `(t1, y1, f1)`.
pub fn hermite(t0: f64, y0: &[f64], f0: &[f64], t1: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

/// Terminal event: integration stops at the first downward zero crossing of
/// `g(t, y)`, i.e. where `g` goes from positive to nonpositive.
pub struct Event<'a> {
    pub g: Box<dyn Fn(f64, &[f64]) -> f64 + Sync + 'a>,
}

impl<'a> Event<'a> {
    pub fn new(g: impl Fn(f64, &[f64]) -> f64 + Sync + 'a) -> Self {
        Self { g: Box::new(g) }
    }

    /// Fires when component `i` falls to `level`.
    pub fn below(i: usize, level: f64) -> Self {
        Self::new(move |_, y| y[i] - level)
    }
}

/// Event bracket tolerance on time.
pub const EVENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Nodes; only the first and last are kept unless recording was asked for.
    pub trajectory: Trajectory,
    /// Index of the event that stopped integration and the located time.
    pub event: Option<(usize, f64)>,
    pub t_final: f64,
    pub y_final: Vec<f64>,
    pub n_steps: usize,
    pub n_rejected: usize,
}

pub struct Integrator<'a> {
    pub settings: &'a IntegratorSettings,
    pub events: Vec<Event<'a>>,
    /// Keep every accepted node.
    pub record: bool,
}

impl<'a> Integrator<'a> {
    pub fn new(settings: &'a IntegratorSettings) -> Self {
        Self {
            settings,
            events: Vec::new(),
            record: true,
        }
    }

    pub fn with_events(mut self, events: Vec<Event<'a>>) -> Self {
        self.events = events;
        self
    }

    pub fn recording(mut self, record: bool) -> Self {
        self.record = record;
        self
    }

    /// Integrate from `(t0, y0)` to `t0 + settings.t_end`.
    pub fn run(&self, sys: &dyn OdeSystem, t0: f64, y0: &[f64]) -> Result<Solution, SolverError> {
        self.run_to(sys, t0, y0, t0 + self.settings.t_end)
    }

    pub fn run_to(&self, sys: &dyn OdeSystem, t0: f64, y0: &[f64], t1: f64) -> Result<Solution, SolverError> {
        self.settings.validate()?;
        if y0.len() != sys.dim() {
            return Err(SolverError::Dimension {
                expected: sys.dim(),
                got: y0.len(),
            });
        }
        match self.settings.method {
            Method::Rk45 => self.dopri(sys, t0, y0, t1),
            Method::Rk4 => self.rk4(sys, t0, y0, t1),
        }
    }

    /// Check events over an accepted step. Returns the earliest firing event
    /// and its located time, with the state there.
    #[allow(clippy::too_many_arguments)]
    fn locate(
        &self,
        g_prev: &mut [f64],
        t0: f64,
        y0: &[f64],
        f0: &[f64],
        t1: f64,
        y1: &[f64],
        f1: &[f64],
    ) -> Option<(usize, f64, Vec<f64>)> {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (idx, ev) in self.events.iter().enumerate() {
            let ga = g_prev[idx];
            let gb = (ev.g)(t1, y1);
            if ga > 0.0 && gb <= 0.0 {
                let (mut lo, mut hi) = (t0, t1);
                while hi - lo > EVENT_TOL {
                    let mid = 0.5 * (lo + hi);
                    let ym = hermite(t0, y0, f0, t1, y1, f1, mid);
                    if (ev.g)(mid, &ym) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if best.as_ref().is_none_or(|b| hi < b.1) {
                    let y_hit = if hi == t1 {
                        y1.to_vec()
                    } else {
                        hermite(t0, y0, f0, t1, y1, f1, hi)
                    };
                    best = Some((idx, hi, y_hit));
                }
            }
            g_prev[idx] = gb;
        }
        best
    }

    fn initial_g(&self, t: f64, y: &[f64]) -> Vec<f64> {
        self.events.iter().map(|e| (e.g)(t, y)).collect()
    }

    fn dopri(&self, sys: &dyn OdeSystem, t0: f64, y0: &[f64], t1: f64) -> Result<Solution, SolverError> {
        let s = self.settings;
        let n = y0.len();
        let span = (t1 - t0).abs();
        let mut traj = Trajectory::default();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        sys.rhs(t, &y, &mut k1);
        traj.push(t, &y, &k1);
        let mut g_prev = self.initial_g(t, &y);

        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        let mut k5 = vec![0.0; n];
        let mut k6 = vec![0.0; n];
        let mut k7 = vec![0.0; n];
        let mut yt = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        let mut h = s.dt_init.min(s.dt_max).min(span.max(f64::MIN_POSITIVE));
        let mut err_prev: f64 = 1e-4;
        let mut n_steps = 0;
        let mut n_rejected = 0;
        let mut last_rejected = false;
        let mut event = None;

        while t < t1 {
            if h < 1e-14 * span.max(1.0) {
                return Err(SolverError::StepUnderflow {
                    t,
                    dt: h,
                    partial: Box::new(close(traj, t, &y, &k1)),
                });
            }
            let last = t + h >= t1;
            if last {
                h = t1 - t;
            }
            for i in 0..n {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            sys.rhs(t + C2 * h, &yt, &mut k2);
            for i in 0..n {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            sys.rhs(t + C3 * h, &yt, &mut k3);
            for i in 0..n {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            sys.rhs(t + C4 * h, &yt, &mut k4);
            for i in 0..n {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            sys.rhs(t + C5 * h, &yt, &mut k5);
            for i in 0..n {
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            sys.rhs(t + h, &yt, &mut k6);
            for i in 0..n {
                y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let t_new = if last { t1 } else { t + h };
            sys.rhs(t_new, &y_new, &mut k7);

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = s.atol + s.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                if y_new.iter().all(|v| v.is_finite()) || h < 1e-14 * span.max(1.0) {
                    return Err(SolverError::NonFinite {
                        t,
                        partial: Box::new(close(traj, t, &y, &k1)),
                    });
                }
                h *= 0.1;
                n_rejected += 1;
                last_rejected = true;
                continue;
            }

            if err <= 1.0 {
                n_steps += 1;
                let err_c = err.max(1e-10);
                let mut fac = SAFETY * err_c.powf(-PI_ALPHA) * err_prev.powf(PI_BETA);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                err_prev = err_c;
                last_rejected = false;

                if let Some((idx, te, ye)) = self.locate(&mut g_prev, t, &y, &k1, t_new, &y_new, &k7) {
                    let mut fe = vec![0.0; n];
                    sys.rhs(te, &ye, &mut fe);
                    traj.push(te, &ye, &fe);
                    event = Some((idx, te));
                    t = te;
                    y = ye;
                    k1 = fe;
                    break;
                }
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                if self.record || t >= t1 {
                    traj.push(t, &y, &k1);
                }
                h = (h * fac).min(s.dt_max);
            } else {
                n_rejected += 1;
                last_rejected = true;
                let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                h *= fac;
            }
        }
        let trajectory = close(traj, t, &y, &k1);
        Ok(Solution {
            trajectory,
            event,
            t_final: t,
            y_final: y,
            n_steps,
            n_rejected,
        })
    }

    fn rk4(&self, sys: &dyn OdeSystem, t0: f64, y0: &[f64], t1: f64) -> Result<Solution, SolverError> {
        let n = y0.len();
        let h0 = self.settings.dt_init;
        let mut traj = Trajectory::default();
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut f = vec![0.0; n];
        sys.rhs(t, &y, &mut f);
        traj.push(t, &y, &f);
        let mut g_prev = self.initial_g(t, &y);
        let (mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut yt = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut f_new = vec![0.0; n];
        let mut event = None;
        let mut n_steps = 0;
        // Step count fixed up front so that step times are exact multiples.
        let total = ((t1 - t0) / h0 - 1e-9).ceil().max(0.0) as usize;
        for step in 0..total {
            let t_next = if step + 1 == total {
                t1
            } else {
                t0 + (step + 1) as f64 * h0
            };
            let h = t_next - t;
            for i in 0..n {
                yt[i] = y[i] + 0.5 * h * f[i];
            }
            sys.rhs(t + 0.5 * h, &yt, &mut k2);
            for i in 0..n {
                yt[i] = y[i] + 0.5 * h * k2[i];
            }
            sys.rhs(t + 0.5 * h, &yt, &mut k3);
            for i in 0..n {
                yt[i] = y[i] + h * k3[i];
            }
            sys.rhs(t + h, &yt, &mut k4);
            for i in 0..n {
                y_new[i] = y[i] + h / 6.0 * (f[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if y_new.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite {
                    t,
                    partial: Box::new(close(traj, t, &y, &f)),
                });
            }
            sys.rhs(t_next, &y_new, &mut f_new);
            n_steps += 1;
            if let Some((idx, te, ye)) = self.locate(&mut g_prev, t, &y, &f, t_next, &y_new, &f_new) {
                let mut fe = vec![0.0; n];
                sys.rhs(te, &ye, &mut fe);
                traj.push(te, &ye, &fe);
                event = Some((idx, te));
                t = te;
                y = ye;
                f = fe;
                break;
            }
            t = t_next;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut f, &mut f_new);
            if self.record {
                traj.push(t, &y, &f);
            }
        }
        let trajectory = close(traj, t, &y, &f);
        Ok(Solution {
            trajectory,
            event,
            t_final: t,
            y_final: y,
            n_steps,
            n_rejected: 0,
        })
    }
}

/// Make sure the final node is the last recorded one.
fn close(mut traj: Trajectory, t: f64, y: &[f64], f: &[f64]) -> Trajectory {
    if traj.t.last() != Some(&t) {
        traj.push(t, y, f);
    }
    traj
}

// Dormand–Prince 5(4) coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn decay() -> FnSystem<impl Fn(f64, &[f64], &mut [f64])> {
        FnSystem {
            dim: 1,
            f: |_, y: &[f64], dy: &mut [f64]| dy[0] = -y[0],
        }
    }

    fn tight() -> IntegratorSettings {
        IntegratorSettings {
            rtol: 1e-10,
            atol: 1e-12,
            ..Default::default()
        }
    }

    #[test]
    fn exponential_decay() {
        let s = IntegratorSettings { t_end: 1.0, ..tight() };
        let sol = Integrator::new(&s).run(&decay(), 0.0, &[1.0]).unwrap();
        assert_eq!(sol.t_final, 1.0);
        assert!((sol.y_final[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn cosine_forcing() {
        let sys = FnSystem {
            dim: 1,
            f: |t: f64, _: &[f64], dy: &mut [f64]| dy[0] = t.cos(),
        };
        // Cubic Hermite interpolation errs by up to h⁴/384 · max|y⁗|, so
        // cap the step for the dense-output check.
        let s = IntegratorSettings {
            t_end: PI,
            dt_max: 0.05,
            ..tight()
        };
        let sol = Integrator::new(&s).run(&sys, 0.0, &[0.0]).unwrap();
        assert!(sol.y_final[0].abs() < 1e-8);
        for i in 0..50 {
            let t = PI * i as f64 / 49.0;
            assert!((sol.trajectory.sample(t)[0] - t.sin()).abs() < 1e-7);
        }
    }

    #[test]
    fn rk4_fixed_step() {
        let s = IntegratorSettings {
            method: Method::Rk4,
            dt_init: 0.01,
            t_end: 1.0,
            ..Default::default()
        };
        let sol = Integrator::new(&s).run(&decay(), 0.0, &[1.0]).unwrap();
        assert_eq!(sol.n_steps, 100);
        assert_eq!(sol.t_final, 1.0);
        assert!((sol.y_final[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn event_located_to_tolerance() {
        let s = IntegratorSettings { t_end: 10.0, ..tight() };
        for method in [Method::Rk45, Method::Rk4] {
            let s = IntegratorSettings {
                method,
                dt_init: 0.05,
                ..s.clone()
            };
            let sol = Integrator::new(&s)
                .with_events(vec![Event::below(0, 0.5)])
                .run(&decay(), 0.0, &[1.0])
                .unwrap();
            let (idx, te) = sol.event.unwrap();
            assert_eq!(idx, 0);
            assert!((te - 2f64.ln()).abs() < 1e-7, "{method:?}: {te}");
            assert!((sol.y_final[0] - 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn earliest_event_wins() {
        let sys = FnSystem {
            dim: 2,
            f: |_, y: &[f64], dy: &mut [f64]| {
                dy[0] = -y[0];
                dy[1] = -2.0 * y[1];
            },
        };
        let s = IntegratorSettings { t_end: 10.0, ..tight() };
        let sol = Integrator::new(&s)
            .with_events(vec![Event::below(0, 0.1), Event::below(1, 0.1)])
            .run(&sys, 0.0, &[1.0, 1.0])
            .unwrap();
        assert_eq!(sol.event.unwrap().0, 1);
    }

    #[test]
    fn blow_up_reports_failure() {
        let sys = FnSystem {
            dim: 1,
            f: |_, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0],
        };
        let s = IntegratorSettings {
            t_end: 2.0,
            ..Default::default()
        };
        let err = Integrator::new(&s).run(&sys, 0.0, &[1.0]).unwrap_err();
        match err {
            SolverError::StepUnderflow { partial, .. } | SolverError::NonFinite { partial, .. } => {
                assert!(*partial.t.last().unwrap() < 1.0 + 1e-6);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unrecorded_run_keeps_endpoints() {
        let s = IntegratorSettings {
            t_end: 5.0,
            ..Default::default()
        };
        let sol = Integrator::new(&s).recording(false).run(&decay(), 0.0, &[1.0]).unwrap();
        assert_eq!(sol.trajectory.len(), 2);
        assert_eq!(sol.trajectory.t, vec![0.0, 5.0]);
    }

    #[test]
    fn csv_header() {
        let s = IntegratorSettings {
            method: Method::Rk4,
            dt_init: 0.5,
            t_end: 1.0,
            ..Default::default()
        };
        let sol = Integrator::new(&s).run(&decay(), 0.0, &[1.0]).unwrap();
        let csv = sol.trajectory.to_csv(&["P1".to_string()]);
        assert!(csv.starts_with("t,P1\n0,1\n0.5,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
