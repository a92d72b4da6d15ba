//! Adaptive Dormand-Prince 5(4) integration with PI step control, cubic Hermite
//! dense output and post-hoc event location.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{accel_log, accel_rho, LogState, State, DEFAULT_DELTA_MIN};
use crate::params::Params;
use crate::scalar::Real;

/// Controls for [`solve_ivp`].
#[derive(Debug, Clone, Copy)]
pub struct StepConfig<T> {
    /// Local error target, applied as `tol * (atol + |y_i|)` per component.
    pub tol: T,
    /// Absolute part of the error scale; `1` gives mixed control, small values relative control.
    pub atol: T,
    /// Measure `|y|` by the max norm of the whole state instead of per component.
    pub joint_scale: bool,
    /// Absolute floor on the step size; a relative floor of a few ulps of `x` always applies.
    pub h_min: T,
    pub h_max: Option<T>,
    pub h_init: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> StepConfig<T> {
    pub fn new(tol: T) -> Self {
        StepConfig {
            tol,
            atol: T::one(),
            joint_scale: false,
            h_min: T::lit(1e-20),
            h_max: None,
            h_init: None,
            max_steps: 2_000_000,
        }
    }
}

/// Why [`solve_ivp`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Reached,
    Observer,
    Underflow,
}

/// Accepted steps of an integration run: abscissae, states and derivatives.
#[derive(Debug, Clone)]
pub struct Run<T, const D: usize> {
    pub xs: Vec<T>,
    pub ys: Vec<[T; D]>,
    pub fs: Vec<[T; D]>,
    pub stop: Stop,
}

impl<T: Real, const D: usize> Run<T, D> {
    pub fn last(&self) -> (T, [T; D], [T; D]) {
        let i = self.xs.len() - 1;
        (self.xs[i], self.ys[i], self.fs[i])
    }
}

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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<T: Real, const D: usize>(y: &[T; D], h: T, terms: &[(f64, &[T; D])]) -> [T; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

fn finite<T: Real, const D: usize>(y: &[T; D]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// One Dormand-Prince step with FSAL derivative `k1`; returns the new state,
/// its derivative and the scaled error norm.
#[allow(clippy::type_complexity)]
fn dopri_step<T, const D: usize, F>(
    f: &mut F,
    x: T,
    y: &[T; D],
    k1: &[T; D],
    h: T,
    tol: T,
    atol: T,
    joint: bool,
) -> Result<Option<([T; D], [T; D], T)>>
where
    T: Real,
    F: FnMut(T, &[T; D]) -> Result<[T; D]>,
{
    macro_rules! stage {
        ($c:expr, $y:expr) => {{
            let ys = $y;
            if !finite(&ys) {
                return Ok(None);
            }
            let k = f(x + T::lit($c) * h, &ys)?;
            if !finite(&k) {
                return Ok(None);
            }
            k
        }};
    }
    let k2 = stage!(C2, combo(y, h, &[(A21, k1)]));
    let k3 = stage!(C3, combo(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = stage!(C4, combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = stage!(C5, combo(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = stage!(1.0, combo(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y5 = combo(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = stage!(1.0, y5);
    let mut err = T::zero();
    let big = (0..D).fold(T::zero(), |m, i| m.max(y[i].abs()).max(y5[i].abs()));
    for i in 0..D {
        let e = h
            * (T::lit(E1) * k1[i]
                + T::lit(E3) * k3[i]
                + T::lit(E4) * k4[i]
                + T::lit(E5) * k5[i]
                + T::lit(E6) * k6[i]
                + T::lit(E7) * k7[i]);
        let mag = if joint { big } else { y[i].abs().max(y5[i].abs()) };
        let sc = tol * (atol + mag);
        err = err.max((e / sc).abs());
    }
    Ok(Some((y5, k7, err)))
}

fn initial_step<T, const D: usize, F>(
    f: &mut F,
    x0: T,
    y0: &[T; D],
    f0: &[T; D],
    dir: T,
    span: T,
    tol: T,
    atol: T,
    joint: bool,
) -> Result<T>
where
    T: Real,
    F: FnMut(T, &[T; D]) -> Result<[T; D]>,
{
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    let big = y0.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mag = |i: usize| if joint { big } else { y0[i].abs() };
    for i in 0..D {
        let sc = tol * (atol + mag(i));
        d0 = d0.max((y0[i] / sc).abs());
        d1 = d1.max((f0[i] / sc).abs());
    }
    let small = T::lit(1e-5);
    let mut h0 = if d0 < small || d1 < small { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    h0 = h0.min(span);
    let y1 = combo(y0, dir * h0, &[(1.0, f0)]);
    let f1 = f(x0 + dir * h0, &y1)?;
    let mut d2 = T::zero();
    for i in 0..D {
        let sc = tol * (atol + mag(i));
        d2 = d2.max(((f1[i] - f0[i]) / sc).abs() / h0);
    }
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    let h = (T::lit(100.0) * h0).min(h1).min(span);
    Ok(if h.is_finite() && h > T::zero() { h } else { span * T::lit(1e-6) })
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (either direction).
///
/// `observe` is called after each accepted step and may stop the run early by
/// returning `false`.
pub fn solve_ivp<T, const D: usize, F, O>(
    mut f: F,
    x0: T,
    y0: [T; D],
    x_end: T,
    cfg: &StepConfig<T>,
    mut observe: O,
) -> Result<Run<T, D>>
where
    T: Real,
    F: FnMut(T, &[T; D]) -> Result<[T; D]>,
    O: FnMut(T, &[T; D], &[T; D]) -> bool,
{
    let f0 = f(x0, &y0)?;
    let mut run = Run { xs: vec![x0], ys: vec![y0], fs: vec![f0], stop: Stop::Reached };
    if x_end == x0 {
        return Ok(run);
    }
    if !finite(&y0) || !finite(&f0) {
        return Err(Error::Integration { at: x0.to_f64_lossy(), reason: "non-finite initial data".into() });
    }
    let dir = if x_end > x0 { T::one() } else { -T::one() };
    let span = (x_end - x0).abs();
    let mut h = match cfg.h_init {
        Some(h) => h.abs().min(span),
        None => initial_step(&mut f, x0, &y0, &f0, dir, span, cfg.tol, cfg.atol, cfg.joint_scale)?,
    };
    let h_cap = cfg.h_max.map(|m| m.abs()).unwrap_or(span);
    h = h.min(h_cap);
    let (mut x, mut y, mut k1) = (x0, y0, f0);
    let mut err_prev = T::lit(1e-4);
    let safety = T::lit(0.9);
    let (beta1, beta2) = (T::lit(0.7 / 5.0), T::lit(0.4 / 5.0));
    let eps16 = T::epsilon() * T::lit(16.0);
    let mut steps = 0usize;
    loop {
        let remaining = (x_end - x).abs();
        if remaining <= eps16 * x.abs().max(T::one()) * T::lit(0.25) {
            break;
        }
        let h_floor = cfg.h_min.max(eps16 * x.abs());
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        if hs < h_floor && !last {
            run.stop = Stop::Underflow;
            return Ok(run);
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::Integration { at: x.to_f64_lossy(), reason: "step budget exhausted".into() });
        }
        match dopri_step(&mut f, x, &y, &k1, dir * hs, cfg.tol, cfg.atol, cfg.joint_scale)? {
            Some((y5, k7, err)) if err <= T::one() => {
                x = if last { x_end } else { x + dir * hs };
                y = y5;
                k1 = k7;
                run.xs.push(x);
                run.ys.push(y);
                run.fs.push(k1);
                let e = err.max(T::lit(1e-10));
                let fac = safety * e.powf(-beta1) * err_prev.powf(beta2);
                h = (hs * fac.max(T::lit(0.2)).min(T::lit(5.0))).min(h_cap);
                err_prev = e;
                if !observe(x, &y, &k1) {
                    run.stop = Stop::Observer;
                    return Ok(run);
                }
                if last {
                    break;
                }
            }
            Some((_, _, err)) => {
                let fac = safety * err.powf(-T::lit(0.2));
                h = hs * fac.max(T::lit(0.1)).min(T::one());
            }
            None => {
                h = hs * T::lit(0.25);
            }
        }
    }
    Ok(run)
}

/// Cubic Hermite interpolation of a scalar with known endpoint slopes.
pub fn hermite<T: Real>(x0: T, x1: T, y0: T, y1: T, d0: T, d1: T, x: T) -> T {
    let h = x1 - x0;
    if h == T::zero() {
        return y0;
    }
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let h00 = two * t3 - three * t2 + T::one();
    let h10 = t3 - two * t2 + t;
    let h01 = -two * t3 + three * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Quintic Hermite interpolation from values, first and second derivatives at both
/// ends; returns `(y, y', y'')` at `x`.
#[allow(clippy::too_many_arguments)]
pub fn quintic_hermite<T: Real>(x0: T, x1: T, y: [T; 2], d: [T; 2], s: [T; 2], x: T) -> (T, T, T) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let c = |v: f64| T::lit(v);
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let b = [
        c(1.0) - c(10.0) * t3 + c(15.0) * t4 - c(6.0) * t5,
        t - c(6.0) * t3 + c(8.0) * t4 - c(3.0) * t5,
        c(0.5) * t2 - c(1.5) * t3 + c(1.5) * t4 - c(0.5) * t5,
        c(0.5) * t3 - t4 + c(0.5) * t5,
        -c(4.0) * t3 + c(7.0) * t4 - c(3.0) * t5,
        c(10.0) * t3 - c(15.0) * t4 + c(6.0) * t5,
    ];
    let b1 = [
        -c(30.0) * t2 + c(60.0) * t3 - c(30.0) * t4,
        c(1.0) - c(18.0) * t2 + c(32.0) * t3 - c(15.0) * t4,
        t - c(4.5) * t2 + c(6.0) * t3 - c(2.5) * t4,
        c(1.5) * t2 - c(4.0) * t3 + c(2.5) * t4,
        -c(12.0) * t2 + c(28.0) * t3 - c(15.0) * t4,
        c(30.0) * t2 - c(60.0) * t3 + c(30.0) * t4,
    ];
    let b2 = [
        -c(60.0) * t + c(180.0) * t2 - c(120.0) * t3,
        -c(36.0) * t + c(96.0) * t2 - c(60.0) * t3,
        c(1.0) - c(9.0) * t + c(18.0) * t2 - c(10.0) * t3,
        c(3.0) * t - c(12.0) * t2 + c(10.0) * t3,
        -c(24.0) * t + c(84.0) * t2 - c(60.0) * t3,
        c(60.0) * t - c(180.0) * t2 + c(120.0) * t3,
    ];
    let comb = |w: &[T; 6]| {
        w[0] * y[0] + w[1] * h * d[0] + w[2] * h * h * s[0] + w[3] * h * h * s[1] + w[4] * h * d[1] + w[5] * y[1]
    };
    (comb(&b), comb(&b1) / h, comb(&b2) / (h * h))
}

/// Independent variable of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// `x = rho`, `(u, u')`.
    RhoChart,
    /// `x = s = ln rho`, `(z, dz/ds)`.
    LogChart,
}

/// Accepted point `(x, y, y', y'')` in the trajectory's chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub x: T,
    pub u: T,
    pub du: T,
    pub ddu: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    WSignChange,
    USignChange,
    DerivativeSignChange,
    Guard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event<T> {
    pub kind: EventKind,
    /// Location in the chart variable.
    pub location: T,
    pub value_before: T,
    pub value_after: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Status<T> {
    Completed,
    /// `|u|` exceeded the guard; carries the last chart abscissa.
    BlowupGuard(T),
    /// Step size fell below the floor; carries the last chart abscissa.
    StepUnderflow(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub chart: Chart,
    pub samples: Vec<Sample<T>>,
    pub events: Vec<Event<T>>,
    pub status: Status<T>,
    /// Fitted blow-up radius in `rho` units, when the blow-up guard fired.
    pub rho_plus: Option<T>,
}

/// Safeguards applied by [`integrate`] and [`integrate_log`].
#[derive(Debug, Clone, Copy)]
pub struct Guards<T> {
    pub u_max: T,
    pub h_min: T,
}

impl<T: Real> Default for Guards<T> {
    fn default() -> Self {
        Guards { u_max: T::lit(1e8), h_min: T::lit(1e-20) }
    }
}

/// Options of the profile integrators.
#[derive(Debug, Clone, Copy)]
pub struct Options<T> {
    pub tol: T,
    pub guards: Guards<T>,
    pub delta_min: T,
    pub max_steps: usize,
    pub h_max: Option<T>,
    /// Absolute part of the error scale, see [`StepConfig::atol`].
    pub atol: T,
    pub joint_scale: bool,
}

impl<T: Real> Options<T> {
    pub fn new(tol: T) -> Self {
        Options {
            tol,
            guards: Guards::default(),
            delta_min: T::lit(DEFAULT_DELTA_MIN),
            max_steps: 2_000_000,
            h_max: None,
            atol: T::one(),
            joint_scale: false,
        }
    }
}

impl<T: Real> Sample<T> {
    /// The sample as a `rho`-chart state.
    pub fn state(&self, chart: Chart) -> State<T> {
        match chart {
            Chart::RhoChart => State::new(self.x, self.u, self.du),
            Chart::LogChart => LogState { s: self.x, z: self.u, dz: self.du }.to_rho(),
        }
    }
}

fn rho_of<T: Real>(chart: Chart, x: T) -> T {
    match chart {
        Chart::RhoChart => x,
        Chart::LogChart => x.exp(),
    }
}

/// `w = rho^alpha u / b_inf - 1` at chart abscissa `x`.
pub fn w_of<T: Real>(prm: &Params<T>, chart: Chart, x: T, u: T) -> T {
    let rho = rho_of(chart, x);
    rho.powf(prm.alpha) * u / prm.b_inf - T::one()
}

impl<T: Real> Trajectory<T> {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        &self.samples[self.samples.len() - 1]
    }

    /// `(min x, max x)` over the samples.
    pub fn span(&self) -> (T, T) {
        let a = self.first().x;
        let b = self.last().x;
        (a.min(b), a.max(b))
    }

    fn ascending(&self) -> bool {
        self.samples.len() < 2 || self.samples[1].x > self.samples[0].x
    }

    /// Index `i` with `x` between samples `i` and `i+1`.
    pub fn locate(&self, x: T) -> Option<usize> {
        let n = self.samples.len();
        if n < 2 {
            return None;
        }
        let (lo, hi) = self.span();
        if x < lo || x > hi {
            return None;
        }
        let i = if self.ascending() {
            self.samples.partition_point(|s| s.x <= x)
        } else {
            self.samples.partition_point(|s| s.x >= x)
        };
        Some(i.clamp(1, n - 1) - 1)
    }

    /// Hermite interpolation of `(u, du)` at `x` within the sampled span.
    pub fn eval(&self, x: T) -> Option<(T, T)> {
        if self.samples.len() == 1 {
            let s = self.samples[0];
            return (s.x == x).then_some((s.u, s.du));
        }
        let i = self.locate(x)?;
        Some(self.eval_in(i, x))
    }

    /// Hermite interpolation on the step `[x_i, x_{i+1}]`.
    pub fn eval_in(&self, i: usize, x: T) -> (T, T) {
        let a = self.samples[i];
        let b = self.samples[i + 1];
        let u = hermite(a.x, b.x, a.u, b.u, a.du, b.du, x);
        let du = hermite(a.x, b.x, a.du, b.du, a.ddu, b.ddu, x);
        (u, du)
    }

    /// `rho`-chart state at `x` (interpolated).
    pub fn state_at(&self, x: T) -> Option<State<T>> {
        let (u, du) = self.eval(x)?;
        Some(Sample { x, u, du, ddu: T::zero() }.state(self.chart))
    }

    pub fn rho_states(&self) -> Vec<State<T>> {
        self.samples.iter().map(|s| s.state(self.chart)).collect()
    }

    pub fn count_events(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

fn bisect_step<T: Real>(traj: &Trajectory<T>, i: usize, g: impl Fn(T, T, T) -> T) -> T {
    let (mut a, mut b) = (traj.samples[i].x, traj.samples[i + 1].x);
    let ga = {
        let s = traj.samples[i];
        g(s.x, s.u, s.du)
    };
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(4.0)) * a.abs().max(T::one());
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = (a + b) / T::lit(2.0);
        let (u, du) = traj.eval_in(i, m);
        let gm = g(m, u, du);
        if (gm < T::zero()) == (ga < T::zero()) {
            a = m;
        } else {
            b = m;
        }
    }
    (a + b) / T::lit(2.0)
}

/// Zero is grouped with the positive values.
fn sign_change<T: Real>(a: T, b: T) -> bool {
    (a < T::zero()) != (b < T::zero())
}

/// Finds sign changes of `w`, `u` and `du` between adjacent samples and locates
/// each by bisection on the Hermite interpolant.
pub fn detect_events<T: Real>(prm: &Params<T>, traj: &Trajectory<T>) -> Vec<Event<T>> {
    let mut out = Vec::new();
    let chart = traj.chart;
    let wf = |x: T, u: T, _du: T| w_of(prm, chart, x, u);
    let uf = |_x: T, u: T, _du: T| u;
    let df = |_x: T, _u: T, du: T| du;
    let fns: [(&dyn Fn(T, T, T) -> T, EventKind); 3] =
        [(&wf, EventKind::WSignChange), (&uf, EventKind::USignChange), (&df, EventKind::DerivativeSignChange)];
    for i in 0..traj.samples.len().saturating_sub(1) {
        let a = traj.samples[i];
        let b = traj.samples[i + 1];
        for (g, kind) in fns.iter() {
            let ga = g(a.x, a.u, a.du);
            let gb = g(b.x, b.u, b.du);
            if sign_change(ga, gb) {
                let loc = bisect_step(traj, i, g);
                out.push(Event { kind: *kind, location: loc, value_before: ga, value_after: gb });
            }
        }
    }
    out
}

/// Fits `|u| ~ K (x_+ - x)^(-alpha)` through samples within a decade of the final
/// magnitude and returns `x_+`.
fn fit_blowup<T: Real>(alpha: T, samples: &[Sample<T>]) -> Option<T> {
    let last = samples.last()?;
    let floor = last.u.abs() / T::lit(10.0);
    let pts: Vec<(T, T)> = samples
        .iter()
        .rev()
        .take_while(|s| s.u.abs() >= floor)
        .map(|s| (s.x, s.u.abs().powf(-T::one() / alpha)))
        .collect();
    if pts.len() < 2 {
        return Some(last.x);
    }
    let n = T::int(pts.len() as i64);
    let (sx, sy) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for &(x, y) in &pts {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    if sxx == T::zero() || sxy == T::zero() {
        return Some(last.x);
    }
    let slope = sxy / sxx;
    let root = mx - my / slope;
    if root.is_finite() {
        Some(root)
    } else {
        Some(last.x)
    }
}

/// Shared driver: integrates `u'' = accel(x, u, u')` in the given chart and
/// switches to `u` as the independent variable for the final approach to a
/// blow-up, so the guard `u_max` stays reachable when `x` can no longer resolve
/// the distance to the singularity.
fn drive<T, A>(
    prm: &Params<T>,
    chart: Chart,
    x0: T,
    u0: T,
    du0: T,
    x_end: T,
    opts: &Options<T>,
    accel: A,
) -> Result<Trajectory<T>>
where
    T: Real,
    A: Fn(T, T, T) -> T,
{
    let tol = opts.tol;
    let tol_floor = T::lit(1e-13).max(T::epsilon() * T::lit(4.0));
    if !(tol >= tol_floor && tol <= T::lit(1e-6)) {
        return Err(Error::domain(format!("tolerance {tol} outside [{tol_floor}, 1e-6]")));
    }
    let u_max = opts.guards.u_max;
    let u_switch = u_max.sqrt().max(T::lit(100.0) * u0.abs()).min(u_max / T::lit(10.0));
    let dir = if x_end >= x0 { T::one() } else { -T::one() };
    let mut cfg = StepConfig::new(tol);
    cfg.h_min = opts.guards.h_min;
    cfg.max_steps = opts.max_steps;
    cfg.h_max = opts.h_max;
    cfg.atol = opts.atol;
    cfg.joint_scale = opts.joint_scale;

    let mut samples = vec![Sample { x: x0, u: u0, du: du0, ddu: accel(x0, u0, du0) }];
    let mut status = Status::Completed;
    let mut allow_switch = true;
    let mut blown = false;
    loop {
        let start = *samples.last().expect("nonempty");
        let rhs = |x: T, y: &[T; 2]| -> Result<[T; 2]> { Ok([y[1], accel(x, y[0], y[1])]) };
        let watch = |_x: T, y: &[T; 2], _f: &[T; 2]| -> bool {
            let away = y[0] * y[1] * dir > T::zero();
            !(y[0].abs() > u_max || (allow_switch && away && y[0].abs() > u_switch))
        };
        let run = solve_ivp(rhs, start.x, [start.u, start.du], x_end, &cfg, watch)?;
        for i in 1..run.xs.len() {
            samples.push(Sample { x: run.xs[i], u: run.ys[i][0], du: run.ys[i][1], ddu: run.fs[i][1] });
        }
        match run.stop {
            Stop::Reached => break,
            Stop::Underflow => {
                status = Status::StepUnderflow(samples.last().expect("nonempty").x);
                break;
            }
            Stop::Observer => {
                let cur = *samples.last().expect("nonempty");
                if cur.u.abs() > u_max {
                    status = Status::BlowupGuard(cur.x);
                    blown = true;
                    break;
                }
                // hodograph chart: independent variable u, state (x, u')
                let su = cur.u.signum();
                let hrhs = |u: T, y: &[T; 2]| -> Result<[T; 2]> {
                    let inv = T::one() / y[1];
                    Ok([inv, accel(y[0], u, y[1]) * inv])
                };
                let mut tail: Vec<Sample<T>> = Vec::new();
                let mut crossed = false;
                let mut last_x = cur.x;
                let hwatch = |u: T, y: &[T; 2], f: &[T; 2]| -> bool {
                    if (y[0] - x_end) * dir >= T::zero() || y[1] * su * dir <= T::zero() {
                        crossed = true;
                        return false;
                    }
                    if (y[0] - last_x) * dir > T::zero() {
                        tail.push(Sample { x: y[0], u, du: y[1], ddu: f[1] * y[1] });
                        last_x = y[0];
                    }
                    true
                };
                let hrun = solve_ivp(hrhs, cur.u, [cur.x, cur.du], su * u_max, &cfg, hwatch);
                match hrun {
                    Ok(r) if r.stop == Stop::Reached && !crossed => {
                        samples.extend(tail);
                        let (ue, ye, _) = r.last();
                        let xl = samples.last().expect("nonempty").x;
                        let fx = if (ye[0] - xl) * dir > T::zero() { ye[0] } else { xl };
                        let end = Sample { x: fx, u: ue, du: ye[1], ddu: accel(fx, ue, ye[1]) };
                        if fx != xl || samples.len() < 2 {
                            samples.push(end);
                        } else {
                            *samples.last_mut().expect("nonempty") = end;
                        }
                        status = Status::BlowupGuard(samples.last().expect("nonempty").x);
                        blown = true;
                        break;
                    }
                    _ => {
                        samples.extend(tail.into_iter().filter(|s| (s.x - x_end) * dir < T::zero()));
                        allow_switch = false;
                    }
                }
            }
        }
    }
    let mut traj = Trajectory { chart, samples, events: Vec::new(), status, rho_plus: None };
    traj.events = detect_events(prm, &traj);
    let end = traj.last().x;
    match status {
        Status::Completed => {}
        _ => traj.events.push(Event {
            kind: EventKind::Guard,
            location: end,
            value_before: traj.last().u,
            value_after: traj.last().u,
        }),
    }
    if blown {
        traj.rho_plus = fit_blowup(prm.alpha, &traj.samples).map(|x| rho_of(chart, x));
    }
    Ok(traj)
}

fn near<T: Real>(x: T, y: T, d: T) -> bool {
    (x - y).abs() < d
}

/// Integrates the profile equation in the `rho` chart from `seed` to `target_rho`.
pub fn integrate<T: Real>(prm: &Params<T>, seed: State<T>, target_rho: T, opts: &Options<T>) -> Result<Trajectory<T>> {
    let (one, zero) = (T::one(), T::zero());
    let (a, b) = (seed.rho, target_rho);
    if !seed.is_finite() || !b.is_finite() {
        return Err(Error::domain("non-finite seed or target"));
    }
    let side = |r: T| if r < one { 0 } else { 1 };
    if a <= zero || b <= zero || a == one || b == one || side(a) != side(b) {
        return Err(Error::Chart { from: a.to_f64_lossy(), to: b.to_f64_lossy() });
    }
    let d = opts.delta_min;
    for r in [a, b] {
        if r < d || near(r, one, d) {
            return Err(Error::Singularity { rho: r.to_f64_lossy() });
        }
    }
    drive(prm, Chart::RhoChart, a, seed.u, seed.du, b, opts, |x, u, du| accel_rho(prm, x, u, du))
}

/// Integrates the exterior equation in the log chart `s = ln rho > 0`.
pub fn integrate_log<T: Real>(
    prm: &Params<T>,
    seed: LogState<T>,
    target_s: T,
    opts: &Options<T>,
) -> Result<Trajectory<T>> {
    let zero = T::zero();
    if !(seed.s.is_finite() && seed.z.is_finite() && seed.dz.is_finite() && target_s.is_finite()) {
        return Err(Error::domain("non-finite seed or target"));
    }
    if seed.s <= zero || target_s <= zero {
        return Err(Error::Chart { from: seed.s.exp().to_f64_lossy(), to: target_s.exp().to_f64_lossy() });
    }
    let d = opts.delta_min;
    for s in [seed.s, target_s] {
        if s < d {
            return Err(Error::Singularity { rho: s.exp().to_f64_lossy() });
        }
    }
    drive(prm, Chart::LogChart, seed.s, seed.z, seed.dz, target_s, opts, |s, z, dz| accel_log(prm, s, z, dz))
}
