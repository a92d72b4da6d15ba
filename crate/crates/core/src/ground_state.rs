//! The regular solution `Q` of `Q'' + (N-1)/r Q' + |Q|^(p-1) Q = 0`, `Q(0) = 1`,
//! which the left family approaches near the origin as `c -> infinity`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{hermite, solve_ivp, StepConfig, Stop};
use crate::params::Params;
use crate::scalar::Real;

/// Seed radius of the Taylor start.
pub const GROUND_STATE_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundSample<T> {
    pub r: T,
    pub q: T,
    pub dq: T,
    /// `r^alpha Q / b_inf`.
    pub v: T,
    /// `r^2 V'^2 / 2 - alpha(N-2-alpha) (V^2/2 - |V|^(p+1)/(p+1))`.
    pub e: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateTrace<T> {
    pub samples: Vec<GroundSample<T>>,
    pub r_max: T,
}

/// Limits checked at the end of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateLimits<T> {
    pub r: T,
    pub v: T,
    /// `r V'(r)`.
    pub r_dv: T,
    pub e: T,
    /// `-alpha(N-2-alpha)(1/2 - 1/(p+1))`.
    pub e_limit: T,
    /// Largest positive increment of `E` between consecutive samples.
    pub e_increase: T,
}

fn q_accel<T: Real>(prm: &Params<T>, r: T, q: T, dq: T) -> T {
    -(prm.dim() - T::one()) / r * dq - q.signed_pow(prm.p)
}

/// `(V, V')` from `(r, Q, Q')`.
fn scaled<T: Real>(prm: &Params<T>, r: T, q: T, dq: T) -> (T, T) {
    let ra = r.powf(prm.alpha);
    ((ra * q) / prm.b_inf, (ra * dq + prm.alpha * ra / r * q) / prm.b_inf)
}

pub fn energy<T: Real>(prm: &Params<T>, r: T, q: T, dq: T) -> T {
    let two = T::lit(2.0);
    let (v, dv) = scaled(prm, r, q, dq);
    r * r * dv * dv / two - prm.sing_coeff() * (v * v / two - v.abs_pow(prm.p + T::one()) / (prm.p + T::one()))
}

/// `E'(r) = -r (N-2-2 alpha) V'^2`.
pub fn energy_rate<T: Real>(prm: &Params<T>, r: T, q: T, dq: T) -> T {
    let (_, dv) = scaled(prm, r, q, dq);
    -r * (prm.dim() - T::lit(2.0) - T::lit(2.0) * prm.alpha) * dv * dv
}

/// Two-term Taylor start `Q = 1 - r^2/(2N)`.
pub fn taylor_seed<T: Real>(prm: &Params<T>, r: T) -> (T, T) {
    let nf = prm.dim();
    (T::one() - r * r / (T::lit(2.0) * nf), -r / nf)
}

fn check_params<T: Real>(prm: &Params<T>) -> Result<()> {
    if !(prm.alpha < (prm.dim() - T::lit(2.0)) / T::lit(2.0)) {
        return Err(Error::domain("the ground state limits need p > 1 + 4/(N-2)"));
    }
    Ok(())
}

pub fn solve_q<T: Real>(prm: &Params<T>, r_max: T, tol: T) -> Result<GroundStateTrace<T>> {
    check_params(prm)?;
    if !(r_max >= T::lit(10.0) && r_max <= T::lit(1e5)) {
        return Err(Error::domain(format!("r_max = {r_max} outside [10, 1e5]")));
    }
    let d = T::lit(GROUND_STATE_DELTA);
    let (q0, dq0) = taylor_seed(prm, d);
    let run = solve_ivp(
        |r, y: &[T; 2]| Ok([y[1], q_accel(prm, r, y[0], y[1])]),
        d,
        [q0, dq0],
        r_max,
        &StepConfig::new(tol),
        |_, _, _| true,
    )?;
    if run.stop != Stop::Reached {
        return Err(Error::Integration { at: run.last().0.to_f64_lossy(), reason: "step size underflow".into() });
    }
    let samples = run
        .xs
        .iter()
        .zip(&run.ys)
        .map(|(&r, y)| {
            let (v, _) = scaled(prm, r, y[0], y[1]);
            GroundSample { r, q: y[0], dq: y[1], v, e: energy(prm, r, y[0], y[1]) }
        })
        .collect();
    Ok(GroundStateTrace { samples, r_max })
}

impl<T: Real> GroundStateTrace<T> {
    /// `(Q, Q')` by Hermite interpolation, `None` outside the span.
    pub fn eval(&self, prm: &Params<T>, r: T) -> Option<(T, T)> {
        let s = &self.samples;
        if s.is_empty() || r < s[0].r || r > s[s.len() - 1].r {
            return None;
        }
        let i = s.partition_point(|x| x.r <= r).clamp(1, s.len() - 1);
        let (a, b) = (s[i - 1], s[i]);
        let (da, db) = (q_accel(prm, a.r, a.q, a.dq), q_accel(prm, b.r, b.q, b.dq));
        Some((hermite(a.r, b.r, a.q, b.q, a.dq, b.dq, r), hermite(a.r, b.r, a.dq, b.dq, da, db, r)))
    }

    pub fn limits(&self, prm: &Params<T>) -> GroundStateLimits<T> {
        let last = self.samples[self.samples.len() - 1];
        let (v, dv) = scaled(prm, last.r, last.q, last.dq);
        let e_increase = self.samples.windows(2).map(|w| w[1].e - w[0].e).fold(T::zero(), |m, d| m.max(d));
        let one = T::one();
        GroundStateLimits {
            r: last.r,
            v,
            r_dv: last.r * dv,
            e: last.e,
            e_limit: -prm.sing_coeff() * (one / T::lit(2.0) - one / (prm.p + one)),
            e_increase,
        }
    }
}

/// `sup_{delta <= r <= M} |u~ - Q| + |u~' - Q'|` for `u~(r) = u(c^(-(p-1)/2) r, c) / c`.
///
/// The difference is of order `eps = c^-(p-1)`, far below the resolution of the two
/// solutions separately, so the rescaled left-family equation is integrated for
/// `G = (u~ - Q)/eps` alongside `Q`:
///
/// ```text
/// (1 - eps r^2) G'' + (N-1)/r G' - r^2 Q'' - 2(a+1) r (Q' + eps G') - a(a+1)(Q + eps G)
///     + (f(Q + eps G) - f(Q))/eps = 0
/// ```
pub fn rescaling_check<T: Real>(prm: &Params<T>, c: T, m: T, tol: T) -> Result<T> {
    check_params(prm)?;
    if !(c >= T::lit(10.0)) || !c.is_finite() {
        return Err(Error::domain(format!("c = {c} must be at least 10")));
    }
    if !(m >= T::one() && m <= T::lit(50.0)) {
        return Err(Error::domain(format!("M = {m} outside [1, 50]")));
    }
    let one = T::one();
    let two = T::lit(2.0);
    let eps = c.powf(-(prm.p - one));
    if !(m * m * eps < T::lit(0.25)) {
        return Err(Error::domain("M c^(-(p-1)/2) must stay well inside the light cone"));
    }
    let a1 = prm.alpha + one;
    let aa = prm.alpha * a1;
    let nm1 = prm.dim() - one;
    let p = prm.p;
    let df = |q: T, h: T| -> T {
        if q > T::zero() && (h / q).abs() < T::lit(1e-4) {
            // Taylor expansion of the difference quotient
            let f1 = p * q.powf(p - one);
            let f2 = p * (p - one) * q.powf(p - two);
            let f3 = p * (p - one) * (p - two) * q.powf(p - T::lit(3.0));
            let g = h / eps;
            g * (f1 + h * (f2 / two + h * f3 / T::lit(6.0)))
        } else {
            ((q + h).signed_pow(p) - q.signed_pow(p)) / eps
        }
    };
    let rhs = |r: T, y: &[T; 4]| -> Result<[T; 4]> {
        let (q, dq, g, dg) = (y[0], y[1], y[2], y[3]);
        let ddq = q_accel(prm, r, q, dq);
        let forcing = r * r * ddq + two * a1 * r * (dq + eps * dg) + aa * (q + eps * g) - df(q, eps * g);
        let ddg = (forcing - nm1 / r * dg) / (one - eps * r * r);
        Ok([dq, ddq, dg, ddg])
    };
    let d = T::lit(GROUND_STATE_DELTA);
    let (q0, dq0) = taylor_seed(prm, d);
    let nf = prm.dim();
    let y0 = [q0, dq0, aa * d * d / (two * nf), aa * d / nf];
    let mut sup = T::zero();
    let run = solve_ivp(rhs, d, y0, m, &StepConfig::new(tol), |_, y, _| {
        sup = sup.max(y[2].abs() + y[3].abs());
        true
    })?;
    if run.stop != Stop::Reached {
        return Err(Error::Integration { at: run.last().0.to_f64_lossy(), reason: "step size underflow".into() });
    }
    Ok(eps * sup)
}
