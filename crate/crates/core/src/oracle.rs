//! Brute-force references for tests: a fixed-step classical Runge-Kutta march
//! with a step-halving error estimate, and zero counting by sampled sign changes.
//! Nothing in the solver depends on this module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{w_of, Chart, Trajectory};
use crate::ode::{accel_rho, State};
use crate::params::Params;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult<T> {
    pub value: State<T>,
    /// `max(|u_h - u_{h/2}|, |u'_h - u'_{h/2}|) / 15`.
    pub error_estimate: T,
}

const U_GUARD: f64 = 1e8;

fn rk4_march<T: Real>(prm: &Params<T>, seed: State<T>, target: T, h: T) -> Result<State<T>> {
    let span = target - seed.rho;
    let n = (span.abs() / h).ceil().to_usize().unwrap_or(1).max(1);
    let step = span / T::int(n as i64);
    let half = T::lit(0.5);
    let six = T::lit(6.0);
    let f = |r: T, u: T, du: T| (du, accel_rho(prm, r, u, du));
    let (mut u, mut du) = (seed.u, seed.du);
    for i in 0..n {
        let r = seed.rho + step * T::int(i as i64);
        let (a1, b1) = f(r, u, du);
        let (a2, b2) = f(r + half * step, u + half * step * a1, du + half * step * b1);
        let (a3, b3) = f(r + half * step, u + half * step * a2, du + half * step * b2);
        let (a4, b4) = f(r + step, u + step * a3, du + step * b3);
        u = u + step / six * (a1 + T::lit(2.0) * a2 + T::lit(2.0) * a3 + a4);
        du = du + step / six * (b1 + T::lit(2.0) * b2 + T::lit(2.0) * b3 + b4);
        if !(u.abs() <= T::lit(U_GUARD)) || !du.is_finite() {
            return Err(Error::Integration { at: (r + step).to_f64_lossy(), reason: "oracle overflow guard".into() });
        }
    }
    Ok(State::new(target, u, du))
}

/// Classical fourth-order march in the `rho` chart from `seed` to `target`.
pub fn reference_integrate<T: Real>(prm: &Params<T>, seed: State<T>, target: T, h: T) -> Result<OracleResult<T>> {
    if !(h > T::zero() && h <= T::lit(1e-4)) {
        return Err(Error::domain(format!("oracle step {h} must lie in (0, 1e-4]")));
    }
    let one = T::one();
    let (lo, hi) = (seed.rho.min(target), seed.rho.max(target));
    if lo <= T::zero() || (lo < one && hi > one) || lo == one || hi == one {
        return Err(Error::Chart { from: seed.rho.to_f64_lossy(), to: target.to_f64_lossy() });
    }
    let coarse = rk4_march(prm, seed, target, h)?;
    let fine = rk4_march(prm, seed, target, h / T::lit(2.0))?;
    let err = (coarse.u - fine.u).abs().max((coarse.du - fine.du).abs()) / T::lit(15.0);
    Ok(OracleResult { value: fine, error_estimate: err })
}

fn chart_x<T: Real>(chart: Chart, rho: T) -> T {
    match chart {
        Chart::RhoChart => rho,
        Chart::LogChart => rho.ln(),
    }
}

/// Number of sign changes of `w = rho^alpha u / b_inf - 1` on `[rho1, rho2]`,
/// read off the accepted samples and the endpoint values; each bracket is refined
/// by bisection on the interpolant to width `1e-12`.
pub fn count_zeros_direct<T: Real>(prm: &Params<T>, traj: &Trajectory<T>, rho1: T, rho2: T) -> Result<i64> {
    let (x1, x2) = (chart_x(traj.chart, rho1.min(rho2)), chart_x(traj.chart, rho1.max(rho2)));
    let (lo, hi) = traj.span();
    if traj.is_empty() || x1 < lo || x2 > hi {
        return Err(Error::Range {
            lo: rho1.to_f64_lossy(),
            hi: rho2.to_f64_lossy(),
            span_lo: lo.to_f64_lossy(),
            span_hi: hi.to_f64_lossy(),
        });
    }
    let w_at = |x: T| -> T {
        let (u, _) = traj.eval(x).expect("inside span");
        w_of(prm, traj.chart, x, u)
    };
    let mut xs = vec![x1];
    xs.extend(traj.samples.iter().map(|s| s.x).filter(|&x| x > x1 && x < x2));
    xs.push(x2);
    let width = T::lit(1e-12);
    let mut count = 0;
    for pair in xs.windows(2) {
        let (mut a, mut b) = (pair[0], pair[1]);
        let (wa, wb) = (w_at(a), w_at(b));
        if (wa < T::zero()) == (wb < T::zero()) {
            continue;
        }
        let neg_a = wa < T::zero();
        while b - a > width {
            let m = (a + b) / T::lit(2.0);
            if m == a || m == b {
                break;
            }
            if (w_at(m) < T::zero()) == neg_a {
                a = m;
            } else {
                b = m;
            }
        }
        count += 1;
    }
    Ok(count)
}
