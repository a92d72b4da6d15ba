//! Lifted Pruefer angle of `w = u/u_inf - 1` and zero counting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{solve_ivp, Chart, StepConfig, Trajectory};
use crate::ode::State;
use crate::params::Params;
use crate::scalar::Real;

/// Where and with which branch the lift starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor<T> {
    /// Target angle; the lift picks the branch of `atan2` nearest to it.
    pub angle: T,
    /// Radius of the anchoring sample (the nearest sample is used).
    pub at: T,
}

impl<T: Real> Anchor<T> {
    /// Left family: `Theta = pi` at the origin.
    pub fn left(at: T) -> Self {
        Anchor { angle: T::PI(), at }
    }

    /// Subcritical right family `U(., b)`: `Theta~(1) in (pi/2, 3pi/2)` for `b < b_inf`,
    /// `(-pi/2, pi/2)` for `b > b_inf`.
    pub fn right_subcritical(prm: &Params<T>, b: T, at: T) -> Self {
        let angle = if b < prm.b_inf { T::PI() } else { T::zero() };
        Anchor { angle, at }
    }

    /// Critical right family `U(., a)`: `W(1) = 0`, so `Theta~(1) = pi/2` when
    /// `W'(1) > 0` and `3pi/2` otherwise.
    pub fn right_critical(prm: &Params<T>, a: T, at: T) -> Self {
        let half = T::FRAC_PI_2();
        let angle = if a > -prm.alpha * prm.b_inf { half } else { T::lit(3.0) * half };
        Anchor { angle, at }
    }
}

/// `(w, rho w')` at a state.
pub fn polar_components<T: Real>(prm: &Params<T>, st: State<T>) -> (T, T) {
    let ra = st.rho.powf(prm.alpha) / prm.b_inf;
    (ra * st.u - T::one(), ra * (prm.alpha * st.u + st.rho * st.du))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrueferTrace<T> {
    /// `(rho, Theta)` in increasing `rho`.
    pub thetas: Vec<(T, T)>,
    /// `(rho, R)` at the same radii.
    pub r: Vec<(T, T)>,
    /// Zeros of `w` over the whole traced span.
    pub zero_count: i64,
    pub branch_origin: T,
    #[serde(skip)]
    source: Option<Source<T>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Source<T> {
    traj: Trajectory<T>,
    alpha: T,
    b_inf: T,
}

fn wrap<T: Real>(d: T) -> T {
    let tau = T::TAU();
    let mut d = d % tau;
    if d > T::PI() {
        d = d - tau;
    } else if d <= -T::PI() {
        d = d + tau;
    }
    d
}

/// `Theta` value congruent to `phi` mod `2pi` closest to `target`.
fn lift_to<T: Real>(phi: T, target: T) -> T {
    target - wrap(target - phi)
}

fn source_state<T: Real>(traj: &Trajectory<T>, i: usize, x: T) -> State<T> {
    let (u, du) = traj.eval_in(i, x);
    crate::integrator::Sample { x, u, du, ddu: T::zero() }.state(traj.chart)
}

fn to_chart<T: Real>(chart: Chart, rho: T) -> T {
    match chart {
        Chart::RhoChart => rho,
        Chart::LogChart => rho.ln(),
    }
}

const MAX_DEPTH: u32 = 40;

/// Builds the lifted angle along `traj`.
pub fn theta_trace<T: Real>(prm: &Params<T>, traj: &Trajectory<T>, init: Anchor<T>) -> Result<PrueferTrace<T>> {
    if traj.is_empty() {
        return Err(Error::domain("empty trajectory"));
    }
    let n = traj.samples.len();
    let states = traj.rho_states();
    let tiny = T::lit(1e-300).max(T::min_positive_value());
    let angle_of = |st: State<T>| -> Result<(T, T)> {
        let (w, rw) = polar_components(prm, st);
        let r = w.hypot(rw);
        if !(r >= tiny) {
            return Err(Error::Lifting {
                rho: st.rho.to_f64_lossy(),
                reason: "trajectory coincides with u_inf".into(),
            });
        }
        Ok((rw.atan2(w), r))
    };
    let x_at = to_chart(traj.chart, init.at);
    let (lo, hi) = traj.span();
    if !(x_at >= lo - (hi - lo) * T::lit(1e-12) && x_at <= hi + (hi - lo) * T::lit(1e-12)) {
        return Err(Error::Range {
            lo: init.at.to_f64_lossy(),
            hi: init.at.to_f64_lossy(),
            span_lo: lo.to_f64_lossy(),
            span_hi: hi.to_f64_lossy(),
        });
    }
    let k0 = (0..n)
        .min_by(|&a, &b| {
            let da = (traj.samples[a].x - x_at).abs();
            let db = (traj.samples[b].x - x_at).abs();
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty");

    let (phi0, r0) = angle_of(states[k0])?;
    let theta0 = lift_to(phi0, init.angle);

    // records in sample order: (rho, theta, R)
    let mut fwd: Vec<(T, T, T)> = vec![(states[k0].rho, theta0, r0)];
    let mut bwd: Vec<(T, T, T)> = Vec::new();
    for (dir, out) in [(1isize, &mut fwd), (-1isize, &mut bwd)] {
        let mut prev_theta = theta0;
        let mut k = k0 as isize;
        loop {
            let next = k + dir;
            if next < 0 || next >= n as isize {
                break;
            }
            let (i, j) = (k as usize, next as usize);
            let seg = i.min(j);
            let mut stack = vec![(traj.samples[i].x, traj.samples[j].x, 0u32)];
            let mut cur = prev_theta;
            while let Some((xa, xb, depth)) = stack.pop() {
                let st = if xb == traj.samples[j].x { states[j] } else { source_state(traj, seg, xb) };
                let (phi, r) = angle_of(st)?;
                let d = wrap(phi - cur);
                if d.abs() >= T::FRAC_PI_2() && depth < MAX_DEPTH {
                    let xm = (xa + xb) / T::lit(2.0);
                    stack.push((xm, xb, depth + 1));
                    stack.push((xa, xm, depth + 1));
                    continue;
                }
                if d.abs() >= T::FRAC_PI_2() {
                    return Err(Error::Lifting {
                        rho: st.rho.to_f64_lossy(),
                        reason: "angle jump not resolved by refinement".into(),
                    });
                }
                cur = cur + d;
                out.push((st.rho, cur, r));
            }
            prev_theta = cur;
            k = next;
        }
    }
    let mut recs: Vec<(T, T, T)> = bwd.into_iter().rev().chain(fwd).collect();
    if recs.len() > 1 && recs[0].0 > recs[recs.len() - 1].0 {
        recs.reverse();
    }
    recs.dedup_by(|a, b| a.0 == b.0);
    let thetas: Vec<(T, T)> = recs.iter().map(|r| (r.0, r.1)).collect();
    let rr: Vec<(T, T)> = recs.iter().map(|r| (r.0, r.2)).collect();
    let zero_count = floor_count(thetas[0].1, thetas[thetas.len() - 1].1);
    Ok(PrueferTrace {
        thetas,
        r: rr,
        zero_count,
        branch_origin: init.angle,
        source: Some(Source { traj: traj.clone(), alpha: prm.alpha, b_inf: prm.b_inf }),
    })
}

fn floor_count<T: Real>(t1: T, t2: T) -> i64 {
    let pi = T::PI();
    let half = T::lit(0.5);
    let f = |t: T| (t / pi - half).floor().to_i64().unwrap_or(0);
    f(t1) - f(t2)
}

impl<T: Real> PrueferTrace<T> {
    pub fn span(&self) -> (T, T) {
        (self.thetas[0].0, self.thetas[self.thetas.len() - 1].0)
    }

    /// `Theta` at `rho` inside the span.
    pub fn theta_at(&self, rho: T) -> Result<T> {
        let (lo, hi) = self.span();
        if rho < lo || rho > hi {
            return Err(Error::Range {
                lo: rho.to_f64_lossy(),
                hi: rho.to_f64_lossy(),
                span_lo: lo.to_f64_lossy(),
                span_hi: hi.to_f64_lossy(),
            });
        }
        let j = self.thetas.partition_point(|t| t.0 <= rho);
        if j > 0 && self.thetas[j - 1].0 == rho {
            return Ok(self.thetas[j - 1].1);
        }
        let j = j.clamp(1, self.thetas.len() - 1);
        let (r0, t0) = self.thetas[j - 1];
        let (r1, t1) = self.thetas[j];
        let lin = t0 + (t1 - t0) * (rho - r0) / (r1 - r0);
        let src = match &self.source {
            Some(s) => s,
            None => return Ok(lin),
        };
        let x = to_chart(src.traj.chart, rho);
        let st = match src.traj.locate(x) {
            Some(i) => source_state(&src.traj, i, x),
            None => return Ok(lin),
        };
        let ra = st.rho.powf(src.alpha) / src.b_inf;
        let (w, rw) = (ra * st.u - T::one(), ra * (src.alpha * st.u + st.rho * st.du));
        if w == T::zero() && rw == T::zero() {
            return Ok(lin);
        }
        Ok(lift_to(rw.atan2(w), lin))
    }

    /// Zeros of `w` on `[rho1, rho2)` by the floor formula.
    pub fn count_zeros(&self, rho1: T, rho2: T) -> Result<i64> {
        let (lo, hi) = self.span();
        if !(rho1 <= rho2) || rho1 < lo || rho2 > hi {
            return Err(Error::Range {
                lo: rho1.to_f64_lossy(),
                hi: rho2.to_f64_lossy(),
                span_lo: lo.to_f64_lossy(),
                span_hi: hi.to_f64_lossy(),
            });
        }
        Ok(floor_count(self.theta_at(rho1)?, self.theta_at(rho2)?))
    }

    pub fn theta_first(&self) -> T {
        self.thetas[0].1
    }

    pub fn theta_last(&self) -> T {
        self.thetas[self.thetas.len() - 1].1
    }
}

/// Zeros of `w` on `[rho1, rho2)` from the lifted angle.
pub fn count_zeros<T: Real>(trace: &PrueferTrace<T>, rho1: T, rho2: T) -> Result<i64> {
    trace.count_zeros(rho1, rho2)
}

/// Right-hand side `Theta' = -(sin^2 + B sin cos + C cos^2) / rho` on `(0, 1)`.
pub fn theta_rhs<T: Real>(prm: &Params<T>, rho: T, theta: T, v: T) -> T {
    let one = T::one();
    let nf = prm.dim();
    let two = T::lit(2.0);
    let q = one - rho * rho;
    let b = (nf - two - two * prm.alpha - rho * rho) / q;
    let k = prm.sing_coeff();
    let c = if (one - v).abs() < T::lit(1e-6) {
        // v(1 - v^(p-1))/(1 - v) expanded around v = 1
        let pm1 = prm.p - one;
        let e = v - one;
        k * (pm1 - pm1 * prm.p / two * e) / q
    } else {
        k * v * (one - v.abs_pow(prm.p - one)) / (q * (one - v))
    };
    let (s, co) = theta.sin_cos();
    -(s * s + b * s * co + c * co * co) / rho
}

/// Integrates [`theta_rhs`] along `traj` from `(rho_a, theta_a)` to `rho_b`,
/// with `v` taken from the trajectory's dense output.
pub fn theta_ode<T: Real>(prm: &Params<T>, traj: &Trajectory<T>, rho_a: T, theta_a: T, rho_b: T, tol: T) -> Result<T> {
    let chart = traj.chart;
    let f = |rho: T, y: &[T; 1]| -> Result<[T; 1]> {
        let x = to_chart(chart, rho);
        let i = traj.locate(x).ok_or_else(|| Error::Range {
            lo: rho.to_f64_lossy(),
            hi: rho.to_f64_lossy(),
            span_lo: traj.span().0.to_f64_lossy(),
            span_hi: traj.span().1.to_f64_lossy(),
        })?;
        let st = source_state(traj, i, x);
        let v = st.rho.powf(prm.alpha) * st.u / prm.b_inf;
        Ok([theta_rhs(prm, rho, y[0], v)])
    };
    let cfg = StepConfig::new(tol);
    let run = solve_ivp(f, rho_a, [theta_a], rho_b, &cfg, |_, _, _| true)?;
    Ok(run.last().1[0])
}
