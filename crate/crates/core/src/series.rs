//! Local solutions at the singular points `rho = 0` and `rho = 1`.
//!
//! Both points are regular singular points of the profile equation. The solutions that
//! are regular there (`u(0) = c, u'(0) = 0` at the origin; `U(1) = b` or
//! `U(1) = b0, U'(1) = a` on the light cone) are analytic, so they are represented by
//! truncated power series whose coefficients follow from a linear recurrence. The
//! nonlinearity `|u|^(p-1) u` is expanded with the J.C.P. Miller power recurrence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{nonlinearity, State};
use crate::params::{Params, Regime};
use crate::scalar::Real;

/// Number of Taylor coefficients kept by the seeding routines.
pub const SERIES_ORDER: usize = 18;

/// Default offset from the origin.
pub const DEFAULT_DELTA0: f64 = 1e-4;
/// Default offset from the light cone `rho = 1`.
pub const DEFAULT_DELTA1: f64 = 1e-5;

/// Which one-parameter family a seed belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family<T> {
    /// Regular at the origin: `u(0) = c`, `u'(0) = 0`.
    OriginC(T),
    /// Regular at `rho = 1` with `U(1) = b` (subcritical range).
    OneSubcritical(T),
    /// Regular at `rho = 1` with `U(1) = b0`, `U'(1) = a` (critical range).
    OneCritical(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    TowardOne,
    TowardZero,
    TowardInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySeed<T> {
    pub family: Family<T>,
    pub offset: T,
    pub direction: Direction,
}

/// Truncated power series `sum a_k (rho - center)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSeries<T> {
    pub center: T,
    pub coeffs: Vec<T>,
}

impl<T: Real> LocalSeries<T> {
    pub fn eval(&self, rho: T) -> State<T> {
        let x = rho - self.center;
        let mut u = T::zero();
        let mut du = T::zero();
        for (k, &a) in self.coeffs.iter().enumerate().rev() {
            u = u * x + a;
            if k > 0 {
                du = du * x + T::int(k as i64) * a;
            }
        }
        State { rho, u, du }
    }

    /// Second derivative of the truncated series.
    pub fn eval_ddu(&self, rho: T) -> T {
        let x = rho - self.center;
        let mut ddu = T::zero();
        for (k, &a) in self.coeffs.iter().enumerate().rev() {
            if k > 1 {
                ddu = ddu * x + T::int((k * (k - 1)) as i64) * a;
            }
        }
        ddu
    }

    /// Magnitude of the last retained term at `rho`, a truncation indicator.
    pub fn tail(&self, rho: T) -> T {
        let x = (rho - self.center).abs();
        let k = self.coeffs.len() - 1;
        self.coeffs[k].abs() * x.powi(k as i32)
    }
}

/// Coefficients of `sign(q0) |q|^e` given those of `q` (requires `q0 != 0`).
fn signed_power_coeff<T: Real>(q: &[T], h: &[T], e: T, n: usize) -> T {
    // Miller: n q0 h_n = sum_{k=1..n} ((e+1) k - n) q_k h_{n-k}
    if n == 0 {
        return q[0].signed_pow(e);
    }
    let mut acc = T::zero();
    for k in 1..=n {
        acc = acc + ((e + T::one()) * T::int(k as i64) - T::int(n as i64)) * q[k] * h[n - k];
    }
    acc / (T::int(n as i64) * q[0])
}

/// Series of the origin-regular solution `u(rho, c)`.
pub fn origin_series<T: Real>(prm: &Params<T>, c: T, order: usize) -> LocalSeries<T> {
    let mut a = vec![T::zero(); order + 1];
    if c == T::zero() {
        return LocalSeries { center: T::zero(), coeffs: a };
    }
    a[0] = c;
    let nf = prm.dim();
    let two_alpha = T::lit(2.0) * prm.alpha;
    let mut f = Vec::with_capacity(order + 1);
    let mut g = Vec::with_capacity(order + 1);
    for m in 2..=order {
        // g_{m-2} needs a_0..a_{m-2}
        let j = m - 2;
        let fj = signed_power_coeff(&a, &f, prm.p, j);
        f.push(fj);
        g.push(-prm.b0_pow() * a[j] + fj);
        let mf = T::int(m as i64);
        let num = a[m - 2] * (mf - T::lit(2.0)) * (mf - T::one() + two_alpha) - g[j];
        a[m] = num / (mf * (mf + nf - T::lit(2.0)));
    }
    LocalSeries { center: T::zero(), coeffs: a }
}

/// Series at `rho = 1` of the regular solution with `U(1) = u1`, `U'(1) = slope`.
///
/// When `N-3-2 alpha != 0` the slope is forced by the equation and `slope` is ignored.
fn light_cone_series<T: Real>(prm: &Params<T>, u1: T, slope: Option<T>, order: usize) -> LocalSeries<T> {
    let mut a = vec![T::zero(); order + 1];
    if u1 == T::zero() {
        // the only regular solution through zero at the light cone
        return LocalSeries { center: T::one(), coeffs: a };
    }
    let one = T::one();
    let d0 = prm.dim() - T::lit(3.0) - T::lit(2.0) * prm.alpha;
    let d1 = T::lit(4.0) * (prm.alpha + one);
    let d2 = T::lit(2.0) * (prm.alpha + one);
    a[0] = u1;
    let mut f: Vec<T> = Vec::with_capacity(order + 1);
    let mut g: Vec<T> = Vec::with_capacity(order + 1);
    for m in 0..order {
        let fm = signed_power_coeff(&a, &f, prm.p, m);
        f.push(fm);
        g.push(-prm.b0_pow() * a[m] + fm);
        let mf = T::int(m as i64);
        let denom = (mf + one) * (d0 - T::lit(2.0) * mf);
        if m == 0 {
            a[1] = match slope {
                Some(s) => s,
                None => -g[0] / d0,
            };
            continue;
        }
        let mut rhs = T::lit(3.0) * mf * (mf - one) * a[m] + d1 * mf * a[m] - g[m];
        rhs = rhs + (mf - one) * (mf - T::lit(2.0)) * a[m - 1] + d2 * (mf - one) * a[m - 1] - g[m - 1];
        a[m + 1] = rhs / denom;
    }
    LocalSeries { center: T::one(), coeffs: a }
}

/// `U'(1, b) = (b^p - b0^(p-1) b) / (2(p+1)/(p-1) - (N-1))`.
pub fn subcritical_slope<T: Real>(prm: &Params<T>, b: T) -> T {
    let one = T::one();
    let denom = T::lit(2.0) * (prm.p + one) / (prm.p - one) - (prm.dim() - one);
    (nonlinearity(prm, b) - prm.b0_pow() * b) / denom
}

pub fn subcritical_series<T: Real>(prm: &Params<T>, b: T) -> Result<LocalSeries<T>> {
    if prm.regime != Regime::SubcriticalRange {
        return Err(Error::Regime(prm.regime));
    }
    Ok(light_cone_series(prm, b, None, SERIES_ORDER))
}

pub fn critical_series<T: Real>(prm: &Params<T>, a: T) -> Result<LocalSeries<T>> {
    if prm.regime != Regime::CriticalRange {
        return Err(Error::Regime(prm.regime));
    }
    Ok(light_cone_series(prm, prm.b0, Some(a), SERIES_ORDER))
}

/// Largest origin offset for which the series is trusted: `0.1 min(1, |c|^(-(p-1)/2))`.
pub fn origin_trust_radius<T: Real>(prm: &Params<T>, c: T) -> T {
    let scale = c.abs().powf((prm.p - T::one()) / T::lit(2.0));
    T::lit(0.1) * (T::one() / scale).min(T::one())
}

/// Origin offset used by the solvers: the requested `delta0`, shrunk for large `c` so that
/// the seed sits well inside the inner scale `c^(-(p-1)/2)`.
pub fn origin_offset<T: Real>(prm: &Params<T>, c: T, delta0: T) -> T {
    delta0.min(T::lit(0.1) * origin_trust_radius(prm, c))
}

/// State of `u(., c)` at `rho = delta`.
pub fn init_at_origin<T: Real>(prm: &Params<T>, c: T, delta: T) -> Result<State<T>> {
    if !(delta > T::zero()) || delta > origin_trust_radius(prm, c) {
        return Err(Error::domain(format!("origin offset {delta} outside (0, {}]", origin_trust_radius(prm, c))));
    }
    Ok(origin_series(prm, c, SERIES_ORDER).eval(delta))
}

fn light_cone_rho<T: Real>(delta: T, side: Direction) -> Result<T> {
    if !(delta > T::zero()) || delta > T::lit(0.05) {
        return Err(Error::domain(format!("light-cone offset {delta} outside (0, 0.05]")));
    }
    match side {
        Direction::TowardZero => Ok(T::one() - delta),
        Direction::TowardInfinity => Ok(T::one() + delta),
        Direction::TowardOne => Err(Error::domain("light-cone seeds move toward zero or infinity")),
    }
}

/// State of `U(., b)` at `1 -/+ delta`.
pub fn init_at_one_subcritical<T: Real>(prm: &Params<T>, b: T, delta: T, side: Direction) -> Result<State<T>> {
    let rho = light_cone_rho(delta, side)?;
    Ok(subcritical_series(prm, b)?.eval(rho))
}

/// State of `U(., a)` at `1 -/+ delta`.
pub fn init_at_one_critical<T: Real>(prm: &Params<T>, a: T, delta: T, side: Direction) -> Result<State<T>> {
    let rho = light_cone_rho(delta, side)?;
    Ok(critical_series(prm, a)?.eval(rho))
}

/// Dispatches on the seed family.
pub fn seed<T: Real>(prm: &Params<T>, s: &BoundarySeed<T>) -> Result<State<T>> {
    match s.family {
        Family::OriginC(c) => {
            if s.direction != Direction::TowardOne {
                return Err(Error::domain("origin seeds move toward rho = 1"));
            }
            init_at_origin(prm, c, s.offset)
        }
        Family::OneSubcritical(b) => init_at_one_subcritical(prm, b, s.offset, s.direction),
        Family::OneCritical(a) => init_at_one_critical(prm, a, s.offset, s.direction),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{cubic_exact, cubic_exact_ddu, residual};
    use approx::assert_relative_eq;

    #[test]
    fn origin_second_coefficient() {
        let prm = Params::new(3, 7.0_f64).unwrap();
        let s = origin_series(&prm, 1.0, SERIES_ORDER);
        assert_relative_eq!(s.coeffs[2], -5.0 / 54.0, epsilon = 1e-15);
        assert_eq!(s.coeffs[1], 0.0);
        assert_eq!(s.coeffs[3], 0.0);
        let st = init_at_origin(&prm, 1.0, 1e-3).unwrap();
        assert!((st.u - (1.0 - 5.0 / 54.0 * 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn origin_trivial_cases() {
        let prm = Params::new(3, 7.0_f64).unwrap();
        let st = init_at_origin(&prm, 0.0, 1e-3).unwrap();
        assert_eq!((st.u, st.du), (0.0, 0.0));
        let st = init_at_origin(&prm, prm.b0, 1e-3).unwrap();
        assert!((st.u - prm.b0).abs() < 1e-15 && st.du.abs() < 1e-15);
        assert!(init_at_origin(&prm, 1.0, 0.2).is_err());
        assert!(init_at_origin(&prm, 1.0, 0.0).is_err());
    }

    #[test]
    fn origin_series_matches_cubic_closed_form() {
        let prm = Params::new(5, 3.0_f64).unwrap();
        let c = 4.0 * 2f64.sqrt();
        let s = origin_series(&prm, c, SERIES_ORDER);
        for r in [1e-3, 1e-2, 0.05] {
            let ex = cubic_exact(5, r);
            let st = s.eval(r);
            assert!((st.u - ex.u).abs() < 1e-13, "{r}");
            assert!((st.du - ex.du).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn origin_series_satisfies_equation() {
        let prm = Params::new(4, 4.0_f64).unwrap();
        let s = origin_series(&prm, 2.5, SERIES_ORDER);
        for r in [1e-3, 1e-2] {
            let st = s.eval(r);
            let res = residual(&prm, r, st.u, st.du, s.eval_ddu(r));
            assert!(res.abs() < 1e-10, "{res}");
        }
    }

    #[test]
    fn subcritical_slope_examples() {
        let prm = Params::new(3, 7.0_f64).unwrap();
        assert!(subcritical_slope(&prm, prm.b0).abs() < 1e-15);
        assert_relative_eq!(subcritical_slope(&prm, prm.b_inf), -prm.alpha * prm.b_inf, epsilon = 1e-14);
        assert_relative_eq!(subcritical_slope(&prm, prm.b_inf), -0.2594239054086702, epsilon = 1e-14);

        let prm = Params::new(4, 4.0_f64).unwrap();
        let expect = (0.0625 - 10.0 / 9.0 * 0.5) / (1.0 / 3.0);
        assert_relative_eq!(subcritical_slope(&prm, 0.5), expect, epsilon = 1e-13);
        assert_relative_eq!(expect, -1.4791666666666667, epsilon = 1e-13);
    }

    #[test]
    fn subcritical_seed_reproduces_singular_solution() {
        let prm = Params::new(3, 7.0_f64).unwrap();
        for side in [Direction::TowardZero, Direction::TowardInfinity] {
            for d in [1e-5, 1e-3, 0.05] {
                let st = init_at_one_subcritical(&prm, prm.b_inf, d, side).unwrap();
                assert!((st.u - prm.u_inf(st.rho)).abs() < 1e-14);
                assert!((st.du - prm.du_inf(st.rho)).abs() < 1e-13);
            }
        }
        let st = init_at_one_subcritical(&prm, prm.b0, 1e-3, Direction::TowardZero).unwrap();
        assert!((st.u - prm.b0).abs() < 1e-15 && st.du.abs() < 1e-14);
    }

    #[test]
    fn light_cone_series_satisfies_equation() {
        let prm = Params::new(4, 4.0_f64).unwrap();
        let s = subcritical_series(&prm, 0.5).unwrap();
        for r in [0.97, 0.99, 1.01, 1.03] {
            let st = s.eval(r);
            let res = residual(&prm, r, st.u, st.du, s.eval_ddu(r));
            assert!(res.abs() < 1e-11, "{r}: {res}");
        }
    }

    #[test]
    fn critical_seed_matches_cubic_closed_form() {
        let prm = Params::new(5, 3.0_f64).unwrap();
        let a = -1.5 * 2f64.sqrt();
        let s = critical_series(&prm, a).unwrap();
        assert_relative_eq!(s.coeffs[0], 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(2.0 * s.coeffs[2], 3.0 * 2f64.sqrt(), epsilon = 1e-13);
        assert_relative_eq!(2.0 * s.coeffs[2], cubic_exact_ddu(5, 1.0), epsilon = 1e-13);
        for d in [1e-5, 1e-2, 0.05] {
            for side in [Direction::TowardZero, Direction::TowardInfinity] {
                let st = init_at_one_critical(&prm, a, d, side).unwrap();
                let ex = cubic_exact(5, st.rho);
                assert!((st.u - ex.u).abs() < 1e-12, "{d}");
                assert!((st.du - ex.du).abs() < 1e-11, "{d}");
            }
        }
        let st = init_at_one_critical(&prm, 0.0, 1e-3, Direction::TowardZero).unwrap();
        assert!((st.u - prm.b0).abs() < 1e-15 && st.du.abs() < 1e-15);
        let st = init_at_one_critical(&prm, -prm.alpha * prm.b_inf, 1e-2, Direction::TowardZero).unwrap();
        assert!((st.u - prm.u_inf(st.rho)).abs() < 1e-13);
    }

    #[test]
    fn regime_mismatch_is_rejected() {
        let sub = Params::new(3, 7.0_f64).unwrap();
        let crit = Params::new(5, 3.0_f64).unwrap();
        assert!(matches!(init_at_one_critical(&sub, 0.0, 1e-3, Direction::TowardZero), Err(Error::Regime(_))));
        assert!(matches!(init_at_one_subcritical(&crit, 1.0, 1e-3, Direction::TowardZero), Err(Error::Regime(_))));
        assert!(init_at_one_subcritical(&sub, 1.0, 0.06, Direction::TowardZero).is_err());
    }
}
