//! Right-hand sides of the profile equation
//!
//! ```text
//! (1-rho^2) u'' + ((N-1)/rho - 2(alpha+1) rho) u' - alpha(alpha+1) u + |u|^(p-1) u = 0
//! ```
//!
//! in the radial chart and in the exterior log chart `s = ln rho`, together with the
//! Lyapunov functionals used to monitor trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::scalar::Real;

/// Default distance kept from the singular points `rho = 0` and `rho = 1`.
pub const DEFAULT_DELTA_MIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State<T> {
    pub rho: T,
    pub u: T,
    pub du: T,
}

impl<T: Real> State<T> {
    pub fn new(rho: T, u: T, du: T) -> Self {
        State { rho, u, du }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.u.is_finite() && self.du.is_finite()
    }

    /// Exterior chart coordinates; requires `rho > 0`.
    pub fn to_log(self) -> LogState<T> {
        LogState { s: self.rho.ln(), z: self.u, dz: self.rho * self.du }
    }
}

/// State in the chart `s = ln rho`, `z(s) = u(e^s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogState<T> {
    pub s: T,
    pub z: T,
    pub dz: T,
}

impl<T: Real> LogState<T> {
    pub fn to_rho(self) -> State<T> {
        let rho = self.s.exp();
        State { rho, u: self.z, du: self.dz / rho }
    }
}

/// Lyapunov values and the scaled variables `v = u/u_inf`, `w = v - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    pub h: T,
    pub hv: T,
    pub v: T,
    pub w: T,
}

/// `|u|^(p-1) u`.
#[inline]
pub fn nonlinearity<T: Real>(prm: &Params<T>, u: T) -> T {
    u.signed_pow(prm.p)
}

/// Left-hand side of the profile equation.
pub fn residual<T: Real>(prm: &Params<T>, rho: T, u: T, du: T, ddu: T) -> T {
    let one = T::one();
    let a1 = prm.alpha + one;
    (one - rho * rho) * ddu + ((prm.dim() - one) / rho - T::lit(2.0) * a1 * rho) * du - prm.b0_pow() * u
        + nonlinearity(prm, u)
}

/// Sum of the magnitudes of the individual terms of [`residual`], used to
/// normalise it where the solution has a large core amplitude.
pub fn residual_scale<T: Real>(prm: &Params<T>, rho: T, u: T, du: T, ddu: T) -> T {
    let one = T::one();
    let a1 = prm.alpha + one;
    ((one - rho * rho) * ddu).abs()
        + ((prm.dim() - one) / rho * du).abs()
        + (T::lit(2.0) * a1 * rho * du).abs()
        + (prm.b0_pow() * u).abs()
        + nonlinearity(prm, u).abs()
}

/// `u''` solved from the profile equation, without singularity checks.
#[inline]
pub fn accel_rho<T: Real>(prm: &Params<T>, rho: T, u: T, du: T) -> T {
    let one = T::one();
    let a1 = prm.alpha + one;
    let drift = (prm.dim() - one) / rho - T::lit(2.0) * a1 * rho;
    (prm.b0_pow() * u - nonlinearity(prm, u) - drift * du) / (one - rho * rho)
}

/// `z''` solved from the exterior equation
/// `z'' + (2a+1) z' - (|z|^(p-1) - b0^(p-1)) z = e^(-2s) (z'' + (N-2) z')`.
#[inline]
pub fn accel_log<T: Real>(prm: &Params<T>, s: T, z: T, dz: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let e2 = (-two * s).exp();
    let pot = (z.abs_pow(prm.p - one) - prm.b0_pow()) * z;
    (-(two * prm.alpha + one) * dz + pot + e2 * (prm.dim() - two) * dz) / (one - e2)
}

/// Derivative pair `(u', u'')` in the radial chart.
pub fn rhs_rho<T: Real>(prm: &Params<T>, st: State<T>) -> Result<(T, T)> {
    rhs_rho_guarded(prm, st, T::lit(DEFAULT_DELTA_MIN))
}

pub fn rhs_rho_guarded<T: Real>(prm: &Params<T>, st: State<T>, delta_min: T) -> Result<(T, T)> {
    if st.rho.abs() < delta_min || (st.rho - T::one()).abs() < delta_min {
        return Err(Error::Singularity { rho: st.rho.to_f64_lossy() });
    }
    Ok((st.du, accel_rho(prm, st.rho, st.u, st.du)))
}

/// Derivative pair `(z', z'')` in the exterior log chart.
pub fn rhs_log<T: Real>(prm: &Params<T>, ls: LogState<T>) -> Result<(T, T)> {
    if !(ls.s > T::zero()) {
        return Err(Error::Singularity { rho: ls.s.exp().to_f64_lossy() });
    }
    if ls.s < T::lit(DEFAULT_DELTA_MIN) {
        return Err(Error::Singularity { rho: ls.s.exp().to_f64_lossy() });
    }
    Ok((ls.dz, accel_log(prm, ls.s, ls.z, ls.dz)))
}

/// `H = (1-rho^2) u'^2/2 + |u|^(p+1)/(p+1) - (p+1)/(p-1)^2 u^2`.
pub fn lyapunov_h<T: Real>(prm: &Params<T>, st: State<T>) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let pm1 = prm.p - one;
    (one - st.rho * st.rho) * st.du * st.du / two + st.u.abs_pow(prm.p + one) / (prm.p + one)
        - (prm.p + one) / (pm1 * pm1) * st.u * st.u
}

/// Scaled variable `v = rho^alpha u / b_inf` and its derivative.
pub fn scaled<T: Real>(prm: &Params<T>, st: State<T>) -> (T, T) {
    let ra = st.rho.powf(prm.alpha);
    let v = ra * st.u / prm.b_inf;
    let dv = (ra * st.du + prm.alpha * ra / st.rho * st.u) / prm.b_inf;
    (v, dv)
}

/// `H_v = rho^2 (1-rho^2) v'^2 / 2 - alpha(N-2-alpha) (v^2/2 - |v|^(p+1)/(p+1))`.
pub fn lyapunov_hv<T: Real>(prm: &Params<T>, st: State<T>) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let (v, dv) = scaled(prm, st);
    let r2 = st.rho * st.rho;
    r2 * (one - r2) * dv * dv / two - prm.sing_coeff() * (v * v / two - v.abs_pow(prm.p + one) / (prm.p + one))
}

pub fn diagnostics<T: Real>(prm: &Params<T>, st: State<T>) -> Diagnostics<T> {
    let (v, _) = scaled(prm, st);
    Diagnostics { h: lyapunov_h(prm, st), hv: lyapunov_hv(prm, st), v, w: v - T::one() }
}

/// Closed-form solution `2 sqrt(2(N-1)(N-4)) / (N-4+3 rho^2)` for `p = 3`, `N >= 5`.
pub fn cubic_exact<T: Real>(n: u32, rho: T) -> State<T> {
    let nf = T::int(n as i64);
    let k = T::lit(2.0) * (T::lit(2.0) * (nf - T::one()) * (nf - T::lit(4.0))).sqrt();
    let d = nf - T::lit(4.0) + T::lit(3.0) * rho * rho;
    State { rho, u: k / d, du: -T::lit(6.0) * k * rho / (d * d) }
}

/// Second derivative of [`cubic_exact`].
pub fn cubic_exact_ddu<T: Real>(n: u32, rho: T) -> T {
    let nf = T::int(n as i64);
    let k = T::lit(2.0) * (T::lit(2.0) * (nf - T::one()) * (nf - T::lit(4.0))).sqrt();
    let d = nf - T::lit(4.0) + T::lit(3.0) * rho * rho;
    -T::lit(6.0) * k / (d * d) + T::lit(72.0) * k * rho * rho / (d * d * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p37() -> Params<f64> {
        Params::new(3, 7.0_f64).unwrap()
    }

    #[test]
    fn residual_vanishes_on_exact_solutions() {
        let prm = p37();
        assert!(residual(&prm, 0.5, prm.b0, 0.0, 0.0).abs() < 1e-14);
        let r = 0.5;
        let res = residual(&prm, r, prm.u_inf(r), prm.du_inf(r), prm.ddu_inf(r));
        assert!(res.abs() < 1e-13, "{res}");

        let prm = Params::new(5, 3.0_f64).unwrap();
        let st = cubic_exact(5, 0.7);
        let res = residual(&prm, 0.7, st.u, st.du, cubic_exact_ddu(5, 0.7));
        assert!(res.abs() < 1e-12, "{res}");
    }

    #[test]
    fn rhs_rho_examples() {
        let prm = p37();
        let (_, ddu) = rhs_rho(&prm, State::new(0.5, prm.b0, 0.0)).unwrap();
        assert!(ddu.abs() < 1e-14);
        let (_, ddu) = rhs_rho(&prm, State::new(0.5, 1.0, 0.0)).unwrap();
        assert_relative_eq!(ddu, -20.0 / 27.0, epsilon = 1e-14);

        let prm = Params::new(5, 3.0_f64).unwrap();
        let st = State::new(2.0, prm.u_inf(2.0), prm.du_inf(2.0));
        assert_relative_eq!(st.u, 2f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(st.du, -2f64.sqrt() / 4.0, epsilon = 1e-15);
        let (_, ddu) = rhs_rho(&prm, st).unwrap();
        assert_relative_eq!(ddu, prm.ddu_inf(2.0), epsilon = 1e-14);
    }

    #[test]
    fn rhs_rho_guards_singular_points() {
        let prm = p37();
        assert!(matches!(rhs_rho(&prm, State::new(1.0 + 1e-9, 1.0, 0.0)), Err(Error::Singularity { .. })));
        assert!(matches!(rhs_rho(&prm, State::new(1e-9, 1.0, 0.0)), Err(Error::Singularity { .. })));
    }

    #[test]
    fn rhs_log_examples() {
        let prm = p37();
        let (_, ddz) = rhs_log(&prm, LogState { s: 1.0, z: prm.b0, dz: 0.0 }).unwrap();
        assert!(ddz.abs() < 1e-14);
        for s in [0.1, 1.0, 3.0, 7.5] {
            let z = prm.b_inf * (-prm.alpha * s).exp();
            let (_, ddz) = rhs_log(&prm, LogState { s, z, dz: -prm.alpha * z }).unwrap();
            assert_relative_eq!(ddz, prm.alpha * prm.alpha * z, max_relative = 1e-12);
        }
        assert!(rhs_log(&prm, LogState { s: 0.0, z: 1.0, dz: 0.0 }).is_err());
    }

    #[test]
    fn log_chart_agrees_with_radial_chart() {
        let prm = p37();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s: f64 = rng.gen_range(0.05..5.0);
            let z: f64 = rng.gen_range(-2.0..2.0);
            let dz: f64 = rng.gen_range(-2.0..2.0);
            let ls = LogState { s, z, dz };
            let st = ls.to_rho();
            let (_, ddu) = rhs_rho(&prm, st).unwrap();
            let via_chain = st.rho * st.du + st.rho * st.rho * ddu;
            let (_, ddz) = rhs_log(&prm, ls).unwrap();
            assert!((via_chain - ddz).abs() <= 1e-10 * (1.0 + ddz.abs()), "{via_chain} vs {ddz}");
        }
    }

    #[test]
    fn odd_symmetry_is_exact() {
        let prm = Params::new(4, 4.0_f64).unwrap();
        let a = accel_rho(&prm, 0.3, 0.77, -0.2);
        let b = accel_rho(&prm, 0.3, -0.77, 0.2);
        assert_eq!(a, -b);
    }

    #[test]
    fn lyapunov_examples() {
        let prm = p37();
        let c = 1.3;
        let h = lyapunov_h(&prm, State::new(0.0, c, 0.0));
        assert_relative_eq!(h, c.powi(8) / 8.0 - 2.0 / 9.0 * c * c, epsilon = 1e-14);
        assert_eq!(lyapunov_h(&prm, State::new(0.4, 0.0, 0.0)), 0.0);
        for r in [0.1, 0.5, 0.9, 1.0] {
            let hv = lyapunov_hv(&prm, State::new(r, prm.u_inf(r), prm.du_inf(r)));
            assert_relative_eq!(hv, -1.0 / 12.0, epsilon = 1e-14);
        }
        assert!(h >= prm.h_lower_bound());
    }
}
