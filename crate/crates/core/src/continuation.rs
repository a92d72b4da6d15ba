//! Continuation of right-family profiles past `rho = 1` and classification of
//! their far field: finite-radius blow-up or algebraic decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate_log, Options, Status, Trajectory};
use crate::ode::State;
use crate::params::{Params, Regime};
use crate::scalar::Real;
use crate::series::{init_at_one_critical, init_at_one_subcritical, Direction, DEFAULT_DELTA1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Classification<T> {
    Blowup {
        rho_plus_estimate: T,
    },
    /// `rho^alpha U -> L`.
    GlobalAlpha {
        #[serde(rename = "L")]
        l: T,
    },
    /// `rho^(alpha+1) U -> L`.
    GlobalAlphaPlusOne {
        #[serde(rename = "L")]
        l: T,
    },
    Inconclusive,
}

impl<T> Classification<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Blowup { .. } => "Blowup",
            Classification::GlobalAlpha { .. } => "GlobalAlpha",
            Classification::GlobalAlphaPlusOne { .. } => "GlobalAlphaPlusOne",
            Classification::Inconclusive => "Inconclusive",
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Classification::GlobalAlpha { .. } | Classification::GlobalAlphaPlusOne { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport<T> {
    pub classification: Classification<T>,
    /// Window in `s = ln rho` used for the fit.
    pub fit_window: (T, T),
    /// Relative spread of the fitted amplitude over the window.
    pub fit_residual: T,
    /// `max |rho^(k+1) U' + k L|` over the window, with `k` the fitted decay exponent.
    pub secondary_check: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendConfig<T> {
    pub tol: T,
    pub delta1: T,
    /// Largest relative spread accepted for a stabilised amplitude.
    pub spread_tol: T,
    /// Evaluation points in the fit window.
    pub fit_points: usize,
}

impl<T: Real> ExtendConfig<T> {
    pub fn new(tol: T) -> Self {
        ExtendConfig { tol, delta1: T::lit(DEFAULT_DELTA1), spread_tol: T::lit(1e-4), fit_points: 64 }
    }
}

/// State of the right family at `1 + delta1`.
pub fn exterior_seed<T: Real>(prm: &Params<T>, param: T, delta1: T) -> Result<State<T>> {
    match prm.regime {
        Regime::SubcriticalRange => init_at_one_subcritical(prm, param, delta1, Direction::TowardInfinity),
        Regime::CriticalRange => init_at_one_critical(prm, param, delta1, Direction::TowardInfinity),
        r => Err(Error::Regime(r)),
    }
}

/// Integrates the exterior log chart from the `1 + delta1` seed to `s_max` and classifies the result.
pub fn extend_and_classify<T: Real>(
    prm: &Params<T>,
    right_param: T,
    s_max: T,
    cfg: &ExtendConfig<T>,
) -> Result<(Trajectory<T>, AsymptoticsReport<T>)> {
    if !(s_max >= T::lit(5.0) && s_max <= T::lit(40.0)) {
        return Err(Error::domain(format!("s_max = {s_max} outside [5, 40]")));
    }
    let seed = exterior_seed(prm, right_param, cfg.delta1)?;
    let traj = integrate_log(prm, seed.to_log(), s_max, &exterior_options(cfg.tol))?;
    let report = classify(prm, &traj, cfg);
    Ok((traj, report))
}

/// Relative error control: the decaying solutions are many orders below one
/// long before `s_max`.
pub fn exterior_options<T: Real>(tol: T) -> Options<T> {
    let mut o = Options::new(tol);
    o.atol = T::min_positive_value().sqrt();
    o.joint_scale = true;
    o
}

/// Classifies a log-chart trajectory ending at its last sample.
pub fn classify<T: Real>(prm: &Params<T>, traj: &Trajectory<T>, cfg: &ExtendConfig<T>) -> AsymptoticsReport<T> {
    let zero = T::zero();
    let (s_lo, s_hi) = traj.span();
    match traj.status {
        Status::BlowupGuard(x) => {
            let rho_plus_estimate = traj.rho_plus.unwrap_or_else(|| x.exp());
            return AsymptoticsReport {
                classification: Classification::Blowup { rho_plus_estimate },
                fit_window: (s_lo, s_hi),
                fit_residual: zero,
                secondary_check: zero,
            };
        }
        Status::StepUnderflow(_) | Status::Completed => {}
    }
    let completed = traj.status == Status::Completed;
    let w_lo = s_lo.max(s_hi - T::lit(10.0).ln());
    let m = cfg.fit_points.max(2);
    let pts: Vec<(T, T, T)> = (0..m)
        .filter_map(|i| {
            let s = w_lo + (s_hi - w_lo) * T::int(i as i64) / T::int((m - 1) as i64);
            traj.eval(s).map(|(z, dz)| (s, z, dz))
        })
        .collect();
    let fit = |k: T| -> (T, T, T) {
        let amp: Vec<T> = pts.iter().map(|&(s, z, _)| (k * s).exp() * z).collect();
        let mean = amp.iter().fold(zero, |a, &b| a + b) / T::int(amp.len() as i64);
        let (lo, hi) = amp.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / mean.abs();
        let sec = pts.iter().map(|&(s, _, dz)| ((k * s).exp() * dz + k * mean).abs()).fold(zero, |a, b| a.max(b));
        (mean, spread, sec)
    };
    let a = prm.alpha;
    let (l_a, spread_a, sec_a) = fit(a);
    if completed && spread_a < cfg.spread_tol && l_a > zero {
        return AsymptoticsReport {
            classification: Classification::GlobalAlpha { l: l_a },
            fit_window: (w_lo, s_hi),
            fit_residual: spread_a,
            secondary_check: sec_a,
        };
    }
    let (l_b, spread_b, sec_b) = fit(a + T::one());
    if completed && spread_b < cfg.spread_tol && l_b > zero {
        return AsymptoticsReport {
            classification: Classification::GlobalAlphaPlusOne { l: l_b },
            fit_window: (w_lo, s_hi),
            fit_residual: spread_b,
            secondary_check: sec_b,
        };
    }
    let (spread, sec) = if spread_b < spread_a { (spread_b, sec_b) } else { (spread_a, sec_a) };
    AsymptoticsReport {
        classification: Classification::Inconclusive,
        fit_window: (w_lo, s_hi),
        fit_residual: spread,
        secondary_check: sec,
    }
}

/// Evaluated ingredients of the barrier condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierData<T> {
    pub rho: T,
    /// `B~(rho)`.
    pub b_tilde: T,
    pub beta: T,
    pub rho_np: Option<T>,
    /// `T(1/rho^2)`.
    pub t_at: T,
    /// `rho U'/U`.
    pub log_slope: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierCheck<T> {
    pub certified_global: bool,
    pub details: BarrierData<T>,
}

/// Sufficient condition for global positivity and `rho^-alpha` decay of the
/// exterior solution through `state`:
/// `0 < u < b_inf`, `u' < 0`, `rho u'/u > -B~(rho)/2` and `rho > rho_{N,p}`.
pub fn barrier_check<T: Real>(prm: &Params<T>, state: State<T>) -> BarrierCheck<T> {
    let rho = state.rho;
    let b_tilde = if rho > T::one() { prm.b_tilde(rho) } else { T::nan() };
    let log_slope = rho * state.du / state.u;
    let details = BarrierData {
        rho,
        b_tilde,
        beta: prm.beta_np,
        rho_np: prm.rho_np,
        t_at: prm.barrier_quadratic(T::one() / (rho * rho)),
        log_slope,
    };
    let past = matches!(prm.rho_np, Some(r) if rho > r);
    let certified_global = rho > T::one()
        && state.u > T::zero()
        && state.u < prm.b_inf
        && state.du < T::zero()
        && log_slope > -b_tilde / T::lit(2.0)
        && past;
    BarrierCheck { certified_global, details }
}

/// First sample of a log-chart trajectory at which the barrier certifies global existence.
pub fn first_certified<T: Real>(prm: &Params<T>, traj: &Trajectory<T>) -> Option<State<T>> {
    traj.samples.iter().map(|s| s.state(traj.chart)).find(|&st| barrier_check(prm, st).certified_global)
}

/// Observed threshold between blow-up and global decay, bracketed by bisection
/// on the right parameter in `[lo, hi]`. The endpoints must classify differently.
pub fn threshold_bracket<T: Real>(
    prm: &Params<T>,
    lo: T,
    hi: T,
    s_max: T,
    cfg: &ExtendConfig<T>,
    iterations: usize,
) -> Result<(T, T)> {
    let blows = |q: T| -> Result<Option<bool>> {
        let (_, rep) = extend_and_classify(prm, q, s_max, cfg)?;
        Ok(match rep.classification {
            Classification::Blowup { .. } => Some(true),
            Classification::Inconclusive => None,
            _ => Some(false),
        })
    };
    let (mut a, mut b) = (lo, hi);
    let fa = blows(a)?.ok_or_else(|| Error::NoRootInBracket(format!("endpoint {a} is inconclusive")))?;
    let fb = blows(b)?.ok_or_else(|| Error::NoRootInBracket(format!("endpoint {b} is inconclusive")))?;
    if fa == fb {
        return Err(Error::NoRootInBracket(format!("both endpoints of [{a}, {b}] classify alike")));
    }
    for _ in 0..iterations {
        let m = (a + b) / T::lit(2.0);
        match blows(m)? {
            Some(v) if v == fa => a = m,
            Some(_) => b = m,
            None => break,
        }
    }
    Ok((a.min(b), a.max(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p37() -> Params<f64> {
        Params::new(3, 7.0_f64).unwrap()
    }

    #[test]
    fn singular_solution_decays_with_amplitude_b_inf() {
        let prm = p37();
        let (_, rep) = extend_and_classify(&prm, prm.b_inf, 25.0, &ExtendConfig::new(1e-11)).unwrap();
        match rep.classification {
            Classification::GlobalAlpha { l } => assert!((l - prm.b_inf).abs() < 1e-8, "{l}"),
            c => panic!("{c:?}"),
        }
        assert!(rep.secondary_check < 1e-7);
    }

    #[test]
    fn large_b_blows_up() {
        let prm = p37();
        let (traj, rep) = extend_and_classify(&prm, 1.2 * prm.b0, 25.0, &ExtendConfig::new(1e-11)).unwrap();
        match rep.classification {
            Classification::Blowup { rho_plus_estimate } => assert!(rho_plus_estimate > 1.0),
            c => panic!("{c:?}"),
        }
        assert!(traj.samples.iter().all(|s| s.u > prm.b0));
    }

    #[test]
    fn barrier_examples() {
        let prm = p37();
        let r = 2.5;
        let on = barrier_check(&prm, State::new(r, prm.u_inf(r), prm.du_inf(r)));
        assert!(on.certified_global);
        assert!((on.details.log_slope + 1.0 / 3.0).abs() < 1e-14);
        assert!((on.details.b_tilde / 2.0 - (5.0 / 3.0 - 0.16) / 0.84 / 2.0).abs() < 1e-14);
        let above = barrier_check(&prm, State::new(r, 1.1 * prm.b_inf, -0.1));
        assert!(!above.certified_global);
        let inside = barrier_check(&prm, State::new(1.5, prm.u_inf(1.5), prm.du_inf(1.5)));
        assert!(!inside.certified_global);
    }

    #[test]
    fn s_max_is_checked() {
        let prm = p37();
        assert!(extend_and_classify(&prm, 0.5, 4.0, &ExtendConfig::new(1e-10)).is_err());
        assert!(extend_and_classify(&prm, 0.5, 41.0, &ExtendConfig::new(1e-10)).is_err());
    }
}
