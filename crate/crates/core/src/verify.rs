//! Self-checks over one parameter pair: exact solutions, Lyapunov monotonicity,
//! Pruefer versus direct zero counts, and barrier consistency.

use serde::{Deserialize, Serialize};

use crate::continuation::{extend_and_classify, first_certified, Classification, ExtendConfig};
use crate::error::Result;
use crate::ode::{cubic_exact, cubic_exact_ddu, lyapunov_h, lyapunov_hv, residual, residual_scale};
use crate::oracle::count_zeros_direct;
use crate::params::{Params, Regime};
use crate::scalar::Real;
use crate::shooting::{geometric_grid, left_probe, ShootConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

/// Evenly spaced points in `(0.01, 0.99)` and `(1.01, 10)`, `n` in total.
pub fn residual_grid<T: Real>(n: usize) -> Vec<T> {
    let half = n / 2;
    let inner = (0..half).map(|i| T::lit(0.01) + T::lit(0.98) * T::int(i as i64 + 1) / T::int(half as i64 + 1));
    let outer =
        (0..n - half).map(|i| T::lit(1.01) + T::lit(8.99) * T::int(i as i64 + 1) / T::int((n - half) as i64 + 1));
    inner.chain(outer).collect()
}

/// Largest absolute and scale-relative residuals of a closed-form solution on [`residual_grid`].
pub fn exact_residual<T: Real>(prm: &Params<T>, n: usize, sol: impl Fn(T) -> (T, T, T)) -> (T, T) {
    residual_grid::<T>(n).into_iter().fold((T::zero(), T::zero()), |(a, r), rho| {
        let (u, du, ddu) = sol(rho);
        let res = residual(prm, rho, u, du, ddu).abs();
        (a.max(res), r.max(res / (T::one() + residual_scale(prm, rho, u, du, ddu))))
    })
}

/// Largest absolute residuals of `u = b0` and of `u_inf` on [`residual_grid`].
pub fn exact_residuals<T: Real>(prm: &Params<T>, n: usize) -> (T, T) {
    let zero = T::zero();
    let r0 = exact_residual(prm, n, |_| (prm.b0, zero, zero)).0;
    let r1 = exact_residual(prm, n, |r| (prm.u_inf(r), prm.du_inf(r), prm.ddu_inf(r))).0;
    (r0, r1)
}

/// Largest positive increments of `H` (on `(0,1)`) and `H_v` along a left trajectory.
pub fn lyapunov_increments<T: Real>(prm: &Params<T>, c: T, cfg: &ShootConfig<T>) -> Result<(T, T)> {
    let probe = left_probe(prm, c, cfg)?;
    let states = probe.trajectory.rho_states();
    let zero = T::zero();
    let mut dh = zero;
    let mut dhv = zero;
    for w in states.windows(2) {
        dh = dh.max(lyapunov_h(prm, w[1]) - lyapunov_h(prm, w[0]));
        dhv = dhv.max(lyapunov_hv(prm, w[1]) - lyapunov_hv(prm, w[0]));
    }
    Ok((dh, dhv))
}

pub fn run_checks<T: Real>(prm: &Params<T>, tol: T) -> Vec<Check> {
    let mut out = Vec::new();
    let cfg = ShootConfig::new(tol);

    // f64 rounding of u alone costs about p |u|^p eps, so exact solutions are judged
    // by the residual relative to the summed term magnitudes
    let rel_lim = T::lit(1e-13).max(T::epsilon() * T::lit(64.0));
    let zero = T::zero();
    let mut exact: Vec<(&str, (T, T))> = vec![
        ("constant solution residual", exact_residual(prm, 1000, |_| (prm.b0, zero, zero))),
        ("singular solution residual", exact_residual(prm, 1000, |r| (prm.u_inf(r), prm.du_inf(r), prm.ddu_inf(r)))),
    ];
    if prm.n >= 5 && prm.p == T::lit(3.0) && prm.regime == Regime::CriticalRange {
        let sol = |r: T| {
            let st = cubic_exact(prm.n, r);
            (st.u, st.du, cubic_exact_ddu(prm.n, r))
        };
        exact.push(("closed-form cubic profile residual", exact_residual(prm, 1000, sol)));
    }
    for (name, (abs, rel)) in exact {
        out.push(Check::new(name, rel < rel_lim, format!("max |R| = {abs:e}, relative {rel:e}")));
    }

    if prm.regime.is_shootable() {
        let cs = geometric_grid(T::lit(0.1), T::lit(50.0), 4);
        let mut worst = (T::zero(), T::zero());
        let mut failed = None;
        for &c in &cs {
            match lyapunov_increments(prm, c, &cfg) {
                Ok((a, b)) => worst = (worst.0.max(a), worst.1.max(b)),
                Err(e) => failed = Some(format!("c = {c}: {e}")),
            }
        }
        let ok = failed.is_none() && worst.0 <= T::lit(1e-9) && worst.1 <= T::lit(1e-9);
        let detail = failed.unwrap_or_else(|| {
            format!("max dH = {:e}, max dHv = {:e} over {} trajectories", worst.0, worst.1, cs.len())
        });
        out.push(Check::new("Lyapunov monotonicity", ok, detail));

        let mut mism = Vec::new();
        let mut pairs = 0;
        for &c in &cs {
            let probe = match left_probe(prm, c, &cfg) {
                Ok(p) => p,
                Err(e) => {
                    mism.push(format!("c = {c}: {e}"));
                    continue;
                }
            };
            let (lo, hi) = probe.trace.span();
            for k in 0..4 {
                let a = lo + (hi - lo) * T::lit(0.1 * k as f64);
                let b = hi - (hi - lo) * T::lit(0.05 * k as f64);
                let pc = probe.trace.count_zeros(a, b);
                let dc = count_zeros_direct(prm, &probe.trajectory, a, b);
                pairs += 1;
                match (pc, dc) {
                    (Ok(x), Ok(y)) if x == y => {}
                    (x, y) => mism.push(format!("c = {c}, [{a}, {b}]: {x:?} vs {y:?}")),
                }
            }
        }
        out.push(Check::new(
            "Pruefer agreement",
            mism.is_empty(),
            if mism.is_empty() { format!("{pairs} intervals agree") } else { mism.join("; ") },
        ));

        let ecfg = ExtendConfig::new(tol);
        let params: Vec<T> = match prm.regime {
            Regime::CriticalRange => {
                let a0 = -prm.alpha * prm.b_inf;
                (1..=10).map(|i| a0 * (T::one() + T::lit(0.05) * T::int(i))).collect()
            }
            _ => (1..=10).map(|i| prm.b_inf * (T::lit(0.5) + T::lit(0.05) * T::int(i - 1))).collect(),
        };
        let s_max = T::lit(25.0);
        let mut bad = Vec::new();
        let mut certified = 0;
        for q in params {
            match extend_and_classify(prm, q, s_max, &ecfg) {
                Ok((traj, rep)) => {
                    if first_certified(prm, &traj).is_some() {
                        certified += 1;
                        if !matches!(rep.classification, Classification::GlobalAlpha { .. }) {
                            bad.push(format!("{q}: certified but {}", rep.classification.name()));
                        }
                    }
                }
                Err(e) => bad.push(format!("{q}: {e}")),
            }
        }
        out.push(Check::new(
            "barrier self-consistency",
            bad.is_empty(),
            if bad.is_empty() { format!("{certified} certified runs classify GlobalAlpha") } else { bad.join("; ") },
        ));
    }
    out
}
