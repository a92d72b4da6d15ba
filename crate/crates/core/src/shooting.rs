//! Two-sided shooting: left family `u(., c)` regular at the origin against the
//! right family `U(., b)` (or `U(., a)` in the critical case) regular at `rho = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{detect_events, integrate, quintic_hermite, Options, Trajectory};
use crate::ode::{lyapunov_hv, residual, residual_scale, State};
use crate::params::{Params, Regime};
use crate::pruefer::{theta_trace, Anchor, PrueferTrace};
use crate::scalar::Real;
use crate::series::{
    init_at_one_critical, init_at_one_subcritical, init_at_origin, origin_offset, subcritical_slope, Direction,
    DEFAULT_DELTA0, DEFAULT_DELTA1,
};

/// Numerical settings shared by the probes and the profile search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootConfig<T> {
    pub tol: T,
    pub rho0: T,
    pub delta0: T,
    pub delta1: T,
    /// Geometric grid density of the `c` scan.
    pub per_decade: usize,
    /// Acceptance threshold on the matched mismatch.
    pub mismatch_tol: T,
}

impl<T: Real> ShootConfig<T> {
    pub fn new(tol: T) -> Self {
        ShootConfig {
            tol,
            rho0: T::lit(0.9),
            delta0: T::lit(DEFAULT_DELTA0),
            delta1: T::lit(DEFAULT_DELTA1),
            per_decade: 64,
            mismatch_tol: T::lit(1e-8),
        }
    }

    fn options(&self) -> Options<T> {
        Options::new(self.tol)
    }

    /// Options for a left-family run seeded at `d0`: the origin guard is lowered below the
    /// seed so that `c`-scaled offsets remain admissible.
    fn left_options(&self, d0: T) -> Options<T> {
        let mut o = Options::new(self.tol);
        o.delta_min = o.delta_min.min(d0 / T::lit(2.0));
        o
    }

    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        if !(self.rho0 > half && self.rho0 <= T::one() - self.delta1) {
            return Err(Error::domain(format!("match radius {} outside (0.5, 1 - delta1]", self.rho0)));
        }
        Ok(())
    }
}

fn concat<T: Real>(prm: &Params<T>, a: Trajectory<T>, b: Trajectory<T>) -> Trajectory<T> {
    let mut t = a;
    t.samples.extend(b.samples.into_iter().skip(1));
    t.status = b.status;
    t.events = detect_events(prm, &t);
    t
}

/// Estimate of `lim u(rho)` at `rho -> 1-` from the dense output near the last sample.
///
/// Fits `u = u1 + s t + K phi(t)` with `t = 1 - rho` and `phi(t) = t^kappa`
/// (`kappa = alpha - (N-3)/2`), or `phi = ln t` when `kappa = 0`, using `u` and `u'`
/// at `t = delta1` and `u'` at `t = 2 delta1`.
pub fn extrapolate_to_one<T: Real>(prm: &Params<T>, traj: &Trajectory<T>) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let last = traj.last();
    let ta = one - last.x;
    let tb = two * ta;
    let (ua, dua) = (last.u, last.du);
    let dub = match traj.eval(one - tb) {
        Some((_, d)) => d,
        None => return ua,
    };
    let kappa = prm.kappa();
    if kappa.abs() < T::lit(1e-12) {
        // u' = -s - K / t in rho; so u'(a) - u'(b) = -K (1/ta - 1/tb)
        let k = -(dua - dub) / (one / ta - one / tb);
        let s = -dua - k / ta;
        ua - s * ta - k * ta.ln()
    } else {
        // u' = -s - K kappa t^(kappa - 1)
        let ga = kappa * ta.powf(kappa - one);
        let gb = kappa * tb.powf(kappa - one);
        let k = -(dua - dub) / (ga - gb);
        let s = -dua - k * ga;
        ua - s * ta - k * ta.powf(kappa)
    }
}

/// Left family integrated from the origin seed to `1 - delta1`, with its Pruefer trace.
#[derive(Debug, Clone)]
pub struct LeftProbe<T> {
    pub c: T,
    /// State at the match radius.
    pub state: State<T>,
    pub trajectory: Trajectory<T>,
    pub trace: PrueferTrace<T>,
    pub u_at_one: T,
    /// Zeros of `w` on `(0, 1)`.
    pub zeros: i64,
}

pub fn left_probe<T: Real>(prm: &Params<T>, c: T, cfg: &ShootConfig<T>) -> Result<LeftProbe<T>> {
    cfg.validate()?;
    if !(c >= T::zero()) {
        return Err(Error::domain(format!("left parameter c = {c} must be nonnegative")));
    }
    let d0 = origin_offset(prm, c, cfg.delta0);
    let seed = init_at_origin(prm, c, d0)?;
    let opts = cfg.left_options(d0);
    let a = integrate(prm, seed, cfg.rho0, &opts)?;
    let state = State::new(cfg.rho0, a.last().u, a.last().du);
    let end = T::one() - cfg.delta1;
    let traj = if cfg.rho0 < end {
        let b = integrate(prm, state, end, &opts)?;
        concat(prm, a, b)
    } else {
        a
    };
    let trace = theta_trace(prm, &traj, Anchor::left(d0))?;
    let u_at_one = extrapolate_to_one(prm, &traj);
    Ok(LeftProbe { c, state, zeros: trace.zero_count, trajectory: traj, trace, u_at_one })
}

/// Right family integrated backward from `1 - delta1` to the match radius.
#[derive(Debug, Clone)]
pub struct RightProbe<T> {
    pub param: T,
    pub state: State<T>,
    pub trajectory: Trajectory<T>,
    pub trace: PrueferTrace<T>,
}

/// Seed of the right family at `1 -/+ delta` for the current regime.
pub fn right_seed<T: Real>(prm: &Params<T>, param: T, delta: T, side: Direction) -> Result<State<T>> {
    match prm.regime {
        Regime::SubcriticalRange => init_at_one_subcritical(prm, param, delta, side),
        Regime::CriticalRange => init_at_one_critical(prm, param, delta, side),
        r => Err(Error::Regime(r)),
    }
}

pub fn right_state<T: Real>(prm: &Params<T>, param: T, cfg: &ShootConfig<T>) -> Result<(State<T>, Trajectory<T>)> {
    let seed = right_seed(prm, param, cfg.delta1, Direction::TowardZero)?;
    let t = integrate(prm, seed, cfg.rho0, &cfg.options())?;
    Ok((State::new(cfg.rho0, t.last().u, t.last().du), t))
}

pub fn right_probe<T: Real>(prm: &Params<T>, param: T, cfg: &ShootConfig<T>) -> Result<RightProbe<T>> {
    cfg.validate()?;
    prm.require_shootable()?;
    let (state, t) = right_state(prm, param, cfg)?;
    let at = T::one() - cfg.delta1;
    let anchor = match prm.regime {
        Regime::CriticalRange => Anchor::right_critical(prm, param, at),
        _ => Anchor::right_subcritical(prm, param, at),
    };
    let trace = theta_trace(prm, &t, anchor)?;
    Ok(RightProbe { param, state, trajectory: t, trace })
}

/// `(u_left - u_right, u_left' - u_right')` at the match radius.
pub fn mismatch<T: Real>(prm: &Params<T>, c: T, right: T, cfg: &ShootConfig<T>) -> Result<(T, T)> {
    cfg.validate()?;
    prm.require_shootable()?;
    let l = left_state(prm, c, cfg)?;
    let (r, _) = right_state(prm, right, cfg)?;
    Ok((l.u - r.u, l.du - r.du))
}

pub fn left_state<T: Real>(prm: &Params<T>, c: T, cfg: &ShootConfig<T>) -> Result<State<T>> {
    let d0 = origin_offset(prm, c, cfg.delta0);
    let seed = init_at_origin(prm, c, d0)?;
    let a = integrate(prm, seed, cfg.rho0, &cfg.left_options(d0))?;
    Ok(State::new(cfg.rho0, a.last().u, a.last().du))
}

/// One row of a `c` scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow<T> {
    pub c: T,
    pub u1: T,
    pub zeros: i64,
    /// `Theta` at the match radius.
    pub theta: T,
    /// Smallest sampled `H_v` along the left trajectory.
    pub hv_floor: T,
    pub failed: bool,
}

pub fn scan_row<T: Real>(prm: &Params<T>, c: T, cfg: &ShootConfig<T>) -> ScanRow<T> {
    match left_probe(prm, c, cfg) {
        Ok(l) => {
            let hv_floor = l
                .trajectory
                .rho_states()
                .into_iter()
                .map(|st| lyapunov_hv(prm, st))
                .fold(T::infinity(), |a, b| a.min(b));
            let theta = l.trace.theta_at(cfg.rho0).unwrap_or_else(|_| T::nan());
            ScanRow { c, u1: l.u_at_one, zeros: l.zeros, theta, hv_floor, failed: false }
        }
        Err(_) => {
            let nan = T::nan();
            ScanRow { c, u1: nan, zeros: -1, theta: nan, hv_floor: nan, failed: true }
        }
    }
}

/// Left-family table over `c_grid`; failed rows are flagged rather than aborting.
pub fn scan<T: Real>(prm: &Params<T>, c_grid: &[T], cfg: &ShootConfig<T>) -> Result<Vec<ScanRow<T>>> {
    cfg.validate()?;
    Ok(c_grid.iter().map(|&c| scan_row(prm, c, cfg)).collect())
}

/// Geometric grid on `[lo, hi]` with `per_decade` points per decade (at least two points).
pub fn geometric_grid<T: Real>(lo: T, hi: T, per_decade: usize) -> Vec<T> {
    let decades = (hi / lo).log10();
    let n = ((decades * T::int(per_decade as i64)).ceil().to_usize().unwrap_or(1)).max(1);
    grid_with_points(lo, hi, n + 1)
}

fn grid_with_points<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    let m = points.max(2) - 1;
    let ratio = (hi / lo).ln();
    (0..=m).map(|i| if i == m { hi } else { lo * (ratio * T::int(i as i64) / T::int(m as i64)).exp() }).collect()
}

/// Range and density of the `c` search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Search<T> {
    pub c_lo: T,
    pub c_hi: T,
    /// Total grid size; `None` uses the configured points per decade.
    pub grid_points: Option<usize>,
}

impl<T: Real> Default for Search<T> {
    fn default() -> Self {
        Search { c_lo: T::lit(0.1), c_hi: T::lit(1e3), grid_points: None }
    }
}

impl<T: Real> Search<T> {
    pub fn grid(&self, per_decade: usize) -> Result<Vec<T>> {
        if !(self.c_lo > T::zero() && self.c_hi > self.c_lo && self.c_hi.is_finite()) {
            return Err(Error::domain(format!(
                "search range [{}, {}] must satisfy 0 < c_lo < c_hi",
                self.c_lo, self.c_hi
            )));
        }
        Ok(match self.grid_points {
            Some(n) => grid_with_points(self.c_lo, self.c_hi, n),
            None => geometric_grid(self.c_lo, self.c_hi, per_decade),
        })
    }
}

/// A located regular profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult<T> {
    pub regime: Regime,
    pub n_index: u32,
    pub zero_count: i64,
    pub c: T,
    /// `b` (subcritical) or `a` (critical).
    pub right_param: T,
    pub u_at_one: T,
    pub mismatch_norm: T,
    pub rho0: T,
    /// `u'(1)` of the right family.
    pub du_at_one: T,
    /// Largest ODE residual of the assembled profile on the verification grid,
    /// relative to `1 +` the summed magnitude of the equation's terms.
    pub assembled_residual: T,
    /// Approximate locations of further sign changes in the accepted window.
    pub other_roots: Vec<T>,
}

fn bisect<T: Real, F>(mut f: F, mut a: T, mut b: T, mut fa: T, xtol: impl Fn(T) -> T, max_iter: usize) -> Result<T>
where
    F: FnMut(T) -> Result<T>,
{
    for _ in 0..max_iter {
        let m = (a + b) / T::lit(2.0);
        if (b - a).abs() <= xtol(m) || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m)?;
        if fm == T::zero() {
            return Ok(m);
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(Error::ToleranceNotMet(format!("bisection stalled on [{a}, {b}]")))
}

/// Right parameter whose state at the match radius has value `target`, or `None`.
fn inner_solve<T: Real>(prm: &Params<T>, target: T, cfg: &ShootConfig<T>) -> Result<Option<(T, State<T>)>> {
    let g = |q: T| -> Result<T> { Ok(right_state(prm, q, cfg)?.0.u - target) };
    let (lo, hi) = match prm.regime {
        Regime::SubcriticalRange => (T::lit(1e-6), prm.b0 * T::lit(RIGHT_B_SPAN)),
        Regime::CriticalRange => {
            let mut w = T::one();
            let mut found = None;
            for _ in 0..24 {
                let (ga, gb) = (g(-w)?, g(w)?);
                if (ga < T::zero()) != (gb < T::zero()) {
                    found = Some((-w, w));
                    break;
                }
                w = w * T::lit(2.0);
            }
            match found {
                Some(b) => b,
                None => return Ok(None),
            }
        }
        r => return Err(Error::Regime(r)),
    };
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if (glo < T::zero()) == (ghi < T::zero()) {
        return Ok(None);
    }
    let eps = T::epsilon() * T::lit(4.0);
    let q = bisect(g, lo, hi, glo, |m| eps * m.abs().max(T::one()), 200)?;
    Ok(Some((q, right_state(prm, q, cfg)?.0)))
}

/// Upper end of the inner `b` bracket, in units of `b0`. `U(rho0, b)` stays monotone
/// a little beyond the constant solution, and stopping at `b0` would cut the
/// reduced objective off exactly at its `n = 0` root.
const RIGHT_B_SPAN: f64 = 1.15;

/// Value of the reduced matching objective at `c`.
#[derive(Debug, Clone, Copy)]
struct Reduced<T> {
    f: T,
    matched: bool,
    right: T,
    left: State<T>,
    right_state: State<T>,
}

fn reduced<T: Real>(prm: &Params<T>, c: T, cfg: &ShootConfig<T>) -> Result<Reduced<T>> {
    let left = left_state(prm, c, cfg)?;
    match inner_solve(prm, left.u, cfg)? {
        Some((q, rs)) => Ok(Reduced { f: left.du - rs.du, matched: true, right: q, left, right_state: rs }),
        None => {
            // value mismatch against the nearer end of the subcritical bracket
            let q = if left.u > prm.b0 { prm.b0 * T::lit(RIGHT_B_SPAN) } else { T::lit(1e-6) };
            let rs = right_state(prm, q, cfg)?.0;
            Ok(Reduced { f: left.u - rs.u, matched: false, right: q, left, right_state: rs })
        }
    }
}

fn root_of_reduced<T: Real>(prm: &Params<T>, a: T, b: T, fa: T, cfg: &ShootConfig<T>) -> Result<T> {
    let xt = |m: T| T::lit(1e-12) * m.abs().max(T::one());
    bisect(|c| Ok(reduced(prm, c, cfg)?.f), a, b, fa, xt, 200)
}

/// Assembled profile: left trajectory on `[delta0, rho0]` and right trajectory on
/// `[rho0, 1 - delta1]`, integrated with a capped step for verification.
#[derive(Debug, Clone)]
pub struct Assembled<T> {
    pub left: Trajectory<T>,
    pub right: Trajectory<T>,
    /// `(du, du')` at the match radius.
    pub jump: (T, T),
    pub residual: T,
    pub zeros: i64,
}

fn midpoint_residual<T: Real>(prm: &Params<T>, t: &Trajectory<T>) -> T {
    let half = T::lit(0.5);
    t.samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let x = a.x + half * (b.x - a.x);
            let (u, du, ddu) = quintic_hermite(a.x, b.x, [a.u, b.u], [a.du, b.du], [a.ddu, b.ddu], x);
            residual(prm, x, u, du, ddu).abs() / (T::one() + residual_scale(prm, x, u, du, ddu))
        })
        .fold(T::zero(), |m, r| m.max(r))
}

pub fn assemble<T: Real>(prm: &Params<T>, c: T, right: T, cfg: &ShootConfig<T>) -> Result<Assembled<T>> {
    // resolve the core scale c^(-1/alpha) near the origin
    let h_max = Some(T::lit(2e-3) * T::one().min(c.abs().powf(-T::one() / prm.alpha)));
    let d0 = origin_offset(prm, c, cfg.delta0);
    let mut lo = cfg.left_options(d0);
    lo.h_max = h_max;
    let seed = init_at_origin(prm, c, d0)?;
    let left = integrate(prm, seed, cfg.rho0, &lo)?;
    let mut ro = cfg.options();
    ro.h_max = h_max;
    let rseed = right_seed(prm, right, cfg.delta1, Direction::TowardZero)?;
    let rt = integrate(prm, rseed, cfg.rho0, &ro)?;
    let (l, r) = (left.last(), rt.last());
    let jump = (l.u - r.u, l.du - r.du);
    let residual = midpoint_residual(prm, &left).max(midpoint_residual(prm, &rt));
    let lt = theta_trace(prm, &left, Anchor::left(d0))?;
    let at = T::one() - cfg.delta1;
    let anchor = match prm.regime {
        Regime::CriticalRange => Anchor::right_critical(prm, right, at),
        _ => Anchor::right_subcritical(prm, right, at),
    };
    let rtr = theta_trace(prm, &rt, anchor)?;
    let zeros = lt.count_zeros(d0, cfg.rho0)? + rtr.count_zeros(cfg.rho0, at)?;
    Ok(Assembled { left, right: rt, jump, residual, zeros })
}

fn certify<T: Real>(
    prm: &Params<T>,
    n_index: u32,
    c: T,
    cfg: &ShootConfig<T>,
    other_roots: Vec<T>,
) -> Result<(ShootResult<T>, bool)> {
    let red = reduced(prm, c, cfg)?;
    let asm = assemble(prm, c, red.right, cfg)?;
    let mismatch_norm = (red.left.u - red.right_state.u).abs().max((red.left.du - red.right_state.du).abs());
    let target = n_index as i64 + 1;
    let (u_at_one, du_at_one, count_ok) = match prm.regime {
        Regime::CriticalRange => (prm.b0, red.right, asm.zeros >= target),
        _ => (red.right, subcritical_slope(prm, red.right), asm.zeros == target),
    };
    let res = ShootResult {
        regime: prm.regime,
        n_index,
        zero_count: asm.zeros,
        c,
        right_param: red.right,
        u_at_one,
        mismatch_norm,
        rho0: cfg.rho0,
        du_at_one,
        assembled_residual: asm.residual,
        other_roots,
    };
    let ok = red.matched && count_ok && mismatch_norm <= cfg.mismatch_tol;
    Ok((res, ok))
}

/// Locates the regular profile with index `n_index`.
///
/// Subcritical: the first root in increasing `c` of the reduced derivative mismatch
/// inside a window of `n_index + 1` zeros. Critical: the first root of
/// `u(1, c) - b0` whose assembled profile has at least `n_index + 1` zeros,
/// polished by the same reduced matching with the right parameter `a`.
pub fn find_profile<T: Real>(
    prm: &Params<T>,
    n_index: u32,
    search: &Search<T>,
    cfg: &ShootConfig<T>,
) -> Result<ShootResult<T>> {
    cfg.validate()?;
    prm.require_shootable()?;
    let grid = search.grid(cfg.per_decade)?;
    let rows: Vec<ScanRow<T>> = grid.iter().map(|&c| scan_row(prm, c, cfg)).collect();
    let target = n_index as i64 + 1;
    let mut rejected: Option<ShootResult<T>> = None;

    match prm.regime {
        Regime::SubcriticalRange => {
            let mut i = 0;
            while i < rows.len() {
                if rows[i].zeros != target {
                    i += 1;
                    continue;
                }
                let mut j = i;
                while j + 1 < rows.len() && rows[j + 1].zeros == target {
                    j += 1;
                }
                let fs: Vec<Option<T>> =
                    (i..=j).map(|k| reduced(prm, rows[k].c, cfg).ok().filter(|r| r.matched).map(|r| r.f)).collect();
                let mut brackets = Vec::new();
                for k in 0..fs.len().saturating_sub(1) {
                    if let (Some(a), Some(b)) = (fs[k], fs[k + 1]) {
                        if (a < T::zero()) != (b < T::zero()) {
                            brackets.push((rows[i + k].c, rows[i + k + 1].c, a));
                        }
                    }
                }
                for (bi, &(a, b, fa)) in brackets.iter().enumerate() {
                    let c = root_of_reduced(prm, a, b, fa, cfg)?;
                    let others = brackets[bi + 1..].iter().map(|br| (br.0 + br.1) / T::lit(2.0)).collect();
                    let (res, ok) = certify(prm, n_index, c, cfg, others)?;
                    if ok {
                        return Ok(res);
                    }
                    rejected.get_or_insert(res);
                }
                i = j + 1;
            }
        }
        Regime::CriticalRange => {
            for k in 0..rows.len().saturating_sub(1) {
                let (r0, r1) = (rows[k], rows[k + 1]);
                if r0.failed || r1.failed {
                    continue;
                }
                let (g0, g1) = (r0.u1 - prm.b0, r1.u1 - prm.b0);
                if (g0 < T::zero()) == (g1 < T::zero()) {
                    continue;
                }
                let gfun = |c: T| -> Result<T> { Ok(left_probe(prm, c, cfg)?.u_at_one - prm.b0) };
                let cg = bisect(gfun, r0.c, r1.c, g0, |m| T::lit(1e-10) * m, 200)?;
                let mut polished = None;
                for eps in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
                    let e = T::lit(eps);
                    let (a, b) = (cg * (T::one() - e), cg * (T::one() + e));
                    let (fa, fb) = (reduced(prm, a, cfg)?.f, reduced(prm, b, cfg)?.f);
                    if (fa < T::zero()) != (fb < T::zero()) {
                        polished = Some(root_of_reduced(prm, a, b, fa, cfg)?);
                        break;
                    }
                }
                let c = match polished {
                    Some(c) => c,
                    None => continue,
                };
                let (res, ok) = certify(prm, n_index, c, cfg, Vec::new())?;
                if ok {
                    return Ok(res);
                }
                if res.zero_count >= target {
                    rejected.get_or_insert(res);
                }
            }
        }
        r => return Err(Error::Regime(r)),
    }
    match rejected {
        Some(r) => Err(Error::ToleranceNotMet(format!(
            "best candidate c = {} has mismatch {} and {} zeros",
            r.c, r.mismatch_norm, r.zero_count
        ))),
        None => {
            let table: Vec<String> = rows.iter().map(|r| format!("{}:{}", r.c, r.zeros)).collect();
            Err(Error::NoRootInBracket(format!(
                "no profile with {} zeros for c in [{}, {}]; scan (c:zeros) = [{}]",
                target,
                search.c_lo,
                search.c_hi,
                table.join(", ")
            )))
        }
    }
}
