//! Worked examples whose reference values were evaluated independently at 30
//! digits and frozen here.

use approx::assert_relative_eq;

use selfsim::continuation::{barrier_check, extend_and_classify, Classification, ExtendConfig};
use selfsim::ground_state::{rescaling_check, taylor_seed};
use selfsim::integrator::{integrate, integrate_log, Options, Status};
use selfsim::ode::{cubic_exact, lyapunov_h, State};
use selfsim::pruefer::{theta_trace, Anchor};
use selfsim::series::{init_at_one_critical, init_at_one_subcritical, init_at_origin, Direction};
use selfsim::shooting::{find_profile, left_probe, mismatch, right_probe, scan_row, Search, ShootConfig};
use selfsim::{Params, Regime};

const B0_37: f64 = 0.8735804647362989;
const BINF_37: f64 = 0.7782717162260105;

fn p37() -> Params<f64> {
    Params::new(3, 7.0).unwrap()
}

fn p53() -> Params<f64> {
    Params::new(5, 3.0).unwrap()
}

fn cfg() -> ShootConfig<f64> {
    ShootConfig::new(1e-11)
}

#[test]
fn constants() {
    let prm = p37();
    assert_relative_eq!(prm.b0, B0_37, epsilon = 1e-15);
    assert_relative_eq!(prm.b_inf, BINF_37, epsilon = 1e-15);
    assert_relative_eq!(prm.beta_np, -4.222222222222222, epsilon = 1e-14);
    assert_eq!(prm.regime, Regime::SubcriticalRange);
    let crit = p53();
    assert_eq!(crit.regime, Regime::CriticalRange);
    assert_relative_eq!(crit.b0, crit.b_inf, epsilon = 1e-15);
}

#[test]
fn h_at_origin() {
    let prm = p37();
    let c = 1.3_f64;
    let h = lyapunov_h(&prm, State::new(0.0, c, 0.0));
    assert_relative_eq!(h, c.powi(8) / 8.0 - 2.0 / 9.0 * c * c, epsilon = 1e-14);
    assert_relative_eq!(lyapunov_h(&prm, State::new(0.0, 1.0, 0.0)), -0.09722222222222222, epsilon = 1e-15);
}

#[test]
fn critical_seed_matches_closed_form() {
    let prm = p53();
    let a = -1.5 * 2f64.sqrt();
    for side in [Direction::TowardZero, Direction::TowardInfinity] {
        let st = init_at_one_critical(&prm, a, 1e-3, side).unwrap();
        let ex = cubic_exact(5, st.rho);
        assert!((st.u - ex.u).abs() < 1e-8);
        assert!((st.du - ex.du).abs() < 1e-6);
    }
}

#[test]
fn subcritical_seed_at_b_inf_follows_singular_solution() {
    let prm = p37();
    let st = init_at_one_subcritical(&prm, prm.b_inf, 1e-3, Direction::TowardZero).unwrap();
    assert!((st.du - prm.du_inf(st.rho)).abs() < 1e-5);
    assert_relative_eq!(prm.du_inf(1.0), -0.25942390540867016, epsilon = 1e-15);
}

#[test]
fn origin_run_stays_below_envelope() {
    let prm = p37();
    let seed = init_at_origin(&prm, 5.0, 1e-4).unwrap();
    let mut opts = Options::new(1e-11);
    opts.delta_min = 5e-5;
    let t = integrate(&prm, seed, 0.999, &opts).unwrap();
    assert_eq!(t.status, Status::Completed);
    let u = t.last().u;
    assert!(u.is_finite() && u < prm.upper_envelope(1.0));
}

#[test]
fn exterior_blowup_above_constant() {
    let prm = p37();
    let seed = init_at_one_subcritical(&prm, 1.2 * prm.b0, 1e-5, Direction::TowardInfinity).unwrap();
    let t = integrate_log(&prm, seed.to_log(), 30.0, &Options::new(1e-11)).unwrap();
    let Status::BlowupGuard(s) = t.status else { panic!("{:?}", t.status) };
    assert!(s < 30.0);
    assert!(t.rho_states().iter().all(|st| st.u > prm.b0));
}

#[test]
fn constant_trajectory_crosses_once() {
    let prm = p37();
    let probe = left_probe(&prm, prm.b0, &cfg()).unwrap();
    assert_eq!(probe.zeros, 1);
    assert_relative_eq!(probe.u_at_one, prm.b0, epsilon = 1e-12);
    let (lo, hi) = probe.trace.span();
    let counts = [(lo, 0.707), (0.707, 0.7072), (0.7072, hi)].map(|(a, b)| probe.trace.count_zeros(a, b).unwrap());
    assert_eq!(counts, [0, 1, 0]);
    let row = scan_row(&prm, prm.b0, &cfg());
    assert_eq!(row.zeros, 1);
    assert_relative_eq!(row.u1, prm.b0, epsilon = 1e-12);
}

#[test]
fn closed_form_profile_crosses_once() {
    let prm = p53();
    let mut opts = Options::new(1e-12);
    opts.delta_min = 1e-6;
    let t = integrate(&prm, cubic_exact(5, 1e-4), 1.0 - 1e-5, &opts).unwrap();
    let tr = theta_trace(&prm, &t, Anchor::left(1e-4)).unwrap();
    assert_eq!(tr.zero_count, 1);
}

#[test]
fn theta_decreases_with_c() {
    let prm = p37();
    let th: Vec<f64> = [1.0, 5.0, 25.0, 125.0].iter().map(|&c| scan_row(&prm, c, &cfg()).theta).collect();
    assert!(th.windows(2).all(|w| w[1] <= w[0]), "{th:?}");
    assert!(th[1] < std::f64::consts::FRAC_PI_2 - std::f64::consts::PI);
}

#[test]
fn right_family_is_continuous_at_b_inf() {
    let prm = p37();
    let probe = right_probe(&prm, 0.999 * prm.b_inf, &cfg()).unwrap();
    assert!((probe.state.u - prm.u_inf(0.9)).abs() < 1e-2);
}

#[test]
fn mismatch_is_stable_under_refinement() {
    let prm = p37();
    let a = mismatch(&prm, prm.b0, 0.5 * prm.b0, &cfg()).unwrap();
    let b = mismatch(&prm, prm.b0, 0.5 * prm.b0, &ShootConfig::new(1e-13)).unwrap();
    assert!(a.0 != 0.0 && a.1 != 0.0);
    assert_eq!((a.0.signum(), a.1.signum()), (b.0.signum(), b.1.signum()));
    assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8);
}

#[test]
fn first_profiles() {
    let prm = p37();
    let r0 = find_profile(&prm, 0, &Search::default(), &cfg()).unwrap();
    assert_eq!(r0.zero_count, 1);
    assert_relative_eq!(r0.c, B0_37, epsilon = 1e-9);
    let r1 = find_profile(&prm, 1, &Search::default(), &cfg()).unwrap();
    assert_eq!(r1.zero_count, 2);
    assert!(r1.u_at_one > 0.0 && r1.u_at_one < prm.b0);
    assert_relative_eq!(r1.c, 2.054390357195, epsilon = 1e-8);

    let crit = p53();
    let r = find_profile(&crit, 0, &Search::default(), &cfg()).unwrap();
    assert_relative_eq!(r.c, 4.0 * 2f64.sqrt(), max_relative = 1e-9);
    assert_relative_eq!(r.right_param, -1.5 * 2f64.sqrt(), max_relative = 1e-9);
}

#[test]
fn scan_counts_are_nondecreasing() {
    let prm = p37();
    let rows: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|&c| scan_row(&prm, c, &cfg())).collect();
    assert!(rows.windows(2).all(|w| w[0].zeros <= w[1].zeros));
    assert!(rows.iter().all(|r| (r.u1 - prm.b_inf).abs() < 0.05));
}

#[test]
fn exterior_examples() {
    let prm = p37();
    let ecfg = ExtendConfig::new(1e-11);
    let (_, rep) = extend_and_classify(&prm, 0.9 * prm.b_inf, 25.0, &ecfg).unwrap();
    let Classification::GlobalAlpha { l } = rep.classification else { panic!() };
    assert!(l < 0.9 * prm.b_inf);
    let (_, rep) = extend_and_classify(&prm, 0.999 * prm.b0, 25.0, &ecfg).unwrap();
    let Classification::GlobalAlpha { l } = rep.classification else { panic!() };
    assert!(l > 0.999 * prm.b0);
    let (_, rep) = extend_and_classify(&prm, 1.05, 25.0, &ecfg).unwrap();
    assert!(matches!(rep.classification, Classification::Blowup { .. }));
}

#[test]
fn barrier_on_singular_solution() {
    let prm = p37();
    let rho = 2.5;
    let chk = barrier_check(&prm, State::new(rho, prm.u_inf(rho), prm.du_inf(rho)));
    assert!(chk.certified_global);
    assert_relative_eq!(chk.details.log_slope, -1.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(-chk.details.b_tilde / 2.0, -0.8968253968253969, epsilon = 1e-14);
}

#[test]
fn ground_state_seed() {
    for n in [3u32, 4, 7] {
        let prm = Params::new(n, 7.0).unwrap();
        let (q, _) = taylor_seed(&prm, 1e-2);
        assert!((q - (1.0 - 1e-4 / (2.0 * n as f64))).abs() < 1e-8);
    }
}

#[test]
fn rescaling_deviation_decreases() {
    let prm = p37();
    let d2 = rescaling_check(&prm, 1e2, 1.0, 1e-11).unwrap();
    let d3 = rescaling_check(&prm, 1e3, 1.0, 1e-11).unwrap();
    assert!(d3 < d2);
}
