//! Parameter validation and the closed-form constants of the profile equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Position of `p` relative to the exponents `1+4/(N-2)` and `1+4/(N-3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `1+4/(N-2) < p < 1+4/(N-3)` (any supercritical `p` when `N = 3`).
    SubcriticalRange,
    /// `N >= 4` and `p = 1+4/(N-3)`, where `b0 = b_inf`.
    CriticalRange,
    /// `N >= 4` and `p > 1+4/(N-3)`.
    AboveRange,
    /// `p <= 1+4/(N-2)`: not energy supercritical.
    Unsupported,
}

impl Regime {
    pub fn is_shootable(self) -> bool {
        matches!(self, Regime::SubcriticalRange | Regime::CriticalRange)
    }
}

/// Validated `(N, p)` together with every derived constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params<T> {
    pub n: u32,
    pub p: T,
    /// Scaling exponent `2/(p-1)`.
    pub alpha: T,
    /// Critical Sobolev exponent `N/2 - alpha`.
    pub s_c: T,
    /// Amplitude of the constant solution.
    pub b0: T,
    /// Amplitude of the singular solution `b_inf * rho^(-alpha)`.
    pub b_inf: T,
    /// Joseph-Lundgren exponent (`+inf` for `N <= 10`).
    pub p_jl: T,
    pub regime: Regime,
    /// Linear coefficient of the barrier quadratic `T(X)`.
    pub beta_np: T,
    /// Barrier radius; `None` when the barrier quadratic has no real root.
    pub rho_np: Option<T>,
}

fn relative_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(8.0))
}

impl<T: Real> Params<T> {
    /// Validates `(N, p)` and derives all constants.
    pub fn new(n: u32, p: T) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("dimension N = {n} must be at least 3")));
        }
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::domain(format!("exponent p = {p} must be a finite real > 1")));
        }
        let one = T::one();
        let two = T::lit(2.0);
        let nf = T::int(n as i64);
        let alpha = two / (p - one);
        let s_c = nf / two - alpha;
        let b0 = (two * (p + one) / ((p - one) * (p - one))).powf(one / (p - one));
        let sing = alpha * (nf - two - alpha);
        let b_inf = if sing > T::zero() { sing.powf(alpha / two) } else { T::nan() };
        let p_jl =
            if n >= 11 { one + T::lit(4.0) / (nf - T::lit(4.0) - two * (nf - one).sqrt()) } else { T::infinity() };

        let tol = relative_tol::<T>() * p;
        let p_sobolev = one + T::lit(4.0) / (nf - two);
        let regime = if p <= p_sobolev + tol {
            Regime::Unsupported
        } else if n == 3 {
            Regime::SubcriticalRange
        } else {
            let p_crit = one + T::lit(4.0) / (nf - T::lit(3.0));
            if (p - p_crit).abs() < tol {
                Regime::CriticalRange
            } else if p < p_crit {
                Regime::SubcriticalRange
            } else {
                Regime::AboveRange
            }
        };

        let pm1 = p - one;
        let beta_np = ((two * nf - T::lit(8.0)) * p * p + (T::lit(24.0) - T::lit(12.0) * nf) * p + T::lit(10.0) * nf)
            / (pm1 * pm1);
        let nm2 = nf - two;
        let disc = beta_np * beta_np - T::lit(4.0) * nm2 * nm2;
        let rho_np = if disc >= T::zero() && beta_np < T::zero() {
            let x = (-beta_np - disc.sqrt()) / (two * nm2 * nm2);
            if x > T::zero() {
                Some(one / x.sqrt())
            } else {
                None
            }
        } else {
            None
        };

        Ok(Params { n, p, alpha, s_c, b0, b_inf, p_jl, regime, beta_np, rho_np })
    }

    #[inline]
    pub fn dim(&self) -> T {
        T::int(self.n as i64)
    }

    /// `alpha (alpha + 1) = b0^(p-1)`.
    #[inline]
    pub fn b0_pow(&self) -> T {
        self.alpha * (self.alpha + T::one())
    }

    /// `alpha (N - 2 - alpha) = b_inf^(p-1)`.
    #[inline]
    pub fn sing_coeff(&self) -> T {
        self.alpha * (self.dim() - T::lit(2.0) - self.alpha)
    }

    /// Exponent `alpha - (N-3)/2` of the weight `(1-rho^2)` in the self-adjoint form.
    #[inline]
    pub fn kappa(&self) -> T {
        self.alpha - (self.dim() - T::lit(3.0)) / T::lit(2.0)
    }

    /// The singular solution `b_inf rho^(-alpha)`.
    #[inline]
    pub fn u_inf(&self, rho: T) -> T {
        self.b_inf * rho.powf(-self.alpha)
    }

    #[inline]
    pub fn du_inf(&self, rho: T) -> T {
        -self.alpha * self.b_inf * rho.powf(-self.alpha - T::one())
    }

    #[inline]
    pub fn ddu_inf(&self, rho: T) -> T {
        self.alpha * (self.alpha + T::one()) * self.b_inf * rho.powf(-self.alpha - T::lit(2.0))
    }

    /// Barrier quadratic `T(X) = (N-2)^2 X^2 + beta X + 1`.
    pub fn barrier_quadratic(&self, x: T) -> T {
        let nm2 = self.dim() - T::lit(2.0);
        nm2 * nm2 * x * x + self.beta_np * x + T::one()
    }

    /// `B~(rho) = ((p+3)/(p-1) - (N-2) rho^-2) / (1 - rho^-2)` for `rho > 1`.
    pub fn b_tilde(&self, rho: T) -> T {
        let one = T::one();
        let ir2 = one / (rho * rho);
        ((self.p + T::lit(3.0)) / (self.p - one) - (self.dim() - T::lit(2.0)) * ir2) / (one - ir2)
    }

    /// Lower bound of the Lyapunov functional `H` on `(0,1)`.
    pub fn h_lower_bound(&self) -> T {
        let one = T::one();
        let pm1 = self.p - one;
        -(one / pm1) * (T::lit(2.0) * (self.p + one) / (pm1 * pm1)).powf(T::lit(2.0) / pm1)
    }

    /// Upper envelope `((p+1)/2)^(1/(p-1)) b_inf rho^(-alpha)` of left-family profiles.
    pub fn upper_envelope(&self, rho: T) -> T {
        let one = T::one();
        ((self.p + one) / T::lit(2.0)).powf(one / (self.p - one)) * self.u_inf(rho)
    }

    /// Whether the oscillation mechanism applies (`p < p_JL`).
    pub fn below_joseph_lundgren(&self) -> bool {
        self.p < self.p_jl
    }

    pub fn require_shootable(&self) -> Result<()> {
        if self.regime.is_shootable() {
            Ok(())
        } else {
            Err(Error::Regime(self.regime))
        }
    }
}

/// Convenience alias of [`Params::new`].
pub fn derive_params<T: Real>(n: u32, p: T) -> Result<Params<T>> {
    Params::new(n, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values evaluated with 30-digit arithmetic.
    #[test]
    fn n3_p7_constants() {
        let prm = Params::new(3, 7.0_f64).unwrap();
        assert_relative_eq!(prm.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(prm.s_c, 7.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(prm.b0, 0.8735804647362989, epsilon = 1e-14);
        assert_relative_eq!(prm.b_inf, 0.7782717162260105, epsilon = 1e-14);
        assert!(prm.p_jl.is_infinite());
        assert_eq!(prm.regime, Regime::SubcriticalRange);
        assert_relative_eq!(prm.beta_np, -152.0 / 36.0, epsilon = 1e-14);
        assert_relative_eq!(prm.rho_np.unwrap(), 1.992575121424577, epsilon = 1e-12);
        let x = 1.0 / prm.rho_np.unwrap().powi(2);
        assert!(prm.barrier_quadratic(x).abs() < 1e-12);
    }

    #[test]
    fn n5_p3_is_critical() {
        let prm = Params::new(5, 3.0_f64).unwrap();
        assert_relative_eq!(prm.alpha, 1.0);
        assert_relative_eq!(prm.b0, 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(prm.b_inf, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(prm.regime, Regime::CriticalRange);
    }

    #[test]
    fn joseph_lundgren_in_dimension_eleven() {
        let prm = Params::new(11, 5.0_f64).unwrap();
        assert_relative_eq!(prm.p_jl, 6.922024586816337, epsilon = 1e-12);
        assert!(prm.below_joseph_lundgren());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Params::new(2, 7.0_f64), Err(Error::Domain(_))));
        assert!(matches!(Params::new(3, 1.0_f64), Err(Error::Domain(_))));
        assert!(matches!(Params::new(3, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn regime_boundaries() {
        assert_eq!(Params::new(3, 5.0_f64).unwrap().regime, Regime::Unsupported);
        assert_eq!(Params::new(4, 3.0_f64).unwrap().regime, Regime::Unsupported);
        assert_eq!(Params::new(4, 4.0_f64).unwrap().regime, Regime::SubcriticalRange);
        assert_eq!(Params::new(4, 5.0_f64).unwrap().regime, Regime::CriticalRange);
        assert_eq!(Params::new(4, 5.0 + 1e-14_f64).unwrap().regime, Regime::CriticalRange);
        assert_eq!(Params::new(4, 5.5_f64).unwrap().regime, Regime::AboveRange);
        assert_eq!(Params::new(6, 3.2_f64).unwrap().regime, Regime::AboveRange);
        assert_eq!(Params::new(6, 2.2_f64).unwrap().regime, Regime::SubcriticalRange);
        assert_eq!(Params::new(6, 2.0_f64).unwrap().regime, Regime::Unsupported);
    }

    #[test]
    fn single_precision_params() {
        let prm = Params::new(5, 3.0_f32).unwrap();
        assert_eq!(prm.regime, Regime::CriticalRange);
        assert!((prm.b0 - 2f32.sqrt()).abs() < 1e-6);
    }
}
