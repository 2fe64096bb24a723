//! Wave-shape model functions and their analytic parameter Jacobians.
//!
//! The modified Weibull curve is
//!
//! ```text
//! W(t) = γ x^(-β-1) exp(-x^(-β)),   x = (t - μ) / α,   t > μ
//! ```
//!
//! and zero for `t <= μ`. A single signed `β` covers both tail orientations:
//! `β > 0` is the inverse-Weibull (Fréchet) shape with a heavy right side,
//! `β < 0` the ordinary Weibull shape with a heavy left side.
//!
//! The double logistic curve is
//!
//! ```text
//! f(t) = λ σ(ν_g (t - κ_g)) (1 - σ(ν_d (t - κ_d)))
//! ```
//!
//! and its complement `100 - f(t)` describes shares that fall and recover.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::scalar::Scalar;

/// A parametric curve `g(θ, t)` with an analytic Jacobian in `θ`.
pub trait CurveModel<T: Scalar>: Sync {
    fn n_params(&self) -> usize;

    fn eval(&self, theta: &[T], t: T) -> T;

    /// Writes `∂g/∂θ_k` into `out[k]`.
    fn jacobian(&self, theta: &[T], t: T, out: &mut [T]);

    /// Whether `theta` lies inside the model's domain.
    fn is_feasible(&self, _theta: &[T]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    ModifiedWeibull,
    DoubleLogistic,
    ComplementLogistic,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::ModifiedWeibull => "weibull",
            ModelKind::DoubleLogistic => "logistic",
            ModelKind::ComplementLogistic => "complement",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::ModifiedWeibull => &["gamma", "alpha", "beta"],
            _ => &["lambda", "nu_g", "nu_d", "kappa_g", "kappa_d"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn finite<T: Scalar>(name: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

fn positive<T: Scalar>(name: &'static str, v: T) -> Result<(), ModelError> {
    finite(name, v)?;
    if v > T::zero() {
        Ok(())
    } else {
        Err(ModelError::NonPositive {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

/// Amplitude `gamma`, scale `alpha` (weeks), signed shape `beta` and fixed
/// location `mu` (week ordinal).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams<T> {
    pub gamma: T,
    pub alpha: T,
    pub beta: T,
    pub mu: T,
}

/// Terms shared by the value and the Jacobian; all computed in log space so
/// that `x^(-β)` overflowing never produces `inf * 0`.
struct WeibullTerms<T> {
    ln_x: T,
    /// `x^(-β-1) exp(-x^(-β))`
    shape: T,
    /// `shape * x^(-β)`
    shape_u: T,
}

impl<T: Scalar> WeibullParams<T> {
    pub fn new(gamma: T, alpha: T, beta: T, mu: T) -> Result<Self, ModelError> {
        let p = Self {
            gamma,
            alpha,
            beta,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        finite("gamma", self.gamma)?;
        positive("alpha", self.alpha)?;
        finite("beta", self.beta)?;
        finite("mu", self.mu)
    }

    /// The optimised parameters `[gamma, alpha, beta]`.
    pub fn free(&self) -> [T; 3] {
        [self.gamma, self.alpha, self.beta]
    }

    pub fn from_free(theta: &[T], mu: T) -> Self {
        Self {
            gamma: theta[0],
            alpha: theta[1],
            beta: theta[2],
            mu,
        }
    }

    fn terms(&self, t: T) -> Option<WeibullTerms<T>> {
        if !(t > self.mu) {
            return None;
        }
        let x = (t - self.mu) / self.alpha;
        let ln_x = x.ln();
        let ln_u = -self.beta * ln_x;
        let u = ln_u.exp();
        let ln_shape = (-self.beta - T::one()) * ln_x - u;
        Some(WeibullTerms {
            ln_x,
            shape: ln_shape.exp(),
            shape_u: (ln_shape + ln_u).exp(),
        })
    }

    pub fn eval(&self, t: T) -> T {
        self.terms(t).map_or(T::zero(), |k| self.gamma * k.shape)
    }

    /// `[∂W/∂γ, ∂W/∂α, ∂W/∂β]`; zero for `t <= mu`.
    pub fn jacobian(&self, t: T) -> [T; 3] {
        let Some(k) = self.terms(t) else {
            return [T::zero(); 3];
        };
        let w = self.gamma * k.shape;
        let wu = self.gamma * k.shape_u;
        let d_alpha = ((self.beta + T::one()) * w - self.beta * wu) / self.alpha;
        let d_beta = k.ln_x * (wu - w);
        [k.shape, d_alpha, d_beta]
    }

    /// Mode of the curve as an offset `x = (t - μ)/α`, or `None` when the
    /// curve is monotone (`-1 <= β <= 0`).
    pub fn mode_x(beta: T) -> Option<T> {
        let one = T::one();
        if beta > T::zero() || beta < -one {
            Some(((beta + one) / beta).powf(-one / beta))
        } else {
            None
        }
    }

    /// Time of the maximum, if the curve has an interior one.
    pub fn mode(&self) -> Option<T> {
        Self::mode_x(self.beta).map(|x| self.mu + self.alpha * x)
    }

    /// `W(mode) / γ`: the peak height of the unit-amplitude shape.
    pub fn peak_factor(beta: T) -> Option<T> {
        Self::mode_x(beta).map(|x| {
            let u = x.powf(-beta);
            x.powf(-beta - T::one()) * (-u).exp()
        })
    }
}

/// Amplitude `lambda`, growth and decay steepness `nu_g`, `nu_d` (per week)
/// and the two midpoints `kappa_g`, `kappa_d` (week ordinals).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleLogisticParams<T> {
    pub lambda: T,
    pub nu_g: T,
    pub nu_d: T,
    pub kappa_g: T,
    pub kappa_d: T,
}

/// Logistic function evaluated without overflow for any finite `z`.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> DoubleLogisticParams<T> {
    pub fn new(lambda: T, nu_g: T, nu_d: T, kappa_g: T, kappa_d: T) -> Result<Self, ModelError> {
        let p = Self {
            lambda,
            nu_g,
            nu_d,
            kappa_g,
            kappa_d,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        finite("lambda", self.lambda)?;
        positive("nu_g", self.nu_g)?;
        positive("nu_d", self.nu_d)?;
        finite("kappa_g", self.kappa_g)?;
        finite("kappa_d", self.kappa_d)
    }

    /// False when the decay midpoint precedes the growth midpoint; such a
    /// curve is still valid but unusual.
    pub fn midpoints_ordered(&self) -> bool {
        self.kappa_g <= self.kappa_d
    }

    pub fn to_array(&self) -> [T; 5] {
        [
            self.lambda,
            self.nu_g,
            self.nu_d,
            self.kappa_g,
            self.kappa_d,
        ]
    }

    pub fn from_slice(theta: &[T]) -> Self {
        Self {
            lambda: theta[0],
            nu_g: theta[1],
            nu_d: theta[2],
            kappa_g: theta[3],
            kappa_d: theta[4],
        }
    }

    pub fn eval(&self, t: T) -> T {
        let g = sigmoid(self.nu_g * (t - self.kappa_g));
        let keep = sigmoid(-self.nu_d * (t - self.kappa_d));
        self.lambda * g * keep
    }

    /// `100 - f(t)`.
    pub fn complement_eval(&self, t: T) -> T {
        T::lit(100.0) - self.eval(t)
    }

    /// Partials in the order `[λ, ν_g, ν_d, κ_g, κ_d]`.
    pub fn jacobian(&self, t: T) -> [T; 5] {
        let dg = t - self.kappa_g;
        let dd = t - self.kappa_d;
        let g = sigmoid(self.nu_g * dg);
        let g_rest = sigmoid(-self.nu_g * dg);
        let d = sigmoid(self.nu_d * dd);
        let keep = sigmoid(-self.nu_d * dd);
        let growth_slope = self.lambda * keep * g * g_rest;
        let decay_slope = self.lambda * g * d * keep;
        [
            g * keep,
            growth_slope * dg,
            -decay_slope * dd,
            -growth_slope * self.nu_g,
            decay_slope * self.nu_d,
        ]
    }
}

/// Modified Weibull curve with `μ` held fixed; parameters `[γ, α, β]`.
#[derive(Debug, Clone, Copy)]
pub struct WeibullModel<T> {
    pub mu: T,
}

impl<T: Scalar> CurveModel<T> for WeibullModel<T> {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, theta: &[T], t: T) -> T {
        WeibullParams::from_free(theta, self.mu).eval(t)
    }

    fn jacobian(&self, theta: &[T], t: T, out: &mut [T]) {
        out.copy_from_slice(&WeibullParams::from_free(theta, self.mu).jacobian(t));
    }

    fn is_feasible(&self, theta: &[T]) -> bool {
        theta.iter().all(|v| v.is_finite()) && theta[1] > T::zero()
    }
}

/// Double logistic curve; parameters `[λ, ν_g, ν_d, κ_g, κ_d]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleLogisticModel;

impl<T: Scalar> CurveModel<T> for DoubleLogisticModel {
    fn n_params(&self) -> usize {
        5
    }

    fn eval(&self, theta: &[T], t: T) -> T {
        DoubleLogisticParams::from_slice(theta).eval(t)
    }

    fn jacobian(&self, theta: &[T], t: T, out: &mut [T]) {
        out.copy_from_slice(&DoubleLogisticParams::from_slice(theta).jacobian(t));
    }

    fn is_feasible(&self, theta: &[T]) -> bool {
        theta.iter().all(|v| v.is_finite()) && theta[1] > T::zero() && theta[2] > T::zero()
    }
}

/// `100 - f(t)` for the double logistic `f`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplementLogisticModel;

impl<T: Scalar> CurveModel<T> for ComplementLogisticModel {
    fn n_params(&self) -> usize {
        5
    }

    fn eval(&self, theta: &[T], t: T) -> T {
        DoubleLogisticParams::from_slice(theta).complement_eval(t)
    }

    fn jacobian(&self, theta: &[T], t: T, out: &mut [T]) {
        let j = DoubleLogisticParams::from_slice(theta).jacobian(t);
        for (o, v) in out.iter_mut().zip(j) {
            *o = -v;
        }
    }

    fn is_feasible(&self, theta: &[T]) -> bool {
        CurveModel::<T>::is_feasible(&DoubleLogisticModel, theta)
    }
}

/// A fitted curve of any kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Curve<T> {
    Weibull(WeibullParams<T>),
    Logistic(DoubleLogisticParams<T>),
    Complement(DoubleLogisticParams<T>),
}

impl<T: Scalar> Curve<T> {
    pub fn from_fit(kind: ModelKind, theta: &[T], mu: T) -> Self {
        match kind {
            ModelKind::ModifiedWeibull => Curve::Weibull(WeibullParams::from_free(theta, mu)),
            ModelKind::DoubleLogistic => Curve::Logistic(DoubleLogisticParams::from_slice(theta)),
            ModelKind::ComplementLogistic => {
                Curve::Complement(DoubleLogisticParams::from_slice(theta))
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Curve::Weibull(_) => ModelKind::ModifiedWeibull,
            Curve::Logistic(_) => ModelKind::DoubleLogistic,
            Curve::Complement(_) => ModelKind::ComplementLogistic,
        }
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            Curve::Weibull(p) => p.eval(t),
            Curve::Logistic(p) => p.eval(t),
            Curve::Complement(p) => p.complement_eval(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn zero_at_and_before_mu() {
        let p = WeibullParams::<f64>::new(10.0, 3.0, 2.0, 5.0).unwrap();
        assert_eq!(p.eval(5.0), 0.0);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.jacobian(5.0), [0.0; 3]);
        assert_eq!(p.jacobian(-3.0), [0.0; 3]);
    }

    #[test]
    fn beta_zero_reduces_to_reciprocal() {
        let p = WeibullParams::<f64>::new(E, 1.0, 0.0, 0.0).unwrap();
        assert!((p.eval(2.0) - 0.5).abs() < 1e-15);
        // W ∝ 1/t
        assert!((p.eval(4.0) * 4.0 - p.eval(2.0) * 2.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_from_right_for_positive_beta() {
        let p = WeibullParams::<f64>::new(1.0, 4.0, 2.0, 0.0).unwrap();
        assert!(p.eval(1e-3) < 1e-100);
        assert!(p.eval(1e-300).is_finite());
        assert!(p.jacobian(1e-300).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn peak_matches_fine_grid() {
        let p = WeibullParams::<f64>::new(1.0, 4.0, 2.0, 0.0).unwrap();
        let (mut best_t, mut best_v) = (0.0, f64::MIN);
        let mut k = 1u32;
        while f64::from(k) * 1e-4 <= 40.0 {
            let t = f64::from(k) * 1e-4;
            let v = p.eval(t);
            if v > best_v {
                best_v = v;
                best_t = t;
            }
            k += 1;
        }
        let mode = p.mode().unwrap();
        assert!((mode - best_t).abs() <= 1e-4, "{mode} vs {best_t}");
        assert!((p.eval(mode) - best_v).abs() < 1e-9);
        assert!((WeibullParams::peak_factor(2.0).unwrap() - best_v).abs() < 1e-9);
    }

    #[test]
    fn monotone_regime_has_no_mode() {
        assert!(WeibullParams::<f64>::mode_x(-0.5).is_none());
        assert!(WeibullParams::<f64>::mode_x(-1.0).is_none());
        assert!(WeibullParams::<f64>::mode_x(-2.0).is_some());
    }

    #[test]
    fn gamma_partial_is_linear() {
        let p = WeibullParams::<f64>::new(37.0, 5.0, -2.5, 0.0).unwrap();
        for t in [0.5, 2.0, 5.0, 9.0] {
            let j = p.jacobian(t);
            assert!((j[0] - p.eval(t) / p.gamma).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(WeibullParams::<f64>::new(1.0, 0.0, 1.0, 0.0).is_err());
        assert!(WeibullParams::<f64>::new(f64::NAN, 1.0, 1.0, 0.0).is_err());
        assert!(DoubleLogisticParams::<f64>::new(1.0, -1.0, 1.0, 0.0, 1.0).is_err());
        assert!(DoubleLogisticParams::<f64>::new(1.0, 1.0, 1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn logistic_midpoint_and_tails() {
        let p = DoubleLogisticParams::<f64>::new(80.0, 1.0, 0.5, 5.0, 40.0).unwrap();
        let bound = 80.0 * (-0.5f64 * 35.0).exp();
        assert!((p.eval(5.0) - 40.0).abs() <= bound);
        assert!(p.eval(-1e6).abs() < 1e-300);
        assert!(p.eval(1e6).abs() < 1e-300);
        assert!(p.eval(-1e6).is_finite() && p.eval(1e6).is_finite());
        for t in [-1e6, 1e6] {
            assert!(p
                .jacobian(t)
                .iter()
                .all(|v| v.is_finite() && v.abs() < 1e-100));
        }
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        assert_eq!(sigmoid(750.0f64), 1.0);
        assert_eq!(sigmoid(-750.0f64), 0.0);
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid(100.0f32), 1.0);
        assert!(sigmoid(-100.0f32) < 1e-40);
        assert_eq!(sigmoid(-200.0f32), 0.0);
    }

    #[test]
    fn logistic_high_precision_value() {
        // 80 / ((1 + e^0) (1 + e^{-7.5})) evaluated with 50-digit arithmetic.
        let p = DoubleLogisticParams::<f64>::new(80.0, 1.0, 0.5, 5.0, 20.0).unwrap();
        #[allow(clippy::excessive_precision)]
        let reference = 39.977_888_854_523_056_f64;
        assert!((p.eval(5.0) - reference).abs() <= 1e-13 * reference);
    }

    #[test]
    fn lambda_partial_is_linear() {
        let p = DoubleLogisticParams::<f64>::new(55.0, 0.7, 0.3, 12.0, 30.0).unwrap();
        for t in [0.0, 12.0, 21.0, 40.0] {
            assert!((p.jacobian(t)[0] - p.eval(t) / p.lambda).abs() < 1e-15);
        }
    }

    #[test]
    fn complement_identity() {
        let p = DoubleLogisticParams::<f64>::new(63.0, 0.4, 0.9, 8.0, 25.0).unwrap();
        for k in -20..60 {
            let t = f64::from(k);
            assert_eq!(p.complement_eval(t) + p.eval(t), 100.0);
        }
        assert_eq!(p.complement_eval(-1e5), 100.0);
        let q = DoubleLogisticParams::<f64>::new(60.0, 1.0, 1.0, 0.0, 60.0).unwrap();
        assert!((q.complement_eval(0.0) - 70.0).abs() < 1e-12);
    }

    #[test]
    fn curve_dispatch() {
        let w = WeibullParams::<f64>::new(40.0, 6.0, 2.0, 3.0).unwrap();
        let c = Curve::from_fit(ModelKind::ModifiedWeibull, &w.free(), 3.0);
        assert_eq!(c.eval(9.0), w.eval(9.0));
        assert_eq!(c.kind(), ModelKind::ModifiedWeibull);
    }

    #[test]
    fn works_in_f32() {
        let p = WeibullParams::<f32>::new(40.0, 6.0, 2.0, 0.0).unwrap();
        let m = p.mode().unwrap();
        assert!((p.eval(m) - 40.0 * WeibullParams::peak_factor(2.0f32).unwrap()).abs() < 1e-4);
        let q = DoubleLogisticParams::<f32>::new(80.0, 1.0, 0.5, 5.0, 20.0).unwrap();
        assert!((q.eval(5.0) - 39.977_89).abs() < 1e-3);
    }
}
