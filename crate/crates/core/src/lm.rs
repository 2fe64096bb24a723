//! Levenberg–Marquardt nonlinear least squares.
//!
//! Minimises `S(θ) = Σ (y_k - g(θ, t_k))²` by repeatedly solving the damped
//! normal equations
//!
//! ```text
//! (JᵀJ + ω I) δ = Jᵀ (y - g(θ))
//! ```
//!
//! with a Cholesky factorisation. A step is kept only if it lowers `S`; the
//! damping `ω` is divided by `damping_decrease` after an accepted step and
//! multiplied by `damping_increase` after a rejected one. Steps that leave
//! the model's feasible region count as rejections.

use serde::{Deserialize, Serialize};

use crate::error::FitError;
use crate::models::CurveModel;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmConfig<T> {
    pub max_iterations: usize,
    /// Converged once an accepted step satisfies `‖δ‖ / ‖θ‖ < step_tolerance`.
    pub step_tolerance: T,
    pub initial_damping: T,
    pub damping_increase: T,
    pub damping_decrease: T,
    pub min_damping: T,
    pub max_damping: T,
}

impl<T: Scalar> Default for LmConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: T::lit(1e-4),
            initial_damping: T::lit(1e-3),
            damping_increase: T::lit(10.0),
            damping_decrease: T::lit(10.0),
            min_damping: T::lit(1e-12),
            max_damping: T::lit(1e12),
        }
    }
}

impl<T: Scalar> LmConfig<T> {
    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::InvalidConfig(m.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.step_tolerance > T::zero()) {
            return bad("step_tolerance must be positive");
        }
        if !(self.damping_increase > T::one()) || !(self.damping_decrease > T::one()) {
            return bad("damping factors must exceed 1");
        }
        if !(self.min_damping > T::zero())
            || !(self.max_damping > self.min_damping)
            || !(self.initial_damping >= self.min_damping)
            || !(self.initial_damping <= self.max_damping)
        {
            return bad("need 0 < min_damping <= initial_damping <= max_damping");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// An accepted step was below the relative step tolerance.
    StepTolerance,
    /// No further decrease is possible and the undamped step is below the
    /// step tolerance.
    Stationary,
    /// Residuals or gradient are exactly zero.
    ZeroGradient,
    MaxIterations,
    DampingLimit,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        matches!(
            self,
            Termination::StepTolerance | Termination::Stationary | Termination::ZeroGradient
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub theta_hat: Vec<T>,
    pub r_squared: T,
    /// `y_k - g(θ̂, t_k)` for every data point.
    pub residuals: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub final_damping: T,
    /// `S(θ̂)`.
    pub cost: T,
    /// `S` at the start followed by `S` after every accepted step.
    pub accepted_costs: Vec<T>,
}

/// `1 - SS_res / SS_tot` with `SS_tot` taken about the mean of `data`.
pub fn r_squared<T: Scalar>(data: &[T], fitted: &[T]) -> Result<T, FitError> {
    if data.len() != fitted.len() {
        return Err(FitError::LengthMismatch(data.len(), fitted.len()));
    }
    if data.len() < 2 {
        return Err(FitError::TooFewPoints {
            needed: 2,
            got: data.len(),
        });
    }
    let mean = data.iter().copied().sum::<T>() / T::from_count(data.len() as u64);
    let ss_tot: T = data.iter().map(|&y| (y - mean) * (y - mean)).sum();
    if ss_tot == T::zero() {
        return Err(FitError::ZeroVariance);
    }
    let ss_res: T = data
        .iter()
        .zip(fitted)
        .map(|(&y, &f)| (y - f) * (y - f))
        .sum();
    Ok(T::one() - ss_res / ss_tot)
}

fn residuals<T: Scalar, M: CurveModel<T> + ?Sized>(
    model: &M,
    theta: &[T],
    data: &[(T, T)],
) -> Vec<T> {
    data.iter()
        .map(|&(t, y)| y - model.eval(theta, t))
        .collect()
}

fn sum_sq<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum()
}

fn norm<T: Scalar>(v: &[T]) -> T {
    sum_sq(v).sqrt()
}

/// Row-major `m × n` Jacobian of the model values.
fn jacobian<T: Scalar, M: CurveModel<T> + ?Sized>(
    model: &M,
    theta: &[T],
    data: &[(T, T)],
) -> Vec<T> {
    let n = theta.len();
    let mut j = vec![T::zero(); data.len() * n];
    for (row, &(t, _)) in j.chunks_mut(n).zip(data) {
        model.jacobian(theta, t, row);
    }
    j
}

/// `JᵀJ` (row-major `n × n`) and `Jᵀr`.
fn normal_equations<T: Scalar>(j: &[T], r: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    let mut jtj = vec![T::zero(); n * n];
    let mut jtr = vec![T::zero(); n];
    for (row, &rk) in j.chunks(n).zip(r) {
        for a in 0..n {
            jtr[a] = jtr[a] + row[a] * rk;
            for b in 0..=a {
                jtj[a * n + b] = jtj[a * n + b] + row[a] * row[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            jtj[b * n + a] = jtj[a * n + b];
        }
    }
    (jtj, jtr)
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major) by
/// Cholesky factorisation. Fails when a pivot is not safely positive.
pub fn cholesky_solve<T: Scalar>(a: &[T], b: &[T]) -> Result<Vec<T>, FitError> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    let floor = T::epsilon() * max_diag * T::from_count(n as u64);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for k in 0..=i {
            let mut s = a[i * n + k];
            for p in 0..k {
                s = s - l[i * n + p] * l[k * n + p];
            }
            if i == k {
                if !(s > floor) || !s.is_finite() {
                    return Err(FitError::Singular);
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + k] = s / l[k * n + k];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for p in 0..i {
            s = s - l[i * n + p] * y[p];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for p in i + 1..n {
            s = s - l[p * n + i] * x[p];
        }
        x[i] = s / l[i * n + i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(FitError::Singular)
    }
}

fn damped_solve<T: Scalar>(jtj: &[T], jtr: &[T], omega: T) -> Result<Vec<T>, FitError> {
    let n = jtr.len();
    let mut a = jtj.to_vec();
    for i in 0..n {
        a[i * n + i] = a[i * n + i] + omega;
    }
    cholesky_solve(&a, jtr)
}

/// One damped step from `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmStep<T> {
    pub theta_candidate: Vec<T>,
    pub delta: Vec<T>,
    /// Decrease of `S` predicted by the linearised model:
    /// `‖r‖² - ‖r - Jδ‖²`.
    pub predicted_reduction: T,
}

/// Solves the damped normal equations once at `theta`.
pub fn lm_step<T: Scalar, M: CurveModel<T> + ?Sized>(
    theta: &[T],
    omega: T,
    model: &M,
    data: &[(T, T)],
) -> Result<LmStep<T>, FitError> {
    let n = model.n_params();
    let r = residuals(model, theta, data);
    let j = jacobian(model, theta, data);
    let (jtj, jtr) = normal_equations(&j, &r, n);
    let delta = damped_solve(&jtj, &jtr, omega)?;
    let linear_rest: Vec<T> = j
        .chunks(n)
        .zip(&r)
        .map(|(row, &rk)| rk - row.iter().zip(&delta).map(|(&a, &d)| a * d).sum::<T>())
        .collect();
    Ok(LmStep {
        theta_candidate: theta.iter().zip(&delta).map(|(&a, &d)| a + d).collect(),
        predicted_reduction: sum_sq(&r) - sum_sq(&linear_rest),
        delta,
    })
}

fn relative_step<T: Scalar>(delta: &[T], theta: &[T]) -> T {
    let tn = norm(theta);
    let dn = norm(delta);
    if tn > T::zero() {
        dn / tn
    } else {
        dn
    }
}

/// Fits `model` to `data` (pairs `(t, y)`) starting from `theta0`.
///
/// The returned parameters are the best seen: `S(θ̂) <= S(θ0)` always holds.
pub fn lm_fit<T: Scalar, M: CurveModel<T> + ?Sized>(
    model: &M,
    data: &[(T, T)],
    theta0: &[T],
    config: &LmConfig<T>,
) -> Result<FitResult<T>, FitError> {
    config.validate()?;
    let n = model.n_params();
    if theta0.len() != n {
        return Err(FitError::LengthMismatch(theta0.len(), n));
    }
    if data.len() < n {
        return Err(FitError::TooFewPoints {
            needed: n,
            got: data.len(),
        });
    }
    if !model.is_feasible(theta0) {
        return Err(FitError::InfeasibleStart);
    }
    let mut theta = theta0.to_vec();
    let mut r = residuals(model, &theta, data);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteStart);
    }
    let mut cost = sum_sq(&r);
    let mut accepted_costs = vec![cost];
    let mut omega = config.initial_damping;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let mut system: Option<(Vec<T>, Vec<T>)> = None;
    let mut stationarity_checked = false;

    while iterations < config.max_iterations {
        iterations += 1;
        let (jtj, jtr) = system.get_or_insert_with(|| {
            let j = jacobian(model, &theta, data);
            normal_equations(&j, &r, n)
        });
        if cost == T::zero() || jtr.iter().all(|g| *g == T::zero()) {
            termination = Termination::ZeroGradient;
            break;
        }
        let step = damped_solve(jtj, jtr, omega);
        let accepted = match &step {
            Ok(delta) => {
                let cand: Vec<T> = theta.iter().zip(delta).map(|(&a, &d)| a + d).collect();
                if model.is_feasible(&cand) {
                    let rc = residuals(model, &cand, data);
                    let sc = sum_sq(&rc);
                    (sc.is_finite() && sc < cost).then_some((cand, rc, sc))
                } else {
                    None
                }
            }
            Err(_) => None,
        };
        match accepted {
            Some((cand, rc, sc)) => {
                let rel = relative_step(step.as_ref().expect("accepted step"), &theta);
                theta = cand;
                r = rc;
                cost = sc;
                accepted_costs.push(cost);
                omega = (omega / config.damping_decrease).max(config.min_damping);
                system = None;
                stationarity_checked = false;
                if rel < config.step_tolerance {
                    termination = Termination::StepTolerance;
                    break;
                }
            }
            None => {
                if step.is_err() && omega >= config.max_damping {
                    return Err(FitError::Singular);
                }
                if !stationarity_checked {
                    stationarity_checked = true;
                    if let Ok(gn) = damped_solve(jtj, jtr, config.min_damping) {
                        if relative_step(&gn, &theta) < config.step_tolerance {
                            termination = Termination::Stationary;
                            break;
                        }
                    }
                }
                omega = omega * config.damping_increase;
                if omega > config.max_damping {
                    omega = config.max_damping;
                    termination = Termination::DampingLimit;
                    break;
                }
            }
        }
    }

    let fitted: Vec<T> = data.iter().map(|&(t, _)| model.eval(&theta, t)).collect();
    let values: Vec<T> = data.iter().map(|&(_, y)| y).collect();
    let r_sq = r_squared(&values, &fitted)?;
    Ok(FitResult {
        theta_hat: theta,
        r_squared: r_sq,
        residuals: r,
        iterations,
        converged: termination.is_converged(),
        termination,
        final_damping: omega,
        cost,
        accepted_costs,
    })
}
