//! KL-regularized ("soft") Bellman mathematics over a finite action support.
//!
//! The soft value of a belief with reference distribution `π₀` over actions and
//! action values `q` is `(1/η)·log Σ_a π₀(a)·exp(η·q(a))`; the maximizing policy is
//! `π*(a) ∝ π₀(a)·exp(η·q(a))`. Both are evaluated with a max-shift so that
//! `η·q` never leaves the exponent range.

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-9;

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Domain(format!("{what} has empty support")));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::Domain(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// `KL(p ‖ q) = Σ p(a)·log(p(a)/q(a))`, with `0·log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    let mut kl = 0.0;
    for (&pa, &qa) in p.iter().zip(q) {
        if pa == 0.0 {
            continue;
        }
        if qa == 0.0 {
            return Err(Error::Domain(
                "p is positive where q is zero (support violation)".into(),
            ));
        }
        kl += pa * (pa / qa).ln();
    }
    // Rounding can push an exact-zero divergence slightly negative.
    Ok(kl.max(0.0))
}

/// `log Σ_i w_i·exp(x_i)` over entries with `w_i > 0`, shifted by the max exponent.
///
/// Returns `-inf` when every weight is zero.
pub fn weighted_log_sum_exp(weights: &[f64], exponents: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), exponents.len());
    let shift = weights
        .iter()
        .zip(exponents)
        .filter(|(w, _)| **w > 0.0)
        .map(|(_, x)| *x)
        .fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = weights
        .iter()
        .zip(exponents)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, x)| w * (x - shift).exp())
        .sum();
    shift + sum.ln()
}

fn check_soft_inputs(ref_probs: &[f64], q_values: &[f64], eta: f64) -> Result<()> {
    if ref_probs.len() != q_values.len() {
        return Err(Error::DimensionMismatch {
            expected: ref_probs.len(),
            got: q_values.len(),
        });
    }
    check_distribution(ref_probs, "reference distribution")?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("temperature must be positive, got {eta}")));
    }
    if q_values.iter().any(|q| !q.is_finite()) {
        return Err(Error::Domain("q-values must be finite".into()));
    }
    Ok(())
}

/// Soft value `(1/η)·log Σ_a π₀(a)·exp(η·q(a))`.
pub fn soft_value(ref_probs: &[f64], q_values: &[f64], eta: f64) -> Result<f64> {
    check_soft_inputs(ref_probs, q_values, eta)?;
    let scaled: Vec<f64> = q_values.iter().map(|q| eta * q).collect();
    let v = weighted_log_sum_exp(ref_probs, &scaled) / eta;
    // Clamp into the support's [min q, max q] to absorb rounding at the ends.
    let (lo, hi) = support_range(ref_probs, q_values);
    Ok(v.clamp(lo, hi))
}

fn support_range(ref_probs: &[f64], q_values: &[f64]) -> (f64, f64) {
    ref_probs
        .iter()
        .zip(q_values)
        .filter(|(p, _)| **p > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &q)| {
            (lo.min(q), hi.max(q))
        })
}

/// Optimal stochastic policy `π*(a) ∝ π₀(a)·exp(η·q(a))`.
pub fn soft_policy(ref_probs: &[f64], q_values: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_soft_inputs(ref_probs, q_values, eta)?;
    let shift = ref_probs
        .iter()
        .zip(q_values)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, q)| eta * q)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = ref_probs
        .iter()
        .zip(q_values)
        .map(|(&p, &q)| if p > 0.0 { p * (eta * q - shift).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Numerical("all soft-policy weights underflowed".into()));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// The KL-penalized objective `Σ π(a)·q(a) − (1/η)·KL(π ‖ π₀)` that [`soft_policy`]
/// maximizes and whose maximum is [`soft_value`].
pub fn kl_penalized_objective(
    policy: &[f64],
    ref_probs: &[f64],
    q_values: &[f64],
    eta: f64,
) -> Result<f64> {
    let expected: f64 = policy.iter().zip(q_values).map(|(p, q)| p * q).sum();
    Ok(expected - kl_divergence(policy, ref_probs)? / eta)
}

/// `Σ_i γ^i·r_i` for the rewards collected along one macro action.
pub fn discounted_macro_reward(step_rewards: &[f64], gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in step_rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}
