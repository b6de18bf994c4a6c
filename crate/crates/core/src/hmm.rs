//! Forward filtering and forward–backward smoothing for the small hidden
//! Markov chains attached to each track: the two-state visibility chain and
//! the maneuver-model chain. Emission likelihoods are supplied in log domain
//! (they come from Gaussian evidence terms spanning hundreds of nats);
//! internally each step is max-shifted and renormalized.

use nalgebra::DMatrix;

use crate::{Error, Result};

fn check_transition(transition: &DMatrix<f64>, n: usize) -> Result<()> {
    if transition.nrows() != n || transition.ncols() != n {
        return Err(Error::Dimension(format!(
            "transition matrix is {}x{}, expected {}x{}",
            transition.nrows(),
            transition.ncols(),
            n,
            n
        )));
    }
    Ok(())
}

/// Apply an emission at max-shifted scale and renormalize:
/// `out[j] ∝ base[j] · exp(log_emission[j])`.
fn apply_emission(base: &[f64], log_emission: &[f64]) -> Result<Vec<f64>> {
    let shift = log_emission
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::ZeroLikelihood);
    }
    let mut out: Vec<f64> = base
        .iter()
        .zip(log_emission)
        .map(|(b, le)| b * (le - shift).exp())
        .collect();
    let sum: f64 = out.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::ZeroLikelihood);
    }
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// One chain prediction: `out[j] = Σ_i prior[i] · transition[i][j]`.
/// Rows of `transition` are source states.
pub fn predict(prior: &[f64], transition: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = prior.len();
    check_transition(transition, n)?;
    let mut out = vec![0.0; n];
    for (i, p) in prior.iter().enumerate() {
        for j in 0..n {
            out[j] += p * transition[(i, j)];
        }
    }
    Ok(out)
}

/// One filtering step: chain prediction from `prior` followed by the
/// emission update, returned normalized.
pub fn forward_step(
    prior: &[f64],
    transition: &DMatrix<f64>,
    log_emission: &[f64],
) -> Result<Vec<f64>> {
    if log_emission.len() != prior.len() {
        return Err(Error::Dimension(format!(
            "emission has {} states, prior has {}",
            log_emission.len(),
            prior.len()
        )));
    }
    let predicted = predict(prior, transition)?;
    apply_emission(&predicted, log_emission)
}

/// Smoothed marginals for a chain segment. `prior` is the state distribution
/// at the first emission time *before* that emission is applied (chain
/// prediction from any earlier anchor already folded in); `log_emissions[t]`
/// holds the per-state log-likelihood at step t. Returns one normalized
/// marginal per step.
pub fn forward_backward(
    prior: &[f64],
    transition: &DMatrix<f64>,
    log_emissions: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n = prior.len();
    check_transition(transition, n)?;
    let steps = log_emissions.len();
    if steps == 0 {
        return Ok(Vec::new());
    }
    for e in log_emissions {
        if e.len() != n {
            return Err(Error::Dimension(format!(
                "emission has {} states, prior has {}",
                e.len(),
                n
            )));
        }
    }

    // Forward: alpha[t] ∝ p(state_t, evidence_1..t), normalized per step.
    let mut alpha = Vec::with_capacity(steps);
    alpha.push(apply_emission(prior, &log_emissions[0])?);
    for t in 1..steps {
        let predicted = predict(&alpha[t - 1], transition)?;
        alpha.push(apply_emission(&predicted, &log_emissions[t])?);
    }

    // Backward: beta[t][i] ∝ p(evidence_t+1..K | state_t = i), max-shifted
    // per step through the same emission scaling.
    let mut beta = vec![vec![1.0; n]; steps];
    for t in (0..steps - 1).rev() {
        let shift = log_emissions[t + 1]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut row = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += transition[(i, j)]
                    * (log_emissions[t + 1][j] - shift).exp()
                    * beta[t + 1][j];
            }
            row[i] = acc;
        }
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::ZeroLikelihood);
        }
        for v in &mut row {
            *v /= sum;
        }
        beta[t] = row;
    }

    // Combine and normalize.
    let mut marginals = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut m: Vec<f64> = alpha[t]
            .iter()
            .zip(&beta[t])
            .map(|(a, b)| a * b)
            .collect();
        let sum: f64 = m.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::ZeroLikelihood);
        }
        for v in &mut m {
            *v /= sum;
        }
        marginals.push(m);
    }
    Ok(marginals)
}
