//! Belief containers shared by the filtering, association, and chain modules.

use nalgebra::{Matrix4, Vector4};

use crate::{Error, Result};

/// Gaussian belief over a kinematic state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Vector4<f64>, cov: Matrix4<f64>) -> Self {
        Self { mean, cov }
    }
}

/// Categorical belief (visibility states, maneuver models, ...). Stored
/// normalized; the constructor rescales.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBelief {
    probs: Vec<f64>,
}

impl DiscreteBelief {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0) || probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::DegenerateModelWeights);
        }
        Ok(Self {
            probs: probs.into_iter().map(|p| p / sum).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn p(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the most probable state.
    pub fn map_state(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// log(Σ exp(x_i)), safe against overflow and empty/−∞ inputs.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m; // empty, all −∞, or a +∞ entry
    }
    let sum: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + sum.ln()
}

/// Force exact symmetry on an almost-symmetric covariance.
pub fn symmetrize(m: &mut Matrix4<f64>) {
    let t = m.transpose();
    *m = (*m + t) * 0.5;
}

/// Inverse of a symmetric positive-definite matrix via Cholesky. If the
/// factorization fails (covariance collapsed to numerical semi-definiteness),
/// retries with `1e-9·I` added and logs the repair.
pub fn spd_inverse(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    if let Some(chol) = m.cholesky() {
        return Ok(chol.inverse());
    }
    log::warn!("covariance not positive definite; regularizing with 1e-9*I");
    let repaired = m + Matrix4::identity() * 1e-9;
    repaired
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositiveDefinite)
}

/// Fuse per-model Gaussian beliefs under model weights in information form:
/// the fused precision is the weighted sum of per-model precisions, and the
/// fused information vector the weighted sum of per-model information vectors.
/// With a single unit-weight model this is the identity.
pub fn fuse_models(beliefs: &[GaussianBelief], weights: &[f64]) -> Result<GaussianBelief> {
    assert_eq!(
        beliefs.len(),
        weights.len(),
        "one weight per model belief"
    );
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateModelWeights);
    }
    let mut precision = Matrix4::zeros();
    let mut info = Vector4::zeros();
    for (b, w) in beliefs.iter().zip(weights) {
        let w = w / total;
        if w == 0.0 {
            continue;
        }
        let lam = spd_inverse(&b.cov)?;
        precision += lam * w;
        info += lam * b.mean * w;
    }
    let mut cov = spd_inverse(&precision)?;
    symmetrize(&mut cov);
    Ok(GaussianBelief::new(cov * info, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_model_fusion_is_identity() {
        let b = GaussianBelief::new(
            Vector4::new(1.0, 2.0, 3.0, 4.0),
            Matrix4::from_diagonal(&Vector4::new(4.0, 1.0, 9.0, 2.0)),
        );
        let fused = fuse_models(std::slice::from_ref(&b), &[1.0]).unwrap();
        assert_relative_eq!(fused.mean, b.mean, epsilon = 1e-12);
        assert_relative_eq!(fused.cov, b.cov, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_fusion_matches_scalar_information_arithmetic() {
        let b1 = GaussianBelief::new(Vector4::repeat(2.0), Matrix4::identity() * 4.0);
        let b2 = GaussianBelief::new(Vector4::repeat(6.0), Matrix4::identity() * 12.0);
        let (w1, w2) = (0.25, 0.75);
        let fused = fuse_models(&[b1, b2], &[w1, w2]).unwrap();
        // Scalar check per coordinate: λ = w1/4 + w2/12, mean = (w1·2/4 + w2·6/12)/λ.
        let lam = w1 / 4.0 + w2 / 12.0;
        let mean = (w1 * 2.0 / 4.0 + w2 * 6.0 / 12.0) / lam;
        for i in 0..4 {
            assert_relative_eq!(fused.cov[(i, i)], 1.0 / lam, epsilon = 1e-12);
            assert_relative_eq!(fused.mean[i], mean, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_weights_are_rejected() {
        let b = GaussianBelief::new(Vector4::zeros(), Matrix4::identity());
        assert!(fuse_models(&[b], &[0.0]).is_err());
    }

    #[test]
    fn logsumexp_handles_edge_cases() {
        assert_relative_eq!(logsumexp(&[0.0, 0.0]), 2.0_f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(
            logsumexp(&[-1000.0, -1000.0]),
            -1000.0 + 2.0_f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert_relative_eq!(
            logsumexp(&[f64::NEG_INFINITY, 0.5]),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn map_state_picks_largest() {
        let d = DiscreteBelief::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(d.map_state(), 1);
        assert_relative_eq!(d.probs().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn fusion_is_invariant_to_weight_scaling(
            scale in 1e-3..1e3f64,
            w1 in 0.01..1.0f64,
            m1 in -50.0..50.0f64,
            m2 in -50.0..50.0f64,
            v1 in 0.1..10.0f64,
            v2 in 0.1..10.0f64,
        ) {
            let b1 = GaussianBelief::new(Vector4::repeat(m1), Matrix4::identity() * v1);
            let b2 = GaussianBelief::new(Vector4::repeat(m2), Matrix4::identity() * v2);
            let w = [w1, 1.0 - w1];
            let scaled = [w1 * scale, (1.0 - w1) * scale];
            let a = fuse_models(&[b1.clone(), b2.clone()], &w).unwrap();
            let b = fuse_models(&[b1, b2], &scaled).unwrap();
            prop_assert!((a.mean - b.mean).norm() < 1e-9);
            prop_assert!((a.cov - b.cov).norm() < 1e-9);
        }

        #[test]
        fn fused_covariance_stays_positive_definite(
            w1 in 0.0..1.0f64,
            v1 in 0.05..20.0f64,
            v2 in 0.05..20.0f64,
            off in -0.9..0.9f64,
        ) {
            // Correlated SPD covariances: diag(v) + off-diagonal coupling
            // bounded by the geometric mean keeps them positive definite.
            let mut c1 = Matrix4::identity() * v1;
            c1[(0, 2)] = off * v1;
            c1[(2, 0)] = off * v1;
            let mut c2 = Matrix4::identity() * v2;
            c2[(1, 3)] = off * v2;
            c2[(3, 1)] = off * v2;
            let b1 = GaussianBelief::new(Vector4::repeat(1.0), c1);
            let b2 = GaussianBelief::new(Vector4::repeat(-1.0), c2);
            let w = [w1.max(1e-6), (1.0 - w1).max(1e-6)];
            let fused = fuse_models(&[b1, b2], &w).unwrap();
            prop_assert!(fused.cov.cholesky().is_some());
        }
    }
}
