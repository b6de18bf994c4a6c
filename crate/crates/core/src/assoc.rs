//! Measurement-to-track association under one-to-one scan constraints.
//!
//! Each scan induces a bipartite factor graph: every track picks at most one
//! measurement (or a missed detection), every measurement belongs to at most
//! one track (or clutter). Loopy belief propagation runs on the two message
//! families in log-ratio form with damping; [`enumerate_marginals`] computes
//! the same association marginals exactly by summing over every feasible
//! event and serves as the oracle for the propagation code.

use nalgebra::{Matrix2, Vector2};

use crate::belief::{logsumexp, GaussianBelief};
use crate::filters::association_loglik;
use crate::{Error, Result};

/// Per-scan association weights in log domain. Rows are tracks, columns are
/// the scan's measurements; entries with no gate overlap stay at −∞.
#[derive(Debug, Clone)]
pub struct AssocWeights {
    /// ln⟨P_d⟩ per track: expected detection probability under the track's
    /// visibility belief.
    pub detect: Vec<f64>,
    /// ln⟨1−P_d⟩ per track (the missed-detection option).
    pub miss: Vec<f64>,
    /// Model-averaged measurement log-likelihood per (track, measurement).
    pub lik: Vec<Vec<f64>>,
    /// ln(1/V) for the clutter option of each measurement.
    pub clutter: f64,
}

impl AssocWeights {
    pub fn n_tracks(&self) -> usize {
        self.detect.len()
    }

    pub fn n_meas(&self) -> usize {
        self.lik.first().map_or(0, Vec::len)
    }

    /// ln ψ_{ij}: joint weight of track i generating measurement j.
    fn ln_pair(&self, i: usize, j: usize) -> f64 {
        self.detect[i] + self.lik[i][j]
    }
}

/// One track's view of a scan for weight construction.
#[derive(Debug, Clone)]
pub struct TrackView {
    /// Current kinematic belief per motion model at the scan time.
    pub beliefs: Vec<GaussianBelief>,
    /// Model weights m̂ at the scan time.
    pub model_weights: Vec<f64>,
    /// Innovation covariance per model at the scan time.
    pub innov_covs: Vec<Matrix2<f64>>,
    /// Visibility probability p(e = 1) at the scan time.
    pub p_visible: f64,
    /// Indices of the scan measurements inside the track's gate.
    pub gated: Vec<usize>,
}

/// Assemble log-domain association weights for one scan. Detection enters
/// through the expected detection probability under each track's visibility
/// belief; measurement likelihoods are mixed over motion models with the
/// current model weights — an arithmetic mixture, so a measurement that any
/// live model explains well keeps a strong weight even while that model is
/// still improbable; ungated pairs are pinned to −∞.
pub fn build_weights(
    tracks: &[TrackView],
    meas: &[Vector2<f64>],
    pd_visible: f64,
    pd_invisible: f64,
    volume: f64,
) -> Result<AssocWeights> {
    let mut detect = Vec::with_capacity(tracks.len());
    let mut miss = Vec::with_capacity(tracks.len());
    let mut lik = Vec::with_capacity(tracks.len());
    for tv in tracks {
        assert_eq!(
            tv.model_weights.len(),
            tv.innov_covs.len(),
            "one innovation covariance per model"
        );
        assert_eq!(
            tv.model_weights.len(),
            tv.beliefs.len(),
            "one belief per model"
        );
        let pd = tv.p_visible * pd_visible + (1.0 - tv.p_visible) * pd_invisible;
        detect.push(pd.ln());
        miss.push((1.0 - pd).ln());
        let mut row = vec![f64::NEG_INFINITY; meas.len()];
        for &j in &tv.gated {
            let mut terms = Vec::with_capacity(tv.model_weights.len());
            for ((w, s), b) in tv.model_weights.iter().zip(&tv.innov_covs).zip(&tv.beliefs) {
                if *w > 0.0 {
                    terms.push(w.ln() + association_loglik(&meas[j], s, b)?);
                }
            }
            let peak = terms.iter().fold(f64::NEG_INFINITY, |a, t| a.max(*t));
            if peak.is_finite() {
                row[j] = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
            }
        }
        lik.push(row);
    }
    Ok(AssocWeights {
        detect,
        miss,
        lik,
        clutter: -volume.ln(),
    })
}

/// Loopy belief propagation schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LbpConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Convex mixing factor on log messages: 0 = no damping, 0.5 = equal mix.
    pub damping: f64,
}

impl Default for LbpConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            damping: 0.5,
        }
    }
}

/// Association marginals for one scan, indexed with 0 as the "none" option:
/// `assoc[i][j]` for track i ≥ 1 and measurement j ≥ 1, `assoc[i][0]` the
/// missed-detection probability, `assoc[0][j]` the clutter probability, and
/// `assoc[0][0]` fixed at zero.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub assoc: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest message change seen in the final sweep.
    pub max_residual: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    1.0 / (1.0 + (-x).exp())
}

/// ln ψ + message, guarding −∞ + ∞.
fn guarded_sum(ln_psi: f64, msg: f64) -> f64 {
    if ln_psi == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        ln_psi + msg
    }
}

/// Run damped loopy belief propagation on one scan's weights and return the
/// association marginals.
pub fn lbp(w: &AssocWeights, cfg: &LbpConfig) -> Marginals {
    let n_t = w.n_tracks();
    let n_e = w.n_meas();
    if n_t == 0 || n_e == 0 {
        // Degenerate scans: every track missed, every measurement clutter.
        let mut assoc = vec![vec![0.0; n_e + 1]; n_t + 1];
        for row in assoc.iter_mut().skip(1) {
            row[0] = 1.0;
        }
        for j in 1..=n_e {
            assoc[0][j] = 1.0;
        }
        return Marginals {
            assoc,
            iterations: 0,
            converged: true,
            max_residual: 0.0,
        };
    }

    // Messages in log domain: row constraints → pairs and column
    // constraints → pairs.
    let mut mr = vec![vec![0.0; n_e]; n_t];
    let mut mc = vec![vec![0.0; n_e]; n_t];
    let mut scratch = Vec::with_capacity(n_t.max(n_e));
    let mut iterations = 0;
    let mut converged = false;
    let mut max_residual = f64::INFINITY;

    while iterations < cfg.max_iters {
        iterations += 1;
        let mut delta: f64 = 0.0;

        // Row sweep: the message to pair (i, j) is the negative log of the
        // summed weight of row i's alternatives (miss plus other columns).
        for i in 0..n_t {
            for j in 0..n_e {
                scratch.clear();
                scratch.push(w.miss[i]);
                for j1 in 0..n_e {
                    if j1 != j {
                        scratch.push(guarded_sum(w.ln_pair(i, j1), mc[i][j1]));
                    }
                }
                let fresh = -logsumexp(&scratch);
                let damped = cfg.damping * mr[i][j] + (1.0 - cfg.damping) * fresh;
                delta = delta.max((damped - mr[i][j]).abs());
                mr[i][j] = damped;
            }
        }

        // Column sweep: alternatives are clutter plus the other rows.
        for j in 0..n_e {
            for i in 0..n_t {
                scratch.clear();
                scratch.push(w.clutter);
                for i1 in 0..n_t {
                    if i1 != i {
                        scratch.push(guarded_sum(w.ln_pair(i1, j), mr[i1][j]));
                    }
                }
                let fresh = -logsumexp(&scratch);
                let damped = cfg.damping * mc[i][j] + (1.0 - cfg.damping) * fresh;
                delta = delta.max((damped - mc[i][j]).abs());
                mc[i][j] = damped;
            }
        }

        max_residual = delta;
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }

    // Beliefs from the converged messages.
    let mut assoc = vec![vec![0.0; n_e + 1]; n_t + 1];
    for i in 0..n_t {
        for j in 0..n_e {
            let lp = w.ln_pair(i, j);
            assoc[i + 1][j + 1] = if lp == f64::NEG_INFINITY {
                0.0
            } else {
                sigmoid(lp + mr[i][j] + mc[i][j])
            };
        }
        scratch.clear();
        for j in 0..n_e {
            scratch.push(guarded_sum(w.ln_pair(i, j), mc[i][j]));
        }
        assoc[i + 1][0] = sigmoid(w.miss[i] - logsumexp(&scratch));
    }
    for j in 0..n_e {
        scratch.clear();
        for i in 0..n_t {
            scratch.push(guarded_sum(w.ln_pair(i, j), mr[i][j]));
        }
        assoc[0][j + 1] = sigmoid(w.clutter - logsumexp(&scratch));
    }

    Marginals {
        assoc,
        iterations,
        converged,
        max_residual,
    }
}

/// Exact association marginals by summing over all feasible events. Feasible
/// event: every track takes a distinct measurement or a miss; unclaimed
/// measurements are clutter. Event weight = Π pair weights × Π miss weights
/// × (1/V) per clutter measurement. Intended for small scans; sizes above
/// the limit are rejected.
pub fn enumerate_marginals(w: &AssocWeights) -> Result<Marginals> {
    const LIMIT: usize = 8;
    let n_t = w.n_tracks();
    let n_e = w.n_meas();
    let too_big = n_t.max(n_e);
    if too_big > LIMIT {
        return Err(Error::EnumerationTooLarge {
            limit: LIMIT,
            got: too_big,
        });
    }

    // First pass: the maximum event log-weight, for stable exponentiation.
    let mut max_logw = f64::NEG_INFINITY;
    enumerate_events(w, &mut |_assignment, logw| {
        if logw > max_logw {
            max_logw = logw;
        }
    });
    if max_logw == f64::NEG_INFINITY {
        // All events carry zero weight; cannot normalize.
        return Err(Error::ZeroLikelihood);
    }

    // Second pass: accumulate shifted event weights into the marginals.
    let mut assoc = vec![vec![0.0; n_e + 1]; n_t + 1];
    let mut total = 0.0;
    enumerate_events(w, &mut |assignment, logw| {
        let weight = (logw - max_logw).exp();
        total += weight;
        let mut used = vec![false; n_e];
        for (i, &a) in assignment.iter().enumerate() {
            match a {
                Some(j) => {
                    assoc[i + 1][j + 1] += weight;
                    used[j] = true;
                }
                None => assoc[i + 1][0] += weight,
            }
        }
        for (j, u) in used.iter().enumerate() {
            if !u {
                assoc[0][j + 1] += weight;
            }
        }
    });
    for row in &mut assoc {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(Marginals {
        assoc,
        iterations: 0,
        converged: true,
        max_residual: 0.0,
    })
}

/// Depth-first walk over all feasible events, reporting each complete
/// assignment (per-track measurement index or `None`) and its log weight.
fn enumerate_events(w: &AssocWeights, visit: &mut dyn FnMut(&[Option<usize>], f64)) {
    let n_t = w.n_tracks();
    let n_e = w.n_meas();
    let mut assignment: Vec<Option<usize>> = vec![None; n_t];
    let mut used = vec![false; n_e];

    fn recurse(
        w: &AssocWeights,
        i: usize,
        logw: f64,
        assignment: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[Option<usize>], f64),
    ) {
        let n_t = w.n_tracks();
        let n_e = w.n_meas();
        if i == n_t {
            let clutter_count = used.iter().filter(|u| !**u).count();
            visit(assignment, logw + clutter_count as f64 * w.clutter);
            return;
        }
        assignment[i] = None;
        recurse(w, i + 1, logw + w.miss[i], assignment, used, visit);
        for j in 0..n_e {
            if !used[j] && w.lik[i][j] > f64::NEG_INFINITY {
                used[j] = true;
                assignment[i] = Some(j);
                recurse(w, i + 1, logw + w.ln_pair(i, j), assignment, used, visit);
                assignment[i] = None;
                used[j] = false;
            }
        }
    }

    recurse(w, 0, 0.0, &mut assignment, &mut used, visit);
}

/// Row/column sum deviations of a set of association marginals. At an exact
/// or fully converged fixed point both vanish: each track row including its
/// miss sums to one, each measurement column including clutter sums to one.
#[derive(Debug, Clone, Copy)]
pub struct Consistency {
    pub max_row_dev: f64,
    pub max_col_dev: f64,
}

pub fn consistency_check(m: &Marginals) -> Consistency {
    let n_t = m.assoc.len() - 1;
    let n_e = m.assoc[0].len() - 1;
    let mut max_row_dev: f64 = 0.0;
    for i in 1..=n_t {
        let s: f64 = m.assoc[i].iter().sum();
        max_row_dev = max_row_dev.max((s - 1.0).abs());
    }
    let mut max_col_dev: f64 = 0.0;
    for j in 1..=n_e {
        let s: f64 = (0..=n_t).map(|i| m.assoc[i][j]).sum();
        max_col_dev = max_col_dev.max((s - 1.0).abs());
    }
    Consistency {
        max_row_dev,
        max_col_dev,
    }
}

/// Draw a random association problem from the regime the tracker operates
/// in: track predictions mutually separated by at least five measurement
/// standard deviations in a unit-noise plane, measurements that are mostly
/// noisy target returns plus uniform clutter, and moderate-to-high detection
/// probabilities.
///
/// Loopy propagation is near-exact on such scenes, which is what the
/// oracle-comparison tests assert. Predictions packed tighter than the
/// sensor can resolve make any one-to-one marginal (the exact one included)
/// collapse toward symmetry, and the propagation error there is genuinely
/// larger — that regime is deliberately outside this draw.
pub fn benchmark_weights<R: rand::Rng>(rng: &mut R, n_tracks: usize, n_meas: usize) -> AssocWeights {
    use rand_distr::Distribution as _;
    const SIDE: f64 = 16.0;
    const MIN_SEP: f64 = 5.0;
    let mut preds: Vec<(f64, f64)> = Vec::with_capacity(n_tracks);
    while preds.len() < n_tracks {
        let p = (rng.random_range(0.0..SIDE), rng.random_range(0.0..SIDE));
        if preds
            .iter()
            .all(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() >= MIN_SEP)
        {
            preds.push(p);
        }
    }
    let normal = rand_distr::Normal::new(0.0, 1.0).expect("unit normal");
    let meas: Vec<(f64, f64)> = (0..n_meas)
        .map(|_| {
            if rng.random::<f64>() < 0.8 {
                let t = rng.random_range(0..n_tracks);
                let (x, y) = preds[t];
                (x + normal.sample(rng), y + normal.sample(rng))
            } else {
                (rng.random_range(0.0..SIDE), rng.random_range(0.0..SIDE))
            }
        })
        .collect();
    let detect: Vec<f64> = (0..n_tracks).map(|_| rng.random_range(0.5..0.95)).collect();
    let lik = preds
        .iter()
        .map(|p| {
            meas.iter()
                .map(|m| {
                    let d2 = (p.0 - m.0).powi(2) + (p.1 - m.1).powi(2);
                    -0.5 * d2 - (2.0 * std::f64::consts::PI).ln()
                })
                .collect()
        })
        .collect();
    AssocWeights {
        detect: detect.iter().map(|p| p.ln()).collect(),
        miss: detect.iter().map(|p| (1.0 - p).ln()).collect(),
        lik,
        clutter: -(SIDE * SIDE).ln(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weights_from_parts(
        detect_p: &[f64],
        lik: Vec<Vec<f64>>,
        volume: f64,
    ) -> AssocWeights {
        AssocWeights {
            detect: detect_p.iter().map(|p| p.ln()).collect(),
            miss: detect_p.iter().map(|p| (1.0 - p).ln()).collect(),
            lik,
            clutter: -volume.ln(),
        }
    }

    #[test]
    fn single_pair_matches_hand_computation() {
        // One track, one measurement, ⟨P_d⟩ = 0.8, likelihood 2, volume 4.
        // Events: assign (0.8·2 = 1.6) or miss + clutter (0.2·0.25 = 0.05).
        let w = weights_from_parts(&[0.8], vec![vec![2.0f64.ln()]], 4.0);
        let expect = 1.6 / 1.65;
        let exact = enumerate_marginals(&w).unwrap();
        assert_relative_eq!(exact.assoc[1][1], expect, epsilon = 1e-12);
        assert_relative_eq!(exact.assoc[1][0], 1.0 - expect, epsilon = 1e-12);
        assert_relative_eq!(exact.assoc[0][1], 1.0 - expect, epsilon = 1e-12);
        assert_eq!(exact.assoc[0][0], 0.0);

        // A single target is a tree: propagation is exact. Damped message
        // convergence is geometric, so drive the residual well below the
        // tolerance being asserted.
        let cfg = LbpConfig {
            max_iters: 500,
            tol: 1e-12,
            ..LbpConfig::default()
        };
        let prop = lbp(&w, &cfg);
        assert!(prop.converged);
        assert_relative_eq!(prop.assoc[1][1], expect, epsilon = 1e-9);
        assert_relative_eq!(prop.assoc[1][0], 1.0 - expect, epsilon = 1e-9);
        assert_relative_eq!(prop.assoc[0][1], 1.0 - expect, epsilon = 1e-9);
    }

    #[test]
    fn empty_scan_and_empty_track_set() {
        let w = weights_from_parts(&[0.9, 0.8], vec![vec![], vec![]], 1800.0);
        let m = lbp(&w, &LbpConfig::default());
        assert_eq!(m.assoc[1][0], 1.0);
        assert_eq!(m.assoc[2][0], 1.0);

        let w = weights_from_parts(&[], vec![], 1800.0);
        let m = lbp(&w, &LbpConfig::default());
        assert_eq!(m.assoc.len(), 1);
    }

    #[test]
    fn track_with_empty_gate_is_a_sure_miss() {
        let lik = vec![
            vec![1.0, 0.5],
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
        ];
        let w = weights_from_parts(&[0.9, 0.9], lik, 1800.0);
        let m = lbp(&w, &LbpConfig::default());
        assert!(m.converged);
        assert_relative_eq!(m.assoc[2][0], 1.0, epsilon = 1e-12);
        assert_eq!(m.assoc[2][1], 0.0);
        let exact = enumerate_marginals(&w).unwrap();
        assert_relative_eq!(exact.assoc[2][0], 1.0, epsilon = 1e-12);
        for j in 1..=2 {
            assert_relative_eq!(m.assoc[1][j], exact.assoc[1][j], epsilon = 1e-6);
        }
    }

    #[test]
    fn propagation_tracks_enumeration_on_random_scans() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = LbpConfig {
            max_iters: 400,
            tol: 1e-10,
            damping: 0.5,
        };
        for _ in 0..40 {
            let n_t = rng.random_range(2..=4);
            let n_e = rng.random_range(1..=4);
            let w = benchmark_weights(&mut rng, n_t, n_e);
            let exact = enumerate_marginals(&w).unwrap();
            let prop = lbp(&w, &cfg);
            for i in 0..=n_t {
                for j in 0..=n_e {
                    assert_relative_eq!(
                        prop.assoc[i][j],
                        exact.assoc[i][j],
                        epsilon = 0.05
                    );
                }
            }
        }
    }

    #[test]
    fn consistency_holds_after_convergence() {
        let lik = vec![vec![1.2, -0.3, 0.4], vec![0.1, 0.9, -1.0], vec![-0.5, 0.2, 0.8]];
        let w = weights_from_parts(&[0.85, 0.7, 0.9], lik, 1800.0);
        let m = lbp(
            &w,
            &LbpConfig {
                max_iters: 500,
                tol: 1e-12,
                damping: 0.5,
            },
        );
        assert!(m.converged);
        let c = consistency_check(&m);
        assert!(c.max_row_dev < 1e-6, "row deviation {}", c.max_row_dev);
        assert!(c.max_col_dev < 1e-6, "col deviation {}", c.max_col_dev);
    }

    #[test]
    fn enumeration_rejects_oversized_scans() {
        let w = weights_from_parts(&[0.5; 9], vec![vec![0.0; 2]; 9], 10.0);
        assert!(matches!(
            enumerate_marginals(&w),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }
}
