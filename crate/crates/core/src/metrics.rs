//! Scoring: OSPA distance, track-to-truth association, and the scalar
//! metric suite computed from one run's truth, scans, and track output.

use nalgebra::Vector2;

use crate::assignment;
use crate::sim::{Scan, TargetTruth};
use crate::tracker::TrackOutput;

/// Parameters of the scoring pass.
#[derive(Debug, Clone, Copy)]
pub struct MetricsConfig {
    /// OSPA cutoff (meters).
    pub ospa_cutoff: f64,
    /// Largest cardinality scored by exhaustive matching; bigger sets go
    /// through the O(n³) solver.
    pub ospa_exhaustive_limit: usize,
    /// Mean-position-error ceiling for a track to count toward a target.
    pub assoc_gate: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            ospa_cutoff: 100.0,
            ospa_exhaustive_limit: 6,
            assoc_gate: 100.0,
        }
    }
}

/// Second-order OSPA distance between two position sets, using the given
/// cutoff. Positions only; the cardinality penalty is the cutoff itself.
pub fn ospa(a: &[Vector2<f64>], b: &[Vector2<f64>], cutoff: f64) -> f64 {
    ospa_with_limit(a, b, cutoff, MetricsConfig::default().ospa_exhaustive_limit)
}

pub fn ospa_with_limit(
    a: &[Vector2<f64>],
    b: &[Vector2<f64>],
    cutoff: f64,
    exhaustive_limit: usize,
) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return cutoff;
    }
    // Arrange so rows are the smaller set, then pad with zero-cost dummy
    // rows: the optimal assignment picks the best m real matches and the
    // unmatched surplus is charged the full cutoff.
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let (m, n) = (small.len(), large.len());
    let mut cost = vec![vec![0.0; n]; n];
    for (i, p) in small.iter().enumerate() {
        for (j, q) in large.iter().enumerate() {
            cost[i][j] = (p - q).norm().min(cutoff).powi(2);
        }
    }
    let (_, matched) = if n <= exhaustive_limit {
        assignment::solve_exhaustive(&cost)
    } else {
        assignment::solve(&cost)
    };
    let total = matched + (n - m) as f64 * cutoff * cutoff;
    (total / n as f64).sqrt()
}

/// Greedy track-to-truth association: candidate pairs need at least one
/// common scan and mean position error inside the gate; pairs are accepted
/// in order of increasing error, each track at most once, and a second
/// track joins a target only when their scan supports are disjoint.
///
/// Returns, per track, the index of its target (or `None`).
pub fn associate_tracks(
    truth: &[TargetTruth],
    tracks: &[TrackOutput],
    gate: f64,
) -> Vec<Option<usize>> {
    struct Candidate {
        err: f64,
        track: usize,
        target: usize,
    }
    let mut candidates = Vec::new();
    for (t_idx, track) in tracks.iter().enumerate() {
        for (g_idx, target) in truth.iter().enumerate() {
            let mut err = 0.0;
            let mut count = 0usize;
            for rec in &track.records {
                if let Some(x) = target.state_at(rec.scan) {
                    let dx = rec.mean[0] - x[0];
                    let dy = rec.mean[2] - x[2];
                    err += (dx * dx + dy * dy).sqrt();
                    count += 1;
                }
            }
            if count > 0 {
                let mean_err = err / count as f64;
                if mean_err <= gate {
                    candidates.push(Candidate {
                        err: mean_err,
                        track: t_idx,
                        target: g_idx,
                    });
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.err
            .partial_cmp(&b.err)
            .unwrap()
            .then(a.track.cmp(&b.track))
            .then(a.target.cmp(&b.target))
    });

    let mut assignment: Vec<Option<usize>> = vec![None; tracks.len()];
    for cand in candidates {
        if assignment[cand.track].is_some() {
            continue;
        }
        // Scan supports of tracks already on this target must not overlap
        // this track's: two simultaneous estimates of one target means one
        // of them is a false track, not a break.
        let scans_of = |t: usize| -> Vec<usize> { tracks[t].records.iter().map(|r| r.scan).collect() };
        let mine = scans_of(cand.track);
        let clash = assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == Some(cand.target))
            .any(|(other, _)| {
                let theirs = scans_of(other);
                mine.iter().any(|s| theirs.contains(s))
            });
        if !clash {
            assignment[cand.track] = Some(cand.target);
        }
    }
    assignment
}

/// Scalar summary of one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunMetrics {
    /// Tracks associated with some target.
    pub nvt: f64,
    /// Confirmed tracks associated with no target.
    pub nft: f64,
    /// Extra track segments per target, summed (0 = every target covered by
    /// at most one track).
    pub ntb: f64,
    /// Fraction of target lifetime covered by its tracks, averaged over all
    /// targets (untracked targets count as zero).
    pub tpd: f64,
    /// Mean maneuver-model error: one minus the probability assigned to the
    /// true model, pooled over associated track-scans.
    pub maer: f64,
    /// Mean association error: one minus the weight on the measurement the
    /// target actually produced (or on the miss when it produced none).
    pub daer: f64,
    /// Mean position / velocity estimation error over associated
    /// track-scans.
    pub aee_p: f64,
    pub aee_v: f64,
    /// OSPA averaged over all scans.
    pub mospa: f64,
}

/// One scan's cross-sectional scores.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    pub scan: usize,
    pub ospa: f64,
    pub n_truth: usize,
    pub n_tracks: usize,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub summary: RunMetrics,
    pub per_scan: Vec<ScanPoint>,
    /// Per track, the associated target index.
    pub assignment: Vec<Option<usize>>,
}

/// Score one run.
pub fn evaluate(
    truth: &[TargetTruth],
    scans: &[Scan],
    tracks: &[TrackOutput],
    cfg: &MetricsConfig,
) -> Evaluation {
    let assignment = associate_tracks(truth, tracks, cfg.assoc_gate);

    let nvt = assignment.iter().flatten().count();
    let nft = tracks.len() - nvt;
    let mut ntb = 0.0;
    for g_idx in 0..truth.len() {
        let pieces = assignment.iter().filter(|a| **a == Some(g_idx)).count();
        ntb += pieces.saturating_sub(1) as f64;
    }

    // Lifetime coverage per target.
    let mut tpd = 0.0;
    for (g_idx, target) in truth.iter().enumerate() {
        let mut covered = vec![false; target.lifetime()];
        for (t_idx, assigned) in assignment.iter().enumerate() {
            if *assigned != Some(g_idx) {
                continue;
            }
            for rec in &tracks[t_idx].records {
                if rec.scan >= target.birth && rec.scan <= target.death {
                    covered[rec.scan - target.birth] = true;
                }
            }
        }
        tpd += covered.iter().filter(|c| **c).count() as f64 / target.lifetime() as f64;
    }
    if !truth.is_empty() {
        tpd /= truth.len() as f64;
    }

    // Pooled per-record errors over associated tracks.
    let mut maer_sum = 0.0;
    let mut maer_n = 0usize;
    let mut daer_sum = 0.0;
    let mut daer_n = 0usize;
    let mut aee_p_sum = 0.0;
    let mut aee_v_sum = 0.0;
    let mut aee_n = 0usize;
    for (t_idx, assigned) in assignment.iter().enumerate() {
        let Some(g_idx) = assigned else { continue };
        let target = &truth[*g_idx];
        for rec in &tracks[t_idx].records {
            let Some(x) = target.state_at(rec.scan) else {
                continue;
            };
            let dx = rec.mean[0] - x[0];
            let dy = rec.mean[2] - x[2];
            aee_p_sum += (dx * dx + dy * dy).sqrt();
            let dvx = rec.mean[1] - x[1];
            let dvy = rec.mean[3] - x[3];
            aee_v_sum += (dvx * dvx + dvy * dvy).sqrt();
            aee_n += 1;

            if let Some(true_model) = target.model_at(rec.scan) {
                if true_model < rec.model_probs.len() {
                    maer_sum += 1.0 - rec.model_probs[true_model];
                    maer_n += 1;
                }
            }

            if let Some((weights, miss)) = &rec.assoc {
                if rec.scan >= 1 && rec.scan <= scans.len() {
                    let scan = &scans[rec.scan - 1];
                    let origin = scan.origin.iter().position(|o| *o == Some(*g_idx));
                    let got = match origin {
                        Some(j) => weights
                            .iter()
                            .find(|(jj, _)| *jj == j)
                            .map(|(_, w)| *w)
                            .unwrap_or(0.0),
                        None => *miss,
                    };
                    daer_sum += 1.0 - got;
                    daer_n += 1;
                }
            }
        }
    }

    // Per-scan OSPA between alive truth and emitted estimates.
    let n_scans = scans.len();
    let mut per_scan = Vec::with_capacity(n_scans);
    let mut mospa = 0.0;
    for k in 1..=n_scans {
        let truth_pos: Vec<Vector2<f64>> = truth
            .iter()
            .filter_map(|t| t.state_at(k))
            .map(|x| Vector2::new(x[0], x[2]))
            .collect();
        let est_pos: Vec<Vector2<f64>> = tracks
            .iter()
            .flat_map(|t| t.records.iter())
            .filter(|r| r.scan == k)
            .map(|r| Vector2::new(r.mean[0], r.mean[2]))
            .collect();
        let d = ospa_with_limit(
            &truth_pos,
            &est_pos,
            cfg.ospa_cutoff,
            cfg.ospa_exhaustive_limit,
        );
        mospa += d;
        per_scan.push(ScanPoint {
            scan: k,
            ospa: d,
            n_truth: truth_pos.len(),
            n_tracks: est_pos.len(),
        });
    }
    if n_scans > 0 {
        mospa /= n_scans as f64;
    }

    let ratio = |s: f64, n: usize| if n > 0 { s / n as f64 } else { 0.0 };
    Evaluation {
        summary: RunMetrics {
            nvt: nvt as f64,
            nft: nft as f64,
            ntb,
            tpd,
            maer: ratio(maer_sum, maer_n),
            daer: ratio(daer_sum, daer_n),
            aee_p: ratio(aee_p_sum, aee_n),
            aee_v: ratio(aee_v_sum, aee_n),
            mospa,
        },
        per_scan,
        assignment,
    }
}

/// Mean of each metric over several runs.
pub fn mean_metrics(runs: &[RunMetrics]) -> RunMetrics {
    let n = runs.len().max(1) as f64;
    let mut out = RunMetrics::default();
    for r in runs {
        out.nvt += r.nvt;
        out.nft += r.nft;
        out.ntb += r.ntb;
        out.tpd += r.tpd;
        out.maer += r.maer;
        out.daer += r.daer;
        out.aee_p += r.aee_p;
        out.aee_v += r.aee_v;
        out.mospa += r.mospa;
    }
    out.nvt /= n;
    out.nft /= n;
    out.ntb /= n;
    out.tpd /= n;
    out.maer /= n;
    out.daer /= n;
    out.aee_p /= n;
    out.aee_v /= n;
    out.mospa /= n;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::OutputRecord;
    use nalgebra::{Matrix4, Vector4};

    fn points(coords: &[(f64, f64)]) -> Vec<Vector2<f64>> {
        coords.iter().map(|&(x, y)| Vector2::new(x, y)).collect()
    }

    #[test]
    fn ospa_empty_cases() {
        assert_eq!(ospa(&[], &[], 100.0), 0.0);
        assert_eq!(ospa(&points(&[(0.0, 0.0)]), &[], 100.0), 100.0);
        assert_eq!(ospa(&[], &points(&[(0.0, 0.0)]), 100.0), 100.0);
    }

    #[test]
    fn ospa_identical_sets_score_zero() {
        let a = points(&[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        assert!(ospa(&a, &a, 100.0) < 1e-12);
    }

    #[test]
    fn ospa_known_values() {
        // One common point, one surplus: sqrt(c²/2).
        let a = points(&[(0.0, 0.0)]);
        let b = points(&[(0.0, 0.0), (10.0, 0.0)]);
        let c = 100.0_f64;
        let expect = (c * c / 2.0).sqrt();
        assert!((ospa(&a, &b, c) - expect).abs() < 1e-12);

        // Equal cardinality, pure localization: the RMS of the per-point
        // distances.
        let a = points(&[(0.0, 0.0), (10.0, 0.0)]);
        let b = points(&[(3.0, 0.0), (10.0, 4.0)]);
        let expect = ((9.0 + 16.0) / 2.0_f64).sqrt();
        assert!((ospa(&a, &b, c) - expect).abs() < 1e-12);

        // Distances saturate at the cutoff.
        let a = points(&[(0.0, 0.0)]);
        let b = points(&[(1e6, 0.0)]);
        assert!((ospa(&a, &b, c) - c).abs() < 1e-12);
    }

    #[test]
    fn ospa_is_symmetric_and_triangular() {
        use rand::Rng as _;
        use rand::SeedableRng as _;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = 100.0;
        for _ in 0..300 {
            let mut set = || {
                let n = rng.random_range(0..5usize);
                (0..n)
                    .map(|_| {
                        Vector2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0))
                    })
                    .collect::<Vec<_>>()
            };
            let (a, b, d) = (set(), set(), set());
            let ab = ospa(&a, &b, c);
            let ba = ospa(&b, &a, c);
            assert!((ab - ba).abs() < 1e-12, "asymmetric: {ab} vs {ba}");
            let ac = ospa(&a, &d, c);
            let cb = ospa(&d, &b, c);
            assert!(
                ab <= ac + cb + 1e-12,
                "triangle violated: {ab} > {ac} + {cb}"
            );
        }
    }

    #[test]
    fn ospa_exhaustive_and_solver_agree() {
        use rand::Rng as _;
        use rand::SeedableRng as _;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let mut set = |n: usize| {
                (0..n)
                    .map(|_| {
                        Vector2::new(rng.random_range(-80.0..80.0), rng.random_range(-80.0..80.0))
                    })
                    .collect::<Vec<_>>()
            };
            let a = set(5);
            let b = set(6);
            let via_exhaustive = ospa_with_limit(&a, &b, 100.0, 6);
            let via_solver = ospa_with_limit(&a, &b, 100.0, 0);
            assert!((via_exhaustive - via_solver).abs() < 1e-9);
        }
    }

    fn track_on(target: &TargetTruth, id: usize, from: usize, to: usize) -> TrackOutput {
        let records = (from..=to)
            .filter_map(|k| {
                target.state_at(k).map(|x| OutputRecord {
                    scan: k,
                    mean: *x,
                    cov: Matrix4::identity(),
                    model_probs: vec![0.9, 0.1],
                    p_visible: 0.95,
                    assoc: None,
                })
            })
            .collect();
        TrackOutput { id, records }
    }

    fn straight_target(x0: f64, birth: usize, death: usize) -> TargetTruth {
        let states = (0..=death - birth)
            .map(|k| Vector4::new(x0 + 50.0 * k as f64, 50.0, 0.0, 0.0))
            .collect();
        TargetTruth {
            birth,
            death,
            models: vec![0; death - birth + 1],
            states,
        }
    }

    #[test]
    fn association_prefers_smaller_error_and_respects_disjoint_support() {
        let t0 = straight_target(0.0, 1, 20);
        let truth = vec![t0.clone()];
        // Two overlapping tracks on the same target: only the better one
        // (here the earlier id at equal error) may associate.
        let a = track_on(&t0, 0, 1, 12);
        let b = track_on(&t0, 1, 10, 20);
        let assignment = associate_tracks(&truth, &[a.clone(), b.clone()], 100.0);
        assert_eq!(assignment[0], Some(0));
        assert_eq!(assignment[1], None);

        // Disjoint pieces both associate; that is one break.
        let b = track_on(&t0, 1, 13, 20);
        let assignment = associate_tracks(&truth, &[a, b], 100.0);
        assert_eq!(assignment, vec![Some(0), Some(0)]);
    }

    #[test]
    fn evaluate_scores_a_clean_run() {
        let t0 = straight_target(0.0, 1, 20);
        let t1 = straight_target(10_000.0, 1, 20);
        let truth = vec![t0.clone(), t1.clone()];
        let scans: Vec<Scan> = (0..20)
            .map(|_| Scan {
                meas: Vec::new(),
                origin: Vec::new(),
            })
            .collect();
        let tracks = vec![track_on(&t0, 0, 1, 20), track_on(&t1, 1, 1, 20)];
        let eval = evaluate(&truth, &scans, &tracks, &MetricsConfig::default());
        assert_eq!(eval.summary.nvt, 2.0);
        assert_eq!(eval.summary.nft, 0.0);
        assert_eq!(eval.summary.ntb, 0.0);
        assert!((eval.summary.tpd - 1.0).abs() < 1e-12);
        assert!(eval.summary.mospa < 1e-9);
        assert!(eval.summary.aee_p < 1e-9);
        assert!((eval.summary.maer - 0.1).abs() < 1e-12);
        assert_eq!(eval.per_scan.len(), 20);
    }

    #[test]
    fn evaluate_counts_breaks_and_false_tracks() {
        let t0 = straight_target(0.0, 1, 30);
        let truth = vec![t0.clone()];
        let scans: Vec<Scan> = (0..30)
            .map(|_| Scan {
                meas: Vec::new(),
                origin: Vec::new(),
            })
            .collect();
        // Two disjoint pieces plus one track nowhere near the target.
        let far = TrackOutput {
            id: 2,
            records: (1..=10)
                .map(|k| OutputRecord {
                    scan: k,
                    mean: Vector4::new(5.0e5, 0.0, 5.0e5, 0.0),
                    cov: Matrix4::identity(),
                    model_probs: vec![1.0, 0.0],
                    p_visible: 0.9,
                    assoc: None,
                })
                .collect(),
        };
        let tracks = vec![track_on(&t0, 0, 1, 14), track_on(&t0, 1, 18, 30), far];
        let eval = evaluate(&truth, &scans, &tracks, &MetricsConfig::default());
        assert_eq!(eval.summary.nvt, 2.0);
        assert_eq!(eval.summary.nft, 1.0);
        assert_eq!(eval.summary.ntb, 1.0);
        // 27 of 30 scans covered.
        assert!((eval.summary.tpd - 27.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn mean_metrics_averages_fields() {
        let a = RunMetrics {
            nvt: 4.0,
            mospa: 10.0,
            ..Default::default()
        };
        let b = RunMetrics {
            nvt: 2.0,
            mospa: 30.0,
            ..Default::default()
        };
        let m = mean_metrics(&[a, b]);
        assert!((m.nvt - 3.0).abs() < 1e-12);
        assert!((m.mospa - 20.0).abs() < 1e-12);
    }
}
