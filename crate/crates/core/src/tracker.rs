//! The sliding-window tracker: scan-by-scan bootstrap, iterative refinement
//! of the window's coupled beliefs, track lifecycle management, and output
//! assembly.
//!
//! Each arriving scan is first absorbed with a cheap forward pass
//! (nearest-gated-measurement association, per-model filtering, forward
//! chain updates). Once the window is full, the batch refinement alternates
//! four stages until the beliefs settle or the iteration budget runs out:
//!
//!  (a) per-scan association marginals by loopy belief propagation,
//!  (b) per-track visibility smoothing over the window,
//!  (c) per-track maneuver-model smoothing over the window,
//!  (d) per-track kinematic smoothing: at every scan each motion model
//!      branches one step off the previous scan's fused belief, filters
//!      against the shared association-weighted synthetic measurement, and
//!      the branches are fused back per scan under the model weights —
//!      forward, then again through the backward smoothing recursion.
//!
//! Re-mixing the model branches through the fused belief at every step is
//! what keeps a maneuver onset in the middle of the window detectable: the
//! fused trajectory follows the measurements, and the model stage scores
//! each model's one-step dynamics against that trajectory's actual scan-to-
//! scan motion, so a bend punishes the straight model scan by scan instead
//! of being averaged into a whole-window fit. Gating moment-matches the
//! one-step branches into a single mixture prediction: an improbable model
//! widens the gate in its own direction only in proportion to its weight,
//! rather than projecting a full gate of its own, which with closely
//! spaced targets would sweep in the neighbors.
//!
//! Setting the iteration budget to zero keeps the bootstrap beliefs
//! untouched (open-loop mode). Sliding the window finalizes the expelled
//! scans: their smoothed beliefs become immutable output records and each
//! track's chain/filter anchor moves forward.

use std::collections::VecDeque;

use nalgebra::{DMatrix, Matrix2, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::assoc::{self, LbpConfig, Marginals, TrackView};
use crate::belief::{fuse_models, spd_inverse, symmetrize, GaussianBelief};
use crate::filters::{
    gate_threshold, meas_diff, measurement_transform, rts_step, synthetic_measurement,
    two_point_init, Synthetic, UtParams, RANGE_AZIMUTH_ANGULAR,
};
use crate::hmm;
use crate::models::{
    axis_process_noise, cartesian_from_polar, ct_model, cv_model, measure, measurement_noise,
    MotionModel,
};
use crate::sim::ScenarioConfig;
use crate::{Error, Result};

// ======================================================================
// Configuration
// ======================================================================

/// Which beliefs become output records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// Emit each scan's belief when it leaves the window, fully smoothed.
    Smoothed,
    /// Emit each scan's belief the moment its window completes, i.e. with no
    /// later evidence folded in.
    Realtime,
}

/// Tracker parameters. Defaults reproduce the reference four-target
/// scenario's operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Sliding window length in scans (l).
    pub window_len: usize,
    /// Scans expelled per slide (s).
    pub slide: usize,
    /// Refinement iteration budget per window (r_max); 0 = open loop.
    pub max_iters: usize,
    /// Belief-change threshold that stops the refinement early.
    pub stop_tol: f64,
    /// Gate probability for measurement validation.
    pub gate_prob: f64,
    /// Confirm a track when its recent mean visibility exceeds this.
    pub confirm_threshold: f64,
    /// Delete a track when its recent mean visibility falls below this.
    pub delete_threshold: f64,
    /// How many recent scans the confirm/delete averages run over.
    pub manage_scans: usize,
    /// Detection probability given visible / not visible, as assumed by the
    /// association and visibility models.
    pub pd_visible: f64,
    pub pd_invisible: f64,
    /// Prior probability that a newborn track is visible.
    pub prior_visible: f64,
    /// Self-transition probability of the visibility chain.
    pub visibility_stay: f64,
    /// Prior over the motion-model bank for a newborn track.
    pub model_prior: Vec<f64>,
    /// Self-transition probability of the model chain.
    pub model_stay: f64,
    /// Speed ceiling for two-point initialization (m/s).
    pub v_max: f64,
    /// Clutter-probability threshold above which a converged window's
    /// measurement seeds an initiator. Kept at "more likely clutter than
    /// anyone's detection": a lost target's measurements often fall inside
    /// a surviving neighbor's validation region, which halves their clutter
    /// probability without ever truly claiming them — a stricter threshold
    /// would leave such a stream unrecoverable.
    pub init_clutter_threshold: f64,
    /// Measurement-space volume of the surveillance region.
    pub volume: f64,
    pub sample_time: f64,
    pub sigma_range: f64,
    pub sigma_azimuth: f64,
    /// Coordinated-turn rate assumed by the second bank model (rad/s).
    pub omega: f64,
    /// Constant-velocity process noise (position, velocity intensities).
    pub q_pos: f64,
    pub q_vel: f64,
    /// Turn-model process noise as a multiple of the CV noise.
    pub q_ct_scale: f64,
    pub ut: UtParams,
    pub lbp: LbpConfig,
    pub output: OutputMode,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            window_len: 10,
            slide: 1,
            max_iters: 10,
            stop_tol: 1e-3,
            gate_prob: 0.997,
            confirm_threshold: 0.85,
            delete_threshold: 0.3,
            manage_scans: 5,
            pd_visible: 0.9,
            pd_invisible: 0.1,
            prior_visible: 0.5,
            visibility_stay: 0.85,
            model_prior: vec![0.9, 0.1],
            model_stay: 0.9,
            v_max: 500.0,
            init_clutter_threshold: 0.5,
            volume: 1800.0,
            sample_time: 1.0,
            sigma_range: 20.0,
            sigma_azimuth: 1e-3,
            omega: 0.087,
            q_pos: 0.01,
            q_vel: 0.005,
            q_ct_scale: 10.0,
            ut: UtParams::default(),
            lbp: LbpConfig::default(),
            output: OutputMode::Smoothed,
        }
    }
}

impl TrackerConfig {
    /// A configuration whose sensor, motion-model, and clutter parameters
    /// match the given scenario.
    pub fn matched_to(scenario: &ScenarioConfig) -> Self {
        Self {
            volume: scenario.region.volume(),
            sample_time: scenario.sample_time,
            sigma_range: scenario.sigma_range,
            sigma_azimuth: scenario.sigma_azimuth,
            omega: scenario.omega,
            q_pos: scenario.q_pos,
            q_vel: scenario.q_vel,
            q_ct_scale: scenario.q_ct_scale,
            ..Self::default()
        }
    }
}

// ======================================================================
// Output
// ======================================================================

/// One finalized scan of one track.
#[derive(Debug, Clone)]
pub struct OutputRecord {
    /// 1-based scan index.
    pub scan: usize,
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub model_probs: Vec<f64>,
    pub p_visible: f64,
    /// Association marginals at this scan: gated `(measurement index,
    /// weight)` pairs plus the missed-detection weight. `None` on the
    /// initialization record, which consumed its measurements outside the
    /// association stage.
    pub assoc: Option<(Vec<(usize, f64)>, f64)>,
}

/// A confirmed track's emitted history.
#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub id: usize,
    pub records: Vec<OutputRecord>,
}

/// Counters accumulated over a run, for diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrackerStats {
    pub windows: usize,
    pub refinement_iterations: usize,
    pub windows_hit_iteration_cap: usize,
    pub lbp_nonconverged_scans: usize,
}

// ======================================================================
// Internal state
// ======================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrackStatus {
    Preliminary,
    Confirmed,
}

/// Everything the window holds about one track at one scan. The per-model
/// vectors are parallel branches: model m's entries predict and update
/// under model m's dynamics from its own mixed start at the previous scan
/// (see `mixed_model_starts`).
#[derive(Debug, Clone)]
struct TrackStep {
    scan: usize,
    // Forward-pass products, per model branch.
    per_model_pred: Vec<GaussianBelief>,
    pred_meas: Vec<Vector2<f64>>,
    innov_cov: Vec<Matrix2<f64>>,
    per_model_filtered: Vec<GaussianBelief>,
    fused_filtered: GaussianBelief,
    // Smoothed products; until the first backward pass these mirror the
    // forward ones and `cross` stays empty. `cross` is the smoothed
    // Cov(x_t, x_{t−1}) of the fused trajectory.
    per_model_smoothed: Vec<GaussianBelief>,
    fused: GaussianBelief,
    cross: Option<Matrix4<f64>>,
    // Association state at this scan.
    gated: Vec<usize>,
    assoc: Vec<(usize, f64)>,
    miss_weight: f64,
    synth: Option<Vector2<f64>>,
    updated: bool,
    /// Per-model one-step predictive log-likelihoods from the bootstrap
    /// pass; the model chain consumes these until smoothed evidence exists.
    bootstrap_emission: Vec<f64>,
    // Chain beliefs at this scan.
    model_probs: Vec<f64>,
    p_visible: f64,
}

#[derive(Debug)]
struct Track {
    id: usize,
    status: TrackStatus,
    confirmed_ever: bool,
    /// Scan of the fixed belief everything in the window chains from.
    anchor_time: usize,
    anchor: GaussianBelief,
    anchor_models: Vec<f64>,
    anchor_visible: f64,
    anchor_emitted: bool,
    /// In-window scans, contiguous from `anchor_time + 1`.
    steps: VecDeque<TrackStep>,
    records: Vec<OutputRecord>,
}

impl Track {
    fn step_index(&self, scan: usize) -> Option<usize> {
        let idx = scan.checked_sub(self.anchor_time + 1)?;
        (idx < self.steps.len()).then_some(idx)
    }

    /// The fused belief feeding every model's prediction into `scan`: the
    /// anchor at the window's first step, the previous step's fused belief
    /// after that.
    fn fused_before(&self, scan: usize) -> Option<GaussianBelief> {
        if scan == self.anchor_time + 1 {
            Some(self.anchor)
        } else {
            self.step_index(scan - 1).map(|i| self.steps[i].fused)
        }
    }
}

/// A single-scan measurement waiting for a second detection.
#[derive(Debug, Clone)]
struct Initiator {
    scan: usize,
    meas_index: usize,
    polar: Vector2<f64>,
    cart: Vector2<f64>,
    /// True when the window's association marginals called this
    /// measurement clutter. A vetted initiator may pair with an unclaimed
    /// measurement inside some track's gate — a target born next to an
    /// established track would otherwise stay shadowed by that gate for
    /// scans on end.
    vetted: bool,
}

/// One scan held by the window.
#[derive(Debug)]
struct WindowScan {
    scan: usize,
    meas: Vec<Vector2<f64>>,
    /// Track ids in row order of `marginals`, and the marginals themselves,
    /// from the most recent refinement pass over this scan.
    rows: Vec<usize>,
    marginals: Option<Marginals>,
}

struct ModelTransform {
    pred: GaussianBelief,
    y_mean: Vector2<f64>,
    spread: Matrix2<f64>,
    cross: Matrix4x2<f64>,
}

/// Products of one forward filtering step over the model bank.
struct Kinematics {
    per_model_pred: Vec<GaussianBelief>,
    pred_meas: Vec<Vector2<f64>>,
    innov_cov: Vec<Matrix2<f64>>,
    per_model_filtered: Vec<GaussianBelief>,
    predictive_loglik: Vec<f64>,
    updated: bool,
    synth: Option<Vector2<f64>>,
}

fn radar_h(x: &Vector4<f64>) -> Result<Vector2<f64>> {
    measure(x)
}

fn gaussian2_loglik(nu: &Vector2<f64>, s: &Matrix2<f64>) -> Result<f64> {
    let det = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
    let s_inv = crate::filters::small_inverse(s)?;
    Ok(-0.5 * (nu.transpose() * s_inv * nu)[(0, 0)]
        - (2.0 * std::f64::consts::PI).ln()
        - 0.5 * det.ln())
}

// ======================================================================
// Tracker
// ======================================================================

pub struct Tracker {
    cfg: TrackerConfig,
    bank: Vec<MotionModel>,
    noise: Matrix2<f64>,
    t_e: DMatrix<f64>,
    t_m: DMatrix<f64>,
    gate_thresh: f64,
    current_scan: usize,
    next_id: usize,
    tracks: Vec<Track>,
    graveyard: Vec<Track>,
    window: VecDeque<WindowScan>,
    pending_initiators: Vec<Initiator>,
    stats: TrackerStats,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        if cfg.window_len < 2 {
            return Err(Error::Dimension(
                "window_len must be at least 2".to_string(),
            ));
        }
        if cfg.slide == 0 || cfg.slide > cfg.window_len {
            return Err(Error::Dimension(
                "slide must be in 1..=window_len".to_string(),
            ));
        }
        let q = axis_process_noise(cfg.q_pos, cfg.q_vel);
        let bank = vec![
            cv_model(cfg.sample_time, q)?,
            ct_model(cfg.sample_time, cfg.omega, q * cfg.q_ct_scale)?,
        ];
        if cfg.model_prior.len() != bank.len() {
            return Err(Error::Dimension(format!(
                "model_prior has {} entries for a bank of {}",
                cfg.model_prior.len(),
                bank.len()
            )));
        }
        let s_e = cfg.visibility_stay;
        let t_e = DMatrix::from_row_slice(2, 2, &[s_e, 1.0 - s_e, 1.0 - s_e, s_e]);
        let n_m = bank.len();
        let off = (1.0 - cfg.model_stay) / (n_m - 1) as f64;
        let mut t_m = DMatrix::from_element(n_m, n_m, off);
        for i in 0..n_m {
            t_m[(i, i)] = cfg.model_stay;
        }
        let noise = measurement_noise(cfg.sigma_range, cfg.sigma_azimuth);
        let gate_thresh = gate_threshold(cfg.gate_prob);
        Ok(Self {
            cfg,
            bank,
            noise,
            t_e,
            t_m,
            gate_thresh,
            current_scan: 0,
            next_id: 0,
            tracks: Vec::new(),
            graveyard: Vec::new(),
            window: VecDeque::new(),
            pending_initiators: Vec::new(),
            stats: TrackerStats::default(),
        })
    }

    pub fn stats(&self) -> TrackerStats {
        self.stats
    }

    /// Feed one scan of measurements. Scans must arrive in time order.
    pub fn step(&mut self, meas: &[Vector2<f64>]) -> Result<()> {
        self.current_scan += 1;
        let scan = self.current_scan;
        self.window.push_back(WindowScan {
            scan,
            meas: meas.to_vec(),
            rows: Vec::new(),
            marginals: None,
        });

        // Cheap forward absorption of the new scan: each existing track
        // claims its nearest gated measurement, exclusively, oldest track
        // first.
        let mut claimed = vec![false; meas.len()];
        let mut in_any_gate = vec![false; meas.len()];
        for t_idx in 0..self.tracks.len() {
            let track = &self.tracks[t_idx];
            let (prev_models, prev_visible) = match track.steps.back() {
                Some(s) => (s.model_probs.clone(), s.p_visible),
                None => (track.anchor_models.clone(), track.anchor_visible),
            };
            let starts = self.branch_starts(track, scan, false);
            let transforms = self.model_transforms(&starts)?;
            let mut gated = Vec::new();
            let mut best: Option<(f64, usize)> = None;
            for (j, y) in meas.iter().enumerate() {
                let d2 = self.branch_mahal2(&transforms, y)?;
                if d2 <= self.gate_thresh {
                    gated.push(j);
                    in_any_gate[j] = true;
                    if !claimed[j] && best.is_none_or(|(b, _)| d2 < b) {
                        best = Some((d2, j));
                    }
                }
            }
            let synth = match best {
                Some((_, j)) => {
                    claimed[j] = true;
                    Synthetic::Update {
                        meas: meas[j],
                        noise: self.noise,
                    }
                }
                None => Synthetic::Coast,
            };
            let track = &mut self.tracks[t_idx];
            let kin = kinematic_forward(&self.bank, &self.noise, transforms, &synth)?;

            // Forward chain updates from the previous scan's beliefs.
            let model_probs = hmm::forward_step(&prev_models, &self.t_m, &kin.predictive_loglik)?;
            let miss_weight = if kin.updated { 0.0 } else { 1.0 };
            let xi = visibility_emission(self.cfg.pd_invisible, self.cfg.pd_visible, miss_weight);
            let vis = hmm::forward_step(&[1.0 - prev_visible, prev_visible], &self.t_e, &xi)?;
            let fused = fuse_models(&kin.per_model_filtered, &model_probs)?;
            let assoc = match (kin.updated, best) {
                (true, Some((_, j))) => vec![(j, 1.0)],
                _ => Vec::new(),
            };
            track.steps.push_back(TrackStep {
                scan,
                per_model_pred: kin.per_model_pred,
                pred_meas: kin.pred_meas,
                innov_cov: kin.innov_cov,
                per_model_smoothed: kin.per_model_filtered.clone(),
                per_model_filtered: kin.per_model_filtered,
                fused_filtered: fused,
                fused,
                cross: None,
                gated,
                assoc,
                miss_weight,
                synth: kin.synth,
                updated: kin.updated,
                bootstrap_emission: kin.predictive_loglik,
                model_probs,
                p_visible: vis[1],
            });
        }

        // Pair last scan's initiators with unclaimed, ungated measurements.
        let initiators = std::mem::take(&mut self.pending_initiators);
        for init in initiators.iter().filter(|i| i.scan + 1 == scan) {
            let mut best: Option<(f64, usize)> = None;
            for (j, y) in meas.iter().enumerate() {
                if claimed[j] || (in_any_gate[j] && !init.vetted) {
                    continue;
                }
                let d = (cartesian_from_polar(y) - init.cart).norm();
                if d <= self.cfg.v_max * self.cfg.sample_time
                    && best.is_none_or(|(b, _)| d < b)
                {
                    best = Some((d, j));
                }
            }
            if let Some((_, j)) = best {
                if let Some(belief) = two_point_init(
                    &init.polar,
                    &meas[j],
                    self.cfg.sample_time,
                    &self.noise,
                    &self.cfg.ut,
                    self.cfg.v_max,
                )? {
                    claimed[j] = true;
                    self.tracks.push(Track {
                        id: self.next_id,
                        status: TrackStatus::Preliminary,
                        confirmed_ever: false,
                        anchor_time: scan,
                        anchor: belief,
                        anchor_models: self.cfg.model_prior.clone(),
                        anchor_visible: self.cfg.prior_visible,
                        anchor_emitted: false,
                        steps: VecDeque::new(),
                        records: Vec::new(),
                    });
                    self.next_id += 1;
                }
            }
        }

        // Measurements nobody gated or claimed become the next initiators.
        for (j, y) in meas.iter().enumerate() {
            if !in_any_gate[j] && !claimed[j] {
                self.pending_initiators.push(Initiator {
                    scan,
                    meas_index: j,
                    polar: *y,
                    cart: cartesian_from_polar(y),
                    vetted: false,
                });
            }
        }

        // Batch refinement once the window is full, on the slide cadence.
        if scan >= self.cfg.window_len && (scan - self.cfg.window_len) % self.cfg.slide == 0 {
            self.run_window()?;
            self.manage_tracks();
            if self.cfg.output == OutputMode::Realtime {
                self.emit_realtime(scan);
            }
            self.collect_window_initiators();
            let emit = self.cfg.output == OutputMode::Smoothed;
            for _ in 0..self.cfg.slide {
                if let Some(ws) = self.window.pop_front() {
                    self.finalize_scan(ws.scan, emit);
                }
            }
        }
        Ok(())
    }

    /// Flush the window and return every confirmed track's records.
    pub fn finish(mut self) -> Result<Vec<TrackOutput>> {
        if self.cfg.output == OutputMode::Smoothed {
            while let Some(ws) = self.window.pop_front() {
                self.finalize_scan(ws.scan, true);
            }
        }
        log::debug!(
            "tracker finished: {} windows, {} refinement iterations, {} windows hit the cap, {} scans with non-converged propagation",
            self.stats.windows,
            self.stats.refinement_iterations,
            self.stats.windows_hit_iteration_cap,
            self.stats.lbp_nonconverged_scans
        );
        let mut out: Vec<TrackOutput> = self
            .graveyard
            .into_iter()
            .chain(self.tracks)
            .filter(|t| t.confirmed_ever)
            .map(|t| TrackOutput {
                id: t.id,
                records: t.records,
            })
            .collect();
        out.sort_by_key(|t| t.id);
        Ok(out)
    }

    // ------------------------------------------------------------------
    // Forward-pass helpers
    // ------------------------------------------------------------------

    /// Per-model one-step prediction and measurement transform, each model
    /// branching off its own start belief.
    fn model_transforms(&self, starts: &[GaussianBelief]) -> Result<Vec<ModelTransform>> {
        self.bank
            .iter()
            .zip(starts)
            .map(|(model, prev)| {
                let pred = crate::filters::predict(prev, model);
                let (y_mean, spread, cross) =
                    measurement_transform(&pred, &radar_h, RANGE_AZIMUTH_ANGULAR, &self.cfg.ut)?;
                Ok(ModelTransform {
                    pred,
                    y_mean,
                    spread,
                    cross,
                })
            })
            .collect()
    }

    /// Branch starts for the scan after the given per-model beliefs: model
    /// m opens from the transition-weighted, moment-matched mixture of the
    /// previous beliefs. An improbable model thereby keeps custody of most
    /// of its own history instead of restarting from the fused consensus
    /// every scan — during a maneuver onset the turn branch must be allowed
    /// to pull away from the straight majority for several scans, or its
    /// predictions never differ enough to pick up the evidence.
    ///
    /// With `flatten` set the previous model posteriors enter the mixing
    /// floored away from zero — the exploration mode of the early refinement
    /// sweeps, under which a branch the posteriors have written off still
    /// keeps a sizeable hold on its own history. Full flattening would serve
    /// onset detection even better, but a turn branch ranging freely for a
    /// whole window reaches a parallel neighbor's measurements and invites
    /// association pile-ups, so the floor stays moderate.
    fn mixed_model_starts(
        &self,
        prev_probs: &[f64],
        prev_models: &[GaussianBelief],
        flatten: bool,
    ) -> Vec<GaussianBelief> {
        let n_m = self.bank.len();
        let floored: Vec<f64>;
        let probs = if flatten {
            floored = prev_probs.iter().map(|p| p.max(0.1)).collect();
            &floored
        } else {
            prev_probs
        };
        let mut out = Vec::with_capacity(n_m);
        for m in 0..n_m {
            let mut w: Vec<f64> = (0..n_m)
                .map(|i| probs[i] * self.t_m[(i, m)])
                .collect();
            let total: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= total;
            }
            let mut mean = Vector4::zeros();
            for (wi, b) in w.iter().zip(prev_models) {
                mean += *wi * b.mean;
            }
            let mut cov = Matrix4::zeros();
            for (wi, b) in w.iter().zip(prev_models) {
                let d = b.mean - mean;
                cov += *wi * (b.cov + d * d.transpose());
            }
            out.push(GaussianBelief::new(mean, cov));
        }
        out
    }

    /// Branch starts feeding `scan` from outside the forward pass: the
    /// previous step's smoothed per-model beliefs mixed per model, or the
    /// shared anchor at the window's first step.
    fn branch_starts(&self, track: &Track, scan: usize, flatten: bool) -> Vec<GaussianBelief> {
        let prev = scan
            .checked_sub(1)
            .and_then(|s| track.step_index(s))
            .map(|p| &track.steps[p]);
        match prev {
            Some(step) if step.per_model_smoothed.len() == self.bank.len() => {
                self.mixed_model_starts(&step.model_probs, &step.per_model_smoothed, flatten)
            }
            _ => vec![
                track
                    .fused_before(scan)
                    .expect("active tracks have contiguous steps");
                self.bank.len()
            ],
        }
    }

    /// Smallest squared Mahalanobis distance from a measurement to any model
    /// branch's predicted measurement. Gating on this union keeps every
    /// model's validation region open at full size — a model's reach must
    /// not shrink with its weight, or the evidence that would revive an
    /// improbable model could never get in.
    fn branch_mahal2(&self, transforms: &[ModelTransform], y: &Vector2<f64>) -> Result<f64> {
        let mut best = f64::INFINITY;
        for mt in transforms {
            let s = mt.spread + self.noise;
            let d2 = crate::filters::meas_mahal2(y, &mt.y_mean, &s, RANGE_AZIMUTH_ANGULAR)?;
            best = best.min(d2);
        }
        Ok(best)
    }

    /// Association-weighted measurement for one step, renormalizing the
    /// marginals so the weights and miss probability sum to one.
    fn synthetic_for_step(&self, step: &TrackStep, meas: &[Vector2<f64>]) -> Result<Synthetic> {
        if step.assoc.is_empty() {
            return Ok(Synthetic::Coast);
        }
        let total: f64 = step.assoc.iter().map(|(_, w)| w).sum::<f64>() + step.miss_weight;
        if !(total > 0.0) {
            return Ok(Synthetic::Coast);
        }
        let miss = step.miss_weight / total;
        if miss >= 1.0 - 1e-9 {
            return Ok(Synthetic::Coast);
        }
        let ms: Vec<Vector2<f64>> = step.assoc.iter().map(|(j, _)| meas[*j]).collect();
        let ws: Vec<f64> = step.assoc.iter().map(|(_, w)| w / total).collect();
        synthetic_measurement(&ms, &ws, miss, &self.noise)
    }

    // ------------------------------------------------------------------
    // Batch refinement
    // ------------------------------------------------------------------

    fn run_window(&mut self) -> Result<()> {
        self.stats.windows += 1;
        if self.cfg.max_iters == 0 {
            return Ok(());
        }
        let mut window = std::mem::take(&mut self.window);
        let result = self.refine(&mut window);
        self.window = window;
        result
    }

    fn refine(&mut self, window: &mut VecDeque<WindowScan>) -> Result<()> {
        let mut converged = false;
        for iter in 0..self.cfg.max_iters {
            self.stats.refinement_iterations += 1;
            let mut change: f64 = 0.0;
            // The first sweeps stay deliberately permissive. The
            // dynamics-consistency term would lock whichever motion regime
            // the smoothed trajectory currently shows, so it joins the model
            // evidence only after the measurement side has had a chance to
            // bend the trajectory at a maneuver onset; for the same reason
            // those sweeps mix the model branches by their bare transition
            // rows instead of the current model posteriors, or a branch the
            // posteriors have written off could never range far enough from
            // the consensus to reach the onset evidence at all.
            let explore = iter < 2;

            // (a) Association marginals per scan.
            for ws in window.iter_mut() {
                change = change.max(self.associate_scan(ws, explore)?);
            }

            // (b) Visibility smoothing per track.
            for t_idx in 0..self.tracks.len() {
                change = change.max(self.smooth_visibility(t_idx)?);
            }

            // (c) Maneuver-model smoothing per track.
            for t_idx in 0..self.tracks.len() {
                change = change.max(self.smooth_models(t_idx, window, !explore)?);
            }

            // (d) Kinematic filtering and smoothing per track.
            for t_idx in 0..self.tracks.len() {
                change = change.max(self.smooth_kinematics(t_idx, window, explore)?);
            }

            if !explore && change < self.cfg.stop_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            self.stats.windows_hit_iteration_cap += 1;
        }
        if log::log_enabled!(log::Level::Trace) {
            for track in &self.tracks {
                for s in track.steps.iter().rev().take(3).rev() {
                    log::trace!(
                        "batch {}: track {} scan {} probs=[{:.3},{:.3}] p_vis={:.3} miss={:.3} gated={} pos=({:.0},{:.0})",
                        self.current_scan,
                        track.id,
                        s.scan,
                        s.model_probs[0],
                        s.model_probs[1],
                        s.p_visible,
                        s.miss_weight,
                        s.gated.len(),
                        s.fused.mean[0],
                        s.fused.mean[2]
                    );
                }
            }
        }
        Ok(())
    }

    /// Stage (a) for one scan: re-gate all tracks active there, run loopy
    /// belief propagation, and store the marginals. Returns the largest
    /// marginal change against the previous pass.
    fn associate_scan(&mut self, ws: &mut WindowScan, explore: bool) -> Result<f64> {
        let scan = ws.scan;
        let mut rows = Vec::new();
        let mut views = Vec::new();
        for (t_idx, track) in self.tracks.iter().enumerate() {
            let Some(s_idx) = track.step_index(scan) else {
                continue;
            };
            let starts = self.branch_starts(track, scan, explore);
            let transforms = self.model_transforms(&starts)?;
            let step = &track.steps[s_idx];
            let mut gated = Vec::new();
            for (j, y) in ws.meas.iter().enumerate() {
                if self.branch_mahal2(&transforms, y)? <= self.gate_thresh {
                    gated.push(j);
                }
            }
            views.push(TrackView {
                beliefs: step.per_model_smoothed.clone(),
                model_weights: step.model_probs.clone(),
                innov_covs: step.innov_cov.clone(),
                p_visible: step.p_visible,
                gated,
            });
            rows.push((t_idx, track.id));
        }

        let weights = assoc::build_weights(
            &views,
            &ws.meas,
            self.cfg.pd_visible,
            self.cfg.pd_invisible,
            self.cfg.volume,
        )?;
        let marginals = assoc::lbp(&weights, &self.cfg.lbp);
        if !marginals.converged {
            self.stats.lbp_nonconverged_scans += 1;
            log::debug!(
                "association propagation left residual {:.2e} at scan {}",
                marginals.max_residual,
                scan
            );
        }

        // Write the fresh marginals back into the tracks.
        for (row, ((t_idx, _), view)) in rows.iter().zip(&views).enumerate() {
            let track = &mut self.tracks[*t_idx];
            let s_idx = track.step_index(scan).expect("row implies step");
            let step = &mut track.steps[s_idx];
            step.gated = view.gated.clone();
            step.assoc = view
                .gated
                .iter()
                .map(|&j| (j, marginals.assoc[row + 1][j + 1]))
                .collect();
            step.miss_weight = marginals.assoc[row + 1][0];
        }

        // Change metric against the previous marginals over this scan, when
        // the row sets line up.
        let row_ids: Vec<usize> = rows.iter().map(|(_, id)| *id).collect();
        let mut delta: f64 = 0.0;
        if let Some(prev) = &ws.marginals {
            if ws.rows == row_ids {
                for (pr, cr) in prev.assoc.iter().zip(&marginals.assoc) {
                    for (p, c) in pr.iter().zip(cr) {
                        delta = delta.max((p - c).abs());
                    }
                }
            }
        }
        ws.rows = row_ids;
        ws.marginals = Some(marginals);
        Ok(delta)
    }

    /// Stage (b) for one track: forward–backward over the visibility chain.
    fn smooth_visibility(&mut self, t_idx: usize) -> Result<f64> {
        let (pd_inv, pd_vis) = (self.cfg.pd_invisible, self.cfg.pd_visible);
        let track = &mut self.tracks[t_idx];
        if track.steps.is_empty() {
            return Ok(0.0);
        }
        let emissions: Vec<Vec<f64>> = track
            .steps
            .iter()
            .map(|s| visibility_emission(pd_inv, pd_vis, s.miss_weight).to_vec())
            .collect();
        let prior = hmm::predict(
            &[1.0 - track.anchor_visible, track.anchor_visible],
            &self.t_e,
        )?;
        let smoothed = hmm::forward_backward(&prior, &self.t_e, &emissions)?;
        let mut delta: f64 = 0.0;
        for (step, post) in track.steps.iter_mut().zip(&smoothed) {
            delta = delta.max((post[1] - step.p_visible).abs());
            step.p_visible = post[1];
        }
        Ok(delta)
    }

    /// Stage (c) for one track: forward–backward over the model chain. Each
    /// model's evidence at a scan is its one-step predictive likelihood for
    /// the synthetic measurement — the predictive form is what detects
    /// maneuver onsets, since the per-model predictions differ by the full
    /// turn-rate rotation while smoothed posteriors have already absorbed
    /// the measurement and barely separate the models — plus, once
    /// `with_dynamics` is set, how well the model's dynamics explain the
    /// fused trajectory's actual scan-to-scan motion. Steps not yet
    /// smoothed fall back on the bootstrap predictive likelihoods.
    fn smooth_models(
        &mut self,
        t_idx: usize,
        window: &VecDeque<WindowScan>,
        with_dynamics: bool,
    ) -> Result<f64> {
        let track = &self.tracks[t_idx];
        if track.steps.is_empty() {
            return Ok(0.0);
        }
        let mut emissions = Vec::with_capacity(track.steps.len());
        for (s_idx, step) in track.steps.iter().enumerate() {
            let emission = match &step.cross {
                Some(cross) => {
                    let ws = window
                        .iter()
                        .find(|w| w.scan == step.scan)
                        .expect("window covers track steps");
                    let synth = match self.synthetic_for_step(step, &ws.meas)? {
                        Synthetic::Update { meas, .. } => Some(meas),
                        Synthetic::Coast => None,
                    };
                    let prev = if s_idx == 0 {
                        &track.anchor
                    } else {
                        &track.steps[s_idx - 1].fused
                    };
                    self.bank
                        .iter()
                        .enumerate()
                        .map(|(m, model)| {
                            let m_x = if with_dynamics {
                                crate::filters::model_dynamics_loglik(
                                    model,
                                    prev,
                                    &step.fused,
                                    cross,
                                )?
                            } else {
                                0.0
                            };
                            let m_y = match &synth {
                                Some(y) => gaussian2_loglik(
                                    &meas_diff(y, &step.pred_meas[m], RANGE_AZIMUTH_ANGULAR),
                                    &step.innov_cov[m],
                                )?,
                                None => 0.0,
                            };
                            Ok(m_x + m_y)
                        })
                        .collect::<Result<Vec<f64>>>()?
                }
                None => step.bootstrap_emission.clone(),
            };
            emissions.push(emission);
        }
        let prior = hmm::predict(&self.tracks[t_idx].anchor_models, &self.t_m)?;
        let smoothed = hmm::forward_backward(&prior, &self.t_m, &emissions)?;
        let track = &mut self.tracks[t_idx];
        let mut delta: f64 = 0.0;
        for (step, post) in track.steps.iter_mut().zip(&smoothed) {
            for (old, new) in step.model_probs.iter().zip(post) {
                delta = delta.max((old - new).abs());
            }
            step.model_probs = post.clone();
        }
        Ok(delta)
    }

    /// Stage (d) for one track: forward, every model branches one step off
    /// the previous scan's fused belief and filters against the synthetic
    /// measurement, the branches fusing back per scan; backward, each branch
    /// smooths against the next scan's fused smoothed belief before the
    /// same per-scan fusion. The fused lag-one cross covariances feed the
    /// model stage's dynamics scoring.
    fn smooth_kinematics(
        &mut self,
        t_idx: usize,
        window: &VecDeque<WindowScan>,
        explore: bool,
    ) -> Result<f64> {
        let n_steps = self.tracks[t_idx].steps.len();
        if n_steps == 0 {
            return Ok(0.0);
        }

        // Forward pass. Each model's chain opens from the mixed previous
        // filtered beliefs — the anchor, replicated, at the first step.
        let mut starts = vec![self.tracks[t_idx].anchor; self.bank.len()];
        for s_idx in 0..n_steps {
            let (synth, model_probs) = {
                let track = &self.tracks[t_idx];
                let step = &track.steps[s_idx];
                let ws = window
                    .iter()
                    .find(|w| w.scan == step.scan)
                    .expect("window covers track steps");
                (self.synthetic_for_step(step, &ws.meas)?, step.model_probs.clone())
            };
            let transforms = self.model_transforms(&starts)?;
            let kin = kinematic_forward(&self.bank, &self.noise, transforms, &synth)?;
            let fused = fuse_models(&kin.per_model_filtered, &model_probs)?;
            starts = self.mixed_model_starts(&model_probs, &kin.per_model_filtered, explore);
            let step = &mut self.tracks[t_idx].steps[s_idx];
            step.per_model_pred = kin.per_model_pred;
            step.pred_meas = kin.pred_meas;
            step.innov_cov = kin.innov_cov;
            step.per_model_filtered = kin.per_model_filtered;
            step.fused_filtered = fused;
            step.updated = kin.updated;
            step.synth = kin.synth;
        }

        // Backward pass: last step's smoothed states are its filtered ones.
        let mut delta: f64 = 0.0;
        {
            let track = &mut self.tracks[t_idx];
            let last = track.steps.len() - 1;
            let step = &mut track.steps[last];
            delta = delta.max(belief_shift(&step.fused, &step.fused_filtered)?);
            step.per_model_smoothed = step.per_model_filtered.clone();
            step.fused = step.fused_filtered;
        }
        for s_idx in (0..n_steps - 1).rev() {
            let track = &self.tracks[t_idx];
            let next_fused = track.steps[s_idx + 1].fused;
            let mut smoothed_models = Vec::with_capacity(self.bank.len());
            let mut crosses = Vec::with_capacity(self.bank.len());
            for (m, model) in self.bank.iter().enumerate() {
                let filtered = track.steps[s_idx].per_model_filtered[m];
                // The gain must pair this branch's filtered belief with its
                // own prediction — the stored one at s+1 descends from the
                // fused belief instead and would break the smoothed
                // covariance's positive definiteness.
                let pred = crate::filters::predict(&filtered, model);
                let (sm, cross) = rts_step(&filtered, &pred, &next_fused, model)?;
                smoothed_models.push(sm);
                crosses.push(cross);
            }
            let model_probs = track.steps[s_idx].model_probs.clone();
            let fused = fuse_models(&smoothed_models, &model_probs)?;
            let cross = fuse_crosses(&crosses, &model_probs);
            let track = &mut self.tracks[t_idx];
            track.steps[s_idx + 1].cross = Some(cross);
            let step = &mut track.steps[s_idx];
            delta = delta.max(belief_shift(&step.fused, &fused)?);
            step.per_model_smoothed = smoothed_models;
            step.fused = fused;
        }

        // Cross covariance of the first step against the fixed anchor.
        {
            let track = &self.tracks[t_idx];
            let first_fused = track.steps[0].fused;
            let mut crosses = Vec::with_capacity(self.bank.len());
            for (m, model) in self.bank.iter().enumerate() {
                let pred = track.steps[0].per_model_pred[m];
                let (_, cross) = rts_step(&track.anchor, &pred, &first_fused, model)?;
                crosses.push(cross);
            }
            let model_probs = track.steps[0].model_probs.clone();
            self.tracks[t_idx].steps[0].cross = Some(fuse_crosses(&crosses, &model_probs));
        }
        Ok(delta)
    }

    // ------------------------------------------------------------------
    // Lifecycle and output
    // ------------------------------------------------------------------

    /// Track lifecycle on recent visibility. A preliminary track lives or
    /// dies by the mean over its newest scans: above the confirm threshold
    /// it is promoted, below the delete threshold it is dropped. A confirmed
    /// track is only terminated when every one of those scans is
    /// individually below the delete threshold — a lone missed detection in
    /// a turn or crossing must not kill an established track. Deleted tracks
    /// flush their remaining window content and never come back.
    fn manage_tracks(&mut self) {
        let n = self.cfg.manage_scans;
        let mut deleted = Vec::new();
        for (t_idx, track) in self.tracks.iter_mut().enumerate() {
            if track.steps.len() < n {
                continue;
            }
            let recent = track.steps.iter().rev().take(n).map(|s| s.p_visible);
            let remove = match track.status {
                TrackStatus::Preliminary => {
                    let avg = recent.sum::<f64>() / n as f64;
                    if avg > self.cfg.confirm_threshold {
                        track.status = TrackStatus::Confirmed;
                        track.confirmed_ever = true;
                        log::debug!("track {} confirmed at scan {}", track.id, self.current_scan);
                    }
                    avg < self.cfg.delete_threshold
                }
                TrackStatus::Confirmed => {
                    recent.fold(true, |all, p| all && p < self.cfg.delete_threshold)
                }
            };
            if remove {
                deleted.push(t_idx);
            }
        }
        for t_idx in deleted.into_iter().rev() {
            let mut track = self.tracks.remove(t_idx);
            log::debug!("track {} deleted at scan {}", track.id, self.current_scan);
            if self.cfg.output == OutputMode::Smoothed {
                flush_track(&mut track);
            } else {
                track.steps.clear();
            }
            self.graveyard.push(track);
        }
    }

    /// After a window completes, unassociated measurements at the newest
    /// scan become initiators (unless they already are).
    fn collect_window_initiators(&mut self) {
        let Some(ws) = self.window.back() else {
            return;
        };
        let Some(marginals) = &ws.marginals else {
            return;
        };
        for j in 0..ws.meas.len() {
            if marginals.assoc[0][j + 1] > self.cfg.init_clutter_threshold
                && !self
                    .pending_initiators
                    .iter()
                    .any(|i| i.scan == ws.scan && i.meas_index == j)
            {
                self.pending_initiators.push(Initiator {
                    scan: ws.scan,
                    meas_index: j,
                    polar: ws.meas[j],
                    cart: cartesian_from_polar(&ws.meas[j]),
                    vetted: true,
                });
            }
        }
    }

    /// Retire one scan from the window: emit records (when asked to) and
    /// advance each track's anchor past it.
    fn finalize_scan(&mut self, scan: usize, emit: bool) {
        for track in &mut self.tracks {
            if track.anchor_time == scan && !track.anchor_emitted {
                if emit {
                    track.records.push(anchor_record(track, scan));
                }
                track.anchor_emitted = true;
            } else if track.step_index(scan) == Some(0) {
                let step = track.steps.pop_front().expect("front step exists");
                if emit && step.p_visible >= 0.5 {
                    track.records.push(step_record(&step));
                }
                track.anchor_time = scan;
                track.anchor = step.fused;
                track.anchor_models = step.model_probs;
                track.anchor_visible = step.p_visible;
            }
        }
    }

    /// Real-time output: on the first completed window, emit everything the
    /// window holds; afterwards emit only the newest scan.
    fn emit_realtime(&mut self, newest: usize) {
        let scans: Vec<usize> = if newest == self.cfg.window_len {
            self.window.iter().map(|w| w.scan).collect()
        } else {
            vec![newest]
        };
        for track in &mut self.tracks {
            for &scan in &scans {
                if track.anchor_time == scan && !track.anchor_emitted {
                    track.records.push(anchor_record(track, scan));
                    track.anchor_emitted = true;
                } else if let Some(s_idx) = track.step_index(scan) {
                    let step = &track.steps[s_idx];
                    if step.p_visible >= 0.5 {
                        track.records.push(step_record(step));
                    }
                }
            }
        }
    }
}

/// Emit every remaining step of a track being deleted.
fn flush_track(track: &mut Track) {
    if track.anchor_time > 0 && !track.anchor_emitted {
        let rec = anchor_record(track, track.anchor_time);
        track.records.push(rec);
        track.anchor_emitted = true;
    }
    while let Some(step) = track.steps.pop_front() {
        if step.p_visible >= 0.5 {
            track.records.push(step_record(&step));
        }
    }
}

fn anchor_record(track: &Track, scan: usize) -> OutputRecord {
    OutputRecord {
        scan,
        mean: track.anchor.mean,
        cov: track.anchor.cov,
        model_probs: track.anchor_models.clone(),
        p_visible: track.anchor_visible,
        assoc: None,
    }
}

fn step_record(step: &TrackStep) -> OutputRecord {
    OutputRecord {
        scan: step.scan,
        mean: step.fused.mean,
        cov: step.fused.cov,
        model_probs: step.model_probs.clone(),
        p_visible: step.p_visible,
        assoc: Some((step.assoc.clone(), step.miss_weight)),
    }
}

/// Log-emission of the visibility chain given the missed-detection weight:
/// each state explains the detection outcome through its detection
/// probability.
fn visibility_emission(pd_invisible: f64, pd_visible: f64, miss_weight: f64) -> [f64; 2] {
    let pd = [pd_invisible, pd_visible];
    let mut xi = [0.0; 2];
    for e in 0..2 {
        xi[e] = (1.0 - miss_weight) * pd[e].ln() + miss_weight * (1.0 - pd[e]).ln();
    }
    xi
}

/// Model-weighted combination of the per-branch lag-one cross covariances.
fn fuse_crosses(crosses: &[Matrix4<f64>], weights: &[f64]) -> Matrix4<f64> {
    let total: f64 = weights.iter().sum();
    let mut out = Matrix4::zeros();
    for (w, c) in weights.iter().zip(crosses) {
        out += *w / total * c;
    }
    out
}

/// Largest-change measure between two Gaussian beliefs: the mean shift in
/// the new belief's Mahalanobis metric.
fn belief_shift(old: &GaussianBelief, new: &GaussianBelief) -> Result<f64> {
    let d = new.mean - old.mean;
    let p_inv = spd_inverse(&new.cov)?;
    Ok((d.transpose() * p_inv * d)[(0, 0)].max(0.0).sqrt())
}

/// One forward filtering step over the whole model bank against a synthetic
/// measurement (or a coast).
fn kinematic_forward(
    bank: &[MotionModel],
    noise: &Matrix2<f64>,
    transforms: Vec<ModelTransform>,
    synth: &Synthetic,
) -> Result<Kinematics> {
    let n_m = bank.len();
    let mut out = Kinematics {
        per_model_pred: Vec::with_capacity(n_m),
        pred_meas: Vec::with_capacity(n_m),
        innov_cov: Vec::with_capacity(n_m),
        per_model_filtered: Vec::with_capacity(n_m),
        predictive_loglik: Vec::with_capacity(n_m),
        updated: false,
        synth: None,
    };
    for mt in transforms {
        match synth {
            Synthetic::Update {
                meas,
                noise: synth_noise,
            } => {
                let s = mt.spread + synth_noise;
                let s_inv = crate::filters::small_inverse(&s)?;
                let gain = mt.cross * s_inv;
                let nu = meas_diff(meas, &mt.y_mean, RANGE_AZIMUTH_ANGULAR);
                let mean = mt.pred.mean + gain * nu;
                let mut cov = mt.pred.cov - gain * s * gain.transpose();
                symmetrize(&mut cov);
                out.per_model_filtered.push(GaussianBelief::new(mean, cov));
                out.predictive_loglik.push(gaussian2_loglik(&nu, &s)?);
                out.innov_cov.push(s);
                out.updated = true;
                out.synth = Some(*meas);
            }
            Synthetic::Coast => {
                out.per_model_filtered.push(mt.pred);
                out.predictive_loglik.push(0.0);
                out.innov_cov.push(mt.spread + noise);
            }
        }
        out.pred_meas.push(mt.y_mean);
        out.per_model_pred.push(mt.pred);
    }
    Ok(out)
}

/// Run a whole scan sequence through a fresh tracker.
pub fn run(cfg: TrackerConfig, scans: &[Vec<Vector2<f64>>]) -> Result<Vec<TrackOutput>> {
    let mut tracker = Tracker::new(cfg)?;
    for scan in scans {
        tracker.step(scan)?;
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation_catches_bad_shapes() {
        let mut cfg = TrackerConfig::default();
        cfg.window_len = 1;
        assert!(Tracker::new(cfg).is_err());
        let mut cfg = TrackerConfig::default();
        cfg.slide = 0;
        assert!(Tracker::new(cfg).is_err());
        let mut cfg = TrackerConfig::default();
        cfg.model_prior = vec![1.0];
        assert!(Tracker::new(cfg).is_err());
    }

    #[test]
    fn two_detections_spawn_a_preliminary_track() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        let a = measure(&Vector4::new(11_400.0, 0.0, 10_200.0, 120.0)).unwrap();
        let b = measure(&Vector4::new(11_400.0, 0.0, 10_320.0, 120.0)).unwrap();
        tracker.step(&[a]).unwrap();
        assert_eq!(tracker.tracks.len(), 0);
        assert_eq!(tracker.pending_initiators.len(), 1);
        tracker.step(&[b]).unwrap();
        assert_eq!(tracker.tracks.len(), 1);
        assert_eq!(tracker.tracks[0].status, TrackStatus::Preliminary);
        assert_eq!(tracker.tracks[0].anchor_time, 2);
        // Velocity from the displacement: roughly 120 m/s along +y.
        let v = tracker.tracks[0].anchor.mean;
        assert!((v[3] - 120.0).abs() < 1.0, "vy was {}", v[3]);
    }

    #[test]
    fn far_apart_detections_do_not_pair() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        tracker.step(&[Vector2::new(15_000.0, 0.75)]).unwrap();
        // 2 km away one scan later: beyond any plausible speed.
        tracker.step(&[Vector2::new(17_000.0, 0.75)]).unwrap();
        assert_eq!(tracker.tracks.len(), 0);
        // The unpaired measurement became the new initiator.
        assert_eq!(tracker.pending_initiators.len(), 1);
        assert_eq!(tracker.pending_initiators[0].scan, 2);
    }

    #[test]
    fn empty_scans_are_tolerated() {
        let cfg = TrackerConfig::default();
        let scans: Vec<Vec<Vector2<f64>>> = vec![Vec::new(); 15];
        let out = run(cfg, &scans).unwrap();
        assert!(out.is_empty());
    }
}
