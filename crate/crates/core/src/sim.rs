//! Scenario construction and scan simulation: maneuvering truth
//! trajectories, detection thinning, measurement noise, and uniform clutter
//! over the surveillance region.
//!
//! Truth is generated deterministically from the motion schedule (no process
//! noise); all randomness sits in the scan generator and is driven by the
//! caller's seeded generator, so a run is reproducible from its seed.

use nalgebra::{Vector2, Vector4};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::models::{
    axis_process_noise, ct_model, cv_model, measure, wrap_angle, KinematicState, MotionModel,
    Region,
};
use crate::Result;

/// Index into the scenario's motion-model bank.
pub const MODEL_CV: usize = 0;
pub const MODEL_CT: usize = 1;

/// One target's birth/death times, initial state, and motion-model schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSpec {
    pub initial: KinematicState,
    /// First scan (1-based) at which the target exists.
    pub birth: usize,
    /// Last scan (inclusive) at which the target exists.
    pub death: usize,
    /// `(from_scan, model_index)` segments, first entry at `birth`.
    pub schedule: Vec<(usize, usize)>,
}

/// Full scenario description: region, sensor, clutter, and targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Scan period in seconds.
    pub sample_time: f64,
    pub n_scans: usize,
    pub region: Region,
    pub sigma_range: f64,
    pub sigma_azimuth: f64,
    /// Detection probability of a live target.
    pub pd: f64,
    /// Clutter intensity per unit measurement volume; the expected clutter
    /// count per scan is `lambda * region.volume()`.
    pub lambda: f64,
    /// Turn rate of the coordinated-turn model (rad/s).
    pub omega: f64,
    /// Constant-velocity process noise intensities (position, velocity).
    pub q_pos: f64,
    pub q_vel: f64,
    /// The turn model's process noise as a multiple of the CV noise.
    pub q_ct_scale: f64,
    pub targets: Vec<TargetSpec>,
}

impl ScenarioConfig {
    /// The two-model bank `[constant velocity, coordinated turn]` implied by
    /// the scenario parameters.
    pub fn model_bank(&self) -> Result<Vec<MotionModel>> {
        let q = axis_process_noise(self.q_pos, self.q_vel);
        Ok(vec![
            cv_model(self.sample_time, q)?,
            ct_model(self.sample_time, self.omega, q * self.q_ct_scale)?,
        ])
    }

    pub fn measurement_noise(&self) -> nalgebra::Matrix2<f64> {
        crate::models::measurement_noise(self.sigma_range, self.sigma_azimuth)
    }
}

/// Two groups of parallel targets on crossing courses: the first group flies
/// +y and turns right through the second group's lanes, the second flies −x
/// and turns afterwards. `spacing` separates targets within a group;
/// `n_targets` splits as evenly as possible between the groups. The default
/// four-target, 100 m spacing instance puts the crossings near scans 15–16.
pub fn crossing_scenario(n_targets: usize, spacing: f64) -> ScenarioConfig {
    let n_first = n_targets.div_ceil(2);
    let mut targets = Vec::with_capacity(n_targets);
    for i in 0..n_first {
        targets.push(TargetSpec {
            initial: KinematicState::new(11_400.0 - spacing * i as f64, 0.0, 10_200.0, 120.0),
            birth: 1,
            death: 30,
            schedule: vec![(1, MODEL_CV), (11, MODEL_CT), (21, MODEL_CV)],
        });
    }
    for i in 0..n_targets - n_first {
        targets.push(TargetSpec {
            initial: KinematicState::new(11_750.0, -120.0, 11_840.0 + spacing * i as f64, 0.0),
            birth: 11,
            death: 40,
            schedule: vec![(11, MODEL_CV), (21, MODEL_CT), (31, MODEL_CV)],
        });
    }
    ScenarioConfig {
        sample_time: 1.0,
        n_scans: 40,
        region: Region {
            range_min: 13_000.0,
            range_max: 19_000.0,
            azimuth_min: 0.7,
            azimuth_max: 1.0,
        },
        sigma_range: 20.0,
        sigma_azimuth: 1e-3,
        pd: 0.95,
        lambda: 1e-4,
        omega: 0.087,
        q_pos: 0.01,
        q_vel: 0.005,
        q_ct_scale: 10.0,
        targets,
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        crossing_scenario(4, 100.0)
    }
}

/// A target's realized trajectory and active model per scan of its life.
#[derive(Debug, Clone)]
pub struct TargetTruth {
    pub birth: usize,
    pub death: usize,
    /// One state per scan in `birth..=death`.
    pub states: Vec<Vector4<f64>>,
    /// Model-bank index active on the transition *into* each scan (the entry
    /// at the birth scan reports the schedule's first segment).
    pub models: Vec<usize>,
}

impl TargetTruth {
    /// State at a 1-based scan index, if the target is alive there.
    pub fn state_at(&self, scan: usize) -> Option<&Vector4<f64>> {
        if scan < self.birth || scan > self.death {
            return None;
        }
        Some(&self.states[scan - self.birth])
    }

    pub fn model_at(&self, scan: usize) -> Option<usize> {
        if scan < self.birth || scan > self.death {
            return None;
        }
        Some(self.models[scan - self.birth])
    }

    pub fn lifetime(&self) -> usize {
        self.death - self.birth + 1
    }
}

/// Propagate every target through its schedule. Deterministic: the maneuvers
/// are encoded entirely by the model sequence.
pub fn simulate_truth(cfg: &ScenarioConfig) -> Result<Vec<TargetTruth>> {
    let bank = cfg.model_bank()?;
    let mut out = Vec::with_capacity(cfg.targets.len());
    for spec in &cfg.targets {
        let mut states = Vec::with_capacity(spec.death - spec.birth + 1);
        let mut models = Vec::with_capacity(spec.death - spec.birth + 1);
        let model_at = |scan: usize| {
            spec.schedule
                .iter()
                .rev()
                .find(|(from, _)| *from <= scan)
                .map(|(_, m)| *m)
                .unwrap_or(MODEL_CV)
        };
        let mut x = spec.initial.as_vector();
        states.push(x);
        models.push(model_at(spec.birth));
        for scan in spec.birth + 1..=spec.death {
            let m = model_at(scan);
            x = bank[m].f * x;
            states.push(x);
            models.push(m);
        }
        out.push(TargetTruth {
            birth: spec.birth,
            death: spec.death,
            states,
            models,
        });
    }
    Ok(out)
}

/// One scan: the measurement set and, for scoring only, the index of the
/// originating target per measurement (`None` for clutter). Trackers must
/// ignore `origin`.
#[derive(Debug, Clone)]
pub struct Scan {
    pub meas: Vec<Vector2<f64>>,
    pub origin: Vec<Option<usize>>,
}

/// Generate the scan sequence for a truth set: per-target detection thinning
/// at the scenario's `pd`, additive Gaussian measurement noise, and a
/// Poisson-distributed number of clutter returns uniform over the region.
/// Measurement order within a scan is shuffled so it carries no information.
pub fn simulate_scans<R: Rng>(
    cfg: &ScenarioConfig,
    truth: &[TargetTruth],
    rng: &mut R,
) -> Result<Vec<Scan>> {
    let range_noise = Normal::new(0.0, cfg.sigma_range).expect("sigma_range must be finite");
    let az_noise = Normal::new(0.0, cfg.sigma_azimuth).expect("sigma_azimuth must be finite");
    let clutter_count = Poisson::new((cfg.lambda * cfg.region.volume()).max(f64::MIN_POSITIVE))
        .expect("clutter rate must be finite");
    let mut scans = Vec::with_capacity(cfg.n_scans);
    for scan_idx in 1..=cfg.n_scans {
        let mut meas = Vec::new();
        let mut origin = Vec::new();
        for (ti, t) in truth.iter().enumerate() {
            let Some(x) = t.state_at(scan_idx) else {
                continue;
            };
            if rng.random::<f64>() >= cfg.pd {
                continue;
            }
            let clean = measure(x)?;
            let noisy = Vector2::new(
                clean[0] + range_noise.sample(rng),
                wrap_angle(clean[1] + az_noise.sample(rng)),
            );
            if cfg.region.contains(&noisy) {
                meas.push(noisy);
                origin.push(Some(ti));
            }
        }
        let n_clutter = clutter_count.sample(rng).round() as usize;
        for _ in 0..n_clutter {
            let r = rng.random_range(cfg.region.range_min..cfg.region.range_max);
            let az = rng.random_range(cfg.region.azimuth_min..cfg.region.azimuth_max);
            meas.push(Vector2::new(r, az));
            origin.push(None);
        }
        // Fisher–Yates over both vectors together.
        for i in (1..meas.len()).rev() {
            let j = rng.random_range(0..=i);
            meas.swap(i, j);
            origin.swap(i, j);
        }
        scans.push(Scan { meas, origin });
    }
    Ok(scans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_scenario_matches_published_layout() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.targets.len(), 4);
        assert_relative_eq!(cfg.region.volume(), 1800.0);
        assert_relative_eq!(cfg.targets[0].initial.x, 11_400.0);
        assert_relative_eq!(cfg.targets[1].initial.x, 11_300.0);
        assert_relative_eq!(cfg.targets[2].initial.y, 11_840.0);
        assert_relative_eq!(cfg.targets[3].initial.y, 11_940.0);
        assert_eq!((cfg.targets[2].birth, cfg.targets[2].death), (11, 40));
    }

    #[test]
    fn truth_stays_inside_the_surveillance_region() {
        let cfg = ScenarioConfig::default();
        let truth = simulate_truth(&cfg).unwrap();
        for t in &truth {
            for x in &t.states {
                let z = measure(x).unwrap();
                assert!(
                    cfg.region.contains(&z),
                    "truth left the region: range {} azimuth {}",
                    z[0],
                    z[1]
                );
            }
        }
    }

    #[test]
    fn crossing_pairs_pass_close_mid_scenario() {
        // The first target of each group should nearly meet around scan 15.
        let cfg = ScenarioConfig::default();
        let truth = simulate_truth(&cfg).unwrap();
        let a = truth[0].state_at(15).unwrap();
        let b = truth[2].state_at(15).unwrap();
        let gap = ((a[0] - b[0]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        assert!(gap < 120.0, "crossing gap was {gap:.1} m");
    }

    #[test]
    fn maneuver_schedule_is_honored() {
        let cfg = ScenarioConfig::default();
        let truth = simulate_truth(&cfg).unwrap();
        assert_eq!(truth[0].model_at(5), Some(MODEL_CV));
        assert_eq!(truth[0].model_at(11), Some(MODEL_CT));
        assert_eq!(truth[0].model_at(20), Some(MODEL_CT));
        assert_eq!(truth[0].model_at(21), Some(MODEL_CV));
        assert_eq!(truth[0].model_at(31), None);
        // Speed is preserved through the whole flight.
        for x in &truth[0].states {
            assert_relative_eq!((x[1] * x[1] + x[3] * x[3]).sqrt(), 120.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn scans_are_reproducible_from_the_seed() {
        let cfg = ScenarioConfig::default();
        let truth = simulate_truth(&cfg).unwrap();
        let a = simulate_scans(&cfg, &truth, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = simulate_scans(&cfg, &truth, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.len(), b.len());
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.meas, sb.meas);
            assert_eq!(sa.origin, sb.origin);
        }
        let c = simulate_scans(&cfg, &truth, &mut ChaCha8Rng::seed_from_u64(43)).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.meas != y.meas));
    }

    #[test]
    fn detection_and_clutter_rates_match_their_parameters() {
        let mut cfg = ScenarioConfig::default();
        cfg.n_scans = 4000;
        // One immortal, non-maneuvering target far from the boundary.
        cfg.targets = vec![TargetSpec {
            initial: KinematicState::new(11_400.0, 0.0, 10_200.0, 0.0),
            birth: 1,
            death: cfg.n_scans,
            schedule: vec![(1, MODEL_CV)],
        }];
        let truth = simulate_truth(&cfg).unwrap();
        let scans =
            simulate_scans(&cfg, &truth, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let detections: usize = scans
            .iter()
            .map(|s| s.origin.iter().filter(|o| o.is_some()).count())
            .sum();
        let clutter: usize = scans
            .iter()
            .map(|s| s.origin.iter().filter(|o| o.is_none()).count())
            .sum();
        let det_rate = detections as f64 / cfg.n_scans as f64;
        let clutter_rate = clutter as f64 / cfg.n_scans as f64;
        assert!((det_rate - 0.95).abs() < 0.02, "detection rate {det_rate}");
        assert!(
            (clutter_rate - 0.18).abs() < 0.03,
            "clutter rate {clutter_rate}"
        );
    }

    #[test]
    fn eight_target_variant_scales_the_groups() {
        let cfg = crossing_scenario(8, 100.0);
        assert_eq!(cfg.targets.len(), 8);
        let first_group = cfg.targets.iter().filter(|t| t.birth == 1).count();
        assert_eq!(first_group, 4);
        let truth = simulate_truth(&cfg).unwrap();
        for t in &truth {
            for x in &t.states {
                assert!(measure(x).is_ok());
            }
        }
    }
}
