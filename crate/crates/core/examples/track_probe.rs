//! Scratch probe: run the default scenario through the tracker on a few
//! seeds and print the metric suite.

use mptrack::metrics::{evaluate, mean_metrics, MetricsConfig};
use mptrack::sim::{simulate_scans, simulate_truth, ScenarioConfig};
use mptrack::tracker::{run, OutputMode, TrackerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    env_logger::init();
    let scenario = ScenarioConfig::default();
    let truth = simulate_truth(&scenario).unwrap();
    let args: Vec<String> = std::env::args().collect();
    let n_runs: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(5);
    let r_max: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(3);
    let mode = match args.get(3).map(String::as_str) {
        Some("realtime") => OutputMode::Realtime,
        _ => OutputMode::Smoothed,
    };
    let q_pos: Option<f64> = args.get(4).map(|s| s.parse().unwrap());
    let q_vel: Option<f64> = args.get(5).map(|s| s.parse().unwrap());
    let base_seed: u64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(0);

    let mut all = Vec::new();
    for seed in base_seed..base_seed + n_runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scans = simulate_scans(&scenario, &truth, &mut rng).unwrap();
        let mut cfg = TrackerConfig::matched_to(&scenario);
        cfg.max_iters = r_max;
        cfg.output = mode;
        if let Some(q) = q_pos {
            cfg.q_pos = q;
        }
        if let Some(q) = q_vel {
            cfg.q_vel = q;
        }
        let meas: Vec<_> = scans.iter().map(|s| s.meas.clone()).collect();
        let t0 = std::time::Instant::now();
        let tracks = run(cfg, &meas).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let eval = evaluate(&truth, &scans, &tracks, &MetricsConfig::default());
        let m = eval.summary;
        println!(
            "seed {seed}: tracks={} NVT={:.0} NFT={:.0} NTB={:.0} TPD={:.3} MAER={:.3} DAER={:.3} AEE_P={:.1} AEE_V={:.1} MOSPA={:.2}  ({:.2}s)",
            tracks.len(), m.nvt, m.nft, m.ntb, m.tpd, m.maer, m.daer, m.aee_p, m.aee_v, m.mospa, dt
        );
        if n_runs <= 2 {
            for t in &tracks {
                let first = t.records.first().map(|r| r.scan).unwrap_or(0);
                let last = t.records.last().map(|r| r.scan).unwrap_or(0);
                let have: std::collections::BTreeSet<usize> =
                    t.records.iter().map(|r| r.scan).collect();
                let holes: Vec<usize> = (first..=last).filter(|s| !have.contains(s)).collect();
                println!(
                    "  track {}: scans {}..{} ({} records, holes {:?}) assigned={:?}",
                    t.id,
                    first,
                    last,
                    t.records.len(),
                    holes,
                    eval.assignment.get(tracks.iter().position(|x| x.id == t.id).unwrap())
                );
            }
            for (g, tgt) in truth.iter().enumerate() {
                let mut covered = vec![false; tgt.lifetime()];
                for (ti, a) in eval.assignment.iter().enumerate() {
                    if *a != Some(g) {
                        continue;
                    }
                    for r in &tracks[ti].records {
                        if r.scan >= tgt.birth && r.scan <= tgt.death {
                            covered[r.scan - tgt.birth] = true;
                        }
                    }
                }
                let missing: Vec<usize> = covered
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| !**c)
                    .map(|(i, _)| tgt.birth + i)
                    .collect();
                println!(
                    "  target {g}: alive {}..{} uncovered {:?}",
                    tgt.birth, tgt.death, missing
                );
            }
        }
        all.push(m);
    }
    let m = mean_metrics(&all);
    println!(
        "mean over {n_runs}: NVT={:.2} NFT={:.2} NTB={:.2} TPD={:.3} MAER={:.3} DAER={:.3} AEE_P={:.1} AEE_V={:.1} MOSPA={:.2}",
        m.nvt, m.nft, m.ntb, m.tpd, m.maer, m.daer, m.aee_p, m.aee_v, m.mospa
    );
}
