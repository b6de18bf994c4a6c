//! Scratch probe: LBP vs enumeration error distribution over random
//! association problems, across candidate draw distributions.

use mptrack::assoc::{enumerate_marginals, lbp, AssocWeights, LbpConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Draw {
    name: &'static str,
    lik: (f64, f64),
    vol: (f64, f64),
    det: (f64, f64),
}

fn main() {
    let _ = Draw { name: "", lik: (0.0, 0.0), vol: (0.0, 0.0), det: (0.0, 0.0) };
    let cfg = LbpConfig {
        max_iters: 400,
        tol: 1e-10,
        damping: 0.5,
    };
    for (min_sep, det_lo, det_hi) in [
        (4.5, 0.6, 0.95),
        (5.0, 0.6, 0.95),
        (5.0, 0.5, 0.95),
        (5.5, 0.6, 0.95),
        (6.0, 0.5, 0.95),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst = 0.0f64;
        let mut over = 0usize;
        let mut errs = Vec::new();
        let n_scans = 20_000;
        for _ in 0..n_scans {
            let n_t = rng.random_range(2..=4usize);
            let n_e = rng.random_range(1..=4usize);
            let side = 16.0;
            let mut preds: Vec<(f64, f64)> = Vec::with_capacity(n_t);
            while preds.len() < n_t {
                let p = (rng.random_range(0.0..side), rng.random_range(0.0..side));
                if preds
                    .iter()
                    .all(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() >= min_sep)
                {
                    preds.push(p);
                }
            }
            let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
            let meas: Vec<(f64, f64)> = (0..n_e)
                .map(|_| {
                    if rng.random::<f64>() < 0.8 {
                        let t = rng.random_range(0..n_t);
                        let (x, y) = preds[t];
                        (
                            x + rand_distr::Distribution::sample(&normal, &mut rng),
                            y + rand_distr::Distribution::sample(&normal, &mut rng),
                        )
                    } else {
                        (rng.random_range(0.0..side), rng.random_range(0.0..side))
                    }
                })
                .collect();
            let detect: Vec<f64> = (0..n_t).map(|_| rng.random_range(det_lo..det_hi)).collect();
            let lik: Vec<Vec<f64>> = preds
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
            let w = AssocWeights {
                detect: detect.iter().map(|p| p.ln()).collect(),
                miss: detect.iter().map(|p| (1.0 - p).ln()).collect(),
                lik,
                clutter: -(side * side).ln(),
            };
            let exact = enumerate_marginals(&w).unwrap();
            let prop = lbp(&w, &cfg);
            let mut err = 0.0f64;
            for i in 0..=n_t {
                for j in 0..=n_e {
                    err = err.max((prop.assoc[i][j] - exact.assoc[i][j]).abs());
                }
            }
            if err > 0.05 {
                over += 1;
            }
            worst = worst.max(err);
            errs.push(err);
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "sep={min_sep} det=({det_lo},{det_hi}) worst={:.5} p999={:.5} p99={:.5} over0.05={}/{}",
            worst,
            errs[(n_scans as f64 * 0.999) as usize],
            errs[(n_scans as f64 * 0.99) as usize],
            over,
            n_scans
        );
    }
}
