//! Scratch: print truth positions and measurements around the first turn.
use mptrack::sim::{simulate_scans, simulate_truth, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use mptrack::models::cartesian_from_polar;

fn main() {
    let scenario = ScenarioConfig::default();
    let truth = simulate_truth(&scenario).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let scans = simulate_scans(&scenario, &truth, &mut rng).unwrap();
    for k in 10..=20usize {
        print!("k={k:2} truth:");
        for (i, t) in truth.iter().enumerate() {
            if let Some(x) = t.state_at(k) {
                print!(" T{i}=({:.0},{:.0};v{:.0},{:.0})", x[0], x[2], x[1], x[3]);
            }
        }
        print!("\n      meas:");
        for (j, m) in scans[k - 1].meas.iter().enumerate() {
            let c = cartesian_from_polar(m);
            let o = scans[k - 1].origin[j];
            print!(" {}=({:.0},{:.0})", o.map(|i| format!("T{i}")).unwrap_or("C".into()), c[0], c[1]);
        }
        println!();
    }
}
