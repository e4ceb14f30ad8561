//! EWMA smoothing and binary-segmentation changepoint detection on a topic
//! rate series with a known step, aligned against a marked event time.
//!
//! ```bash
//! cargo run --example changepoint_step
//! ```

use cascadescope::changepoint::{binseg, event_alignment, ewma, l2_cost, StopRule};
use rand::Rng;
use rand::SeedableRng;

fn main() {
    // Tweets per minute: flat at ~20, stepping to ~45 at minute 50 (a live
    // briefing starts five minutes earlier at minute 45).
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let series: Vec<f64> = (0..90)
        .map(|m| {
            let base = if m < 50 { 20.0 } else { 45.0 };
            base + 3.0 * (rng.gen::<f64>() - 0.5)
        })
        .collect();

    println!("l2 cost unsplit: {:.1}", l2_cost(&series));
    let smoothed = ewma(&series, 5).unwrap();

    let fixed = binseg(&smoothed, StopRule::FixedBreakpoints(3)).unwrap();
    println!(
        "fixed K=3 breakpoints: {:?} (cost {:.1})",
        fixed.breakpoints, fixed.total_cost
    );

    let penalized = binseg(&smoothed, StopRule::Penalty(200.0)).unwrap();
    println!(
        "penalty beta=200 breakpoints: {:?} (penalized cost {:.1})",
        penalized.breakpoints, penalized.penalized_cost
    );

    let t0_minute = 26_441_220; // 2020-03-24 21:00 UTC in epoch minutes
    let event_minute = t0_minute + 45;
    match event_alignment(&penalized, event_minute, t0_minute) {
        Some(offset) => println!("nearest breakpoint is {offset} minutes after the briefing"),
        None => println!("no breakpoints detected"),
    }
}
