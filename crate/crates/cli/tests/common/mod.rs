//! Seeded random scenarios and small helpers shared by the CLI test targets.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use htax_core::sim::{load_scenario, Scenario};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const FIXTURES: &[&str] = &[
    "empty",
    "invalid_no_winner",
    "rejections",
    "resale",
    "single_buyer",
];

pub fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"))
}

pub fn htax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htax"))
        .args(args)
        .output()
        .expect("spawn htax")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random piecewise-constant price path: `(t, rate)` with strictly
/// increasing `t`, starting at `start`.
pub fn random_path(
    rng: &mut ChaCha8Rng,
    start: u64,
    span: u64,
    max_rate: u64,
    max_points: usize,
) -> Vec<(u64, u64)> {
    let n = rng.gen_range(1..=max_points);
    let mut times: Vec<u64> = (0..n - 1)
        .map(|_| start + rng.gen_range(1..span.max(2)))
        .collect();
    times.push(start);
    times.sort_unstable();
    times.dedup();
    times
        .into_iter()
        .map(|t| (t, rng.gen_range(0..max_rate)))
        .collect()
}

/// Builds a random scenario document and loads it through the normal parser.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = rng(seed);
    let initial = 1000 + rng.gen_range(0..500u64);
    let period = rng.gen_range(20..=200u64);
    let granularity = rng.gen_range(1..=20u64);
    let reporting_interval = rng.gen_range(1..period);
    let market_fee_bps = rng.gen_range(0..=500u32);
    let protocol_fee_bps = rng.gen_range(0..=500u32);
    let tax_bps = rng.gen_range(0..=10_000u32);
    let frames = 6u64;
    let horizon = initial + frames * period;

    // Rates concentrate on a handful of bins so that winners and losers both
    // show up; at most 100 bins are ever touched.
    let hot_bins: Vec<u64> = (0..3).map(|_| rng.gen_range(0..100u64)).collect();
    let path: Vec<(u64, u64)> = random_path(&mut rng, initial, frames * period, 1, 20)
        .into_iter()
        .map(|(t, _)| {
            let bin = match rng.gen_range(0..10) {
                0..=6 => hot_bins[0],
                7..=8 => *hot_bins.choose(&mut rng).unwrap(),
                _ => rng.gen_range(0..100),
            };
            (t, bin * granularity + rng.gen_range(0..granularity))
        })
        .collect();

    let actors = ["A", "B", "C", "D"];
    let n_actors = rng.gen_range(2..=4);
    let n_actions = rng.gen_range(5..=60);
    let mut times: Vec<(u64, bool)> = (0..n_actions)
        .map(|_| (rng.gen_range(initial..=horizon), false))
        .collect();
    // Most frames also get a keeper report in each reporting window.
    for n in 1..frames {
        let close = initial + n * period;
        let split = close + period - reporting_interval;
        if rng.gen_bool(0.7) {
            times.push((rng.gen_range(close..=split), true));
            times.push((rng.gen_range(split + 1..=close + period), true));
        }
    }
    times.sort_unstable();

    let mut actions = Vec::new();
    for (t, keeper) in times {
        let actor = actors[rng.gen_range(0..n_actors)];
        let current = (t - initial) / period;
        let roll = if keeper { 50 } else { rng.gen_range(0..100) };
        let a = match roll {
            0..=14 => {
                json!({"t": t, "actor": actor, "action": "deposit", "amount": rng.gen_range(0..5000u64)})
            }
            15..=49 => {
                let bin = match rng.gen_range(0..10) {
                    0..=4 => hot_bins[0],
                    5..=7 => *hot_bins.choose(&mut rng).unwrap(),
                    _ => rng.gen_range(0..100),
                };
                json!({
                    "t": t, "actor": actor, "action": "buy",
                    "frame": current + rng.gen_range(0..=3),
                    "bin": bin,
                    "price": rng.gen_range(0..3000u64),
                })
            }
            50..=69 => json!({"t": t, "actor": actor, "action": "report"}),
            70..=79 => {
                json!({"t": t, "actor": actor, "action": "resolve", "frame": current.saturating_sub(rng.gen_range(0..3))})
            }
            80..=94 => {
                json!({"t": t, "actor": actor, "action": "settle", "frame": current.saturating_sub(rng.gen_range(0..3))})
            }
            _ => json!({"t": t, "actor": actor, "action": "withdraw"}),
        };
        actions.push(a);
    }

    let doc: Value = json!({
        "market": {
            "initial_timestamp": initial,
            "period": period,
            "granularity": granularity,
            "tax_bps": tax_bps,
            "market_fee_bps": market_fee_bps,
            "protocol_fee_bps": protocol_fee_bps,
            "reporting_interval": reporting_interval,
        },
        "price_path": path.iter().map(|&(t, rate)| json!({"t": t, "rate": rate})).collect::<Vec<_>>(),
        "actions": actions,
    });
    load_scenario(&doc.to_string()).unwrap_or_else(|e| panic!("seed {seed}: {e}"))
}
