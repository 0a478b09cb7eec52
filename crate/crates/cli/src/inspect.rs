//! `renn inspect`: human-readable snapshot summary.

use std::fs;

use anyhow::Context;

use crate::error::{data, CliError};
use crate::InspectArgs;
use renn_core::Engine;

pub fn run(args: &InspectArgs) -> Result<(), CliError> {
    let bytes = fs::read(&args.snapshot)
        .with_context(|| format!("cannot read {}", args.snapshot.display()))
        .map_err(data)?;
    let engine = Engine::restore(&bytes).map_err(data)?;
    let config = engine.config();
    let stats = engine.stats();

    println!("snapshot {}", args.snapshot.display());
    println!(
        "  config: rho_bar={} e_bar={} alpha={} max_stale={} dimension={} abs_gate={} normalize={} seed={}",
        config.rho_bar,
        config.e_bar,
        config.alpha,
        config.max_stale,
        config.dimension,
        config
            .abs_gate
            .map_or_else(|| "off".to_string(), |g| g.to_string()),
        config.normalize,
        config.seed,
    );
    println!(
        "  stream clock: {} | elements: {} | live identities: {} | next identity: {}",
        stats.frame_counter,
        stats.elements,
        stats.identities.len(),
        stats.next_identity,
    );

    if !stats.identities.is_empty() {
        println!("  elements per identity (largest first):");
        let mut by_count = stats.identities.clone();
        by_count.sort_by(|a, b| b.count.cmp(&a.count).then(a.identity.cmp(&b.identity)));
        for entry in by_count.iter().take(20) {
            println!("    id {:>6}: {}", entry.identity, entry.count);
        }
        if by_count.len() > 20 {
            println!("    ... {} more identities", by_count.len() - 20);
        }
    }

    println!("  eligibility histogram:");
    for bucket in &stats.eligibility {
        println!(
            "    [{:.2}, {:.2}{}: {}",
            bucket.lo,
            bucket.hi,
            if bucket.hi >= 1.0 { "]" } else { ")" },
            bucket.count
        );
    }

    println!("  age histogram (frames since insertion):");
    for bucket in &stats.age {
        match bucket.hi {
            Some(hi) => println!("    [{:>4}, {:>4}): {}", bucket.lo, hi, bucket.count),
            None => println!("    [{:>4},  inf): {}", bucket.lo, bucket.count),
        }
    }
    Ok(())
}
