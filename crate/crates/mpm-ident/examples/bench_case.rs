//! Run one self-recovery benchmark case end to end: simulate ground truth,
//! perturb the prior, identify, judge against the bounds.
//!
//! ```bash
//! cargo run --release --example bench_case [case_name]
//! ```

use std::path::Path;

use mpm_ident::cli::{run_case, BenchSuite};

fn main() -> mpm_ident::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "elastic_block_drop".to_string());
    let suite_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/bench_suite.json");
    let suite = BenchSuite::load(&suite_path)?;
    let case = suite
        .cases
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no case named {name}"));

    println!("running {} ({} iterations) ...", case.name, case.iters);
    let result = run_case(case, suite_path.parent().unwrap(), 0)?;
    println!(
        "{}: {} in {:.1}s, best loss {:.3e}",
        result.name,
        if result.pass { "PASS" } else { "FAIL" },
        result.wall_seconds,
        result.best_loss
    );
    for (param, outcome) in &result.params {
        println!(
            "  {param:<10} truth {: >12.5e}  estimate {: >12.5e}  |Δ| {:.3e} (≤ {:.3e}) {}",
            outcome.truth,
            outcome.estimate,
            outcome.delta,
            outcome.allowed,
            if outcome.pass { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
