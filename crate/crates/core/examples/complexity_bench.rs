//! Per-pixel cost of the beamformers against the element count, with the
//! instrumented coupling counts and a log-log slope per kernel.

use dsdmas::bench::{bench, BenchConfig};

fn main() -> dsdmas::Result<()> {
    let report = bench(&BenchConfig::default())?;
    print!("{}", report.render());
    println!("coupling counts match closed forms: {}", report.counts_exact());
    Ok(())
}
