//! Point-grid phantom at 50 dB input SNR: lateral FWHM, region SNR and
//! first-null sidelobe level of every on-axis target for all three
//! beamformers.
//!
//! ```text
//! cargo run --release --example point_grid [OUT_DIR]
//! ```
//!
//! With `OUT_DIR` the full artifact set (RF, graymaps, dB tables, profiles,
//! metrics.json, manifest.json) is written there as well.

use dsdmas::beamform::Beamformer;
use dsdmas::scenario::{run_config, shipped};

fn main() -> dsdmas::Result<()> {
    let cfg = shipped("point_grid_50db")?;
    let run = match std::env::args().nth(1) {
        Some(dir) => run_config(&cfg, dir.as_ref())?,
        None => cfg.resolve()?.run()?,
    };

    println!("{:>6}  {:>23}  {:>20}  {:>23}", "depth", "FWHM mm (DAS/DMAS/DS)", "SNR dB", "sidelobe dB");
    let rows: Vec<_> = Beamformer::ALL.iter().map(|&b| &run.metrics(b).unwrap().targets).collect();
    for i in 0..rows[0].len() {
        let cell = |f: &dyn Fn(&dsdmas::metrics::TargetMetrics) -> Option<f64>, p: usize| {
            rows.iter()
                .map(|t| f(&t[i]).map_or("-".into(), |v| format!("{v:.p$}")))
                .collect::<Vec<String>>()
                .join("/")
        };
        println!(
            "{:>4.0}mm  {:>23}  {:>20}  {:>23}",
            rows[0][i].depth_mm,
            cell(&|t| t.fwhm_mm, 3),
            cell(&|t| t.snr_db, 1),
            cell(&|t| t.sidelobe_db, 1)
        );
    }
    Ok(())
}
