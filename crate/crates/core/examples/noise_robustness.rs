//! The point grid at decreasing input SNR: region SNR and peak over
//! sidelobe of the on-axis targets down to 40 mm.

use dsdmas::beamform::Beamformer;
use dsdmas::scenario::shipped;

fn main() -> dsdmas::Result<()> {
    for snr in [50.0, 20.0, 10.0, 0.0] {
        let mut cfg = shipped("point_grid_50db")?;
        cfg.noise.snr_db = Some(snr);
        let run = cfg.resolve()?.run()?;
        println!("input SNR {snr} dB");
        for b in Beamformer::ALL {
            let m = run.metrics(b).expect("configured method");
            let line: Vec<String> = m
                .targets
                .iter()
                .filter(|t| t.depth_mm <= 40.0)
                .map(|t| match (t.snr_db, t.sidelobe_db) {
                    (Some(s), Some(l)) => format!("{:.0}mm snr {s:.1} peak/sidelobe {:.1}", t.depth_mm, -l),
                    _ => format!("{:.0}mm n/a", t.depth_mm),
                })
                .collect();
            println!("  {:<8} {}", b.label(), line.join(" | "));
        }
    }
    Ok(())
}
