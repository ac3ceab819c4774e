//! Four on-axis absorbers over a weak random background.

use dsdmas::beamform::Beamformer;
use dsdmas::scenario::shipped;

fn main() -> dsdmas::Result<()> {
    let run = shipped("low_contrast")?.resolve()?.run()?;
    for b in Beamformer::ALL {
        let m = run.metrics(b).expect("configured method");
        let cells: Vec<String> = m
            .targets
            .iter()
            .map(|t| format!("{:.0}mm {}", t.depth_mm, t.snr_db.map_or("-".into(), |v| format!("{v:.1} dB"))))
            .collect();
        println!("{:<8} SNR  {}", b.label(), cells.join("  "));
    }
    Ok(())
}
