//! Two anechoic disks in a random absorber slab; contrast ratio of each
//! disk against a same-size background disk beside it.

use dsdmas::beamform::Beamformer;
use dsdmas::metrics::RegionSpec;
use dsdmas::scenario::shipped;

fn describe(r: &RegionSpec) -> String {
    match r {
        RegionSpec::Disk { center, radius } => format!(
            "background disk r {:.1} mm at ({:.1}, {:.1}) mm",
            radius * 1e3,
            center.0 * 1e3,
            center.1 * 1e3
        ),
        RegionSpec::Rect { lateral, axial } => format!(
            "background rect {:.1}..{:.1} x {:.1}..{:.1} mm",
            lateral.0 * 1e3,
            lateral.1 * 1e3,
            axial.0 * 1e3,
            axial.1 * 1e3
        ),
    }
}

fn main() -> dsdmas::Result<()> {
    let scenario = shipped("cyst")?.resolve()?;
    println!("{} absorbers in the slab", scenario.phantom.all_absorbers().len());
    let run = scenario.run()?;
    for b in Beamformer::ALL {
        let m = run.metrics(b).expect("configured method");
        for c in &m.contrast {
            println!("{:<8} {:<10} CR {:>7.2} dB   {}", b.label(), c.label, c.cr_db, describe(&c.background));
        }
    }
    Ok(())
}
