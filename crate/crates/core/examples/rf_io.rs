//! Library-level chain without the scenario runner: simulate a frame, store
//! it as PARF, read it back, beamform, detect and write a graymap.
//!
//! ```text
//! cargo run --release --example rf_io [OUT_DIR]
//! ```

use std::path::PathBuf;

use dsdmas::beamform::{beamform_image, BeamformMethod, Beamformer};
use dsdmas::io::{read_rf, write_image, write_rf, ImageFormat};
use dsdmas::pipeline::form_image;
use dsdmas::sim::{add_noise, required_duration, simulate_rf, Phantom, PointAbsorber, PulseModel};
use dsdmas::{ArrayGeometry, ImagingGrid, MediumModel};

const MM: f64 = 1e-3;

fn main() -> dsdmas::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&out).map_err(|e| dsdmas::Error::Io { path: out.clone(), source: e })?;

    let geometry = ArrayGeometry::new(64, 0.3 * MM)?;
    let medium = MediumModel::new(1540.0)?;
    let pulse = PulseModel::new(7e6, 0.77)?;
    let phantom = Phantom::from_absorbers(vec![
        PointAbsorber::new(-1.5 * MM, 18.0 * MM, 1.0),
        PointAbsorber::new(1.5 * MM, 22.0 * MM, 0.6),
    ]);
    let duration = required_duration(&phantom.all_absorbers(), &geometry, &medium, &pulse) + 2e-6;
    let clean = simulate_rf(&phantom, &geometry, &medium, &pulse, 40e6, duration)?;
    let frame = add_noise(&clean, 30.0, 1)?;

    let rf_path = out.join("example.parf");
    write_rf(&frame, &rf_path)?;
    let back = read_rf(&rf_path)?;
    println!("{} channels x {} samples -> {}", back.num_elements(), back.num_samples(), rf_path.display());

    let grid = ImagingGrid::square((-4.0 * MM, 4.0 * MM), (15.0 * MM, 25.0 * MM), 0.05 * MM)?;
    for b in Beamformer::ALL {
        let raw = beamform_image(&back, &grid, &geometry, medium.sound_speed(), BeamformMethod::fast(b))?;
        let img = form_image(raw, &grid, 60.0)?;
        let path = out.join(format!("example_{}.pgm", b.name()));
        write_image(&img.db, &grid, 60.0, &path, ImageFormat::Graymap)?;
        println!("{:<8} -> {}", b.label(), path.display());
    }
    Ok(())
}
