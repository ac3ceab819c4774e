//! File formats: binary RF frames, graymap and tabular-text images, lateral
//! profile tables.
//!
//! RF layout (`PARF0001`), all little-endian:
//!
//! ```text
//! offset  size   field
//! 0       8      magic "PARF0001"
//! 8       4      u32 M (channels)
//! 12      4      u32 N (samples per channel)
//! 16      8      f64 sample rate (Hz)
//! 24      8      f64 start time (s)
//! 32      4*M*N  f32 samples, channel-major
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::frame::RfFrame;
use crate::geometry::ImagingGrid;
use crate::metrics::LateralProfile;

pub const RF_MAGIC: &[u8; 8] = b"PARF0001";
pub const RF_HEADER_LEN: u64 = 8 + 4 + 4 + 8 + 8;

/// Exact size in bytes of an RF file holding `m x n` samples.
pub fn rf_file_len(m: usize, n: usize) -> u64 {
    RF_HEADER_LEN + 4 * (m as u64) * (n as u64)
}

pub fn encode_rf(frame: &RfFrame) -> Result<Vec<u8>> {
    let (m, n) = (frame.num_elements(), frame.num_samples());
    let m32 = u32::try_from(m).map_err(|_| Error::invalid("rf frame", "too many channels for PARF"))?;
    let n32 = u32::try_from(n).map_err(|_| Error::invalid("rf frame", "too many samples for PARF"))?;
    let mut buf = Vec::with_capacity(rf_file_len(m, n) as usize);
    buf.extend_from_slice(RF_MAGIC);
    buf.extend_from_slice(&m32.to_le_bytes());
    buf.extend_from_slice(&n32.to_le_bytes());
    buf.extend_from_slice(&frame.sample_rate().to_le_bytes());
    buf.extend_from_slice(&frame.start_time().to_le_bytes());
    for &v in frame.data().iter() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_rf(bytes: &[u8]) -> Result<RfFrame> {
    let found = bytes.len() as u64;
    if found < 8 || &bytes[..8] != RF_MAGIC {
        return Err(Error::BadMagic);
    }
    if found < RF_HEADER_LEN {
        return Err(Error::Truncated {
            expected: RF_HEADER_LEN,
            found,
        });
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let (m, n) = (u32_at(8) as usize, u32_at(12) as usize);
    let (fs, t0) = (f64_at(16), f64_at(24));
    let expected = rf_file_len(m, n);
    if found != expected {
        return Err(Error::Truncated { expected, found });
    }
    let samples: Vec<f64> = bytes[RF_HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    let data = Array2::from_shape_vec((m, n), samples).map_err(|e| Error::invalid("rf file", e.to_string()))?;
    RfFrame::new(data, fs, t0)
}

pub fn write_rf(frame: &RfFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_rf(frame)?).map_err(|e| Error::io(path, e))
}

/// Reads and validates a PARF file. Nothing is returned unless the whole
/// file checks out.
pub fn read_rf(path: impl AsRef<Path>) -> Result<RfFrame> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_rf(&bytes)
}

/// dB to 8-bit gray: `-dr` maps to 0, `0 dB` to 255, rounding half up.
pub fn db_to_gray(db: f64, dynamic_range_db: f64) -> u8 {
    let t = ((db + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0);
    (t * 255.0 + 0.5).floor() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary portable graymap (P5), one row per depth.
    Graymap,
    /// Whitespace-separated text with a `#` header.
    Table,
}

pub fn write_image(
    db: &Array2<f64>,
    grid: &ImagingGrid,
    dynamic_range_db: f64,
    path: impl AsRef<Path>,
    format: ImageFormat,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        ImageFormat::Graymap => encode_pgm(db, dynamic_range_db),
        ImageFormat::Table => encode_table(db, grid, dynamic_range_db).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(db: &Array2<f64>, dynamic_range_db: f64) -> Vec<u8> {
    let (h, w) = db.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(db.iter().map(|&v| db_to_gray(v, dynamic_range_db)));
    out
}

fn encode_table(db: &Array2<f64>, grid: &ImagingGrid, dynamic_range_db: f64) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "# log-compressed image (dB); rows = depth, columns = lateral position");
    let _ = writeln!(
        s,
        "# lateral_mm {} {} {} {}",
        grid.lateral_min() * 1e3,
        grid.lateral_max() * 1e3,
        grid.lateral_step() * 1e3,
        grid.n_lateral()
    );
    let _ = writeln!(
        s,
        "# axial_mm {} {} {} {}",
        grid.axial_min() * 1e3,
        grid.axial_max() * 1e3,
        grid.axial_step() * 1e3,
        grid.n_axial()
    );
    let _ = writeln!(s, "# dynamic_range_db {dynamic_range_db}");
    for row in db.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Parses a table written by [`write_image`], returning the grid, the
/// dynamic range and the dB values.
pub fn read_image_table(path: impl AsRef<Path>) -> Result<(ImagingGrid, f64, Array2<f64>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |why: &str| Error::invalid("image table", format!("{}: {why}", path.display()));
    let mut lateral = None;
    let mut axial = None;
    let mut dr = None;
    let mut values = Vec::new();
    let mut rows = 0usize;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if let Some(h) = line.strip_prefix('#') {
            let parts: Vec<&str> = h.split_whitespace().collect();
            let nums = || -> Option<Vec<f64>> { parts[1..].iter().map(|p| p.parse().ok()).collect() };
            match parts.first() {
                Some(&"lateral_mm") => lateral = nums(),
                Some(&"axial_mm") => axial = nums(),
                Some(&"dynamic_range_db") => dr = nums().and_then(|v| v.first().copied()),
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| bad("non-numeric value"))?);
        }
        rows += 1;
    }
    let (lat, ax) = (lateral.ok_or_else(|| bad("missing lateral header"))?, axial.ok_or_else(|| bad("missing axial header"))?);
    if lat.len() != 4 || ax.len() != 4 {
        return Err(bad("malformed extent header"));
    }
    let grid = ImagingGrid::new(
        (lat[0] * 1e-3, lat[1] * 1e-3),
        (ax[0] * 1e-3, ax[1] * 1e-3),
        lat[2] * 1e-3,
        ax[2] * 1e-3,
    )?;
    if rows == 0 || values.len() != rows * grid.n_lateral() || rows != grid.n_axial() {
        return Err(bad("value count does not match the header"));
    }
    let db = Array2::from_shape_vec((rows, grid.n_lateral()), values).map_err(|e| bad(&e.to_string()))?;
    Ok((grid, dr.ok_or_else(|| bad("missing dynamic range"))?, db))
}

/// Writes several lateral profiles of one image as columns:
/// `lateral_mm` followed by one dB column per profile.
pub fn write_profiles(profiles: &[LateralProfile], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let Some(first) = profiles.first() else {
        return w.flush().map_err(io);
    };
    if profiles.iter().any(|p| p.lateral != first.lateral) {
        return Err(Error::invalid("profiles", "profiles must share lateral coordinates"));
    }
    write!(w, "# lateral_mm").map_err(io)?;
    for p in profiles {
        write!(w, " db_at_{:.3}mm", p.depth * 1e3).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, x) in first.lateral.iter().enumerate() {
        write!(w, "{}", x * 1e3).map_err(io)?;
        for p in profiles {
            write!(w, " {}", p.values[i]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
