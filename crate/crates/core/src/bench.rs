//! Complexity benchmark for the per-pixel beamformers.
//!
//! For each element count a random RF frame is drawn and every pixel's
//! delayed samples are gathered once, outside the timed region. Only the
//! beamformer kernels are timed, serially, and the median over repetitions is
//! kept. Operation counts come from instrumented runs of the same kernels.

use std::hint::black_box;
use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beamform::{
    compute_delay, count_ops, sample_at, table_operation_count, BeamformMethod, Beamformer, EvalMode, OpCounts,
    Scratch,
};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, ImagingGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub elements: Vec<usize>,
    /// Lateral x axial pixel count of the benchmark grid.
    pub grid: (usize, usize),
    pub repetitions: usize,
    pub methods: Vec<BeamformMethod>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let methods = Beamformer::ALL
            .iter()
            .flat_map(|&b| [BeamformMethod::naive(b), BeamformMethod::fast(b)])
            .collect();
        Self {
            elements: vec![16, 32, 64, 128],
            grid: (32, 32),
            repetitions: 7,
            methods,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: BeamformMethod,
    pub elements: usize,
    /// Operations of one pixel evaluation, as counted by the kernel.
    pub counts: OpCounts,
    /// `M(M-1)/2` for naive DMAS, `(M-1)(M-2)/2` for naive DS-DMAS, 0 for
    /// the factored forms and DAS.
    pub expected_couplings: u64,
    /// The reference table's operation count for this beamformer.
    pub table_operations: u64,
    /// Median wall time per pixel.
    pub seconds_per_pixel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub method: BeamformMethod,
    /// Least-squares slope of `ln(time)` against `ln(M)`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub rows: Vec<BenchRow>,
    pub slopes: Vec<SlopeFit>,
}

impl BenchReport {
    pub fn slope(&self, method: BeamformMethod) -> Option<f64> {
        self.slopes.iter().find(|s| s.method == method).map(|s| s.slope)
    }

    /// True when every counted coupling total matches its closed form.
    pub fn counts_exact(&self) -> bool {
        self.rows.iter().all(|r| r.counts.couplings == r.expected_couplings)
    }

    /// Plain-text table for terminals.
    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:<6} {:>5} {:>10} {:>10} {:>12} {:>10} {:>12}",
            "method", "mode", "M", "couplings", "expected", "term_prods", "table_ops", "ns/pixel"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<8} {:<6} {:>5} {:>10} {:>10} {:>12} {:>10} {:>12.1}",
                r.method.beamformer.name(),
                r.method.mode.name(),
                r.elements,
                r.counts.couplings,
                r.expected_couplings,
                r.counts.term_products,
                r.table_operations,
                r.seconds_per_pixel * 1e9
            );
        }
        let _ = writeln!(s, "table formulas: DAS M; DMAS M(M-1)/2 + 2(M-1); DS-DMAS M(M-1) + 3(M-1)");
        for f in &self.slopes {
            let _ = writeln!(
                s,
                "log-log slope {:<6} {:<5} {:.3}",
                f.method.beamformer.name(),
                f.method.mode.name(),
                f.slope
            );
        }
        s
    }
}

/// Pairwise products an explicit double loop performs per pixel.
pub fn expected_couplings(method: BeamformMethod, m: usize) -> u64 {
    let m = m as u64;
    match (method.beamformer, method.mode) {
        (Beamformer::Dmas, EvalMode::Naive) => m * (m - 1) / 2,
        (Beamformer::DsDmas, EvalMode::Naive) => (m - 1) * (m - 2) / 2,
        _ => 0,
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("slope fit", "need at least two paired points"));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("slope fit", "values must be positive"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit", "x values are all equal"));
    }
    Ok(sxy / sxx)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Delayed-sample vectors for every pixel of a small grid, taken from a
/// random frame. Row-major `(pixels, m)`.
fn gather(m: usize, grid: (usize, usize), seed: u64) -> Result<Array2<f64>> {
    const MM: f64 = 1e-3;
    let (fs, c) = (40e6, 1540.0);
    let geometry = ArrayGeometry::new(m, 0.3 * MM)?;
    let img = ImagingGrid::new(
        (-3.0 * MM, -3.0 * MM + (grid.0.max(2) - 1) as f64 * 0.1 * MM),
        (20.0 * MM, 20.0 * MM + (grid.1.max(2) - 1) as f64 * 0.1 * MM),
        0.1 * MM,
        0.1 * MM,
    )?;
    let n = 2048;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let frame: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let positions = geometry.element_positions();
    let pixels: Vec<(f64, f64)> = img.pixels().take(grid.0 * grid.1).collect();
    let mut out = Array2::zeros((pixels.len(), m));
    for (p, &px) in pixels.iter().enumerate() {
        for (i, &xe) in positions.iter().enumerate() {
            out[[p, i]] = sample_at(&frame[i], compute_delay(px, xe, c, fs, 0.0));
        }
    }
    Ok(out)
}

const MIN_REPETITION: f64 = 2e-3;

/// Runs the benchmark. Timing is serial so the slopes reflect work per
/// pixel, not scheduling.
pub fn bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.elements.iter().any(|&m| m < 3) {
        return Err(Error::invalid("bench", "element counts must be at least 3"));
    }
    if config.repetitions == 0 || config.grid.0 == 0 || config.grid.1 == 0 {
        return Err(Error::invalid("bench", "grid and repetitions must be non-zero"));
    }
    let mut rows = Vec::new();
    for &m in &config.elements {
        let delayed = gather(m, config.grid, config.seed ^ m as u64)?;
        let n_pix = delayed.nrows();
        let flat = delayed.as_slice().expect("standard layout");
        let mut scratch = Scratch::with_capacity(m);
        for &method in &config.methods {
            let (_, counts) = count_ops(delayed.row(0).as_slice().expect("contiguous"), method)?;
            let run = |scratch: &mut Scratch| {
                let mut acc = 0.0;
                for v in flat.chunks_exact(m) {
                    acc += scratch.eval(black_box(v), method, &mut ());
                }
                black_box(acc)
            };
            // warm-up pass also sizes each repetition to at least MIN_REPETITION
            let t = Instant::now();
            run(&mut scratch);
            let passes = (MIN_REPETITION / t.elapsed().as_secs_f64().max(1e-9)).ceil().max(1.0) as usize;
            let times: Vec<f64> = (0..config.repetitions)
                .map(|_| {
                    let t = Instant::now();
                    for _ in 0..passes {
                        run(&mut scratch);
                    }
                    t.elapsed().as_secs_f64() / (passes * n_pix) as f64
                })
                .collect();
            rows.push(BenchRow {
                method,
                elements: m,
                counts,
                expected_couplings: expected_couplings(method, m),
                table_operations: table_operation_count(method.beamformer, m as u64),
                seconds_per_pixel: median(times),
            });
        }
    }
    let slopes = config
        .methods
        .iter()
        .map(|&method| {
            let (x, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| (r.elements as f64, r.seconds_per_pixel))
                .unzip();
            Ok(SlopeFit {
                method,
                slope: if x.len() >= 2 { loglog_slope(&x, &y)? } else { f64::NAN },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport {
        config: config.clone(),
        rows,
        slopes,
    })
}
