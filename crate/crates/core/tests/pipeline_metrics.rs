use dsdmas::metrics::{
    contrast_ratio, fwhm_lateral, fwhm_of_profile, lateral_profile, sidelobe_level, snr_region, LateralProfile,
    RegionSpec,
};
use dsdmas::pipeline::{column_envelopes, form_image, hilbert_envelope, log_compress};
use dsdmas::ImagingGrid;
use ndarray::Array2;
use proptest::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

const MM: f64 = 1e-3;

fn grid(n_lat: usize, n_ax: usize) -> ImagingGrid {
    ImagingGrid::new(
        (0.0, (n_lat - 1) as f64 * 0.1 * MM),
        (10.0 * MM, 10.0 * MM + (n_ax - 1) as f64 * 0.1 * MM),
        0.1 * MM,
        0.1 * MM,
    )
    .unwrap()
}

fn raw_image(n_lat: usize, n_ax: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-1.0..1.0f64, n_lat * n_ax)
        .prop_map(move |v| Array2::from_shape_vec((n_ax, n_lat), v).unwrap())
}

/// Oscillating blob centred in a 41 x 61 image, plus a deterministic floor.
fn blob(width: f64) -> (ImagingGrid, Array2<f64>) {
    let g = grid(41, 61);
    let (cx, cz) = (2.0 * MM, 13.0 * MM);
    let raw = Array2::from_shape_fn(g.shape(), |(r, c)| {
        let (x, z) = (g.lateral_at(c), g.axial_at(r));
        let e = (-((x - cx) / width).powi(2) - ((z - cz) / (0.3 * MM)).powi(2)).exp();
        e * (2.0 * std::f64::consts::PI * (z - cz) / (0.22 * MM)).cos() + 1e-3 * ((r * 7 + c * 3) % 11) as f64
    });
    (g, raw)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn db_is_invariant_to_positive_scaling(raw in raw_image(6, 32), alpha in 1e-3..1e3f64) {
        let g = grid(6, 32);
        let a = form_image(raw.clone(), &g, 60.0).unwrap();
        let b = form_image(raw.mapv(|v| alpha * v), &g, 60.0).unwrap();
        for (x, y) in a.db.iter().zip(&b.db) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn columns_are_independent(raw in raw_image(5, 40), col in 0usize..5, bump in prop::collection::vec(-3.0..3.0f64, 40)) {
        let mut other = raw.clone();
        for (r, b) in bump.iter().enumerate() {
            other[[r, col]] += b;
        }
        let (ea, eb) = (column_envelopes(&raw).unwrap(), column_envelopes(&other).unwrap());
        for c in (0..5).filter(|&c| c != col) {
            prop_assert_eq!(ea.column(c), eb.column(c));
        }
        // db of untouched columns moves by one global constant
        let (da, db) = (log_compress(&ea, 400.0).unwrap(), log_compress(&eb, 400.0).unwrap());
        let offsets: Vec<f64> = (0..5)
            .filter(|&c| c != col)
            .flat_map(|c| (0..40).map(move |r| (r, c)))
            .filter(|&(r, c)| ea[[r, c]] > 0.0)
            .map(|(r, c)| db[[r, c]] - da[[r, c]])
            .collect();
        for o in &offsets {
            prop_assert!((o - offsets[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn lateral_flip_commutes(raw in raw_image(7, 24)) {
        let g = grid(7, 24);
        let mut flipped = raw.clone();
        flipped.invert_axis(ndarray::Axis(1));
        let a = form_image(raw, &g, 60.0).unwrap();
        let mut b = form_image(flipped, &g, 60.0).unwrap().db;
        b.invert_axis(ndarray::Axis(1));
        prop_assert_eq!(a.db, b);
    }

    #[test]
    fn analytic_signal_energy(line in prop::collection::vec(-5.0..5.0f64, 2..200)) {
        let n = line.len();
        let env = hilbert_envelope(&line).unwrap();
        let e_env: f64 = env.iter().map(|v| v * v).sum();
        let e_raw: f64 = line.iter().map(|v| v * v).sum();
        prop_assert!(e_env >= e_raw * (1.0 - 1e-6));
        // |z|^2 sums to twice the raw energy minus the DC and Nyquist bins
        let mut spec: Vec<Complex64> = line.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut spec);
        let mut unpaired = spec[0].norm_sqr();
        if n % 2 == 0 {
            unpaired += spec[n / 2].norm_sqr();
        }
        let expected = 2.0 * e_raw - unpaired / n as f64;
        prop_assert!((e_env - expected).abs() <= 1e-9 * (1.0 + expected));
    }

    #[test]
    fn metrics_are_scale_invariant(alpha in 1e-3..1e3f64, width in 0.15..0.6f64) {
        let (g, raw) = blob(width * MM);
        let a = form_image(raw.clone(), &g, 60.0).unwrap();
        let b = form_image(raw.mapv(|v| alpha * v), &g, 60.0).unwrap();
        let region = RegionSpec::centered_rect((2.0 * MM, 13.0 * MM), 2.0 * MM, 1.0 * MM);
        let bg = RegionSpec::centered_rect((0.5 * MM, 15.0 * MM), 0.8 * MM, 0.8 * MM);
        let near = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs());
        prop_assert!(near(
            snr_region(&a.envelope, &g, &region).unwrap(),
            snr_region(&b.envelope, &g, &region).unwrap()
        ));
        prop_assert!(near(
            contrast_ratio(&a.envelope, &g, &bg, &region).unwrap(),
            contrast_ratio(&b.envelope, &g, &bg, &region).unwrap()
        ));
        let w = (0.5 * MM, 3.5 * MM);
        prop_assert!(near(
            fwhm_lateral(&a.db, &g, 13.0 * MM, w).unwrap(),
            fwhm_lateral(&b.db, &g, 13.0 * MM, w).unwrap()
        ));
        let pa = lateral_profile(&a.db, &g, 13.0 * MM).unwrap();
        let pb = lateral_profile(&b.db, &g, 13.0 * MM).unwrap();
        prop_assert!(near(sidelobe_level(&pa, 0.5 * MM).unwrap(), sidelobe_level(&pb, 0.5 * MM).unwrap()));
    }

    #[test]
    fn wider_profile_has_wider_fwhm(
        base in prop::collection::vec(-40.0..-3.5f64, 41),
        lift in prop::collection::vec(0.0..10.0f64, 41),
    ) {
        let lateral: Vec<f64> = (0..41).map(|i| i as f64 * 0.1 * MM).collect();
        let mut narrow = base.clone();
        narrow[0] = -60.0;
        narrow[40] = -60.0;
        narrow[20] = 0.0;
        // same peak, larger off-peak values, still below the peak
        let wide: Vec<f64> = narrow
            .iter()
            .zip(&lift)
            .enumerate()
            .map(|(i, (v, l))| if i == 20 || i == 0 || i == 40 { *v } else { (v + l).min(-0.01) })
            .collect();
        let p = LateralProfile::new(0.0, lateral.clone(), narrow);
        let q = LateralProfile::new(0.0, lateral, wide);
        let w = (1.9 * MM, 2.1 * MM);
        prop_assert!(fwhm_of_profile(&q, w).unwrap() >= fwhm_of_profile(&p, w).unwrap() - 1e-15);
    }

    #[test]
    fn widening_the_exclusion_never_raises_the_level(
        values in prop::collection::vec(-60.0..0.0f64, 21),
        h1 in 0.05..0.9f64,
        extra in 0.0..0.9f64,
    ) {
        let lateral: Vec<f64> = (0..21).map(|i| (i as f64 - 10.0) * 0.1 * MM).collect();
        let mut v = values;
        v[10] = 0.5;
        let p = LateralProfile::new(0.0, lateral, v);
        let (a, b) = (sidelobe_level(&p, h1 * MM), sidelobe_level(&p, (h1 + extra) * MM));
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(b <= a);
        }
    }
}

#[test]
fn gaussian_spot_fwhm_matches_closed_form() {
    let sigma = 0.4 * MM;
    let (g, _) = blob(1.0);
    let env = Array2::from_shape_fn(g.shape(), |(r, c)| {
        let (x, z) = (g.lateral_at(c) - 2.0 * MM, g.axial_at(r) - 13.0 * MM);
        (-(x * x + z * z) / (2.0 * sigma * sigma)).exp()
    });
    let db = log_compress(&env, 60.0).unwrap();
    let w = fwhm_lateral(&db, &g, 13.0 * MM, (1.5 * MM, 2.5 * MM)).unwrap();
    // 20 log10(exp(-x^2 / 2 s^2)) = -3  =>  x = s * sqrt(2 * 0.15 * ln 10)
    let expected = 2.0 * sigma * (0.3 * std::f64::consts::LN_10).sqrt();
    // linear interpolation of a curved profile: within a tenth of a step
    assert!((w - expected).abs() < 0.01 * MM, "{w} vs {expected}");
}
