use proptest::prelude::*;
use rayon::prelude::*;

use ramanforge::classical::{dct, idct, sg_filter, wavelet_denoise, SgConfig, WaveletConfig};
use ramanforge::dataio::{read_batch, read_spectrum, write_batch, write_spectrum, BatchFile};
use ramanforge::evalkit::{detect_peaks, match_peaks, nnls_matrix, snri_db, snri_db_relative, strict_local_maxima, Peak};
use ramanforge::noisemodel::{calibrate, sample_noisy_spectrum, CleanSignal, DarkStats, GainCurve, NoiseMode};
use ramanforge::skin::{builtin_basis, mix};
use ramanforge::synth::{
    gen_example, pseudo_voigt, scale_composite, solve_scale, PeakParams, ScaleTargets, SynthesisConfig, TargetRanges,
};
use ramanforge::{auc_normalize, RngStream, Spectrum, SpectrumGrid};

fn grid(n: usize) -> SpectrumGrid {
    SpectrumGrid::new(600.0, 1790.0, n).unwrap()
}

fn spectrum_strategy(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Spectrum> {
    prop::collection::vec(lo..hi, n).prop_map(move |v| Spectrum::new(grid(n), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_spacing_is_uniform(start in 400f64..800.0, width in 800f64..1600.0, n in 100usize..1000) {
        let g = SpectrumGrid::new(start, start + width, n).unwrap();
        let h = g.spacing();
        for w in g.points().windows(2) {
            prop_assert!(((w[1] - w[0]) - h).abs() < 1e-12 * h);
        }
    }

    #[test]
    fn auc_normalize_idempotent_and_scale_free(s in spectrum_strategy(64, 0.1, 10.0), c in 1e-3f64..1e3) {
        let a = auc_normalize(&s).unwrap();
        let b = auc_normalize(&a).unwrap();
        let scaled = auc_normalize(&s.scale(c).unwrap()).unwrap();
        for ((x, y), z) in a.values().iter().zip(b.values()).zip(scaled.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3));
            prop_assert!((x - z).abs() <= 1e-12 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn calibrate_undoes_gain(raw in prop::collection::vec(-1e4f64..1e4, 32), gain in prop::collection::vec(0.05f64..20.0, 32)) {
        let g = grid(32);
        let truth = Spectrum::new(g, raw).unwrap();
        let measured = truth.zip_with(&Spectrum::new(g, gain.clone()).unwrap(), |a, b| a * b).unwrap();
        let back = calibrate(&measured, &GainCurve::new(g, gain).unwrap()).unwrap();
        for (x, y) in back.values().iter().zip(truth.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn noisy_samples_are_finite(
        s in prop::collection::vec(0.0f64..1e7, 48),
        d in prop::collection::vec(0.0f64..1e5, 48),
        seed in any::<u64>(),
        exact in any::<bool>(),
    ) {
        let g = grid(48);
        let clean = CleanSignal::new(Spectrum::new(g, s).unwrap(), Spectrum::zeros(g)).unwrap();
        let dark = DarkStats::from_variance(g, d, 0.5).unwrap();
        let mode = if exact { NoiseMode::Exact } else { NoiseMode::Gaussian };
        let x = sample_noisy_spectrum(&clean, &dark, &mut RngStream::new(seed, 0).rng(), mode).unwrap();
        prop_assert!(x.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn pseudo_voigt_is_symmetric(k in 20usize..300, fwhm in 10f64..200.0, mix_frac in 0f64..=1.0, amp in 0.01f64..=1.0) {
        let g = SpectrumGrid::new(600.0, 1790.0, 1191).unwrap();
        let center = g.point(k.min(1190 - k) + 300);
        let p = PeakParams::new(center, fwhm, mix_frac, amp).unwrap();
        let s = pseudo_voigt(&g, &p).unwrap();
        let c = (center - 600.0).round() as usize;
        for delta in 1..100.min(c).min(1190 - c) {
            prop_assert!((s.values()[c + delta] - s.values()[c - delta]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_scale_positive_root(
        r2f in 1e-3f64..10.0, snr in 1e-3f64..100.0, x_p in 1e-3f64..10.0,
        f_max in 1e-3f64..10.0, frac in 0f64..=1.0, y in 0f64..1e4,
    ) {
        let sc = solve_scale(r2f, snr, x_p, f_max, frac * f_max, y).unwrap();
        prop_assert!(sc.n > 0.0 && sc.m > 0.0);
    }

    #[test]
    fn composite_parts_add_up(seed in any::<u64>()) {
        let g = grid(693);
        let dark = DarkStats::from_variance(g, vec![40.0; 693], 0.1).unwrap();
        let ex = gen_example(&g, &[dark], RngStream::new(seed, 3), &TargetRanges::default(), &SynthesisConfig::default()).unwrap();
        for ((c, p), f) in ex.clean_with_baseline.values().iter().zip(ex.pure_raman.values()).zip(ex.fluorescence.values()) {
            prop_assert!((c - p - f).abs() <= 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn raman_scale_is_absorbed(c in 1e-3f64..1e3, r2f in 0.1f64..0.5, snr in 0.01f64..20.0) {
        let g = grid(693);
        let dark = DarkStats::from_variance(g, vec![25.0; 693], 0.1).unwrap();
        let raman = pseudo_voigt(&g, &PeakParams::new(1200.0, 40.0, 0.3, 1.0).unwrap()).unwrap();
        let fluor = Spectrum::from_fn(g, |x| 1.0 + (x - 600.0) / 1190.0).unwrap();
        let t = ScaleTargets { r2f, snr };
        let a = scale_composite(&raman, &fluor, t, &dark).unwrap();
        let b = scale_composite(&raman.scale(c).unwrap(), &fluor, t, &dark).unwrap();
        for (x, y) in a.pure_raman.values().iter().zip(b.pure_raman.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn sg_is_linear(
        x in prop::collection::vec(-100f64..100.0, 64),
        y in prop::collection::vec(-100f64..100.0, 64),
        a in -10f64..10.0, b in -10f64..10.0,
        m in 1usize..6, d_frac in 0f64..1.0,
    ) {
        let g = grid(64);
        let cfg = SgConfig { half_window: m, degree: ((2 * m) as f64 * d_frac) as usize };
        let sx = Spectrum::new(g, x).unwrap();
        let sy = Spectrum::new(g, y).unwrap();
        let combo = sx.zip_with(&sy, |p, q| a * p + b * q).unwrap();
        let lhs = sg_filter(&combo, &cfg).unwrap();
        let fx = sg_filter(&sx, &cfg).unwrap();
        let fy = sg_filter(&sy, &cfg).unwrap();
        for ((l, p), q) in lhs.values().iter().zip(fx.values()).zip(fy.values()) {
            prop_assert!((l - (a * p + b * q)).abs() < 1e-10);
        }
    }

    #[test]
    fn wavelet_zero_threshold_round_trip(v in prop::collection::vec(-1e3f64..1e3, 16..1100)) {
        let n = v.len();
        let s = Spectrum::new(grid(n), v).unwrap();
        let levels = (usize::BITS - 1 - n.next_power_of_two().leading_zeros()).min(4) as usize;
        let cfg = WaveletConfig { levels: levels.max(1), threshold_scale: 0.0, ..WaveletConfig::default() };
        let r = wavelet_denoise(&s, &cfg).unwrap();
        for (a, b) in r.values().iter().zip(s.values()) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn dct_preserves_energy(x in prop::collection::vec(-1e3f64..1e3, 1..800)) {
        let c = dct(&x);
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ec: f64 = c.iter().map(|v| v * v).sum();
        prop_assert!((ex - ec).abs() <= 1e-10 * ex.max(1.0));
        let back = idct(&c);
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn snri_forms_agree(new in 1e-6f64..1e6, old in 1e-6f64..1e6) {
        prop_assert!((snri_db(new, old) - snri_db_relative(new, old)).abs() < 1e-12);
    }

    #[test]
    fn match_bookkeeping(
        t in prop::collection::vec(600f64..1790.0, 0..20),
        p in prop::collection::vec(600f64..1790.0, 0..20),
        tol in 0f64..20.0,
    ) {
        let to_peaks = |mut xs: Vec<f64>| {
            xs.sort_by(f64::total_cmp);
            xs.into_iter().enumerate().map(|(i, x)| Peak { index: i, position: x, amplitude: 1.0, prominence: 1.0 }).collect::<Vec<_>>()
        };
        let r = match_peaks(&to_peaks(t), &to_peaks(p), tol);
        prop_assert_eq!(r.n_true, r.n_match + r.n_missing);
        prop_assert_eq!(r.n_pred, r.n_match + r.n_artifact);
        prop_assert!(r.n_match <= r.n_true.min(r.n_pred));
        if r.ratios_defined {
            prop_assert!((0.0..=1.0).contains(&r.missing_ratio));
            prop_assert!(r.artifact_ratio >= 0.0);
        }
    }

    #[test]
    fn zero_prominence_gives_strict_maxima(s in spectrum_strategy(80, -5.0, 5.0)) {
        let found: Vec<usize> = detect_peaks(&s, 0.0).unwrap().iter().map(|p| p.index).collect();
        prop_assert_eq!(found, strict_local_maxima(s.values()));
    }

    #[test]
    fn nnls_objective_non_increasing(seed in any::<u64>(), rows in 5usize..40, cols in 1usize..8) {
        use rand::Rng;
        let mut rng = RngStream::new(seed, 0).rng();
        let a = nalgebra::DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let b = nalgebra::DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
        let sol = nnls_matrix(&a, &b).unwrap();
        prop_assert!(sol.weights.iter().all(|w| *w >= 0.0));
        for pair in sol.objective_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn skin_mixtures_add_and_stay_non_negative(
        w in prop::collection::vec(0f64..1.0, 7),
        v in prop::collection::vec(0f64..1.0, 7),
    ) {
        let basis = builtin_basis(&grid(693)).unwrap();
        let sum: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + b).collect();
        let lhs = mix(&basis, &w).unwrap().add(&mix(&basis, &v).unwrap()).unwrap();
        let rhs = mix(&basis, &sum).unwrap();
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(*b >= 0.0);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(cols in prop::collection::vec(prop::collection::vec(-1e300f64..1e300, 17), 1..5)) {
        let dir = tempfile::tempdir().unwrap();
        let g = grid(17);
        let spectra: Vec<Spectrum> = cols.into_iter().map(|c| Spectrum::new(g, c).unwrap()).collect();
        let path = dir.path().join("batch.csv");
        write_batch(&path, &BatchFile::from_spectra(&spectra).unwrap()).unwrap();
        let back = read_batch(&path).unwrap().spectra().unwrap();
        prop_assert_eq!(&back, &spectra);
        let single = dir.path().join("one.csv");
        write_spectrum(&single, &spectra[0]).unwrap();
        prop_assert_eq!(read_spectrum(&single).unwrap(), spectra[0].clone());
    }
}

#[test]
fn parallel_generation_matches_sequential() {
    let g = grid(693);
    let dark = DarkStats::from_variance(g, vec![30.0; 693], 0.2).unwrap();
    let stream = RngStream::new(99, 0);
    let ranges = TargetRanges::default();
    let cfg = SynthesisConfig::default();
    let gen = |i: u64| gen_example(&g, std::slice::from_ref(&dark), stream.child(i), &ranges, &cfg).unwrap();
    let seq: Vec<_> = (0..32).map(gen).collect();
    let par: Vec<_> = (0..32u64).into_par_iter().map(gen).collect();
    assert_eq!(seq, par);
}
