//! Python bindings for the ramanforge simulation, denoising and evaluation
//! toolkit.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ramanforge::classical::{self, ModPolyConfig, SgConfig, WaveletConfig};
use ramanforge::dataio;
use ramanforge::denoise::parse_denoiser;
use ramanforge::evalkit;
use ramanforge::noisemodel::{self, CleanSignal, DarkStats as CoreDarkStats, NoiseMode};
use ramanforge::skin;
use ramanforge::synth::{self, SynthesisConfig, TargetRanges};
use ramanforge::{Error, RngStream};

fn to_py(e: Error) -> PyErr {
    match &e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::ExternalTool(_) | Error::ShapeMismatch { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for ramanforge::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Uniform wavenumber axis.
#[pyclass(frozen, skip_from_py_object, module = "ramanforge_py")]
#[derive(Clone, Copy)]
struct Grid(ramanforge::SpectrumGrid);

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (start=600.0, end=1790.0, n=693))]
    fn new(start: f64, end: f64, n: usize) -> PyResult<Self> {
        ramanforge::SpectrumGrid::new(start, end, n).py().map(Grid)
    }

    #[getter]
    fn start(&self) -> f64 {
        self.0.start()
    }

    #[getter]
    fn end(&self) -> f64 {
        self.0.end()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn points(&self) -> Vec<f64> {
        self.0.points()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {}, {})", self.0.start(), self.0.end(), self.0.len())
    }
}

/// Intensities on a grid.
#[pyclass(frozen, from_py_object, module = "ramanforge_py")]
#[derive(Clone)]
struct Spectrum(ramanforge::Spectrum);

#[pymethods]
impl Spectrum {
    #[new]
    fn new(grid: &Grid, values: Vec<f64>) -> PyResult<Self> {
        ramanforge::Spectrum::new(grid.0, values).py().map(Spectrum)
    }

    #[getter]
    fn grid(&self) -> Grid {
        Grid(*self.0.grid())
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn argmax(&self) -> usize {
        self.0.argmax()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(n={}, max={})", self.0.len(), self.0.max())
    }
}

/// Per-wavenumber dark statistics.
#[pyclass(frozen, from_py_object, module = "ramanforge_py")]
#[derive(Clone)]
struct DarkStats(CoreDarkStats);

#[pymethods]
impl DarkStats {
    #[staticmethod]
    #[pyo3(signature = (grid, variance, integration_time=0.1))]
    fn from_variance(grid: &Grid, variance: Vec<f64>, integration_time: f64) -> PyResult<Self> {
        CoreDarkStats::from_variance(grid.0, variance, integration_time)
            .py()
            .map(DarkStats)
    }

    #[staticmethod]
    fn from_frames(frames: Vec<Spectrum>, integration_time: f64) -> PyResult<Self> {
        let frames: Vec<_> = frames.into_iter().map(|s| s.0).collect();
        noisemodel::estimate_dark_stats(&frames, integration_time)
            .py()
            .map(DarkStats)
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        dataio::read_dark_stats(path).py().map(DarkStats)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        dataio::write_dark_stats(path, &self.0).py()
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.0.mean.clone()
    }

    #[getter]
    fn variance(&self) -> Vec<f64> {
        self.0.variance.clone()
    }

    #[getter]
    fn integration_time(&self) -> f64 {
        self.0.integration_time
    }

    #[getter]
    fn n_frames(&self) -> usize {
        self.0.n_frames
    }
}

fn unwrap_all(spectra: Vec<Spectrum>) -> Vec<ramanforge::Spectrum> {
    spectra.into_iter().map(|s| s.0).collect()
}

fn wrap_all(spectra: Vec<ramanforge::Spectrum>) -> Vec<Spectrum> {
    spectra.into_iter().map(Spectrum).collect()
}

/// Solves the Raman and fluorescence multipliers `(m, n)`.
#[pyfunction]
fn solve_scale(r2f: f64, snr: f64, x_p: f64, f_max: f64, f_p: f64, y: f64) -> PyResult<(f64, f64)> {
    let s = synth::solve_scale(r2f, snr, x_p, f_max, f_p, y).py()?;
    Ok((s.m, s.n))
}

/// One noisy realization of `raman + fluorescence`.
#[pyfunction]
#[pyo3(signature = (raman, fluorescence, dark, seed, stream=0, mode="gaussian"))]
fn sample_noisy(
    raman: &Spectrum,
    fluorescence: &Spectrum,
    dark: &DarkStats,
    seed: u64,
    stream: u64,
    mode: &str,
) -> PyResult<Spectrum> {
    let mode: NoiseMode = mode.parse().py()?;
    let clean = CleanSignal::new(raman.0.clone(), fluorescence.0.clone()).py()?;
    let mut rng = RngStream::new(seed, stream).rng();
    noisemodel::sample_noisy_spectrum(&clean, &dark.0, &mut rng, mode)
        .py()
        .map(Spectrum)
}

/// Simulated examples as dicts with `noisy`, `clean`, `pure`, `fluor`
/// spectra and their targets and scale factors.
#[pyfunction]
#[pyo3(signature = (count, dark, seed, stream=0, r2f=(0.1, 0.5), snr=(0.01, 20.0)))]
fn simulate<'py>(
    py: Python<'py>,
    count: usize,
    dark: Vec<DarkStats>,
    seed: u64,
    stream: u64,
    r2f: (f64, f64),
    snr: (f64, f64),
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let dark: Vec<CoreDarkStats> = dark.into_iter().map(|d| d.0).collect();
    let grid = dark
        .first()
        .map(|d| d.grid)
        .ok_or_else(|| PyValueError::new_err("at least one dark statistics set is required"))?;
    let ranges = TargetRanges { r2f, snr };
    let examples = py
        .detach(|| {
            synth::gen_dataset(
                count,
                &grid,
                &dark,
                RngStream::new(seed, stream),
                &ranges,
                &SynthesisConfig::default(),
            )
        })
        .py()?;
    examples
        .into_iter()
        .map(|e| {
            let d = PyDict::new(py);
            d.set_item("noisy", Spectrum(e.noisy))?;
            d.set_item("clean", Spectrum(e.clean_with_baseline))?;
            d.set_item("pure", Spectrum(e.pure_raman))?;
            d.set_item("fluor", Spectrum(e.fluorescence))?;
            d.set_item("r2f", e.targets.r2f)?;
            d.set_item("snr", e.targets.snr)?;
            d.set_item("m", e.scale.m)?;
            d.set_item("n", e.scale.n)?;
            d.set_item("peak_index", e.peak_index)?;
            d.set_item("dark_id", e.dark_id)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (spectrum, m=5, d=3))]
fn sg_filter(spectrum: &Spectrum, m: usize, d: usize) -> PyResult<Spectrum> {
    classical::sg_filter(
        &spectrum.0,
        &SgConfig {
            half_window: m,
            degree: d,
        },
    )
    .py()
    .map(Spectrum)
}

#[pyfunction]
#[pyo3(signature = (spectrum, family="db4", levels=4, rule="soft", scale=1.0))]
fn wavelet_denoise(spectrum: &Spectrum, family: &str, levels: usize, rule: &str, scale: f64) -> PyResult<Spectrum> {
    let cfg = WaveletConfig {
        family: family.parse().py()?,
        levels,
        threshold_rule: rule.parse().py()?,
        threshold_scale: scale,
    };
    classical::wavelet_denoise(&spectrum.0, &cfg).py().map(Spectrum)
}

/// Returns `(baseline, corrected, order)`.
#[pyfunction]
#[pyo3(signature = (spectrum, order_min=3, order_max=6, max_iters=100, tol=1e-6))]
fn modpoly(
    spectrum: &Spectrum,
    order_min: usize,
    order_max: usize,
    max_iters: usize,
    tol: f64,
) -> PyResult<(Spectrum, Spectrum, usize)> {
    let cfg = ModPolyConfig {
        order_range: (order_min, order_max),
        max_iters,
        tol,
    };
    let r = classical::modpoly_baseline(&spectrum.0, &cfg).py()?;
    Ok((Spectrum(r.baseline), Spectrum(r.corrected), r.order))
}

/// Runs a denoiser spec such as `sg:m=5,d=3` or `wavelet+modpoly` over a batch.
#[pyfunction]
#[pyo3(signature = (spec, spectra, truth=None))]
fn denoise(py: Python<'_>, spec: &str, spectra: Vec<Spectrum>, truth: Option<Vec<Spectrum>>) -> PyResult<Vec<Spectrum>> {
    let denoiser = parse_denoiser(spec).py()?;
    let batch = unwrap_all(spectra);
    let truth = truth.map(unwrap_all);
    py.detach(|| denoiser.denoise_batch(&batch, truth.as_deref()))
        .py()
        .map(wrap_all)
}

#[pyfunction]
fn dct(x: Vec<f64>) -> Vec<f64> {
    classical::dct(&x)
}

#[pyfunction]
fn idct(c: Vec<f64>) -> Vec<f64> {
    classical::idct(&c)
}

/// Peaks as `(index, position, amplitude, prominence)` tuples.
#[pyfunction]
fn detect_peaks(spectrum: &Spectrum, prominence: f64) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let peaks = evalkit::detect_peaks(&spectrum.0, prominence).py()?;
    Ok(peaks
        .into_iter()
        .map(|p| (p.index, p.position, p.amplitude, p.prominence))
        .collect())
}

/// Peak metrics per prominence level, as dicts.
#[pyfunction]
#[pyo3(signature = (truths, preds, levels=None, tol_wn=evalkit::MATCH_TOLERANCE_WN))]
fn peak_sweep<'py>(
    py: Python<'py>,
    truths: Vec<Spectrum>,
    preds: Vec<Spectrum>,
    levels: Option<Vec<f64>>,
    tol_wn: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let levels = levels.unwrap_or_else(|| evalkit::DEFAULT_PROMINENCE_LEVELS.to_vec());
    let sweep = evalkit::peak_sweep(&unwrap_all(truths), &unwrap_all(preds), &levels, tol_wn).py()?;
    sweep
        .levels
        .iter()
        .map(|l| {
            let d = PyDict::new(py);
            d.set_item("level", l.level)?;
            d.set_item("missing_ratio", l.missing_ratio)?;
            d.set_item("artifact_ratio", l.artifact_ratio)?;
            d.set_item("value_bias", l.value_bias)?;
            d.set_item("shift_mean", l.shift_mean)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn nnls(basis: Vec<Spectrum>, target: &Spectrum) -> PyResult<Vec<f64>> {
    evalkit::nnls(&unwrap_all(basis), &target.0).py().map(|s| s.weights)
}

#[pyfunction]
fn snri_db(snr_new: f64, snr_old: f64) -> f64 {
    evalkit::snri_db(snr_new, snr_old)
}

/// Built-in skin components as `(names, spectra)`.
#[pyfunction]
fn skin_basis(grid: &Grid) -> PyResult<(Vec<String>, Vec<Spectrum>)> {
    let b = skin::builtin_basis(&grid.0).py()?;
    Ok((b.names().to_vec(), wrap_all(b.components().to_vec())))
}

#[pyfunction]
fn read_batch(path: &str) -> PyResult<Vec<Spectrum>> {
    dataio::read_spectra(path).py().map(wrap_all)
}

#[pyfunction]
fn write_batch(path: &str, spectra: Vec<Spectrum>) -> PyResult<()> {
    dataio::write_spectra(path, &unwrap_all(spectra)).py()
}

#[pymodule]
fn ramanforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Spectrum>()?;
    m.add_class::<DarkStats>()?;
    m.add_function(wrap_pyfunction!(solve_scale, m)?)?;
    m.add_function(wrap_pyfunction!(sample_noisy, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sg_filter, m)?)?;
    m.add_function(wrap_pyfunction!(wavelet_denoise, m)?)?;
    m.add_function(wrap_pyfunction!(modpoly, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(dct, m)?)?;
    m.add_function(wrap_pyfunction!(idct, m)?)?;
    m.add_function(wrap_pyfunction!(detect_peaks, m)?)?;
    m.add_function(wrap_pyfunction!(peak_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(nnls, m)?)?;
    m.add_function(wrap_pyfunction!(snri_db, m)?)?;
    m.add_function(wrap_pyfunction!(skin_basis, m)?)?;
    m.add_function(wrap_pyfunction!(read_batch, m)?)?;
    m.add_function(wrap_pyfunction!(write_batch, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
