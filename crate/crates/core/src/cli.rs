//! Command-line front end. The binary is a thin wrapper over [`main_with_args`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classical::{ModPolyConfig, SgConfig, ThresholdRule, WaveletConfig, WaveletFamily};
use crate::dataio::{
    read_batch, read_dark_stats, write_batch, write_dark_stats, write_spectra, write_spectrum, BasisRef, BatchFile,
    DarkRef, DatasetKind, DatasetManifest, ExampleRecord, GridSpec, SplitEntry, SplitFiles, SCHEMA_VERSION,
};
use crate::denoise::{parse_denoiser, Denoiser, External, ModPoly, SavitzkyGolay, Wavelet};
use crate::error::{Error, Result};
use crate::evalkit::{
    concentration_analysis, run_peak_protocol, run_snri_protocol, SimSetup, SnriConfig, DEFAULT_PROMINENCE_LEVELS,
    MATCH_TOLERANCE_WN,
};
use crate::noisemodel::{estimate_dark_stats, DarkStats, NoiseMode};
use crate::report::{PeaksReport, Report, SkinGroup, SkinReport, SnriReport};
use crate::rng::RngStream;
use crate::skin::{builtin_basis, gen_skin_testset, load_basis_dir, SkinBasis, LOW_SNR_MAX};
use crate::spectrum::SpectrumGrid;
use crate::synth::{gen_dataset, LabeledExample, SynthesisConfig, TargetRanges};

pub const THREADS_ENV: &str = "RAMANFORGE_THREADS";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Stream index of the SNRi sweep, kept clear of the split streams.
pub const SNRI_STREAM: u64 = 1000;

#[derive(Debug, Parser)]
#[command(name = "ramanforge", version, about = "Simulate, denoise and evaluate noisy Raman spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-wavenumber mean and variance of dark frames.
    DarkStats {
        /// Batch CSV with one dark frame per column.
        #[arg(long)]
        frames: PathBuf,
        /// Integration time in seconds.
        #[arg(long)]
        itime: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a labeled Raman dataset split.
    Simulate(SimulateArgs),
    /// Simulate skin mixture spectra.
    SimulateSkin {
        #[command(flatten)]
        common: SimulateArgs,
        /// Directory with <component>.csv files; the built-in stand-ins are used when omitted.
        #[arg(long)]
        basis: Option<PathBuf>,
    },
    /// Write the built-in skin basis as spectrum files.
    ExportBasis {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 600.0)]
        grid_start: f64,
        #[arg(long, default_value_t = 1790.0)]
        grid_end: f64,
        #[arg(long, default_value_t = 693)]
        grid_points: usize,
    },
    /// Denoise a batch file.
    Denoise(DenoiseArgs),
    /// Run an evaluation protocol against a dataset manifest.
    Eval {
        #[command(subcommand)]
        protocol: EvalCommand,
    },
    /// Turn an evaluation report into plot data (.csv) or a figure (.svg).
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn stream_index(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, value_enum, default_value = "train")]
    pub split: Split,
    /// Dark statistics JSON files; one is picked at random per example.
    #[arg(long, num_args = 1.., required = true)]
    pub dark: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "gaussian")]
    pub noise_mode: NoiseMode,
    #[arg(long, default_value_t = 0.1)]
    pub r2f_min: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r2f_max: f64,
    #[arg(long, default_value_t = 0.01)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub snr_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sg,
    Wavelet,
    Modpoly,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// SG half window.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// SG polynomial degree.
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value = "db4")]
    pub family: String,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long, default_value = "soft")]
    pub rule: String,
    #[arg(long, default_value_t = 1.0)]
    pub threshold_scale: f64,
    #[arg(long, default_value_t = 3)]
    pub order_min: usize,
    #[arg(long, default_value_t = 6)]
    pub order_max: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Command line of the external denoiser.
    #[arg(long)]
    pub command: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalCommon {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Denoiser spec, e.g. `identity`, `sg:m=5,d=3`, `modpoly`, `external:<cmd>`.
    #[arg(long)]
    pub denoiser: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// SNR improvement over freshly simulated (r2f, SNR) pairs.
    Snri {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long, default_value_t = 500)]
        pairs: usize,
        #[arg(long, default_value_t = 5)]
        signals: usize,
        #[arg(long, default_value_t = 10)]
        realizations: usize,
        /// Defaults to the manifest's root seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Peak recovery metrics on a manifest split.
    Peaks {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long, default_value = "test")]
        split: String,
        /// Prominence levels relative to each true spectrum's maximum.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long, default_value_t = MATCH_TOLERANCE_WN)]
        tol: f64,
    },
    /// NNLS concentration agreement on a skin split.
    Skin {
        #[command(flatten)]
        common: EvalCommon,
        #[arg(long, default_value = "test")]
        split: String,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    // A pool may already exist when called more than once in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DarkStats { frames, itime, out } => dark_stats(&frames, itime, &out),
        Command::Simulate(args) => simulate(&args, None),
        Command::SimulateSkin { common, basis } => simulate(&common, Some(basis)),
        Command::ExportBasis {
            out,
            grid_start,
            grid_end,
            grid_points,
        } => {
            let grid = SpectrumGrid::new(grid_start, grid_end, grid_points)?;
            write_basis(&out, &builtin_basis(&grid)?).map(|_| ())
        }
        Command::Denoise(args) => denoise(&args),
        Command::Eval { protocol } => eval(protocol),
        Command::Plot { report, out } => Report::read(&report)?.write_plot(&out),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dark_stats(frames: &Path, itime: f64, out: &Path) -> Result<()> {
    if !(itime > 0.0 && itime.is_finite()) {
        return Err(Error::Validation(format!("integration time {itime} must be positive")));
    }
    let frames = read_batch(frames)?.spectra()?;
    let stats = estimate_dark_stats(&frames, itime)?;
    write_dark_stats(out, &stats)
}

/// Writes `<dir>/<component>.csv` for each component; returns file names.
fn write_basis(dir: &Path, basis: &SkinBasis) -> Result<Vec<String>> {
    create_dir(dir)?;
    basis
        .names()
        .iter()
        .zip(basis.components())
        .map(|(name, c)| {
            let file = format!("{name}.csv");
            write_spectrum(dir.join(&file), c)?;
            Ok(file)
        })
        .collect()
}

fn check_same<T: PartialEq + std::fmt::Debug>(field: &str, existing: &T, new: &T) -> Result<()> {
    if existing != new {
        return Err(Error::Validation(format!(
            "{field}: existing manifest has {existing:?}, this run uses {new:?}"
        )));
    }
    Ok(())
}

fn simulate(args: &SimulateArgs, skin: Option<Option<PathBuf>>) -> Result<()> {
    let dark_sets: Vec<DarkStats> = args.dark.iter().map(read_dark_stats).collect::<Result<_>>()?;
    let grid = dark_sets[0].grid;
    for (d, path) in dark_sets.iter().zip(&args.dark) {
        grid.ensure_same(&d.grid)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    }
    let ranges = TargetRanges {
        r2f: (args.r2f_min, args.r2f_max),
        snr: (args.snr_min, args.snr_max),
    };
    ranges.validate()?;
    let synthesis = SynthesisConfig {
        noise_mode: args.noise_mode,
        ..SynthesisConfig::default()
    };
    let kind = if skin.is_some() { DatasetKind::Skin } else { DatasetKind::Raman };
    let basis = match &skin {
        Some(Some(dir)) => Some(load_basis_dir(dir, &grid)?),
        Some(None) => Some(builtin_basis(&grid)?),
        None => None,
    };
    let split = args.split;
    let stream = RngStream::new(args.seed, split.stream_index());
    let examples = match &basis {
        Some(b) => gen_skin_testset(b, args.count, stream, &dark_sets, &ranges, &synthesis)?,
        None => gen_dataset(args.count, &grid, &dark_sets, stream, &ranges, &synthesis)?,
    };

    let out = &args.out;
    create_dir(out)?;
    let manifest_path = out.join(MANIFEST_FILE);
    let dark_refs: Vec<DarkRef> = dark_sets
        .iter()
        .enumerate()
        .map(|(id, d)| DarkRef {
            id,
            file: format!("dark_{id}.json"),
            integration_time: d.integration_time,
        })
        .collect();
    let mut manifest = if manifest_path.exists() {
        let m = DatasetManifest::read(&manifest_path)?;
        check_same("kind", &m.kind, &kind)?;
        check_same("root_seed", &m.root_seed, &args.seed)?;
        check_same("grid", &m.grid, &GridSpec::from(grid))?;
        check_same("target_ranges", &m.target_ranges, &ranges)?;
        check_same("synthesis", &m.synthesis, &synthesis)?;
        check_same("dark_stats", &m.dark_stats, &dark_refs)?;
        let existing = m.load_dark_sets(out)?;
        check_same("dark_stats contents", &existing, &dark_sets)?;
        if let Some(b) = &basis {
            let existing = m.load_basis_components(out)?;
            let same = existing.len() == b.len()
                && existing
                    .iter()
                    .zip(b.names().iter().zip(b.components()))
                    .all(|((n0, c0), (n1, c1))| n0 == n1 && c0 == c1);
            if !same {
                return Err(Error::Validation("basis: differs from the basis already in the dataset".into()));
            }
        }
        m
    } else {
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            kind,
            grid: grid.into(),
            root_seed: args.seed,
            target_ranges: ranges,
            synthesis: synthesis.clone(),
            dark_stats: dark_refs.clone(),
            basis: None,
            splits: BTreeMap::new(),
        }
    };
    for (d, r) in dark_sets.iter().zip(&dark_refs) {
        write_dark_stats(out.join(&r.file), d)?;
    }
    if let Some(b) = &basis {
        let files = write_basis(&out.join("basis"), b)?;
        manifest.basis = Some(BasisRef {
            components: b.names().to_vec(),
            files: files.into_iter().map(|f| format!("basis/{f}")).collect(),
        });
    }

    let name = split.name();
    let files = SplitFiles {
        noisy: format!("{name}_noisy.csv"),
        clean: format!("{name}_clean.csv"),
        pure: format!("{name}_pure.csv"),
        fluor: format!("{name}_fluor.csv"),
    };
    let column = |f: fn(&LabeledExample) -> &crate::spectrum::Spectrum| -> Vec<_> {
        examples.iter().map(|e| f(e).clone()).collect()
    };
    write_spectra(out.join(&files.noisy), &column(|e| &e.noisy))?;
    write_spectra(out.join(&files.clean), &column(|e| &e.clean_with_baseline))?;
    write_spectra(out.join(&files.pure), &column(|e| &e.pure_raman))?;
    write_spectra(out.join(&files.fluor), &column(|e| &e.fluorescence))?;
    let records = examples
        .iter()
        .enumerate()
        .map(|(i, e)| ExampleRecord {
            id: format!("{name}-{i:06}"),
            column: i,
            seed_index: e.seed.stream_index,
            r2f: e.targets.r2f,
            snr: e.targets.snr,
            dark_id: e.dark_id,
            m: e.scale.m,
            n: e.scale.n,
            peak_index: e.peak_index,
            weights: e.mixture_weights.clone(),
        })
        .collect();
    manifest.splits.insert(
        name.to_string(),
        SplitEntry {
            count: examples.len(),
            stream_index: split.stream_index(),
            files,
            examples: records,
        },
    );
    manifest.write(&manifest_path)?;
    manifest.validate(out)
}

fn denoiser_from_args(args: &DenoiseArgs) -> Result<Box<dyn Denoiser>> {
    Ok(match args.method {
        Method::Sg => Box::new(SavitzkyGolay(SgConfig {
            half_window: args.m,
            degree: args.d,
        })),
        Method::Wavelet => Box::new(Wavelet(WaveletConfig {
            family: args.family.parse::<WaveletFamily>()?,
            levels: args.levels,
            threshold_rule: args.rule.parse::<ThresholdRule>()?,
            threshold_scale: args.threshold_scale,
        })),
        Method::Modpoly => {
            let cfg = ModPolyConfig {
                order_range: (args.order_min, args.order_max),
                max_iters: args.max_iters,
                tol: args.tol,
            };
            cfg.validate()?;
            Box::new(ModPoly(cfg))
        }
        Method::External => {
            let cmd = args
                .command
                .as_deref()
                .ok_or_else(|| Error::Validation("--method external needs --command".into()))?;
            Box::new(External::from_command_line(cmd)?)
        }
    })
}

fn denoise(args: &DenoiseArgs) -> Result<()> {
    let denoiser = denoiser_from_args(args)?;
    let batch = read_batch(&args.input)?;
    let out = denoiser.denoise_batch(&batch.spectra()?, None)?;
    write_batch(&args.out, &BatchFile::from_spectra(&out)?)
}

fn manifest_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn load_manifest(path: &Path) -> Result<(DatasetManifest, PathBuf)> {
    let m = DatasetManifest::read(path)?;
    let dir = manifest_dir(path);
    m.validate(&dir)?;
    Ok((m, dir))
}

/// Writes the report and its plot table next to it (`<stem>.csv`).
fn emit(report: &Report, out: &Path) -> Result<()> {
    report.write(out)?;
    report.write_plot(&out.with_extension("csv"))
}

fn eval(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Snri {
            common,
            pairs,
            signals,
            realizations,
            seed,
        } => {
            let (m, dir) = load_manifest(&common.manifest)?;
            let denoiser = parse_denoiser(&common.denoiser)?;
            let setup = SimSetup {
                grid: m.grid.to_grid()?,
                dark_sets: m.load_dark_sets(&dir)?,
                ranges: m.target_ranges,
                synthesis: m.synthesis.clone(),
            };
            let config = SnriConfig {
                n_pairs: pairs,
                signals_per_pair: signals,
                realizations,
            };
            let root_seed = seed.unwrap_or(m.root_seed);
            let records = run_snri_protocol(denoiser.as_ref(), &setup, &config, RngStream::new(root_seed, SNRI_STREAM))?;
            let mean_snri_db = records.iter().map(|r| r.snri_db).sum::<f64>() / records.len() as f64;
            emit(
                &Report::Snri(SnriReport {
                    denoiser: denoiser.name(),
                    root_seed,
                    stream_index: SNRI_STREAM,
                    config,
                    mean_snri_db,
                    records,
                }),
                &common.out,
            )
        }
        EvalCommand::Peaks {
            common,
            split,
            levels,
            tol,
        } => {
            let (m, dir) = load_manifest(&common.manifest)?;
            let denoiser = parse_denoiser(&common.denoiser)?;
            let data = m.load_split(&dir, &split)?;
            let levels = levels.unwrap_or_else(|| DEFAULT_PROMINENCE_LEVELS.to_vec());
            if levels.iter().any(|l| !(*l >= 0.0)) {
                return Err(Error::Validation(format!("prominence levels {levels:?} must be non-negative")));
            }
            let sweep = run_peak_protocol(denoiser.as_ref(), &data.noisy, &data.pure, &levels, tol)?;
            emit(
                &Report::Peaks(PeaksReport {
                    denoiser: denoiser.name(),
                    split,
                    n_spectra: data.noisy.len(),
                    sweep,
                }),
                &common.out,
            )
        }
        EvalCommand::Skin { common, split } => {
            let (m, dir) = load_manifest(&common.manifest)?;
            if m.kind != DatasetKind::Skin {
                return Err(Error::Validation(format!(
                    "{}: kind: skin evaluation needs a skin dataset",
                    common.manifest.display()
                )));
            }
            let denoiser = parse_denoiser(&common.denoiser)?;
            let named = m.load_basis_components(&dir)?;
            let names: Vec<String> = named.iter().map(|(n, _)| n.clone()).collect();
            let basis: Vec<_> = named.into_iter().map(|(_, s)| s).collect();
            let data = m.load_split(&dir, &split)?;
            let denoised = denoiser
                .denoise_batch(&data.noisy, Some(&data.pure))
                .map_err(|e| Error::Denoiser {
                    context: format!("split {split}"),
                    source: Box::new(e),
                })?;
            let all = concentration_analysis(&data.pure, &denoised, &basis, &names)?;
            let hi = m.target_ranges.snr.1.max(LOW_SNR_MAX);
            let groups = [("low", (f64::NEG_INFINITY, LOW_SNR_MAX)), ("high", (LOW_SNR_MAX, hi))]
                .into_iter()
                .map(|(label, (lo, up))| {
                    let idx: Vec<usize> = data
                        .records
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| if label == "low" { r.snr <= up } else { r.snr > lo && r.snr <= up })
                        .map(|(i, _)| i)
                        .collect();
                    let analysis = if idx.is_empty() {
                        None
                    } else {
                        let pure: Vec<_> = idx.iter().map(|&i| data.pure[i].clone()).collect();
                        let den: Vec<_> = idx.iter().map(|&i| denoised[i].clone()).collect();
                        Some(concentration_analysis(&pure, &den, &basis, &names)?)
                    };
                    Ok(SkinGroup {
                        label: label.to_string(),
                        snr_range: (lo.max(0.0), up),
                        n_spectra: idx.len(),
                        analysis,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            emit(
                &Report::Skin(SkinReport {
                    denoiser: denoiser.name(),
                    split,
                    components: names,
                    all,
                    groups,
                }),
                &common.out,
            )
        }
    }
}
