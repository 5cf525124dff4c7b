use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_batch, read_dark_stats, read_json, read_spectrum, write_json};
use crate::error::{Error, Result};
use crate::noisemodel::DarkStats;
use crate::spectrum::{Spectrum, SpectrumGrid};
use crate::synth::{SynthesisConfig, TargetRanges};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl From<SpectrumGrid> for GridSpec {
    fn from(g: SpectrumGrid) -> Self {
        Self {
            start: g.start(),
            end: g.end(),
            n: g.len(),
        }
    }
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<SpectrumGrid> {
        SpectrumGrid::new(self.start, self.end, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Raman,
    Skin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkRef {
    pub id: usize,
    pub file: String,
    pub integration_time: f64,
}

/// Component names and their spectrum files, in mixture-weight order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRef {
    pub components: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub noisy: String,
    pub clean: String,
    pub pure: String,
    pub fluor: String,
}

impl SplitFiles {
    fn entries(&self) -> [(&'static str, &str); 4] {
        [
            ("noisy", &self.noisy),
            ("clean", &self.clean),
            ("pure", &self.pure),
            ("fluor", &self.fluor),
        ]
    }
}

/// One simulated example; `column` indexes the `spec_<column>` column of
/// each of the split's batch files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub column: usize,
    pub seed_index: u64,
    pub r2f: f64,
    pub snr: f64,
    pub dark_id: usize,
    pub m: f64,
    pub n: f64,
    pub peak_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub count: usize,
    pub stream_index: u64,
    pub files: SplitFiles,
    pub examples: Vec<ExampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub kind: DatasetKind,
    pub grid: GridSpec,
    pub root_seed: u64,
    pub target_ranges: TargetRanges,
    pub synthesis: SynthesisConfig,
    pub dark_stats: Vec<DarkRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisRef>,
    pub splits: BTreeMap<String, SplitEntry>,
}

/// All spectra of one split, column-aligned with its records.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSplit {
    pub noisy: Vec<Spectrum>,
    pub clean: Vec<Spectrum>,
    pub pure: Vec<Spectrum>,
    pub fluor: Vec<Spectrum>,
    pub records: Vec<ExampleRecord>,
}

fn invalid(field: impl AsRef<str>, msg: impl AsRef<str>) -> Error {
    Error::Validation(format!("{}: {}", field.as_ref(), msg.as_ref()))
}

impl DatasetManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn split(&self, name: &str) -> Result<&SplitEntry> {
        self.splits.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.splits.keys().map(String::as_str).collect();
            invalid(format!("splits.{name}"), format!("no such split (have {known:?})"))
        })
    }

    pub fn load_dark_sets(&self, dir: &Path) -> Result<Vec<DarkStats>> {
        self.dark_stats
            .iter()
            .map(|d| read_dark_stats(dir.join(&d.file)))
            .collect()
    }

    pub fn load_basis_components(&self, dir: &Path) -> Result<Vec<(String, Spectrum)>> {
        let basis = self
            .basis
            .as_ref()
            .ok_or_else(|| invalid("basis", "manifest has no basis"))?;
        basis
            .components
            .iter()
            .zip(&basis.files)
            .map(|(name, file)| Ok((name.clone(), read_spectrum(dir.join(file))?)))
            .collect()
    }

    pub fn load_split(&self, dir: &Path, name: &str) -> Result<LoadedSplit> {
        let split = self.split(name)?;
        let grid = self.grid.to_grid()?;
        let load = |field: &str, file: &str| -> Result<Vec<Spectrum>> {
            let batch = read_batch(dir.join(file))?;
            if batch.grid != grid {
                return Err(invalid(
                    format!("splits.{name}.files.{field}"),
                    format!("{file}: grid {:?} differs from manifest grid", GridSpec::from(batch.grid)),
                ));
            }
            if batch.len() != split.count {
                return Err(invalid(
                    format!("splits.{name}.files.{field}"),
                    format!("{file}: {} columns but count is {}", batch.len(), split.count),
                ));
            }
            batch.spectra()
        };
        Ok(LoadedSplit {
            noisy: load("noisy", &split.files.noisy)?,
            clean: load("clean", &split.files.clean)?,
            pure: load("pure", &split.files.pure)?,
            fluor: load("fluor", &split.files.fluor)?,
            records: split.examples.clone(),
        })
    }

    /// Checks every field and referenced file. `dir` is the directory the
    /// relative file names resolve against.
    pub fn validate(&self, dir: &Path) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        let grid = self.grid.to_grid().map_err(|e| invalid("grid", e.to_string()))?;
        self.target_ranges
            .validate()
            .map_err(|e| invalid("target_ranges", e.to_string()))?;
        self.synthesis
            .validate()
            .map_err(|e| invalid("synthesis", e.to_string()))?;
        if self.dark_stats.is_empty() {
            return Err(invalid("dark_stats", "no dark statistics referenced"));
        }
        for (k, d) in self.dark_stats.iter().enumerate() {
            let field = format!("dark_stats[{k}]");
            if d.id != k {
                return Err(invalid(&field, format!("id {} should be {k}", d.id)));
            }
            let stats = read_dark_stats(dir.join(&d.file))
                .map_err(|e| invalid(format!("{field}.file"), e.to_string()))?;
            if stats.grid != grid {
                return Err(invalid(format!("{field}.file"), format!("{}: grid differs from manifest grid", d.file)));
            }
            if stats.integration_time != d.integration_time {
                return Err(invalid(
                    format!("{field}.integration_time"),
                    format!("{} but file says {}", d.integration_time, stats.integration_time),
                ));
            }
        }
        let n_components = match (&self.kind, &self.basis) {
            (DatasetKind::Skin, None) => return Err(invalid("basis", "skin dataset needs a basis")),
            (_, Some(b)) => {
                if b.components.len() != b.files.len() {
                    return Err(invalid(
                        "basis",
                        format!("{} names but {} files", b.components.len(), b.files.len()),
                    ));
                }
                for (name, file) in b.components.iter().zip(&b.files) {
                    let s = read_spectrum(dir.join(file))
                        .map_err(|e| invalid(format!("basis.{name}"), e.to_string()))?;
                    if *s.grid() != grid {
                        return Err(invalid(format!("basis.{name}"), format!("{file}: grid differs from manifest grid")));
                    }
                }
                Some(b.components.len())
            }
            (DatasetKind::Raman, None) => None,
        };
        if self.splits.is_empty() {
            return Err(invalid("splits", "no splits"));
        }
        let mut streams = BTreeSet::new();
        for (name, split) in &self.splits {
            let field = format!("splits.{name}");
            if !streams.insert(split.stream_index) {
                return Err(invalid(
                    format!("{field}.stream_index"),
                    format!("stream {} used by two splits", split.stream_index),
                ));
            }
            if split.examples.len() != split.count {
                return Err(invalid(
                    format!("{field}.examples"),
                    format!("{} records but count is {}", split.examples.len(), split.count),
                ));
            }
            for (k, rec) in split.examples.iter().enumerate() {
                let rf = format!("{field}.examples[{k}]");
                if rec.column != k {
                    return Err(invalid(format!("{rf}.column"), format!("{} should be {k}", rec.column)));
                }
                if rec.dark_id >= self.dark_stats.len() {
                    return Err(invalid(format!("{rf}.dark_id"), format!("{} out of range", rec.dark_id)));
                }
                if rec.peak_index >= grid.len() {
                    return Err(invalid(format!("{rf}.peak_index"), format!("{} out of range", rec.peak_index)));
                }
                let (lo, hi) = self.target_ranges.r2f;
                if !(lo <= rec.r2f && rec.r2f <= hi) {
                    return Err(invalid(format!("{rf}.r2f"), format!("{} outside [{lo}, {hi}]", rec.r2f)));
                }
                let (lo, hi) = self.target_ranges.snr;
                if !(lo <= rec.snr && rec.snr <= hi) {
                    return Err(invalid(format!("{rf}.snr"), format!("{} outside [{lo}, {hi}]", rec.snr)));
                }
                match (n_components, &rec.weights) {
                    (Some(n), Some(w)) if w.len() != n => {
                        return Err(invalid(format!("{rf}.weights"), format!("{} weights for {n} components", w.len())))
                    }
                    (Some(_), None) if self.kind == DatasetKind::Skin => {
                        return Err(invalid(format!("{rf}.weights"), "missing"))
                    }
                    _ => {}
                }
            }
            for (kind, file) in split.files.entries() {
                let ff = format!("{field}.files.{kind}");
                let batch = read_batch(dir.join(file)).map_err(|e| invalid(&ff, e.to_string()))?;
                if batch.grid != grid {
                    return Err(invalid(&ff, format!("{file}: grid differs from manifest grid")));
                }
                if batch.len() != split.count {
                    return Err(invalid(&ff, format!("{file}: {} columns but count is {}", batch.len(), split.count)));
                }
            }
        }
        Ok(())
    }
}
