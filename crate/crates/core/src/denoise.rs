//! Denoiser plug-ins used by the CLI and the evaluation protocols.
//!
//! A denoiser maps a batch of spectra to an equally shaped batch. Methods
//! are selected with a spec string:
//!
//! ```text
//! identity
//! oracle
//! sg:m=5,d=3
//! wavelet:family=db4,levels=4,rule=soft,scale=1
//! modpoly:min=3,max=6,iters=100,tol=1e-6
//! sg:m=5,d=3+modpoly                 (stages applied left to right)
//! external:python serve.py --ckpt model.pt
//! ```

use std::path::Path;
use std::process::Command;

use rayon::prelude::*;

use crate::classical::{
    modpoly_baseline, sg_filter, wavelet_denoise, ModPolyConfig, SgConfig, WaveletConfig,
};
use crate::dataio::{read_batch, write_spectra};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

pub trait Denoiser: Send + Sync {
    fn name(&self) -> String;

    /// `truth` is the ground truth for each input when the caller has it;
    /// only the oracle reads it.
    fn denoise_batch(&self, batch: &[Spectrum], truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>>;

    /// True when per-call overhead is large and callers should send one big
    /// batch rather than many small ones.
    fn prefers_single_batch(&self) -> bool {
        false
    }
}

/// Applies `f` to every spectrum in parallel; failures name the spectrum.
fn per_spectrum(
    batch: &[Spectrum],
    f: impl Fn(&Spectrum) -> Result<Spectrum> + Sync,
) -> Result<Vec<Spectrum>> {
    batch
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            f(s).map_err(|e| Error::Denoiser {
                context: format!("spectrum {k}"),
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Denoiser for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn denoise_batch(&self, batch: &[Spectrum], _truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        Ok(batch.to_vec())
    }
}

/// Returns the ground truth unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oracle;

impl Denoiser for Oracle {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn denoise_batch(&self, batch: &[Spectrum], truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        let truth = truth.ok_or_else(|| Error::Validation("oracle denoiser needs ground truth".into()))?;
        if truth.len() != batch.len() {
            return Err(Error::LengthMismatch {
                expected: batch.len(),
                actual: truth.len(),
            });
        }
        for (s, t) in batch.iter().zip(truth) {
            s.grid().ensure_same(t.grid())?;
        }
        Ok(truth.to_vec())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SavitzkyGolay(pub SgConfig);

impl Denoiser for SavitzkyGolay {
    fn name(&self) -> String {
        format!("sg:m={},d={}", self.0.half_window, self.0.degree)
    }

    fn denoise_batch(&self, batch: &[Spectrum], _truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        per_spectrum(batch, |s| sg_filter(s, &self.0))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Wavelet(pub WaveletConfig);

impl Denoiser for Wavelet {
    fn name(&self) -> String {
        let c = &self.0;
        format!(
            "wavelet:family={},levels={},rule={},scale={}",
            format!("{:?}", c.family).to_lowercase(),
            c.levels,
            format!("{:?}", c.threshold_rule).to_lowercase(),
            c.threshold_scale
        )
    }

    fn denoise_batch(&self, batch: &[Spectrum], _truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        per_spectrum(batch, |s| wavelet_denoise(s, &self.0))
    }
}

/// Baseline removal; outputs the corrected spectrum.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModPoly(pub ModPolyConfig);

impl Denoiser for ModPoly {
    fn name(&self) -> String {
        let c = &self.0;
        format!(
            "modpoly:min={},max={},iters={},tol={}",
            c.order_range.0, c.order_range.1, c.max_iters, c.tol
        )
    }

    fn denoise_batch(&self, batch: &[Spectrum], _truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        per_spectrum(batch, |s| Ok(modpoly_baseline(s, &self.0)?.corrected))
    }
}

pub struct Chain(pub Vec<Box<dyn Denoiser>>);

impl Denoiser for Chain {
    fn name(&self) -> String {
        self.0.iter().map(|d| d.name()).collect::<Vec<_>>().join("+")
    }

    fn prefers_single_batch(&self) -> bool {
        self.0.iter().any(|d| d.prefers_single_batch())
    }

    fn denoise_batch(&self, batch: &[Spectrum], truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        let mut current = batch.to_vec();
        for stage in &self.0 {
            current = stage.denoise_batch(&current, truth)?;
        }
        Ok(current)
    }
}

/// Out-of-process denoiser. The batch is written to a temporary CSV and the
/// program is run as `<program> <args...> --in <in.csv> --out <out.csv>`.
#[derive(Debug, Clone)]
pub struct External {
    pub program: String,
    pub args: Vec<String>,
}

impl External {
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidConfig("external denoiser needs a command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }

    fn run(&self, input: &Path, output: &Path) -> Result<()> {
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg("--in")
            .arg(input)
            .arg("--out")
            .arg(output)
            .output()
            .map_err(|e| Error::ExternalTool(format!("cannot start '{}': {e}", self.program)))?;
        if !out.status.success() {
            return Err(Error::ExternalTool(format!(
                "'{}' exited with {}: {}",
                self.program,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        if !output.exists() {
            return Err(Error::ExternalTool(format!(
                "'{}' did not write {}",
                self.program,
                output.display()
            )));
        }
        Ok(())
    }
}

impl Denoiser for External {
    fn name(&self) -> String {
        let mut s = format!("external:{}", self.program);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }

    fn prefers_single_batch(&self) -> bool {
        true
    }

    fn denoise_batch(&self, batch: &[Spectrum], _truth: Option<&[Spectrum]>) -> Result<Vec<Spectrum>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let dir = tempfile::Builder::new()
            .prefix("ramanforge-ext")
            .tempdir()
            .map_err(|e| Error::io(std::env::temp_dir(), e))?;
        let input = dir.path().join("in.csv");
        let output = dir.path().join("out.csv");
        write_spectra(&input, batch)?;
        self.run(&input, &output)?;
        let result = read_batch(&output).map_err(|e| match e {
            Error::Parse { path, line, msg } => Error::ShapeMismatch {
                path,
                msg: format!("line {line}: {msg}"),
            },
            other => other,
        })?;
        let grid = *batch[0].grid();
        if result.grid.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                path: output,
                msg: format!("{} rows, expected {}", result.grid.len(), grid.len()),
            });
        }
        if result.len() != batch.len() {
            return Err(Error::ShapeMismatch {
                path: output,
                msg: format!("{} spectra, expected {}", result.len(), batch.len()),
            });
        }
        result
            .columns
            .into_iter()
            .map(|c| Spectrum::new(grid, c))
            .collect()
    }
}

fn parse_params(method: &str, params: &str) -> Result<Vec<(String, String)>> {
    if params.is_empty() {
        return Ok(Vec::new());
    }
    params
        .split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("{method}: expected key=value, found '{kv}'"))
            })?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn parse_value<T: std::str::FromStr>(method: &str, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("{method}: bad value '{v}' for {key}")))
}

fn parse_stage(stage: &str) -> Result<Box<dyn Denoiser>> {
    let (method, params) = stage.split_once(':').unwrap_or((stage, ""));
    let method = method.trim();
    let params = parse_params(method, params.trim())?;
    let unknown = |k: &str| Err(Error::InvalidConfig(format!("{method}: unknown parameter '{k}'")));
    match method {
        "identity" | "oracle" if !params.is_empty() => Err(Error::InvalidConfig(format!(
            "{method} takes no parameters"
        ))),
        "identity" => Ok(Box::new(Identity)),
        "oracle" => Ok(Box::new(Oracle)),
        "sg" => {
            let mut cfg = SgConfig::default();
            for (k, v) in &params {
                match k.as_str() {
                    "m" => cfg.half_window = parse_value(method, k, v)?,
                    "d" => cfg.degree = parse_value(method, k, v)?,
                    _ => return unknown(k),
                }
            }
            Ok(Box::new(SavitzkyGolay(cfg)))
        }
        "wavelet" => {
            let mut cfg = WaveletConfig::default();
            for (k, v) in &params {
                match k.as_str() {
                    "family" => cfg.family = v.parse()?,
                    "levels" => cfg.levels = parse_value(method, k, v)?,
                    "rule" => cfg.threshold_rule = v.parse()?,
                    "scale" => cfg.threshold_scale = parse_value(method, k, v)?,
                    _ => return unknown(k),
                }
            }
            Ok(Box::new(Wavelet(cfg)))
        }
        "modpoly" => {
            let mut cfg = ModPolyConfig::default();
            for (k, v) in &params {
                match k.as_str() {
                    "min" => cfg.order_range.0 = parse_value(method, k, v)?,
                    "max" => cfg.order_range.1 = parse_value(method, k, v)?,
                    "iters" => cfg.max_iters = parse_value(method, k, v)?,
                    "tol" => cfg.tol = parse_value(method, k, v)?,
                    _ => return unknown(k),
                }
            }
            cfg.validate()?;
            Ok(Box::new(ModPoly(cfg)))
        }
        other => Err(Error::InvalidConfig(format!("unknown denoiser '{other}'"))),
    }
}

/// Builds a denoiser from a spec string (see the module docs).
pub fn parse_denoiser(spec: &str) -> Result<Box<dyn Denoiser>> {
    let spec = spec.trim();
    if let Some(cmd) = spec.strip_prefix("external:") {
        return Ok(Box::new(External::from_command_line(cmd)?));
    }
    let stages: Vec<&str> = spec.split('+').collect();
    if stages.len() == 1 {
        return parse_stage(stages[0]);
    }
    Ok(Box::new(Chain(
        stages.into_iter().map(parse_stage).collect::<Result<_>>()?,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumGrid;

    fn wave() -> Spectrum {
        Spectrum::from_fn(SpectrumGrid::default(), |x| (x / 20.0).sin() + 5.0).unwrap()
    }

    #[test]
    fn spec_strings() {
        assert_eq!(parse_denoiser("identity").unwrap().name(), "identity");
        assert_eq!(parse_denoiser("sg:m=2,d=2").unwrap().name(), "sg:m=2,d=2");
        assert_eq!(parse_denoiser("sg").unwrap().name(), "sg:m=5,d=3");
        assert_eq!(
            parse_denoiser("wavelet:family=haar,levels=3,rule=hard,scale=0.5").unwrap().name(),
            "wavelet:family=haar,levels=3,rule=hard,scale=0.5"
        );
        assert_eq!(
            parse_denoiser("sg:m=3,d=2+modpoly:max=4").unwrap().name(),
            "sg:m=3,d=2+modpoly:min=3,max=4,iters=100,tol=0.000001"
        );
        let ext = parse_denoiser("external:python3 serve.py --ckpt a.pt").unwrap();
        assert_eq!(ext.name(), "external:python3 serve.py --ckpt a.pt");
    }

    #[test]
    fn bad_specs() {
        for spec in ["median", "sg:m", "sg:w=3", "modpoly:min=5,max=3", "identity:x=1", "external:", "wavelet:family=db9"] {
            assert!(parse_denoiser(spec).is_err(), "{spec}");
        }
    }

    #[test]
    fn oracle_needs_truth() {
        let s = wave();
        assert!(Oracle.denoise_batch(&[s.clone()], None).is_err());
        let t = s.scale(2.0).unwrap();
        assert_eq!(Oracle.denoise_batch(&[s], Some(&[t.clone()])).unwrap(), vec![t]);
    }

    #[test]
    fn failures_name_the_spectrum() {
        let small = Spectrum::zeros(crate::spectrum::make_grid(0.0, 1.0, 5).unwrap());
        let err = SavitzkyGolay(SgConfig::default())
            .denoise_batch(&[small], None)
            .unwrap_err();
        assert!(err.to_string().contains("spectrum 0"), "{err}");
    }

    #[test]
    fn chain_applies_in_order() {
        let s = wave();
        let chain = parse_denoiser("sg:m=4,d=2+modpoly").unwrap();
        let direct = modpoly_baseline(
            &sg_filter(&s, &SgConfig { half_window: 4, degree: 2 }).unwrap(),
            &ModPolyConfig::default(),
        )
        .unwrap()
        .corrected;
        assert_eq!(chain.denoise_batch(&[s], None).unwrap(), vec![direct]);
    }
}
