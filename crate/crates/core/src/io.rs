//! JSONL sample and state files.
//!
//! Line 1 is a header record; every further line is one point or state.
//! Nothing time-dependent is written, so reruns are byte-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::PriorModel;
use crate::densities::{log_likelihood_slice, Dataset};
use crate::linalg::{c, CMatrix};
use crate::quantum::{DensityOperator, ProbVector};
use crate::samplers::{SampleMeta, WeightedSample};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub kind: String,
    pub version: String,
    pub count: usize,
    pub meta: SampleMeta,
    /// Echo of the invocation that produced the file.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<Dataset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub p: Vec<f64>,
    pub w: f64,
    /// `ln L(D|p)`; null without data or at a zero of the likelihood.
    #[serde(rename = "logL")]
    pub log_l: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatesHeader {
    pub kind: String,
    pub version: String,
    pub count: usize,
    pub dim: usize,
    pub prior: PriorModel,
    pub seed: u64,
    pub rng: String,
    pub config: serde_json::Value,
}

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl StateRecord {
    pub fn from_state(rho: &DensityOperator) -> Self {
        let m = rho.matrix();
        let d = m.nrows();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { re, im }
    }

    pub fn to_state(&self, dim: usize) -> Result<DensityOperator> {
        if self.re.len() != dim * dim || self.im.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: self.re.len() });
        }
        let m = CMatrix::from_fn(dim, dim, |i, j| c(self.re[i * dim + j], self.im[i * dim + j]));
        DensityOperator::new(m)
    }
}

fn write_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn sample_header(sample: &WeightedSample, config: serde_json::Value, dataset: Option<&Dataset>) -> SampleHeader {
    SampleHeader {
        kind: "sample".into(),
        version: VERSION.into(),
        count: sample.len(),
        meta: sample.meta.clone(),
        config,
        dataset: dataset.cloned(),
    }
}

pub fn write_sample<W: Write>(out: W, header: &SampleHeader, sample: &WeightedSample) -> Result<()> {
    if header.count != sample.len() {
        return Err(Error::InvalidInput("header count does not match the sample".into()));
    }
    let mut out = BufWriter::new(out);
    write_line(&mut out, header)?;
    for (p, &w) in sample.points.iter().zip(&sample.weights) {
        let log_l = header
            .dataset
            .as_ref()
            .map(|d| log_likelihood_slice(p.as_slice(), d.counts()))
            .filter(|l| l.is_finite());
        write_line(&mut out, &PointRecord { p: p.as_slice().to_vec(), w, log_l })?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sample_file(path: &Path, header: &SampleHeader, sample: &WeightedSample) -> Result<()> {
    write_sample(File::create(path)?, header, sample)
}

fn lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    Ok(BufReader::new(File::open(path)?).lines())
}

/// The `kind` field of a file's header line.
pub fn file_kind(path: &Path) -> Result<String> {
    let first = lines(path)?.next().ok_or_else(|| Error::InvalidInput("empty file".into()))??;
    let v: serde_json::Value = serde_json::from_str(&first)?;
    v.get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_string)
        .ok_or_else(|| Error::InvalidInput("header has no kind".into()))
}

pub fn read_sample<R: BufRead>(input: R) -> Result<(SampleHeader, WeightedSample)> {
    let mut it = input.lines();
    let first = it.next().ok_or_else(|| Error::InvalidInput("empty sample file".into()))??;
    let header: SampleHeader = serde_json::from_str(&first)?;
    if header.kind != "sample" {
        return Err(Error::InvalidInput(format!("expected a sample file, found `{}`", header.kind)));
    }
    let mut points = Vec::with_capacity(header.count);
    let mut weights = Vec::with_capacity(header.count);
    for line in it {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PointRecord = serde_json::from_str(&line)?;
        points.push(ProbVector::new(rec.p)?);
        weights.push(rec.w);
    }
    if points.len() != header.count {
        return Err(Error::InvalidInput(format!(
            "header declares {} points, file has {}",
            header.count,
            points.len()
        )));
    }
    let sample = WeightedSample::new(points, weights, header.meta.clone())?;
    Ok((header, sample))
}

pub fn read_sample_file(path: &Path) -> Result<(SampleHeader, WeightedSample)> {
    read_sample(BufReader::new(File::open(path)?))
}

pub fn write_states<W: Write>(out: W, header: &StatesHeader, states: &[DensityOperator]) -> Result<()> {
    if header.count != states.len() {
        return Err(Error::InvalidInput("header count does not match the states".into()));
    }
    let mut out = BufWriter::new(out);
    write_line(&mut out, header)?;
    for s in states {
        write_line(&mut out, &StateRecord::from_state(s))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_states<R: BufRead>(input: R) -> Result<(StatesHeader, Vec<DensityOperator>)> {
    let mut it = input.lines();
    let first = it.next().ok_or_else(|| Error::InvalidInput("empty state file".into()))??;
    let header: StatesHeader = serde_json::from_str(&first)?;
    if header.kind != "states" {
        return Err(Error::InvalidInput(format!("expected a state file, found `{}`", header.kind)));
    }
    let mut states = Vec::with_capacity(header.count);
    for line in it {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: StateRecord = serde_json::from_str(&line)?;
        states.push(rec.to_state(header.dim)?);
    }
    if states.len() != header.count {
        return Err(Error::InvalidInput(format!(
            "header declares {} states, file has {}",
            header.count,
            states.len()
        )));
    }
    Ok((header, states))
}

pub fn read_states_file(path: &Path) -> Result<(StatesHeader, Vec<DensityOperator>)> {
    read_states(BufReader::new(File::open(path)?))
}

/// Counts from a CSV file: comma- or newline-separated integers; a
/// non-numeric first line is taken as a column header.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset(&text)
}

/// A file of counts if `arg` names one, otherwise the counts themselves.
pub fn dataset_from_arg(arg: &Path) -> Result<Dataset> {
    if arg.is_file() {
        return read_dataset(arg);
    }
    let text = arg.to_str().ok_or_else(|| Error::InvalidInput("dataset argument is not valid text".into()))?;
    parse_dataset(text).map_err(|_| Error::InvalidInput(format!("`{text}` is neither a counts file nor a count list")))
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut tokens: Vec<&str> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
        if i == 0 && !fields.is_empty() && fields.iter().any(|t| t.parse::<u64>().is_err()) {
            continue;
        }
        tokens.extend(fields);
    }
    if tokens.is_empty() {
        return Err(Error::InvalidInput("dataset file has no counts".into()));
    }
    tokens.join(",").parse()
}
