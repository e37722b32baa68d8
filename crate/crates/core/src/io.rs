//! Dataset ingestion, shuffling, and end-to-end experiment runs.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::betting::{KdeModel, StrategyKind};
use crate::error::{Error, Result};
use crate::martingale::{self, check_thresholds, DEFAULT_THRESHOLDS};
use crate::pvalue::process_stream;
use crate::rng::RngHandle;
use crate::types::{common_dim, Label, LabeledExample};

/// Points in the emitted betting-function grid.
pub const GRID_POINTS: usize = 201;

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    /// Zero-based column index.
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = Error;

    /// All-digit strings are indices, anything else is a header name.
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty label column"));
        }
        Ok(if s.bytes().all(|b| b.is_ascii_digit()) {
            LabelColumn::Index(s.parse().map_err(|_| Error::invalid(format!("bad column index {s}")))?)
        } else {
            LabelColumn::Name(s.to_owned())
        })
    }
}

/// Examples loaded from a file, in file order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    /// Raw label token for each interned [`Label`] id.
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn dim(&self) -> Option<usize> {
        self.examples.first().map(LabeledExample::dim)
    }
}

/// Reads a comma-separated file. Every column except the label must be a
/// finite number. Rows are reported by 1-based line, columns by 0-based index.
pub fn load_csv(path: &Path, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let label_idx = match label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::invalid(format!("label column {name:?} given by name but the file has no header")));
            }
            let headers = reader.headers()?;
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::invalid(format!("no column named {name:?} in {}", path.display())))?
        }
    };

    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut label_names = Vec::new();
    let mut examples = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            row: line,
            column,
            message,
        };
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_err(record.len().min(w), format!("expected {w} columns, found {}", record.len())));
            }
            _ => {}
        }
        if label_idx >= record.len() {
            return Err(parse_err(label_idx, format!("label column out of range for {} columns", record.len())));
        }
        let mut features = Vec::with_capacity(record.len() - 1);
        for (col, field) in record.iter().enumerate() {
            if col == label_idx {
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(col, format!("cannot parse {field:?} as a number")))?;
            if !v.is_finite() {
                return Err(parse_err(col, format!("feature value {field:?} is not finite")));
            }
            features.push(v);
        }
        let token = &record[label_idx];
        if token.is_empty() {
            return Err(parse_err(label_idx, "empty label".into()));
        }
        let id = *ids.entry(token.to_owned()).or_insert_with(|| {
            label_names.push(token.to_owned());
            (label_names.len() - 1) as u32
        });
        let example = LabeledExample::new(features, Label(id)).map_err(|e| parse_err(label_idx, e.to_string()))?;
        examples.push(example);
    }
    Ok(Dataset { examples, label_names })
}

/// In-place Fisher–Yates shuffle driven by `seed`.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = RngHandle::new(seed);
    for i in (1..items.len()).rev() {
        let j = rng.below(i + 1);
        items.swap(i, j);
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub label: LabelColumn,
    pub has_header: bool,
    pub strategies: Vec<StrategyKind>,
    /// Seed for the p-value tie-breaking draws.
    pub seed: u64,
    pub shuffle: bool,
    /// Seed for the shuffle; derived from `seed` when absent.
    pub shuffle_seed: Option<u64>,
    pub thresholds: Vec<f64>,
    /// Keep only the first `n` examples of the (possibly shuffled) stream.
    pub max_examples: Option<usize>,
    pub trajectory_out: PathBuf,
    pub summary_out: PathBuf,
    pub betting_out: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for everything but the data location, strategies and seed.
    pub fn new(data: impl Into<PathBuf>, label: LabelColumn, strategies: Vec<StrategyKind>, seed: u64, out_dir: &Path) -> Self {
        Self {
            data: data.into(),
            label,
            has_header: true,
            strategies,
            seed,
            shuffle: false,
            shuffle_seed: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            max_examples: None,
            trajectory_out: out_dir.join("trajectory.csv"),
            summary_out: out_dir.join("summary.json"),
            betting_out: Some(out_dir.join("betting.csv")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("at least one strategy is required"));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        let mut names: Vec<String> = self.strategies.iter().map(ToString::to_string).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("strategy {} given twice", w[0])));
        }
        check_thresholds(&self.thresholds)?;
        if self.max_examples == Some(0) {
            return Err(Error::invalid("max examples must be positive"));
        }
        Ok(())
    }

    pub fn effective_shuffle_seed(&self) -> Option<u64> {
        self.shuffle
            .then(|| self.shuffle_seed.unwrap_or_else(|| RngHandle::new(self.seed).derive(1).seed()))
    }
}

/// Per-strategy result in the summary file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub final_log10: f64,
    pub max_log10: f64,
    /// Threshold (as text) to the first step at which it was reached.
    pub crossings: BTreeMap<String, Option<usize>>,
}

/// Contents of the summary JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub strategies: BTreeMap<String, StrategySummary>,
    pub n_examples: usize,
    pub seed: u64,
    pub shuffled: bool,
}

/// Loads, optionally shuffles, computes p-values and martingales, and writes
/// the trajectory, summary and betting-function files.
pub fn run_experiment(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let mut examples = load_csv(&config.data, &config.label, config.has_header)?.examples;
    if examples.is_empty() {
        return Err(Error::invalid(format!("{} contains no examples", config.data.display())));
    }
    common_dim(&examples)?;
    if let Some(seed) = config.effective_shuffle_seed() {
        shuffle(&mut examples, seed);
    }
    if let Some(max) = config.max_examples {
        examples.truncate(max);
    }

    let records = process_stream(&examples, RngHandle::new(config.seed))?;
    let trajectories = martingale::run(&config.strategies, &records, &config.thresholds)?;

    let mut header = vec!["index".to_owned(), "p_value".to_owned(), "theta".to_owned()];
    header.extend(trajectories.iter().map(|t| format!("log10_{}", t.kind)));
    let mut w = csv_writer(&config.trajectory_out)?;
    w.write_record(&header)?;
    for (i, rec) in records.iter().enumerate() {
        let mut row = vec![rec.index.to_string(), format_sig9(rec.p), format_sig9(rec.theta)];
        row.extend(trajectories.iter().map(|t| format_sig9(t.log10[i])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&config.trajectory_out, e))?;

    let summary = RunSummary {
        strategies: trajectories
            .iter()
            .map(|t| {
                let crossings = t
                    .tracker
                    .alarms()
                    .iter()
                    .map(|a| (a.threshold.to_string(), a.step))
                    .collect();
                (
                    t.kind.to_string(),
                    StrategySummary {
                        final_log10: t.tracker.log10_value(),
                        max_log10: t.tracker.log10_max(),
                        crossings,
                    },
                )
            })
            .collect(),
        n_examples: records.len(),
        seed: config.seed,
        shuffled: config.shuffle,
    };
    write_json(&config.summary_out, &summary)?;

    if let Some(path) = &config.betting_out {
        let ps: Vec<f64> = records.iter().map(|r| r.p).collect();
        write_betting_grid(path, &KdeModel::fit(&ps))?;
    }
    Ok(summary)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

/// `(p, density)` on `GRID_POINTS` evenly spaced points of [0, 1].
pub fn betting_grid(model: &KdeModel) -> Vec<(f64, f64)> {
    (0..GRID_POINTS)
        .map(|i| {
            let p = i as f64 / (GRID_POINTS - 1) as f64;
            (p, model.density(p))
        })
        .collect()
}

pub fn write_betting_grid(path: &Path, model: &KdeModel) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_grid_rows(&mut w, model)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_grid_rows<W: Write>(w: &mut csv::Writer<W>, model: &KdeModel) -> Result<()> {
    w.write_record(["p", "density"])?;
    for (p, d) in betting_grid(model) {
        w.write_record([format_sig9(p), format_sig9(d)])?;
    }
    Ok(())
}

/// Reads the `p_value` column of a trajectory file.
pub fn read_pvalues(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let col = reader
        .headers()?
        .iter()
        .position(|h| h == "p_value")
        .ok_or_else(|| Error::invalid(format!("{} has no p_value column", path.display())))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = record.get(col).unwrap_or("");
        let p: f64 = field.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            row: line,
            column: col,
            message: format!("cannot parse {field:?} as a p-value"),
        })?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: col,
                message: format!("p-value {p} outside (0, 1]"),
            });
        }
        out.push(p);
    }
    Ok(out)
}

/// Writes examples in the loader's format: `x0..x{d-1},label`.
pub fn write_examples(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let dim = common_dim(examples)?.unwrap_or(0);
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for z in examples {
        let mut row: Vec<String> = z.features().iter().map(|&v| format_sig17(v)).collect();
        row.push(z.label().0.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Round-trip exact float text.
fn format_sig17(v: f64) -> String {
    format!("{v:?}")
}

/// C-style `%.9g`: nine significant digits, trailing zeros removed.
pub fn format_sig9(x: f64) -> String {
    const SIG: i32 = 9;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (SIG - 1 - exp) as usize, x)).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
