//! Ingestion, validation, and selection of training-run records.
//!
//! The on-disk schema is one measurement per CSV row,
//! `run_id,n_layer,width_ratio,n_ctx,batch_samples,lr,tokens_seen,val_loss`,
//! with an equivalent JSON form that nests the loss series per run. Floats
//! serialize in full round-trip precision. Loading validates every
//! invariant with row-precise diagnostics; loaded stores are immutable.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compute::{compute_per_token, ComputeConfig, ModelShape};
use crate::units::{BatchUnit, UnitConvention};
use crate::{Error, Result};

/// One validation-loss measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub tokens: f64,
    pub loss: f64,
}

/// One training configuration and its validation-loss series.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub run_id: String,
    pub shape: ModelShape,
    pub cfg: ComputeConfig,
    pub batch_size_samples: u64,
    pub learning_rate: f64,
    /// Strictly increasing in tokens; all losses positive.
    pub loss_series: Vec<LossPoint>,
}

impl TrainingRun {
    pub fn batch_size_tokens(&self) -> f64 {
        self.batch_size_samples as f64 * self.cfg.tokens_per_sample as f64
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.batch_size_samples == 0 {
            return Err(Error::Validation {
                path: path.into(),
                line: 0,
                msg: format!("run {}: batch_samples must be >= 1", self.run_id),
            });
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Validation {
                path: path.into(),
                line: 0,
                msg: format!("run {}: learning rate must be positive", self.run_id),
            });
        }
        let mut prev = 0.0;
        for (i, p) in self.loss_series.iter().enumerate() {
            if !(p.tokens > prev) {
                return Err(Error::Validation {
                    path: path.into(),
                    line: 0,
                    msg: format!(
                        "run {}: tokens_seen must be strictly increasing (series index {i})",
                        self.run_id
                    ),
                });
            }
            if !(p.loss > 0.0) {
                return Err(Error::Validation {
                    path: path.into(),
                    line: 0,
                    msg: format!(
                        "run {}: val_loss must be positive (series index {i})",
                        self.run_id
                    ),
                });
            }
            prev = p.tokens;
        }
        Ok(())
    }
}

/// One flattened data point for the fitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    /// Parameters.
    pub n: f64,
    /// Training tokens.
    pub t: f64,
    /// Batch size, samples or tokens per the active unit convention.
    pub b: f64,
    pub eta: f64,
    pub loss: f64,
    /// Training FLOPs, `C_token * T` of the originating run.
    pub c: f64,
    /// Sample-to-token conversion factor carried from the run.
    pub tokens_per_sample: f64,
}

const CSV_HEADER: &str = "run_id,n_layer,width_ratio,n_ctx,batch_samples,lr,tokens_seen,val_loss";

/// Loads runs from a `.csv` or `.json` file.
pub fn load_runs(path: impl AsRef<Path>) -> Result<Vec<TrainingRun>> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "csv" => load_runs_csv(path),
        "json" => load_runs_json(path),
        other => Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: format!("unsupported run-file extension '{other}' (expected csv or json)"),
        }),
    }
}

pub fn load_runs_csv(path: impl AsRef<Path>) -> Result<Vec<TrainingRun>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_runs_csv(&text, &path.display().to_string())
}

/// Parses the CSV schema; `origin` names the source in diagnostics.
pub fn parse_runs_csv(text: &str, origin: &str) -> Result<Vec<TrainingRun>> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => {
                return Err(Error::Parse {
                    path: origin.into(),
                    line: 0,
                    msg: "empty file".into(),
                })
            }
        }
    };
    if header.1.trim() != CSV_HEADER {
        return Err(Error::Parse {
            path: origin.into(),
            line: header.0 + 1,
            msg: format!("expected header '{CSV_HEADER}', got '{}'", header.1.trim()),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut runs: HashMap<String, TrainingRun> = HashMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                path: origin.into(),
                line: lineno,
                msg: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let parse_u32 = |s: &str, name: &str| -> Result<u32> {
            s.trim().parse().map_err(|_| Error::Parse {
                path: origin.into(),
                line: lineno,
                msg: format!("field {name}: invalid integer '{s}'"),
            })
        };
        let parse_u64 = |s: &str, name: &str| -> Result<u64> {
            s.trim().parse().map_err(|_| Error::Parse {
                path: origin.into(),
                line: lineno,
                msg: format!("field {name}: invalid integer '{s}'"),
            })
        };
        let parse_f64 = |s: &str, name: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                path: origin.into(),
                line: lineno,
                msg: format!("field {name}: invalid number '{s}'"),
            })
        };

        let run_id = fields[0].trim().to_string();
        if run_id.is_empty() {
            return Err(Error::Parse {
                path: origin.into(),
                line: lineno,
                msg: "empty run_id".into(),
            });
        }
        let n_layer = parse_u32(fields[1], "n_layer")?;
        let width_ratio = parse_u32(fields[2], "width_ratio")?;
        let n_ctx = parse_u32(fields[3], "n_ctx")?;
        let batch_samples = parse_u64(fields[4], "batch_samples")?;
        let lr = parse_f64(fields[5], "lr")?;
        let tokens = parse_f64(fields[6], "tokens_seen")?;
        let loss = parse_f64(fields[7], "val_loss")?;

        let shape =
            ModelShape::from_layers(n_layer, width_ratio).map_err(|e| Error::Validation {
                path: origin.into(),
                line: lineno,
                msg: e.to_string(),
            })?;
        let cfg = ComputeConfig::new(n_ctx, 0).map_err(|e| Error::Validation {
            path: origin.into(),
            line: lineno,
            msg: e.to_string(),
        })?;
        if batch_samples == 0 {
            return Err(Error::Validation {
                path: origin.into(),
                line: lineno,
                msg: "batch_samples must be >= 1".into(),
            });
        }
        if !(lr > 0.0) {
            return Err(Error::Validation {
                path: origin.into(),
                line: lineno,
                msg: format!("lr must be positive, got {lr}"),
            });
        }
        if !(loss > 0.0) {
            return Err(Error::Validation {
                path: origin.into(),
                line: lineno,
                msg: format!("val_loss must be positive, got {loss}"),
            });
        }
        if !(tokens > 0.0) {
            return Err(Error::Validation {
                path: origin.into(),
                line: lineno,
                msg: format!("tokens_seen must be positive, got {tokens}"),
            });
        }

        match runs.get_mut(&run_id) {
            None => {
                order.push(run_id.clone());
                runs.insert(
                    run_id.clone(),
                    TrainingRun {
                        run_id,
                        shape,
                        cfg,
                        batch_size_samples: batch_samples,
                        learning_rate: lr,
                        loss_series: vec![LossPoint { tokens, loss }],
                    },
                );
            }
            Some(run) => {
                if run.shape != shape
                    || run.cfg != cfg
                    || run.batch_size_samples != batch_samples
                    || run.learning_rate != lr
                {
                    return Err(Error::Validation {
                        path: origin.into(),
                        line: lineno,
                        msg: format!(
                            "run {run_id}: configuration fields differ from an earlier row"
                        ),
                    });
                }
                let last = run.loss_series.last().expect("nonempty series");
                if !(tokens > last.tokens) {
                    return Err(Error::Validation {
                        path: origin.into(),
                        line: lineno,
                        msg: format!(
                            "run {run_id}: tokens_seen {tokens} does not increase past {}",
                            last.tokens
                        ),
                    });
                }
                run.loss_series.push(LossPoint { tokens, loss });
            }
        }
    }

    if order.is_empty() {
        return Err(Error::Validation {
            path: origin.into(),
            line: 0,
            msg: "file contains no data rows".into(),
        });
    }
    Ok(order
        .into_iter()
        .map(|id| runs.remove(&id).expect("ordered id exists"))
        .collect())
}

/// Serializes runs back to the CSV schema, floats in round-trip precision.
pub fn runs_to_csv_string(runs: &[TrainingRun]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for run in runs {
        for p in &run.loss_series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                run.run_id,
                run.shape.n_layer,
                run.shape.width_ratio,
                run.cfg.n_ctx,
                run.batch_size_samples,
                run.learning_rate,
                p.tokens,
                p.loss
            );
        }
    }
    out
}

pub fn write_runs_csv(path: impl AsRef<Path>, runs: &[TrainingRun]) -> Result<()> {
    fs::write(path, runs_to_csv_string(runs))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct RunJson {
    run_id: String,
    n_layer: u32,
    width_ratio: u32,
    n_ctx: u32,
    #[serde(default)]
    n_text: u32,
    batch_samples: u64,
    lr: f64,
    series: Vec<LossPoint>,
}

pub fn load_runs_json(path: impl AsRef<Path>) -> Result<Vec<TrainingRun>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let raw: Vec<RunJson> = serde_json::from_str(&text)?;
    let mut runs = Vec::with_capacity(raw.len());
    for r in raw {
        let shape =
            ModelShape::from_layers(r.n_layer, r.width_ratio).map_err(|e| Error::Validation {
                path: origin.clone(),
                line: 0,
                msg: format!("run {}: {e}", r.run_id),
            })?;
        let cfg = ComputeConfig::new(r.n_ctx, r.n_text).map_err(|e| Error::Validation {
            path: origin.clone(),
            line: 0,
            msg: format!("run {}: {e}", r.run_id),
        })?;
        let run = TrainingRun {
            run_id: r.run_id,
            shape,
            cfg,
            batch_size_samples: r.batch_samples,
            learning_rate: r.lr,
            loss_series: r.series,
        };
        run.validate(&origin)?;
        runs.push(run);
    }
    if runs.is_empty() {
        return Err(Error::Validation {
            path: origin,
            line: 0,
            msg: "file contains no runs".into(),
        });
    }
    Ok(runs)
}

pub fn write_runs_json(path: impl AsRef<Path>, runs: &[TrainingRun]) -> Result<()> {
    let raw: Vec<RunJson> = runs
        .iter()
        .map(|r| RunJson {
            run_id: r.run_id.clone(),
            n_layer: r.shape.n_layer,
            width_ratio: r.shape.width_ratio,
            n_ctx: r.cfg.n_ctx,
            n_text: r.cfg.n_text,
            batch_samples: r.batch_size_samples,
            lr: r.learning_rate,
            series: r.loss_series.clone(),
        })
        .collect();
    fs::write(path, serde_json::to_string_pretty(&raw)?)?;
    Ok(())
}

/// Flattens runs into per-measurement observations in raw units
/// (parameters, tokens, samples, FLOPs).
pub fn observations(runs: &[TrainingRun]) -> Vec<Observation> {
    let mut out = Vec::new();
    for run in runs {
        let n = run.shape.params() as f64;
        let c_token = compute_per_token(&run.shape, &run.cfg);
        for p in &run.loss_series {
            out.push(Observation {
                n,
                t: p.tokens,
                b: run.batch_size_samples as f64,
                eta: run.learning_rate,
                loss: p.loss,
                c: c_token * p.tokens,
                tokens_per_sample: run.cfg.tokens_per_sample as f64,
            });
        }
    }
    out
}

/// Rescales an observation into the given convention: `N`, `T` divided by
/// the unit scales, batch size converted to tokens when requested, loss
/// and learning rate unchanged.
pub fn to_units(obs: &Observation, conv: &UnitConvention) -> Observation {
    let b = match conv.batch_unit {
        BatchUnit::Samples => obs.b,
        BatchUnit::Tokens => obs.b * obs.tokens_per_sample,
    };
    Observation {
        n: obs.n / conv.param_unit,
        t: obs.t / conv.token_unit,
        b,
        ..*obs
    }
}

/// Inverse of [`to_units`].
pub fn from_units(obs: &Observation, conv: &UnitConvention) -> Observation {
    let b = match conv.batch_unit {
        BatchUnit::Samples => obs.b,
        BatchUnit::Tokens => obs.b / obs.tokens_per_sample,
    };
    Observation {
        n: obs.n * conv.param_unit,
        t: obs.t * conv.token_unit,
        b,
        ..*obs
    }
}

/// Converts observations into single-measurement runs under the CSV
/// schema. The shape is the closest discrete depth for each observation's
/// parameter count and batch sizes round to whole samples, so observation
/// grids built on exact shape sizes survive unchanged.
pub fn observations_to_runs(obs: &[Observation], width_ratio: u32) -> Result<Vec<TrainingRun>> {
    let mut runs = Vec::with_capacity(obs.len());
    for (i, o) in obs.iter().enumerate() {
        let n_layer = crate::compute::layers_for_params(o.n, width_ratio)?;
        let shape = ModelShape::from_layers(n_layer, width_ratio)?;
        let n_ctx = o.tokens_per_sample.round().max(1.0) as u32;
        let cfg = ComputeConfig::new(n_ctx, 0)?;
        let run = TrainingRun {
            run_id: format!("obs{i:05}"),
            shape,
            cfg,
            batch_size_samples: o.b.round().max(1.0) as u64,
            learning_rate: o.eta,
            loss_series: vec![LossPoint {
                tokens: o.t,
                loss: o.loss,
            }],
        };
        run.validate("observations")?;
        runs.push(run);
    }
    Ok(runs)
}

/// Keeps, per exact `(N, T)` group, every observation whose loss is within
/// `rel_tol` of the group minimum; the minimum itself is always kept.
/// Groups and rows preserve input order. An empty input yields an empty
/// output.
pub fn select_near_optimal(obs: &[Observation], rel_tol: f64) -> Vec<Observation> {
    let mut group_of: HashMap<(u64, u64), usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, o) in obs.iter().enumerate() {
        let key = (o.n.to_bits(), o.t.to_bits());
        let gi = *group_of.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[gi].push(i);
    }
    let mut keep = Vec::new();
    for group in &groups {
        let min_loss = group
            .iter()
            .map(|&i| obs[i].loss)
            .fold(f64::INFINITY, f64::min);
        let cutoff = (1.0 + rel_tol) * min_loss;
        for &i in group {
            if obs[i].loss <= cutoff {
                keep.push(obs[i]);
            }
        }
    }
    keep
}
