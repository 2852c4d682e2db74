//! Frozen JSON and CSV output formats. See `docs/trace-schema.md`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{AlgorithmConfig, GreedyTrace, TraceStatus};
use crate::partition::{interval_partition, ZetaChoice};

use super::counterexample::CounterexampleStep;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

pub const TRACE_CSV_HEADER: &str = "step,selectedIndex,lambda,normBefore,normAfter,partitionBefore";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRow {
    pub step: usize,
    pub selected_index: usize,
    pub lambda: f64,
    pub norm_before: f64,
    pub norm_after: f64,
    pub snapped_indices: Vec<usize>,
    pub residual_before: Vec<f64>,
    /// Block lengths of the interval partition of `residual_before`, `I_1` first.
    pub partition_before: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceDocument {
    pub version: u32,
    pub indices: Vec<usize>,
    pub config: AlgorithmConfig,
    pub zeta: ZetaChoice,
    pub initial_coefficients: Vec<f64>,
    pub status: TraceStatus,
    pub steps: Vec<StepRow>,
    pub final_residual: Vec<f64>,
}

impl TraceDocument {
    pub fn from_trace(trace: &GreedyTrace, zeta: ZetaChoice) -> Result<Self> {
        let steps = trace
            .steps
            .iter()
            .map(|s| {
                Ok(StepRow {
                    step: s.step,
                    selected_index: s.selected_index,
                    lambda: s.lambda,
                    norm_before: s.norm_before,
                    norm_after: s.norm_after,
                    snapped_indices: s.snapped_indices.clone(),
                    residual_before: s.residual_before.clone(),
                    partition_before: interval_partition(&s.residual_before, zeta.value())?.lengths(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TraceDocument {
            version: TRACE_SCHEMA_VERSION,
            indices: trace.initial.index_set().indices().to_vec(),
            config: trace.config.clone(),
            zeta,
            initial_coefficients: trace.initial.coeffs().to_vec(),
            status: trace.status.clone(),
            steps,
            final_residual: trace.final_residual.coeffs().to_vec(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TraceDocument =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("trace document: {e}")))?;
        if doc.version != TRACE_SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!("unsupported trace version {}", doc.version)));
        }
        Ok(doc)
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.steps.is_empty() {
            return Ok(format!("{TRACE_CSV_HEADER}\n"));
        }
        let rows: Vec<TraceCsvRow> = self
            .steps
            .iter()
            .map(|s| TraceCsvRow {
                step: s.step,
                selected_index: s.selected_index,
                lambda: s.lambda,
                norm_before: s.norm_before,
                norm_after: s.norm_after,
                partition_before: join_lengths(&s.partition_before),
            })
            .collect();
        to_csv(&rows)
    }
}

pub fn join_lengths(lengths: &[usize]) -> String {
    lengths.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Serializes flat rows as CSV with a camelCase header line.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
}

pub fn render<T: Serialize>(rows: &[T], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(&rows),
        OutputFormat::Csv => to_csv(rows),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
struct TraceCsvRow {
    step: usize,
    selected_index: usize,
    lambda: f64,
    norm_before: f64,
    norm_after: f64,
    partition_before: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CounterexampleCsvRow {
    step: usize,
    selected: usize,
    x: f64,
    y: f64,
    norm: f64,
    ratio: f64,
}

pub fn counterexample_csv(steps: &[CounterexampleStep]) -> Result<String> {
    let rows: Vec<CounterexampleCsvRow> = steps
        .iter()
        .map(|s| CounterexampleCsvRow {
            step: s.step,
            selected: s.selected,
            x: s.residual[0],
            y: s.residual[1],
            norm: s.norm,
            ratio: s.ratio,
        })
        .collect();
    if rows.is_empty() {
        return Ok("step,selected,x,y,norm,ratio\n".into());
    }
    to_csv(&rows)
}
