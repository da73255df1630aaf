//! CSV and JSON-lines tables for plotting.
//!
//! Every report has a fixed column order; the CSV header is written even when
//! there are no rows, and equal inputs always produce equal bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use fedzip_core::ebcodec::{BoundMode, CodecBenchRecord, CodecId, CodecSpec, ErrorBound};
use fedzip_core::flsim::ExperimentReport;
use fedzip_core::netsim::{GridCell, SelectionGrid};
use fedzip_core::pipeline::PipelineBench;
use serde::{Deserialize, Serialize};

use crate::io::FileError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    JsonLines,
}

/// A table with a stable header.
pub trait Report {
    type Row: Serialize;
    const HEADER: &'static [&'static str];
    fn rows(&self) -> Vec<Self::Row>;
}

pub fn write_report<R: Report, W: Write>(report: &R, format: ReportFormat, out: W) -> std::io::Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(R::HEADER)?;
            for row in report.rows() {
                w.serialize(row)?;
            }
            w.flush()
        }
        ReportFormat::JsonLines => {
            let mut out = BufWriter::new(out);
            for row in report.rows() {
                serde_json::to_writer(&mut out, &row)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
    }
}

pub fn save_report<R: Report>(report: &R, format: ReportFormat, path: &Path) -> Result<(), FileError> {
    let file = File::create(path).map_err(|e| FileError::io(path, e))?;
    write_report(report, format, file).map_err(|e| FileError::io(path, e))
}

/// `pq`, `cbt`, or `ext<tag>` for registered codecs.
pub fn codec_label(id: CodecId) -> String {
    match id {
        CodecId::External(t) => format!("ext{t}"),
        builtin => builtin.short_name().to_owned(),
    }
}

pub fn parse_codec_label(s: &str) -> Option<CodecId> {
    match s {
        "pq" => Some(CodecId::PredictQuantize),
        "cbt" => Some(CodecId::ConstBlockTruncate),
        _ => s.strip_prefix("ext")?.parse().ok().and_then(|t| CodecId::from_tag(t).ok()),
    }
}

fn bound_label(mode: BoundMode) -> &'static str {
    match mode {
        BoundMode::Absolute => "abs",
        BoundMode::Relative => "rel",
    }
}

/// One row per (round, client).
#[derive(Debug, Serialize)]
pub struct RoundRow {
    round: usize,
    client: usize,
    accuracy: f64,
    compress_seconds: f64,
    decompress_seconds: f64,
    original_bytes: usize,
    compressed_bytes: usize,
    transfer_seconds: f64,
    max_abs_error: f64,
    comm_seconds: f64,
    predicted_comm_seconds: f64,
    wall_clock_seconds: f64,
}

impl Report for ExperimentReport {
    type Row = RoundRow;
    const HEADER: &'static [&'static str] = &[
        "round",
        "client",
        "accuracy",
        "compress_seconds",
        "decompress_seconds",
        "original_bytes",
        "compressed_bytes",
        "transfer_seconds",
        "max_abs_error",
        "comm_seconds",
        "predicted_comm_seconds",
        "wall_clock_seconds",
    ];

    fn rows(&self) -> Vec<RoundRow> {
        self.rounds
            .iter()
            .flat_map(|r| {
                r.clients.iter().map(move |c| RoundRow {
                    round: r.round,
                    client: c.client,
                    accuracy: r.accuracy,
                    compress_seconds: c.compress_seconds,
                    decompress_seconds: c.decompress_seconds,
                    original_bytes: c.original_bytes,
                    compressed_bytes: c.compressed_bytes,
                    transfer_seconds: c.transfer_seconds,
                    max_abs_error: c.max_abs_error,
                    comm_seconds: r.comm_seconds,
                    predicted_comm_seconds: r.predicted_comm_seconds,
                    wall_clock_seconds: r.wall_clock_seconds,
                })
            })
            .collect()
    }
}

/// One row per entry plus a closing `total` row carrying the timings.
#[derive(Debug, Serialize)]
pub struct EntryRow {
    scope: &'static str,
    entry: String,
    route: &'static str,
    original_bytes: usize,
    compressed_bytes: usize,
    ratio: f64,
    compress_seconds: Option<f64>,
    decompress_seconds: Option<f64>,
}

impl Report for PipelineBench {
    type Row = EntryRow;
    const HEADER: &'static [&'static str] = &[
        "scope",
        "entry",
        "route",
        "original_bytes",
        "compressed_bytes",
        "ratio",
        "compress_seconds",
        "decompress_seconds",
    ];

    fn rows(&self) -> Vec<EntryRow> {
        let mut rows: Vec<EntryRow> = self
            .entries
            .iter()
            .map(|e| EntryRow {
                scope: "entry",
                entry: e.name.clone(),
                route: e.route.name(),
                original_bytes: e.original_bytes,
                compressed_bytes: e.compressed_bytes,
                ratio: e.original_bytes as f64 / e.compressed_bytes as f64,
                compress_seconds: None,
                decompress_seconds: None,
            })
            .collect();
        if !self.entries.is_empty() {
            rows.push(EntryRow {
                scope: "total",
                entry: String::new(),
                route: "",
                original_bytes: self.original_bytes,
                compressed_bytes: self.compressed_bytes,
                ratio: self.ratio(),
                compress_seconds: Some(self.compress_seconds),
                decompress_seconds: Some(self.decompress_seconds),
            });
        }
        rows
    }
}

/// One row per (codec, epsilon) cell; an uncompressed baseline, when known,
/// comes first with codec `none`.
#[derive(Debug, Serialize, Deserialize)]
pub struct GridRow {
    codec: String,
    bound_mode: String,
    epsilon: f64,
    eps_abs: f64,
    block_size: u32,
    quant_radius: u32,
    final_accuracy: Option<f64>,
    mean_ratio: f64,
    compress_seconds: f64,
    decompress_seconds: f64,
    original_bytes: usize,
    compressed_bytes: usize,
    max_abs_error: f64,
    mean_abs_error: f64,
    original_elements: usize,
}

const BASELINE: &str = "none";

impl Report for SelectionGrid {
    type Row = GridRow;
    const HEADER: &'static [&'static str] = &[
        "codec",
        "bound_mode",
        "epsilon",
        "eps_abs",
        "block_size",
        "quant_radius",
        "final_accuracy",
        "mean_ratio",
        "compress_seconds",
        "decompress_seconds",
        "original_bytes",
        "compressed_bytes",
        "max_abs_error",
        "mean_abs_error",
        "original_elements",
    ];

    fn rows(&self) -> Vec<GridRow> {
        let mut rows = Vec::with_capacity(self.cells.len() + 1);
        if let Some(acc) = self.baseline_accuracy {
            rows.push(GridRow {
                codec: BASELINE.into(),
                bound_mode: String::new(),
                epsilon: 0.0,
                eps_abs: 0.0,
                block_size: 0,
                quant_radius: 0,
                final_accuracy: Some(acc),
                mean_ratio: 1.0,
                compress_seconds: 0.0,
                decompress_seconds: 0.0,
                original_bytes: self.original_bytes,
                compressed_bytes: self.original_bytes,
                max_abs_error: 0.0,
                mean_abs_error: 0.0,
                original_elements: self.original_elements,
            });
        }
        rows.extend(self.cells.iter().map(|c| GridRow {
            codec: codec_label(c.spec.codec),
            bound_mode: bound_label(c.spec.bound.mode).into(),
            epsilon: c.spec.bound.epsilon,
            eps_abs: c.record.eps_abs,
            block_size: c.spec.block_size,
            quant_radius: c.spec.quant_radius,
            final_accuracy: c.accuracy,
            mean_ratio: c.record.ratio,
            compress_seconds: c.record.compress_seconds,
            decompress_seconds: c.record.decompress_seconds,
            original_bytes: c.record.original_bytes,
            compressed_bytes: c.record.compressed_bytes,
            max_abs_error: c.record.max_abs_error,
            mean_abs_error: c.record.mean_abs_error,
            original_elements: self.original_elements,
        }));
        rows
    }
}

/// Parses a grid CSV as written by [`write_report`]. Cells must be complete
/// and codec-major, as emitted by the bench and sweep commands.
pub fn read_grid<R: Read>(input: R, path: &Path) -> Result<SelectionGrid, FileError> {
    let invalid = |message: &str| FileError::Invalid { path: path.to_owned(), message: message.to_owned() };
    let mut reader = csv::Reader::from_reader(input);
    let mut baseline = None;
    let mut candidates: Vec<CodecSpec> = Vec::new();
    let mut epsilons: Vec<f64> = Vec::new();
    let mut cells = Vec::new();
    let mut sizes = None;
    for row in reader.deserialize::<GridRow>() {
        let row = row.map_err(|e| FileError::Csv { path: path.to_owned(), source: e })?;
        if row.codec == BASELINE {
            baseline = row.final_accuracy;
            sizes.get_or_insert((row.original_bytes, row.original_elements));
            continue;
        }
        let codec = parse_codec_label(&row.codec).ok_or_else(|| invalid("unknown codec label"))?;
        let mode = match row.bound_mode.as_str() {
            "abs" => BoundMode::Absolute,
            "rel" => BoundMode::Relative,
            _ => return Err(invalid("bound_mode must be abs or rel")),
        };
        let mut spec = CodecSpec::new(
            codec,
            match mode {
                BoundMode::Absolute => ErrorBound::absolute(row.epsilon),
                BoundMode::Relative => ErrorBound::relative(row.epsilon),
            },
        );
        spec.block_size = row.block_size;
        spec.quant_radius = row.quant_radius;
        let base = spec.with_epsilon(0.0);
        if !candidates.iter().any(|c| c.with_epsilon(0.0) == base) {
            candidates.push(base);
        }
        if !epsilons.contains(&row.epsilon) {
            epsilons.push(row.epsilon);
        }
        sizes.get_or_insert((row.original_bytes, row.original_elements));
        cells.push(GridCell {
            spec,
            record: CodecBenchRecord {
                codec,
                epsilon: row.epsilon,
                eps_abs: row.eps_abs,
                compress_seconds: row.compress_seconds,
                decompress_seconds: row.decompress_seconds,
                original_bytes: row.original_bytes,
                compressed_bytes: row.compressed_bytes,
                ratio: row.mean_ratio,
                max_abs_error: row.max_abs_error,
                mean_abs_error: row.mean_abs_error,
            },
            accuracy: row.final_accuracy,
        });
    }
    let (original_bytes, original_elements) = sizes.ok_or_else(|| invalid("grid has no rows"))?;
    let in_order = cells.iter().enumerate().all(|(i, c)| {
        c.spec.with_epsilon(0.0) == candidates[i / epsilons.len()] && c.spec.bound.epsilon == epsilons[i % epsilons.len()]
    });
    if cells.len() != candidates.len() * epsilons.len() || !in_order {
        return Err(invalid("grid rows must cover every (codec, epsilon) pair, codec-major"));
    }
    let grid = SelectionGrid::new(
        candidates.into_iter().map(|c| c.with_epsilon(epsilons[0])).collect(),
        epsilons,
        cells,
        original_bytes,
        original_elements,
    )
    .map_err(|e| FileError::format(path, e))?;
    match baseline {
        Some(acc) => grid.with_baseline(acc).map_err(|e| FileError::format(path, e)),
        None => Ok(grid),
    }
}
