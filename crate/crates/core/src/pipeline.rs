//! Partition a state dict into lossy and lossless entries, compress each,
//! and frame the result as an `FSZU` update.
//!
//! ```text
//! "FSZU" | version u16
//! | codec u8 | bound-mode u8 | epsilon f64 | block-size u32 | quant-radius u32
//! | entry-count u32
//!   per entry: name-len u16 | name | dtype u8 | rank u8 | dims u64 x rank
//!              | route u8 | blob-len u64 | blob
//! | CRC32 of everything after the magic
//! ```
//!
//! Lossy blobs are [`LossyBlob`] frames; lossless blobs are
//! [`lossless`](crate::lossless) frames of the little-endian tensor bytes.

use alloc::string::String;
use alloc::vec::Vec;

use crate::bytes::{Reader, Writer};
use crate::ebcodec::{
    BoundMode, CodecBenchRecord, CodecId, CodecRegistry, CodecSpec, ErrorBound, LossyBlob,
};
use crate::lossless::{lossless_compress, lossless_decompress, LosslessSpec};
use crate::netsim::{Clock, GridCell, SelectionGrid};
use crate::stats::median;
use crate::tensor::{
    checkpoint_size, finish_with_crc, flatten, read_header, write_header, DType, StateDict,
    TensorData, TensorRecord,
};
use crate::{Error, Result};

pub const UPDATE_MAGIC: &[u8; 4] = b"FSZU";
pub const UPDATE_VERSION: u16 = 1;

/// Which entries go lossy: name contains `name_marker`, more than `threshold`
/// elements, `f32`, all finite, and no `force_lossless` glob matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingRule {
    pub name_marker: String,
    pub threshold: usize,
    /// Whole-name globs; `*` matches any run of characters, `?` any one.
    pub force_lossless: Vec<String>,
}

impl Default for RoutingRule {
    fn default() -> Self {
        Self { name_marker: "weight".into(), threshold: 1024, force_lossless: Vec::new() }
    }
}

impl RoutingRule {
    pub fn with_threshold(threshold: usize) -> Self {
        Self { threshold, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold < 1 {
            return Err(Error::InvalidConfig("routing threshold must be at least 1"));
        }
        Ok(())
    }

    pub fn route(&self, t: &TensorRecord) -> Route {
        let lossy = t.name().contains(self.name_marker.as_str())
            && t.len() > self.threshold
            && t.dtype() == DType::F32
            && t.data().all_finite()
            && !self.force_lossless.iter().any(|p| glob_match(p, t.name()));
        if lossy {
            Route::Lossy
        } else {
            Route::Lossless
        }
    }
}

fn glob_match(pattern: &str, name: &str) -> bool {
    let p = pattern.as_bytes();
    let s = name.as_bytes();
    let (mut pi, mut si) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while si < s.len() {
        if pi < p.len() && p[pi] == b'*' {
            star = Some((pi, si));
            pi += 1;
        } else if pi < p.len() && (p[pi] == b'?' || p[pi] == s[si]) {
            pi += 1;
            si += 1;
        } else if let Some((sp, ss)) = star {
            pi = sp + 1;
            si = ss + 1;
            star = Some((sp, ss + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == b'*')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Route {
    Lossy = 0,
    Lossless = 1,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Lossy => "lossy",
            Route::Lossless => "lossless",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub lossy: Vec<String>,
    pub lossless: Vec<String>,
}

pub fn partition(state: &StateDict, rule: &RoutingRule) -> Partition {
    let mut p = Partition::default();
    for t in state {
        match rule.route(t) {
            Route::Lossy => p.lossy.push(t.name().into()),
            Route::Lossless => p.lossless.push(t.name().into()),
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub dtype: DType,
    pub route: Route,
    pub blob: Vec<u8>,
}

impl CompressedEntry {
    fn serialized_len(&self) -> usize {
        2 + self.name.len() + 2 + 8 * self.shape.len() + 1 + 8 + self.blob.len()
    }

    fn element_count(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedUpdate {
    pub entries: Vec<CompressedEntry>,
    pub codec_spec: CodecSpec,
    /// Size of the uncompressed `FSZT` serialization.
    pub original_bytes: usize,
    /// Size of the `FSZU` serialization.
    pub compressed_bytes: usize,
}

const UPDATE_FIXED: usize = 4 + 2 + (1 + 1 + 8 + 4 + 4) + 4 + 4;

impl CompressedUpdate {
    pub fn ratio(&self) -> f64 {
        self.original_bytes as f64 / self.compressed_bytes as f64
    }

    fn serialized_len(entries: &[CompressedEntry]) -> usize {
        UPDATE_FIXED + entries.iter().map(CompressedEntry::serialized_len).sum::<usize>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.compressed_bytes);
        let s = &self.codec_spec;
        w.bytes(UPDATE_MAGIC)
            .u16(UPDATE_VERSION)
            .u8(s.codec.tag())
            .u8(s.bound.mode.tag())
            .f64(s.bound.epsilon)
            .u32(s.block_size)
            .u32(s.quant_radius)
            .u32(self.entries.len() as u32);
        for e in &self.entries {
            write_header(&mut w, &e.name, e.dtype, &e.shape);
            w.u8(e.route as u8).u64(e.blob.len() as u64).bytes(&e.blob);
        }
        w.crc_from(4);
        w.finish()
    }

    /// Parses an `FSZU` frame. `original_bytes` is recomputed from the entry
    /// headers, so it equals the sender's value.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != UPDATE_MAGIC {
            return Err(Error::BadMagic { expected: "FSZU" });
        }
        let version = r.u16()?;
        if version != UPDATE_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let codec = CodecId::from_tag(r.u8()?)?;
        let mode = BoundMode::from_tag(r.u8()?)?;
        let epsilon = r.f64()?;
        let codec_spec = CodecSpec {
            codec,
            bound: ErrorBound { mode, epsilon },
            block_size: r.u32()?,
            quant_radius: r.u32()?,
        };
        let count = r.u32()? as usize;
        let mut entries = Vec::new();
        let mut original_bytes = 14;
        let mut seen = alloc::collections::BTreeSet::new();
        for _ in 0..count {
            let (name, dtype, shape) = read_header(&mut r)?;
            if !seen.insert(name.clone()) {
                return Err(Error::DuplicateName(name));
            }
            let route = match r.u8()? {
                0 => Route::Lossy,
                1 => Route::Lossless,
                _ => return Err(Error::CorruptPayload("unknown route tag")),
            };
            let len = r.len_u64()?;
            let blob = r.take(len)?.to_vec();
            let e = CompressedEntry { name, shape, dtype, route, blob };
            original_bytes += 2 + e.name.len() + 2 + 8 * e.shape.len() + 8 + e.element_count() * dtype.size();
            entries.push(e);
        }
        finish_with_crc(bytes, &mut r)?;
        Ok(Self { entries, codec_spec, original_bytes, compressed_bytes: bytes.len() })
    }

    pub fn decompress(&self, registry: &CodecRegistry) -> Result<StateDict> {
        let mut state = StateDict::new();
        for e in &self.entries {
            let record = decode_entry(e, registry).map_err(|err| err.in_entry(&e.name))?;
            state.insert(record)?;
        }
        Ok(state)
    }

    /// `(name, eps_abs)` for every lossy entry.
    pub fn lossy_bounds(&self) -> Result<Vec<(String, f64)>> {
        self.entries
            .iter()
            .filter(|e| e.route == Route::Lossy)
            .map(|e| Ok((e.name.clone(), LossyBlob::from_bytes(&e.blob)?.eps_abs)))
            .collect()
    }
}

fn decode_entry(e: &CompressedEntry, registry: &CodecRegistry) -> Result<TensorRecord> {
    let data = match e.route {
        Route::Lossy => {
            if e.dtype != DType::F32 {
                return Err(Error::CorruptPayload("lossy entry with non-f32 dtype"));
            }
            let blob = LossyBlob::from_bytes(&e.blob)?;
            if blob.element_count != e.element_count() {
                return Err(Error::ShapeMismatch {
                    name: e.name.clone(),
                    expected: e.element_count(),
                    found: blob.element_count,
                });
            }
            TensorData::F32(registry.decompress(&blob)?)
        }
        Route::Lossless => {
            let raw = lossless_decompress(&e.blob)?;
            if raw.len() != e.element_count() * e.dtype.size() {
                return Err(Error::ShapeMismatch {
                    name: e.name.clone(),
                    expected: e.element_count(),
                    found: raw.len() / e.dtype.size(),
                });
            }
            TensorData::from_le_bytes(e.dtype, &raw)?
        }
    };
    TensorRecord::new(e.name.clone(), e.shape.clone(), data)
}

fn encode_entry(
    t: &TensorRecord,
    route: Route,
    spec: &CodecSpec,
    registry: &CodecRegistry,
    lossless: LosslessSpec,
) -> Result<Vec<u8>> {
    match route {
        Route::Lossy => Ok(registry.compress(flatten(t)?, spec)?.to_bytes()),
        Route::Lossless => lossless_compress(&t.data().to_le_bytes(), lossless),
    }
}

/// Compression settings for whole updates.
pub struct UpdateCodec {
    pub spec: CodecSpec,
    pub rule: RoutingRule,
    pub lossless: LosslessSpec,
    pub registry: CodecRegistry,
}

impl UpdateCodec {
    pub fn new(spec: CodecSpec, rule: RoutingRule) -> Self {
        Self { spec, rule, lossless: LosslessSpec::default(), registry: CodecRegistry::default() }
    }

    pub fn compress(&self, state: &StateDict) -> Result<CompressedUpdate> {
        self.spec.validate()?;
        self.rule.validate()?;
        self.lossless.validate()?;
        let mut entries = Vec::with_capacity(state.len());
        for t in state {
            let route = self.rule.route(t);
            let blob = encode_entry(t, route, &self.spec, &self.registry, self.lossless)
                .map_err(|e| e.in_entry(t.name()))?;
            entries.push(CompressedEntry {
                name: t.name().into(),
                shape: t.shape().to_vec(),
                dtype: t.dtype(),
                route,
                blob,
            });
        }
        let compressed_bytes = CompressedUpdate::serialized_len(&entries);
        Ok(CompressedUpdate {
            entries,
            codec_spec: self.spec,
            original_bytes: checkpoint_size(state),
            compressed_bytes,
        })
    }

    pub fn decompress(&self, bytes: &[u8]) -> Result<StateDict> {
        CompressedUpdate::from_bytes(bytes)?.decompress(&self.registry)
    }
}

pub fn compress_update(state: &StateDict, spec: &CodecSpec, rule: &RoutingRule) -> Result<CompressedUpdate> {
    UpdateCodec::new(*spec, rule.clone()).compress(state)
}

pub fn decompress_update(bytes: &[u8]) -> Result<StateDict> {
    CompressedUpdate::from_bytes(bytes)?.decompress(&CodecRegistry::default())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryBench {
    pub name: String,
    pub route: Route,
    pub original_bytes: usize,
    pub compressed_bytes: usize,
}

/// Timings and sizes of one update round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineBench {
    pub compress_seconds: f64,
    pub decompress_seconds: f64,
    pub original_bytes: usize,
    pub compressed_bytes: usize,
    pub entries: Vec<EntryBench>,
}

impl PipelineBench {
    pub fn ratio(&self) -> f64 {
        self.original_bytes as f64 / self.compressed_bytes as f64
    }
}

/// Median timings of `reps` compress + serialize / parse + decompress runs.
pub fn measure_pipeline(
    state: &StateDict,
    codec: &UpdateCodec,
    reps: usize,
    clock: &dyn Clock,
) -> Result<PipelineBench> {
    if reps == 0 {
        return Err(Error::InvalidConfig("repetitions must be at least 1"));
    }
    let mut tc = Vec::with_capacity(reps);
    let mut td = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let t0 = clock.now();
        let update = codec.compress(state)?;
        let bytes = update.to_bytes();
        let t1 = clock.now();
        codec.decompress(&bytes)?;
        let t2 = clock.now();
        tc.push(t1 - t0);
        td.push(t2 - t1);
        last = Some(update);
    }
    let update = last.expect("reps >= 1");
    let entries = state
        .iter()
        .zip(&update.entries)
        .map(|(t, e)| EntryBench {
            name: e.name.clone(),
            route: e.route,
            original_bytes: t.data().byte_len(),
            compressed_bytes: e.blob.len(),
        })
        .collect();
    Ok(PipelineBench {
        compress_seconds: median(&tc),
        decompress_seconds: median(&td),
        original_bytes: update.original_bytes,
        compressed_bytes: update.compressed_bytes,
        entries,
    })
}

/// Benchmarks every (candidate, epsilon) pair on `state` as whole updates
/// and returns the row-major selection grid. Ratios and sizes are per
/// update; errors cover lossy-routed entries. Candidates are stored with
/// the first epsilon.
pub fn bench_update_grid(
    state: &StateDict,
    candidates: &[CodecSpec],
    epsilons: &[f64],
    rule: &RoutingRule,
    reps: usize,
    clock: &dyn Clock,
) -> Result<SelectionGrid> {
    if candidates.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidConfig("grid needs at least one codec and one epsilon"));
    }
    let mut cells = Vec::with_capacity(candidates.len() * epsilons.len());
    for base in candidates {
        for &eps in epsilons {
            let spec = base.with_epsilon(eps);
            let codec = UpdateCodec::new(spec, rule.clone());
            let bench = measure_pipeline(state, &codec, reps, clock)?;
            let update = codec.compress(state)?;
            let back = update.decompress(&codec.registry)?;
            let (mut max_err, mut sum_err, mut n, mut eps_abs) = (0.0f64, 0.0, 0usize, 0.0f64);
            for (name, bound) in update.lossy_bounds()? {
                let a = flatten(state.get(&name).expect("entry exists"))?;
                let b = flatten(back.get(&name).expect("entry exists"))?;
                for (&x, &y) in a.iter().zip(b) {
                    let e = (f64::from(x) - f64::from(y)).abs();
                    max_err = max_err.max(e);
                    sum_err += e;
                }
                n += a.len();
                eps_abs = eps_abs.max(bound);
            }
            let record = CodecBenchRecord {
                codec: spec.codec,
                epsilon: eps,
                eps_abs,
                compress_seconds: bench.compress_seconds,
                decompress_seconds: bench.decompress_seconds,
                original_bytes: bench.original_bytes,
                compressed_bytes: bench.compressed_bytes,
                ratio: bench.ratio(),
                max_abs_error: max_err,
                mean_abs_error: if n == 0 { 0.0 } else { sum_err / n as f64 },
            };
            cells.push(GridCell { spec, record, accuracy: None });
        }
    }
    SelectionGrid::new(
        candidates.iter().map(|c| c.with_epsilon(epsilons[0])).collect(),
        epsilons.to_vec(),
        cells,
        checkpoint_size(state),
        state.total_elements(),
    )
}
