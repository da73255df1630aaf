//! Error-bounded lossy codecs over flat `f32` arrays.
//!
//! Both built-in codecs guarantee `|x_i - x̂_i| <= eps_abs` for every element:
//!
//! * [`CodecId::PredictQuantize`]: previous-value (1D Lorenzo) prediction,
//!   residual quantization into bins of width `2 * eps_abs`, canonical Huffman
//!   coding of the bin codes, then the [`lossless`](crate::lossless) back end.
//! * [`CodecId::ConstBlockTruncate`]: fixed-size blocks stored either as one
//!   constant or with per-element mantissa truncation.
//!
//! Further codecs plug in through [`LossyCodec`] and [`CodecRegistry`].

mod bench;
pub mod bits;
pub mod cbt;
pub mod huffman;
pub mod pq;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bytes::{verify_trailing_crc, Reader, Writer};
use crate::{Error, Result};

pub use bench::{bench_codec, CodecBenchRecord};

pub const DEFAULT_BLOCK_SIZE: u32 = 256;
pub const DEFAULT_QUANT_RADIUS: u32 = 32_768;
pub const MAX_QUANT_RADIUS: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundMode {
    Absolute,
    /// Fraction of the array's value range `max - min`.
    Relative,
}

impl BoundMode {
    pub fn tag(self) -> u8 {
        match self {
            BoundMode::Absolute => 0,
            BoundMode::Relative => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(BoundMode::Absolute),
            1 => Ok(BoundMode::Relative),
            _ => Err(Error::InvalidBound("unknown bound mode")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub mode: BoundMode,
    pub epsilon: f64,
}

impl ErrorBound {
    pub fn absolute(epsilon: f64) -> Self {
        Self { mode: BoundMode::Absolute, epsilon }
    }

    pub fn relative(epsilon: f64) -> Self {
        Self { mode: BoundMode::Relative, epsilon }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidBound("epsilon must be finite and non-negative"));
        }
        if self.mode == BoundMode::Relative && self.epsilon > 1.0 {
            return Err(Error::InvalidBound("relative epsilon must not exceed 1"));
        }
        Ok(())
    }
}

/// The absolute bound enforced for `values` under `bound`.
pub fn resolve_abs_bound(bound: ErrorBound, values: &[f32]) -> Result<f64> {
    bound.validate()?;
    let (lo, hi) = finite_range(values)?;
    Ok(match bound.mode {
        BoundMode::Absolute => bound.epsilon,
        BoundMode::Relative => bound.epsilon * (hi - lo),
    })
}

/// `(min, max)` as f64; errors on empty or non-finite input.
pub fn finite_range(values: &[f32]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((f64::from(lo), f64::from(hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodecId {
    PredictQuantize,
    ConstBlockTruncate,
    /// Registered third-party codec; wire ids `128..=255`.
    External(u8),
}

impl CodecId {
    pub fn tag(self) -> u8 {
        match self {
            CodecId::PredictQuantize => 0,
            CodecId::ConstBlockTruncate => 1,
            CodecId::External(t) => t,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(CodecId::PredictQuantize),
            1 => Ok(CodecId::ConstBlockTruncate),
            t if t >= 128 => Ok(CodecId::External(t)),
            t => Err(Error::UnknownCodec(t)),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            CodecId::PredictQuantize => "pq",
            CodecId::ConstBlockTruncate => "cbt",
            CodecId::External(_) => "external",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecSpec {
    pub codec: CodecId,
    pub bound: ErrorBound,
    pub block_size: u32,
    pub quant_radius: u32,
}

impl CodecSpec {
    pub fn new(codec: CodecId, bound: ErrorBound) -> Self {
        Self { codec, bound, block_size: DEFAULT_BLOCK_SIZE, quant_radius: DEFAULT_QUANT_RADIUS }
    }

    pub fn pq_rel(epsilon: f64) -> Self {
        Self::new(CodecId::PredictQuantize, ErrorBound::relative(epsilon))
    }

    pub fn cbt_rel(epsilon: f64) -> Self {
        Self::new(CodecId::ConstBlockTruncate, ErrorBound::relative(epsilon))
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.bound.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bound.validate()?;
        if self.block_size < 8 {
            return Err(Error::InvalidSpec("block_size must be at least 8"));
        }
        if !(2..=MAX_QUANT_RADIUS).contains(&self.quant_radius) {
            return Err(Error::InvalidSpec("quant_radius must be in 2..=2^20"));
        }
        Ok(())
    }
}

/// Self-describing codec output.
///
/// Frame: `codec u8 | eps_abs f64 | count u64 | min f64 | max f64 | payload-len u64 | payload | crc32`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossyBlob {
    pub codec: CodecId,
    pub eps_abs: f64,
    pub element_count: usize,
    pub value_min: f64,
    pub value_max: f64,
    pub payload: Vec<u8>,
}

pub const BLOB_OVERHEAD: usize = 1 + 8 + 8 + 8 + 8 + 8 + 4;

impl LossyBlob {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_capacity(self.payload.len() + BLOB_OVERHEAD);
        w.u8(self.codec.tag())
            .f64(self.eps_abs)
            .u64(self.element_count as u64)
            .f64(self.value_min)
            .f64(self.value_max)
            .u64(self.payload.len() as u64)
            .bytes(&self.payload)
            .crc_from(0);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let body = verify_trailing_crc(bytes, 0)?;
        let mut r = Reader::new(body);
        let codec = CodecId::from_tag(r.u8()?)?;
        let eps_abs = r.f64()?;
        let element_count = usize::try_from(r.u64()?)
            .map_err(|_| Error::CorruptPayload("element count overflow"))?;
        let value_min = r.f64()?;
        let value_max = r.f64()?;
        let len = r.len_u64()?;
        let payload = r.take(len)?.to_vec();
        if r.remaining() != 0 {
            return Err(Error::CorruptPayload("trailing bytes in lossy blob"));
        }
        Ok(Self { codec, eps_abs, element_count, value_min, value_max, payload })
    }

    pub fn serialized_len(&self) -> usize {
        self.payload.len() + BLOB_OVERHEAD
    }
}

/// A lossy codec over `f32` arrays. Implementations must be pure functions
/// of their inputs.
pub trait LossyCodec: Send + Sync {
    fn id(&self) -> CodecId;

    fn name(&self) -> &str;

    /// Whether `|x - x̂| <= eps_abs` holds for every element.
    fn honors_pointwise_bound(&self) -> bool {
        true
    }

    /// `values` is non-empty and finite; `eps_abs >= 0`.
    fn encode(&self, values: &[f32], eps_abs: f64, spec: &CodecSpec) -> Result<Vec<u8>>;

    fn decode(&self, payload: &[u8], element_count: usize, eps_abs: f64) -> Result<Vec<f32>>;
}

pub struct PredictQuantize;
pub struct ConstBlockTruncate;

impl LossyCodec for PredictQuantize {
    fn id(&self) -> CodecId {
        CodecId::PredictQuantize
    }

    fn name(&self) -> &str {
        "predict_quantize"
    }

    fn encode(&self, values: &[f32], eps_abs: f64, spec: &CodecSpec) -> Result<Vec<u8>> {
        pq::encode(values, eps_abs, spec.quant_radius)
    }

    fn decode(&self, payload: &[u8], element_count: usize, eps_abs: f64) -> Result<Vec<f32>> {
        pq::decode(payload, element_count, eps_abs)
    }
}

impl LossyCodec for ConstBlockTruncate {
    fn id(&self) -> CodecId {
        CodecId::ConstBlockTruncate
    }

    fn name(&self) -> &str {
        "const_block_truncate"
    }

    fn encode(&self, values: &[f32], eps_abs: f64, spec: &CodecSpec) -> Result<Vec<u8>> {
        cbt::encode(values, eps_abs, spec.block_size as usize)
    }

    fn decode(&self, payload: &[u8], element_count: usize, eps_abs: f64) -> Result<Vec<f32>> {
        cbt::decode(payload, element_count, eps_abs)
    }
}

/// Maps codec ids to implementations. [`CodecRegistry::default`] holds the
/// two built-ins.
pub struct CodecRegistry {
    codecs: Vec<Box<dyn LossyCodec>>,
}

impl Default for CodecRegistry {
    fn default() -> Self {
        Self { codecs: alloc::vec![Box::new(PredictQuantize), Box::new(ConstBlockTruncate)] }
    }
}

impl CodecRegistry {
    /// Registers an external codec. Its id must be `External(128..)` and unused.
    pub fn register(&mut self, codec: Box<dyn LossyCodec>) -> Result<()> {
        match codec.id() {
            CodecId::External(t) if t >= 128 => {}
            _ => return Err(Error::InvalidConfig("external codecs must use ids 128..=255")),
        }
        if self.get(codec.id()).is_ok() {
            return Err(Error::InvalidConfig("codec id already registered"));
        }
        self.codecs.push(codec);
        Ok(())
    }

    pub fn get(&self, id: CodecId) -> Result<&dyn LossyCodec> {
        self.codecs
            .iter()
            .find(|c| c.id() == id)
            .map(|c| c.as_ref())
            .ok_or(Error::UnknownCodec(id.tag()))
    }

    pub fn names(&self) -> Vec<String> {
        self.codecs.iter().map(|c| c.name().into()).collect()
    }

    pub fn compress(&self, values: &[f32], spec: &CodecSpec) -> Result<LossyBlob> {
        spec.validate()?;
        let codec = self.get(spec.codec)?;
        if values.is_empty() {
            return Ok(LossyBlob {
                codec: spec.codec,
                eps_abs: 0.0,
                element_count: 0,
                value_min: 0.0,
                value_max: 0.0,
                payload: Vec::new(),
            });
        }
        let (value_min, value_max) = finite_range(values)?;
        let eps_abs = resolve_abs_bound(spec.bound, values)?;
        let payload = codec.encode(values, eps_abs, spec)?;
        Ok(LossyBlob {
            codec: spec.codec,
            eps_abs,
            element_count: values.len(),
            value_min,
            value_max,
            payload,
        })
    }

    pub fn decompress(&self, blob: &LossyBlob) -> Result<Vec<f32>> {
        if blob.element_count == 0 {
            return if blob.payload.is_empty() {
                Ok(Vec::new())
            } else {
                Err(Error::CorruptPayload("payload present for empty blob"))
            };
        }
        if !blob.eps_abs.is_finite() || blob.eps_abs < 0.0 {
            return Err(Error::CorruptPayload("invalid eps_abs in blob"));
        }
        let out = self.get(blob.codec)?.decode(&blob.payload, blob.element_count, blob.eps_abs)?;
        if out.len() != blob.element_count {
            return Err(Error::CorruptPayload("decoded element count mismatch"));
        }
        Ok(out)
    }
}

/// Compresses with a built-in codec.
pub fn compress(values: &[f32], spec: &CodecSpec) -> Result<LossyBlob> {
    CodecRegistry::default().compress(values, spec)
}

pub fn decompress(blob: &LossyBlob) -> Result<Vec<f32>> {
    CodecRegistry::default().decompress(blob)
}

pub fn compress_pq(values: &[f32], spec: &CodecSpec) -> Result<LossyBlob> {
    if spec.codec != CodecId::PredictQuantize {
        return Err(Error::InvalidSpec("spec does not select predict_quantize"));
    }
    compress(values, spec)
}

pub fn decompress_pq(blob: &LossyBlob) -> Result<Vec<f32>> {
    if blob.codec != CodecId::PredictQuantize {
        return Err(Error::InvalidSpec("blob was not produced by predict_quantize"));
    }
    decompress(blob)
}

pub fn compress_cbt(values: &[f32], spec: &CodecSpec) -> Result<LossyBlob> {
    if spec.codec != CodecId::ConstBlockTruncate {
        return Err(Error::InvalidSpec("spec does not select const_block_truncate"));
    }
    compress(values, spec)
}

pub fn decompress_cbt(blob: &LossyBlob) -> Result<Vec<f32>> {
    if blob.codec != CodecId::ConstBlockTruncate {
        return Err(Error::InvalidSpec("blob was not produced by const_block_truncate"));
    }
    decompress(blob)
}

/// Largest pointwise absolute difference, in f64.
pub fn max_abs_error(original: &[f32], reconstructed: &[f32]) -> f64 {
    original
        .iter()
        .zip(reconstructed)
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn resolve_bounds() {
        let unit = [0.0f32, 0.25, 1.0];
        assert_eq!(resolve_abs_bound(ErrorBound::relative(0.01), &unit).unwrap(), 0.01);
        assert_eq!(resolve_abs_bound(ErrorBound::relative(0.1), &[3.0; 5]).unwrap(), 0.0);
        assert_eq!(resolve_abs_bound(ErrorBound::absolute(0.5), &[-7.0, 9.0]).unwrap(), 0.5);
        assert_eq!(resolve_abs_bound(ErrorBound::absolute(0.5), &[]), Err(Error::EmptyInput));
        assert!(resolve_abs_bound(ErrorBound::relative(1.5), &unit).is_err());
        assert!(resolve_abs_bound(ErrorBound::absolute(-1.0), &unit).is_err());
        assert_eq!(
            resolve_abs_bound(ErrorBound::absolute(0.1), &[1.0, f32::NAN]),
            Err(Error::NonFiniteInput)
        );
    }

    #[test]
    fn spec_validation() {
        let mut s = CodecSpec::pq_rel(1e-2);
        assert!(s.validate().is_ok());
        s.block_size = 4;
        assert!(s.validate().is_err());
        s.block_size = 8;
        s.quant_radius = 1;
        assert!(s.validate().is_err());
    }

    #[test]
    fn empty_blob_decompresses_to_empty() {
        for spec in [CodecSpec::pq_rel(0.1), CodecSpec::cbt_rel(0.1)] {
            let blob = compress(&[], &spec).unwrap();
            assert_eq!(blob.element_count, 0);
            assert!(decompress(&blob).unwrap().is_empty());
        }
    }

    #[test]
    fn blob_frame_round_trip_and_corruption() {
        let values: Vec<f32> = (0..500).map(|i| libm::sinf(i as f32 * 0.05)).collect();
        let blob = compress(&values, &CodecSpec::pq_rel(1e-3)).unwrap();
        let bytes = blob.to_bytes();
        assert_eq!(bytes.len(), blob.serialized_len());
        assert_eq!(LossyBlob::from_bytes(&bytes).unwrap(), blob);
        let mut bad = bytes.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 0x01;
        assert!(matches!(
            LossyBlob::from_bytes(&bad),
            Err(Error::ChecksumMismatch { .. } | Error::CorruptPayload(_))
        ));
    }

    #[test]
    fn flipped_payload_byte_is_detected_by_codec() {
        let values: Vec<f32> = (0..2000).map(|i| libm::cosf(i as f32 * 0.01)).collect();
        let mut blob = compress(&values, &CodecSpec::pq_rel(1e-3)).unwrap();
        let n = blob.payload.len();
        blob.payload[n / 2] ^= 0x40;
        assert!(matches!(
            decompress(&blob),
            Err(Error::CorruptPayload(_) | Error::ChecksumMismatch { .. } | Error::CorruptStream(_))
        ));
    }

    #[test]
    fn wrong_codec_entry_points() {
        assert!(compress_pq(&[1.0], &CodecSpec::cbt_rel(0.1)).is_err());
        assert!(compress_cbt(&[1.0], &CodecSpec::pq_rel(0.1)).is_err());
    }

    struct Identity;

    impl LossyCodec for Identity {
        fn id(&self) -> CodecId {
            CodecId::External(200)
        }
        fn name(&self) -> &str {
            "identity"
        }
        fn encode(&self, values: &[f32], _: f64, _: &CodecSpec) -> Result<Vec<u8>> {
            Ok(values.iter().flat_map(|v| v.to_le_bytes()).collect())
        }
        fn decode(&self, payload: &[u8], _: usize, _: f64) -> Result<Vec<f32>> {
            Ok(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
    }

    #[test]
    fn external_codec_registration() {
        let mut reg = CodecRegistry::default();
        assert!(reg.register(Box::new(Identity)).is_ok());
        assert!(reg.register(Box::new(Identity)).is_err());
        let spec = CodecSpec::new(CodecId::External(200), ErrorBound::absolute(0.0));
        let blob = reg.compress(&[1.5, -2.0], &spec).unwrap();
        assert_eq!(reg.decompress(&blob).unwrap(), vec![1.5, -2.0]);
        assert!(decompress(&blob).is_err());
    }
}
