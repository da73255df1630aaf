//! Prediction + quantization codec (1D Lorenzo branch).
//!
//! Each element is predicted by the previously *reconstructed* value
//! (the first by `0`). The residual is quantized into a bin of width
//! `2 * eps_abs`; elements whose bin index exceeds the radius, or whose
//! reconstruction would round outside the bound in `f32`, are stored as
//! exact literals. Bin indices are Huffman coded and the whole stream is
//! passed through the lossless back end.
//!
//! Payload: `mode u8` followed by
//!
//! ```text
//! CONST     f32                           every element bit-identical
//! RAW       f32 x n                       eps_abs == 0 and not constant
//! PREDICTED lossless frame of:
//!           radius u32 | literal-count u32 | f32 x literal-count
//!           | huffman table | code bits
//! ```

use alloc::vec;
use alloc::vec::Vec;

use super::bits::{BitReader, BitWriter};
use super::huffman;
use crate::bytes::{Reader, Writer};
use crate::lossless::{lossless_compress, lossless_decompress, LosslessSpec};
use crate::{Error, Result};

const MODE_CONST: u8 = 0;
const MODE_RAW: u8 = 1;
const MODE_PREDICTED: u8 = 2;

/// Symbol reserved for "unpredictable, read the next literal".
pub const LITERAL_SYMBOL: u32 = 0;

/// Output of the prediction/quantization pass before entropy coding.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    /// `0` for literals, otherwise `code + radius + 1`.
    pub symbols: Vec<u32>,
    pub literals: Vec<f32>,
    pub reconstruction: Vec<f32>,
}

impl Quantized {
    /// Signed bin codes; `None` marks a literal.
    pub fn codes(&self, radius: u32) -> Vec<Option<i64>> {
        self.symbols
            .iter()
            .map(|&s| (s != LITERAL_SYMBOL).then(|| i64::from(s) - i64::from(radius) - 1))
            .collect()
    }
}

#[inline]
fn reconstruct(pred: f32, two_eps: f64, code: i64) -> f32 {
    (f64::from(pred) + two_eps * code as f64) as f32
}

pub fn quantize(values: &[f32], eps_abs: f64, radius: u32) -> Quantized {
    let two_eps = 2.0 * eps_abs;
    let mut symbols = Vec::with_capacity(values.len());
    let mut literals = Vec::new();
    let mut reconstruction = Vec::with_capacity(values.len());
    let mut pred = 0.0f32;
    for &x in values {
        let xf = f64::from(x);
        let scaled = libm::round((xf - f64::from(pred)) / two_eps);
        if scaled.abs() <= f64::from(radius) {
            let code = scaled as i64;
            let recon = reconstruct(pred, two_eps, code);
            if (xf - f64::from(recon)).abs() <= eps_abs {
                symbols.push((code + i64::from(radius) + 1) as u32);
                reconstruction.push(recon);
                pred = recon;
                continue;
            }
        }
        symbols.push(LITERAL_SYMBOL);
        literals.push(x);
        reconstruction.push(x);
        pred = x;
    }
    Quantized { symbols, literals, reconstruction }
}

pub fn encode(values: &[f32], eps_abs: f64, radius: u32) -> Result<Vec<u8>> {
    let first = values[0].to_bits();
    if values.iter().all(|v| v.to_bits() == first) {
        let mut w = Writer::new();
        w.u8(MODE_CONST).u32(first);
        return Ok(w.finish());
    }
    if eps_abs == 0.0 {
        let mut w = Writer::with_capacity(1 + 4 * values.len());
        w.u8(MODE_RAW);
        values.iter().for_each(|&v| {
            w.f32(v);
        });
        return Ok(w.finish());
    }

    let q = quantize(values, eps_abs, radius);
    let alphabet = 2 * radius as usize + 2;
    let mut freqs = vec![0u64; alphabet];
    for &s in &q.symbols {
        freqs[s as usize] += 1;
    }
    let lens = huffman::code_lengths(&freqs);
    let enc = huffman::Encoder::from_lengths(&lens);
    let mut bits = BitWriter::new();
    for &s in &q.symbols {
        enc.put(&mut bits, s);
    }

    let mut inner = Writer::with_capacity(8 + 4 * q.literals.len());
    inner.u32(radius).u32(q.literals.len() as u32);
    for &l in &q.literals {
        inner.f32(l);
    }
    let mut inner = inner.finish();
    huffman::write_table(&mut inner, &lens);
    inner.extend_from_slice(&bits.finish());

    let mut out = vec![MODE_PREDICTED];
    out.extend_from_slice(&lossless_compress(&inner, LosslessSpec::default())?);
    Ok(out)
}

pub fn decode(payload: &[u8], n: usize, eps_abs: f64) -> Result<Vec<f32>> {
    let (&mode, rest) = payload.split_first().ok_or(Error::CorruptPayload("empty payload"))?;
    let corrupt = |e: Error| match e {
        Error::TruncatedFile { .. } => Error::CorruptPayload("truncated payload"),
        e => e,
    };
    match mode {
        MODE_CONST => {
            let v = Reader::new(rest).f32().map_err(corrupt)?;
            Ok(vec![v; n])
        }
        MODE_RAW => {
            if rest.len() != 4 * n {
                return Err(Error::CorruptPayload("raw payload length mismatch"));
            }
            Ok(rest.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        }
        MODE_PREDICTED => {
            let inner = lossless_decompress(rest)?;
            decode_predicted(&inner, n, eps_abs).map_err(corrupt)
        }
        _ => Err(Error::CorruptPayload("unknown payload mode")),
    }
}

fn decode_predicted(inner: &[u8], n: usize, eps_abs: f64) -> Result<Vec<f32>> {
    let mut r = Reader::new(inner);
    let radius = r.u32()?;
    if !(2..=super::MAX_QUANT_RADIUS).contains(&radius) {
        return Err(Error::CorruptPayload("quantization radius out of range"));
    }
    let literal_count = r.u32()? as usize;
    if literal_count > n || literal_count * 4 > r.remaining() {
        return Err(Error::CorruptPayload("literal count out of range"));
    }
    let mut literals = Vec::with_capacity(literal_count);
    for _ in 0..literal_count {
        literals.push(r.f32()?);
    }
    let lens = huffman::read_table(&mut r, 2 * radius as usize + 2)?;
    let dec = huffman::Decoder::from_lengths(&lens)?;
    let mut bits = BitReader::new(r.take(r.remaining())?);

    let two_eps = 2.0 * eps_abs;
    let mut literals = literals.into_iter();
    let mut out = Vec::with_capacity(n);
    let mut pred = 0.0f32;
    for _ in 0..n {
        let s = dec.next(&mut bits)?;
        let v = if s == LITERAL_SYMBOL {
            literals.next().ok_or(Error::CorruptPayload("literal list exhausted"))?
        } else {
            reconstruct(pred, two_eps, i64::from(s) - i64::from(radius) - 1)
        };
        out.push(v);
        pred = v;
    }
    if literals.next().is_some() {
        return Err(Error::CorruptPayload("unused literals"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{compress, decompress, max_abs_error, CodecSpec, ErrorBound};
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hand_traced_recurrence() {
        // p0 = 0: r = 0 -> q 0; p1 = 0.0: r = 0.4 -> q = 0.4 / 0.2 = 2;
        // p2 = 0.4: r = 0.4 -> q 2. Reconstruction exact.
        let values = [0.0f32, 0.4, 0.8];
        let q = quantize(&values, 0.1, 32_768);
        assert_eq!(q.codes(32_768), vec![Some(0), Some(2), Some(2)]);
        assert_eq!(q.reconstruction, values);
        assert!(q.literals.is_empty());

        let spec = CodecSpec::new(super::super::CodecId::PredictQuantize, ErrorBound::absolute(0.1));
        let blob = compress(&values, &spec).unwrap();
        let back = decompress(&blob).unwrap();
        assert_eq!(back, values);
        assert_eq!(max_abs_error(&values, &back), 0.0);
    }

    #[test]
    fn constant_array_compresses_past_100x() {
        let values = vec![0.731f32; 10_000];
        for eps in [1e-6, 1e-2, 1.0] {
            let spec = CodecSpec::new(super::super::CodecId::PredictQuantize, ErrorBound::absolute(eps));
            let blob = compress(&values, &spec).unwrap();
            let ratio = (4 * values.len()) as f64 / blob.serialized_len() as f64;
            assert!(ratio > 100.0, "ratio {ratio}");
            assert_eq!(decompress(&blob).unwrap(), values);
        }
        // Without the constant fast path: the first value is out of range, so
        // one literal followed by zero codes.
        let q = quantize(&values, 1e-6, 32_768);
        assert_eq!(q.literals.len(), 1);
        assert!(q.codes(32_768)[1..].iter().all(|c| *c == Some(0)));
    }

    #[test]
    fn uniform_noise_compresses_poorly() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f32> = (0..100_000).map(|_| rng.random::<f32>()).collect();
        let spec = CodecSpec::new(super::super::CodecId::PredictQuantize, ErrorBound::absolute(1e-6));
        let blob = compress(&values, &spec).unwrap();
        let ratio = (4 * values.len()) as f64 / blob.serialized_len() as f64;
        assert!(ratio <= 1.3, "ratio {ratio}");
        assert!(max_abs_error(&values, &decompress(&blob).unwrap()) <= 1e-6);
    }

    #[test]
    fn zero_bound_falls_back_to_exact_literals() {
        let values = [1.0f32, -3.5, 2.25, 1e-30];
        let spec = CodecSpec::new(super::super::CodecId::PredictQuantize, ErrorBound::absolute(0.0));
        let blob = compress(&values, &spec).unwrap();
        assert_eq!(blob.payload[0], MODE_RAW);
        assert_eq!(decompress(&blob).unwrap(), values);
    }

    #[test]
    fn outliers_reconstruct_bit_exactly() {
        let mut values: Vec<f32> = (0..1000).map(|i| i as f32 * 1e-3).collect();
        values[500] = 1.0e6;
        values[501] = -7.123_457;
        let spec = CodecSpec::new(super::super::CodecId::PredictQuantize, ErrorBound::absolute(1e-4));
        let blob = compress(&values, &spec).unwrap();
        let back = decompress(&blob).unwrap();
        assert_eq!(back[500].to_bits(), values[500].to_bits());
        assert_eq!(back[501].to_bits(), values[501].to_bits());
        assert!(max_abs_error(&values, &back) <= 1e-4);
    }

    #[test]
    fn small_radius_forces_literals() {
        let values: Vec<f32> = (0..64).map(|i| (i * i) as f32).collect();
        let q = quantize(&values, 0.5, 2);
        assert!(!q.literals.is_empty());
        assert!(max_abs_error(&values, &q.reconstruction) <= 0.5);
    }
}
