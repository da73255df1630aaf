//! Lossless byte codec for metadata entries and the lossy code stream.
//!
//! Two frame shapes share a leading codec byte and a trailing CRC32 over all
//! preceding frame bytes:
//!
//! ```text
//! store:   0 | payload | crc32                                  (5 bytes overhead)
//! deflate: 1 | raw-len u64 | comp-len u64 | raw DEFLATE | crc32 (21 bytes overhead)
//! ```
//!
//! A deflate request falls back to a store frame whenever the deflate frame
//! would be larger, so a frame never exceeds its input by more than 5 bytes.

use alloc::vec::Vec;

use crate::bytes::{verify_trailing_crc, Reader, Writer};
use crate::{Error, Result};

pub const STORE_OVERHEAD: usize = 5;
pub const DEFLATE_OVERHEAD: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum LosslessCodec {
    Store = 0,
    Deflate = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LosslessSpec {
    pub codec: LosslessCodec,
    /// 1..=9 for deflate; ignored for store.
    pub level: u8,
}

impl Default for LosslessSpec {
    fn default() -> Self {
        Self { codec: LosslessCodec::Deflate, level: 6 }
    }
}

impl LosslessSpec {
    pub const STORE: Self = Self { codec: LosslessCodec::Store, level: 0 };

    pub fn deflate(level: u8) -> Self {
        Self { codec: LosslessCodec::Deflate, level }
    }

    pub fn validate(&self) -> Result<()> {
        if self.codec == LosslessCodec::Deflate && !(1..=9).contains(&self.level) {
            return Err(Error::InvalidConfig("deflate level must be in 1..=9"));
        }
        Ok(())
    }
}

fn store_frame(bytes: &[u8]) -> Vec<u8> {
    let mut w = Writer::with_capacity(bytes.len() + STORE_OVERHEAD);
    w.u8(LosslessCodec::Store as u8).bytes(bytes).crc_from(0);
    w.finish()
}

pub fn lossless_compress(bytes: &[u8], spec: LosslessSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    if spec.codec == LosslessCodec::Store {
        return Ok(store_frame(bytes));
    }
    let packed = miniz_oxide::deflate::compress_to_vec(bytes, spec.level);
    if packed.len() + DEFLATE_OVERHEAD >= bytes.len() + STORE_OVERHEAD {
        return Ok(store_frame(bytes));
    }
    let mut w = Writer::with_capacity(packed.len() + DEFLATE_OVERHEAD);
    w.u8(LosslessCodec::Deflate as u8)
        .u64(bytes.len() as u64)
        .u64(packed.len() as u64)
        .bytes(&packed)
        .crc_from(0);
    Ok(w.finish())
}

pub fn lossless_decompress(frame: &[u8]) -> Result<Vec<u8>> {
    if frame.len() < STORE_OVERHEAD {
        return Err(Error::CorruptStream("frame shorter than its header"));
    }
    let body = verify_trailing_crc(frame, 0).map_err(|e| match e {
        Error::TruncatedFile { .. } => Error::CorruptStream("truncated frame"),
        e => e,
    })?;
    match body[0] {
        0 => Ok(body[1..].to_vec()),
        1 => {
            let mut r = Reader::new(&body[1..]);
            let corrupt = |_| Error::CorruptStream("truncated deflate header");
            let raw_len = r.u64().map_err(corrupt)?;
            let comp_len = r.u64().map_err(corrupt)?;
            if comp_len != r.remaining() as u64 {
                return Err(Error::CorruptStream("compressed length does not match frame"));
            }
            let raw_len = usize::try_from(raw_len)
                .map_err(|_| Error::CorruptStream("raw length overflow"))?;
            let out = miniz_oxide::inflate::decompress_to_vec_with_limit(r.take(r.remaining())?, raw_len)
                .map_err(|_| Error::CorruptStream("invalid deflate data"))?;
            if out.len() != raw_len {
                return Err(Error::CorruptStream("decoded length differs from header"));
            }
            Ok(out)
        }
        _ => Err(Error::CorruptStream("unknown lossless codec id")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};

    #[test]
    fn empty_input_round_trips() {
        for spec in [LosslessSpec::STORE, LosslessSpec::deflate(6)] {
            let f = lossless_compress(&[], spec).unwrap();
            assert_eq!(f.len(), STORE_OVERHEAD);
            assert!(lossless_decompress(&f).unwrap().is_empty());
        }
    }

    #[test]
    fn zeros_compress_well() {
        let data = vec![0u8; 1 << 20];
        let f = lossless_compress(&data, LosslessSpec::deflate(6)).unwrap();
        assert!(data.len() as f64 / f.len() as f64 > 100.0);
        assert_eq!(lossless_decompress(&f).unwrap(), data);
    }

    #[test]
    fn random_bytes_fall_back_to_store() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut data = vec![0u8; 1 << 20];
        rng.fill_bytes(&mut data);
        let f = lossless_compress(&data, LosslessSpec::deflate(9)).unwrap();
        assert_eq!(f[0], LosslessCodec::Store as u8);
        assert!(f.len() as f64 / data.len() as f64 <= 1.01);
        assert_eq!(lossless_decompress(&f).unwrap(), data);
    }

    #[test]
    fn store_frame_returns_payload() {
        let f = lossless_compress(b"abc", LosslessSpec::STORE).unwrap();
        assert_eq!(&f[1..4], b"abc");
        assert_eq!(lossless_decompress(&f).unwrap(), b"abc");
    }

    #[test]
    fn truncated_stream_is_corrupt() {
        let data = vec![7u8; 4096];
        let f = lossless_compress(&data, LosslessSpec::deflate(6)).unwrap();
        for cut in [1, 3, f.len() / 2, f.len() - 1] {
            let err = lossless_decompress(&f[..cut]).unwrap_err();
            assert!(
                matches!(err, Error::CorruptStream(_) | Error::ChecksumMismatch { .. }),
                "{err:?}"
            );
        }
    }

    #[test]
    fn level_out_of_range() {
        assert!(lossless_compress(b"x", LosslessSpec::deflate(0)).is_err());
        assert!(lossless_compress(b"x", LosslessSpec::deflate(10)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn round_trip_and_bounded_expansion(data in prop::collection::vec(any::<u8>(), 0..256), level in 1u8..=9) {
            let f = lossless_compress(&data, LosslessSpec::deflate(level)).unwrap();
            prop_assert!(f.len() <= data.len() + 16);
            prop_assert_eq!(lossless_decompress(&f).unwrap(), data);
        }
    }
}
