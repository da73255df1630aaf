//! Named tensors, ordered state dictionaries and the `FSZT` checkpoint bytes.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "FSZT" | version u16 | entry-count u32
//!   per entry: name-len u16 | name (UTF-8) | dtype u8 | rank u8 | dims u64 x rank
//!              | payload-len u64 | payload
//! | CRC32 of everything after the magic
//! ```

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bytes::{verify_trailing_crc, Reader, Writer};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FSZT";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum DType {
    F32 = 0,
    F64 = 1,
    I64 = 2,
    U8 = 3,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
            DType::I64 => 8,
            DType::U8 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => DType::F32,
            1 => DType::F64,
            2 => DType::I64,
            3 => DType::U8,
            t => return Err(Error::UnknownDtype(t)),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F32 => "f32",
            DType::F64 => "f64",
            DType::I64 => "i64",
            DType::U8 => "u8",
        }
    }
}

/// Flat row-major tensor storage.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
    I64(Vec<i64>),
    U8(Vec<u8>),
}

impl TensorData {
    pub fn dtype(&self) -> DType {
        match self {
            TensorData::F32(_) => DType::F32,
            TensorData::F64(_) => DType::F64,
            TensorData::I64(_) => DType::I64,
            TensorData::U8(_) => DType::U8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
            TensorData::I64(v) => v.len(),
            TensorData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.dtype().size()
    }

    /// Little-endian bytes of every element in order.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        match self {
            TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::I64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TensorData::U8(v) => out.extend_from_slice(v),
        }
        out
    }

    pub fn from_le_bytes(dtype: DType, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(dtype.size()) {
            return Err(Error::CorruptPayload("byte length is not a multiple of the dtype size"));
        }
        Ok(match dtype {
            DType::F32 => TensorData::F32(
                bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
            DType::F64 => TensorData::F64(
                bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
            DType::I64 => TensorData::I64(
                bytes.chunks_exact(8).map(|c| i64::from_le_bytes(c.try_into().unwrap())).collect(),
            ),
            DType::U8 => TensorData::U8(bytes.to_vec()),
        })
    }

    /// True when no element is NaN or infinite; integer data is always finite.
    pub fn all_finite(&self) -> bool {
        match self {
            TensorData::F32(v) => v.iter().all(|x| x.is_finite()),
            TensorData::F64(v) => v.iter().all(|x| x.is_finite()),
            _ => true,
        }
    }
}

fn element_count(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// A named, shaped tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: TensorData,
}

impl TensorRecord {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: TensorData) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.len() > u16::MAX as usize {
            return Err(Error::EmptyName);
        }
        if shape.len() > u8::MAX as usize || shape.contains(&0) {
            return Err(Error::ShapeMismatch { name, expected: 0, found: data.len() });
        }
        let expected = element_count(&shape);
        if expected != data.len() {
            return Err(Error::ShapeMismatch { name, expected, found: data.len() });
        }
        Ok(Self { name, shape, data })
    }

    pub fn f32(name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        Self::new(name, shape, TensorData::F32(data))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut TensorData {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_parts(self) -> (String, Vec<usize>, TensorData) {
        (self.name, self.shape, self.data)
    }
}

/// Row-major flat view of an `f32` tensor.
pub fn flatten(t: &TensorRecord) -> Result<&[f32]> {
    match &t.data {
        TensorData::F32(v) => Ok(v),
        _ => Err(Error::WrongDtype(t.name.clone())),
    }
}

/// Ordered collection of uniquely named tensors; iteration follows insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateDict {
    entries: Vec<TensorRecord>,
    index: BTreeMap<String, usize>,
}

impl StateDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, record: TensorRecord) -> Result<()> {
        if self.index.contains_key(record.name()) {
            return Err(Error::DuplicateName(record.name.clone()));
        }
        self.index.insert(record.name.clone(), self.entries.len());
        self.entries.push(record);
        Ok(())
    }

    pub fn from_records(records: impl IntoIterator<Item = TensorRecord>) -> Result<Self> {
        let mut sd = Self::new();
        for r in records {
            sd.insert(r)?;
        }
        Ok(sd)
    }

    pub fn get(&self, name: &str) -> Option<&TensorRecord> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut TensorRecord> {
        self.index.get(name).map(|&i| &mut self.entries[i])
    }

    pub fn iter(&self) -> core::slice::Iter<'_, TensorRecord> {
        self.entries.iter()
    }

    pub fn iter_mut(&mut self) -> core::slice::IterMut<'_, TensorRecord> {
        self.entries.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name())
    }

    /// Sum of raw tensor payload bytes.
    pub fn payload_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.data.byte_len()).sum()
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|e| e.len()).sum()
    }

    /// Same names, order, shapes and dtypes.
    pub fn same_structure(&self, other: &StateDict) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.name == b.name && a.shape == b.shape && a.dtype() == b.dtype())
    }

    /// Bitwise equality of every field, including float bit patterns.
    pub fn bit_eq(&self, other: &StateDict) -> bool {
        self.same_structure(other)
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| a.data.to_le_bytes() == b.data.to_le_bytes())
    }
}

impl<'a> IntoIterator for &'a StateDict {
    type Item = &'a TensorRecord;
    type IntoIter = core::slice::Iter<'a, TensorRecord>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

pub(crate) fn write_header(w: &mut Writer, name: &str, dtype: DType, shape: &[usize]) {
    w.u16(name.len() as u16).bytes(name.as_bytes()).u8(dtype as u8).u8(shape.len() as u8);
    for &d in shape {
        w.u64(d as u64);
    }
}

pub(crate) fn read_header(r: &mut Reader<'_>) -> Result<(String, DType, Vec<usize>)> {
    let name_len = r.u16()? as usize;
    let name = core::str::from_utf8(r.take(name_len)?)
        .map_err(|_| Error::CorruptPayload("tensor name is not UTF-8"))?;
    if name.is_empty() {
        return Err(Error::EmptyName);
    }
    let dtype = DType::from_tag(r.u8()?)?;
    let rank = r.u8()? as usize;
    let mut shape = Vec::with_capacity(rank);
    let mut bytes = dtype.size();
    for _ in 0..rank {
        let d = usize::try_from(r.u64()?).map_err(|_| Error::CorruptPayload("dimension overflow"))?;
        bytes = bytes.checked_mul(d).ok_or(Error::CorruptPayload("tensor size overflows"))?;
        shape.push(d);
    }
    Ok((name.into(), dtype, shape))
}

/// Serializes a state dict to `FSZT` bytes. Output is a pure function of the input.
pub fn encode_checkpoint(state: &StateDict) -> Vec<u8> {
    let mut w = Writer::with_capacity(state.payload_bytes() + 64 * state.len() + 14);
    w.bytes(CHECKPOINT_MAGIC).u16(CHECKPOINT_VERSION).u32(state.len() as u32);
    for t in state {
        write_header(&mut w, t.name(), t.dtype(), t.shape());
        let payload = t.data.to_le_bytes();
        w.u64(payload.len() as u64).bytes(&payload);
    }
    w.crc_from(4);
    w.finish()
}

/// Exact length of [`encode_checkpoint`]'s output.
pub fn checkpoint_size(state: &StateDict) -> usize {
    14 + state
        .iter()
        .map(|t| 2 + t.name().len() + 2 + 8 * t.shape().len() + 8 + t.data.byte_len())
        .sum::<usize>()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<StateDict> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic { expected: "FSZT" });
    }
    let version = r.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = r.u32()? as usize;
    let mut state = StateDict::new();
    for _ in 0..count {
        let (name, dtype, shape) = read_header(&mut r)?;
        let payload_len = r.len_u64()?;
        let expected = element_count(&shape);
        if payload_len != expected * dtype.size() {
            return Err(Error::ShapeMismatch {
                name,
                expected,
                found: payload_len / dtype.size(),
            });
        }
        let data = TensorData::from_le_bytes(dtype, r.take(payload_len)?)?;
        state.insert(TensorRecord::new(name, shape, data)?)?;
    }
    finish_with_crc(bytes, &mut r)?;
    Ok(state)
}

/// Expects exactly the trailing CRC32 (over `bytes[4..]`) to remain.
pub(crate) fn finish_with_crc(bytes: &[u8], r: &mut Reader<'_>) -> Result<()> {
    match r.remaining() {
        4 => verify_trailing_crc(bytes, 4).map(|_| ()),
        n if n < 4 => Err(Error::TruncatedFile { offset: r.position(), needed: 4 - n }),
        _ => Err(Error::CorruptPayload("trailing bytes after last entry")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_entry() -> StateDict {
        StateDict::from_records([
            TensorRecord::f32("layer1.weight", vec![2, 2], vec![1.0, -2.5, 3.25, 0.0]).unwrap(),
            TensorRecord::new("layer1.steps", vec![1], TensorData::I64(vec![42])).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn round_trip_two_entries() {
        let sd = two_entry();
        let back = decode_checkpoint(&encode_checkpoint(&sd)).unwrap();
        assert!(back.bit_eq(&sd));
        assert_eq!(back.names().collect::<Vec<_>>(), ["layer1.weight", "layer1.steps"]);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_checkpoint(&two_entry());
        bytes[..4].copy_from_slice(b"XXXX");
        assert_eq!(decode_checkpoint(&bytes), Err(Error::BadMagic { expected: "FSZT" }));
    }

    #[test]
    fn shape_mismatch_on_short_payload() {
        // Hand-built entry: shape [3,3] but only 8 f32 values.
        let mut w = Writer::new();
        w.bytes(CHECKPOINT_MAGIC).u16(1).u32(1);
        write_header(&mut w, "w", DType::F32, &[3, 3]);
        w.u64(32);
        for i in 0..8 {
            w.f32(i as f32);
        }
        w.crc_from(4);
        match decode_checkpoint(&w.finish()) {
            Err(Error::ShapeMismatch { expected: 9, found: 8, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_name_rejected_on_load() {
        let mut w = Writer::new();
        w.bytes(CHECKPOINT_MAGIC).u16(1).u32(2);
        for _ in 0..2 {
            write_header(&mut w, "a", DType::U8, &[1]);
            w.u64(1).u8(7);
        }
        w.crc_from(4);
        assert_eq!(decode_checkpoint(&w.finish()), Err(Error::DuplicateName("a".into())));
    }

    #[test]
    fn empty_state_is_header_only() {
        let bytes = encode_checkpoint(&StateDict::new());
        assert_eq!(bytes.len(), 4 + 2 + 4 + 4);
        assert!(decode_checkpoint(&bytes).unwrap().is_empty());
    }

    #[test]
    fn ieee754_little_endian_payload() {
        let sd = StateDict::from_records([TensorRecord::f32("x", vec![2], vec![1.0, 2.0]).unwrap()])
            .unwrap();
        let bytes = encode_checkpoint(&sd);
        let needle = [0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40];
        assert!(bytes.windows(8).any(|w| w == needle));
    }

    #[test]
    fn size_formula_matches_encoding() {
        assert_eq!(checkpoint_size(&two_entry()), encode_checkpoint(&two_entry()).len());
    }

    #[test]
    fn deterministic_bytes() {
        assert_eq!(encode_checkpoint(&two_entry()), encode_checkpoint(&two_entry()));
    }

    #[test]
    fn truncated_and_flipped() {
        let bytes = encode_checkpoint(&two_entry());
        for cut in [2, 9, bytes.len() - 9, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::TruncatedFile { .. })));
        }
        let mut flipped = bytes.clone();
        flipped[20] ^= 0x10;
        assert!(matches!(decode_checkpoint(&flipped), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn flatten_checks_dtype() {
        let t = TensorRecord::f32("w", vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(flatten(&t).unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        let s = TensorRecord::f32("s", vec![1], vec![9.0]).unwrap();
        assert_eq!(flatten(&s).unwrap(), &[9.0]);
        let i = TensorRecord::new("n", vec![1], TensorData::I64(vec![1])).unwrap();
        assert_eq!(flatten(&i), Err(Error::WrongDtype("n".into())));
    }

    #[test]
    fn record_rejects_bad_shape() {
        assert!(TensorRecord::f32("w", vec![3, 3], vec![0.0; 8]).is_err());
        assert!(TensorRecord::f32("", vec![1], vec![0.0]).is_err());
    }
}
