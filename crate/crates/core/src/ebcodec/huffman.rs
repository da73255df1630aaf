//! Canonical, length-limited Huffman coding over a dense `u32` alphabet.
//!
//! The table is serialized as the list of used symbols (LEB128 gaps) with
//! their code lengths; codes are reassigned canonically on both sides.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::bits::{BitReader, BitWriter};
use crate::bytes::Reader;
use crate::{Error, Result};

pub const MAX_CODE_LEN: u8 = 24;

/// Code lengths for every symbol with non-zero frequency, limited to
/// [`MAX_CODE_LEN`] by repeatedly flattening the frequency distribution.
pub fn code_lengths(freqs: &[u64]) -> Vec<u8> {
    let mut lens = vec![0u8; freqs.len()];
    let used: Vec<usize> = (0..freqs.len()).filter(|&s| freqs[s] > 0).collect();
    match used.len() {
        0 => return lens,
        1 => {
            lens[used[0]] = 1;
            return lens;
        }
        _ => {}
    }
    let mut weights: Vec<u64> = used.iter().map(|&s| freqs[s]).collect();
    loop {
        let depths = tree_depths(&weights);
        if depths.iter().all(|&d| d <= MAX_CODE_LEN as u32) {
            for (&s, &d) in used.iter().zip(&depths) {
                lens[s] = d as u8;
            }
            return lens;
        }
        for w in &mut weights {
            *w = (*w >> 1).max(1);
        }
    }
}

fn tree_depths(weights: &[u64]) -> Vec<u32> {
    // Nodes 0..n are leaves; internal nodes are appended. Ties break on node
    // index so the tree (and hence every length) is deterministic.
    let n = weights.len();
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        weights.iter().enumerate().map(|(i, &w)| Reverse((w, i))).collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((wa + wb, next)));
        next += 1;
    }
    let root = next - 1;
    let mut depth = vec![0u32; 2 * n - 1];
    for node in (0..root).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    depth.truncate(n);
    depth
}

/// Canonical codes from lengths: (code, len) per symbol, len 0 for unused.
fn canonical_codes(lens: &[u8]) -> Vec<(u32, u8)> {
    let mut order: Vec<usize> = (0..lens.len()).filter(|&s| lens[s] > 0).collect();
    order.sort_by_key(|&s| (lens[s], s));
    let mut codes = vec![(0u32, 0u8); lens.len()];
    let mut code = 0u32;
    let mut prev_len = 0u8;
    for s in order {
        let len = lens[s];
        if prev_len != 0 {
            code = (code + 1) << (len - prev_len);
        }
        prev_len = len;
        codes[s] = (code, len);
    }
    codes
}

pub struct Encoder {
    codes: Vec<(u32, u8)>,
}

impl Encoder {
    pub fn from_lengths(lens: &[u8]) -> Self {
        Self { codes: canonical_codes(lens) }
    }

    pub fn put(&self, w: &mut BitWriter, symbol: u32) {
        let (code, len) = self.codes[symbol as usize];
        debug_assert!(len > 0, "symbol {symbol} has no code");
        w.write(code, u32::from(len));
    }
}

pub struct Decoder {
    /// Symbols sorted canonically by (length, symbol).
    sorted: Vec<u32>,
    first_code: [u32; MAX_CODE_LEN as usize + 1],
    first_index: [u32; MAX_CODE_LEN as usize + 1],
    count: [u32; MAX_CODE_LEN as usize + 1],
}

impl Decoder {
    pub fn from_lengths(lens: &[u8]) -> Result<Self> {
        let mut count = [0u32; MAX_CODE_LEN as usize + 1];
        let mut kraft = 0u64;
        for &l in lens {
            if l > MAX_CODE_LEN {
                return Err(Error::CorruptPayload("huffman code length too large"));
            }
            if l > 0 {
                count[l as usize] += 1;
                kraft += 1u64 << (MAX_CODE_LEN - l);
            }
        }
        if kraft > 1u64 << MAX_CODE_LEN {
            return Err(Error::CorruptPayload("huffman lengths violate the Kraft inequality"));
        }
        let mut sorted: Vec<u32> = (0..lens.len() as u32).filter(|&s| lens[s as usize] > 0).collect();
        sorted.sort_by_key(|&s| (lens[s as usize], s));
        let mut first_code = [0u32; MAX_CODE_LEN as usize + 1];
        let mut first_index = [0u32; MAX_CODE_LEN as usize + 1];
        let mut code = 0u32;
        let mut index = 0u32;
        for len in 1..=MAX_CODE_LEN as usize {
            code <<= 1;
            first_code[len] = code;
            first_index[len] = index;
            code += count[len];
            index += count[len];
        }
        Ok(Self { sorted, first_code, first_index, count })
    }

    pub fn next(&self, r: &mut BitReader<'_>) -> Result<u32> {
        let mut code = 0u32;
        for len in 1..=MAX_CODE_LEN as usize {
            code = (code << 1) | r.bit()?;
            let offset = code.wrapping_sub(self.first_code[len]);
            if code >= self.first_code[len] && offset < self.count[len] {
                return Ok(self.sorted[(self.first_index[len] + offset) as usize]);
            }
        }
        Err(Error::CorruptPayload("invalid huffman code"))
    }
}

fn put_varint(out: &mut Vec<u8>, mut v: u32) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn get_varint(r: &mut Reader<'_>) -> Result<u32> {
    let mut v = 0u32;
    for shift in (0..35).step_by(7) {
        let b = r.u8()?;
        v |= u32::from(b & 0x7f).checked_shl(shift).unwrap_or(0);
        if b & 0x80 == 0 {
            return Ok(v);
        }
    }
    Err(Error::CorruptPayload("varint too long"))
}

/// `used-count u32 | (symbol gap varint, length u8)*`
pub fn write_table(out: &mut Vec<u8>, lens: &[u8]) {
    let used: Vec<usize> = (0..lens.len()).filter(|&s| lens[s] > 0).collect();
    out.extend_from_slice(&(used.len() as u32).to_le_bytes());
    let mut prev = 0usize;
    for (i, &s) in used.iter().enumerate() {
        let gap = if i == 0 { s } else { s - prev - 1 };
        put_varint(out, gap as u32);
        out.push(lens[s]);
        prev = s;
    }
}

pub fn read_table(r: &mut Reader<'_>, alphabet: usize) -> Result<Vec<u8>> {
    let used = r.u32()? as usize;
    if used > alphabet {
        return Err(Error::CorruptPayload("huffman table larger than alphabet"));
    }
    let mut lens = vec![0u8; alphabet];
    let mut next = 0usize;
    for _ in 0..used {
        let s = next
            .checked_add(get_varint(r)? as usize)
            .filter(|&s| s < alphabet)
            .ok_or(Error::CorruptPayload("huffman symbol out of range"))?;
        let l = r.u8()?;
        if l == 0 {
            return Err(Error::CorruptPayload("zero huffman length in table"));
        }
        lens[s] = l;
        next = s + 1;
    }
    Ok(lens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(symbols: &[u32], alphabet: usize) {
        let mut freqs = vec![0u64; alphabet];
        for &s in symbols {
            freqs[s as usize] += 1;
        }
        let lens = code_lengths(&freqs);
        let enc = Encoder::from_lengths(&lens);
        let mut w = BitWriter::new();
        for &s in symbols {
            enc.put(&mut w, s);
        }
        let bits = w.finish();
        let mut table = Vec::new();
        write_table(&mut table, &lens);
        let lens2 = read_table(&mut Reader::new(&table), alphabet).unwrap();
        assert_eq!(lens, lens2);
        let dec = Decoder::from_lengths(&lens2).unwrap();
        let mut r = BitReader::new(&bits);
        for &s in symbols {
            assert_eq!(dec.next(&mut r).unwrap(), s);
        }
    }

    #[test]
    fn single_symbol() {
        round_trip(&[3; 100], 8);
    }

    #[test]
    fn skewed_and_uniform() {
        let mut v = vec![0u32; 1000];
        v.extend([1, 2, 3, 4, 5, 6, 7].iter().cycle().take(70));
        round_trip(&v, 8);
        round_trip(&(0..4096).map(|i| i % 64).collect::<Vec<_>>(), 64);
    }

    #[test]
    fn fibonacci_frequencies_are_length_limited() {
        // Fibonacci weights produce a maximally deep tree without limiting.
        let mut freqs = vec![0u64; 40];
        let (mut a, mut b) = (1u64, 1u64);
        for f in freqs.iter_mut() {
            *f = a;
            (a, b) = (b, a + b);
        }
        let lens = code_lengths(&freqs);
        assert!(lens.iter().all(|&l| (1..=MAX_CODE_LEN).contains(&l)));
        let kraft: f64 = lens.iter().map(|&l| libm::exp2(-(l as f64))).sum();
        assert!(kraft <= 1.0 + 1e-12);
        assert!(Decoder::from_lengths(&lens).is_ok());
    }

    #[test]
    fn rejects_oversubscribed_table() {
        assert!(Decoder::from_lengths(&[1, 1, 1]).is_err());
    }
}
