//! Constant-block / mantissa-truncation codec.
//!
//! Values are cut into blocks. A block whose range fits within `2 * eps_abs`
//! becomes one flag byte plus its midrange. Other blocks keep sign and
//! exponent of every element plus the `m` leading mantissa bits, where `m` is
//! the smallest count that bounds the truncation error of the block's largest
//! exponent by `eps_abs`.
//!
//! Payload per block: `0 | f32` (constant) or `1 | m u8 | packed (9 + m)-bit words`.

use alloc::vec::Vec;

use super::bits::{BitReader, BitWriter};
use crate::bytes::Reader;
use crate::{Error, Result};

const BLOCK_CONST: u8 = 0;
const BLOCK_TRUNC: u8 = 1;
const MANTISSA_BITS: u32 = 23;

fn unbiased_exponent(v: f32) -> i32 {
    let e = ((v.to_bits() >> MANTISSA_BITS) & 0xff) as i32;
    if e == 0 {
        -126
    } else {
        e - 127
    }
}

#[inline]
fn truncate(v: f32, m: u32) -> f32 {
    let drop = MANTISSA_BITS - m;
    f32::from_bits(v.to_bits() & !((1u32 << drop) - 1))
}

fn within(block: &[f32], recon: impl Fn(f32) -> f32, eps_abs: f64) -> bool {
    block.iter().all(|&x| (f64::from(x) - f64::from(recon(x))).abs() <= eps_abs)
}

/// Smallest kept-mantissa count meeting the bound for the whole block.
pub fn mantissa_bits(block: &[f32], eps_abs: f64) -> u32 {
    let emax = block.iter().map(|&v| unbiased_exponent(v)).max().unwrap_or(-126);
    let mut m = if eps_abs > 0.0 {
        let need = libm::ceil(f64::from(emax) - libm::log2(eps_abs));
        need.clamp(0.0, f64::from(MANTISSA_BITS)) as u32
    } else {
        MANTISSA_BITS
    };
    while m < MANTISSA_BITS && !within(block, |x| truncate(x, m), eps_abs) {
        m += 1;
    }
    m
}

fn constant_value(block: &[f32], eps_abs: f64) -> Option<f32> {
    let lo = block.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = block.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    if f64::from(hi) - f64::from(lo) > 2.0 * eps_abs {
        return None;
    }
    let mid = ((f64::from(lo) + f64::from(hi)) / 2.0) as f32;
    within(block, |_| mid, eps_abs).then_some(mid)
}

pub fn encode(values: &[f32], eps_abs: f64, block_size: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(&(block_size as u32).to_le_bytes());
    for block in values.chunks(block_size) {
        if let Some(c) = constant_value(block, eps_abs) {
            out.push(BLOCK_CONST);
            out.extend_from_slice(&c.to_le_bytes());
            continue;
        }
        let m = mantissa_bits(block, eps_abs);
        out.push(BLOCK_TRUNC);
        out.push(m as u8);
        let mut w = BitWriter::new();
        for &x in block {
            w.write(x.to_bits() >> (MANTISSA_BITS - m), 9 + m);
        }
        out.extend_from_slice(&w.finish());
    }
    Ok(out)
}

pub fn decode(payload: &[u8], n: usize, _eps_abs: f64) -> Result<Vec<f32>> {
    let mut r = Reader::new(payload);
    let corrupt = |_| Error::CorruptPayload("truncated block stream");
    let block_size = r.u32().map_err(corrupt)? as usize;
    if block_size < 8 {
        return Err(Error::CorruptPayload("block size below minimum"));
    }
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = block_size.min(n - out.len());
        match r.u8().map_err(corrupt)? {
            BLOCK_CONST => {
                let c = r.f32().map_err(corrupt)?;
                out.extend(core::iter::repeat_n(c, len));
            }
            BLOCK_TRUNC => {
                let m = u32::from(r.u8().map_err(corrupt)?);
                if m > MANTISSA_BITS {
                    return Err(Error::CorruptPayload("mantissa width out of range"));
                }
                let nbytes = (len * (9 + m as usize)).div_ceil(8);
                let mut bits = BitReader::new(r.take(nbytes).map_err(corrupt)?);
                for _ in 0..len {
                    let word = bits.read(9 + m)?;
                    out.push(f32::from_bits(word << (MANTISSA_BITS - m)));
                }
            }
            _ => return Err(Error::CorruptPayload("unknown block flag")),
        }
    }
    if r.remaining() != 0 {
        return Err(Error::CorruptPayload("trailing bytes after last block"));
    }
    Ok(out)
}
