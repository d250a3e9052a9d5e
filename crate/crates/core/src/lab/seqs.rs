//! Sequence-space bookkeeping: lexicographic ids, symbol counts, block
//! probabilities and block distortions.

use super::{LabCaps, LabError};
use crate::instance::DistortionMeasure;
use crate::prob::JointPmf;

/// The space of length-`n` sequences over a size-`alphabet` symbol set,
/// addressed by lexicographic id (first position most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqSpace {
    pub alphabet: usize,
    pub n: usize,
}

impl SeqSpace {
    pub fn new(alphabet: usize, n: usize) -> Result<Self, LabError> {
        if n == 0 {
            return Err(LabError::BadBlocklength);
        }
        Ok(Self { alphabet, n })
    }

    pub fn len_u128(&self) -> u128 {
        (self.alphabet as u128).pow(self.n as u32)
    }

    pub fn len(&self) -> u64 {
        self.len_u128() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn decode(&self, id: u64) -> Vec<usize> {
        let mut out = vec![0usize; self.n];
        let mut rest = id;
        for slot in out.iter_mut().rev() {
            *slot = (rest % self.alphabet as u64) as usize;
            rest /= self.alphabet as u64;
        }
        out
    }

    pub fn encode(&self, symbols: &[usize]) -> Result<u64, LabError> {
        if symbols.len() != self.n {
            return Err(LabError::WrongLength {
                got: symbols.len(),
                want: self.n,
            });
        }
        let mut id = 0u64;
        for (position, &s) in symbols.iter().enumerate() {
            if s >= self.alphabet {
                return Err(LabError::ForeignSymbol {
                    position,
                    symbol: s,
                });
            }
            id = id * self.alphabet as u64 + s as u64;
        }
        Ok(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> {
        0..self.len()
    }
}

pub(crate) fn check_cap(alphabet: usize, n: usize, caps: &LabCaps) -> Result<u64, LabError> {
    let need = (alphabet as u128).pow(n as u32);
    if need > caps.enumeration_cap as u128 {
        return Err(LabError::CapExceeded {
            need,
            cap: caps.enumeration_cap,
        });
    }
    Ok(need as u64)
}

pub(crate) fn check_pair_cap(
    a1: usize,
    a2: usize,
    n: usize,
    caps: &LabCaps,
) -> Result<(u64, u64), LabError> {
    let need = (a1 as u128).pow(n as u32) * (a2 as u128).pow(n as u32);
    if need > caps.enumeration_cap as u128 {
        return Err(LabError::CapExceeded {
            need,
            cap: caps.enumeration_cap,
        });
    }
    Ok(((a1 as u64).pow(n as u32), (a2 as u64).pow(n as u32)))
}

/// Symbol occurrence counts of a sequence; counts sum to its length.
pub fn type_counts(seq: &[usize], alphabet: usize) -> Result<Vec<usize>, LabError> {
    if seq.is_empty() {
        return Err(LabError::BadBlocklength);
    }
    let mut counts = vec![0usize; alphabet];
    for (position, &s) in seq.iter().enumerate() {
        if s >= alphabet {
            return Err(LabError::ForeignSymbol {
                position,
                symbol: s,
            });
        }
        counts[s] += 1;
    }
    Ok(counts)
}

/// i.i.d. block probability of a single-axis sequence.
pub fn block_prob(pmf: &JointPmf, seq: &[usize]) -> f64 {
    let mass = pmf.mass();
    seq.iter().map(|&s| mass[s]).product()
}

/// i.i.d. block probability of a pair of sequences under a two-axis joint.
pub fn block_pair_prob(joint: &JointPmf, xs: &[usize], ys: &[usize]) -> f64 {
    let ny = joint.axes()[1].size();
    let mass = joint.mass();
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| mass[x * ny + y])
        .product()
}

/// Normalized block distortion between a source block and a reconstruction
/// block.
pub fn block_distortion(d: &DistortionMeasure, source: &[usize], recon: &[usize]) -> f64 {
    let total: f64 = source
        .iter()
        .zip(recon)
        .map(|(&s, &r)| d.get(s, r))
        .sum();
    total / source.len() as f64
}
