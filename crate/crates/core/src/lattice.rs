//! Finite chains of `L` sites and their mixed-radix basis.
//!
//! The basis index of `(eta_1, ..., eta_L)` is `sum_i eta_i (2j+1)^{L-i}`, so
//! site 1 is the most significant digit.

use crate::error::{domain, Error, Result};
use crate::qcalc::QParams;

/// Default bound on `(2j+1)^L` for dense constructions.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// A chain of `len` sites at fixed `(q, 2j)`, validated against a dimension cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    params: QParams,
    len: usize,
    dim: usize,
}

impl Lattice {
    pub fn new(params: QParams, len: usize) -> Result<Self> {
        Self::with_dimension_cap(params, len, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_dimension_cap(params: QParams, len: usize, cap: usize) -> Result<Self> {
        if len == 0 {
            return domain("a chain needs at least one site");
        }
        let d = params.local_dim();
        let mut dim = 1usize;
        for _ in 0..len {
            dim = match dim.checked_mul(d) {
                Some(v) if v <= cap => v,
                _ => {
                    return Err(Error::Size {
                        dim: d.checked_pow(len as u32).unwrap_or(usize::MAX),
                        cap,
                    })
                }
            };
        }
        Ok(Self { params, len, dim })
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `(2j+1)^L`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encode(&self, occ: &[u8]) -> usize {
        debug_assert_eq!(occ.len(), self.len);
        let d = self.params.local_dim();
        occ.iter().fold(0, |acc, &n| acc * d + n as usize)
    }

    pub fn decode(&self, mut index: usize) -> Vec<u8> {
        let d = self.params.local_dim();
        let mut occ = vec![0u8; self.len];
        for slot in occ.iter_mut().rev() {
            *slot = (index % d) as u8;
            index /= d;
        }
        occ
    }

    /// All configurations in basis order.
    pub fn configurations(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.dim).map(move |i| self.decode(i))
    }

    pub(crate) fn require_bonds(&self) -> Result<()> {
        if self.len < 2 {
            return domain("this construction needs at least two sites");
        }
        Ok(())
    }
}
