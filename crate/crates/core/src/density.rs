//! Exact (unnormalised) density matrices and their normalised floating images.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::lattice::SiteIndex;
use crate::oracle::sublattice_b_mask;
use crate::scalar::Matrix;
use crate::spectrum;

/// Square integer matrix over the `2^k` spin configurations of `sites`.
/// Bit `b` of a row/column index is the spin of `sites[b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityMatrix {
    sites: Vec<SiteIndex>,
    dim: usize,
    entries: Vec<BigInt>,
}

impl DensityMatrix {
    pub fn new(sites: Vec<SiteIndex>, entries: Vec<BigInt>) -> Result<Self> {
        if sites.len() >= usize::BITS as usize / 2 {
            return Err(invalid("density matrix support too large"));
        }
        let dim = 1usize << sites.len();
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self { sites, dim, entries })
    }

    pub fn from_matrix(sites: Vec<SiteIndex>, m: &Matrix<BigInt>) -> Result<Self> {
        Self::new(sites, m.as_slice().to_vec())
    }

    pub fn sites(&self) -> &[SiteIndex] {
        &self.sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| self.entry(i, i).clone()).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.entry(i, j) == self.entry(j, i)))
    }

    /// Conjugate by `Z` on every sublattice-B site of the support. Maps between
    /// the symmetric-bond frame and the singlet frame.
    pub fn gauge(&self) -> Self {
        let mask = sublattice_b_mask(&self.sites) as usize;
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if ((i & mask).count_ones() + (j & mask).count_ones()) % 2 == 1 {
                    let e = &mut out.entries[i * self.dim + j];
                    *e = -std::mem::take(e);
                }
            }
        }
        out
    }

    /// Exact partial trace onto `keep` (listed in the desired bit order).
    pub fn partial_trace(&self, keep: &[SiteIndex]) -> Result<Self> {
        let pos: Vec<usize> = keep
            .iter()
            .map(|s| {
                self.sites
                    .iter()
                    .position(|t| t == s)
                    .ok_or_else(|| invalid(format!("site {s} not in the matrix support")))
            })
            .collect::<Result<_>>()?;
        if keep.is_empty() || keep.len() > self.sites.len() {
            return Err(invalid("keep set must be nonempty and within the support"));
        }
        let (keep_map, env_map) = split_maps(self.sites.len(), &pos);
        let kd = keep_map.len();
        let mut entries = vec![BigInt::zero(); kd * kd];
        for (i, &ki) in keep_map.iter().enumerate() {
            for (j, &kj) in keep_map.iter().enumerate() {
                let mut acc = BigInt::zero();
                for &e in &env_map {
                    acc += self.entry(ki | e, kj | e);
                }
                entries[i * kd + j] = acc;
            }
        }
        Self::new(keep.to_vec(), entries)
    }

    /// Divide by the trace. Each entry is converted separately, so the relative
    /// error per entry stays at the level of one rounding.
    pub fn normalized(&self) -> NormalizedRho {
        let tr = self.trace();
        let (num_shift, tr_f) = scaled_f64(&tr);
        let matrix = DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let e = self.entry(i, j);
            if e.is_zero() {
                0.0
            } else {
                shifted_f64(e, num_shift) / tr_f
            }
        });
        NormalizedRho {
            sites: self.sites.clone(),
            matrix,
        }
    }

    /// Largest absolute entrywise difference after normalising both sides.
    pub fn normalized_deviation(&self, other: &Self) -> Result<f64> {
        if self.sites != other.sites {
            return Err(Error::SupportMismatch("density matrices on different sites".into()));
        }
        let a = self.normalized();
        let b = other.normalized();
        Ok((a.matrix - b.matrix).amax())
    }
}

/// For a support of `n` bits and kept bit positions `pos`, list the full index
/// of every kept configuration (in kept-bit order) and of every environment
/// configuration.
pub(crate) fn split_maps(n: usize, pos: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let keep_mask: usize = pos.iter().fold(0, |m, &p| m | (1 << p));
    let env_pos: Vec<usize> = (0..n).filter(|b| keep_mask & (1 << b) == 0).collect();
    let scatter = |x: usize, bits: &[usize]| -> usize {
        bits.iter()
            .enumerate()
            .fold(0, |acc, (k, &p)| acc | (((x >> k) & 1) << p))
    };
    let keep_map = (0..1usize << pos.len()).map(|x| scatter(x, pos)).collect();
    let env_map = (0..1usize << env_pos.len()).map(|x| scatter(x, &env_pos)).collect();
    (keep_map, env_map)
}

fn scaled_f64(v: &BigInt) -> (u64, f64) {
    let bits = v.bits();
    let shift = bits.saturating_sub(900);
    (
        shift,
        (v.abs() >> shift).to_f64().unwrap_or(f64::INFINITY) * if v.is_negative() { -1.0 } else { 1.0 },
    )
}

fn shifted_f64(v: &BigInt, shift: u64) -> f64 {
    let mag = (v.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    if v.is_negative() {
        -mag
    } else {
        mag
    }
}

/// `log₂` of a positive big integer, exact to f64 precision for any size.
pub fn log2_big(v: &BigInt) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v.abs() >> shift).to_f64().unwrap_or(f64::NAN);
    top.log2() + shift as f64
}

/// Trace-one density matrix in floating point.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedRho {
    pub sites: Vec<SiteIndex>,
    pub matrix: DMatrix<f64>,
}

/// Numerical health of a normalised density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hygiene {
    pub max_asymmetry: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl Hygiene {
    pub const TRACE_TOL: f64 = 1e-12;
    pub const PSD_REL_TOL: f64 = 1e-9;

    pub fn passes(&self) -> bool {
        self.max_asymmetry == 0.0
            && self.trace_error <= Self::TRACE_TOL
            && self.min_eigenvalue >= -Self::PSD_REL_TOL * self.max_eigenvalue
    }
}

impl NormalizedRho {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Reduced matrix on a subset of positions of this matrix's support.
    pub fn reduce(&self, pos: &[usize]) -> DMatrix<f64> {
        let (keep_map, env_map) = split_maps(self.sites.len(), pos);
        let kd = keep_map.len();
        DMatrix::from_fn(kd, kd, |i, j| {
            env_map
                .iter()
                .map(|&e| self.matrix[(keep_map[i] | e, keep_map[j] | e)])
                .sum()
        })
    }

    pub fn hygiene(&self) -> Hygiene {
        let m = &self.matrix;
        let mut asym = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..i {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        let ev = spectrum::symmetric_eigenvalues(m);
        Hygiene {
            max_asymmetry: asym,
            trace_error: (m.trace() - 1.0).abs(),
            min_eigenvalue: ev.first().copied().unwrap_or(0.0),
            max_eigenvalue: ev.last().copied().unwrap_or(0.0),
        }
    }

    /// Rows of decimal text, one matrix row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|j| format!("{:e}", self.matrix[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}
