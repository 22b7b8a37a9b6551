//! Rung and two-rung block states, their overlap scalars, and the rung-space
//! basis needed to close the contraction `⟨α| · |2̄⟩` for wide even ladders.
//!
//! All block data live in the symmetric-bond frame, where every amplitude is
//! nonnegative and a two-rung block is a symmetric `2^M × 2^M` matrix
//! `V[left rung config][right rung config]`. The singlet frame differs by a
//! local `Z` gauge that is applied only when a reduced matrix is handed out.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::oracle::{BlockStates, BondSign, StateVector};
use crate::scalar::{dot, rational_to_integer, Matrix, Scalar};

/// Largest supported leg count; the two-rung block has `4^M` entries.
pub const MAX_LEGS: usize = 7;

/// Overlap scalars of the even-ladder recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct EvenScalars {
    /// `⟨1|1⟩`
    pub a: BigInt,
    /// `⟨1|1̄⟩`
    pub a_bar: BigInt,
    /// `⟨2̄|2̄⟩`
    pub b: BigInt,
    /// `⟨1|2̄⟩ = c|1⟩ + d|1̄⟩ + …`
    pub c: BigRational,
    pub d: BigRational,
    /// `⟨1̄|2̄⟩ = c̄|1⟩ + d̄|1̄⟩ + …`
    pub c_bar: BigRational,
    pub d_bar: BigRational,
}

impl EvenScalars {
    /// The scalars as exact integers, when they are.
    pub fn integers(&self) -> Option<[BigInt; 7]> {
        Some([
            self.a.clone(),
            self.a_bar.clone(),
            self.b.clone(),
            rational_to_integer(&self.c)?,
            rational_to_integer(&self.d)?,
            rational_to_integer(&self.c_bar)?,
            rational_to_integer(&self.d_bar)?,
        ])
    }
}

/// Rung-space basis `α₁ = |1⟩, α₂ = |1̄⟩, …` closed under contraction with `|2̄⟩`.
#[derive(Clone, Debug)]
pub struct AlphaBasis {
    pub vectors: Vec<Vec<BigInt>>,
    /// `gram[i][j] = ⟨α_i|α_j⟩`
    pub gram: Matrix<BigInt>,
    /// Column `j` holds the coefficients of `⟨α_j|·|2̄⟩` in the basis:
    /// `⟨α_j|2̄⟩ = Σ_i expansion[i][j] |α_i⟩`.
    pub expansion: Matrix<BigRational>,
}

impl AlphaBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Whether `|1̄⟩` is its own basis element (false for two legs, where it
    /// coincides with `|1⟩`).
    pub fn has_closed_rung(&self) -> bool {
        self.len() >= 2
    }
}

#[derive(Clone, Debug)]
pub struct BlockLibrary {
    pub legs: usize,
    /// `|1⟩` (even legs only).
    pub one_rung: Option<Vec<BigInt>>,
    /// `|1̄⟩`, the rung closed through its top and bottom sites (even legs only).
    pub one_rung_bar: Option<Vec<BigInt>>,
    /// `|2⟩`
    pub two_rung: Matrix<BigInt>,
    /// `|2̄⟩ = |2⟩ − |1⟩|1⟩` (even legs only).
    pub two_rung_bar: Option<Matrix<BigInt>>,
    /// One-rung marginal of the recursion block: `Tr_first |2̄⟩⟨2̄|` for even
    /// legs, `Tr_first |2⟩⟨2|` for odd legs.
    pub rho_bar: Matrix<BigInt>,
    /// `⟨2|2⟩`
    pub two_rung_norm: BigInt,
    pub scalars: Option<EvenScalars>,
    pub alpha: Option<AlphaBasis>,
}

fn dense_rung(state: &StateVector, legs: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); 1 << legs];
    for (c, a) in state.iter() {
        v[c as usize] = BigInt::from(a);
    }
    v
}

fn dense_pair(state: &StateVector, legs: usize) -> Matrix<BigInt> {
    let d = 1usize << legs;
    let mut m = Matrix::zeros(d, d);
    for (c, a) in state.iter() {
        let c = c as usize;
        m.set(c % d, c / d, BigInt::from(a));
    }
    m
}

/// Build every block state and scalar for `legs`. Even ladders also get their
/// closed α-basis.
pub fn build_blocks(legs: usize) -> Result<BlockLibrary> {
    if legs == 0 || legs > MAX_LEGS {
        return Err(invalid(format!("legs must be in 1..={MAX_LEGS}, got {legs}")));
    }
    let states = BlockStates::new(legs, BondSign::Symmetric);
    let two_rung = dense_pair(&states.two(1, 2)?, legs);
    let two_rung_norm = two_rung.frobenius_sq();
    if legs % 2 == 1 {
        let rho_bar = two_rung.transpose().matmul(&two_rung)?;
        return Ok(BlockLibrary {
            legs,
            one_rung: None,
            one_rung_bar: None,
            two_rung,
            two_rung_bar: None,
            rho_bar,
            two_rung_norm,
            scalars: None,
            alpha: None,
        });
    }

    let one = dense_rung(&states.one(1)?, legs);
    let one_bar = dense_rung(
        &crate::oracle::covering_state_with(
            &crate::lattice::rung_covering_closed(legs, 1)?,
            &crate::lattice::rung_sites(legs, 1),
            BondSign::Symmetric,
        )?,
        legs,
    );
    let bar = two_rung.sub(&Matrix::outer(&one, &one))?;
    let rho_bar = bar.transpose().matmul(&bar)?;
    let alpha = close_alpha_basis(&one, &one_bar, &bar)?;

    let coef = |row: usize, col: usize| -> BigRational {
        if row < alpha.len() && col < alpha.len() {
            alpha.expansion.get(row, col).clone()
        } else {
            BigRational::zero()
        }
    };
    let scalars = EvenScalars {
        a: dot(&one, &one),
        a_bar: dot(&one, &one_bar),
        b: bar.frobenius_sq(),
        c: coef(0, 0),
        d: coef(1, 0),
        c_bar: coef(0, 1),
        d_bar: coef(1, 1),
    };
    Ok(BlockLibrary {
        legs,
        one_rung: Some(one),
        one_rung_bar: Some(one_bar),
        two_rung,
        two_rung_bar: Some(bar),
        rho_bar,
        two_rung_norm,
        scalars: Some(scalars),
        alpha: Some(alpha),
    })
}

impl BlockLibrary {
    pub fn rung_dim(&self) -> usize {
        1 << self.legs
    }

    pub fn is_even(&self) -> bool {
        self.legs % 2 == 0
    }

    /// `|1⟩`, or an error for odd legs where no single-rung covering exists.
    pub fn one(&self) -> Result<&Vec<BigInt>> {
        self.one_rung
            .as_ref()
            .ok_or_else(|| invalid(format!("no single-rung state for {} legs", self.legs)))
    }

    pub fn two_bar(&self) -> Result<&Matrix<BigInt>> {
        self.two_rung_bar
            .as_ref()
            .ok_or_else(|| invalid(format!("|2̄⟩ is undefined for {} legs", self.legs)))
    }

    pub fn even_scalars(&self) -> Result<&EvenScalars> {
        self.scalars
            .as_ref()
            .ok_or_else(|| invalid(format!("even-ladder scalars undefined for {} legs", self.legs)))
    }

    pub fn alpha(&self) -> Result<&AlphaBasis> {
        self.alpha
            .as_ref()
            .ok_or_else(|| invalid(format!("no α-basis for {} legs", self.legs)))
    }

    /// The block data converted into another scalar type.
    pub fn algebra<T: Scalar>(&self) -> RungAlgebra<T> {
        let conv = |v: &Vec<BigInt>| v.iter().map(T::from_bigint).collect::<Vec<T>>();
        RungAlgebra {
            legs: self.legs,
            one: self.one_rung.as_ref().map(conv),
            one_bar: self
                .alpha
                .as_ref()
                .filter(|a| a.has_closed_rung())
                .and(self.one_rung_bar.as_ref())
                .map(conv),
            two: self.two_rung.map(T::from_bigint),
            two_bar: self.two_rung_bar.as_ref().map(|m| m.map(T::from_bigint)),
            rho_bar: self.rho_bar.map(T::from_bigint),
        }
    }
}

/// Block data in a chosen scalar type; what the assembly routines consume.
#[derive(Clone, Debug)]
pub struct RungAlgebra<T> {
    pub legs: usize,
    pub one: Option<Vec<T>>,
    /// `|1̄⟩` when it is an independent basis direction.
    pub one_bar: Option<Vec<T>>,
    pub two: Matrix<T>,
    pub two_bar: Option<Matrix<T>>,
    pub rho_bar: Matrix<T>,
}

impl<T: Scalar> RungAlgebra<T> {
    pub fn rung_dim(&self) -> usize {
        1 << self.legs
    }

    pub fn one(&self) -> Result<&Vec<T>> {
        self.one
            .as_ref()
            .ok_or_else(|| invalid(format!("no single-rung state for {} legs", self.legs)))
    }

    pub fn two_bar(&self) -> Result<&Matrix<T>> {
        self.two_bar
            .as_ref()
            .ok_or_else(|| invalid(format!("|2̄⟩ is undefined for {} legs", self.legs)))
    }
}

/// Solve the Gram system for `v` in `basis` with exact rationals.
///
/// Returns [`Error::BasisIncomplete`] when `v` has a component outside the span.
pub fn expand_in_rung_basis(v: &[BigInt], basis: &[Vec<BigInt>]) -> Result<Vec<BigRational>> {
    let k = basis.len();
    if let Some(b) = basis.iter().find(|b| b.len() != v.len()) {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: b.len(),
        });
    }
    let q = |x: BigInt| BigRational::from_integer(x);
    // Augmented Gram system [G | b].
    let mut rows: Vec<Vec<BigRational>> = (0..k)
        .map(|i| {
            let mut r: Vec<BigRational> = (0..k).map(|j| q(dot(&basis[i], &basis[j]))).collect();
            r.push(q(dot(&basis[i], v)));
            r
        })
        .collect();
    // Gauss–Jordan; a singular Gram matrix means a dependent basis.
    for col in 0..k {
        let pivot = (col..k)
            .find(|&r| !rows[r][col].is_zero())
            .ok_or_else(|| invalid("rung basis vectors are linearly dependent"))?;
        rows.swap(col, pivot);
        let p = rows[col][col].clone();
        for x in rows[col].iter_mut() {
            *x = x.clone() / p.clone();
        }
        for r in 0..k {
            if r != col && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                let pivot_row = rows[col].clone();
                for (x, y) in rows[r].iter_mut().zip(pivot_row) {
                    *x = x.clone() - f.clone() * y;
                }
            }
        }
    }
    let coeffs: Vec<BigRational> = rows.into_iter().map(|r| r[k].clone()).collect();
    let mut residual: Vec<BigRational> = v.iter().cloned().map(q).collect();
    for (c, b) in coeffs.iter().zip(basis) {
        for (r, x) in residual.iter_mut().zip(b) {
            *r = r.clone() - c.clone() * q(x.clone());
        }
    }
    let res_sq = residual
        .iter()
        .fold(BigRational::zero(), |acc, r| acc + r.clone() * r.clone());
    if !res_sq.is_zero() {
        return Err(Error::BasisIncomplete {
            residual: res_sq.to_string(),
        });
    }
    Ok(coeffs)
}

/// Grow `{|1⟩, |1̄⟩}` by contracting each element against `|2̄⟩` until every
/// contraction lies in the span. A contraction that leaves the span is
/// appended as a new basis vector.
pub fn close_alpha_basis(one: &[BigInt], one_bar: &[BigInt], two_bar: &Matrix<BigInt>) -> Result<AlphaBasis> {
    let dim = one.len();
    let mut vectors = vec![one.to_vec()];
    if expand_in_rung_basis(one_bar, &vectors).is_err() {
        vectors.push(one_bar.to_vec());
    }
    let mut columns: Vec<Vec<BigRational>> = Vec::new();
    let mut j = 0;
    while j < vectors.len() {
        // two_bar is symmetric, so contracting either rung gives the same vector.
        let v = two_bar.matvec(&vectors[j])?;
        match expand_in_rung_basis(&v, &vectors) {
            Ok(c) => columns.push(c),
            Err(Error::BasisIncomplete { .. }) => {
                assert!(vectors.len() < dim, "α-basis cannot exceed the rung dimension");
                vectors.push(v);
                let mut c = vec![BigRational::zero(); vectors.len()];
                c[vectors.len() - 1] = BigRational::one();
                columns.push(c);
            }
            Err(e) => return Err(e),
        }
        j += 1;
    }
    let k = vectors.len();
    let expansion = Matrix::from_fn(k, k, |i, j| {
        columns[j].get(i).cloned().unwrap_or_else(BigRational::zero)
    });
    let gram = Matrix::from_fn(k, k, |i, j| dot(&vectors[i], &vectors[j]));
    Ok(AlphaBasis {
        vectors,
        gram,
        expansion,
    })
}

/// Contract a chain of two-rung blocks that alternate between bra and ket,
/// each sharing one rung with the next. With real amplitudes this is the
/// ordered matrix product; the first block's left rung and the last block's
/// right rung stay open.
pub fn transfer_contract<T: Scalar>(blocks: &[&Matrix<T>]) -> Result<Matrix<T>> {
    let (first, rest) = blocks
        .split_first()
        .ok_or_else(|| invalid("transfer chain needs at least one block"))?;
    let mut acc = (*first).clone();
    for b in rest {
        if !b.is_square() || b.rows() != acc.cols() {
            return Err(Error::DimensionMismatch {
                expected: acc.cols(),
                got: b.rows(),
            });
        }
        acc = acc.matmul(b)?;
    }
    Ok(acc)
}

/// `block^k` as a transfer chain of `k` copies (`k ≥ 1`).
pub fn transfer_power<T: Scalar>(block: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    let chain: Vec<&Matrix<T>> = std::iter::repeat(block).take(k).collect();
    transfer_contract(&chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn rat(v: i64) -> BigRational {
        BigRational::from_integer(int(v))
    }

    #[test]
    fn two_leg_scalars() {
        let lib = build_blocks(2).unwrap();
        let s = lib.even_scalars().unwrap();
        assert_eq!(s.integers().unwrap(), [2, 2, 4, 1, 0, 0, 0].map(int));
        assert_eq!(lib.alpha().unwrap().len(), 1);
    }

    #[test]
    fn four_leg_scalars() {
        let lib = build_blocks(4).unwrap();
        let s = lib.even_scalars().unwrap();
        let [a, a_bar, _, c, d, c_bar, d_bar] = s.integers().unwrap();
        assert_eq!([a, a_bar, c, d, c_bar, d_bar], [4, 2, 5, 1, 2, 3].map(int));
        assert_eq!(lib.alpha().unwrap().len(), 2);
    }

    #[test]
    fn odd_ladders_have_no_rung_state() {
        let lib = build_blocks(3).unwrap();
        assert!(lib.one().is_err());
        assert!(lib.two_bar().is_err());
        assert_eq!(lib.two_rung_norm, int(44));
        assert_eq!(build_blocks(5).unwrap().two_rung_norm, int(804));
        assert!(build_blocks(0).is_err());
        assert!(build_blocks(MAX_LEGS + 1).is_err());
    }

    #[test]
    fn expansion_examples() {
        let lib = build_blocks(4).unwrap();
        let basis = &lib.alpha().unwrap().vectors;
        let w = lib.two_bar().unwrap();
        let c = expand_in_rung_basis(&w.matvec(lib.one().unwrap()).unwrap(), basis).unwrap();
        assert_eq!(c, vec![rat(5), rat(1)]);
        let c = expand_in_rung_basis(lib.one_rung_bar.as_ref().unwrap(), basis).unwrap();
        assert_eq!(c, vec![rat(0), rat(1)]);

        let lib2 = build_blocks(2).unwrap();
        let w2 = lib2.two_bar().unwrap();
        let c = expand_in_rung_basis(&w2.matvec(lib2.one().unwrap()).unwrap(), &lib2.alpha().unwrap().vectors).unwrap();
        assert_eq!(c, vec![rat(1)]);
    }

    #[test]
    fn vector_outside_span_is_reported() {
        let basis = vec![vec![int(1), int(0), int(0)]];
        let v = vec![int(1), int(1), int(0)];
        assert!(matches!(
            expand_in_rung_basis(&v, &basis),
            Err(Error::BasisIncomplete { .. })
        ));
    }

    #[test]
    fn closure_identities_hold_exactly() {
        for m in [2, 4, 6] {
            let lib = build_blocks(m).unwrap();
            let alpha = lib.alpha().unwrap();
            let w = lib.two_bar().unwrap();
            for j in 0..alpha.len() {
                let lhs = w.matvec(&alpha.vectors[j]).unwrap();
                let mut rhs = vec![BigRational::zero(); lhs.len()];
                for i in 0..alpha.len() {
                    let c = alpha.expansion.get(i, j);
                    for (r, x) in rhs.iter_mut().zip(&alpha.vectors[i]) {
                        *r = r.clone() + c.clone() * BigRational::from_integer(x.clone());
                    }
                }
                let lhs: Vec<BigRational> = lhs.into_iter().map(BigRational::from_integer).collect();
                assert_eq!(lhs, rhs, "M = {m}, j = {j}");
            }
        }
        let m6 = build_blocks(6).unwrap();
        assert!(m6.alpha().unwrap().len() >= 2);
    }

    #[test]
    fn four_leg_closure_stops_at_two() {
        let lib = build_blocks(4).unwrap();
        assert_eq!(lib.alpha().unwrap().len(), 2);
    }

    #[test]
    fn block_identities() {
        for m in [2, 4] {
            let lib = build_blocks(m).unwrap();
            let one = lib.one().unwrap();
            let one_bar = lib.one_rung_bar.as_ref().unwrap();
            let s = lib.even_scalars().unwrap();
            assert_eq!(dot(one, one), s.a);
            assert_eq!(dot(one_bar, one_bar), s.a);
            let diff = lib.two_rung.sub(&Matrix::outer(one, one)).unwrap();
            assert_eq!(&diff, lib.two_bar().unwrap());
            assert!(lib.rho_bar.is_symmetric());
            assert_eq!(lib.rho_bar.trace(), s.b);
        }
        let lib = build_blocks(2).unwrap();
        assert_eq!(lib.one().unwrap(), lib.one_rung_bar.as_ref().unwrap());
    }

    #[test]
    fn transfer_chain_of_one_is_the_block() {
        let lib = build_blocks(3).unwrap();
        assert_eq!(transfer_contract(&[&lib.two_rung]).unwrap(), lib.two_rung);
        assert!(transfer_contract::<BigInt>(&[]).is_err());
        let bad = Matrix::<BigInt>::zeros(4, 4);
        assert!(transfer_contract(&[&lib.two_rung, &bad]).is_err());
    }
}
