//! Odd-leg ladders. With no single-rung covering the state is a product of
//! two-rung blocks, and the ring adds the product shifted by one rung. Both
//! the norm and the window's reduced matrix reduce to powers of the block
//! matrix `V = |2⟩`.

use num_bigint::BigInt;

use crate::blocks::{transfer_contract, transfer_power, BlockLibrary, RungAlgebra};
use crate::error::{invalid, Result};
use crate::even::{check_window, AssembledRho, Component};
use crate::lattice::LadderSpec;
use crate::scalar::{window_kron, window_vec, Matrix, Scalar};

#[derive(Clone, Debug)]
pub struct OddLadderTable<T = BigInt> {
    pub legs: usize,
    /// `𝒩`, the rungs outside the window.
    pub rungs: usize,
    /// `Z₂ = ⟨2|2⟩`
    pub z2: T,
    /// `z[j] = Z_{2j} = Z₂^j`, `j = 0..=𝒩/2 + 1`.
    pub z: Vec<T>,
    /// `Ω_𝒩 = V^{𝒩+1}`, the chain closing the ring through the window.
    pub omega: Matrix<T>,
}

impl<T: Scalar> OddLadderTable<T> {
    /// `Z_k` for even `k`.
    pub fn norm(&self, k: usize) -> Option<&T> {
        if k % 2 == 1 {
            return None;
        }
        self.z.get(k / 2)
    }
}

/// Tables for a ladder of `𝒩 + 2` rungs, `𝒩` even and at least 2.
pub fn run_odd_recursion<T: Scalar>(lib: &BlockLibrary, n: usize) -> Result<OddLadderTable<T>> {
    if lib.is_even() {
        return Err(invalid(format!("odd-leg recursion called with {} legs", lib.legs)));
    }
    if n < 2 || n % 2 == 1 {
        return Err(invalid(format!("odd-leg recursion needs even 𝒩 ≥ 2, got {n}")));
    }
    let v = lib.two_rung.map(T::from_bigint);
    let z2 = T::from_bigint(&lib.two_rung_norm);
    let mut z = vec![T::one()];
    for j in 1..=n / 2 + 1 {
        z.push(z[j - 1].mul_ref(&z2));
    }
    // Ω₂ = V³, Ω_{𝒩+2} = V² Ω_𝒩
    let v2 = v.matmul(&v)?;
    let mut omega = transfer_contract(&[&v, &v, &v])?;
    for _ in (4..=n).step_by(2) {
        omega = v2.matmul(&omega)?;
    }
    Ok(OddLadderTable {
        legs: lib.legs,
        rungs: n,
        z2,
        z,
        omega,
    })
}

/// Window on the last two rungs of an open odd ladder: `Z_𝒩 |2⟩⟨2|`.
pub fn assemble_rho2_open_odd<T: Scalar>(alg: &RungAlgebra<T>, table: &OddLadderTable<T>) -> Result<AssembledRho<T>> {
    check_window(alg.legs)?;
    let v = window_vec(&alg.two);
    let zn = table.norm(table.rungs).expect("even 𝒩").clone();
    AssembledRho::new(
        alg.legs,
        table.rungs + 2,
        false,
        vec![(Component::Block, Matrix::outer(&v, &v).scale(&zn))],
    )
}

/// Window of the periodic odd ladder:
/// `Z_𝒩 |2⟩⟨2| + Z_{𝒩−2} ρ̄ ⊗ ρ̄ + (|2⟩⟨Ω_𝒩| + h.c.)`.
pub fn assemble_rho2_periodic_odd<T: Scalar>(
    alg: &RungAlgebra<T>,
    table: &OddLadderTable<T>,
) -> Result<AssembledRho<T>> {
    check_window(alg.legs)?;
    let n = table.rungs;
    let v = window_vec(&alg.two);
    let zn = table.norm(n).expect("even 𝒩").clone();
    let zn2 = table.norm(n - 2).expect("even 𝒩").clone();
    let omega = window_vec(&table.omega);
    let cross = Matrix::outer(&v, &omega);
    AssembledRho::new(
        alg.legs,
        n + 2,
        true,
        vec![
            (Component::Block, Matrix::outer(&v, &v).scale(&zn)),
            (
                Component::RhoBarPair,
                window_kron(&alg.rho_bar, &alg.rho_bar).scale(&zn2),
            ),
            (Component::OmegaCross, cross.add(&cross.transpose())?),
        ],
    )
}

/// Exact window of an odd ladder (symmetric-bond frame).
pub fn rho2_odd_exact(lib: &BlockLibrary, spec: LadderSpec) -> Result<AssembledRho<BigInt>> {
    rho2_odd_in::<BigInt>(lib, spec)
}

pub fn rho2_odd_in<T: Scalar>(lib: &BlockLibrary, spec: LadderSpec) -> Result<AssembledRho<T>> {
    spec.validate()?;
    if spec.legs != lib.legs || spec.rungs < 4 || spec.rungs % 2 == 1 {
        return Err(invalid(format!(
            "odd-leg window needs an even number of rungs ≥ 4, got {spec}"
        )));
    }
    let table = run_odd_recursion::<T>(lib, spec.rungs - 2)?;
    let alg = lib.algebra::<T>();
    if spec.periodic {
        assemble_rho2_periodic_odd(&alg, &table)
    } else {
        assemble_rho2_open_odd(&alg, &table)
    }
}

/// Ring norm from the closed transfer chain: `2 Z₂^{R/2} + 2 tr V^R` for `R`
/// total rungs.
pub fn periodic_norm_odd(lib: &BlockLibrary, rungs: usize) -> Result<BigInt> {
    LadderSpec::periodic(lib.legs, rungs)?;
    if lib.is_even() {
        return Err(invalid("odd-leg norm called with even legs"));
    }
    let ring = transfer_power(&lib.two_rung, rungs)?.trace();
    let open = num_traits::pow(lib.two_rung_norm.clone(), rungs / 2);
    Ok((open + ring) * BigInt::from(2))
}
