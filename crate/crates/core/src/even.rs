//! Even-leg ladders: norm recursion, one-ended and two-ended overlaps, and the
//! two-rung reduced density matrix for open and periodic boundaries.
//!
//! Notation follows the block module. `u = |1⟩`, `ū = |1̄⟩`, `W = |2̄⟩`,
//! `P_k = ⟨k−1|k⟩` is the one-ended overlap left as a vector on the dangling
//! rung, `ξ_k = W P_k`, and `L_c = W^{c−1} u` is the chain that grows from a
//! single `|1⟩`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::blocks::{transfer_power, BlockLibrary, RungAlgebra};
use crate::density::DensityMatrix;
use crate::error::{invalid, Error, Result};
use crate::lattice::{LadderSpec, SiteIndex};
use crate::scalar::{axpy, dot, rational_to_integer, scaled, window_kron, window_product, window_vec, Matrix, Scalar};

/// The scalars of the two-direction recursion in a chosen scalar type.
#[derive(Clone, Debug)]
pub struct EvenCoefficients<T> {
    pub a: T,
    pub a_bar: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub c_bar: T,
    pub d_bar: T,
    /// Whether `|1̄⟩` is an independent direction (false for two legs).
    pub closed_rung: bool,
}

impl<T: Scalar> EvenCoefficients<T> {
    pub fn from_library(lib: &BlockLibrary) -> Result<Self> {
        let alpha = lib.alpha()?;
        if alpha.len() > 2 {
            return Err(invalid(format!(
                "{} legs need a {}-element rung basis; use the general recursion",
                lib.legs,
                alpha.len()
            )));
        }
        let s = lib.even_scalars()?;
        let ints = s
            .integers()
            .ok_or_else(|| invalid("recursion scalars are not integers"))?;
        let [a, a_bar, b, c, d, c_bar, d_bar] = ints.map(|v| T::from_bigint(&v));
        Ok(Self {
            a,
            a_bar,
            b,
            c,
            d,
            c_bar,
            d_bar,
            closed_rung: alpha.has_closed_rung(),
        })
    }
}

/// Iteration variables of the two-direction recursion, indexed by rung count
/// `k = 0..=len`.
#[derive(Clone, Debug)]
pub struct RecursionTable<T = BigInt> {
    pub legs: usize,
    pub coefficients: EvenCoefficients<T>,
    /// `Z_k = ⟨k|k⟩`, with `Z_0 = 1`.
    pub z: Vec<T>,
    /// `Y¹_k = ⟨k|k−1⟩|1⟩`, zero at `k = 0`.
    pub y1: Vec<T>,
    /// `Y²_k = ⟨k|k−1⟩|1̄⟩`, identically zero for two legs.
    pub y2: Vec<T>,
    /// `W^k u = g_k u + h_k ū`.
    pub g: Vec<T>,
    pub h: Vec<T>,
    /// `W^k ū = ḡ_k u + h̄_k ū`.
    pub g_bar: Vec<T>,
    pub h_bar: Vec<T>,
    /// `P_k = A¹_k u + A²_k ū`.
    pub a1: Vec<T>,
    pub a2: Vec<T>,
}

impl<T: Scalar> RecursionTable<T> {
    pub fn len(&self) -> usize {
        self.z.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn a_at(v: &[T], k: isize) -> T {
        if k < 0 {
            T::zero()
        } else {
            v.get(k as usize).cloned().unwrap_or_else(T::zero)
        }
    }

    fn need(&self, k: usize) -> Result<()> {
        if k > self.len() {
            return Err(Error::TableTooShort {
                available: self.len(),
                needed: k,
            });
        }
        Ok(())
    }

    /// Coefficients `[uu, uū, ūu, ūū]` of `Σ_{c=1}^{N−1} L_c(x₁) P_{N−c}(x_n)`,
    /// the non-chain part of the two-ended overlap, as a direct convolution.
    pub fn x_sum(&self, n: usize) -> Result<[T; 4]> {
        self.need(n)?;
        let mut x = [T::zero(), T::zero(), T::zero(), T::zero()];
        for c in 1..n {
            let (gl, hl) = (&self.g[c - 1], &self.h[c - 1]);
            let (p1, p2) = (&self.a1[n - c], &self.a2[n - c]);
            x[0] = x[0].clone() + gl.mul_ref(p1);
            x[1] = x[1].clone() + gl.mul_ref(p2);
            x[2] = x[2].clone() + hl.mul_ref(p1);
            x[3] = x[3].clone() + hl.mul_ref(p2);
        }
        Ok(x)
    }

    /// The same coefficients summed in pairs of chain steps, each pair
    /// expanded through one application of the recursion scalars.
    pub fn x_paired(&self, n: usize) -> Result<[T; 4]> {
        self.need(n)?;
        let k = &self.coefficients;
        let n = n as isize;
        let mut x = [T::zero(), T::zero(), T::zero(), T::zero()];
        let mut i = 0isize;
        while 2 * i <= n {
            let i2 = (2 * i) as usize;
            let (g, h, gb, hb) = (&self.g[i2], &self.h[i2], &self.g_bar[i2], &self.h_bar[i2]);
            for (slot, (lead, bar, a)) in [
                (g, gb, &self.a1),
                (g, gb, &self.a2),
                (h, hb, &self.a1),
                (h, hb, &self.a2),
            ]
            .into_iter()
            .enumerate()
            {
                let near = Self::a_at(a, n - 1 - 2 * i);
                let far = Self::a_at(a, n - 2 - 2 * i);
                // Odd chain steps are one application of the scalars past
                // the even ones: g_{2i+1} = C g_{2i} + D ḡ_{2i}, likewise for h.
                x[slot] = x[slot].clone() + lead.mul_ref(&(near + k.c.mul_ref(&far))) + bar.mul_ref(&k.d).mul_ref(&far);
            }
            i += 1;
        }
        Ok(x)
    }
}

/// Run the two-direction recursion up to `len` rungs.
pub fn run_even_recursion(lib: &BlockLibrary, len: usize) -> Result<RecursionTable<BigInt>> {
    run_even_recursion_in::<BigInt>(lib, len)
}

/// [`run_even_recursion`] in an arbitrary scalar type (`f64` for the fast path).
pub fn run_even_recursion_in<T: Scalar>(lib: &BlockLibrary, len: usize) -> Result<RecursionTable<T>> {
    let k = EvenCoefficients::<T>::from_library(lib)?;
    let mut z = vec![T::one()];
    let mut y1 = vec![T::zero()];
    let mut y2 = vec![T::zero()];
    let mut g = vec![T::one()];
    let mut h = vec![T::zero()];
    let mut g_bar = vec![T::zero()];
    let mut h_bar = vec![if k.closed_rung { T::one() } else { T::zero() }];
    for i in 1..=len {
        let z_prev2 = if i >= 2 { z[i - 2].clone() } else { T::zero() };
        let contraction = k.c.mul_ref(&y1[i - 1]) + k.d.mul_ref(&y2[i - 1]);
        let zi = k.a.mul_ref(&z[i - 1]) + k.b.mul_ref(&z_prev2) + contraction.clone() + contraction.clone();
        let y1i = k.a.mul_ref(&z[i - 1]) + contraction;
        let y2i = if k.closed_rung {
            k.a_bar.mul_ref(&z[i - 1]) + k.c_bar.mul_ref(&y1[i - 1]) + k.d_bar.mul_ref(&y2[i - 1])
        } else {
            T::zero()
        };
        z.push(zi);
        y1.push(y1i);
        y2.push(y2i);
        let (gp, hp) = (g[i - 1].clone(), h[i - 1].clone());
        g.push(k.c.mul_ref(&gp) + k.c_bar.mul_ref(&hp));
        h.push(k.d.mul_ref(&gp) + k.d_bar.mul_ref(&hp));
        let (gp, hp) = (g_bar[i - 1].clone(), h_bar[i - 1].clone());
        g_bar.push(k.c.mul_ref(&gp) + k.c_bar.mul_ref(&hp));
        h_bar.push(k.d.mul_ref(&gp) + k.d_bar.mul_ref(&hp));
    }
    let mut a1 = vec![T::zero()];
    let mut a2 = vec![T::zero()];
    for n in 1..=len {
        let mut s1 = T::zero();
        let mut s2 = T::zero();
        for i in 1..=n {
            s1 = s1 + z[n - i].mul_ref(&g[i - 1]);
            if i >= 2 {
                s2 = s2 + z[n - i].mul_ref(&h[i - 1]);
            }
        }
        a1.push(s1);
        a2.push(s2);
    }
    Ok(RecursionTable {
        legs: lib.legs,
        coefficients: k,
        z,
        y1,
        y2,
        g,
        h,
        g_bar,
        h_bar,
        a1,
        a2,
    })
}

/// The norm recursion as printed, with the `|1⟩` contraction lagged by one
/// more rung (`Y¹_{k−2}`, `Y¹_0 = 0`). Kept to document that it disagrees with
/// the exact norm.
pub fn lagged_norm_variant(lib: &BlockLibrary, len: usize) -> Result<Vec<BigInt>> {
    let t = run_even_recursion(lib, len)?;
    let k = &t.coefficients;
    let two = BigInt::from(2);
    let mut z = vec![BigInt::one()];
    for i in 1..=len {
        let z2 = if i >= 2 { z[i - 2].clone() } else { BigInt::zero() };
        let y1 = if i >= 2 { t.y1[i - 2].clone() } else { BigInt::zero() };
        z.push(&k.a * &z[i - 1] + &k.b * z2 + &two * &k.c * y1 + &two * &k.d * &t.y2[i - 1]);
    }
    Ok(z)
}

/// Sign attached to the contraction terms of the general recursion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignConvention {
    /// Every contraction enters with `+`.
    Uniform,
    /// The contraction at rung `k` enters with `(−1)^{k−1}`.
    Alternating,
}

/// The recursion over an arbitrary closed α-basis, in exact rationals.
#[derive(Clone, Debug)]
pub struct GeneralRecursionTable {
    pub legs: usize,
    pub sign: SignConvention,
    pub z: Vec<BigRational>,
    /// `y[k][j] = ⟨k|k−1⟩|α_j⟩`
    pub y: Vec<Vec<BigRational>>,
    /// Coordinates of `P_k` in the α-basis.
    pub p: Vec<Vec<BigRational>>,
    /// Coordinates of `W^k u` in the α-basis.
    pub chain: Vec<Vec<BigRational>>,
}

impl GeneralRecursionTable {
    pub fn len(&self) -> usize {
        self.z.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Z_k` as an integer, if it is one.
    pub fn z_integer(&self, k: usize) -> Option<BigInt> {
        self.z.get(k).and_then(rational_to_integer)
    }
}

pub fn run_even_recursion_general(
    lib: &BlockLibrary,
    len: usize,
    sign: SignConvention,
) -> Result<GeneralRecursionTable> {
    let alpha = lib.alpha()?;
    let s = lib.even_scalars()?;
    let q = |v: &BigInt| BigRational::from_integer(v.clone());
    let n = alpha.len();
    let t = &alpha.expansion;
    let gram = alpha.gram.map(q);
    let (a, b) = (q(&s.a), q(&s.b));
    let two = BigRational::from_integer(BigInt::from(2));

    let mut z = vec![BigRational::one()];
    let mut y = vec![vec![BigRational::zero(); n]];
    let mut p = vec![vec![BigRational::zero(); n]];
    let mut chain = vec![unit_vec(n, 0)];
    for k in 1..=len {
        let sgn = match sign {
            SignConvention::Alternating if k % 2 == 0 => -BigRational::one(),
            _ => BigRational::one(),
        };
        let prev_y = &y[k - 1];
        let contraction = (0..n).fold(BigRational::zero(), |acc, j| acc + t.get(j, 0) * &prev_y[j]);
        let z2 = if k >= 2 { z[k - 2].clone() } else { BigRational::zero() };
        let zk = &a * &z[k - 1] + &b * z2 + &two * &sgn * contraction;
        let yk: Vec<BigRational> = (0..n)
            .map(|j| {
                let mix = (0..n).fold(BigRational::zero(), |acc, m| acc + t.get(m, j) * &prev_y[m]);
                gram.get(j, 0) * &z[k - 1] + &sgn * mix
            })
            .collect();
        // P_k = Z_{k−1} u + W P_{k−1}
        let mut pk = t.matvec(&p[k - 1])?;
        pk[0] = &pk[0] + &z[k - 1];
        let ck = t.matvec(&chain[k - 1])?;
        z.push(zk);
        y.push(yk);
        p.push(pk);
        chain.push(ck);
    }
    Ok(GeneralRecursionTable {
        legs: lib.legs,
        sign,
        z,
        y,
        p,
        chain,
    })
}

fn unit_vec(n: usize, i: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); n];
    v[i] = BigRational::one();
    v
}

/// Norms, one-ended overlaps and growing chains as rung vectors, the common
/// input of the assembly routines.
#[derive(Clone, Debug)]
pub struct EvenChain<T> {
    pub legs: usize,
    /// `Z_k`, `k = 0..=len`
    pub z: Vec<T>,
    /// `P_k`, `k = 0..=len`, with `P_0 = 0`.
    pub p: Vec<Vec<T>>,
    /// `W^k u`, `k = 0..=len`
    pub chain: Vec<Vec<T>>,
    /// Coefficients of the two-ended sum, when the two-direction table exists.
    pub x: Vec<Option<[T; 4]>>,
}

impl<T: Scalar> EvenChain<T> {
    pub fn len(&self) -> usize {
        self.z.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Build from the two-direction table (legs ≤ 4).
    pub fn from_table(alg: &RungAlgebra<T>, t: &RecursionTable<T>) -> Result<Self> {
        let u = alg.one()?;
        let ubar = alg.one_bar.clone().unwrap_or_else(|| vec![T::zero(); u.len()]);
        let combine = |x: &T, y: &T| {
            let mut v = scaled(x, u);
            axpy(y, &ubar, &mut v);
            v
        };
        let len = t.len();
        let p = (0..=len).map(|k| combine(&t.a1[k], &t.a2[k])).collect();
        let chain = (0..=len).map(|k| combine(&t.g[k], &t.h[k])).collect();
        let x = (0..=len).map(|n| t.x_sum(n).ok()).collect();
        Ok(Self {
            legs: t.legs,
            z: t.z.clone(),
            p,
            chain,
            x,
        })
    }

    /// Build from the general table. Every overlap is an integer, so the
    /// rational coordinates are resolved to integer vectors first.
    pub fn from_general(lib: &BlockLibrary, t: &GeneralRecursionTable) -> Result<Self> {
        if t.sign != SignConvention::Uniform {
            return Err(invalid("only the uniform-sign table describes the state"));
        }
        let alpha = lib.alpha()?;
        let dim = lib.rung_dim();
        let resolve = |coords: &Vec<BigRational>| -> Result<Vec<T>> {
            let mut v = vec![BigRational::zero(); dim];
            for (c, a) in coords.iter().zip(&alpha.vectors) {
                for (x, y) in v.iter_mut().zip(a) {
                    *x = &*x + c * BigRational::from_integer(y.clone());
                }
            }
            v.iter()
                .map(|x| {
                    rational_to_integer(x)
                        .map(|i| T::from_bigint(&i))
                        .ok_or_else(|| invalid("overlap vector is not integral"))
                })
                .collect()
        };
        let z =
            t.z.iter()
                .map(|v| {
                    rational_to_integer(v)
                        .map(|i| T::from_bigint(&i))
                        .ok_or_else(|| invalid("norm is not integral"))
                })
                .collect::<Result<Vec<T>>>()?;
        let p = t.p.iter().map(resolve).collect::<Result<Vec<_>>>()?;
        let chain = t.chain.iter().map(resolve).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            legs: t.legs,
            x: vec![None; z.len()],
            z,
            p,
            chain,
        })
    }

    fn need(&self, k: usize) -> Result<()> {
        if k > self.len() {
            return Err(Error::TableTooShort {
                available: self.len(),
                needed: k,
            });
        }
        Ok(())
    }

    /// `Σ_{c=1}^{N−1} L_c(x₁) P_{N−c}(x_n)` as a rung-pair matrix.
    pub fn overlap_sum(&self, alg: &RungAlgebra<T>, n: usize) -> Result<Matrix<T>> {
        self.need(n)?;
        let d = alg.rung_dim();
        if let Some(x) = &self.x[n] {
            let u = alg.one()?;
            let mut m = Matrix::outer(u, u).scale(&x[0]);
            if let Some(ub) = &alg.one_bar {
                m.add_assign(&Matrix::outer(u, ub).scale(&x[1]))?;
                m.add_assign(&Matrix::outer(ub, u).scale(&x[2]))?;
                m.add_assign(&Matrix::outer(ub, ub).scale(&x[3]))?;
            }
            return Ok(m);
        }
        let mut m = Matrix::zeros(d, d);
        for c in 1..n {
            m.add_assign(&Matrix::outer(&self.chain[c - 1], &self.p[n - c]))?;
        }
        Ok(m)
    }
}

/// `W^k`, the identity for `k = 0`.
fn w_power<T: Scalar>(w: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    if k == 0 {
        Ok(Matrix::identity(w.rows()))
    } else {
        transfer_power(w, k)
    }
}

/// Named pieces of an assembled two-rung density matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    /// `Z_N |2⟩⟨2|`
    Block,
    /// `Z_{N−1} ρ̄ ⊗ |1⟩⟨1|`
    RhoBarRung,
    /// `|2⟩⟨1|⟨ξ_N| + h.c.`
    XiCross,
    /// First periodic correction, `σ_N ⊗ ρ̄`.
    WrapDiagonal,
    /// `|2⟩⟨1|⟨ξ_N| + h.c.` routed through the wrapping block.
    WrapXi,
    /// `|2⟩⟨φ_N| + h.c.`
    WrapPhi,
    /// `ρ̄ ⊗ |1⟩⟨ξ_{N−1}| + h.c.`
    WrapRhoBar,
    /// `|1⟩|·⟩⟨·|⟨1|` through `W R_{N−1} W`, plus h.c. Equal to the rank-one
    /// form `(1/A)|ξ₁⟩|1⟩⟨1|⟨η_{N−1}|`.
    WrapOffset,
    /// Odd legs: `Z_{N−2} ρ̄ ⊗ ρ̄`.
    RhoBarPair,
    /// Odd legs: `|2⟩⟨Ω_N| + h.c.`
    OmegaCross,
}

/// Two-rung density matrix in the symmetric-bond frame, with its components.
#[derive(Clone, Debug)]
pub struct AssembledRho<T> {
    pub legs: usize,
    /// Total rungs of the ladder.
    pub rungs: usize,
    pub periodic: bool,
    /// Window sites, rung `n+1` first (low bits) then rung `n+2`.
    pub sites: Vec<SiteIndex>,
    pub components: Vec<(Component, Matrix<T>)>,
    pub rho: Matrix<T>,
}

impl<T: Scalar> AssembledRho<T> {
    pub(crate) fn new(
        legs: usize,
        rungs: usize,
        periodic: bool,
        components: Vec<(Component, Matrix<T>)>,
    ) -> Result<Self> {
        let d = 1usize << (2 * legs);
        let mut rho = Matrix::zeros(d, d);
        for (_, m) in &components {
            rho.add_assign(m)?;
        }
        Ok(Self {
            legs,
            rungs,
            periodic,
            sites: window_sites(legs, rungs),
            components,
            rho,
        })
    }

    pub fn component(&self, which: Component) -> Option<&Matrix<T>> {
        self.components.iter().find(|(c, _)| *c == which).map(|(_, m)| m)
    }
}

impl AssembledRho<BigInt> {
    /// Exact density matrix in the singlet frame.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_matrix(self.sites.clone(), &self.rho)?.gauge())
    }
}

impl AssembledRho<f64> {
    /// Trace-one matrix in the singlet frame.
    pub fn normalized(&self) -> crate::density::NormalizedRho {
        let b_mask = crate::oracle::sublattice_b_mask(&self.sites) as usize;
        let tr = self.rho.trace();
        let d = self.rho.rows();
        let matrix = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            let s = if ((i & b_mask).count_ones() + (j & b_mask).count_ones()) % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            s * self.rho.get(i, j) / tr
        });
        crate::density::NormalizedRho {
            sites: self.sites.clone(),
            matrix,
        }
    }
}

/// The last two rungs of an open ladder, or rungs `rungs−1, rungs` of a ring
/// (the window the recursions address).
pub fn window_sites(legs: usize, rungs: usize) -> Vec<SiteIndex> {
    let first = rungs.saturating_sub(1).max(1);
    let mut s: Vec<SiteIndex> = (1..=legs).map(|l| SiteIndex::new(legs, l, first)).collect();
    s.extend((1..=legs).map(|l| SiteIndex::new(legs, l, first + 1)));
    s
}

fn symmetrized<T: Scalar>(m: Matrix<T>) -> Result<Matrix<T>> {
    m.add(&m.transpose())
}

fn outer_window<T: Scalar>(ket: &[T], bra: &[T]) -> Matrix<T> {
    Matrix::outer(ket, bra)
}

/// Largest two-rung window assembled densely (five legs per rung).
pub const MAX_WINDOW_SITES: usize = 10;

pub(crate) fn check_window(legs: usize) -> Result<()> {
    if 2 * legs > MAX_WINDOW_SITES {
        return Err(Error::CapExceeded {
            what: "two-rung window",
            sites: 2 * legs,
            cap: MAX_WINDOW_SITES,
        });
    }
    Ok(())
}

/// Two-rung density matrix of the last two rungs of an open even ladder with
/// `rungs` total rungs.
pub fn assemble_rho2_open<T: Scalar>(
    alg: &RungAlgebra<T>,
    chain: &EvenChain<T>,
    rungs: usize,
) -> Result<AssembledRho<T>> {
    let spec = LadderSpec::open(alg.legs, rungs)?;
    if rungs < 2 || alg.legs % 2 == 1 {
        return Err(invalid(format!(
            "open even assembly needs ≥ 2 rungs and even legs, got {spec}"
        )));
    }
    check_window(alg.legs)?;
    let n = rungs - 2;
    chain.need(n)?;
    let v = window_vec(&alg.two);
    let mut comps = vec![(Component::Block, outer_window(&v, &v).scale(&chain.z[n]))];
    if n >= 1 {
        let u = alg.one()?;
        let w = alg.two_bar()?;
        let uu = Matrix::outer(u, u);
        comps.push((
            Component::RhoBarRung,
            window_kron(&alg.rho_bar, &uu).scale(&chain.z[n - 1]),
        ));
        let xi = w.matvec(&chain.p[n])?;
        comps.push((
            Component::XiCross,
            symmetrized(outer_window(&v, &window_product(&xi, u)))?,
        ));
    }
    AssembledRho::new(alg.legs, rungs, false, comps)
}

/// Intermediate vectors and matrices of the periodic assembly.
#[derive(Clone, Debug)]
pub struct PeriodicPieces<T> {
    pub xi: Vec<T>,
    pub xi_prev: Vec<T>,
    /// Two-ended overlap `Q_N` with the chain term.
    pub q: Matrix<T>,
    /// Offset overlap `R_{N−1}`.
    pub r: Matrix<T>,
    /// `W Q_N W`
    pub phi: Matrix<T>,
    /// `W R_{N−1} W`
    pub offset: Matrix<T>,
    /// `W R_{N−1} u`
    pub eta: Vec<T>,
}

pub fn periodic_pieces<T: Scalar>(alg: &RungAlgebra<T>, chain: &EvenChain<T>, n: usize) -> Result<PeriodicPieces<T>> {
    if n < 2 {
        return Err(invalid("periodic assembly needs at least four rungs"));
    }
    chain.need(n)?;
    let u = alg.one()?;
    let w = alg.two_bar()?;
    let sum = chain.overlap_sum(alg, n)?;
    let w_chain = w_power(w, n - 1)?;
    let (q, r) = if n % 2 == 0 {
        (sum.add(&w_chain)?, sum)
    } else {
        (sum.clone(), sum.add(&w_chain)?)
    };
    let phi = w.matmul(&q)?.matmul(w)?;
    let offset = w.matmul(&r)?.matmul(w)?;
    let eta = w.matvec(&r.matvec(u)?)?;
    Ok(PeriodicPieces {
        xi: w.matvec(&chain.p[n])?,
        xi_prev: w.matvec(&chain.p[n - 1])?,
        q,
        r,
        phi,
        offset,
        eta,
    })
}

/// Two-rung density matrix of a periodic even ladder with `rungs` total rungs.
pub fn assemble_rho2_periodic<T: Scalar>(
    alg: &RungAlgebra<T>,
    chain: &EvenChain<T>,
    rungs: usize,
) -> Result<AssembledRho<T>> {
    let spec = LadderSpec::periodic(alg.legs, rungs)?;
    if alg.legs % 2 == 1 {
        return Err(invalid(format!("even assembly called for {spec}")));
    }
    let n = rungs - 2;
    let open = assemble_rho2_open(alg, chain, rungs)?;
    let pc = periodic_pieces(alg, chain, n)?;
    let u = alg.one()?;
    let d = alg.rung_dim();
    let rho_bar = &alg.rho_bar;
    let v = window_vec(&alg.two);

    let mut sigma = Matrix::outer(u, u).scale(&chain.z[n - 1]);
    sigma.add_assign(&rho_bar.scale(&chain.z[n - 2]))?;
    sigma.add_assign(&symmetrized(Matrix::outer(u, &pc.xi_prev))?)?;

    let mut comps = open.components;
    comps.push((Component::WrapDiagonal, window_kron(&sigma, rho_bar)));
    comps.push((
        Component::WrapXi,
        symmetrized(outer_window(&window_product(u, &pc.xi), &v))?,
    ));
    comps.push((Component::WrapPhi, symmetrized(outer_window(&window_vec(&pc.phi), &v))?));
    comps.push((
        Component::WrapRhoBar,
        symmetrized(window_kron(rho_bar, &Matrix::outer(&pc.xi_prev, u)))?,
    ));
    let offset = Matrix::from_fn(d * d, d * d, |row, col| {
        let (a, b) = (row % d, row / d);
        let (ap, bp) = (col % d, col / d);
        u[a].mul_ref(pc.offset.get(b, ap)).mul_ref(&u[bp])
    });
    comps.push((Component::WrapOffset, symmetrized(offset)?));
    AssembledRho::new(alg.legs, rungs, true, comps)
}

/// Exact two-rung density matrix of an even ladder (singlet frame, unnormalised).
pub fn rho2_even_exact(lib: &BlockLibrary, spec: LadderSpec) -> Result<AssembledRho<BigInt>> {
    check_window(lib.legs)?;
    let chain = exact_chain(lib, spec.rungs)?;
    let alg = lib.algebra::<BigInt>();
    if spec.periodic {
        assemble_rho2_periodic(&alg, &chain, spec.rungs)
    } else {
        assemble_rho2_open(&alg, &chain, spec.rungs)
    }
}

/// The exact chain up to `len` rungs, from whichever recursion the basis allows.
pub fn exact_chain(lib: &BlockLibrary, len: usize) -> Result<EvenChain<BigInt>> {
    let alg = lib.algebra::<BigInt>();
    if lib.alpha()?.len() <= 2 {
        EvenChain::from_table(&alg, &run_even_recursion(lib, len)?)
    } else {
        EvenChain::from_general(lib, &run_even_recursion_general(lib, len, SignConvention::Uniform)?)
    }
}

/// Floating-point chain; the two-direction recursion runs in `f64` directly.
pub fn float_chain(lib: &BlockLibrary, len: usize) -> Result<EvenChain<f64>> {
    let alg = lib.algebra::<f64>();
    if lib.alpha()?.len() <= 2 {
        EvenChain::from_table(&alg, &run_even_recursion_in::<f64>(lib, len)?)
    } else {
        EvenChain::from_general(lib, &run_even_recursion_general(lib, len, SignConvention::Uniform)?)
    }
}

/// Norm of the periodic ladder from the two-ended overlap alone:
/// `Z_{N+2} + B Z_N + 2⟨W, Q_{N+2}⟩`.
pub fn periodic_norm(lib: &BlockLibrary, rungs: usize) -> Result<BigInt> {
    LadderSpec::periodic(lib.legs, rungs)?;
    let chain = exact_chain(lib, rungs)?;
    let alg = lib.algebra::<BigInt>();
    let w = alg.two_bar()?;
    let n = rungs - 2;
    let mut q = chain.overlap_sum(&alg, rungs)?;
    if rungs % 2 == 0 {
        q.add_assign(&w_power(w, rungs - 1)?)?;
    }
    let cross = dot(q.as_slice(), w.as_slice());
    let b = w.frobenius_sq();
    Ok(chain.z[rungs].clone() + b * &chain.z[n] + cross * BigInt::from(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::build_blocks;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn norms_match_the_oracle() {
        use crate::oracle::rvb_literal_even;
        for (m, max) in [(2, 8), (4, 4)] {
            let lib = build_blocks(m).unwrap();
            let t = run_even_recursion(&lib, max).unwrap();
            for rungs in 1..=max {
                let psi = rvb_literal_even(LadderSpec::open(m, rungs).unwrap(), 24).unwrap();
                assert_eq!(t.z[rungs], psi.norm_sq(), "M = {m}, rungs = {rungs}");
            }
        }
        let lib = build_blocks(2).unwrap();
        assert_eq!(run_even_recursion(&lib, 2).unwrap().z, ints(&[1, 2, 12]));
    }

    #[test]
    fn lagged_variant_differs_at_two_rungs() {
        let lib = build_blocks(2).unwrap();
        let z = lagged_norm_variant(&lib, 3).unwrap();
        assert_eq!(z[2], BigInt::from(8));
    }

    #[test]
    fn paired_and_direct_x_agree() {
        for m in [2, 4] {
            let lib = build_blocks(m).unwrap();
            let t = run_even_recursion(&lib, 12).unwrap();
            for n in 2..=12 {
                assert_eq!(t.x_sum(n).unwrap(), t.x_paired(n).unwrap(), "M = {m}, N = {n}");
            }
        }
    }

    #[test]
    fn general_table_matches_two_direction_table() {
        for m in [2, 4] {
            let lib = build_blocks(m).unwrap();
            let t = run_even_recursion(&lib, 10).unwrap();
            let g = run_even_recursion_general(&lib, 10, SignConvention::Uniform).unwrap();
            for k in 0..=10 {
                assert_eq!(g.z_integer(k).unwrap(), t.z[k]);
            }
        }
    }

    #[test]
    fn open_trace_is_the_norm() {
        for m in [2, 4] {
            let lib = build_blocks(m).unwrap();
            let t = run_even_recursion(&lib, 12).unwrap();
            for rungs in 2..=12 {
                let rho = rho2_even_exact(&lib, LadderSpec::open(m, rungs).unwrap()).unwrap();
                assert_eq!(rho.rho.trace(), t.z[rungs], "M = {m}, rungs = {rungs}");
                assert!(rho.rho.is_symmetric());
            }
        }
    }

    #[test]
    fn periodic_trace_is_the_ring_norm() {
        for m in [2, 4] {
            let lib = build_blocks(m).unwrap();
            for rungs in (4..=12).step_by(2) {
                let rho = rho2_even_exact(&lib, LadderSpec::periodic(m, rungs).unwrap()).unwrap();
                assert_eq!(rho.rho.trace(), periodic_norm(&lib, rungs).unwrap());
            }
        }
    }

    #[test]
    fn float_path_tracks_exact_path() {
        let lib = build_blocks(4).unwrap();
        let spec = LadderSpec::periodic(4, 10).unwrap();
        let exact = rho2_even_exact(&lib, spec).unwrap().to_density().unwrap().normalized();
        let chain = float_chain(&lib, 10).unwrap();
        let fl = assemble_rho2_periodic(&lib.algebra::<f64>(), &chain, 10)
            .unwrap()
            .normalized();
        assert!((exact.matrix - fl.matrix).amax() < 1e-13);
    }
}
