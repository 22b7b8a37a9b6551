//! Generalized geometric measure, Werner fits and negativity.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::density::NormalizedRho;
use crate::error::{invalid, Error, Result};
use crate::lattice::SiteIndex;
use crate::oracle::StateVector;
use crate::spectrum::{max_eigenvalue, symmetric_eigenvalues};

/// Two candidates closer than this count as tied; the earlier subset wins.
pub const TIE_TOL: f64 = 1e-12;

/// Largest state `ggm_exact` accepts.
pub const EXACT_GGM_MAX_SITES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct GGMResult {
    pub ggm: f64,
    pub lambda_sq_max: f64,
    pub argmax_subset: Vec<SiteIndex>,
    /// Eigenvalues (ascending) per subset considered. The exact path keeps
    /// only the maximising subset.
    pub subset_spectra: Vec<(Vec<SiteIndex>, Vec<f64>)>,
}

impl GGMResult {
    /// `leg@rung;leg@rung;…`
    pub fn argmax_label(&self) -> String {
        subset_label(&self.argmax_subset)
    }
}

pub fn subset_label(sites: &[SiteIndex]) -> String {
    sites.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

/// Position lists of every nonempty subset of `n` sites with at most `k`
/// members, in lexicographic order.
fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u64..1 << n)
        .filter(|m| m.count_ones() as usize <= k)
        .map(|m| (0..n).filter(|b| m >> b & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

fn pick_max(cands: impl IntoIterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in cands {
        match best {
            Some((_, b)) if l <= b + TIE_TOL => {}
            _ => best = Some((i, l)),
        }
    }
    best
}

/// GGM from a two-rung window: the largest eigenvalue over every window
/// subset of size at most `max_subset`.
pub fn ggm_from_window(rho: &NormalizedRho, max_subset: usize) -> Result<GGMResult> {
    let n = rho.sites.len();
    if max_subset == 0 || max_subset > n {
        return Err(invalid(format!(
            "max_subset must be in 1..={n} for a {n}-site window, got {max_subset}"
        )));
    }
    let subsets = subsets_up_to(n, max_subset);
    let spectra: Vec<Vec<f64>> = subsets
        .par_iter()
        .map(|pos| symmetric_eigenvalues(&rho.reduce(pos)))
        .collect();
    let (i, lambda) = pick_max(
        spectra
            .iter()
            .enumerate()
            .map(|(i, ev)| (i, ev.last().copied().unwrap_or(0.0))),
    )
    .expect("at least one subset");
    let label = |pos: &Vec<usize>| pos.iter().map(|&p| rho.sites[p]).collect::<Vec<_>>();
    Ok(GGMResult {
        ggm: 1.0 - lambda,
        lambda_sq_max: lambda,
        argmax_subset: label(&subsets[i]),
        subset_spectra: subsets.iter().map(label).zip(spectra).collect(),
    })
}

/// Rank of every `bits`-bit word within the words of equal popcount.
fn popcount_ranks(bits: usize) -> Vec<usize> {
    let mut seen = vec![0usize; bits + 1];
    (0..1usize << bits)
        .map(|x| {
            let p = x.count_ones() as usize;
            seen[p] += 1;
            seen[p] - 1
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn gather(c: u64, pos: &[usize]) -> usize {
    pos.iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((c >> p) & 1) as usize) << k)
}

/// Eigenvalues of the reduced matrix on `keep`, from normalised amplitudes.
fn reduced_spectrum(amps: &[(u64, f64)], n: usize, keep: &[usize], fixed_ups: Option<usize>) -> Vec<f64> {
    let env: Vec<usize> = (0..n).filter(|b| !keep.contains(b)).collect();
    let (k, e) = (keep.len(), env.len());
    let Some(total) = fixed_ups else {
        let mut a = DMatrix::<f64>::zeros(1 << k, 1 << e);
        for &(c, x) in amps {
            a[(gather(c, keep), gather(c, &env))] += x;
        }
        return symmetric_eigenvalues(&(&a * a.transpose()));
    };
    // Every configuration has the same number of up spins, so the reduced
    // matrix is block diagonal in the kept popcount.
    let (rk, re) = (popcount_ranks(k), popcount_ranks(e));
    let mut blocks: Vec<DMatrix<f64>> = (0..=k)
        .map(|p| {
            let cols = if total >= p { binomial(e, total - p) } else { 0 };
            DMatrix::zeros(binomial(k, p), cols)
        })
        .collect();
    for &(c, x) in amps {
        let (xk, xe) = (gather(c, keep), gather(c, &env));
        blocks[xk.count_ones() as usize][(rk[xk], re[xe])] += x;
    }
    let mut ev = Vec::with_capacity(1 << k);
    for b in blocks.iter().filter(|b| b.nrows() > 0) {
        if b.ncols() == 0 {
            ev.extend(std::iter::repeat(0.0).take(b.nrows()));
            continue;
        }
        let g = b * b.transpose();
        ev.extend(symmetric_eigenvalues(&g));
    }
    ev.sort_by(f64::total_cmp);
    ev
}

/// GGM of a pure state by brute force over every bipartition.
pub fn ggm_exact(state: &StateVector) -> Result<GGMResult> {
    let n = state.sites().len();
    if n > EXACT_GGM_MAX_SITES {
        return Err(Error::CapExceeded {
            what: "exact GGM",
            sites: n,
            cap: EXACT_GGM_MAX_SITES,
        });
    }
    if n < 2 {
        return Err(invalid("a bipartition needs at least two sites"));
    }
    let norm = crate::density::log2_big(&state.norm_sq());
    let scale = (-norm / 2.0).exp2();
    let amps: Vec<(u64, f64)> = state
        .sorted_entries()
        .into_iter()
        .map(|(c, a)| (c, a as f64 * scale))
        .collect();
    if amps.is_empty() {
        return Err(invalid("zero state"));
    }
    let ups = amps[0].0.count_ones();
    let fixed = amps.iter().all(|(c, _)| c.count_ones() == ups).then_some(ups as usize);
    // One representative per bipartition: the smaller side, and the side
    // holding site 0 when both halves are equal.
    let subsets: Vec<Vec<usize>> = subsets_up_to(n, n / 2)
        .into_iter()
        .filter(|s| 2 * s.len() < n || s[0] == 0)
        .collect();
    let lambdas: Vec<f64> = subsets
        .par_iter()
        .map(|pos| reduced_spectrum(&amps, n, pos, fixed).last().copied().unwrap_or(0.0))
        .collect();
    let (i, lambda) = pick_max(lambdas.into_iter().enumerate()).expect("n ≥ 2");
    let sites: Vec<SiteIndex> = subsets[i].iter().map(|&p| state.sites()[p]).collect();
    let spectrum = reduced_spectrum(&amps, n, &subsets[i], fixed);
    Ok(GGMResult {
        ggm: 1.0 - lambda,
        lambda_sq_max: lambda,
        argmax_subset: sites.clone(),
        subset_spectra: vec![(sites, spectrum)],
    })
}

/// Eigenvalues of the reduced matrix of a pure state on `keep` positions.
pub fn state_subset_spectrum(state: &StateVector, keep: &[usize]) -> Result<Vec<f64>> {
    let n = state.sites().len();
    if keep.iter().any(|&p| p >= n) {
        return Err(invalid("subset position outside the state's support"));
    }
    let norm = crate::density::log2_big(&state.norm_sq());
    let scale = (-norm / 2.0).exp2();
    let amps: Vec<(u64, f64)> = state.iter().map(|(c, a)| (c, a as f64 * scale)).collect();
    Ok(reduced_spectrum(&amps, n, keep, None))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WernerFit {
    pub p: f64,
    /// Largest entrywise deviation from `p |s⟩⟨s| + (1 − p) I/4`.
    pub residual: f64,
}

fn two_site(rho: &DMatrix<f64>) -> Result<()> {
    if rho.nrows() != 4 || rho.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.nrows(),
        });
    }
    Ok(())
}

/// `|s⟩⟨s|` for the singlet `(|10⟩ − |01⟩)/√2` (first site in the low bit).
fn singlet_projector() -> DMatrix<f64> {
    let mut s = DMatrix::zeros(4, 4);
    s[(1, 1)] = 0.5;
    s[(2, 2)] = 0.5;
    s[(1, 2)] = -0.5;
    s[(2, 1)] = -0.5;
    s
}

pub fn werner_fit(rho: &DMatrix<f64>) -> Result<WernerFit> {
    two_site(rho)?;
    let proj = singlet_projector();
    let overlap = (rho.component_mul(&proj)).sum();
    let p = (4.0 * overlap - 1.0) / 3.0;
    let model = &proj * p + DMatrix::identity(4, 4) * ((1.0 - p) / 4.0);
    Ok(WernerFit {
        p,
        residual: (rho - model).amax(),
    })
}

/// Transpose the second site: `ρ^{T_B}[(a,b),(a',b')] = ρ[(a,b'),(a',b)]`.
fn partial_transpose(rho: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| {
        let (a, b) = (i & 1, i >> 1);
        let (ap, bp) = (j & 1, j >> 1);
        rho[(a | bp << 1, ap | b << 1)]
    })
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
pub fn negativity(rho: &DMatrix<f64>) -> Result<f64> {
    two_site(rho)?;
    Ok(symmetric_eigenvalues(&partial_transpose(rho))
        .into_iter()
        .filter(|&l| l < 0.0)
        .map(f64::abs)
        .sum())
}

/// Largest eigenvalue of a window subset, exposed for diagnostics.
pub fn subset_lambda_max(rho: &NormalizedRho, pos: &[usize]) -> f64 {
    max_eigenvalue(&rho.reduce(pos))
}
