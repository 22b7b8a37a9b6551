//! Exact state vectors for small ladders.
//!
//! Everything here works on explicit sparse amplitude maps with integer
//! amplitudes. It is deliberately independent of the recursion engine in
//! [`crate::even`] and [`crate::odd`]: those modules are checked against the
//! states built here.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::density::DensityMatrix;
use crate::error::{invalid, Error, Result};
use crate::lattice::{
    enumerate_coverings, enumerate_matchings, rung_covering, rung_sites, two_rung_region, Covering, Dimer, LadderSpec,
    SiteIndex, Sublattice,
};

/// Two-spin bond state used when expanding dimers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BondSign {
    /// `|0⟩_a|1⟩_b − |1⟩_a|0⟩_b` with `a` on sublattice A.
    Singlet,
    /// `|01⟩ + |10⟩`. Equal to the singlet frame up to `Z` on every B site and
    /// a sign of `(−1)^(#dimers)`.
    Symmetric,
}

/// Sparse integer-amplitude vector. Bit `b` of a configuration word is the
/// spin of `sites[b]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVector {
    sites: Vec<SiteIndex>,
    amps: HashMap<u64, i64>,
}

impl StateVector {
    /// The empty-support state with amplitude one.
    pub fn unit() -> Self {
        Self {
            sites: Vec::new(),
            amps: HashMap::from([(0, 1)]),
        }
    }

    pub fn zero(sites: Vec<SiteIndex>) -> Self {
        Self {
            sites,
            amps: HashMap::new(),
        }
    }

    pub fn from_amplitudes(sites: Vec<SiteIndex>, amps: impl IntoIterator<Item = (u64, i64)>) -> Result<Self> {
        if sites.len() > 64 {
            return Err(invalid("state support exceeds 64 sites"));
        }
        let mut out = Self::zero(sites);
        for (config, a) in amps {
            if out.sites.len() < 64 && config >> out.sites.len() != 0 {
                return Err(invalid(format!(
                    "configuration {config:#x} has bits outside a {}-site support",
                    out.sites.len()
                )));
            }
            let e = out.amps.entry(config).or_insert(0);
            *e = e
                .checked_add(a)
                .ok_or_else(|| invalid(format!("amplitude of {config:#x} overflows 64 bits")))?;
        }
        out.amps.retain(|_, a| *a != 0);
        Ok(out)
    }

    pub fn sites(&self) -> &[SiteIndex] {
        &self.sites
    }

    pub fn amplitude(&self, config: u64) -> i64 {
        self.amps.get(&config).copied().unwrap_or(0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.amps.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.amps.iter().map(|(&c, &a)| (c, a))
    }

    /// Entries sorted by configuration word.
    pub fn sorted_entries(&self) -> Vec<(u64, i64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_unstable();
        v
    }

    fn accumulate(&mut self, config: u64, a: i64) {
        if a == 0 {
            return;
        }
        let e = self.amps.entry(config).or_insert(0);
        *e += a;
        if *e == 0 {
            self.amps.remove(&config);
        }
    }

    pub fn norm_sq(&self) -> BigInt {
        self.amps
            .values()
            .map(|&a| BigInt::from(i128::from(a) * i128::from(a)))
            .sum()
    }

    pub fn scale(&self, k: i64) -> Self {
        let mut out = Self::zero(self.sites.clone());
        for (c, a) in self.iter() {
            out.accumulate(c, a * k);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_support(other)?;
        let mut out = self.clone();
        for (c, a) in other.iter() {
            out.accumulate(c, a);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1))
    }

    /// Tensor product on disjoint supports; `other`'s sites follow `self`'s.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if let Some(s) = other.sites.iter().find(|s| self.sites.contains(s)) {
            return Err(Error::SupportMismatch(format!("site {s} appears on both factors")));
        }
        let shift = self.sites.len();
        if shift + other.sites.len() > 64 {
            return Err(invalid("tensor product exceeds 64 sites"));
        }
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        let mut out = Self::zero(sites);
        for (c1, a1) in self.iter() {
            for (c2, a2) in other.iter() {
                out.accumulate(c1 | (c2 << shift), a1 * a2);
            }
        }
        Ok(out)
    }

    /// Same state with bits laid out in the order of `target`, a permutation
    /// of the current support.
    pub fn reorder(&self, target: &[SiteIndex]) -> Result<Self> {
        if target.len() != self.sites.len() {
            return Err(Error::SupportMismatch(format!(
                "reorder target has {} sites, state has {}",
                target.len(),
                self.sites.len()
            )));
        }
        let perm: Vec<usize> = self
            .sites
            .iter()
            .map(|s| {
                target
                    .iter()
                    .position(|t| t == s)
                    .ok_or_else(|| Error::SupportMismatch(format!("site {s} missing from target")))
            })
            .collect::<Result<_>>()?;
        let mut out = Self::zero(target.to_vec());
        for (c, a) in self.iter() {
            let mut nc = 0u64;
            for (b, &p) in perm.iter().enumerate() {
                nc |= ((c >> b) & 1) << p;
            }
            out.accumulate(nc, a);
        }
        Ok(out)
    }

    /// Reorder to rung-major linear order.
    pub fn canonical(&self) -> Self {
        let mut target = self.sites.clone();
        target.sort();
        self.reorder(&target).expect("sorted support is a permutation")
    }

    /// Apply `Z` on every sublattice-B site and multiply by `sign`; this is the
    /// map between the two [`BondSign`] frames.
    pub fn gauge(&self, sign: i64) -> Self {
        let mask = sublattice_b_mask(&self.sites);
        let mut out = Self::zero(self.sites.clone());
        for (c, a) in self.iter() {
            let s = if (c & mask).count_ones() % 2 == 1 { -sign } else { sign };
            out.accumulate(c, a * s);
        }
        out
    }

    fn check_same_support(&self, other: &Self) -> Result<()> {
        if self.sites != other.sites {
            return Err(Error::SupportMismatch(format!(
                "{} sites vs {} sites (or different order)",
                self.sites.len(),
                other.sites.len()
            )));
        }
        Ok(())
    }

    /// Text dump, one `bitstring amplitude` line per nonzero entry. The
    /// bitstring lists the spins of `sites[0], sites[1], …` left to right.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (c, a) in self.sorted_entries() {
            for b in 0..self.sites.len() {
                out.push(if (c >> b) & 1 == 1 { '1' } else { '0' });
            }
            let _ = writeln!(out, " {a}");
        }
        out
    }
}

/// Parse the output of [`StateVector::dump`] onto a given support.
pub fn parse_state_dump(text: &str, sites: Vec<SiteIndex>) -> Result<StateVector> {
    let width = sites.len();
    if width > 64 {
        return Err(invalid("state support exceeds 64 sites"));
    }
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(bits), Some(amp), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                line: i + 1,
                msg: "expected `bitstring amplitude`".into(),
            });
        };
        if bits.len() != width {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("bitstring has {} spins, support has {width}", bits.len()),
            });
        }
        let mut c = 0u64;
        for (b, ch) in bits.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => c |= 1 << b,
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("bad spin character {ch:?}"),
                    })
                }
            }
        }
        let a: i64 = amp.parse().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad amplitude: {e}"),
        })?;
        entries.push((c, a));
    }
    StateVector::from_amplitudes(sites, entries)
}

pub fn sublattice_b_mask(sites: &[SiteIndex]) -> u64 {
    sites
        .iter()
        .enumerate()
        .filter(|(_, s)| s.sublattice() == Sublattice::B)
        .fold(0u64, |m, (b, _)| m | (1 << b))
}

/// Product of bond states over a covering of `support`.
pub fn covering_state_with(c: &Covering, support: &[SiteIndex], sign: BondSign) -> Result<StateVector> {
    c.check_perfect(support)?;
    let pos = |s: SiteIndex| support.iter().position(|t| *t == s).expect("checked");
    let mut amps: Vec<(u64, i64)> = vec![(0, 1)];
    for d in &c.dimers {
        let (pa, pb) = (pos(d.from), pos(d.to));
        let mut next = Vec::with_capacity(amps.len() * 2);
        for (cfg, a) in amps {
            // |0_a 1_b⟩
            next.push((cfg | (1 << pb), a));
            // ∓|1_a 0_b⟩
            let s = match sign {
                BondSign::Singlet => -1,
                BondSign::Symmetric => 1,
            };
            next.push((cfg | (1 << pa), a * s));
        }
        amps = next;
    }
    StateVector::from_amplitudes(support.to_vec(), amps)
}

/// Singlet-frame covering state.
pub fn covering_state(c: &Covering, support: &[SiteIndex]) -> Result<StateVector> {
    covering_state_with(c, support, BondSign::Singlet)
}

/// Exact bilinear overlap. Supports must agree in content and order.
pub fn inner(u: &StateVector, v: &StateVector) -> Result<BigInt> {
    u.check_same_support(v)?;
    let (small, large) = if u.amps.len() <= v.amps.len() { (u, v) } else { (v, u) };
    let mut acc: i128 = 0;
    for (c, a) in small.iter() {
        if let Some(&b) = large.amps.get(&c) {
            acc += i128::from(a) * i128::from(b);
        }
    }
    Ok(BigInt::from(acc))
}

fn check_cap(spec: &LadderSpec, cap: usize, what: &'static str) -> Result<()> {
    if spec.sites() > cap {
        return Err(Error::CapExceeded {
            what,
            sites: spec.sites(),
            cap,
        });
    }
    Ok(())
}

/// Unit-weight superposition of every nearest-neighbour covering.
pub fn rvb_full(spec: LadderSpec, cap: usize) -> Result<StateVector> {
    rvb_full_with(spec, cap, BondSign::Singlet)
}

pub fn rvb_full_with(spec: LadderSpec, cap: usize, sign: BondSign) -> Result<StateVector> {
    check_cap(&spec, cap, "full covering superposition")?;
    let support = spec.all_sites();
    let mut out = StateVector::zero(support.clone());
    for c in enumerate_coverings(spec, cap)? {
        out = out.add(&covering_state_with(&c, &support, sign)?)?;
    }
    Ok(out)
}

/// Rung-space and two-rung block states placed at absolute rung positions.
pub struct BlockStates {
    legs: usize,
    sign: BondSign,
}

impl BlockStates {
    pub fn new(legs: usize, sign: BondSign) -> Self {
        Self { legs, sign }
    }

    /// `|1⟩` on `rung`: vertical dimers (1,2)(3,4)….
    pub fn one(&self, rung: usize) -> Result<StateVector> {
        covering_state_with(
            &rung_covering(self.legs, rung)?,
            &rung_sites(self.legs, rung),
            self.sign,
        )
    }

    /// `|2⟩` on rungs `(first, second)`: every covering of the `legs × 2` block.
    pub fn two(&self, first: usize, second: usize) -> Result<StateVector> {
        let region = two_rung_region(self.legs, first, second)?;
        let mut out = StateVector::zero(region.sites.clone());
        for c in enumerate_matchings(&region) {
            out = out.add(&covering_state_with(&c, &region.sites, self.sign)?)?;
        }
        Ok(out)
    }

    /// `|2̄⟩ = |2⟩ − |1⟩|1⟩`.
    pub fn two_bar(&self, first: usize, second: usize) -> Result<StateVector> {
        let prod = self.one(first)?.tensor(&self.one(second)?)?;
        self.two(first, second)?.sub(&prod)
    }
}

/// Open even-leg state on rungs `start..start+k` expanded through
/// `|k⟩ = |k−1⟩|1⟩ + |k−2⟩|2̄⟩`.
fn literal_even_open_run(blocks: &BlockStates, start: usize, len: usize) -> Result<StateVector> {
    let mut memo: Vec<StateVector> = vec![StateVector::unit()];
    for k in 1..=len {
        let last = start + k - 1;
        let mut next = memo[k - 1].tensor(&blocks.one(last)?)?;
        if k >= 2 {
            next = next.add(&memo[k - 2].tensor(&blocks.two_bar(last - 1, last)?)?)?;
        }
        memo.push(next);
    }
    Ok(memo.pop().expect("len + 1 entries"))
}

/// Even-leg state built literally from the rung recursion, with the periodic
/// term `|N−2⟩_{2..N−1} |2̄⟩_{N,1}` added when `spec.periodic`.
pub fn rvb_literal_even(spec: LadderSpec, cap: usize) -> Result<StateVector> {
    rvb_literal_even_with(spec, cap, BondSign::Singlet)
}

pub fn rvb_literal_even_with(spec: LadderSpec, cap: usize, sign: BondSign) -> Result<StateVector> {
    spec.validate()?;
    if spec.legs % 2 != 0 {
        return Err(invalid(format!(
            "literal even-ladder state needs even legs, got {}",
            spec.legs
        )));
    }
    check_cap(&spec, cap, "literal even-ladder state")?;
    let blocks = BlockStates::new(spec.legs, sign);
    let open = literal_even_open_run(&blocks, 1, spec.rungs)?;
    if !spec.periodic {
        return Ok(open.canonical());
    }
    let n = spec.rungs;
    let wrap = literal_even_open_run(&blocks, 2, n - 2)?.tensor(&blocks.two_bar(n, 1)?)?;
    open.add(&wrap.reorder(open.sites())?).map(|s| s.canonical())
}

/// Odd-leg state: a product of two-rung blocks `|2⟩_{1,2}|2⟩_{3,4}…`, plus the
/// shifted tiling `|2⟩_{2,3}…|2⟩_{N,1}` when periodic.
pub fn rvb_literal_odd(spec: LadderSpec, cap: usize) -> Result<StateVector> {
    rvb_literal_odd_with(spec, cap, BondSign::Singlet)
}

pub fn rvb_literal_odd_with(spec: LadderSpec, cap: usize, sign: BondSign) -> Result<StateVector> {
    spec.validate()?;
    if spec.legs % 2 == 0 {
        return Err(invalid(format!(
            "literal odd-ladder state needs odd legs, got {}",
            spec.legs
        )));
    }
    if spec.rungs % 2 != 0 {
        return Err(invalid(format!(
            "odd-ladder state needs even rungs, got {}",
            spec.rungs
        )));
    }
    check_cap(&spec, cap, "literal odd-ladder state")?;
    let blocks = BlockStates::new(spec.legs, sign);
    let n = spec.rungs;
    let mut open = StateVector::unit();
    for k in (1..n).step_by(2) {
        open = open.tensor(&blocks.two(k, k + 1)?)?;
    }
    if !spec.periodic {
        return Ok(open.canonical());
    }
    let mut shifted = StateVector::unit();
    for k in (2..n).step_by(2) {
        shifted = shifted.tensor(&blocks.two(k, k + 1)?)?;
    }
    shifted = shifted.tensor(&blocks.two(n, 1)?)?;
    open.add(&shifted.reorder(open.sites())?).map(|s| s.canonical())
}

/// The literal recursion written out at covering level: each term is one
/// covering with its (unit) coefficient. Used for the literal-versus-full
/// diagnostic; the state-vector expansion above stays the ground truth.
pub fn literal_covering_terms(spec: LadderSpec) -> Result<Vec<Covering>> {
    spec.validate()?;
    let m = spec.legs;
    let block_terms = |first: usize, second: usize, drop_vertical: bool| -> Result<Vec<Vec<Dimer>>> {
        let region = two_rung_region(m, first, second)?;
        Ok(enumerate_matchings(&region)
            .into_iter()
            .filter(|c| !drop_vertical || c.dimers.iter().any(|d| d.from.rung != d.to.rung))
            .map(|c| c.dimers)
            .collect())
    };
    let concat = |a: &[Vec<Dimer>], b: &[Vec<Dimer>]| -> Vec<Vec<Dimer>> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                let mut v = x.clone();
                v.extend_from_slice(y);
                out.push(v);
            }
        }
        out
    };
    let n = spec.rungs;
    let terms: Vec<Vec<Dimer>> = if m % 2 == 0 {
        let run = |start: usize, len: usize| -> Result<Vec<Vec<Dimer>>> {
            let mut memo: Vec<Vec<Vec<Dimer>>> = vec![vec![Vec::new()]];
            for k in 1..=len {
                let last = start + k - 1;
                let one = vec![rung_covering(m, last)?.dimers];
                let mut next = concat(&memo[k - 1], &one);
                if k >= 2 {
                    next.extend(concat(&memo[k - 2], &block_terms(last - 1, last, true)?));
                }
                memo.push(next);
            }
            Ok(memo.pop().expect("nonempty"))
        };
        let mut t = run(1, n)?;
        if spec.periodic {
            t.extend(concat(&run(2, n - 2)?, &block_terms(n, 1, true)?));
        }
        t
    } else {
        if n % 2 != 0 {
            return Ok(Vec::new());
        }
        let tiling = |starts: Vec<(usize, usize)>| -> Result<Vec<Vec<Dimer>>> {
            let mut acc = vec![Vec::new()];
            for (a, b) in starts {
                acc = concat(&acc, &block_terms(a, b, false)?);
            }
            Ok(acc)
        };
        let mut t = tiling((1..n).step_by(2).map(|k| (k, k + 1)).collect())?;
        if spec.periodic {
            let mut pairs: Vec<_> = (2..n).step_by(2).map(|k| (k, k + 1)).collect();
            pairs.push((n, 1));
            t.extend(tiling(pairs)?);
        }
        t
    };
    Ok(terms.into_iter().map(|dimers| Covering { dimers }).collect())
}

/// Reduced matrix on `keep` (in the given order).
pub fn partial_trace(state: &StateVector, keep: &[SiteIndex]) -> Result<DensityMatrix> {
    if keep.is_empty() || keep.len() > state.sites.len() {
        return Err(invalid(format!(
            "keep set must be nonempty and within the support ({} of {} sites)",
            keep.len(),
            state.sites.len()
        )));
    }
    let keep_pos: Vec<usize> = keep
        .iter()
        .map(|s| {
            state
                .sites
                .iter()
                .position(|t| t == s)
                .ok_or_else(|| invalid(format!("site {s} not in the state's support")))
        })
        .collect::<Result<_>>()?;
    let mut uniq = keep_pos.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != keep_pos.len() {
        return Err(invalid("keep set lists a site twice"));
    }
    let keep_mask = keep_pos.iter().fold(0u64, |m, &p| m | (1 << p));
    let dim = 1usize << keep.len();
    let mut groups: HashMap<u64, Vec<(usize, i64)>> = HashMap::new();
    for (c, a) in state.iter() {
        let mut k = 0usize;
        for (b, &p) in keep_pos.iter().enumerate() {
            k |= (((c >> p) & 1) as usize) << b;
        }
        groups.entry(c & !keep_mask).or_default().push((k, a));
    }
    let mut acc = vec![0i128; dim * dim];
    for list in groups.values() {
        for &(i, ai) in list {
            for &(j, aj) in list {
                acc[i * dim + j] += i128::from(ai) * i128::from(aj);
            }
        }
    }
    DensityMatrix::new(keep.to_vec(), acc.into_iter().map(BigInt::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DEFAULT_SITE_CAP;

    fn open(m: usize, n: usize) -> LadderSpec {
        LadderSpec::open(m, n).unwrap()
    }

    #[test]
    fn single_dimer_state() {
        let spec = open(1, 2);
        let c = &enumerate_coverings(spec, DEFAULT_SITE_CAP).unwrap()[0];
        let s = covering_state(c, &spec.all_sites()).unwrap();
        assert_eq!(s.nonzero_count(), 2);
        assert_eq!(s.norm_sq(), BigInt::from(2));
        // site (1,1) is on A: |0_a 1_b⟩ has bit 1 set -> +1, bit 0 set -> −1
        assert_eq!(s.amplitude(0b10), 1);
        assert_eq!(s.amplitude(0b01), -1);
    }

    #[test]
    fn covering_norms_are_powers_of_two() {
        let spec = open(2, 2);
        let sites = spec.all_sites();
        let covs = enumerate_coverings(spec, DEFAULT_SITE_CAP).unwrap();
        for c in &covs {
            let s = covering_state(c, &sites).unwrap();
            assert_eq!(s.nonzero_count(), 4);
            assert_eq!(s.norm_sq(), BigInt::from(4));
        }
        let a = covering_state(&covs[0], &sites).unwrap();
        let b = covering_state(&covs[1], &sites).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), BigInt::from(2));
    }

    #[test]
    fn mixed_coverings_of_three_leg_block_overlap_by_two() {
        let spec = open(3, 2);
        let sites = spec.all_sites();
        let covs = enumerate_coverings(spec, DEFAULT_SITE_CAP).unwrap();
        let mixed: Vec<_> = covs
            .iter()
            .filter(|c| c.dimers.iter().any(|d| d.from.rung == d.to.rung))
            .collect();
        assert_eq!(mixed.len(), 2);
        let a = covering_state(mixed[0], &sites).unwrap();
        let b = covering_state(mixed[1], &sites).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), BigInt::from(2));
    }

    #[test]
    fn unmatched_site_is_an_error() {
        let spec = open(2, 2);
        let c = Covering {
            dimers: vec![Dimer::between(spec.site(1, 1), spec.site(2, 1)).unwrap()],
        };
        assert!(covering_state(&c, &spec.all_sites()).is_err());
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let a = BlockStates::new(2, BondSign::Singlet).one(1).unwrap();
        let b = BlockStates::new(2, BondSign::Singlet).one(2).unwrap();
        assert!(matches!(inner(&a, &b), Err(Error::SupportMismatch(_))));
    }

    #[test]
    fn full_state_norms() {
        let cap = DEFAULT_SITE_CAP;
        assert_eq!(rvb_full(open(2, 2), cap).unwrap().norm_sq(), BigInt::from(12));
        assert_eq!(rvb_full(open(3, 2), cap).unwrap().norm_sq(), BigInt::from(44));
        assert_eq!(rvb_full(open(5, 2), cap).unwrap().norm_sq(), BigInt::from(804));
    }

    #[test]
    fn literal_even_small_cases() {
        let cap = DEFAULT_SITE_CAP;
        let one = rvb_literal_even(open(2, 1), cap).unwrap();
        assert_eq!(one.norm_sq(), BigInt::from(2));
        assert_eq!(
            rvb_literal_even(open(2, 3), cap).unwrap(),
            rvb_full(open(2, 3), cap).unwrap()
        );
        assert_ne!(
            rvb_literal_even(open(4, 3), cap).unwrap(),
            rvb_full(open(4, 3), cap).unwrap()
        );
        assert_eq!(literal_covering_terms(open(4, 3)).unwrap().len(), 9);
        assert_eq!(literal_covering_terms(open(2, 3)).unwrap().len(), 3);
    }

    #[test]
    fn covering_terms_reproduce_state_vector_expansion() {
        let cap = DEFAULT_SITE_CAP;
        for spec in [
            open(4, 3),
            LadderSpec::periodic(2, 6).unwrap(),
            LadderSpec::periodic(4, 4).unwrap(),
            LadderSpec::periodic(3, 4).unwrap(),
        ] {
            let sites = spec.all_sites();
            let mut sum = StateVector::zero(sites.clone());
            for c in literal_covering_terms(spec).unwrap() {
                sum = sum.add(&covering_state(&c, &sites).unwrap()).unwrap();
            }
            let lit = if spec.legs % 2 == 0 {
                rvb_literal_even(spec, cap).unwrap()
            } else {
                rvb_literal_odd(spec, cap).unwrap()
            };
            assert_eq!(sum, lit, "{spec}");
        }
    }

    #[test]
    fn literal_odd_norms() {
        let cap = DEFAULT_SITE_CAP;
        let s = rvb_literal_odd(open(3, 2), cap).unwrap();
        assert_eq!(s, rvb_full(open(3, 2), cap).unwrap());
        assert_eq!(rvb_literal_odd(open(3, 4), cap).unwrap().norm_sq(), BigInt::from(1936));
        assert!(rvb_literal_odd(open(4, 2), cap).is_err());
        assert!(rvb_literal_odd(open(3, 3), cap).is_err());
    }

    #[test]
    fn gauge_maps_singlet_frame_to_symmetric_frame() {
        let cap = DEFAULT_SITE_CAP;
        for spec in [
            open(4, 3),
            LadderSpec::periodic(2, 6).unwrap(),
            LadderSpec::periodic(3, 4).unwrap(),
        ] {
            let (singlet, symmetric) = if spec.legs % 2 == 0 {
                (
                    rvb_literal_even(spec, cap).unwrap(),
                    rvb_literal_even_with(spec, cap, BondSign::Symmetric).unwrap(),
                )
            } else {
                (
                    rvb_literal_odd(spec, cap).unwrap(),
                    rvb_literal_odd_with(spec, cap, BondSign::Symmetric).unwrap(),
                )
            };
            let sign = if (spec.sites() / 2) % 2 == 0 { 1 } else { -1 };
            assert_eq!(singlet, symmetric.gauge(sign), "{spec}");
            assert!(symmetric.iter().all(|(_, a)| a > 0));
        }
    }

    #[test]
    fn partial_trace_of_half_a_singlet_is_maximally_mixed() {
        let s = BlockStates::new(2, BondSign::Singlet).one(1).unwrap();
        let rho = partial_trace(&s, &[s.sites()[0]]).unwrap();
        assert_eq!(rho.trace(), BigInt::from(2));
        let n = rho.normalized();
        assert!((n.matrix[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((n.matrix[(1, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(n.matrix[(0, 1)], 0.0);
    }

    #[test]
    fn partial_trace_rejects_bad_keep_sets() {
        let s = rvb_full(open(2, 2), DEFAULT_SITE_CAP).unwrap();
        assert!(partial_trace(&s, &[]).is_err());
        let dup = [s.sites()[0], s.sites()[0]];
        assert!(partial_trace(&s, &dup).is_err());
        let whole = partial_trace(&s, s.sites()).unwrap();
        assert_eq!(whole.trace(), s.norm_sq());
    }

    #[test]
    fn dump_parses_back() {
        let s = rvb_full(open(2, 3), DEFAULT_SITE_CAP).unwrap();
        let back = parse_state_dump(&s.dump(), s.sites().to_vec()).unwrap();
        assert_eq!(back, s);
        assert!(parse_state_dump("0101 x", s.sites().to_vec()).is_err());
        assert!(parse_state_dump("01 1", s.sites().to_vec()).is_err());
    }
}
