//! Ladder geometry: sites, sublattice colouring, nearest-neighbour bonds and
//! exhaustive dimer-covering enumeration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default site cap for anything that enumerates coverings or builds states.
pub const DEFAULT_SITE_CAP: usize = 24;

/// Geometry of an `legs × rungs` ladder. Periodicity wraps rung `rungs` onto
/// rung 1 along every leg; legs themselves are always open paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LadderSpec {
    pub legs: usize,
    pub rungs: usize,
    pub periodic: bool,
}

impl LadderSpec {
    pub fn new(legs: usize, rungs: usize, periodic: bool) -> Result<Self> {
        let spec = Self { legs, rungs, periodic };
        spec.validate()?;
        Ok(spec)
    }

    pub fn open(legs: usize, rungs: usize) -> Result<Self> {
        Self::new(legs, rungs, false)
    }

    pub fn periodic(legs: usize, rungs: usize) -> Result<Self> {
        Self::new(legs, rungs, true)
    }

    pub fn validate(&self) -> Result<()> {
        if self.legs == 0 || self.rungs == 0 {
            return Err(invalid(format!(
                "ladder needs at least one leg and one rung, got {}x{}",
                self.legs, self.rungs
            )));
        }
        if self.periodic && self.rungs % 2 != 0 {
            return Err(invalid(format!(
                "periodic ladder needs an even number of rungs, got {}",
                self.rungs
            )));
        }
        // Two rungs wrapped onto each other would double every horizontal bond.
        if self.periodic && self.rungs < 4 {
            return Err(invalid(format!(
                "periodic ladder needs at least 4 rungs, got {}",
                self.rungs
            )));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.legs * self.rungs
    }

    pub fn site(&self, leg: usize, rung: usize) -> SiteIndex {
        SiteIndex::new(self.legs, leg, rung)
    }

    /// All sites in linear (rung-major) order.
    pub fn all_sites(&self) -> Vec<SiteIndex> {
        (1..=self.rungs)
            .flat_map(|r| (1..=self.legs).map(move |l| (l, r)))
            .map(|(l, r)| self.site(l, r))
            .collect()
    }

    pub fn rung_sites(&self, rung: usize) -> Vec<SiteIndex> {
        rung_sites(self.legs, rung)
    }
}

impl fmt::Display for LadderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{} {}",
            self.legs,
            self.rungs,
            if self.periodic { "periodic" } else { "open" }
        )
    }
}

pub fn rung_sites(legs: usize, rung: usize) -> Vec<SiteIndex> {
    (1..=legs).map(|l| SiteIndex::new(legs, l, rung)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// A lattice site; `leg` and `rung` are 1-based, `linear` is rung-major and 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SiteIndex {
    pub leg: usize,
    pub rung: usize,
    pub linear: usize,
}

impl SiteIndex {
    pub fn new(legs: usize, leg: usize, rung: usize) -> Self {
        debug_assert!(leg >= 1 && leg <= legs && rung >= 1);
        Self {
            leg,
            rung,
            linear: (rung - 1) * legs + (leg - 1),
        }
    }

    pub fn sublattice(&self) -> Sublattice {
        if (self.leg + self.rung) % 2 == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }
}

impl PartialOrd for SiteIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SiteIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.rung, self.leg).cmp(&(other.rung, other.leg))
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.leg, self.rung)
    }
}

/// A singlet bond, oriented from its sublattice-A end to its sublattice-B end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dimer {
    pub from: SiteIndex,
    pub to: SiteIndex,
}

impl Dimer {
    /// Orient an unordered pair A→B. Fails when both ends share a colour.
    pub fn between(x: SiteIndex, y: SiteIndex) -> Result<Self> {
        match (x.sublattice(), y.sublattice()) {
            (Sublattice::A, Sublattice::B) => Ok(Self { from: x, to: y }),
            (Sublattice::B, Sublattice::A) => Ok(Self { from: y, to: x }),
            _ => Err(invalid(format!("sites {x} and {y} share a sublattice"))),
        }
    }

    pub fn touches(&self, s: SiteIndex) -> bool {
        self.from == s || self.to == s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Covering {
    pub dimers: Vec<Dimer>,
}

impl Covering {
    /// Check that the dimers match every site of `support` exactly once.
    pub fn check_perfect(&self, support: &[SiteIndex]) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for d in &self.dimers {
            for s in [d.from, d.to] {
                if !support.contains(&s) {
                    return Err(invalid(format!("dimer end {s} lies outside the support")));
                }
                if !seen.insert(s) {
                    return Err(invalid(format!("site {s} is covered twice")));
                }
            }
        }
        if let Some(s) = support.iter().find(|s| !seen.contains(s)) {
            return Err(invalid(format!("site {s} is unmatched")));
        }
        Ok(())
    }

    /// Canonical form: dimers sorted, for set comparisons.
    pub fn canonical(&self) -> Self {
        let mut dimers = self.dimers.clone();
        dimers.sort();
        Self { dimers }
    }
}

/// A set of sites with candidate bonds.
#[derive(Clone, Debug)]
pub struct Region {
    pub sites: Vec<SiteIndex>,
    pub edges: Vec<Dimer>,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    pub spec: LadderSpec,
    pub region: Region,
}

impl Lattice {
    pub fn sites(&self) -> &[SiteIndex] {
        &self.region.sites
    }

    pub fn edges(&self) -> &[Dimer] {
        &self.region.edges
    }
}

pub fn build_lattice(spec: LadderSpec) -> Result<Lattice> {
    spec.validate()?;
    let sites = spec.all_sites();
    let mut edges = Vec::new();
    for r in 1..=spec.rungs {
        for l in 1..spec.legs {
            edges.push(Dimer::between(spec.site(l, r), spec.site(l + 1, r))?);
        }
    }
    for r in 1..spec.rungs {
        for l in 1..=spec.legs {
            edges.push(Dimer::between(spec.site(l, r), spec.site(l, r + 1))?);
        }
    }
    if spec.periodic {
        for l in 1..=spec.legs {
            edges.push(Dimer::between(spec.site(l, spec.rungs), spec.site(l, 1))?);
        }
    }
    Ok(Lattice {
        spec,
        region: Region { sites, edges },
    })
}

/// The open `legs × 2` block on rungs `first` and `second`, which need not be
/// consecutive numbers (the periodic wrap block pairs rung `N` with rung 1).
pub fn two_rung_region(legs: usize, first: usize, second: usize) -> Result<Region> {
    let mut sites = rung_sites(legs, first);
    sites.extend(rung_sites(legs, second));
    let mut edges = Vec::new();
    for r in [first, second] {
        for l in 1..legs {
            edges.push(Dimer::between(
                SiteIndex::new(legs, l, r),
                SiteIndex::new(legs, l + 1, r),
            )?);
        }
    }
    for l in 1..=legs {
        edges.push(Dimer::between(
            SiteIndex::new(legs, l, first),
            SiteIndex::new(legs, l, second),
        )?);
    }
    Ok(Region { sites, edges })
}

/// The rung covering with vertical dimers (1,2)(3,4)…; even `legs` only.
pub fn rung_covering(legs: usize, rung: usize) -> Result<Covering> {
    if legs % 2 != 0 {
        return Err(invalid(format!("a single rung of {legs} legs has no dimer covering")));
    }
    let dimers = (1..=legs)
        .step_by(2)
        .map(|l| Dimer::between(SiteIndex::new(legs, l, rung), SiteIndex::new(legs, l + 1, rung)))
        .collect::<Result<_>>()?;
    Ok(Covering { dimers })
}

/// The rung covering closed through the top–bottom pair: (2,3)(4,5)…(M,1).
/// Not a lattice covering; it exists only as a rung-space basis state.
pub fn rung_covering_closed(legs: usize, rung: usize) -> Result<Covering> {
    if legs % 2 != 0 {
        return Err(invalid(format!("a single rung of {legs} legs has no dimer covering")));
    }
    let dimers = (1..=legs)
        .step_by(2)
        .map(|l| {
            let lo = l + 1;
            let hi = if l + 2 > legs { 1 } else { l + 2 };
            Dimer::between(SiteIndex::new(legs, lo, rung), SiteIndex::new(legs, hi, rung))
        })
        .collect::<Result<_>>()?;
    Ok(Covering { dimers })
}

pub fn enumerate_coverings(spec: LadderSpec, cap: usize) -> Result<Vec<Covering>> {
    spec.validate()?;
    if spec.sites() > cap {
        return Err(Error::CapExceeded {
            what: "covering enumeration",
            sites: spec.sites(),
            cap,
        });
    }
    let lattice = build_lattice(spec)?;
    Ok(enumerate_matchings(&lattice.region))
}

/// Exhaustive perfect matchings of `region`. Branches on the unmatched site of
/// smallest linear index, trying its bonds in order of the partner's index.
pub fn enumerate_matchings(region: &Region) -> Vec<Covering> {
    let n = region.sites.len();
    if n % 2 != 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| region.sites[i].linear);
    let pos = |s: SiteIndex| region.sites.iter().position(|t| *t == s);
    let mut adj: Vec<Vec<(usize, Dimer)>> = vec![Vec::new(); n];
    for e in &region.edges {
        if let (Some(i), Some(j)) = (pos(e.from), pos(e.to)) {
            adj[i].push((j, *e));
            adj[j].push((i, *e));
        }
    }
    for list in &mut adj {
        list.sort_by_key(|(j, _)| region.sites[*j].linear);
        list.dedup_by_key(|(j, _)| *j);
    }

    let mut out = Vec::new();
    let mut matched = vec![false; n];
    let mut stack = Vec::with_capacity(n / 2);
    fn dfs(
        order: &[usize],
        adj: &[Vec<(usize, Dimer)>],
        matched: &mut [bool],
        stack: &mut Vec<Dimer>,
        out: &mut Vec<Covering>,
    ) {
        let Some(&pivot) = order.iter().find(|&&i| !matched[i]) else {
            out.push(Covering { dimers: stack.clone() });
            return;
        };
        matched[pivot] = true;
        for &(j, d) in &adj[pivot] {
            if !matched[j] {
                matched[j] = true;
                stack.push(d);
                dfs(order, adj, matched, stack, out);
                stack.pop();
                matched[j] = false;
            }
        }
        matched[pivot] = false;
    }
    dfs(&order, &adj, &mut matched, &mut stack, &mut out);
    out
}
