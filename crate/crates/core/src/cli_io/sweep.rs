//! Per-point computation and the parallel sweep driver.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blocks::{build_blocks, BlockLibrary};
use crate::density::{log2_big, Hygiene, NormalizedRho};
use crate::entanglement::{ggm_from_window, negativity, werner_fit, GGMResult, WernerFit};
use crate::error::{invalid, Result};
use crate::even::rho2_even_exact;
use crate::lattice::LadderSpec;
use crate::odd::rho2_odd_exact;

use super::config::RunConfig;

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub legs: usize,
    pub rungs: usize,
    pub periodic: bool,
    pub ggm: f64,
    pub lambda_sq_max: f64,
    pub argmax_subset: String,
    pub werner_p: f64,
    pub negativity: f64,
    pub log2_norm: f64,
}

/// Everything computed for one ladder.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub row: SweepRow,
    pub norm: BigInt,
    pub hygiene: Hygiene,
    pub werner: WernerFit,
    pub ggm: GGMResult,
    pub wall_seconds: f64,
}

/// Exact window of the ladder, in the singlet frame, with its exact trace.
pub fn window_rho(lib: &BlockLibrary, spec: LadderSpec) -> Result<(NormalizedRho, BigInt)> {
    spec.validate()?;
    let assembled = if lib.is_even() {
        rho2_even_exact(lib, spec)?
    } else {
        rho2_odd_exact(lib, spec)?
    };
    let dm = assembled.to_density()?;
    Ok((dm.normalized(), dm.trace()))
}

/// Two-site marginal of leg 1 across the window's two rungs.
pub fn leg_pair(rho: &NormalizedRho, legs: usize) -> nalgebra::DMatrix<f64> {
    rho.reduce(&[0, legs])
}

pub fn compute_point(lib: &BlockLibrary, spec: LadderSpec, max_subset: usize) -> Result<PointResult> {
    let t0 = Instant::now();
    let (rho, norm) = window_rho(lib, spec)?;
    let hygiene = rho.hygiene();
    let ggm = ggm_from_window(&rho, max_subset)?;
    let pair = leg_pair(&rho, spec.legs);
    let werner = werner_fit(&pair)?;
    let neg = negativity(&pair)?;
    let row = SweepRow {
        legs: spec.legs,
        rungs: spec.rungs,
        periodic: spec.periodic,
        ggm: ggm.ggm,
        lambda_sq_max: ggm.lambda_sq_max,
        argmax_subset: ggm.argmax_label(),
        werner_p: werner.p,
        negativity: neg,
        log2_norm: log2_big(&norm),
    };
    Ok(PointResult {
        row,
        norm,
        hygiene,
        werner,
        ggm,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// All points of a sweep, sorted by `(legs, rungs)`.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub points: Vec<PointResult>,
    pub wall_seconds: f64,
}

impl SweepOutcome {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.points.iter().map(|p| p.row.clone()).collect()
    }
}

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut legs = cfg.legs.clone();
    legs.sort_unstable();
    legs.dedup();
    let mut specs = Vec::new();
    for &m in &legs {
        for n in cfg.rungs.values() {
            specs.push(LadderSpec::new(m, n, cfg.periodic)?);
        }
    }
    let libs: BTreeMap<usize, BlockLibrary> = legs
        .iter()
        .map(|&m| build_blocks(m).map(|l| (m, l)))
        .collect::<Result<_>>()?;
    for &m in &legs {
        let k = cfg.max_subset_for(m);
        if k > 2 * m {
            return Err(invalid(format!(
                "max_subset {k} exceeds the {}-site window of {m} legs",
                2 * m
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let points = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| compute_point(&libs[&spec.legs], *spec, cfg.max_subset_for(spec.legs)))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepOutcome {
        points,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_io::config::parse_range;

    #[test]
    fn two_leg_point() {
        let lib = build_blocks(2).unwrap();
        let p = compute_point(&lib, LadderSpec::periodic(2, 6).unwrap(), 3).unwrap();
        assert!(p.hygiene.passes(), "{:?}", p.hygiene);
        assert!(p.werner.residual < 1e-10);
        assert!(p.row.ggm > 0.0 && p.row.ggm < 1.0);
        assert!((p.row.ggm + p.row.lambda_sq_max - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rows_come_out_sorted() {
        let cfg = RunConfig {
            legs: vec![4, 2],
            rungs: parse_range("4:8:2").unwrap(),
            periodic: true,
            jobs: 2,
            ..RunConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap().rows();
        let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.legs, r.rungs)).collect();
        assert_eq!(keys, vec![(2, 4), (2, 6), (2, 8), (4, 4), (4, 6), (4, 8)]);
    }
}
