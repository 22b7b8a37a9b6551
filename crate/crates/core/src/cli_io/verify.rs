//! Oracle cross-checks and the block scalar table.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::blocks::BlockLibrary;
use crate::error::{invalid, Error, Result};
use crate::even::{
    assemble_rho2_open, assemble_rho2_periodic, float_chain, rho2_even_exact, run_even_recursion,
    run_even_recursion_general, SignConvention,
};
use crate::lattice::{enumerate_coverings, LadderSpec};
use crate::odd::{rho2_odd_exact, rho2_odd_in};
use crate::oracle::{literal_covering_terms, partial_trace, rvb_literal_even, rvb_literal_odd};

/// One boundary condition checked against the oracle.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyCheck {
    pub spec: String,
    /// Exact integer matrices identical.
    pub exact_equal: bool,
    /// Largest normalised entrywise deviation of the exact path.
    pub exact_deviation: f64,
    /// Same for the floating-point path.
    pub float_deviation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub legs: usize,
    pub rungs: usize,
    pub tol: f64,
    pub checks: Vec<VerifyCheck>,
    /// Coverings in the literal recursion and in the full covering sum, open boundary.
    pub literal_terms: usize,
    pub full_terms: usize,
    pub passed: bool,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: exact_equal={} deviation={:e} float_deviation={:e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.spec,
                c.exact_equal,
                c.exact_deviation,
                c.float_deviation
            )?;
        }
        write!(
            f,
            "coverings {}x{} open: literal={} full={}{}",
            self.legs,
            self.rungs,
            self.literal_terms,
            self.full_terms,
            if self.literal_terms == self.full_terms {
                ""
            } else {
                " (literal state omits coverings)"
            }
        )
    }
}

fn window_defined(spec: LadderSpec) -> bool {
    if spec.legs % 2 == 0 {
        spec.rungs >= 2
    } else {
        spec.rungs >= 4 && spec.rungs % 2 == 0
    }
}

fn check(lib: &BlockLibrary, spec: LadderSpec, tol: f64, cap: usize) -> Result<VerifyCheck> {
    let (exact, float) = if lib.is_even() {
        let exact = rho2_even_exact(lib, spec)?;
        let chain = float_chain(lib, spec.rungs)?;
        let alg = lib.algebra::<f64>();
        let float = if spec.periodic {
            assemble_rho2_periodic(&alg, &chain, spec.rungs)?
        } else {
            assemble_rho2_open(&alg, &chain, spec.rungs)?
        };
        (exact, float.normalized())
    } else {
        (rho2_odd_exact(lib, spec)?, rho2_odd_in::<f64>(lib, spec)?.normalized())
    };
    let psi = if lib.is_even() {
        rvb_literal_even(spec, cap)?
    } else {
        rvb_literal_odd(spec, cap)?
    };
    let dm = exact.to_density()?;
    let oracle = partial_trace(&psi, &exact.sites)?;
    let exact_deviation = dm.normalized_deviation(&oracle)?;
    let float_deviation = (float.matrix - oracle.normalized().matrix).amax();
    let exact_equal = dm == oracle;
    Ok(VerifyCheck {
        spec: spec.to_string(),
        exact_equal,
        exact_deviation,
        float_deviation,
        passed: exact_equal && exact_deviation <= tol && float_deviation <= tol,
    })
}

/// Compare the recursion windows of a `legs × rungs` ladder (open, and
/// periodic where defined) against the oracle.
pub fn verify(lib: &BlockLibrary, rungs: usize, tol: f64, cap: usize) -> Result<VerifyReport> {
    let legs = lib.legs;
    let sites = legs * rungs;
    if sites > cap {
        return Err(Error::CapExceeded {
            what: "oracle verification",
            sites,
            cap,
        });
    }
    let open = LadderSpec::open(legs, rungs)?;
    let mut specs = vec![open];
    if let Ok(p) = LadderSpec::periodic(legs, rungs) {
        specs.push(p);
    }
    let checks = specs
        .into_iter()
        .filter(|s| window_defined(*s))
        .map(|s| check(lib, s, tol, cap))
        .collect::<Result<Vec<_>>>()?;
    let literal_terms = literal_covering_terms(open)?.len();
    let full_terms = enumerate_coverings(open, cap)?.len();
    if checks.is_empty() && literal_terms == 0 && full_terms == 0 {
        return Err(invalid(format!("no dimer covering exists for {open}")));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        legs,
        rungs,
        tol,
        checks,
        literal_terms,
        full_terms,
        passed,
    })
}

/// The scalar table printed by `blocks`.
pub fn blocks_table(lib: &BlockLibrary) -> Result<String> {
    let mut out = String::new();
    let Some(s) = &lib.scalars else {
        writeln!(out, "M={} Z2={}", lib.legs, lib.two_rung_norm).expect("string write");
        return Ok(out);
    };
    let alpha = lib.alpha()?;
    if alpha.len() <= 2 {
        let t = run_even_recursion(lib, 1)?;
        writeln!(
            out,
            "M={} A={} Abar={} B={} C={} D={} Cbar={} Dbar={} Z1={} Y1_1={} Y2_1={}",
            lib.legs, s.a, s.a_bar, s.b, s.c, s.d, s.c_bar, s.d_bar, t.z[1], t.y1[1], t.y2[1]
        )
        .expect("string write");
        writeln!(out, "alpha_basis={}", alpha.len()).expect("string write");
        return Ok(out);
    }
    // Two coefficients no longer describe the contraction; print the whole
    // expansion of each basis vector instead.
    let t = run_even_recursion_general(lib, 1, SignConvention::Uniform)?;
    writeln!(out, "M={} A={} Abar={} B={} Z1={}", lib.legs, s.a, s.a_bar, s.b, t.z[1]).expect("string write");
    writeln!(out, "alpha_basis={}", alpha.len()).expect("string write");
    for j in 0..alpha.len() {
        let col: Vec<String> = (0..alpha.len())
            .map(|i| alpha.expansion.get(i, j).to_string())
            .collect();
        writeln!(out, "contract alpha_{}: {}", j + 1, col.join(" ")).expect("string write");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::build_blocks;
    use crate::lattice::DEFAULT_SITE_CAP;

    #[test]
    fn tables() {
        let t2 = blocks_table(&build_blocks(2).unwrap()).unwrap();
        assert!(t2.contains("C=1 D=0"), "{t2}");
        assert!(t2.contains("Z1=2 Y1_1=2 Y2_1=0"), "{t2}");
        let t4 = blocks_table(&build_blocks(4).unwrap()).unwrap();
        assert!(t4.contains("C=5 D=1 Cbar=2 Dbar=3"), "{t4}");
        assert!(t4.contains("Z1=4 Y1_1=4 Y2_1=2"), "{t4}");
        let t3 = blocks_table(&build_blocks(3).unwrap()).unwrap();
        assert!(t3.contains("Z2=44"));
        let t6 = blocks_table(&build_blocks(6).unwrap()).unwrap();
        assert!(t6.contains("Z1=8") && t6.contains("alpha_basis=4"), "{t6}");
        assert!(!t6.contains("C="), "{t6}");
        assert_eq!(t6.lines().filter(|l| l.starts_with("contract alpha_")).count(), 4);
    }

    #[test]
    fn verify_reports() {
        let r = verify(&build_blocks(2).unwrap(), 4, 1e-10, DEFAULT_SITE_CAP).unwrap();
        assert!(r.passed && r.checks.len() == 2);
        assert!(r.checks.iter().all(|c| c.exact_deviation == 0.0));
        let r = verify(&build_blocks(3).unwrap(), 4, 1e-10, DEFAULT_SITE_CAP).unwrap();
        assert!(r.passed && r.checks.len() == 2);
        let r = verify(&build_blocks(4).unwrap(), 3, 1e-10, DEFAULT_SITE_CAP).unwrap();
        assert!(r.passed);
        assert_eq!((r.literal_terms, r.full_terms), (9, 11));
        assert!(matches!(
            verify(&build_blocks(4).unwrap(), 7, 1e-10, DEFAULT_SITE_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }
}
