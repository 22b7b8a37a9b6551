//! CSV rows, the JSON sidecar, its schema, and the plot script.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::RunConfig;
use super::sweep::{SweepOutcome, SweepRow};

pub const CSV_HEADER: &str = "legs,rungs,periodic,ggm,lambda_sq_max,argmax_subset,werner_p,negativity,log2_norm";

/// Schema of the JSON sidecar.
pub const SIDECAR_SCHEMA: &str = include_str!("../../schema/sweep.schema.json");

pub fn write_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.legs, r.rungs, r.periodic, r.ggm, r.lambda_sq_max, r.argmax_subset, r.werner_p, r.negativity, r.log2_norm
        ));
    }
    out
}

fn field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad {name} {s:?}"),
    })
}

/// Parse text produced by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "missing or unexpected header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Parse {
                line: n,
                msg: format!("expected 9 fields, got {}", f.len()),
            });
        }
        rows.push(SweepRow {
            legs: field(n, "legs", f[0])?,
            rungs: field(n, "rungs", f[1])?,
            periodic: field(n, "periodic", f[2])?,
            ggm: field(n, "ggm", f[3])?,
            lambda_sq_max: field(n, "lambda_sq_max", f[4])?,
            argmax_subset: f[5].to_string(),
            werner_p: field(n, "werner_p", f[6])?,
            negativity: field(n, "negativity", f[7])?,
            log2_norm: field(n, "log2_norm", f[8])?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub legs: usize,
    pub rungs: usize,
    pub periodic: bool,
    /// Exact norm² of the state, in decimal.
    pub norm: String,
    pub wall_seconds: f64,
    pub max_asymmetry: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub werner_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub wall_seconds: f64,
    pub points: Vec<PointRecord>,
}

pub fn sidecar(cfg: &RunConfig, outcome: &SweepOutcome) -> Sidecar {
    Sidecar {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        wall_seconds: outcome.wall_seconds,
        points: outcome
            .points
            .iter()
            .map(|p| PointRecord {
                legs: p.row.legs,
                rungs: p.row.rungs,
                periodic: p.row.periodic,
                norm: p.norm.to_string(),
                wall_seconds: p.wall_seconds,
                max_asymmetry: p.hygiene.max_asymmetry,
                trace_error: p.hygiene.trace_error,
                min_eigenvalue: p.hygiene.min_eigenvalue,
                max_eigenvalue: p.hygiene.max_eigenvalue,
                werner_residual: p.werner.residual,
            })
            .collect(),
    }
}

/// Gnuplot script drawing GGM against rungs, one series per leg count.
pub fn plot_script(csv_name: &str, legs: &[usize]) -> String {
    let series: Vec<String> = legs.iter().map(ToString::to_string).collect();
    format!(
        "set datafile separator \",\"\n\
         set xlabel \"rungs\"\n\
         set ylabel \"GGM\"\n\
         set key top right\n\
         plot for [M in \"{}\"] \"{}\" skip 1 using (strcol(1) eq M ? $2 : NaN):4 with linespoints title \"M = \".M\n",
        series.join(" "),
        csv_name
    )
}

/// Paths written next to a sweep's main output.
#[derive(Clone, Debug)]
pub struct SweepFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub schema: PathBuf,
    pub plot: PathBuf,
}

impl SweepFiles {
    pub fn for_base(base: &Path) -> Self {
        let with = |ext: &str| base.with_extension(ext);
        Self {
            csv: with("csv"),
            json: with("json"),
            schema: with("schema.json"),
            plot: with("gp"),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_sweep_files(base: &Path, cfg: &RunConfig, outcome: &SweepOutcome) -> Result<SweepFiles> {
    let files = SweepFiles::for_base(base);
    write(&files.csv, &write_csv(&outcome.rows()))?;
    let json = serde_json::to_string_pretty(&sidecar(cfg, outcome)).expect("sidecar serialises");
    write(&files.json, &json)?;
    write(&files.schema, SIDECAR_SCHEMA)?;
    let csv_name = files
        .csv
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    write(&files.plot, &plot_script(&csv_name, &cfg.legs))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> SweepRow {
        SweepRow {
            legs: 2,
            rungs: 4,
            periodic: true,
            ggm: 0.1 + 0.2,
            lambda_sq_max: 0.7,
            argmax_subset: "1@3;2@3".into(),
            werner_p: -1.0 / 3.0,
            negativity: 0.0,
            log2_norm: 12.345678901234567,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let rows = vec![row(), SweepRow { rungs: 6, ..row() }];
        let text = write_csv(&rows);
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(parse_csv(&text).unwrap(), rows);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n").is_err());
        let bad = format!("{CSV_HEADER}\n2,4,true,x,0,s,0,0,0\n");
        assert!(matches!(parse_csv(&bad), Err(Error::Parse { line: 2, .. })));
        let short = format!("{CSV_HEADER}\n2,4\n");
        assert!(parse_csv(&short).is_err());
    }

    #[test]
    fn schema_is_json() {
        let v: serde_json::Value = serde_json::from_str(SIDECAR_SCHEMA).unwrap();
        assert_eq!(v["type"], "object");
    }
}
