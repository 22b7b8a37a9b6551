//! Run configuration: rung ranges, key=value files and their validation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::DEFAULT_SITE_CAP;

/// `start:end:step`, inclusive at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RungRange {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl RungRange {
    pub fn single(n: usize) -> Self {
        Self {
            start: n,
            end: n,
            step: 1,
        }
    }

    /// Whether every value in the range is even, without enumerating it.
    pub fn all_even(&self) -> bool {
        self.start % 2 == 0 && (self.step % 2 == 0 || self.end - self.start < self.step)
    }

    pub fn values(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

impl fmt::Display for RungRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| invalid(format!("bad {what} {s:?}: {e}")))
}

/// Accepts `n`, `start:end` or `start:end:step`.
pub fn parse_range(text: &str) -> Result<RungRange> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let r = match parts.as_slice() {
        [n] => RungRange::single(parse_count(n, "rung count")?),
        [a, b] => RungRange {
            start: parse_count(a, "range start")?,
            end: parse_count(b, "range end")?,
            step: 1,
        },
        [a, b, c] => RungRange {
            start: parse_count(a, "range start")?,
            end: parse_count(b, "range end")?,
            step: parse_count(c, "range step")?,
        },
        _ => return Err(invalid(format!("range {text:?} is not start:end:step"))),
    };
    if r.step == 0 {
        return Err(invalid("range step must be positive"));
    }
    if r.start == 0 || r.start > r.end {
        return Err(invalid(format!("empty or zero-based range {r}")));
    }
    Ok(r)
}

impl FromStr for RungRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_range(s)
    }
}

pub fn parse_legs_list(text: &str) -> Result<Vec<usize>> {
    let legs: Vec<usize> = text
        .split(',')
        .map(|s| parse_count(s, "leg count"))
        .collect::<Result<_>>()?;
    if legs.is_empty() {
        return Err(invalid("no leg counts given"));
    }
    Ok(legs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid(format!("unknown format {other:?} (csv or json)"))),
        }
    }
}

/// Sweep settings. Unset optional fields take their defaults at run time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub legs: Vec<usize>,
    pub rungs: RungRange,
    pub periodic: bool,
    /// Largest window subset in the GGM search; `2M − 1` when unset.
    pub max_subset: Option<usize>,
    pub tol: f64,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub oracle_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            legs: vec![2],
            rungs: RungRange::single(4),
            periodic: false,
            max_subset: None,
            tol: 1e-10,
            jobs: 1,
            out: None,
            format: OutputFormat::Csv,
            oracle_cap: DEFAULT_SITE_CAP,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.legs.is_empty() || self.legs.contains(&0) {
            return Err(invalid("leg counts must be positive"));
        }
        if self.periodic && !self.rungs.all_even() {
            return Err(invalid(format!(
                "periodic sweeps need even rung counts; range {} is not",
                self.rungs
            )));
        }
        if self.jobs == 0 {
            return Err(invalid("jobs must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_subset == Some(0) {
            return Err(invalid("max_subset must be at least 1"));
        }
        Ok(())
    }

    pub fn max_subset_for(&self, legs: usize) -> usize {
        self.max_subset.unwrap_or(2 * legs - 1)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "legs" => self.legs = parse_legs_list(value)?,
            "rungs" => self.rungs = parse_range(value)?,
            "periodic" => {
                self.periodic = value
                    .parse::<bool>()
                    .map_err(|_| invalid(format!("periodic must be true or false, got {value:?}")))?
            }
            "max_subset" => self.max_subset = Some(parse_count(value, "max_subset")?),
            "tol" => {
                self.tol = value
                    .parse::<f64>()
                    .map_err(|e| invalid(format!("bad tolerance {value:?}: {e}")))?
            }
            "jobs" => self.jobs = parse_count(value, "jobs")?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "oracle_cap" => self.oracle_cap = parse_count(value, "oracle_cap")?,
            other => return Err(invalid(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// A config built from file text on top of the defaults.
pub fn config_from_text(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (i, (k, v)) in parse_config_text(text)?.into_iter().enumerate() {
        cfg.set(&k, &v).map_err(|e| match e {
            Error::Validation(msg) => Error::Parse { line: i + 1, msg },
            other => other,
        })?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(
            parse_range("4:18:2").unwrap().values(),
            vec![4, 6, 8, 10, 12, 14, 16, 18]
        );
        assert_eq!(parse_range("4").unwrap().values(), vec![4]);
        assert_eq!(parse_range("3:5").unwrap().values(), vec![3, 4, 5]);
        for bad in ["", "4:2", "0:3", "1:2:0", "a:b", "1:2:3:4", "-1:3"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_text() {
        let cfg = config_from_text("legs = 2,4\n# note\nrungs=4:18:2\nperiodic = true\njobs=3\n").unwrap();
        assert_eq!(cfg.legs, vec![2, 4]);
        assert!(cfg.periodic);
        assert_eq!(cfg.jobs, 3);
        cfg.validate().unwrap();
        assert!(matches!(config_from_text("legs 2"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(config_from_text("\nwho = 1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn periodic_needs_even_steps() {
        let cfg = RunConfig {
            periodic: true,
            rungs: parse_range("4:9:1").unwrap(),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let single = RunConfig {
            periodic: true,
            rungs: parse_range("6").unwrap(),
            ..RunConfig::default()
        };
        single.validate().unwrap();
        assert!(parse_range("4:5:1").map(|r| !r.all_even()).unwrap());
        assert!(parse_range("4:5:2").unwrap().all_even());
    }
}
