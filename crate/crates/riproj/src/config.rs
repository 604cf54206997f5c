//! Run configuration for the batch driver: a flat `key = value` text
//! format, a registry of named families, and defaults chosen so that a
//! config consisting of nothing but a command is runnable.

use std::path::PathBuf;
use std::sync::Arc;

use crate::measures::{FamilySpec, Grid};
use crate::{Error, Result};

/// The experiments the driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Greedy projection of an alternative onto a family; emits the trace.
    Project,
    /// Gain of a measure against a family hull.
    Gain,
    /// Build the ratio statistic of an alternative against its projection
    /// and verify it against the family.
    Estat,
    /// Strength comparisons of that statistic against probe statistics.
    Strength,
    /// Sequential simulation: growth-rate law and type-I error.
    Sequential,
    /// Sub-probability constructions: weight cap and escaping mass.
    Subprob,
    /// Rate experiments: slack decay and the blow-up scan.
    Rate,
    /// The e-power inequality over a vertex polytope.
    Epower,
}

impl Command {
    pub fn parse(s: &str) -> Result<Command> {
        Ok(match s {
            "project" => Command::Project,
            "gain" => Command::Gain,
            "estat" => Command::Estat,
            "strength" => Command::Strength,
            "sequential" => Command::Sequential,
            "subprob" => Command::Subprob,
            "rate" => Command::Rate,
            "epower" => Command::Epower,
            other => return Err(Error::Domain(format!("unknown command `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Project => "project",
            Command::Gain => "gain",
            Command::Estat => "estat",
            Command::Strength => "strength",
            Command::Sequential => "sequential",
            Command::Subprob => "subprob",
            Command::Rate => "rate",
            Command::Epower => "epower",
        }
    }
}

/// A quadrature window `LO:HI:NPTS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub npts: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<GridSpec> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Domain(format!(
                "grid spec must be LO:HI:NPTS, got `{s}`"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Domain(format!("bad grid lower bound `{}`", parts[0])))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Domain(format!("bad grid upper bound `{}`", parts[1])))?;
        let npts: usize = parts[2]
            .parse()
            .map_err(|_| Error::Domain(format!("bad grid point count `{}`", parts[2])))?;
        Ok(GridSpec { lo, hi, npts })
    }

    pub fn build(&self) -> Result<Arc<Grid>> {
        Grid::quadrature(self.lo, self.hi, self.npts)
    }
}

/// Everything one run needs. Every field other than the command has a
/// default, so a config holding only `command` is runnable (the `gain`
/// command is the one exception at run time: it refuses to invent a
/// family and reports a usage error instead).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Named family descriptor; `None` means the command's default.
    pub family: Option<String>,
    /// Alternative (data) measure descriptor; `None` means the default.
    pub alt: Option<String>,
    /// Iteration budget for projections; batch length for simulations.
    pub kmax: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub grid: Option<GridSpec>,
    /// Counting-grid size for integer-supported experiments.
    pub support: Option<u64>,
    /// Convergence tolerance for hull-gain ascents.
    pub tol: f64,
    /// Sub-experiment selector (`rate`: bernoulli | geometric;
    /// `epower`: bernoulli | gaussian).
    pub experiment: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> RunConfig {
        RunConfig {
            command,
            family: None,
            alt: None,
            kmax: 200,
            seed: 0,
            out: PathBuf::from("out"),
            grid: None,
            support: None,
            tol: 1e-7,
            experiment: None,
        }
    }

    /// Stable text form covering every field (defaults included); the
    /// manifest hashes this, so two configs agree iff their runs do.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("command = {}\n", self.command.name()));
        s.push_str(&format!(
            "family = {}\n",
            self.family.as_deref().unwrap_or("-")
        ));
        s.push_str(&format!("alt = {}\n", self.alt.as_deref().unwrap_or("-")));
        s.push_str(&format!("kmax = {}\n", self.kmax));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("out = {}\n", self.out.display()));
        match self.grid {
            Some(g) => s.push_str(&format!("grid = {}:{}:{}\n", g.lo, g.hi, g.npts)),
            None => s.push_str("grid = -\n"),
        }
        match self.support {
            Some(n) => s.push_str(&format!("support = {n}\n")),
            None => s.push_str("support = -\n"),
        }
        s.push_str(&format!("tol = {:e}\n", self.tol));
        s.push_str(&format!(
            "experiment = {}\n",
            self.experiment.as_deref().unwrap_or("-")
        ));
        s
    }

    /// Applies one `key = value` assignment; `line` is for error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let parse_err = |message: String| Error::ConfigParse { line, message };
        match key {
            "command" => {
                self.command = Command::parse(value)
                    .map_err(|e| parse_err(e.to_string()))?;
            }
            "family" => self.family = Some(value.to_string()),
            "alt" => self.alt = Some(value.to_string()),
            "kmax" => {
                self.kmax = value
                    .parse()
                    .map_err(|_| parse_err(format!("bad kmax `{value}`")))?;
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| parse_err(format!("bad seed `{value}`")))?;
            }
            "out" => self.out = PathBuf::from(value),
            "grid" => {
                self.grid =
                    Some(GridSpec::parse(value).map_err(|e| parse_err(e.to_string()))?);
            }
            "support" => {
                self.support = Some(
                    value
                        .parse()
                        .map_err(|_| parse_err(format!("bad support `{value}`")))?,
                );
            }
            "tol" => {
                self.tol = value
                    .parse()
                    .map_err(|_| parse_err(format!("bad tol `{value}`")))?;
            }
            "experiment" => self.experiment = Some(value.to_string()),
            other => {
                return Err(parse_err(format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }
}

/// Parses the flat config format: one `key = value` per line, `#` starts
/// a comment, blank lines are skipped. The `command` key is required.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(Command::Project);
    let mut saw_command = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key == "command" {
            saw_command = true;
        }
        cfg.set(key, value, line_no)?;
    }
    if !saw_command {
        return Err(Error::ConfigParse {
            line: 0,
            message: "config must set `command`".into(),
        });
    }
    Ok(cfg)
}

fn parse_f64(s: &str, what: &str, name: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::UnknownFamily(format!("{name} (bad {what} `{s}`)")))
}

fn even_steps(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect()
}

/// Resolves a family descriptor to a build spec. Plain names:
/// `gauss-pair` (unit-variance means -1 and 1), `gaussian` (standard),
/// `cauchy` (standard). Parametrized descriptors take colon-separated
/// arguments: `gaussian:LO:HI:K` / `cauchy:LO:HI:K` (evenly spaced
/// location grids), `bernoulli:LO:HI:K` / `geometric:LO:HI:K` (evenly
/// spaced parameter grids), and the single-member shorthands
/// `gaussian:MU`, `cauchy:X0`, `bernoulli:THETA`, `geometric:THETA`.
pub fn family_spec(name: &str) -> Result<FamilySpec> {
    match name {
        "gauss-pair" => {
            return Ok(FamilySpec::Gaussian {
                means: vec![-1.0, 1.0],
                sd: 1.0,
            })
        }
        "gaussian" => {
            return Ok(FamilySpec::Gaussian {
                means: vec![0.0],
                sd: 1.0,
            })
        }
        "cauchy" => {
            return Ok(FamilySpec::Cauchy {
                locations: vec![0.0],
            })
        }
        _ => {}
    }
    let parts: Vec<&str> = name.split(':').collect();
    let kind = parts[0];
    let args = &parts[1..];
    let params: Vec<f64> = match args.len() {
        1 => vec![parse_f64(args[0], "parameter", name)?],
        3 => {
            let lo = parse_f64(args[0], "range start", name)?;
            let hi = parse_f64(args[1], "range end", name)?;
            let k: usize = args[2]
                .parse()
                .map_err(|_| Error::UnknownFamily(format!("{name} (bad count `{}`)", args[2])))?;
            if k == 0 {
                return Err(Error::UnknownFamily(format!("{name} (zero members)")));
            }
            even_steps(lo, hi, k)
        }
        _ => return Err(Error::UnknownFamily(name.to_string())),
    };
    Ok(match kind {
        "gaussian" => FamilySpec::Gaussian {
            means: params,
            sd: 1.0,
        },
        "cauchy" => FamilySpec::Cauchy { locations: params },
        "bernoulli" => FamilySpec::Bernoulli { thetas: params },
        "geometric" => FamilySpec::Geometric { thetas: params },
        _ => return Err(Error::UnknownFamily(name.to_string())),
    })
}

/// The natural grid for a family when the config supplies none: the
/// default quadrature window for densities on the line, the two-point
/// counting grid for coin families, a truncated counting grid for
/// geometric families (`support` sets its size, default 400).
pub fn default_grid(spec: &FamilySpec, cfg: &RunConfig) -> Result<Arc<Grid>> {
    if let Some(g) = cfg.grid {
        return g.build();
    }
    match spec {
        FamilySpec::Bernoulli { .. } => Grid::counting(0, 1, false),
        FamilySpec::Geometric { .. } => {
            Grid::counting(0, cfg.support.unwrap_or(400) as i64, true)
        }
        _ => Ok(Grid::default_quadrature()),
    }
}
