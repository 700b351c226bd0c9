//! Flag and config-file handling. Every option can come from a `key = value`
//! config file; explicit flags override file values.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "lgsf", version, about = "Slow-fast analysis of a modified Leslie-Gower predator-prey model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Half-saturation parameter A, in (0, 1)
    #[arg(long = "A", allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Allee parameter M, in (-1, 0)
    #[arg(long = "M", allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Predator carrying offset C, nonnegative (ignored with --degenerate)
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Predation efficiency Q, positive
    #[arg(long = "Q", allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Slow rate eps, positive
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// Slave C = -A*M*Q (the degenerate family)
    #[arg(long)]
    pub degenerate: bool,
    /// Output path (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<OutFormat>,
    /// Integration tolerance
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Worker threads for sweeps (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Key/value config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve and classify the positive equilibria
    Equilibria {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trace/determinant stability report per equilibrium
    Stability {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Criticality sigma over a parameter slice
    SigmaGrid {
        #[command(flatten)]
        common: CommonArgs,
        /// Which parameter stays fixed: the slice runs over the other two
        #[arg(long, value_enum)]
        slice: Option<SliceKind>,
        #[arg(long)]
        range1_min: Option<f64>,
        #[arg(long)]
        range1_max: Option<f64>,
        #[arg(long)]
        range2_min: Option<f64>,
        #[arg(long)]
        range2_max: Option<f64>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
    },
    /// Canard-explosion sweep over Q = Q_H - delta on the degenerate family
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        delta_min: Option<f64>,
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long)]
        n_deltas: Option<usize>,
    },
    /// Integrate a trajectory
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        u0: Option<f64>,
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Detect a limit cycle through a Poincare section
    Cycle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        u0: Option<f64>,
        #[arg(long)]
        v0: Option<f64>,
        #[arg(long)]
        max_returns: Option<usize>,
    },
    /// Entry-exit function samples and the exit point
    EntryExit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Verify the blow-up chart statements numerically
    BlowupVerify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Hopf and limit-point curves in (C, Q)
    Loci {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        c_min: Option<f64>,
        #[arg(long)]
        c_max: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Takens-Bogdanov closed form with back-substitution check
    TbCheck {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        u1: Option<f64>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKind {
    FixedM,
    FixedA,
}

/// Values read from the config file.
#[derive(Debug, Default, Clone)]
pub struct FileValues(pub BTreeMap<String, String>);

impl FileValues {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("config line {} is not `key = value`", lineno + 1))?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self(map))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => Ok(Some(
                v.parse::<f64>()
                    .with_context(|| format!("config key {key} is not a number: {v}"))?,
            )),
        }
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => Ok(Some(
                v.parse::<usize>()
                    .with_context(|| format!("config key {key} is not an integer: {v}"))?,
            )),
        }
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => Ok(Some(
                v.parse::<bool>()
                    .with_context(|| format!("config key {key} is not a bool: {v}"))?,
            )),
        }
    }
}

/// Fully resolved run configuration (flags over file values over defaults).
#[derive(Debug, Clone)]
pub struct ResolvedCommon {
    pub params: lgsf::ModelParams,
    pub out: Option<PathBuf>,
    pub format: OutFormat,
    pub tol: f64,
    pub threads: Option<usize>,
    /// Echo of every resolved key for the output header.
    pub echo: Vec<(String, String)>,
}

pub fn resolve_common(args: &CommonArgs) -> Result<ResolvedCommon> {
    let file = FileValues::load(args.config.as_ref())?;
    let a = args.a.or(file.f64("A")?).ok_or_else(|| anyhow!("missing parameter A"))?;
    let m = args.m.or(file.f64("M")?).ok_or_else(|| anyhow!("missing parameter M"))?;
    let q = args.q.or(file.f64("Q")?).ok_or_else(|| anyhow!("missing parameter Q"))?;
    let eps = args.eps.or(file.f64("eps")?).ok_or_else(|| anyhow!("missing parameter eps"))?;
    let degenerate = args.degenerate || file.bool("degenerate")?.unwrap_or(false);
    let params = if degenerate {
        lgsf::ModelParams::degenerate(a, m, q, eps).map_err(|e| anyhow!("{e}"))?
    } else {
        let c = args.c.or(file.f64("C")?).ok_or_else(|| anyhow!("missing parameter C"))?;
        lgsf::ModelParams::new(a, m, c, q, eps).map_err(|e| anyhow!("{e}"))?
    };
    let format = args
        .format
        .or(match file.0.get("format").map(String::as_str) {
            Some("csv") => Some(OutFormat::Csv),
            Some("json") => Some(OutFormat::Json),
            Some(other) => bail!("config key format must be csv or json, got {other}"),
            None => None,
        })
        .unwrap_or(OutFormat::Csv);
    let tol = args.tol.or(file.f64("tol")?).unwrap_or(1e-10);
    if !(1e-12..=1e-4).contains(&tol) {
        bail!("tolerance {tol} outside [1e-12, 1e-4]");
    }
    let threads = match args.threads {
        Some(t) => Some(t),
        None => file.usize("threads")?,
    };
    let out = args.out.clone().or_else(|| file.0.get("out").map(PathBuf::from));

    let mut echo = vec![
        ("A".to_string(), fmt(params.a)),
        ("M".to_string(), fmt(params.m)),
        ("C".to_string(), fmt(params.c)),
        ("Q".to_string(), fmt(params.q)),
        ("eps".to_string(), fmt(params.eps)),
        ("degenerate".to_string(), degenerate.to_string()),
        ("tol".to_string(), fmt(tol)),
        (
            "format".to_string(),
            match format {
                OutFormat::Csv => "csv".to_string(),
                OutFormat::Json => "json".to_string(),
            },
        ),
    ];
    if let Some(t) = threads {
        echo.push(("threads".to_string(), t.to_string()));
    }
    Ok(ResolvedCommon {
        params,
        out,
        format,
        tol,
        threads,
        echo,
    })
}

/// Deterministic shortest-roundtrip float formatting.
pub fn fmt(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
