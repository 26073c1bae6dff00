use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use friable::diophantine::{parse_ratio, Alpha};

/// Every key accepted on the command line and in a config file.
pub const KEYS: &[&str] = &[
    "command", "alpha", "theta", "C", "qmin", "qmax", "Y", "eta", "delta", "budget", "out", "format", "x", "y", "u",
    "M", "N", "a", "q", "z", "kind", "timings",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Search,
    Psi,
    Rho,
    Alpha,
    Kloosterman,
    Dispersion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SumKind {
    Sigma,
    Bilinear,
    Type1,
    Type2,
}

/// Smooth Diophantine approximation toolkit.
///
/// Every flag can also be given as `key=value` in a file passed with
/// `--config`; flags on the command line win.
#[derive(Debug, Parser)]
#[command(name = "friable", version, about)]
pub struct Cli {
    /// search | psi | rho | alpha | kloosterman | dispersion
    pub command: Option<String>,
    /// key=value file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Irrational: `quad:p,s,d,r` for (p + s sqrt d)/r, `dec:<digits>:<exp>`, `golden` or `sqrt2`
    #[arg(long)]
    pub alpha: Option<String>,
    /// Exponent theta in (0, 6/17), as `p/q` or a decimal
    #[arg(long)]
    pub theta: Option<String>,
    /// Smoothness exponent C in Y = (log X)^C
    #[arg(long = "C")]
    pub c: Option<String>,
    #[arg(long)]
    pub qmin: Option<String>,
    #[arg(long)]
    pub qmax: Option<String>,
    /// Smoothness bound, a real or `inf`
    #[arg(long = "Y")]
    pub big_y: Option<String>,
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    /// Maximum loop iterations
    #[arg(long)]
    pub budget: Option<String>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<String>,
    /// json | csv
    #[arg(long)]
    pub format: Option<String>,
    /// Grid of x values, comma separated
    #[arg(long)]
    pub x: Option<String>,
    /// Grid of y values, comma separated
    #[arg(long)]
    pub y: Option<String>,
    /// Grid of u values, comma separated
    #[arg(long)]
    pub u: Option<String>,
    /// Grid of M values, comma separated
    #[arg(long = "M")]
    pub big_m: Option<String>,
    /// Grid of N values, comma separated
    #[arg(long = "N")]
    pub big_n: Option<String>,
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    /// Kloosterman cut-off z; defaults to x^{2/3} clamped into [y, x)
    #[arg(long)]
    pub z: Option<String>,
    /// Dispersion sum: sigma | bilinear | type1 | type2
    #[arg(long)]
    pub kind: Option<String>,
    /// Keep measured run times in reports (output is then not reproducible)
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected key=value", i + 1)))?;
        let k = k.trim().trim_start_matches("--");
        if !KEYS.contains(&k) {
            return Err(bad(format!("line {}: unknown key '{k}'", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl Cli {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("command", &self.command),
            ("alpha", &self.alpha),
            ("theta", &self.theta),
            ("C", &self.c),
            ("qmin", &self.qmin),
            ("qmax", &self.qmax),
            ("Y", &self.big_y),
            ("eta", &self.eta),
            ("delta", &self.delta),
            ("budget", &self.budget),
            ("out", &self.out),
            ("format", &self.format),
            ("x", &self.x),
            ("y", &self.y),
            ("u", &self.u),
            ("M", &self.big_m),
            ("N", &self.big_n),
            ("a", &self.a),
            ("q", &self.q),
            ("z", &self.z),
            ("kind", &self.kind),
        ];
        let mut out: BTreeMap<String, String> =
            pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect();
        if self.timings {
            out.insert("timings".into(), "true".into());
        }
        out
    }
}

/// Flags merged over the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub budget: u128,
    pub timings: bool,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli, file: Option<&str>) -> Result<Self, ConfigError> {
        let mut values = match file {
            Some(text) => parse_config_file(text)?,
            None => BTreeMap::new(),
        };
        values.extend(cli.flags());
        let command = values.get("command").ok_or_else(|| bad("no command given"))?;
        let command = Command::from_str(command, true).map_err(|_| bad(format!("unknown command '{command}'")))?;
        let format = match values.get("format") {
            Some(f) => Format::from_str(f, true).map_err(|_| bad(format!("unknown format '{f}'")))?,
            None => Format::Json,
        };
        let budget = match values.get("budget") {
            Some(b) => b.parse::<u128>().map_err(|_| bad(format!("budget '{b}' is not a positive integer")))?,
            None => friable::expsums::DEFAULT_BUDGET,
        };
        if budget == 0 {
            return Err(bad("budget must be positive"));
        }
        let timings = match values.get("timings").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(t) => return Err(bad(format!("timings must be true or false, got '{t}'"))),
        };
        Ok(RunConfig { command, format, out: values.get("out").map(PathBuf::from), budget, timings, values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| bad(format!("missing --{key}")))
    }

    pub fn real(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.raw(key) {
            Some(v) => parse_real(v).map_err(|_| bad(format!("--{key}: '{v}' is not a number"))),
            None => default.ok_or_else(|| bad(format!("missing --{key}"))),
        }
    }

    pub fn opt_real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key).map(|_| self.real(key, None)).transpose()
    }

    pub fn int<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, ConfigError> {
        match self.raw(key) {
            Some(v) => v.parse::<T>().map_err(|_| bad(format!("--{key}: '{v}' is not a valid integer"))),
            None => default.ok_or_else(|| bad(format!("missing --{key}"))),
        }
    }

    /// Comma-separated reals.
    pub fn grid(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.require(key)?
            .split(',')
            .map(|t| parse_real(t.trim()).map_err(|_| bad(format!("--{key}: '{t}' is not a number"))))
            .collect()
    }

    pub fn alpha(&self) -> Result<Alpha, ConfigError> {
        let spec = self.require("alpha")?;
        let spec = match spec {
            "golden" => "quad:1,1,5,2",
            "sqrt2" => "quad:0,1,2,1",
            s => s,
        };
        spec.parse::<Alpha>().map_err(|e| bad(format!("--alpha: {e}")))
    }

    pub fn theta(&self) -> Result<num_rational::Ratio<i64>, ConfigError> {
        let t = self.require("theta")?;
        parse_ratio(t).map_err(|e| bad(format!("--theta: {e}")))
    }

    pub fn kind(&self) -> Result<SumKind, ConfigError> {
        let k = self.raw("kind").unwrap_or("type1");
        SumKind::from_str(k, true).map_err(|_| bad(format!("unknown kind '{k}'")))
    }
}

/// A real number, accepting `inf`.
pub fn parse_real(text: &str) -> Result<f64, std::num::ParseFloatError> {
    match text {
        "inf" | "infinity" | "Inf" => Ok(f64::INFINITY),
        t => t.parse::<f64>(),
    }
}
