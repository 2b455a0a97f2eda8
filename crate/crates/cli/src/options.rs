//! Flags, config-file merging and resolution of law and basis specs.

use clap::Args;
use comwalk::increments::{make_lazy_ssrw, make_ssrw, make_stable_lattice, LatticeLaw};
use comwalk::lattice::{ssrw_basis, LatticeBasis};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "COMWALK_OUT";
const DEFAULT_OUT: &str = "comwalk-out";

/// Options shared by all subcommands. Every field may also come from the
/// `--config` file; flags given on the command line win.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct Opts {
    /// Increment law: ssrw<d>, lazy<d>, stable, or a path to a JSON law
    #[arg(long)]
    pub law: Option<String>,
    /// Lattice basis: ssrw<d>, unit, or a path to a JSON basis (default: the law's own)
    #[arg(long)]
    pub basis: Option<String>,
    /// Horizons (comma separated)
    #[arg(long = "n", value_delimiter = ',', value_parser = parse_count)]
    #[serde(default)]
    pub n: Option<Vec<u64>>,
    #[arg(long, value_parser = parse_count)]
    pub runs: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    pub steps: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    pub burn_in: Option<u64>,
    /// Tail exponent of the stable law
    #[arg(long, value_parser = parse_real)]
    pub alpha: Option<f64>,
    /// Neighbourhood radius for the minimality scan
    #[arg(long, value_parser = parse_real)]
    pub rho: Option<f64>,
    /// Grid step for the minimality scan (default rho/16)
    #[arg(long, value_parser = parse_real)]
    pub grid: Option<f64>,
    /// Inner radius of the frequency partition
    #[arg(long = "A", value_parser = parse_real)]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub beta: Option<f64>,
    /// Half-width of the window for cell frequencies (scaled units)
    #[arg(long, value_parser = parse_real)]
    pub window: Option<f64>,
    /// Cell width for cell frequencies (scaled units)
    #[arg(long, value_parser = parse_real)]
    pub cell_width: Option<f64>,
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<u64>,
    /// Cap on exact-engine cells
    #[arg(long, value_parser = parse_count)]
    pub budget: Option<u64>,
    /// Output directory (default: $COMWALK_OUT or ./comwalk-out)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with default values for any of these options
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long, value_parser = parse_count)]
    pub workers: Option<u64>,
}

/// Usage or configuration problem (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl<E: std::fmt::Display> From<E> for ConfigError {
    fn from(e: E) -> Self {
        ConfigError(e.to_string())
    }
}

/// Non-negative integer, accepting scientific notation such as `1e6`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !(v >= 0.0) || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(v as u64)
}

pub fn parse_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

macro_rules! merge_fields {
    ($cli:expr, $file:expr, $($f:ident),*) => {
        Opts { $($f: $cli.$f.or($file.$f),)* config: $cli.config }
    };
}

impl Opts {
    /// Fills options missing on the command line from the `--config` file.
    pub fn resolve(self) -> Result<Opts, ConfigError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let file: Opts = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("cannot parse config {}: {e}", path.display())))?;
        Ok(merge_fields!(
            self, file, law, basis, n, runs, steps, seed, burn_in, alpha, rho, grid, a, delta, beta, window,
            cell_width, samples, budget, out, workers
        ))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn law_spec(&self, default: &str) -> String {
        self.law.clone().unwrap_or_else(|| default.to_string())
    }

    /// Horizons, which must be positive and strictly increasing.
    pub fn horizons(&self, default: &[u64]) -> Result<Vec<u64>, ConfigError> {
        let n = self.n.clone().unwrap_or_else(|| default.to_vec());
        if n.is_empty() || n[0] == 0 || n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError("--n must list positive, strictly increasing horizons".into()));
        }
        Ok(n)
    }
}

fn suffix_dim(spec: &str, prefix: &str) -> Option<usize> {
    spec.strip_prefix(prefix).and_then(|d| d.parse().ok()).filter(|&d| d >= 1)
}

pub fn resolve_law(spec: &str, alpha: f64) -> Result<LatticeLaw, ConfigError> {
    if let Some(d) = suffix_dim(spec, "ssrw") {
        return Ok(make_ssrw(d)?);
    }
    if let Some(d) = suffix_dim(spec, "lazy") {
        return Ok(make_lazy_ssrw(d)?);
    }
    if spec == "stable" {
        return Ok(make_stable_lattice(alpha)?);
    }
    let text = read_spec_file(spec, "law")?;
    Ok(LatticeLaw::from_json(&text)?)
}

pub fn resolve_basis(spec: Option<&str>, law: &LatticeLaw) -> Result<LatticeBasis, ConfigError> {
    match spec {
        None => law
            .basis_hint()
            .cloned()
            .ok_or_else(|| ConfigError("the law has no default basis; pass --basis".into())),
        Some("unit") => Ok(LatticeBasis::unit(law.dim())),
        Some(s) => {
            if let Some(d) = suffix_dim(s, "ssrw") {
                return Ok(ssrw_basis(d)?);
            }
            let text = read_spec_file(s, "basis")?;
            Ok(LatticeBasis::from_json(&text)?)
        }
    }
}

fn read_spec_file(spec: &str, what: &str) -> Result<String, ConfigError> {
    let path = Path::new(spec);
    std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{what} `{spec}` is neither built in nor a readable file: {e}")))
}
