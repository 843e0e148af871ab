//! Run configuration: command-line flags layered over an optional JSON
//! config file with the same (kebab-case) keys.
//!
//! A config file may also be the output of an earlier run: the
//! `# config:` header line of a CSV or the `config` member of a probe
//! report is picked up, so re-running from an output file reproduces it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, Result};

/// Every key is optional; commands apply their own defaults and then
/// record the resolved values in their output header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub werner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<PathBuf>,
    /// `v`, `v1,v2,…` or `a:b:n` (n log-spaced points from a to b).
    #[serde(
        default,
        deserialize_with = "number_or_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub beta: Option<String>,
    /// `a:step:b`, `v` or `v1,v2,…`.
    #[serde(
        default,
        deserialize_with = "number_or_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub p_grid: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_test: Option<bool>,
    /// Ensemble length `N` for Monte Carlo runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// `haar` or `anneal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist_out: Option<PathBuf>,
}

fn number_or_string<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    Ok(Option::<Raw>::deserialize(d)?.map(|r| match r {
        Raw::Num(x) => format!("{x}"),
        Raw::Text(s) => s,
    }))
}

impl RunConfig {
    /// `self` (flags) wins over `base` (file) key by key.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            werner: self.werner.or(base.werner),
            state: self.state.or(base.state),
            beta: self.beta.or(base.beta),
            p_grid: self.p_grid.or(base.p_grid),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            tol: self.tol.or(base.tol),
            threshold: self.threshold.or(base.threshold),
            out: self.out.or(base.out),
            self_test: self.self_test.or(base.self_test),
            length: self.length.or(base.length),
            bins: self.bins.or(base.bins),
            method: self.method.or(base.method),
            restarts: self.restarts.or(base.restarts),
            hist_out: self.hist_out.or(base.hist_out),
        }
    }

    /// JSON for output headers: everything except output destinations.
    pub fn header_json(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.hist_out = None;
        serde_json::to_string(&c).expect("plain data serialises")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let bad = |e: serde_json::Error| CliError::validation(format!("invalid config: {e}"));
    if let Some(json) = text.lines().find_map(|l| l.strip_prefix("# config: ")) {
        return serde_json::from_str(json).map_err(bad);
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
    match value {
        serde_json::Value::Object(mut map) if map.contains_key("command") => {
            let inner = map.remove("config").unwrap_or_default();
            serde_json::from_value(inner).map_err(bad)
        }
        v => serde_json::from_value(v).map_err(bad),
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::validation(format!("invalid {what} value '{s}'")))
}

// snap k·step sums onto the nearest short decimal
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `a:step:b` (inclusive, linear), a single value, or a comma list.
pub fn parse_p_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (
                parse_f64(a, "p-grid")?,
                parse_f64(step, "p-grid")?,
                parse_f64(b, "p-grid")?,
            );
            if !(step > 0.0) {
                return Err(CliError::validation("p-grid step must be positive"));
            }
            if b < a {
                return Ok(Vec::new());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(CliError::validation("p-grid has too many points"));
            }
            Ok((0..=n).map(|k| tidy(a + k as f64 * step)).collect())
        }
        [_] => spec.split(',').map(|s| parse_f64(s, "p-grid")).collect(),
        _ => Err(CliError::validation(format!(
            "p-grid '{spec}' is not of the form a:step:b"
        ))),
    }
}

/// `v`, `v1,v2,…`, or `a:b:n` for `n` log-spaced points from `a` to `b`.
pub fn parse_beta(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    let betas = match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (parse_f64(a, "beta")?, parse_f64(b, "beta")?);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|_| CliError::validation(format!("invalid beta point count '{n}'")))?;
            if !(a > 0.0 && b >= a) || n == 0 {
                return Err(CliError::validation(
                    "beta grid a:b:n needs 0 < a <= b and n >= 1",
                ));
            }
            if n == 1 {
                vec![a]
            } else {
                let (la, lb) = (a.log10(), b.log10());
                (0..n)
                    .map(|k| {
                        if k + 1 == n {
                            b
                        } else {
                            10f64.powf(la + (lb - la) * k as f64 / (n - 1) as f64)
                        }
                    })
                    .collect()
            }
        }
        [_] if !spec.is_empty() => spec
            .split(',')
            .map(|s| parse_f64(s, "beta"))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(CliError::validation(format!("invalid beta '{spec}'"))),
    };
    if betas.iter().any(|&b| b < 0.0) {
        return Err(CliError::validation("beta must be non-negative"));
    }
    Ok(betas)
}
