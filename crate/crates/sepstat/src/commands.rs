//! Command implementations. Each takes the merged [`RunConfig`], fills in
//! defaults, records the resolved configuration in its output and returns
//! the documents to emit; [`emit`] routes them to files or stdout.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use sepstat_core::costfn::{cost_operator, CostOperator};
use sepstat_core::ensembles::caratheodory_length;
use sepstat_core::state::{eigen_ensemble, ppt_check, DEFAULT_RANK_CUTOFF};
use sepstat_core::statmech::{
    anneal, fit_energy_scaling, AnnealOptions, EnergySample, StateDensityEstimate,
};
use sepstat_core::werner::{
    bell_basis, saddle_search, werner_eigenensemble, werner_state, z1_point, DEFAULT_RESTARTS,
    DEFAULT_SADDLE_TOL, DEFAULT_THRESHOLD,
};
use sepstat_core::{DensityMatrix, Error as CoreError};

use crate::config::{parse_beta, parse_p_grid, RunConfig};
use crate::csv::{flag, num, CsvDoc};
use crate::error::{CliError, Result};
use crate::io::{read_density_matrix, StiefelPointJson};
use crate::parallel;

pub const DEFAULT_SCAN_GRID: &str = "0.5:0.01:1.0";
pub const DEFAULT_SCAN_BETA: &str = "10";
pub const DEFAULT_SCALING_BETA: &str = "10:1e4:12";
pub const DEFAULT_PROBE_BETA: &str = "1,10,100";
pub const DEFAULT_MC_BETA: &str = "1:1e4:13";
pub const DEFAULT_ANNEAL_BETA: &str = "1:1e5:21";
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_ANNEAL_SWEEPS: usize = 2000;
pub const DEFAULT_BINS: usize = 60;
pub const MIN_SAMPLES: usize = 100;
/// Amplitude of the synthetic `⟨⟨E⟩⟩ = A/β` curve used by `scaling --self-test`.
pub const SELF_TEST_AMPLITUDE: f64 = 2.75;
/// Annealing ladder used by `probe` to refine the sampled minimum.
pub const PROBE_ANNEAL_BETA: &str = "1:1e5:11";
/// Largest deviation from the nearest Werner state for `probe` to treat
/// an input as Werner.
pub const WERNER_MATCH_TOL: f64 = 1e-10;

/// Documents produced by a command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    /// CSV or JSON written to `--out` (stdout otherwise).
    pub main: String,
    /// Second CSV (the `mc` histogram), written to `--hist-out`, next to
    /// `--out`, or after the main document on stdout.
    pub secondary: Option<String>,
    /// Human-readable lines.
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateInput {
    Werner(f64),
    File(PathBuf),
}

fn state_input(cfg: &RunConfig) -> Result<StateInput> {
    match (cfg.werner, &cfg.state) {
        (Some(_), Some(_)) => Err(CliError::validation(
            "give either --werner or --state, not both",
        )),
        (Some(p), None) => Ok(StateInput::Werner(p)),
        (None, Some(path)) => Ok(StateInput::File(path.clone())),
        (None, None) => Err(CliError::validation(
            "a state is required: --werner <p> or --state <path>",
        )),
    }
}

fn load_state(input: &StateInput) -> Result<DensityMatrix> {
    match input {
        StateInput::Werner(p) => Ok(werner_state(*p)?),
        StateInput::File(path) => read_density_matrix(path),
    }
}

/// Cost operator of the input: the Werner eigenensemble with its fixed
/// phase convention for `--werner`, the spectral ensemble otherwise.
fn state_cost_operator(input: &StateInput, rho: &DensityMatrix) -> Result<CostOperator> {
    let ens = match input {
        StateInput::Werner(p) if *p > 0.0 => werner_eigenensemble(*p)?,
        _ => eigen_ensemble(rho, DEFAULT_RANK_CUTOFF)?,
    };
    Ok(cost_operator(&ens))
}

fn require_seed(cfg: &RunConfig) -> Result<u64> {
    cfg.seed
        .ok_or_else(|| CliError::validation("--seed is required for stochastic commands"))
}

fn check_threshold(t: f64) -> Result<f64> {
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(CliError::validation("threshold must be positive"))
    }
}

fn check_length(len: usize, cop: &CostOperator) -> Result<usize> {
    if len < cop.rank().max(2) {
        return Err(CliError::validation(format!(
            "ensemble length {len} must be at least max(2, rank = {})",
            cop.rank()
        )));
    }
    Ok(len)
}

// JSON cannot hold non-finite numbers
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("plain data serialises") + "\n"
}

/// `p` with `ϱ = W(p)` when `ϱ` is a two-qubit Werner state.
pub fn werner_parameter(rho: &DensityMatrix) -> Option<f64> {
    if rho.dim_a() != 2 || rho.dim_b() != 2 {
        return None;
    }
    let singlet = &bell_basis()[0];
    let f = sepstat_core::linalg::inner(
        singlet.amplitudes(),
        &rho.matrix().mul_vec(singlet.amplitudes()),
    )
    .re;
    let p = (4.0 / 3.0 * (1.0 - f)).clamp(0.0, 1.0);
    let w = werner_state(p).ok()?;
    (w.matrix().max_abs_diff(rho.matrix()) < WERNER_MATCH_TOL).then_some(p)
}

pub fn cmd_probe(cfg: &RunConfig) -> Result<CommandOutput> {
    let mut cfg = cfg.clone();
    let input = state_input(&cfg)?;
    let seed = require_seed(&cfg)?;
    let samples = *cfg.samples.get_or_insert(DEFAULT_SAMPLES);
    if samples < MIN_SAMPLES {
        return Err(CliError::validation(format!(
            "samples must be at least {MIN_SAMPLES}"
        )));
    }
    let betas = parse_beta(cfg.beta.get_or_insert_with(|| DEFAULT_PROBE_BETA.into()))?;
    let threshold = check_threshold(*cfg.threshold.get_or_insert(DEFAULT_THRESHOLD))?;
    let rho = load_state(&input)?;
    let cop = state_cost_operator(&input, &rho)?;
    let n = check_length(
        *cfg.length
            .get_or_insert(caratheodory_length(rho.dim_a(), rho.dim_b())),
        &cop,
    )?;

    let ppt = ppt_check(&rho);
    let sample = parallel::energy_sample(&cop, n, samples, seed)?;
    let estimates: Vec<Value> = betas
        .iter()
        .map(|&b| {
            let e = sample.reweight(b);
            json!({
                "beta": b,
                "mean_energy": finite(e.mean_energy),
                "std_error": finite(e.std_error),
                "ess": finite(e.effective_sample_size),
            })
        })
        .collect();
    let (blk, idx) = sample.argmin();
    let haar_point = EnergySample::replay_point(n, cop.rank(), seed, blk, idx)?;
    let run = anneal(
        &cop,
        n,
        &parse_beta(PROBE_ANNEAL_BETA)?,
        AnnealOptions::default(),
        seed,
    )?;
    let (min_energy, min_point) = if run.best_energy < sample.min_energy() {
        (run.best_energy, run.best_point)
    } else {
        (sample.min_energy(), haar_point)
    };

    let werner = match werner_parameter(&rho) {
        None => Value::Null,
        Some(p) if p == 0.0 => json!({
            "p": p,
            "saddles": Value::Null,
            "note": "pure state: the reduced partition function needs a mixed state",
        }),
        Some(p) => {
            let saddles = betas
                .iter()
                .filter(|&&b| b > 0.0)
                .map(|&b| {
                    let s = saddle_search(b, p, DEFAULT_SADDLE_TOL, DEFAULT_RESTARTS, seed)?;
                    let in_region = s.residual_norm < threshold;
                    let avg = if in_region {
                        finite(z1_point(b, s.omega_prime(), p)?.avg_energy(b))
                    } else {
                        Value::Null
                    };
                    Ok(json!({
                        "beta": b,
                        "residual": s.residual_norm,
                        "gamma_star": s.gamma_star,
                        "lambda_star": s.lambda_star,
                        "interior": s.interior,
                        "in_region": in_region,
                        "avg_energy": avg,
                    }))
                })
                .collect::<std::result::Result<Vec<_>, CoreError>>()?;
            json!({ "p": p, "saddles": saddles })
        }
    };

    let mut summary = vec![
        format!("ppt_entangled: {}", ppt.entangled),
        format!("min_energy: {}", num(min_energy)),
    ];
    if !ppt.decisive && !ppt.entangled {
        summary.push("PPT is not decisive for this dimension".into());
    }
    let report = json!({
        "command": "probe",
        "config": serde_json::from_str::<Value>(&cfg.header_json()).expect("valid json"),
        "dimA": rho.dim_a(),
        "dimB": rho.dim_b(),
        "ppt_entangled": ppt.entangled,
        "ppt_min_eigenvalue": ppt.min_eigenvalue,
        "ppt_decisive": ppt.decisive,
        "mc": {
            "length": n,
            "samples": samples,
            "haar_min_energy": sample.min_energy(),
            "anneal_min_energy": run.best_energy,
            "min_energy": min_energy,
            "min_point": StiefelPointJson::from_point(&min_point),
            "estimates": estimates,
        },
        "werner": werner,
    });
    Ok(CommandOutput {
        main: pretty(&report),
        secondary: None,
        summary,
    })
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<CommandOutput> {
    let mut cfg = cfg.clone();
    let grid = parse_p_grid(cfg.p_grid.get_or_insert_with(|| DEFAULT_SCAN_GRID.into()))?;
    if grid.is_empty() {
        return Err(CliError::validation("p-grid is empty"));
    }
    let betas = parse_beta(cfg.beta.get_or_insert_with(|| DEFAULT_SCAN_BETA.into()))?;
    let [beta] = betas[..] else {
        return Err(CliError::validation("scan takes a single beta value"));
    };
    let threshold = check_threshold(*cfg.threshold.get_or_insert(DEFAULT_THRESHOLD))?;
    let tol = *cfg.tol.get_or_insert(DEFAULT_SADDLE_TOL);
    let restarts = *cfg.restarts.get_or_insert(DEFAULT_RESTARTS);
    let seed = *cfg.seed.get_or_insert(0);

    let scan = parallel::equipartition_scan(&grid, beta, threshold, tol, restarts, seed)?;
    let mut doc = CsvDoc::new(
        "scan",
        &cfg.header_json(),
        &["p", "residual", "gamma_star", "lambda_star", "interior"],
    );
    for (p, s) in scan.p_grid.iter().zip(&scan.saddles) {
        doc.row(&[
            num(*p),
            num(s.residual_norm),
            num(s.gamma_star),
            num(s.lambda_star),
            flag(s.interior).into(),
        ]);
    }
    doc.footer(
        &json!({ "beta": beta, "threshold": threshold, "region_start": scan.region_start })
            .to_string(),
    );
    let region = scan
        .region_start
        .map_or_else(|| "none".to_string(), |p| format!("{p}"));
    Ok(CommandOutput {
        main: doc.finish(),
        secondary: None,
        summary: vec![format!("region_start: {region}")],
    })
}

pub fn cmd_scaling(cfg: &RunConfig) -> Result<CommandOutput> {
    let mut cfg = cfg.clone();
    let self_test = *cfg.self_test.get_or_insert(false);
    let betas = parse_beta(cfg.beta.get_or_insert_with(|| DEFAULT_SCALING_BETA.into()))?;
    if betas.len() < 2 || betas.iter().any(|&b| b <= 0.0) {
        return Err(CliError::validation(
            "scaling needs at least two positive beta values",
        ));
    }
    let mut rows: Vec<(f64, Option<f64>, bool)> = Vec::with_capacity(betas.len());
    if self_test {
        // synthetic A/β data; the fit must return δ = A − 1
        rows.extend(
            betas
                .iter()
                .map(|&b| (b, Some(SELF_TEST_AMPLITUDE / b), false)),
        );
    } else {
        let p = cfg
            .werner
            .ok_or_else(|| CliError::validation("scaling needs --werner <p>"))?;
        if cfg.state.is_some() {
            return Err(CliError::validation("scaling works on Werner states only"));
        }
        let threshold = check_threshold(*cfg.threshold.get_or_insert(DEFAULT_THRESHOLD))?;
        let seed = *cfg.seed.get_or_insert(0);
        // pre-scan at the smallest β decides whether p is in the region
        let b0 = betas.iter().cloned().fold(f64::INFINITY, f64::min);
        let s = saddle_search(b0, p, DEFAULT_SADDLE_TOL, DEFAULT_RESTARTS, seed)?;
        if !(s.residual_norm < threshold) {
            return Err(CoreError::ConstraintsUnsatisfiable {
                p,
                residual: s.residual_norm,
            }
            .into());
        }
        for (b, r) in betas
            .iter()
            .zip(parallel::werner_energy_curve(&betas, p, threshold, seed))
        {
            match r {
                Ok((e, _)) => rows.push((*b, Some(e), true)),
                Err(CoreError::ConstraintsUnsatisfiable { .. }) => rows.push((*b, None, false)),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|&(b, e, _)| e.filter(|e| *e > 0.0).map(|e| (b, e)))
        .collect();
    let fit = fit_energy_scaling(&points)?;

    let mut doc = CsvDoc::new(
        "scaling",
        &cfg.header_json(),
        &["beta", "avg_energy", "analytic_flag"],
    );
    for &(b, e, analytic) in &rows {
        doc.row(&[
            num(b),
            e.map_or_else(|| "N/A".into(), num),
            flag(analytic).into(),
        ]);
    }
    doc.footer(
        &json!({
            "slope": fit.slope,
            "delta": fit.delta,
            "amplitude": fit.amplitude,
            "r_squared": fit.r_squared,
            "points": points.len(),
        })
        .to_string(),
    );
    Ok(CommandOutput {
        main: doc.finish(),
        secondary: None,
        summary: vec![
            format!("slope: {}", fit.slope),
            format!("delta: {}", fit.delta),
        ],
    })
}

pub fn cmd_mc(cfg: &RunConfig) -> Result<CommandOutput> {
    let mut cfg = cfg.clone();
    let input = state_input(&cfg)?;
    let seed = require_seed(&cfg)?;
    let method = cfg.method.get_or_insert_with(|| "haar".into()).clone();
    let anneal_mode = match method.as_str() {
        "haar" => false,
        "anneal" => true,
        m => {
            return Err(CliError::validation(format!(
                "unknown method '{m}' (haar or anneal)"
            )))
        }
    };
    let samples = *cfg.samples.get_or_insert(if anneal_mode {
        DEFAULT_ANNEAL_SWEEPS
    } else {
        DEFAULT_SAMPLES
    });
    if samples < MIN_SAMPLES {
        return Err(CliError::validation(format!(
            "samples must be at least {MIN_SAMPLES}"
        )));
    }
    let default_beta = if anneal_mode {
        DEFAULT_ANNEAL_BETA
    } else {
        DEFAULT_MC_BETA
    };
    let betas = parse_beta(cfg.beta.get_or_insert_with(|| default_beta.into()))?;
    let rho = load_state(&input)?;
    let cop = state_cost_operator(&input, &rho)?;
    let n = check_length(
        *cfg.length
            .get_or_insert(caratheodory_length(rho.dim_a(), rho.dim_b())),
        &cop,
    )?;
    let bins = if anneal_mode {
        None
    } else {
        Some(*cfg.bins.get_or_insert(DEFAULT_BINS))
    };

    let columns = ["beta", "mean_energy", "std_error", "ess", "min_energy"];
    let mut doc = CsvDoc::new("mc", &cfg.header_json(), &columns);
    let mut secondary = None;
    let min_energy;
    if anneal_mode {
        let opts = AnnealOptions {
            burn_in_sweeps: samples / 2,
            measure_sweeps: samples,
            ..Default::default()
        };
        let run = anneal(&cop, n, &betas, opts, seed)?;
        for e in &run.estimates {
            doc.row(&[
                num(e.beta),
                num(e.mean_energy),
                num(e.std_error),
                num(e.effective_sample_size),
                num(e.min_energy_seen),
            ]);
        }
        min_energy = run.best_energy;
    } else {
        let sample = parallel::energy_sample(&cop, n, samples, seed)?;
        for &b in &betas {
            let e = sample.reweight(b);
            doc.row(&[
                num(e.beta),
                num(e.mean_energy),
                num(e.std_error),
                num(e.effective_sample_size),
                num(e.min_energy_seen),
            ]);
        }
        min_energy = sample.min_energy();
        let energies: Vec<f64> = sample.energies().collect();
        let hist = StateDensityEstimate::from_samples(&energies, bins.expect("haar mode"))?;
        let mut h = CsvDoc::new(
            "mc",
            &cfg.header_json(),
            &["bin_lo", "bin_hi", "frequency", "density"],
        );
        for ((w, c), d) in hist
            .bin_edges
            .windows(2)
            .zip(&hist.counts)
            .zip(hist.densities())
        {
            h.row(&[num(w[0]), num(w[1]), num(*c), num(d)]);
        }
        h.footer(&json!({ "samples": samples, "max_energy": sample.max_energy() }).to_string());
        secondary = Some(h.finish());
    }
    doc.footer(&json!({ "length": n, "method": method, "min_energy": min_energy }).to_string());
    Ok(CommandOutput {
        main: doc.finish(),
        secondary,
        summary: vec![format!("min_energy: {}", num(min_energy))],
    })
}

pub fn cmd_ppt(cfg: &RunConfig) -> Result<CommandOutput> {
    let cfg = cfg.clone();
    if let Some(spec) = cfg.p_grid.as_deref() {
        if cfg.werner.is_some() || cfg.state.is_some() {
            return Err(CliError::validation(
                "ppt takes either --p-grid (Werner family) or a single state",
            ));
        }
        let grid = parse_p_grid(spec)?;
        if grid.is_empty() {
            return Err(CliError::validation("p-grid is empty"));
        }
        let mut doc = CsvDoc::new(
            "ppt",
            &cfg.header_json(),
            &["p", "min_eigenvalue", "entangled"],
        );
        let mut entangled = 0;
        for &p in &grid {
            let r = ppt_check(&werner_state(p)?);
            entangled += usize::from(r.entangled);
            doc.row(&[num(p), num(r.min_eigenvalue), flag(r.entangled).into()]);
        }
        return Ok(CommandOutput {
            main: doc.finish(),
            secondary: None,
            summary: vec![format!("entangled: {entangled} of {}", grid.len())],
        });
    }
    let rho = load_state(&state_input(&cfg)?)?;
    let r = ppt_check(&rho);
    let report = json!({
        "command": "ppt",
        "config": serde_json::from_str::<Value>(&cfg.header_json()).expect("valid json"),
        "ppt_entangled": r.entangled,
        "min_eigenvalue": r.min_eigenvalue,
        "decisive": r.decisive,
    });
    Ok(CommandOutput {
        main: pretty(&report),
        secondary: None,
        summary: vec![format!("ppt_entangled: {}", r.entangled)],
    })
}

/// `<out>` with its extension replaced by `hist.csv`.
pub fn default_hist_path(out: &Path) -> PathBuf {
    out.with_extension("hist.csv")
}

/// Writes files and returns `(stdout, stderr)` text. With `--out` the
/// documents go to files and the summary to stdout; without it the
/// documents go to stdout and the summary to stderr.
pub fn emit(cfg: &RunConfig, out: CommandOutput) -> Result<(String, String)> {
    let write =
        |path: &Path, text: &str| std::fs::write(path, text).map_err(|e| CliError::io(path, e));
    let summary: String = out.summary.iter().map(|l| format!("{l}\n")).collect();
    match &cfg.out {
        Some(path) => {
            write(path, &out.main)?;
            if let Some(sec) = &out.secondary {
                let hp = cfg
                    .hist_out
                    .clone()
                    .unwrap_or_else(|| default_hist_path(path));
                write(&hp, sec)?;
            }
            Ok((summary, String::new()))
        }
        None => {
            let mut text = out.main;
            match (&out.secondary, &cfg.hist_out) {
                (Some(sec), Some(hp)) => write(hp, sec)?,
                (Some(sec), None) => {
                    text.push('\n');
                    text.push_str(sec);
                }
                _ => {}
            }
            Ok((text, summary))
        }
    }
}
