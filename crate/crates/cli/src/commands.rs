use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use petrowave::damping::{check_hypotheses, ConditionResult};
use petrowave::decay::{asymptotic_rate, DecayEnvelope};
use petrowave::energy::{coupling_admissible, EnergyTrace};
use petrowave::export;
use petrowave::fitting::{
    admissible_omega, anchored_constant, comparison, dominance_check, fit_exponential, fit_power, fit_power_log,
    local_slopes, FitModel, FitResult, FitWindow,
};
use petrowave::sim::{run, CouplingProfile, RunOutput, Simulator};
use petrowave::spectral::ModeBasis;

use crate::config::{ExperimentConfig, OmegaSpec};
use crate::exit::CliError;

pub const COND_COUPLING: &str = "coupling_sup_bound";

/// What a successful command wrote and a one-line summary.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
}

fn prepare(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path.display(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path.display(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn csv_to<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(BufWriter<File>) -> petrowave::Result<()>,
{
    f(create(path)?).map_err(|e| CliError::io(path.display(), e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
    Ok(sha256_hex(&bytes))
}

pub fn config_fingerprint(cfg: &ExperimentConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

fn basis_and_coupling(cfg: &ExperimentConfig) -> Result<(ModeBasis, CouplingProfile), CliError> {
    let basis = ModeBasis::from_params(&cfg.basis).map_err(|e| CliError::config("basis", e))?;
    let coupling = CouplingProfile::from_spec(&basis, &cfg.coupling).map_err(|e| CliError::config("coupling", e))?;
    Ok((basis, coupling))
}

#[derive(Debug, Serialize)]
struct CheckReport {
    all_passed: bool,
    conditions: Vec<ConditionResult>,
    coupling: petrowave::energy::Admissibility,
    #[serde(skip_serializing_if = "Option::is_none")]
    damping: Option<petrowave::damping::HypothesisReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

/// Checks coupling admissibility and the damping hypotheses; writes
/// `hypotheses.json`. With `force`, failures are reported but not fatal.
pub fn cmd_check(cfg: &ExperimentConfig, out: &Path, force: bool) -> Result<Outcome, CliError> {
    let (basis, coupling) = basis_and_coupling(cfg)?;
    let adm = coupling_admissible(&coupling, &basis);
    let mut conditions = vec![ConditionResult {
        id: COND_COUPLING.into(),
        description: format!("sup|a| < min(1/c', 1) = {:.6}", adm.threshold),
        passed: adm.admissible,
        worst_margin: adm.margin,
        location: None,
        note: None,
    }];
    let mut damping = None;
    let mut note = None;
    match &cfg.damping {
        Some(d) => {
            let law = d.build()?;
            let g = d.G(&law)?;
            let report = check_hypotheses(&law, &g, 400)?;
            conditions.extend(report.conditions.iter().cloned());
            damping = Some(report);
        }
        None => note = Some("undamped configuration: damping hypotheses not applicable".into()),
    }
    let failed: Vec<&str> = conditions.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect();
    let report = CheckReport {
        all_passed: failed.is_empty(),
        conditions: conditions.clone(),
        coupling: adm,
        damping,
        note,
    };
    prepare(out)?;
    let path = out.join("hypotheses.json");
    write_json(&path, &report)?;
    let summary = if failed.is_empty() {
        format!("all {} conditions passed", conditions.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    if !failed.is_empty() && !force {
        return Err(CliError::Hypothesis(summary));
    }
    Ok(Outcome {
        written: vec![path],
        summary,
    })
}

#[derive(Debug, Serialize)]
struct Drift {
    e0: f64,
    e_final: f64,
    relative_drift: f64,
    /// Largest sample-to-sample energy increase relative to `E(0)`.
    max_relative_increase: f64,
}

fn drift(trace: &EnergyTrace) -> Option<Drift> {
    let e0 = trace.initial_energy()?;
    let e_final = trace.samples.last()?.energy;
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    let max_up = trace
        .samples
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(0.0, f64::max);
    Some(Drift {
        e0,
        e_final,
        relative_drift: (e_final - e0).abs() / scale,
        max_relative_increase: max_up / scale,
    })
}

fn write_run(out: &Path, run: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    let states = out.join("states.csv");
    let energy = out.join("energy.csv");
    csv_to(&states, |w| export::write_states(w, &run.states))?;
    csv_to(&energy, |w| export::write_energy(w, &run.trace))?;
    Ok(vec![states, energy])
}

/// Runs the simulation; writes `states.csv`, `energy.csv`, `manifest.json`.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let sim_cfg = cfg.sim_config()?;
    let sim = Simulator::new(&sim_cfg).map_err(|e| CliError::config("simulation", e))?;
    prepare(out)?;
    let started = Instant::now();
    let (output, failure) = match run(&sim_cfg) {
        Ok(o) => (o, None),
        Err(f) => match f.partial {
            Some(p) => (p, Some(f.error)),
            None => return Err(f.error.into()),
        },
    };
    let wall = started.elapsed().as_secs_f64();
    let mut written = write_run(out, &output)?;
    let adm = coupling_admissible(&sim.coupling, &sim.basis);
    let outputs: serde_json::Map<String, Value> = written
        .iter()
        .map(|p| {
            let name = p.file_name().expect("file").to_string_lossy().into_owned();
            file_sha256(p).map(|h| (name, Value::String(h)))
        })
        .collect::<Result<_, _>>()?;
    let mut manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_fingerprint(cfg),
        "trace_fingerprint": output.trace.fingerprint,
        "status": if failure.is_some() { "diverged" } else { "ok" },
        "error": failure.as_ref().map(|e| e.to_string()),
        "integrator": sim_cfg.integrator.name(),
        "dt": sim_cfg.dt,
        "dt_limit": sim_cfg.dt_limit(&sim.basis),
        "steps": sim.schedule(sim_cfg.t_end).len(),
        "samples": output.trace.len(),
        "coupling_admissible": adm.admissible,
        "drift": drift(&output.trace),
        "outputs": outputs,
    });
    let hash = sha256_hex(serde_json::to_string(&manifest).expect("json").as_bytes());
    manifest["manifest_sha256"] = Value::String(hash);
    // wall time is the only non-reproducible field and sits outside the hash
    manifest["wall_time_s"] = json!(wall);
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    written.push(path);
    if let Some(e) = failure {
        return Err(e.into());
    }
    let d = drift(&output.trace).expect("at least the initial sample");
    Ok(Outcome {
        written,
        summary: format!(
            "{} samples to t = {}, E: {:.6e} -> {:.6e} (relative drift {:.3e})",
            output.trace.len(),
            sim_cfg.t_end,
            d.e0,
            d.e_final,
            d.relative_drift
        ),
    })
}

pub fn read_trace(path: &Path) -> Result<EnergyTrace, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("cannot read trace {}: {e}", path.display())))?;
    export::read_energy(file).map_err(|e| CliError::Config(format!("trace {}: {e}", path.display())))
}

fn resolve_omega(cfg: &ExperimentConfig, trace: Option<&EnergyTrace>, fitted: Option<&FitResult>) -> Result<f64, CliError> {
    match cfg.decay.omega {
        OmegaSpec::Value(w) => Ok(w),
        OmegaSpec::Keyword(_) => {
            let phi = cfg.phi()?;
            if let Some(rate) = fitted.filter(|_| phi.g.is_linear()).and_then(|f| f.rate) {
                if rate > 0.0 {
                    return Ok(rate);
                }
            }
            let trace = trace.ok_or_else(|| CliError::Config("decay.omega = \"fit\" needs a trace".into()))?;
            Ok(admissible_omega(trace, &phi)?)
        }
    }
}

fn build_envelope(cfg: &ExperimentConfig, e0: f64, omega: f64) -> Result<DecayEnvelope, CliError> {
    Ok(DecayEnvelope::with_lambda(cfg.phi()?, omega, e0, cfg.decay.lambda)?)
}

fn eval_envelope(env: &DecayEnvelope, t: f64) -> petrowave::Result<f64> {
    if env.lambda() == 0.0 {
        env.envelope(t)
    } else {
        env.lemma0_bound(t)
    }
}

/// Samples the decay envelope; writes `envelope.csv` and `rate.json`.
pub fn cmd_envelope(cfg: &ExperimentConfig, trace_path: Option<&Path>, out: &Path) -> Result<Outcome, CliError> {
    let trace = trace_path.map(read_trace).transpose()?;
    let e0 = match (cfg.decay.e0, trace.as_ref().and_then(EnergyTrace::initial_energy)) {
        (Some(e), _) | (None, Some(e)) => e,
        (None, None) => return Err(CliError::Config("E0 missing: set decay.e0 or pass --trace".into())),
    };
    let times: Vec<f64> = if let Some(t) = &trace {
        t.times().collect()
    } else if let Some(ts) = &cfg.decay.times {
        ts.clone()
    } else {
        let end = cfg.decay.grid_end.unwrap_or(cfg.t_end);
        let n = cfg.decay.grid_points.max(2);
        (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect()
    };
    let omega = resolve_omega(cfg, trace.as_ref(), None)?;
    let env = build_envelope(cfg, e0, omega)?;
    let points: Vec<(f64, f64)> = times
        .iter()
        .map(|t| eval_envelope(&env, *t).map(|v| (*t, v)))
        .collect::<petrowave::Result<_>>()?;
    prepare(out)?;
    let csv_path = out.join("envelope.csv");
    csv_to(&csv_path, |w| export::write_envelope(w, &points))?;

    let rate = cfg.family().map(|(p, q)| asymptotic_rate(p, q));
    let (descriptor, branch_error) = match rate {
        None => (Value::Null, None),
        Some(Ok(d)) => (serde_json::to_value(&d).expect("json"), None),
        Some(Err(e)) => (Value::Null, Some(e)),
    };
    let rate_path = out.join("rate.json");
    write_json(
        &rate_path,
        &json!({
            "descriptor": descriptor,
            "error": branch_error.as_ref().map(|e| e.to_string()),
            "note": branch_error.as_ref().map(|_| "the rate table covers p > 1, (p = 1, q < 1) and (p = 1, q = 1); \
                the printed label of the polynomial branch reads \"q > 1\"".to_string()),
            "e0": e0,
            "omega": omega,
            "eps0": cfg.decay.eps0,
            "lambda": cfg.decay.lambda,
            "plateau_end": env.plateau_end()?,
        }),
    )?;
    if let Some(e) = branch_error {
        return Err(CliError::Branch(format!("{e}; see {}", rate_path.display())));
    }
    Ok(Outcome {
        written: vec![csv_path, rate_path],
        summary: format!("{} envelope samples, E0 = {e0}, ω = {omega}", points.len()),
    })
}

/// Command-line overrides for `fit`.
#[derive(Debug, Clone, Default)]
pub struct FitArgs {
    pub model: Option<FitModel>,
    pub window: Option<FitWindow>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub constant: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SlopeReport {
    /// `−d ln E/d ln t` averaged over the fit window.
    local_slope: Option<f64>,
    /// `2/(p − 1)` of the damping family, when `p > 1`.
    reference_exponent: Option<f64>,
}

/// Fits the trace and checks envelope dominance; writes `fit.json` and
/// `comparison.csv`.
pub fn cmd_fit(trace_path: &Path, cfg: &ExperimentConfig, args: &FitArgs, out: &Path) -> Result<Outcome, CliError> {
    let trace = read_trace(trace_path)?;
    let model = args.model.or(cfg.fit.model).unwrap_or(FitModel::Exponential);
    let window = args.window.or(cfg.fit.window);
    let fit = match model {
        FitModel::Exponential => fit_exponential(&trace, window)?,
        FitModel::Power => fit_power(&trace, window)?,
        FitModel::PowerLog => {
            let family = cfg.family();
            let p = args.p.or(cfg.fit.p).or(family.map(|f| f.0));
            let q = args.q.or(cfg.fit.q).or(family.map(|f| f.1));
            match (p, q) {
                (Some(p), Some(q)) => fit_power_log(&trace, window, p, q)?,
                _ => return Err(CliError::Config("power_log fits need p and q".into())),
            }
        }
    };
    let e0 = trace
        .initial_energy()
        .ok_or_else(|| CliError::Config("empty trace".into()))?;
    let omega = resolve_omega(cfg, Some(&trace), Some(&fit))?;
    let env = build_envelope(cfg, e0, omega)?;
    let c = match args.constant.or(cfg.fit.constant) {
        Some(c) => c,
        None => anchored_constant(&trace, &env, fit.window)?,
    };
    let dominance = dominance_check(&trace, &env, c, Some(fit.window))?;
    let rows = comparison(&trace, &env, c, Some(fit.window))?;

    let slopes: Vec<f64> = local_slopes(&trace)
        .into_iter()
        .filter(|(t, _)| fit.window.contains(*t))
        .map(|(_, s)| s)
        .collect();
    let slope = SlopeReport {
        local_slope: (!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64),
        reference_exponent: cfg.family().filter(|f| f.0 > 1.0).map(|f| 2.0 / (f.0 - 1.0)),
    };
    prepare(out)?;
    let fit_path = out.join("fit.json");
    write_json(
        &fit_path,
        &json!({
            "fit": fit,
            "omega": omega,
            "dominance": dominance,
            "slope": slope,
            "trace": trace_path.display().to_string(),
        }),
    )?;
    let cmp_path = out.join("comparison.csv");
    csv_to(&cmp_path, |w| export::write_comparison(w, &rows))?;
    if !dominance.holds {
        return Err(CliError::Dominance {
            worst_ratio: dominance.worst_ratio,
            t: dominance.worst_t,
        });
    }
    Ok(Outcome {
        written: vec![fit_path, cmp_path],
        summary: format!(
            "{:?} fit: C = {:.6e}, residual {:.3e}; dominance holds (worst ratio {:.6})",
            fit.model, fit.c, fit.residual, dominance.worst_ratio
        ),
    })
}

/// One sweep entry: a JSON merge patch applied to the base config.
#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub name: String,
    #[serde(default)]
    pub patch: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Check,
    Simulate,
    Envelope,
    Fit,
}

#[derive(Debug, Clone, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_steps")]
    pub commands: Vec<Step>,
    pub entries: Vec<SweepEntry>,
}

fn default_steps() -> Vec<Step> {
    vec![Step::Check, Step::Simulate]
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryResult {
    pub name: String,
    pub exit_code: i32,
    pub message: String,
}

fn run_entry(base: &Value, entry: &SweepEntry, steps: &[Step], out: &Path) -> Result<String, CliError> {
    let mut doc = base.clone();
    json_patch::merge(&mut doc, &entry.patch);
    let cfg = ExperimentConfig::from_json(&doc.to_string())?;
    let dir = out.join(&entry.name);
    let trace = dir.join("energy.csv");
    let mut last = String::new();
    for step in steps {
        let o = match step {
            Step::Check => cmd_check(&cfg, &dir, false)?,
            Step::Simulate => cmd_simulate(&cfg, &dir)?,
            Step::Envelope => cmd_envelope(&cfg, trace.exists().then_some(trace.as_path()), &dir)?,
            Step::Fit => cmd_fit(&trace, &cfg, &FitArgs::default(), &dir)?,
        };
        last = o.summary;
    }
    Ok(last)
}

/// Runs every entry in its own output directory, `jobs` at a time.
pub fn cmd_sweep(base: &Value, spec: &SweepSpec, jobs: usize, out: &Path) -> Result<(Outcome, Vec<EntryResult>), CliError> {
    let mut seen = std::collections::HashSet::new();
    for e in &spec.entries {
        let valid = !e.name.is_empty()
            && e.name != "."
            && e.name != ".."
            && !e.name.contains(['/', '\\']);
        if !valid || !seen.insert(e.name.as_str()) {
            return Err(CliError::Config(format!("sweep entry name `{}` is empty, a path or a duplicate", e.name)));
        }
    }
    prepare(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::io("thread pool", e))?;
    let results: Vec<EntryResult> = pool.install(|| {
        use rayon::prelude::*;
        spec.entries
            .par_iter()
            .map(|e| match run_entry(base, e, &spec.commands, out) {
                Ok(message) => EntryResult {
                    name: e.name.clone(),
                    exit_code: 0,
                    message,
                },
                Err(err) => EntryResult {
                    name: e.name.clone(),
                    exit_code: err.code(),
                    message: err.to_string(),
                },
            })
            .collect()
    });
    let path = out.join("sweep.json");
    write_json(&path, &json!({ "commands": spec.commands, "entries": results }))?;
    let failed = results.iter().filter(|r| r.exit_code != 0).count();
    Ok((
        Outcome {
            written: vec![path],
            summary: format!("{} entries, {failed} failed", results.len()),
        },
        results,
    ))
}
