//! Log-space decay fits of energy traces and envelope dominance checks.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::damping::Phi;
use crate::decay::DecayEnvelope;
use crate::energy::EnergyTrace;
use crate::error::{invalid, Error, Result};

pub const MIN_SAMPLES: usize = 10;
/// Log-space RMS residual above which a fit is flagged as poor.
pub const POOR_FIT_RESIDUAL: f64 = 0.05;
/// Relative slack allowed by [`dominance_check`].
pub const DOMINANCE_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

impl FitWindow {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min <= t_max) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(invalid("window", format!("[{t_min}, {t_max}] is not an interval")));
        }
        Ok(FitWindow { t_min, t_max })
    }

    /// Last half of the trace; for log-time models never earlier than `t = e`.
    pub fn late(trace: &EnergyTrace, log_time: bool) -> Result<Self> {
        let (first, last) = match (trace.samples.first(), trace.samples.last()) {
            (Some(a), Some(b)) => (a.t, b.t),
            _ => {
                return Err(Error::TooFewSamples {
                    t_min: 0.0,
                    t_max: 0.0,
                    count: 0,
                    needed: MIN_SAMPLES,
                })
            }
        };
        let mut t_min = 0.5 * (first + last);
        if log_time {
            t_min = t_min.max(E);
        }
        FitWindow::new(t_min, last.max(t_min))
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    Exponential,
    Power,
    PowerLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub c: f64,
    /// ω of `C e^{−ωt}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// `a` of `C t^{−a} (ln t)^{−b}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// `b` of `C t^{−a} (ln t)^{−b}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_exponent: Option<f64>,
    /// RMS of `ln E − ln model`.
    pub residual: f64,
    pub window: FitWindow,
    pub samples: usize,
    pub poor_fit: bool,
}

impl FitResult {
    pub fn predict(&self, t: f64) -> f64 {
        match self.model {
            FitModel::Exponential => self.c * (-self.rate.unwrap_or(0.0) * t).exp(),
            FitModel::Power | FitModel::PowerLog => {
                let a = self.exponent.unwrap_or(0.0);
                let b = self.log_exponent.unwrap_or(0.0);
                let mut v = self.c * t.powf(-a);
                if b != 0.0 {
                    v *= t.ln().powf(-b);
                }
                v
            }
        }
    }
}

// (t, ln E) pairs in the window
fn log_samples(trace: &EnergyTrace, window: FitWindow) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for s in trace.samples.iter().filter(|s| window.contains(s.t)) {
        if !(s.energy > 0.0) {
            return Err(Error::NonPositiveEnergy { t: s.t, value: s.energy });
        }
        out.push((s.t, s.energy.ln()));
    }
    if out.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            t_min: window.t_min,
            t_max: window.t_max,
            count: out.len(),
            needed: MIN_SAMPLES,
        });
    }
    Ok(out)
}

/// Ordinary least squares `y ≈ α + β x`.
fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - beta * mx, beta)
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), r| (n + 1, s + r * r));
    (sum / n.max(1) as f64).sqrt()
}

fn finish(model: FitModel, c: f64, rate: Option<f64>, exps: Option<(f64, f64)>, residual: f64, window: FitWindow, samples: usize) -> FitResult {
    FitResult {
        model,
        c,
        rate,
        exponent: exps.map(|e| e.0),
        log_exponent: exps.map(|e| e.1),
        residual,
        window,
        samples,
        poor_fit: residual > POOR_FIT_RESIDUAL,
    }
}

/// Least squares of `ln E` against `t`: `E ≈ C e^{−ωt}`.
pub fn fit_exponential(trace: &EnergyTrace, window: Option<FitWindow>) -> Result<FitResult> {
    let window = match window {
        Some(w) => w,
        None => FitWindow::late(trace, false)?,
    };
    let pts = log_samples(trace, window)?;
    let (alpha, beta) = ols(&pts);
    let residual = rms(pts.iter().map(|(t, y)| y - (alpha + beta * t)));
    Ok(finish(FitModel::Exponential, alpha.exp(), Some(-beta), None, residual, window, pts.len()))
}

/// Least squares of `ln E` against `ln t` with a free exponent: `E ≈ C t^{−a}`.
pub fn fit_power(trace: &EnergyTrace, window: Option<FitWindow>) -> Result<FitResult> {
    let window = match window {
        Some(w) => w,
        None => FitWindow::late(trace, true)?,
    };
    if !(window.t_min > 0.0) {
        return Err(invalid("window", "power fits need t > 0"));
    }
    let pts: Vec<(f64, f64)> = log_samples(trace, window)?.into_iter().map(|(t, y)| (t.ln(), y)).collect();
    let (alpha, beta) = ols(&pts);
    let residual = rms(pts.iter().map(|(x, y)| y - (alpha + beta * x)));
    Ok(finish(FitModel::Power, alpha.exp(), None, Some((-beta, 0.0)), residual, window, pts.len()))
}

/// `E ≈ C t^{−2/(p−1)} (ln t)^{−2q/(p−1)}` with the exponents fixed by
/// `(p, q)`; only `C` is fitted.
pub fn fit_power_log(trace: &EnergyTrace, window: Option<FitWindow>, p: f64, q: f64) -> Result<FitResult> {
    if !(p > 1.0) || !q.is_finite() {
        return Err(invalid("p", format!("power-log fits need p > 1, got p = {p}")));
    }
    let window = match window {
        Some(w) => w,
        None => FitWindow::late(trace, true)?,
    };
    if window.t_min < E {
        return Err(invalid("window", format!("must start at t ≥ e, got {}", window.t_min)));
    }
    let a = 2.0 / (p - 1.0);
    let b = 2.0 * q / (p - 1.0);
    let pts = log_samples(trace, window)?;
    // ln E + a ln t + b ln ln t = ln C + residual
    let shifted: Vec<f64> = pts.iter().map(|(t, y)| y + a * t.ln() + b * t.ln().ln()).collect();
    let ln_c = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let residual = rms(shifted.iter().map(|v| v - ln_c));
    Ok(finish(FitModel::PowerLog, ln_c.exp(), None, Some((a, b)), residual, window, pts.len()))
}

/// `−d ln E / d ln t` by central differences on consecutive samples with `t > 0`.
pub fn local_slopes(trace: &EnergyTrace) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.t > 0.0 && s.energy > 0.0)
        .map(|s| (s.t.ln(), s.energy.ln()))
        .collect();
    pts.windows(3)
        .map(|w| ((w[1].0).exp(), -(w[2].1 - w[0].1) / (w[2].0 - w[0].0)))
        .collect()
}

/// Largest ω with `∫_s^T φ(E) dt ≤ E(s)/ω` for all samples `s` in the first
/// half of the trace (trapezoid rule, energies normalised by `max(E0, 1)`).
pub fn admissible_omega(trace: &EnergyTrace, phi: &Phi) -> Result<f64> {
    let n = trace.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            t_min: trace.samples.first().map_or(0.0, |s| s.t),
            t_max: trace.samples.last().map_or(0.0, |s| s.t),
            count: n,
            needed: MIN_SAMPLES,
        });
    }
    let scale = trace.initial_energy().unwrap_or(1.0).max(1.0);
    let e: Vec<f64> = trace.energies().map(|v| v / scale).collect();
    let t: Vec<f64> = trace.times().collect();
    let f: Vec<f64> = e.iter().map(|v| phi.eval(v.max(0.0))).collect::<Result<_>>()?;
    // tail[i] = ∫_{t_i}^{T} φ(E)
    let mut tail = vec![0.0; n];
    for i in (0..n - 1).rev() {
        tail[i] = tail[i + 1] + 0.5 * (f[i] + f[i + 1]) * (t[i + 1] - t[i]);
    }
    let omega = (0..n / 2)
        .filter(|i| tail[*i] > 0.0)
        .map(|i| e[i] / tail[i])
        .fold(f64::INFINITY, f64::min);
    if !omega.is_finite() {
        return Err(invalid("trace", "no dissipation to estimate ω from"));
    }
    Ok(omega)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub holds: bool,
    pub constant: f64,
    /// `max E / (C · envelope)` over the checked samples.
    pub worst_ratio: f64,
    pub worst_t: f64,
    /// `max(0, worst_ratio − 1)`.
    pub max_violation: f64,
    pub first_violation_t: Option<f64>,
    pub checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: f64,
    pub energy: f64,
    pub envelope: f64,
    pub ratio: f64,
}

/// Rows `(t, E, C·envelope, E/(C·envelope))` for the samples in `window`.
pub fn comparison(trace: &EnergyTrace, env: &DecayEnvelope, c: f64, window: Option<FitWindow>) -> Result<Vec<ComparisonRow>> {
    trace
        .samples
        .iter()
        .filter(|s| window.is_none_or(|w| w.contains(s.t)))
        .map(|s| {
            let bound = c * env.envelope(s.t)?;
            Ok(ComparisonRow {
                t: s.t,
                energy: s.energy,
                envelope: bound,
                ratio: s.energy / bound,
            })
        })
        .collect()
}

/// Checks `E(tᵢ) ≤ C · envelope(tᵢ) · (1 + 1e-6)` on every sample in `window`.
pub fn dominance_check(trace: &EnergyTrace, env: &DecayEnvelope, c: f64, window: Option<FitWindow>) -> Result<DominanceReport> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("C", format!("must be positive, got {c}")));
    }
    let rows = comparison(trace, env, c, window)?;
    let mut report = DominanceReport {
        holds: true,
        constant: c,
        worst_ratio: 0.0,
        worst_t: f64::NAN,
        max_violation: 0.0,
        first_violation_t: None,
        checked: rows.len(),
    };
    for row in &rows {
        if row.ratio > report.worst_ratio || report.worst_t.is_nan() {
            report.worst_ratio = row.ratio;
            report.worst_t = row.t;
        }
        if row.energy > row.envelope * (1.0 + DOMINANCE_SLACK) {
            report.holds = false;
            report.first_violation_t.get_or_insert(row.t);
        }
    }
    report.max_violation = (report.worst_ratio - 1.0).max(0.0);
    Ok(report)
}

/// Constant that makes `C · envelope` touch the trace at the window start,
/// so that dominance on the window tests only the decay rate.
pub fn anchored_constant(trace: &EnergyTrace, env: &DecayEnvelope, window: FitWindow) -> Result<f64> {
    let s = trace
        .samples
        .iter()
        .find(|s| window.contains(s.t))
        .ok_or(Error::TooFewSamples {
            t_min: window.t_min,
            t_max: window.t_max,
            count: 0,
            needed: 1,
        })?;
    Ok(s.energy / env.envelope(s.t)?)
}
