//! Nonlinear damping laws `g`, the convex comparison function `G`, its
//! Legendre conjugate and the rate function `φ` built from `G`.
//!
//! Every law is odd, vanishes at zero and is continued beyond its threshold
//! `ε` by its tangent line at `ε`, so it is defined on all of ℝ.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{bisect_monotone, BisectOptions};

/// Smallest magnitude sampled by the hypothesis checker.
pub const SAMPLE_FLOOR: f64 = 1e-12;

/// Decades sampled above the threshold `ε` by the hypothesis checker.
const SAMPLE_DECADES_ABOVE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(deny_unknown_fields)]
pub enum DampingKind {
    /// `g(s) = gain * s`
    Linear { gain: f64 },
    /// `g(s) = s^p (-ln s)^q` on `(0, ε]`
    PowerLog { p: f64, q: f64 },
    /// Piecewise-linear through `(s, g(s))` for `s >= 0`, starting at the origin.
    Table { points: Vec<(f64, f64)> },
}

/// Optional user bounds `c₁|s| <= |g(s)| <= c₂|s|` (for `|s| > ε`) and
/// `τ₁ <= g'(s) <= τ₂`. Missing values are fitted from samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingBounds {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampingLaw {
    pub kind: DampingKind,
    pub epsilon: f64,
    pub bounds: DampingBounds,
}

pub fn make_linear(gain: f64, epsilon: f64) -> Result<DampingLaw> {
    if !(gain > 0.0) || !gain.is_finite() {
        return Err(invalid("gain", format!("must be positive, got {gain}")));
    }
    check_epsilon(epsilon)?;
    Ok(DampingLaw {
        kind: DampingKind::Linear { gain },
        epsilon,
        bounds: DampingBounds::default(),
    })
}

/// `g(s) = s^p (-ln s)^q` on `(0, ε]`.
///
/// A zero slope exactly at `ε` is tolerated; anything decreasing inside
/// `(0, ε]` is rejected.
pub fn make_power_log(p: f64, q: f64, epsilon: f64) -> Result<DampingLaw> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid("p", format!("must be at least 1, got {p}")));
    }
    if !q.is_finite() {
        return Err(invalid("q", "must be finite"));
    }
    check_epsilon(epsilon)?;
    if q != 0.0 {
        if epsilon >= 1.0 {
            return Err(invalid("epsilon", format!("must be below 1 when q != 0, got {epsilon}")));
        }
        // p(-ln s) - q grows as s decreases, so its value at ε is the minimum
        let slope_factor = p * -epsilon.ln() - q;
        if slope_factor < -1e-12 * q.abs().max(1.0) {
            return Err(invalid(
                "epsilon",
                format!(
                    "g is decreasing near {epsilon}: p(-ln ε) - q = {slope_factor:.3e}; choose ε < {:.6}",
                    (-q / p).exp()
                ),
            ));
        }
    }
    Ok(DampingLaw {
        kind: DampingKind::PowerLog { p, q },
        epsilon,
        bounds: DampingBounds::default(),
    })
}

pub fn make_table(points: Vec<(f64, f64)>, epsilon: f64) -> Result<DampingLaw> {
    check_epsilon(epsilon)?;
    if points.len() < 2 {
        return Err(invalid("points", "need at least two points"));
    }
    if points[0] != (0.0, 0.0) {
        return Err(invalid("points", "table must start at (0, 0)"));
    }
    if points.iter().any(|(s, g)| !s.is_finite() || !g.is_finite()) {
        return Err(Error::NonFinite("damping table"));
    }
    if points.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(invalid("points", "abscissae must be strictly increasing"));
    }
    Ok(DampingLaw {
        kind: DampingKind::Table { points },
        epsilon,
        bounds: DampingBounds::default(),
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    Ok(())
}

impl DampingLaw {
    pub fn with_bounds(mut self, bounds: DampingBounds) -> Self {
        self.bounds = bounds;
        self
    }

    /// `(p, q)` of the power-log family, with the linear law as `(1, 0)`.
    pub fn family_exponents(&self) -> Option<(f64, f64)> {
        match self.kind {
            DampingKind::Linear { .. } => Some((1.0, 0.0)),
            DampingKind::PowerLog { p, q } => Some((p, q)),
            DampingKind::Table { .. } => None,
        }
    }

    pub fn g(&self, s: f64) -> f64 {
        let a = s.abs();
        let v = match &self.kind {
            DampingKind::Linear { gain } => gain * a,
            DampingKind::PowerLog { p, q } => {
                let e = self.epsilon;
                if a <= e {
                    power_log(a, *p, *q)
                } else {
                    power_log(e, *p, *q) + power_log_slope(e, *p, *q) * (a - e)
                }
            }
            DampingKind::Table { points } => table_eval(points, a).0,
        };
        v.copysign(s)
    }

    pub fn dg(&self, s: f64) -> f64 {
        let a = s.abs();
        match &self.kind {
            DampingKind::Linear { gain } => *gain,
            DampingKind::PowerLog { p, q } => power_log_slope(a.min(self.epsilon), *p, *q),
            DampingKind::Table { points } => table_eval(points, a).1,
        }
    }

    /// Supremum of `g'` used by the integrator stability guards: the user
    /// `τ₂` if given, else the maximum over the sampled grid (zero excluded).
    pub fn slope_sup(&self) -> f64 {
        if let Some(t) = self.bounds.tau2 {
            return t;
        }
        positive_samples(self.epsilon, 200)
            .into_iter()
            .map(|s| self.dg(s))
            .fold(0.0, f64::max)
    }
}

fn power_log(s: f64, p: f64, q: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if q == 0.0 {
        s.powf(p)
    } else {
        s.powf(p) * (-s.ln()).powf(q)
    }
}

fn power_log_slope(s: f64, p: f64, q: f64) -> f64 {
    if s == 0.0 {
        return if p > 1.0 {
            0.0
        } else if q > 0.0 {
            f64::INFINITY
        } else if q < 0.0 {
            0.0
        } else {
            p
        };
    }
    if q == 0.0 {
        p * s.powf(p - 1.0)
    } else {
        let l = -s.ln();
        s.powf(p - 1.0) * l.powf(q - 1.0) * (p * l - q)
    }
}

fn table_eval(points: &[(f64, f64)], s: f64) -> (f64, f64) {
    let i = match points.iter().position(|(x, _)| *x > s) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => points.len() - 2,
    };
    let i = i.min(points.len() - 2);
    let (x0, y0) = points[i];
    let (x1, y1) = points[i + 1];
    let slope = (y1 - y0) / (x1 - x0);
    (y0 + slope * (s - x0), slope)
}

/// The convex comparison function `G` on `[0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GFunction {
    /// `G(s) = scale * s`
    Linear { scale: f64 },
    /// `G(s) = scale * s^{(p+1)/2} (-ln √s)^q` on `[0, s_max]`
    PowerLog {
        p: f64,
        q: f64,
        scale: f64,
        s_max: f64,
    },
}

/// Builds `G` for the linear and power-log laws. Table laws have no
/// canonical `G` and must be given one explicitly.
#[allow(non_snake_case)]
pub fn make_G(law: &DampingLaw, c_g: f64) -> Result<GFunction> {
    if !(c_g > 0.0) || !c_g.is_finite() {
        return Err(invalid("c_G", format!("must be positive, got {c_g}")));
    }
    match law.kind {
        DampingKind::Linear { .. } => Ok(GFunction::Linear { scale: c_g }),
        DampingKind::PowerLog { p, q } if p == 1.0 && q == 0.0 => Ok(GFunction::Linear { scale: c_g }),
        DampingKind::PowerLog { p, q } => Ok(GFunction::PowerLog {
            p,
            q,
            scale: c_g,
            s_max: if q == 0.0 { f64::INFINITY } else { law.epsilon * law.epsilon },
        }),
        DampingKind::Table { .. } => Err(Error::GRequired("a tabulated damping law")),
    }
}

impl GFunction {
    pub fn is_linear(&self) -> bool {
        matches!(self, GFunction::Linear { .. })
    }

    pub fn s_max(&self) -> f64 {
        match self {
            GFunction::Linear { .. } => f64::INFINITY,
            GFunction::PowerLog { s_max, .. } => *s_max,
        }
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if s < 0.0 || s > self.s_max() || s.is_nan() {
            return Err(Error::OutOfDomain {
                what: "G",
                value: s,
                lo: 0.0,
                hi: self.s_max(),
            });
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match *self {
            GFunction::Linear { scale } => scale * s,
            GFunction::PowerLog { p, q, scale, .. } => {
                if s == 0.0 {
                    0.0
                } else if q == 0.0 {
                    scale * s.powf(0.5 * (p + 1.0))
                } else {
                    scale * s.powf(0.5 * (p + 1.0)) * (-s.sqrt().ln()).powf(q)
                }
            }
        })
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match *self {
            GFunction::Linear { scale } => scale,
            GFunction::PowerLog { p, q, scale, .. } => {
                let a = 0.5 * (p + 1.0);
                if s == 0.0 {
                    if p > 1.0 || q < 0.0 {
                        0.0
                    } else if q > 0.0 {
                        f64::INFINITY
                    } else {
                        scale * a
                    }
                } else if q == 0.0 {
                    scale * a * s.powf(0.5 * (p - 1.0))
                } else {
                    let l = -s.sqrt().ln();
                    scale * s.powf(0.5 * (p - 1.0)) * l.powf(q - 1.0) * (a * l - 0.5 * q)
                }
            }
        })
    }

    /// `G⁻¹(y)` by bisection on `[0, s_max]`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 || y.is_nan() {
            return Err(Error::OutOfDomain {
                what: "G⁻¹",
                value: y,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let GFunction::Linear { scale } = self {
            return Ok(y / scale);
        }
        let hi = self.bracket_above(|s| self.value(s), y)?;
        bisect_monotone(|s| self.value(s), y, 0.0, hi, fine())
    }

    /// `(G')⁻¹(y)` by bisection; requires a strictly convex `G`.
    pub fn derivative_inverse(&self, y: f64) -> Result<f64> {
        if self.is_linear() {
            return Err(invalid("G", "derivative of a linear G is not invertible"));
        }
        let lo_val = self.derivative(0.0)?;
        if y < lo_val || y.is_nan() {
            return Err(Error::OutOfDomain {
                what: "range of G'",
                value: y,
                lo: lo_val,
                hi: self.derivative(self.s_max()).unwrap_or(f64::INFINITY),
            });
        }
        if y == lo_val {
            return Ok(0.0);
        }
        let hi = self.bracket_above(|s| self.derivative(s), y)?;
        bisect_monotone(|s| self.derivative(s), y, 0.0, hi, fine())
    }

    // smallest probed point in the domain where the increasing `f` reaches `y`
    fn bracket_above<F: Fn(f64) -> Result<f64>>(&self, f: F, y: f64) -> Result<f64> {
        let s_max = self.s_max();
        if s_max.is_finite() {
            let top = f(s_max)?;
            if top < y {
                return Err(Error::OutOfDomain {
                    what: "range of G on its domain",
                    value: y,
                    lo: 0.0,
                    hi: top,
                });
            }
            return Ok(s_max);
        }
        let mut hi = 1.0;
        for _ in 0..2100 {
            if f(hi)? >= y {
                return Ok(hi);
            }
            hi *= 2.0;
        }
        Err(Error::OutOfDomain {
            what: "range of G",
            value: y,
            lo: 0.0,
            hi: f64::MAX,
        })
    }

    /// Legendre transform `G*(s) = s (G')⁻¹(s) - G((G')⁻¹(s))`.
    pub fn legendre_conjugate(&self, s: f64) -> Result<f64> {
        let x = self.derivative_inverse(s)?;
        Ok(s * x - self.value(x)?)
    }
}

fn fine() -> BisectOptions {
    BisectOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        max_iter: 2000,
    }
}

/// Free-function form of [`GFunction::legendre_conjugate`].
#[allow(non_snake_case)]
pub fn legendre_conjugate(G: &GFunction, s: f64) -> Result<f64> {
    G.legendre_conjugate(s)
}

/// The rate function `φ`: `φ(t) = t` for linear `G`, else `t G'(ε₀ t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    pub g: GFunction,
    pub eps0: f64,
}

impl Phi {
    pub fn new(g: GFunction, eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0) || !eps0.is_finite() {
            return Err(invalid("eps0", format!("must be positive, got {eps0}")));
        }
        Ok(Phi { g, eps0 })
    }

    /// `φ(t) = t`.
    pub fn identity() -> Self {
        Phi {
            g: GFunction::Linear { scale: 1.0 },
            eps0: 1.0,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::OutOfDomain {
                what: "φ",
                value: t,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if self.g.is_linear() {
            return Ok(t);
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let arg = self.eps0 * t;
        if arg > self.g.s_max() {
            return Err(Error::OutOfDomain {
                what: "φ (ε₀ t beyond the domain of G)",
                value: t,
                lo: 0.0,
                hi: self.g.s_max() / self.eps0,
            });
        }
        Ok(t * self.g.derivative(arg)?)
    }

    /// `φ(t) / t`, finite at `t = 0` where `φ` is differentiable.
    pub fn slope(&self, t: f64) -> Result<f64> {
        if self.g.is_linear() {
            return Ok(1.0);
        }
        if t == 0.0 {
            return self.g.derivative(0.0);
        }
        Ok(self.eval(t)? / t)
    }
}

/// Free-function form of [`Phi::eval`].
#[allow(non_snake_case)]
pub fn phi(G: &GFunction, eps0: f64, t: f64) -> Result<f64> {
    Phi::new(G.clone(), eps0)?.eval(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub worst_margin: f64,
    pub location: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub all_passed: bool,
    pub bounds: FittedBounds,
    pub conditions: Vec<ConditionResult>,
}

impl HypothesisReport {
    pub fn condition(&self, id: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedBounds {
    pub c1: f64,
    pub c2: f64,
    pub tau1: f64,
    pub tau2: f64,
}

pub const COND_MONOTONE: &str = "g_monotone";
pub const COND_LINEAR_GROWTH: &str = "g_linear_growth";
pub const COND_G_COMPARISON: &str = "g_G_comparison";
pub const COND_SLOPE_BOUNDS: &str = "g_slope_bounds";
pub const COND_CONVEX: &str = "g_convex";

// log-spaced magnitudes: n points in [SAMPLE_FLOOR, ε], n points in (ε, ε·10^4]
fn positive_samples(epsilon: f64, n: usize) -> Vec<f64> {
    let lo = SAMPLE_FLOOR.min(epsilon).ln();
    let mid = epsilon.ln();
    let hi = mid + SAMPLE_DECADES_ABOVE * std::f64::consts::LN_10;
    let mut out: Vec<f64> = (0..n)
        .map(|i| (lo + (mid - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    // hit ε exactly
    *out.last_mut().unwrap() = epsilon;
    out.extend((1..=n).map(|i| (mid + (hi - mid) * i as f64 / n as f64).exp()));
    out
}

fn margin_ok(margin: f64, scale: f64) -> bool {
    margin >= -1e-9 * scale.abs().max(f64::MIN_POSITIVE)
}

struct Worst {
    margin: f64,
    location: Option<f64>,
    ok: bool,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            location: None,
            ok: true,
        }
    }

    fn record(&mut self, margin: f64, at: f64, scale: f64) {
        if !margin_ok(margin, scale) || margin.is_nan() {
            self.ok = false;
        }
        if margin < self.margin || margin.is_nan() {
            self.margin = margin;
            self.location = Some(at);
        }
    }
}

/// Samples every condition on `g` and `G` on log-spaced grids reaching
/// `1e-12`. Margins are `>= 0` when a condition holds; for the comparison
/// with `G` the margin is relative to `s² + g(s)²`.
#[allow(non_snake_case)]
pub fn check_hypotheses(law: &DampingLaw, G: &GFunction, sample_count: usize) -> Result<HypothesisReport> {
    if sample_count < 100 {
        return Err(invalid("sample_count", format!("must be at least 100, got {sample_count}")));
    }
    let eps = law.epsilon;
    let pos = positive_samples(eps, sample_count);
    let (small, large): (Vec<f64>, Vec<f64>) = pos.iter().partition(|s| **s <= eps);
    let mut symmetric: Vec<f64> = pos.iter().rev().map(|s| -s).collect();
    symmetric.push(0.0);
    symmetric.extend(&pos);

    // fitted defaults
    let ratios: Vec<f64> = large.iter().map(|s| law.g(*s).abs() / s).collect();
    let slopes: Vec<f64> = symmetric.iter().map(|s| law.dg(*s)).collect();
    let fitted = FittedBounds {
        c1: law.bounds.c1.unwrap_or_else(|| ratios.iter().copied().fold(f64::INFINITY, f64::min)),
        c2: law.bounds.c2.unwrap_or_else(|| ratios.iter().copied().fold(0.0, f64::max)),
        tau1: law.bounds.tau1.unwrap_or_else(|| slopes.iter().copied().fold(f64::INFINITY, f64::min)),
        tau2: law.bounds.tau2.unwrap_or_else(|| slopes.iter().copied().fold(0.0, f64::max)),
    };

    let mut conditions = Vec::with_capacity(5);

    let mut w = Worst::new();
    for pair in symmetric.windows(2) {
        let (a, b) = (law.g(pair[0]), law.g(pair[1]));
        w.record(b - a, pair[0], a.abs().max(b.abs()));
    }
    conditions.push(ConditionResult {
        id: COND_MONOTONE.into(),
        description: "g is non-decreasing".into(),
        passed: w.ok,
        worst_margin: w.margin,
        location: w.location,
        note: None,
    });

    let mut w = Worst::new();
    for s in large.iter().flat_map(|s| [*s, -*s]) {
        let gs = law.g(s).abs();
        let a = s.abs();
        w.record((gs - fitted.c1 * a).min(fitted.c2 * a - gs), s, gs);
    }
    let positive = fitted.c1 > 0.0 && fitted.c2.is_finite();
    conditions.push(ConditionResult {
        id: COND_LINEAR_GROWTH.into(),
        description: "c1 |s| <= |g(s)| <= c2 |s| for |s| > epsilon".into(),
        passed: w.ok && positive,
        worst_margin: w.margin,
        location: w.location,
        note: (!positive).then(|| format!("c1 = {} must be positive", fitted.c1)),
    });

    let mut w = Worst::new();
    let mut note = None;
    for s in small.iter().flat_map(|s| [*s, -*s]) {
        let gs = law.g(s);
        let lhs = s * s + gs * gs;
        match G.inverse(s * gs) {
            Ok(rhs) => w.record((rhs - lhs) / lhs, s, 1.0),
            Err(e) => {
                w.record(f64::NEG_INFINITY, s, 1.0);
                note.get_or_insert_with(|| e.to_string());
            }
        }
    }
    conditions.push(ConditionResult {
        id: COND_G_COMPARISON.into(),
        description: "s^2 + g(s)^2 <= G^-1(s g(s)) for |s| <= epsilon (relative margin)".into(),
        passed: w.ok,
        worst_margin: w.margin,
        location: w.location,
        note,
    });

    let mut w = Worst::new();
    for (s, d) in symmetric.iter().zip(&slopes) {
        w.record((d - fitted.tau1).min(fitted.tau2 - d), *s, d.abs());
    }
    let positive = fitted.tau1 > 0.0 && fitted.tau2.is_finite();
    conditions.push(ConditionResult {
        id: COND_SLOPE_BOUNDS.into(),
        description: "tau1 <= g'(s) <= tau2 for all s".into(),
        passed: w.ok && positive,
        worst_margin: w.margin,
        location: w.location,
        note: (!positive).then(|| {
            format!("fitted slope bounds [{}, {}] must be positive and finite", fitted.tau1, fitted.tau2)
        }),
    });

    let mut w = Worst::new();
    let mut grid = vec![0.0];
    grid.extend(&pos);
    let divided: Vec<f64> = grid
        .windows(2)
        .map(|p| (law.g(p[1]) - law.g(p[0])) / (p[1] - p[0]))
        .collect();
    for (i, d) in divided.windows(2).enumerate() {
        w.record(d[1] - d[0], grid[i + 1], d[0].abs().max(d[1].abs()));
    }
    conditions.push(ConditionResult {
        id: COND_CONVEX.into(),
        description: "g is convex on [0, inf)".into(),
        passed: w.ok,
        worst_margin: w.margin,
        location: w.location,
        note: None,
    });

    Ok(HypothesisReport {
        all_passed: conditions.iter().all(|c| c.passed),
        bounds: fitted,
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn power_log_values() {
        let g = make_power_log(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(g.g(0.3), 0.3);
        let g = make_power_log(2.0, 0.0, 0.5).unwrap();
        assert_relative_eq!(g.g(0.25), 0.0625);
        let g = make_power_log(1.0, 1.0, (-1f64).exp()).unwrap();
        assert_relative_eq!(g.g(0.1), 0.230_258_509_299_404_6, max_relative = 1e-14);
    }

    #[test]
    fn power_log_slope_matches_finite_differences() {
        let g = make_power_log(2.5, 1.5, 0.1).unwrap();
        for s in [1e-4, 3e-3, 0.05, 0.099] {
            let h = 1e-6 * s;
            let fd = (g.g(s + h) - g.g(s - h)) / (2.0 * h);
            assert_relative_eq!(g.dg(s), fd, max_relative = 1e-6);
        }
        // tangent continuation past ε
        assert_relative_eq!(g.dg(0.5), g.dg(0.1));
        assert_relative_eq!(g.g(0.3), g.g(0.1) + 0.2 * g.dg(0.1), max_relative = 1e-14);
    }

    #[test]
    fn rejects_decreasing_or_bad_parameters() {
        assert!(make_power_log(0.5, 0.0, 0.5).is_err());
        assert!(make_power_log(1.0, 1.0, 0.5).is_err()); // -ln 0.5 < 1
        assert!(make_power_log(1.0, 1.0, 1.0).is_err());
        assert!(make_power_log(2.0, 0.0, 0.0).is_err());
        assert!(make_power_log(2.0, 0.0, 3.0).is_ok());
        assert!(make_linear(0.0, 1.0).is_err());
        assert!(make_table(vec![(0.0, 0.0)], 1.0).is_err());
        assert!(make_table(vec![(0.1, 0.0), (1.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn table_law_interpolates() {
        let g = make_table(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 3.0)], 1.0).unwrap();
        assert_relative_eq!(g.g(0.5), 0.5);
        assert_relative_eq!(g.g(1.5), 2.0);
        assert_relative_eq!(g.g(3.0), 5.0);
        assert_relative_eq!(g.g(-1.5), -2.0);
        assert_relative_eq!(g.dg(1.5), 2.0);
        assert!(matches!(make_G(&g, 1.0), Err(Error::GRequired(_))));
    }

    #[test]
    fn comparison_function_examples() {
        let lin = make_G(&make_power_log(1.0, 0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!(lin.is_linear());
        assert_relative_eq!(lin.value(0.4).unwrap(), 0.4);
        assert_relative_eq!(lin.derivative(0.4).unwrap(), 1.0);

        let sq = make_G(&make_power_log(3.0, 0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(sq.value(0.3).unwrap(), 0.09, max_relative = 1e-14);
        assert_relative_eq!(sq.derivative(0.2).unwrap(), 0.4, max_relative = 1e-14);

        let pl = make_G(&make_power_log(1.0, 1.0, (-1f64).exp()).unwrap(), 1.0).unwrap();
        assert_relative_eq!(pl.value(0.01).unwrap(), 0.023_025_850_929_940_46, max_relative = 1e-14);
        assert!(pl.value(0.5).is_err());
    }

    #[test]
    fn g_derivative_matches_finite_differences() {
        let gf = make_G(&make_power_log(2.0, 0.7, 0.2).unwrap(), 1.3).unwrap();
        for s in [1e-5, 1e-3, 0.01, 0.039] {
            let h = 1e-6 * s;
            let fd = (gf.value(s + h).unwrap() - gf.value(s - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(gf.derivative(s).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn conjugate_of_square() {
        let sq = make_G(&make_power_log(3.0, 0.0, 1.0).unwrap(), 1.0).unwrap();
        assert_relative_eq!(sq.legendre_conjugate(1.0).unwrap(), 0.25, max_relative = 1e-12);
        assert_eq!(sq.legendre_conjugate(0.0).unwrap(), 0.0);
        // equality case of Young's inequality
        let (s, t) = (1.0, 0.5);
        assert!((s * t - (sq.legendre_conjugate(s).unwrap() + sq.value(t).unwrap())).abs() < 1e-12);
        let lin = GFunction::Linear { scale: 1.0 };
        assert!(lin.legendre_conjugate(0.5).is_err());
        assert!(sq.legendre_conjugate(-1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let lin = GFunction::Linear { scale: 2.0 };
        assert_eq!(phi(&lin, 0.3, 0.7).unwrap(), 0.7);
        let sq = GFunction::PowerLog { p: 3.0, q: 0.0, scale: 1.0, s_max: f64::INFINITY };
        assert_relative_eq!(phi(&sq, 1.0, 0.5).unwrap(), 0.5, max_relative = 1e-14);
        assert_eq!(phi(&sq, 1.0, 0.0).unwrap(), 0.0);
        let bounded = GFunction::PowerLog { p: 2.0, q: 1.0, scale: 1.0, s_max: 0.01 };
        assert!(phi(&bounded, 1.0, 0.5).is_err());
        assert!(phi(&bounded, 0.01, 0.5).is_ok());
    }

    #[test]
    fn linear_law_passes_all_conditions() {
        let law = make_linear(1.0, 1.0).unwrap().with_bounds(DampingBounds {
            c1: Some(1.0),
            c2: Some(1.0),
            tau1: Some(1.0),
            tau2: Some(1.0),
        });
        let report = check_hypotheses(&law, &GFunction::Linear { scale: 0.5 }, 200).unwrap();
        assert!(report.all_passed, "{report:#?}");
    }

    #[test]
    fn quadratic_law_fails_slope_bounds() {
        let law = make_power_log(2.0, 0.0, 1.0).unwrap();
        let gf = make_G(&law, 1.0).unwrap();
        let report = check_hypotheses(&law, &gf, 200).unwrap();
        assert!(!report.all_passed);
        let c = report.condition(COND_SLOPE_BOUNDS).unwrap();
        assert!(!c.passed);
        assert_eq!(report.bounds.tau1, 0.0);
    }

    #[test]
    fn growth_bound_failure_margin_is_minus_s() {
        let law = make_linear(1.0, 1.0)
            .unwrap()
            .with_bounds(DampingBounds { c1: Some(2.0), ..Default::default() });
        let report = check_hypotheses(&law, &GFunction::Linear { scale: 0.5 }, 100).unwrap();
        let c = report.condition(COND_LINEAR_GROWTH).unwrap();
        assert!(!c.passed);
        let at = c.location.unwrap();
        assert_relative_eq!(c.worst_margin, -at.abs(), max_relative = 1e-12);
        assert!(check_hypotheses(&law, &GFunction::Linear { scale: 0.5 }, 99).is_err());
    }

    #[test]
    fn concave_power_log_fails_convexity() {
        let law = make_power_log(1.0, 1.0, 0.3).unwrap();
        let gf = make_G(&law, 1.0).unwrap();
        let report = check_hypotheses(&law, &gf, 150).unwrap();
        assert!(!report.condition(COND_CONVEX).unwrap().passed);
    }

    #[test]
    fn report_serializes() {
        let law = make_linear(1.0, 1.0).unwrap();
        let report = check_hypotheses(&law, &GFunction::Linear { scale: 0.5 }, 100).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["conditions"].as_array().unwrap().len(), 5);
        assert!(json["conditions"][0]["id"].is_string());
    }

    proptest! {
        #[test]
        fn odd_and_dissipative(s in -50.0f64..50.0, p in 1.0f64..4.0, q in -2.0f64..2.0) {
            let law = make_power_log(p, q, 0.05).unwrap();
            prop_assert_eq!(law.g(-s), -law.g(s));
            prop_assert!(s * law.g(s) >= 0.0);
        }

        #[test]
        fn young_inequality(s in 0.0f64..5.0, t in 0.0f64..5.0) {
            let sq = GFunction::PowerLog { p: 3.0, q: 0.0, scale: 1.0, s_max: f64::INFINITY };
            prop_assert!(s * t <= sq.legendre_conjugate(s).unwrap() + sq.value(t).unwrap() + 1e-10);
        }

        #[test]
        fn derivative_inverse_consistency(y in 1e-6f64..10.0, p in 1.5f64..4.0) {
            let gf = GFunction::PowerLog { p, q: 0.0, scale: 1.0, s_max: f64::INFINITY };
            let x = gf.derivative_inverse(y).unwrap();
            prop_assert!((gf.derivative(x).unwrap() - y).abs() <= 1e-10 * y.max(1.0));
        }

        #[test]
        fn conjugate_bound_at_phi(s in 1e-6f64..1.0) {
            let eps0 = 0.01;
            let gf = GFunction::PowerLog { p: 3.0, q: 0.0, scale: 1.0, s_max: f64::INFINITY };
            let ph = Phi::new(gf.clone(), eps0).unwrap();
            let lhs = gf.legendre_conjugate(ph.eval(s).unwrap() / s).unwrap();
            prop_assert!(lhs <= eps0 * ph.eval(s).unwrap() + 1e-10);
        }
    }
}
