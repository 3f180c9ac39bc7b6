//! Decay envelopes `E(t) ≤ ψ⁻¹(h(t) + ψ(E(0)))` and their weighted
//! generalisation, plus the asymptotic rate table of the power-log family.
//!
//! Energies are normalised by `max(E0, 1)` before `ψ` is applied, since
//! `ψ(t) = ∫_t^1 ds / (ω φ(s))` is only defined for `t ≤ 1`; envelope
//! values are scaled back.

use serde::{Deserialize, Serialize};

use crate::damping::Phi;
use crate::error::{invalid, Error, Result};
use crate::numerics::{bisect_monotone, integrate, BisectOptions, QuadOptions};

/// ψ-table nodes per decade of `s`.
const NODES_PER_DECADE: f64 = 8.0;
const TABLE_FLOOR: f64 = 1e-300;

fn quad() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_intervals: 400,
    }
}

fn tight() -> BisectOptions {
    BisectOptions {
        abs_tol: 1e-16,
        rel_tol: 1e-15,
        max_iter: 300,
    }
}

#[derive(Debug, Clone)]
pub struct DecayEnvelope {
    phi: Phi,
    omega: f64,
    lambda: f64,
    e0: f64,
    scale: f64,
    // decreasing nodes 1 = s₀ > s₁ > … and ψ at each node
    nodes: Vec<f64>,
    psi_nodes: Vec<f64>,
}

impl DecayEnvelope {
    pub fn new(phi: Phi, omega: f64, e0: f64) -> Result<Self> {
        Self::with_lambda(phi, omega, e0, 0.0)
    }

    pub fn with_lambda(phi: Phi, omega: f64, e0: f64, lambda: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(invalid("omega", format!("must be positive, got {omega}")));
        }
        if !(e0 > 0.0) || !e0.is_finite() {
            return Err(invalid("E0", format!("must be positive, got {e0}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda", format!("must be nonnegative, got {lambda}")));
        }
        let phi_one = phi.eval(1.0)?;
        if !(phi_one > 0.0) {
            return Err(invalid("phi", "φ(1) must be positive"));
        }
        let mut env = DecayEnvelope {
            phi,
            omega,
            lambda,
            scale: e0.max(1.0),
            e0: e0 / e0.max(1.0),
            nodes: vec![1.0],
            psi_nodes: vec![0.0],
        };
        env.build_table()?;
        Ok(env)
    }

    fn build_table(&mut self) -> Result<()> {
        let ratio = 10f64.powf(-1.0 / NODES_PER_DECADE);
        let mut k = 1;
        loop {
            let s_prev = *self.nodes.last().expect("table starts at 1");
            let s = 10f64.powf(-(k as f64) / NODES_PER_DECADE);
            if s < TABLE_FLOOR || !(s < s_prev) {
                break;
            }
            debug_assert!((s / s_prev - ratio).abs() < 1e-9);
            let piece = match self.integral(s, s_prev) {
                Ok(v) if v.is_finite() => v,
                _ => break,
            };
            let total = self.psi_nodes.last().expect("nonempty") + piece;
            if !total.is_finite() || total > 1e300 {
                break;
            }
            self.nodes.push(s);
            self.psi_nodes.push(total);
            k += 1;
        }
        if self.nodes.len() < 2 {
            return Err(Error::Quadrature {
                a: self.nodes[0] * ratio,
                b: 1.0,
                estimate: f64::NAN,
                error: f64::NAN,
            });
        }
        Ok(())
    }

    fn rate(&self, s: f64) -> Result<f64> {
        let v = self.omega * self.phi.eval(s)?;
        if !(v > 0.0) {
            return Err(Error::OutOfDomain {
                what: "ω φ(s) must be positive",
                value: s,
                lo: f64::MIN_POSITIVE,
                hi: 1.0,
            });
        }
        Ok(v)
    }

    // ∫_a^b ds / (ω φ(s))
    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        let failure = std::cell::Cell::new(None);
        let r = integrate(
            |s| match self.rate(s) {
                Ok(v) => 1.0 / v,
                Err(e) => {
                    let first = failure.take().unwrap_or(e);
                    failure.set(Some(first));
                    f64::NAN
                }
            },
            a,
            b,
            quad(),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.value)
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Initial energy as supplied.
    pub fn initial_energy(&self) -> f64 {
        self.e0 * self.scale
    }

    /// Normalisation factor `max(E0, 1)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Smallest `t` at which `ψ` is tabulated.
    pub fn psi_domain_floor(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }

    /// Largest `y` accepted by [`psi_inv`](Self::psi_inv).
    pub fn psi_range(&self) -> f64 {
        *self.psi_nodes.last().expect("nonempty")
    }

    /// `ψ(t) = ∫_t^1 ds / (ω φ(s))`.
    pub fn psi(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || t > 1.0 {
            return Err(Error::OutOfDomain {
                what: "ψ",
                value: t,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if t == 1.0 {
            return Ok(0.0);
        }
        // nodes[i] ≥ t > nodes[i+1]
        let i = self.nodes.partition_point(|s| *s >= t);
        if t < self.psi_domain_floor() {
            return Err(Error::OutOfDomain {
                what: "ψ (below the resolvable range)",
                value: t,
                lo: self.psi_domain_floor(),
                hi: 1.0,
            });
        }
        let node = self.nodes[i - 1];
        Ok(self.psi_nodes[i - 1] + self.integral(t, node)?)
    }

    /// `ψ⁻¹(y)` for `0 ≤ y ≤ psi_range()`.
    pub fn psi_inv(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || y > self.psi_range() {
            return Err(Error::OutOfDomain {
                what: "ψ⁻¹",
                value: y,
                lo: 0.0,
                hi: self.psi_range(),
            });
        }
        if y == 0.0 {
            return Ok(1.0);
        }
        let i = self.psi_nodes.partition_point(|v| *v < y);
        if self.psi_nodes[i] == y {
            return Ok(self.nodes[i]);
        }
        let (hi, lo) = (self.nodes[i - 1], self.nodes[i]);
        let x = bisect_monotone(|x| self.psi(x.exp()), y, lo.ln(), hi.ln(), tight())?;
        Ok(x.exp())
    }

    /// `S / (ω φ(S))`
    fn lag(&self, s: f64) -> Result<f64> {
        Ok(s / self.rate(s)?)
    }

    /// End of the plateau, `E0 / (ω φ(E0))` in normalised units.
    pub fn plateau_end(&self) -> Result<f64> {
        self.lag(self.e0)
    }

    /// `h⁻¹(h) = h + S/(ω φ(S))` with `S = ψ⁻¹(h + ψ(E0))`.
    pub fn h_inverse(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(invalid("h", format!("must be nonnegative, got {h}")));
        }
        let s = self.psi_inv(h + self.psi(self.e0)?)?;
        Ok(h + self.lag(s)?)
    }

    // time at which the envelope reaches the normalised level S
    fn time_at_level(&self, s: f64, psi_e0: f64) -> Result<f64> {
        Ok(self.psi(s)? - psi_e0 + self.lag(s)?)
    }

    // envelope level S(t) in normalised units, and h(t)
    fn level(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(invalid("t", format!("must be nonnegative, got {t}")));
        }
        if t <= self.plateau_end()? {
            return Ok((self.e0, 0.0));
        }
        let psi_e0 = self.psi(self.e0)?;
        // bracket from the table: the time is decreasing in S
        let start = self.nodes.partition_point(|s| *s >= self.e0);
        let mut upper = self.e0;
        let mut lower = None;
        for &s in &self.nodes[start..] {
            if self.time_at_level(s, psi_e0)? >= t {
                lower = Some(s);
                break;
            }
            upper = s;
        }
        let lower = lower.ok_or(Error::OutOfDomain {
            what: "h (t beyond the tabulated decay)",
            value: t,
            lo: 0.0,
            hi: self.time_at_level(self.psi_domain_floor(), psi_e0)?,
        })?;
        let x = bisect_monotone(|x| self.time_at_level(x.exp(), psi_e0), t, lower.ln(), upper.ln(), tight())?;
        let s = x.exp();
        let h = (self.psi(s)? - psi_e0).max(0.0);
        Ok((s, h))
    }

    /// `h(t)`: zero on the plateau, then the solution of `h⁻¹(h) = t`.
    pub fn h_of_t(&self, t: f64) -> Result<f64> {
        Ok(self.level(t)?.1)
    }

    /// `ψ⁻¹(h(t) + ψ(E0))`, rescaled to the units of `E0`.
    pub fn envelope(&self, t: f64) -> Result<f64> {
        Ok(self.level(t)?.0 * self.scale)
    }

    pub fn sample(&self, times: &[f64]) -> Result<Vec<(f64, f64)>> {
        times.iter().map(|t| Ok((*t, self.envelope(*t)?))).collect()
    }

    /// `D(t) = ∫₀ᵗ e^{λs} ds`
    pub fn d_weight(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            t
        } else {
            (self.lambda * t).exp_m1() / self.lambda
        }
    }

    fn d_weight_inv(&self, y: f64) -> f64 {
        if self.lambda == 0.0 {
            y
        } else {
            (self.lambda * y).ln_1p() / self.lambda
        }
    }

    /// `T₀ = D⁻¹(E0 / (ω φ(E0)))`
    pub fn t0(&self) -> Result<f64> {
        Ok(self.d_weight_inv(self.plateau_end()?))
    }

    /// `K(t) = D(t) + e^{λt} S/(ω φ(S))` with `S = ψ⁻¹(t + ψ(E0))`.
    pub fn k_weight(&self, t: f64) -> Result<f64> {
        let s = self.psi_inv(t + self.psi(self.e0)?)?;
        Ok(self.d_weight(t) + (self.lambda * t).exp() * self.lag(s)?)
    }

    /// `h = K⁻¹ ∘ D` beyond `T₀`, zero before.
    pub fn lemma0_h(&self, t: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            return self.h_of_t(t);
        }
        if t <= self.t0()? {
            return Ok(0.0);
        }
        let target = self.d_weight(t);
        // K(h) ≥ D(h) + …, so h < t
        bisect_monotone(|h| self.k_weight(h), target, 0.0, t, tight())
    }

    /// `d(x) = ∫₀ˣ ω φ(s)/s ds` for λ > 0, `ω φ(x)` for λ = 0.
    pub fn d_fn(&self, x: f64) -> Result<f64> {
        if self.lambda == 0.0 {
            return self.rate(x);
        }
        let omega = self.omega;
        let failure = std::cell::Cell::new(None);
        let r = integrate(
            |s| match self.phi.slope(s) {
                Ok(v) => omega * v,
                Err(e) => {
                    let first = failure.take().unwrap_or(e);
                    failure.set(Some(first));
                    f64::NAN
                }
            },
            0.0,
            x,
            quad(),
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(r?.value)
    }

    fn d_fn_inv(&self, y: f64) -> Result<f64> {
        if self.lambda == 0.0 && self.phi.g.is_linear() {
            return Ok(y / self.omega);
        }
        let mut hi = 1.0;
        while self.d_fn(hi)? < y {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::OutOfDomain {
                    what: "d⁻¹",
                    value: y,
                    lo: 0.0,
                    hi: f64::MAX,
                });
            }
        }
        let lo = if self.lambda == 0.0 { self.psi_domain_floor() } else { 0.0 };
        bisect_monotone(|x| self.d_fn(x), y, lo, hi, tight())
    }

    /// `τ₀`: `T₀` on the plateau and 0 after it.
    pub fn tau0(&self, t: f64) -> Result<f64> {
        let t0 = self.t0()?;
        Ok(if t <= t0 { t0 } else { 0.0 })
    }

    /// `e^{τ₀λ} d⁻¹(e^{λ(t−h)} ω φ(ψ⁻¹(h + ψ(E0))))`, rescaled to the units
    /// of `E0`. Reduces to [`envelope`](Self::envelope) when λ = 0.
    pub fn lemma0_bound(&self, t: f64) -> Result<f64> {
        let h = self.lemma0_h(t)?;
        let s = self.psi_inv(h + self.psi(self.e0)?)?;
        let arg = (self.lambda * (t - h)).exp() * self.rate(s)?;
        let value = (self.tau0(t)? * self.lambda).exp() * self.d_fn_inv(arg)?;
        Ok(value * self.scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBranch {
    Exponential,
    PolyLog,
    StretchedExp,
    DoubleExp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDescriptor {
    pub branch: RateBranch,
    pub p: f64,
    pub q: f64,
    pub exponents: Vec<f64>,
    /// The bound as printed for this branch.
    pub template: String,
    /// The bound with the exponents filled in.
    pub formula: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambiguity: Option<String>,
}

fn num(x: f64) -> String {
    let r = x.round();
    if (x - r).abs() < 1e-12 {
        format!("{r}")
    } else {
        format!("{x}")
    }
}

/// Asymptotic decay rate of the power-log damping family `g(s) = sᵖ(−ln s)^q`.
pub fn asymptotic_rate(p: f64, q: f64) -> Result<RateDescriptor> {
    if !p.is_finite() || !q.is_finite() {
        return Err(Error::NonFinite("(p, q)"));
    }
    let base = |branch, exponents: Vec<f64>, template: &str, formula: String| RateDescriptor {
        branch,
        p,
        q,
        exponents,
        template: template.to_string(),
        formula,
        ambiguity: None,
    };
    if p == 1.0 && q == 0.0 {
        return Ok(base(RateBranch::Exponential, vec![], r"ce^{-\omega t}", "c e^{-ω t}".into()));
    }
    if p > 1.0 {
        let a = 2.0 / (p - 1.0);
        let b = 2.0 * q / (p - 1.0);
        let mut d = base(
            RateBranch::PolyLog,
            vec![a, b],
            r"ct^{-\frac{2}{p-1}}(\ln t)^{-\frac{2q}{p-1}}",
            if q == 0.0 {
                format!("c t^{{-{}}}", num(a))
            } else {
                format!("c t^{{-{}}} (ln t)^{{-{}}}", num(a), num(b))
            },
        );
        if q <= 1.0 {
            d.ambiguity = Some(format!(
                "the branch is labelled \"q>1\" but its exponents depend on p; applied with q = {}",
                num(q)
            ));
        }
        return Ok(d);
    }
    if p == 1.0 && q < 1.0 {
        let e = 1.0 / (1.0 - q);
        return Ok(base(
            RateBranch::StretchedExp,
            vec![e],
            r"ce^{-t^{\frac{1}{1-q}}}",
            format!("c e^{{-t^{{{}}}}}", num(e)),
        ));
    }
    if p == 1.0 && q == 1.0 {
        return Ok(base(RateBranch::DoubleExp, vec![], r"ce^{-e^t}", "c e^{-e^t}".into()));
    }
    Err(Error::UncoveredBranch { p, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::{make_G, make_power_log, GFunction};
    use approx::assert_relative_eq;

    fn square_phi() -> Phi {
        // G(t) = t², ε₀ = 1  ⇒  φ(s) = 2s²
        Phi::new(GFunction::PowerLog { p: 3.0, q: 0.0, scale: 1.0, s_max: f64::INFINITY }, 1.0).unwrap()
    }

    #[test]
    fn psi_examples() {
        let env = DecayEnvelope::new(Phi::identity(), 1.0, 1.0).unwrap();
        assert_relative_eq!(env.psi(0.5).unwrap(), 2f64.ln(), max_relative = 1e-12);
        assert_eq!(env.psi(1.0).unwrap(), 0.0);
        assert_relative_eq!(env.psi(1e-200).unwrap(), 200.0 * 10f64.ln(), max_relative = 1e-11);
        assert!(env.psi(0.0).is_err());
        assert!(env.psi(1.5).is_err());

        let sq = DecayEnvelope::new(square_phi(), 1.0, 1.0).unwrap();
        assert_relative_eq!(sq.psi(0.5).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(sq.psi(1e-3).unwrap(), 0.5 * (1e3 - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn psi_inverse_examples() {
        let env = DecayEnvelope::new(Phi::identity(), 1.0, 1.0).unwrap();
        assert_relative_eq!(env.psi_inv(2f64.ln()).unwrap(), 0.5, max_relative = 1e-12);
        assert_eq!(env.psi_inv(0.0).unwrap(), 1.0);
        assert!(env.psi_inv(-1.0).is_err());
        assert!(env.psi_inv(1e9).is_err());

        let sq = DecayEnvelope::new(square_phi(), 1.0, 1.0).unwrap();
        for y in [0.5, 3.0, 1e4] {
            assert_relative_eq!(sq.psi_inv(y).unwrap(), 1.0 / (2.0 * y + 1.0), max_relative = 1e-11);
        }
    }

    #[test]
    fn h_examples() {
        let env = DecayEnvelope::new(Phi::identity(), 1.0, 1.0).unwrap();
        assert_eq!(env.h_of_t(0.0).unwrap(), 0.0);
        assert_eq!(env.h_of_t(0.7).unwrap(), 0.0);
        for t in [1.5, 3.0, 12.0, 40.0] {
            assert!((env.h_of_t(t).unwrap() - (t - 1.0)).abs() < 1e-9);
            assert!((env.h_inverse(t - 1.0).unwrap() - t).abs() < 1e-9);
        }
        let sq = DecayEnvelope::new(square_phi(), 1.0, 1.0).unwrap();
        assert_relative_eq!(sq.plateau_end().unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(sq.h_of_t(0.5).unwrap(), 0.0);
    }

    #[test]
    fn envelope_examples() {
        let env = DecayEnvelope::new(Phi::identity(), 1.0, 1.0).unwrap();
        assert_eq!(env.envelope(0.0).unwrap(), 1.0);
        assert_eq!(env.envelope(0.9).unwrap(), 1.0);
        for t in [1.0, 2.0, 5.0, 30.0] {
            let exact = (1.0f64 - t).exp();
            assert!((env.envelope(t).unwrap() - exact).abs() < 1e-9 * exact.max(1e-300) + 1e-15);
        }
        let sq = DecayEnvelope::new(square_phi(), 1.0, 1.0).unwrap();
        // h⁻¹(h) = h + 1/(2S) with S = 1/(2h+1) gives h = (t − ½)/2, so the
        // envelope is 1/(t + ½) past the plateau
        for t in [0.5, 1.0, 7.0, 100.0] {
            assert_relative_eq!(sq.envelope(t).unwrap(), 1.0 / (t + 0.5), max_relative = 1e-10);
            assert!((sq.h_of_t(t).unwrap() - (t - 0.5) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn omega_scales_time() {
        // φ(s) = s, ω = 2: envelope E0 e^{1 − ωt} for t ≥ 1/ω
        let env = DecayEnvelope::new(Phi::identity(), 2.0, 1.0).unwrap();
        assert_relative_eq!(env.plateau_end().unwrap(), 0.5);
        for t in [0.5, 1.0, 4.0] {
            assert_relative_eq!(env.envelope(t).unwrap(), (1.0 - 2.0 * t).exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn normalisation_rescales() {
        let env = DecayEnvelope::new(Phi::identity(), 1.0, 40.0).unwrap();
        assert_eq!(env.scale(), 40.0);
        assert_eq!(env.envelope(0.0).unwrap(), 40.0);
        assert_relative_eq!(env.envelope(3.0).unwrap(), 40.0 * (-2.0f64).exp(), max_relative = 1e-10);
        let small = DecayEnvelope::new(Phi::identity(), 1.0, 0.25).unwrap();
        assert_eq!(small.scale(), 1.0);
        assert_eq!(small.envelope(0.5).unwrap(), 0.25);
    }

    #[test]
    fn lemma0_reduces_to_envelope() {
        let sq = DecayEnvelope::new(square_phi(), 1.3, 0.8).unwrap();
        for i in 0..40 {
            let t = 0.25 * i as f64;
            let a = sq.envelope(t).unwrap();
            let b = sq.lemma0_bound(t).unwrap();
            assert!((a - b).abs() <= 1e-8 * a, "t={t}: {a} vs {b}");
        }
        let lin = DecayEnvelope::new(Phi::identity(), 1.0, 1.0).unwrap();
        assert_eq!(lin.d_weight(3.0), 3.0);
        assert_eq!(lin.t0().unwrap(), 1.0);
    }

    #[test]
    fn lemma0_weighted_closed_form() {
        // φ(s)=s, E0=1: T₀ = ln(1+λ)/λ, h = t − T₀, bound (1+λ) e^{T₀ − t}
        let lambda = 0.1;
        let env = DecayEnvelope::with_lambda(Phi::identity(), 1.0, 1.0, lambda).unwrap();
        let t0 = (1.0 + lambda).ln() / lambda;
        assert_relative_eq!(env.t0().unwrap(), t0, max_relative = 1e-14);
        for t in [2.0, 5.0, 10.0] {
            assert!((env.lemma0_h(t).unwrap() - (t - t0)).abs() < 1e-9);
            let exact = (1.0 + lambda) * (t0 - t).exp();
            assert_relative_eq!(env.lemma0_bound(t).unwrap(), exact, max_relative = 1e-8);
        }
        assert_relative_eq!(env.d_fn(0.3).unwrap(), 0.3, max_relative = 1e-13);
        assert_relative_eq!(env.tau0(0.5).unwrap(), t0, max_relative = 1e-14);
        assert_eq!(env.tau0(5.0).unwrap(), 0.0);
    }

    #[test]
    fn power_log_envelope_is_monotone_with_expected_slope() {
        let law = make_power_log(3.0, 0.0, 1.0).unwrap();
        let phi = Phi::new(make_G(&law, 1.0).unwrap(), 0.01).unwrap();
        let env = DecayEnvelope::new(phi, 1.0, 1.0).unwrap();
        let ts: Vec<f64> = (0..200).map(|i| 10f64.powf(-1.0 + 9.0 * i as f64 / 199.0)).collect();
        let v: Vec<f64> = ts.iter().map(|t| env.envelope(*t).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0]));
        // local log-log slope where the envelope is below 1e-4 E0
        let t = 1e9;
        let (a, b) = (env.envelope(t).unwrap(), env.envelope(1.1 * t).unwrap());
        assert!(a < 1e-4);
        let slope = -(b / a).ln() / 1.1f64.ln();
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn rate_table() {
        let r = asymptotic_rate(1.0, 0.0).unwrap();
        assert_eq!(r.branch, RateBranch::Exponential);
        assert_eq!(r.template, r"ce^{-\omega t}");
        let r = asymptotic_rate(3.0, 2.0).unwrap();
        assert_eq!(r.branch, RateBranch::PolyLog);
        assert_eq!(r.exponents, vec![1.0, 2.0]);
        assert_eq!(r.formula, "c t^{-1} (ln t)^{-2}");
        assert!(r.ambiguity.is_none());
        let r = asymptotic_rate(1.0, 0.5).unwrap();
        assert_eq!(r.branch, RateBranch::StretchedExp);
        assert_eq!(r.exponents, vec![2.0]);
        assert_eq!(r.template, r"ce^{-t^{\frac{1}{1-q}}}");
        let r = asymptotic_rate(1.0, 1.0).unwrap();
        assert_eq!(r.template, r"ce^{-e^t}");
        assert!(asymptotic_rate(3.0, 0.0).unwrap().ambiguity.is_some());
        assert!(matches!(asymptotic_rate(1.0, 2.0), Err(Error::UncoveredBranch { .. })));
        assert!(asymptotic_rate(0.5, 0.0).is_err());
    }
}
