//! Galerkin ODE system for the coupled plate/wave equations
//!
//! ```text
//! u₁'' + Δ²u₁ − a Δu₂ − g₁(Δu₁') = 0
//! u₂'' − Δu₂  − a Δu₁ − g₂(Δu₂') = 0
//! ```
//!
//! in the sine basis, written in velocity form `(u, v)`. Linear operators
//! act mode-wise; products with `a(x)` and the damping `g(Δv)` are formed
//! on the oversampled grid and projected back with the discrete sine
//! transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::damping::DampingLaw;
use crate::energy::{EnergySample, EnergyTrace};
use crate::error::{invalid, Error, Result};
use crate::spectral::{BasisParams, GridField, ModeBasis, SpectralField};

/// Coefficient magnitude treated as a blow-up.
const DIVERGENCE_LIMIT: f64 = 1e150;

/// Grid size used to project initial profiles (aliasing below 1e-8 for
/// profiles with `k⁻³` coefficient decay).
const PROJECTION_POINTS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSpec {
    Constant(f64),
    /// `(x, a(x))` nodes, linearly interpolated and held constant outside.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    grid_values: Vec<f64>,
    sup_norm: f64,
    grad_sup_norm: f64,
    admissible: bool,
    constant: Option<f64>,
}

impl CouplingProfile {
    pub fn constant(basis: &ModeBasis, a: f64) -> Result<Self> {
        let mut p = Self::from_values(basis, vec![a; basis.grid_len()])?;
        p.constant = Some(a);
        p.grad_sup_norm = 0.0;
        Ok(p)
    }

    pub fn from_fn(basis: &ModeBasis, a: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_values(basis, basis.grid_points().iter().map(|x| a(*x)).collect())
    }

    pub fn from_table(basis: &ModeBasis, points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("coupling", "table needs at least one point"));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("coupling", "table abscissae must be strictly increasing"));
        }
        Self::from_fn(basis, |x| interpolate(points, x))
    }

    pub fn from_spec(basis: &ModeBasis, spec: &CouplingSpec) -> Result<Self> {
        match spec {
            CouplingSpec::Constant(a) => Self::constant(basis, *a),
            CouplingSpec::Table(points) => Self::from_table(basis, points),
        }
    }

    fn from_values(basis: &ModeBasis, grid_values: Vec<f64>) -> Result<Self> {
        if grid_values.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("coupling coefficient"));
        }
        if let Some(a) = grid_values.iter().find(|a| **a < 0.0) {
            return Err(invalid("coupling", format!("a(x) must be nonnegative, found {a}")));
        }
        let sup_norm = grid_values.iter().copied().fold(0.0, f64::max);
        // one-sided differences including the zero-extension-free endpoints
        let h = basis.grid_weight();
        let grad_sup_norm = grid_values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / h).abs())
            .fold(0.0, f64::max);
        let threshold = crate::energy::admissibility_threshold(basis);
        let uniform = grid_values.windows(2).all(|w| w[0] == w[1]);
        Ok(CouplingProfile {
            constant: uniform.then(|| grid_values.first().copied().unwrap_or(0.0)),
            admissible: sup_norm < threshold,
            grid_values,
            sup_norm,
            grad_sup_norm,
        })
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn grad_sup_norm(&self) -> f64 {
        self.grad_sup_norm
    }

    pub fn admissible(&self) -> bool {
        self.admissible
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// `P[a f]` for a field given by its coefficients.
    fn project_product(&self, basis: &ModeBasis, f: &SpectralField) -> SpectralField {
        if let Some(a) = self.constant {
            return f.scaled(a);
        }
        let g = basis.synthesize(f).expect("sized to basis");
        let prod = g.0.iter().zip(&self.grid_values).map(|(x, a)| x * a).collect();
        basis.analyze(&GridField(prod)).expect("sized to basis")
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|(px, _)| *px <= x) - 1;
    let (x0, y0) = points[i];
    let (x1, y1) = points[i + 1];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub u1: SpectralField,
    pub u2: SpectralField,
    pub v1: SpectralField,
    pub v2: SpectralField,
}

/// Time derivative of a [`SimState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateRate {
    pub du1: SpectralField,
    pub du2: SpectralField,
    pub dv1: SpectralField,
    pub dv2: SpectralField,
}

impl SimState {
    pub fn zeros(n: usize) -> Self {
        SimState {
            t: 0.0,
            u1: SpectralField::zeros(n),
            u2: SpectralField::zeros(n),
            v1: SpectralField::zeros(n),
            v2: SpectralField::zeros(n),
        }
    }

    pub fn fields(&self) -> [&SpectralField; 4] {
        [&self.u1, &self.u2, &self.v1, &self.v2]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    fn max_abs(&self) -> f64 {
        self.fields()
            .iter()
            .flat_map(|f| f.0.iter())
            .fold(0.0, |m: f64, c| m.max(c.abs()))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        SimState {
            t: self.t,
            u1: self.u1.scaled(alpha),
            u2: self.u2.scaled(alpha),
            v1: self.v1.scaled(alpha),
            v2: self.v2.scaled(alpha),
        }
    }

    /// Field-wise sum; the time of `self` is kept.
    pub fn plus(&self, other: &SimState) -> Self {
        SimState {
            t: self.t,
            u1: self.u1.add_scaled(1.0, &other.u1),
            u2: self.u2.add_scaled(1.0, &other.u2),
            v1: self.v1.add_scaled(1.0, &other.v1),
            v2: self.v2.add_scaled(1.0, &other.v2),
        }
    }

    fn advanced(&self, h: f64, rate: &StateRate) -> Self {
        SimState {
            t: self.t + h,
            u1: self.u1.add_scaled(h, &rate.du1),
            u2: self.u2.add_scaled(h, &rate.du2),
            v1: self.v1.add_scaled(h, &rate.dv1),
            v2: self.v2.add_scaled(h, &rate.dv2),
        }
    }
}

impl StateRate {
    fn combine(parts: &[(f64, &StateRate)]) -> StateRate {
        let n = parts[0].1.du1.len();
        let mut out = StateRate {
            du1: SpectralField::zeros(n),
            du2: SpectralField::zeros(n),
            dv1: SpectralField::zeros(n),
            dv2: SpectralField::zeros(n),
        };
        for (w, r) in parts {
            out.du1 = out.du1.add_scaled(*w, &r.du1);
            out.du2 = out.du2.add_scaled(*w, &r.du2);
            out.dv1 = out.dv1.add_scaled(*w, &r.dv1);
            out.dv2 = out.dv2.add_scaled(*w, &r.dv2);
        }
        out
    }
}

/// `P[g(Δv)]`
fn damping_term(basis: &ModeBasis, law: &DampingLaw, v: &SpectralField) -> SpectralField {
    let lap = basis.synthesize(&basis.laplacian(v)).expect("sized to basis");
    let g = lap.0.iter().map(|s| law.g(*s)).collect();
    basis.analyze(&GridField(g)).expect("sized to basis")
}

/// Coupling and damping forces on the velocities.
fn forcing(
    state: &SimState,
    coupling: &CouplingProfile,
    g1: Option<&DampingLaw>,
    g2: Option<&DampingLaw>,
    basis: &ModeBasis,
) -> (SpectralField, SpectralField) {
    let n = basis.modes();
    let mut f1 = SpectralField::zeros(n);
    let mut f2 = SpectralField::zeros(n);
    if !coupling.is_zero() {
        f1 = coupling.project_product(basis, &basis.laplacian(&state.u2));
        f2 = coupling.project_product(basis, &basis.laplacian(&state.u1));
    }
    if let Some(g) = g1 {
        f1 = f1.add_scaled(1.0, &damping_term(basis, g, &state.v1));
    }
    if let Some(g) = g2 {
        f2 = f2.add_scaled(1.0, &damping_term(basis, g, &state.v2));
    }
    (f1, f2)
}

/// Right-hand side of the Galerkin system in coefficient space.
pub fn rhs(
    state: &SimState,
    coupling: &CouplingProfile,
    g1: Option<&DampingLaw>,
    g2: Option<&DampingLaw>,
    basis: &ModeBasis,
) -> Result<StateRate> {
    let (f1, f2) = forcing(state, coupling, g1, g2, basis);
    let dv1 = basis.scale_by_eigenvalues(&state.u1, 2).scaled(-1.0).add_scaled(1.0, &f1);
    let dv2 = basis.scale_by_eigenvalues(&state.u2, 1).scaled(-1.0).add_scaled(1.0, &f2);
    let rate = StateRate {
        du1: state.v1.clone(),
        du2: state.v2.clone(),
        dv1,
        dv2,
    };
    if ![&rate.dv1, &rate.dv2].iter().all(|f| f.is_finite()) {
        return Err(Error::Diverged { t: state.t });
    }
    Ok(rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    /// Strang splitting: exact linear half-steps around an explicit
    /// midpoint step of coupling plus damping.
    Splitting,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Rk4 => "rk4",
            Integrator::Splitting => "splitting",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
#[serde(deny_unknown_fields)]
pub enum Profile {
    /// `amplitude * sin(mode π x / L)`
    Sine { mode: usize, amplitude: f64 },
    /// `amplitude * x (L - x)`
    Parabola { amplitude: f64 },
    /// Piecewise-linear through `(x, value)` nodes.
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldInit {
    #[default]
    Zero,
    /// Mode coefficients; shorter lists are zero-padded.
    Modes(Vec<f64>),
    Profile(Profile),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub u1: FieldInit,
    #[serde(default)]
    pub u2: FieldInit,
    #[serde(default)]
    pub v1: FieldInit,
    #[serde(default)]
    pub v2: FieldInit,
}

/// N-mode orthogonal projection of an initial profile.
pub fn project_initial(basis: &ModeBasis, init: &FieldInit) -> Result<SpectralField> {
    let n = basis.modes();
    let length = basis.length();
    match init {
        FieldInit::Zero => Ok(SpectralField::zeros(n)),
        FieldInit::Modes(c) => {
            if c.len() > n {
                return Err(Error::SizeMismatch { expected: n, actual: c.len() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial mode coefficients"));
            }
            let mut coeffs = c.clone();
            coeffs.resize(n, 0.0);
            Ok(SpectralField(coeffs))
        }
        FieldInit::Profile(Profile::Sine { mode, amplitude }) => {
            if *mode == 0 || *mode > n {
                return Err(invalid("mode", format!("must be in 1..={n}, got {mode}")));
            }
            if !amplitude.is_finite() {
                return Err(Error::NonFinite("initial profile"));
            }
            Ok(SpectralField::mode(n, *mode, *amplitude))
        }
        FieldInit::Profile(profile) => {
            let f = |x: f64| match profile {
                Profile::Parabola { amplitude } => amplitude * x * (length - x),
                Profile::Table { points } => interpolate(points, x),
                Profile::Sine { .. } => unreachable!(),
            };
            if let Profile::Table { points } = profile {
                if points.is_empty() || points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(invalid("profile", "table abscissae must be strictly increasing"));
                }
            }
            let oversample = PROJECTION_POINTS.div_ceil(n).max(crate::spectral::MIN_OVERSAMPLE);
            let fine = ModeBasis::new(length, n, oversample)?;
            let values: Vec<f64> = fine.grid_points().iter().map(|x| f(*x)).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial profile"));
            }
            fine.analyze(&GridField(values))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub basis: BasisParams,
    pub coupling: CouplingSpec,
    pub g1: Option<DampingLaw>,
    pub g2: Option<DampingLaw>,
    pub initial: InitialData,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub sample_stride: usize,
}

impl SimConfig {
    /// Largest time step admitted by the integrator's stability guard.
    pub fn dt_limit(&self, basis: &ModeBasis) -> f64 {
        let lambda_n = *basis.eigenvalues().last().expect("at least one mode");
        let tau2 = [&self.g1, &self.g2]
            .iter()
            .filter_map(|g| g.as_ref().map(|law| law.slope_sup()))
            .fold(0.0, f64::max);
        match self.integrator {
            Integrator::Rk4 => 2.5 / (lambda_n * tau2.max(1.0)),
            Integrator::Splitting if tau2 > 0.0 => 0.5 / (tau2 * lambda_n),
            Integrator::Splitting => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<ModeBasis> {
        let basis = ModeBasis::from_params(&self.basis)?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be at least 1"));
        }
        let limit = self.dt_limit(&basis);
        if self.dt > limit {
            return Err(Error::StabilityGuard {
                integrator: self.integrator.name(),
                dt: self.dt,
                limit,
            });
        }
        Ok(basis)
    }

    /// Stable FNV-1a hash of the serialized configuration.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// A validated configuration ready to step.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub basis: ModeBasis,
    pub coupling: CouplingProfile,
    pub g1: Option<DampingLaw>,
    pub g2: Option<DampingLaw>,
    pub dt: f64,
    pub integrator: Integrator,
}

impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let basis = config.validate()?;
        let coupling = CouplingProfile::from_spec(&basis, &config.coupling)?;
        Ok(Simulator {
            basis,
            coupling,
            g1: config.g1.clone(),
            g2: config.g2.clone(),
            dt: config.dt,
            integrator: config.integrator,
        })
    }

    pub fn initial_state(&self, init: &InitialData) -> Result<SimState> {
        Ok(SimState {
            t: 0.0,
            u1: project_initial(&self.basis, &init.u1)?,
            u2: project_initial(&self.basis, &init.u2)?,
            v1: project_initial(&self.basis, &init.v1)?,
            v2: project_initial(&self.basis, &init.v2)?,
        })
    }

    pub fn rhs(&self, state: &SimState) -> Result<StateRate> {
        rhs(state, &self.coupling, self.g1.as_ref(), self.g2.as_ref(), &self.basis)
    }

    pub fn measure(&self, state: &SimState) -> EnergySample {
        EnergySample::measure(state, &self.coupling, self.g1.as_ref(), self.g2.as_ref(), &self.basis)
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        self.step_by(state, self.dt)
    }

    pub fn step_by(&self, state: &SimState, h: f64) -> Result<SimState> {
        let next = match self.integrator {
            Integrator::Rk4 => self.rk4(state, h)?,
            Integrator::Splitting => self.strang(state, h)?,
        };
        if !next.is_finite() || next.max_abs() > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { t: next.t });
        }
        Ok(next)
    }

    fn rk4(&self, s: &SimState, h: f64) -> Result<SimState> {
        let k1 = self.rhs(s)?;
        let k2 = self.rhs(&s.advanced(0.5 * h, &k1))?;
        let k3 = self.rhs(&s.advanced(0.5 * h, &k2))?;
        let k4 = self.rhs(&s.advanced(h, &k3))?;
        let avg = StateRate::combine(&[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]);
        Ok(s.advanced(h, &avg))
    }

    fn strang(&self, s: &SimState, h: f64) -> Result<SimState> {
        let a = self.rotate(s, 0.5 * h);
        let b = self.forced_midpoint(&a, h)?;
        let mut c = self.rotate(&b, 0.5 * h);
        c.t = s.t + h;
        Ok(c)
    }

    // exact flow of u₁'' = −λ²u₁, u₂'' = −λu₂ over time h
    fn rotate(&self, s: &SimState, h: f64) -> SimState {
        let mut out = s.clone();
        for (k, lam) in self.basis.eigenvalues().iter().enumerate() {
            for (freq, u, v) in [
                (*lam, &mut out.u1.0[k], &mut out.v1.0[k]),
                (lam.sqrt(), &mut out.u2.0[k], &mut out.v2.0[k]),
            ] {
                let (sn, cs) = (freq * h).sin_cos();
                let (u0, v0) = (*u, *v);
                *u = u0 * cs + v0 * sn / freq;
                *v = -u0 * freq * sn + v0 * cs;
            }
        }
        out.t = s.t + h;
        out
    }

    fn forced_midpoint(&self, s: &SimState, h: f64) -> Result<SimState> {
        let force = |st: &SimState| {
            forcing(st, &self.coupling, self.g1.as_ref(), self.g2.as_ref(), &self.basis)
        };
        let (f1, f2) = force(s);
        let mut mid = s.clone();
        mid.v1 = s.v1.add_scaled(0.5 * h, &f1);
        mid.v2 = s.v2.add_scaled(0.5 * h, &f2);
        let (f1, f2) = force(&mid);
        let mut out = s.clone();
        out.v1 = s.v1.add_scaled(h, &f1);
        out.v2 = s.v2.add_scaled(h, &f2);
        Ok(out)
    }

    /// Steps of `dt` reaching exactly `t_end` (the last one may be shorter).
    pub fn schedule(&self, t_end: f64) -> Vec<f64> {
        if t_end <= 0.0 {
            return Vec::new();
        }
        let n = ((t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let last = t_end - (n - 1) as f64 * self.dt;
        let mut steps = vec![self.dt; n - 1];
        steps.push(last);
        steps
    }

    /// `(E(t+h) − E(t))/h − dissipation(t + h/2)` for every step of a
    /// trajectory; the midpoint state comes from a half step from `t`.
    pub fn midpoint_dissipation_residuals(&self, initial: &SimState, t_end: f64) -> Result<Vec<DissipationResidual>> {
        let mut state = initial.clone();
        let mut e = self.measure(&state).energy;
        let mut out = Vec::new();
        for h in self.schedule(t_end) {
            let mid = self.step_by(&state, 0.5 * h)?;
            let d_mid = self.measure(&mid).dissipation;
            let next = self.step_by(&state, h)?;
            let e_next = self.measure(&next).energy;
            out.push(DissipationResidual {
                t: state.t,
                rate: (e_next - e) / h,
                dissipation: d_mid,
            });
            state = next;
            e = e_next;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationResidual {
    pub t: f64,
    /// `(E(t+h) − E(t))/h`
    pub rate: f64,
    pub dissipation: f64,
}

impl DissipationResidual {
    pub fn residual(&self) -> f64 {
        (self.rate - self.dissipation).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub states: Vec<SimState>,
    pub trace: EnergyTrace,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct RunFailure {
    /// Samples collected before the failure, when the run had started.
    pub partial: Option<RunOutput>,
    pub error: Error,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        RunFailure { partial: None, error }
    }
}

/// Integrates to `t_end`, sampling every `sample_stride` steps and always
/// at the final time.
pub fn run(config: &SimConfig) -> std::result::Result<RunOutput, RunFailure> {
    let sim = Simulator::new(config)?;
    let mut state = sim.initial_state(&config.initial)?;
    let mut out = RunOutput {
        states: vec![state.clone()],
        trace: EnergyTrace {
            samples: vec![sim.measure(&state)],
            fingerprint: config.fingerprint(),
        },
    };
    let steps = sim.schedule(config.t_end);
    let total = steps.len();
    for (i, h) in steps.into_iter().enumerate() {
        let mut next = match sim.step_by(&state, h) {
            Ok(s) => s,
            Err(error) => {
                return Err(RunFailure {
                    partial: Some(out),
                    error,
                })
            }
        };
        // t from the step count, not accumulated sums
        next.t = if i + 1 == total { config.t_end } else { (i + 1) as f64 * sim.dt };
        state = next;
        if (i + 1) % config.sample_stride == 0 || i + 1 == total {
            out.trace.samples.push(sim.measure(&state));
            out.states.push(state.clone());
        }
    }
    Ok(out)
}

/// `(‖∇Δ δu₁‖² + ‖Δ δu₂‖²)^{1/2}`, the distance of the position pairs in
/// the natural norm of the plate/wave pair.
pub fn position_distance(basis: &ModeBasis, a: &SimState, b: &SimState) -> f64 {
    let d1 = a.u1.add_scaled(-1.0, &b.u1);
    let d2 = a.u2.add_scaled(-1.0, &b.u2);
    (basis.sobolev_seminorm_sq(&d1, 3).expect("sized") + basis.sobolev_seminorm_sq(&d2, 2).expect("sized")).sqrt()
}

/// Fundamental angular frequency of the plate component, `π²/L²`.
pub fn plate_frequency(basis: &ModeBasis) -> f64 {
    (PI / basis.length()).powi(2)
}
