//! Energy functional, dissipation rate, coercive lower bound and the
//! admissibility test on the coupling coefficient.
//!
//! Quadratic terms use Parseval; the coupling integral and the dissipation
//! use the same grid quadrature as the Galerkin projection, so the
//! semi-discrete system satisfies `dE/dt = dissipation` exactly.

use serde::{Deserialize, Serialize};

use crate::damping::DampingLaw;
use crate::sim::{CouplingProfile, SimState};
use crate::spectral::{GridField, ModeBasis};

/// The four quadratic terms (each already halved) and the coupling integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub kin1: f64,
    pub kin2: f64,
    pub pot1: f64,
    pub pot2: f64,
    pub coupling: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.kin1 + self.kin2 + self.pot1 + self.pot2 + self.coupling
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub lower_bound: f64,
    pub terms: EnergyTerms,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub samples: Vec<EnergySample>,
    pub fingerprint: String,
}

impl EnergyTrace {
    /// A trace carrying only `(t, E)` pairs, e.g. synthetic data for fits.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let samples = pairs
            .into_iter()
            .map(|(t, e)| EnergySample {
                t,
                energy: e,
                dissipation: 0.0,
                lower_bound: 0.0,
                terms: EnergyTerms {
                    kin1: 0.0,
                    kin2: 0.0,
                    pot1: 0.0,
                    pot2: 0.0,
                    coupling: 0.0,
                },
            })
            .collect();
        EnergyTrace {
            samples,
            fingerprint: String::new(),
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.energy)
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.samples.first().map(|s| s.energy)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
}

fn lap_on_grid(basis: &ModeBasis, f: &crate::spectral::SpectralField) -> GridField {
    basis
        .synthesize(&basis.laplacian(f))
        .expect("state sized to basis")
}

pub fn energy(state: &SimState, coupling: &CouplingProfile, basis: &ModeBasis) -> EnergyTerms {
    let half_norm = |f, r| 0.5 * basis.sobolev_seminorm_sq(f, r).expect("state sized to basis");
    let coupling_term = if coupling.is_zero() {
        0.0
    } else {
        let d1 = lap_on_grid(basis, &state.u1);
        let d2 = lap_on_grid(basis, &state.u2);
        basis.grid_weight()
            * coupling
                .grid_values()
                .iter()
                .zip(d1.values().iter().zip(d2.values()))
                .map(|(a, (x, y))| a * x * y)
                .sum::<f64>()
    };
    EnergyTerms {
        kin1: half_norm(&state.v1, 1),
        kin2: half_norm(&state.v2, 1),
        pot1: half_norm(&state.u1, 3),
        pot2: half_norm(&state.u2, 2),
        coupling: coupling_term,
    }
}

/// `-∫ Δv₁ g₁(Δv₁) + Δv₂ g₂(Δv₂)` by grid quadrature; `None` laws contribute 0.
pub fn dissipation(
    state: &SimState,
    g1: Option<&DampingLaw>,
    g2: Option<&DampingLaw>,
    basis: &ModeBasis,
) -> f64 {
    let part = |v, g: Option<&DampingLaw>| match g {
        None => 0.0,
        Some(law) => lap_on_grid(basis, v)
            .values()
            .iter()
            .map(|s| s * law.g(*s))
            .sum::<f64>(),
    };
    -basis.grid_weight() * (part(&state.v1, g1) + part(&state.v2, g2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// `E >= value` at this state.
    pub holds: bool,
}

/// `½ ∫ |∇v₁|² + |∇v₂|² + (1 - c'‖a‖∞)(|∇Δu₁|² + |Δu₂|²)`.
pub fn coercive_lower_bound(state: &SimState, coupling: &CouplingProfile, basis: &ModeBasis) -> LowerBound {
    let terms = energy(state, coupling, basis);
    lower_bound_from_terms(&terms, coupling, basis)
}

fn lower_bound_from_terms(terms: &EnergyTerms, coupling: &CouplingProfile, basis: &ModeBasis) -> LowerBound {
    let c_prime = basis.embedding_constants().c_prime;
    let factor = 1.0 - c_prime * coupling.sup_norm();
    let value = terms.kin1 + terms.kin2 + factor * (terms.pot1 + terms.pot2);
    LowerBound {
        value,
        holds: terms.total() >= value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub margin: f64,
    pub threshold: f64,
    pub sup_norm: f64,
}

/// `‖a‖∞ < min{1/c', 1}`.
pub fn coupling_admissible(coupling: &CouplingProfile, basis: &ModeBasis) -> Admissibility {
    let threshold = admissibility_threshold(basis);
    let margin = threshold - coupling.sup_norm();
    Admissibility {
        admissible: margin > 0.0,
        margin,
        threshold,
        sup_norm: coupling.sup_norm(),
    }
}

pub fn admissibility_threshold(basis: &ModeBasis) -> f64 {
    (1.0 / basis.embedding_constants().c_prime).min(1.0)
}

impl EnergySample {
    pub fn measure(
        state: &SimState,
        coupling: &CouplingProfile,
        g1: Option<&DampingLaw>,
        g2: Option<&DampingLaw>,
        basis: &ModeBasis,
    ) -> Self {
        let terms = energy(state, coupling, basis);
        EnergySample {
            t: state.t,
            energy: terms.total(),
            dissipation: dissipation(state, g1, g2, basis),
            lower_bound: lower_bound_from_terms(&terms, coupling, basis).value,
            terms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damping::make_linear;
    use crate::spectral::SpectralField;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn basis() -> ModeBasis {
        ModeBasis::new(1.0, 8, 4).unwrap()
    }

    fn state_with(u1: SpectralField, u2: SpectralField, v1: SpectralField, v2: SpectralField) -> SimState {
        SimState { t: 0.0, u1, u2, v1, v2 }
    }

    fn e1() -> SpectralField {
        SpectralField::mode(8, 1, 1.0)
    }

    fn z() -> SpectralField {
        SpectralField::zeros(8)
    }

    #[test]
    fn energy_examples() {
        let b = basis();
        let a0 = CouplingProfile::constant(&b, 0.0).unwrap();
        assert_eq!(energy(&SimState::zeros(8), &a0, &b).total(), 0.0);
        let e = energy(&state_with(e1(), z(), z(), z()), &a0, &b).total();
        assert_relative_eq!(e, PI.powi(6) / 4.0, max_relative = 1e-14);
        assert_relative_eq!(e, 240.3473, max_relative = 1e-6);
        let e = energy(&state_with(z(), z(), z(), e1()), &a0, &b).total();
        assert_relative_eq!(e, 2.46740, max_relative = 1e-5);
    }

    #[test]
    fn coupling_integral_constant_a() {
        let b = basis();
        let a = CouplingProfile::constant(&b, 0.4).unwrap();
        let s = state_with(e1(), e1().scaled(2.0), z(), z());
        // ∫ a (−π² sin πx)(−2π² sin πx) = 0.4 · 2π⁴ / 2
        assert_relative_eq!(energy(&s, &a, &b).coupling, 0.4 * PI.powi(4), max_relative = 1e-13);
    }

    #[test]
    fn dissipation_examples() {
        let b = basis();
        let g = make_linear(1.0, 1.0).unwrap();
        assert_eq!(dissipation(&SimState::zeros(8), Some(&g), Some(&g), &b), 0.0);
        let s = state_with(z(), z(), e1(), z());
        let d = dissipation(&s, Some(&g), None, &b);
        assert_relative_eq!(d, -PI.powi(4) / 2.0, max_relative = 1e-13);
        assert_relative_eq!(d, -48.7045, max_relative = 1e-5);
        let s2 = state_with(z(), z(), e1().scaled(2.0), z());
        assert_relative_eq!(dissipation(&s2, Some(&g), None, &b), 4.0 * d, max_relative = 1e-14);
        assert_eq!(dissipation(&s, None, None, &b), 0.0);
    }

    #[test]
    fn lower_bound_examples() {
        let b = basis();
        let s = state_with(e1(), e1().scaled(0.3), e1().scaled(-1.0), z());
        let a0 = CouplingProfile::constant(&b, 0.0).unwrap();
        let lb = coercive_lower_bound(&s, &a0, &b);
        assert_eq!(lb.value, energy(&s, &a0, &b).total());
        assert!(lb.holds);

        let a = CouplingProfile::constant(&b, 0.5).unwrap();
        let t = energy(&s, &a, &b);
        let lb = coercive_lower_bound(&s, &a, &b);
        let expected = t.kin1 + t.kin2 + (1.0 - 0.5 / PI) * (t.pot1 + t.pot2);
        assert_relative_eq!(lb.value, expected, max_relative = 1e-14);
        assert!(lb.holds && lb.value >= 0.0);
    }

    #[test]
    fn admissibility_examples() {
        let b = basis();
        let r = coupling_admissible(&CouplingProfile::constant(&b, 0.0).unwrap(), &b);
        assert!(r.admissible);
        assert_eq!(r.margin, 1.0);
        let r = coupling_admissible(&CouplingProfile::constant(&b, 0.99).unwrap(), &b);
        assert!(r.admissible);
        assert_relative_eq!(r.margin, 0.01, max_relative = 1e-12);
        let r = coupling_admissible(&CouplingProfile::constant(&b, 1.2).unwrap(), &b);
        assert!(!r.admissible);
        let b4 = ModeBasis::new(4.0, 8, 4).unwrap();
        let r = coupling_admissible(&CouplingProfile::constant(&b4, 0.5).unwrap(), &b4);
        assert!(r.admissible);
        assert_relative_eq!(r.threshold, PI / 4.0, max_relative = 1e-14);
        assert_relative_eq!(r.margin, 0.2854, max_relative = 1e-4);
    }

    fn field() -> impl Strategy<Value = SpectralField> {
        prop::collection::vec(-1.0f64..1.0, 8).prop_map(SpectralField)
    }

    proptest! {
        #[test]
        fn coupling_term_is_bounded(u1 in field(), u2 in field(), a in 0.0f64..1.0) {
            let b = basis();
            let profile = CouplingProfile::from_fn(&b, |x| a * (0.5 + 0.5 * (3.0 * x).sin())).unwrap();
            let s = state_with(u1, u2, z(), z());
            let t = energy(&s, &profile, &b);
            let cp = b.embedding_constants().c_prime;
            let bound = cp / 2.0 * profile.sup_norm() * 2.0 * (t.pot1 + t.pot2);
            prop_assert!(t.coupling.abs() <= bound * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn energy_is_homogeneous_of_degree_two(u1 in field(), u2 in field(), v1 in field(), v2 in field(), alpha in -3.0f64..3.0) {
            let b = basis();
            let a = CouplingProfile::constant(&b, 0.7).unwrap();
            let s = state_with(u1, u2, v1, v2);
            let scaled = s.scaled(alpha);
            let e = energy(&s, &a, &b).total();
            let es = energy(&scaled, &a, &b).total();
            prop_assert!((es - alpha * alpha * e).abs() <= 1e-12 * (alpha * alpha * e).abs().max(1e-300));
        }
    }
}
