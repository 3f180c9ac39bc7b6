//! Sine-basis spectral representation of fields on the interval `(0, L)`.
//!
//! The basis functions `w_k(x) = sin(k pi x / L)` are the Dirichlet
//! eigenfunctions of the Laplacian, so they satisfy `u = 0` and `Δu = 0` at
//! both ends (hinged conditions) and diagonalize both `-Δ` and `Δ²`.
//! Nonlinear terms are evaluated on `M = oversample * N` uniform interior
//! nodes `x_j = j L / (M + 1)`, where the discrete sine transform is exactly
//! orthogonal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Smallest accepted grid oversampling factor.
pub const MIN_OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisParams {
    pub length: f64,
    pub modes: usize,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
}

fn default_oversample() -> usize {
    MIN_OVERSAMPLE
}

#[derive(Debug, Clone)]
pub struct ModeBasis {
    length: f64,
    eigenvalues: Vec<f64>,
    grid: Vec<f64>,
    // sin(k pi x_j / L), row j, column k-1
    sines: Vec<f64>,
}

/// Mode coefficients of a field in the sine basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField(pub Vec<f64>);

/// Point values of a field on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField(pub Vec<f64>);

impl SpectralField {
    pub fn zeros(n: usize) -> Self {
        SpectralField(vec![0.0; n])
    }

    /// The `k`-th basis function (1-based) scaled by `amplitude`.
    pub fn mode(n: usize, k: usize, amplitude: f64) -> Self {
        let mut c = vec![0.0; n];
        c[k - 1] = amplitude;
        SpectralField(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        SpectralField(self.0.iter().map(|c| alpha * c).collect())
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &SpectralField) -> Self {
        SpectralField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }
}

impl GridField {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl ModeBasis {
    pub fn new(length: f64, modes: usize, oversample: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(invalid("length", format!("must be positive, got {length}")));
        }
        if modes == 0 {
            return Err(invalid("modes", "must be at least 1"));
        }
        if oversample < MIN_OVERSAMPLE {
            return Err(invalid(
                "oversample",
                format!("must be at least {MIN_OVERSAMPLE}, got {oversample}"),
            ));
        }
        let points = oversample * modes;
        let eigenvalues = (1..=modes)
            .map(|k| (k as f64 * PI / length).powi(2))
            .collect();
        let h = length / (points + 1) as f64;
        let grid: Vec<f64> = (1..=points).map(|j| j as f64 * h).collect();
        let mut sines = Vec::with_capacity(points * modes);
        for j in 1..=points {
            for k in 1..=modes {
                // exact argument j k pi / (M + 1), reduced to keep sin accurate
                let m = (j * k) % (2 * (points + 1));
                sines.push((m as f64 * PI / (points + 1) as f64).sin());
            }
        }
        Ok(ModeBasis {
            length,
            eigenvalues,
            grid,
            sines,
        })
    }

    pub fn from_params(p: &BasisParams) -> Result<Self> {
        Self::new(p.length, p.modes, p.oversample)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn grid_points(&self) -> &[f64] {
        &self.grid
    }

    /// Quadrature weight of every grid node, `L / (M + 1)`.
    pub fn grid_weight(&self) -> f64 {
        self.length / (self.grid.len() + 1) as f64
    }

    fn check_modes(&self, f: &SpectralField) -> Result<()> {
        if f.len() != self.modes() {
            return Err(Error::SizeMismatch {
                expected: self.modes(),
                actual: f.len(),
            });
        }
        Ok(())
    }

    fn check_grid(&self, f: &GridField) -> Result<()> {
        if f.0.len() != self.grid_len() {
            return Err(Error::SizeMismatch {
                expected: self.grid_len(),
                actual: f.0.len(),
            });
        }
        Ok(())
    }

    pub fn synthesize(&self, f: &SpectralField) -> Result<GridField> {
        self.check_modes(f)?;
        let n = self.modes();
        let values = self
            .sines
            .chunks_exact(n)
            .map(|row| row.iter().zip(&f.0).map(|(s, c)| s * c).sum())
            .collect();
        Ok(GridField(values))
    }

    /// Discrete sine projection onto the first `N` modes.
    pub fn analyze(&self, f: &GridField) -> Result<SpectralField> {
        self.check_grid(f)?;
        let n = self.modes();
        let scale = 2.0 / (self.grid_len() + 1) as f64;
        let mut coeffs = vec![0.0; n];
        for (row, v) in self.sines.chunks_exact(n).zip(&f.0) {
            for (c, s) in coeffs.iter_mut().zip(row) {
                *c += v * s;
            }
        }
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(SpectralField(coeffs))
    }

    /// Applies `(-Δ)^r` mode-wise for `r` in `{1, 2}`.
    pub fn apply_spectral_power(&self, f: &SpectralField, r: u32) -> Result<SpectralField> {
        if !(1..=2).contains(&r) {
            return Err(invalid("r", format!("spectral power must be 1 or 2, got {r}")));
        }
        self.check_modes(f)?;
        Ok(self.scale_by_eigenvalues(f, r as i32))
    }

    /// Coefficients of `Δf`, i.e. `-λ_k c_k`.
    pub fn laplacian(&self, f: &SpectralField) -> SpectralField {
        SpectralField(
            f.0.iter()
                .zip(&self.eigenvalues)
                .map(|(c, l)| -l * c)
                .collect(),
        )
    }

    pub(crate) fn scale_by_eigenvalues(&self, f: &SpectralField, r: i32) -> SpectralField {
        SpectralField(
            f.0.iter()
                .zip(&self.eigenvalues)
                .map(|(c, l)| l.powi(r) * c)
                .collect(),
        )
    }

    /// `Σ λ_k^r c_k² (L/2)`: `r = 0, 1, 2, 3` give `∫f²`, `∫|∇f|²`,
    /// `∫|Δf|²` and `∫|∇Δf|²`.
    pub fn sobolev_seminorm_sq(&self, f: &SpectralField, r: u32) -> Result<f64> {
        if r > 3 {
            return Err(invalid("r", format!("seminorm order must be in 0..=3, got {r}")));
        }
        self.check_modes(f)?;
        let sum: f64 = f
            .0
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, l)| l.powi(r as i32) * c * c)
            .sum();
        Ok(0.5 * self.length * sum)
    }

    /// Sharp constants of `‖∇v‖ <= c ‖Δv‖` and `‖Δv‖ <= c' ‖∇Δv‖`.
    pub fn embedding_constants(&self) -> EmbeddingConstants {
        let c = 1.0 / self.eigenvalues[0].sqrt();
        EmbeddingConstants { c, c_prime: c }
    }

    /// Grid quadrature `(L/(M+1)) Σ_j f_j g_j`.
    pub fn grid_inner(&self, f: &GridField, g: &GridField) -> f64 {
        self.grid_weight() * f.0.iter().zip(&g.0).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingConstants {
    pub c: f64,
    pub c_prime: f64,
}

pub fn make_basis(length: f64, modes: usize, oversample: usize) -> Result<ModeBasis> {
    ModeBasis::new(length, modes, oversample)
}
