//! Parameters of a nondecreasing Markov additive process (MAP) and its
//! Bernstein matrix.
//!
//! A MAP `(ξ, J)` has a finite-state modulating chain `J` with generator `Λ`.
//! While `J = i`, `ξ` moves as a subordinator with killing rate `k_i`,
//! drift `c_i` and finite Lévy measure `Π_i = Σ w δ_x`. When `J` jumps from
//! `i` to `j`, `ξ` gets an extra jump drawn from `B_ij`. The Bernstein matrix
//!
//! ```text
//! Φ(p) = diag(ψ_i(p)) − Λ ∘ B̂(p),   ψ_i(p) = k_i + c_i p + Σ w (1 − e^{−p x})
//! ```
//!
//! satisfies `E_i[e^{−p ξ_t}, J_t = j] = (e^{−t Φ(p)})_ij`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, MlMatrix};

/// Absolute tolerance on generator row sums and on probability totals.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A matrix-valued Laplace exponent `p ↦ Φ(p)` with `−Φ(p)` an ML-matrix.
pub trait BernsteinMatrix: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, p: f64) -> DMatrix<f64>;
}

impl<B: BernsteinMatrix + ?Sized> BernsteinMatrix for &B {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, p: f64) -> DMatrix<f64> {
        (**self).eval(p)
    }
}

/// `p ↦ Φ(factor · p)`, the Bernstein matrix of `factor · ξ`.
#[derive(Debug, Clone)]
pub struct Scaled<B> {
    pub inner: B,
    pub factor: f64,
}

impl<B: BernsteinMatrix> BernsteinMatrix for Scaled<B> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, p: f64) -> DMatrix<f64> {
        self.inner.eval(self.factor * p)
    }
}

/// Lévy atom `w δ_x`: jumps of size `x` arrive at rate `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyAtom {
    pub size: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SubordinatorParams {
    pub kill: f64,
    pub drift: f64,
    pub levy_atoms: Vec<LevyAtom>,
}

impl SubordinatorParams {
    pub fn new(kill: f64, drift: f64, levy_atoms: Vec<LevyAtom>) -> Result<Self> {
        let s = SubordinatorParams { kill, drift, levy_atoms };
        s.validate()?;
        Ok(s)
    }

    pub fn drift_only(drift: f64) -> Self {
        SubordinatorParams { kill: 0.0, drift, levy_atoms: Vec::new() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kill >= 0.0 && self.kill.is_finite()) {
            return Err(Error::param(format!("kill rate {} must be finite and >= 0", self.kill)));
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return Err(Error::param(format!("drift {} must be finite and >= 0", self.drift)));
        }
        for a in &self.levy_atoms {
            if !(a.size > 0.0 && a.size.is_finite() && a.rate > 0.0 && a.rate.is_finite()) {
                return Err(Error::param(format!(
                    "Lévy atom (size {}, rate {}) must have finite positive size and rate",
                    a.size, a.rate
                )));
            }
        }
        Ok(())
    }

    /// Total Lévy jump rate `Π((0, ∞))`.
    pub fn jump_rate(&self) -> f64 {
        self.levy_atoms.iter().map(|a| a.rate).sum()
    }

    /// `k + c p + Σ w (1 − e^{−p x})`.
    pub fn laplace_exponent(&self, p: f64) -> f64 {
        self.kill + self.drift * p + self.levy_atoms.iter().map(|a| -a.rate * (-p * a.size).exp_m1()).sum::<f64>()
    }

    /// `c + Σ w x`, the mean speed while alive.
    pub fn mean_speed(&self) -> f64 {
        self.drift + self.levy_atoms.iter().map(|a| a.rate * a.size).sum::<f64>()
    }

    fn moves(&self) -> bool {
        self.kill > 0.0 || self.drift > 0.0 || !self.levy_atoms.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub size: f64,
    pub prob: f64,
}

/// Finite law of the extra jump of `ξ` at a type change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpLaw {
    atoms: Vec<JumpAtom>,
}

impl JumpLaw {
    pub fn new(atoms: Vec<JumpAtom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::param("jump law needs at least one atom"));
        }
        for a in &atoms {
            if !(a.size >= 0.0 && a.size.is_finite()) {
                return Err(Error::param(format!("jump size {} must be finite and >= 0", a.size)));
            }
            if !(a.prob > 0.0 && a.prob <= 1.0) {
                return Err(Error::param(format!("jump probability {} must lie in (0, 1]", a.prob)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::param(format!("jump law probabilities sum to {total}, expected 1")));
        }
        Ok(JumpLaw { atoms })
    }

    pub fn dirac_zero() -> Self {
        JumpLaw { atoms: vec![JumpAtom { size: 0.0, prob: 1.0 }] }
    }

    pub fn atoms(&self) -> &[JumpAtom] {
        &self.atoms
    }

    /// `B̂(p) = Σ q e^{−p x}`.
    pub fn transform(&self, p: f64) -> f64 {
        self.atoms.iter().map(|a| a.prob * (-p * a.size).exp()).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob * a.size).sum()
    }

    pub fn is_dirac_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.size == 0.0)
    }
}

/// Validation switches for [`MapParams::with_options`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MapOptions {
    /// Accept a model whose position never moves. Only useful for testing the
    /// chain marginal.
    pub allow_degenerate: bool,
}

/// Full parameter set of a nondecreasing MAP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapParams {
    generator: MlMatrix,
    subordinators: Vec<SubordinatorParams>,
    jump_laws: Vec<Vec<JumpLaw>>,
}

impl MapParams {
    pub fn new(
        generator: MlMatrix,
        subordinators: Vec<SubordinatorParams>,
        jump_laws: Vec<Vec<JumpLaw>>,
    ) -> Result<Self> {
        Self::with_options(generator, subordinators, jump_laws, MapOptions::default())
    }

    /// Model with Dirac-at-0 jump laws everywhere.
    pub fn without_jumps(generator: MlMatrix, subordinators: Vec<SubordinatorParams>) -> Result<Self> {
        let k = generator.dim();
        Self::new(generator, subordinators, dirac_grid(k))
    }

    pub fn with_options(
        generator: MlMatrix,
        subordinators: Vec<SubordinatorParams>,
        jump_laws: Vec<Vec<JumpLaw>>,
        opts: MapOptions,
    ) -> Result<Self> {
        let k = generator.dim();
        for i in 0..k {
            let row: f64 = (0..k).map(|j| generator[(i, j)]).sum();
            if row.abs() > ROW_SUM_TOL {
                return Err(Error::param(format!("generator row {} sums to {row:e}, expected 0", i + 1)));
            }
        }
        if subordinators.len() != k {
            return Err(Error::param(format!("expected {k} subordinators, got {}", subordinators.len())));
        }
        for (i, s) in subordinators.iter().enumerate() {
            s.validate().map_err(|e| Error::param(format!("subordinator {}: {e}", i + 1)))?;
        }
        if jump_laws.len() != k || jump_laws.iter().any(|r| r.len() != k) {
            return Err(Error::param(format!("jump laws must form a {k}x{k} grid")));
        }
        for (i, row) in jump_laws.iter().enumerate() {
            if !row[i].is_dirac_zero() {
                return Err(Error::param(format!(
                    "jump law ({}, {}) on the diagonal must be Dirac at 0",
                    i + 1,
                    i + 1
                )));
            }
        }
        let params = MapParams { generator, subordinators, jump_laws };
        if !opts.allow_degenerate && params.is_degenerate() {
            return Err(Error::param(
                "degenerate model: position never moves (no kill, drift, Lévy atom or charged transition jump)",
            ));
        }
        Ok(params)
    }

    fn is_degenerate(&self) -> bool {
        let k = self.dim();
        let sub_moves = self.subordinators.iter().any(SubordinatorParams::moves);
        let jump_moves = (0..k)
            .any(|i| (0..k).any(|j| i != j && self.generator[(i, j)] > 0.0 && !self.jump_laws[i][j].is_dirac_zero()));
        !(sub_moves || jump_moves)
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn generator(&self) -> &MlMatrix {
        &self.generator
    }

    pub fn subordinator(&self, i: usize) -> Result<&SubordinatorParams> {
        self.subordinators
            .get(i)
            .ok_or_else(|| Error::param(format!("type index {} out of range 1..={}", i + 1, self.dim())))
    }

    pub fn subordinators(&self) -> &[SubordinatorParams] {
        &self.subordinators
    }

    pub fn jump_law(&self, i: usize, j: usize) -> &JumpLaw {
        &self.jump_laws[i][j]
    }

    pub fn laplace_exponent(&self, i: usize, p: f64) -> Result<f64> {
        Ok(self.subordinator(i)?.laplace_exponent(p))
    }

    /// `Φ(p)`. All measures are finite atoms, so every real `p` is admissible.
    pub fn bernstein_matrix(&self, p: f64) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                self.subordinators[i].laplace_exponent(p) - self.generator[(i, i)]
            } else {
                -self.generator[(i, j)] * self.jump_laws[i][j].transform(p)
            }
        })
    }

    /// `Φ′(0)`; entry `(i, j)` is `E_i[ξ_1, J_1 = j]`-type derivative data.
    /// Only defined without killing.
    pub fn bernstein_derivative_at_zero(&self) -> Result<DMatrix<f64>> {
        if self.has_killing() {
            return Err(Error::param("Φ′(0) is only used without killing"));
        }
        let k = self.dim();
        Ok(DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                self.subordinators[i].mean_speed()
            } else {
                self.generator[(i, j)] * self.jump_laws[i][j].mean()
            }
        }))
    }

    /// Lower end of the domain where `Φ` extends analytically. Every
    /// exponential moment of a finite atom law is finite, so this is `−∞`.
    pub fn domain_lower_bound(&self) -> f64 {
        f64::NEG_INFINITY
    }

    pub fn has_killing(&self) -> bool {
        self.subordinators.iter().any(|s| s.kill > 0.0)
    }

    pub fn kill_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.subordinators.iter().map(|s| s.kill))
    }

    pub fn is_irreducible(&self) -> bool {
        matrix::is_irreducible(&self.generator)
    }

    pub(crate) fn require_irreducible(&self) -> Result<()> {
        if let Some((i, j)) = matrix::unreachable_pair(&self.generator) {
            return Err(Error::param(format!("generator is reducible: type {} cannot reach type {}", i + 1, j + 1)));
        }
        Ok(())
    }

    /// Stationary law `π` of the chain (`π Λ = 0`, `Σ π = 1`).
    pub fn stationary_distribution(&self) -> Result<DVector<f64>> {
        if self.dim() == 1 {
            return Ok(DVector::from_element(1, 1.0));
        }
        self.require_irreducible()?;
        let t = MlMatrix::new(self.generator.as_matrix().transpose())?;
        Ok(matrix::perron_pair(&t)?.right_vector)
    }

    /// Almost-sure limit of `ξ_t / t` for a non-killed irreducible model.
    pub fn long_run_speed(&self) -> Result<f64> {
        let pi = self.stationary_distribution()?;
        let k = self.dim();
        Ok((0..k)
            .map(|i| {
                let jumps: f64 =
                    (0..k).filter(|&j| j != i).map(|j| self.generator[(i, j)] * self.jump_laws[i][j].mean()).sum();
                pi[i] * (self.subordinators[i].mean_speed() + jumps)
            })
            .sum())
    }
}

impl BernsteinMatrix for MapParams {
    fn dim(&self) -> usize {
        MapParams::dim(self)
    }
    fn eval(&self, p: f64) -> DMatrix<f64> {
        self.bernstein_matrix(p)
    }
}

pub(crate) fn dirac_grid(k: usize) -> Vec<Vec<JumpLaw>> {
    vec![vec![JumpLaw::dirac_zero(); k]; k]
}
