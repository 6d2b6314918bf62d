//! Closed-form death-time transforms and integer moments of the exponential
//! functional `I = ∫_0^∞ e^{−ξ_t} dt`, with Monte Carlo counterparts.
//!
//! With `N(p)_i = E_i[I^p]`:
//!
//! ```text
//! N(p) = p Φ(p)^{-1} N(p − 1)       (upward, N(0) = 1)
//! N(p − 1) = Φ(p) N(p) / p          (downward from N(−1), no killing)
//! ```

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_model::{BernsteinMatrix, MapParams};
use crate::map_sim::{self, MapSimulator, McConfig, McEstimate};
use crate::matrix::{self, MlMatrix};

/// Stream offset separating the two estimator routes of [`negative_first_moment`].
const LOG_ROUTE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Values indexed by starting type for a given order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub order: f64,
    pub values: Vec<f64>,
    /// Standard errors for Monte Carlo values; `None` when exact.
    pub std_errors: Option<Vec<f64>>,
    pub exact: bool,
}

impl MomentVector {
    pub fn exact(order: f64, values: &DVector<f64>) -> Self {
        MomentVector { order, values: values.iter().copied().collect(), std_errors: None, exact: true }
    }

    pub fn estimated(order: f64, est: &[McEstimate]) -> Self {
        MomentVector {
            order,
            values: est.iter().map(|e| e.mean).collect(),
            std_errors: Some(est.iter().map(|e| e.std_error).collect()),
            exact: false,
        }
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

fn require_irreducible<B: BernsteinMatrix + ?Sized>(phi: &B) -> Result<()> {
    let probe = MlMatrix::new(-phi.eval(1.0))?;
    if let Some((i, j)) = matrix::unreachable_pair(&probe) {
        return Err(Error::param(format!("model is reducible: type {} cannot reach type {}", i + 1, j + 1)));
    }
    Ok(())
}

fn check_moment(values: &DVector<f64>, what: &str) -> Result<()> {
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::numeric(format!("{what} is not finite and nonnegative: {values:?}"), f64::NAN));
    }
    Ok(())
}

/// `F(p)_i = E_i[e^{−p ξ_{T−}}] = (Φ(p)^{-1} k)_i` with `k` the kill rates.
///
/// Valid while `Φ(p)` has strictly positive bottom eigenvalue, which
/// includes some negative `p`.
pub fn death_moment_vector(params: &MapParams, p: f64) -> Result<MomentVector> {
    if !params.has_killing() {
        return Err(Error::param("death moments need at least one positive kill rate"));
    }
    params.require_irreducible()?;
    let phi = params.bernstein_matrix(p);
    let abscissa = matrix::spectral_abscissa(&MlMatrix::new(-&phi)?)?.abscissa;
    if !(-abscissa > 0.0) {
        return Err(Error::Domain {
            msg: format!("p = {p} is outside the validity region of the death transform"),
            abscissa,
        });
    }
    let f = matrix::lu_solve(&phi, &params.kill_vector())?;
    check_moment(&f, "death transform")?;
    Ok(MomentVector::exact(p, &f))
}

/// `N(0), …, N(k_max)` by the upward recursion.
pub fn positive_integer_moments<B: BernsteinMatrix + ?Sized>(phi: &B, k_max: u32) -> Result<Vec<MomentVector>> {
    require_irreducible(phi)?;
    let k = phi.dim();
    let mut n = DVector::from_element(k, 1.0);
    let mut out = vec![MomentVector::exact(0.0, &n)];
    for j in 1..=k_max {
        let m = phi.eval(j as f64);
        n = matrix::lu_solve(&m, &n).map_err(|e| Error::numeric(format!("Φ({j}) is singular: {e}"), f64::NAN))?
            * j as f64;
        check_moment(&n, &format!("moment of order {j}"))?;
        out.push(MomentVector::exact(j as f64, &n));
    }
    Ok(out)
}

/// Spectral radius of `lim_k Φ(k)^{-1}`; `E_i[e^{a I}] < ∞` for `a` below it.
///
/// `Φ(k)^{-1}` is a nonnegative matrix whose spectral radius is the
/// reciprocal of the bottom eigenvalue of `Φ(k)`; k is doubled until that
/// radius moves by less than `1e-10` (relative to `max(1, r)`).
pub fn exponential_moment_radius<B: BernsteinMatrix + ?Sized>(phi: &B) -> Result<f64> {
    require_irreducible(phi)?;
    let radius = |k: f64| -> Result<f64> { Ok(1.0 / matrix::bottom_eigenvalue(&phi.eval(k))?) };
    let mut k = 1.0f64;
    let mut r = radius(k)?;
    let max_k = 2f64.powi(40);
    while k < max_k {
        k *= 2.0;
        let next = radius(k)?;
        let change = (next - r).abs();
        r = next;
        if change < 1e-10 * r.max(1.0) {
            return Ok(r);
        }
    }
    Err(Error::numeric(format!("radius did not settle by k = 2^40; last value {r:e} is a lower bound"), r))
}

fn require_no_killing(params: &MapParams) -> Result<()> {
    if params.has_killing() {
        return Err(Error::param("negative moments are only defined without killing"));
    }
    Ok(())
}

/// `N(−1), N(−2), …, N(k_min)` by the downward recursion from a supplied `N(−1)`.
pub fn negative_integer_moments(
    params: &MapParams,
    k_min: i32,
    n_minus_one: &MomentVector,
) -> Result<Vec<MomentVector>> {
    require_no_killing(params)?;
    if k_min >= 0 {
        return Err(Error::param(format!("k_min = {k_min} must be negative")));
    }
    if n_minus_one.values.len() != params.dim() {
        return Err(Error::param("N(−1) has the wrong dimension"));
    }
    let mut n = n_minus_one.as_vector();
    let mut out = vec![MomentVector { order: -1.0, ..n_minus_one.clone() }];
    for p in (k_min + 1..=-1).rev() {
        n = params.bernstein_matrix(p as f64) * n / p as f64;
        out.push(MomentVector::exact((p - 1) as f64, &n));
    }
    Ok(out)
}

/// `N(k)` for `k < 0` from the product form
/// `((−1)^{k+1} / (|k|−1)!) · Φ(k+1) Φ(k+2) ⋯ Φ(−1) · N(−1)`.
pub fn negative_moment_product_form(params: &MapParams, k: i32, n_minus_one: &DVector<f64>) -> Result<DVector<f64>> {
    require_no_killing(params)?;
    if k >= 0 {
        return Err(Error::param(format!("k = {k} must be negative")));
    }
    let mut v = n_minus_one.clone();
    // Apply the rightmost factor first.
    for l in (k + 1..=-1).rev() {
        v = params.bernstein_matrix(l as f64) * v;
    }
    let fact: f64 = (1..k.unsigned_abs()).map(f64::from).product();
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(v * (sign / fact))
}

/// Both estimators of `N(−1)` and their disagreement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativeFirstMoment {
    /// Direct Monte Carlo of `E_i[1/I]`.
    pub direct: Vec<McEstimate>,
    /// Monte Carlo of `E_i[ln I]`.
    pub log_moment: Vec<McEstimate>,
    /// `Φ′(0) 1 − Λ E[ln I]`.
    pub via_log: Vec<f64>,
    pub via_log_se: Vec<f64>,
    /// `|direct − via_log|` in combined standard errors, per type.
    pub gap_se: Vec<f64>,
    /// Whether every gap is within 4 combined standard errors.
    pub consistent: bool,
}

impl NegativeFirstMoment {
    /// The direct estimate as a moment vector, suitable as a recursion anchor.
    pub fn direct_vector(&self) -> MomentVector {
        MomentVector::estimated(-1.0, &self.direct)
    }
}

/// `N(−1)` two ways: direct `E_i[1/I]`, and
/// `Φ′(0) 1 − Λ N′(0)` with `N′(0)_i = E_i[ln I]` estimated on independent streams.
pub fn negative_first_moment(params: &MapParams, cfg: &McConfig) -> Result<NegativeFirstMoment> {
    require_no_killing(params)?;
    params.require_irreducible()?;
    let k = params.dim();
    let direct = mc_functional(params, 1.0, cfg, |i| 1.0 / i)?;
    let log_cfg = McConfig { seed: cfg.seed ^ LOG_ROUTE_STREAM, ..*cfg };
    let log_moment = mc_functional(params, 1.0, &log_cfg, f64::ln)?;

    let d = params.bernstein_derivative_at_zero()?;
    let lambda = params.generator().as_matrix();
    let l = DVector::from_iterator(k, log_moment.iter().map(|e| e.mean));
    let via = &d * DVector::from_element(k, 1.0) - lambda * &l;
    let via_log_se: Vec<f64> = (0..k)
        .map(|i| (0..k).map(|j| (lambda[(i, j)] * log_moment[j].std_error).powi(2)).sum::<f64>().sqrt())
        .collect();
    let gap_se: Vec<f64> = (0..k)
        .map(|i| {
            let diff = (direct[i].mean - via[i]).abs();
            // Floor covers the deterministic bias of truncating the functional's tail.
            let floor = 1e-8 * direct[i].mean.abs().max(1.0);
            let se = (direct[i].std_error.powi(2) + via_log_se[i].powi(2)).sqrt() + floor;
            if diff == 0.0 {
                0.0
            } else {
                diff / se
            }
        })
        .collect();
    Ok(NegativeFirstMoment {
        consistent: gap_se.iter().all(|&g| g <= 4.0),
        direct,
        log_moment,
        via_log: via.iter().copied().collect(),
        via_log_se,
        gap_se,
    })
}

/// Monte Carlo of `E_i[f(I_{aξ})]` for every start type `i`. Type `i` uses
/// replicas `i·n .. (i+1)·n` of the stream keyed by `cfg.seed`.
pub fn mc_functional(
    params: &MapParams,
    a: f64,
    cfg: &McConfig,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<McEstimate>> {
    let sim = MapSimulator::new(params);
    let stop = map_sim::functional_stop(params, a)?;
    let n = cfg.n_samples;
    (0..params.dim())
        .map(|ty| {
            let offset = ty as u64 * n;
            map_sim::mc_estimate(cfg, |_, r| {
                let mut rng = map_sim::replica_rng(cfg.seed, offset + r);
                let path = sim.simulate(ty, stop, &mut rng)?;
                Ok(f(map_sim::exponential_functional(&path, a)?))
            })
        })
        .collect()
}

/// Monte Carlo of `E_i[e^{−p ξ_{T−}}]` for every start type.
pub fn mc_death_moment(params: &MapParams, p: f64, cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let sim = MapSimulator::new(params);
    let n = cfg.n_samples;
    (0..params.dim())
        .map(|ty| {
            let offset = ty as u64 * n;
            map_sim::mc_estimate(cfg, |_, r| {
                let mut rng = map_sim::replica_rng(cfg.seed, offset + r);
                let path = sim.simulate(ty, map_sim::Stop::Death, &mut rng)?;
                Ok((-p * path.end_position).exp())
            })
        })
        .collect()
}
