//! Malthusian exponent, additive martingale, biased spine and the
//! Galton–Watson skeleton of a multi-type fragmentation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragmentation::{
    simulate_mass_tree, tagged_bernstein, DislocationMeasure, FragModel, MassPartition, TaggedBernstein, TreeStop,
};
use crate::map_model::BernsteinMatrix;
use crate::map_sim::{mc_collect, McConfig};
use crate::matrix::{self, MlMatrix};
use crate::stats::AliasTable;

/// Stop bisection once `|λ| <= LAMBDA_TOL` ...
pub const LAMBDA_TOL: f64 = 1e-12;
/// ... or the bracket is narrower than this.
pub const BRACKET_TOL: f64 = 1e-14;
/// Bound on `‖Φ(p*−1) b‖∞ / max(b)`.
pub const EIGENVECTOR_TOL: f64 = 1e-10;
/// The spine stops once `mass^{|α|}` falls below this; the remaining time is
/// of the same relative order.
pub const SPINE_CUTOFF: f64 = 1e-15;

/// `λ(p) = −abscissa(−Φ(p−1))`: the smallest eigenvalue of the tagged
/// Bernstein matrix at `p − 1`.
pub fn lambda_of(measure: &DislocationMeasure, p: f64) -> Result<f64> {
    let phi = tagged_bernstein(measure).eval(p - 1.0);
    Ok(-matrix::spectral_abscissa(&MlMatrix::new(-phi)?)?.abscissa)
}

/// `λ` on each point of `ps`.
pub fn lambda_grid(measure: &DislocationMeasure, ps: &[f64]) -> Result<Vec<f64>> {
    ps.iter().map(|&p| lambda_of(measure, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalthusData {
    pub p_star: f64,
    /// Positive eigenvector of `Φ(p*−1)` for eigenvalue 0, min entry 1.
    pub b: Vec<f64>,
    /// `λ(p*)`.
    pub lambda_at_root: f64,
    /// `‖Φ(p*−1) b‖∞`.
    pub eigen_residual: f64,
}

/// Root of `λ` on `[0, 1]` by bisection, with its eigenvector.
pub fn malthusian_exponent(measure: &DislocationMeasure) -> Result<MalthusData> {
    let at_zero = MlMatrix::new(-tagged_bernstein(measure).eval(0.0))?;
    if let Some((i, j)) = matrix::unreachable_pair(&at_zero) {
        return Err(Error::param(format!("fragmentation is reducible: type {} never produces type {}", i + 1, j + 1)));
    }
    let lo_val = lambda_of(measure, 0.0)?;
    if lo_val >= 0.0 {
        return Err(Error::NotMalthusian(format!("lambda(0) = {lo_val} is not negative")));
    }
    let hi_val = lambda_of(measure, 1.0)?;
    if hi_val < -LAMBDA_TOL {
        return Err(Error::NotMalthusian(format!("lambda(1) = {hi_val} is negative")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut p, mut val) = (1.0, hi_val);
    while val.abs() > LAMBDA_TOL && hi - lo > BRACKET_TOL {
        p = 0.5 * (lo + hi);
        val = lambda_of(measure, p)?;
        if val < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
    }
    let phi = tagged_bernstein(measure).eval(p - 1.0);
    let pair = matrix::perron_pair(&MlMatrix::new(-phi.clone())?)?;
    let min = pair.right_vector.min();
    let b = pair.right_vector / min;
    let eigen_residual = (&phi * &b).amax();
    if eigen_residual > EIGENVECTOR_TOL * b.max() {
        return Err(Error::numeric("Malthus eigenvector residual too large", eigen_residual));
    }
    Ok(MalthusData { p_star: p, b: b.iter().copied().collect(), lambda_at_root: val, eigen_residual })
}

/// `M = (1/b_i) Σ b_{type} mass^{p*}` over a front of `(mass, type)` pairs.
pub fn additive_martingale(front: &[(f64, usize)], malthus: &MalthusData, start_type: usize) -> f64 {
    let s: f64 = front.iter().map(|&(m, ty)| malthus.b[ty] * m.powf(malthus.p_star)).sum();
    s / malthus.b[start_type]
}

/// `∫ |1 − Σ s_n^{p*}|^q dν_i` for each type.
pub fn check_mq(measure: &DislocationMeasure, q: f64, malthus: &MalthusData) -> Result<Vec<f64>> {
    if !(q > 1.0) {
        return Err(Error::param(format!("q = {q} must exceed 1")));
    }
    Ok((0..measure.dim())
        .map(|i| {
            measure
                .atoms(i)
                .iter()
                .map(|a| {
                    let s: f64 = a.partition.parts().iter().map(|p| p.mass.powf(malthus.p_star)).sum();
                    a.weight * (1.0 - s).abs().powf(q)
                })
                .sum()
        })
        .collect())
}

/// `Φ*(p) = diag(b)^{-1} Φ(p + p* − 1) diag(b)`.
#[derive(Debug, Clone)]
pub struct BiasedBernstein<'a> {
    tagged: TaggedBernstein<'a>,
    b: DVector<f64>,
    p_star: f64,
}

pub fn biased_bernstein<'a>(measure: &'a DislocationMeasure, malthus: &MalthusData) -> BiasedBernstein<'a> {
    BiasedBernstein {
        tagged: tagged_bernstein(measure),
        b: DVector::from_column_slice(&malthus.b),
        p_star: malthus.p_star,
    }
}

impl BernsteinMatrix for BiasedBernstein<'_> {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn eval(&self, p: f64) -> DMatrix<f64> {
        let mut m = self.tagged.eval(p + self.p_star - 1.0);
        let k = self.dim();
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] *= self.b[j] / self.b[i];
            }
        }
        m
    }
}

/// One dislocation of the spine: time, mass and type just after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpineStep {
    pub time: f64,
    pub mass: f64,
    pub ty: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinePath {
    /// Starts with `(0, 1, start_type)`.
    pub steps: Vec<SpineStep>,
    pub death_time: f64,
}

/// Precomputed biased jump laws per type.
#[derive(Debug, Clone)]
pub struct SpineSampler {
    alpha: f64,
    /// Per type: total biased rate, atom alias, per-atom child alias.
    tables: Vec<Option<(f64, AliasTable, Vec<AliasTable>)>>,
    measure: DislocationMeasure,
}

impl SpineSampler {
    pub fn new(model: &FragModel, malthus: &MalthusData) -> Result<Self> {
        if !(model.alpha < 0.0) {
            return Err(Error::param("the spine has a finite death time only for alpha < 0"));
        }
        let measure = &model.measure;
        let b = &malthus.b;
        let ps = malthus.p_star;
        let mut tables = Vec::with_capacity(measure.dim());
        for j in 0..measure.dim() {
            let mut atom_w = Vec::new();
            let mut child_tables = Vec::new();
            for a in measure.atoms(j) {
                let cw: Vec<f64> = a.partition.parts().iter().map(|p| b[p.ty] * p.mass.powf(ps)).collect();
                let total: f64 = cw.iter().sum();
                atom_w.push(a.weight * total / b[j]);
                child_tables.push(if total > 0.0 { Some(AliasTable::new(&cw)?) } else { None });
            }
            let rate: f64 = atom_w.iter().sum();
            if rate > 0.0 {
                let children = child_tables
                    .into_iter()
                    .map(|t| t.unwrap_or_else(|| AliasTable::new(&[1.0]).expect("unit weight")))
                    .collect();
                tables.push(Some((rate, AliasTable::new(&atom_w)?, children)));
            } else {
                tables.push(None);
            }
        }
        Ok(SpineSampler { alpha: model.alpha, tables, measure: measure.clone() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, start_type: usize, rng: &mut R) -> Result<SpinePath> {
        if start_type >= self.tables.len() {
            return Err(Error::param(format!("start type {} out of range", start_type + 1)));
        }
        let abs_alpha = -self.alpha;
        let (mut t, mut mass, mut ty) = (0.0, 1.0f64, start_type);
        let mut steps = vec![SpineStep { time: 0.0, mass, ty }];
        while mass.powf(abs_alpha) > SPINE_CUTOFF {
            let Some((rate, atoms, children)) = &self.tables[ty] else {
                return Err(Error::param(format!("spine stuck: type {} never splits", ty + 1)));
            };
            t += rng.sample::<f64, _>(Exp1) * mass.powf(abs_alpha) / rate;
            let a = atoms.sample(rng);
            let part = self.measure.atoms(ty)[a].partition.parts()[children[a].sample(rng)];
            mass *= part.mass;
            ty = part.ty;
            steps.push(SpineStep { time: t, mass, ty });
        }
        Ok(SpinePath { steps, death_time: t })
    }
}

/// One spine under the biased law; its death time is the exponential
/// functional of `|α| ξ*`.
pub fn sample_biased_spine<R: Rng + ?Sized>(
    model: &FragModel,
    malthus: &MalthusData,
    start_type: usize,
    rng: &mut R,
) -> Result<SpinePath> {
    SpineSampler::new(model, malthus)?.sample(start_type, rng)
}

/// Keeps the `n` largest parts when `s_1 <= 1 − eps`, else only the largest.
pub fn truncate_partition(s: &MassPartition, n: usize, eps: f64) -> MassPartition {
    let keep = match s.largest() {
        Some(first) if first.mass <= 1.0 - eps => n,
        _ => 1,
    };
    MassPartition::new(s.parts().iter().take(keep).map(|p| (p.mass, p.ty))).expect("subset of a valid partition")
}

/// Atom-wise image of the measure under [`truncate_partition`].
pub fn truncate_model(measure: &DislocationMeasure, n: usize, eps: f64) -> Result<DislocationMeasure> {
    if n == 0 {
        return Err(Error::param("truncation needs N >= 1"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param(format!("truncation eps {eps} must lie in (0, 1]")));
    }
    measure.map_atoms(|s| truncate_partition(s, n, eps))
}

/// Offspring outcome: probability and number of children of each type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offspring {
    pub prob: f64,
    pub counts: Vec<u32>,
}

/// Multi-type Galton–Watson offspring laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwModel {
    laws: Vec<Vec<Offspring>>,
}

impl GwModel {
    pub fn new(laws: Vec<Vec<Offspring>>) -> Result<Self> {
        let k = laws.len();
        for (i, law) in laws.iter().enumerate() {
            let total: f64 = law.iter().map(|o| o.prob).sum();
            if (total - 1.0).abs() > 1e-12 || law.iter().any(|o| !(o.prob >= 0.0)) {
                return Err(Error::param(format!(
                    "offspring law of type {} has probabilities summing to {total}",
                    i + 1
                )));
            }
            if law.iter().any(|o| o.counts.len() != k) {
                return Err(Error::param(format!("offspring counts of type {} must have length {k}", i + 1)));
            }
        }
        Ok(GwModel { laws })
    }

    /// Generation skeleton: each block is replaced by the parts of one atom
    /// drawn proportionally to weight. Reduction to dust happens in finite
    /// time exactly when this process dies out.
    pub fn from_generations(measure: &DislocationMeasure) -> Result<Self> {
        let k = measure.dim();
        let laws = (0..k)
            .map(|i| {
                let total = measure.total_rate(i);
                if total == 0.0 {
                    let mut counts = vec![0; k];
                    counts[i] = 1;
                    return vec![Offspring { prob: 1.0, counts }];
                }
                let mut law: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for a in measure.atoms(i) {
                    let mut counts = vec![0u32; k];
                    for p in a.partition.parts() {
                        counts[p.ty] += 1;
                    }
                    *law.entry(counts).or_default() += a.weight / total;
                }
                normalize(law)
            })
            .collect();
        GwModel::new(laws)
    }

    /// Empirical law of the typed block counts after one unit of time of the
    /// homogeneous fragmentation; outcomes are merged in replica order.
    pub fn from_unit_time(measure: &DislocationMeasure, cfg: &McConfig) -> Result<Self> {
        let k = measure.dim();
        let model = FragModel::new(0.0, measure.clone())?;
        let laws = (0..k)
            .map(|i| {
                let cfg_i = McConfig { seed: cfg.seed.wrapping_add(i as u64), ..*cfg };
                let draws = mc_collect(&cfg_i, |rng, _| {
                    let run = simulate_mass_tree(&model, (1.0, i), TreeStop::horizon(1.0), rng)?;
                    let mut counts = vec![0u32; k];
                    for (_, ty) in run.horizon_front() {
                        counts[ty] += 1;
                    }
                    Ok(counts)
                })?;
                let n = draws.len() as f64;
                let mut law: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for c in draws {
                    *law.entry(c).or_default() += 1.0 / n;
                }
                Ok(normalize(law))
            })
            .collect::<Result<Vec<_>>>()?;
        GwModel::new(laws)
    }

    pub fn dim(&self) -> usize {
        self.laws.len()
    }

    pub fn law(&self, i: usize) -> &[Offspring] {
        &self.laws[i]
    }

    /// Generating function `f_i(s) = E_i[Π_j s_j^{Z_j}]`.
    pub fn generating(&self, s: &[f64]) -> Vec<f64> {
        self.laws
            .iter()
            .map(|law| {
                law.iter()
                    .map(|o| o.prob * o.counts.iter().zip(s).map(|(&c, &x)| x.powi(c as i32)).product::<f64>())
                    .sum()
            })
            .collect()
    }

    /// `E_i[Z_j]`.
    pub fn mean_matrix(&self) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_fn(k, k, |i, j| self.laws[i].iter().map(|o| o.prob * o.counts[j] as f64).sum())
    }
}

fn normalize(law: BTreeMap<Vec<u32>, f64>) -> Vec<Offspring> {
    let total: f64 = law.values().sum();
    law.into_iter().map(|(counts, p)| Offspring { prob: p / total, counts }).collect()
}

/// Extinction probabilities with the fixed-point residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    pub q: Vec<f64>,
    pub residual: f64,
    pub iterations: u64,
}

pub const GW_STEP_TOL: f64 = 1e-14;
pub const GW_RESIDUAL_TOL: f64 = 1e-12;
pub const GW_MAX_ITERS: u64 = 1_000_000;

/// Smallest fixed point of `q = f(q)` by iteration from `q = 0`.
pub fn gw_extinction(gw: &GwModel) -> Result<Extinction> {
    let mut q = vec![0.0; gw.dim()];
    for it in 1..=GW_MAX_ITERS {
        let next = gw.generating(&q);
        let step = sup_dist(&next, &q);
        q = next;
        if step <= GW_STEP_TOL {
            let residual = sup_dist(&gw.generating(&q), &q);
            if residual > GW_RESIDUAL_TOL {
                return Err(Error::numeric("extinction fixed point residual too large", residual));
            }
            return Ok(Extinction { q, residual, iterations: it });
        }
    }
    let residual = sup_dist(&gw.generating(&q), &q);
    Err(Error::numeric(format!("extinction iteration did not settle in {GW_MAX_ITERS} steps"), residual))
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
