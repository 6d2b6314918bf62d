//! Typed mass partitions and exact simulation of multi-type fragmentations
//! with finite dislocation measures.
//!
//! Two simulators share one event format:
//! * [`simulate_homogeneous_partition`] follows a partition of `{0, …, n−1}`
//!   built by paintboxing each dislocation over the elements of the block.
//! * [`simulate_mass_tree`] follows exact block masses in self-similar time,
//!   where a block of mass `m` and type `j` dislocates at rate `m^α ν_j(total)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_model::{BernsteinMatrix, JumpAtom, JumpLaw, LevyAtom, MapOptions, MapParams, SubordinatorParams};
use crate::map_sim::{self, lamperti_transform, LampertiState, MapSimulator, McConfig, McEstimate, Stop};
use crate::matrix::MlMatrix;
use crate::stats::AliasTable;

/// Tolerance on `Σ masses <= 1`.
pub const MASS_TOL: f64 = 1e-12;

/// For `α < 0` a tagged fragment of mass below `e^{−ABSORB_LEVEL}` counts as
/// absorbed; the error on `E[mass^p]` is at most `e^{−p·ABSORB_LEVEL}`.
pub const ABSORB_LEVEL: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub mass: f64,
    pub ty: usize,
}

/// Ranked typed mass partition; zero masses are not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassPartition {
    parts: Vec<Part>,
    dust: f64,
}

impl MassPartition {
    pub fn new(parts: impl IntoIterator<Item = (f64, usize)>) -> Result<Self> {
        let mut v = Vec::new();
        for (mass, ty) in parts {
            if !(mass.is_finite() && (0.0..=1.0).contains(&mass)) {
                return Err(Error::param(format!("part mass {mass} must lie in [0, 1]")));
            }
            if mass > 0.0 {
                v.push(Part { mass, ty });
            }
        }
        let total: f64 = v.iter().map(|p| p.mass).sum();
        if total > 1.0 + MASS_TOL {
            return Err(Error::param(format!("part masses sum to {total}, more than 1")));
        }
        v.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(b.ty.cmp(&a.ty)));
        Ok(MassPartition { parts: v, dust: (1.0 - total).max(0.0) })
    }

    /// All mass in one part.
    pub fn unit(ty: usize) -> Self {
        MassPartition { parts: vec![Part { mass: 1.0, ty }], dust: 0.0 }
    }

    pub fn all_dust() -> Self {
        MassPartition { parts: Vec::new(), dust: 1.0 }
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn dust(&self) -> f64 {
        self.dust
    }

    pub fn largest(&self) -> Option<Part> {
        self.parts.first().copied()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.parts.iter().map(|p| p.mass).sum()
    }

    pub fn max_type(&self) -> Option<usize> {
        self.parts.iter().map(|p| p.ty).max()
    }
}

/// Row vector `Σ_n s_n^p e_{i_n}` of length `k`.
pub fn s_pow_vector(s: &MassPartition, p: f64, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    for part in s.parts() {
        v[part.ty] += part.mass.powf(p);
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DislocationAtom {
    pub weight: f64,
    pub partition: MassPartition,
}

/// Finite dislocation measures `ν_i = Σ w δ_s` and erosion rates, per type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DislocationMeasure {
    atoms: Vec<Vec<DislocationAtom>>,
    erosion: Vec<f64>,
    #[serde(skip)]
    alias: Vec<Option<AliasTable>>,
}

impl DislocationMeasure {
    pub fn new(atoms: Vec<Vec<DislocationAtom>>, erosion: Vec<f64>) -> Result<Self> {
        let k = atoms.len();
        if k == 0 {
            return Err(Error::param("dislocation measure needs at least one type"));
        }
        if erosion.len() != k {
            return Err(Error::param(format!("expected {k} erosion rates, got {}", erosion.len())));
        }
        for (i, &c) in erosion.iter().enumerate() {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::param(format!("erosion of type {} must be finite and >= 0", i + 1)));
            }
        }
        for (i, row) in atoms.iter().enumerate() {
            for a in row {
                if !(a.weight > 0.0 && a.weight.is_finite()) {
                    return Err(Error::param(format!(
                        "atom weight {} of type {} must be finite and > 0",
                        a.weight,
                        i + 1
                    )));
                }
                if let Some(t) = a.partition.max_type() {
                    if t >= k {
                        return Err(Error::param(format!("part type {} exceeds K = {k}", t + 1)));
                    }
                }
            }
            // ∫ (1 − s_1 1{i_1 = i}) dν_i is a finite sum here.
            let integral: f64 = row
                .iter()
                .map(|a| {
                    let s1 = a.partition.largest().filter(|p| p.ty == i).map_or(0.0, |p| p.mass);
                    a.weight * (1.0 - s1)
                })
                .sum();
            assert!(integral.is_finite());
        }
        let alias = atoms
            .iter()
            .map(|row| {
                if row.is_empty() {
                    None
                } else {
                    let w: Vec<f64> = row.iter().map(|a| a.weight).collect();
                    Some(AliasTable::new(&w).expect("weights validated"))
                }
            })
            .collect();
        Ok(DislocationMeasure { atoms, erosion, alias })
    }

    pub fn dim(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self, i: usize) -> &[DislocationAtom] {
        &self.atoms[i]
    }

    pub fn erosion(&self, i: usize) -> f64 {
        self.erosion[i]
    }

    pub fn erosion_rates(&self) -> &[f64] {
        &self.erosion
    }

    pub fn has_erosion(&self) -> bool {
        self.erosion.iter().any(|&c| c > 0.0)
    }

    /// `ν_i` total mass.
    pub fn total_rate(&self, i: usize) -> f64 {
        self.atoms[i].iter().map(|a| a.weight).sum()
    }

    fn sample_atom<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> usize {
        self.alias[i].as_ref().expect("type has atoms").sample(rng)
    }

    /// Whether every atom keeps all its mass and there is no erosion.
    pub fn is_conservative(&self) -> bool {
        !self.has_erosion() && self.atoms.iter().flatten().all(|a| a.partition.dust() <= MASS_TOL)
    }

    /// Image of every atom under `f`; weights unchanged.
    pub fn map_atoms(&self, f: impl Fn(&MassPartition) -> MassPartition) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|row| row.iter().map(|a| DislocationAtom { weight: a.weight, partition: f(&a.partition) }).collect())
            .collect();
        DislocationMeasure::new(atoms, self.erosion.clone())
    }
}

/// Self-similarity index plus dislocation measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragModel {
    pub alpha: f64,
    pub measure: DislocationMeasure,
}

impl FragModel {
    /// Erosion is only simulated exactly when `α = 0`.
    pub fn new(alpha: f64, measure: DislocationMeasure) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::param(format!("alpha {alpha} must be finite")));
        }
        if alpha != 0.0 && measure.has_erosion() {
            return Err(Error::param("erosion with alpha != 0 is not supported: set erosion to 0 or alpha to 0"));
        }
        Ok(FragModel { alpha, measure })
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }
}

/// A block of a partition of `{0, …, n−1}`. Singletons carry no type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedBlock {
    pub elements: Vec<usize>,
    pub ty: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedPartition {
    pub n: usize,
    /// Sorted by least element.
    pub blocks: Vec<TypedBlock>,
}

impl TypedPartition {
    fn from_groups(n: usize, groups: Vec<(Vec<usize>, usize)>) -> Self {
        let mut blocks: Vec<TypedBlock> = groups
            .into_iter()
            .filter(|(e, _)| !e.is_empty())
            .map(|(mut elements, ty)| {
                elements.sort_unstable();
                let ty = (elements.len() > 1).then_some(ty);
                TypedBlock { elements, ty }
            })
            .collect();
        blocks.sort_by_key(|b| b.elements[0]);
        TypedPartition { n, blocks }
    }

    pub fn block_of(&self, element: usize) -> Option<&TypedBlock> {
        self.blocks.iter().find(|b| b.elements.contains(&element))
    }

    /// Blocks are disjoint, cover `{0, …, n−1}`, are sorted, and only
    /// non-singletons carry a type.
    pub fn is_valid(&self) -> bool {
        let mut seen = vec![false; self.n];
        for b in &self.blocks {
            if b.elements.is_empty() || (b.elements.len() > 1) != b.ty.is_some() {
                return false;
            }
            for &e in &b.elements {
                if e >= self.n || seen[e] {
                    return false;
                }
                seen[e] = true;
            }
        }
        seen.into_iter().all(|s| s) && self.blocks.windows(2).all(|w| w[0].elements[0] < w[1].elements[0])
    }
}

/// Index of the part hit by `u ∈ [0, 1)`, or `None` for dust.
fn paint(parts: &[Part], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (k, p) in parts.iter().enumerate() {
        acc += p.mass;
        if u < acc {
            return Some(k);
        }
    }
    None
}

/// Kingman paintbox: each element picks part `k` with probability `s_k`,
/// dust (a singleton) otherwise.
pub fn paintbox_sample<R: Rng + ?Sized>(s: &MassPartition, n: usize, rng: &mut R) -> TypedPartition {
    let mut groups: Vec<(Vec<usize>, usize)> = s.parts().iter().map(|p| (Vec::new(), p.ty)).collect();
    for e in 0..n {
        match paint(s.parts(), rng.random()) {
            Some(k) => groups[k].0.push(e),
            None => groups.push((vec![e], 0)),
        }
    }
    TypedPartition::from_groups(n, groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Child {
    pub id: usize,
    pub mass: f64,
    pub ty: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// The block split according to atom `atom` of its type's measure.
    Dislocation { atom: usize },
    /// One element of the block eroded into dust.
    Erosion { element: usize },
    /// The block fell below the mass floor and was frozen.
    Censor,
    /// The block was alive at the horizon.
    Horizon,
}

/// One event on one block. For dislocations `children` lists the new blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEvent {
    pub time: f64,
    pub block: usize,
    /// Block mass just before the event.
    pub mass: f64,
    pub ty: usize,
    #[serde(flatten)]
    pub kind: EventKind,
    pub children: Vec<Child>,
}

/// Internal lineage of the partition simulator. Types are always known here,
/// including for singletons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub id: usize,
    pub elements: Vec<usize>,
    pub ty: usize,
    /// Mass at `since`; decays as `e^{−c (t − since)}` under erosion.
    pub mass: f64,
    pub since: f64,
}

impl Lineage {
    pub fn mass_at(&self, t: f64, erosion: f64) -> f64 {
        self.mass * (-erosion * (t - self.since)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRun {
    pub events: Vec<BlockEvent>,
    pub partition: TypedPartition,
    /// Living lineages at the horizon with masses at the horizon.
    pub lineages: Vec<Lineage>,
    pub horizon: f64,
}

impl PartitionRun {
    /// `(mass, type)` of the lineage holding `element`, `None` if it eroded or fell in dust.
    pub fn tagged(&self, element: usize) -> Option<(f64, usize)> {
        self.lineages.iter().find(|l| l.elements.contains(&element)).map(|l| (l.mass, l.ty))
    }
}

/// Exact event-driven simulation of the homogeneous fragmentation on `{0, …, n−1}`.
///
/// Every lineage of type `j` dislocates at rate `ν_j(total)`, paintboxing
/// the chosen atom over its elements; every element erodes to dust at rate
/// `c_j`. Lineages keep evolving after they shrink to one element so the
/// tagged lineage stays exact.
pub fn simulate_homogeneous_partition<R: Rng + ?Sized>(
    measure: &DislocationMeasure,
    start_type: usize,
    n: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<PartitionRun> {
    if n == 0 {
        return Err(Error::param("ground set must be non-empty"));
    }
    if start_type >= measure.dim() {
        return Err(Error::param(format!("start type {} out of range", start_type + 1)));
    }
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::param(format!("horizon {horizon} must be finite and >= 0")));
    }
    let mut live = vec![Lineage { id: 0, elements: (0..n).collect(), ty: start_type, mass: 1.0, since: 0.0 }];
    let mut dust: Vec<usize> = Vec::new();
    let mut events = Vec::new();
    let mut next_id = 1;
    let mut t = 0.0;
    loop {
        let rates: Vec<f64> =
            live.iter().map(|l| measure.total_rate(l.ty) + l.elements.len() as f64 * measure.erosion(l.ty)).collect();
        let total: f64 = rates.iter().sum();
        let wait = if total > 0.0 { rng.sample::<f64, _>(Exp1) / total } else { f64::INFINITY };
        if t + wait >= horizon {
            break;
        }
        t += wait;
        let mut u = rng.random::<f64>() * total;
        let mut idx = live.len() - 1;
        for (k, &r) in rates.iter().enumerate() {
            if u < r {
                idx = k;
                break;
            }
            u -= r;
        }
        let lin = live.swap_remove(idx);
        let c = measure.erosion(lin.ty);
        let mass = lin.mass_at(t, c);
        let split_rate = measure.total_rate(lin.ty);
        if rng.random::<f64>() * (split_rate + lin.elements.len() as f64 * c) < split_rate {
            let atom = measure.sample_atom(lin.ty, rng);
            let parts = measure.atoms(lin.ty)[atom].partition.parts();
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); parts.len()];
            for &e in &lin.elements {
                match paint(parts, rng.random()) {
                    Some(k) => groups[k].push(e),
                    None => dust.push(e),
                }
            }
            let mut children = Vec::new();
            for (k, elements) in groups.into_iter().enumerate() {
                if elements.is_empty() {
                    continue;
                }
                let child = Lineage { id: next_id, elements, ty: parts[k].ty, mass: mass * parts[k].mass, since: t };
                next_id += 1;
                children.push(Child { id: child.id, mass: child.mass, ty: child.ty });
                live.push(child);
            }
            events.push(BlockEvent {
                time: t,
                block: lin.id,
                mass,
                ty: lin.ty,
                kind: EventKind::Dislocation { atom },
                children,
            });
        } else {
            let mut lin = lin;
            let pos = rng.random_range(0..lin.elements.len());
            let element = lin.elements.swap_remove(pos);
            dust.push(element);
            events.push(BlockEvent {
                time: t,
                block: lin.id,
                mass,
                ty: lin.ty,
                kind: EventKind::Erosion { element },
                children: Vec::new(),
            });
            if !lin.elements.is_empty() {
                live.push(lin);
            }
        }
    }
    for l in &mut live {
        l.mass = l.mass_at(horizon, measure.erosion(l.ty));
        l.since = horizon;
    }
    live.sort_by_key(|l| l.id);
    let mut groups: Vec<(Vec<usize>, usize)> = live.iter().map(|l| (l.elements.clone(), l.ty)).collect();
    groups.extend(dust.into_iter().map(|e| (vec![e], 0)));
    Ok(PartitionRun { events, partition: TypedPartition::from_groups(n, groups), lineages: live, horizon })
}

/// Stopping rule for [`simulate_mass_tree`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeStop {
    /// Blocks with mass below the floor are frozen.
    pub floor: Option<f64>,
    pub horizon: Option<f64>,
    /// Budget on the number of blocks.
    pub max_nodes: usize,
}

impl TreeStop {
    pub fn floor(floor: f64) -> Self {
        TreeStop { floor: Some(floor), horizon: None, max_nodes: 10_000_000 }
    }
    pub fn horizon(horizon: f64) -> Self {
        TreeStop { floor: None, horizon: Some(horizon), max_nodes: 10_000_000 }
    }
}

/// Raw block genealogy from [`simulate_mass_tree`]: one terminal event per
/// block, sorted by `(time, block)`. Block 0 is the root, born at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassTreeRun {
    pub alpha: f64,
    pub root_mass: f64,
    pub root_type: usize,
    pub stop: TreeStop,
    pub events: Vec<BlockEvent>,
}

impl MassTreeRun {
    /// `(mass, type)` of blocks alive at the horizon.
    pub fn horizon_front(&self) -> Vec<(f64, usize)> {
        self.events.iter().filter(|e| e.kind == EventKind::Horizon).map(|e| (e.mass, e.ty)).collect()
    }

    /// Last event time: the extinction time when every block was censored
    /// or reduced to dust.
    pub fn last_time(&self) -> f64 {
        self.events.iter().map(|e| e.time).fold(0.0, f64::max)
    }

    pub fn n_blocks(&self) -> usize {
        self.events.len()
    }
}

/// Exact branching simulation of block masses in self-similar time.
pub fn simulate_mass_tree<R: Rng + ?Sized>(
    model: &FragModel,
    start: (f64, usize),
    stop: TreeStop,
    rng: &mut R,
) -> Result<MassTreeRun> {
    let (m0, ty0) = start;
    let alpha = model.alpha;
    let measure = &model.measure;
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::param(format!("start mass {m0} must be positive")));
    }
    if ty0 >= model.dim() {
        return Err(Error::param(format!("start type {} out of range", ty0 + 1)));
    }
    if let Some(f) = stop.floor {
        if !(f > 0.0) {
            return Err(Error::param(format!("mass floor {f} must be > 0")));
        }
    }
    if let Some(h) = stop.horizon {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(Error::param(format!("horizon {h} must be finite and >= 0")));
        }
    }
    if alpha < 0.0 && stop.floor.is_none() {
        return Err(Error::param("alpha < 0 needs a mass floor: split rates blow up near zero mass"));
    }
    if alpha != 0.0 && measure.has_erosion() {
        return Err(Error::param("erosion is only supported with alpha = 0"));
    }
    if stop.floor.is_none() && stop.horizon.is_none() {
        return Err(Error::param("mass tree needs a floor or a horizon"));
    }
    let floor = stop.floor.unwrap_or(0.0);
    let horizon = stop.horizon.unwrap_or(f64::INFINITY);

    // (id, birth time, birth mass, type)
    let mut stack = vec![(0usize, 0.0f64, m0, ty0)];
    let mut next_id = 1usize;
    let mut events = Vec::new();
    while let Some((id, birth, mass, ty)) = stack.pop() {
        if mass < floor {
            events.push(BlockEvent { time: birth, block: id, mass, ty, kind: EventKind::Censor, children: Vec::new() });
            continue;
        }
        let c = measure.erosion(ty);
        let rate = mass.powf(alpha) * measure.total_rate(ty);
        let life = if rate > 0.0 { rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
        let to_floor = if c > 0.0 && floor > 0.0 { (mass / floor).ln() / c } else { f64::INFINITY };
        let end = birth + life.min(to_floor);
        let mass_at = |t: f64| mass * (-c * (t - birth)).exp();
        if end >= horizon {
            events.push(BlockEvent {
                time: horizon,
                block: id,
                mass: mass_at(horizon),
                ty,
                kind: EventKind::Horizon,
                children: Vec::new(),
            });
            continue;
        }
        if !end.is_finite() {
            return Err(Error::param(format!("block of type {} never splits and no horizon is set", ty + 1)));
        }
        if to_floor <= life {
            events.push(BlockEvent {
                time: end,
                block: id,
                mass: floor,
                ty,
                kind: EventKind::Censor,
                children: Vec::new(),
            });
            continue;
        }
        let m = mass_at(end);
        let atom = measure.sample_atom(ty, rng);
        let children: Vec<Child> = measure.atoms(ty)[atom]
            .partition
            .parts()
            .iter()
            .map(|p| {
                let ch = Child { id: next_id, mass: m * p.mass, ty: p.ty };
                next_id += 1;
                ch
            })
            .collect();
        if next_id > stop.max_nodes {
            return Err(Error::param(format!("mass tree exceeded {} blocks", stop.max_nodes)));
        }
        for ch in children.iter().rev() {
            stack.push((ch.id, end, ch.mass, ch.ty));
        }
        events.push(BlockEvent { time: end, block: id, mass: m, ty, kind: EventKind::Dislocation { atom }, children });
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.block.cmp(&b.block)));
    Ok(MassTreeRun { alpha, root_mass: m0, root_type: ty0, stop, events })
}

/// Bernstein matrix of the tagged fragment:
/// `Φ(p)_ij = c_i (p+1) δ_ij + Σ_atoms w (δ_ij − Σ_{parts of type j} s^{1+p})`.
#[derive(Debug, Clone)]
pub struct TaggedBernstein<'a> {
    measure: &'a DislocationMeasure,
}

pub fn tagged_bernstein(measure: &DislocationMeasure) -> TaggedBernstein<'_> {
    TaggedBernstein { measure }
}

impl BernsteinMatrix for TaggedBernstein<'_> {
    fn dim(&self) -> usize {
        self.measure.dim()
    }

    fn eval(&self, p: f64) -> DMatrix<f64> {
        let k = self.dim();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            m[(i, i)] += self.measure.erosion(i) * (p + 1.0) + self.measure.total_rate(i);
            for a in self.measure.atoms(i) {
                for part in a.partition.parts() {
                    m[(i, part.ty)] -= a.weight * part.mass.powf(1.0 + p);
                }
            }
        }
        m
    }
}

/// The tagged-fragment MAP: `e^{−ξ}` is the mass of the block holding a
/// uniformly tagged point, `J` its type.
pub fn tagged_map(measure: &DislocationMeasure) -> Result<MapParams> {
    let k = measure.dim();
    let mut gen = DMatrix::zeros(k, k);
    let mut jump_atoms: Vec<Vec<Vec<JumpAtom>>> = vec![vec![Vec::new(); k]; k];
    let mut subs = Vec::with_capacity(k);
    for i in 0..k {
        let c = measure.erosion(i);
        let mut kill = c;
        let mut levy = Vec::new();
        for a in measure.atoms(i) {
            kill += a.weight * a.partition.dust();
            for part in a.partition.parts() {
                let rate = a.weight * part.mass;
                let size = -part.mass.ln();
                if part.ty == i {
                    // A unit part of the same type is a null event.
                    if size > 0.0 {
                        levy.push(LevyAtom { size, rate });
                    }
                } else {
                    gen[(i, part.ty)] += rate;
                    jump_atoms[i][part.ty].push(JumpAtom { size, prob: rate });
                }
            }
        }
        subs.push(SubordinatorParams::new(kill, c, levy)?);
    }
    for i in 0..k {
        let off: f64 = (0..k).filter(|&j| j != i).map(|j| gen[(i, j)]).sum();
        gen[(i, i)] = -off;
    }
    let jump_laws = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let atoms = &jump_atoms[i][j];
                    if i == j || atoms.is_empty() {
                        return Ok(JumpLaw::dirac_zero());
                    }
                    let total: f64 = atoms.iter().map(|a| a.prob).sum();
                    let mut normed: Vec<JumpAtom> =
                        atoms.iter().map(|a| JumpAtom { size: a.size, prob: a.prob / total }).collect();
                    // Absorb rounding so the probabilities sum to 1 exactly enough.
                    let s: f64 = normed.iter().map(|a| a.prob).sum();
                    normed[0].prob += 1.0 - s;
                    JumpLaw::new(normed)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    MapParams::with_options(MlMatrix::new(gen)?, subs, jump_laws, MapOptions { allow_degenerate: true })
}

/// Both sides of `E_i[|Π_1(t)|^p, i_1(t) = j] = E_i[Σ_n |Π_n(t)|^{1+p} 1{i_n(t) = j}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBiasReport {
    pub t: f64,
    pub p: f64,
    /// Tagged-fragment side, per target type.
    pub tagged: Vec<McEstimate>,
    /// Whole-front side, per target type.
    pub front: Vec<McEstimate>,
    /// Gaps in combined standard errors.
    pub gap_se: Vec<f64>,
}

/// Monte Carlo of both sides of the size-bias identity: the left from the
/// tagged MAP under the Lamperti time change, the right from the mass-tree
/// simulator. The two sides use independent streams.
///
/// For `alpha < 0` the mass tree needs a floor; blocks frozen below it drop
/// out of the front, a bias of at most `floor^p`. The tagged side treats
/// masses below `e^{−ABSORB_LEVEL}` as absorbed.
pub fn size_bias_check(
    model: &FragModel,
    start_type: usize,
    t: f64,
    p: f64,
    cfg: &McConfig,
    floor: Option<f64>,
) -> Result<SizeBiasReport> {
    if !(p >= 0.0) {
        return Err(Error::param(format!("p = {p} must be >= 0")));
    }
    let k = model.dim();
    let tagged = tagged_map(&model.measure)?;
    let sim = MapSimulator::new(&tagged);
    let alpha = model.alpha;
    let left = map_sim::mc_estimate_vec(cfg, k, |rng, _| {
        let mut out = vec![0.0; k];
        if t == 0.0 {
            out[start_type] = 1.0;
            return Ok(out);
        }
        let state = tagged_state_at(&sim, alpha, start_type, t, rng)?;
        if let LampertiState::Alive { mass, ty } = state {
            out[ty] = mass.powf(p);
        }
        Ok(out)
    })?;
    let stop = TreeStop { floor, horizon: Some(t), max_nodes: 10_000_000 };
    let right_cfg = McConfig { seed: cfg.seed ^ 0xA5A5_5A5A_0F0F_F0F0, ..*cfg };
    let right = map_sim::mc_estimate_vec(&right_cfg, k, |rng, _| {
        let run = simulate_mass_tree(model, (1.0, start_type), stop, rng)?;
        let mut out = vec![0.0; k];
        for (m, ty) in run.horizon_front() {
            out[ty] += m.powf(1.0 + p);
        }
        Ok(out)
    })?;
    let gap_se = left
        .iter()
        .zip(&right)
        .map(|(a, b)| {
            let d = (a.mean - b.mean).abs();
            if d == 0.0 {
                0.0
            } else {
                d / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt()
            }
        })
        .collect();
    Ok(SizeBiasReport { t, p, tagged: left, front: right, gap_se })
}

/// State at clock time `t` of the Lamperti transform of a fresh MAP path,
/// extending the path horizon until the clock passes `t`.
pub fn tagged_state_at<R: Rng + Clone>(
    sim: &MapSimulator,
    alpha: f64,
    start_type: usize,
    t: f64,
    rng: &mut R,
) -> Result<LampertiState> {
    let base = rng.clone();
    let mut h = t.max(1e-3);
    loop {
        // Same stream each attempt: a longer horizon extends the same path.
        let mut r = base.clone();
        let path = sim.simulate(start_type, Stop::Horizon(h), &mut r)?;
        let lp = lamperti_transform(&path, alpha);
        if path.is_dead() || lp.end_clock() > t {
            *rng = r;
            return lp.state_at(t);
        }
        if alpha < 0.0 && path.end_position > ABSORB_LEVEL {
            // The clock has all but stopped: the mass is below e^{−ABSORB_LEVEL}.
            *rng = r;
            return Ok(LampertiState::Absorbed);
        }
        if h > 1e12 {
            return Err(Error::numeric("Lamperti clock does not reach the requested time", h));
        }
        h *= 4.0;
    }
}
