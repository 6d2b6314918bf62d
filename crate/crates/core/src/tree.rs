//! Fragmentation trees built from mass-tree runs, leaf heights under the
//! biased measure, extinction-time tails, covering counts and the
//! covering-slope dimension estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragmentation::{simulate_mass_tree, EventKind, FragModel, MassTreeRun, TreeStop};
use crate::malthus::{MalthusData, SpineSampler};
use crate::map_sim::{mc_collect, McConfig};
use crate::stats::{sorted_quantile, weighted_line_fit, Welford};

/// Relative slack on `Σ child masses <= parent mass`.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Block mass at birth; equals the μ-mass of the subtree above the node.
    pub mass: f64,
    pub ty: usize,
    pub birth: f64,
    pub death: f64,
    /// Frozen below the mass floor.
    pub censored: bool,
    /// Still alive at the horizon.
    pub open: bool,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragTree {
    pub alpha: f64,
    pub floor: Option<f64>,
    /// Indexed by block id; node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl FragTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// Largest death height: the extinction time when no node is open.
    pub fn height(&self) -> f64 {
        self.nodes.iter().map(|n| n.death).fold(0.0, f64::max)
    }

    /// Number of edges from the root.
    pub fn depth(&self, id: usize) -> usize {
        let mut d = 0;
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.nodes[p].parent;
        }
        d
    }

    fn check(&self) -> Result<()> {
        for n in &self.nodes {
            if !(n.death >= n.birth) {
                return Err(Error::Data(format!("block {} dies at {} before its birth {}", n.id, n.death, n.birth)));
            }
            if n.children.is_empty() {
                continue;
            }
            if !(n.death > n.birth) {
                return Err(Error::Data(format!("block {} splits at its birth height", n.id)));
            }
            let total: f64 = n.children.iter().map(|&c| self.nodes[c].mass).sum();
            if total > n.mass * (1.0 + MASS_SLACK) {
                return Err(Error::Data(format!("children of block {} carry more mass than it", n.id)));
            }
            for &c in &n.children {
                let ch = &self.nodes[c];
                if ch.birth != n.death {
                    return Err(Error::Data(format!("block {c} is not born when block {} splits", n.id)));
                }
            }
        }
        Ok(())
    }
}

/// Genealogy of a mass-tree run with all structural invariants checked.
pub fn build_tree(run: &MassTreeRun) -> Result<FragTree> {
    let n = run.events.iter().map(|e| e.children.iter().map(|c| c.id + 1).max().unwrap_or(0).max(e.block + 1)).max();
    let Some(n) = n else {
        return Err(Error::Data("empty event stream".into()));
    };
    let mut nodes: Vec<Option<TreeNode>> = vec![None; n];
    let blank = |id, parent, mass, ty, birth| TreeNode {
        id,
        parent,
        mass,
        ty,
        birth,
        death: f64::NAN,
        censored: false,
        open: false,
        children: Vec::new(),
    };
    nodes[0] = Some(blank(0, None, run.root_mass, run.root_type, 0.0));
    let mut closed = vec![false; n];
    for ev in &run.events {
        let node = nodes[ev.block]
            .as_mut()
            .ok_or_else(|| Error::Data(format!("event on block {} before its birth", ev.block)))?;
        if closed[ev.block] {
            return Err(Error::Data(format!("block {} has two terminal events", ev.block)));
        }
        closed[ev.block] = true;
        node.death = ev.time;
        node.censored = ev.kind == EventKind::Censor;
        node.open = ev.kind == EventKind::Horizon;
        node.children = ev.children.iter().map(|c| c.id).collect();
        for c in &ev.children {
            if nodes[c.id].is_some() {
                return Err(Error::Data(format!("block {} born twice", c.id)));
            }
            nodes[c.id] = Some(blank(c.id, Some(ev.block), c.mass, c.ty, ev.time));
        }
    }
    let nodes: Vec<TreeNode> = nodes
        .into_iter()
        .enumerate()
        .map(|(id, n)| n.ok_or_else(|| Error::Data(format!("block {id} never born"))))
        .collect::<Result<_>>()?;
    if let Some(id) = closed.iter().position(|&c| !c) {
        return Err(Error::Data(format!("block {id} has no terminal event")));
    }
    let tree = FragTree { alpha: run.alpha, floor: run.stop.floor, nodes };
    tree.check()?;
    Ok(tree)
}

/// μ-mass of the subtree above `node`: its block mass.
pub fn mu_subtree_mass(tree: &FragTree, node: usize) -> f64 {
    tree.nodes[node].mass
}

/// Upper tail of the extinction time `ζ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReport {
    pub n_runs: u64,
    pub mean: f64,
    pub std_error: f64,
    /// 90% quantile; the tail fit uses the exceedances over it.
    pub threshold: f64,
    pub tail_count: usize,
    /// Slope of `t ↦ ln P(ζ > t)` beyond the threshold.
    pub tail_slope: f64,
    /// 95% band on the slope, widened when the tail is thin.
    pub band: (f64, f64),
    /// Bound on the extra time hidden below the floor: `floor^{|α|} · sup_j E_j[ζ]`.
    pub floor_correction: f64,
    pub warning: Option<String>,
}

pub const MIN_TAIL_SAMPLES: usize = 100;

/// Extinction times `ζ` from mass-tree runs with a floor, and an exponential
/// fit of the tail beyond the 90% quantile.
///
/// The slope is the maximum likelihood rate of the exceedances; the fit is
/// exact for an exponential tail and conservative otherwise.
pub fn extinction_time_stats(
    model: &FragModel,
    start_type: usize,
    floor: f64,
    cfg: &McConfig,
) -> Result<(ExtinctionReport, Vec<f64>)> {
    if !(model.alpha < 0.0) {
        return Err(Error::param("extinction in finite time needs alpha < 0"));
    }
    let stop = TreeStop::floor(floor);
    let per_type = (0..model.dim())
        .map(|ty| {
            let cfg_ty = McConfig { seed: cfg.seed.wrapping_add(ty as u64), ..*cfg };
            mc_collect(&cfg_ty, |rng, _| Ok(simulate_mass_tree(model, (1.0, ty), stop, rng)?.last_time()))
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_mean = per_type
        .iter()
        .map(|z| {
            let w: Welford = z.iter().copied().collect();
            w.mean + 1.96 * w.std_error()
        })
        .fold(0.0, f64::max);
    let zetas = per_type.into_iter().nth(start_type).ok_or_else(|| Error::param("start type out of range"))?;
    let stats: Welford = zetas.iter().copied().collect();
    let mut sorted = zetas.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted_quantile(&sorted, 0.9);
    let excess: Vec<f64> = sorted.iter().filter(|&&z| z > threshold).map(|z| z - threshold).collect();
    let tail_count = excess.len();
    if tail_count < 2 {
        return Err(Error::Data(format!("only {tail_count} samples beyond the 90% quantile")));
    }
    let rate = tail_count as f64 / excess.iter().sum::<f64>();
    let mut half = 1.96 * rate / (tail_count as f64).sqrt();
    let warning = if tail_count < MIN_TAIL_SAMPLES {
        half *= 2.0;
        Some(format!("only {tail_count} tail samples (< {MIN_TAIL_SAMPLES}); band doubled"))
    } else {
        None
    };
    let report = ExtinctionReport {
        n_runs: stats.n,
        mean: stats.mean,
        std_error: stats.std_error(),
        threshold,
        tail_count,
        tail_slope: -rate,
        band: (-rate - half, -rate + half),
        floor_correction: floor.powf(-model.alpha) * sup_mean,
        warning,
    };
    Ok((report, zetas))
}

/// Leaf heights under the normalized biased measure, from spine sampling.
pub fn leaf_sample_mu_star(
    model: &FragModel,
    malthus: &MalthusData,
    start_type: usize,
    cfg: &McConfig,
) -> Result<Vec<f64>> {
    let sampler = SpineSampler::new(model, malthus)?;
    mc_collect(cfg, |rng, _| Ok(sampler.sample(start_type, rng)?.death_time))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringProfile {
    /// Strictly decreasing mass levels.
    pub levels: Vec<f64>,
    /// Blocks with `mass <= level < parent mass`.
    pub counts: Vec<u64>,
    /// `level^{|α|}`.
    pub radii: Vec<f64>,
}

/// Covering counts at each mass level: blocks at their first passage to or
/// below the level.
pub fn covering_profile(tree: &FragTree, levels: &[f64]) -> Result<CoveringProfile> {
    if levels.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::param("covering levels must be strictly decreasing"));
    }
    let floor = tree.floor.unwrap_or(0.0);
    for &l in levels {
        if !(l > 0.0) || l < floor {
            return Err(Error::param(format!("covering level {l} is below the simulation floor {floor}")));
        }
    }
    let mut counts = vec![0u64; levels.len()];
    for n in &tree.nodes {
        if n.open && levels.iter().any(|&l| n.mass > l) {
            return Err(Error::Data(format!("block {} is still open above a covering level", n.id)));
        }
        let parent = n.parent.map_or(f64::INFINITY, |p| tree.nodes[p].mass);
        for (k, &l) in levels.iter().enumerate() {
            if n.mass <= l && l < parent {
                counts[k] += 1;
            }
        }
    }
    let abs_alpha = tree.alpha.abs();
    Ok(CoveringProfile { levels: levels.to_vec(), counts, radii: levels.iter().map(|l| l.powf(abs_alpha)).collect() })
}

/// `n` mass levels spaced geometrically from `hi` down to `lo`.
pub fn geometric_levels(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    let r = (lo / hi).ln() / (n - 1) as f64;
    (0..n).map(|k| hi * (r * k as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Grouped-jackknife standard error over runs.
    pub se_replicate: f64,
    /// Standard error from the regression residuals.
    pub se_fit: f64,
    /// `slope ± 1.96 √(se_replicate² + se_fit²)`.
    pub band: (f64, f64),
    pub n_runs: usize,
}

const JACKKNIFE_GROUPS: usize = 20;

/// Slope of `ln E[count]` against `−|α| ln level` across runs sharing the
/// same levels. Levels are weighted by inverse variance of `ln E[count]`.
pub fn dimension_estimate(profiles: &[CoveringProfile], alpha: f64) -> Result<DimensionEstimate> {
    let Some(first) = profiles.first() else {
        return Err(Error::param("dimension estimate needs at least one profile"));
    };
    let levels = &first.levels;
    if profiles.iter().any(|p| &p.levels != levels) {
        return Err(Error::param("profiles use different levels"));
    }
    if levels.len() < 3 {
        return Err(Error::param("dimension estimate needs at least 3 levels"));
    }
    if levels[0] / levels[levels.len() - 1] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::param("levels must span at least two decades"));
    }
    if !(alpha < 0.0) {
        return Err(Error::param("dimension estimate needs alpha < 0"));
    }
    let x: Vec<f64> = levels.iter().map(|l| alpha * l.ln()).collect();
    let fit = |subset: &[&CoveringProfile]| -> Result<(crate::stats::LineFit, Vec<f64>)> {
        let mut y = Vec::with_capacity(levels.len());
        let mut w = Vec::with_capacity(levels.len());
        for k in 0..levels.len() {
            let s: Welford = subset.iter().map(|p| p.counts[k] as f64).collect();
            if !(s.mean > 0.0) {
                return Err(Error::Data(format!("no blocks at covering level {}", levels[k])));
            }
            y.push(s.mean.ln());
            let var_log = s.variance() / (s.n as f64 * s.mean * s.mean);
            w.push(var_log);
        }
        // Deterministic counts have zero variance: fall back to equal weights.
        let w: Vec<f64> =
            if w.iter().any(|&v| !(v > 0.0)) { vec![1.0; w.len()] } else { w.iter().map(|v| 1.0 / v).collect() };
        Ok((weighted_line_fit(&x, &y, &w)?, w))
    };
    let all: Vec<&CoveringProfile> = profiles.iter().collect();
    let (full, _) = fit(&all)?;
    let groups = JACKKNIFE_GROUPS.min(profiles.len());
    let se_replicate = if groups >= 2 {
        let slopes: Vec<f64> = (0..groups)
            .map(|g| {
                let sub: Vec<&CoveringProfile> =
                    all.iter().enumerate().filter(|(i, _)| i % groups != g).map(|(_, p)| *p).collect();
                fit(&sub).map(|f| f.0.slope)
            })
            .collect::<Result<_>>()?;
        let m = slopes.iter().sum::<f64>() / groups as f64;
        let g = groups as f64;
        ((g - 1.0) / g * slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>()).sqrt()
    } else {
        0.0
    };
    let half = 1.96 * (se_replicate.powi(2) + full.slope_se.powi(2)).sqrt();
    Ok(DimensionEstimate {
        slope: full.slope,
        intercept: full.intercept,
        se_replicate,
        se_fit: full.slope_se,
        band: (full.slope - half, full.slope + half),
        n_runs: profiles.len(),
    })
}

/// Covering profiles of `cfg.n_samples` independent trees.
pub fn simulate_profiles(
    model: &FragModel,
    start_type: usize,
    floor: f64,
    levels: &[f64],
    cfg: &McConfig,
) -> Result<Vec<CoveringProfile>> {
    mc_collect(cfg, |rng, _| {
        let run = simulate_mass_tree(model, (1.0, start_type), TreeStop::floor(floor), rng)?;
        covering_profile(&build_tree(&run)?, levels)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragmentation::{BlockEvent, Child};
    use crate::malthus::fixtures::*;
    use crate::malthus::{biased_bernstein, malthusian_exponent, truncate_model};
    use crate::map_model::Scaled;
    use crate::map_sim::replica_rng;
    use crate::moments::positive_integer_moments;

    fn run(model: &FragModel, floor: f64, seed: u64) -> MassTreeRun {
        simulate_mass_tree(model, (1.0, 0), TreeStop::floor(floor), &mut replica_rng(seed, 0)).unwrap()
    }

    #[test]
    fn binary_tree_structure() {
        let model = FragModel::new(-1.0, binary()).unwrap();
        let tree = build_tree(&run(&model, 1e-3, 1)).unwrap();
        assert_eq!(mu_subtree_mass(&tree, 0), 1.0);
        for leaf in tree.leaves() {
            assert!(leaf.censored);
            // 2^{-10} < 1e-3 <= 2^{-9}
            assert_eq!(tree.depth(leaf.id), 10);
            assert_eq!(leaf.mass, 2f64.powi(-10));
        }
        for n in &tree.nodes {
            if !n.children.is_empty() {
                let s: f64 = n.children.iter().map(|&c| tree.nodes[c].mass).sum();
                assert_eq!(s, n.mass);
                assert!(n.death > n.birth);
            }
        }
    }

    #[test]
    fn lossy_children_carry_less() {
        let m = measure(vec![vec![atom(1.0, &[(0.5, 0), (0.25, 0)])]]);
        let model = FragModel::new(-0.5, m).unwrap();
        let tree = build_tree(&run(&model, 1e-2, 2)).unwrap();
        let root = tree.root();
        let s: f64 = root.children.iter().map(|&c| mu_subtree_mass(&tree, c)).sum();
        assert!((s - 0.75).abs() < 1e-15);
        // μ is nonincreasing along every path
        for n in &tree.nodes {
            if let Some(p) = n.parent {
                assert!(n.mass <= tree.nodes[p].mass);
            }
        }
    }

    #[test]
    fn inconsistent_streams_rejected() {
        let ev = |block, time, children: Vec<Child>| BlockEvent {
            time,
            block,
            mass: 1.0,
            ty: 0,
            kind: if children.is_empty() { EventKind::Censor } else { EventKind::Dislocation { atom: 0 } },
            children,
        };
        let base = MassTreeRun {
            alpha: -1.0,
            root_mass: 1.0,
            root_type: 0,
            stop: TreeStop::floor(0.1),
            events: vec![ev(1, 1.0, vec![]), ev(0, 1.0, vec![Child { id: 1, mass: 0.05, ty: 0 }])],
        };
        assert!(matches!(build_tree(&base), Err(Error::Data(_))));
        let empty = MassTreeRun { events: vec![], ..base.clone() };
        assert!(build_tree(&empty).is_err());
        let ok = MassTreeRun { events: base.events.iter().rev().cloned().collect(), ..base };
        assert!(build_tree(&ok).is_ok());
    }

    #[test]
    fn binary_covering_counts() {
        let model = FragModel::new(-1.0, binary()).unwrap();
        let tree = build_tree(&run(&model, 1e-4, 3)).unwrap();
        let levels: Vec<f64> = (0..=13).map(|g| 2f64.powi(-g)).collect();
        let prof = covering_profile(&tree, &levels).unwrap();
        for (g, &c) in prof.counts.iter().enumerate() {
            assert_eq!(c, 1 << g);
        }
        assert!(covering_profile(&tree, &[1e-5]).is_err());
    }

    #[test]
    fn golden_covering_mean() {
        let g = golden();
        let p_star = malthusian_exponent(&g).unwrap().p_star;
        let model = FragModel::new(-1.0, g).unwrap();
        let levels = [0.01, 0.003];
        let profs = simulate_profiles(&model, 0, 1e-3, &levels, &McConfig::new(1_000, 4)).unwrap();
        for (k, &l) in levels.iter().enumerate() {
            // Σ mass^{p*} over the first-passage front is exactly 1, so
            // count · level^{p*} sits between 1 and 4^{p*}.
            let w: Welford = profs.iter().map(|p| p.counts[k] as f64 * l.powf(p_star)).collect();
            assert!(w.mean >= 1.0 - 1e-12 && w.mean <= 4f64.powf(p_star) + 1e-12, "{w:?}");
        }
        for p in &profs {
            assert!(p.counts.windows(2).all(|c| c[0] <= c[1]));
        }
    }

    #[test]
    fn dimension_of_binary() {
        let levels = geometric_levels(1e-2, 1e-4, 41);
        for (alpha, target) in [(-1.0, 1.0), (-0.5, 2.0)] {
            let model = FragModel::new(alpha, binary()).unwrap();
            let profs = simulate_profiles(&model, 0, 1e-4, &levels, &McConfig::new(50, 5)).unwrap();
            let est = dimension_estimate(&profs, alpha).unwrap();
            assert!((est.slope - target).abs() < 0.15, "{est:?}");
        }
    }

    #[test]
    fn dimension_of_random_fixture() {
        let m = two_atoms();
        let p_star = malthusian_exponent(&m).unwrap().p_star;
        let model = FragModel::new(-1.0, m).unwrap();
        let levels = geometric_levels(1e-2, 1e-4, 41);
        let profs = simulate_profiles(&model, 0, 1e-4, &levels, &McConfig::new(300, 6)).unwrap();
        let est = dimension_estimate(&profs, -1.0).unwrap();
        assert!((est.slope - p_star).abs() < 0.15, "{est:?} vs {p_star}");
        assert!(est.band.0 < est.slope && est.slope < est.band.1);
    }

    #[test]
    fn dimension_preconditions() {
        let model = FragModel::new(-1.0, binary()).unwrap();
        let tree = build_tree(&run(&model, 1e-4, 7)).unwrap();
        let narrow = covering_profile(&tree, &[0.1, 0.05, 0.01 * 1.5]).unwrap();
        assert!(dimension_estimate(&[narrow], -1.0).is_err());
        let two = covering_profile(&tree, &[0.1, 1e-3]).unwrap();
        assert!(dimension_estimate(&[two], -1.0).is_err());
    }

    #[test]
    fn truncation_lowers_dimension() {
        let m = dusty();
        let levels = geometric_levels(1e-1, 1e-3, 21);
        let mut last = 0.0;
        for n in [2, 5] {
            let t = truncate_model(&m, n, 1.0 / n as f64).unwrap();
            let p = malthusian_exponent(&t).unwrap().p_star;
            assert!(p > last);
            last = p;
        }
        // Conditioning on survival is not needed for a first-passage count of the mean.
        let model = FragModel::new(-1.0, truncate_model(&m, 5, 0.2).unwrap()).unwrap();
        let profs = simulate_profiles(&model, 0, 1e-3, &levels, &McConfig::new(2_000, 8)).unwrap();
        assert!(dimension_estimate(&profs, -1.0).is_ok());
    }

    #[test]
    fn leaf_heights_match_closed_form() {
        let b = binary();
        let d = malthusian_exponent(&b).unwrap();
        let model = FragModel::new(-1.0, b.clone()).unwrap();
        let h = leaf_sample_mu_star(&model, &d, 0, &McConfig::new(50_000, 9)).unwrap();
        let m1: Welford = h.iter().copied().collect();
        let m2: Welford = h.iter().map(|x| x * x).collect();
        let closed = positive_integer_moments(&Scaled { inner: biased_bernstein(&b, &d), factor: 1.0 }, 2).unwrap();
        assert!((closed[2].values[0] - 16.0 / 3.0).abs() < 1e-10);
        assert!((m1.mean - closed[1].values[0]).abs() < 3.0 * m1.std_error());
        assert!((m2.mean - closed[2].values[0]).abs() < 3.0 * m2.std_error());
    }

    #[test]
    fn conservative_leaf_heights_are_uniform_leaves() {
        // With p* = 1 and b = 1 the biased measure is μ itself: a μ-chosen
        // leaf of the binary tree has height distributed like the spine, up
        // to the floor correction 1e-3 · E[ζ].
        let b = binary();
        let d = malthusian_exponent(&b).unwrap();
        let model = FragModel::new(-1.0, b).unwrap();
        let spine = leaf_sample_mu_star(&model, &d, 0, &McConfig::new(4_000, 10)).unwrap();
        let trees = mc_collect(&McConfig::new(4_000, 11), |rng, _| {
            let run = simulate_mass_tree(&model, (1.0, 0), TreeStop::floor(1e-3), rng)?;
            let tree = build_tree(&run)?;
            // Leaf chosen by μ: walk down choosing children by mass.
            let mut id = 0;
            while !tree.nodes[id].children.is_empty() {
                let ch = &tree.nodes[id].children;
                id = ch[rand::Rng::random_range(rng, 0..ch.len())];
            }
            Ok(tree.nodes[id].death)
        })
        .unwrap();
        let (_, p) = crate::stats::ks_two_sample(&spine, &trees);
        assert!(p > 1e-3, "KS p = {p}");
    }

    #[test]
    fn extinction_tail_is_exponential() {
        let model = FragModel::new(-1.0, binary()).unwrap();
        let (rep, z) = extinction_time_stats(&model, 0, 1e-3, &McConfig::new(2_000, 12)).unwrap();
        assert!(z.iter().all(|x| x.is_finite()));
        assert!(rep.band.1 < 0.0, "{rep:?}");
        assert!(rep.warning.is_none());

        let (fine, _) = extinction_time_stats(&model, 0, 1e-4, &McConfig::new(2_000, 13)).unwrap();
        let se = (rep.std_error.powi(2) + fine.std_error.powi(2)).sqrt();
        assert!((fine.mean - rep.mean).abs() <= rep.floor_correction + 3.0 * se);

        let slow = FragModel::new(-0.25, binary()).unwrap();
        let (s, _) = extinction_time_stats(&slow, 0, 1e-3, &McConfig::new(2_000, 14)).unwrap();
        assert!((s.mean - rep.mean) / (s.std_error.powi(2) + rep.std_error.powi(2)).sqrt() > 3.0);
    }

    #[test]
    fn thin_tail_warns() {
        let model = FragModel::new(-1.0, binary()).unwrap();
        let (rep, _) = extinction_time_stats(&model, 0, 1e-2, &McConfig::new(200, 15)).unwrap();
        assert!(rep.warning.is_some());
    }
}
