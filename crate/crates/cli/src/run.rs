//! Command dispatch.

use mapfrag_core::fragmentation::{
    simulate_homogeneous_partition, simulate_mass_tree, tagged_bernstein, tagged_map, BlockEvent, EventKind, FragModel,
    TreeStop,
};
use mapfrag_core::malthus::{check_mq, gw_extinction, lambda_grid, malthusian_exponent, GwModel};
use mapfrag_core::map_model::{BernsteinMatrix, MapParams};
use mapfrag_core::map_sim::{mc_collect, simulate_map_path, McConfig, Stop};
use mapfrag_core::matrix::{self, MlMatrix};
use mapfrag_core::moments::{
    death_moment_vector, exponential_moment_radius, mc_death_moment, negative_first_moment, negative_integer_moments,
    positive_integer_moments, MomentVector,
};
use mapfrag_core::stats::Welford;
use mapfrag_core::tree::{build_tree, dimension_estimate, extinction_time_stats, geometric_levels, simulate_profiles};
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;
use crate::output::{Cell, Report, Table};

/// Result of a run; `failure` is set when `validate` finds a violated invariant.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome { report, failure: None }
    }
}

const MAX_TREE_NODES: usize = 10_000_000;

pub fn run(cfg: &RunConfig, model: &Model, mc: Option<McConfig>) -> Result<Outcome, CliError> {
    let need_mc = || mc.ok_or_else(|| CliError::Config("the mc section with a seed is required".into()));
    match &cfg.command {
        CommandSpec::MapMoments(c) => map_moments(model, c, if c.k_min.is_some() { Some(need_mc()?) } else { None }),
        CommandSpec::DeathMoments(c) => death_moments(model, c, if c.monte_carlo { Some(need_mc()?) } else { None }),
        CommandSpec::Malthus(c) => malthus(frag(model)?, c),
        CommandSpec::Simulate(c) => simulate(model, c, &need_mc()?),
        CommandSpec::Tree(c) => tree(frag(model)?, c, &need_mc()?),
        CommandSpec::Dimension(c) => dimension(frag(model)?, c, &need_mc()?),
        CommandSpec::Validate(_) => Ok(validate(model)),
    }
}

fn frag(model: &Model) -> Result<&FragModel, CliError> {
    match model {
        Model::Fragmentation(f) => Ok(f),
        Model::Map(_) => Err(CliError::Config("this command needs a fragmentation model".into())),
    }
}

/// The MAP itself, or the tagged-fragment MAP of a fragmentation.
fn as_map(model: &Model) -> Result<MapParams, CliError> {
    match model {
        Model::Map(p) => Ok(p.clone()),
        Model::Fragmentation(f) => Ok(tagged_map(&f.measure)?),
    }
}

fn moment_rows(t: &mut Table, mv: &MomentVector, method: &str) {
    for (i, v) in mv.values.iter().enumerate() {
        let se = mv.std_errors.as_ref().map_or(Cell::Empty, |s| Cell::Float(s[i]));
        t.push(vec![Cell::Float(mv.order), Cell::ty(i), Cell::Float(*v), Cell::Str(method.into()), se]);
    }
}

const MOMENT_COLUMNS: [&str; 5] = ["p", "type", "value", "method", "std_error"];

fn map_moments(model: &Model, c: &MapMomentsCmd, mc: Option<McConfig>) -> Result<Outcome, CliError> {
    let params = as_map(model)?;
    let mut t = Table::new(&MOMENT_COLUMNS);
    let positive = positive_integer_moments(&params, c.k_max)?;
    for mv in &positive {
        moment_rows(&mut t, mv, "exact");
    }
    let radius = if c.radius {
        let r = exponential_moment_radius(&params)?;
        t.notes.push(format!("exponential_moment_radius={}", crate::output::format_float(r)));
        Some(r)
    } else {
        None
    };
    let mut negative = Value::Null;
    if let (Some(k_min), Some(mc)) = (c.k_min, mc) {
        let first = negative_first_moment(&params, &mc)?;
        let direct = first.direct_vector();
        moment_rows(&mut t, &direct, "mc");
        let via = MomentVector {
            order: -1.0,
            values: first.via_log.clone(),
            std_errors: Some(first.via_log_se.clone()),
            exact: false,
        };
        moment_rows(&mut t, &via, "mc-log");
        let chain = negative_integer_moments(&params, k_min, &direct)?;
        for mv in chain.iter().skip(1) {
            moment_rows(&mut t, mv, "recursion");
        }
        t.notes.push(format!("negative_first_moment_consistent={}", first.consistent));
        negative = json!({"first": first, "recursion": chain});
    }
    let results = json!({"positive": positive, "radius": radius, "negative": negative});
    Ok(Report { table: t, results }.into())
}

fn death_moments(model: &Model, c: &DeathMomentsCmd, mc: Option<McConfig>) -> Result<Outcome, CliError> {
    let params = as_map(model)?;
    let mut t = Table::new(&MOMENT_COLUMNS);
    let mut exact = Vec::new();
    let mut sampled = Vec::new();
    for &p in &c.p {
        let mv = death_moment_vector(&params, p)?;
        moment_rows(&mut t, &mv, "exact");
        exact.push(mv);
        if let Some(mc) = mc {
            let mv = MomentVector::estimated(p, &mc_death_moment(&params, p, &mc)?);
            moment_rows(&mut t, &mv, "mc");
            sampled.push(mv);
        }
    }
    Ok(Report { table: t, results: json!({"exact": exact, "monte_carlo": sampled}) }.into())
}

fn malthus(model: &FragModel, c: &MalthusCmd) -> Result<Outcome, CliError> {
    let measure = &model.measure;
    let data = malthusian_exponent(measure)?;
    let ps: Vec<f64> = (0..c.grid).map(|k| k as f64 / (c.grid - 1) as f64).collect();
    let lambdas = lambda_grid(measure, &ps)?;
    let mut t = Table::new(&["quantity", "index", "value"]);
    t.push(vec![Cell::Str("p_star".into()), Cell::Empty, Cell::Float(data.p_star)]);
    for (i, &b) in data.b.iter().enumerate() {
        t.push(vec![Cell::Str("b".into()), Cell::ty(i), Cell::Float(b)]);
    }
    for (&p, &l) in ps.iter().zip(&lambdas) {
        t.push(vec![Cell::Str("lambda".into()), Cell::Float(p), Cell::Float(l)]);
    }
    let mq = match c.q {
        Some(q) => {
            let v = check_mq(measure, q, &data)?;
            for (i, &x) in v.iter().enumerate() {
                t.push(vec![Cell::Str("mq".into()), Cell::ty(i), Cell::Float(x)]);
            }
            Some(v)
        }
        None => None,
    };
    let grid: Vec<Value> = ps.iter().zip(&lambdas).map(|(p, l)| json!({"p": p, "lambda": l})).collect();
    let results = json!({
        "p_star": data.p_star,
        "b": data.b,
        "lambda_at_root": data.lambda_at_root,
        "eigen_residual": data.eigen_residual,
        "lambda_grid": grid,
        "mq": mq,
    });
    Ok(Report { table: t, results }.into())
}

const EVENT_COLUMNS: [&str; 9] = ["run", "time", "block", "mass", "type", "kind", "atom", "element", "children"];

fn event_row(run: u64, ev: &BlockEvent) -> Vec<Cell> {
    let (kind, atom, element) = match ev.kind {
        EventKind::Dislocation { atom } => ("dislocation", Cell::Int(atom as i64 + 1), Cell::Empty),
        EventKind::Erosion { element } => ("erosion", Cell::Empty, Cell::Int(element as i64 + 1)),
        EventKind::Censor => ("censor", Cell::Empty, Cell::Empty),
        EventKind::Horizon => ("horizon", Cell::Empty, Cell::Empty),
    };
    // id:mass:type, separated by ';'
    let children: Vec<String> =
        ev.children.iter().map(|c| format!("{}:{}:{}", c.id, crate::output::format_float(c.mass), c.ty + 1)).collect();
    vec![
        Cell::Int(run as i64),
        Cell::Float(ev.time),
        Cell::Int(ev.block as i64),
        Cell::Float(ev.mass),
        Cell::ty(ev.ty),
        Cell::Str(kind.into()),
        atom,
        element,
        Cell::Str(children.join(";")),
    ]
}

fn simulate(model: &Model, c: &SimulateCmd, mc: &McConfig) -> Result<Outcome, CliError> {
    let start = c.start_type - 1;
    match c.kind {
        SimKind::Map => {
            let params = as_map(model)?;
            let stop = match c.horizon {
                Some(h) => Stop::Horizon(h),
                None if params.has_killing() => Stop::Death,
                None => return Err(CliError::Config("command.simulate: a MAP without killing needs a horizon".into())),
            };
            let paths = mc_collect(mc, |rng, _| simulate_map_path(&params, start, stop, rng))?;
            let mut t = Table::new(&["run", "record", "time", "position", "slope", "type"]);
            for (r, path) in paths.iter().enumerate() {
                for seg in &path.segments {
                    t.push(vec![
                        Cell::Int(r as i64),
                        Cell::Str("segment".into()),
                        Cell::Float(seg.start_time),
                        Cell::Float(seg.start_position),
                        Cell::Float(seg.slope),
                        Cell::ty(seg.ty),
                    ]);
                }
                let (record, ty) = match path.final_type {
                    Some(ty) if !path.is_dead() => ("end", Cell::ty(ty)),
                    _ => ("death", Cell::Empty),
                };
                t.push(vec![
                    Cell::Int(r as i64),
                    Cell::Str(record.into()),
                    Cell::Float(path.end_time),
                    Cell::Float(path.end_position),
                    Cell::Empty,
                    ty,
                ]);
            }
            let results = json!({"records": t.records()});
            Ok(Report { table: t, results }.into())
        }
        SimKind::Tree => {
            let f = frag(model)?;
            let stop = TreeStop { floor: c.floor, horizon: c.horizon, max_nodes: MAX_TREE_NODES };
            let runs = mc_collect(mc, |rng, _| simulate_mass_tree(f, (1.0, start), stop, rng))?;
            let mut t = Table::new(&EVENT_COLUMNS);
            for (r, run) in runs.iter().enumerate() {
                for ev in &run.events {
                    t.push(event_row(r as u64, ev));
                }
            }
            let results = json!({"records": t.records()});
            Ok(Report { table: t, results }.into())
        }
        SimKind::Partition => {
            let f = frag(model)?;
            if f.alpha != 0.0 {
                return Err(CliError::Config(
                    "command.simulate: partition runs are homogeneous; set alpha to 0".into(),
                ));
            }
            let (n, h) = (c.n.unwrap_or(1), c.horizon.unwrap_or(0.0));
            let runs = mc_collect(mc, |rng, _| simulate_homogeneous_partition(&f.measure, start, n, h, rng))?;
            let mut t = Table::new(&EVENT_COLUMNS);
            let mut finals = Vec::new();
            for (r, run) in runs.iter().enumerate() {
                for ev in &run.events {
                    t.push(event_row(r as u64, ev));
                }
                let blocks: Vec<Value> = run
                    .partition
                    .blocks
                    .iter()
                    .map(|b| {
                        json!({
                            "elements": b.elements.iter().map(|e| e + 1).collect::<Vec<_>>(),
                            "type": b.ty.map(|t| t + 1),
                        })
                    })
                    .collect();
                finals.push(json!({"run": r, "blocks": blocks}));
            }
            let results = json!({"records": t.records(), "partitions": finals});
            Ok(Report { table: t, results }.into())
        }
    }
}

fn tree(model: &FragModel, c: &TreeCmd, mc: &McConfig) -> Result<Outcome, CliError> {
    let start = c.start_type - 1;
    let stop = TreeStop { floor: Some(c.floor), horizon: None, max_nodes: MAX_TREE_NODES };
    let trees = mc_collect(mc, |rng, _| build_tree(&simulate_mass_tree(model, (1.0, start), stop, rng)?))?;
    let mut t = Table::new(&["run", "id", "parent", "mass", "type", "birth", "death", "censored"]);
    let mut summaries = Vec::new();
    for (r, tr) in trees.iter().enumerate() {
        for n in &tr.nodes {
            t.push(vec![
                Cell::Int(r as i64),
                Cell::Int(n.id as i64),
                n.parent.map_or(Cell::Empty, |p| Cell::Int(p as i64)),
                Cell::Float(n.mass),
                Cell::ty(n.ty),
                Cell::Float(n.birth),
                Cell::Float(n.death),
                Cell::Str(n.censored.to_string()),
            ]);
        }
        summaries
            .push(json!({"run": r, "height": tr.height(), "nodes": tr.nodes.len(), "leaves": tr.leaves().count()}));
    }
    let extinction = if c.extinction {
        let (rep, _) = extinction_time_stats(model, start, c.floor, mc)?;
        t.notes.push(format!(
            "tail_slope={} band=[{}, {}]",
            crate::output::format_float(rep.tail_slope),
            crate::output::format_float(rep.band.0),
            crate::output::format_float(rep.band.1)
        ));
        serde_json::to_value(rep).map_err(|e| CliError::Io(e.to_string()))?
    } else {
        Value::Null
    };
    let results = json!({"trees": summaries, "nodes": t.records(), "extinction": extinction});
    Ok(Report { table: t, results }.into())
}

fn dimension(model: &FragModel, c: &DimensionCmd, mc: &McConfig) -> Result<Outcome, CliError> {
    let hi = c.level_hi.unwrap_or(100.0 * c.floor);
    if c.n_levels < 3 {
        return Err(CliError::Config("command.dimension.n_levels must be at least 3".into()));
    }
    let levels = geometric_levels(hi, c.floor, c.n_levels);
    let profiles = simulate_profiles(model, c.start_type - 1, c.floor, &levels, mc)?;
    let est = dimension_estimate(&profiles, model.alpha)?;
    let target = malthusian_exponent(&model.measure).ok().map(|d| d.p_star / model.alpha.abs());
    let mut t = Table::new(&["level", "radius", "mean_count", "std_error"]);
    let mut means = Vec::new();
    for k in 0..levels.len() {
        let w: Welford = profiles.iter().map(|p| p.counts[k] as f64).collect();
        t.push(vec![
            Cell::Float(levels[k]),
            Cell::Float(profiles[0].radii[k]),
            Cell::Float(w.mean),
            Cell::Float(w.std_error()),
        ]);
        means.push(w.mean);
    }
    let ff = crate::output::format_float;
    t.notes.push(format!("slope={} band=[{}, {}]", ff(est.slope), ff(est.band.0), ff(est.band.1)));
    if let Some(target) = target {
        t.notes.push(format!("target={}", ff(target)));
    }
    let results = json!({"estimate": est, "target": target, "levels": levels, "mean_counts": means});
    Ok(Report { table: t, results }.into())
}

struct Checks(Vec<(String, bool, String)>);

impl Checks {
    fn add(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.0.push((name.to_owned(), ok, detail.into()));
    }

    fn record(&mut self, name: &str, r: Result<String, String>) {
        match r {
            Ok(d) => self.add(name, true, d),
            Err(d) => self.add(name, false, d),
        }
    }
}

const VALIDATE_GRID: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 5.0];

fn validate_bernstein<B: BernsteinMatrix>(checks: &mut Checks, phi: &B) {
    let mut ml = true;
    let mut bottoms = Vec::new();
    for &p in &VALIDATE_GRID {
        let m = phi.eval(p);
        ml &= MlMatrix::new(-m.clone()).is_ok();
        bottoms.push(matrix::bottom_eigenvalue(&m));
    }
    checks.add("minus_bernstein_is_ml", ml, format!("p in {VALIDATE_GRID:?}"));
    let bottoms: Result<Vec<f64>, _> = bottoms.into_iter().collect();
    checks.record(
        "bottom_eigenvalue_nondecreasing",
        match bottoms {
            Ok(b) if b.windows(2).all(|w| w[1] >= w[0] - 1e-12) => Ok(format!("{b:?}")),
            Ok(b) => Err(format!("{b:?}")),
            Err(e) => Err(e.to_string()),
        },
    );
    let mut sub = true;
    let mut semigroup = 0.0f64;
    for &p in &VALIDATE_GRID {
        let m = -phi.eval(p);
        match (matrix::mat_exp(&m, 0.5), matrix::mat_exp(&m, 1.0)) {
            (Ok(h), Ok(f)) => {
                sub &= f.iter().all(|&x| x >= -1e-12) && f.column_sum().iter().all(|&s| s <= 1.0 + 1e-12);
                semigroup = semigroup.max((&h * &h - &f).amax());
            }
            _ => sub = false,
        }
    }
    checks.add("semigroup_substochastic", sub, "exp(-Phi(p)) entries >= 0, row sums <= 1");
    checks.add("semigroup_property", semigroup <= 1e-10, format!("max defect {semigroup:e}"));
}

fn validate(model: &Model) -> Outcome {
    let mut checks = Checks(Vec::new());
    checks.add("model_parses", true, "generator, masses and types validated at parse time");
    match model {
        Model::Map(params) => {
            validate_bernstein(&mut checks, params);
            if params.has_killing() {
                checks.record(
                    "death_moment_zero_is_one",
                    death_moment_vector(params, 0.0).map_err(|e| e.to_string()).and_then(|v| {
                        let d = v.values.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
                        if d <= 1e-12 {
                            Ok(format!("max defect {d:e}"))
                        } else {
                            Err(format!("max defect {d:e}"))
                        }
                    }),
                );
            }
        }
        Model::Fragmentation(f) => {
            let measure = &f.measure;
            let tb = tagged_bernstein(measure);
            validate_bernstein(&mut checks, &tb);
            checks.record(
                "tagged_map_matches_matrix",
                tagged_map(measure).map_err(|e| e.to_string()).and_then(|m| {
                    let d = VALIDATE_GRID
                        .iter()
                        .map(|&p| (m.bernstein_matrix(p - 1.0) - tb.eval(p - 1.0)).amax())
                        .fold(0.0, f64::max);
                    if d <= 1e-12 {
                        Ok(format!("max defect {d:e}"))
                    } else {
                        Err(format!("max defect {d:e}"))
                    }
                }),
            );
            let ps: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
            checks.record(
                "lambda_increasing",
                lambda_grid(measure, &ps).map_err(|e| e.to_string()).and_then(|l| {
                    if l.windows(2).all(|w| w[1] > w[0]) {
                        Ok("21-point grid on [0, 1]".into())
                    } else {
                        Err(format!("{l:?}"))
                    }
                }),
            );
            match malthusian_exponent(measure) {
                Ok(d) => {
                    let ok =
                        d.lambda_at_root.abs() <= 1e-10 && d.eigen_residual <= 1e-10 && d.b.iter().all(|&x| x > 0.0);
                    checks.add("malthus_root", ok, format!("p*={} residual={:e}", d.p_star, d.eigen_residual));
                    if measure.is_conservative() {
                        checks.add(
                            "conservative_p_star_is_one",
                            (d.p_star - 1.0).abs() <= 1e-10,
                            format!("p*={}", d.p_star),
                        );
                    }
                }
                Err(e) => checks.add("malthus_root", true, format!("not in scope: {e}")),
            }
            checks.record(
                "extinction_fixed_point",
                GwModel::from_generations(measure)
                    .and_then(|g| gw_extinction(&g))
                    .map(|e| format!("q={:?} residual={:e}", e.q, e.residual))
                    .map_err(|e| e.to_string()),
            );
        }
    }
    let mut t = Table::new(&["check", "passed", "detail"]);
    for (name, ok, detail) in &checks.0 {
        t.push(vec![Cell::Str(name.clone()), Cell::Str(ok.to_string()), Cell::Str(detail.clone())]);
    }
    let failed: Vec<&str> = checks.0.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    let results = json!({"checks": t.records(), "passed": failed.is_empty()});
    Outcome { report: Report { table: t, results }, failure: (!failed.is_empty()).then(|| failed.join(", ")) }
}
