//! Exact event-driven simulation of finite-activity MAP paths, closed-form
//! path functionals, Lamperti time changes and a reproducible parallel
//! Monte Carlo harness.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_model::MapParams;
use crate::matrix;
use crate::stats::Welford;

/// Absolute tolerance on the unsimulated tail of an exponential functional.
pub const TAIL_TOL: f64 = 1e-10;
/// Replicas per Monte Carlo work unit. Fixed so results do not depend on the
/// worker count.
pub const MC_CHUNK: u64 = 4096;
/// Event budget per path; exceeding it means the stop rule is unreachable.
pub const MAX_PATH_EVENTS: u64 = 50_000_000;

/// Stop rule for [`simulate_map_path`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Stop {
    /// Run until time `t` (or death, if earlier).
    Horizon(f64),
    /// Run until death.
    Death,
    /// Run until `ξ >= level` (or death, if earlier).
    Level(f64),
}

/// Piece of path with constant type and linear position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_time: f64,
    pub duration: f64,
    pub start_position: f64,
    pub slope: f64,
    pub ty: usize,
}

impl Segment {
    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration
    }
    pub fn end_position(&self) -> f64 {
        self.start_position + self.slope * self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpCause {
    LevyAtom,
    TypeChange { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathJump {
    pub time: f64,
    pub size: f64,
    pub cause: JumpCause,
}

/// Simulated trajectory of `(ξ, J)`. Segments are contiguous in time; jumps
/// sit at segment boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPath {
    pub segments: Vec<Segment>,
    pub jumps: Vec<PathJump>,
    /// Killing time, if the path was killed.
    pub death_time: Option<f64>,
    /// Time at which simulation stopped (death time when killed).
    pub end_time: f64,
    /// Position just before the end (`ξ_{T−}` for killed paths).
    pub end_position: f64,
    /// Type at the end; `None` once killed.
    pub final_type: Option<usize>,
    /// Smallest drift over all types of the model, for tail bounds.
    pub min_drift: f64,
}

impl MapPath {
    pub fn is_dead(&self) -> bool {
        self.death_time.is_some()
    }

    /// Type just before death, or the final type.
    pub fn last_type(&self) -> usize {
        self.segments.last().map(|s| s.ty).expect("paths have at least one segment")
    }

    /// `(ξ_s, J_s)`; `None` after death or past the simulated range.
    pub fn state_at(&self, s: f64) -> Option<(f64, usize)> {
        if s > self.end_time || (self.is_dead() && s >= self.end_time) {
            return None;
        }
        // Right-continuous: the first segment whose [start, end) contains s.
        let idx = self.segments.partition_point(|seg| seg.end_time() <= s);
        match self.segments.get(idx) {
            Some(seg) => Some((seg.start_position + seg.slope * (s - seg.start_time), seg.ty)),
            // s == end_time on an undead path.
            None => Some((self.end_position, self.final_type?)),
        }
    }
}

#[derive(Debug, Clone)]
struct TypeTable {
    drift: f64,
    kill: f64,
    levy_rate: f64,
    levy_cum: Vec<f64>,
    levy_sizes: Vec<f64>,
    chain_rate: f64,
    chain_cum: Vec<f64>,
    chain_to: Vec<usize>,
    // Per target type: cumulative probabilities and sizes of the jump law.
    jump_cum: Vec<Vec<f64>>,
    jump_sizes: Vec<Vec<f64>>,
}

/// Precomputed event tables for repeated path simulation of one model.
#[derive(Debug, Clone)]
pub struct MapSimulator {
    tables: Vec<TypeTable>,
    min_drift: f64,
    killing_reach: Vec<bool>,
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    w.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    let target = u * cum.last().copied().unwrap_or(0.0);
    cum.partition_point(|&c| c <= target).min(cum.len() - 1)
}

impl MapSimulator {
    pub fn new(params: &MapParams) -> Self {
        let k = params.dim();
        let g = params.generator();
        let tables = (0..k)
            .map(|i| {
                let s = &params.subordinators()[i];
                let chain_to: Vec<usize> = (0..k).filter(|&j| j != i && g[(i, j)] > 0.0).collect();
                TypeTable {
                    drift: s.drift,
                    kill: s.kill,
                    levy_rate: s.jump_rate(),
                    levy_cum: cumulative(s.levy_atoms.iter().map(|a| a.rate)),
                    levy_sizes: s.levy_atoms.iter().map(|a| a.size).collect(),
                    chain_rate: chain_to.iter().map(|&j| g[(i, j)]).sum(),
                    chain_cum: cumulative(chain_to.iter().map(|&j| g[(i, j)])),
                    jump_cum: (0..k)
                        .map(|j| cumulative(params.jump_law(i, j).atoms().iter().map(|a| a.prob)))
                        .collect(),
                    jump_sizes: (0..k)
                        .map(|j| params.jump_law(i, j).atoms().iter().map(|a| a.size).collect())
                        .collect(),
                    chain_to,
                }
            })
            .collect();
        let min_drift = params.subordinators().iter().map(|s| s.drift).fold(f64::INFINITY, f64::min);
        let killing_reach = (0..k)
            .map(|i| {
                matrix::reachable_from(g.as_matrix(), i)
                    .iter()
                    .enumerate()
                    .any(|(j, &r)| r && params.subordinators()[j].kill > 0.0)
            })
            .collect();
        MapSimulator { tables, min_drift, killing_reach }
    }

    pub fn dim(&self) -> usize {
        self.tables.len()
    }

    pub fn simulate<R: Rng + ?Sized>(&self, start_type: usize, stop: Stop, rng: &mut R) -> Result<MapPath> {
        self.simulate_from(start_type, 0.0, stop, rng)
    }

    /// Path started at `ξ_0 = start_position`.
    pub fn simulate_from<R: Rng + ?Sized>(
        &self,
        start_type: usize,
        start_position: f64,
        stop: Stop,
        rng: &mut R,
    ) -> Result<MapPath> {
        if start_type >= self.dim() {
            return Err(Error::param(format!("start type {} out of range 1..={}", start_type + 1, self.dim())));
        }
        let (horizon, level) = match stop {
            Stop::Horizon(h) => {
                if !(h > 0.0) {
                    return Err(Error::param(format!("horizon {h} must be > 0")));
                }
                (h, f64::INFINITY)
            }
            Stop::Death => {
                if !self.killing_reach[start_type] {
                    return Err(Error::param(format!(
                        "no killing reachable from type {}; supply a horizon",
                        start_type + 1
                    )));
                }
                (f64::INFINITY, f64::INFINITY)
            }
            Stop::Level(l) => (f64::INFINITY, l),
        };

        let mut path = MapPath {
            segments: Vec::new(),
            jumps: Vec::new(),
            death_time: None,
            end_time: 0.0,
            end_position: start_position,
            final_type: Some(start_type),
            min_drift: self.min_drift,
        };
        let (mut t, mut x, mut ty) = (0.0f64, start_position, start_type);
        if x >= level {
            path.segments.push(Segment { start_time: 0.0, duration: 0.0, start_position: x, slope: 0.0, ty });
            return Ok(path);
        }
        for _ in 0..MAX_PATH_EVENTS {
            let tab = &self.tables[ty];
            let rate = tab.levy_rate + tab.chain_rate + tab.kill;
            let wait = if rate > 0.0 { rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
            let to_level = if tab.drift > 0.0 { (level - x) / tab.drift } else { f64::INFINITY };
            let to_horizon = horizon - t;
            if to_level.min(to_horizon) <= wait {
                if !to_level.min(to_horizon).is_finite() {
                    return Err(Error::param(format!(
                        "type {} is absorbing and static; the stop rule is never met",
                        ty + 1
                    )));
                }
                let d = to_level.min(to_horizon);
                let seg = Segment { start_time: t, duration: d, start_position: x, slope: tab.drift, ty };
                path.segments.push(seg);
                path.end_time = t + d;
                path.final_type = Some(ty);
                path.end_position = if to_level <= to_horizon { level } else { seg.end_position() };
                return Ok(path);
            }
            let seg = Segment { start_time: t, duration: wait, start_position: x, slope: tab.drift, ty };
            path.segments.push(seg);
            t += wait;
            x = seg.end_position();

            let u = rng.random::<f64>() * rate;
            if u < tab.levy_rate {
                let a = pick(&tab.levy_cum, rng.random());
                let size = tab.levy_sizes[a];
                x += size;
                path.jumps.push(PathJump { time: t, size, cause: JumpCause::LevyAtom });
            } else if u < tab.levy_rate + tab.chain_rate {
                let to = tab.chain_to[pick(&tab.chain_cum, rng.random())];
                let size = tab.jump_sizes[to][pick(&tab.jump_cum[to], rng.random())];
                x += size;
                path.jumps.push(PathJump { time: t, size, cause: JumpCause::TypeChange { from: ty, to } });
                ty = to;
            } else {
                path.death_time = Some(t);
                path.end_time = t;
                path.end_position = x;
                path.final_type = None;
                return Ok(path);
            }
            if x >= level {
                path.end_time = t;
                path.end_position = x;
                path.final_type = Some(ty);
                return Ok(path);
            }
        }
        Err(Error::numeric("path exceeded the event budget", MAX_PATH_EVENTS as f64))
    }
}

/// Simulate one exact path. For repeated sampling build a [`MapSimulator`] once.
pub fn simulate_map_path<R: Rng + ?Sized>(
    params: &MapParams,
    start_type: usize,
    stop: Stop,
    rng: &mut R,
) -> Result<MapPath> {
    MapSimulator::new(params).simulate(start_type, stop, rng)
}

/// Stop rule sufficient to evaluate `∫ e^{−a ξ}` to [`TAIL_TOL`]: death if
/// every type can reach killing, otherwise a level beyond which the
/// remaining integral is below tolerance.
pub fn functional_stop(params: &MapParams, a: f64) -> Result<Stop> {
    let sim = MapSimulator::new(params);
    if sim.killing_reach.iter().all(|&r| r) {
        return Ok(Stop::Death);
    }
    if !(sim.min_drift > 0.0) {
        return Err(Error::param("exponential functional needs killing or positive drift in every type"));
    }
    Ok(Stop::Level(level_for_tail(a, sim.min_drift, TAIL_TOL)))
}

/// Smallest level `L` with `e^{−a L} / (a c_min) <= tol`.
pub fn level_for_tail(a: f64, min_drift: f64, tol: f64) -> f64 {
    ((1.0 / (a * min_drift * tol)).ln() / a).max(0.0)
}

/// `∫_0^{end} e^{−a ξ_t} dt` over the simulated range, and a bound on the rest.
pub fn exponential_functional_partial(path: &MapPath, a: f64) -> (f64, f64) {
    let value = path
        .segments
        .iter()
        .map(|s| {
            let c = a * s.slope;
            let head = (-a * s.start_position).exp();
            if c > 0.0 {
                // (1 − e^{−c d}) / c, written to stay accurate for small c d.
                head * -(-c * s.duration).exp_m1() / c
            } else {
                head * s.duration
            }
        })
        .sum();
    let tail = if path.is_dead() {
        0.0
    } else if path.min_drift > 0.0 {
        (-a * path.end_position).exp() / (a * path.min_drift)
    } else {
        f64::INFINITY
    };
    (value, tail)
}

/// `I_{aξ} = ∫_0^∞ e^{−a ξ_t} dt` for a killed path or one run far enough.
pub fn exponential_functional(path: &MapPath, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::param(format!("scale a = {a} must be > 0")));
    }
    let (v, tail) = exponential_functional_partial(path, a);
    if tail > TAIL_TOL {
        return Err(Error::Truncation { bound: tail });
    }
    Ok(v)
}

/// Time-changed path `X_t = e^{−ξ_{τ(t)}}`, `L_t = J_{τ(t)}`, with
/// `τ(t) = inf{u : ∫_0^u e^{α ξ_r} dr > t}`.
#[derive(Debug, Clone)]
pub struct LampertiPath<'a> {
    path: &'a MapPath,
    alpha: f64,
    /// Clock value at the start of each segment.
    clock_starts: Vec<f64>,
    end_clock: f64,
}

/// State of the time-changed process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LampertiState {
    Alive {
        mass: f64,
        ty: usize,
    },
    /// Cemetery: `X = 0`, type marker 0 in the external convention.
    Absorbed,
}

fn segment_clock(alpha: f64, s: &Segment) -> f64 {
    let head = (alpha * s.start_position).exp();
    let r = alpha * s.slope;
    if r != 0.0 {
        head * (r * s.duration).exp_m1() / r
    } else {
        head * s.duration
    }
}

pub fn lamperti_transform(path: &MapPath, alpha: f64) -> LampertiPath<'_> {
    let mut clock_starts = Vec::with_capacity(path.segments.len());
    let mut acc = 0.0;
    for s in &path.segments {
        clock_starts.push(acc);
        acc += segment_clock(alpha, s);
    }
    LampertiPath { path, alpha, clock_starts, end_clock: acc }
}

impl LampertiPath<'_> {
    /// Clock time at which simulation of the underlying path ended. For a
    /// killed path this is the absorption time.
    pub fn end_clock(&self) -> f64 {
        self.end_clock
    }

    /// Absorption time when known exactly.
    pub fn absorption_time(&self) -> Option<f64> {
        self.path.is_dead().then_some(self.end_clock)
    }

    /// `τ(t)` for `t` below the end of the simulated clock.
    pub fn inverse_clock(&self, t: f64) -> Option<f64> {
        if !(t >= 0.0) || t >= self.end_clock {
            return None;
        }
        let i = self.clock_starts.partition_point(|&c| c <= t) - 1;
        let s = &self.path.segments[i];
        let tau = t - self.clock_starts[i];
        let r = self.alpha * s.slope;
        let u = if r != 0.0 {
            (r * tau * (-self.alpha * s.start_position).exp()).ln_1p() / r
        } else {
            tau * (-self.alpha * s.start_position).exp()
        };
        Some(s.start_time + u.min(s.duration))
    }

    pub fn state_at(&self, t: f64) -> Result<LampertiState> {
        if t < 0.0 {
            return Err(Error::param(format!("time {t} must be >= 0")));
        }
        if let Some(u) = self.inverse_clock(t) {
            let (xi, ty) = self.path.state_at(u).expect("inverse clock stays in range");
            return Ok(LampertiState::Alive { mass: (-xi).exp(), ty });
        }
        if self.path.is_dead() {
            return Ok(LampertiState::Absorbed);
        }
        if self.alpha < 0.0 {
            // Remaining clock is ∫ e^{−|α| ξ}, bounded like the exponential functional.
            let (_, tail) = exponential_functional_partial(self.path, -self.alpha);
            if tail <= TAIL_TOL && t >= self.end_clock + tail {
                return Ok(LampertiState::Absorbed);
            }
            return Err(Error::Truncation { bound: tail });
        }
        Err(Error::Data(format!("time {t} lies beyond the simulated clock {}", self.end_clock)))
    }
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McConfig { n_samples, seed, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − target|` in standard errors; infinite if the error is 0 and
    /// the mean differs.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Generator for replica `index`: keyed by `(seed, index)` only.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn chunk_bounds(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(MC_CHUNK)).map(|c| (c * MC_CHUNK, ((c + 1) * MC_CHUNK).min(n))).collect()
}

fn wrap(index: u64) -> impl Fn(Error) -> Error {
    move |e| Error::Replica { index, source: Box::new(e) }
}

/// Run `sampler` on every replica and return the outputs in replica order.
pub fn mc_collect<T, F>(cfg: &McConfig, sampler: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> Result<T> + Sync,
{
    let chunks = chunk_bounds(cfg.n_samples);
    let parts: Vec<Result<Vec<T>>> = in_pool(cfg.workers, || {
        chunks
            .par_iter()
            .map(|&(lo, hi)| (lo..hi).map(|i| sampler(&mut replica_rng(cfg.seed, i), i).map_err(wrap(i))).collect())
            .collect()
    })?;
    let mut out = Vec::with_capacity(cfg.n_samples as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Mean and standard error of a vector-valued sampler of length `dim`.
pub fn mc_estimate_vec<F>(cfg: &McConfig, dim: usize, sampler: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut ChaCha8Rng, u64) -> Result<Vec<f64>> + Sync,
{
    if cfg.n_samples < 2 {
        return Err(Error::param("Monte Carlo needs at least 2 samples"));
    }
    let chunks = chunk_bounds(cfg.n_samples);
    let parts: Vec<Result<Vec<Welford>>> = in_pool(cfg.workers, || {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = vec![Welford::new(); dim];
                for i in lo..hi {
                    let v = sampler(&mut replica_rng(cfg.seed, i), i).map_err(wrap(i))?;
                    if v.len() != dim {
                        return Err(wrap(i)(Error::Data(format!(
                            "sampler returned {} values, expected {dim}",
                            v.len()
                        ))));
                    }
                    for (w, x) in acc.iter_mut().zip(v) {
                        w.push(x);
                    }
                }
                Ok(acc)
            })
            .collect()
    })?;
    let mut total = vec![Welford::new(); dim];
    for p in parts {
        for (t, w) in total.iter_mut().zip(p?) {
            t.merge(&w);
        }
    }
    Ok(total
        .into_iter()
        .map(|w| McEstimate { mean: w.mean, std_error: w.std_error(), n_samples: w.n, seed: cfg.seed })
        .collect())
}

pub fn mc_estimate<F>(cfg: &McConfig, sampler: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng, u64) -> Result<f64> + Sync,
{
    Ok(mc_estimate_vec(cfg, 1, |rng, i| sampler(rng, i).map(|x| vec![x]))?[0])
}
