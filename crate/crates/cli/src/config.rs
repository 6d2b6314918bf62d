//! Run configuration: one JSON document per run. Types are 1-based here and
//! converted to 0-based when the model is built.

use mapfrag_core::fragmentation::{DislocationAtom, DislocationMeasure, FragModel, MassPartition};
use mapfrag_core::map_model::{JumpAtom, JumpLaw, LevyAtom, MapParams, SubordinatorParams};
use mapfrag_core::matrix::MlMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub command: CommandSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Map(MapSpec),
    Fragmentation(FragSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Rows of the generator.
    pub generator: Vec<Vec<f64>>,
    pub subordinators: Vec<SubordinatorSpec>,
    /// `jumps[i][j]`: atoms of the jump law on a switch `i → j`; empty or
    /// absent means no jump.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jumps: Option<Vec<Vec<Vec<JumpAtomSpec>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorSpec {
    #[serde(default)]
    pub kill: f64,
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub levy: Vec<LevySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevySpec {
    pub size: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpAtomSpec {
    pub size: f64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragSpec {
    #[serde(default)]
    pub alpha: f64,
    /// Per-type erosion rates; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erosion: Option<Vec<f64>>,
    /// `measures[i]`: atoms of the dislocation measure of type `i + 1`.
    pub measures: Vec<Vec<AtomSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: f64,
    /// `[mass, type]` pairs.
    pub parts: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CommandSpec {
    MapMoments(MapMomentsCmd),
    DeathMoments(DeathMomentsCmd),
    Malthus(MalthusCmd),
    Simulate(SimulateCmd),
    Tree(TreeCmd),
    Dimension(DimensionCmd),
    Validate(ValidateCmd),
}

impl CommandSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CommandSpec::MapMoments(_) => "map-moments",
            CommandSpec::DeathMoments(_) => "death-moments",
            CommandSpec::Malthus(_) => "malthus",
            CommandSpec::Simulate(_) => "simulate",
            CommandSpec::Tree(_) => "tree",
            CommandSpec::Dimension(_) => "dimension",
            CommandSpec::Validate(_) => "validate",
        }
    }

    /// Whether the command draws random numbers.
    pub fn samples(&self) -> bool {
        match self {
            CommandSpec::MapMoments(c) => c.k_min.is_some(),
            CommandSpec::DeathMoments(c) => c.monte_carlo,
            CommandSpec::Malthus(_) | CommandSpec::Validate(_) => false,
            CommandSpec::Simulate(_) | CommandSpec::Tree(_) | CommandSpec::Dimension(_) => true,
        }
    }
}

fn three() -> u32 {
    3
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapMomentsCmd {
    /// Positive orders `0..=k_max`.
    #[serde(default = "three")]
    pub k_max: u32,
    /// Negative orders `-1..=k_min`, anchored on a Monte Carlo `N(−1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<i32>,
    /// Also report the exponential-moment radius.
    #[serde(default)]
    pub radius: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeathMomentsCmd {
    pub p: Vec<f64>,
    /// Add Monte Carlo rows next to the exact ones.
    #[serde(default)]
    pub monte_carlo: bool,
}

fn default_grid() -> usize {
    21
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MalthusCmd {
    /// Number of points of the `λ` grid on `[0, 1]`.
    #[serde(default = "default_grid")]
    pub grid: usize,
    /// Exponent for the `(M_q)` integral.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    Map,
    Tree,
    Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCmd {
    pub kind: SimKind,
    #[serde(default = "one")]
    pub start_type: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Ground-set size for `partition`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeCmd {
    pub floor: f64,
    #[serde(default = "one")]
    pub start_type: usize,
    /// Also fit the extinction-time tail.
    #[serde(default)]
    pub extinction: bool,
}

fn default_levels() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionCmd {
    pub floor: f64,
    /// Largest covering level; defaults to `100 · floor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_hi: Option<f64>,
    #[serde(default = "default_levels")]
    pub n_levels: usize,
    #[serde(default = "one")]
    pub start_type: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateCmd {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
    /// Line-delimited records; `simulate` only.
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File to write; standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

/// The validated model.
#[derive(Debug, Clone)]
pub enum Model {
    Map(MapParams),
    Fragmentation(FragModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Map(m) => m.dim(),
            Model::Fragmentation(f) => f.dim(),
        }
    }
}

/// Parses and validates a config document.
pub fn parse_config(doc: &str) -> Result<(RunConfig, Model), CliError> {
    let cfg: RunConfig = serde_json::from_str(doc).map_err(|e| CliError::Config(e.to_string()))?;
    let model = build_model(&cfg.model)?;
    check_command(&cfg, &model)?;
    Ok((cfg, model))
}

fn at(path: &str) -> impl Fn(mapfrag_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{path}: {e}"))
}

fn to_type(t: usize, k: usize, path: &str) -> Result<usize, CliError> {
    if t == 0 || t > k {
        return Err(CliError::Config(format!("{path}: type {t} outside 1..={k}")));
    }
    Ok(t - 1)
}

pub fn build_model(spec: &ModelSpec) -> Result<Model, CliError> {
    match spec {
        ModelSpec::Map(m) => build_map(m).map(Model::Map),
        ModelSpec::Fragmentation(f) => build_frag(f).map(Model::Fragmentation),
    }
}

fn build_map(m: &MapSpec) -> Result<MapParams, CliError> {
    let generator = MlMatrix::from_rows(&m.generator).map_err(at("model.map.generator"))?;
    let k = generator.dim();
    let subs = m
        .subordinators
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let levy = s.levy.iter().map(|a| LevyAtom { size: a.size, rate: a.rate }).collect();
            SubordinatorParams::new(s.kill, s.drift, levy)
                .map_err(|e| CliError::Config(format!("model.map.subordinators[{i}]: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let jumps = match &m.jumps {
        None => (0..k).map(|_| (0..k).map(|_| JumpLaw::dirac_zero()).collect()).collect(),
        Some(rows) => {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(CliError::Config(format!("model.map.jumps: expected a {k}x{k} table")));
            }
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, atoms)| {
                            if atoms.is_empty() {
                                return Ok(JumpLaw::dirac_zero());
                            }
                            JumpLaw::new(atoms.iter().map(|a| JumpAtom { size: a.size, prob: a.prob }).collect())
                                .map_err(|e| CliError::Config(format!("model.map.jumps[{i}][{j}]: {e}")))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    MapParams::new(generator, subs, jumps).map_err(at("model.map"))
}

fn build_frag(f: &FragSpec) -> Result<FragModel, CliError> {
    let k = f.measures.len();
    let atoms = f
        .measures
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(a, atom)| {
                    let path = format!("model.fragmentation.measures[{i}][{a}]");
                    let parts = atom.parts.iter().map(|&(m, t)| Ok((m, to_type(t, k, &path)?))).collect::<Result<
                        Vec<_>,
                        CliError,
                    >>(
                    )?;
                    let partition = MassPartition::new(parts).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                    Ok(DislocationAtom { weight: atom.weight, partition })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let erosion = f.erosion.clone().unwrap_or_else(|| vec![0.0; k]);
    let measure = DislocationMeasure::new(atoms, erosion).map_err(at("model.fragmentation"))?;
    FragModel::new(f.alpha, measure).map_err(at("model.fragmentation"))
}

fn check_command(cfg: &RunConfig, model: &Model) -> Result<(), CliError> {
    let k = model.dim();
    let frag_only = |name: &str| match model {
        Model::Fragmentation(_) => Ok(()),
        Model::Map(_) => Err(CliError::Config(format!("command.{name} needs a fragmentation model"))),
    };
    match &cfg.command {
        CommandSpec::Malthus(c) => {
            frag_only("malthus")?;
            if c.grid < 2 {
                return Err(CliError::Config("command.malthus.grid must be at least 2".into()));
            }
        }
        CommandSpec::Tree(c) => {
            frag_only("tree")?;
            to_type(c.start_type, k, "command.tree.start_type")?;
        }
        CommandSpec::Dimension(c) => {
            frag_only("dimension")?;
            to_type(c.start_type, k, "command.dimension.start_type")?;
        }
        CommandSpec::Simulate(c) => {
            to_type(c.start_type, k, "command.simulate.start_type")?;
            if c.kind != SimKind::Map {
                frag_only("simulate")?;
            }
            if c.kind == SimKind::Partition && (c.n.is_none() || c.horizon.is_none()) {
                return Err(CliError::Config("command.simulate: partition runs need n and horizon".into()));
            }
        }
        CommandSpec::MapMoments(c) => {
            if let Some(k_min) = c.k_min {
                if k_min > -1 {
                    return Err(CliError::Config("command.map-moments.k_min must be <= -1".into()));
                }
            }
        }
        CommandSpec::DeathMoments(_) | CommandSpec::Validate(_) => {}
    }
    if cfg.output.format == Format::Jsonl && !matches!(cfg.command, CommandSpec::Simulate(_)) {
        return Err(CliError::Config("output.format jsonl is only available for simulate".into()));
    }
    if cfg.command.samples() {
        match cfg.mc {
            None => {
                return Err(CliError::Config(format!(
                    "command {} samples: the mc section is required",
                    cfg.command.name()
                )))
            }
            Some(mc) if mc.n_samples == 0 => return Err(CliError::Config("mc.n_samples must be positive".into())),
            _ => {}
        }
    }
    Ok(())
}
