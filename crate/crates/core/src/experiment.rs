//! Config-driven experiments: JSON configs, tasks, named presets and CSV output.
//!
//! Every task writes one CSV document: a `# svd-csv v1 task=<task>` line, a
//! column header, then rows. Metric quantities are exact rationals printed as
//! `p/q`; lists inside a field are joined with `;`.

use std::fmt::{self, Display, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;

use crate::entropy::{
    count_or_bracket, cover_spanning_orbits, cover_spanning_points, entropy_rate, greedy_separated_stream,
    pack_separated_orbits, pack_separated_points, Count, CountKind, Mode, SearchOptions, DEFAULT_NODE_BUDGET,
};
use crate::error::{Error, Result};
use crate::expansivity::{
    build_separated_family, cw_check, default_family, family_horizon, split_continuum, uniform_horizon,
};
use crate::orbit::{constant_sequence_shift_demo, dn_matrix, enumerate_segments, semimetric_dn, OrbitSegment};
use crate::space::hausdorff;
use crate::specification::{
    default_opens, implication_audit, mixing_check, orbit_spec_check, pointwise_spec_check, AuditGrid,
    BlockSpecInstance, SpecInstance,
};
use crate::svmap::{BuiltinMap, SetValuedMap};
use crate::{parse_length, Continuum, Length, MetricSpace, PointSet};

/// Default bound on orbit enumeration.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Entropy,
    EntropySe,
    DnMatrix,
    CwCheck,
    Horizon,
    Split,
    SeparatedFamily,
    SpecCheck,
    OrbitSpec,
    Mixing,
    Audit,
    Reproduce,
}

impl Task {
    pub const ALL: [Task; 12] = [
        Task::Entropy,
        Task::EntropySe,
        Task::DnMatrix,
        Task::CwCheck,
        Task::Horizon,
        Task::Split,
        Task::SeparatedFamily,
        Task::SpecCheck,
        Task::OrbitSpec,
        Task::Mixing,
        Task::Audit,
        Task::Reproduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Entropy => "entropy",
            Task::EntropySe => "entropy-se",
            Task::DnMatrix => "dn-matrix",
            Task::CwCheck => "cw-check",
            Task::Horizon => "horizon",
            Task::Split => "split",
            Task::SeparatedFamily => "separated-family",
            Task::SpecCheck => "spec-check",
            Task::OrbitSpec => "orbit-spec",
            Task::Mixing => "mixing",
            Task::Audit => "audit",
            Task::Reproduce => "reproduce",
        }
    }
}

impl Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Circle { q: usize },
    Torus { q: usize },
    /// Distance table as `"p/q"` strings.
    Explicit { table: Vec<Vec<String>>, adjacency_radius: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    ConstantFull,
    Identity,
    Rotation { k: usize },
    Doubling,
    RotationInterval { k: usize },
    BlurredDoubling { delta: String },
    AnosovMimic,
    SingleValued { f: Vec<usize> },
    /// `(point, images)` pairs, one per point of the net.
    Explicit { images: Vec<(usize, Vec<usize>)> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub space: SpaceConfig,
    pub map: MapConfig,
    #[serde(default)]
    pub label: Option<String>,
}

/// A subset of the net: the whole space, an arc/square, or explicit points.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Full,
    Arc { start: usize, count: usize },
    Points { points: Vec<usize> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    pub states: Vec<usize>,
    pub start: usize,
}

/// One experiment. Unused fields are ignored by tasks that do not need them.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: Option<String>,
    #[serde(default)]
    pub system: Option<SystemConfig>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub n_min: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub eps: Vec<String>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub cap: Option<usize>,
    #[serde(default)]
    pub node_budget: Option<u64>,
    #[serde(default)]
    pub delta: Option<String>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub min_diameter: Option<String>,
    #[serde(default)]
    pub max_diameter: Option<String>,
    #[serde(default)]
    pub set: Option<SetConfig>,
    #[serde(default)]
    pub c: Option<String>,
    #[serde(default)]
    pub targets: Vec<(usize, usize)>,
    #[serde(default)]
    pub gap: Option<usize>,
    #[serde(default)]
    pub gaps: Vec<usize>,
    #[serde(default)]
    pub max_targets: Option<usize>,
    #[serde(default)]
    pub blocks: Vec<BlockConfig>,
    #[serde(default)]
    pub period: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
}

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub exact: bool,
    pub cap: Option<usize>,
}

/// Result of a run: the CSV document, a one-line summary, and whether an
/// invariant or audit violation was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub task: Task,
    pub csv: String,
    pub summary: String,
    pub violation: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.violation)
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn length(field: &str, s: &str) -> Result<Length> {
    parse_length(s).map_err(|_| Error::Config(format!("{field}: cannot parse {s:?} as a rational")))
}

fn required<T: Clone>(field: &str, v: &Option<T>) -> Result<T> {
    v.clone().ok_or_else(|| Error::Config(format!("missing field {field:?}")))
}

impl SystemConfig {
    pub fn build(&self) -> Result<SetValuedMap> {
        self.build_inner().map_err(config_err)
    }

    fn build_inner(&self) -> Result<SetValuedMap> {
        let space = Arc::new(match &self.space {
            SpaceConfig::Circle { q } => MetricSpace::circle(*q)?,
            SpaceConfig::Torus { q } => MetricSpace::torus(*q)?,
            SpaceConfig::Explicit { table, adjacency_radius } => {
                let table: Vec<Vec<Length>> = table
                    .iter()
                    .map(|row| row.iter().map(|s| length("table", s)).collect())
                    .collect::<Result<_>>()?;
                MetricSpace::explicit(&table, length("adjacency_radius", adjacency_radius)?)?
            }
        });
        let builtin = |kind: BuiltinMap| SetValuedMap::builtin(space.clone(), &kind);
        let map = match &self.map {
            MapConfig::ConstantFull => builtin(BuiltinMap::ConstantFull)?,
            MapConfig::Identity => builtin(BuiltinMap::Identity)?,
            MapConfig::Rotation { k } => builtin(BuiltinMap::Rotation { k: *k })?,
            MapConfig::Doubling => builtin(BuiltinMap::Doubling)?,
            MapConfig::RotationInterval { k } => builtin(BuiltinMap::RotationInterval { k: *k })?,
            MapConfig::BlurredDoubling { delta } => builtin(BuiltinMap::BlurredDoubling {
                delta: length("map.delta", delta)?,
            })?,
            MapConfig::AnosovMimic => builtin(BuiltinMap::AnosovMimic)?,
            MapConfig::SingleValued { f } => SetValuedMap::single_valued(space.clone(), f)?,
            MapConfig::Explicit { images } => {
                let mut table = vec![None; space.len()];
                for (x, img) in images {
                    let slot = table
                        .get_mut(*x)
                        .ok_or_else(|| Error::Config(format!("image table names point {x} outside the net")))?;
                    if slot.replace(img.clone()).is_some() {
                        return Err(Error::Config(format!("point {x} listed twice in the image table")));
                    }
                }
                let table = table
                    .into_iter()
                    .enumerate()
                    .map(|(x, img)| img.ok_or_else(|| Error::Config(format!("no image given for point {x}"))))
                    .collect::<Result<_>>()?;
                SetValuedMap::from_images(space.clone(), table)?
            }
        };
        let label = match &self.label {
            Some(l) => l.clone(),
            None => system_label(&map, &self.space),
        };
        Ok(map.with_label(label))
    }
}

fn system_label(map: &SetValuedMap, space: &SpaceConfig) -> String {
    let where_ = match space {
        SpaceConfig::Circle { q } => format!("circle{q}"),
        SpaceConfig::Torus { q } => format!("torus{q}"),
        SpaceConfig::Explicit { table, .. } => format!("explicit{}", table.len()),
    };
    format!("{}@{where_}", map.label())
}

impl SetConfig {
    fn build(&self, space: &Arc<MetricSpace>) -> Result<PointSet> {
        match self {
            SetConfig::Full => Ok(PointSet::full(space)),
            SetConfig::Arc { start, count } => Ok(Continuum::arc(space, *start, *count)?.into_set()),
            SetConfig::Points { points } => PointSet::new(space, points.iter().copied()),
        }
        .map_err(config_err)
    }
}

/// Small CSV builder with a fixed column list.
struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    fn new(task: &str, columns: &[&str]) -> Self {
        let mut text = format!("# svd-csv v1 task={task}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self {
            text,
            columns: columns.len(),
        }
    }

    fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            // Fields never carry separators; nested lists use `;`.
            self.text.extend(f.chars().map(|c| if c == ',' || c == '\n' { ';' } else { c }));
        }
        self.text.push('\n');
    }
}

fn join<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for (i, x) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        let _ = write!(out, "{x}");
    }
    out
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".into(), |x| x.to_string())
}

fn rate_str(r: f64) -> String {
    // Exact zero prints without a sign so repeated runs stay byte-identical.
    if r == 0.0 {
        "0.000000".into()
    } else {
        format!("{r:.6}")
    }
}

/// Runs one task. Configuration problems come back as [`Error::Config`];
/// other errors are failures during the run.
pub fn run_task(task: Task, config: &ExperimentConfig, overrides: Overrides) -> Result<Outcome> {
    if let Some(t) = &config.task {
        let named: Task = t.parse()?;
        if named != task {
            return Err(Error::Config(format!("config is for task {named}, not {task}")));
        }
    }
    if task == Task::Reproduce {
        let preset = required("preset", &config.preset)?;
        return reproduce(&preset);
    }
    let system = config
        .system
        .as_ref()
        .ok_or_else(|| Error::Config("missing field \"system\"".into()))?;
    let map = system.build()?;
    let p = Params::new(config, overrides)?;
    match task {
        Task::Entropy => entropy_task(&map, &p, false),
        Task::EntropySe => entropy_task(&map, &p, true),
        Task::DnMatrix => dn_matrix_task(&map, &p),
        Task::CwCheck => cw_task(&map, config, &p),
        Task::Horizon => horizon_task(&map, config, &p),
        Task::Split => split_task(&map, config),
        Task::SeparatedFamily => family_task(&map, config, &p),
        Task::SpecCheck => spec_task(&map, config, &p),
        Task::OrbitSpec => orbit_spec_task(&map, config, &p),
        Task::Mixing => mixing_task(&map, &p),
        Task::Audit => audit_task(&map, config, &p),
        Task::Reproduce => unreachable!("handled above"),
    }
}

/// Validated numeric parameters shared by the tasks.
struct Params {
    n_min: usize,
    n_max: usize,
    eps: Vec<Length>,
    mode: Mode,
    cap: usize,
    budget: u64,
    horizon: Option<usize>,
}

impl Params {
    fn new(c: &ExperimentConfig, o: Overrides) -> Result<Self> {
        let n_min = c.n_min.unwrap_or(1);
        let n_max = c.n_max.unwrap_or(n_min);
        if n_min == 0 || n_max < n_min {
            return Err(Error::Config(format!("bad n range {n_min}..={n_max}")));
        }
        let eps: Vec<Length> = c.eps.iter().map(|s| length("eps", s)).collect::<Result<_>>()?;
        if eps.iter().any(|&e| e <= Length::from_integer(0)) {
            return Err(Error::Config("eps values must be positive".into()));
        }
        let cap = o.cap.or(c.cap).unwrap_or(DEFAULT_CAP);
        if cap == 0 {
            return Err(Error::Config("cap must be at least 1".into()));
        }
        Ok(Self {
            n_min,
            n_max,
            eps,
            mode: if o.exact { Mode::Exact } else { c.mode.unwrap_or(Mode::Greedy) },
            cap,
            budget: c.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
            horizon: c.horizon,
        })
    }

    fn eps_nonempty(&self) -> Result<&[Length]> {
        if self.eps.is_empty() {
            Err(Error::Config("eps grid must be non-empty".into()))
        } else {
            Ok(&self.eps)
        }
    }

    fn options(&self) -> SearchOptions {
        SearchOptions {
            mode: self.mode,
            node_budget: self.budget,
        }
    }

    fn horizon(&self) -> Result<usize> {
        required("horizon", &self.horizon)
    }
}

/// `lhs <= rhs` is certainly false.
fn certainly_greater(lhs: &Count, rhs: &Count) -> bool {
    lhs.lower() > rhs.upper()
}

fn entropy_task(map: &SetValuedMap, p: &Params, points_only: bool) -> Result<Outcome> {
    let task = if points_only { Task::EntropySe } else { Task::Entropy };
    let eps_list = p.eps_nonempty()?;
    let mut csv = Csv::new(task.name(), &["system", "kind", "eps", "n", "value", "mode", "exhaustive"]);
    let kinds: &[CountKind] = if points_only {
        &[CountKind::SeparatedPoints, CountKind::SpanningPoints]
    } else {
        &[
            CountKind::SeparatedOrbits,
            CountKind::SpanningOrbits,
            CountKind::SeparatedPoints,
            CountKind::SpanningPoints,
        ]
    };
    let mut violations = Vec::new();
    let mut rates = Vec::new();
    for &eps in eps_list {
        let mut curves: Vec<Vec<(usize, Option<Count>)>> = vec![Vec::new(); kinds.len()];
        for n in p.n_min..=p.n_max {
            let counts = counts_at(map, p, n, eps, points_only)?;
            for (k, kind) in kinds.iter().enumerate() {
                let (value, exhaustive) = counts.get(*kind);
                csv.row(&[
                    map.label().into(),
                    kind.to_string(),
                    eps.to_string(),
                    n.to_string(),
                    opt(value),
                    p.mode.to_string(),
                    exhaustive.to_string(),
                ]);
                curves[k].push((n, value));
            }
            if p.mode == Mode::Exact {
                for (lhs, rhs) in [
                    (CountKind::SpanningPoints, CountKind::SeparatedPoints),
                    (CountKind::SeparatedPoints, CountKind::SeparatedOrbits),
                    (CountKind::SpanningOrbits, CountKind::SeparatedOrbits),
                ] {
                    if let (Some(l), Some(r)) = (counts.get(lhs).0, counts.get(rhs).0) {
                        if certainly_greater(&l, &r) {
                            violations.push(format!("{lhs}_{n}({eps})={l} > {rhs}_{n}({eps})={r}"));
                        }
                    }
                }
            }
        }
        for (k, kind) in kinds.iter().enumerate() {
            let exact: Option<Vec<(usize, u64)>> = curves[k]
                .iter()
                .map(|(n, v)| v.and_then(|c| c.exact()).map(|c| (*n, c as u64)))
                .collect();
            let rate = match exact {
                Some(points) if points.len() >= 2 => Some(entropy_rate(&points)?),
                _ => None,
            };
            csv.row(&[
                map.label().into(),
                format!("rate_{kind}"),
                eps.to_string(),
                format!("{}-{}", p.n_min, p.n_max),
                rate.map_or_else(|| "none".into(), rate_str),
                p.mode.to_string(),
                "-".into(),
            ]);
            if let Some(r) = rate {
                rates.push(format!("rate_{kind}({eps})={}", rate_str(r)));
            }
        }
    }
    for v in &violations {
        csv.row(&[
            map.label().into(),
            "violation".into(),
            "-".into(),
            "-".into(),
            v.clone(),
            p.mode.to_string(),
            "-".into(),
        ]);
    }
    let summary = format!(
        "{task} {}: {} {}",
        map.label(),
        if rates.is_empty() { "no rates".into() } else { rates.join(" ") },
        if violations.is_empty() { "ok".to_string() } else { format!("VIOLATIONS {}", violations.len()) }
    );
    Ok(Outcome {
        task,
        csv: csv.text,
        summary,
        violation: !violations.is_empty(),
    })
}

struct CountsAt {
    s: (Option<Count>, bool),
    r: (Option<Count>, bool),
    big_s: Option<Count>,
    big_r: Option<Count>,
}

impl CountsAt {
    fn get(&self, kind: CountKind) -> (Option<Count>, bool) {
        match kind {
            CountKind::SeparatedOrbits => self.s,
            CountKind::SpanningOrbits => self.r,
            CountKind::SeparatedPoints => (self.big_s, true),
            CountKind::SpanningPoints => (self.big_r, true),
        }
    }
}

fn counts_at(map: &SetValuedMap, p: &Params, n: usize, eps: Length, points_only: bool) -> Result<CountsAt> {
    let opts = p.options();
    let big_s = Some(count_or_bracket(
        CountKind::SeparatedPoints,
        pack_separated_points(map, n, eps, opts),
    )?);
    let big_r = Some(count_or_bracket(
        CountKind::SpanningPoints,
        cover_spanning_points(map, n, eps, opts),
    )?);
    if points_only {
        return Ok(CountsAt {
            s: (None, false),
            r: (None, false),
            big_s,
            big_r,
        });
    }
    let (s, r) = match p.mode {
        Mode::Exact => {
            let set = enumerate_segments(map, None, n, p.cap)?;
            if !set.is_exhaustive() {
                return Err(Error::Config(format!(
                    "exact counts need all orbits of length {n}; more than cap = {} exist",
                    p.cap
                )));
            }
            let s = count_or_bracket(CountKind::SeparatedOrbits, pack_separated_orbits(&set, eps, opts))?;
            let r = count_or_bracket(CountKind::SpanningOrbits, cover_spanning_orbits(&set, eps, opts))?;
            ((Some(s), true), (Some(r), true))
        }
        Mode::Greedy => {
            let (packed, exhaustive) = greedy_separated_stream(map, None, n, eps, p.cap)?;
            let s = (Some(Count::Value(packed.cardinality())), exhaustive);
            let r = if exhaustive {
                let set = enumerate_segments(map, None, n, p.cap)?;
                let c = cover_spanning_orbits(&set, eps, Mode::Greedy)?;
                (Some(Count::Value(c.cardinality())), true)
            } else {
                (None, false)
            };
            (s, r)
        }
    };
    Ok(CountsAt { s, r, big_s, big_r })
}

fn dn_matrix_task(map: &SetValuedMap, p: &Params) -> Result<Outcome> {
    let mut csv = Csv::new(Task::DnMatrix.name(), &["n", "x", "y", "d"]);
    for n in p.n_min..=p.n_max {
        let m = dn_matrix(map, n)?;
        for x in 0..m.len() {
            for y in 0..m.len() {
                csv.row(&[n.to_string(), x.to_string(), y.to_string(), m.get(x, y).to_string()]);
            }
        }
    }
    Ok(Outcome {
        task: Task::DnMatrix,
        csv: csv.text,
        summary: format!(
            "dn-matrix {}: {} points, n = {}..={}",
            map.label(),
            map.len(),
            p.n_min,
            p.n_max
        ),
        violation: false,
    })
}

/// Default family filtered by optional diameter bounds.
fn family_from(map: &SetValuedMap, config: &ExperimentConfig) -> Result<Vec<Continuum>> {
    let space = map.space();
    let min = match &config.min_diameter {
        Some(s) => length("min_diameter", s)?,
        None => space.unit() * space.adjacency_units() as i64,
    };
    let max = config.max_diameter.as_deref().map(|s| length("max_diameter", s)).transpose()?;
    let family: Vec<Continuum> = default_family(space, min)
        .map_err(config_err)?
        .into_iter()
        .filter(|a| max.is_none_or(|m| a.diameter() <= m))
        .collect();
    if family.is_empty() {
        return Err(Error::Config("the diameter bounds leave an empty continuum family".into()));
    }
    Ok(family)
}

fn cw_task(map: &SetValuedMap, config: &ExperimentConfig, p: &Params) -> Result<Outcome> {
    let delta = length("delta", &required("delta", &config.delta)?)?;
    let horizon = p.horizon()?;
    let family = family_from(map, config)?;
    let report = cw_check(map, &family, delta, horizon).map_err(config_err)?;
    let mut csv = Csv::new(
        Task::CwCheck.name(),
        &["continuum", "first", "size", "diameter", "witness_n", "max_diam_seen", "pass"],
    );
    for (i, (a, r)) in family.iter().zip(&report.results).enumerate() {
        csv.row(&[
            i.to_string(),
            a.members()[0].to_string(),
            a.len().to_string(),
            a.diameter().to_string(),
            opt(r.witness_n),
            r.max_diam_seen.to_string(),
            r.witness_n.is_some().to_string(),
        ]);
    }
    let worst = report.results.iter().filter_map(|r| r.witness_n).max();
    csv.row(&[
        "all".into(),
        "-".into(),
        family.len().to_string(),
        "-".into(),
        opt(worst),
        "-".into(),
        report.pass.to_string(),
    ]);
    Ok(Outcome {
        task: Task::CwCheck,
        csv: csv.text,
        summary: format!(
            "cw-check {} delta={delta} horizon={horizon}: pass={} ({} of {} continua never exceeded delta)",
            map.label(),
            report.pass,
            report.failures().len(),
            family.len()
        ),
        violation: false,
    })
}

fn horizon_task(map: &SetValuedMap, config: &ExperimentConfig, p: &Params) -> Result<Outcome> {
    let delta = length("delta", &required("delta", &config.delta)?)?;
    let n_max = p.horizon()?;
    let mut csv = Csv::new(Task::Horizon.name(), &["delta", "eps", "n_max", "horizon"]);
    let mut found = Vec::new();
    for &eps in p.eps_nonempty()? {
        let n = uniform_horizon(map, delta, eps, None, n_max).map_err(config_err)?;
        csv.row(&[delta.to_string(), eps.to_string(), n_max.to_string(), opt(n)]);
        found.push(format!("N({eps})={}", opt(n)));
    }
    Ok(Outcome {
        task: Task::Horizon,
        csv: csv.text,
        summary: format!("horizon {} delta={delta}: {}", map.label(), found.join(" ")),
        violation: false,
    })
}

fn split_task(map: &SetValuedMap, config: &ExperimentConfig) -> Result<Outcome> {
    let c = length("c", &required("c", &config.c)?)?;
    let set = config.set.clone().unwrap_or(SetConfig::Full).build(map.space())?;
    let a = Continuum::new(set).map_err(config_err)?;
    let (a1, a2) = split_continuum(&a, c).map_err(|e| match e {
        Error::SplitPrecondition(_) => config_err(e),
        other => other,
    })?;
    let eighth = c / 8;
    let window = eighth + map.space().adjacency_radius() * 2;
    let h = hausdorff(&a1, &a2)?;
    let mut csv = Csv::new(Task::Split.name(), &["item", "size", "diameter", "value", "members"]);
    let mut ok = h > eighth;
    for (name, part) in [("A1", &a1), ("A2", &a2)] {
        let d = part.diameter();
        let good = part.is_connected() && part.is_subset(&a) && d >= eighth && d <= window;
        ok &= good;
        csv.row(&[
            name.into(),
            part.len().to_string(),
            d.to_string(),
            good.to_string(),
            join(part.members()),
        ]);
    }
    csv.row(&["hausdorff".into(), "-".into(), "-".into(), h.to_string(), "-".into()]);
    Ok(Outcome {
        task: Task::Split,
        csv: csv.text,
        summary: format!(
            "split c={c}: diameters {} and {} (window [{eighth}, {window}]), hausdorff {h} > {eighth}: {ok}",
            a1.diameter(),
            a2.diameter()
        ),
        violation: !ok,
    })
}

fn family_task(map: &SetValuedMap, config: &ExperimentConfig, p: &Params) -> Result<Outcome> {
    let delta = length("delta", &required("delta", &config.delta)?)?;
    let m = required("m", &config.m)?;
    let a0 = Continuum::new(required("set", &config.set)?.build(map.space())?).map_err(config_err)?;
    let horizon = match p.horizon {
        Some(h) => h,
        None => family_horizon(map, delta, 64)?
            .ok_or_else(|| Error::Config("no horizon up to 64 steps; give one explicitly".into()))?,
    };
    let fam = build_separated_family(map, &a0, delta, horizon, m).map_err(|e| match e {
        Error::FamilyPrecondition(_) | Error::NonPositiveDelta(_) | Error::SpaceMismatch => config_err(e),
        other => other,
    })?;
    let mut csv = Csv::new(
        Task::SeparatedFamily.name(),
        &["leaf", "path", "segment", "min_separation"],
    );
    for row in &fam.certificate {
        csv.row(&[
            row.leaf.to_string(),
            if row.path.is_empty() { "-".into() } else { row.path.clone() },
            join(&row.segment),
            opt(row.min_separation),
        ]);
    }
    csv.row(&[
        "all".into(),
        format!("verified={}", fam.verified),
        format!("length={}", fam.segments.length()),
        opt(fam.min_separation),
    ]);
    Ok(Outcome {
        task: Task::SeparatedFamily,
        csv: csv.text,
        summary: format!(
            "separated-family {} delta={delta} N={horizon} m={m}: {} segments of length {}, min D = {} > {}: {}",
            map.label(),
            fam.segments.len(),
            fam.segments.length(),
            opt(fam.min_separation),
            delta / 8,
            fam.verified
        ),
        violation: !fam.verified,
    })
}

fn spec_task(map: &SetValuedMap, config: &ExperimentConfig, p: &Params) -> Result<Outcome> {
    let gap = config.gap.unwrap_or(0);
    let horizon = p.horizon.unwrap_or_else(|| config.targets.iter().map(|t| t.1).max().unwrap_or(0));
    let mut csv = Csv::new(
        Task::SpecCheck.name(),
        &["eps", "gap", "targets", "outcome", "z", "distances"],
    );
    let mut found = 0;
    for &eps in p.eps_nonempty()? {
        let inst = SpecInstance::new(map.space(), config.targets.clone(), eps, gap).map_err(config_err)?;
        let res = pointwise_spec_check(map, &inst, horizon).map_err(config_err)?;
        let targets = join(inst.targets().iter().map(|(x, a)| format!("{x}@{a}")));
        match res {
            Some(w) => {
                found += 1;
                csv.row(&[
                    eps.to_string(),
                    gap.to_string(),
                    targets,
                    "present".into(),
                    w.z.to_string(),
                    join(&w.distances),
                ]);
            }
            None => csv.row(&[eps.to_string(), gap.to_string(), targets, "absent".into(), "none".into(), "-".into()]),
        }
    }
    Ok(Outcome {
        task: Task::SpecCheck,
        csv: csv.text,
        summary: format!(
            "spec-check {} (times a_i only): shadowing point found for {found} of {} eps values",
            map.label(),
            p.eps.len()
        ),
        violation: false,
    })
}

fn orbit_spec_task(map: &SetValuedMap, config: &ExperimentConfig, p: &Params) -> Result<Outcome> {
    let gap = config.gap.unwrap_or(0);
    let blocks: Vec<(OrbitSegment, usize)> = config
        .blocks
        .iter()
        .map(|b| Ok((OrbitSegment::new(map, b.states.clone())?, b.start)))
        .collect::<Result<_>>()
        .map_err(config_err)?;
    let mut csv = Csv::new(Task::OrbitSpec.name(), &["eps", "gap", "period", "outcome", "segment"]);
    let mut found = 0;
    for &eps in p.eps_nonempty()? {
        let inst = BlockSpecInstance::new(map, blocks.clone(), eps, gap, config.period).map_err(config_err)?;
        let res = orbit_spec_check(map, &inst, p.cap).map_err(config_err)?;
        let (outcome, seg) = match &res {
            Some(s) => ("present", join(s.states())),
            None => ("absent", "none".into()),
        };
        found += usize::from(res.is_some());
        csv.row(&[eps.to_string(), gap.to_string(), opt(config.period), outcome.into(), seg]);
    }
    Ok(Outcome {
        task: Task::OrbitSpec,
        csv: csv.text,
        summary: format!(
            "orbit-spec {}: shadowing orbit found for {found} of {} eps values",
            map.label(),
            p.eps.len()
        ),
        violation: false,
    })
}

fn mixing_task(map: &SetValuedMap, p: &Params) -> Result<Outcome> {
    let horizon = p.horizon()?;
    let rep = mixing_check(map, &default_opens(map.space()), horizon).map_err(config_err)?;
    let mut csv = Csv::new(Task::Mixing.name(), &["u", "v", "m_witness", "pass"]);
    for pair in &rep.pairs {
        csv.row(&[
            pair.u.to_string(),
            pair.v.to_string(),
            opt(pair.m_witness),
            pair.m_witness.is_some().to_string(),
        ]);
    }
    csv.row(&["all".into(), "all".into(), opt(rep.max_witness()), rep.pass.to_string()]);
    Ok(Outcome {
        task: Task::Mixing,
        csv: csv.text,
        summary: format!(
            "mixing {} horizon={horizon}: pass={} max M={} ({} failing pairs)",
            map.label(),
            rep.pass,
            opt(rep.max_witness()),
            rep.failures().count()
        ),
        violation: false,
    })
}

fn audit_task(map: &SetValuedMap, config: &ExperimentConfig, p: &Params) -> Result<Outcome> {
    let mut grid = AuditGrid::default_for(map.space());
    if !p.eps.is_empty() {
        grid.epsilons = p.eps.clone();
    }
    if !config.gaps.is_empty() {
        grid.gaps = config.gaps.clone();
    }
    if let Some(h) = p.horizon {
        grid.horizon = h;
    }
    if let Some(k) = config.max_targets {
        grid.max_targets = k;
    }
    let mut csv = Csv::new(Task::Audit.name(), &["system", "check", "parameters", "outcome", "witness"]);
    let violations = audit_rows(map, &grid, &mut csv)?;
    Ok(Outcome {
        task: Task::Audit,
        csv: csv.text,
        summary: format!("audit {}: {violations} violations", map.label()),
        violation: violations > 0,
    })
}

/// Audit rows for one system; returns the number of violations.
fn audit_rows(map: &SetValuedMap, grid: &AuditGrid, csv: &mut Csv) -> Result<usize> {
    let rep = implication_audit(map, grid)?;
    let sys = map.label().to_string();
    for cell in &rep.cells {
        let witness = match (&cell.first_failure, &cell.example) {
            (Some(f), _) => format!("fails[{f}]"),
            (None, Some((inst, w))) => format!("[{inst}] z={} d={}", w.z, join(&w.distances)),
            (None, None) => "-".into(),
        };
        csv.row(&[
            sys.clone(),
            "pointwise-spec".into(),
            format!("eps={} M={} horizon={}", cell.epsilon, cell.gap, grid.horizon),
            format!("{}/{}", cell.succeeded, cell.instances),
            witness,
        ]);
    }
    csv.row(&[
        sys.clone(),
        "spec-holds".into(),
        format!("eps={}", join(&grid.epsilons)),
        rep.spec_holds.to_string(),
        "-".into(),
    ]);
    let first_miss = rep.mixing.failures().next().map_or_else(
        || "-".into(),
        |p| format!("U=ball({}) V=ball({})", p.u, p.v),
    );
    csv.row(&[
        sys.clone(),
        "mixing".into(),
        format!("horizon={}", rep.mixing.horizon),
        rep.mixing.pass.to_string(),
        first_miss,
    ]);
    for g in &rep.growth {
        csv.row(&[
            sys.clone(),
            "S_n-growth".into(),
            format!("eps={} n={}..{}", g.epsilon, g.n_low, g.n_high),
            g.grows().to_string(),
            format!("S_{}={} S_{}={}", g.n_low, g.low, g.n_high, g.high),
        ]);
    }
    for v in &rep.violations {
        csv.row(&[
            sys.clone(),
            "violation".into(),
            v.implication.into(),
            "false".into(),
            v.witness.clone(),
        ]);
    }
    Ok(rep.violations.len())
}

/// Names accepted by [`reproduce`].
pub const PRESETS: [&str; 6] = [
    "rotation-cw",
    "constant-spec",
    "constant-se-zero",
    "doubling-blur",
    "anosov-mimic",
    "theorem-c1",
];

/// Check rows for presets.
struct Checks {
    csv: Csv,
    preset: &'static str,
    failed: Vec<String>,
}

impl Checks {
    fn new(preset: &'static str) -> Self {
        Self {
            csv: Csv::new(Task::Reproduce.name(), &["preset", "check", "parameters", "value", "pass"]),
            preset,
            failed: Vec::new(),
        }
    }

    fn check(&mut self, check: &str, parameters: impl Display, value: impl Display, pass: bool) {
        if !pass {
            self.failed.push(format!("{check} ({parameters})"));
        }
        self.csv.row(&[
            self.preset.into(),
            check.into(),
            parameters.to_string(),
            value.to_string(),
            pass.to_string(),
        ]);
    }

    fn info(&mut self, check: &str, parameters: impl Display, value: impl Display) {
        self.csv.row(&[
            self.preset.into(),
            check.into(),
            parameters.to_string(),
            value.to_string(),
            "info".into(),
        ]);
    }

    fn finish(self) -> Outcome {
        let summary = if self.failed.is_empty() {
            format!("reproduce {}: all checks pass", self.preset)
        } else {
            format!("reproduce {}: FAILED {}", self.preset, self.failed.join("; "))
        };
        Outcome {
            task: Task::Reproduce,
            csv: self.csv.text,
            summary,
            violation: !self.failed.is_empty(),
        }
    }
}

fn r(p: i64, q: i64) -> Length {
    Length::new(p, q)
}

fn circle(q: usize) -> Result<Arc<MetricSpace>> {
    Ok(Arc::new(MetricSpace::circle(q)?))
}

/// Runs a named preset and its inline checks.
pub fn reproduce(preset: &str) -> Result<Outcome> {
    match preset {
        "rotation-cw" => preset_rotation_cw(),
        "constant-spec" => preset_constant_spec(),
        "constant-se-zero" => preset_constant_se_zero(),
        "doubling-blur" => preset_doubling_blur(),
        "anosov-mimic" => preset_anosov_mimic(),
        "theorem-c1" => preset_theorem_c1(),
        other => Err(Error::Config(format!(
            "unknown preset {other:?}; known: {}",
            PRESETS.join(", ")
        ))),
    }
}

fn preset_rotation_cw() -> Result<Outcome> {
    let mut ck = Checks::new("rotation-cw");
    let c = circle(128)?;
    let delta = r(2, 5);
    let f = SetValuedMap::builtin(c.clone(), &BuiltinMap::RotationInterval { k: 5 })?;
    let arcs = default_family(&c, c.unit())?;
    let rep = cw_check(&f, &arcs, delta, 40)?;
    let worst = rep.results.iter().filter_map(|x| x.witness_n).max();
    ck.check(
        "cw_check",
        format!("rotation_interval q=128 k=5 delta={delta} horizon=40 continua={}", arcs.len()),
        format!("worst witness n={}", opt(worst)),
        rep.pass,
    );
    let demo = constant_sequence_shift_demo(&f, &PointSet::full(&c), 8)?;
    ck.check(
        "shift_fixed",
        "constant sequences over the full net window=8",
        format!("{} fixed sequences", demo.segments.len()),
        demo.shift_fixed,
    );
    let rot = SetValuedMap::builtin(c.clone(), &BuiltinMap::Rotation { k: 5 })?;
    let small: Vec<Continuum> = arcs.into_iter().filter(|a| a.diameter() <= delta).collect();
    let rep = cw_check(&rot, &small, delta, 40)?;
    let all_fail = rep.results.iter().all(|x| x.witness_n.is_none());
    ck.check(
        "isometry_fails",
        format!("rotation q=128 k=5 arcs with diam <= {delta} continua={}", small.len()),
        format!("pass={}", rep.pass),
        !rep.pass && all_fail,
    );
    Ok(ck.finish())
}

fn preset_constant_spec() -> Result<Outcome> {
    let mut ck = Checks::new("constant-spec");
    let c = circle(16)?;
    let f = SetValuedMap::builtin(c.clone(), &BuiltinMap::ConstantFull)?;
    let eps = r(1, 8);
    let mut absent = 0;
    let mut total = 0;
    for x in 0..c.len() {
        for a in 1..=8 {
            for (x2, gap) in [(None, 0), (Some((x + 5) % 16), 1)] {
                let mut targets = vec![(x, a)];
                if let Some(y) = x2 {
                    targets.push((y, a + gap + 1));
                }
                let inst = SpecInstance::new(&c, targets, eps, gap)?;
                total += 1;
                absent += usize::from(pointwise_spec_check(&f, &inst, 10)?.is_none());
            }
        }
    }
    ck.check(
        "pointwise_spec_absent",
        format!("constant_full q=16 eps={eps} a_1>=1"),
        format!("{absent}/{total} absent"),
        absent == total,
    );
    let fine = r(1, 32);
    let mut hits = 0;
    for x in 0..c.len() {
        let inst = SpecInstance::new(&c, vec![(x, 0)], fine, 0)?;
        hits += usize::from(pointwise_spec_check(&f, &inst, 0)?.is_some_and(|w| w.z == x));
    }
    ck.check(
        "pointwise_spec_a1_zero",
        format!("constant_full q=16 eps={fine} a_1=0"),
        format!("z=x^1 for {hits}/16"),
        hits == 16,
    );
    let blocks = vec![
        (OrbitSegment::new(&f, vec![1, 9, 4])?, 0),
        (OrbitSegment::new(&f, vec![12])?, 3),
        (OrbitSegment::new(&f, vec![6, 0])?, 5),
    ];
    let inst = BlockSpecInstance::new(&f, blocks, r(1, 32), 0, Some(8))?;
    let seg = orbit_spec_check(&f, &inst, 64)?;
    ck.check(
        "orbit_spec_M0",
        "constant_full q=16 three blocks M=0 P=8",
        seg.as_ref().map_or_else(|| "none".into(), |s| join(s.states())),
        seg.is_some(),
    );
    let mix = mixing_check(&f, &default_opens(&c), 8)?;
    ck.check(
        "mixing",
        "constant_full q=16 one-step balls horizon=8",
        format!("max M={}", opt(mix.max_witness())),
        mix.pass && mix.pairs.iter().all(|p| p.m_witness == Some(0)),
    );
    Ok(ck.finish())
}

fn preset_constant_se_zero() -> Result<Outcome> {
    let mut ck = Checks::new("constant-se-zero");
    let c = circle(64)?;
    let f = SetValuedMap::builtin(c.clone(), &BuiltinMap::ConstantFull)?;
    let mut mismatches = 0;
    for n in 1..=6 {
        let m = dn_matrix(&f, n)?;
        for x in 0..64 {
            for y in 0..64 {
                mismatches += usize::from(m.get(x, y) != c.distance(x, y));
            }
        }
    }
    let spot = semimetric_dn(&f, 3, 40, 6)?;
    ck.check(
        "dn_equals_d",
        "constant_full q=64 n<=6 all pairs",
        format!("{mismatches} mismatches; d_6(3,40)={spot}"),
        mismatches == 0 && spot == c.distance(3, 40),
    );
    for eps in [r(1, 8), r(1, 16)] {
        let mut points = Vec::new();
        for n in 1..=6 {
            let s = pack_separated_points(&f, n, eps, Mode::Exact)?.cardinality();
            points.push((n, s as u64));
        }
        let rate = entropy_rate(&points)?;
        let constant = points.iter().all(|p| p.1 == points[0].1);
        ck.check(
            "S_n_constant",
            format!("eps={eps} n=1..6"),
            format!("S_n={} rate={}", join(points.iter().map(|p| p.1)), rate_str(rate)),
            constant && rate == 0.0,
        );
    }
    Ok(ck.finish())
}

/// Node budget for the exact orbit counts of the doubling-blur preset.
const PRESET_BUDGET: u64 = 1_500_000;

fn preset_doubling_blur() -> Result<Outcome> {
    let mut ck = Checks::new("doubling-blur");
    let systems = [
        SetValuedMap::builtin(circle(16)?, &BuiltinMap::BlurredDoubling { delta: r(1, 8) })?,
        SetValuedMap::builtin(circle(8)?, &BuiltinMap::ConstantFull)?,
    ];
    let opts = SearchOptions {
        mode: Mode::Exact,
        node_budget: PRESET_BUDGET,
    };
    for f in &systems {
        for n in 1..=3 {
            let set = enumerate_segments(f, None, n, usize::MAX)?;
            for eps in [r(1, 8), r(1, 4)] {
                let s = count_or_bracket(CountKind::SeparatedOrbits, pack_separated_orbits(&set, eps, opts))?;
                let rr = count_or_bracket(CountKind::SpanningOrbits, cover_spanning_orbits(&set, eps, opts))?;
                let bs = count_or_bracket(CountKind::SeparatedPoints, pack_separated_points(f, n, eps, opts))?;
                let br = count_or_bracket(CountKind::SpanningPoints, cover_spanning_points(f, n, eps, opts))?;
                let params = format!("{} n={n} eps={eps}", f.label());
                ck.check(
                    "S_le_s",
                    &params,
                    format!("S={bs} s={s}"),
                    bs.exact().is_some() && s.exact().is_some() && bs.upper() <= s.lower(),
                );
                ck.check("r_le_s", &params, format!("r={rr} s={s}"), rr.upper() <= s.lower());
                ck.check("R_le_S", &params, format!("R={br} S={bs}"), br.upper() <= bs.lower());
                let greedy = pack_separated_orbits(&set, eps, Mode::Greedy)?;
                let e = set.space().floor_units(eps);
                let spans = set.iter().all(|a| {
                    greedy
                        .witnesses()
                        .iter()
                        .any(|w| crate::orbit::dn_units(set.space(), a, w.states()) as i64 <= e)
                });
                ck.check("greedy_spans", &params, format!("{} segments", greedy.cardinality()), spans);
            }
        }
    }
    let f = SetValuedMap::builtin(circle(64)?, &BuiltinMap::BlurredDoubling { delta: r(1, 16) })?;
    let mix = mixing_check(&f, &default_opens(f.space()), 32)?;
    ck.check(
        "mixing",
        "blurred_doubling q=64 delta=1/16 horizon=32",
        format!("max M={}", opt(mix.max_witness())),
        mix.pass,
    );
    Ok(ck.finish())
}

fn preset_anosov_mimic() -> Result<Outcome> {
    let t = Arc::new(MetricSpace::torus(5)?);
    let f = SetValuedMap::builtin(t.clone(), &BuiltinMap::AnosovMimic)?;
    let mut ck = Checks::new("anosov-mimic");
    let grid = AuditGrid::default_for(&t);
    let rep = implication_audit(&f, &grid)?;
    ck.info("spec_holds", "anosov_mimic q=5 default grid", rep.spec_holds);
    ck.info(
        "mixing",
        format!("one-step balls horizon={}", grid.horizon),
        format!("pass={} max M={}", rep.mixing.pass, opt(rep.mixing.max_witness())),
    );
    for g in &rep.growth {
        ck.info(
            "S_n_growth",
            format!("eps={} n={}..{}", g.epsilon, g.n_low, g.n_high),
            format!("S_{}={} S_{}={}", g.n_low, g.low, g.n_high, g.high),
        );
    }
    ck.check(
        "audit",
        "spec=>mixing and spec=>S_n growth",
        format!("{} violations", rep.violations.len()),
        rep.violations.is_empty(),
    );
    let period = crate::orbit::find_periodic(&f, 1, 100)?;
    ck.check(
        "periodic",
        "lattice point (0;1) returns",
        opt(period.as_ref().map(|p| p.period)),
        period.is_some(),
    );
    Ok(ck.finish())
}

fn preset_theorem_c1() -> Result<Outcome> {
    let mut ck = Checks::new("theorem-c1");
    let c = circle(512)?;
    let f = SetValuedMap::builtin(c.clone(), &BuiltinMap::BlurredDoubling { delta: r(1, 64) })?;
    let delta = r(1, 5);
    let literal = uniform_horizon(&f, delta, delta / 10, None, 64)?;
    ck.info("uniform_horizon", format!("delta={delta} eps={}", delta / 10), opt(literal));
    let n = family_horizon(&f, delta, 64)?.ok_or_else(|| Error::Internal("no horizon".into()))?;
    ck.info("family_horizon", format!("constant={} eps={}", delta * 2, delta / 10), n);
    let a0 = Continuum::arc(&c, 0, 26)?;
    let fam = build_separated_family(&f, &a0, delta, n, 5)?;
    ck.check(
        "family_size",
        format!("m=5 N={n} A0=arc(0;26)"),
        fam.segments.len(),
        fam.segments.len() == 32,
    );
    ck.check(
        "separation",
        format!("pairwise D > {}", delta / 8),
        opt(fam.min_separation),
        fam.verified && fam.min_separation.is_some_and(|d| d > delta / 8),
    );
    let eps = delta / 8;
    let mut points = Vec::new();
    for len in 1..=3 {
        let (packed, _) = greedy_separated_stream(&f, None, len, eps, usize::MAX)?;
        points.push((len, packed.cardinality() as u64));
    }
    let rate = entropy_rate(&points)?;
    let bound = std::f64::consts::LN_2 / n as f64;
    ck.check(
        "rate_bound",
        format!("log2/N vs greedy s_n rate at eps={eps} n=1..3 plus 0.05"),
        format!("{} <= {}", rate_str(bound), rate_str(rate + 0.05)),
        bound <= rate + 0.05,
    );
    Ok(ck.finish())
}
