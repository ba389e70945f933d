//! Pointwise specification, orbit specification and mixing checks, and an
//! audit of the implications between them.
//!
//! Closeness here is strict (`< eps`), as in the definitions being checked.
//! Pointwise specification is only evaluated at the target times `a_i`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::entropy::{count_or_bracket, pack_separated_points, Count, CountKind, Mode};
use crate::error::{Error, Result};
use crate::orbit::OrbitSegment;
use crate::space::{MetricSpace, PointSet};
use crate::svmap::SetValuedMap;
use crate::Length;

fn zero() -> Length {
    Length::from_integer(0)
}

/// Target points `x^i` prescribed at strictly increasing times `a_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecInstance {
    targets: Vec<(usize, usize)>,
    epsilon: Length,
    gap: usize,
}

impl SpecInstance {
    /// `targets` are `(point, time)` pairs; consecutive times must differ by more than `gap`.
    pub fn new(space: &MetricSpace, targets: Vec<(usize, usize)>, epsilon: Length, gap: usize) -> Result<Self> {
        if epsilon <= zero() {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        if targets.is_empty() {
            return Err(Error::InvalidInstance("no targets".into()));
        }
        for &(x, _) in &targets {
            space.check_point(x)?;
        }
        for w in targets.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            if b <= a || b - a <= gap {
                return Err(Error::InvalidInstance(format!(
                    "times {a} and {b} are not separated by more than {gap}"
                )));
            }
        }
        Ok(Self { targets, epsilon, gap })
    }

    pub fn targets(&self) -> &[(usize, usize)] {
        &self.targets
    }

    pub fn epsilon(&self) -> Length {
        self.epsilon
    }

    pub fn gap(&self) -> usize {
        self.gap
    }

    pub fn last_time(&self) -> usize {
        self.targets.last().expect("non-empty").1
    }
}

impl fmt::Display for SpecInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eps={} M={} targets=", self.epsilon, self.gap)?;
        for (i, (x, a)) in self.targets.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{x}@{a}")?;
        }
        Ok(())
    }
}

/// A point `z` meeting every target, with `d_H(F^{a_i}(z), {x^i})` per target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecWitness {
    pub z: usize,
    pub distances: Vec<Length>,
}

/// Per-target `d_H(F^{a_i}(z), {x^i})` in units, or `None` at the first miss.
fn target_distances(map: &SetValuedMap, inst: &SpecInstance, z: usize) -> Option<Vec<u32>> {
    let space = map.space();
    let mut mask = vec![false; space.len()];
    mask[z] = true;
    let mut t = 0;
    let mut out = Vec::with_capacity(inst.targets.len());
    for &(x, a) in &inst.targets {
        while t < a {
            mask = map.image_mask(&mask);
            t += 1;
        }
        // d_H(S, {x}) is the largest distance from x to a member of S.
        let d = mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(y, _)| space.units(x, y))
            .max()
            .expect("images are non-empty");
        if space.to_length(d) >= inst.epsilon {
            return None;
        }
        out.push(d);
    }
    Some(out)
}

/// Scans `z` in index order for a point whose iterates are `eps`-close to
/// each target at its time.
pub fn pointwise_spec_check(map: &SetValuedMap, inst: &SpecInstance, horizon: usize) -> Result<Option<SpecWitness>> {
    let space = map.space();
    for &(x, _) in &inst.targets {
        space.check_point(x)?;
    }
    if inst.last_time() > horizon {
        return Err(Error::BeyondHorizon {
            time: inst.last_time(),
            horizon,
        });
    }
    let found = (0..space.len())
        .into_par_iter()
        .find_map_first(|z| target_distances(map, inst, z).map(|d| (z, d)));
    Ok(found.map(|(z, d)| SpecWitness {
        z,
        distances: d.into_iter().map(|u| space.to_length(u)).collect(),
    }))
}

/// Prescribed orbit blocks `(x^i_j)` on windows `[a_i, b_i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpecInstance {
    blocks: Vec<(OrbitSegment, usize)>,
    epsilon: Length,
    gap: usize,
    period: Option<usize>,
}

impl BlockSpecInstance {
    /// Each block is an orbit segment of `map` placed at window start `a_i`;
    /// its window is `[a_i, a_i + len - 1]`.
    pub fn new(
        map: &SetValuedMap,
        blocks: Vec<(OrbitSegment, usize)>,
        epsilon: Length,
        gap: usize,
        period: Option<usize>,
    ) -> Result<Self> {
        if epsilon <= zero() {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidInstance("no blocks".into()));
        }
        for (seg, _) in &blocks {
            OrbitSegment::new(map, seg.states().to_vec())?;
        }
        for w in blocks.windows(2) {
            let b = w[0].1 + w[0].0.len() - 1;
            let a = w[1].1;
            if a <= b || a - b <= gap {
                return Err(Error::InvalidInstance(format!(
                    "window ending at {b} and window starting at {a} are not separated by more than {gap}"
                )));
            }
        }
        let inst = Self {
            blocks,
            epsilon,
            gap,
            period,
        };
        if let Some(p) = period {
            let span = inst.last_time() - inst.blocks[0].1;
            if p <= gap + span {
                return Err(Error::InvalidInstance(format!(
                    "period {p} must exceed M + b_n - a_1 = {}",
                    gap + span
                )));
            }
        }
        Ok(inst)
    }

    pub fn blocks(&self) -> &[(OrbitSegment, usize)] {
        &self.blocks
    }

    pub fn epsilon(&self) -> Length {
        self.epsilon
    }

    pub fn gap(&self) -> usize {
        self.gap
    }

    pub fn period(&self) -> Option<usize> {
        self.period
    }

    /// `b_n`.
    pub fn last_time(&self) -> usize {
        let (seg, a) = self.blocks.last().expect("non-empty");
        a + seg.len() - 1
    }

    /// Length of the shadowing segment: `max(b_n, P) + 1`.
    pub fn shadow_len(&self) -> usize {
        self.last_time().max(self.period.unwrap_or(0)) + 1
    }

    /// Target point at time `j`, if `j` lies in a window.
    fn target_at(&self, j: usize) -> Option<usize> {
        self.blocks
            .iter()
            .find(|(seg, a)| *a <= j && j < a + seg.len())
            .map(|(seg, a)| seg.states()[j - a])
    }

    /// Whether `seg` satisfies every window constraint and the closing condition.
    pub fn is_shadowed_by(&self, space: &MetricSpace, seg: &[usize]) -> bool {
        seg.len() == self.shadow_len()
            && seg.iter().enumerate().all(|(j, &z)| {
                self.target_at(j)
                    .is_none_or(|x| space.distance(z, x) < self.epsilon)
            })
            && self.period.is_none_or(|p| seg[p] == seg[0])
    }
}

/// Depth-first search for one orbit segment shadowing every block.
pub fn orbit_spec_check(map: &SetValuedMap, inst: &BlockSpecInstance, cap: usize) -> Result<Option<OrbitSegment>> {
    let len = inst.shadow_len();
    if len > cap {
        return Err(Error::BeyondHorizon { time: len - 1, horizon: cap });
    }
    let space = map.space();
    let allowed: Vec<Vec<bool>> = (0..len)
        .map(|j| match inst.target_at(j) {
            Some(x) => (0..space.len()).map(|z| space.distance(z, x) < inst.epsilon).collect(),
            None => vec![true; space.len()],
        })
        .collect();
    let mut search = OrbitDfs {
        map,
        allowed: &allowed,
        period: inst.period,
        dead: HashSet::new(),
        path: Vec::with_capacity(len),
    };
    for z0 in 0..space.len() {
        if !allowed[0][z0] {
            continue;
        }
        // With a closing condition the dead states depend on the start.
        if inst.period.is_some() {
            search.dead.clear();
        }
        search.path.clear();
        search.path.push(z0);
        if search.extend() {
            return Ok(Some(OrbitSegment::new(map, search.path.clone())?));
        }
    }
    Ok(None)
}

struct OrbitDfs<'a> {
    map: &'a SetValuedMap,
    allowed: &'a [Vec<bool>],
    period: Option<usize>,
    /// `(time, state)` pairs from which no completion exists.
    dead: HashSet<(usize, usize)>,
    path: Vec<usize>,
}

impl OrbitDfs<'_> {
    fn extend(&mut self) -> bool {
        let j = self.path.len();
        if j == self.allowed.len() {
            return true;
        }
        let here = self.path[j - 1];
        let start = self.path[0];
        for &y in self.map.image(here) {
            if !self.allowed[j][y] || self.period.is_some_and(|p| p == j && y != start) {
                continue;
            }
            if self.dead.contains(&(j, y)) {
                continue;
            }
            self.path.push(y);
            if self.extend() {
                return true;
            }
            self.path.pop();
            self.dead.insert((j, y));
        }
        false
    }
}

/// Closed balls of one grid step around every point.
pub fn default_opens(space: &Arc<MetricSpace>) -> Vec<PointSet> {
    (0..space.len())
        .map(|x| space.ball_units(x, space.adjacency_units()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixingPair {
    pub u: usize,
    pub v: usize,
    /// Smallest `M` with `F^m(U)` meeting `V` for every `m` in `(M, horizon]`;
    /// `None` if `F^horizon(U)` misses `V`.
    pub m_witness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixingReport {
    pub horizon: usize,
    /// Ordered pairs `(U, V)` by index into the open family.
    pub pairs: Vec<MixingPair>,
    pub pass: bool,
}

impl MixingReport {
    pub fn failures(&self) -> impl Iterator<Item = &MixingPair> {
        self.pairs.iter().filter(|p| p.m_witness.is_none())
    }

    pub fn max_witness(&self) -> Option<usize> {
        self.pairs.iter().filter_map(|p| p.m_witness).max()
    }
}

/// Iterates each open set's image up to `horizon` and records, for every
/// target open set, the last time it was missed.
pub fn mixing_check(map: &SetValuedMap, opens: &[PointSet], horizon: usize) -> Result<MixingReport> {
    if opens.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if horizon == 0 {
        return Err(Error::InvalidInstance("mixing horizon must be at least 1".into()));
    }
    for o in opens {
        if !o.space().same_as(map.space()) {
            return Err(Error::SpaceMismatch);
        }
    }
    let pairs: Vec<Vec<MixingPair>> = opens
        .par_iter()
        .enumerate()
        .map(|(ui, u)| {
            let mut last_miss = vec![0usize; opens.len()];
            let mut mask = u.mask();
            for m in 1..=horizon {
                mask = map.image_mask(&mask);
                for (vi, v) in opens.iter().enumerate() {
                    if !v.members().iter().any(|&y| mask[y]) {
                        last_miss[vi] = m;
                    }
                }
            }
            last_miss
                .into_iter()
                .enumerate()
                .map(|(vi, miss)| MixingPair {
                    u: ui,
                    v: vi,
                    m_witness: (miss < horizon).then_some(miss),
                })
                .collect()
        })
        .collect();
    let pairs: Vec<MixingPair> = pairs.into_iter().flatten().collect();
    let pass = pairs.iter().all(|p| p.m_witness.is_some());
    Ok(MixingReport { horizon, pairs, pass })
}

/// Grids and sampling sizes for [`implication_audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditGrid {
    pub epsilons: Vec<Length>,
    pub gaps: Vec<usize>,
    pub horizon: usize,
    /// Most targets per sampled instance.
    pub max_targets: usize,
    /// Orbit lengths used for the `S_n` growth check.
    pub growth_n: (usize, usize),
}

impl AuditGrid {
    /// Epsilons at a quarter and an eighth of the diameter (at least one grid
    /// step), gaps 0, 1, 2, 4, horizon 8, up to 3 targets, `S_1` vs `S_3`.
    pub fn default_for(space: &MetricSpace) -> Self {
        let step = space.unit() * space.adjacency_units() as i64;
        let diam = space.diameter();
        let mut epsilons: Vec<Length> = [diam / 4, diam / 8].into_iter().map(|e| e.max(step)).collect();
        epsilons.dedup();
        Self {
            epsilons,
            gaps: vec![0, 1, 2, 4],
            horizon: 8,
            max_targets: 3,
            growth_n: (1, 3),
        }
    }
}

/// Deterministic instances for one `(eps, M)` cell: times `a_i = (i-1)(M+1)`,
/// targets the first points by index plus evenly strided tuples.
pub fn sample_instances(space: &MetricSpace, grid: &AuditGrid, eps: Length, gap: usize) -> Result<Vec<SpecInstance>> {
    let len = space.len();
    let k_max = grid.max_targets.min(grid.horizon / (gap + 1) + 1).max(1);
    let starts: Vec<usize> = {
        let mut s: Vec<usize> = (0..4).map(|j| j * len / 4).collect();
        s.dedup();
        s
    };
    let stride = len / 2 + 1;
    let mut out = Vec::new();
    for k in 1..=k_max {
        let times = (0..k).map(|i| i * (gap + 1));
        let first: Vec<(usize, usize)> = (0..k).map(|i| i % len).zip(times.clone()).collect();
        out.push(SpecInstance::new(space, first, eps, gap)?);
        for &s in &starts {
            let targets: Vec<(usize, usize)> = (0..k).map(|i| (s + i * stride) % len).zip(times.clone()).collect();
            let inst = SpecInstance::new(space, targets, eps, gap)?;
            if !out.contains(&inst) {
                out.push(inst);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecCell {
    pub epsilon: Length,
    pub gap: usize,
    pub instances: usize,
    pub succeeded: usize,
    /// First sampled instance with no shadowing point.
    pub first_failure: Option<SpecInstance>,
    /// One successful instance with its witness, kept for replay.
    pub example: Option<(SpecInstance, SpecWitness)>,
}

impl SpecCell {
    pub fn holds(&self) -> bool {
        self.succeeded == self.instances
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthCheck {
    pub epsilon: Length,
    pub n_low: usize,
    pub n_high: usize,
    pub low: Count,
    pub high: Count,
}

impl GrowthCheck {
    /// Certified growth: `S_high > S_low` for every value in the brackets.
    pub fn grows(&self) -> bool {
        self.high.lower() > self.low.upper()
    }

    /// Certified absence of growth.
    pub fn flat(&self) -> bool {
        self.high.upper() <= self.low.lower()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub implication: &'static str,
    /// Replayable description: spec instances that succeeded and the failing side.
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub cells: Vec<SpecCell>,
    /// Every sampled epsilon has some gap at which all instances succeed.
    pub spec_holds: bool,
    pub mixing: MixingReport,
    pub growth: Vec<GrowthCheck>,
    pub violations: Vec<Violation>,
}

/// Samples pointwise specification over the grid; if it holds at every
/// epsilon, mixing and `S_n` growth become obligations.
pub fn implication_audit(map: &SetValuedMap, grid: &AuditGrid) -> Result<AuditReport> {
    if grid.epsilons.is_empty() || grid.gaps.is_empty() {
        return Err(Error::InvalidInstance("audit grids must be non-empty".into()));
    }
    let space = map.space();
    let mut cells = Vec::new();
    for &eps in &grid.epsilons {
        for &gap in &grid.gaps {
            let instances = sample_instances(space, grid, eps, gap)?;
            let mut cell = SpecCell {
                epsilon: eps,
                gap,
                instances: instances.len(),
                succeeded: 0,
                first_failure: None,
                example: None,
            };
            for inst in instances {
                match pointwise_spec_check(map, &inst, grid.horizon)? {
                    Some(w) => {
                        cell.succeeded += 1;
                        // Keep the richest success for replay.
                        if cell.example.as_ref().is_none_or(|(e, _)| e.targets.len() < inst.targets.len()) {
                            cell.example = Some((inst, w));
                        }
                    }
                    None => {
                        if cell.first_failure.is_none() {
                            cell.first_failure = Some(inst);
                        }
                    }
                }
            }
            cells.push(cell);
        }
    }
    let spec_holds = grid
        .epsilons
        .iter()
        .all(|&e| cells.iter().any(|c| c.epsilon == e && c.holds()));

    let mixing = mixing_check(map, &default_opens(space), grid.horizon.max(1))?;
    let (n_low, n_high) = grid.growth_n;
    let growth = grid
        .epsilons
        .iter()
        .map(|&eps| {
            let low = count_or_bracket(CountKind::SeparatedPoints, pack_separated_points(map, n_low, eps, Mode::Exact))?;
            let high = count_or_bracket(CountKind::SeparatedPoints, pack_separated_points(map, n_high, eps, Mode::Exact))?;
            Ok(GrowthCheck {
                epsilon: eps,
                n_low,
                n_high,
                low,
                high,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut violations = Vec::new();
    if spec_holds {
        let evidence: Vec<String> = cells
            .iter()
            .filter(|c| c.holds())
            .filter_map(|c| c.example.as_ref())
            .map(|(inst, w)| {
                let d: Vec<String> = w.distances.iter().map(|d| d.to_string()).collect();
                format!("[{inst} z={} d={}]", w.z, d.join(";"))
            })
            .collect();
        if let Some(p) = mixing.failures().next() {
            violations.push(Violation {
                implication: "spec=>mixing",
                witness: format!(
                    "{} U=ball({}) V=ball({}) misses at m={}",
                    evidence.join(" "),
                    p.u,
                    p.v,
                    grid.horizon
                ),
            });
        }
        if growth.iter().all(GrowthCheck::flat) {
            let counts: Vec<String> = growth
                .iter()
                .map(|g| format!("eps={} S_{}={} S_{}={}", g.epsilon, g.n_low, g.low, g.n_high, g.high))
                .collect();
            violations.push(Violation {
                implication: "spec=>S_n growth",
                witness: format!("{} {}", evidence.join(" "), counts.join(" ")),
            });
        }
    }
    Ok(AuditReport {
        cells,
        spec_holds,
        mixing,
        growth,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::for_each_segment;
    use crate::svmap::BuiltinMap;
    use std::ops::ControlFlow;

    fn r(p: i64, q: i64) -> Length {
        Length::new(p, q)
    }

    fn circle(q: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::circle(q).unwrap())
    }

    fn sys(space: &Arc<MetricSpace>, kind: BuiltinMap) -> SetValuedMap {
        SetValuedMap::builtin(space.clone(), &kind).unwrap()
    }

    /// Pointwise specification straight from the definition: the set
    /// `F^a(z)` is built by repeated `image_of_set` and its Hausdorff
    /// distance to `{x}` by the library's general routine.
    fn brute_pointwise(map: &SetValuedMap, inst: &SpecInstance) -> Option<usize> {
        let space = map.space();
        (0..space.len()).find(|&z| {
            inst.targets().iter().all(|&(x, a)| {
                let img = map.iterate_set(&PointSet::singleton(space, z).unwrap(), a).unwrap();
                let target = PointSet::singleton(space, x).unwrap();
                crate::space::hausdorff(&img, &target).unwrap() < inst.epsilon()
            })
        })
    }

    fn small_systems() -> Vec<SetValuedMap> {
        let c8 = circle(8);
        let c12 = circle(12);
        let c16 = circle(16);
        let t4 = Arc::new(MetricSpace::torus(4).unwrap());
        vec![
            sys(&c8, BuiltinMap::ConstantFull),
            sys(&c8, BuiltinMap::Identity),
            sys(&c12, BuiltinMap::Rotation { k: 5 }),
            sys(&c16, BuiltinMap::Doubling),
            sys(&c16, BuiltinMap::RotationInterval { k: 3 }),
            sys(&c16, BuiltinMap::BlurredDoubling { delta: r(1, 16) }),
            sys(&t4, BuiltinMap::AnosovMimic),
        ]
    }

    #[test]
    fn constant_full_has_no_pointwise_spec() {
        let c = circle(16);
        let f = sys(&c, BuiltinMap::ConstantFull);
        let eps = r(1, 4);
        for x in 0..16 {
            for a in 1..=8 {
                let inst = SpecInstance::new(&c, vec![(x, a)], eps, 0).unwrap();
                assert_eq!(pointwise_spec_check(&f, &inst, 8).unwrap(), None);
            }
            // Below one grid step only z = x qualifies.
            let inst = SpecInstance::new(&c, vec![(x, 0)], r(1, 32), 0).unwrap();
            let w = pointwise_spec_check(&f, &inst, 8).unwrap().unwrap();
            assert_eq!(w.z, x);
            assert_eq!(w.distances, vec![zero()]);
            // Coarser eps returns the first qualifying index.
            let inst = SpecInstance::new(&c, vec![(x, 0)], eps, 0).unwrap();
            let w = pointwise_spec_check(&f, &inst, 8).unwrap().unwrap();
            assert!(c.distance(w.z, x) < eps && (0..w.z).all(|z| c.distance(z, x) >= eps));
        }
        // d_H(X, {x}) is the diameter, so only eps above it succeeds.
        let inst = SpecInstance::new(&c, vec![(3, 0), (9, 2)], r(1, 2), 1).unwrap();
        assert_eq!(pointwise_spec_check(&f, &inst, 8).unwrap(), None);
        let inst = SpecInstance::new(&c, vec![(3, 0), (9, 2)], r(9, 16), 1).unwrap();
        assert!(pointwise_spec_check(&f, &inst, 8).unwrap().is_some());
    }

    #[test]
    fn instance_validation() {
        let c = circle(8);
        assert!(matches!(
            SpecInstance::new(&c, vec![(0, 0), (1, 2)], r(1, 8), 2),
            Err(Error::InvalidInstance(_))
        ));
        assert!(SpecInstance::new(&c, vec![(0, 0), (1, 3)], r(1, 8), 2).is_ok());
        assert!(matches!(
            SpecInstance::new(&c, vec![(0, 0)], zero(), 2),
            Err(Error::NonPositiveEpsilon(_))
        ));
        assert!(matches!(
            SpecInstance::new(&c, vec![(8, 0)], r(1, 8), 2),
            Err(Error::PointOutOfRange { .. })
        ));
        let f = sys(&c, BuiltinMap::Identity);
        let inst = SpecInstance::new(&c, vec![(0, 0), (1, 9)], r(1, 8), 2).unwrap();
        assert!(matches!(
            pointwise_spec_check(&f, &inst, 8),
            Err(Error::BeyondHorizon { time: 9, horizon: 8 })
        ));
    }

    #[test]
    fn pointwise_matches_brute_force() {
        for f in small_systems() {
            let space = f.space().clone();
            let n = space.len();
            for eps in [r(1, 16), r(1, 8), r(1, 4), r(1, 2)] {
                for gap in [0, 1, 3] {
                    for k in 1..=3 {
                        if (k - 1) * (gap + 1) + 1 > 8 {
                            continue;
                        }
                        for s in 0..n {
                            let targets = (0..k)
                                .map(|i| ((s * 7 + i * 5) % n, i * (gap + 1) + usize::from(s % 2 == 1)))
                                .collect();
                            let inst = SpecInstance::new(&space, targets, eps, gap).unwrap();
                            let got = pointwise_spec_check(&f, &inst, 8).unwrap();
                            assert_eq!(got.as_ref().map(|w| w.z), brute_pointwise(&f, &inst), "{} {inst}", f.label());
                            if let Some(w) = got {
                                assert!(w.distances.iter().all(|&d| d < eps));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pointwise_monotone_in_eps() {
        for f in small_systems() {
            let space = f.space().clone();
            let n = space.len();
            for s in 0..n {
                let targets = vec![(s, 1), ((s + n / 3) % n, 3)];
                let mut seen = false;
                for e in 1..=8 {
                    let inst = SpecInstance::new(&space, targets.clone(), r(e, 16), 1).unwrap();
                    let ok = pointwise_spec_check(&f, &inst, 8).unwrap().is_some();
                    assert!(ok || !seen);
                    seen |= ok;
                }
            }
        }
    }

    fn block(map: &SetValuedMap, states: &[usize]) -> OrbitSegment {
        OrbitSegment::new(map, states.to_vec()).unwrap()
    }

    /// Unpruned oracle: every orbit segment of the shadow length.
    fn brute_orbit_spec(map: &SetValuedMap, inst: &BlockSpecInstance) -> bool {
        let space = map.space();
        let starts: Vec<usize> = (0..space.len()).collect();
        !for_each_segment(map, &starts, inst.shadow_len(), |seg| {
            if inst.is_shadowed_by(space, seg) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
    }

    #[test]
    fn constant_full_has_orbit_spec_with_zero_gap() {
        let c = circle(8);
        let f = sys(&c, BuiltinMap::ConstantFull);
        let inst = BlockSpecInstance::new(
            &f,
            vec![(block(&f, &[1, 7, 2]), 0), (block(&f, &[5]), 3), (block(&f, &[0, 4]), 5)],
            r(1, 16),
            0,
            Some(7),
        )
        .unwrap();
        let seg = orbit_spec_check(&f, &inst, 16).unwrap().unwrap();
        assert_eq!(seg.len(), 8);
        assert_eq!(seg.states()[0..3], [1, 7, 2]);
        assert_eq!(seg.states()[3], 5);
        assert_eq!(seg.states()[5..7], [0, 4]);
        assert_eq!(seg.states()[7], seg.states()[0]);
        assert!(inst.is_shadowed_by(&c, seg.states()));
    }

    #[test]
    fn single_block_shadows_itself() {
        let c = circle(8);
        let f = sys(&c, BuiltinMap::RotationInterval { k: 2 });
        let b = block(&f, &[0, 1, 3, 4, 6]);
        let inst = BlockSpecInstance::new(&f, vec![(b.clone(), 0)], r(1, 8), 0, None).unwrap();
        assert_eq!(orbit_spec_check(&f, &inst, 5).unwrap(), Some(b));
        assert!(matches!(orbit_spec_check(&f, &inst, 4), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn block_instance_validation() {
        let c = circle(8);
        let f = sys(&c, BuiltinMap::Identity);
        let b = block(&f, &[2, 2]);
        assert!(BlockSpecInstance::new(&f, vec![(b.clone(), 0), (b.clone(), 1)], r(1, 8), 0, None).is_err());
        assert!(BlockSpecInstance::new(&f, vec![(b.clone(), 0), (b.clone(), 2)], r(1, 8), 0, None).is_ok());
        assert!(BlockSpecInstance::new(&f, vec![(b.clone(), 0), (b.clone(), 3)], r(1, 8), 2, None).is_err());
        assert!(BlockSpecInstance::new(&f, vec![(b.clone(), 0), (b.clone(), 3)], r(1, 8), 0, Some(4)).is_err());
        assert!(BlockSpecInstance::new(&f, vec![(b.clone(), 0), (b.clone(), 3)], r(1, 8), 0, Some(5)).is_ok());
        assert!(OrbitSegment::new(&f, vec![2, 3]).is_err());
    }

    #[test]
    fn orbit_spec_matches_exhaustive_search() {
        let c = circle(8);
        let systems = [
            sys(&c, BuiltinMap::Identity),
            sys(&c, BuiltinMap::Rotation { k: 3 }),
            sys(&c, BuiltinMap::Doubling),
            sys(&c, BuiltinMap::RotationInterval { k: 1 }),
            sys(&c, BuiltinMap::BlurredDoubling { delta: r(1, 8) }),
            sys(&c, BuiltinMap::ConstantFull),
        ];
        let mut present = 0;
        let mut absent = 0;
        for f in &systems {
            for s in 0..8 {
                let b1 = block(f, &[s]);
                let t = f.image(s)[0];
                let b2 = block(f, &[(s * 3 + 1) % 8, f.image((s * 3 + 1) % 8)[0]]);
                for eps in [r(1, 16), r(1, 8), r(1, 4)] {
                    for (gap, period) in [(0, None), (1, None), (0, Some(5)), (1, Some(5)), (2, None)] {
                        let candidates = [
                            vec![(b1.clone(), 0), (b2.clone(), 2 + gap)],
                            vec![(block(f, &[s, t]), 0)],
                            vec![(b2.clone(), 0), (b1.clone(), 2 + gap)],
                        ];
                        for blocks in candidates {
                            let Ok(inst) = BlockSpecInstance::new(f, blocks, eps, gap, period) else {
                                continue;
                            };
                            if inst.shadow_len() > 6 {
                                continue;
                            }
                            let got = orbit_spec_check(f, &inst, 6).unwrap();
                            let expected = brute_orbit_spec(f, &inst);
                            assert_eq!(got.is_some(), expected, "{} {inst:?}", f.label());
                            if let Some(seg) = got {
                                assert!(inst.is_shadowed_by(&c, seg.states()));
                                present += 1;
                            } else {
                                absent += 1;
                            }
                        }
                    }
                }
            }
        }
        assert!(present > 0 && absent > 0);
    }

    #[test]
    fn orbit_spec_monotone_in_eps() {
        let c = circle(8);
        let f = sys(&c, BuiltinMap::Rotation { k: 3 });
        for s in 0..8 {
            let blocks = vec![(block(&f, &[s]), 0), (block(&f, &[(s + 2) % 8]), 2)];
            let mut seen = false;
            for e in 1..=8 {
                let inst = BlockSpecInstance::new(&f, blocks.clone(), r(e, 16), 1, None).unwrap();
                let ok = orbit_spec_check(&f, &inst, 8).unwrap().is_some();
                assert!(ok || !seen);
                seen |= ok;
            }
            assert!(seen);
        }
    }

    /// Boolean relation matrix powers: first `k` with `A^k` all ones, if any
    /// up to `limit`.
    fn primitivity_exponent(map: &SetValuedMap, limit: usize) -> Option<usize> {
        let n = map.len();
        let a: Vec<Vec<bool>> = (0..n).map(|x| (0..n).map(|y| map.relates(x, y)).collect()).collect();
        let mut p = a.clone();
        for k in 1..=limit {
            if p.iter().all(|row| row.iter().all(|&b| b)) {
                return Some(k);
            }
            p = (0..n)
                .map(|i| (0..n).map(|j| (0..n).any(|l| p[i][l] && a[l][j])).collect())
                .collect();
        }
        None
    }

    #[test]
    fn constant_full_mixes_immediately() {
        let c = circle(16);
        let f = sys(&c, BuiltinMap::ConstantFull);
        let rep = mixing_check(&f, &default_opens(&c), 4).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.pairs.len(), 256);
        assert!(rep.pairs.iter().all(|p| p.m_witness == Some(0)));
    }

    #[test]
    fn identity_does_not_mix() {
        let c = circle(16);
        let f = sys(&c, BuiltinMap::Identity);
        let rep = mixing_check(&f, &default_opens(&c), 20).unwrap();
        assert!(!rep.pass);
        assert!(rep.failures().any(|p| p.u == 0 && p.v == 8));
        // Overlapping balls meet at every time.
        let p = rep.pairs.iter().find(|p| p.u == 0 && p.v == 1).unwrap();
        assert_eq!(p.m_witness, Some(0));
    }

    #[test]
    fn blurred_doubling_mixes_like_its_matrix() {
        let c = circle(64);
        let f = sys(&c, BuiltinMap::BlurredDoubling { delta: r(1, 16) });
        let k = primitivity_exponent(&f, 32).expect("primitive");
        let rep = mixing_check(&f, &default_opens(&c), 32).unwrap();
        assert!(rep.pass);
        // Once A^k is all ones every later power is too, so no pair can miss after k.
        assert!(rep.max_witness().unwrap() < k);
        // Singletons as opens: the witness is exactly the primitivity exponent minus one.
        let points: Vec<PointSet> = (0..64).map(|x| PointSet::singleton(&c, x).unwrap()).collect();
        let rep = mixing_check(&f, &points, 32).unwrap();
        assert_eq!(rep.max_witness(), Some(k - 1));
    }

    #[test]
    fn mixing_hit_pattern_is_not_extrapolated() {
        // Rotation by half a turn on q=4 alternates between two balls.
        let c = circle(4);
        let f = sys(&c, BuiltinMap::Rotation { k: 2 });
        let opens: Vec<PointSet> = (0..4).map(|x| PointSet::singleton(&c, x).unwrap()).collect();
        for h in 1..6 {
            let rep = mixing_check(&f, &opens, h).unwrap();
            assert!(!rep.pass);
            let p = rep.pairs.iter().find(|p| p.u == 0 && p.v == 2).unwrap();
            assert_eq!(p.m_witness, (h % 2 == 1).then_some(h - 1));
        }
    }

    #[test]
    fn audit_constant_full() {
        let c = circle(16);
        let f = sys(&c, BuiltinMap::ConstantFull);
        let rep = implication_audit(&f, &AuditGrid::default_for(&c)).unwrap();
        assert!(!rep.spec_holds);
        assert!(rep.mixing.pass);
        assert!(rep.violations.is_empty());
    }

    #[test]
    fn audit_identity() {
        let c = circle(16);
        let f = sys(&c, BuiltinMap::Identity);
        let rep = implication_audit(&f, &AuditGrid::default_for(&c)).unwrap();
        assert!(!rep.spec_holds);
        assert!(!rep.mixing.pass);
        assert!(rep.violations.is_empty());
    }

    /// Both sides of the audit on the 25-point cat map evaluated directly:
    /// the map is a permutation, so `F^a(z)` is one point found by walking.
    #[test]
    fn audit_anosov_matches_direct_evaluation() {
        let t = Arc::new(MetricSpace::torus(5).unwrap());
        let f = sys(&t, BuiltinMap::AnosovMimic);
        let grid = AuditGrid::default_for(&t);
        let rep = implication_audit(&f, &grid).unwrap();
        let step = |z: usize| {
            let (x, y) = (z / 5, z % 5);
            ((2 * x + y) % 5) * 5 + (x + y) % 5
        };
        let walk = |z: usize, a: usize| (0..a).fold(z, |p, _| step(p));
        let mut i = 0;
        for &eps in &grid.epsilons {
            for &gap in &grid.gaps {
                let cell = &rep.cells[i];
                i += 1;
                let insts = sample_instances(&t, &grid, eps, gap).unwrap();
                let ok = insts
                    .iter()
                    .filter(|inst| {
                        (0..25).any(|z| inst.targets().iter().all(|&(x, a)| t.distance(walk(z, a), x) < eps))
                    })
                    .count();
                assert_eq!(cell.succeeded, ok);
                assert_eq!(cell.instances, insts.len());
            }
        }
        let spec = grid
            .epsilons
            .iter()
            .all(|&e| rep.cells.iter().any(|c| c.epsilon == e && c.holds()));
        assert_eq!(rep.spec_holds, spec);
        // Mixing side: U and V are one-step balls, hit iff some point of U walks into V.
        assert_eq!(rep.mixing.pass, mixing_direct(&default_opens(&t), grid.horizon, walk));
        assert_eq!(rep.violations.is_empty(), !spec || rep.mixing.pass);
    }

    fn mixing_direct(balls: &[PointSet], horizon: usize, walk: impl Fn(usize, usize) -> usize) -> bool {
        balls.iter().all(|u| {
            balls.iter().all(|v| {
                let hit = |m: usize| u.members().iter().any(|&z| v.contains(walk(z, m)));
                hit(horizon)
            })
        })
    }
}
