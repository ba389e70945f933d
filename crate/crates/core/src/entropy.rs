//! Separated and spanning counts and their growth rates.
//!
//! On orbit segments (metric `D_n`) these are `s_n` and `r_n`; on points
//! under the semi-metric `d_n` they are `S_n` and `R_n`. Separation is
//! strict (`> eps`), covering uses closed balls (`<= eps`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{dn_matrix, dn_units, for_each_segment, OrbitSegment, OrbitSet};
use crate::packing::{self, Exhausted, Proximity, SetCover};
use crate::space::MetricSpace;
use crate::svmap::SetValuedMap;
use crate::Length;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Greedy,
    Exact,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Greedy => "greedy",
            Mode::Exact => "exact",
        })
    }
}

pub const DEFAULT_NODE_BUDGET: u64 = 2_000_000;

/// Mode plus the node budget for exact searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub mode: Mode,
    pub node_budget: u64,
}

impl From<Mode> for SearchOptions {
    fn from(mode: Mode) -> Self {
        Self {
            mode,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Which count a result estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CountKind {
    /// Separated orbit segments, `s_n`.
    #[serde(rename = "s")]
    SeparatedOrbits,
    /// Spanning orbit segments, `r_n`.
    #[serde(rename = "r")]
    SpanningOrbits,
    /// Separated points under `d_n`, `S_n`.
    #[serde(rename = "S")]
    SeparatedPoints,
    /// Spanning points under `d_n`, `R_n`.
    #[serde(rename = "R")]
    SpanningPoints,
}

impl fmt::Display for CountKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountKind::SeparatedOrbits => "s",
            CountKind::SpanningOrbits => "r",
            CountKind::SeparatedPoints => "S",
            CountKind::SpanningPoints => "R",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingResult<W> {
    witnesses: Vec<W>,
    mode: Mode,
    exhaustive_input: bool,
}

impl<W> PackingResult<W> {
    pub fn cardinality(&self) -> usize {
        self.witnesses.len()
    }

    pub fn witnesses(&self) -> &[W] {
        &self.witnesses
    }

    pub fn into_witnesses(self) -> Vec<W> {
        self.witnesses
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn exhaustive_input(&self) -> bool {
        self.exhaustive_input
    }
}

fn threshold(space: &MetricSpace, eps: Length) -> Result<u32> {
    if eps <= Length::from_integer(0) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    Ok(space.floor_units(eps).min(u32::MAX as i64 - 1) as u32)
}

fn exhausted(e: Exhausted) -> Error {
    Error::SearchBudgetExhausted {
        nodes: e.nodes,
        best: e.best,
        bound: e.bound,
    }
}

/// `within[x]` = points at distance `<= e` from `x`.
fn neighbourhoods(space: &MetricSpace, e: u32) -> Vec<Vec<usize>> {
    (0..space.len())
        .map(|x| (0..space.len()).filter(|&y| space.units(x, y) <= e).collect())
        .collect()
}

/// Greedy separated family over a stream of segments: a segment is kept iff
/// its `D_n` distance to every kept one exceeds `e` units. Kept segments are
/// bucketed by first state so each test only visits nearby buckets.
struct GreedySeparated<'a> {
    space: &'a MetricSpace,
    e: u32,
    within: Vec<Vec<usize>>,
    buckets: Vec<Vec<usize>>,
    kept: Vec<usize>,
    n: usize,
}

impl<'a> GreedySeparated<'a> {
    fn new(space: &'a MetricSpace, e: u32, n: usize) -> Self {
        Self {
            space,
            e,
            within: neighbourhoods(space, e),
            buckets: vec![Vec::new(); space.len()],
            kept: Vec::new(),
            n,
        }
    }

    fn offer(&mut self, seg: &[usize]) -> bool {
        let n = self.n;
        let close = self.within[seg[0]].iter().any(|&z| {
            self.buckets[z]
                .iter()
                .any(|&k| dn_units(self.space, seg, &self.kept[k * n..(k + 1) * n]) <= self.e)
        });
        if close {
            return false;
        }
        self.buckets[seg[0]].push(self.kept.len() / n);
        self.kept.extend_from_slice(seg);
        true
    }

    fn into_segments(self) -> Vec<OrbitSegment> {
        self.kept
            .chunks_exact(self.n)
            .map(|s| OrbitSegment::from_states(s.to_vec()))
            .collect()
    }
}

/// Greedy maximal separated family of `Orb_n` (or `Sigma_n` of the given
/// starts) streamed straight from the enumeration, without materializing the
/// orbit set. At most `cap` segments are examined; the flag reports whether
/// the enumeration completed.
pub fn greedy_separated_stream(
    map: &SetValuedMap,
    starts: Option<&[usize]>,
    n: usize,
    eps: Length,
    cap: usize,
) -> Result<(PackingResult<OrbitSegment>, bool)> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    if cap == 0 {
        return Err(Error::ZeroCap);
    }
    let space = map.space();
    let e = threshold(space, eps)?;
    let all: Vec<usize>;
    let starts = match starts {
        Some(s) => {
            for &x in s {
                space.check_point(x)?;
            }
            s
        }
        None => {
            all = (0..map.len()).collect();
            &all
        }
    };
    let mut greedy = GreedySeparated::new(space, e, n);
    let mut seen = 0usize;
    let completed = for_each_segment(map, starts, n, |seg| {
        if seen == cap {
            return ControlFlow::Break(());
        }
        seen += 1;
        greedy.offer(seg);
        ControlFlow::Continue(())
    });
    Ok((
        PackingResult {
            witnesses: greedy.into_segments(),
            mode: Mode::Greedy,
            exhaustive_input: completed,
        },
        completed,
    ))
}

fn orbit_proximity(set: &OrbitSet, e: u32) -> Proximity {
    let space = set.space();
    Proximity::build(set.len(), |i, j| dn_units(space, set.segment(i), set.segment(j)) <= e)
}

/// Permutations of an orbit set that preserve `D_n`: an isometry of the net
/// applied to every coordinate or to a single one, time reversal, and
/// adjacent coordinate swaps, kept only when they map the set onto itself.
fn orbit_symmetries(set: &OrbitSet) -> Vec<Vec<usize>> {
    let n = set.length();
    let index: HashMap<&[usize], usize> = set.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let isometries = set.space().isometry_generators();
    let mut candidates: Vec<Box<dyn Fn(&[usize]) -> Vec<usize> + '_>> = Vec::new();
    for g in &isometries {
        candidates.push(Box::new(move |s: &[usize]| s.iter().map(|&x| g[x]).collect()));
        if n > 1 {
            for i in 0..n {
                candidates.push(Box::new(move |s: &[usize]| {
                    let mut t = s.to_vec();
                    t[i] = g[t[i]];
                    t
                }));
            }
        }
    }
    if n > 1 {
        candidates.push(Box::new(|s: &[usize]| s.iter().rev().copied().collect()));
        for i in 0..n - 1 {
            candidates.push(Box::new(move |s: &[usize]| {
                let mut t = s.to_vec();
                t.swap(i, i + 1);
                t
            }));
        }
    }
    candidates
        .into_iter()
        .filter_map(|c| {
            let perm: Option<Vec<usize>> = set.iter().map(|s| index.get(c(s).as_slice()).copied()).collect();
            perm.filter(|p| p.iter().enumerate().any(|(i, &j)| i != j))
        })
        .collect()
}

fn segments_of(set: &OrbitSet, idx: &[usize]) -> Vec<OrbitSegment> {
    idx.iter()
        .map(|&i| OrbitSegment::from_states(set.segment(i).to_vec()))
        .collect()
}

/// Node budget for each slice subproblem.
const SLICE_BUDGET: u64 = 200_000;

/// Distinct projections of `rows` with coordinate `skip` removed.
fn project(set: &OrbitSet, rows: impl Iterator<Item = usize>, skip: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = rows
        .map(|r| {
            let s = set.segment(r);
            s[..skip].iter().chain(&s[skip + 1..]).copied().collect()
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Upper bound on separated families by slicing along one time coordinate.
///
/// With `rho = floor(e / 2)`, members of a separated family whose `i`-th
/// states lie within `rho` of a common point `z` are close in coordinate `i`,
/// so they must be separated in the remaining coordinates. Each member is
/// counted once per point of `B(a_i, rho)`, hence
/// `count * min |B(a_i, rho)| <= sum_z P_z`, with `P_z` the (bound on the)
/// largest separated family among projections of `{a : d(a_i, z) <= rho}`.
fn slice_pack_bound(set: &OrbitSet, e: u32) -> Option<usize> {
    let n = set.length();
    if n < 2 || set.is_empty() {
        return None;
    }
    let space = set.space();
    let rho = e / 2;
    let within = neighbourhoods(space, rho);
    (0..n)
        .map(|i| {
            let min_ball = set.iter().map(|s| within[s[i]].len()).min().unwrap_or(1);
            let total: usize = (0..space.len())
                .map(|z| {
                    let rows = (0..set.len()).filter(|&r| space.units(set.segment(r)[i], z) <= rho);
                    let proj = project(set, rows, i);
                    if proj.is_empty() {
                        return 0;
                    }
                    let p = Proximity::build(proj.len(), |a, b| dn_units(space, &proj[a], &proj[b]) <= e);
                    match packing::exact_pack(&p, SLICE_BUDGET, None, &[]) {
                        Ok(best) => best.len(),
                        Err(ex) => ex.bound,
                    }
                })
                .sum();
            total / min_ball
        })
        .min()
}

/// Lower bound on spanning families by slicing along one time coordinate.
///
/// Segments with `b_i = z` can only be covered by segments with
/// `d(a_i, z) <= e`, and then only the other coordinates matter. If `g_z` is
/// the (bound on the) minimum number of such segments covering the slice,
/// and each segment serves at most `M` slices, then `count >= sum_z g_z / M`.
fn slice_cover_bound(set: &OrbitSet, e: u32) -> Option<usize> {
    let n = set.length();
    if n < 2 || set.is_empty() {
        return None;
    }
    let space = set.space();
    (0..n)
        .map(|i| {
            let mut values: Vec<usize> = set.iter().map(|s| s[i]).collect();
            values.sort_unstable();
            values.dedup();
            let serves = set
                .iter()
                .map(|s| values.iter().filter(|&&z| space.units(s[i], z) <= e).count())
                .max()
                .unwrap_or(1);
            let total: usize = values
                .iter()
                .map(|&z| {
                    let elems = project(set, (0..set.len()).filter(|&r| set.segment(r)[i] == z), i);
                    let cands = project(
                        set,
                        (0..set.len()).filter(|&r| space.units(set.segment(r)[i], z) <= e),
                        i,
                    );
                    let sc = SetCover::build(elems.len(), cands.len(), |c, x| {
                        dn_units(space, &cands[c], &elems[x]) <= e
                    });
                    match packing::exact_set_cover(&sc, SLICE_BUDGET, None) {
                        Ok(best) => best.len(),
                        Err(ex) => ex.bound,
                    }
                })
                .sum();
            total.div_ceil(serves)
        })
        .max()
}

/// Largest `(n, eps)`-separated family in an orbit set (`s_n` estimator).
pub fn pack_separated_orbits(
    set: &OrbitSet,
    eps: Length,
    options: impl Into<SearchOptions>,
) -> Result<PackingResult<OrbitSegment>> {
    let options = options.into();
    let space = set.space();
    let e = threshold(space, eps)?;
    let witnesses = match options.mode {
        Mode::Greedy => {
            let mut greedy = GreedySeparated::new(space, e, set.length());
            for seg in set.iter() {
                greedy.offer(seg);
            }
            greedy.into_segments()
        }
        Mode::Exact => {
            if !set.is_exhaustive() {
                return Err(Error::NotExhaustive);
            }
            let p = orbit_proximity(set, e);
            let upper = slice_pack_bound(set, e);
            let symmetry = orbit_symmetries(set);
            let best = packing::exact_pack(&p, options.node_budget, upper, &symmetry).map_err(exhausted)?;
            segments_of(set, &best)
        }
    };
    Ok(PackingResult {
        witnesses,
        mode: options.mode,
        exhaustive_input: set.is_exhaustive(),
    })
}

/// Smallest `(n, eps)`-spanning family of an orbit set (`r_n` estimator).
/// Covering a truncated family certifies nothing, so the input must be
/// exhaustive in both modes.
pub fn cover_spanning_orbits(
    set: &OrbitSet,
    eps: Length,
    options: impl Into<SearchOptions>,
) -> Result<PackingResult<OrbitSegment>> {
    let options = options.into();
    let e = threshold(set.space(), eps)?;
    if !set.is_exhaustive() {
        return Err(Error::NotExhaustive);
    }
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let p = orbit_proximity(set, e);
    let best = match options.mode {
        Mode::Greedy => packing::greedy_cover(&p),
        Mode::Exact => {
            let lower = slice_cover_bound(set, e);
            let symmetry = orbit_symmetries(set);
            packing::exact_cover(&p, options.node_budget, lower, &symmetry).map_err(exhausted)?
        }
    };
    Ok(PackingResult {
        witnesses: segments_of(set, &best),
        mode: options.mode,
        exhaustive_input: true,
    })
}

fn point_proximity(map: &SetValuedMap, n: usize, eps: Length) -> Result<Proximity> {
    let e = threshold(map.space(), eps)?;
    let dn = dn_matrix(map, n)?;
    Ok(Proximity::build(map.len(), |x, y| dn.units(x, y) <= e))
}

/// Largest family of points pairwise `d_n > eps` (`S_n` estimator).
pub fn pack_separated_points(
    map: &SetValuedMap,
    n: usize,
    eps: Length,
    options: impl Into<SearchOptions>,
) -> Result<PackingResult<usize>> {
    let options = options.into();
    let p = point_proximity(map, n, eps)?;
    let witnesses = match options.mode {
        Mode::Greedy => packing::greedy_pack(&p),
        Mode::Exact => packing::exact_pack(&p, options.node_budget, None, &[]).map_err(exhausted)?,
    };
    Ok(PackingResult {
        witnesses,
        mode: options.mode,
        exhaustive_input: true,
    })
}

/// Smallest family whose closed `d_n` balls cover the net (`R_n` estimator).
pub fn cover_spanning_points(
    map: &SetValuedMap,
    n: usize,
    eps: Length,
    options: impl Into<SearchOptions>,
) -> Result<PackingResult<usize>> {
    let options = options.into();
    let p = point_proximity(map, n, eps)?;
    let witnesses = match options.mode {
        Mode::Greedy => packing::greedy_cover(&p),
        Mode::Exact => packing::exact_cover(&p, options.node_budget, None, &[]).map_err(exhausted)?,
    };
    Ok(PackingResult {
        witnesses,
        mode: options.mode,
        exhaustive_input: true,
    })
}

/// Least-squares slope of `ln(count)` against `n`.
///
/// Logs are taken relative to the first count, so constant counts give a
/// slope of exactly zero.
pub fn entropy_rate(samples: &[(usize, u64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    if samples.iter().any(|&(_, c)| c == 0) {
        return Err(Error::ZeroCount);
    }
    let c0 = samples[0].1 as f64;
    let k = samples.len() as f64;
    let mean_n = samples.iter().map(|&(n, _)| n as f64).sum::<f64>() / k;
    let ys: Vec<f64> = samples.iter().map(|&(_, c)| (c as f64 / c0).ln()).collect();
    let mean_y = ys.iter().sum::<f64>() / k;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&(n, _), y) in samples.iter().zip(&ys) {
        let dx = n as f64 - mean_n;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::TooFewSamples(1));
    }
    Ok(sxy / sxx)
}

/// `ln(count_last / count_first) / (n_last - n_first)`.
pub fn endpoint_rate(samples: &[(usize, u64)]) -> Result<f64> {
    let (first, last) = match samples {
        [first, .., last] => (first, last),
        _ => return Err(Error::TooFewSamples(samples.len())),
    };
    if first.1 == 0 || last.1 == 0 {
        return Err(Error::ZeroCount);
    }
    if last.0 == first.0 {
        return Err(Error::TooFewSamples(1));
    }
    Ok((last.1 as f64 / first.1 as f64).ln() / (last.0 as f64 - first.0 as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveSample {
    pub n: usize,
    pub count: u64,
    pub mode: Mode,
}

/// Counts at one `eps` for increasing `n`, with the fitted per-step rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCurve {
    epsilon: Length,
    samples: Vec<CurveSample>,
    rate: f64,
}

impl EntropyCurve {
    pub fn new(epsilon: Length, samples: Vec<CurveSample>) -> Result<Self> {
        if samples.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(Error::Config("curve samples must have strictly increasing n".into()));
        }
        let points: Vec<(usize, u64)> = samples.iter().map(|s| (s.n, s.count)).collect();
        let rate = entropy_rate(&points)?;
        Ok(Self {
            epsilon,
            samples,
            rate,
        })
    }

    pub fn epsilon(&self) -> Length {
        self.epsilon
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Range of `n` the rate was fitted on.
    pub fn n_range(&self) -> (usize, usize) {
        (self.samples[0].n, self.samples[self.samples.len() - 1].n)
    }

    pub fn endpoint_rate(&self) -> f64 {
        let points: Vec<(usize, u64)> = self.samples.iter().map(|s| (s.n, s.count)).collect();
        endpoint_rate(&points).expect("validated in new")
    }
}

/// One count for the CSV writer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountRow {
    pub system: String,
    pub n: usize,
    pub eps: Length,
    pub kind: CountKind,
    pub count: usize,
    pub mode: Mode,
    pub exhaustive: bool,
}

/// Result of one count, keeping the bracket when an exact search gives up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Value(usize),
    /// Exact search exhausted its budget: the true value lies in `[lower, upper]`.
    Bracket { lower: usize, upper: usize },
}

impl Count {
    pub fn lower(&self) -> usize {
        match *self {
            Count::Value(v) => v,
            Count::Bracket { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> usize {
        match *self {
            Count::Value(v) => v,
            Count::Bracket { upper, .. } => upper,
        }
    }

    pub fn exact(&self) -> Option<usize> {
        match *self {
            Count::Value(v) => Some(v),
            Count::Bracket { .. } => None,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Value(v) => write!(f, "{v}"),
            Count::Bracket { lower, upper } => write!(f, "[{lower};{upper}]"),
        }
    }
}

/// Exact-or-bracket wrapper used by sweeps: budget exhaustion is turned into
/// the certified interval instead of an error.
pub fn count_or_bracket<W>(kind: CountKind, result: Result<PackingResult<W>>) -> Result<Count> {
    match result {
        Ok(r) => Ok(Count::Value(r.cardinality())),
        Err(Error::SearchBudgetExhausted { best, bound, .. }) => Ok(match kind {
            CountKind::SeparatedOrbits | CountKind::SeparatedPoints => Count::Bracket {
                lower: best,
                upper: bound,
            },
            CountKind::SpanningOrbits | CountKind::SpanningPoints => Count::Bracket {
                lower: bound,
                upper: best,
            },
        }),
        Err(e) => Err(e),
    }
}

/// Counts keyed by `(n, eps)`, merged deterministically from parallel runs.
pub type CountTable = BTreeMap<(usize, Length), Count>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::enumerate_segments;
    use crate::svmap::BuiltinMap;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn r(p: i64, q: i64) -> Length {
        Length::new(p, q)
    }

    fn map(kind: BuiltinMap, q: usize) -> SetValuedMap {
        SetValuedMap::builtin(Arc::new(MetricSpace::circle(q).unwrap()), &kind).unwrap()
    }

    fn pairwise_far(space: &MetricSpace, segs: &[OrbitSegment], e: u32) -> bool {
        segs.iter().enumerate().all(|(i, a)| {
            segs[i + 1..]
                .iter()
                .all(|b| dn_units(space, a.states(), b.states()) > e)
        })
    }

    fn covers(space: &MetricSpace, set: &OrbitSet, segs: &[OrbitSegment], e: u32) -> bool {
        set.iter()
            .all(|s| segs.iter().any(|c| dn_units(space, s, c.states()) <= e))
    }

    /// Max clique of the `> e` graph by subset enumeration.
    fn brute_s(set: &OrbitSet, e: u32) -> usize {
        let space = set.space();
        let k = set.len();
        assert!(k <= 20);
        (0u32..1 << k)
            .filter(|m| {
                (0..k).all(|i| {
                    m >> i & 1 == 0
                        || (i + 1..k).all(|j| m >> j & 1 == 0 || dn_units(space, set.segment(i), set.segment(j)) > e)
                })
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    fn brute_r(set: &OrbitSet, e: u32) -> usize {
        let space = set.space();
        let k = set.len();
        (1u32..1 << k)
            .filter(|m| {
                (0..k).all(|x| (0..k).any(|c| m >> c & 1 == 1 && dn_units(space, set.segment(c), set.segment(x)) <= e))
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn huge_eps_gives_one() {
        let f = map(BuiltinMap::ConstantFull, 6);
        let set = enumerate_segments(&f, None, 2, 1000).unwrap();
        for mode in [Mode::Greedy, Mode::Exact] {
            assert_eq!(pack_separated_orbits(&set, r(1, 2), mode).unwrap().cardinality(), 1);
            assert_eq!(cover_spanning_orbits(&set, r(1, 2), mode).unwrap().cardinality(), 1);
            assert_eq!(cover_spanning_points(&f, 3, r(1, 2), mode).unwrap().cardinality(), 1);
        }
    }

    #[test]
    fn product_witness_on_constant_full() {
        // C_eps at 0.2 on q=8: points pairwise more than 1 unit apart.
        let f = map(BuiltinMap::ConstantFull, 8);
        let c = pack_separated_points(&f, 1, r(1, 5), Mode::Exact).unwrap().cardinality();
        assert_eq!(c, 4);
        let set = enumerate_segments(&f, None, 2, 1000).unwrap();
        let s2 = pack_separated_orbits(&set, r(1, 5), Mode::Exact).unwrap();
        assert!(s2.cardinality() >= c * c);
        assert!(pairwise_far(f.space(), s2.witnesses(), 1));
    }

    #[test]
    fn constant_full_point_counts_do_not_grow() {
        let f = map(BuiltinMap::ConstantFull, 16);
        for n in 1..=4 {
            let s = pack_separated_points(&f, n, r(1, 8), Mode::Exact).unwrap();
            assert_eq!(s.cardinality(), 5);
            let r_ = cover_spanning_points(&f, n, r(1, 8), Mode::Exact).unwrap();
            assert_eq!(r_.cardinality(), 4);
        }
    }

    #[test]
    fn exact_orbit_counts_match_enumeration() {
        let systems = [
            map(BuiltinMap::Doubling, 6),
            map(BuiltinMap::RotationInterval { k: 1 }, 5),
            map(BuiltinMap::BlurredDoubling { delta: r(1, 6) }, 6),
        ];
        for f in &systems {
            for n in 1..=3 {
                let set = enumerate_segments(f, None, n, 20).unwrap();
                if !set.is_exhaustive() {
                    continue;
                }
                for eps in [r(1, 6), r(1, 3)] {
                    let e = f.space().floor_units(eps) as u32;
                    let s = pack_separated_orbits(&set, eps, Mode::Exact).unwrap();
                    assert_eq!(s.cardinality(), brute_s(&set, e), "{f:?} n={n} eps={eps}");
                    assert!(pairwise_far(f.space(), s.witnesses(), e));
                    let c = cover_spanning_orbits(&set, eps, Mode::Exact).unwrap();
                    assert_eq!(c.cardinality(), brute_r(&set, e));
                    assert!(c.cardinality() <= s.cardinality());
                }
            }
        }
    }

    #[test]
    fn orbit_symmetries_preserve_the_metric() {
        let t = Arc::new(MetricSpace::torus(4).unwrap());
        let systems = [
            map(BuiltinMap::ConstantFull, 6),
            map(BuiltinMap::BlurredDoubling { delta: r(1, 8) }, 8),
            map(BuiltinMap::RotationInterval { k: 2 }, 7),
            SetValuedMap::builtin(t, &BuiltinMap::AnosovMimic).unwrap(),
        ];
        for f in &systems {
            for n in 1..=3 {
                let set = enumerate_segments(f, None, n, usize::MAX).unwrap();
                let space = set.space();
                let gens = orbit_symmetries(&set);
                // Length-1 sets are the whole net, invariant under every isometry.
                assert!(n > 1 || !gens.is_empty(), "{}", f.label());
                for g in &gens {
                    let mut seen = g.clone();
                    seen.sort_unstable();
                    assert!(seen.iter().enumerate().all(|(i, &j)| i == j));
                    for i in (0..set.len()).step_by(3) {
                        for j in (0..set.len()).step_by(5) {
                            assert_eq!(
                                dn_units(space, set.segment(i), set.segment(j)),
                                dn_units(space, set.segment(g[i]), set.segment(g[j]))
                            );
                        }
                    }
                }
                for eps in [r(1, 8), r(1, 4)] {
                    let e = threshold(space, eps).unwrap();
                    let p = orbit_proximity(&set, e);
                    let plain = packing::exact_pack(&p, u64::MAX, None, &[]).unwrap().len();
                    let sym = packing::exact_pack(&p, u64::MAX, None, &gens).unwrap().len();
                    assert_eq!(plain, sym);
                    if set.len() <= 128 {
                        let plain = packing::exact_cover(&p, u64::MAX, None, &[]).unwrap().len();
                        let sym = packing::exact_cover(&p, u64::MAX, None, &gens).unwrap().len();
                        assert_eq!(plain, sym);
                    }
                }
            }
        }
    }

    #[test]
    fn slice_bounds_bracket_the_optimum() {
        let f = map(BuiltinMap::ConstantFull, 8);
        let set = enumerate_segments(&f, None, 2, 100).unwrap();
        // Radius-1 squares packed in the 8x8 torus and dominating it.
        let s = pack_separated_orbits(&set, r(1, 4), Mode::Exact).unwrap().cardinality();
        assert_eq!(s, 5);
        assert!(slice_pack_bound(&set, 2).unwrap() >= s);
        let c = cover_spanning_orbits(&set, r(1, 8), Mode::Exact).unwrap().cardinality();
        assert_eq!(c, 8);
        assert!(slice_cover_bound(&set, 1).unwrap() <= c);
    }

    #[test]
    fn capped_input_rules() {
        let f = map(BuiltinMap::ConstantFull, 6);
        let set = enumerate_segments(&f, None, 3, 10).unwrap();
        assert!(!set.is_exhaustive());
        let g = pack_separated_orbits(&set, r(1, 6), Mode::Greedy).unwrap();
        assert!(!g.exhaustive_input());
        assert_eq!(pack_separated_orbits(&set, r(1, 6), Mode::Exact).unwrap_err(), Error::NotExhaustive);
        assert_eq!(cover_spanning_orbits(&set, r(1, 6), Mode::Greedy).unwrap_err(), Error::NotExhaustive);
        assert!(matches!(
            pack_separated_orbits(&set, r(0, 1), Mode::Greedy),
            Err(Error::NonPositiveEpsilon(_))
        ));
    }

    #[test]
    fn streaming_greedy_agrees_with_materialized_greedy() {
        let f = map(BuiltinMap::BlurredDoubling { delta: r(1, 8) }, 16);
        for n in 1..=3 {
            let set = enumerate_segments(&f, None, n, usize::MAX).unwrap();
            let a = pack_separated_orbits(&set, r(1, 8), Mode::Greedy).unwrap();
            let (b, done) = greedy_separated_stream(&f, None, n, r(1, 8), usize::MAX).unwrap();
            assert!(done);
            assert_eq!(a.witnesses(), b.witnesses());
            // Maximality makes the family spanning.
            assert!(covers(f.space(), &set, a.witnesses(), 2));
        }
    }

    #[test]
    fn rates() {
        assert_eq!(entropy_rate(&[(1, 7), (2, 7), (3, 7), (4, 7)]).unwrap(), 0.0);
        let pow: Vec<(usize, u64)> = (1..=10).map(|n| (n, 1u64 << n)).collect();
        assert!((entropy_rate(&pow).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((endpoint_rate(&pow).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(entropy_rate(&[(1, 3)]).unwrap_err(), Error::TooFewSamples(1));
        assert_eq!(entropy_rate(&[(1, 3), (2, 0)]).unwrap_err(), Error::ZeroCount);
        let curve = EntropyCurve::new(
            r(1, 8),
            vec![
                CurveSample { n: 1, count: 2, mode: Mode::Exact },
                CurveSample { n: 3, count: 8, mode: Mode::Exact },
            ],
        )
        .unwrap();
        assert_eq!(curve.n_range(), (1, 3));
        assert!((curve.rate() - 2f64.ln()).abs() < 1e-12);
        assert!(EntropyCurve::new(r(1, 8), vec![curve.samples()[1], curve.samples()[0]]).is_err());
    }

    #[test]
    fn budget_exhaustion_becomes_a_bracket() {
        let f = map(BuiltinMap::ConstantFull, 8);
        let set = enumerate_segments(&f, None, 3, usize::MAX).unwrap();
        let opts = SearchOptions {
            mode: Mode::Exact,
            node_budget: 10,
        };
        let res = cover_spanning_orbits(&set, r(1, 8), opts);
        match count_or_bracket(CountKind::SpanningOrbits, res).unwrap() {
            Count::Bracket { lower, upper } => assert!(22 <= lower && lower < upper),
            Count::Value(v) => panic!("unexpectedly solved: {v}"),
        }
    }

    proptest! {
        #[test]
        fn greedy_brackets_exact_and_monotone(
            q in 4usize..8,
            which in 0usize..3,
            n in 1usize..3,
            a in 1i64..4,
        ) {
            let kind = [BuiltinMap::Doubling, BuiltinMap::ConstantFull, BuiltinMap::RotationInterval { k: 1 }][which].clone();
            let f = map(kind, q);
            let set = enumerate_segments(&f, None, n, 64).unwrap();
            prop_assume!(set.is_exhaustive());
            let eps = r(a, q as i64);
            let wider = r(a + 1, q as i64);
            let sg = pack_separated_orbits(&set, eps, Mode::Greedy).unwrap().cardinality();
            let se = pack_separated_orbits(&set, eps, Mode::Exact).unwrap().cardinality();
            let se_wide = pack_separated_orbits(&set, wider, Mode::Exact).unwrap().cardinality();
            let rg = cover_spanning_orbits(&set, eps, Mode::Greedy).unwrap().cardinality();
            let re = cover_spanning_orbits(&set, eps, Mode::Exact).unwrap().cardinality();
            let re_wide = cover_spanning_orbits(&set, wider, Mode::Exact).unwrap().cardinality();
            prop_assert!(sg <= se && re <= rg && re <= se);
            prop_assert!(se_wide <= se && re_wide <= re);
            let big_s = pack_separated_points(&f, n, eps, Mode::Exact).unwrap().cardinality();
            let big_r = cover_spanning_points(&f, n, eps, Mode::Exact).unwrap().cardinality();
            prop_assert!(big_r <= big_s && big_s <= se);
        }
    }
}
