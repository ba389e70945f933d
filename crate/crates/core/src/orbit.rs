//! Finite orbit segments, their metrics, and the semi-metric `d_n`.

use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{MetricSpace, PointSet};
use crate::svmap::SetValuedMap;
use crate::Length;

/// States `x_0, ..., x_{n-1}` with `x_{i+1}` in `F(x_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitSegment {
    states: Vec<usize>,
}

impl OrbitSegment {
    /// Validates `states` against `map`.
    pub fn new(map: &SetValuedMap, states: Vec<usize>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::ZeroLength);
        }
        for &s in &states {
            map.space().check_point(s)?;
        }
        for (step, w) in states.windows(2).enumerate() {
            if !map.relates(w[0], w[1]) {
                return Err(Error::NotAnOrbit {
                    step,
                    from: w[0],
                    to: w[1],
                });
            }
        }
        Ok(Self { states })
    }

    pub(crate) fn from_states(states: Vec<usize>) -> Self {
        debug_assert!(!states.is_empty());
        Self { states }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn start(&self) -> usize {
        self.states[0]
    }

    /// Drops `x_0` and appends `next`; the shift on a finite window.
    pub fn shifted(&self, next: usize) -> Self {
        let mut states = self.states[1..].to_vec();
        states.push(next);
        Self { states }
    }
}

/// A family of equal-length orbit segments.
///
/// `exhaustive` is false when enumeration stopped at its cap, in which case
/// the family is a prefix (in enumeration order) of the true orbit set.
#[derive(Debug, Clone)]
pub struct OrbitSet {
    space: Arc<MetricSpace>,
    length: usize,
    start: Option<usize>,
    exhaustive: bool,
    states: Vec<usize>,
}

impl PartialEq for OrbitSet {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space)
            && self.length == other.length
            && self.start == other.start
            && self.exhaustive == other.exhaustive
            && self.states == other.states
    }
}

impl Eq for OrbitSet {}

impl OrbitSet {
    pub fn from_segments(map: &SetValuedMap, segments: &[OrbitSegment], exhaustive: bool) -> Result<Self> {
        let length = segments.first().map_or(1, OrbitSegment::len);
        let mut states = Vec::with_capacity(length * segments.len());
        for s in segments {
            if s.len() != length {
                return Err(Error::LengthMismatch(length, s.len()));
            }
            OrbitSegment::new(map, s.states().to_vec())?;
            states.extend_from_slice(s.states());
        }
        Ok(Self {
            space: Arc::clone(map.space()),
            length,
            start: None,
            exhaustive,
            states,
        })
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    /// Segment length `n`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn start(&self) -> Option<usize> {
        self.start
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.length
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn segment(&self, i: usize) -> &[usize] {
        &self.states[i * self.length..(i + 1) * self.length]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.states.chunks_exact(self.length)
    }

    pub fn to_segments(&self) -> Vec<OrbitSegment> {
        self.iter()
            .map(|s| OrbitSegment::from_states(s.to_vec()))
            .collect()
    }
}

/// Depth-first walk over `Sigma_n(x)` for each start, ascending point order.
/// Returns `false` if the visitor stopped the walk early.
pub fn for_each_segment<V>(map: &SetValuedMap, starts: &[usize], n: usize, mut visit: V) -> bool
where
    V: FnMut(&[usize]) -> ControlFlow<()>,
{
    debug_assert!(n >= 1);
    let mut path: Vec<usize> = Vec::with_capacity(n);
    // Per depth: index of the next child to try.
    let mut cursor: Vec<usize> = Vec::with_capacity(n);
    for &x in starts {
        path.clear();
        cursor.clear();
        path.push(x);
        cursor.push(0);
        while let Some(&depth_cursor) = cursor.last() {
            let depth = path.len();
            if depth == n {
                if visit(&path).is_break() {
                    return false;
                }
                path.pop();
                cursor.pop();
                continue;
            }
            let img = map.image(path[depth - 1]);
            if depth_cursor < img.len() {
                *cursor.last_mut().expect("non-empty") += 1;
                path.push(img[depth_cursor]);
                cursor.push(0);
            } else {
                path.pop();
                cursor.pop();
            }
        }
    }
    true
}

/// Enumerates `Sigma_n(start)`, or `Orb_n(X, F)` when `start` is `None`,
/// stopping after `cap` segments.
pub fn enumerate_segments(
    map: &SetValuedMap,
    start: Option<usize>,
    n: usize,
    cap: usize,
) -> Result<OrbitSet> {
    let starts: Vec<usize> = match start {
        Some(x) => {
            map.space().check_point(x)?;
            vec![x]
        }
        None => (0..map.len()).collect(),
    };
    let mut set = enumerate_from(map, &starts, n, cap)?;
    set.start = start;
    Ok(set)
}

/// Enumerates the union of `Sigma_n(x)` over `x` in `a`.
pub fn enumerate_from_set(map: &SetValuedMap, a: &PointSet, n: usize, cap: usize) -> Result<OrbitSet> {
    if !a.space().same_as(map.space()) {
        return Err(Error::SpaceMismatch);
    }
    enumerate_from(map, a.members(), n, cap)
}

fn enumerate_from(map: &SetValuedMap, starts: &[usize], n: usize, cap: usize) -> Result<OrbitSet> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    if cap == 0 {
        return Err(Error::ZeroCap);
    }
    let mut states = Vec::new();
    let mut count = 0usize;
    let completed = for_each_segment(map, starts, n, |seg| {
        if count == cap {
            return ControlFlow::Break(());
        }
        states.extend_from_slice(seg);
        count += 1;
        ControlFlow::Continue(())
    });
    Ok(OrbitSet {
        space: Arc::clone(map.space()),
        length: n,
        start: None,
        exhaustive: completed,
        states,
    })
}

/// Backward segments `(x_0 = start, x_1, ...)` with `x_i` in `F(x_{i+1})`,
/// enumerated on the transposed relation. Branches that run out of
/// preimages are dropped.
pub fn enumerate_backward_segments(
    map: &SetValuedMap,
    start: usize,
    n: usize,
    cap: usize,
) -> Result<OrbitSet> {
    map.space().check_point(start)?;
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    if cap == 0 {
        return Err(Error::ZeroCap);
    }
    let pre = map.preimages();
    let mut states = Vec::new();
    let mut count = 0;
    let mut exhaustive = true;
    let mut stack = vec![vec![start]];
    'walk: while let Some(path) = stack.pop() {
        if path.len() == n {
            if count == cap {
                exhaustive = false;
                break 'walk;
            }
            states.extend_from_slice(&path);
            count += 1;
            continue;
        }
        let last = *path.last().expect("non-empty");
        for &p in pre[last].iter().rev() {
            let mut next = path.clone();
            next.push(p);
            stack.push(next);
        }
    }
    Ok(OrbitSet {
        space: Arc::clone(map.space()),
        length: n,
        start: Some(start),
        exhaustive,
        states,
    })
}

pub(crate) fn dn_units(space: &MetricSpace, a: &[usize], b: &[usize]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| space.units(x, y))
        .max()
        .unwrap_or(0)
}

/// `D_n(a, b) = max_i d(a_i, b_i)`.
pub fn metric_dn(space: &MetricSpace, a: &OrbitSegment, b: &OrbitSegment) -> Result<Length> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(space.to_length(dn_units(space, a.states(), b.states())))
}

/// Truncated `rho(a, b) = max_i d(a_i, b_i) / (i + 1)` over the available indices.
pub fn metric_rho_truncated(space: &MetricSpace, a: &OrbitSegment, b: &OrbitSegment) -> Result<Length> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.states()
        .iter()
        .zip(b.states())
        .enumerate()
        .map(|(i, (&x, &y))| space.distance(x, y) / Length::from_integer(i as i64 + 1))
        .max()
        .unwrap_or_else(|| Length::from_integer(0)))
}

const INF: u32 = u32::MAX;

/// `d_n(x, y) = inf { D_n(a, b) : a in Sigma_n(x), b in Sigma_n(y) }`.
///
/// Forward bottleneck DP over the product relation, started from `(x, y)`:
/// `v_{t+1}(a', b') = max(d(a', b'), min v_t(a, b))` over predecessor pairs,
/// with the inner minimum split into two one-sided passes.
pub fn semimetric_dn(map: &SetValuedMap, x: usize, y: usize, n: usize) -> Result<Length> {
    let space = map.space();
    space.check_point(x)?;
    space.check_point(y)?;
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let q = map.len();
    let pre = map.preimages();
    let mut v = vec![INF; q * q];
    v[x * q + y] = space.units(x, y);
    let mut half = vec![INF; q * q];
    for _ in 1..n {
        // half[a * q + b'] = min over b in Pre(b') of v[a][b]
        for a in 0..q {
            let row = &v[a * q..(a + 1) * q];
            if row.iter().all(|&u| u == INF) {
                half[a * q..(a + 1) * q].fill(INF);
                continue;
            }
            for (bp, preds) in pre.iter().enumerate() {
                half[a * q + bp] = preds.iter().map(|&b| row[b]).min().unwrap_or(INF);
            }
        }
        let mut next = vec![INF; q * q];
        for (ap, preds) in pre.iter().enumerate() {
            for bp in 0..q {
                let best = preds.iter().map(|&a| half[a * q + bp]).min().unwrap_or(INF);
                if best != INF {
                    next[ap * q + bp] = best.max(space.units(ap, bp));
                }
            }
        }
        v = next;
    }
    let best = v.into_iter().min().expect("q >= 1");
    debug_assert!(best != INF);
    Ok(space.to_length(best))
}

/// All-pairs `d_n` table.
#[derive(Debug, Clone)]
pub struct DnMatrix {
    space: Arc<MetricSpace>,
    n: usize,
    units: Vec<u32>,
}

impl DnMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn units(&self, x: usize, y: usize) -> u32 {
        self.units[x * self.space.len() + y]
    }

    pub fn get(&self, x: usize, y: usize) -> Length {
        self.space.to_length(self.units(x, y))
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn rows(&self) -> Vec<Vec<Length>> {
        let q = self.len();
        (0..q)
            .map(|x| (0..q).map(|y| self.get(x, y)).collect())
            .collect()
    }
}

/// All-pairs `d_n` by backward bottleneck DP:
/// `w_1 = d`, `w_{k+1}(a, b) = max(d(a, b), min_{a' in F(a), b' in F(b)} w_k(a', b'))`.
pub fn dn_matrix(map: &SetValuedMap, n: usize) -> Result<DnMatrix> {
    if n == 0 {
        return Err(Error::ZeroLength);
    }
    let space = Arc::clone(map.space());
    let q = map.len();
    let base: Vec<u32> = (0..q * q).map(|i| space.units(i / q, i % q)).collect();
    let mut w = base.clone();
    for _ in 1..n {
        // half[a' * q + b] = min over b' in F(b) of w[a'][b']
        let half: Vec<u32> = (0..q)
            .into_par_iter()
            .flat_map_iter(|ap| {
                let row = &w[ap * q..(ap + 1) * q];
                (0..q).map(move |b| map.image(b).iter().map(|&bp| row[bp]).min().expect("non-empty"))
            })
            .collect();
        w = (0..q)
            .into_par_iter()
            .flat_map_iter(|a| {
                let half = &half;
                let base = &base;
                (0..q).map(move |b| {
                    let best = map.image(a).iter().map(|&ap| half[ap * q + b]).min().expect("non-empty");
                    best.max(base[a * q + b])
                })
            })
            .collect();
    }
    Ok(DnMatrix {
        space,
        n,
        units: w,
    })
}

/// A cycle through `x` of minimal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicOrbit {
    pub period: usize,
    /// `period + 1` states, first and last equal to `x`.
    pub cycle: OrbitSegment,
}

/// Smallest `n <= max_period` with `x` in `F^n({x})`, with a realizing cycle.
pub fn find_periodic(map: &SetValuedMap, x: usize, max_period: usize) -> Result<Option<PeriodicOrbit>> {
    map.space().check_point(x)?;
    let q = map.len();
    let mut layers: Vec<Vec<bool>> = Vec::with_capacity(max_period + 1);
    let mut start = vec![false; q];
    start[x] = true;
    layers.push(start);
    for period in 1..=max_period {
        let next = map.image_mask(layers.last().expect("non-empty"));
        let closes = next[x];
        layers.push(next);
        if closes {
            let mut states = vec![x; period + 1];
            for t in (1..period).rev() {
                let target = states[t + 1];
                states[t] = (0..q)
                    .find(|&p| layers[t][p] && map.relates(p, target))
                    .expect("layer t+1 is the image of layer t");
            }
            debug_assert!(map.relates(x, states[1]));
            return Ok(Some(PeriodicOrbit {
                period,
                cycle: OrbitSegment::from_states(states),
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftDemoReport {
    /// Points `t` of the set with `t` in `F(t)`.
    pub valid_points: Vec<usize>,
    /// The constant segments, one per valid point.
    pub segments: Vec<OrbitSegment>,
    /// True iff at least one constant segment exists and the shift fixes each.
    pub shift_fixed: bool,
}

/// Constant sequences `(t, t, ...)` over points with `t` in `F(t)` and their
/// behaviour under the shift.
pub fn constant_sequence_shift_demo(map: &SetValuedMap, a: &PointSet, window: usize) -> Result<ShiftDemoReport> {
    if !a.space().same_as(map.space()) {
        return Err(Error::SpaceMismatch);
    }
    if window == 0 {
        return Err(Error::ZeroLength);
    }
    let valid_points: Vec<usize> = a.members().iter().copied().filter(|&t| map.relates(t, t)).collect();
    let segments: Vec<OrbitSegment> = valid_points
        .iter()
        .map(|&t| OrbitSegment::new(map, vec![t; window]))
        .collect::<Result<_>>()?;
    let shift_fixed = !segments.is_empty()
        && segments.iter().all(|s| {
            let next = s.states()[window - 1];
            map.relates(next, next) && s.shifted(next) == *s
        });
    Ok(ShiftDemoReport {
        valid_points,
        segments,
        shift_fixed,
    })
}
