//! Finite metric spaces and point sets.
//!
//! A [`MetricSpace`] is a finite net of a compact metric space. All distances
//! are exact rationals sharing one denominator (the space's *scale*), so every
//! distance is stored as an integer number of units and every comparison
//! against a threshold is an integer comparison.
//!
//! Built-in spaces are the circle of circumference 1 sampled at `q` points and
//! the `q x q` torus with the max of the two circle metrics. Explicit spaces
//! come from a validated distance table.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Length;

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Circle,
    Torus,
    Explicit,
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::Circle => "circle",
            SpaceKind::Torus => "torus",
            SpaceKind::Explicit => "explicit",
        })
    }
}

#[derive(Debug)]
pub struct MetricSpace {
    id: u64,
    kind: SpaceKind,
    /// Points per circle for circle/torus; number of points for explicit.
    side: usize,
    len: usize,
    scale: i64,
    /// Row-major distance units, explicit spaces only.
    table: Vec<u32>,
    adjacency_radius: Length,
    adjacency_units: u32,
    diameter_units: u32,
    neighbors: Vec<Vec<usize>>,
}

#[inline]
fn circle_units(q: usize, i: usize, j: usize) -> u32 {
    let a = i.abs_diff(j);
    a.min(q - a) as u32
}

impl MetricSpace {
    /// Builds a circle or torus net with `q` points per circle.
    pub fn build(kind: SpaceKind, q: usize) -> Result<Self> {
        match kind {
            SpaceKind::Circle => Self::circle(q),
            SpaceKind::Torus => Self::torus(q),
            SpaceKind::Explicit => Err(Error::Config(
                "explicit spaces need a distance table".into(),
            )),
        }
    }

    /// Points `i/q` on the circle of circumference 1.
    pub fn circle(q: usize) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidResolution(q));
        }
        let neighbors = (0..q).map(|i| vec![(i + q - 1) % q, (i + 1) % q]).collect();
        Ok(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            kind: SpaceKind::Circle,
            side: q,
            len: q,
            scale: q as i64,
            table: Vec::new(),
            adjacency_radius: Length::new(1, q as i64),
            adjacency_units: 1,
            diameter_units: (q / 2) as u32,
            neighbors,
        })
    }

    /// The `q x q` grid on the torus; point `(x, y)` has index `x * q + y`.
    pub fn torus(q: usize) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidResolution(q));
        }
        let len = q * q;
        let mut neighbors = Vec::with_capacity(len);
        for x in 0..q {
            for y in 0..q {
                let mut nb = Vec::with_capacity(8);
                for dx in [q - 1, 0, 1] {
                    for dy in [q - 1, 0, 1] {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        nb.push(((x + dx) % q) * q + (y + dy) % q);
                    }
                }
                nb.sort_unstable();
                nb.dedup();
                neighbors.push(nb);
            }
        }
        Ok(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            kind: SpaceKind::Torus,
            side: q,
            len,
            scale: q as i64,
            table: Vec::new(),
            adjacency_radius: Length::new(1, q as i64),
            adjacency_units: 1,
            diameter_units: (q / 2) as u32,
            neighbors,
        })
    }

    /// Validates a distance table and builds a space from it.
    ///
    /// Rejects non-square tables, negative entries, non-zero diagonals,
    /// asymmetry, zero distances between distinct points, and triangle
    /// inequality violations (reported with the offending triple).
    pub fn explicit(table: &[Vec<Length>], adjacency_radius: Length) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::EmptyTable);
        }
        for (row, r) in table.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        if adjacency_radius < Length::from_integer(0) {
            return Err(Error::NegativeRadius(adjacency_radius));
        }
        let zero = Length::from_integer(0);
        let mut scale: i64 = 1;
        for (i, r) in table.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if *v < zero {
                    return Err(Error::NegativeDistance { i, j, value: *v });
                }
                scale = scale
                    .checked_div(scale.gcd(v.denom()))
                    .and_then(|s| s.checked_mul(*v.denom()))
                    .ok_or(Error::ScaleOverflow)?;
            }
        }
        let mut units = vec![0u32; n * n];
        for (i, r) in table.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                let scaled = v * Length::from_integer(scale);
                debug_assert!(scaled.is_integer());
                units[i * n + j] =
                    u32::try_from(scaled.to_integer()).map_err(|_| Error::ScaleOverflow)?;
            }
        }
        for i in 0..n {
            if units[i * n + i] != 0 {
                return Err(Error::NonZeroDiagonal(i));
            }
            for j in 0..n {
                if units[i * n + j] != units[j * n + i] {
                    return Err(Error::Asymmetric { i, j });
                }
                if i != j && units[i * n + j] == 0 {
                    return Err(Error::CoincidentPoints {
                        i: i.min(j),
                        j: i.max(j),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let direct = units[i * n + k] as u64;
                    let via = units[i * n + j] as u64 + units[j * n + k] as u64;
                    if direct > via {
                        return Err(Error::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        let adjacency_units = floor_units(adjacency_radius, scale).min(u32::MAX as i64) as u32;
        let neighbors = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && units[i * n + j] <= adjacency_units)
                    .collect()
            })
            .collect();
        let diameter_units = units.iter().copied().max().unwrap_or(0);
        Ok(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            kind: SpaceKind::Explicit,
            side: n,
            len: n,
            scale,
            table: units,
            adjacency_radius,
            adjacency_units,
            diameter_units,
            neighbors,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Same net: identical handle, or equal kind, size, scale and distances.
    pub fn same_as(&self, other: &MetricSpace) -> bool {
        self.id == other.id
            || (self.kind == other.kind
                && self.side == other.side
                && self.len == other.len
                && self.scale == other.scale
                && self.adjacency_units == other.adjacency_units
                && self.table == other.table)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Points per circle (`q`) for circle and torus spaces.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Common denominator of all distances.
    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn unit(&self) -> Length {
        Length::new(1, self.scale)
    }

    /// Distance in units of `1/scale`.
    #[inline]
    pub fn units(&self, i: usize, j: usize) -> u32 {
        match self.kind {
            SpaceKind::Circle => circle_units(self.side, i, j),
            SpaceKind::Torus => {
                let q = self.side;
                circle_units(q, i / q, j / q).max(circle_units(q, i % q, j % q))
            }
            SpaceKind::Explicit => self.table[i * self.len + j],
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> Length {
        self.to_length(self.units(i, j))
    }

    pub fn to_length(&self, units: u32) -> Length {
        Length::new(units as i64, self.scale)
    }

    /// Largest integer unit count `u` with `u / scale <= value`; negative
    /// values map to `-1` so that no distance satisfies `d <= value`.
    pub fn floor_units(&self, value: Length) -> i64 {
        floor_units(value, self.scale)
    }

    pub fn adjacency_radius(&self) -> Length {
        self.adjacency_radius
    }

    pub fn adjacency_units(&self) -> u32 {
        self.adjacency_units
    }

    pub fn diameter(&self) -> Length {
        self.to_length(self.diameter_units)
    }

    pub fn diameter_units(&self) -> u32 {
        self.diameter_units
    }

    /// Points within the adjacency radius, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Torus index of lattice point `(x, y)`.
    pub fn torus_index(&self, x: usize, y: usize) -> usize {
        debug_assert_eq!(self.kind, SpaceKind::Torus);
        (x % self.side) * self.side + y % self.side
    }

    /// Point permutations generating (part of) the isometry group of the net:
    /// for a circle the unit rotation, the half turn and the reflection
    /// `t -> -t`; for a torus unit translations, axis reflections and the
    /// coordinate swap. Explicit spaces report none.
    pub fn isometry_generators(&self) -> Vec<Vec<usize>> {
        let q = self.side;
        match self.kind {
            SpaceKind::Circle => {
                let mut gens = vec![
                    (0..q).map(|t| (t + 1) % q).collect(),
                    (0..q).map(|t| (q - t) % q).collect(),
                ];
                if q % 2 == 0 {
                    gens.push((0..q).map(|t| (t + q / 2) % q).collect());
                }
                gens
            }
            SpaceKind::Torus => {
                let map = |f: &dyn Fn(usize, usize) -> (usize, usize)| -> Vec<usize> {
                    (0..q * q)
                        .map(|i| {
                            let (x, y) = f(i / q, i % q);
                            self.torus_index(x, y)
                        })
                        .collect()
                };
                vec![
                    map(&|x, y| (x + 1, y)),
                    map(&|x, y| (x, y + 1)),
                    map(&|x, y| ((q - x) % q, y)),
                    map(&|x, y| (x, (q - y) % q)),
                    map(&|x, y| (y, x)),
                ]
            }
            SpaceKind::Explicit => Vec::new(),
        }
    }

    pub fn check_point(&self, index: usize) -> Result<()> {
        if index < self.len {
            Ok(())
        } else {
            Err(Error::PointOutOfRange {
                index,
                len: self.len,
            })
        }
    }

    /// Table of all pairwise distances, row-major.
    pub fn distance_table(&self) -> Vec<Vec<Length>> {
        (0..self.len)
            .map(|i| (0..self.len).map(|j| self.distance(i, j)).collect())
            .collect()
    }

    /// Closed ball `{y : d(x, y) <= r}`.
    pub fn ball(self: &Arc<Self>, x: usize, r: Length) -> Result<PointSet> {
        self.check_point(x)?;
        if r < Length::from_integer(0) {
            return Err(Error::NegativeRadius(r));
        }
        let limit = self.floor_units(r);
        let members = (0..self.len)
            .filter(|&y| i64::from(self.units(x, y)) <= limit)
            .collect();
        Ok(PointSet::from_sorted(self, members))
    }

    pub(crate) fn ball_units(self: &Arc<Self>, x: usize, limit: u32) -> PointSet {
        let members = (0..self.len)
            .filter(|&y| self.units(x, y) <= limit)
            .collect();
        PointSet::from_sorted(self, members)
    }
}

fn floor_units(value: Length, scale: i64) -> i64 {
    if value < Length::from_integer(0) {
        return -1;
    }
    (value * Length::from_integer(scale)).floor().to_integer()
}

/// Non-empty, sorted, duplicate-free set of point indices of one space.
#[derive(Clone)]
pub struct PointSet {
    space: Arc<MetricSpace>,
    members: Vec<usize>,
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("PointSet").field(&self.members).finish()
    }
}

impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.space.same_as(&other.space) && self.members == other.members
    }
}

impl Eq for PointSet {}

impl PointSet {
    pub fn new(space: &Arc<MetricSpace>, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        if members.is_empty() {
            return Err(Error::EmptySet);
        }
        members.sort_unstable();
        members.dedup();
        space.check_point(*members.last().expect("non-empty"))?;
        Ok(Self {
            space: Arc::clone(space),
            members,
        })
    }

    /// Caller guarantees `members` is non-empty, sorted, deduplicated and in range.
    pub(crate) fn from_sorted(space: &Arc<MetricSpace>, members: Vec<usize>) -> Self {
        debug_assert!(!members.is_empty());
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(members.last().is_some_and(|&m| m < space.len()));
        Self {
            space: Arc::clone(space),
            members,
        }
    }

    /// Builds a set from a membership mask; `None` if the mask is all false.
    pub(crate) fn from_mask(space: &Arc<MetricSpace>, mask: &[bool]) -> Option<Self> {
        let members: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        (!members.is_empty()).then(|| Self::from_sorted(space, members))
    }

    pub fn full(space: &Arc<MetricSpace>) -> Self {
        Self::from_sorted(space, (0..space.len()).collect())
    }

    pub fn singleton(space: &Arc<MetricSpace>, x: usize) -> Result<Self> {
        space.check_point(x)?;
        Ok(Self::from_sorted(space, vec![x]))
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.space.len()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.space.same_as(&other.space) && self.members.iter().all(|&x| other.contains(x))
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        same_space(self, other)?;
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        members.sort_unstable();
        members.dedup();
        Ok(Self::from_sorted(&self.space, members))
    }

    pub(crate) fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.space.len()];
        for &m in &self.members {
            mask[m] = true;
        }
        mask
    }

    /// Max pairwise distance; 0 for singletons.
    pub fn diameter(&self) -> Length {
        self.space.to_length(self.diameter_units())
    }

    pub fn diameter_units(&self) -> u32 {
        let space = &*self.space;
        match space.kind {
            SpaceKind::Circle => circle_set_diameter(space.side, &self.members),
            SpaceKind::Torus => {
                let q = space.side;
                let mut xs: Vec<usize> = self.members.iter().map(|m| m / q).collect();
                let mut ys: Vec<usize> = self.members.iter().map(|m| m % q).collect();
                xs.sort_unstable();
                xs.dedup();
                ys.sort_unstable();
                ys.dedup();
                circle_set_diameter(q, &xs).max(circle_set_diameter(q, &ys))
            }
            SpaceKind::Explicit => {
                let mut best = 0;
                for (a, &i) in self.members.iter().enumerate() {
                    for &j in &self.members[a + 1..] {
                        best = best.max(space.units(i, j));
                    }
                }
                best
            }
        }
    }

    /// True iff the set induces a connected subgraph of the adjacency graph.
    pub fn is_connected(&self) -> bool {
        let mask = self.mask();
        let mut seen = vec![false; self.space.len()];
        let mut stack = vec![self.members[0]];
        seen[self.members[0]] = true;
        let mut reached = 1;
        while let Some(x) = stack.pop() {
            for &y in self.space.neighbors(x) {
                if mask[y] && !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    stack.push(y);
                }
            }
        }
        reached == self.members.len()
    }
}

fn same_space(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.space.same_as(&b.space) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch)
    }
}

/// Max circular distance within a sorted set of circle positions.
///
/// `d(p, .)` is unimodal around the circle with its peak at the antipode of
/// `p`, so the farthest member is the last one at or before the peak or the
/// first one at or after it.
fn circle_set_diameter(q: usize, sorted: &[usize]) -> u32 {
    if sorted.len() < 2 {
        return 0;
    }
    let mut best = 0;
    for &p in sorted {
        let lo = (p + q / 2) % q;
        let hi = (p + q.div_ceil(2)) % q;
        let before = match sorted.partition_point(|&s| s <= lo) {
            0 => sorted[sorted.len() - 1],
            k => sorted[k - 1],
        };
        let after = match sorted.partition_point(|&s| s < hi) {
            k if k == sorted.len() => sorted[0],
            k => sorted[k],
        };
        best = best
            .max(circle_units(q, p, before))
            .max(circle_units(q, p, after));
        if best as usize == q / 2 {
            break;
        }
    }
    best
}

/// Circular distance from `p` to the nearest member of a sorted set.
fn circle_nearest(q: usize, sorted: &[usize], p: usize) -> u32 {
    let k = sorted.partition_point(|&s| s < p);
    let after = if k == sorted.len() { sorted[0] } else { sorted[k] };
    let before = if k == 0 { sorted[sorted.len() - 1] } else { sorted[k - 1] };
    circle_units(q, p, after).min(circle_units(q, p, before))
}

/// `max_{a in A} min_{b in B} d(a, b)` in units.
pub(crate) fn directed_units(a: &PointSet, b: &PointSet) -> u32 {
    let space = &*a.space;
    match space.kind {
        SpaceKind::Circle => a
            .members
            .iter()
            .map(|&p| circle_nearest(space.side, &b.members, p))
            .max()
            .unwrap_or(0),
        _ => a
            .members
            .iter()
            .map(|&x| {
                b.members
                    .iter()
                    .map(|&y| space.units(x, y))
                    .min()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0),
    }
}

pub(crate) fn min_distance_units(a: &PointSet, b: &PointSet) -> u32 {
    let space = &*a.space;
    match space.kind {
        SpaceKind::Circle => a
            .members
            .iter()
            .map(|&p| circle_nearest(space.side, &b.members, p))
            .min()
            .unwrap_or(0),
        _ => a
            .members
            .iter()
            .flat_map(|&x| b.members.iter().map(move |&y| space.units(x, y)))
            .min()
            .unwrap_or(0),
    }
}

pub(crate) fn hausdorff_units(a: &PointSet, b: &PointSet) -> u32 {
    directed_units(a, b).max(directed_units(b, a))
}

/// `d(A, B) = min over pairs`; zero iff the sets intersect.
pub fn min_distance(a: &PointSet, b: &PointSet) -> Result<Length> {
    same_space(a, b)?;
    Ok(a.space.to_length(min_distance_units(a, b)))
}

/// Directed Hausdorff distance `sup_{a in A} d(a, B)`.
pub fn directed_hausdorff(a: &PointSet, b: &PointSet) -> Result<Length> {
    same_space(a, b)?;
    Ok(a.space.to_length(directed_units(a, b)))
}

/// Hausdorff distance: max of the two directed distances.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<Length> {
    same_space(a, b)?;
    Ok(a.space.to_length(hausdorff_units(a, b)))
}

/// A point set certified connected at its space's adjacency resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Continuum(PointSet);

impl Continuum {
    pub fn new(set: PointSet) -> Result<Self> {
        if set.is_connected() {
            Ok(Self(set))
        } else {
            Err(Error::NotConnected)
        }
    }

    /// Arc of `count` consecutive circle points starting at `start`.
    pub fn arc(space: &Arc<MetricSpace>, start: usize, count: usize) -> Result<Self> {
        if space.kind() != SpaceKind::Circle {
            return Err(Error::Config("arcs need a circle space".into()));
        }
        space.check_point(start)?;
        if count == 0 || count > space.len() {
            return Err(Error::Config(format!(
                "arc length {count} outside 1..={}",
                space.len()
            )));
        }
        let q = space.len();
        Self::new(PointSet::new(space, (0..count).map(|i| (start + i) % q))?)
    }

    pub(crate) fn from_set_unchecked(set: PointSet) -> Self {
        debug_assert!(set.is_connected());
        Self(set)
    }

    pub fn set(&self) -> &PointSet {
        &self.0
    }

    pub fn into_set(self) -> PointSet {
        self.0
    }

    pub fn diameter(&self) -> Length {
        self.0.diameter()
    }
}

impl std::ops::Deref for Continuum {
    type Target = PointSet;

    fn deref(&self) -> &PointSet {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Length {
        Length::new(n, d)
    }

    fn circle(q: usize) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::circle(q).unwrap())
    }

    fn set(space: &Arc<MetricSpace>, m: &[usize]) -> PointSet {
        PointSet::new(space, m.iter().copied()).unwrap()
    }

    fn brute_diameter(s: &PointSet) -> u32 {
        let sp = s.space();
        let mut best = 0;
        for &a in s.members() {
            for &b in s.members() {
                best = best.max(sp.units(a, b));
            }
        }
        best
    }

    fn brute_hausdorff(a: &PointSet, b: &PointSet) -> u32 {
        let sp = a.space();
        let dir = |x: &PointSet, y: &PointSet| {
            x.members()
                .iter()
                .map(|&p| y.members().iter().map(|&t| sp.units(p, t)).min().unwrap())
                .max()
                .unwrap()
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn builtin_diameters() {
        assert_eq!(MetricSpace::circle(4).unwrap().diameter(), r(1, 2));
        assert_eq!(MetricSpace::torus(4).unwrap().diameter(), r(1, 2));
        assert_eq!(MetricSpace::circle(5).unwrap().diameter(), r(2, 5));
        assert_eq!(
            MetricSpace::circle(2).unwrap_err(),
            Error::InvalidResolution(2)
        );
        assert!(MetricSpace::torus(1).is_err());
    }

    #[test]
    fn explicit_tables() {
        let ok = MetricSpace::explicit(
            &[vec![r(0, 1), r(1, 1)], vec![r(1, 1), r(0, 1)]],
            r(1, 1),
        )
        .unwrap();
        assert_eq!(ok.diameter(), r(1, 1));

        let single = MetricSpace::explicit(&[vec![r(0, 1)]], r(1, 1)).unwrap();
        assert_eq!(single.diameter(), r(0, 1));

        let bad = [
            vec![r(0, 1), r(1, 1), r(3, 1)],
            vec![r(1, 1), r(0, 1), r(1, 1)],
            vec![r(3, 1), r(1, 1), r(0, 1)],
        ];
        assert_eq!(
            MetricSpace::explicit(&bad, r(1, 1)).unwrap_err(),
            Error::TriangleViolation { i: 0, j: 1, k: 2 }
        );

        let neg = [vec![r(0, 1), r(-1, 1)], vec![r(-1, 1), r(0, 1)]];
        assert!(matches!(
            MetricSpace::explicit(&neg, r(1, 1)),
            Err(Error::NegativeDistance { .. })
        ));
        let asym = [vec![r(0, 1), r(1, 1)], vec![r(2, 1), r(0, 1)]];
        assert!(matches!(
            MetricSpace::explicit(&asym, r(1, 1)),
            Err(Error::Asymmetric { .. })
        ));
        let diag = [vec![r(1, 1)]];
        assert_eq!(
            MetricSpace::explicit(&diag, r(1, 1)).unwrap_err(),
            Error::NonZeroDiagonal(0)
        );
        let ragged = [vec![r(0, 1), r(1, 1)], vec![r(1, 1)]];
        assert!(matches!(
            MetricSpace::explicit(&ragged, r(1, 1)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn explicit_mixed_denominators() {
        let t = [
            vec![r(0, 1), r(1, 2), r(5, 6)],
            vec![r(1, 2), r(0, 1), r(1, 3)],
            vec![r(5, 6), r(1, 3), r(0, 1)],
        ];
        let s = MetricSpace::explicit(&t, r(1, 2)).unwrap();
        assert_eq!(s.scale(), 6);
        assert_eq!(s.distance(0, 2), r(5, 6));
        assert_eq!(s.neighbors(0), &[1]);
        assert_eq!(s.neighbors(1), &[0, 2]);
    }

    #[test]
    fn distances_on_circle_eight() {
        let c = circle(8);
        let a0 = set(&c, &[0]);
        assert_eq!(min_distance(&a0, &a0).unwrap(), r(0, 1));
        assert_eq!(min_distance(&a0, &set(&c, &[4])).unwrap(), r(1, 2));
        assert_eq!(
            min_distance(&set(&c, &[0, 1]), &set(&c, &[3, 4])).unwrap(),
            r(1, 4)
        );
        assert_eq!(
            hausdorff(&set(&c, &[0, 1]), &set(&c, &[4])).unwrap(),
            r(1, 2)
        );
        assert_eq!(
            hausdorff(&set(&c, &[2]), &set(&c, &[5])).unwrap(),
            c.distance(2, 5)
        );
        // A inside B: only the B-to-A direction counts.
        let a = set(&c, &[0, 1]);
        let b = set(&c, &[0, 1, 2, 3, 7]);
        assert_eq!(hausdorff(&a, &b).unwrap(), directed_hausdorff(&b, &a).unwrap());
        assert_eq!(directed_hausdorff(&a, &b).unwrap(), r(0, 1));
    }

    #[test]
    fn cross_space_is_an_error() {
        let a = set(&circle(8), &[0]);
        let b = set(&circle(9), &[0]);
        assert_eq!(hausdorff(&a, &set(&circle(8), &[0])).unwrap(), r(0, 1));
        assert_eq!(hausdorff(&a, &b).unwrap_err(), Error::SpaceMismatch);
        assert_eq!(min_distance(&a, &b).unwrap_err(), Error::SpaceMismatch);
        assert!(!a.is_subset(&b));
    }

    #[test]
    fn diameters_and_connectivity() {
        let c = circle(8);
        assert_eq!(set(&c, &[3]).diameter(), r(0, 1));
        assert_eq!(PointSet::full(&c).diameter(), r(1, 2));
        for k in 1..=5 {
            let arc = Continuum::arc(&c, 6, k).unwrap();
            assert_eq!(arc.diameter(), r(k as i64 - 1, 8));
        }
        assert!(set(&c, &[7, 0, 1]).is_connected());
        assert!(!set(&c, &[0, 4]).is_connected());
        assert!(PointSet::full(&c).is_connected());
        assert_eq!(
            Continuum::new(set(&c, &[0, 4])).unwrap_err(),
            Error::NotConnected
        );
    }

    #[test]
    fn balls() {
        let c = circle(8);
        assert_eq!(c.ball(3, r(0, 1)).unwrap().members(), &[3]);
        assert!(c.ball(3, r(1, 2)).unwrap().is_full());
        assert_eq!(c.ball(0, r(1, 8)).unwrap().members(), &[0, 1, 7]);
        assert_eq!(c.ball(0, r(-1, 8)).unwrap_err(), Error::NegativeRadius(r(-1, 8)));
        let t = Arc::new(MetricSpace::torus(5).unwrap());
        assert_eq!(t.ball(0, r(1, 5)).unwrap().len(), 9);
    }

    #[test]
    fn empty_and_out_of_range_sets() {
        let c = circle(8);
        assert_eq!(PointSet::new(&c, []).unwrap_err(), Error::EmptySet);
        assert!(matches!(
            PointSet::new(&c, [8]),
            Err(Error::PointOutOfRange { index: 8, len: 8 })
        ));
        assert_eq!(set(&c, &[3, 1, 3]).members(), &[1, 3]);
    }

    #[test]
    fn hausdorff_is_a_metric_on_small_circles() {
        // Exhaustive triples of subsets of a 6-point circle.
        let c = circle(6);
        let sets: Vec<PointSet> = (1u32..64)
            .map(|mask| set(&c, &(0..6).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>()))
            .collect();
        for a in &sets {
            for b in &sets {
                let ab = hausdorff_units(a, b);
                assert_eq!(ab, hausdorff_units(b, a));
                assert_eq!(ab == 0, a == b);
                assert!(min_distance_units(a, b) <= ab);
                assert_eq!(ab, brute_hausdorff(a, b));
            }
        }
        for a in sets.iter().step_by(3) {
            for b in sets.iter().step_by(2) {
                for m in &sets {
                    assert!(
                        hausdorff_units(a, b) <= hausdorff_units(a, m) + hausdorff_units(m, b)
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fast_diameter_matches_brute_force(
            q in 3usize..40,
            raw in proptest::collection::vec(0usize..40, 1..12),
        ) {
            let c = circle(q);
            let s = set(&c, &raw.iter().map(|x| x % q).collect::<Vec<_>>());
            prop_assert_eq!(s.diameter_units(), brute_diameter(&s));
        }

        #[test]
        fn torus_diameter_matches_brute_force(
            q in 3usize..9,
            raw in proptest::collection::vec(0usize..81, 1..10),
        ) {
            let t = Arc::new(MetricSpace::torus(q).unwrap());
            let s = set(&t, &raw.iter().map(|x| x % (q * q)).collect::<Vec<_>>());
            prop_assert_eq!(s.diameter_units(), brute_diameter(&s));
        }

        #[test]
        fn circle_hausdorff_matches_brute_force(
            q in 3usize..30,
            a in proptest::collection::vec(0usize..30, 1..8),
            b in proptest::collection::vec(0usize..30, 1..8),
        ) {
            let c = circle(q);
            let a = set(&c, &a.iter().map(|x| x % q).collect::<Vec<_>>());
            let b = set(&c, &b.iter().map(|x| x % q).collect::<Vec<_>>());
            prop_assert_eq!(hausdorff_units(&a, &b), brute_hausdorff(&a, &b));
            let brute_min = a.members().iter()
                .flat_map(|&x| b.members().iter().map(move |&y| (x, y)))
                .map(|(x, y)| c.units(x, y)).min().unwrap();
            prop_assert_eq!(min_distance_units(&a, &b), brute_min);
        }

        #[test]
        fn union_diameter_dominates(
            a in proptest::collection::vec(0usize..16, 1..6),
            b in proptest::collection::vec(0usize..16, 1..6),
        ) {
            let c = circle(16);
            let a = set(&c, &a);
            let b = set(&c, &b);
            let u = a.union(&b).unwrap();
            prop_assert!(u.diameter() >= a.diameter().max(b.diameter()));
        }

        #[test]
        fn balls_are_monotone(x in 0usize..16, r1 in 0i64..10, extra in 0i64..10) {
            let c = circle(16);
            let small = c.ball(x, r(r1, 16)).unwrap();
            let big = c.ball(x, r(r1 + extra, 16)).unwrap();
            prop_assert!(small.contains(x));
            prop_assert!(small.is_subset(&big));
        }
    }
}
