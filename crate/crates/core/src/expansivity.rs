//! Continuum-wise expansiveness evidence and the separated-family
//! construction: horizons, continuum splitting, and a binary tree of
//! continua whose leaves thread pairwise separated orbit segments.

use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::orbit::{dn_units, OrbitSegment, OrbitSet};
use crate::space::{hausdorff_units, MetricSpace, PointSet, SpaceKind};
use crate::svmap::{CwHypothesesReport, SetValuedMap};
use crate::{Continuum, Length};

fn zero() -> Length {
    Length::from_integer(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuumRecord {
    /// First `n >= 1` with `diam F^n(A) > delta`, if reached within the horizon.
    pub witness_n: Option<usize>,
    pub max_diam_seen: Length,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CwReport {
    pub delta: Length,
    pub horizon: usize,
    /// One record per family member, in family order.
    pub results: Vec<ContinuumRecord>,
    pub pass: bool,
    pub hypotheses: CwHypothesesReport,
}

impl CwReport {
    /// Indices of family members that never exceeded `delta`.
    pub fn failures(&self) -> Vec<usize> {
        self.results
            .iter()
            .enumerate()
            .filter(|(_, r)| r.witness_n.is_none())
            .map(|(i, _)| i)
            .collect()
    }
}

fn check_family(map: &SetValuedMap, family: &[Continuum]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    for (i, a) in family.iter().enumerate() {
        if !a.space().same_as(map.space()) {
            return Err(Error::SpaceMismatch);
        }
        if a.diameter_units() == 0 {
            return Err(Error::DegenerateContinuum(i));
        }
    }
    Ok(())
}

/// Iterates each continuum up to `horizon` steps looking for `diam > delta`.
pub fn cw_check(map: &SetValuedMap, family: &[Continuum], delta: Length, horizon: usize) -> Result<CwReport> {
    if delta <= zero() {
        return Err(Error::NonPositiveDelta(delta));
    }
    check_family(map, family)?;
    let space = map.space();
    let results: Vec<ContinuumRecord> = family
        .par_iter()
        .map(|a| {
            let mut max_units = a.diameter_units();
            let mut mask = a.mask();
            let mut witness_n = None;
            for n in 1..=horizon {
                let next = map.image_mask(&mask);
                let set = PointSet::from_mask(space, &next).expect("images are non-empty");
                let d = set.diameter_units();
                max_units = max_units.max(d);
                if space.to_length(d) > delta {
                    witness_n = Some(n);
                    break;
                }
                mask = next;
            }
            ContinuumRecord {
                witness_n,
                max_diam_seen: space.to_length(max_units),
            }
        })
        .collect();
    let pass = results.iter().all(|r| r.witness_n.is_some());
    Ok(CwReport {
        delta,
        horizon,
        results,
        pass,
        hypotheses: map.check_cw_hypotheses(),
    })
}

/// All arcs (circle) or axis-aligned squares (torus) of at least two points
/// per side at every position, plus the whole space, keeping those with
/// diameter at least `min_diameter`.
pub fn default_family(space: &Arc<MetricSpace>, min_diameter: Length) -> Result<Vec<Continuum>> {
    let q = space.side();
    let mut out = Vec::new();
    match space.kind() {
        SpaceKind::Circle => {
            for count in 2..q {
                for start in 0..q {
                    let arc = Continuum::arc(space, start, count)?;
                    if arc.diameter() >= min_diameter {
                        out.push(arc);
                    }
                }
            }
        }
        SpaceKind::Torus => {
            for side in 2..q {
                for x in 0..q {
                    for y in 0..q {
                        let cells = (0..side).flat_map(|i| (0..side).map(move |j| (x + i, y + j)));
                        let set = PointSet::new(space, cells.map(|(a, b)| space.torus_index(a, b)))?;
                        let square = Continuum::from_set_unchecked(set);
                        if square.diameter() >= min_diameter {
                            out.push(square);
                        }
                    }
                }
            }
        }
        SpaceKind::Explicit => {
            return Err(Error::Config("no default continuum family for explicit spaces".into()));
        }
    }
    let whole = Continuum::new(PointSet::full(space))?;
    if whole.diameter() >= min_diameter {
        out.push(whole);
    }
    Ok(out)
}

/// For each position, the smallest default-family member there with
/// diameter at least `min_diameter` (the whole space if none is).
///
/// Every default-family member contains the minimal member at its own
/// position, and both diameters and images are monotone under inclusion, so
/// a horizon that works for these works for the full family.
pub fn minimal_family(space: &Arc<MetricSpace>, min_diameter: Length) -> Result<Vec<Continuum>> {
    let q = space.side();
    let mut out = Vec::new();
    match space.kind() {
        SpaceKind::Circle => {
            for start in 0..q {
                for count in 2..q {
                    let arc = Continuum::arc(space, start, count)?;
                    if arc.diameter() >= min_diameter {
                        out.push(arc);
                        break;
                    }
                }
            }
        }
        SpaceKind::Torus => {
            for x in 0..q {
                for y in 0..q {
                    for side in 2..q {
                        let cells = (0..side).flat_map(|i| (0..side).map(move |j| (x + i, y + j)));
                        let set = PointSet::new(space, cells.map(|(a, b)| space.torus_index(a, b)))?;
                        if set.diameter() >= min_diameter {
                            out.push(Continuum::from_set_unchecked(set));
                            break;
                        }
                    }
                }
            }
        }
        SpaceKind::Explicit => {
            return Err(Error::Config("no default continuum family for explicit spaces".into()));
        }
    }
    // The whole space contains every other member, so it only matters alone.
    let whole = Continuum::new(PointSet::full(space))?;
    if out.is_empty() && whole.diameter() >= min_diameter {
        out.push(whole);
    }
    Ok(out)
}

/// Smallest `N <= n_max` such that every member with `diam >= eps` reaches
/// `diam F^i(A) >= delta / 2` for some `0 <= i <= N`; `None` if some member
/// never does. Without a family the default one for the space is used
/// (through [`minimal_family`], which gives the same answer).
pub fn uniform_horizon(
    map: &SetValuedMap,
    delta: Length,
    eps: Length,
    family: Option<&[Continuum]>,
    n_max: usize,
) -> Result<Option<usize>> {
    if delta <= zero() {
        return Err(Error::NonPositiveDelta(delta));
    }
    if eps <= zero() {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    let generated;
    let family = match family {
        Some(f) => f,
        None => {
            generated = minimal_family(map.space(), eps)?;
            &generated
        }
    };
    check_family(map, family)?;
    let space = map.space();
    let half = delta / Length::from_integer(2);
    let escapes: Vec<Option<usize>> = family
        .par_iter()
        .filter(|a| a.diameter() >= eps)
        .map(|a| {
            let mut mask = a.mask();
            for i in 0..=n_max {
                if i > 0 {
                    mask = map.image_mask(&mask);
                }
                let set = PointSet::from_mask(space, &mask).expect("images are non-empty");
                if set.diameter() >= half {
                    return Some(i);
                }
            }
            None
        })
        .collect();
    let mut worst = 0;
    for e in escapes {
        match e {
            Some(i) => worst = worst.max(i),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

/// Horizon for [`build_separated_family`] at separation scale `delta`.
///
/// The lemma behind [`uniform_horizon`] only promises `diam >= constant / 2`,
/// while the construction needs `diam > delta`, so the lemma is applied with
/// constant `2 * delta` and `eps = delta / 10`.
pub fn family_horizon(map: &SetValuedMap, delta: Length, n_max: usize) -> Result<Option<usize>> {
    uniform_horizon(map, delta * 2, delta / 10, None, n_max)
}

/// Grows a connected subset of `a` from `seed`, one point at a time in
/// breadth-first order, until its diameter reaches `target`.
fn accrete(a: &PointSet, seed: usize, target: Length) -> PointSet {
    let space = a.space();
    let inside = a.mask();
    let mut taken = vec![false; space.len()];
    let mut members = vec![seed];
    let mut diam = 0u32;
    taken[seed] = true;
    let mut queue = VecDeque::from([seed]);
    'grow: while let Some(v) = queue.pop_front() {
        for &u in space.neighbors(v) {
            if !inside[u] || taken[u] {
                continue;
            }
            if space.to_length(diam) >= target {
                break 'grow;
            }
            taken[u] = true;
            diam = members.iter().map(|&s| space.units(s, u)).fold(diam, u32::max);
            members.push(u);
            queue.push_back(u);
        }
        if space.to_length(diam) >= target {
            break;
        }
    }
    members.sort_unstable();
    PointSet::new(space, members).expect("members lie in the space")
}

/// Two sub-continua of `a` with diameters in `[c/8, c/8 + 2r]` (`r` the
/// adjacency radius) and Hausdorff distance greater than `c/8`.
///
/// Seeds are the lexicographically first pair of members more than `c/2`
/// apart.
pub fn split_continuum(a: &Continuum, c: Length) -> Result<(Continuum, Continuum)> {
    let space = a.space();
    let eighth = c / Length::from_integer(8);
    let half = c / Length::from_integer(2);
    let r = space.adjacency_radius();
    if a.diameter() <= c {
        return Err(Error::SplitPrecondition(format!(
            "diameter {} is not above c = {c}",
            a.diameter()
        )));
    }
    if eighth < r * Length::from_integer(2) {
        return Err(Error::SplitPrecondition(format!(
            "c/8 = {eighth} is below two grid steps ({})",
            r * Length::from_integer(2)
        )));
    }
    let m = a.members();
    let (s1, s2) = m
        .iter()
        .enumerate()
        .find_map(|(i, &x)| m[i + 1..].iter().find(|&&y| space.distance(x, y) > half).map(|&y| (x, y)))
        .ok_or_else(|| Error::Internal("no seed pair despite diameter > c".into()))?;
    let a1 = accrete(a, s1, eighth);
    let a2 = accrete(a, s2, eighth);
    let window = eighth + r * Length::from_integer(2);
    for part in [&a1, &a2] {
        let d = part.diameter();
        if d < eighth || d > window {
            return Err(Error::Internal(format!("grown continuum has diameter {d} outside [{eighth}, {window}]")));
        }
    }
    if space.to_length(hausdorff_units(&a1, &a2)) <= eighth {
        return Err(Error::Internal("grown continua are not c/8-apart in the Hausdorff metric".into()));
    }
    Ok((Continuum::from_set_unchecked(a1), Continuum::from_set_unchecked(a2)))
}

/// A node of the construction tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Branch choices from the root, e.g. `"01"`; empty for the root.
    pub path: String,
    /// Time at which the node's continuum is placed.
    pub time: usize,
    /// Steps `l <= N` until the iterate exceeded `delta` (absent for leaves).
    pub steps: Option<usize>,
    pub diameter: Length,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateRow {
    pub leaf: usize,
    pub path: String,
    pub segment: Vec<usize>,
    /// Smallest `D_n` distance to any other leaf segment (absent when alone).
    pub min_separation: Option<Length>,
}

#[derive(Debug, Clone)]
pub struct SeparatedFamily {
    pub segments: OrbitSet,
    pub nodes: Vec<TreeNode>,
    pub certificate: Vec<CertificateRow>,
    /// Smallest pairwise `D_n` distance, recomputed directly.
    pub min_separation: Option<Length>,
    /// True iff all pairs are more than `delta / 8` apart.
    pub verified: bool,
}

struct Pending {
    path: String,
    time: usize,
    set: Continuum,
    /// Constraint chain `(time, set)` from the root down to this node.
    chain: Vec<(usize, PointSet)>,
}

/// Orbit segment threading `x_t` through each constrained set, choosing the
/// smallest admissible index at every step, then continued to `length`.
fn thread_orbit(map: &SetValuedMap, chain: &[(usize, PointSet)], length: usize) -> Result<Vec<usize>> {
    let q = map.len();
    let last = chain.last().expect("chain has the root").0;
    // reach[t][x]: from x at time t all later constraints can be met.
    let mut reach = vec![vec![false; q]; last + 1];
    let mut constraint = chain.iter().rev().peekable();
    for t in (0..=last).rev() {
        let mut row: Vec<bool> = if t == last {
            vec![true; q]
        } else {
            (0..q).map(|x| map.image(x).iter().any(|&y| reach[t + 1][y])).collect()
        };
        if let Some((ct, set)) = constraint.peek() {
            if *ct == t {
                let mask = set.mask();
                for (r, m) in row.iter_mut().zip(mask) {
                    *r &= m;
                }
                constraint.next();
            }
        }
        reach[t] = row;
    }
    let mut x = reach[0]
        .iter()
        .position(|&r| r)
        .ok_or_else(|| Error::Internal("leaf constraints admit no orbit".into()))?;
    let mut states = vec![x];
    for t in 0..length.saturating_sub(1) {
        x = if t < last {
            *map.image(x)
                .iter()
                .find(|&&y| reach[t + 1][y])
                .ok_or_else(|| Error::Internal("lost the threaded orbit".into()))?
        } else {
            map.image(x)[0]
        };
        states.push(x);
    }
    Ok(states)
}

/// Builds `2^m` orbit segments, pairwise more than `delta / 8` apart.
///
/// Each tree node's continuum is iterated until its diameter exceeds
/// `delta` (at most `horizon` steps) and then split with `c = delta`. Every
/// leaf yields one segment threading its chain of continua; segments are
/// extended to a common length and the separation is re-verified directly.
pub fn build_separated_family(
    map: &SetValuedMap,
    a0: &Continuum,
    delta: Length,
    horizon: usize,
    m: usize,
) -> Result<SeparatedFamily> {
    if delta <= zero() {
        return Err(Error::NonPositiveDelta(delta));
    }
    if !a0.space().same_as(map.space()) {
        return Err(Error::SpaceMismatch);
    }
    let d0 = a0.diameter();
    if !(d0 > delta / Length::from_integer(10) && d0 < delta) {
        return Err(Error::FamilyPrecondition(format!(
            "diam(A0) = {d0} must lie strictly between delta/10 and delta = {delta}"
        )));
    }
    let space = map.space();
    let mut nodes = Vec::new();
    let mut level = vec![Pending {
        path: String::new(),
        time: 0,
        set: a0.clone(),
        chain: vec![(0, a0.set().clone())],
    }];
    for _ in 0..m {
        let expanded: Vec<Result<(TreeNode, [Pending; 2])>> = level
            .par_iter()
            .map(|node| {
                let mut mask = node.set.mask();
                for l in 1..=horizon {
                    mask = map.image_mask(&mask);
                    let image = PointSet::from_mask(space, &mask).expect("images are non-empty");
                    if image.diameter() > delta {
                        let image = Continuum::new(image)?;
                        let (c0, c1) = split_continuum(&image, delta)?;
                        let time = node.time + l;
                        let child = |bit: char, c: Continuum| {
                            let mut chain = node.chain.clone();
                            chain.push((time, c.set().clone()));
                            Pending {
                                path: format!("{}{bit}", node.path),
                                time,
                                set: c,
                                chain,
                            }
                        };
                        let record = TreeNode {
                            path: node.path.clone(),
                            time: node.time,
                            steps: Some(l),
                            diameter: node.set.diameter(),
                        };
                        return Ok((record, [child('0', c0), child('1', c1)]));
                    }
                }
                Err(Error::HorizonExceeded {
                    node: if node.path.is_empty() { "root".into() } else { node.path.clone() },
                    delta,
                    horizon,
                })
            })
            .collect();
        let mut next = Vec::with_capacity(level.len() * 2);
        for r in expanded {
            let (record, children) = r?;
            nodes.push(record);
            next.extend(children);
        }
        level = next;
    }
    let length = level.iter().map(|p| p.time).max().unwrap_or(0) + 1;
    let mut segments = Vec::with_capacity(level.len());
    for leaf in &level {
        nodes.push(TreeNode {
            path: leaf.path.clone(),
            time: leaf.time,
            steps: None,
            diameter: leaf.set.diameter(),
        });
        let states = thread_orbit(map, &leaf.chain, length)?;
        segments.push(OrbitSegment::new(map, states)?);
    }
    let k = segments.len();
    let mut row_min: Vec<Option<u32>> = vec![None; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = dn_units(space, segments[i].states(), segments[j].states());
            for idx in [i, j] {
                row_min[idx] = Some(row_min[idx].map_or(d, |v| v.min(d)));
            }
        }
    }
    let overall = row_min.iter().flatten().min().copied();
    let min_separation = overall.map(|u| space.to_length(u));
    let verified = min_separation.is_none_or(|s| s > delta / Length::from_integer(8));
    let certificate = level
        .iter()
        .zip(&segments)
        .zip(&row_min)
        .enumerate()
        .map(|(leaf, ((p, seg), min))| CertificateRow {
            leaf,
            path: p.path.clone(),
            segment: seg.states().to_vec(),
            min_separation: min.map(|u| space.to_length(u)),
        })
        .collect();
    Ok(SeparatedFamily {
        segments: OrbitSet::from_segments(map, &segments, true)?,
        nodes,
        certificate,
        min_separation,
        verified,
    })
}
