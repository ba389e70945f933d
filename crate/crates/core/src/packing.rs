//! Packing and covering on finite relations.
//!
//! Elements `i` and `j` are *close* when they lie in each other's closed
//! ball. A separated family is an independent set of the closeness graph;
//! a spanning family is a dominating set. General set-cover instances
//! (candidates distinct from elements) are also supported since slice
//! bounds need them. Greedy routines give one-sided bounds, the exact
//! routines are branch-and-bound searches with a node budget.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Exhausted {
    pub nodes: u64,
    pub best: usize,
    pub bound: usize,
}

#[inline]
fn set_bit(row: &mut [u64], i: usize) {
    row[i / 64] |= 1 << (i % 64);
}

#[inline]
fn clear_bit(row: &mut [u64], i: usize) {
    row[i / 64] &= !(1 << (i % 64));
}

#[inline]
fn has_bit(row: &[u64], i: usize) -> bool {
    row[i / 64] >> (i % 64) & 1 == 1
}

fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        let mut bits = word;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(w * 64 + b)
        })
    })
}

fn count(row: &[u64]) -> usize {
    row.iter().map(|w| w.count_ones() as usize).sum()
}

fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

fn and_not_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & !y).count_ones() as usize).sum()
}

fn is_empty(row: &[u64]) -> bool {
    row.iter().all(|&w| w == 0)
}

fn first_one(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}

fn full_row(n: usize) -> Vec<u64> {
    let mut row = vec![0u64; n.div_ceil(64).max(1)];
    for i in 0..n {
        set_bit(&mut row, i);
    }
    row
}

/// Closed neighbourhoods of a symmetric reflexive relation, as bit rows.
pub(crate) struct Proximity {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl Proximity {
    /// `close(i, j)` must be symmetric; it is evaluated for `i < j` only.
    pub fn build<C>(n: usize, close: C) -> Self
    where
        C: Fn(usize, usize) -> bool + Sync,
    {
        let words = n.div_ceil(64).max(1);
        let upper: Vec<Vec<usize>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).filter(|&j| close(i, j)).collect())
            .collect();
        let mut rows = vec![0u64; n * words];
        for (i, js) in upper.iter().enumerate() {
            set_bit(&mut rows[i * words..(i + 1) * words], i);
            for &j in js {
                set_bit(&mut rows[i * words..(i + 1) * words], j);
                set_bit(&mut rows[j * words..(j + 1) * words], i);
            }
        }
        Self { n, words, rows }
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    pub fn is_close(&self, i: usize, j: usize) -> bool {
        has_bit(self.row(i), j)
    }

    /// Connected components of the closeness graph, each sorted.
    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for u in ones(self.row(v)) {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced sub-relation on `verts` (local index = position in `verts`).
    fn induced(&self, verts: &[usize]) -> Proximity {
        let k = verts.len();
        let words = k.div_ceil(64).max(1);
        let mut rows = vec![0u64; k * words];
        for (a, &va) in verts.iter().enumerate() {
            for (b, &vb) in verts.iter().enumerate() {
                if self.is_close(va, vb) {
                    set_bit(&mut rows[a * words..(a + 1) * words], b);
                }
            }
        }
        Proximity { n: k, words, rows }
    }
}

/// Scan in index order, keeping an element iff it is far from all kept ones.
/// The result is a maximal separated family.
pub(crate) fn greedy_pack(p: &Proximity) -> Vec<usize> {
    let mut blocked = vec![0u64; p.words];
    let mut kept = Vec::new();
    for i in 0..p.n {
        if !has_bit(&blocked, i) {
            kept.push(i);
            for (b, r) in blocked.iter_mut().zip(p.row(i)) {
                *b |= r;
            }
        }
    }
    kept
}

/// Maximum separated family: a maximum independent set of the closeness
/// graph, solved per connected component as a maximum clique of the
/// "far" graph with greedy-colouring bounds. `upper` is an externally
/// proven bound; the search stops as soon as it is met. `symmetry` lists
/// automorphisms of `p` (as index permutations) used to skip branches that
/// are images of ones already explored.
pub(crate) fn exact_pack(
    p: &Proximity,
    budget: u64,
    upper: Option<usize>,
    symmetry: &[Vec<usize>],
) -> Result<Vec<usize>, Exhausted> {
    let comps = p.components();
    let single = comps.len() == 1;
    let mut out = Vec::new();
    let mut nodes = 0u64;
    let mut best_total = 0;
    let mut bound_total = 0;
    let mut failed = false;
    for comp in comps {
        let sub = p.induced(&comp);
        let target = if single { upper } else { None };
        let gens = local_generators(&comp, p.n, symmetry);
        let mut search = CliqueSearch::new(&sub, budget.saturating_sub(nodes), target, &gens);
        let local = search.run();
        nodes += search.nodes;
        best_total += search.best.len();
        match local {
            Ok(members) => {
                bound_total += members.len();
                out.extend(members.into_iter().map(|i| comp[i]));
            }
            Err(bound) => {
                failed = true;
                bound_total += bound;
            }
        }
    }
    if failed {
        return Err(Exhausted {
            nodes,
            best: best_total,
            bound: upper.map_or(bound_total, |u| u.min(bound_total)),
        });
    }
    out.sort_unstable();
    Ok(out)
}

/// Restricts automorphisms to a component (local indices), dropping those
/// that move it elsewhere.
fn local_generators(comp: &[usize], n: usize, symmetry: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut local = vec![usize::MAX; n];
    for (i, &v) in comp.iter().enumerate() {
        local[v] = i;
    }
    symmetry
        .iter()
        .filter_map(|g| {
            let mapped: Vec<usize> = comp.iter().map(|&v| local[g[v]]).collect();
            let moves = mapped.iter().enumerate().any(|(i, &m)| m != i);
            (moves && mapped.iter().all(|&m| m != usize::MAX)).then_some(mapped)
        })
        .collect()
}

struct CliqueSearch {
    k: usize,
    words: usize,
    /// Far-graph adjacency in search order.
    adj: Vec<u64>,
    /// Search position -> local vertex.
    order: Vec<usize>,
    /// Automorphisms in search positions.
    gens: Vec<Vec<usize>>,
    best: Vec<usize>,
    current: Vec<usize>,
    target: usize,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl CliqueSearch {
    fn new(p: &Proximity, budget: u64, target: Option<usize>, gens: &[Vec<usize>]) -> Self {
        let k = p.n;
        // Degeneracy order of the far graph, densest core first.
        let mut deg: Vec<usize> = (0..k).map(|i| k - count(p.row(i))).collect();
        let mut removed = vec![false; k];
        let mut elimination = Vec::with_capacity(k);
        for _ in 0..k {
            let v = (0..k)
                .filter(|&v| !removed[v])
                .min_by_key(|&v| (deg[v], std::cmp::Reverse(v)))
                .expect("vertices remain");
            removed[v] = true;
            elimination.push(v);
            for u in 0..k {
                if !removed[u] && !p.is_close(u, v) {
                    deg[u] -= 1;
                }
            }
        }
        elimination.reverse();
        let order = elimination;
        let words = k.div_ceil(64).max(1);
        let mut adj = vec![0u64; k * words];
        for a in 0..k {
            for b in 0..k {
                if a != b && !p.is_close(order[a], order[b]) {
                    set_bit(&mut adj[a * words..(a + 1) * words], b);
                }
            }
        }
        let mut position = vec![0; k];
        for (a, &v) in order.iter().enumerate() {
            position[v] = a;
        }
        let gens = gens
            .iter()
            .map(|g| (0..k).map(|a| position[g[order[a]]]).collect())
            .collect();
        Self {
            k,
            words,
            adj,
            order,
            gens,
            best: greedy_pack(p),
            current: Vec::new(),
            target: target.unwrap_or(usize::MAX),
            nodes: 0,
            budget,
            aborted: false,
        }
    }

    /// `Ok(members)` with local indices, or `Err(upper bound)` on budget exhaustion.
    fn run(&mut self) -> Result<Vec<usize>, usize> {
        let all = full_row(self.k);
        let root_bound = self.colour_classes(&all).last().map_or(0, |&(_, c)| c);
        if root_bound > self.best.len() && self.best.len() < self.target {
            let gens: Vec<usize> = (0..self.gens.len()).collect();
            self.expand_symmetric(all, gens);
        }
        if self.aborted {
            Err(root_bound.min(self.target))
        } else {
            Ok(self.best.clone())
        }
    }

    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    /// Greedy sequential colouring; vertices listed by non-decreasing colour.
    fn colour_classes(&self, cands: &[u64]) -> Vec<(usize, usize)> {
        let mut listing = Vec::with_capacity(count(cands));
        let mut uncoloured = cands.to_vec();
        let mut colour = 0;
        while !is_empty(&uncoloured) {
            colour += 1;
            let mut q = uncoloured.clone();
            while let Some(v) = first_one(&q) {
                clear_bit(&mut uncoloured, v);
                clear_bit(&mut q, v);
                for (x, a) in q.iter_mut().zip(self.row(v)) {
                    *x &= !a;
                }
                listing.push((v, colour));
            }
        }
        listing
    }

    /// Branching over orbits of the group generated by `gens` (indices of
    /// automorphisms fixing the current clique pointwise). A maximum clique
    /// meeting a class can be moved onto its representative without leaving
    /// the candidate set, so each class is tried once and then discarded.
    fn expand_symmetric(&mut self, mut cands: Vec<u64>, gens: Vec<usize>) {
        if gens.is_empty() {
            self.expand(cands);
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        let members: Vec<usize> = ones(&cands).collect();
        let mut parent: Vec<usize> = (0..self.k).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &g in &gens {
            for &v in &members {
                let (a, b) = (find(&mut parent, v), find(&mut parent, self.gens[g][v]));
                if a != b {
                    // Keep the smallest position as the root.
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut classes: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut slot = vec![usize::MAX; self.k];
        for &v in &members {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = classes.len();
                classes.push((r, Vec::new()));
            }
            classes[slot[r]].1.push(v);
        }
        for (rep, class) in classes {
            let bound = self.colour_classes(&cands).last().map_or(0, |&(_, c)| c);
            if self.current.len() + bound <= self.best.len() || self.aborted || self.best.len() >= self.target {
                return;
            }
            self.current.push(rep);
            let next: Vec<u64> = cands.iter().zip(self.row(rep)).map(|(x, a)| x & a).collect();
            if is_empty(&next) {
                self.record();
            } else {
                let fixing: Vec<usize> = gens.iter().copied().filter(|&g| self.gens[g][rep] == rep).collect();
                self.expand_symmetric(next, fixing);
            }
            self.current.pop();
            for v in class {
                clear_bit(&mut cands, v);
            }
        }
    }

    fn record(&mut self) {
        if self.current.len() > self.best.len() {
            let mut found: Vec<usize> = self.current.iter().map(|&s| self.order[s]).collect();
            found.sort_unstable();
            self.best = found;
        }
    }

    fn expand(&mut self, mut cands: Vec<u64>) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        let listing = self.colour_classes(&cands);
        for &(v, c) in listing.iter().rev() {
            if self.current.len() + c <= self.best.len() || self.aborted || self.best.len() >= self.target {
                return;
            }
            self.current.push(v);
            let next: Vec<u64> = cands.iter().zip(self.row(v)).map(|(x, a)| x & a).collect();
            if is_empty(&next) {
                self.record();
            } else {
                self.expand(next);
            }
            self.current.pop();
            clear_bit(&mut cands, v);
        }
    }
}

/// Candidates covering elements. `cand_rows[c]` lists the elements covered
/// by candidate `c`; `elem_rows[e]` the candidates covering element `e`.
pub(crate) struct SetCover {
    elems: usize,
    cands: usize,
    ew: usize,
    cw: usize,
    cand_rows: Vec<u64>,
    elem_rows: Vec<u64>,
}

impl SetCover {
    pub fn build<C>(elems: usize, cands: usize, covers: C) -> Self
    where
        C: Fn(usize, usize) -> bool + Sync,
    {
        let ew = elems.div_ceil(64).max(1);
        let cw = cands.div_ceil(64).max(1);
        let per_cand: Vec<Vec<u64>> = (0..cands)
            .into_par_iter()
            .map(|c| {
                let mut row = vec![0u64; ew];
                for e in 0..elems {
                    if covers(c, e) {
                        set_bit(&mut row, e);
                    }
                }
                row
            })
            .collect();
        let mut elem_rows = vec![0u64; elems * cw];
        for (c, row) in per_cand.iter().enumerate() {
            for e in ones(row) {
                set_bit(&mut elem_rows[e * cw..(e + 1) * cw], c);
            }
        }
        Self {
            elems,
            cands,
            ew,
            cw,
            cand_rows: per_cand.concat(),
            elem_rows,
        }
    }

    /// Dominating-set view of a closeness relation.
    fn from_proximity(p: &Proximity) -> Self {
        Self {
            elems: p.n,
            cands: p.n,
            ew: p.words,
            cw: p.words,
            cand_rows: p.rows.clone(),
            elem_rows: p.rows.clone(),
        }
    }

    fn cand_row(&self, c: usize) -> &[u64] {
        &self.cand_rows[c * self.ew..(c + 1) * self.ew]
    }

    fn elem_row(&self, e: usize) -> &[u64] {
        &self.elem_rows[e * self.cw..(e + 1) * self.cw]
    }

    #[cfg(test)]
    pub fn is_coverable(&self) -> bool {
        (0..self.elems).all(|e| !is_empty(self.elem_row(e)))
    }
}

/// Repeatedly picks the candidate covering the most uncovered elements
/// (lowest index on ties). Requires a coverable instance.
pub(crate) fn greedy_set_cover(sc: &SetCover) -> Vec<usize> {
    let mut uncovered = full_row(sc.elems);
    let mut chosen = Vec::new();
    while !is_empty(&uncovered) {
        let (best, gain) = (0..sc.cands)
            .map(|c| (c, and_count(sc.cand_row(c), &uncovered)))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!(gain > 0, "set cover instance is not coverable");
        chosen.push(best);
        for (u, r) in uncovered.iter_mut().zip(sc.cand_row(best)) {
            *u &= !r;
        }
    }
    chosen.sort_unstable();
    chosen
}

pub(crate) fn greedy_cover(p: &Proximity) -> Vec<usize> {
    greedy_set_cover(&SetCover::from_proximity(p))
}

/// Minimum spanning family: a minimum dominating set of the closeness
/// graph, solved per connected component. `lower` is an externally proven
/// bound; the search stops as soon as it is met. `symmetry` is as for
/// [`exact_pack`].
pub(crate) fn exact_cover(
    p: &Proximity,
    budget: u64,
    lower: Option<usize>,
    symmetry: &[Vec<usize>],
) -> Result<Vec<usize>, Exhausted> {
    let comps = p.components();
    let single = comps.len() == 1;
    let mut out = Vec::new();
    let mut nodes = 0u64;
    let mut best_total = 0;
    let mut bound_total = 0;
    let mut failed = false;
    for comp in comps {
        let sub = SetCover::from_proximity(&p.induced(&comp));
        let target = if single { lower } else { None };
        let mut search = CoverSearch::new(&sub, budget.saturating_sub(nodes), target);
        search.gens = local_generators(&comp, p.n, symmetry);
        let local = search.run();
        nodes += search.nodes;
        best_total += search.best.len();
        match local {
            Ok(members) => {
                bound_total += members.len();
                out.extend(members.into_iter().map(|i| comp[i]));
            }
            Err(bound) => {
                failed = true;
                bound_total += bound;
            }
        }
    }
    if failed {
        return Err(Exhausted {
            nodes,
            best: best_total,
            bound: lower.map_or(bound_total, |l| l.max(bound_total)),
        });
    }
    out.sort_unstable();
    Ok(out)
}

/// Minimum set cover. Requires a coverable instance.
pub(crate) fn exact_set_cover(sc: &SetCover, budget: u64, lower: Option<usize>) -> Result<Vec<usize>, Exhausted> {
    let mut search = CoverSearch::new(sc, budget, lower);
    match search.run() {
        Ok(best) => Ok(best),
        Err(bound) => Err(Exhausted {
            nodes: search.nodes,
            best: search.best.len(),
            bound,
        }),
    }
}

struct CoverSearch<'a> {
    sc: &'a SetCover,
    /// Automorphisms acting on elements and candidates alike (square
    /// instances from a proximity relation only).
    gens: Vec<Vec<usize>>,
    best: Vec<usize>,
    chosen: Vec<usize>,
    target: usize,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl<'a> CoverSearch<'a> {
    fn new(sc: &'a SetCover, budget: u64, target: Option<usize>) -> Self {
        Self {
            sc,
            gens: Vec::new(),
            best: greedy_set_cover(sc),
            chosen: Vec::new(),
            target: target.unwrap_or(0),
            nodes: 0,
            budget,
            aborted: false,
        }
    }

    fn run(&mut self) -> Result<Vec<usize>, usize> {
        let uncovered = full_row(self.sc.elems);
        let forbidden = vec![0u64; self.sc.cw];
        let root = self
            .lower_bound(&uncovered, &forbidden)
            .expect("coverable instance")
            .max(self.target);
        self.target = root;
        if root < self.best.len() {
            let gens: Vec<usize> = (0..self.gens.len()).collect();
            self.search_symmetric(&uncovered, forbidden, gens);
        }
        if self.aborted {
            Err(root)
        } else {
            Ok(self.best.clone())
        }
    }

    fn finished(&self) -> bool {
        self.aborted || self.best.len() <= self.target
    }

    /// `ceil(sum over uncovered e of 1 / max gain of an allowed set containing e)`;
    /// `None` if some element can no longer be covered.
    fn lower_bound(&self, uncovered: &[u64], forbidden: &[u64]) -> Option<usize> {
        let sc = self.sc;
        let mut gain = vec![usize::MAX; sc.cands];
        let mut total = 0.0f64;
        for e in ones(uncovered) {
            let mut best = 0;
            for c in ones(sc.elem_row(e)) {
                if has_bit(forbidden, c) {
                    continue;
                }
                if gain[c] == usize::MAX {
                    gain[c] = and_count(sc.cand_row(c), uncovered);
                }
                best = best.max(gain[c]);
            }
            if best == 0 {
                return None;
            }
            total += 1.0 / best as f64;
        }
        Some((total - 1e-9).ceil().max(0.0) as usize)
    }

    /// Common prologue of a search node: budget, leaf and bound checks.
    /// Returns the element to branch on, if the node needs expanding.
    fn enter(&mut self, uncovered: &[u64], forbidden: &[u64]) -> Option<usize> {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return None;
        }
        if is_empty(uncovered) {
            if self.chosen.len() < self.best.len() {
                let mut found = self.chosen.clone();
                found.sort_unstable();
                self.best = found;
            }
            return None;
        }
        match self.lower_bound(uncovered, forbidden) {
            Some(lb) if self.chosen.len() + lb < self.best.len() => {}
            _ => return None,
        }
        // Branch on the uncovered element with the fewest allowed covers.
        let (element, _) = ones(uncovered)
            .map(|e| (e, and_not_count(self.sc.elem_row(e), forbidden)))
            .min_by_key(|&(e, k)| (k, e))
            .expect("uncovered is non-empty");
        Some(element)
    }

    /// Branching over classes of the covers of one element under the group
    /// generated by `gens` (automorphisms fixing everything chosen so far
    /// and the branching element). Any optimal cover meeting a class can be
    /// moved onto the class representative, so each class is tried once and
    /// then forbidden.
    fn search_symmetric(&mut self, uncovered: &[u64], mut forbidden: Vec<u64>, gens: Vec<usize>) {
        if gens.is_empty() {
            self.search(uncovered, forbidden);
            return;
        }
        let Some(element) = self.enter(uncovered, &forbidden) else {
            return;
        };
        let gens: Vec<usize> = gens.into_iter().filter(|&g| self.gens[g][element] == element).collect();
        let sc = self.sc;
        let allowed: Vec<usize> = ones(sc.elem_row(element)).filter(|&c| !has_bit(&forbidden, c)).collect();
        let mut class_of = vec![usize::MAX; sc.cands];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &c in &allowed {
            if class_of[c] != usize::MAX {
                continue;
            }
            let id = classes.len();
            class_of[c] = id;
            let mut class = vec![c];
            let mut i = 0;
            while i < class.len() {
                let v = class[i];
                i += 1;
                for &g in &gens {
                    let w = self.gens[g][v];
                    if class_of[w] == usize::MAX {
                        class_of[w] = id;
                        class.push(w);
                    }
                }
            }
            classes.push(class);
        }
        let mut options: Vec<(usize, Vec<usize>, Vec<u64>)> = classes
            .into_iter()
            .map(|class| {
                let rep = *class.iter().min().expect("non-empty class");
                let hit: Vec<u64> = sc.cand_row(rep).iter().zip(uncovered).map(|(r, u)| r & u).collect();
                (rep, class, hit)
            })
            .collect();
        options.sort_by_key(|(c, _, hit)| (std::cmp::Reverse(count(hit)), *c));
        for (rep, class, hit) in options {
            if self.finished() || self.chosen.len() + 1 >= self.best.len() {
                return;
            }
            let rest: Vec<u64> = uncovered.iter().zip(&hit).map(|(u, h)| u & !h).collect();
            let fixing: Vec<usize> = gens.iter().copied().filter(|&g| self.gens[g][rep] == rep).collect();
            self.chosen.push(rep);
            self.search_symmetric(&rest, forbidden.clone(), fixing);
            self.chosen.pop();
            for c in class {
                set_bit(&mut forbidden, c);
            }
        }
    }

    fn search(&mut self, uncovered: &[u64], mut forbidden: Vec<u64>) {
        let Some(element) = self.enter(uncovered, &forbidden) else {
            return;
        };
        let sc = self.sc;
        let mut options: Vec<(usize, Vec<u64>)> = ones(sc.elem_row(element))
            .filter(|&c| !has_bit(&forbidden, c))
            .map(|c| {
                let hit: Vec<u64> = sc.cand_row(c).iter().zip(uncovered).map(|(r, u)| r & u).collect();
                (c, hit)
            })
            .collect();
        // Drop options whose newly covered set is contained in another's.
        let mut keep = vec![true; options.len()];
        for i in 0..options.len() {
            for j in 0..options.len() {
                if i == j || !keep[j] {
                    continue;
                }
                let (a, b) = (&options[i].1, &options[j].1);
                let subset = a.iter().zip(b).all(|(x, y)| x & !y == 0);
                if subset && (a != b || j < i) {
                    keep[i] = false;
                    break;
                }
            }
        }
        let mut idx = 0;
        options.retain(|_| {
            idx += 1;
            keep[idx - 1]
        });
        options.sort_by_key(|(c, hit)| (std::cmp::Reverse(count(hit)), *c));
        for (c, hit) in options {
            if self.finished() || self.chosen.len() + 1 >= self.best.len() {
                return;
            }
            let rest: Vec<u64> = uncovered.iter().zip(&hit).map(|(u, h)| u & !h).collect();
            self.chosen.push(c);
            self.search(&rest, forbidden.clone());
            self.chosen.pop();
            // Later branches never use c: any cover containing it was explored here.
            set_bit(&mut forbidden, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_edges(n: usize, close: &[(usize, usize)]) -> Proximity {
        Proximity::build(n, |i, j| close.contains(&(i, j)) || close.contains(&(j, i)))
    }

    /// Independent sets by subset enumeration.
    fn brute_pack(p: &Proximity) -> usize {
        let n = p.len();
        (0u32..1 << n)
            .filter(|mask| {
                (0..n).all(|i| {
                    mask >> i & 1 == 0 || (i + 1..n).all(|j| mask >> j & 1 == 0 || !p.is_close(i, j))
                })
            })
            .map(|m| m.count_ones() as usize)
            .max()
            .unwrap()
    }

    /// Smallest candidate subsets covering everything, by enumeration.
    fn brute_set_cover(elems: usize, cands: usize, covers: impl Fn(usize, usize) -> bool) -> usize {
        (1u32..1 << cands)
            .filter(|mask| (0..elems).all(|e| (0..cands).any(|c| mask >> c & 1 == 1 && covers(c, e))))
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    fn cycle(n: usize) -> Proximity {
        Proximity::build(n, |i, j| j == i + 1 || (i == 0 && j == n - 1))
    }

    #[test]
    fn cycles() {
        for n in 3..12 {
            let c = cycle(n);
            assert_eq!(exact_pack(&c, u64::MAX, None, &[]).unwrap().len(), n / 2);
            assert_eq!(exact_cover(&c, u64::MAX, None, &[]).unwrap().len(), n.div_ceil(3));
        }
    }

    #[test]
    fn disconnected_instances_add_up() {
        let p = from_edges(7, &[(0, 1), (1, 2), (3, 4), (5, 6)]);
        assert_eq!(exact_pack(&p, u64::MAX, None, &[]).unwrap(), vec![0, 2, 3, 5]);
        assert_eq!(exact_cover(&p, u64::MAX, None, &[]).unwrap().len(), 3);
    }

    #[test]
    fn proven_bounds_stop_the_search() {
        let c = cycle(30);
        assert_eq!(exact_pack(&c, 1, Some(15), &[]).unwrap().len(), 15);
        assert_eq!(exact_cover(&c, 1, Some(10), &[]).unwrap().len(), 10);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut state = 7u64;
        let mut coin = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state >> 63 == 1
        };
        let edges: Vec<(usize, usize)> =
            (0..60).flat_map(|i| (i + 1..60).map(move |j| (i, j))).filter(|_| coin()).collect();
        let p = from_edges(60, &edges);
        let pack = exact_pack(&p, u64::MAX, None, &[]).unwrap().len();
        let err = exact_pack(&p, 2, None, &[]).unwrap_err();
        assert!(err.best <= pack && pack <= err.bound && err.best < err.bound);
        let cover = exact_cover(&p, u64::MAX, None, &[]).unwrap().len();
        let err = exact_cover(&p, 2, None, &[]).unwrap_err();
        assert!(err.bound <= cover && cover <= err.best && err.bound < err.best);
    }

    proptest! {
        #[test]
        fn exact_matches_enumeration(n in 1usize..14, bits in proptest::collection::vec(any::<bool>(), 91)) {
            let mut k = 0;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if bits[k % bits.len()] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            let p = from_edges(n, &edges);
            let pack = exact_pack(&p, u64::MAX, None, &[]).unwrap();
            prop_assert_eq!(pack.len(), brute_pack(&p));
            for (a, &i) in pack.iter().enumerate() {
                for &j in &pack[a + 1..] {
                    prop_assert!(!p.is_close(i, j));
                }
            }
            let cover = exact_cover(&p, u64::MAX, None, &[]).unwrap();
            prop_assert_eq!(cover.len(), brute_set_cover(n, n, |c, e| p.is_close(c, e)));
            prop_assert!((0..n).all(|e| cover.iter().any(|&c| p.is_close(c, e))));

            let g = greedy_pack(&p);
            prop_assert!(g.len() <= pack.len());
            // Maximal separated families cover.
            prop_assert!((0..n).all(|e| g.iter().any(|&c| p.is_close(c, e))));
            prop_assert!(greedy_cover(&p).len() >= cover.len());
        }

        /// Torus-like grids `Z_a x Z_b` with a max-of-cyclic-distances
        /// threshold, searched with their rotations and reflections.
        #[test]
        fn symmetric_search_matches_enumeration(a in 2usize..5, b in 1usize..5, ta in 0usize..3, tb in 0usize..3, mixed in any::<bool>()) {
            let n = a * b;
            let cyc = |x: usize, y: usize, m: usize| {
                let d = x.abs_diff(y);
                d.min(m - d)
            };
            let close = |i: usize, j: usize| {
                let (da, db) = (cyc(i / b, j / b, a), cyc(i % b, j % b, b));
                if mixed { da <= ta && db <= tb } else { da <= ta || db <= tb }
            };
            let p = Proximity::build(n, close);
            let perm = |f: &dyn Fn(usize, usize) -> (usize, usize)| -> Vec<usize> {
                (0..n).map(|i| { let (x, y) = f(i / b, i % b); x * b + y }).collect()
            };
            let gens = vec![
                perm(&|x, y| ((x + 1) % a, y)),
                perm(&|x, y| (x, (y + 1) % b)),
                perm(&|x, y| ((a - x) % a, y)),
                perm(&|x, y| (x, (b - y) % b)),
            ];
            for g in &gens {
                for i in 0..n {
                    for j in 0..n {
                        prop_assert_eq!(p.is_close(i, j), p.is_close(g[i], g[j]));
                    }
                }
            }
            let pack = exact_pack(&p, u64::MAX, None, &gens).unwrap();
            prop_assert_eq!(pack.len(), brute_pack(&p));
            for (k, &i) in pack.iter().enumerate() {
                for &j in &pack[k + 1..] {
                    prop_assert!(!p.is_close(i, j));
                }
            }
            let cover = exact_cover(&p, u64::MAX, None, &gens).unwrap();
            prop_assert_eq!(cover.len(), brute_set_cover(n, n, |c, e| p.is_close(c, e)));
            prop_assert!((0..n).all(|e| cover.iter().any(|&c| p.is_close(c, e))));
        }

        #[test]
        fn set_cover_matches_enumeration(
            elems in 1usize..9,
            cands in 1usize..11,
            bits in proptest::collection::vec(any::<bool>(), 99),
        ) {
            let cands = cands.max(elems);
            let covers = |c: usize, e: usize| e == c % elems || bits[(c * 9 + e) % bits.len()];
            let sc = SetCover::build(elems, cands, covers);
            prop_assert!(sc.is_coverable());
            let best = exact_set_cover(&sc, u64::MAX, None).unwrap();
            prop_assert_eq!(best.len(), brute_set_cover(elems, cands, covers));
            prop_assert!((0..elems).all(|e| best.iter().any(|&c| covers(c, e))));
            prop_assert!(greedy_set_cover(&sc).len() >= best.len());
        }
    }
}
