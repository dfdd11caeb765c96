//! Support hypergraphs of exact attacks and the d = 2, 3 no-go scan.
//!
//! Vertices are the computational basis states `0..2d` of the output space.
//! For a fixed basis `b`, the support of `ψ_b(0,s)` is the inner edge of
//! color `s` and the support of `ψ_b(1,s)` the outer edge. Supports are
//! bitmasks over the vertices.
//!
//! Necessary conditions on one side (fixed `b`):
//!
//! - I: inner and outer edges of the same color are disjoint.
//! - II: the balanced condition `Σ_s |⟨u|ψ_b(x,s)⟩|² = ½` must admit
//!   positive weights on every edge (each edge carrying total weight 1).
//!   This covers vertex coverage, the exclusivity of length-2 edges and
//!   the 2 ≤ |edge| ≤ 2d − 2 bounds.
//! - III: no vertex lies on every inner edge, or on every outer edge.
//! - IV: no two edges share exactly one vertex.
//!
//! Across a pair of sides, rule V: if an `s` edge of `b = 0` misses a `t`
//! edge of `b = 1`, then `⟨s|U|t⟩ = 0` and all four `(s, t)` states are
//! mutually orthogonal. A pair is inconsistent when some orthogonal pair of
//! states meets in a single vertex, or when `k` mutually orthogonal states
//! pairwise meet in the same set of fewer than `k` vertices.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::qcore::OutputStateTable;
use crate::{QpvError, Result};

/// Largest `d` the enumerators accept.
pub const MAX_GRAPH_D: usize = 4;

fn pop(m: u32) -> u32 {
    m.count_ones()
}

fn full_mask(d: usize) -> u32 {
    (1u32 << (2 * d)) - 1
}

/// The `d` edges of one region, indexed by color.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeSet {
    pub d: usize,
    pub supports: Vec<u32>,
}

impl EdgeSet {
    pub fn new(d: usize, supports: Vec<u32>) -> Self {
        Self { d, supports }
    }

    /// Builds an edge set from vertex lists.
    pub fn from_lists(d: usize, lists: &[&[usize]]) -> Self {
        let supports = lists.iter().map(|l| l.iter().fold(0u32, |m, &v| m | (1 << v))).collect();
        Self { d, supports }
    }

    pub fn vertices(&self, s: usize) -> Vec<usize> {
        (0..2 * self.d).filter(|&v| self.supports[s] >> v & 1 == 1).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphSide {
    /// `x = 0`.
    pub inner: EdgeSet,
    /// `x = 1`.
    pub outer: EdgeSet,
}

impl GraphSide {
    pub fn d(&self) -> usize {
        self.inner.d
    }

    fn region(&self, x: usize) -> &EdgeSet {
        if x == 0 {
            &self.inner
        } else {
            &self.outer
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphPair {
    pub b0: GraphSide,
    pub b1: GraphSide,
}

/// Why a configuration fails rules I–IV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleViolation {
    /// Inner and outer edge of color `s` overlap.
    SameColorOverlap { s: usize },
    /// No positive weights satisfy the balanced condition in region `x`.
    Budget { x: usize },
    /// Vertex `v` lies on every edge of region `x`.
    CommonVertex { x: usize, v: usize },
    /// Two edges share exactly one vertex.
    SingleSharedVertex { a: (usize, usize), b: (usize, usize) },
    /// Wrong number of edges or a vertex out of range.
    Malformed,
}

// ---------------------------------------------------------------------------
// rule checks

/// Whether weights `w_{s,u} > 0` on the edges exist with every edge summing
/// to 1 and every vertex to ½. Solved as an integral max flow (weights
/// doubled), then each unused edge is tested for lying on a residual cycle.
pub fn budget_feasible(edges: &[u32], n_vertices: usize) -> bool {
    let d = edges.len();
    if d == 0 || 2 * d != n_vertices {
        return false;
    }
    let mut flow = vec![0u32; d * n_vertices];
    let mut out_s = vec![0u32; d];
    let mut in_u = vec![0u32; n_vertices];
    // augmenting paths: source → s → u (→ s' → u' …) → sink
    loop {
        let mut prev_u: Vec<Option<usize>> = vec![None; n_vertices];
        let mut seen_s = vec![false; d];
        let mut queue: Vec<usize> = (0..d).filter(|&s| out_s[s] < 2).collect();
        for &s in &queue {
            seen_s[s] = true;
        }
        let mut prev_s: Vec<Option<usize>> = vec![None; d];
        let mut end = None;
        let mut head = 0;
        while head < queue.len() && end.is_none() {
            let s = queue[head];
            head += 1;
            for u in 0..n_vertices {
                if edges[s] >> u & 1 == 0 || prev_u[u].is_some() {
                    continue;
                }
                prev_u[u] = Some(s);
                if in_u[u] < 1 {
                    end = Some(u);
                    break;
                }
                for s2 in 0..d {
                    if !seen_s[s2] && flow[s2 * n_vertices + u] > 0 {
                        seen_s[s2] = true;
                        prev_s[s2] = Some(u);
                        queue.push(s2);
                    }
                }
            }
        }
        let Some(mut u) = end else { break };
        in_u[u] += 1;
        loop {
            let s = prev_u[u].expect("path");
            flow[s * n_vertices + u] += 1;
            match prev_s[s] {
                None => {
                    out_s[s] += 1;
                    break;
                }
                Some(u2) => {
                    flow[s * n_vertices + u2] -= 1;
                    u = u2;
                }
            }
        }
    }
    if out_s.iter().any(|&f| f != 2) {
        return false;
    }
    // an unused edge (s, u) can be made positive iff a residual path u → s exists
    for s in 0..d {
        for u in 0..n_vertices {
            if edges[s] >> u & 1 == 0 || flow[s * n_vertices + u] > 0 {
                continue;
            }
            let mut seen_u = vec![false; n_vertices];
            let mut seen_s = vec![false; d];
            let mut stack = vec![u];
            seen_u[u] = true;
            let mut reached = false;
            while let Some(v) = stack.pop() {
                for s2 in 0..d {
                    if seen_s[s2] || flow[s2 * n_vertices + v] == 0 {
                        continue;
                    }
                    if s2 == s {
                        reached = true;
                        break;
                    }
                    seen_s[s2] = true;
                    for v2 in 0..n_vertices {
                        if edges[s2] >> v2 & 1 == 1 && !seen_u[v2] {
                            seen_u[v2] = true;
                            stack.push(v2);
                        }
                    }
                }
                if reached {
                    break;
                }
            }
            if !reached {
                return false;
            }
        }
    }
    true
}

fn check_region(edges: &[u32], d: usize, x: usize) -> core::result::Result<(), RuleViolation> {
    let all = full_mask(d);
    if edges.len() != d || edges.iter().any(|&e| e & !all != 0) {
        return Err(RuleViolation::Malformed);
    }
    let common = edges.iter().fold(all, |m, &e| m & e);
    if common != 0 {
        return Err(RuleViolation::CommonVertex {
            x,
            v: common.trailing_zeros() as usize,
        });
    }
    if !budget_feasible(edges, 2 * d) {
        return Err(RuleViolation::Budget { x });
    }
    Ok(())
}

fn check_single_shared(edges: &[((usize, usize), u32)]) -> core::result::Result<(), RuleViolation> {
    for (i, &(a, ea)) in edges.iter().enumerate() {
        for &(b, eb) in &edges[i + 1..] {
            if pop(ea & eb) == 1 {
                return Err(RuleViolation::SingleSharedVertex { a, b });
            }
        }
    }
    Ok(())
}

/// Rules II–IV for a region on its own.
pub fn check_inner(edges: &EdgeSet) -> core::result::Result<(), RuleViolation> {
    check_region(&edges.supports, edges.d, 0)?;
    let labelled: Vec<_> = edges.supports.iter().enumerate().map(|(s, &e)| ((0, s), e)).collect();
    check_single_shared(&labelled)
}

/// Rules I–IV for a whole side.
pub fn check_side(side: &GraphSide) -> core::result::Result<(), RuleViolation> {
    let d = side.d();
    if side.outer.d != d {
        return Err(RuleViolation::Malformed);
    }
    check_region(&side.inner.supports, d, 0)?;
    check_region(&side.outer.supports, d, 1)?;
    for s in 0..d {
        if side.inner.supports[s] & side.outer.supports[s] != 0 {
            return Err(RuleViolation::SameColorOverlap { s });
        }
    }
    let labelled: Vec<_> = (0..2)
        .flat_map(|x| side.region(x).supports.iter().enumerate().map(move |(s, &e)| ((x, s), e)))
        .collect();
    check_single_shared(&labelled)
}

// ---------------------------------------------------------------------------
// canonical forms

/// All permutations of `0..n` that send each vertex into the block of
/// positions reserved for its invariant class.
fn class_respecting_perms(classes: &[usize]) -> Vec<Vec<u8>> {
    let n = classes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| classes[v]);
    // positions available to each class
    let mut slots: Vec<Vec<u8>> = Vec::new();
    let mut start = 0;
    while start < n {
        let c = classes[order[start]];
        let mut end = start;
        while end < n && classes[order[end]] == c {
            end += 1;
        }
        slots.push((start as u8..end as u8).collect());
        start = end;
    }
    let mut out = Vec::new();
    let mut perm = vec![0u8; n];
    let mut used = vec![false; n];
    fn rec(
        k: usize,
        order: &[usize],
        classes: &[usize],
        slot_of: &dyn Fn(usize) -> usize,
        slots: &[Vec<u8>],
        perm: &mut [u8],
        used: &mut [bool],
        out: &mut Vec<Vec<u8>>,
    ) {
        if k == order.len() {
            out.push(perm.to_vec());
            return;
        }
        let v = order[k];
        for &p in &slots[slot_of(classes[v])] {
            if !used[p as usize] {
                used[p as usize] = true;
                perm[v] = p;
                rec(k + 1, order, classes, slot_of, slots, perm, used, out);
                used[p as usize] = false;
            }
        }
    }
    let mut distinct: Vec<usize> = classes.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let slot_of = |c: usize| distinct.binary_search(&c).expect("class");
    rec(0, &order, classes, &slot_of, &slots, &mut perm, &mut used, &mut out);
    out
}

fn apply(perm: &[u8], mask: u32) -> u32 {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let v = m.trailing_zeros() as usize;
        out |= 1 << perm[v];
        m &= m - 1;
    }
    out
}

/// Ranks vertices by the multiset of (region, size) of the edges through them.
fn vertex_classes(regions: &[&[u32]], n: usize) -> Vec<usize> {
    let keys: Vec<Vec<(usize, u32)>> = (0..n)
        .map(|v| {
            let mut k: Vec<(usize, u32)> = regions
                .iter()
                .enumerate()
                .flat_map(|(x, r)| r.iter().filter(move |&&e| e >> v & 1 == 1).map(move |&e| (x, pop(e))))
                .collect();
            k.sort_unstable();
            k
        })
        .collect();
    let mut distinct = keys.clone();
    distinct.sort();
    distinct.dedup();
    keys.iter().map(|k| distinct.binary_search(k).expect("key")).collect()
}

/// Lexicographically smallest relabeling of a region under vertex and
/// color permutations.
pub fn canonical_inner(edges: &EdgeSet) -> EdgeSet {
    let n = 2 * edges.d;
    let classes = vertex_classes(&[&edges.supports], n);
    let mut best: Option<Vec<u32>> = None;
    for p in class_respecting_perms(&classes) {
        let mut img: Vec<u32> = edges.supports.iter().map(|&e| apply(&p, e)).collect();
        img.sort_unstable();
        if best.as_ref().is_none_or(|b| img < *b) {
            best = Some(img);
        }
    }
    EdgeSet::new(edges.d, best.unwrap_or_default())
}

fn side_key(inner: &[u32], outer: &[u32], perm: &[u8]) -> Vec<(u32, u32)> {
    let mut k: Vec<(u32, u32)> = inner.iter().zip(outer).map(|(&a, &b)| (apply(perm, a), apply(perm, b))).collect();
    k.sort_unstable();
    k
}

fn side_from_key(d: usize, key: &[(u32, u32)]) -> GraphSide {
    GraphSide {
        inner: EdgeSet::new(d, key.iter().map(|p| p.0).collect()),
        outer: EdgeSet::new(d, key.iter().map(|p| p.1).collect()),
    }
}

/// Canonical form of a side under vertex relabeling, color permutation and
/// exchange of the inner and outer regions.
pub fn canonical_side(side: &GraphSide) -> GraphSide {
    let d = side.d();
    let mut best: Option<Vec<(u32, u32)>> = None;
    for (a, b) in [(&side.inner, &side.outer), (&side.outer, &side.inner)] {
        let classes = vertex_classes(&[&a.supports, &b.supports], 2 * d);
        for p in class_respecting_perms(&classes) {
            let k = side_key(&a.supports, &b.supports, &p);
            if best.as_ref().is_none_or(|b| k < *b) {
                best = Some(k);
            }
        }
    }
    side_from_key(d, &best.unwrap_or_default())
}

fn swapped(side: &GraphSide) -> GraphSide {
    GraphSide {
        inner: side.outer.clone(),
        outer: side.inner.clone(),
    }
}

/// Canonical form of a pair under simultaneous vertex relabeling,
/// independent color permutations and region exchanges on each side, and
/// exchange of the two sides.
pub fn canonical_pair(pair: &GraphPair) -> GraphPair {
    let d = pair.b0.d();
    type Key = (Vec<(u32, u32)>, Vec<(u32, u32)>);
    let mut best: Option<Key> = None;
    let orient = |s: &GraphSide| [s.clone(), swapped(s)];
    for (first, second) in [(&pair.b0, &pair.b1), (&pair.b1, &pair.b0)] {
        for a in orient(first) {
            for b in orient(second) {
                let classes = vertex_classes(
                    &[&a.inner.supports, &a.outer.supports, &b.inner.supports, &b.outer.supports],
                    2 * d,
                );
                for p in class_respecting_perms(&classes) {
                    let k = (
                        side_key(&a.inner.supports, &a.outer.supports, &p),
                        side_key(&b.inner.supports, &b.outer.supports, &p),
                    );
                    if best.as_ref().is_none_or(|b| k < *b) {
                        best = Some(k);
                    }
                }
            }
        }
    }
    let (k0, k1) = best.expect("at least one permutation");
    GraphPair {
        b0: side_from_key(d, &k0),
        b1: side_from_key(d, &k1),
    }
}

// ---------------------------------------------------------------------------
// enumeration

fn check_d(d: usize) -> Result<()> {
    if d == 0 || d > MAX_GRAPH_D {
        return Err(QpvError::InvalidArgument(alloc::format!("graph enumeration needs 1 <= d <= {MAX_GRAPH_D}")));
    }
    Ok(())
}

fn candidate_edges(d: usize) -> Vec<u32> {
    let lo = 2;
    let hi = (2 * d).saturating_sub(2) as u32;
    (1..=full_mask(d)).filter(|&m| (lo..=hi).contains(&pop(m))).collect()
}

/// Whether `e` can join `others` in the same region without breaking the
/// length-2 exclusivity or the single-shared-vertex rule.
fn compatible(e: u32, others: &[u32]) -> bool {
    others.iter().all(|&f| {
        let common = e & f;
        pop(common) != 1 && (common == 0 || (pop(e) > 2 && pop(f) > 2))
    })
}

/// Region configurations satisfying rules II–IV, as color-sorted lists.
fn inner_multisets(d: usize) -> Vec<Vec<u32>> {
    let cands = candidate_edges(d);
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::with_capacity(d);
    fn rec(d: usize, start: usize, cands: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == d {
            let es = EdgeSet::new(d, cur.clone());
            if check_inner(&es).is_ok() {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..cands.len() {
            let e = cands[i];
            if compatible(e, cur) {
                cur.push(e);
                rec(d, i, cands, cur, out);
                cur.pop();
            }
        }
    }
    rec(d, 0, &cands, &mut cur, &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    class_respecting_perms(&vec![0; n])
}

/// All relabelings (vertices and colors) of a region.
fn region_orbit(d: usize, edges: &[u32]) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    for p in permutations(2 * d) {
        let img: Vec<u32> = edges.iter().map(|&e| apply(&p, e)).collect();
        for q in permutations(d) {
            out.insert(q.iter().map(|&s| img[s as usize]).collect());
        }
    }
    out
}

/// Region configurations obeying rules II–IV. With `canonical`, one
/// representative per relabeling class; otherwise every labeled
/// configuration (`d ≤ 3`).
pub fn enumerate_inner(d: usize, canonical: bool) -> Result<Vec<EdgeSet>> {
    check_d(d)?;
    let reps: BTreeSet<EdgeSet> = inner_multisets(d)
        .into_iter()
        .map(|m| canonical_inner(&EdgeSet::new(d, m)))
        .collect();
    if canonical {
        return Ok(reps.into_iter().collect());
    }
    if d > 3 {
        return Err(QpvError::InvalidArgument("labeled enumeration is limited to d <= 3".into()));
    }
    let mut all = BTreeSet::new();
    for r in &reps {
        all.extend(region_orbit(d, &r.supports));
    }
    Ok(all.into_iter().map(|s| EdgeSet::new(d, s)).collect())
}

fn outer_completions(inner: &[u32], d: usize) -> Vec<Vec<u32>> {
    let cands = candidate_edges(d);
    let mut out = Vec::new();
    let mut cur: Vec<u32> = Vec::with_capacity(d);
    fn rec(inner: &[u32], d: usize, cands: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        let s = cur.len();
        if s == d {
            let side = GraphSide {
                inner: EdgeSet::new(d, inner.to_vec()),
                outer: EdgeSet::new(d, cur.clone()),
            };
            if check_side(&side).is_ok() {
                out.push(cur.clone());
            }
            return;
        }
        for &e in cands {
            if e & inner[s] != 0 || !compatible(e, cur) {
                continue;
            }
            if inner.iter().any(|&f| pop(e & f) == 1) {
                continue;
            }
            cur.push(e);
            rec(inner, d, cands, cur, out);
            cur.pop();
        }
    }
    rec(inner, d, &cands, &mut cur, &mut out);
    out
}

/// Sides obeying rules I–IV. With `canonical`, one representative per class
/// (vertex relabeling, color permutation, inner/outer exchange); otherwise
/// every labeled side (`d ≤ 3`).
pub fn enumerate_sides(d: usize, canonical: bool) -> Result<Vec<GraphSide>> {
    check_d(d)?;
    let mut reps = BTreeSet::new();
    for inner in enumerate_inner(d, true)? {
        for outer in outer_completions(&inner.supports, d) {
            reps.insert(canonical_side(&GraphSide {
                inner: inner.clone(),
                outer: EdgeSet::new(d, outer),
            }));
        }
    }
    if canonical {
        return Ok(reps.into_iter().collect());
    }
    if d > 3 {
        return Err(QpvError::InvalidArgument("labeled enumeration is limited to d <= 3".into()));
    }
    let mut all = BTreeSet::new();
    for r in &reps {
        all.extend(side_orbit(r));
    }
    Ok(all.into_iter().collect())
}

fn side_orbit(side: &GraphSide) -> BTreeSet<GraphSide> {
    let d = side.d();
    let mut out = BTreeSet::new();
    for s in [side.clone(), swapped(side)] {
        for p in permutations(2 * d) {
            let inner: Vec<u32> = s.inner.supports.iter().map(|&e| apply(&p, e)).collect();
            let outer: Vec<u32> = s.outer.supports.iter().map(|&e| apply(&p, e)).collect();
            for q in permutations(d) {
                out.insert(GraphSide {
                    inner: EdgeSet::new(d, q.iter().map(|&c| inner[c as usize]).collect()),
                    outer: EdgeSet::new(d, q.iter().map(|&c| outer[c as usize]).collect()),
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// rule V

/// The state `ψ_b(x, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId {
    pub b: usize,
    pub x: usize,
    pub s: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Contradiction {
    /// Two orthogonal states whose supports meet in one vertex.
    SingleVertexOverlap { a: StateId, b: StateId, vertex: usize },
    /// Mutually orthogonal states that pairwise meet in the same support,
    /// which has fewer vertices than there are states.
    TooManyOrthogonal { states: Vec<StateId>, support: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleVReport {
    pub consistent: bool,
    pub witness: Option<Contradiction>,
    /// `(s, t)` with `⟨s|U|t⟩ = 0` forced by disjoint edges.
    pub zero_overlaps: Vec<(usize, usize)>,
}

fn states(pair: &GraphPair) -> Vec<(StateId, u32)> {
    let mut out = Vec::new();
    for (b, side) in [&pair.b0, &pair.b1].into_iter().enumerate() {
        for x in 0..2 {
            for (s, &e) in side.region(x).supports.iter().enumerate() {
                out.push((StateId { b, x, s }, e));
            }
        }
    }
    out
}

/// Finds a contradiction among `states` given an orthogonality relation.
fn find_contradiction(states: &[(StateId, u32)], orth: &dyn Fn(usize, usize) -> bool) -> Option<Contradiction> {
    let n = states.len();
    for i in 0..n {
        for j in i + 1..n {
            let common = states[i].1 & states[j].1;
            if orth(i, j) && pop(common) == 1 {
                return Some(Contradiction::SingleVertexOverlap {
                    a: states[i].0,
                    b: states[j].0,
                    vertex: common.trailing_zeros() as usize,
                });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let common = states[i].1 & states[j].1;
            if !orth(i, j) || common == 0 {
                continue;
            }
            let cand: Vec<usize> = (0..n)
                .filter(|&k| {
                    k != i
                        && k != j
                        && states[k].1 & states[i].1 == common
                        && states[k].1 & states[j].1 == common
                        && orth(k, i)
                        && orth(k, j)
                })
                .collect();
            let mut best = vec![i, j];
            grow_clique(&mut vec![i, j], &cand, states, common, orth, &mut best);
            if best.len() as u32 > pop(common) {
                let mut ids: Vec<StateId> = best.iter().map(|&k| states[k].0).collect();
                ids.sort_unstable();
                return Some(Contradiction::TooManyOrthogonal {
                    states: ids,
                    support: common,
                });
            }
        }
    }
    None
}

fn grow_clique(
    cur: &mut Vec<usize>,
    rest: &[usize],
    states: &[(StateId, u32)],
    common: u32,
    orth: &dyn Fn(usize, usize) -> bool,
    best: &mut Vec<usize>,
) {
    if cur.len() > best.len() {
        *best = cur.clone();
    }
    for (idx, &k) in rest.iter().enumerate() {
        if cur.iter().all(|&m| orth(k, m) && states[k].1 & states[m].1 == common) {
            cur.push(k);
            grow_clique(cur, &rest[idx + 1..], states, common, orth, best);
            cur.pop();
        }
    }
}

/// Contradictions within one side, where all states are orthogonal.
pub fn side_contradiction(side: &GraphSide) -> Option<Contradiction> {
    let pair = GraphPair {
        b0: side.clone(),
        b1: side.clone(),
    };
    let st: Vec<_> = states(&pair).into_iter().filter(|s| s.0.b == 0).collect();
    find_contradiction(&st, &|_, _| true)
}

/// Applies rule V and the two dimension-counting contradictions.
pub fn check_rule_v(pair: &GraphPair) -> RuleVReport {
    let d = pair.b0.d();
    let mut zero = vec![false; d * d];
    for s in 0..d {
        for t in 0..d {
            zero[s * d + t] = (0..2).any(|x| {
                (0..2).any(|y| pair.b0.region(x).supports[s] & pair.b1.region(y).supports[t] == 0)
            });
        }
    }
    let st = states(pair);
    let orth = |i: usize, j: usize| {
        let (a, b) = (st[i].0, st[j].0);
        if a.b == b.b {
            return true;
        }
        let (s, t) = if a.b == 0 { (a.s, b.s) } else { (b.s, a.s) };
        zero[s * d + t]
    };
    let witness = find_contradiction(&st, &orth);
    RuleVReport {
        consistent: witness.is_none(),
        witness,
        zero_overlaps: (0..d * d).filter(|&k| zero[k]).map(|k| (k / d, k % d)).collect(),
    }
}

/// True when every state has two equal-weight amplitudes and every
/// cross-basis pair of supports meets in one vertex, so that
/// `|⟨x|R_θ|y⟩⟨s|U|t⟩| = ½` for all indices, forcing `θ = nπ/4`.
pub fn forces_quarter_pi(pair: &GraphPair) -> bool {
    let st = states(pair);
    st.iter().all(|s| pop(s.1) == 2)
        && st
            .iter()
            .filter(|a| a.0.b == 0)
            .all(|a| st.iter().filter(|b| b.0.b == 1).all(|b| pop(a.1 & b.1) == 1))
}

#[derive(Clone, Debug)]
pub struct NogoReport {
    pub d: usize,
    /// Side classes obeying rules I–IV.
    pub sides_count: usize,
    /// Side classes that also survive the within-side contradiction check.
    pub viable_sides: usize,
    pub pairs_tested: usize,
    /// One canonical representative per consistent pair class.
    pub consistent_pairs: Vec<GraphPair>,
    /// Whether every consistent class forces `θ = nπ/4`.
    pub quarter_pi_forced: bool,
}

/// Exhaustive scan of side pairs: `b = 0` ranges over class
/// representatives, `b = 1` over all labelings.
pub fn nogo_scan(d: usize) -> Result<NogoReport> {
    if !(2..=3).contains(&d) {
        return Err(QpvError::InvalidArgument("no-go scan is defined for d = 2 and d = 3".into()));
    }
    let sides = enumerate_sides(d, true)?;
    let viable: Vec<GraphSide> = sides.iter().filter(|s| side_contradiction(s).is_none()).cloned().collect();
    let mut pairs_tested = 0;
    let mut consistent = BTreeSet::new();
    for b0 in &viable {
        for rep in &viable {
            for b1 in side_orbit(rep) {
                pairs_tested += 1;
                let pair = GraphPair {
                    b0: b0.clone(),
                    b1,
                };
                if check_rule_v(&pair).consistent {
                    consistent.insert(canonical_pair(&pair));
                }
            }
        }
    }
    let consistent_pairs: Vec<GraphPair> = consistent.into_iter().collect();
    let quarter_pi_forced = !consistent_pairs.is_empty() && consistent_pairs.iter().all(forces_quarter_pi);
    Ok(NogoReport {
        d,
        sides_count: sides.len(),
        viable_sides: viable.len(),
        pairs_tested,
        consistent_pairs,
        quarter_pi_forced,
    })
}

/// Support pattern of a single-angle output table, thresholding amplitudes
/// at `tol`.
pub fn pair_from_table(table: &OutputStateTable, tol: f64) -> Result<GraphPair> {
    let d = table.d();
    if table.n_bases() != 2 {
        return Err(QpvError::InvalidProtocol("support graphs need exactly two bases".into()));
    }
    if d > MAX_GRAPH_D {
        return Err(QpvError::InvalidArgument(alloc::format!("support graphs need d <= {MAX_GRAPH_D}")));
    }
    let region = |b: usize, x: usize| {
        EdgeSet::new(
            d,
            (0..d)
                .map(|s| (0..2 * d).filter(|&u| table.amp(b, x, s, u).norm() > tol).fold(0u32, |m, u| m | 1 << u))
                .collect(),
        )
    };
    let side = |b: usize| GraphSide {
        inner: region(b, 0),
        outer: region(b, 1),
    };
    Ok(GraphPair { b0: side(0), b1: side(1) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn side(d: usize, inner: &[&[usize]], outer: &[&[usize]]) -> GraphSide {
        GraphSide {
            inner: EdgeSet::from_lists(d, inner),
            outer: EdgeSet::from_lists(d, outer),
        }
    }

    #[test]
    fn budget_examples() {
        assert!(budget_feasible(&[0b0011, 0b1100], 4));
        // a length-2 edge saturates its vertices
        assert!(!budget_feasible(&[0b0011, 0b0110], 4));
        // three vertices seen only by one edge need weight 3/2
        assert!(!budget_feasible(&[0b000111, 0b000111, 0b111000], 6));
        assert!(budget_feasible(&[0b001111, 0b111100, 0b110011], 6));
        // coverage
        assert!(!budget_feasible(&[0b0011, 0b0011], 4));
    }

    #[test]
    fn inner_counts() {
        assert_eq!(enumerate_inner(2, true).unwrap().len(), 1);
        assert_eq!(enumerate_inner(3, true).unwrap().len(), 6);
    }

    #[test]
    fn side_counts() {
        assert_eq!(enumerate_sides(2, true).unwrap().len(), 1);
        assert_eq!(enumerate_sides(3, true).unwrap().len(), 2);
    }

    #[test]
    fn crossing_d2_side_breaks_rule_one() {
        let s = side(2, &[&[0, 1], &[2, 3]], &[&[0, 3], &[1, 2]]);
        assert_eq!(check_side(&s), Err(RuleViolation::SameColorOverlap { s: 0 }));
        let ok = side(2, &[&[0, 1], &[2, 3]], &[&[2, 3], &[0, 1]]);
        assert!(check_side(&ok).is_ok());
    }

    #[test]
    fn d2_identical_sides_are_inconsistent() {
        let s = side(2, &[&[0, 1], &[2, 3]], &[&[2, 3], &[0, 1]]);
        let rep = check_rule_v(&GraphPair { b0: s.clone(), b1: s });
        assert!(!rep.consistent);
        match rep.witness {
            Some(Contradiction::TooManyOrthogonal { states, support }) => {
                assert_eq!(states.len(), 4);
                assert_eq!(pop(support), 2);
            }
            w => panic!("{w:?}"),
        }
    }

    #[test]
    fn d2_rotated_sides_are_consistent() {
        let s0 = side(2, &[&[0, 1], &[2, 3]], &[&[2, 3], &[0, 1]]);
        let s1 = side(2, &[&[1, 2], &[3, 0]], &[&[3, 0], &[1, 2]]);
        let pair = GraphPair { b0: s0, b1: s1 };
        let rep = check_rule_v(&pair);
        assert!(rep.consistent, "{rep:?}");
        assert!(rep.zero_overlaps.is_empty());
        assert!(forces_quarter_pi(&pair));
    }

    #[test]
    fn d3_candidate_pairs_are_inconsistent() {
        let s = side(3, &[&[0, 1], &[2, 3], &[4, 5]], &[&[2, 3], &[4, 5], &[0, 1]]);
        let shifted = side(3, &[&[1, 2], &[3, 4], &[5, 0]], &[&[3, 4], &[5, 0], &[1, 2]]);
        assert!(!check_rule_v(&GraphPair { b0: s.clone(), b1: s.clone() }).consistent);
        let rep = check_rule_v(&GraphPair { b0: s, b1: shifted });
        assert!(matches!(rep.witness, Some(Contradiction::SingleVertexOverlap { .. })), "{rep:?}");
    }

    #[test]
    fn d3_four_edge_side_contradicts_itself() {
        let s = side(3, &[&[0, 1, 2, 3], &[2, 3, 4, 5], &[4, 5, 0, 1]], &[&[4, 5], &[0, 1], &[2, 3]]);
        assert!(check_side(&s).is_ok());
        assert!(side_contradiction(&s).is_some());
    }

    #[test]
    fn nogo_counts() {
        let r2 = nogo_scan(2).unwrap();
        assert_eq!(r2.consistent_pairs.len(), 1);
        assert!(r2.quarter_pi_forced);
        let r3 = nogo_scan(3).unwrap();
        assert_eq!(r3.sides_count, 2);
        assert_eq!(r3.viable_sides, 1);
        assert!(r3.consistent_pairs.is_empty());
    }

    #[test]
    fn canonical_forms_are_idempotent() {
        for s in enumerate_sides(3, false).unwrap().iter().step_by(97) {
            let c = canonical_side(s);
            assert_eq!(canonical_side(&c), c);
        }
        for e in enumerate_inner(3, false).unwrap().iter().step_by(31) {
            let c = canonical_inner(e);
            assert_eq!(canonical_inner(&c), c);
        }
    }

    #[test]
    fn labeled_sides_pass_the_rule_checker() {
        for s in enumerate_sides(3, false).unwrap() {
            assert!(check_side(&s).is_ok());
        }
    }
}
