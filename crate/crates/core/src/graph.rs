//! Biregular bipartite base graphs and expansion audits.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::Rational;

/// Swap attempts allowed before the configuration model is re-drawn.
pub const MAX_EDGE_SWAPS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("degrees must be positive (deltaV={delta_v}, deltaC={delta_c})")]
    ZeroDegree { delta_v: usize, delta_c: usize },
    #[error("n*deltaV = {stubs} is not divisible by deltaC = {delta_c}")]
    Divisibility { stubs: usize, delta_c: usize },
    #[error("impossible degree: {0}")]
    ImpossibleDegree(String),
    #[error("{side:?} vertex {vertex} out of range (side has {count} vertices)")]
    VertexOutOfRange { side: Side, vertex: usize, count: usize },
    #[error("graph is not biregular: {0}")]
    NotBiregular(String),
    #[error("duplicate edge between left vertex {v} and right vertex {c}")]
    DuplicateEdge { v: usize, c: usize },
    #[error("set size {requested} exceeds side cardinality {available}")]
    SetTooLarge { requested: usize, available: usize },
    #[error("audit size must be at least one")]
    EmptyAudit,
}

/// Which vertex class of the bipartite graph a set lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Variable (bit) vertices `V`.
    Left,
    /// Check vertices `C`.
    Right,
}

/// A simple `(deltaV, deltaC)`-biregular bipartite graph `G = (V ∪ C, E)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n: usize,
    m: usize,
    delta_v: usize,
    delta_c: usize,
    adj_v: Vec<Vec<usize>>,
    adj_c: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    /// Builds a graph from per-left-vertex neighbor lists, validating
    /// biregularity and simplicity. Neighbor lists may be unsorted.
    pub fn from_adjacency(m: usize, adj_v: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        let n = adj_v.len();
        let mut adj_v = adj_v;
        let mut adj_c = vec![Vec::new(); m];
        for (v, nbrs) in adj_v.iter_mut().enumerate() {
            nbrs.sort_unstable();
            for w in nbrs.windows(2) {
                if w[0] == w[1] {
                    return Err(GraphError::DuplicateEdge { v, c: w[0] });
                }
            }
            for &c in nbrs.iter() {
                if c >= m {
                    return Err(GraphError::VertexOutOfRange {
                        side: Side::Right,
                        vertex: c,
                        count: m,
                    });
                }
                adj_c[c].push(v);
            }
        }
        let delta_v = adj_v.first().map_or(0, Vec::len);
        let delta_c = adj_c.first().map_or(0, Vec::len);
        if let Some((v, l)) = adj_v.iter().enumerate().find(|(_, l)| l.len() != delta_v) {
            return Err(GraphError::NotBiregular(format!(
                "left vertex {v} has degree {} but vertex 0 has {delta_v}",
                l.len()
            )));
        }
        if let Some((c, l)) = adj_c.iter().enumerate().find(|(_, l)| l.len() != delta_c) {
            return Err(GraphError::NotBiregular(format!(
                "right vertex {c} has degree {} but vertex 0 has {delta_c}",
                l.len()
            )));
        }
        if delta_v == 0 || delta_c == 0 {
            return Err(GraphError::ZeroDegree { delta_v, delta_c });
        }
        Ok(BipartiteGraph {
            n,
            m,
            delta_v,
            delta_c,
            adj_v,
            adj_c,
        })
    }

    /// Number of left vertices `|V|`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of right vertices `|C|`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta_v(&self) -> usize {
        self.delta_v
    }

    pub fn delta_c(&self) -> usize {
        self.delta_c
    }

    pub fn side_len(&self, side: Side) -> usize {
        match side {
            Side::Left => self.n,
            Side::Right => self.m,
        }
    }

    pub fn degree(&self, side: Side) -> usize {
        match side {
            Side::Left => self.delta_v,
            Side::Right => self.delta_c,
        }
    }

    /// Sorted neighbors of left vertex `v`.
    #[inline]
    pub fn nbrs_v(&self, v: usize) -> &[usize] {
        &self.adj_v[v]
    }

    /// Sorted neighbors of right vertex `c`.
    #[inline]
    pub fn nbrs_c(&self, c: usize) -> &[usize] {
        &self.adj_c[c]
    }

    #[inline]
    pub fn nbrs(&self, side: Side, x: usize) -> &[usize] {
        match side {
            Side::Left => &self.adj_v[x],
            Side::Right => &self.adj_c[x],
        }
    }

    pub fn adjacency_v(&self) -> &[Vec<usize>] {
        &self.adj_v
    }

    pub fn has_edge(&self, v: usize, c: usize) -> bool {
        self.adj_v.get(v).is_some_and(|l| l.binary_search(&c).is_ok())
    }

    /// The same graph with the roles of `V` and `C` exchanged.
    pub fn transpose(&self) -> BipartiteGraph {
        BipartiteGraph {
            n: self.m,
            m: self.n,
            delta_v: self.delta_c,
            delta_c: self.delta_v,
            adj_v: self.adj_c.clone(),
            adj_c: self.adj_v.clone(),
        }
    }

    fn check_set(&self, side: Side, set: &[usize]) -> Result<(), GraphError> {
        let count = self.side_len(side);
        match set.iter().find(|&&x| x >= count) {
            Some(&vertex) => Err(GraphError::VertexOutOfRange { side, vertex, count }),
            None => Ok(()),
        }
    }

    /// `Γ(S)`: every vertex on the other side adjacent to some member of `set`.
    pub fn neighbors(&self, side: Side, set: &[usize]) -> Result<Vec<usize>, GraphError> {
        self.check_set(side, set)?;
        let mut out: Vec<usize> = dedup(set).flat_map(|x| self.nbrs(side, x).iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// `Γ^u(S)`: vertices with exactly one edge into `set`.
    pub fn unique_neighbors(&self, side: Side, set: &[usize]) -> Result<Vec<usize>, GraphError> {
        self.check_set(side, set)?;
        let mut all: Vec<usize> = dedup(set).flat_map(|x| self.nbrs(side, x).iter().copied()).collect();
        all.sort_unstable();
        Ok(singletons(&all))
    }
}

fn dedup(set: &[usize]) -> impl Iterator<Item = usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s.into_iter()
}

/// Values that occur exactly once in a sorted slice.
fn singletons(sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i == 1 {
            out.push(sorted[i]);
        }
        i = j;
    }
    out
}

/// Samples a simple `(delta_v, delta_c)`-biregular graph on `n` left vertices
/// from the configuration model, removing multi-edges by random edge swaps.
///
/// If the swap budget runs out, the draw is repeated with the next seed, so
/// the result is a deterministic function of `seed`.
pub fn gen_biregular(n: usize, delta_v: usize, delta_c: usize, seed: u64) -> Result<BipartiteGraph, GraphError> {
    if delta_v == 0 || delta_c == 0 {
        return Err(GraphError::ZeroDegree { delta_v, delta_c });
    }
    let stubs = n * delta_v;
    if !stubs.is_multiple_of(delta_c) {
        return Err(GraphError::Divisibility { stubs, delta_c });
    }
    let m = stubs / delta_c;
    if delta_v > m {
        return Err(GraphError::ImpossibleDegree(format!("deltaV={delta_v} exceeds m={m}")));
    }
    if delta_c > n {
        return Err(GraphError::ImpossibleDegree(format!("deltaC={delta_c} exceeds n={n}")));
    }

    for attempt in 0u64.. {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        if let Some(adj) = configuration_draw(n, m, delta_v, delta_c, &mut rng) {
            return BipartiteGraph::from_adjacency(m, adj);
        }
    }
    unreachable!("attempt counter is unbounded")
}

fn configuration_draw(
    n: usize,
    m: usize,
    delta_v: usize,
    delta_c: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<usize>>> {
    let mut right: Vec<usize> = (0..m).flat_map(|c| std::iter::repeat_n(c, delta_c)).collect();
    right.shuffle(rng);
    // Edge i joins left vertex i / delta_v with right vertex right[i].
    let mut mult: HashMap<(usize, usize), u32> = HashMap::new();
    for (i, &c) in right.iter().enumerate() {
        *mult.entry((i / delta_v, c)).or_default() += 1;
    }
    let edges = right.len();
    let duplicates = |right: &[usize], mult: &HashMap<(usize, usize), u32>| -> Vec<usize> {
        (0..edges).filter(|&i| mult[&(i / delta_v, right[i])] > 1).collect()
    };
    let mut dups = duplicates(&right, &mult);
    let mut attempts = 0;
    while !dups.is_empty() {
        if attempts >= MAX_EDGE_SWAPS {
            return None;
        }
        attempts += 1;
        let e = dups[rng.gen_range(0..dups.len())];
        let f = rng.gen_range(0..edges);
        let (v, c) = (e / delta_v, right[e]);
        let (v2, c2) = (f / delta_v, right[f]);
        if v == v2 || c == c2 || mult.contains_key(&(v, c2)) || mult.contains_key(&(v2, c)) {
            continue;
        }
        for key in [(v, c), (v2, c2)] {
            let slot = mult.get_mut(&key).expect("edge present");
            *slot -= 1;
            if *slot == 0 {
                mult.remove(&key);
            }
        }
        *mult.entry((v, c2)).or_default() += 1;
        *mult.entry((v2, c)).or_default() += 1;
        right.swap(e, f);
        dups = duplicates(&right, &mult);
    }
    let adj = (0..n)
        .map(|v| right[v * delta_v..(v + 1) * delta_v].to_vec())
        .collect();
    Some(adj)
}

/// Worst-case vertex expansion observed per set size on one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionProfile {
    pub side: Side,
    pub max_set_size: usize,
    /// Index `s` holds the worst `1 - |Γ(S)|/(Δ s)` over audited `|S| = s`;
    /// index 0 is unused and always zero.
    pub worst_epsilon_by_size: Vec<Rational>,
    /// Number of sets examined per size (same indexing).
    pub sets_examined: Vec<u64>,
    /// True when every subset up to `max_set_size` was enumerated.
    pub certified: bool,
}

impl ExpansionProfile {
    /// Largest worst-case epsilon over all audited sizes.
    pub fn max_epsilon(&self) -> Rational {
        self.worst_epsilon_by_size
            .iter()
            .copied()
            .max()
            .unwrap_or_else(|| Rational::from_integer(0))
    }

    /// Largest worst-case epsilon over sizes `1..=s`.
    pub fn max_epsilon_up_to(&self, s: usize) -> Rational {
        let hi = s.min(self.max_set_size);
        self.worst_epsilon_by_size[..=hi]
            .iter()
            .copied()
            .max()
            .unwrap_or_else(|| Rational::from_integer(0))
    }
}

/// Random-subset sampling parameters for [`audit_expansion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub trials_per_size: usize,
    pub seed: u64,
}

fn set_epsilon(graph: &BipartiteGraph, side: Side, set: &[usize], scratch: &mut Vec<usize>) -> Rational {
    scratch.clear();
    for &x in set {
        scratch.extend_from_slice(graph.nbrs(side, x));
    }
    scratch.sort_unstable();
    scratch.dedup();
    let full = (graph.degree(side) * set.len()) as i64;
    Rational::new(full - scratch.len() as i64, full)
}

/// Audits `1 - |Γ(S)|/(Δ|S|)` over sets of size `1..=s_max` on `side`.
///
/// Without `sampling` every subset is enumerated and the profile is
/// certified; otherwise `trials_per_size` random subsets are drawn per size.
pub fn audit_expansion(
    graph: &BipartiteGraph,
    side: Side,
    s_max: usize,
    sampling: Option<Sampling>,
) -> Result<ExpansionProfile, GraphError> {
    if s_max == 0 {
        return Err(GraphError::EmptyAudit);
    }
    let count = graph.side_len(side);
    if s_max > count {
        return Err(GraphError::SetTooLarge {
            requested: s_max,
            available: count,
        });
    }
    let zero = Rational::from_integer(0);
    let mut worst = vec![zero; s_max + 1];
    let mut examined = vec![0u64; s_max + 1];

    match sampling {
        None => {
            for s in 1..=s_max {
                // Parallel over the smallest member; merge is a max, so order is irrelevant.
                let (w, k) = (0..count)
                    .into_par_iter()
                    .map(|first| {
                        let mut best = zero;
                        let mut seen = 0u64;
                        let mut set = Vec::with_capacity(s);
                        let mut scratch = Vec::new();
                        set.push(first);
                        for_each_extension(count, s, &mut set, &mut |set| {
                            seen += 1;
                            let eps = set_epsilon(graph, side, set, &mut scratch);
                            if eps > best {
                                best = eps;
                            }
                        });
                        (best, seen)
                    })
                    .reduce(|| (zero, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
                worst[s] = w;
                examined[s] = k;
            }
        }
        Some(Sampling { trials_per_size, seed }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut scratch = Vec::new();
            for s in 1..=s_max {
                for _ in 0..trials_per_size {
                    let set = rand::seq::index::sample(&mut rng, count, s).into_vec();
                    let eps = set_epsilon(graph, side, &set, &mut scratch);
                    worst[s] = worst[s].max(eps);
                }
                examined[s] = trials_per_size as u64;
            }
        }
    }
    Ok(ExpansionProfile {
        side,
        max_set_size: s_max,
        worst_epsilon_by_size: worst,
        sets_examined: examined,
        certified: sampling.is_none(),
    })
}

/// Calls `f` on every ascending extension of `set` to length `target`
/// using elements below `count`.
pub(crate) fn for_each_extension(count: usize, target: usize, set: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if set.len() == target {
        f(set);
        return;
    }
    let start = set.last().map_or(0, |&x| x + 1);
    let remaining = target - set.len();
    for x in start..=count.saturating_sub(remaining) {
        if x >= count {
            break;
        }
        set.push(x);
        for_each_extension(count, target, set, f);
        set.pop();
    }
}

/// Every subset of `0..count` with size in `1..=s_max`, ascending within
/// each size. Intended for small exhaustive checks.
pub fn subsets_up_to(count: usize, s_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for s in 1..=s_max.min(count) {
        let mut set = Vec::with_capacity(s);
        for_each_extension(count, s, &mut set, &mut |x| out.push(x.to_vec()));
    }
    out
}

/// Checks every structural invariant of a graph (used after generation and
/// after parsing).
pub fn validate(graph: &BipartiteGraph) -> Result<(), GraphError> {
    if graph.n * graph.delta_v != graph.m * graph.delta_c {
        return Err(GraphError::NotBiregular("handshake n*deltaV != m*deltaC".into()));
    }
    let mut left_edges = HashSet::new();
    for (v, l) in graph.adj_v.iter().enumerate() {
        if l.len() != graph.delta_v {
            return Err(GraphError::NotBiregular(format!("left vertex {v}")));
        }
        for &c in l {
            if !left_edges.insert((v, c)) {
                return Err(GraphError::DuplicateEdge { v, c });
            }
        }
    }
    let mut right_edges = HashSet::new();
    for (c, l) in graph.adj_c.iter().enumerate() {
        if l.len() != graph.delta_c {
            return Err(GraphError::NotBiregular(format!("right vertex {c}")));
        }
        for &v in l {
            right_edges.insert((v, c));
        }
    }
    if left_edges != right_edges {
        return Err(GraphError::NotBiregular("adjacency lists disagree".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k33() -> BipartiteGraph {
        gen_biregular(3, 3, 3, 7).unwrap()
    }

    fn path() -> BipartiteGraph {
        gen_biregular(2, 1, 2, 0).unwrap()
    }

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn forced_graphs() {
        let g = k33();
        assert_eq!((g.n(), g.m()), (3, 3));
        for v in 0..3 {
            assert_eq!(g.nbrs_v(v), &[0, 1, 2]);
        }
        let p = path();
        assert_eq!((p.n(), p.m()), (2, 1));
        assert_eq!(p.nbrs_v(0), &[0]);
        assert_eq!(p.nbrs_v(1), &[0]);
        assert_eq!(p.nbrs_c(0), &[0, 1]);
    }

    #[test]
    fn generated_3_6_graph_has_expected_shape() {
        let g = gen_biregular(60, 3, 6, 1).unwrap();
        assert_eq!(g.m(), 30);
        validate(&g).unwrap();
        assert!(g.adjacency_v().iter().all(|l| l.len() == 3));
        assert!((0..30).all(|c| g.nbrs_c(c).len() == 6));
    }

    #[test]
    fn generation_is_deterministic_and_valid_for_many_seeds() {
        for seed in 0..100 {
            let g = gen_biregular(24, 3, 6, seed).unwrap();
            validate(&g).unwrap();
            assert_eq!(g, gen_biregular(24, 3, 6, seed).unwrap());
        }
    }

    #[test]
    fn generation_errors() {
        assert!(matches!(gen_biregular(5, 3, 6, 0), Err(GraphError::Divisibility { .. })));
        assert!(matches!(gen_biregular(4, 2, 8, 0), Err(GraphError::ImpossibleDegree(_))));
        assert!(matches!(gen_biregular(3, 3, 9, 0), Err(GraphError::ImpossibleDegree(_))));
        assert!(matches!(gen_biregular(4, 0, 2, 0), Err(GraphError::ZeroDegree { .. })));
    }

    #[test]
    fn neighborhoods() {
        let g = k33();
        assert_eq!(g.neighbors(Side::Left, &[0]).unwrap(), vec![0, 1, 2]);
        assert!(g.neighbors(Side::Left, &[]).unwrap().is_empty());
        assert_eq!(g.unique_neighbors(Side::Left, &[0]).unwrap(), vec![0, 1, 2]);
        assert!(g.unique_neighbors(Side::Left, &[0, 1]).unwrap().is_empty());
        let p = path();
        assert_eq!(p.neighbors(Side::Left, &[0, 1]).unwrap(), vec![0]);
        assert!(p.unique_neighbors(Side::Left, &[0, 1]).unwrap().is_empty());
        assert!(matches!(
            p.neighbors(Side::Left, &[2]),
            Err(GraphError::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn audit_k33() {
        let g = k33();
        let p = audit_expansion(&g, Side::Left, 1, None).unwrap();
        assert_eq!(p.worst_epsilon_by_size[1], r(0, 1));
        assert!(p.certified);
        let p = audit_expansion(&g, Side::Left, 2, None).unwrap();
        assert_eq!(p.worst_epsilon_by_size[2], r(1, 2));
        assert_eq!(p.sets_examined[2], 3);
        assert!(matches!(
            audit_expansion(&g, Side::Left, 4, None),
            Err(GraphError::SetTooLarge { .. })
        ));
        assert!(matches!(audit_expansion(&g, Side::Left, 0, None), Err(GraphError::EmptyAudit)));
    }

    #[test]
    fn audit_counts_all_triples() {
        let g = gen_biregular(60, 3, 6, 1).unwrap();
        let p = audit_expansion(&g, Side::Left, 3, None).unwrap();
        assert_eq!(p.sets_examined[1..], [60, 1770, 34_220]);
        // Independent recomputation with a hash set per triple.
        let mut worst = Rational::from_integer(0);
        for a in 0..60 {
            for b in a + 1..60 {
                for c in b + 1..60 {
                    let nb: HashSet<usize> = [a, b, c].iter().flat_map(|&x| g.nbrs_v(x).iter().copied()).collect();
                    worst = worst.max(Rational::new(9 - nb.len() as i64, 9));
                }
            }
        }
        assert_eq!(p.worst_epsilon_by_size[3], worst);
    }

    #[test]
    fn sampled_audit_is_bounded_by_exhaustive() {
        let g = gen_biregular(30, 3, 6, 4).unwrap();
        let exact = audit_expansion(&g, Side::Left, 3, None).unwrap();
        let sampled = audit_expansion(&g, Side::Left, 3, Some(Sampling { trials_per_size: 200, seed: 9 })).unwrap();
        assert!(!sampled.certified);
        for s in 1..=3 {
            assert!(sampled.worst_epsilon_by_size[s] <= exact.worst_epsilon_by_size[s]);
        }
    }

    #[test]
    fn unique_neighbor_averaging_bound() {
        // |Γ^u(S)| >= |Γ(S)| - (edges into S - |Γ(S)|), and the (1-2ε) form.
        let g = gen_biregular(20, 3, 6, 3).unwrap();
        for side in [Side::Left, Side::Right] {
            let d = g.degree(side) as i64;
            for set in subsets_up_to(g.side_len(side), 3) {
                let nb = g.neighbors(side, &set).unwrap();
                let un = g.unique_neighbors(side, &set).unwrap();
                assert!(un.iter().all(|x| nb.binary_search(x).is_ok()));
                let edges = d * set.len() as i64;
                let nb_len = nb.len() as i64;
                assert!(un.len() as i64 >= nb_len - (edges - nb_len));
                let eps = Rational::new(edges - nb_len, edges);
                let one = Rational::from_integer(1);
                let two = Rational::from_integer(2);
                assert!(Rational::from_integer(un.len() as i64) >= (one - two * eps) * Rational::from_integer(edges));
            }
        }
    }

    #[test]
    fn transpose_swaps_sides() {
        let g = gen_biregular(12, 2, 4, 5).unwrap();
        let t = g.transpose();
        assert_eq!((t.n(), t.m(), t.delta_v(), t.delta_c()), (6, 12, 4, 2));
        assert_eq!(t.transpose(), g);
        validate(&t).unwrap();
    }
}
