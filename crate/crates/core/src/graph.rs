//! Pattern graphs, chordality and clique trees.
//!
//! All routines break ties by the lowest vertex (or clique) index, so every
//! output is deterministic for a given input.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::pattern::{Label, PartialMatrix};

/// Undirected simple graph on `0..n`. Vertex `i` is label `i` of the
/// partial matrix it was built from; an edge is a specified entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl PatternGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list. Self-loops and out-of-range
    /// endpoints are rejected; repeated edges are merged.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        let adj: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(Self { adj, edge_count })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Self::from_edges(n, edges).expect("complete graph edges are valid")
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Neighbours of `v` in ascending order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(a, &u)| vertices[a + 1..].iter().all(|&v| self.has_edge(u, v)))
    }
}

/// Graph of specified entries: edge `{i, j}` iff `{i, j}` is specified.
pub fn build_pattern_graph(m: &PartialMatrix) -> PatternGraph {
    PatternGraph::from_edges(m.n(), m.specified().map(|(k, _)| k))
        .expect("partial matrix pairs are valid edges")
}

/// Visit order of a maximum cardinality search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl EliminationOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (p, &v) in order.iter().enumerate() {
            if v >= n || position[v] != usize::MAX {
                return Err(Error::invalid("elimination order is not a permutation"));
            }
            position[v] = p;
        }
        Ok(Self { order, position })
    }

    /// Vertices in visit order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Visit position of `v`.
    pub fn position(&self, v: usize) -> usize {
        self.position[v]
    }

    /// Neighbours of `v` visited before `v`, in visit order.
    pub fn earlier_neighbors(&self, g: &PatternGraph, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| self.position[w] < self.position[v])
            .collect();
        out.sort_by_key(|&w| self.position[w]);
        out
    }
}

/// Maximum cardinality search: repeatedly visit the unvisited vertex with
/// the most visited neighbours, lowest index first among ties.
///
/// Buckets keyed by weight hold ordered sets, giving `O((n + m) log n)`.
pub fn maximum_cardinality_search(g: &PatternGraph) -> EliminationOrder {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut buckets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n.max(1)];
    buckets[0].extend(0..n);
    let mut top = 0usize;
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        while buckets[top].is_empty() {
            top -= 1;
        }
        let v = buckets[top].pop_first().expect("bucket is non-empty");
        visited[v] = true;
        order.push(v);
        for &w in g.neighbors(v) {
            if !visited[w] {
                buckets[weight[w]].remove(&w);
                weight[w] += 1;
                buckets[weight[w]].insert(w);
                top = top.max(weight[w]);
            }
        }
    }
    EliminationOrder::new(order).expect("MCS visits every vertex once")
}

/// Checks that the reverse of `ord` is a perfect elimination order: every
/// vertex's earlier-visited neighbours form a clique.
///
/// Uses the parent test: with `p` the latest earlier neighbour of `v`, the
/// other earlier neighbours of `v` must be adjacent to `p`.
pub fn verify_peo(g: &PatternGraph, ord: &EliminationOrder) -> bool {
    find_peo_violation(g, ord).is_none()
}

fn find_peo_violation(g: &PatternGraph, ord: &EliminationOrder) -> Option<(usize, usize, usize)> {
    for &v in ord.order() {
        let earlier = ord.earlier_neighbors(g, v);
        if let Some((&parent, rest)) = earlier.split_last() {
            if let Some(&w) = rest.iter().find(|&&w| !g.has_edge(w, parent)) {
                return Some((v, w, parent));
            }
        }
    }
    None
}

/// Outcome of a chordality test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chordality {
    /// The graph is chordal; the MCS order certifies it.
    Chordal(EliminationOrder),
    /// A chordless cycle of length at least four, in cycle order.
    NotChordal(Vec<usize>),
}

impl Chordality {
    pub fn is_chordal(&self) -> bool {
        matches!(self, Chordality::Chordal(_))
    }
}

/// Tests chordality by running MCS and verifying the resulting order.
/// Non-chordal graphs come back with a chordless cycle.
pub fn is_chordal(g: &PatternGraph) -> Chordality {
    let ord = maximum_cardinality_search(g);
    match find_peo_violation(g, &ord) {
        None => Chordality::Chordal(ord),
        Some(_) => Chordality::NotChordal(
            chordless_cycle(g).expect("a graph without a PEO has a chordless cycle"),
        ),
    }
}

/// Finds a chordless cycle of length at least four, if one exists.
///
/// For a vertex `v` with non-adjacent neighbours `a < b`, a shortest
/// `a`-`b` path avoiding `v` and the rest of `v`'s neighbourhood closes a
/// chordless cycle through `v`.
pub fn chordless_cycle(g: &PatternGraph) -> Option<Vec<usize>> {
    let n = g.n();
    for v in 0..n {
        let ns = g.neighbors(v);
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                if g.has_edge(a, b) {
                    continue;
                }
                let mut blocked = vec![false; n];
                blocked[v] = true;
                for &w in ns {
                    if w != a && w != b {
                        blocked[w] = true;
                    }
                }
                if let Some(path) = shortest_path(g, a, b, &blocked) {
                    let mut cycle = vec![v];
                    cycle.extend(path);
                    return Some(cycle);
                }
            }
        }
    }
    None
}

fn shortest_path(g: &PatternGraph, from: usize, to: usize, blocked: &[bool]) -> Option<Vec<usize>> {
    let n = g.n();
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &w in g.neighbors(u) {
            if !seen[w] && !blocked[w] {
                seen[w] = true;
                prev[w] = u;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Maximal clique, stored as ascending vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clique(Vec<usize>);

impl Clique {
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        Self(vertices)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn intersection(&self, other: &Clique) -> Vec<usize> {
        self.0.iter().copied().filter(|&v| other.contains(v)).collect()
    }

    pub fn is_subset_of(&self, other: &Clique) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn labels<'a>(&self, labels: &'a [Label]) -> Vec<&'a str> {
        self.0.iter().map(|&v| labels[v].as_str()).collect()
    }
}

/// Maximal cliques of a chordal graph, sorted lexicographically by their
/// vertex lists.
///
/// Each vertex contributes the candidate `{v} ∪ earlier(v)`; in a chordal
/// graph every maximal clique is one of these.
pub fn maximal_cliques(g: &PatternGraph, ord: &EliminationOrder) -> Result<Vec<Clique>> {
    if let Some((v, w, p)) = find_peo_violation(g, ord) {
        let cycle = chordless_cycle(g).unwrap_or_else(|| vec![v, w, p]);
        return Err(Error::NotChordal {
            cycle: cycle.iter().map(|i| i.to_string()).collect(),
        });
    }
    let mut candidates: Vec<Clique> = ord
        .order()
        .iter()
        .map(|&v| {
            let mut c = ord.earlier_neighbors(g, v);
            c.push(v);
            Clique::new(c)
        })
        .collect();
    // larger candidates first so a subset test only looks at kept cliques
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<Clique> = Vec::new();
    for c in candidates {
        if !kept.iter().any(|k| c.is_subset_of(k)) {
            kept.push(c);
        }
    }
    kept.sort();
    debug_assert!(kept.len() <= g.n().max(1));
    Ok(kept)
}

/// Edge of a clique tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    /// Intersection of the two endpoint cliques.
    pub separator: Vec<usize>,
}

/// Spanning forest over maximal cliques, one tree per connected component
/// of the pattern graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    cliques: Vec<Clique>,
    edges: Vec<TreeEdge>,
    adjacency: Vec<Vec<usize>>,
}

impl CliqueTree {
    /// Assembles a tree from cliques and clique-index pairs. Separators are
    /// computed; edges that would close a cycle are rejected.
    pub fn new(cliques: Vec<Clique>, edges: &[(usize, usize)]) -> Result<Self> {
        let k = cliques.len();
        let mut dsu = DisjointSets::new(k);
        let mut tree_edges = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); k];
        for &(a, b) in edges {
            if a >= k || b >= k || a == b {
                return Err(Error::invalid(format!("bad clique tree edge ({a}, {b})")));
            }
            if !dsu.union(a, b) {
                return Err(Error::invalid(format!("clique tree edge ({a}, {b}) closes a cycle")));
            }
            let separator = cliques[a].intersection(&cliques[b]);
            tree_edges.push(TreeEdge {
                a: a.min(b),
                b: a.max(b),
                separator,
            });
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for ns in &mut adjacency {
            ns.sort_unstable();
        }
        Ok(Self {
            cliques,
            edges: tree_edges,
            adjacency,
        })
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    /// Tree neighbours of clique `c`, ascending.
    pub fn neighbors(&self, c: usize) -> &[usize] {
        &self.adjacency[c]
    }

    pub fn separator(&self, a: usize, b: usize) -> Option<&[usize]> {
        let (lo, hi) = (a.min(b), a.max(b));
        self.edges
            .iter()
            .find(|e| e.a == lo && e.b == hi)
            .map(|e| e.separator.as_slice())
    }

    /// Component id per clique; components are numbered by their lowest
    /// clique index.
    pub fn components(&self) -> Vec<usize> {
        let k = self.cliques.len();
        let mut comp = vec![usize::MAX; k];
        let mut next = 0;
        for start in 0..k {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                for &d in &self.adjacency[c] {
                    if comp[d] == usize::MAX {
                        comp[d] = next;
                        queue.push_back(d);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Tree path from `from` to `to`, both included.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let k = self.cliques.len();
        let mut prev = vec![usize::MAX; k];
        let mut seen = vec![false; k];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(c) = queue.pop_front() {
            if c == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &d in &self.adjacency[c] {
                if !seen[d] {
                    seen[d] = true;
                    prev[d] = c;
                    queue.push_back(d);
                }
            }
        }
        None
    }

    /// Distance from `root` of every clique in its component; `None`
    /// elsewhere.
    pub fn depths(&self, root: usize) -> Vec<Option<usize>> {
        let mut depth = vec![None; self.cliques.len()];
        depth[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(c) = queue.pop_front() {
            let d = depth[c].expect("queued cliques have a depth");
            for &e in &self.adjacency[c] {
                if depth[e].is_none() {
                    depth[e] = Some(d + 1);
                    queue.push_back(e);
                }
            }
        }
        depth
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

/// Maximum-weight spanning forest of the clique intersection graph, with
/// weight `|a ∩ b|`. Kruskal; ties go to the smallest `(a, b)` pair.
/// Cliques with empty intersections are never joined.
pub fn build_clique_tree(cliques: Vec<Clique>) -> CliqueTree {
    let k = cliques.len();
    let mut candidates = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let w = cliques[a].intersection(&cliques[b]).len();
            if w > 0 {
                candidates.push((w, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut dsu = DisjointSets::new(k);
    let mut chosen = Vec::new();
    for (_, a, b) in candidates {
        if dsu.union(a, b) {
            chosen.push((a, b));
        }
    }
    CliqueTree::new(cliques, &chosen).expect("Kruskal output is a forest")
}

/// Checks the intersection property exhaustively: for every clique pair,
/// their intersection lies in every clique on the tree path between them.
/// Pairs in different components must not intersect at all.
pub fn verify_intersection_property(t: &CliqueTree) -> bool {
    let k = t.cliques().len();
    for a in 0..k {
        for b in (a + 1)..k {
            let common = t.cliques()[a].intersection(&t.cliques()[b]);
            match t.path(a, b) {
                Some(path) => {
                    let ok = path
                        .iter()
                        .all(|&c| common.iter().all(|&v| t.cliques()[c].contains(v)));
                    if !ok {
                        return false;
                    }
                }
                None if !common.is_empty() => return false,
                None => {}
            }
        }
    }
    true
}

/// Chordality check plus maximal cliques and clique tree in one call.
pub fn analyse(g: &PatternGraph) -> Result<(Vec<Clique>, CliqueTree)> {
    match is_chordal(g) {
        Chordality::Chordal(ord) => {
            let cliques = maximal_cliques(g, &ord)?;
            let tree = build_clique_tree(cliques.clone());
            Ok((cliques, tree))
        }
        Chordality::NotChordal(cycle) => Err(Error::NotChordal {
            cycle: cycle.iter().map(|v| v.to_string()).collect(),
        }),
    }
}
