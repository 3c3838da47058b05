//! Unrooted trivalent trees with labeled leaves.
//!
//! Nodes `0..n` are the leaves, in leaf-order position; nodes `n..2n-2` are
//! interior. Patterns over a tree are always indexed by leaf-order
//! position, and `labels()[i]` gives the user-facing label at position `i`.

use std::collections::HashSet;
use std::fmt;

use log::warn;

use crate::config::DEFAULT_MAX_LEAVES;
use crate::error::{Error, Result};
use crate::group::{Nucleotide, Pattern, MAX_PATTERN_LEN};

/// An unrooted trivalent tree.
#[derive(Clone, PartialEq, Eq)]
pub struct Tree {
    labels: Vec<u32>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    incident: Vec<Vec<usize>>,
    interior: Vec<usize>,
    // per edge: 2-bit digit mask over leaf positions whose entries sum to x_e
    digit_masks: Vec<u64>,
}

/// Two leaves hanging off the same interior node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cherry {
    /// Smaller label of the pair.
    pub a: u32,
    /// Larger label of the pair.
    pub b: u32,
    /// The shared interior node.
    pub m: usize,
}

/// Labels `x_e` for every edge, indexed like [`Tree::edges`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeAssignment(pub Vec<Nucleotide>);

impl EdgeAssignment {
    pub fn get(&self, edge: usize) -> Nucleotide {
        self.0[edge]
    }

    pub fn as_slice(&self) -> &[Nucleotide] {
        &self.0
    }
}

/// Mutable adjacency used while building trees.
#[derive(Clone, Debug, Default)]
struct Graph {
    adj: Vec<Vec<usize>>,
    label: Vec<Option<u32>>,
}

impl Graph {
    fn add_node(&mut self, label: Option<u32>) -> usize {
        self.adj.push(Vec::new());
        self.label.push(label);
        self.adj.len() - 1
    }

    fn connect(&mut self, u: usize, v: usize) {
        self.adj[u].push(v);
        self.adj[v].push(u);
    }

    fn disconnect(&mut self, u: usize, v: usize) {
        self.adj[u].retain(|&w| w != v);
        self.adj[v].retain(|&w| w != u);
    }
}

impl Tree {
    /// Builds a tree from a graph; `order` lists the leaf nodes by position.
    fn from_graph(g: &Graph, order: &[usize]) -> Result<Tree> {
        let n = order.len();
        if n < 3 {
            return Err(Error::TooFewLeaves(n));
        }
        if n > MAX_PATTERN_LEN {
            return Err(Error::LeafCountOutOfRange { n, min: 3, max: MAX_PATTERN_LEN });
        }
        let live: Vec<usize> = (0..g.adj.len())
            .filter(|&v| !g.adj[v].is_empty() || order.contains(&v))
            .collect();
        let mut remap = vec![usize::MAX; g.adj.len()];
        for (pos, &v) in order.iter().enumerate() {
            if g.adj[v].len() != 1 {
                return Err(Error::NotTrivalent(g.adj[v].len()));
            }
            remap[v] = pos;
        }
        let mut next = n;
        for &v in &live {
            if remap[v] == usize::MAX {
                if g.adj[v].len() == 1 {
                    // A leaf that is not in the order.
                    return Err(Error::InvalidTree("leaf missing from leaf order".into()));
                }
                if g.adj[v].len() != 3 {
                    return Err(Error::NotTrivalent(g.adj[v].len()));
                }
                remap[v] = next;
                next += 1;
            }
        }
        if next != 2 * n - 2 {
            return Err(Error::InvalidTree(format!("expected {} interior nodes", n - 2)));
        }
        let mut adj = vec![Vec::new(); next];
        for &v in &live {
            adj[remap[v]] = g.adj[v].iter().map(|&w| remap[w]).collect();
        }
        let labels = order
            .iter()
            .map(|&v| g.label[v].ok_or_else(|| Error::InvalidTree("unlabeled leaf".into())))
            .collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for &l in &labels {
            if !seen.insert(l) {
                return Err(Error::DuplicateLeaf(l));
            }
        }
        Tree::finish(labels, adj)
    }

    /// Computes the canonical traversal, edge list and edge masks.
    fn finish(labels: Vec<u32>, adj: Vec<Vec<usize>>) -> Result<Tree> {
        let n = labels.len();
        let nodes = adj.len();
        // Root the traversal at leaf position 0.
        let mut parent = vec![usize::MAX; nodes];
        let mut visit = vec![0usize];
        let mut bfs = Vec::with_capacity(nodes);
        parent[0] = 0;
        while let Some(v) = visit.pop() {
            bfs.push(v);
            for &w in &adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    visit.push(w);
                } else if w != parent[v] {
                    return Err(Error::InvalidTree("graph has a cycle".into()));
                }
            }
        }
        if bfs.len() != nodes {
            return Err(Error::InvalidTree("graph is disconnected".into()));
        }
        // Subtree leaf masks and minimum positions, children before parents.
        let mut mask = vec![0u64; nodes];
        let mut min_pos = vec![usize::MAX; nodes];
        for &v in bfs.iter().rev() {
            if v < n && v != 0 {
                mask[v] |= 1 << v;
                min_pos[v] = v;
            }
            if v != 0 {
                let p = parent[v];
                mask[p] |= mask[v];
                min_pos[p] = min_pos[p].min(min_pos[v]);
            }
        }
        let children = |v: usize| -> Vec<usize> {
            let mut c: Vec<usize> = adj[v].iter().copied().filter(|&w| w != parent[v]).collect();
            c.sort_by_key(|&w| min_pos[w]);
            c
        };
        // Preorder over interior nodes.
        let mut interior = Vec::with_capacity(n - 2);
        let mut stack = vec![adj[0][0]];
        while let Some(v) = stack.pop() {
            if v < n {
                continue;
            }
            interior.push(v);
            let mut c = children(v);
            c.reverse();
            stack.extend(c);
        }
        // Renumber interior nodes in preorder so equal topologies with equal
        // leaf orders compare equal.
        let canonical = interior.iter().enumerate().all(|(k, &v)| v == n + k)
            && adj.iter().all(|a| a.windows(2).all(|w| w[0] < w[1]));
        if !canonical {
            let mut remap: Vec<usize> = (0..nodes).collect();
            for (k, &v) in interior.iter().enumerate() {
                remap[v] = n + k;
            }
            let mut renumbered = vec![Vec::new(); nodes];
            for (v, nbrs) in adj.iter().enumerate() {
                let mut a: Vec<usize> = nbrs.iter().map(|&w| remap[w]).collect();
                a.sort_unstable();
                renumbered[remap[v]] = a;
            }
            return Tree::finish(labels, renumbered);
        }
        let digits = |m: u64| -> u64 {
            (0..n).filter(|i| m >> i & 1 == 1).fold(0u64, |acc, i| acc | 3 << (2 * i))
        };
        let mut edges = Vec::with_capacity(2 * n - 3);
        let mut digit_masks = Vec::with_capacity(2 * n - 3);
        for (leaf, nbrs) in adj.iter().enumerate().take(n) {
            edges.push((leaf, nbrs[0]));
            digit_masks.push(3u64 << (2 * leaf));
        }
        for &v in interior.iter().skip(1) {
            edges.push((parent[v], v));
            digit_masks.push(digits(mask[v]));
        }
        let mut incident = vec![Vec::new(); nodes];
        for (i, &(u, v)) in edges.iter().enumerate() {
            incident[u].push(i);
            incident[v].push(i);
        }
        Ok(Tree {
            labels,
            adj,
            edges,
            incident,
            interior,
            digit_masks,
        })
    }

    fn to_graph(&self) -> Graph {
        Graph {
            adj: self.adj.clone(),
            label: (0..self.adj.len()).map(|v| self.labels.get(v).copied()).collect(),
        }
    }

    /// The 3-leaf claw on labels `1, 2, 3`.
    pub fn claw() -> Tree {
        let adj = vec![vec![3], vec![3], vec![3], vec![0, 1, 2]];
        Tree::finish(vec![1, 2, 3], adj).expect("claw is valid")
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    /// Leaf labels by position.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn position_of(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.leaf_count()
    }

    /// Edges in canonical order: terminal edges by leaf position, then
    /// interior edges in depth-first preorder from leaf position 0.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Interior nodes in depth-first preorder from leaf position 0.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Edge indices incident to `node`.
    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    /// Label `x_e` of one edge for a slice pattern.
    #[inline]
    pub(crate) fn edge_label(&self, edge: usize, pattern: &Pattern) -> Nucleotide {
        let masked = pattern.encode() & self.digit_masks[edge];
        Pattern::from_raw(self.leaf_count(), masked).sum()
    }

    /// Propagates leaf labels to every edge so that the three edges at each
    /// interior node sum to `A`. Returns `None` when the pattern does not
    /// sum to `A`, in which case no such assignment exists.
    pub fn edge_assignment(&self, pattern: &Pattern) -> Option<EdgeAssignment> {
        assert_eq!(pattern.len(), self.leaf_count(), "pattern length must match leaf count");
        if !pattern.on_slice() {
            return None;
        }
        Some(EdgeAssignment(
            (0..self.edge_count()).map(|e| self.edge_label(e, pattern)).collect(),
        ))
    }

    /// All cherries, sorted by label pair. The claw reports all three pairs.
    pub fn find_cherries(&self) -> Vec<Cherry> {
        let mut out = Vec::new();
        for &m in &self.interior {
            let mut leaves: Vec<u32> = self.adj[m]
                .iter()
                .filter(|&&w| self.is_leaf(w))
                .map(|&w| self.labels[w])
                .collect();
            leaves.sort_unstable();
            for i in 0..leaves.len() {
                for j in i + 1..leaves.len() {
                    out.push(Cherry { a: leaves[i], b: leaves[j], m });
                }
            }
        }
        out.sort_by_key(|c| (c.a, c.b));
        out
    }

    /// The cherry containing the highest leaf label.
    pub fn canonical_cherry(&self) -> Cherry {
        self.find_cherries()
            .into_iter()
            .max_by_key(|c| (c.b, c.a))
            .expect("every tree with at least 3 leaves has a cherry")
    }

    /// Replaces a cherry by its shared node `m`, which becomes a leaf at the
    /// last position and inherits the larger label of the pair. Remaining
    /// leaves keep their relative order.
    pub fn collapse_cherry(&self, cherry: &Cherry) -> Result<Tree> {
        let (pa, pb) = match (self.position_of(cherry.a), self.position_of(cherry.b)) {
            (Some(pa), Some(pb)) => (pa, pb),
            _ => return Err(Error::NotACherry(cherry.a, cherry.b)),
        };
        let m = self.adj[pa][0];
        if self.adj[pb][0] != m || m != cherry.m || pa == pb {
            return Err(Error::NotACherry(cherry.a, cherry.b));
        }
        let n = self.leaf_count();
        if n <= 3 {
            return Err(Error::TooFewLeaves(n - 1));
        }
        let mut g = self.to_graph();
        g.disconnect(pa, m);
        g.disconnect(pb, m);
        g.label[m] = Some(cherry.a.max(cherry.b));
        let mut order: Vec<usize> = (0..n).filter(|&p| p != pa && p != pb).collect();
        order.push(m);
        Tree::from_graph(&g, &order)
    }

    /// Same topology with leaves reordered by label.
    pub fn sorted_by_label(&self) -> Tree {
        let mut order: Vec<usize> = (0..self.leaf_count()).collect();
        order.sort_by_key(|&p| self.labels[p]);
        Tree::from_graph(&self.to_graph(), &order).expect("reordering preserves validity")
    }

    /// Same topology with leaves moved so that `order[k]` (an old position)
    /// becomes position `k`.
    pub fn with_leaf_order(&self, order: &[usize]) -> Result<Tree> {
        let n = self.leaf_count();
        let mut check = order.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::LengthMismatch { expected: n, got: order.len() });
        }
        Tree::from_graph(&self.to_graph(), order)
    }

    /// Canonical Newick string: rooted at the interior neighbor of the
    /// smallest label, children sorted by their smallest label. Two trees
    /// have equal strings iff they are the same leaf-labeled topology.
    pub fn to_newick(&self) -> String {
        let start = (0..self.leaf_count()).min_by_key(|&p| self.labels[p]).unwrap();
        let root = self.adj[start][0];
        let (s, _) = self.newick_from(root, usize::MAX);
        format!("{s};")
    }

    fn newick_from(&self, v: usize, from: usize) -> (String, u32) {
        if self.is_leaf(v) {
            return (self.labels[v].to_string(), self.labels[v]);
        }
        let mut parts: Vec<(String, u32)> = self.adj[v]
            .iter()
            .filter(|&&w| w != from)
            .map(|&w| self.newick_from(w, v))
            .collect();
        parts.sort_by_key(|p| p.1);
        let min = parts[0].1;
        let body: Vec<String> = parts.into_iter().map(|p| p.0).collect();
        (format!("({})", body.join(",")), min)
    }

    /// Leaf-position bipartitions induced by interior edges, as bitmasks
    /// normalized to exclude position 0.
    pub fn splits(&self) -> Vec<u64> {
        let n = self.leaf_count();
        let full = (1u64 << n) - 1;
        let mut out: Vec<u64> = self
            .digit_masks
            .iter()
            .skip(n)
            .map(|&dm| {
                let m = (0..n).filter(|i| dm >> (2 * i) & 3 != 0).fold(0u64, |a, i| a | 1 << i);
                if m & 1 == 1 {
                    full ^ m
                } else {
                    m
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tree({} order={:?})", self.to_newick(), self.labels)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_newick())
    }
}

impl std::str::FromStr for Tree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Tree> {
        parse_newick(s)
    }
}

struct NewickParser<'a> {
    text: &'a [u8],
    pos: usize,
    graph: Graph,
    saw_length: bool,
}

impl NewickParser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::NewickSyntax { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn token(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && !b"(),:;".contains(&self.text[self.pos]) && !self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos]).unwrap_or("")
    }

    fn branch_length(&mut self) -> Result<()> {
        if self.peek() == Some(b':') {
            self.pos += 1;
            let tok = self.token().to_string();
            if tok.parse::<f64>().is_err() {
                return self.err(format!("invalid branch length {tok:?}"));
            }
            self.saw_length = true;
        }
        Ok(())
    }

    fn subtree(&mut self) -> Result<usize> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let node = self.graph.add_node(None);
                loop {
                    let child = self.subtree()?;
                    self.graph.connect(node, child);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return self.err("expected ',' or ')'"),
                    }
                }
                // Interior labels (e.g. support values) are ignored.
                let _ = self.token();
                self.branch_length()?;
                Ok(node)
            }
            Some(_) => {
                let tok = self.token().to_string();
                if tok.is_empty() {
                    return self.err("expected a leaf label");
                }
                let label = match tok.parse::<u32>() {
                    Ok(l) if l > 0 => l,
                    _ => return self.err(format!("leaf label {tok:?} is not a positive integer")),
                };
                let node = self.graph.add_node(Some(label));
                self.branch_length()?;
                Ok(node)
            }
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses unrooted Newick with positive integer leaf labels `1..=n`. A
/// degree-2 root is smoothed away; branch lengths are accepted and ignored.
pub fn parse_newick(text: &str) -> Result<Tree> {
    let mut p = NewickParser {
        text: text.as_bytes(),
        pos: 0,
        graph: Graph::default(),
        saw_length: false,
    };
    if p.peek() != Some(b'(') {
        return p.err("expected '('");
    }
    let root = p.subtree()?;
    if p.peek() != Some(b';') {
        return p.err("expected ';'");
    }
    p.pos += 1;
    if p.peek().is_some() {
        return p.err("trailing characters after ';'");
    }
    if p.saw_length {
        warn!("branch lengths in newick input are ignored");
    }
    let mut g = p.graph;
    match g.adj[root].len() {
        2 => {
            let (u, v) = (g.adj[root][0], g.adj[root][1]);
            g.disconnect(root, u);
            g.disconnect(root, v);
            g.connect(u, v);
        }
        3 => {}
        1 if g.label[g.adj[root][0]].is_some() => return Err(Error::TooFewLeaves(1)),
        d => return Err(Error::NotTrivalent(d)),
    }
    for v in 0..g.adj.len() {
        let d = g.adj[v].len();
        if g.label[v].is_none() && d != 0 && d != 3 {
            return Err(Error::NotTrivalent(d));
        }
    }
    let mut leaves: Vec<usize> = (0..g.adj.len()).filter(|&v| g.label[v].is_some()).collect();
    leaves.sort_by_key(|&v| g.label[v]);
    for w in leaves.windows(2) {
        if g.label[w[0]] == g.label[w[1]] {
            return Err(Error::DuplicateLeaf(g.label[w[0]].unwrap()));
        }
    }
    let n = leaves.len();
    if n < 3 {
        return Err(Error::TooFewLeaves(n));
    }
    for (i, &v) in leaves.iter().enumerate() {
        let want = i as u32 + 1;
        if g.label[v] != Some(want) {
            return Err(Error::MissingLeaf { n, label: want });
        }
    }
    Tree::from_graph(&g, &leaves)
}

/// `(2n-5)!!`, the number of unrooted trivalent topologies on `n` leaves.
pub fn topology_count(n: usize) -> u64 {
    (3..=n).map(|k| 2 * k as u64 - 5).product()
}

/// All unrooted trivalent topologies on labels `1..=n`, built by inserting
/// leaf `k + 1` into every edge (canonical edge order) of each `k`-leaf
/// topology.
pub fn enumerate_topologies(n: usize) -> Result<Vec<Tree>> {
    enumerate_topologies_up_to(n, DEFAULT_MAX_LEAVES)
}

pub fn enumerate_topologies_up_to(n: usize, max_n: usize) -> Result<Vec<Tree>> {
    if n < 3 || n > max_n || n > MAX_PATTERN_LEN {
        return Err(Error::LeafCountOutOfRange { n, min: 3, max: max_n.min(MAX_PATTERN_LEN) });
    }
    let mut current = vec![Tree::claw()];
    for k in 3..n {
        let mut next = Vec::with_capacity(current.len() * (2 * k - 3));
        for t in &current {
            for &(u, v) in t.edges() {
                let mut g = t.to_graph();
                g.disconnect(u, v);
                let w = g.add_node(None);
                let leaf = g.add_node(Some(k as u32 + 1));
                g.connect(u, w);
                g.connect(w, v);
                g.connect(w, leaf);
                let mut order: Vec<usize> = (0..k).collect();
                order.push(leaf);
                next.push(Tree::from_graph(&g, &order)?);
            }
        }
        current = next;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{slice_patterns, Nucleotide::*};

    fn tree(s: &str) -> Tree {
        parse_newick(s).unwrap()
    }

    #[test]
    fn parses_quartet_and_claw() {
        let t = tree("((1,2),(3,4));");
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(t.edge_count(), 5);
        assert_eq!(t.interior_nodes().len(), 2);
        assert_eq!(t.to_newick(), "(1,2,(3,4));");
        let cherries: Vec<_> = t.find_cherries().iter().map(|c| (c.a, c.b)).collect();
        assert_eq!(cherries, vec![(1, 2), (3, 4)]);

        let claw = tree("(1,2,3);");
        assert_eq!(claw.edge_count(), 3);
        assert_eq!(claw.interior_nodes().len(), 1);
        assert_eq!(claw, Tree::claw());
    }

    #[test]
    fn rooted_input_is_unrooted() {
        assert_eq!(tree("((1,2),(3,4));").to_newick(), tree("(1,2,(3,4));").to_newick());
        assert_eq!(tree("(1,(2,3));").to_newick(), "(1,2,3);");
        assert_eq!(
            tree("((1:0.1,2:0.2)0.9:0.3,(3:1,4:1e-2):0.5);").to_newick(),
            "(1,2,(3,4));"
        );
    }

    #[test]
    fn newick_errors() {
        assert_eq!(parse_newick("((1,2),3,4,5);"), Err(Error::NotTrivalent(4)));
        assert!(matches!(parse_newick("((1,2,3),4,5);"), Err(Error::NotTrivalent(4))));
        assert_eq!(parse_newick("((1,2),(1,3));"), Err(Error::DuplicateLeaf(1)));
        assert_eq!(parse_newick("((1,2),(3,5));"), Err(Error::MissingLeaf { n: 4, label: 4 }));
        assert_eq!(parse_newick("(1,2);"), Err(Error::TooFewLeaves(2)));
        assert!(matches!(parse_newick("((1,2),(3,4))"), Err(Error::NewickSyntax { .. })));
        assert!(matches!(parse_newick("((1,2),(3,x));"), Err(Error::NewickSyntax { .. })));
        assert!(matches!(parse_newick("((1,2),(3,4);"), Err(Error::NewickSyntax { .. })));
        assert!(matches!(parse_newick("(1,2,3); x"), Err(Error::NewickSyntax { .. })));
    }

    #[test]
    fn topology_counts() {
        assert_eq!(enumerate_topologies(3).unwrap().len(), 1);
        assert_eq!(enumerate_topologies(4).unwrap().len(), 3);
        assert_eq!(enumerate_topologies(5).unwrap().len(), 15);
        for n in 3..=7 {
            let all = enumerate_topologies(n).unwrap();
            assert_eq!(all.len() as u64, topology_count(n));
            let distinct: HashSet<String> = all.iter().map(Tree::to_newick).collect();
            assert_eq!(distinct.len(), all.len(), "n={n}");
            for t in &all {
                assert_eq!(t.labels(), (1..=n as u32).collect::<Vec<_>>().as_slice());
                assert_eq!(t.interior_nodes().len(), n - 2);
                assert_eq!(t.edge_count(), 2 * n - 3);
                for &v in t.interior_nodes() {
                    assert_eq!(t.neighbors(v).len(), 3);
                    assert_eq!(t.incident_edges(v).len(), 3);
                }
            }
        }
        assert!(enumerate_topologies(2).is_err());
        assert!(enumerate_topologies(9).is_err());
    }

    #[test]
    fn enumeration_order_is_deterministic() {
        let a: Vec<String> = enumerate_topologies(5).unwrap().iter().map(Tree::to_newick).collect();
        let b: Vec<String> = enumerate_topologies(5).unwrap().iter().map(Tree::to_newick).collect();
        assert_eq!(a, b);
        let four: Vec<String> = enumerate_topologies(4).unwrap().iter().map(Tree::to_newick).collect();
        assert_eq!(four, vec!["(1,(2,3),4);", "(1,(2,4),3);", "(1,2,(3,4));"]);
    }

    #[test]
    fn cherries() {
        let claw = Tree::claw();
        let c: Vec<_> = claw.find_cherries().iter().map(|c| (c.a, c.b)).collect();
        assert_eq!(c, vec![(1, 2), (1, 3), (2, 3)]);

        let cat = tree("((((1,2),3),4),5);");
        let c: Vec<_> = cat.find_cherries().iter().map(|c| (c.a, c.b)).collect();
        assert_eq!(c, vec![(1, 2), (4, 5)]);
        let canon = cat.canonical_cherry();
        assert_eq!((canon.a, canon.b), (4, 5));

        let q = tree("((1,2),(3,4));");
        let canon = q.canonical_cherry();
        assert_eq!((canon.a, canon.b), (3, 4));
    }

    #[test]
    fn collapse() {
        let q = tree("((1,2),(3,4));");
        let c = q.canonical_cherry();
        let t = q.collapse_cherry(&c).unwrap();
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.labels(), &[1, 2, 4]);
        assert_eq!(t.edge_count(), 3);

        let cat = tree("((((1,2),3),4),5);");
        let t = cat.collapse_cherry(&cat.canonical_cherry()).unwrap();
        assert_eq!(t.labels(), &[1, 2, 3, 5]);
        assert_eq!(t.edge_count(), 5);
        assert_eq!(t.interior_nodes().len(), 2);
        assert_eq!(t.to_newick(), "(1,2,(3,5));");

        let claw = Tree::claw();
        let c = claw.find_cherries()[2];
        assert_eq!(claw.collapse_cherry(&c), Err(Error::TooFewLeaves(2)));

        let bogus = Cherry { a: 1, b: 3, m: q.interior_nodes()[0] };
        assert_eq!(q.collapse_cherry(&bogus), Err(Error::NotACherry(1, 3)));
    }

    #[test]
    fn collapse_counts_for_all_small_topologies() {
        for n in 4..=7 {
            for t in enumerate_topologies(n).unwrap() {
                for c in t.find_cherries() {
                    let s = t.collapse_cherry(&c).unwrap();
                    assert_eq!(s.leaf_count(), n - 1);
                    assert_eq!(s.interior_nodes().len(), n - 3);
                    assert_eq!(s.edge_count(), 2 * n - 5);
                    assert_eq!(*s.labels().last().unwrap(), c.b);
                }
            }
        }
    }

    #[test]
    fn quartet_edge_assignment() {
        let q = tree("((1,2),(3,4));");
        let p: Pattern = "CGTA".parse().unwrap();
        let x = q.edge_assignment(&p).unwrap();
        assert_eq!(&x.as_slice()[..4], &[C, G, T, A]);
        assert_eq!(x.get(4), T);

        let all_a = Pattern::constant(4, A);
        assert!(q.edge_assignment(&all_a).unwrap().as_slice().iter().all(|&e| e == A));
        assert_eq!(q.edge_assignment(&"CAAA".parse().unwrap()), None);
    }

    #[test]
    fn edge_assignment_balances_every_node() {
        for n in 3..=6 {
            for t in enumerate_topologies(n).unwrap() {
                for p in slice_patterns(n) {
                    let x = t.edge_assignment(&p).unwrap();
                    for leaf in 0..n {
                        assert_eq!(x.get(leaf), p.get(leaf));
                    }
                    for &v in t.interior_nodes() {
                        let s: Nucleotide = t.incident_edges(v).iter().map(|&e| x.get(e)).sum();
                        assert_eq!(s, A);
                    }
                }
            }
        }
    }

    #[test]
    fn splits_identify_topology() {
        let a = tree("((1,2),(3,4));");
        let b = tree("((1,3),(2,4));");
        assert_eq!(a.splits(), vec![0b1100]);
        assert_eq!(b.splits(), vec![0b1010]);
    }
}
