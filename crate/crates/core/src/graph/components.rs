use super::{Graph, GraphBuilder};

/// Disjoint sets with union by size and path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }
}

#[derive(Debug, Clone)]
pub struct LargestComponent {
    pub graph: Graph,
    /// `old_to_new[i]` is the id of original node `i` in `graph`, if kept.
    pub old_to_new: Vec<Option<usize>>,
    /// Original id of each kept node, increasing.
    pub new_to_old: Vec<usize>,
}

/// Restricts `g` to a maximum-cardinality connected component. Among equal
/// sizes the component containing the smallest original id wins. Kept nodes
/// are renumbered in increasing original order.
pub fn largest_connected_component(g: &Graph) -> LargestComponent {
    let n = g.node_count();
    let mut uf = UnionFind::new(n);
    for (i, j, _) in g.edges() {
        uf.union(i, j);
    }
    // Scanning ids upward, the first root reaching the max size owns the
    // smallest minimum id among the tied components.
    let mut best: Option<(usize, usize)> = None;
    for i in 0..n {
        let root = uf.find(i);
        let size = uf.set_size(root);
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((root, size));
        }
    }

    let mut old_to_new = vec![None; n];
    let mut new_to_old = Vec::new();
    if let Some((root, _)) = best {
        for (i, slot) in old_to_new.iter_mut().enumerate() {
            if uf.find(i) == root {
                *slot = Some(new_to_old.len());
                new_to_old.push(i);
            }
        }
    }

    let graph = if new_to_old.len() == n {
        g.clone()
    } else {
        let mut b = GraphBuilder::with_capacity(new_to_old.len(), 0);
        for (i, j, w) in g.edges() {
            if let (Some(a), Some(c)) = (old_to_new[i], old_to_new[j]) {
                b.push_unchecked(a, c, w);
            }
        }
        b.build_unchecked()
    };

    LargestComponent {
        graph,
        old_to_new,
        new_to_old,
    }
}
