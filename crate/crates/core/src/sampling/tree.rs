use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rooted referral tree stored in breadth-first order. Sample 0 is the seed
/// and every other sample `τ` has a parent `τ' < τ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeRepr", into = "TreeRepr")]
pub struct SamplingTree {
    parent: Vec<usize>,
}

/// Wire form: `parents[0]` is `null`.
#[derive(Serialize, Deserialize)]
struct TreeRepr {
    parents: Vec<Option<usize>>,
}

impl From<SamplingTree> for TreeRepr {
    fn from(t: SamplingTree) -> Self {
        TreeRepr {
            parents: t
                .parent
                .iter()
                .enumerate()
                .map(|(i, &p)| (i > 0).then_some(p))
                .collect(),
        }
    }
}

impl TryFrom<TreeRepr> for SamplingTree {
    type Error = Error;

    fn try_from(r: TreeRepr) -> Result<Self> {
        let mut parents = r.parents.into_iter();
        match parents.next() {
            Some(None) => {}
            _ => return Err(Error::arg("tree must start with a root whose parent is null")),
        }
        let rest: Option<Vec<usize>> = parents.collect();
        let rest = rest.ok_or_else(|| Error::arg("only the root may lack a parent"))?;
        SamplingTree::from_parents(rest)
    }
}

/// Growth stopped before the target size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extinct {
    pub reached: usize,
}

impl SamplingTree {
    /// `parents[τ-1]` is the parent of sample `τ`.
    pub fn from_parents(parents: Vec<usize>) -> Result<Self> {
        let mut depth = vec![0usize];
        for (idx, &p) in parents.iter().enumerate() {
            let tau = idx + 1;
            if p >= tau {
                return Err(Error::arg(format!(
                    "sample {tau} has parent {p}; parents must precede children"
                )));
            }
            let d = depth[p] + 1;
            if d < depth[tau - 1] {
                return Err(Error::arg(format!(
                    "sample {tau} at depth {d} follows a deeper sample; order must be breadth-first"
                )));
            }
            depth.push(d);
        }
        let mut parent = Vec::with_capacity(parents.len() + 1);
        parent.push(0);
        parent.extend(parents);
        Ok(Self { parent })
    }

    /// A single seed.
    pub fn root() -> Self {
        Self { parent: vec![0] }
    }

    /// A path `0 → 1 → … → n−1`.
    pub fn path(n: usize) -> Self {
        assert!(n >= 1);
        Self::complete_ary(1, n)
    }

    /// Full `arity`-ary tree with `levels` levels, numbered breadth-first.
    pub fn complete_ary(arity: usize, levels: usize) -> Self {
        assert!(arity >= 1 && levels >= 1, "arity and levels must be positive");
        let mut parent = vec![0];
        let mut level_start = 0;
        let mut level_len = 1;
        for _ in 1..levels {
            for p in level_start..level_start + level_len {
                for _ in 0..arity {
                    parent.push(p);
                }
            }
            level_start += level_len;
            level_len *= arity;
        }
        Self { parent }
    }

    /// Breadth-first Galton–Watson growth with Poisson(`lambda`) offspring,
    /// truncated at exactly `n_target` nodes.
    pub fn poisson<R: Rng + ?Sized>(
        rng: &mut R,
        lambda: f64,
        n_target: usize,
    ) -> Result<std::result::Result<Self, Extinct>> {
        let offspring = poisson_law(lambda)?;
        if n_target == 0 {
            return Err(Error::arg("target size must be at least 1"));
        }
        let mut parent = vec![0];
        let mut next = 0;
        while parent.len() < n_target {
            if next == parent.len() {
                return Ok(Err(Extinct {
                    reached: parent.len(),
                }));
            }
            let r = offspring.sample(rng) as usize;
            let take = r.min(n_target - parent.len());
            parent.extend(std::iter::repeat_n(next, take));
            next += 1;
        }
        Ok(Ok(Self { parent }))
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Parent of `tau`, `None` for the root.
    pub fn parent(&self, tau: usize) -> Option<usize> {
        (tau > 0).then(|| self.parent[tau])
    }

    /// `(τ', τ)` pairs for every referral.
    pub fn referrals(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.len()).map(move |t| (self.parent[t], t))
    }

    pub fn children_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.len()];
        for (p, _) in self.referrals() {
            c[p] += 1;
        }
        c
    }

    pub fn depths(&self) -> Vec<usize> {
        let mut d = vec![0; self.len()];
        for t in 1..self.len() {
            d[t] = d[self.parent[t]] + 1;
        }
        d
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.children_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(t, _)| t)
            .collect()
    }

    /// Maximum degree of the tree viewed as an undirected graph.
    pub fn max_degree(&self) -> usize {
        self.children_counts()
            .iter()
            .enumerate()
            .map(|(t, &c)| c + usize::from(t > 0))
            .max()
            .unwrap_or(0)
    }

    pub fn max_out_degree(&self) -> usize {
        self.children_counts().into_iter().max().unwrap_or(0)
    }

    /// Number of edges on the path between `a` and `b`.
    pub fn distance(&self, a: usize, b: usize, depths: &[usize]) -> usize {
        let (mut a, mut b) = (a, b);
        let mut steps = 0;
        while depths[a] > depths[b] {
            a = self.parent[a];
            steps += 1;
        }
        while depths[b] > depths[a] {
            b = self.parent[b];
            steps += 1;
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
            steps += 2;
        }
        steps
    }
}

pub(crate) fn poisson_law(lambda: f64) -> Result<Poisson<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
    }
    Poisson::new(lambda).map_err(|e| Error::arg(format!("lambda {lambda}: {e}")))
}
