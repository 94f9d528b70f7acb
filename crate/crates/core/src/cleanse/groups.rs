use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric `n x n` matrix of pairwise SSIM values, row-major, with the ids
/// of its rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{n} ids need {} matrix entries, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self { ids, values })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Heatmap export: one line per row, comma-separated.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    /// Matrix indices, ascending.
    pub indices: Vec<usize>,
    pub members: Vec<String>,
    pub representative: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGroups {
    pub threshold: f64,
    /// Ordered by smallest member index.
    pub components: Vec<Component>,
}

impl SimilarityGroups {
    pub fn representatives(&self) -> impl Iterator<Item = &str> {
        self.components.iter().map(|c| c.representative.as_str())
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    /// Classes as ascending index lists, ordered by their smallest index.
    pub fn classes(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = classes.len();
                classes.push(Vec::new());
            }
            classes[slot[r]].push(i);
        }
        classes
    }
}

/// Connected components of the graph with an edge wherever
/// `value >= threshold` off the diagonal. Each component keeps its
/// lexicographically smallest id as representative.
pub fn group(matrix: &SimilarityMatrix, threshold: f64) -> Result<SimilarityGroups> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let n = matrix.n();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if matrix.get(i, j) >= threshold || matrix.get(j, i) >= threshold {
                uf.union(i, j);
            }
        }
    }
    let components = uf
        .classes()
        .into_iter()
        .map(|indices| {
            let members: Vec<String> = indices.iter().map(|&i| matrix.ids[i].clone()).collect();
            let representative = members.iter().min().expect("classes are non-empty").clone();
            Component {
                indices,
                members,
                representative,
            }
        })
        .collect();
    Ok(SimilarityGroups { threshold, components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(n: usize, edges: &[(usize, usize)]) -> SimilarityMatrix {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        for &(a, b) in edges {
            v[a * n + b] = 0.95;
            v[b * n + a] = 0.95;
        }
        SimilarityMatrix::new((0..n).map(|i| i.to_string()).collect(), v).unwrap()
    }

    #[test]
    fn chain_merges_transitively() {
        let g = group(&matrix(5, &[(0, 1), (1, 2)]), 0.9).unwrap();
        let idx: Vec<_> = g.components.iter().map(|c| c.indices.clone()).collect();
        assert_eq!(idx, vec![vec![0, 1, 2], vec![3], vec![4]]);
        assert_eq!(g.representatives().count(), 3);
    }

    #[test]
    fn no_edges_all_singletons() {
        let g = group(&matrix(4, &[]), 0.9).unwrap();
        assert_eq!(g.components.len(), 4);
    }

    #[test]
    fn all_edges_one_component() {
        let edges: Vec<_> = (0..4).flat_map(|i| ((i + 1)..4).map(move |j| (i, j))).collect();
        let g = group(&matrix(4, &edges), 0.9).unwrap();
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].representative, "0");
    }

    #[test]
    fn representative_is_lexicographic_minimum() {
        let mut m = matrix(3, &[(0, 2)]);
        m.ids = vec!["zeta".into(), "mid".into(), "alpha".into()];
        let g = group(&m, 0.9).unwrap();
        assert_eq!(g.components[0].representative, "alpha");
    }

    #[test]
    fn threshold_range() {
        assert!(group(&matrix(2, &[]), 0.0).is_err());
        assert!(group(&matrix(2, &[]), 1.5).is_err());
        assert!(group(&matrix(2, &[]), 1.0).is_ok());
    }

    #[test]
    fn heatmap_csv_shape() {
        let csv = matrix(3, &[(0, 1)]).to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], "1,0.95,0");
    }
}
