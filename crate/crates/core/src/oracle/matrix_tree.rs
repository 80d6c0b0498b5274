//! Weighted spanning-tree sums via the matrix-tree theorem.
//!
//! The reduced Laplacian is eliminated one vertex at a time. Each Schur
//! complement of a Laplacian is again a Laplacian, so every quantity stays
//! positive and the whole elimination runs on log-magnitudes without
//! cancellation: pivots are weighted degrees and fill-in is a log-add-exp.

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp_slice};

/// Undirected multigraph on `0..num_vertices`; edge order defines coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if num_vertices < 2 {
            return Err(Error::validation("spanning-tree graph needs at least 2 vertices"));
        }
        for &(u, v) in &edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::validation(format!("edge ({u},{v}) references a missing vertex")));
            }
            if u == v {
                return Err(Error::validation(format!("self-loop at vertex {u}")));
            }
        }
        let g = Graph { num_vertices, edges };
        if !g.is_connected() {
            return Err(Error::validation("spanning-tree graph is disconnected"));
        }
        Ok(g)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.num_vertices);
        let mut comps = self.num_vertices;
        for &(u, v) in &self.edges {
            if uf.union(u, v) {
                comps -= 1;
            }
        }
        comps == 1
    }

    /// Every spanning tree as a sorted list of edge indices. Errors past `limit` trees.
    pub fn spanning_trees(&self, limit: usize) -> Result<Vec<Vec<usize>>> {
        let n = self.num_vertices;
        let mut out = Vec::new();
        let mut chosen = Vec::with_capacity(n - 1);
        self.extend_trees(0, &mut chosen, &mut out, limit)?;
        Ok(out)
    }

    fn extend_trees(
        &self,
        start: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> Result<()> {
        let need = self.num_vertices - 1;
        if chosen.len() == need {
            if out.len() >= limit {
                return Err(Error::Budget {
                    message: format!("more than {limit} spanning trees"),
                    lower: limit as f64,
                    upper: f64::INFINITY,
                });
            }
            out.push(chosen.clone());
            return Ok(());
        }
        let remaining = need - chosen.len();
        for e in start..self.edges.len() {
            if self.edges.len() - e < remaining {
                break;
            }
            chosen.push(e);
            if is_forest(self, chosen) {
                self.extend_trees(e + 1, chosen, out, limit)?;
            }
            chosen.pop();
        }
        Ok(())
    }
}

fn is_forest(g: &Graph, edges: &[usize]) -> bool {
    let mut uf = UnionFind::new(g.num_vertices);
    edges.iter().all(|&e| uf.union(g.edges[e].0, g.edges[e].1))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = x;
        while self.parent[x] != r {
            let next = self.parent[x];
            self.parent[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// `log Σ_T ∏_{e∈T} e^{w_e}` for a multigraph given by vertex count and edge list.
/// Self-loops are ignored (they never lie in a spanning tree).
pub fn matrix_tree_log_det(num_vertices: usize, edges: &[(usize, usize)], w: &[f64]) -> Result<f64> {
    if num_vertices < 2 {
        return Err(Error::domain("matrix-tree determinant needs at least 2 vertices"));
    }
    let n = num_vertices;
    // log of aggregated edge weights between distinct vertices
    let mut lw = vec![vec![f64::NEG_INFINITY; n]; n];
    for (&(u, v), &we) in edges.iter().zip(w) {
        if u != v {
            lw[u][v] = log_add_exp(lw[u][v], we);
            lw[v][u] = lw[u][v];
        }
    }
    let mut alive = vec![true; n];
    let mut acc = 0.0;
    // vertex n-1 is the deleted root; eliminate the rest
    for k in 0..n - 1 {
        let neigh: Vec<usize> = (0..n).filter(|&j| alive[j] && j != k && lw[k][j] > f64::NEG_INFINITY).collect();
        let deg = log_sum_exp_slice(&neigh.iter().map(|&j| lw[k][j]).collect::<Vec<_>>());
        if deg == f64::NEG_INFINITY {
            return Err(Error::domain("graph is disconnected; no spanning tree exists"));
        }
        if !deg.is_finite() {
            return Err(Error::numerical(format!("non-finite pivot at vertex {k}")));
        }
        acc += deg;
        for (ai, &a) in neigh.iter().enumerate() {
            for &b in &neigh[ai + 1..] {
                let add = lw[a][k] + lw[k][b] - deg;
                lw[a][b] = log_add_exp(lw[a][b], add);
                lw[b][a] = lw[a][b];
            }
        }
        alive[k] = false;
        for j in 0..n {
            lw[k][j] = f64::NEG_INFINITY;
            lw[j][k] = f64::NEG_INFINITY;
        }
    }
    Ok(acc)
}

/// Edge marginals `P(e ∈ T)` under the weighted spanning-tree distribution,
/// via contraction: `P(e ∈ T) = e^{w_e} τ(G/e) / τ(G)`.
pub fn edge_marginals(num_vertices: usize, edges: &[(usize, usize)], w: &[f64]) -> Result<(f64, Vec<f64>)> {
    let total = matrix_tree_log_det(num_vertices, edges, w)?;
    let mut out = Vec::with_capacity(edges.len());
    for (e, &(u, v)) in edges.iter().enumerate() {
        if num_vertices == 2 {
            out.push((w[e] - total).exp());
            continue;
        }
        // merge v into u, relabel the last vertex into v's slot
        let last = num_vertices - 1;
        let relabel = |x: usize| -> usize {
            let x = if x == v { u } else { x };
            if x == last { v } else { x }
        };
        let contracted: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (relabel(a), relabel(b))).collect();
        let sub = matrix_tree_log_det(num_vertices - 1, &contracted, w)?;
        out.push((w[e] + sub - total).exp().min(1.0));
    }
    Ok((total, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        e
    }

    #[test]
    fn cayley_counts() {
        let k3 = complete(3);
        assert!((matrix_tree_log_det(3, &k3, &[0.0; 3]).unwrap() - 3f64.ln()).abs() < 1e-14);
        let p3 = vec![(0, 1), (1, 2)];
        assert!(matrix_tree_log_det(3, &p3, &[0.0; 2]).unwrap().abs() < 1e-14);
        let k4 = complete(4);
        assert!((matrix_tree_log_det(4, &k4, &[0.0; 6]).unwrap() - 16f64.ln()).abs() < 1e-14);
        let k6 = complete(6);
        assert!((matrix_tree_log_det(6, &k6, &[0.0; 15]).unwrap() - 1296f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn disconnected_is_domain_error() {
        let e = vec![(0, 1), (2, 3)];
        assert!(matches!(matrix_tree_log_det(4, &e, &[0.0; 2]), Err(Error::Domain(_))));
        assert!(Graph::new(4, e).is_err());
    }

    #[test]
    fn triangle_marginals() {
        let (_, m) = edge_marginals(3, &complete(3), &[0.0; 3]).unwrap();
        for v in m {
            assert!((v - 2.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn extreme_weights_stay_finite() {
        let w = [500.0, -500.0, 250.0, -250.0, 0.0, 499.0];
        let l = matrix_tree_log_det(4, &complete(4), &w).unwrap();
        assert!(l.is_finite());
        let (_, m) = edge_marginals(4, &complete(4), &w).unwrap();
        assert!((m.iter().sum::<f64>() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_edges_count_separately() {
        let g = Graph::new(2, vec![(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.spanning_trees(10).unwrap().len(), 2);
        let l = matrix_tree_log_det(2, &g.edges, &[0.0, 0.0]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
    }
}
