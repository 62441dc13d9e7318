//! Circulant regular graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected, simple, connected `k`-regular graph on `n` nodes with
/// sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularGraph {
    n: usize,
    k: usize,
    adjacency: Vec<Vec<usize>>,
}

impl RegularGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Each undirected edge once, as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.n * self.k / 2
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Checks regularity, symmetry, simplicity and connectivity.
    pub fn audit(&self) -> Result<()> {
        for (i, nb) in self.adjacency.iter().enumerate() {
            if nb.len() != self.k {
                return Err(Error::Graph(format!("node {i} has degree {}", nb.len())));
            }
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Graph(format!(
                    "node {i}: unsorted or repeated neighbors"
                )));
            }
            for &j in nb {
                if j == i {
                    return Err(Error::Graph(format!("self-loop at {i}")));
                }
                if self.adjacency[j].binary_search(&i).is_err() {
                    return Err(Error::Graph(format!("edge {i}-{j} is not symmetric")));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::Graph("graph is disconnected".into()));
        }
        Ok(())
    }
}

/// Circulant `k`-regular graph: node `i` is joined to `i +- 1, ..., i +- k/2`
/// (mod `n`), plus the antipode `i + n/2` when `k` is odd.
pub fn make_regular_graph(n: usize, k: usize) -> Result<RegularGraph> {
    if n < 2 || k < 1 || k >= n {
        return Err(Error::Graph(format!(
            "need 1 <= k <= n - 1, got n = {n}, k = {k}"
        )));
    }
    if (n * k) % 2 == 1 {
        return Err(Error::Graph(format!("n * k = {} is odd", n * k)));
    }
    let mut adjacency = vec![Vec::with_capacity(k); n];
    for (i, nb) in adjacency.iter_mut().enumerate() {
        for off in 1..=k / 2 {
            nb.push((i + off) % n);
            nb.push((i + n - off) % n);
        }
        if k % 2 == 1 {
            nb.push((i + n / 2) % n);
        }
        nb.sort_unstable();
    }
    let g = RegularGraph { n, k, adjacency };
    g.audit()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_four_offsets() {
        let g = make_regular_graph(10, 4).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 8, 9]);
        assert_eq!(g.neighbors(5), &[3, 4, 6, 7]);
        assert_eq!(g.edges().count(), 20);
    }

    #[test]
    fn four_three_is_complete() {
        let g = make_regular_graph(4, 3).unwrap();
        for i in 0..4 {
            let want: Vec<usize> = (0..4).filter(|&j| j != i).collect();
            assert_eq!(g.neighbors(i), want.as_slice());
        }
    }

    #[test]
    fn ten_three_audit() {
        let g = make_regular_graph(10, 3).unwrap();
        assert_eq!(g.neighbors(0), &[1, 5, 9]);
        assert_eq!(g.neighbors(7), &[2, 6, 8]);
        assert!(g.audit().is_ok());
    }

    #[test]
    fn infeasible_inputs() {
        assert!(make_regular_graph(5, 3).is_err());
        assert!(make_regular_graph(5, 5).is_err());
        assert!(make_regular_graph(5, 0).is_err());
        // a perfect matching is not connected
        assert!(make_regular_graph(10, 1).is_err());
        assert!(make_regular_graph(2, 1).is_ok());
    }

    #[test]
    fn all_feasible_small_graphs_pass_audit() {
        for n in 2..40 {
            for k in 1..n {
                if let Ok(g) = make_regular_graph(n, k) {
                    assert!(g.audit().is_ok());
                    assert_eq!(g.edges().count(), g.edge_count());
                } else {
                    assert!((n * k) % 2 == 1 || (k == 1 && n > 2));
                }
            }
        }
    }
}
