//! Structured vocabulary: a DAG over word ids with cached closures.
//!
//! A concept word may only emit itself, its ancestors and its descendants.
//! That reach set is the sparsity pattern of every row of the concept-word
//! matrix and is queried on every sweep, so all closures are computed once at
//! construction.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    num_words: usize,
    edges: Vec<(usize, usize)>,
    /// Sorted, self included.
    descendants: Vec<Vec<usize>>,
    /// Sorted, self excluded.
    ancestors: Vec<Vec<usize>>,
    /// Sorted union of the two above.
    reach: Vec<Vec<usize>>,
}

impl Ontology {
    /// Builds the ontology from `(parent, child)` pairs over ids `0..num_words`.
    ///
    /// Duplicate edges are dropped. Multiple roots are fine.
    pub fn from_edges(num_words: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut edges = edges.to_vec();
        for &(p, c) in &edges {
            for id in [p, c] {
                if id >= num_words {
                    return Err(Error::IdOutOfRange {
                        id,
                        size: num_words,
                    });
                }
            }
            if p == c {
                return Err(Error::SelfLoop(p));
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut children = vec![Vec::new(); num_words];
        let mut parents = vec![Vec::new(); num_words];
        for &(p, c) in &edges {
            children[p].push(c);
            parents[c].push(p);
        }
        check_acyclic(&children, &parents)?;

        let descendants: Vec<Vec<usize>> = (0..num_words)
            .map(|w| bfs(w, &children, true))
            .collect();
        let ancestors: Vec<Vec<usize>> =
            (0..num_words).map(|w| bfs(w, &parents, false)).collect();
        let reach = descendants
            .iter()
            .zip(&ancestors)
            .map(|(d, a)| {
                let mut r: Vec<usize> = d.iter().chain(a).copied().collect();
                r.sort_unstable();
                r
            })
            .collect();

        Ok(Self {
            num_words,
            edges,
            descendants,
            ancestors,
            reach,
        })
    }

    /// Perfect binary tree in heap order: node `i` has children `2i+1`, `2i+2`.
    pub fn binary_tree(depth: u32) -> Self {
        let n = (1usize << depth) - 1;
        let edges: Vec<_> = (0..n / 2)
            .flat_map(|i| [(i, 2 * i + 1), (i, 2 * i + 2)])
            .collect();
        Self::from_edges(n, &edges).expect("heap tree is a valid DAG")
    }

    /// `0 -> 1 -> ... -> n-1`.
    pub fn chain(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("chain is a valid DAG")
    }

    /// No edges at all; every reach set is a singleton.
    pub fn flat(n: usize) -> Self {
        Self::from_edges(n, &[]).expect("edgeless graph is a valid DAG")
    }

    #[inline]
    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn check_id(&self, w: usize) -> Result<()> {
        if w < self.num_words {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                id: w,
                size: self.num_words,
            })
        }
    }

    /// Descendants of `w`, including `w` itself.
    pub fn descendant_set(&self, w: usize) -> Result<&[usize]> {
        self.check_id(w)?;
        Ok(&self.descendants[w])
    }

    pub fn ancestor_set(&self, w: usize) -> Result<&[usize]> {
        self.check_id(w)?;
        Ok(&self.ancestors[w])
    }

    /// Indicator over words that concept `w` can emit.
    pub fn reach_mask(&self, w: usize) -> Result<Vec<bool>> {
        self.check_id(w)?;
        let mut mask = vec![false; self.num_words];
        for &u in &self.reach[w] {
            mask[u] = true;
        }
        Ok(mask)
    }

    /// Sorted word ids reachable from concept `w`. Panics on a bad id.
    #[inline]
    pub fn reach(&self, w: usize) -> &[usize] {
        &self.reach[w]
    }

    #[inline]
    pub fn descendants(&self, w: usize) -> &[usize] {
        &self.descendants[w]
    }

    #[inline]
    pub fn ancestors(&self, w: usize) -> &[usize] {
        &self.ancestors[w]
    }

    #[inline]
    pub fn can_emit(&self, concept: usize, word: usize) -> bool {
        self.reach[concept].binary_search(&word).is_ok()
    }
}

fn bfs(start: usize, adj: &[Vec<usize>], include_start: bool) -> Vec<usize> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    if include_start {
        out.push(start);
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Kahn's algorithm; on failure walks parents inside the residual graph until
/// a node repeats, which is then guaranteed to lie on a cycle.
fn check_acyclic(children: &[Vec<usize>], parents: &[Vec<usize>]) -> Result<()> {
    let n = children.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&u| indeg[u] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(u) = queue.pop_front() {
        removed[u] = true;
        for &v in &children[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    let Some(mut u) = (0..n).find(|&u| !removed[u]) else {
        return Ok(());
    };
    let mut visited = vec![false; n];
    while !visited[u] {
        visited[u] = true;
        u = *parents[u]
            .iter()
            .find(|&&p| !removed[p])
            .expect("residual node keeps a residual parent");
    }
    Err(Error::CyclicGraph(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton() {
        let o = Ontology::from_edges(1, &[]).unwrap();
        assert_eq!(o.descendant_set(0).unwrap(), &[0]);
        assert!(o.ancestor_set(0).unwrap().is_empty());
        assert_eq!(o.reach_mask(0).unwrap(), vec![true]);
    }

    #[test]
    fn heap_tree_closures() {
        let o = Ontology::binary_tree(5);
        assert_eq!(o.num_words(), 31);
        let mut expected = vec![1, 3, 4, 7, 8, 9, 10];
        expected.extend(15..=22);
        assert_eq!(o.descendant_set(1).unwrap(), expected.as_slice());
        assert_eq!(o.ancestor_set(1).unwrap(), &[0]);
        assert_eq!(o.descendant_set(0).unwrap().len(), 31);
        assert_eq!(o.descendant_set(20).unwrap(), &[20]);
    }

    #[test]
    fn heap_tree_reach_mask() {
        let o = Ontology::binary_tree(5);
        let mask = o.reach_mask(3).unwrap();
        let ones: Vec<usize> = (0..31).filter(|&i| mask[i]).collect();
        assert_eq!(ones, vec![0, 1, 3, 7, 8, 15, 16, 17, 18]);

        let small = Ontology::binary_tree(3);
        assert!(small.reach_mask(0).unwrap().iter().all(|&b| b));
        assert_eq!(small.descendant_set(1).unwrap(), &[1, 3, 4]);
    }

    #[test]
    fn cycles_and_bad_ids() {
        assert!(matches!(
            Ontology::from_edges(2, &[(0, 1), (1, 0)]),
            Err(Error::CyclicGraph(_))
        ));
        // Node 3 hangs below the cycle; the reported node must be on it.
        match Ontology::from_edges(4, &[(0, 1), (1, 2), (2, 1), (2, 3)]) {
            Err(Error::CyclicGraph(u)) => assert!(u == 1 || u == 2),
            other => panic!("expected a cycle, got {other:?}"),
        }
        assert!(matches!(
            Ontology::from_edges(2, &[(0, 2)]),
            Err(Error::IdOutOfRange { id: 2, size: 2 })
        ));
        assert!(matches!(
            Ontology::from_edges(2, &[(1, 1)]),
            Err(Error::SelfLoop(1))
        ));
        let o = Ontology::binary_tree(2);
        assert!(o.reach_mask(3).is_err());
        assert!(o.descendant_set(7).is_err());
    }

    #[test]
    fn dag_with_shared_child_and_duplicates() {
        // Diamond: 0 -> {1, 2} -> 3, plus a duplicate edge and a second root.
        let o = Ontology::from_edges(5, &[(0, 1), (0, 2), (1, 3), (2, 3), (1, 3), (4, 3)]).unwrap();
        assert_eq!(o.edges().len(), 5);
        assert_eq!(o.ancestor_set(3).unwrap(), &[0, 1, 2, 4]);
        assert_eq!(o.descendant_set(0).unwrap(), &[0, 1, 2, 3]);
        // 1 and 2 are siblings, not on each other's chain.
        assert!(!o.can_emit(1, 2));
        assert!(o.can_emit(4, 3));
    }

    #[test]
    fn tree_ancestor_count_is_depth() {
        let o = Ontology::binary_tree(5);
        for w in 0..31usize {
            let depth = (usize::BITS - (w + 1).leading_zeros() - 1) as usize;
            assert_eq!(o.ancestors(w).len(), depth);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        /// Random DAGs: edges only from lower to higher ids.
        fn dag() -> impl Strategy<Value = Ontology> {
            (2usize..12).prop_flat_map(|n| {
                proptest::collection::vec((0..n, 0..n), 0..(2 * n)).prop_map(move |pairs| {
                    let edges: Vec<_> = pairs
                        .into_iter()
                        .filter(|(a, b)| a != b)
                        .map(|(a, b)| (a.min(b), a.max(b)))
                        .collect();
                    Ontology::from_edges(n, &edges).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn reach_is_symmetric(o in dag()) {
                let n = o.num_words();
                for u in 0..n {
                    for w in 0..n {
                        prop_assert_eq!(o.can_emit(u, w), o.can_emit(w, u));
                    }
                }
            }

            #[test]
            fn closure_is_consistent(o in dag()) {
                let n = o.num_words();
                for w in 0..n {
                    prop_assert!(o.descendants(w).contains(&w));
                    prop_assert!(!o.ancestors(w).contains(&w));
                    for &d in o.descendants(w) {
                        // descendants of descendants stay inside
                        for &dd in o.descendants(d) {
                            prop_assert!(o.descendants(w).contains(&dd));
                        }
                        prop_assert!(d == w || o.ancestors(d).contains(&w));
                    }
                }
            }
        }
    }
}
