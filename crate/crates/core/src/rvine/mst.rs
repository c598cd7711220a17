use crate::error::{Error, Result};

/// Maximum spanning tree by Prim's algorithm, O(n²).
///
/// `weight(i, j)` returns `None` when `i` and `j` are not adjacent. Among
/// equal weights the edge with the smaller `key` is taken. Edges are returned
/// as `(min, max)` pairs in the order they join the tree.
pub fn maximum_spanning_tree<K: Ord>(
    n: usize,
    weight: impl Fn(usize, usize) -> Option<f64>,
    key: impl Fn(usize, usize) -> K,
) -> Result<Vec<(usize, usize)>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut in_tree = vec![false; n];
    // best[v] = (weight, parent) of the best known edge into v
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);

    let better = |cand: (f64, usize, usize), cur: (f64, usize, usize)| -> bool {
        let ck = key(cand.1.min(cand.2), cand.1.max(cand.2));
        let kk = key(cur.1.min(cur.2), cur.1.max(cur.2));
        cand.0 > cur.0 || (cand.0 == cur.0 && ck < kk)
    };

    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if let Some(w) = weight(current.min(v), current.max(v)) {
                if w.is_nan() {
                    return Err(Error::Structural(format!("NaN weight on edge ({current}, {v})")));
                }
                let replace = match best[v] {
                    None => true,
                    Some((bw, bp)) => better((w, current, v), (bw, bp, v)),
                };
                if replace {
                    best[v] = Some((w, current));
                }
            }
        }
        let mut pick: Option<(f64, usize, usize)> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            if let Some((w, p)) = best[v] {
                let cand = (w, p, v);
                if pick.is_none_or(|cur| better(cand, cur)) {
                    pick = Some(cand);
                }
            }
        }
        let (_, p, v) = pick.ok_or_else(|| {
            Error::Structural("candidate graph is disconnected".into())
        })?;
        in_tree[v] = true;
        edges.push((p.min(v), p.max(v)));
        current = v;
    }
    Ok(edges)
}

/// Maximum spanning tree of a complete graph given a symmetric weight matrix.
pub fn maximum_spanning_tree_dense(weights: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    maximum_spanning_tree(weights.len(), |i, j| Some(weights[i][j]), |i, j| (i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_example() {
        let w = vec![
            vec![0.0, 0.9, 0.5],
            vec![0.9, 0.0, 0.1],
            vec![0.5, 0.1, 0.0],
        ];
        let mut e = maximum_spanning_tree_dense(&w).unwrap();
        e.sort();
        assert_eq!(e, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn two_nodes_and_singleton() {
        assert_eq!(maximum_spanning_tree_dense(&[vec![0.0, 0.2], vec![0.2, 0.0]]).unwrap(), vec![(0, 1)]);
        assert!(maximum_spanning_tree_dense(&[vec![0.0]]).unwrap().is_empty());
    }

    #[test]
    fn ties_prefer_smaller_key() {
        let w = vec![vec![0.5; 4]; 4];
        let mut e = maximum_spanning_tree_dense(&w).unwrap();
        e.sort();
        assert_eq!(e, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn disconnected_graph_is_an_error() {
        let r = maximum_spanning_tree(4, |i, j| if (i, j) == (0, 1) || (i, j) == (2, 3) { Some(1.0) } else { None }, |i, j| (i, j));
        assert!(matches!(r, Err(Error::Structural(_))));
    }
}
