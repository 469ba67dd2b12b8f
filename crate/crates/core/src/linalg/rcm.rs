//! Reverse Cuthill–McKee node ordering.
//!
//! Parsed meshes may carry arbitrary node numbering; relabelling with
//! RCM keeps the assembled operators narrowly banded so the direct band
//! solvers stay efficient. The algorithm is deterministic: ties are broken
//! by ascending original index, so identical inputs yield identical
//! orderings (required for bit-identical artifact reruns).

/// Compute an RCM permutation of an undirected graph given as adjacency
/// lists. Returns `perm` with `perm[new] = old`. Disconnected components
/// are processed in ascending order of their minimum-degree seed.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        // Seed: unvisited vertex of minimum degree (ascending index tie-break),
        // pushed towards the periphery by two BFS sweeps.
        let mut seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex exists");
        for _ in 0..2 {
            if let Some(far) = bfs_farthest(adj, seed, &visited) {
                seed = far;
            }
        }

        // Cuthill–McKee BFS from the seed, neighbours in ascending degree.
        let start = order.len();
        visited[seed] = true;
        order.push(seed);
        let mut head = start;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nbrs.sort_unstable_by_key(|&u| (degree[u], u));
            for u in nbrs {
                if !visited[u] {
                    visited[u] = true;
                    order.push(u);
                }
            }
        }
        order[start..].reverse();
    }
    order
}

/// Farthest vertex from `start` among unvisited vertices (last BFS level,
/// minimum degree within it), or `None` if `start` is isolated.
fn bfs_farthest(adj: &[Vec<usize>], start: usize, visited: &[bool]) -> Option<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut frontier = vec![start];
    let mut last_level = vec![start];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in &adj[v] {
                if !seen[u] && !visited[u] {
                    seen[u] = true;
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        last_level = next.clone();
        frontier = next;
    }
    last_level
        .into_iter()
        .min_by_key(|&v| (adj[v].len(), v))
        .filter(|&v| v != start)
}
