//! Small directed-graph helpers over dense adjacency predicates.

use std::collections::VecDeque;

/// Strongly connected components, numbered in order of their smallest node.
pub fn strongly_connected_components(n: usize, adj: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    // Kosaraju with explicit stacks; finish order from the forward pass.
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            let mut pushed = false;
            while *next < n {
                let u = *next;
                *next += 1;
                if !visited[u] && adj(v, u) {
                    visited[u] = true;
                    stack.push((u, 0));
                    pushed = true;
                    break;
                }
            }
            if !pushed {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut raw = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = raw;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if comp[u] == usize::MAX && adj(u, v) {
                    comp[u] = raw;
                    stack.push(u);
                }
            }
        }
        raw += 1;
    }
    // Renumber by smallest member.
    let mut remap = vec![usize::MAX; raw];
    let mut next = 0;
    for v in 0..n {
        if remap[comp[v]] == usize::MAX {
            remap[comp[v]] = next;
            next += 1;
        }
    }
    comp.iter().map(|&c| remap[c]).collect()
}

pub fn component_count(comp: &[usize]) -> usize {
    comp.iter().copied().max().map_or(0, |m| m + 1)
}

pub fn is_strongly_connected(n: usize, adj: impl Fn(usize, usize) -> bool) -> bool {
    n == 0 || component_count(&strongly_connected_components(n, adj)) == 1
}

/// Members of a closed (no outgoing edge) component, if the graph is not
/// strongly connected. Picks the closed component with the smallest node.
pub fn closed_class(n: usize, adj: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    let comp = strongly_connected_components(n, &adj);
    let k = component_count(&comp);
    if k <= 1 {
        return None;
    }
    let mut has_exit = vec![false; k];
    for v in 0..n {
        for u in 0..n {
            if comp[v] != comp[u] && adj(v, u) {
                has_exit[comp[v]] = true;
            }
        }
    }
    let c = (0..k).find(|&c| !has_exit[c]).unwrap_or(0);
    Some((0..n).filter(|&v| comp[v] == c).collect())
}

/// Shortest path by hop count from `from` to `to`, ties broken by visiting
/// neighbours in increasing index order. Returns the node sequence.
pub fn shortest_path(
    n: usize,
    from: usize,
    to: usize,
    adj: impl Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for u in 0..n {
            if !seen[u] && adj(v, u) {
                seen[u] = true;
                prev[u] = v;
                queue.push_back(u);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycles_are_two_components() {
        let edges = [(0, 1), (1, 0), (2, 3), (3, 2)];
        let adj = |a, b| edges.contains(&(a, b));
        let comp = strongly_connected_components(4, adj);
        assert_eq!(comp, vec![0, 0, 1, 1]);
        assert!(!is_strongly_connected(4, adj));
    }

    #[test]
    fn closed_class_finds_sink() {
        // 0 -> 1 <-> 2: {1,2} is closed.
        let edges = [(0, 1), (1, 2), (2, 1)];
        let adj = |a, b| edges.contains(&(a, b));
        assert_eq!(closed_class(3, adj), Some(vec![1, 2]));
    }

    #[test]
    fn shortest_path_prefers_low_indices() {
        let edges = [(0, 1), (0, 2), (1, 3), (2, 3)];
        let adj = |a, b| edges.contains(&(a, b));
        assert_eq!(shortest_path(4, 0, 3, adj), Some(vec![0, 1, 3]));
        assert_eq!(shortest_path(4, 3, 0, adj), None);
    }
}
