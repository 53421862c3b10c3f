//! Bipartite matching (Kuhn, lowest-index augmenting paths) and integer max-flow
//! (Edmonds–Karp).

use std::collections::VecDeque;

/// Maximum matching; `adj[u]` lists right vertices in preference order.
/// Returns the partner of each left vertex.
pub fn kuhn(n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut match_left: Vec<Option<usize>> = vec![None; adj.len()];
    let mut match_right: Vec<Option<usize>> = vec![None; n_right];
    let mut seen = vec![usize::MAX; n_right];
    for root in 0..adj.len() {
        augment(root, adj, &mut match_left, &mut match_right, &mut seen);
    }
    match_left
}

/// Iterative DFS for an augmenting path from `root`, trying right vertices in
/// adjacency order.
fn augment(
    root: usize,
    adj: &[Vec<usize>],
    match_left: &mut [Option<usize>],
    match_right: &mut [Option<usize>],
    seen: &mut [usize],
) -> bool {
    // stack of (left vertex, next adjacency position, right vertex used to reach it)
    let mut stack: Vec<(usize, usize, Option<usize>)> = vec![(root, 0, None)];
    while let Some(&mut (u, ref mut pos, _)) = stack.last_mut() {
        if *pos >= adj[u].len() {
            stack.pop();
            continue;
        }
        let v = adj[u][*pos];
        *pos += 1;
        if seen[v] == root {
            continue;
        }
        seen[v] = root;
        match match_right[v] {
            None => {
                // flip the path
                let mut right = v;
                for &(x, _, via) in stack.iter().rev() {
                    let prev = match_left[x];
                    match_left[x] = Some(right);
                    match_right[right] = Some(x);
                    match via {
                        Some(_) => right = prev.expect("interior vertex is matched"),
                        None => break,
                    }
                }
                return true;
            }
            Some(w) => stack.push((w, 0, Some(v))),
        }
    }
    false
}

/// Left vertices reachable from `root` by alternating paths, and the right
/// vertices they see. With `root` unmatched in a maximum matching, the right
/// set is smaller than the left set by exactly one.
pub fn alternating_reach(
    root: usize,
    n_right: usize,
    adj: &[Vec<usize>],
    match_left: &[Option<usize>],
) -> (Vec<usize>, Vec<usize>) {
    let mut match_right = vec![None; n_right];
    for (u, m) in match_left.iter().enumerate() {
        if let Some(v) = m {
            match_right[*v] = Some(u);
        }
    }
    let mut left_seen = vec![false; adj.len()];
    let mut right_seen = vec![false; n_right];
    let mut queue = VecDeque::from([root]);
    left_seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !right_seen[v] {
                right_seen[v] = true;
                if let Some(w) = match_right[v] {
                    if !left_seen[w] {
                        left_seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
    }
    let collect = |s: &[bool]| {
        s.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect::<Vec<_>>()
    };
    (collect(&left_seen), collect(&right_seen))
}

pub struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            head: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    /// Adds an arc and returns its id.
    pub fn add_edge(&mut self, u: usize, v: usize, c: i64) -> usize {
        let id = self.to.len();
        self.head[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    /// Flow currently on arc `id`.
    pub fn flow(&self, id: usize) -> i64 {
        self.cap[id + 1]
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.head.len();
        let mut total = 0;
        loop {
            let mut prev: Vec<Option<usize>> = vec![None; n];
            let mut visited = vec![false; n];
            visited[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if !visited[v] && self.cap[e] > 0 {
                        visited[v] = true;
                        prev[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if !visited[t] {
                return total;
            }
            let mut bottleneck = i64::MAX;
            let mut v = t;
            while let Some(e) = prev[v] {
                bottleneck = bottleneck.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while let Some(e) = prev[v] {
                self.cap[e] -= bottleneck;
                self.cap[e ^ 1] += bottleneck;
                v = self.to[e ^ 1];
            }
            total += bottleneck;
        }
    }
}
