//! HDBSCAN: density-based hierarchical clustering with excess-of-mass
//! cluster selection.
//!
//! Core distance of a point is the distance to its `min_cluster_size`-th
//! nearest point, counting the point itself. The minimum spanning tree over
//! mutual-reachability distances is built with Prim's algorithm; pairwise
//! distances are recomputed on the fly so memory stays linear in `n`.
//! The root of the condensed tree is never selected, except that a point set
//! with zero diameter is returned as one cluster.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HdbscanFit {
    /// Cluster index per point, `None` for noise.
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn fit(data: &[f64], dim: usize, min_cluster_size: usize) -> Result<HdbscanFit> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::invalid("HDBSCAN input is not a whole number of rows"));
    }
    let n = data.len() / dim;
    if min_cluster_size < 2 {
        return Err(Error::invalid("min_cluster_size must be at least 2"));
    }
    if n < min_cluster_size {
        return Err(Error::invalid(format!(
            "{n} points is fewer than min_cluster_size {min_cluster_size}"
        )));
    }
    let core = core_distances(data, dim, min_cluster_size);
    let mst = prim_mst(data, dim, &core);
    let max_w = mst.iter().map(|e| e.2).fold(0.0, f64::max);
    if max_w == 0.0 {
        return Ok(HdbscanFit {
            labels: vec![Some(0); n],
            n_clusters: 1,
        });
    }
    let dendrogram = single_linkage(n, mst);
    let condensed = condense(&dendrogram, n, min_cluster_size, max_w * 1e-12);
    let selected = select_eom(&condensed, n);
    Ok(label_points(&condensed, n, &selected))
}

fn core_distances(data: &[f64], dim: usize, k: usize) -> Vec<f64> {
    let n = data.len() / dim;
    let mut buf = vec![0.0; n];
    (0..n)
        .map(|i| {
            let xi = &data[i * dim..(i + 1) * dim];
            for (j, d) in buf.iter_mut().enumerate() {
                *d = dist(xi, &data[j * dim..(j + 1) * dim]);
            }
            let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

/// Edges `(a, b, weight)` of the mutual-reachability MST, in discovery order.
fn prim_mst(data: &[f64], dim: usize, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = core.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    for _ in 1..n {
        in_tree[current] = true;
        let xc = &data[current * dim..(current + 1) * dim];
        let cc = core[current];
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = dist(xc, &data[j * dim..(j + 1) * dim]).max(cc).max(core[j]);
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
            if best[j] < next_w || next == usize::MAX {
                next_w = best[j];
                next = j;
            }
        }
        edges.push((from[next], next, best[next]));
        current = next;
    }
    edges
}

/// A merge in the single-linkage dendrogram. Node ids below `n` are points;
/// merge `i` creates node `n + i`.
#[derive(Debug, Clone, Copy)]
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

fn single_linkage(n: usize, mut edges: Vec<(usize, usize, f64)>) -> Vec<Merge> {
    edges.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for (a, b, w) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        let node = n + merges.len();
        let s = size[ra] + size[rb];
        parent[ra] = node;
        parent[rb] = node;
        size[node] = s;
        merges.push(Merge {
            left: ra,
            right: rb,
            distance: w,
            size: s,
        });
    }
    merges
}

/// Edge of the condensed tree: `child` is a point (< n) or a cluster (>= n).
#[derive(Debug, Clone, Copy)]
struct CondensedEdge {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn condense(merges: &[Merge], n: usize, min_size: usize, dist_floor: f64) -> Vec<CondensedEdge> {
    let node_size = |x: usize| if x < n { 1 } else { merges[x - n].size };
    let lambda_of = |d: f64| 1.0 / d.max(dist_floor);
    let root = n + merges.len() - 1;
    let mut relabel = vec![0usize; root + 1];
    relabel[root] = n;
    let mut next_label = n + 1;
    let mut out = Vec::new();

    let collect_points = |start: usize, out: &mut Vec<usize>| {
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let m = merges[x - n];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
    };

    // Breadth-first over dendrogram nodes that still belong to a cluster.
    let mut queue = std::collections::VecDeque::from([root]);
    let mut points = Vec::new();
    while let Some(node) = queue.pop_front() {
        if node < n {
            continue;
        }
        let m = merges[node - n];
        let lambda = lambda_of(m.distance);
        let parent = relabel[node];
        let (ls, rs) = (node_size(m.left), node_size(m.right));
        match (ls >= min_size, rs >= min_size) {
            (true, true) => {
                for (child, size) in [(m.left, ls), (m.right, rs)] {
                    relabel[child] = next_label;
                    out.push(CondensedEdge {
                        parent,
                        child: next_label,
                        lambda,
                        size,
                    });
                    next_label += 1;
                    queue.push_back(child);
                }
            }
            (big_left, big_right) => {
                for (child, big) in [(m.left, big_left), (m.right, big_right)] {
                    if big {
                        relabel[child] = parent;
                        queue.push_back(child);
                    } else {
                        points.clear();
                        collect_points(child, &mut points);
                        for &p in &points {
                            out.push(CondensedEdge {
                                parent,
                                child: p,
                                lambda,
                                size: 1,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Excess-of-mass selection over non-root clusters. Returns selected
/// condensed cluster ids in ascending order.
fn select_eom(tree: &[CondensedEdge], n: usize) -> Vec<usize> {
    let max_label = tree.iter().map(|e| e.parent.max(e.child)).max().unwrap_or(n).max(n);
    let n_clusters = max_label - n + 1;
    let mut birth = vec![0.0; n_clusters];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n_clusters];
    for e in tree.iter().filter(|e| e.child >= n) {
        birth[e.child - n] = e.lambda;
        children[e.parent - n].push(e.child);
    }
    let mut stability = vec![0.0; n_clusters];
    for e in tree {
        let p = e.parent - n;
        stability[p] += (e.lambda - birth[p]) * e.size as f64;
    }

    let mut is_selected = vec![true; n_clusters];
    is_selected[0] = false;
    // Children always carry larger ids than their parent.
    for c in (1..n_clusters).rev() {
        let subtree: f64 = children[c].iter().map(|&ch| stability[ch - n]).sum();
        if subtree > stability[c] {
            is_selected[c] = false;
            stability[c] = subtree;
        } else {
            let mut stack: Vec<usize> = children[c].clone();
            while let Some(d) = stack.pop() {
                is_selected[d - n] = false;
                stack.extend(&children[d - n]);
            }
        }
    }
    (1..n_clusters).filter(|&c| is_selected[c]).map(|c| c + n).collect()
}

fn label_points(tree: &[CondensedEdge], n: usize, selected: &[usize]) -> HdbscanFit {
    let max_label = tree.iter().map(|e| e.parent.max(e.child)).max().unwrap_or(n).max(n);
    let mut parent_of = vec![usize::MAX; max_label + 1];
    for e in tree {
        parent_of[e.child] = e.parent;
    }
    let mut cluster_index = vec![None; max_label + 1];
    for (i, &c) in selected.iter().enumerate() {
        cluster_index[c] = Some(i);
    }
    let labels = (0..n)
        .map(|p| {
            let mut node = parent_of[p];
            while node != usize::MAX {
                if let Some(i) = cluster_index[node] {
                    return Some(i);
                }
                node = parent_of[node];
            }
            None
        })
        .collect();
    HdbscanFit {
        labels,
        n_clusters: selected.len(),
    }
}
