//! Regression trees grown level by level with exact greedy splits.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::rng::Rng;

/// Nested node as stored in checkpoints. Leaves carry only `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<Box<TreeNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<Box<TreeNode>>,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize, value: f64 },
}

/// Flat tree; node 0 is the root. Rows with `x[feature] <= threshold` go
/// left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeNode", try_from = "TreeNode")]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub(crate) fn predict_at(&self, x: ArrayView2<f64>, row: usize) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[[row, feature]] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Largest feature index used by a split, if any.
    pub(crate) fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

impl From<Tree> for TreeNode {
    fn from(t: Tree) -> Self {
        fn build(nodes: &[Node], i: usize) -> TreeNode {
            match nodes[i] {
                Node::Leaf { value } => TreeNode {
                    feature: None,
                    threshold: None,
                    left: None,
                    right: None,
                    value,
                },
                Node::Split { feature, threshold, left, right, value } => TreeNode {
                    feature: Some(feature),
                    threshold: Some(threshold),
                    left: Some(Box::new(build(nodes, left))),
                    right: Some(Box::new(build(nodes, right))),
                    value,
                },
            }
        }
        build(&t.nodes, 0)
    }
}

impl TryFrom<TreeNode> for Tree {
    type Error = crate::Error;

    fn try_from(root: TreeNode) -> crate::Result<Self> {
        // Breadth-first, children allocated in pairs: the builder's layout.
        let mut nodes = vec![Node::Leaf { value: root.value }];
        let mut queue = std::collections::VecDeque::from([(root, 0usize)]);
        while let Some((n, at)) = queue.pop_front() {
            match (n.feature, n.threshold, n.left, n.right) {
                (None, None, None, None) => {}
                (Some(feature), Some(threshold), Some(l), Some(r)) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: l.value });
                    nodes.push(Node::Leaf { value: r.value });
                    nodes[at] = Node::Split { feature, threshold, left, right: left + 1, value: n.value };
                    queue.push_back((*l, left));
                    queue.push_back((*r, left + 1));
                }
                _ => {
                    return Err(crate::Error::invalid(
                        "tree node must have either all of feature/threshold/left/right or none",
                    ))
                }
            }
        }
        Ok(Tree { nodes })
    }
}

/// Per-feature row orderings shared by every tree of an ensemble.
pub(crate) struct SortedColumns {
    order: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub(crate) fn new(x: ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let order = par::map_range(x.ncols(), |f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| x[[a as usize, f]].total_cmp(&x[[b as usize, f]]).then(a.cmp(&b)));
            idx
        });
        let values = order
            .iter()
            .enumerate()
            .map(|(f, idx)| idx.iter().map(|&r| x[[r as usize, f]]).collect())
            .collect();
        Self { order, values }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per node; `None` means all.
    pub max_features: Option<usize>,
}

const NO_NODE: u32 = u32::MAX;

struct Open {
    node: usize,
    weight: f64,
    mean: f64,
    sse: f64,
    features: Option<Vec<bool>>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    threshold: f64,
}

/// Grows one tree on rows with positive `weights` (bootstrap counts for a
/// forest, all ones for boosting). Split quality is the weighted
/// squared-error reduction; it is also added to `importance[feature]`.
pub(crate) fn grow_tree(
    x: ArrayView2<f64>,
    y: &[f64],
    weights: &[f64],
    sorted: &SortedColumns,
    params: GrowParams,
    mut rng: Option<&mut Rng>,
    importance: &mut [f64],
) -> Tree {
    let n_rows = x.nrows();
    let n_features = x.ncols();
    let msl = params.min_samples_leaf.max(1) as f64;
    let mut node_of = vec![NO_NODE; n_rows];
    let mut rows: Vec<usize> = Vec::new();
    for r in 0..n_rows {
        if weights[r] > 0.0 {
            node_of[r] = 0;
            rows.push(r);
        }
    }
    let root = node_stats(&rows, y, weights);
    let mut nodes = vec![Node::Leaf { value: root.1 }];
    let mut open = vec![Open {
        node: 0,
        weight: root.0,
        mean: root.1,
        sse: root.2,
        features: None,
    }];
    let mut depth = 0;
    while !open.is_empty() && params.max_depth.is_none_or(|d| depth < d) {
        // Only nodes that can still be split take part in the sweep.
        open.retain(|o| o.sse > 0.0 && o.weight >= 2.0 * msl);
        if open.is_empty() {
            break;
        }
        if let (Some(k), Some(rng)) = (params.max_features, rng.as_deref_mut()) {
            if k < n_features {
                for o in &mut open {
                    let mut mask = vec![false; n_features];
                    for f in sample(rng, n_features, k) {
                        mask[f] = true;
                    }
                    o.features = Some(mask);
                }
            }
        }
        let mut slot_of = vec![usize::MAX; nodes.len()];
        for (s, o) in open.iter().enumerate() {
            slot_of[o.node] = s;
        }
        let per_feature: Vec<Vec<Option<Candidate>>> = par::map_range(n_features, |f| {
            sweep_feature(f, y, weights, &sorted.order[f], &sorted.values[f], &node_of, &slot_of, &open, msl)
        });
        let mut best: Vec<Option<(usize, Candidate)>> = vec![None; open.len()];
        for (f, cands) in per_feature.iter().enumerate() {
            for (s, c) in cands.iter().enumerate() {
                if let Some(c) = c {
                    if best[s].is_none_or(|(_, b)| c.gain > b.gain) {
                        best[s] = Some((f, *c));
                    }
                }
            }
        }

        let mut children: Vec<(usize, usize, usize)> = Vec::new();
        let mut split_of = vec![None; open.len()];
        for (s, o) in open.iter().enumerate() {
            let Some((f, c)) = best[s] else { continue };
            // Gains at rounding level are noise, not structure.
            if !(c.gain > 1e-12 * o.sse) {
                continue;
            }
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { value: o.mean });
            nodes.push(Node::Leaf { value: o.mean });
            nodes[o.node] = Node::Split {
                feature: f,
                threshold: c.threshold,
                left,
                right,
                value: o.mean,
            };
            importance[f] += c.gain;
            split_of[s] = Some((f, c.threshold, left, right));
            children.push((s, left, right));
        }
        if children.is_empty() {
            break;
        }
        let mut child_rows: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); open.len()];
        for &r in &rows {
            let node = node_of[r];
            if node == NO_NODE {
                continue;
            }
            let s = slot_of[node as usize];
            if s == usize::MAX {
                node_of[r] = NO_NODE;
                continue;
            }
            match split_of[s] {
                Some((f, thr, l, rr)) => {
                    if x[[r, f]] <= thr {
                        node_of[r] = l as u32;
                        child_rows[s].0.push(r);
                    } else {
                        node_of[r] = rr as u32;
                        child_rows[s].1.push(r);
                    }
                }
                None => node_of[r] = NO_NODE,
            }
        }
        let mut next = Vec::with_capacity(children.len() * 2);
        for (s, left, right) in children {
            for (node, members) in [(left, &child_rows[s].0), (right, &child_rows[s].1)] {
                let (w, mean, sse) = node_stats(members, y, weights);
                nodes[node] = Node::Leaf { value: mean };
                next.push(Open {
                    node,
                    weight: w,
                    mean,
                    sse,
                    features: None,
                });
            }
        }
        open = next;
        depth += 1;
    }
    Tree { nodes }
}

/// Weighted count, mean and centred sum of squares of `rows`.
fn node_stats(rows: &[usize], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let weight: f64 = rows.iter().map(|&r| w[r]).sum();
    if weight <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let first = y[rows[0]];
    let shift: f64 = rows.iter().map(|&r| w[r] * (y[r] - first)).sum::<f64>() / weight;
    let mean = first + shift;
    let sse = rows.iter().map(|&r| w[r] * (y[r] - mean).powi(2)).sum();
    (weight, mean, sse)
}

#[allow(clippy::too_many_arguments)]
fn sweep_feature(
    f: usize,
    y: &[f64],
    weights: &[f64],
    order: &[u32],
    sorted_values: &[f64],
    node_of: &[u32],
    slot_of: &[usize],
    open: &[Open],
    msl: f64,
) -> Vec<Option<Candidate>> {
    struct Acc {
        w: f64,
        s: f64,
        last: f64,
        best: Option<Candidate>,
    }
    let mut acc: Vec<Acc> = open
        .iter()
        .map(|_| Acc {
            w: 0.0,
            s: 0.0,
            last: f64::NAN,
            best: None,
        })
        .collect();
    let active: Vec<bool> = open
        .iter()
        .map(|o| o.features.as_ref().is_none_or(|m| m[f]))
        .collect();
    if !active.iter().any(|&a| a) {
        return vec![None; open.len()];
    }
    for (&r, &v) in order.iter().zip(sorted_values) {
        let r = r as usize;
        let node = node_of[r];
        if node == NO_NODE {
            continue;
        }
        let s = slot_of[node as usize];
        if s == usize::MAX || !active[s] {
            continue;
        }
        let o = &open[s];
        let a = &mut acc[s];
        if a.w > 0.0 && v > a.last {
            let wl = a.w;
            let wr = o.weight - wl;
            if wl >= msl && wr >= msl {
                // Sums are of y - node mean, so the right sum is -a.s.
                let gain = a.s * a.s / wl + a.s * a.s / wr;
                if a.best.is_none_or(|b| gain > b.gain) {
                    let mid = a.last + (v - a.last) / 2.0;
                    let threshold = if mid < v { mid } else { a.last };
                    a.best = Some(Candidate { gain, threshold });
                }
            }
        }
        a.w += weights[r];
        a.s += weights[r] * (y[r] - o.mean);
        a.last = v;
    }
    acc.into_iter().map(|a| a.best).collect()
}
