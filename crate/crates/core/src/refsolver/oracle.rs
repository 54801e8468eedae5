//! From-scratch recomputation of tree statistics from recorded raw samples.
//!
//! Independent of the incremental update: every edge statistic is rebuilt
//! from the rewards sampled through it, every leaf value from its heuristic
//! samples, and node values bottom-up with a max-shifted log-sum-exp.

use super::tree::{SearchTree, ROOT};
use crate::soft::weighted_log_sum_exp;

#[derive(Clone, Debug, Default)]
pub struct Recomputed {
    pub node_n: Vec<u64>,
    pub node_w: Vec<f64>,
    pub node_v: Vec<f64>,
    pub edge_n: Vec<u64>,
    pub edge_r: Vec<f64>,
    pub edge_d: Vec<f64>,
}

/// Statistics rebuilt from the tree's recorder. Requires recording to have
/// been enabled for the whole search.
pub fn recompute(tree: &SearchTree) -> Option<Recomputed> {
    let rec = tree.recorder.as_ref()?;
    let eta = tree.params.eta;
    let gamma = tree.params.gamma;
    let mut out = Recomputed {
        node_n: vec![0; tree.nodes.len()],
        node_w: vec![0.0; tree.nodes.len()],
        node_v: vec![0.0; tree.nodes.len()],
        edge_n: vec![0; tree.edges.len()],
        edge_r: vec![0.0; tree.edges.len()],
        edge_d: vec![0.0; tree.edges.len()],
    };
    // Children are always created after their parents, so a reverse sweep
    // over node ids visits every subtree before its root.
    for id in (ROOT..tree.nodes.len()).rev() {
        let node = &tree.nodes[id];
        if let Some(values) = rec.leaf_values.get(&id) {
            let n = values.len();
            let v = values.iter().sum::<f64>() / n as f64;
            out.node_n[id] = n as u64;
            out.node_v[id] = v;
            out.node_w[id] = (eta * v).exp();
            continue;
        }
        let absorbed = rec.absorbed.get(&id).copied().unwrap_or(0);
        let mut weights = vec![absorbed as f64];
        let mut exponents = vec![0.0];
        let mut n_total = absorbed;
        for &e in &node.edges {
            let rewards = rec.edge_rewards.get(&e).map(Vec::as_slice).unwrap_or(&[]);
            let n_e = rewards.len();
            if n_e == 0 {
                continue;
            }
            let r = rewards.iter().sum::<f64>() / n_e as f64;
            let d = tree.edges[e]
                .children
                .iter()
                .map(|c| out.node_n[*c] as f64 * out.node_v[*c])
                .sum::<f64>()
                / n_e as f64;
            out.edge_n[e] = n_e as u64;
            out.edge_r[e] = r;
            out.edge_d[e] = d;
            let len = tree.edges[e].macro_action.len() as i32;
            weights.push(n_e as f64);
            exponents.push(eta * (r + gamma.powi(len) * d));
            n_total += n_e as u64;
        }
        out.node_n[id] = n_total;
        if n_total > 0 {
            let log_w = weighted_log_sum_exp(&weights, &exponents) - (n_total as f64).ln();
            out.node_w[id] = log_w.exp();
            out.node_v[id] = log_w / eta;
        }
    }
    Some(out)
}

/// Largest deviations between maintained and recomputed statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecomputeReport {
    pub nodes: usize,
    pub edges: usize,
    pub count_mismatches: usize,
    /// Relative deviation of `W`.
    pub max_w: f64,
    /// Deviations of `V`, `R̂`, `D̂`, relative to `max(|a|, |b|, 1)`.
    pub max_v: f64,
    pub max_r: f64,
    pub max_d: f64,
}

impl RecomputeReport {
    pub fn max_relative(&self) -> f64 {
        self.max_w.max(self.max_v).max(self.max_r).max(self.max_d)
    }
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Compares every visited node and edge with [`recompute`].
pub fn compare_with_recompute(tree: &SearchTree) -> Option<RecomputeReport> {
    let r = recompute(tree)?;
    let mut report = RecomputeReport::default();
    for (id, node) in tree.nodes.iter().enumerate() {
        if node.n == 0 {
            continue;
        }
        report.nodes += 1;
        if node.n != r.node_n[id] {
            report.count_mismatches += 1;
        }
        report.max_w = report.max_w.max(rel(node.w, r.node_w[id], f64::MIN_POSITIVE));
        report.max_v = report.max_v.max(rel(node.v, r.node_v[id], 1.0));
    }
    for (id, edge) in tree.edges.iter().enumerate() {
        if edge.n == 0 {
            continue;
        }
        report.edges += 1;
        let child_sum: u64 = edge.children.iter().map(|c| tree.nodes[*c].n).sum();
        if edge.n != r.edge_n[id] || edge.n != child_sum {
            report.count_mismatches += 1;
        }
        report.max_r = report.max_r.max(rel(edge.r_hat, r.edge_r[id], 1.0));
        report.max_d = report.max_d.max(rel(edge.d_hat, r.edge_d[id], 1.0));
    }
    Some(report)
}
