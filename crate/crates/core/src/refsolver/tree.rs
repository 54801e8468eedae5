//! Arena-allocated belief tree with the maintained statistics
//! `N(h), W(h), V(h)` on nodes and `N(hā), R̂(hā), D̂(hā)` on action edges.

use std::collections::HashMap;

use serde::Serialize;

use crate::belief::ParticleBelief;
use crate::model::{MacroAction, MacroObservation, SolverParams, State};
use crate::reference::NodeCache;

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Clone, Debug)]
pub struct Node {
    pub depth: usize,
    pub n: u64,
    /// Maintained expectation `W(h)`; for leaves `exp(η·V)`.
    pub w: f64,
    pub v: f64,
    /// Visits that sampled a terminal state (each contributes `exp(0)` to `N·W`).
    pub absorbed: u64,
    pub particles: ParticleBelief,
    pub edges: Vec<EdgeId>,
    pub parent: Option<EdgeId>,
    pub(crate) lookup: HashMap<MacroAction, EdgeId>,
    pub(crate) cache: NodeCache,
}

impl Node {
    pub(crate) fn new(depth: usize, particles: ParticleBelief, parent: Option<EdgeId>) -> Self {
        Node {
            depth,
            n: 0,
            w: 0.0,
            v: 0.0,
            absorbed: 0,
            particles,
            edges: Vec::new(),
            parent,
            lookup: HashMap::new(),
            cache: NodeCache::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub macro_action: MacroAction,
    /// Creation order among the parent's edges; the tie-break id.
    pub ordinal: usize,
    pub parent: NodeId,
    pub n: u64,
    pub r_hat: f64,
    pub d_hat: f64,
    pub children: Vec<NodeId>,
    /// Macro-observation key of each entry of `children`.
    pub child_keys: Vec<MacroObservation>,
    pub(crate) lookup: HashMap<MacroObservation, NodeId>,
}

impl Edge {
    /// `R̂ + γ^{|ā|}·D̂`.
    pub fn q(&self, gamma: f64) -> f64 {
        self.r_hat + gamma.powi(self.macro_action.len() as i32) * self.d_hat
    }

    pub fn child(&self, key: &MacroObservation) -> Option<NodeId> {
        self.lookup.get(key).copied()
    }
}

/// Counters reported by a planning invocation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TreeStats {
    pub simulations: u64,
    pub sbmp_calls: u64,
    pub sbmp_failures: u64,
    /// Simulations that gave up on the reference and used a random primitive.
    pub fallbacks: u64,
    /// Weight-statistic recomputations triggered by the numerical guard.
    pub guard_recomputes: u64,
}

/// Raw samples kept alongside the maintained statistics so they can be
/// recomputed from scratch.
#[derive(Clone, Debug, Default)]
pub struct Recorder {
    pub edge_rewards: HashMap<EdgeId, Vec<f64>>,
    pub leaf_values: HashMap<NodeId, Vec<f64>>,
    pub absorbed: HashMap<NodeId, u64>,
}

#[derive(Clone, Debug)]
pub struct SearchTree {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub params: SolverParams,
    pub stats: TreeStats,
    pub recorder: Option<Recorder>,
}

pub const ROOT: NodeId = 0;

impl SearchTree {
    pub fn new(root_belief: ParticleBelief, params: SolverParams, record: bool) -> Self {
        SearchTree {
            nodes: vec![Node::new(0, root_belief, None)],
            edges: Vec::new(),
            params,
            stats: TreeStats::default(),
            recorder: record.then(Recorder::default),
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[ROOT]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn root_edges(&self) -> impl Iterator<Item = &Edge> + '_ {
        self.root().edges.iter().map(|e| &self.edges[*e])
    }

    pub(crate) fn edge_for(&mut self, node: NodeId, macro_action: &MacroAction) -> EdgeId {
        if let Some(e) = self.nodes[node].lookup.get(macro_action) {
            return *e;
        }
        let id = self.edges.len();
        let ordinal = self.nodes[node].edges.len();
        self.edges.push(Edge {
            macro_action: macro_action.clone(),
            ordinal,
            parent: node,
            n: 0,
            r_hat: 0.0,
            d_hat: 0.0,
            children: Vec::new(),
            child_keys: Vec::new(),
            lookup: HashMap::new(),
        });
        let n = &mut self.nodes[node];
        n.edges.push(id);
        n.lookup.insert(macro_action.clone(), id);
        id
    }

    /// Child `hāō`, created on first use; `state` joins its particles.
    pub(crate) fn child_for(&mut self, edge: EdgeId, key: MacroObservation, state: State) -> NodeId {
        if let Some(c) = self.edges[edge].lookup.get(&key).copied() {
            self.nodes[c].particles.push(state);
            return c;
        }
        let depth = self.nodes[self.edges[edge].parent].depth + 1;
        let id = self.nodes.len();
        let belief = ParticleBelief::uniform(vec![state]).expect("one particle");
        self.nodes.push(Node::new(depth, belief, Some(edge)));
        let e = &mut self.edges[edge];
        e.children.push(id);
        e.child_keys.push(key.clone());
        e.lookup.insert(key, id);
        id
    }

    /// Copies the subtree below `hāō` into a new tree rooted there, with
    /// `belief` replacing the root particles. Depths shift up by one.
    pub fn reroot(&self, edge: EdgeId, key: &MacroObservation, belief: ParticleBelief) -> Option<SearchTree> {
        let old_root = self.edges[edge].child(key)?;
        let mut tree = SearchTree::new(belief, self.params.clone(), false);
        let mut node_map: HashMap<NodeId, NodeId> = HashMap::new();
        node_map.insert(old_root, ROOT);
        {
            let src = &self.nodes[old_root];
            let dst = &mut tree.nodes[ROOT];
            dst.n = src.n;
            dst.w = src.w;
            dst.v = src.v;
            dst.absorbed = src.absorbed;
        }
        let mut stack = vec![old_root];
        while let Some(old) = stack.pop() {
            let new = node_map[&old];
            for &e in &self.nodes[old].edges {
                let src = &self.edges[e];
                let ne = tree.edge_for(new, &src.macro_action);
                {
                    let d = &mut tree.edges[ne];
                    d.n = src.n;
                    d.r_hat = src.r_hat;
                    d.d_hat = src.d_hat;
                }
                for (k, &c) in src.child_keys.iter().zip(&src.children) {
                    let child = &self.nodes[c];
                    let nc = tree.nodes.len();
                    let mut node = Node::new(child.depth - 1, child.particles.clone(), Some(ne));
                    node.n = child.n;
                    node.w = child.w;
                    node.v = child.v;
                    node.absorbed = child.absorbed;
                    tree.nodes.push(node);
                    tree.edges[ne].children.push(nc);
                    tree.edges[ne].child_keys.push(k.clone());
                    tree.edges[ne].lookup.insert(k.clone(), nc);
                    node_map.insert(c, nc);
                    stack.push(c);
                }
            }
        }
        Some(tree)
    }

    /// JSON dump of every node and edge with its statistics.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, n)| {
                serde_json::json!({
                    "id": id,
                    "depth": n.depth,
                    "parent_edge": n.parent,
                    "N": n.n,
                    "W": n.w,
                    "V": n.v,
                    "absorbed": n.absorbed,
                    "particles": n.particles.len(),
                    "edges": n.edges,
                })
            })
            .collect();
        let edges: Vec<serde_json::Value> = self
            .edges
            .iter()
            .enumerate()
            .map(|(id, e)| {
                let children: Vec<(&MacroObservation, NodeId)> =
                    e.child_keys.iter().zip(e.children.iter().copied()).collect();
                serde_json::json!({
                    "id": id,
                    "parent": e.parent,
                    "ordinal": e.ordinal,
                    "macro": e.macro_action,
                    "N": e.n,
                    "R_hat": e.r_hat,
                    "D_hat": e.d_hat,
                    "children": children,
                })
            })
            .collect();
        serde_json::json!({
            "params": self.params,
            "stats": self.stats,
            "nodes": nodes,
            "edges": edges,
        })
    }
}
