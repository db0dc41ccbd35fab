use serde::{Deserialize, Serialize};

use super::dataset::CutpointGrid;

pub type NodeId = usize;

/// `x[feature] <= cutpoint` routes left, otherwise right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub cutpoint: f64,
}

impl SplitRule {
    pub fn new(feature: usize, cutpoint: f64) -> Self {
        Self { feature, cutpoint }
    }

    #[inline]
    pub fn goes_left(&self, value: f64) -> bool {
        value <= self.cutpoint
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf {
        value: f64,
    },
    Internal {
        rule: SplitRule,
        left: NodeId,
        right: NodeId,
        /// Acceptance probability of the move that created or last changed
        /// this rule.
        accept_prob: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub depth: u32,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// Binary regression tree in an indexed arena. Slots released by pruning
/// are recycled, so ids are only meaningful while the node is reachable.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    free: Vec<NodeId>,
    root: NodeId,
}

impl DecisionTree {
    pub fn new(value: f64) -> Self {
        Self {
            nodes: vec![Node {
                kind: NodeKind::Leaf { value },
                parent: None,
                depth: 0,
            }],
            free: Vec::new(),
            root: 0,
        }
    }

    pub fn stump(rule: SplitRule, left: f64, right: f64) -> Self {
        let mut t = Self::new(0.0);
        t.grow(0, rule, left, right, None);
        t
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Upper bound on node ids, for callers that index side tables by id.
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id].is_leaf()
    }

    pub fn depth(&self, id: NodeId) -> u32 {
        self.nodes[id].depth
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> Option<(NodeId, NodeId)> {
        match self.nodes[id].kind {
            NodeKind::Internal { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn rule(&self, id: NodeId) -> Option<SplitRule> {
        match self.nodes[id].kind {
            NodeKind::Internal { rule, .. } => Some(rule),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn accept_prob(&self, id: NodeId) -> Option<f64> {
        match self.nodes[id].kind {
            NodeKind::Internal { accept_prob, .. } => accept_prob,
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn leaf_value(&self, id: NodeId) -> Option<f64> {
        match self.nodes[id].kind {
            NodeKind::Leaf { value } => Some(value),
            NodeKind::Internal { .. } => None,
        }
    }

    pub fn set_leaf_value(&mut self, id: NodeId, v: f64) {
        match &mut self.nodes[id].kind {
            NodeKind::Leaf { value } => *value = v,
            NodeKind::Internal { .. } => panic!("node {id} is not a leaf"),
        }
    }

    /// Routes an observation given by a feature accessor to its leaf.
    #[inline]
    pub fn route_with(&self, value_of: impl Fn(usize) -> f64) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Leaf { .. } => return id,
                NodeKind::Internal {
                    rule, left, right, ..
                } => {
                    id = if rule.goes_left(value_of(rule.feature)) {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn route(&self, x: &[f64]) -> NodeId {
        self.route_with(|j| x[j])
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let leaf = self.route(x);
        self.leaf_value(leaf).expect("routing ends at a leaf")
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        if let Some(id) = self.free.pop() {
            self.nodes[id] = node;
            id
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        }
    }

    /// Turns `leaf` into an internal node with two fresh leaves.
    pub fn grow(
        &mut self,
        leaf: NodeId,
        rule: SplitRule,
        left_value: f64,
        right_value: f64,
        accept_prob: Option<f64>,
    ) -> (NodeId, NodeId) {
        assert!(self.is_leaf(leaf), "grow on internal node {leaf}");
        let depth = self.nodes[leaf].depth + 1;
        let left = self.alloc(Node {
            kind: NodeKind::Leaf { value: left_value },
            parent: Some(leaf),
            depth,
        });
        let right = self.alloc(Node {
            kind: NodeKind::Leaf { value: right_value },
            parent: Some(leaf),
            depth,
        });
        self.nodes[leaf].kind = NodeKind::Internal {
            rule,
            left,
            right,
            accept_prob,
        };
        (left, right)
    }

    /// Collapses an internal node whose children are both leaves.
    pub fn prune(&mut self, id: NodeId, value: f64) {
        let (left, right) = self.children(id).expect("prune on a leaf");
        assert!(
            self.is_leaf(left) && self.is_leaf(right),
            "prune on node {id} with internal children"
        );
        self.free.push(left);
        self.free.push(right);
        self.nodes[id].kind = NodeKind::Leaf { value };
    }

    pub fn set_rule(&mut self, id: NodeId, new_rule: SplitRule, prob: Option<f64>) {
        match &mut self.nodes[id].kind {
            NodeKind::Internal {
                rule, accept_prob, ..
            } => {
                *rule = new_rule;
                *accept_prob = prob;
            }
            NodeKind::Leaf { .. } => panic!("set_rule on leaf {id}"),
        }
    }

    fn reachable(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some((l, r)) = self.children(id) {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        self.reachable()
            .into_iter()
            .filter(|&id| self.is_leaf(id))
            .collect()
    }

    pub fn internal_nodes(&self) -> Vec<NodeId> {
        self.reachable()
            .into_iter()
            .filter(|&id| !self.is_leaf(id))
            .collect()
    }

    /// Internal nodes whose two children are leaves (DEATH/CHANGE targets).
    pub fn nogs(&self) -> Vec<NodeId> {
        self.internal_nodes()
            .into_iter()
            .filter(|&id| self.is_nog(id))
            .collect()
    }

    pub fn is_nog(&self, id: NodeId) -> bool {
        match self.children(id) {
            Some((l, r)) => self.is_leaf(l) && self.is_leaf(r),
            None => false,
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }

    pub fn internal_count(&self) -> usize {
        self.internal_nodes().len()
    }

    /// Region `(lower, upper]` on `feature` implied by the ancestors' rules.
    pub fn region(&self, id: NodeId, feature: usize) -> (f64, f64) {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        let mut child = id;
        while let Some(parent) = self.nodes[child].parent {
            if let NodeKind::Internal { rule, left, .. } = &self.nodes[parent].kind {
                if rule.feature == feature {
                    if *left == child {
                        upper = upper.min(rule.cutpoint);
                    } else {
                        lower = lower.max(rule.cutpoint);
                    }
                }
            }
            child = parent;
        }
        (lower, upper)
    }

    /// Applies `v -> scale * v + shift` to every leaf value.
    pub fn map_leaves(&mut self, scale: f64, shift: f64) {
        for id in self.leaves() {
            if let NodeKind::Leaf { value } = &mut self.nodes[id].kind {
                *value = scale * *value + shift;
            }
        }
    }

    /// Structural check: one root, binary internals, consistent parents and
    /// depths, `leaves = internals + 1`, and (optionally) every cutpoint on
    /// the grid.
    pub fn check(&self, grid: Option<&CutpointGrid>) -> std::result::Result<(), String> {
        if self.nodes[self.root].parent.is_some() {
            return Err("root has a parent".into());
        }
        let ids = self.reachable();
        let mut seen = vec![false; self.nodes.len()];
        let mut internal = 0usize;
        let mut leaves = 0usize;
        for &id in &ids {
            if std::mem::replace(&mut seen[id], true) {
                return Err(format!("node {id} reachable twice"));
            }
            match &self.nodes[id].kind {
                NodeKind::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(format!("leaf {id} has non-finite value"));
                    }
                    leaves += 1;
                }
                NodeKind::Internal {
                    rule, left, right, ..
                } => {
                    internal += 1;
                    for &c in [left, right] {
                        if self.nodes[c].parent != Some(id) {
                            return Err(format!("child {c} of {id} has wrong parent"));
                        }
                        if self.nodes[c].depth != self.nodes[id].depth + 1 {
                            return Err(format!("child {c} of {id} has wrong depth"));
                        }
                    }
                    if let Some(g) = grid {
                        if rule.feature >= g.p() || !g.contains(rule.feature, rule.cutpoint) {
                            return Err(format!("node {id} cutpoint not on grid"));
                        }
                    }
                }
            }
        }
        if leaves != internal + 1 {
            return Err(format!("{leaves} leaves but {internal} internal nodes"));
        }
        Ok(())
    }
}
