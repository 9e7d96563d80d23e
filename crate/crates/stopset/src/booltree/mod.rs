//! The mutable decoding-tree engine.
//!
//! A tree is grown leaf by leaf from the Tanner graph, rooted at one bit.
//! Variable nodes are AND gates, check nodes are OR gates; an active variable
//! node also takes its free observation as an input.
//!
//! Positions that have not been expanded yet are evaluated as boundary
//! slots: a slot for variable v contributes the observation y_v itself
//! (one if v is punctured, zero if shortened). This equals the value the
//! tree would take after expanding the slot one step and hardwiring
//! everything below it to one, so it stays an upper bound on the true
//! decoder while being strictly tighter than hardwiring the whole slot.
//! The bound arithmetic (upper-bound evaluation) instead treats open slots
//! as constant one, matching the finalize step that materializes them as
//! hardwired-one leaves. Growth only ever lowers the function pointwise,
//! and the two rewrite rules (pivoting on a shared observation, pruning
//! below a zero) never change it at all.
//!
//! Structural invariant maintained throughout: for every pair of active nodes
//! sharing an observation, their youngest common ancestor is a check node.
//! All bound arithmetic relies on it.

mod grow;
#[cfg(test)]
mod tests;

pub use grow::GrowOutcome;

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::tanner::SparseParityCheck;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("node budget {budget} too small (need at least {need})")]
    BudgetTooSmall { budget: usize, need: usize },
    #[error("node budget exceeded: operation needs {need} live nodes, budget {budget}")]
    BudgetExceeded { need: usize, budget: usize },
    #[error("tree is finalized")]
    Finalized,
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// Stable handle to a tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

/// Stable handle to a grow position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosId(pub(crate) u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Variable,
    Check,
}

/// Status of a variable node. Active nodes take the free observation of a
/// Tanner variable; inactive nodes are hardwired to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Active(usize),
    InactiveZero,
    InactiveOne,
}

impl VarStatus {
    pub fn obs(&self) -> Option<usize> {
        match self {
            VarStatus::Active(k) => Some(*k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub(crate) kind: NodeKind,
    /// Originating Tanner node index; `None` for auxiliary nodes created by
    /// pivoting.
    pub(crate) tanner_index: Option<usize>,
    pub(crate) status: VarStatus,
    pub(crate) parent: Option<NodeId>,
    pub(crate) children: Vec<NodeId>,
    pub(crate) depth: u32,
    /// Depth in the unpivoted decoding tree: pivot copies keep their source
    /// coordinate, so the convergence cap applies to real decoder depth.
    pub(crate) logical_depth: u32,
    /// Number of active variable nodes on the root..self path, inclusive.
    pub(crate) act_depth: u32,
    /// Monotone creation stamp; used for the most-recently-added tie-break.
    pub(crate) birth: u64,
    /// Pending grow positions (check nodes only).
    pub(crate) pending: Vec<PosId>,
}

impl TreeNode {
    pub fn kind(&self) -> NodeKind {
        self.kind
    }
    pub fn tanner_index(&self) -> Option<usize> {
        self.tanner_index
    }
    pub fn status(&self) -> VarStatus {
        self.status
    }
    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }
    pub fn children(&self) -> &[NodeId] {
        &self.children
    }
    pub fn depth(&self) -> u32 {
        self.depth
    }
    pub fn is_auxiliary(&self) -> bool {
        self.tanner_index.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PosState {
    Pending,
    /// Weight-pruned: never served, but still materialized at finalize.
    Frozen,
}

#[derive(Debug, Clone)]
pub(crate) struct GrowPosition {
    pub(crate) check: NodeId,
    pub(crate) var: usize,
    pub(crate) shadow: u32,
    pub(crate) state: PosState,
}

/// One node of the shadow breadth-first tree: the growth sequence of the
/// unpivoted decoding tree, used by the balanced leaf-finding policy.
#[derive(Debug, Clone)]
pub(crate) struct Shadow {
    pub(crate) var: usize,
    /// Child shadow ids, assigned at the first serve and reused by every
    /// duplicated copy so copies stay aligned with the unpivoted tree.
    pub(crate) children: Option<Vec<u32>>,
    /// Live unfrozen positions carrying this shadow id.
    pub(crate) live: usize,
}

/// Counters accumulated over the lifetime of a tree.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeStats {
    pub grows: u64,
    pub pivots: u64,
    pub rule4_hits: u64,
    pub pruned_nodes: u64,
    pub peak_nodes: usize,
}

/// The pivoted decoding tree of one search task.
#[derive(Clone)]
pub struct DecodingTree<'c> {
    pub(crate) code: &'c SparseParityCheck,
    pub(crate) nodes: Vec<Option<TreeNode>>,
    pub(crate) free_nodes: Vec<u32>,
    pub(crate) live_nodes: usize,
    pub(crate) root: NodeId,
    pub(crate) root_bit: usize,
    pub(crate) active_index: HashMap<usize, BTreeSet<NodeId>>,
    pub(crate) positions: Vec<Option<GrowPosition>>,
    pub(crate) free_positions: Vec<u32>,
    pub(crate) live_pending: usize,
    pub(crate) shadows: Vec<Shadow>,
    pub(crate) shadow_queue: VecDeque<u32>,
    pub(crate) by_shadow: HashMap<u32, Vec<PosId>>,
    pub(crate) node_budget: usize,
    /// Positions whose forced-observation count exceeds this are frozen.
    pub(crate) freeze_above: usize,
    /// Backstop on unpivoted-tree depth: positions that would grow
    /// variables logically deeper than this are frozen. The decoder
    /// converges within n iterations, so depth 2(n+1) is always sufficient.
    pub(crate) depth_cap: u32,
    pub(crate) iteration_count: u64,
    pub(crate) birth_counter: u64,
    pub(crate) finalized: bool,
    pub(crate) stats: TreeStats,
}

impl<'c> DecodingTree<'c> {
    /// Initializes a tree rooted at `root_bit`: the root variable node with
    /// all its check children, positions seeded with every (check, other
    /// neighbor) pair. Root status follows the code's puncture/shorten
    /// annotations.
    pub fn new(
        code: &'c SparseParityCheck,
        root_bit: usize,
        node_budget: usize,
    ) -> Result<Self, TreeError> {
        assert!(root_bit < code.n(), "root bit out of range");
        let need = 1 + code.var_degree(root_bit);
        if node_budget < need {
            return Err(TreeError::BudgetTooSmall {
                budget: node_budget,
                need,
            });
        }
        let mut tree = DecodingTree {
            code,
            nodes: Vec::new(),
            free_nodes: Vec::new(),
            live_nodes: 0,
            root: NodeId(0),
            root_bit,
            active_index: HashMap::new(),
            positions: Vec::new(),
            free_positions: Vec::new(),
            live_pending: 0,
            shadows: Vec::new(),
            shadow_queue: VecDeque::new(),
            by_shadow: HashMap::new(),
            node_budget,
            freeze_above: usize::MAX,
            depth_cap: 2 * (code.n() as u32 + 1),
            iteration_count: 0,
            birth_counter: 0,
            finalized: false,
            stats: TreeStats::default(),
        };
        let status = if code.is_punctured(root_bit) {
            VarStatus::InactiveOne
        } else if code.is_shortened(root_bit) {
            VarStatus::InactiveZero
        } else {
            VarStatus::Active(root_bit)
        };
        let root = tree.alloc_node(NodeKind::Variable, Some(root_bit), status, None, 0, 0, 0);
        tree.root = root;
        if let VarStatus::Active(k) = status {
            tree.nodes[root.0 as usize].as_mut().unwrap().act_depth = 1;
            tree.active_index.entry(k).or_default().insert(root);
        }
        let act = tree.node(root).act_depth;
        for &j in code.var_neighbors(root_bit) {
            let c = tree.alloc_node(
                NodeKind::Check,
                Some(j),
                VarStatus::InactiveOne,
                Some(root),
                1,
                1,
                act,
            );
            tree.nodes[root.0 as usize].as_mut().unwrap().children.push(c);
            for &i in code.check_neighbors(j) {
                if i == root_bit {
                    continue;
                }
                let sid = tree.new_shadow(i);
                tree.shadow_queue.push_back(sid);
                tree.add_position(c, i, sid);
            }
        }
        if status == VarStatus::InactiveZero {
            tree.prune_zero(root);
        }
        tree.stats.peak_nodes = tree.live_nodes;
        Ok(tree)
    }

    /// Caps the forced-observation count above which positions are frozen
    /// instead of grown. Freezing preserves the tree function restricted to
    /// erasure patterns of weight <= cap.
    pub fn set_weight_freeze(&mut self, cap: usize) {
        self.freeze_above = cap;
        // retro-freeze already-seeded positions
        let ids: Vec<u32> = (0..self.positions.len() as u32).collect();
        for id in ids {
            let Some(p) = self.positions[id as usize].clone() else {
                continue;
            };
            if p.state == PosState::Pending && self.position_exceeds_caps(p.check) {
                self.freeze_position(PosId(id));
            }
        }
    }

    pub fn code(&self) -> &SparseParityCheck {
        self.code
    }
    pub fn root(&self) -> NodeId {
        self.root
    }
    pub fn root_bit(&self) -> usize {
        self.root_bit
    }
    pub fn live_nodes(&self) -> usize {
        self.live_nodes
    }
    pub fn node_budget(&self) -> usize {
        self.node_budget
    }
    pub fn iteration_count(&self) -> u64 {
        self.iteration_count
    }
    pub fn is_finalized(&self) -> bool {
        self.finalized
    }
    pub fn stats(&self) -> TreeStats {
        self.stats
    }
    /// Number of unserved, unfrozen positions.
    pub fn pending_positions(&self) -> usize {
        self.live_pending
    }
    /// Arena capacity, for callers indexing scratch arrays by raw node id.
    pub fn node_slots(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        self.nodes[id.0 as usize].as_ref().expect("live node")
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut TreeNode {
        self.nodes[id.0 as usize].as_mut().expect("live node")
    }

    pub(crate) fn is_alive(&self, id: NodeId) -> bool {
        self.nodes
            .get(id.0 as usize)
            .map_or(false, Option::is_some)
    }

    /// True when the check node still has positions to expand or freeze-kept
    /// ones; the bound arithmetic treats such a check as constant one.
    pub fn has_unexpanded(&self, id: NodeId) -> bool {
        !self.node(id).pending.is_empty()
    }

    /// Variables of the unserved slots at a check node.
    pub fn open_slot_vars(&self, id: NodeId) -> impl Iterator<Item = usize> + '_ {
        self.node(id)
            .pending
            .iter()
            .map(move |&pid| self.position(pid).var)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn alloc_node(
        &mut self,
        kind: NodeKind,
        tanner_index: Option<usize>,
        status: VarStatus,
        parent: Option<NodeId>,
        depth: u32,
        logical_depth: u32,
        act_depth: u32,
    ) -> NodeId {
        self.birth_counter += 1;
        let node = TreeNode {
            kind,
            tanner_index,
            status,
            parent,
            children: Vec::new(),
            depth,
            logical_depth,
            act_depth,
            birth: self.birth_counter,
            pending: Vec::new(),
        };
        self.live_nodes += 1;
        if self.live_nodes > self.stats.peak_nodes {
            self.stats.peak_nodes = self.live_nodes;
        }
        if let Some(slot) = self.free_nodes.pop() {
            self.nodes[slot as usize] = Some(node);
            NodeId(slot)
        } else {
            self.nodes.push(Some(node));
            NodeId(self.nodes.len() as u32 - 1)
        }
    }

    /// Frees one node (children must already be handled by the caller).
    pub(crate) fn release_node(&mut self, id: NodeId) {
        let node = self.nodes[id.0 as usize].take().expect("double free");
        if let VarStatus::Active(k) = node.status {
            if node.kind == NodeKind::Variable {
                if let Some(set) = self.active_index.get_mut(&k) {
                    set.remove(&id);
                    if set.is_empty() {
                        self.active_index.remove(&k);
                    }
                }
            }
        }
        for pid in node.pending {
            self.release_position(pid);
        }
        self.live_nodes -= 1;
        self.free_nodes.push(id.0);
    }

    pub(crate) fn new_shadow(&mut self, var: usize) -> u32 {
        self.shadows.push(Shadow {
            var,
            children: None,
            live: 0,
        });
        self.shadows.len() as u32 - 1
    }

    pub(crate) fn position_exceeds_caps(&self, check: NodeId) -> bool {
        let node = self.node(check);
        node.act_depth as usize > self.freeze_above || node.logical_depth + 1 > self.depth_cap
    }

    pub(crate) fn add_position(&mut self, check: NodeId, var: usize, shadow: u32) -> PosId {
        let state = if self.position_exceeds_caps(check) {
            PosState::Frozen
        } else {
            PosState::Pending
        };
        let pos = GrowPosition {
            check,
            var,
            shadow,
            state,
        };
        let pid = if let Some(slot) = self.free_positions.pop() {
            self.positions[slot as usize] = Some(pos);
            PosId(slot)
        } else {
            self.positions.push(Some(pos));
            PosId(self.positions.len() as u32 - 1)
        };
        self.node_mut(check).pending.push(pid);
        if state == PosState::Pending {
            self.live_pending += 1;
            self.shadows[shadow as usize].live += 1;
            self.by_shadow.entry(shadow).or_default().push(pid);
        }
        pid
    }

    pub(crate) fn freeze_position(&mut self, pid: PosId) {
        let pos = self.positions[pid.0 as usize].as_mut().expect("live pos");
        if pos.state == PosState::Pending {
            pos.state = PosState::Frozen;
            let shadow = pos.shadow;
            self.live_pending -= 1;
            self.shadows[shadow as usize].live -= 1;
        }
    }

    /// Frees one position without touching its check's pending list (the
    /// caller owns that bookkeeping).
    pub(crate) fn release_position(&mut self, pid: PosId) {
        let pos = self.positions[pid.0 as usize].take().expect("double free");
        if pos.state == PosState::Pending {
            self.live_pending -= 1;
            self.shadows[pos.shadow as usize].live -= 1;
        }
        self.free_positions.push(pid.0);
    }

    pub(crate) fn position(&self, pid: PosId) -> &GrowPosition {
        self.positions[pid.0 as usize].as_ref().expect("live pos")
    }

    /// Post-order traversal of the live tree (children before parents).
    pub fn post_order(&self) -> Vec<NodeId> {
        let mut order = Vec::with_capacity(self.live_nodes);
        let mut stack = vec![(self.root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
            } else {
                stack.push((id, true));
                for &c in self.node(id).children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    /// Evaluates the tree function on an erasure indicator vector
    /// (true = erased). Remaining positions count as constant one, so the
    /// result equals what finalize-then-evaluate would give.
    pub fn eval_function(&self, y: &[bool]) -> bool {
        self.eval_with_order(&self.post_order(), y)
    }

    /// Boundary value of an unexpanded slot under an assignment.
    pub(crate) fn slot_value(&self, var: usize, y: &[bool]) -> bool {
        if self.code.is_punctured(var) {
            true
        } else if self.code.is_shortened(var) {
            false
        } else {
            y[var]
        }
    }

    /// Same as [`eval_function`](Self::eval_function) with a precomputed
    /// post-order, for sweeps over many assignments of one tree.
    pub fn eval_with_order(&self, order: &[NodeId], y: &[bool]) -> bool {
        debug_assert_eq!(y.len(), self.code.n());
        let mut value = vec![false; self.nodes.len()];
        for &id in order {
            let node = self.node(id);
            let v = match node.kind {
                NodeKind::Variable => {
                    let own = match node.status {
                        VarStatus::Active(k) => y[k],
                        VarStatus::InactiveZero => false,
                        VarStatus::InactiveOne => true,
                    };
                    own && node.children.iter().all(|&c| value[c.0 as usize])
                }
                NodeKind::Check => {
                    node.children.iter().any(|&c| value[c.0 as usize])
                        || node
                            .pending
                            .iter()
                            .any(|&pid| self.slot_value(self.position(pid).var, y))
                }
            };
            value[id.0 as usize] = v;
        }
        value[self.root.0 as usize]
    }

    /// Unserved positions with a live boundary value on paths whose
    /// variables all take input one under `y` (true = erased). Exactly
    /// these slots can support a spurious 1-evaluation of `y`; expanding
    /// them either collapses the value or proves it genuine.
    pub fn live_path_positions(&self, y: &[bool]) -> Vec<PosId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = self.node(id);
            if node.kind == NodeKind::Variable {
                let own = match node.status {
                    VarStatus::Active(k) => y[k],
                    VarStatus::InactiveZero => false,
                    VarStatus::InactiveOne => true,
                };
                if !own {
                    continue;
                }
            } else {
                for &pid in &node.pending {
                    let pos = self.position(pid);
                    if pos.state == PosState::Pending && self.slot_value(pos.var, y) {
                        out.push(pid);
                    }
                }
            }
            stack.extend(node.children.iter().copied());
        }
        out
    }

    pub fn position_is_pending(&self, pid: PosId) -> bool {
        self.positions
            .get(pid.0 as usize)
            .and_then(Option::as_ref)
            .map_or(false, |p| p.state == PosState::Pending)
    }

    /// Materializes every remaining position as an inactive-one leaf without
    /// check children, then seals the tree.
    pub fn finalize(&mut self) {
        let check_ids: Vec<NodeId> = (0..self.nodes.len() as u32)
            .map(NodeId)
            .filter(|&id| self.is_alive(id) && self.node(id).kind == NodeKind::Check)
            .collect();
        for c in check_ids {
            let pids: Vec<PosId> = std::mem::take(&mut self.node_mut(c).pending);
            for pid in pids {
                let var = self.position(pid).var;
                self.release_position(pid);
                let parent = self.node(c);
                let (depth, logical, act) =
                    (parent.depth + 1, parent.logical_depth + 1, parent.act_depth);
                let leaf = self.alloc_node(
                    NodeKind::Variable,
                    Some(var),
                    VarStatus::InactiveOne,
                    Some(c),
                    depth,
                    logical,
                    act,
                );
                self.node_mut(c).children.push(leaf);
            }
        }
        debug_assert_eq!(self.live_pending, 0);
        self.finalized = true;
    }

    /// Debug dump as an S-expression-like text form; for golden tests only.
    pub fn dump(&self) -> String {
        fn rec(tree: &DecodingTree, id: NodeId, out: &mut String) {
            let node = tree.node(id);
            let label = match (node.kind, node.tanner_index) {
                (NodeKind::Variable, Some(t)) => format!("v{t}"),
                (NodeKind::Variable, None) => "vaux".to_string(),
                (NodeKind::Check, Some(t)) => format!("c{t}"),
                (NodeKind::Check, None) => "caux".to_string(),
            };
            out.push('(');
            out.push_str(&label);
            if node.kind == NodeKind::Variable {
                out.push_str(match node.status {
                    VarStatus::Active(_) => ":act",
                    VarStatus::InactiveZero => ":zero",
                    VarStatus::InactiveOne => ":one",
                });
            } else if !node.pending.is_empty() {
                out.push_str(":open");
            }
            for &c in &node.children {
                out.push(' ');
                rec(tree, c, out);
            }
            out.push(')');
        }
        let mut s = String::new();
        rec(self, self.root, &mut s);
        s
    }

    /// Full structural audit: linkage, alternation, index consistency, the
    /// check-yca invariant, and budget. Used by tests after every mutation.
    pub fn validate_structure(&self) -> Result<(), TreeError> {
        let err = |msg: String| Err(TreeError::Invariant(msg));
        if !self.is_alive(self.root) {
            return err("root not alive".into());
        }
        let mut seen = 0usize;
        let mut stack = vec![self.root];
        let mut active_seen: HashMap<usize, BTreeSet<NodeId>> = HashMap::new();
        while let Some(id) = stack.pop() {
            seen += 1;
            let node = self.node(id);
            if node.kind == NodeKind::Variable {
                if let VarStatus::Active(k) = node.status {
                    if k >= self.code.n() {
                        return err(format!("obs {k} out of range"));
                    }
                    active_seen.entry(k).or_default().insert(id);
                }
                if !node.pending.is_empty() {
                    return err("variable node holds grow positions".into());
                }
            }
            for &c in &node.children {
                if !self.is_alive(c) {
                    return err(format!("dead child {c:?}"));
                }
                let child = self.node(c);
                if child.parent != Some(id) {
                    return err("parent link mismatch".into());
                }
                if child.depth != node.depth + 1 {
                    return err("depth mismatch".into());
                }
                if child.kind == node.kind {
                    return err("kind does not alternate".into());
                }
                let expect_act = node.act_depth
                    + if child.kind == NodeKind::Variable
                        && matches!(child.status, VarStatus::Active(_))
                    {
                        1
                    } else {
                        0
                    };
                if child.act_depth != expect_act {
                    return err("act_depth mismatch".into());
                }
                stack.push(c);
            }
            for &pid in &node.pending {
                let pos = self.position(pid);
                if pos.check != id {
                    return err("position check link mismatch".into());
                }
                let tanner = node
                    .tanner_index
                    .ok_or_else(|| TreeError::Invariant("aux check with position".into()))?;
                if !self.code.check_neighbors(tanner).contains(&pos.var) {
                    return err("position var not adjacent".into());
                }
            }
        }
        if seen != self.live_nodes {
            return err(format!(
                "live count mismatch: walked {seen}, recorded {}",
                self.live_nodes
            ));
        }
        if self.live_nodes > self.node_budget {
            return err("budget exceeded".into());
        }
        // active_index exactness
        if active_seen != self.active_index {
            return err("active_index out of sync".into());
        }
        // Structural invariant: same-obs active pairs meet at a check node.
        for set in self.active_index.values() {
            let nodes: Vec<NodeId> = set.iter().copied().collect();
            for (a_pos, &a) in nodes.iter().enumerate() {
                for &b in nodes.iter().skip(a_pos + 1) {
                    let y = self.yca(a, b);
                    if self.node(y).kind != NodeKind::Check {
                        return err(format!(
                            "active pair {a:?},{b:?} meets at a variable node"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Youngest common ancestor of two live nodes.
    pub(crate) fn yca(&self, a: NodeId, b: NodeId) -> NodeId {
        let mut x = a;
        let mut y = b;
        while self.node(x).depth > self.node(y).depth {
            x = self.node(x).parent.expect("depth > 0 has parent");
        }
        while self.node(y).depth > self.node(x).depth {
            y = self.node(y).parent.expect("depth > 0 has parent");
        }
        while x != y {
            x = self.node(x).parent.expect("common root exists");
            y = self.node(y).parent.expect("common root exists");
        }
        x
    }
}
