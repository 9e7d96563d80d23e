//! Leaf growth, youngest-common-ancestor queries, the pivoting rule, and the
//! pruning rules.

use rand::Rng;

use super::{
    DecodingTree, NodeId, NodeKind, PosId, PosState, TreeError, VarStatus,
};

/// What happened when a position was grown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowOutcome {
    /// Leaf added active (or inactive per annotation); no conflict.
    PlainAdd,
    /// An active node with the same observation was an ancestor: the leaf
    /// was hardwired to one instead (degenerate pivoting).
    Rule4Add,
    /// A variable-node conflict site was found and the pivoting rule ran.
    Pivoted,
}

#[derive(Debug, Clone, Copy)]
enum Plan {
    Plain,
    Rule4,
    Pivot(NodeId),
}

impl<'c> DecodingTree<'c> {
    /// Finds the conflict site for an active node: the deepest youngest
    /// common ancestor between `leaf` and any other active node sharing its
    /// observation, with one witnessing partner. Ties between partners are
    /// broken toward the most recently added.
    pub fn find_yca(&self, leaf: NodeId) -> Option<(NodeId, NodeId)> {
        let obs = self.node(leaf).status.obs()?;
        self.deepest_conflict(leaf, obs, Some(leaf))
    }

    fn deepest_conflict(
        &self,
        from: NodeId,
        obs: usize,
        exclude: Option<NodeId>,
    ) -> Option<(NodeId, NodeId)> {
        let partners = self.active_index.get(&obs)?;
        let mut best: Option<(NodeId, NodeId)> = None;
        for &p in partners {
            if Some(p) == exclude {
                continue;
            }
            let y = self.yca(from, p);
            let better = match best {
                None => true,
                Some((by, bp)) => {
                    let (dy, db) = (self.node(y).depth, self.node(by).depth);
                    dy > db || (dy == db && self.node(p).birth > self.node(bp).birth)
                }
            };
            if better {
                best = Some((y, p));
            }
        }
        best
    }

    /// Serves one grow position: adds the variable with its check children,
    /// then resolves any observation conflict by Rule 4 or by pivoting.
    /// On a budget failure nothing is mutated and the position stays live.
    pub fn grow_leaf(&mut self, pid: PosId) -> Result<GrowOutcome, TreeError> {
        if self.finalized {
            return Err(TreeError::Finalized);
        }
        let pos = self.position(pid).clone();
        assert_eq!(pos.state, PosState::Pending, "grow of a frozen position");
        let check = pos.check;
        let var = pos.var;
        let parent_tanner = self.node(check).tanner_index.expect("grown checks are real");
        let new_checks: Vec<usize> = self
            .code
            .var_neighbors(var)
            .iter()
            .copied()
            .filter(|&j| j != parent_tanner)
            .collect();
        let add_size = 1 + new_checks.len();

        let annotated = if self.code.is_punctured(var) {
            Some(VarStatus::InactiveOne)
        } else if self.code.is_shortened(var) {
            Some(VarStatus::InactiveZero)
        } else {
            None
        };

        // The new leaf hangs below `check`, so its pairwise ycas agree with
        // those of `check`; the conflict can be resolved before mutating.
        let conflict = if annotated.is_none() {
            self.deepest_conflict(check, var, None)
        } else {
            None
        };
        let plan = match conflict {
            None => Plan::Plain,
            Some((y, p)) if y == p => Plan::Rule4,
            Some((y, _)) if self.node(y).kind == NodeKind::Check => Plan::Plain,
            Some((y, _)) => Plan::Pivot(y),
        };

        // Budget pre-flight, including the pivot copies when one will fire,
        // so a failure leaves the tree untouched.
        let mut need = self.live_nodes + add_size;
        if let Plan::Pivot(y) = plan {
            let (_, partner) = conflict.unwrap();
            let g_dir = self.child_toward(y, check);
            let h_dir = self.child_toward(y, partner);
            if g_dir == h_dir {
                return Err(TreeError::Invariant(
                    "conflict paths enter the pivot site through one child".into(),
                ));
            }
            let dup = self.subtree_size(g_dir) + self.subtree_size(h_dir) + add_size;
            need += dup + 3;
        }
        if need > self.node_budget {
            return Err(TreeError::BudgetExceeded {
                need,
                budget: self.node_budget,
            });
        }

        // Commit: consume the position and attach the leaf with its checks.
        let status = match (annotated, plan) {
            (Some(st), _) => st,
            (None, Plan::Rule4) => VarStatus::InactiveOne,
            (None, _) => VarStatus::Active(var),
        };
        self.consume_position(pid);
        let (depth, logical, act_parent) = {
            let c = self.node(check);
            (c.depth + 1, c.logical_depth + 1, c.act_depth)
        };
        let act = act_parent + matches!(status, VarStatus::Active(_)) as u32;
        let leaf = self.alloc_node(
            NodeKind::Variable,
            Some(var),
            status,
            Some(check),
            depth,
            logical,
            act,
        );
        self.node_mut(check).children.push(leaf);
        if let VarStatus::Active(k) = status {
            self.active_index.entry(k).or_default().insert(leaf);
        }
        let child_shadows = self.serve_shadow(pos.shadow, &new_checks);
        let mut shadow_iter = child_shadows.into_iter();
        for &j in &new_checks {
            let c = self.alloc_node(
                NodeKind::Check,
                Some(j),
                VarStatus::InactiveOne,
                Some(leaf),
                depth + 1,
                logical + 1,
                act,
            );
            self.node_mut(leaf).children.push(c);
            for &i in self.code.check_neighbors(j) {
                if i == var {
                    continue;
                }
                let sid = shadow_iter.next().expect("shadow arity matches expansion");
                self.add_position(c, i, sid);
            }
        }
        self.iteration_count += 1;
        self.stats.grows += 1;

        // A Tanner check of degree one yields a check node with no children
        // and nothing to expand: an empty OR. The leaf is forced to zero.
        let dead = self
            .node(leaf)
            .children
            .iter()
            .any(|&c| {
                let n = self.node(c);
                n.children.is_empty() && n.pending.is_empty()
            });
        if dead || status == VarStatus::InactiveZero {
            if let VarStatus::Active(k) = self.node(leaf).status {
                let set = self.active_index.get_mut(&k).expect("registered");
                set.remove(&leaf);
                if set.is_empty() {
                    self.active_index.remove(&k);
                }
            }
            self.node_mut(leaf).status = VarStatus::InactiveZero;
            self.prune_zero(leaf);
            return Ok(GrowOutcome::PlainAdd);
        }

        match plan {
            Plan::Plain => Ok(GrowOutcome::PlainAdd),
            Plan::Rule4 => {
                self.stats.rule4_hits += 1;
                Ok(GrowOutcome::Rule4Add)
            }
            Plan::Pivot(site) => {
                self.pivot(site, var)?;
                Ok(GrowOutcome::Pivoted)
            }
        }
    }

    /// The child of `ancestor` on the path toward `descendant`.
    fn child_toward(&self, ancestor: NodeId, descendant: NodeId) -> NodeId {
        let target = self.node(ancestor).depth + 1;
        let mut x = descendant;
        while self.node(x).depth > target {
            x = self.node(x).parent.expect("walking up");
        }
        debug_assert_eq!(self.node(x).parent, Some(ancestor));
        x
    }

    fn subtree_size(&self, root: NodeId) -> usize {
        let mut n = 0;
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            n += 1;
            stack.extend(self.node(id).children.iter().copied());
        }
        n
    }

    fn consume_position(&mut self, pid: PosId) {
        let check = self.position(pid).check;
        let list = &mut self.node_mut(check).pending;
        let at = list.iter().position(|&x| x == pid).expect("listed");
        list.swap_remove(at);
        self.release_position(pid);
    }

    /// First serve computes and memoizes the child shadow ids; later serves
    /// (duplicated copies of the same unpivoted leaf) reuse them so the
    /// balanced policy treats all copies as one target.
    fn serve_shadow(&mut self, sid: u32, new_checks: &[usize]) -> Vec<u32> {
        if let Some(children) = &self.shadows[sid as usize].children {
            return children.clone();
        }
        let var = self.shadows[sid as usize].var;
        let mut children = Vec::new();
        for &j in new_checks {
            for &i in self.code.check_neighbors(j) {
                if i == var {
                    continue;
                }
                let child = self.new_shadow(i);
                self.shadow_queue.push_back(child);
                children.push(child);
            }
        }
        self.shadows[sid as usize].children = Some(children.clone());
        children
    }

    /// Balanced-growing leaf finding: serve every live copy of the oldest
    /// unpivoted-tree target before moving on.
    pub fn next_position_balanced(&mut self) -> Option<PosId> {
        loop {
            let &sid = self.shadow_queue.front()?;
            if self.shadows[sid as usize].live > 0 {
                let bucket = self.by_shadow.get_mut(&sid).expect("live implies indexed");
                while let Some(&pid) = bucket.first() {
                    let live = self.positions[pid.0 as usize]
                        .as_ref()
                        .map_or(false, |p| p.shadow == sid && p.state == PosState::Pending);
                    if live {
                        return Some(pid);
                    }
                    bucket.swap_remove(0);
                }
                unreachable!("live count positive but no live position");
            }
            self.shadow_queue.pop_front();
            self.by_shadow.remove(&sid);
        }
    }

    /// Uniform choice among live positions; the experimental baseline policy.
    pub fn next_position_random(&mut self, rng: &mut impl Rng) -> Option<PosId> {
        if self.live_pending == 0 {
            return None;
        }
        let live: Vec<PosId> = (0..self.positions.len() as u32)
            .map(PosId)
            .filter(|&pid| {
                self.positions[pid.0 as usize]
                    .as_ref()
                    .map_or(false, |p| p.state == PosState::Pending)
            })
            .collect();
        Some(live[rng.gen_range(0..live.len())])
    }

    /// Rule 3: a variable hardwired to zero annihilates its subtree. Deletes
    /// all children of `node`, drops the node from its parent check, and
    /// cascades constant propagation: a check left with no children and no
    /// positions is constant zero and is dropped from its parent variable,
    /// which becomes inactive-zero and recurses. The tree function is
    /// unchanged on every assignment.
    pub fn prune_zero(&mut self, node: NodeId) {
        debug_assert_eq!(self.node(node).kind, NodeKind::Variable);
        debug_assert_eq!(self.node(node).status, VarStatus::InactiveZero);
        let mut current = node;
        loop {
            self.delete_children(current);
            let Some(check) = self.node(current).parent else {
                break; // root: whole-tree function is constant zero
            };
            let at = self
                .node(check)
                .children
                .iter()
                .position(|&x| x == current)
                .expect("child link");
            self.node_mut(check).children.swap_remove(at);
            self.release_node(current);
            let c = self.node(check);
            if !c.children.is_empty() || !c.pending.is_empty() {
                break;
            }
            // the check is constant zero: remove it from its parent variable
            let var = self.node(check).parent.expect("checks have parents");
            let at = self
                .node(var)
                .children
                .iter()
                .position(|&x| x == check)
                .expect("child link");
            self.node_mut(var).children.swap_remove(at);
            self.release_node(check);
            if let VarStatus::Active(k) = self.node(var).status {
                if let Some(set) = self.active_index.get_mut(&k) {
                    set.remove(&var);
                    if set.is_empty() {
                        self.active_index.remove(&k);
                    }
                }
            }
            self.node_mut(var).status = VarStatus::InactiveZero;
            current = var;
        }
    }

    fn delete_children(&mut self, node: NodeId) {
        let mut stack = std::mem::take(&mut self.node_mut(node).children);
        while let Some(id) = stack.pop() {
            stack.extend(std::mem::take(&mut self.node_mut(id).children));
            self.release_node(id);
            self.stats.pruned_nodes += 1;
        }
    }

    fn delete_subtree(&mut self, root: NodeId) {
        self.delete_children(root);
        self.release_node(root);
    }

    /// Rule 2, the pivoting rule. `site` must be a variable node with exactly
    /// two child messages carrying `obs` (guaranteed by the structural
    /// invariant). The two implicated subtrees g and h are detached and
    /// replaced by an auxiliary degree-2 check whose left child is an active
    /// aux variable over copies of g,h hardwired at obs = 1, and whose right
    /// child is an inactive-one aux variable over copies hardwired at
    /// obs = 0; the right side is then pruned. The tree function is unchanged
    /// for every assignment.
    pub fn pivot(&mut self, site: NodeId, obs: usize) -> Result<(), TreeError> {
        if self.node(site).kind != NodeKind::Variable {
            return Err(TreeError::Invariant("pivot site must be a variable".into()));
        }
        // locate the implicated children: those whose subtrees hold active
        // nodes with this observation
        let mut implicated: Vec<NodeId> = Vec::new();
        if let Some(actives) = self.active_index.get(&obs) {
            for &a in actives {
                if a == site || self.node(a).depth <= self.node(site).depth {
                    continue;
                }
                let mut x = a;
                while self.node(x).depth > self.node(site).depth + 1 {
                    x = self.node(x).parent.expect("walking up");
                }
                if self.node(x).parent == Some(site) && !implicated.contains(&x) {
                    implicated.push(x);
                }
            }
        }
        if implicated.len() != 2 {
            return Err(TreeError::Invariant(format!(
                "pivot expects the observation in exactly two child messages, found {}",
                implicated.len()
            )));
        }
        let (g, h) = (implicated[0], implicated[1]);
        let dup = self.subtree_size(g) + self.subtree_size(h);
        if self.live_nodes + dup + 3 > self.node_budget {
            return Err(TreeError::BudgetExceeded {
                need: self.live_nodes + dup + 3,
                budget: self.node_budget,
            });
        }

        let (site_depth, site_logical, site_act) = {
            let s = self.node(site);
            (s.depth, s.logical_depth, s.act_depth)
        };
        for x in [g, h] {
            let at = self
                .node(site)
                .children
                .iter()
                .position(|&c| c == x)
                .expect("implicated child");
            self.node_mut(site).children.swap_remove(at);
        }
        let aux = self.alloc_node(
            NodeKind::Check,
            None,
            VarStatus::InactiveOne,
            Some(site),
            site_depth + 1,
            site_logical + 1,
            site_act,
        );
        self.node_mut(site).children.push(aux);
        let left = self.alloc_node(
            NodeKind::Variable,
            None,
            VarStatus::Active(obs),
            Some(aux),
            site_depth + 2,
            site_logical + 2,
            site_act + 1,
        );
        self.node_mut(aux).children.push(left);
        self.active_index.entry(obs).or_default().insert(left);
        let right = self.alloc_node(
            NodeKind::Variable,
            None,
            VarStatus::InactiveOne,
            Some(aux),
            site_depth + 2,
            site_logical + 2,
            site_act,
        );
        self.node_mut(aux).children.push(right);

        let mut zeros: Vec<NodeId> = Vec::new();
        for src in [g, h] {
            let copy = self.copy_subtree(src, left, obs, VarStatus::InactiveOne, &mut Vec::new());
            self.node_mut(left).children.push(copy);
            let copy = self.copy_subtree(src, right, obs, VarStatus::InactiveZero, &mut zeros);
            self.node_mut(right).children.push(copy);
        }
        for src in [g, h] {
            self.delete_subtree(src);
        }
        for z in zeros {
            if self.is_alive(z) {
                self.prune_zero(z);
            }
        }
        self.stats.pivots += 1;
        Ok(())
    }

    /// Copies a subtree under a new parent, hardwiring every active(obs) node
    /// to `hardwire` and collecting the zero-hardwired copies for pruning.
    /// Positions on copied checks are duplicated with their shadow ids;
    /// depth and act_depth are recomputed for the new location.
    fn copy_subtree(
        &mut self,
        src: NodeId,
        new_parent: NodeId,
        obs: usize,
        hardwire: VarStatus,
        zeros_out: &mut Vec<NodeId>,
    ) -> NodeId {
        let mut root_copy = None;
        let mut stack = vec![(src, new_parent)];
        while let Some((s_id, parent)) = stack.pop() {
            let (kind, tanner, status, src_children, src_pending, src_logical) = {
                let s = self.node(s_id);
                (
                    s.kind,
                    s.tanner_index,
                    s.status,
                    s.children.clone(),
                    s.pending.clone(),
                    s.logical_depth,
                )
            };
            let status = match (kind, status) {
                (NodeKind::Variable, VarStatus::Active(k)) if k == obs => hardwire,
                (_, st) => st,
            };
            let (p_depth, p_act) = {
                let p = self.node(parent);
                (p.depth, p.act_depth)
            };
            let act = p_act
                + (kind == NodeKind::Variable && matches!(status, VarStatus::Active(_))) as u32;
            let copy =
                self.alloc_node(kind, tanner, status, Some(parent), p_depth + 1, src_logical, act);
            if kind == NodeKind::Variable {
                if let VarStatus::Active(k) = status {
                    self.active_index.entry(k).or_default().insert(copy);
                }
                if status == VarStatus::InactiveZero {
                    zeros_out.push(copy);
                }
            }
            for pid in src_pending {
                let p = self.position(pid).clone();
                // conditioning on obs = 0 zeroes that variable's slots; the
                // obs = 1 side keeps them (a later grow resolves by Rule 4
                // under the new active aux root)
                if p.var == obs && hardwire == VarStatus::InactiveZero {
                    continue;
                }
                self.add_position(copy, p.var, p.shadow);
            }
            match root_copy {
                None => root_copy = Some(copy),
                Some(_) => self.node_mut(parent).children.push(copy),
            }
            for c in src_children.into_iter().rev() {
                stack.push((c, copy));
            }
        }
        root_copy.expect("nonempty subtree")
    }
}
