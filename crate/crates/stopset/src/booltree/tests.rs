use super::*;
use crate::tanner::{builtin_code, BuiltinCode, SparseParityCheck};

fn c1() -> SparseParityCheck {
    builtin_code(&BuiltinCode::C1, 0).unwrap()
}

fn truth_table(tree: &DecodingTree) -> Vec<bool> {
    let n = tree.code().n();
    let order = tree.post_order();
    (0..1u32 << n)
        .map(|mask| {
            let y: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            tree.eval_with_order(&order, &y)
        })
        .collect()
}

/// Grows until no live position remains or `max` grows happened, validating
/// after every mutation and checking pointwise narrowing.
fn grow_all(tree: &mut DecodingTree, max: usize) {
    let mut prev = truth_table(tree);
    for _ in 0..max {
        let Some(pid) = tree.next_position_balanced() else {
            break;
        };
        tree.grow_leaf(pid).unwrap();
        tree.validate_structure().unwrap();
        let cur = truth_table(tree);
        for (a, b) in prev.iter().zip(cur.iter()) {
            assert!(b <= a, "narrowing violated");
        }
        prev = cur;
    }
}

#[test]
fn init_c1_root_v2() {
    let h = c1();
    let tree = DecodingTree::new(&h, 1, 1000).unwrap();
    let root = tree.node(tree.root());
    assert_eq!(root.status(), VarStatus::Active(1));
    assert_eq!(root.children().len(), 2);
    let tanner: Vec<usize> = root
        .children()
        .iter()
        .map(|&c| tree.node(c).tanner_index().unwrap())
        .collect();
    assert_eq!(tanner, vec![0, 1]);
    assert_eq!(tree.pending_positions(), 4);
    tree.validate_structure().unwrap();
}

#[test]
fn init_isolated_bit() {
    // a degree-0 column
    let h = SparseParityCheck::from_rows(3, vec![vec![0, 1]]).unwrap();
    let tree = DecodingTree::new(&h, 2, 10).unwrap();
    assert_eq!(tree.live_nodes(), 1);
    assert_eq!(tree.pending_positions(), 0);
}

#[test]
fn init_punctured_root() {
    let h = c1().with_punctured([1]);
    let tree = DecodingTree::new(&h, 1, 1000).unwrap();
    assert_eq!(tree.node(tree.root()).status(), VarStatus::InactiveOne);
}

#[test]
fn init_budget_too_small() {
    let h = c1();
    assert!(matches!(
        DecodingTree::new(&h, 1, 2),
        Err(TreeError::BudgetTooSmall { .. })
    ));
}

#[test]
fn eval_monotone_ceiling_and_floor() {
    let h = c1();
    let mut tree = DecodingTree::new(&h, 1, 1000).unwrap();
    grow_all(&mut tree, 6);
    assert!(tree.eval_function(&[true; 6]));
    assert!(!tree.eval_function(&[false; 6]));
}

#[test]
fn two_level_c1_tree_matches_iteration_formula() {
    // After the first twelve breadth-first grows the tree covers two decoding
    // iterations of bit 2. Hardwiring the remaining growth to one (finalize)
    // must give exactly
    //   y2 (y1 (y5+y6) + y3 (y4+y5)) (y4 (y3+y5) + y6 (y1+y5))
    // on every assignment; pivots fire along the way but never change the
    // function. The live tree's boundary-slot value may only be lower.
    let h = c1();
    let mut tree = DecodingTree::new(&h, 1, 10_000).unwrap();
    for _ in 0..12 {
        let pid = tree.next_position_balanced().unwrap();
        tree.grow_leaf(pid).unwrap();
        tree.validate_structure().unwrap();
    }
    let live_order = tree.post_order();
    let mut finalized = tree.clone();
    finalized.finalize();
    let order = finalized.post_order();
    for mask in 0..1u32 << 6 {
        let y: Vec<bool> = (0..6).map(|i| mask >> i & 1 == 1).collect();
        let expected = y[1]
            && (y[0] && (y[4] || y[5]) || y[2] && (y[3] || y[4]))
            && (y[3] && (y[2] || y[4]) || y[5] && (y[0] || y[4]));
        assert_eq!(finalized.eval_with_order(&order, &y), expected, "mask {mask}");
        assert!(
            tree.eval_with_order(&live_order, &y) <= expected,
            "mask {mask}"
        );
    }
}

#[test]
fn pivot_preserves_function() {
    // Grow until the first pivot fires; check the truth table across it.
    let h = c1();
    let mut tree = DecodingTree::new(&h, 1, 10_000).unwrap();
    let mut seen_pivot = false;
    for _ in 0..40 {
        let Some(pid) = tree.next_position_balanced() else {
            break;
        };
        let before = truth_table(&tree);
        let var = tree.position(pid).var;
        let outcome = tree.grow_leaf(pid).unwrap();
        tree.validate_structure().unwrap();
        if outcome == GrowOutcome::Pivoted {
            seen_pivot = true;
            // the pivot itself is lossless; any change comes from the leaf
            // addition, which can only narrow
            let after = truth_table(&tree);
            for (m, (a, b)) in before.iter().zip(after.iter()).enumerate() {
                assert!(b <= a, "mask {m} var {var}");
            }
        }
    }
    assert!(seen_pivot, "expected at least one pivot on C1");
}

#[test]
fn rule4_keeps_function_when_checks_stay_open() {
    // Under finalize semantics (open growth hardwired to one) a rule-4
    // addition swaps a hardwired-one slot for a hardwired-one leaf whose
    // check children stay open: the function is untouched.
    let h = c1();
    let mut tree = DecodingTree::new(&h, 1, 10_000).unwrap();
    let finalized_table = |t: &DecodingTree| {
        let mut f = t.clone();
        f.finalize();
        truth_table(&f)
    };
    let mut seen = false;
    for _ in 0..60 {
        let Some(pid) = tree.next_position_balanced() else {
            break;
        };
        let before = finalized_table(&tree);
        let outcome = tree.grow_leaf(pid).unwrap();
        tree.validate_structure().unwrap();
        if outcome == GrowOutcome::Rule4Add {
            seen = true;
            assert_eq!(before, finalized_table(&tree));
        }
    }
    assert!(seen, "expected a rule-4 addition on C1");
}

#[test]
fn find_yca_cases() {
    let h = c1();
    let mut tree = DecodingTree::new(&h, 1, 10_000).unwrap();
    // first grow adds v0 under c0: no other active node shares obs 0
    let pid = tree.next_position_balanced().unwrap();
    assert_eq!(tree.position(pid).var, 0);
    tree.grow_leaf(pid).unwrap();
    let v0 = *tree.active_index.get(&0).unwrap().iter().next().unwrap();
    assert_eq!(tree.find_yca(v0), None);
}

#[test]
fn find_yca_prefers_deeper_site() {
    // Hand-built tree with three active occurrences of obs 9:
    //   root v0 - c0 - a(obs 9)
    //           - c1 - w(obs 1) - c2 - b(obs 9)
    //                          - c3 - x(obs 2) - c4 - probe(obs 9)
    // Pairwise ycas with probe: yca(a) = root (depth 0), yca(b) = w (depth 2).
    // The deeper one must win.
    let h = SparseParityCheck::from_rows(10, vec![vec![0]; 1]).unwrap();
    let mut tree = DecodingTree::new(&h, 0, 100).unwrap();
    let root = tree.root();
    tree.node_mut(root).children.clear(); // rebuild by hand
    let mk_check = |tree: &mut DecodingTree, parent: NodeId| {
        let d = tree.node(parent).depth + 1;
        let a = tree.node(parent).act_depth;
        let c = tree.alloc_node(
            NodeKind::Check,
            Some(0),
            VarStatus::InactiveOne,
            Some(parent),
            d,
            d,
            a,
        );
        tree.node_mut(parent).children.push(c);
        c
    };
    let mk_var = |tree: &mut DecodingTree, parent: NodeId, obs: usize| {
        let d = tree.node(parent).depth + 1;
        let a = tree.node(parent).act_depth + 1;
        let v = tree.alloc_node(
            NodeKind::Variable,
            Some(obs),
            VarStatus::Active(obs),
            Some(parent),
            d,
            d,
            a,
        );
        tree.node_mut(parent).children.push(v);
        tree.active_index.entry(obs).or_default().insert(v);
        v
    };
    let c0 = mk_check(&mut tree, root);
    let _a = mk_var(&mut tree, c0, 9);
    let c1 = mk_check(&mut tree, root);
    let w = mk_var(&mut tree, c1, 1);
    let c2 = mk_check(&mut tree, w);
    let b = mk_var(&mut tree, c2, 9);
    let c3 = mk_check(&mut tree, w);
    let x = mk_var(&mut tree, c3, 2);
    let c4 = mk_check(&mut tree, x);
    let probe = mk_var(&mut tree, c4, 9);
    let (site, partner) = tree.find_yca(probe).unwrap();
    assert_eq!(site, w);
    assert_eq!(partner, b);
}

#[test]
fn prune_zero_leaf_drops_from_parent() {
    let h = c1();
    let mut tree = DecodingTree::new(&h, 1, 10_000).unwrap();
    let pid = tree.next_position_balanced().unwrap();
    tree.grow_leaf(pid).unwrap();
    // flip the grown leaf to zero by hand and prune
    let leaf = *tree.active_index.get(&0).unwrap().iter().next().unwrap();
    let parent = tree.node(leaf).parent().unwrap();
    let set = tree.active_index.get_mut(&0).unwrap();
    set.remove(&leaf);
    if set.is_empty() {
        tree.active_index.remove(&0);
    }
    tree.node_mut(leaf).status = VarStatus::InactiveZero;
    let before = tree.live_nodes();
    tree.prune_zero(leaf);
    assert!(!tree.is_alive(leaf));
    assert!(tree.node(parent).children().is_empty());
    assert!(tree.live_nodes() < before);
    tree.validate_structure().unwrap();
}

#[test]
fn prune_cascade_reaches_root_on_shortened_input() {
    // shorten every neighbor of the root's only check: the whole function
    // collapses to zero
    let rows = vec![vec![0, 1, 2]];
    let h = SparseParityCheck::from_rows(3, rows)
        .unwrap()
        .with_shortened_annotation([1, 2]);
    let mut tree = DecodingTree::new(&h, 0, 100).unwrap();
    while let Some(pid) = tree.next_position_balanced() {
        tree.grow_leaf(pid).unwrap();
        tree.validate_structure().unwrap();
    }
    // both neighbors are shortened; the check dies and the root goes to zero
    assert_eq!(tree.node(tree.root()).status(), VarStatus::InactiveZero);
    assert!(!tree.eval_function(&[true, true, true]));
}

#[test]
fn budget_exhaustion_is_clean() {
    let h = c1();
    // initial tree: root + 2 checks = 3 nodes; every grow on C1 adds a
    // variable plus one check, so grows land on 5 and 7 nodes and the third
    // would need 9 > 7
    let mut tree = DecodingTree::new(&h, 1, 7).unwrap();
    for _ in 0..2 {
        let pid = tree.next_position_balanced().unwrap();
        tree.grow_leaf(pid).unwrap();
    }
    assert_eq!(tree.live_nodes(), 7);
    let pid = tree.next_position_balanced().unwrap();
    let pending_before = tree.pending_positions();
    let err = tree.grow_leaf(pid);
    assert!(matches!(err, Err(TreeError::BudgetExceeded { .. })));
    assert_eq!(tree.live_nodes(), 7);
    assert_eq!(tree.pending_positions(), pending_before);
    tree.validate_structure().unwrap();
    // the caller's move: finalize
    tree.finalize();
    assert_eq!(tree.pending_positions(), 0);
    assert!(tree.is_finalized());
}

#[test]
fn finalize_materializes_single_position() {
    let h = SparseParityCheck::from_rows(2, vec![vec![0, 1]]).unwrap();
    let mut tree = DecodingTree::new(&h, 0, 100).unwrap();
    assert_eq!(tree.pending_positions(), 1);
    let before = tree.live_nodes();
    tree.finalize();
    assert_eq!(tree.live_nodes(), before + 1);
    // the added leaf is an inactive-one variable without children
    let root = tree.root();
    let check = tree.node(root).children()[0];
    let leaf = tree.node(check).children()[0];
    let n = tree.node(leaf);
    assert_eq!(n.status(), VarStatus::InactiveOne);
    assert!(n.children().is_empty());
    // finalize twice is a no-op
    let dump = tree.dump();
    tree.finalize();
    assert_eq!(tree.dump(), dump);
}

#[test]
fn dump_golden() {
    let h = SparseParityCheck::from_rows(2, vec![vec![0, 1]]).unwrap();
    let mut tree = DecodingTree::new(&h, 0, 100).unwrap();
    assert_eq!(tree.dump(), "(v0:act (c0:open))");
    tree.finalize();
    assert_eq!(tree.dump(), "(v0:act (c0 (v1:one)))");
}

#[test]
fn grow_punctured_and_shortened_leaves() {
    let h = c1().with_punctured([0]).with_shortened_annotation([2]);
    let mut tree = DecodingTree::new(&h, 1, 10_000).unwrap();
    for _ in 0..8 {
        let Some(pid) = tree.next_position_balanced() else {
            break;
        };
        tree.grow_leaf(pid).unwrap();
        tree.validate_structure().unwrap();
    }
    // no active node ever carries obs 0 or 2
    assert!(!tree.active_index.contains_key(&0));
    assert!(!tree.active_index.contains_key(&2));
}
