use lazy_search_tree::{Answer, Config, Error, LazySearchTree, QueryKind, SplitMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact(seed: u64) -> Config {
    Config::new(SplitMode::ExactMedian, seed)
}

#[test]
fn construction_and_early_inserts_are_free() {
    let (mut t, _) = LazySearchTree::construct((0..1000).rev().map(|k| (k, ())), Config::default());
    assert_eq!(t.comparisons(), 0);
    for k in 0..1000 {
        t.insert(k * 3, ());
    }
    assert_eq!(t.comparisons(), 0);
    let s = t.stats();
    assert_eq!((s.n, s.gaps, s.intervals, s.b_bound), (2000, 1, 1, 0.0));
}

#[test]
fn empty_tree_errors() {
    let mut t: LazySearchTree<i32, ()> = LazySearchTree::new();
    assert_eq!(t.query(QueryKind::Select(1)), Err(Error::EmptyTree));
    assert_eq!(t.query(QueryKind::Minimum), Err(Error::EmptyTree));
    assert_eq!(t.query(QueryKind::Maximum), Err(Error::EmptyTree));
    let r = t.query(QueryKind::Rank(3)).unwrap();
    assert_eq!((r.answer, r.effective_rank), (Answer::Rank(1), 0));
    assert_eq!(t.query(QueryKind::Contains(3)).unwrap().answer, Answer::Element(None));
    let h = t.insert(1, ());
    assert_eq!(t.query(QueryKind::Select(2)), Err(Error::RankOutOfRange { rank: 2, len: 1 }));
    assert_eq!(t.query(QueryKind::Select(0)), Err(Error::RankOutOfRange { rank: 0, len: 1 }));
    t.delete(h).unwrap();
    assert_eq!(t.delete(h), Err(Error::StaleHandle));
    assert_eq!(t.change_key(h, 4), Err(Error::StaleHandle));
    assert_eq!(t.stats().gaps, 0);
}

#[test]
fn select_on_small_example() {
    let (mut t, _) = LazySearchTree::construct([(5, 'a'), (3, 'b'), (8, 'c'), (1, 'd')], exact(0));
    assert_eq!(t.select(2).unwrap().key, 3);
    assert_eq!(t.gap_sizes(), vec![2, 2]);
    assert_eq!(t.select(4).unwrap().key, 8);
    assert_eq!(t.min().unwrap().value, 'd');
}

#[test]
fn successor_of_max_is_absent() {
    let (mut t, _) = LazySearchTree::construct((1..=10).map(|k| (k, ())), exact(1));
    let r = t.query(QueryKind::Successor(10)).unwrap();
    assert_eq!((r.answer, r.effective_rank), (Answer::Element(None), 10));
    let r = t.query(QueryKind::Predecessor(1)).unwrap();
    assert_eq!((r.answer, r.effective_rank), (Answer::Element(None), 1));
}

#[test]
fn handles_survive_restructuring() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let items: Vec<(u32, usize)> = (0..500).map(|i| (rng.gen_range(0..100), i)).collect();
    let (mut t, hs) = LazySearchTree::construct(items.clone(), Config::default());
    for _ in 0..200 {
        t.select(rng.gen_range(1..=500)).unwrap();
    }
    for (h, (k, v)) in hs.iter().zip(&items) {
        assert_eq!(t.get(*h), Some((k, v)));
    }
    let (a, b) = t.split(137).unwrap();
    for h in &hs {
        let (ka, kb) = (a.get(*h), b.get(*h));
        assert!(ka.is_some() != kb.is_some());
    }
    let t = LazySearchTree::merge(a, b).unwrap();
    for (h, (k, v)) in hs.iter().zip(&items) {
        assert_eq!(t.get(*h), Some((k, v)));
    }
}

#[test]
fn merge_rejects_overlap_and_keeps_both_trees() {
    let (mut a, _) = LazySearchTree::construct((0..50).map(|k| (k, ())), exact(2));
    let (mut b, _) = LazySearchTree::construct((40..90).map(|k| (k, ())), exact(3));
    assert_eq!(a.append(&mut b), Err(Error::OrderViolation));
    assert_eq!((a.len(), b.len()), (50, 50));
    assert!(a.check_invariants().is_empty());
    assert!(b.check_invariants().is_empty());
}

#[test]
fn merge_after_split_needs_no_extra_queries() {
    let (t, _) = LazySearchTree::construct((0..1000).map(|k| (k, ())), exact(4));
    let (a, b) = t.split(300).unwrap();
    let q = a.stats().queries + b.stats().queries;
    let mut m = LazySearchTree::merge(a, b).unwrap();
    assert_eq!(m.stats().queries, q);
    assert!(m.check_invariants().is_empty());
    assert_eq!(m.select(300).unwrap().key, 299);
}

#[test]
fn split_and_merge_conserve_comparison_totals() {
    let (mut t, _) = LazySearchTree::construct((0..1000).rev().map(|k| (k, ())), Config::default());
    t.select(10).unwrap();
    let before = t.comparisons();
    let (a, b) = t.split(500).unwrap();
    let (sa, sb) = (a.stats(), b.stats());
    let total = sa.total_comparisons() + sb.total_comparisons();
    assert!(total > before, "the split query costs comparisons");
    assert_eq!(sa.parent_comparisons.min(sb.parent_comparisons), 0);
    assert_eq!(sa.parent_comparisons.max(sb.parent_comparisons), total);
    assert_eq!((a.comparisons(), b.comparisons()), (0, 0));
    // Merging compares the facing gap bounds once.
    let m = LazySearchTree::merge(a, b).unwrap();
    assert_eq!(m.stats().total_comparisons(), total + 1);
    assert_eq!(m.comparisons(), 0);
}

#[test]
fn merging_unqueried_trees_keeps_two_gaps() {
    let (a, _) = LazySearchTree::construct((0..50).rev().map(|k| (k, ())), exact(6));
    let (b, _) = LazySearchTree::construct((50..90).rev().map(|k| (k, ())), exact(7));
    let mut m = LazySearchTree::merge(a, b).unwrap();
    assert_eq!(m.gap_sizes(), vec![50, 40]);
    assert_eq!(m.stats().queries, 0);
    assert!(m.check_invariants().is_empty());
    m.insert(49, ());
    m.insert(50, ());
    assert_eq!(m.gap_sizes(), vec![51, 41]);
    assert_eq!(m.select(51).unwrap().key, 49);
    assert_eq!(m.select(52).unwrap().key, 50);
}

#[test]
fn merge_with_empty() {
    let (t, _) = LazySearchTree::construct((0..10).map(|k| (k, ())), exact(8));
    let e = LazySearchTree::new();
    let m = LazySearchTree::merge(e, t).unwrap();
    assert_eq!(m.len(), 10);
    let m = LazySearchTree::merge(m, LazySearchTree::new()).unwrap();
    assert_eq!(m.gap_sizes(), vec![10]);
}

#[test]
fn split_small_example() {
    let (t, _) = LazySearchTree::construct((1..=10).rev().map(|k| (k, ())), exact(9));
    let (mut a, mut b) = t.split(4).unwrap();
    assert_eq!((a.len(), b.len()), (4, 6));
    assert_eq!(b.min().unwrap().key, 5);
    assert_eq!(a.max().unwrap().key, 4);
    let (e, t) = LazySearchTree::merge(a, b).unwrap().split(0).unwrap();
    assert_eq!((e.len(), t.len()), (0, 10));
}

#[test]
fn change_key_moves_between_gaps() {
    let (mut t, hs) = LazySearchTree::construct((0..100).map(|k| (k, k)), exact(5));
    t.select(50).unwrap();
    t.change_key(hs[10], 1000).unwrap();
    assert_eq!(t.max().unwrap().value, 10);
    t.change_key(hs[10], -5).unwrap();
    assert_eq!(t.min().unwrap().value, 10);
    t.change_key(hs[20], 21).unwrap();
    assert!(t.check_invariants().is_empty());
    assert_eq!(t.query(QueryKind::Rank(21)).unwrap().answer, Answer::Rank(21));
}

#[test]
fn pop_min_drains_in_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut keys: Vec<i64> = (0..3000).map(|_| rng.gen_range(-500..500)).collect();
    let (mut t, _) = LazySearchTree::construct(keys.iter().map(|&k| (k, ())), Config::default());
    keys.sort();
    let mut got = Vec::new();
    while let Ok((k, ())) = t.pop_min() {
        got.push(k);
    }
    assert_eq!(got, keys);
    assert_eq!(t.stats().gaps, 0);
}

#[test]
fn repeated_query_costs_nothing_new() {
    let (mut t, _) = LazySearchTree::construct((0..4096).rev().map(|k| (k, ())), Config::default());
    t.select(1000).unwrap();
    let (c, chunks) = (t.comparisons(), t.stats().chunks_created);
    t.select(1000).unwrap();
    t.select(1000).unwrap();
    assert_eq!(t.stats().chunks_created, chunks);
    assert!(t.comparisons() - c <= 4 * 64, "{}", t.comparisons() - c);
}

#[test]
fn chunk_budget_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut t, mut hs) = LazySearchTree::construct((0..2000).map(|_| (rng.gen_range(0..1000u32), ())), Config::default());
    for _ in 0..3000 {
        match rng.gen_range(0..4) {
            0 => hs.push(t.insert(rng.gen_range(0..1000), ())),
            1 if !hs.is_empty() => {
                let i = rng.gen_range(0..hs.len());
                t.delete(hs.swap_remove(i)).unwrap();
            }
            _ if !t.is_empty() => {
                t.select(rng.gen_range(1..=t.len())).unwrap();
            }
            _ => {}
        }
    }
    let s = t.stats();
    assert!(s.chunks_created <= 6 * s.queries + s.base_chunks, "{s:?}");
}
