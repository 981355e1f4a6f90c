//! Browser bindings. Every method returns a JSON string describing the
//! tree afterwards, so the page only has to draw.

use lazy_search_tree::{preview_split, Config, LazySearchTree, SplitMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Gap {
    size: usize,
    intervals: Vec<usize>,
    left_side: usize,
    left_queried: bool,
    right_queried: bool,
}

#[derive(Serialize)]
struct View {
    n: usize,
    comparisons: u64,
    queries: u64,
    b: f64,
    gaps: Vec<Gap>,
    /// Key returned by the last operation, if any.
    answer: Option<i64>,
    /// Comparisons spent by the last operation.
    cost: u64,
    error: Option<String>,
}

#[derive(Serialize)]
struct Preview {
    left: Vec<Vec<i64>>,
    right: Vec<Vec<i64>>,
    answer: i64,
    comparisons: u64,
}

fn mode_of(exact: bool) -> SplitMode {
    if exact {
        SplitMode::ExactMedian
    } else {
        SplitMode::RandomizedPivot
    }
}

#[wasm_bindgen]
pub struct DemoTree {
    tree: LazySearchTree<i64, ()>,
    rng: ChaCha8Rng,
    key_range: i64,
}

#[wasm_bindgen]
impl DemoTree {
    #[wasm_bindgen(constructor)]
    pub fn new(exact: bool, seed: u64) -> DemoTree {
        DemoTree {
            tree: LazySearchTree::with_config(Config::new(mode_of(exact), seed)),
            rng: ChaCha8Rng::seed_from_u64(seed),
            key_range: 1000,
        }
    }

    fn view(&self, answer: Option<i64>, before: u64, error: Option<String>) -> String {
        let st = self.tree.stats();
        let gaps = self
            .tree
            .gap_views()
            .into_iter()
            .map(|g| Gap {
                size: g.size,
                intervals: g.intervals,
                left_side: g.left_side,
                left_queried: g.left_queried,
                right_queried: g.right_queried,
            })
            .collect();
        let v = View {
            n: st.n,
            comparisons: st.total_comparisons(),
            queries: st.queries,
            b: st.b_bound,
            gaps,
            answer,
            cost: st.total_comparisons() - before,
            error,
        };
        serde_json::to_string(&v).expect("plain data serializes")
    }

    pub fn state(&self) -> String {
        self.view(None, self.tree.stats().total_comparisons(), None)
    }

    /// Insert `count` random keys.
    pub fn insert_random(&mut self, count: u32) -> String {
        let before = self.tree.stats().total_comparisons();
        for _ in 0..count {
            let k = self.rng.gen_range(0..self.key_range);
            self.tree.insert(k, ());
        }
        self.view(None, before, None)
    }

    pub fn select(&mut self, rank: u32) -> String {
        let before = self.tree.stats().total_comparisons();
        match self.tree.select(rank as usize) {
            Ok(e) => self.view(Some(e.key), before, None),
            Err(e) => self.view(None, before, Some(e.to_string())),
        }
    }

    pub fn pop_min(&mut self) -> String {
        let before = self.tree.stats().total_comparisons();
        match self.tree.pop_min() {
            Ok((k, ())) => self.view(Some(k), before, None),
            Err(e) => self.view(None, before, Some(e.to_string())),
        }
    }
}

/// Split `n` distinct shuffled keys at inner rank `rank` and list the keys
/// of every resulting interval.
#[wasm_bindgen]
pub fn split_geometry(n: u32, rank: u32, exact: bool, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys: Vec<i64> = (0..n as i64).collect();
    rand::seq::SliceRandom::shuffle(keys.as_mut_slice(), &mut rng);
    match preview_split(&keys, rank as usize, mode_of(exact), seed) {
        Ok(p) => serde_json::to_string(&Preview {
            left: p.left,
            right: p.right,
            answer: p.answer,
            comparisons: p.comparisons,
        })
        .expect("plain data serializes"),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn select_reports_gaps() {
        let mut t = DemoTree::new(true, 1);
        let v: Value = serde_json::from_str(&t.insert_random(100)).unwrap();
        assert_eq!(v["n"], 100);
        assert_eq!(v["comparisons"], 0);
        let v: Value = serde_json::from_str(&t.select(40)).unwrap();
        let sizes: Vec<u64> = v["gaps"].as_array().unwrap().iter().map(|g| g["size"].as_u64().unwrap()).collect();
        assert_eq!(sizes, vec![40, 60]);
        assert!(v["answer"].is_i64());
        assert!(v["cost"].as_u64().unwrap() > 0);
    }

    #[test]
    fn errors_are_reported_not_thrown() {
        let mut t = DemoTree::new(false, 2);
        let v: Value = serde_json::from_str(&t.pop_min()).unwrap();
        assert!(v["error"].is_string());
        let v: Value = serde_json::from_str(&t.select(3)).unwrap();
        assert!(v["error"].is_string());
    }

    #[test]
    fn pop_min_is_sorted() {
        let mut t = DemoTree::new(false, 3);
        t.insert_random(50);
        let mut last = i64::MIN;
        for _ in 0..50 {
            let v: Value = serde_json::from_str(&t.pop_min()).unwrap();
            let k = v["answer"].as_i64().unwrap();
            assert!(k >= last);
            last = k;
        }
    }

    #[test]
    fn geometry_matches_exact_split() {
        let v: Value = serde_json::from_str(&split_geometry(19, 6, true, 0)).unwrap();
        let sizes = |side: &str| -> Vec<usize> { v[side].as_array().unwrap().iter().map(|i| i.as_array().unwrap().len()).collect() };
        assert_eq!(sizes("left"), vec![3, 2, 1]);
        assert_eq!(sizes("right"), vec![3, 3, 7]);
        assert_eq!(v["answer"], 5);
        let v: Value = serde_json::from_str(&split_geometry(5, 9, true, 0)).unwrap();
        assert!(v["error"].is_string());
    }
}
